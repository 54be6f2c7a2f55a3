use crate::error::{Error, Result};
use crate::rotation::Vec3;

/// Topology and rest-pose geometry of an articulated skeleton.
///
/// Joint 0 is the root; every other joint's parent has a smaller index.
/// Joints that are neither the root nor leaves are *internal* and carry one
/// swing angle and one twist angle each. An internal joint's bone direction
/// is the rest offset of its designated child, the first child in index order.
#[derive(Debug, Clone, PartialEq)]
pub struct KinematicTree {
    parent: Vec<Option<usize>>,
    rest_offset: Vec<Vec3>,
    names: Vec<String>,
    children: Vec<Vec<usize>>,
    internal: Vec<usize>,
    internal_index: Vec<Option<usize>>,
    // (column, internal joint, strict descendant)
    influence: Vec<(usize, usize, usize)>,
}

impl KinematicTree {
    /// `rest_offset[0]` is ignored (the root has no parent) and stored as zero.
    pub fn new(parent: Vec<Option<usize>>, rest_offset: Vec<Vec3>, names: Vec<String>) -> Result<Self> {
        let n = parent.len();
        if n == 0 {
            return Err(Error::InvalidTree("tree has no joints".into()));
        }
        if rest_offset.len() != n || names.len() != n {
            return Err(Error::InvalidTree(format!(
                "{} parents, {} rest offsets, {} names",
                n,
                rest_offset.len(),
                names.len()
            )));
        }
        let roots = parent.iter().filter(|p| p.is_none()).count();
        if roots != 1 || parent[0].is_some() {
            return Err(Error::InvalidTree(
                "exactly one root is required and it must be joint 0".into(),
            ));
        }
        for (i, p) in parent.iter().enumerate().skip(1) {
            let p = p.expect("single root checked above");
            if p >= i {
                return Err(Error::InvalidTree(format!(
                    "joint {i} has parent {p}; parents must precede children"
                )));
            }
            let t = rest_offset[i];
            if !t.iter().all(|v| v.is_finite()) {
                return Err(Error::InvalidTree(format!("joint {i} has a non-finite rest offset")));
            }
            if t.norm() == 0.0 {
                return Err(Error::InvalidTree(format!("joint {i} has a zero rest offset")));
            }
        }
        let mut rest_offset = rest_offset;
        rest_offset[0] = Vec3::zeros();

        let mut children = vec![Vec::new(); n];
        for (i, p) in parent.iter().enumerate().skip(1) {
            children[p.unwrap()].push(i);
        }
        let internal: Vec<usize> = (1..n).filter(|&i| !children[i].is_empty()).collect();
        let mut internal_index = vec![None; n];
        for (c, &j) in internal.iter().enumerate() {
            internal_index[j] = Some(c);
        }
        let mut influence = Vec::new();
        for d in 1..n {
            let mut a = parent[d];
            while let Some(j) = a {
                if let Some(c) = internal_index[j] {
                    influence.push((c, j, d));
                }
                a = parent[j];
            }
        }
        influence.sort_unstable();

        Ok(Self {
            parent,
            rest_offset,
            names,
            children,
            internal,
            internal_index,
            influence,
        })
    }

    /// Same topology with new rest offsets.
    pub fn with_rest_offsets(&self, rest_offset: Vec<Vec3>) -> Result<Self> {
        Self::new(self.parent.clone(), rest_offset, self.names.clone())
    }

    /// Every rest offset multiplied by `s`.
    pub fn scaled(&self, s: f64) -> Result<Self> {
        self.with_rest_offsets(self.rest_offset.iter().map(|t| t * s).collect())
    }

    pub fn joint_count(&self) -> usize {
        self.parent.len()
    }

    pub fn internal_count(&self) -> usize {
        self.internal.len()
    }

    pub fn parent(&self, joint: usize) -> Option<usize> {
        self.parent[joint]
    }

    pub fn parents(&self) -> &[Option<usize>] {
        &self.parent
    }

    pub fn rest_offset(&self, joint: usize) -> Vec3 {
        self.rest_offset[joint]
    }

    pub fn rest_offsets(&self) -> &[Vec3] {
        &self.rest_offset
    }

    pub fn name(&self, joint: usize) -> &str {
        &self.names[joint]
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn children(&self, joint: usize) -> &[usize] {
        &self.children[joint]
    }

    pub fn designated_child(&self, joint: usize) -> Option<usize> {
        self.children[joint].first().copied()
    }

    /// Internal joints in index order; position in this list is the column index.
    pub fn internal_joints(&self) -> &[usize] {
        &self.internal
    }

    pub fn internal_index(&self, joint: usize) -> Option<usize> {
        self.internal_index[joint]
    }

    /// Unit rest direction of the bone from `joint` to its designated child.
    pub fn bone_direction(&self, joint: usize) -> Option<Vec3> {
        self.designated_child(joint)
            .map(|c| self.rest_offset[c].normalize())
    }

    /// True when `ancestor` lies on the path from `joint` to the root (inclusive).
    pub fn is_ancestor_or_self(&self, ancestor: usize, joint: usize) -> bool {
        let mut j = Some(joint);
        while let Some(k) = j {
            if k == ancestor {
                return true;
            }
            j = self.parent[k];
        }
        false
    }

    /// `(column, internal joint, descendant)` for every strict descendant of
    /// every internal joint, sorted by column. These are the structurally
    /// non-zero 3-blocks of the swing Jacobian.
    pub fn influence_pairs(&self) -> &[(usize, usize, usize)] {
        &self.influence
    }

    /// Rest-pose joint positions with the root at the origin.
    pub fn rest_positions(&self) -> Vec<Vec3> {
        let mut q = vec![Vec3::zeros(); self.joint_count()];
        for i in 1..self.joint_count() {
            q[i] = q[self.parent[i].unwrap()] + self.rest_offset[i];
        }
        q
    }
}
