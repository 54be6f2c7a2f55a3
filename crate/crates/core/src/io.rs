//! Versioned JSON documents: skeletons, target frames, solver configs.

use std::path::Path;

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kinematics::{JointTargets, KinematicTree};
use crate::rotation::Vec3;

pub const FORMAT_VERSION: u32 = 1;

const BUNDLED_SKELETON: &str = include_str!("../assets/skeleton24.json");

/// The bundled 24-joint body skeleton.
pub fn bundled_skeleton() -> KinematicTree {
    parse_skeleton(BUNDLED_SKELETON, "<bundled skeleton>").expect("bundled skeleton is valid")
}

pub fn bundled_skeleton_json() -> &'static str {
    BUNDLED_SKELETON
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct SkeletonDoc {
    version: u32,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    notes: Option<String>,
    joints: Vec<JointDoc>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct JointDoc {
    name: String,
    parent: Option<i64>,
    rest_offset: [f64; 3],
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct TargetsDoc {
    version: u32,
    frames: Vec<FrameDoc>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct FrameDoc {
    positions: Vec<[f64; 3]>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    confidence: Option<Vec<f64>>,
}

/// Deserialize `text`, reporting syntax and type errors by line and column.
pub fn parse_json<T: DeserializeOwned>(text: &str, source: &str) -> Result<T> {
    serde_json::from_str(text).map_err(|e| Error::Parse {
        path: source.to_string(),
        line: e.line(),
        column: e.column(),
        message: e.to_string(),
    })
}

pub fn read_text(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })
}

pub fn write_text(path: &Path, text: &str) -> Result<()> {
    std::fs::write(path, text).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })
}

fn field(source: &str, field: impl Into<String>, message: impl Into<String>) -> Error {
    Error::Field {
        path: source.to_string(),
        field: field.into(),
        message: message.into(),
    }
}

fn check_version(source: &str, version: u32) -> Result<()> {
    if version != FORMAT_VERSION {
        return Err(field(source, "version", format!("unsupported version {version}, expected {FORMAT_VERSION}")));
    }
    Ok(())
}

pub fn parse_skeleton(text: &str, source: &str) -> Result<KinematicTree> {
    let doc: SkeletonDoc = parse_json(text, source)?;
    check_version(source, doc.version)?;
    if doc.joints.is_empty() {
        return Err(field(source, "joints", "no joints"));
    }
    let mut parent = Vec::with_capacity(doc.joints.len());
    for (i, j) in doc.joints.iter().enumerate() {
        let p = match j.parent {
            None | Some(-1) => None,
            Some(p) if p >= 0 && (p as usize) < i => Some(p as usize),
            Some(p) => {
                return Err(field(
                    source,
                    format!("joints[{i}].parent"),
                    format!("parent {p} must be null or an index below {i}"),
                ))
            }
        };
        if i == 0 && p.is_some() {
            return Err(field(source, "joints[0].parent", "the first joint must be the root (null parent)"));
        }
        if i > 0 && p.is_none() {
            return Err(field(source, format!("joints[{i}].parent"), "only the first joint may be a root"));
        }
        if i > 0 && j.rest_offset == [0.0; 3] {
            return Err(field(source, format!("joints[{i}].rest_offset"), "zero offset"));
        }
        parent.push(p);
    }
    let offsets = doc.joints.iter().map(|j| Vec3::from(j.rest_offset)).collect();
    let names = doc.joints.iter().map(|j| j.name.clone()).collect();
    KinematicTree::new(parent, offsets, names).map_err(|e| field(source, "joints", e.to_string()))
}

pub fn load_skeleton(path: &Path) -> Result<KinematicTree> {
    parse_skeleton(&read_text(path)?, &path.display().to_string())
}

pub fn skeleton_to_json(tree: &KinematicTree) -> String {
    let doc = SkeletonDoc {
        version: FORMAT_VERSION,
        notes: None,
        joints: (0..tree.joint_count())
            .map(|i| JointDoc {
                name: tree.name(i).to_string(),
                parent: tree.parent(i).map(|p| p as i64),
                rest_offset: tree.rest_offset(i).into(),
            })
            .collect(),
    };
    serde_json::to_string_pretty(&doc).expect("skeleton serializes")
}

/// Parse every frame of a targets document.
pub fn parse_targets(text: &str, source: &str) -> Result<Vec<JointTargets>> {
    let doc: TargetsDoc = parse_json(text, source)?;
    check_version(source, doc.version)?;
    doc.frames
        .into_iter()
        .enumerate()
        .map(|(k, f)| {
            let positions: Vec<Vec3> = f.positions.into_iter().map(Vec3::from).collect();
            let confidence = f.confidence.unwrap_or_else(|| vec![1.0; positions.len()]);
            JointTargets::with_confidence(positions, confidence)
                .map_err(|e| field(source, format!("frames[{k}]"), e.to_string()))
        })
        .collect()
}

pub fn load_targets(path: &Path) -> Result<Vec<JointTargets>> {
    parse_targets(&read_text(path)?, &path.display().to_string())
}

pub fn targets_to_json(frames: &[JointTargets]) -> String {
    let doc = TargetsDoc {
        version: FORMAT_VERSION,
        frames: frames
            .iter()
            .map(|t| FrameDoc {
                positions: t.positions().iter().map(|p| (*p).into()).collect(),
                confidence: Some(t.confidence().to_vec()),
            })
            .collect(),
    };
    serde_json::to_string_pretty(&doc).expect("targets serialize")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bundled_skeleton_has_expected_shape() {
        let t = bundled_skeleton();
        assert_eq!(t.joint_count(), 24);
        assert_eq!(t.internal_count(), 18);
        assert_eq!(t.designated_child(9), Some(12));
    }

    #[test]
    fn syntax_error_reports_line() {
        let err = parse_skeleton("{\n  \"version\": 1,\n  \"joints\": [ oops ]\n}", "s.json").unwrap_err();
        match err {
            Error::Parse { line, .. } => assert_eq!(line, 3),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn bad_parent_reports_field() {
        let text = r#"{"version":1,"joints":[
            {"name":"a","parent":null,"rest_offset":[0,0,0]},
            {"name":"b","parent":5,"rest_offset":[1,0,0]}]}"#;
        match parse_skeleton(text, "s.json").unwrap_err() {
            Error::Field { field, .. } => assert_eq!(field, "joints[1].parent"),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn skeleton_round_trips() {
        let t = bundled_skeleton();
        let back = parse_skeleton(&skeleton_to_json(&t), "rt").unwrap();
        assert_eq!(t, back);
    }

    #[test]
    fn targets_round_trip() {
        let frame = JointTargets::with_confidence(vec![Vec3::new(1.0, 2.0, 3.0)], vec![0.5]).unwrap();
        let back = parse_targets(&targets_to_json(&[frame.clone()]), "rt").unwrap();
        assert_eq!(back, vec![frame]);
    }
}
