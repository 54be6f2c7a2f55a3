use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::spec::ExperimentSpec;

/// Summary statistics of one metric across instances.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Stats {
    pub count: usize,
    pub mean: f64,
    pub median: f64,
    pub p95: f64,
    pub min: f64,
    pub max: f64,
}

impl Stats {
    /// `None` for an empty sample. NaNs are skipped.
    pub fn of(values: &[f64]) -> Option<Self> {
        let mut v: Vec<f64> = values.iter().copied().filter(|x| !x.is_nan()).collect();
        if v.is_empty() {
            return None;
        }
        v.sort_by(f64::total_cmp);
        let n = v.len();
        let rank = |q: f64| v[((q * n as f64).ceil() as usize).clamp(1, n) - 1];
        Some(Self {
            count: n,
            mean: v.iter().sum::<f64>() / n as f64,
            median: if n % 2 == 1 { v[n / 2] } else { 0.5 * (v[n / 2 - 1] + v[n / 2]) },
            p95: rank(0.95),
            min: v[0],
            max: v[n - 1],
        })
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct InstanceRecord {
    pub index: usize,
    pub metrics: BTreeMap<String, f64>,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub curves: BTreeMap<String, Vec<f64>>,
}

impl InstanceRecord {
    pub fn new(index: usize) -> Self {
        Self {
            index,
            ..Default::default()
        }
    }

    pub fn metric(mut self, name: &str, value: f64) -> Self {
        self.metrics.insert(name.to_string(), value);
        self
    }

    pub fn curve(mut self, name: &str, values: Vec<f64>) -> Self {
        self.curves.insert(name.to_string(), values);
        self
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub tool: String,
    pub version: String,
    pub spec: ExperimentSpec,
    pub instances: Vec<InstanceRecord>,
    /// Per-metric statistics over instances.
    pub aggregates: BTreeMap<String, Stats>,
    /// Derived scalars such as rates and fractions.
    pub summary: BTreeMap<String, f64>,
    pub notes: Vec<String>,
    /// Wall-clock statistics in seconds. Not reproducible; excluded from
    /// [`Report::deterministic_json`].
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub timings: BTreeMap<String, Stats>,
}

impl Report {
    pub(crate) fn new(spec: &ExperimentSpec, instances: Vec<InstanceRecord>) -> Self {
        let mut names: Vec<&String> = instances.iter().flat_map(|r| r.metrics.keys()).collect();
        names.sort();
        names.dedup();
        let aggregates = names
            .into_iter()
            .filter_map(|name| {
                let v: Vec<f64> = instances.iter().filter_map(|r| r.metrics.get(name).copied()).collect();
                Stats::of(&v).map(|s| (name.clone(), s))
            })
            .collect();
        Self {
            tool: env!("CARGO_PKG_NAME").to_string(),
            version: env!("CARGO_PKG_VERSION").to_string(),
            spec: spec.clone(),
            instances,
            aggregates,
            summary: BTreeMap::new(),
            notes: Vec::new(),
            timings: BTreeMap::new(),
        }
    }

    /// Fraction of instances whose metric satisfies `pred` (instances lacking it excluded).
    pub fn fraction(&self, metric: &str, pred: impl Fn(f64) -> bool) -> f64 {
        let v: Vec<f64> = self.instances.iter().filter_map(|r| r.metrics.get(metric).copied()).collect();
        if v.is_empty() {
            return f64::NAN;
        }
        v.iter().filter(|x| pred(**x)).count() as f64 / v.len() as f64
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    /// The report without timings: identical for identical specs.
    pub fn deterministic_json(&self) -> String {
        let mut r = self.clone();
        r.timings.clear();
        r.to_json()
    }

    /// Long-format table: `instance,name,step,value`. Scalar metrics leave
    /// `step` empty; curves list one row per step. Summary rows use
    /// instance `all`.
    pub fn to_csv(&self) -> String {
        let mut s = String::from("instance,name,step,value\n");
        for r in &self.instances {
            for (k, v) in &r.metrics {
                s.push_str(&format!("{},{},,{:e}\n", r.index, k, v));
            }
            for (k, curve) in &r.curves {
                for (i, v) in curve.iter().enumerate() {
                    s.push_str(&format!("{},{},{},{:e}\n", r.index, k, i, v));
                }
            }
        }
        for (k, v) in &self.summary {
            s.push_str(&format!("all,{k},,{v:e}\n"));
        }
        for (k, st) in &self.timings {
            s.push_str(&format!("all,time.{k}.median,,{:e}\n", st.median));
        }
        s
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn stats_of_small_sample() {
        let s = Stats::of(&[3.0, 1.0, 2.0, 4.0]).unwrap();
        assert_eq!(s.median, 2.5);
        assert_eq!(s.min, 1.0);
        assert_eq!(s.max, 4.0);
        assert_eq!(s.p95, 4.0);
        assert_eq!(s.mean, 2.5);
        assert!(Stats::of(&[]).is_none());
    }
}
