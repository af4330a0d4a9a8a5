//! Flat `key = value` simulation grid configuration.
//!
//! ```text
//! # main grid
//! n = 500
//! m_list = 50, 100, 500
//! d_min = 2
//! d_max = 25
//! G = 10
//! sigma2_e_list = 0
//! reps = 2000
//! alpha = 0.05
//! seed = 20210601
//! grouping_method = balanced
//! ```
//!
//! Blank lines and `#` comments are ignored. Unknown or malformed keys are
//! collected and reported together.

use std::collections::BTreeMap;

use goflab_core::grouping::GroupingMethod;
use goflab_core::simulate::Scenario;

use crate::error::{CliError, Result};

pub const KEYS: [&str; 10] = [
    "n",
    "m_list",
    "d_min",
    "d_max",
    "G",
    "sigma2_e_list",
    "reps",
    "alpha",
    "seed",
    "grouping_method",
];

#[derive(Debug, Clone, PartialEq)]
pub struct GridConfig {
    pub n: usize,
    pub m_list: Vec<usize>,
    pub d_min: usize,
    pub d_max: usize,
    pub groups: usize,
    pub sigma2_e_list: Vec<f64>,
    pub reps: usize,
    pub alpha: f64,
    pub seed: Option<u64>,
    pub grouping_method: GroupingMethod,
}

impl Default for GridConfig {
    fn default() -> Self {
        Self {
            n: 500,
            m_list: vec![50, 100, 500],
            d_min: 2,
            d_max: 25,
            groups: 10,
            sigma2_e_list: vec![0.0],
            reps: 2000,
            alpha: 0.05,
            seed: None,
            grouping_method: GroupingMethod::Balanced,
        }
    }
}

fn parse_list<T: std::str::FromStr>(value: &str) -> Option<Vec<T>> {
    let items: Option<Vec<T>> = value
        .split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|s| s.parse().ok())
        .collect();
    items.filter(|v| !v.is_empty())
}

impl GridConfig {
    pub fn parse(text: &str) -> Result<Self> {
        let mut entries: BTreeMap<String, (usize, String)> = BTreeMap::new();
        let mut problems = Vec::new();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let Some((key, value)) = line.split_once('=') else {
                problems.push(format!(
                    "line {}: expected key = value, got {line:?}",
                    lineno + 1
                ));
                continue;
            };
            let key = key.trim();
            if !KEYS.contains(&key) {
                problems.push(format!("line {}: unknown key {key:?}", lineno + 1));
                continue;
            }
            if entries
                .insert(key.to_string(), (lineno + 1, value.trim().to_string()))
                .is_some()
            {
                problems.push(format!("line {}: duplicate key {key:?}", lineno + 1));
            }
        }

        let mut cfg = GridConfig::default();
        for (key, (line, value)) in &entries {
            let bad = || format!("line {line}: invalid value {value:?} for {key}");
            let ok = match key.as_str() {
                "n" => value.parse().map(|v| cfg.n = v).is_ok(),
                "m_list" => parse_list(value).map(|v| cfg.m_list = v).is_some(),
                "d_min" => value.parse().map(|v| cfg.d_min = v).is_ok(),
                "d_max" => value.parse().map(|v| cfg.d_max = v).is_ok(),
                "G" => value.parse().map(|v| cfg.groups = v).is_ok(),
                "sigma2_e_list" => parse_list(value).map(|v| cfg.sigma2_e_list = v).is_some(),
                "reps" => value.parse().map(|v| cfg.reps = v).is_ok(),
                "alpha" => value.parse().map(|v| cfg.alpha = v).is_ok(),
                "seed" => value.parse().map(|v| cfg.seed = Some(v)).is_ok(),
                "grouping_method" => value.parse().map(|v| cfg.grouping_method = v).is_ok(),
                _ => unreachable!("keys are filtered above"),
            };
            if !ok {
                problems.push(bad());
            }
        }
        if cfg.d_min > cfg.d_max {
            problems.push(format!(
                "d_min = {} exceeds d_max = {}",
                cfg.d_min, cfg.d_max
            ));
        }
        if problems.is_empty() {
            Ok(cfg)
        } else {
            Err(CliError::Config(problems))
        }
    }

    /// Scenarios ordered by `m`, then `sigma2_e`, then `d`. Every scenario is
    /// validated; all violations are reported at once.
    pub fn scenarios(&self, seed: u64) -> Result<Vec<Scenario>> {
        let mut out = Vec::new();
        let mut problems = Vec::new();
        for &m in &self.m_list {
            for &sigma2_e in &self.sigma2_e_list {
                for d in self.d_min..=self.d_max {
                    let s = Scenario {
                        n: self.n,
                        m,
                        d,
                        groups: self.groups,
                        sigma2_e,
                        reps: self.reps,
                        alpha: self.alpha,
                        seed,
                        grouping_method: self.grouping_method,
                        ..Scenario::default()
                    };
                    match s.validate() {
                        Ok(()) => out.push(s),
                        Err(e) => {
                            let msg = format!("m={m} sigma2_e={sigma2_e} d={d}: {e}");
                            if !problems.contains(&msg) {
                                problems.push(msg);
                            }
                        }
                    }
                }
            }
        }
        if problems.is_empty() {
            Ok(out)
        } else {
            Err(CliError::Config(problems))
        }
    }
}
