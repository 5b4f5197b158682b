use std::cmp::Ordering;
use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use crate::analysis::Setting;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Metric {
    Err,
    BiasSq,
    Variance,
    NmBiasSq,
    AvgBiasSq,
    TrainErr,
    ExcessErr,
}

impl Metric {
    pub const ALL: [Metric; 7] = [
        Metric::Err,
        Metric::BiasSq,
        Metric::Variance,
        Metric::NmBiasSq,
        Metric::AvgBiasSq,
        Metric::TrainErr,
        Metric::ExcessErr,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            Metric::Err => "err",
            Metric::BiasSq => "bias_sq",
            Metric::Variance => "variance",
            Metric::NmBiasSq => "nm_bias_sq",
            Metric::AvgBiasSq => "avg_bias_sq",
            Metric::TrainErr => "train_err",
            Metric::ExcessErr => "excess_err",
        }
    }
}

impl fmt::Display for Metric {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Metric {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Metric::ALL
            .into_iter()
            .find(|m| m.as_str() == s)
            .ok_or_else(|| Error::param("metric", format!("unknown metric `{s}`")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Row {
    pub sweep_value: f64,
    pub setting: Setting,
    pub metric: Metric,
    pub value: f64,
    pub replication: u32,
}

impl Row {
    fn key_cmp(&self, other: &Row) -> Ordering {
        self.sweep_value
            .total_cmp(&other.sweep_value)
            .then(self.setting.cmp(&other.setting))
            .then(self.metric.cmp(&other.metric))
            .then(self.replication.cmp(&other.replication))
    }

    /// Bitwise equality, so NaN entries compare equal to themselves.
    pub fn same_bits(&self, other: &Row) -> bool {
        self.sweep_value.to_bits() == other.sweep_value.to_bits()
            && self.setting == other.setting
            && self.metric == other.metric
            && self.value.to_bits() == other.value.to_bits()
            && self.replication == other.replication
    }
}

/// Long-format results: one row per (sweep value, setting, metric,
/// replication), plus free-form `key = value` metadata.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ExperimentTable {
    pub rows: Vec<Row>,
    pub metadata: Vec<(String, String)>,
}

impl ExperimentTable {
    pub fn new(metadata: Vec<(String, String)>) -> Self {
        ExperimentTable {
            rows: Vec::new(),
            metadata,
        }
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn meta(&self, key: &str) -> Option<&str> {
        self.metadata.iter().find(|(k, _)| k == key).map(|(_, v)| v.as_str())
    }

    pub fn set_meta(&mut self, key: &str, value: impl Into<String>) {
        let value = value.into();
        match self.metadata.iter_mut().find(|(k, _)| k == key) {
            Some(slot) => slot.1 = value,
            None => self.metadata.push((key.to_string(), value)),
        }
    }

    /// Sorts rows by (sweep_value, setting, metric, replication).
    pub fn sort(&mut self) {
        self.rows.sort_by(Row::key_cmp);
    }

    /// Fails on the first duplicated key.
    pub fn check_unique_keys(&self) -> Result<()> {
        let mut keys: Vec<&Row> = self.rows.iter().collect();
        keys.sort_by(|a, b| a.key_cmp(b));
        for pair in keys.windows(2) {
            if pair[0].key_cmp(pair[1]) == Ordering::Equal {
                let r = pair[0];
                return Err(Error::param(
                    "table",
                    format!(
                        "duplicate key ({}, {}, {}, {})",
                        r.sweep_value,
                        r.setting.as_str(),
                        r.metric,
                        r.replication
                    ),
                ));
            }
        }
        Ok(())
    }

    pub fn value(&self, sweep_value: f64, setting: Setting, metric: Metric, replication: u32) -> Option<f64> {
        self.rows
            .iter()
            .find(|r| {
                r.sweep_value == sweep_value
                    && r.setting == setting
                    && r.metric == metric
                    && r.replication == replication
            })
            .map(|r| r.value)
    }

    /// `(sweep_value, value)` pairs for one series, ordered by sweep value then
    /// replication.
    pub fn series(&self, setting: Setting, metric: Metric) -> Vec<(f64, f64)> {
        let mut rows: Vec<&Row> = self
            .rows
            .iter()
            .filter(|r| r.setting == setting && r.metric == metric)
            .collect();
        rows.sort_by(|a, b| a.key_cmp(b));
        rows.into_iter().map(|r| (r.sweep_value, r.value)).collect()
    }

    /// Distinct sweep values in increasing order.
    pub fn sweep_values(&self) -> Vec<f64> {
        let mut v: Vec<f64> = self.rows.iter().map(|r| r.sweep_value).collect();
        v.sort_by(f64::total_cmp);
        v.dedup_by(|a, b| a.to_bits() == b.to_bits());
        v
    }

    pub fn replications(&self) -> Vec<u32> {
        let mut v: Vec<u32> = self.rows.iter().map(|r| r.replication).collect();
        v.sort_unstable();
        v.dedup();
        v
    }

    /// Per-replication values of one series at one sweep value, ordered by
    /// replication.
    pub fn replicates(&self, sweep_value: f64, setting: Setting, metric: Metric) -> Vec<f64> {
        let mut rows: Vec<&Row> = self
            .rows
            .iter()
            .filter(|r| r.sweep_value == sweep_value && r.setting == setting && r.metric == metric)
            .collect();
        rows.sort_by_key(|r| r.replication);
        rows.into_iter().map(|r| r.value).collect()
    }

    pub fn same_bits(&self, other: &ExperimentTable) -> bool {
        self.metadata == other.metadata
            && self.rows.len() == other.rows.len()
            && self.rows.iter().zip(&other.rows).all(|(a, b)| a.same_bits(b))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Statistic {
    Mean,
    /// Sample standard deviation over replications divided by √R; NaN when a
    /// group holds a single replication.
    Stderr,
}

impl Statistic {
    pub fn as_str(&self) -> &'static str {
        match self {
            Statistic::Mean => "mean",
            Statistic::Stderr => "stderr",
        }
    }
}

#[derive(Debug, Clone, Copy)]
struct SweepKey(f64);

impl PartialEq for SweepKey {
    fn eq(&self, other: &Self) -> bool {
        self.0.total_cmp(&other.0) == Ordering::Equal
    }
}
impl Eq for SweepKey {}
impl PartialOrd for SweepKey {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for SweepKey {
    fn cmp(&self, other: &Self) -> Ordering {
        self.0.total_cmp(&other.0)
    }
}

pub fn mean(values: &[f64]) -> f64 {
    values.iter().sum::<f64>() / values.len() as f64
}

/// Sample standard deviation divided by √len; NaN for fewer than two values.
pub fn stderr(values: &[f64]) -> f64 {
    let r = values.len();
    if r < 2 {
        return f64::NAN;
    }
    let mu = mean(values);
    let ss: f64 = values.iter().map(|v| (v - mu) * (v - mu)).sum();
    (ss / (r - 1) as f64 / r as f64).sqrt()
}

/// Collapses the replication dimension. Each output row carries
/// `replication = 0`; values are summed in replication order, so the result
/// depends only on the input rows.
pub fn aggregate(table: &ExperimentTable, statistic: Statistic) -> Result<ExperimentTable> {
    if table.is_empty() {
        return Err(Error::EmptyGroup("cannot aggregate an empty table".into()));
    }
    let mut groups: BTreeMap<(SweepKey, Setting, Metric), Vec<(u32, f64)>> = BTreeMap::new();
    for r in &table.rows {
        groups
            .entry((SweepKey(r.sweep_value), r.setting, r.metric))
            .or_default()
            .push((r.replication, r.value));
    }
    let mut out = ExperimentTable::new(table.metadata.clone());
    out.set_meta("statistic", statistic.as_str());
    out.set_meta("replications_aggregated", table.replications().len().to_string());
    for ((sweep, setting, metric), mut values) in groups {
        values.sort_by_key(|&(rep, _)| rep);
        let values: Vec<f64> = values.into_iter().map(|(_, v)| v).collect();
        let value = match statistic {
            Statistic::Mean => mean(&values),
            Statistic::Stderr => stderr(&values),
        };
        out.rows.push(Row {
            sweep_value: sweep.0,
            setting,
            metric,
            value,
            replication: 0,
        });
    }
    Ok(out)
}
