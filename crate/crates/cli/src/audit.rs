//! Full audit of one instance: every metric, its witness and the membership flags.

use std::time::Instant;

use mcal_core::distances::{dcma_with, dce_with, dimc_with, dmc_lowdeg_bruteforce_with, dmc_with, generated_partition, wdmc_with};
use mcal_core::enumerate::{is_calibrated, is_degree_r_multicalibrated, is_multiaccurate, is_multicalibrated};
use mcal_core::multiaccuracy::{dma, wdma};
use mcal_core::rational::{format_rational, render_decimal};
use mcal_core::{l1_distance, Budget, Error, Instance, PredictorVec, Rational};
use rayon::prelude::*;
use serde::Serialize;

/// A rational with its 30-digit decimal rendering. The decimal is for reading only.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Exact {
    pub exact: String,
    pub decimal: String,
}

impl From<&Rational> for Exact {
    fn from(r: &Rational) -> Self {
        Self { exact: format_rational(r), decimal: render_decimal(r) }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum AuditMetric {
    Wdmc,
    Dmc,
    Dimc,
    Wdma,
    Dma,
    Dcma,
    Lowdeg,
}

impl AuditMetric {
    pub const DEFAULT: [AuditMetric; 5] =
        [AuditMetric::Wdmc, AuditMetric::Dmc, AuditMetric::Dimc, AuditMetric::Wdma, AuditMetric::Dma];
}

#[derive(Clone, Debug, Serialize)]
pub struct MetricEntry {
    pub metric: AuditMetric,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub value: Option<Exact>,
    /// Index of the worst group, for the worst-group metrics.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub group: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub witness: Option<Vec<String>>,
    /// Whether the witness passed an independent membership check.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub witness_verified: Option<bool>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub millis: Option<u128>,
}

#[derive(Clone, Debug, Serialize)]
pub struct GroupEntry {
    pub group: String,
    pub calibrated: bool,
    pub dce: Option<Exact>,
}

#[derive(Clone, Debug, Serialize)]
pub struct Membership {
    pub multicalibrated: bool,
    pub multiaccurate: bool,
    /// `degree[r-1]` is degree-`r` multicalibration.
    pub degree: Vec<bool>,
}

#[derive(Clone, Debug, Serialize)]
pub struct AuditReport {
    pub n: usize,
    pub l1_to_ground_truth: Exact,
    pub groups: Vec<GroupEntry>,
    pub membership: Membership,
    pub metrics: Vec<MetricEntry>,
    pub refused: bool,
}

pub struct AuditOptions {
    pub metrics: Vec<AuditMetric>,
    pub max_degree: u32,
    pub lowdeg_grid: u32,
    pub timing: bool,
    pub budget: Budget,
}

impl Default for AuditOptions {
    fn default() -> Self {
        Self { metrics: AuditMetric::DEFAULT.to_vec(), max_degree: 2, lowdeg_grid: 20, timing: false, budget: Budget::default() }
    }
}

struct Computed {
    value: Rational,
    group: Option<usize>,
    witness: Option<PredictorVec>,
    verified: Option<bool>,
    note: Option<String>,
}

fn compute(m: AuditMetric, inst: &Instance, opts: &AuditOptions) -> mcal_core::Result<Computed> {
    let b = &opts.budget;
    let plain = |value, witness: PredictorVec, verified| Computed {
        value,
        group: None,
        witness: Some(witness),
        verified: Some(verified),
        note: None,
    };
    Ok(match m {
        AuditMetric::Wdmc => {
            let w = wdmc_with(inst, b)?;
            Computed { value: w.value, group: Some(w.group), witness: None, verified: None, note: None }
        }
        AuditMetric::Wdma => {
            let w = wdma(inst)?;
            Computed { value: w.value, group: Some(w.group), witness: None, verified: None, note: None }
        }
        AuditMetric::Dmc => {
            let r = dmc_with(inst, b)?;
            let ok = is_multicalibrated(&r.witness, inst);
            plain(r.value, r.witness, ok)
        }
        AuditMetric::Dimc => {
            let r = dimc_with(inst, b)?;
            let cells = generated_partition(inst.groups(), inst.n())?;
            let ok = cells.cells.iter().all(|c| is_calibrated(&r.witness, inst, c));
            plain(r.value, r.witness, ok)
        }
        AuditMetric::Dma => {
            let r = dma(inst)?;
            let ok = is_multiaccurate(&r.witness, inst);
            plain(r.value, r.witness, ok)
        }
        AuditMetric::Dcma => {
            let r = dcma_with(inst, b)?;
            let full = mcal_core::Subgroup::full(inst.n());
            let ok = is_multiaccurate(&r.witness, inst) && is_calibrated(&r.witness, inst, &full);
            plain(r.value, r.witness, ok)
        }
        AuditMetric::Lowdeg => {
            let r = dmc_lowdeg_bruteforce_with(inst, opts.max_degree, opts.lowdeg_grid, b)?;
            let mut c = plain(r.value.clone(), r.witness.clone(), true);
            c.verified = None;
            c.note = Some(format!("degree {}: {}", opts.max_degree, r.describe()));
            c
        }
    })
}

/// Runs the requested metrics in parallel. A budget refusal becomes a note on
/// that metric; any other error aborts the audit.
pub fn audit(inst: &Instance, opts: &AuditOptions) -> mcal_core::Result<AuditReport> {
    let entries = opts
        .metrics
        .par_iter()
        .map(|&m| {
            let start = Instant::now();
            let res = compute(m, inst, opts);
            let millis = opts.timing.then(|| start.elapsed().as_millis());
            match res {
                Ok(c) => Ok(MetricEntry {
                    metric: m,
                    value: Some((&c.value).into()),
                    group: c.group,
                    witness: c.witness.map(|w| w.to_strings()),
                    witness_verified: c.verified,
                    note: c.note,
                    millis,
                }),
                Err(e @ Error::Budget { .. }) => Ok(MetricEntry {
                    metric: m,
                    value: None,
                    group: None,
                    witness: None,
                    witness_verified: None,
                    note: Some(e.to_string()),
                    millis,
                }),
                Err(e) => Err(e),
            }
        })
        .collect::<mcal_core::Result<Vec<_>>>()?;

    let f = inst.audited();
    let groups = inst
        .groups()
        .iter()
        .map(|s| {
            let dce = match dce_with(inst, s, &opts.budget) {
                Ok(r) => Some((&r.value).into()),
                Err(Error::Budget { .. }) => None,
                Err(e) => return Err(e),
            };
            Ok(GroupEntry { group: s.to_string(), calibrated: is_calibrated(f, inst, s), dce })
        })
        .collect::<mcal_core::Result<Vec<_>>>()?;
    let refused = entries.iter().any(|e| e.value.is_none()) || groups.iter().any(|g| g.dce.is_none());
    Ok(AuditReport {
        n: inst.n(),
        l1_to_ground_truth: (&l1_distance(f, inst.ground_truth(), inst.marginal())?).into(),
        groups,
        membership: Membership {
            multicalibrated: is_multicalibrated(f, inst),
            multiaccurate: is_multiaccurate(f, inst),
            degree: (1..=opts.max_degree).map(|r| is_degree_r_multicalibrated(f, inst, r)).collect(),
        },
        metrics: entries,
        refused,
    })
}

impl AuditReport {
    pub fn metric(&self, m: AuditMetric) -> Option<&MetricEntry> {
        self.metrics.iter().find(|e| e.metric == m)
    }

    /// Plain-text table.
    pub fn table(&self) -> String {
        let mut out = format!("n = {}, l1(f, p*) = {}\n", self.n, self.l1_to_ground_truth.exact);
        for e in &self.metrics {
            let name = serde_json::to_value(e.metric).ok().and_then(|v| v.as_str().map(String::from)).unwrap_or_default();
            match &e.value {
                Some(v) => out += &format!("{name:<7} {:<16} {}\n", v.exact, v.decimal),
                None => out += &format!("{name:<7} refused: {}\n", e.note.as_deref().unwrap_or("")),
            }
        }
        for g in &self.groups {
            let dce = g.dce.as_ref().map_or("refused", |d| d.exact.as_str());
            out += &format!("group {:<20} calibrated={:<5} dce={dce}\n", g.group, g.calibrated);
        }
        out += &format!(
            "multicalibrated={} multiaccurate={} degree={:?}\n",
            self.membership.multicalibrated, self.membership.multiaccurate, self.membership.degree
        );
        out
    }
}
