use std::cmp::Reverse;
use std::collections::{BTreeMap, BinaryHeap};

use nalgebra::DMatrix;
use ordered_float::OrderedFloat;
use serde::{Deserialize, Serialize};

use super::{system_mean, system_members, Component};
use crate::error::{Error, Result};
use crate::filters::apply_spectral_filter;
use crate::graph::SystemId;
use crate::slepian::{slepian_basis, NodeSelector, SlepianCriterion, SlepianGate};
use crate::spectral::SpectralBasis;
use crate::surrogate::{derive_seed, SurrogateEnsemble, SurrogateMode, SurrogateSpec, RNG_ALGORITHM};
use crate::temporal::{band_indices, band_window, GraphSignalMatrix, TemporalFilterPlan};

pub const REPORT_SCHEMA_VERSION: u32 = 1;
/// Smallest ensemble accepted for thresholding.
pub const MIN_SURROGATES: usize = 100;

/// How null values are pooled into a threshold.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ThresholdPooling {
    /// One threshold per node from all surrogates and all time points.
    #[default]
    PerNode,
    /// One threshold per (node, time point) from the surrogates only.
    PerNodeTime,
}

impl std::str::FromStr for ThresholdPooling {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "per-node" | "node" => Ok(ThresholdPooling::PerNode),
            "per-node-time" | "node-time" => Ok(ThresholdPooling::PerNodeTime),
            other => Err(Error::InvalidParameter(format!("unknown pooling `{other}`"))),
        }
    }
}

#[derive(Debug, Clone)]
pub struct ExcursionOptions {
    pub alpha: f64,
    pub pooling: ThresholdPooling,
    pub component: Component,
    pub min_surrogates: usize,
    /// Realizations generated in parallel per batch.
    pub batch: usize,
}

impl ExcursionOptions {
    pub fn new(alpha: f64, component: Component) -> Self {
        Self { alpha, pooling: ThresholdPooling::PerNode, component, min_surrogates: MIN_SURROGATES, batch: 32 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExcursionReport {
    pub schema_version: u32,
    pub kind: &'static str,
    pub component: Component,
    pub alpha: f64,
    pub n_surrogates: usize,
    pub null_mode: SurrogateMode,
    pub pooling: ThresholdPooling,
    pub rng: &'static str,
    pub seed: u64,
    /// Percentage of time points whose absolute value exceeds the node threshold.
    pub per_node_pct: Vec<f64>,
    /// Mean of member-node percentages, keyed by system id.
    pub per_system_pct: BTreeMap<SystemId, f64>,
    /// Node thresholds; under per-(node, time) pooling, their mean over time.
    pub thresholds: Vec<f64>,
}

impl ExcursionReport {
    pub fn with_systems(mut self, systems: &BTreeMap<usize, SystemId>) -> Result<Self> {
        self.per_system_pct = system_mean(&self.per_node_pct, systems)?;
        Ok(self)
    }
}

/// Keeps the `cap` largest values seen.
struct TopK {
    cap: usize,
    heap: BinaryHeap<Reverse<OrderedFloat<f64>>>,
}

impl TopK {
    fn new(cap: usize) -> Self {
        Self { cap, heap: BinaryHeap::with_capacity(cap + 1) }
    }

    #[inline]
    fn push(&mut self, v: f64) {
        if self.heap.len() < self.cap {
            self.heap.push(Reverse(OrderedFloat(v)));
        } else if let Some(min) = self.heap.peek() {
            if v > min.0 .0 {
                self.heap.pop();
                self.heap.push(Reverse(OrderedFloat(v)));
            }
        }
    }

    /// The `cap`-th largest value.
    fn floor(&self) -> f64 {
        self.heap.peek().map(|r| r.0 .0).unwrap_or(f64::INFINITY)
    }
}

/// Threshold `y` against a surrogate ensemble.
///
/// With `n` pooled null values and `k = floor(alpha * n)`, the threshold is the
/// `(k + 1)`-th largest `|null|`, so exactly `k` pooled values exceed it.
pub fn excursion_against(
    y: &DMatrix<f64>,
    ensemble: &SurrogateEnsemble,
    opts: &ExcursionOptions,
) -> Result<(Vec<f64>, Vec<f64>)> {
    if !(opts.alpha > 0.0 && opts.alpha < 1.0) {
        return Err(Error::InvalidParameter(format!("alpha must lie in (0, 1), got {}", opts.alpha)));
    }
    let count = ensemble.count();
    if count < opts.min_surrogates {
        return Err(Error::InsufficientSurrogates { min: opts.min_surrogates, got: count });
    }
    let (n, t) = y.shape();
    if n != ensemble.n_nodes() {
        return Err(Error::DimensionMismatch { expected: ensemble.n_nodes(), got: n });
    }
    if t != ensemble.time_count() {
        return Err(Error::DimensionMismatch { expected: ensemble.time_count(), got: t });
    }

    let (per_node_pct, thresholds) = match opts.pooling {
        ThresholdPooling::PerNode => {
            let k = (opts.alpha * (count * t) as f64).floor() as usize;
            let mut tops: Vec<TopK> = (0..n).map(|_| TopK::new(k + 1)).collect();
            ensemble.for_each_batched(opts.batch, |_, m| {
                for (i, top) in tops.iter_mut().enumerate() {
                    for c in 0..t {
                        top.push(m[(i, c)].abs());
                    }
                }
            });
            let thr: Vec<f64> = tops.iter().map(TopK::floor).collect();
            let pct = (0..n)
                .map(|i| {
                    let hits = (0..t).filter(|&c| y[(i, c)].abs() > thr[i]).count();
                    100.0 * hits as f64 / t as f64
                })
                .collect();
            (pct, thr)
        }
        ThresholdPooling::PerNodeTime => {
            let k = (opts.alpha * count as f64).floor() as usize;
            let mut tops: Vec<TopK> = (0..n * t).map(|_| TopK::new(k + 1)).collect();
            ensemble.for_each_batched(opts.batch, |_, m| {
                for c in 0..t {
                    for i in 0..n {
                        tops[c * n + i].push(m[(i, c)].abs());
                    }
                }
            });
            let mut pct = vec![0.0; n];
            let mut thr = vec![0.0; n];
            for i in 0..n {
                let mut hits = 0;
                for c in 0..t {
                    let tau = tops[c * n + i].floor();
                    thr[i] += tau / t as f64;
                    if y[(i, c)].abs() > tau {
                        hits += 1;
                    }
                }
                pct[i] = 100.0 * hits as f64 / t as f64;
            }
            (pct, thr)
        }
    };
    Ok((per_node_pct, thresholds))
}

fn report(
    per_node_pct: Vec<f64>,
    thresholds: Vec<f64>,
    opts: &ExcursionOptions,
    mode: SurrogateMode,
    count: usize,
    seed: u64,
) -> ExcursionReport {
    ExcursionReport {
        schema_version: REPORT_SCHEMA_VERSION,
        kind: "excursion-report",
        component: opts.component,
        alpha: opts.alpha,
        n_surrogates: count,
        null_mode: mode,
        pooling: opts.pooling,
        rng: RNG_ALGORITHM,
        seed,
        per_node_pct,
        per_system_pct: BTreeMap::new(),
        thresholds,
    }
}

/// Excursions of a filtered component `y` against nulls built from `x` per `spec`.
///
/// `spec.filter` should be the filter that produced `y` from `x`.
pub fn excursion_detect(
    y: &DMatrix<f64>,
    basis: &SpectralBasis,
    x: &DMatrix<f64>,
    spec: &SurrogateSpec,
    opts: &ExcursionOptions,
) -> Result<ExcursionReport> {
    let ens = SurrogateEnsemble::new(spec, basis, x)?;
    let (pct, thr) = excursion_against(y, &ens, opts)?;
    Ok(report(pct, thr, opts, spec.mode, spec.count, spec.seed))
}

/// Excursion percentages per (system, temporal band).
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BandProfile {
    pub schema_version: u32,
    pub kind: &'static str,
    pub component: Component,
    pub alpha: f64,
    pub n_surrogates: usize,
    pub null_mode: SurrogateMode,
    pub seed: u64,
    /// `[f_lo, f_hi)` in Hz.
    pub bands: Vec<[f64; 2]>,
    pub systems: Vec<SystemId>,
    /// Rows follow `systems`, columns follow `bands`.
    pub pct: Vec<Vec<f64>>,
}

impl BandProfile {
    /// (system row, band column) of the largest cell; first wins on ties.
    pub fn argmax(&self) -> (usize, usize) {
        let mut best = (0, 0);
        for (r, row) in self.pct.iter().enumerate() {
            for (c, &v) in row.iter().enumerate() {
                if v > self.pct[best.0][best.1] {
                    best = (r, c);
                }
            }
        }
        best
    }
}

fn partition_bins(t: usize, tr: f64, bands: &[(f64, f64)]) -> Result<Vec<Vec<usize>>> {
    if bands.is_empty() {
        return Err(Error::BandsNotPartition("no bands given".into()));
    }
    let mut cover = vec![0usize; t];
    let mut out = Vec::with_capacity(bands.len());
    for &(lo, hi) in bands {
        let bins = band_indices(t, tr, lo, hi)?;
        for &k in &bins {
            cover[k] += 1;
        }
        out.push(bins);
    }
    if let Some(k) = cover.iter().position(|&c| c != 1) {
        return Err(Error::BandsNotPartition(format!(
            "bin {k} is covered {} times",
            cover[k]
        )));
    }
    Ok(out)
}

/// Band-resolved excursion percentages, aggregated per system.
///
/// Both the component and its nulls are band-filtered before thresholding.
/// Band filtering is diagonal in the DFT basis, so it commutes with the sign
/// flips and phase shifts of every null mode; the nulls are therefore drawn
/// from the band-filtered input with the same seed.
pub fn band_excursion_profile(
    signals: &GraphSignalMatrix,
    basis: &SpectralBasis,
    bands: &[(f64, f64)],
    systems: &BTreeMap<usize, SystemId>,
    spec: &SurrogateSpec,
    opts: &ExcursionOptions,
) -> Result<BandProfile> {
    let x = signals.values();
    let t = signals.time_count();
    let members = system_members(x.nrows(), systems)?;
    let bins = partition_bins(t, signals.sampling_period(), bands)?;
    let y = match &spec.filter {
        Some(f) => apply_spectral_filter(basis, f, x)?,
        None => x.clone(),
    };
    let plan = TemporalFilterPlan::new(t);
    let mut columns = Vec::with_capacity(bands.len());
    for band_bins in &bins {
        let w = band_window(t, band_bins);
        let xb = plan.apply(x, &w);
        let yb = plan.apply(&y, &w);
        let ens = SurrogateEnsemble::new(spec, basis, &xb)?;
        let (pct, _) = excursion_against(&yb, &ens, opts)?;
        columns.push(system_mean(&pct, systems)?);
    }
    let system_ids: Vec<SystemId> = members.keys().copied().collect();
    let pct = system_ids
        .iter()
        .map(|s| columns.iter().map(|col| col[s]).collect())
        .collect();
    Ok(BandProfile {
        schema_version: REPORT_SCHEMA_VERSION,
        kind: "band-profile",
        component: opts.component,
        alpha: opts.alpha,
        n_surrogates: spec.count,
        null_mode: spec.mode,
        seed: spec.seed,
        bands: bands.iter().map(|&(a, b)| [a, b]).collect(),
        systems: system_ids,
        pct,
    })
}

/// Local excursions inside each system.
///
/// For every system a modified-criterion Slepian basis is built on its nodes,
/// the gated vectors extract the locally aligned signal, and nulls flip the
/// signs of the Slepian coefficients. Each node's percentage comes from its
/// own system's run. `spec.filter` is ignored.
pub fn slepian_excursion_profile(
    signals: &GraphSignalMatrix,
    basis: &SpectralBasis,
    systems: &BTreeMap<usize, SystemId>,
    bandwidth: usize,
    gate: &SlepianGate,
    spec: &SurrogateSpec,
    opts: &ExcursionOptions,
) -> Result<ExcursionReport> {
    let x = signals.values();
    let n = x.nrows();
    let members = system_members(n, systems)?;
    let mut per_node = vec![0.0; n];
    let mut thresholds = vec![0.0; n];
    for (&sys, nodes) in &members {
        if nodes.len() < 2 {
            return Err(Error::InvalidParameter(format!("system {sys} has fewer than 2 nodes")));
        }
        let selector = NodeSelector::from_nodes(n, nodes)?;
        let slep = slepian_basis(basis, &selector, bandwidth, SlepianCriterion::ModifiedEmbeddedDistance)?;
        let gated = slep.gate_indices(gate)?;
        if gated.is_empty() {
            log::warn!("system {sys}: slepian gate selected no vectors");
            continue;
        }
        let s = slep.vectors.select_columns(&gated);
        let coeffs = s.tr_mul(x);
        let y = &s * &coeffs;
        let ens = SurrogateEnsemble::from_modes(
            spec.mode,
            spec.count,
            derive_seed(spec.seed, sys as u64),
            bandwidth,
            gated,
            s,
            coeffs,
        )?;
        let (pct, thr) = excursion_against(&y, &ens, opts)?;
        for &i in nodes {
            per_node[i] = pct[i];
            thresholds[i] = thr[i];
        }
    }
    let mut opts = opts.clone();
    opts.component = Component::SlepianLocal;
    report(per_node, thresholds, &opts, spec.mode, spec.count, spec.seed).with_systems(systems)
}

/// Five-number summary of member-node values per system (box-plot data).
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BoxSummary {
    pub system: SystemId,
    pub min: f64,
    pub q1: f64,
    pub median: f64,
    pub q3: f64,
    pub max: f64,
}

fn quantile_sorted(v: &[f64], q: f64) -> f64 {
    let pos = q * (v.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    v[lo] + (v[hi] - v[lo]) * (pos - lo as f64)
}

/// Linear-interpolation quartiles of per-node values within each system.
pub fn box_summaries(per_node: &[f64], systems: &BTreeMap<usize, SystemId>) -> Result<Vec<BoxSummary>> {
    Ok(system_members(per_node.len(), systems)?
        .into_iter()
        .map(|(system, nodes)| {
            let mut v: Vec<f64> = nodes.iter().map(|&i| per_node[i]).collect();
            v.sort_by(f64::total_cmp);
            BoxSummary {
                system,
                min: v[0],
                q1: quantile_sorted(&v, 0.25),
                median: quantile_sorted(&v, 0.5),
                q3: quantile_sorted(&v, 0.75),
                max: v[v.len() - 1],
            }
        })
        .collect())
}
