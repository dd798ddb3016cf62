//! Analysis layer: alignment/liberality split, concentration scalars,
//! per-system aggregation, partial correlation and excursion detection.

mod excursion;
mod stats;

use std::collections::BTreeMap;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::filters::{apply_spectral_filter, SpectralFilter};
use crate::graph::{BrainGraph, SystemId};
use crate::spectral::SpectralBasis;
use crate::temporal::GraphSignalMatrix;

pub use excursion::{
    band_excursion_profile, excursion_against, excursion_detect, slepian_excursion_profile,
    box_summaries, BandProfile, BoxSummary, ExcursionOptions, ExcursionReport, ThresholdPooling,
    MIN_SURROGATES, REPORT_SCHEMA_VERSION,
};
pub use stats::{
    cohort_design, null_correlation_test, partial_correlation, permutation_p_value, CorrelationResult,
    NullTestConfig, NullTestResult,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Component {
    Aligned,
    Liberal,
    SlepianLocal,
}

impl std::str::FromStr for Component {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "aligned" | "al" | "low" => Ok(Component::Aligned),
            "liberal" | "lib" | "high" => Ok(Component::Liberal),
            "slepian" | "slepian-local" | "local" => Ok(Component::SlepianLocal),
            other => Err(Error::InvalidParameter(format!("unknown component `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Norm {
    L1,
    #[default]
    L2,
}

impl std::str::FromStr for Norm {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "l1" => Ok(Norm::L1),
            "l2" => Ok(Norm::L2),
            other => Err(Error::InvalidParameter(format!("unknown norm `{other}`"))),
        }
    }
}

/// One subject: functional signals on a structural graph plus behavioral scores.
#[derive(Debug, Clone)]
pub struct SubjectRecord {
    pub signals: GraphSignalMatrix,
    pub graph: BrainGraph,
    pub behavior: BTreeMap<String, f64>,
    pub covariates: BTreeMap<String, f64>,
}

impl SubjectRecord {
    pub fn new(
        signals: GraphSignalMatrix,
        graph: BrainGraph,
        behavior: BTreeMap<String, f64>,
        covariates: BTreeMap<String, f64>,
    ) -> Result<Self> {
        if signals.node_count() != graph.n_nodes() {
            return Err(Error::DimensionMismatch {
                expected: graph.n_nodes(),
                got: signals.node_count(),
            });
        }
        Ok(Self { signals, graph, behavior, covariates })
    }
}

/// The ideal filter selecting a component's band.
pub fn component_filter(basis: &SpectralBasis, component: Component, k: usize) -> Result<SpectralFilter> {
    match component {
        Component::Aligned => SpectralFilter::ideal_low(basis, k),
        Component::Liberal => SpectralFilter::ideal_high(basis, k),
        Component::SlepianLocal => Err(Error::InvalidParameter(
            "the slepian component has no whole-graph spectral filter".into(),
        )),
    }
}

/// Split `X` into its `k` lowest (aligned) and `k` highest (liberal) graph-frequency parts.
pub fn align_liberal_split(
    basis: &SpectralBasis,
    x: &DMatrix<f64>,
    k: usize,
) -> Result<(DMatrix<f64>, DMatrix<f64>)> {
    if 2 * k > basis.n() {
        return Err(Error::BandOverlap(2 * k, basis.n()));
    }
    let low = SpectralFilter::ideal_low(basis, k)?;
    let high = SpectralFilter::ideal_high(basis, k)?;
    Ok((apply_spectral_filter(basis, &low, x)?, apply_spectral_filter(basis, &high, x)?))
}

/// Column norms averaged over time: `(1/T) sum_t ||Y[:, t]||_p`.
pub fn concentration(y: &DMatrix<f64>, norm: Norm) -> Result<f64> {
    if y.is_empty() {
        return Err(Error::InvalidParameter("concentration of an empty signal".into()));
    }
    let total: f64 = y
        .column_iter()
        .map(|c| match norm {
            Norm::L1 => c.lp_norm(1),
            Norm::L2 => c.norm(),
        })
        .sum();
    Ok(total / y.ncols() as f64)
}

/// Members of each system, in ascending node order. Every node must be mapped.
pub fn system_members(
    n_nodes: usize,
    systems: &BTreeMap<usize, SystemId>,
) -> Result<BTreeMap<SystemId, Vec<usize>>> {
    let mut out: BTreeMap<SystemId, Vec<usize>> = BTreeMap::new();
    for i in 0..n_nodes {
        let s = systems.get(&i).ok_or(Error::UnmappedNode(i))?;
        out.entry(*s).or_default().push(i);
    }
    if let Some((&idx, _)) = systems.iter().find(|(&idx, _)| idx >= n_nodes) {
        return Err(Error::IndexOutOfRange { index: idx, n_nodes });
    }
    Ok(out)
}

/// Per-system concentration: the concentration of the system's rows of `Y`.
pub fn system_concentration(
    y: &DMatrix<f64>,
    systems: &BTreeMap<usize, SystemId>,
    norm: Norm,
) -> Result<BTreeMap<SystemId, f64>> {
    system_members(y.nrows(), systems)?
        .into_iter()
        .map(|(s, rows)| Ok((s, concentration(&y.select_rows(&rows), norm)?)))
        .collect()
}

/// Per-system mean of per-node values (excursion percentages).
pub fn system_mean(
    per_node: &[f64],
    systems: &BTreeMap<usize, SystemId>,
) -> Result<BTreeMap<SystemId, f64>> {
    Ok(system_members(per_node.len(), systems)?
        .into_iter()
        .map(|(s, rows)| {
            let m = rows.iter().map(|&i| per_node[i]).sum::<f64>() / rows.len() as f64;
            (s, m)
        })
        .collect())
}
