//! Seeded synthetic graphs, signals and cohorts.
//!
//! Every generator is a pure function of its spec and seed. Independent pieces
//! (graph, signals, each cohort subject) draw from separate derived seeds.

use std::collections::BTreeMap;
use std::f64::consts::TAU;

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_chacha::ChaCha20Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{cycle_graph, BrainGraph, ShiftOperator, ShiftVariant, SystemId};
use crate::pipeline::{align_liberal_split, concentration, Norm, SubjectRecord};
use crate::spectral::{eigendecompose, SpectralBasis};
use crate::surrogate::{derive_seed, realization_rng};
use crate::temporal::GraphSignalMatrix;

const GRAPH_SALT: u64 = 0x4752_4150_4800;
const SIGNAL_SALT: u64 = 0x5349_474E_4100;
const COHORT_SALT: u64 = 0x434F_484F_5254;
pub const MAX_GRAPH_ATTEMPTS: usize = 100;

pub const BEHAVIOR_KEY: &str = "switch_cost";
pub const AGE_KEY: &str = "age";
pub const MOTION_KEY: &str = "motion";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", tag = "model")]
pub enum GraphModel {
    /// Stochastic block model with contiguous, near-equal blocks.
    BlockModel { blocks: usize, p_in: f64, p_out: f64, weight_range: (f64, f64) },
    /// Each node linked to its `radius` nearest neighbours on each side.
    RingLattice { radius: usize },
    CycleGraph,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", tag = "model")]
pub enum SignalModel {
    /// i.i.d. normal coefficients on the listed frequency ranks, zero elsewhere.
    BandLimited { modes: Vec<usize>, sigma: f64 },
    WhiteNoise { sigma: f64 },
    /// White noise plus a constant offset at one node over `[start, end)`.
    PlantedBurst { node: usize, start: usize, end: usize, amplitude: f64, sigma: f64 },
    /// White noise plus a sinusoid of random phase shared by `nodes`.
    Oscillation { nodes: Vec<usize>, freq_hz: f64, amplitude: f64, sigma: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SynthSpec {
    pub graph_model: GraphModel,
    pub signal_model: SignalModel,
    pub n_nodes: usize,
    pub t_points: usize,
    /// Sampling period in seconds.
    pub tr: f64,
    pub seed: u64,
}

fn check_prob(name: &str, p: f64) -> Result<()> {
    if (0.0..=1.0).contains(&p) {
        Ok(())
    } else {
        Err(Error::InvalidParameter(format!("{name} must lie in [0, 1], got {p}")))
    }
}

fn check_sigma(sigma: f64) -> Result<()> {
    if sigma > 0.0 && sigma.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidParameter(format!("sigma must be positive, got {sigma}")))
    }
}

impl SynthSpec {
    pub fn validate(&self) -> Result<()> {
        if self.n_nodes < 2 {
            return Err(Error::TooSmall { min: 2, got: self.n_nodes });
        }
        if self.t_points == 0 {
            return Err(Error::TooShort { min: 1, got: 0 });
        }
        if !(self.tr > 0.0 && self.tr.is_finite()) {
            return Err(Error::InvalidSamplingPeriod(self.tr));
        }
        match self.graph_model {
            GraphModel::BlockModel { blocks, p_in, p_out, weight_range: (lo, hi) } => {
                check_prob("p_in", p_in)?;
                check_prob("p_out", p_out)?;
                if blocks == 0 || blocks > self.n_nodes {
                    return Err(Error::InvalidParameter(format!(
                        "block count {blocks} must lie in 1..={}",
                        self.n_nodes
                    )));
                }
                if !(lo > 0.0 && lo <= hi && hi.is_finite()) {
                    return Err(Error::InvalidParameter(format!("bad weight range [{lo}, {hi}]")));
                }
            }
            GraphModel::RingLattice { radius } => {
                if radius == 0 || 2 * radius >= self.n_nodes {
                    return Err(Error::InvalidParameter(format!(
                        "ring radius {radius} needs 1 <= 2*radius < {}",
                        self.n_nodes
                    )));
                }
            }
            GraphModel::CycleGraph => {}
        }
        match &self.signal_model {
            SignalModel::BandLimited { sigma, .. } | SignalModel::WhiteNoise { sigma } => check_sigma(*sigma),
            SignalModel::PlantedBurst { node, start, end, sigma, .. } => {
                check_sigma(*sigma)?;
                if *node >= self.n_nodes {
                    return Err(Error::IndexOutOfRange { index: *node, n_nodes: self.n_nodes });
                }
                if start > end || *end > self.t_points {
                    return Err(Error::InvalidParameter(format!(
                        "burst range [{start}, {end}) outside 0..{}",
                        self.t_points
                    )));
                }
                Ok(())
            }
            SignalModel::Oscillation { nodes, freq_hz, sigma, .. } => {
                check_sigma(*sigma)?;
                if let Some(&i) = nodes.iter().find(|&&i| i >= self.n_nodes) {
                    return Err(Error::IndexOutOfRange { index: i, n_nodes: self.n_nodes });
                }
                let nyquist = 0.5 / self.tr;
                if !(*freq_hz >= 0.0 && *freq_hz <= nyquist) {
                    return Err(Error::AboveNyquist { f_lo: *freq_hz, f_hi: *freq_hz, nyquist });
                }
                Ok(())
            }
        }
    }
}

/// Block of node `i` when `n` nodes are split into `k` contiguous blocks.
pub fn block_of(i: usize, n: usize, k: usize) -> SystemId {
    (i * k / n) as SystemId
}

fn block_model(
    n: usize,
    blocks: usize,
    p_in: f64,
    p_out: f64,
    (lo, hi): (f64, f64),
    rng: &mut ChaCha20Rng,
) -> Result<BrainGraph> {
    let systems: BTreeMap<usize, SystemId> = (0..n).map(|i| (i, block_of(i, n, blocks))).collect();
    let mut edges = Vec::new();
    for i in 0..n {
        for j in i + 1..n {
            let p = if systems[&i] == systems[&j] { p_in } else { p_out };
            if rng.random::<f64>() < p {
                let w = if hi > lo { rng.random_range(lo..=hi) } else { lo };
                edges.push((i, j, w));
            }
        }
    }
    BrainGraph::from_edges(&edges, n, None, Some(systems))
}

fn ring_lattice(n: usize, radius: usize) -> Result<BrainGraph> {
    let edges: Vec<_> = (0..n)
        .flat_map(|i| (1..=radius).map(move |d| (i, (i + d) % n, 1.0)))
        .collect();
    BrainGraph::from_edges(&edges, n, None, None)
}

/// A connected graph drawn from the spec's graph model.
///
/// Random models are redrawn until connected, up to [`MAX_GRAPH_ATTEMPTS`] times.
pub fn synth_graph(spec: &SynthSpec) -> Result<BrainGraph> {
    spec.validate()?;
    let n = spec.n_nodes;
    match spec.graph_model {
        GraphModel::BlockModel { blocks, p_in, p_out, weight_range } => {
            let seed = derive_seed(spec.seed, GRAPH_SALT);
            for attempt in 0..MAX_GRAPH_ATTEMPTS {
                let mut rng = realization_rng(seed, attempt as u64);
                let g = block_model(n, blocks, p_in, p_out, weight_range, &mut rng)?;
                if g.is_connected() {
                    return Ok(g);
                }
            }
            Err(Error::DisconnectedAfterRetries(MAX_GRAPH_ATTEMPTS))
        }
        GraphModel::RingLattice { radius } => ring_lattice(n, radius),
        GraphModel::CycleGraph => cycle_graph(n),
    }
}

fn white(n: usize, t: usize, sigma: f64, rng: &mut ChaCha20Rng) -> DMatrix<f64> {
    DMatrix::from_fn(n, t, |_, _| sigma * rng.sample::<f64, _>(StandardNormal))
}

/// Signals drawn from the spec's signal model on the given basis.
pub fn synth_signals(spec: &SynthSpec, basis: &SpectralBasis) -> Result<GraphSignalMatrix> {
    spec.validate()?;
    let (n, t) = (spec.n_nodes, spec.t_points);
    if basis.n() != n {
        return Err(Error::DimensionMismatch { expected: n, got: basis.n() });
    }
    let mut rng = realization_rng(derive_seed(spec.seed, SIGNAL_SALT), 0);
    let x = match &spec.signal_model {
        SignalModel::BandLimited { modes, sigma } => {
            if let Some(&r) = modes.iter().find(|&&r| r >= n) {
                return Err(Error::ModeOutOfRange { index: r, n_modes: n });
            }
            let mut ranks = modes.clone();
            ranks.sort_unstable();
            ranks.dedup();
            let mut coeffs = DMatrix::zeros(n, t);
            for &r in &ranks {
                let k = basis.ordering()[r];
                for c in 0..t {
                    coeffs[(k, c)] = sigma * rng.sample::<f64, _>(StandardNormal);
                }
            }
            basis.igft(&coeffs)?
        }
        SignalModel::WhiteNoise { sigma } => white(n, t, *sigma, &mut rng),
        SignalModel::PlantedBurst { node, start, end, amplitude, sigma } => {
            let mut x = white(n, t, *sigma, &mut rng);
            for c in *start..*end {
                x[(*node, c)] += amplitude;
            }
            x
        }
        SignalModel::Oscillation { nodes, freq_hz, amplitude, sigma } => {
            let mut x = white(n, t, *sigma, &mut rng);
            let phase = TAU * rng.random::<f64>();
            for c in 0..t {
                let v = amplitude * (TAU * freq_hz * c as f64 * spec.tr + phase).sin();
                for &i in nodes {
                    x[(i, c)] += v;
                }
            }
            x
        }
    };
    GraphSignalMatrix::new(x, spec.tr)
}

/// How the behavioral score is tied to the latent liberal concentration.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum EffectCalibration {
    /// The in-sample partial correlation equals the target exactly.
    #[default]
    Exact,
    /// Population correlation equals the target; sample values scatter around it.
    Population,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CohortEffect {
    pub target_rho: f64,
    pub shift: ShiftVariant,
    /// Liberal band size.
    pub k: usize,
    pub norm: Norm,
    pub calibration: EffectCalibration,
}

impl CohortEffect {
    pub fn new(target_rho: f64) -> Self {
        Self {
            target_rho,
            shift: ShiftVariant::Adjacency,
            k: crate::filters::DEFAULT_SPLIT_K,
            norm: Norm::L2,
            calibration: EffectCalibration::Exact,
        }
    }
}

/// Residual of `v` after least-squares projection on the columns of `design`.
fn residual(design: &DMatrix<f64>, v: &DVector<f64>) -> DVector<f64> {
    let q = design.clone().qr().q();
    v - &q * q.tr_mul(v)
}

fn normalized(v: DVector<f64>) -> DVector<f64> {
    let n = v.norm();
    if n > 0.0 {
        v / n
    } else {
        v
    }
}

struct Planted {
    record: SubjectRecord,
    latent: f64,
    age: f64,
    motion: f64,
    noise: f64,
}

fn plant_subject(spec: &SynthSpec, effect: &CohortEffect, s: usize) -> Result<Planted> {
    let seed = derive_seed(spec.seed, s as u64);
    let sub = SynthSpec { seed, ..spec.clone() };
    let graph = synth_graph(&sub)?;
    let basis = eigendecompose(&ShiftOperator::new(&graph, effect.shift)?)?;
    let x = synth_signals(&sub, &basis)?;
    let (al, lib) = align_liberal_split(&basis, x.values(), effect.k)?;

    let mut rng = realization_rng(derive_seed(seed, COHORT_SALT), 0);
    let measured = concentration(&lib, effect.norm)?;
    let latent = measured * (0.35 * rng.sample::<f64, _>(StandardNormal)).exp();
    let scaled = al + lib * (latent / measured);
    let age = 40.0 + 12.0 * rng.sample::<f64, _>(StandardNormal);
    let motion = 0.1 * (0.4 * rng.sample::<f64, _>(StandardNormal)).exp();
    let noise = rng.sample::<f64, _>(StandardNormal);

    let covariates = BTreeMap::from([(AGE_KEY.to_string(), age), (MOTION_KEY.to_string(), motion)]);
    let record = SubjectRecord::new(x.with_values(scaled)?, graph, BTreeMap::new(), covariates)?;
    Ok(Planted { record, latent, age, motion, noise })
}

/// A cohort whose behavioral score correlates with liberal concentration.
///
/// Each subject's liberal component is rescaled so its concentration equals a
/// drawn latent value. The score is an affine map of a unit-norm mix of the
/// latent and an independent noise draw, plus covariate effects. Under
/// [`EffectCalibration::Exact`] the noise is first residualized on the
/// intercept, the covariates and the latent, so the partial correlation of
/// score and latent given the covariates equals the target.
pub fn synth_cohort(n_subjects: usize, spec: &SynthSpec, effect: &CohortEffect) -> Result<Vec<SubjectRecord>> {
    if n_subjects < 10 {
        return Err(Error::TooFewSamples { min: 10, got: n_subjects });
    }
    if !(-1.0..=1.0).contains(&effect.target_rho) {
        return Err(Error::InvalidParameter(format!("target rho {} outside [-1, 1]", effect.target_rho)));
    }
    spec.validate()?;
    let planted = (0..n_subjects)
        .into_par_iter()
        .map(|s| plant_subject(spec, effect, s))
        .collect::<Result<Vec<_>>>()?;

    let n = n_subjects;
    let latent = DVector::from_iterator(n, planted.iter().map(|p| p.latent));
    let noise = DVector::from_iterator(n, planted.iter().map(|p| p.noise));
    let rho = effect.target_rho;
    let mix = match effect.calibration {
        EffectCalibration::Exact => {
            let mut design = DMatrix::from_element(n, 3, 1.0);
            for (i, p) in planted.iter().enumerate() {
                design[(i, 1)] = p.age;
                design[(i, 2)] = p.motion;
            }
            let lat = normalized(residual(&design, &latent));
            let mut design = design.insert_column(3, 0.0);
            design.set_column(3, &latent);
            let e = normalized(residual(&design, &noise));
            (lat * rho + e * (1.0 - rho * rho).max(0.0).sqrt()) * (n as f64).sqrt()
        }
        EffectCalibration::Population => {
            // standardize the latent by its known log-normal spread, not the sample
            let z = latent.map(|l| l.ln());
            let m = z.mean();
            let lat = z.map(|v| (v - m) / 0.35);
            lat * rho + noise * (1.0 - rho * rho).max(0.0).sqrt()
        }
    };
    Ok(planted
        .into_iter()
        .zip(mix.iter())
        .map(|(mut p, &b)| {
            let score = 600.0 + 80.0 * b + 1.5 * (p.age - 40.0) + 200.0 * p.motion;
            p.record.behavior.insert(BEHAVIOR_KEY.to_string(), score);
            p.record
        })
        .collect())
}
