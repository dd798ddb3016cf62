//! Null-model surrogates: temporal phase randomization, graph-spectral sign
//! flipping, and their composition.
//!
//! Every realization draws from its own ChaCha20 stream, addressed by
//! `(seed, realization index)`, so ensembles can be generated in any order or
//! in parallel and still agree bit for bit.

use std::f64::consts::TAU;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::filters::SpectralFilter;
use crate::spectral::SpectralBasis;
use crate::temporal::TemporalFilterPlan;

/// Identifier of the pinned generator; written into reports so seeds stay portable.
pub const RNG_ALGORITHM: &str = "chacha20/rand_chacha-0.9/stream=realization";

/// Default ensemble size for excursion thresholds.
pub const DEFAULT_EXCURSION_SURROGATES: usize = 1000;
/// Default ensemble size for the correlation null test.
pub const DEFAULT_CORRELATION_SURROGATES: usize = 100;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SurrogateMode {
    GraphSignFlip,
    TemporalPhase,
    Combined,
}

impl SurrogateMode {
    fn randomizes_time(self) -> bool {
        matches!(self, SurrogateMode::TemporalPhase | SurrogateMode::Combined)
    }

    fn randomizes_graph(self) -> bool {
        matches!(self, SurrogateMode::GraphSignFlip | SurrogateMode::Combined)
    }
}

impl std::str::FromStr for SurrogateMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "graph" | "g" | "graph-sign-flip" => Ok(SurrogateMode::GraphSignFlip),
            "temporal" | "t" | "temporal-phase" => Ok(SurrogateMode::TemporalPhase),
            "combined" | "g-t" | "gt" => Ok(SurrogateMode::Combined),
            other => Err(Error::InvalidParameter(format!("unknown surrogate mode `{other}`"))),
        }
    }
}

#[derive(Debug, Clone)]
pub struct SurrogateSpec {
    pub mode: SurrogateMode,
    pub count: usize,
    pub seed: u64,
    /// Spectral filter applied inside the null pipeline, e.g. the aligned band.
    pub filter: Option<SpectralFilter>,
}

impl SurrogateSpec {
    pub fn new(mode: SurrogateMode, count: usize, seed: u64) -> Result<Self> {
        if count == 0 {
            return Err(Error::InvalidParameter("surrogate count must be >= 1".into()));
        }
        Ok(Self { mode, count, seed, filter: None })
    }

    pub fn with_filter(mut self, filter: SpectralFilter) -> Self {
        self.filter = Some(filter);
        self
    }
}

/// Generator for realization `index` of the ensemble seeded with `seed`.
pub fn realization_rng(seed: u64, index: u64) -> ChaCha20Rng {
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}

/// SplitMix64 step, used to derive independent sub-seeds (per subject, per system).
pub fn derive_seed(seed: u64, salt: u64) -> u64 {
    let mut z = seed ^ salt.wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Unit-modulus, Hermitian-symmetric phase window of length `t`.
///
/// Bin 0, and the Nyquist bin for even `t`, keep phase 0.
pub fn draw_phases<R: Rng + ?Sized>(t: usize, rng: &mut R) -> Vec<Complex64> {
    let mut w = vec![Complex64::new(1.0, 0.0); t];
    for k in 1..=(t - 1) / 2 {
        let phi: f64 = rng.random();
        let z = Complex64::from_polar(1.0, TAU * phi);
        w[k] = z;
        w[t - k] = z.conj();
    }
    w
}

/// I.i.d. uniform signs in {-1, +1}.
pub fn draw_flips<R: Rng + ?Sized>(n: usize, rng: &mut R) -> DVector<f64> {
    DVector::from_fn(n, |_, _| if rng.random::<bool>() { 1.0 } else { -1.0 })
}

/// `Y = X F^H Phi F` with a given phase window.
pub fn phase_randomize_with(x: &DMatrix<f64>, phases: &[Complex64]) -> Result<DMatrix<f64>> {
    crate::temporal::temporal_filter(x, phases)
}

/// Fourier phase randomization, one random phase per frequency shared by all rows.
pub fn phase_randomize<R: Rng + ?Sized>(x: &DMatrix<f64>, rng: &mut R) -> Result<DMatrix<f64>> {
    let t = x.ncols();
    if t < 3 {
        return Err(Error::TooShort { min: 3, got: t });
    }
    let phases = draw_phases(t, rng);
    phase_randomize_with(x, &phases)
}

/// `Y = V diag(flips) V^T X`.
pub fn graph_sign_flip_with(
    basis: &SpectralBasis,
    x: &DMatrix<f64>,
    flips: &DVector<f64>,
) -> Result<DMatrix<f64>> {
    basis.check_rows(flips.len())?;
    let mut coeffs = basis.gft(x)?;
    for (mut row, &f) in coeffs.row_iter_mut().zip(flips.iter()) {
        row.scale_mut(f);
    }
    basis.igft(&coeffs)
}

/// Graph surrogate: random sign flips of the graph Fourier coefficients.
pub fn graph_sign_flip<R: Rng + ?Sized>(
    basis: &SpectralBasis,
    x: &DMatrix<f64>,
    rng: &mut R,
) -> Result<DMatrix<f64>> {
    basis.check_rows(x.nrows())?;
    let flips = draw_flips(basis.n(), rng);
    graph_sign_flip_with(basis, x, &flips)
}

/// Phase randomization in time, then sign flipping in the graph domain.
///
/// Phases are drawn before flips from the same generator.
pub fn combined_surrogate<R: Rng + ?Sized>(
    basis: &SpectralBasis,
    x: &DMatrix<f64>,
    rng: &mut R,
) -> Result<DMatrix<f64>> {
    basis.check_rows(x.nrows())?;
    let shuffled = phase_randomize(x, rng)?;
    graph_sign_flip(basis, &shuffled, rng)
}

/// A seed-addressed surrogate ensemble expressed in some orthonormal set of
/// graph modes (Laplacian/adjacency eigenvectors or Slepian vectors).
///
/// Only modes in `support` are carried; flips are still drawn for all
/// `n_modes` so that a realization matches the direct, unfiltered construction.
pub struct SurrogateEnsemble {
    mode: SurrogateMode,
    count: usize,
    seed: u64,
    n_modes: usize,
    support: Vec<usize>,
    columns: DMatrix<f64>,
    coeffs: DMatrix<f64>,
    plan: TemporalFilterPlan,
}

impl SurrogateEnsemble {
    /// Ensemble `V Phi_graph Psi V^T (X F^H Phi_time F)` over a spectral basis.
    pub fn new(spec: &SurrogateSpec, basis: &SpectralBasis, x: &DMatrix<f64>) -> Result<Self> {
        basis.check_rows(x.nrows())?;
        let (support, gains) = match &spec.filter {
            Some(f) => {
                basis.check_rows(f.len())?;
                let s = f.support();
                let g: Vec<f64> = s.iter().map(|&i| f.gains()[i]).collect();
                (s, g)
            }
            None => ((0..basis.n()).collect(), vec![1.0; basis.n()]),
        };
        let columns = basis.eigenvectors().select_columns(&support);
        let mut coeffs = columns.tr_mul(x);
        for (mut row, g) in coeffs.row_iter_mut().zip(gains) {
            row.scale_mut(g);
        }
        Self::from_modes(spec.mode, spec.count, spec.seed, basis.n(), support, columns, coeffs)
    }

    /// Ensemble over explicit orthonormal mode columns with precomputed coefficients.
    pub fn from_modes(
        mode: SurrogateMode,
        count: usize,
        seed: u64,
        n_modes: usize,
        support: Vec<usize>,
        columns: DMatrix<f64>,
        coeffs: DMatrix<f64>,
    ) -> Result<Self> {
        if count == 0 {
            return Err(Error::InvalidParameter("surrogate count must be >= 1".into()));
        }
        if columns.ncols() != support.len() || coeffs.nrows() != support.len() {
            return Err(Error::DimensionMismatch { expected: support.len(), got: coeffs.nrows() });
        }
        if let Some(&i) = support.iter().find(|&&i| i >= n_modes) {
            return Err(Error::ModeOutOfRange { index: i, n_modes });
        }
        let t = coeffs.ncols();
        if mode.randomizes_time() && t < 3 {
            return Err(Error::TooShort { min: 3, got: t });
        }
        Ok(Self { mode, count, seed, n_modes, support, columns, coeffs, plan: TemporalFilterPlan::new(t) })
    }

    pub fn count(&self) -> usize {
        self.count
    }

    pub fn mode(&self) -> SurrogateMode {
        self.mode
    }

    pub fn n_nodes(&self) -> usize {
        self.columns.nrows()
    }

    pub fn time_count(&self) -> usize {
        self.coeffs.ncols()
    }

    /// Realization `index`, reproducible in isolation.
    pub fn realization(&self, index: usize) -> DMatrix<f64> {
        let mut rng = realization_rng(self.seed, index as u64);
        let mut c = if self.mode.randomizes_time() {
            let phases = draw_phases(self.coeffs.ncols(), &mut rng);
            self.plan.apply(&self.coeffs, &phases)
        } else {
            self.coeffs.clone()
        };
        if self.mode.randomizes_graph() {
            let flips = draw_flips(self.n_modes, &mut rng);
            for (mut row, &k) in c.row_iter_mut().zip(&self.support) {
                row.scale_mut(flips[k]);
            }
        }
        &self.columns * c
    }

    /// Sequential stream of all realizations.
    pub fn iter(&self) -> impl Iterator<Item = DMatrix<f64>> + '_ {
        (0..self.count).map(move |i| self.realization(i))
    }

    /// Visit realizations in index order, generating `batch` of them in parallel at a time.
    pub fn for_each_batched<F>(&self, batch: usize, mut visit: F)
    where
        F: FnMut(usize, &DMatrix<f64>),
    {
        let batch = batch.max(1);
        let mut start = 0;
        while start < self.count {
            let end = (start + batch).min(self.count);
            let mats: Vec<DMatrix<f64>> =
                (start..end).into_par_iter().map(|i| self.realization(i)).collect();
            for (off, m) in mats.iter().enumerate() {
                visit(start + off, m);
            }
            start = end;
        }
    }
}

/// Convenience: materialize a whole ensemble.
pub fn surrogate_ensemble(
    spec: &SurrogateSpec,
    basis: &SpectralBasis,
    x: &DMatrix<f64>,
) -> Result<Vec<DMatrix<f64>>> {
    let ens = SurrogateEnsemble::new(spec, basis, x)?;
    Ok(ens.iter().collect())
}
