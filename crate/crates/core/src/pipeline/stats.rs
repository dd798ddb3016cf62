use nalgebra::{DMatrix, DVector};
use rand::seq::SliceRandom;
use rayon::prelude::*;
use serde::Serialize;
use statrs::distribution::{ContinuousCDF, StudentsT};

use super::{component_filter, concentration, Component, Norm, SubjectRecord};
use crate::error::{Error, Result};
use crate::filters::apply_spectral_filter;
use crate::graph::{ShiftOperator, ShiftVariant};
use crate::spectral::eigendecompose;
use crate::surrogate::{derive_seed, realization_rng, SurrogateEnsemble, SurrogateMode, SurrogateSpec};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CorrelationResult {
    pub rho: f64,
    /// Two-tailed p-value from the t-distribution with `n - 2 - q` degrees of freedom.
    pub p_value: f64,
    pub n: usize,
    pub covariate_names: Vec<String>,
}

/// Residual maker for the design `[1, Z]`: returns an orthonormal basis of its column space.
fn design_basis(z: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let n = z.nrows();
    let mut design = DMatrix::from_element(n, z.ncols() + 1, 1.0);
    design.columns_mut(1, z.ncols()).copy_from(z);
    let qr = design.qr();
    let r = qr.r();
    let diag_max = r.diagonal().amax();
    if r.diagonal().iter().any(|d| d.abs() <= 1e-10 * diag_max.max(1e-300)) {
        return Err(Error::RankDeficientCovariates);
    }
    Ok(qr.q())
}

fn residualize(q: &DMatrix<f64>, v: &DVector<f64>) -> DVector<f64> {
    v - q * q.tr_mul(v)
}

fn pearson(a: &DVector<f64>, b: &DVector<f64>) -> Result<f64> {
    let (na, nb) = (a.norm(), b.norm());
    if na == 0.0 || nb == 0.0 {
        return Err(Error::InvalidParameter("zero variance after removing covariates".into()));
    }
    Ok((a.dot(b) / (na * nb)).clamp(-1.0, 1.0))
}

fn t_test_p(rho: f64, df: usize) -> f64 {
    if rho.abs() >= 1.0 {
        return 0.0;
    }
    let t = rho * (df as f64 / (1.0 - rho * rho)).sqrt();
    let dist = StudentsT::new(0.0, 1.0, df as f64).expect("df > 0");
    (2.0 * (1.0 - dist.cdf(t.abs()))).clamp(0.0, 1.0)
}

fn check_shapes(a: &DVector<f64>, b: &DVector<f64>, z: &DMatrix<f64>) -> Result<()> {
    let n = a.len();
    if b.len() != n {
        return Err(Error::DimensionMismatch { expected: n, got: b.len() });
    }
    if z.nrows() != n && z.ncols() > 0 {
        return Err(Error::DimensionMismatch { expected: n, got: z.nrows() });
    }
    let q = z.ncols();
    if n <= q + 2 {
        return Err(Error::TooFewSamples { min: q + 2, got: n });
    }
    Ok(())
}

fn as_design(z: &DMatrix<f64>, n: usize) -> DMatrix<f64> {
    if z.ncols() == 0 {
        DMatrix::zeros(n, 0)
    } else {
        z.clone()
    }
}

/// Partial Pearson correlation of `a` and `b` controlling for the columns of `z`
/// (an intercept is always included).
pub fn partial_correlation(
    a: &DVector<f64>,
    b: &DVector<f64>,
    z: &DMatrix<f64>,
) -> Result<CorrelationResult> {
    check_shapes(a, b, z)?;
    let n = a.len();
    let q = design_basis(&as_design(z, n))?;
    let rho = pearson(&residualize(&q, a), &residualize(&q, b))?;
    Ok(CorrelationResult { rho, p_value: t_test_p(rho, n - 2 - z.ncols()), n, covariate_names: Vec::new() })
}

/// Two-tailed permutation p-value for the partial correlation: residuals of
/// `b` are shuffled against residuals of `a`.
pub fn permutation_p_value(
    a: &DVector<f64>,
    b: &DVector<f64>,
    z: &DMatrix<f64>,
    n_perm: usize,
    seed: u64,
) -> Result<f64> {
    check_shapes(a, b, z)?;
    let n = a.len();
    let q = design_basis(&as_design(z, n))?;
    let (ra, rb) = (residualize(&q, a), residualize(&q, b));
    let observed = pearson(&ra, &rb)?.abs();
    let mut rng = realization_rng(seed, 0);
    let mut perm: Vec<f64> = rb.iter().copied().collect();
    let mut hits = 0usize;
    for _ in 0..n_perm {
        perm.shuffle(&mut rng);
        let r = pearson(&ra, &DVector::from_column_slice(&perm))?;
        if r.abs() >= observed - 1e-12 {
            hits += 1;
        }
    }
    Ok((hits + 1) as f64 / (n_perm + 1) as f64)
}

/// Settings for the surrogate-based correlation test.
#[derive(Debug, Clone)]
pub struct NullTestConfig {
    pub shift: ShiftVariant,
    pub component: Component,
    pub k: usize,
    pub norm: Norm,
    pub mode: SurrogateMode,
    pub count: usize,
    pub seed: u64,
    pub behavior: String,
    pub covariates: Vec<String>,
}

#[derive(Debug, Clone, Serialize)]
pub struct NullTestResult {
    pub observed: CorrelationResult,
    /// Concentration per subject, in input order.
    pub concentrations: Vec<f64>,
    pub null_rhos: Vec<f64>,
    /// One-sided: fraction of null correlations at least as large as the observed one,
    /// with the usual +1 correction.
    pub p_value: f64,
    pub mode: SurrogateMode,
}

fn lookup(map: &std::collections::BTreeMap<String, f64>, key: &str, subject: usize) -> Result<f64> {
    map.get(key)
        .copied()
        .ok_or_else(|| Error::InvalidParameter(format!("subject {subject} has no value for `{key}`")))
}

/// Behavior vector and covariate matrix across subjects.
pub fn cohort_design(
    subjects: &[SubjectRecord],
    behavior: &str,
    covariates: &[String],
) -> Result<(DVector<f64>, DMatrix<f64>)> {
    let n = subjects.len();
    let b = subjects
        .iter()
        .enumerate()
        .map(|(s, r)| lookup(&r.behavior, behavior, s))
        .collect::<Result<Vec<_>>>()?;
    let mut z = DMatrix::zeros(n, covariates.len());
    for (s, r) in subjects.iter().enumerate() {
        for (c, name) in covariates.iter().enumerate() {
            z[(s, c)] = lookup(&r.covariates, name, s)?;
        }
    }
    Ok((DVector::from_vec(b), z))
}

/// Observed partial correlation between per-subject component concentration and
/// behavior, compared against the same statistic on surrogate signals.
///
/// Surrogate `j` of subject `s` is realization `j` of an ensemble seeded with
/// `derive_seed(seed, s)`, with the component filter applied inside the null.
pub fn null_correlation_test(subjects: &[SubjectRecord], cfg: &NullTestConfig) -> Result<NullTestResult> {
    let (behavior, z) = cohort_design(subjects, &cfg.behavior, &cfg.covariates)?;
    let per_subject: Vec<(f64, Vec<f64>)> = subjects
        .par_iter()
        .enumerate()
        .map(|(s, rec)| -> Result<(f64, Vec<f64>)> {
            let basis = eigendecompose(&ShiftOperator::new(&rec.graph, cfg.shift)?)?;
            let filter = component_filter(&basis, cfg.component, cfg.k)?;
            let x = rec.signals.values();
            let observed = concentration(&apply_spectral_filter(&basis, &filter, x)?, cfg.norm)?;
            let spec = SurrogateSpec::new(cfg.mode, cfg.count, derive_seed(cfg.seed, s as u64))?
                .with_filter(filter);
            let ens = SurrogateEnsemble::new(&spec, &basis, x)?;
            let nulls = ens
                .iter()
                .map(|y| concentration(&y, cfg.norm))
                .collect::<Result<Vec<_>>>()?;
            Ok((observed, nulls))
        })
        .collect::<Result<Vec<_>>>()?;

    let concentrations: Vec<f64> = per_subject.iter().map(|(c, _)| *c).collect();
    let mut observed = partial_correlation(&DVector::from_vec(concentrations.clone()), &behavior, &z)?;
    observed.covariate_names = cfg.covariates.clone();
    let null_rhos = (0..cfg.count)
        .map(|j| {
            let a = DVector::from_iterator(subjects.len(), per_subject.iter().map(|(_, n)| n[j]));
            partial_correlation(&a, &behavior, &z).map(|r| r.rho)
        })
        .collect::<Result<Vec<_>>>()?;
    let tol = 1e-12 * observed.rho.abs().max(1.0);
    let hits = null_rhos.iter().filter(|&&r| r >= observed.rho - tol).count();
    let p_value = (hits + 1) as f64 / (cfg.count + 1) as f64;
    Ok(NullTestResult { observed, concentrations, null_rhos, p_value, mode: cfg.mode })
}
