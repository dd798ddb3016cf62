//! Randomized invariants across modules.

mod common;

use std::collections::BTreeMap;

use common::{basis_of, random_graph, random_signals, SYMMETRIC};
use gspkit::filters::{apply_spectral_filter, polynomial_filter_apply, SpectralFilter};
use gspkit::graph::{ShiftOperator, ShiftVariant, SystemId};
use gspkit::pipeline::{
    align_liberal_split, concentration, excursion_against, partial_correlation, system_concentration,
    Component, ExcursionOptions, Norm,
};
use gspkit::slepian::{slepian_basis, NodeSelector, SlepianCriterion};
use gspkit::surrogate::{
    graph_sign_flip, phase_randomize, realization_rng, SurrogateEnsemble, SurrogateMode, SurrogateSpec,
};
use gspkit::temporal::dft_matrix;
use nalgebra::{DMatrix, DVector};
use proptest::prelude::*;

fn config() -> ProptestConfig {
    ProptestConfig { cases: 48, ..ProptestConfig::default() }
}

proptest! {
    #![proptest_config(config())]

    #[test]
    fn gft_is_orthonormal(n in 2usize..30, t in 1usize..8, density in 0.0f64..0.6, seed in any::<u64>(), v in 0usize..3) {
        let g = random_graph(n, density, seed);
        let b = basis_of(&g, SYMMETRIC[v]);
        let x = random_signals(n, t, seed);
        let c = b.gft(&x).unwrap();
        prop_assert!((c.norm() - x.norm()).abs() < 1e-9 * x.norm().max(1.0));
        prop_assert!((b.igft(&c).unwrap() - &x).amax() < 1e-9);
        let v = b.eigenvectors();
        prop_assert!((v.tr_mul(v) - DMatrix::identity(n, n)).amax() < 1e-9);
    }

    #[test]
    fn frequency_order_is_monotone(n in 2usize..25, density in 0.0f64..0.7, seed in any::<u64>(), v in 0usize..3) {
        let variant = SYMMETRIC[v];
        let b = basis_of(&random_graph(n, density, seed), variant);
        let ev: Vec<f64> = b.ordering().iter().map(|&k| b.eigenvalues()[k]).collect();
        for w in ev.windows(2) {
            if variant.is_laplacian_family() {
                prop_assert!(w[0] <= w[1] + 1e-12);
            } else {
                prop_assert!(w[0] >= w[1] - 1e-12);
            }
        }
    }

    #[test]
    fn low_and_high_split_the_signal(n in 4usize..30, seed in any::<u64>(), frac in 0.0f64..=0.5) {
        let b = basis_of(&random_graph(n, 0.3, seed), ShiftVariant::Adjacency);
        let k = ((n as f64 * frac) as usize).clamp(1, n / 2);
        let x = random_signals(n, 4, seed ^ 1);
        let (al, lib) = align_liberal_split(&b, &x, k).unwrap();
        let rest = if 2 * k < n {
            let mid = SpectralFilter::ideal_band(&b, &(k..n - k).collect::<Vec<_>>()).unwrap();
            apply_spectral_filter(&b, &mid, &x).unwrap()
        } else {
            DMatrix::zeros(n, 4)
        };
        prop_assert!((&al + &lib + rest - &x).amax() < 1e-9);
        for c in 0..4 {
            prop_assert!(al.column(c).dot(&lib.column(c)).abs() < 1e-9);
        }
    }

    #[test]
    fn spectral_filters_are_idempotent_and_commute(n in 3usize..25, seed in any::<u64>(), k1 in 1usize..10, k2 in 1usize..10) {
        let b = basis_of(&random_graph(n, 0.4, seed), ShiftVariant::Laplacian);
        let x = random_signals(n, 3, seed);
        let lo = SpectralFilter::ideal_low(&b, k1.min(n)).unwrap();
        let hi = SpectralFilter::ideal_high(&b, k2.min(n)).unwrap();
        let once = apply_spectral_filter(&b, &lo, &x).unwrap();
        prop_assert!((apply_spectral_filter(&b, &lo, &once).unwrap() - &once).amax() < 1e-9);
        let lh = apply_spectral_filter(&b, &lo, &apply_spectral_filter(&b, &hi, &x).unwrap()).unwrap();
        let hl = apply_spectral_filter(&b, &hi, &once).unwrap();
        prop_assert!((lh - hl).amax() < 1e-9);
    }

    #[test]
    fn polynomial_matches_spectral_response(n in 2usize..20, seed in any::<u64>(), coeffs in prop::collection::vec(-1.0f64..1.0, 1..5)) {
        let g = random_graph(n, 0.3, seed);
        let op = ShiftOperator::new(&g, ShiftVariant::SymNormalizedLaplacian).unwrap();
        let b = basis_of(&g, ShiftVariant::SymNormalizedLaplacian);
        let x = random_signals(n, 2, seed);
        let vertex = polynomial_filter_apply(&op, &coeffs, &x).unwrap();
        let spectral = apply_spectral_filter(&b, &SpectralFilter::polynomial_response(&b, &coeffs), &x).unwrap();
        prop_assert!((vertex - spectral).amax() < 1e-8);
    }

    #[test]
    fn sign_flips_keep_coefficient_magnitudes(n in 2usize..25, seed in any::<u64>(), stream in any::<u64>()) {
        let b = basis_of(&random_graph(n, 0.3, seed), ShiftVariant::Laplacian);
        let x = random_signals(n, 5, seed);
        let y = graph_sign_flip(&b, &x, &mut realization_rng(seed, stream)).unwrap();
        let (cx, cy) = (b.gft(&x).unwrap(), b.gft(&y).unwrap());
        prop_assert!((cx.abs() - cy.abs()).amax() < 1e-12 * cx.amax().max(1.0));
    }

    #[test]
    fn phase_randomization_keeps_row_power(n in 1usize..6, t in 3usize..70, seed in any::<u64>()) {
        let x = random_signals(n, t, seed);
        let y = phase_randomize(&x, &mut realization_rng(seed, 9)).unwrap();
        let (px, py) = (dft_matrix(&x).map(|z| z.norm_sqr()), dft_matrix(&y).map(|z| z.norm_sqr()));
        prop_assert!((px - py).amax() < 1e-9 * x.norm_squared().max(1.0));
    }

    #[test]
    fn concentration_is_homogeneous(n in 1usize..10, t in 1usize..10, seed in any::<u64>(), c in -5.0f64..5.0, l1 in any::<bool>()) {
        let y = random_signals(n, t, seed);
        let norm = if l1 { Norm::L1 } else { Norm::L2 };
        let base = concentration(&y, norm).unwrap();
        prop_assert!((concentration(&(&y * c), norm).unwrap() - c.abs() * base).abs() < 1e-12 * base.max(1.0) * 5.0);
    }

    #[test]
    fn system_concentration_is_row_restricted(n in 2usize..12, seed in any::<u64>(), k in 1u32..4) {
        let y = random_signals(n, 6, seed);
        let systems: BTreeMap<usize, SystemId> = (0..n).map(|i| (i, i as u32 % k)).collect();
        let per = system_concentration(&y, &systems, Norm::L2).unwrap();
        for (s, v) in per {
            let rows: Vec<usize> = (0..n).filter(|i| *i as u32 % k == s).collect();
            prop_assert!((v - concentration(&y.select_rows(&rows), Norm::L2).unwrap()).abs() < 1e-14);
        }
    }

    #[test]
    fn partial_correlation_is_affine_invariant(seed in any::<u64>(), sa in 0.1f64..10.0, sb in -10.0f64..-0.1, sz in 0.1f64..5.0, shift in -50.0f64..50.0) {
        let n = 25;
        let m = random_signals(n, 4, seed);
        let (a, b) = (m.column(0).into_owned(), m.column(1).into_owned() + m.column(0) * 0.4);
        let z = m.columns(2, 2).into_owned();
        let r0 = partial_correlation(&a, &b, &z).unwrap();
        let mut z2 = z.clone();
        z2.column_mut(1).iter_mut().for_each(|v| *v = *v * sz + shift);
        let a2 = a.map(|v| v * sa + shift);
        let b2 = b.map(|v| v * sb - shift);
        let r1 = partial_correlation(&a2, &b2, &z2).unwrap();
        prop_assert!((r0.rho + r1.rho).abs() < 1e-12);
        prop_assert!(r0.rho.abs() <= 1.0 && (0.0..=1.0).contains(&r0.p_value));
    }

    #[test]
    fn slepian_vectors_are_orthonormal(n in 3usize..25, seed in any::<u64>(), mfrac in 0.2f64..=1.0, energy in any::<bool>()) {
        let g = random_graph(n, 0.3, seed);
        let b = basis_of(&g, ShiftVariant::Laplacian);
        let m = ((n as f64 * mfrac).ceil() as usize).clamp(1, n);
        let nodes: Vec<usize> = (0..n).filter(|i| (seed >> (i % 64)) & 1 == 1 || *i == 0).collect();
        let sel = NodeSelector::from_nodes(n, &nodes).unwrap();
        let crit = if energy { SlepianCriterion::EnergyConcentration } else { SlepianCriterion::ModifiedEmbeddedDistance };
        let s = slepian_basis(&b, &sel, m, crit).unwrap();
        prop_assert!((s.vectors.tr_mul(&s.vectors) - DMatrix::identity(m, m)).amax() < 1e-8);
        prop_assert!(s.concentration.iter().all(|&mu| (-1e-10..=1.0 + 1e-10).contains(&mu)));
    }

    #[test]
    fn excursion_percentages_are_bounded(n in 3usize..10, t in 3usize..40, seed in any::<u64>(), alpha in 0.001f64..0.5, mode in 0usize..3) {
        let b = basis_of(&random_graph(n, 0.3, seed), ShiftVariant::Laplacian);
        let x = random_signals(n, t, seed);
        let m = [SurrogateMode::GraphSignFlip, SurrogateMode::TemporalPhase, SurrogateMode::Combined][mode];
        let spec = SurrogateSpec::new(m, 100, seed).unwrap();
        let ens = SurrogateEnsemble::new(&spec, &b, &x).unwrap();
        let (pct, thr) = excursion_against(&x, &ens, &ExcursionOptions::new(alpha, Component::Aligned)).unwrap();
        prop_assert!(pct.iter().all(|p| (0.0..=100.0).contains(p)));
        prop_assert!(thr.iter().all(|&v| v >= 0.0));
    }
}

#[test]
fn partial_correlation_ignores_covariate_rescaling_exactly() {
    let m = random_signals(30, 3, 5);
    let a: DVector<f64> = m.column(0).into_owned();
    let b: DVector<f64> = m.column(1).into_owned() - m.column(0) * 0.7;
    let z = m.columns(2, 1).into_owned();
    let r = partial_correlation(&a, &b, &z).unwrap().rho;
    let r2 = partial_correlation(&a, &b, &(z * 1e3)).unwrap().rho;
    assert!((r - r2).abs() < 1e-12);
}
