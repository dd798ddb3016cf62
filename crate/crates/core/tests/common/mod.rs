#![allow(dead_code)]

use gspkit::graph::{BrainGraph, ShiftOperator, ShiftVariant};
use gspkit::spectral::{eigendecompose, SpectralBasis};
use gspkit::surrogate::realization_rng;
use nalgebra::DMatrix;
use rand::Rng;
use rand_distr::StandardNormal;

/// Connected random graph: a weighted path backbone plus random chords.
pub fn random_graph(n: usize, density: f64, seed: u64) -> BrainGraph {
    let mut rng = realization_rng(seed, 1);
    let mut edges = Vec::new();
    for i in 0..n {
        for j in i + 1..n {
            if j == i + 1 || rng.random::<f64>() < density {
                edges.push((i, j, rng.random_range(0.1..2.0)));
            }
        }
    }
    BrainGraph::from_edges(&edges, n, None, None).unwrap()
}

pub fn random_signals(n: usize, t: usize, seed: u64) -> DMatrix<f64> {
    let mut rng = realization_rng(seed, 2);
    DMatrix::from_fn(n, t, |_, _| rng.sample(StandardNormal))
}

pub fn basis_of(g: &BrainGraph, v: ShiftVariant) -> SpectralBasis {
    eigendecompose(&ShiftOperator::new(g, v).unwrap()).unwrap()
}

pub const SYMMETRIC: [ShiftVariant; 3] =
    [ShiftVariant::Adjacency, ShiftVariant::Laplacian, ShiftVariant::SymNormalizedLaplacian];
