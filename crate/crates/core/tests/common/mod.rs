#![allow(dead_code)]

use qsync_core::{CMatrix, DensityMatrix, FactorKind, SpaceLayout, C64};
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn random_matrix(rng: &mut ChaCha8Rng, d: usize) -> CMatrix {
    CMatrix::from_fn(d, |_, _| C64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)))
}

pub fn random_hermitian(rng: &mut ChaCha8Rng, d: usize) -> CMatrix {
    random_matrix(rng, d).hermitian_part()
}

/// `G G^dag / tr`, optionally of reduced rank.
pub fn random_density_matrix(rng: &mut ChaCha8Rng, layout: SpaceLayout, rank: usize) -> DensityMatrix {
    let d = layout.total_dim();
    let g = CMatrix::from_fn(d, |_, j| {
        if j < rank {
            C64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))
        } else {
            C64::new(0.0, 0.0)
        }
    });
    let m = g.matmul(&g.adjoint());
    let tr = m.trace().re;
    DensityMatrix::new(layout, m.scale_real(1.0 / tr).hermitian_part()).expect("random state is valid")
}

pub fn layout_of(factors: &[usize]) -> SpaceLayout {
    let labels = (0..factors.len()).map(|k| format!("f{k}")).collect();
    let kinds = factors.iter().map(|&d| if d == 2 { FactorKind::Qubit } else { FactorKind::Generic }).collect();
    SpaceLayout::new(factors.to_vec(), labels, kinds).unwrap()
}

pub fn random_factors(rng: &mut ChaCha8Rng, max_factors: usize, max_dim: usize) -> Vec<usize> {
    let n = rng.gen_range(1..=max_factors);
    (0..n).map(|_| rng.gen_range(2..=max_dim)).collect()
}
