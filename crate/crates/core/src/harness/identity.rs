use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{pointwise_product, SampledFunction};
use crate::norm::{periodic_difference, stft_row};
use crate::sum::NeumaierSum;

/// Largest list accepted by [`check_product_identity`].
pub const MAX_IDENTITY_TERMS: usize = 12;

/// `|Π a_i - 1 - Σ_{∅≠J} Π_{j∈J} (a_j - 1)|`, by enumerating all subsets.
pub fn check_product_identity(values: &[Complex64]) -> Result<f64> {
    if values.len() > MAX_IDENTITY_TERMS {
        return Err(Error::Precondition(format!(
            "{} terms, subset enumeration capped at {MAX_IDENTITY_TERMS}",
            values.len()
        )));
    }
    let one = Complex64::new(1.0, 0.0);
    let lhs = values.iter().fold(one, |acc, a| acc * a) - one;
    let mut re = NeumaierSum::new();
    let mut im = NeumaierSum::new();
    for mask in 1u32..(1 << values.len()) {
        let term = values
            .iter()
            .enumerate()
            .filter(|(i, _)| mask & (1 << i) != 0)
            .fold(one, |acc, (_, a)| acc * (a - one));
        re.add(term.re);
        im.add(term.im);
    }
    Ok((lhs - Complex64::new(re.value(), im.value())).norm())
}

/// Outcome of the STFT product identity check.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ToftResidual {
    /// `max |L - R| / max |L|` over the sampled x-nodes (absolute if `L ≡ 0`)
    pub residual: f64,
    pub max_lhs: f64,
    pub x_nodes: usize,
}

/// Compares `V_{φ₁φ₂}(fg)(x, ξ)` with
/// `(2π)^{-n/2} ∫ V_{φ₁}f(x, ξ-η) V_{φ₂}g(x, η) dη` at every `stride`-th
/// x-node along each axis and all ξ-nodes.
pub fn run_toft_identity(
    f: &SampledFunction,
    g: &SampledFunction,
    phi1: &SampledFunction,
    phi2: &SampledFunction,
    stride: usize,
) -> Result<ToftResidual> {
    let grid = *f.grid();
    if [g, phi1, phi2].iter().any(|h| h.grid() != &grid) {
        return Err(Error::GridMismatch);
    }
    let stride = stride.max(1);
    let fg = pointwise_product(f, g)?;
    let window = pointwise_product(phi1, phi2)?;
    let norm = (2.0 * PI).powf(-(grid.dim() as f64) / 2.0) * grid.dual_cell_volume();
    let len = grid.len();
    let nodes: Vec<usize> = (0..len)
        .filter(|&i| grid.axes(i)[..grid.dim()].iter().all(|a| a % stride == 0))
        .collect();
    let mut worst = 0.0f64;
    let mut max_lhs = 0.0f64;
    for &m in &nodes {
        let lhs = stft_row(&fg, &window, m)?;
        let a = stft_row(f, phi1, m)?;
        let b = stft_row(g, phi2, m)?;
        for (j, l) in lhs.iter().enumerate() {
            let mut re = NeumaierSum::new();
            let mut im = NeumaierSum::new();
            for (i, bv) in b.iter().enumerate() {
                let t = a[periodic_difference(&grid, j, i)] * bv;
                re.add(t.re);
                im.add(t.im);
            }
            let rhs = Complex64::new(re.value(), im.value()) * norm;
            worst = worst.max((l - rhs).norm());
            max_lhs = max_lhs.max(l.norm());
        }
    }
    Ok(ToftResidual {
        residual: if max_lhs > 0.0 { worst / max_lhs } else { worst },
        max_lhs,
        x_nodes: nodes.len(),
    })
}
