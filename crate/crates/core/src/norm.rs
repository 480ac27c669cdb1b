//! Modulation norms: the STFT integral and the frequency-uniform
//! decomposition sum, plus the Sobolev norm `H^s`.

use num_complex::Complex64;
use num_traits::ToPrimitive;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::decomp::{BankInfo, DecompositionBank, Lattice};
use crate::error::{Error, Result};
use crate::exponent::{rational_str, ExtendedExponent, Rational};
use crate::grid::{
    forward_ft, inverse_in_place, japanese_bracket, lp_norm_values, minus_kernel_transform, GridSpec,
    SampledFunction, SpectralFunction,
};
use crate::sum::NeumaierSum;

/// Default relative tail tolerance for norm reports.
pub const DEFAULT_TAIL_TOLERANCE: f64 = 1e-4;

/// `(s, p, q, n)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct SpaceParams {
    #[serde(with = "rational_str")]
    pub s: Rational,
    pub p: ExtendedExponent,
    pub q: ExtendedExponent,
    pub n: usize,
}

impl SpaceParams {
    pub fn new(s: Rational, p: ExtendedExponent, q: ExtendedExponent, n: usize) -> Self {
        Self { s, p, q, n }
    }

    /// Convenience constructor for integer `s`.
    pub fn int(s: i64, p: ExtendedExponent, q: ExtendedExponent, n: usize) -> Self {
        Self::new(Rational::from_integer(s), p, q, n)
    }

    pub fn s_f64(&self) -> f64 {
        self.s.to_f64().unwrap_or(f64::NAN)
    }

    pub fn with_s(self, s: Rational) -> Self {
        Self { s, ..self }
    }

    pub fn with_p(self, p: ExtendedExponent) -> Self {
        Self { p, ..self }
    }

    pub fn with_q(self, q: ExtendedExponent) -> Self {
        Self { q, ..self }
    }

    fn check_dim(&self, grid: &GridSpec) -> Result<()> {
        if self.n != grid.dim() {
            return Err(Error::DimensionMismatch(self.n, grid.dim()));
        }
        Ok(())
    }
}

/// `⟨k⟩^s` from an exact lattice point.
#[inline]
pub fn lattice_weight(k: Lattice, s: f64) -> f64 {
    let r2 = (k[0] * k[0] + k[1] * k[1]) as f64;
    (1.0 + r2).powf(s / 2.0)
}

/// `(w Σ v^q)^{1/q}`, or the maximum for `q = ∞`.
pub fn lq_reduce(values: impl IntoIterator<Item = f64>, q: f64, weight: f64) -> f64 {
    if q.is_infinite() {
        return values.into_iter().fold(0.0, f64::max);
    }
    let acc: NeumaierSum = values.into_iter().map(|v| v.powf(q)).collect();
    (weight * acc.value()).powf(1.0 / q)
}

/// One entry of a report: a lattice point `k` or a frequency node `ξ`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Contribution {
    pub at: Vec<f64>,
    pub value: f64,
}

/// How decomposition pieces are sampled for the `L_p` quadrature.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "snake_case")]
pub enum Quadrature {
    /// Each piece is inverted on the full grid.
    Full,
    /// Each piece is demodulated to the origin and inverted on a grid with the
    /// same period and `samples` nodes per axis. Exact for `p = 2`.
    Local { samples: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "method", rename_all = "snake_case")]
pub enum NormSettings {
    Decomposition {
        bank: BankInfo,
        quadrature: Quadrature,
        tail_tolerance: f64,
    },
    Stft {
        grid: GridSpec,
        window_l2: f64,
        band_fraction: f64,
        tail_tolerance: f64,
    },
}

/// Norm value with per-item contributions and a truncation diagnostic.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NormReport {
    pub value: f64,
    pub params: SpaceParams,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub contributions: Option<Vec<Contribution>>,
    pub tail: f64,
    pub settings: NormSettings,
}

impl NormReport {
    /// The declared `ℓ_q` reduction applied to the stored contributions.
    pub fn recompute(&self) -> Option<f64> {
        let c = self.contributions.as_ref()?;
        let weight = match self.settings {
            NormSettings::Decomposition { .. } => 1.0,
            NormSettings::Stft { grid, .. } => grid.dual_cell_volume(),
        };
        Some(lq_reduce(c.iter().map(|c| c.value), self.params.q.to_f64(), weight))
    }

    pub fn without_contributions(mut self) -> Self {
        self.contributions = None;
        self
    }
}

/// Options for [`mod_norm_decomp_with`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DecompOptions {
    pub tail_tolerance: f64,
    pub quadrature: Option<Quadrature>,
}

impl Default for DecompOptions {
    fn default() -> Self {
        Self {
            tail_tolerance: DEFAULT_TAIL_TOLERANCE,
            quadrature: None,
        }
    }
}

impl DecompOptions {
    pub fn tolerance(tail_tolerance: f64) -> Self {
        Self {
            tail_tolerance,
            ..Self::default()
        }
    }
}

/// Local grid size: eight-fold oversampling of the support of one piece.
fn default_quadrature(bank: &DecompositionBank) -> Quadrature {
    let n = bank.grid().samples_per_axis();
    let local = (8 * (2 * bank.half_width() + 1)).next_power_of_two();
    if local >= n {
        Quadrature::Full
    } else {
        Quadrature::Local { samples: local }
    }
}

/// `‖f‖*_{M^s_{p,q}} = (Σ_k ⟨k⟩^{sq} ‖□_k f‖_{L_p}^q)^{1/q}` with the default
/// tail tolerance.
pub fn mod_norm_decomp(f: &SampledFunction, params: SpaceParams, bank: &DecompositionBank) -> Result<NormReport> {
    mod_norm_decomp_with(f, params, bank, DecompOptions::default())
}

pub fn mod_norm_decomp_with(
    f: &SampledFunction,
    params: SpaceParams,
    bank: &DecompositionBank,
    options: DecompOptions,
) -> Result<NormReport> {
    if f.grid() != bank.grid() {
        return Err(Error::GridMismatch);
    }
    params.check_dim(f.grid())?;
    let spectrum = forward_ft(f);
    decomp_from_spectrum(&spectrum, params, bank, options)
}

/// Decomposition norm of a function given by its spectrum.
pub fn decomp_from_spectrum(
    spectrum: &SpectralFunction,
    params: SpaceParams,
    bank: &DecompositionBank,
    options: DecompOptions,
) -> Result<NormReport> {
    let grid = *bank.grid();
    if spectrum.grid() != &grid {
        return Err(Error::GridMismatch);
    }
    params.check_dim(&grid)?;
    let quadrature = options.quadrature.unwrap_or_else(|| default_quadrature(bank));
    let p = params.p.to_f64();
    let s = params.s_f64();
    let lattice = bank.lattice();
    let norms: Vec<f64> = lattice
        .par_iter()
        .map(|&k| piece_lp_norm(spectrum, bank, k, p, quadrature))
        .collect();
    let contributions: Vec<Contribution> = lattice
        .iter()
        .zip(&norms)
        .map(|(k, &v)| Contribution {
            at: k[..grid.dim()].iter().map(|&c| c as f64).collect(),
            value: lattice_weight(*k, s) * v,
        })
        .collect();
    let q = params.q.to_f64();
    let value = lq_reduce(contributions.iter().map(|c| c.value), q, 1.0);

    let k_max = bank.k_max() as i64;
    let shell = lq_reduce(
        lattice
            .iter()
            .zip(&contributions)
            .filter(|(k, _)| k[0].abs() == k_max || k[1].abs() == k_max)
            .map(|(_, c)| c.value),
        q,
        1.0,
    );
    let uncovered = uncovered_fraction(spectrum, bank);
    let tail = if value > 0.0 { (shell / value).max(uncovered) } else { uncovered };
    if tail > options.tail_tolerance {
        return Err(Error::Truncation {
            tail,
            tolerance: options.tail_tolerance,
        });
    }
    Ok(NormReport {
        value,
        params,
        contributions: Some(contributions),
        tail,
        settings: NormSettings::Decomposition {
            bank: bank.info(),
            quadrature,
            tail_tolerance: options.tail_tolerance,
        },
    })
}

/// `‖F^{-1}[σ_k F f]‖_{L_p}`.
fn piece_lp_norm(spectrum: &SpectralFunction, bank: &DecompositionBank, k: Lattice, p: f64, quad: Quadrature) -> f64 {
    let grid = bank.grid();
    let vals = spectrum.values();
    let zero = Complex64::new(0.0, 0.0);
    match quad {
        Quadrature::Full => {
            let mut data: Vec<Complex64> = vals
                .iter()
                .enumerate()
                .map(|(i, v)| v * bank.sigma(k, i))
                .collect();
            if data.iter().all(|v| *v == zero) {
                return 0.0;
            }
            inverse_in_place(grid, &mut data);
            lp_norm_values(&data, grid.cell_volume(), p)
        }
        Quadrature::Local { samples } => {
            let local = GridSpec::new(grid.dim(), grid.period_multiplier(), samples).expect("valid local grid");
            let big = grid.samples_per_axis();
            let m = grid.period_multiplier() as i64;
            let w = bank.half_width() as i64;
            // node of ξ = k along each axis, moved to the local center
            let map_axis = |kk: i64, li: usize| -> Option<usize> {
                let off = li as i64 - (samples / 2) as i64;
                if off.abs() > w {
                    return None;
                }
                let gi = (big / 2) as i64 + kk * m + off;
                (0..big as i64).contains(&gi).then_some(gi as usize)
            };
            let mut data = vec![zero; local.len()];
            let mut any = false;
            if grid.dim() == 1 {
                for (li, slot) in data.iter_mut().enumerate() {
                    if let Some(gi) = map_axis(k[0], li) {
                        *slot = vals[gi] * bank.factor(k[0], gi);
                        any |= *slot != zero;
                    }
                }
            } else {
                for la in 0..samples {
                    let Some(ga) = map_axis(k[0], la) else { continue };
                    let fa = bank.factor(k[0], ga);
                    for lb in 0..samples {
                        let Some(gb) = map_axis(k[1], lb) else { continue };
                        let v = vals[ga * big + gb] * fa * bank.factor(k[1], gb);
                        data[la * samples + lb] = v;
                        any |= v != zero;
                    }
                }
            }
            if !any {
                return 0.0;
            }
            inverse_in_place(&local, &mut data);
            lp_norm_values(&data, local.cell_volume(), p)
        }
    }
}

/// Share of `‖F f‖_{ℓ_2}` not covered by `Σ_k σ_k` over the bank.
fn uncovered_fraction(spectrum: &SpectralFunction, bank: &DecompositionBank) -> f64 {
    let grid = bank.grid();
    let k_max = bank.k_max() as i64;
    let mut coverage = vec![0.0; grid.samples_per_axis()];
    for k in -k_max..=k_max {
        let (lo, hi) = bank.support_range(k);
        for (i, c) in coverage.iter_mut().enumerate().take(hi + 1).skip(lo) {
            *c += bank.factor(k, i);
        }
    }
    let mut total = NeumaierSum::new();
    let mut missing = NeumaierSum::new();
    for (i, v) in spectrum.values().iter().enumerate() {
        let a = grid.axes(i);
        let c = if grid.dim() == 1 { coverage[a[0]] } else { coverage[a[0]] * coverage[a[1]] };
        let m = v.norm_sqr();
        total.add(m);
        missing.add((1.0 - c).powi(2) * m);
    }
    if total.value() > 0.0 {
        (missing.value() / total.value()).sqrt()
    } else {
        0.0
    }
}

/// `(Δξⁿ Σ ⟨ξ⟩^{2s} |F f(ξ)|²)^{1/2}`.
pub fn sobolev_norm(f: &SampledFunction, s: f64) -> f64 {
    let grid = *f.grid();
    let spec = forward_ft(f);
    let acc: NeumaierSum = spec
        .values()
        .iter()
        .enumerate()
        .map(|(i, v)| japanese_bracket(grid.xi_node(i)).powf(2.0 * s) * v.norm_sqr())
        .collect();
    (grid.dual_cell_volume() * acc.value()).sqrt()
}

/// Samples of `V_φ f` over (x-node, ξ-node), row-major in the x-node.
#[derive(Debug, Clone, PartialEq)]
pub struct StftField {
    grid: GridSpec,
    values: Vec<Complex64>,
}

impl StftField {
    pub fn grid(&self) -> &GridSpec {
        &self.grid
    }

    #[inline]
    pub fn at(&self, x_node: usize, xi_node: usize) -> Complex64 {
        self.values[x_node * self.grid.len() + xi_node]
    }

    /// All ξ-samples at one x-node.
    pub fn row(&self, x_node: usize) -> &[Complex64] {
        let len = self.grid.len();
        &self.values[x_node * len..(x_node + 1) * len]
    }

    pub fn values(&self) -> &[Complex64] {
        &self.values
    }
}

/// Flat index of `a - b` on the periodic grid (per-axis modular shift).
pub(crate) fn periodic_difference(grid: &GridSpec, a: usize, b: usize) -> usize {
    let size = grid.samples_per_axis();
    let half = size / 2;
    let pa = grid.axes(a);
    let pb = grid.axes(b);
    let d = |i: usize| (pa[i] + size + half - pb[i]) % size;
    if grid.dim() == 1 {
        d(0)
    } else {
        grid.flat([d(0), d(1)])
    }
}

/// `V_φ f(x, ξ) = (2π)^{-n/2} ∫ f(t) conj(φ(t - x)) e^{-it·ξ} dt`.
pub fn stft(f: &SampledFunction, window: &SampledFunction) -> Result<StftField> {
    if f.grid() != window.grid() {
        return Err(Error::GridMismatch);
    }
    let grid = *f.grid();
    let rows: Vec<Vec<Complex64>> = (0..grid.len())
        .into_par_iter()
        .map(|m| stft_row_unchecked(f, window, m))
        .collect();
    Ok(StftField {
        grid,
        values: rows.concat(),
    })
}

/// `V_φ f(x_m, ·)` at a single x-node.
pub fn stft_row(f: &SampledFunction, window: &SampledFunction, x_node: usize) -> Result<Vec<Complex64>> {
    if f.grid() != window.grid() {
        return Err(Error::GridMismatch);
    }
    if x_node >= f.grid().len() {
        return Err(Error::InvalidParameters(format!("x-node {x_node} out of range")));
    }
    Ok(stft_row_unchecked(f, window, x_node))
}

fn stft_row_unchecked(f: &SampledFunction, window: &SampledFunction, m: usize) -> Vec<Complex64> {
    let grid = *f.grid();
    let fv = f.values();
    let wv = window.values();
    let mut h: Vec<Complex64> = (0..grid.len())
        .map(|l| fv[l] * wv[periodic_difference(&grid, l, m)].conj())
        .collect();
    minus_kernel_transform(&grid, &mut h);
    h
}

/// L_2-normalized Gaussian `e^{-|x|²/(2w²)}`.
pub fn gaussian_window(grid: GridSpec, width: f64) -> SampledFunction {
    let g = SampledFunction::from_fn(grid, |x| {
        Complex64::new((-(x[0] * x[0] + x[1] * x[1]) / (2.0 * width * width)).exp(), 0.0)
    })
    .expect("finite Gaussian");
    let l2 = lp_norm_values(g.values(), grid.cell_volume(), 2.0);
    g.scale(Complex64::new(1.0 / l2, 0.0))
}

/// Options for [`mod_norm_stft_with`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StftOptions {
    pub tail_tolerance: f64,
    /// frequency nodes with `‖ξ‖_∞ >= band_fraction · N/(2M)` form the tail band
    pub band_fraction: f64,
}

impl Default for StftOptions {
    fn default() -> Self {
        Self {
            tail_tolerance: DEFAULT_TAIL_TOLERANCE,
            band_fraction: 0.9,
        }
    }
}

/// `(∫ (∫ |V_φ f(x,ξ) ⟨ξ⟩^s|^p dx)^{q/p} dξ)^{1/q}`.
pub fn mod_norm_stft(f: &SampledFunction, params: SpaceParams, window: &SampledFunction) -> Result<NormReport> {
    mod_norm_stft_with(f, params, window, StftOptions::default())
}

pub fn mod_norm_stft_with(
    f: &SampledFunction,
    params: SpaceParams,
    window: &SampledFunction,
    options: StftOptions,
) -> Result<NormReport> {
    params.check_dim(f.grid())?;
    if window.max_abs() == 0.0 {
        return Err(Error::ZeroWindow);
    }
    let field = stft(f, window)?;
    let grid = *f.grid();
    let len = grid.len();
    let p = params.p.to_f64();
    let s = params.s_f64();
    let cell = grid.cell_volume();
    let contributions: Vec<Contribution> = (0..len)
        .into_par_iter()
        .map(|j| {
            let column: Vec<Complex64> = (0..len).map(|m| field.at(m, j)).collect();
            let xi = grid.xi_node(j);
            Contribution {
                at: xi[..grid.dim()].to_vec(),
                value: japanese_bracket(xi).powf(s) * lp_norm_values(&column, cell, p),
            }
        })
        .collect();
    let q = params.q.to_f64();
    let dxi = grid.dual_cell_volume();
    let value = lq_reduce(contributions.iter().map(|c| c.value), q, dxi);
    let edge = options.band_fraction * grid.nyquist();
    let band = lq_reduce(
        contributions
            .iter()
            .filter(|c| c.at.iter().any(|v| v.abs() >= edge))
            .map(|c| c.value),
        q,
        dxi,
    );
    let tail = if value > 0.0 { band / value } else { 0.0 };
    if tail > options.tail_tolerance {
        return Err(Error::Truncation {
            tail,
            tolerance: options.tail_tolerance,
        });
    }
    Ok(NormReport {
        value,
        params,
        contributions: Some(contributions),
        tail,
        settings: NormSettings::Stft {
            grid,
            window_l2: lp_norm_values(window.values(), cell, 2.0),
            band_fraction: options.band_fraction,
            tail_tolerance: options.tail_tolerance,
        },
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::decomp::build_bank;
    use crate::exponent::INF;
    use crate::grid::lp_norm;
    use std::f64::consts::PI;

    fn two() -> ExtendedExponent {
        ExtendedExponent::two()
    }

    fn gauss(grid: GridSpec, k0: f64) -> SampledFunction {
        SampledFunction::from_fn(grid, |x| Complex64::from_polar((-x[0] * x[0] / 2.0).exp(), k0 * x[0])).unwrap()
    }

    #[test]
    fn sobolev_values() {
        let g = GridSpec::new(1, 8, 1024).unwrap();
        let f = gauss(g, 0.0);
        assert!((sobolev_norm(&f, 0.0) - lp_norm(&f, two())).abs() < 1e-10);
        let exact = (1.5 * PI.sqrt()).sqrt();
        assert!((sobolev_norm(&f, 1.0) / exact - 1.0).abs() < 1e-6);
    }

    #[test]
    fn moyal_identity() {
        let g = GridSpec::new(1, 2, 128).unwrap();
        let f = gauss(g, 1.0);
        let w = gaussian_window(g, 1.3);
        let v = stft(&f, &w).unwrap();
        let total: f64 = v.values().iter().map(|c| c.norm_sqr()).sum::<f64>() * g.dx() * g.dxi();
        let expected = lp_norm(&f, two()).powi(2) * lp_norm(&w, two()).powi(2);
        assert!((total / expected - 1.0).abs() < 1e-10);
        let zero = stft(&SampledFunction::zeros(g), &w).unwrap();
        assert!(zero.values().iter().all(|c| c.norm() == 0.0));
    }

    #[test]
    fn stft_norm_l2_case_and_location() {
        let g = GridSpec::new(1, 4, 256).unwrap();
        let w = gaussian_window(g, 1.0);
        let f = gauss(g, 0.0);
        let params = SpaceParams::int(0, two(), two(), 1);
        let r = mod_norm_stft(&f, params, &w).unwrap();
        assert!((r.value / lp_norm(&f, two()) - 1.0).abs() < 1e-4);
        assert!((r.recompute().unwrap() - r.value).abs() <= 1e-12 * r.value);

        // e^{ik₀x} under the -i kernel of the STFT peaks at ξ = k₀
        let f = gauss(g, 5.0);
        let r = mod_norm_stft(&f, params, &w).unwrap();
        let peak = r
            .contributions
            .unwrap()
            .into_iter()
            .max_by(|a, b| a.value.total_cmp(&b.value))
            .unwrap();
        assert!((peak.at[0] - 5.0).abs() <= g.dxi());
        assert!(matches!(
            mod_norm_stft(&f, params, &SampledFunction::zeros(g)),
            Err(Error::ZeroWindow)
        ));
    }

    #[test]
    fn decomp_quadratures_agree() {
        let g = GridSpec::new(1, 8, 1024).unwrap();
        let bank = build_bank(g, 40).unwrap();
        let f = gauss(g, 3.0);
        for p in [ExtendedExponent::one(), two(), INF] {
            let params = SpaceParams::int(1, p, two(), 1);
            let full = mod_norm_decomp_with(
                &f,
                params,
                &bank,
                DecompOptions {
                    quadrature: Some(Quadrature::Full),
                    ..Default::default()
                },
            )
            .unwrap();
            let local = mod_norm_decomp(&f, params, &bank).unwrap();
            assert!(matches!(local.settings, NormSettings::Decomposition { quadrature: Quadrature::Local { .. }, .. }));
            let rel = (full.value / local.value - 1.0).abs();
            let tol = if p == two() { 1e-12 } else { 1e-3 };
            assert!(rel < tol, "p = {p}: {rel}");
        }
    }

    #[test]
    fn truncation_is_an_error() {
        let g = GridSpec::new(1, 4, 256).unwrap();
        let bank = build_bank(g, 10).unwrap();
        let imp = SampledFunction::impulse(g);
        let params = SpaceParams::int(0, two(), INF, 1);
        assert!(matches!(mod_norm_decomp(&imp, params, &bank), Err(Error::Truncation { .. })));
        let r = mod_norm_decomp_with(&imp, params, &bank, DecompOptions::tolerance(f64::INFINITY)).unwrap();
        assert!(r.tail > 0.5);
        let bad = SpaceParams::int(0, two(), INF, 2);
        assert!(matches!(mod_norm_decomp(&imp, bad, &bank), Err(Error::DimensionMismatch(2, 1))));
    }

    #[test]
    fn zero_function_has_zero_norms() {
        let g = GridSpec::new(1, 4, 256).unwrap();
        let bank = build_bank(g, 10).unwrap();
        let z = SampledFunction::zeros(g);
        let params = SpaceParams::int(2, ExtendedExponent::one(), INF, 1);
        assert_eq!(mod_norm_decomp(&z, params, &bank).unwrap().value, 0.0);
        assert_eq!(mod_norm_stft(&z, params, &gaussian_window(g, 1.0)).unwrap().value, 0.0);
    }

    #[test]
    fn report_json_shape() {
        let g = GridSpec::new(1, 4, 256).unwrap();
        let bank = build_bank(g, 10).unwrap();
        let r = mod_norm_decomp(&gauss(g, 0.0), SpaceParams::int(0, two(), two(), 1), &bank).unwrap();
        let v: serde_json::Value = serde_json::to_value(r.clone().without_contributions()).unwrap();
        for key in ["value", "params", "tail", "settings"] {
            assert!(v.get(key).is_some(), "{key}");
        }
        assert!(v.get("contributions").is_none());
        assert_eq!(v["params"]["q"], "2");
        let back: NormReport = serde_json::from_str(&serde_json::to_string(&r).unwrap()).unwrap();
        assert_eq!(back, r);
    }
}
