//! Uniform periodic grids and the `e^{+ix·ξ}` Fourier transform.
//!
//! A [`GridSpec`] discretizes the torus of period `L = 2πM` per axis with `N`
//! samples, so `Δx = L/N` and the dual grid has spacing `Δξ = 1/M`. Integer
//! frequencies land exactly on frequency nodes, which makes lattice
//! modulations `e^{ik·x}` exact grid modes.
//!
//! Both sample arrays are stored *centered*: index `0` of an axis is the
//! coordinate `-L/2` (space) or `-N/(2M)` (frequency), and index `N/2` is the
//! origin. For an `n = 2` grid the flat layout is row-major with axis 0 as the
//! slow index.
//!
//! The forward transform uses the `+i` kernel,
//! `F f(ξ) = (2π)^{-n/2} ∫ f(x) e^{+ix·ξ} dx`, realized by an unnormalized
//! inverse DFT; the inverse transform uses the `-i` kernel and a forward DFT.
//! Relative to the usual `e^{-ix·ξ}` convention this is a reflection
//! `ξ ↦ -ξ` of the frequency index.

use std::cell::RefCell;
use std::collections::HashMap;
use std::f64::consts::PI;
use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exponent::ExtendedExponent;
use crate::sum::NeumaierSum;

/// Grid geometry: dimension `n`, period multiplier `M`, samples per axis `N`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct GridSpec {
    n: usize,
    #[serde(rename = "M")]
    m: usize,
    #[serde(rename = "N")]
    size: usize,
}

impl GridSpec {
    pub fn new(n: usize, m: usize, size: usize) -> Result<Self> {
        if n != 1 && n != 2 {
            return Err(Error::InvalidGrid(format!("dimension {n} not in {{1, 2}}")));
        }
        if m == 0 {
            return Err(Error::InvalidGrid("period multiplier M must be positive".into()));
        }
        if size < 4 || !size.is_power_of_two() {
            return Err(Error::InvalidGrid(format!(
                "N = {size} must be an even power of two >= 4"
            )));
        }
        Ok(Self { n, m, size })
    }

    /// Smallest power-of-two grid for period multiplier `m` whose frequency
    /// range leaves room for lattice indices up to `k_max`.
    pub fn for_lattice(n: usize, m: usize, k_max: usize) -> Result<Self> {
        let need = 2 * m * (k_max + 3);
        let size = need.next_power_of_two().max(8);
        Self::new(n, m, size)
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn period_multiplier(&self) -> usize {
        self.m
    }

    pub fn samples_per_axis(&self) -> usize {
        self.size
    }

    /// Total number of nodes, `N^n`.
    pub fn len(&self) -> usize {
        self.size.pow(self.n as u32)
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn period(&self) -> f64 {
        2.0 * PI * self.m as f64
    }

    pub fn dx(&self) -> f64 {
        self.period() / self.size as f64
    }

    pub fn dxi(&self) -> f64 {
        1.0 / self.m as f64
    }

    /// `Δxⁿ`, the spatial cell volume.
    pub fn cell_volume(&self) -> f64 {
        self.dx().powi(self.n as i32)
    }

    /// `Δξⁿ`, the frequency cell volume.
    pub fn dual_cell_volume(&self) -> f64 {
        self.dxi().powi(self.n as i32)
    }

    /// Upper end of the (half-open) frequency range, `N/(2M)`.
    pub fn nyquist(&self) -> f64 {
        self.size as f64 / (2.0 * self.m as f64)
    }

    /// Signed offset of axis index `i` from the center.
    #[inline]
    pub fn offset(&self, i: usize) -> i64 {
        i as i64 - (self.size / 2) as i64
    }

    #[inline]
    pub fn x_coord(&self, i: usize) -> f64 {
        self.offset(i) as f64 * self.dx()
    }

    #[inline]
    pub fn xi_coord(&self, i: usize) -> f64 {
        self.offset(i) as f64 / self.m as f64
    }

    /// Axis indices of the flat node index.
    #[inline]
    pub fn axes(&self, flat: usize) -> [usize; 2] {
        if self.n == 1 {
            [flat, 0]
        } else {
            [flat / self.size, flat % self.size]
        }
    }

    #[inline]
    pub fn flat(&self, axes: [usize; 2]) -> usize {
        if self.n == 1 {
            axes[0]
        } else {
            axes[0] * self.size + axes[1]
        }
    }

    /// Flat index of the origin.
    pub fn origin(&self) -> usize {
        self.flat([self.size / 2, self.size / 2])
    }

    /// Spatial coordinates of a node (unused axes are 0).
    pub fn x_node(&self, flat: usize) -> [f64; 2] {
        let a = self.axes(flat);
        if self.n == 1 {
            [self.x_coord(a[0]), 0.0]
        } else {
            [self.x_coord(a[0]), self.x_coord(a[1])]
        }
    }

    /// Frequency coordinates of a node (unused axes are 0).
    pub fn xi_node(&self, flat: usize) -> [f64; 2] {
        let a = self.axes(flat);
        if self.n == 1 {
            [self.xi_coord(a[0]), 0.0]
        } else {
            [self.xi_coord(a[0]), self.xi_coord(a[1])]
        }
    }

    /// Frequency-node index of the integer frequency `k` on one axis.
    pub fn integer_freq_index(&self, k: i64) -> Option<usize> {
        let idx = k * self.m as i64 + (self.size / 2) as i64;
        (0..self.size as i64).contains(&idx).then_some(idx as usize)
    }

    /// Checks `N/(2M) > k_max + 2`.
    pub fn check_guard(&self, k_max: usize) -> Result<()> {
        let required = k_max as f64 + 2.0;
        if self.nyquist() > required {
            Ok(())
        } else {
            Err(Error::AliasingGuard {
                required,
                available: self.nyquist(),
            })
        }
    }
}

fn check_values(grid: &GridSpec, values: &[Complex64]) -> Result<()> {
    if values.len() != grid.len() {
        return Err(Error::SizeMismatch {
            expected: grid.len(),
            got: values.len(),
        });
    }
    if let Some(i) = values.iter().position(|v| !v.re.is_finite() || !v.im.is_finite()) {
        return Err(Error::NonFinite(i));
    }
    Ok(())
}

macro_rules! sampled_type {
    ($name:ident, $coords:ident) => {
        #[derive(Debug, Clone, PartialEq)]
        pub struct $name {
            grid: GridSpec,
            values: Vec<Complex64>,
        }

        impl $name {
            pub fn new(grid: GridSpec, values: Vec<Complex64>) -> Result<Self> {
                check_values(&grid, &values)?;
                Ok(Self { grid, values })
            }

            pub fn zeros(grid: GridSpec) -> Self {
                Self {
                    grid,
                    values: vec![Complex64::new(0.0, 0.0); grid.len()],
                }
            }

            /// Samples `f` at every node; coordinates beyond `n` are 0.
            pub fn from_fn<F: Fn([f64; 2]) -> Complex64>(grid: GridSpec, f: F) -> Result<Self> {
                let values = (0..grid.len()).map(|i| f(grid.$coords(i))).collect();
                Self::new(grid, values)
            }

            pub fn grid(&self) -> &GridSpec {
                &self.grid
            }

            pub fn values(&self) -> &[Complex64] {
                &self.values
            }

            pub fn into_values(self) -> Vec<Complex64> {
                self.values
            }

            pub fn map<F: Fn(Complex64) -> Complex64>(&self, f: F) -> Self {
                Self {
                    grid: self.grid,
                    values: self.values.iter().map(|&v| f(v)).collect(),
                }
            }

            pub fn scale(&self, c: Complex64) -> Self {
                self.map(|v| v * c)
            }

            pub fn add(&self, other: &Self) -> Result<Self> {
                self.zip(other, |a, b| a + b)
            }

            pub fn sub(&self, other: &Self) -> Result<Self> {
                self.zip(other, |a, b| a - b)
            }

            pub fn zip<F: Fn(Complex64, Complex64) -> Complex64>(
                &self,
                other: &Self,
                f: F,
            ) -> Result<Self> {
                if self.grid != other.grid {
                    return Err(Error::GridMismatch);
                }
                Ok(Self {
                    grid: self.grid,
                    values: self
                        .values
                        .iter()
                        .zip(&other.values)
                        .map(|(&a, &b)| f(a, b))
                        .collect(),
                })
            }

            /// Largest sample modulus.
            pub fn max_abs(&self) -> f64 {
                self.values.iter().fold(0.0, |m, v| m.max(v.norm()))
            }
        }
    };
}

sampled_type!(SampledFunction, x_node);
sampled_type!(SpectralFunction, xi_node);

impl SampledFunction {
    /// Discrete unit-mass impulse at the origin (`1/Δxⁿ` there, 0 elsewhere).
    pub fn impulse(grid: GridSpec) -> Self {
        let mut f = Self::zeros(grid);
        f.values[grid.origin()] = Complex64::new(1.0 / grid.cell_volume(), 0.0);
        f
    }

    pub fn is_real(&self, tol: f64) -> bool {
        self.values.iter().all(|v| v.im.abs() <= tol * (1.0 + v.re.abs()))
    }
}

#[derive(Clone, Copy, PartialEq, Eq, Hash)]
enum Kernel {
    /// `Σ x_m e^{+2πi jm/N}`
    Plus,
    /// `Σ x_m e^{-2πi jm/N}`
    Minus,
}

type PlanCache = HashMap<(usize, Kernel), Arc<dyn Fft<f64>>>;

thread_local! {
    static PLANS: RefCell<PlanCache> = RefCell::new(HashMap::new());
}

fn plan(size: usize, kernel: Kernel) -> Arc<dyn Fft<f64>> {
    PLANS.with(|cell| {
        cell.borrow_mut()
            .entry((size, kernel))
            .or_insert_with(|| {
                let mut planner = FftPlanner::new();
                match kernel {
                    Kernel::Plus => planner.plan_fft_inverse(size),
                    Kernel::Minus => planner.plan_fft_forward(size),
                }
            })
            .clone()
    })
}

/// Centered DFT along every axis, in place. For even `N` both shifts are a
/// rotation by `N/2`.
fn centered_dft(grid: &GridSpec, data: &mut [Complex64], kernel: Kernel) {
    let size = grid.samples_per_axis();
    let fft = plan(size, kernel);
    let half = size / 2;
    let mut scratch = vec![Complex64::new(0.0, 0.0); fft.get_inplace_scratch_len()];
    let mut line = vec![Complex64::new(0.0, 0.0); size];

    let mut run_line = |line: &mut [Complex64]| {
        line.rotate_left(half);
        fft.process_with_scratch(line, &mut scratch);
        line.rotate_left(half);
    };

    match grid.dim() {
        1 => run_line(data),
        _ => {
            for row in data.chunks_mut(size) {
                run_line(row);
            }
            for col in 0..size {
                for (r, slot) in line.iter_mut().enumerate() {
                    *slot = data[r * size + col];
                }
                run_line(&mut line);
                for (r, v) in line.iter().enumerate() {
                    data[r * size + col] = *v;
                }
            }
        }
    }
}

/// `F f(ξ_j) ≈ (2π)^{-n/2} Δxⁿ Σ_m f(x_m) e^{+i x_m·ξ_j}`.
pub fn forward_ft(f: &SampledFunction) -> SpectralFunction {
    let grid = *f.grid();
    let mut data = f.values().to_vec();
    forward_in_place(&grid, &mut data);
    SpectralFunction { grid, values: data }
}

/// `f(x_m) ≈ (2π)^{-n/2} Δξⁿ Σ_j F(ξ_j) e^{-i x_m·ξ_j}`.
pub fn inverse_ft(spectrum: &SpectralFunction) -> SampledFunction {
    let grid = *spectrum.grid();
    let mut data = spectrum.values().to_vec();
    inverse_in_place(&grid, &mut data);
    SampledFunction { grid, values: data }
}

pub(crate) fn forward_in_place(grid: &GridSpec, data: &mut [Complex64]) {
    centered_dft(grid, data, Kernel::Plus);
    let c = (2.0 * PI).powf(-(grid.dim() as f64) / 2.0) * grid.cell_volume();
    data.iter_mut().for_each(|v| *v *= c);
}

pub(crate) fn inverse_in_place(grid: &GridSpec, data: &mut [Complex64]) {
    centered_dft(grid, data, Kernel::Minus);
    let c = (2.0 * PI).powf(-(grid.dim() as f64) / 2.0) * grid.dual_cell_volume();
    data.iter_mut().for_each(|v| *v *= c);
}

/// Transform with the `-i` kernel as written in the STFT definition:
/// `(2π)^{-n/2} Δxⁿ Σ_m h(x_m) e^{-i x_m·ξ_j}`.
pub(crate) fn minus_kernel_transform(grid: &GridSpec, data: &mut [Complex64]) {
    centered_dft(grid, data, Kernel::Minus);
    let c = (2.0 * PI).powf(-(grid.dim() as f64) / 2.0) * grid.cell_volume();
    data.iter_mut().for_each(|v| *v *= c);
}

/// Riemann-sum `L_p` norm of raw samples with cell volume `cell`.
pub fn lp_norm_values(values: &[Complex64], cell: f64, p: f64) -> f64 {
    if p.is_infinite() {
        return values.iter().fold(0.0, |m, v| m.max(v.norm()));
    }
    if p == 2.0 {
        let s: NeumaierSum = values.iter().map(|v| v.norm_sqr()).collect();
        return (cell * s.value()).sqrt();
    }
    if p == 1.0 {
        let s: NeumaierSum = values.iter().map(|v| v.norm()).collect();
        return cell * s.value();
    }
    let s: NeumaierSum = values.iter().map(|v| v.norm().powf(p)).collect();
    (cell * s.value()).powf(1.0 / p)
}

/// `(Δxⁿ Σ |f|^p)^{1/p}`, or the grid maximum for `p = ∞`.
pub fn lp_norm(f: &SampledFunction, p: ExtendedExponent) -> f64 {
    lp_norm_values(f.values(), f.grid().cell_volume(), p.to_f64())
}

/// Value-wise product on a shared grid.
pub fn pointwise_product(f: &SampledFunction, g: &SampledFunction) -> Result<SampledFunction> {
    f.zip(g, |a, b| a * b)
}

/// `⟨ξ⟩ = (1 + |ξ|²)^{1/2}`.
#[inline]
pub fn japanese_bracket(xi: [f64; 2]) -> f64 {
    (1.0 + xi[0] * xi[0] + xi[1] * xi[1]).sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx_eq::close;

    mod approx_eq {
        pub fn close(a: f64, b: f64, tol: f64) -> bool {
            (a - b).abs() <= tol
        }
    }

    fn c(re: f64) -> Complex64 {
        Complex64::new(re, 0.0)
    }

    #[test]
    fn rejects_bad_grids() {
        assert!(GridSpec::new(3, 1, 64).is_err());
        assert!(GridSpec::new(1, 0, 64).is_err());
        assert!(GridSpec::new(1, 1, 48).is_err());
        let g = GridSpec::new(1, 1, 64).unwrap();
        assert!(SampledFunction::new(g, vec![c(0.0); 63]).is_err());
        let mut v = vec![c(0.0); 64];
        v[3] = c(f64::NAN);
        assert_eq!(SampledFunction::new(g, v), Err(Error::NonFinite(3)));
    }

    #[test]
    fn impulse_transforms_to_constant() {
        for n in [1, 2] {
            let g = GridSpec::new(n, 2, 32).unwrap();
            let spec = forward_ft(&SampledFunction::impulse(g));
            let expected = (2.0 * PI).powf(-(n as f64) / 2.0);
            for v in spec.values() {
                assert!(close(v.re, expected, 1e-12) && v.im.abs() < 1e-12);
            }
        }
    }

    #[test]
    fn zero_maps_to_zero() {
        let g = GridSpec::new(1, 4, 64).unwrap();
        let s = forward_ft(&SampledFunction::zeros(g));
        assert!(s.values().iter().all(|v| v.norm() == 0.0));
    }

    #[test]
    fn gaussian_is_self_dual() {
        let g = GridSpec::new(1, 8, 1024).unwrap();
        let f = SampledFunction::from_fn(g, |x| c((-x[0] * x[0] / 2.0).exp())).unwrap();
        let spec = forward_ft(&f);
        let mut err: f64 = 0.0;
        for i in 0..g.len() {
            let xi = g.xi_coord(i);
            err = err.max((spec.values()[i] - c((-xi * xi / 2.0).exp())).norm());
        }
        assert!(err < 1e-10, "max deviation {err}");
    }

    #[test]
    fn constant_spectrum_inverts_to_unit_impulse() {
        let g = GridSpec::new(1, 2, 64).unwrap();
        let spec = SpectralFunction::new(g, vec![c((2.0 * PI).powf(-0.5)); 64]).unwrap();
        let f = inverse_ft(&spec);
        let mass: f64 = f.values().iter().map(|v| v.re).sum::<f64>() * g.dx();
        assert!(close(mass, 1.0, 1e-12));
        for (i, v) in f.values().iter().enumerate() {
            if i != g.origin() {
                assert!(v.norm() < 1e-12);
            }
        }
    }

    /// Hand-computed single-mode identity on N = 8, M = 1: a spectrum equal to
    /// `a` at the node ξ = k and zero elsewhere inverts to
    /// `(2π)^{-1/2} Δξ a e^{-ikx}`.
    #[test]
    fn single_mode_inverse_n8() {
        let g = GridSpec::new(1, 1, 8).unwrap();
        let k = 2i64;
        let mut vals = vec![c(0.0); 8];
        vals[g.integer_freq_index(k).unwrap()] = c(3.0);
        let f = inverse_ft(&SpectralFunction::new(g, vals).unwrap());
        for i in 0..8 {
            let x = g.x_coord(i);
            let expected = Complex64::from_polar(3.0 / (2.0 * PI).sqrt(), -(k as f64) * x);
            assert!((f.values()[i] - expected).norm() < 1e-13);
        }
    }

    #[test]
    fn lp_norms() {
        let g = GridSpec::new(1, 8, 1024).unwrap();
        let one = SampledFunction::from_fn(g, |_| c(1.0)).unwrap();
        assert_eq!(lp_norm(&one, ExtendedExponent::Infinite), 1.0);
        let gauss = SampledFunction::from_fn(g, |x| c((-x[0] * x[0] / 2.0).exp())).unwrap();
        let l2 = lp_norm(&gauss, ExtendedExponent::two());
        assert!(close(l2, PI.powf(0.25), 1e-6), "{l2}");
        let modulated = SampledFunction::from_fn(g, |x| {
            Complex64::from_polar((-x[0] * x[0] / 2.0).exp(), 3.0 * x[0])
        })
        .unwrap();
        for p in [ExtendedExponent::one(), ExtendedExponent::ratio(3, 2), ExtendedExponent::Infinite] {
            assert!(close(lp_norm(&gauss, p), lp_norm(&modulated, p), 1e-12));
        }
    }

    #[test]
    fn modulated_product_adds_frequencies() {
        let g = GridSpec::new(1, 4, 256).unwrap();
        let psi = |x: f64| (-x * x / 8.0).exp();
        let f = SampledFunction::from_fn(g, |x| Complex64::from_polar(psi(x[0]), 2.0 * x[0])).unwrap();
        let h = SampledFunction::from_fn(g, |x| Complex64::from_polar(psi(x[0]), -5.0 * x[0])).unwrap();
        let prod = pointwise_product(&f, &h).unwrap();
        for i in 0..g.len() {
            let x = g.x_coord(i);
            let e = Complex64::from_polar(psi(x) * psi(x), -3.0 * x);
            assert!((prod.values()[i] - e).norm() < 1e-14);
        }
        let one = SampledFunction::from_fn(g, |_| c(1.0)).unwrap();
        assert_eq!(pointwise_product(&f, &one).unwrap(), f);
        let other = GridSpec::new(1, 4, 128).unwrap();
        assert_eq!(
            pointwise_product(&f, &SampledFunction::zeros(other)),
            Err(Error::GridMismatch)
        );
    }

    #[test]
    fn two_dimensional_axes_are_separable() {
        let g = GridSpec::new(2, 4, 128).unwrap();
        let f = SampledFunction::from_fn(g, |x| c((-(x[0] * x[0] + 2.0 * x[1] * x[1]) / 2.0).exp()))
            .unwrap();
        let spec = forward_ft(&f);
        for i in 0..g.len() {
            let xi = g.xi_node(i);
            let e = (-(xi[0] * xi[0] + xi[1] * xi[1] / 2.0) / 2.0).exp() / 2f64.sqrt();
            assert!((spec.values()[i] - c(e)).norm() < 1e-9);
        }
    }
}
