//! Frequency-uniform decomposition `σ_k`, the pieces `□_k f`, the dyadic
//! smoothing `S^j`, and sharp phase-space sector masks.
//!
//! The window `ρ` is the tensor product of a 1-D exponential-smoothstep bump
//! that equals 1 on `[-1/2, 1/2]` and vanishes outside `[-3/4, 3/4]`. Because
//! the normalizer `Σ_j ρ(ξ - j)` is a product of 1-periodic factors, every
//! `σ_k` is the tensor product of one 1-D profile shifted by `k`, so the bank
//! stores that profile once and shifts by exact node offsets.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{forward_ft, inverse_ft, GridSpec, SampledFunction, SpectralFunction};

/// `h(u) = e^{-1/u}` for `u > 0`, else 0.
#[inline]
pub fn smoothstep_h(u: f64) -> f64 {
    if u > 0.0 {
        (-1.0 / u).exp()
    } else {
        0.0
    }
}

/// Even C^∞ cutoff: 1 on `|t| <= a`, 0 on `|t| >= b`, exponential smoothstep
/// in between.
#[inline]
pub fn cutoff(t: f64, a: f64, b: f64) -> f64 {
    let u = (b - t.abs()) / (b - a);
    let up = smoothstep_h(u);
    let down = smoothstep_h(1.0 - u);
    if up + down == 0.0 {
        // only reachable for u outside (0, 1)
        return if u >= 1.0 { 1.0 } else { 0.0 };
    }
    up / (up + down)
}

/// Plateau half-width of the 1-D window.
pub const RHO_PLATEAU: f64 = 0.5;
/// Support half-width of the 1-D window.
pub const RHO_SUPPORT: f64 = 0.75;

/// The 1-D window `η`.
#[inline]
pub fn eta(t: f64) -> f64 {
    cutoff(t, RHO_PLATEAU, RHO_SUPPORT)
}

/// 1-D partition profile `σ_0(t) = η(t) / Σ_j η(t - j)`.
pub fn sigma0_1d(t: f64) -> f64 {
    if t.abs() >= RHO_SUPPORT {
        return 0.0;
    }
    let base = t.round();
    let mut denom = 0.0;
    for j in -1..=1 {
        denom += eta(t - (base + j as f64));
    }
    eta(t) / denom
}

/// Profile of the `S^j` smoothing: 1 on `[-1, 1]`, 0 outside `[-3/2, 3/2]`.
#[inline]
pub fn lowpass_profile(t: f64) -> f64 {
    cutoff(t, 1.0, 1.5)
}

/// Lattice point in `ℤⁿ`; the second entry is ignored when `n = 1`.
pub type Lattice = [i64; 2];

/// Precomputed `σ_k` for `k ∈ [-K_max, K_max]ⁿ`.
#[derive(Debug, Clone)]
pub struct DecompositionBank {
    grid: GridSpec,
    k_max: usize,
    /// `σ_0` at the node offsets `-w..=w`
    profile: Vec<f64>,
    half_width: usize,
}

/// Bank settings echoed into reports.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BankInfo {
    pub grid: GridSpec,
    pub k_max: usize,
    pub plateau: f64,
    pub support: f64,
}

/// Builds the bank; requires `K_max + 2 < N/(2M)`.
pub fn build_bank(grid: GridSpec, k_max: usize) -> Result<DecompositionBank> {
    if k_max == 0 {
        return Err(Error::InvalidParameters("K_max must be positive".into()));
    }
    grid.check_guard(k_max)?;
    let m = grid.period_multiplier();
    let half_width = ((RHO_SUPPORT * m as f64).ceil() as usize).max(1);
    let profile = (0..=2 * half_width)
        .map(|i| sigma0_1d((i as f64 - half_width as f64) / m as f64))
        .collect();
    Ok(DecompositionBank {
        grid,
        k_max,
        profile,
        half_width,
    })
}

impl DecompositionBank {
    pub fn grid(&self) -> &GridSpec {
        &self.grid
    }

    pub fn k_max(&self) -> usize {
        self.k_max
    }

    pub fn info(&self) -> BankInfo {
        BankInfo {
            grid: self.grid,
            k_max: self.k_max,
            plateau: RHO_PLATEAU,
            support: RHO_SUPPORT,
        }
    }

    pub fn contains(&self, k: Lattice) -> bool {
        let kk = self.k_max as i64;
        let in_range = |v: i64| (-kk..=kk).contains(&v);
        in_range(k[0]) && (self.grid.dim() == 1 && k[1] == 0 || self.grid.dim() == 2 && in_range(k[1]))
    }

    /// All lattice points of the bank, in lexicographic order.
    pub fn lattice(&self) -> Vec<Lattice> {
        let kk = self.k_max as i64;
        if self.grid.dim() == 1 {
            (-kk..=kk).map(|k| [k, 0]).collect()
        } else {
            (-kk..=kk)
                .flat_map(|a| (-kk..=kk).map(move |b| [a, b]))
                .collect()
        }
    }

    /// Lattice points with `‖k‖_∞ <= r`.
    pub fn lattice_within(&self, r: usize) -> Vec<Lattice> {
        let r = r.min(self.k_max) as i64;
        self.lattice()
            .into_iter()
            .filter(|k| k[0].abs() <= r && k[1].abs() <= r)
            .collect()
    }

    /// Half-width (in nodes) of the support of each 1-D factor.
    pub fn half_width(&self) -> usize {
        self.half_width
    }

    /// 1-D factor `σ_0(ξ_i - k_i)` at axis index `idx`.
    #[inline]
    pub fn factor(&self, k: i64, idx: usize) -> f64 {
        let center = (self.grid.samples_per_axis() / 2) as i64 + k * self.grid.period_multiplier() as i64;
        let off = idx as i64 - center;
        if off.unsigned_abs() as usize > self.half_width {
            0.0
        } else {
            self.profile[(off + self.half_width as i64) as usize]
        }
    }

    /// `σ_k` at a flat frequency node.
    pub fn sigma(&self, k: Lattice, flat: usize) -> f64 {
        let a = self.grid.axes(flat);
        if self.grid.dim() == 1 {
            self.factor(k[0], a[0])
        } else {
            self.factor(k[0], a[0]) * self.factor(k[1], a[1])
        }
    }

    /// Axis-index range `[lo, hi]` covering the support of `σ_k` along one axis.
    pub fn support_range(&self, k: i64) -> (usize, usize) {
        let center = (self.grid.samples_per_axis() / 2) as i64 + k * self.grid.period_multiplier() as i64;
        let lo = (center - self.half_width as i64).max(0) as usize;
        let hi = ((center + self.half_width as i64) as usize).min(self.grid.samples_per_axis() - 1);
        (lo, hi)
    }

    /// Dense field of `σ_k` on the frequency grid.
    pub fn symbol(&self, k: Lattice) -> Result<Vec<f64>> {
        self.check(k)?;
        Ok((0..self.grid.len()).map(|i| self.sigma(k, i)).collect())
    }

    pub(crate) fn check(&self, k: Lattice) -> Result<()> {
        if self.contains(k) {
            Ok(())
        } else {
            Err(Error::OutsideBank(k[..self.grid.dim()].to_vec()))
        }
    }

    /// `σ_k · F f` on the frequency grid.
    pub fn localize(&self, k: Lattice, spectrum: &SpectralFunction) -> Result<SpectralFunction> {
        self.check(k)?;
        if spectrum.grid() != &self.grid {
            return Err(Error::GridMismatch);
        }
        let vals = spectrum
            .values()
            .iter()
            .enumerate()
            .map(|(i, v)| v * self.sigma(k, i))
            .collect();
        SpectralFunction::new(self.grid, vals)
    }
}

/// `□_k f = F^{-1}[σ_k F f]`.
pub fn box_op(bank: &DecompositionBank, k: Lattice, f: &SampledFunction) -> Result<SampledFunction> {
    if f.grid() != bank.grid() {
        return Err(Error::GridMismatch);
    }
    let spec = forward_ft(f);
    Ok(inverse_ft(&bank.localize(k, &spec)?))
}

/// `S^j f = F^{-1}[ψ(2^{-j} ξ) F f]` with a tensor-product profile.
pub fn dyadic_lowpass(f: &SampledFunction, j: u32) -> SampledFunction {
    let grid = *f.grid();
    let scale = 0.5f64.powi(j as i32);
    let axis: Vec<f64> = (0..grid.samples_per_axis())
        .map(|i| lowpass_profile(grid.xi_coord(i) * scale))
        .collect();
    let spec = forward_ft(f);
    let vals = spec
        .values()
        .iter()
        .enumerate()
        .map(|(i, v)| {
            let a = grid.axes(i);
            let w = if grid.dim() == 1 { axis[a[0]] } else { axis[a[0]] * axis[a[1]] };
            v * w
        })
        .collect();
    inverse_ft(&SpectralFunction::new(grid, vals).expect("same grid"))
}

/// Central cube `P_R` or one of the `2ⁿ` sectors `P_R(ε)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SectorKind {
    Cube,
    /// `ε_j = 0` selects `ξ_j >= 0`, `ε_j = 1` selects `ξ_j < 0`
    Sector { eps: [u8; 2] },
}

/// 0/1 indicator of a phase-space region on the frequency grid.
#[derive(Debug, Clone, PartialEq)]
pub struct SectorMask {
    grid: GridSpec,
    kind: SectorKind,
    radius: f64,
    values: Vec<bool>,
}

impl SectorMask {
    pub fn new(grid: GridSpec, kind: SectorKind, radius: f64) -> Result<Self> {
        if !(radius > 0.0) || !radius.is_finite() {
            return Err(Error::InvalidParameters(format!("sector radius {radius}")));
        }
        if let SectorKind::Sector { eps } = kind {
            if eps.iter().any(|&e| e > 1) || (grid.dim() == 1 && eps[1] != 0) {
                return Err(Error::InvalidParameters(format!("sign pattern {eps:?}")));
            }
        }
        let values = (0..grid.len())
            .map(|i| {
                let xi = grid.xi_node(i);
                let xi = &xi[..grid.dim()];
                let in_cube = xi.iter().all(|v| v.abs() <= radius);
                match kind {
                    SectorKind::Cube => in_cube,
                    SectorKind::Sector { eps } => {
                        !in_cube
                            && xi.iter().zip(eps).all(|(&v, e)| if e == 0 { v >= 0.0 } else { v < 0.0 })
                    }
                }
            })
            .collect();
        Ok(Self {
            grid,
            kind,
            radius,
            values,
        })
    }

    /// The cube followed by all `2ⁿ` sectors.
    pub fn all(grid: GridSpec, radius: f64) -> Result<Vec<Self>> {
        let mut out = vec![Self::new(grid, SectorKind::Cube, radius)?];
        for eps in sign_patterns(grid.dim()) {
            out.push(Self::new(grid, SectorKind::Sector { eps }, radius)?);
        }
        Ok(out)
    }

    pub fn grid(&self) -> &GridSpec {
        &self.grid
    }

    pub fn kind(&self) -> SectorKind {
        self.kind
    }

    pub fn radius(&self) -> f64 {
        self.radius
    }

    pub fn values(&self) -> &[bool] {
        &self.values
    }
}

/// Sign patterns `ε ∈ {0,1}ⁿ`.
pub fn sign_patterns(n: usize) -> Vec<[u8; 2]> {
    if n == 1 {
        vec![[0, 0], [1, 0]]
    } else {
        vec![[0, 0], [0, 1], [1, 0], [1, 1]]
    }
}

/// `F^{-1}[χ F f]` for the mask's indicator `χ`.
pub fn sector_project(f: &SampledFunction, mask: &SectorMask) -> Result<SampledFunction> {
    if f.grid() != mask.grid() {
        return Err(Error::GridMismatch);
    }
    let spec = forward_ft(f);
    let zero = Complex64::new(0.0, 0.0);
    let vals = spec
        .values()
        .iter()
        .zip(mask.values())
        .map(|(&v, &on)| if on { v } else { zero })
        .collect();
    Ok(inverse_ft(&SpectralFunction::new(*f.grid(), vals)?))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::lp_norm_values;

    #[test]
    fn cutoff_shape() {
        assert_eq!(eta(0.0), 1.0);
        assert_eq!(eta(0.5), 1.0);
        assert_eq!(eta(-0.5), 1.0);
        assert_eq!(eta(0.75), 0.0);
        assert_eq!(eta(1.0), 0.0);
        assert!(eta(0.6) > 0.0 && eta(0.6) < 1.0);
        // prescribed transition formula on [1/2, 1]
        let t: f64 = 0.7;
        let direct = smoothstep_h(2.0 - 2.0 * t) / (smoothstep_h(2.0 - 2.0 * t) + smoothstep_h(2.0 * t - 1.0));
        assert!((cutoff(t, 0.5, 1.0) - direct).abs() < 1e-15);
        assert_eq!(lowpass_profile(1.0), 1.0);
        assert_eq!(lowpass_profile(1.5), 0.0);
    }

    #[test]
    fn profile_properties() {
        for i in -2000..=2000 {
            let t = i as f64 / 1000.0;
            let s = sigma0_1d(t);
            assert!((0.0..=1.0).contains(&s));
            if t.abs() >= RHO_SUPPORT {
                assert_eq!(s, 0.0);
            }
            if t.abs() <= 0.25 {
                assert_eq!(s, 1.0);
            }
            if t.abs() <= 0.5 {
                assert!(s >= 0.5);
            }
            let total = sigma0_1d(t - 1.0) + sigma0_1d(t) + sigma0_1d(t + 1.0);
            if t.abs() <= 0.5 {
                assert!((total - 1.0).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn guard_and_range() {
        let g = GridSpec::new(1, 4, 64).unwrap();
        // N/(2M) = 8 -> K_max must stay below 6
        assert!(build_bank(g, 5).is_ok());
        assert!(matches!(build_bank(g, 6), Err(Error::AliasingGuard { .. })));
        let bank = build_bank(g, 5).unwrap();
        assert!(matches!(box_op(&bank, [6, 0], &SampledFunction::zeros(g)), Err(Error::OutsideBank(_))));
        let zero = box_op(&bank, [2, 0], &SampledFunction::zeros(g)).unwrap();
        assert_eq!(zero.max_abs(), 0.0);
    }

    #[test]
    fn partition_of_unity_1d_and_2d() {
        for (n, m, size, k_max) in [(1, 4, 512, 32), (2, 4, 128, 8)] {
            let g = GridSpec::new(n, m, size).unwrap();
            let bank = build_bank(g, k_max).unwrap();
            let lattice = bank.lattice();
            let mut worst: f64 = 0.0;
            for i in 0..g.len() {
                let xi = g.xi_node(i);
                if xi[0].abs().max(xi[1].abs()) <= (k_max - 1) as f64 {
                    let s: f64 = lattice.iter().map(|&k| bank.sigma(k, i)).sum();
                    worst = worst.max((s - 1.0).abs());
                }
            }
            assert!(worst < 1e-12, "n = {n}: {worst}");
        }
    }

    #[test]
    fn shift_identity_and_support() {
        let g = GridSpec::new(2, 3, 64).unwrap();
        let bank = build_bank(g, 4).unwrap();
        let m = g.period_multiplier();
        for k in [[1i64, -2], [3, 3], [-4, 0]] {
            for i in 0..g.len() {
                let a = g.axes(i);
                let s = bank.sigma(k, i);
                let xi = g.xi_node(i);
                if (xi[0] - k[0] as f64).abs() > 1.0 || (xi[1] - k[1] as f64).abs() > 1.0 {
                    assert_eq!(s, 0.0);
                }
                let b0 = a[0] as i64 - k[0] * m as i64;
                let b1 = a[1] as i64 - k[1] * m as i64;
                if (0..64).contains(&b0) && (0..64).contains(&b1) {
                    let shifted = g.flat([b0 as usize, b1 as usize]);
                    assert_eq!(s, bank.sigma([0, 0], shifted));
                }
            }
        }
    }

    #[test]
    fn lowpass_and_sectors() {
        let g = GridSpec::new(1, 8, 512).unwrap();
        let f = SampledFunction::from_fn(g, |x| {
            Complex64::from_polar((-x[0] * x[0] / 8.0).exp(), 6.0 * x[0])
        })
        .unwrap();
        // spectrum near ξ = -6 (the +i kernel reflects): j = 0 leaves essentially nothing
        let low = dyadic_lowpass(&f, 0);
        assert!(low.max_abs() < 1e-6 * f.max_abs());
        let high = dyadic_lowpass(&f, 4);
        let err = high.sub(&f).unwrap().max_abs();
        assert!(err < 1e-10, "{err}");

        let masks = SectorMask::all(g, 2.0).unwrap();
        let mut total = SampledFunction::zeros(g);
        for mask in &masks {
            let part = sector_project(&f, mask).unwrap();
            let twice = sector_project(&part, mask).unwrap();
            assert!(twice.sub(&part).unwrap().max_abs() < 1e-12);
            total = total.add(&part).unwrap();
        }
        assert!(total.sub(&f).unwrap().max_abs() < 1e-12);
        let covered: usize = (0..g.len())
            .map(|i| masks.iter().filter(|m| m.values()[i]).count())
            .sum();
        assert_eq!(covered, g.len());
    }

    #[test]
    fn box_norm_constant_across_k() {
        let g = GridSpec::new(1, 4, 512).unwrap();
        let bank = build_bank(g, 20).unwrap();
        let imp = SampledFunction::impulse(g);
        let base = lp_norm_values(box_op(&bank, [0, 0], &imp).unwrap().values(), g.dx(), 1.0);
        for k in [-7, 3, 19] {
            let v = lp_norm_values(box_op(&bank, [k, 0], &imp).unwrap().values(), g.dx(), 1.0);
            assert!((v - base).abs() < 1e-10 * base);
        }
    }
}
