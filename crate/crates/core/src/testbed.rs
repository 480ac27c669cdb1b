//! Test families with closed-form modulation norms.
//!
//! A lattice family is `f = ψ · Σ_k a_k e_k` where `ψ` has spectrum inside
//! `(-ε, ε)ⁿ` and `e_k` is the grid mode whose spectrum sits at `ξ = k`.
//! Under the `e^{+ix·ξ}` forward kernel that mode is `e^{-ik·x}`, so that
//! `F f = Σ a_k Fψ(· - k)` and `□_k f = a_k e_k ψ` hold literally.

use std::collections::BTreeMap;
use std::f64::consts::PI;

use num_complex::Complex64;
use num_traits::ToPrimitive;
use serde::{Deserialize, Serialize};

use crate::decomp::{cutoff, Lattice};
use crate::error::{Error, Result};
use crate::exponent::{rational_str, ExtendedExponent, Rational};
use crate::grid::{inverse_ft, lp_norm_values, pointwise_product, GridSpec, SampledFunction, SpectralFunction};
use crate::norm::{lattice_weight, lq_reduce, SpaceParams};

/// Minimum number of frequency nodes inside `(-ε, ε)` per axis.
pub const MIN_PSI_NODES: usize = 8;

/// Real `ψ` with `ψ(0) = 1` and spectrum a C^∞ bump inside `(-ε, ε)ⁿ`.
#[derive(Debug, Clone, PartialEq)]
pub struct BandLimitedPsi {
    function: SampledFunction,
    eps: f64,
    leakage: f64,
}

impl BandLimitedPsi {
    pub fn function(&self) -> &SampledFunction {
        &self.function
    }

    pub fn eps(&self) -> f64 {
        self.eps
    }

    /// `max |ψ|` on the boundary of the fundamental cell, relative to `ψ(0)`.
    pub fn leakage(&self) -> f64 {
        self.leakage
    }

    pub fn lp(&self, p: ExtendedExponent) -> f64 {
        crate::grid::lp_norm(&self.function, p)
    }

    /// `‖ψ²‖_{L_p}`.
    pub fn square_lp(&self, p: ExtendedExponent) -> f64 {
        let sq = pointwise_product(&self.function, &self.function).expect("same grid");
        crate::grid::lp_norm(&sq, p)
    }
}

/// Builds `ψ` in the spectrum from the exponential smoothstep bump on
/// `(-ε, ε)` (no plateau, for faster spatial decay), then normalizes by the
/// computed `ψ(0)`.
pub fn make_band_limited_psi(grid: GridSpec, eps: f64) -> Result<BandLimitedPsi> {
    if !(eps > 0.0 && eps < 0.5) {
        return Err(Error::InvalidParameters(format!("ε = {eps} not in (0, 1/2)")));
    }
    let inside = (0..grid.samples_per_axis())
        .filter(|&i| grid.xi_coord(i).abs() < eps)
        .count();
    if inside < MIN_PSI_NODES {
        return Err(Error::InvalidParameters(format!(
            "ε = {eps} covers {inside} frequency nodes, need {MIN_PSI_NODES}"
        )));
    }
    let profile = |t: f64| cutoff(t / eps, 0.0, 1.0);
    let spec = SpectralFunction::from_fn(grid, |xi| {
        let v = if grid.dim() == 1 { profile(xi[0]) } else { profile(xi[0]) * profile(xi[1]) };
        Complex64::new(v, 0.0)
    })?;
    let raw = inverse_ft(&spec);
    let at0 = raw.values()[grid.origin()].re;
    let function = raw.map(|v| Complex64::new(v.re / at0, 0.0));
    let size = grid.samples_per_axis();
    let leakage = (0..grid.len())
        .filter(|&i| grid.axes(i)[..grid.dim()].iter().any(|&a| a == 0 || a == size - 1))
        .map(|i| function.values()[i].norm())
        .fold(0.0, f64::max);
    Ok(BandLimitedPsi { function, eps, leakage })
}

/// Named coefficient sequences from the counterexample constructions.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "kebab-case")]
pub enum Family {
    /// `a_k = δ_{k,ℓ}`
    SingleMode { ell: Vec<i64> },
    /// `a_k = k₁^{-1/q}` on the ray `k = (k₁, 0)`, `1 <= k₁ <= N`; `a_k = 1` for `q = ∞`
    Power { q: ExtendedExponent },
    /// `a_k = (k₁ log(2 + k₁))^{-1}` on the ray
    LogRay,
    /// `a_k = ⟨k⟩^{α}` on the cube `‖k‖_∞ <= N`
    Bracket {
        #[serde(with = "rational_str")]
        alpha: Rational,
    },
    /// `a_k = ⟨k⟩^{-n} (log⟨k⟩)^{-(1+δ)/q}` for `0 < ‖k‖_∞ <= N`
    LogPower { delta: f64, q: ExtendedExponent },
    /// `a_k = 1` on the cube `‖k‖_∞ <= N`
    Constant,
    Custom,
}

impl Family {
    pub fn tag(&self) -> &'static str {
        match self {
            Family::SingleMode { .. } => "single-mode",
            Family::Power { .. } => "power",
            Family::LogRay => "log-ray",
            Family::Bracket { .. } => "bracket",
            Family::LogPower { .. } => "log-power",
            Family::Constant => "constant",
            Family::Custom => "custom",
        }
    }
}

/// Finitely supported `(a_k)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LatticeCoefficients {
    pub n: usize,
    #[serde(flatten)]
    pub family: Family,
    pub cutoff: usize,
    /// sorted by lattice point; zero coefficients are not stored
    pub entries: Vec<(Lattice, Complex64)>,
}

impl LatticeCoefficients {
    pub fn custom(n: usize, entries: impl IntoIterator<Item = (Lattice, Complex64)>) -> Result<Self> {
        let mut map = BTreeMap::new();
        for (k, a) in entries {
            if !a.re.is_finite() || !a.im.is_finite() {
                return Err(Error::InvalidParameters(format!("non-finite coefficient at {k:?}")));
            }
            if n == 1 && k[1] != 0 {
                return Err(Error::InvalidParameters(format!("{k:?} is not a 1-D lattice point")));
            }
            *map.entry(k).or_insert(Complex64::new(0.0, 0.0)) += a;
        }
        let entries: Vec<_> = map.into_iter().filter(|(_, a)| *a != Complex64::new(0.0, 0.0)).collect();
        let cutoff = entries.iter().map(|(k, _)| k[0].unsigned_abs().max(k[1].unsigned_abs()) as usize).max().unwrap_or(0);
        Ok(Self {
            n,
            family: Family::Custom,
            cutoff,
            entries,
        })
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Largest `‖k‖_∞` in the support.
    pub fn radius(&self) -> usize {
        self.entries
            .iter()
            .map(|(k, _)| k[0].unsigned_abs().max(k[1].unsigned_abs()) as usize)
            .max()
            .unwrap_or(0)
    }

    pub fn get(&self, k: Lattice) -> Complex64 {
        self.entries
            .binary_search_by(|(kk, _)| kk.cmp(&k))
            .map(|i| self.entries[i].1)
            .unwrap_or_default()
    }

    /// Discrete convolution `(a * b)_m = Σ_k a_k b_{m-k}`.
    pub fn convolve(&self, other: &Self) -> Result<Self> {
        if self.n != other.n {
            return Err(Error::DimensionMismatch(self.n, other.n));
        }
        if self.is_empty() || other.is_empty() {
            return Self::custom(self.n, []);
        }
        let r = (self.radius() + other.radius()) as i64;
        let side = (2 * r + 1) as usize;
        let rows = if self.n == 1 { 1 } else { side };
        let mut dense = vec![Complex64::new(0.0, 0.0); side * rows];
        let idx = |m: Lattice| -> usize {
            if self.n == 1 {
                (m[0] + r) as usize
            } else {
                (m[0] + r) as usize * side + (m[1] + r) as usize
            }
        };
        for (k, a) in &self.entries {
            for (l, b) in &other.entries {
                dense[idx([k[0] + l[0], k[1] + l[1]])] += a * b;
            }
        }
        let mut entries = Vec::new();
        for (i, &v) in dense.iter().enumerate() {
            let m = if self.n == 1 {
                [i as i64 - r, 0]
            } else {
                [(i / side) as i64 - r, (i % side) as i64 - r]
            };
            if v != Complex64::new(0.0, 0.0) {
                entries.push((m, v));
            }
        }
        Self::custom(self.n, entries)
    }
}

fn cube(n: usize, radius: i64) -> Vec<Lattice> {
    if n == 1 {
        (-radius..=radius).map(|k| [k, 0]).collect()
    } else {
        (-radius..=radius)
            .flat_map(|a| (-radius..=radius).map(move |b| [a, b]))
            .collect()
    }
}

/// The cited sequence restricted to `‖k‖_∞ <= cutoff`.
pub fn coefficient_family(family: &Family, n: usize, cutoff: usize) -> Result<LatticeCoefficients> {
    if n != 1 && n != 2 {
        return Err(Error::InvalidParameters(format!("dimension {n}")));
    }
    let big = cutoff as i64;
    let real = |v: f64| Complex64::new(v, 0.0);
    let entries: Vec<(Lattice, Complex64)> = match family {
        Family::SingleMode { ell } => {
            if ell.len() != n {
                return Err(Error::InvalidParameters(format!("mode {ell:?} in dimension {n}")));
            }
            let k = if n == 1 { [ell[0], 0] } else { [ell[0], ell[1]] };
            vec![(k, real(1.0))]
        }
        Family::Power { q } => {
            if q.is_one() {
                return Err(Error::InvalidParameters("power family needs q > 1".into()));
            }
            let inv = q.recip().to_f64().unwrap_or(0.0);
            (1..=big).map(|k| ([k, 0], real((k as f64).powf(-inv)))).collect()
        }
        Family::LogRay => (1..=big)
            .map(|k| ([k, 0], real(1.0 / (k as f64 * (2.0 + k as f64).ln()))))
            .collect(),
        Family::Bracket { alpha } => {
            let a = alpha.to_f64().unwrap_or(f64::NAN);
            cube(n, big).into_iter().map(|k| (k, real(lattice_weight(k, a)))).collect()
        }
        Family::LogPower { delta, q } => {
            if !(*delta > 0.0) || q.is_infinite() || q.is_one() {
                return Err(Error::InvalidParameters(format!("log-power needs δ > 0 and 1 < q < ∞, got δ = {delta}, q = {q}")));
            }
            let e = (1.0 + delta) / q.to_f64();
            cube(n, big)
                .into_iter()
                .filter(|k| *k != [0, 0])
                .map(|k| {
                    let b = lattice_weight(k, 1.0);
                    (k, real(b.powf(-(n as f64)) * b.ln().powf(-e)))
                })
                .collect()
        }
        Family::Constant => cube(n, big).into_iter().map(|k| (k, real(1.0))).collect(),
        Family::Custom => {
            return Err(Error::InvalidParameters("custom coefficients have no generator".into()));
        }
    };
    let mut c = LatticeCoefficients::custom(n, entries)?;
    c.family = family.clone();
    c.cutoff = cutoff;
    Ok(c)
}

/// `f = ψ · Σ a_k e_k` sampled on ψ's grid.
pub fn make_lattice_modulated(psi: &BandLimitedPsi, coeffs: &LatticeCoefficients) -> Result<SampledFunction> {
    let grid = *psi.function().grid();
    if coeffs.n != grid.dim() {
        return Err(Error::DimensionMismatch(coeffs.n, grid.dim()));
    }
    grid.check_guard(coeffs.radius())?;
    // the inverse transform of a single node value c at ξ = k is (2π)^{-n/2} Δξⁿ c e_k
    let scale = (2.0 * PI).powf(grid.dim() as f64 / 2.0) / grid.dual_cell_volume();
    let mut spec = vec![Complex64::new(0.0, 0.0); grid.len()];
    for (k, a) in &coeffs.entries {
        let i0 = grid.integer_freq_index(k[0]).expect("guarded");
        let flat = if grid.dim() == 1 {
            i0
        } else {
            grid.flat([i0, grid.integer_freq_index(k[1]).expect("guarded")])
        };
        spec[flat] = a * scale;
    }
    let poly = inverse_ft(&SpectralFunction::new(grid, spec)?);
    pointwise_product(psi.function(), &poly)
}

/// Closed-form value and the formula it came from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OracleNorm {
    pub value: f64,
    pub formula: String,
}

/// `‖ψ‖_{L_p} (Σ_k |a_k ⟨k⟩^s|^q)^{1/q}`.
pub fn oracle_lattice_norm(coeffs: &LatticeCoefficients, psi_lp: f64, params: SpaceParams) -> OracleNorm {
    let s = params.s_f64();
    let seq = lq_reduce(
        coeffs.entries.iter().map(|(k, a)| a.norm() * lattice_weight(*k, s)),
        params.q.to_f64(),
        1.0,
    );
    OracleNorm {
        value: psi_lp * seq,
        formula: "|psi|_Lp * |(a_k <k>^s)|_lq".into(),
    }
}

/// Product norm through the coefficient convolution; needs `ε < 1/4` so the
/// product modes stay separated by the decomposition.
pub fn oracle_product_norm(
    c1: &LatticeCoefficients,
    c2: &LatticeCoefficients,
    psi_sq_lp: f64,
    eps: f64,
    params: SpaceParams,
) -> Result<OracleNorm> {
    if !(eps < 0.25) {
        return Err(Error::Precondition(format!("product oracle needs ε < 1/4, got {eps}")));
    }
    let conv = c1.convolve(c2)?;
    let mut out = oracle_lattice_norm(&conv, psi_sq_lp, params);
    out.formula = "|psi^2|_Lp * |(<m>^s (a*b)_m)|_lq".into();
    Ok(out)
}

/// `e^{-|x|²/(2w²)} e_{k₀}` for corpus building.
pub fn modulated_gaussian(grid: GridSpec, width: f64, k0: [f64; 2]) -> SampledFunction {
    SampledFunction::from_fn(grid, |x| {
        let r2 = x[0] * x[0] + x[1] * x[1];
        Complex64::from_polar((-r2 / (2.0 * width * width)).exp(), -(k0[0] * x[0] + k0[1] * x[1]))
    })
    .expect("finite Gaussian")
}

/// Raw `L_p` of a sample slice on `grid`.
pub fn samples_lp(grid: &GridSpec, values: &[Complex64], p: ExtendedExponent) -> f64 {
    lp_norm_values(values, grid.cell_volume(), p.to_f64())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::decomp::{box_op, build_bank};
    use crate::exponent::INF;
    use crate::forward_ft;

    fn psi_grid() -> GridSpec {
        GridSpec::new(1, 32, 2048).unwrap()
    }

    #[test]
    fn psi_properties() {
        let g = psi_grid();
        let psi = make_band_limited_psi(g, 0.2).unwrap();
        assert!((psi.function().values()[g.origin()].re - 1.0).abs() < 1e-10);
        assert!(psi.function().is_real(0.0));
        let spec = forward_ft(psi.function());
        let peak = spec.max_abs();
        for i in 0..g.len() {
            if g.xi_coord(i).abs() >= 0.2 {
                assert!(spec.values()[i].norm() < 1e-13 * peak);
            }
        }
        // the periodized ψ is exact on the torus; the boundary value is only a diagnostic
        assert!(psi.leakage() < 1e-2, "{}", psi.leakage());
        assert!(make_band_limited_psi(GridSpec::new(1, 4, 256).unwrap(), 0.2).is_err());
        assert!(make_band_limited_psi(g, 0.6).is_err());
    }

    #[test]
    fn box_picks_single_mode() {
        let g = psi_grid();
        let psi = make_band_limited_psi(g, 0.2).unwrap();
        let bank = build_bank(g, 20).unwrap();
        let c = coefficient_family(&Family::SingleMode { ell: vec![3] }, 1, 0).unwrap();
        let f = make_lattice_modulated(&psi, &c).unwrap();
        for k in [2, 3, 4, -3] {
            let piece = box_op(&bank, [k, 0], &f).unwrap();
            let expected = if k == 3 { f.clone() } else { SampledFunction::zeros(g) };
            assert!(piece.sub(&expected).unwrap().max_abs() < 1e-12, "k = {k}");
        }
    }

    #[test]
    fn families() {
        let c = coefficient_family(&Family::Power { q: ExtendedExponent::two() }, 1, 4).unwrap();
        assert_eq!(c.entries.len(), 4);
        for (k, a) in &c.entries {
            assert!((a.re - (k[0] as f64).powf(-0.5)).abs() < 1e-15);
        }
        let c = coefficient_family(&Family::Constant, 1, 0).unwrap();
        assert_eq!(c.entries, vec![([0, 0], Complex64::new(1.0, 0.0))]);
        let q = ExtendedExponent::ratio(3, 2);
        let c = coefficient_family(&Family::LogPower { delta: 0.5, q }, 1, 5).unwrap();
        assert_eq!(c.get([0, 0]), Complex64::default());
        let b = 10f64.sqrt();
        assert!((c.get([-3, 0]).re - b.powi(-1) * b.ln().powf(-1.0)).abs() < 1e-15);
        assert!(coefficient_family(&Family::Power { q: ExtendedExponent::one() }, 1, 4).is_err());
        assert_eq!(coefficient_family(&Family::Constant, 2, 1).unwrap().entries.len(), 9);
    }

    #[test]
    fn oracles() {
        let params = SpaceParams::int(0, ExtendedExponent::two(), ExtendedExponent::two(), 1);
        let c = coefficient_family(&Family::Constant, 1, 1).unwrap();
        assert!((oracle_lattice_norm(&c, 2.0, params).value - 2.0 * 3f64.sqrt()).abs() < 1e-14);
        let single = coefficient_family(&Family::SingleMode { ell: vec![5] }, 1, 0).unwrap();
        let p1 = params.with_s(Rational::from_integer(2));
        assert!((oracle_lattice_norm(&single, 1.5, p1).value - 1.5 * 26.0).abs() < 1e-12);
        let empty = LatticeCoefficients::custom(1, []).unwrap();
        assert_eq!(oracle_lattice_norm(&empty, 1.0, params).value, 0.0);

        let minus = coefficient_family(&Family::SingleMode { ell: vec![-5] }, 1, 0).unwrap();
        assert!((oracle_product_norm(&single, &minus, 0.7, 0.2, p1).unwrap().value - 0.7).abs() < 1e-15);
        assert_eq!(oracle_product_norm(&single, &empty, 0.7, 0.2, p1).unwrap().value, 0.0);
        let pinf = params.with_q(INF);
        assert!((oracle_product_norm(&c, &c, 0.5, 0.2, pinf).unwrap().value - 1.5).abs() < 1e-15);
        assert!(oracle_product_norm(&c, &c, 0.5, 0.3, pinf).is_err());
    }

    #[test]
    fn lattice_function_is_exact() {
        let g = GridSpec::new(1, 16, 1024).unwrap();
        let psi = make_band_limited_psi(g, 0.45).unwrap();
        let c = coefficient_family(&Family::Power { q: ExtendedExponent::two() }, 1, 6).unwrap();
        let f = make_lattice_modulated(&psi, &c).unwrap();
        for i in (0..g.len()).step_by(37) {
            let x = g.x_coord(i);
            let sum: Complex64 = c.entries.iter().map(|(k, a)| a * Complex64::from_polar(1.0, -(k[0] as f64) * x)).sum();
            assert!((f.values()[i] - psi.function().values()[i] * sum).norm() < 1e-12);
        }
        let empty = LatticeCoefficients::custom(1, []).unwrap();
        assert_eq!(make_lattice_modulated(&psi, &empty).unwrap().max_abs(), 0.0);
        let wide = coefficient_family(&Family::Constant, 1, 40).unwrap();
        assert!(matches!(make_lattice_modulated(&psi, &wide), Err(Error::AliasingGuard { .. })));
    }
}
