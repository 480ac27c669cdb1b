use std::f64::consts::PI;
use std::time::Instant;

use num_complex::Complex64;
use num_traits::{Signed, ToPrimitive, Zero};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{fit_line, fit_log_slope, Check, ExperimentRecord, SweepReport};
use crate::calculus::{embeds_into_linfty, is_algebra, product_verdict, superposition_exponent, ProductQuery};
use crate::decomp::{build_bank, cutoff, dyadic_lowpass, sector_project, DecompositionBank, SectorKind, SectorMask};
use crate::error::{Error, Result};
use crate::exponent::{rat, ExtendedExponent, Rational, INF};
use crate::grid::{inverse_ft, lp_norm, pointwise_product, GridSpec, SampledFunction, SpectralFunction};
use crate::norm::{
    gaussian_window, mod_norm_decomp_with, mod_norm_stft, sobolev_norm, DecompOptions, NormReport, SpaceParams,
    DEFAULT_TAIL_TOLERANCE,
};
use crate::testbed::{
    coefficient_family, make_band_limited_psi, make_lattice_modulated, modulated_gaussian, oracle_lattice_norm,
    oracle_product_norm, BandLimitedPsi, Family, LatticeCoefficients,
};

/// Grid parameters for lattice families: period multiplier and `ψ` bandwidth.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LatticeSetup {
    pub m: usize,
    pub eps: f64,
}

impl Default for LatticeSetup {
    fn default() -> Self {
        Self { m: 32, eps: 0.2 }
    }
}

/// Grid, `ψ` and a bank reaching two cells past `radius`.
pub struct LatticeContext {
    pub grid: GridSpec,
    pub psi: BandLimitedPsi,
    pub bank: DecompositionBank,
}

impl LatticeSetup {
    pub fn context(&self, n: usize, radius: usize) -> Result<LatticeContext> {
        let k_max = radius + 2;
        let grid = GridSpec::for_lattice(n, self.m, k_max)?;
        Ok(LatticeContext {
            grid,
            psi: make_band_limited_psi(grid, self.eps)?,
            bank: build_bank(grid, k_max)?,
        })
    }
}

fn decomp(f: &SampledFunction, params: SpaceParams, bank: &DecompositionBank, tol: f64) -> Result<NormReport> {
    mod_norm_decomp_with(f, params, bank, DecompOptions::tolerance(tol)).map(NormReport::without_contributions)
}

fn relative_gap(value: f64, reference: f64) -> f64 {
    if reference == 0.0 {
        value.abs()
    } else {
        (value - reference).abs() / reference.abs()
    }
}

fn max_of(values: impl IntoIterator<Item = f64>) -> f64 {
    values.into_iter().fold(0.0, f64::max)
}

/// `max/min - 1` of positive ratios.
fn spread(values: &[f64]) -> f64 {
    let hi = values.iter().cloned().fold(f64::MIN, f64::max);
    let lo = values.iter().cloned().fold(f64::MAX, f64::min);
    hi / lo - 1.0
}

/// Family parameters used when a sweep asks for "every family".
pub fn standard_families() -> Vec<Family> {
    vec![
        Family::SingleMode { ell: vec![3] },
        Family::Power { q: ExtendedExponent::two() },
        Family::LogRay,
        Family::Bracket { alpha: rat(-1, 1) },
        Family::LogPower {
            delta: 1.0,
            q: ExtendedExponent::two(),
        },
        Family::Constant,
    ]
}

#[derive(Serialize)]
struct OracleSettings<'a> {
    setup: LatticeSetup,
    cutoff: usize,
    families: &'a [Family],
}

/// Decomposition norm of `ψ Σ a_k e_k` against `‖ψ‖_{L_p} ‖(a_k ⟨k⟩^s)‖_{ℓ_q}` over
/// the product of the given exponent lists.
pub fn run_oracle_sweep(
    setup: LatticeSetup,
    families: &[Family],
    cutoff: usize,
    s_list: &[Rational],
    p_list: &[ExtendedExponent],
    q_list: &[ExtendedExponent],
) -> Result<SweepReport> {
    let mut report = SweepReport::new(
        "oracle-norm",
        OracleSettings {
            setup,
            cutoff,
            families,
        },
    );
    let mut worst = 0.0f64;
    for family in families {
        let coeffs = coefficient_family(family, 1, cutoff)?;
        let ctx = setup.context(1, coeffs.radius())?;
        let f = make_lattice_modulated(&ctx.psi, &coeffs)?;
        for &p in p_list {
            let psi_lp = ctx.psi.lp(p);
            for &s in s_list {
                for &q in q_list {
                    let start = Instant::now();
                    let params = SpaceParams::new(s, p, q, 1);
                    let rep = decomp(&f, params, &ctx.bank, DEFAULT_TAIL_TOLERANCE)?;
                    let oracle = oracle_lattice_norm(&coeffs, psi_lp, params);
                    let gap = relative_gap(rep.value, oracle.value);
                    worst = worst.max(gap);
                    let mut rec = ExperimentRecord::new("oracle-norm")
                        .input("family", family.tag())
                        .input("params", params);
                    rec.measure("norm", rep.value);
                    rec.predict("oracle", oracle.value);
                    rec.measure("gap", gap);
                    rec.note_tail(rep.tail);
                    report.records.push(rec.timed(start));
                }
            }
        }
    }
    report.push_check(Check::at_most("max_oracle_gap", worst, 0.02));
    Ok(report)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
enum Regime {
    /// `s = 0`, `a_k = k^{-1/q}` on a ray
    Decay,
    /// `q = ∞`, `0 < s < n`, `a_k = 1` on the cube
    Block,
    /// `s < 0`, `a_k = ⟨k⟩^{2|s|}` on the cube
    Growth,
}

fn regime(family: &Family, params: SpaceParams) -> Result<Regime> {
    let n = Rational::from_integer(params.n as i64);
    match family {
        Family::Power { q } if params.s.is_zero() && params.q == *q && !q.is_one() => Ok(Regime::Decay),
        Family::Constant if params.q.is_infinite() && params.s > Rational::zero() && params.s < n => Ok(Regime::Block),
        Family::Bracket { alpha } if params.s < Rational::zero() && *alpha == -params.s * 2 => Ok(Regime::Growth),
        _ => Err(Error::Precondition(format!(
            "family {} with s = {}, q = {} is not one of the counterexample regimes",
            family.tag(),
            params.s,
            params.q
        ))),
    }
}

#[derive(Serialize)]
struct CounterexampleSettings<'a> {
    setup: LatticeSetup,
    family: &'a Family,
    params: SpaceParams,
    regime: Regime,
}

/// `‖f_N · f_N‖` and `‖f_N‖²` against `N`, numerically and through the
/// coefficient convolution, with slope fits for the regime's exponents.
pub fn run_counterexample_sweep(
    family: &Family,
    params: SpaceParams,
    cutoffs: &[usize],
    setup: LatticeSetup,
) -> Result<SweepReport> {
    let regime = regime(family, params)?;
    let n = params.n as f64;
    let inv_q = params.q.recip().to_f64().unwrap_or(0.0);
    let s = params.s_f64();
    let rows: Vec<Result<ExperimentRecord>> = cutoffs
        .par_iter()
        .map(|&big| {
            let start = Instant::now();
            let coeffs = coefficient_family(family, params.n, big)?;
            let ctx = setup.context(params.n, 2 * coeffs.radius())?;
            let f = make_lattice_modulated(&ctx.psi, &coeffs)?;
            let ff = pointwise_product(&f, &f)?;
            let norm_f = decomp(&f, params, &ctx.bank, DEFAULT_TAIL_TOLERANCE)?;
            let norm_ff = decomp(&ff, params, &ctx.bank, DEFAULT_TAIL_TOLERANCE)?;
            let oracle_f = oracle_lattice_norm(&coeffs, ctx.psi.lp(params.p), params).value;
            let oracle_ff =
                oracle_product_norm(&coeffs, &coeffs, ctx.psi.square_lp(params.p), ctx.psi.eps(), params)?.value;
            let mut rec = ExperimentRecord::new("counterexample")
                .input("family", family.tag())
                .input("N", big)
                .input("grid", ctx.grid);
            rec.measure("norm", norm_f.value);
            rec.measure("norm_sq", norm_f.value * norm_f.value);
            rec.measure("product_norm", norm_ff.value);
            rec.predict("oracle_norm", oracle_f);
            rec.predict("oracle_product_norm", oracle_ff);
            rec.measure("gap_norm", relative_gap(norm_f.value, oracle_f));
            rec.measure("gap_product", relative_gap(norm_ff.value, oracle_ff));
            rec.measure("psi_leakage", ctx.psi.leakage());
            rec.note_tail(norm_f.tail);
            rec.note_tail(norm_ff.tail);
            Ok(rec.timed(start))
        })
        .collect();
    let records = rows.into_iter().collect::<Result<Vec<_>>>()?;
    let mut report = SweepReport::new(
        "counterexample",
        CounterexampleSettings {
            setup,
            family,
            params,
            regime,
        },
    );
    let xs: Vec<f64> = cutoffs.iter().map(|&c| c as f64).collect();
    let series = |key: &str| -> Vec<f64> { records.iter().map(|r| r.measured[key]).collect() };
    let product: Vec<(f64, f64)> = xs.iter().cloned().zip(series("product_norm")).collect();
    let squared: Vec<(f64, f64)> = xs.iter().cloned().zip(series("norm_sq")).collect();
    let gap = max_of(records.iter().map(|r| r.measured["gap_product"].max(r.measured["gap_norm"])));
    report.records = records;
    report.push_check(Check::at_most("max_oracle_gap", gap, 0.03));

    let product_fit = fit_log_slope(&product)?;
    match regime {
        Regime::Decay => {
            report.push_check(product_fit.check_within("product_slope", 1.0 - inv_q, 0.1));
            // ‖f_N‖² ≍ (log N)^{2/q}
            let vs_log: Vec<(f64, f64)> = squared.iter().map(|&(x, y)| (x.ln(), y)).collect();
            if let Ok(fit) = fit_log_slope(&vs_log) {
                report.fits.insert("norm_sq_vs_log_n".into(), fit);
            }
        }
        Regime::Block => {
            report.push_check(product_fit.check_within("product_slope", n + s, 0.1));
            let fit = fit_log_slope(&squared)?;
            report.push_check(fit.check_within("norm_sq_slope", 2.0 * s, 0.1));
            report.fits.insert("norm_sq".into(), fit);
        }
        Regime::Growth => {
            report.push_check(product_fit.check_at_least("product_slope", 3.0 * s.abs() + n + n * inv_q - 0.15));
            report.fits.insert("norm_sq".into(), fit_log_slope(&squared)?);
        }
    }
    report.fits.insert("product".into(), product_fit);
    Ok(report)
}

/// Grid for the Gaussian dilation sweeps.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DilationSetup {
    pub m: usize,
    pub size: usize,
    pub k_max: usize,
    pub window_width: f64,
}

impl Default for DilationSetup {
    fn default() -> Self {
        Self {
            m: 4,
            size: 1024,
            k_max: 60,
            window_width: 2.0,
        }
    }
}

pub const DILATION_WIDTHS: [f64; 5] = [0.25, 0.35, 0.5, 0.7, 1.0];

#[derive(Serialize)]
struct DilationSettings<'a> {
    setup: DilationSetup,
    params: SpaceParams,
    widths: &'a [f64],
}

/// Ratio of the STFT norm to the decomposition norm over a Gaussian
/// dilation sweep; the two are equivalent, so the ratio must stay in a narrow
/// band.
pub fn run_norm_equivalence(params: SpaceParams, widths: &[f64], setup: DilationSetup) -> Result<SweepReport> {
    let grid = GridSpec::new(1, setup.m, setup.size)?;
    let bank = build_bank(grid, setup.k_max)?;
    let window = gaussian_window(grid, setup.window_width);
    let rows: Vec<Result<ExperimentRecord>> = widths
        .par_iter()
        .map(|&w| {
            let start = Instant::now();
            let f = modulated_gaussian(grid, w, [0.0; 2]);
            let a = mod_norm_stft(&f, params, &window)?;
            let b = decomp(&f, params, &bank, DEFAULT_TAIL_TOLERANCE)?;
            let mut rec = ExperimentRecord::new("norm-equivalence").input("width", w).input("params", params);
            rec.measure("stft", a.value);
            rec.measure("decomposition", b.value);
            rec.measure("ratio", a.value / b.value);
            rec.note_tail(a.tail);
            rec.note_tail(b.tail);
            Ok(rec.timed(start))
        })
        .collect();
    let mut report = SweepReport::new("norm-equivalence", DilationSettings { setup, params, widths });
    report.records = rows.into_iter().collect::<Result<_>>()?;
    let ratios: Vec<f64> = report.records.iter().map(|r| r.measured["ratio"]).collect();
    report.push_check(Check::at_most("ratio_spread", spread(&ratios), 0.2));
    Ok(report)
}

/// `‖f‖_{H^s} / ‖f‖_{M^s_{2,2}}` over the same Gaussian dilation sweep.
pub fn run_sobolev_identification(s: Rational, widths: &[f64], setup: DilationSetup) -> Result<SweepReport> {
    let grid = GridSpec::new(1, setup.m, setup.size)?;
    let bank = build_bank(grid, setup.k_max)?;
    let two = ExtendedExponent::two();
    let params = SpaceParams::new(s, two, two, 1);
    let rows: Vec<Result<ExperimentRecord>> = widths
        .par_iter()
        .map(|&w| {
            let start = Instant::now();
            let f = modulated_gaussian(grid, w, [0.0; 2]);
            let h = sobolev_norm(&f, params.s_f64());
            let b = decomp(&f, params, &bank, DEFAULT_TAIL_TOLERANCE)?;
            let mut rec = ExperimentRecord::new("sobolev").input("width", w).input("params", params);
            rec.measure("sobolev", h);
            rec.measure("decomposition", b.value);
            rec.measure("ratio", h / b.value);
            rec.note_tail(b.tail);
            Ok(rec.timed(start))
        })
        .collect();
    let mut report = SweepReport::new("sobolev", DilationSettings { setup, params, widths });
    report.records = rows.into_iter().collect::<Result<_>>()?;
    let ratios: Vec<f64> = report.records.iter().map(|r| r.measured["ratio"]).collect();
    report.push_check(Check::at_most("ratio_spread", spread(&ratios), 0.2));
    Ok(report)
}

/// `F^{-1}[χ(ξ/r)]` with `χ = 1` on `[-1/2, 1/2]ⁿ`, supported in `[-1, 1]ⁿ`.
pub fn band_limited_dilate(grid: GridSpec, r: f64) -> Result<SampledFunction> {
    let chi = |t: f64| cutoff(t / r, 0.5, 1.0);
    let spec = SpectralFunction::from_fn(grid, |xi| {
        let v = if grid.dim() == 1 { chi(xi[0]) } else { chi(xi[0]) * chi(xi[1]) };
        Complex64::new(v, 0.0)
    })?;
    Ok(inverse_ft(&spec))
}

#[derive(Serialize)]
struct NikolskijSettings<'a> {
    grid: GridSpec,
    p: ExtendedExponent,
    q: ExtendedExponent,
    radii: &'a [f64],
}

/// `‖f_r‖_{L_q} / ‖f_r‖_{L_p}` for spectral radius `r`; slope `n(1/p - 1/q)`.
pub fn run_nikolskij(
    grid: GridSpec,
    p: ExtendedExponent,
    q: ExtendedExponent,
    radii: &[f64],
) -> Result<SweepReport> {
    if p > q {
        return Err(Error::Precondition(format!("need p <= q, got p = {p}, q = {q}")));
    }
    let mut report = SweepReport::new("nikolskij", NikolskijSettings { grid, p, q, radii });
    let mut points = Vec::new();
    for &r in radii {
        if r + 2.0 >= grid.nyquist() {
            return Err(Error::AliasingGuard {
                required: r + 2.0,
                available: grid.nyquist(),
            });
        }
        let start = Instant::now();
        let f = band_limited_dilate(grid, r)?;
        let ratio = lp_norm(&f, q) / lp_norm(&f, p);
        let mut rec = ExperimentRecord::new("nikolskij").input("r", r);
        rec.measure("ratio", ratio);
        report.records.push(rec.timed(start));
        points.push((r, ratio));
    }
    let predicted = grid.dim() as f64 * (p.recip() - q.recip()).to_f64().unwrap_or(f64::NAN);
    let fit = fit_log_slope(&points)?;
    report.push_check(fit.check_within("slope", predicted, 0.05));
    report.fits.insert("ratio".into(), fit);
    Ok(report)
}

/// `(2π)^{-n/2} ‖F^{-1}σ_0‖_{L_p}`.
pub fn delta_oracle(bank: &DecompositionBank, p: ExtendedExponent) -> Result<f64> {
    let grid = *bank.grid();
    let sigma = bank.symbol([0, 0])?;
    let spec = SpectralFunction::new(grid, sigma.into_iter().map(|v| Complex64::new(v, 0.0)).collect())?;
    Ok((2.0 * PI).powf(-(grid.dim() as f64) / 2.0) * lp_norm(&inverse_ft(&spec), p))
}

#[derive(Serialize)]
struct DeltaSettings {
    bank: crate::decomp::BankInfo,
}

/// Decomposition norm of the discrete impulse in `M^0_{p,∞}` against
/// `(2π)^{-n/2} ‖F^{-1}σ_0‖_{L_p}`. The flat spectrum is never covered by a
/// finite bank, so no tail tolerance applies; `q = ∞` makes the truncation
/// harmless.
pub fn run_delta_norm(bank: &DecompositionBank, ps: &[ExtendedExponent]) -> Result<SweepReport> {
    let grid = *bank.grid();
    let delta = SampledFunction::impulse(grid);
    let mut report = SweepReport::new("delta-norm", DeltaSettings { bank: bank.info() });
    let mut worst = 0.0f64;
    for &p in ps {
        let start = Instant::now();
        let params = SpaceParams::new(Rational::zero(), p, INF, grid.dim());
        let rep = mod_norm_decomp_with(&delta, params, bank, DecompOptions::tolerance(f64::INFINITY))?;
        let pieces: Vec<f64> = rep.contributions.iter().flatten().map(|c| c.value).collect();
        let oracle = delta_oracle(bank, p)?;
        let gap = relative_gap(rep.value, oracle);
        worst = worst.max(gap);
        let mut rec = ExperimentRecord::new("delta-norm").input("p", p);
        rec.measure("norm", rep.value);
        rec.predict("oracle", oracle);
        rec.measure("gap", gap);
        rec.measure("piece_spread", spread(&pieces));
        rec.note_tail(rep.tail);
        report.records.push(rec.timed(start));
    }
    report.push_check(Check::at_most("max_oracle_gap", worst, 0.02));
    Ok(report)
}

/// Smallest admissible `R - 2` for sector experiments.
pub const SECTOR_MIN_GAP: f64 = 1e-6;

/// Length of the spread blocks in the sector corpus.
const SECTOR_BLOCK: i64 = 16;

fn sector_corpus(ctx: &LatticeContext, r: f64, eps: u8, q: ExtendedExponent) -> Result<Vec<SampledFunction>> {
    let base = r.ceil() as i64;
    let sign = if eps == 0 { 1 } else { -1 };
    let inv_q = q.recip().to_f64().unwrap_or(0.0);
    let one = Complex64::new(1.0, 0.0);
    let layouts: Vec<Vec<(i64, Complex64)>> = vec![
        vec![(base, one)],
        vec![(base + 1, one)],
        vec![(base, one), (base + 1, one)],
        (0..SECTOR_BLOCK).map(|j| (base + j, one)).collect(),
        (0..SECTOR_BLOCK)
            .map(|j| (base + j, Complex64::new(((j + 1) as f64).powf(-inv_q), 0.0)))
            .collect(),
    ];
    let mask = SectorMask::new(ctx.grid, SectorKind::Sector { eps: [eps, 0] }, r)?;
    layouts
        .into_iter()
        .map(|entries| {
            let coeffs = LatticeCoefficients::custom(1, entries.into_iter().map(|(k, a)| ([sign * k, 0], a)))?;
            sector_project(&make_lattice_modulated(&ctx.psi, &coeffs)?, &mask)
        })
        .collect()
}

#[derive(Serialize)]
struct SectorSettings<'a> {
    setup: LatticeSetup,
    params: SpaceParams,
    radii: &'a [f64],
    sector: u8,
    block: i64,
}

/// Empirical product constant `c(R) = max ‖fg‖ / (‖f‖ ‖g‖)` over pairs with
/// spectra in the sector `P_R(ε)` (n = 1), fitted against `R - 2`.
pub fn run_sector_decay(params: SpaceParams, radii: &[f64], sector: u8, setup: LatticeSetup) -> Result<SweepReport> {
    if params.n != 1 {
        return Err(Error::Precondition("sector sweeps run in one dimension".into()));
    }
    let exponent = if params.q.is_one() {
        if params.s < Rational::zero() {
            return Err(Error::Precondition("q = 1 needs s >= 0".into()));
        }
        params.s_f64()
    } else {
        let gap = params.s - Rational::from_integer(params.n as i64) * params.q.conjugate().recip();
        if gap <= Rational::zero() {
            return Err(Error::Precondition(format!("need s > n/q', got s = {}", params.s)));
        }
        gap.to_f64().unwrap_or(f64::NAN)
    };
    if let Some(&r) = radii.iter().find(|&&r| !(r - 2.0 >= SECTOR_MIN_GAP)) {
        return Err(Error::Precondition(format!("sector radius {r} must exceed 2")));
    }
    if sector > 1 {
        return Err(Error::InvalidParameters(format!("sign pattern {sector}")));
    }
    let max_r = radii.iter().cloned().fold(0.0, f64::max).ceil() as usize;
    let ctx = setup.context(1, 2 * (max_r + SECTOR_BLOCK as usize + 1))?;
    let rows: Vec<Result<ExperimentRecord>> = radii
        .par_iter()
        .map(|&r| {
            let start = Instant::now();
            let corpus = sector_corpus(&ctx, r, sector, params.q)?;
            let norms = corpus
                .iter()
                .map(|f| decomp(f, params, &ctx.bank, DEFAULT_TAIL_TOLERANCE).map(|n| n.value))
                .collect::<Result<Vec<_>>>()?;
            let mut best = 0.0f64;
            let mut tail = 0.0f64;
            for i in 0..corpus.len() {
                for j in i..corpus.len() {
                    let prod = pointwise_product(&corpus[i], &corpus[j])?;
                    let rep = decomp(&prod, params, &ctx.bank, DEFAULT_TAIL_TOLERANCE)?;
                    best = best.max(rep.value / (norms[i] * norms[j]));
                    tail = tail.max(rep.tail);
                }
            }
            let mut rec = ExperimentRecord::new("sector-decay").input("R", r).input("pairs", corpus.len() * (corpus.len() + 1) / 2);
            rec.measure("constant", best);
            rec.note_tail(tail);
            Ok(rec.timed(start))
        })
        .collect();
    let mut report = SweepReport::new(
        "sector-decay",
        SectorSettings {
            setup,
            params,
            radii,
            sector,
            block: SECTOR_BLOCK,
        },
    );
    report.records = rows.into_iter().collect::<Result<_>>()?;
    let points: Vec<(f64, f64)> = radii
        .iter()
        .zip(&report.records)
        .map(|(&r, rec)| (r - 2.0, rec.measured["constant"]))
        .collect();
    let fit = fit_log_slope(&points)?;
    report.push_check(fit.check_at_most("decay_slope", -exponent + 0.15));
    report.fits.insert("constant_vs_r_minus_2".into(), fit);
    Ok(report)
}

#[derive(Serialize)]
struct BilinearSettings {
    params: SpaceParams,
    bank: crate::decomp::BankInfo,
    pairs: usize,
}

/// `‖fg‖_{M^s_{p,q}} / (‖f‖_{M^0_{∞,1}} ‖g‖_{M^s_{p,q}} + ‖f‖_{M^s_{p,q}} ‖g‖_{M^0_{∞,1}})`
/// over a corpus of pairs; the maximum is the empirical constant.
pub fn run_bilinear(
    pairs: &[(SampledFunction, SampledFunction)],
    params: SpaceParams,
    bank: &DecompositionBank,
) -> Result<SweepReport> {
    if !embeds_into_linfty(params).is_holds() {
        return Err(Error::Precondition(format!(
            "M^{}_{{{},{}}} does not embed into L_inf",
            params.s, params.p, params.q
        )));
    }
    let anchor = SpaceParams::new(Rational::zero(), INF, ExtendedExponent::one(), params.n);
    let rows: Vec<Result<ExperimentRecord>> = pairs
        .par_iter()
        .enumerate()
        .map(|(i, (f, g))| {
            let start = Instant::now();
            let fg = pointwise_product(f, g)?;
            let tol = DEFAULT_TAIL_TOLERANCE;
            let lhs = decomp(&fg, params, bank, tol)?;
            let f_s = decomp(f, params, bank, tol)?;
            let g_s = decomp(g, params, bank, tol)?;
            let f_0 = decomp(f, anchor, bank, tol)?;
            let g_0 = decomp(g, anchor, bank, tol)?;
            let rhs = f_0.value * g_s.value + f_s.value * g_0.value;
            let mut rec = ExperimentRecord::new("bilinear").input("pair", i);
            rec.measure("lhs", lhs.value);
            rec.measure("rhs", rhs);
            rec.measure("ratio", lhs.value / rhs);
            for t in [lhs.tail, f_s.tail, g_s.tail, f_0.tail, g_0.tail] {
                rec.note_tail(t);
            }
            Ok(rec.timed(start))
        })
        .collect();
    let mut report = SweepReport::new(
        "bilinear",
        BilinearSettings {
            params,
            bank: bank.info(),
            pairs: pairs.len(),
        },
    );
    report.records = rows.into_iter().collect::<Result<_>>()?;
    let constant = max_of(report.records.iter().map(|r| r.measured["ratio"]));
    let mut summary = ExperimentRecord::new("bilinear-summary");
    summary.measure("max_ratio", constant);
    summary.predict("matched_window_bound", 2f64.powf(params.s_f64()));
    report.records.push(summary);
    report.push_check(Check::at_most("max_ratio_finite", constant, f64::MAX));
    Ok(report)
}

/// Twenty deterministic lattice and Gaussian pairs on a lattice context.
pub fn bilinear_corpus(ctx: &LatticeContext) -> Result<Vec<(SampledFunction, SampledFunction)>> {
    let lattice = |seed: usize| -> Result<SampledFunction> {
        let entries = (-3i64..=3).map(|k| {
            let t = (seed as f64 + 1.0) * (k as f64 + 0.5);
            ([k, 0], Complex64::new(t.cos(), (0.7 * t).sin()) / (1.0 + k.abs() as f64))
        });
        make_lattice_modulated(&ctx.psi, &LatticeCoefficients::custom(1, entries)?)
    };
    let gauss = |seed: usize| -> SampledFunction {
        let w = 0.8 + 0.1 * (seed % 5) as f64;
        let k0 = (seed % 4) as f64 - 1.5;
        modulated_gaussian(ctx.grid, w, [k0, 0.0])
    };
    let mut out = Vec::with_capacity(20);
    out.push((ctx.psi.function().clone(), ctx.psi.function().clone()));
    for i in 0..7 {
        out.push((lattice(i)?, lattice(i + 7)?));
    }
    for i in 0..6 {
        out.push((gauss(i), gauss(i + 3)));
    }
    for i in 0..6 {
        out.push((lattice(i)?, gauss(i)));
    }
    Ok(out)
}

#[derive(Serialize)]
struct RefinementSettings {
    params: SpaceParams,
    setup: LatticeSetup,
    radius: usize,
}

/// Runs [`run_bilinear`] on the standard corpus at `N` and `2N` samples per
/// axis (same period) and compares the empirical constants.
pub fn run_bilinear_refinement(params: SpaceParams, setup: LatticeSetup, radius: usize) -> Result<SweepReport> {
    let coarse = setup.context(1, radius)?;
    let fine_grid = GridSpec::new(1, setup.m, 2 * coarse.grid.samples_per_axis())?;
    let fine = LatticeContext {
        grid: fine_grid,
        psi: make_band_limited_psi(fine_grid, setup.eps)?,
        bank: build_bank(fine_grid, coarse.bank.k_max())?,
    };
    let mut report = SweepReport::new("bilinear-refinement", RefinementSettings { params, setup, radius });
    let mut constants = Vec::new();
    for ctx in [&coarse, &fine] {
        let sub = run_bilinear(&bilinear_corpus(ctx)?, params, &ctx.bank)?;
        let summary = sub.records.last().expect("summary record").clone();
        constants.push(summary.measured["max_ratio"]);
        report
            .records
            .extend(sub.records.into_iter().map(|r| r.input("N", ctx.grid.samples_per_axis())));
    }
    report.push_check(Check::at_most("refinement_change", relative_gap(constants[1], constants[0]), 0.1));
    Ok(report)
}

#[derive(Serialize)]
struct PowerSettings<'a> {
    params: SpaceParams,
    bank: crate::decomp::BankInfo,
    powers: &'a [u32],
}

/// `‖g^m‖_{M^s_{p,q}}` over `m`; `ln ‖g^m‖` must be close to linear in `m`
/// with slope at most `ln(c ‖g‖)`, `c` the largest observed
/// `‖g^m‖ / (‖g^{m-1}‖ ‖g‖)`.
pub fn run_power_growth(
    g: &SampledFunction,
    params: SpaceParams,
    powers: &[u32],
    bank: &DecompositionBank,
) -> Result<SweepReport> {
    if !is_algebra(params).is_holds() {
        return Err(Error::Precondition(format!("M^{}_{{{},{}}} is not an algebra", params.s, params.p, params.q)));
    }
    let top = powers.iter().cloned().max().unwrap_or(1);
    let mut norms = Vec::with_capacity(top as usize);
    let mut tails = Vec::new();
    let mut power = g.clone();
    for m in 1..=top {
        if m > 1 {
            power = pointwise_product(&power, g)?;
        }
        let rep = decomp(&power, params, bank, DEFAULT_TAIL_TOLERANCE)?;
        norms.push(rep.value);
        tails.push(rep.tail);
    }
    let base = norms[0];
    let constant = (1..norms.len()).map(|i| norms[i] / (norms[i - 1] * base)).fold(0.0, f64::max);
    let mut report = SweepReport::new(
        "power-growth",
        PowerSettings {
            params,
            bank: bank.info(),
            powers,
        },
    );
    let mut line = Vec::new();
    for &m in powers {
        let i = m as usize - 1;
        let mut rec = ExperimentRecord::new("power-growth").input("m", m);
        rec.measure("norm", norms[i]);
        rec.measure("root", norms[i].powf(1.0 / m as f64));
        rec.note_tail(tails[i]);
        report.records.push(rec);
        line.push([m as f64, norms[i].ln()]);
    }
    if line.len() >= 2 {
        let fit = fit_line(&line)?;
        report.push_check(Check::at_most("log_linear_residual", fit.residual, 0.05));
        if constant > 0.0 {
            report.push_check(Check::at_most("growth_rate", fit.slope, (constant * base).ln() + 0.05));
        }
        report.fits.insert("log_norm_vs_m".into(), fit);
    }
    let mut summary = ExperimentRecord::new("power-growth-summary");
    summary.measure("algebra_constant", constant);
    summary.measure("norm_g", base);
    report.records.push(summary);
    Ok(report)
}

#[derive(Serialize)]
struct ExpSettings<'a> {
    params: SpaceParams,
    bank: crate::decomp::BankInfo,
    lambdas: &'a [f64],
    growth_exponent: f64,
}

/// Step used for the small-λ linearity probe.
pub const SMALL_LAMBDA: f64 = 1e-3;

/// `‖e^{iλu} - 1‖_{M^s_{p,q}}` over `λ` for real `u`; the slope fitted over
/// the upper half of the positive `λ` values is checked against `1 + E`.
pub fn run_exp_growth(
    u: &SampledFunction,
    params: SpaceParams,
    lambdas: &[f64],
    bank: &DecompositionBank,
) -> Result<SweepReport> {
    if params.p.is_one() || params.p.is_infinite() {
        return Err(Error::Precondition(format!("need 1 < p < inf, got {}", params.p)));
    }
    if !u.is_real(1e-12 * u.max_abs().max(1.0)) {
        return Err(Error::Precondition("u must be real-valued".into()));
    }
    let exps = superposition_exponent(params.s, params.q, params.n)?;
    let measure = exps.measure.to_f64().unwrap_or(f64::NAN);
    let real_u = u.map(|v| Complex64::new(v.re, 0.0));
    let eval = |lambda: f64| -> Result<NormReport> {
        let h = real_u.map(|v| Complex64::new(0.0, lambda * v.re).exp() - 1.0);
        decomp(&h, params, bank, DEFAULT_TAIL_TOLERANCE)
    };
    let norm_u = decomp(&real_u, params, bank, DEFAULT_TAIL_TOLERANCE)?;
    let rows: Vec<Result<ExperimentRecord>> = lambdas
        .par_iter()
        .map(|&lambda| {
            let start = Instant::now();
            let rep = eval(lambda)?;
            let mut rec = ExperimentRecord::new("exp-growth").input("lambda", lambda);
            rec.measure("norm", rep.value);
            rec.note_tail(rep.tail);
            Ok(rec.timed(start))
        })
        .collect();
    let mut report = SweepReport::new(
        "exp-growth",
        ExpSettings {
            params,
            bank: bank.info(),
            lambdas,
            growth_exponent: exps.growth.to_f64().unwrap_or(f64::NAN),
        },
    );
    report.records = rows.into_iter().collect::<Result<_>>()?;
    let small = eval(SMALL_LAMBDA)?;
    let mut probe = ExperimentRecord::new("exp-growth-small-lambda").input("lambda", SMALL_LAMBDA);
    probe.measure("norm_over_lambda", small.value / SMALL_LAMBDA);
    probe.predict("norm_u", norm_u.value);
    probe.note_tail(small.tail);
    report.records.push(probe);

    let mut positive: Vec<(f64, f64)> = lambdas
        .iter()
        .zip(&report.records)
        .filter(|(&l, _)| l > 0.0)
        .map(|(&l, r)| (l, r.measured["norm"]))
        .collect();
    positive.sort_by(|a, b| a.0.total_cmp(&b.0));
    let upper = positive.split_off(positive.len() / 2);
    let fit = fit_log_slope(if upper.len() >= 4 { &upper } else { &positive })
        .or_else(|_| fit_log_slope(&[positive, upper].concat()))?;
    report.push_check(fit.check_at_most("large_lambda_slope", measure + 0.2));
    report.fits.insert("norm_vs_lambda".into(), fit);
    Ok(report)
}

/// Exponents of the `S^j` product regime: `f ∈ M^{|s|}_{p₁,1}`,
/// `g ∈ M^s_{p₂,q}`, product in `M^s_{p,q}` with `1/p = 1/p₁ + 1/p₂`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ProductLimitParams {
    #[serde(with = "crate::exponent::rational_str")]
    pub s: Rational,
    pub p1: ExtendedExponent,
    pub p2: ExtendedExponent,
    pub q: ExtendedExponent,
    pub n: usize,
}

impl ProductLimitParams {
    pub fn target(&self) -> Result<SpaceParams> {
        let p = ExtendedExponent::from_recip(self.p1.recip() + self.p2.recip())?;
        Ok(SpaceParams::new(self.s, p, self.q, self.n))
    }

    pub fn f_space(&self) -> SpaceParams {
        SpaceParams::new(self.s.abs(), self.p1, ExtendedExponent::one(), self.n)
    }

    pub fn g_space(&self) -> SpaceParams {
        SpaceParams::new(self.s, self.p2, self.q, self.n)
    }
}

/// Increments threshold for the resolvable corpus.
pub const PRODUCT_LIMIT_FLOOR: f64 = 1e-6;

/// `d_j = ‖S^{j+1}f S^{j+1}g - S^j f S^j g‖_{M^s_{p,q}}`; checks monotone
/// decrease to below [`PRODUCT_LIMIT_FLOOR`] and reports the empirical
/// constant of the final product against `‖f‖ ‖g‖`.
pub fn run_product_limit(
    f: &SampledFunction,
    g: &SampledFunction,
    regime: ProductLimitParams,
    levels: &[u32],
    bank: &DecompositionBank,
) -> Result<SweepReport> {
    let target = regime.target()?;
    let query = ProductQuery::new(regime.f_space(), regime.g_space(), target)?;
    if !product_verdict(&query)?.is_holds() {
        return Err(Error::Precondition("exponents outside the S^j product regime".into()));
    }
    let inf = f64::INFINITY;
    let smooth = |j: u32| -> Result<SampledFunction> { pointwise_product(&dyadic_lowpass(f, j), &dyadic_lowpass(g, j)) };
    let rows: Vec<Result<(ExperimentRecord, f64)>> = levels
        .par_iter()
        .map(|&j| {
            let start = Instant::now();
            let diff = smooth(j + 1)?.sub(&smooth(j)?)?;
            let rep = decomp(&diff, target, bank, inf)?;
            let mut rec = ExperimentRecord::new("product-limit").input("j", j);
            rec.measure("increment", rep.value);
            rec.note_tail(rep.tail);
            Ok((rec.timed(start), rep.value))
        })
        .collect();
    let rows = rows.into_iter().collect::<Result<Vec<_>>>()?;
    let mut report = SweepReport::new("product-limit", regime);
    let increments: Vec<f64> = rows.iter().map(|r| r.1).collect();
    report.records = rows.into_iter().map(|r| r.0).collect();

    let fg = pointwise_product(f, g)?;
    let prod = decomp(&fg, target, bank, inf)?;
    let nf = decomp(f, regime.f_space(), bank, inf)?;
    let ng = decomp(g, regime.g_space(), bank, inf)?;
    let mut summary = ExperimentRecord::new("product-limit-summary");
    summary.measure("product_norm", prod.value);
    summary.measure("bound_factors", nf.value * ng.value);
    summary.measure("empirical_constant", prod.value / (nf.value * ng.value));
    summary.note_tail(prod.tail);
    report.records.push(summary);

    let scale = increments.iter().cloned().fold(0.0, f64::max).max(prod.value);
    let slack = 1e-12 * scale.max(1.0);
    let rises = increments
        .windows(2)
        .map(|w| w[1] - w[0])
        .fold(f64::MIN, f64::max)
        .max(0.0);
    report.push_check(Check::at_most("monotone_rise", rises, slack));
    if let Some(&last) = increments.last() {
        report.push_check(Check::at_most("final_increment", last, PRODUCT_LIMIT_FLOOR));
    }
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn two() -> ExtendedExponent {
        ExtendedExponent::two()
    }

    #[test]
    fn regimes_are_recognized() {
        let p = SpaceParams::new(rat(0, 1), two(), two(), 1);
        assert_eq!(regime(&Family::Power { q: two() }, p).unwrap(), Regime::Decay);
        let b = SpaceParams::new(rat(1, 2), two(), INF, 1);
        assert_eq!(regime(&Family::Constant, b).unwrap(), Regime::Block);
        let g = SpaceParams::new(rat(-1, 1), two(), two(), 1);
        assert_eq!(regime(&Family::Bracket { alpha: rat(2, 1) }, g).unwrap(), Regime::Growth);
        assert!(regime(&Family::Constant, p).is_err());
    }

    #[test]
    fn small_counterexample_sweep_matches_oracle() {
        let p = SpaceParams::new(rat(1, 2), two(), INF, 1);
        let rep = run_counterexample_sweep(&Family::Constant, p, &[4, 8, 16, 32], LatticeSetup::default()).unwrap();
        let gap = rep.check("max_oracle_gap").unwrap();
        assert!(gap.passed(), "{gap:?}");
    }

    #[test]
    fn sector_radius_guard() {
        let p = SpaceParams::new(rat(1, 1), two(), ExtendedExponent::one(), 1);
        assert!(run_sector_decay(p, &[2.0, 3.0, 4.0, 5.0], 0, LatticeSetup::default()).is_err());
        let bad = SpaceParams::new(rat(1, 2), two(), two(), 1);
        assert!(run_sector_decay(bad, &[3.0, 4.0, 5.0, 6.0], 0, LatticeSetup::default()).is_err());
    }

    #[test]
    fn exp_growth_preconditions_and_zero() {
        let ctx = LatticeSetup::default().context(1, 8).unwrap();
        let params = SpaceParams::new(rat(1, 1), two(), two(), 1);
        let complex = modulated_gaussian(ctx.grid, 1.0, [1.0, 0.0]);
        assert!(run_exp_growth(&complex, params, &[1.0, 2.0, 3.0, 4.0], &ctx.bank).is_err());
        let p1 = SpaceParams::new(rat(1, 1), ExtendedExponent::one(), two(), 1);
        let u = ctx.psi.function().scale(Complex64::new(0.1, 0.0));
        assert!(run_exp_growth(&u, p1, &[1.0, 2.0, 3.0, 4.0], &ctx.bank).is_err());
        let rep = run_exp_growth(&u, params, &[0.0, 1.0, 2.0, 3.0, 4.0, 5.0, 6.0, 7.0, 8.0], &ctx.bank).unwrap();
        assert_eq!(rep.records[0].measured["norm"], 0.0);
    }

    #[test]
    fn power_growth_first_power_is_the_norm() {
        let ctx = LatticeSetup::default().context(1, 10).unwrap();
        let params = SpaceParams::new(rat(1, 1), two(), two(), 1);
        let g = ctx.psi.function().scale(Complex64::new(0.3, 0.0));
        let rep = run_power_growth(&g, params, &[1, 2, 3, 4], &ctx.bank).unwrap();
        let direct = decomp(&g, params, &ctx.bank, DEFAULT_TAIL_TOLERANCE).unwrap().value;
        assert_eq!(rep.records[0].measured["norm"], direct);
        // small g: powers contract
        let norms: Vec<f64> = rep.records[..4].iter().map(|r| r.measured["norm"]).collect();
        assert!(norms.windows(2).all(|w| w[1] < w[0]));
        let bad = SpaceParams::new(rat(1, 2), two(), two(), 1);
        assert!(run_power_growth(&g, bad, &[1, 2], &ctx.bank).is_err());
    }

    #[test]
    fn band_limited_product_limit_is_exact() {
        let ctx = LatticeSetup::default().context(1, 8).unwrap();
        let coeffs = coefficient_family(&Family::Constant, 1, 2).unwrap();
        let f = make_lattice_modulated(&ctx.psi, &coeffs).unwrap();
        let regime = ProductLimitParams {
            s: rat(0, 1),
            p1: INF,
            p2: two(),
            q: two(),
            n: 1,
        };
        let rep = run_product_limit(&f, &f, regime, &[2, 3, 4], &ctx.bank).unwrap();
        assert!(rep.records[..3].iter().all(|r| r.measured["increment"] < 1e-12));
        assert_eq!(rep.outcome, super::super::Outcome::Pass);
    }
}
