use std::fs::File;
use std::io::{BufReader, Write};
use std::path::Path;
use std::str::FromStr;

use num_complex::Complex64;
use serde::Serialize;
use serde_json::{json, Value};

use modspace::calculus::{embeds, is_algebra, product_verdict, ProductQuery, Status, Verdict};
use modspace::harness::{
    self, check_product_identity, records_to_csv, run_bilinear_refinement, run_counterexample_sweep, run_delta_norm,
    run_exp_growth, run_nikolskij, run_norm_equivalence, run_oracle_sweep, run_power_growth, run_product_limit,
    run_sector_decay, run_sobolev_identification, run_toft_identity, standard_families, DilationSetup,
    ExperimentRecord, LatticeContext, LatticeSetup, ProductLimitParams, SweepReport, DILATION_WIDTHS,
};
use modspace::io::{parse_family_spec, read_samples};
use modspace::norm::{gaussian_window, mod_norm_decomp_with, mod_norm_stft_with, DecompOptions, StftOptions};
use modspace::testbed::{coefficient_family, make_lattice_modulated, modulated_gaussian, Family, LatticeCoefficients};
use modspace::{build_bank, rat, ExtendedExponent, GridSpec, Rational, SampledFunction, SpaceParams, INF};

use crate::args::*;
use crate::Failure;

/// Largest grid (total nodes) on which the quadratic STFT is attempted.
const STFT_MAX_NODES: usize = 1 << 14;

pub fn run(cli: Cli) -> Result<(), Failure> {
    match cli.command {
        Command::Norm(a) => norm(a),
        Command::Embed(a) => embed(a),
        Command::Algebra(a) => algebra(a),
        Command::Product(a) => product(a),
        Command::Sweep(a) => sweep(*a),
        Command::Identity(a) => identity(a),
        Command::Report(a) => report(a),
    }
}

/// Writes to stdout; a closed pipe (`| head`) is not an error.
fn emit(text: &str) -> Result<(), Failure> {
    match std::io::stdout().lock().write_all(text.as_bytes()) {
        Err(e) if e.kind() != std::io::ErrorKind::BrokenPipe => Err(e.into()),
        _ => Ok(()),
    }
}

fn print_json(value: &impl Serialize) -> Result<(), Failure> {
    emit(&(serde_json::to_string_pretty(value).expect("serializable output") + "\n"))
}

fn usage(msg: impl Into<String>) -> Failure {
    Failure::Usage(msg.into())
}

fn list<T: FromStr>(text: &str, what: &str) -> Result<Vec<T>, Failure> {
    text.split(',')
        .map(|x| x.trim().parse::<T>().map_err(|_| usage(format!("{what}: cannot parse {x:?}"))))
        .collect()
}

fn rationals(text: &str) -> Result<Vec<Rational>, Failure> {
    text.split(',')
        .map(|x| modspace::parse_rational(x.trim()).map_err(Failure::from))
        .collect()
}

fn read_table(path: &Path) -> Result<SampledFunction, Failure> {
    let file = File::open(path).map_err(|e| usage(format!("{}: {e}", path.display())))?;
    Ok(read_samples(BufReader::new(file))?)
}

/// Largest bank radius the grid's anti-aliasing guard admits.
fn max_k(grid: &GridSpec) -> Result<usize, Failure> {
    let k = (grid.nyquist() - 2.0).ceil() as i64 - 1;
    if k < 1 {
        return Err(usage(format!("grid {grid:?} is too coarse for any decomposition bank")));
    }
    Ok(k as usize)
}

fn family_context(spec: &str, n: usize, cutoff: usize, setup: LatticeSetup, k_max: Option<usize>) -> Result<(LatticeCoefficients, LatticeContext), Failure> {
    let (family, given) = parse_family_spec(spec)?;
    let coeffs = coefficient_family(&family, n, given.unwrap_or(cutoff))?;
    let radius = k_max.map(|k| k.saturating_sub(2)).unwrap_or(0).max(coeffs.radius());
    let ctx = setup.context(n, radius)?;
    Ok((coeffs, ctx))
}

fn norm(a: NormArgs) -> Result<(), Failure> {
    let mut params = SpaceParams::new(a.space.s, a.space.p, a.space.q, a.space.n);
    let (f, bank) = match (&a.family, &a.input) {
        (Some(spec), _) => {
            let setup = LatticeSetup { m: a.m, eps: a.eps };
            let (coeffs, ctx) = family_context(spec, params.n, a.cutoff, setup, a.k_max)?;
            (make_lattice_modulated(&ctx.psi, &coeffs)?, ctx.bank)
        }
        (None, Some(path)) => {
            let f = read_table(path)?;
            let grid = *f.grid();
            params.n = grid.dim();
            let k = match a.k_max {
                Some(k) => k,
                None => max_k(&grid)?,
            };
            (f, build_bank(grid, k)?)
        }
        (None, None) => unreachable!("clap requires a source"),
    };
    let grid = *f.grid();
    let report = match a.method {
        Method::Decomp => mod_norm_decomp_with(&f, params, &bank, DecompOptions::tolerance(a.tail_tolerance))?,
        Method::Stft => {
            if grid.len() > STFT_MAX_NODES {
                return Err(usage(format!(
                    "STFT on {} nodes is quadratic in the grid size; use --method decomp or a smaller grid",
                    grid.len()
                )));
            }
            let window = gaussian_window(grid, a.window_width);
            let options = StftOptions {
                tail_tolerance: a.tail_tolerance,
                ..StftOptions::default()
            };
            mod_norm_stft_with(&f, params, &window, options)?
        }
    };
    let report = if a.contributions { report } else { report.without_contributions() };
    print_json(&report)
}

fn expect(v: &Verdict, want: Option<Expect>) -> Result<(), Failure> {
    print_json(v)?;
    let Some(want) = want else { return Ok(()) };
    let status = match want {
        Expect::Holds => Status::Holds,
        Expect::Fails => Status::Fails,
        Expect::Unknown => Status::Unknown,
    };
    if v.status == status {
        Ok(())
    } else {
        Err(Failure::Assertion(format!("expected {status:?}, verdict is {:?}", v.status)))
    }
}

fn embed(a: EmbedArgs) -> Result<(), Failure> {
    let v = embeds(SpaceParams::new(a.s0, a.p0, a.q0, a.n), SpaceParams::new(a.s1, a.p1, a.q1, a.n))?;
    expect(&v, a.expect)
}

fn algebra(a: AlgebraArgs) -> Result<(), Failure> {
    let s = a.space;
    expect(&is_algebra(SpaceParams::new(s.s, s.p, s.q, s.n)), a.expect)
}

fn product(a: ProductArgs) -> Result<(), Failure> {
    let query = ProductQuery::new(
        SpaceParams::new(a.s1, a.p1, a.q1, a.n),
        SpaceParams::new(a.s2, a.p2, a.q2, a.n),
        SpaceParams::new(a.s0, a.p0, a.q0, a.n),
    )?;
    expect(&product_verdict(&query)?, a.expect)
}

fn powers_of_two(lo: i32, hi: i32) -> Vec<f64> {
    (lo..=hi).map(|i| 2f64.powi(i)).collect()
}

fn sweep(a: SweepArgs) -> Result<(), Failure> {
    let two = ExtendedExponent::two();
    let setup = LatticeSetup {
        m: a.m.unwrap_or(32),
        eps: a.eps.unwrap_or(0.2),
    };
    let params = |s: Rational, p: ExtendedExponent, q: ExtendedExponent| {
        SpaceParams::new(a.s.unwrap_or(s), a.p.unwrap_or(p), a.q.unwrap_or(q), a.n)
    };
    let floats = |v: &Option<String>, what: &str, default: Vec<f64>| -> Result<Vec<f64>, Failure> {
        v.as_deref().map(|t| list(t, what)).unwrap_or(Ok(default))
    };
    let dilation = DilationSetup {
        m: a.m.unwrap_or(4),
        size: a.size.unwrap_or(1024),
        k_max: a.k_max.unwrap_or(60),
        window_width: a.window_width.unwrap_or(DilationSetup::default().window_width),
    };
    let report: SweepReport = match a.experiment {
        Experiment::Oracle => {
            let cutoff = match &a.cutoffs {
                Some(c) => list::<usize>(c, "cutoffs")?.first().copied().unwrap_or(16),
                None => 16,
            };
            let ss = rationals(a.s_list.as_deref().unwrap_or("-1,0,1,2"))?;
            let ps = list::<ExtendedExponent>(a.p_list.as_deref().unwrap_or("1,2,inf"), "p-list")?;
            let qs = list::<ExtendedExponent>(a.q_list.as_deref().unwrap_or("1,2,inf"), "q-list")?;
            run_oracle_sweep(setup, &standard_families(), cutoff, &ss, &ps, &qs)?
        }
        Experiment::Counterexample => {
            let (family, _) = parse_family_spec(a.family.as_deref().unwrap_or("power q=2"))?;
            let cutoffs = list::<usize>(a.cutoffs.as_deref().unwrap_or("32,64,128,256,512"), "cutoffs")?;
            // the regime is set by the family unless --q says otherwise
            let q = match &family {
                Family::Power { q } | Family::LogPower { q, .. } => *q,
                Family::Constant => INF,
                _ => two,
            };
            run_counterexample_sweep(&family, params(rat(0, 1), two, q), &cutoffs, setup)?
        }
        Experiment::NormEquivalence => {
            let widths = floats(&a.widths, "widths", DILATION_WIDTHS.to_vec())?;
            run_norm_equivalence(params(rat(0, 1), two, two), &widths, dilation)?
        }
        Experiment::Sobolev => {
            let widths = floats(&a.widths, "widths", DILATION_WIDTHS.to_vec())?;
            run_sobolev_identification(a.s.unwrap_or(rat(1, 1)), &widths, dilation)?
        }
        Experiment::Nikolskij => {
            let grid = GridSpec::new(a.n, a.m.unwrap_or(8), a.size.unwrap_or(4096))?;
            let radii = floats(&a.radii, "radii", powers_of_two(0, 4))?;
            run_nikolskij(grid, a.p.unwrap_or(ExtendedExponent::one()), a.q.unwrap_or(two), &radii)?
        }
        Experiment::Delta => {
            let grid = GridSpec::new(a.n, a.m.unwrap_or(8), a.size.unwrap_or(1024))?;
            let bank = build_bank(grid, a.k_max.unwrap_or(60))?;
            let ps = list::<ExtendedExponent>(a.p_list.as_deref().unwrap_or("1,2,inf"), "p-list")?;
            run_delta_norm(&bank, &ps)?
        }
        Experiment::Sector => {
            let radii = floats(&a.radii, "radii", vec![3.0, 4.0, 6.0, 8.0, 12.0])?;
            run_sector_decay(params(rat(3, 2), two, two), &radii, a.sector, setup)?
        }
        Experiment::ExpGrowth => {
            let ctx = setup.context(a.n, a.k_max.unwrap_or(64))?;
            let amp = a.amplitude.unwrap_or(0.1);
            let u = SampledFunction::from_fn(ctx.grid, |x| Complex64::new(amp * x[0].cos(), 0.0))?
                .zip(ctx.psi.function(), |c, psi| Complex64::new(c.re * psi.re, 0.0))?;
            let lambdas = floats(&a.lambdas, "lambdas", powers_of_two(0, 6))?;
            run_exp_growth(&u, params(rat(1, 1), two, two), &lambdas, &ctx.bank)?
        }
        Experiment::PowerGrowth => {
            let ctx = setup.context(a.n, a.k_max.unwrap_or(12))?;
            let amp = a.amplitude.unwrap_or(0.3);
            let g = SampledFunction::from_fn(ctx.grid, |x| Complex64::new(amp * (1.0 + 0.5 * x[0].cos()), 0.0))?
                .zip(ctx.psi.function(), |c, psi| c * psi)?;
            let powers = list::<u32>(a.powers.as_deref().unwrap_or("1,2,3,4,5,6,7,8"), "powers")?;
            run_power_growth(&g, params(rat(1, 1), two, two), &powers, &ctx.bank)?
        }
        Experiment::Bilinear => run_bilinear_refinement(params(rat(1, 1), two, two), setup, a.k_max.unwrap_or(12))?,
        Experiment::ProductLimit => {
            let k_max = a.k_max.unwrap_or(12);
            let spec_f = a.family.as_deref().unwrap_or("constant N=2");
            let spec_g = a.family2.as_deref().unwrap_or("power q=2 N=3");
            let (cf, ctx) = family_context(spec_f, a.n, 2, setup, Some(k_max))?;
            let (family_g, cut_g) = parse_family_spec(spec_g)?;
            let cg = coefficient_family(&family_g, a.n, cut_g.unwrap_or(2))?;
            if cf.radius() + cg.radius() + 2 > ctx.bank.k_max() {
                return Err(usage("product spectrum exceeds the bank; raise --k-max"));
            }
            let f = make_lattice_modulated(&ctx.psi, &cf)?;
            let g = make_lattice_modulated(&ctx.psi, &cg)?;
            let regime = ProductLimitParams {
                s: a.s.unwrap_or(rat(0, 1)),
                p1: a.p1.unwrap_or(INF),
                p2: a.p2.unwrap_or(two),
                q: a.q.unwrap_or(two),
                n: a.n,
            };
            let levels = list::<u32>(a.levels.as_deref().unwrap_or("0,1,2,3,4,5,6"), "levels")?;
            run_product_limit(&f, &g, regime, &levels, &ctx.bank)?
        }
    };
    let report = if a.timings { report } else { report.canonical() };
    match &a.json {
        Some(path) => std::fs::write(path, report.to_json() + "\n")?,
        None => emit(&(report.to_json() + "\n"))?,
    }
    if let Some(path) = &a.csv {
        std::fs::write(path, records_to_csv(&report.records)?)?;
    }
    for c in &report.checks {
        eprintln!("{:<24} {:>12.6} {:<16} {:?}", c.name, c.observed, c.bound, c.outcome);
    }
    match report.outcome {
        harness::Outcome::Fail => Err(Failure::Assertion(format!("{} sweep failed a check", report.experiment))),
        harness::Outcome::Inconclusive => {
            eprintln!("warning: a fit was inconclusive (residual above gate)");
            Ok(())
        }
        harness::Outcome::Pass => Ok(()),
    }
}

fn identity(a: IdentityArgs) -> Result<(), Failure> {
    let (out, residual, threshold) = match a.kind {
        IdentityKind::Subset => {
            let text = a.values.as_deref().ok_or_else(|| usage("subset identity needs --values"))?;
            let values = list::<Complex64>(text, "values")?;
            let threshold = a.threshold.unwrap_or(1e-12);
            let residual = check_product_identity(&values)?;
            (json!({"kind": "subset", "terms": values.len(), "residual": residual}), residual, threshold)
        }
        IdentityKind::Toft => {
            let (f, g) = match (&a.f, &a.g) {
                (Some(f), Some(g)) => (read_table(f)?, read_table(g)?),
                (None, None) => {
                    let grid = GridSpec::new(1, 2, 128)?;
                    (modulated_gaussian(grid, 1.0, [0.0; 2]), modulated_gaussian(grid, 0.7, [2.0, 0.0]))
                }
                _ => return Err(usage("give both --f and --g, or neither")),
            };
            let window = gaussian_window(*f.grid(), a.window_width);
            let r = run_toft_identity(&f, &g, &window, &window, a.stride)?;
            let threshold = a.threshold.unwrap_or(1e-3);
            let mut v = serde_json::to_value(r).expect("residual");
            v["kind"] = json!("toft");
            (v, r.residual, threshold)
        }
    };
    let pass = residual < threshold;
    let mut out = out;
    out["threshold"] = json!(threshold);
    out["pass"] = json!(pass);
    print_json(&out)?;
    if pass {
        Ok(())
    } else {
        Err(Failure::Assertion(format!("residual {residual:e} >= {threshold:e}")))
    }
}

fn load_reports(path: &Path) -> Result<(Vec<SweepReport>, Vec<ExperimentRecord>), Failure> {
    let text = std::fs::read_to_string(path).map_err(|e| usage(format!("{}: {e}", path.display())))?;
    let value: Value = serde_json::from_str(&text).map_err(|e| usage(format!("{}: {e}", path.display())))?;
    let bad = |e: serde_json::Error| usage(format!("{}: not a sweep report or record list ({e})", path.display()));
    match &value {
        Value::Array(items) if items.iter().all(|v| v.get("records").is_some()) && !items.is_empty() => {
            let reports: Vec<SweepReport> = serde_json::from_value(value).map_err(bad)?;
            let records = reports.iter().flat_map(|r| r.records.clone()).collect();
            Ok((reports, records))
        }
        Value::Array(_) => Ok((Vec::new(), serde_json::from_value(value).map_err(bad)?)),
        _ if value.get("records").is_some() => {
            let r: SweepReport = serde_json::from_value(value).map_err(bad)?;
            let records = r.records.clone();
            Ok((vec![r], records))
        }
        _ => Ok((Vec::new(), vec![serde_json::from_value(value).map_err(bad)?])),
    }
}

fn report(a: ReportArgs) -> Result<(), Failure> {
    let mut reports = Vec::new();
    let mut records = Vec::new();
    for path in &a.inputs {
        let (r, rec) = load_reports(path)?;
        reports.extend(r);
        records.extend(rec);
    }
    let text = match a.format {
        Format::Csv => records_to_csv(&records)?,
        Format::Json => {
            let summary: Vec<Value> = reports
                .iter()
                .map(|r| json!({"experiment": r.experiment, "outcome": r.outcome, "checks": r.checks}))
                .collect();
            serde_json::to_string_pretty(&json!({"reports": summary, "records": records})).expect("json") + "\n"
        }
    };
    match &a.out {
        Some(path) => std::fs::write(path, text)?,
        None => emit(&text)?,
    }
    let failed = reports.iter().filter(|r| r.outcome == harness::Outcome::Fail).count();
    if a.strict && failed > 0 {
        return Err(Failure::Assertion(format!("{failed} aggregated report(s) failed")));
    }
    Ok(())
}
