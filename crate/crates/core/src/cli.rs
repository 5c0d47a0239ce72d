//! Command-line frontend: file I/O plus one subcommand per operation
//! family. Results go to stdout as JSON; artifacts go to files. With a
//! fixed `--seed`, identical inputs produce byte-identical outputs.
//!
//! Exit codes: 0 success, 2 invalid input or failed precondition/check,
//! 3 solver non-convergence.

use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};

use crate::alphafun::{
    euclidean_sam, first_variation_formula, first_variation_numeric, self_variation_formula,
    spherical_sam, total_mass, AlphaConcaveFunction, CombineOpts, DiscreteMeasure, SamBinning,
};
use crate::extgrid::{Axis, ExtendedGridFunction, Grid};
use crate::legendre::{conjugate, default_dual_grid};
use crate::minkowski::{solve, SolveConfig};
use crate::transport::{max_correlation_entropic, max_correlation_exact};
use crate::verify::{check_gradient_balance, check_integrability_trend, check_necessary_conditions};
use crate::{Error, Result};

#[derive(Parser)]
#[command(name = "alphamink", version, about = "Calculus of alpha-concave functions and the associated Minkowski problem")]
struct Cli {
    /// Fixes every randomized choice.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    /// Thread cap for internal parallel sections (all sections currently
    /// run sequentially, so any cap is honored).
    #[arg(long, global = true, default_value_t = 1)]
    threads: usize,
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Legendre transform of a grid function onto a dual grid.
    Legendre(LegendreArgs),
    /// Total mass J(f) of the α-concave function with the given base.
    Mass(MassArgs),
    /// First variation δJ_α(f, g), numeric and/or closed-form.
    Variation(VariationArgs),
    /// Euclidean (default) or spherical surface-area measure.
    Sam(SamArgs),
    /// Maximal-correlation transport between two measures.
    Ot(OtArgs),
    /// Solve the inverse (Minkowski) problem for a prescribed measure.
    Solve(SolveArgs),
    /// Run a named diagnostic check against a file.
    Verify(VerifyArgs),
}

#[derive(Args)]
struct LegendreArgs {
    function: PathBuf,
    /// Dual grid as min:max:count[,min:max:count]; defaults to the padded
    /// observed slope range.
    #[arg(long)]
    dual_grid: Option<String>,
    #[arg(short, long)]
    output: PathBuf,
}

#[derive(Args)]
struct MassArgs {
    function: PathBuf,
    #[arg(long, allow_hyphen_values = true)]
    alpha: f64,
}

#[derive(Args)]
struct VariationArgs {
    f: PathBuf,
    g: PathBuf,
    #[arg(long, allow_hyphen_values = true)]
    alpha: f64,
    /// Difference-quotient route only.
    #[arg(long, conflicts_with_all = ["formula", "both"])]
    numeric: bool,
    /// Variational-formula route only.
    #[arg(long, conflicts_with = "both")]
    formula: bool,
    /// Both routes (the default).
    #[arg(long)]
    both: bool,
    /// Positive decreasing t-sequence for the numeric route.
    #[arg(long, default_value = "0.2,0.1,0.05", allow_hyphen_values = true)]
    t_seq: String,
}

#[derive(Args)]
struct SamArgs {
    function: PathBuf,
    #[arg(long, allow_hyphen_values = true)]
    alpha: f64,
    #[arg(long)]
    spherical: bool,
    #[arg(short, long)]
    output: PathBuf,
}

#[derive(Args)]
struct OtArgs {
    rho: PathBuf,
    mu: PathBuf,
    #[arg(long, default_value = "exact")]
    backend: String,
    #[arg(long, default_value_t = 1e-2)]
    epsilon: f64,
    /// Optional sparse-triplet CSV export of the plan.
    #[arg(long)]
    plan: Option<PathBuf>,
    /// Optional CSV export of the potentials, aligned to the measure
    /// files (written as <prefix>.phi.csv and <prefix>.phistar.csv).
    #[arg(long)]
    potentials: Option<PathBuf>,
}

#[derive(Args)]
struct SolveArgs {
    mu: PathBuf,
    #[arg(long, allow_hyphen_values = true)]
    alpha: f64,
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(short, long)]
    output: PathBuf,
}

#[derive(Args)]
struct VerifyArgs {
    target: PathBuf,
    /// One of: necessary, integrability, balance.
    #[arg(long)]
    check: String,
    #[arg(long, allow_hyphen_values = true)]
    alpha: Option<f64>,
    /// Moment weight |x|^p for the integrability check.
    #[arg(long, default_value_t = 0.0)]
    p: f64,
    /// Power offset l for the integrability check.
    #[arg(long, default_value_t = 0)]
    l: usize,
    #[arg(long, default_value_t = 6)]
    levels: usize,
}

/// Entry point; returns the process exit code.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            // clap prints help/version through this path with status 0
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    if cli.threads == 0 {
        eprintln!("--threads must be at least 1");
        return 2;
    }
    match dispatch(&cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            2
        }
    }
}

fn dispatch(cli: &Cli) -> Result<i32> {
    match &cli.cmd {
        Cmd::Legendre(a) => cmd_legendre(a),
        Cmd::Mass(a) => cmd_mass(a),
        Cmd::Variation(a) => cmd_variation(a),
        Cmd::Sam(a) => cmd_sam(a),
        Cmd::Ot(a) => cmd_ot(a),
        Cmd::Solve(a) => cmd_solve(a, cli.seed),
        Cmd::Verify(a) => cmd_verify(a, cli.seed),
    }
}

fn emit(v: &serde_json::Value) -> Result<()> {
    println!("{}", serde_json::to_string_pretty(v)?);
    Ok(())
}

fn read_base(path: &Path) -> Result<ExtendedGridFunction> {
    let raw = ExtendedGridFunction::read_json(path)?;
    // bases must satisfy the convex + coercive structure regardless of
    // the flags stored in the file
    ExtendedGridFunction::with_claims(raw.grid().clone(), raw.values().to_vec(), true, true)
}

fn read_alpha_fn(path: &Path, alpha: f64) -> Result<AlphaConcaveFunction> {
    AlphaConcaveFunction::new(alpha, read_base(path)?)
}

fn parse_grid_spec(spec: &str) -> Result<Grid> {
    let mut axes = Vec::new();
    for part in spec.split(',') {
        let fields: Vec<&str> = part.split(':').collect();
        if fields.len() != 3 {
            return Err(Error::Format(format!(
                "grid axis {part:?} is not min:max:count"
            )));
        }
        let min: f64 =
            fields[0].parse().map_err(|e| Error::Format(format!("bad min {:?}: {e}", fields[0])))?;
        let max: f64 =
            fields[1].parse().map_err(|e| Error::Format(format!("bad max {:?}: {e}", fields[1])))?;
        let count: usize = fields[2]
            .parse()
            .map_err(|e| Error::Format(format!("bad count {:?}: {e}", fields[2])))?;
        axes.push(Axis::new(min, max, count)?);
    }
    Grid::new(axes)
}

fn cmd_legendre(a: &LegendreArgs) -> Result<i32> {
    let phi = read_base(&a.function)?;
    let dual = match &a.dual_grid {
        Some(spec) => parse_grid_spec(spec)?,
        None => default_dual_grid(&phi, None)?,
    };
    let r = conjugate(&phi, &dual)?;
    r.function.write_json(&a.output)?;
    let vals = r.function.values();
    emit(&serde_json::json!({
        "wrote": a.output.display().to_string(),
        "dualGrid": dual.axes(),
        "min": vals.iter().copied().fold(f64::INFINITY, f64::min),
        "max": vals.iter().copied().fold(f64::NEG_INFINITY, f64::max),
    }))?;
    Ok(0)
}

fn cmd_mass(a: &MassArgs) -> Result<i32> {
    let f = read_alpha_fn(&a.function, a.alpha)?;
    let r = total_mass(&f)?;
    emit(&serde_json::json!({
        "J": r.value,
        "estimatedError": r.estimated_error,
        "alpha": a.alpha,
    }))?;
    Ok(0)
}

fn cmd_variation(a: &VariationArgs) -> Result<i32> {
    let f = read_alpha_fn(&a.f, a.alpha)?;
    let g = read_alpha_fn(&a.g, a.alpha)?;
    let both = a.both || (!a.numeric && !a.formula);
    let mut out = serde_json::json!({ "alpha": a.alpha });
    if a.numeric || both {
        let ts: Vec<f64> = a
            .t_seq
            .split(',')
            .map(|s| s.trim().parse::<f64>().map_err(|e| Error::Format(format!("bad t {s:?}: {e}"))))
            .collect::<Result<_>>()?;
        let nv = first_variation_numeric(&f, &g, &ts, CombineOpts::default())?;
        out["numeric"] = serde_json::to_value(&nv)?;
    }
    if a.formula || both {
        let vf = first_variation_formula(&f, &g)?;
        out["formula"] = serde_json::json!({
            "interior": vf.interior,
            "boundary": vf.boundary,
            "value": vf.value(),
            "beta1": vf.beta1,
            "beta2": vf.beta2,
            "kinkFraction": vf.kink_fraction,
        });
    }
    // the self-variation closed form rides along when f and g coincide
    if f.grid() == g.grid() && f.base().values() == g.base().values() {
        out["selfVariation"] = serde_json::json!(self_variation_formula(&f)?);
    }
    emit(&out)?;
    Ok(0)
}

fn cmd_sam(a: &SamArgs) -> Result<i32> {
    let f = read_alpha_fn(&a.function, a.alpha)?;
    let m = if a.spherical {
        spherical_sam(&f, None)?
    } else {
        euclidean_sam(&f, &SamBinning::Raw)?
    };
    m.write_csv(&a.output)?;
    emit(&serde_json::json!({
        "wrote": a.output.display().to_string(),
        "atoms": m.len(),
        "total": m.total(),
        "spherical": a.spherical,
    }))?;
    Ok(0)
}

fn cmd_ot(a: &OtArgs) -> Result<i32> {
    let rho = DiscreteMeasure::read_csv(&a.rho)?;
    let mu = DiscreteMeasure::read_csv(&a.mu)?;
    match a.backend.as_str() {
        "exact" => {
            let (t, plan, pair) = max_correlation_exact(&rho, &mu)?;
            if let Some(p) = &a.plan {
                plan.write_csv(p)?;
            }
            if let Some(prefix) = &a.potentials {
                write_potentials(prefix, &pair.phi, &pair.phi_star)?;
            }
            emit(&serde_json::json!({
                "T": t,
                "gap": pair.duality_gap,
                "backend": "exact",
                "planEntries": plan.weights.len(),
            }))?;
        }
        "entropic" => {
            let (t, plan) = max_correlation_entropic(&rho, &mu, a.epsilon, 100_000)?;
            if let Some(p) = &a.plan {
                plan.write_csv(p)?;
            }
            emit(&serde_json::json!({
                "T": t,
                "backend": "entropic",
                "epsilon": a.epsilon,
                "planEntries": plan.weights.len(),
            }))?;
        }
        other => return Err(Error::Format(format!("unknown backend {other:?}"))),
    }
    Ok(0)
}

fn write_potentials(prefix: &Path, phi: &[f64], phi_star: &[f64]) -> Result<()> {
    let mut base = prefix.as_os_str().to_owned();
    base.push(".phi.csv");
    let mut w = csv::Writer::from_path(PathBuf::from(base))?;
    w.write_record(["index", "phi"])?;
    for (i, v) in phi.iter().enumerate() {
        w.write_record(&[i.to_string(), format!("{v}")])?;
    }
    w.flush()?;
    let mut base = prefix.as_os_str().to_owned();
    base.push(".phistar.csv");
    let mut w = csv::Writer::from_path(PathBuf::from(base))?;
    w.write_record(["index", "phiStar"])?;
    for (j, v) in phi_star.iter().enumerate() {
        w.write_record(&[j.to_string(), format!("{v}")])?;
    }
    w.flush()?;
    Ok(())
}

fn cmd_solve(a: &SolveArgs, seed: u64) -> Result<i32> {
    let mu = DiscreteMeasure::read_csv(&a.mu)?;
    let mut config = match &a.config {
        Some(path) => {
            let text = std::fs::read_to_string(path)?;
            serde_json::from_str::<SolveConfig>(&text)?
        }
        None => SolveConfig::new(a.alpha),
    };
    config.alpha = a.alpha;
    if seed != 0 {
        config.seed = seed;
    }
    let (out, report) = solve(&mu, &config)?;
    std::fs::create_dir_all(&a.output)?;
    out.base.write_json(&a.output.join("base.json"))?;
    let density = ExtendedGridFunction::new(out.grid().clone(), out.density.clone())?;
    density.write_json(&a.output.join("density.json"))?;
    out.atoms.write_csv(&a.output.join("atoms.csv"))?;
    let report_json = serde_json::to_value(&report)?;
    let mut pretty = serde_json::to_string_pretty(&report_json)?;
    pretty.push('\n');
    std::fs::write(a.output.join("report.json"), &pretty)?;
    emit(&report_json)?;
    if report.converged {
        Ok(0)
    } else {
        eprintln!("solver did not converge in {} iterations", report.iterations);
        Ok(3)
    }
}

fn cmd_verify(a: &VerifyArgs, seed: u64) -> Result<i32> {
    match a.check.as_str() {
        "necessary" => {
            let mu = DiscreteMeasure::read_csv(&a.target)?;
            let r = check_necessary_conditions(&mu, None)?;
            emit(&serde_json::to_value(&r)?)?;
            if r.pass {
                Ok(0)
            } else {
                if r.affine_hull_dim < mu.dim() {
                    eprintln!("check failed: support in hyperplane");
                } else {
                    eprintln!("check failed: barycenter norm {:.3e}", r.barycenter_norm);
                }
                Ok(2)
            }
        }
        "integrability" => {
            let alpha = a
                .alpha
                .ok_or_else(|| Error::Format("--alpha required for integrability".into()))?;
            let f = read_alpha_fn(&a.target, alpha)?;
            let r = check_integrability_trend(&f, a.p, a.l, a.levels)?;
            emit(&serde_json::to_value(&r)?)?;
            if r.pass {
                Ok(0)
            } else {
                eprintln!("check failed: increments do not decay geometrically");
                Ok(2)
            }
        }
        "balance" => {
            let alpha =
                a.alpha.ok_or_else(|| Error::Format("--alpha required for balance".into()))?;
            let f = read_alpha_fn(&a.target, alpha)?;
            let r = check_gradient_balance(&f, seed)?;
            emit(&serde_json::to_value(&r)?)?;
            if r.pass {
                Ok(0)
            } else {
                eprintln!("check failed: max residual {:.3e}", r.max_residual);
                Ok(2)
            }
        }
        other => Err(Error::Format(format!("unknown check {other:?}"))),
    }
}
