//! Batch front end for smooth-stress EDM point recovery.
//!
//! Subcommands: `gen` (instances), `minimize` (multi-start trust-region
//! search), `certify` (Kantorovich certificates and their re-verification),
//! `newton` (plain Newton iteration), `reduce` (formulation conversion) and
//! `check` (randomized property suites).
//!
//! Exit codes are stable for scripting: 0 success / CERTIFIED, 1 a
//! verification or check FAILED, 2 usage or validation error, 3 numerical
//! error.

mod checks;

use std::collections::BTreeMap;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde::{Deserialize, Serialize};

use edm_stress::certifier::{certify_lngm, verify_certificate, Certificate, CertifySettings};
use edm_stress::error::Error;
use edm_stress::instance::Instance;
use edm_stress::io;
use edm_stress::points::{EvalReport, Formulation, PointFile};
use edm_stress::solver::{
    classification_formulation, multi_start_scan, newton_iterate, newton_refine,
    trust_region_minimize, Classification, SolveOptions, SolveReport,
};
use edm_stress::stress::EvalContext;

#[derive(Parser)]
#[command(
    name = "edmstress",
    version,
    about = "Point recovery from Euclidean distance matrices: evaluate the smooth-stress \
             objective, locate second-order stationary points, and certify local nonglobal \
             minimizers."
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate an instance with centered standard-normal points and its
    /// exact squared-distance matrix.
    Gen(GenArgs),
    /// Multi-start trust-region minimization; writes one report per
    /// distinct stationary point.
    Minimize(MinimizeArgs),
    /// Produce or re-verify a Kantorovich certificate for a candidate
    /// minimizer.
    Certify(CertifyArgs),
    /// Run plain Newton iteration from a point and report the trajectory.
    Newton(NewtonArgs),
    /// Convert a point between the P, L and ell coordinate systems.
    Reduce(ReduceArgs),
    /// Run a randomized verification suite.
    Check(CheckArgs),
}

#[derive(Args)]
struct GenArgs {
    #[arg(long)]
    n: usize,
    #[arg(long)]
    d: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Scale factor applied to coordinate j as aniso^j; 1.0 keeps the
    /// isotropic standard-normal cloud.
    #[arg(long, default_value_t = 1.0)]
    aniso: f64,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct MinimizeArgs {
    #[arg(long)]
    instance: PathBuf,
    /// Search formulation: P, L or ell.
    #[arg(long, default_value = "L")]
    formulation: Formulation,
    #[arg(long, default_value_t = 8)]
    starts: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Start from this point file instead of random starts.
    #[arg(long, conflicts_with = "starts")]
    start_file: Option<PathBuf>,
    /// Include per-iteration traces in the report file.
    #[arg(long)]
    trace: bool,
    /// Write the per-iteration series (start, iteration, f, grad_norm,
    /// radius) as CSV for external plotting.
    #[arg(long)]
    csv: Option<PathBuf>,
    /// Additionally check embeddability of the instance data.
    #[arg(long)]
    strict: bool,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct CertifyArgs {
    #[arg(long)]
    instance: PathBuf,
    /// Candidate point file.
    #[arg(long, conflicts_with_all = ["from_report", "verify"])]
    point: Option<PathBuf>,
    /// Take the candidate from a minimize report.
    #[arg(long, conflicts_with = "verify")]
    from_report: Option<PathBuf>,
    /// Start index of the report entry to certify (default: the first
    /// LNGM_CANDIDATE).
    #[arg(long, requires = "from_report")]
    index: Option<usize>,
    /// Re-verify a stored certificate against the instance.
    #[arg(long)]
    verify: Option<PathBuf>,
    /// Ball radius for the Lipschitz and floor bounds.
    #[arg(long, default_value_t = 1e-3)]
    r: f64,
    /// Objective floor; defaults to f(x̃)/2.
    #[arg(long)]
    fbar: Option<f64>,
    /// Multiplicative safety factor on the Lipschitz constant.
    #[arg(long, default_value_t = 1.1)]
    safety: f64,
    /// Write the eigenvalue spectrum of the candidate Hessian as CSV.
    #[arg(long)]
    spectrum_csv: Option<PathBuf>,
    #[arg(long)]
    strict: bool,
    /// Certificate output path (required unless --verify).
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct NewtonArgs {
    #[arg(long)]
    instance: PathBuf,
    #[arg(long)]
    point: PathBuf,
    #[arg(long, default_value_t = 10)]
    steps: usize,
    /// Stop at the numerical limit instead of running exactly --steps
    /// iterations.
    #[arg(long)]
    refine: bool,
    #[arg(long)]
    strict: bool,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct ReduceArgs {
    #[arg(long)]
    instance: PathBuf,
    #[arg(long)]
    point: PathBuf,
    /// Target formulation: P, L or ell.
    #[arg(long)]
    to: Formulation,
    #[arg(long)]
    strict: bool,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct CheckArgs {
    /// One of: calculus, equivalence, theorems, certifier.
    #[arg(long)]
    suite: String,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

/// File form of a minimize run.
#[derive(Serialize, Deserialize)]
struct MinimizeOutput {
    formulation: Formulation,
    starts: usize,
    seed: u64,
    reports: Vec<SolveReport<f64>>,
    errors: Vec<RunFailure>,
}

#[derive(Serialize, Deserialize)]
struct RunFailure {
    start_index: usize,
    message: String,
}

/// File form of a newton run.
#[derive(Serialize, Deserialize)]
struct NewtonOutput {
    formulation: Formulation,
    requested_steps: usize,
    performed_steps: usize,
    /// Column-major flattenings of every iterate, starting point included.
    trajectory: Vec<Vec<f64>>,
    final_point: PointFile<f64>,
    eval: EvalReport<f64>,
}

fn thread_count() -> usize {
    std::env::var("EDMSTRESS_THREADS")
        .ok()
        .and_then(|v| v.parse::<usize>().ok())
        .filter(|&t| t >= 1)
        .unwrap_or(1)
}

fn exit_code_for(err: &Error) -> u8 {
    match err {
        Error::Numerical(_) | Error::SingularHessian { .. } => 3,
        _ => 2,
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => ExitCode::from(code),
        Err(err) => {
            eprintln!("error: {err}");
            ExitCode::from(exit_code_for(&err))
        }
    }
}

fn run(cli: Cli) -> Result<u8, Error> {
    match cli.command {
        Command::Gen(args) => cmd_gen(args),
        Command::Minimize(args) => cmd_minimize(args),
        Command::Certify(args) => cmd_certify(args),
        Command::Newton(args) => cmd_newton(args),
        Command::Reduce(args) => cmd_reduce(args),
        Command::Check(args) => cmd_check(args),
    }
}

fn cmd_gen(args: GenArgs) -> Result<u8, Error> {
    let inst = Instance::<f64>::generate_anisotropic(args.n, args.d, args.seed, args.aniso)?;
    inst.save(&args.out)?;
    println!(
        "wrote instance n={} d={} seed={} to {}",
        args.n,
        args.d,
        args.seed,
        args.out.display()
    );
    Ok(0)
}

fn cmd_minimize(args: MinimizeArgs) -> Result<u8, Error> {
    let inst = Instance::<f64>::load(&args.instance, args.strict)?;
    let opts = SolveOptions::<f64> {
        seed: args.seed,
        threads: thread_count(),
        ..Default::default()
    };
    opts.validate()?;

    let (mut reports, errors) = if let Some(start_path) = &args.start_file {
        let ctx = EvalContext::new(inst.clone(), args.formulation)?;
        let file = PointFile::<f64>::load(start_path)?;
        let point = file.into_point(inst.n(), inst.d())?;
        let x0 = ctx.convert(&point, args.formulation)?.point.to_vec();
        (vec![trust_region_minimize(&x0, &ctx, &opts)?], Vec::new())
    } else {
        let results = multi_start_scan(&inst, args.formulation, args.starts, &opts)?;
        let mut reports = Vec::new();
        let mut errors = Vec::new();
        for (i, res) in results.into_iter().enumerate() {
            match res {
                Ok(rep) => reports.push(rep),
                Err(e) => errors.push(RunFailure {
                    start_index: i,
                    message: e.to_string(),
                }),
            }
        }
        (reports, errors)
    };

    if let Some(csv_path) = &args.csv {
        let mut csv = String::from("start,iteration,f,grad_norm,radius\n");
        for rep in &reports {
            if let Some(trace) = &rep.trace {
                for (k, t) in trace.iter().enumerate() {
                    csv.push_str(&format!(
                        "{},{},{:.17e},{:.17e},{:.17e}\n",
                        rep.start_index, k, t.f, t.grad_norm, t.radius
                    ));
                }
            }
        }
        std::fs::write(csv_path, csv)?;
    }

    if !args.trace {
        for rep in &mut reports {
            rep.trace = None;
        }
    }

    let mut summary: BTreeMap<String, usize> = BTreeMap::new();
    for rep in &reports {
        *summary.entry(rep.classification.to_string()).or_insert(0) += 1;
    }
    let line = summary
        .iter()
        .map(|(k, v)| format!("{k}: {v}"))
        .collect::<Vec<_>>()
        .join(", ");
    println!(
        "{} distinct stationary points ({line}); {} failed runs",
        reports.len(),
        errors.len()
    );

    let out = MinimizeOutput {
        formulation: args.formulation,
        starts: args.starts,
        seed: args.seed,
        reports,
        errors,
    };
    io::write_json(&args.out, &out)?;
    Ok(0)
}

fn candidate_from_report(
    path: &PathBuf,
    index: Option<usize>,
    inst: &Instance<f64>,
) -> Result<PointFile<f64>, Error> {
    let report: MinimizeOutput = io::read_json(path)?;
    let _ = inst;
    let chosen = match index {
        Some(i) => report
            .reports
            .iter()
            .find(|r| r.start_index == i)
            .ok_or_else(|| Error::Invalid(format!("report has no entry with start index {i}")))?,
        None => report
            .reports
            .iter()
            .find(|r| r.classification == Classification::LngmCandidate)
            .ok_or_else(|| {
                Error::Invalid(
                    "report contains no LNGM_CANDIDATE; pass --index to pick an entry".into(),
                )
            })?,
    };
    Ok(chosen.final_point.clone())
}

fn cmd_certify(args: CertifyArgs) -> Result<u8, Error> {
    let inst = Instance::<f64>::load(&args.instance, args.strict)?;

    if let Some(cert_path) = &args.verify {
        let cert: Certificate<f64> = io::read_json(cert_path)?;
        let outcome = verify_certificate(&cert, &inst)?;
        let verdict = &outcome.recomputed.verdict;
        if outcome.verdict_reproduced {
            println!("verdict reproduced: {verdict:?}");
            return Ok(if verdict.is_certified() { 0 } else { 1 });
        }
        println!(
            "verdict NOT reproduced: stored {:?}, recomputed {:?}",
            cert.verdict, verdict
        );
        return Ok(1);
    }

    let out_path = args.out.as_ref().ok_or_else(|| {
        Error::Invalid("--out is required when producing a certificate".into())
    })?;
    let file = if let Some(point_path) = &args.point {
        PointFile::<f64>::load(point_path)?
    } else if let Some(report_path) = &args.from_report {
        candidate_from_report(report_path, args.index, &inst)?
    } else {
        return Err(Error::Invalid(
            "pass one of --point, --from-report or --verify".into(),
        ));
    };

    let target = classification_formulation(inst.d());
    let point = file.into_point(inst.n(), inst.d())?;
    let base = EvalContext::new(inst.clone(), point.formulation())?;
    let converted = base.convert(&point, target)?;
    if point.formulation() != target {
        eprintln!(
            "note: candidate converted from {} to {} for certification",
            point.formulation(),
            target
        );
    }
    let ctx = base.with_formulation(target);
    let settings = CertifySettings {
        safety_factor: args.safety,
        ..Default::default()
    };
    let x = converted.point.to_vec();
    let cert = certify_lngm(&x, &ctx, args.r, args.fbar, &settings)?;
    io::write_json(out_path, &cert)?;

    if let Some(csv_path) = &args.spectrum_csv {
        let eig = edm_stress::linalg::sym_eig(&ctx.hessian_dense(&x)?.h);
        let mut csv = String::from("index,eigenvalue\n");
        for (k, lam) in eig.values.iter().enumerate() {
            csv.push_str(&format!("{k},{lam:.17e}\n"));
        }
        std::fs::write(csv_path, csv)?;
    }
    match &cert.verdict {
        v if v.is_certified() => {
            println!("CERTIFIED: a strict local nonglobal minimizer exists within r0 = {:.6e}",
                cert.r0.expect("certified certificates carry r0"));
            Ok(0)
        }
        edm_stress::certifier::Verdict::Failed { reasons } => {
            println!("FAILED:");
            for reason in reasons {
                println!("  - {reason}");
            }
            Ok(1)
        }
        _ => unreachable!(),
    }
}

fn cmd_newton(args: NewtonArgs) -> Result<u8, Error> {
    let inst = Instance::<f64>::load(&args.instance, args.strict)?;
    let file = PointFile::<f64>::load(&args.point)?;
    let formulation = file.formulation;
    let ctx = EvalContext::new(inst.clone(), formulation)?;
    let point = file.into_point(inst.n(), inst.d())?;
    let x0 = point.to_vec();
    let xs = if args.refine {
        newton_refine(&x0, &ctx, args.steps)?
    } else {
        newton_iterate(&x0, &ctx, args.steps)?
    };
    let last = xs.last().expect("sequence contains the start");
    let eval = ctx.evaluate_report(last)?;
    let final_point = PointFile::from_point(&ctx.point_from_vec(last)?);
    println!(
        "{} steps: f = {:.6e}, ‖g‖ = {:.3e}, λ_min = {}",
        xs.len() - 1,
        eval.f,
        eval.grad_norm,
        eval.lambda_min
            .map_or("n/a".to_string(), |l| format!("{l:.6e}"))
    );
    let out = NewtonOutput {
        formulation,
        requested_steps: args.steps,
        performed_steps: xs.len() - 1,
        trajectory: xs.iter().map(|x| x.iter().copied().collect()).collect(),
        final_point,
        eval,
    };
    io::write_json(&args.out, &out)?;
    Ok(0)
}

fn cmd_reduce(args: ReduceArgs) -> Result<u8, Error> {
    let inst = Instance::<f64>::load(&args.instance, args.strict)?;
    let file = PointFile::<f64>::load(&args.point)?;
    let point = file.into_point(inst.n(), inst.d())?;
    let ctx = EvalContext::new(inst.clone(), point.formulation())?;
    let converted = ctx.convert(&point, args.to)?;
    if converted.rank_deficient {
        eprintln!(
            "warning: rank-deficient point; the triangular representative is not unique"
        );
    }
    let mut out = PointFile::from_point(&converted.point);
    if let Some(q) = &converted.q {
        out.q = Some(edm_stress::instance::matrix_to_rows(q));
    }
    out.save(&args.out)?;
    println!("wrote {} point to {}", args.to, args.out.display());
    Ok(0)
}

fn cmd_check(args: CheckArgs) -> Result<u8, Error> {
    let results = checks::run_suite(&args.suite, args.seed)?;
    let mut all_pass = true;
    for r in &results {
        let status = if r.pass { "PASS" } else { "FAIL" };
        println!("{status} {}: {}", r.name, r.detail);
        all_pass &= r.pass;
    }
    println!(
        "{}: {} of {} properties hold",
        args.suite,
        results.iter().filter(|r| r.pass).count(),
        results.len()
    );
    Ok(if all_pass { 0 } else { 1 })
}
