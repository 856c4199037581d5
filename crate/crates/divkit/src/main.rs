use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{ArgAction, Args, CommandFactory, Parser, Subcommand};

use divkit::check::{run_checks, CheckConfig, Suite};
use divkit::deconv::{self, blind_deconv_run, DeconvConfig, DeconvProblem, ImagePenalty, Mode, Variant};
use divkit::field::{fmt_exact, fmt_sig15};
use divkit::invariance::{log_form, make_invariant, Factor};
use divkit::io;
use divkit::nmf::{nmf_run, NmfConfig, NmfProblem, UpdateMode, XPenalty, XUpdate};
use divkit::penalty::Tikhonov;
use divkit::sgm::{Divergence, StepPolicy, Trace};
use divkit::{DivergenceSpec, Error, Family, Result};

/// Divergences, invariant forms, NMF and deconvolution.
///
/// Options can also come from `--config FILE`: `key = value` lines, optionally
/// under `[section]` headers. Keys before any header or under `[common]` apply
/// to every subcommand that accepts them; `[nmf]`, `[blind]` and so on apply
/// to that subcommand only. Command-line options override the file.
#[derive(Parser)]
#[command(name = "divkit", version)]
struct Cli {
    /// Configuration file.
    #[arg(long, global = true, value_name = "PATH")]
    config: Option<PathBuf>,
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Evaluate a divergence or its gradient.
    Div {
        #[command(subcommand)]
        op: DivOp,
    },
    /// Run the property suite over the catalog.
    Check(CheckArgs),
    /// Sum-constrained NMF.
    Nmf(NmfArgs),
    /// Deconvolution with a known PSF.
    Deconv(DeconvArgs),
    /// Blind deconvolution.
    Blind(DeconvArgs),
}

#[derive(Subcommand)]
enum DivOp {
    /// Print D(p || q).
    Eval(EvalArgs),
    /// Print the gradient with respect to q, one value per line.
    Grad(EvalArgs),
}

#[derive(Args, Clone)]
struct DivArgs {
    #[arg(long, default_value = "kl")]
    family: String,
    /// Family parameter, e.g. `--param lambda=0.5`. Repeatable.
    #[arg(long = "param", value_name = "K=V")]
    params: Vec<String>,
    /// Shorthand for `--param lambda=V`.
    #[arg(long, allow_hyphen_values = true)]
    lambda: Option<f64>,
    /// Make the divergence scale invariant: nominal, kstar or general:a,b,d,g,mu.
    #[arg(long)]
    factor: Option<String>,
    /// Use the logarithmic form of the invariant divergence.
    #[arg(long)]
    log_form: bool,
}

#[derive(Args)]
struct EvalArgs {
    #[command(flatten)]
    div: DivArgs,
    #[arg(long = "p", value_name = "PATH")]
    p: PathBuf,
    #[arg(long = "q", value_name = "PATH")]
    q: PathBuf,
    /// Also write the gradient to this file.
    #[arg(long, value_name = "PATH")]
    grad_out: Option<PathBuf>,
}

#[derive(Args)]
struct CheckArgs {
    #[arg(long, default_value_t = 42)]
    seed: u64,
    /// gradient, zero, invariance, ordering, diffeq or reductions. Repeatable; default all.
    #[arg(long = "suite")]
    suites: Vec<String>,
    /// Restrict to a family. Repeatable; default all.
    #[arg(long = "family")]
    families: Vec<String>,
    #[arg(long, default_value_t = 16)]
    n: usize,
    #[arg(long, default_value_t = 3)]
    settings: usize,
    #[arg(long, default_value_t = 20)]
    pairs: usize,
    /// Flip the sign of every closed-form gradient; the gradient suite must fail.
    #[arg(long)]
    inject_sign_error: bool,
}

#[derive(Args, Clone)]
struct SolverArgs {
    #[arg(long, default_value_t = 42)]
    seed: u64,
    #[arg(long)]
    max_iters: Option<usize>,
    #[arg(long)]
    tol: Option<f64>,
    /// armijo or fixed1.
    #[arg(long, default_value = "armijo")]
    step: String,
    /// Write the per-iteration trace here (tab separated).
    #[arg(long, value_name = "PATH")]
    trace: Option<PathBuf>,
    /// Weight of the penalty on H (NMF) or h (deconvolution).
    #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
    gamma: f64,
    /// Weight of the penalty on X or x.
    #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
    mu: f64,
}

#[derive(Args)]
struct NmfArgs {
    /// Data matrix.
    #[arg(long, value_name = "PATH")]
    y: PathBuf,
    #[arg(long, default_value_t = 2)]
    rank: usize,
    /// Directory for H.mat and X.mat.
    #[arg(long, default_value = ".")]
    out_dir: PathBuf,
    /// gradient or multiplicative.
    #[arg(long, default_value = "gradient")]
    mode: String,
    /// changevar or invariant.
    #[arg(long, default_value = "changevar")]
    x_update: String,
    /// Penalty on the columns of H: const or lap.
    #[arg(long)]
    h_penalty: Option<String>,
    /// Penalty on the columns of X: hoyer or hoyer-inv.
    #[arg(long)]
    x_penalty: Option<String>,
    /// Target Hoyer sparsity.
    #[arg(long, default_value_t = 0.5)]
    sparsity: f64,
    #[command(flatten)]
    div: DivArgs,
    #[command(flatten)]
    solver: SolverArgs,
}

#[derive(Args)]
struct DeconvArgs {
    /// Observed image (PGM or text grid).
    #[arg(long, value_name = "PATH")]
    y: PathBuf,
    /// PSF (normalized on reading). Required for `deconv`; the starting PSF for `blind`.
    #[arg(long, value_name = "PATH")]
    psf: Option<PathBuf>,
    /// Width of the Gaussian starting PSF when `blind` gets no `--psf`.
    #[arg(long, default_value_t = 2.0)]
    sigma0: f64,
    /// Restored object; `.pgm` writes an image, anything else a text grid.
    #[arg(long, default_value = "x.mat")]
    out: PathBuf,
    /// Estimated PSF (`blind` only).
    #[arg(long, default_value = "h.mat")]
    psf_out: PathBuf,
    /// invariant, changevar or multiplicative. Default: invariant when a factor is given.
    #[arg(long)]
    variant: Option<String>,
    /// Zero the PSF beyond this radius from the origin.
    #[arg(long)]
    support_radius: Option<f64>,
    /// drqi, lai:a, lbi:b, drq or drl.
    #[arg(long)]
    h_penalty: Option<String>,
    #[arg(long)]
    x_penalty: Option<String>,
    #[command(flatten)]
    div: DivArgs,
    #[command(flatten)]
    solver: SolverArgs,
}

/// Parsed `--config` file: `(section, key, value)` in file order.
fn read_config(path: &Path) -> Result<Vec<(Option<String>, String, String)>> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
    let mut section = None;
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') || line.starts_with(';') {
            continue;
        }
        if let Some(s) = line.strip_prefix('[').and_then(|s| s.strip_suffix(']')) {
            section = Some(s.trim().to_string()).filter(|s| s != "common");
            continue;
        }
        let (k, v) = line
            .split_once('=')
            .ok_or_else(|| Error::Io(format!("{}:{}: expected key = value", path.display(), i + 1)))?;
        out.push((section.clone(), k.trim().replace('_', "-"), v.trim().to_string()));
    }
    Ok(out)
}

/// Insert options from the config file after the subcommand tokens, skipping
/// any option also given on the command line.
fn merge_config(raw: Vec<String>) -> std::result::Result<Vec<String>, String> {
    let mut args = vec![raw[0].clone()];
    let mut config = None;
    let mut it = raw.into_iter().skip(1);
    let mut rest = Vec::new();
    while let Some(a) = it.next() {
        if a == "--config" {
            config = it.next();
        } else if let Some(p) = a.strip_prefix("--config=") {
            config = Some(p.to_string());
        } else {
            rest.push(a);
        }
    }
    let Some(config) = config else {
        args.extend(rest);
        return Ok(args);
    };
    let entries = read_config(Path::new(&config)).map_err(|e| e.to_string())?;
    // subcommand path: leading tokens that name subcommands
    let mut cmd = Cli::command();
    let mut path = Vec::new();
    let mut idx = 0;
    while idx < rest.len() {
        match cmd.find_subcommand(&rest[idx]) {
            Some(sub) => {
                let sub = sub.clone();
                path.push(rest[idx].clone());
                cmd = sub;
                idx += 1;
            }
            None => break,
        }
    }
    let Some(name) = path.first().cloned() else {
        args.extend(rest);
        return Ok(args);
    };
    let given: Vec<String> = rest[idx..]
        .iter()
        .filter_map(|a| a.strip_prefix("--").map(|s| s.split('=').next().unwrap_or(s).to_string()))
        .collect();
    let mut injected = Vec::new();
    for (section, key, value) in entries {
        let for_this = section.as_deref().map_or(true, |s| s == name);
        if !for_this {
            continue;
        }
        let arg = cmd.get_arguments().find(|a| a.get_long() == Some(key.as_str()));
        let Some(arg) = arg else {
            if section.is_some() {
                return Err(format!("config: '{key}' is not an option of '{}'", path.join(" ")));
            }
            continue;
        };
        let repeatable = matches!(arg.get_action(), ArgAction::Append);
        if !repeatable && given.contains(&key) {
            continue;
        }
        match arg.get_action() {
            ArgAction::SetTrue => match value.as_str() {
                "true" | "1" | "yes" => injected.push(format!("--{key}")),
                "false" | "0" | "no" => {}
                _ => return Err(format!("config: '{key}' expects true or false, got '{value}'")),
            },
            _ => injected.push(format!("--{key}={value}")),
        }
    }
    args.extend(path);
    args.extend(injected);
    args.extend(rest[idx..].iter().cloned());
    Ok(args)
}

fn divergence(a: &DivArgs) -> Result<Divergence> {
    let mut kv = Vec::new();
    for p in &a.params {
        let (k, v) = p.split_once('=').ok_or_else(|| Error::Param {
            name: "param".into(),
            msg: format!("'{p}' is not of the form name=value"),
        })?;
        let v: f64 = v.trim().parse().map_err(|_| Error::Param {
            name: k.trim().into(),
            msg: format!("'{}' is not a number", v.trim()),
        })?;
        kv.push((k.trim().to_string(), v));
    }
    if let Some(l) = a.lambda {
        kv.push(("lambda".into(), l));
    }
    let spec = DivergenceSpec::parse(&a.family, &kv)?;
    match &a.factor {
        None if a.log_form => {
            Err(Error::Param { name: "log-form".into(), msg: "needs --factor nominal or kstar".into() })
        }
        None => Ok(Divergence::Plain(spec)),
        Some(f) => {
            let inv = make_invariant(spec, Factor::parse(f)?)?;
            Ok(Divergence::Invariant(if a.log_form { log_form(&inv)? } else { inv }))
        }
    }
}

fn step_policy(s: &str) -> Result<StepPolicy> {
    match s {
        "armijo" => Ok(StepPolicy::Armijo { c1: 1e-4, rho: 0.5 }),
        "fixed1" => Ok(StepPolicy::Fixed(1.0)),
        _ => Err(Error::Param { name: "step".into(), msg: format!("'{s}' is not one of armijo, fixed1") }),
    }
}

fn write_trace(path: &Option<PathBuf>, trace: &Trace) -> Result<()> {
    if let Some(p) = path {
        let mut f = std::fs::File::create(p).map_err(|e| Error::Io(format!("{}: {e}", p.display())))?;
        trace.write_to(&mut f, '\t').map_err(|e| Error::Io(format!("{}: {e}", p.display())))?;
    }
    Ok(())
}

fn warn(ws: &[String]) {
    for w in ws {
        eprintln!("warning: {w}");
    }
}

fn cmd_div(op: DivOp) -> Result<ExitCode> {
    let (a, grad) = match op {
        DivOp::Eval(a) => (a, false),
        DivOp::Grad(a) => (a, true),
    };
    let d = divergence(&a.div)?;
    let p = io::read_vector(&a.p)?;
    let q = io::read_vector(&a.q)?;
    if grad {
        let g = d.gradient_q(&p, &q)?;
        print!("{}", io::format_vector(&g));
    } else {
        println!("{}", fmt_sig15(d.evaluate(&p, &q)?));
    }
    if let Some(path) = &a.grad_out {
        io::write_vector(path, &d.gradient_q(&p, &q)?)?;
    }
    Ok(ExitCode::SUCCESS)
}

fn cmd_check(a: CheckArgs) -> Result<ExitCode> {
    let mut c = CheckConfig {
        seed: a.seed,
        n: a.n,
        settings: a.settings,
        pairs: a.pairs,
        inject_sign_error: a.inject_sign_error,
        ..Default::default()
    };
    if !a.suites.is_empty() {
        c.suites = a.suites.iter().map(|s| Suite::parse(s)).collect::<Result<_>>()?;
    }
    c.families = a.families.iter().map(|f| Family::from_id(f)).collect::<Result<_>>()?;
    let rep = run_checks(&c)?;
    print!("{}", rep.table('\t'));
    println!("# {} checks, {} failures", rep.rows.len(), rep.failures());
    Ok(if rep.passed() { ExitCode::SUCCESS } else { ExitCode::from(1) })
}

fn cmd_nmf(a: NmfArgs) -> Result<ExitCode> {
    let start = Instant::now();
    let y = io::read_matrix(&a.y)?;
    let problem = NmfProblem::new(y, divergence(&a.div)?)?;
    let d = NmfConfig::default();
    let config = NmfConfig {
        rank: a.rank,
        max_iters: a.solver.max_iters.unwrap_or(d.max_iters),
        tol: a.solver.tol.unwrap_or(d.tol),
        step: step_policy(&a.solver.step)?,
        mode: match a.mode.as_str() {
            "gradient" => UpdateMode::Gradient,
            "multiplicative" => UpdateMode::Multiplicative,
            m => return Err(Error::Param { name: "mode".into(), msg: format!("'{m}' is not one of gradient, multiplicative") }),
        },
        x_update: match a.x_update.as_str() {
            "changevar" => XUpdate::ChangeVar,
            "invariant" => XUpdate::Invariant,
            m => return Err(Error::Param { name: "x-update".into(), msg: format!("'{m}' is not one of changevar, invariant") }),
        },
        gamma: a.solver.gamma,
        h_penalty: a.h_penalty.as_deref().map(Tikhonov::parse).transpose()?,
        mu: a.solver.mu,
        x_penalty: match a.x_penalty.as_deref() {
            None => None,
            Some("hoyer") => Some(XPenalty::Hoyer { s: a.sparsity }),
            Some("hoyer-inv") => Some(XPenalty::HoyerInvariant { s: a.sparsity }),
            Some(m) => return Err(Error::Param { name: "x-penalty".into(), msg: format!("'{m}' is not one of hoyer, hoyer-inv") }),
        },
        seed: a.solver.seed,
        ..d
    };
    let rep = nmf_run(&problem, &config)?;
    warn(&rep.warnings);
    std::fs::create_dir_all(&a.out_dir)?;
    io::write_matrix(&a.out_dir.join("H.mat"), &rep.state.h)?;
    io::write_matrix(&a.out_dir.join("X.mat"), &rep.state.x)?;
    write_trace(&a.solver.trace, &rep.trace)?;
    println!(
        "objective={} data={} h_residual={:e} x_residual={:e} iterations={} converged={} time={:.3}s",
        fmt_exact(rep.objective),
        fmt_exact(rep.data_term),
        rep.state.h_residual(),
        rep.state.x_residual(&problem),
        rep.trace.rows.len() - 1,
        rep.converged,
        start.elapsed().as_secs_f64()
    );
    Ok(ExitCode::SUCCESS)
}

fn cmd_deconv(a: DeconvArgs, mode: Mode) -> Result<ExitCode> {
    let start = Instant::now();
    let y = io::read_image(&a.y)?;
    let (r, c) = y.shape();
    let mut h0 = match (&a.psf, mode) {
        (Some(p), _) => io::read_image(p)?,
        (None, Mode::Blind) => deconv::gaussian_psf(r, c, a.sigma0)?,
        (None, Mode::KnownPsf) => return Err(Error::Param { name: "psf".into(), msg: "deconv needs --psf".into() }),
    };
    h0.normalize_all()?;
    let div = divergence(&a.div)?;
    let variant = match &a.variant {
        Some(v) => Variant::parse(v)?,
        None if div.is_invariant() => Variant::Invariant,
        None => Variant::ChangeVar,
    };
    let x0 = DeconvProblem::flat_start(&y);
    let problem = DeconvProblem::new(y, mode, h0, x0, div)?;
    let d = DeconvConfig::default();
    let config = DeconvConfig {
        max_iters: a.solver.max_iters.unwrap_or(d.max_iters),
        tol: a.solver.tol.unwrap_or(d.tol),
        step: step_policy(&a.solver.step)?,
        variant,
        gamma: a.solver.gamma,
        h_penalty: a.h_penalty.as_deref().map(ImagePenalty::parse).transpose()?,
        mu: a.solver.mu,
        x_penalty: a.x_penalty.as_deref().map(ImagePenalty::parse).transpose()?,
        support_radius: a.support_radius,
        ..d
    };
    let rep = blind_deconv_run(&problem, &config)?;
    warn(&rep.warnings);
    io::write_image(&a.out, &rep.state.x)?;
    if mode == Mode::Blind {
        io::write_image(&a.psf_out, &rep.state.h)?;
    }
    write_trace(&a.solver.trace, &rep.trace)?;
    let (cr, cc) = deconv::centroid(&rep.state.h);
    println!(
        "objective={} data={} h_residual={:e} x_residual={:e} iterations={} converged={} centroid=({:.6},{:.6}) time={:.3}s",
        fmt_exact(rep.objective),
        fmt_exact(rep.data_term),
        rep.state.h_residual(),
        rep.state.x_residual(problem.flux()),
        rep.iterations,
        rep.converged,
        cr,
        cc,
        start.elapsed().as_secs_f64()
    );
    Ok(ExitCode::SUCCESS)
}

fn main() -> ExitCode {
    let args = match merge_config(std::env::args().collect()) {
        Ok(a) => a,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(2);
        }
    };
    let cli = Cli::try_parse_from(args).unwrap_or_else(|e| e.exit());
    let out = match cli.cmd {
        Cmd::Div { op } => cmd_div(op),
        Cmd::Check(a) => cmd_check(a),
        Cmd::Nmf(a) => cmd_nmf(a),
        Cmd::Deconv(a) => cmd_deconv(a, Mode::KnownPsf),
        Cmd::Blind(a) => cmd_deconv(a, Mode::Blind),
    };
    match out {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(if e.is_config() { 2 } else { 1 })
        }
    }
}
