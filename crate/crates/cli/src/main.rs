use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand};
use menunet::config::{Comparison, ExperimentConfig, MAX_LP_N};
use menunet::duality::{self, DualityCertificate};
use menunet::lp::{self, Audit};
use menunet::oracles::{self, OptimalReference};
use menunet::trainer::{self, trace_csv, TrainOutcome};
use menunet::{evaluator, make_grid, DistributionSpec, Error, MechanismMode, Menu, ValuationKind};
use serde::Serialize;

#[derive(Parser)]
#[command(name = "menunet", version, about = "Learn and verify revenue-optimal menus for two items")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// Worker threads; defaults to the number of logical cores.
    #[arg(long, global = true)]
    threads: Option<usize>,
}

#[derive(Subcommand)]
enum Command {
    /// Train a menu and write menu.json, trace.csv, regions.svg and report.json.
    Train(RunArgs),
    /// Solve the direct-mechanism LP on the config's grid.
    Lp(LpArgs),
    /// Time the trainer and the LP over a range of grid sizes.
    Bench(RunArgs),
    /// Check the duality certificate of a menu on the uniform triangle.
    Certify(CertifyArgs),
}

#[derive(Args)]
struct RunArgs {
    #[arg(long)]
    config: PathBuf,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    /// Grid resolution override.
    #[arg(long = "n-grid")]
    n_grid: Option<usize>,
}

#[derive(Args)]
struct LpArgs {
    #[command(flatten)]
    run: RunArgs,
    /// Also export the full LP in free MPS format.
    #[arg(long)]
    mps: bool,
}

#[derive(Args)]
struct CertifyArgs {
    /// Triangle parameter: support is {v ≥ 0 : v1/c + v2 ≤ 1}.
    #[arg(long)]
    c: f64,
    /// Menu JSON; defaults to the known optimal menu for `c`.
    #[arg(long)]
    menu: Option<PathBuf>,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long = "quad-n", default_value_t = duality::DEFAULT_QUAD_N)]
    quad_n: usize,
    #[arg(long, default_value_t = duality::DEFAULT_TOL)]
    tol: f64,
}

enum Failure {
    /// Bad input: exit code 2.
    Input(String),
    /// Runtime failure or a failed check: exit code 1.
    Run(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::Config(_) | Error::InvalidArgument { .. } | Error::LpTooLarge { .. } => Failure::Input(e.to_string()),
            other => Failure::Run(other.to_string()),
        }
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure::Run(e.to_string())
    }
}

type CliResult<T = ()> = Result<T, Failure>;

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(n) = cli.threads {
        if n == 0 {
            eprintln!("error: --threads must be at least 1");
            return ExitCode::from(2);
        }
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            eprintln!("error: {e}");
            return ExitCode::from(1);
        }
    }
    let result = match &cli.command {
        Command::Train(args) => cmd_train(args),
        Command::Lp(args) => cmd_lp(args),
        Command::Bench(args) => cmd_bench(args),
        Command::Certify(args) => cmd_certify(args),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Input(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
        Err(Failure::Run(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
    }
}

fn load(args: &RunArgs) -> CliResult<ExperimentConfig> {
    let text = std::fs::read_to_string(&args.config)
        .map_err(|e| Failure::Input(format!("cannot read {}: {e}", args.config.display())))?;
    let mut cfg = match args.config.extension().and_then(|e| e.to_str()) {
        Some("json") => ExperimentConfig::from_json(&text)?,
        _ => ExperimentConfig::from_toml(&text)?,
    };
    if let Some(seed) = args.seed {
        cfg.train.seed = seed;
    }
    if let Some(n) = args.n_grid {
        cfg.train.grid_n = n;
        cfg.lp.n = n;
    }
    cfg.validate()?;
    Ok(cfg)
}

fn out_dir(args_out: &Option<PathBuf>, cfg: &ExperimentConfig) -> CliResult<PathBuf> {
    let dir = args_out
        .clone()
        .or_else(|| cfg.out_dir.clone())
        .unwrap_or_else(|| PathBuf::from("results").join(cfg.label()));
    std::fs::create_dir_all(&dir)?;
    Ok(dir)
}

fn write(path: &Path, contents: &str) -> CliResult {
    std::fs::write(path, contents).map_err(|e| Failure::Run(format!("{}: {e}", path.display())))
}

fn json<T: Serialize>(value: &T) -> CliResult<String> {
    serde_json::to_string_pretty(value).map_err(|e| Failure::Run(e.to_string()))
}

#[derive(Serialize)]
struct TrainReport {
    name: String,
    distribution: DistributionSpec,
    valuation: ValuationKind,
    mode: MechanismMode,
    k: usize,
    seed: u64,
    grid_n: usize,
    /// "exact" when evaluated on the continuous distribution, else "grid".
    revenue_basis: &'static str,
    revenue: f64,
    grid_revenue: f64,
    reference: Option<String>,
    optimal_revenue: Option<f64>,
    optimality: Option<f64>,
    restart: usize,
    restart_revenues: Vec<f64>,
    clean_menu: Menu,
    lp: Option<LpComparison>,
    duality: Option<DualitySummary>,
}

#[derive(Serialize)]
struct LpComparison {
    n: usize,
    objective: f64,
    trainer_grid_revenue: f64,
    gap: f64,
}

#[derive(Serialize)]
struct DualitySummary {
    trained_menu: DualityCertificate,
    optimal_menu: DualityCertificate,
}

fn cmd_train(args: &RunArgs) -> CliResult {
    let cfg = load(args)?;
    let dir = out_dir(&args.out, &cfg)?;
    let spec = &cfg.distribution;
    let grid = make_grid(spec, cfg.train.grid_n)?;
    let start = Instant::now();
    let out = trainer::train_on_grid(spec, &grid, cfg.valuation, &cfg.train, |_, _, _| {})?;
    eprintln!("trained in {:.1?}", start.elapsed());

    let exact = evaluator::supports_exact(spec, cfg.valuation, grid.dim());
    let revenue = if exact {
        evaluator::exact_revenue(&out.menu, spec)?
    } else {
        evaluator::grid_revenue(&out.menu, &grid, cfg.valuation)?
    };
    let reference: Option<OptimalReference> = if cfg.compare.contains(&Comparison::Oracle) {
        Some(oracles::reference_for(spec, cfg.train.k, cfg.train.mode)?)
    } else {
        None
    };
    let lp = if cfg.compare.contains(&Comparison::Lp) {
        Some(lp_compare(&cfg, &out)?)
    } else {
        None
    };
    let duality = match (cfg.compare.contains(&Comparison::Duality), spec) {
        (true, DistributionSpec::UniformTriangle { c }) => {
            let optimal = oracles::optimal_triangle(*c)?.menu.expect("triangle optimum has a menu");
            Some(DualitySummary {
                trained_menu: duality::certify(&out.menu, *c, cfg.certify.quad_n, cfg.certify.tol)?,
                optimal_menu: duality::certify(&optimal, *c, cfg.certify.quad_n, cfg.certify.tol)?,
            })
        }
        _ => None,
    };
    let report = TrainReport {
        name: cfg.label(),
        distribution: spec.clone(),
        valuation: cfg.valuation,
        mode: cfg.train.mode,
        k: out.menu.len(),
        seed: cfg.train.seed,
        grid_n: cfg.train.grid_n,
        revenue_basis: if exact { "exact" } else { "grid" },
        revenue,
        grid_revenue: evaluator::grid_revenue(&out.menu, &grid, cfg.valuation)?,
        reference: reference.as_ref().map(|r| r.name.clone()),
        optimal_revenue: reference.as_ref().map(|r| r.opt_revenue),
        optimality: reference.as_ref().map(|r| revenue / r.opt_revenue),
        restart: out.restart,
        restart_revenues: out.restart_revenues.clone(),
        clean_menu: trainer::extract_clean_menu(&out.menu, &grid, cfg.valuation)?,
        lp,
        duality,
    };

    write(&dir.join("menu.json"), &out.menu.to_json()?)?;
    write(&dir.join("trace.csv"), &trace_csv(&out.trace))?;
    if exact {
        evaluator::region_plot(&out.menu, spec, &dir.join("regions.svg"))?;
    } else {
        eprintln!("regions.svg skipped: regions are not polygons for this setting");
    }
    write(&dir.join("report.json"), &json(&report)?)?;
    match report.optimality {
        Some(ratio) => println!("revenue {revenue:.9} ({:.5}% of optimum)", 100.0 * ratio),
        None => println!("revenue {revenue:.9}"),
    }
    Ok(())
}

/// Trainer versus LP on the LP grid, refining the trained menu first when the
/// config asks for it.
fn lp_compare(cfg: &ExperimentConfig, trained: &TrainOutcome) -> CliResult<LpComparison> {
    let grid = make_grid(&cfg.distribution, cfg.lp.n)?;
    let sol = lp::solve_grid(&grid)?;
    let menu = match &cfg.lp.refine {
        Some(refine) => {
            trainer::train_from(&cfg.distribution, &grid, cfg.valuation, refine, trained.params.clone(), |_, _, _| {})?.menu
        }
        None => trained.menu.clone(),
    };
    let trainer_grid_revenue = evaluator::grid_revenue(&menu, &grid, cfg.valuation)?;
    Ok(LpComparison {
        n: cfg.lp.n,
        objective: sol.objective,
        trainer_grid_revenue,
        gap: sol.objective - trainer_grid_revenue,
    })
}

#[derive(Serialize)]
struct LpReport {
    name: String,
    n: usize,
    variables: usize,
    ic_rows: usize,
    ir_rows: usize,
    active_rows: usize,
    rounds: usize,
    objective: f64,
    max_ic_violation: f64,
    max_ir_violation: f64,
    audit_passed: bool,
    menu_items: usize,
    menu_exact_revenue: Option<f64>,
    trainer: Option<LpComparison>,
}

fn cmd_lp(args: &LpArgs) -> CliResult {
    let cfg = load(&args.run)?;
    if cfg.valuation != ValuationKind::Additive {
        return Err(Failure::Input("valuation: the LP baseline needs additive valuations".into()));
    }
    let n = cfg.lp.n;
    if n > MAX_LP_N {
        return Err(Failure::Input(format!("n-grid: LP refused for N = {n} > {MAX_LP_N}")));
    }
    let dir = out_dir(&args.run.out, &cfg)?;
    let grid = make_grid(&cfg.distribution, n)?;
    let start = Instant::now();
    let instance = lp::build_lp(&grid)?;
    if args.mps {
        instance.write_mps(&dir.join("lp.mps"))?;
    }
    let sol = lp::solve_lp(&instance)?;
    eprintln!("LP solved in {:.1?}", start.elapsed());
    let audit: Audit = lp::audit(&sol.mechanism);
    let menu = lp::menu_from_direct(&sol.mechanism)?;
    sol.mechanism.write_csv(&dir.join("solution.csv"))?;
    write(&dir.join("menu.json"), &menu.to_json()?)?;

    let trainer = match &cfg.lp.refine {
        Some(_) => {
            let trained = trainer::train(&cfg.distribution, cfg.valuation, &cfg.train)?;
            Some(lp_compare(&cfg, &trained)?)
        }
        None => None,
    };
    let exact = evaluator::supports_exact(&cfg.distribution, cfg.valuation, 2).then(|| evaluator::exact_revenue(&menu, &cfg.distribution));
    let report = LpReport {
        name: cfg.label(),
        n,
        variables: instance.vars(),
        ic_rows: instance.ic_rows(),
        ir_rows: instance.ir_rows(),
        active_rows: sol.active_rows,
        rounds: sol.rounds,
        objective: sol.objective,
        max_ic_violation: audit.max_ic_violation,
        max_ir_violation: audit.max_ir_violation,
        audit_passed: audit.passes(lp::AUDIT_TOL),
        menu_items: menu.len(),
        menu_exact_revenue: exact.transpose()?,
        trainer,
    };
    write(&dir.join("lp_report.json"), &json(&report)?)?;
    println!("LP objective {:.9} on N = {n}", sol.objective);
    if !report.audit_passed {
        return Err(Failure::Run("LP solution failed the IC/IR audit".into()));
    }
    Ok(())
}

#[derive(Serialize)]
struct BenchRow {
    method: &'static str,
    n: usize,
    seconds: f64,
    revenue: f64,
}

fn cmd_bench(args: &RunArgs) -> CliResult {
    let cfg = load(args)?;
    let dir = out_dir(&args.out, &cfg)?;
    let spec = &cfg.distribution;
    let exact = evaluator::supports_exact(spec, cfg.valuation, 2);
    let score = |menu: &Menu, n: usize| -> CliResult<f64> {
        Ok(if exact {
            evaluator::exact_revenue(menu, spec)?
        } else {
            evaluator::grid_revenue(menu, &make_grid(spec, n)?, cfg.valuation)?
        })
    };
    let mut rows = Vec::new();
    let run_trainer = |n: usize, rows: &mut Vec<BenchRow>| -> CliResult {
        let mut train_cfg = cfg.train.clone();
        train_cfg.grid_n = n;
        let start = Instant::now();
        let out = trainer::train(spec, cfg.valuation, &train_cfg)?;
        let seconds = start.elapsed().as_secs_f64();
        rows.push(BenchRow {
            method: "trainer",
            n,
            seconds,
            revenue: score(&out.menu, n)?,
        });
        Ok(())
    };
    for &n in &cfg.bench.shared {
        run_trainer(n, &mut rows)?;
        if cfg.valuation == ValuationKind::Additive {
            let start = Instant::now();
            let sol = lp::solve_grid(&make_grid(spec, n)?)?;
            let menu = lp::menu_from_direct(&sol.mechanism)?;
            let seconds = start.elapsed().as_secs_f64();
            rows.push(BenchRow {
                method: "lp",
                n,
                seconds,
                revenue: score(&menu, n)?,
            });
        }
        eprintln!("N = {n} done");
    }
    for &n in &cfg.bench.trainer_only {
        run_trainer(n, &mut rows)?;
        eprintln!("N = {n} done");
    }
    let path = dir.join("bench.csv");
    let mut writer = csv::Writer::from_path(&path).map_err(|e| Failure::Run(e.to_string()))?;
    for row in &rows {
        writer.serialize(row).map_err(|e| Failure::Run(e.to_string()))?;
        println!("{},{},{:.3},{:.9}", row.method, row.n, row.seconds, row.revenue);
    }
    writer.flush()?;
    Ok(())
}

fn cmd_certify(args: &CertifyArgs) -> CliResult {
    let menu = match &args.menu {
        Some(path) => {
            let text = std::fs::read_to_string(path)
                .map_err(|e| Failure::Input(format!("cannot read {}: {e}", path.display())))?;
            Menu::from_json(&text).map_err(|e| Failure::Input(format!("menu: {e}")))?
        }
        None => oracles::optimal_triangle(args.c)?
            .menu
            .expect("triangle optimum has a menu"),
    };
    let cert = duality::certify(&menu, args.c, args.quad_n, args.tol)?;
    let text = cert.to_json()?;
    if let Some(dir) = &args.out {
        std::fs::create_dir_all(dir)?;
        write(&dir.join("certificate.json"), &text)?;
    }
    println!("{text}");
    if cert.passed() {
        Ok(())
    } else {
        Err(Failure::Run("certificate failed".into()))
    }
}
