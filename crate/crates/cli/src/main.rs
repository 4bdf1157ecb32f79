//! Batch front end: generate instance grids, run the solvers over seed
//! matrices, emit LP models and build comparison reports.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};

use hhsrp_core::alns::{self, AlnsParams, Visibility};
use hhsrp_core::analysis::{self, RunRecord};
use hhsrp_core::instancegen::{
    expand_seeds, generate_grid_instance, grid_classes, ClassSpec, GRID_REPLICATES,
};
use hhsrp_core::io;
use hhsrp_core::milp::{MilpVariant, VariantKind};
use hhsrp_core::oracle;
use hhsrp_core::timeline::objective;
use hhsrp_core::uba;
use hhsrp_core::Instance;

#[derive(Parser)]
#[command(name = "hhsrp", about = "Home healthcare routing solver toolkit", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate benchmark instances.
    Gen(GenArgs),
    /// Run a solver over instance files and write a results CSV.
    Solve(SolveArgs),
    /// Write the mixed-integer model of an instance in LP format.
    EmitLp(EmitLpArgs),
    /// Join results CSVs into a comparison table.
    Report(ReportArgs),
    /// Solve tiny instances exactly by exhaustive enumeration.
    Oracle(OracleArgs),
}

#[derive(Args)]
struct GenArgs {
    /// Output directory for instance files.
    #[arg(long)]
    out: PathBuf,
    /// Generate the full benchmark grid.
    #[arg(long, conflicts_with = "class")]
    grid: bool,
    /// Generate one class, e.g. "h30_10_0".
    #[arg(long)]
    class: Option<String>,
    #[arg(long, default_value_t = GRID_REPLICATES)]
    replicates: usize,
    #[arg(long, default_value_t = 42)]
    master_seed: u64,
}

#[derive(Copy, Clone, PartialEq, Eq, ValueEnum)]
enum AlgoFlag {
    Uba,
    #[value(name = "uba+dp")]
    UbaDp,
    Alns,
}

#[derive(Copy, Clone, ValueEnum)]
enum VariantFlag {
    Vs,
    M,
    Std,
}

impl From<VariantFlag> for VariantKind {
    fn from(v: VariantFlag) -> VariantKind {
        match v {
            VariantFlag::Vs => VariantKind::Vs,
            VariantFlag::M => VariantKind::M,
            VariantFlag::Std => VariantKind::Std,
        }
    }
}

#[derive(Copy, Clone, ValueEnum)]
enum VisibilityFlag {
    Unique,
    Common,
    None,
}

impl From<VisibilityFlag> for Visibility {
    fn from(v: VisibilityFlag) -> Visibility {
        match v {
            VisibilityFlag::Unique => Visibility::Unique,
            VisibilityFlag::Common => Visibility::Common,
            VisibilityFlag::None => Visibility::None,
        }
    }
}

#[derive(Args)]
struct SolveArgs {
    #[arg(long, value_enum)]
    algo: AlgoFlag,
    #[arg(long, value_enum, default_value = "vs")]
    variant: VariantFlag,
    #[arg(long, value_enum, default_value = "unique")]
    visibility: VisibilityFlag,
    /// Master seed; replication seeds are derived from it.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 5)]
    replications: usize,
    /// Optional parameter file with `key = value` lines.
    #[arg(long)]
    params: Option<PathBuf>,
    /// Output directory for the CSV and solution files.
    #[arg(long)]
    out: PathBuf,
    /// Instance files.
    #[arg(required = true)]
    instances: Vec<PathBuf>,
}

#[derive(Args)]
struct EmitLpArgs {
    #[arg(long, value_enum, default_value = "vs")]
    variant: VariantFlag,
    /// Add upper-bound rows seeded by the constructive heuristic.
    #[arg(long)]
    upper_bound: bool,
    /// Output file; stdout when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
    instance: PathBuf,
}

#[derive(Args)]
struct ReportArgs {
    /// Results CSVs produced by `solve`.
    #[arg(required = true)]
    csvs: Vec<PathBuf>,
    /// Output file; stdout when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Crew capacity for the break-even column.
    #[arg(long, default_value_t = 2)]
    capacity: usize,
}

#[derive(Args)]
struct OracleArgs {
    #[arg(long, value_enum, default_value = "vs")]
    variant: VariantFlag,
    /// Output directory for solution files; omit for stdout summary only.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(required = true)]
    instances: Vec<PathBuf>,
}

const RESULTS_HEADER: &str = "instance,method,seed,objective,dp_moves,unvisited,cpu_ms";

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = match cli.command {
        Command::Gen(args) => run_gen(args),
        Command::Solve(args) => run_solve(args),
        Command::EmitLp(args) => run_emit_lp(args),
        Command::Report(args) => run_report(args),
        Command::Oracle(args) => run_oracle(args),
    };
    match outcome {
        Ok(failures) if failures == 0 => ExitCode::SUCCESS,
        Ok(failures) => {
            eprintln!("{failures} item(s) failed");
            ExitCode::from(2)
        }
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}

fn run_gen(args: GenArgs) -> Result<usize> {
    std::fs::create_dir_all(&args.out)
        .with_context(|| format!("create {}", args.out.display()))?;
    let specs: Vec<ClassSpec> = if args.grid {
        grid_classes()
    } else {
        let class = args.class.as_deref().context("need --grid or --class")?;
        let (spec, _) = ClassSpec::parse_name(&format!("{class}_0"))
            .with_context(|| format!("bad class name {class:?}"))?;
        vec![spec]
    };
    let mut written = 0;
    for spec in specs {
        for rep in 0..args.replicates {
            let inst = generate_grid_instance(args.master_seed, spec, rep);
            let path = args.out.join(format!("{}.inst", inst.name));
            io::save_instance(&inst, &path)?;
            written += 1;
        }
    }
    println!("wrote {written} instance file(s) to {}", args.out.display());
    Ok(0)
}

fn method_name(algo: AlgoFlag, variant: VariantKind) -> String {
    match algo {
        AlgoFlag::Uba => "uba".into(),
        AlgoFlag::UbaDp => "uba+dp".into(),
        AlgoFlag::Alns => match variant {
            VariantKind::Vs => "alns-vs".into(),
            VariantKind::M => "alns-m".into(),
            VariantKind::Std => "alns-std".into(),
        },
    }
}

fn load_params(path: Option<&Path>) -> Result<AlnsParams> {
    let mut p = AlnsParams::default();
    let Some(path) = path else { return Ok(p) };
    let text = std::fs::read_to_string(path)
        .with_context(|| format!("read {}", path.display()))?;
    for (ln, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (key, value) = line
            .split_once('=')
            .with_context(|| format!("{}:{}: expected `key = value`", path.display(), ln + 1))?;
        let (key, value) = (key.trim(), value.trim());
        let err = || format!("{}:{}: bad value {value:?} for {key}", path.display(), ln + 1);
        match key {
            "theta" => p.theta = value.parse().with_context(err)?,
            "theta_min" => p.theta_min = value.parse().with_context(err)?,
            "omega" => p.omega = value.parse().with_context(err)?,
            "phi" => p.phi = value.parse().with_context(err)?,
            "v_min" => p.v_min = value.parse().with_context(err)?,
            "xi" => p.xi = value.parse().with_context(err)?,
            "shaw_alpha" => p.shaw_alpha = value.parse().with_context(err)?,
            "shaw_beta" => p.shaw_beta = value.parse().with_context(err)?,
            "sigma" => p.sigma = value.parse().with_context(err)?,
            "phi_max" => p.phi_max = value.parse().with_context(err)?,
            "noise_mu" => p.noise_mu = value.parse().with_context(err)?,
            "cooling" => p.cooling = value.parse().with_context(err)?,
            "rho" => p.rho = value.parse().with_context(err)?,
            "t0_factor" => p.t0_factor = value.parse().with_context(err)?,
            other => bail!("{}:{}: unknown parameter {other:?}", path.display(), ln + 1),
        }
    }
    Ok(p)
}

fn run_solve(args: SolveArgs) -> Result<usize> {
    std::fs::create_dir_all(&args.out)
        .with_context(|| format!("create {}", args.out.display()))?;
    let base_params = load_params(args.params.as_deref())?;
    base_params.validate().map_err(anyhow::Error::msg)?;
    let variant: VariantKind = args.variant.into();
    let method = method_name(args.algo, variant);
    let seeds = expand_seeds(args.seed, args.replications);

    let mut rows = vec![RESULTS_HEADER.to_string()];
    let mut failures = 0;
    for path in &args.instances {
        let inst = match io::load_instance(path) {
            Ok(i) => i,
            Err(e) => {
                eprintln!("{}: {e}", path.display());
                failures += 1;
                continue;
            }
        };
        // the constructive heuristic is deterministic: one run per instance
        let run_seeds: &[u64] = if args.algo == AlgoFlag::Alns { &seeds } else { &seeds[..1] };
        for &seed in run_seeds {
            match solve_one(&inst, args.algo, variant, args.visibility.into(), seed, &base_params)
            {
                Ok((row, sol, sol_inst)) => {
                    rows.push(row);
                    let fname = format!("{}_{}_{}.sol", inst.name, method, seed);
                    io::save_solution(&sol, &sol_inst.name, &args.out.join(fname))?;
                }
                Err(e) => {
                    eprintln!("{} ({method}, seed {seed}): {e}", path.display());
                    failures += 1;
                }
            }
        }
    }
    let csv_path = args.out.join(format!("results_{method}.csv"));
    std::fs::write(&csv_path, rows.join("\n") + "\n")
        .with_context(|| format!("write {}", csv_path.display()))?;
    println!("wrote {} ({} row(s))", csv_path.display(), rows.len() - 1);
    Ok(failures)
}

fn solve_one(
    inst: &Instance,
    algo: AlgoFlag,
    variant: VariantKind,
    visibility: Visibility,
    seed: u64,
    base_params: &AlnsParams,
) -> Result<(String, hhsrp_core::Solution, Instance)> {
    let method = method_name(algo, variant);
    let started = std::time::Instant::now();
    let (sol, sol_inst, obj, dp_moves) = match algo {
        AlgoFlag::Uba | AlgoFlag::UbaDp => {
            let res = uba::uba_solve(inst);
            let mut sol = res.solution;
            let mut obj = res.mu;
            let mut moves = 0;
            if algo == AlgoFlag::UbaDp {
                moves = uba::apply_dp_postpass(&mut sol, inst);
                obj = objective(&sol, inst)?.total;
            }
            (sol, inst.clone(), obj, moves)
        }
        AlgoFlag::Alns => {
            let params = AlnsParams {
                variant,
                visibility,
                seed,
                ..base_params.clone()
            };
            let report = alns::run(inst, &params);
            let drops = report.num_drops;
            (report.best, report.instance, report.objective, drops)
        }
    };
    let cpu_ms = started.elapsed().as_millis();
    let unvisited = sol.unvisited.len();
    let row = format!(
        "{},{method},{seed},{obj:.4},{dp_moves},{unvisited},{cpu_ms}"
    , inst.name);
    Ok((row, sol, sol_inst))
}

fn run_emit_lp(args: EmitLpArgs) -> Result<usize> {
    let inst = io::load_instance(&args.instance)?;
    let kind: VariantKind = args.variant.into();
    let mut variant = MilpVariant { kind, upper_bound: None };
    if args.upper_bound {
        variant.upper_bound = Some(uba::uba_solve(&inst).mu);
    }
    let lp = hhsrp_core::milp::emit_lp(&inst, variant)?;
    match &args.out {
        Some(path) => std::fs::write(path, lp)
            .with_context(|| format!("write {}", path.display()))?,
        None => print!("{lp}"),
    }
    Ok(0)
}

fn parse_results_csv(path: &Path) -> Result<Vec<RunRecord>> {
    let text = std::fs::read_to_string(path)
        .with_context(|| format!("read {}", path.display()))?;
    let mut lines = text.lines();
    match lines.next() {
        Some(h) if h == RESULTS_HEADER => {}
        other => bail!(
            "{}: expected header {RESULTS_HEADER:?}, got {other:?}",
            path.display()
        ),
    }
    let mut out = Vec::new();
    for (ln, line) in lines.enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let f: Vec<&str> = line.split(',').collect();
        if f.len() != 7 {
            bail!("{}:{}: expected 7 columns", path.display(), ln + 2);
        }
        out.push(RunRecord {
            instance: f[0].to_string(),
            method: f[1].to_string(),
            seed: f[2].parse().with_context(|| format!("bad seed {:?}", f[2]))?,
            objective: f[3].parse().with_context(|| format!("bad objective {:?}", f[3]))?,
            dp_moves: f[4].parse().with_context(|| format!("bad dp count {:?}", f[4]))?,
            unvisited: f[5].parse().with_context(|| format!("bad unvisited {:?}", f[5]))?,
            cpu_ms: f[6].parse().with_context(|| format!("bad cpu {:?}", f[6]))?,
        });
    }
    Ok(out)
}

fn run_report(args: ReportArgs) -> Result<usize> {
    let mut records = Vec::new();
    for path in &args.csvs {
        records.extend(parse_results_csv(path)?);
    }
    let cmp = analysis::compare(&records).map_err(anyhow::Error::new)?;
    let csv = cmp.to_csv(Some(args.capacity));
    match &args.out {
        Some(path) => std::fs::write(path, csv)
            .with_context(|| format!("write {}", path.display()))?,
        None => print!("{csv}"),
    }
    Ok(0)
}

fn run_oracle(args: OracleArgs) -> Result<usize> {
    let variant: VariantKind = args.variant.into();
    let mut failures = 0;
    for path in &args.instances {
        let outcome = io::load_instance(path).and_then(|inst| {
            let vinst = hhsrp_core::milp::variant_instance(&inst, variant);
            let allow_drops = variant == VariantKind::Vs;
            let res = oracle::exact_solve(&vinst, allow_drops)?;
            if let Some(dir) = &args.out {
                std::fs::create_dir_all(dir)
                    .map_err(|e| hhsrp_core::Error::Parse(e.to_string()))?;
                let fname = format!("{}_oracle.sol", inst.name);
                io::save_solution(&res.solution, &inst.name, &dir.join(fname))?;
            }
            println!("{} optimum {:.4}", inst.name, res.objective);
            Ok(())
        });
        if let Err(e) = outcome {
            eprintln!("{}: {e}", path.display());
            failures += 1;
        }
    }
    Ok(failures)
}
