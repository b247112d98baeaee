use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::Args;
use serde::Serialize;
use sha2::{Digest, Sha256};

use vrpwdn::exact::{exact_solve, ExactError, ExactLimits};
use vrpwdn::generator::{generate, GenSpec, Suite};
use vrpwdn::ils::ils_run;
use vrpwdn::io::{format_instance, write_solution};
use vrpwdn::milp::{build, read_values, BuildOptions, Formulation};
use vrpwdn::solution::validate as validate_solution;

use crate::{load_instance, load_solution, CliError, ReportFormat, SearchArgs};

#[derive(Args, Debug)]
pub struct GenArgs {
    /// Benchmark suite: random-small, random-large, realistic or all.
    #[arg(long, conflicts_with = "subset")]
    suite: Option<String>,
    /// A single instance: n_demand,n_wells,n_centers,K.
    #[arg(long, value_delimiter = ',')]
    subset: Option<Vec<usize>>,
    /// Replicates for --subset.
    #[arg(long, default_value_t = 1)]
    count: usize,
    /// Coordinate pool for the realistic suite, one "x y" pair per line.
    #[arg(long)]
    pool: Option<PathBuf>,
    /// Master seed.
    #[arg(long, env = "VRPWDN_SEED", default_value_t = 0)]
    seed: u64,
    #[arg(long, short, default_value = ".")]
    out: PathBuf,
}

fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

fn write_specs(specs: &[GenSpec], dir: &Path) -> Result<String, CliError> {
    std::fs::create_dir_all(dir)?;
    let mut manifest = String::from("file,n_demand,n_wells,n_centers,K,replicate,seed,sha256\n");
    for spec in specs {
        let inst = generate(spec)?;
        let text = format_instance(&inst);
        std::fs::write(dir.join(spec.file_name()), &text)?;
        let (n, w, c, k) = spec.subset();
        let _ = writeln!(manifest, "{},{n},{w},{c},{k},{},{},{}", spec.file_name(), spec.replicate, spec.seed, sha256_hex(text.as_bytes()));
    }
    std::fs::write(dir.join("manifest.csv"), &manifest)?;
    Ok(sha256_hex(manifest.as_bytes()))
}

pub fn gen(a: GenArgs) -> Result<(), CliError> {
    let pool = a.pool.as_deref();
    match (&a.suite, &a.subset) {
        (Some(label), None) if label == "all" => {
            for suite in Suite::ALL {
                let specs = suite.specs(a.seed, pool);
                let digest = write_specs(&specs, &a.out.join(suite.label()))?;
                println!("{}: {} instances, manifest {digest}", suite.label(), specs.len());
            }
        }
        (Some(label), None) => {
            let suite = Suite::from_label(label).ok_or_else(|| CliError::Usage(format!("unknown suite {label}")))?;
            let specs = suite.specs(a.seed, pool);
            let digest = write_specs(&specs, &a.out)?;
            println!("{}: {} instances, manifest {digest}", suite.label(), specs.len());
        }
        (None, Some(t)) if t.len() != 4 => return Err(CliError::Usage("--subset takes n_demand,n_wells,n_centers,K".into())),
        (None, Some(t)) => {
            let specs: Vec<GenSpec> = (1..=a.count)
                .map(|u| {
                    let seed = vrpwdn::rng::derive_seed(a.seed, &[t[0] as u64, t[1] as u64, t[2] as u64, t[3] as u64, u as u64]);
                    GenSpec { replicate: u, ..GenSpec::uniform(t[0], t[1], t[2], t[3], seed) }
                })
                .collect();
            let digest = write_specs(&specs, &a.out)?;
            println!("{} instances, manifest {digest}", specs.len());
        }
        _ => return Err(CliError::Usage("pass either --suite or --subset".into())),
    }
    Ok(())
}

#[derive(Args, Debug)]
pub struct SolveArgs {
    instance: PathBuf,
    #[command(flatten)]
    search: SearchArgs,
    /// Best solution file; defaults to the instance path with a .sol extension.
    #[arg(long)]
    solution: Option<PathBuf>,
    /// JSON report file; defaults to the instance path with a .report.json extension.
    #[arg(long)]
    report: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = ReportFormat::Text)]
    format: ReportFormat,
}

#[derive(Serialize)]
struct RunRow {
    run: usize,
    seed: u64,
    z: f64,
    l: f64,
    t_s: f64,
}

#[derive(Serialize)]
struct Report {
    instance: String,
    seed: u64,
    alpha: f64,
    beta: usize,
    gamma: usize,
    max_iter: usize,
    z_best: f64,
    l_best: f64,
    z_avg: f64,
    z_worst: f64,
    sigma_z: f64,
    t_s: f64,
    runs: Vec<RunRow>,
}

fn with_suffix(path: &Path, suffix: &str) -> PathBuf {
    let stem = path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
    path.with_file_name(format!("{stem}{suffix}"))
}

pub fn solve(a: SolveArgs) -> Result<(), CliError> {
    let inst = load_instance(&a.instance)?;
    let params = a.search.params();
    params.check()?;
    let report = a.search.pool()?.install(|| ils_run(&inst, &params))?;
    let out = Report {
        instance: report.instance.clone(),
        seed: params.seed,
        alpha: params.alpha,
        beta: params.beta,
        gamma: params.gamma,
        max_iter: params.max_iter,
        z_best: report.z,
        l_best: report.l,
        z_avg: report.z_avg,
        z_worst: report.z_worst,
        sigma_z: report.sigma_z,
        t_s: report.wall_seconds,
        runs: report.runs.iter().map(|r| RunRow { run: r.run, seed: r.seed, z: r.z, l: r.l, t_s: r.seconds }).collect(),
    };
    let json = serde_json::to_string_pretty(&out).map_err(|e| CliError::Input(e.to_string()))?;
    let sol_path = a.solution.unwrap_or_else(|| a.instance.with_extension("sol"));
    let report_path = a.report.unwrap_or_else(|| with_suffix(&a.instance, ".report.json"));
    write_solution(&report.best, &sol_path)?;
    std::fs::write(&report_path, format!("{json}\n"))?;
    match a.format {
        ReportFormat::Json => println!("{json}"),
        ReportFormat::Text => {
            println!("instance {}", out.instance);
            println!("z_best {:.2}  z_avg {:.2}  z_worst {:.2}  sigma_z {:.2}  t(s) {:.2}", out.z_best, out.z_avg, out.z_worst, out.sigma_z, out.t_s);
            for r in &out.runs {
                println!("run {}  seed {}  z {:.2}  l {:.2}  t(s) {:.2}", r.run, r.seed, r.z, r.l, r.t_s);
            }
            println!("solution written to {}", sol_path.display());
        }
    }
    Ok(())
}

#[derive(Args, Debug)]
pub struct ExactArgs {
    instance: PathBuf,
    /// Largest instance accepted, in demand nodes.
    #[arg(long, default_value_t = 8)]
    max_demand: usize,
    #[arg(long, default_value_t = 2)]
    max_vehicles: usize,
    /// Cap on partial sequences explored.
    #[arg(long, default_value_t = ExactLimits::default().node_budget)]
    node_budget: u64,
    /// Enumerate without bounding.
    #[arg(long)]
    no_prune: bool,
    #[arg(long)]
    solution: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = ReportFormat::Text)]
    format: ReportFormat,
}

pub fn exact(a: ExactArgs) -> Result<(), CliError> {
    let inst = load_instance(&a.instance)?;
    let limits = ExactLimits { max_demand_nodes: a.max_demand, max_vehicles: a.max_vehicles, node_budget: a.node_budget, prune: !a.no_prune };
    let started = Instant::now();
    let result = exact_solve(&inst, &limits).map_err(|e| match e {
        ExactError::TooLarge { .. } => CliError::Usage(e.to_string()),
        _ => CliError::Rejected(e.to_string()),
    })?;
    let seconds = started.elapsed().as_secs_f64();
    if let Some(path) = &a.solution {
        write_solution(&result.solution, path)?;
    }
    match a.format {
        ReportFormat::Json => {
            let v = serde_json::json!({
                "instance": inst.name(),
                "z": result.solution.z,
                "l": result.solution.l,
                "proven_optimal": result.proven_optimal,
                "explored": result.explored,
                "t_s": seconds,
            });
            println!("{v}");
        }
        ReportFormat::Text => {
            println!("instance {}", inst.name());
            println!(
                "z {:.2}  l {:.2}  proven optimal: {}  explored {}  t(s) {:.2}",
                result.solution.z,
                result.solution.l,
                if result.proven_optimal { "yes" } else { "no" },
                result.explored,
                seconds
            );
        }
    }
    Ok(())
}

#[derive(Args, Debug)]
pub struct ValidateArgs {
    instance: PathBuf,
    /// Solution file to check.
    #[arg(required_unless_present = "values")]
    solution: Option<PathBuf>,
    /// Solver output with one "<variable> <value>" per line; missing
    /// variables are taken as zero.
    #[arg(long, requires = "formulation")]
    values: Option<PathBuf>,
    /// Model the values belong to: time, flow or node.
    #[arg(long)]
    formulation: Option<String>,
    /// The model included the valid inequalities.
    #[arg(long)]
    vi: bool,
}

pub fn validate(a: ValidateArgs) -> Result<(), CliError> {
    let inst = load_instance(&a.instance)?;
    let mut problems = 0;
    if let Some(path) = &a.solution {
        let sol = load_solution(&inst, path)?;
        let found = validate_solution(&inst, &sol);
        if found.is_empty() {
            println!("feasible: z {:.2}  l {:.2}", sol.z, sol.l);
        }
        for v in &found {
            println!("{v}");
        }
        problems += found.len();
    }
    if let Some(path) = &a.values {
        let label = a.formulation.as_deref().unwrap_or_default();
        let f = Formulation::from_label(label).ok_or_else(|| CliError::Usage(format!("unknown formulation {label}")))?;
        let model = build(&inst, f, BuildOptions { with_vi: a.vi, ..Default::default() });
        let mut values = read_values(path).map_err(|e| CliError::Input(format!("{}: {e}", path.display())))?;
        for v in &model.variables {
            values.entry(v.name.clone()).or_insert(0.0);
        }
        let found = model.check(&values)?;
        let objective = model.objective_value(&values)?;
        if found.is_empty() {
            println!("{f} assignment satisfies all {} rows: objective {objective:.2}", model.row_count());
        }
        for v in &found {
            println!("{:?} {}: lhs {} {} {} (slack {:.6})", v.kind, v.name, v.lhs, v.sense.symbol(), v.rhs, v.slack);
        }
        problems += found.len();
    }
    if problems > 0 {
        return Err(CliError::Rejected(format!("{problems} violations")));
    }
    Ok(())
}
