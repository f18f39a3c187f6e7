use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use byzsgd::engine::{self, RunConfig};
use byzsgd::harness::{self, ConfigFile, Format};
use byzsgd::planner::{self, BoundParams};
use byzsgd::tasks::Task;
use byzsgd::vecmath::RngStream;
use byzsgd::{verify, Error, Result};

#[derive(Parser)]
#[command(name = "byzsgd", version, about = "Byzantine-robust distributed SGD simulator and batch-size planner")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Output {
    /// Output file (stdout when omitted).
    #[arg(long)]
    out: Option<PathBuf>,
    /// csv or json.
    #[arg(long, default_value = "csv")]
    format: String,
}

#[derive(Subcommand)]
enum Command {
    /// Optimal batch sizes, bounds and hyperparameters.
    Plan(PlanArgs),
    /// Run one training config.
    Run {
        config: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
        /// Also write the per-round metrics trace (CSV) here.
        #[arg(long)]
        trace: Option<PathBuf>,
        #[command(flatten)]
        output: Output,
    },
    /// Run every point of a grid config.
    Grid {
        config: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long, default_value_t = default_parallelism())]
        parallelism: usize,
        #[command(flatten)]
        output: Output,
    },
    /// Run the oracle and property checks.
    Verify {
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Transcribed batch-size table.
        #[arg(long)]
        fixture: Option<PathBuf>,
        /// Also run the logistic-regression batch-size trend experiments (minutes).
        #[arg(long)]
        full: bool,
    },
    /// Best batch size per δ from a results CSV or a transcribed fixture.
    Analyze {
        input: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
        /// text or json.
        #[arg(long, default_value = "text")]
        format: String,
    },
}

#[derive(Args)]
struct PlanArgs {
    /// Smoothness L.
    #[arg(long = "L")]
    l: Option<f64>,
    #[arg(long)]
    sigma: Option<f64>,
    #[arg(long = "F0")]
    f0: Option<f64>,
    #[arg(long, default_value_t = 1.0)]
    c: f64,
    #[arg(long)]
    delta: Option<f64>,
    #[arg(long)]
    m: Option<usize>,
    /// Total honest sample budget.
    #[arg(long = "C")]
    budget: Option<f64>,
    #[arg(long = "T")]
    iterations: Option<f64>,
    #[arg(long = "B")]
    batch: Option<f64>,
    /// Take L, σ, F0, δ and m from a run config (flags override).
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: Option<PathBuf>,
    /// text or json.
    #[arg(long, default_value = "text")]
    format: String,
}

fn default_parallelism() -> usize {
    std::thread::available_parallelism().map(|n| n.get()).unwrap_or(1)
}

fn write_text(out: Option<&Path>, text: &str) -> Result<()> {
    match out {
        Some(p) => std::fs::write(p, text).map_err(|e| Error::Io(format!("{}: {e}", p.display()))),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn required(v: Option<f64>, flag: &str) -> Result<f64> {
    v.ok_or_else(|| Error::Config(format!("missing --{flag}")))
}

fn plan(a: PlanArgs) -> Result<()> {
    let mut base: Option<(f64, f64, f64, f64, usize, bool)> = None;
    let mut config_tb = None;
    if let Some(path) = &a.config {
        let cfg = match harness::parse_config(path)? {
            ConfigFile::Run(c) => c,
            ConfigFile::Grid(g) => g.base,
        };
        let task = Task::build(&cfg.task)?;
        let k = match task.exact_constants() {
            Some(k) => k,
            None => task.estimate_constants(8, &RngStream::with_tag(a.seed, 0, 0, 0x91A))?,
        };
        base = Some((k.l_smooth, k.sigma2.sqrt(), k.f0, cfg.delta, cfg.m, k.exact));
        config_tb = Some((cfg.total_rounds(&task) as f64, cfg.batch_size as f64));
    }
    let p0 = BoundParams {
        l_smooth: a.l.or(base.map(|b| b.0)).ok_or_else(|| Error::Config("missing --L".into()))?,
        sigma: a.sigma.or(base.map(|b| b.1)).ok_or_else(|| Error::Config("missing --sigma".into()))?,
        f0: a.f0.or(base.map(|b| b.2)).ok_or_else(|| Error::Config("missing --F0".into()))?,
        c: a.c,
        delta: a.delta.or(base.map(|b| b.3)).ok_or_else(|| Error::Config("missing --delta".into()))?,
        m: a.m.or(base.map(|b| b.4)).ok_or_else(|| Error::Config("missing --m".into()))?,
        budget: 0.0,
    };
    p0.validate()?;
    let scale = p0.m as f64 * (1.0 - p0.delta);
    let tb = match (a.iterations, a.batch) {
        (Some(t), Some(b)) => Some((t, b)),
        (None, None) => None,
        _ => return Err(Error::Config("--T and --B must be given together".into())),
    }
    .or(if a.budget.is_none() { config_tb } else { None });
    let budget = match (a.budget, tb) {
        (Some(c), _) => c,
        (None, Some((t, b))) => t * b * scale,
        (None, None) => required(None, "C (or --T and --B)")?,
    };
    let p = BoundParams { budget, ..p0 };
    let report = planner::plan(&p)?;
    let at_tb = match tb {
        Some((t, b)) => {
            let (eta_m, beta_m) = planner::hyperparams_byzsgdm(t, b, &p)?;
            let (alpha, eta_nm) = planner::hyperparams_byzsgdnm(t, b, &p)?;
            Some(serde_json::json!({
                "T": t, "B": b,
                "byzsgdm_bound": planner::bound_byzsgdm(t, b, &p)?,
                "byzsgdm_eta": eta_m, "byzsgdm_beta": beta_m,
                "byzsgdnm_bound": planner::bound_byzsgdnm(t, b, &p)?,
                "byzsgdnm_eta": eta_nm, "byzsgdnm_beta": 1.0 - alpha,
            }))
        }
        None => None,
    };
    let approximate = base.is_some_and(|b| !b.5);
    let text = match a.format.as_str() {
        "json" => {
            let mut v = serde_json::to_value(&report).map_err(|e| Error::Io(e.to_string()))?;
            v["approximate_constants"] = serde_json::Value::Bool(approximate);
            if let Some(x) = at_tb {
                v["at_given_T_B"] = x;
            }
            serde_json::to_string_pretty(&v).map_err(|e| Error::Io(e.to_string()))? + "\n"
        }
        "text" => {
            let mut s = String::new();
            let r = &report;
            s += &format!(
                "L={} sigma={} F0={} c={} delta={} m={} C={}{}\n",
                p.l_smooth,
                p.sigma,
                p.f0,
                p.c,
                p.delta,
                p.m,
                p.budget,
                if approximate { "  (constants estimated; approximate)" } else { "" }
            );
            s += &format!("{:<10} {:>14} {:>10} {:>14} {:>12} {:>12} {:>10}\n", "algorithm", "B (cont.)", "B (int)", "bound", "T", "eta", "beta");
            s += &format!(
                "{:<10} {:>14.6} {:>10} {:>14.6e} {:>12.1} {:>12.6e} {:>10.6}\n",
                "byzsgdm", r.b_star.batch, r.b_star_integer, r.b_star.bound, r.byzsgdm_iterations, r.byzsgdm_eta, r.byzsgdm_beta
            );
            s += &format!(
                "{:<10} {:>14.6} {:>10} {:>14.6e} {:>12.1} {:>12.6e} {:>10.6}\n",
                "byzsgdnm", r.b_tilde_star.batch, r.byzsgdnm_batch, r.b_tilde_star.bound, r.byzsgdnm_iterations, r.byzsgdnm_eta, r.byzsgdnm_beta
            );
            if !r.b_star.interior {
                s += "note: no interior optimum for ByzSGDm at this delta; any batch size attains the same leading terms\n";
            }
            if let Some(x) = at_tb {
                s += &format!(
                    "at T={} B={}: byzsgdm bound {:.6e} (eta {:.6e}, beta {:.6}); byzsgdnm bound {:.6e} (eta {:.6e}, beta {:.6})\n",
                    x["T"], x["B"], x["byzsgdm_bound"].as_f64().unwrap_or(f64::NAN), x["byzsgdm_eta"].as_f64().unwrap_or(f64::NAN),
                    x["byzsgdm_beta"].as_f64().unwrap_or(f64::NAN), x["byzsgdnm_bound"].as_f64().unwrap_or(f64::NAN),
                    x["byzsgdnm_eta"].as_f64().unwrap_or(f64::NAN), x["byzsgdnm_beta"].as_f64().unwrap_or(f64::NAN)
                );
            }
            s
        }
        other => return Err(Error::Config(format!("unknown format '{other}' (text or json)"))),
    };
    write_text(a.out.as_deref(), &text)
}

fn run(config: &Path, seed: Option<u64>, trace: Option<&Path>, output: &Output) -> Result<()> {
    let format: Format = output.format.parse()?;
    let mut cfg: RunConfig = match harness::parse_config(config)? {
        ConfigFile::Run(c) => c,
        ConfigFile::Grid(_) => return Err(Error::Config("this is a grid config; use `byzsgd grid`".into())),
    };
    if let Some(s) = seed {
        cfg.seed = s;
    }
    if let Some(path) = trace {
        let out = engine::run_training(&cfg)?;
        let mut w = csv::Writer::from_path(path)?;
        for r in &out.records {
            w.serialize(r)?;
        }
        w.flush()?;
    }
    let row = harness::run_one(0, &cfg);
    if let Some(e) = &row.error {
        return Err(Error::Config(e.clone()));
    }
    harness::emit_results(&[row], format, output.out.as_deref())
}

fn grid(config: &Path, seed: Option<u64>, parallelism: usize, output: &Output) -> Result<()> {
    let format: Format = output.format.parse()?;
    let mut g = match harness::parse_config(config)? {
        ConfigFile::Grid(g) => g,
        ConfigFile::Run(c) => harness::GridSpec { base: c, sweep: Default::default(), max_runs: 512 },
    };
    if let Some(s) = seed {
        g.base.seed = s;
    }
    let rows = harness::run_grid(&g, parallelism)?;
    let failed = rows.iter().filter(|r| r.error.is_some()).count();
    harness::emit_results(&rows, format, output.out.as_deref())?;
    if failed > 0 {
        eprintln!("warning: {failed} of {} runs failed (see the error column)", rows.len());
    }
    Ok(())
}

fn default_fixture() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("fixtures").join("table1.csv")
}

fn verify_cmd(seed: u64, fixture: Option<PathBuf>, full: bool) -> Result<bool> {
    let fixture = fixture.unwrap_or_else(default_fixture);
    let mut checks = verify::run_all(seed, &fixture);
    for c in &checks {
        println!("{}", c.line());
    }
    if full {
        let setup = verify::TrendSetup::default();
        let seeds: Vec<u64> = (seed..seed + 5).collect();
        for c in [verify::check_batch_trend(&setup, &seeds), verify::check_normalized_advantage(&setup, &seeds)] {
            println!("{}", c.line());
            checks.push(c);
        }
    }
    let failed = checks.iter().filter(|c| !c.passed).count();
    println!("{} checks, {} failed", checks.len(), failed);
    Ok(failed == 0)
}

fn analyze(input: &Path, out: Option<&Path>, format: &str) -> Result<()> {
    let text = std::fs::read_to_string(input).map_err(|e| Error::Io(format!("{}: {e}", input.display())))?;
    let header = text.lines().next().unwrap_or("");
    let curves: Vec<(String, Vec<(f64, usize)>)> = if header == harness::FIXTURE_HEADER {
        harness::fixture_curves(&harness::read_fixture(text.as_bytes())?)?
            .into_iter()
            .map(|((table, alg, agg, atk), c)| (format!("{table} {} {} {}", alg.as_str(), agg.as_str(), atk.as_str()), c))
            .collect()
    } else if header == harness::CSV_HEADER {
        harness::result_curves(&harness::read_csv(text.as_bytes())?)?
            .into_iter()
            .map(|((alg, agg, atk, seed), c)| (format!("{} {} {} seed={seed}", alg.as_str(), agg.as_str(), atk.as_str()), c))
            .collect()
    } else {
        return Err(Error::Io(format!("{}: unrecognized header", input.display())));
    };
    let rendered = match format {
        "json" => {
            let v: Vec<_> = curves
                .iter()
                .map(|(k, c)| {
                    serde_json::json!({
                        "group": k,
                        "best": c.iter().map(|&(d, b)| serde_json::json!({"delta": d, "batch_size": b})).collect::<Vec<_>>(),
                    })
                })
                .collect();
            serde_json::to_string_pretty(&v).map_err(|e| Error::Io(e.to_string()))? + "\n"
        }
        "text" => curves
            .iter()
            .map(|(k, c)| {
                let cells: Vec<String> = c.iter().map(|(d, b)| format!("delta={d}: B={b}")).collect();
                format!("{k}: {}\n", cells.join(", "))
            })
            .collect(),
        other => return Err(Error::Config(format!("unknown format '{other}' (text or json)"))),
    };
    write_text(out, &rendered)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Plan(a) => plan(a).map(|_| true),
        Command::Run { config, seed, trace, output } => run(&config, seed, trace.as_deref(), &output).map(|_| true),
        Command::Grid { config, seed, parallelism, output } => grid(&config, seed, parallelism, &output).map(|_| true),
        Command::Verify { seed, fixture, full } => verify_cmd(seed, fixture, full),
        Command::Analyze { input, out, format } => analyze(&input, out.as_deref(), &format).map(|_| true),
    };
    match result {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
