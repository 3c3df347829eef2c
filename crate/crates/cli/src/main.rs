use anosov_core::cache;
use anosov_core::error::Error;
use anosov_core::experiment::{
    atoms_csv, build_context, fit_json, report_json, results_csv, run_bisector, run_count,
    run_growth_indicator, run_limit_cone, run_ps_measure, run_symmetric_count, scatter_svg,
    BisectorParams, ExperimentConfig, GroupWindow, RunOptions, SymmetricCountParams,
};
use anosov_core::verify::{run_verify, VerifyOptions};
use anosov_core::words::CosetInvariant;
use clap::{Parser, Subcommand};
use std::path::PathBuf;
use std::process::ExitCode;

/// Orbit counting experiments for discrete subgroups of products of SL_d(R).
#[derive(Parser)]
#[command(name = "anosov", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,

    /// Experiment configuration (JSON).
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Word-length radius of the enumerated ball (overrides the config).
    #[arg(long, global = true)]
    depth: Option<u32>,

    /// Output directory.
    #[arg(long, global = true, default_value = "out")]
    out: PathBuf,

    /// Random seed for sampled checks.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,

    /// Worker threads for enumeration and per-row decompositions.
    #[arg(long, global = true, default_value_t = 1)]
    threads: usize,

    /// Orbit cache directory (overrides ANOSOV_CACHE_DIR).
    #[arg(long, global = true)]
    cache_dir: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Enumerate the word ball and store it in the orbit cache.
    Enumerate,
    /// Estimate the limit cone on the simplex slice.
    LimitCone,
    /// Estimate the growth indicator over a direction grid.
    GrowthIndicator,
    /// Count orbit points in a region and fit the growth exponent.
    Count,
    /// Bisector counting through the generalized Cartan decomposition.
    Bisector,
    /// Symmetric-space orbit counting (deduplicated cosets, |b| <= T).
    SymmetricCount,
    /// Atomic Patterson-Sullivan measure and conformality residuals.
    PsMeasure,
    /// Run the full invariant battery; exit code 0 iff all hard checks pass.
    Verify,
}

fn load_config(cli: &Cli) -> Result<ExperimentConfig, Error> {
    let path = cli
        .config
        .as_ref()
        .ok_or_else(|| Error::Config("--config <path.json> is required".into()))?;
    ExperimentConfig::from_file(path)
}

fn write(out_dir: &PathBuf, name: &str, content: &str) -> Result<(), Error> {
    std::fs::create_dir_all(out_dir)?;
    std::fs::write(out_dir.join(name), content)?;
    Ok(())
}

fn run(cli: &Cli) -> Result<bool, Error> {
    let opts = RunOptions {
        depth: cli.depth,
        seed: cli.seed,
        threads: cli.threads,
        cache_dir: cli.cache_dir.clone(),
        use_cache: true,
    };
    match &cli.command {
        Command::Enumerate => {
            let config = load_config(cli)?;
            let ctx = build_context(&config, opts)?;
            let depth = cli
                .depth
                .or_else(|| config.experiment.params.get("depth").and_then(|v| v.as_u64()).map(|v| v as u32))
                .unwrap_or(8);
            let with_flags = config
                .experiment
                .params
                .get("with_flags")
                .and_then(|v| v.as_bool())
                .unwrap_or(false);
            let table = anosov_core::experiment::provide_table(&ctx, depth, with_flags)?;
            let dir = ctx.opts.cache_dir.clone().unwrap_or_else(cache::cache_dir);
            println!(
                "enumerated {} rows at depth {} (cache: {})",
                table.rows.len(),
                depth,
                cache::cache_path(&dir, &ctx.gens, depth).display()
            );
            Ok(true)
        }
        Command::LimitCone => {
            let config = load_config(cli)?;
            let ctx = build_context(&config, opts)?;
            let (_, report) = run_limit_cone(&ctx, &config.experiment.params)?;
            write(&cli.out, "report.json", &report_json(&report))?;
            println!(
                "limit cone: {} vertices, wall margin {:.4}",
                report.hull_vertices.len(),
                report.wall_margin
            );
            Ok(true)
        }
        Command::GrowthIndicator => {
            let config = load_config(cli)?;
            let ctx = build_context(&config, opts)?;
            let (_, _, report) = run_growth_indicator(&ctx, &config.experiment.params)?;
            write(&cli.out, "report.json", &report_json(&report))?;
            println!(
                "growth indicator: delta = {:.6} at direction {:?}",
                report.delta, report.max_direction
            );
            Ok(true)
        }
        Command::Count => {
            let config = load_config(cli)?;
            let ctx = build_context(&config, opts)?;
            let (_, report) = run_count(&ctx, &config.experiment.params)?;
            write(&cli.out, "results.csv", &results_csv(&report.record))?;
            write(&cli.out, "fit.json", &fit_json(&report.fit))?;
            write(&cli.out, "scatter.svg", &scatter_svg(&report.record, &report.fit))?;
            match &report.fit {
                Some(f) => println!(
                    "count: N = {} rows, delta = {:.6} +- {:.6}",
                    report.record.total(),
                    f.delta,
                    f.stderr_delta
                ),
                None => println!("count: N = {} rows, fit unavailable", report.record.total()),
            }
            Ok(true)
        }
        Command::Bisector => {
            let config = load_config(cli)?;
            let ctx = build_context(&config, opts)?;
            let p = &config.experiment.params;
            let depth = cli
                .depth
                .or_else(|| p.get("depth").and_then(|v| v.as_u64()).map(|v| v as u32))
                .unwrap_or(8);
            let direction: Vec<f64> = p
                .get("direction")
                .and_then(|v| serde_json::from_value(v.clone()).ok())
                .ok_or_else(|| Error::Config("bisector needs a 'direction' (b-coords)".into()))?;
            let aperture = p.get("aperture").and_then(|v| v.as_f64()).unwrap_or(0.2);
            let window_from = |key: &str| -> Result<GroupWindow, Error> {
                match p.get(key) {
                    None => Ok(GroupWindow::All),
                    Some(v) => {
                        let radius = v
                            .get("radius")
                            .and_then(|r| r.as_f64())
                            .ok_or_else(|| Error::Config(format!("{key}.radius missing")))?;
                        Ok(GroupWindow::Ball {
                            center: anosov_core::group::GroupElement::identity(
                                &ctx.gens.descriptor,
                            ),
                            radius,
                        })
                    }
                }
            };
            let params = BisectorParams {
                depth,
                direction,
                aperture,
                omega_h: window_from("omega_h")?,
                omega_k: window_from("omega_k")?,
                beta_frozen: p.get("beta_frozen").and_then(|v| v.as_f64()),
            };
            let (_, report) = run_bisector(&ctx, &params)?;
            write(&cli.out, "results.csv", &results_csv(&report.record))?;
            write(&cli.out, "fit.json", &fit_json(&report.fit))?;
            write(&cli.out, "report.json", &report_json(&report))?;
            write(&cli.out, "scatter.svg", &scatter_svg(&report.record, &report.fit))?;
            println!(
                "bisector: counted {} of {} rows ({} ambiguous), growth check {:.6}",
                report.rows_counted,
                report.rows_total,
                report.rows_ambiguous,
                report.growth_delta_at_direction
            );
            Ok(true)
        }
        Command::SymmetricCount => {
            let config = load_config(cli)?;
            let ctx = build_context(&config, opts)?;
            let p = &config.experiment.params;
            let depth = cli
                .depth
                .or_else(|| p.get("depth").and_then(|v| v.as_u64()).map(|v| v as u32))
                .unwrap_or(8);
            let invariant = match p.get("invariant").and_then(|v| v.as_str()) {
                None | Some("factor-ratio") => CosetInvariant::FactorRatio,
                Some("orthogonal-form") => {
                    let pp = p.get("p").and_then(|v| v.as_u64()).unwrap_or(1) as usize;
                    let qq = p.get("q").and_then(|v| v.as_u64()).unwrap_or(1) as usize;
                    CosetInvariant::OrthogonalForm { p: pp, q: qq }
                }
                Some(other) => {
                    return Err(Error::Config(format!("unknown invariant kind '{other}'")))
                }
            };
            let params = SymmetricCountParams {
                depth,
                invariant,
                beta_frozen: p.get("beta_frozen").and_then(|v| v.as_f64()),
            };
            let (_, report) = run_symmetric_count(&ctx, &params)?;
            write(&cli.out, "results.csv", &results_csv(&report.record))?;
            write(&cli.out, "fit.json", &fit_json(&report.fit))?;
            write(&cli.out, "report.json", &report_json(&report))?;
            write(&cli.out, "scatter.svg", &scatter_svg(&report.record, &report.fit))?;
            println!(
                "symmetric count: {} -> {} rows after dedup, delta_full = {:.6}",
                report.rows_before_dedup, report.rows_after_dedup, report.delta_full_group
            );
            Ok(true)
        }
        Command::PsMeasure => {
            let config = load_config(cli)?;
            let ctx = build_context(&config, opts)?;
            let (measure, report) = run_ps_measure(&ctx, &config.experiment.params)?;
            write(&cli.out, "atoms.csv", &atoms_csv(&measure))?;
            write(&cli.out, "report.json", &report_json(&report))?;
            println!(
                "ps measure: {} atoms, total mass {:.12}",
                report.atom_count, report.total_mass
            );
            for (label, residual) in &report.conformality {
                println!("conformality[{label}] = {residual:.6}");
            }
            Ok(true)
        }
        Command::Verify => {
            let params = cli
                .config
                .as_ref()
                .map(|p| ExperimentConfig::from_file(p).map(|c| c.experiment.params))
                .transpose()?
                .unwrap_or(serde_json::Value::Null);
            let vopts = VerifyOptions {
                seed: cli.seed,
                words: params.get("words").and_then(|v| v.as_u64()).unwrap_or(2000) as usize,
                depth: cli
                    .depth
                    .or_else(|| params.get("depth").and_then(|v| v.as_u64()).map(|v| v as u32))
                    .unwrap_or(6),
                diagnostics: params
                    .get("diagnostics")
                    .and_then(|v| v.as_bool())
                    .unwrap_or(false),
            };
            let report = run_verify(&vopts)?;
            write(&cli.out, "report.json", &report_json(&report))?;
            for check in &report.checks {
                let status = if check.passed { "PASS" } else { "FAIL" };
                let kind = if check.hard { "hard" } else { "diag" };
                println!("[{status}] ({kind}) {} - {}", check.name, check.detail);
            }
            println!(
                "verify: {} checks, hard checks {}",
                report.checks.len(),
                if report.hard_passed { "passed" } else { "FAILED" }
            );
            Ok(report.hard_passed)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::FAILURE,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
