//! Command-line front end: figure-regeneration sweeps, config-driven stats,
//! optimizers, and trajectory sampling, each emitting a CSV plus a JSON run
//! manifest.

use std::fmt::Write as _;
use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use clap::{Parser, Subcommand};
use serde_json::json;

use squeezed_readout::figures;
use squeezed_readout::model::{presets, ReadoutConfig, ValidatedConfig};
use squeezed_readout::montecarlo;
use squeezed_readout::optimize::{self, OptimizeError};
use squeezed_readout::readout::measurement_stats;
use squeezed_readout::transmon::{self, TransmonSpec};
use squeezed_readout::util::parse_grid;

#[derive(Parser)]
#[command(
    name = "readout-sim",
    version,
    about = "Dispersive qubit readout with coherent, single-mode-squeezed, \
             and two-mode-squeezed input light"
)]
struct Cli {
    /// JSON readout config; subcommands fall back to built-in defaults
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory (created if missing)
    #[arg(long, global = true, default_value = ".")]
    out: PathBuf,
    /// RNG seed for sampling subcommands
    #[arg(long, global = true, default_value_t = 1234)]
    seed: u64,
    /// Worker threads (requires the `parallel` build; default: all cores)
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Sweep grid override, `[lin|log:]START:STOP:N`
    #[arg(long, global = true)]
    grid: Option<String>,
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// SNR vs integration time for the three protocols
    Fig3a,
    /// Integration time to reach a target fidelity vs squeeze strength
    Fig3b {
        #[arg(long, default_value_t = 0.9999)]
        target: f64,
        /// Efficiency of the lossy companion curves
        #[arg(long, default_value_t = 0.9)]
        lossy_eta: f64,
    },
    /// Intracavity photons needed for a target fidelity vs integration time
    Fig3c {
        #[arg(long, default_value_t = 0.9999)]
        target: f64,
        #[arg(long, default_value_t = 0.9)]
        lossy_eta: f64,
    },
    /// SNR enhancement vs dispersive-shift asymmetry
    Fig4a {
        #[arg(long, default_value_t = 10.0)]
        kappa_tau: f64,
        #[arg(long, default_value_t = 100.0)]
        e2r: f64,
    },
    /// Transmon dispersive shifts vs anharmonicity for two resonators
    Fig4b,
    /// Engine SNR sweep of the configured readout vs the other protocols
    Stats,
    /// Optimize squeezing / integration time / photon budget for the config
    Optimize {
        #[arg(long, default_value_t = 0.9999)]
        target: f64,
        /// Cap on e^{2r} for the single-mode optimizer
        #[arg(long, default_value_t = 100.0)]
        e2r_cap: f64,
    },
    /// Sample measurement records and compare to the engine
    Trajectories {
        #[arg(long, default_value_t = 10000)]
        n_traj: usize,
        /// Step size; default: half the stability bound
        #[arg(long)]
        dt: Option<f64>,
    },
    /// Drive/squeeze photon-split scan at fixed total photon number
    Heisenberg {
        #[arg(long = "N", default_value_t = 8.0)]
        n_total: f64,
        #[arg(long, default_value_t = 50.0)]
        kappa_tau: f64,
        #[arg(long, default_value_t = 200)]
        points: usize,
    },
}

enum CliError {
    /// Exit 2: unusable configuration (missing file, parse error, validation).
    Config(String),
    /// Exit 3: an optimizer target cannot be reached.
    Unreachable(String),
    /// Exit 1: anything else.
    Other(String),
}

impl From<OptimizeError> for CliError {
    fn from(e: OptimizeError) -> Self {
        match e {
            OptimizeError::Unreachable { .. } => CliError::Unreachable(e.to_string()),
            other => CliError::Other(other.to_string()),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Other(e.to_string())
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(CliError::Config(msg)) => {
            eprintln!("config error: {msg}");
            ExitCode::from(2)
        }
        Err(CliError::Unreachable(msg)) => {
            eprintln!("unreachable target: {msg}");
            ExitCode::from(3)
        }
        Err(CliError::Other(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::FAILURE
        }
    }
}

/// Everything a finished subcommand wants written to disk.
struct Output {
    csv_name: &'static str,
    csv: String,
    summary: serde_json::Value,
}

fn run(cli: Cli) -> Result<(), CliError> {
    configure_threads(cli.threads)?;
    // Resolve and validate the config up front: nothing is written unless
    // the whole run can proceed.
    let config = cli.config.as_deref().map(load_config).transpose()?;
    let start = Instant::now();
    let (name, out) = dispatch(&cli, config.as_ref())?;

    fs::create_dir_all(&cli.out)?;
    let csv_path = cli.out.join(out.csv_name);
    fs::write(&csv_path, &out.csv)?;
    let manifest = json!({
        "subcommand": name,
        "version": env!("CARGO_PKG_VERSION"),
        "seed": cli.seed,
        "threads": cli.threads,
        "grid": cli.grid,
        "config_path": cli.config.as_ref().map(|p| p.display().to_string()),
        "resolved_config": config,
        "wall_time_s": start.elapsed().as_secs_f64(),
        "outputs": [out.csv_name],
        "summary": out.summary,
    });
    let manifest_path = cli.out.join(format!("{name}_manifest.json"));
    fs::write(&manifest_path, serde_json::to_string_pretty(&manifest).unwrap() + "\n")?;
    eprintln!("wrote {} and {}", csv_path.display(), manifest_path.display());
    Ok(())
}

fn dispatch(cli: &Cli, config: Option<&ValidatedConfig>) -> Result<(&'static str, Output), CliError> {
    match &cli.cmd {
        Cmd::Fig3a => Ok(("fig3a", fig3a(cli, config)?)),
        Cmd::Fig3b { target, lossy_eta } => {
            Ok(("fig3b", fig3b(cli, config, *target, *lossy_eta)?))
        }
        Cmd::Fig3c { target, lossy_eta } => {
            Ok(("fig3c", fig3c(cli, config, *target, *lossy_eta)?))
        }
        Cmd::Fig4a { kappa_tau, e2r } => Ok(("fig4a", fig4a(cli, *kappa_tau, *e2r)?)),
        Cmd::Fig4b => Ok(("fig4b", fig4b(cli)?)),
        Cmd::Stats => Ok(("stats", stats(cli, config)?)),
        Cmd::Optimize { target, e2r_cap } => {
            Ok(("optimize", optimize_cmd(config, *target, *e2r_cap)?))
        }
        Cmd::Trajectories { n_traj, dt } => {
            Ok(("trajectories", trajectories(cli, config, *n_traj, *dt)?))
        }
        Cmd::Heisenberg { n_total, kappa_tau, points } => {
            Ok(("heisenberg", heisenberg(*n_total, *kappa_tau, *points)?))
        }
    }
}

fn load_config(path: &std::path::Path) -> Result<ValidatedConfig, CliError> {
    let text = fs::read_to_string(path)
        .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
    let raw: ReadoutConfig = serde_json::from_str(&text)
        .map_err(|e| CliError::Config(format!("cannot parse {}: {e}", path.display())))?;
    raw.validate().map_err(|e| CliError::Config(e.to_string()))
}

fn configure_threads(threads: Option<usize>) -> Result<(), CliError> {
    #[cfg(feature = "parallel")]
    if let Some(n) = threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| CliError::Other(format!("cannot configure {n} threads: {e}")))?;
    }
    #[cfg(not(feature = "parallel"))]
    if threads.is_some() {
        eprintln!("note: built without the `parallel` feature; --threads ignored");
    }
    Ok(())
}

fn grid_or(cli: &Cli, default: &str) -> Result<Vec<f64>, CliError> {
    parse_grid(cli.grid.as_deref().unwrap_or(default)).map_err(CliError::Config)
}

fn check_target(target: f64) -> Result<(), CliError> {
    if target > 0.5 && target < 1.0 {
        Ok(())
    } else {
        Err(CliError::Config(format!(
            "target fidelity must lie in (0.5, 1), got {target}"
        )))
    }
}

fn check_eta(eta: f64) -> Result<(), CliError> {
    if (0.0..=1.0).contains(&eta) {
        Ok(())
    } else {
        Err(CliError::Config(format!("efficiency must lie in [0, 1], got {eta}")))
    }
}

/// The squeezed two-cavity setup the figure captions use: `chi = kappa/2`,
/// presqueezed broadband source with `e^{2r} = 100`, drive `nbar0 = 100`.
fn default_qmfs() -> ValidatedConfig {
    presets::qmfs(100.0, 10.0, 0.5 * 100.0f64.ln())
        .validate()
        .expect("built-in default must validate")
}

fn csv<R>(header: &str, rows: &[R], mut line: impl FnMut(&R, &mut String)) -> String {
    let mut s = String::with_capacity(64 * (rows.len() + 1));
    s.push_str(header);
    s.push('\n');
    for row in rows {
        line(row, &mut s);
        s.push('\n');
    }
    s
}

fn fig3a(cli: &Cli, config: Option<&ValidatedConfig>) -> Result<Output, CliError> {
    let cfg = config.cloned().unwrap_or_else(default_qmfs);
    let taus = grid_or(cli, "log:0.2:50:40")?;
    let rows = figures::snr_sweep(&cfg, &taus, 100.0, 14)?;
    let csv = csv(
        "tau_in_inverse_kappa,snr_coherent,snr_single_mode_optimized,snr_qmfs",
        &rows,
        |r, s| {
            let _ = write!(
                s,
                "{},{},{},{}",
                r.kappa_tau, r.snr_coherent, r.snr_single_opt, r.snr_qmfs
            );
        },
    );
    let last = rows.last().unwrap();
    Ok(Output {
        csv_name: "fig3a.csv",
        csv,
        summary: json!({
            "qmfs_over_coherent_at_last_point": last.snr_qmfs / last.snr_coherent,
            "points": rows.len(),
        }),
    })
}

fn fig3b(
    cli: &Cli,
    config: Option<&ValidatedConfig>,
    target: f64,
    lossy_eta: f64,
) -> Result<Output, CliError> {
    check_target(target)?;
    check_eta(lossy_eta)?;
    let cfg = config.cloned().unwrap_or_else(default_qmfs);
    let e2rs = grid_or(cli, "log:1:100000:26")?;
    let rows = figures::fidelity_time_rows(&cfg, &e2rs, target, lossy_eta)?;
    let csv = csv(
        "e2r,tau_qmfs_in_inverse_kappa,tau_matched_coherent_in_inverse_kappa,\
         tau_qmfs_lossy_in_inverse_kappa,tau_matched_coherent_lossy_in_inverse_kappa",
        &rows,
        |r, s| {
            let _ = write!(
                s,
                "{},{},{},{},{}",
                r.e2r, r.tau_qmfs, r.tau_matched, r.tau_qmfs_lossy, r.tau_matched_lossy
            );
        },
    );
    Ok(Output {
        csv_name: "fig3b.csv",
        csv,
        summary: json!({ "target_fidelity": target, "lossy_eta": lossy_eta }),
    })
}

fn fig3c(
    cli: &Cli,
    config: Option<&ValidatedConfig>,
    target: f64,
    lossy_eta: f64,
) -> Result<Output, CliError> {
    check_target(target)?;
    check_eta(lossy_eta)?;
    let cfg = config.cloned().unwrap_or_else(default_qmfs);
    let taus = grid_or(cli, "log:0.5:20:25")?;
    let rows = figures::photon_budget_rows(&cfg, &taus, target, lossy_eta)?;
    let csv = csv(
        "tau_in_inverse_kappa,n_bar_squeezed_photons,n_bar_coherent_photons,\
         n_bar_squeezed_lossy_photons,n_bar_coherent_lossy_photons",
        &rows,
        |r, s| {
            let _ = write!(
                s,
                "{},{},{},{},{}",
                r.kappa_tau,
                r.n_bar_squeezed,
                r.n_bar_coherent,
                r.n_bar_squeezed_lossy,
                r.n_bar_coherent_lossy
            );
        },
    );
    Ok(Output {
        csv_name: "fig3c.csv",
        csv,
        summary: json!({ "target_fidelity": target, "lossy_eta": lossy_eta }),
    })
}

fn fig4a(cli: &Cli, kappa_tau: f64, e2r: f64) -> Result<Output, CliError> {
    let fracs = grid_or(cli, "lin:0:0.6:25")?;
    let rows = figures::asymmetry_rows(&fracs, kappa_tau, e2r)?;
    let csv = csv(
        "dchi_over_chi_bar,snr_enhancement_dkappa_zero,snr_enhancement_matched,\
         snr_enhancement_optimal,dkappa_opt_over_kappa_bar",
        &rows,
        |r, s| {
            let _ = write!(
                s,
                "{},{},{},{},{}",
                r.dchi_over_chi_bar,
                r.enh_dkappa_zero,
                r.enh_matched,
                r.enh_optimal,
                r.dkappa_opt_over_kappa_bar
            );
        },
    );
    Ok(Output {
        csv_name: "fig4a.csv",
        csv,
        summary: json!({ "kappa_tau": kappa_tau, "e2r": e2r }),
    })
}

fn fig4b(cli: &Cli) -> Result<Output, CliError> {
    let grid = grid_or(cli, "lin:0.15:0.45:121")?;
    let rows = figures::dispersive_shift_rows(&grid);
    let csv = csv("e_c_ghz,chi_1_ghz,chi_2_ghz", &rows, |r, s| {
        let _ = write!(s, "{},{},{}", r.e_c, r.chi_1, r.chi_2);
    });
    let spec = TransmonSpec::reference(0.3);
    let (lo, hi) = (grid[0], grid[grid.len() - 1]);
    // Root refinement can fail on pathological grids (level crossings right
    // on a probe point); the scan CSV is still useful, so only note it.
    let roots = match transmon::find_equal_opposite(&spec, lo, hi, grid.len().min(151)) {
        Ok(roots) => json!(roots
            .iter()
            .map(|r| {
                json!({
                    "e_c_ghz": r.e_c,
                    "chi_1_ghz": r.chi_1,
                    "chi_2_ghz": r.chi_2,
                    "delta_1_ghz": r.delta_1,
                    "delta_2_ghz": r.delta_2,
                    "straddling_pair": r.straddling_pair,
                })
            })
            .collect::<Vec<_>>()),
        Err(e) => json!({ "error": e.to_string() }),
    };
    Ok(Output {
        csv_name: "fig4b.csv",
        csv,
        summary: json!({ "equal_opposite_roots": roots }),
    })
}

fn stats(cli: &Cli, config: Option<&ValidatedConfig>) -> Result<Output, CliError> {
    let cfg = config.cloned().unwrap_or_else(default_qmfs);
    let taus = grid_or(cli, "log:0.1:10:25")?;
    let rows = figures::snr_sweep(&cfg, &taus, 100.0, 14)?;
    let csv = csv(
        "tau_in_inverse_kappa,snr_coherent,snr_single_mode_optimized,snr_qmfs",
        &rows,
        |r, s| {
            let _ = write!(
                s,
                "{},{},{},{}",
                r.kappa_tau, r.snr_coherent, r.snr_single_opt, r.snr_qmfs
            );
        },
    );
    let at_config_tau =
        measurement_stats(&cfg).map_err(|e| CliError::Other(e.to_string()))?;
    Ok(Output {
        csv_name: "stats.csv",
        csv,
        summary: json!({ "stats_at_config_tau": at_config_tau }),
    })
}

fn optimize_cmd(
    config: Option<&ValidatedConfig>,
    target: f64,
    e2r_cap: f64,
) -> Result<Output, CliError> {
    check_target(target)?;
    let cfg = config
        .cloned()
        .ok_or_else(|| CliError::Config("optimize needs --config".into()))?;
    let mut rows: Vec<(String, f64)> = Vec::new();

    if e2r_cap < 1.0 {
        return Err(CliError::Config(format!("--e2r-cap must be >= 1, got {e2r_cap}")));
    }
    if cfg.protocol == squeezed_readout::model::Protocol::SingleModeSqueezed {
        let (r, theta, snr) = optimize::optimize_single_mode(&cfg, cfg.tau, e2r_cap, 16)?;
        rows.push(("single_mode_r_opt".into(), r));
        rows.push(("single_mode_theta_opt_rad".into(), theta));
        rows.push(("single_mode_snr_opt".into(), snr));
    }
    let tau_needed = optimize::required_tau(&cfg, target)?;
    rows.push(("required_tau_in_inverse_kappa".into(), tau_needed));
    let budget = optimize::photons_for_fidelity(&cfg, cfg.tau, target)?;
    rows.push(("photons_n_bar_min".into(), budget.n_bar));
    rows.push(("photons_nbar0_at_optimum".into(), budget.nbar0));
    rows.push(("photons_r_at_optimum".into(), budget.r));
    if cfg.cavities.len() == 2 && cfg.dchi.abs() > 0.0 {
        let opt = optimize::optimize_asymmetry(
            cfg.dchi,
            cfg.chi_bar,
            cfg.kappa_bar,
            cfg.tau,
            cfg.source.r,
        )?;
        rows.push(("dkappa_opt_over_kappa_bar".into(), opt.dkappa_opt / cfg.kappa_bar));
        rows.push(("asymmetry_snr_enhancement_opt".into(), opt.enhancement));
    }
    let csv = csv("quantity,value", &rows, |r, s| {
        let _ = write!(s, "{},{}", r.0, r.1);
    });
    let summary: serde_json::Value =
        rows.iter().map(|(k, v)| (k.clone(), json!(v))).collect::<serde_json::Map<_, _>>().into();
    Ok(Output { csv_name: "optimize.csv", csv, summary })
}

fn trajectories(
    cli: &Cli,
    config: Option<&ValidatedConfig>,
    n_traj: usize,
    dt: Option<f64>,
) -> Result<Output, CliError> {
    let cfg = config
        .cloned()
        .ok_or_else(|| CliError::Config("trajectories needs --config".into()))?;
    if n_traj < 2 {
        return Err(CliError::Config(format!("--n-traj must be >= 2, got {n_traj}")));
    }
    let dt = dt.unwrap_or_else(|| 0.5 * montecarlo::max_stable_dt(&cfg));
    if !(dt > 0.0) {
        return Err(CliError::Config(format!("--dt must be positive, got {dt}")));
    }
    let ens = montecarlo::sample_records(&cfg, n_traj, dt, cli.seed)
        .map_err(|e| CliError::Config(e.to_string()))?;
    let rows: Vec<(usize, &str, f64)> = ens.records().collect();
    let csv = csv("traj_id,qubit_state,m_record", &rows, |r, s| {
        let _ = write!(s, "{},{},{}", r.0, r.1, r.2);
    });
    let est = montecarlo::empirical_stats(&ens);
    let engine = measurement_stats(&cfg).map_err(|e| CliError::Other(e.to_string()))?;
    let err = montecarlo::empirical_error_rate(&ens);
    Ok(Output {
        csv_name: "trajectories.csv",
        csv,
        summary: json!({
            "n_traj": n_traj,
            "dt_in_inverse_kappa": dt,
            "empirical": {
                "signal_ground": est.stats.signal_ground,
                "signal_excited": est.stats.signal_excited,
                "noise_ground": est.stats.noise_ground,
                "noise_excited": est.stats.noise_excited,
                "snr": est.stats.snr,
                "fidelity": est.stats.fidelity,
                "se_signal_ground": est.se_signal_ground,
                "se_signal_excited": est.se_signal_excited,
                "se_noise_ground": est.se_noise_ground,
                "se_noise_excited": est.se_noise_excited,
                "se_snr": est.se_snr,
                "error_rate": err.rate,
                "error_rate_se": err.rate_se,
                "threshold": err.threshold,
            },
            "engine": engine,
        }),
    })
}

fn heisenberg(n_total: f64, kappa_tau: f64, points: usize) -> Result<Output, CliError> {
    if !(n_total > 0.0) || !(kappa_tau > 0.0) || points < 2 {
        return Err(CliError::Config(format!(
            "need --N > 0, --kappa-tau > 0 and --points >= 2 \
             (got {n_total}, {kappa_tau}, {points})"
        )));
    }
    let scan = figures::heisenberg_rows(n_total, points, kappa_tau);
    let csv = csv(
        "n_s_photons,snr_closed_form,snr_engine",
        &scan.rows,
        |r, s| {
            let _ = write!(s, "{},{},{}", r.n_s, r.snr_closed, r.snr_engine);
        },
    );
    let (ns_opt, snr_opt) =
        squeezed_readout::readout::snr_heisenberg_optimum(n_total, std::f64::consts::FRAC_PI_2);
    Ok(Output {
        csv_name: "heisenberg.csv",
        csv,
        summary: json!({
            "n_total_photons": n_total,
            "kappa_tau": kappa_tau,
            "n_s_opt_closed_form_photons": ns_opt,
            "snr_opt_closed_form": snr_opt,
            "n_s_argmax_closed_form_photons": scan.rows[scan.argmax_closed].n_s,
            "n_s_argmax_engine_photons": scan.rows[scan.argmax_engine].n_s,
        }),
    })
}
