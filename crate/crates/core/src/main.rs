use clap::{Parser, Subcommand};
use spinterface::config::{
    parse_config, CavityKind, CavitySection, DephasingBase, DephasingSection, ExperimentKind,
    OptimizerSection, PhysicsSection, PulseSection, PulseShape, ReadoutSection, RunConfig,
};
use spinterface::experiments::{
    run_dephasing_study, run_pulsed_initialisation, run_readout, run_steady_state_initialisation,
    BaseExperiment, PointOutcome, READOUT_TAU,
};
use spinterface::output::{now_unix, write_csv, RunManifest};
use spinterface::{Result, SimError};
use std::path::{Path, PathBuf};

const OUT_DIR_ENV: &str = "SPINTERFACE_OUT_DIR";

#[derive(Parser)]
#[command(name = "spinterface", version, about = "Cavity-coupled quantum-dot spin initialisation and readout sweeps")]
struct Cli {
    /// Output directory (overrides config and SPINTERFACE_OUT_DIR).
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Worker threads for sweep parallelism.
    #[arg(long, global = true)]
    workers: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// CW steady-state initialisation sweep from a config file.
    SteadyInit { config: PathBuf },
    /// Pulsed initialisation sweep (optimized per duration).
    PulseInit {
        config: PathBuf,
        /// Override the pulse shape from the config.
        #[arg(long, value_parser = parse_pulse_shape)]
        pulse: Option<PulseShape>,
        /// Override the duration axis, e.g. "5ps:60ps:12" or "0.5,1,3" (ns).
        #[arg(long)]
        durations: Option<String>,
    },
    /// Photon-counting readout map.
    Readout { config: PathBuf },
    /// Rerun a base study across pure-dephasing rates.
    Dephasing { config: PathBuf },
    /// Run the built-in analytic oracle checks.
    Verify,
    /// Run a preset approximating a manuscript figure at desk-scale
    /// resolution.
    Figure {
        /// Figure number: 2, 3, 4, 5 or 6.
        number: u32,
        /// Cavity configuration for the preset.
        #[arg(long, value_parser = parse_cavity_kind, default_value = "single_mode")]
        config: CavityKind,
    },
}

fn parse_pulse_shape(s: &str) -> std::result::Result<PulseShape, String> {
    match s {
        "square" => Ok(PulseShape::Square),
        "gaussian" => Ok(PulseShape::Gaussian),
        other => Err(format!("unknown pulse shape '{other}' (square|gaussian)")),
    }
}

fn parse_cavity_kind(s: &str) -> std::result::Result<CavityKind, String> {
    match s {
        "single_mode" | "single-mode" => Ok(CavityKind::SingleMode),
        "bi_modal" | "bi-modal" | "bimodal" => Ok(CavityKind::BiModal),
        other => Err(format!("unknown cavity config '{other}' (single_mode|bi_modal)")),
    }
}

/// Parse a duration axis: either "start:end:count" with ns/ps suffixes on
/// the endpoints, or a comma-separated list of ns values.
fn parse_durations(spec: &str) -> Result<Vec<f64>> {
    fn parse_time_ns(s: &str) -> Result<f64> {
        let (num, scale) = if let Some(stripped) = s.strip_suffix("ps") {
            (stripped, 1e-3)
        } else if let Some(stripped) = s.strip_suffix("ns") {
            (stripped, 1.0)
        } else {
            (s, 1.0)
        };
        num.trim()
            .parse::<f64>()
            .map(|v| v * scale)
            .map_err(|_| SimError::Config {
                field: "durations".into(),
                message: format!("cannot parse time '{s}'"),
            })
    }

    let parts: Vec<&str> = spec.split(':').collect();
    if parts.len() == 3 {
        let lo = parse_time_ns(parts[0])?;
        let hi = parse_time_ns(parts[1])?;
        let n: usize = parts[2].parse().map_err(|_| SimError::Config {
            field: "durations".into(),
            message: format!("cannot parse count '{}'", parts[2]),
        })?;
        if n < 2 || !(hi > lo) {
            return Err(SimError::Config {
                field: "durations".into(),
                message: "range needs start < end and count >= 2".into(),
            });
        }
        return Ok((0..n)
            .map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64)
            .collect());
    }
    spec.split(',').map(parse_time_ns).collect()
}

fn log_space(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    (0..n)
        .map(|i| lo * (hi / lo).powf(i as f64 / (n - 1) as f64))
        .collect()
}

fn resolve_out_dir(cli_out: &Option<PathBuf>, cfg_out: &Option<String>) -> PathBuf {
    if let Some(p) = cli_out {
        return p.clone();
    }
    if let Ok(p) = std::env::var(OUT_DIR_ENV) {
        if !p.is_empty() {
            return PathBuf::from(p);
        }
    }
    cfg_out.as_ref().map(PathBuf::from).unwrap_or_else(|| PathBuf::from("out"))
}

fn run_experiment(cfg: &RunConfig) -> Result<Vec<PointOutcome>> {
    let grid = cfg.grid();
    let gamma = 1.0 / cfg.physics.lifetime_ns;
    match cfg.experiment {
        ExperimentKind::SteadyInit => run_steady_state_initialisation(&grid),
        ExperimentKind::PulseInit => {
            let pulse = cfg.pulse.as_ref().expect("validated");
            let opt = cfg.optimizer.as_ref().expect("validated").resolve(gamma)?;
            run_pulsed_initialisation(&grid, pulse.kind.into(), &opt)
        }
        ExperimentKind::Readout => {
            let r = cfg.readout.as_ref().expect("validated");
            run_readout(&grid, r.tau_ns, r.efficiency)
        }
        ExperimentKind::Dephasing => {
            let d = cfg.dephasing.as_ref().expect("validated");
            let base = match d.base {
                DephasingBase::PulseInit => {
                    let pulse = cfg.pulse.as_ref().expect("validated");
                    BaseExperiment::PulsedInit {
                        kind: pulse.kind.into(),
                        opt: cfg.optimizer.as_ref().expect("validated").resolve(gamma)?,
                    }
                }
                DephasingBase::Readout => {
                    let r = cfg.readout.as_ref().expect("validated");
                    BaseExperiment::Readout { tau: r.tau_ns, eta: r.efficiency }
                }
            };
            run_dephasing_study(&grid, &base, &cfg.dephasing_rates())
        }
    }
}

/// Run a resolved config and write `<stem>.csv` + `<stem>_manifest.json`.
/// Returns the process exit code (0 clean, 1 partial failure).
fn execute(cfg: &RunConfig, out_dir: &Path, stem: &str, notes: &[String]) -> Result<i32> {
    std::fs::create_dir_all(out_dir)?;
    let started = now_unix();
    let results = run_experiment(cfg)?;
    let mut manifest = RunManifest::new(cfg, started, &results);
    manifest.notes = notes.to_vec();
    write_csv(&out_dir.join(format!("{stem}.csv")), &results)?;
    manifest.write(&out_dir.join(format!("{stem}_manifest.json")))?;
    let failed = manifest.n_failed;
    if failed > 0 {
        eprintln!("{failed} of {} points failed; see {stem}_manifest.json", manifest.n_points);
        return Ok(1);
    }
    println!("{} points -> {}", manifest.n_points, out_dir.join(format!("{stem}.csv")).display());
    Ok(0)
}

fn figure_config(number: u32, cavity: CavityKind) -> Result<(RunConfig, Vec<String>)> {
    let mut notes = Vec::new();
    let make_cavity = |purcell: Option<Vec<f64>>, g_over_kappa: Option<Vec<f64>>, kappa: Vec<f64>| {
        CavitySection { config: cavity, kappa_ghz: kappa, purcell, g_over_kappa, n_max: 1 }
    };
    let mut cfg = match number {
        2 => RunConfig {
            experiment: ExperimentKind::SteadyInit,
            output_dir: None,
            workers: None,
            seed: None,
            physics: PhysicsSection::default(),
            cavity: make_cavity(None, Some(log_space(0.1, 100.0, 10)), vec![1.0, 20.0, 40.0]),
            pulse: None,
            optimizer: None,
            readout: None,
            dephasing: None,
            integrator: Default::default(),
        },
        3 => RunConfig {
            experiment: ExperimentKind::PulseInit,
            output_dir: None,
            workers: None,
            seed: None,
            physics: PhysicsSection::default(),
            cavity: make_cavity(Some(vec![10.0, 40.0]), None, vec![1.0, 20.0, 40.0]),
            pulse: Some(PulseSection {
                kind: PulseShape::Square,
                durations_ns: vec![0.5, 1.0, 2.0, 3.0],
            }),
            optimizer: None,
            readout: None,
            dephasing: None,
            integrator: Default::default(),
        },
        4 => {
            notes.push(
                "comparison point pairing: single-mode quotes (kappa/2pi = 20 GHz, F_P = 19), \
                 bi-modal quotes (kappa/2pi = 9.4 GHz and 20 GHz, F_P = 19)"
                    .to_string(),
            );
            RunConfig {
                experiment: ExperimentKind::Readout,
                output_dir: None,
                workers: None,
                seed: None,
                physics: PhysicsSection::default(),
                cavity: make_cavity(Some(vec![7.0, 10.0, 19.0]), None, vec![9.4, 20.0, 40.0]),
                pulse: None,
                optimizer: None,
                readout: Some(ReadoutSection { tau_ns: READOUT_TAU, efficiency: 1.0 }),
                dephasing: None,
                integrator: Default::default(),
            }
        }
        5 => RunConfig {
            experiment: ExperimentKind::Dephasing,
            output_dir: None,
            workers: None,
            seed: None,
            physics: PhysicsSection::default(),
            cavity: make_cavity(Some(vec![10.0, 40.0]), None, vec![20.0]),
            pulse: Some(PulseSection {
                kind: PulseShape::Square,
                durations_ns: vec![1.0, 3.0],
            }),
            optimizer: None,
            readout: None,
            dephasing: Some(DephasingSection {
                base: DephasingBase::PulseInit,
                rates: vec![0.0, 0.1, 1.0, 10.0],
            }),
            integrator: Default::default(),
        },
        6 => RunConfig {
            experiment: ExperimentKind::Dephasing,
            output_dir: None,
            workers: None,
            seed: None,
            physics: PhysicsSection::default(),
            cavity: make_cavity(Some(vec![7.0, 19.0]), None, vec![9.4, 20.0, 40.0]),
            pulse: None,
            optimizer: None,
            readout: Some(ReadoutSection { tau_ns: READOUT_TAU, efficiency: 1.0 }),
            dephasing: Some(DephasingSection {
                base: DephasingBase::Readout,
                rates: vec![1.0, 10.0],
            }),
            integrator: Default::default(),
        },
        other => {
            return Err(SimError::Config {
                field: "figure".into(),
                message: format!("no preset for figure {other} (2..=6)"),
            })
        }
    };
    cfg.validate()?;
    Ok((cfg, notes))
}

fn cavity_stem(k: CavityKind) -> &'static str {
    match k {
        CavityKind::SingleMode => "single_mode",
        CavityKind::BiModal => "bi_modal",
    }
}

fn verify() -> i32 {
    use spinterface::verify::{oracle_checks, CheckOutcome};
    let mut failed = 0;
    for check in oracle_checks() {
        match (check.run)() {
            CheckOutcome::Pass(detail) => println!("ok   {} ({detail})", check.name),
            CheckOutcome::Fail(detail) => {
                failed += 1;
                println!("FAIL {} ({detail})", check.name);
            }
        }
    }
    if failed > 0 {
        eprintln!("{failed} oracle check(s) failed");
        1
    } else {
        println!("all oracle checks passed");
        0
    }
}

fn run(cli: Cli) -> Result<i32> {
    let Cli { out, workers, command } = cli;
    match command {
        Command::Verify => Ok(verify()),
        Command::SteadyInit { config } | Command::Readout { config } | Command::Dephasing { config } => {
            let mut cfg = parse_config(&config)?;
            apply_overrides(&mut cfg, workers);
            init_workers(cfg.workers);
            let out = resolve_out_dir(&out, &cfg.output_dir);
            execute(&cfg, &out, cfg.experiment.label(), &[])
        }
        Command::PulseInit { config, pulse, durations } => {
            let mut cfg = parse_config(&config)?;
            if let Some(shape) = pulse {
                let p = cfg.pulse.get_or_insert(PulseSection {
                    kind: shape,
                    durations_ns: vec![],
                });
                p.kind = shape;
                cfg.optimizer = Some(OptimizerSection::for_pulse(shape));
            }
            if let Some(spec) = &durations {
                let axis = parse_durations(spec)?;
                cfg.pulse
                    .as_mut()
                    .ok_or_else(|| SimError::Config {
                        field: "pulse".into(),
                        message: "section required".into(),
                    })?
                    .durations_ns = axis;
            }
            cfg.validate()?;
            apply_overrides(&mut cfg, workers);
            init_workers(cfg.workers);
            let out = resolve_out_dir(&out, &cfg.output_dir);
            execute(&cfg, &out, cfg.experiment.label(), &[])
        }
        Command::Figure { number, config } => {
            let (mut cfg, notes) = figure_config(number, config)?;
            apply_overrides(&mut cfg, workers);
            init_workers(cfg.workers);
            let out = resolve_out_dir(&out, &cfg.output_dir);
            let stem = format!("figure{number}_{}", cavity_stem(config));
            execute(&cfg, &out, &stem, &notes)
        }
    }
}

fn apply_overrides(cfg: &mut RunConfig, workers: Option<usize>) {
    if workers.is_some() {
        cfg.workers = workers;
    }
}

fn init_workers(workers: Option<usize>) {
    if let Some(n) = workers {
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    }
}

fn main() {
    let cli = Cli::parse();
    let code = match run(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            2
        }
    };
    std::process::exit(code);
}
