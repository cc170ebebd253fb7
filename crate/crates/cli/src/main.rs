#![allow(clippy::neg_cmp_op_on_partial_ord)]

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use stoplight_core::config::{hex, keyed_quantity, RunConfig};
use stoplight_core::gpe::observables::full_width_at;
use stoplight_core::gpe::TrapModel;
use stoplight_core::grid::ComplexField;
use stoplight_core::io::{self, SnapshotFile};
use stoplight_core::protocol::{argmax_tau, run_storage_series, sweep_bias_field, Snapshot};
use stoplight_core::units::Dim;
use stoplight_core::Error;

#[derive(Parser, Debug)]
#[command(name = "stoplight", version, about = "Light storage and revival in a two-component condensate")]
struct Cli {
    /// Run configuration (TOML). The shipped default is used when absent.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory; overrides the configuration.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Worker threads for sweeps.
    #[arg(long, global = true, default_value_t = 1)]
    jobs: usize,
    /// Snapshot cadence with a unit, e.g. "50 ms".
    #[arg(long, global = true)]
    snapshot_every: Option<String>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Parse and check a configuration, then print its derived parameters.
    ValidateConfig,
    /// Imaginary-time ground state of |1⟩; writes a snapshot and the convergence log.
    GroundState,
    /// Write, store for each storage time and read out; writes the fidelity table.
    StoreRevive {
        /// Ground-state snapshot to start from; computed when absent.
        #[arg(long)]
        ground: Option<PathBuf>,
        /// Comma-separated storage times with units; defaults to the configuration.
        #[arg(long, value_delimiter = ',')]
        storage: Vec<String>,
    },
    /// Fitted N₂ decay time against bias field.
    SweepB {
        #[arg(long)]
        ground: Option<PathBuf>,
        /// Lower field with unit, e.g. "131.5 G".
        #[arg(long)]
        from: Option<String>,
        #[arg(long)]
        to: Option<String>,
        #[arg(long)]
        points: Option<usize>,
    },
    /// Write the imprint and evolve without read-out analysis.
    Evolve {
        #[arg(long)]
        ground: Option<PathBuf>,
        /// Evolution time with unit; defaults to the configured storage.
        #[arg(long)]
        duration: Option<String>,
    },
}

fn exit_code(e: &Error) -> u8 {
    match e {
        Error::Config(_)
        | Error::Timeline(_)
        | Error::FieldOutOfWindow { .. }
        | Error::Scattering(_)
        | Error::Grid(_)
        | Error::Pulse(_)
        | Error::WriteIn(_)
        | Error::ZeroCoupling
        | Error::Format(_) => 2,
        Error::NotConverged { .. } => 4,
        Error::Io(_) => 1,
        _ => 3,
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::new().filter_or("STOPLIGHT_LOG", "info")).init();
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}

fn run(cli: &Cli) -> Result<(), Error> {
    let mut cfg = match &cli.config {
        Some(p) => RunConfig::from_file(p).map_err(|e| match e {
            Error::Io(io) => Error::Config(format!("{}: {io}", p.display())),
            other => other,
        })?,
        None => RunConfig::default_config(),
    };
    if let Some(every) = &cli.snapshot_every {
        let every = keyed_quantity("--snapshot-every", every, Dim::TIME)?;
        if !(every > 0.0) {
            return Err(Error::Config("--snapshot-every must be positive".into()));
        }
        cfg.snapshot_every = Some(every);
    }
    let out = cli
        .out
        .clone()
        .or_else(|| cfg.output_directory.as_ref().map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from("out"));
    match &cli.command {
        Command::ValidateConfig => validate(&cfg),
        Command::GroundState => ground_state_cmd(&cfg, &out),
        Command::StoreRevive { ground, storage } => store_revive(&mut cfg, &out, ground.as_deref(), storage),
        Command::SweepB { ground, from, to, points } => {
            sweep(&mut cfg, &out, ground.as_deref(), from.as_deref(), to.as_deref(), *points, cli.jobs)
        }
        Command::Evolve { ground, duration } => evolve(&mut cfg, &out, ground.as_deref(), duration.as_deref()),
    }
}

fn validate(cfg: &RunConfig) -> Result<(), Error> {
    let s = &cfg.setup;
    let c = s.couplings_at(s.preparation_field)?;
    println!("config_sha256 {}", cfg.hash_hex());
    println!("grid {:?} points over {:?} m", s.grid.points(), s.grid.extents());
    println!("atoms {:e}, reduction {:e} m^(d-3)", s.atoms, s.reduction);
    println!("g11 {:e}, g22 {:e}, g12 {:e}{:+e}i", c.g11, c.g22, c.g12.re, c.g12.im);
    if let TrapModel::Harmonic { omega } = &s.trap.model {
        println!("trap omega {omega:?} rad/s");
    }
    println!("storage {} s, {} storage times, {} sweep fields", cfg.timeline.storage_duration(), cfg.storage_times.len(), cfg.sweep_fields.len());
    println!("ok");
    Ok(())
}

/// Header metadata shared by every table.
fn tagged(cfg: &RunConfig, table: io::CsvTable) -> io::CsvTable {
    table.with_meta("reduction_m^(d-3)", cfg.setup.reduction).with_meta("dims", cfg.setup.grid.dims())
}

fn ensure_dir(out: &Path) -> Result<(), Error> {
    std::fs::create_dir_all(out)?;
    Ok(())
}

fn ground_state_cmd(cfg: &RunConfig, out: &Path) -> Result<(), Error> {
    let gs = cfg.setup.prepare_ground_state()?;
    ensure_dir(out)?;
    tagged(cfg, io::convergence_table(cfg.hash, &gs.log)).save(&out.join("convergence.csv"))?;
    let snap = SnapshotFile {
        time: 0.0,
        config_hash: cfg.hash,
        psi2: ComplexField::zeros(gs.psi.grid().clone()),
        psi1: gs.psi.clone(),
    };
    io::save_snapshot(&out.join("ground_state.snp"), &snap)?;
    let per_atom = gs.energy / cfg.setup.atoms;
    println!("iterations {}", gs.iterations);
    println!("energy_per_atom {per_atom:e} J");
    if let TrapModel::Harmonic { omega } = &cfg.setup.trap.model {
        let zero_point: f64 = omega.iter().map(|w| 0.5 * cfg.setup.consts.hbar * w).sum();
        println!("energy_over_zero_point {}", per_atom / zero_point);
    }
    let z = gs.psi.grid().z_axis();
    println!("full_width_1pct {:e} m", full_width_at(&gs.psi, z, 0.01));
    Ok(())
}

fn load_or_prepare(cfg: &mut RunConfig, ground: Option<&Path>) -> Result<ComplexField, Error> {
    let psi = match ground {
        Some(p) => {
            let snap = io::load_snapshot(p)?;
            if snap.psi1.grid().as_ref() != cfg.setup.grid.as_ref() {
                return Err(Error::Config(format!("{}: grid differs from the configuration", p.display())));
            }
            if snap.config_hash != cfg.hash {
                log::warn!("{} was written by configuration {}", p.display(), hex(&snap.config_hash));
            }
            snap.psi1
        }
        None => cfg.setup.prepare_ground_state()?.psi,
    };
    let alpha = cfg.setup.calibrate_attenuation(&psi, cfg.transmission)?;
    log::info!("attenuation {alpha:e} m^(d-1) per atom");
    Ok(psi)
}

fn add_snapshot_cadence(cfg: &mut RunConfig, storage: f64) {
    if let Some(every) = cfg.snapshot_every {
        let n = (storage / every + 1e-9).floor() as usize;
        cfg.timeline.snapshot_times.extend((0..=n).map(|k| k as f64 * every));
    }
    cfg.timeline.snapshot_times.retain(|&t| t <= storage);
    cfg.timeline.snapshot_times.sort_by(f64::total_cmp);
    cfg.timeline.snapshot_times.dedup();
}

fn save_snapshots(cfg: &RunConfig, out: &Path, snaps: &[Snapshot]) -> Result<(), Error> {
    for (i, s) in snaps.iter().enumerate() {
        let file = SnapshotFile { time: s.time, config_hash: cfg.hash, psi1: s.psi1.clone(), psi2: s.psi2.clone() };
        io::save_snapshot(&out.join(format!("snapshot_{i:04}.snp")), &file)?;
    }
    Ok(())
}

fn store_revive(cfg: &mut RunConfig, out: &Path, ground: Option<&Path>, storage: &[String]) -> Result<(), Error> {
    let times = if storage.is_empty() {
        cfg.storage_times.clone()
    } else {
        storage
            .iter()
            .map(|s| keyed_quantity("--storage", s, Dim::TIME))
            .collect::<Result<Vec<_>, _>>()?
    };
    if times.is_empty() || times.iter().any(|&t| !(t >= 0.0)) {
        return Err(Error::Config("storage times must be non-empty and non-negative".into()));
    }
    let end = times.iter().cloned().fold(0.0, f64::max);
    let psi = load_or_prepare(cfg, ground)?;
    cfg.timeline = cfg.timeline.with_storage(end);
    add_snapshot_cadence(cfg, end);
    let run = run_storage_series(&cfg.setup, &cfg.timeline, &psi, &times)?;
    ensure_dir(out)?;
    let rows: Vec<(f64, f64)> = times.iter().zip(&run.revivals).map(|(&t, r)| (t, r.fidelity)).collect();
    let table = tagged(cfg, io::fidelity_table(cfg.hash, &rows));
    table.save(&out.join("fidelity.csv"))?;
    tagged(cfg, io::observables_table(cfg.hash, &run.observables)).save(&out.join("observables.csv"))?;
    save_snapshots(cfg, out, &run.snapshots)?;
    for row in &table.rows {
        println!("storage {} s: fidelity {:.6}", row[0], row[1]);
    }
    Ok(())
}

fn sweep(
    cfg: &mut RunConfig,
    out: &Path,
    ground: Option<&Path>,
    from: Option<&str>,
    to: Option<&str>,
    points: Option<usize>,
    jobs: usize,
) -> Result<(), Error> {
    let field = |flag: &str, v: Option<&str>, default: f64| -> Result<f64, Error> {
        match v {
            Some(s) => keyed_quantity(&format!("--{flag}"), s, Dim::FIELD),
            None => Ok(default),
        }
    };
    let lo = field("from", from, cfg.sweep_fields[0])?;
    let hi = field("to", to, *cfg.sweep_fields.last().expect("at least two sweep fields"))?;
    let n = points.unwrap_or(cfg.sweep_fields.len());
    let fields: Vec<f64> = match n {
        0 => Vec::new(),
        1 => vec![lo],
        _ => (0..n).map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64).collect(),
    };
    let psi = load_or_prepare(cfg, ground)?;
    let timeline = cfg.decay_timeline();
    let table = sweep_bias_field(&cfg.setup, &timeline, &psi, &fields, 0.0, jobs)?;
    ensure_dir(out)?;
    tagged(cfg, io::sweep_table(cfg.hash, &table)).save(&out.join("sweep.csv"))?;
    for p in &table {
        println!("B {} G: tau {:.4} s ± {:.4}", p.bias_field, p.fit.tau, p.fit.tau_err);
    }
    if let Some(b) = argmax_tau(&table) {
        println!("argmax_tau {b} G");
    }
    Ok(())
}

fn evolve(cfg: &mut RunConfig, out: &Path, ground: Option<&Path>, duration: Option<&str>) -> Result<(), Error> {
    let end = match duration {
        Some(d) => keyed_quantity("--duration", d, Dim::TIME)?,
        None => cfg.timeline.storage_duration(),
    };
    let psi = load_or_prepare(cfg, ground)?;
    cfg.timeline = cfg.timeline.with_storage(end);
    add_snapshot_cadence(cfg, end);
    let run = run_storage_series(&cfg.setup, &cfg.timeline, &psi, &[end])?;
    ensure_dir(out)?;
    tagged(cfg, io::observables_table(cfg.hash, &run.observables)).save(&out.join("observables.csv"))?;
    save_snapshots(cfg, out, &run.snapshots)?;
    if let Some(last) = run.observables.samples.last() {
        println!("t {} s: N1 {:e}, N2 {:e}, COM_z {:e} m", last.t, last.n1, last.n2, last.com_z);
    }
    Ok(())
}
