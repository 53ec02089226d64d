//! Command-line front end.

use std::fs::File;
use std::io::BufWriter;
use std::path::{Path, PathBuf};
use std::time::Instant;

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand};
use nearfield_core::estimator_fresnel::{estimate_fresnel_detailed, FresnelConfig};
use nearfield_core::estimator_sf::{estimate_sf_from, WidebandSubspaces};
use nearfield_core::experiment::EstimatorKind;
use nearfield_core::signal::synthesize_received;
use nearfield_core::Target;
use serde_json::json;

use crate::config::{Config, EstimatorChoice};
use crate::manifest::RunManifest;
use crate::output;
use crate::sweep::{self, SweepKind};

/// Share of missing targets above which a sweep exits with an error.
pub const MAX_FAILURE_RATE: f64 = 0.5;

#[derive(Debug, Parser)]
#[command(name = "nearfield", version, about = "Wideband near-field MUSIC localization")]
pub struct Cli {
    /// TOML configuration; built-in defaults when omitted.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Overrides `seed`.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Overrides `experiment.n_trials`.
    #[arg(long, global = true)]
    pub trials: Option<usize>,
    /// Overrides `experiment.estimator`.
    #[arg(long, global = true, value_enum)]
    pub estimator: Option<EstimatorChoice>,
    /// Worker threads for sweeps (all cores when omitted).
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    /// Output directory, created if missing.
    #[arg(long, global = true, default_value = "out")]
    pub out: PathBuf,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Dump the spectra of the configured scene.
    Spectrum,
    /// Monte Carlo NMSE sweep.
    Sweep {
        #[command(subcommand)]
        kind: SweepCommand,
    },
    /// Dump the received data of the configured scene.
    Simulate,
}

#[derive(Debug, Clone, Copy, Subcommand)]
pub enum SweepCommand {
    /// Sweep `experiment.snr_db` for every configured waveband.
    Snr,
    /// Sweep `experiment.bandwidth_hz` at fixed subcarrier count.
    Bandwidth,
}

impl Cli {
    pub fn resolved_config(&self) -> Result<Config> {
        let mut cfg = match &self.config {
            Some(path) => Config::load(path)?,
            None => Config::default(),
        };
        if let Some(seed) = self.seed {
            cfg.seed = seed;
        }
        if let Some(trials) = self.trials {
            cfg.experiment.n_trials = trials;
        }
        if let Some(est) = self.estimator {
            cfg.experiment.estimator = est;
        }
        Ok(cfg)
    }
}

pub fn run(cli: Cli) -> Result<()> {
    let cfg = cli.resolved_config()?;
    std::fs::create_dir_all(&cli.out)
        .with_context(|| format!("cannot create {}", cli.out.display()))?;
    match cli.command {
        Command::Spectrum => cmd_spectrum(&cfg, &cli.out),
        Command::Simulate => cmd_simulate(&cfg, &cli.out),
        Command::Sweep { kind } => {
            let kind = match kind {
                SweepCommand::Snr => SweepKind::Snr,
                SweepCommand::Bandwidth => SweepKind::Bandwidth,
            };
            cmd_sweep(&cfg, kind, cli.threads, &cli.out)
        }
    }
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    let f = File::create(path).with_context(|| format!("cannot create {}", path.display()))?;
    Ok(BufWriter::new(f))
}

fn target_json(t: &Target) -> serde_json::Value {
    json!({ "range_m": t.range_m, "angle_deg": t.angle_rad.to_degrees() })
}

pub fn cmd_spectrum(cfg: &Config, out: &Path) -> Result<()> {
    let mut manifest = RunManifest::new("spectrum", cfg, None);
    let array = cfg.array()?;
    let scene = cfg.scene()?;
    let grid = cfg.grid()?;
    let p = scene.len();

    let t0 = Instant::now();
    let rx = synthesize_received(&array, &cfg.scene_ofdm()?, &scene, cfg.scene.snr_db, cfg.seed)
        .context("scene synthesis")?;
    manifest.timings_s.insert("synthesize".into(), t0.elapsed().as_secs_f64());

    let mut details = serde_json::Map::new();
    details.insert("truth".into(), scene.targets.iter().map(target_json).collect());
    let kinds = cfg.experiment.estimator.kinds();

    if kinds.contains(&EstimatorKind::SubspaceFitting) {
        let t0 = Instant::now();
        let subspaces = WidebandSubspaces::from_received(&rx, p)?;
        let (spectrum, est) = estimate_sf_from(&subspaces, &grid).context("sf estimator")?;
        manifest.timings_s.insert("sf".into(), t0.elapsed().as_secs_f64());
        let path = out.join("spectrum_sf.csv");
        output::write_spectrum_2d(&spectrum, create(&path)?)?;
        manifest.outputs.push(path.display().to_string());
        let (i, j) = spectrum.argmax();
        details.insert(
            "sf".into(),
            json!({
                "estimates": est.targets.iter().map(target_json).collect::<Vec<_>>(),
                "peak_values": est.peak_values,
                "grid_argmax": { "range_m": grid.r_axis[i], "angle_deg": grid.theta_axis[j].to_degrees() },
            }),
        );
    }
    if kinds.contains(&EstimatorKind::Fresnel) {
        let t0 = Instant::now();
        let fcfg = FresnelConfig::from_grid(&grid, cfg.fresnel.n_windows);
        let res = estimate_fresnel_detailed(&rx, p, &fcfg).context("fresnel estimator")?;
        manifest.timings_s.insert("fresnel".into(), t0.elapsed().as_secs_f64());
        let path = out.join("spectrum_fresnel_angle.csv");
        output::write_angle_spectrum(&res.angle, create(&path)?)?;
        manifest.outputs.push(path.display().to_string());
        let mut candidates = Vec::new();
        for (i, d) in res.distances.iter().enumerate() {
            let path = out.join(format!("spectrum_fresnel_range_{i}.csv"));
            output::write_distance_spectrum(d, create(&path)?)?;
            manifest.outputs.push(path.display().to_string());
            candidates.push(json!({
                "file": path.display().to_string(),
                "angle_deg": d.angle_rad.to_degrees(),
                "range_m": d.range_m,
                "peak": d.peak,
            }));
        }
        details.insert(
            "fresnel".into(),
            json!({
                "estimates": res.estimate.targets.iter().map(target_json).collect::<Vec<_>>(),
                "peak_values": res.estimate.peak_values,
                "candidates": candidates,
            }),
        );
    }
    manifest.details = serde_json::Value::Object(details);
    manifest.write(&out.join("manifest_spectrum.json"))
}

pub fn cmd_simulate(cfg: &Config, out: &Path) -> Result<()> {
    let mut manifest = RunManifest::new("simulate", cfg, None);
    let t0 = Instant::now();
    let rx = synthesize_received(
        &cfg.array()?,
        &cfg.scene_ofdm()?,
        &cfg.scene()?,
        cfg.scene.snr_db,
        cfg.seed,
    )
    .context("scene synthesis")?;
    let path = out.join("received.csv");
    output::write_received(&rx, create(&path)?)?;
    manifest.timings_s.insert("simulate".into(), t0.elapsed().as_secs_f64());
    manifest.outputs.push(path.display().to_string());
    manifest.details = json!({
        "n_subcarriers": rx.per_subcarrier.len(),
        "n_elements": rx.array.n_elements(),
        "n_snapshots": rx.per_subcarrier.first().map_or(0, |y| y.cols()),
    });
    manifest.write(&out.join("manifest_simulate.json"))
}

pub fn cmd_sweep(cfg: &Config, kind: SweepKind, threads: Option<usize>, out: &Path) -> Result<()> {
    let name = format!("sweep_{}", kind.label());
    let mut manifest = RunManifest::new(format!("sweep {}", kind.label()), cfg, threads);
    let exp = cfg.experiment()?;

    let t0 = Instant::now();
    let table = sweep::run(&exp, kind, threads)?;
    manifest.timings_s.insert("sweep".into(), t0.elapsed().as_secs_f64());

    let csv_path = out.join(format!("{name}.csv"));
    output::write_sweep_csv(&table, create(&csv_path)?)?;
    let svg_path = out.join(format!("{name}.svg"));
    std::fs::write(&svg_path, output::sweep_svg(&table))
        .with_context(|| format!("cannot write {}", svg_path.display()))?;
    manifest.outputs = vec![csv_path.display().to_string(), svg_path.display().to_string()];

    let worst = table
        .rows
        .iter()
        .map(|r| r.failure_rate(exp.n_targets))
        .fold(0.0, f64::max);
    manifest.details = json!({ "max_failure_rate": worst });
    manifest.write(&out.join(format!("manifest_{name}.json")))?;

    if worst > MAX_FAILURE_RATE {
        bail!(
            "detection failures exceeded {:.0}% at some sweep point (worst {:.1}%)",
            MAX_FAILURE_RATE * 100.0,
            worst * 100.0
        );
    }
    Ok(())
}
