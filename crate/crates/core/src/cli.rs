//! Reproduction driver behind the `cascade-sim` binary.
//!
//! Every command writes `<command>.csv` and `<command>.manifest.json` into
//! the output directory.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use clap::{Parser, ValueEnum};
use serde::Serialize;
use thiserror::Error;

use crate::analytic::{amplitudes_driven, evolve_protocol, find_tbar, Protocol, Schedule};
use crate::config::{parse_config, parse_count, Config, ConfigError, RunOptions, TbarChoice};
use crate::detection::{channel_probabilities, channel_probability_series, concurrence_conditional, RecordStatistics};
use crate::dynamics::{JumpChannel, Unraveling};
use crate::entanglement::{concurrence_atoms_closed, concurrence_cavities_closed};
use crate::error::Error as SimError;
use crate::params::{raman_adequacy, AdequacyReport, SubsystemParams, SystemParams};

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

/// Output-mirror fractions κ/𝒦 of the concurrence sweep.
pub const KAPPA_FRACTIONS: [f64; 3] = [1.0, 0.9, 0.8];

const DARK_COUNT_NOTE: &str =
    "dark counts are not simulated; they can only lower the success probability of the null-click conditioning";

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Command {
    /// Populations |α|², |β|², |γ|², |δ|² with the lasers on.
    Fig3,
    /// Atom-atom concurrence with the lasers on for κ/𝒦 = 1, 0.9, 0.8.
    Fig4,
    /// Atom and cavity concurrences with switch-off at t̄.
    Fig5,
    /// Channel probabilities and null-click conditional concurrence.
    Conditional,
    /// Monte-Carlo detection records.
    Trajectories,
    /// Switch-off time maximizing the atom-atom concurrence.
    FindTbar,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Self::Fig3 => "fig3",
            Self::Fig4 => "fig4",
            Self::Fig5 => "fig5",
            Self::Conditional => "conditional",
            Self::Trajectories => "trajectories",
            Self::FindTbar => "find-tbar",
        }
    }
}

#[derive(Debug, Parser)]
#[command(name = "cascade-sim", version, about = "Cascaded Raman-driven atom-cavity entanglement simulator")]
pub struct Cli {
    pub command: Command,
    /// Key-value parameter file.
    #[arg(long)]
    pub config: PathBuf,
    /// Output directory (created if needed).
    #[arg(long, default_value = ".")]
    pub out: PathBuf,
    /// Horizon in units of 1/𝒦.
    #[arg(long)]
    pub tmax: Option<f64>,
    /// Step in units of 1/𝒦.
    #[arg(long)]
    pub dt: Option<f64>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Number of trajectories.
    #[arg(long, value_parser = parse_ntraj)]
    pub ntraj: Option<usize>,
    /// Detector efficiency.
    #[arg(long)]
    pub eta: Option<f64>,
    /// `auto` or a switch-off time.
    #[arg(long)]
    pub tbar: Option<TbarChoice>,
    /// Write every n-th grid point to the CSV.
    #[arg(long)]
    pub every: Option<usize>,
}

fn parse_ntraj(s: &str) -> Result<usize, String> {
    parse_count(s).ok_or_else(|| format!("`{s}` is not a positive integer"))
}

#[derive(Debug, Error)]
pub enum CliError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Sim(#[from] SimError),
    #[error("invalid option: {0}")]
    Option(String),
    #[error("{path}: {message}")]
    Io { path: PathBuf, message: String },
}

impl Cli {
    /// Loads the config file and applies the command-line overrides.
    pub fn load(&self) -> Result<Config, CliError> {
        let mut config = parse_config(&self.config)?;
        let o = &mut config.options;
        if let Some(v) = self.tmax {
            o.grid.t_max = v;
        }
        if let Some(v) = self.dt {
            o.grid.dt = v;
        }
        o.grid = crate::dynamics::Grid::new(o.grid.t_max, o.grid.dt)?;
        if let Some(v) = self.seed {
            o.seed = v;
        }
        if let Some(v) = self.ntraj {
            o.ntraj = v;
        }
        if let Some(v) = self.eta {
            if !(0.0..=1.0).contains(&v) {
                return Err(SimError::InvalidEfficiency(v).into());
            }
            o.eta = v;
        }
        if let Some(v) = self.tbar {
            o.tbar = v;
        }
        if let Some(v) = self.every {
            if v == 0 {
                return Err(CliError::Option("--every must be at least 1".into()));
            }
            o.every = v;
        }
        Ok(config)
    }
}

/// Headline scalars of the stored-entanglement protocol at the horizon.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Summary {
    pub tbar: f64,
    /// Atom-atom concurrence at t̄.
    pub concurrence_tbar: f64,
    pub horizon: f64,
    pub p_no: f64,
    pub p_rad: f64,
    pub p_abs: f64,
    pub eta: f64,
    pub p0: f64,
    pub concurrence_conditional: f64,
    pub enhancement_percent: f64,
}

pub fn resolve_tbar(params: &SystemParams, options: &RunOptions) -> Result<f64, SimError> {
    match options.tbar {
        TbarChoice::Auto => find_tbar(params, 0.0, options.grid.t_max.max(crate::analytic::TBAR_SCAN_STEP)),
        TbarChoice::Fixed(t) => Ok(t),
    }
}

pub fn summarize(params: &SystemParams, options: &RunOptions) -> Result<Summary, SimError> {
    let tbar = resolve_tbar(params, options)?;
    let schedule = Schedule::switch_off_at(tbar)?;
    let horizon = options.grid.t_max;
    let c_tbar = concurrence_atoms_closed(&amplitudes_driven(params, tbar)?);
    let state = evolve_protocol(params, schedule, horizon)?;
    let probs = channel_probabilities(params, schedule, horizon, options.eta)?;
    let c_now = concurrence_atoms_closed(&state);
    let c_cond = if probs.p0 > 0.0 {
        concurrence_conditional(&state, &probs)?
    } else {
        f64::NAN
    };
    Ok(Summary {
        tbar,
        concurrence_tbar: c_tbar,
        horizon,
        p_no: probs.p_no,
        p_rad: probs.p_rad,
        p_abs: probs.p_abs,
        eta: options.eta,
        p0: probs.p0,
        concurrence_conditional: c_cond,
        enhancement_percent: if c_now > 0.0 { (c_cond / c_now - 1.0) * 100.0 } else { f64::NAN },
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct RunManifest {
    pub tool: String,
    pub version: String,
    pub command: Command,
    pub config_file: PathBuf,
    /// Key/value pairs as given in the config file.
    pub config: BTreeMap<String, String>,
    /// Validated raw and derived parameters.
    pub params: SystemParams,
    pub adequacy: AdequacyReport,
    pub options: RunOptions,
    pub summary: Summary,
    /// Command-specific scalars.
    pub scalars: BTreeMap<String, f64>,
    pub records: Option<RecordStatistics>,
    pub csv: String,
    pub notes: Vec<String>,
}

/// CSV text plus command-specific manifest content.
struct Output {
    csv: String,
    scalars: BTreeMap<String, f64>,
    records: Option<RecordStatistics>,
}

fn row(out: &mut String, values: &[f64]) {
    let cells: Vec<String> = values.iter().map(|v| format!("{v:.11e}")).collect();
    out.push_str(&cells.join(","));
    out.push('\n');
}

fn output_times(options: &RunOptions, schedule: Schedule) -> Vec<f64> {
    let nodes = options.grid.nodes(schedule);
    let last = nodes.len() - 1;
    let mut times: Vec<f64> = nodes.iter().copied().step_by(options.every).collect();
    if !last.is_multiple_of(options.every) {
        times.push(nodes[last]);
    }
    if let Some(tb) = schedule.tbar().filter(|&tb| tb < options.grid.t_max) {
        if let Err(pos) = times.binary_search_by(|t| t.total_cmp(&tb)) {
            times.insert(pos, tb);
        }
    }
    times
}

/// Same parameters with κ = f·𝒦 and κ′ = (1 − f)𝒦 in both subsystems.
pub fn with_output_fraction(params: &SystemParams, fraction: f64) -> Result<SystemParams, SimError> {
    let adjust = |p: &SubsystemParams| {
        let total = p.kappa + p.kappa_loss;
        SubsystemParams {
            kappa: fraction * total,
            kappa_loss: (1.0 - fraction) * total,
            ..*p
        }
    };
    SystemParams::new(adjust(params.a()), adjust(params.b()), params.phi())
}

fn fig3(params: &SystemParams, options: &RunOptions) -> Result<Output, SimError> {
    let mut csv = String::from("t,abs_alpha_sq,abs_beta_sq,abs_gamma_sq,abs_delta_sq\n");
    for t in output_times(options, Schedule::always_on()) {
        let s = amplitudes_driven(params, t)?;
        row(
            &mut csv,
            &[t, s.alpha.norm_sqr(), s.beta.norm_sqr(), s.gamma.norm_sqr(), s.delta.norm_sqr()],
        );
    }
    Ok(Output {
        csv,
        scalars: BTreeMap::new(),
        records: None,
    })
}

fn fig4(params: &SystemParams, options: &RunOptions) -> Result<Output, SimError> {
    let sweep: Vec<SystemParams> = KAPPA_FRACTIONS
        .iter()
        .map(|&f| with_output_fraction(params, f))
        .collect::<Result<_, _>>()?;
    let mut csv = String::from("t");
    for f in KAPPA_FRACTIONS {
        write!(csv, ",c_atoms_kappa_{f:.1}").unwrap();
    }
    csv.push('\n');
    for t in output_times(options, Schedule::always_on()) {
        let mut values = vec![t];
        for p in &sweep {
            values.push(concurrence_atoms_closed(&amplitudes_driven(p, t)?));
        }
        row(&mut csv, &values);
    }
    let mut scalars = BTreeMap::new();
    for (f, p) in KAPPA_FRACTIONS.iter().zip(&sweep) {
        let tb = find_tbar(p, 0.0, options.grid.t_max.max(crate::analytic::TBAR_SCAN_STEP))?;
        scalars.insert(format!("tbar_kappa_{f:.1}"), tb);
        scalars.insert(
            format!("concurrence_tbar_kappa_{f:.1}"),
            concurrence_atoms_closed(&amplitudes_driven(p, tb)?),
        );
    }
    Ok(Output {
        csv,
        scalars,
        records: None,
    })
}

fn fig5(params: &SystemParams, options: &RunOptions, tbar: f64) -> Result<Output, SimError> {
    let schedule = Schedule::switch_off_at(tbar)?;
    let protocol = Protocol::new(params, schedule);
    let mut csv = String::from("t,c_atoms,c_cavities\n");
    for t in output_times(options, schedule) {
        let s = protocol.state_at(t)?;
        row(&mut csv, &[t, concurrence_atoms_closed(&s), concurrence_cavities_closed(&s)]);
    }
    let end = protocol.state_at(options.grid.t_max)?;
    let scalars = BTreeMap::from([
        ("c_atoms_horizon".to_string(), concurrence_atoms_closed(&end)),
        ("c_cavities_horizon".to_string(), concurrence_cavities_closed(&end)),
    ]);
    Ok(Output {
        csv,
        scalars,
        records: None,
    })
}

fn conditional(params: &SystemParams, options: &RunOptions, tbar: f64) -> Result<Output, SimError> {
    let schedule = Schedule::switch_off_at(tbar)?;
    let protocol = Protocol::new(params, schedule);
    let times = output_times(options, schedule);
    let series = channel_probability_series(params, schedule, &times, options.eta)?;
    let mut csv = String::from("t,p_no,p_rad,p_abs,p0,c_atoms,c_conditional\n");
    for probs in &series {
        let s = protocol.state_at(probs.t)?;
        let c_cond = if probs.p0 > 0.0 {
            concurrence_conditional(&s, probs)?
        } else {
            f64::NAN
        };
        row(
            &mut csv,
            &[probs.t, probs.p_no, probs.p_rad, probs.p_abs, probs.p0, concurrence_atoms_closed(&s), c_cond],
        );
    }
    let last = series.last().expect("at least one output time");
    let scalars = BTreeMap::from([
        ("partition_residual".to_string(), last.p_no + last.p_rad + last.p_abs - 1.0),
        ("p_yes".to_string(), last.p_yes),
    ]);
    Ok(Output {
        csv,
        scalars,
        records: None,
    })
}

fn trajectories(params: &SystemParams, options: &RunOptions, tbar: f64) -> Result<Output, SimError> {
    let schedule = Schedule::switch_off_at(tbar)?;
    let unravel = Unraveling::new(params, schedule, options.grid)?;
    let runs = unravel.ensemble_with_draws(options.ntraj, options.seed);
    let mut stats = RecordStatistics {
        n: options.ntraj,
        no_jump: 0,
        clicked: 0,
        reflected: 0,
        lost: 0,
    };
    let mut jump_times: Vec<f64> = Vec::with_capacity(runs.len());
    for (rec, draws) in &runs {
        match rec.jump {
            None => stats.no_jump += 1,
            Some(j) => {
                jump_times.push(j.time);
                match j.channel {
                    JumpChannel::Radiated if draws.detector < options.eta => stats.clicked += 1,
                    JumpChannel::Radiated => stats.reflected += 1,
                    _ => stats.lost += 1,
                }
            }
        }
    }
    jump_times.sort_by(f64::total_cmp);
    let n = options.ntraj as f64;
    let mut csv = String::from("t,p_no_empirical,p_no_analytic\n");
    for t in output_times(options, schedule) {
        let jumped = jump_times.partition_point(|&x| x <= t) as f64;
        row(&mut csv, &[t, 1.0 - jumped / n, unravel.protocol().state_at(t)?.p_no()]);
    }
    let scalars = BTreeMap::from([
        ("p0_empirical".to_string(), stats.p0_empirical()),
        ("p0_standard_error".to_string(), stats.p0_standard_error()),
        ("p_no_empirical".to_string(), stats.no_jump as f64 / n),
        ("p_rad_empirical".to_string(), (stats.clicked + stats.reflected) as f64 / n),
        ("p_abs_empirical".to_string(), stats.lost as f64 / n),
    ]);
    Ok(Output {
        csv,
        scalars,
        records: Some(stats),
    })
}

fn find_tbar_output(summary: &Summary) -> Output {
    let mut csv = String::from("tbar,c_atoms_tbar\n");
    row(&mut csv, &[summary.tbar, summary.concurrence_tbar]);
    Output {
        csv,
        scalars: BTreeMap::new(),
        records: None,
    }
}

/// Runs `command` and writes its CSV and manifest into `out_dir`.
pub fn run(command: Command, config: &Config, config_file: &Path, out_dir: &Path) -> Result<RunManifest, CliError> {
    let params = &config.params;
    let options = &config.options;
    let summary = summarize(params, options)?;
    let output = match command {
        Command::Fig3 => fig3(params, options)?,
        Command::Fig4 => fig4(params, options)?,
        Command::Fig5 => fig5(params, options, summary.tbar)?,
        Command::Conditional => conditional(params, options, summary.tbar)?,
        Command::Trajectories => trajectories(params, options, summary.tbar)?,
        Command::FindTbar => find_tbar_output(&summary),
    };

    let io = |path: &Path, e: std::io::Error| CliError::Io {
        path: path.to_path_buf(),
        message: e.to_string(),
    };
    std::fs::create_dir_all(out_dir).map_err(|e| io(out_dir, e))?;
    let csv_name = format!("{}.csv", command.name());
    let csv_path = out_dir.join(&csv_name);
    std::fs::write(&csv_path, &output.csv).map_err(|e| io(&csv_path, e))?;

    let mut notes = vec![
        DARK_COUNT_NOTE.to_string(),
        format!(
            "channel probabilities and conditional concurrence are evaluated at t_max = {} with switch-off at t̄",
            options.grid.t_max
        ),
    ];
    if matches!(command, Command::Fig3 | Command::Fig4) {
        notes.push("lasers stay on for the whole time series".into());
    }
    let adequacy = raman_adequacy(params);
    if adequacy.flagged {
        notes.push(format!(
            "Raman adequacy: a ratio exceeds {}; the adiabatic elimination may be inaccurate",
            adequacy.threshold
        ));
    }
    let manifest = RunManifest {
        tool: "cascade-sim".into(),
        version: VERSION.into(),
        command,
        config_file: config_file.to_path_buf(),
        config: config.entries.clone(),
        params: *params,
        adequacy,
        options: *options,
        summary,
        scalars: output.scalars,
        records: output.records,
        csv: csv_name,
        notes,
    };
    let manifest_path = out_dir.join(format!("{}.manifest.json", command.name()));
    let json = serde_json::to_string_pretty(&manifest).expect("manifest serializes");
    std::fs::write(&manifest_path, json + "\n").map_err(|e| io(&manifest_path, e))?;
    Ok(manifest)
}

/// One-line human summary for the terminal.
pub fn describe(manifest: &RunManifest) -> String {
    let s = &manifest.summary;
    format!(
        "{}: tbar={:.4} C(tbar)={:.4} p_no={:.4} p_rad={:.4} p_abs={:.4} eta={} p0={:.4} C_cond={:.4} (+{:.1}%)",
        manifest.command.name(),
        s.tbar,
        s.concurrence_tbar,
        s.p_no,
        s.p_rad,
        s.p_abs,
        s.eta,
        s.p0,
        s.concurrence_conditional,
        s.enhancement_percent
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::parse_config_str;

    fn cfg() -> Config {
        let mut c = parse_config_str("g_a=10\nomega_a=10\ndelta_a=1000\nkappa_a=0.9\nkappa_loss_a=0.1\n").unwrap();
        c.options.grid = crate::dynamics::Grid::new(40.0, 1e-2).unwrap();
        c
    }

    #[test]
    fn output_times_include_ends_and_switch_off() {
        let mut o = cfg().options;
        o.grid = crate::dynamics::Grid::new(1.05, 0.1).unwrap();
        o.every = 5;
        let t = output_times(&o, Schedule::always_on());
        assert_eq!(t.first(), Some(&0.0));
        assert_eq!(t.last(), Some(&1.05));
        let t = output_times(&o, Schedule::switch_off_at(0.33).unwrap());
        assert!(t.contains(&0.33));
        assert!(t.windows(2).all(|w| w[0] < w[1]));
    }

    #[test]
    fn fraction_keeps_total_bandwidth() {
        let p = with_output_fraction(&cfg().params, 0.8).unwrap();
        assert!((p.a().kappa - 0.8).abs() < 1e-15);
        assert!((p.derived_b().big_k - 1.0).abs() < 1e-15);
    }

    #[test]
    fn cli_parses_flags() {
        let cli = Cli::try_parse_from([
            "cascade-sim", "fig5", "--config", "x.cfg", "--tbar", "auto", "--ntraj", "1e4", "--eta", "0.5",
        ])
        .unwrap();
        assert_eq!(cli.command, Command::Fig5);
        assert_eq!(cli.tbar, Some(TbarChoice::Auto));
        assert_eq!(cli.ntraj, Some(10_000));
        assert!(Cli::try_parse_from(["cascade-sim", "fig9", "--config", "x"]).is_err());
    }

    #[test]
    fn summary_at_short_horizon() {
        let s = summarize(&cfg().params, &cfg().options).unwrap();
        assert!((s.tbar - 28.32).abs() < 0.05);
        assert!(s.concurrence_conditional >= s.concurrence_tbar - 1e-12);
    }
}
