//! `vrla-sim` command-line front end.

use std::fmt::Write as _;
use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use crate::calibration;
use crate::config::{Overrides, ParameterFile, ResolvedRun, RunConfig};
use crate::engine::{self, ComparisonReport, Histogram, ProfileSpec, RunSummary, Scenario, SimResult};
use crate::error::{Error, Result};
use crate::profiles::{self, BatteryTrace, StressFactors};

#[derive(Debug, Parser)]
#[command(name = "vrla-sim", version, about = "Lead-acid battery ageing simulator for solar home systems")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run every scenario of a run file until end of life.
    Simulate(RunArgs),
    /// Paired run of two scenarios that differ only in policy.
    Compare(RunArgs),
    /// Stress factors of a battery trace CSV.
    Analyze(AnalyzeArgs),
    /// Derive degradation limits from the datasheet and check them.
    Calibrate(RunArgs),
}

#[derive(Debug, Args)]
pub struct RunArgs {
    #[arg(long)]
    pub config: PathBuf,
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Time step in seconds; must divide one day.
    #[arg(long)]
    pub dt: Option<f64>,
    /// Worker threads for the scenario pool.
    #[arg(long)]
    pub jobs: Option<usize>,
}

#[derive(Debug, Args)]
pub struct AnalyzeArgs {
    /// Trace CSV written by `simulate` with trace reports enabled.
    pub trace: PathBuf,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

impl RunArgs {
    fn overrides(&self) -> Overrides {
        Overrides {
            seed: self.seed,
            dt_s: self.dt,
            jobs: self.jobs,
            out: self.out.clone(),
        }
    }

    fn resolve(&self) -> Result<ResolvedRun> {
        if self.jobs == Some(0) {
            return Err(Error::param("jobs", "must be at least 1"));
        }
        let (config, base) = RunConfig::load(&self.config)?;
        config.resolve(&base, &self.overrides())
    }
}

/// Parses arguments, runs the command and maps the outcome to an exit code:
/// 0 on success, 1 for invalid input, 2 for a failed run.
pub fn main_with_args<I, T>(args: I) -> ExitCode
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}

pub fn exit_code(e: &Error) -> u8 {
    if e.is_validation() {
        1
    } else {
        2
    }
}

pub fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Simulate(a) => cmd_simulate(&a.resolve()?),
        Command::Compare(a) => cmd_compare(&a.resolve()?),
        Command::Analyze(a) => cmd_analyze(&a.trace, a.out.as_deref()),
        Command::Calibrate(a) => cmd_calibrate(&a.resolve()?),
    }
}

fn create_dir(path: &Path) -> Result<()> {
    fs::create_dir_all(path).map_err(|e| Error::io(path, e))
}

fn write_file(path: &Path, contents: &[u8]) -> Result<()> {
    fs::write(path, contents).map_err(|e| Error::io(path, e))
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_vec_pretty(value)?;
    text.push(b'\n');
    write_file(path, &text)
}

fn csv_writer(path: &Path) -> Result<csv::Writer<fs::File>> {
    let file = fs::File::create(path).map_err(|e| Error::io(path, e))?;
    Ok(csv::Writer::from_writer(file))
}

fn write_histogram(path: &Path, h: &Histogram) -> Result<()> {
    let mut w = csv_writer(path)?;
    w.write_record(["bin_lo", "bin_hi", "hours"])?;
    for (i, hours) in h.hours.iter().enumerate() {
        w.serialize((h.edges[i], h.edges[i + 1], hours))?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

fn write_trajectory(path: &Path, r: &SimResult) -> Result<()> {
    let mut w = csv_writer(path)?;
    for day in &r.capacity_trajectory {
        w.serialize(day)?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

/// Writes one scenario's artifacts into `dir/<name>/`.
pub fn write_result(dir: &Path, scenario: &Scenario, r: &SimResult, profile_days: Option<u32>) -> Result<()> {
    let dir = dir.join(&r.name);
    create_dir(&dir)?;
    write_json(&dir.join("result.json"), r)?;
    write_trajectory(&dir.join("trajectory.csv"), r)?;
    write_histogram(&dir.join("soc_histogram.csv"), &r.soc_histogram)?;
    write_histogram(&dir.join("voltage_histogram.csv"), &r.voltage_histogram)?;
    if let Some(trace) = &r.trace {
        let path = dir.join("trace.csv");
        let file = fs::File::create(&path).map_err(|e| Error::io(&path, e))?;
        trace.write_csv(std::io::BufWriter::new(file))?;
    }
    if let Some(days) = profile_days {
        let series = match &scenario.profile {
            ProfileSpec::Archetype(spec) => profiles::generate_archetype(spec, days, scenario.seed, scenario.dt_s)?,
            ProfileSpec::Series(ts) => ts.clone(),
        };
        profiles::write_csv(&series, &dir.join("profile.csv"))?;
    }
    Ok(())
}

/// Table mirroring the lifetime / FEC / corrosion layout of the results.
pub fn summary_table(rows: &[RunSummary]) -> String {
    let width = rows.iter().map(|r| r.name.len()).max().unwrap_or(0).max(8);
    let mut s = format!(
        "{:<width$}  {:>14}  {:>8}  {:>13}\n",
        "scenario", "lifetime_years", "fec", "corrosion_pct"
    );
    for r in rows {
        let censored = if r.censored { "+" } else { "" };
        let _ = writeln!(
            s,
            "{:<width$}  {:>14}  {:>8.1}  {:>13.1}",
            r.name,
            format!("{:.2}{censored}", r.lifetime_years),
            r.fec,
            r.corrosion_share_pct
        );
    }
    if rows.iter().any(|r| r.censored) {
        s.push_str("+ horizon reached before end of life\n");
    }
    s
}

fn write_summary(out: &Path, rows: &[RunSummary]) -> Result<()> {
    let path = out.join("summary.csv");
    let mut w = csv_writer(&path)?;
    w.write_record(["scenario", "policy", "lifetime_years", "censored", "fec", "corrosion_pct"])?;
    for r in rows {
        let policy = serde_json::to_value(r.policy)?;
        w.write_record([
            r.name.clone(),
            policy.as_str().unwrap_or_default().to_string(),
            r.lifetime_years.to_string(),
            r.censored.to_string(),
            r.fec.to_string(),
            r.corrosion_share_pct.to_string(),
        ])?;
    }
    w.flush().map_err(|e| Error::io(&path, e))
}

pub fn cmd_simulate(run: &ResolvedRun) -> Result<()> {
    if run.scenarios.is_empty() {
        return Err(Error::Config("no scenarios to run".into()));
    }
    let results = engine::run_batch(&run.scenarios, run.jobs);
    create_dir(&run.out)?;
    let mut rows = Vec::new();
    let mut failures = Vec::new();
    for (scenario, result) in run.scenarios.iter().zip(results) {
        match result {
            Ok(r) => {
                write_result(&run.out, scenario, &r, run.reports.profile_days)?;
                rows.push(RunSummary::from(&r));
            }
            Err(e) => failures.push(format!("{}: {e}", scenario.name)),
        }
    }
    if !rows.is_empty() {
        write_summary(&run.out, &rows)?;
        print!("{}", summary_table(&rows));
        let _ = std::io::stdout().flush();
    }
    if failures.is_empty() {
        Ok(())
    } else {
        Err(Error::ScenariosFailed {
            failed: failures.len(),
            details: failures.join("; "),
        })
    }
}

fn pick(run: &ResolvedRun) -> Result<(&Scenario, &Scenario)> {
    let find = |name: &str| run.scenarios.iter().find(|s| s.name == name);
    match &run.compare {
        Some(c) => Ok((
            find(&c.base).ok_or_else(|| Error::Config(format!("unknown scenario `{}`", c.base)))?,
            find(&c.alt).ok_or_else(|| Error::Config(format!("unknown scenario `{}`", c.alt)))?,
        )),
        None if run.scenarios.len() == 2 => Ok((&run.scenarios[0], &run.scenarios[1])),
        None => Err(Error::Config(
            "compare needs a [compare] table or exactly two scenarios".into(),
        )),
    }
}

fn write_paired(path: &Path, base: &SimResult, alt: &SimResult) -> Result<()> {
    let mut w = csv_writer(path)?;
    w.write_record([
        "day",
        "base_corrosion_ah",
        "base_active_mass_ah",
        "base_total_ah",
        "alt_corrosion_ah",
        "alt_active_mass_ah",
        "alt_total_ah",
    ])?;
    let days = base.days_simulated.max(alt.days_simulated);
    let at = |r: &SimResult, d: u32| {
        r.capacity_trajectory
            .iter()
            .find(|c| c.day == d)
            .map(|c| (c.corrosion_ah.to_string(), c.active_mass_ah.to_string(), c.total_ah.to_string()))
            .unwrap_or_default()
    };
    for d in 1..=days {
        let (bc, ba, bt) = at(base, d);
        let (ac, aa, at_) = at(alt, d);
        w.write_record([d.to_string(), bc, ba, bt, ac, aa, at_])?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

pub fn cmd_compare(run: &ResolvedRun) -> Result<()> {
    let (base, alt) = pick(run)?;
    let (report, b, a): (ComparisonReport, _, _) = engine::compare_strategies(base, alt)?;
    create_dir(&run.out)?;
    write_result(&run.out, base, &b, run.reports.profile_days)?;
    if alt.name != base.name {
        write_result(&run.out, alt, &a, run.reports.profile_days)?;
    }
    write_json(&run.out.join("comparison.json"), &report)?;
    write_paired(&run.out.join("paired_trajectory.csv"), &b, &a)?;
    print!("{}", summary_table(&[report.base.clone(), report.alt.clone()]));
    println!(
        "lifetime_ratio {:.3}  corrosion_reduction {:.1}%  active_mass_ratio {:.2}  alt_soh_at_base_eol {:.1}%  min_soc_alt {:.3}  load_loss base/alt {}/{}",
        report.lifetime_ratio,
        100.0 * report.corrosion_reduction,
        report.active_mass_ratio,
        report.alt_soh_at_base_eol_pct,
        report.min_soc_alt,
        report.load_loss_events_base,
        report.load_loss_events_alt,
    );
    Ok(())
}

pub fn analyze_trace(path: &Path) -> Result<StressFactors> {
    let file = fs::File::open(path).map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
    let trace = BatteryTrace::read_csv(std::io::BufReader::new(file))?;
    profiles::stress_factors(&trace)
}

pub fn cmd_analyze(trace: &Path, out: Option<&Path>) -> Result<()> {
    let f = analyze_trace(trace)?;
    let text = serde_json::to_string_pretty(&f)?;
    println!("{text}");
    if let Some(out) = out {
        create_dir(out)?;
        write_json(&out.join("stress_factors.json"), &f)?;
    }
    Ok(())
}

pub fn cmd_calibrate(run: &ResolvedRun) -> Result<()> {
    let report = calibration::calibrate(&run.model, run.dt_s)?;
    create_dir(&run.out)?;
    let file = ParameterFile {
        model: run.model.clone(),
        limits: Some(report.limits),
    };
    write_file(&run.out.join("calibrated.toml"), file.to_toml()?.as_bytes())?;
    write_json(&run.out.join("calibration.json"), &report)?;
    println!(
        "w_limit {:.6e}  c_corr_limit {:.3} Ah  c_deg_limit {:.3} Ah",
        report.limits.w_limit, report.limits.c_corr_limit, report.limits.c_deg_limit
    );
    println!(
        "float check: {:.3} years to EOL (rated {:.3}, {:+.2}%)",
        report.float.years_to_eol,
        report.float.rated_years,
        100.0 * report.float.relative_error
    );
    println!(
        "cycling check: {:.1} cycles to EOL (rated {:.0}, {:+.2}%)",
        report.cycling.cycles_to_eol,
        report.cycling.rated_cycles,
        100.0 * report.cycling.relative_error
    );
    if !report.within_tolerance() {
        eprintln!("warning: calibration checks outside tolerance (float ±2%, cycling ±10%)");
    }
    Ok(())
}
