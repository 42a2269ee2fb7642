//! Experiment orchestration: cipher × PMN mode × tool grids and their
//! reports.

use std::collections::BTreeMap;
use std::fmt::{self, Write as _};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::time::{SystemTime, UNIX_EPOCH};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::aead::Registry;
use crate::eacirc::{cipher_campaign, EvolutionConfig};
use crate::error::{Error, Result};
use crate::sac::{avalanche_matrix, sac_deviation, sac_pass, sac_tolerance, SacConfig, SacField};
use crate::stats::battery::ROSTER;
use crate::stats::{run_battery, BatteryConfig, Verdict};
use crate::stream::{generate_stream, PmnMode, StreamConfig};

/// Control that must pass every tool.
pub const PASS_CONTROL: &str = "prftag";
/// Control that must be rejected by every tool.
pub const REJECT_CONTROL: &str = "xortag";

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Tool {
    Battery,
    Sac,
    Eacirc,
}

impl Tool {
    pub const ALL: [Tool; 3] = [Tool::Battery, Tool::Sac, Tool::Eacirc];

    pub fn as_str(self) -> &'static str {
        match self {
            Tool::Battery => "battery",
            Tool::Sac => "sac",
            Tool::Eacirc => "eacirc",
        }
    }
}

impl fmt::Display for Tool {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Tool {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "battery" => Ok(Tool::Battery),
            "sac" => Ok(Tool::Sac),
            "eacirc" => Ok(Tool::Eacirc),
            other => Err(Error::Parse(format!("unknown tool `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Scale {
    Desk,
    Paper,
}

impl fmt::Display for Scale {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Scale::Desk => "desk",
            Scale::Paper => "paper",
        })
    }
}

impl FromStr for Scale {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "desk" => Ok(Scale::Desk),
            "paper" => Ok(Scale::Paper),
            other => Err(Error::Parse(format!("unknown scale `{other}`"))),
        }
    }
}

/// Tool settings for one scale.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScaleProfile {
    pub battery: BatteryConfig,
    pub sac_samples: usize,
    pub sac_alpha: f64,
    pub eacirc: EvolutionConfig,
    pub eacirc_runs: usize,
}

pub fn scale_profile(scale: Scale) -> ScaleProfile {
    match scale {
        Scale::Desk => ScaleProfile {
            battery: BatteryConfig {
                seq_count: 20,
                ..BatteryConfig::default()
            },
            sac_samples: 10_000,
            sac_alpha: 0.01,
            eacirc: EvolutionConfig::default(),
            eacirc_runs: 100,
        },
        Scale::Paper => ScaleProfile {
            battery: BatteryConfig::default(),
            sac_samples: 100_000,
            sac_alpha: 0.01,
            eacirc: EvolutionConfig::default(),
            eacirc_runs: 1000,
        },
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentPlan {
    pub ciphers: Vec<String>,
    pub modes: Vec<PmnMode>,
    pub tools: Vec<Tool>,
    pub scale: Scale,
    pub master_seed: u64,
    pub out_dir: Option<PathBuf>,
}

impl ExperimentPlan {
    pub fn new(
        ciphers: &[&str],
        modes: &[PmnMode],
        tools: &[Tool],
        scale: Scale,
        master_seed: u64,
    ) -> Self {
        Self {
            ciphers: ciphers.iter().map(|c| c.to_string()).collect(),
            modes: modes.to_vec(),
            tools: tools.to_vec(),
            scale,
            master_seed,
            out_dir: None,
        }
    }

    pub fn validate(&self, registry: &Registry) -> Result<()> {
        if self.ciphers.is_empty() || self.modes.is_empty() || self.tools.is_empty() {
            return Err(Error::PlanInvalid(
                "ciphers, modes and tools must be nonempty".into(),
            ));
        }
        for c in &self.ciphers {
            if !registry.contains(c) {
                return Err(Error::PlanInvalid(format!(
                    "cipher `{c}` is not registered"
                )));
            }
        }
        for control in [PASS_CONTROL, REJECT_CONTROL] {
            if !registry.contains(control) {
                return Err(Error::PlanInvalid(format!(
                    "control cipher `{control}` is not registered"
                )));
            }
        }
        Ok(())
    }

    /// Planned ciphers followed by any control not already listed.
    pub fn rows(&self) -> Vec<String> {
        let mut rows = Vec::new();
        for c in self
            .ciphers
            .iter()
            .map(String::as_str)
            .chain([PASS_CONTROL, REJECT_CONTROL])
        {
            if !rows.iter().any(|r| r == c) {
                rows.push(c.to_string());
            }
        }
        rows
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum CellStatus {
    Pass,
    Reject,
    Error,
}

impl From<Verdict> for CellStatus {
    fn from(v: Verdict) -> Self {
        match v {
            Verdict::Pass => CellStatus::Pass,
            Verdict::Reject => CellStatus::Reject,
        }
    }
}

impl fmt::Display for CellStatus {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            CellStatus::Pass => "PASS",
            CellStatus::Reject => "REJECT",
            CellStatus::Error => "ERROR",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Cell {
    pub cipher: String,
    pub mode: PmnMode,
    pub tool: Tool,
    pub status: CellStatus,
    /// Tests passed/total, max SAC deviation, or EACirc rejection proportion.
    pub headline: String,
    pub value: Option<f64>,
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportMetadata {
    pub master_seed: u64,
    pub scale: Scale,
    pub battery_roster: usize,
    pub battery_sequences: usize,
    pub battery_sequence_bits: usize,
    pub sac_samples: usize,
    pub sac_tolerance: f64,
    pub eacirc_runs: usize,
    pub eacirc_vector_len: usize,
    pub notes: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Timing {
    pub started_unix: u64,
    pub finished_unix: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub rows: Vec<String>,
    pub modes: Vec<PmnMode>,
    pub tools: Vec<Tool>,
    /// Ordered by row, then mode, then tool.
    pub cells: Vec<Cell>,
    pub calibration_failed: bool,
    pub calibration_issues: Vec<String>,
    pub metadata: ReportMetadata,
    pub timing: Timing,
}

impl ExperimentReport {
    pub fn cell(&self, cipher: &str, mode: PmnMode, tool: Tool) -> Option<&Cell> {
        self.cells
            .iter()
            .find(|c| c.cipher == cipher && c.mode == mode && c.tool == tool)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        Ok(serde_json::from_str(s)?)
    }
}

/// Control-sandwich check: every cell of the pass control must PASS and
/// every cell of the reject control must REJECT.
pub fn calibration_issues(cells: &[Cell]) -> Vec<String> {
    cells
        .iter()
        .filter_map(|c| {
            let want = match c.cipher.as_str() {
                PASS_CONTROL => CellStatus::Pass,
                REJECT_CONTROL => CellStatus::Reject,
                _ => return None,
            };
            (c.status != want).then(|| {
                format!(
                    "{} {} {}: expected {want}, got {}",
                    c.cipher, c.mode, c.tool, c.status
                )
            })
        })
        .collect()
}

fn now_unix() -> u64 {
    SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_secs())
        .unwrap_or(0)
}

fn guarded<T>(f: impl FnOnce() -> Result<T>) -> std::result::Result<T, String> {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(v)) => Ok(v),
        Ok(Err(e)) => Err(e.to_string()),
        Err(panic) => Err(panic
            .downcast_ref::<&str>()
            .map(|s| s.to_string())
            .or_else(|| panic.downcast_ref::<String>().cloned())
            .unwrap_or_else(|| "tool panicked".into())),
    }
}

fn error_cell(cipher: &str, mode: PmnMode, tool: Tool, msg: String) -> Cell {
    Cell {
        cipher: cipher.to_string(),
        mode,
        tool,
        status: CellStatus::Error,
        headline: "ERROR".into(),
        value: None,
        error: Some(msg),
    }
}

fn run_group(
    registry: &Registry,
    profile: &ScaleProfile,
    seed: u64,
    cipher: &str,
    mode: PmnMode,
    tools: &[Tool],
) -> Vec<Cell> {
    // One stream per (cipher, mode), generated only when the battery needs it.
    let stream = tools.contains(&Tool::Battery).then(|| {
        guarded(|| {
            let spec = registry.get(cipher)?.spec().clone();
            let tags = profile.battery.bytes_needed().div_ceil(spec.tag_len);
            generate_stream(registry, &StreamConfig::new(cipher, mode, tags, seed))
        })
    });

    tools
        .iter()
        .map(|&tool| {
            let outcome = match tool {
                Tool::Battery => match stream.as_ref().expect("stream generated for battery") {
                    Err(e) => Err(format!("stream generation failed: {e}")),
                    Ok(s) => guarded(|| {
                        let r = run_battery(&s.bytes, &profile.battery)?;
                        Ok((
                            CellStatus::from(r.verdict),
                            format!("{}/{}", r.tests_passed, r.tests_run),
                            r.tests_passed as f64 / r.tests_run as f64,
                        ))
                    }),
                },
                Tool::Sac => guarded(|| {
                    let aead = registry.get(cipher)?;
                    let config = SacConfig {
                        pmn_mode: mode,
                        ..SacConfig::new(SacField::Plaintext, false, profile.sac_samples, seed)
                    };
                    let m = avalanche_matrix(aead.as_ref(), &config)?;
                    let tol = sac_tolerance(m.samples, m.entries.len(), profile.sac_alpha);
                    let dev = sac_deviation(&m);
                    let status = if sac_pass(&m, tol) {
                        CellStatus::Pass
                    } else {
                        CellStatus::Reject
                    };
                    Ok((status, format!("{dev:.4}"), dev))
                }),
                Tool::Eacirc => guarded(|| {
                    let config = EvolutionConfig {
                        seed,
                        ..profile.eacirc.clone()
                    };
                    let (c, _) =
                        cipher_campaign(registry, cipher, mode, &config, profile.eacirc_runs)?;
                    Ok((
                        CellStatus::from(c.verdict),
                        format!("{:.3}", c.proportion),
                        c.proportion,
                    ))
                }),
            };
            match outcome {
                Ok((status, headline, value)) => Cell {
                    cipher: cipher.to_string(),
                    mode,
                    tool,
                    status,
                    headline,
                    value: Some(value),
                    error: None,
                },
                Err(msg) => error_cell(cipher, mode, tool, msg),
            }
        })
        .collect()
}

pub fn run_experiment(registry: &Registry, plan: &ExperimentPlan) -> Result<ExperimentReport> {
    run_experiment_with(registry, plan, &scale_profile(plan.scale))
}

/// Runs the plan with explicit tool settings instead of its scale's.
pub fn run_experiment_with(
    registry: &Registry,
    plan: &ExperimentPlan,
    profile: &ScaleProfile,
) -> Result<ExperimentReport> {
    plan.validate(registry)?;
    profile.battery.validate()?;
    profile.eacirc.validate()?;
    let started_unix = now_unix();
    let rows = plan.rows();
    let mut tools = plan.tools.clone();
    tools.sort();
    tools.dedup();
    let mut modes = plan.modes.clone();
    modes.dedup();

    let groups: Vec<(&String, PmnMode)> = rows
        .iter()
        .flat_map(|c| modes.iter().map(move |&m| (c, m)))
        .collect();
    let cells: Vec<Cell> = groups
        .par_iter()
        .map(|&(cipher, mode)| run_group(registry, profile, plan.master_seed, cipher, mode, &tools))
        .collect::<Vec<_>>()
        .into_iter()
        .flatten()
        .collect();

    let issues = calibration_issues(&cells);
    let mut notes = vec![
        "battery cells of one cipher and mode share a single tag stream".to_string(),
        "eacirc regenerates the stream for every run under a run-specific key".to_string(),
        "sac flips plaintext bits with the key fixed and the PMN following the cell mode"
            .to_string(),
    ];
    if plan.scale == Scale::Desk {
        notes.push(format!("desk scale: {} eacirc runs", profile.eacirc_runs));
    }
    let eacirc_bytes = profile.eacirc.bytes_per_source();
    notes.push(format!(
        "eacirc consumes {eacirc_bytes} bytes per source per run"
    ));

    Ok(ExperimentReport {
        rows,
        modes,
        tools,
        cells,
        calibration_failed: !issues.is_empty(),
        calibration_issues: issues,
        metadata: ReportMetadata {
            master_seed: plan.master_seed,
            scale: plan.scale,
            battery_roster: ROSTER.len(),
            battery_sequences: profile.battery.seq_count,
            battery_sequence_bits: profile.battery.seq_len,
            sac_samples: profile.sac_samples,
            sac_tolerance: sac_tolerance(profile.sac_samples, 128 * 128, profile.sac_alpha),
            eacirc_runs: profile.eacirc_runs,
            eacirc_vector_len: profile.eacirc.vector_len,
            notes,
        },
        timing: Timing {
            started_unix,
            finished_unix: now_unix(),
        },
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ReportFormat {
    Text,
    Csv,
    Json,
}

impl ReportFormat {
    pub fn extension(self) -> &'static str {
        match self {
            ReportFormat::Text => "txt",
            ReportFormat::Csv => "csv",
            ReportFormat::Json => "json",
        }
    }
}

impl FromStr for ReportFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "text" | "text-grid" | "txt" => Ok(ReportFormat::Text),
            "csv" => Ok(ReportFormat::Csv),
            "json" => Ok(ReportFormat::Json),
            other => Err(Error::Parse(format!("unknown report format `{other}`"))),
        }
    }
}

/// Marker for rejected cells in the text grid.
pub const REJECT_MARK: char = '*';

fn grid_entry(cell: Option<&Cell>) -> String {
    match cell {
        None => "-".into(),
        Some(c) => match c.status {
            CellStatus::Reject => format!("{REJECT_MARK}{}", c.headline),
            CellStatus::Pass => c.headline.clone(),
            CellStatus::Error => "ERROR".into(),
        },
    }
}

fn render_text(report: &ExperimentReport) -> String {
    let mut header = vec!["cipher".to_string()];
    for m in &report.modes {
        for t in &report.tools {
            header.push(format!("{m}/{t}"));
        }
    }
    let mut table = vec![header];
    for row in &report.rows {
        let mut line = vec![row.clone()];
        for &m in &report.modes {
            for &t in &report.tools {
                line.push(grid_entry(report.cell(row, m, t)));
            }
        }
        table.push(line);
    }
    let widths: Vec<usize> = (0..table[0].len())
        .map(|i| table.iter().map(|r| r[i].len()).max().unwrap_or(0))
        .collect();

    let mut out = String::new();
    for line in &table {
        let cols: Vec<String> = line
            .iter()
            .zip(&widths)
            .map(|(s, w)| format!("{s:<w$}"))
            .collect();
        out.push_str(cols.join("  ").trim_end());
        out.push('\n');
    }
    let _ = writeln!(out, "\n{REJECT_MARK} = randomness rejected");
    for c in report
        .cells
        .iter()
        .filter(|c| c.status == CellStatus::Error)
    {
        let _ = writeln!(
            out,
            "ERROR {} {} {}: {}",
            c.cipher,
            c.mode,
            c.tool,
            c.error.as_deref().unwrap_or("")
        );
    }
    if report.calibration_failed {
        let _ = writeln!(out, "CALIBRATION-FAILED");
        for issue in &report.calibration_issues {
            let _ = writeln!(out, "  {issue}");
        }
    } else {
        let _ = writeln!(out, "calibration ok");
    }
    let m = &report.metadata;
    let _ = writeln!(
        out,
        "\nscale {} seed {} | battery {} tests x {} sequences x {} bits | sac {} samples (tol {:.4}) | eacirc {} runs",
        m.scale,
        m.master_seed,
        m.battery_roster,
        m.battery_sequences,
        m.battery_sequence_bits,
        m.sac_samples,
        m.sac_tolerance,
        m.eacirc_runs
    );
    let _ = writeln!(
        out,
        "started {} finished {}",
        report.timing.started_unix, report.timing.finished_unix
    );
    out
}

fn render_csv(report: &ExperimentReport) -> String {
    let mut out = String::from("cipher,mode,tool,status,headline,control,error\n");
    for c in &report.cells {
        let control = c.cipher == PASS_CONTROL || c.cipher == REJECT_CONTROL;
        let error = c.error.as_deref().unwrap_or("").replace('"', "\"\"");
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},\"{}\"",
            c.cipher, c.mode, c.tool, c.status, c.headline, control, error
        );
    }
    out
}

pub fn render_report(report: &ExperimentReport, format: ReportFormat) -> Result<String> {
    Ok(match format {
        ReportFormat::Text => render_text(report),
        ReportFormat::Csv => render_csv(report),
        ReportFormat::Json => report.to_json()?,
    })
}

/// Writes `report.<ext>` for each format into `dir`.
pub fn write_report(
    report: &ExperimentReport,
    dir: &Path,
    formats: &[ReportFormat],
) -> Result<Vec<PathBuf>> {
    std::fs::create_dir_all(dir)?;
    formats
        .iter()
        .map(|&f| {
            let path = dir.join(format!("report.{}", f.extension()));
            std::fs::write(&path, render_report(report, f)?)?;
            Ok(path)
        })
        .collect()
}

/// Verdict counts per tool, for summaries.
pub fn status_counts(report: &ExperimentReport) -> BTreeMap<(Tool, String), usize> {
    let mut counts = BTreeMap::new();
    for c in &report.cells {
        *counts.entry((c.tool, c.status.to_string())).or_insert(0) += 1;
    }
    counts
}
