//! Output files: CSV (default) or JSON variants, plus the run report.

use std::fs;
use std::path::Path;

use serde::Serialize;

use epimpc_core::analytics::Timeline;
use epimpc_core::LocationHistogram;

use crate::config::WorldConfig;
use crate::error::Result;
use crate::pipelines::{DensityRoundOutcome, NotificationRecord};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OutputFormat {
    Csv,
    Json,
}

/// Policy echo plus any warnings the run surfaced (e.g. a degenerate index
/// list width of 1, which gives the aggregation servers the exact cell).
#[derive(Debug, Clone, Serialize)]
pub struct PolicyReport {
    pub threshold_t: u64,
    pub min_set_size_s: usize,
    pub m_bar: u32,
    pub warnings: Vec<String>,
}

#[derive(Debug, Clone, Serialize)]
pub struct WorldSummary {
    pub citizens: u32,
    pub participating: u32,
    pub epochs: u64,
    pub contact_events: usize,
    pub infection_events: usize,
    pub reported: usize,
}

#[derive(Debug, Clone, Serialize)]
pub struct DensitySummary {
    pub rounds: usize,
    pub all_rounds_match_oracle: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct TracingSummary {
    pub suggestion: u8,
    pub comparisons: usize,
    pub notified: usize,
    pub refused: usize,
}

#[derive(Debug, Clone, Serialize)]
pub struct AnalyticsSummary {
    pub suggestion: u8,
    pub attach: String,
    pub total_exposure_count: u64,
    pub late_uploads_in_open_bucket: bool,
    pub deferred_sessions: Vec<u64>,
}

/// The machine-readable run summary written as `report.json`.
#[derive(Debug, Clone, Serialize)]
pub struct RunReport {
    pub seed: u64,
    pub config: WorldConfig,
    pub policy: PolicyReport,
    pub world: WorldSummary,
    pub density: DensitySummary,
    pub tracing: TracingSummary,
    pub analytics: AnalyticsSummary,
}

pub fn policy_report(cfg: &WorldConfig) -> PolicyReport {
    let mut warnings = Vec::new();
    if cfg.m_bar() == 1 {
        warnings.push(
            "m_bar = 1: the index list is exactly the citizen's cell; density rounds give \
             both servers the true location"
                .to_string(),
        );
    }
    PolicyReport {
        threshold_t: cfg.threshold_t,
        min_set_size_s: cfg.min_set_size_s,
        m_bar: cfg.m_bar(),
        warnings,
    }
}

fn write(path: &Path, contents: &str) -> Result<()> {
    if let Some(parent) = path.parent() {
        fs::create_dir_all(parent)?;
    }
    fs::write(path, contents)?;
    Ok(())
}

pub fn write_density(
    dir: &Path,
    rounds: &[DensityRoundOutcome],
    format: OutputFormat,
) -> Result<()> {
    match format {
        OutputFormat::Csv => {
            let mut out = String::from("round,cell,count\n");
            for outcome in rounds {
                for (slot, count) in outcome.histogram.counts().iter().enumerate() {
                    out.push_str(&format!("{},{},{}\n", outcome.round, slot + 1, count));
                }
            }
            write(&dir.join("density.csv"), &out)
        }
        OutputFormat::Json => {
            #[derive(Serialize)]
            struct Row {
                round: u64,
                epoch: u64,
                counts: Vec<u64>,
            }
            let rows: Vec<Row> = rounds
                .iter()
                .map(|o| Row {
                    round: o.round,
                    epoch: o.epoch,
                    counts: o.histogram.counts().to_vec(),
                })
                .collect();
            write(&dir.join("density.json"), &serde_json::to_string_pretty(&rows)?)
        }
    }
}

pub fn write_notifications(
    dir: &Path,
    records: &[NotificationRecord],
    format: OutputFormat,
) -> Result<()> {
    match format {
        OutputFormat::Csv => {
            let mut out = String::from("epoch,citizen,suggestion,kind,value\n");
            for r in records {
                let value = r.value.map(|v| v.to_string()).unwrap_or_default();
                out.push_str(&format!(
                    "{},{},{},{},{}\n",
                    r.epoch, r.citizen, r.suggestion, r.kind, value
                ));
            }
            write(&dir.join("notifications.csv"), &out)
        }
        OutputFormat::Json => {
            #[derive(Serialize)]
            struct Row<'a> {
                epoch: u64,
                citizen: u32,
                suggestion: u8,
                kind: &'a str,
                value: Option<u64>,
            }
            let rows: Vec<Row> = records
                .iter()
                .map(|r| Row {
                    epoch: r.epoch,
                    citizen: r.citizen,
                    suggestion: r.suggestion,
                    kind: &r.kind,
                    value: r.value,
                })
                .collect();
            write(
                &dir.join("notifications.json"),
                &serde_json::to_string_pretty(&rows)?,
            )
        }
    }
}

pub fn write_histogram(
    dir: &Path,
    histogram: &LocationHistogram,
    format: OutputFormat,
) -> Result<()> {
    match format {
        OutputFormat::Csv => {
            let mut out = String::from("cell,count\n");
            for (slot, count) in histogram.counts().iter().enumerate() {
                out.push_str(&format!("{},{}\n", slot + 1, count));
            }
            write(&dir.join("infection_histogram.csv"), &out)
        }
        OutputFormat::Json => write(
            &dir.join("infection_histogram.json"),
            &serde_json::to_string_pretty(histogram.counts())?,
        ),
    }
}

pub fn write_timeline(dir: &Path, timeline: &Timeline, format: OutputFormat) -> Result<()> {
    match format {
        OutputFormat::Csv => {
            let mut out = String::from("bucket,cell,count\n");
            for (boundary, histogram) in &timeline.buckets {
                for (slot, count) in histogram.counts().iter().enumerate() {
                    out.push_str(&format!("{},{},{}\n", boundary, slot + 1, count));
                }
            }
            if let Some(open) = &timeline.open_bucket {
                for (slot, count) in open.counts().iter().enumerate() {
                    out.push_str(&format!("open,{},{}\n", slot + 1, count));
                }
            }
            write(&dir.join("timeline.csv"), &out)
        }
        OutputFormat::Json => {
            #[derive(Serialize)]
            struct Row {
                bucket: String,
                counts: Vec<u64>,
            }
            let mut rows: Vec<Row> = timeline
                .buckets
                .iter()
                .map(|(boundary, h)| Row {
                    bucket: boundary.to_string(),
                    counts: h.counts().to_vec(),
                })
                .collect();
            if let Some(open) = &timeline.open_bucket {
                rows.push(Row {
                    bucket: "open".to_string(),
                    counts: open.counts().to_vec(),
                });
            }
            write(&dir.join("timeline.json"), &serde_json::to_string_pretty(&rows)?)
        }
    }
}

pub fn write_transcript(dir: &Path, log: &str) -> Result<()> {
    write(&dir.join("transcript.log"), log)
}

pub fn write_report(dir: &Path, report: &RunReport) -> Result<()> {
    write(&dir.join("report.json"), &serde_json::to_string_pretty(report)?)
}
