//! File formats: batch summaries (CSV and JSON), the per-episode outcome
//! index, NDJSON episode traces and scenario files. Layouts are described
//! in `docs/formats.md`.

use std::fs;
use std::io::{BufRead, BufReader, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::episode::{EpisodeRecord, Outcome, TickRecord};
use super::metrics::Summary;
use crate::control::ControllerKind;
use crate::error::IoError;
use crate::world::{Family, WorldState};

pub const SCHEMA_VERSION: u32 = 1;

pub const SUMMARY_CSV_HEADER: [&str; 9] = [
    "controller",
    "family",
    "mt1_succ",
    "mt1_unsucc",
    "mt2_mean",
    "mt2_std",
    "mt3",
    "mt4_mean",
    "mt4_std",
];

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> IoError + '_ {
    move |source| IoError::Io {
        path: path.display().to_string(),
        source,
    }
}

/// Writes through a sibling temporary file and renames it into place, so
/// a failed write never leaves a truncated file at `path`.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<(), IoError> {
    let mut tmp: PathBuf = path.to_path_buf();
    let name = path.file_name().map(|n| n.to_string_lossy().into_owned()).unwrap_or_default();
    tmp.set_file_name(format!(".{name}.partial"));
    fs::write(&tmp, bytes).map_err(io_err(&tmp))?;
    fs::rename(&tmp, path).map_err(|e| {
        let _ = fs::remove_file(&tmp);
        io_err(path)(e)
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct SummaryRow {
    controller: ControllerKind,
    family: Family,
    mt1_succ: u64,
    mt1_unsucc: u64,
    mt2_mean: f64,
    mt2_std: f64,
    mt3: u64,
    mt4_mean: f64,
    mt4_std: f64,
}

pub fn summary_csv_string(summaries: &[Summary]) -> Result<String, IoError> {
    let mut w = csv::Writer::from_writer(Vec::new());
    for s in summaries {
        w.serialize(SummaryRow {
            controller: s.controller,
            family: s.family,
            mt1_succ: s.mt1_succ,
            mt1_unsucc: s.mt1_unsucc,
            mt2_mean: s.mt2_mean,
            mt2_std: s.mt2_std,
            mt3: s.mt3,
            mt4_mean: s.mt4_mean,
            mt4_std: s.mt4_std,
        })?;
    }
    if summaries.is_empty() {
        w.write_record(SUMMARY_CSV_HEADER)?;
    }
    let bytes = w.into_inner().map_err(|e| IoError::Io {
        path: "<memory>".into(),
        source: e.into_error(),
    })?;
    Ok(String::from_utf8_lossy(&bytes).into_owned())
}

/// The CSV columns of one summary row, as read back.
#[derive(Debug, Clone, PartialEq)]
pub struct SummaryCsvRow {
    pub controller: ControllerKind,
    pub family: Family,
    pub mt1_succ: u64,
    pub mt1_unsucc: u64,
    pub mt2_mean: f64,
    pub mt2_std: f64,
    pub mt3: u64,
    pub mt4_mean: f64,
    pub mt4_std: f64,
}

pub fn read_summary_csv(path: &Path) -> Result<Vec<SummaryCsvRow>, IoError> {
    let text = fs::read_to_string(path).map_err(io_err(path))?;
    let mut r = csv::Reader::from_reader(text.as_bytes());
    let header: Vec<String> = r.headers()?.iter().map(str::to_string).collect();
    if header != SUMMARY_CSV_HEADER {
        return Err(IoError::Io {
            path: path.display().to_string(),
            source: std::io::Error::new(std::io::ErrorKind::InvalidData, format!("unexpected header {header:?}")),
        });
    }
    r.deserialize::<SummaryRow>()
        .map(|row| {
            let s = row?;
            Ok(SummaryCsvRow {
                controller: s.controller,
                family: s.family,
                mt1_succ: s.mt1_succ,
                mt1_unsucc: s.mt1_unsucc,
                mt2_mean: s.mt2_mean,
                mt2_std: s.mt2_std,
                mt3: s.mt3,
                mt4_mean: s.mt4_mean,
                mt4_std: s.mt4_std,
            })
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SummaryDocument {
    pub schema_version: u32,
    pub summaries: Vec<Summary>,
}

pub fn summary_json_string(summaries: &[Summary]) -> Result<String, IoError> {
    let doc = SummaryDocument {
        schema_version: SCHEMA_VERSION,
        summaries: summaries.to_vec(),
    };
    Ok(serde_json::to_string_pretty(&doc)? + "\n")
}

pub fn read_summary_json(path: &Path) -> Result<SummaryDocument, IoError> {
    let text = fs::read_to_string(path).map_err(io_err(path))?;
    Ok(serde_json::from_str(&text)?)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpisodeIndexRow {
    pub controller: ControllerKind,
    pub family: Family,
    pub seed: u64,
    pub outcome: String,
    pub ticks: u64,
    pub duration: f64,
    pub successful_yields: u64,
    pub unsuccessful_yields: u64,
    pub emergency_time: f64,
    pub diagnostic: String,
}

pub fn episode_index_csv_string(records: &[EpisodeRecord]) -> Result<String, IoError> {
    let mut w = csv::Writer::from_writer(Vec::new());
    for r in records {
        w.serialize(EpisodeIndexRow {
            controller: r.controller,
            family: r.family,
            seed: r.seed,
            outcome: r.outcome.label().to_string(),
            ticks: r.ticks,
            duration: r.duration,
            successful_yields: r.successful_yields,
            unsuccessful_yields: r.unsuccessful_yields,
            emergency_time: r.emergency_time,
            diagnostic: match &r.outcome {
                Outcome::Fault { diagnostic } => diagnostic.clone(),
                _ => String::new(),
            },
        })?;
    }
    let bytes = w.into_inner().map_err(|e| IoError::Io {
        path: "<memory>".into(),
        source: e.into_error(),
    })?;
    Ok(String::from_utf8_lossy(&bytes).into_owned())
}

pub fn read_episode_index(path: &Path) -> Result<Vec<EpisodeIndexRow>, IoError> {
    let text = fs::read_to_string(path).map_err(io_err(path))?;
    csv::Reader::from_reader(text.as_bytes())
        .deserialize()
        .map(|r| r.map_err(IoError::from))
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceHeader {
    pub schema_version: u32,
    pub family: Family,
    pub seed: u64,
    pub controller: ControllerKind,
    pub dt: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceFooter {
    pub outcome: Outcome,
    pub ticks: u64,
    pub duration: f64,
    pub successful_yields: u64,
    pub unsuccessful_yields: u64,
    pub emergency_time: f64,
}

/// One NDJSON line.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "record", rename_all = "lowercase")]
pub enum TraceLine {
    Header(TraceHeader),
    Tick(Box<TickRecord>),
    Footer(TraceFooter),
}

#[derive(Debug, Clone, PartialEq)]
pub struct Trace {
    pub header: TraceHeader,
    pub ticks: Vec<TickRecord>,
    pub footer: TraceFooter,
}

pub fn trace_ndjson_string(record: &EpisodeRecord) -> Result<String, IoError> {
    let mut out = Vec::new();
    let mut line = |l: &TraceLine| -> Result<(), IoError> {
        serde_json::to_writer(&mut out, l)?;
        out.push(b'\n');
        Ok(())
    };
    line(&TraceLine::Header(TraceHeader {
        schema_version: SCHEMA_VERSION,
        family: record.family,
        seed: record.seed,
        controller: record.controller,
        dt: record.dt,
    }))?;
    for t in record.trace.iter().flatten() {
        line(&TraceLine::Tick(Box::new(t.clone())))?;
    }
    line(&TraceLine::Footer(TraceFooter {
        outcome: record.outcome.clone(),
        ticks: record.ticks,
        duration: record.duration,
        successful_yields: record.successful_yields,
        unsuccessful_yields: record.unsuccessful_yields,
        emergency_time: record.emergency_time,
    }))?;
    Ok(String::from_utf8_lossy(&out).into_owned())
}

fn invalid_data(path: &Path, msg: String) -> IoError {
    IoError::Io {
        path: path.display().to_string(),
        source: std::io::Error::new(std::io::ErrorKind::InvalidData, msg),
    }
}

pub fn read_trace(path: &Path) -> Result<Trace, IoError> {
    let file = fs::File::open(path).map_err(io_err(path))?;
    let mut header = None;
    let mut footer = None;
    let mut ticks = Vec::new();
    for (n, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(io_err(path))?;
        if line.trim().is_empty() {
            continue;
        }
        match serde_json::from_str::<TraceLine>(&line)? {
            TraceLine::Header(h) if n == 0 => {
                if h.schema_version != SCHEMA_VERSION {
                    return Err(invalid_data(path, format!("schema version {} (expected {SCHEMA_VERSION})", h.schema_version)));
                }
                header = Some(h);
            }
            TraceLine::Tick(t) if header.is_some() && footer.is_none() => ticks.push(*t),
            TraceLine::Footer(f) if header.is_some() && footer.is_none() => footer = Some(f),
            _ => return Err(invalid_data(path, format!("unexpected record on line {}", n + 1))),
        }
    }
    match (header, footer) {
        (Some(header), Some(footer)) => Ok(Trace { header, ticks, footer }),
        _ => Err(invalid_data(path, "trace needs a header and a footer line".into())),
    }
}

/// An episode record without its trace, as written by single runs.
pub fn episode_json_string(record: &EpisodeRecord) -> Result<String, IoError> {
    let mut r = record.clone();
    r.trace = None;
    Ok(serde_json::to_string_pretty(&r)? + "\n")
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioDocument {
    pub schema_version: u32,
    pub world: WorldState,
}

pub fn scenario_json_string(world: &WorldState) -> Result<String, IoError> {
    let doc = ScenarioDocument {
        schema_version: SCHEMA_VERSION,
        world: world.clone(),
    };
    Ok(serde_json::to_string_pretty(&doc)? + "\n")
}

pub fn read_scenario(path: &Path) -> Result<WorldState, IoError> {
    let text = fs::read_to_string(path).map_err(io_err(path))?;
    let doc: ScenarioDocument = serde_json::from_str(&text)?;
    if doc.schema_version != SCHEMA_VERSION {
        return Err(invalid_data(path, format!("schema version {} (expected {SCHEMA_VERSION})", doc.schema_version)));
    }
    Ok(doc.world)
}

/// Writes `contents` to several files, all or nothing as far as the file
/// system allows: everything is staged first, then renamed into place.
pub fn write_all_atomic(files: &[(PathBuf, String)]) -> Result<(), IoError> {
    let mut staged = Vec::new();
    for (path, contents) in files {
        let name = path.file_name().map(|n| n.to_string_lossy().into_owned()).unwrap_or_default();
        let tmp = path.with_file_name(format!(".{name}.partial"));
        let res = fs::File::create(&tmp).and_then(|mut f| f.write_all(contents.as_bytes()));
        if let Err(e) = res {
            for t in &staged {
                let _ = fs::remove_file(t);
            }
            let _ = fs::remove_file(&tmp);
            return Err(io_err(&tmp)(e));
        }
        staged.push(tmp);
    }
    for ((path, _), tmp) in files.iter().zip(&staged) {
        fs::rename(tmp, path).map_err(io_err(path))?;
    }
    Ok(())
}
