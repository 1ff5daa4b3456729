//! Output files of an evaluation run: `report.csv` (one row per
//! condition), `frames.csv` (one row per frame and condition) and
//! `config.snapshot` (the resolved configuration and derived seeds).

use std::fs;
use std::io::{Read, Write};
use std::path::Path;

use crate::bench::Stream;
use crate::config::EvalConfig;
use crate::experiments::EvalReport;
use crate::metrics::{conditions, summarize, ConditionRow, FrameOutcome};
use crate::Result;

pub const REPORT_FILE: &str = "report.csv";
pub const FRAMES_FILE: &str = "frames.csv";
pub const SNAPSHOT_FILE: &str = "config.snapshot";

pub fn write_rows<W: Write>(rows: &[ConditionRow], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for r in rows {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_outcomes<W: Write>(frames: &[FrameOutcome], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for f in frames {
        w.serialize(f)?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_rows<R: Read>(input: R) -> Result<Vec<ConditionRow>> {
    let mut r = csv::Reader::from_reader(input);
    Ok(r.deserialize().collect::<std::result::Result<_, _>>()?)
}

pub fn read_outcomes<R: Read>(input: R) -> Result<Vec<FrameOutcome>> {
    let mut r = csv::Reader::from_reader(input);
    Ok(r.deserialize().collect::<std::result::Result<_, _>>()?)
}

/// Rows rebuilt from per-frame outcomes, in order of first appearance.
pub fn recompute_rows(experiment: &str, frames: &[FrameOutcome]) -> Vec<ConditionRow> {
    conditions(frames)
        .iter()
        .map(|c| summarize(experiment, c, frames))
        .collect()
}

pub fn snapshot(config: &EvalConfig, experiment: &str) -> String {
    let mut s = format!("# experiment = {experiment}\n# derived seeds:\n");
    for stream in Stream::ALL {
        s.push_str(&format!("#   {} = {}\n", stream.name(), stream.seed(config.seed)));
    }
    s.push_str(&config.to_toml());
    s
}

pub fn write_report(report: &EvalReport, config: &EvalConfig, dir: &Path) -> Result<()> {
    fs::create_dir_all(dir)?;
    write_rows(&report.rows, fs::File::create(dir.join(REPORT_FILE))?)?;
    write_outcomes(&report.frames, fs::File::create(dir.join(FRAMES_FILE))?)?;
    fs::write(dir.join(SNAPSHOT_FILE), snapshot(config, &report.experiment))?;
    Ok(())
}
