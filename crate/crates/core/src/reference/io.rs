//! Text serialization of reference datasets.
//!
//! ```text
//! #refdata v1 b=<int> n=<int> sigma=<real> res=<real> margin=<real> domain=<processed|raw> grid=<min:step:count,...|none>
//! #anchor <b reals>                      (optional raw-count mean at pose 1)
//! q_1 .. q_n | mean_0 .. mean_{b-1} | spread_0 .. spread_{b-1} | count
//! ```
//!
//! Reals are written with 17 significant digits, so a save/load round trip
//! is bit-exact.

use std::io::{BufRead, Write};

use super::{GridAxis, GridSpec, JointState, ReferenceDataset, ReferencePose, SignalDomain};
use crate::error::{Error, Result};
use crate::histogram::KdeConfig;

const MAGIC: &str = "#refdata";
const VERSION: &str = "v1";

pub(crate) fn fmt_real(x: f64) -> String {
    format!("{x:.16e}")
}

fn join(values: &[f64]) -> String {
    values.iter().map(|&v| fmt_real(v)).collect::<Vec<_>>().join(" ")
}

pub fn write_dataset<W: Write>(ds: &ReferenceDataset, mut out: W) -> Result<()> {
    let grid = match &ds.grid {
        Some(g) => g
            .axes
            .iter()
            .map(|a| format!("{}:{}:{}", fmt_real(a.min), fmt_real(a.step), a.count))
            .collect::<Vec<_>>()
            .join(","),
        None => "none".to_string(),
    };
    writeln!(
        out,
        "{MAGIC} {VERSION} b={} n={} sigma={} res={} margin={} domain={} grid={}",
        ds.bins,
        ds.dof,
        fmt_real(ds.kde.bandwidth),
        fmt_real(ds.kde.search_resolution),
        fmt_real(ds.kde.search_margin),
        ds.domain.as_str(),
        grid
    )?;
    if let Some(anchor) = &ds.calibration_anchor {
        writeln!(out, "#anchor {}", join(anchor))?;
    }
    for p in &ds.poses {
        writeln!(
            out,
            "{} | {} | {} | {}",
            join(p.q.angles()),
            join(&p.mean),
            join(&p.spread),
            p.sample_count
        )?;
    }
    out.flush()?;
    Ok(())
}

fn parse_reals(field: &str, line: usize) -> Result<Vec<f64>> {
    field
        .split_whitespace()
        .map(|t| {
            t.parse::<f64>()
                .map_err(|e| Error::parse(line, format!("bad number `{t}`: {e}")))
        })
        .collect()
}

fn parse_grid(spec: &str, line: usize) -> Result<Option<GridSpec>> {
    if spec == "none" {
        return Ok(None);
    }
    let axes = spec
        .split(',')
        .map(|axis| {
            let parts: Vec<&str> = axis.split(':').collect();
            if parts.len() != 3 {
                return Err(Error::parse(line, format!("bad grid axis `{axis}`")));
            }
            let num = |s: &str| {
                s.parse::<f64>()
                    .map_err(|e| Error::parse(line, format!("bad grid value `{s}`: {e}")))
            };
            Ok(GridAxis {
                min: num(parts[0])?,
                step: num(parts[1])?,
                count: parts[2]
                    .parse()
                    .map_err(|e| Error::parse(line, format!("bad grid count: {e}")))?,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(Some(GridSpec::new(axes)))
}

pub fn read_dataset<R: BufRead>(input: R) -> Result<ReferenceDataset> {
    let mut lines = input.lines().enumerate();
    let (_, header) = lines
        .next()
        .ok_or_else(|| Error::parse(1, "empty reference file"))?;
    let header = header?;
    let mut tokens = header.split_whitespace();
    if tokens.next() != Some(MAGIC) || tokens.next() != Some(VERSION) {
        return Err(Error::parse(1, "expected `#refdata v1` header"));
    }
    let mut bins = None;
    let mut dof = None;
    let mut kde = KdeConfig::default();
    let mut domain = SignalDomain::Processed;
    let mut grid = None;
    for tok in tokens {
        let (key, value) = tok
            .split_once('=')
            .ok_or_else(|| Error::parse(1, format!("bad header field `{tok}`")))?;
        let real = || {
            value
                .parse::<f64>()
                .map_err(|e| Error::parse(1, format!("bad `{key}`: {e}")))
        };
        let int = || {
            value
                .parse::<usize>()
                .map_err(|e| Error::parse(1, format!("bad `{key}`: {e}")))
        };
        match key {
            "b" => bins = Some(int()?),
            "n" => dof = Some(int()?),
            "sigma" => kde.bandwidth = real()?,
            "res" => kde.search_resolution = real()?,
            "margin" => kde.search_margin = real()?,
            "domain" => domain = value.parse()?,
            "grid" => grid = parse_grid(value, 1)?,
            // Unknown keys are tolerated for forward compatibility.
            _ => {}
        }
    }
    let bins = bins.ok_or_else(|| Error::parse(1, "header lacks `b=`"))?;
    let dof = dof.ok_or_else(|| Error::parse(1, "header lacks `n=`"))?;

    let mut anchor = None;
    let mut poses = Vec::new();
    for (idx, line) in lines {
        let line_no = idx + 1;
        let line = line?;
        let trimmed = line.trim();
        if trimmed.is_empty() {
            continue;
        }
        if let Some(rest) = trimmed.strip_prefix("#anchor") {
            let values = parse_reals(rest, line_no)?;
            if values.len() != bins {
                return Err(Error::parse(line_no, "anchor length differs from b"));
            }
            anchor = Some(values);
            continue;
        }
        if trimmed.starts_with('#') {
            continue;
        }
        let fields: Vec<&str> = trimmed.split('|').collect();
        if fields.len() != 4 {
            return Err(Error::parse(line_no, "expected 4 `|`-separated fields"));
        }
        let q = parse_reals(fields[0], line_no)?;
        let mean = parse_reals(fields[1], line_no)?;
        let spread = parse_reals(fields[2], line_no)?;
        let count = fields[3]
            .trim()
            .parse::<usize>()
            .map_err(|e| Error::parse(line_no, format!("bad sample count: {e}")))?;
        if q.len() != dof || mean.len() != bins || spread.len() != bins {
            return Err(Error::parse(line_no, "record dimensions differ from header"));
        }
        poses.push(ReferencePose {
            q: JointState::new(q).map_err(|e| Error::parse(line_no, e.to_string()))?,
            mean,
            spread,
            sample_count: count,
        });
    }
    let ds = ReferenceDataset::new(poses, kde, domain, grid)?;
    match anchor {
        Some(a) => ds.with_calibration_anchor(a),
        None => Ok(ds),
    }
}
