//! Frame files: one frame per CSV row, `frame_id,q_1..q_n,bin_0..bin_{b-1}`.
//! The header line declares `n` and `b`, which are fixed per file.

use std::io::{Read, Write};

use crate::error::{Error, Result};
use crate::histogram::TransientHistogram;
use crate::reference::JointState;

#[derive(Debug, Clone, PartialEq)]
pub struct FrameRecord {
    pub id: String,
    pub q: JointState,
    pub histogram: TransientHistogram,
}

pub fn frame_header(dof: usize, bins: usize) -> Vec<String> {
    std::iter::once("frame_id".to_string())
        .chain((1..=dof).map(|k| format!("q_{k}")))
        .chain((0..bins).map(|i| format!("bin_{i}")))
        .collect()
}

pub fn write_frames<W: Write>(frames: &[FrameRecord], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let (dof, bins) = match frames.first() {
        Some(f) => (f.q.dof(), f.histogram.bin_count()),
        None => return Ok(()),
    };
    w.write_record(frame_header(dof, bins))?;
    for f in frames {
        if f.q.dof() != dof || f.histogram.bin_count() != bins {
            return Err(Error::InvalidConfig(format!(
                "frame `{}` does not match the file layout",
                f.id
            )));
        }
        let mut row = Vec::with_capacity(1 + dof + bins);
        row.push(f.id.clone());
        row.extend(f.q.angles().iter().map(|&a| crate::reference::fmt_real(a)));
        // Counts are usually integral; shortest round-trip form keeps files small.
        row.extend(f.histogram.counts().iter().map(|c| c.to_string()));
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_frames<R: Read>(input: R) -> Result<Vec<FrameRecord>> {
    let mut r = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(input);
    let header = r.headers()?.clone();
    if header.get(0) != Some("frame_id") {
        return Err(Error::parse(1, "first column must be `frame_id`"));
    }
    let dof = header.iter().filter(|h| h.starts_with("q_")).count();
    let bins = header.iter().filter(|h| h.starts_with("bin_")).count();
    if dof == 0 || bins == 0 || header.len() != 1 + dof + bins {
        return Err(Error::parse(1, "header must be frame_id, q_1..q_n, bin_0..bin_{b-1}"));
    }
    let expected = frame_header(dof, bins);
    if header.iter().zip(&expected).any(|(a, b)| a != b) {
        return Err(Error::parse(1, "header columns are out of order"));
    }
    let mut frames = Vec::new();
    for (idx, rec) in r.records().enumerate() {
        let line = idx + 2;
        let rec = rec?;
        let num = |s: &str| {
            s.parse::<f64>()
                .map_err(|e| Error::parse(line, format!("bad number `{s}`: {e}")))
        };
        let q = (1..=dof).map(|k| num(&rec[k])).collect::<Result<Vec<_>>>()?;
        let counts = (1 + dof..1 + dof + bins)
            .map(|k| num(&rec[k]))
            .collect::<Result<Vec<_>>>()?;
        frames.push(FrameRecord {
            id: rec[0].to_string(),
            q: JointState::new(q).map_err(|e| Error::parse(line, e.to_string()))?,
            histogram: TransientHistogram::new(counts)
                .map_err(|e| Error::parse(line, e.to_string()))?,
        });
    }
    Ok(frames)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip() {
        let frames = vec![
            FrameRecord {
                id: "a".into(),
                q: JointState::new(vec![0.1, -0.7]).unwrap(),
                histogram: TransientHistogram::new(vec![1.0, 2.0, 30.0]).unwrap(),
            },
            FrameRecord {
                id: "b".into(),
                q: JointState::new(vec![std::f64::consts::PI / 12.0, 0.0]).unwrap(),
                histogram: TransientHistogram::new(vec![0.0, 2.5, 3.0]).unwrap(),
            },
        ];
        let mut buf = Vec::new();
        write_frames(&frames, &mut buf).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.starts_with("frame_id,q_1,q_2,bin_0,bin_1,bin_2\n"));
        assert_eq!(read_frames(buf.as_slice()).unwrap(), frames);
    }

    #[test]
    fn rejects_negative_counts() {
        let text = "frame_id,q_1,bin_0,bin_1\nx,0.0,1,-2\n";
        assert!(matches!(
            read_frames(text.as_bytes()),
            Err(Error::Parse { line: 2, .. })
        ));
    }

    #[test]
    fn rejects_bad_header() {
        assert!(read_frames("id,q_1,bin_0\n".as_bytes()).is_err());
        assert!(read_frames("frame_id,bin_0,q_1\n".as_bytes()).is_err());
    }
}
