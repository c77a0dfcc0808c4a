use std::io::{BufRead, Write};

use thiserror::Error;

use crate::model::{RunMeta, Trace, TraceRecord, TRACE_FORMAT};

#[derive(Debug, Error)]
pub enum TraceIoError {
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error("line {line}: {source}")]
    Json {
        line: usize,
        #[source]
        source: serde_json::Error,
    },
    #[error("missing header line")]
    MissingHeader,
    #[error("unsupported trace format {0:?}")]
    Format(String),
}

/// Writes the header, then one line per instant.
pub fn write_trace<W: Write>(trace: &Trace, mut out: W) -> Result<(), TraceIoError> {
    let json = |e| TraceIoError::Json { line: 0, source: e };
    serde_json::to_writer(&mut out, &trace.meta).map_err(json)?;
    out.write_all(b"\n")?;
    for record in &trace.records {
        serde_json::to_writer(&mut out, record).map_err(json)?;
        out.write_all(b"\n")?;
    }
    out.flush()?;
    Ok(())
}

pub fn read_trace<R: BufRead>(input: R) -> Result<Trace, TraceIoError> {
    let mut lines = input.lines().enumerate().filter(|(_, l)| {
        l.as_ref().map_or(true, |s| !s.trim().is_empty())
    });
    let (_, header) = lines.next().ok_or(TraceIoError::MissingHeader)?;
    let meta: RunMeta = serde_json::from_str(&header?).map_err(|source| TraceIoError::Json { line: 1, source })?;
    if meta.format != TRACE_FORMAT {
        return Err(TraceIoError::Format(meta.format));
    }
    let mut records = Vec::new();
    for (i, line) in lines {
        let record: TraceRecord =
            serde_json::from_str(&line?).map_err(|source| TraceIoError::Json { line: i + 1, source })?;
        records.push(record);
    }
    Ok(Trace { meta, records })
}
