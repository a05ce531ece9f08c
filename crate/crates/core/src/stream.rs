//! Line-delimited observation stream: one JSON frame per line.

use std::io::{BufRead, Write};

use nalgebra::Vector3;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::semantic_map::{Affordance, InstanceId, LabeledObservation};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PointRecord {
    pub p: [f64; 3],
    pub n: [f64; 3],
    pub instance: InstanceId,
    pub category: String,
    #[serde(default)]
    pub affordance: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ObservationFrame {
    pub frame_id: u64,
    pub points: Vec<PointRecord>,
}

#[derive(Debug, Error)]
pub enum StreamError {
    #[error("line {line}: {source}")]
    Syntax {
        line: usize,
        #[source]
        source: serde_json::Error,
    },
    #[error("line {line}: {message}")]
    Malformed { line: usize, message: String },
    #[error("read failed: {0}")]
    Io(#[from] std::io::Error),
}

impl ObservationFrame {
    pub fn from_observations(frame_id: u64, observations: &[LabeledObservation]) -> Self {
        let points = observations
            .iter()
            .map(|o| PointRecord {
                p: [o.position.x, o.position.y, o.position.z],
                n: [o.normal.x, o.normal.y, o.normal.z],
                instance: o.instance_id,
                category: o.category.clone(),
                affordance: o.affordance.map(|a| a.as_str().to_string()),
            })
            .collect();
        Self { frame_id, points }
    }

    /// Converts to observations, rejecting unknown affordance tokens.
    pub fn observations(&self) -> Result<Vec<LabeledObservation>, String> {
        self.points
            .iter()
            .map(|r| {
                let affordance = r
                    .affordance
                    .as_deref()
                    .map(str::parse::<Affordance>)
                    .transpose()
                    .map_err(|e| e.to_string())?;
                Ok(LabeledObservation {
                    position: Vector3::from(r.p),
                    normal: Vector3::from(r.n),
                    instance_id: r.instance,
                    category: r.category.clone(),
                    affordance,
                })
            })
            .collect()
    }
}

/// Lazily yields frames; blank lines are skipped.
pub struct StreamReader<R> {
    inner: R,
    line: usize,
    buf: String,
}

impl<R: BufRead> StreamReader<R> {
    pub fn new(inner: R) -> Self {
        Self {
            inner,
            line: 0,
            buf: String::new(),
        }
    }
}

impl<R: BufRead> Iterator for StreamReader<R> {
    type Item = Result<(ObservationFrame, Vec<LabeledObservation>), StreamError>;

    fn next(&mut self) -> Option<Self::Item> {
        loop {
            self.buf.clear();
            match self.inner.read_line(&mut self.buf) {
                Ok(0) => return None,
                Ok(_) => {}
                Err(e) => return Some(Err(e.into())),
            }
            self.line += 1;
            let text = self.buf.trim();
            if text.is_empty() {
                continue;
            }
            let line = self.line;
            let frame: ObservationFrame = match serde_json::from_str(text) {
                Ok(f) => f,
                Err(source) => return Some(Err(StreamError::Syntax { line, source })),
            };
            return Some(
                frame
                    .observations()
                    .map(|obs| (frame, obs))
                    .map_err(|message| StreamError::Malformed { line, message }),
            );
        }
    }
}

pub fn write_frames<W: Write>(mut out: W, frames: &[ObservationFrame]) -> std::io::Result<()> {
    for f in frames {
        serde_json::to_writer(&mut out, f)?;
        out.write_all(b"\n")?;
    }
    Ok(())
}
