//! Length-prefixed binary frames for the multi-process pool.
//!
//! ```text
//! frame   = len: u32 LE | payload[len]
//! payload = task_id: u32 LE | stage: u8 | values: f64 LE × n
//! ```
//!
//! Requests carry the task payload, replies the result vector under the
//! same `task_id` and stage. A reply with stage [`FAILURE_STAGE`] reports an
//! evaluation error; its values encode the message as UTF-8 bytes, one per
//! `f64`.

use std::io::{self, Read, Write};

pub const FAILURE_STAGE: u8 = 0xff;
const HEADER: usize = 5;
/// Guards against reading garbage as a huge length.
const MAX_PAYLOAD: usize = 1 << 30;

#[derive(Debug, Clone, PartialEq)]
pub struct Frame {
    pub task_id: u32,
    pub stage: u8,
    pub values: Vec<f64>,
}

#[derive(Debug, thiserror::Error)]
pub enum WireError {
    #[error(transparent)]
    Io(#[from] io::Error),
    #[error("payload of {0} bytes is not 5 + 8n")]
    BadLength(usize),
}

impl Frame {
    pub fn failure(task_id: u32, message: &str) -> Self {
        Self { task_id, stage: FAILURE_STAGE, values: message.bytes().map(f64::from).collect() }
    }

    pub fn is_failure(&self) -> bool {
        self.stage == FAILURE_STAGE
    }

    pub fn failure_message(&self) -> String {
        self.values.iter().map(|v| *v as u8 as char).collect()
    }

    pub fn encode(&self) -> Vec<u8> {
        let len = HEADER + 8 * self.values.len();
        let mut out = Vec::with_capacity(4 + len);
        out.extend_from_slice(&(len as u32).to_le_bytes());
        out.extend_from_slice(&self.task_id.to_le_bytes());
        out.push(self.stage);
        for v in &self.values {
            out.extend_from_slice(&v.to_le_bytes());
        }
        out
    }

    pub fn decode_payload(payload: &[u8]) -> Result<Self, WireError> {
        if payload.len() < HEADER || (payload.len() - HEADER) % 8 != 0 {
            return Err(WireError::BadLength(payload.len()));
        }
        let task_id = u32::from_le_bytes(payload[..4].try_into().expect("4 bytes"));
        let values = payload[HEADER..]
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().expect("8 bytes")))
            .collect();
        Ok(Self { task_id, stage: payload[4], values })
    }
}

pub fn write_frame(w: &mut impl Write, frame: &Frame) -> io::Result<()> {
    w.write_all(&frame.encode())?;
    w.flush()
}

/// Reads one frame; `Ok(None)` on a clean end of stream.
pub fn read_frame(r: &mut impl Read) -> Result<Option<Frame>, WireError> {
    let mut len = [0u8; 4];
    match r.read_exact(&mut len) {
        Ok(()) => {}
        Err(e) if e.kind() == io::ErrorKind::UnexpectedEof => return Ok(None),
        Err(e) => return Err(e.into()),
    }
    let len = u32::from_le_bytes(len) as usize;
    if len > MAX_PAYLOAD {
        return Err(WireError::BadLength(len));
    }
    let mut payload = vec![0u8; len];
    r.read_exact(&mut payload)?;
    Frame::decode_payload(&payload).map(Some)
}
