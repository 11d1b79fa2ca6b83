//! Binary wire format between the two hosts.
//!
//! ```text
//! magic:u8=0xA7 | version:u8=1 | kind:u8 | t_us:u64 LE | payload | crc32:u32 LE
//! ```
//!
//! Payloads: `POSE_INC` (kind 1) and `CALIBRATE` (kind 3) carry seven
//! little-endian f64 values `(p_x, p_y, p_z, q_η, q_x, q_y, q_z)`; `GRIP`
//! (kind 2) carries one state byte. The CRC is IEEE CRC-32 over every
//! preceding byte. On stream transports each frame is preceded by its length
//! as a big-endian u16.

use thiserror::Error;

use crate::math::{PoseIncrement, Quaternion, Vec3};
use crate::semg::GripState;
use crate::smoothing::RobotPose;

pub const MAGIC: u8 = 0xA7;
pub const VERSION: u8 = 1;
pub const HEADER_LEN: usize = 11;
pub const CRC_LEN: usize = 4;
pub const POSE_PAYLOAD_LEN: usize = 7 * 8;
pub const GRIP_PAYLOAD_LEN: usize = 1;
/// Length of the stream prefix preceding every frame.
pub const PREFIX_LEN: usize = 2;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum WireError {
    #[error("bad magic byte {0:#04x}")]
    BadMagic(u8),
    #[error("crc mismatch (expected {expected:#010x}, computed {computed:#010x})")]
    BadCrc { expected: u32, computed: u32 },
    #[error("unknown message kind {0}")]
    UnknownKind(u8),
    #[error("unsupported protocol version {0}")]
    UnsupportedVersion(u8),
    #[error("frame truncated: {got} bytes, need {need}")]
    Truncated { got: usize, need: usize },
    #[error("frame has {0} unexpected trailing bytes")]
    TrailingBytes(usize),
    #[error("invalid payload: {0}")]
    BadPayload(String),
    #[error("{kind:?} expects {expected} payload values, got {got}")]
    PayloadArityMismatch {
        kind: MessageKind,
        expected: usize,
        got: usize,
    },
    #[error("frame of {0} bytes exceeds the length prefix range")]
    FrameTooLong(usize),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum MessageKind {
    PoseInc = 1,
    Grip = 2,
    Calibrate = 3,
}

impl MessageKind {
    pub fn from_u8(v: u8) -> Result<Self, WireError> {
        match v {
            1 => Ok(MessageKind::PoseInc),
            2 => Ok(MessageKind::Grip),
            3 => Ok(MessageKind::Calibrate),
            other => Err(WireError::UnknownKind(other)),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            MessageKind::PoseInc => "pose_inc",
            MessageKind::Grip => "grip",
            MessageKind::Calibrate => "calibrate",
        }
    }

    fn payload_len(self) -> usize {
        match self {
            MessageKind::PoseInc | MessageKind::Calibrate => POSE_PAYLOAD_LEN,
            MessageKind::Grip => GRIP_PAYLOAD_LEN,
        }
    }

    fn arity(self) -> usize {
        match self {
            MessageKind::PoseInc | MessageKind::Calibrate => 7,
            MessageKind::Grip => 1,
        }
    }
}

/// Decoded payload. Quaternion components are kept raw so that decoding is
/// an exact inverse of encoding; receivers validate them on use.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Payload {
    PoseInc { dp: Vec3, dq: [f64; 4] },
    Grip(GripState),
    Calibrate { p: Vec3, q: [f64; 4] },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WireMessage {
    pub t_us: u64,
    pub payload: Payload,
}

impl WireMessage {
    pub fn pose_inc(inc: &PoseIncrement) -> Self {
        Self {
            t_us: inc.t_us,
            payload: Payload::PoseInc {
                dp: inc.dp,
                dq: inc.dq.to_array(),
            },
        }
    }

    pub fn grip(t_us: u64, state: GripState) -> Self {
        Self {
            t_us,
            payload: Payload::Grip(state),
        }
    }

    pub fn calibrate(t_us: u64, pose: &RobotPose) -> Self {
        Self {
            t_us,
            payload: Payload::Calibrate {
                p: pose.p,
                q: pose.q.to_array(),
            },
        }
    }

    pub fn kind(&self) -> MessageKind {
        match self.payload {
            Payload::PoseInc { .. } => MessageKind::PoseInc,
            Payload::Grip(_) => MessageKind::Grip,
            Payload::Calibrate { .. } => MessageKind::Calibrate,
        }
    }

    pub fn encoded_len(&self) -> usize {
        HEADER_LEN + self.kind().payload_len() + CRC_LEN
    }

    pub fn encode(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(self.encoded_len());
        out.push(MAGIC);
        out.push(VERSION);
        out.push(self.kind() as u8);
        out.extend_from_slice(&self.t_us.to_le_bytes());
        match self.payload {
            Payload::PoseInc { dp: p, dq: q } | Payload::Calibrate { p, q } => {
                for v in p.iter().chain(q.iter()) {
                    out.extend_from_slice(&v.to_le_bytes());
                }
            }
            Payload::Grip(state) => out.push(state.as_u8()),
        }
        let crc = crc32fast::hash(&out);
        out.extend_from_slice(&crc.to_le_bytes());
        out
    }

    /// Validated pose increment carried by a `POSE_INC` message.
    pub fn as_pose_increment(&self) -> Option<Result<PoseIncrement, crate::math::MathError>> {
        match self.payload {
            Payload::PoseInc { dp, dq } => {
                Some(Quaternion::from_array(dq).map(|dq| PoseIncrement {
                    t_us: self.t_us,
                    dp,
                    dq,
                }))
            }
            _ => None,
        }
    }
}

/// Encodes a message from its kind and flat payload values.
///
/// `POSE_INC`/`CALIBRATE` take seven values; `GRIP` takes one value that must
/// be exactly 0 or 1.
pub fn encode_message(kind: MessageKind, t_us: u64, values: &[f64]) -> Result<Vec<u8>, WireError> {
    if values.len() != kind.arity() {
        return Err(WireError::PayloadArityMismatch {
            kind,
            expected: kind.arity(),
            got: values.len(),
        });
    }
    let payload = match kind {
        MessageKind::Grip => Payload::Grip(match values[0] {
            0.0 => GripState::Open,
            1.0 => GripState::Closed,
            v => return Err(WireError::BadPayload(format!("grip state {v}"))),
        }),
        MessageKind::PoseInc | MessageKind::Calibrate => {
            let p = [values[0], values[1], values[2]];
            let q = [values[3], values[4], values[5], values[6]];
            if kind == MessageKind::PoseInc {
                Payload::PoseInc { dp: p, dq: q }
            } else {
                Payload::Calibrate { p, q }
            }
        }
    };
    Ok(WireMessage { t_us, payload }.encode())
}

/// Parses one complete frame (without the stream length prefix).
///
/// Magic is checked first and the CRC second, so any corruption of the
/// version, kind, timestamp or payload bytes surfaces as `BadCrc`.
pub fn decode_message(bytes: &[u8]) -> Result<WireMessage, WireError> {
    let min = HEADER_LEN + GRIP_PAYLOAD_LEN + CRC_LEN;
    if bytes.is_empty() {
        return Err(WireError::Truncated { got: 0, need: min });
    }
    if bytes[0] != MAGIC {
        return Err(WireError::BadMagic(bytes[0]));
    }
    if bytes.len() < min {
        return Err(WireError::Truncated {
            got: bytes.len(),
            need: min,
        });
    }
    let body_len = bytes.len() - CRC_LEN;
    let expected = u32::from_le_bytes(read_array(&bytes[body_len..]));
    let computed = crc32fast::hash(&bytes[..body_len]);
    if expected != computed {
        return Err(WireError::BadCrc { expected, computed });
    }
    if bytes[1] != VERSION {
        return Err(WireError::UnsupportedVersion(bytes[1]));
    }
    let kind = MessageKind::from_u8(bytes[2])?;
    let need = HEADER_LEN + kind.payload_len() + CRC_LEN;
    if bytes.len() < need {
        return Err(WireError::Truncated {
            got: bytes.len(),
            need,
        });
    }
    if bytes.len() > need {
        return Err(WireError::TrailingBytes(bytes.len() - need));
    }
    let t_us = u64::from_le_bytes(read_array(&bytes[3..11]));
    let body = &bytes[HEADER_LEN..body_len];
    let payload = match kind {
        MessageKind::Grip => Payload::Grip(
            GripState::try_from(body[0]).map_err(|e| WireError::BadPayload(e.to_string()))?,
        ),
        MessageKind::PoseInc | MessageKind::Calibrate => {
            let v: [f64; 7] =
                std::array::from_fn(|i| f64::from_le_bytes(read_array(&body[i * 8..i * 8 + 8])));
            let p = [v[0], v[1], v[2]];
            let q = [v[3], v[4], v[5], v[6]];
            if kind == MessageKind::PoseInc {
                Payload::PoseInc { dp: p, dq: q }
            } else {
                Payload::Calibrate { p, q }
            }
        }
    };
    Ok(WireMessage { t_us, payload })
}

fn read_array<const N: usize>(bytes: &[u8]) -> [u8; N] {
    let mut out = [0u8; N];
    out.copy_from_slice(&bytes[..N]);
    out
}

/// Prepends the big-endian u16 length prefix used on stream transports.
pub fn frame_with_prefix(frame: &[u8]) -> Result<Vec<u8>, WireError> {
    let len = u16::try_from(frame.len()).map_err(|_| WireError::FrameTooLong(frame.len()))?;
    let mut out = Vec::with_capacity(PREFIX_LEN + frame.len());
    out.extend_from_slice(&len.to_be_bytes());
    out.extend_from_slice(frame);
    Ok(out)
}

/// Reassembles length-prefixed frames from arbitrary stream chunks.
#[derive(Debug, Default, Clone)]
pub struct FrameDecoder {
    buf: Vec<u8>,
}

impl FrameDecoder {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn extend(&mut self, chunk: &[u8]) {
        self.buf.extend_from_slice(chunk);
    }

    /// Bytes received but not yet forming a complete frame.
    pub fn pending(&self) -> usize {
        self.buf.len()
    }

    /// Next complete raw frame, if one is fully buffered.
    pub fn next_frame(&mut self) -> Option<Vec<u8>> {
        if self.buf.len() < PREFIX_LEN {
            return None;
        }
        let len = u16::from_be_bytes([self.buf[0], self.buf[1]]) as usize;
        if self.buf.len() < PREFIX_LEN + len {
            return None;
        }
        let frame = self.buf[PREFIX_LEN..PREFIX_LEN + len].to_vec();
        self.buf.drain(..PREFIX_LEN + len);
        Some(frame)
    }
}
