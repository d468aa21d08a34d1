//! Wire codec for the handshake messages and the route-flood beacon.
//!
//! Frame layout (all integers big-endian):
//!
//! ```text
//! tag:u8 | sender:u8 (M1, M3, M5, RouteFlood only) | len:u16 | payload[len]
//! ```
//!
//! | tag  | message    | payload                                            |
//! |------|------------|----------------------------------------------------|
//! | 0x01 | M1         | E(K, id ‖ V^p)            = 1 + W/8 + 8 bytes       |
//! | 0x02 | M2         | E(K, 0 ‖ V^q ‖ RI:u16) ‖ E(K_CS, (V^p)^q)           |
//! |      |            |                           = (1 + W/8 + 2 + 8) + (W/8 + 8) |
//! | 0x03 | M3         | E(K, id ‖ window)         = 1 + ceil(I/8) + 8 bytes |
//! | 0x04 | M4         | K_CS in clear             = kcs_bits/8 bytes        |
//! | 0x05 | M5         | E(K, id ‖ data)           = 1 + len(data) + 8 bytes |
//! | 0x10 | RouteFlood | hop_count:u8                                        |
//!
//! W is the modulus width and I the revealed window width.

use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::crypto::{CommitKey, CommitmentEnvelope, ProtocolParams, TAG_LEN};

pub type NodeId = u8;

/// The sink is always node 0.
pub const SINK_ID: NodeId = 0;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[repr(u8)]
pub enum MessageTag {
    M1 = 0x01,
    M2 = 0x02,
    M3 = 0x03,
    M4 = 0x04,
    M5 = 0x05,
    RouteFlood = 0x10,
}

impl MessageTag {
    pub fn from_byte(b: u8) -> Option<Self> {
        Some(match b {
            0x01 => Self::M1,
            0x02 => Self::M2,
            0x03 => Self::M3,
            0x04 => Self::M4,
            0x05 => Self::M5,
            0x10 => Self::RouteFlood,
            _ => return None,
        })
    }

    /// Whether the frame header carries a sender id byte.
    pub fn has_sender(self) -> bool {
        !matches!(self, Self::M2 | Self::M4)
    }

    pub fn header_len(self) -> usize {
        if self.has_sender() {
            4
        } else {
            3
        }
    }

    /// Reads the tag of an encoded frame without decoding it. This is all a
    /// relay or an eavesdropper can learn for free.
    pub fn peek(frame: &[u8]) -> Option<Self> {
        frame.first().copied().and_then(Self::from_byte)
    }
}

impl fmt::Display for MessageTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Self::M1 => "M1",
            Self::M2 => "M2",
            Self::M3 => "M3",
            Self::M4 => "M4",
            Self::M5 => "M5",
            Self::RouteFlood => "RouteFlood",
        };
        f.write_str(s)
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Message {
    M1 {
        sender: NodeId,
        ct: Vec<u8>,
    },
    M2 {
        ct_a: Vec<u8>,
        commitment: CommitmentEnvelope,
    },
    M3 {
        sender: NodeId,
        ct: Vec<u8>,
    },
    M4 {
        kcs: CommitKey,
    },
    M5 {
        sender: NodeId,
        ct: Vec<u8>,
    },
    RouteFlood {
        origin: NodeId,
        hop_count: u8,
    },
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum DecodeError {
    #[error("frame truncated at offset {offset}: need {needed} more bytes")]
    Truncated { offset: usize, needed: usize },
    #[error("unknown message tag {tag:#04x} at offset 0")]
    UnknownTag { tag: u8 },
    #[error("{tag} payload at offset {offset} is {actual} bytes, expected {expected}")]
    PayloadLength {
        tag: MessageTag,
        offset: usize,
        expected: String,
        actual: usize,
    },
    #[error("{extra} trailing bytes after payload at offset {offset}")]
    Trailing { offset: usize, extra: usize },
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum EncodeError {
    #[error("payload of {0} bytes does not fit the 16-bit length field")]
    PayloadTooLong(usize),
}

/// Ciphertext length of an M1 body.
pub fn m1_ct_len(params: &ProtocolParams) -> usize {
    1 + params.width_bytes() + TAG_LEN
}

/// Ciphertext length of the session-key half of M2.
pub fn m2_ct_len(params: &ProtocolParams) -> usize {
    1 + params.width_bytes() + 2 + TAG_LEN
}

pub fn m3_ct_len(params: &ProtocolParams) -> usize {
    1 + params.interval_bytes() + TAG_LEN
}

impl Message {
    pub fn tag(&self) -> MessageTag {
        match self {
            Self::M1 { .. } => MessageTag::M1,
            Self::M2 { .. } => MessageTag::M2,
            Self::M3 { .. } => MessageTag::M3,
            Self::M4 { .. } => MessageTag::M4,
            Self::M5 { .. } => MessageTag::M5,
            Self::RouteFlood { .. } => MessageTag::RouteFlood,
        }
    }

    /// Id carried in the clear header, if the variant has one.
    pub fn sender(&self) -> Option<NodeId> {
        match self {
            Self::M1 { sender, .. } | Self::M3 { sender, .. } | Self::M5 { sender, .. } => {
                Some(*sender)
            }
            Self::RouteFlood { origin, .. } => Some(*origin),
            Self::M2 { .. } | Self::M4 { .. } => None,
        }
    }

    pub fn encode(&self) -> Result<Vec<u8>, EncodeError> {
        let tag = self.tag();
        let mut payload = Vec::new();
        match self {
            Self::M1 { ct, .. } | Self::M3 { ct, .. } | Self::M5 { ct, .. } => {
                payload.extend_from_slice(ct)
            }
            Self::M2 { ct_a, commitment } => {
                payload.extend_from_slice(ct_a);
                payload.extend_from_slice(commitment.ciphertext());
            }
            Self::M4 { kcs } => payload.extend_from_slice(kcs.as_bytes()),
            Self::RouteFlood { hop_count, .. } => payload.push(*hop_count),
        }
        let len =
            u16::try_from(payload.len()).map_err(|_| EncodeError::PayloadTooLong(payload.len()))?;
        let mut out = Vec::with_capacity(tag.header_len() + payload.len());
        out.push(tag as u8);
        if let Some(sender) = self.sender() {
            out.push(sender);
        }
        out.extend_from_slice(&len.to_be_bytes());
        out.extend_from_slice(&payload);
        Ok(out)
    }

    /// Total encoded length without building the frame.
    pub fn encoded_len(&self) -> usize {
        let payload = match self {
            Self::M1 { ct, .. } | Self::M3 { ct, .. } | Self::M5 { ct, .. } => ct.len(),
            Self::M2 { ct_a, commitment } => ct_a.len() + commitment.ciphertext().len(),
            Self::M4 { kcs } => kcs.as_bytes().len(),
            Self::RouteFlood { .. } => 1,
        };
        self.tag().header_len() + payload
    }

    pub fn decode(frame: &[u8], params: &ProtocolParams) -> Result<Self, DecodeError> {
        let first = *frame.first().ok_or(DecodeError::Truncated {
            offset: 0,
            needed: 1,
        })?;
        let tag = MessageTag::from_byte(first).ok_or(DecodeError::UnknownTag { tag: first })?;
        let header = tag.header_len();
        if frame.len() < header {
            return Err(DecodeError::Truncated {
                offset: frame.len(),
                needed: header - frame.len(),
            });
        }
        let sender = if tag.has_sender() { frame[1] } else { 0 };
        let len_at = header - 2;
        let len = u16::from_be_bytes([frame[len_at], frame[len_at + 1]]) as usize;
        let body = &frame[header..];
        if body.len() < len {
            return Err(DecodeError::Truncated {
                offset: frame.len(),
                needed: len - body.len(),
            });
        }
        if body.len() > len {
            return Err(DecodeError::Trailing {
                offset: header + len,
                extra: body.len() - len,
            });
        }
        let bad_len = |expected: String| DecodeError::PayloadLength {
            tag,
            offset: header,
            expected,
            actual: len,
        };
        let exact = |n: usize| {
            if len == n {
                Ok(())
            } else {
                Err(bad_len(n.to_string()))
            }
        };

        Ok(match tag {
            MessageTag::M1 => {
                exact(m1_ct_len(params))?;
                Self::M1 {
                    sender,
                    ct: body.to_vec(),
                }
            }
            MessageTag::M2 => {
                let a = m2_ct_len(params);
                exact(a + CommitmentEnvelope::encoded_len(params))?;
                let commitment = CommitmentEnvelope::new(body[a..].to_vec(), params)
                    .expect("length checked above");
                Self::M2 {
                    ct_a: body[..a].to_vec(),
                    commitment,
                }
            }
            MessageTag::M3 => {
                exact(m3_ct_len(params))?;
                Self::M3 {
                    sender,
                    ct: body.to_vec(),
                }
            }
            MessageTag::M4 => {
                exact(params.kcs_bytes())?;
                Self::M4 {
                    kcs: CommitKey::new(body.to_vec(), params).expect("length checked above"),
                }
            }
            MessageTag::M5 => {
                if len < 1 + TAG_LEN {
                    return Err(bad_len(format!(">= {}", 1 + TAG_LEN)));
                }
                Self::M5 {
                    sender,
                    ct: body.to_vec(),
                }
            }
            MessageTag::RouteFlood => {
                exact(1)?;
                Self::RouteFlood {
                    origin: sender,
                    hop_count: body[0],
                }
            }
        })
    }
}
