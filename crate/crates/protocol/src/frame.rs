//! Wire framing.
//!
//! All integers are big-endian:
//!
//! ```text
//! u32 length | u8 version | u8 msg_type | u16 id_len | id | nonce[16] | ciphertext | tag[16]
//! ```
//!
//! `length` counts every byte after the length field itself.

use std::io::{self, Read};

use crate::error::FrameError;

pub const PROTOCOL_VERSION: u8 = 2;
pub const NONCE_LEN: usize = 16;
pub const TAG_LEN: usize = 16;
pub const MAX_FRAME_LEN: usize = 32 * 1024 * 1024;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
#[repr(u8)]
pub enum MsgType {
    ScanRequest = 1,
    ScanAccept = 2,
    ScanReject = 3,
    ResultRequest = 4,
    ResultNotReady = 5,
    ResultResponse = 6,
    ProtocolError = 7,
}

impl MsgType {
    pub fn from_byte(b: u8) -> Option<Self> {
        Some(match b {
            1 => MsgType::ScanRequest,
            2 => MsgType::ScanAccept,
            3 => MsgType::ScanReject,
            4 => MsgType::ResultRequest,
            5 => MsgType::ResultNotReady,
            6 => MsgType::ResultResponse,
            7 => MsgType::ProtocolError,
            _ => return None,
        })
    }

    pub fn byte(self) -> u8 {
        self as u8
    }
}

/// A sealed message as it travels on the wire.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Envelope {
    pub version: u8,
    pub msg_type: MsgType,
    pub client_id_a: String,
    pub nonce: [u8; NONCE_LEN],
    /// Ciphertext followed by the 16-byte tag.
    pub sealed: Vec<u8>,
}

impl Envelope {
    /// Associated data bound by the tag.
    pub(crate) fn aad(version: u8, msg_type: MsgType) -> [u8; 2] {
        [version, msg_type.byte()]
    }

    /// Full frame including the length prefix.
    pub fn encode(&self) -> Vec<u8> {
        let id = self.client_id_a.as_bytes();
        assert!(id.len() <= u16::MAX as usize, "client id too long");
        let body_len = 2 + 2 + id.len() + NONCE_LEN + self.sealed.len();
        let mut out = Vec::with_capacity(4 + body_len);
        out.extend_from_slice(&(body_len as u32).to_be_bytes());
        out.push(self.version);
        out.push(self.msg_type.byte());
        out.extend_from_slice(&(id.len() as u16).to_be_bytes());
        out.extend_from_slice(id);
        out.extend_from_slice(&self.nonce);
        out.extend_from_slice(&self.sealed);
        out
    }

    /// Decodes one complete frame (length prefix included).
    pub fn decode(frame: &[u8]) -> Result<Self, FrameError> {
        let mut cur = Cursor { buf: frame, pos: 0 };
        let len = u32::from_be_bytes(cur.take(4)?.try_into().unwrap()) as usize;
        if len > MAX_FRAME_LEN {
            return Err(FrameError::TooLarge(len));
        }
        let have = frame.len() - 4;
        if have < len {
            return Err(FrameError::Truncated { needed: len, have });
        }
        if have > len {
            return Err(FrameError::Trailing(have - len));
        }
        let version = cur.take(1)?[0];
        if version != PROTOCOL_VERSION {
            return Err(FrameError::Version(version));
        }
        let t = cur.take(1)?[0];
        let msg_type = MsgType::from_byte(t).ok_or(FrameError::MsgType(t))?;
        let id_len = u16::from_be_bytes(cur.take(2)?.try_into().unwrap()) as usize;
        let client_id_a = std::str::from_utf8(cur.take(id_len)?)
            .map_err(|_| FrameError::ClientId)?
            .to_string();
        let nonce: [u8; NONCE_LEN] = cur.take(NONCE_LEN)?.try_into().unwrap();
        let sealed = cur.rest();
        if sealed.len() < TAG_LEN {
            return Err(FrameError::Truncated {
                needed: TAG_LEN,
                have: sealed.len(),
            });
        }
        Ok(Envelope {
            version,
            msg_type,
            client_id_a,
            nonce,
            sealed: sealed.to_vec(),
        })
    }
}

struct Cursor<'a> {
    buf: &'a [u8],
    pos: usize,
}

impl<'a> Cursor<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8], FrameError> {
        let have = self.buf.len() - self.pos;
        if have < n {
            return Err(FrameError::Truncated { needed: n, have });
        }
        let s = &self.buf[self.pos..self.pos + n];
        self.pos += n;
        Ok(s)
    }

    fn rest(&mut self) -> &'a [u8] {
        let s = &self.buf[self.pos..];
        self.pos = self.buf.len();
        s
    }
}

/// Reads one length-prefixed frame from a blocking stream.
pub fn read_frame<R: Read>(r: &mut R) -> io::Result<Vec<u8>> {
    let mut prefix = [0u8; 4];
    r.read_exact(&mut prefix)?;
    let len = u32::from_be_bytes(prefix) as usize;
    if len > MAX_FRAME_LEN {
        return Err(io::Error::new(
            io::ErrorKind::InvalidData,
            FrameError::TooLarge(len),
        ));
    }
    let mut frame = vec![0u8; 4 + len];
    frame[..4].copy_from_slice(&prefix);
    r.read_exact(&mut frame[4..])?;
    Ok(frame)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> Envelope {
        Envelope {
            version: PROTOCOL_VERSION,
            msg_type: MsgType::ResultRequest,
            client_id_a: "client-7".into(),
            nonce: [9; 16],
            sealed: vec![1, 2, 3, 4, 5, 6, 7, 8, 9, 10, 11, 12, 13, 14, 15, 16, 17],
        }
    }

    #[test]
    fn encode_decode_round_trip() {
        let env = sample();
        let frame = env.encode();
        assert_eq!(&frame[..4], &((frame.len() - 4) as u32).to_be_bytes());
        assert_eq!(frame[4], 2);
        assert_eq!(frame[5], 4);
        assert_eq!(&frame[6..8], &[0, 8]);
        assert_eq!(Envelope::decode(&frame).unwrap(), env);
        assert_eq!(read_frame(&mut frame.as_slice()).unwrap(), frame);
    }

    #[test]
    fn decode_rejects_garbage() {
        let frame = sample().encode();
        assert!(matches!(
            Envelope::decode(&frame[..frame.len() - 1]),
            Err(FrameError::Truncated { .. })
        ));
        let mut extra = frame.clone();
        extra.push(0);
        assert_eq!(Envelope::decode(&extra), Err(FrameError::Trailing(1)));
        let mut v = frame.clone();
        v[4] = 1;
        assert_eq!(Envelope::decode(&v), Err(FrameError::Version(1)));
        let mut t = frame.clone();
        t[5] = 8;
        assert_eq!(Envelope::decode(&t), Err(FrameError::MsgType(8)));
        assert!(Envelope::decode(b"GET / HTTP/1.1\r\n\r\n").is_err());
        assert!(Envelope::decode(&[]).is_err());
    }

    #[test]
    fn msg_type_bytes() {
        for b in 1..=7u8 {
            assert_eq!(MsgType::from_byte(b).unwrap().byte(), b);
        }
        assert!(MsgType::from_byte(0).is_none());
    }
}
