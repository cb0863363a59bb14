//! Frame codec for socket faces. All integers big-endian.
//!
//! ```text
//! frame    = len:u32 type:u8 name_len:u16 name body      (len counts the bytes after itself)
//! interest = nonce[4]                                     (type 1)
//! data     = final_segment:u32 sig_len:u16 sig content    (type 2)
//! nack     = reason:u8                                    (type 3)
//! ```

use std::io::{self, Read, Write};

use bytes::Bytes;

use super::forwarder::{Nack, NackReason, Packet};
use super::{Data, Interest, Name};

pub const TYPE_INTEREST: u8 = 1;
pub const TYPE_DATA: u8 = 2;
pub const TYPE_NACK: u8 = 3;
pub const MAX_FRAME_LEN: usize = 1 << 20;

#[derive(Debug, thiserror::Error, PartialEq, Eq)]
pub enum WireError {
    #[error("frame too short")]
    Truncated,
    #[error("frame of {0} bytes exceeds the limit")]
    TooLong(usize),
    #[error("unknown packet type {0}")]
    UnknownType(u8),
    #[error("bad name: {0}")]
    BadName(String),
    #[error("unknown nack reason {0}")]
    UnknownReason(u8),
    #[error("{0} trailing bytes")]
    Trailing(usize),
}

pub fn encode(packet: &Packet) -> Vec<u8> {
    let name = packet.name().to_string();
    let mut body = Vec::with_capacity(64 + name.len());
    body.push(match packet {
        Packet::Interest(_) => TYPE_INTEREST,
        Packet::Data(_) => TYPE_DATA,
        Packet::Nack(_) => TYPE_NACK,
    });
    body.extend_from_slice(&(name.len() as u16).to_be_bytes());
    body.extend_from_slice(name.as_bytes());
    match packet {
        Packet::Interest(i) => body.extend_from_slice(&i.nonce),
        Packet::Data(d) => {
            body.extend_from_slice(&d.final_segment.to_be_bytes());
            body.extend_from_slice(&(d.signature.len() as u16).to_be_bytes());
            body.extend_from_slice(&d.signature);
            body.extend_from_slice(&d.content);
        }
        Packet::Nack(n) => body.push(n.reason as u8),
    }
    let mut frame = Vec::with_capacity(4 + body.len());
    frame.extend_from_slice(&(body.len() as u32).to_be_bytes());
    frame.extend_from_slice(&body);
    frame
}

struct Cursor<'a>(&'a [u8]);

impl<'a> Cursor<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8], WireError> {
        if self.0.len() < n {
            return Err(WireError::Truncated);
        }
        let (head, rest) = self.0.split_at(n);
        self.0 = rest;
        Ok(head)
    }

    fn u8(&mut self) -> Result<u8, WireError> {
        Ok(self.take(1)?[0])
    }

    fn u16(&mut self) -> Result<u16, WireError> {
        Ok(u16::from_be_bytes(self.take(2)?.try_into().expect("2 bytes")))
    }

    fn u32(&mut self) -> Result<u32, WireError> {
        Ok(u32::from_be_bytes(self.take(4)?.try_into().expect("4 bytes")))
    }
}

/// Decodes the bytes after the length field.
pub fn decode_body(body: &[u8]) -> Result<Packet, WireError> {
    let mut c = Cursor(body);
    let kind = c.u8()?;
    let name_len = c.u16()? as usize;
    let name = std::str::from_utf8(c.take(name_len)?).map_err(|e| WireError::BadName(e.to_string()))?;
    let name: Name = name.parse().map_err(|e: super::NameError| WireError::BadName(e.to_string()))?;
    let packet = match kind {
        TYPE_INTEREST => Packet::Interest(Interest { name, nonce: c.take(4)?.try_into().expect("4 bytes") }),
        TYPE_DATA => {
            let final_segment = c.u32()?;
            let sig_len = c.u16()? as usize;
            let signature = c.take(sig_len)?.to_vec();
            let content = Bytes::copy_from_slice(std::mem::take(&mut c.0));
            Packet::Data(Data { name, content, final_segment, producer_id: String::new(), signature })
        }
        TYPE_NACK => {
            let r = c.u8()?;
            Packet::Nack(Nack { name, reason: NackReason::from_u8(r).ok_or(WireError::UnknownReason(r))? })
        }
        other => return Err(WireError::UnknownType(other)),
    };
    if !c.0.is_empty() {
        return Err(WireError::Trailing(c.0.len()));
    }
    Ok(packet)
}

pub fn decode(frame: &[u8]) -> Result<Packet, WireError> {
    let mut c = Cursor(frame);
    let len = c.u32()? as usize;
    if len > MAX_FRAME_LEN {
        return Err(WireError::TooLong(len));
    }
    let body = c.take(len)?;
    if !c.0.is_empty() {
        return Err(WireError::Trailing(c.0.len()));
    }
    decode_body(body)
}

/// `Ok(None)` on a clean end of stream between frames.
pub fn read_frame<R: Read>(r: &mut R) -> io::Result<Option<Packet>> {
    let mut len = [0u8; 4];
    let mut got = 0;
    while got < 4 {
        match r.read(&mut len[got..]) {
            Ok(0) if got == 0 => return Ok(None),
            Ok(0) => return Err(io::ErrorKind::UnexpectedEof.into()),
            Ok(n) => got += n,
            Err(e) if e.kind() == io::ErrorKind::Interrupted => {}
            Err(e) => return Err(e),
        }
    }
    let len = u32::from_be_bytes(len) as usize;
    if len > MAX_FRAME_LEN {
        return Err(io::Error::new(io::ErrorKind::InvalidData, WireError::TooLong(len)));
    }
    let mut body = vec![0u8; len];
    r.read_exact(&mut body)?;
    decode_body(&body).map(Some).map_err(|e| io::Error::new(io::ErrorKind::InvalidData, e))
}

pub fn write_frame<W: Write>(w: &mut W, packet: &Packet) -> io::Result<()> {
    w.write_all(&encode(packet))
}
