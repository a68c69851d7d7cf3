//! Embedding wire protocol, version 1.
//!
//! Handshake: the client sends `SWEM`, u16 version, u8 channels, u16 height,
//! u16 width; the server replies `SWEM`, u16 version, u32 embedding dimension.
//! Each request is a u64 id followed by `channels * height * width` bytes; each
//! response is the same id followed by `dim` little-endian f32 values.

use std::io::{self, Read, Write};

pub const MAGIC: [u8; 4] = *b"SWEM";
pub const VERSION: u16 = 1;
pub const HELLO_LEN: usize = 11;
pub const REPLY_LEN: usize = 10;

/// Input shape announced by the client.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct StackShape {
    pub channels: u8,
    pub height: u16,
    pub width: u16,
}

impl StackShape {
    pub fn new(channels: u8, height: u16, width: u16) -> Self {
        Self { channels, height, width }
    }

    pub fn bytes(&self) -> usize {
        usize::from(self.channels) * usize::from(self.height) * usize::from(self.width)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Hello {
    pub version: u16,
    pub shape: StackShape,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct HelloReply {
    pub magic: [u8; 4],
    pub version: u16,
    pub dim: u32,
}

pub fn encode_hello(shape: StackShape) -> [u8; HELLO_LEN] {
    let mut b = [0u8; HELLO_LEN];
    b[..4].copy_from_slice(&MAGIC);
    b[4..6].copy_from_slice(&VERSION.to_le_bytes());
    b[6] = shape.channels;
    b[7..9].copy_from_slice(&shape.height.to_le_bytes());
    b[9..11].copy_from_slice(&shape.width.to_le_bytes());
    b
}

/// Returns `None` when the magic is wrong.
pub fn decode_hello(b: &[u8; HELLO_LEN]) -> Option<Hello> {
    if b[..4] != MAGIC {
        return None;
    }
    Some(Hello {
        version: u16::from_le_bytes([b[4], b[5]]),
        shape: StackShape::new(b[6], u16::from_le_bytes([b[7], b[8]]), u16::from_le_bytes([b[9], b[10]])),
    })
}

pub fn encode_reply(dim: u32) -> [u8; REPLY_LEN] {
    let mut b = [0u8; REPLY_LEN];
    b[..4].copy_from_slice(&MAGIC);
    b[4..6].copy_from_slice(&VERSION.to_le_bytes());
    b[6..10].copy_from_slice(&dim.to_le_bytes());
    b
}

pub fn decode_reply(b: &[u8; REPLY_LEN]) -> HelloReply {
    HelloReply {
        magic: [b[0], b[1], b[2], b[3]],
        version: u16::from_le_bytes([b[4], b[5]]),
        dim: u32::from_le_bytes([b[6], b[7], b[8], b[9]]),
    }
}

pub fn write_request<W: Write>(out: &mut W, id: u64, pixels: &[u8]) -> io::Result<()> {
    let mut buf = Vec::with_capacity(8 + pixels.len());
    buf.extend_from_slice(&id.to_le_bytes());
    buf.extend_from_slice(pixels);
    out.write_all(&buf)?;
    out.flush()
}

pub fn write_response<W: Write>(out: &mut W, id: u64, values: &[f32]) -> io::Result<()> {
    let mut buf = Vec::with_capacity(8 + 4 * values.len());
    buf.extend_from_slice(&id.to_le_bytes());
    for v in values {
        buf.extend_from_slice(&v.to_le_bytes());
    }
    out.write_all(&buf)?;
    out.flush()
}

/// Reads one response of `dim` values. `Ok(None)` on a clean end of stream.
pub fn read_response<R: Read>(input: &mut R, dim: usize) -> io::Result<Option<(u64, Vec<f32>)>> {
    let mut id = [0u8; 8];
    if !read_exact_or_eof(input, &mut id)? {
        return Ok(None);
    }
    let mut raw = vec![0u8; 4 * dim];
    input.read_exact(&mut raw)?;
    let values = raw
        .chunks_exact(4)
        .map(|c| f32::from_le_bytes([c[0], c[1], c[2], c[3]]))
        .collect();
    Ok(Some((u64::from_le_bytes(id), values)))
}

/// Like `read_exact`, but a stream that ends before the first byte yields `false`.
pub fn read_exact_or_eof<R: Read>(input: &mut R, buf: &mut [u8]) -> io::Result<bool> {
    let mut filled = 0;
    while filled < buf.len() {
        match input.read(&mut buf[filled..]) {
            Ok(0) if filled == 0 => return Ok(false),
            Ok(0) => return Err(io::ErrorKind::UnexpectedEof.into()),
            Ok(n) => filled += n,
            Err(e) if e.kind() == io::ErrorKind::Interrupted => {}
            Err(e) => return Err(e),
        }
    }
    Ok(true)
}

/// Server side of one session. `accept` decides whether to serve a shape;
/// a refused handshake is answered with dimension 0 and the session ends.
/// Returns the number of requests served.
pub fn serve<R, W, A, E>(mut input: R, mut output: W, dim: u32, accept: A, mut embed: E) -> io::Result<u64>
where
    R: Read,
    W: Write,
    A: FnOnce(StackShape) -> bool,
    E: FnMut(StackShape, &[u8]) -> Vec<f32>,
{
    let mut hello = [0u8; HELLO_LEN];
    if !read_exact_or_eof(&mut input, &mut hello)? {
        return Ok(0);
    }
    let Some(h) = decode_hello(&hello).filter(|h| h.version == VERSION) else {
        output.write_all(&encode_reply(0))?;
        output.flush()?;
        return Err(io::Error::new(io::ErrorKind::InvalidData, "bad handshake"));
    };
    if !accept(h.shape) {
        output.write_all(&encode_reply(0))?;
        output.flush()?;
        return Ok(0);
    }
    output.write_all(&encode_reply(dim))?;
    output.flush()?;
    let mut pixels = vec![0u8; h.shape.bytes()];
    let mut served = 0;
    loop {
        let mut id = [0u8; 8];
        if !read_exact_or_eof(&mut input, &mut id)? {
            return Ok(served);
        }
        input.read_exact(&mut pixels)?;
        let values = embed(h.shape, &pixels);
        debug_assert_eq!(values.len(), dim as usize);
        write_response(&mut output, u64::from_le_bytes(id), &values)?;
        served += 1;
    }
}
