//! Little-endian binary framing shared by the file formats and the embedding
//! wire protocol. Readers track their byte offset so parse errors can say
//! exactly where a file went wrong.

use std::io::{self, Read, Write};

use thiserror::Error;

#[derive(Debug, Error)]
pub enum FormatError {
    #[error("bad magic at byte {offset}: expected {expected:?}, found {found:?}")]
    BadMagic {
        offset: u64,
        expected: [u8; 4],
        found: [u8; 4],
    },
    #[error("unsupported version {found} at byte {offset}")]
    UnsupportedVersion { offset: u64, found: u16 },
    #[error("truncated at byte {offset} while reading {context}")]
    Truncated { offset: u64, context: String },
    #[error("invalid data at byte {offset}: {reason}")]
    Invalid { offset: u64, reason: String },
    #[error("i/o error: {0}")]
    Io(#[from] io::Error),
}

impl FormatError {
    pub fn offset(&self) -> Option<u64> {
        match self {
            FormatError::BadMagic { offset, .. }
            | FormatError::UnsupportedVersion { offset, .. }
            | FormatError::Truncated { offset, .. }
            | FormatError::Invalid { offset, .. } => Some(*offset),
            FormatError::Io(_) => None,
        }
    }
}

pub struct LeReader<R> {
    inner: R,
    offset: u64,
}

impl<R: Read> LeReader<R> {
    pub fn new(inner: R) -> Self {
        Self { inner, offset: 0 }
    }

    pub fn offset(&self) -> u64 {
        self.offset
    }

    pub fn into_inner(self) -> R {
        self.inner
    }

    /// Fills `buf` completely, reporting the offset where data ran out.
    pub fn fill(&mut self, buf: &mut [u8], context: &str) -> Result<(), FormatError> {
        let mut filled = 0;
        while filled < buf.len() {
            match self.inner.read(&mut buf[filled..]) {
                Ok(0) => {
                    return Err(FormatError::Truncated {
                        offset: self.offset,
                        context: context.to_string(),
                    })
                }
                Ok(n) => {
                    filled += n;
                    self.offset += n as u64;
                }
                Err(e) if e.kind() == io::ErrorKind::Interrupted => {}
                Err(e) => return Err(e.into()),
            }
        }
        Ok(())
    }

    /// True when the stream is exhausted; otherwise the peeked byte is kept in
    /// `first` for the caller to consume.
    pub fn at_eof(&mut self, first: &mut [u8; 1]) -> Result<bool, FormatError> {
        loop {
            match self.inner.read(first) {
                Ok(0) => return Ok(true),
                Ok(_) => {
                    self.offset += 1;
                    return Ok(false);
                }
                Err(e) if e.kind() == io::ErrorKind::Interrupted => {}
                Err(e) => return Err(e.into()),
            }
        }
    }

    pub fn magic(&mut self, expected: [u8; 4]) -> Result<(), FormatError> {
        let offset = self.offset;
        let mut found = [0u8; 4];
        self.fill(&mut found, "magic")?;
        if found != expected {
            return Err(FormatError::BadMagic { offset, expected, found });
        }
        Ok(())
    }

    pub fn version(&mut self, supported: u16) -> Result<u16, FormatError> {
        let offset = self.offset;
        let found = self.u16("version")?;
        if found != supported {
            return Err(FormatError::UnsupportedVersion { offset, found });
        }
        Ok(found)
    }

    pub fn u8(&mut self, context: &str) -> Result<u8, FormatError> {
        let mut b = [0u8; 1];
        self.fill(&mut b, context)?;
        Ok(b[0])
    }

    pub fn u16(&mut self, context: &str) -> Result<u16, FormatError> {
        let mut b = [0u8; 2];
        self.fill(&mut b, context)?;
        Ok(u16::from_le_bytes(b))
    }

    pub fn u32(&mut self, context: &str) -> Result<u32, FormatError> {
        let mut b = [0u8; 4];
        self.fill(&mut b, context)?;
        Ok(u32::from_le_bytes(b))
    }

    pub fn u64(&mut self, context: &str) -> Result<u64, FormatError> {
        let mut b = [0u8; 8];
        self.fill(&mut b, context)?;
        Ok(u64::from_le_bytes(b))
    }

    pub fn f32(&mut self, context: &str) -> Result<f32, FormatError> {
        Ok(f32::from_bits(self.u32(context)?))
    }

    pub fn f64(&mut self, context: &str) -> Result<f64, FormatError> {
        Ok(f64::from_bits(self.u64(context)?))
    }

    pub fn bytes(&mut self, len: usize, context: &str) -> Result<Vec<u8>, FormatError> {
        let mut buf = vec![0u8; len];
        self.fill(&mut buf, context)?;
        Ok(buf)
    }

    /// Reads a string prefixed by a one-byte length.
    pub fn short_str(&mut self, context: &str) -> Result<String, FormatError> {
        let len = self.u8(context)? as usize;
        let offset = self.offset;
        let raw = self.bytes(len, context)?;
        String::from_utf8(raw).map_err(|_| FormatError::Invalid {
            offset,
            reason: format!("{context} is not UTF-8"),
        })
    }
}

/// Writer half; all integers little-endian.
pub struct LeWriter<W> {
    inner: W,
}

impl<W: Write> LeWriter<W> {
    pub fn new(inner: W) -> Self {
        Self { inner }
    }

    pub fn into_inner(self) -> W {
        self.inner
    }

    pub fn get_mut(&mut self) -> &mut W {
        &mut self.inner
    }

    pub fn bytes(&mut self, b: &[u8]) -> io::Result<()> {
        self.inner.write_all(b)
    }

    pub fn u8(&mut self, v: u8) -> io::Result<()> {
        self.bytes(&[v])
    }

    pub fn u16(&mut self, v: u16) -> io::Result<()> {
        self.bytes(&v.to_le_bytes())
    }

    pub fn u32(&mut self, v: u32) -> io::Result<()> {
        self.bytes(&v.to_le_bytes())
    }

    pub fn u64(&mut self, v: u64) -> io::Result<()> {
        self.bytes(&v.to_le_bytes())
    }

    pub fn f32(&mut self, v: f32) -> io::Result<()> {
        self.u32(v.to_bits())
    }

    pub fn f64(&mut self, v: f64) -> io::Result<()> {
        self.u64(v.to_bits())
    }

    pub fn short_str(&mut self, s: &str) -> io::Result<()> {
        let len = u8::try_from(s.len())
            .map_err(|_| io::Error::new(io::ErrorKind::InvalidInput, format!("string `{s}` longer than 255 bytes")))?;
        self.u8(len)?;
        self.bytes(s.as_bytes())
    }

    pub fn flush(&mut self) -> io::Result<()> {
        self.inner.flush()
    }
}
