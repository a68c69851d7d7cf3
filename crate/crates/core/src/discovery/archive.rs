//! The novelty archive and its files.
//!
//! Binary layout (`SWAR`, version 1), little-endian: magic; u16 version; u8
//! backend tag; u32 dimension; u32 entry count. Each entry holds 4 x f32
//! genome, u64 episode seed, u32 generation and `dimension` x f32 values.
//!
//! The text index starts with a `#` header line, then has one line per entry:
//! generation, genome as `v0,w0,v1,w1`, and novelty at insertion.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Read, Write};
use std::path::Path;

use crate::behavior::{Backend, BehaviorVector};
use crate::binio::{FormatError, LeReader, LeWriter};
use crate::sim::ControllerGenome;

use super::DiscoveryError;

pub const MAGIC: [u8; 4] = *b"SWAR";
pub const VERSION: u16 = 1;
pub const INDEX_HEADER: &str = "# swarmdisc archive-index v1";

#[derive(Debug, Clone, PartialEq)]
pub struct ArchiveEntry {
    pub genome: ControllerGenome,
    pub seed: u64,
    pub generation: u32,
    pub vector: BehaviorVector,
    /// Novelty used for selection when the entry was added. Not stored in the
    /// binary file.
    pub novelty: Option<f64>,
}

/// Every behavior seen during a run, in insertion order.
#[derive(Debug, Clone, PartialEq)]
pub struct NoveltyArchive {
    backend: Backend,
    dim: usize,
    entries: Vec<ArchiveEntry>,
}

impl NoveltyArchive {
    pub fn new(backend: Backend, dim: usize) -> Self {
        Self {
            backend,
            dim,
            entries: Vec::new(),
        }
    }

    pub fn backend(&self) -> Backend {
        self.backend
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn entries(&self) -> &[ArchiveEntry] {
        &self.entries
    }

    pub fn vectors(&self) -> impl ExactSizeIterator<Item = &[f64]> {
        self.entries.iter().map(|e| e.vector.values.as_slice())
    }

    pub fn generations(&self) -> usize {
        self.entries.last().map_or(0, |e| e.generation as usize + 1)
    }

    /// Appends an entry. Vector values are rounded to single precision so the
    /// archive survives a file round trip unchanged.
    pub fn push(&mut self, mut entry: ArchiveEntry) -> Result<(), DiscoveryError> {
        if entry.vector.backend != self.backend {
            return Err(DiscoveryError::Backend(self.backend, entry.vector.backend));
        }
        if entry.vector.dim() != self.dim {
            return Err(DiscoveryError::Dimension {
                expected: self.dim,
                found: entry.vector.dim(),
            });
        }
        if !entry.vector.is_finite() {
            return Err(DiscoveryError::NonFinite { index: self.entries.len() });
        }
        entry.vector = entry.vector.to_single_precision();
        self.entries.push(entry);
        Ok(())
    }

    pub fn write_to<W: Write>(&self, out: W) -> std::io::Result<()> {
        let mut out = LeWriter::new(out);
        out.bytes(&MAGIC)?;
        out.u16(VERSION)?;
        out.u8(self.backend.tag())?;
        out.u32(self.dim as u32)?;
        out.u32(self.entries.len() as u32)?;
        for e in &self.entries {
            for g in e.genome.to_f32() {
                out.f32(g)?;
            }
            out.u64(e.seed)?;
            out.u32(e.generation)?;
            for &v in &e.vector.values {
                out.f32(v as f32)?;
            }
        }
        out.flush()
    }

    pub fn read_from<R: Read>(input: R) -> Result<Self, FormatError> {
        let mut input = LeReader::new(input);
        input.magic(MAGIC)?;
        input.version(VERSION)?;
        let tag_at = input.offset();
        let tag = input.u8("backend tag")?;
        let backend = Backend::from_tag(tag).ok_or_else(|| FormatError::Invalid {
            offset: tag_at,
            reason: format!("unknown backend tag {tag}"),
        })?;
        let dim = input.u32("dimension")? as usize;
        let count = input.u32("entry count")?;
        let mut entries = Vec::with_capacity(count.min(1 << 16) as usize);
        for i in 0..count {
            let context = format!("entry {i}");
            let mut genome = [0f32; 4];
            for g in &mut genome {
                *g = input.f32(&context)?;
            }
            let seed = input.u64(&context)?;
            let generation = input.u32(&context)?;
            let values_at = input.offset();
            let mut values = Vec::with_capacity(dim);
            for _ in 0..dim {
                values.push(f64::from(input.f32(&context)?));
            }
            if values.iter().any(|v| !v.is_finite()) {
                return Err(FormatError::Invalid {
                    offset: values_at,
                    reason: format!("{context} has a non-finite value"),
                });
            }
            entries.push(ArchiveEntry {
                genome: ControllerGenome::from_f32(genome),
                seed,
                generation,
                vector: BehaviorVector::new(backend, values),
                novelty: None,
            });
        }
        let end = input.offset();
        let mut peek = [0u8; 1];
        if !input.at_eof(&mut peek)? {
            return Err(FormatError::Invalid {
                offset: end,
                reason: "trailing bytes after the last entry".into(),
            });
        }
        Ok(Self { backend, dim, entries })
    }

    pub fn save(&self, path: &Path) -> Result<(), DiscoveryError> {
        let io = |source| DiscoveryError::Io {
            path: path.to_path_buf(),
            source,
        };
        let file = File::create(path).map_err(io)?;
        self.write_to(BufWriter::new(file)).map_err(io)
    }

    pub fn load(path: &Path) -> Result<Self, DiscoveryError> {
        let file = File::open(path).map_err(|source| DiscoveryError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        Self::read_from(BufReader::new(file)).map_err(|source| DiscoveryError::Format {
            path: path.to_path_buf(),
            source,
        })
    }

    pub fn write_index<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        writeln!(out, "{INDEX_HEADER}")?;
        for e in &self.entries {
            match e.novelty {
                Some(n) => writeln!(out, "{} {} {}", e.generation, e.genome, n)?,
                None => writeln!(out, "{} {} nan", e.generation, e.genome)?,
            }
        }
        out.flush()
    }

    pub fn save_index(&self, path: &Path) -> Result<(), DiscoveryError> {
        let io = |source| DiscoveryError::Io {
            path: path.to_path_buf(),
            source,
        };
        let file = File::create(path).map_err(io)?;
        self.write_index(BufWriter::new(file)).map_err(io)
    }

    /// Restores novelty-at-insertion values from an index written for this archive.
    pub fn apply_index<R: BufRead>(&mut self, input: R) -> Result<(), String> {
        let mut n = 0;
        for (i, line) in input.lines().enumerate() {
            let line = line.map_err(|e| e.to_string())?;
            if line.trim().is_empty() || line.starts_with('#') {
                continue;
            }
            let entry = self
                .entries
                .get_mut(n)
                .ok_or_else(|| format!("line {}: more lines than archive entries", i + 1))?;
            let fields: Vec<&str> = line.split_whitespace().collect();
            let [generation, genome, novelty] = fields[..] else {
                return Err(format!("line {}: expected 3 fields", i + 1));
            };
            let g: u32 = generation.parse().map_err(|_| format!("line {}: bad generation", i + 1))?;
            let genome: ControllerGenome = genome.parse().map_err(|_| format!("line {}: bad genome", i + 1))?;
            if g != entry.generation || genome != entry.genome {
                return Err(format!("line {}: does not match archive entry {n}", i + 1));
            }
            let v: f64 = novelty.parse().map_err(|_| format!("line {}: bad novelty", i + 1))?;
            entry.novelty = (!v.is_nan()).then_some(v);
            n += 1;
        }
        if n != self.entries.len() {
            return Err(format!("index has {n} lines, archive has {} entries", self.entries.len()));
        }
        Ok(())
    }
}
