//! Training dataset files (`SWBD`, version 1).
//!
//! Layout, little-endian: magic `SWBD`; u16 version; u32 record count; u8
//! channels; u16 height; u16 width; u8 profile-name length and bytes. Each
//! record then holds 4 x f32 genome, u64 episode seed and
//! `channels * height * width` pixel bytes.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Seek, SeekFrom, Write};
use std::path::{Path, PathBuf};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::binio::{FormatError, LeReader, LeWriter};
use crate::sim::{run_episode, ControllerGenome, SimProfile};

use super::stack::{subsample, STACK_CHANNELS};
use super::CaptureError;

pub const MAGIC: [u8; 4] = *b"SWBD";
pub const VERSION: u16 = 1;

/// Byte offset of the record-count field.
const COUNT_OFFSET: u64 = 6;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DatasetHeader {
    pub record_count: u32,
    pub channels: u8,
    pub height: u16,
    pub width: u16,
    pub profile_name: String,
}

impl DatasetHeader {
    pub fn new(profile_name: &str, height: u16, width: u16) -> Self {
        Self {
            record_count: 0,
            channels: STACK_CHANNELS as u8,
            height,
            width,
            profile_name: profile_name.to_string(),
        }
    }

    pub fn record_pixels(&self) -> usize {
        usize::from(self.channels) * usize::from(self.height) * usize::from(self.width)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DatasetRecord {
    pub genome: [f32; 4],
    pub seed: u64,
    pub pixels: Vec<u8>,
}

/// Streaming writer. The record count is patched into the header by
/// [`DatasetWriter::finish`].
pub struct DatasetWriter<W: Write + Seek> {
    out: LeWriter<W>,
    header: DatasetHeader,
    written: u32,
}

impl<W: Write + Seek> DatasetWriter<W> {
    pub fn new(inner: W, header: DatasetHeader) -> std::io::Result<Self> {
        let mut out = LeWriter::new(inner);
        out.bytes(&MAGIC)?;
        out.u16(VERSION)?;
        out.u32(0)?;
        out.u8(header.channels)?;
        out.u16(header.height)?;
        out.u16(header.width)?;
        out.short_str(&header.profile_name)?;
        Ok(Self { out, header, written: 0 })
    }

    pub fn push(&mut self, record: &DatasetRecord) -> std::io::Result<()> {
        if record.pixels.len() != self.header.record_pixels() {
            return Err(std::io::Error::new(
                std::io::ErrorKind::InvalidInput,
                format!(
                    "record has {} pixel bytes, header expects {}",
                    record.pixels.len(),
                    self.header.record_pixels()
                ),
            ));
        }
        for g in record.genome {
            self.out.f32(g)?;
        }
        self.out.u64(record.seed)?;
        self.out.bytes(&record.pixels)?;
        self.written += 1;
        Ok(())
    }

    pub fn finish(mut self) -> std::io::Result<W> {
        self.out.flush()?;
        let mut inner = self.out.into_inner();
        let end = inner.stream_position()?;
        inner.seek(SeekFrom::Start(COUNT_OFFSET))?;
        inner.write_all(&self.written.to_le_bytes())?;
        inner.seek(SeekFrom::Start(end))?;
        inner.flush()?;
        Ok(inner)
    }
}

/// Record-at-a-time reader.
pub struct DatasetReader<R: Read> {
    input: LeReader<R>,
    header: DatasetHeader,
    remaining: u32,
}

impl<R: Read> DatasetReader<R> {
    pub fn new(inner: R) -> Result<Self, FormatError> {
        let mut input = LeReader::new(inner);
        input.magic(MAGIC)?;
        input.version(VERSION)?;
        let record_count = input.u32("record count")?;
        let channels_at = input.offset();
        let channels = input.u8("channels")?;
        if usize::from(channels) != STACK_CHANNELS {
            return Err(FormatError::Invalid {
                offset: channels_at,
                reason: format!("expected {STACK_CHANNELS} channels, found {channels}"),
            });
        }
        let height = input.u16("height")?;
        let width = input.u16("width")?;
        let profile_name = input.short_str("profile name")?;
        Ok(Self {
            input,
            header: DatasetHeader {
                record_count,
                channels,
                height,
                width,
                profile_name,
            },
            remaining: record_count,
        })
    }

    pub fn header(&self) -> &DatasetHeader {
        &self.header
    }

    fn read_record(&mut self) -> Result<DatasetRecord, FormatError> {
        let index = self.header.record_count - self.remaining;
        let context = format!("record {index}");
        let mut genome = [0f32; 4];
        for g in &mut genome {
            *g = self.input.f32(&context)?;
        }
        let seed = self.input.u64(&context)?;
        let pixels = self.input.bytes(self.header.record_pixels(), &context)?;
        Ok(DatasetRecord { genome, seed, pixels })
    }

    /// Fails if bytes follow the last declared record.
    pub fn expect_end(&mut self) -> Result<(), FormatError> {
        let offset = self.input.offset();
        let mut peek = [0u8; 1];
        if self.input.at_eof(&mut peek)? {
            Ok(())
        } else {
            Err(FormatError::Invalid {
                offset,
                reason: "trailing bytes after the last record".into(),
            })
        }
    }
}

impl<R: Read> Iterator for DatasetReader<R> {
    type Item = Result<DatasetRecord, FormatError>;

    fn next(&mut self) -> Option<Self::Item> {
        if self.remaining == 0 {
            return None;
        }
        let record = self.read_record();
        self.remaining = if record.is_ok() { self.remaining - 1 } else { 0 };
        Some(record)
    }
}

fn io_at(path: &Path) -> impl Fn(std::io::Error) -> CaptureError + '_ {
    move |source| CaptureError::Io {
        path: path.to_path_buf(),
        source,
    }
}

pub fn write_dataset(path: &Path, header: &DatasetHeader, records: &[DatasetRecord]) -> Result<(), CaptureError> {
    let file = File::create(path).map_err(io_at(path))?;
    let mut writer = DatasetWriter::new(BufWriter::new(file), header.clone()).map_err(io_at(path))?;
    for r in records {
        writer.push(r).map_err(io_at(path))?;
    }
    writer.finish().map_err(io_at(path))?;
    Ok(())
}

pub fn read_dataset(path: &Path) -> Result<(DatasetHeader, Vec<DatasetRecord>), CaptureError> {
    let file = File::open(path).map_err(io_at(path))?;
    let mut reader = DatasetReader::new(BufReader::new(file)).map_err(|e| CaptureError::Format {
        path: path.to_path_buf(),
        source: e,
    })?;
    let header = reader.header().clone();
    let records = reader.by_ref().collect::<Result<Vec<_>, _>>();
    let records = records.and_then(|r| reader.expect_end().map(|_| r));
    let records = records.map_err(|e| CaptureError::Format {
        path: path.to_path_buf(),
        source: e,
    })?;
    Ok((header, records))
}

#[derive(Debug, Clone, PartialEq)]
pub struct DatasetSummary {
    pub path: PathBuf,
    pub records: u32,
    pub height: u16,
    pub width: u16,
    pub bytes: u64,
}

/// Records simulated concurrently before being flushed in order.
const GENERATION_CHUNK: usize = 256;

/// Samples `n` controllers uniformly, simulates each from its own spawn seed
/// and writes the frame stacks in sample order.
pub fn generate_dataset(
    n: usize,
    profile: &SimProfile,
    seed: u64,
    width: u16,
    height: u16,
    path: &Path,
) -> Result<DatasetSummary, CaptureError> {
    if n == 0 {
        return Err(CaptureError::EmptyDataset);
    }
    let record_count = u32::try_from(n).map_err(|_| CaptureError::TooManyRecords(n))?;
    profile.validate().map_err(crate::sim::EpisodeError::from)?;

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let specs: Vec<(ControllerGenome, u64)> = (0..n)
        .map(|_| {
            let genome = ControllerGenome::sample_uniform(profile, &mut rng).to_single_precision();
            (genome, rng.random())
        })
        .collect();

    let file = File::create(path).map_err(io_at(path))?;
    let header = DatasetHeader::new(&profile.name, height, width);
    let mut writer = DatasetWriter::new(BufWriter::new(file), header).map_err(io_at(path))?;
    for chunk in specs.chunks(GENERATION_CHUNK) {
        let records = chunk
            .par_iter()
            .map(|(genome, episode_seed)| {
                let traj = run_episode(genome, profile, *episode_seed)?;
                let stack = subsample(&traj, usize::from(width), usize::from(height))?;
                Ok(DatasetRecord {
                    genome: genome.to_f32(),
                    seed: *episode_seed,
                    pixels: stack.to_bytes(),
                })
            })
            .collect::<Result<Vec<_>, CaptureError>>()?;
        for r in &records {
            writer.push(r).map_err(io_at(path))?;
        }
    }
    let mut out = writer.finish().map_err(io_at(path))?;
    let bytes = out.stream_position().map_err(io_at(path))?;
    log::info!("wrote {n} records to {}", path.display());
    Ok(DatasetSummary {
        path: path.to_path_buf(),
        records: record_count,
        height,
        width,
        bytes,
    })
}
