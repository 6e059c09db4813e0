//! On-disk container for dataset samples.
//!
//! Format "LRDC" v1, all integers little-endian:
//!
//! ```text
//! magic "LRDC" | u16 version | u32 sample count
//! per sample:
//!   u32 metadata length | UTF-8 JSON metadata
//!   u16 channel count
//!   per channel:
//!     u16 name length | UTF-8 name
//!     u32 rows | u32 cols | u8 dtype (0 = float32, 1 = uint8)
//!     row-major payload
//!   u32 CRC32 of the record bytes above (metadata length through last payload)
//! ```
//!
//! Reads verify structure and CRC before decoding, so a flipped payload or
//! metadata byte is reported as a checksum failure for the specific record
//! rather than a downstream parse error. Decoded samples are checked to be
//! NaN-free and structurally valid.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::dataset::{validate_sample, DatasetSample, SampleMeta};
use crate::error::{Error, Result};
use crate::grid::{ByteGrid, Grid};
use crate::terrain::HeightMap;

pub const MAGIC: [u8; 4] = *b"LRDC";
/// Magic of the terrain-only container, which shares the record framing but
/// stores a single elevation channel per record.
pub const TERRAIN_MAGIC: [u8; 4] = *b"LRTC";
pub const FORMAT_VERSION: u16 = 1;

const DTYPE_F32: u8 = 0;
const DTYPE_U8: u8 = 1;

const CHANNEL_ORDER: [&str; 6] = ["I_HM", "I_FM", "I_Tx", "I_Hz", "I_KM", "I_RM"];

fn push_channel_header(out: &mut Vec<u8>, name: &str, dims: (usize, usize), dtype: u8) {
    out.extend_from_slice(&(name.len() as u16).to_le_bytes());
    out.extend_from_slice(name.as_bytes());
    out.extend_from_slice(&(dims.0 as u32).to_le_bytes());
    out.extend_from_slice(&(dims.1 as u32).to_le_bytes());
    out.push(dtype);
}

fn push_f32_channel(out: &mut Vec<u8>, name: &str, grid: &Grid) -> Result<()> {
    push_channel_header(out, name, grid.dims(), DTYPE_F32);
    for &v in grid.iter() {
        let narrowed = v as f32;
        if !narrowed.is_finite() {
            return Err(Error::NonFinite("channel value outside 32-bit float range"));
        }
        out.extend_from_slice(&narrowed.to_le_bytes());
    }
    Ok(())
}

fn push_u8_channel(out: &mut Vec<u8>, name: &str, grid: &ByteGrid) {
    push_channel_header(out, name, grid.dims(), DTYPE_U8);
    out.extend_from_slice(grid.as_slice());
}

fn encode_record(sample: &DatasetSample) -> Result<Vec<u8>> {
    let meta = serde_json::to_vec(&sample.meta)?;
    let mut record = Vec::new();
    record.extend_from_slice(&(meta.len() as u32).to_le_bytes());
    record.extend_from_slice(&meta);
    record.extend_from_slice(&(CHANNEL_ORDER.len() as u16).to_le_bytes());
    push_f32_channel(&mut record, "I_HM", &sample.i_hm)?;
    push_f32_channel(&mut record, "I_FM", &sample.i_fm)?;
    push_u8_channel(&mut record, "I_Tx", &sample.i_tx);
    push_u8_channel(&mut record, "I_Hz", &sample.i_hz);
    push_u8_channel(&mut record, "I_KM", &sample.i_km);
    push_f32_channel(&mut record, "I_RM", &sample.i_rm)?;
    Ok(record)
}

/// Serializes samples to container bytes. Every sample is validated first;
/// a malformed sample aborts the write.
pub fn write_container_bytes(samples: &[DatasetSample]) -> Result<Vec<u8>> {
    let count = u32::try_from(samples.len())
        .map_err(|_| Error::InvalidPayload("sample count exceeds u32".to_string()))?;
    let mut out = Vec::new();
    out.extend_from_slice(&MAGIC);
    out.extend_from_slice(&FORMAT_VERSION.to_le_bytes());
    out.extend_from_slice(&count.to_le_bytes());
    for (index, sample) in samples.iter().enumerate() {
        let violations = validate_sample(sample);
        if !violations.is_empty() {
            return Err(Error::SampleInvalid(format!(
                "sample {index}: {}",
                violations.join("; ")
            )));
        }
        let record = encode_record(sample)?;
        out.extend_from_slice(&record);
        out.extend_from_slice(&crc32fast::hash(&record).to_le_bytes());
    }
    Ok(out)
}

/// Writes through a temporary file in the same directory and renames it
/// into place, so readers never observe a partial file.
fn atomic_write(path: &Path, bytes: &[u8]) -> Result<()> {
    let mut tmp = path.as_os_str().to_owned();
    tmp.push(".tmp");
    let tmp = std::path::PathBuf::from(tmp);
    fs::write(&tmp, bytes)?;
    fs::rename(&tmp, path)?;
    Ok(())
}

pub fn write_container(samples: &[DatasetSample], path: impl AsRef<Path>) -> Result<()> {
    atomic_write(path.as_ref(), &write_container_bytes(samples)?)
}

struct Reader<'a> {
    buf: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        if self.buf.len() - self.pos < n {
            return Err(Error::Truncated {
                offset: self.pos,
                needed: n,
            });
        }
        let slice = &self.buf[self.pos..self.pos + n];
        self.pos += n;
        Ok(slice)
    }

    fn read_u8(&mut self) -> Result<u8> {
        Ok(self.take(1)?[0])
    }

    fn read_u16(&mut self) -> Result<u16> {
        Ok(u16::from_le_bytes(self.take(2)?.try_into().unwrap()))
    }

    fn read_u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }
}

fn dtype_size(code: u8, offset: usize) -> Result<usize> {
    match code {
        DTYPE_F32 => Ok(4),
        DTYPE_U8 => Ok(1),
        _ => Err(Error::UnknownDtype { code, offset }),
    }
}

fn payload_len(rows: u32, cols: u32, elem: usize) -> Result<usize> {
    (rows as usize)
        .checked_mul(cols as usize)
        .and_then(|n| n.checked_mul(elem))
        .ok_or_else(|| Error::InvalidPayload("channel dimensions overflow".to_string()))
}

/// Walks one record without decoding it, returning the half-open byte range
/// it occupies. Structural errors (truncation, unknown dtype) surface here.
fn walk_record(reader: &mut Reader) -> Result<(usize, usize)> {
    let start = reader.pos;
    let meta_len = reader.read_u32()? as usize;
    reader.take(meta_len)?;
    let channel_count = reader.read_u16()?;
    for _ in 0..channel_count {
        let name_len = reader.read_u16()? as usize;
        reader.take(name_len)?;
        let rows = reader.read_u32()?;
        let cols = reader.read_u32()?;
        let dtype_offset = reader.pos;
        let code = reader.read_u8()?;
        let elem = dtype_size(code, dtype_offset)?;
        reader.take(payload_len(rows, cols, elem)?)?;
    }
    Ok((start, reader.pos))
}

enum ChannelData {
    F32(Grid),
    U8(ByteGrid),
}

fn extract(channels: &mut Vec<(String, ChannelData)>, wanted: &str) -> Result<ChannelData> {
    let at = channels
        .iter()
        .position(|(name, _)| name == wanted)
        .ok_or_else(|| Error::InvalidPayload(format!("missing channel {wanted}")))?;
    Ok(channels.remove(at).1)
}

fn extract_f32(channels: &mut Vec<(String, ChannelData)>, wanted: &str) -> Result<Grid> {
    match extract(channels, wanted)? {
        ChannelData::F32(grid) => Ok(grid),
        ChannelData::U8(_) => Err(Error::InvalidPayload(format!(
            "channel {wanted} has dtype uint8, expected float32"
        ))),
    }
}

fn extract_u8(channels: &mut Vec<(String, ChannelData)>, wanted: &str) -> Result<ByteGrid> {
    match extract(channels, wanted)? {
        ChannelData::U8(grid) => Ok(grid),
        ChannelData::F32(_) => Err(Error::InvalidPayload(format!(
            "channel {wanted} has dtype float32, expected uint8"
        ))),
    }
}

fn decode_record(record: &[u8], sample_index: usize) -> Result<DatasetSample> {
    let mut reader = Reader {
        buf: record,
        pos: 0,
    };
    let meta_len = reader.read_u32()? as usize;
    let meta: SampleMeta = serde_json::from_slice(reader.take(meta_len)?)?;
    let channel_count = reader.read_u16()?;
    let mut channels: Vec<(String, ChannelData)> = Vec::with_capacity(channel_count as usize);
    for _ in 0..channel_count {
        let name_len = reader.read_u16()? as usize;
        let name = std::str::from_utf8(reader.take(name_len)?)
            .map_err(|_| Error::InvalidPayload("channel name is not UTF-8".to_string()))?
            .to_string();
        let rows = reader.read_u32()? as usize;
        let cols = reader.read_u32()? as usize;
        let code = reader.read_u8()?;
        match code {
            DTYPE_F32 => {
                let payload = reader.take(rows * cols * 4)?;
                let mut data = Vec::with_capacity(rows * cols);
                for bytes in payload.chunks_exact(4) {
                    let v = f32::from_le_bytes(bytes.try_into().unwrap());
                    if !v.is_finite() {
                        return Err(Error::SampleInvalid(format!(
                            "sample {sample_index}: non-finite value in channel {name}"
                        )));
                    }
                    data.push(v as f64);
                }
                channels.push((name, ChannelData::F32(Grid::from_vec(rows, cols, data))));
            }
            DTYPE_U8 => {
                let payload = reader.take(rows * cols)?;
                channels.push((
                    name,
                    ChannelData::U8(ByteGrid::from_vec(rows, cols, payload.to_vec())),
                ));
            }
            _ => unreachable!("walk_record validated dtype codes"),
        }
    }

    let i_hm = extract_f32(&mut channels, "I_HM")?;
    let i_fm = extract_f32(&mut channels, "I_FM")?;
    let i_rm = extract_f32(&mut channels, "I_RM")?;
    let i_tx = extract_u8(&mut channels, "I_Tx")?;
    let i_hz = extract_u8(&mut channels, "I_Hz")?;
    let i_km = extract_u8(&mut channels, "I_KM")?;
    if let Some((name, _)) = channels.first() {
        return Err(Error::InvalidPayload(format!("unexpected channel {name}")));
    }

    let sample = DatasetSample {
        i_hm,
        i_fm,
        i_tx,
        i_hz,
        i_km,
        i_rm,
        meta,
    };
    let violations = validate_sample(&sample);
    if !violations.is_empty() {
        return Err(Error::SampleInvalid(format!(
            "sample {sample_index}: {}",
            violations.join("; ")
        )));
    }
    Ok(sample)
}

/// Parses container bytes. Each record's CRC is verified over the raw bytes
/// before any decoding of that record happens.
pub fn read_container_bytes(bytes: &[u8]) -> Result<Vec<DatasetSample>> {
    let mut reader = Reader { buf: bytes, pos: 0 };
    let magic = reader.take(4)?;
    if magic != MAGIC {
        return Err(Error::BadMagic {
            found: magic.try_into().unwrap(),
        });
    }
    let version = reader.read_u16()?;
    if version != FORMAT_VERSION {
        return Err(Error::UnsupportedVersion { found: version });
    }
    let count = reader.read_u32()? as usize;

    let mut samples = Vec::with_capacity(count);
    for sample_index in 0..count {
        let (start, end) = walk_record(&mut reader)?;
        let expected = reader.read_u32()?;
        let found = crc32fast::hash(&bytes[start..end]);
        if expected != found {
            return Err(Error::ChecksumMismatch {
                sample_index,
                offset: start,
                expected,
                found,
            });
        }
        samples.push(decode_record(&bytes[start..end], sample_index)?);
    }
    if reader.pos != bytes.len() {
        return Err(Error::InvalidPayload(format!(
            "{} trailing bytes after last record",
            bytes.len() - reader.pos
        )));
    }
    Ok(samples)
}

pub fn read_container(path: impl AsRef<Path>) -> Result<Vec<DatasetSample>> {
    read_container_bytes(&fs::read(path)?)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TerrainMeta {
    pub seed: u64,
    pub cell_size_m: f64,
    pub generator_version: String,
}

pub fn write_terrain_container_bytes(maps: &[HeightMap]) -> Result<Vec<u8>> {
    let count = u32::try_from(maps.len())
        .map_err(|_| Error::InvalidPayload("terrain count exceeds u32".to_string()))?;
    let mut out = Vec::new();
    out.extend_from_slice(&TERRAIN_MAGIC);
    out.extend_from_slice(&FORMAT_VERSION.to_le_bytes());
    out.extend_from_slice(&count.to_le_bytes());
    for map in maps {
        let meta = serde_json::to_vec(&TerrainMeta {
            seed: map.seed(),
            cell_size_m: map.cell_size_m(),
            generator_version: env!("CARGO_PKG_VERSION").to_string(),
        })?;
        let mut record = Vec::new();
        record.extend_from_slice(&(meta.len() as u32).to_le_bytes());
        record.extend_from_slice(&meta);
        record.extend_from_slice(&1u16.to_le_bytes());
        push_f32_channel(&mut record, "ELEV_M", map.elevations())?;
        out.extend_from_slice(&record);
        out.extend_from_slice(&crc32fast::hash(&record).to_le_bytes());
    }
    Ok(out)
}

pub fn write_terrain_container(maps: &[HeightMap], path: impl AsRef<Path>) -> Result<()> {
    atomic_write(path.as_ref(), &write_terrain_container_bytes(maps)?)
}

fn decode_terrain_record(record: &[u8]) -> Result<HeightMap> {
    let mut reader = Reader {
        buf: record,
        pos: 0,
    };
    let meta_len = reader.read_u32()? as usize;
    let meta: TerrainMeta = serde_json::from_slice(reader.take(meta_len)?)?;
    let channel_count = reader.read_u16()?;
    if channel_count != 1 {
        return Err(Error::InvalidPayload(format!(
            "terrain record must hold one channel, found {channel_count}"
        )));
    }
    let name_len = reader.read_u16()? as usize;
    let name = std::str::from_utf8(reader.take(name_len)?)
        .map_err(|_| Error::InvalidPayload("channel name is not UTF-8".to_string()))?;
    if name != "ELEV_M" {
        return Err(Error::InvalidPayload(format!(
            "unexpected terrain channel {name}"
        )));
    }
    let rows = reader.read_u32()? as usize;
    let cols = reader.read_u32()? as usize;
    let code = reader.read_u8()?;
    if code != DTYPE_F32 {
        return Err(Error::InvalidPayload(
            "terrain elevations must be float32".to_string(),
        ));
    }
    let payload = reader.take(rows * cols * 4)?;
    let mut data = Vec::with_capacity(rows * cols);
    for bytes in payload.chunks_exact(4) {
        data.push(f32::from_le_bytes(bytes.try_into().unwrap()) as f64);
    }
    HeightMap::new(Grid::from_vec(rows, cols, data), meta.cell_size_m, meta.seed)
}

pub fn read_terrain_container_bytes(bytes: &[u8]) -> Result<Vec<HeightMap>> {
    let mut reader = Reader { buf: bytes, pos: 0 };
    let magic = reader.take(4)?;
    if magic != TERRAIN_MAGIC {
        return Err(Error::BadMagic {
            found: magic.try_into().unwrap(),
        });
    }
    let version = reader.read_u16()?;
    if version != FORMAT_VERSION {
        return Err(Error::UnsupportedVersion { found: version });
    }
    let count = reader.read_u32()? as usize;
    let mut maps = Vec::with_capacity(count);
    for sample_index in 0..count {
        let (start, end) = walk_record(&mut reader)?;
        let expected = reader.read_u32()?;
        let found = crc32fast::hash(&bytes[start..end]);
        if expected != found {
            return Err(Error::ChecksumMismatch {
                sample_index,
                offset: start,
                expected,
                found,
            });
        }
        maps.push(decode_terrain_record(&bytes[start..end])?);
    }
    if reader.pos != bytes.len() {
        return Err(Error::InvalidPayload(format!(
            "{} trailing bytes after last record",
            bytes.len() - reader.pos
        )));
    }
    Ok(maps)
}

pub fn read_terrain_container(path: impl AsRef<Path>) -> Result<Vec<HeightMap>> {
    read_terrain_container_bytes(&fs::read(path)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::SampleProvenance;

    /// A structurally valid sample whose float channels hold dyadic values,
    /// so the float32 narrowing on write is lossless.
    fn sample(rows: usize, cols: usize, tag: u64) -> DatasetSample {
        let scale = 1.0 / 64.0;
        let i_hm = Grid::from_fn(rows, cols, |i, j| {
            ((i * cols + j + tag as usize) % 65) as f64 * scale
        });
        let i_fm = Grid::from_fn(rows, cols, |i, j| (i as f64 - j as f64) * 0.25);
        let i_rm = Grid::from_fn(rows, cols, |i, j| ((i ^ j) % 64) as f64 * scale);
        let mut i_tx = ByteGrid::new(rows, cols, 0);
        i_tx[(rows / 2, cols / 3)] = 1;
        let i_hz = ByteGrid::new(rows, cols, (tag % 2) as u8);
        let i_km = ByteGrid::from_fn(rows, cols, |i, j| ((i + 2 * j) % 2) as u8);
        DatasetSample {
            i_hm,
            i_fm,
            i_tx,
            i_hz,
            i_km,
            i_rm,
            meta: SampleMeta {
                terrain_seed: tag,
                tx_row: rows / 2,
                tx_col: cols / 3,
                tx_height_above_ground_m: 2.0,
                rx_height_above_ground_m: 1.0,
                tx_power_dbm: 30.0,
                frequency_hz: if tag % 2 == 0 { 415.0e6 } else { 5.8e9 },
                clip_range_db: (-150.0, -50.0),
                cell_size_m: 2.0,
                elevation_min_m: -3.5,
                elevation_max_m: 12.25,
                k2_units: "1/m^2".to_string(),
                generator_version: env!("CARGO_PKG_VERSION").to_string(),
                provenance: SampleProvenance::EngineRendered,
                repair_method: None,
            },
        }
    }

    fn payload_offset(bytes: &[u8], channel: &[u8], occurrence: usize) -> usize {
        let mut seen = 0;
        for start in 0..bytes.len() - channel.len() {
            if &bytes[start..start + channel.len()] == channel {
                if seen == occurrence {
                    // name | u32 rows | u32 cols | u8 dtype, then payload
                    return start + channel.len() + 9;
                }
                seen += 1;
            }
        }
        panic!("channel marker not found");
    }

    #[test]
    fn round_trip_preserves_samples_and_bytes() {
        let samples: Vec<_> = (0..10).map(|t| sample(9, 7, t)).collect();
        let bytes = write_container_bytes(&samples).unwrap();
        let decoded = read_container_bytes(&bytes).unwrap();
        assert_eq!(decoded.len(), 10);
        for (a, b) in decoded.iter().zip(&samples) {
            assert_eq!(a, b);
        }
        let rewritten = write_container_bytes(&decoded).unwrap();
        assert_eq!(bytes, rewritten);
    }

    #[test]
    fn round_trip_through_file() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("set.lrdc");
        let samples: Vec<_> = (0..3).map(|t| sample(8, 8, t)).collect();
        write_container(&samples, &path).unwrap();
        let decoded = read_container(&path).unwrap();
        assert_eq!(decoded, samples);
        assert!(!path.with_extension("lrdc.tmp").exists());
    }

    #[test]
    fn empty_container_round_trips() {
        let bytes = write_container_bytes(&[]).unwrap();
        assert_eq!(bytes.len(), 10);
        assert_eq!(read_container_bytes(&bytes).unwrap(), Vec::new());
    }

    #[test]
    fn flipped_payload_byte_names_the_corrupted_record() {
        let samples: Vec<_> = (0..2).map(|t| sample(8, 8, t)).collect();
        let mut bytes = write_container_bytes(&samples).unwrap();
        let at = payload_offset(&bytes, b"I_RM", 0) + 5;
        bytes[at] ^= 0xff;
        match read_container_bytes(&bytes) {
            Err(Error::ChecksumMismatch { sample_index, .. }) => assert_eq!(sample_index, 0),
            other => panic!("expected checksum mismatch, got {other:?}"),
        }

        let mut bytes = write_container_bytes(&samples).unwrap();
        let at = payload_offset(&bytes, b"I_HM", 1) + 3;
        bytes[at] ^= 0x01;
        match read_container_bytes(&bytes) {
            Err(Error::ChecksumMismatch { sample_index, .. }) => assert_eq!(sample_index, 1),
            other => panic!("expected checksum mismatch, got {other:?}"),
        }
    }

    #[test]
    fn corrupted_metadata_is_a_checksum_error_not_a_parse_error() {
        let samples = vec![sample(8, 8, 0)];
        let mut bytes = write_container_bytes(&samples).unwrap();
        // Offset 14 is the first metadata JSON byte: 4 magic + 2 version +
        // 4 count + 4 metadata length.
        bytes[14] ^= 0x20;
        assert!(matches!(
            read_container_bytes(&bytes),
            Err(Error::ChecksumMismatch { sample_index: 0, .. })
        ));
    }

    #[test]
    fn bad_magic_is_rejected() {
        let mut bytes = write_container_bytes(&[sample(8, 8, 0)]).unwrap();
        bytes[0] = b'X';
        match read_container_bytes(&bytes) {
            Err(Error::BadMagic { found }) => assert_eq!(&found, b"XRDC"),
            other => panic!("expected bad magic, got {other:?}"),
        }
    }

    #[test]
    fn future_version_is_rejected() {
        let mut bytes = write_container_bytes(&[sample(8, 8, 0)]).unwrap();
        bytes[4..6].copy_from_slice(&2u16.to_le_bytes());
        assert!(matches!(
            read_container_bytes(&bytes),
            Err(Error::UnsupportedVersion { found: 2 })
        ));
    }

    #[test]
    fn truncation_reports_offset_and_need() {
        let bytes = write_container_bytes(&[sample(8, 8, 0)]).unwrap();
        let cut = &bytes[..bytes.len() - 7];
        match read_container_bytes(cut) {
            Err(Error::Truncated { offset, needed }) => {
                assert!(offset <= cut.len());
                assert!(needed > 0);
            }
            other => panic!("expected truncation, got {other:?}"),
        }
        match read_container_bytes(&bytes[..8]) {
            Err(Error::Truncated { .. }) => {}
            other => panic!("expected truncation, got {other:?}"),
        }
    }

    #[test]
    fn unknown_dtype_reports_code_and_offset() {
        let bytes = write_container_bytes(&[sample(8, 8, 0)]).unwrap();
        let dtype_at = payload_offset(&bytes, b"I_Tx", 0) - 1;
        let mut corrupt = bytes.clone();
        corrupt[dtype_at] = 9;
        match read_container_bytes(&corrupt) {
            Err(Error::UnknownDtype { code, offset }) => {
                assert_eq!(code, 9);
                assert_eq!(offset, dtype_at);
            }
            other => panic!("expected unknown dtype, got {other:?}"),
        }
    }

    #[test]
    fn trailing_bytes_are_rejected() {
        let mut bytes = write_container_bytes(&[sample(8, 8, 0)]).unwrap();
        bytes.push(0);
        assert!(matches!(
            read_container_bytes(&bytes),
            Err(Error::InvalidPayload(_))
        ));
    }

    #[test]
    fn invalid_sample_is_rejected_on_write() {
        let mut bad = sample(8, 8, 0);
        bad.i_tx[(0, 0)] = 1;
        assert!(matches!(
            write_container_bytes(&[bad]),
            Err(Error::SampleInvalid(_))
        ));
    }

    #[test]
    fn value_outside_f32_range_is_rejected_on_write() {
        let mut bad = sample(8, 8, 0);
        bad.i_fm[(2, 2)] = 1e60;
        assert!(matches!(
            write_container_bytes(&[bad]),
            Err(Error::NonFinite(_))
        ));
    }

    #[test]
    fn nan_payload_is_rejected_on_read() {
        let samples = vec![sample(8, 8, 0)];
        let mut bytes = write_container_bytes(&samples).unwrap();
        let at = payload_offset(&bytes, b"I_FM", 0);
        // Rewrite one float32 value to NaN, then fix up the record CRC so
        // the NaN check itself is exercised.
        bytes[at..at + 4].copy_from_slice(&f32::NAN.to_le_bytes());
        let record_start = 10;
        let record_end = bytes.len() - 4;
        let crc = crc32fast::hash(&bytes[record_start..record_end]);
        let crc_at = bytes.len() - 4;
        bytes[crc_at..].copy_from_slice(&crc.to_le_bytes());
        match read_container_bytes(&bytes) {
            Err(Error::SampleInvalid(msg)) => assert!(msg.contains("I_FM"), "{msg}"),
            other => panic!("expected sample-invalid, got {other:?}"),
        }
    }

    #[test]
    fn proptest_round_trip() {
        use proptest::prelude::*;
        let mut runner = proptest::test_runner::TestRunner::new(proptest::test_runner::Config {
            cases: 48,
            ..Default::default()
        });
        let strategy = (3usize..10, 3usize..10, 0u64..1000);
        runner
            .run(&strategy, |(rows, cols, tag)| {
                let s = sample(rows, cols, tag);
                let bytes = write_container_bytes(std::slice::from_ref(&s)).unwrap();
                let decoded = read_container_bytes(&bytes).unwrap();
                prop_assert_eq!(&decoded[0], &s);
                Ok(())
            })
            .unwrap();
    }
}
