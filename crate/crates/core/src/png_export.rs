//! PNG visualization of pipeline artifacts.
//!
//! Heightmaps go out as 16-bit grayscale with the elevation range recorded
//! in text chunks, normalized maps as 8-bit grayscale, and binary masks as
//! 1-bit packed grayscale.

use std::fs::File;
use std::io::BufWriter;
use std::path::Path;

use crate::error::{Error, Result};
use crate::grid::{ByteGrid, Grid};
use crate::terrain::HeightMap;

fn png_err(e: png::EncodingError) -> Error {
    match e {
        png::EncodingError::IoError(io) => Error::Io(io),
        other => Error::invalid(format!("png encoding: {other}")),
    }
}

fn grayscale_encoder(
    file: BufWriter<File>,
    rows: usize,
    cols: usize,
    depth: png::BitDepth,
) -> png::Encoder<'static, BufWriter<File>> {
    let mut enc = png::Encoder::new(file, cols as u32, rows as u32);
    enc.set_color(png::ColorType::Grayscale);
    enc.set_depth(depth);
    enc
}

/// 16-bit grayscale, min-max scaled. The elevation range and cell size are
/// stored in tEXt chunks so the image alone suffices to recover meters.
pub fn write_heightmap_png(map: &HeightMap, path: impl AsRef<Path>) -> Result<()> {
    let h = map.elevations();
    let (rows, cols) = h.dims();
    let (min, max) = h.min_max();
    let span = max - min;
    let mut data = Vec::with_capacity(rows * cols * 2);
    for &v in h.iter() {
        let q = if span > 0.0 {
            ((v - min) / span * 65535.0).round() as u16
        } else {
            0
        };
        data.extend_from_slice(&q.to_be_bytes());
    }

    let file = BufWriter::new(File::create(path)?);
    let mut enc = grayscale_encoder(file, rows, cols, png::BitDepth::Sixteen);
    for (key, value) in [
        ("elevation_min_m", min),
        ("elevation_max_m", max),
        ("cell_size_m", map.cell_size_m()),
    ] {
        enc.add_text_chunk(key.to_string(), format!("{value}"))
            .map_err(png_err)?;
    }
    let mut writer = enc.write_header().map_err(png_err)?;
    writer.write_image_data(&data).map_err(png_err)?;
    Ok(())
}

/// 8-bit grayscale of a [0, 1] grid. Values are clamped before quantization.
pub fn write_unit_interval_png(grid: &Grid, path: impl AsRef<Path>) -> Result<()> {
    if !grid.all_finite() {
        return Err(Error::NonFinite("png source grid"));
    }
    let (rows, cols) = grid.dims();
    let data: Vec<u8> = grid
        .iter()
        .map(|&v| (v.clamp(0.0, 1.0) * 255.0).round() as u8)
        .collect();
    let file = BufWriter::new(File::create(path)?);
    let enc = grayscale_encoder(file, rows, cols, png::BitDepth::Eight);
    let mut writer = enc.write_header().map_err(png_err)?;
    writer.write_image_data(&data).map_err(png_err)?;
    Ok(())
}

/// 1-bit grayscale of a binary mask, rows packed MSB-first and padded to a
/// whole byte.
pub fn write_binary_png(grid: &ByteGrid, path: impl AsRef<Path>) -> Result<()> {
    if !grid.is_binary() {
        return Err(Error::invalid("binary png source holds values other than 0 and 1"));
    }
    let (rows, cols) = grid.dims();
    let stride = cols.div_ceil(8);
    let mut data = vec![0u8; rows * stride];
    for i in 0..rows {
        for j in 0..cols {
            if grid[(i, j)] == 1 {
                data[i * stride + j / 8] |= 0x80 >> (j % 8);
            }
        }
    }
    let file = BufWriter::new(File::create(path)?);
    let enc = grayscale_encoder(file, rows, cols, png::BitDepth::One);
    let mut writer = enc.write_header().map_err(png_err)?;
    writer.write_image_data(&data).map_err(png_err)?;
    Ok(())
}
