//! 8-bit single-channel PNG codec for label rasters.
//!
//! Palette PNGs (the usual VOC annotation format) are read as raw palette
//! indices, not colors.

use std::io::Cursor;
use std::path::Path;

use png::{BitDepth, ColorType, Transformations};

use super::write_atomic;
use crate::error::{Error, Result};
use crate::maskgeom::LabelRaster;

pub fn encode_label_png(r: &LabelRaster) -> Vec<u8> {
    let mut out = Vec::new();
    {
        let mut enc = png::Encoder::new(&mut out, r.width(), r.height());
        enc.set_color(ColorType::Grayscale);
        enc.set_depth(BitDepth::Eight);
        let mut writer = enc.write_header().expect("writing to a Vec cannot fail");
        writer
            .write_image_data(r.as_slice())
            .expect("buffer size matches header");
    }
    out
}

pub fn decode_label_png(bytes: &[u8], path: &Path) -> Result<LabelRaster> {
    let err = |message: String| Error::Png {
        path: path.to_path_buf(),
        message,
    };
    let mut dec = png::Decoder::new(Cursor::new(bytes));
    dec.set_transformations(Transformations::IDENTITY);
    let mut reader = dec.read_info().map_err(|e| err(e.to_string()))?;
    let size = reader
        .output_buffer_size()
        .ok_or_else(|| err("image too large".into()))?;
    let mut buf = vec![0u8; size];
    let info = reader.next_frame(&mut buf).map_err(|e| err(e.to_string()))?;
    if info.bit_depth != BitDepth::Eight || !matches!(info.color_type, ColorType::Grayscale | ColorType::Indexed) {
        return Err(err(format!(
            "expected 8-bit grayscale or indexed, found {:?} {:?}",
            info.color_type, info.bit_depth
        )));
    }
    let (w, h) = (info.width as usize, info.height as usize);
    let labels = if info.line_size == w {
        buf.truncate(w * h);
        buf
    } else {
        buf.chunks(info.line_size)
            .take(h)
            .flat_map(|row| &row[..w])
            .copied()
            .collect()
    };
    LabelRaster::from_vec(info.width, info.height, labels)
}

pub fn read_label_png(path: &Path) -> Result<LabelRaster> {
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    decode_label_png(&bytes, path)
}

pub fn write_label_png(r: &LabelRaster, path: &Path) -> Result<()> {
    write_atomic(path, &encode_label_png(r))
}
