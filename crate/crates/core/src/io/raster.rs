//! PGM/PNG rasters: 16-bit depth maps and 8-bit debug renders.

use std::io::Cursor;
use std::path::Path;

use image::codecs::pnm::{PnmEncoder, PnmSubtype, SampleEncoding};
use image::{ImageBuffer, ImageFormat, Luma};

use crate::density::DensityField;
use crate::error::{Error, Result};
use crate::scene::{DepthMap, GridShape, Region, RegionMask};

fn dims(shape: GridShape) -> Result<(u32, u32)> {
    let w = u32::try_from(shape.width).map_err(|_| Error::Format("image too wide".into()))?;
    let h = u32::try_from(shape.height).map_err(|_| Error::Format("image too tall".into()))?;
    Ok((w, h))
}

/// Depth from a grayscale PGM; samples are scaled by the image's maxval.
pub fn decode_depth_pgm(bytes: &[u8]) -> Result<DepthMap> {
    let img = image::ImageReader::with_format(Cursor::new(bytes), ImageFormat::Pnm)
        .decode()?
        .into_luma16();
    let shape = GridShape::new(img.width() as usize, img.height() as usize)?;
    let values = img.pixels().map(|p| p.0[0] as f64 / 65535.0).collect();
    DepthMap::new(shape, values)
}

/// Binary 16-bit PGM (maxval 65535, big-endian samples). Written by hand:
/// the pnm encoder only emits 16-bit gray as PAM.
pub fn encode_depth_pgm16(depth: &DepthMap) -> Result<Vec<u8>> {
    let (w, h) = dims(depth.shape())?;
    let mut out = format!("P5\n{w} {h}\n65535\n").into_bytes();
    out.reserve(2 * depth.values().len());
    for v in depth.values() {
        out.extend_from_slice(&((v * 65535.0).round() as u16).to_be_bytes());
    }
    Ok(out)
}

fn save_gray8(path: &Path, shape: GridShape, samples: Vec<u8>) -> Result<()> {
    let (w, h) = dims(shape)?;
    let img: ImageBuffer<Luma<u8>, Vec<u8>> =
        ImageBuffer::from_raw(w, h, samples).expect("buffer sized from shape");
    let is_png = path
        .extension()
        .is_some_and(|e| e.eq_ignore_ascii_case("png"));
    let mut out = Cursor::new(Vec::new());
    if is_png {
        img.write_to(&mut out, ImageFormat::Png)?;
    } else {
        img.write_with_encoder(
            PnmEncoder::new(&mut out).with_subtype(PnmSubtype::Graymap(SampleEncoding::Binary)),
        )?;
    }
    super::write_bytes(path, out.get_ref())
}

/// Far pixels white, Near black.
pub fn write_mask_pgm(path: &Path, mask: &RegionMask) -> Result<()> {
    let samples = mask
        .labels()
        .iter()
        .map(|&l| if l == Region::Far { 255 } else { 0 })
        .collect();
    save_gray8(path, mask.shape(), samples)
}

/// Cluster ids spread over the gray range so neighbors differ visibly.
pub fn write_cluster_pgm(path: &Path, shape: GridShape, assignments: &[usize]) -> Result<()> {
    let samples = assignments
        .iter()
        .map(|&a| (a.wrapping_mul(97) % 251) as u8)
        .collect();
    save_gray8(path, shape, samples)
}

/// Heat map scaled linearly so the maximum density maps to 255. PNG when
/// the extension says so, binary PGM otherwise.
pub fn write_heatmap(path: &Path, field: &DensityField) -> Result<()> {
    let max = field.max_value();
    let samples = field
        .values()
        .iter()
        .map(|&v| if max > 0.0 { (v / max * 255.0).round() as u8 } else { 0 })
        .collect();
    save_gray8(path, field.shape(), samples)
}
