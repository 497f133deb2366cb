//! Little-endian grid formats.
//!
//! | format  | header                                              | payload                      |
//! |---------|-----------------------------------------------------|------------------------------|
//! | depth   | `"DIGD"`, u32 width, u32 height, u32 reserved       | width*height f32             |
//! | density | `"DIGF"`, u32 width, u32 height, u64 reserved       | width*height f32             |
//! | tensor  | `"DIGY"`, u32 S, u32 B, u32 C, u32 width, u32 height | S*S*(B*5+C) f32, cell-major |

use crate::density::DensityField;
use crate::detect::{DetectorGridSpec, GridPrediction};
use crate::error::{Error, Result};
use crate::scene::{DepthMap, GridShape};

pub const DEPTH_MAGIC: &[u8; 4] = b"DIGD";
pub const DENSITY_MAGIC: &[u8; 4] = b"DIGF";
pub const TENSOR_MAGIC: &[u8; 4] = b"DIGY";

struct Reader<'a> {
    buf: &'a [u8],
    pos: usize,
    what: &'static str,
}

impl<'a> Reader<'a> {
    fn new(buf: &'a [u8], magic: &[u8; 4], what: &'static str) -> Result<Self> {
        if buf.len() < 4 || &buf[..4] != magic {
            return Err(Error::Format(format!(
                "{what}: bad magic, expected {:?}",
                String::from_utf8_lossy(magic)
            )));
        }
        Ok(Self { buf, pos: 4, what })
    }

    fn take<const N: usize>(&mut self) -> Result<[u8; N]> {
        let end = self.pos + N;
        let bytes = self
            .buf
            .get(self.pos..end)
            .ok_or_else(|| Error::Format(format!("{}: truncated header", self.what)))?;
        self.pos = end;
        Ok(bytes.try_into().expect("slice length checked"))
    }

    fn u32(&mut self) -> Result<u32> {
        self.take::<4>().map(u32::from_le_bytes)
    }

    fn u64(&mut self) -> Result<u64> {
        self.take::<8>().map(u64::from_le_bytes)
    }

    fn shape(&mut self) -> Result<GridShape> {
        let w = self.u32()? as usize;
        let h = self.u32()? as usize;
        GridShape::new(w, h).map_err(|e| Error::Format(format!("{}: {e}", self.what)))
    }

    fn floats(&self, count: usize) -> Result<Vec<f32>> {
        let payload = &self.buf[self.pos..];
        if payload.len() != count * 4 {
            return Err(Error::Format(format!(
                "{}: expected {count} floats ({} bytes) after the header, found {} bytes",
                self.what,
                count * 4,
                payload.len()
            )));
        }
        Ok(payload
            .chunks_exact(4)
            .map(|c| f32::from_le_bytes(c.try_into().expect("chunk of 4")))
            .collect())
    }
}

fn push_u32(out: &mut Vec<u8>, v: usize) -> Result<()> {
    let v = u32::try_from(v).map_err(|_| Error::Format(format!("{v} does not fit a u32 header field")))?;
    out.extend_from_slice(&v.to_le_bytes());
    Ok(())
}

fn push_floats(out: &mut Vec<u8>, values: impl Iterator<Item = f32>) {
    for v in values {
        out.extend_from_slice(&v.to_le_bytes());
    }
}

pub fn encode_depth(depth: &DepthMap) -> Result<Vec<u8>> {
    let shape = depth.shape();
    let mut out = Vec::with_capacity(16 + 4 * shape.len());
    out.extend_from_slice(DEPTH_MAGIC);
    push_u32(&mut out, shape.width)?;
    push_u32(&mut out, shape.height)?;
    push_u32(&mut out, 0)?;
    push_floats(&mut out, depth.values().iter().map(|&v| v as f32));
    Ok(out)
}

pub fn decode_depth(buf: &[u8]) -> Result<DepthMap> {
    let mut r = Reader::new(buf, DEPTH_MAGIC, "depth map")?;
    let shape = r.shape()?;
    let _reserved = r.u32()?;
    let values = r.floats(shape.len())?;
    DepthMap::new(shape, values.into_iter().map(f64::from).collect())
}

pub fn encode_density(field: &DensityField) -> Result<Vec<u8>> {
    let shape = field.shape();
    let mut out = Vec::with_capacity(20 + 4 * shape.len());
    out.extend_from_slice(DENSITY_MAGIC);
    push_u32(&mut out, shape.width)?;
    push_u32(&mut out, shape.height)?;
    out.extend_from_slice(&0u64.to_le_bytes());
    push_floats(&mut out, field.values().iter().map(|&v| v as f32));
    Ok(out)
}

pub fn decode_density(buf: &[u8]) -> Result<DensityField> {
    let mut r = Reader::new(buf, DENSITY_MAGIC, "density field")?;
    let shape = r.shape()?;
    let _reserved = r.u64()?;
    let values = r.floats(shape.len())?;
    DensityField::new(shape, values.into_iter().map(f64::from).collect())
        .map_err(|e| Error::Format(format!("density field: {e}")))
}

pub fn encode_tensor(pred: &GridPrediction) -> Result<Vec<u8>> {
    let spec = pred.spec;
    let mut out = Vec::with_capacity(24 + 4 * pred.values.len());
    out.extend_from_slice(TENSOR_MAGIC);
    for v in [spec.s, spec.b, spec.c, pred.shape.width, pred.shape.height] {
        push_u32(&mut out, v)?;
    }
    push_floats(&mut out, pred.values.iter().copied());
    Ok(out)
}

pub fn decode_tensor(buf: &[u8]) -> Result<GridPrediction> {
    let mut r = Reader::new(buf, TENSOR_MAGIC, "prediction tensor")?;
    let (s, b, c) = (r.u32()? as usize, r.u32()? as usize, r.u32()? as usize);
    let spec = DetectorGridSpec::new(s, b, c)?;
    let shape = r.shape()?;
    let values = r.floats(spec.tensor_len())?;
    GridPrediction::new(spec, shape, values)
}
