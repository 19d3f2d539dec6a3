//! Binary model format, all integers and floats little-endian:
//!
//! ```text
//! "SBCA-MLP1"            9 bytes
//! n                      u32, number of layer dims
//! d_0 .. d_{n-1}         u32 each
//! per layer k:
//!   weights              f32 x d_k * d_{k+1}, row-major [in, out]
//!   bias                 f32 x d_{k+1}
//! ```

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use ndarray::{Array1, Array2};

use super::{Layer, MlpError, MlpModel, Result};

pub const MODEL_MAGIC: &[u8; 9] = b"SBCA-MLP1";

/// Upper bound on a single layer dimension accepted from a file.
const MAX_DIM: u32 = 1 << 20;

pub fn write_model<W: Write>(model: &MlpModel, mut w: W) -> Result<()> {
    w.write_all(MODEL_MAGIC)?;
    let dims = model.layer_dims();
    w.write_all(&(dims.len() as u32).to_le_bytes())?;
    for &d in dims {
        w.write_all(&(d as u32).to_le_bytes())?;
    }
    for layer in model.layers() {
        for v in layer.weights.iter() {
            w.write_all(&v.to_le_bytes())?;
        }
        for v in layer.bias.iter() {
            w.write_all(&v.to_le_bytes())?;
        }
    }
    Ok(())
}

pub fn save_model(model: &MlpModel, path: impl AsRef<Path>) -> Result<()> {
    let mut out = BufWriter::new(File::create(path)?);
    write_model(model, &mut out)?;
    out.flush()?;
    Ok(())
}

fn read_exact<R: Read>(r: &mut R, buf: &mut [u8], what: &str) -> Result<()> {
    r.read_exact(buf).map_err(|e| {
        if e.kind() == std::io::ErrorKind::UnexpectedEof {
            MlpError::Truncated(what.to_string())
        } else {
            MlpError::Io(e)
        }
    })
}

fn read_u32<R: Read>(r: &mut R, what: &str) -> Result<u32> {
    let mut b = [0u8; 4];
    read_exact(r, &mut b, what)?;
    Ok(u32::from_le_bytes(b))
}

fn read_f32s<R: Read>(r: &mut R, n: usize, what: &str) -> Result<Vec<f32>> {
    let mut bytes = vec![0u8; n * 4];
    read_exact(r, &mut bytes, what)?;
    Ok(bytes
        .chunks_exact(4)
        .map(|c| f32::from_le_bytes([c[0], c[1], c[2], c[3]]))
        .collect())
}

pub fn read_model<R: Read>(mut r: R) -> Result<MlpModel> {
    let mut magic = [0u8; 9];
    read_exact(&mut r, &mut magic, "magic")?;
    if &magic != MODEL_MAGIC {
        return Err(MlpError::BadMagic);
    }
    let n = read_u32(&mut r, "layer count")?;
    if !(2..=1024).contains(&n) {
        return Err(MlpError::InvalidDims(vec![n as usize]));
    }
    let mut dims = Vec::with_capacity(n as usize);
    for _ in 0..n {
        let d = read_u32(&mut r, "layer dims")?;
        if d == 0 || d > MAX_DIM {
            return Err(MlpError::InvalidDims(vec![d as usize]));
        }
        dims.push(d as usize);
    }
    let mut layers = Vec::with_capacity(dims.len() - 1);
    for (k, d) in dims.windows(2).enumerate() {
        let w = read_f32s(&mut r, d[0] * d[1], &format!("weights of layer {k}"))?;
        let b = read_f32s(&mut r, d[1], &format!("bias of layer {k}"))?;
        layers.push(Layer {
            weights: Array2::from_shape_vec((d[0], d[1]), w).expect("length checked"),
            bias: Array1::from_vec(b),
        });
    }
    MlpModel::from_layers(layers)
}

pub fn load_model(path: impl AsRef<Path>) -> Result<MlpModel> {
    read_model(BufReader::new(File::open(path)?))
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::Array2;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn model() -> MlpModel {
        MlpModel::init(&[5, 6, 1], &mut ChaCha8Rng::seed_from_u64(12)).unwrap()
    }

    #[test]
    fn layout_is_as_documented() {
        let m = model();
        let mut bytes = Vec::new();
        write_model(&m, &mut bytes).unwrap();
        assert_eq!(&bytes[..9], b"SBCA-MLP1");
        assert_eq!(u32::from_le_bytes(bytes[9..13].try_into().unwrap()), 3);
        assert_eq!(u32::from_le_bytes(bytes[13..17].try_into().unwrap()), 5);
        assert_eq!(u32::from_le_bytes(bytes[21..25].try_into().unwrap()), 1);
        let first = f32::from_le_bytes(bytes[25..29].try_into().unwrap());
        assert_eq!(first, m.layers()[0].weights[[0, 0]]);
        let second = f32::from_le_bytes(bytes[29..33].try_into().unwrap());
        assert_eq!(second, m.layers()[0].weights[[0, 1]]);
        assert_eq!(bytes.len(), 25 + 4 * m.parameter_count());
    }

    #[test]
    fn round_trip_is_bit_exact() {
        let m = model();
        let mut bytes = Vec::new();
        write_model(&m, &mut bytes).unwrap();
        let back = read_model(bytes.as_slice()).unwrap();
        assert_eq!(back, m);
        let x = Array2::from_shape_fn((3, 5), |(i, j)| (i * 5 + j) as f32 / 15.0);
        assert_eq!(back.forward(x.view()).unwrap(), m.forward(x.view()).unwrap());
    }

    #[test]
    fn bad_magic_and_truncation() {
        let mut bytes = Vec::new();
        write_model(&model(), &mut bytes).unwrap();
        let mut wrong = bytes.clone();
        wrong[0] = b'X';
        assert!(matches!(read_model(wrong.as_slice()), Err(MlpError::BadMagic)));
        let cut = &bytes[..bytes.len() - 3];
        assert!(matches!(read_model(cut), Err(MlpError::Truncated(_))));
        assert!(matches!(read_model(&bytes[..4]), Err(MlpError::Truncated(_))));
    }
}
