//! Versioned binary checkpoints for the generator/discriminator pair.
//!
//! Layout (little-endian): magic `HQTC`, version u32, then the seven size
//! fields (n, d_z, d_1, d_2, d_h, h_1, h_2) as u64, then every parameter
//! tensor in the fixed enumeration order — u64 rank, u64 dims, raw f64
//! data. Floats are stored as raw bits, so a save/load round-trip is
//! bit-exact.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use crate::error::{HqtlpError, Result};
use crate::model::{DiscriminatorParams, GeneratorParams, GruParams, ModelConfig};
use crate::tensor::Tensor;

const MAGIC: &[u8; 4] = b"HQTC";
const VERSION: u32 = 1;

pub fn save_checkpoint(path: &Path, g: &GeneratorParams, d: &DiscriminatorParams) -> Result<()> {
    let file = File::create(path)?;
    let mut out = BufWriter::new(file);
    out.write_all(MAGIC)?;
    out.write_all(&VERSION.to_le_bytes())?;
    for dim in [g.n, g.d_z, g.d_1, g.d_2, g.d_h, d.w1.cols(), d.w2.cols()] {
        out.write_all(&(dim as u64).to_le_bytes())?;
    }
    for t in g.tensors().into_iter().chain(d.tensors()) {
        write_tensor(&mut out, t)?;
    }
    out.flush()?;
    Ok(())
}

pub fn load_checkpoint(path: &Path) -> Result<(GeneratorParams, DiscriminatorParams)> {
    let file = File::open(path)?;
    let mut input = BufReader::new(file);

    let mut magic = [0u8; 4];
    input.read_exact(&mut magic)?;
    if &magic != MAGIC {
        return Err(HqtlpError::Checkpoint("bad magic bytes".to_string()));
    }
    let version = read_u32(&mut input)?;
    if version != VERSION {
        return Err(HqtlpError::Checkpoint(format!(
            "unsupported version {version}, expected {VERSION}"
        )));
    }
    let n = read_u64(&mut input)? as usize;
    let d_z = read_u64(&mut input)? as usize;
    let d_1 = read_u64(&mut input)? as usize;
    let d_2 = read_u64(&mut input)? as usize;
    let d_h = read_u64(&mut input)? as usize;
    let h_1 = read_u64(&mut input)? as usize;
    let h_2 = read_u64(&mut input)? as usize;

    // Materialize zero-shaped parameters, then fill each tensor in the
    // shared enumeration order, validating shapes as we go.
    let cfg = ModelConfig { d_z, d_1, d_2, d_h, h_1, h_2 };
    let mut g = zero_generator(n, &cfg);
    let mut d = zero_discriminator(n, &cfg);
    for t in g.tensors_mut().into_iter().chain(d.tensors_mut()) {
        *t = read_tensor(&mut input, t.shape())?;
    }
    Ok((g, d))
}

fn zero_generator(n: usize, cfg: &ModelConfig) -> GeneratorParams {
    let m = crate::dyngraph::pair_count(n);
    GeneratorParams {
        n,
        d_z: cfg.d_z,
        d_1: cfg.d_1,
        d_2: cfg.d_2,
        d_h: cfg.d_h,
        gcn1: Tensor::zeros(&[cfg.d_z, cfg.d_1]),
        gcn2: Tensor::zeros(&[cfg.d_1, cfg.d_2]),
        gru: GruParams::zeros(n * cfg.d_2, cfg.d_h),
        fc_w: Tensor::zeros(&[cfg.d_h, m]),
        fc_b: Tensor::zeros(&[1, m]),
    }
}

fn zero_discriminator(n: usize, cfg: &ModelConfig) -> DiscriminatorParams {
    let m = crate::dyngraph::pair_count(n);
    DiscriminatorParams {
        n,
        w1: Tensor::zeros(&[m, cfg.h_1]),
        b1: Tensor::zeros(&[1, cfg.h_1]),
        w2: Tensor::zeros(&[cfg.h_1, cfg.h_2]),
        b2: Tensor::zeros(&[1, cfg.h_2]),
        w3: Tensor::zeros(&[cfg.h_2, 1]),
        b3: Tensor::zeros(&[1, 1]),
    }
}

fn write_tensor<W: Write>(out: &mut W, t: &Tensor) -> Result<()> {
    out.write_all(&(t.shape().len() as u64).to_le_bytes())?;
    for &d in t.shape() {
        out.write_all(&(d as u64).to_le_bytes())?;
    }
    for &v in t.data() {
        out.write_all(&v.to_le_bytes())?;
    }
    Ok(())
}

fn read_tensor<R: Read>(input: &mut R, expect_shape: &[usize]) -> Result<Tensor> {
    let rank = read_u64(input)? as usize;
    if rank > 8 {
        return Err(HqtlpError::Checkpoint(format!("implausible tensor rank {rank}")));
    }
    let mut shape = Vec::with_capacity(rank);
    for _ in 0..rank {
        shape.push(read_u64(input)? as usize);
    }
    if shape != expect_shape {
        return Err(HqtlpError::Checkpoint(format!(
            "tensor shape {shape:?} does not match expected {expect_shape:?}"
        )));
    }
    let numel: usize = shape.iter().product();
    let mut data = Vec::with_capacity(numel);
    let mut buf = [0u8; 8];
    for _ in 0..numel {
        input.read_exact(&mut buf)?;
        data.push(f64::from_le_bytes(buf));
    }
    Ok(Tensor::new(shape, data))
}

fn read_u32<R: Read>(input: &mut R) -> Result<u32> {
    let mut buf = [0u8; 4];
    input.read_exact(&mut buf)?;
    Ok(u32::from_le_bytes(buf))
}

fn read_u64<R: Read>(input: &mut R) -> Result<u64> {
    let mut buf = [0u8; 8];
    input.read_exact(&mut buf)?;
    Ok(u64::from_le_bytes(buf))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn roundtrip_is_bit_exact() {
        let cfg = ModelConfig { d_z: 3, d_1: 5, d_2: 4, d_h: 6, h_1: 7, h_2: 3 };
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        let g = GeneratorParams::init(6, &cfg, &mut rng);
        let d = DiscriminatorParams::init(6, &cfg, &mut rng);

        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("model.ckpt");
        save_checkpoint(&path, &g, &d).unwrap();
        let (g2, d2) = load_checkpoint(&path).unwrap();
        assert_eq!(g, g2);
        assert_eq!(d, d2);
    }

    #[test]
    fn rejects_corrupted_magic() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("bad.ckpt");
        std::fs::write(&path, b"NOPE0000").unwrap();
        assert!(matches!(load_checkpoint(&path), Err(HqtlpError::Checkpoint(_))));
    }

    #[test]
    fn rejects_truncated_file() {
        let cfg = ModelConfig { d_z: 2, d_1: 2, d_2: 2, d_h: 2, h_1: 2, h_2: 2 };
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let g = GeneratorParams::init(4, &cfg, &mut rng);
        let d = DiscriminatorParams::init(4, &cfg, &mut rng);
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("trunc.ckpt");
        save_checkpoint(&path, &g, &d).unwrap();
        let bytes = std::fs::read(&path).unwrap();
        std::fs::write(&path, &bytes[..bytes.len() / 2]).unwrap();
        assert!(load_checkpoint(&path).is_err());
    }
}
