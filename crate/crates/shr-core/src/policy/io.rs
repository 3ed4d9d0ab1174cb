//! Policy file format: one JSON header line (shapes, width, init seed),
//! then the parameter values as little-endian f32, tensor by tensor in
//! column-major order.

use std::fs;
use std::io::{Read, Write};
use std::path::Path;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use super::{PolicyError, PolicyParams, HIDDEN, NUM_SLOTS, SLOT_SHAPES};

const FORMAT: &str = "shr-policy-v1";

#[derive(Debug, Serialize, Deserialize)]
struct Header {
    format: String,
    hidden: usize,
    shapes: Vec<[usize; 2]>,
    init_seed: u64,
}

pub fn save_policy(params: &PolicyParams, path: &Path) -> Result<(), PolicyError> {
    let header = Header {
        format: FORMAT.into(),
        hidden: HIDDEN,
        shapes: SLOT_SHAPES.iter().map(|&(r, c)| [r, c]).collect(),
        init_seed: params.init_seed,
    };
    let mut buf = serde_json::to_string(&header)
        .expect("header serialization cannot fail")
        .into_bytes();
    buf.push(b'\n');
    for t in params.tensors() {
        for &v in t.iter() {
            buf.extend_from_slice(&(v as f32).to_le_bytes());
        }
    }
    let mut f = fs::File::create(path)?;
    f.write_all(&buf)?;
    Ok(())
}

pub fn load_policy(path: &Path) -> Result<PolicyParams, PolicyError> {
    let mut buf = Vec::new();
    fs::File::open(path)?.read_to_end(&mut buf)?;
    let newline = buf
        .iter()
        .position(|&b| b == b'\n')
        .ok_or_else(|| PolicyError::CorruptFile("missing header line".into()))?;
    let header: Header = serde_json::from_slice(&buf[..newline])
        .map_err(|e| PolicyError::CorruptFile(format!("bad header: {e}")))?;
    if header.format != FORMAT {
        return Err(PolicyError::CorruptFile(format!("unknown format {}", header.format)));
    }
    let expected: Vec<[usize; 2]> = SLOT_SHAPES.iter().map(|&(r, c)| [r, c]).collect();
    if header.hidden != HIDDEN || header.shapes != expected {
        return Err(PolicyError::ShapeMismatch(format!(
            "file declares hidden={} with {} tensors",
            header.hidden,
            header.shapes.len()
        )));
    }

    let blob = &buf[newline + 1..];
    let total: usize = SLOT_SHAPES.iter().map(|(r, c)| r * c).sum();
    if blob.len() != total * 4 {
        return Err(PolicyError::CorruptFile(format!(
            "expected {} parameter bytes, found {}",
            total * 4,
            blob.len()
        )));
    }
    let mut tensors = Vec::with_capacity(NUM_SLOTS);
    let mut off = 0;
    for &(rows, cols) in &SLOT_SHAPES {
        let mut m = DMatrix::zeros(rows, cols);
        for v in m.iter_mut() {
            *v = f32::from_le_bytes(blob[off..off + 4].try_into().unwrap()) as f64;
            off += 4;
        }
        tensors.push(m);
    }
    Ok(PolicyParams::from_tensors(tensors, header.init_seed))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tmp(name: &str) -> std::path::PathBuf {
        std::env::temp_dir().join(format!("shr-policy-{}-{name}", std::process::id()))
    }

    #[test]
    fn round_trip_is_lossless() {
        let params = PolicyParams::init(21);
        let path = tmp("rt.bin");
        save_policy(&params, &path).unwrap();
        let back = load_policy(&path).unwrap();
        assert_eq!(params, back);
        fs::remove_file(&path).ok();
    }

    #[test]
    fn truncated_file_is_corrupt() {
        let params = PolicyParams::init(22);
        let path = tmp("trunc.bin");
        save_policy(&params, &path).unwrap();
        let bytes = fs::read(&path).unwrap();
        fs::write(&path, &bytes[..bytes.len() - 10]).unwrap();
        assert!(matches!(load_policy(&path), Err(PolicyError::CorruptFile(_))));
        fs::remove_file(&path).ok();
    }

    #[test]
    fn wrong_shape_is_rejected() {
        let params = PolicyParams::init(23);
        let path = tmp("shape.bin");
        save_policy(&params, &path).unwrap();
        let bytes = fs::read(&path).unwrap();
        let newline = bytes.iter().position(|&b| b == b'\n').unwrap();
        let mut header: serde_json::Value = serde_json::from_slice(&bytes[..newline]).unwrap();
        header["shapes"][0] = serde_json::json!([64, 500]);
        let mut out = serde_json::to_vec(&header).unwrap();
        out.push(b'\n');
        out.extend_from_slice(&bytes[newline + 1..]);
        fs::write(&path, out).unwrap();
        assert!(matches!(load_policy(&path), Err(PolicyError::ShapeMismatch(_))));
        fs::remove_file(&path).ok();
    }
}
