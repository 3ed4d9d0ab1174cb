//! Reference database on disk: a binary feature matrix plus a JSON shape
//! list, built from unoccluded training scenes.

use std::fs;
use std::io::{Read, Write};
use std::path::Path;

use nalgebra::Point2;
use serde::{Deserialize, Serialize};
use shr_core::geometry::NUM_FP;
use shr_core::spinit::ReferenceEntry;

use crate::HarnessError;

#[derive(Debug, Serialize, Deserialize)]
struct ShapeList {
    feature_len: usize,
    /// Ground-truth FP coordinates per entry, in the source scene's map frame.
    shapes: Vec<Vec<[f64; 2]>>,
}

pub fn save_refdb(dir: &Path, entries: &[ReferenceEntry]) -> Result<(), HarnessError> {
    fs::create_dir_all(dir)?;
    let feature_len = entries.first().map(|e| e.feature.len()).unwrap_or(0);
    let mut blob = Vec::with_capacity(entries.len() * feature_len * 4);
    for e in entries {
        debug_assert_eq!(e.feature.len(), feature_len);
        for &v in &e.feature {
            blob.extend_from_slice(&v.to_le_bytes());
        }
    }
    fs::File::create(dir.join("features.bin"))?.write_all(&blob)?;
    let list = ShapeList {
        feature_len,
        shapes: entries
            .iter()
            .map(|e| e.shape.iter().map(|p| [p.x, p.y]).collect())
            .collect(),
    };
    fs::write(dir.join("shapes.json"), serde_json::to_string(&list)?)?;
    Ok(())
}

pub fn load_refdb(dir: &Path) -> Result<Vec<ReferenceEntry>, HarnessError> {
    let text = fs::read_to_string(dir.join("shapes.json"))?;
    let list: ShapeList = serde_json::from_str(&text)?;
    let mut blob = Vec::new();
    fs::File::open(dir.join("features.bin"))?.read_to_end(&mut blob)?;
    let expect = list.shapes.len() * list.feature_len * 4;
    if blob.len() != expect {
        return Err(HarnessError::Format(format!(
            "feature matrix: expected {expect} bytes, found {}",
            blob.len()
        )));
    }
    let mut entries = Vec::with_capacity(list.shapes.len());
    let mut off = 0;
    for shape in &list.shapes {
        if shape.len() != NUM_FP {
            return Err(HarnessError::Format(format!(
                "reference shape has {} points, expected {NUM_FP}",
                shape.len()
            )));
        }
        let mut feature = Vec::with_capacity(list.feature_len);
        for _ in 0..list.feature_len {
            feature.push(f32::from_le_bytes(blob[off..off + 4].try_into().unwrap()));
            off += 4;
        }
        entries.push(ReferenceEntry {
            feature,
            shape: shape.iter().map(|p| Point2::new(p[0], p[1])).collect(),
        });
    }
    Ok(entries)
}
