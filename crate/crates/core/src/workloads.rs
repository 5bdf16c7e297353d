//! Benchmark shape sets: the ResNet50 v1.5 im2col GEMMs (batch 128) and
//! square sweeps.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::types::Dims;

/// One im2col GEMM of a ResNet50 layer type.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct LayerShape {
    pub id: usize,
    pub m: usize,
    pub n: usize,
    pub k: usize,
}

impl LayerShape {
    pub const fn new(id: usize, m: usize, n: usize, k: usize) -> Self {
        LayerShape { id, m, n, k }
    }

    pub fn dims(&self) -> Dims {
        Dims {
            m: self.m,
            n: self.n,
            k: self.k,
        }
    }
}

const RESNET50: [LayerShape; 20] = [
    LayerShape::new(1, 1605632, 64, 147),
    LayerShape::new(2, 401408, 64, 64),
    LayerShape::new(3, 401408, 64, 576),
    LayerShape::new(4, 401408, 256, 64),
    LayerShape::new(5, 401408, 64, 256),
    LayerShape::new(6, 401408, 128, 256),
    LayerShape::new(7, 100352, 128, 1152),
    LayerShape::new(8, 100352, 512, 128),
    LayerShape::new(9, 100352, 512, 256),
    LayerShape::new(10, 100352, 128, 512),
    LayerShape::new(11, 100352, 256, 512),
    LayerShape::new(12, 25088, 256, 2304),
    LayerShape::new(13, 25088, 1024, 256),
    LayerShape::new(14, 25088, 1024, 512),
    LayerShape::new(15, 25088, 256, 1024),
    LayerShape::new(16, 25088, 512, 1024),
    LayerShape::new(17, 6272, 512, 4608),
    LayerShape::new(18, 6272, 2048, 512),
    LayerShape::new(19, 6272, 2048, 1024),
    LayerShape::new(20, 6272, 512, 2048),
];

/// The 20 layer types, in id order.
pub fn resnet50_shapes() -> Vec<LayerShape> {
    RESNET50.to_vec()
}

/// Shrinks the batch-sized dimension `m` by `divisor`, rounding up and
/// never below 1. `n` and `k` are kept.
pub fn scaled(shape: LayerShape, divisor: usize) -> Dims {
    assert!(divisor >= 1, "divisor must be at least 1");
    Dims {
        m: shape.m.div_ceil(divisor).max(1),
        n: shape.n,
        k: shape.k,
    }
}

/// Square problems `s×s×s` for `s` in `start..=end` stepping by `step`.
pub fn square_sweep(start: usize, end: usize, step: usize) -> Vec<LayerShape> {
    (start..=end)
        .step_by(step.max(1))
        .enumerate()
        .map(|(i, s)| LayerShape::new(i + 1, s, s, s))
        .collect()
}

/// Reads shapes from CSV text with the header `id,m,n,k`.
pub fn parse_csv(text: &str) -> Result<Vec<LayerShape>> {
    let mut lines = text
        .lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty());
    let (_, header) = lines.next().ok_or(Error::Parse {
        line: 1,
        msg: "empty workload file".into(),
    })?;
    let cols: Vec<&str> = header.split(',').map(str::trim).collect();
    if cols != ["id", "m", "n", "k"] {
        return Err(Error::Parse {
            line: 1,
            msg: format!("expected header id,m,n,k, got {header:?}"),
        });
    }
    lines
        .map(|(idx, line)| {
            let err = |msg: String| Error::Parse { line: idx + 1, msg };
            let fields: Vec<&str> = line.split(',').map(str::trim).collect();
            if fields.len() != 4 {
                return Err(err(format!("expected 4 fields, got {}", fields.len())));
            }
            let mut v = [0usize; 4];
            for (slot, f) in v.iter_mut().zip(&fields) {
                *slot = f.parse().map_err(|_| err(format!("not a count: {f:?}")))?;
            }
            if v[1..].contains(&0) {
                return Err(err("m, n and k must be positive".into()));
            }
            Ok(LayerShape::new(v[0], v[1], v[2], v[3]))
        })
        .collect()
}

pub fn load_csv(path: &Path) -> Result<Vec<LayerShape>> {
    parse_csv(&std::fs::read_to_string(path)?)
}
