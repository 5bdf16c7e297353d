//! Shared domain types: problem dimensions, matrix views, algorithm variants,
//! micro-kernel shapes, blocking parameters and cache geometry.

use std::fmt;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Operand, Result};

/// GEMM problem size: `A` is m×k, `B` is k×n, `C` is m×n.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Dims {
    pub m: usize,
    pub n: usize,
    pub k: usize,
}

impl Dims {
    pub fn new(m: usize, n: usize, k: usize) -> Result<Self> {
        for (field, v) in [("m", m), ("n", n), ("k", k)] {
            if v == 0 {
                return Err(Error::ZeroDimension { field });
            }
        }
        Ok(Dims { m, n, k })
    }

    /// Floating point operation count, `2·m·n·k`.
    pub fn flops(&self) -> f64 {
        2.0 * self.m as f64 * self.n as f64 * self.k as f64
    }
}

impl fmt::Display for Dims {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}x{}x{}", self.m, self.n, self.k)
    }
}

impl FromStr for Dims {
    type Err = Error;

    /// Parses `MxNxK`, or a single `S` meaning `SxSxS`.
    fn from_str(s: &str) -> Result<Self> {
        let parts: Vec<&str> = s.trim().split(['x', 'X']).collect();
        let parse = |p: &str| {
            p.trim()
                .parse::<usize>()
                .map_err(|e| Error::InvalidArgument(format!("bad dimension {p:?} in {s:?}: {e}")))
        };
        match parts.as_slice() {
            [s] => {
                let v = parse(s)?;
                Dims::new(v, v, v)
            }
            [m, n, k] => Dims::new(parse(m)?, parse(n)?, parse(k)?),
            _ => Err(Error::InvalidArgument(format!("expected MxNxK, got {s:?}"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ElemType {
    F32,
    F64,
}

impl ElemType {
    pub const fn size_bytes(self) -> usize {
        match self {
            ElemType::F32 => 4,
            ElemType::F64 => 8,
        }
    }

    pub const fn name(self) -> &'static str {
        match self {
            ElemType::F32 => "f32",
            ElemType::F64 => "f64",
        }
    }

    /// Elements per vector register of `vector_bits` width.
    pub const fn lane_count(self, vector_bits: usize) -> usize {
        let lanes = vector_bits / 8 / self.size_bytes();
        if lanes == 0 {
            1
        } else {
            lanes
        }
    }
}

impl fmt::Display for ElemType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ElemType {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "f32" | "fp32" => Ok(ElemType::F32),
            "f64" | "fp64" => Ok(ElemType::F64),
            other => Err(Error::InvalidArgument(format!("unknown dtype {other:?}"))),
        }
    }
}

fn check_buffer(len: usize, rows: usize, cols: usize, row_stride: usize) -> Result<()> {
    if row_stride < cols {
        return Err(Error::BufferTooShort {
            detail: format!("row stride {row_stride} is smaller than {cols} columns"),
        });
    }
    if rows == 0 || cols == 0 {
        return Ok(());
    }
    let need = (rows - 1) * row_stride + cols;
    if len < need {
        return Err(Error::BufferTooShort {
            detail: format!("{rows}x{cols} with row stride {row_stride} needs {need} elements, buffer has {len}"),
        });
    }
    Ok(())
}

/// Read-only row-major matrix window.
#[derive(Debug, Clone, Copy)]
pub struct MatrixView<'a, T> {
    data: &'a [T],
    rows: usize,
    cols: usize,
    row_stride: usize,
}

impl<'a, T: Copy> MatrixView<'a, T> {
    pub fn new(data: &'a [T], rows: usize, cols: usize, row_stride: usize) -> Result<Self> {
        check_buffer(data.len(), rows, cols, row_stride)?;
        Ok(MatrixView {
            data,
            rows,
            cols,
            row_stride,
        })
    }

    /// Builds a view without validating it. [`MatrixView::check`] (called by
    /// every GEMM entry point) reports the violation later.
    pub fn new_unchecked(data: &'a [T], rows: usize, cols: usize, row_stride: usize) -> Self {
        MatrixView {
            data,
            rows,
            cols,
            row_stride,
        }
    }

    /// Dense view with `row_stride == cols`.
    pub fn dense(data: &'a [T], rows: usize, cols: usize) -> Result<Self> {
        Self::new(data, rows, cols, cols)
    }

    pub fn check(&self) -> Result<()> {
        check_buffer(self.data.len(), self.rows, self.cols, self.row_stride)
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn row_stride(&self) -> usize {
        self.row_stride
    }

    pub fn data(&self) -> &'a [T] {
        self.data
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> T {
        debug_assert!(i < self.rows && j < self.cols);
        self.data[i * self.row_stride + j]
    }

    /// Row `i` restricted to the window's columns.
    #[inline]
    pub fn row(&self, i: usize) -> &'a [T] {
        let start = i * self.row_stride;
        &self.data[start..start + self.cols]
    }

    /// Sub-window starting at `(r0, c0)`.
    pub fn window(&self, r0: usize, c0: usize, rows: usize, cols: usize) -> MatrixView<'a, T> {
        assert!(
            r0 + rows <= self.rows && c0 + cols <= self.cols,
            "window out of bounds"
        );
        if rows == 0 || cols == 0 {
            return MatrixView {
                data: &self.data[..0],
                rows,
                cols,
                row_stride: self.row_stride,
            };
        }
        let start = r0 * self.row_stride + c0;
        let end = start + (rows - 1) * self.row_stride + cols;
        MatrixView {
            data: &self.data[start..end],
            rows,
            cols,
            row_stride: self.row_stride,
        }
    }
}

/// Mutable row-major matrix window (exclusive writer).
#[derive(Debug)]
pub struct MatrixViewMut<'a, T> {
    data: &'a mut [T],
    rows: usize,
    cols: usize,
    row_stride: usize,
}

impl<'a, T: Copy> MatrixViewMut<'a, T> {
    pub fn new(data: &'a mut [T], rows: usize, cols: usize, row_stride: usize) -> Result<Self> {
        check_buffer(data.len(), rows, cols, row_stride)?;
        Ok(MatrixViewMut {
            data,
            rows,
            cols,
            row_stride,
        })
    }

    pub fn new_unchecked(data: &'a mut [T], rows: usize, cols: usize, row_stride: usize) -> Self {
        MatrixViewMut {
            data,
            rows,
            cols,
            row_stride,
        }
    }

    pub fn dense(data: &'a mut [T], rows: usize, cols: usize) -> Result<Self> {
        Self::new(data, rows, cols, cols)
    }

    pub fn check(&self) -> Result<()> {
        check_buffer(self.data.len(), self.rows, self.cols, self.row_stride)
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn row_stride(&self) -> usize {
        self.row_stride
    }

    pub fn as_view(&self) -> MatrixView<'_, T> {
        MatrixView::new_unchecked(self.data, self.rows, self.cols, self.row_stride)
    }

    /// Reborrows the window with a shorter lifetime.
    pub fn reborrow(&mut self) -> MatrixViewMut<'_, T> {
        MatrixViewMut {
            data: self.data,
            rows: self.rows,
            cols: self.cols,
            row_stride: self.row_stride,
        }
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> T {
        debug_assert!(i < self.rows && j < self.cols);
        self.data[i * self.row_stride + j]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: T) {
        debug_assert!(i < self.rows && j < self.cols);
        self.data[i * self.row_stride + j] = v;
    }

    #[inline]
    pub fn row_mut(&mut self, i: usize) -> &mut [T] {
        let start = i * self.row_stride;
        &mut self.data[start..start + self.cols]
    }

    pub fn window_mut(
        &mut self,
        r0: usize,
        c0: usize,
        rows: usize,
        cols: usize,
    ) -> MatrixViewMut<'_, T> {
        assert!(
            r0 + rows <= self.rows && c0 + cols <= self.cols,
            "window out of bounds"
        );
        if rows == 0 || cols == 0 {
            return MatrixViewMut {
                data: &mut self.data[..0],
                rows,
                cols,
                row_stride: self.row_stride,
            };
        }
        let start = r0 * self.row_stride + c0;
        let end = start + (rows - 1) * self.row_stride + cols;
        MatrixViewMut {
            data: &mut self.data[start..end],
            rows,
            cols,
            row_stride: self.row_stride,
        }
    }

    pub(crate) fn as_mut_ptr(&mut self) -> *mut T {
        self.data.as_mut_ptr()
    }
}

/// Which operand's micro-tile stays in registers for a whole micro-kernel call.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Residency {
    CReg,
    AReg,
    BReg,
}

/// The six members of the blocked GEMM family. Each letter is an operand,
/// each digit the memory level its block targets (3 = L3, 2 = L2, 0 = registers).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Variant {
    B3A2C0,
    A3B2C0,
    B3C2A0,
    A3C2B0,
    C3B2A0,
    C3A2B0,
}

impl Variant {
    pub const ALL: [Variant; 6] = [
        Variant::B3A2C0,
        Variant::A3B2C0,
        Variant::B3C2A0,
        Variant::A3C2B0,
        Variant::C3B2A0,
        Variant::C3A2B0,
    ];

    pub fn residency(self) -> Residency {
        residency(self)
    }

    pub const fn name(self) -> &'static str {
        match self {
            Variant::B3A2C0 => "B3A2C0",
            Variant::A3B2C0 => "A3B2C0",
            Variant::B3C2A0 => "B3C2A0",
            Variant::A3C2B0 => "A3C2B0",
            Variant::C3B2A0 => "C3B2A0",
            Variant::C3A2B0 => "C3A2B0",
        }
    }
}

impl fmt::Display for Variant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Variant {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Variant::ALL
            .into_iter()
            .find(|v| v.name().eq_ignore_ascii_case(s.trim()))
            .ok_or_else(|| Error::InvalidArgument(format!("unknown variant {s:?}")))
    }
}

/// Micro-kernel type used by each variant.
pub fn residency(variant: Variant) -> Residency {
    match variant {
        Variant::B3A2C0 | Variant::A3B2C0 => Residency::CReg,
        Variant::B3C2A0 | Variant::C3B2A0 => Residency::AReg,
        Variant::A3C2B0 | Variant::C3A2B0 => Residency::BReg,
    }
}

/// Register tile dimensions. Only two fields are meaningful per residency:
/// `(mr, nr)` for CReg (`kr == 0`), `(mr, kr)` for AReg (`nr == 0`) and
/// `(kr, nr)` for BReg (`mr == 0`).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct MicroShape {
    pub mr: usize,
    pub nr: usize,
    #[serde(default)]
    pub kr: usize,
}

impl MicroShape {
    pub const fn creg(mr: usize, nr: usize) -> Self {
        MicroShape { mr, nr, kr: 0 }
    }

    pub const fn areg(mr: usize, kr: usize) -> Self {
        MicroShape { mr, nr: 0, kr }
    }

    pub const fn breg(kr: usize, nr: usize) -> Self {
        MicroShape { mr: 0, nr, kr }
    }

    /// The two register-tile extents as `(rows, cols)` of the resident tile.
    pub fn tile(&self, residency: Residency) -> (usize, usize) {
        match residency {
            Residency::CReg => (self.mr, self.nr),
            Residency::AReg => (self.mr, self.kr),
            Residency::BReg => (self.kr, self.nr),
        }
    }

    pub fn validate(&self, residency: Residency) -> Result<()> {
        let (a, b) = self.tile(residency);
        let unused = match residency {
            Residency::CReg => self.kr,
            Residency::AReg => self.nr,
            Residency::BReg => self.mr,
        };
        let reason = if a == 0 || b == 0 {
            "register tile extents must be at least 1"
        } else if unused != 0 {
            "the dimension not held in registers must be 0"
        } else {
            return Ok(());
        };
        Err(Error::InvalidShape {
            shape: *self,
            residency,
            reason: reason.to_string(),
        })
    }

    /// Sort key for tie-breaking: smaller mr first, then smaller nr/kr.
    pub fn tie_key(&self) -> (usize, usize, usize) {
        (self.mr, self.nr, self.kr)
    }
}

impl fmt::Display for MicroShape {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match (self.mr, self.nr, self.kr) {
            (mr, nr, 0) => write!(f, "{mr}x{nr}"),
            (mr, 0, kr) => write!(f, "{mr}x{kr}(kr)"),
            (0, nr, kr) => write!(f, "(kr){kr}x{nr}"),
            (mr, nr, kr) => write!(f, "{mr}x{nr}x{kr}"),
        }
    }
}

/// Cache-level tile sizes for the three outer loops.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct BlockingParams {
    pub mc: usize,
    pub nc: usize,
    pub kc: usize,
}

impl BlockingParams {
    pub fn new(mc: usize, nc: usize, kc: usize) -> Result<Self> {
        for (field, v) in [("mc", mc), ("nc", nc), ("kc", kc)] {
            if v == 0 {
                return Err(Error::ZeroDimension { field });
            }
        }
        Ok(BlockingParams { mc, nc, kc })
    }
}

/// Geometry of one set-associative cache level.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct CacheLevel {
    pub size_bytes: usize,
    pub ways: usize,
    pub line_bytes: usize,
}

impl CacheLevel {
    pub const fn new(size_bytes: usize, ways: usize, line_bytes: usize) -> Self {
        CacheLevel {
            size_bytes,
            ways,
            line_bytes,
        }
    }

    pub fn sets(&self) -> usize {
        self.size_bytes / (self.ways * self.line_bytes)
    }

    /// Bytes covered by one way across all sets.
    pub fn way_bytes(&self) -> usize {
        self.sets() * self.line_bytes
    }

    fn validate(&self, name: &str) -> Result<()> {
        if self.size_bytes == 0 || self.ways == 0 || self.line_bytes == 0 {
            return Err(Error::InvalidCacheSpec(format!(
                "{name}: all fields must be positive"
            )));
        }
        if !self.size_bytes.is_multiple_of(self.ways * self.line_bytes) {
            return Err(Error::InvalidCacheSpec(format!(
                "{name}: size {} is not divisible by ways*line = {}",
                self.size_bytes,
                self.ways * self.line_bytes
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct CacheSpec {
    pub l1: CacheLevel,
    pub l2: CacheLevel,
    pub l3: CacheLevel,
}

impl CacheSpec {
    pub fn new(l1: CacheLevel, l2: CacheLevel, l3: CacheLevel) -> Result<Self> {
        let spec = CacheSpec { l1, l2, l3 };
        spec.validate()?;
        Ok(spec)
    }

    /// Geometry modelled on an NVIDIA Carmel core: 64 KiB 4-way L1,
    /// 2 MiB 16-way L2, 4 MiB 16-way L3, 64-byte lines.
    pub const fn carmel() -> Self {
        CacheSpec {
            l1: CacheLevel::new(64 * 1024, 4, 64),
            l2: CacheLevel::new(2 * 1024 * 1024, 16, 64),
            l3: CacheLevel::new(4 * 1024 * 1024, 16, 64),
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.l1.validate("l1")?;
        self.l2.validate("l2")?;
        self.l3.validate("l3")
    }

    /// Parses `key = value` lines (`l1.size_bytes`, `l1.ways`,
    /// `l1.line_bytes`, same for `l2`/`l3`). `#` starts a comment.
    pub fn parse(text: &str) -> Result<Self> {
        let mut fields: [[Option<usize>; 3]; 3] = [[None; 3]; 3];
        for (idx, raw) in text.lines().enumerate() {
            let line_no = idx + 1;
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let err = |msg: String| Error::Parse { line: line_no, msg };
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| err(format!("expected `key = value`, got {line:?}")))?;
            let (level, field) = key
                .trim()
                .split_once('.')
                .ok_or_else(|| err(format!("expected `lN.field`, got {:?}", key.trim())))?;
            let li = match level {
                "l1" => 0,
                "l2" => 1,
                "l3" => 2,
                other => return Err(err(format!("unknown cache level {other:?}"))),
            };
            let fi = match field {
                "size_bytes" => 0,
                "ways" => 1,
                "line_bytes" => 2,
                other => return Err(err(format!("unknown field {other:?}"))),
            };
            let v = value
                .trim()
                .parse::<usize>()
                .map_err(|e| err(format!("bad value {:?}: {e}", value.trim())))?;
            fields[li][fi] = Some(v);
        }
        let mut levels = [CacheLevel::new(0, 0, 0); 3];
        for (li, level) in levels.iter_mut().enumerate() {
            let get = |fi: usize, name: &str| {
                fields[li][fi]
                    .ok_or_else(|| Error::InvalidCacheSpec(format!("missing l{}.{name}", li + 1)))
            };
            *level = CacheLevel::new(
                get(0, "size_bytes")?,
                get(1, "ways")?,
                get(2, "line_bytes")?,
            );
        }
        CacheSpec::new(levels[0], levels[1], levels[2])
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::parse(&std::fs::read_to_string(path)?)
    }

    pub fn to_config_string(&self) -> String {
        let mut out = String::new();
        for (name, lvl) in [("l1", self.l1), ("l2", self.l2), ("l3", self.l3)] {
            out.push_str(&format!("{name}.size_bytes = {}\n", lvl.size_bytes));
            out.push_str(&format!("{name}.ways = {}\n", lvl.ways));
            out.push_str(&format!("{name}.line_bytes = {}\n", lvl.line_bytes));
        }
        out
    }
}

impl Default for CacheSpec {
    fn default() -> Self {
        CacheSpec::carmel()
    }
}

/// Packing switches for CReg variants. AReg/BReg variants always pack.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct PackConfig {
    pub pack_a: bool,
    pub pack_b: bool,
}

impl PackConfig {
    pub const BOTH: PackConfig = PackConfig {
        pack_a: true,
        pack_b: true,
    };
    pub const A_ONLY: PackConfig = PackConfig {
        pack_a: true,
        pack_b: false,
    };
    pub const B_ONLY: PackConfig = PackConfig {
        pack_a: false,
        pack_b: true,
    };
    pub const NONE: PackConfig = PackConfig {
        pack_a: false,
        pack_b: false,
    };
    pub const ALL: [PackConfig; 4] = [Self::BOTH, Self::A_ONLY, Self::B_ONLY, Self::NONE];

    pub fn is_full(&self) -> bool {
        self.pack_a && self.pack_b
    }

    pub fn name(&self) -> &'static str {
        match (self.pack_a, self.pack_b) {
            (true, true) => "both",
            (true, false) => "a",
            (false, true) => "b",
            (false, false) => "none",
        }
    }
}

impl Default for PackConfig {
    fn default() -> Self {
        PackConfig::BOTH
    }
}

impl FromStr for PackConfig {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "both" | "ab" => Ok(PackConfig::BOTH),
            "a" => Ok(PackConfig::A_ONLY),
            "b" => Ok(PackConfig::B_ONLY),
            "none" => Ok(PackConfig::NONE),
            other => Err(Error::InvalidArgument(format!(
                "unknown pack config {other:?}"
            ))),
        }
    }
}

/// Loop whose iteration space is split across threads. There is no `Pc`:
/// splitting the depth loop would race on `C`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ParallelLoop {
    None,
    Jc,
    Ic,
    Jr,
    Ir,
}

impl ParallelLoop {
    pub fn name(&self) -> &'static str {
        match self {
            ParallelLoop::None => "none",
            ParallelLoop::Jc => "jc",
            ParallelLoop::Ic => "ic",
            ParallelLoop::Jr => "jr",
            ParallelLoop::Ir => "ir",
        }
    }
}

impl FromStr for ParallelLoop {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "none" => Ok(ParallelLoop::None),
            "jc" => Ok(ParallelLoop::Jc),
            "ic" => Ok(ParallelLoop::Ic),
            "jr" => Ok(ParallelLoop::Jr),
            "ir" => Ok(ParallelLoop::Ir),
            "pc" => Err(Error::InvalidArgument(
                "loop pc cannot be parallelized (race on C)".into(),
            )),
            other => Err(Error::InvalidArgument(format!("unknown loop {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct ParallelSpec {
    loop_: ParallelLoop,
    threads: usize,
}

impl ParallelSpec {
    pub const SEQUENTIAL: ParallelSpec = ParallelSpec {
        loop_: ParallelLoop::None,
        threads: 1,
    };

    pub fn new(loop_: ParallelLoop, threads: usize) -> Result<Self> {
        if threads == 0 {
            return Err(Error::UnsupportedPlan(
                "thread count must be at least 1".into(),
            ));
        }
        if loop_ == ParallelLoop::None && threads != 1 {
            return Err(Error::UnsupportedPlan(format!(
                "{threads} threads requested without a parallel loop"
            )));
        }
        Ok(ParallelSpec { loop_, threads })
    }

    pub fn parallel_loop(&self) -> ParallelLoop {
        self.loop_
    }

    pub fn threads(&self) -> usize {
        self.threads
    }
}

impl Default for ParallelSpec {
    fn default() -> Self {
        ParallelSpec::SEQUENTIAL
    }
}

/// Checks shape conformance of the three operands and their buffer invariants.
pub fn validate_problem<T: Copy>(
    dims: Dims,
    a: &MatrixView<'_, T>,
    b: &MatrixView<'_, T>,
    c: &MatrixView<'_, T>,
) -> Result<()> {
    let expect = [
        (Operand::A, a.rows(), a.cols(), dims.m, dims.k),
        (Operand::B, b.rows(), b.cols(), dims.k, dims.n),
        (Operand::C, c.rows(), c.cols(), dims.m, dims.n),
    ];
    for (operand, rows, cols, want_rows, want_cols) in expect {
        if rows != want_rows || cols != want_cols {
            return Err(Error::DimensionMismatch {
                operand,
                rows,
                cols,
                want_rows,
                want_cols,
            });
        }
    }
    a.check()?;
    b.check()?;
    c.check()
}
