//! Register micro-kernels for the three residency types.
//!
//! * [`creg`]: `C` tile resident; rank-1 updates over the packed depth.
//! * [`areg`]: `A` tile (mr×kr) resident; one matrix-vector product per
//!   column of the packed `C` block.
//! * [`breg`]: `B` tile (kr×nr) resident; one vector-matrix product per row
//!   of the packed `C` block.
//!
//! Kernels are const-generic over the tile shape and instantiated for the
//! default grid at compile time (see [`registry`]); shapes outside the grid
//! run through runtime-sized fallbacks with the same arithmetic order.

pub mod areg;
pub mod breg;
pub mod creg;
pub mod registry;

use std::sync::atomic::{AtomicBool, Ordering};

use serde::{Deserialize, Serialize};

use crate::element::Element;
use crate::error::{Error, Result};
use crate::types::{ElemType, MatrixView, MicroShape, Residency};

pub use registry::{KernelRegistry, RawLines};

/// Depth-loop unroll factor of the compiled kernels.
pub const DEFAULT_UNROLL: usize = 4;

/// Values spanned by each register-tile axis of the default grid.
pub const GRID_AXIS: [usize; 8] = [4, 8, 12, 16, 20, 24, 28, 32];

/// Vector register file of the target.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct RegisterBudget {
    pub vector_bits: usize,
    pub registers: usize,
}

impl RegisterBudget {
    /// 32 × 128-bit registers (NEON-class).
    pub const DEFAULT: RegisterBudget = RegisterBudget {
        vector_bits: 128,
        registers: 32,
    };

    pub fn lane_count(&self, elem: ElemType) -> usize {
        elem.lane_count(self.vector_bits)
    }

    /// Vector registers needed by a kernel: the resident tile plus the
    /// operands staged per iteration.
    ///
    /// * CReg: `mr·⌈nr/L⌉` accumulators, the shorter of the two staged
    ///   operand vectors, and one broadcast register.
    /// * AReg: `kr·⌈mr/L⌉` for the tile, `⌈mr/L⌉` for the `C` column, one broadcast.
    /// * BReg: `kr·⌈nr/L⌉` for the tile, `⌈nr/L⌉` for the `C` row, one broadcast.
    pub fn registers_needed(
        &self,
        residency: Residency,
        shape: MicroShape,
        elem: ElemType,
    ) -> usize {
        let l = self.lane_count(elem);
        let v = |x: usize| x.div_ceil(l);
        match residency {
            Residency::CReg => shape.mr * v(shape.nr) + v(shape.mr).min(v(shape.nr)) + 1,
            Residency::AReg => shape.kr * v(shape.mr) + v(shape.mr) + 1,
            Residency::BReg => shape.kr * v(shape.nr) + v(shape.nr) + 1,
        }
    }

    pub fn admits(&self, residency: Residency, shape: MicroShape, elem: ElemType) -> bool {
        self.registers_needed(residency, shape, elem) <= self.registers
    }
}

impl Default for RegisterBudget {
    fn default() -> Self {
        RegisterBudget::DEFAULT
    }
}

/// Parameters of one kernel instance.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct KernelConfig {
    pub shape: MicroShape,
    pub elem: ElemType,
    pub lane_count: usize,
    pub unroll: usize,
}

impl KernelConfig {
    pub fn new(
        residency: Residency,
        shape: MicroShape,
        elem: ElemType,
        lane_count: usize,
        unroll: usize,
    ) -> Result<Self> {
        shape.validate(residency)?;
        let invalid = |reason: String| Error::InvalidShape {
            shape,
            residency,
            reason,
        };
        if unroll == 0 {
            return Err(invalid("unroll must be at least 1".into()));
        }
        if lane_count == 0 {
            return Err(invalid("lane count must be at least 1".into()));
        }
        let (name, vec_dim) = match residency {
            Residency::CReg | Residency::BReg => ("nr", shape.nr),
            Residency::AReg => ("mr", shape.mr),
        };
        if vec_dim % lane_count != 0 {
            return Err(invalid(format!(
                "{name} = {vec_dim} is not a multiple of the lane count {lane_count}"
            )));
        }
        Ok(KernelConfig {
            shape,
            elem,
            lane_count,
            unroll,
        })
    }
}

/// Shapes on the `GRID_AXIS × GRID_AXIS` grid admitted by `budget`.
pub fn grid_with_budget(
    residency: Residency,
    elem: ElemType,
    budget: RegisterBudget,
) -> Vec<MicroShape> {
    let lanes = budget.lane_count(elem);
    let mut out = Vec::new();
    for &x in &GRID_AXIS {
        for &y in &GRID_AXIS {
            let shape = match residency {
                Residency::CReg => MicroShape::creg(x, y),
                Residency::AReg => MicroShape::areg(x, y),
                Residency::BReg => MicroShape::breg(x, y),
            };
            if KernelConfig::new(residency, shape, elem, lanes, DEFAULT_UNROLL).is_ok()
                && budget.admits(residency, shape, elem)
            {
                out.push(shape);
            }
        }
    }
    out
}

/// The default search grid: 32 registers of 128 bits.
pub fn default_grid(residency: Residency, elem: ElemType) -> Vec<MicroShape> {
    grid_with_budget(residency, elem, RegisterBudget::DEFAULT)
}

/// Per-iteration operand access for a kernel: step `p` yields the `N`
/// elements consumed by one rank-1 (or matrix-vector) update.
pub trait PanelSource<T> {
    fn stage<const N: usize>(&self, p: usize, out: &mut [T; N]);
    fn stage_dyn(&self, p: usize, out: &mut [T]);
}

/// A packed micro-panel: step `p` is `out.len()` contiguous elements.
#[derive(Debug, Clone, Copy)]
pub struct Packed<'a, T>(pub &'a [T]);

impl<T: Copy> PanelSource<T> for Packed<'_, T> {
    #[inline(always)]
    fn stage<const N: usize>(&self, p: usize, out: &mut [T; N]) {
        out.copy_from_slice(&self.0[p * N..p * N + N]);
    }

    #[inline(always)]
    fn stage_dyn(&self, p: usize, out: &mut [T]) {
        let n = out.len();
        out.copy_from_slice(&self.0[p * n..p * n + n]);
    }
}

/// Unpacked `A` tile read in place: step `p` is column `p`, rows beyond
/// the window read as zero.
#[derive(Debug, Clone, Copy)]
pub struct StridedColumns<'a, T>(pub MatrixView<'a, T>);

impl<T: Element> PanelSource<T> for StridedColumns<'_, T> {
    #[inline(always)]
    fn stage<const N: usize>(&self, p: usize, out: &mut [T; N]) {
        self.stage_dyn(p, out)
    }

    #[inline(always)]
    fn stage_dyn(&self, p: usize, out: &mut [T]) {
        let v = &self.0;
        let rows = v.rows().min(out.len());
        for (i, o) in out.iter_mut().enumerate() {
            *o = if i < rows { v.get(i, p) } else { T::ZERO };
        }
    }
}

/// Unpacked `B` tile read in place: step `p` is row `p`, columns beyond
/// the window read as zero.
#[derive(Debug, Clone, Copy)]
pub struct StridedRows<'a, T>(pub MatrixView<'a, T>);

impl<T: Element> PanelSource<T> for StridedRows<'_, T> {
    #[inline(always)]
    fn stage<const N: usize>(&self, p: usize, out: &mut [T; N]) {
        self.stage_dyn(p, out)
    }

    #[inline(always)]
    fn stage_dyn(&self, p: usize, out: &mut [T]) {
        let row = self.0.row(p);
        let w = row.len().min(out.len());
        out[..w].copy_from_slice(&row[..w]);
        out[w..].fill(T::ZERO);
    }
}

/// Destination of kernel results, addressed by line: a row of a `C` tile
/// (CReg, BReg) or a column of a packed `C` panel (AReg).
pub trait LineStore<T> {
    fn load_line(&self, line: usize, out: &mut [T]);
    fn store_line(&mut self, line: usize, src: &[T]);
}

/// Lines of a safe slice, `stride` elements apart.
#[derive(Debug)]
pub struct SliceLines<'a, T> {
    pub data: &'a mut [T],
    pub stride: usize,
}

impl<T: Copy> LineStore<T> for SliceLines<'_, T> {
    #[inline(always)]
    fn load_line(&self, line: usize, out: &mut [T]) {
        let s = line * self.stride;
        out.copy_from_slice(&self.data[s..s + out.len()]);
    }

    #[inline(always)]
    fn store_line(&mut self, line: usize, src: &[T]) {
        let s = line * self.stride;
        self.data[s..s + src.len()].copy_from_slice(src);
    }
}

static FAULT: AtomicBool = AtomicBool::new(false);

/// Arms (or disarms) a deliberate sign flip in the CReg kernels, used to
/// check that the verification harness catches a broken kernel.
pub fn set_fault_injection(armed: bool) {
    FAULT.store(armed, Ordering::Relaxed);
}

pub fn fault_injection_armed() -> bool {
    FAULT.load(Ordering::Relaxed)
}

pub mod recording {
    //! Store-counting line store for checking kernel write patterns.
    use std::cell::RefCell;

    use super::LineStore;

    #[derive(Debug, Clone, Copy, PartialEq, Eq)]
    pub enum Event {
        Load { line: usize, len: usize },
        Store { line: usize, len: usize },
    }

    /// Wraps a slice like [`super::SliceLines`] and logs every access.
    pub struct Recording<'a, T> {
        data: &'a mut [T],
        stride: usize,
        events: RefCell<Vec<Event>>,
    }

    impl<'a, T> Recording<'a, T> {
        pub fn new(data: &'a mut [T], stride: usize) -> Self {
            Recording {
                data,
                stride,
                events: RefCell::new(Vec::new()),
            }
        }

        pub fn events(&self) -> Vec<Event> {
            self.events.borrow().clone()
        }

        /// Total number of elements stored.
        pub fn stored_elements(&self) -> usize {
            self.events
                .borrow()
                .iter()
                .map(|e| match e {
                    Event::Store { len, .. } => *len,
                    Event::Load { .. } => 0,
                })
                .sum()
        }

        /// Number of line stores.
        pub fn store_count(&self) -> usize {
            self.events
                .borrow()
                .iter()
                .filter(|e| matches!(e, Event::Store { .. }))
                .count()
        }
    }

    impl<T: Copy> LineStore<T> for Recording<'_, T> {
        fn load_line(&self, line: usize, out: &mut [T]) {
            let s = line * self.stride;
            out.copy_from_slice(&self.data[s..s + out.len()]);
            self.events.borrow_mut().push(Event::Load {
                line,
                len: out.len(),
            });
        }

        fn store_line(&mut self, line: usize, src: &[T]) {
            let s = line * self.stride;
            self.data[s..s + src.len()].copy_from_slice(src);
            self.events.get_mut().push(Event::Store {
                line,
                len: src.len(),
            });
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn creg_f32_grid_contents() {
        let grid = default_grid(Residency::CReg, ElemType::F32);
        assert!(grid.contains(&MicroShape::creg(8, 12)));
        assert!(grid.contains(&MicroShape::creg(4, 16)));
        assert!(grid.contains(&MicroShape::creg(4, 28)));
        assert!(!grid.contains(&MicroShape::creg(32, 32)));
        assert!(grid.iter().all(|s| s.nr % 4 == 0));
        // a 1024-register target admits the full axis product
        let wide = grid_with_budget(
            Residency::CReg,
            ElemType::F32,
            RegisterBudget {
                vector_bits: 128,
                registers: 1024,
            },
        );
        assert_eq!(wide.len(), 64);
        assert!(wide.contains(&MicroShape::creg(32, 32)));
    }

    #[test]
    fn creg_f32_grid_matches_spill_free_shapes() {
        // the (mr, nr) pairs without register spilling on a 32 x 128-bit file
        let want: Vec<(usize, usize)> = vec![
            (4, 4),
            (4, 8),
            (4, 12),
            (4, 16),
            (4, 20),
            (4, 24),
            (4, 28),
            (8, 4),
            (8, 8),
            (8, 12),
            (12, 4),
            (12, 8),
            (16, 4),
            (20, 4),
            (24, 4),
            (28, 4),
        ];
        let got: Vec<_> = default_grid(Residency::CReg, ElemType::F32)
            .iter()
            .map(|s| (s.mr, s.nr))
            .collect();
        assert_eq!(got, want);
    }

    #[test]
    fn kernel_config_invariants() {
        assert!(
            KernelConfig::new(Residency::CReg, MicroShape::creg(4, 6), ElemType::F32, 4, 4)
                .is_err()
        );
        assert!(
            KernelConfig::new(Residency::AReg, MicroShape::areg(6, 4), ElemType::F32, 4, 4)
                .is_err()
        );
        assert!(
            KernelConfig::new(Residency::BReg, MicroShape::breg(3, 8), ElemType::F32, 4, 4).is_ok()
        );
        assert!(
            KernelConfig::new(Residency::CReg, MicroShape::creg(4, 8), ElemType::F32, 4, 0)
                .is_err()
        );
    }

    #[test]
    fn residency_grids_nonempty() {
        for res in [Residency::CReg, Residency::AReg, Residency::BReg] {
            for elem in [ElemType::F32, ElemType::F64] {
                let g = default_grid(res, elem);
                assert!(!g.is_empty(), "{res:?} {elem}");
                for s in &g {
                    s.validate(res).unwrap();
                }
            }
        }
    }

    #[test]
    fn lane_counts() {
        let b = RegisterBudget::DEFAULT;
        assert_eq!(b.lane_count(ElemType::F32), 4);
        assert_eq!(b.lane_count(ElemType::F64), 2);
    }
}
