//! Packing of operand blocks into contiguous micro-panel buffers.
//!
//! Two layouts cover every buffer in the family:
//!
//! * **column panels**: the block is cut into panels of `panel_dim` rows and
//!   each panel is stored column by column, `panel_dim` contiguous elements
//!   per column. Used for `Ac` (CReg), `Bc` with `kr`-row panels (AReg) and
//!   `Cc` (AReg).
//! * **row panels**: the block is cut into panels of `panel_dim` columns and
//!   each panel is stored row by row. Used for `Bc` (CReg), `Ac` with
//!   `kr`-column panels (BReg) and `Cc` (BReg).
//!
//! Tails are zero padded up to a full panel.

use crate::element::Element;
use crate::error::{Error, Result};
use crate::types::{MatrixView, MatrixViewMut, MicroShape, Residency};

/// A block rearranged into micro-panels.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct PackedPanels<T> {
    data: Vec<T>,
    panel_len: usize,
    panels: usize,
    panel_dim: usize,
    depth: usize,
}

impl<T: Element> PackedPanels<T> {
    pub fn new() -> Self {
        PackedPanels {
            data: Vec::new(),
            panel_len: 0,
            panels: 0,
            panel_dim: 0,
            depth: 0,
        }
    }

    /// Empty buffer with room for `elems` elements.
    pub fn with_capacity(elems: usize) -> Self {
        let mut p = Self::new();
        p.data.reserve_exact(elems);
        p
    }

    pub fn data(&self) -> &[T] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [T] {
        &mut self.data
    }

    pub fn panel_len(&self) -> usize {
        self.panel_len
    }

    pub fn panels(&self) -> usize {
        self.panels
    }

    pub fn panel_dim(&self) -> usize {
        self.panel_dim
    }

    pub fn depth(&self) -> usize {
        self.depth
    }

    pub fn capacity(&self) -> usize {
        self.data.capacity()
    }

    #[inline]
    pub fn panel(&self, p: usize) -> &[T] {
        &self.data[p * self.panel_len..(p + 1) * self.panel_len]
    }

    #[inline]
    pub fn panel_mut(&mut self, p: usize) -> &mut [T] {
        &mut self.data[p * self.panel_len..(p + 1) * self.panel_len]
    }

    fn reshape(&mut self, panel_dim: usize, depth: usize, extent: usize) {
        assert!(panel_dim >= 1, "panel dimension must be at least 1");
        self.panel_dim = panel_dim;
        self.depth = depth;
        self.panels = extent.div_ceil(panel_dim);
        self.panel_len = panel_dim * depth;
        let len = self.panels * self.panel_len;
        self.data.clear();
        self.data.resize(len, T::ZERO);
    }

    /// Column-panel layout of an `rows × cols` source read through `get`.
    fn fill_col_panels(
        &mut self,
        rows: usize,
        cols: usize,
        panel_dim: usize,
        get: impl Fn(usize, usize) -> T,
    ) {
        self.reshape(panel_dim, cols, rows);
        let pl = self.panel_len;
        for p in 0..self.panels {
            let r_end = panel_dim.min(rows - p * panel_dim);
            let panel = &mut self.data[p * pl..(p + 1) * pl];
            for r in 0..r_end {
                let row = p * panel_dim + r;
                for q in 0..cols {
                    panel[q * panel_dim + r] = get(row, q);
                }
            }
        }
    }

    /// Row-panel layout of an `rows × cols` source read through `row_at`,
    /// which yields row `i` as a slice of `cols` elements.
    fn fill_row_panels<'s>(
        &mut self,
        rows: usize,
        cols: usize,
        panel_dim: usize,
        row_at: impl Fn(usize) -> &'s [T],
    ) {
        self.reshape(panel_dim, rows, cols);
        let pl = self.panel_len;
        for p in 0..self.panels {
            let c0 = p * panel_dim;
            let width = panel_dim.min(cols - c0);
            let panel = &mut self.data[p * pl..(p + 1) * pl];
            for q in 0..rows {
                let src = &row_at(q)[c0..c0 + width];
                panel[q * panel_dim..q * panel_dim + width].copy_from_slice(src);
            }
        }
    }

    /// Repacks an `A` block (mc×kc) into `mr`-row panels, reusing the allocation.
    pub fn pack_a(&mut self, src: MatrixView<'_, T>, mr: usize) {
        self.fill_col_panels(src.rows(), src.cols(), mr, |i, j| src.get(i, j));
    }

    /// Repacks a `B` block (kc×nc) into `nr`-column panels.
    pub fn pack_b(&mut self, src: MatrixView<'_, T>, nr: usize) {
        self.fill_row_panels(src.rows(), src.cols(), nr, |i| src.row(i));
    }

    /// Repacks an `A` block (mc×kc) into `kr`-column panels for BReg kernels.
    pub fn pack_a_breg(&mut self, src: MatrixView<'_, T>, kr: usize) {
        self.fill_row_panels(src.rows(), src.cols(), kr, |i| src.row(i));
    }

    /// Repacks a `B` block (kc×nc) into `kr`-row panels for AReg kernels.
    pub fn pack_b_areg(&mut self, src: MatrixView<'_, T>, kr: usize) {
        self.fill_col_panels(src.rows(), src.cols(), kr, |i, j| src.get(i, j));
    }

    /// Packs a `C` block through a raw strided pointer.
    ///
    /// # Safety
    /// `ptr` must be valid for reads of `rows` rows of `cols` elements spaced
    /// `row_stride` apart, with no concurrent writer to those elements.
    pub(crate) unsafe fn pack_c_raw(
        &mut self,
        ptr: *const T,
        row_stride: usize,
        rows: usize,
        cols: usize,
        residency: Residency,
        shape: MicroShape,
    ) {
        match residency {
            Residency::AReg => {
                self.fill_col_panels(rows, cols, shape.mr, |i, j| *ptr.add(i * row_stride + j))
            }
            Residency::BReg => self.fill_row_panels(rows, cols, shape.nr, |i| {
                std::slice::from_raw_parts(ptr.add(i * row_stride), cols)
            }),
            Residency::CReg => unreachable!("C is not packed for CReg"),
        }
    }

    /// Writes the valid region back through a raw strided pointer.
    ///
    /// # Safety
    /// `ptr` must be valid for writes of `rows × cols` elements spaced
    /// `row_stride` apart, exclusively owned by the caller.
    pub(crate) unsafe fn unpack_c_raw(
        &self,
        ptr: *mut T,
        row_stride: usize,
        rows: usize,
        cols: usize,
        residency: Residency,
    ) {
        let pd = self.panel_dim;
        let pl = self.panel_len;
        match residency {
            Residency::AReg => {
                for i in 0..rows {
                    let (p, r) = (i / pd, i % pd);
                    let panel = &self.data[p * pl..(p + 1) * pl];
                    let dst = ptr.add(i * row_stride);
                    for j in 0..cols {
                        *dst.add(j) = panel[j * pd + r];
                    }
                }
            }
            Residency::BReg => {
                for i in 0..rows {
                    let dst = std::slice::from_raw_parts_mut(ptr.add(i * row_stride), cols);
                    for (p, chunk) in dst.chunks_mut(pd).enumerate() {
                        let src = &self.data[p * pl + i * pd..p * pl + i * pd + chunk.len()];
                        chunk.copy_from_slice(src);
                    }
                }
            }
            Residency::CReg => unreachable!("C is not packed for CReg"),
        }
    }
}

/// Packs an mc×kc block of `A` into `ceil(mc/mr)` panels of `mr × kc`,
/// each stored column by column.
pub fn pack_a_block<T: Element>(src: MatrixView<'_, T>, mr: usize) -> PackedPanels<T> {
    let mut out = PackedPanels::new();
    out.pack_a(src, mr);
    out
}

/// Packs a kc×nc block of `B` into `ceil(nc/nr)` panels of `kc × nr`,
/// each stored row by row.
pub fn pack_b_block<T: Element>(src: MatrixView<'_, T>, nr: usize) -> PackedPanels<T> {
    let mut out = PackedPanels::new();
    out.pack_b(src, nr);
    out
}

/// `A` block in `kr`-column panels (the `pack_b_block` layout over k).
pub fn pack_a_for_breg<T: Element>(src: MatrixView<'_, T>, kr: usize) -> PackedPanels<T> {
    let mut out = PackedPanels::new();
    out.pack_a_breg(src, kr);
    out
}

/// `B` block in `kr`-row panels (the `pack_a_block` layout over k).
pub fn pack_b_for_areg<T: Element>(src: MatrixView<'_, T>, kr: usize) -> PackedPanels<T> {
    let mut out = PackedPanels::new();
    out.pack_b_areg(src, kr);
    out
}

/// Packs a block of `C` for an AReg (`mr`-row panels) or BReg (`nr`-column
/// panels) kernel.
pub fn pack_c_block<T: Element>(
    src: MatrixView<'_, T>,
    residency: Residency,
    shape: MicroShape,
) -> Result<PackedPanels<T>> {
    if residency == Residency::CReg {
        return Err(Error::UnsupportedResidency(residency));
    }
    shape.validate(residency)?;
    let mut out = PackedPanels::new();
    match residency {
        Residency::AReg => out.pack_a(src, shape.mr),
        _ => out.pack_b(src, shape.nr),
    }
    Ok(out)
}

/// Inverse of [`pack_c_block`]: writes the valid region of `packed` into `dst`.
/// Padded lanes are dropped.
pub fn unpack_c_block<T: Element>(
    packed: &PackedPanels<T>,
    dst: &mut MatrixViewMut<'_, T>,
    residency: Residency,
    shape: MicroShape,
) -> Result<()> {
    if residency == Residency::CReg {
        return Err(Error::UnsupportedResidency(residency));
    }
    shape.validate(residency)?;
    let (rows, cols) = (dst.rows(), dst.cols());
    let (extent, depth) = match residency {
        Residency::AReg => (rows, cols),
        _ => (cols, rows),
    };
    if packed.depth() != depth || packed.panels() != extent.div_ceil(packed.panel_dim()) {
        return Err(Error::UnsupportedPlan(format!(
            "packed C block ({} panels, depth {}) does not match a {rows}x{cols} window",
            packed.panels(),
            packed.depth()
        )));
    }
    let rs = dst.row_stride();
    // SAFETY: dst is an exclusively borrowed, validated rows×cols window.
    unsafe { packed.unpack_c_raw(dst.as_mut_ptr(), rs, rows, cols, residency) };
    Ok(())
}
