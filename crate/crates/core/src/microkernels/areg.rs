//! A-resident kernels: an mr×kr tile of `A` stays in registers while the
//! kernel walks the columns of a packed `C` block. Each iteration is an
//! mr×kr matrix-vector product that writes one `C` column back.

use super::{LineStore, PanelSource};
use crate::element::Element;

/// `a_tile` is column-major (`a_tile[r·MR + i] = A[i, r]`). Step `j` of
/// `b` yields column `j` of a `kr`-row panel of `Bc`; line `j` of `c` is
/// column `j` of an `mr`-row panel of `Cc`.
#[inline(always)]
pub fn kernel<T, const MR: usize, const KR: usize, B, C>(a_tile: &[T], nc: usize, b: &B, c: &mut C)
where
    T: Element,
    B: PanelSource<T>,
    C: LineStore<T>,
{
    let mut tile = [[T::ZERO; MR]; KR];
    for (r, col) in tile.iter_mut().enumerate() {
        col.copy_from_slice(&a_tile[r * MR..(r + 1) * MR]);
    }
    let mut bv = [T::ZERO; KR];
    let mut cv = [T::ZERO; MR];
    for j in 0..nc {
        b.stage(j, &mut bv);
        c.load_line(j, &mut cv);
        for (col, &s) in tile.iter().zip(&bv) {
            for (ci, &ai) in cv.iter_mut().zip(col) {
                *ci = *ci + ai * s;
            }
        }
        c.store_line(j, &cv);
    }
}

pub fn generic<T, B, C>(mr: usize, kr: usize, a_tile: &[T], nc: usize, b: &B, c: &mut C)
where
    T: Element,
    B: PanelSource<T>,
    C: LineStore<T>,
{
    let tile = &a_tile[..mr * kr];
    let mut bv = vec![T::ZERO; kr];
    let mut cv = vec![T::ZERO; mr];
    for j in 0..nc {
        b.stage_dyn(j, &mut bv);
        c.load_line(j, &mut cv);
        for (col, &s) in tile.chunks_exact(mr).zip(&bv) {
            for (ci, &ai) in cv.iter_mut().zip(col) {
                *ci = *ci + ai * s;
            }
        }
        c.store_line(j, &cv);
    }
}
