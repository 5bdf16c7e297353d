//! B-resident kernels: a kr×nr tile of `B` stays in registers while the
//! kernel walks the rows of a packed `C` block, one kr×nr vector-matrix
//! product (and one `C` row store) per iteration.

use super::{LineStore, PanelSource};
use crate::element::Element;

/// `b_tile` is row-major (`b_tile[r·NR + j] = B[r, j]`). Step `i` of `a`
/// yields row `i` of a `kr`-column panel of `Ac`; line `i` of `c` is row
/// `i` of an `nr`-column panel of `Cc`.
#[inline(always)]
pub fn kernel<T, const KR: usize, const NR: usize, A, C>(b_tile: &[T], mc: usize, a: &A, c: &mut C)
where
    T: Element,
    A: PanelSource<T>,
    C: LineStore<T>,
{
    let lanes = T::ELEM.lane_count(128);
    let mut tile = [[T::ZERO; NR]; KR];
    for (r, row) in tile.iter_mut().enumerate() {
        row.copy_from_slice(&b_tile[r * NR..(r + 1) * NR]);
    }
    let mut av = [T::ZERO; KR];
    let mut cv = [T::ZERO; NR];
    for i in 0..mc {
        a.stage(i, &mut av);
        c.load_line(i, &mut cv);
        for (row, &s) in tile.iter().zip(&av) {
            for (cc, bc) in cv.chunks_mut(lanes).zip(row.chunks(lanes)) {
                for (ci, &bj) in cc.iter_mut().zip(bc) {
                    *ci = *ci + s * bj;
                }
            }
        }
        c.store_line(i, &cv);
    }
}

pub fn generic<T, A, C>(kr: usize, nr: usize, b_tile: &[T], mc: usize, a: &A, c: &mut C)
where
    T: Element,
    A: PanelSource<T>,
    C: LineStore<T>,
{
    let tile = &b_tile[..kr * nr];
    let mut av = vec![T::ZERO; kr];
    let mut cv = vec![T::ZERO; nr];
    for i in 0..mc {
        a.stage_dyn(i, &mut av);
        c.load_line(i, &mut cv);
        for (row, &s) in tile.chunks_exact(nr).zip(&av) {
            for (ci, &bj) in cv.iter_mut().zip(row) {
                *ci = *ci + s * bj;
            }
        }
        c.store_line(i, &cv);
    }
}
