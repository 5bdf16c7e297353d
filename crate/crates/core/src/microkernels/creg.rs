//! C-resident kernels: `C_r (mr×nr) += A_r (mr×kc) · B_r (kc×nr)`.
//!
//! The accumulator tile is loaded once, updated by `kc` rank-1 updates
//! (one staged column of `A_r` times one staged row of `B_r`) and stored
//! once. Every element accumulates in ascending depth order onto its
//! initial `C` value, so the result is bitwise equal to the naive nest.

use super::{LineStore, PanelSource};
use crate::element::Element;

/// One rank-1 update. `NR` is a compile-time multiple of the lane count,
/// so each row splits into whole vector registers.
#[inline(always)]
fn rank1<T: Element, const MR: usize, const NR: usize>(
    acc: &mut [[T; NR]; MR],
    a: &[T; MR],
    b: &[T; NR],
) {
    for i in 0..MR {
        let ai = a[i];
        for j in 0..NR {
            acc[i][j] = acc[i][j] + ai * b[j];
        }
    }
}

/// Compiled C-resident kernel over `kc` steps.
#[inline(always)]
pub fn kernel<T, const MR: usize, const NR: usize, A, B, C>(kc: usize, a: &A, b: &B, c: &mut C)
where
    T: Element,
    A: PanelSource<T>,
    B: PanelSource<T>,
    C: LineStore<T>,
{
    let mut acc = [[T::ZERO; NR]; MR];
    for (i, row) in acc.iter_mut().enumerate() {
        c.load_line(i, row);
    }
    let mut av = [T::ZERO; MR];
    let mut bv = [T::ZERO; NR];
    for p in 0..kc {
        a.stage(p, &mut av);
        b.stage(p, &mut bv);
        rank1(&mut acc, &av, &bv);
    }
    for (i, row) in acc.iter().enumerate() {
        c.store_line(i, row);
    }
}

/// Runtime-shaped fallback with the same arithmetic order. With `negate`
/// set every product is subtracted (fault injection).
pub fn generic<T, A, B, C>(mr: usize, nr: usize, kc: usize, a: &A, b: &B, c: &mut C, negate: bool)
where
    T: Element,
    A: PanelSource<T>,
    B: PanelSource<T>,
    C: LineStore<T>,
{
    let mut acc = vec![T::ZERO; mr * nr];
    for (i, row) in acc.chunks_exact_mut(nr).enumerate() {
        c.load_line(i, row);
    }
    let mut av = vec![T::ZERO; mr];
    let mut bv = vec![T::ZERO; nr];
    for p in 0..kc {
        a.stage_dyn(p, &mut av);
        b.stage_dyn(p, &mut bv);
        if negate {
            bv.iter_mut().for_each(|x| *x = -*x);
        }
        for (row, &ai) in acc.chunks_exact_mut(nr).zip(&av) {
            for (r, &bj) in row.iter_mut().zip(&bv) {
                *r = *r + ai * bj;
            }
        }
    }
    for (i, row) in acc.chunks_exact(nr).enumerate() {
        c.store_line(i, row);
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::microkernels::recording::{Event, Recording};
    use crate::microkernels::{Packed, SliceLines, StridedColumns, StridedRows};
    use crate::packing::{pack_a_block, pack_b_block};
    use crate::rng::Lcg64;
    use crate::types::MatrixView;

    #[test]
    fn scalar_case() {
        let mut c = [1.0f64];
        kernel::<f64, 1, 1, _, _, _>(
            1,
            &Packed(&[2.0]),
            &Packed(&[3.0]),
            &mut SliceLines {
                data: &mut c,
                stride: 1,
            },
        );
        assert_eq!(c, [7.0]);
    }

    #[test]
    fn two_by_two_matches_oracle() {
        let a = pack_a_block(
            MatrixView::dense(&[1.0f64, 2.0, 3.0, 4.0], 2, 2).unwrap(),
            2,
        );
        let b = pack_b_block(
            MatrixView::dense(&[5.0f64, 6.0, 7.0, 8.0], 2, 2).unwrap(),
            2,
        );
        let mut c = [0.0f64; 4];
        kernel::<f64, 2, 2, _, _, _>(
            2,
            &Packed(a.data()),
            &Packed(b.data()),
            &mut SliceLines {
                data: &mut c,
                stride: 2,
            },
        );
        assert_eq!(c, [19.0, 22.0, 43.0, 50.0]);
    }

    #[test]
    fn zero_b_leaves_c() {
        let a = [1.0f32; 8 * 5];
        let b = [0.0f32; 12 * 5];
        let mut c: Vec<f32> = (0..96).map(|x| x as f32).collect();
        let before = c.clone();
        kernel::<f32, 8, 12, _, _, _>(
            5,
            &Packed(&a),
            &Packed(&b),
            &mut SliceLines {
                data: &mut c,
                stride: 12,
            },
        );
        assert_eq!(c, before);
    }

    #[test]
    fn compiled_equals_generic_and_strided() {
        let mut rng = Lcg64::new(11);
        let (mr, nr, kc) = (4, 8, 13);
        let a: Vec<f32> = crate::rng::random_matrix(mr, kc, &mut rng);
        let b: Vec<f32> = crate::rng::random_matrix(kc, nr, &mut rng);
        let c0: Vec<f32> = crate::rng::random_matrix(mr, nr, &mut rng);
        let av = MatrixView::dense(&a, mr, kc).unwrap();
        let bv = MatrixView::dense(&b, kc, nr).unwrap();
        let ap = pack_a_block(av, mr);
        let bp = pack_b_block(bv, nr);

        let mut c1 = c0.clone();
        kernel::<f32, 4, 8, _, _, _>(
            kc,
            &Packed(ap.data()),
            &Packed(bp.data()),
            &mut SliceLines {
                data: &mut c1,
                stride: nr,
            },
        );
        let mut c2 = c0.clone();
        generic(
            mr,
            nr,
            kc,
            &Packed(ap.data()),
            &Packed(bp.data()),
            &mut SliceLines {
                data: &mut c2,
                stride: nr,
            },
            false,
        );
        let mut c3 = c0.clone();
        kernel::<f32, 4, 8, _, _, _>(
            kc,
            &StridedColumns(av),
            &StridedRows(bv),
            &mut SliceLines {
                data: &mut c3,
                stride: nr,
            },
        );
        assert_eq!(c1, c2);
        assert_eq!(c1, c3);
    }

    #[test]
    fn stores_only_after_depth_loop() {
        let a = [1.0f32; 4 * 9];
        let b = [1.0f32; 8 * 9];
        let mut c = [0.0f32; 32];
        let mut rec = Recording::new(&mut c, 8);
        kernel::<f32, 4, 8, _, _, _>(9, &Packed(&a), &Packed(&b), &mut rec);
        let events = rec.events();
        assert_eq!(rec.stored_elements(), 32);
        let first_store = events
            .iter()
            .position(|e| matches!(e, Event::Store { .. }))
            .unwrap();
        assert!(events[..first_store]
            .iter()
            .all(|e| matches!(e, Event::Load { .. })));
        assert!(events[first_store..]
            .iter()
            .all(|e| matches!(e, Event::Store { .. })));
        assert_eq!(c, [9.0; 32]);
    }
}
