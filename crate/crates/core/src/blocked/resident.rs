//! Drivers with an A- or B-resident micro-kernel. `C` is packed into `Cc`
//! panels, updated in place by the kernels, and written back when its block
//! loop closes.

use super::parallel::{block, run_loop, SyncPtr};
use super::Problem;
use crate::element::Element;
use crate::microkernels::registry::{ARegKernel, BRegKernel};
use crate::microkernels::SliceLines;
use crate::packing::PackedPanels;
use crate::types::{MatrixView, ParallelLoop, Residency};

/// Column-major `mr × kr` tile of `src`, zero padded.
fn load_a_tile<T: Element>(src: MatrixView<'_, T>, mr: usize, kr: usize, tile: &mut [T]) {
    debug_assert_eq!(tile.len(), mr * kr);
    tile.fill(T::ZERO);
    for i in 0..src.rows() {
        let row = src.row(i);
        for (r, &v) in row.iter().enumerate() {
            tile[r * mr + i] = v;
        }
    }
}

/// Row-major `kr × nr` tile of `src`, zero padded.
fn load_b_tile<T: Element>(src: MatrixView<'_, T>, kr: usize, nr: usize, tile: &mut [T]) {
    debug_assert_eq!(tile.len(), kr * nr);
    tile.fill(T::ZERO);
    for r in 0..src.rows() {
        tile[r * nr..r * nr + src.cols()].copy_from_slice(src.row(r));
    }
}

/// Raw handle on a packed `C` block whose panels are updated by disjoint threads.
struct CcPanels<T> {
    ptr: SyncPtr<T>,
    panel_len: usize,
}

impl<T: Element> CcPanels<T> {
    fn new(cc: &mut PackedPanels<T>) -> Self {
        CcPanels {
            ptr: SyncPtr(cc.data_mut().as_mut_ptr()),
            panel_len: cc.panel_len(),
        }
    }

    /// # Safety
    /// Each panel index must be borrowed by at most one caller at a time.
    #[allow(clippy::mut_from_ref)]
    unsafe fn panel(&self, p: usize) -> &mut [T] {
        std::slice::from_raw_parts_mut(self.ptr.0.add(p * self.panel_len), self.panel_len)
    }
}

// SAFETY: panel access is partitioned by the ir/jr loop.
unsafe impl<T: Send> Sync for CcPanels<T> {}

/// Coordinates of one (Cc, packed operand) step.
struct Step {
    ic: usize,
    mc: usize,
    jc: usize,
    nc: usize,
    pc: usize,
    kc: usize,
}

/// ir → pr over a packed `Cc` (mr column panels) and `Bc` (kr row panels).
fn areg_block<T: Element>(
    p: &Problem<'_, T>,
    kernel: &ARegKernel<T>,
    cc: &mut PackedPanels<T>,
    bc: &PackedPanels<T>,
    s: &Step,
) {
    let (mr, kr) = (p.plan.shape.mr, p.plan.shape.kr);
    let panels = CcPanels::new(cc);
    run_loop(
        &p.plan.parallel,
        ParallelLoop::Ir,
        s.mc.div_ceil(mr),
        |irs| {
            let mut tile = vec![T::ZERO; mr * kr];
            for irb in irs {
                let (ir, mr_eff) = block(irb, mr, s.mc);
                // SAFETY: each irb is visited by one thread.
                let panel = unsafe { panels.panel(irb) };
                let mut lines = SliceLines {
                    data: panel,
                    stride: mr,
                };
                for prb in 0..s.kc.div_ceil(kr) {
                    let (pr, kr_eff) = block(prb, kr, s.kc);
                    load_a_tile(
                        p.a.window(s.ic + ir, s.pc + pr, mr_eff, kr_eff),
                        mr,
                        kr,
                        &mut tile,
                    );
                    kernel.run(&tile, s.nc, bc.panel(prb), &mut lines);
                }
            }
        },
    );
}

/// jr → pr over a packed `Cc` (nr row panels) and `Ac` (kr column panels).
fn breg_block<T: Element>(
    p: &Problem<'_, T>,
    kernel: &BRegKernel<T>,
    cc: &mut PackedPanels<T>,
    ac: &PackedPanels<T>,
    s: &Step,
) {
    let (kr, nr) = (p.plan.shape.kr, p.plan.shape.nr);
    let panels = CcPanels::new(cc);
    run_loop(
        &p.plan.parallel,
        ParallelLoop::Jr,
        s.nc.div_ceil(nr),
        |jrs| {
            let mut tile = vec![T::ZERO; kr * nr];
            for jrb in jrs {
                let (jr, nr_eff) = block(jrb, nr, s.nc);
                // SAFETY: each jrb is visited by one thread.
                let panel = unsafe { panels.panel(jrb) };
                let mut lines = SliceLines {
                    data: panel,
                    stride: nr,
                };
                for prb in 0..s.kc.div_ceil(kr) {
                    let (pr, kr_eff) = block(prb, kr, s.kc);
                    load_b_tile(
                        p.b.window(s.pc + pr, s.jc + jr, kr_eff, nr_eff),
                        kr,
                        nr,
                        &mut tile,
                    );
                    kernel.run(&tile, s.mc, ac.panel(prb), &mut lines);
                }
            }
        },
    );
}

/// Packs the `C` block at (ic, jc).
///
/// # Safety
/// The block must not be written concurrently.
unsafe fn pack_cc<T: Element>(
    p: &Problem<'_, T>,
    cc: &mut PackedPanels<T>,
    ic: usize,
    mc: usize,
    jc: usize,
    nc: usize,
) {
    let ptr = p.c.0.add(ic * p.ldc + jc);
    cc.pack_c_raw(ptr, p.ldc, mc, nc, p.plan.residency(), p.plan.shape);
}

/// Writes the `C` block at (ic, jc) back.
///
/// # Safety
/// The block must be owned by the caller.
unsafe fn unpack_cc<T: Element>(
    p: &Problem<'_, T>,
    cc: &PackedPanels<T>,
    ic: usize,
    mc: usize,
    jc: usize,
    nc: usize,
) {
    let ptr = p.c.0.add(ic * p.ldc + jc);
    cc.unpack_c_raw(ptr, p.ldc, mc, nc, p.plan.residency());
}

pub(super) fn b3c2a0<T: Element>(p: &Problem<'_, T>) {
    let (m, n, k) = (p.dims.m, p.dims.n, p.dims.k);
    let blk = p.plan.blocking;
    let kr = p.plan.shape.kr;
    let par = &p.plan.parallel;
    let kernel = T::kernels().areg(p.plan.shape);
    let (_, bc_cap, cc_cap) = p.plan.buffer_elems(p.dims);
    debug_assert_eq!(p.plan.residency(), Residency::AReg);

    run_loop(par, ParallelLoop::Jc, n.div_ceil(blk.nc), |jblocks| {
        let mut bc = PackedPanels::with_capacity(bc_cap);
        for jb in jblocks {
            let (jc, nc) = block(jb, blk.nc, n);
            for pb in 0..k.div_ceil(blk.kc) {
                let (pc, kc) = block(pb, blk.kc, k);
                bc.pack_b_areg(p.b.window(pc, jc, kc, nc), kr);
                let bc = &bc;
                run_loop(par, ParallelLoop::Ic, m.div_ceil(blk.mc), |iblocks| {
                    let mut cc = PackedPanels::with_capacity(cc_cap);
                    for ib in iblocks {
                        let (ic, mc) = block(ib, blk.mc, m);
                        // SAFETY: (ic, jc) blocks are partitioned across threads.
                        unsafe { pack_cc(p, &mut cc, ic, mc, jc, nc) };
                        areg_block(
                            p,
                            &kernel,
                            &mut cc,
                            bc,
                            &Step {
                                ic,
                                mc,
                                jc,
                                nc,
                                pc,
                                kc,
                            },
                        );
                        unsafe { unpack_cc(p, &cc, ic, mc, jc, nc) };
                    }
                });
            }
        }
    });
}

pub(super) fn c3b2a0<T: Element>(p: &Problem<'_, T>) {
    let (m, n, k) = (p.dims.m, p.dims.n, p.dims.k);
    let blk = p.plan.blocking;
    let kr = p.plan.shape.kr;
    let par = &p.plan.parallel;
    let kernel = T::kernels().areg(p.plan.shape);
    let (_, bc_cap, cc_cap) = p.plan.buffer_elems(p.dims);

    run_loop(par, ParallelLoop::Ic, m.div_ceil(blk.mc), |iblocks| {
        for ib in iblocks {
            let (ic, mc) = block(ib, blk.mc, m);
            run_loop(par, ParallelLoop::Jc, n.div_ceil(blk.nc), |jblocks| {
                let mut cc = PackedPanels::with_capacity(cc_cap);
                let mut bc = PackedPanels::with_capacity(bc_cap);
                for jb in jblocks {
                    let (jc, nc) = block(jb, blk.nc, n);
                    // SAFETY: (ic, jc) blocks are partitioned across threads.
                    unsafe { pack_cc(p, &mut cc, ic, mc, jc, nc) };
                    for pb in 0..k.div_ceil(blk.kc) {
                        let (pc, kc) = block(pb, blk.kc, k);
                        bc.pack_b_areg(p.b.window(pc, jc, kc, nc), kr);
                        areg_block(
                            p,
                            &kernel,
                            &mut cc,
                            &bc,
                            &Step {
                                ic,
                                mc,
                                jc,
                                nc,
                                pc,
                                kc,
                            },
                        );
                    }
                    unsafe { unpack_cc(p, &cc, ic, mc, jc, nc) };
                }
            });
        }
    });
}

pub(super) fn a3c2b0<T: Element>(p: &Problem<'_, T>) {
    let (m, n, k) = (p.dims.m, p.dims.n, p.dims.k);
    let blk = p.plan.blocking;
    let kr = p.plan.shape.kr;
    let par = &p.plan.parallel;
    let kernel = T::kernels().breg(p.plan.shape);
    let (ac_cap, _, cc_cap) = p.plan.buffer_elems(p.dims);

    run_loop(par, ParallelLoop::Ic, m.div_ceil(blk.mc), |iblocks| {
        let mut ac = PackedPanels::with_capacity(ac_cap);
        for ib in iblocks {
            let (ic, mc) = block(ib, blk.mc, m);
            for pb in 0..k.div_ceil(blk.kc) {
                let (pc, kc) = block(pb, blk.kc, k);
                ac.pack_a_breg(p.a.window(ic, pc, mc, kc), kr);
                let ac = &ac;
                run_loop(par, ParallelLoop::Jc, n.div_ceil(blk.nc), |jblocks| {
                    let mut cc = PackedPanels::with_capacity(cc_cap);
                    for jb in jblocks {
                        let (jc, nc) = block(jb, blk.nc, n);
                        // SAFETY: (ic, jc) blocks are partitioned across threads.
                        unsafe { pack_cc(p, &mut cc, ic, mc, jc, nc) };
                        breg_block(
                            p,
                            &kernel,
                            &mut cc,
                            ac,
                            &Step {
                                ic,
                                mc,
                                jc,
                                nc,
                                pc,
                                kc,
                            },
                        );
                        unsafe { unpack_cc(p, &cc, ic, mc, jc, nc) };
                    }
                });
            }
        }
    });
}

pub(super) fn c3a2b0<T: Element>(p: &Problem<'_, T>) {
    let (m, n, k) = (p.dims.m, p.dims.n, p.dims.k);
    let blk = p.plan.blocking;
    let kr = p.plan.shape.kr;
    let par = &p.plan.parallel;
    let kernel = T::kernels().breg(p.plan.shape);
    let (ac_cap, _, cc_cap) = p.plan.buffer_elems(p.dims);

    run_loop(par, ParallelLoop::Jc, n.div_ceil(blk.nc), |jblocks| {
        for jb in jblocks {
            let (jc, nc) = block(jb, blk.nc, n);
            run_loop(par, ParallelLoop::Ic, m.div_ceil(blk.mc), |iblocks| {
                let mut cc = PackedPanels::with_capacity(cc_cap);
                let mut ac = PackedPanels::with_capacity(ac_cap);
                for ib in iblocks {
                    let (ic, mc) = block(ib, blk.mc, m);
                    // SAFETY: (ic, jc) blocks are partitioned across threads.
                    unsafe { pack_cc(p, &mut cc, ic, mc, jc, nc) };
                    for pb in 0..k.div_ceil(blk.kc) {
                        let (pc, kc) = block(pb, blk.kc, k);
                        ac.pack_a_breg(p.a.window(ic, pc, mc, kc), kr);
                        breg_block(
                            p,
                            &kernel,
                            &mut cc,
                            &ac,
                            &Step {
                                ic,
                                mc,
                                jc,
                                nc,
                                pc,
                                kc,
                            },
                        );
                    }
                    unsafe { unpack_cc(p, &cc, ic, mc, jc, nc) };
                }
            });
        }
    });
}
