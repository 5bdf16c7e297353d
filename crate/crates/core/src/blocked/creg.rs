//! Drivers with a C-resident micro-kernel: B3A2C0 and A3B2C0.

use super::parallel::{block, run_loop};
use super::Problem;
use crate::element::Element;
use crate::microkernels::registry::{ASource, BSource, CRegKernel};
use crate::microkernels::RawLines;
use crate::packing::PackedPanels;
use crate::types::ParallelLoop;

/// The two innermost loops over one `Ac`/`Bc` block pair.
struct MacroTile {
    ic: usize,
    mc: usize,
    jc: usize,
    nc: usize,
    pc: usize,
    kc: usize,
}

fn micro_tile<T: Element>(
    p: &Problem<'_, T>,
    kernel: &CRegKernel<T>,
    t: &MacroTile,
    ac: Option<&PackedPanels<T>>,
    bc: Option<&PackedPanels<T>>,
    (irb, jrb): (usize, usize),
    scratch: &mut Vec<T>,
) {
    let (mr, nr) = (p.plan.shape.mr, p.plan.shape.nr);
    let (ir, mr_eff) = block(irb, mr, t.mc);
    let (jr, nr_eff) = block(jrb, nr, t.nc);
    let a = match ac {
        Some(ac) => ASource::Packed(ac.panel(irb)),
        None => ASource::Strided(p.a.window(t.ic + ir, t.pc, mr_eff, t.kc)),
    };
    let b = match bc {
        Some(bc) => BSource::Packed(bc.panel(jrb)),
        None => BSource::Strided(p.b.window(t.pc, t.jc + jr, t.kc, nr_eff)),
    };
    // SAFETY: the tile lies inside C (validated) and belongs to exactly one
    // (ir, jr) pair of this macro tile, which only one thread visits.
    unsafe {
        let c = p.c.0.add((t.ic + ir) * p.ldc + t.jc + jr);
        if mr_eff == mr && nr_eff == nr {
            let mut lines = RawLines::new(c, p.ldc);
            kernel.run(t.kc, a, b, &mut lines);
        } else {
            // edge tile: run at full size on a scratch copy, write back the valid part
            scratch.clear();
            scratch.resize(mr * nr, T::ZERO);
            for i in 0..mr_eff {
                std::ptr::copy_nonoverlapping(
                    c.add(i * p.ldc),
                    scratch.as_mut_ptr().add(i * nr),
                    nr_eff,
                );
            }
            let mut lines = RawLines::new(scratch.as_mut_ptr(), nr);
            kernel.run(t.kc, a, b, &mut lines);
            for i in 0..mr_eff {
                std::ptr::copy_nonoverlapping(
                    scratch.as_ptr().add(i * nr),
                    c.add(i * p.ldc),
                    nr_eff,
                );
            }
        }
    }
}

/// Loops jr and ir over a macro tile; `jr_outer` selects their order.
fn macro_kernel<T: Element>(
    p: &Problem<'_, T>,
    kernel: &CRegKernel<T>,
    t: &MacroTile,
    ac: Option<&PackedPanels<T>>,
    bc: Option<&PackedPanels<T>>,
    jr_outer: bool,
) {
    let par = &p.plan.parallel;
    let ir_blocks = t.mc.div_ceil(p.plan.shape.mr);
    let jr_blocks = t.nc.div_ceil(p.plan.shape.nr);
    let (outer_loop, outer_blocks, inner_loop, inner_blocks) = if jr_outer {
        (ParallelLoop::Jr, jr_blocks, ParallelLoop::Ir, ir_blocks)
    } else {
        (ParallelLoop::Ir, ir_blocks, ParallelLoop::Jr, jr_blocks)
    };
    run_loop(par, outer_loop, outer_blocks, |outer| {
        for ob in outer {
            run_loop(par, inner_loop, inner_blocks, |inner| {
                // only edge tiles allocate
                let mut scratch = Vec::new();
                for ib in inner {
                    let (irb, jrb) = if jr_outer { (ib, ob) } else { (ob, ib) };
                    micro_tile(p, kernel, t, ac, bc, (irb, jrb), &mut scratch);
                }
            });
        }
    });
}

pub(super) fn b3a2c0<T: Element>(p: &Problem<'_, T>) {
    let (m, n, k) = (p.dims.m, p.dims.n, p.dims.k);
    let blk = p.plan.blocking;
    let shape = p.plan.shape;
    let pack = p.plan.pack;
    let par = &p.plan.parallel;
    let kernel = T::kernels().creg(shape);
    let (ac_cap, bc_cap, _) = p.plan.buffer_elems(p.dims);

    run_loop(par, ParallelLoop::Jc, n.div_ceil(blk.nc), |jblocks| {
        let mut bc = PackedPanels::with_capacity(bc_cap);
        for jb in jblocks {
            let (jc, nc) = block(jb, blk.nc, n);
            for pb in 0..k.div_ceil(blk.kc) {
                let (pc, kc) = block(pb, blk.kc, k);
                if pack.pack_b {
                    bc.pack_b(p.b.window(pc, jc, kc, nc), shape.nr);
                }
                let bc = &bc;
                run_loop(par, ParallelLoop::Ic, m.div_ceil(blk.mc), |iblocks| {
                    let mut ac = PackedPanels::with_capacity(ac_cap);
                    for ib in iblocks {
                        let (ic, mc) = block(ib, blk.mc, m);
                        if pack.pack_a {
                            ac.pack_a(p.a.window(ic, pc, mc, kc), shape.mr);
                        }
                        let t = MacroTile {
                            ic,
                            mc,
                            jc,
                            nc,
                            pc,
                            kc,
                        };
                        macro_kernel(
                            p,
                            &kernel,
                            &t,
                            pack.pack_a.then_some(&ac),
                            pack.pack_b.then_some(bc),
                            true,
                        );
                    }
                });
            }
        }
    });
}

pub(super) fn a3b2c0<T: Element>(p: &Problem<'_, T>) {
    let (m, n, k) = (p.dims.m, p.dims.n, p.dims.k);
    let blk = p.plan.blocking;
    let shape = p.plan.shape;
    let pack = p.plan.pack;
    let par = &p.plan.parallel;
    let kernel = T::kernels().creg(shape);
    let (ac_cap, bc_cap, _) = p.plan.buffer_elems(p.dims);

    run_loop(par, ParallelLoop::Ic, m.div_ceil(blk.mc), |iblocks| {
        let mut ac = PackedPanels::with_capacity(ac_cap);
        for ib in iblocks {
            let (ic, mc) = block(ib, blk.mc, m);
            for pb in 0..k.div_ceil(blk.kc) {
                let (pc, kc) = block(pb, blk.kc, k);
                if pack.pack_a {
                    ac.pack_a(p.a.window(ic, pc, mc, kc), shape.mr);
                }
                let ac = &ac;
                run_loop(par, ParallelLoop::Jc, n.div_ceil(blk.nc), |jblocks| {
                    let mut bc = PackedPanels::with_capacity(bc_cap);
                    for jb in jblocks {
                        let (jc, nc) = block(jb, blk.nc, n);
                        if pack.pack_b {
                            bc.pack_b(p.b.window(pc, jc, kc, nc), shape.nr);
                        }
                        let t = MacroTile {
                            ic,
                            mc,
                            jc,
                            nc,
                            pc,
                            kc,
                        };
                        macro_kernel(
                            p,
                            &kernel,
                            &t,
                            pack.pack_a.then_some(ac),
                            pack.pack_b.then_some(&bc),
                            false,
                        );
                    }
                });
            }
        }
    });
}
