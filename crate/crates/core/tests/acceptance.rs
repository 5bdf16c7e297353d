//! Acceptance suite: one PASS/FAIL line per criterion, nonzero exit if any fails.

use std::time::Instant;

use panelforge::cache_model::format_percent;
use panelforge::microkernels::recording::{Event, Recording};
use panelforge::microkernels::{areg, breg, creg, Packed};
use panelforge::oracle::{compare, error_bounds};
use panelforge::packing::{pack_a_block, pack_b_block, pack_c_block, unpack_c_block};
use panelforge::rng::{random_matrix, Lcg64};
use panelforge::tuner::{gflops, tune_with, ReplayTimer, TuneConfig, WallClock};
use panelforge::workloads::resnet50_shapes;
use panelforge::{
    default_grid, derive_blocking, gemm_blocked, gemm_naive, l1_occupancy, BlockingParams,
    CacheSpec, Dims, ElemType, Element, GemmPlan, MatrixView, MatrixViewMut, MicroShape,
    PackConfig, ParallelLoop, ParallelSpec, Residency, Variant,
};

type Outcome = Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome);

fn check(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

// ---------------------------------------------------------------- oracle matrix

/// Plans exercised per variant: the tuned-style default shape with derived
/// blocking, and a small 4-wide shape with blocking that splits every loop.
fn matrix_plans(variant: Variant, elem: ElemType, dims: Dims) -> Vec<GemmPlan> {
    let small_shape = match variant.residency() {
        Residency::CReg => MicroShape::creg(4, 4),
        Residency::AReg => MicroShape::areg(4, 4),
        Residency::BReg => MicroShape::breg(4, 4),
    };
    let stress = GemmPlan::new(
        variant,
        BlockingParams {
            mc: 8,
            nc: 8,
            kc: 6,
        },
        small_shape,
        elem,
    )
    .unwrap();
    let auto = GemmPlan::auto(variant, elem, dims, &CacheSpec::carmel()).unwrap();
    let packs: &[PackConfig] = if variant.residency() == Residency::CReg {
        &PackConfig::ALL
    } else {
        &[PackConfig::BOTH]
    };
    packs
        .iter()
        .flat_map(|&p| [auto.pack(p), stress.pack(p)])
        .collect()
}

fn oracle_case<T: Element>(dims: Dims, plan: &GemmPlan, seed: u64) -> Result<(), String> {
    let mut rng = Lcg64::new(seed);
    let a: Vec<T> = random_matrix(dims.m, dims.k, &mut rng);
    let b: Vec<T> = random_matrix(dims.k, dims.n, &mut rng);
    let c0: Vec<T> = random_matrix(dims.m, dims.n, &mut rng);
    let av = MatrixView::dense(&a, dims.m, dims.k).unwrap();
    let bv = MatrixView::dense(&b, dims.k, dims.n).unwrap();
    let mut want = c0.clone();
    gemm_naive(
        dims,
        av,
        bv,
        MatrixViewMut::dense(&mut want, dims.m, dims.n).unwrap(),
    )
    .unwrap();
    let mut got = c0.clone();
    gemm_blocked(
        plan,
        dims,
        av,
        bv,
        MatrixViewMut::dense(&mut got, dims.m, dims.n).unwrap(),
    )
    .map_err(|e| format!("{dims} {plan:?}: {e}"))?;
    let bounds = error_bounds(
        dims,
        av,
        bv,
        MatrixView::dense(&c0, dims.m, dims.n).unwrap(),
        4.0,
    );
    let cmp = compare(&got, &want, &bounds);
    check(cmp.passed, || {
        format!(
            "{dims} {} {} shape {} pack {}: max err {:e}",
            plan.variant,
            plan.elem.name(),
            plan.shape,
            plan.pack.name(),
            cmp.max_abs_err
        )
    })
}

fn oracle_matrix() -> Outcome {
    let mut dims_list = Vec::new();
    for m in 1..=9 {
        for n in 1..=9 {
            for k in 1..=9 {
                dims_list.push(Dims::new(m, n, k).unwrap());
            }
        }
    }
    let mut rng = Lcg64::new(2024);
    for _ in 0..50 {
        dims_list.push(Dims::new(rng.range(1, 65), rng.range(1, 65), rng.range(1, 65)).unwrap());
    }
    let mut cases = 0;
    for (i, &dims) in dims_list.iter().enumerate() {
        for variant in Variant::ALL {
            for elem in [ElemType::F32, ElemType::F64] {
                for plan in matrix_plans(variant, elem, dims) {
                    let seed = 1000 + i as u64;
                    match elem {
                        ElemType::F32 => oracle_case::<f32>(dims, &plan, seed)?,
                        ElemType::F64 => oracle_case::<f64>(dims, &plan, seed)?,
                    }
                    cases += 1;
                }
            }
        }
    }
    Ok(format!("{cases} cases over {} dims", dims_list.len()))
}

// ---------------------------------------------------------------- occupancy table

const LAYER2: Dims = Dims {
    m: 401408,
    n: 64,
    k: 64,
};
const LAYER8: Dims = Dims {
    m: 100352,
    n: 512,
    k: 128,
};

/// (mr, nr, layer 2 L1 %, layer 8 L1 %) as printed in the table.
const PUBLISHED_L1: [(usize, usize, &str, &str); 16] = [
    (4, 4, "1.56", "3.12"),
    (4, 8, "3.12", "6.25"),
    (4, 12, "4.69", "9.38"),
    (4, 16, "6.25", "12.50"),
    (4, 20, "7.81", "15.60"),
    (4, 24, "9.38", "18.80"),
    (4, 28, "10.90", "21.90"),
    (8, 4, "1.56", "3.12"),
    (8, 8, "3.12", "6.25"),
    (8, 12, "4.69", "9.38"),
    (12, 4, "1.56", "3.12"),
    (12, 8, "3.12", "6.25"),
    (16, 4, "1.56", "3.12"),
    (20, 4, "1.56", "3.12"),
    (24, 4, "1.56", "3.12"),
    (28, 4, "1.56", "3.12"),
];

fn published_occupancy() -> Outcome {
    let cache = CacheSpec::carmel();
    let mut n = 0;
    for (mr, nr, l2_pct, l8_pct) in PUBLISHED_L1 {
        for (dims, want) in [(LAYER2, l2_pct), (LAYER8, l8_pct)] {
            let (p, _) = derive_blocking(&cache, MicroShape::creg(mr, nr), ElemType::F32, dims)
                .map_err(|e| e.to_string())?;
            let got = format_percent(l1_occupancy(p.kc, nr, ElemType::F32, 64 * 1024));
            check(got == want, || {
                format!("{mr}x{nr} at {dims}: {got}% != {want}%")
            })?;
            n += 1;
        }
    }
    Ok(format!("{n} values"))
}

fn clamping() -> Outcome {
    let cache = CacheSpec::carmel();
    let grid = default_grid(Residency::CReg, ElemType::F32);
    for &shape in &grid {
        let (p2, _) =
            derive_blocking(&cache, shape, ElemType::F32, LAYER2).map_err(|e| e.to_string())?;
        check(p2.kc == 64 && p2.nc == 64, || {
            format!("{shape} layer 2: kc {} nc {}", p2.kc, p2.nc)
        })?;
        let (p8, _) =
            derive_blocking(&cache, shape, ElemType::F32, LAYER8).map_err(|e| e.to_string())?;
        check(p8.kc == 128, || format!("{shape} layer 8: kc {}", p8.kc))?;
    }
    Ok(format!("{} grid shapes", grid.len()))
}

// ---------------------------------------------------------------- packing

fn pack_round_trip() -> Outcome {
    let mut rng = Lcg64::new(77);
    for case in 0..1000 {
        let (rows, cols) = match case {
            0 => (1, 1),
            1 => (1, 37),
            2 => (29, 1),
            _ => (rng.range(1, 40), rng.range(1, 40)),
        };
        let pad_r = rng.range(0, 3);
        let pad_c = rng.range(0, 3);
        let stride = cols + pad_c;
        let parent: Vec<f64> = (0..(rows + pad_r) * stride)
            .map(|i| i as f64 + 1.0)
            .collect();
        let r0 = rng.range(0, pad_r);
        let c0 = rng.range(0, pad_c);
        let view = MatrixView::new(&parent[r0 * stride + c0..], rows, cols, stride).unwrap();
        let pd = 4 * rng.range(1, 7);

        let a = pack_a_block(view, pd);
        let panels = rows.div_ceil(pd);
        check(a.data().len() == panels * pd * cols, || {
            format!("case {case}: Ac size")
        })?;
        for p in 0..panels {
            for q in 0..cols {
                for r in 0..pd {
                    let i = p * pd + r;
                    let want = if i < rows { view.get(i, q) } else { 0.0 };
                    check(a.data()[p * pd * cols + q * pd + r] == want, || {
                        format!("case {case}: Ac {rows}x{cols} mr {pd} at ({i},{q})")
                    })?;
                }
            }
        }

        let b = pack_b_block(view, pd);
        let panels = cols.div_ceil(pd);
        check(b.data().len() == panels * pd * rows, || {
            format!("case {case}: Bc size")
        })?;
        for p in 0..panels {
            for q in 0..rows {
                for r in 0..pd {
                    let j = p * pd + r;
                    let want = if j < cols { view.get(q, j) } else { 0.0 };
                    check(b.data()[p * pd * rows + q * pd + r] == want, || {
                        format!("case {case}: Bc {rows}x{cols} nr {pd} at ({q},{j})")
                    })?;
                }
            }
        }

        for (res, shape) in [
            (Residency::AReg, MicroShape::areg(pd, 4)),
            (Residency::BReg, MicroShape::breg(4, pd)),
        ] {
            let packed = pack_c_block(view, res, shape).map_err(|e| e.to_string())?;
            let mut out = vec![-7.0; parent.len()];
            let mut dst =
                MatrixViewMut::new(&mut out[r0 * stride + c0..], rows, cols, stride).unwrap();
            unpack_c_block(&packed, &mut dst, res, shape).map_err(|e| e.to_string())?;
            for i in 0..rows + pad_r {
                for j in 0..stride {
                    let inside = (r0..r0 + rows).contains(&i) && (c0..c0 + cols).contains(&j);
                    let want = if inside { parent[i * stride + j] } else { -7.0 };
                    check(out[i * stride + j] == want, || {
                        format!("case {case}: Cc {res:?} at ({i},{j})")
                    })?;
                }
            }
        }
    }
    Ok("1000 windows, 4 layouts each".into())
}

// ---------------------------------------------------------------- threads

fn bitwise_threads() -> Outcome {
    let dims = Dims::new(512, 512, 512).unwrap();
    let mut rng = Lcg64::new(9);
    let a: Vec<f32> = random_matrix(512, 512, &mut rng);
    let b: Vec<f32> = random_matrix(512, 512, &mut rng);
    let c0: Vec<f32> = random_matrix(512, 512, &mut rng);
    let plan = GemmPlan::new(
        Variant::B3A2C0,
        BlockingParams {
            mc: 96,
            nc: 132,
            kc: 200,
        },
        MicroShape::creg(8, 12),
        ElemType::F32,
    )
    .unwrap();
    let run = |par: ParallelSpec| {
        let mut c = c0.clone();
        gemm_blocked(
            &plan.parallel(par),
            dims,
            MatrixView::dense(&a, 512, 512).unwrap(),
            MatrixView::dense(&b, 512, 512).unwrap(),
            MatrixViewMut::dense(&mut c, 512, 512).unwrap(),
        )
        .unwrap();
        c
    };
    let reference = run(ParallelSpec::SEQUENTIAL);
    let mut runs = 0;
    for lp in [
        ParallelLoop::Jc,
        ParallelLoop::Ic,
        ParallelLoop::Jr,
        ParallelLoop::Ir,
    ] {
        for threads in [1, 2, 4] {
            let got = run(ParallelSpec::new(lp, threads).unwrap());
            let same = got
                .iter()
                .zip(&reference)
                .all(|(x, y)| x.to_bits() == y.to_bits());
            check(same, || {
                format!("{} with {threads} threads differs", lp.name())
            })?;
            runs += 1;
        }
    }
    Ok(format!("{runs} runs bitwise equal"))
}

// ---------------------------------------------------------------- tuner

fn tuner_determinism() -> Outcome {
    let dims = Dims::new(401408, 64, 64).unwrap();
    let grid = default_grid(Residency::CReg, ElemType::F32);
    let mut timer = ReplayTimer::new();
    for (i, &s) in grid.iter().enumerate() {
        // (4,16) and (4,28) tie for fastest; (4,8)/(8,4) tie further down
        let t = match (s.mr, s.nr) {
            (4, 16) | (4, 28) => vec![0.30, 0.31, 0.29],
            (4, 8) | (8, 4) => vec![0.50, 0.50, 0.50],
            _ => vec![0.40 + i as f64 * 0.01, 0.6, 0.45],
        };
        timer.insert(s, t);
    }
    let cfg = TuneConfig {
        verify: false,
        ..TuneConfig::default()
    };
    let first = tune_with::<f32>(dims, Variant::B3A2C0, &grid, &mut timer.clone(), &cfg)
        .map_err(|e| e.to_string())?;
    let second = tune_with::<f32>(dims, Variant::B3A2C0, &grid, &mut timer.clone(), &cfg)
        .map_err(|e| e.to_string())?;
    check(first.to_json() == second.to_json(), || {
        "serializations differ".into()
    })?;
    check(first.best == MicroShape::creg(4, 16), || {
        format!("tie went to {}", first.best)
    })?;

    let pair = [MicroShape::creg(8, 4), MicroShape::creg(4, 8)];
    let mut t = ReplayTimer::new()
        .with(pair[0], vec![1.0])
        .with(pair[1], vec![1.0]);
    let tie =
        tune_with::<f32>(dims, Variant::B3A2C0, &pair, &mut t, &cfg).map_err(|e| e.to_string())?;
    check(tie.best == MicroShape::creg(4, 8), || {
        format!("equal-time tie went to {}", tie.best)
    })?;
    Ok(format!(
        "{} bytes identical, ties resolved",
        first.to_json().len()
    ))
}

// ---------------------------------------------------------------- performance

fn time_it(mut f: impl FnMut()) -> f64 {
    let t = Instant::now();
    f();
    t.elapsed().as_secs_f64()
}

fn perf_smoke() -> Outcome {
    let n = 1024;
    let dims = Dims::new(n, n, n).unwrap();
    let mut rng = Lcg64::new(5);
    let a: Vec<f32> = random_matrix(n, n, &mut rng);
    let b: Vec<f32> = random_matrix(n, n, &mut rng);
    let av = MatrixView::dense(&a, n, n).unwrap();
    let bv = MatrixView::dense(&b, n, n).unwrap();
    let mut c = vec![0.0f32; n * n];

    let grid = default_grid(Residency::CReg, ElemType::F32);
    let tuned = tune_with::<f32>(
        dims,
        Variant::B3A2C0,
        &grid,
        &mut WallClock,
        &TuneConfig::default(),
    )
    .map_err(|e| e.to_string())?;
    let plan = GemmPlan::new(Variant::B3A2C0, tuned.blocking, tuned.best, ElemType::F32).unwrap();
    let best_of = |plan: &GemmPlan, c: &mut Vec<f32>| {
        (0..3)
            .map(|_| {
                time_it(|| {
                    gemm_blocked(plan, dims, av, bv, MatrixViewMut::dense(c, n, n).unwrap())
                        .unwrap()
                })
            })
            .fold(f64::INFINITY, f64::min)
    };
    let packed = best_of(&plan, &mut c);
    let unpacked = best_of(&plan.pack(PackConfig::NONE), &mut c);
    let naive =
        time_it(|| gemm_naive(dims, av, bv, MatrixViewMut::dense(&mut c, n, n).unwrap()).unwrap());

    let (g_opt, g_nopack, g_naive) = (
        gflops(dims, packed),
        gflops(dims, unpacked),
        gflops(dims, naive),
    );
    let summary = format!(
        "tuned {} {:.2} GFLOPS, no-pack {:.2}, naive {:.2} ({:.1}x)",
        tuned.best,
        g_opt,
        g_nopack,
        g_naive,
        g_opt / g_naive
    );
    check(g_opt >= 10.0 * g_naive, || {
        format!("below 10x naive: {summary}")
    })?;
    check(packed < unpacked, || {
        format!("packing did not beat no-pack: {summary}")
    })?;
    Ok(summary)
}

// ---------------------------------------------------------------- write pattern

fn write_pattern() -> Outcome {
    let kc = 9;
    let a: Vec<f32> = (0..8 * kc).map(|i| i as f32).collect();
    let b: Vec<f32> = (0..12 * kc).map(|i| (i % 5) as f32).collect();
    let mut c = vec![0.0f32; 8 * 12];
    let mut rec = Recording::new(&mut c, 12);
    creg::kernel::<f32, 8, 12, _, _, _>(kc, &Packed(&a), &Packed(&b), &mut rec);
    check(rec.stored_elements() == 8 * 12, || {
        format!("CReg stored {} elements", rec.stored_elements())
    })?;
    let first_store = rec
        .events()
        .iter()
        .position(|e| matches!(e, Event::Store { .. }))
        .unwrap();
    check(
        rec.events()[..first_store]
            .iter()
            .all(|e| matches!(e, Event::Load { .. })),
        || "CReg stores interleaved with loads".into(),
    )?;

    let nc = 11;
    let a_tile: Vec<f32> = (0..8 * 4).map(|i| i as f32).collect();
    let bp: Vec<f32> = (0..4 * nc).map(|i| i as f32).collect();
    let mut cc = vec![0.0f32; 8 * nc];
    let mut rec = Recording::new(&mut cc, 8);
    areg::kernel::<f32, 8, 4, _, _>(&a_tile, nc, &Packed(&bp), &mut rec);
    let want: Vec<Event> = (0..nc)
        .flat_map(|j| {
            [
                Event::Load { line: j, len: 8 },
                Event::Store { line: j, len: 8 },
            ]
        })
        .collect();
    check(rec.events() == want, || {
        "AReg does not store one column per iteration".into()
    })?;

    let mc = 13;
    let b_tile: Vec<f32> = (0..4 * 12).map(|i| i as f32).collect();
    let ap: Vec<f32> = (0..4 * mc).map(|i| i as f32).collect();
    let mut cc = vec![0.0f32; mc * 12];
    let mut rec = Recording::new(&mut cc, 12);
    breg::kernel::<f32, 4, 12, _, _>(&b_tile, mc, &Packed(&ap), &mut rec);
    let want: Vec<Event> = (0..mc)
        .flat_map(|i| {
            [
                Event::Load { line: i, len: 12 },
                Event::Store { line: i, len: 12 },
            ]
        })
        .collect();
    check(rec.events() == want, || {
        "BReg does not store one row per iteration".into()
    })?;
    Ok("CReg 96 stores per 8x12 tile, AReg 11 column stores, BReg 13 row stores".into())
}

// ---------------------------------------------------------------- workloads

fn workload_fixture() -> Outcome {
    let table: [(usize, usize, usize, usize); 20] = [
        (1, 1605632, 64, 147),
        (2, 401408, 64, 64),
        (3, 401408, 64, 576),
        (4, 401408, 256, 64),
        (5, 401408, 64, 256),
        (6, 401408, 128, 256),
        (7, 100352, 128, 1152),
        (8, 100352, 512, 128),
        (9, 100352, 512, 256),
        (10, 100352, 128, 512),
        (11, 100352, 256, 512),
        (12, 25088, 256, 2304),
        (13, 25088, 1024, 256),
        (14, 25088, 1024, 512),
        (15, 25088, 256, 1024),
        (16, 25088, 512, 1024),
        (17, 6272, 512, 4608),
        (18, 6272, 2048, 512),
        (19, 6272, 2048, 1024),
        (20, 6272, 512, 2048),
    ];
    let shapes = resnet50_shapes();
    check(shapes.len() == 20, || format!("{} rows", shapes.len()))?;
    for (s, &(id, m, n, k)) in shapes.iter().zip(&table) {
        check((s.id, s.m, s.n, s.k) == (id, m, n, k), || {
            format!("row {id}: {s:?}")
        })?;
    }
    Ok("20 rows".into())
}

fn main() {
    let criteria: [Criterion; 9] = [
        ("oracle equivalence matrix", oracle_matrix),
        ("published L1 occupancy", published_occupancy),
        ("clamping on layers 2 and 8", clamping),
        ("pack/unpack round trip", pack_round_trip),
        ("bitwise thread reproducibility", bitwise_threads),
        ("tuner replay determinism", tuner_determinism),
        ("performance smoke", perf_smoke),
        ("residency write pattern", write_pattern),
        ("workload fixture", workload_fixture),
    ];
    let mut failed = 0;
    for (name, f) in criteria {
        let start = Instant::now();
        let outcome = f();
        let secs = start.elapsed().as_secs_f64();
        match outcome {
            Ok(detail) => println!("PASS  {name}: {detail} [{secs:.1}s]"),
            Err(detail) => {
                failed += 1;
                println!("FAIL  {name}: {detail} [{secs:.1}s]");
            }
        }
    }
    if failed > 0 {
        println!("{failed} criteria failed");
        std::process::exit(1);
    }
}
