use std::process::ExitCode;

use anyhow::Result;
use panelforge::blocked::default_shape;
use panelforge::microkernels::set_fault_injection;
use panelforge::oracle::{compare, error_bounds};
use panelforge::rng::{random_matrix, Lcg64};
use panelforge::{
    gemm_blocked, gemm_naive, CacheSpec, Dims, ElemType, Element, GemmPlan, MatrixView,
    MatrixViewMut, MicroShape, PackConfig, Residency, Variant,
};

use crate::common::VariantSel;

#[derive(Debug, clap::Args)]
pub struct Args {
    /// Single problem `MxNxK`; without it the full matrix of edge shapes runs.
    #[arg(long)]
    dims: Option<Dims>,
    /// Variant name or `all`.
    #[arg(long, default_value = "all")]
    variant: VariantSel,
    /// `both`, `a`, `b`, `none`, or `all`. Defaults to `all` for the full
    /// matrix and `both` with `--dims`.
    #[arg(long)]
    pack: Option<String>,
    /// `f32`, `f64` or `all`. Defaults to `all` for the full matrix and
    /// `f32` with `--dims`.
    #[arg(long)]
    dtype: Option<String>,
    #[arg(long, default_value_t = 42)]
    seed: u64,
    /// Flip the sign of the C-resident kernels to prove failures are caught.
    #[arg(long, hide = true)]
    inject_fault: bool,
}

/// Problems of the full matrix: tiny, edge-heavy and one multi-block case.
const EDGE_DIMS: [(usize, usize, usize); 7] = [
    (1, 1, 1),
    (7, 5, 3),
    (13, 17, 11),
    (31, 29, 37),
    (64, 64, 64),
    (65, 67, 66),
    (100, 3, 50),
];

#[derive(Debug, Clone, Copy)]
struct Case {
    variant: Variant,
    elem: ElemType,
    pack: PackConfig,
    shape: MicroShape,
    dims: Dims,
}

impl std::fmt::Display for Case {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(
            f,
            "{} {} pack={} shape={} dims={}",
            self.variant,
            self.elem.name(),
            self.pack.name(),
            self.shape,
            self.dims
        )
    }
}

fn shape_sample(residency: Residency, elem: ElemType) -> Vec<MicroShape> {
    let lanes = elem.lane_count(128);
    let mut v = vec![default_shape(residency, elem)];
    // smallest compiled tile and one shape outside the compiled grid
    let (small, odd) = match residency {
        Residency::CReg => (MicroShape::creg(lanes, lanes), MicroShape::creg(3, 5)),
        Residency::AReg => (MicroShape::areg(lanes, lanes), MicroShape::areg(3, 5)),
        Residency::BReg => (MicroShape::breg(lanes, lanes), MicroShape::breg(5, 3)),
    };
    for s in [small, odd] {
        if !v.contains(&s) {
            v.push(s);
        }
    }
    v
}

fn parse_list<T: std::str::FromStr + Copy>(
    arg: Option<&str>,
    all: &[T],
    default_all: bool,
    single: T,
) -> Result<Vec<T>>
where
    T::Err: std::fmt::Display,
{
    match arg {
        None if default_all => Ok(all.to_vec()),
        None => Ok(vec![single]),
        Some("all") => Ok(all.to_vec()),
        Some(s) => s
            .parse::<T>()
            .map(|v| vec![v])
            .map_err(|e| crate::common::usage(e.to_string())),
    }
}

fn cases(args: &Args) -> Result<Vec<Case>> {
    let full = args.dims.is_none();
    let packs = parse_list(
        args.pack.as_deref(),
        &PackConfig::ALL,
        full,
        PackConfig::BOTH,
    )?;
    let elems = parse_list(
        args.dtype.as_deref(),
        &[ElemType::F32, ElemType::F64],
        full,
        ElemType::F32,
    )?;
    let dims_list: Vec<Dims> = match args.dims {
        Some(d) => vec![d],
        None => EDGE_DIMS
            .iter()
            .map(|&(m, n, k)| Dims { m, n, k })
            .collect(),
    };
    let mut out = Vec::new();
    for variant in args.variant.variants() {
        let res = variant.residency();
        for &elem in &elems {
            let shapes = if full {
                shape_sample(res, elem)
            } else {
                vec![default_shape(res, elem)]
            };
            for &pack in &packs {
                if res != Residency::CReg && !pack.is_full() {
                    continue;
                }
                for &shape in &shapes {
                    for &dims in &dims_list {
                        out.push(Case {
                            variant,
                            elem,
                            pack,
                            shape,
                            dims,
                        });
                    }
                }
            }
        }
    }
    if out.is_empty() {
        return Err(crate::common::usage(
            "no cases selected: pack skipping applies to C-resident variants only",
        ));
    }
    Ok(out)
}

/// Max componentwise error and pass flag of one case.
fn run_case<T: Element>(case: &Case, seed: u64) -> Result<(f64, bool)> {
    let d = case.dims;
    let plan = GemmPlan::with_shape(case.variant, case.shape, T::ELEM, d, &CacheSpec::carmel())?
        .pack(case.pack);
    let mut rng = Lcg64::new(seed);
    let a: Vec<T> = random_matrix(d.m, d.k, &mut rng);
    let b: Vec<T> = random_matrix(d.k, d.n, &mut rng);
    let c0: Vec<T> = random_matrix(d.m, d.n, &mut rng);
    let av = MatrixView::dense(&a, d.m, d.k)?;
    let bv = MatrixView::dense(&b, d.k, d.n)?;
    let mut want = c0.clone();
    gemm_naive(d, av, bv, MatrixViewMut::dense(&mut want, d.m, d.n)?)?;
    let mut got = c0.clone();
    gemm_blocked(&plan, d, av, bv, MatrixViewMut::dense(&mut got, d.m, d.n)?)?;
    let bounds = error_bounds(d, av, bv, MatrixView::dense(&c0, d.m, d.n)?, 4.0);
    let cmp = compare(&got, &want, &bounds);
    Ok((cmp.max_abs_err, cmp.passed))
}

pub fn run(args: Args) -> Result<ExitCode> {
    let cases = cases(&args)?;
    set_fault_injection(args.inject_fault);
    let mut failed = Vec::new();
    for case in &cases {
        let (err, ok) = match case.elem {
            ElemType::F32 => run_case::<f32>(case, args.seed)?,
            ElemType::F64 => run_case::<f64>(case, args.seed)?,
        };
        println!(
            "{}  {case}  max_err={err:.3e}",
            if ok { "PASS" } else { "FAIL" }
        );
        if !ok {
            failed.push(*case);
        }
    }
    set_fault_injection(false);
    println!(
        "{} of {} cases passed",
        cases.len() - failed.len(),
        cases.len()
    );
    if failed.is_empty() {
        Ok(ExitCode::SUCCESS)
    } else {
        for case in &failed {
            eprintln!("failing case: {case}");
        }
        Ok(ExitCode::from(1))
    }
}
