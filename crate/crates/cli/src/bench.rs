use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use anyhow::{Context, Result};
use panelforge::blocked::default_shape;
use panelforge::oracle::{compare, error_bounds};
use panelforge::rng::checksum;
use panelforge::tuner::{default_cache_path, gflops, load_results, TuneCache};
use panelforge::{
    gemm_blocked, gemm_naive, CacheSpec, Dims, ElemType, Element, GemmPlan, MatrixView,
    MatrixViewMut, PackConfig, ParallelLoop, ParallelSpec, Variant,
};

use crate::common::{self, usage, Problem, VariantSel, CSV_SCHEMA};

#[derive(Debug, clap::Args)]
pub struct Args {
    /// `resnet50`, `square`, or a CSV file with columns id,m,n,k.
    #[arg(long, default_value = "square")]
    workload: String,
    /// Problems for `square`, comma separated; `S` means SxSxS.
    #[arg(long, value_delimiter = ',')]
    dims: Vec<Dims>,
    /// Divides m of each workload row (rounded up, at least 1).
    #[arg(long, default_value_t = 1)]
    scale_divisor: usize,
    /// Variant name or `all`.
    #[arg(long, default_value = "B3A2C0")]
    variant: VariantSel,
    #[arg(long, default_value = "f32")]
    dtype: ElemType,
    #[arg(long)]
    mr: Option<usize>,
    #[arg(long)]
    nr: Option<usize>,
    #[arg(long)]
    kr: Option<usize>,
    /// `both`, `a`, `b` or `none`.
    #[arg(long, default_value = "both")]
    pack: PackConfig,
    /// `none`, `jc`, `ic`, `jr` or `ir`.
    #[arg(long, default_value = "none")]
    parallel_loop: ParallelLoop,
    #[arg(long, default_value_t = 1)]
    threads: usize,
    #[arg(long, default_value_t = 3)]
    reps: usize,
    #[arg(long, default_value_t = 42)]
    seed: u64,
    /// Write CSV here instead of stdout.
    #[arg(long)]
    output: Option<PathBuf>,
    /// Verify each configuration against the oracle before timing.
    #[arg(long)]
    check: bool,
    /// Cache geometry file (`lN.size_bytes = ...`); Carmel-like by default.
    #[arg(long)]
    cache_spec: Option<PathBuf>,
    /// Tuning cache consulted for shapes when --mr/--nr/--kr are unset.
    /// Defaults to $PANELFORGE_TUNE_CACHE.
    #[arg(long)]
    tune_cache: Option<PathBuf>,
}

pub const HEADER: [&str; 24] = [
    "schema",
    "workload",
    "id",
    "m",
    "n",
    "k",
    "variant",
    "dtype",
    "mr",
    "nr",
    "kr",
    "mc",
    "nc",
    "kc",
    "pack",
    "parallel_loop",
    "threads",
    "reps",
    "median_seconds",
    "gflops",
    "verified",
    "checksum_a",
    "checksum_b",
    "kernel",
];

struct Row {
    plan: GemmPlan,
    seconds: f64,
    verified: bool,
    checksums: (u64, u64),
}

fn median(mut xs: Vec<f64>) -> f64 {
    xs.sort_by(f64::total_cmp);
    let n = xs.len();
    if n % 2 == 1 {
        xs[n / 2]
    } else {
        (xs[n / 2 - 1] + xs[n / 2]) / 2.0
    }
}

fn measure<T: Element>(plan: &GemmPlan, dims: Dims, args: &Args) -> Result<Row> {
    let (a, b) = common::operands::<T>(dims, args.seed);
    let checksums = (checksum(&a), checksum(&b));
    let av = MatrixView::dense(&a, dims.m, dims.k)?;
    let bv = MatrixView::dense(&b, dims.k, dims.n)?;
    let mut c = vec![T::ZERO; dims.m * dims.n];

    let verified = if args.check {
        let mut want = c.clone();
        gemm_naive(
            dims,
            av,
            bv,
            MatrixViewMut::dense(&mut want, dims.m, dims.n)?,
        )?;
        gemm_blocked(
            plan,
            dims,
            av,
            bv,
            MatrixViewMut::dense(&mut c, dims.m, dims.n)?,
        )?;
        let zeros = vec![T::ZERO; dims.m * dims.n];
        let bounds = error_bounds(
            dims,
            av,
            bv,
            MatrixView::dense(&zeros, dims.m, dims.n)?,
            4.0,
        );
        compare(&c, &want, &bounds).passed
    } else {
        false
    };

    let mut times = Vec::with_capacity(args.reps);
    for _ in 0..args.reps {
        let start = Instant::now();
        gemm_blocked(
            plan,
            dims,
            av,
            bv,
            MatrixViewMut::dense(&mut c, dims.m, dims.n)?,
        )?;
        times.push(start.elapsed().as_secs_f64());
    }
    Ok(Row {
        plan: *plan,
        seconds: median(times),
        verified,
        checksums,
    })
}

fn plan_for(
    problem: &Problem,
    variant: Variant,
    args: &Args,
    cache: &CacheSpec,
    tuned: Option<&TuneCache>,
) -> Result<GemmPlan> {
    let res = variant.residency();
    let explicit = args.mr.is_some() || args.nr.is_some() || args.kr.is_some();
    let tuned_entry = if explicit {
        None
    } else {
        tuned.and_then(|t| t.lookup(problem.dims, args.dtype, variant))
    };
    let plan = match tuned_entry {
        Some(e) => GemmPlan::new(variant, e.blocking(), e.shape(), args.dtype)?,
        None => {
            let shape = common::shape_from_flags(
                res,
                args.mr,
                args.nr,
                args.kr,
                default_shape(res, args.dtype),
            )?;
            GemmPlan::with_shape(variant, shape, args.dtype, problem.dims, cache)?
        }
    };
    Ok(plan
        .pack(args.pack)
        .parallel(ParallelSpec::new(args.parallel_loop, args.threads)?))
}

pub fn run(args: Args) -> Result<ExitCode> {
    if args.reps == 0 {
        return Err(usage("--reps must be at least 1"));
    }
    if !args.dims.is_empty() && args.workload != "square" {
        return Err(usage("--dims applies to --workload square only"));
    }
    let cache = common::cache_spec(args.cache_spec.as_deref())?;
    let problems = common::workload(&args.workload, &args.dims, args.scale_divisor)?;
    let tuned = match args.tune_cache.clone().or_else(default_cache_path) {
        Some(p) if p.exists() => {
            Some(load_results(&p).with_context(|| format!("reading {}", p.display()))?)
        }
        _ => None,
    };

    // Validate every plan before any timing starts.
    let mut jobs = Vec::new();
    for problem in &problems {
        for variant in args.variant.variants() {
            jobs.push((
                problem,
                plan_for(problem, variant, &args, &cache, tuned.as_ref())?,
            ));
        }
    }

    let mut out = csv::Writer::from_writer(common::output(args.output.as_ref())?);
    out.write_record(HEADER)?;
    let mut unverified = Vec::new();
    for (problem, plan) in jobs {
        let row = match args.dtype {
            ElemType::F32 => measure::<f32>(&plan, problem.dims, &args)?,
            ElemType::F64 => measure::<f64>(&plan, problem.dims, &args)?,
        };
        if args.check && !row.verified {
            unverified.push(format!(
                "{} #{} {} {}",
                problem.workload, problem.id, problem.dims, plan.variant
            ));
        }
        let d = problem.dims;
        let p = row.plan;
        out.write_record([
            CSV_SCHEMA.to_string(),
            problem.workload.clone(),
            problem.id.to_string(),
            d.m.to_string(),
            d.n.to_string(),
            d.k.to_string(),
            p.variant.to_string(),
            p.elem.name().to_string(),
            p.shape.mr.to_string(),
            p.shape.nr.to_string(),
            p.shape.kr.to_string(),
            p.blocking.mc.to_string(),
            p.blocking.nc.to_string(),
            p.blocking.kc.to_string(),
            p.pack.name().to_string(),
            p.parallel.parallel_loop().name().to_string(),
            p.parallel.threads().to_string(),
            args.reps.to_string(),
            format!("{:.9}", row.seconds),
            format!("{:.4}", gflops(d, row.seconds)),
            row.verified.to_string(),
            format!("{:016x}", row.checksums.0),
            format!("{:016x}", row.checksums.1),
            if p.uses_compiled_kernel() {
                "compiled"
            } else {
                "generic"
            }
            .to_string(),
        ])?;
        out.flush()?;
    }
    if unverified.is_empty() {
        Ok(ExitCode::SUCCESS)
    } else {
        for case in unverified {
            eprintln!("verification failed: {case}");
        }
        Ok(ExitCode::from(1))
    }
}
