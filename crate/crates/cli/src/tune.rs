use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{Context, Result};
use panelforge::tuner::{
    default_cache_path, load_results, save_results, tune_with, Machine, Recorder, ReplayTimer,
    ShapeTimings, TuneCache, TuneConfig, TuneEntry, TuneResult, WallClock,
};
use panelforge::{
    default_grid, Dims, ElemType, Element, MicroShape, PackConfig, ParallelLoop, ParallelSpec,
    Variant,
};
use serde::{Deserialize, Serialize};

use crate::common::{self, usage, CSV_SCHEMA};

#[derive(Debug, clap::Args)]
pub struct Args {
    /// `resnet50`, `square`, or a CSV file with columns id,m,n,k.
    #[arg(long, default_value = "square")]
    workload: String,
    /// Problems for `square`, comma separated.
    #[arg(long, value_delimiter = ',')]
    dims: Vec<Dims>,
    #[arg(long, default_value_t = 1)]
    scale_divisor: usize,
    /// Only tune these workload ids (comma separated).
    #[arg(long, value_delimiter = ',')]
    layers: Vec<usize>,
    #[arg(long, default_value = "B3A2C0")]
    variant: Variant,
    #[arg(long, default_value = "f32")]
    dtype: ElemType,
    /// `default` for the compiled grid of the variant's residency, or a
    /// comma-separated list such as `4x16,8x12` (`{mr}x{kr}` for A-resident,
    /// `{kr}x{nr}` for B-resident variants).
    #[arg(long, default_value = "default")]
    grid: String,
    #[arg(long, default_value_t = 3)]
    reps: usize,
    #[arg(long, default_value_t = 42)]
    seed: u64,
    /// Skip the per-shape oracle check.
    #[arg(long)]
    no_verify: bool,
    #[arg(long, default_value = "both")]
    pack: PackConfig,
    #[arg(long, default_value = "none")]
    parallel_loop: ParallelLoop,
    #[arg(long, default_value_t = 1)]
    threads: usize,
    #[arg(long)]
    cache_spec: Option<PathBuf>,
    /// Replay timings recorded with --record instead of running.
    #[arg(long)]
    replay: Option<PathBuf>,
    /// Save the measured timings for later replay.
    #[arg(long)]
    record: Option<PathBuf>,
    /// Tuning cache to update; defaults to $PANELFORGE_TUNE_CACHE, then
    /// panelforge-tune.json.
    #[arg(long)]
    tune_cache: Option<PathBuf>,
    /// CSV of every trial; stdout by default.
    #[arg(long)]
    output: Option<PathBuf>,
}

/// Recorded timings of one problem.
#[derive(Debug, Serialize, Deserialize)]
struct ProblemTimings {
    m: usize,
    n: usize,
    k: usize,
    timings: Vec<ShapeTimings>,
}

fn parse_grid(spec: &str, variant: Variant, elem: ElemType) -> Result<Vec<MicroShape>> {
    let res = variant.residency();
    if spec == "default" {
        return Ok(default_grid(res, elem));
    }
    let mut grid = Vec::new();
    for item in spec.split(',').map(str::trim).filter(|s| !s.is_empty()) {
        let (x, y) = item
            .split_once('x')
            .and_then(|(x, y)| Some((x.parse::<usize>().ok()?, y.parse::<usize>().ok()?)))
            .ok_or_else(|| usage(format!("bad grid entry {item:?}, expected AxB")))?;
        let shape = match res {
            panelforge::Residency::CReg => MicroShape::creg(x, y),
            panelforge::Residency::AReg => MicroShape::areg(x, y),
            panelforge::Residency::BReg => MicroShape::breg(x, y),
        };
        shape.validate(res).map_err(|e| usage(e.to_string()))?;
        grid.push(shape);
    }
    if grid.is_empty() {
        return Err(usage("the micro-kernel grid is empty"));
    }
    Ok(grid)
}

fn tune_one<T: Element>(
    dims: Dims,
    args: &Args,
    grid: &[MicroShape],
    cfg: &TuneConfig,
    replay: Option<&[ProblemTimings]>,
    recorded: &mut Vec<ProblemTimings>,
) -> Result<TuneResult> {
    match replay {
        Some(all) => {
            let entry = all
                .iter()
                .find(|p| (p.m, p.n, p.k) == (dims.m, dims.n, dims.k))
                .with_context(|| format!("replay file has no timings for {dims}"))?;
            let mut timer = ReplayTimer::from_entries(entry.timings.clone())?;
            Ok(tune_with::<T>(dims, args.variant, grid, &mut timer, cfg)?)
        }
        None => {
            let mut timer = Recorder::new(WallClock);
            let result = tune_with::<T>(dims, args.variant, grid, &mut timer, cfg)?;
            recorded.push(ProblemTimings {
                m: dims.m,
                n: dims.n,
                k: dims.k,
                timings: timer.into_replay().entries(),
            });
            Ok(result)
        }
    }
}

pub fn run(args: Args) -> Result<ExitCode> {
    let grid = parse_grid(&args.grid, args.variant, args.dtype)?;
    if args.reps < 3 {
        return Err(usage("--reps must be at least 3"));
    }
    let cache = common::cache_spec(args.cache_spec.as_deref())?;
    let mut problems = common::workload(&args.workload, &args.dims, args.scale_divisor)?;
    if !args.layers.is_empty() {
        problems.retain(|p| args.layers.contains(&p.id));
        if problems.is_empty() {
            return Err(usage("--layers selected no workload rows"));
        }
    }
    let replay: Option<Vec<ProblemTimings>> = match &args.replay {
        Some(p) => {
            let text =
                std::fs::read_to_string(p).with_context(|| format!("reading {}", p.display()))?;
            Some(serde_json::from_str(&text).with_context(|| format!("parsing {}", p.display()))?)
        }
        None => None,
    };
    let cfg = TuneConfig {
        cache,
        reps: args.reps,
        verify: !args.no_verify,
        pack: args.pack,
        parallel: ParallelSpec::new(args.parallel_loop, args.threads)?,
        seed: args.seed,
    };

    let cache_path = args
        .tune_cache
        .clone()
        .or_else(default_cache_path)
        .unwrap_or_else(|| PathBuf::from("panelforge-tune.json"));
    let mut tune_cache = if cache_path.exists() {
        load_results(&cache_path).with_context(|| format!("reading {}", cache_path.display()))?
    } else {
        TuneCache::new(Machine {
            cache,
            ..Machine::default()
        })
    };

    let mut out = csv::Writer::from_writer(common::output(args.output.as_ref())?);
    out.write_record([
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
        "median_seconds",
        "gflops",
        "best",
    ])?;
    let mut recorded = Vec::new();
    for problem in &problems {
        let result = match args.dtype {
            ElemType::F32 => tune_one::<f32>(
                problem.dims,
                &args,
                &grid,
                &cfg,
                replay.as_deref(),
                &mut recorded,
            )?,
            ElemType::F64 => tune_one::<f64>(
                problem.dims,
                &args,
                &grid,
                &cfg,
                replay.as_deref(),
                &mut recorded,
            )?,
        };
        for shape in &result.rejected {
            eprintln!(
                "{} #{}: shape {shape} failed verification and was skipped",
                problem.workload, problem.id
            );
        }
        let d = problem.dims;
        for t in &result.trials {
            out.write_record([
                CSV_SCHEMA.to_string(),
                problem.workload.clone(),
                problem.id.to_string(),
                d.m.to_string(),
                d.n.to_string(),
                d.k.to_string(),
                result.variant.to_string(),
                result.elem.name().to_string(),
                t.shape.mr.to_string(),
                t.shape.nr.to_string(),
                t.shape.kr.to_string(),
                t.blocking.mc.to_string(),
                t.blocking.nc.to_string(),
                t.blocking.kc.to_string(),
                format!("{:.9}", t.seconds),
                format!("{:.4}", t.gflops),
                (t.shape == result.best).to_string(),
            ])?;
        }
        out.flush()?;
        tune_cache.record(TuneEntry::from(&result));
    }
    save_results(&tune_cache, &cache_path)
        .with_context(|| format!("writing {}", cache_path.display()))?;
    if let Some(path) = &args.record {
        if args.replay.is_none() {
            std::fs::write(path, serde_json::to_string_pretty(&recorded)? + "\n")
                .with_context(|| format!("writing {}", path.display()))?;
        }
    }
    Ok(ExitCode::SUCCESS)
}
