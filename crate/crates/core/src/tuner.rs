//! Exhaustive micro-kernel shape search with replayable timing and a
//! persistent JSON cache of the winners.

use std::cell::OnceCell;
use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::blocked::{gemm_blocked, GemmPlan};
use crate::element::Element;
use crate::error::{Error, Result};
use crate::microkernels::RegisterBudget;
use crate::oracle::{compare, error_bounds, gemm_naive};
use crate::rng::{random_matrix, Lcg64};
use crate::types::{
    BlockingParams, CacheSpec, Dims, ElemType, MatrixView, MatrixViewMut, MicroShape, PackConfig,
    ParallelSpec, Variant,
};

/// Environment variable naming the default tuning-cache file.
pub const TUNE_CACHE_ENV: &str = "PANELFORGE_TUNE_CACHE";

/// Current tuning-cache format.
pub const FORMAT_VERSION: u64 = 1;

/// Source of per-run timings. `run` performs one GEMM; implementations may
/// skip it and report a recorded figure instead.
pub trait Timer {
    fn time(&mut self, shape: MicroShape, rep: usize, run: &mut dyn FnMut()) -> Result<f64>;
}

/// Monotonic wall-clock timing of the real run.
#[derive(Debug, Default, Clone, Copy)]
pub struct WallClock;

impl Timer for WallClock {
    fn time(&mut self, _shape: MicroShape, _rep: usize, run: &mut dyn FnMut()) -> Result<f64> {
        let start = Instant::now();
        run();
        Ok(start.elapsed().as_secs_f64())
    }
}

/// Recorded seconds for one shape.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ShapeTimings {
    pub mr: usize,
    pub nr: usize,
    #[serde(default)]
    pub kr: usize,
    pub seconds: Vec<f64>,
}

/// Replays recorded timings without running anything. Repetition `r`
/// reads entry `r mod len` of the shape's list.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ReplayTimer {
    times: BTreeMap<MicroShape, Vec<f64>>,
}

impl ReplayTimer {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn with(mut self, shape: MicroShape, seconds: Vec<f64>) -> Self {
        self.times.insert(shape, seconds);
        self
    }

    pub fn insert(&mut self, shape: MicroShape, seconds: Vec<f64>) {
        self.times.insert(shape, seconds);
    }

    pub fn entries(&self) -> Vec<ShapeTimings> {
        self.times
            .iter()
            .map(|(s, t)| ShapeTimings {
                mr: s.mr,
                nr: s.nr,
                kr: s.kr,
                seconds: t.clone(),
            })
            .collect()
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&self.entries()).expect("timings serialize")
    }

    /// Parses a JSON list of `{mr, nr, kr, seconds}` objects.
    pub fn from_json(text: &str) -> Result<Self> {
        let entries: Vec<ShapeTimings> = serde_json::from_str(text).map_err(parse_error)?;
        Self::from_entries(entries)
    }

    pub fn from_entries(entries: Vec<ShapeTimings>) -> Result<Self> {
        let mut t = ReplayTimer::new();
        for e in entries {
            if e.seconds.is_empty() {
                return Err(Error::Parse {
                    line: 0,
                    msg: format!("no timings for {}x{}", e.mr, e.nr),
                });
            }
            t.insert(
                MicroShape {
                    mr: e.mr,
                    nr: e.nr,
                    kr: e.kr,
                },
                e.seconds,
            );
        }
        Ok(t)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }
}

impl Timer for ReplayTimer {
    fn time(&mut self, shape: MicroShape, rep: usize, _run: &mut dyn FnMut()) -> Result<f64> {
        let list = self.times.get(&shape).ok_or(Error::MissingTiming(shape))?;
        Ok(list[rep % list.len()])
    }
}

/// Wraps a timer and keeps every figure it returns, so a live session can
/// be replayed later.
#[derive(Debug)]
pub struct Recorder<T> {
    inner: T,
    log: ReplayTimer,
}

impl<T: Timer> Recorder<T> {
    pub fn new(inner: T) -> Self {
        Recorder {
            inner,
            log: ReplayTimer::new(),
        }
    }

    pub fn into_replay(self) -> ReplayTimer {
        self.log
    }
}

impl<T: Timer> Timer for Recorder<T> {
    fn time(&mut self, shape: MicroShape, rep: usize, run: &mut dyn FnMut()) -> Result<f64> {
        let s = self.inner.time(shape, rep, run)?;
        self.log.times.entry(shape).or_default().push(s);
        Ok(s)
    }
}

/// Knobs of a tuning session.
#[derive(Debug, Clone, Copy)]
pub struct TuneConfig {
    pub cache: CacheSpec,
    pub reps: usize,
    /// Check each shape against the oracle on a truncated problem first.
    pub verify: bool,
    pub pack: PackConfig,
    pub parallel: ParallelSpec,
    pub seed: u64,
}

impl Default for TuneConfig {
    fn default() -> Self {
        TuneConfig {
            cache: CacheSpec::carmel(),
            reps: 3,
            verify: true,
            pack: PackConfig::BOTH,
            parallel: ParallelSpec::SEQUENTIAL,
            seed: 42,
        }
    }
}

/// One timed shape.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trial {
    pub shape: MicroShape,
    pub blocking: BlockingParams,
    /// Median over the repetitions.
    pub seconds: f64,
    pub gflops: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TuneResult {
    pub dims: Dims,
    pub elem: ElemType,
    pub variant: Variant,
    pub best: MicroShape,
    pub blocking: BlockingParams,
    pub gflops: f64,
    pub trials: Vec<Trial>,
    /// Shapes dropped because they disagreed with the oracle.
    pub rejected: Vec<MicroShape>,
}

impl TuneResult {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("result serializes")
    }
}

/// `2·m·n·k / seconds / 1e9`.
pub fn gflops(dims: Dims, seconds: f64) -> f64 {
    dims.flops() / seconds / 1e9
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

/// Runs the plan for `shape` on a problem truncated to at most 67 per side
/// and checks it against the oracle.
fn verify_shape<T: Element>(
    variant: Variant,
    shape: MicroShape,
    dims: Dims,
    cfg: &TuneConfig,
) -> Result<bool> {
    let small = Dims {
        m: dims.m.min(67),
        n: dims.n.min(67),
        k: dims.k.min(67),
    };
    let plan = GemmPlan::with_shape(variant, shape, T::ELEM, small, &cfg.cache)?
        .pack(cfg.pack)
        .parallel(cfg.parallel);
    let mut rng = Lcg64::new(cfg.seed);
    let a: Vec<T> = random_matrix(small.m, small.k, &mut rng);
    let b: Vec<T> = random_matrix(small.k, small.n, &mut rng);
    let c0: Vec<T> = random_matrix(small.m, small.n, &mut rng);
    let av = MatrixView::dense(&a, small.m, small.k)?;
    let bv = MatrixView::dense(&b, small.k, small.n)?;
    let mut want = c0.clone();
    gemm_naive(
        small,
        av,
        bv,
        MatrixViewMut::dense(&mut want, small.m, small.n)?,
    )?;
    let mut got = c0.clone();
    gemm_blocked(
        &plan,
        small,
        av,
        bv,
        MatrixViewMut::dense(&mut got, small.m, small.n)?,
    )?;
    let bounds = error_bounds(
        small,
        av,
        bv,
        MatrixView::dense(&c0, small.m, small.n)?,
        4.0,
    );
    Ok(compare(&got, &want, &bounds).passed)
}

/// Tunes with the default configuration and `reps` repetitions.
pub fn tune<T: Element>(
    dims: Dims,
    variant: Variant,
    grid: &[MicroShape],
    timer: &mut dyn Timer,
    reps: usize,
) -> Result<TuneResult> {
    tune_with::<T>(
        dims,
        variant,
        grid,
        timer,
        &TuneConfig {
            reps,
            ..TuneConfig::default()
        },
    )
}

/// Times every shape of `grid` (blocking re-derived per shape, median of
/// `cfg.reps` runs) and keeps the fastest; ties go to the smaller
/// `(mr, nr, kr)`.
pub fn tune_with<T: Element>(
    dims: Dims,
    variant: Variant,
    grid: &[MicroShape],
    timer: &mut dyn Timer,
    cfg: &TuneConfig,
) -> Result<TuneResult> {
    if grid.is_empty() {
        return Err(Error::EmptyGrid);
    }
    if cfg.reps < 3 {
        return Err(Error::InvalidArgument(format!(
            "reps must be at least 3, got {}",
            cfg.reps
        )));
    }
    // Operands are only materialized when a timer actually runs the GEMM.
    let operands: OnceCell<(Vec<T>, Vec<T>)> = OnceCell::new();
    let mut c: Vec<T> = Vec::new();
    let mut trials = Vec::with_capacity(grid.len());
    let mut rejected = Vec::new();

    for &shape in grid {
        let plan = GemmPlan::with_shape(variant, shape, T::ELEM, dims, &cfg.cache)?
            .pack(cfg.pack)
            .parallel(cfg.parallel);
        plan.validate()?;
        if cfg.verify && !verify_shape::<T>(variant, shape, dims, cfg)? {
            rejected.push(shape);
            continue;
        }
        let mut times = Vec::with_capacity(cfg.reps);
        for rep in 0..cfg.reps {
            let mut run = || {
                let (a, b) = operands.get_or_init(|| {
                    let mut rng = Lcg64::new(cfg.seed);
                    (
                        random_matrix(dims.m, dims.k, &mut rng),
                        random_matrix(dims.k, dims.n, &mut rng),
                    )
                });
                if c.is_empty() {
                    c = vec![T::ZERO; dims.m * dims.n];
                }
                let mut run = || -> Result<()> {
                    gemm_blocked(
                        &plan,
                        dims,
                        MatrixView::dense(a, dims.m, dims.k)?,
                        MatrixView::dense(b, dims.k, dims.n)?,
                        MatrixViewMut::dense(&mut c, dims.m, dims.n)?,
                    )
                };
                run().expect("validated plan runs");
            };
            times.push(timer.time(shape, rep, &mut run)?);
        }
        let seconds = median(times);
        trials.push(Trial {
            shape,
            blocking: plan.blocking,
            seconds,
            gflops: gflops(dims, seconds),
        });
    }

    let best = trials
        .iter()
        .reduce(|best, t| {
            let better = t.gflops > best.gflops
                || (t.gflops == best.gflops && t.shape.tie_key() < best.shape.tie_key());
            if better {
                t
            } else {
                best
            }
        })
        .ok_or_else(|| Error::VerificationFailed(*rejected.last().expect("grid was nonempty")))?
        .clone();

    Ok(TuneResult {
        dims,
        elem: T::ELEM,
        variant,
        best: best.shape,
        blocking: best.blocking,
        gflops: best.gflops,
        trials,
        rejected,
    })
}

/// Target the tuning cache was produced on.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Machine {
    pub cache: CacheSpec,
    pub lane_width_bits: usize,
}

impl Default for Machine {
    fn default() -> Self {
        Machine {
            cache: CacheSpec::carmel(),
            lane_width_bits: RegisterBudget::DEFAULT.vector_bits,
        }
    }
}

/// One persisted winner. `kr` is 0 for CReg shapes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TuneEntry {
    pub m: usize,
    pub n: usize,
    pub k: usize,
    pub dtype: ElemType,
    pub variant: Variant,
    pub mr: usize,
    pub nr: usize,
    #[serde(default)]
    pub kr: usize,
    pub mc: usize,
    pub nc: usize,
    pub kc: usize,
    pub gflops: f64,
}

impl TuneEntry {
    pub fn dims(&self) -> Dims {
        Dims {
            m: self.m,
            n: self.n,
            k: self.k,
        }
    }

    pub fn shape(&self) -> MicroShape {
        MicroShape {
            mr: self.mr,
            nr: self.nr,
            kr: self.kr,
        }
    }

    pub fn blocking(&self) -> BlockingParams {
        BlockingParams {
            mc: self.mc,
            nc: self.nc,
            kc: self.kc,
        }
    }
}

impl From<&TuneResult> for TuneEntry {
    fn from(r: &TuneResult) -> Self {
        TuneEntry {
            m: r.dims.m,
            n: r.dims.n,
            k: r.dims.k,
            dtype: r.elem,
            variant: r.variant,
            mr: r.best.mr,
            nr: r.best.nr,
            kr: r.best.kr,
            mc: r.blocking.mc,
            nc: r.blocking.nc,
            kc: r.blocking.kc,
            gflops: r.gflops,
        }
    }
}

/// Versioned tuning cache.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TuneCache {
    pub version: u64,
    pub machine: Machine,
    pub entries: Vec<TuneEntry>,
}

impl Default for TuneCache {
    fn default() -> Self {
        TuneCache {
            version: FORMAT_VERSION,
            machine: Machine::default(),
            entries: Vec::new(),
        }
    }
}

impl TuneCache {
    pub fn new(machine: Machine) -> Self {
        TuneCache {
            machine,
            ..Self::default()
        }
    }

    pub fn lookup(&self, dims: Dims, dtype: ElemType, variant: Variant) -> Option<&TuneEntry> {
        self.entries
            .iter()
            .find(|e| e.dims() == dims && e.dtype == dtype && e.variant == variant)
    }

    /// Adds an entry, replacing any for the same problem.
    pub fn record(&mut self, entry: TuneEntry) {
        self.entries.retain(|e| {
            !(e.dims() == entry.dims() && e.dtype == entry.dtype && e.variant == entry.variant)
        });
        self.entries.push(entry);
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("cache serializes")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let value: serde_json::Value = serde_json::from_str(text).map_err(parse_error)?;
        let found = value
            .get("version")
            .and_then(serde_json::Value::as_u64)
            .ok_or_else(|| Error::Parse {
                line: 1,
                msg: "missing numeric `version` field".into(),
            })?;
        if found != FORMAT_VERSION {
            return Err(Error::FormatVersionMismatch {
                found,
                expected: FORMAT_VERSION,
            });
        }
        // Re-parse from text so errors carry a line number.
        serde_json::from_str(text).map_err(parse_error)
    }
}

fn parse_error(e: serde_json::Error) -> Error {
    Error::Parse {
        line: e.line(),
        msg: e.to_string(),
    }
}

pub fn save_results(cache: &TuneCache, path: &Path) -> Result<()> {
    std::fs::write(path, cache.to_json() + "\n")?;
    Ok(())
}

pub fn load_results(path: &Path) -> Result<TuneCache> {
    TuneCache::from_json(&std::fs::read_to_string(path)?)
}

/// The path named by `PANELFORGE_TUNE_CACHE`, if set and non-empty.
pub fn default_cache_path() -> Option<PathBuf> {
    std::env::var_os(TUNE_CACHE_ENV)
        .filter(|v| !v.is_empty())
        .map(PathBuf::from)
}
