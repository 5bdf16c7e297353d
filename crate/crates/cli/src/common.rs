//! Flag parsing and operand plumbing shared by the subcommands.

use std::fmt;
use std::fs::File;
use std::io::{self, Write};
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use panelforge::rng::{random_matrix, Lcg64};
use panelforge::workloads::{load_csv, resnet50_shapes, scaled, LayerShape};
use panelforge::{CacheSpec, Dims, Element, MicroShape, Residency, Variant};

/// Error reported with exit status 2.
#[derive(Debug)]
pub struct Usage(pub String);

impl fmt::Display for Usage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for Usage {}

pub fn usage(msg: impl Into<String>) -> anyhow::Error {
    Usage(msg.into()).into()
}

/// CSV schema version written in every row's `schema` column.
pub const CSV_SCHEMA: u32 = 1;

/// `all` or a single variant name.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum VariantSel {
    All,
    One(Variant),
}

impl std::str::FromStr for VariantSel {
    type Err = panelforge::Error;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        if s.eq_ignore_ascii_case("all") {
            Ok(VariantSel::All)
        } else {
            s.parse().map(VariantSel::One)
        }
    }
}

impl VariantSel {
    pub fn variants(self) -> Vec<Variant> {
        match self {
            VariantSel::All => Variant::ALL.to_vec(),
            VariantSel::One(v) => vec![v],
        }
    }
}

/// Named problem in a workload.
#[derive(Debug, Clone)]
pub struct Problem {
    pub workload: String,
    pub id: usize,
    pub dims: Dims,
}

/// Expands `--workload` into problems. `spec` is `resnet50`, `square` or
/// a CSV path with columns `id,m,n,k`.
pub fn workload(spec: &str, dims: &[Dims], scale_divisor: usize) -> Result<Vec<Problem>> {
    if scale_divisor == 0 {
        return Err(usage("--scale-divisor must be at least 1"));
    }
    let rows = |name: &str, shapes: Vec<LayerShape>| -> Vec<Problem> {
        shapes
            .into_iter()
            .map(|s| Problem {
                workload: name.to_string(),
                id: s.id,
                dims: scaled(s, scale_divisor),
            })
            .collect()
    };
    match spec {
        "resnet50" => Ok(rows("resnet50", resnet50_shapes())),
        "square" | "custom" => {
            let list = if dims.is_empty() {
                vec![Dims::new(1024, 1024, 1024)?]
            } else {
                dims.to_vec()
            };
            Ok(list
                .into_iter()
                .enumerate()
                .map(|(i, d)| Problem {
                    workload: spec.to_string(),
                    id: i + 1,
                    dims: d,
                })
                .collect())
        }
        path => {
            let path = path.strip_prefix("csv:").unwrap_or(path);
            let shapes =
                load_csv(Path::new(path)).with_context(|| format!("reading workload {path}"))?;
            Ok(rows(path, shapes))
        }
    }
}

/// Register tile from `--mr/--nr/--kr` for `residency`, falling back to
/// `default` for unset dimensions.
pub fn shape_from_flags(
    residency: Residency,
    mr: Option<usize>,
    nr: Option<usize>,
    kr: Option<usize>,
    default: MicroShape,
) -> Result<MicroShape> {
    let shape = match residency {
        Residency::CReg => {
            if kr.is_some_and(|k| k != 0) {
                return Err(usage("--kr does not apply to C-resident variants"));
            }
            MicroShape::creg(mr.unwrap_or(default.mr), nr.unwrap_or(default.nr))
        }
        Residency::AReg => {
            if nr.is_some() {
                return Err(usage(
                    "--nr does not apply to A-resident variants; use --mr and --kr",
                ));
            }
            MicroShape::areg(mr.unwrap_or(default.mr), kr.unwrap_or(default.kr))
        }
        Residency::BReg => {
            if mr.is_some() {
                return Err(usage(
                    "--mr does not apply to B-resident variants; use --kr and --nr",
                ));
            }
            MicroShape::breg(kr.unwrap_or(default.kr), nr.unwrap_or(default.nr))
        }
    };
    shape
        .validate(residency)
        .map_err(|e| usage(e.to_string()))?;
    Ok(shape)
}

pub fn cache_spec(path: Option<&Path>) -> Result<CacheSpec> {
    match path {
        Some(p) => {
            CacheSpec::load(p).with_context(|| format!("reading cache spec {}", p.display()))
        }
        None => Ok(CacheSpec::carmel()),
    }
}

/// `A` (m×k) and `B` (k×n) drawn in that order from a generator seeded with `seed`.
pub fn operands<T: Element>(dims: Dims, seed: u64) -> (Vec<T>, Vec<T>) {
    let mut rng = Lcg64::new(seed);
    let a = random_matrix(dims.m, dims.k, &mut rng);
    let b = random_matrix(dims.k, dims.n, &mut rng);
    (a, b)
}

/// Stdout, or a file when `path` is given.
pub fn output(path: Option<&PathBuf>) -> Result<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(io::BufWriter::new(
            File::create(p).with_context(|| format!("creating {}", p.display()))?,
        )),
        None => Box::new(io::stdout().lock()),
    })
}
