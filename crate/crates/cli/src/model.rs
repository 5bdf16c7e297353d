use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::Result;
use panelforge::blocked::default_shape;
use panelforge::cache_model::format_percent;
use panelforge::workloads::resnet50_shapes;
use panelforge::{plan_blocking, Dims, ElemType, Variant};

use crate::common::{self, usage};

#[derive(Debug, clap::Args)]
pub struct Args {
    /// Cache geometry file; Carmel-like by default.
    #[arg(long)]
    cache_spec: Option<PathBuf>,
    #[arg(long)]
    mr: Option<usize>,
    #[arg(long)]
    nr: Option<usize>,
    #[arg(long)]
    kr: Option<usize>,
    /// Problem `MxNxK`.
    #[arg(long, conflicts_with = "layer")]
    dims: Option<Dims>,
    /// ResNet50 layer id (1..=20) instead of --dims.
    #[arg(long)]
    layer: Option<usize>,
    #[arg(long, default_value = "f32")]
    dtype: ElemType,
    #[arg(long, default_value = "B3A2C0")]
    variant: Variant,
}

pub fn run(args: Args) -> Result<ExitCode> {
    let dims = match (args.dims, args.layer) {
        (Some(d), _) => d,
        (None, Some(id)) => resnet50_shapes()
            .into_iter()
            .find(|s| s.id == id)
            .ok_or_else(|| usage(format!("no ResNet50 layer {id}")))?
            .dims(),
        (None, None) => return Err(usage("one of --dims or --layer is required")),
    };
    let cache = common::cache_spec(args.cache_spec.as_deref())?;
    let res = args.variant.residency();
    let shape = common::shape_from_flags(
        res,
        args.mr,
        args.nr,
        args.kr,
        default_shape(res, args.dtype),
    )?;
    let (p, occ) = plan_blocking(args.variant, &cache, shape, args.dtype, dims)?;
    let (l1, l2, l3) = (
        format_percent(occ.l1_fraction),
        format_percent(occ.l2_fraction),
        format_percent(occ.l3_fraction),
    );

    println!(
        "variant {}  shape {shape}  {}  dims {dims}",
        args.variant,
        args.dtype.name()
    );
    println!(
        "cache   L1 {} B/{}-way  L2 {} B/{}-way  L3 {} B/{}-way",
        cache.l1.size_bytes,
        cache.l1.ways,
        cache.l2.size_bytes,
        cache.l2.ways,
        cache.l3.size_bytes,
        cache.l3.ways
    );
    println!("mc = {}  nc = {}  kc = {}", p.mc, p.nc, p.kc);
    println!("L1 = {l1}%  L2 = {l2}%  L3 = {l3}%");
    println!();
    println!("variant,dtype,m,n,k,mr,nr,kr,mc,nc,kc,l1_pct,l2_pct,l3_pct");
    println!(
        "{},{},{},{},{},{},{},{},{},{},{},{l1},{l2},{l3}",
        args.variant,
        args.dtype.name(),
        dims.m,
        dims.n,
        dims.k,
        shape.mr,
        shape.nr,
        shape.kr,
        p.mc,
        p.nc,
        p.kc
    );
    Ok(ExitCode::SUCCESS)
}
