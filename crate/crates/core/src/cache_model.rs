//! Analytical choice of (mc, nc, kc) from cache geometry, and the
//! occupancy arithmetic for the packed panels.
//!
//! Each level is split into ways. In L1 the A micro-panel and the B
//! micro-panel share the ways left after one is reserved for C; L2 holds
//! `Ac` beside one reserved way and the ways touched by `Br`; L3 holds `Bc`
//! beside one reserved way and the ways touched by `Ar`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::types::{
    BlockingParams, CacheLevel, CacheSpec, Dims, ElemType, MicroShape, Residency, Variant,
};

/// Fraction of each cache level covered by the packed operands of a plan.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OccupancyReport {
    /// `Br` (kc × nr) over L1.
    pub l1_fraction: f64,
    /// `Ac` (mc × kc) over L2.
    pub l2_fraction: f64,
    /// `Bc` (kc × nc) over L3.
    pub l3_fraction: f64,
}

impl OccupancyReport {
    pub fn new(
        params: BlockingParams,
        shape: MicroShape,
        elem: ElemType,
        cache: &CacheSpec,
    ) -> Self {
        OccupancyReport {
            l1_fraction: l1_occupancy(params.kc, shape.nr, elem, cache.l1.size_bytes),
            l2_fraction: l2_occupancy(params.mc, params.kc, elem, cache.l2.size_bytes),
            l3_fraction: l3_occupancy(params.kc, params.nc, elem, cache.l3.size_bytes),
        }
    }
}

/// `kc·nr·size / l1`: share of L1 taken by one `Br` micro-panel.
pub fn l1_occupancy(kc: usize, nr: usize, elem: ElemType, l1_size_bytes: usize) -> f64 {
    (kc * nr * elem.size_bytes()) as f64 / l1_size_bytes as f64
}

/// `mc·kc·size / l2`: share of L2 taken by `Ac`.
pub fn l2_occupancy(mc: usize, kc: usize, elem: ElemType, l2_size_bytes: usize) -> f64 {
    (mc * kc * elem.size_bytes()) as f64 / l2_size_bytes as f64
}

/// `kc·nc·size / l3`: share of L3 taken by `Bc`.
pub fn l3_occupancy(kc: usize, nc: usize, elem: ElemType, l3_size_bytes: usize) -> f64 {
    (kc * nc * elem.size_bytes()) as f64 / l3_size_bytes as f64
}

/// Formats a fraction as a percentage with three significant figures
/// (ties to even) and two decimals, e.g. `0.046875 → "4.69"`,
/// `0.03125 → "3.12"`, `0.21875 → "21.90"`.
pub fn format_percent(fraction: f64) -> String {
    let pct = fraction * 100.0;
    if pct == 0.0 || !pct.is_finite() {
        return format!("{pct:.2}");
    }
    let exp = pct.abs().log10().floor() as i32;
    let scale = 10f64.powi(2 - exp);
    let rounded = (pct * scale).round_ties_even() / scale;
    format!("{rounded:.2}")
}

fn too_small(level: &'static str, detail: String) -> Error {
    Error::CacheTooSmall { level, detail }
}

/// Ways of `level` left for a block after one reserved way and the ways
/// touched by `other_bytes`.
fn free_ways(level: &CacheLevel, other_bytes: usize, name: &'static str) -> Result<usize> {
    let taken = 1 + other_bytes.div_ceil(level.way_bytes());
    level
        .ways
        .checked_sub(taken)
        .filter(|&w| w > 0)
        .ok_or_else(|| {
            too_small(
                name,
                format!(
                    "{} ways cannot hold a block beside {taken} reserved ways",
                    level.ways
                ),
            )
        })
}

/// Derives blocking for the B3A2C0 loop order: `Br` in L1, `Ac` in L2,
/// `Bc` in L3. `shape.mr`/`shape.nr` are the register tile.
pub fn derive_blocking(
    cache: &CacheSpec,
    shape: MicroShape,
    elem: ElemType,
    dims: Dims,
) -> Result<(BlockingParams, OccupancyReport)> {
    cache.validate()?;
    let (mr, nr) = (shape.mr, shape.nr);
    if mr == 0 || nr == 0 {
        return Err(Error::InvalidShape {
            shape,
            residency: Residency::CReg,
            reason: "mr and nr must be positive".into(),
        });
    }
    let s = elem.size_bytes();

    let l1 = &cache.l1;
    if l1.ways < 3 {
        return Err(too_small(
            "l1",
            format!("{} ways leave no room for both micro-panels", l1.ways),
        ));
    }
    let wb1 = l1.way_bytes();
    let c_ar = ((l1.ways - 1) * mr / (mr + nr)).clamp(1, l1.ways - 2);
    let c_br = l1.ways - 1 - c_ar;
    let kc_model = (c_ar * wb1 / (mr * s))
        .min(c_br * wb1 / (nr * s))
        .min(l1.size_bytes / 2 / (nr * s));
    if kc_model == 0 {
        return Err(too_small("l1", format!("no kc fits a {mr}x{nr} tile")));
    }
    let kc = kc_model.min(dims.k);

    let l2 = &cache.l2;
    let ways2 = free_ways(l2, kc * nr * s, "l2")?;
    let mc_model = ways2 * l2.way_bytes() / (kc * s) / mr * mr;
    if mc_model < mr {
        return Err(too_small("l2", format!("mc {mc_model} below mr {mr}")));
    }
    let mc = mc_model.min(dims.m.div_ceil(mr) * mr);

    let l3 = &cache.l3;
    let ways3 = free_ways(l3, mr * kc * s, "l3")?;
    let nc_model = ways3 * l3.way_bytes() / (kc * s) / nr * nr;
    if nc_model < nr {
        return Err(too_small("l3", format!("nc {nc_model} below nr {nr}")));
    }
    let nc = nc_model.min(dims.n);

    let params = BlockingParams { mc, nc, kc };
    Ok((params, OccupancyReport::new(params, shape, elem, cache)))
}

/// Blocking for any variant. B3A2C0 uses [`derive_blocking`] directly;
/// A3B2C0 swaps the roles of the m and n sides. AReg variants model the
/// tile as mr×kr and BReg variants as kr×nr, with kc rounded down to a
/// multiple of kr.
pub fn plan_blocking(
    variant: Variant,
    cache: &CacheSpec,
    shape: MicroShape,
    elem: ElemType,
    dims: Dims,
) -> Result<(BlockingParams, OccupancyReport)> {
    let residency = variant.residency();
    shape.validate(residency)?;
    match variant {
        Variant::B3A2C0 => derive_blocking(cache, shape, elem, dims),
        Variant::A3B2C0 => {
            let swapped = MicroShape::creg(shape.nr, shape.mr);
            let (p, _) = derive_blocking(
                cache,
                swapped,
                elem,
                Dims {
                    m: dims.n,
                    n: dims.m,
                    k: dims.k,
                },
            )?;
            let params = BlockingParams {
                mc: p.nc,
                nc: p.mc,
                kc: p.kc,
            };
            Ok((params, OccupancyReport::new(params, shape, elem, cache)))
        }
        _ => {
            let (tile, kr) = match residency {
                Residency::AReg => (MicroShape::creg(shape.mr, shape.kr), shape.kr),
                _ => (MicroShape::creg(shape.kr, shape.nr), shape.kr),
            };
            let (mut p, _) = derive_blocking(cache, tile, elem, dims)?;
            if p.kc >= kr {
                p.kc = p.kc / kr * kr;
            }
            Ok((p, OccupancyReport::new(p, tile, elem, cache)))
        }
    }
}
