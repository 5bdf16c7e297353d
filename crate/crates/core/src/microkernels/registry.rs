//! Compile-time instantiation of the default kernel grid.

use std::collections::BTreeMap;
use std::sync::OnceLock;

use super::{areg, breg, creg, LineStore, Packed, SliceLines, StridedColumns, StridedRows};
use crate::element::Element;
use crate::types::{MatrixView, MicroShape, Residency};

/// Raw strided line store into `C`. Lines are rows `stride` elements apart.
#[derive(Debug, Clone, Copy)]
pub struct RawLines<T> {
    ptr: *mut T,
    stride: usize,
}

impl<T> RawLines<T> {
    /// # Safety
    /// Every line the kernel touches (`line·stride .. line·stride + len`)
    /// must be valid for reads and writes and not accessed by anyone else
    /// while the store is in use.
    pub unsafe fn new(ptr: *mut T, stride: usize) -> Self {
        RawLines { ptr, stride }
    }
}

impl<T: Copy> LineStore<T> for RawLines<T> {
    #[inline(always)]
    fn load_line(&self, line: usize, out: &mut [T]) {
        // SAFETY: guaranteed by the constructor contract.
        unsafe {
            let src = self.ptr.add(line * self.stride);
            std::ptr::copy_nonoverlapping(src, out.as_mut_ptr(), out.len());
        }
    }

    #[inline(always)]
    fn store_line(&mut self, line: usize, src: &[T]) {
        // SAFETY: guaranteed by the constructor contract.
        unsafe {
            let dst = self.ptr.add(line * self.stride);
            std::ptr::copy_nonoverlapping(src.as_ptr(), dst, src.len());
        }
    }
}

/// Where a CReg kernel reads `A_r` from.
#[derive(Debug, Clone, Copy)]
pub enum ASource<'a, T> {
    Packed(&'a [T]),
    /// mr' × kc window of the original `A` (mr' ≤ mr).
    Strided(MatrixView<'a, T>),
}

/// Where a CReg kernel reads `B_r` from.
#[derive(Debug, Clone, Copy)]
pub enum BSource<'a, T> {
    Packed(&'a [T]),
    /// kc × nr' window of the original `B` (nr' ≤ nr).
    Strided(MatrixView<'a, T>),
}

pub type CRegFn<T> = fn(usize, ASource<'_, T>, BSource<'_, T>, &mut RawLines<T>);
pub type ARegFn<T> = fn(&[T], usize, &[T], &mut SliceLines<'_, T>);
pub type BRegFn<T> = fn(&[T], usize, &[T], &mut SliceLines<'_, T>);

/// Emits one set of kernel entry points per instruction-set tier. The
/// wider tiers only change register width and count; products and sums
/// stay separate IEEE operations, so every tier is bitwise identical.
macro_rules! entry_points {
    ($creg:ident, $areg:ident, $breg:ident $(, $feature:literal)?) => {
        $(#[target_feature(enable = $feature)])?
        unsafe fn $creg<T: Element, const MR: usize, const NR: usize>(
            kc: usize,
            a: ASource<'_, T>,
            b: BSource<'_, T>,
            c: &mut RawLines<T>,
        ) {
            match (a, b) {
                (ASource::Packed(a), BSource::Packed(b)) => creg::kernel::<T, MR, NR, _, _, _>(kc, &Packed(a), &Packed(b), c),
                (ASource::Packed(a), BSource::Strided(b)) => {
                    creg::kernel::<T, MR, NR, _, _, _>(kc, &Packed(a), &StridedRows(b), c)
                }
                (ASource::Strided(a), BSource::Packed(b)) => {
                    creg::kernel::<T, MR, NR, _, _, _>(kc, &StridedColumns(a), &Packed(b), c)
                }
                (ASource::Strided(a), BSource::Strided(b)) => {
                    creg::kernel::<T, MR, NR, _, _, _>(kc, &StridedColumns(a), &StridedRows(b), c)
                }
            }
        }

        $(#[target_feature(enable = $feature)])?
        unsafe fn $areg<T: Element, const MR: usize, const KR: usize>(a_tile: &[T], nc: usize, b: &[T], c: &mut SliceLines<'_, T>) {
            areg::kernel::<T, MR, KR, _, _>(a_tile, nc, &Packed(b), c)
        }

        $(#[target_feature(enable = $feature)])?
        unsafe fn $breg<T: Element, const KR: usize, const NR: usize>(b_tile: &[T], mc: usize, a: &[T], c: &mut SliceLines<'_, T>) {
            breg::kernel::<T, KR, NR, _, _>(b_tile, mc, &Packed(a), c)
        }
    };
}

entry_points!(creg_base, areg_base, breg_base);
#[cfg(target_arch = "x86_64")]
entry_points!(creg_avx2, areg_avx2, breg_avx2, "avx2");
#[cfg(target_arch = "x86_64")]
entry_points!(creg_avx512, areg_avx512, breg_avx512, "avx512f");

/// Widest instruction-set tier the running CPU supports.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Tier {
    Base,
    #[cfg(target_arch = "x86_64")]
    Avx2,
    #[cfg(target_arch = "x86_64")]
    Avx512,
}

fn detect_tier() -> Tier {
    #[cfg(target_arch = "x86_64")]
    {
        if std::arch::is_x86_feature_detected!("avx512f") {
            return Tier::Avx512;
        }
        if std::arch::is_x86_feature_detected!("avx2") {
            return Tier::Avx2;
        }
    }
    Tier::Base
}

/// Wide C tiles (both sides at least 8, rows not a whole number of 512-bit
/// registers) get vectorized across columns with gathers under AVX-512;
/// they run faster on the AVX2 entry point.
fn creg_tier<T: Element>(tier: Tier, mr: usize, nr: usize) -> Tier {
    #[cfg(target_arch = "x86_64")]
    if tier == Tier::Avx512
        && mr >= 8
        && nr >= 8
        && !(nr * std::mem::size_of::<T>()).is_multiple_of(64)
    {
        return Tier::Avx2;
    }
    let _ = (mr, nr);
    tier
}

fn creg_compiled<T: Element, const MR: usize, const NR: usize>(tier: Tier) -> CRegFn<T> {
    match creg_tier::<T>(tier, MR, NR) {
        // SAFETY (all arms): the tier was detected on this CPU.
        Tier::Base => |kc, a, b, c| unsafe { creg_base::<T, MR, NR>(kc, a, b, c) },
        #[cfg(target_arch = "x86_64")]
        Tier::Avx2 => |kc, a, b, c| unsafe { creg_avx2::<T, MR, NR>(kc, a, b, c) },
        #[cfg(target_arch = "x86_64")]
        Tier::Avx512 => |kc, a, b, c| unsafe { creg_avx512::<T, MR, NR>(kc, a, b, c) },
    }
}

fn areg_compiled<T: Element, const MR: usize, const KR: usize>(tier: Tier) -> ARegFn<T> {
    match tier {
        Tier::Base => |t, n, b, c| unsafe { areg_base::<T, MR, KR>(t, n, b, c) },
        #[cfg(target_arch = "x86_64")]
        Tier::Avx2 => |t, n, b, c| unsafe { areg_avx2::<T, MR, KR>(t, n, b, c) },
        #[cfg(target_arch = "x86_64")]
        Tier::Avx512 => |t, n, b, c| unsafe { areg_avx512::<T, MR, KR>(t, n, b, c) },
    }
}

fn breg_compiled<T: Element, const KR: usize, const NR: usize>(tier: Tier) -> BRegFn<T> {
    match tier {
        Tier::Base => |t, m, a, c| unsafe { breg_base::<T, KR, NR>(t, m, a, c) },
        #[cfg(target_arch = "x86_64")]
        Tier::Avx2 => |t, m, a, c| unsafe { breg_avx2::<T, KR, NR>(t, m, a, c) },
        #[cfg(target_arch = "x86_64")]
        Tier::Avx512 => |t, m, a, c| unsafe { breg_avx512::<T, KR, NR>(t, m, a, c) },
    }
}

/// A C-resident kernel ready to run: compiled for its shape, or the
/// runtime-shaped fallback.
#[derive(Clone, Copy)]
pub enum CRegKernel<T> {
    Compiled { shape: MicroShape, f: CRegFn<T> },
    Generic { shape: MicroShape, negate: bool },
}

impl<T: Element> CRegKernel<T> {
    pub fn shape(&self) -> MicroShape {
        match self {
            CRegKernel::Compiled { shape, .. } | CRegKernel::Generic { shape, .. } => *shape,
        }
    }

    pub fn is_compiled(&self) -> bool {
        matches!(self, CRegKernel::Compiled { .. })
    }

    #[inline]
    pub fn run(&self, kc: usize, a: ASource<'_, T>, b: BSource<'_, T>, c: &mut RawLines<T>) {
        match *self {
            CRegKernel::Compiled { f, .. } => f(kc, a, b, c),
            CRegKernel::Generic { shape, negate } => match (a, b) {
                (ASource::Packed(a), BSource::Packed(b)) => {
                    creg::generic(shape.mr, shape.nr, kc, &Packed(a), &Packed(b), c, negate)
                }
                (ASource::Packed(a), BSource::Strided(b)) => creg::generic(
                    shape.mr,
                    shape.nr,
                    kc,
                    &Packed(a),
                    &StridedRows(b),
                    c,
                    negate,
                ),
                (ASource::Strided(a), BSource::Packed(b)) => creg::generic(
                    shape.mr,
                    shape.nr,
                    kc,
                    &StridedColumns(a),
                    &Packed(b),
                    c,
                    negate,
                ),
                (ASource::Strided(a), BSource::Strided(b)) => creg::generic(
                    shape.mr,
                    shape.nr,
                    kc,
                    &StridedColumns(a),
                    &StridedRows(b),
                    c,
                    negate,
                ),
            },
        }
    }
}

#[derive(Clone, Copy)]
pub enum ARegKernel<T> {
    Compiled { shape: MicroShape, f: ARegFn<T> },
    Generic { shape: MicroShape },
}

impl<T: Element> ARegKernel<T> {
    pub fn is_compiled(&self) -> bool {
        matches!(self, ARegKernel::Compiled { .. })
    }

    #[inline]
    pub fn run(&self, a_tile: &[T], nc: usize, b: &[T], c: &mut SliceLines<'_, T>) {
        match *self {
            ARegKernel::Compiled { f, .. } => f(a_tile, nc, b, c),
            ARegKernel::Generic { shape } => {
                areg::generic(shape.mr, shape.kr, a_tile, nc, &Packed(b), c)
            }
        }
    }
}

#[derive(Clone, Copy)]
pub enum BRegKernel<T> {
    Compiled { shape: MicroShape, f: BRegFn<T> },
    Generic { shape: MicroShape },
}

impl<T: Element> BRegKernel<T> {
    pub fn is_compiled(&self) -> bool {
        matches!(self, BRegKernel::Compiled { .. })
    }

    #[inline]
    pub fn run(&self, b_tile: &[T], mc: usize, a: &[T], c: &mut SliceLines<'_, T>) {
        match *self {
            BRegKernel::Compiled { f, .. } => f(b_tile, mc, a, c),
            BRegKernel::Generic { shape } => {
                breg::generic(shape.kr, shape.nr, b_tile, mc, &Packed(a), c)
            }
        }
    }
}

/// Kernels compiled for one element type, keyed by register-tile shape.
pub struct KernelRegistry<T> {
    creg: BTreeMap<MicroShape, CRegFn<T>>,
    areg: BTreeMap<MicroShape, ARegFn<T>>,
    breg: BTreeMap<MicroShape, BRegFn<T>>,
}

impl<T: Element> KernelRegistry<T> {
    pub fn contains(&self, residency: Residency, shape: MicroShape) -> bool {
        match residency {
            Residency::CReg => self.creg.contains_key(&shape),
            Residency::AReg => self.areg.contains_key(&shape),
            Residency::BReg => self.breg.contains_key(&shape),
        }
    }

    /// Shapes with a compiled kernel, in ascending order.
    pub fn shapes(&self, residency: Residency) -> Vec<MicroShape> {
        match residency {
            Residency::CReg => self.creg.keys().copied().collect(),
            Residency::AReg => self.areg.keys().copied().collect(),
            Residency::BReg => self.breg.keys().copied().collect(),
        }
    }

    /// Compiled kernel for `shape`, or the fallback. Fault injection forces
    /// the (sign-flipped) fallback.
    pub fn creg(&self, shape: MicroShape) -> CRegKernel<T> {
        let negate = super::fault_injection_armed();
        match self.creg.get(&shape) {
            Some(&f) if !negate => CRegKernel::Compiled { shape, f },
            _ => CRegKernel::Generic { shape, negate },
        }
    }

    pub fn areg(&self, shape: MicroShape) -> ARegKernel<T> {
        match self.areg.get(&shape) {
            Some(&f) => ARegKernel::Compiled { shape, f },
            None => ARegKernel::Generic { shape },
        }
    }

    pub fn breg(&self, shape: MicroShape) -> BRegKernel<T> {
        match self.breg.get(&shape) {
            Some(&f) => BRegKernel::Compiled { shape, f },
            None => BRegKernel::Generic { shape },
        }
    }
}

macro_rules! registry {
    (
        $t:ty;
        creg: [$(($cm:literal, $cn:literal)),* $(,)?];
        areg: [$(($am:literal, $ak:literal)),* $(,)?];
        breg: [$(($bk:literal, $bn:literal)),* $(,)?];
    ) => {{
        let tier = detect_tier();
        let mut creg: BTreeMap<MicroShape, CRegFn<$t>> = BTreeMap::new();
        $( creg.insert(MicroShape::creg($cm, $cn), creg_compiled::<$t, $cm, $cn>(tier)); )*
        let mut areg: BTreeMap<MicroShape, ARegFn<$t>> = BTreeMap::new();
        $( areg.insert(MicroShape::areg($am, $ak), areg_compiled::<$t, $am, $ak>(tier)); )*
        let mut breg: BTreeMap<MicroShape, BRegFn<$t>> = BTreeMap::new();
        $( breg.insert(MicroShape::breg($bk, $bn), breg_compiled::<$t, $bk, $bn>(tier)); )*
        KernelRegistry { creg, areg, breg }
    }};
}

// Keep these lists equal to `default_grid` (checked by the tests below).
pub(crate) fn f32_registry() -> &'static KernelRegistry<f32> {
    static REG: OnceLock<KernelRegistry<f32>> = OnceLock::new();
    REG.get_or_init(|| {
        registry!(f32;
            creg: [
                (4, 4), (4, 8), (4, 12), (4, 16), (4, 20), (4, 24), (4, 28),
                (8, 4), (8, 8), (8, 12),
                (12, 4), (12, 8),
                (16, 4), (20, 4), (24, 4), (28, 4),
            ];
            areg: [
                (4, 4), (4, 8), (4, 12), (4, 16), (4, 20), (4, 24), (4, 28),
                (8, 4), (8, 8), (8, 12),
                (12, 4), (12, 8),
                (16, 4), (20, 4), (24, 4),
            ];
            breg: [
                (4, 4), (8, 4), (12, 4), (16, 4), (20, 4), (24, 4), (28, 4),
                (4, 8), (8, 8), (12, 8),
                (4, 12), (8, 12),
                (4, 16), (4, 20), (4, 24),
            ];
        )
    })
}

pub(crate) fn f64_registry() -> &'static KernelRegistry<f64> {
    static REG: OnceLock<KernelRegistry<f64>> = OnceLock::new();
    REG.get_or_init(|| {
        registry!(f64;
            creg: [(4, 4), (4, 8), (4, 12), (8, 4), (12, 4)];
            areg: [(4, 4), (4, 8), (4, 12), (8, 4), (12, 4)];
            breg: [(4, 4), (8, 4), (12, 4), (4, 8), (4, 12)];
        )
    })
}
