//! The six five-loop blocked GEMM drivers.
//!
//! | variant | loop nest (outer → inner)                  | kernel |
//! |---------|--------------------------------------------|--------|
//! | B3A2C0  | jc → pc[Bc] → ic[Ac] → jr → ir             | CReg   |
//! | A3B2C0  | ic → pc[Ac] → jc[Bc] → ir → jr             | CReg   |
//! | B3C2A0  | jc → pc[Bc] → ic[Cc] → ir → pr             | AReg   |
//! | A3C2B0  | ic → pc[Ac] → jc[Cc] → jr → pr             | BReg   |
//! | C3B2A0  | ic → jc[Cc] → pc[Bc] → ir → pr             | AReg   |
//! | C3A2B0  | jc → ic[Cc] → pc[Ac] → jr → pr             | BReg   |
//!
//! `[X]` marks the loop whose body packs buffer `X`; `Cc` is written back
//! when that loop's iteration closes. Edges are handled by zero padding in
//! the packed buffers, so every kernel call runs at full tile size.

mod creg;
pub(crate) mod parallel;
mod resident;

use serde::{Deserialize, Serialize};

use crate::cache_model::plan_blocking;
use crate::element::Element;
use crate::error::{Error, Result};
use crate::types::{
    residency, validate_problem, BlockingParams, CacheSpec, Dims, ElemType, MatrixView,
    MatrixViewMut, MicroShape, PackConfig, ParallelLoop, ParallelSpec, Residency, Variant,
};

/// Everything that parameterizes one blocked GEMM run.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct GemmPlan {
    pub variant: Variant,
    pub blocking: BlockingParams,
    pub shape: MicroShape,
    pub pack: PackConfig,
    pub parallel: ParallelSpec,
    pub elem: ElemType,
}

impl GemmPlan {
    pub fn new(
        variant: Variant,
        blocking: BlockingParams,
        shape: MicroShape,
        elem: ElemType,
    ) -> Result<Self> {
        let plan = GemmPlan {
            variant,
            blocking,
            shape,
            pack: PackConfig::BOTH,
            parallel: ParallelSpec::SEQUENTIAL,
            elem,
        };
        plan.validate()?;
        Ok(plan)
    }

    /// Plan with the default shape for the variant's residency and blocking
    /// derived from `cache`.
    pub fn auto(variant: Variant, elem: ElemType, dims: Dims, cache: &CacheSpec) -> Result<Self> {
        let shape = default_shape(residency(variant), elem);
        Self::with_shape(variant, shape, elem, dims, cache)
    }

    pub fn with_shape(
        variant: Variant,
        shape: MicroShape,
        elem: ElemType,
        dims: Dims,
        cache: &CacheSpec,
    ) -> Result<Self> {
        let (blocking, _) = plan_blocking(variant, cache, shape, elem, dims)?;
        Self::new(variant, blocking, shape, elem)
    }

    pub fn pack(mut self, pack: PackConfig) -> Self {
        self.pack = pack;
        self
    }

    pub fn parallel(mut self, parallel: ParallelSpec) -> Self {
        self.parallel = parallel;
        self
    }

    pub fn residency(&self) -> Residency {
        residency(self.variant)
    }

    pub fn validate(&self) -> Result<()> {
        let res = self.residency();
        self.shape.validate(res)?;
        BlockingParams::new(self.blocking.mc, self.blocking.nc, self.blocking.kc)?;
        if res != Residency::CReg && !self.pack.is_full() {
            return Err(Error::UnsupportedPlan(format!(
                "{} always packs its operands; pack skipping applies to C-resident variants only",
                self.variant
            )));
        }
        let lp = self.parallel.parallel_loop();
        if lp != ParallelLoop::None && !loops_of(self.variant).contains(&lp) {
            return Err(Error::UnsupportedPlan(format!(
                "{} has no {} loop to parallelize",
                self.variant,
                lp.name()
            )));
        }
        Ok(())
    }

    /// Whether the micro-kernel comes from the compiled grid.
    pub fn uses_compiled_kernel(&self) -> bool {
        match self.elem {
            ElemType::F32 => f32::kernels().contains(self.residency(), self.shape),
            ElemType::F64 => f64::kernels().contains(self.residency(), self.shape),
        }
    }

    /// Element counts of the packed buffers this plan allocates per thread
    /// for `dims`, as `(Ac, Bc, Cc)`.
    pub fn buffer_elems(&self, dims: Dims) -> (usize, usize, usize) {
        let BlockingParams { mc, nc, kc } = self.blocking;
        let (mc, nc, kc) = (mc.min(dims.m), nc.min(dims.n), kc.min(dims.k));
        let round = |x: usize, to: usize| x.div_ceil(to) * to;
        let s = self.shape;
        match self.residency() {
            Residency::CReg => (
                if self.pack.pack_a {
                    round(mc, s.mr) * kc
                } else {
                    0
                },
                if self.pack.pack_b {
                    kc * round(nc, s.nr)
                } else {
                    0
                },
                0,
            ),
            Residency::AReg => (0, round(kc, s.kr) * nc, round(mc, s.mr) * nc),
            Residency::BReg => (mc * round(kc, s.kr), 0, mc * round(nc, s.nr)),
        }
    }
}

/// Loops of each nest that may be split across threads.
pub fn loops_of(variant: Variant) -> &'static [ParallelLoop] {
    use ParallelLoop::*;
    match variant {
        Variant::B3A2C0 | Variant::A3B2C0 => &[Jc, Ic, Jr, Ir],
        Variant::B3C2A0 | Variant::C3B2A0 => &[Jc, Ic, Ir],
        Variant::A3C2B0 | Variant::C3A2B0 => &[Jc, Ic, Jr],
    }
}

/// Shape used when none is requested.
pub fn default_shape(residency: Residency, elem: ElemType) -> MicroShape {
    match (residency, elem) {
        (Residency::CReg, ElemType::F32) => MicroShape::creg(8, 12),
        (Residency::CReg, ElemType::F64) => MicroShape::creg(4, 8),
        (Residency::AReg, ElemType::F32) => MicroShape::areg(8, 8),
        (Residency::AReg, ElemType::F64) => MicroShape::areg(4, 8),
        (Residency::BReg, ElemType::F32) => MicroShape::breg(8, 8),
        (Residency::BReg, ElemType::F64) => MicroShape::breg(8, 4),
    }
}

/// Operands and plan shared by every loop of a driver.
pub(crate) struct Problem<'a, T> {
    pub dims: Dims,
    pub a: MatrixView<'a, T>,
    pub b: MatrixView<'a, T>,
    pub c: parallel::SyncPtr<T>,
    pub ldc: usize,
    pub plan: GemmPlan,
}

/// `C += A·B` following `plan`.
pub fn gemm_blocked<T: Element>(
    plan: &GemmPlan,
    dims: Dims,
    a: MatrixView<'_, T>,
    b: MatrixView<'_, T>,
    mut c: MatrixViewMut<'_, T>,
) -> Result<()> {
    validate_problem(dims, &a, &b, &c.as_view())?;
    plan.validate()?;
    if plan.elem != T::ELEM {
        return Err(Error::ElemMismatch {
            plan: plan.elem.name(),
            data: T::ELEM.name(),
        });
    }
    let ldc = c.row_stride();
    let problem = Problem {
        dims,
        a,
        b,
        c: parallel::SyncPtr(c.as_mut_ptr()),
        ldc,
        plan: *plan,
    };
    match plan.variant {
        Variant::B3A2C0 => creg::b3a2c0(&problem),
        Variant::A3B2C0 => creg::a3b2c0(&problem),
        Variant::B3C2A0 => resident::b3c2a0(&problem),
        Variant::A3C2B0 => resident::a3c2b0(&problem),
        Variant::C3B2A0 => resident::c3b2a0(&problem),
        Variant::C3A2B0 => resident::c3a2b0(&problem),
    }
    Ok(())
}

/// C-resident run where `A` and/or `B` are read in place instead of packed.
pub fn gemm_unpacked_paths<T: Element>(
    plan: &GemmPlan,
    dims: Dims,
    a: MatrixView<'_, T>,
    b: MatrixView<'_, T>,
    c: MatrixViewMut<'_, T>,
) -> Result<()> {
    if plan.residency() != Residency::CReg {
        return Err(Error::UnsupportedPlan(format!(
            "{} has no unpacked path",
            plan.variant
        )));
    }
    gemm_blocked(plan, dims, a, b, c)
}

/// Runs `plan` with its parallel loop split across `plan.parallel.threads()`
/// threads. Results are bitwise identical to the sequential run.
pub fn parallel_execute<T: Element>(
    plan: &GemmPlan,
    dims: Dims,
    a: MatrixView<'_, T>,
    b: MatrixView<'_, T>,
    c: MatrixViewMut<'_, T>,
) -> Result<()> {
    gemm_blocked(plan, dims, a, b, c)
}

/// `C += A·B` with the baseline variant, default shape and Carmel-like
/// cache geometry.
pub fn gemm<T: Element>(
    dims: Dims,
    a: MatrixView<'_, T>,
    b: MatrixView<'_, T>,
    c: MatrixViewMut<'_, T>,
) -> Result<()> {
    let plan = GemmPlan::auto(Variant::B3A2C0, T::ELEM, dims, &CacheSpec::carmel())?;
    gemm_blocked(&plan, dims, a, b, c)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::oracle::gemm_naive;
    use crate::rng::{random_matrix, Lcg64};

    fn run_both<T: Element>(plan: &GemmPlan, dims: Dims, seed: u64) -> (Vec<T>, Vec<T>) {
        let mut rng = Lcg64::new(seed);
        let a: Vec<T> = random_matrix(dims.m, dims.k, &mut rng);
        let b: Vec<T> = random_matrix(dims.k, dims.n, &mut rng);
        let c0: Vec<T> = random_matrix(dims.m, dims.n, &mut rng);
        let av = MatrixView::dense(&a, dims.m, dims.k).unwrap();
        let bv = MatrixView::dense(&b, dims.k, dims.n).unwrap();
        let mut got = c0.clone();
        gemm_blocked(
            plan,
            dims,
            av,
            bv,
            MatrixViewMut::dense(&mut got, dims.m, dims.n).unwrap(),
        )
        .unwrap();
        let mut want = c0;
        gemm_naive(
            dims,
            av,
            bv,
            MatrixViewMut::dense(&mut want, dims.m, dims.n).unwrap(),
        )
        .unwrap();
        (got, want)
    }

    fn small_plan(variant: Variant, elem: ElemType) -> GemmPlan {
        let shape = match residency(variant) {
            Residency::CReg => MicroShape::creg(2, 2),
            Residency::AReg => MicroShape::areg(2, 2),
            Residency::BReg => MicroShape::breg(2, 2),
        };
        GemmPlan::new(variant, BlockingParams::new(4, 4, 2).unwrap(), shape, elem).unwrap()
    }

    #[test]
    fn two_by_two_all_variants() {
        for v in Variant::ALL {
            let plan = small_plan(v, ElemType::F64);
            let mut c = [0.0f64; 4];
            gemm_blocked(
                &plan,
                Dims::new(2, 2, 2).unwrap(),
                MatrixView::dense(&[1.0, 2.0, 3.0, 4.0], 2, 2).unwrap(),
                MatrixView::dense(&[5.0, 6.0, 7.0, 8.0], 2, 2).unwrap(),
                MatrixViewMut::dense(&mut c, 2, 2).unwrap(),
            )
            .unwrap();
            assert_eq!(c, [19.0, 22.0, 43.0, 50.0], "{v}");
        }
    }

    #[test]
    fn scalar_all_variants() {
        for v in Variant::ALL {
            let plan = GemmPlan::auto(
                v,
                ElemType::F32,
                Dims::new(1, 1, 1).unwrap(),
                &CacheSpec::carmel(),
            )
            .unwrap();
            let mut c = [1.0f32];
            gemm_blocked(
                &plan,
                Dims::new(1, 1, 1).unwrap(),
                MatrixView::dense(&[2.0], 1, 1).unwrap(),
                MatrixView::dense(&[3.0], 1, 1).unwrap(),
                MatrixViewMut::dense(&mut c, 1, 1).unwrap(),
            )
            .unwrap();
            assert_eq!(c, [7.0], "{v}");
        }
    }

    #[test]
    fn non_divisible_edges_equal_oracle() {
        let dims = Dims::new(7, 5, 3).unwrap();
        for v in Variant::ALL {
            let (got, want) = run_both::<f64>(&small_plan(v, ElemType::F64), dims, 5);
            assert_eq!(got, want, "{v}");
        }
    }

    #[test]
    fn unpacked_paths_match() {
        let dims = Dims::new(9, 11, 7).unwrap();
        for pack in PackConfig::ALL {
            let plan = small_plan(Variant::B3A2C0, ElemType::F32).pack(pack);
            let (got, want) = run_both::<f32>(&plan, dims, 9);
            assert_eq!(got, want, "{}", pack.name());
            let plan = small_plan(Variant::A3B2C0, ElemType::F32).pack(pack);
            let (got, want) = run_both::<f32>(&plan, dims, 9);
            assert_eq!(got, want, "{}", pack.name());
        }
    }

    #[test]
    fn pack_skip_rejected_for_residency_variants() {
        let plan = GemmPlan {
            pack: PackConfig::B_ONLY,
            ..small_plan(Variant::B3C2A0, ElemType::F32)
        };
        assert!(matches!(plan.validate(), Err(Error::UnsupportedPlan(_))));
        let mut c = [0.0f32];
        let r = gemm_unpacked_paths(
            &small_plan(Variant::C3A2B0, ElemType::F32),
            Dims::new(1, 1, 1).unwrap(),
            MatrixView::dense(&[1.0], 1, 1).unwrap(),
            MatrixView::dense(&[1.0], 1, 1).unwrap(),
            MatrixViewMut::dense(&mut c, 1, 1).unwrap(),
        );
        assert!(matches!(r, Err(Error::UnsupportedPlan(_))));
    }

    #[test]
    fn missing_parallel_loop_rejected() {
        let plan = small_plan(Variant::B3C2A0, ElemType::F32)
            .parallel(ParallelSpec::new(ParallelLoop::Jr, 2).unwrap());
        assert!(matches!(plan.validate(), Err(Error::UnsupportedPlan(_))));
    }

    #[test]
    fn elem_mismatch_rejected() {
        let plan = small_plan(Variant::B3A2C0, ElemType::F64);
        let mut c = [0.0f32];
        let r = gemm_blocked(
            &plan,
            Dims::new(1, 1, 1).unwrap(),
            MatrixView::dense(&[1.0f32], 1, 1).unwrap(),
            MatrixView::dense(&[1.0f32], 1, 1).unwrap(),
            MatrixViewMut::dense(&mut c, 1, 1).unwrap(),
        );
        assert!(matches!(r, Err(Error::ElemMismatch { .. })));
    }

    #[test]
    fn parallel_runs_are_bitwise_equal() {
        let dims = Dims::new(67, 45, 33).unwrap();
        for v in Variant::ALL {
            let base = GemmPlan::new(
                v,
                BlockingParams::new(16, 12, 8).unwrap(),
                small_plan(v, ElemType::F32).shape,
                ElemType::F32,
            )
            .unwrap();
            let (seq, _) = run_both::<f32>(&base, dims, 3);
            for &lp in loops_of(v) {
                for threads in [2, 3, 4] {
                    let plan = base.parallel(ParallelSpec::new(lp, threads).unwrap());
                    let (par, _) = run_both::<f32>(&plan, dims, 3);
                    assert!(
                        seq.iter()
                            .zip(&par)
                            .all(|(x, y)| x.to_bits() == y.to_bits()),
                        "{v} {lp:?} {threads}"
                    );
                }
            }
        }
    }

    #[test]
    fn compiled_kernels_on_grid_shapes() {
        let dims = Dims::new(37, 29, 41).unwrap();
        for v in Variant::ALL {
            let plan = GemmPlan::auto(v, ElemType::F32, dims, &CacheSpec::carmel()).unwrap();
            assert!(plan.uses_compiled_kernel());
            let (got, want) = run_both::<f32>(&plan, dims, 21);
            assert_eq!(got, want, "{v}");
        }
    }

    #[test]
    fn strided_operands() {
        // operands embedded in larger buffers
        let dims = Dims::new(5, 6, 4).unwrap();
        let mut rng = Lcg64::new(2);
        let a: Vec<f64> = random_matrix(5, 9, &mut rng);
        let b: Vec<f64> = random_matrix(4, 10, &mut rng);
        let c0: Vec<f64> = random_matrix(5, 8, &mut rng);
        let av = MatrixView::new(&a, 5, 4, 9).unwrap();
        let bv = MatrixView::new(&b, 4, 6, 10).unwrap();
        for v in Variant::ALL {
            let mut got = c0.clone();
            gemm_blocked(
                &small_plan(v, ElemType::F64),
                dims,
                av,
                bv,
                MatrixViewMut::new(&mut got, 5, 6, 8).unwrap(),
            )
            .unwrap();
            let mut want = c0.clone();
            gemm_naive(
                dims,
                av,
                bv,
                MatrixViewMut::new(&mut want, 5, 6, 8).unwrap(),
            )
            .unwrap();
            assert_eq!(got, want, "{v}");
        }
    }

    #[test]
    fn buffer_sizes_follow_blocks() {
        let plan = GemmPlan::new(
            Variant::B3A2C0,
            BlockingParams::new(10, 14, 6).unwrap(),
            MicroShape::creg(4, 4),
            ElemType::F32,
        )
        .unwrap();
        assert_eq!(
            plan.buffer_elems(Dims::new(100, 100, 100).unwrap()),
            (12 * 6, 6 * 16, 0)
        );
        assert_eq!(
            plan.buffer_elems(Dims::new(3, 5, 2).unwrap()),
            (4 * 2, 2 * 8, 0)
        );
    }
}
