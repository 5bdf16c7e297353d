//! Cache-blocked GEMM (`C += A·B`) in all six loop orderings of the
//! GotoBLAS/BLIS family, driven by register micro-kernels of three residency
//! types, an analytical model for the cache blocking parameters and an
//! exhaustive micro-kernel shape tuner.
//!
//! Variants are named after where each operand lives: `B3A2C0` keeps a block
//! of `B` in L3, a block of `A` in L2 and a micro-tile of `C` in registers.
//!
//! ```
//! use panelforge::{gemm, Dims, MatrixView, MatrixViewMut};
//!
//! let a = [1.0f64, 2.0, 3.0, 4.0];
//! let b = [5.0f64, 6.0, 7.0, 8.0];
//! let mut c = [0.0f64; 4];
//! gemm(
//!     Dims::new(2, 2, 2).unwrap(),
//!     MatrixView::new(&a, 2, 2, 2).unwrap(),
//!     MatrixView::new(&b, 2, 2, 2).unwrap(),
//!     MatrixViewMut::new(&mut c, 2, 2, 2).unwrap(),
//! )
//! .unwrap();
//! assert_eq!(c, [19.0, 22.0, 43.0, 50.0]);
//! ```

pub mod blocked;
pub mod cache_model;
pub mod element;
pub mod error;
pub mod microkernels;
pub mod oracle;
pub mod packing;
pub mod rng;
pub mod tuner;
pub mod types;
pub mod workloads;

pub use blocked::{gemm, gemm_blocked, gemm_unpacked_paths, parallel_execute, GemmPlan};
pub use cache_model::{
    derive_blocking, l1_occupancy, l2_occupancy, plan_blocking, OccupancyReport,
};
pub use element::Element;
pub use error::{Error, Operand, Result};
pub use microkernels::{default_grid, KernelConfig, KernelRegistry, RegisterBudget};
pub use oracle::gemm_naive;
pub use packing::PackedPanels;
pub use tuner::{tune, TuneResult};
pub use types::{
    residency, BlockingParams, CacheLevel, CacheSpec, Dims, ElemType, MatrixView, MatrixViewMut,
    MicroShape, PackConfig, ParallelLoop, ParallelSpec, Residency, Variant,
};
pub use workloads::{resnet50_shapes, LayerShape};
