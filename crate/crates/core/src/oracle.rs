//! Naive reference GEMM and the componentwise error bound every optimized
//! path is checked against.

use crate::element::Element;
use crate::error::Result;
use crate::types::{validate_problem, Dims, MatrixView, MatrixViewMut};

/// `C += A·B` with an i→j→p nest and scalar accumulation onto `C`,
/// summing in ascending `p`.
pub fn gemm_naive<T: Element>(
    dims: Dims,
    a: MatrixView<'_, T>,
    b: MatrixView<'_, T>,
    mut c: MatrixViewMut<'_, T>,
) -> Result<()> {
    validate_problem(dims, &a, &b, &c.as_view())?;
    for i in 0..dims.m {
        for j in 0..dims.n {
            let mut acc = c.get(i, j);
            for p in 0..dims.k {
                acc = acc + a.get(i, p) * b.get(p, j);
            }
            c.set(i, j, acc);
        }
    }
    Ok(())
}

/// Per-element tolerance `factor·k·eps·(|c0| + Σ_p |a_ip|·|b_pj|)`, computed
/// in f64. `c0` is `C` before the update.
pub fn error_bounds<T: Element>(
    dims: Dims,
    a: MatrixView<'_, T>,
    b: MatrixView<'_, T>,
    c0: MatrixView<'_, T>,
    factor: f64,
) -> Vec<f64> {
    let eps = T::EPSILON.to_f64();
    let mut out = Vec::with_capacity(dims.m * dims.n);
    for i in 0..dims.m {
        for j in 0..dims.n {
            let mut mag = c0.get(i, j).to_f64().abs();
            for p in 0..dims.k {
                mag += (a.get(i, p).to_f64() * b.get(p, j).to_f64()).abs();
            }
            out.push(factor * dims.k as f64 * eps * mag);
        }
    }
    out
}

/// Outcome of comparing a result against the oracle.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Comparison {
    /// Largest `|got - want|` over all elements.
    pub max_abs_err: f64,
    /// Largest `|got - want| / bound` (≤ 1 means within tolerance).
    pub worst_ratio: f64,
    pub passed: bool,
}

/// Compares `got` against `want` (both m×n dense, row-major) under `bounds`.
pub fn compare<T: Element>(got: &[T], want: &[T], bounds: &[f64]) -> Comparison {
    assert_eq!(got.len(), want.len());
    assert_eq!(got.len(), bounds.len());
    let mut max_abs_err = 0.0f64;
    let mut worst_ratio = 0.0f64;
    let mut passed = true;
    for ((g, w), &bound) in got.iter().zip(want).zip(bounds) {
        let err = (g.to_f64() - w.to_f64()).abs();
        if err.is_nan() || err > bound {
            passed = false;
        }
        max_abs_err = max_abs_err.max(err);
        let ratio = if bound > 0.0 {
            err / bound
        } else if err == 0.0 {
            0.0
        } else {
            f64::INFINITY
        };
        worst_ratio = worst_ratio.max(ratio);
    }
    Comparison {
        max_abs_err,
        worst_ratio,
        passed,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn run(m: usize, n: usize, k: usize, a: &[f64], b: &[f64], c: &mut [f64]) {
        gemm_naive(
            Dims::new(m, n, k).unwrap(),
            MatrixView::dense(a, m, k).unwrap(),
            MatrixView::dense(b, k, n).unwrap(),
            MatrixViewMut::dense(c, m, n).unwrap(),
        )
        .unwrap();
    }

    #[test]
    fn scalar_fma() {
        let mut c = [1.0];
        run(1, 1, 1, &[2.0], &[3.0], &mut c);
        assert_eq!(c, [7.0]);
    }

    #[test]
    fn identity_copies_b() {
        let eye = [1.0, 0.0, 0.0, 0.0, 1.0, 0.0, 0.0, 0.0, 1.0];
        let b = [1.5, -2.0, 3.0, 4.0, 5.25, -6.0, 7.0, 8.0, 9.5];
        let mut c = [0.0; 9];
        run(3, 3, 3, &eye, &b, &mut c);
        assert_eq!(c, b);
    }

    #[test]
    fn two_by_two() {
        let mut c = [0.0; 4];
        run(
            2,
            2,
            2,
            &[1.0, 2.0, 3.0, 4.0],
            &[5.0, 6.0, 7.0, 8.0],
            &mut c,
        );
        assert_eq!(c, [19.0, 22.0, 43.0, 50.0]);
    }

    #[test]
    fn repeated_run_doubles_integer_result() {
        let a: Vec<f64> = (0..12).map(|x| (x % 5) as f64 - 2.0).collect();
        let b: Vec<f64> = (0..20).map(|x| (x % 7) as f64 - 3.0).collect();
        let mut once = vec![0.0; 15];
        run(3, 5, 4, &a, &b, &mut once);
        let mut twice = vec![0.0; 15];
        run(3, 5, 4, &a, &b, &mut twice);
        run(3, 5, 4, &a, &b, &mut twice);
        for (x, y) in once.iter().zip(&twice) {
            assert_eq!(2.0 * x, *y);
        }
    }

    #[test]
    fn bilinear_in_b() {
        let a: Vec<f64> = (0..6).map(|x| x as f64 - 2.0).collect();
        let b1: Vec<f64> = (0..6).map(|x| (x * 3 % 5) as f64).collect();
        let b2: Vec<f64> = (0..6).map(|x| (x * 2 % 7) as f64 - 1.0).collect();
        let bsum: Vec<f64> = b1.iter().zip(&b2).map(|(x, y)| x + y).collect();
        let (mut c1, mut c2, mut cs) = (vec![0.0; 4], vec![0.0; 4], vec![0.0; 4]);
        run(2, 2, 3, &a, &b1, &mut c1);
        run(2, 2, 3, &a, &b2, &mut c2);
        run(2, 2, 3, &a, &bsum, &mut cs);
        for i in 0..4 {
            assert_eq!(cs[i], c1[i] + c2[i]);
        }
    }

    #[test]
    fn propagates_validation_errors() {
        let mut c = [0.0; 4];
        let r = gemm_naive(
            Dims::new(2, 2, 2).unwrap(),
            MatrixView::dense(&[1.0; 6], 3, 2).unwrap(),
            MatrixView::dense(&[1.0; 4], 2, 2).unwrap(),
            MatrixViewMut::dense(&mut c, 2, 2).unwrap(),
        );
        assert!(r.is_err());
    }

    #[test]
    fn compare_flags_excess_error() {
        let cmp = compare(&[1.0f64, 2.0], &[1.0, 2.5], &[0.1, 0.1]);
        assert!(!cmp.passed);
        assert_eq!(cmp.max_abs_err, 0.5);
        let cmp = compare(&[1.0f64, 2.0], &[1.0, 2.05], &[0.1, 0.1]);
        assert!(cmp.passed);
    }
}
