//! Blocked normal-equation assembly and symmetric positive-definite solves.
//!
//! Features are widened to `f64` one block at a time so a 10 000 × 19 200
//! `f32` matrix never needs a full `f64` copy. Gram matrices only have their
//! lower triangle filled; every consumer reads the lower side. All products
//! run sequentially inside faer with a fixed block order, so results are
//! bit-reproducible for a given input ordering.

use std::ops::Range;

use faer::dyn_stack::{MemBuffer, MemStack};
use faer::linalg::cholesky::llt::factor::{cholesky_in_place, cholesky_in_place_scratch};
use faer::linalg::cholesky::llt::solve::solve_in_place;
use faer::linalg::matmul::matmul;
use faer::linalg::matmul::triangular::{matmul as tri_matmul, BlockStructure};
use faer::{Accum, Mat, MatRef, Par, Side};

use super::SolveMethod;
use crate::error::{Error, Result};
use crate::features::{Element, FeatureMatrix};

/// Samples per block when accumulating the primal Gram matrix.
const ROW_BLOCK: usize = 256;
/// Features per block when accumulating the dual kernel.
const COL_BLOCK: usize = 512;

/// Feature matrix with an optional per-column affine map `(x - shift) * scale`.
pub(crate) struct Design<'a, T: Element> {
    x: &'a FeatureMatrix<T>,
    affine: Option<(Vec<f64>, Vec<f64>)>,
}

impl<'a, T: Element> Design<'a, T> {
    pub(crate) fn raw(x: &'a FeatureMatrix<T>) -> Self {
        Self { x, affine: None }
    }

    /// z-scores every column using statistics of `rows`; constant columns
    /// keep unit scale.
    pub(crate) fn standardized(x: &'a FeatureMatrix<T>, rows: Range<usize>) -> Self {
        let d = x.cols();
        let n = rows.len().max(1) as f64;
        let mut mean = vec![0.0; d];
        for i in rows.clone() {
            for (m, v) in mean.iter_mut().zip(x.row(i)) {
                *m += v.to_f64();
            }
        }
        mean.iter_mut().for_each(|m| *m /= n);
        let mut var = vec![0.0; d];
        for i in rows {
            for ((s, v), m) in var.iter_mut().zip(x.row(i)).zip(&mean) {
                let c = v.to_f64() - m;
                *s += c * c;
            }
        }
        let scale = var
            .iter()
            .map(|s| {
                let sd = (s / n).sqrt();
                if sd > 0.0 {
                    1.0 / sd
                } else {
                    1.0
                }
            })
            .collect();
        Self {
            x,
            affine: Some((mean, scale)),
        }
    }

    pub(crate) fn dim(&self) -> usize {
        self.x.cols()
    }

    pub(crate) fn affine(&self) -> Option<(&[f64], &[f64])> {
        self.affine.as_ref().map(|(s, k)| (s.as_slice(), k.as_slice()))
    }

    #[inline]
    fn fill(&self, i: usize, cols: Range<usize>, dst: &mut [f64]) {
        let row = &self.x.row(i)[cols.clone()];
        match &self.affine {
            None => dst.iter_mut().zip(row).for_each(|(d, v)| *d = v.to_f64()),
            Some((shift, scale)) => {
                for (((d, v), s), k) in dst.iter_mut().zip(row).zip(&shift[cols.clone()]).zip(&scale[cols.clone()]) {
                    *d = (v.to_f64() - s) * k;
                }
            }
        }
    }

    /// `(cols.len() + bias) × rows.len()` block whose columns are samples.
    fn block_t(&self, rows: Range<usize>, cols: Range<usize>, bias: bool) -> Mat<f64> {
        let height = cols.len() + bias as usize;
        let mut buf = vec![0.0; height * rows.len()];
        for (j, i) in rows.clone().enumerate() {
            let col = &mut buf[j * height..(j + 1) * height];
            self.fill(i, cols.clone(), &mut col[..cols.len()]);
            if bias {
                col[cols.len()] = 1.0;
            }
        }
        MatRef::from_column_major_slice(&buf, height, rows.len()).to_owned()
    }
}

/// Lower triangle of `HᵀH` for the bias-augmented design `H = [X 1]` over `rows`.
pub(crate) fn primal_gram<T: Element>(design: &Design<'_, T>, rows: Range<usize>) -> Mat<f64> {
    let p = design.dim() + 1;
    let mut g = Mat::<f64>::zeros(p, p);
    let mut start = rows.start;
    while start < rows.end {
        let end = (start + ROW_BLOCK).min(rows.end);
        let bt = design.block_t(start..end, 0..design.dim(), true);
        tri_matmul(
            g.as_mut(),
            BlockStructure::TriangularLower,
            Accum::Add,
            bt.as_ref(),
            BlockStructure::Rectangular,
            bt.transpose(),
            BlockStructure::Rectangular,
            1.0,
            Par::Seq,
        );
        start = end;
    }
    g
}

/// `HᵀY` for one-hot targets over `rows`.
pub(crate) fn primal_rhs<T: Element>(design: &Design<'_, T>, labels: &[usize], rows: Range<usize>, k: usize) -> Mat<f64> {
    let d = design.dim();
    let mut r = Mat::<f64>::zeros(d + 1, k);
    let mut buf = vec![0.0; d];
    for i in rows {
        design.fill(i, 0..d, &mut buf);
        let c = labels[i];
        let mut col = r.col_mut(c);
        for (j, v) in buf.iter().enumerate() {
            col[j] += v;
        }
        col[d] += 1.0;
    }
    r
}

/// Lower triangle of the linear kernel `XXᵀ` over `rows` (no bias column).
pub(crate) fn dual_kernel<T: Element>(design: &Design<'_, T>, rows: Range<usize>) -> Mat<f64> {
    let s = rows.len();
    let mut k = Mat::<f64>::zeros(s, s);
    let mut c0 = 0;
    while c0 < design.dim() {
        let c1 = (c0 + COL_BLOCK).min(design.dim());
        let bt = design.block_t(rows.clone(), c0..c1, false);
        tri_matmul(
            k.as_mut(),
            BlockStructure::TriangularLower,
            Accum::Add,
            bt.transpose(),
            BlockStructure::Rectangular,
            bt.as_ref(),
            BlockStructure::Rectangular,
            1.0,
            Par::Seq,
        );
        c0 = c1;
    }
    k
}

/// `Xᵀα` over `rows`, a `dim × k` weight block.
pub(crate) fn dual_weights<T: Element>(design: &Design<'_, T>, rows: Range<usize>, alpha: MatRef<'_, f64>) -> Mat<f64> {
    let mut w = Mat::<f64>::zeros(design.dim(), alpha.ncols());
    let mut c0 = 0;
    while c0 < design.dim() {
        let c1 = (c0 + COL_BLOCK).min(design.dim());
        let bt = design.block_t(rows.clone(), c0..c1, false);
        matmul(w.as_mut().subrows_mut(c0, c1 - c0), Accum::Replace, bt.as_ref(), alpha, 1.0, Par::Seq);
        c0 = c1;
    }
    w
}

/// Solves `A X = rhs` for symmetric `A` (lower triangle), rebuilt on demand by
/// `build` so the spectral fallback never needs a second resident copy.
///
/// Cholesky is tried first. When it fails the system is solved through an
/// eigendecomposition with small eigenvalues pseudo-inverted. With
/// `exact = true` (zero penalty) a rank-deficient `A` is an error instead.
pub(crate) fn solve_spd(build: impl Fn() -> Mat<f64>, rhs: Mat<f64>, exact: bool) -> Result<(Mat<f64>, SolveMethod)> {
    let mut a = build();
    let n = a.nrows();
    let mut mem = MemBuffer::new(cholesky_in_place_scratch::<f64>(n, Par::Seq, Default::default()));
    let stack = MemStack::new(&mut mem);
    let factored = cholesky_in_place(a.as_mut(), Default::default(), Par::Seq, stack, Default::default()).is_ok();

    if factored && (!exact || well_conditioned(a.as_ref())) {
        let mut x = rhs;
        solve_in_place(a.as_ref(), x.as_mut(), Par::Seq, stack);
        return Ok((x, SolveMethod::Cholesky));
    }
    drop(a);

    let a = build();
    let eig = a
        .self_adjoint_eigen(Side::Lower)
        .map_err(|e| Error::validation(format!("eigendecomposition failed: {e:?}")))?;
    drop(a);
    let values = eig.S().column_vector();
    let top = (0..n).map(|i| values[i].abs()).fold(0.0, f64::max);
    let tol = top * n as f64 * f64::EPSILON;
    let rank = (0..n).filter(|&i| values[i] > tol).count();
    if exact && rank < n {
        return Err(Error::Singular { rank, dim: n });
    }
    log::warn!("Cholesky factorization failed on a {n}×{n} system; using spectral pseudo-inverse (rank {rank})");

    let u = eig.U();
    let mut proj = Mat::<f64>::zeros(n, rhs.ncols());
    matmul(proj.as_mut(), Accum::Replace, u.transpose(), rhs.as_ref(), 1.0, Par::Seq);
    for i in 0..n {
        let inv = if values[i] > tol { 1.0 / values[i] } else { 0.0 };
        for c in 0..proj.ncols() {
            proj[(i, c)] *= inv;
        }
    }
    let mut x = Mat::<f64>::zeros(n, rhs.ncols());
    matmul(x.as_mut(), Accum::Replace, u, proj.as_ref(), 1.0, Par::Seq);
    Ok((x, SolveMethod::Spectral))
}

/// Cheap conditioning test on a Cholesky factor: the squared ratio of the
/// smallest to largest pivot bounds the reciprocal condition number from above.
fn well_conditioned(l: MatRef<'_, f64>) -> bool {
    let n = l.nrows();
    let (mut lo, mut hi) = (f64::INFINITY, 0.0f64);
    for i in 0..n {
        let d = l[(i, i)].abs();
        lo = lo.min(d);
        hi = hi.max(d);
    }
    hi > 0.0 && (lo / hi).powi(2) > n as f64 * f64::EPSILON * 16.0
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Reads a symmetric matrix stored in its lower triangle.
    fn sym(a: MatRef<'_, f64>, i: usize, j: usize) -> f64 {
        if i >= j {
            a[(i, j)]
        } else {
            a[(j, i)]
        }
    }

    fn lower_of(a: &[[f64; 3]; 3]) -> Mat<f64> {
        Mat::from_fn(3, 3, |i, j| if i >= j { a[i][j] } else { 0.0 })
    }

    #[test]
    fn cholesky_path_solves_spd() {
        let a = [[4.0, 1.0, 0.5], [1.0, 3.0, 0.2], [0.5, 0.2, 2.0]];
        let rhs = Mat::from_fn(3, 1, |i, _| (i + 1) as f64);
        let (x, method) = solve_spd(|| lower_of(&a), rhs, true).unwrap();
        assert_eq!(method, SolveMethod::Cholesky);
        for i in 0..3 {
            let r: f64 = (0..3).map(|j| a[i][j] * x[(j, 0)]).sum();
            assert!((r - (i + 1) as f64).abs() < 1e-12);
        }
    }

    #[test]
    fn singular_exact_system_reports_rank() {
        let a = [[1.0, 1.0, 0.0], [1.0, 1.0, 0.0], [0.0, 0.0, 2.0]];
        let rhs = Mat::from_fn(3, 1, |_, _| 1.0);
        match solve_spd(|| lower_of(&a), rhs, true) {
            Err(Error::Singular { rank, dim }) => assert_eq!((rank, dim), (2, 3)),
            other => panic!("expected singular error, got {other:?}"),
        }
    }

    #[test]
    fn indefinite_penalized_system_falls_back() {
        let a = [[1.0, 1.0, 0.0], [1.0, 1.0, 0.0], [0.0, 0.0, 2.0]];
        let rhs = Mat::from_fn(3, 1, |i, _| if i == 2 { 4.0 } else { 2.0 });
        let (x, method) = solve_spd(|| lower_of(&a), rhs, false).unwrap();
        assert_eq!(method, SolveMethod::Spectral);
        // Minimum-norm solution: x0 = x1 = 1, x2 = 2.
        assert!((x[(0, 0)] - 1.0).abs() < 1e-12);
        assert!((x[(1, 0)] - 1.0).abs() < 1e-12);
        assert!((x[(2, 0)] - 2.0).abs() < 1e-12);
    }

    #[test]
    fn blocked_gram_matches_direct_sum() {
        let rows: Vec<Vec<f32>> = (0..600).map(|i| (0..3).map(|j| ((i * 3 + j) % 7) as f32 - 3.0).collect()).collect();
        let x = FeatureMatrix::from_rows(&rows).unwrap();
        let g = primal_gram(&Design::raw(&x), 0..600);
        let mut expect = [[0.0f64; 4]; 4];
        for r in &rows {
            let h = [r[0] as f64, r[1] as f64, r[2] as f64, 1.0];
            for i in 0..4 {
                for j in 0..4 {
                    expect[i][j] += h[i] * h[j];
                }
            }
        }
        for i in 0..4 {
            for j in 0..=i {
                assert_eq!(g[(i, j)], expect[i][j]);
            }
        }
        let k = dual_kernel(&Design::raw(&x), 10..14);
        for i in 0..4 {
            for j in 0..=i {
                let e: f64 = (0..3).map(|c| rows[10 + i][c] as f64 * rows[10 + j][c] as f64).sum();
                assert_eq!(sym(k.as_ref(), i, j), e);
            }
        }
    }
}
