//! Third-order tensor algebra under mode-3 linear transforms.
//!
//! A [`Tensor3`] stores a dense real array of shape `(n1, n2, n3)`. All
//! transform-domain machinery (t-product, tensor nuclear norm, tensor
//! singular value thresholding) works slice-by-slice after pushing an
//! orthonormal [`LinearTransform`] along the third mode, and the per-slice
//! work is parallelized since transformed frontal slices are independent.

use nalgebra::{DMatrix, DMatrixView};
use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;

use crate::error::{Error, Result};

/// Dense third-order tensor with shape `(n1, n2, n3)`.
///
/// Storage is one contiguous buffer where frontal slice `k` occupies
/// `data[k * n1 * n2 .. (k + 1) * n1 * n2]` in column-major order, so a
/// slice can be viewed as a matrix without copying and the whole buffer
/// doubles as the `(n1 * n2) x n3` mode-3 unfolding.
#[derive(Debug, Clone, PartialEq)]
pub struct Tensor3 {
    n1: usize,
    n2: usize,
    n3: usize,
    data: Vec<f64>,
}

impl Tensor3 {
    /// Creates a tensor from raw slice-major data. All dimensions must be at
    /// least 1 and every entry finite.
    pub fn new(n1: usize, n2: usize, n3: usize, data: Vec<f64>) -> Result<Self> {
        if n1 == 0 || n2 == 0 || n3 == 0 {
            return Err(Error::shape(format!(
                "tensor dimensions must be positive, got ({n1}, {n2}, {n3})"
            )));
        }
        if data.len() != n1 * n2 * n3 {
            return Err(Error::shape(format!(
                "tensor buffer has {} entries, expected {}",
                data.len(),
                n1 * n2 * n3
            )));
        }
        if !data.iter().all(|v| v.is_finite()) {
            return Err(Error::numeric("tensor contains non-finite entries"));
        }
        Ok(Tensor3 { n1, n2, n3, data })
    }

    pub fn zeros(n1: usize, n2: usize, n3: usize) -> Self {
        Tensor3 {
            n1,
            n2,
            n3,
            data: vec![0.0; n1 * n2 * n3],
        }
    }

    pub fn from_fn(n1: usize, n2: usize, n3: usize, mut f: impl FnMut(usize, usize, usize) -> f64) -> Self {
        let mut t = Tensor3::zeros(n1, n2, n3);
        for k in 0..n3 {
            for j in 0..n2 {
                for i in 0..n1 {
                    t[(i, j, k)] = f(i, j, k);
                }
            }
        }
        t
    }

    pub fn dims(&self) -> (usize, usize, usize) {
        (self.n1, self.n2, self.n3)
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    /// Frontal slice `k` as a borrowed matrix view.
    pub fn slice(&self, k: usize) -> DMatrixView<'_, f64> {
        let sz = self.n1 * self.n2;
        DMatrixView::from_slice(&self.data[k * sz..(k + 1) * sz], self.n1, self.n2)
    }

    /// Overwrites frontal slice `k`.
    pub fn set_slice(&mut self, k: usize, m: &DMatrix<f64>) {
        assert_eq!((m.nrows(), m.ncols()), (self.n1, self.n2));
        let sz = self.n1 * self.n2;
        self.data[k * sz..(k + 1) * sz].copy_from_slice(m.as_slice());
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.data.iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    /// `self + alpha * other`, elementwise.
    pub fn axpy(&self, alpha: f64, other: &Tensor3) -> Tensor3 {
        assert_eq!(self.dims(), other.dims());
        let data = self
            .data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| a + alpha * b)
            .collect();
        Tensor3 {
            n1: self.n1,
            n2: self.n2,
            n3: self.n3,
            data,
        }
    }

    pub fn scale(&self, alpha: f64) -> Tensor3 {
        Tensor3 {
            n1: self.n1,
            n2: self.n2,
            n3: self.n3,
            data: self.data.iter().map(|v| v * alpha).collect(),
        }
    }

    pub fn inner(&self, other: &Tensor3) -> f64 {
        assert_eq!(self.dims(), other.dims());
        self.data.iter().zip(&other.data).map(|(a, b)| a * b).sum()
    }

    /// The mode-3 unfolding: an `(n1 * n2) x n3` view whose column `k` is
    /// frontal slice `k`.
    fn unfolding(&self) -> DMatrixView<'_, f64> {
        DMatrixView::from_slice(&self.data, self.n1 * self.n2, self.n3)
    }

    fn from_unfolding(n1: usize, n2: usize, m: DMatrix<f64>) -> Tensor3 {
        debug_assert_eq!(m.nrows(), n1 * n2);
        let n3 = m.ncols();
        Tensor3 {
            n1,
            n2,
            n3,
            data: m.as_slice().to_vec(),
        }
    }

    /// Applies `f` to every frontal slice in parallel. Every output slice
    /// must have the same dimensions.
    fn map_slices(&self, out_rows: usize, out_cols: usize, f: impl Fn(usize, DMatrixView<'_, f64>) -> Result<DMatrix<f64>> + Sync) -> Result<Tensor3> {
        let in_sz = self.n1 * self.n2;
        let out_sz = out_rows * out_cols;
        let mut data = vec![0.0; out_sz * self.n3];
        data.par_chunks_mut(out_sz)
            .enumerate()
            .try_for_each(|(k, chunk)| -> Result<()> {
                let view = DMatrixView::from_slice(&self.data[k * in_sz..(k + 1) * in_sz], self.n1, self.n2);
                let out = f(k, view)?;
                if out.nrows() != out_rows || out.ncols() != out_cols {
                    return Err(Error::shape("slice map produced inconsistent dimensions"));
                }
                chunk.copy_from_slice(out.as_slice());
                Ok(())
            })?;
        Ok(Tensor3 {
            n1: out_rows,
            n2: out_cols,
            n3: self.n3,
            data,
        })
    }
}

impl std::ops::Index<(usize, usize, usize)> for Tensor3 {
    type Output = f64;

    fn index(&self, (i, j, k): (usize, usize, usize)) -> &f64 {
        &self.data[k * self.n1 * self.n2 + j * self.n1 + i]
    }
}

impl std::ops::IndexMut<(usize, usize, usize)> for Tensor3 {
    fn index_mut(&mut self, (i, j, k): (usize, usize, usize)) -> &mut f64 {
        &mut self.data[k * self.n1 * self.n2 + j * self.n1 + i]
    }
}

/// Orthonormal mode-3 transform pair.
///
/// Holds a real matrix `L` with `L * L^T = scale * I`; the forward operator
/// multiplies every tubal fiber by `L` and the inverse by `L^T / scale`.
#[derive(Debug, Clone)]
pub struct LinearTransform {
    forward: DMatrix<f64>,
    scale: f64,
}

/// Tolerance for the orthonormality check `L L^T = scale * I`.
const ORTHONORMALITY_TOL: f64 = 1e-10;

impl LinearTransform {
    /// Wraps a transform matrix, validating `L L^T = scale * I`.
    pub fn new(forward: DMatrix<f64>, scale: f64) -> Result<Self> {
        if forward.nrows() != forward.ncols() {
            return Err(Error::shape("transform matrix must be square"));
        }
        if scale <= 0.0 {
            return Err(Error::parameter("transform scale must be positive"));
        }
        let n = forward.nrows();
        let gram = &forward * forward.transpose();
        let tol = ORTHONORMALITY_TOL * scale.max(1.0);
        for i in 0..n {
            for j in 0..n {
                let expect = if i == j { scale } else { 0.0 };
                if (gram[(i, j)] - expect).abs() > tol {
                    return Err(Error::parameter(format!(
                        "transform is not orthonormal: |(L L^T - {scale} I)[{i},{j}]| = {:e}",
                        (gram[(i, j)] - expect).abs()
                    )));
                }
            }
        }
        Ok(LinearTransform { forward, scale })
    }

    /// Wraps an orthonormal matrix (`scale = 1`).
    pub fn orthonormal(forward: DMatrix<f64>) -> Result<Self> {
        LinearTransform::new(forward, 1.0)
    }

    pub fn identity(n: usize) -> Self {
        LinearTransform {
            forward: DMatrix::identity(n, n),
            scale: 1.0,
        }
    }

    pub fn dim(&self) -> usize {
        self.forward.nrows()
    }

    pub fn forward_matrix(&self) -> &DMatrix<f64> {
        &self.forward
    }

    pub fn scale(&self) -> f64 {
        self.scale
    }

    fn check_dim(&self, x: &Tensor3) -> Result<()> {
        if self.dim() != x.dims().2 {
            return Err(Error::shape(format!(
                "transform of size {} does not match third dimension {}",
                self.dim(),
                x.dims().2
            )));
        }
        Ok(())
    }
}

/// Applies the forward transform along mode 3: `out(i, j, :) = L x(i, j, :)`.
pub fn mode3_transform(x: &Tensor3, t: &LinearTransform) -> Result<Tensor3> {
    t.check_dim(x)?;
    let (n1, n2, _) = x.dims();
    let out = x.unfolding() * t.forward.transpose();
    Ok(Tensor3::from_unfolding(n1, n2, out))
}

/// Applies the inverse transform along mode 3 (`L^T / scale` on every fiber).
pub fn mode3_inverse_transform(x: &Tensor3, t: &LinearTransform) -> Result<Tensor3> {
    t.check_dim(x)?;
    let (n1, n2, _) = x.dims();
    let mut out = x.unfolding() * &t.forward;
    if t.scale != 1.0 {
        out /= t.scale;
    }
    Ok(Tensor3::from_unfolding(n1, n2, out))
}

/// Transform-induced tensor-tensor product: slice-wise matrix products in
/// the transformed domain followed by the inverse transform.
pub fn t_product(a: &Tensor3, b: &Tensor3, t: &LinearTransform) -> Result<Tensor3> {
    let (a1, a2, a3) = a.dims();
    let (b1, b2, b3) = b.dims();
    if a2 != b1 || a3 != b3 {
        return Err(Error::shape(format!(
            "t-product inner dimensions mismatch: ({a1},{a2},{a3}) * ({b1},{b2},{b3})"
        )));
    }
    let abar = mode3_transform(a, t)?;
    let bbar = mode3_transform(b, t)?;
    let cbar = abar.map_slices(a1, b2, |k, sa| Ok(sa * bbar.slice(k)))?;
    mode3_inverse_transform(&cbar, t)
}

/// Tensor nuclear norm: the sum of nuclear norms of all transformed frontal
/// slices (equivalently, the nuclear norm of their block-diagonal stacking).
///
/// Singular values come from the eigenvalues of the smaller-side Gram
/// matrix, which is accurate to roughly `eps * sigma_max^2` per value and
/// far cheaper than a full decomposition.
pub fn t_tnn(x: &Tensor3, t: &LinearTransform) -> Result<f64> {
    let xbar = mode3_transform(x, t)?;
    let per_slice: Vec<f64> = (0..x.dims().2)
        .into_par_iter()
        .map(|k| {
            let slice = xbar.slice(k);
            if slice.norm() == 0.0 {
                return Ok(0.0);
            }
            let gram = if slice.nrows() <= slice.ncols() {
                slice * slice.transpose()
            } else {
                slice.transpose() * slice
            };
            let eig = nalgebra::SymmetricEigen::try_new(gram, f64::EPSILON, 100_000)
                .ok_or_else(|| Error::numeric("gram eigendecomposition did not converge"))?;
            Ok(eig.eigenvalues.iter().map(|&l| l.max(0.0).sqrt()).sum::<f64>())
        })
        .collect::<Result<_>>()?;
    Ok(per_slice.iter().sum())
}

/// t-SVD factors `U * S * V^T` of a tensor under a fixed transform.
///
/// All three tensors live in the original domain; the decomposition identity
/// holds slice-wise in the transformed domain.
#[derive(Debug, Clone)]
pub struct TSvdFactors {
    pub u: Tensor3,
    pub s: Tensor3,
    pub v: Tensor3,
    pub transform: LinearTransform,
}

impl TSvdFactors {
    /// Reconstructs the decomposed tensor.
    pub fn reconstruct(&self) -> Result<Tensor3> {
        let us = t_product(&self.u, &self.s, &self.transform)?;
        let ubar = mode3_transform(&us, &self.transform)?;
        let vbar = mode3_transform(&self.v, &self.transform)?;
        let (n1, r, _) = us.dims();
        let n2 = self.v.dims().0;
        let _ = r;
        let mbar = ubar.map_slices(n1, n2, |k, sl| Ok(sl * vbar.slice(k).transpose()))?;
        mode3_inverse_transform(&mbar, &self.transform)
    }
}

/// Computes the t-SVD of `m`: per-slice SVDs in the transformed domain with
/// singular values sorted non-increasing and a deterministic sign convention
/// (the largest-magnitude entry of each left singular vector is nonnegative).
pub fn t_svd(m: &Tensor3, t: &LinearTransform) -> Result<TSvdFactors> {
    t.check_dim(m)?;
    let (n1, n2, n3) = m.dims();
    let r = n1.min(n2);
    let mbar = mode3_transform(m, t)?;
    let mut ubar = Tensor3::zeros(n1, r, n3);
    let mut sbar = Tensor3::zeros(r, r, n3);
    let mut vbar = Tensor3::zeros(n2, r, n3);
    for k in 0..n3 {
        let slice = mbar.slice(k).clone_owned();
        if slice.norm() == 0.0 {
            continue;
        }
        let svd = jacobi_svd(&slice)?;
        let mut u = svd.u;
        let mut v = svd.v;
        for c in 0..r {
            // Deterministic signs: flip so the dominant entry of u[:, c] is nonnegative.
            let (mut best, mut best_abs) = (0, 0.0);
            for i in 0..n1 {
                if u[(i, c)].abs() > best_abs {
                    best_abs = u[(i, c)].abs();
                    best = i;
                }
            }
            if u[(best, c)] < 0.0 {
                for i in 0..n1 {
                    u[(i, c)] = -u[(i, c)];
                }
                for j in 0..n2 {
                    v[(j, c)] = -v[(j, c)];
                }
            }
        }
        let mut s = DMatrix::<f64>::zeros(r, r);
        for c in 0..r {
            s[(c, c)] = svd.sigma[c];
        }
        ubar.set_slice(k, &u);
        sbar.set_slice(k, &s);
        vbar.set_slice(k, &v);
    }
    Ok(TSvdFactors {
        u: mode3_inverse_transform(&ubar, t)?,
        s: mode3_inverse_transform(&sbar, t)?,
        v: mode3_inverse_transform(&vbar, t)?,
        transform: t.clone(),
    })
}

/// Exact tensor singular value thresholding: soft-thresholds the singular
/// values of every transformed frontal slice by `threshold` and maps back.
/// This is the proximity operator of the tensor nuclear norm, i.e. it
/// minimizes `||X||_tnn + (1 / (2 * threshold)) * ||X - M||_F^2`.
pub fn t_svt(m: &Tensor3, t: &LinearTransform, threshold: f64) -> Result<Tensor3> {
    if threshold < 0.0 {
        return Err(Error::parameter("svt threshold must be nonnegative"));
    }
    t.check_dim(m)?;
    let (n1, n2, _) = m.dims();
    let mbar = mode3_transform(m, t)?;
    let out = mbar.map_slices(n1, n2, |_, slice| svt_dense(slice.clone_owned(), threshold))?;
    mode3_inverse_transform(&out, t)
}

/// Randomized tensor singular value thresholding.
///
/// Per transformed slice: sketch the transposed slice with a shared Gaussian
/// matrix of `rank_k + oversample_s` columns, run `power_p` power iterations,
/// orthonormalize with a reduced QR, soft-threshold the small projected
/// matrix and lift the result back. Approximates [`t_svt`] and matches it
/// whenever every transformed slice has rank at most `rank_k + oversample_s`.
pub fn randomized_t_svt(
    m: &Tensor3,
    t: &LinearTransform,
    threshold: f64,
    rank_k: usize,
    power_p: usize,
    oversample_s: usize,
    rng: &mut impl Rng,
) -> Result<Tensor3> {
    if threshold < 0.0 {
        return Err(Error::parameter("svt threshold must be nonnegative"));
    }
    t.check_dim(m)?;
    let (n1, n2, _) = m.dims();
    if rank_k < 1 || rank_k >= n1.min(n2) {
        return Err(Error::parameter(format!(
            "sketch rank {rank_k} out of range [1, {})",
            n1.min(n2)
        )));
    }
    let sketch = rank_k + oversample_s;
    let omega = DMatrix::<f64>::from_fn(n1, sketch, |_, _| rng.sample(StandardNormal));
    let mbar = mode3_transform(m, t)?;
    let out = mbar.map_slices(n1, n2, |_, slice| {
        let a = slice.clone_owned();
        if a.norm() == 0.0 {
            return Ok(DMatrix::zeros(n1, n2));
        }
        // Sketch the transpose so the small SVD acts on a (k+s) x n1 matrix.
        // The sketch is re-orthonormalized between power steps; without it
        // the weaker directions drown in rounding noise.
        let mut g = a.transpose() * &omega;
        for _ in 0..power_p {
            let basis = g.qr().q();
            g = a.transpose() * (&a * basis);
        }
        let q = g.qr().q();
        let b = q.transpose() * a.transpose();
        let b_thr = svt_dense(b, threshold)?;
        Ok((q * b_thr).transpose())
    })?;
    mode3_inverse_transform(&out, t)
}

/// Folds an `(I*K) x J` matrix into an `I x J x K` tensor with
/// `X(i, j, k) = Z(k * I + i, j)`: days are stacked as contiguous row
/// blocks, so frontal slice `k` is the `k`-th block of `I` rows.
pub fn tensorize(z: &DMatrix<f64>, i_per_day: usize) -> Result<Tensor3> {
    if i_per_day == 0 {
        return Err(Error::parameter("intervals per day must be positive"));
    }
    if !z.nrows().is_multiple_of(i_per_day) {
        return Err(Error::shape(format!(
            "row count {} is not divisible by intervals per day {}",
            z.nrows(),
            i_per_day
        )));
    }
    let (n1, n2) = (i_per_day, z.ncols());
    let n3 = z.nrows() / i_per_day;
    let mut out = Tensor3::zeros(n1, n2, n3);
    for k in 0..n3 {
        for j in 0..n2 {
            for i in 0..n1 {
                out[(i, j, k)] = z[(k * n1 + i, j)];
            }
        }
    }
    Ok(out)
}

/// Exact inverse of [`tensorize`].
pub fn matricize(x: &Tensor3) -> DMatrix<f64> {
    let (n1, n2, n3) = x.dims();
    let mut z = DMatrix::<f64>::zeros(n1 * n3, n2);
    for k in 0..n3 {
        for j in 0..n2 {
            for i in 0..n1 {
                z[(k * n1 + i, j)] = x[(i, j, k)];
            }
        }
    }
    z
}

/// Thin SVD computed by one-sided Jacobi rotations.
///
/// `u` is `rows x r`, `v` is `cols x r` with `r = min(rows, cols)` and the
/// singular values sorted non-increasing (ties keep their input order).
/// Columns belonging to zero singular values are zero. Jacobi is slower
/// than bidiagonalization but gives fully reliable factors on the
/// rank-deficient slices the sketching path produces.
struct ThinSvd {
    u: DMatrix<f64>,
    sigma: Vec<f64>,
    v: DMatrix<f64>,
}

const JACOBI_MAX_SWEEPS: usize = 64;
const JACOBI_TOL: f64 = 1e-15;

fn jacobi_svd(m: &DMatrix<f64>) -> Result<ThinSvd> {
    if m.nrows() < m.ncols() {
        let t = jacobi_svd(&m.transpose())?;
        return Ok(ThinSvd {
            u: t.v,
            sigma: t.sigma,
            v: t.u,
        });
    }
    let (rows, cols) = (m.nrows(), m.ncols());
    let mut work = m.clone();
    let mut v = DMatrix::<f64>::identity(cols, cols);
    // Columns whose norm drops below this floor carry numerically zero
    // singular values; rotating against them only churns rounding noise.
    let negligible = (f64::EPSILON * work.norm()).powi(2);
    // Rotations act on column pairs; with column-major storage each pair is
    // two disjoint contiguous slices.
    fn rotate(data: &mut [f64], len: usize, p: usize, q: usize, c: f64, s: f64) {
        let (head, tail) = data.split_at_mut(q * len);
        let cp = &mut head[p * len..(p + 1) * len];
        let cq = &mut tail[..len];
        for (a, b) in cp.iter_mut().zip(cq.iter_mut()) {
            let (x, y) = (*a, *b);
            *a = c * x - s * y;
            *b = s * x + c * y;
        }
    }
    let mut converged = false;
    for _ in 0..JACOBI_MAX_SWEEPS {
        let mut off = 0.0f64;
        for p in 0..cols.saturating_sub(1) {
            for q in (p + 1)..cols {
                let (mut alpha, mut beta, mut gamma) = (0.0, 0.0, 0.0);
                {
                    let data = work.as_slice();
                    let cp = &data[p * rows..(p + 1) * rows];
                    let cq = &data[q * rows..(q + 1) * rows];
                    for (a, b) in cp.iter().zip(cq) {
                        alpha += a * a;
                        beta += b * b;
                        gamma += a * b;
                    }
                }
                if alpha <= negligible || beta <= negligible {
                    continue;
                }
                let ratio = gamma.abs() / (alpha * beta).sqrt();
                if ratio <= JACOBI_TOL {
                    continue;
                }
                off = off.max(ratio);
                let zeta = (beta - alpha) / (2.0 * gamma);
                let t = zeta.signum() / (zeta.abs() + (1.0 + zeta * zeta).sqrt());
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = c * t;
                rotate(work.as_mut_slice(), rows, p, q, c, s);
                rotate(v.as_mut_slice(), cols, p, q, c, s);
            }
        }
        if off <= JACOBI_TOL {
            converged = true;
            break;
        }
    }
    if !converged {
        return Err(Error::numeric("jacobi svd did not converge"));
    }
    let mut order: Vec<usize> = (0..cols).collect();
    let norms: Vec<f64> = (0..cols).map(|c| work.column(c).norm()).collect();
    order.sort_by(|&a, &b| norms[b].partial_cmp(&norms[a]).expect("finite norms"));
    let mut u = DMatrix::<f64>::zeros(rows, cols);
    let mut v_sorted = DMatrix::<f64>::zeros(cols, cols);
    let mut sigma = Vec::with_capacity(cols);
    for (dst, &src) in order.iter().enumerate() {
        let s = norms[src];
        sigma.push(s);
        if s > 0.0 {
            u.set_column(dst, &(work.column(src) / s));
        }
        v_sorted.set_column(dst, &v.column(src));
    }
    Ok(ThinSvd { u, sigma, v: v_sorted })
}

#[cfg(test)]
fn singular_values_checked(m: DMatrix<f64>) -> Result<Vec<f64>> {
    if m.norm() == 0.0 {
        return Ok(vec![0.0; m.nrows().min(m.ncols())]);
    }
    Ok(jacobi_svd(&m)?.sigma)
}

/// Dense matrix SVT: `U [sigma - threshold]_+ V^T`.
fn svt_dense(m: DMatrix<f64>, threshold: f64) -> Result<DMatrix<f64>> {
    let (rows, cols) = (m.nrows(), m.ncols());
    if m.norm() == 0.0 {
        return Ok(DMatrix::zeros(rows, cols));
    }
    let svd = jacobi_svd(&m)?;
    let kept = svd.sigma.iter().take_while(|&&s| s > threshold).count();
    if kept == 0 {
        return Ok(DMatrix::zeros(rows, cols));
    }
    let mut scaled = svd.u.columns(0, kept).clone_owned();
    for c in 0..kept {
        scaled.column_mut(c).scale_mut(svd.sigma[c] - threshold);
    }
    Ok(scaled * svd.v.columns(0, kept).transpose())
}
