//! Temporal graph models.
//!
//! Two operators live here. The periodic day graph encodes day-to-day and
//! day-of-week similarity; its Laplacian eigenbasis yields the orthonormal
//! mode-3 transform used by the tensor machinery. The kernel Laplacian is a
//! directed circulant first/multi-difference operator over the global time
//! axis whose truncated form drives the temporal consistency penalty.

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::tensor::LinearTransform;

/// Unnormalized graph Laplacian `D - W` of a nonnegative weight matrix.
pub fn graph_laplacian(w: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    if w.nrows() != w.ncols() {
        return Err(Error::shape("weight matrix must be square"));
    }
    if w.iter().any(|&v| v < 0.0 || !v.is_finite()) {
        return Err(Error::parameter("weights must be finite and nonnegative"));
    }
    let n = w.nrows();
    let mut lap = -w.clone();
    for i in 0..n {
        let degree: f64 = w.row(i).iter().sum();
        lap[(i, i)] += degree;
    }
    Ok(lap)
}

/// Similarity weights for the periodic day graph.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TemporalWeights {
    /// Weight between consecutive days.
    pub omega_day: f64,
    /// Weight between days one period apart.
    pub omega_period: f64,
    /// Optional geometric decay of the period weight: the weight of the
    /// n-th complete period (n = 1, 2, ...) becomes
    /// `beta * (1 - beta)^n * omega_period`.
    pub decay: Option<f64>,
    /// Optional heterogeneous day-to-day weights: `(omega_alt, pattern_days)`
    /// assigns `omega_alt` to the `2 * pattern_days - 1` transitions touching
    /// the final `pattern_days` days of each period, e.g. weekends.
    pub weekend: Option<(f64, usize)>,
}

impl Default for TemporalWeights {
    fn default() -> Self {
        TemporalWeights {
            omega_day: 1.0,
            omega_period: 1.0,
            decay: None,
            weekend: None,
        }
    }
}

/// Symmetric periodic day graph with its Laplacian eigendecomposition.
#[derive(Debug, Clone)]
pub struct TemporalPeriodicGraph {
    days: usize,
    period: usize,
    adjacency: DMatrix<f64>,
    laplacian: DMatrix<f64>,
    /// Eigenvalues sorted ascending.
    eigenvalues: Vec<f64>,
    /// Columns are the eigenvectors matching `eigenvalues`.
    eigenvectors: DMatrix<f64>,
}

/// Builds the periodic day adjacency for `days` days with period `period`:
/// identity self-loops, day-to-day links on the first sub/superdiagonal and
/// period links on every complete multiple of `period`, all symmetrized.
pub fn build_temporal_adjacency(
    days: usize,
    period: usize,
    weights: &TemporalWeights,
) -> Result<TemporalPeriodicGraph> {
    if days == 0 {
        return Err(Error::parameter("day count must be positive"));
    }
    if period == 0 || period > days {
        return Err(Error::parameter(format!(
            "period {period} must lie in [1, {days}]"
        )));
    }
    if weights.omega_day < 0.0 || weights.omega_period < 0.0 {
        return Err(Error::parameter("temporal weights must be nonnegative"));
    }
    if let Some(beta) = weights.decay {
        if !(0.0 < beta && beta < 1.0) {
            return Err(Error::parameter("decay factor must lie in (0, 1)"));
        }
    }
    if let Some((omega_alt, pattern_days)) = weights.weekend {
        if omega_alt < 0.0 {
            return Err(Error::parameter("weekend weight must be nonnegative"));
        }
        if pattern_days == 0 || 2 * pattern_days > period + 1 {
            return Err(Error::parameter(format!(
                "weekend pattern of {pattern_days} days does not fit a period of {period}"
            )));
        }
    }

    let d = days;
    let mut a = DMatrix::<f64>::identity(d, d);

    // Day-to-day links; the weekend variant cycles a per-period weight
    // pattern along the first subdiagonal.
    for i in 0..d.saturating_sub(1) {
        let w = match weights.weekend {
            Some((omega_alt, pattern_days)) => {
                let weekday_links = period + 1 - 2 * pattern_days;
                if i % period < weekday_links {
                    weights.omega_day
                } else {
                    omega_alt
                }
            }
            None => weights.omega_day,
        };
        a[(i + 1, i)] += w;
        a[(i, i + 1)] += w;
    }

    // Period links on the (n * period)-th subdiagonal for every complete
    // period n = 1..=m.
    let m = (d - 1) / period;
    for n in 1..=m {
        let w = match weights.decay {
            Some(beta) => beta * (1.0 - beta).powi(n as i32) * weights.omega_period,
            None => weights.omega_period,
        };
        let offset = n * period;
        for i in 0..d - offset {
            a[(i + offset, i)] += w;
            a[(i, i + offset)] += w;
        }
    }

    let laplacian = graph_laplacian(&a)?;
    let (eigenvalues, eigenvectors) = symmetric_eigen_sorted(&laplacian)?;
    Ok(TemporalPeriodicGraph {
        days: d,
        period,
        adjacency: a,
        laplacian,
        eigenvalues,
        eigenvectors,
    })
}

impl TemporalPeriodicGraph {
    pub fn days(&self) -> usize {
        self.days
    }

    pub fn period(&self) -> usize {
        self.period
    }

    pub fn adjacency(&self) -> &DMatrix<f64> {
        &self.adjacency
    }

    pub fn laplacian(&self) -> &DMatrix<f64> {
        &self.laplacian
    }

    pub fn eigenvalues(&self) -> &[f64] {
        &self.eigenvalues
    }

    pub fn eigenvectors(&self) -> &DMatrix<f64> {
        &self.eigenvectors
    }
}

/// Graph Fourier transform induced by the periodic day graph: the forward
/// matrix is `U^T` (projection onto the Laplacian eigenbasis) and the
/// inverse is `U`, so the pair is orthonormal with unit scale.
pub fn tgft_transform(g: &TemporalPeriodicGraph) -> Result<LinearTransform> {
    LinearTransform::orthonormal(g.eigenvectors.transpose())
}

/// Eigendecomposition of a symmetric matrix with eigenvalues sorted
/// ascending and each eigenvector's dominant entry made nonnegative.
fn symmetric_eigen_sorted(m: &DMatrix<f64>) -> Result<(Vec<f64>, DMatrix<f64>)> {
    let n = m.nrows();
    let eig = nalgebra::SymmetricEigen::try_new(m.clone(), f64::EPSILON, 100_000)
        .ok_or_else(|| Error::numeric("symmetric eigendecomposition did not converge"))?;
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| {
        eig.eigenvalues[a]
            .partial_cmp(&eig.eigenvalues[b])
            .expect("finite eigenvalues")
    });
    let eigenvalues: Vec<f64> = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let mut vectors = DMatrix::<f64>::zeros(n, n);
    for (dst, &src) in order.iter().enumerate() {
        let mut col = eig.eigenvectors.column(src).clone_owned();
        let (mut best, mut best_abs) = (0usize, 0.0f64);
        for i in 0..n {
            if col[i].abs() > best_abs {
                best_abs = col[i].abs();
                best = i;
            }
        }
        if col[best] < 0.0 {
            col.neg_mut();
        }
        vectors.set_column(dst, &col);
    }
    Ok((eigenvalues, vectors))
}

/// Directed circulant kernel Laplacian over a time horizon, together with
/// the truncation that removes the wrap-around rows.
///
/// The full circulant has `window + 1` nonzeros per row: the window size on
/// the diagonal and `-1` on each of the `window` preceding (cyclic) time
/// steps. Truncation drops the first `window` rows so no cyclic term
/// survives, leaving a strictly causal difference operator.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TemporalKernelLaplacian {
    horizon: usize,
    window: usize,
}

impl TemporalKernelLaplacian {
    pub fn new(horizon: usize, window: usize) -> Result<Self> {
        if window == 0 || window >= horizon {
            return Err(Error::parameter(format!(
                "kernel window {window} must lie in [1, {})",
                horizon
            )));
        }
        Ok(TemporalKernelLaplacian { horizon, window })
    }

    pub fn horizon(&self) -> usize {
        self.horizon
    }

    pub fn window(&self) -> usize {
        self.window
    }

    /// Applies the truncated operator: `out = Phi L_Phi z`, shape
    /// `(horizon - window) x n`.
    pub fn apply(&self, z: &DMatrix<f64>) -> Result<DMatrix<f64>> {
        let (t, tau) = (self.horizon, self.window);
        if z.nrows() != t {
            return Err(Error::shape(format!(
                "expected {} rows for the temporal operator, got {}",
                t,
                z.nrows()
            )));
        }
        let mut out = DMatrix::<f64>::zeros(t - tau, z.ncols());
        for j in 0..z.ncols() {
            let zc = z.column(j);
            let mut oc = out.column_mut(j);
            for r in 0..t - tau {
                let mut acc = tau as f64 * zc[r + tau];
                for d in 0..tau {
                    acc -= zc[r + d];
                }
                oc[r] = acc;
            }
        }
        Ok(out)
    }

    /// Applies the normal operator `(Phi L_Phi)^T (Phi L_Phi)` without
    /// materializing the `horizon x horizon` matrix.
    pub fn apply_gram(&self, z: &DMatrix<f64>) -> Result<DMatrix<f64>> {
        let (t, tau) = (self.horizon, self.window);
        let w = self.apply(z)?;
        let mut out = DMatrix::<f64>::zeros(t, z.ncols());
        for j in 0..z.ncols() {
            let wc = w.column(j);
            let mut oc = out.column_mut(j);
            for r in 0..t - tau {
                let v = wc[r];
                oc[r + tau] += tau as f64 * v;
                for d in 0..tau {
                    oc[r + d] -= v;
                }
            }
        }
        Ok(out)
    }

    /// `||Phi L_Phi z||_F^2`.
    pub fn penalty(&self, z: &DMatrix<f64>) -> Result<f64> {
        gtcr_penalty(z, self)
    }

    /// Dense circulant Laplacian, mainly for validation at small horizons.
    pub fn dense_circulant(&self) -> DMatrix<f64> {
        let (t, tau) = (self.horizon, self.window);
        DMatrix::from_fn(t, t, |i, j| {
            let lag = (i + t - j) % t;
            if lag == 0 {
                tau as f64
            } else if lag <= tau {
                -1.0
            } else {
                0.0
            }
        })
    }

    /// Dense truncated operator `Phi L_Phi` of shape
    /// `(horizon - window) x horizon`.
    pub fn dense_truncated(&self) -> DMatrix<f64> {
        let full = self.dense_circulant();
        full.rows(self.window, self.horizon - self.window).clone_owned()
    }
}

/// Temporal consistency penalty `||Phi L_Phi Z||_F^2`.
pub fn gtcr_penalty(z: &DMatrix<f64>, k: &TemporalKernelLaplacian) -> Result<f64> {
    let w = k.apply(z)?;
    Ok(w.iter().map(|v| v * v).sum())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn laplacian_of_two_node_graph() {
        let w = DMatrix::from_row_slice(2, 2, &[0.0, 1.0, 1.0, 0.0]);
        let lap = graph_laplacian(&w).unwrap();
        assert_eq!(lap, DMatrix::from_row_slice(2, 2, &[1.0, -1.0, -1.0, 1.0]));
    }

    #[test]
    fn laplacian_of_empty_graph_is_zero() {
        let w = DMatrix::<f64>::zeros(3, 3);
        assert_eq!(graph_laplacian(&w).unwrap(), DMatrix::<f64>::zeros(3, 3));
    }

    #[test]
    fn laplacian_rejects_negative_weights() {
        let w = DMatrix::from_row_slice(2, 2, &[0.0, -1.0, 1.0, 0.0]);
        assert!(matches!(graph_laplacian(&w), Err(Error::Parameter(_))));
    }

    #[test]
    fn adjacency_six_days_period_three_pattern() {
        let g = build_temporal_adjacency(6, 3, &TemporalWeights::default()).unwrap();
        let a = g.adjacency();
        for i in 0..6usize {
            for j in 0..6usize {
                let offset = i.abs_diff(j);
                let expect = if offset == 0 || offset == 1 || offset == 3 {
                    1.0
                } else {
                    0.0
                };
                assert_eq!(a[(i, j)], expect, "entry ({i}, {j})");
            }
        }
    }

    #[test]
    fn adjacency_single_day() {
        let g = build_temporal_adjacency(1, 1, &TemporalWeights::default()).unwrap();
        assert_eq!(g.adjacency(), &DMatrix::from_element(1, 1, 1.0));
    }

    #[test]
    fn adjacency_without_complete_period_is_tridiagonal() {
        let g = build_temporal_adjacency(4, 4, &TemporalWeights::default()).unwrap();
        let a = g.adjacency();
        for i in 0..4usize {
            for j in 0..4usize {
                let expect = if i.abs_diff(j) <= 1 { 1.0 } else { 0.0 };
                assert_eq!(a[(i, j)], expect);
            }
        }
    }

    #[test]
    fn adjacency_rejects_bad_period() {
        assert!(build_temporal_adjacency(3, 4, &TemporalWeights::default()).is_err());
        assert!(build_temporal_adjacency(3, 0, &TemporalWeights::default()).is_err());
    }

    #[test]
    fn decay_shrinks_period_weights() {
        let weights = TemporalWeights {
            decay: Some(0.5),
            ..TemporalWeights::default()
        };
        let g = build_temporal_adjacency(15, 7, &weights).unwrap();
        let a = g.adjacency();
        // n = 1 -> 0.5 * 0.5 = 0.25, n = 2 -> 0.5 * 0.25 = 0.125.
        assert_eq!(a[(7, 0)], 0.25);
        assert_eq!(a[(14, 0)], 0.125);
    }

    #[test]
    fn weekend_weights_cycle_over_the_period() {
        let weights = TemporalWeights {
            omega_day: 1.0,
            weekend: Some((0.5, 2)),
            ..TemporalWeights::default()
        };
        let g = build_temporal_adjacency(15, 7, &weights).unwrap();
        let a = g.adjacency();
        // A 7-day period with a 2-day tail has 4 plain transitions then 3
        // alternate ones, repeating.
        let expect = [1.0, 1.0, 1.0, 1.0, 0.5, 0.5, 0.5, 1.0, 1.0, 1.0, 1.0, 0.5, 0.5, 0.5];
        for (i, &w) in expect.iter().enumerate() {
            assert_eq!(a[(i + 1, i)], w, "transition {i}");
        }
    }

    #[test]
    fn laplacian_annihilates_constants_exactly() {
        // Integer weights make the row sums exact in floating point.
        let g = build_temporal_adjacency(9, 3, &TemporalWeights::default()).unwrap();
        let ones = DMatrix::from_element(9, 1, 1.0);
        let out = g.laplacian() * ones;
        assert!(out.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn tgft_is_orthonormal_and_diagonalizes() {
        let g = build_temporal_adjacency(8, 3, &TemporalWeights::default()).unwrap();
        let t = tgft_transform(&g).unwrap();
        let product = t.forward_matrix() * t.forward_matrix().transpose();
        assert!((product - DMatrix::<f64>::identity(8, 8)).norm() < 1e-10);
        let diag = t.forward_matrix() * g.laplacian() * t.forward_matrix().transpose();
        for i in 0..8 {
            for j in 0..8 {
                if i != j {
                    assert!(diag[(i, j)].abs() < 1e-9, "off-diagonal ({i},{j})");
                }
            }
        }
        // Ascending eigenvalues.
        for w in g.eigenvalues().windows(2) {
            assert!(w[0] <= w[1] + 1e-12);
        }
    }

    #[test]
    fn tgft_single_day_is_scalar_one() {
        let g = build_temporal_adjacency(1, 1, &TemporalWeights::default()).unwrap();
        let t = tgft_transform(&g).unwrap();
        assert_eq!(t.forward_matrix(), &DMatrix::from_element(1, 1, 1.0));
    }

    #[test]
    fn kernel_laplacian_small_cases() {
        let k = TemporalKernelLaplacian::new(3, 1).unwrap();
        let expect_full = DMatrix::from_row_slice(3, 3, &[1.0, 0.0, -1.0, -1.0, 1.0, 0.0, 0.0, -1.0, 1.0]);
        assert_eq!(k.dense_circulant(), expect_full);
        let expect_trunc = DMatrix::from_row_slice(2, 3, &[-1.0, 1.0, 0.0, 0.0, -1.0, 1.0]);
        assert_eq!(k.dense_truncated(), expect_trunc);
    }

    #[test]
    fn kernel_window_two_rows() {
        let k = TemporalKernelLaplacian::new(6, 2).unwrap();
        let m = k.dense_truncated();
        for r in 0..4usize {
            for c in 0..6usize {
                let expect = if c == r + 2 {
                    2.0
                } else if c == r || c == r + 1 {
                    -1.0
                } else {
                    0.0
                };
                assert_eq!(m[(r, c)], expect, "row {r} col {c}");
            }
        }
    }

    #[test]
    fn kernel_rejects_bad_window() {
        assert!(TemporalKernelLaplacian::new(3, 3).is_err());
        assert!(TemporalKernelLaplacian::new(3, 0).is_err());
    }

    #[test]
    fn truncated_operator_annihilates_constants_exactly() {
        let k = TemporalKernelLaplacian::new(10, 3).unwrap();
        let ones = DMatrix::from_element(10, 2, 1.0);
        let out = k.apply(&ones).unwrap();
        assert!(out.iter().all(|&v| v == 0.0));
        let gram = k.apply_gram(&ones).unwrap();
        assert!(gram.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn apply_matches_dense_operator() {
        let k = TemporalKernelLaplacian::new(7, 2).unwrap();
        let z = DMatrix::from_fn(7, 3, |i, j| ((i * 3 + j) as f64).sin());
        let fast = k.apply(&z).unwrap();
        let dense = k.dense_truncated() * &z;
        assert!((fast - dense).norm() < 1e-12);
    }

    #[test]
    fn gram_matches_dense_normal_operator() {
        let k = TemporalKernelLaplacian::new(8, 3).unwrap();
        let z = DMatrix::from_fn(8, 2, |i, j| (i as f64 - j as f64).cos());
        let fast = k.apply_gram(&z).unwrap();
        let t = k.dense_truncated();
        let dense = t.transpose() * (t * &z);
        assert!((fast - dense).norm() < 1e-12);
    }

    #[test]
    fn gtcr_penalty_hand_computed() {
        let k = TemporalKernelLaplacian::new(3, 1).unwrap();
        let z = DMatrix::from_column_slice(3, 1, &[0.0, 1.0, 3.0]);
        // First differences are (1, 2), so the squared norm is 5.
        assert!((gtcr_penalty(&z, &k).unwrap() - 5.0).abs() < 1e-12);
    }

    #[test]
    fn gtcr_penalty_zero_on_constant_columns() {
        let k = TemporalKernelLaplacian::new(5, 2).unwrap();
        let z = DMatrix::from_fn(5, 3, |_, j| j as f64 * 2.5);
        assert_eq!(gtcr_penalty(&z, &k).unwrap(), 0.0);
    }

    #[test]
    fn gtcr_penalty_is_quadratic_in_scale() {
        let k = TemporalKernelLaplacian::new(6, 2).unwrap();
        let z = DMatrix::from_fn(6, 2, |i, j| (i as f64 * 1.3 + j as f64).sin());
        let base = gtcr_penalty(&z, &k).unwrap();
        let scaled = gtcr_penalty(&(&z * 3.0), &k).unwrap();
        assert!((scaled - 9.0 * base).abs() <= 1e-10 * base.max(1.0));
    }
}
