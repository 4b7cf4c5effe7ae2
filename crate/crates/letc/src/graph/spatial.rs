//! Directed sensor graph, diffusion kernels and the spatial penalty.
//!
//! Sensor similarity is a Gaussian kernel of physical distance over a
//! directed edge set. Normalizing by in- or out-degree yields a
//! row-stochastic transition matrix whose random-walk Laplacian drives the
//! spatial smoothness penalty; diffusion kernels generalize the one-step
//! transition to multi-hop propagation.

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::sparse::Csr;

/// Which degree normalizes the transition matrix.
///
/// `Out` row-normalizes the adjacency itself (walks follow edge direction);
/// `In` row-normalizes the transpose (walks against edge direction).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum DegreeMode {
    #[default]
    Out,
    In,
}

/// Directed weighted sensor graph with the derived random-walk operators.
#[derive(Debug, Clone)]
pub struct SpatialGraph {
    nodes: usize,
    adjacency: Csr,
    degree_mode: DegreeMode,
    /// Row-stochastic transition matrix; isolated nodes get a unit self-loop.
    normalized: Csr,
    /// `I - normalized`; rows of isolated nodes are identically zero.
    laplacian: Csr,
}

impl SpatialGraph {
    /// Wraps an explicit nonnegative weight matrix. The diagonal must be
    /// zero: sensor similarity is defined between distinct sensors only.
    pub fn from_weights(adjacency: Csr, degree_mode: DegreeMode) -> Result<Self> {
        if adjacency.nrows() != adjacency.ncols() {
            return Err(Error::shape("adjacency must be square"));
        }
        let nodes = adjacency.nrows();
        for r in 0..nodes {
            for (c, v) in adjacency.row(r) {
                if !v.is_finite() || v < 0.0 {
                    return Err(Error::parameter(format!(
                        "adjacency entry ({r}, {c}) = {v} must be finite and nonnegative"
                    )));
                }
                if r == c && v != 0.0 {
                    return Err(Error::parameter(format!(
                        "self-loop at node {r}: spatial edges join distinct sensors"
                    )));
                }
            }
        }
        let directed = match degree_mode {
            DegreeMode::Out => adjacency.clone(),
            DegreeMode::In => adjacency.transpose(),
        };
        let degrees = directed.row_sums();
        let mut triplets = Vec::new();
        for (r, &degree) in degrees.iter().enumerate() {
            if degree > 0.0 {
                for (c, v) in directed.row(r) {
                    triplets.push((r, c, v / degree));
                }
            } else {
                // Isolated sensor: inert transition, zero Laplacian row.
                triplets.push((r, r, 1.0));
            }
        }
        let normalized = Csr::from_triplets(nodes, nodes, triplets);
        let mut lap_triplets = Vec::new();
        for (r, &degree) in degrees.iter().enumerate() {
            if degree == 0.0 {
                continue;
            }
            lap_triplets.push((r, r, 1.0));
            for (c, v) in normalized.row(r) {
                lap_triplets.push((r, c, -v));
            }
        }
        let laplacian = Csr::from_triplets(nodes, nodes, lap_triplets);
        Ok(SpatialGraph {
            nodes,
            adjacency,
            degree_mode,
            normalized,
            laplacian,
        })
    }

    pub fn node_count(&self) -> usize {
        self.nodes
    }

    pub fn degree_mode(&self) -> DegreeMode {
        self.degree_mode
    }

    pub fn adjacency(&self) -> &Csr {
        &self.adjacency
    }

    pub fn normalized_adjacency(&self) -> &Csr {
        &self.normalized
    }

    pub fn random_walk_laplacian(&self) -> &Csr {
        &self.laplacian
    }

    /// One propagation step `A_norm * x` for node-major data (rows = sensors).
    pub fn propagate(&self, x: &DMatrix<f64>) -> Result<DMatrix<f64>> {
        if x.nrows() != self.nodes {
            return Err(Error::shape("row count must equal the node count"));
        }
        Ok(self.normalized.mul_dense_right(x))
    }

    /// Sensors with zero degree under the configured normalization. The
    /// penalty is inert there, leaving those columns to the low-rank term
    /// alone, so callers usually want to surface them.
    pub fn isolated_nodes(&self) -> Vec<usize> {
        let directed = match self.degree_mode {
            DegreeMode::Out => self.adjacency.row_sums(),
            DegreeMode::In => self.adjacency.transpose().row_sums(),
        };
        directed
            .iter()
            .enumerate()
            .filter(|(_, &d)| d == 0.0)
            .map(|(i, _)| i)
            .collect()
    }
}

/// Gaussian-kernel directed adjacency: edge `i -> j` gets weight
/// `exp(-(dist(i, j) / (delta * sigma))^2)`, non-edges get zero.
///
/// When `sigma` is `None` it defaults to the standard deviation of the
/// distances attached to the declared edges.
pub fn gaussian_adjacency(
    dist: &DMatrix<f64>,
    edges: &[(usize, usize)],
    sigma: Option<f64>,
    delta: f64,
    degree_mode: DegreeMode,
) -> Result<SpatialGraph> {
    if dist.nrows() != dist.ncols() {
        return Err(Error::shape("distance matrix must be square"));
    }
    let n = dist.nrows();
    for i in 0..n {
        for j in 0..n {
            let d = dist[(i, j)];
            if !d.is_finite() || d < 0.0 {
                return Err(Error::parameter(format!(
                    "distance ({i}, {j}) = {d} must be finite and nonnegative"
                )));
            }
            if (d - dist[(j, i)]).abs() > 1e-9 * d.abs().max(1.0) {
                return Err(Error::parameter(format!(
                    "distance matrix is not symmetric at ({i}, {j})"
                )));
            }
        }
    }
    if delta <= 0.0 {
        return Err(Error::parameter("kernel scale delta must be positive"));
    }
    for &(src, dst) in edges {
        if src >= n || dst >= n {
            return Err(Error::parameter(format!(
                "edge ({src}, {dst}) references a node beyond {n}"
            )));
        }
        if src == dst {
            return Err(Error::parameter(format!(
                "self-loop at node {src}: spatial edges join distinct sensors"
            )));
        }
    }
    let sigma = match sigma {
        Some(s) => s,
        None => {
            let ds: Vec<f64> = edges.iter().map(|&(s, d)| dist[(s, d)]).collect();
            let mean = ds.iter().sum::<f64>() / ds.len().max(1) as f64;
            (ds.iter().map(|d| (d - mean).powi(2)).sum::<f64>() / ds.len().max(1) as f64).sqrt()
        }
    };
    if sigma <= 0.0 {
        return Err(Error::parameter(
            "kernel bandwidth sigma must be positive; pass it explicitly when edge distances are degenerate",
        ));
    }
    let denom = delta * sigma;
    let triplets = edges
        .iter()
        .map(|&(src, dst)| (src, dst, (-(dist[(src, dst)] / denom).powi(2)).exp()));
    let adjacency = Csr::from_triplets(n, n, triplets);
    SpatialGraph::from_weights(adjacency, degree_mode)
}

/// How the random walker spreads over the graph.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum DiffusionKernel {
    /// Single transition step, `h = A_norm`.
    OneStep,
    /// Fixed number of steps, `h = A_norm^steps`.
    HighOrder { steps: usize },
    /// Personalized page-rank, `h = sum_k alpha (1 - alpha)^k A_norm^k`,
    /// truncated where the coefficient tail drops below 1e-8 (capped at 64)
    /// unless an explicit order is given.
    PageRank { alpha: f64, truncation: Option<usize> },
    /// Heat diffusion, `h = sum_k e^{-t} t^k / k! A_norm^k`, truncated the
    /// same way.
    Heat { time: f64, truncation: Option<usize> },
    /// Penalizes both flow directions: the effective Laplacian becomes the
    /// sum of the forward and backward transition Laplacians.
    Bidirectional,
}

const SERIES_TAIL: f64 = 1e-8;
const SERIES_CAP: usize = 64;

impl DiffusionKernel {
    fn validate(&self) -> Result<()> {
        match *self {
            DiffusionKernel::OneStep | DiffusionKernel::Bidirectional => Ok(()),
            DiffusionKernel::HighOrder { steps } => {
                if steps == 0 {
                    Err(Error::parameter("diffusion step count must be positive"))
                } else {
                    Ok(())
                }
            }
            DiffusionKernel::PageRank { alpha, .. } => {
                if 0.0 < alpha && alpha < 1.0 {
                    Ok(())
                } else {
                    Err(Error::parameter("teleport probability must lie in (0, 1)"))
                }
            }
            DiffusionKernel::Heat { time, .. } => {
                if time > 0.0 {
                    Ok(())
                } else {
                    Err(Error::parameter("diffusion time must be positive"))
                }
            }
        }
    }

    /// Series coefficients for the truncated kernels.
    fn coefficients(&self) -> Option<Vec<f64>> {
        match *self {
            DiffusionKernel::PageRank { alpha, truncation } => {
                let order = truncation.unwrap_or_else(|| {
                    // Tail after order n is (1 - alpha)^{n + 1}.
                    let mut n = 0usize;
                    while (1.0 - alpha).powi(n as i32 + 1) > SERIES_TAIL && n < SERIES_CAP {
                        n += 1;
                    }
                    n
                });
                Some((0..=order).map(|k| alpha * (1.0 - alpha).powi(k as i32)).collect())
            }
            DiffusionKernel::Heat { time, truncation } => {
                let weight = |k: usize| {
                    let mut w = (-time).exp();
                    for i in 1..=k {
                        w *= time / i as f64;
                    }
                    w
                };
                let order = truncation.unwrap_or_else(|| {
                    let mut cumulative = weight(0);
                    let mut n = 0usize;
                    while 1.0 - cumulative > SERIES_TAIL && n < SERIES_CAP {
                        n += 1;
                        cumulative += weight(n);
                    }
                    n
                });
                Some((0..=order).map(weight).collect())
            }
            _ => None,
        }
    }
}

/// Materializes the diffusion operator `h(A_norm)` as a dense matrix.
///
/// For the bidirectional kernel the returned operator is
/// `A_fwd + A_bwd - I`, so `I - h` equals the sum of the forward and
/// backward transition Laplacians used by the penalty.
pub fn diffusion_operator(g: &SpatialGraph, kernel: &DiffusionKernel) -> Result<DMatrix<f64>> {
    kernel.validate()?;
    let n = g.node_count();
    let a = g.normalized_adjacency();
    match *kernel {
        DiffusionKernel::OneStep => Ok(a.to_dense()),
        DiffusionKernel::HighOrder { steps } => {
            let mut acc = a.to_dense();
            for _ in 1..steps {
                acc = a.mul_dense_right(&acc);
            }
            Ok(acc)
        }
        DiffusionKernel::PageRank { .. } | DiffusionKernel::Heat { .. } => {
            let coeffs = kernel.coefficients().expect("series kernel");
            let mut power = DMatrix::<f64>::identity(n, n);
            let mut acc = power.clone() * coeffs[0];
            for &c in &coeffs[1..] {
                power = a.mul_dense_right(&power);
                acc += &power * c;
            }
            Ok(acc)
        }
        DiffusionKernel::Bidirectional => {
            let (fwd, bwd) = bidirectional_laplacians(g)?;
            Ok(DMatrix::<f64>::identity(n, n) - fwd.add(&bwd).to_dense())
        }
    }
}

/// Forward (out-normalized) and backward (in-normalized) transition
/// Laplacians of the raw adjacency.
fn bidirectional_laplacians(g: &SpatialGraph) -> Result<(Csr, Csr)> {
    let fwd = SpatialGraph::from_weights(g.adjacency().clone(), DegreeMode::Out)?;
    let bwd = SpatialGraph::from_weights(g.adjacency().clone(), DegreeMode::In)?;
    Ok((
        fwd.random_walk_laplacian().clone(),
        bwd.random_walk_laplacian().clone(),
    ))
}

/// Spatial penalty operator: the effective Laplacian for a graph/kernel
/// pair, kept sparse whenever the kernel allows it.
#[derive(Debug, Clone)]
pub struct SpatialPenalty {
    laplacian: LapRepr,
    nodes: usize,
}

#[derive(Debug, Clone)]
enum LapRepr {
    Sparse(Csr),
    Dense(DMatrix<f64>),
}

impl SpatialPenalty {
    pub fn new(g: &SpatialGraph, kernel: &DiffusionKernel) -> Result<Self> {
        kernel.validate()?;
        let nodes = g.node_count();
        let laplacian = match kernel {
            DiffusionKernel::OneStep => LapRepr::Sparse(g.random_walk_laplacian().clone()),
            DiffusionKernel::Bidirectional => {
                let (fwd, bwd) = bidirectional_laplacians(g)?;
                LapRepr::Sparse(fwd.add(&bwd))
            }
            _ => {
                let h = diffusion_operator(g, kernel)?;
                LapRepr::Dense(DMatrix::<f64>::identity(nodes, nodes) - h)
            }
        };
        Ok(SpatialPenalty { laplacian, nodes })
    }

    pub fn node_count(&self) -> usize {
        self.nodes
    }

    /// `Z * L^T`, i.e. `(L Z^T)^T` for time-major `Z`.
    pub fn apply_transposed(&self, z: &DMatrix<f64>) -> Result<DMatrix<f64>> {
        if z.ncols() != self.nodes {
            return Err(Error::shape(format!(
                "expected {} columns for the spatial operator, got {}",
                self.nodes,
                z.ncols()
            )));
        }
        Ok(match &self.laplacian {
            LapRepr::Sparse(l) => l.mul_dense_left_transposed(z),
            LapRepr::Dense(l) => z * l.transpose(),
        })
    }

    /// Normal operator `Z * L^T * L`, the gradient factor of the penalty.
    pub fn apply_gram(&self, z: &DMatrix<f64>) -> Result<DMatrix<f64>> {
        let zt = self.apply_transposed(z)?;
        Ok(match &self.laplacian {
            LapRepr::Sparse(l) => l.mul_dense_left(&zt),
            LapRepr::Dense(l) => zt * l,
        })
    }

    /// `||L Z^T||_F^2`.
    pub fn penalty(&self, z: &DMatrix<f64>) -> Result<f64> {
        let zt = self.apply_transposed(z)?;
        Ok(zt.iter().map(|v| v * v).sum())
    }

    /// Dense copy of the effective Laplacian, for small-scale validation.
    pub fn dense_laplacian(&self) -> DMatrix<f64> {
        match &self.laplacian {
            LapRepr::Sparse(l) => l.to_dense(),
            LapRepr::Dense(l) => l.clone(),
        }
    }
}

/// Diffusion graph penalty `||L Z^T||_F^2` for time-major `Z` under the
/// chosen kernel.
pub fn dgr_penalty(z: &DMatrix<f64>, g: &SpatialGraph, kernel: &DiffusionKernel) -> Result<f64> {
    SpatialPenalty::new(g, kernel)?.penalty(z)
}

/// Closed-form graph smoother: solves `(I + L) X_bar = X` for node-major
/// `X` with the graph's random-walk Laplacian.
pub fn graph_smooth_closed_form(x: &DMatrix<f64>, g: &SpatialGraph) -> Result<DMatrix<f64>> {
    if x.nrows() != g.node_count() {
        return Err(Error::shape("row count must equal the node count"));
    }
    smooth_with_laplacian(x, &g.random_walk_laplacian().to_dense())
}

/// Solves `(I + lap) X_bar = X` by LU factorization.
pub fn smooth_with_laplacian(x: &DMatrix<f64>, lap: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    if lap.nrows() != lap.ncols() || lap.nrows() != x.nrows() {
        return Err(Error::shape("laplacian and signal dimensions disagree"));
    }
    let system = DMatrix::<f64>::identity(lap.nrows(), lap.ncols()) + lap;
    system
        .lu()
        .solve(x)
        .ok_or_else(|| Error::numeric("smoothing system is singular"))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn two_cycle() -> SpatialGraph {
        let adj = Csr::from_triplets(2, 2, vec![(0, 1, 1.0), (1, 0, 1.0)]);
        SpatialGraph::from_weights(adj, DegreeMode::Out).unwrap()
    }

    fn chain(n: usize) -> SpatialGraph {
        let mut triplets = Vec::new();
        for i in 0..n - 1 {
            triplets.push((i, i + 1, 1.0));
            triplets.push((i + 1, i, 1.0));
        }
        SpatialGraph::from_weights(Csr::from_triplets(n, n, triplets), DegreeMode::Out).unwrap()
    }

    #[test]
    fn normalized_rows_are_stochastic() {
        let g = chain(4);
        for s in g.normalized_adjacency().row_sums() {
            assert!((s - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn isolated_node_gets_inert_rows() {
        let adj = Csr::from_triplets(3, 3, vec![(0, 1, 2.0)]);
        let g = SpatialGraph::from_weights(adj, DegreeMode::Out).unwrap();
        let norm = g.normalized_adjacency().to_dense();
        assert_eq!(norm[(1, 1)], 1.0);
        assert_eq!(norm[(2, 2)], 1.0);
        let lap = g.random_walk_laplacian().to_dense();
        assert!(lap.row(1).iter().all(|&v| v == 0.0));
        assert!(lap.row(2).iter().all(|&v| v == 0.0));
        assert_eq!(g.isolated_nodes(), vec![1, 2]);
    }

    #[test]
    fn isolated_nodes_follow_the_degree_mode() {
        // Node 2 only receives edges; node 0 only emits them.
        let adj = Csr::from_triplets(3, 3, vec![(0, 1, 1.0), (0, 2, 1.0), (1, 2, 1.0)]);
        let out = SpatialGraph::from_weights(adj.clone(), DegreeMode::Out).unwrap();
        assert_eq!(out.isolated_nodes(), vec![2]);
        let inward = SpatialGraph::from_weights(adj, DegreeMode::In).unwrap();
        assert_eq!(inward.isolated_nodes(), vec![0]);
    }

    #[test]
    fn self_loops_are_rejected() {
        let adj = Csr::from_triplets(2, 2, vec![(0, 0, 1.0)]);
        assert!(SpatialGraph::from_weights(adj, DegreeMode::Out).is_err());
    }

    #[test]
    fn in_degree_mode_normalizes_the_transpose() {
        let adj = Csr::from_triplets(3, 3, vec![(0, 2, 1.0), (1, 2, 3.0)]);
        let g = SpatialGraph::from_weights(adj, DegreeMode::In).unwrap();
        let norm = g.normalized_adjacency().to_dense();
        assert!((norm[(2, 0)] - 0.25).abs() < 1e-12);
        assert!((norm[(2, 1)] - 0.75).abs() < 1e-12);
    }

    #[test]
    fn gaussian_weights_hit_analytic_points() {
        let mut dist = DMatrix::<f64>::zeros(3, 3);
        dist[(0, 1)] = 2.0;
        dist[(1, 0)] = 2.0;
        let edges = vec![(0, 1), (1, 0), (0, 2), (2, 0)];
        // dist(0, 2) = 0 -> weight 1; sigma = 1, delta = 2 and dist = 2
        // -> exp(-1).
        let g = gaussian_adjacency(&dist, &edges, Some(1.0), 2.0, DegreeMode::Out).unwrap();
        let a = g.adjacency().to_dense();
        assert!((a[(0, 2)] - 1.0).abs() < 1e-12);
        assert!((a[(0, 1)] - (-1.0f64).exp()).abs() < 1e-12);
        assert_eq!(a[(1, 2)], 0.0);
    }

    #[test]
    fn gaussian_rejects_bad_parameters() {
        let dist = DMatrix::<f64>::zeros(2, 2);
        assert!(gaussian_adjacency(&dist, &[(0, 1)], Some(0.0), 1.0, DegreeMode::Out).is_err());
        assert!(gaussian_adjacency(&dist, &[(0, 1)], Some(1.0), 0.0, DegreeMode::Out).is_err());
        assert!(gaussian_adjacency(&dist, &[(0, 0)], Some(1.0), 1.0, DegreeMode::Out).is_err());
        // All edge distances equal -> zero deviation, sigma must be explicit.
        assert!(gaussian_adjacency(&dist, &[(0, 1)], None, 1.0, DegreeMode::Out).is_err());
    }

    #[test]
    fn one_step_operator_on_two_cycle() {
        let g = two_cycle();
        let h = diffusion_operator(&g, &DiffusionKernel::OneStep).unwrap();
        assert_eq!(h, DMatrix::from_row_slice(2, 2, &[0.0, 1.0, 1.0, 0.0]));
    }

    #[test]
    fn high_order_is_repeated_transition() {
        let g = chain(4);
        let h1 = diffusion_operator(&g, &DiffusionKernel::OneStep).unwrap();
        let h2 = diffusion_operator(&g, &DiffusionKernel::HighOrder { steps: 2 }).unwrap();
        assert!((&h1 * &h1 - h2).norm() < 1e-12);
    }

    #[test]
    fn page_rank_rows_sum_to_one_minus_tail() {
        let g = chain(5);
        let kernel = DiffusionKernel::PageRank {
            alpha: 0.5,
            truncation: Some(40),
        };
        let h = diffusion_operator(&g, &kernel).unwrap();
        for r in 0..5 {
            let sum: f64 = h.row(r).iter().sum();
            assert!((sum - 1.0).abs() <= 1e-8, "row {r} sums to {sum}");
        }
    }

    #[test]
    fn automatic_truncation_keeps_tail_small() {
        let kernel = DiffusionKernel::PageRank {
            alpha: 0.3,
            truncation: None,
        };
        let coeffs = kernel.coefficients().unwrap();
        assert!(1.0 - coeffs.iter().sum::<f64>() <= 1e-8);
        let heat = DiffusionKernel::Heat {
            time: 2.0,
            truncation: None,
        };
        let coeffs = heat.coefficients().unwrap();
        assert!(1.0 - coeffs.iter().sum::<f64>() <= 1e-8);
        assert!(coeffs.len() <= SERIES_CAP + 1);
    }

    #[test]
    fn kernel_parameters_are_validated() {
        let g = two_cycle();
        assert!(diffusion_operator(&g, &DiffusionKernel::PageRank { alpha: 1.0, truncation: None }).is_err());
        assert!(diffusion_operator(&g, &DiffusionKernel::Heat { time: 0.0, truncation: None }).is_err());
        assert!(diffusion_operator(&g, &DiffusionKernel::HighOrder { steps: 0 }).is_err());
    }

    #[test]
    fn dgr_vanishes_on_constant_signal() {
        let g = chain(5);
        let z = DMatrix::from_element(7, 5, 3.25);
        let p = dgr_penalty(&z, &g, &DiffusionKernel::OneStep).unwrap();
        assert!(p.abs() < 1e-20);
    }

    #[test]
    fn dgr_two_node_hand_computed() {
        let g = two_cycle();
        // One time row with sensor values (1, 0): L Z^T = (1, -1).
        let z = DMatrix::from_row_slice(1, 2, &[1.0, 0.0]);
        let p = dgr_penalty(&z, &g, &DiffusionKernel::OneStep).unwrap();
        assert!((p - 2.0).abs() < 1e-12);
    }

    #[test]
    fn dgr_is_quadratic_in_scale() {
        let g = chain(6);
        let z = DMatrix::from_fn(4, 6, |i, j| ((i + 2 * j) as f64).sin());
        let base = dgr_penalty(&z, &g, &DiffusionKernel::OneStep).unwrap();
        let scaled = dgr_penalty(&(&z * 2.0), &g, &DiffusionKernel::OneStep).unwrap();
        assert!((scaled - 4.0 * base).abs() <= 1e-10 * base.max(1.0));
    }

    #[test]
    fn bidirectional_penalty_matches_sum_of_laplacians() {
        let adj = Csr::from_triplets(3, 3, vec![(0, 1, 1.0), (1, 2, 2.0), (2, 0, 1.5)]);
        let g = SpatialGraph::from_weights(adj, DegreeMode::Out).unwrap();
        let pen = SpatialPenalty::new(&g, &DiffusionKernel::Bidirectional).unwrap();
        let (fwd, bwd) = bidirectional_laplacians(&g).unwrap();
        let expect = fwd.to_dense() + bwd.to_dense();
        assert!((pen.dense_laplacian() - &expect).norm() < 1e-12);
        // The materialized diffusion operator stays consistent: I - h = L.
        let h = diffusion_operator(&g, &DiffusionKernel::Bidirectional).unwrap();
        assert!((DMatrix::<f64>::identity(3, 3) - h - expect).norm() < 1e-12);
    }

    #[test]
    fn penalty_gram_matches_dense_reference() {
        let g = chain(5);
        let pen = SpatialPenalty::new(&g, &DiffusionKernel::OneStep).unwrap();
        let z = DMatrix::from_fn(4, 5, |i, j| ((i * 5 + j) as f64 * 0.37).cos());
        let l = pen.dense_laplacian();
        let expect = &z * l.transpose() * &l;
        assert!((pen.apply_gram(&z).unwrap() - expect).norm() < 1e-12);
    }

    #[test]
    fn smoothing_identity_cases() {
        // Empty graph: zero Laplacian leaves the signal untouched.
        let g = SpatialGraph::from_weights(Csr::from_triplets(3, 3, vec![]), DegreeMode::Out).unwrap();
        let x = DMatrix::from_fn(3, 2, |i, j| (i + j) as f64);
        let out = graph_smooth_closed_form(&x, &g).unwrap();
        assert!((out - &x).norm() < 1e-12);

        // Constant signals live in the Laplacian null space.
        let g = chain(4);
        let c = DMatrix::from_element(4, 3, 2.5);
        let out = graph_smooth_closed_form(&c, &g).unwrap();
        assert!((out - &c).norm() < 1e-10);
    }

    #[test]
    fn propagation_equals_identity_minus_laplacian_step() {
        let g = chain(6);
        // Integer data and power-of-two degrees keep every intermediate a
        // small dyadic rational, so the identity holds bitwise here.
        let x = DMatrix::from_fn(6, 3, |i, j| 40.0 + ((i * 3 + j) % 7) as f64 * 2.0);
        let prop = g.propagate(&x).unwrap();
        let euler = &x - g.random_walk_laplacian().mul_dense_right(&x);
        assert_eq!(prop, euler);

        let y = DMatrix::from_fn(6, 3, |i, j| ((i * 3 + j) as f64 * 0.7).sin());
        let prop = g.propagate(&y).unwrap();
        let euler = &y - g.random_walk_laplacian().mul_dense_right(&y);
        assert!((prop - euler).norm() <= 1e-13 * y.norm());
    }
}
