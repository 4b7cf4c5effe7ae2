//! ADMM solver for Laplacian-enhanced low-rank tensor kriging.
//!
//! One outer iteration alternates a tensor singular value thresholding step
//! on the tensorized variable, a conjugate-gradient solve of the Sylvester
//! system coupling the spatial and temporal penalties, an exact transfer of
//! the observations onto the estimate, and the dual ascent step. The penalty
//! weight and the sketch rank grow on a fixed schedule until the relative
//! change of the estimate drops below the convergence threshold.

use std::time::Instant;

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::graph::{
    build_temporal_adjacency, tgft_transform, DiffusionKernel, SpatialGraph, SpatialPenalty,
    TemporalKernelLaplacian, TemporalPeriodicGraph, TemporalWeights,
};
use crate::tensor::{
    matricize, randomized_t_svt, t_svt, t_tnn, tensorize, LinearTransform, Tensor3,
};

/// Binary observation mask over a time-by-location matrix.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Mask {
    rows: usize,
    cols: usize,
    data: Vec<bool>,
}

impl Mask {
    pub fn new(rows: usize, cols: usize) -> Self {
        Mask {
            rows,
            cols,
            data: vec![false; rows * cols],
        }
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> bool) -> Self {
        let mut m = Mask::new(rows, cols);
        for r in 0..rows {
            for c in 0..cols {
                m.set(r, c, f(r, c));
            }
        }
        m
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    pub fn get(&self, r: usize, c: usize) -> bool {
        self.data[r * self.cols + c]
    }

    pub fn set(&mut self, r: usize, c: usize, v: bool) {
        self.data[r * self.cols + c] = v;
    }

    pub fn count_set(&self) -> usize {
        self.data.iter().filter(|&&b| b).count()
    }

    /// Set positions in row-major order.
    pub fn positions(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.data
            .iter()
            .enumerate()
            .filter(|(_, &b)| b)
            .map(|(i, _)| (i / self.cols, i % self.cols))
    }
}

/// Observed data, its indicator mask, and the held-out index set used for
/// scoring.
#[derive(Debug, Clone)]
pub struct ObservationSet {
    values: DMatrix<f64>,
    mask: Mask,
    holdout: Vec<(usize, usize)>,
}

impl ObservationSet {
    /// Validates that masked entries are finite and that the held-out set
    /// never overlaps the observations.
    pub fn new(values: DMatrix<f64>, mask: Mask, holdout: Vec<(usize, usize)>) -> Result<Self> {
        if mask.dims() != (values.nrows(), values.ncols()) {
            return Err(Error::shape("mask dimensions do not match values"));
        }
        for (r, c) in mask.positions() {
            if !values[(r, c)].is_finite() {
                return Err(Error::numeric(format!(
                    "observed entry ({r}, {c}) is not finite"
                )));
            }
        }
        for &(r, c) in &holdout {
            if r >= values.nrows() || c >= values.ncols() {
                return Err(Error::shape(format!(
                    "held-out index ({r}, {c}) is out of bounds"
                )));
            }
            if mask.get(r, c) {
                return Err(Error::parameter(format!(
                    "held-out index ({r}, {c}) is also marked observed"
                )));
            }
        }
        Ok(ObservationSet {
            values,
            mask,
            holdout,
        })
    }

    pub fn values(&self) -> &DMatrix<f64> {
        &self.values
    }

    pub fn mask(&self) -> &Mask {
        &self.mask
    }

    pub fn holdout(&self) -> &[(usize, usize)] {
        &self.holdout
    }

    pub fn nrows(&self) -> usize {
        self.values.nrows()
    }

    pub fn ncols(&self) -> usize {
        self.values.ncols()
    }
}

/// All solver hyper-parameters with their stock defaults.
#[derive(Debug, Clone)]
pub struct SolverConfig {
    /// Spatial penalty weight.
    pub lambda1: f64,
    /// Temporal penalty weight.
    pub lambda2: f64,
    /// Temporal kernel window size.
    pub tau: usize,
    /// Initial penalty parameter / learning rate.
    pub mu0: f64,
    /// Multiplicative growth of the penalty parameter per iteration.
    pub mu_growth: f64,
    /// Penalty parameter ceiling.
    pub mu_max: f64,
    /// Convergence threshold on the relative change of the estimate.
    pub epsilon: f64,
    pub max_outer_iters: usize,
    /// Inner conjugate-gradient iterations per outer iteration.
    pub cg_iters: usize,
    /// Initial sketch rank for the randomized thresholding.
    pub rank_init: usize,
    /// Additive sketch-rank growth per iteration.
    pub rank_step: usize,
    /// Sketch-rank ceiling; `None` derives `min(I, J) - oversample - 1`.
    pub rank_cap: Option<usize>,
    /// Power iterations inside the randomized sketch.
    pub power_iters: usize,
    /// Oversampling columns added to the sketch.
    pub oversample: usize,
    /// Use the exact thresholding operator instead of the sketched one.
    pub exact_svt: bool,
    /// Spatial diffusion kernel.
    pub kernel: DiffusionKernel,
    /// Period of the day graph, in days.
    pub period_days: usize,
    pub temporal_weights: TemporalWeights,
    pub seed: u64,
    /// Initialize unobserved entries with their column means instead of 0.
    pub init_column_mean: bool,
    /// Record the augmented Lagrangian value every iteration.
    pub log_objective: bool,
    /// Retain per-iteration variable snapshots (diagnostic, memory heavy).
    pub keep_iterates: bool,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            lambda1: 0.01,
            lambda2: 0.1,
            tau: 1,
            mu0: 1e-3,
            mu_growth: 1.5,
            mu_max: 1e4,
            epsilon: 1e-3,
            max_outer_iters: 100,
            cg_iters: 3,
            rank_init: 10,
            rank_step: 10,
            rank_cap: None,
            power_iters: 1,
            oversample: 10,
            exact_svt: false,
            kernel: DiffusionKernel::OneStep,
            period_days: 7,
            temporal_weights: TemporalWeights::default(),
            seed: 0,
            init_column_mean: false,
            log_objective: true,
            keep_iterates: false,
        }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<()> {
        if self.lambda1 < 0.0 || self.lambda2 < 0.0 {
            return Err(Error::parameter("penalty weights must be nonnegative"));
        }
        if self.tau == 0 {
            return Err(Error::parameter("kernel window must be positive"));
        }
        if self.mu0 <= 0.0 {
            return Err(Error::parameter("mu0 must be positive"));
        }
        if self.mu_growth <= 1.0 {
            return Err(Error::parameter("mu growth factor must exceed 1"));
        }
        if self.mu_max < self.mu0 {
            return Err(Error::parameter("mu ceiling must be at least mu0"));
        }
        if self.epsilon <= 0.0 {
            return Err(Error::parameter("convergence threshold must be positive"));
        }
        if self.max_outer_iters == 0 {
            return Err(Error::parameter("at least one outer iteration is required"));
        }
        if self.cg_iters == 0 {
            return Err(Error::parameter("at least one CG iteration is required"));
        }
        if self.rank_init == 0 {
            return Err(Error::parameter("initial sketch rank must be positive"));
        }
        if self.period_days == 0 {
            return Err(Error::parameter("period must be positive"));
        }
        Ok(())
    }

    /// Effective sketch-rank ceiling for an `I x J` slice problem. A result
    /// of zero means the sketch cannot be smaller than the slice and the
    /// exact operator is used instead.
    pub fn effective_rank_cap(&self, intervals: usize, locations: usize) -> usize {
        self.rank_cap
            .unwrap_or_else(|| intervals.min(locations).saturating_sub(self.oversample + 1))
    }
}

/// The two temporal operators used by one solve: the periodic day graph
/// (whose eigenbasis is the mode-3 transform) and the kernel Laplacian over
/// the full time axis.
#[derive(Debug, Clone)]
pub struct TemporalModel {
    pub periodic: TemporalPeriodicGraph,
    pub kernel: TemporalKernelLaplacian,
}

impl TemporalModel {
    pub fn new(periodic: TemporalPeriodicGraph, kernel: TemporalKernelLaplacian) -> Self {
        TemporalModel { periodic, kernel }
    }

    /// Builds both operators for a `days`-day horizon with `intervals`
    /// time points per day using the weights in `config`.
    pub fn from_config(config: &SolverConfig, intervals: usize, days: usize) -> Result<Self> {
        let periodic =
            build_temporal_adjacency(days, config.period_days, &config.temporal_weights)?;
        let kernel = TemporalKernelLaplacian::new(intervals * days, config.tau)?;
        Ok(TemporalModel { periodic, kernel })
    }
}

/// Precomputed operators shared by all iterations of one solve.
pub struct ProblemOps {
    pub transform: LinearTransform,
    pub spatial: SpatialPenalty,
    pub temporal: TemporalKernelLaplacian,
    pub intervals_per_day: usize,
}

impl ProblemOps {
    pub fn new(
        spatial_graph: &SpatialGraph,
        kernel: &DiffusionKernel,
        temporal: &TemporalModel,
        intervals_per_day: usize,
        rows: usize,
        cols: usize,
    ) -> Result<Self> {
        if intervals_per_day == 0 || !rows.is_multiple_of(intervals_per_day) {
            return Err(Error::shape(format!(
                "row count {rows} is not a multiple of {intervals_per_day} intervals per day"
            )));
        }
        let days = rows / intervals_per_day;
        if temporal.periodic.days() != days {
            return Err(Error::shape(format!(
                "day graph covers {} days but the data has {days}",
                temporal.periodic.days()
            )));
        }
        if temporal.kernel.horizon() != rows {
            return Err(Error::shape(format!(
                "temporal kernel horizon {} does not match {rows} time points",
                temporal.kernel.horizon()
            )));
        }
        if spatial_graph.node_count() != cols {
            return Err(Error::shape(format!(
                "spatial graph has {} nodes but the data has {cols} locations",
                spatial_graph.node_count()
            )));
        }
        Ok(ProblemOps {
            transform: tgft_transform(&temporal.periodic)?,
            spatial: SpatialPenalty::new(spatial_graph, kernel)?,
            temporal: temporal.kernel,
            intervals_per_day,
        })
    }
}

/// Mutable state of one ADMM run.
#[derive(Debug, Clone)]
pub struct SolverState {
    pub x: Tensor3,
    pub z: DMatrix<f64>,
    pub y: Tensor3,
    pub mu: f64,
    pub rank_k: usize,
    pub iteration: usize,
    pub rel_change: f64,
}

impl SolverState {
    pub fn new(x: Tensor3, z: DMatrix<f64>, y: Tensor3, mu: f64, rank_k: usize) -> Self {
        SolverState {
            x,
            z,
            y,
            mu,
            rank_k,
            iteration: 0,
            rel_change: f64::INFINITY,
        }
    }
}

/// Per-iteration diagnostics record.
#[derive(Debug, Clone)]
pub struct IterationRecord {
    pub iteration: usize,
    pub rel_change: f64,
    pub mu: f64,
    pub rank_k: usize,
    pub objective: Option<f64>,
    pub x_seconds: f64,
    pub z_seconds: f64,
    /// Residual norms of the inner CG solve, starting from the warm-start
    /// residual.
    pub cg_residuals: Vec<f64>,
}

/// Snapshot of the solver variables after one outer iteration.
#[derive(Debug, Clone)]
pub struct IterateSnapshot {
    pub x: Tensor3,
    pub z: DMatrix<f64>,
    pub y: Tensor3,
    pub mu: f64,
}

#[derive(Debug, Clone, Default)]
pub struct Diagnostics {
    pub records: Vec<IterationRecord>,
    pub total_seconds: f64,
    pub snapshots: Vec<IterateSnapshot>,
}

/// Result of one solve. A run that hits the iteration cap still returns its
/// best iterate, flagged as not converged.
#[derive(Debug, Clone)]
pub struct Solution {
    pub z_hat: DMatrix<f64>,
    pub converged: bool,
    pub iterations: usize,
    pub state: SolverState,
    pub diagnostics: Diagnostics,
}

/// Thresholding step on the tensorized variable:
/// `X <- D_{1/mu}(T(Z) - Y / mu)` with the configured sketch rank, or the
/// exact operator in diagnostic mode.
pub fn x_update(
    state: &SolverState,
    ops: &ProblemOps,
    config: &SolverConfig,
    rng: &mut impl Rng,
) -> Result<Tensor3> {
    if state.mu <= 0.0 {
        return Err(Error::parameter("mu must be positive"));
    }
    let target = tensorize(&state.z, ops.intervals_per_day)?.axpy(-1.0 / state.mu, &state.y);
    let threshold = state.mu.recip();
    let (n1, n2, _) = target.dims();
    let sketchable = state.rank_k >= 1 && state.rank_k < n1.min(n2);
    if config.exact_svt || !sketchable {
        t_svt(&target, &ops.transform, threshold)
    } else {
        randomized_t_svt(
            &target,
            &ops.transform,
            threshold,
            state.rank_k,
            config.power_iters,
            config.oversample,
            rng,
        )
    }
}

/// Conjugate-gradient solve of the Sylvester system
/// `lambda1 Z L^T L + lambda2 G Z + mu Z = mu T^{-1}(X + Y / mu)`
/// where `G` is the temporal normal operator. The Kronecker form of the
/// system is never materialized: each matrix-vector product is two
/// matrix-matrix products. Returns the estimate together with the CG
/// residual norms (warm-start residual first).
pub fn z_update_cg(
    state: &SolverState,
    ops: &ProblemOps,
    config: &SolverConfig,
) -> Result<(DMatrix<f64>, Vec<f64>)> {
    let mu = state.mu;
    if mu <= 0.0 {
        return Err(Error::parameter("mu must be positive"));
    }
    let rhs = matricize(&state.x.axpy(1.0 / mu, &state.y)) * mu;
    let apply = |v: &DMatrix<f64>| -> Result<DMatrix<f64>> {
        let mut out = v * mu;
        if config.lambda1 > 0.0 {
            out += ops.spatial.apply_gram(v)? * config.lambda1;
        }
        if config.lambda2 > 0.0 {
            out += ops.temporal.apply_gram(v)? * config.lambda2;
        }
        Ok(out)
    };

    let mut z = state.z.clone();
    let mut r = &rhs - apply(&z)?;
    let mut q = r.clone();
    let mut rsq = r.norm_squared();
    let mut residuals = vec![rsq.sqrt()];
    let stop = 1e-14 * rhs.norm().max(1.0);
    for inner in 0..config.cg_iters {
        if residuals.last().copied().unwrap_or(f64::INFINITY) <= stop {
            break;
        }
        let s = apply(&q)?;
        let denom = q.dot(&s);
        if !denom.is_finite() || denom <= 0.0 {
            return Err(Error::numeric(format!(
                "conjugate gradient broke down at inner iteration {inner} \
                 (outer {}, mu = {mu:e}, rank = {}, q'Aq = {denom:e})",
                state.iteration, state.rank_k
            )));
        }
        let alpha = rsq / denom;
        z += &q * alpha;
        r -= &s * alpha;
        let rsq_new = r.norm_squared();
        if !rsq_new.is_finite() {
            return Err(Error::numeric(format!(
                "conjugate gradient diverged at inner iteration {inner} \
                 (outer {}, mu = {mu:e}, rank = {}, residual = {rsq_new:e})",
                state.iteration, state.rank_k
            )));
        }
        residuals.push(rsq_new.sqrt());
        let beta = rsq_new / rsq;
        rsq = rsq_new;
        q = &r + q * beta;
    }
    Ok((z, residuals))
}

/// Dual ascent step `Y <- Y + mu (X - T(Z))`.
pub fn dual_update(state: &SolverState, ops: &ProblemOps) -> Result<Tensor3> {
    let tz = tensorize(&state.z, ops.intervals_per_day)?;
    Ok(state.y.axpy(state.mu, &state.x.axpy(-1.0, &tz)))
}

/// Copies every observed value onto the estimate; unobserved entries are
/// untouched. This is plain assignment, so observed entries of the final
/// estimate match the data bit for bit.
pub fn transmit_observations(z: &mut DMatrix<f64>, obs: &ObservationSet) -> Result<()> {
    if (z.nrows(), z.ncols()) != (obs.nrows(), obs.ncols()) {
        return Err(Error::shape("estimate and observations differ in shape"));
    }
    for (r, c) in obs.mask().positions() {
        z[(r, c)] = obs.values()[(r, c)];
    }
    Ok(())
}

/// Augmented Lagrangian value of the current variables.
pub fn augmented_lagrangian(
    x: &Tensor3,
    z: &DMatrix<f64>,
    y: &Tensor3,
    mu: f64,
    ops: &ProblemOps,
    config: &SolverConfig,
) -> Result<f64> {
    let tz = tensorize(z, ops.intervals_per_day)?;
    let resid = x.axpy(-1.0, &tz);
    let mut value = t_tnn(x, &ops.transform)?;
    if config.lambda1 > 0.0 {
        value += 0.5 * config.lambda1 * ops.spatial.penalty(z)?;
    }
    if config.lambda2 > 0.0 {
        value += 0.5 * config.lambda2 * ops.temporal.penalty(z)?;
    }
    value += y.inner(&resid);
    value += 0.5 * mu * resid.frobenius_norm().powi(2);
    Ok(value)
}

/// Runs the full solver loop. Shapes: observations are `(I * K) x J`,
/// the spatial graph has `J` nodes, the day graph `K` nodes, and the kernel
/// Laplacian horizon is `I * K`.
pub fn solve(
    obs: &ObservationSet,
    spatial_graph: &SpatialGraph,
    temporal: &TemporalModel,
    config: &SolverConfig,
    intervals_per_day: usize,
) -> Result<Solution> {
    config.validate()?;
    let (rows, cols) = (obs.nrows(), obs.ncols());
    let ops = ProblemOps::new(
        spatial_graph,
        &config.kernel,
        temporal,
        intervals_per_day,
        rows,
        cols,
    )?;
    let days = rows / intervals_per_day;
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);

    let mut z0 = if config.init_column_mean {
        let mut z = DMatrix::<f64>::zeros(rows, cols);
        for c in 0..cols {
            let (mut sum, mut count) = (0.0, 0usize);
            for r in 0..rows {
                if obs.mask().get(r, c) {
                    sum += obs.values()[(r, c)];
                    count += 1;
                }
            }
            if count > 0 {
                let mean = sum / count as f64;
                for r in 0..rows {
                    z[(r, c)] = mean;
                }
            }
        }
        z
    } else {
        DMatrix::<f64>::zeros(rows, cols)
    };
    transmit_observations(&mut z0, obs)?;

    let cap = config.effective_rank_cap(intervals_per_day, cols);
    let mut state = SolverState::new(
        Tensor3::zeros(intervals_per_day, cols, days),
        z0,
        Tensor3::zeros(intervals_per_day, cols, days),
        config.mu0,
        config.rank_init.min(cap),
    );

    let solve_start = Instant::now();
    let mut diagnostics = Diagnostics::default();
    let mut converged = false;
    for outer in 0..config.max_outer_iters {
        let z_prev = state.z.clone();

        let t_x = Instant::now();
        state.x = x_update(&state, &ops, config, &mut rng)?;
        let x_seconds = t_x.elapsed().as_secs_f64();

        let t_z = Instant::now();
        let (z_new, cg_residuals) = z_update_cg(&state, &ops, config)?;
        state.z = z_new;
        transmit_observations(&mut state.z, obs)?;
        let z_seconds = t_z.elapsed().as_secs_f64();

        state.y = dual_update(&state, &ops)?;

        let diff = (&state.z - &z_prev).norm();
        let denom = z_prev.norm();
        state.rel_change = if denom > 0.0 {
            diff / denom
        } else if diff > 0.0 {
            f64::INFINITY
        } else {
            0.0
        };

        let objective = if config.log_objective {
            Some(augmented_lagrangian(
                &state.x, &state.z, &state.y, state.mu, &ops, config,
            )?)
        } else {
            None
        };
        diagnostics.records.push(IterationRecord {
            iteration: outer,
            rel_change: state.rel_change,
            mu: state.mu,
            rank_k: state.rank_k,
            objective,
            x_seconds,
            z_seconds,
            cg_residuals,
        });
        if config.keep_iterates {
            diagnostics.snapshots.push(IterateSnapshot {
                x: state.x.clone(),
                z: state.z.clone(),
                y: state.y.clone(),
                mu: state.mu,
            });
        }

        state.mu = (state.mu * config.mu_growth).min(config.mu_max);
        state.rank_k = (state.rank_k + config.rank_step).min(cap);
        state.iteration = outer + 1;

        if state.rel_change < config.epsilon {
            converged = true;
            break;
        }
    }
    diagnostics.total_seconds = solve_start.elapsed().as_secs_f64();

    Ok(Solution {
        z_hat: state.z.clone(),
        converged,
        iterations: state.iteration,
        state,
        diagnostics,
    })
}

/// Kriging accuracy over a held-out index set.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Metrics {
    pub mae: f64,
    pub rmse: f64,
    /// Total absolute error over total absolute truth; absent when the
    /// truth sums to zero.
    pub wmape: Option<f64>,
}

/// Scores an estimate against ground truth on the held-out entries.
pub fn evaluate(
    z_hat: &DMatrix<f64>,
    ground_truth: &DMatrix<f64>,
    holdout: &[(usize, usize)],
) -> Result<Metrics> {
    if holdout.is_empty() {
        return Err(Error::parameter("no held-out entries to score"));
    }
    if (z_hat.nrows(), z_hat.ncols()) != (ground_truth.nrows(), ground_truth.ncols()) {
        return Err(Error::shape("estimate and truth differ in shape"));
    }
    let mut abs_sum = 0.0;
    let mut sq_sum = 0.0;
    let mut truth_abs = 0.0;
    for &(r, c) in holdout {
        if r >= z_hat.nrows() || c >= z_hat.ncols() {
            return Err(Error::shape(format!(
                "held-out index ({r}, {c}) is out of bounds"
            )));
        }
        let truth = ground_truth[(r, c)];
        if !truth.is_finite() {
            return Err(Error::parameter(format!(
                "ground truth at ({r}, {c}) is not finite"
            )));
        }
        let diff = truth - z_hat[(r, c)];
        abs_sum += diff.abs();
        sq_sum += diff * diff;
        truth_abs += truth.abs();
    }
    let n = holdout.len() as f64;
    Ok(Metrics {
        mae: abs_sum / n,
        rmse: (sq_sum / n).sqrt(),
        wmape: (truth_abs > 0.0).then_some(abs_sum / truth_abs),
    })
}
