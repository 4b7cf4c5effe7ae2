//! Synthetic ground-truth generator: a random geometric sensor graph with
//! low-rank periodic speed profiles, one diffusion pass of spatial
//! smoothing, and additive Gaussian noise.

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::graph::DegreeMode;
use crate::harness::dataset::{GraphData, GraphOptions, SpeedDataset};

/// Fixture constants of the generator; these are artifacts of the test
/// data, not tuned quantities.
const BASIS_COUNT: usize = 3;
const RADIUS_QUANTILE: f64 = 0.2;
const BASE_SPEED_LOW: f64 = 55.0;
const BASE_SPEED_HIGH: f64 = 75.0;
/// Every sensor swings through the day by at least this much...
const DIURNAL_AMPLITUDE_MIN: f64 = 12.0;
/// ...plus a half-normal sensor-specific extra with this deviation.
const DIURNAL_AMPLITUDE_SD: f64 = 8.0;
const WEEKLY_AMPLITUDE: f64 = 5.0;

#[derive(Debug, Clone, Copy)]
pub struct SyntheticSpec {
    pub locations: usize,
    pub intervals_per_day: usize,
    pub days: usize,
    /// Period of the weekly pattern, in days.
    pub period_days: usize,
    pub noise_sd: f64,
    pub seed: u64,
}

/// Generates a dataset plus its noiseless ground truth. The observed table
/// is fully observed; masking scenarios carve the missing structure out of
/// it afterwards.
pub fn generate_synthetic(spec: &SyntheticSpec) -> Result<(SpeedDataset, DMatrix<f64>)> {
    if spec.locations < 2 || spec.intervals_per_day < 2 || spec.days < 2 || spec.period_days < 2 {
        return Err(Error::parameter(
            "synthetic dimensions must all be at least 2",
        ));
    }
    if spec.noise_sd < 0.0 {
        return Err(Error::parameter("noise deviation must be nonnegative"));
    }
    let j = spec.locations;
    let rows = spec.intervals_per_day * spec.days;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);

    // Random geometric graph: points in the unit square, both directions of
    // an edge whenever the distance is below the fixture radius quantile.
    let points: Vec<(f64, f64)> = (0..j)
        .map(|_| (rng.random::<f64>(), rng.random::<f64>()))
        .collect();
    let dist = |a: usize, b: usize| -> f64 {
        let (xa, ya) = points[a];
        let (xb, yb) = points[b];
        ((xa - xb).powi(2) + (ya - yb).powi(2)).sqrt()
    };
    let mut offdiag: Vec<f64> = (0..j)
        .flat_map(|a| (0..j).filter(move |&b| b != a).map(move |b| (a, b)))
        .map(|(a, b)| dist(a, b))
        .collect();
    offdiag.sort_by(|x, y| x.partial_cmp(y).unwrap());
    let idx = ((offdiag.len() as f64 * RADIUS_QUANTILE).ceil() as usize).clamp(1, offdiag.len()) - 1;
    let radius = offdiag[idx];
    let mut edges = Vec::new();
    for a in 0..j {
        for b in 0..j {
            if a != b && dist(a, b) <= radius {
                edges.push((a, b, dist(a, b)));
            }
        }
    }

    // Smooth periodic basis over the global time axis: a constant, a
    // zero-mean daily harmonic pair, and a weekly harmonic.
    let i = spec.intervals_per_day as f64;
    let week = (spec.intervals_per_day * spec.period_days) as f64;
    let two_pi = 2.0 * std::f64::consts::PI;
    let basis = DMatrix::from_fn(rows, BASIS_COUNT, |t, b| {
        let t = t as f64;
        match b {
            0 => 1.0,
            1 => (two_pi * t / i).sin() + 0.4 * (2.0 * two_pi * t / i).cos(),
            _ => (two_pi * t / week).sin(),
        }
    });

    // Per-node mixing: a free-flow speed, a daily swing every sensor shares
    // in (half-normal extra on a common floor), and a weekly load.
    let coeff = DMatrix::from_fn(j, BASIS_COUNT, |_, b| match b {
        0 => BASE_SPEED_LOW + (BASE_SPEED_HIGH - BASE_SPEED_LOW) * rng.random::<f64>(),
        1 => {
            -(DIURNAL_AMPLITUDE_MIN + DIURNAL_AMPLITUDE_SD * rng.sample::<f64, _>(StandardNormal).abs())
        }
        _ => WEEKLY_AMPLITUDE * rng.sample::<f64, _>(StandardNormal),
    });

    let mut ground = &basis * coeff.transpose();

    // One forward diffusion pass couples neighboring sensors while keeping
    // the table rank at the basis count.
    let dataset_stub = SpeedDataset {
        values: DMatrix::zeros(1, j),
        intervals_per_day: 1,
        days: 1,
        location_ids: ids(j),
        graph: GraphData::Edges(edges.clone()),
    };
    let graph = dataset_stub.spatial_graph(&GraphOptions {
        sigma: None,
        delta: 1.0,
        degree_mode: DegreeMode::Out,
        radius_quantile: RADIUS_QUANTILE,
    })?;
    ground = graph
        .normalized_adjacency()
        .mul_dense_left_transposed(&ground);

    let values = if spec.noise_sd > 0.0 {
        DMatrix::from_fn(rows, j, |r, c| {
            ground[(r, c)] + spec.noise_sd * rng.sample::<f64, _>(StandardNormal)
        })
    } else {
        ground.clone()
    };

    let ds = SpeedDataset {
        values,
        intervals_per_day: spec.intervals_per_day,
        days: spec.days,
        location_ids: ids(j),
        graph: GraphData::Edges(edges),
    };
    Ok((ds, ground))
}

fn ids(j: usize) -> Vec<String> {
    (0..j).map(|c| format!("s{c:04}")).collect()
}
