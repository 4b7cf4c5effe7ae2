//! Masking scenarios: structured missing locations and time intervals plus
//! random element-wise missing data.

use rand::seq::index::sample;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::harness::dataset::SpeedDataset;
use crate::solver::{Mask, ObservationSet};

/// A masking scenario. Rates are fractions in `[0, 1)`; element-wise
/// masking applies to the entries that survive the structured masks.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MaskScenario {
    /// Fraction of locations (columns) hidden entirely.
    pub sm_rate: f64,
    /// Fraction of time intervals (rows) hidden entirely.
    pub tm_rate: f64,
    /// Fraction of surviving observed entries hidden at random.
    pub em_rate: f64,
    pub seed: u64,
}

impl MaskScenario {
    pub fn new(sm_rate: f64, tm_rate: f64, em_rate: f64, seed: u64) -> Self {
        MaskScenario {
            sm_rate,
            tm_rate,
            em_rate,
            seed,
        }
    }

    pub fn label(&self) -> String {
        format!("SM{:.2}-TM{:.2}-EM{:.2}", self.sm_rate, self.tm_rate, self.em_rate)
    }

    fn validate(&self) -> Result<()> {
        for (name, rate) in [
            ("sm", self.sm_rate),
            ("tm", self.tm_rate),
            ("em", self.em_rate),
        ] {
            if !(0.0..1.0).contains(&rate) {
                return Err(Error::parameter(format!(
                    "{name} rate {rate} must lie in [0, 1)"
                )));
            }
        }
        Ok(())
    }
}

/// Half-up rounding used for every masked-count computation.
pub fn round_half_up(x: f64) -> usize {
    (x + 0.5).floor() as usize
}

/// Applies a scenario to a dataset. Returns the solver-facing observations
/// (mask, values with unobserved entries zeroed, held-out index set) along
/// with the ground truth table the held-out entries are scored against.
///
/// Hidden column, row and element sets are sampled uniformly without
/// replacement from three independent streams of the scenario seed, so a
/// scenario is reproducible bit for bit.
pub fn apply_scenario(
    ds: &SpeedDataset,
    sc: &MaskScenario,
) -> Result<(ObservationSet, DMatrix<f64>)> {
    sc.validate()?;
    let (rows, cols) = (ds.time_points(), ds.locations());
    let hidden_cols = round_half_up(sc.sm_rate * cols as f64);
    let hidden_rows = round_half_up(sc.tm_rate * rows as f64);
    if hidden_cols >= cols {
        return Err(Error::parameter(format!(
            "scenario hides all {cols} locations"
        )));
    }
    if hidden_rows >= rows {
        return Err(Error::parameter(format!(
            "scenario hides all {rows} time intervals"
        )));
    }

    let mut col_rng = ChaCha8Rng::seed_from_u64(sc.seed);
    col_rng.set_stream(1);
    let mut row_rng = ChaCha8Rng::seed_from_u64(sc.seed);
    row_rng.set_stream(2);
    let mut elem_rng = ChaCha8Rng::seed_from_u64(sc.seed);
    elem_rng.set_stream(3);

    let mut col_hidden = vec![false; cols];
    for idx in sample(&mut col_rng, cols, hidden_cols) {
        col_hidden[idx] = true;
    }
    let mut row_hidden = vec![false; rows];
    for idx in sample(&mut row_rng, rows, hidden_rows) {
        row_hidden[idx] = true;
    }

    let observed = ds.observation_mask();
    // Observed entries that survive the structured masks, in row-major
    // order, are the candidate pool for element-wise masking.
    let survivors: Vec<(usize, usize)> = observed
        .positions()
        .filter(|&(r, c)| !row_hidden[r] && !col_hidden[c])
        .collect();
    let hidden_elems = round_half_up(sc.em_rate * survivors.len() as f64);
    let mut elem_hidden = vec![false; survivors.len()];
    for idx in sample(&mut elem_rng, survivors.len(), hidden_elems) {
        elem_hidden[idx] = true;
    }

    let mut mask = Mask::new(rows, cols);
    let mut holdout = Vec::new();
    let mut survivor_idx = 0usize;
    for (r, c) in observed.positions() {
        let structurally_hidden = row_hidden[r] || col_hidden[c];
        let element_hidden = if structurally_hidden {
            false
        } else {
            let h = elem_hidden[survivor_idx];
            survivor_idx += 1;
            h
        };
        if structurally_hidden || element_hidden {
            holdout.push((r, c));
        } else {
            mask.set(r, c, true);
        }
    }

    let mut values = DMatrix::<f64>::zeros(rows, cols);
    for (r, c) in mask.positions() {
        values[(r, c)] = ds.values[(r, c)];
    }
    let obs = ObservationSet::new(values, mask, holdout)?;
    Ok((obs, ds.values.clone()))
}
