//! Experiment harness: ingestion, masking scenarios, synthetic fixtures and
//! parameter sweeps.

pub mod dataset;
pub mod scenario;
pub mod sweep;
pub mod synthetic;

pub use dataset::{load_dataset, write_edge_list, write_value_table, GraphData, GraphOptions, SpeedDataset};
pub use scenario::{apply_scenario, round_half_up, MaskScenario};
pub use sweep::{run_sweep, SweepReport, SweepRow, SweepSummary};
pub use synthetic::{generate_synthetic, SyntheticSpec};
