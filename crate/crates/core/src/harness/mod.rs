//! Sweeps over (rule, budget, seed), their summaries, and table output.

mod config;
mod summary;
mod sweep;
mod table;

pub use config::{
    BudgetGrid, DataSource, ExperimentConfig, GaussianSetup, L2Name, L2Strength, OutputSection, PipelineConfig,
    SeedList, SweepConfig, SweepSection,
};
pub use summary::{budget_to_reach, half_target_budget, saving, Direction};
pub use sweep::{
    cell_seed, dataset_metric_names, prepare_split, run_dataset_sweep, run_gaussian_sweep, worker_pool, CellResult,
    CellSummary, LoadedData, PreparedSplit, SweepResult,
};
pub use table::{emit, read_csv_table, Format, Table, Value};
