//! Benchmark model builders: the small tutorial graphs, a discrete-time
//! control problem, DC optimal power flow over synthetic or tabulated
//! networks, and random convex block QPs.

mod dynamic;
mod examples;
mod power;
mod random;

use thiserror::Error;

use crate::model::ModelError;

pub use dynamic::{build_dynamic_model, DynamicModel, DynOptConfig};
pub use examples::{example_one, example_three, example_two, ExampleGraph};
pub use random::{random_block_qp, BlockQp, BlockQpConfig};
pub use power::{
    build_dcopf_model, generate_grid_network, read_network_csv, Bus, DcopfModel, Generator, Line, PowerNetwork,
    DEFAULT_BETA,
};

#[derive(Debug, Error)]
pub enum LibraryError {
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("invalid network: {0}")]
    Network(String),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error("csv error: {0}")]
    Csv(String),
}

#[cfg(test)]
mod tests;
