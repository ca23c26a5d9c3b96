//! Library side of the `privspi` command: image I/O, configuration layering
//! and the experiment runner. The binary only parses arguments.

pub mod error;
pub mod experiment;
pub mod imageio;
pub mod settings;

pub use error::{CliError, CliResult, Failure};
pub use experiment::{run_experiment, ExperimentSpec, Method, Outcome};
pub use imageio::{load_image, save_image};
pub use settings::{resolve_config, Scale};
