//! The streamable acoustic model and its delay accounting.

pub mod config;
pub mod delay;
pub mod frames;
pub mod model;
pub mod sample;
pub mod stream;

pub use config::{AcousticConfig, ACOUSTIC_KEYS};
pub use delay::{delay_accounting, predict_first_emission, DelayReport};
pub use frames::FrameFile;
pub use model::{config_with_overrides, token_durations, AcousticModel, AcousticOutput};
pub use sample::random_pnp;
pub use stream::AcousticStream;

#[cfg(test)]
mod tests;
