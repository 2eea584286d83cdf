//! Quantized massive-MIMO uplink: Lloyd-Max ADC design, the additive
//! quantization noise model, MRC ergodic rates (Monte Carlo and closed
//! form), asymptotic limits and receiver energy efficiency.

pub mod channel;
pub mod error;
pub mod experiments;
pub mod format;
pub mod gaussian;
pub mod quantizer;
pub mod rate;
pub mod rng;
pub mod validation;

pub use channel::{CellModel, ChannelRealization, UserDrop};
pub use error::{Error, Result};
pub use experiments::{Overrides, PowerMode, ResultRow, ResultTable, ScenarioConfig};
pub use quantizer::{Bits, QuantizerSpec, RhoMode};
pub use rate::{MonteCarloEstimate, MonteCarloRates, RatePoint};
