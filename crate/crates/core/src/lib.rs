//! Cell-free massive-MIMO ISAC simulator with a proactive full-duplex monitor.
//!
//! The crate computes closed-form SINRs for the monitor, the UEs and the
//! sensing CPU, checks them against a per-trial Monte Carlo oracle, and runs
//! the monitoring-success / sensing-detection sweeps.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod channel;
pub mod cmat;
pub mod config;
pub mod error;
pub mod estimation;
pub mod geometry;
pub mod metrics;
pub mod power;
pub mod oracle;
pub mod rng;
pub mod runner;
pub mod scenario;
pub mod sinr;

pub use config::{default_config, SystemConfig};
pub use error::{Result, SimError};
pub use sinr::{FormVariant, Receiver, SinrBreakdown};
