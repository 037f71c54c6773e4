//! Game-theoretic radio resource management for NOMA networks.
//!
//! Four allocation games share one SIC rate model:
//!
//! | scheme  | downlink                                  | uplink                                 |
//! |---------|-------------------------------------------|----------------------------------------|
//! | PD-NOMA | [`coalition`]: sensor-anchored grouping   | [`power`]: best-response power control |
//! | CD-NOMA | [`matching`]: many-to-many swap matching  | [`contention`]: contention-window game |
//!
//! [`scenario`] draws reproducible channels, [`sic`] turns powers and gains
//! into SINRs and rates, [`oracle`] holds brute-force references and
//! [`harness`] runs configured experiments to CSV.

pub mod coalition;
pub mod contention;
pub mod error;
pub mod harness;
pub mod matching;
pub mod oracle;
pub mod power;
pub mod scenario;
pub mod sic;

pub use error::{NomaError, Result};
pub use scenario::{generate_channels, sic_order, ChannelState, NetworkScenario, RngSeed};
