//! Multicolor urns with reducible stochastic replacement matrices.
//!
//! * [`urn`]: dynamics and seeded trajectory simulation.
//! * [`spectral`]: family detection and eigen/Jordan data.
//! * [`scaling`]: normalization sequences and predicted limit laws.
//! * [`oracle`]: exact small-`n` enumeration and martingale identity checks.
//! * [`stats`]: Kolmogorov–Smirnov machinery.
//! * [`verify`]: Monte Carlo ensembles checked against the predictions.

// `!(x > 0.0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod oracle;
pub mod scaling;
pub mod spectral;
pub mod stats;
pub mod urn;
pub mod verify;

pub use scaling::{euler_ratio, pi_n, predict, LawPrediction, LimitKind, LimitVariable, Normalization};
pub use spectral::{classify, jordan_basis, Family, StructureClass};
pub use urn::{simulate, ReplacementSpec, SimulationRequest, Trajectory, UrnState};
