//! Barrier-function based adaptive continuous higher-order sliding-mode
//! controllers for the perturbed chain of integrators
//!
//! ```text
//! z_i' = z_{i+1}   (i < r),      z_r' = gamma(t) u + phi(t)
//! ```
//!
//! with perturbations that need not be bounded. Two adaptive laws are
//! provided on top of a homogeneous Lyapunov/feedback pair `(V, u_r)`:
//!
//! * [`case1`]: `u = L(t, z) u_r(z)`, where `L` grows with time until
//!   `V` falls below half a prescribed decreasing bound `mu(t)`, then follows
//!   the barrier `mu / (mu - V)`.
//! * [`host`]: an adaptive higher-order super-twisting law
//!   `u = L1 u_r(z) + xi`, `xi' = -L2 d_r V(z)` whose gains stay bounded for
//!   Lipschitz perturbations.
//!
//! The crate is `no_std` (it needs `alloc`); the optional `std` feature only
//! swaps `libm` for the platform float intrinsics. File formats, the CLI and batch
//! execution live in the `bfsmc` companion crate.
#![cfg_attr(not(feature = "std"), no_std)]
#![deny(unsafe_code)]

extern crate alloc;
#[cfg(all(test, not(feature = "std")))]
extern crate std;

pub mod analysis;
pub mod case1;
pub mod error;
pub mod feedback;
pub mod hom;
pub mod host;
pub mod math;
pub mod plant;
pub mod quadrature;
pub mod sim;

pub use case1::{adaptive_gain, barrier_gain, control_case1, GrowthGain, MuSchedule, Phase};
pub use error::{Error, Result};
pub use feedback::{build_hong_pair, tune_gains, FeedbackPair, RhoBounds, ValidationReport};
pub use hom::{dilate, euler_vector, signed_power, HomogeneityParams};
pub use host::{control_host, gains_host, HostState};
pub use plant::{builtin_disturbance, rhs, Disturbance, DisturbanceClass, Envelope, Signal};
pub use sim::{run, step_rk4, Controller, ControllerKind, Scenario, Trajectory};
