//! Schrödinger-equation simulator for heralded quantum Zeno phase gates.
//!
//! Two photons in coupled waveguides `a`, `b` interact with two three-level
//! atoms (and optionally leak into scattering modes `c`, `d`). The crate
//! builds the two-excitation basis, integrates the time-dependent dynamics,
//! extracts gate phases, fidelities and herald probabilities, and runs
//! declarative parameter sweeps.
//!
//! Operator algebra, pulse envelopes and the integrator are generic over
//! [`Real`]; gate analysis and sweeps run in `f64`. The aliases below fix the
//! scalar to `f64`.

pub mod calibrate;
pub mod error;
pub mod evolve;
pub mod gate;
pub mod hamiltonian;
pub mod hilbert;
pub mod num;
pub mod pulses;
pub mod sweeps;

pub use calibrate::{tune_transfer, Calibration, CalibrationSearch};
pub use error::{Error, Result};
pub use evolve::{IntegratorConfig, Method};
pub use gate::{run_gate, simulate, GateMetrics, GateRun, HeraldMode};
pub use hamiltonian::{Frame, HamiltonianModel, PhysicsParams};
pub use hilbert::{build_basis, BasisSet, BasisState};
pub use num::Real;
pub use pulses::RampShape;
pub use sweeps::{run_sweep, Preset, SweepConfig, SweepRow};

pub type SparseOperator = hilbert::SparseOperator<f64>;
pub type PulseProfile = pulses::PulseProfile<f64>;
pub type Schedule = pulses::Schedule<f64>;
pub type StateVector = evolve::StateVector<f64>;
pub type Evolution = evolve::Evolution<f64>;
