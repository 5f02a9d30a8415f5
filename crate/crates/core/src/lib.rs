//! Simulation of an entangling gate between two spin qubits `Q` and `Q'`
//! mediated by an optically driven control spin `C`.
//!
//! The control's excited orbital switches on an exchange coupling to both
//! qubits. Two control strategies are modelled:
//!
//! * a pulsed gate ([`dynamic`]): π pulse, wait one revival time, π pulse;
//! * an adiabatic gate ([`adiabatic`]): a slow Gaussian pulse under which the
//!   spin states follow the dressed eigenstates.
//!
//! [`entangling`] measures the resulting two-qubit gates and [`open_system`]
//! adds spontaneous decay of the excited orbital.
//!
//! Units: ħ = 1, energies and rates in ps⁻¹, times in ps. Tensor order is
//! `orbital ⊗ Q ⊗ C ⊗ Q'`, see [`basis`].

pub mod adiabatic;
pub mod basis;
pub mod density;
pub mod dynamic;
pub mod entangling;
pub mod error;
pub mod gate;
pub mod hamiltonian;
pub mod integrate;
pub mod linalg;
pub mod open_system;
pub mod params;
pub mod pulse;

pub use num_complex::Complex64 as C64;

/// Dense complex operator.
pub type Operator = nalgebra::DMatrix<C64>;

pub use adiabatic::{
    adiabatic_gate, cphase_report, eigenspectrum, extract_logical_gate, find_cphase_tau, interference_trace,
    max_entangling_detuning, propagate_pulse, CphaseReport, CphaseTau, EigenCurves, InterferenceTrace,
};
pub use basis::{pauli_on, Axis, BasisIndex, Orbital, Site};
pub use density::{haar_product_pair, partial_trace, purity, DensityMatrix, QuantumState, Subsystem};
pub use dynamic::{
    dynamic_phases, dynamic_unitary, propagate_excited, revival_time, simulate_pulsed_gate, DynamicPhases,
};
pub use entangling::{
    entangling_power_closed, entangling_power_mc, entangling_power_projected, linear_entropy, EntanglingPowerEstimate,
};
pub use error::{Error, Result};
pub use gate::LogicalGate;
pub use hamiltonian::{build_excited, build_full, rotate_h1_to_ate, subspace_blocks, SubspaceBlocks};
pub use open_system::{decoherence_study, evolve_master, lindblad_rhs, DecayModel, FiguresOfMerit, GateSpec};
pub use params::SystemParams;
pub use pulse::{adiabaticity_metric, PulseProfile, PulseShape};
