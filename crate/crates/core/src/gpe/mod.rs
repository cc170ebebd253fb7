//! Two-component Gross-Pitaevskii dynamics: trap potentials, the real-time
//! split-step propagator, imaginary-time ground states and observables.

pub mod ground;
pub mod observables;
pub mod propagator;
pub mod trap;

pub use ground::{ground_state, ConvergenceRecord, GroundState, GroundStateOptions};
pub use observables::{center_of_mass, center_of_mass_z, energy, overlap};
pub use propagator::{evolve_step, stability_limit, EvolutionConfig, Propagator};
pub use trap::{add_gradient, TrapConfig, TrapModel};
