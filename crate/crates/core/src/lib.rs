//! Closed and open entanglement dynamics of the variable-range XYZ spin chain.
//!
//! The pieces, in the order a run uses them:
//!
//! * [`model`] builds the chain Hamiltonian for a decay law and coordination number;
//! * [`thermal`] prepares canonical states;
//! * [`closed`] evolves a thermal state after a field quench, exactly;
//! * [`open`] integrates the master equation with a bath on some sites;
//! * [`metrics`] turns reduced two-site states into logarithmic negativity and
//!   extracts freezing terminals;
//! * [`sweep`] runs parameter grids from a config file and writes CSV.
//!
//! Sites are numbered from 1; site 1 is the most significant qubit of a basis
//! index and `|0>` is spin up along z.

pub mod closed;
pub mod error;
pub mod metrics;
pub mod model;
pub mod open;
pub mod operator;
pub mod sweep;
pub mod thermal;

pub use closed::{run_quench, QuenchEvolution, QuenchSpec, TimeGrid};
pub use error::{Error, Result};
pub use metrics::{detect_freezing, log_negativity, EntanglementSeries, FreezingConfig, FreezingReport, SitePair};
pub use model::{build_hamiltonian, DecayKind, DecayLaw, ModelSpec};
pub use open::{rk4_integrate, BathSpec, BosonicBathSpec, NoiseAxis, OpenRunSpec, RepetitiveBathSpec};
pub use operator::{DenseMatrix, SiteIndex, C64};
pub use sweep::{run_sweep, SweepConfig};
pub use thermal::{thermal_state, Beta, DensityMatrix};
