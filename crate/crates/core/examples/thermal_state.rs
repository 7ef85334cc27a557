//! Canonical states from infinite temperature down to the ground space.

use xyz_dynamics::model::{build_hamiltonian, DecayLaw, ModelSpec};
use xyz_dynamics::operator::{DenseMatrix, C64};
use xyz_dynamics::thermal::{thermal_state, Beta};
use xyz_dynamics::Result;

fn main() -> Result<()> {
    // one spin in a field: H = Z/2
    let h = DenseMatrix::from_diagonal(&[C64::new(0.5, 0.0), C64::new(-0.5, 0.0)]);
    println!("single spin, H = Z/2");
    for beta in [0.0, 1.0, 2.0, 10.0] {
        let rho = thermal_state(&h, beta)?;
        println!("  beta {beta:>4}: populations {:.6} {:.6}", rho.matrix().get(0, 0).re, rho.matrix().get(1, 1).re);
    }

    let spec = ModelSpec {
        nsites: 6,
        gamma: 0.8,
        lambda: 1.0,
        delta: 0.8,
        coordination: 5,
        decay: DecayLaw::exponential(2.0)?,
    };
    let h = build_hamiltonian(&spec)?;
    println!("\nchain, N = {}", spec.nsites);
    for beta in [Beta::Finite(0.1), Beta::Finite(2.0), Beta::Finite(200.0), Beta::Ground] {
        let rho = thermal_state(&h, beta)?;
        let energy = rho.expectation(&h)?.re;
        println!("  {beta:?}: <H> = {energy:.6}, purity = {:.6}", rho.purity());
    }
    Ok(())
}
