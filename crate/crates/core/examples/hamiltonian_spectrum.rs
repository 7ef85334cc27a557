//! Couplings and low-lying spectrum of the chain for both decay laws.
//!
//! `cargo run --release --example hamiltonian_spectrum -- [nsites]`

use xyz_dynamics::model::{build_hamiltonian, coupling, parity_diagonal, DecayLaw, ModelSpec};
use xyz_dynamics::operator::{herm_eigenvalues, SiteIndex};
use xyz_dynamics::Result;

fn main() -> Result<()> {
    let nsites: usize = std::env::args().nth(1).and_then(|a| a.parse().ok()).unwrap_or(6);
    let s = |i| SiteIndex::new(i);

    for decay in [DecayLaw::exponential(2.0)?, DecayLaw::power(1.0)?] {
        println!("{} decay, rate {}", decay.kind().label(), decay.rate());
        for z in [1, 3, nsites - 1] {
            let row: Vec<String> = (2..=nsites)
                .map(|j| Ok(format!("{:.4}", coupling(&decay, s(1)?, s(j)?, z)?)))
                .collect::<Result<_>>()?;
            println!("  Z={z}  f(1,j) = [{}]", row.join(", "));
        }

        let spec = ModelSpec { nsites, gamma: 0.8, lambda: 1.0, delta: 0.8, coordination: nsites - 1, decay };
        let h = build_hamiltonian(&spec)?;
        let energies = herm_eigenvalues(&h)?;
        let low: Vec<String> = energies.iter().take(4).map(|e| format!("{e:.6}")).collect();
        println!("  lowest energies: {}", low.join(", "));

        // H conserves Z-parity, so each parity sector has its own spectrum
        let parity = parity_diagonal(nsites);
        let even = parity.iter().filter(|p| **p > 0.0).count();
        println!("  dim {} = {} even + {} odd\n", h.dim(), even, h.dim() - even);
    }
    Ok(())
}
