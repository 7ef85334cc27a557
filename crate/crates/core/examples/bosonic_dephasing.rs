//! Time-dependent dephasing from a bosonic bath.
//!
//! `cargo run --release --example bosonic_dephasing -- [ohmicity] [cutoff]`
//!
//! Prints the rate function, then follows the nearest-neighbour
//! entanglement of a six-site chain with dephasing on sites 1-3.

use xyz_dynamics::closed::TimeGrid;
use xyz_dynamics::model::{DecayLaw, ModelSpec};
use xyz_dynamics::open::{dephasing_rate, rk4_integrate, BathSpec, BosonicBathSpec, OpenRunSpec};
use xyz_dynamics::operator::SiteIndex;
use xyz_dynamics::Result;

fn main() -> Result<()> {
    let s: f64 = std::env::args().nth(1).and_then(|a| a.parse().ok()).unwrap_or(0.5);
    let cutoff: f64 = std::env::args().nth(2).and_then(|a| a.parse().ok()).unwrap_or(1.0);

    println!("gamma(t) for s = {s}, cutoff = {cutoff}");
    for t in [0.0, 0.5, 1.0, 2.0, 5.0, 10.0, 20.0] {
        println!("  t = {t:>4}: {:+.6}", dephasing_rate(t, s, cutoff)?);
    }

    let pair = (SiteIndex::new(3)?, SiteIndex::new(4)?);
    let model = ModelSpec { nsites: 6, gamma: 0.8, lambda: 2.4, delta: 0.2, coordination: 5, decay: DecayLaw::exponential(2.0)? };
    let bath = BathSpec::Bosonic(BosonicBathSpec { ohmicity: s, cutoff, ..Default::default() });
    let grid = TimeGrid::new(0.0, 10.0, 0.01)?;
    let run = rk4_integrate(&OpenRunSpec::new(model, bath, grid, vec![pair]))?;

    println!("\nLN(3,4) with dephasing on sites 1-3:");
    let values = run.series[0].values();
    for k in (0..grid.len()).step_by(100) {
        println!("  t = {:>4.1}: {:.6}", grid.time(k), values[k]);
    }
    println!("drift corrections {}, smallest eigenvalue {:.2e}", run.corrections, run.min_eigenvalue);
    Ok(())
}
