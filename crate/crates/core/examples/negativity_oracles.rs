//! Logarithmic negativity of textbook two-qubit states.

use xyz_dynamics::metrics::{log_negativity, negativity};
use xyz_dynamics::operator::C64;
use xyz_dynamics::thermal::DensityMatrix;
use xyz_dynamics::Result;

fn werner(p: f64) -> Result<DensityMatrix> {
    let h = std::f64::consts::FRAC_1_SQRT_2;
    let bell = DensityMatrix::pure(&[C64::new(h, 0.0), C64::default(), C64::default(), C64::new(h, 0.0)])?;
    let mixed = DensityMatrix::maximally_mixed(2);
    let mut m = bell.matrix().scale(C64::new(p, 0.0));
    m.axpy(C64::new(1.0 - p, 0.0), mixed.matrix());
    DensityMatrix::new(m, 2)
}

fn main() -> Result<()> {
    let product = DensityMatrix::pure(&[C64::new(1.0, 0.0), C64::default(), C64::default(), C64::default()])?;
    println!("product |00>      LN = {:.6}", log_negativity(&product)?);
    println!("maximally mixed   LN = {:.6}", log_negativity(&DensityMatrix::maximally_mixed(2))?);

    println!("\nWerner family: entangled iff p > 1/3, LN = log2((3p+1)/2)");
    for p in [0.0, 0.2, 1.0 / 3.0, 0.5, 0.8, 1.0] {
        let rho = werner(p)?;
        let expected = ((3.0 * p + 1.0) / 2.0).log2().max(0.0);
        println!(
            "  p = {p:.3}: N = {:.6}, LN = {:.6}, closed form {expected:.6}",
            negativity(&rho)?,
            log_negativity(&rho)?
        );
    }
    Ok(())
}
