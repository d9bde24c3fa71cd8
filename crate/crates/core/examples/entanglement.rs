//! Logarithmic negativity of reference states.
//!
//! cargo run --example entanglement

use optomech::fock::{DensityMatrix, FockSpace, Mode, C64};
use optomech::observe::{log_negativity, log_negativity_on, percent_of_ln2};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn main() -> optomech::Result<()> {
    let space = FockSpace::linear();
    let s = std::f64::consts::FRAC_1_SQRT_2;
    let z = C64::new(0.0, 0.0);
    // amplitudes in the |n_c n_m> order 00, 01, 10, 11
    let bell = DensityMatrix::pure(space, &[z, C64::new(s, 0.0), C64::new(0.0, s), z])?;
    let product = space.basis_state(1, 0)?;
    let classical = DensityMatrix::mixture(&[(0.5, &space.basis_state(1, 0)?), (0.5, &space.basis_state(0, 1)?)])?;

    for (name, rho) in [("Bell (|10> + i|01>)/sqrt2", &bell), ("product |10>", &product), ("classical mixture", &classical)] {
        let en = log_negativity(rho)?;
        println!("{name:<28} E_N = {en:.12}  ({:.2}% of ln2)", percent_of_ln2(en));
    }

    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let big = FockSpace::new(4, 3)?;
    let rho = DensityMatrix::random(big, &mut rng);
    println!(
        "\nrandom 4x3 state: transposing the cavity gives {:.12}, the mechanics {:.12}",
        log_negativity_on(&rho, Mode::Cavity)?,
        log_negativity_on(&rho, Mode::Mech)?
    );
    Ok(())
}
