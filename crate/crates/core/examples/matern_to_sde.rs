//! Converts the case-study Matérn kernel into its state-space form and checks
//! that the SDE reproduces the kernel.
//!
//! cargo run --example matern_to_sde

use scenario_lfm::gp_ssm::{autocovariance, discretize_exact, matern_to_sde};
use scenario_lfm::kernels::{matern_eval, KernelSpec, Smoothness};

fn main() -> scenario_lfm::Result<()> {
    let spec = KernelSpec::new(4.0, 4.0, Smoothness::FiveHalves)?;
    let sde = matern_to_sde(&spec)?;
    println!("A = {:.6}", sde.a);
    println!("q = {:.6}", sde.q);
    println!("Pinf = {:.6}", sde.pinf);

    println!("{:>8} {:>14} {:>14}", "tau", "kernel", "C e^(A tau) Pinf C'");
    for i in 0..=10 {
        let tau = i as f64 * 0.5 * spec.ell;
        println!("{tau:>8.2} {:>14.10} {:>14.10}", matern_eval(&spec, tau), autocovariance(&sde, tau));
    }

    let disc = discretize_exact(&sde, 0.2)?;
    println!("Ad (dt = 0.2) = {:.6}", disc.ad);
    println!("Qd (dt = 0.2) = {:.6e}", disc.qd);
    Ok(())
}
