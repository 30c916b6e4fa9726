//! Simulate a small circuit and compare gradient methods.
//!
//! ```text
//! cargo run --example statevector
//! ```

use dqas_rl::qsim::{self, Gate, Observable};

fn main() -> dqas_rl::Result<()> {
    let gates = vec![
        Gate::Ry(0, 0.4),
        Gate::Rx(1, -1.1),
        Gate::Cnot { control: 0, target: 1 },
        Gate::Rz(1, 0.7),
        Gate::Ry(1, 2.0),
        Gate::Cz(0, 1),
    ];
    let obs = Observable::z_on(2, &[0, 1])?;

    let psi = qsim::run_circuit(&gates, 2)?;
    println!("amplitudes:");
    for (i, a) in psi.amplitudes().iter().enumerate() {
        println!("  |{i:02b}>  {:+.6} {:+.6}i", a.re, a.im);
    }
    println!("norm^2 = {:.12}", psi.norm_sqr());

    let (value, adjoint) = qsim::adjoint_gradient(&gates, &obs)?;
    println!("<Z0 Z1> = {value:.6}");
    println!("gate  parameter-shift     adjoint");
    for (i, g) in gates.iter().enumerate() {
        if g.angle().is_some() {
            let ps = qsim::param_shift_grad(&gates, i, &obs)?;
            println!("{i:>4}  {ps:>15.9}  {:>10.9}", adjoint[i]);
        }
    }
    Ok(())
}
