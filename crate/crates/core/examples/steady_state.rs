//! Steady state at the default operating point in both biases, compared with
//! the Markovian rate model.

use dark_diode::dynamics::{evolve_to_steady, rectification};
use dark_diode::{analytic_transport, Bias, IntegratorConfig, ModelParams};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let params = ModelParams::default();
    let analytic = analytic_transport(&params)?;
    let mut currents = Vec::new();
    for bias in [Bias::Forward, Bias::Reverse] {
        let p = params.with_bias(bias);
        let config = IntegratorConfig::for_params(&p).with_early_stop(true);
        let start = std::time::Instant::now();
        let (ss, _) = evolve_to_steady(&p, &config)?;
        println!(
            "{bias}: J_L = {:.6e}  J_R = {:.6e}  W/dw = {:.3e}  P = {:.5?}  t_end = {:.0}  converged = {}  ({:.1?})",
            ss.current_left,
            ss.current_right,
            ss.work_over_domega,
            ss.populations,
            ss.t_end,
            ss.converged,
            start.elapsed()
        );
        currents.push(ss.bias_current());
    }
    println!(
        "R = {:.3} (rate model {:.3}, J_f {:.6e}, J_r {:.6e})",
        rectification(currents[0], currents[1]).value(),
        analytic.rectification,
        analytic.current_forward,
        analytic.current_reverse
    );
    Ok(())
}
