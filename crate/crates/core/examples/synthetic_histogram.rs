//! Writes a noiseless coincidence histogram from the bunching model.
//!
//! ```text
//! cargo run -p subradiance-core --example synthetic_histogram > histogram.csv
//! ```

use subradiance::fitting::{eval_g2_model, FitParams};

fn main() {
    let truth = FitParams::new(0.85, 2.4, 400.0, 80.0);
    let counts_per_bin = 5000.0;
    println!("# A = {}, B = {}, T_a = {} ps, T_b = {} ps", truth.a, truth.b, truth.t_a, truth.t_b);
    println!("delay_ps,counts");
    for k in -300..=300 {
        let tau = 20.0 * f64::from(k);
        println!("{tau},{:e}", counts_per_bin * eval_g2_model(&truth, tau));
    }
}
