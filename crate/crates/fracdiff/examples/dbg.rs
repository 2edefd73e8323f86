use fracdiff::contour::*;
use num_complex::Complex64;
use std::f64::consts::PI;
fn main() {
    let alpha = 0.5; let lambda = 4.0;
    let f = |p: Complex64| Ok(p.powf(alpha - 1.0) / (lambda + p.powf(alpha)));
    for theta in [0.6 * PI, 0.75 * PI, 0.9 * PI] {
        for delta_mode in [DeltaMode::Auto, DeltaMode::Fixed(0.3)] {
            let policy = ContourPolicy { theta, delta_mode, ..ContourPolicy::default() };
            let spec = policy.spec_for(1.0, 0.0).unwrap();
            let v = spec.integrate_scalar(1.0, &f).unwrap();
            println!("theta={:.2}pi mode={:?} R={:.2} nodes={} -> {:.15e} (im {:.2e})",
                theta/PI, delta_mode, spec.radius, spec.nodes.len(), v.re, v.im);
        }
    }
}
