//! Finite-time maximal Lyapunov exponent via tangent-map integration with
//! periodic renormalization.

use nalgebra::SVector;

use crate::canonical::{hessian_hamiltonian_nondim, vector_field4, CanonicalState, LevelSpec};
use crate::error::Result;
use crate::ode::{Dop853, IntegratorConfig};

type State8 = SVector<f64, 8>;

/// Integrates state and tangent vector jointly; the log of the tangent
/// growth is accumulated at fixed renormalization intervals and divided by
/// the elapsed time. Integrable orbits decay like log(t)/t; chaotic ones
/// level off at the positive exponent.
pub fn lyapunov_indicator(y0: &CanonicalState, spec: &LevelSpec, t_end: f64, cfg: &IntegratorConfig) -> Result<f64> {
    let dp = spec.params;
    let field = move |_t: f64, z: &State8| -> Result<State8> {
        let state = CanonicalState::new(z[0], z[1], z[2], z[3]);
        let f = vector_field4(&state, &dp)?;
        let hess = hessian_hamiltonian_nondim(&state, &dp)?;
        // ẇ = J · Hess(H) · w with J the canonical symplectic matrix:
        // (δθ̇, δψ̇) = rows p̄ of Hess·w, (δṗ)s = −rows q.
        let w = SVector::<f64, 4>::new(z[4], z[5], z[6], z[7]);
        let hw = hess * w;
        let mut out = State8::zeros();
        out.fixed_rows_mut::<4>(0).copy_from(&f);
        out[4] = hw[2];
        out[5] = hw[3];
        out[6] = -hw[0];
        out[7] = -hw[1];
        Ok(out)
    };

    let mut z0 = State8::zeros();
    z0.fixed_rows_mut::<4>(0).copy_from(&y0.to_vector());
    let w0 = SVector::<f64, 4>::new(0.5, 0.5, 0.5, 0.5);
    z0.fixed_rows_mut::<4>(4).copy_from(&w0);

    let mut cfg_run = *cfg;
    cfg_run.dense_output = false;
    let mut stepper = Dop853::new(field, 0.0, z0, &cfg_run)?;

    let renorm_interval = 20.0;
    let mut log_sum = 0.0;
    let mut t = 0.0;
    while t < t_end {
        let t_next = (t + renorm_interval).min(t_end);
        stepper.integrate_to(t_next)?;
        let mut z = *stepper.y();
        let norm = z.fixed_rows::<4>(4).norm();
        log_sum += norm.ln();
        let scaled = z.fixed_rows::<4>(4) / norm;
        z.fixed_rows_mut::<4>(4).copy_from(&scaled);
        stepper.replace_state(z)?;
        t = t_next;
    }
    Ok(log_sum / t_end)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::canonical::complete_state_on_level;
    use crate::params::DimensionlessParameters;

    #[test]
    fn integrable_indicator_decays_with_horizon() {
        let dp = DimensionlessParameters::new(1.7, 3.0, 3.0, 0.0, 0.4).unwrap();
        let spec = LevelSpec { h: 0.9, params: dp };
        let y0 = complete_state_on_level(0.9, std::f64::consts::FRAC_PI_2, 0.3, &spec).unwrap();
        let cfg = IntegratorConfig::with_tolerances(1e-10, 1e-12);
        let short = lyapunov_indicator(&y0, &spec, 1_000.0, &cfg).unwrap();
        let long = lyapunov_indicator(&y0, &spec, 2_000.0, &cfg).unwrap();
        assert!(long <= 0.75 * short, "short {short:.3e}, long {long:.3e}");
    }
}
