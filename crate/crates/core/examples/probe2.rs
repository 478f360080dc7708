use nalgebra::Vector3;
use rodchaos_core::canonical::{canonical_to_noncanonical, CanonicalState};
use rodchaos_core::dynamics::symmetric_residuals;
use rodchaos_core::noncanonical::{vector_field9, BodyState9, State9};
use rodchaos_core::ode::{refine_root, Dop853, IntegratorConfig};
use rodchaos_core::params::DimensionlessParameters;

fn main() {
    let dp = DimensionlessParameters::new(1.7, 1.0, 1.0, 0.001, 0.002).unwrap();
    let gauge = dp.standard_gauge();
    let m = dp.m;
    let theta0 = 3e-4f64;

    let launch = |psi0: f64| -> Option<State9> {
        let m2 = dp.m * dp.m;
        let (st, ct) = theta0.sin_cos();
        let sh = (0.5 * theta0).sin();
        let a = (2.0 * sh * sh) / st;
        let deficit = (2.0 * sh * sh + dp.gamma * st * st / 2.0) / m2 - 0.5 * a * a;
        if deficit < 0.0 {
            return None;
        }
        let state = CanonicalState::new(theta0, psi0, (2.0 * deficit).sqrt(), 1.0);
        canonical_to_noncanonical(&state, 0.0, &dp, gauge.c1, gauge.c2, gauge.lambda)
            .ok()
            .map(|b| b.to_vector())
    };
    let cfg = IntegratorConfig { rtol: 5e-14, atol: 1e-16, ..Default::default() };
    let field = |_t: f64, y: &State9| Ok(vector_field9(&BodyState9::from_vector(y), &gauge).to_vector() / m);

    let hits = |x0: &State9, kmax: usize| -> Vec<(f64, f64)> {
        let mut stepper = Dop853::new(field, 0.0, *x0, &cfg).unwrap();
        let mut out = Vec::new();
        while out.len() < kmax && stepper.t() < 150.0 {
            if !stepper.advance(150.0).unwrap_or(false) {
                break;
            }
            let (ta, tb) = (stepper.t_old(), stepper.t());
            let mut pt = ta;
            let mut pg = symmetric_residuals(stepper.y_old()).0;
            for i in 1..=8 {
                let ti = if i == 8 { tb } else { ta + (tb - ta) * i as f64 / 8.0 };
                let yi = if i == 8 { *stepper.y() } else { stepper.interpolate(ti) };
                let gi = symmetric_residuals(&yi).0;
                if pg.signum() != gi.signum() && pg != 0.0 {
                    let ts = refine_root(|t| symmetric_residuals(&stepper.interpolate(t)).0, pt, ti, pg, gi, 1e-15, 1e-13).unwrap();
                    let ys = stepper.interpolate(ts);
                    out.push((ts, symmetric_residuals(&ys).1));
                }
                pt = ti;
                pg = gi;
            }
        }
        out
    };

    println!("psi0      F1            F2            F3");
    for i in 0..24 {
        let psi0 = 2.0 * std::f64::consts::PI * i as f64 / 24.0;
        if let Some(x0) = launch(psi0) {
            let h = hits(&x0, 3);
            let f = |k: usize| h.get(k - 1).map(|x| format!("{:+.6e}", x.1)).unwrap_or("----".into());
            println!("{psi0:5.3}  {}  {}  {}", f(1), f(2), f(3));
        }
    }
}
