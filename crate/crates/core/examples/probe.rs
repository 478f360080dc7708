// Scratch numerics probe (not part of the deliverable surface).
use rodchaos_core::homoclinic::HomoclinicOrbit;
use rodchaos_core::quad;

// H0 and H1/omega0 as black boxes for the finite-difference bracket.
fn h0(theta: f64, p_theta: f64, p_psi: f64, m: f64, gamma: f64) -> f64 {
    let (st, ct) = theta.sin_cos();
    let a = (p_psi - ct) / st;
    0.5 * p_theta * p_theta + 0.5 * a * a + ct / (m * m) + gamma * ct * ct / (2.0 * m * m)
}

fn h1_over_omega(theta: f64, psi: f64, p_psi: f64, m: f64, gamma: f64, a: f64, b: f64) -> f64 {
    let (st, ct) = theta.sin_cos();
    let h1 = (gamma * ct + 1.0) * st * psi.cos() * (a - 2.0 * b * p_psi).sqrt() / (m * m);
    h1 * (1.0 + ct)
}

fn main() {
    let m = 1.7;
    let (a, b) = (1.0, 0.25);
    println!("gamma      J_plus          J_minus         J_P             M_fd(pi/2)/sqrt");
    for gamma in [1.0, 1.2, 1.4, 1.6, 1.8, 1.9, 2.0] {
        let orb = HomoclinicOrbit::new(m, gamma).unwrap();
        let t_max = 80.0;
        let tol = 1e-11;
        let table = orb.psi_bar_table(t_max + 1.0);

        let with_bracket = |plus: bool| -> f64 {
            2.0 * quad::integrate(
                |t| {
                    let (theta, p_theta) = orb.eval(t);
                    let psi_bar = table.eval(t);
                    let (st, ct) = theta.sin_cos();
                    let cos2t = ct * ct - st * st;
                    let ba = (1.0 + ct) * (ct + gamma * cos2t);
                    let bb = st * st * (1.0 + gamma * ct);
                    let bracket = if plus { ba + bb } else { ba - bb };
                    p_theta * psi_bar.sin() * bracket
                },
                0.0,
                t_max,
                tol,
            )
            .unwrap()
        };
        let j_plus = with_bracket(true);
        let j_minus = with_bracket(false);

        // J_P = ∫ (γcosθ+1) sinθ cosψ̄ dt
        let j_p = 2.0
            * quad::integrate(
                |t| {
                    let (theta, _) = orb.eval(t);
                    let (st, ct) = theta.sin_cos();
                    (gamma * ct + 1.0) * st * table.eval(t).cos()
                },
                0.0,
                t_max,
                tol,
            )
            .unwrap();

        // Fully finite-difference M(π/2): ∫ {H0, H1/ω0}_(θ,pθ) dt with
        // ψ = ψ̄ + π/2, p̄ψ = 1, partials by central differences.
        let psi0 = std::f64::consts::FRAC_PI_2;
        let h = 1e-6;
        let m_fd = quad::integrate(
            |t| {
                let (theta, p_theta) = orb.eval(t);
                let psi = table.eval(t) + psi0;
                let dh0_dth = (h0(theta + h, p_theta, 1.0, m, gamma) - h0(theta - h, p_theta, 1.0, m, gamma)) / (2.0 * h);
                let dh0_dp = (h0(theta, p_theta + h, 1.0, m, gamma) - h0(theta, p_theta - h, 1.0, m, gamma)) / (2.0 * h);
                let df_dth = (h1_over_omega(theta + h, psi, 1.0, m, gamma, a, b)
                    - h1_over_omega(theta - h, psi, 1.0, m, gamma, a, b))
                    / (2.0 * h);
                let df_dp = 0.0;
                dh0_dth * df_dp - dh0_dp * df_dth
            },
            -t_max,
            t_max,
            3e-8,
        )
        .unwrap();

        println!(
            "{gamma:4.2}  {j_plus:14.8e}  {j_minus:14.8e}  {j_p:14.8e}  {:14.8e}",
            m_fd / (a - 2.0 * b).sqrt()
        );
    }
}
