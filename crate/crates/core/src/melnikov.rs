//! The Mel'nikov integral of the magnetically perturbed extensible rod:
//! integrand on the homoclinic orbit, truncated adaptive evaluation,
//! ψ₀-curves and the amplitude zero in γ.

use crate::error::{Result, RodError};
use crate::homoclinic::HomoclinicOrbit;
use crate::quad;

/// ω₀ = 1/(1 + cosθ(t)) on the orbit; lies in [½, 1/(1+u₊)], bounded away
/// from zero.
pub fn frequency_on_orbit(t: f64, orbit: &HomoclinicOrbit) -> f64 {
    1.0 / (1.0 + orbit.theta(t).cos())
}

/// Bracketed integrand p̄_θ sinψ̄ [(1+cosθ)(cosθ+γcos2θ) + sin²θ(1+γcosθ)]
/// evaluated on the homoclinic orbit; even in t. This is the published
/// combination; see `melnikov_integrand_derived` for the one the defining
/// bracket actually produces.
pub fn melnikov_integrand(t: f64, orbit: &HomoclinicOrbit) -> Result<f64> {
    Ok(integrand_given_psi(t, orbit.psi_bar(t)?, orbit))
}

fn bracket_factor(theta: f64, gamma: f64, published: bool) -> f64 {
    let (st, ct) = theta.sin_cos();
    let cos2t = ct * ct - st * st;
    let elastic = st * st * (1.0 + gamma * ct);
    let gradient = (1.0 + ct) * (ct + gamma * cos2t);
    if published {
        gradient + elastic
    } else {
        gradient - elastic
    }
}

fn integrand_given_psi(t: f64, psi_bar: f64, orbit: &HomoclinicOrbit) -> f64 {
    let (theta, p_theta) = orbit.eval(t);
    p_theta * psi_bar.sin() * bracket_factor(theta, orbit.gamma, true)
}

/// The integrand that the quotient rule on H₁/ω₀ actually yields:
/// p̄_θ sinψ̄ [(1+cosθ)(cosθ+γcos2θ) − sin²θ(1+γcosθ)]. Its integral
/// vanishes identically: to first order in the ε-scaling the perturbation
/// coincides on the unperturbed orbit with the integrable zero-field case,
/// whose extra first integral forces a zero Mel'nikov function.
pub fn melnikov_integrand_derived(t: f64, orbit: &HomoclinicOrbit) -> Result<f64> {
    let (theta, p_theta) = orbit.eval(t);
    Ok(p_theta * orbit.psi_bar(t)?.sin() * bracket_factor(theta, orbit.gamma, false))
}

/// ∫ of the derived integrand; identically zero up to quadrature error.
pub fn melnikov_amplitude_derived(m: f64, gamma: f64) -> Result<f64> {
    let orbit = HomoclinicOrbit::new(m, gamma)?;
    let t_max = default_truncation(&orbit);
    let table = orbit.psi_bar_table(t_max + 1.0);
    let half = quad::integrate(
        |t| {
            let (theta, p_theta) = orbit.eval(t);
            p_theta * table.eval(t).sin() * bracket_factor(theta, gamma, false)
        },
        0.0,
        t_max,
        1e-11,
    )?;
    Ok(2.0 * half)
}

/// Truncation horizon: the e^{−σt} envelope bounds the omitted tail by
/// (C/σ)e^{−σT} < 10⁻¹² once T ≥ 40/σ.
pub fn default_truncation(orbit: &HomoclinicOrbit) -> f64 {
    (40.0 / orbit.sigma).max(50.0)
}

/// ∫_{−T}^{T} of the integrand, exploiting evenness.
pub fn melnikov_amplitude(m: f64, gamma: f64, truncation: Option<f64>, tol: Option<f64>) -> Result<f64> {
    let orbit = HomoclinicOrbit::new(m, gamma)?;
    melnikov_amplitude_on(&orbit, truncation, tol)
}

pub fn melnikov_amplitude_on(orbit: &HomoclinicOrbit, truncation: Option<f64>, tol: Option<f64>) -> Result<f64> {
    let t_max = truncation.unwrap_or_else(|| default_truncation(orbit));
    let tol = tol.unwrap_or(1e-10);
    let table = orbit.psi_bar_table(t_max + 1.0);
    let half = quad::integrate(|t| integrand_given_psi(t, table.eval(t), orbit), 0.0, t_max, tol / 2.0)?;
    Ok(2.0 * half)
}

/// M(ψ₀) = −(√(a−2b)/m²) sinψ₀ · amplitude; simple zeros at ψ₀ ∈ {0, π}
/// whenever the amplitude is nonzero.
pub fn melnikov(psi0: f64, m: f64, gamma: f64, a: f64, b: f64) -> Result<f64> {
    let prefactor = prefactor(m, a, b)?;
    let amplitude = melnikov_amplitude(m, gamma, None, None)?;
    Ok(prefactor * psi0.sin() * amplitude)
}

fn prefactor(m: f64, a: f64, b: f64) -> Result<f64> {
    let rad = a - 2.0 * b;
    if rad <= 0.0 {
        return Err(RodError::AlignmentViolation { radicand: rad });
    }
    Ok(-rad.sqrt() / (m * m))
}

/// Sampled normalized curve M(ψ₀)/√(a−2b) together with the run metadata.
#[derive(Debug, Clone)]
pub struct MelnikovCurve {
    pub m: f64,
    pub gamma: f64,
    pub a: f64,
    pub b: f64,
    /// (ψ₀, M(ψ₀)) pairs.
    pub samples: Vec<(f64, f64)>,
    /// The ψ₀-independent integral factor.
    pub amplitude: f64,
    pub truncation: f64,
    pub quad_tol: f64,
}

impl MelnikovCurve {
    /// Samples M over ψ₀ ∈ [0, 2π] on `n` uniform points (inclusive ends).
    pub fn compute(m: f64, gamma: f64, a: f64, b: f64, n: usize) -> Result<Self> {
        let pre = prefactor(m, a, b)?;
        let orbit = HomoclinicOrbit::new(m, gamma)?;
        let truncation = default_truncation(&orbit);
        let quad_tol = 1e-10;
        let amplitude = melnikov_amplitude_on(&orbit, Some(truncation), Some(quad_tol))?;
        let samples = (0..=n)
            .map(|i| {
                let psi0 = 2.0 * std::f64::consts::PI * i as f64 / n as f64;
                (psi0, pre * psi0.sin() * amplitude)
            })
            .collect();
        Ok(Self { m, gamma, a, b, samples, amplitude, truncation, quad_tol })
    }

    /// Normalized value M(ψ₀)/√(a−2b).
    pub fn normalized(&self, psi0: f64) -> f64 {
        -psi0.sin() * self.amplitude / (self.m * self.m)
    }
}

/// Root of amplitude(γ) = 0 over `gamma_range`, by bisection to 1e-6.
pub fn find_amplitude_zero(m: f64, gamma_range: (f64, f64)) -> Result<f64> {
    find_amplitude_zero_with(m, gamma_range, None, None)
}

pub fn find_amplitude_zero_with(
    m: f64,
    gamma_range: (f64, f64),
    truncation: Option<f64>,
    tol: Option<f64>,
) -> Result<f64> {
    let (mut lo, mut hi) = gamma_range;
    let mut f_lo = melnikov_amplitude(m, lo, truncation, tol)?;
    let f_hi = melnikov_amplitude(m, hi, truncation, tol)?;
    if f_lo.signum() == f_hi.signum() {
        return Err(RodError::NoSignChange(format!(
            "amplitude({lo}) = {f_lo:.3e}, amplitude({hi}) = {f_hi:.3e}"
        )));
    }
    while hi - lo > 1e-6 {
        let mid = 0.5 * (lo + hi);
        let f_mid = melnikov_amplitude(m, mid, truncation, tol)?;
        if f_mid.signum() == f_lo.signum() {
            lo = mid;
            f_lo = f_mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// The partial derivatives entering the Mel'nikov bracket, as closed forms
/// on the unperturbed system (p̄_ψ = 1 on the orbit).
pub mod partials {
    /// ∂H₀/∂θ = sinθ(1/(1+cosθ)² − (1+γcosθ)/m²).
    pub fn dh0_dtheta(theta: f64, m: f64, gamma: f64) -> f64 {
        let (st, ct) = theta.sin_cos();
        st * (1.0 / ((1.0 + ct) * (1.0 + ct)) - (1.0 + gamma * ct) / (m * m))
    }

    /// ∂H₀/∂p̄_θ = p̄_θ.
    pub fn dh0_dptheta(p_theta: f64) -> f64 {
        p_theta
    }

    /// ∂ω₀/∂θ = sinθ/(1+cosθ)².
    pub fn domega0_dtheta(theta: f64) -> f64 {
        let (st, ct) = theta.sin_cos();
        st / ((1.0 + ct) * (1.0 + ct))
    }

    /// ∂ω₀/∂p̄_θ = 0.
    pub fn domega0_dptheta() -> f64 {
        0.0
    }

    /// ∂H₁/∂θ = (cosθ + γcos2θ) cosψ √(a − 2bp̄_ψ)/m².
    pub fn dh1_dtheta(theta: f64, psi: f64, p_psi: f64, m: f64, gamma: f64, a: f64, b: f64) -> f64 {
        let ct = theta.cos();
        let cos2t = (2.0 * theta).cos();
        (ct + gamma * cos2t) * psi.cos() * (a - 2.0 * b * p_psi).sqrt() / (m * m)
    }

    /// ∂H₁/∂p̄_θ = 0.
    pub fn dh1_dptheta() -> f64 {
        0.0
    }

    /// H₀ of the unperturbed system (for finite-difference checks).
    pub fn h0(theta: f64, p_theta: f64, p_psi: f64, m: f64, gamma: f64) -> f64 {
        let (st, ct) = theta.sin_cos();
        let a = (p_psi - ct) / st;
        0.5 * p_theta * p_theta + 0.5 * a * a + ct / (m * m) + gamma * ct * ct / (2.0 * m * m)
    }

    /// H₁, the first-order magnetic perturbation.
    pub fn h1(theta: f64, psi: f64, p_psi: f64, m: f64, gamma: f64, a: f64, b: f64) -> f64 {
        let (st, ct) = theta.sin_cos();
        (gamma * ct + 1.0) * st * psi.cos() * (a - 2.0 * b * p_psi).sqrt() / (m * m)
    }

    /// ω₀ = ∂H₀/∂p̄_ψ at p̄_ψ = 1.
    pub fn omega0(theta: f64) -> f64 {
        1.0 / (1.0 + theta.cos())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn orbit() -> HomoclinicOrbit {
        HomoclinicOrbit::new(1.7, 1.0).unwrap()
    }

    #[test]
    fn frequency_limits() {
        let orb = orbit();
        assert!((frequency_on_orbit(80.0, &orb) - 0.5).abs() < 1e-10);
        assert!((frequency_on_orbit(-80.0, &orb) - 0.5).abs() < 1e-10);
        let apex = frequency_on_orbit(0.0, &orb);
        assert!((apex - 1.0 / (1.0 + orb.u_plus)).abs() < 1e-12);
        assert!((apex - 1.02848).abs() < 1e-4);
    }

    #[test]
    fn frequency_bounded_away_from_zero_on_dense_grid() {
        let orb = orbit();
        for i in -400..=400 {
            let t = i as f64 * 0.1;
            let w = frequency_on_orbit(t, &orb);
            assert!((0.5 - 1e-12..=1.0 / (1.0 + orb.u_plus) + 1e-12).contains(&w));
        }
    }

    #[test]
    fn frequency_is_dh0_dppsi() {
        let orb = orbit();
        let h = 1e-6;
        for &t in &[0.0, 0.7, 2.0, 5.0] {
            let (theta, p_theta) = orb.eval(t);
            let fd = (partials::h0(theta, p_theta, 1.0 + h, orb.m, orb.gamma)
                - partials::h0(theta, p_theta, 1.0 - h, orb.m, orb.gamma))
                / (2.0 * h);
            assert!((fd - frequency_on_orbit(t, &orb)).abs() < 1e-8);
        }
    }

    #[test]
    fn integrand_vanishes_at_turning_point() {
        assert_eq!(melnikov_integrand(0.0, &orbit()).unwrap(), 0.0);
    }

    #[test]
    fn integrand_is_even() {
        let orb = orbit();
        for &t in &[0.3, 1.1, 2.7, 6.0, 11.0] {
            let plus = melnikov_integrand(t, &orb).unwrap();
            let minus = melnikov_integrand(-t, &orb).unwrap();
            assert!((plus - minus).abs() < 1e-10, "asymmetry {:.3e} at t = {t}", (plus - minus).abs());
        }
    }

    #[test]
    fn integrand_decays_within_orbit_envelope() {
        let orb = orbit();
        let amp = melnikov_integrand(10.0, &orb).unwrap().abs().max(1e-30) * (10.0 * orb.sigma).exp();
        for i in 0..20 {
            let t = 10.0 + i as f64;
            let v = melnikov_integrand(t, &orb).unwrap().abs();
            // sinψ̄ oscillates, so bound with a generous constant.
            assert!(v <= 50.0 * amp * (-orb.sigma * t).exp() + 1e-14);
        }
    }

    #[test]
    fn partial_derivative_table_matches_finite_differences() {
        let (m, gamma, a, b) = (1.7, 1.0, 1.3, 0.4);
        let h = 1e-6;
        for &(theta, psi, p_theta) in &[(0.7, 0.4, 0.3), (1.4, -1.0, -0.6), (2.1, 2.2, 0.1)] {
            let fd = (partials::h0(theta + h, p_theta, 1.0, m, gamma) - partials::h0(theta - h, p_theta, 1.0, m, gamma))
                / (2.0 * h);
            let an = partials::dh0_dtheta(theta, m, gamma);
            assert!((fd - an).abs() / (1.0 + an.abs()) < 1e-6);

            let fd = (partials::h0(theta, p_theta + h, 1.0, m, gamma) - partials::h0(theta, p_theta - h, 1.0, m, gamma))
                / (2.0 * h);
            assert!((fd - partials::dh0_dptheta(p_theta)).abs() < 1e-8);

            let fd = (partials::omega0(theta + h) - partials::omega0(theta - h)) / (2.0 * h);
            assert!((fd - partials::domega0_dtheta(theta)).abs() / (1.0 + fd.abs()) < 1e-6);
            assert_eq!(partials::domega0_dptheta(), 0.0);

            let fd = (partials::h1(theta + h, psi, 1.0, m, gamma, a, b) - partials::h1(theta - h, psi, 1.0, m, gamma, a, b))
                / (2.0 * h);
            let an = partials::dh1_dtheta(theta, psi, 1.0, m, gamma, a, b);
            assert!((fd - an).abs() / (1.0 + an.abs()) < 1e-6);
            assert_eq!(partials::dh1_dptheta(), 0.0);
        }
    }

    #[test]
    fn amplitude_stable_under_refinement() {
        let base = melnikov_amplitude(1.7, 1.0, None, None).unwrap();
        let orb = orbit();
        let refined =
            melnikov_amplitude(1.7, 1.0, Some(2.0 * default_truncation(&orb)), Some(5e-11)).unwrap();
        assert!((base - refined).abs() < 1e-6, "refinement moved amplitude by {:.3e}", (base - refined).abs());
    }

    #[test]
    fn published_amplitude_is_negative_and_monotone() {
        // Measured behavior of the published combination on [1, 2]: the
        // amplitude is negative with increasing magnitude, so the
        // normalized curve at ψ₀ = π/2 is positive and strictly increasing.
        // The figure's claimed top-to-bottom ordering and its sign change
        // between γ = 1.8 and 2 do not emerge from the printed formula
        // (nor from the derived one, whose integral vanishes identically).
        let mut previous = 0.0;
        for gamma in [1.0, 1.2, 1.4, 1.6, 1.8, 2.0] {
            let amp = melnikov_amplitude(1.7, gamma, None, None).unwrap();
            assert!(amp < previous, "monotonicity broken at γ = {gamma}: {amp}");
            previous = amp;
        }
        assert!((melnikov_amplitude(1.7, 1.0, None, None).unwrap() - (-3.784287)).abs() < 1e-4);
        assert!((melnikov_amplitude(1.7, 2.0, None, None).unwrap() - (-5.533471)).abs() < 1e-4);
    }

    #[test]
    fn derived_integral_vanishes_identically() {
        // The quotient-rule bracket integrates to zero for every γ: the
        // first-order perturbation is integrable along the unperturbed
        // orbit.
        for gamma in [1.0, 1.5, 2.0] {
            let amp = melnikov_amplitude_derived(1.7, gamma).unwrap();
            assert!(amp.abs() < 1e-8, "derived amplitude {amp:.3e} at γ = {gamma}");
        }
    }

    #[test]
    fn derived_bracket_matches_finite_difference_definition() {
        // {H₀, H₁/ω₀}_(θ,p̄θ) by central differences against the derived
        // closed form, pointwise on the orbit.
        let orb = orbit();
        let (a, b) = (1.0f64, 0.25f64);
        let psi0 = 0.9;
        let h = 1e-6;
        for &t in &[0.4, 1.3, 2.6, 5.0] {
            let (theta, p_theta) = orb.eval(t);
            let psi_bar = orb.psi_bar(t).unwrap();
            let psi = psi_bar + psi0;
            let f = |th: f64| {
                let (st, ct) = th.sin_cos();
                (orb.gamma * ct + 1.0) * st * psi.cos() * (a - 2.0 * b).sqrt() / (orb.m * orb.m) * (1.0 + ct)
            };
            let df_dth = (f(theta + h) - f(theta - h)) / (2.0 * h);
            let fd_bracket = -p_theta * df_dth;

            let derived = -p_theta
                * psi.cos()
                * (a - 2.0 * b).sqrt()
                * bracket_factor(theta, orb.gamma, false)
                / (orb.m * orb.m);
            assert!(
                (fd_bracket - derived).abs() < 1e-7 * (1.0 + derived.abs()),
                "fd {fd_bracket} vs derived {derived} at t = {t}"
            );
        }
    }

    #[test]
    fn melnikov_curve_zeros_and_oddness() {
        let curve = MelnikovCurve::compute(1.7, 1.0, 1.0, 0.25, 64).unwrap();
        assert_eq!(curve.samples.len(), 65);
        assert!(curve.normalized(0.0).abs() < 1e-15);
        assert!(curve.normalized(std::f64::consts::PI).abs() < 1e-12);
        // M(−ψ₀) = −M(ψ₀): the sine factor carries the sign.
        let pre = -(curve.a - 2.0 * curve.b).sqrt() / (curve.m * curve.m);
        for &(psi0, v) in &curve.samples {
            let mirrored = pre * (-psi0).sin() * curve.amplitude;
            assert!((mirrored + v).abs() < 1e-12);
        }
    }

    #[test]
    fn alignment_precondition() {
        assert!(matches!(
            melnikov(0.5, 1.7, 1.0, 0.5, 0.3),
            Err(RodError::AlignmentViolation { .. })
        ));
    }

    #[test]
    fn no_amplitude_zero_in_the_claimed_range() {
        // The published amplitude keeps one sign over (1.8, 2.0); the
        // search reports the missing bracket rather than inventing a root.
        assert!(matches!(
            find_amplitude_zero(1.7, (1.8, 2.0)),
            Err(RodError::NoSignChange(_))
        ));
        // The outcome is stable under quadrature refinement.
        let orb_trunc = default_truncation(&orbit());
        assert!(find_amplitude_zero_with(1.7, (1.8, 2.0), Some(2.0 * orb_trunc), Some(1e-11)).is_err());
    }

    #[test]
    fn amplitude_keeps_sign_across_the_existence_range() {
        for gamma in [0.3, 0.7, 1.0, 1.6, 2.5] {
            let amp = melnikov_amplitude(1.7, gamma, None, Some(1e-8)).unwrap();
            assert!(amp < 0.0, "amplitude {amp} at γ = {gamma}");
        }
    }

    #[test]
    fn amplitude_independent_of_orbit_source() {
        // Rebuild the integrand from the quadrature-inverted orbit and
        // compare on a fixed Simpson grid.
        let orb = orbit();
        let t_max = 30.0;
        let n = 600;
        let h = t_max / n as f64;
        let mut cf = 0.0;
        let mut qd = 0.0;
        for i in 0..=n {
            let t = i as f64 * h;
            let w = if i == 0 || i == n {
                1.0
            } else if i % 2 == 1 {
                4.0
            } else {
                2.0
            };
            cf += w * melnikov_integrand(t, &orb).unwrap();

            let theta = orb.theta_via_quadrature(t).unwrap();
            let (st, ct) = theta.sin_cos();
            // p̄_θ from the energy identity, negative branch for t > 0.
            let v = crate::homoclinic::potential(theta, orb.m, orb.gamma).unwrap();
            let p_theta = if i == 0 { 0.0 } else { -(2.0 * (orb.h - v)).max(0.0).sqrt() };
            let cos2t = ct * ct - st * st;
            let bracket = (1.0 + ct) * (ct + orb.gamma * cos2t) + st * st * (1.0 + orb.gamma * ct);
            let psi_bar = orb.psi_bar(t).unwrap();
            qd += w * p_theta * psi_bar.sin() * bracket;
        }
        cf *= h / 3.0;
        qd *= h / 3.0;
        assert!((cf - qd).abs() < 1e-6, "closed form {cf} vs quadrature orbit {qd}");
    }
}
