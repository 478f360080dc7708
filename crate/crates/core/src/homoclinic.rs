//! Homoclinic orbit of the unperturbed extensible rod (λ̄ = 0, μ = 0,
//! p̄_ψ = 1): planar-oscillator potential, buckling threshold, the quadratic
//! g(u) and its roots, the closed-form orbit, the defining quadrature, the
//! Kirchhoff limit and ψ̄.

use crate::error::{Result, RodError};
use crate::quad;

/// V(θ) = ½(1−cosθ)/(1+cosθ) + cosθ/m² + γcos²θ/(2m²).
pub fn potential(theta: f64, m: f64, gamma: f64) -> Result<f64> {
    let c = theta.cos();
    if 1.0 + c <= 0.0 || theta.abs() >= std::f64::consts::PI {
        return Err(RodError::ParameterRange(format!("theta = {theta} at the ±π pole")));
    }
    let m2 = m * m;
    Ok(0.5 * (1.0 - c) / (1.0 + c) + c / m2 + gamma * c * c / (2.0 * m2))
}

/// Critical twisting moment m_c = 2√(1+γ) of the pitchfork at θ = 0.
pub fn buckling_threshold(gamma: f64) -> f64 {
    2.0 * (1.0 + gamma).sqrt()
}

/// θ = 0 plus the helical fixed points, the roots of
/// (γcosθ + 1)(1 + cosθ)² = m² in (0, π), located by bisection in cosθ.
pub fn fixed_points(m: f64, gamma: f64) -> Vec<f64> {
    let mut points = vec![0.0];
    let c = |u: f64| (gamma * u + 1.0) * (1.0 + u) * (1.0 + u) - m * m;
    let mut lo = -1.0 + 1e-15;
    let mut hi = 1.0;
    if c(lo) * c(hi) < 0.0 {
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if mid <= lo || mid >= hi {
                break;
            }
            if c(lo) * c(mid) <= 0.0 {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        let u = 0.5 * (lo + hi);
        points.push(u.clamp(-1.0, 1.0).acos());
    }
    points
}

/// Roots u± of g(u) = u² + 2u(1 + 1/γ) + 1 + 2/γ − m²/γ and the modulus
/// k = (u₊ − u₋)/(1 − u₋).
pub fn quadratic_roots(m: f64, gamma: f64) -> Result<(f64, f64, f64)> {
    if gamma <= 0.0 {
        return Err(RodError::ParameterRange(format!("gamma must be positive, got {gamma}")));
    }
    if !(m > 0.0 && m * m < 4.0 * (1.0 + gamma)) {
        return Err(RodError::ParameterRange(format!(
            "need 0 < m² < 4(1+γ); m = {m}, γ = {gamma}"
        )));
    }
    let root = (1.0 + gamma * m * m).sqrt() / gamma;
    let u_plus = -(1.0 + 1.0 / gamma) + root;
    let u_minus = -(1.0 + 1.0 / gamma) - root;
    let k = (u_plus - u_minus) / (1.0 - u_minus);

    let g = |u: f64| u * u + 2.0 * u * (1.0 + 1.0 / gamma) + 1.0 + 2.0 / gamma - m * m / gamma;
    let scale = 1.0 + u_minus * u_minus;
    for u in [u_plus, u_minus] {
        let residual = g(u).abs() / scale;
        if residual > 1e-12 {
            return Err(RodError::RootNotFound(format!("g(u) residual {residual:.3e} at u = {u}")));
        }
    }
    Ok((u_plus, u_minus, k))
}

/// Closed-form branches considered for the orbit. The printed form uses a
/// circular tangent and √(k²−1), which is not real-valued here (k < 1 for
/// all admissible parameters); its direct hyperbolic continuation evaluates
/// but fails the defining quadrature. The re-derived antiderivative
/// ∫dz/(1−k cosh²z) = artanh(tanh z/√(1−k))/√(1−k) gives the branch that
/// matches the quadrature.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ClosedFormBranch {
    CircularVerbatim,
    HyperbolicContinuation,
    HyperbolicRederived,
}

impl ClosedFormBranch {
    pub fn label(&self) -> &'static str {
        match self {
            ClosedFormBranch::CircularVerbatim => "circular-verbatim",
            ClosedFormBranch::HyperbolicContinuation => "hyperbolic-continuation",
            ClosedFormBranch::HyperbolicRederived => "hyperbolic-rederived",
        }
    }
}

/// The homoclinic orbit to the straight twisted rod for 0 < m < 2√(1+γ),
/// γ > 0. θ is even in t, p̄_θ odd, and θ → 0 at rate σ as |t| → ∞.
#[derive(Debug, Clone, Copy)]
pub struct HomoclinicOrbit {
    pub m: f64,
    pub gamma: f64,
    pub u_plus: f64,
    pub u_minus: f64,
    pub k: f64,
    /// Orbit energy (1 + γ/2)/m².
    pub h: f64,
    /// Saddle eigenvalue √((1+γ)/m² − ¼).
    pub sigma: f64,
    /// Branch that matched the quadrature oracle at construction.
    pub branch: ClosedFormBranch,
}

impl HomoclinicOrbit {
    /// Builds the orbit, selecting the closed-form branch by validating
    /// each candidate against the defining quadrature.
    pub fn new(m: f64, gamma: f64) -> Result<Self> {
        let (u_plus, u_minus, k) = quadratic_roots(m, gamma)?;
        let sigma2 = (1.0 + gamma) / (m * m) - 0.25;
        if sigma2 <= 0.0 {
            return Err(RodError::Supercritical { m, m_c: buckling_threshold(gamma) });
        }
        let mut orbit = Self {
            m,
            gamma,
            u_plus,
            u_minus,
            k,
            h: (1.0 + gamma / 2.0) / (m * m),
            sigma: sigma2.sqrt(),
            branch: ClosedFormBranch::HyperbolicRederived,
        };
        orbit.branch = orbit.select_branch()?;
        Ok(orbit)
    }

    /// Maximum opening angle arccos(u₊).
    pub fn theta_max(&self) -> f64 {
        self.u_plus.acos()
    }

    fn cos_theta_branch(&self, t: f64, branch: ClosedFormBranch) -> Option<f64> {
        match branch {
            ClosedFormBranch::CircularVerbatim => {
                // cosθ = u₋ + (u₊−u₋) cosh²(2 artanh(√((k−1)/(k+1)) tan(t(1−u₋)√(γ(k²−1))/(4m))))
                let k2m1 = self.k * self.k - 1.0;
                let ratio = (self.k - 1.0) / (self.k + 1.0);
                if k2m1 <= 0.0 || ratio <= 0.0 {
                    return None;
                }
                let inner = (ratio).sqrt() * (t * (1.0 - self.u_minus) * (self.gamma * k2m1).sqrt() / (4.0 * self.m)).tan();
                if inner.abs() >= 1.0 {
                    return None;
                }
                let z = 2.0 * inner.atanh();
                Some(self.u_minus + (self.u_plus - self.u_minus) * z.cosh().powi(2))
            }
            ClosedFormBranch::HyperbolicContinuation => {
                let ratio = (1.0 - self.k) / (1.0 + self.k);
                let arg = t * (1.0 - self.u_minus) * (self.gamma * (1.0 - self.k * self.k)).sqrt() / (4.0 * self.m);
                let inner = ratio.sqrt() * arg.tanh();
                if inner.abs() >= 1.0 {
                    return None;
                }
                let z = 2.0 * inner.atanh();
                Some(self.u_minus + (self.u_plus - self.u_minus) * z.cosh().powi(2))
            }
            ClosedFormBranch::HyperbolicRederived => {
                // cosθ = u₋ + (u₊−u₋)/(1 − (1−k) tanh²(σt))
                let th = (self.sigma * t).tanh();
                let denom = 1.0 - (1.0 - self.k) * th * th;
                Some(self.u_minus + (self.u_plus - self.u_minus) / denom)
            }
        }
    }

    /// t(θ) of a closed-form branch on the t ≥ 0 side, by analytic
    /// inversion; None when the branch cannot reach θ.
    fn time_of_theta_branch(&self, theta: f64, branch: ClosedFormBranch) -> Option<f64> {
        let u = theta.cos();
        match branch {
            ClosedFormBranch::CircularVerbatim => None,
            ClosedFormBranch::HyperbolicContinuation => {
                let csq = (u - self.u_minus) / (self.u_plus - self.u_minus);
                if csq < 1.0 {
                    return None;
                }
                let z = csq.sqrt().acosh();
                let ratio = ((1.0 - self.k) / (1.0 + self.k)).sqrt();
                let w = (z / 2.0).tanh() / ratio;
                if w >= 1.0 {
                    return None;
                }
                let a = w.atanh();
                Some(4.0 * self.m * a / ((1.0 - self.u_minus) * (self.gamma * (1.0 - self.k * self.k)).sqrt()))
            }
            ClosedFormBranch::HyperbolicRederived => {
                let d = (self.u_plus - self.u_minus) / (u - self.u_minus);
                let tanh2 = (1.0 - d) / (1.0 - self.k);
                if !(0.0..1.0).contains(&tanh2) {
                    return None;
                }
                Some(tanh2.sqrt().atanh() / self.sigma)
            }
        }
    }

    fn select_branch(&self) -> Result<ClosedFormBranch> {
        let theta_max = self.theta_max();
        let targets: Vec<f64> = (1..=6).map(|i| theta_max * i as f64 / 7.0).collect();
        'branch: for branch in [
            ClosedFormBranch::CircularVerbatim,
            ClosedFormBranch::HyperbolicContinuation,
            ClosedFormBranch::HyperbolicRederived,
        ] {
            for &theta in &targets {
                let t_quad = self.time_of_theta(theta)?;
                let Some(t_cf) = self.time_of_theta_branch(theta, branch) else {
                    continue 'branch;
                };
                if (t_cf - t_quad).abs() > 1e-8 {
                    continue 'branch;
                }
            }
            return Ok(branch);
        }
        Err(RodError::RootNotFound("no closed-form branch matches the quadrature oracle".into()))
    }

    /// (θ, p̄_θ) of the validated closed form. The tail-safe route
    /// 1 − cosθ = (1−u₋)(1−k) sech²(σt)/D avoids the cancellation of
    /// u₋ + (u₊−u₋)/D against 1 and keeps the exponential tails smooth to
    /// underflow.
    pub fn eval(&self, t: f64) -> (f64, f64) {
        // sech² and the denominator in exponential form: tanh saturates to
        // 1.0 beyond σ|t| ≈ 18 and would zero the tails.
        let x = self.sigma * t;
        let e = (-2.0 * x.abs()).exp();
        let sech2 = 4.0 * e / ((1.0 + e) * (1.0 + e));
        let th = ((1.0 - e) / (1.0 + e)).copysign(x);
        let denom = self.k + (1.0 - self.k) * sech2;
        let one_minus_u = (1.0 - self.u_minus) * (1.0 - self.k) * sech2 / denom;
        let theta = 2.0 * ((0.5 * one_minus_u).sqrt().min(1.0)).asin();
        let sin_theta = (one_minus_u * (2.0 - one_minus_u)).max(0.0).sqrt();

        let ducdt = (self.u_plus - self.u_minus) * (1.0 - self.k) * 2.0 * self.sigma * th * sech2 / (denom * denom);
        let p_theta = if sin_theta > 0.0 { -ducdt / sin_theta } else { 0.0 };
        (theta, p_theta)
    }

    pub fn theta(&self, t: f64) -> f64 {
        self.eval(t).0
    }

    pub fn p_theta(&self, t: f64) -> f64 {
        self.eval(t).1
    }

    /// t ≥ 0 with θ(t) = θ_target, from the defining integral
    /// t = (m/√γ) ∫ du/((1−u)√g(u)). The inverse-square-root endpoint at u₊
    /// is removed by u = u₊ + w²; the logarithmic growth toward u = 1 by
    /// u = 1 − e⁻ˣ on the upper part.
    pub fn time_of_theta(&self, theta_target: f64) -> Result<f64> {
        // 1 − cosθ without cancellation at small angles.
        let one_minus_u = 2.0 * (0.5 * theta_target).sin().powi(2);
        let u_target = 1.0 - one_minus_u;
        if !(u_target > self.u_plus && one_minus_u > 0.0) {
            return Err(RodError::ParameterRange(format!(
                "cos θ = {u_target} outside the orbit range ({}, 1)",
                self.u_plus
            )));
        }
        let m = self.m;
        let gamma = self.gamma;
        let (up, um) = (self.u_plus, self.u_minus);
        let g_of = |u: f64| ((u - um) * (u - up)).max(0.0);

        let u_mid = 0.5 * (up + 1.0);
        if u_target <= u_mid {
            return quad::integrate_inverse_sqrt_endpoint(
                |u| (m / gamma.sqrt()) / ((1.0 - u) * (u - um).sqrt()),
                up,
                u_target,
                1e-12,
            );
        }
        let lower = quad::integrate_inverse_sqrt_endpoint(
            |u| (m / gamma.sqrt()) / ((1.0 - u) * (u - um).sqrt()),
            up,
            u_mid,
            1e-12,
        )?;
        // x = −ln(1−u): du/(1−u) = dx.
        let x_mid = -(1.0 - u_mid).ln();
        let x_target = -one_minus_u.ln();
        let upper = quad::integrate(
            |x| (m / gamma.sqrt()) / g_of(1.0 - (-x).exp()).sqrt(),
            x_mid,
            x_target,
            1e-12,
        )?;
        Ok(lower + upper)
    }

    /// θ(t) through the quadrature oracle alone (bisection on t(θ) = |t|).
    pub fn theta_via_quadrature(&self, t: f64) -> Result<f64> {
        let ta = t.abs();
        if ta == 0.0 {
            return Ok(self.theta_max());
        }
        let mut lo = 1e-12;
        let mut hi = self.theta_max() - 1e-12;
        // t(θ) decreases from ∞ (θ→0) to 0 (θ→θ_max).
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if mid <= lo || mid >= hi {
                break;
            }
            let tm = self.time_of_theta(mid)?;
            if tm > ta {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        Ok(0.5 * (lo + hi))
    }

    /// ψ̄(t) = ∫₀ᵗ dτ/(1 + cosθ(τ)); odd in t with ψ̄(0) = 0. Evaluated a
    /// digit past the downstream tolerances since it feeds the Mel'nikov
    /// integrand pointwise.
    pub fn psi_bar(&self, t: f64) -> Result<f64> {
        quad::integrate(|tau| 1.0 / (1.0 + self.theta(tau).cos()), 0.0, t, 1e-13)
    }

    /// Cached cumulative evaluator for ψ̄, for integrands that sample it
    /// densely: fixed Kronrod panels accumulate ψ̄ at grid points, a single
    /// panel covers the remainder.
    pub fn psi_bar_table(&self, t_max: f64) -> PsiBarTable<'_> {
        PsiBarTable::new(self, t_max)
    }

    /// ψ̇ along the orbit, 1/(1 + cosθ(t)).
    pub fn psi_dot(&self, t: f64) -> f64 {
        1.0 / (1.0 + self.theta(t).cos())
    }

    /// Largest deviation |t_closed(θ) − t_quadrature(θ)| over an interior
    /// sample of the orbit.
    pub fn closed_form_deviation(&self, n_samples: usize) -> Result<f64> {
        let mut worst = 0.0f64;
        for i in 1..=n_samples {
            let theta = self.theta_max() * i as f64 / (n_samples as f64 + 1.0);
            let tq = self.time_of_theta(theta)?;
            let tc = self
                .time_of_theta_branch(theta, self.branch)
                .ok_or_else(|| RodError::RootNotFound("branch does not cover orbit interior".into()))?;
            worst = worst.max((tc - tq).abs());
        }
        Ok(worst)
    }
}

/// Grid-accumulated ψ̄ with single-panel completion; agrees with the
/// adaptive route to rounding on the covered range.
pub struct PsiBarTable<'a> {
    orbit: &'a HomoclinicOrbit,
    step: f64,
    cum: Vec<f64>,
}

impl<'a> PsiBarTable<'a> {
    fn new(orbit: &'a HomoclinicOrbit, t_max: f64) -> Self {
        let step = 0.25;
        let n = (t_max / step).ceil() as usize + 1;
        let mut cum = Vec::with_capacity(n + 1);
        cum.push(0.0);
        let mut acc = 0.0;
        for i in 0..n {
            acc += quad::gk21_panel(
                |tau| 1.0 / (1.0 + orbit.theta(tau).cos()),
                i as f64 * step,
                (i + 1) as f64 * step,
            );
            cum.push(acc);
        }
        Self { orbit, step, cum }
    }

    /// ψ̄(t), odd in t; |t| must not exceed the covered range.
    pub fn eval(&self, t: f64) -> f64 {
        let ta = t.abs();
        let i = ((ta / self.step) as usize).min(self.cum.len() - 2);
        let t0 = i as f64 * self.step;
        let v = self.cum[i] + quad::gk21_panel(|tau| 1.0 / (1.0 + self.orbit.theta(tau).cos()), t0, ta);
        v.copysign(t)
    }
}

/// Kirchhoff-limit homoclinic (γ = 0):
/// cosθ = u₀ + (1−u₀)tanh²(√(1−u₀)·t/(m√2)), u₀ = m²/2 − 1.
pub fn kirchhoff_orbit(t: f64, m: f64) -> Result<(f64, f64)> {
    if !(0.0 < m && m < 2.0) {
        return Err(RodError::ParameterRange(format!("Kirchhoff orbit needs 0 < m < 2, got {m}")));
    }
    let u0 = m * m / 2.0 - 1.0;
    let rate = (1.0 - u0).sqrt() / (m * std::f64::consts::SQRT_2);
    // 1 − cosθ = (1 − u₀) sech², in exponential form for the tails.
    let x = rate * t;
    let e = (-2.0 * x.abs()).exp();
    let sech2 = 4.0 * e / ((1.0 + e) * (1.0 + e));
    let th = ((1.0 - e) / (1.0 + e)).copysign(x);
    let one_minus_u = (1.0 - u0) * sech2;
    let theta = 2.0 * ((0.5 * one_minus_u).sqrt().min(1.0)).asin();
    let ducdt = (1.0 - u0) * 2.0 * th * sech2 * rate;
    let sin_theta = (one_minus_u * (2.0 - one_minus_u)).max(0.0).sqrt();
    let p_theta = if sin_theta > 0.0 { -ducdt / sin_theta } else { 0.0 };
    Ok((theta, p_theta))
}
