//! Canonical Euler-angle reduction: the reduced dimensionless Hamiltonian,
//! its equations of motion and second derivatives, the integral Ī₂,
//! energy-level completion of partial initial data, and the embedding back
//! into the nine-dimensional body formulation.

use nalgebra::{Matrix3, SMatrix, SVector, Vector3};

use crate::error::{Result, RodError, SIN_THETA_GUARD};
use crate::kinematics::EulerAngles;
use crate::noncanonical::BodyState9;
use crate::ode::refine_root;
use crate::params::{DimensionlessParameters, RodParameters};

pub type State4 = SVector<f64, 4>;
pub type Matrix4 = SMatrix<f64, 4, 4>;

/// Reduced dimensionless state (θ, ψ, p̄_θ, p̄_ψ); φ is cyclic with
/// p̄_φ = 1 after scaling.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CanonicalState {
    pub theta: f64,
    pub psi: f64,
    pub p_theta: f64,
    pub p_psi: f64,
}

impl CanonicalState {
    pub fn new(theta: f64, psi: f64, p_theta: f64, p_psi: f64) -> Self {
        Self { theta, psi, p_theta, p_psi }
    }

    pub fn from_vector(v: &State4) -> Self {
        Self::new(v[0], v[1], v[2], v[3])
    }

    pub fn to_vector(&self) -> State4 {
        State4::new(self.theta, self.psi, self.p_theta, self.p_psi)
    }
}

/// An energy level together with the parameters it belongs to.
#[derive(Debug, Clone, Copy)]
pub struct LevelSpec {
    pub h: f64,
    pub params: DimensionlessParameters,
}

/// Body triple of the fixed field direction e₃.
pub fn e3_of_angles(q: &EulerAngles) -> Vector3<f64> {
    let (st, ct) = q.theta.sin_cos();
    let (sf, cf) = q.phi.sin_cos();
    Vector3::new(-st * cf, st * sf, ct)
}

/// Moments m = L·p from the canonical momenta p = (p_θ, p_ψ, p_φ).
pub fn momenta_to_moments(q: &EulerAngles, p: Vector3<f64>) -> Result<Vector3<f64>> {
    let st = q.checked_sin_theta()?;
    let ct = q.theta.cos();
    let (sf, cf) = q.phi.sin_cos();
    Ok(Vector3::new(
        sf * p.x - cf / st * p.y + ct * cf / st * p.z,
        cf * p.x + sf / st * p.y - ct * sf / st * p.z,
        p.z,
    ))
}

/// Force triple reconstructed from the Casimirs: the component C₂ along e₃
/// plus the orthogonal part of magnitude √(2C₁ − C₂² − 2λp_ψ).
pub fn force_from_state(q: &EulerAngles, p_psi: f64, c1: f64, c2: f64, lambda: f64) -> Result<Vector3<f64>> {
    let radicand = 2.0 * c1 - c2 * c2 - 2.0 * lambda * p_psi;
    if radicand < 0.0 {
        return Err(RodError::AlignmentViolation { radicand });
    }
    let w = radicand.sqrt();
    let (st, ct) = q.theta.sin_cos();
    let (sp, cp) = q.psi.sin_cos();
    let (sf, cf) = q.phi.sin_cos();
    let along = Vector3::new(-st * cf, st * sf, ct);
    let perp = Vector3::new(ct * cf * cp - sf * sp, -ct * sf * cp - cf * sp, st * cp);
    Ok(along * c2 + perp * w)
}

fn radicand(p_psi: f64, dp: &DimensionlessParameters) -> f64 {
    dp.mu - 2.0 * dp.lambda_bar * p_psi
}

/// Reduced dimensionless Hamiltonian of the isotropic rod (the constant
/// p̄_φ² term dropped, as in the reduced phase space).
pub fn hamiltonian_nondim(s: &CanonicalState, dp: &DimensionlessParameters) -> Result<f64> {
    let st = s.theta.sin();
    if st.abs() < SIN_THETA_GUARD {
        return Err(RodError::SingularTheta { sin_theta: st });
    }
    let ct = s.theta.cos();
    let cp = s.psi.cos();
    let s2 = radicand(s.p_psi, dp);
    if s2 < 0.0 {
        return Err(RodError::AlignmentViolation { radicand: s2 });
    }
    let sq = s2.sqrt();
    let m2 = dp.m * dp.m;
    let a = (s.p_psi - ct) / st;
    Ok(0.5 * s.p_theta * s.p_theta
        + 0.5 * a * a
        + ct / m2
        + dp.gamma * ct * ct / (2.0 * m2)
        + (dp.gamma * ct + 1.0) * st * cp * sq / m2
        + dp.gamma * st * st * cp * cp * s2 / (2.0 * m2)
        - dp.delta * dp.lambda_bar * s.p_psi / m2)
}

/// Analytic gradient (∂H/∂θ, ∂H/∂ψ, ∂H/∂p̄_θ, ∂H/∂p̄_ψ).
pub fn grad_hamiltonian_nondim(s: &CanonicalState, dp: &DimensionlessParameters) -> Result<State4> {
    let st = s.theta.sin();
    if st.abs() < SIN_THETA_GUARD {
        return Err(RodError::SingularTheta { sin_theta: st });
    }
    let ct = s.theta.cos();
    let (spsi, cpsi) = s.psi.sin_cos();
    let s2 = radicand(s.p_psi, dp);
    let lb = dp.lambda_bar;
    if s2 < 0.0 || (lb != 0.0 && s2 == 0.0) {
        return Err(RodError::AlignmentViolation { radicand: s2 });
    }
    let sq = s2.sqrt();
    let m2 = dp.m * dp.m;
    let g = dp.gamma;
    let a = (s.p_psi - ct) / st;
    let a_t = (1.0 - s.p_psi * ct) / (st * st);
    let cos2t = ct * ct - st * st;

    let h_theta = a * a_t - st / m2 - g * ct * st / m2
        + (g * cos2t + ct) * cpsi * sq / m2
        + g * st * ct * cpsi * cpsi * s2 / m2;
    let h_psi = -(g * ct + 1.0) * st * spsi * sq / m2 - g * st * st * cpsi * spsi * s2 / m2;
    let h_ptheta = s.p_theta;
    let mut h_ppsi = a / st - dp.delta * lb / m2 - g * lb * st * st * cpsi * cpsi / m2;
    if lb != 0.0 {
        h_ppsi -= lb * (g * ct + 1.0) * st * cpsi / (m2 * sq);
    }
    Ok(State4::new(h_theta, h_psi, h_ptheta, h_ppsi))
}

/// Hamilton's equations (θ̇, ψ̇, ṗ̄_θ, ṗ̄_ψ).
pub fn vector_field4(s: &CanonicalState, dp: &DimensionlessParameters) -> Result<State4> {
    let g = grad_hamiltonian_nondim(s, dp)?;
    Ok(State4::new(g[2], g[3], -g[0], -g[1]))
}

/// Twist-angle rate that keeps the six-dimensional lift consistent with
/// the body flow in the standard gauge B = C = 1: φ̇ = 1 − cosθ·(p̄_ψ −
/// cosθ)/sin²θ. The kinematic azimuth rate of the director frame is the
/// moment part (p̄_ψ − cosθ)/sin²θ alone; for λ̄ ≠ 0 the canonical ψ picks
/// up an extra force-term drift that the twist gauge absorbs.
pub fn phi_rate(s: &CanonicalState, _dp: &DimensionlessParameters) -> Result<f64> {
    let st = s.theta.sin();
    if st.abs() < SIN_THETA_GUARD {
        return Err(RodError::SingularTheta { sin_theta: st });
    }
    let ct = s.theta.cos();
    Ok(1.0 - ct * (s.p_psi - ct) / (st * st))
}

/// Hessian of the reduced Hamiltonian, ordered (θ, ψ, p̄_θ, p̄_ψ); used by
/// the tangent-map integration.
pub fn hessian_hamiltonian_nondim(s: &CanonicalState, dp: &DimensionlessParameters) -> Result<Matrix4> {
    let st = s.theta.sin();
    if st.abs() < SIN_THETA_GUARD {
        return Err(RodError::SingularTheta { sin_theta: st });
    }
    let ct = s.theta.cos();
    let (spsi, cpsi) = s.psi.sin_cos();
    let s2 = radicand(s.p_psi, dp);
    let lb = dp.lambda_bar;
    if s2 < 0.0 || (lb != 0.0 && s2 == 0.0) {
        return Err(RodError::AlignmentViolation { radicand: s2 });
    }
    let sq = s2.sqrt();
    let m2 = dp.m * dp.m;
    let g = dp.gamma;
    let a = (s.p_psi - ct) / st;
    let a_t = (1.0 - s.p_psi * ct) / (st * st);
    let a_tt = (s.p_psi * st * st - 2.0 * ct * (1.0 - s.p_psi * ct)) / (st * st * st);
    let cos2t = ct * ct - st * st;
    let sin2t = 2.0 * st * ct;
    let cos2psi = cpsi * cpsi - spsi * spsi;

    let h_tt = a_t * a_t + a * a_tt - ct / m2 - g * cos2t / m2
        + (-2.0 * g * sin2t - st) * cpsi * sq / m2
        + g * cos2t * cpsi * cpsi * s2 / m2;
    let h_tpsi = -(g * cos2t + ct) * spsi * sq / m2 - 2.0 * g * st * ct * cpsi * spsi * s2 / m2;
    let mut h_tppsi = a_t / st - a * ct / (st * st) - 2.0 * g * lb * st * ct * cpsi * cpsi / m2;
    if lb != 0.0 {
        h_tppsi -= lb * (g * cos2t + ct) * cpsi / (m2 * sq);
    }
    let h_psipsi = -(g * ct + 1.0) * st * cpsi * sq / m2 - g * st * st * cos2psi * s2 / m2;
    let mut h_psippsi = 2.0 * g * lb * st * st * cpsi * spsi / m2;
    if lb != 0.0 {
        h_psippsi += lb * (g * ct + 1.0) * st * spsi / (m2 * sq);
    }
    let mut h_ppsippsi = 1.0 / (st * st);
    if lb != 0.0 {
        h_ppsippsi -= lb * lb * (g * ct + 1.0) * st * cpsi / (m2 * sq * sq * sq);
    }

    let mut hess = Matrix4::zeros();
    hess[(0, 0)] = h_tt;
    hess[(0, 1)] = h_tpsi;
    hess[(1, 0)] = h_tpsi;
    hess[(0, 3)] = h_tppsi;
    hess[(3, 0)] = h_tppsi;
    hess[(1, 1)] = h_psipsi;
    hess[(1, 3)] = h_psippsi;
    hess[(3, 1)] = h_psippsi;
    hess[(2, 2)] = 1.0;
    hess[(3, 3)] = h_ppsippsi;
    Ok(hess)
}

/// Ī₂ = p̄_ψ + λ̄cosθ/m² − √(μ−2λ̄p̄_ψ)(p̄_θ sinψ − cosψ(1−p̄_ψcosθ)/sinθ).
pub fn i2bar(s: &CanonicalState, dp: &DimensionlessParameters) -> Result<f64> {
    let st = s.theta.sin();
    if st.abs() < SIN_THETA_GUARD {
        return Err(RodError::SingularTheta { sin_theta: st });
    }
    let ct = s.theta.cos();
    let (spsi, cpsi) = s.psi.sin_cos();
    let s2 = radicand(s.p_psi, dp);
    if s2 < 0.0 {
        return Err(RodError::AlignmentViolation { radicand: s2 });
    }
    let m2 = dp.m * dp.m;
    Ok(s.p_psi + dp.lambda_bar * ct / m2
        - s2.sqrt() * (s.p_theta * spsi - cpsi * (1.0 - s.p_psi * ct) / st))
}

/// Solves H(θ, ψ, p̄_θ, p̄_ψ) = h for p̄_ψ. Seeded by the closed-form λ̄ = 0
/// root (H is quadratic in p̄_ψ there); among admissible roots the one
/// nearest the seed is returned.
pub fn complete_state_on_level(theta: f64, psi: f64, p_theta: f64, spec: &LevelSpec) -> Result<CanonicalState> {
    let dp = &spec.params;
    let st = theta.sin();
    if st.abs() < SIN_THETA_GUARD {
        return Err(RodError::SingularTheta { sin_theta: st });
    }
    let ct = theta.cos();
    let cpsi = psi.cos();
    let m2 = dp.m * dp.m;

    // λ̄ = 0 closed form: H = ½p̄_θ² + ½((p̄_ψ−c)/s)² + base(θ, ψ) with the
    // square root frozen at √μ.
    let seed = if dp.mu >= 0.0 {
        let sq = dp.mu.sqrt();
        let base = 0.5 * p_theta * p_theta
            + ct / m2
            + dp.gamma * ct * ct / (2.0 * m2)
            + (dp.gamma * ct + 1.0) * st * cpsi * sq / m2
            + dp.gamma * st * st * cpsi * cpsi * dp.mu / (2.0 * m2);
        let disc = 2.0 * (spec.h - base);
        if disc >= 0.0 { Some(ct + st * disc.sqrt()) } else { None }
    } else {
        None
    };

    if dp.lambda_bar == 0.0 {
        let p_psi = seed.ok_or_else(|| {
            RodError::RootNotFound("no admissible p_psi on this level (negative discriminant at lambda_bar = 0)".into())
        })?;
        return Ok(CanonicalState::new(theta, psi, p_theta, p_psi));
    }

    // Admissible p̄_ψ keeps the radicand positive.
    let bound = dp.mu / (2.0 * dp.lambda_bar);
    let margin = 1e-12 * (1.0 + bound.abs());
    let clip = |p: f64| {
        if dp.lambda_bar > 0.0 { p.min(bound - margin) } else { p.max(bound + margin) }
    };
    let seed = clip(seed.unwrap_or(ct));

    let f = |p_psi: f64| -> Option<f64> {
        let s = CanonicalState::new(theta, psi, p_theta, p_psi);
        hamiltonian_nondim(&s, dp).ok().map(|h| h - spec.h)
    };

    // Outward scan from the seed for the nearest sign change.
    let step = 0.01 * (1.0 + seed.abs());
    let f_seed = f(seed).ok_or_else(|| RodError::RootNotFound("seed inadmissible".into()))?;
    let mut bracket: Option<(f64, f64, f64, f64)> = None;
    let mut lo = (seed, f_seed);
    let mut hi = (seed, f_seed);
    for k in 1..=4000 {
        let pl = clip(seed - k as f64 * step);
        if pl < lo.0 {
            if let Some(fl) = f(pl) {
                if fl.signum() != lo.1.signum() {
                    bracket = Some((pl, lo.0, fl, lo.1));
                    break;
                }
                lo = (pl, fl);
            }
        }
        let ph = clip(seed + k as f64 * step);
        if ph > hi.0 {
            if let Some(fh) = f(ph) {
                if fh.signum() != hi.1.signum() {
                    bracket = Some((hi.0, ph, hi.1, fh));
                    break;
                }
                hi = (ph, fh);
            }
        }
    }
    let (a, b, fa, fb) =
        bracket.ok_or_else(|| RodError::RootNotFound("no admissible p_psi root in the search bracket".into()))?;
    let mut p_psi = refine_root(|p| f(p).unwrap_or(f64::NAN), a, b, fa, fb, 1e-13, 1e-15)?;

    // Newton polish onto the level set.
    for _ in 0..50 {
        let s = CanonicalState::new(theta, psi, p_theta, p_psi);
        let res = hamiltonian_nondim(&s, dp)? - spec.h;
        if res.abs() < 1e-13 {
            break;
        }
        let der = grad_hamiltonian_nondim(&s, dp)?[3];
        if der == 0.0 {
            break;
        }
        p_psi = clip(p_psi - res / der);
    }

    let state = CanonicalState::new(theta, psi, p_theta, p_psi);
    let res = (hamiltonian_nondim(&state, dp)? - spec.h).abs();
    if res > 1e-12 {
        return Err(RodError::RootNotFound(format!("level completion residual {res:.3e}")));
    }
    Ok(state)
}

/// Value of the full canonical Hamiltonian of the linearly elastic rod
/// (anisotropy allowed); evaluation only, the p_φ² term included.
pub fn hamiltonian_canonical_full(q: &EulerAngles, p: Vector3<f64>, params: &RodParameters) -> Result<f64> {
    let m = momenta_to_moments(q, p)?;
    let n = force_from_state(q, p.y, params.c1, params.c2, params.lambda)?;
    Ok(0.5 * (m.x * m.x / params.b1 + m.y * m.y / params.b2 + m.z * m.z / params.c)
        + 0.5 * (n.x * n.x * params.h_inv + n.y * n.y * params.j_inv + n.z * n.z * params.k_inv)
        + n.z)
}

/// Assembles the nine-dimensional body state from a reduced state, a twist
/// angle φ and the loading constants. When λ = 0 the twisting moment is
/// fixed by the gauge B = 1, i.e. m₃ = m√C₂.
pub fn canonical_to_noncanonical(
    s: &CanonicalState,
    phi: f64,
    dp: &DimensionlessParameters,
    c1: f64,
    c2: f64,
    lambda: f64,
) -> Result<BodyState9> {
    let m3 = if lambda != 0.0 {
        dp.lambda_bar * c2 * c2 / lambda
    } else {
        dp.m * c2.sqrt()
    };
    let q = EulerAngles::new(s.theta, s.psi, phi);
    let p = Vector3::new(s.p_theta * m3, s.p_psi * m3, m3);
    let m = momenta_to_moments(&q, p)?;
    let n = force_from_state(&q, p.y, c1, c2, lambda)?;
    Ok(BodyState9::new(m, n, e3_of_angles(&q)))
}

/// Directors as a matrix (columns d₁, d₂, d₃ in the fixed frame) for a full
/// angle triple; rows of the rotation matrix.
pub fn directors_of_angles(q: &EulerAngles) -> Matrix3<f64> {
    crate::kinematics::rotation_from_euler(q).transpose()
}
