//! Director-frame kinematics: hat map, Euler-angle rotation, curvatures,
//! the linearly elastic constitutive law and centerline reconstruction.

use nalgebra::{Matrix3, Vector3};

use crate::error::{Result, RodError, SIN_THETA_GUARD};
use crate::params::RodParameters;

/// Euler angles (θ, ψ, φ): θ is the angle between the tangent-ish director
/// d₃-axis and the fixed e₃, ψ the azimuth about e₃ and φ the twist angle.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EulerAngles {
    pub theta: f64,
    pub psi: f64,
    pub phi: f64,
}

impl EulerAngles {
    pub fn new(theta: f64, psi: f64, phi: f64) -> Self {
        Self { theta, psi, phi }
    }

    /// Errors when θ sits within the chart guard of {0, π}.
    pub fn checked_sin_theta(&self) -> Result<f64> {
        let s = self.theta.sin();
        if s.abs() < SIN_THETA_GUARD {
            Err(RodError::SingularTheta { sin_theta: s })
        } else {
            Ok(s)
        }
    }
}

/// Skew matrix of `a`, satisfying hat(a)·b = a × b.
pub fn hat(a: Vector3<f64>) -> Matrix3<f64> {
    Matrix3::new(
        0.0, -a.z, a.y, //
        a.z, 0.0, -a.x, //
        -a.y, a.x, 0.0,
    )
}

/// Rotation matrix of the Euler parametrization. Rows are the directors
/// expressed in the fixed frame, so body components of a fixed-frame vector
/// p are R·p; in particular R·(0,0,1) gives the body triple of e₃.
pub fn rotation_from_euler(q: &EulerAngles) -> Matrix3<f64> {
    let (st, ct) = q.theta.sin_cos();
    let (sp, cp) = q.psi.sin_cos();
    let (sf, cf) = q.phi.sin_cos();
    Matrix3::new(
        ct * cf * cp - sf * sp,
        ct * cf * sp + cp * sf,
        -st * cf,
        -ct * sf * cp - cf * sp,
        -ct * sf * sp + cf * cp,
        st * sf,
        st * cp,
        st * sp,
        ct,
    )
}

/// Body curvature/twist vector u from Euler angles and their rates
/// (θ′, ψ′, φ′).
pub fn curvatures_from_euler(q: &EulerAngles, qdot: Vector3<f64>) -> Result<Vector3<f64>> {
    q.checked_sin_theta()?;
    let (st, ct) = q.theta.sin_cos();
    let (sf, cf) = q.phi.sin_cos();
    let (td, pd, fd) = (qdot.x, qdot.y, qdot.z);
    Ok(Vector3::new(
        td * sf - pd * st * cf,
        td * cf + pd * st * sf,
        fd + pd * ct,
    ))
}

/// Moment and force from the strains: m = (B₁u₁, B₂u₂, Cu₃),
/// n = (Hv₁, Jv₂, K(v₃−1)). Rigid compliances map the corresponding
/// components to zero strain energy (the strain is constrained, the
/// reaction is not produced by this map).
pub fn constitutive(u: Vector3<f64>, v: Vector3<f64>, p: &RodParameters) -> (Vector3<f64>, Vector3<f64>) {
    let m = Vector3::new(p.b1 * u.x, p.b2 * u.y, p.c * u.z);
    let n = Vector3::new(p.h() * v.x, p.j() * v.y, p.k() * (v.z - 1.0));
    (m, n)
}

/// Strain energy density of the linearly elastic rod.
pub fn strain_energy(u: Vector3<f64>, v: Vector3<f64>, p: &RodParameters) -> f64 {
    0.5 * (p.b1 * u.x * u.x
        + p.b2 * u.y * u.y
        + p.c * u.z * u.z
        + p.h() * v.x * v.x
        + p.j() * v.y * v.y
        + p.k() * (v.z - 1.0) * (v.z - 1.0))
}

/// One sample of a reconstructed rod: arclength, centerline point and the
/// director matrix D whose columns are d₁, d₂, d₃ in the fixed frame.
#[derive(Debug, Clone)]
pub struct FrameSample {
    pub s: f64,
    pub r: Vector3<f64>,
    pub directors: Matrix3<f64>,
}

/// Integrates d′ᵢ = u × dᵢ and r′ = Σ vᵢ dᵢ for body strains (u(s), v(s)),
/// sampling every `ds_out`. Directors are pulled back onto SO(3) by polar
/// projection after every accepted step.
pub fn reconstruct_centerline<F>(
    strains: F,
    s_end: f64,
    ds_out: f64,
    r0: Vector3<f64>,
    directors0: Matrix3<f64>,
) -> Result<Vec<FrameSample>>
where
    F: Fn(f64) -> (Vector3<f64>, Vector3<f64>),
{
    // Columns of D are the directors; D' = D*hat(u) for body components u.
    let field = |s: f64, y: &nalgebra::SVector<f64, 12>| -> Result<nalgebra::SVector<f64, 12>> {
        let (u, v) = strains(s);
        let d = Matrix3::from_column_slice(&y.as_slice()[0..9]);
        let dprime = d * hat(u);
        let rprime = d * v;
        let mut out = nalgebra::SVector::<f64, 12>::zeros();
        out.fixed_rows_mut::<9>(0).copy_from_slice(dprime.as_slice());
        out.fixed_rows_mut::<3>(9).copy_from(&rprime);
        Ok(out)
    };

    let mut y0 = nalgebra::SVector::<f64, 12>::zeros();
    y0.fixed_rows_mut::<9>(0).copy_from_slice(directors0.as_slice());
    y0.fixed_rows_mut::<3>(9).copy_from(&r0);

    let cfg = crate::ode::IntegratorConfig::default();
    let mut stepper = crate::ode::Dop853::new(field, 0.0, y0, &cfg)?;

    let mut samples = Vec::new();
    let push = |samples: &mut Vec<FrameSample>, s: f64, y: &nalgebra::SVector<f64, 12>| {
        samples.push(FrameSample {
            s,
            r: Vector3::new(y[9], y[10], y[11]),
            directors: Matrix3::from_column_slice(&y.as_slice()[0..9]),
        });
    };
    push(&mut samples, 0.0, &y0);

    let mut next_out = ds_out;
    while stepper.t() < s_end {
        stepper.advance(s_end)?;
        // Re-orthonormalize the director block in place.
        let mut y = *stepper.y();
        let d = Matrix3::from_column_slice(&y.as_slice()[0..9]);
        let d = polar_projection(d);
        y.fixed_rows_mut::<9>(0).copy_from_slice(d.as_slice());
        stepper.replace_state(y)?;

        while next_out <= stepper.t() + 1e-14 && next_out <= s_end + 1e-14 {
            let yi = if (next_out - stepper.t()).abs() < 1e-14 {
                *stepper.y()
            } else {
                stepper.interpolate(next_out)
            };
            push(&mut samples, next_out, &yi);
            next_out += ds_out;
        }
    }
    Ok(samples)
}

/// Nearest rotation matrix in the polar sense, via the Newton iteration
/// X ← ½(X + X⁻ᵀ).
pub fn polar_projection(m: Matrix3<f64>) -> Matrix3<f64> {
    let mut x = m;
    for _ in 0..10 {
        let inv_t = match x.try_inverse() {
            Some(inv) => inv.transpose(),
            None => return m,
        };
        let next = (x + inv_t) * 0.5;
        if (next - x).norm() < 1e-15 {
            return next;
        }
        x = next;
    }
    x
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use rand::Rng;
    use rand::SeedableRng;

    fn rng() -> rand_chacha::ChaCha8Rng {
        rand_chacha::ChaCha8Rng::seed_from_u64(0x5eed)
    }

    #[test]
    fn hat_zero_vector_is_zero_matrix() {
        assert_eq!(hat(Vector3::zeros()), Matrix3::zeros());
    }

    #[test]
    fn hat_reproduces_cross_product() {
        let a = Vector3::new(1.0, 2.0, 3.0);
        let b = Vector3::new(1.0, 0.0, 0.0);
        assert_eq!(hat(a) * b, Vector3::new(0.0, 3.0, -2.0));

        let mut r = rng();
        for _ in 0..10_000 {
            let a = Vector3::new(r.gen_range(-5.0..5.0), r.gen_range(-5.0..5.0), r.gen_range(-5.0..5.0));
            let b = Vector3::new(r.gen_range(-5.0..5.0), r.gen_range(-5.0..5.0), r.gen_range(-5.0..5.0));
            assert!((hat(a) * b - a.cross(&b)).norm() < 1e-15 * (1.0 + a.norm() * b.norm()));
        }
    }

    #[test]
    fn hat_is_antisymmetric() {
        let a = Vector3::new(0.3, -0.7, 2.1);
        let h = hat(a);
        assert_eq!(h.transpose(), -h);
    }

    #[test]
    fn rotation_identity_at_zero_angles() {
        let r = rotation_from_euler(&EulerAngles::new(0.0, 0.0, 0.0));
        assert_abs_diff_eq!(r, Matrix3::identity(), epsilon = 1e-15);
    }

    #[test]
    fn rotation_third_row_reads_off() {
        let r = rotation_from_euler(&EulerAngles::new(std::f64::consts::FRAC_PI_2, 0.0, 0.0));
        let row3 = r.row(2).transpose();
        assert_abs_diff_eq!(row3, Vector3::new(1.0, 0.0, 0.0), epsilon = 1e-15);
    }

    #[test]
    fn rotation_is_orthogonal_with_unit_determinant() {
        let mut r = rng();
        for _ in 0..1000 {
            let q = EulerAngles::new(
                r.gen_range(0.0..std::f64::consts::PI),
                r.gen_range(-10.0..10.0),
                r.gen_range(-10.0..10.0),
            );
            let rot = rotation_from_euler(&q);
            let defect = rot * rot.transpose() - Matrix3::identity();
            assert!(defect.abs().max() < 1e-14);
            assert!((rot.determinant() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn curvatures_vanish_without_rotation_rate() {
        let q = EulerAngles::new(1.0, 0.4, -0.3);
        let u = curvatures_from_euler(&q, Vector3::zeros()).unwrap();
        assert_eq!(u, Vector3::zeros());
    }

    #[test]
    fn curvature_pure_psi_rate() {
        let q = EulerAngles::new(std::f64::consts::FRAC_PI_2, 0.0, 0.0);
        let u = curvatures_from_euler(&q, Vector3::new(0.0, 1.0, 0.0)).unwrap();
        assert_abs_diff_eq!(u, Vector3::new(-1.0, 0.0, 0.0), epsilon = 1e-15);
    }

    #[test]
    fn curvature_signals_singularity() {
        let q = EulerAngles::new(0.0, 0.0, 0.0);
        assert!(matches!(
            curvatures_from_euler(&q, Vector3::new(1.0, 1.0, 1.0)),
            Err(RodError::SingularTheta { .. })
        ));
    }

    /// Finite-difference the directors (rows of R) along a random angle path
    /// and compare u_i = ½ ε_ijk d'_j · d_k against the closed form.
    #[test]
    fn curvatures_match_differentiated_directors() {
        let mut r = rng();
        for _ in 0..50 {
            let q0 = Vector3::new(r.gen_range(0.4..2.6), r.gen_range(-3.0..3.0), r.gen_range(-3.0..3.0));
            let qd = Vector3::new(r.gen_range(-1.0..1.0), r.gen_range(-1.0..1.0), r.gen_range(-1.0..1.0));
            let angles = |t: f64| EulerAngles::new(q0.x + qd.x * t, q0.y + qd.y * t, q0.z + qd.z * t);

            let h = 1e-6;
            let rp = rotation_from_euler(&angles(h));
            let rm = rotation_from_euler(&angles(-h));
            let r0 = rotation_from_euler(&angles(0.0));
            let dprime = (rp - rm) / (2.0 * h); // rows are d_i'

            let di = |m: &Matrix3<f64>, i: usize| m.row(i).transpose();
            let mut u_fd = Vector3::zeros();
            // u_1 = ½(d2'·d3 − d3'·d2), and cyclic.
            u_fd.x = 0.5 * (di(&dprime, 1).dot(&di(&r0, 2)) - di(&dprime, 2).dot(&di(&r0, 1)));
            u_fd.y = 0.5 * (di(&dprime, 2).dot(&di(&r0, 0)) - di(&dprime, 0).dot(&di(&r0, 2)));
            u_fd.z = 0.5 * (di(&dprime, 0).dot(&di(&r0, 1)) - di(&dprime, 1).dot(&di(&r0, 0)));

            let u = curvatures_from_euler(&angles(0.0), qd).unwrap();
            assert!((u - u_fd).norm() < 1e-6, "u = {u:?}, fd = {u_fd:?}");
        }
    }

    #[test]
    fn constitutive_reference_configuration_is_unstressed() {
        let p = RodParameters::isotropic_elastic(1.3, 0.9, 2.0, 3.0, 0.2, 0.6, 0.8, 1.7);
        let (m, n) = constitutive(Vector3::zeros(), Vector3::new(0.0, 0.0, 1.0), &p);
        assert_eq!(m, Vector3::zeros());
        assert_eq!(n, Vector3::zeros());
    }

    #[test]
    fn constitutive_scales_linearly() {
        let mut p = RodParameters::isotropic_elastic(2.0, 1.0, 1.0, 1.0, 0.0, 0.5, 1.0, 1.0);
        p.b1 = 2.0;
        let (m, _) = constitutive(Vector3::new(3.0, 0.0, 0.0), Vector3::new(0.0, 0.0, 1.0), &p);
        assert_eq!(m, Vector3::new(6.0, 0.0, 0.0));
    }

    #[test]
    fn constitutive_is_gradient_of_strain_energy() {
        let p = RodParameters::isotropic_elastic(1.7, 1.1, 3.0, 2.0, 0.3, 0.9, 1.2, 2.2);
        let u = Vector3::new(0.4, -0.2, 0.7);
        let v = Vector3::new(0.05, -0.1, 1.2);
        let (m, n) = constitutive(u, v, &p);
        let h = 1e-6;
        for i in 0..3 {
            let mut up = u;
            let mut um = u;
            up[i] += h;
            um[i] -= h;
            let fd = (strain_energy(up, v, &p) - strain_energy(um, v, &p)) / (2.0 * h);
            assert!((fd - m[i]).abs() < 1e-8, "m[{i}]");
            let mut vp = v;
            let mut vm = v;
            vp[i] += h;
            vm[i] -= h;
            let fd = (strain_energy(u, vp, &p) - strain_energy(u, vm, &p)) / (2.0 * h);
            assert!((fd - n[i]).abs() < 1e-8, "n[{i}]");
        }
    }

    #[test]
    fn straight_rod_from_trivial_strains() {
        let samples = reconstruct_centerline(
            |_| (Vector3::zeros(), Vector3::new(0.0, 0.0, 1.0)),
            10.0,
            1.0,
            Vector3::zeros(),
            Matrix3::identity(),
        )
        .unwrap();
        let last = samples.last().unwrap();
        assert_abs_diff_eq!(last.r, Vector3::new(0.0, 0.0, 10.0), epsilon = 1e-10);
    }

    #[test]
    fn pure_twist_keeps_centerline_straight() {
        let samples = reconstruct_centerline(
            |_| (Vector3::new(0.0, 0.0, 2.5), Vector3::new(0.0, 0.0, 1.0)),
            8.0,
            0.5,
            Vector3::zeros(),
            Matrix3::identity(),
        )
        .unwrap();
        for s in &samples {
            assert!(s.r.x.abs() < 1e-12 && s.r.y.abs() < 1e-12);
            assert!((s.r.z - s.s).abs() < 1e-10);
        }
    }

    #[test]
    fn constant_curvature_gives_circle() {
        let kappa = 0.5;
        let period = 2.0 * std::f64::consts::PI / kappa;
        let samples = reconstruct_centerline(
            |_| (Vector3::new(kappa, 0.0, 0.0), Vector3::new(0.0, 0.0, 1.0)),
            period,
            period / 128.0,
            Vector3::zeros(),
            Matrix3::identity(),
        )
        .unwrap();
        // Circle of radius 1/kappa: r''(0) = u × v = (0, −κ, 0), so the
        // center sits at r0 + (0, −1, 0)/κ.
        let center = samples[0].r + Vector3::new(0.0, -1.0, 0.0) / kappa;
        for s in &samples {
            assert!(
                ((s.r - center).norm() - 1.0 / kappa).abs() < 1e-8,
                "radius off at s = {}",
                s.s
            );
        }
        // Closure after the full period.
        let closing = samples.last().unwrap();
        assert!((closing.s - period).abs() < 1e-9);
        assert!((closing.r - samples[0].r).norm() < 1e-8);
    }

    #[test]
    fn directors_stay_orthonormal_over_long_reconstruction() {
        let samples = reconstruct_centerline(
            |s: f64| {
                (
                    Vector3::new(0.3 * (0.2 * s).sin(), 0.2, 1.1),
                    Vector3::new(0.01, -0.02, 1.0 + 0.05 * (0.1 * s).cos()),
                )
            },
            100.0,
            5.0,
            Vector3::zeros(),
            Matrix3::identity(),
        )
        .unwrap();
        for s in &samples {
            let defect = s.directors * s.directors.transpose() - Matrix3::identity();
            assert!(defect.abs().max() < 1e-8, "orthonormality lost at s = {}", s.s);
        }
    }
}
