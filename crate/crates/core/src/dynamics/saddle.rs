//! Local structure of the straight twisted rod aligned with the field: the
//! fixed point of the body-frame system, its eigenvalues and the
//! stable/unstable eigenplanes.
//!
//! The Euler chart degenerates at θ = 0, so the chart is built in the
//! nine-dimensional body formulation where the aligned state is an honest
//! fixed point; the Casimirs of that state satisfy μ = 2λ̄ automatically.

use nalgebra::{DMatrix, DVector, Vector3};
use num_complex::Complex;

use crate::error::{Result, RodError};
use crate::homoclinic::buckling_threshold;
use crate::noncanonical::{jacobian9, BodyState9, State9};
use crate::params::{DimensionlessParameters, RodParameters};

/// Reversor of the body-frame system: flip the second component of each
/// block and reverse arclength.
pub fn reversor9(x: &State9) -> State9 {
    let mut out = *x;
    out[1] = -out[1];
    out[4] = -out[4];
    out[7] = -out[7];
    out
}

/// Rotation of all three blocks about the third body axis by `chi`
/// (the twist gauge of the isotropic rod).
pub fn rotate_about_d3(x: &State9, chi: f64) -> State9 {
    let (s, c) = chi.sin_cos();
    let mut out = *x;
    for block in 0..3 {
        let i = 3 * block;
        let (vx, vy) = (x[i], x[i + 1]);
        out[i] = c * vx - s * vy;
        out[i + 1] = s * vx + c * vy;
    }
    out
}

/// Saddle data of the aligned rod in the standard gauge.
#[derive(Debug, Clone)]
pub struct SaddleChart {
    pub dp: DimensionlessParameters,
    pub gauge: RodParameters,
    /// The aligned fixed point (0,0,m | 0,0,1 | 0,0,1).
    pub fixed_point: BodyState9,
    /// Unstable eigenvalue σ + iω in dimensionless-time units.
    pub eigenvalue: Complex<f64>,
    /// Orthonormal basis of the unstable eigenplane.
    pub unstable_plane: [State9; 2],
    /// Orthonormal basis of the stable eigenplane.
    pub stable_plane: [State9; 2],
}

impl SaddleChart {
    /// Growth rate σ.
    pub fn sigma(&self) -> f64 {
        self.eigenvalue.re
    }

    /// Distance of `x` from the affine unstable plane through the saddle.
    pub fn distance_from_unstable_plane(&self, x: &State9) -> f64 {
        let d = x - self.fixed_point.to_vector();
        let mut residual = d;
        for basis in &self.unstable_plane {
            residual -= basis * d.dot(basis);
        }
        residual.norm()
    }

    /// Distance of the direction of `x − x*` from the stable plane.
    pub fn distance_from_stable_plane(&self, x: &State9) -> f64 {
        let d = x - self.fixed_point.to_vector();
        let mut residual = d;
        for basis in &self.stable_plane {
            residual -= basis * d.dot(basis);
        }
        residual.norm()
    }
}

/// Builds the saddle chart: jacobian of the body field at the aligned state
/// (scaled to dimensionless time), its hyperbolic quartet and the invariant
/// planes.
pub fn saddle_local_chart(dp: &DimensionlessParameters) -> Result<SaddleChart> {
    let m_c = buckling_threshold(dp.gamma);
    if dp.m >= m_c {
        return Err(RodError::Supercritical { m: dp.m, m_c });
    }
    let gauge = dp.standard_gauge();
    let fixed_point = BodyState9::new(
        Vector3::new(0.0, 0.0, gauge.m3),
        Vector3::new(0.0, 0.0, gauge.c2),
        Vector3::new(0.0, 0.0, 1.0),
    );

    // d/dt = (1/m) d/ds in the standard gauge.
    let a9 = jacobian9(&fixed_point, &gauge) / dp.m;
    let a = DMatrix::<f64>::from_fn(9, 9, |i, j| a9[(i, j)]);

    let eigs = a.clone().complex_eigenvalues();
    let scale = a.norm();
    let mut unstable: Vec<Complex<f64>> = eigs.iter().copied().filter(|l| l.re > 1e-8 * scale).collect();
    unstable.sort_by(|x, y| y.re.partial_cmp(&x.re).unwrap().then(y.im.partial_cmp(&x.im).unwrap()));
    if unstable.len() != 2 {
        return Err(RodError::RootNotFound(format!(
            "expected a two-dimensional unstable spectrum, found {} eigenvalues with positive real part",
            unstable.len()
        )));
    }

    let lambda_u = if unstable[0].im.abs() > 1e-10 * scale {
        Complex::new(unstable[0].re, unstable[0].im.abs())
    } else {
        unstable[0]
    };

    let unstable_plane = eigenplane(&a, lambda_u, unstable.get(1).copied())?;
    let stable_plane = eigenplane(&a, -lambda_u, unstable.get(1).map(|l| -l))?;

    Ok(SaddleChart {
        dp: *dp,
        gauge,
        fixed_point,
        eigenvalue: lambda_u,
        unstable_plane,
        stable_plane,
    })
}

/// Real 2-plane of the eigenvalue `lambda` (complex pair) or of the two
/// real eigenvalues (`lambda`, `second`), via complex inverse iteration.
fn eigenplane(a: &DMatrix<f64>, lambda: Complex<f64>, second: Option<Complex<f64>>) -> Result<[State9; 2]> {
    let v1 = inverse_iteration(a, lambda)?;
    let (w1, w2) = if lambda.im.abs() > 1e-12 * (1.0 + a.norm()) {
        let re = DVector::from_fn(9, |i, _| v1[i].re);
        let im = DVector::from_fn(9, |i, _| v1[i].im);
        (re, im)
    } else {
        let second = second.ok_or_else(|| RodError::RootNotFound("missing second real eigenvalue".into()))?;
        let v2 = inverse_iteration(a, second)?;
        (
            DVector::from_fn(9, |i, _| v1[i].re),
            DVector::from_fn(9, |i, _| v2[i].re),
        )
    };

    // Gram-Schmidt.
    let b1 = &w1 / w1.norm();
    let mut b2 = w2.clone() - &b1 * b1.dot(&w2);
    let n2 = b2.norm();
    if n2 < 1e-10 {
        return Err(RodError::RootNotFound("degenerate eigenplane".into()));
    }
    b2 /= n2;
    Ok([
        State9::from_fn(|i, _| b1[i]),
        State9::from_fn(|i, _| b2[i]),
    ])
}

fn inverse_iteration(a: &DMatrix<f64>, lambda: Complex<f64>) -> Result<DVector<Complex<f64>>> {
    let n = a.nrows();
    let shift = lambda + Complex::new(1e-10, 1e-10);
    let m = DMatrix::<Complex<f64>>::from_fn(n, n, |i, j| {
        Complex::new(a[(i, j)], 0.0) - if i == j { shift } else { Complex::new(0.0, 0.0) }
    });
    let lu = m.lu();
    let mut v = DVector::<Complex<f64>>::from_fn(n, |i, _| Complex::new(1.0 / (1.0 + i as f64), 0.4 * i as f64 % 1.0));
    v /= Complex::new(v.norm(), 0.0);
    for _ in 0..4 {
        let solved = lu
            .solve(&v)
            .ok_or_else(|| RodError::RootNotFound("singular shift in inverse iteration".into()))?;
        v = solved.clone();
        let norm = v.norm();
        if !norm.is_finite() || norm == 0.0 {
            return Err(RodError::RootNotFound("inverse iteration diverged".into()));
        }
        v /= Complex::new(norm, 0.0);
    }
    Ok(v)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::noncanonical::vector_field9;
    use crate::ode::{Dop853, IntegratorConfig};

    #[test]
    fn eigenvalue_matches_sigma_formula_unperturbed() {
        // λ̄ = μ = 0: real parts ±σ with σ = √((1+γ)/m² − ¼).
        for (m, gamma) in [(1.7, 1.0), (1.4, 0.5)] {
            let dp = DimensionlessParameters::new(m, gamma, 1.0, 0.0, 0.0).unwrap();
            let chart = saddle_local_chart(&dp).unwrap();
            let sigma = ((1.0 + gamma) / (m * m) - 0.25).sqrt();
            assert!(
                (chart.sigma() - sigma).abs() < 1e-8,
                "σ = {} vs formula {}",
                chart.sigma(),
                sigma
            );
        }
    }

    #[test]
    fn supercritical_moment_rejected() {
        let dp = DimensionlessParameters::new(3.0, 0.5, 1.0, 0.0, 0.0).unwrap();
        assert!(matches!(saddle_local_chart(&dp), Err(RodError::Supercritical { .. })));
    }

    #[test]
    fn fixed_point_is_equilibrium() {
        let dp = DimensionlessParameters::new(1.7, 1.0, 1.0, 0.001, 0.002).unwrap();
        let chart = saddle_local_chart(&dp).unwrap();
        let rate = vector_field9(&chart.fixed_point, &chart.gauge);
        assert!(rate.to_vector().norm() < 1e-14);
    }

    #[test]
    fn reversor_is_involution_and_reverses_field() {
        let dp = DimensionlessParameters::new(1.7, 1.0, 1.0, 0.001, 0.002).unwrap();
        let gauge = dp.standard_gauge();
        let x = State9::from_column_slice(&[0.3, -0.2, 1.5, 0.1, 0.4, 0.9, 0.2, -0.5, 0.8]);
        assert_eq!(reversor9(&reversor9(&x)), x);
        let fx = vector_field9(&BodyState9::from_vector(&x), &gauge).to_vector();
        let frx = vector_field9(&BodyState9::from_vector(&reversor9(&x)), &gauge).to_vector();
        assert!((frx + reversor9(&fx)).norm() < 1e-13);
    }

    #[test]
    fn gauge_rotation_commutes_with_field() {
        let dp = DimensionlessParameters::new(1.7, 1.0, 1.0, 0.5, 1.0).unwrap();
        let gauge = dp.standard_gauge();
        let x = State9::from_column_slice(&[0.3, -0.2, 1.5, 0.1, 0.4, 0.9, 0.2, -0.5, 0.8]);
        let chi = 0.77;
        let f_rot = vector_field9(&BodyState9::from_vector(&rotate_about_d3(&x, chi)), &gauge).to_vector();
        let rot_f = rotate_about_d3(
            &vector_field9(&BodyState9::from_vector(&x), &gauge).to_vector(),
            chi,
        );
        assert!((f_rot - rot_f).norm() < 1e-13);
    }

    #[test]
    fn reversor_swaps_invariant_planes() {
        let dp = DimensionlessParameters::new(1.7, 1.0, 1.0, 0.001, 0.002).unwrap();
        let chart = saddle_local_chart(&dp).unwrap();
        for basis in &chart.unstable_plane {
            let image = reversor9(basis);
            let mut residual = image;
            for sb in &chart.stable_plane {
                residual -= sb * image.dot(sb);
            }
            assert!(residual.norm() < 1e-8, "reversed unstable direction leaves the stable plane by {:.3e}", residual.norm());
        }
    }

    #[test]
    fn perturbed_point_follows_unstable_plane() {
        // Flowing a small unstable-plane offset stays near the plane while
        // the offset grows by e^{σt}.
        let dp = DimensionlessParameters::new(1.7, 1.0, 1.0, 0.0, 0.0).unwrap();
        let chart = saddle_local_chart(&dp).unwrap();
        let gauge = chart.gauge;
        let m = dp.m;
        let x0 = chart.fixed_point.to_vector() + chart.unstable_plane[0] * 1e-6;
        let field = move |_t: f64, y: &State9| Ok(vector_field9(&BodyState9::from_vector(y), &gauge).to_vector() / m);
        let mut stepper = Dop853::new(field, 0.0, x0, &IntegratorConfig::default()).unwrap();
        stepper.integrate_to(5.0).unwrap();
        let d = chart.distance_from_unstable_plane(stepper.y());
        assert!(d < 1e-4, "distance from unstable subspace {d:.3e}");
        let growth = (stepper.y() - chart.fixed_point.to_vector()).norm() / 1e-6;
        assert!((growth.ln() / 5.0 - chart.sigma()).abs() < 0.05 * chart.sigma());
    }
}
