//! The nine-dimensional non-canonical formulation in body components
//! (𝗆, 𝗇, 𝖾₃): structure matrix, Poisson bracket, vector field, Casimirs and
//! the special-case first integrals.

use nalgebra::{Matrix3, SMatrix, SVector, Vector3};

use crate::kinematics::hat;
use crate::params::RodParameters;

pub type State9 = SVector<f64, 9>;
pub type Matrix9 = SMatrix<f64, 9, 9>;

/// Body-frame state (𝗆, 𝗇, 𝖾₃) of the equilibrium equations.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BodyState9 {
    pub m: Vector3<f64>,
    pub n: Vector3<f64>,
    pub e3: Vector3<f64>,
}

impl BodyState9 {
    pub fn new(m: Vector3<f64>, n: Vector3<f64>, e3: Vector3<f64>) -> Self {
        Self { m, n, e3 }
    }

    pub fn from_vector(v: &State9) -> Self {
        Self {
            m: Vector3::new(v[0], v[1], v[2]),
            n: Vector3::new(v[3], v[4], v[5]),
            e3: Vector3::new(v[6], v[7], v[8]),
        }
    }

    pub fn to_vector(&self) -> State9 {
        State9::from_column_slice(&[
            self.m.x, self.m.y, self.m.z, self.n.x, self.n.y, self.n.z, self.e3.x, self.e3.y, self.e3.z,
        ])
    }
}

/// Inverse constitutive map: strains (𝗎, 𝗏) realized by (𝗆, 𝗇). The 𝗏
/// returned is the full strain ∂ℋ/∂𝗇, i.e. 𝖽₃ plus the elastic deviation;
/// rigid modes contribute no deviation.
pub fn strains_of_state(s: &BodyState9, p: &RodParameters) -> (Vector3<f64>, Vector3<f64>) {
    let u = Vector3::new(s.m.x / p.b1, s.m.y / p.b2, s.m.z / p.c);
    let v = Vector3::new(s.n.x * p.h_inv, s.n.y * p.j_inv, 1.0 + s.n.z * p.k_inv);
    (u, v)
}

/// Structure matrix 𝒥 of the non-canonical system, built from the hats of
/// the state blocks; exactly antisymmetric.
pub fn structure_matrix(s: &BodyState9, lambda: f64) -> Matrix9 {
    let mut j = Matrix9::zeros();
    let hm = hat(s.m);
    let hn = hat(s.n);
    let he = hat(s.e3);
    j.fixed_view_mut::<3, 3>(0, 0).copy_from(&hm);
    j.fixed_view_mut::<3, 3>(0, 3).copy_from(&hn);
    j.fixed_view_mut::<3, 3>(0, 6).copy_from(&he);
    j.fixed_view_mut::<3, 3>(3, 0).copy_from(&hn);
    j.fixed_view_mut::<3, 3>(3, 3).copy_from(&(he * lambda));
    j.fixed_view_mut::<3, 3>(6, 0).copy_from(&he);
    j
}

/// ℋ(𝗆, 𝗇) = ½𝗆·𝗎(𝗆) + ½𝗇·(𝗏(𝗇) − 𝖽₃) + 𝖽₃·𝗇; independent of 𝖾₃. In the
/// rigid limit the elastic force terms vanish and only 𝖽₃·𝗇 survives.
pub fn hamiltonian9(s: &BodyState9, p: &RodParameters) -> f64 {
    0.5 * (s.m.x * s.m.x / p.b1 + s.m.y * s.m.y / p.b2 + s.m.z * s.m.z / p.c)
        + 0.5 * (s.n.x * s.n.x * p.h_inv + s.n.y * s.n.y * p.j_inv + s.n.z * s.n.z * p.k_inv)
        + s.n.z
}

/// Analytic gradient of ℋ with respect to the nine state components.
pub fn grad_hamiltonian9(s: &BodyState9, p: &RodParameters) -> State9 {
    let (u, v) = strains_of_state(s, p);
    let mut g = State9::zeros();
    g.fixed_rows_mut::<3>(0).copy_from(&u);
    g.fixed_rows_mut::<3>(3).copy_from(&v);
    g
}

/// Right-hand side of the equilibrium equations in the director frame:
/// 𝗆′ = 𝗆×𝗎 + 𝗇×𝗏, 𝗇′ = 𝗇×𝗎 + λ𝖾₃×𝗏, 𝖾₃′ = 𝖾₃×𝗎, with 𝗏 the full strain.
pub fn vector_field9(s: &BodyState9, p: &RodParameters) -> BodyState9 {
    let (u, v) = strains_of_state(s, p);
    BodyState9 {
        m: s.m.cross(&u) + s.n.cross(&v),
        n: s.n.cross(&u) + s.e3.cross(&v) * p.lambda,
        e3: s.e3.cross(&u),
    }
}

/// Poisson bracket ∇fᵀ𝒥∇g, assembled as the four-term expansion
/// (Kirchhoff part, semidirect field-evolution term, λ-cocycle); the cross
/// products make {f, f} = 0 exact in floating point.
pub fn poisson_bracket(grad_f: &State9, grad_g: &State9, s: &BodyState9, lambda: f64) -> f64 {
    poisson_bracket_expanded(grad_f, grad_g, s, lambda)
}

/// The bracket through the structure matrix, ∇fᵀ𝒥∇g (cross-check route).
pub fn poisson_bracket_matrix(grad_f: &State9, grad_g: &State9, s: &BodyState9, lambda: f64) -> f64 {
    (structure_matrix(s, lambda) * grad_g).dot(grad_f)
}

/// The four-term expression: the Kirchhoff part plus the semidirect
/// field-evolution term and the λ-cocycle.
pub fn poisson_bracket_expanded(grad_f: &State9, grad_g: &State9, s: &BodyState9, lambda: f64) -> f64 {
    let fm = Vector3::new(grad_f[0], grad_f[1], grad_f[2]);
    let fn_ = Vector3::new(grad_f[3], grad_f[4], grad_f[5]);
    let fe = Vector3::new(grad_f[6], grad_f[7], grad_f[8]);
    let gm = Vector3::new(grad_g[0], grad_g[1], grad_g[2]);
    let gn = Vector3::new(grad_g[3], grad_g[4], grad_g[5]);
    let ge = Vector3::new(grad_g[6], grad_g[7], grad_g[8]);

    -s.m.dot(&fm.cross(&gm))
        - s.n.dot(&(fm.cross(&gn) + fn_.cross(&gm)))
        - s.e3.dot(&(fm.cross(&ge) + fe.cross(&gm)))
        - lambda * s.e3.dot(&fn_.cross(&gn))
}

/// The three Casimirs (C₁, C₂, C₃).
pub fn casimirs(s: &BodyState9, lambda: f64) -> (f64, f64, f64) {
    (
        0.5 * s.n.dot(&s.n) + lambda * s.m.dot(&s.e3),
        s.e3.dot(&s.n),
        s.e3.dot(&s.e3),
    )
}

/// Gradients of the Casimirs, for annihilation checks.
pub fn grad_casimirs(s: &BodyState9, lambda: f64) -> [State9; 3] {
    let mut g1 = State9::zeros();
    g1.fixed_rows_mut::<3>(0).copy_from(&(s.e3 * lambda));
    g1.fixed_rows_mut::<3>(3).copy_from(&s.n);
    g1.fixed_rows_mut::<3>(6).copy_from(&(s.m * lambda));
    let mut g2 = State9::zeros();
    g2.fixed_rows_mut::<3>(3).copy_from(&s.e3);
    g2.fixed_rows_mut::<3>(6).copy_from(&s.n);
    let mut g3 = State9::zeros();
    g3.fixed_rows_mut::<3>(6).copy_from(&(s.e3 * 2.0));
    [g1, g2, g3]
}

/// First integrals I₁ = B𝗆·𝖽₃ and I₂ = 𝗇·𝗆 + Bλ𝖾₃·𝖽₃ with their validity
/// flags: I₁ needs isotropy, I₂ additionally the rigid limit.
#[derive(Debug, Clone, Copy)]
pub struct FirstIntegrals {
    pub i1: f64,
    pub i2: f64,
    pub i1_valid: bool,
    pub i2_valid: bool,
}

pub fn integrals(s: &BodyState9, p: &RodParameters) -> FirstIntegrals {
    let b = p.b1;
    FirstIntegrals {
        i1: b * s.m.z,
        i2: s.n.dot(&s.m) + b * p.lambda * s.e3.z,
        i1_valid: p.is_isotropic(),
        i2_valid: p.is_isotropic() && p.is_rigid(),
    }
}

/// ∂𝒥/∂x_l for the state-linear structure matrix: the matrix built from the
/// l-th unit state (λ only enters the constant-in-state λ·hat(𝖾₃) block,
/// which is linear in 𝖾₃ and therefore covered the same way).
pub fn structure_matrix_derivative(l: usize, lambda: f64) -> Matrix9 {
    let mut unit = State9::zeros();
    unit[l] = 1.0;
    structure_matrix(&BodyState9::from_vector(&unit), lambda)
}

/// Jacobi identity defect Σ_l (𝒥_il ∂𝒥_jk/∂x_l + 𝒥_jl ∂𝒥_ki/∂x_l
/// + 𝒥_kl ∂𝒥_ij/∂x_l); identically zero for a Poisson structure.
pub fn jacobi_defect(i: usize, j: usize, k: usize, s: &BodyState9, lambda: f64) -> f64 {
    assert!(i < 9 && j < 9 && k < 9, "coordinate indices must lie in 0..9");
    let jm = structure_matrix(s, lambda);
    let mut defect = 0.0;
    for l in 0..9 {
        let d = structure_matrix_derivative(l, lambda);
        defect += jm[(i, l)] * d[(j, k)] + jm[(j, l)] * d[(k, i)] + jm[(k, l)] * d[(i, j)];
    }
    defect
}

/// Arclength derivative matrix of `vector_field9` (the field is quadratic,
/// so central differences with any modest step are exact to rounding).
pub fn jacobian9(s: &BodyState9, p: &RodParameters) -> Matrix9 {
    let x = s.to_vector();
    let mut jac = Matrix9::zeros();
    let h = 1e-3;
    for col in 0..9 {
        let mut xp = x;
        let mut xm = x;
        xp[col] += h;
        xm[col] -= h;
        let fp = vector_field9(&BodyState9::from_vector(&xp), p).to_vector();
        let fm = vector_field9(&BodyState9::from_vector(&xm), p).to_vector();
        jac.set_column(col, &((fp - fm) / (2.0 * h)));
    }
    jac
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;
    use rand::SeedableRng;

    fn rng() -> rand_chacha::ChaCha8Rng {
        rand_chacha::ChaCha8Rng::seed_from_u64(42)
    }

    fn random_state(r: &mut impl Rng) -> BodyState9 {
        let v = |r: &mut dyn FnMut() -> f64| Vector3::new(r(), r(), r());
        let mut draw = || r.gen_range(-2.0..2.0);
        BodyState9::new(v(&mut draw), v(&mut draw), v(&mut draw))
    }

    fn random_grad(r: &mut impl Rng) -> State9 {
        State9::from_fn(|_, _| r.gen_range(-2.0..2.0))
    }

    fn test_params() -> RodParameters {
        RodParameters::isotropic_elastic(1.0, 1.3, 2.0, 4.0, 0.3, 0.7, 1.1, 1.7)
    }

    #[test]
    fn structure_matrix_zero_state_is_zero() {
        let s = BodyState9::new(Vector3::zeros(), Vector3::zeros(), Vector3::zeros());
        assert_eq!(structure_matrix(&s, 1.5), Matrix9::zeros());
    }

    #[test]
    fn structure_matrix_exactly_antisymmetric() {
        let mut r = rng();
        for _ in 0..100 {
            let s = random_state(&mut r);
            let j = structure_matrix(&s, r.gen_range(-2.0..2.0));
            assert_eq!(j.transpose(), -j);
        }
    }

    #[test]
    fn lambda_zero_clears_force_force_block() {
        let mut r = rng();
        let s = random_state(&mut r);
        let j = structure_matrix(&s, 0.0);
        assert_eq!(j.fixed_view::<3, 3>(3, 3).clone_owned(), Matrix3::zeros());
    }

    #[test]
    fn hamiltonian_unstressed_state_is_zero() {
        let p = test_params();
        let s = BodyState9::new(Vector3::zeros(), Vector3::zeros(), Vector3::new(0.0, 0.0, 1.0));
        assert_eq!(hamiltonian9(&s, &p), 0.0);
    }

    #[test]
    fn hamiltonian_rigid_direct_value() {
        let p = RodParameters::isotropic_rigid(1.0, 1.0, 0.0, 0.5, 1.0, 1.0);
        let s = BodyState9::new(Vector3::new(0.0, 0.0, 1.0), Vector3::new(0.0, 0.0, 2.0), Vector3::z());
        assert!((hamiltonian9(&s, &p) - 2.5).abs() < 1e-15);
    }

    #[test]
    fn hamiltonian_independent_of_e3() {
        let p = test_params();
        let mut r = rng();
        let s = random_state(&mut r);
        let mut s2 = s;
        s2.e3 = Vector3::new(9.0, -3.0, 0.5);
        assert_eq!(hamiltonian9(&s, &p), hamiltonian9(&s2, &p));
    }

    #[test]
    fn straight_twisted_aligned_rod_is_equilibrium() {
        let p = test_params();
        let s = BodyState9::new(
            Vector3::new(0.0, 0.0, 1.7),
            Vector3::new(0.0, 0.0, -0.4),
            Vector3::new(0.0, 0.0, 1.0),
        );
        let rate = vector_field9(&s, &p);
        assert_eq!(rate.m, Vector3::zeros());
        assert_eq!(rate.n, Vector3::zeros());
        assert_eq!(rate.e3, Vector3::zeros());
    }

    #[test]
    fn lambda_zero_force_precesses_only() {
        let mut p = test_params();
        p.lambda = 0.0;
        let mut r = rng();
        let s = random_state(&mut r);
        let (u, _) = strains_of_state(&s, &p);
        let rate = vector_field9(&s, &p);
        assert!((rate.n - s.n.cross(&u)).norm() < 1e-15);
    }

    #[test]
    fn vector_field_matches_structure_matrix_route() {
        let p = test_params();
        let mut r = rng();
        for _ in 0..200 {
            let s = random_state(&mut r);
            let direct = vector_field9(&s, &p).to_vector();
            let via_matrix = structure_matrix(&s, p.lambda) * grad_hamiltonian9(&s, &p);
            assert!((direct - via_matrix).norm() < 1e-12, "mismatch {:.3e}", (direct - via_matrix).norm());
        }
    }

    #[test]
    fn analytic_gradient_matches_finite_differences() {
        let p = test_params();
        let mut r = rng();
        for _ in 0..100 {
            let s = random_state(&mut r);
            let g = grad_hamiltonian9(&s, &p);
            let x = s.to_vector();
            let h = 1e-6;
            for i in 0..9 {
                let mut xp = x;
                let mut xm = x;
                xp[i] += h;
                xm[i] -= h;
                let fd = (hamiltonian9(&BodyState9::from_vector(&xp), &p)
                    - hamiltonian9(&BodyState9::from_vector(&xm), &p))
                    / (2.0 * h);
                let scale = 1.0 + g[i].abs();
                assert!((fd - g[i]).abs() / scale < 1e-6);
            }
        }
    }

    #[test]
    fn bracket_of_function_with_itself_vanishes() {
        let mut r = rng();
        let s = random_state(&mut r);
        let g = random_grad(&mut r);
        assert_eq!(poisson_bracket(&g, &g, &s, 0.9), 0.0);
    }

    #[test]
    fn bracket_matrix_and_expanded_forms_agree() {
        let mut r = rng();
        for _ in 0..300 {
            let s = random_state(&mut r);
            let f = random_grad(&mut r);
            let g = random_grad(&mut r);
            let lambda = r.gen_range(-2.0..2.0);
            let a = poisson_bracket_matrix(&f, &g, &s, lambda);
            let b = poisson_bracket_expanded(&f, &g, &s, lambda);
            assert!((a - b).abs() < 1e-13 * (1.0 + a.abs()), "matrix {a} vs expanded {b}");
        }
    }

    #[test]
    fn casimir_hamiltonian_bracket_vanishes() {
        let p = test_params();
        let mut r = rng();
        for _ in 0..200 {
            let s = random_state(&mut r);
            let gh = grad_hamiltonian9(&s, &p);
            for gc in grad_casimirs(&s, p.lambda) {
                let b = poisson_bracket(&gc, &gh, &s, p.lambda);
                assert!(b.abs() < 1e-12, "casimir bracket {b:.3e}");
            }
        }
    }

    #[test]
    fn casimir_values_direct_formula() {
        let s = BodyState9::new(Vector3::zeros(), Vector3::new(0.0, 0.0, 2.0), Vector3::new(0.1, 0.2, 0.7));
        let (c1, c2, c3) = casimirs(&s, 0.0);
        assert!((c1 - 2.0).abs() < 1e-15);
        assert!((c2 - 1.4).abs() < 1e-15);
        assert!((c3 - (0.01 + 0.04 + 0.49)).abs() < 1e-15);
    }

    #[test]
    fn unit_e3_gives_unit_third_casimir() {
        let s = BodyState9::new(Vector3::zeros(), Vector3::zeros(), Vector3::z());
        assert_eq!(casimirs(&s, 2.0).2, 1.0);
    }

    #[test]
    fn structure_matrix_annihilates_casimir_gradients() {
        let mut r = rng();
        for _ in 0..1000 {
            let s = random_state(&mut r);
            let lambda = r.gen_range(-2.0..2.0);
            let jm = structure_matrix(&s, lambda);
            for gc in grad_casimirs(&s, lambda) {
                let v = jm * gc;
                assert!(v.norm() < 1e-12, "J grad C = {:.3e}", v.norm());
            }
        }
    }

    #[test]
    fn integrals_direct_values() {
        let p = RodParameters::isotropic_rigid(2.0, 1.0, 0.0, 0.5, 1.0, 3.0);
        let s = BodyState9::new(Vector3::new(0.0, 0.0, 3.0), Vector3::new(0.2, 0.1, -0.5), Vector3::z());
        let ints = integrals(&s, &p);
        assert_eq!(ints.i1, 6.0);
        assert!(ints.i1_valid && ints.i2_valid);
        // lambda = 0: I2 reduces to n·m.
        assert_eq!(ints.i2, s.n.dot(&s.m));
    }

    #[test]
    fn integral_validity_flags() {
        let aniso = RodParameters::elastic(1.0, 1.2, 1.0, 2.0, 2.0, 2.0, 0.1, 0.5, 1.0, 1.0).unwrap();
        let mut r = rng();
        let s = random_state(&mut r);
        let ints = integrals(&s, &aniso);
        assert!(!ints.i1_valid && !ints.i2_valid);

        let iso_elastic = test_params();
        let ints = integrals(&s, &iso_elastic);
        assert!(ints.i1_valid && !ints.i2_valid);
    }

    #[test]
    fn jacobi_defect_degenerate_triples_vanish() {
        let mut r = rng();
        let s = random_state(&mut r);
        for i in 0..9 {
            for k in 0..9 {
                let d = jacobi_defect(i, i, k, &s, 1.3);
                assert!(d.abs() < 1e-13, "defect({i},{i},{k}) = {d:.3e}");
            }
        }
    }

    #[test]
    fn jacobi_identity_holds_for_all_triples() {
        let mut r = rng();
        for _ in 0..5 {
            let s = random_state(&mut r);
            let lambda = r.gen_range(-2.0..2.0);
            for i in 0..9 {
                for j in (i + 1)..9 {
                    for k in (j + 1)..9 {
                        let d = jacobi_defect(i, j, k, &s, lambda);
                        assert!(d.abs() < 1e-12, "defect({i},{j},{k}) = {d:.3e}");
                    }
                }
            }
        }
    }

    #[test]
    fn jacobi_identity_kirchhoff_subcase() {
        let mut r = rng();
        let s = random_state(&mut r);
        for i in 0..9 {
            for j in (i + 1)..9 {
                for k in (j + 1)..9 {
                    assert!(jacobi_defect(i, j, k, &s, 0.0).abs() < 1e-12);
                }
            }
        }
    }

    #[test]
    fn jacobian_matches_field_differences() {
        // The field is quadratic so two very different steps must agree.
        let p = test_params();
        let mut r = rng();
        let s = random_state(&mut r);
        let j1 = jacobian9(&s, &p);
        let x = s.to_vector();
        let h = 1e-7;
        for col in 0..9 {
            let mut xp = x;
            let mut xm = x;
            xp[col] += h;
            xm[col] -= h;
            let fd = (vector_field9(&BodyState9::from_vector(&xp), &p).to_vector()
                - vector_field9(&BodyState9::from_vector(&xm), &p).to_vector())
                / (2.0 * h);
            assert!((j1.column(col) - fd).norm() < 1e-6);
        }
    }
}
