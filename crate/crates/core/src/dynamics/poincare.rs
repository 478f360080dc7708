//! Poincaré sections with plane of section sinψ = 0, crossings polished on
//! the dense output.

use crate::canonical::{hamiltonian_nondim, vector_field4, CanonicalState, LevelSpec, State4};
use crate::error::{Result, RodError};
use crate::ode::{refine_root, Dop853, IntegratorConfig};

/// One section crossing: time, the (θ, p̄_θ) pair and the sign of cosψ
/// distinguishing the ψ ≡ 0 and ψ ≡ π branches.
#[derive(Debug, Clone, Copy)]
pub struct Crossing {
    pub t: f64,
    pub theta: f64,
    pub p_theta: f64,
    pub cos_psi_sign: i8,
}

/// A section run with its drift diagnostic.
#[derive(Debug, Clone)]
pub struct SectionDataset {
    pub params: crate::params::DimensionlessParameters,
    pub h: f64,
    pub initial: CanonicalState,
    pub crossings: Vec<Crossing>,
    /// max |H − h| observed at step ends and crossings.
    pub drift: f64,
    /// Time reached when the run stopped.
    pub t_end: f64,
}

/// Records crossings of sinψ = 0 (both branches, both directions) until
/// `n_crossings` are found or `t_budget` is exhausted. The initial state
/// must already satisfy |H − h| < 1e-12.
pub fn poincare_section(
    y0: &CanonicalState,
    spec: &LevelSpec,
    n_crossings: usize,
    t_budget: f64,
    cfg: &IntegratorConfig,
) -> Result<SectionDataset> {
    let dp = spec.params;
    let h0 = hamiltonian_nondim(y0, &dp)?;
    if (h0 - spec.h).abs() >= 1e-12 {
        return Err(RodError::InvalidParameter(format!(
            "initial state off the level set: |H - h| = {:.3e}",
            (h0 - spec.h).abs()
        )));
    }

    let field = move |_t: f64, y: &State4| vector_field4(&CanonicalState::from_vector(y), &dp);
    let mut cfg_run = *cfg;
    cfg_run.dense_output = true;
    // A crossing takes at least ~π/ω₀ ≳ 3 time units; a unit cap on the
    // step keeps the sign sampling from skipping a full half-turn of ψ.
    cfg_run.max_step = cfg_run.max_step.min(1.0);
    let mut stepper = Dop853::new(field, 0.0, y0.to_vector(), &cfg_run)?;

    let mut crossings = Vec::with_capacity(n_crossings);
    let mut drift = 0.0f64;
    let record_drift = |y: &State4, drift: &mut f64| {
        if let Ok(h) = hamiltonian_nondim(&CanonicalState::from_vector(y), &dp) {
            *drift = drift.max((h - spec.h).abs());
        }
    };

    const INTERIOR_SAMPLES: usize = 8;
    while crossings.len() < n_crossings && stepper.t() < t_budget {
        if !stepper.advance(t_budget)? {
            break;
        }
        record_drift(stepper.y(), &mut drift);

        let ta = stepper.t_old();
        let tb = stepper.t();
        let mut prev_t = ta;
        let mut prev_g = stepper.y_old()[1].sin();
        for i in 1..=INTERIOR_SAMPLES {
            let ti = if i == INTERIOR_SAMPLES {
                tb
            } else {
                ta + (tb - ta) * i as f64 / INTERIOR_SAMPLES as f64
            };
            let yi = if i == INTERIOR_SAMPLES { *stepper.y() } else { stepper.interpolate(ti) };
            let gi = yi[1].sin();
            if prev_g == 0.0 || gi.signum() != prev_g.signum() {
                let t_star = refine_root(
                    |t| stepper.interpolate(t)[1].sin(),
                    prev_t,
                    ti,
                    prev_g,
                    gi,
                    1e-13,
                    0.0,
                )?;
                let y_star = stepper.interpolate(t_star);
                if y_star[1].sin().abs() < 1e-12 {
                    crossings.push(Crossing {
                        t: t_star,
                        theta: y_star[0],
                        p_theta: y_star[2],
                        cos_psi_sign: if y_star[1].cos() >= 0.0 { 1 } else { -1 },
                    });
                    record_drift(&y_star, &mut drift);
                    if crossings.len() == n_crossings {
                        break;
                    }
                }
            }
            prev_t = ti;
            prev_g = gi;
        }
    }

    Ok(SectionDataset {
        params: dp,
        h: spec.h,
        initial: *y0,
        crossings,
        drift,
        t_end: stepper.t(),
    })
}

/// Thickness oracle for an invariant-curve section: each point is compared
/// against a local parabola fitted through its nearest neighbours (a line
/// fit would report the curve's sagitta instead of its thickness). Points
/// on a smooth closed curve score near zero; chaotic scatter does not.
pub fn max_curve_distance(points: &[(f64, f64)]) -> f64 {
    const NEIGHBORS: usize = 10;
    if points.len() < NEIGHBORS + 2 {
        return 0.0;
    }
    // Normalize scales so θ and p̄_θ weigh equally.
    let n = points.len() as f64;
    let cx = points.iter().map(|p| p.0).sum::<f64>() / n;
    let cy = points.iter().map(|p| p.1).sum::<f64>() / n;
    let mut sx = 0.0;
    let mut sy = 0.0;
    for p in points {
        sx += (p.0 - cx).powi(2);
        sy += (p.1 - cy).powi(2);
    }
    let sx = (sx / n).sqrt().max(1e-300);
    let sy = (sy / n).sqrt().max(1e-300);
    let scaled: Vec<(f64, f64)> = points.iter().map(|p| ((p.0 - cx) / sx, (p.1 - cy) / sy)).collect();
    let scale_back = sx.min(sy);

    let mut worst = 0.0f64;
    let mut dist2 = Vec::with_capacity(scaled.len());
    for (i, p) in scaled.iter().enumerate() {
        dist2.clear();
        for (j, q) in scaled.iter().enumerate() {
            if i != j {
                dist2.push(((q.0 - p.0).powi(2) + (q.1 - p.1).powi(2), j));
            }
        }
        dist2.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
        let neigh: Vec<(f64, f64)> = dist2[..NEIGHBORS].iter().map(|&(_, j)| scaled[j]).collect();

        // Principal direction of the neighbours.
        let nx = neigh.iter().map(|q| q.0).sum::<f64>() / NEIGHBORS as f64;
        let ny = neigh.iter().map(|q| q.1).sum::<f64>() / NEIGHBORS as f64;
        let (mut a, mut b, mut c) = (0.0, 0.0, 0.0);
        for q in &neigh {
            let dx = q.0 - nx;
            let dy = q.1 - ny;
            a += dx * dx;
            b += dx * dy;
            c += dy * dy;
        }
        let tr = a + c;
        let det = a * c - b * b;
        let lam_max = 0.5 * tr + (0.25 * tr * tr - det).max(0.0).sqrt();
        let (tx, ty) = if b.abs() > 1e-300 {
            let v = (lam_max - a) / b;
            let norm = (1.0 + v * v).sqrt();
            (1.0 / norm, v / norm)
        } else if a >= c {
            (1.0, 0.0)
        } else {
            (0.0, 1.0)
        };

        // Least-squares parabola y = c0 + c1 x + c2 x² in the local frame.
        let local = |q: &(f64, f64)| {
            let dx = q.0 - nx;
            let dy = q.1 - ny;
            (dx * tx + dy * ty, -dx * ty + dy * tx)
        };
        let mut s = [0.0f64; 5];
        let mut r = [0.0f64; 3];
        for q in &neigh {
            let (x, y) = local(q);
            let mut xp = 1.0;
            for k in 0..5 {
                s[k] += xp;
                if k < 3 {
                    r[k] += y * xp;
                }
                xp *= x;
            }
        }
        // Solve the 3×3 normal equations.
        let mat = [[s[0], s[1], s[2]], [s[1], s[2], s[3]], [s[2], s[3], s[4]]];
        if let Some(coef) = solve3(mat, r) {
            let (px, py) = local(p);
            let fit = coef[0] + coef[1] * px + coef[2] * px * px;
            worst = worst.max((py - fit).abs() * scale_back);
        }
    }
    worst
}

fn solve3(a: [[f64; 3]; 3], b: [f64; 3]) -> Option<[f64; 3]> {
    let m = nalgebra::Matrix3::from_fn(|i, j| a[i][j]);
    let rhs = nalgebra::Vector3::new(b[0], b[1], b[2]);
    m.lu().solve(&rhs).map(|v| [v[0], v[1], v[2]])
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::canonical::complete_state_on_level;
    use crate::params::DimensionlessParameters;

    #[test]
    fn crossings_lie_on_section_and_level() {
        let dp = DimensionlessParameters::new(1.7, 3.0, 3.0, 0.135, 0.4).unwrap();
        let spec = LevelSpec { h: 0.9, params: dp };
        let y0 = complete_state_on_level(0.1, 0.0, 0.5, &spec).unwrap();
        let cfg = IntegratorConfig::default();
        let ds = poincare_section(&y0, &spec, 50, 5_000.0, &cfg).unwrap();
        assert_eq!(ds.crossings.len(), 50);
        assert!(ds.drift < 1e-9, "drift {:.3e}", ds.drift);
        for c in &ds.crossings {
            assert!(c.cos_psi_sign == 1 || c.cos_psi_sign == -1);
        }
        // Times strictly increasing.
        for w in ds.crossings.windows(2) {
            assert!(w[1].t > w[0].t);
        }
    }

    #[test]
    fn rejects_initial_state_off_level() {
        let dp = DimensionlessParameters::new(1.7, 3.0, 3.0, 0.135, 0.4).unwrap();
        let spec = LevelSpec { h: 0.9, params: dp };
        let y0 = CanonicalState::new(0.1, 0.0, 0.5, 0.9);
        assert!(poincare_section(&y0, &spec, 10, 100.0, &IntegratorConfig::default()).is_err());
    }

    #[test]
    fn integrable_case_crossings_form_thin_curve() {
        // λ̄ = 0 keeps Ī₂: one orbit traces a closed curve in the section.
        let dp = DimensionlessParameters::new(1.7, 3.0, 3.0, 0.0, 0.4).unwrap();
        let spec = LevelSpec { h: 0.9, params: dp };
        let y0 = complete_state_on_level(0.9, std::f64::consts::FRAC_PI_2, 0.3, &spec).unwrap();
        let ds = poincare_section(&y0, &spec, 400, 40_000.0, &IntegratorConfig::default()).unwrap();
        let pts: Vec<(f64, f64)> = ds
            .crossings
            .iter()
            .filter(|c| c.cos_psi_sign > 0)
            .map(|c| (c.theta, c.p_theta))
            .collect();
        assert!(pts.len() > 100);
        let d = max_curve_distance(&pts);
        assert!(d < 1e-3, "curve thickness {d:.3e}");
    }

    #[test]
    fn curve_distance_flags_scatter() {
        // A filled disc is no curve.
        let mut pts = Vec::new();
        let mut seed = 1u64;
        let mut rand = || {
            seed = seed.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            (seed >> 11) as f64 / (1u64 << 53) as f64
        };
        for _ in 0..400 {
            pts.push((rand(), rand()));
        }
        assert!(max_curve_distance(&pts) > 1e-2);
    }
}
