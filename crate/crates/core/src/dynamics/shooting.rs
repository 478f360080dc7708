//! Reversibility-based shooting for multipulse homoclinic orbits.
//!
//! The asymptotic state is the straight rod aligned with the field, which
//! is a fixed point of the body-frame system on the Casimir family
//! μ = 2λ̄ (the alignment radicand vanishes exactly at the saddle; both
//! figure-parameter sets sit on this family). Trajectories are launched a
//! small opening angle θ₀ away from the saddle on the asymptotic cone —
//! parametrized by the azimuthal phase ψ₀ and the cone ratio
//! ŵ = (1 − p̄_ψ)/θ₀² — and steered by a damped Newton iteration in
//! (ψ₀, flight time) onto the reversor's fixed set
//! {m₂ = n₂ = e₃₂ = 0 after twist gauge fixing}. The full orbit is the
//! trajectory glued to its reversor image.

use nalgebra::Vector3;

use crate::canonical::{canonical_to_noncanonical, CanonicalState};
use crate::dynamics::saddle::{reversor9, rotate_about_d3, saddle_local_chart};
use crate::error::{Result, RodError};
use crate::noncanonical::{vector_field9, BodyState9, State9};
use crate::ode::{refine_root, Dop853, IntegratorConfig};
use crate::params::{DimensionlessParameters, RodParameters};

/// One exported trajectory sample in reduced coordinates. ψ is reconstructed
/// from the force direction and is NaN where the chart degenerates
/// (far tails, where the force aligns with the field).
#[derive(Debug, Clone, Copy)]
pub struct MultipulseSample {
    pub t: f64,
    pub theta: f64,
    pub psi: f64,
    pub p_theta: f64,
    pub p_psi: f64,
}

/// A converged symmetric multipulse orbit.
#[derive(Debug, Clone)]
pub struct MultipulseOrbit {
    pub dp: DimensionlessParameters,
    pub pulse_count: usize,
    pub samples: Vec<MultipulseSample>,
    /// sup-norm mismatch between the continued trajectory and its reversor
    /// image past the symmetric point.
    pub reversor_residual: f64,
    /// Distance to the saddle at the assembled trajectory ends.
    pub saddle_residual: f64,
    /// Launch phase and half flight time of the converged solution.
    pub psi0: f64,
    pub t_half: f64,
    pub w_hat: f64,
    pub theta_peak: f64,
}

/// Diagnostics of a shooting search.
#[derive(Debug, Clone, Default)]
pub struct ShootingReport {
    pub scanned: usize,
    pub brackets: Vec<(usize, f64, f64)>,
}

#[derive(Debug, Clone, Copy)]
pub struct ShootOptions {
    pub theta_launch: f64,
    pub scan_points: usize,
    pub rtol_scan: f64,
    pub rtol_final: f64,
    /// Cap on pulse index tracked during scans.
    pub max_pulse_index: usize,
}

impl Default for ShootOptions {
    fn default() -> Self {
        Self {
            theta_launch: 3e-4,
            scan_points: 180,
            rtol_scan: 1e-9,
            rtol_final: 1e-12,
            max_pulse_index: 5,
        }
    }
}

/// Energy of the aligned saddle, H̄ → (1 + γ/2 − δλ̄)/m².
pub fn saddle_energy(dp: &DimensionlessParameters) -> f64 {
    (1.0 + dp.gamma / 2.0 - dp.delta * dp.lambda_bar) / (dp.m * dp.m)
}

fn require_aligned_family(dp: &DimensionlessParameters) -> Result<()> {
    if (dp.mu - 2.0 * dp.lambda_bar).abs() > 1e-9 * (1.0 + dp.lambda_bar.abs()) {
        return Err(RodError::InvalidParameter(format!(
            "multipulse shooting targets homoclinics to the aligned rod, which requires mu = 2 lambda_bar; got mu = {}, lambda_bar = {}",
            dp.mu, dp.lambda_bar
        )));
    }
    Ok(())
}

/// Launch state at opening angle θ₀: p̄_ψ = 1 − ŵθ₀², p̄_θ from the saddle
/// energy. Evaluated in forms that avoid 1 − cosθ cancellation.
fn launch_state(
    dp: &DimensionlessParameters,
    gauge: &RodParameters,
    psi0: f64,
    w_hat: f64,
    theta0: f64,
) -> Result<State9> {
    let m2 = dp.m * dp.m;
    let (st, ct) = theta0.sin_cos();
    let sh = (0.5 * theta0).sin();
    let w = w_hat * theta0 * theta0;
    let p_psi = 1.0 - w;
    let cpsi = psi0.cos();

    // Alignment radicand on the μ = 2λ̄ family: μ − 2λ̄p̄_ψ = 2λ̄w exactly.
    let rad = 2.0 * dp.lambda_bar * w;
    let sq = rad.max(0.0).sqrt();

    let a = (2.0 * sh * sh - w) / st;
    // h_sad − H(θ₀, ψ₀, 0, p̄_ψ) assembled from small differences:
    // (1 − cosθ)/m² = 2sin²(θ/2)/m², γ(1 − cos²θ)/(2m²) = γsin²θ/(2m²).
    let deficit = (2.0 * sh * sh + dp.gamma * st * st / 2.0 - dp.delta * dp.lambda_bar * w) / m2
        - 0.5 * a * a
        - (dp.gamma * ct + 1.0) * st * cpsi * sq / m2
        - dp.gamma * st * st * cpsi * cpsi * rad / (2.0 * m2);
    if deficit < 0.0 {
        return Err(RodError::ParameterRange(format!(
            "launch at psi0 = {psi0}, w_hat = {w_hat} has negative kinetic deficit {deficit:.3e}"
        )));
    }
    let p_theta = (2.0 * deficit).sqrt();
    let state = CanonicalState::new(theta0, psi0, p_theta, p_psi);
    Ok(canonical_to_noncanonical(&state, 0.0, dp, gauge.c1, gauge.c2, gauge.lambda)?.to_vector())
}

/// Cone ratio ŵ(ψ₀) of the asymptotic family at quadratic order: root of
/// ½(½−ŵ)² − ⅛ + (1+γ)cosψ₀ √(2λ̄ŵ)/m² + δλ̄ŵ/m² = 0 (ŵ = 0 is the
/// degenerate sheet). The value only seeds the launch; a backward-distance
/// polish refines it.
fn cone_ratio(dp: &DimensionlessParameters, psi0: f64) -> f64 {
    if dp.lambda_bar == 0.0 {
        return 0.0;
    }
    let m2 = dp.m * dp.m;
    let cpsi = psi0.cos();
    let g = |w: f64| {
        0.5 * (0.5 - w) * (0.5 - w) - 0.125
            + (1.0 + dp.gamma) * cpsi * (2.0 * dp.lambda_bar * w).sqrt() / m2
            + dp.delta * dp.lambda_bar * w / m2
    };
    let mut prev = 1e-9;
    let mut gprev = g(prev);
    let mut best: Option<f64> = None;
    let mut w = prev;
    while w < 6.0 {
        w += 0.005;
        let gw = g(w);
        if gprev.signum() != gw.signum() {
            let mut lo = prev;
            let mut hi = w;
            for _ in 0..60 {
                let mid = 0.5 * (lo + hi);
                if g(lo) * g(mid) <= 0.0 {
                    hi = mid;
                } else {
                    lo = mid;
                }
            }
            best = Some(0.5 * (lo + hi));
            break;
        }
        prev = w;
        gprev = gw;
    }
    best.unwrap_or(0.25)
}

/// Gauge-fixed residual pair (m₂*, n₂*): the twist rotation is chosen to
/// put the transverse part of e₃ on the −x axis; m₂* then equals the
/// dimensional p_θ and n₂* encodes −S̃ sinψ.
pub fn symmetric_residuals(x: &State9) -> (f64, f64) {
    let (ex, ey) = (x[6], x[7]);
    let r = ex.hypot(ey).max(1e-300);
    let m2 = (ey * x[0] - ex * x[1]) / r;
    let n2 = (ey * x[3] - ex * x[4]) / r;
    (m2, n2)
}

fn theta_of(x: &State9) -> f64 {
    x[8].clamp(-1.0, 1.0).acos()
}

fn gauge_fix_angle(x: &State9) -> f64 {
    // χ with rot(χ)·(e3x, e3y) = (−sinθ, 0).
    std::f64::consts::PI - x[7].atan2(x[6])
}

struct BodyFlow {
    gauge: RodParameters,
    m: f64,
}

impl BodyFlow {
    fn new(dp: &DimensionlessParameters) -> Self {
        Self { gauge: dp.standard_gauge(), m: dp.m }
    }

    fn field(&self) -> impl Fn(f64, &State9) -> Result<State9> + '_ {
        move |_t, y| Ok(vector_field9(&BodyState9::from_vector(y), &self.gauge).to_vector() / self.m)
    }
}

#[derive(Debug, Clone, Copy)]
struct SectionHit {
    index: usize,
    t: f64,
    n2: f64,
}

/// Times of the successive zeros of m₂* (θ-extrema) along the forward
/// trajectory, with the companion residual n₂* at each.
fn forward_hits(
    flow: &BodyFlow,
    x0: &State9,
    max_hits: usize,
    t_cap: f64,
    cfg: &IntegratorConfig,
) -> Result<Vec<SectionHit>> {
    let mut stepper = Dop853::new(flow.field(), 0.0, *x0, cfg)?;
    let mut hits = Vec::new();
    const SAMPLES: usize = 8;
    while hits.len() < max_hits && stepper.t() < t_cap {
        if !stepper.advance(t_cap)? {
            break;
        }
        let ta = stepper.t_old();
        let tb = stepper.t();
        let mut prev_t = ta;
        let mut prev_g = symmetric_residuals(stepper.y_old()).0;
        for i in 1..=SAMPLES {
            let ti = if i == SAMPLES { tb } else { ta + (tb - ta) * i as f64 / SAMPLES as f64 };
            let yi = if i == SAMPLES { *stepper.y() } else { stepper.interpolate(ti) };
            let gi = symmetric_residuals(&yi).0;
            if prev_g.signum() != gi.signum() && prev_g != 0.0 {
                let t_star = refine_root(
                    |t| symmetric_residuals(&stepper.interpolate(t)).0,
                    prev_t,
                    ti,
                    prev_g,
                    gi,
                    1e-13,
                    1e-13,
                )?;
                let y_star = stepper.interpolate(t_star);
                let (_, n2) = symmetric_residuals(&y_star);
                hits.push(SectionHit { index: hits.len() + 1, t: t_star, n2 });
                if hits.len() == max_hits {
                    break;
                }
            }
            prev_t = ti;
            prev_g = gi;
        }
    }
    Ok(hits)
}

fn endpoint_residuals(flow: &BodyFlow, x0: &State9, t_end: f64, cfg: &IntegratorConfig) -> Result<(f64, f64)> {
    let mut stepper = Dop853::new(flow.field(), 0.0, *x0, cfg)?;
    stepper.integrate_to(t_end)?;
    Ok(symmetric_residuals(stepper.y()))
}

/// Backward run toward the saddle; returns the closest approach and its
/// (positive) backward time, scanning dense output inside each step.
fn backward_dip(flow: &BodyFlow, x0: &State9, x_star: &State9, t_back: f64, cfg: &IntegratorConfig) -> Result<(f64, f64)> {
    let mut stepper = Dop853::new(flow.field(), 0.0, *x0, cfg)?;
    let mut best = ((x0 - x_star).norm(), 0.0);
    while stepper.advance(-t_back)? {
        for i in 1..=6 {
            let ti = stepper.t_old() + (stepper.t() - stepper.t_old()) * i as f64 / 6.0;
            let yi = if i == 6 { *stepper.y() } else { stepper.interpolate(ti) };
            let d = (yi - x_star).norm();
            if d < best.0 {
                best = (d, -ti);
            }
        }
    }
    Ok(best)
}

/// States of the trajectory through `x0` at the requested times (all of one
/// sign, sorted by increasing |t|).
fn sample_trajectory(flow: &BodyFlow, x0: &State9, times: &[f64], cfg: &IntegratorConfig) -> Result<Vec<State9>> {
    let mut out = Vec::with_capacity(times.len());
    let mut stepper = Dop853::new(flow.field(), 0.0, *x0, cfg)?;
    for &t in times {
        stepper.integrate_to(t)?;
        out.push(*stepper.y());
    }
    Ok(out)
}

/// Launch map used by the final polish: for each ψ₀ the cone ratio is
/// refined by minimizing the backward closest approach to the saddle, so
/// the launch point sits on the asymptotic set to the precision the
/// backward flow can certify.
struct LaunchSolver<'a> {
    dp: &'a DimensionlessParameters,
    flow: &'a BodyFlow,
    theta0: f64,
    x_star: State9,
    t_back: f64,
    cfg_back: IntegratorConfig,
    w_seed: std::cell::Cell<f64>,
    window: std::cell::Cell<f64>,
}

impl<'a> LaunchSolver<'a> {
    fn new(dp: &'a DimensionlessParameters, flow: &'a BodyFlow, theta0: f64, w_seed: f64, sigma: f64) -> Self {
        let x_star = BodyState9::new(
            Vector3::new(0.0, 0.0, flow.gauge.m3),
            Vector3::new(0.0, 0.0, flow.gauge.c2),
            Vector3::new(0.0, 0.0, 1.0),
        )
        .to_vector();
        Self {
            dp,
            flow,
            theta0,
            x_star,
            t_back: 25.0 / sigma,
            cfg_back: IntegratorConfig { rtol: 1e-12, atol: 1e-14, dense_output: true, ..Default::default() },
            w_seed: std::cell::Cell::new(w_seed),
            window: std::cell::Cell::new(0.4),
        }
    }

    fn dip(&self, psi0: f64, w: f64) -> f64 {
        launch_state(self.dp, &self.flow.gauge, psi0, w, self.theta0)
            .and_then(|x0| backward_dip(self.flow, &x0, &self.x_star, self.t_back, &self.cfg_back))
            .map(|(d, _)| d)
            .unwrap_or(f64::INFINITY)
    }

    /// Launch state on the cone at phase ψ₀, with the certified closest
    /// backward approach: a coarse ŵ-grid locates the dip basin (the
    /// landscape can pin to the ŵ = 0 boundary), golden-section refines it.
    fn launch(&self, psi0: f64) -> Result<(State9, f64, f64)> {
        if self.dp.lambda_bar == 0.0 {
            let x0 = launch_state(self.dp, &self.flow.gauge, psi0, 0.0, self.theta0)?;
            let (d, _) = backward_dip(self.flow, &x0, &self.x_star, self.t_back, &self.cfg_back)?;
            return Ok((x0, 0.0, d));
        }

        // Candidate grid: zero, a geometric ladder, and the warm seed.
        let mut grid = vec![0.0];
        let mut w = 2.5e-4;
        while w < 3.0 {
            grid.push(w);
            w *= 2.0;
        }
        let seed = self.w_seed.get();
        let span = self.window.get();
        for k in -2i32..=2 {
            let cand = seed + k as f64 * span / 2.0;
            if cand >= 0.0 {
                grid.push(cand);
            }
        }
        grid.sort_by(|a, b| a.partial_cmp(b).unwrap());
        grid.dedup();

        let mut best = (f64::INFINITY, 0.0);
        let mut vals = Vec::with_capacity(grid.len());
        for &w in &grid {
            let d = self.dip(psi0, w);
            vals.push(d);
            if d < best.0 {
                best = (d, w);
            }
        }
        let idx = grid.iter().position(|&w| w == best.1).unwrap();
        let mut lo = if idx == 0 { 0.0 } else { grid[idx - 1] };
        let mut hi = if idx + 1 < grid.len() { grid[idx + 1] } else { grid[idx] * 2.0 + 1e-3 };

        const INV_PHI: f64 = 0.6180339887498949;
        let mut x1 = hi - (hi - lo) * INV_PHI;
        let mut x2 = lo + (hi - lo) * INV_PHI;
        let mut f1 = self.dip(psi0, x1);
        let mut f2 = self.dip(psi0, x2);
        for _ in 0..45 {
            if f1 < f2 {
                hi = x2;
                x2 = x1;
                f2 = f1;
                x1 = hi - (hi - lo) * INV_PHI;
                f1 = self.dip(psi0, x1);
            } else {
                lo = x1;
                x1 = x2;
                f1 = f2;
                x2 = lo + (hi - lo) * INV_PHI;
                f2 = self.dip(psi0, x2);
            }
        }
        let w = 0.5 * (lo + hi);
        let d_end = self.dip(psi0, w);
        let (w, d_final) = if d_end <= best.0 { (w, d_end) } else { (best.1, best.0) };

        self.w_seed.set(w);
        self.window.set((hi - lo).max(1e-6) * 8.0);
        let x0 = launch_state(self.dp, &self.flow.gauge, psi0, w, self.theta0)?;
        Ok((x0, w, d_final))
    }
}

/// The k-th θ-extremum hit along the forward trajectory from the on-cone
/// launch at phase ψ₀. Fixing T at the root-refined m₂* zero satisfies one
/// symmetric-section condition by construction; n₂* at that hit is the
/// remaining shooting function of ψ₀.
fn kth_hit_on_cone(
    launcher: &LaunchSolver<'_>,
    flow: &BodyFlow,
    psi0: f64,
    k: usize,
    t_cap: f64,
    cfg: &IntegratorConfig,
) -> Result<SectionHit> {
    let (x0, _, _) = launcher.launch(psi0)?;
    let hits = forward_hits(flow, &x0, k, t_cap, cfg)?;
    hits.into_iter()
        .find(|h| h.index == k)
        .ok_or_else(|| RodError::RootNotFound(format!("no section hit of index {k} within t = {t_cap}")))
}

/// Bisection of n₂*(ψ₀) over a bracket, with the bracket re-validated (and
/// re-scanned locally if necessary) under on-cone launches.
#[allow(clippy::too_many_arguments)]
fn bisect_polish(
    launcher: &LaunchSolver<'_>,
    flow: &BodyFlow,
    pulse_target: usize,
    psi_lo: f64,
    psi_hi: f64,
    t_cap: f64,
    cfg: &IntegratorConfig,
) -> Result<(f64, SectionHit)> {
    let f = |psi0: f64| kth_hit_on_cone(launcher, flow, psi0, pulse_target, t_cap, cfg);

    // The scan bracket came from cheap off-cone launches; allow the root to
    // have shifted by a few widths.
    let width = (psi_hi - psi_lo).max(1e-3);
    let scan_lo = psi_lo - 2.0 * width;
    let scan_hi = psi_hi + 2.0 * width;
    let n_scan = 12;
    let mut prev: Option<(f64, SectionHit)> = None;
    let mut bracket = None;
    for i in 0..=n_scan {
        let psi = scan_lo + (scan_hi - scan_lo) * i as f64 / n_scan as f64;
        let Ok(hit) = f(psi) else {
            prev = None;
            continue;
        };
        if let Some((psi_prev, hit_prev)) = prev {
            if hit_prev.n2.signum() != hit.n2.signum() {
                bracket = Some((psi_prev, hit_prev, psi, hit));
                break;
            }
        }
        prev = Some((psi, hit));
    }
    let (mut lo, mut hit_lo, mut hi, mut hit_hi) = bracket.ok_or_else(|| {
        RodError::NoSignChange(format!("on-cone launches lose the {pulse_target}-pulse bracket near psi0 = {psi_lo}"))
    })?;

    for _ in 0..60 {
        let mid = 0.5 * (lo + hi);
        let hit = f(mid)?;
        if hit.n2.abs() < 1e-11 || (hi - lo) < 1e-14 {
            return Ok((mid, hit));
        }
        if hit.n2.signum() == hit_lo.n2.signum() {
            lo = mid;
            hit_lo = hit;
        } else {
            hi = mid;
            hit_hi = hit;
        }
    }
    let _ = (hit_lo, hit_hi);
    let mid = 0.5 * (lo + hi);
    let hit = f(mid)?;
    if hit.n2.abs() > 1e-8 {
        return Err(RodError::NewtonNonConvergence(format!(
            "section residual stalled at {:.3e}",
            hit.n2
        )));
    }
    Ok((mid, hit))
}

/// Reconstructed canonical data of a body state (ψ via the force
/// decomposition; NaN when the chart degenerates).
fn canonical_of(x: &State9, gauge: &RodParameters) -> (f64, f64, f64, f64) {
    let theta = theta_of(x);
    let (ex, ey) = (x[6], x[7]);
    let st = ex.hypot(ey);
    let m3 = gauge.m3;
    let p_theta = if st > 1e-300 { (ey * x[0] - ex * x[1]) / st / m3 } else { 0.0 };
    let p_psi = (x[0] * x[6] + x[1] * x[7] + x[2] * x[8]) / m3;

    let psi = if st > 1e-9 {
        let rad = 2.0 * gauge.c1 - gauge.c2 * gauge.c2 - 2.0 * gauge.lambda * p_psi * m3;
        if rad > 1e-18 {
            let sq = rad.sqrt();
            let perp = Vector3::new(
                (x[3] - gauge.c2 * ex) / sq,
                (x[4] - gauge.c2 * ey) / sq,
                (x[5] - gauge.c2 * x[8]) / sq,
            );
            let cos_phi = -ex / st;
            let sin_phi = ey / st;
            let cos_psi = perp.z / (st / 1.0);
            let sin_psi = -(perp.x * sin_phi + perp.y * cos_phi);
            sin_psi.atan2(cos_psi)
        } else {
            f64::NAN
        }
    } else {
        f64::NAN
    };
    (theta, psi, p_theta, p_psi)
}

/// Assembles the symmetric orbit from a converged (ψ₀, T): forward branch,
/// its reversor mirror, and a backward extension to the closest saddle
/// approach on each end.
#[allow(clippy::too_many_arguments)]
fn assemble(
    dp: &DimensionlessParameters,
    flow: &BodyFlow,
    psi0: f64,
    w_hat: f64,
    theta0: f64,
    t_half: f64,
    sigma: f64,
    cfg: &IntegratorConfig,
) -> Result<MultipulseOrbit> {
    let x_star = BodyState9::new(
        Vector3::new(0.0, 0.0, flow.gauge.m3),
        Vector3::new(0.0, 0.0, flow.gauge.c2),
        Vector3::new(0.0, 0.0, 1.0),
    )
    .to_vector();

    let x0 = launch_state(dp, &flow.gauge, psi0, w_hat, theta0)?;

    // Backward extension to the closest saddle approach.
    let t_back_max = 30.0 / sigma;
    let (saddle_residual, t_back) = backward_dip(flow, &x0, &x_star, t_back_max, cfg)?;

    // Sample the half-orbit on [−t_back, t_half] plus an overshoot window
    // past the symmetric point for the reversor check.
    let overshoot = (0.2 * t_half).clamp(1.0, 8.0);
    let n_half = 1200usize;
    let dt = (t_half + t_back) / n_half as f64;
    let backward_times: Vec<f64> = (1..=((t_back / dt).floor() as usize))
        .map(|i| -(i as f64) * dt)
        .chain(std::iter::once(-t_back))
        .collect();
    let forward_times: Vec<f64> = (1..n_half)
        .map(|i| i as f64 * dt)
        .filter(|&t| t < t_half - 1e-12)
        .chain(std::iter::once(t_half))
        .collect();
    let overshoot_times: Vec<f64> = (1..=40).map(|i| t_half + overshoot * i as f64 / 40.0).collect();

    let backward_states = sample_trajectory(flow, &x0, &backward_times, cfg)?;
    let mut forward_all = forward_times.clone();
    forward_all.extend_from_slice(&overshoot_times);
    let forward_states = sample_trajectory(flow, &x0, &forward_all, cfg)?;
    let n_fwd = forward_times.len();

    // Gauge angle at the symmetric endpoint; the rotation is a symmetry, so
    // the whole trajectory is rotated by the one angle.
    let chi = gauge_fix_angle(&forward_states[n_fwd - 1]);

    let mut half: Vec<(f64, State9)> = Vec::with_capacity(n_half + 2);
    for (t, x) in backward_times.iter().zip(&backward_states).rev() {
        half.push((*t, *x));
    }
    half.push((0.0, x0));
    for (t, x) in forward_times.iter().zip(&forward_states) {
        half.push((*t, *x));
    }

    // Reversor residual: the continued trajectory past the symmetric point
    // against the mirror of the approach branch.
    let mut reversor_residual = 0.0f64;
    {
        let x_sym = rotate_about_d3(&forward_states[n_fwd - 1], chi);
        reversor_residual = reversor_residual.max((x_sym - reversor9(&x_sym)).norm());
        let mirror_times: Vec<f64> = overshoot_times.iter().map(|t| 2.0 * t_half - t).collect();
        let mirror_states = sample_trajectory(flow, &x0, &mirror_times, cfg)?;
        for (cont, mirror) in forward_states[n_fwd..].iter().zip(&mirror_states) {
            let a = rotate_about_d3(cont, chi);
            let b = reversor9(&rotate_about_d3(mirror, chi));
            reversor_residual = reversor_residual.max((a - b).norm());
        }
    }

    // Full orbit: τ < 0 is the forward half shifted so the symmetric point
    // sits at τ = 0; τ > 0 the mirror.
    let mut samples = Vec::with_capacity(2 * half.len());
    for &(t, ref x) in &half {
        let tau = t - t_half;
        let xg = rotate_about_d3(x, chi);
        let (theta, psi, p_theta, p_psi) = canonical_of(&xg, &flow.gauge);
        samples.push(MultipulseSample { t: tau, theta, psi, p_theta, p_psi });
    }
    for &(t, ref x) in half.iter().rev().skip(1) {
        let tau = t_half - t;
        let xg = reversor9(&rotate_about_d3(x, chi));
        let (theta, psi, p_theta, p_psi) = canonical_of(&xg, &flow.gauge);
        samples.push(MultipulseSample { t: tau, theta, psi, p_theta, p_psi });
    }

    // ψ anchored at the symmetric point: 0 or π modulo 2π.
    let mid = samples.len() / 2;
    if samples[mid].psi.is_finite() {
        let anchor = if samples[mid].psi.cos() >= 0.0 { 0.0 } else { std::f64::consts::PI };
        let shift = anchor - samples[mid].psi;
        for s in &mut samples {
            if s.psi.is_finite() {
                s.psi += shift;
            }
        }
    }

    let theta_peak = samples.iter().map(|s| s.theta).fold(0.0f64, f64::max);
    let pulse_count = count_pulses(&samples, theta_peak);

    Ok(MultipulseOrbit {
        dp: *dp,
        pulse_count,
        samples,
        reversor_residual,
        saddle_residual,
        psi0,
        t_half,
        w_hat,
        theta_peak,
    })
}

/// Pulses are local maxima of θ exceeding half the tallest pulse.
fn count_pulses(samples: &[MultipulseSample], theta_peak: f64) -> usize {
    let mut count = 0;
    for w in samples.windows(3) {
        if w[1].theta > w[0].theta && w[1].theta >= w[2].theta && w[1].theta > 0.5 * theta_peak {
            count += 1;
        }
    }
    count
}

/// Finds symmetric multipulse orbits with the requested pulse counts by a
/// ψ₀-scan followed by bisection and Newton polishing.
pub fn find_multipulse(
    dp: &DimensionlessParameters,
    pulse_targets: &[usize],
    opts: &ShootOptions,
) -> Result<(Vec<MultipulseOrbit>, ShootingReport)> {
    require_aligned_family(dp)?;
    let chart = saddle_local_chart(dp)?;
    let sigma = chart.sigma();
    let flow = BodyFlow::new(dp);
    let max_index = pulse_targets.iter().copied().max().unwrap_or(1).max(opts.max_pulse_index.min(6));
    let t_cap = (max_index as f64 + 2.0) * 30.0 / sigma.min(1.0);

    let scan_cfg = IntegratorConfig { rtol: opts.rtol_scan, atol: 1e-12, ..Default::default() };
    let final_cfg = IntegratorConfig { rtol: opts.rtol_final, atol: 1e-14, ..Default::default() };

    let mut report = ShootingReport::default();
    let mut orbits = Vec::new();

    if dp.lambda_bar == 0.0 {
        // Integrable limit: every launch leaves along the planar homoclinic;
        // the k-th θ-extremum is the symmetric point of the k-pulse orbit.
        let x0 = launch_state(dp, &flow.gauge, 0.0, 0.0, opts.theta_launch)?;
        let hits = forward_hits(&flow, &x0, max_index, t_cap, &final_cfg)?;
        for &target in pulse_targets {
            let hit = hits
                .iter()
                .find(|h| h.index == target)
                .ok_or_else(|| RodError::RootNotFound(format!("no {target}-pulse section hit within t = {t_cap}")))?;
            let orbit = assemble(dp, &flow, 0.0, 0.0, opts.theta_launch, hit.t, sigma, &final_cfg)?;
            orbits.push(orbit);
        }
        return Ok((orbits, report));
    }

    // Scan the launch circle, tracking n₂* at the k-th θ-extremum.
    let n_scan = opts.scan_points;
    let mut curves: Vec<Vec<Option<SectionHit>>> = vec![Vec::new(); max_index + 1];
    let mut psis = Vec::with_capacity(n_scan + 1);
    for i in 0..=n_scan {
        let psi0 = 2.0 * std::f64::consts::PI * i as f64 / n_scan as f64;
        psis.push(psi0);
        let w_hat = cone_ratio(dp, psi0);
        let hits = launch_state(dp, &flow.gauge, psi0, w_hat, opts.theta_launch)
            .and_then(|x0| forward_hits(&flow, &x0, max_index, t_cap, &scan_cfg))
            .unwrap_or_default();
        for k in 1..=max_index {
            let hit = hits.iter().find(|h| h.index == k).copied();
            curves[k].push(hit);
        }
        report.scanned += 1;
    }

    for &target in pulse_targets {
        let curve = &curves[target];
        let mut found = None;
        for i in 0..n_scan {
            let (Some(a), Some(b)) = (curve[i], curve[i + 1]) else { continue };
            if a.n2.signum() == b.n2.signum() {
                continue;
            }
            report.brackets.push((target, psis[i], psis[i + 1]));
            // Coarse bisection on cheap (cone-equation) launches narrows
            // the phase before the expensive on-cone stage.
            let mut lo = (psis[i], a);
            let mut hi = (psis[i + 1], b);
            for _ in 0..10 {
                let mid = 0.5 * (lo.0 + hi.0);
                let w_hat = cone_ratio(dp, mid);
                let Ok(x0) = launch_state(dp, &flow.gauge, mid, w_hat, opts.theta_launch) else { break };
                let Ok(hits) = forward_hits(&flow, &x0, target, t_cap, &scan_cfg) else { break };
                let Some(hit) = hits.iter().find(|h| h.index == target).copied() else { break };
                if hit.n2.signum() == lo.1.n2.signum() {
                    lo = (mid, hit);
                } else {
                    hi = (mid, hit);
                }
            }
            match shoot_polished(dp, &flow, target, lo.0, hi.0, cone_ratio(dp, lo.0), sigma, opts, &final_cfg) {
                Ok(orbit) => {
                    found = Some(orbit);
                    break;
                }
                Err(e) => {
                    eprintln!("bracket polish failed: {e}");
                    continue;
                }
            }
        }
        let orbit = found.ok_or_else(|| {
            RodError::RootNotFound(format!(
                "no {target}-pulse bracket over the launch circle ({} scan points)",
                n_scan
            ))
        })?;
        orbits.push(orbit);
    }
    Ok((orbits, report))
}

/// Polishes a bracketed phase interval into a converged orbit with on-cone
/// launches, then assembles the full symmetric trajectory.
#[allow(clippy::too_many_arguments)]
fn shoot_polished(
    dp: &DimensionlessParameters,
    flow: &BodyFlow,
    pulse_target: usize,
    psi_lo: f64,
    psi_hi: f64,
    w_seed: f64,
    sigma: f64,
    opts: &ShootOptions,
    cfg: &IntegratorConfig,
) -> Result<MultipulseOrbit> {
    let launcher = LaunchSolver::new(dp, flow, opts.theta_launch, w_seed, sigma);
    let max_index = pulse_target.max(1);
    let t_cap = (max_index as f64 + 2.0) * 30.0 / sigma.min(1.0);
    let (psi0, hit) = bisect_polish(&launcher, flow, pulse_target, psi_lo, psi_hi, t_cap, cfg)?;
    let (_, w_final, _) = launcher.launch(psi0)?;
    let orbit = assemble(dp, flow, psi0, w_final, opts.theta_launch, hit.t, sigma, cfg)?;
    if orbit.pulse_count != pulse_target {
        return Err(RodError::WrongPulseCount { requested: pulse_target, found: orbit.pulse_count });
    }
    Ok(orbit)
}

/// Single-target entry point. An explicit guess (ψ₀ bracket center, T, ŵ)
/// skips the scan.
pub fn shoot_multipulse(
    dp: &DimensionlessParameters,
    pulse_target: usize,
    guess: Option<(f64, f64, f64)>,
    opts: &ShootOptions,
) -> Result<MultipulseOrbit> {
    require_aligned_family(dp)?;
    match guess {
        Some((psi0, t_guess, w_hat)) => {
            let chart = saddle_local_chart(dp)?;
            let flow = BodyFlow::new(dp);
            let cfg = IntegratorConfig { rtol: opts.rtol_final, atol: 1e-14, ..Default::default() };
            if dp.lambda_bar == 0.0 {
                let orbit = assemble(dp, &flow, psi0, w_hat, opts.theta_launch, t_guess, chart.sigma(), &cfg)?;
                return Ok(orbit);
            }
            shoot_polished(dp, &flow, pulse_target, psi0 - 5e-3, psi0 + 5e-3, w_hat, chart.sigma(), opts, &cfg)
        }
        None => {
            let (mut orbits, _) = find_multipulse(dp, &[pulse_target], opts)?;
            Ok(orbits.remove(0))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::homoclinic::HomoclinicOrbit;

    #[test]
    fn saddle_energy_formula() {
        let dp = DimensionlessParameters::new(1.7, 1.0, 1.0, 0.001, 0.002).unwrap();
        let h = saddle_energy(&dp);
        assert!((h - (1.5 - 0.001) / 2.89).abs() < 1e-15);
    }

    #[test]
    fn rejects_off_family_parameters() {
        let dp = DimensionlessParameters::new(1.7, 1.0, 1.0, 0.001, 0.5).unwrap();
        assert!(shoot_multipulse(&dp, 2, None, &ShootOptions::default()).is_err());
    }

    #[test]
    fn unperturbed_single_pulse_matches_closed_form() {
        let dp = DimensionlessParameters::new(1.7, 1.0, 1.0, 0.0, 0.0).unwrap();
        let opts = ShootOptions::default();
        let orbit = shoot_multipulse(&dp, 1, None, &opts).unwrap();
        assert_eq!(orbit.pulse_count, 1);
        assert!(orbit.saddle_residual < 1e-6, "saddle residual {:.3e}", orbit.saddle_residual);
        assert!(orbit.reversor_residual < 1e-6, "reversor residual {:.3e}", orbit.reversor_residual);

        let cf = HomoclinicOrbit::new(1.7, 1.0).unwrap();
        let mut worst = 0.0f64;
        for s in &orbit.samples {
            let theta_cf = cf.theta(s.t);
            worst = worst.max((s.theta - theta_cf).abs());
        }
        assert!(worst < 1e-4, "sup distance to closed form {worst:.3e}");
    }
}
