//! Adaptive Gauss–Kronrod quadrature (21-point rule with interval
//! bisection) and the square-root endpoint substitution used for the
//! homoclinic time integral.

use crate::error::{Result, RodError};

// 21-point Kronrod nodes with the embedded 10-point Gauss rule.
const XGK: [f64; 11] = [
    0.995657163025808080735527280689003,
    0.973906528517171720077964012084452,
    0.930157491355708226001207180059508,
    0.865063366688984510732096688423493,
    0.780817726586416897063717578345042,
    0.679409568299024406234327365114874,
    0.562757134668604683339000099272694,
    0.433395394129247190799265943165784,
    0.294392862701460198131126603103866,
    0.148874338981631210884826001129720,
    0.000000000000000000000000000000000,
];
const WG: [f64; 5] = [
    0.066671344308688137593568809893332,
    0.149451349150580593145776339657697,
    0.219086362515982043995534934228163,
    0.269266719309996355091226921569469,
    0.295524224714752870173892994651338,
];
const WGK: [f64; 11] = [
    0.011694638867371874278064396062192,
    0.032558162307964727478818972459390,
    0.054755896574351996031381300244580,
    0.075039674810919952767043140916190,
    0.093125454583697605535065465083366,
    0.109387158802297641899210590325805,
    0.123491976262065851077958109831074,
    0.134709217311473325928054001771707,
    0.142775938577060080797094273138717,
    0.147739104901338491374841515972068,
    0.149445554002916905664936468389821,
];

/// Single fixed 21-point Kronrod panel (no error control); accurate to
/// rounding for smooth integrands on short intervals.
pub fn gk21_panel<F: FnMut(f64) -> f64>(mut f: F, a: f64, b: f64) -> f64 {
    gk21(&mut f, a, b).0
}

/// One Gauss–Kronrod panel: estimate and error.
fn gk21<F: FnMut(f64) -> f64>(f: &mut F, a: f64, b: f64) -> (f64, f64) {
    let center = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let fc = f(center);
    let mut kronrod = fc * WGK[10];
    let mut gauss = 0.0;
    let mut resabs = kronrod.abs();
    let mut samples = [0.0f64; 21];
    samples[10] = fc;

    for (j, &x) in XGK.iter().enumerate().take(10) {
        let dx = half * x;
        let f1 = f(center - dx);
        let f2 = f(center + dx);
        samples[j] = f1;
        samples[20 - j] = f2;
        kronrod += WGK[j] * (f1 + f2);
        resabs += WGK[j] * (f1.abs() + f2.abs());
        if j % 2 == 1 {
            gauss += WG[j / 2] * (f1 + f2);
        }
    }

    let mean = kronrod * 0.5;
    let mut resasc = WGK[10] * (fc - mean).abs();
    for (j, &s) in samples.iter().enumerate().take(10) {
        resasc += WGK[j] * ((s - mean).abs() + (samples[20 - j] - mean).abs());
    }
    resasc *= half.abs();

    let value = kronrod * half;
    let mut err = ((kronrod - gauss) * half).abs();
    if resasc != 0.0 && err != 0.0 {
        err = resasc * (200.0 * err / resasc).powf(1.5).min(1.0);
    }
    let floor = 50.0 * f64::EPSILON * resabs * half.abs();
    (value, err.max(floor))
}

/// Integrates `f` over [a, b] by adaptive bisection to absolute tolerance
/// `tol`; reversed intervals flip the sign.
pub fn integrate<F: FnMut(f64) -> f64>(mut f: F, a: f64, b: f64, tol: f64) -> Result<f64> {
    if a == b {
        return Ok(0.0);
    }
    if a > b {
        return integrate(f, b, a, tol).map(|v| -v);
    }
    #[derive(Clone, Copy)]
    struct Panel {
        a: f64,
        b: f64,
        value: f64,
        err: f64,
    }
    let (value, err) = gk21(&mut f, a, b);
    let mut heap = vec![Panel { a, b, value, err }];
    let mut total_err: f64 = err;
    let mut total: f64 = value;

    for _ in 0..10_000 {
        if total_err <= tol {
            return Ok(total);
        }
        // Split the worst panel.
        let (idx, _) = heap
            .iter()
            .enumerate()
            .max_by(|x, y| x.1.err.partial_cmp(&y.1.err).unwrap())
            .unwrap();
        let worst = heap.swap_remove(idx);
        total -= worst.value;
        total_err -= worst.err;
        let mid = 0.5 * (worst.a + worst.b);
        if mid <= worst.a || mid >= worst.b {
            // Interval exhausted at machine precision.
            total += worst.value;
            total_err += worst.err;
            if total_err <= tol * 100.0 {
                return Ok(total);
            }
            return Err(RodError::QuadratureNonConvergent { requested: tol, achieved: total_err });
        }
        for (lo, hi) in [(worst.a, mid), (mid, worst.b)] {
            let (v, e) = gk21(&mut f, lo, hi);
            total += v;
            total_err += e;
            heap.push(Panel { a: lo, b: hi, value: v, err: e });
        }
    }
    if total_err <= tol * 100.0 {
        Ok(total)
    } else {
        Err(RodError::QuadratureNonConvergent { requested: tol, achieved: total_err })
    }
}

/// Integrates g(u)/√(u − a) over [a, b] by the substitution u = a + w²,
/// which removes the inverse-square-root endpoint singularity:
/// ∫ g(u)/√(u−a) du = ∫ 2 g(a + w²) dw over [0, √(b−a)].
pub fn integrate_inverse_sqrt_endpoint<F: FnMut(f64) -> f64>(mut g: F, a: f64, b: f64, tol: f64) -> Result<f64> {
    assert!(b >= a);
    let wmax = (b - a).sqrt();
    integrate(|w| 2.0 * g(a + w * w), 0.0, wmax, tol)
}
