//! Adaptive Dormand–Prince 5(4) stepping for two-component linear systems, with
//! logarithmic rescaling so that exponentially growing solutions stay representable.

const C: [f64; 7] = [0.0, 1.0 / 5.0, 3.0 / 10.0, 4.0 / 5.0, 8.0 / 9.0, 1.0, 1.0];
const A: [[f64; 6]; 7] = [
    [0.0; 6],
    [1.0 / 5.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [19372.0 / 6561.0, -25360.0 / 2187.0, 64448.0 / 6561.0, -212.0 / 729.0, 0.0, 0.0],
    [9017.0 / 3168.0, -355.0 / 33.0, 46732.0 / 5247.0, 49.0 / 176.0, -5103.0 / 18656.0, 0.0],
    [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0],
];
const B5: [f64; 7] = [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0, 0.0];
const B4: [f64; 7] = [
    5179.0 / 57600.0,
    0.0,
    7571.0 / 16695.0,
    393.0 / 640.0,
    -92097.0 / 339200.0,
    187.0 / 2100.0,
    1.0 / 40.0,
];

const RESCALE_AT: f64 = 1e100;

#[derive(Debug, Clone, Copy)]
pub(crate) struct StepControl {
    pub rtol: f64,
    pub h_max: f64,
    pub h_init: f64,
    pub max_steps: usize,
}

/// Accepted point: the true solution is `y · exp(log_scale)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Sample {
    pub r: f64,
    pub y: [f64; 2],
    pub log_scale: f64,
}

fn norm(y: [f64; 2]) -> f64 {
    y[0].hypot(y[1])
}

/// Integrates y' = K(r) y from `r0` to `r1` (either direction), recording every accepted step.
/// Returns None when the step budget is exhausted or a non-finite value appears.
pub(crate) fn integrate<F>(k: F, r0: f64, r1: f64, y0: [f64; 2], ctl: StepControl) -> Option<Vec<Sample>>
where
    F: Fn(f64) -> [[f64; 2]; 2],
{
    let rhs = |r: f64, y: [f64; 2]| {
        let m = k(r);
        [m[0][0] * y[0] + m[0][1] * y[1], m[1][0] * y[0] + m[1][1] * y[1]]
    };
    let dir = (r1 - r0).signum();
    let mut r = r0;
    let mut y = y0;
    let mut log_scale = 0.0;
    let n0 = norm(y);
    if n0 > 0.0 {
        y = [y[0] / n0, y[1] / n0];
        log_scale = n0.ln();
    }
    let mut h = ctl.h_init.min(ctl.h_max);
    let mut out = vec![Sample { r, y, log_scale }];
    let mut kk = [[0.0; 2]; 7];
    kk[0] = rhs(r, y);
    for _ in 0..ctl.max_steps {
        let remaining = (r1 - r).abs();
        if remaining <= 1e-14 * r1.abs().max(r0.abs()) {
            return Some(out);
        }
        h = h.min(remaining).min(ctl.h_max);
        for s in 1..7 {
            let mut yi = y;
            for (j, kj) in kk.iter().enumerate().take(s) {
                yi[0] += dir * h * A[s][j] * kj[0];
                yi[1] += dir * h * A[s][j] * kj[1];
            }
            kk[s] = rhs(r + dir * h * C[s], yi);
        }
        let mut y5 = y;
        let mut e = [0.0; 2];
        for s in 0..7 {
            for i in 0..2 {
                y5[i] += dir * h * B5[s] * kk[s][i];
                e[i] += dir * h * (B5[s] - B4[s]) * kk[s][i];
            }
        }
        if !(y5[0].is_finite() && y5[1].is_finite()) {
            h *= 0.1;
            if h < 1e-300 {
                return None;
            }
            continue;
        }
        let scale = ctl.rtol * norm(y).max(norm(y5));
        let err = norm(e) / scale;
        if err <= 1.0 {
            r += dir * h;
            y = y5;
            kk[0] = kk[6];
            let ny = norm(y);
            if !(1.0 / RESCALE_AT..=RESCALE_AT).contains(&ny) {
                y = [y[0] / ny, y[1] / ny];
                kk[0] = [kk[0][0] / ny, kk[0][1] / ny];
                log_scale += ny.ln();
            }
            out.push(Sample { r, y, log_scale });
        }
        let factor = if err == 0.0 { 5.0 } else { (0.9 * err.powf(-0.2)).clamp(0.2, 5.0) };
        h *= factor;
    }
    None
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ctl() -> StepControl {
        StepControl {
            rtol: 1e-11,
            h_max: 0.1,
            h_init: 1e-3,
            max_steps: 1_000_000,
        }
    }

    #[test]
    fn rotation_is_exact() {
        let s = integrate(|_| [[0.0, 1.0], [-1.0, 0.0]], 0.0, 10.0, [1.0, 0.0], ctl()).unwrap();
        let last = s.last().unwrap();
        assert!((last.r - 10.0).abs() < 1e-12);
        let f = last.y[0] * last.log_scale.exp();
        assert!((f - 10f64.cos()).abs() < 1e-9);
    }

    #[test]
    fn growth_is_rescaled() {
        let s = integrate(|_| [[300.0, 0.0], [0.0, 0.0]], 0.0, 2.0, [1.0, 1.0], ctl()).unwrap();
        let last = s.last().unwrap();
        assert!(last.y[0].abs() <= 1e101);
        assert!((last.log_scale + last.y[0].ln() - 600.0).abs() < 1e-7);
    }

    #[test]
    fn backwards_power_law() {
        // y' = (2/r) y ⇒ y = r²
        let s = integrate(|r| [[2.0 / r, 0.0], [0.0, 0.0]], 4.0, 1.0, [16.0, 0.0], ctl()).unwrap();
        let last = s.last().unwrap();
        assert!((last.y[0] * last.log_scale.exp() - 1.0).abs() < 1e-9);
    }
}
