//! Bessel functions of the first kind for integer order.
//!
//! All orders are produced by Miller's backward recurrence normalised with
//! `J_0 + 2 * sum_k J_2k = 1`. The recurrence is started well above both the
//! requested order and the argument, which keeps the absolute error near
//! machine precision for the argument range used here (|x| up to a few
//! hundred).

/// First zero of `J_0`.
pub const J0_FIRST_ZERO: f64 = 2.404_825_557_695_773;

const RESCALE_ABOVE: f64 = 1e250;
const RESCALE_BY: f64 = 1e-250;

fn start_order(top: usize) -> usize {
    let m = top + 20 + (40.0 * top as f64).sqrt() as usize;
    m + (m & 1)
}

/// Values `J_0(x) ..= J_nmax(x)` for `x >= 0`.
fn sequence_nonneg(x: f64, nmax: usize) -> Vec<f64> {
    let mut out = vec![0.0; nmax + 1];
    if x == 0.0 {
        out[0] = 1.0;
        return out;
    }
    let top = nmax.max(x.ceil() as usize);
    let m = start_order(top);

    let two_over_x = 2.0 / x;
    let mut above = 0.0_f64; // J_{k+1}
    let mut cur = 1e-30_f64; // J_k, k = m
    let mut norm = 0.0_f64;
    for k in (1..=m).rev() {
        if k <= nmax {
            out[k] = cur;
        }
        if k % 2 == 0 {
            norm += 2.0 * cur;
        }
        let below = k as f64 * two_over_x * cur - above;
        above = cur;
        cur = below;
        if cur.abs() > RESCALE_ABOVE {
            cur *= RESCALE_BY;
            above *= RESCALE_BY;
            norm *= RESCALE_BY;
            for v in out.iter_mut() {
                *v *= RESCALE_BY;
            }
        }
    }
    out[0] = cur;
    norm += cur;
    for v in out.iter_mut() {
        *v /= norm;
    }
    out
}

/// `J_n(x)` for any integer order and real argument.
pub fn bessel_j(n: i32, x: f64) -> f64 {
    let order = n.unsigned_abs() as usize;
    let mut sign = 1.0;
    if n < 0 && order % 2 == 1 {
        sign = -sign;
    }
    if x < 0.0 && order % 2 == 1 {
        sign = -sign;
    }
    sign * sequence_nonneg(x.abs(), order)[order]
}

pub fn bessel_j0(x: f64) -> f64 {
    bessel_j(0, x)
}

pub fn bessel_j1(x: f64) -> f64 {
    bessel_j(1, x)
}

/// `J_0(x), J_1(x), ..., J_nmax(x)` in one recurrence pass.
pub fn bessel_j_sequence(x: f64, nmax: usize) -> Vec<f64> {
    let mut out = sequence_nonneg(x.abs(), nmax);
    if x < 0.0 {
        for (k, v) in out.iter_mut().enumerate() {
            if k % 2 == 1 {
                *v = -*v;
            }
        }
    }
    out
}
