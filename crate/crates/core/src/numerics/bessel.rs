//! Cylindrical Bessel functions of the first kind and integer order.
//!
//! Values come from Miller's downward recurrence
//! `J_{k-1}(x) = (2k/x) J_k(x) - J_{k+1}(x)`, started well above both the
//! requested order and the argument, and normalized with the Neumann series
//! `1 = J_0(x) + 2 sum_{k>=1} J_{2k}(x)`. Downward recurrence is stable for
//! every order once the starting index exceeds `|x|`, so a single pass also
//! yields the whole table `J_0 ..= J_n`.

use crate::error::{KdError, Result};

/// Largest supported order `|n|`.
pub const MAX_ORDER: usize = 200;
/// Largest supported argument `|z|`.
pub const MAX_ARGUMENT: f64 = 50.0;

const RESCALE_ABOVE: f64 = 1e250;

fn check_argument(z: f64) -> Result<f64> {
    if !z.is_finite() || z.abs() > MAX_ARGUMENT {
        return Err(KdError::domain(format!(
            "Bessel argument {z} outside supported range |z| <= {MAX_ARGUMENT}"
        )));
    }
    Ok(z)
}

fn check_order(n: usize) -> Result<usize> {
    if n > MAX_ORDER {
        return Err(KdError::domain(format!(
            "Bessel order {n} outside supported range |n| <= {MAX_ORDER}"
        )));
    }
    Ok(n)
}

/// Starting index for the downward recurrence; always even.
fn start_index(n_top: usize, x: f64) -> usize {
    let reach = (n_top as f64).max(x.ceil());
    let m = reach + 20.0 + (160.0 * reach.max(1.0)).sqrt();
    let m = m.ceil() as usize;
    m + (m & 1)
}

/// `J_0(x) ..= J_{n_top}(x)` for `x >= 0`.
fn miller_table(n_top: usize, x: f64) -> Vec<f64> {
    let mut out = vec![0.0; n_top + 1];
    if x == 0.0 {
        out[0] = 1.0;
        return out;
    }

    let m = start_index(n_top, x);
    let two_over_x = 2.0 / x;
    let mut above = 0.0; // J_{k+1}
    let mut current = 1e-300; // J_k, arbitrary seed
    let mut norm = 0.0; // J_0 + 2 sum J_{2k}, accumulated for k >= 1 here

    for k in (1..=m).rev() {
        let below = k as f64 * two_over_x * current - above;
        above = current;
        current = below;
        // `current` now holds J_{k-1}.
        let idx = k - 1;
        if idx > 0 && idx % 2 == 0 {
            norm += 2.0 * current;
        }
        if idx <= n_top {
            out[idx] = current;
        }
        if current.abs() > RESCALE_ABOVE {
            let s = 1.0 / RESCALE_ABOVE;
            current *= s;
            above *= s;
            norm *= s;
            for v in out.iter_mut().skip(idx) {
                *v *= s;
            }
        }
    }
    norm += current;

    let inv = 1.0 / norm;
    for v in &mut out {
        *v *= inv;
    }
    out
}

/// `J_n(z)` for integer `n` with `|n| <= 200` and `|z| <= 50`.
///
/// Negative orders and arguments are reduced with
/// `J_{-n}(z) = (-1)^n J_n(z)` and `J_n(-z) = (-1)^n J_n(z)`, applied as an
/// exact sign flip, so the reflection identities hold bit-for-bit.
pub fn bessel_jn(n: i32, z: f64) -> Result<f64> {
    let z = check_argument(z)?;
    let order = check_order(n.unsigned_abs() as usize)?;
    let value = miller_table(order, z.abs())[order];
    let odd = order % 2 == 1;
    let flip = odd && ((n < 0) != (z < 0.0));
    Ok(if flip { -value } else { value })
}

/// The table `[J_0(z), J_1(z), ..., J_{n_top}(z)]` from a single recurrence
/// pass.
pub fn bessel_jn_orders(n_top: usize, z: f64) -> Result<Vec<f64>> {
    let z = check_argument(z)?;
    check_order(n_top)?;
    let mut table = miller_table(n_top, z.abs());
    if z < 0.0 {
        for v in table.iter_mut().skip(1).step_by(2) {
            *v = -*v;
        }
    }
    Ok(table)
}
