//! Raman-Nath diffraction amplitudes of a standing-wave grating.
//!
//! Crossing the lightshift potential `V0 cos^2(Kx)` for a time `tau`
//! multiplies the wave function by `exp(-i V tau)`. Expanding with the
//! Jacobi-Anger identity moves a momentum `p` into the orders `p + 2nK` with
//! amplitude `b_n = i^n e^{-iw} J_n(-w)`, where `w = V0 tau / 2`.

use num_complex::Complex64;

use crate::error::{KdError, Result};
use crate::numerics::bessel::{self, MAX_ORDER};

/// Largest supported pulse area.
pub const MAX_PULSE_AREA: f64 = bessel::MAX_ARGUMENT;

/// Default pulse area for general runs.
pub const DEFAULT_PULSE_AREA: f64 = 1.0;

/// One standing-wave grating.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GratingConfig {
    /// Pulse area `w = V0 tau / 2`.
    pub w: f64,
    /// Laser wavenumber `K` (momentum units, `hbar = 1`).
    pub k: f64,
    /// Orders `|n| <= n_max` are kept.
    pub n_max: usize,
}

impl GratingConfig {
    pub fn new(w: f64, k: f64, n_max: usize) -> Result<Self> {
        check_pulse_area(w)?;
        if !(k > 0.0 && k.is_finite()) {
            return Err(KdError::domain(format!(
                "laser wavenumber {k} must be positive and finite"
            )));
        }
        if n_max == 0 || n_max > MAX_ORDER {
            return Err(KdError::domain(format!(
                "truncation order {n_max} outside 1..={MAX_ORDER}"
            )));
        }
        Ok(Self { w, k, n_max })
    }

    /// Picks `n_max` with [`choose_truncation`].
    pub fn with_tail_tolerance(w: f64, k: f64, tail_tolerance: f64) -> Result<Self> {
        Self::new(w, k, choose_truncation(w, tail_tolerance)?)
    }

    pub fn table(&self) -> Result<AmplitudeTable> {
        amplitude_table(self)
    }
}

fn check_pulse_area(w: f64) -> Result<f64> {
    if !(0.0..=MAX_PULSE_AREA).contains(&w) {
        return Err(KdError::domain(format!(
            "pulse area w = {w} outside [0, {MAX_PULSE_AREA}]"
        )));
    }
    Ok(w)
}

/// `i^n` without rounding.
fn i_pow(n: i32) -> Complex64 {
    match n.rem_euclid(4) {
        0 => Complex64::new(1.0, 0.0),
        1 => Complex64::new(0.0, 1.0),
        2 => Complex64::new(-1.0, 0.0),
        _ => Complex64::new(0.0, -1.0),
    }
}

fn assemble(n: i32, w: f64, j_n_of_minus_w: f64) -> Complex64 {
    i_pow(n) * Complex64::from_polar(1.0, -w) * j_n_of_minus_w
}

/// `b_n(w) = i^n e^{-iw} J_n(-w)`.
pub fn amplitude(n: i32, w: f64) -> Result<Complex64> {
    check_pulse_area(w)?;
    let j = bessel::bessel_jn(n, -w)?;
    Ok(assemble(n, w, j))
}

/// Immutable table of `b_n` for `n` in `[-n_max, n_max]`.
#[derive(Debug, Clone, PartialEq)]
pub struct AmplitudeTable {
    w: f64,
    n_max: usize,
    amplitudes: Vec<Complex64>,
    mass: f64,
}

impl AmplitudeTable {
    pub fn w(&self) -> f64 {
        self.w
    }

    pub fn n_max(&self) -> usize {
        self.n_max
    }

    pub fn orders(&self) -> impl Iterator<Item = i32> + Clone {
        let n = self.n_max as i32;
        -n..=n
    }

    /// `b_n`; zero outside the truncation window.
    pub fn get(&self, n: i32) -> Complex64 {
        if n.unsigned_abs() as usize > self.n_max {
            return Complex64::new(0.0, 0.0);
        }
        self.amplitudes[(n + self.n_max as i32) as usize]
    }

    /// Pairs `(n, b_n)` in ascending `n`.
    pub fn iter(&self) -> impl Iterator<Item = (i32, Complex64)> + '_ {
        self.orders().zip(self.amplitudes.iter().copied())
    }

    /// `sum |b_n|^2` over the window.
    pub fn mass(&self) -> f64 {
        self.mass
    }

    /// `1 - mass`, the probability lost to truncation.
    pub fn tail_mass(&self) -> f64 {
        (1.0 - self.mass).max(0.0)
    }

    /// `sum_n b_n e^{i 2 n k x}`, the grating transmission for wavenumber `k`.
    pub fn profile(&self, k: f64, x: f64) -> Complex64 {
        self.iter()
            .map(|(n, b)| b * Complex64::from_polar(1.0, 2.0 * n as f64 * k * x))
            .sum()
    }
}

/// Amplitudes for every order kept by `config`, from one Bessel table.
pub fn amplitude_table(config: &GratingConfig) -> Result<AmplitudeTable> {
    check_pulse_area(config.w)?;
    let n_max = config.n_max;
    let j = bessel::bessel_jn_orders(n_max, -config.w)?;
    let mut amplitudes = Vec::with_capacity(2 * n_max + 1);
    for n in -(n_max as i32)..=(n_max as i32) {
        let idx = n.unsigned_abs() as usize;
        // J_{-n} = (-1)^n J_n
        let jn = if n < 0 && idx % 2 == 1 { -j[idx] } else { j[idx] };
        amplitudes.push(assemble(n, config.w, jn));
    }
    let mass = amplitudes.iter().map(|b| b.norm_sqr()).sum();
    Ok(AmplitudeTable {
        w: config.w,
        n_max,
        amplitudes,
        mass,
    })
}

/// Default tail tolerance for automatic truncation. The norm of a
/// diffracted wave packet is first order in the dropped amplitudes, i.e. in
/// the square root of the tail mass, so this is far below the target
/// accuracy.
pub const DEFAULT_TAIL_TOLERANCE: f64 = 1e-20;

/// Smallest `n_max >= 1` whose dropped tail `2 sum_{n > n_max} J_n(w)^2` is
/// at most `tail_tolerance`.
///
/// The tail is summed directly rather than as `1 - mass`, so tolerances
/// far below machine epsilon are meaningful.
pub fn choose_truncation(w: f64, tail_tolerance: f64) -> Result<usize> {
    check_pulse_area(w)?;
    if !(tail_tolerance > 0.0 && tail_tolerance < 1.0) {
        return Err(KdError::domain(format!(
            "tail tolerance {tail_tolerance} must lie in (0, 1)"
        )));
    }
    let j = bessel::bessel_jn_orders(MAX_ORDER, w)?;
    let mut tails = vec![0.0; j.len()];
    for n in (0..j.len() - 1).rev() {
        tails[n] = tails[n + 1] + 2.0 * j[n + 1] * j[n + 1];
    }
    if let Some(n) = (1..tails.len() - 1).find(|&n| tails[n] <= tail_tolerance) {
        return Ok(n);
    }
    Err(KdError::domain(format!(
        "tail tolerance {tail_tolerance} unreachable for w = {w} within |n| < {MAX_ORDER}"
    )))
}
