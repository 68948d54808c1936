//! Gaussian momentum-entangled pairs and their diffraction by two gratings.
//!
//! The unnormalized initial state is
//! `Phi_0(p, q) = exp(-p^2/Q^2 - q^2/Q*^2 - p q / P^2)`, entangled whenever
//! `1/P^2 != 0`. The product state is carried as `1/P^2 = 0` exactly, never
//! as a large finite `P`.
//!
//! After the gratings the amplitude is
//! `Phi_*(p, q) = sum_{n,m} b_n b_m Phi_0(p - 2nK_L, q - 2mK_R)`, with no
//! `2 pi` factors anywhere; the normalization absorbs every constant.

use std::f64::consts::PI;

use num_complex::Complex64;
use rayon::prelude::*;

use crate::diffraction::{AmplitudeTable, GratingConfig};
use crate::error::{KdError, Result};
use crate::numerics::quadrature::{quad2d, QuadratureResult, QuadratureSpec};
use crate::pattern::{Axis, NormalizationTag, PatternGrid};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GaussianEntangledState {
    q_spread: f64,
    q_star_spread: f64,
    inv_p_sq: f64,
}

impl GaussianEntangledState {
    /// `p_coupling` may be `f64::INFINITY` for the product state.
    pub fn new(q_spread: f64, q_star_spread: f64, p_coupling: f64) -> Result<Self> {
        for (name, v) in [("Q", q_spread), ("Q*", q_star_spread)] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(KdError::domain(format!(
                    "spread {name} = {v} must be positive and finite"
                )));
            }
        }
        if !(p_coupling > 0.0) {
            return Err(KdError::domain(format!("spread P = {p_coupling} must be positive")));
        }
        Ok(Self {
            q_spread,
            q_star_spread,
            inv_p_sq: 1.0 / (p_coupling * p_coupling),
        })
    }

    pub fn product(q_spread: f64, q_star_spread: f64) -> Result<Self> {
        Self::new(q_spread, q_star_spread, f64::INFINITY)
    }

    pub fn q_spread(&self) -> f64 {
        self.q_spread
    }

    pub fn q_star_spread(&self) -> f64 {
        self.q_star_spread
    }

    /// `P`, infinite for the product state.
    pub fn p_coupling(&self) -> f64 {
        if self.inv_p_sq == 0.0 {
            f64::INFINITY
        } else {
            self.inv_p_sq.sqrt().recip()
        }
    }

    /// `1 / P^2`.
    pub fn inv_p_sq(&self) -> f64 {
        self.inv_p_sq
    }

    pub fn is_entangled(&self) -> bool {
        self.inv_p_sq != 0.0
    }

    /// `Q^2 Q*^2 / (4 P^4)`; the state is square integrable iff this is
    /// below one.
    pub fn boundary_ratio(&self) -> f64 {
        let qq = self.q_spread * self.q_star_spread;
        qq * qq * self.inv_p_sq * self.inv_p_sq / 4.0
    }

    /// `4P^4 > Q^2 Q*^2`.
    pub fn is_normalizable(&self) -> bool {
        self.boundary_ratio() < 1.0
    }

    /// `sqrt(Q Q* / 2)`, the smallest `P` of a square-integrable state.
    pub fn p_boundary(&self) -> f64 {
        (self.q_spread * self.q_star_spread / 2.0).sqrt()
    }

    pub(crate) fn require_normalizable(&self) -> Result<()> {
        if !self.is_normalizable() {
            return Err(KdError::domain(format!(
                "4P^4 <= Q^2 Q*^2 (Q = {}, Q* = {}, P = {}): the Gaussian state is not normalizable",
                self.q_spread,
                self.q_star_spread,
                self.p_coupling()
            )));
        }
        Ok(())
    }

    pub(crate) fn exponent(&self, p: f64, q: f64) -> f64 {
        -p * p / (self.q_spread * self.q_spread)
            - q * q / (self.q_star_spread * self.q_star_spread)
            - p * q * self.inv_p_sq
    }

    /// Eigenvalues `(lambda_min, lambda_max)` of the quadratic form in
    /// `-ln Phi_0`.
    pub fn curvatures(&self) -> (f64, f64) {
        let a = 1.0 / (self.q_spread * self.q_spread);
        let d = 1.0 / (self.q_star_spread * self.q_star_spread);
        let b = self.inv_p_sq / 2.0;
        let mean = (a + d) / 2.0;
        let split = (((a - d) / 2.0).powi(2) + b * b).sqrt();
        (mean - split, mean + split)
    }

    /// Tensor Gauss-Legendre rule sized to this state: the box reaches
    /// `|Phi_0|^2 < e^{-40}` along the slow direction, widened by `reach`
    /// for shifted copies, and the order resolves the fast direction.
    pub fn quadrature_spec(&self, reach: f64) -> Result<QuadratureSpec> {
        self.require_normalizable()?;
        let (slow, fast) = self.curvatures();
        let halfwidth = (20.0 / slow).sqrt() + reach.abs();
        let order = ((6.0 * halfwidth * fast.sqrt()).ceil() as usize).clamp(96, 1024);
        QuadratureSpec::tensor(order, halfwidth)
    }

    /// Unnormalized `Phi_0(p, q)`.
    pub fn initial_amplitude(&self, p: f64, q: f64) -> f64 {
        self.exponent(p, q).exp()
    }

    /// `S = (1 - Q^2 Q*^2 / 4P^4)^{-1/2}`.
    pub fn schmidt_number(&self) -> Result<f64> {
        self.require_normalizable()?;
        Ok((1.0 - self.boundary_ratio()).sqrt().recip())
    }

    /// `int |Phi_0|^2 = pi Q Q* S / 2`.
    pub fn norm_sq(&self) -> Result<f64> {
        Ok(PI * self.q_spread * self.q_star_spread * self.schmidt_number()? / 2.0)
    }
}

pub fn initial_amplitude(state: &GaussianEntangledState, p: f64, q: f64) -> f64 {
    state.initial_amplitude(p, q)
}

pub fn schmidt_number(state: &GaussianEntangledState) -> Result<f64> {
    state.schmidt_number()
}

/// One `(n, m, r, s)` term of the closed-form `N^{-2}` double-Gaussian sum,
/// for the overlap of `Phi_0(p - 2nK_L, q - 2mK_R)` with
/// `Phi_0(p - 2rK_L, q - 2sK_R)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NormalizationTerm {
    pub n: i32,
    pub m: i32,
    pub r: i32,
    pub s: i32,
    /// `4 K_L (n + r) / Q^2 + 2 K_R (m + s) / P^2`.
    pub alpha: f64,
    /// `4 K_R (m + s) / Q*^2 + 2 K_L (n + r) / P^2`.
    pub beta: f64,
}

impl NormalizationTerm {
    pub fn new(state: &GaussianEntangledState, k_left: f64, k_right: f64, n: i32, m: i32, r: i32, s: i32) -> Self {
        let q2 = state.q_spread * state.q_spread;
        let qs2 = state.q_star_spread * state.q_star_spread;
        let nr = f64::from(n + r);
        let ms = f64::from(m + s);
        Self {
            n,
            m,
            r,
            s,
            alpha: 4.0 * k_left * nr / q2 + 2.0 * k_right * ms * state.inv_p_sq,
            beta: 4.0 * k_right * ms / qs2 + 2.0 * k_left * nr * state.inv_p_sq,
        }
    }

    /// Log of the term without the common prefactor
    /// ([`normalization_prefactor`]). All exponentials are combined before
    /// `exp`, since the individual pieces overflow for large orders.
    pub fn log_weight(&self, state: &GaussianEntangledState, k_left: f64, k_right: f64) -> f64 {
        let q2 = state.q_spread * state.q_spread;
        let qs2 = state.q_star_spread * state.q_star_spread;
        let ip2 = state.inv_p_sq;
        let (n, m, r, s) = (
            f64::from(self.n),
            f64::from(self.m),
            f64::from(self.r),
            f64::from(self.s),
        );
        let constant = -4.0 * (n * n + r * r) * k_left * k_left / q2
            - 4.0 * (m * m + s * s) * k_right * k_right / qs2
            - 4.0 * (m * n + r * s) * k_left * k_right * ip2;
        // q-direction curvature left after completing the square in p
        let curvature = 2.0 / qs2 - q2 * ip2 * ip2 / 2.0;
        let shifted = self.beta - self.alpha * q2 * ip2 / 2.0;
        constant + self.alpha * self.alpha * q2 / 8.0 + shifted * shifted / (4.0 * curvature)
    }
}

/// `pi Q / sqrt(2 c)` with `c = 2/Q*^2 - Q^2 / (2 P^4)`, which equals
/// `pi P^2 (4P^4 / (Q^2 Q*^2) - 1)^{-1/2}` and tends to `pi Q Q* / 2` for
/// the product state.
pub fn normalization_prefactor(state: &GaussianEntangledState) -> Result<f64> {
    state.require_normalizable()?;
    let q2 = state.q_spread * state.q_spread;
    let qs2 = state.q_star_spread * state.q_star_spread;
    let curvature = 2.0 / qs2 - q2 * state.inv_p_sq * state.inv_p_sq / 2.0;
    Ok(PI * state.q_spread / (2.0 * curvature).sqrt())
}

/// Coherent quadruple sum `sum b*_n b*_m b_r b_s exp(log_weight(n, m, r, s))`
/// shared by the two-grating and single-grating normalizations.
pub(crate) fn quadruple_sum<F>(left: &AmplitudeTable, right: &AmplitudeTable, log_weight: F) -> Result<Complex64>
where
    F: Fn(i32, i32, i32, i32) -> f64 + Sync,
{
    let rows: Vec<Complex64> = left
        .orders()
        .collect::<Vec<_>>()
        .par_iter()
        .map(|&n| {
            let mut acc = Complex64::new(0.0, 0.0);
            for (m, bm) in right.iter() {
                let bra = (left.get(n) * bm).conj();
                for (r, br) in left.iter() {
                    for (s, bs) in right.iter() {
                        acc += bra * br * bs * log_weight(n, m, r, s).exp();
                    }
                }
            }
            acc
        })
        .collect();
    let total: Complex64 = rows.into_iter().sum();
    if !total.re.is_finite() || !total.im.is_finite() {
        return Err(KdError::NonFinite(format!("normalization sum is {total}")));
    }
    Ok(total)
}

/// A Gaussian pair behind its two gratings, with amplitude tables cached.
#[derive(Debug, Clone)]
pub struct DiffractedState {
    state: GaussianEntangledState,
    left: GratingConfig,
    right: GratingConfig,
    left_table: AmplitudeTable,
    right_table: AmplitudeTable,
}

impl DiffractedState {
    pub fn new(state: GaussianEntangledState, left: GratingConfig, right: GratingConfig) -> Result<Self> {
        Ok(Self {
            left_table: left.table()?,
            right_table: right.table()?,
            state,
            left,
            right,
        })
    }

    pub fn state(&self) -> &GaussianEntangledState {
        &self.state
    }

    pub fn left(&self) -> &GratingConfig {
        &self.left
    }

    pub fn right(&self) -> &GratingConfig {
        &self.right
    }

    pub fn left_table(&self) -> &AmplitudeTable {
        &self.left_table
    }

    pub fn right_table(&self) -> &AmplitudeTable {
        &self.right_table
    }

    /// Unnormalized `Phi_*(p, q)`.
    pub fn amplitude(&self, p: f64, q: f64) -> Complex64 {
        let (kl, kr) = (self.left.k, self.right.k);
        let mut acc = Complex64::new(0.0, 0.0);
        for (n, bn) in self.left_table.iter() {
            let u = p - 2.0 * f64::from(n) * kl;
            for (m, bm) in self.right_table.iter() {
                let v = q - 2.0 * f64::from(m) * kr;
                acc += bn * bm * self.state.exponent(u, v).exp();
            }
        }
        acc
    }

    /// `N^{-2} = int |Phi_*|^2` from the closed-form Gaussian sum.
    pub fn normalization_analytic(&self) -> Result<f64> {
        let prefactor = normalization_prefactor(&self.state)?;
        let (kl, kr) = (self.left.k, self.right.k);
        let state = self.state;
        let sum = quadruple_sum(&self.left_table, &self.right_table, |n, m, r, s| {
            NormalizationTerm::new(&state, kl, kr, n, m, r, s).log_weight(&state, kl, kr)
        })?;
        Ok(prefactor * sum.re)
    }

    /// `int |Phi_*|^2` by quadrature.
    pub fn normalization_quadrature(&self, spec: &QuadratureSpec) -> Result<QuadratureResult> {
        quad2d(|p, q| self.amplitude(p, q).norm_sqr(), spec)
    }

    /// `|N Phi_*(fixed_p, q)|^2` along `q_axis`.
    ///
    /// The normalization is that of the full joint distribution, so the
    /// slice itself does not integrate to one.
    pub fn pattern_slice(&self, fixed_p: f64, q_axis: Axis) -> Result<PatternGrid> {
        let norm_sq = self.normalization_analytic()?.recip();
        let values: Vec<f64> = q_axis
            .values()
            .par_iter()
            .map(|&q| norm_sq * self.amplitude(fixed_p, q).norm_sqr())
            .collect();
        Ok(
            PatternGrid::new(vec![q_axis], values, NormalizationTag::UnnormalizedSlice)?
                .with_metadata("fixed_p", fixed_p)
                .with_metadata("Q", self.state.q_spread)
                .with_metadata("Q_star", self.state.q_star_spread)
                .with_metadata("P", self.state.p_coupling())
                .with_metadata("K_L", self.left.k)
                .with_metadata("K_R", self.right.k)
                .with_metadata("w", self.left.w)
                .with_metadata("n_max_left", self.left.n_max)
                .with_metadata("n_max_right", self.right.n_max),
        )
    }

    /// Normalized `|Phi(p, q)|^2` on a `p x q` grid.
    pub fn joint_pattern(&self, p_axis: Axis, q_axis: Axis) -> Result<PatternGrid> {
        let norm_sq = self.normalization_analytic()?.recip();
        let qs = q_axis.values().to_vec();
        let values: Vec<f64> = p_axis
            .values()
            .par_iter()
            .flat_map_iter(|&p| qs.iter().map(move |&q| (p, q)))
            .map(|(p, q)| norm_sq * self.amplitude(p, q).norm_sqr())
            .collect();
        PatternGrid::new(vec![p_axis, q_axis], values, NormalizationTag::NormalizedJoint)
    }
}

pub fn diffracted_amplitude(
    state: &GaussianEntangledState,
    left: &GratingConfig,
    right: &GratingConfig,
    p: f64,
    q: f64,
) -> Result<Complex64> {
    Ok(DiffractedState::new(*state, *left, *right)?.amplitude(p, q))
}

/// `N^{-2}`; see [`DiffractedState::normalization_analytic`].
pub fn normalization_analytic(
    state: &GaussianEntangledState,
    left: &GratingConfig,
    right: &GratingConfig,
) -> Result<f64> {
    DiffractedState::new(*state, *left, *right)?.normalization_analytic()
}

pub fn pattern_slice(
    state: &GaussianEntangledState,
    left: &GratingConfig,
    right: &GratingConfig,
    fixed_p: f64,
    q_axis: Axis,
) -> Result<PatternGrid> {
    DiffractedState::new(*state, *left, *right)?.pattern_slice(fixed_p, q_axis)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn state(q: f64, qs: f64, p: f64) -> GaussianEntangledState {
        GaussianEntangledState::new(q, qs, p).unwrap()
    }

    #[test]
    fn initial_amplitude_basics() {
        let s = state(1.0, 0.9, 1.1);
        assert_eq!(s.initial_amplitude(0.0, 0.0), 1.0);
        assert!((s.initial_amplitude(0.4, -0.7) - s.initial_amplitude(-0.4, 0.7)).abs() < 1e-16);
        let prod = GaussianEntangledState::product(1.0, 0.9).unwrap();
        let (p, q) = (0.3, -1.2);
        assert!((prod.initial_amplitude(p, q) - (-p * p).exp() * (-q * q / 0.81_f64).exp()).abs() < 1e-16);
        let sym = state(1.2, 1.2, 0.95);
        assert_eq!(sym.initial_amplitude(0.3, -0.8), sym.initial_amplitude(-0.8, 0.3));
    }

    #[test]
    fn schmidt_numbers() {
        assert_eq!(
            GaussianEntangledState::product(1.0, 0.9)
                .unwrap()
                .schmidt_number()
                .unwrap(),
            1.0
        );
        assert!((state(1.0, 0.9, 1.1).schmidt_number().unwrap() - 1.0773).abs() < 1e-4);
        let expected = (1.0 - 0.81 / (4.0 * 0.75f64.powi(4))).powf(-0.5);
        assert!((state(1.0, 0.9, 0.75).schmidt_number().unwrap() - expected).abs() < 1e-14);
        assert!(matches!(state(1.0, 1.0, 0.7).schmidt_number(), Err(KdError::Domain(_))));
        assert!(state(1.0, 0.9, 0.6).schmidt_number().is_err());
    }

    #[test]
    fn invalid_spreads() {
        assert!(GaussianEntangledState::new(0.0, 1.0, 1.0).is_err());
        assert!(GaussianEntangledState::new(1.0, f64::NAN, 1.0).is_err());
        assert!(GaussianEntangledState::new(1.0, 1.0, 0.0).is_err());
        assert!(!GaussianEntangledState::product(1.0, 1.0).unwrap().is_entangled());
        assert_eq!(
            GaussianEntangledState::product(1.0, 1.0).unwrap().p_coupling(),
            f64::INFINITY
        );
    }

    #[test]
    fn undiffracted_normalization_is_gaussian_norm() {
        let s = state(1.0, 0.9, 1.1);
        let g = GratingConfig::new(0.0, 0.2, 2).unwrap();
        let h = GratingConfig::new(0.0, 0.3, 2).unwrap();
        let n = normalization_analytic(&s, &g, &h).unwrap();
        assert!((n - s.norm_sq().unwrap()).abs() < 1e-14);
        assert!((n - 1.5229).abs() < 1e-4);
        let prod = GaussianEntangledState::product(1.0, 0.9).unwrap();
        assert!((normalization_analytic(&prod, &g, &h).unwrap() - PI * 0.9 / 2.0).abs() < 1e-14);
    }

    #[test]
    fn no_diffraction_returns_initial_state() {
        let s = state(1.0, 0.9, 1.1);
        let g = GratingConfig::new(0.0, 0.2, 2).unwrap();
        let h = GratingConfig::new(0.0, 0.3, 2).unwrap();
        for &(p, q) in &[(0.0, 0.0), (0.4, -1.0), (-2.0, 0.3)] {
            let a = diffracted_amplitude(&s, &g, &h, p, q).unwrap();
            assert!((a - Complex64::new(s.initial_amplitude(p, q), 0.0)).norm() < 1e-16);
        }
    }

    #[test]
    fn far_momenta_vanish() {
        let s = state(1.0, 0.9, 1.1);
        let g = GratingConfig::new(1.0, 0.2, 2).unwrap();
        let h = GratingConfig::new(1.0, 0.3, 2).unwrap();
        assert!(diffracted_amplitude(&s, &g, &h, 50.0, 0.0).unwrap().norm() < 1e-200);
    }

    #[test]
    fn large_orders_do_not_overflow() {
        let s = state(1.0, 0.9, 1.1);
        let g = GratingConfig::new(2.0, 0.3, 40).unwrap();
        let n = normalization_analytic(&s, &g, &g).unwrap();
        assert!(((n - s.norm_sq().unwrap()) / n).abs() < 1e-10, "{n}");
    }
}
