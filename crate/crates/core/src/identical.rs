//! Identical particles: the (anti)symmetrized Gaussian pair behind a single
//! grating.
//!
//! The spatial state is `Phi_0(p, q) +- Phi_0(q, p)`, normalized with the
//! exchange overlap `theta = <Phi_0 | swap Phi_0> / <Phi_0 | Phi_0>`. Bosons
//! take `+`, fermions `-` (spins in the symmetric sector). After the grating
//! the amplitude is `N (F(p, q) +- F(q, p))` with
//! `F(p, q) = sum_{n,m} b_n b_m Phi_0(p - 2nK, q - 2mK)`.

use std::f64::consts::PI;

use num_complex::Complex64;
use rayon::prelude::*;

use crate::diffraction::{AmplitudeTable, GratingConfig};
use crate::error::{KdError, Result};
use crate::multimode::{quadruple_sum, DiffractedState, GaussianEntangledState};
use crate::numerics::quadrature::{quad2d, QuadratureResult, QuadratureSpec};
use crate::pattern::{Axis, NormalizationTag, PatternGrid};

/// Fermion states with `1 - theta` below this are treated as `0/0`.
pub const DEGENERACY_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ParticleStatistics {
    Boson,
    Fermion,
}

impl ParticleStatistics {
    /// `+1` for bosons, `-1` for fermions.
    pub fn sign(&self) -> f64 {
        match self {
            ParticleStatistics::Boson => 1.0,
            ParticleStatistics::Fermion => -1.0,
        }
    }

    pub fn as_str(&self) -> &'static str {
        match self {
            ParticleStatistics::Boson => "boson",
            ParticleStatistics::Fermion => "fermion",
        }
    }
}

/// Closed-form exchange overlap
/// `theta = Q Q* sqrt((4P^4 - Q^2 Q*^2) / (P^4 (Q^2 + Q*^2)^2 - Q^4 Q*^4))`.
///
/// Defined on the closure of the normalizable region; it vanishes on the
/// boundary `4P^4 = Q^2 Q*^2` and equals one whenever `Q = Q*`.
pub fn overlap_analytic(state: &GaussianEntangledState) -> Result<f64> {
    let (q, qs, ip2) = (state.q_spread(), state.q_star_spread(), state.inv_p_sq());
    let qq = q * qs;
    // numerator and denominator both multiplied by 1/P^4
    let num = 4.0 - qq * qq * ip2 * ip2;
    if num < -4.0 * f64::EPSILON * 16.0 {
        return Err(KdError::domain(format!(
            "exchange overlap undefined for a non-normalizable state (Q = {q}, Q* = {qs}, P = {})",
            state.p_coupling()
        )));
    }
    if q == qs {
        return Ok(1.0);
    }
    let sum = q * q + qs * qs;
    let den = sum * sum - qq * qq * qq * qq * ip2 * ip2;
    Ok((qq * (num.max(0.0) / den).sqrt()).clamp(0.0, 1.0))
}

/// `int f(p, q) f(q, p) / int f(p, q)^2`, by quadrature.
pub fn overlap_of_kernel<F>(kernel: F, spec: &QuadratureSpec) -> Result<f64>
where
    F: Fn(f64, f64) -> f64 + Sync,
{
    let norm = quad2d(|p, q| kernel(p, q).powi(2), spec)?.value;
    if !(norm > 0.0) {
        return Err(KdError::domain("exchange overlap of a zero kernel"));
    }
    let cross = quad2d(|p, q| kernel(p, q) * kernel(q, p), spec)?.value;
    Ok(cross / norm)
}

/// Exchange overlap of `Phi_0` by quadrature.
pub fn overlap_quadrature(state: &GaussianEntangledState, spec: &QuadratureSpec) -> Result<f64> {
    state.require_normalizable()?;
    overlap_of_kernel(|p, q| state.initial_amplitude(p, q), spec)
}

/// An (anti)symmetrized Gaussian pair and the grating both particles cross.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IdenticalPairState {
    base: GaussianEntangledState,
    statistics: ParticleStatistics,
    overlap: f64,
    grating: GratingConfig,
}

impl IdenticalPairState {
    pub fn base(&self) -> &GaussianEntangledState {
        &self.base
    }

    pub fn statistics(&self) -> ParticleStatistics {
        self.statistics
    }

    /// Exchange overlap `theta` of the base state.
    pub fn overlap(&self) -> f64 {
        self.overlap
    }

    pub fn grating(&self) -> &GratingConfig {
        &self.grating
    }

    /// Schmidt number of the base state, used as the entanglement measure.
    pub fn schmidt_number(&self) -> Result<f64> {
        self.base.schmidt_number()
    }

    /// Normalized undiffracted amplitude
    /// `(Phi_0(p, q) +- Phi_0(q, p)) / sqrt((2 +- 2 theta) <Phi_0|Phi_0>)`.
    pub fn initial_amplitude(&self, p: f64, q: f64) -> Result<f64> {
        let sign = self.statistics.sign();
        let scale = ((2.0 + 2.0 * sign * self.overlap) * self.base.norm_sq()?)
            .sqrt()
            .recip();
        Ok(scale * (self.base.initial_amplitude(p, q) + sign * self.base.initial_amplitude(q, p)))
    }
}

/// Builds the identical-particle state, rejecting fermion states that vanish
/// identically (`theta -> 1`, e.g. `Q = Q*`).
pub fn symmetrize(
    base: &GaussianEntangledState,
    statistics: ParticleStatistics,
    grating: &GratingConfig,
) -> Result<IdenticalPairState> {
    base.require_normalizable()?;
    let overlap = overlap_analytic(base)?;
    if statistics == ParticleStatistics::Fermion && 1.0 - overlap < DEGENERACY_TOLERANCE {
        return Err(KdError::Degenerate(format!(
            "antisymmetrized state vanishes (exchange overlap {overlap}, Q = {}, Q* = {})",
            base.q_spread(),
            base.q_star_spread()
        )));
    }
    Ok(IdenticalPairState {
        base: *base,
        statistics,
        overlap,
        grating: *grating,
    })
}

/// Log-weight of the crossed normalization term
/// `int Phi_0(p - 2nK, q - 2mK) Phi_0(q - 2rK, p - 2sK)`, without its
/// prefactor.
fn crossed_log_weight(state: &GaussianEntangledState, k: f64, n: i32, m: i32, r: i32, s: i32) -> f64 {
    let q2 = state.q_spread() * state.q_spread();
    let qs2 = state.q_star_spread() * state.q_star_spread();
    let ip2 = state.inv_p_sq();
    let xi2 = 1.0 / (1.0 / q2 + 1.0 / qs2);
    let (n, m, r, s) = (f64::from(n), f64::from(m), f64::from(r), f64::from(s));
    let constant = -4.0 * k * k * ((n * n + r * r) / q2 + (m * m + s * s) / qs2 + (m * n + r * s) * ip2);
    let mu = 2.0 * k * (2.0 * m / qs2 + 2.0 * r / q2 + (n + s) * ip2);
    let mu_bar = 2.0 * k * (2.0 * s / qs2 + 2.0 * n / q2 + (m + r) * ip2);
    let shifted = mu_bar - mu * xi2 * ip2;
    constant + mu * mu * xi2 / 4.0 + xi2 * shifted * shifted / (4.0 * (1.0 - xi2 * xi2 * ip2 * ip2))
}

fn crossed_prefactor(state: &GaussianEntangledState) -> f64 {
    let q2 = state.q_spread() * state.q_spread();
    let qs2 = state.q_star_spread() * state.q_star_spread();
    let ip2 = state.inv_p_sq();
    let xi2 = 1.0 / (1.0 / q2 + 1.0 / qs2);
    PI * xi2 / (1.0 - xi2 * xi2 * ip2 * ip2).sqrt()
}

/// Direct and crossed parts `(D, C)` of `N^{-2} = 2D +- 2C`.
pub fn normalization_parts(pair: &IdenticalPairState) -> Result<(f64, f64)> {
    let grating = pair.grating;
    let direct = DiffractedState::new(pair.base, grating, grating)?.normalization_analytic()?;
    let table = grating.table()?;
    let base = pair.base;
    let crossed = quadruple_sum(&table, &table, |n, m, r, s| {
        crossed_log_weight(&base, grating.k, n, m, r, s)
    })?;
    Ok((direct, crossed_prefactor(&base) * crossed.re))
}

/// The normalization constant `N` itself (not `N^{-2}`).
pub fn normalization_identical(pair: &IdenticalPairState) -> Result<f64> {
    let (direct, crossed) = normalization_parts(pair)?;
    let inv_sq = 2.0 * direct + 2.0 * pair.statistics.sign() * crossed;
    if !(inv_sq > 0.0) {
        return Err(KdError::Degenerate(format!(
            "diffracted {} state has norm^2 {inv_sq}",
            pair.statistics.as_str()
        )));
    }
    Ok(inv_sq.sqrt().recip())
}

/// A diffracted identical pair with its table and normalization cached.
#[derive(Debug, Clone)]
pub struct IdenticalSystem {
    pair: IdenticalPairState,
    table: AmplitudeTable,
    normalization: f64,
}

impl IdenticalSystem {
    pub fn new(pair: IdenticalPairState) -> Result<Self> {
        Ok(Self {
            table: pair.grating.table()?,
            normalization: normalization_identical(&pair)?,
            pair,
        })
    }

    pub fn pair(&self) -> &IdenticalPairState {
        &self.pair
    }

    pub fn table(&self) -> &AmplitudeTable {
        &self.table
    }

    pub fn normalization(&self) -> f64 {
        self.normalization
    }

    fn single_branch(&self, p: f64, q: f64) -> Complex64 {
        let k = self.pair.grating.k;
        let mut acc = Complex64::new(0.0, 0.0);
        for (n, bn) in self.table.iter() {
            let u = p - 2.0 * f64::from(n) * k;
            for (m, bm) in self.table.iter() {
                let v = q - 2.0 * f64::from(m) * k;
                acc += bn * bm * self.pair.base.exponent(u, v).exp();
            }
        }
        acc
    }

    /// `F(p, q) +- F(q, p)`, unnormalized.
    pub fn raw_amplitude(&self, p: f64, q: f64) -> Complex64 {
        self.single_branch(p, q) + self.pair.statistics.sign() * self.single_branch(q, p)
    }

    /// Normalized amplitude `N (F(p, q) +- F(q, p))`.
    pub fn amplitude(&self, p: f64, q: f64) -> Complex64 {
        self.raw_amplitude(p, q) * self.normalization
    }

    /// `int |N (F +- F_swapped)|^2` by quadrature; one up to truncation.
    pub fn norm_quadrature(&self, spec: &QuadratureSpec) -> Result<QuadratureResult> {
        quad2d(|p, q| self.amplitude(p, q).norm_sqr(), spec)
    }

    /// `|amplitude(fixed_p, q)|^2` along `q_axis`.
    pub fn pattern_slice(&self, fixed_p: f64, q_axis: Axis) -> Result<PatternGrid> {
        let values: Vec<f64> = q_axis
            .values()
            .par_iter()
            .map(|&q| self.amplitude(fixed_p, q).norm_sqr())
            .collect();
        let base = self.pair.base;
        Ok(
            PatternGrid::new(vec![q_axis], values, NormalizationTag::UnnormalizedSlice)?
                .with_metadata("statistics", self.pair.statistics.as_str())
                .with_metadata("fixed_p", fixed_p)
                .with_metadata("Q", base.q_spread())
                .with_metadata("Q_star", base.q_star_spread())
                .with_metadata("P", base.p_coupling())
                .with_metadata("K", self.pair.grating.k)
                .with_metadata("w", self.pair.grating.w)
                .with_metadata("n_max", self.pair.grating.n_max)
                .with_metadata("overlap", self.pair.overlap),
        )
    }
}

pub fn diffracted_identical_amplitude(pair: &IdenticalPairState, p: f64, q: f64) -> Result<Complex64> {
    Ok(IdenticalSystem::new(*pair)?.amplitude(p, q))
}

pub fn pattern_identical_slice(pair: &IdenticalPairState, fixed_p: f64, q_axis: Axis) -> Result<PatternGrid> {
    IdenticalSystem::new(*pair)?.pattern_slice(fixed_p, q_axis)
}

/// One point of the entanglement vs. exchange-overlap sweep.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ComplementarityRow {
    pub p_coupling: f64,
    pub schmidt: f64,
    pub overlap: f64,
}

/// Schmidt number and exchange overlap for each `P`. Every `P` must give a
/// normalizable state.
pub fn complementarity_sweep(q_spread: f64, q_star_spread: f64, p_values: &[f64]) -> Result<Vec<ComplementarityRow>> {
    p_values
        .iter()
        .map(|&p| {
            let state = GaussianEntangledState::new(q_spread, q_star_spread, p)?;
            Ok(ComplementarityRow {
                p_coupling: p,
                schmidt: state.schmidt_number()?,
                overlap: overlap_analytic(&state)?,
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn base(q: f64, qs: f64, p: f64) -> GaussianEntangledState {
        GaussianEntangledState::new(q, qs, p).unwrap()
    }

    fn grating(w: f64) -> GratingConfig {
        GratingConfig::new(w, 0.2, 2).unwrap()
    }

    #[test]
    fn overlap_limits() {
        let prod = GaussianEntangledState::product(1.0, 0.9).unwrap();
        assert!((overlap_analytic(&prod).unwrap() - 1.8 / 1.81).abs() < 1e-15);
        assert_eq!(overlap_analytic(&base(1.3, 1.3, 0.95)).unwrap(), 1.0);
        let edge = base(1.0, 0.9, (0.45f64).sqrt() * (1.0 + 1e-12));
        assert!(overlap_analytic(&edge).unwrap() < 1e-4);
        assert!(overlap_analytic(&base(1.0, 0.9, 0.6)).is_err());
    }

    #[test]
    fn overlap_matches_quadrature() {
        let spec = QuadratureSpec::default();
        for &p in &[f64::INFINITY, 2.0, 1.1, 0.75] {
            let s = base(1.0, 0.9, p);
            let a = overlap_analytic(&s).unwrap();
            let n = overlap_quadrature(&s, &spec).unwrap();
            assert!((a - n).abs() < 1e-10, "P = {p}: {a} vs {n}");
        }
    }

    #[test]
    fn antisymmetric_kernel_has_negative_overlap() {
        let s = base(1.0, 0.9, 1.1);
        let theta = overlap_of_kernel(|p, q| (p - q) * s.initial_amplitude(p, q), &QuadratureSpec::default()).unwrap();
        assert!(theta < 0.0);
    }

    #[test]
    fn symmetric_fermions_are_degenerate() {
        let err = symmetrize(&base(1.0, 1.0, 0.9), ParticleStatistics::Fermion, &grating(0.1)).unwrap_err();
        assert!(matches!(err, KdError::Degenerate(_)));
        assert!(err.to_string().contains("state undefined (0/0)"));
        assert!(symmetrize(&base(1.0, 1.0, 0.9), ParticleStatistics::Boson, &grating(0.1)).is_ok());
    }

    #[test]
    fn exchange_symmetry_and_pauli_zero() {
        let s = base(1.0, 0.9, 1.1);
        let fermi = IdenticalSystem::new(symmetrize(&s, ParticleStatistics::Fermion, &grating(1.0)).unwrap()).unwrap();
        let bose = IdenticalSystem::new(symmetrize(&s, ParticleStatistics::Boson, &grating(1.0)).unwrap()).unwrap();
        for &(p, q) in &[(0.3, -0.5), (1.2, 0.1), (-0.9, 0.9)] {
            assert!((fermi.amplitude(p, q) + fermi.amplitude(q, p)).norm() < 1e-15);
            assert!((bose.amplitude(p, q) - bose.amplitude(q, p)).norm() < 1e-15);
        }
        for &p in &[0.0, 0.37, -1.4] {
            assert_eq!(fermi.amplitude(p, p).norm(), 0.0);
        }
    }

    #[test]
    fn undiffracted_normalization_uses_overlap() {
        for stats in [ParticleStatistics::Boson, ParticleStatistics::Fermion] {
            let s = base(1.0, 0.9, 1.1);
            let pair = symmetrize(&s, stats, &grating(0.0)).unwrap();
            let n = normalization_identical(&pair).unwrap();
            let expected = ((2.0 + 2.0 * stats.sign() * pair.overlap()) * s.norm_sq().unwrap())
                .sqrt()
                .recip();
            assert!((n - expected).abs() < 1e-13 * expected, "{stats:?}");
            let sys = IdenticalSystem::new(pair).unwrap();
            let a = sys.amplitude(0.3, -0.4).re;
            assert!((a - pair.initial_amplitude(0.3, -0.4).unwrap()).abs() < 1e-14);
        }
    }

    #[test]
    fn diffracted_norm_is_one_by_quadrature() {
        let spec = QuadratureSpec::default();
        for stats in [ParticleStatistics::Boson, ParticleStatistics::Fermion] {
            for &p in &[200.0, 1.1, 0.75] {
                let pair = symmetrize(&base(1.0, 0.9, p), stats, &grating(1.0)).unwrap();
                let norm = IdenticalSystem::new(pair)
                    .unwrap()
                    .norm_quadrature(&spec)
                    .unwrap()
                    .value;
                assert!((norm - 1.0).abs() < 1e-6, "{stats:?} P = {p}: {norm}");
            }
        }
    }

    #[test]
    fn sweep_rows() {
        let rows = complementarity_sweep(1.0, 0.9, &[f64::INFINITY, 2.0, 1.0, 0.7]).unwrap();
        assert_eq!(rows[0].schmidt, 1.0);
        assert!(rows
            .windows(2)
            .all(|w| w[1].schmidt > w[0].schmidt && w[1].overlap < w[0].overlap));
        assert!(complementarity_sweep(1.0, 0.9, &[0.5]).is_err());
    }
}
