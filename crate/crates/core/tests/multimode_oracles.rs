//! Gaussian-pair diffraction checked against independent computations.

use kd_core::multimode::{normalization_analytic, DiffractedState, GaussianEntangledState};
use kd_core::numerics::quadrature::{quad2d, QuadratureSpec};
use kd_core::numerics::schmidt::{schmidt_via_svd, KernelGrid};
use kd_core::{GratingConfig, DEFAULT_TAIL_TOLERANCE};
use num_complex::Complex64;

fn state(q: f64, qs: f64, p: f64) -> GaussianEntangledState {
    GaussianEntangledState::new(q, qs, p).unwrap()
}

/// Position-space wave function of the undiffracted Gaussian, from the
/// Fourier transform of `exp(-k.A.k / 2)` with
/// `A = [[2/Q^2, 1/P^2], [1/P^2, 2/Q*^2]]`.
fn position_wavefunction(s: &GaussianEntangledState, x: f64, y: f64) -> f64 {
    let a = 2.0 / (s.q_spread() * s.q_spread());
    let d = 2.0 / (s.q_star_spread() * s.q_star_spread());
    let b = s.inv_p_sq();
    let det = a * d - b * b;
    let quad = (d * x * x - 2.0 * b * x * y + a * y * y) / det;
    (-0.5 * quad).exp() / det.sqrt()
}

/// The untruncated grating phase `exp(-i w (1 + cos 2Kx))`.
fn transmission(w: f64, k: f64, x: f64) -> Complex64 {
    Complex64::from_polar(1.0, -w * (1.0 + (2.0 * k * x).cos()))
}

/// Momentum amplitude after both gratings, by Fourier quadrature over
/// position space.
fn fourier_amplitude(s: &GaussianEntangledState, w: f64, kl: f64, kr: f64, p: f64, q: f64) -> Complex64 {
    let spec = QuadratureSpec::tensor(160, 14.0).unwrap();
    let integrand = |x: f64, y: f64| {
        position_wavefunction(s, x, y)
            * transmission(w, kl, x)
            * transmission(w, kr, y)
            * Complex64::from_polar(1.0, -(p * x + q * y))
    };
    let re = quad2d(|x, y| integrand(x, y).re, &spec).unwrap().value;
    let im = quad2d(|x, y| integrand(x, y).im, &spec).unwrap().value;
    Complex64::new(re, im) / (2.0 * std::f64::consts::PI)
}

#[test]
fn amplitude_matches_position_space_fourier_transform() {
    let s = state(1.0, 0.9, 1.1);
    let system = DiffractedState::new(
        s,
        GratingConfig::new(1.0, 0.2, 20).unwrap(),
        GratingConfig::new(1.0, 0.3, 20).unwrap(),
    )
    .unwrap();
    for &(p, q) in &[(0.0, 0.0), (0.4, -0.6), (-1.1, 0.5)] {
        let ours = system.amplitude(p, q);
        let oracle = fourier_amplitude(&s, 1.0, 0.2, 0.3, p, q);
        assert!((ours - oracle).norm() < 1e-10, "({p}, {q}): {ours} vs {oracle}");
    }
}

#[test]
fn undiffracted_fourier_oracle_returns_gaussian() {
    let s = state(1.0, 0.9, 1.1);
    let a = fourier_amplitude(&s, 0.0, 0.2, 0.3, 0.3, -0.2);
    assert!((a.re - s.initial_amplitude(0.3, -0.2)).abs() < 1e-12);
    assert!(a.im.abs() < 1e-12);
}

#[test]
fn closed_form_normalization_matches_quadrature() {
    let spec = QuadratureSpec::tensor(128, 9.0).unwrap();
    let cases = [
        (1.0, 0.9, 1.1, 0.2, 0.3, 1.0, 2),
        (1.0, 0.9, f64::INFINITY, 0.2, 0.3, 1.0, 2),
        (1.0, 0.9, 0.75, 0.2, 0.3, 0.1, 2),
        (1.2, 0.7, 1.3, 0.25, 0.15, 2.0, 6),
        (0.8, 1.1, 0.9, 0.4, 0.4, 0.7, 4),
    ];
    for &(q, qs, p, kl, kr, w, n_max) in &cases {
        let system = DiffractedState::new(
            state(q, qs, p),
            GratingConfig::new(w, kl, n_max).unwrap(),
            GratingConfig::new(w, kr, n_max).unwrap(),
        )
        .unwrap();
        let analytic = system.normalization_analytic().unwrap();
        let numeric = system.normalization_quadrature(&spec).unwrap().value;
        assert!(
            ((analytic - numeric) / numeric).abs() < 1e-10,
            "{analytic} vs {numeric}"
        );
    }
}

#[test]
fn full_grating_preserves_the_norm() {
    for &w in &[0.1, 1.0, 3.0] {
        for &p in &[f64::INFINITY, 1.1, 0.75] {
            let s = state(1.0, 0.9, p);
            let left = GratingConfig::with_tail_tolerance(w, 0.2, DEFAULT_TAIL_TOLERANCE).unwrap();
            let right = GratingConfig::with_tail_tolerance(w, 0.3, DEFAULT_TAIL_TOLERANCE).unwrap();
            let n = normalization_analytic(&s, &left, &right).unwrap();
            let expected = s.norm_sq().unwrap();
            assert!(
                ((n - expected) / expected).abs() < 1e-8,
                "w = {w}, P = {p}: {n} vs {expected}"
            );
        }
    }
}

#[test]
fn weak_coupling_approaches_product_state() {
    let left = GratingConfig::new(1.0, 0.2, 3).unwrap();
    let right = GratingConfig::new(1.0, 0.3, 3).unwrap();
    let product = DiffractedState::new(GaussianEntangledState::product(1.0, 0.9).unwrap(), left, right).unwrap();
    let weak = DiffractedState::new(state(1.0, 0.9, 1e4), left, right).unwrap();
    for &(p, q) in &[(0.0, 0.0), (0.5, -0.3), (-1.0, 1.2)] {
        assert!((product.amplitude(p, q) - weak.amplitude(p, q)).norm() < 1e-7);
    }
    // the product amplitude factorizes
    let f = |p: f64, q: f64| product.amplitude(p, q);
    let lhs = f(0.3, 0.6) * f(-0.4, -0.1);
    let rhs = f(0.3, -0.1) * f(-0.4, 0.6);
    assert!((lhs - rhs).norm() < 1e-15);
}

#[test]
fn equal_spreads_and_wavenumbers_give_exchange_symmetry() {
    let g = GratingConfig::new(1.3, 0.25, 4).unwrap();
    let system = DiffractedState::new(state(0.9, 0.9, 1.0), g, g).unwrap();
    for &(p, q) in &[(0.2, -0.7), (1.5, 0.1)] {
        assert!((system.amplitude(p, q) - system.amplitude(q, p)).norm() < 1e-15);
    }
}

#[test]
fn schmidt_number_agrees_with_svd() {
    let grid = KernelGrid::default();
    let mut previous = f64::INFINITY;
    for i in 0..12 {
        let p = 0.72 + i as f64 * (5.0 - 0.72) / 11.0;
        let s = state(1.0, 0.9, p);
        let kernel = grid.sample(|a, b| s.initial_amplitude(a, b));
        let svd = schmidt_via_svd(&kernel, grid.weight()).unwrap();
        let closed = s.schmidt_number().unwrap();
        assert!(((svd - closed) / closed).abs() < 1e-8, "P = {p}: {svd} vs {closed}");
        assert!(closed < previous);
        previous = closed;
    }
}

#[test]
fn non_normalizable_region_is_rejected() {
    let g = GratingConfig::new(1.0, 0.2, 2).unwrap();
    assert!(normalization_analytic(&state(1.0, 0.9, 0.6), &g, &g).is_err());
}
