//! Identical-particle states against the non-symmetrized pipeline and
//! quadrature.

use kd_core::identical::{
    normalization_parts, overlap_analytic, overlap_of_kernel, symmetrize, IdenticalSystem, ParticleStatistics,
};
use kd_core::multimode::{DiffractedState, GaussianEntangledState};
use kd_core::numerics::quadrature::{quad2d, QuadratureSpec};
use kd_core::{Axis, GratingConfig, KdError};

#[test]
fn symmetric_bosons_show_no_exchange_effect() {
    let g = GratingConfig::new(0.1, 0.2, 2).unwrap();
    let base = GaussianEntangledState::new(1.0, 1.0, 0.9).unwrap();
    let axis = Axis::uniform("q", -4.0, 4.0, 0.04).unwrap();
    assert_eq!(axis.len(), 201);
    let bosons = IdenticalSystem::new(symmetrize(&base, ParticleStatistics::Boson, &g).unwrap())
        .unwrap()
        .pattern_slice(0.0, axis.clone())
        .unwrap();
    let plain = DiffractedState::new(base, g, g)
        .unwrap()
        .pattern_slice(0.0, axis)
        .unwrap();
    for (a, b) in bosons.values().iter().zip(plain.values()) {
        assert!((a - b).abs() < 1e-10, "{a} vs {b}");
    }
}

#[test]
fn symmetric_fermions_are_zero_over_zero() {
    let g = GratingConfig::new(0.1, 0.2, 2).unwrap();
    let base = GaussianEntangledState::new(0.8, 0.8, 1.0).unwrap();
    let err = symmetrize(&base, ParticleStatistics::Fermion, &g).unwrap_err();
    assert!(matches!(err, KdError::Degenerate(_)));
}

#[test]
fn crossed_term_matches_quadrature() {
    let spec = QuadratureSpec::tensor(128, 9.0).unwrap();
    let g = GratingConfig::new(1.0, 0.2, 3).unwrap();
    for &p in &[f64::INFINITY, 1.1, 0.75] {
        let base = GaussianEntangledState::new(1.0, 0.9, p).unwrap();
        let pair = symmetrize(&base, ParticleStatistics::Boson, &g).unwrap();
        let (direct, crossed) = normalization_parts(&pair).unwrap();
        let plain = DiffractedState::new(base, g, g).unwrap();
        let numeric_crossed = quad2d(|a, b| (plain.amplitude(a, b).conj() * plain.amplitude(b, a)).re, &spec)
            .unwrap()
            .value;
        let numeric_direct = plain.normalization_quadrature(&spec).unwrap().value;
        assert!(
            ((crossed - numeric_crossed) / numeric_crossed).abs() < 1e-10,
            "{crossed} vs {numeric_crossed}"
        );
        assert!(((direct - numeric_direct) / numeric_direct).abs() < 1e-10);
    }
}

#[test]
fn overlap_closed_form_on_a_sweep() {
    for &(q, qs, p) in &[
        (1.0, 0.9, 0.7),
        (0.6, 1.3, 1.0),
        (1.4, 0.5, 3.0),
        (0.9, 1.0, 0.68),
        (1.0, 0.9, 0.6715),
    ] {
        let s = GaussianEntangledState::new(q, qs, p).unwrap();
        let spec = s.quadrature_spec(0.0).unwrap();
        let numeric = overlap_of_kernel(|a, b| s.initial_amplitude(a, b), &spec).unwrap();
        let closed = overlap_analytic(&s).unwrap();
        assert!(
            (closed - numeric).abs() < 1e-8,
            "({q}, {qs}, {p}): {closed} vs {numeric}"
        );
    }
}
