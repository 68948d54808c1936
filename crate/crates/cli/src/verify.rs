//! `kd verify`: closed forms against independent numerical oracles.

use std::f64::consts::{PI, TAU};

use kd_core::identical::{overlap_analytic, overlap_quadrature, symmetrize, IdenticalSystem, ParticleStatistics};
use kd_core::multimode::{DiffractedState, GaussianEntangledState};
use kd_core::numerics::schmidt::{schmidt_via_svd, KernelGrid};
use kd_core::single_mode::{
    equal_wavenumber_pattern, find_channels, position_pattern, Branch, SingleModePair, SingleModeSystem,
};
use kd_core::{amplitude, amplitude_table, GratingConfig, KdError, DEFAULT_TAIL_TOLERANCE};

#[derive(Debug, Clone, PartialEq)]
pub struct Check {
    pub name: &'static str,
    pub residual: f64,
    pub tolerance: f64,
}

impl Check {
    pub fn passed(&self) -> bool {
        self.residual <= self.tolerance
    }

    pub fn line(&self) -> String {
        format!(
            "{:<34} residual {:.3e}  tolerance {:.1e}  {}",
            self.name,
            self.residual,
            self.tolerance,
            if self.passed() { "ok" } else { "FAIL" }
        )
    }
}

fn max_of(values: impl IntoIterator<Item = f64>) -> f64 {
    values.into_iter().fold(0.0, f64::max)
}

fn bessel_integral(n: i32, z: f64) -> f64 {
    let nodes = 1024;
    let h = TAU / nodes as f64;
    (0..nodes)
        .map(|j| (f64::from(n) * j as f64 * h - z * (j as f64 * h).sin()).cos())
        .sum::<f64>()
        / nodes as f64
}

pub fn checks() -> Result<Vec<Check>, KdError> {
    let mut out = Vec::new();

    let mut unitarity = Vec::new();
    for w in [0.5, 1.0, 2.0, 5.0] {
        unitarity.push((amplitude_table(&GratingConfig::new(w, 0.2, 40)?)?.mass() - 1.0).abs());
    }
    out.push(Check {
        name: "amplitude unitarity",
        residual: max_of(unitarity),
        tolerance: 1e-12,
    });

    let mut bessel = Vec::new();
    for n in -10..=10 {
        for w in [0.3, 1.0, 4.5] {
            bessel.push((amplitude(n, w)?.norm() - bessel_integral(n, w).abs()).abs());
        }
    }
    out.push(Check {
        name: "amplitude vs Bessel integral",
        residual: max_of(bessel),
        tolerance: 1e-12,
    });

    let mut forms = Vec::new();
    for i in 0..200 {
        let t = f64::from(i);
        let g = GratingConfig::new(0.5 + (t * 0.37).rem_euclid(2.5), 0.2 + (t * 0.11).rem_euclid(0.5), 6)?;
        let pair = SingleModePair::new((t * 0.71).sin() * 2.0, (t * 1.3).cos() * 2.0, g, g)?;
        let (x, y) = ((t * 2.9).sin() * 10.0, (t * 0.53).cos() * 10.0);
        forms.push((position_pattern(&pair, x, y)?.total - equal_wavenumber_pattern(&pair, x, y)?.total).abs());
    }
    out.push(Check {
        name: "general vs equal-K position form",
        residual: max_of(forms),
        tolerance: 1e-12,
    });

    // K_L = (q - p)/2 = 2 K_R: direct (0, 0) meets swapped (-1, 2)
    let (p, q, w) = (0.1, 0.9, 1.0);
    let pair = SingleModePair::new(p, q, GratingConfig::new(w, 0.4, 3)?, GratingConfig::new(w, 0.2, 3)?)?;
    let system = SingleModeSystem::new(pair)?;
    let group = find_channels(&pair)
        .into_iter()
        .find(|g| g.contains(0, 0, Branch::Direct))
        .expect("direct (0, 0) is always present");
    let (b0, bm1, b2) = (amplitude(0, w)?, amplitude(-1, w)?, amplitude(2, w)?);
    let expected = 0.5 * (b0 * b0).norm_sqr() + 0.5 * (bm1 * b2).norm_sqr() + ((b0 * b0).conj() * bm1 * b2).re;
    let residual = if group.contains(-1, 2, Branch::Swapped) {
        (system.momentum_joint_probability(&group)? - expected).abs()
    } else {
        f64::INFINITY
    };
    out.push(Check {
        name: "two-branch channel probability",
        residual,
        tolerance: 1e-14,
    });

    let grid = KernelGrid::default();
    let mut schmidt = Vec::new();
    for pc in [0.8, 1.1, 2.0] {
        let s = GaussianEntangledState::new(1.0, 0.9, pc)?;
        let svd = schmidt_via_svd(&grid.sample(|a, b| s.initial_amplitude(a, b)), grid.weight())?;
        schmidt.push(((svd - s.schmidt_number()?) / s.schmidt_number()?).abs());
    }
    out.push(Check {
        name: "Schmidt number vs SVD",
        residual: max_of(schmidt),
        tolerance: 1e-6,
    });

    let left = GratingConfig::new(1.0, 0.2, 2)?;
    let right = GratingConfig::new(1.0, 0.3, 2)?;
    let mut norms = Vec::new();
    for pc in [f64::INFINITY, 1.1, 0.75] {
        let s = GaussianEntangledState::new(1.0, 0.9, pc)?;
        let d = DiffractedState::new(s, left, right)?;
        let numeric = d.normalization_quadrature(&s.quadrature_spec(0.8)?)?.value;
        norms.push(((d.normalization_analytic()? - numeric) / numeric).abs());
    }
    out.push(Check {
        name: "normalization vs quadrature",
        residual: max_of(norms),
        tolerance: 1e-8,
    });

    let mut preserved = Vec::new();
    for w in [0.1, 1.0, 3.0] {
        let s = GaussianEntangledState::new(1.0, 0.9, 1.1)?;
        let l = GratingConfig::with_tail_tolerance(w, 0.2, DEFAULT_TAIL_TOLERANCE)?;
        let r = GratingConfig::with_tail_tolerance(w, 0.3, DEFAULT_TAIL_TOLERANCE)?;
        let n = DiffractedState::new(s, l, r)?.normalization_analytic()?;
        preserved.push((n / (PI * 0.9 * s.schmidt_number()? / 2.0) - 1.0).abs());
    }
    out.push(Check {
        name: "norm preservation",
        residual: max_of(preserved),
        tolerance: 1e-8,
    });

    let mut overlaps = Vec::new();
    for pc in [f64::INFINITY, 2.0, 1.1, 0.7] {
        let s = GaussianEntangledState::new(1.0, 0.9, pc)?;
        overlaps.push((overlap_analytic(&s)? - overlap_quadrature(&s, &s.quadrature_spec(0.0)?)?).abs());
    }
    out.push(Check {
        name: "exchange overlap vs quadrature",
        residual: max_of(overlaps),
        tolerance: 1e-8,
    });

    let g = GratingConfig::new(1.0, 0.2, 2)?;
    let mut identical = Vec::new();
    for stats in [ParticleStatistics::Boson, ParticleStatistics::Fermion] {
        for pc in [200.0, 1.1, 0.75] {
            let s = GaussianEntangledState::new(1.0, 0.9, pc)?;
            let sys = IdenticalSystem::new(symmetrize(&s, stats, &g)?)?;
            identical.push((sys.norm_quadrature(&s.quadrature_spec(0.8)?)?.value - 1.0).abs());
        }
    }
    out.push(Check {
        name: "identical-pair norm",
        residual: max_of(identical),
        tolerance: 1e-6,
    });

    Ok(out)
}
