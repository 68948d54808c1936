//! Single-mode momentum-entangled pairs `(|p>_L |q>_R + |q>_L |p>_R) / sqrt 2`.
//!
//! In momentum space, detection probabilities come from coherent
//! accumulation of branch amplitudes into final-momentum bins: the direct
//! branch `(n, m)` lands on `(p + 2nK_L, q + 2mK_R)`, the swapped one on
//! `(q + 2nK_L, p + 2mK_R)`, and branches that land on the same pair
//! interfere. In position space the pattern is the closed-form intensity of
//! the diffracted plane waves.

use num_complex::Complex64;
use rayon::prelude::*;

use crate::diffraction::{AmplitudeTable, GratingConfig};
use crate::error::{KdError, Result};
use crate::pattern::{Axis, NormalizationTag, PatternGrid};

/// Final momenta closer than this (in units of `Q`) are the same bin.
pub const MOMENTUM_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SingleModePair {
    pub p: f64,
    pub q: f64,
    pub left: GratingConfig,
    pub right: GratingConfig,
}

impl SingleModePair {
    pub fn new(p: f64, q: f64, left: GratingConfig, right: GratingConfig) -> Result<Self> {
        if !p.is_finite() || !q.is_finite() {
            return Err(KdError::domain(format!("momenta must be finite (p = {p}, q = {q})")));
        }
        if (left.w - right.w).abs() > 1e-12 * left.w.abs().max(1.0) {
            return Err(KdError::domain(format!(
                "both gratings need the same pulse area (left w = {}, right w = {})",
                left.w, right.w
            )));
        }
        Ok(Self { p, q, left, right })
    }

    /// Same gratings, second momentum replaced.
    pub fn with_q(&self, q: f64) -> Result<Self> {
        Self::new(self.p, q, self.left, self.right)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Branch {
    /// From `|p>_L |q>_R`.
    Direct,
    /// From `|q>_L |p>_R`.
    Swapped,
}

/// `n` photon-pair exchanges at the left grating and `m` at the right one,
/// applied to one branch of the initial state.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct ChannelBranch {
    pub n: i32,
    pub m: i32,
    pub branch: Branch,
}

impl ChannelBranch {
    /// Momenta `(left, right)` this history lands on.
    pub fn final_momenta(&self, pair: &SingleModePair) -> (f64, f64) {
        let (start_left, start_right) = match self.branch {
            Branch::Direct => (pair.p, pair.q),
            Branch::Swapped => (pair.q, pair.p),
        };
        (
            start_left + 2.0 * self.n as f64 * pair.left.k,
            start_right + 2.0 * self.m as f64 * pair.right.k,
        )
    }
}

/// Indistinguishable histories ending on one final momentum pair.
#[derive(Debug, Clone, PartialEq)]
pub struct InterferenceChannelGroup {
    pub final_left: f64,
    pub final_right: f64,
    pub branches: Vec<ChannelBranch>,
}

impl InterferenceChannelGroup {
    /// At least two alternatives contribute.
    pub fn is_interference(&self) -> bool {
        self.branches.len() >= 2
    }

    pub fn contains(&self, n: i32, m: i32, branch: Branch) -> bool {
        self.branches.contains(&ChannelBranch { n, m, branch })
    }
}

/// Integer `k` with `offset + step * k` within tolerance of zero, if any.
fn matching_shift(offset: f64, step: f64) -> Option<i64> {
    let k = (-offset / step).round();
    if !k.is_finite() || k.abs() > i32::MAX as f64 {
        return None;
    }
    ((offset + step * k).abs() <= MOMENTUM_TOLERANCE).then_some(k as i64)
}

/// All final momentum pairs reachable from either branch, grouped by
/// numeric coincidence.
///
/// Within one branch the bins `(start + 2nK_L, start' + 2mK_R)` are
/// distinct, so a group holds at most one direct and one swapped history.
/// The swapped partner of direct `(n, m)` is `(n', m')` with
/// `2(n - n') K_L = q - p` and `2(m - m') K_R = p - q`. Groups come out
/// sorted by `(final_left, final_right)`.
pub fn find_channels(pair: &SingleModePair) -> Vec<InterferenceChannelGroup> {
    let n_max = pair.left.n_max as i64;
    let m_max = pair.right.n_max as i64;
    let width = (2 * m_max + 1) as usize;
    let slot = |n: i64, m: i64| ((n + n_max) as usize) * width + (m + m_max) as usize;
    let mut swapped_used = vec![false; (2 * n_max as usize + 1) * width];
    let mut groups = Vec::with_capacity(2 * swapped_used.len());

    // q + 2n'K_L = p + 2nK_L  =>  (q - p) + 2K_L (n' - n) = 0, same on the right
    let left_shift = matching_shift(pair.q - pair.p, 2.0 * pair.left.k);
    let right_shift = matching_shift(pair.p - pair.q, 2.0 * pair.right.k);

    for n in -n_max..=n_max {
        for m in -m_max..=m_max {
            let direct = ChannelBranch {
                n: n as i32,
                m: m as i32,
                branch: Branch::Direct,
            };
            let (final_left, final_right) = direct.final_momenta(pair);
            let mut branches = vec![direct];
            if let (Some(dn), Some(dm)) = (left_shift, right_shift) {
                let (n2, m2) = (n + dn, m + dm);
                if n2.abs() <= n_max && m2.abs() <= m_max {
                    let swapped = ChannelBranch {
                        n: n2 as i32,
                        m: m2 as i32,
                        branch: Branch::Swapped,
                    };
                    let (l, r) = swapped.final_momenta(pair);
                    if (l - final_left).abs() <= MOMENTUM_TOLERANCE && (r - final_right).abs() <= MOMENTUM_TOLERANCE {
                        swapped_used[slot(n2, m2)] = true;
                        branches.push(swapped);
                    }
                }
            }
            groups.push(InterferenceChannelGroup {
                final_left,
                final_right,
                branches,
            });
        }
    }

    for n in -n_max..=n_max {
        for m in -m_max..=m_max {
            if swapped_used[slot(n, m)] {
                continue;
            }
            let swapped = ChannelBranch {
                n: n as i32,
                m: m as i32,
                branch: Branch::Swapped,
            };
            let (final_left, final_right) = swapped.final_momenta(pair);
            groups.push(InterferenceChannelGroup {
                final_left,
                final_right,
                branches: vec![swapped],
            });
        }
    }

    groups.sort_by(|a, b| {
        a.final_left
            .total_cmp(&b.final_left)
            .then(a.final_right.total_cmp(&b.final_right))
    });
    groups
}

/// Amplitude tables for a pair, built once and reused across evaluations.
#[derive(Debug, Clone)]
pub struct SingleModeSystem {
    pair: SingleModePair,
    left: AmplitudeTable,
    right: AmplitudeTable,
}

impl SingleModeSystem {
    pub fn new(pair: SingleModePair) -> Result<Self> {
        Ok(Self {
            left: pair.left.table()?,
            right: pair.right.table()?,
            pair,
        })
    }

    pub fn pair(&self) -> &SingleModePair {
        &self.pair
    }

    pub fn left_table(&self) -> &AmplitudeTable {
        &self.left
    }

    pub fn right_table(&self) -> &AmplitudeTable {
        &self.right
    }

    /// `|sum_branches b_n b_m / sqrt 2|^2`.
    ///
    /// For a singleton this is `|b_n b_m|^2 / 2`; for a two-branch group it
    /// expands to `|b_n b_m|^2/2 + |b_n' b_m'|^2/2 + Re(conj(b_n b_m) b_n' b_m')`.
    pub fn momentum_joint_probability(&self, group: &InterferenceChannelGroup) -> Result<f64> {
        let mut amplitude = Complex64::new(0.0, 0.0);
        for branch in &group.branches {
            if branch.n.unsigned_abs() as usize > self.pair.left.n_max
                || branch.m.unsigned_abs() as usize > self.pair.right.n_max
            {
                return Err(KdError::Contract(format!(
                    "branch ({}, {}) lies outside the truncation window",
                    branch.n, branch.m
                )));
            }
            let (l, r) = branch.final_momenta(&self.pair);
            if (l - group.final_left).abs() > MOMENTUM_TOLERANCE || (r - group.final_right).abs() > MOMENTUM_TOLERANCE {
                return Err(KdError::Contract(format!(
                    "branch {branch:?} lands on ({l}, {r}), not on the group's ({}, {})",
                    group.final_left, group.final_right
                )));
            }
            amplitude += self.left.get(branch.n) * self.right.get(branch.m);
        }
        Ok(0.5 * amplitude.norm_sqr())
    }

    /// `phi_L(x) = sum_n b_n exp(i 2 n K_L x)`.
    pub fn left_profile(&self, x: f64) -> Complex64 {
        self.left.profile(self.pair.left.k, x)
    }

    pub fn right_profile(&self, x: f64) -> Complex64 {
        self.right.profile(self.pair.right.k, x)
    }

    /// Joint intensity at positions `(x, y)` with its product-state part.
    pub fn position_pattern(&self, x: f64, y: f64) -> PositionIntensity {
        let (lx, ly) = (self.left_profile(x), self.left_profile(y));
        let (rx, ry) = (self.right_profile(x), self.right_profile(y));
        let product = 0.5 * (lx.norm_sqr() * ry.norm_sqr() + ly.norm_sqr() * rx.norm_sqr());
        let phase = Complex64::from_polar(1.0, (self.pair.q - self.pair.p) * (x - y));
        let cross = (lx.conj() * rx * ry.conj() * ly * phase).re;
        PositionIntensity {
            total: product + cross,
            product_part: product,
        }
    }
}

impl SingleModeSystem {
    /// `P(x, y)` on an `x x y` grid, rows evaluated in parallel.
    pub fn position_grid(&self, x_axis: Axis, y_axis: Axis) -> Result<PatternGrid> {
        let ys = y_axis.values().to_vec();
        let values: Vec<f64> = x_axis
            .values()
            .par_iter()
            .flat_map_iter(|&x| ys.iter().map(move |&y| (x, y)))
            // exact intensity is non-negative; clip rounding below zero
            .map(|(x, y)| self.position_pattern(x, y).total.max(0.0))
            .collect();
        Ok(
            PatternGrid::new(vec![x_axis, y_axis], values, NormalizationTag::UnnormalizedSlice)?
                .with_metadata("p", self.pair.p)
                .with_metadata("q", self.pair.q)
                .with_metadata("K_L", self.pair.left.k)
                .with_metadata("K_R", self.pair.right.k)
                .with_metadata("w", self.pair.left.w),
        )
    }
}

/// Unnormalized position-space intensities (plane waves have no norm).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PositionIntensity {
    /// `P(x, y)`.
    pub total: f64,
    /// `P_pro(x, y)`, the equal-weight mixture of the two product states.
    pub product_part: f64,
}

/// See [`SingleModeSystem::momentum_joint_probability`].
pub fn momentum_joint_probability(pair: &SingleModePair, group: &InterferenceChannelGroup) -> Result<f64> {
    SingleModeSystem::new(*pair)?.momentum_joint_probability(group)
}

/// Grating transmission `sum_{|n| <= n_max} b_n exp(i 2 n K x)`.
pub fn grating_profile(config: &GratingConfig, x: f64) -> Result<Complex64> {
    Ok(config.table()?.profile(config.k, x))
}

/// `P(x, y) = P_pro + Re(conj(phi_L(x)) phi_R(x) conj(phi_R(y)) phi_L(y) e^{i(q-p)(x-y)})`
/// with `2 P_pro = |phi_L(x)|^2 |phi_R(y)|^2 + |phi_L(y)|^2 |phi_R(x)|^2`.
pub fn position_pattern(pair: &SingleModePair, x: f64, y: f64) -> Result<PositionIntensity> {
    Ok(SingleModeSystem::new(*pair)?.position_pattern(x, y))
}

fn require_equal_wavenumbers(pair: &SingleModePair) -> Result<()> {
    if (pair.left.k - pair.right.k).abs() > 1e-12 * pair.left.k {
        return Err(KdError::domain(format!(
            "needs K_L = K_R (got {} and {})",
            pair.left.k, pair.right.k
        )));
    }
    Ok(())
}

/// The `K_L = K_R = K` form
/// `P = P_pro + |phi_K(x)|^2 |phi_K(y)|^2 cos((q - p)(x - y))`.
pub fn equal_wavenumber_pattern(pair: &SingleModePair, x: f64, y: f64) -> Result<PositionIntensity> {
    require_equal_wavenumbers(pair)?;
    let table = pair.left.table()?;
    let ix = table.profile(pair.left.k, x).norm_sqr();
    let iy = table.profile(pair.left.k, y).norm_sqr();
    let product = ix * iy;
    Ok(PositionIntensity {
        total: product + ix * iy * ((pair.q - pair.p) * (x - y)).cos(),
        product_part: product,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProbeRow {
    pub epsilon: f64,
    /// `sup |P - 2 P_pro|` over the sample points at `q = p + epsilon`.
    pub max_deviation: f64,
    /// `(epsilon X)^2 / 2 * sup |phi|^4` with `X = max |x - y|`.
    pub taylor_bound: f64,
}

/// Tracks `P -> 2 P_pro` as `q -> p`.
///
/// Uses `template.p` and both gratings; `q = p + epsilon` for each epsilon.
/// The doubling limit holds for equal wavenumbers, which the probe
/// requires. Epsilons must be non-negative and strictly decreasing.
pub fn discontinuity_probe(
    template: &SingleModePair,
    epsilons: &[f64],
    sample_points: &[(f64, f64)],
) -> Result<Vec<ProbeRow>> {
    require_equal_wavenumbers(template)?;
    if epsilons.iter().any(|e| !(*e >= 0.0) || !e.is_finite()) {
        return Err(KdError::domain("probe epsilons must be finite and non-negative"));
    }
    if epsilons.windows(2).any(|w| w[1] >= w[0]) {
        return Err(KdError::domain("probe epsilons must be strictly decreasing"));
    }
    if sample_points.is_empty() {
        return Err(KdError::domain("probe needs at least one sample point"));
    }

    let base = SingleModeSystem::new(*template)?;
    let reach = sample_points.iter().map(|(x, y)| (x - y).abs()).fold(0.0, f64::max);
    let peak = sample_points
        .iter()
        .map(|&(x, y)| base.left_profile(x).norm_sqr() * base.left_profile(y).norm_sqr())
        .fold(0.0, f64::max);

    epsilons
        .iter()
        .map(|&epsilon| {
            let system = SingleModeSystem::new(template.with_q(template.p + epsilon)?)?;
            let max_deviation = sample_points
                .par_iter()
                .map(|&(x, y)| {
                    let i = system.position_pattern(x, y);
                    (i.total - 2.0 * i.product_part).abs()
                })
                .reduce(|| 0.0, f64::max);
            Ok(ProbeRow {
                epsilon,
                max_deviation,
                taylor_bound: 0.5 * (epsilon * reach).powi(2) * peak,
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn grating(w: f64, k: f64, n_max: usize) -> GratingConfig {
        GratingConfig::new(w, k, n_max).unwrap()
    }

    #[test]
    fn singleton_probability_is_half_product() {
        let pair = SingleModePair::new(0.1, 0.7, grating(1.0, 0.2, 3), grating(1.0, 0.3 * 2f64.sqrt(), 3)).unwrap();
        let system = SingleModeSystem::new(pair).unwrap();
        for g in find_channels(&pair) {
            assert_eq!(g.branches.len(), 1);
            let b = g.branches[0];
            let expected = 0.5 * (system.left_table().get(b.n) * system.right_table().get(b.m)).norm_sqr();
            assert!((system.momentum_joint_probability(&g).unwrap() - expected).abs() < 1e-16);
        }
    }

    #[test]
    fn no_diffraction_keeps_the_initial_bins() {
        let pair = SingleModePair::new(0.0, 1.0, grating(0.0, 0.2, 2), grating(0.0, 0.3, 2)).unwrap();
        let system = SingleModeSystem::new(pair).unwrap();
        let groups = find_channels(&pair);
        let occupied: Vec<_> = groups
            .iter()
            .filter_map(|g| {
                let p = system.momentum_joint_probability(g).unwrap();
                (p > 0.0).then_some((g.final_left, g.final_right, p))
            })
            .collect();
        assert_eq!(occupied, vec![(0.0, 1.0, 0.5), (1.0, 0.0, 0.5)]);
    }

    #[test]
    fn equal_momenta_pair_each_branch_with_itself() {
        let pair = SingleModePair::new(0.4, 0.4, grating(1.0, 0.2, 2), grating(1.0, 0.2, 2)).unwrap();
        for g in find_channels(&pair) {
            assert_eq!(g.branches.len(), 2);
            assert_eq!((g.branches[0].n, g.branches[0].m), (g.branches[1].n, g.branches[1].m));
        }
    }

    #[test]
    fn mismatched_group_is_a_contract_error() {
        let pair = SingleModePair::new(0.0, 1.0, grating(1.0, 0.2, 2), grating(1.0, 0.3, 2)).unwrap();
        let other = SingleModePair::new(0.0, 1.3, grating(1.0, 0.2, 2), grating(1.0, 0.3, 2)).unwrap();
        let g = &find_channels(&other)[3];
        assert!(matches!(
            momentum_joint_probability(&pair, g),
            Err(KdError::Contract(_))
        ));
    }

    #[test]
    fn pulse_areas_must_match() {
        assert!(SingleModePair::new(0.0, 1.0, grating(1.0, 0.2, 2), grating(0.5, 0.2, 2)).is_err());
    }

    #[test]
    fn flat_pattern_without_interaction() {
        let pair = SingleModePair::new(0.2, 0.9, grating(0.0, 0.2, 2), grating(0.0, 0.3, 2)).unwrap();
        let i = position_pattern(&pair, 0.3, -1.1).unwrap();
        assert!((i.product_part - 1.0).abs() < 1e-15);
        let q_minus_p: f64 = 0.9 - 0.2;
        assert!((i.total - 1.0 - (q_minus_p * 1.4).cos()).abs() < 1e-15);
        let same = SingleModePair::new(0.2, 0.2, grating(0.0, 0.2, 2), grating(0.0, 0.3, 2)).unwrap();
        assert!((position_pattern(&same, 0.3, -1.1).unwrap().total - 2.0).abs() < 1e-15);
    }

    #[test]
    fn equal_momenta_double_the_product_pattern() {
        let pair = SingleModePair::new(0.5, 0.5, grating(1.3, 0.25, 6), grating(1.3, 0.25, 6)).unwrap();
        for i in 0..30 {
            let (x, y) = (-5.0 + 0.33 * i as f64, 4.0 - 0.29 * i as f64);
            let v = position_pattern(&pair, x, y).unwrap();
            assert!((v.total - 2.0 * v.product_part).abs() < 1e-12);
        }
    }

    #[test]
    fn grating_profile_at_origin_is_sum_of_amplitudes() {
        let cfg = grating(1.0, 0.2, 5);
        let t = cfg.table().unwrap();
        let sum: Complex64 = t.iter().map(|(_, b)| b).sum();
        assert!((grating_profile(&cfg, 0.0).unwrap() - sum).norm() < 1e-15);
        assert_eq!(
            grating_profile(&grating(0.0, 0.2, 5), 2.2).unwrap(),
            Complex64::new(1.0, 0.0)
        );
    }

    #[test]
    fn probe_rejects_bad_inputs() {
        let pair = SingleModePair::new(0.0, 0.0, grating(1.0, 0.2, 3), grating(1.0, 0.3, 3)).unwrap();
        assert!(discontinuity_probe(&pair, &[0.1], &[(0.0, 1.0)]).is_err());
        let pair = SingleModePair::new(0.0, 0.0, grating(1.0, 0.2, 3), grating(1.0, 0.2, 3)).unwrap();
        assert!(discontinuity_probe(&pair, &[0.1, 0.2], &[(0.0, 1.0)]).is_err());
        assert!(discontinuity_probe(&pair, &[-0.1], &[(0.0, 1.0)]).is_err());
        let zero = discontinuity_probe(&pair, &[0.0], &[(0.0, 1.0), (3.0, -2.0)]).unwrap();
        assert!(zero[0].max_deviation < 1e-15);
    }
}
