//! Least-squares fit of a single Gaussian `sigma * exp(-(q - c)^2 / Q_eff^2)`.

use nalgebra::{DMatrix, DVector};

use crate::error::{KdError, Result};

const MIN_SAMPLES: usize = 8;
const MAX_ITERATIONS: usize = 500;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GaussianFitResult {
    /// Peak intensity.
    pub sigma_eff: f64,
    /// Squared width `Q_eff^2`.
    pub q_eff_sq: f64,
    /// Centre; exactly zero for [`fit_gaussian`].
    pub center: f64,
    /// Coefficient of determination, clamped to `[0, 1]`.
    pub r_squared: f64,
    /// Largest absolute residual over the samples.
    pub max_residual: f64,
    pub iterations: usize,
}

impl GaussianFitResult {
    pub fn model(&self, q: f64) -> f64 {
        let d = q - self.center;
        self.sigma_eff * (-d * d / self.q_eff_sq).exp()
    }
}

/// Fit with the centre pinned at zero, as for the `p = 0` slices.
pub fn fit_gaussian(samples: &[(f64, f64)]) -> Result<GaussianFitResult> {
    validate(samples)?;
    let (peak, _, m2) = moments(samples, Some(0.0));
    let start = [peak, (2.0 * m2).max(f64::MIN_POSITIVE)];
    let (params, iterations) = levenberg_marquardt(samples, &start, false)?;
    Ok(summarize(samples, params[0], params[1], 0.0, iterations))
}

/// Fit with a free centre, for off-centre slices.
pub fn fit_gaussian_free_center(samples: &[(f64, f64)]) -> Result<GaussianFitResult> {
    validate(samples)?;
    let (peak, mean, m2) = moments(samples, None);
    let start = [peak, (2.0 * m2).max(f64::MIN_POSITIVE), mean];
    let (params, iterations) = levenberg_marquardt(samples, &start, true)?;
    Ok(summarize(samples, params[0], params[1], params[2], iterations))
}

fn validate(samples: &[(f64, f64)]) -> Result<()> {
    if samples.len() < MIN_SAMPLES {
        return Err(KdError::domain(format!(
            "Gaussian fit needs at least {MIN_SAMPLES} samples, got {}",
            samples.len()
        )));
    }
    for &(q, v) in samples {
        if !q.is_finite() || !v.is_finite() {
            return Err(KdError::NonFinite(format!("fit sample ({q}, {v})")));
        }
        if v < 0.0 {
            return Err(KdError::domain(format!("negative fit sample {v} at {q}")));
        }
    }
    if samples.iter().all(|&(_, v)| v == 0.0) {
        return Err(KdError::domain("all fit samples are zero"));
    }
    Ok(())
}

/// Peak value, weighted mean and second central moment (about `center`
/// when given).
fn moments(samples: &[(f64, f64)], center: Option<f64>) -> (f64, f64, f64) {
    let peak = samples.iter().map(|s| s.1).fold(0.0, f64::max);
    let mass: f64 = samples.iter().map(|s| s.1).sum();
    let mean = center.unwrap_or_else(|| samples.iter().map(|&(q, v)| q * v).sum::<f64>() / mass);
    let m2 = samples.iter().map(|&(q, v)| (q - mean) * (q - mean) * v).sum::<f64>() / mass;
    (peak, mean, m2)
}

fn residuals_and_jacobian(samples: &[(f64, f64)], params: &[f64], free_center: bool) -> (DVector<f64>, DMatrix<f64>) {
    let (sigma, width) = (params[0], params[1]);
    let center = if free_center { params[2] } else { 0.0 };
    let cols = params.len();
    let mut r = DVector::zeros(samples.len());
    let mut j = DMatrix::zeros(samples.len(), cols);
    for (i, &(q, v)) in samples.iter().enumerate() {
        let d = q - center;
        let e = (-d * d / width).exp();
        r[i] = sigma * e - v;
        j[(i, 0)] = e;
        j[(i, 1)] = sigma * e * d * d / (width * width);
        if free_center {
            j[(i, 2)] = sigma * e * 2.0 * d / width;
        }
    }
    (r, j)
}

fn chi2(samples: &[(f64, f64)], params: &[f64], free_center: bool) -> f64 {
    residuals_and_jacobian(samples, params, free_center).0.norm_squared()
}

fn levenberg_marquardt(samples: &[(f64, f64)], start: &[f64], free_center: bool) -> Result<(Vec<f64>, usize)> {
    let mut params = start.to_vec();
    let mut damping = 1e-3;
    let mut current = chi2(samples, &params, free_center);
    let mut last_step = f64::INFINITY;

    for iteration in 1..=MAX_ITERATIONS {
        if current == 0.0 {
            return Ok((params, iteration - 1));
        }
        let (r, j) = residuals_and_jacobian(samples, &params, free_center);
        let jtj = j.transpose() * &j;
        let gradient = j.transpose() * &r;

        let mut accepted = false;
        while damping < 1e16 {
            let mut a = jtj.clone();
            for k in 0..params.len() {
                a[(k, k)] += damping * jtj[(k, k)].max(1e-300);
            }
            let Some(step) = a.lu().solve(&(-&gradient)) else {
                damping *= 10.0;
                continue;
            };
            let trial: Vec<f64> = params.iter().zip(step.iter()).map(|(p, s)| p + s).collect();
            if trial[0] > 0.0 && trial[1] > 0.0 {
                let trial_chi2 = chi2(samples, &trial, free_center);
                if trial_chi2 <= current {
                    last_step = params
                        .iter()
                        .zip(step.iter())
                        .map(|(p, s)| (s / p.abs().max(1e-300)).abs())
                        .fold(0.0, f64::max);
                    let improvement = current - trial_chi2;
                    params = trial;
                    current = trial_chi2;
                    damping = (damping * 0.1).max(1e-12);
                    accepted = true;
                    if last_step < 1e-14 || (improvement <= 1e-15 * current && last_step < 1e-8) {
                        return Ok((params, iteration));
                    }
                    break;
                }
            }
            damping *= 10.0;
        }
        if !accepted {
            // No downhill step at any damping: the gradient vanishes to
            // working precision, which is a minimum.
            if gradient.norm() <= 1e-10 * (current.sqrt() + 1e-300) * j.norm() || current < 1e-28 {
                return Ok((params, iteration));
            }
            return Err(KdError::Convergence {
                iterations: iteration,
                chi2: current,
                damping,
                last_step,
            });
        }
    }
    Err(KdError::Convergence {
        iterations: MAX_ITERATIONS,
        chi2: current,
        damping,
        last_step,
    })
}

fn summarize(samples: &[(f64, f64)], sigma: f64, width: f64, center: f64, iterations: usize) -> GaussianFitResult {
    let mut fit = GaussianFitResult {
        sigma_eff: sigma,
        q_eff_sq: width,
        center,
        r_squared: 0.0,
        max_residual: 0.0,
        iterations,
    };
    let mean = samples.iter().map(|s| s.1).sum::<f64>() / samples.len() as f64;
    let mut ss_res = 0.0;
    let mut ss_tot = 0.0;
    for &(q, v) in samples {
        let res = v - fit.model(q);
        ss_res += res * res;
        ss_tot += (v - mean) * (v - mean);
        fit.max_residual = fit.max_residual.max(res.abs());
    }
    fit.r_squared = if ss_tot > 0.0 {
        (1.0 - ss_res / ss_tot).clamp(0.0, 1.0)
    } else {
        1.0
    };
    fit
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use rand_distr::{Distribution, Normal};

    fn grid(mut f: impl FnMut(f64) -> f64) -> Vec<(f64, f64)> {
        (0..=400).map(|i| -4.0 + 0.02 * i as f64).map(|q| (q, f(q))).collect()
    }

    #[test]
    fn recovers_exact_model() {
        let fit = fit_gaussian(&grid(|q| 0.7 * (-q * q / 4.0).exp())).unwrap();
        assert!((fit.sigma_eff - 0.7).abs() < 1e-10);
        assert!((fit.q_eff_sq - 4.0).abs() < 1e-10);
        assert!((fit.r_squared - 1.0).abs() < 1e-10);
        assert_eq!(fit.center, 0.0);
    }

    #[test]
    fn refitting_the_fitted_model_is_idempotent() {
        let data = grid(|q| 0.6 * (-q * q / 0.5).exp() + 0.02 * (-(q - 1.0).powi(2)).exp());
        let first = fit_gaussian(&data).unwrap();
        let again = fit_gaussian(&grid(|q| first.model(q))).unwrap();
        assert!((again.sigma_eff - first.sigma_eff).abs() < 1e-10);
        assert!((again.q_eff_sq - first.q_eff_sq).abs() < 1e-10);
    }

    #[test]
    fn tolerates_multiplicative_noise() {
        let mut rng = ChaCha8Rng::seed_from_u64(0x6b64);
        let noise = Normal::new(0.0, 0.01).unwrap();
        for _ in 0..20 {
            let data = grid(|q| 0.7 * (-q * q / 0.4).exp() * (1.0 + noise.sample(&mut rng)));
            let fit = fit_gaussian(&data).unwrap();
            assert!((fit.sigma_eff / 0.7 - 1.0).abs() < 0.03);
            assert!((fit.q_eff_sq / 0.4 - 1.0).abs() < 0.03);
        }
    }

    #[test]
    fn free_centre_finds_offset_peak() {
        let fit = fit_gaussian_free_center(&grid(|q| 1.3 * (-(q - 0.8).powi(2) / 0.3).exp())).unwrap();
        assert!((fit.center - 0.8).abs() < 1e-9);
        assert!((fit.q_eff_sq - 0.3).abs() < 1e-9);
        assert!((fit.sigma_eff - 1.3).abs() < 1e-9);
    }

    #[test]
    fn rejects_bad_input() {
        assert!(matches!(fit_gaussian(&grid(|_| 0.0)), Err(KdError::Domain(_))));
        assert!(matches!(fit_gaussian(&[(0.0, 1.0); 4]), Err(KdError::Domain(_))));
        let mut data = grid(|q| (-q * q).exp());
        data[3].1 = -1e-3;
        assert!(matches!(fit_gaussian(&data), Err(KdError::Domain(_))));
    }
}
