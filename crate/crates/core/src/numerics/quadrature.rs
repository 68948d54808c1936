//! Two-dimensional quadrature over a centred square box.

use rayon::prelude::*;

use crate::error::{KdError, Result};

/// Gauss-Legendre nodes and weights on `[-1, 1]`.
#[derive(Debug, Clone)]
pub struct GaussLegendre {
    nodes: Vec<f64>,
    weights: Vec<f64>,
}

impl GaussLegendre {
    /// Rule with `order` nodes, found by Newton iteration on `P_order`.
    pub fn new(order: usize) -> Self {
        assert!(order >= 1, "Gauss-Legendre order must be positive");
        let mut nodes = vec![0.0; order];
        let mut weights = vec![0.0; order];
        let n = order as f64;
        for i in 0..order.div_ceil(2) {
            let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n + 0.5)).cos();
            let mut deriv = 0.0;
            for _ in 0..100 {
                let (p, dp) = legendre_with_derivative(order, x);
                deriv = dp;
                let dx = p / dp;
                x -= dx;
                if dx.abs() < 1e-16 {
                    let (_, dp) = legendre_with_derivative(order, x);
                    deriv = dp;
                    break;
                }
            }
            let w = 2.0 / ((1.0 - x * x) * deriv * deriv);
            nodes[i] = -x;
            nodes[order - 1 - i] = x;
            weights[i] = w;
            weights[order - 1 - i] = w;
        }
        if order % 2 == 1 {
            nodes[order / 2] = 0.0;
        }
        Self { nodes, weights }
    }

    pub fn order(&self) -> usize {
        self.nodes.len()
    }

    /// Nodes and weights mapped onto `[a, b]`.
    pub fn mapped(&self, a: f64, b: f64) -> impl Iterator<Item = (f64, f64)> + '_ {
        let half = 0.5 * (b - a);
        let mid = 0.5 * (a + b);
        self.nodes
            .iter()
            .zip(&self.weights)
            .map(move |(&x, &w)| (mid + half * x, half * w))
    }

    pub fn integrate<F: Fn(f64) -> f64>(&self, a: f64, b: f64, f: F) -> f64 {
        self.mapped(a, b).map(|(x, w)| w * f(x)).sum()
    }
}

fn legendre_with_derivative(order: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    for k in 2..=order {
        let k = k as f64;
        let p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = p2;
    }
    let n = order as f64;
    let dp = n * (x * p1 - p0) / (x * x - 1.0);
    (p1, dp)
}

/// How [`quad2d`] partitions the box.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Scheme {
    /// One tensor-product Gauss-Legendre rule over the whole box.
    TensorGaussLegendre,
    /// Quadtree refinement of the cell with the largest error until the
    /// summed error drops below `tolerance * |value|`.
    Adaptive { tolerance: f64, max_cells: usize },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadratureSpec {
    pub scheme: Scheme,
    pub order: usize,
    /// The box is `[-h, h]^2`.
    pub box_halfwidth: f64,
}

impl Default for QuadratureSpec {
    fn default() -> Self {
        Self {
            scheme: Scheme::TensorGaussLegendre,
            order: 96,
            box_halfwidth: 8.0,
        }
    }
}

impl QuadratureSpec {
    pub fn new(scheme: Scheme, order: usize, box_halfwidth: f64) -> Result<Self> {
        if order < 2 {
            return Err(KdError::domain(format!("quadrature order {order} < 2")));
        }
        if !(box_halfwidth > 0.0 && box_halfwidth.is_finite()) {
            return Err(KdError::domain(format!(
                "quadrature box half-width {box_halfwidth} must be positive"
            )));
        }
        if let Scheme::Adaptive { tolerance, max_cells } = scheme {
            if !(tolerance > 0.0) || max_cells == 0 {
                return Err(KdError::domain(
                    "adaptive quadrature needs tolerance > 0 and max_cells > 0",
                ));
            }
        }
        Ok(Self {
            scheme,
            order,
            box_halfwidth,
        })
    }

    pub fn tensor(order: usize, box_halfwidth: f64) -> Result<Self> {
        Self::new(Scheme::TensorGaussLegendre, order, box_halfwidth)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadratureResult {
    pub value: f64,
    pub error_estimate: f64,
}

#[derive(Debug, Clone, Copy)]
struct Cell {
    x0: f64,
    x1: f64,
    y0: f64,
    y1: f64,
}

impl Cell {
    fn quarters(&self) -> [Cell; 4] {
        let xm = 0.5 * (self.x0 + self.x1);
        let ym = 0.5 * (self.y0 + self.y1);
        [
            Cell {
                x0: self.x0,
                x1: xm,
                y0: self.y0,
                y1: ym,
            },
            Cell {
                x0: xm,
                x1: self.x1,
                y0: self.y0,
                y1: ym,
            },
            Cell {
                x0: self.x0,
                x1: xm,
                y0: ym,
                y1: self.y1,
            },
            Cell {
                x0: xm,
                x1: self.x1,
                y0: ym,
                y1: self.y1,
            },
        ]
    }
}

/// Tensor rule on a cell; returns `(sum w f, sum w |f|)`. Rows are
/// evaluated in parallel and summed in a fixed order.
fn tensor_rule<F>(f: &F, rule: &GaussLegendre, cell: &Cell) -> Result<(f64, f64)>
where
    F: Fn(f64, f64) -> f64 + Sync,
{
    let xs: Vec<(f64, f64)> = rule.mapped(cell.x0, cell.x1).collect();
    let ys: Vec<(f64, f64)> = rule.mapped(cell.y0, cell.y1).collect();
    let rows: Vec<Result<(f64, f64)>> = xs
        .par_iter()
        .map(|&(x, wx)| {
            let mut sum = 0.0;
            let mut abs = 0.0;
            for &(y, wy) in &ys {
                let v = f(x, y);
                if !v.is_finite() {
                    return Err(KdError::NonFinite(format!("integrand is {v} at ({x}, {y})")));
                }
                sum += wy * v;
                abs += wy * v.abs();
            }
            Ok((wx * sum, wx * abs))
        })
        .collect();
    let mut sum = 0.0;
    let mut abs = 0.0;
    for row in rows {
        let (s, a) = row?;
        sum += s;
        abs += a;
    }
    Ok((sum, abs))
}

/// Roundoff floor applied to every error estimate.
fn roundoff(abs_mass: f64) -> f64 {
    64.0 * f64::EPSILON * abs_mass
}

/// Integrates `f` over `[-h, h]^2`.
///
/// The tensor scheme estimates its error as the difference to the rule of
/// half the order; the adaptive scheme sums per-cell differences between a
/// cell and its four quarters. A non-finite integrand value is an error.
pub fn quad2d<F>(f: F, spec: &QuadratureSpec) -> Result<QuadratureResult>
where
    F: Fn(f64, f64) -> f64 + Sync,
{
    let h = spec.box_halfwidth;
    let root = Cell {
        x0: -h,
        x1: h,
        y0: -h,
        y1: h,
    };
    match spec.scheme {
        Scheme::TensorGaussLegendre => {
            let fine = GaussLegendre::new(spec.order);
            let coarse = GaussLegendre::new((spec.order / 2).max(1));
            let (value, abs) = tensor_rule(&f, &fine, &root)?;
            let (rough, _) = tensor_rule(&f, &coarse, &root)?;
            Ok(QuadratureResult {
                value,
                error_estimate: (value - rough).abs().max(roundoff(abs)),
            })
        }
        Scheme::Adaptive { tolerance, max_cells } => adaptive(&f, spec.order, root, tolerance, max_cells),
    }
}

struct Refined {
    cell: Cell,
    value: f64,
    error: f64,
    abs: f64,
}

fn refine<F>(f: &F, rule: &GaussLegendre, cell: Cell) -> Result<Refined>
where
    F: Fn(f64, f64) -> f64 + Sync,
{
    let (whole, _) = tensor_rule(f, rule, &cell)?;
    let mut value = 0.0;
    let mut abs = 0.0;
    for q in cell.quarters() {
        let (v, a) = tensor_rule(f, rule, &q)?;
        value += v;
        abs += a;
    }
    Ok(Refined {
        cell,
        value,
        error: (value - whole).abs(),
        abs,
    })
}

fn adaptive<F>(f: &F, order: usize, root: Cell, tolerance: f64, max_cells: usize) -> Result<QuadratureResult>
where
    F: Fn(f64, f64) -> f64 + Sync,
{
    let rule = GaussLegendre::new(order);
    let mut cells = vec![refine(f, &rule, root)?];
    loop {
        let value: f64 = cells.iter().map(|c| c.value).sum();
        let error: f64 = cells.iter().map(|c| c.error).sum();
        let abs: f64 = cells.iter().map(|c| c.abs).sum();
        let error = error.max(roundoff(abs));
        if error <= tolerance * value.abs() || cells.len() + 3 > max_cells {
            return Ok(QuadratureResult {
                value,
                error_estimate: error,
            });
        }
        let worst = cells
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.error.total_cmp(&b.1.error))
            .map(|(i, _)| i)
            .expect("at least one cell");
        let cell = cells.swap_remove(worst).cell;
        for q in cell.quarters() {
            cells.push(refine(f, &rule, q)?);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn legendre_rule_is_exact_for_polynomials() {
        let rule = GaussLegendre::new(7);
        // degree 13 is the exactness limit for 7 nodes
        let got = rule.integrate(-1.0, 2.0, |x| x.powi(12) + x.powi(13));
        let exact = (2f64.powi(13) - (-1f64).powi(13)) / 13.0 + (2f64.powi(14) - 1.0) / 14.0;
        assert!((got - exact).abs() < 1e-9 * exact.abs());
        let total: f64 = GaussLegendre::new(96).weights.iter().sum();
        assert!((total - 2.0).abs() < 1e-13);
    }

    #[test]
    fn gaussian_integral_is_pi() {
        let r = quad2d(|p, q| (-p * p - q * q).exp(), &QuadratureSpec::tensor(64, 8.0).unwrap()).unwrap();
        assert!((r.value - PI).abs() < 1e-12, "{}", r.value);
        assert!((r.value - PI).abs() <= r.error_estimate);
    }

    #[test]
    fn correlated_gaussian_matches_closed_form() {
        let (q, qs, p) = (1.0f64, 0.9f64, 1.1f64);
        let f = |x: f64, y: f64| (-2.0 * x * x / (q * q) - 2.0 * y * y / (qs * qs) - 2.0 * x * y / (p * p)).exp();
        let exact = PI / (4.0 / (q * q * qs * qs) - 1.0 / p.powi(4)).sqrt();
        let schmidt = (1.0 - q * q * qs * qs / (4.0 * p.powi(4))).powf(-0.5);
        assert!((exact - PI * q * qs * schmidt / 2.0).abs() < 1e-14);
        assert!((exact - 1.5229).abs() < 1e-4);
        let r = quad2d(f, &QuadratureSpec::default()).unwrap();
        assert!((r.value - exact).abs() < 1e-12);
        assert!((r.value - exact).abs() <= r.error_estimate);
    }

    #[test]
    fn odd_integrand_vanishes() {
        let r = quad2d(|p, q| p * (-p * p - 0.5 * q * q).exp(), &QuadratureSpec::default()).unwrap();
        assert!(r.value.abs() < 1e-13);
    }

    #[test]
    fn doubling_order_stays_within_estimate() {
        let f = |x: f64, y: f64| (1.0 + x * x * y) * (-1.3 * x * x - 0.7 * y * y - 0.4 * x * y).exp();
        for order in [16usize, 24, 32, 48] {
            let a = quad2d(f, &QuadratureSpec::tensor(order, 8.0).unwrap()).unwrap();
            let b = quad2d(f, &QuadratureSpec::tensor(2 * order, 8.0).unwrap()).unwrap();
            assert!((a.value - b.value).abs() <= a.error_estimate, "order {order}");
        }
    }

    #[test]
    fn adaptive_agrees_with_tensor() {
        let f = |x: f64, y: f64| (-(x - 0.3).powi(2) - 2.0 * y * y).exp();
        let exact = PI / 2f64.sqrt();
        let spec = QuadratureSpec::new(
            Scheme::Adaptive {
                tolerance: 1e-13,
                max_cells: 4000,
            },
            10,
            8.0,
        )
        .unwrap();
        let r = quad2d(f, &spec).unwrap();
        assert!((r.value - exact).abs() < 1e-11, "{}", r.value - exact);
        assert!((r.value - exact).abs() <= r.error_estimate.max(1e-14));
    }

    #[test]
    fn non_finite_integrand_is_an_error() {
        let r = quad2d(|p, _| if p > 0.0 { f64::NAN } else { 1.0 }, &QuadratureSpec::default());
        assert!(matches!(r, Err(KdError::NonFinite(_))));
    }

    #[test]
    fn invalid_specs_are_rejected() {
        assert!(QuadratureSpec::tensor(1, 8.0).is_err());
        assert!(QuadratureSpec::tensor(8, 0.0).is_err());
        assert!(QuadratureSpec::tensor(8, -1.0).is_err());
    }
}
