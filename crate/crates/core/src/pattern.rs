//! Sampled detection patterns.

use crate::error::{KdError, Result};

/// A named, strictly increasing sample axis.
#[derive(Debug, Clone, PartialEq)]
pub struct Axis {
    name: String,
    values: Vec<f64>,
}

impl Axis {
    pub fn new(name: impl Into<String>, values: Vec<f64>) -> Result<Self> {
        let name = name.into();
        if values.is_empty() {
            return Err(KdError::domain(format!("axis `{name}` is empty")));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(KdError::domain(format!("axis `{name}` has a non-finite value")));
        }
        if values.windows(2).any(|w| w[1] <= w[0]) {
            return Err(KdError::domain(format!("axis `{name}` is not strictly increasing")));
        }
        Ok(Self { name, values })
    }

    /// `start, start + step, ...` up to `stop` inclusive. Each sample is
    /// `start + i * step`, so grids are reproducible bit-for-bit.
    pub fn uniform(name: impl Into<String>, start: f64, stop: f64, step: f64) -> Result<Self> {
        let name = name.into();
        if !(step > 0.0) || !(stop >= start) || !start.is_finite() || !stop.is_finite() {
            return Err(KdError::domain(format!(
                "axis `{name}`: need start <= stop and step > 0 (got {start}, {stop}, {step})"
            )));
        }
        let count = ((stop - start) / step + 1e-9).floor() as usize + 1;
        let values = (0..count).map(|i| start + i as f64 * step).collect();
        Self::new(name, values)
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

/// Whether a grid samples a normalized joint distribution or an
/// unnormalized slice of one.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NormalizationTag {
    NormalizedJoint,
    UnnormalizedSlice,
}

impl NormalizationTag {
    pub fn as_str(&self) -> &'static str {
        match self {
            NormalizationTag::NormalizedJoint => "normalized-joint",
            NormalizationTag::UnnormalizedSlice => "unnormalized-slice",
        }
    }
}

/// Non-negative samples over one or more axes, stored axis-major (the last
/// axis varies fastest).
#[derive(Debug, Clone, PartialEq)]
pub struct PatternGrid {
    axes: Vec<Axis>,
    values: Vec<f64>,
    normalization: NormalizationTag,
    metadata: Vec<(String, String)>,
}

impl PatternGrid {
    pub fn new(axes: Vec<Axis>, values: Vec<f64>, normalization: NormalizationTag) -> Result<Self> {
        if axes.is_empty() {
            return Err(KdError::domain("pattern grid needs at least one axis"));
        }
        let expected: usize = axes.iter().map(Axis::len).product();
        if values.len() != expected {
            return Err(KdError::Contract(format!(
                "pattern grid has {} values for {expected} grid points",
                values.len()
            )));
        }
        if let Some(bad) = values.iter().find(|v| !(**v >= 0.0) || !v.is_finite()) {
            return Err(KdError::NonFinite(format!(
                "pattern value {bad} is not a finite non-negative number"
            )));
        }
        Ok(Self {
            axes,
            values,
            normalization,
            metadata: Vec::new(),
        })
    }

    pub fn with_metadata(mut self, key: impl Into<String>, value: impl ToString) -> Self {
        self.metadata.push((key.into(), value.to_string()));
        self
    }

    pub fn axes(&self) -> &[Axis] {
        &self.axes
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn normalization(&self) -> NormalizationTag {
        self.normalization
    }

    pub fn metadata(&self) -> &[(String, String)] {
        &self.metadata
    }

    /// Coordinates of every sample, in storage order.
    pub fn points(&self) -> Vec<Vec<f64>> {
        let mut out = vec![Vec::new()];
        for axis in &self.axes {
            out = out
                .into_iter()
                .flat_map(|prefix| {
                    axis.values().iter().map(move |&v| {
                        let mut p = prefix.clone();
                        p.push(v);
                        p
                    })
                })
                .collect();
        }
        out
    }

    /// `(coordinate, value)` pairs of a one-axis grid.
    pub fn as_curve(&self) -> Option<Vec<(f64, f64)>> {
        match self.axes.as_slice() {
            [axis] => Some(axis.values().iter().copied().zip(self.values.iter().copied()).collect()),
            _ => None,
        }
    }

    pub fn max(&self) -> f64 {
        self.values.iter().copied().fold(0.0, f64::max)
    }

    pub fn min(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }

    /// `max - min` over the samples.
    pub fn visibility(&self) -> f64 {
        self.max() - self.min()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn uniform_axis_includes_endpoint() {
        let a = Axis::uniform("q", -4.0, 4.0, 0.02).unwrap();
        assert_eq!(a.len(), 401);
        assert_eq!(a.values()[0], -4.0);
        assert!((a.values()[400] - 4.0).abs() < 1e-12);
    }

    #[test]
    fn rejects_non_monotone_axes_and_negative_values() {
        assert!(Axis::new("x", vec![0.0, 0.0]).is_err());
        assert!(Axis::new("x", vec![]).is_err());
        assert!(Axis::uniform("x", 1.0, 0.0, 0.1).is_err());
        let a = Axis::new("x", vec![0.0, 1.0]).unwrap();
        assert!(PatternGrid::new(vec![a.clone()], vec![1.0, -1.0], NormalizationTag::UnnormalizedSlice).is_err());
        assert!(PatternGrid::new(vec![a], vec![1.0], NormalizationTag::UnnormalizedSlice).is_err());
    }

    #[test]
    fn points_are_axis_major() {
        let g = PatternGrid::new(
            vec![
                Axis::new("p", vec![0.0, 1.0]).unwrap(),
                Axis::new("q", vec![5.0, 6.0, 7.0]).unwrap(),
            ],
            vec![0.0; 6],
            NormalizationTag::NormalizedJoint,
        )
        .unwrap();
        let pts = g.points();
        assert_eq!(pts[0], vec![0.0, 5.0]);
        assert_eq!(pts[1], vec![0.0, 6.0]);
        assert_eq!(pts[3], vec![1.0, 5.0]);
    }
}
