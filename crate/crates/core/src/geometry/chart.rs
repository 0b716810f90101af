//! Coordinate charts: axis-aligned boxes with transition maps to their neighbours.

use std::fmt;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector};

pub type CoordMap = Arc<dyn Fn(&DVector<f64>) -> DVector<f64> + Send + Sync>;
pub type CoordJacobian = Arc<dyn Fn(&DVector<f64>) -> DMatrix<f64> + Send + Sync>;

/// A transition from one chart into a neighbour, valid on their overlap.
#[derive(Clone)]
pub struct Transition {
    pub target: usize,
    pub map: CoordMap,
    pub jacobian: CoordJacobian,
}

impl fmt::Debug for Transition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Transition").field("target", &self.target).finish()
    }
}

/// One coordinate axis of a chart box.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Axis {
    /// Closed interval `[lower, upper]`.
    Bounded { lower: f64, upper: f64 },
    /// Periodic coordinate; the chart works on the universal cover so the
    /// axis never has a boundary. Differences are reduced modulo `period`.
    Periodic { period: f64 },
    /// Unbounded axis without identification.
    Free,
}

impl Axis {
    /// Length scale used for boundary margins and finite-difference steps.
    pub fn extent(&self) -> f64 {
        match *self {
            Axis::Bounded { lower, upper } => upper - lower,
            Axis::Periodic { period } => period,
            Axis::Free => std::f64::consts::TAU,
        }
    }
}

#[derive(Debug, Clone)]
pub struct Chart {
    pub id: usize,
    pub axes: Vec<Axis>,
    pub transitions: Vec<Transition>,
}

impl Chart {
    pub fn new(id: usize, axes: Vec<Axis>) -> Self {
        Self { id, axes, transitions: Vec::new() }
    }

    pub fn with_transition(mut self, transition: Transition) -> Self {
        self.transitions.push(transition);
        self
    }

    pub fn dim(&self) -> usize {
        self.axes.len()
    }

    /// Euclidean coordinate distance to the nearest bounded face (infinite
    /// when every axis is periodic or free).
    pub fn distance_to_boundary(&self, q: &DVector<f64>) -> f64 {
        self.axes
            .iter()
            .zip(q.iter())
            .map(|(axis, &x)| match *axis {
                Axis::Bounded { lower, upper } => (x - lower).min(upper - x),
                _ => f64::INFINITY,
            })
            .fold(f64::INFINITY, f64::min)
    }

    /// Distance to the boundary as a fraction of the axis extent; negative
    /// once the point has left the box.
    pub fn relative_margin(&self, q: &DVector<f64>) -> f64 {
        self.axes
            .iter()
            .zip(q.iter())
            .map(|(axis, &x)| match *axis {
                Axis::Bounded { lower, upper } => (x - lower).min(upper - x) / (upper - lower),
                _ => f64::INFINITY,
            })
            .fold(f64::INFINITY, f64::min)
    }

    pub fn contains(&self, q: &DVector<f64>) -> bool {
        self.relative_margin(q) >= 0.0
    }

    pub fn transition_to(&self, target: usize) -> Option<&Transition> {
        self.transitions.iter().find(|t| t.target == target)
    }

    /// Coordinate difference `a - b`, reduced to the fundamental domain on
    /// periodic axes.
    pub fn difference(&self, a: &DVector<f64>, b: &DVector<f64>) -> DVector<f64> {
        let mut d = a - b;
        for (i, axis) in self.axes.iter().enumerate() {
            if let Axis::Periodic { period } = *axis {
                d[i] -= period * (d[i] / period).round();
            }
        }
        d
    }

    /// Characteristic length used to scale finite-difference steps.
    pub fn scale(&self) -> f64 {
        let lengths: Vec<f64> = self.axes.iter().map(Axis::extent).collect();
        lengths.iter().sum::<f64>() / lengths.len() as f64 / std::f64::consts::TAU
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn margins_and_periodic_differences() {
        let chart = Chart::new(
            0,
            vec![Axis::Bounded { lower: -1.0, upper: 1.0 }, Axis::Periodic { period: 2.0 }],
        );
        let q = DVector::from_vec(vec![0.5, 100.0]);
        assert!((chart.distance_to_boundary(&q) - 0.5).abs() < 1e-15);
        assert!((chart.relative_margin(&q) - 0.25).abs() < 1e-15);
        let a = DVector::from_vec(vec![0.0, 1.9]);
        let b = DVector::from_vec(vec![0.0, 0.1]);
        assert!((chart.difference(&a, &b)[1] + 0.2).abs() < 1e-12);
        assert!(!chart.contains(&DVector::from_vec(vec![1.5, 0.0])));
    }
}
