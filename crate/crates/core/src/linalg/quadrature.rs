use crate::error::{Error, Result};

const HALF_WIDTH: f64 = 12.0;

/// Fixed-node rule for expectations under a zero-mean Gaussian.
///
/// Nodes are equispaced on `[-12, 12]` in standard units and weighted by the
/// standard normal density; for smooth integrands the trapezoid rule converges
/// geometrically in the node count.
#[derive(Debug, Clone)]
pub struct GaussianRule {
    nodes: Vec<f64>,
    weights: Vec<f64>,
}

impl GaussianRule {
    pub fn new(count: usize) -> Result<Self> {
        if count < 3 {
            return Err(Error::invalid("a Gaussian rule needs at least three nodes"));
        }
        let step = 2.0 * HALF_WIDTH / (count - 1) as f64;
        let nodes: Vec<f64> = (0..count).map(|k| -HALF_WIDTH + k as f64 * step).collect();
        let mut weights: Vec<f64> = nodes
            .iter()
            .map(|t| step * (-0.5 * t * t).exp() / (2.0 * std::f64::consts::PI).sqrt())
            .collect();
        let total: f64 = weights.iter().sum();
        weights.iter_mut().for_each(|w| *w /= total);
        Ok(Self { nodes, weights })
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// `E[f(S)]` for `S ~ N(0, std^2)`.
    pub fn expect(&self, std: f64, mut f: impl FnMut(f64) -> f64) -> f64 {
        self.nodes
            .iter()
            .zip(&self.weights)
            .map(|(t, w)| w * f(std * t))
            .sum()
    }
}
