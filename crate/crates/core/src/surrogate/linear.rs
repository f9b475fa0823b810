//! Hinge-loss linear classifier trained by stochastic subgradient descent
//! (Pegasos step size `1/(λ t)`, λ = 1/(C n)).

use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinearModel {
    pub weights: Vec<f64>,
    pub bias: f64,
}

impl LinearModel {
    pub fn zeros(dim: usize) -> Self {
        LinearModel {
            weights: vec![0.0; dim],
            bias: 0.0,
        }
    }

    pub fn decision(&self, x: &[f64]) -> f64 {
        self.weights.iter().zip(x).map(|(w, v)| w * v).sum::<f64>() + self.bias
    }
}

/// Trains on rows `x` with boolean targets. The bias is learned as the
/// weight of a constant unit feature, so it is regularized like the rest.
pub fn train_hinge<R: Rng>(x: &[Vec<f64>], y: &[bool], c: f64, epochs: usize, rng: &mut R) -> LinearModel {
    assert_eq!(x.len(), y.len());
    let dim = x.first().map_or(0, Vec::len);
    let mut model = LinearModel::zeros(dim);
    let n = x.len();
    if n == 0 {
        return model;
    }
    let lambda = 1.0 / (c * n as f64);
    let radius = 1.0 / lambda.sqrt();
    let mut order: Vec<usize> = (0..n).collect();
    let mut t = 0usize;
    for _ in 0..epochs {
        order.shuffle(rng);
        for &i in &order {
            t += 1;
            let eta = 1.0 / (lambda * t as f64);
            let target = if y[i] { 1.0 } else { -1.0 };
            let margin = target * model.decision(&x[i]);
            let shrink = 1.0 - eta * lambda;
            model.weights.iter_mut().for_each(|w| *w *= shrink);
            model.bias *= shrink;
            if margin < 1.0 {
                for (w, v) in model.weights.iter_mut().zip(&x[i]) {
                    *w += eta * target * v;
                }
                model.bias += eta * target;
            }
            let norm = (model.weights.iter().map(|w| w * w).sum::<f64>() + model.bias * model.bias).sqrt();
            if norm > radius {
                let s = radius / norm;
                model.weights.iter_mut().for_each(|w| *w *= s);
                model.bias *= s;
            }
        }
    }
    model
}

#[cfg(test)]
mod tests {
    use rand::SeedableRng;
    use rand_chacha::ChaCha20Rng;

    use super::*;

    #[test]
    fn separates_linearly_separable_points() {
        let x: Vec<Vec<f64>> = (0..40)
            .map(|i| {
                let s = if i % 2 == 0 { 1.0 } else { -1.0 };
                vec![s * (0.5 + (i % 7) as f64 * 0.1), ((i * 13) % 5) as f64 * 0.1 - 0.2]
            })
            .collect();
        let y: Vec<bool> = x.iter().map(|r| r[0] > 0.0).collect();
        let mut rng = ChaCha20Rng::seed_from_u64(1);
        let m = train_hinge(&x, &y, 1.0, 20, &mut rng);
        for (r, &t) in x.iter().zip(&y) {
            assert_eq!(m.decision(r) > 0.0, t);
        }
    }

    #[test]
    fn deterministic_under_seed() {
        let x = vec![vec![1.0, 0.0], vec![0.0, 1.0], vec![0.5, 0.5]];
        let y = vec![true, false, true];
        let a = train_hinge(&x, &y, 1.0, 5, &mut ChaCha20Rng::seed_from_u64(3));
        let b = train_hinge(&x, &y, 1.0, 5, &mut ChaCha20Rng::seed_from_u64(3));
        assert_eq!(a, b);
    }
}
