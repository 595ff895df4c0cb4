//! Gauss–Hermite quadrature for integrals of the form ∫ e^{-u²} g(u) du.

use std::sync::OnceLock;

pub const DEFAULT_NODES: usize = 64;

#[derive(Debug, Clone)]
pub struct GaussHermite {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
    /// ln(weight) + node², used for standard-normal expectations in log space.
    pub log_scaled_weights: Vec<f64>,
}

impl GaussHermite {
    /// Nodes and weights by Newton iteration on the orthonormal Hermite recurrence.
    pub fn new(n: usize) -> Self {
        assert!(n >= 2, "need at least two nodes");
        let mut nodes = vec![0.0; n];
        let mut weights = vec![0.0; n];
        let m = (n + 1) / 2;
        let pim4 = std::f64::consts::PI.powf(-0.25);
        let nf = n as f64;
        let mut z = 0.0_f64;
        for i in 0..m {
            z = match i {
                0 => (2.0 * nf + 1.0).sqrt() - 1.85575 * (2.0 * nf + 1.0).powf(-1.0 / 6.0),
                1 => z - 1.14 * nf.powf(0.426) / z,
                2 => 1.86 * z - 0.86 * nodes[0],
                3 => 1.91 * z - 0.91 * nodes[1],
                _ => 2.0 * z - nodes[i - 2],
            };
            let mut pp = 0.0;
            for _ in 0..100 {
                let mut p1 = pim4;
                let mut p2 = 0.0;
                for j in 0..n {
                    let p3 = p2;
                    p2 = p1;
                    let jf = j as f64;
                    p1 = z * (2.0 / (jf + 1.0)).sqrt() * p2 - (jf / (jf + 1.0)).sqrt() * p3;
                }
                pp = (2.0 * nf).sqrt() * p2;
                let z1 = z;
                z = z1 - p1 / pp;
                if (z - z1).abs() <= 1e-15 * z.abs().max(1.0) {
                    break;
                }
            }
            nodes[i] = z;
            nodes[n - 1 - i] = -z;
            weights[i] = 2.0 / (pp * pp);
            weights[n - 1 - i] = weights[i];
        }
        let log_scaled_weights = nodes
            .iter()
            .zip(&weights)
            .map(|(u, w)| w.ln() + u * u)
            .collect();
        Self {
            nodes,
            weights,
            log_scaled_weights,
        }
    }

    /// Shared 64-node rule.
    pub fn default_rule() -> &'static GaussHermite {
        static RULE: OnceLock<GaussHermite> = OnceLock::new();
        RULE.get_or_init(|| GaussHermite::new(DEFAULT_NODES))
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// E[h(Z)] for Z ~ N(0, 1).
    pub fn normal_expectation(&self, mut h: impl FnMut(f64) -> f64) -> f64 {
        let s2 = std::f64::consts::SQRT_2;
        let total: f64 = self
            .nodes
            .iter()
            .zip(&self.weights)
            .map(|(u, w)| w * h(s2 * u))
            .sum();
        total / std::f64::consts::PI.sqrt()
    }

    /// ln ∫ exp(log_g(y)) dy after the change of variables y = loc + scale·√2·u.
    ///
    /// The integrand is evaluated through its logarithm so heavy tilts do not overflow.
    pub fn log_integral(&self, loc: f64, scale: f64, mut log_g: impl FnMut(f64) -> f64) -> f64 {
        let s2 = std::f64::consts::SQRT_2;
        let mut terms = Vec::with_capacity(self.len());
        for (u, lw) in self.nodes.iter().zip(&self.log_scaled_weights) {
            let y = loc + scale * s2 * u;
            terms.push(lw + log_g(y));
        }
        log_sum_exp(&terms) + (s2 * scale).ln()
    }

    /// ∫ h(y) exp(log_g(y)) dy with the same standardization, returned as a plain value.
    pub fn integral(
        &self,
        loc: f64,
        scale: f64,
        mut h: impl FnMut(f64) -> f64,
        mut log_g: impl FnMut(f64) -> f64,
    ) -> f64 {
        let s2 = std::f64::consts::SQRT_2;
        let mut total = 0.0;
        for (u, lw) in self.nodes.iter().zip(&self.log_scaled_weights) {
            let y = loc + scale * s2 * u;
            total += h(y) * (lw + log_g(y)).exp();
        }
        total * s2 * scale
    }
}

pub fn log_sum_exp(values: &[f64]) -> f64 {
    let max = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if !max.is_finite() {
        return max;
    }
    max + values.iter().map(|v| (v - max).exp()).sum::<f64>().ln()
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::{DMatrix, SymmetricEigen};

    /// Golub–Welsch: eigen-decomposition of the Jacobi matrix of the Hermite polynomials.
    fn golub_welsch(n: usize) -> (Vec<f64>, Vec<f64>) {
        let mut jac = DMatrix::<f64>::zeros(n, n);
        for i in 1..n {
            let b = (i as f64 / 2.0).sqrt();
            jac[(i, i - 1)] = b;
            jac[(i - 1, i)] = b;
        }
        let eig = SymmetricEigen::new(jac);
        let mut pairs: Vec<(f64, f64)> = (0..n)
            .map(|k| {
                let v0 = eig.eigenvectors[(0, k)];
                (eig.eigenvalues[k], std::f64::consts::PI.sqrt() * v0 * v0)
            })
            .collect();
        pairs.sort_by(|a, b| b.0.partial_cmp(&a.0).unwrap());
        pairs.into_iter().unzip()
    }

    #[test]
    fn newton_nodes_match_golub_welsch() {
        let rule = GaussHermite::new(20);
        let (nodes, weights) = golub_welsch(20);
        for k in 0..20 {
            assert!((rule.nodes[k] - nodes[k]).abs() < 1e-10, "node {k}");
            assert!((rule.weights[k] - weights[k]).abs() < 1e-10 * weights[k].max(1e-6));
        }
    }

    #[test]
    fn moments_of_weight_function() {
        let rule = GaussHermite::default_rule();
        let pi_sqrt = std::f64::consts::PI.sqrt();
        let m0: f64 = rule.weights.iter().sum();
        let m2: f64 = rule.nodes.iter().zip(&rule.weights).map(|(u, w)| w * u * u).sum();
        let m4: f64 = rule.nodes.iter().zip(&rule.weights).map(|(u, w)| w * u.powi(4)).sum();
        assert!((m0 - pi_sqrt).abs() < 1e-13);
        assert!((m2 - pi_sqrt / 2.0).abs() < 1e-13);
        assert!((m4 - 3.0 * pi_sqrt / 4.0).abs() < 1e-12);
    }

    #[test]
    fn normal_mgf() {
        let rule = GaussHermite::default_rule();
        let mgf = rule.normal_expectation(|z| (1.3 * z).exp());
        assert!((mgf - (0.5 * 1.3f64 * 1.3).exp()).abs() < 1e-13);
    }
}
