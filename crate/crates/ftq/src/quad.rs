//! Deterministic quadrature for the one-dimensional model domain.
//!
//! Integrals over the lower half-plane are pulled back to the unit disk by
//! the Cayley map and evaluated with a polar tensor rule: Gauss-Legendre in
//! the radius crossed with a uniform (trapezoidal, spectrally accurate)
//! angular grid.

use gauss_quad::GaussLegendre;
use num_complex::Complex64;
use std::num::NonZeroUsize;

/// Gauss-Legendre nodes and weights on [a, b].
pub fn gauss_legendre(n: usize, a: f64, b: f64) -> Vec<(f64, f64)> {
    let rule = GaussLegendre::new(NonZeroUsize::new(n).expect("n > 0"));
    let mid = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    rule.as_node_weight_pairs()
        .iter()
        .map(|&(x, w)| (mid + half * x, half * w))
        .collect()
}

/// Polar tensor rule for ∫_{|w|<1} F(w) dA. Exact for polynomials in w, w̄ of
/// radial degree below 2·n_radial and angular frequency below n_angular.
#[derive(Clone, Debug)]
pub struct DiskRule {
    nodes: Vec<(Complex64, f64)>,
}

impl DiskRule {
    pub fn new(n_radial: usize, n_angular: usize) -> Self {
        let radial = gauss_legendre(n_radial, 0.0, 1.0);
        let dphi = 2.0 * std::f64::consts::PI / n_angular as f64;
        let mut nodes = Vec::with_capacity(n_radial * n_angular);
        for &(rho, w_rho) in &radial {
            for j in 0..n_angular {
                let phi = dphi * j as f64;
                // Polar area element ρ dρ dφ.
                nodes.push((Complex64::from_polar(rho, phi), w_rho * rho * dphi));
            }
        }
        DiskRule { nodes }
    }

    pub fn nodes(&self) -> &[(Complex64, f64)] {
        &self.nodes
    }

    pub fn integrate<F: Fn(Complex64) -> Complex64>(&self, f: F) -> Complex64 {
        self.nodes
            .iter()
            .map(|&(w, wt)| f(w) * wt)
            .sum()
    }
}
