//! Quantum states on the future tube as finite coherent-state frames, POVM
//! detection probabilities over phase-space regions, and the measurement
//! transformations: Kraus update, point-outcome collapse, unrecorded-outcome
//! decoherence, and projective yes/no measurements.
//!
//! The coherent state with focus z is ψ_z(u) = K(u,z̄)/√K(z,z̄). Every state
//! here is a mixture of finite superpositions of such states, so all inner
//! products reduce to closed-form kernel evaluations through the Gram matrix
//! and no 8-D integration is needed for state algebra.

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::bergman::{kernel4, kernel4_diag};
use crate::error::{Error, Result};
use crate::mc::{metropolis_tube, substream, tube_integral_mc, McConfig, McEstimate};
use crate::minkowski::{FutureTubePoint, RealFourVector};
use crate::quad::gauss_legendre;
use crate::EPS_GAMMA;

/// Default number of foci for empirical post-measurement mixtures.
pub const DEFAULT_POST_FOCI: usize = 256;

/// Normalized coherent-state wavefunction ψ_z(u) = K(u,z̄)/√K(z,z̄)
/// = (8√3/π²) [(z−z̄)·(z−z̄)]² / [(u−z̄)·(u−z̄)]⁴.
pub fn coherent_wavefunction(z: &FutureTubePoint, u: &FutureTubePoint) -> Result<Complex64> {
    Ok(kernel4(u, z)? / kernel4_diag(z).sqrt())
}

/// Coherent-state overlap ⟨ψ_w|ψ_z⟩ = K(w,z̄)/√(K(w,w̄)K(z,z̄)).
pub fn overlap(w: &FutureTubePoint, z: &FutureTubePoint) -> Result<Complex64> {
    Ok(kernel4(w, z)? / (kernel4_diag(w) * kernel4_diag(z)).sqrt())
}

/// |⟨ψ_w|ψ_z⟩|² written as the conformally invariant cross ratio of the four
/// points w, w̄, z, z̄.
pub fn transition_probability_cross_ratio(w: &FutureTubePoint, z: &FutureTubePoint) -> Result<f64> {
    let sq = |a: &FutureTubePoint, b: &FutureTubePoint| -> Complex64 {
        let d = a.z().sub(&b.z().conj());
        crate::minkowski::complex_inner(&d, &d)
    };
    let num = sq(w, w) * sq(z, z);
    let den = sq(w, z) * sq(z, w);
    if den.norm() < EPS_GAMMA {
        return Err(Error::BoundaryDivergence { denom: den.norm() });
    }
    Ok((num / den).norm().powi(4))
}

/// Gram matrix G_ij = ⟨ψ_{z_i}|ψ_{z_j}⟩ of a coherent frame; Hermitian
/// positive semidefinite.
pub fn gram_matrix(foci: &[FutureTubePoint]) -> Result<DMatrix<Complex64>> {
    let n = foci.len();
    let mut g = DMatrix::zeros(n, n);
    for i in 0..n {
        for j in 0..n {
            g[(i, j)] = overlap(&foci[i], &foci[j])?;
        }
    }
    Ok(g)
}

/// A normalized finite superposition Σ c_i ψ_{z_i}.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct PureState {
    pub foci: Vec<FutureTubePoint>,
    pub coeffs: Vec<Complex64>,
}

impl PureState {
    /// Builds and Gram-normalizes the superposition so Σ c̄_i G_ij c_j = 1.
    pub fn new(foci: Vec<FutureTubePoint>, coeffs: Vec<Complex64>) -> Result<Self> {
        if foci.is_empty() || foci.len() != coeffs.len() {
            return Err(Error::InvalidArgument(
                "state needs matching nonempty foci and coefficient lists".into(),
            ));
        }
        let mut state = PureState { foci, coeffs };
        let n2 = state.norm_sqr()?;
        if !(n2 > 0.0) || !n2.is_finite() {
            return Err(Error::InvalidArgument(format!(
                "degenerate coherent frame: squared norm {n2}"
            )));
        }
        let scale = 1.0 / n2.sqrt();
        for c in &mut state.coeffs {
            *c *= scale;
        }
        Ok(state)
    }

    /// The coherent state ψ_z.
    pub fn coherent(z: FutureTubePoint) -> Self {
        PureState {
            foci: vec![z],
            coeffs: vec![Complex64::new(1.0, 0.0)],
        }
    }

    /// Squared norm under the current coefficients (1 after construction).
    pub fn norm_sqr(&self) -> Result<f64> {
        let g = gram_matrix(&self.foci)?;
        let mut acc = Complex64::new(0.0, 0.0);
        for i in 0..self.foci.len() {
            for j in 0..self.foci.len() {
                acc += self.coeffs[i].conj() * g[(i, j)] * self.coeffs[j];
            }
        }
        Ok(acc.re)
    }

    /// Wavefunction value ξ(u) = Σ c_i ψ_{z_i}(u).
    pub fn wavefunction(&self, u: &FutureTubePoint) -> Result<Complex64> {
        let mut acc = Complex64::new(0.0, 0.0);
        for (z, c) in self.foci.iter().zip(&self.coeffs) {
            acc += c * coherent_wavefunction(z, u)?;
        }
        Ok(acc)
    }

    /// ⟨ψ_z|ξ⟩, a finite sum of overlaps (equals ξ(z)/√K(z,z̄)).
    pub fn project_on_coherent(&self, z: &FutureTubePoint) -> Result<Complex64> {
        let mut acc = Complex64::new(0.0, 0.0);
        for (f, c) in self.foci.iter().zip(&self.coeffs) {
            acc += c * overlap(z, f)?;
        }
        Ok(acc)
    }
}

/// ⟨a|b⟩ for two frames, by Gram algebra across their foci.
pub fn inner_product(a: &PureState, b: &PureState) -> Result<Complex64> {
    let mut acc = Complex64::new(0.0, 0.0);
    for (za, ca) in a.foci.iter().zip(&a.coeffs) {
        for (zb, cb) in b.foci.iter().zip(&b.coeffs) {
            acc += ca.conj() * cb * overlap(za, zb)?;
        }
    }
    Ok(acc)
}

/// One branch of a mixture.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Branch {
    pub weight: f64,
    #[serde(flatten)]
    pub state: PureState,
}

/// A density operator as a finite mixture of pure coherent frames.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct DensityState {
    pub branches: Vec<Branch>,
}

impl DensityState {
    pub fn pure(state: PureState) -> Self {
        DensityState {
            branches: vec![Branch {
                weight: 1.0,
                state,
            }],
        }
    }

    pub fn coherent(z: FutureTubePoint) -> Self {
        Self::pure(PureState::coherent(z))
    }

    /// Equal-weight mixture of coherent states at the given foci.
    pub fn uniform_mixture(foci: Vec<FutureTubePoint>) -> Result<Self> {
        if foci.is_empty() {
            return Err(Error::InvalidArgument("mixture needs at least one focus".into()));
        }
        let w = 1.0 / foci.len() as f64;
        Ok(DensityState {
            branches: foci
                .into_iter()
                .map(|z| Branch {
                    weight: w,
                    state: PureState::coherent(z),
                })
                .collect(),
        })
    }

    /// Validates weights and branch normalization.
    pub fn validate(&self) -> Result<()> {
        let mut total = 0.0;
        for b in &self.branches {
            if b.weight < 0.0 {
                return Err(Error::InvalidArgument("negative branch weight".into()));
            }
            total += b.weight;
            let n2 = b.state.norm_sqr()?;
            if (n2 - 1.0).abs() > 1e-8 {
                return Err(Error::InvalidArgument(format!(
                    "branch not normalized: ⟨ξ|ξ⟩ = {n2}"
                )));
            }
        }
        if (total - 1.0).abs() > 1e-10 {
            return Err(Error::InvalidArgument(format!(
                "branch weights sum to {total}"
            )));
        }
        Ok(())
    }

    /// All foci across branches (importance-proposal centers).
    pub fn all_foci(&self) -> Vec<FutureTubePoint> {
        self.branches
            .iter()
            .flat_map(|b| b.state.foci.iter().copied())
            .collect()
    }

    /// Serializes to the state JSON schema.
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("state serializes")
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let state: DensityState =
            serde_json::from_str(s).map_err(|e| Error::InvalidArgument(e.to_string()))?;
        state.validate()?;
        Ok(state)
    }
}

/// Diagonal ρ(z,z̄) = Σ_b weight·|ξ_b(z)|²: a probability density on Γ with
/// respect to dμ = d⁴x d⁴r.
pub fn density_diagonal(state: &DensityState, z: &FutureTubePoint) -> Result<f64> {
    let mut acc = 0.0;
    for b in &state.branches {
        acc += b.weight * b.state.wavefunction(z)?.norm_sqr();
    }
    Ok(acc)
}

/// Purity Tr ρ² = Σ_ab w_a w_b |⟨ξ_a|ξ_b⟩|²; equals 1 iff the mixture is a
/// single ray.
pub fn purity(state: &DensityState) -> Result<f64> {
    let mut acc = 0.0;
    for a in &state.branches {
        for b in &state.branches {
            acc += a.weight * b.weight * inner_product(&a.state, &b.state)?.norm_sqr();
        }
    }
    Ok(acc)
}

/// One axis-aligned box in (x, r); `None` bounds are unbounded. The region
/// semantics intersect every box with Γ.
#[derive(Clone, Debug, Default, Serialize, Deserialize)]
pub struct BoxBounds {
    pub x_min: [Option<f64>; 4],
    pub x_max: [Option<f64>; 4],
    pub r_min: [Option<f64>; 4],
    pub r_max: [Option<f64>; 4],
}

impl BoxBounds {
    /// Fully unbounded box (i.e. all of Γ).
    pub fn unbounded() -> Self {
        Self::default()
    }

    /// Cube of half-width `h` around a tube point, in all eight coordinates.
    pub fn cube_around(z: &FutureTubePoint, h: f64) -> Self {
        let mut b = Self::default();
        for a in 0..4 {
            b.x_min[a] = Some(z.x.0[a] - h);
            b.x_max[a] = Some(z.x.0[a] + h);
            b.r_min[a] = Some(z.r.0[a] - h);
            b.r_max[a] = Some(z.r.0[a] + h);
        }
        b
    }

    pub fn contains(&self, z: &FutureTubePoint) -> bool {
        for a in 0..4 {
            if let Some(lo) = self.x_min[a] {
                if z.x.0[a] < lo {
                    return false;
                }
            }
            if let Some(hi) = self.x_max[a] {
                if z.x.0[a] > hi {
                    return false;
                }
            }
            if let Some(lo) = self.r_min[a] {
                if z.r.0[a] < lo {
                    return false;
                }
            }
            if let Some(hi) = self.r_max[a] {
                if z.r.0[a] > hi {
                    return false;
                }
            }
        }
        true
    }

    fn fully_bounded(&self) -> bool {
        (0..4).all(|a| {
            self.x_min[a].is_some()
                && self.x_max[a].is_some()
                && self.r_min[a].is_some()
                && self.r_max[a].is_some()
        })
    }

    /// A representative interior point (used to seed MCMC): bounded
    /// coordinates take midpoints, unbounded x is 0, unbounded r defaults
    /// toward the unit timelike axis.
    fn representative(&self) -> FutureTubePoint {
        let mut x = [0.0; 4];
        let mut r = [0.0; 4];
        for a in 0..4 {
            x[a] = match (self.x_min[a], self.x_max[a]) {
                (Some(lo), Some(hi)) => 0.5 * (lo + hi),
                (Some(lo), None) => lo + 1.0,
                (None, Some(hi)) => hi - 1.0,
                (None, None) => 0.0,
            };
            let default_r = if a == 0 { 1.0 } else { 0.0 };
            r[a] = match (self.r_min[a], self.r_max[a]) {
                (Some(lo), Some(hi)) => 0.5 * (lo + hi),
                (Some(lo), None) => lo.max(default_r) + if a == 0 { 0.5 } else { 0.0 },
                (None, Some(hi)) => {
                    if a == 0 {
                        (0.5 * hi).max(hi - 1.0)
                    } else {
                        hi.min(default_r)
                    }
                }
                (None, None) => default_r,
            };
        }
        FutureTubePoint {
            x: RealFourVector(x),
            r: RealFourVector(r),
        }
    }
}

/// Union of boxes, each intersected with Γ.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Region {
    pub boxes: Vec<BoxBounds>,
}

impl Region {
    /// The whole phase space Γ.
    pub fn all() -> Self {
        Region {
            boxes: vec![BoxBounds::unbounded()],
        }
    }

    pub fn contains(&self, z: &FutureTubePoint) -> bool {
        self.boxes.iter().any(|b| b.contains(z))
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("region serializes")
    }

    pub fn from_json(s: &str) -> Result<Self> {
        serde_json::from_str(s).map_err(|e| Error::InvalidArgument(e.to_string()))
    }
}

/// POVM probability ℙ(A) = ∫_{z∈A} ρ(z,z̄) dμ_z by importance sampling.
pub fn povm_probability(state: &DensityState, region: &Region, cfg: &McConfig) -> Result<McEstimate> {
    state.validate()?;
    let centers = state.all_foci();
    let integrand = |z: &FutureTubePoint| -> Complex64 {
        if region.contains(z) {
            Complex64::new(density_diagonal(state, z).unwrap_or(0.0), 0.0)
        } else {
            Complex64::new(0.0, 0.0)
        }
    };
    tube_integral_mc(integrand, &centers, cfg, "povm")
}

/// Deterministic oracle for compact boxes: tensor Gauss-Legendre quadrature
/// of ρ over the 8-D box (cone-exterior nodes contribute zero).
pub fn box_quadrature_probability(
    state: &DensityState,
    bx: &BoxBounds,
    nodes_per_dim: usize,
) -> Result<f64> {
    if !bx.fully_bounded() {
        return Err(Error::InvalidArgument(
            "deterministic box quadrature needs a fully bounded box".into(),
        ));
    }
    let mut rules = Vec::with_capacity(8);
    for a in 0..4 {
        rules.push(gauss_legendre(
            nodes_per_dim,
            bx.x_min[a].unwrap(),
            bx.x_max[a].unwrap(),
        ));
    }
    for a in 0..4 {
        rules.push(gauss_legendre(
            nodes_per_dim,
            bx.r_min[a].unwrap(),
            bx.r_max[a].unwrap(),
        ));
    }
    // Odometer over the 8-D tensor grid.
    let mut idx = [0usize; 8];
    let mut total = 0.0;
    loop {
        let mut x = [0.0; 4];
        let mut r = [0.0; 4];
        let mut w = 1.0;
        for d in 0..8 {
            let (node, weight) = rules[d][idx[d]];
            w *= weight;
            if d < 4 {
                x[d] = node;
            } else {
                r[d - 4] = node;
            }
        }
        let rv = RealFourVector(r);
        if rv.norm_sqr() > EPS_GAMMA && rv.0[0] > 0.0 {
            let z = FutureTubePoint {
                x: RealFourVector(x),
                r: rv,
            };
            total += w * density_diagonal(state, &z)?;
        }
        // Advance the odometer.
        let mut d = 0;
        loop {
            idx[d] += 1;
            if idx[d] < nodes_per_dim {
                break;
            }
            idx[d] = 0;
            d += 1;
            if d == 8 {
                return Ok(total);
            }
        }
    }
}

/// Draws `n_foci` samples of the renormalized density ρ restricted to A by a
/// seeded Metropolis walk and returns the equal-weight coherent mixture on
/// those foci: the empirical form of the measurement update
/// ρ_out = ∫_A Ψ_z ρ(z,z̄) dμ_z / ∫_A ρ dμ.
pub fn post_measurement_state(
    state: &DensityState,
    region: &Region,
    n_foci: usize,
    cfg: &McConfig,
) -> Result<DensityState> {
    state.validate()?;
    if n_foci == 0 {
        return Err(Error::InvalidArgument("n_foci must be ≥ 1".into()));
    }
    // Seed the chain at a focus inside the region, else at a box
    // representative with positive density.
    let mut init = None;
    let candidates: Vec<FutureTubePoint> = state
        .all_foci()
        .into_iter()
        .chain(region.boxes.iter().map(|b| b.representative()))
        .collect();
    for c in &candidates {
        if c.r.norm_sqr() > EPS_GAMMA
            && c.r.0[0] > 0.0
            && region.contains(c)
            && density_diagonal(state, c)? > 0.0
        {
            init = Some(*c);
            break;
        }
    }
    let init = init.ok_or(Error::ZeroProbabilityRegion { prob: 0.0 })?;
    // Walk scales follow the coherent width: ~√(r·r) in both x and r.
    let scale = init.rr().sqrt();
    let density = |z: &FutureTubePoint| density_diagonal(state, z).unwrap_or(0.0);
    let foci = metropolis_tube(
        density,
        |z| region.contains(z),
        init,
        0.5 * scale,
        0.3 * scale,
        n_foci,
        1000,
        10,
        substream(cfg.seed, "post-measurement", 0),
    )?;
    DensityState::uniform_mixture(foci)
}

/// Point-outcome collapse: the outgoing state for a detection exactly at z is
/// the coherent state Ψ_z.
pub fn post_measurement_point(z: &FutureTubePoint) -> DensityState {
    DensityState::coherent(*z)
}

/// Unrecorded measurement: the focus is smeared over the whole phase space,
/// i.e. the update with A = Γ.
pub fn decohere_unrecorded(state: &DensityState, n_foci: usize, cfg: &McConfig) -> Result<DensityState> {
    post_measurement_state(state, &Region::all(), n_foci, cfg)
}

/// Projective yes-probability p = |ξ(z)|²/K(z,z̄) = |⟨ψ_z|ξ⟩|².
pub fn projective_yes_probability(state: &PureState, z: &FutureTubePoint) -> Result<f64> {
    Ok(state.project_on_coherent(z)?.norm_sqr())
}

/// Full projective measurement at z: (p_yes, collapsed-yes state,
/// Gram-orthogonalized no state when p < 1).
pub fn projective_measure(
    state: &PureState,
    z: &FutureTubePoint,
) -> Result<(f64, PureState, Option<PureState>)> {
    let amp = state.project_on_coherent(z)?;
    let p = amp.norm_sqr();
    let yes = PureState::coherent(*z);
    let no = if p < 1.0 - 1e-12 {
        let mut foci = state.foci.clone();
        let mut coeffs = state.coeffs.clone();
        foci.push(*z);
        coeffs.push(-amp);
        Some(PureState::new(foci, coeffs)?)
    } else {
        None
    };
    Ok((p, yes, no))
}

/// 𝔼[F] = ∫ F(z,z̄) ρ(z,z̄) dμ_z by importance sampling, with an
/// integrability tail diagnostic.
pub fn expectation<F>(state: &DensityState, f: F, cfg: &McConfig) -> Result<McEstimate>
where
    F: Fn(&FutureTubePoint) -> f64 + Sync,
{
    state.validate()?;
    let centers = state.all_foci();
    let integrand = |z: &FutureTubePoint| -> Complex64 {
        Complex64::new(f(z) * density_diagonal(state, z).unwrap_or(0.0), 0.0)
    };
    let est = tube_integral_mc(integrand, &centers, cfg, "expectation")?;
    if est.max_weight_fraction > 0.5 {
        return Err(Error::NonIntegrable {
            fraction: est.max_weight_fraction,
        });
    }
    Ok(est)
}

/// Completeness estimate ∫ ψ_z(x) ψ̄_z(ȳ) K(z,z̄) dμ_z at one (x, y) pair,
/// returned with the closed-form target K(x,ȳ). The integrand reduces to
/// K(x,z̄)K(z,ȳ).
pub fn completeness_check(
    x: &FutureTubePoint,
    y: &FutureTubePoint,
    cfg: &McConfig,
) -> Result<(McEstimate, Complex64)> {
    let target = kernel4(x, y)?;
    let integrand = |z: &FutureTubePoint| match (kernel4(x, z), kernel4(z, y)) {
        (Ok(a), Ok(b)) => a * b,
        _ => Complex64::new(0.0, 0.0),
    };
    let est = tube_integral_mc(integrand, &[*x, *y], cfg, "completeness")?;
    Ok((est, target))
}
