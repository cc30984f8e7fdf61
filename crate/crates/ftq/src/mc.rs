//! Seeded Monte-Carlo machinery: named RNG substreams, importance samplers
//! over the future tube and the forward cone with exact closed-form densities,
//! a generic tube integrator, and a Metropolis sampler for unnormalized
//! densities on Γ.
//!
//! Every estimator is deterministic for a fixed (seed, stream-count) pair:
//! streams are independent ChaCha substreams and partial sums are merged in
//! stream order regardless of thread scheduling.

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::minkowski::{boost_to_frame, minkowski_inner, FutureTubePoint, RealFourVector};
use crate::EPS_GAMMA;

/// Configuration for seeded Monte-Carlo estimates.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct McConfig {
    pub seed: u64,
    pub samples: u64,
    /// Independent substreams the sample budget is split across.
    pub streams: u64,
    /// Mixture weight of the heavy-tail component of the r-proposal.
    pub heavy_tail_weight: f64,
    /// Tail exponent parameter k of the heavy-tail component (density decays
    /// like (r⁰)^{−4−k} jointly).
    pub heavy_tail_k: u32,
    /// Width multiplier of the Cauchy-type x-proposal relative to √(r·r).
    pub x_width: f64,
    /// When set, estimates failing this relative-std-err bound are rejected.
    pub max_rel_std_err: Option<f64>,
}

impl Default for McConfig {
    fn default() -> Self {
        McConfig {
            seed: 0,
            samples: 100_000,
            streams: 8,
            heavy_tail_weight: 0.4,
            heavy_tail_k: 6,
            x_width: 1.0,
            max_rel_std_err: None,
        }
    }
}

impl McConfig {
    pub fn new(seed: u64, samples: u64) -> Self {
        McConfig {
            seed,
            samples,
            ..Self::default()
        }
    }
}

/// Result of a Monte-Carlo integration.
#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct McEstimate {
    pub estimate: Complex64,
    /// Combined standard error of the complex mean (root of the summed
    /// componentwise variances of the mean).
    pub std_err: f64,
    pub samples: u64,
    /// Largest single |weight| as a fraction of Σ|weight|; near-1 values mean
    /// the estimate is dominated by one sample (an integrability red flag).
    pub max_weight_fraction: f64,
}

impl McEstimate {
    /// Rejects the estimate when the relative standard error exceeds `limit`.
    pub fn require_rel_std_err(&self, limit: f64) -> Result<()> {
        let scale = self.estimate.norm().max(f64::MIN_POSITIVE);
        let rel = self.std_err / scale;
        if rel > limit {
            Err(Error::InsufficientSamples {
                rel_std_err: rel,
                limit,
            })
        } else {
            Ok(())
        }
    }
}

/// FNV-1a hash used to derive stable stream ids from labels.
fn fnv1a(label: &str) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for b in label.bytes() {
        h ^= b as u64;
        h = h.wrapping_mul(0x100_0000_01b3);
    }
    h
}

/// A ChaCha substream keyed by (seed, label, index). Identical keys always
/// reproduce the identical sample sequence.
pub fn substream(seed: u64, label: &str, idx: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(fnv1a(label).wrapping_add(idx));
    rng
}

/// A uniform direction on the unit 2-sphere.
pub fn sample_unit_sphere<R: Rng>(rng: &mut R) -> [f64; 3] {
    loop {
        let v: [f64; 3] = [
            StandardNormal.sample(rng),
            StandardNormal.sample(rng),
            StandardNormal.sample(rng),
        ];
        let n = (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt();
        if n > 1e-12 {
            return [v[0] / n, v[1] / n, v[2] / n];
        }
    }
}

/// Gamma(k, rate) variate for small integer shape k, as a sum of exponentials
/// (inverse-CDF composition; no rejection, so streams stay pinned to seeds).
pub fn sample_gamma_int<R: Rng>(rng: &mut R, k: u32, rate: f64) -> f64 {
    let mut acc = 0.0;
    for _ in 0..k {
        let u: f64 = 1.0 - rng.random::<f64>(); // in (0, 1]
        acc -= u.ln();
    }
    acc / rate
}

/// A random timelike future-pointing vector m·(cosh η, sinh η n̂) with
/// m ~ U[m_lo, m_hi] and η ~ U[0, eta_max].
pub fn sample_timelike_future<R: Rng>(rng: &mut R, m_lo: f64, m_hi: f64, eta_max: f64) -> RealFourVector {
    let m = m_lo + (m_hi - m_lo) * rng.random::<f64>();
    let eta = eta_max * rng.random::<f64>();
    let n = sample_unit_sphere(rng);
    let sh = eta.sinh();
    RealFourVector::new(m * eta.cosh(), m * sh * n[0], m * sh * n[1], m * sh * n[2])
}

/// A random tube point with x components uniform in [−x_range, x_range] and
/// r drawn from [`sample_timelike_future`].
pub fn random_tube_point<R: Rng>(
    rng: &mut R,
    x_range: f64,
    m_lo: f64,
    m_hi: f64,
    eta_max: f64,
) -> FutureTubePoint {
    let x = RealFourVector::new(
        x_range * (2.0 * rng.random::<f64>() - 1.0),
        x_range * (2.0 * rng.random::<f64>() - 1.0),
        x_range * (2.0 * rng.random::<f64>() - 1.0),
        x_range * (2.0 * rng.random::<f64>() - 1.0),
    );
    let r = sample_timelike_future(rng, m_lo, m_hi, eta_max);
    FutureTubePoint::new(x, r).expect("sampled r is strictly timelike future")
}

/// Samples the forward cone with density e^{−ξ·p} (ξ·ξ)²/(8π): in the rest
/// frame of ξ the time component is Gamma(4, rate √(ξ·ξ)), the spatial part
/// is uniform in the ball of radius p⁰, and the result is boosted back. The
/// density is exact, which makes importance weights unbiased.
#[derive(Clone, Debug)]
pub struct ConeExpSampler {
    xi: RealFourVector,
    c: f64,
    boost: nalgebra::Matrix4<f64>,
}

impl ConeExpSampler {
    pub fn new(xi: RealFourVector) -> Result<Self> {
        let xx = xi.norm_sqr();
        if xx <= 0.0 || xi.0[0] <= 0.0 {
            return Err(Error::DegenerateVector { vv: xx });
        }
        let c = xx.sqrt();
        let u = xi.scale(1.0 / c);
        Ok(ConeExpSampler {
            xi,
            c,
            boost: boost_to_frame(&u),
        })
    }

    pub fn sample<R: Rng>(&self, rng: &mut R) -> RealFourVector {
        let p0 = sample_gamma_int(rng, 4, self.c);
        let radius = p0 * rng.random::<f64>().cbrt();
        let dir = sample_unit_sphere(rng);
        let rest = RealFourVector::new(p0, radius * dir[0], radius * dir[1], radius * dir[2]);
        rest.transform(&self.boost)
    }

    /// The exact density at p (zero off the open cone).
    pub fn density(&self, p: &RealFourVector) -> f64 {
        if !p.is_timelike_future(0.0) {
            return 0.0;
        }
        let xx = self.c * self.c;
        (-minkowski_inner(&self.xi, p)).exp() * xx * xx / (8.0 * std::f64::consts::PI)
    }
}

/// Heavy-tailed cone sampler: in the rest frame of the unit direction u the
/// time component is σ·BetaPrime(4, k) and the spatial part ball-uniform.
/// Joint density decays like (r⁰)^{−4−k}, slow enough to dominate the
/// polynomially-decaying kernel integrands.
#[derive(Clone, Debug)]
pub struct HeavyTailSampler {
    u: RealFourVector,
    sigma: f64,
    k: u32,
    beta_inv: f64,
    boost: nalgebra::Matrix4<f64>,
}

impl HeavyTailSampler {
    pub fn new(center_r: RealFourVector, k: u32) -> Result<Self> {
        let rr = center_r.norm_sqr();
        if rr <= 0.0 || center_r.0[0] <= 0.0 {
            return Err(Error::DegenerateVector { vv: rr });
        }
        let sigma = rr.sqrt();
        let u = center_r.scale(1.0 / sigma);
        // 1/B(4,k) = Γ(4+k)/(Γ(4)Γ(k)) = k(k+1)(k+2)(k+3)/6 for integer k.
        let mut beta_inv = 1.0 / 6.0;
        for j in 0..4u32 {
            beta_inv *= (k + j) as f64;
        }
        Ok(HeavyTailSampler {
            u,
            sigma,
            k,
            beta_inv,
            boost: boost_to_frame(&u),
        })
    }

    pub fn sample<R: Rng>(&self, rng: &mut R) -> RealFourVector {
        let g4 = sample_gamma_int(rng, 4, 1.0);
        let gk = sample_gamma_int(rng, self.k, 1.0);
        let t = self.sigma * g4 / gk;
        let radius = t * rng.random::<f64>().cbrt();
        let dir = sample_unit_sphere(rng);
        let rest = RealFourVector::new(t, radius * dir[0], radius * dir[1], radius * dir[2]);
        rest.transform(&self.boost)
    }

    pub fn density(&self, p: &RealFourVector) -> f64 {
        if !p.is_timelike_future(0.0) {
            return 0.0;
        }
        // Rest-frame time component is the invariant u·p.
        let t = minkowski_inner(&self.u, p);
        if t <= 0.0 {
            return 0.0;
        }
        let tau = t / self.sigma;
        let p_t = self.beta_inv / self.sigma * tau.powi(3) * (1.0 + tau).powi(-(4 + self.k as i32));
        p_t * 3.0 / (4.0 * std::f64::consts::PI * t * t * t)
    }
}

/// Isotropic 4-D Student-t (ν = 1) displacement: a Cauchy-type heavy tail for
/// the x-part of tube proposals.
#[derive(Clone, Copy, Debug)]
pub struct StudentTSampler {
    center: RealFourVector,
    gamma: f64,
}

impl StudentTSampler {
    pub fn new(center: RealFourVector, gamma: f64) -> Self {
        StudentTSampler { center, gamma }
    }

    pub fn sample<R: Rng>(&self, rng: &mut R) -> RealFourVector {
        let w: f64 = StandardNormal.sample(rng);
        let denom = w.abs().max(1e-300);
        let mut out = [0.0; 4];
        for (i, slot) in out.iter_mut().enumerate() {
            let z: f64 = StandardNormal.sample(rng);
            *slot = self.center.0[i] + self.gamma * z / denom;
        }
        RealFourVector(out)
    }

    pub fn density(&self, x: &RealFourVector) -> f64 {
        let d2: f64 = (0..4).map(|i| (x.0[i] - self.center.0[i]).powi(2)).sum();
        let g2 = self.gamma * self.gamma;
        0.75 / (std::f64::consts::PI.powi(2) * g2 * g2) * (1.0 + d2 / g2).powf(-2.5)
    }
}

/// Importance proposal over Γ: an equal-weight mixture over `centers`, each
/// component pairing a Cauchy-type x-proposal at the center's x with an
/// r-mixture of a cone-exponential matched to the center's r and a
/// scale-free heavy tail.
#[derive(Clone, Debug)]
pub struct TubeProposal {
    x_parts: Vec<StudentTSampler>,
    cone_parts: Vec<ConeExpSampler>,
    tail_parts: Vec<HeavyTailSampler>,
    tail_weight: f64,
}

impl TubeProposal {
    pub fn new(centers: &[FutureTubePoint], cfg: &McConfig) -> Result<Self> {
        if centers.is_empty() {
            return Err(Error::InvalidArgument("proposal needs at least one center".into()));
        }
        let mut x_parts = Vec::with_capacity(centers.len());
        let mut cone_parts = Vec::with_capacity(centers.len());
        let mut tail_parts = Vec::with_capacity(centers.len());
        for c in centers {
            let rr = c.rr();
            x_parts.push(StudentTSampler::new(c.x, cfg.x_width * rr.sqrt()));
            // Mean of the cone-exponential e^{−ξ·p} is at 4ξ/(ξ·ξ); matching
            // it to the center's r gives ξ = 4r/(r·r).
            cone_parts.push(ConeExpSampler::new(c.r.scale(4.0 / rr))?);
            tail_parts.push(HeavyTailSampler::new(c.r, cfg.heavy_tail_k)?);
        }
        Ok(TubeProposal {
            x_parts,
            cone_parts,
            tail_parts,
            tail_weight: cfg.heavy_tail_weight,
        })
    }

    /// Draws a tube point; the rare boundary draws (r·r ≤ ε_Γ) are rejected
    /// and redrawn, matching the domain-truncation convention.
    pub fn sample<R: Rng>(&self, rng: &mut R) -> FutureTubePoint {
        loop {
            let i = rng.random_range(0..self.x_parts.len());
            let x = self.x_parts[i].sample(rng);
            let r = if rng.random::<f64>() < self.tail_weight {
                self.tail_parts[i].sample(rng)
            } else {
                self.cone_parts[i].sample(rng)
            };
            if r.norm_sqr() > EPS_GAMMA && r.0[0] > 0.0 {
                return FutureTubePoint { x, r };
            }
        }
    }

    /// Mixture density at z.
    pub fn density(&self, z: &FutureTubePoint) -> f64 {
        let n = self.x_parts.len() as f64;
        let mut q = 0.0;
        for i in 0..self.x_parts.len() {
            let qx = self.x_parts[i].density(&z.x);
            let qr = (1.0 - self.tail_weight) * self.cone_parts[i].density(&z.r)
                + self.tail_weight * self.tail_parts[i].density(&z.r);
            q += qx * qr;
        }
        q / n
    }
}

/// Estimates ∫_Γ f(z) dμ_z (dμ = d⁴x d⁴r) by importance sampling from a
/// [`TubeProposal`] built on `centers`. Deterministic for fixed config.
pub fn tube_integral_mc<F>(
    integrand: F,
    centers: &[FutureTubePoint],
    cfg: &McConfig,
    label: &str,
) -> Result<McEstimate>
where
    F: Fn(&FutureTubePoint) -> Complex64 + Sync,
{
    let proposal = TubeProposal::new(centers, cfg)?;
    let streams = cfg.streams.max(1);
    let per_stream = cfg.samples.div_ceil(streams);
    let partials: Vec<[f64; 6]> = (0..streams)
        .into_par_iter()
        .map(|s| {
            let mut rng = substream(cfg.seed, label, s);
            let (mut sre, mut sim, mut sre2, mut sim2, mut wmax, mut wabs) =
                (0.0, 0.0, 0.0, 0.0, 0.0f64, 0.0);
            for _ in 0..per_stream {
                let z = proposal.sample(&mut rng);
                let q = proposal.density(&z);
                let w = integrand(&z) / q;
                sre += w.re;
                sim += w.im;
                sre2 += w.re * w.re;
                sim2 += w.im * w.im;
                wmax = wmax.max(w.norm());
                wabs += w.norm();
            }
            [sre, sim, sre2, sim2, wmax, wabs]
        })
        .collect();

    let n = (per_stream * streams) as f64;
    let (mut sre, mut sim, mut sre2, mut sim2, mut wmax, mut wabs) = (0.0, 0.0, 0.0, 0.0, 0.0f64, 0.0);
    for p in &partials {
        sre += p[0];
        sim += p[1];
        sre2 += p[2];
        sim2 += p[3];
        wmax = wmax.max(p[4]);
        wabs += p[5];
    }
    let mean = Complex64::new(sre / n, sim / n);
    let var_re = (sre2 / n - (sre / n).powi(2)).max(0.0);
    let var_im = (sim2 / n - (sim / n).powi(2)).max(0.0);
    let std_err = ((var_re + var_im) / n).sqrt();
    let est = McEstimate {
        estimate: mean,
        std_err,
        samples: per_stream * streams,
        max_weight_fraction: if wabs > 0.0 { (wmax / wabs).min(1.0) } else { 0.0 },
    };
    if let Some(limit) = cfg.max_rel_std_err {
        est.require_rel_std_err(limit)?;
    }
    Ok(est)
}

/// Metropolis random walk targeting an unnormalized density on Γ. Proposals
/// leaving the cone (or the optional constraint) are rejected and the chain
/// stays put, the exact treatment of a constrained target. Burn-in and
/// thinning follow the caller; the walk is seeded and deterministic.
#[allow(clippy::too_many_arguments)]
pub fn metropolis_tube<D, C>(
    density: D,
    constraint: C,
    init: FutureTubePoint,
    sigma_x: f64,
    sigma_r: f64,
    n_out: usize,
    burn_in: usize,
    thin: usize,
    mut rng: ChaCha8Rng,
) -> Result<Vec<FutureTubePoint>>
where
    D: Fn(&FutureTubePoint) -> f64,
    C: Fn(&FutureTubePoint) -> bool,
{
    let mut current = init;
    let mut f_cur = density(&current);
    if !(f_cur > 0.0) || !constraint(&current) {
        return Err(Error::ZeroProbabilityRegion { prob: f_cur });
    }
    let mut out = Vec::with_capacity(n_out);
    let total = burn_in + n_out * thin.max(1);
    for step in 0..total {
        let mut xp = [0.0; 4];
        let mut rp = [0.0; 4];
        for i in 0..4 {
            let zx: f64 = StandardNormal.sample(&mut rng);
            let zr: f64 = StandardNormal.sample(&mut rng);
            xp[i] = current.x.0[i] + sigma_x * zx;
            rp[i] = current.r.0[i] + sigma_r * zr;
        }
        let r = RealFourVector(rp);
        if r.norm_sqr() > EPS_GAMMA && r.0[0] > 0.0 {
            let cand = FutureTubePoint {
                x: RealFourVector(xp),
                r,
            };
            if constraint(&cand) {
                let f_new = density(&cand);
                if f_new > 0.0 && rng.random::<f64>() < f_new / f_cur {
                    current = cand;
                    f_cur = f_new;
                }
            }
        }
        if step >= burn_in && (step - burn_in) % thin.max(1) == 0 {
            out.push(current);
        }
    }
    out.truncate(n_out);
    Ok(out)
}
