//! Momentum-space side of the theory: wavefunctions on the tube pair with
//! functions on the open forward cone V⁺ through
//!   ψ(z) = (1/8π⁵) ∫_{V⁺} e^{−i p·z} (p·p)² Ψ(p) d⁴p,
//! a transform that converges absolutely for every z ∈ Γ because
//! e^{−ip·z} = e^{−ip·x} e^{−p·r} decays along the cone. Plane waves
//! Ψ(p) = e^{ip·w̄} map to kernel sections K(·,w̄), and the pairing
//! (1/8π⁵)∫(p·p)² Ψ Φ̄ reproduces tube inner products exactly.

use num_complex::Complex64;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::mc::{substream, ConeExpSampler, McConfig, McEstimate};
use crate::minkowski::{minkowski_inner, FutureTubePoint, RealFourVector};

/// Normalization of the pairing measure (p·p)² d⁴p/(8π⁵).
pub fn pairing_norm() -> f64 {
    1.0 / (8.0 * std::f64::consts::PI.powi(5))
}

/// Closed form ∫_{V⁺} e^{−ξ·p} d⁴p = 8π/(ξ·ξ)² for timelike future ξ.
pub fn cone_exponential_integral(xi: &RealFourVector) -> Result<f64> {
    let xx = xi.norm_sqr();
    if xx <= 0.0 || xi.0[0] <= 0.0 {
        return Err(Error::DegenerateVector { vv: xx });
    }
    Ok(8.0 * std::f64::consts::PI / (xx * xx))
}

/// Fourier transform of the normalized coherent state with focus z:
/// supported on the closed forward cone, where it takes the value
///   Ψ_z(p) = (2π²/√3) (r·r)² e^{−r·p} e^{i x·p} = e^{i p·z̄}/√K(z,z̄).
/// The prefactor is pinned operationally: with it the inverse transform
/// returns ψ_z and the momentum pairing of two such transforms reproduces
/// the kernel overlap exactly.
pub fn coherent_ft(z: &FutureTubePoint, p: &RealFourVector) -> Complex64 {
    if !p.is_timelike_future(0.0) {
        return Complex64::new(0.0, 0.0);
    }
    let rr = z.rr();
    let amp = 2.0 * std::f64::consts::PI.powi(2) / 3.0f64.sqrt() * rr * rr;
    let decay = (-minkowski_inner(&z.r, p)).exp();
    let phase = minkowski_inner(&z.x, p);
    amp * decay * Complex64::from_polar(1.0, phase)
}

/// The plane wave Ψ(p) = e^{i p·w̄} whose inverse transform is K(·,w̄).
pub fn plane_wave_hat(w: &FutureTubePoint) -> impl Fn(&RealFourVector) -> Complex64 + Sync {
    let x = w.x;
    let r = w.r;
    move |p: &RealFourVector| {
        // i p·w̄ = i p·x − p·r.
        let decay = (-minkowski_inner(&r, p)).exp();
        decay * Complex64::from_polar(1.0, minkowski_inner(&x, p))
    }
}

/// Importance-sampled ∫_{V⁺} f(p) d⁴p with the exact cone-exponential
/// proposal e^{−ξ·p}(ξ·ξ)²/8π. Deterministic for fixed config and label.
pub fn cone_integral_mc<F>(
    f: F,
    xi: &RealFourVector,
    cfg: &McConfig,
    label: &str,
) -> Result<McEstimate>
where
    F: Fn(&RealFourVector) -> Complex64 + Sync,
{
    let sampler = ConeExpSampler::new(*xi)?;
    let streams = cfg.streams.max(1);
    let per_stream = cfg.samples.div_ceil(streams);
    let partials: Vec<[f64; 6]> = (0..streams)
        .into_par_iter()
        .map(|s| {
            let mut rng = substream(cfg.seed, label, s);
            let (mut sre, mut sim, mut sre2, mut sim2, mut wmax, mut wabs) =
                (0.0, 0.0, 0.0, 0.0, 0.0f64, 0.0);
            for _ in 0..per_stream {
                let p = sampler.sample(&mut rng);
                let q = sampler.density(&p);
                if q > 0.0 {
                    let w = f(&p) / q;
                    sre += w.re;
                    sim += w.im;
                    sre2 += w.re * w.re;
                    sim2 += w.im * w.im;
                    wmax = wmax.max(w.norm());
                    wabs += w.norm();
                }
            }
            [sre, sim, sre2, sim2, wmax, wabs]
        })
        .collect();

    let n = (per_stream * streams) as f64;
    let (mut sre, mut sim, mut sre2, mut sim2, mut wmax, mut wabs) =
        (0.0, 0.0, 0.0, 0.0, 0.0f64, 0.0);
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

/// Inverse transform ψ(z) = (1/8π⁵)∫ e^{−ip·z}(p·p)² Ψ(p) d⁴p by importance
/// sampling. `damping` sets the proposal decay ξ; `None` uses ξ = 2r_z, the
/// decay guaranteed by e^{−p·r_z} alone matched to the quartic weight.
pub fn inverse_ft_mc<F>(
    psi_hat: F,
    z: &FutureTubePoint,
    damping: Option<RealFourVector>,
    cfg: &McConfig,
) -> Result<McEstimate>
where
    F: Fn(&RealFourVector) -> Complex64 + Sync,
{
    let xi = damping.unwrap_or_else(|| z.r.scale(2.0));
    let norm = pairing_norm();
    let x = z.x;
    let r = z.r;
    let integrand = move |p: &RealFourVector| -> Complex64 {
        // e^{−ip·z} = e^{−ip·x}e^{−p·r}.
        let pp = p.norm_sqr();
        let decay = (-minkowski_inner(&r, p)).exp();
        let osc = Complex64::from_polar(1.0, -minkowski_inner(&x, p));
        norm * pp * pp * decay * osc * psi_hat(p)
    };
    cone_integral_mc(integrand, &xi, cfg, "inverse-ft")
}

/// Momentum-space pairing of two coherent transforms,
/// (1/8π⁵)∫(p·p)² Ψ_b(p) Ψ̄_a(p) d⁴p, with its exact tube-side value
/// ⟨ψ_a|ψ_b⟩ = K(a,b̄)/√(K(a,ā)K(b,b̄)).
pub fn parseval_coherent_mc(
    a: &FutureTubePoint,
    b: &FutureTubePoint,
    cfg: &McConfig,
) -> Result<(McEstimate, Complex64)> {
    let exact = crate::states::overlap(a, b)?;
    let xi = a.r.add(&b.r);
    let norm = pairing_norm();
    let integrand = move |p: &RealFourVector| -> Complex64 {
        let pp = p.norm_sqr();
        norm * pp * pp * coherent_ft(b, p) * coherent_ft(a, p).conj()
    };
    let est = cone_integral_mc(integrand, &xi, cfg, "parseval")?;
    Ok((est, exact))
}
