//! The Bergman kernel of the future tube and of the one-dimensional model
//! domains (lower half-plane and unit disk), the induced metric, and the
//! momentum-operator kernel.
//!
//! On Γ the kernel is K(z,w̄) = (2³·4!/π⁴) / [(z−w̄)·(z−w̄)]⁴ with the bilinear
//! Minkowski square in the denominator; it is finite on Γ×Γ and diverges only
//! toward the boundary. In one dimension the domain is the lower half-plane
//! i(z−z̄) > 0 (points z = x − ir, r > 0); positivity on the diagonal and the
//! basis summation fix the kernel sign as K(z,w̄) = −1/(π(z−w̄)²).

use nalgebra::Matrix4;
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::mc::{tube_integral_mc, McConfig, McEstimate};
use crate::minkowski::{complex_inner, FutureTubePoint, RealFourVector};
use crate::quad::DiskRule;
use crate::EPS_GAMMA;

const PI: f64 = std::f64::consts::PI;

/// Normalization 2³·4!/π⁴ of the future-tube kernel.
pub fn kernel4_norm() -> f64 {
    192.0 / PI.powi(4)
}

/// Bilinear square D = (z−w̄)·(z−w̄) entering every kernel denominator.
fn denom(z: &FutureTubePoint, w: &FutureTubePoint) -> Complex64 {
    let diff = z.z().sub(&w.z().conj());
    complex_inner(&diff, &diff)
}

/// The future-tube Bergman kernel K(z,w̄).
pub fn kernel4(z: &FutureTubePoint, w: &FutureTubePoint) -> Result<Complex64> {
    let d = denom(z, w);
    if d.norm() < EPS_GAMMA {
        return Err(Error::BoundaryDivergence { denom: d.norm() });
    }
    Ok(kernel4_norm() / d.powu(4))
}

/// Diagonal K(z,z̄) = 3/(4π⁴ (r·r)⁴), real and strictly positive on Γ.
pub fn kernel4_diag(z: &FutureTubePoint) -> f64 {
    let rr = z.rr();
    0.75 / (PI.powi(4) * rr.powi(4))
}

/// Diagonal kernel in momentum form: with p = ħr/(r·r) on the forward cone,
/// K(z,z̄) = 3(p·p)⁴/(4π⁴ħ⁸).
pub fn kernel4_momentum_form(p: &RealFourVector, hbar: f64) -> Result<f64> {
    let pp = p.norm_sqr();
    if pp <= 0.0 || p.0[0] <= 0.0 {
        return Err(Error::DegenerateVector { vv: pp });
    }
    Ok(0.75 * pp.powi(4) / (PI.powi(4) * hbar.powi(8)))
}

/// Momentum-operator kernel P_a(z,w̄) = −3·2⁹ ħ i/π⁴ · (z−w̄)_a / D⁵, the
/// phase-space representation of iħ ∂/∂x^a applied to the kernel.
pub fn momentum_kernel(z: &FutureTubePoint, w: &FutureTubePoint, a: usize, hbar: f64) -> Result<Complex64> {
    let d = denom(z, w);
    if d.norm() < EPS_GAMMA {
        return Err(Error::BoundaryDivergence { denom: d.norm() });
    }
    let diff = z.z().sub(&w.z().conj());
    let g_a = if a == 0 { 1.0 } else { -1.0 };
    let lowered = diff.0[a] * g_a;
    Ok(Complex64::new(0.0, -1536.0 * hbar / PI.powi(4)) * lowered / d.powu(5))
}

/// Diagonal momentum kernel P_a(z,z̄) = 3ħ r_a / (π⁴ (r·r)⁵), real.
pub fn momentum_kernel_diag(z: &FutureTubePoint, a: usize, hbar: f64) -> f64 {
    let rr = z.rr();
    let g_a = if a == 0 { 1.0 } else { -1.0 };
    3.0 * hbar * g_a * z.r.0[a] / (PI.powi(4) * rr.powi(5))
}

/// Coherent-state momentum expectation ⟨p̂_a⟩ = P_a(z,z̄)/K(z,z̄) = 4ħ r_a/(r·r),
/// four times the phase-space momentum of the focus.
pub fn coherent_momentum_expectation(z: &FutureTubePoint, a: usize, hbar: f64) -> f64 {
    let g_a = if a == 0 { 1.0 } else { -1.0 };
    4.0 * hbar * g_a * z.r.0[a] / z.rr()
}

/// Scale-aware default step for [`bergman_metric_numeric`].
pub fn default_metric_step(z: &FutureTubePoint) -> f64 {
    1e-4 * z.rr().sqrt()
}

/// The Bergman metric by central finite differences: (1/2)·∂² log K(z,z̄) /
/// ∂z^a ∂z̄^b, returned as the real block acting on (dx, dr). With this
/// normalization the result coincides with the phase-space metric h_ab.
pub fn bergman_metric_numeric(z: &FutureTubePoint, step: f64) -> Result<Matrix4<f64>> {
    // Stencil must stay strictly inside Γ.
    let margin = 10.0 * step;
    let probe = |dx: [f64; 4], dr: [f64; 4]| -> Result<f64> {
        let mut p = *z;
        for a in 0..4 {
            p.x.0[a] += dx[a];
            p.r.0[a] += dr[a];
        }
        if p.r.norm_sqr() <= EPS_GAMMA || p.r.0[0] <= 0.0 {
            return Err(Error::BoundaryDivergence {
                denom: p.r.norm_sqr(),
            });
        }
        Ok(kernel4_diag(&p).ln())
    };
    {
        let mut shrunk = *z;
        shrunk.r.0[0] -= margin;
        if shrunk.r.norm_sqr() <= EPS_GAMMA || shrunk.r.0[0] <= 0.0 {
            return Err(Error::BoundaryDivergence { denom: z.rr() });
        }
    }

    // 8-coordinate Hessian of F(x, r) = log K(z,z̄); coordinates 0..4 are x,
    // 4..8 are r.
    let mut hess = [[0.0f64; 8]; 8];
    let f0 = probe([0.0; 4], [0.0; 4])?;
    let shift = |i: usize, sgn: f64| -> ([f64; 4], [f64; 4]) {
        let mut dx = [0.0; 4];
        let mut dr = [0.0; 4];
        if i < 4 {
            dx[i] = sgn * step;
        } else {
            dr[i - 4] = sgn * step;
        }
        (dx, dr)
    };
    for i in 0..8 {
        let (dxp, drp) = shift(i, 1.0);
        let (dxm, drm) = shift(i, -1.0);
        let fp = probe(dxp, drp)?;
        let fm = probe(dxm, drm)?;
        hess[i][i] = (fp - 2.0 * f0 + fm) / (step * step);
        for j in (i + 1)..8 {
            let (dxj, drj) = shift(j, 1.0);
            let add = |a: [f64; 4], b: [f64; 4]| {
                let mut out = [0.0; 4];
                for c in 0..4 {
                    out[c] = a[c] + b[c];
                }
                out
            };
            let fpp = probe(add(dxp, dxj), add(drp, drj))?;
            let fpm = probe(add(dxp, [-dxj[0], -dxj[1], -dxj[2], -dxj[3]]), add(drp, [-drj[0], -drj[1], -drj[2], -drj[3]]))?;
            let fmp = probe(add(dxm, dxj), add(drm, drj))?;
            let fmm = probe(add(dxm, [-dxj[0], -dxj[1], -dxj[2], -dxj[3]]), add(drm, [-drj[0], -drj[1], -drj[2], -drj[3]]))?;
            let mixed = (fpp - fpm - fmp + fmm) / (4.0 * step * step);
            hess[i][j] = mixed;
            hess[j][i] = mixed;
        }
    }

    // Wirtinger: Re ∂²/∂z^a∂z̄^b = (1/4)(F_{x^a x^b} + F_{r^a r^b}); halve for
    // the advertised normalization.
    let mut out = Matrix4::zeros();
    for a in 0..4 {
        for b in 0..4 {
            out[(a, b)] = 0.125 * (hess[a][b] + hess[4 + a][4 + b]);
        }
    }
    Ok(out)
}

/// Monte-Carlo estimate of ∫_Γ K(z,ȳ) f(y) dμ_y; by the reproducing property
/// this converges to f(z) for holomorphic square-integrable f. `centers`
/// seeds the importance proposal (z itself is always included).
pub fn reproduce_mc<F>(
    z: &FutureTubePoint,
    f: F,
    centers: &[FutureTubePoint],
    cfg: &McConfig,
) -> Result<McEstimate>
where
    F: Fn(&FutureTubePoint) -> Complex64 + Sync,
{
    let mut all = Vec::with_capacity(centers.len() + 1);
    all.push(*z);
    all.extend_from_slice(centers);
    let integrand = |y: &FutureTubePoint| match kernel4(z, y) {
        Ok(k) => k * f(y),
        Err(_) => Complex64::new(0.0, 0.0),
    };
    tube_integral_mc(integrand, &all, cfg, "reproduce")
}

// ---------------------------------------------------------------------------
// One-dimensional model: lower half-plane and unit disk.
// ---------------------------------------------------------------------------

/// Interior of the 1-D domain: i(z−z̄) > 0, i.e. Im z < 0.
pub fn in_halfplane(z: Complex64) -> bool {
    z.im < 0.0
}

/// Half-plane kernel K(z,w̄) = −1/(π(z−w̄)²). The sign makes the diagonal
/// K(z,z̄) = 1/(4π(Im z)²) positive, as the basis summation requires.
pub fn kernel_halfplane(z: Complex64, w: Complex64) -> Result<Complex64> {
    let d = z - w.conj();
    if d.norm_sqr() < EPS_GAMMA {
        return Err(Error::BoundaryDivergence {
            denom: d.norm_sqr(),
        });
    }
    Ok(-1.0 / (PI * d * d))
}

/// Orthonormal half-plane basis φⁿ(z) = 2i√(n/π)(i+z)^{n−1}/(i−z)^{n+1},
/// n ≥ 1. The only pole sits at z = i, outside the closed lower half-plane.
pub fn basis_halfplane(n: u32, z: Complex64) -> Complex64 {
    assert!(n >= 1, "basis index starts at 1");
    let i = Complex64::new(0.0, 1.0);
    let scale = 2.0 * (n as f64 / PI).sqrt();
    i * scale * (i + z).powu(n - 1) / (i - z).powu(n + 1)
}

/// Partial sum Σ_{n≤N} φⁿ(z) φ̄_n(w̄); converges to [`kernel_halfplane`]
/// geometrically on compact interior sets.
pub fn kernel_halfplane_partial_sum(z: Complex64, w: Complex64, n_max: u32) -> Complex64 {
    let mut acc = Complex64::new(0.0, 0.0);
    for n in 1..=n_max {
        acc += basis_halfplane(n, z) * basis_halfplane(n, w).conj();
    }
    acc
}

/// Disk kernel K_𝔻(z,w̄) = 1/(π(1−zw̄)²).
pub fn kernel_disk(z: Complex64, w: Complex64) -> Result<Complex64> {
    let d = Complex64::new(1.0, 0.0) - z * w.conj();
    if d.norm_sqr() < EPS_GAMMA {
        return Err(Error::BoundaryDivergence {
            denom: d.norm_sqr(),
        });
    }
    Ok(1.0 / (PI * d * d))
}

/// Disk basis φ_n(w) = √(n/π) w^{n−1}, n ≥ 1.
pub fn basis_disk(n: u32, w: Complex64) -> Complex64 {
    assert!(n >= 1, "basis index starts at 1");
    (n as f64 / PI).sqrt() * w.powu(n - 1)
}

/// Cayley map of the half-plane onto the disk, w = (i+z)/(i−z).
pub fn cayley_halfplane_to_disk(z: Complex64) -> Result<Complex64> {
    let i = Complex64::new(0.0, 1.0);
    let den = i - z;
    if den.norm_sqr() < EPS_GAMMA {
        return Err(Error::SingularMap {
            context: "Cayley map pole z = i",
        });
    }
    Ok((i + z) / den)
}

/// Inverse Cayley map, z = c(w) = i(w−1)/(1+w).
pub fn cayley_disk_to_halfplane(w: Complex64) -> Result<Complex64> {
    let den = Complex64::new(1.0, 0.0) + w;
    if den.norm_sqr() < EPS_GAMMA {
        return Err(Error::SingularMap {
            context: "inverse Cayley pole w = -1",
        });
    }
    Ok(Complex64::new(0.0, 1.0) * (w - Complex64::new(1.0, 0.0)) / den)
}

/// Derivative c′(w) = 2i/(1+w)² of the inverse Cayley map.
pub fn cayley_derivative(w: Complex64) -> Result<Complex64> {
    let den = Complex64::new(1.0, 0.0) + w;
    if den.norm_sqr() < EPS_GAMMA {
        return Err(Error::SingularMap {
            context: "inverse Cayley pole w = -1",
        });
    }
    Ok(Complex64::new(0.0, 2.0) / (den * den))
}

/// ∫_{half-plane} f(z) dμ_z with dμ = dx dr, pulled back to the disk:
/// ∫_𝔻 f(c(w)) |c′(w)|² dA_w over the given rule.
pub fn halfplane_integral<F>(rule: &DiskRule, f: F) -> Complex64
where
    F: Fn(Complex64) -> Complex64,
{
    rule.nodes()
        .iter()
        .map(|&(w, wt)| {
            let z = cayley_disk_to_halfplane(w).expect("interior node");
            let jac = cayley_derivative(w).expect("interior node").norm_sqr();
            f(z) * jac * wt
        })
        .sum()
}
