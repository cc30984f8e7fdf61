//! Named verification suites. Each check evaluates one mathematical identity
//! of the toolkit and reports the observed residual against its tolerance;
//! the batteries back the `verify` subcommand and the acceptance tests.
//!
//! Every suite is deterministic for a fixed seed: randomness flows through
//! named substreams only.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::bergman::{
    basis_halfplane, bergman_metric_numeric, default_metric_step, halfplane_integral, kernel4,
    kernel4_diag, kernel4_momentum_form, kernel_halfplane, kernel_halfplane_partial_sum,
    reproduce_mc,
};
use crate::conformal::{
    act_on_coherent, apply_point, compose_special, covariance_residual, cross_ratio,
    lorentz_from_params, special_phase_alternative, ConformalMap,
};
use crate::dynamics::{
    charged_helix_closed_form, conserved_quantities, integrate_cotangent,
    oscillator_initial_data, two_body_oscillator_closed_form, CotangentPoint, HamiltonianSpec,
    IntegratorConfig,
};
use crate::error::Result;
use crate::fourier::{
    cone_exponential_integral, cone_integral_mc, coherent_ft, inverse_ft_mc, parseval_coherent_mc,
    plane_wave_hat,
};
use crate::localization::{density_bound, density_bound_for_mass, mass_of_point, scan_bound};
use crate::mc::{random_tube_point, substream, McConfig};
use crate::minkowski::{
    kelvin_map, minkowski_inner, phase_space_metric, FutureTubePoint, RealFourVector,
};
use crate::quad::DiskRule;
use crate::states::{
    coherent_wavefunction, decohere_unrecorded, density_diagonal, overlap, post_measurement_point,
    povm_probability, purity, transition_probability_cross_ratio, BoxBounds, DensityState,
    PureState, Region,
};

use rand::Rng;

/// Global knobs for a verification run.
#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct VerifyConfig {
    pub hbar: f64,
    pub seed: u64,
    /// Base Monte-Carlo sample count for the statistical identities.
    pub samples: u64,
}

impl Default for VerifyConfig {
    fn default() -> Self {
        VerifyConfig {
            hbar: 1.0,
            seed: 42,
            samples: 1_000_000,
        }
    }
}

/// Outcome of a single identity check: `observed` is the residual measure
/// (relative error, drift, or deviation as documented per check) and the
/// check passes when observed ≤ tolerance.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct IdentityReport {
    pub suite: String,
    pub identity: String,
    pub observed: f64,
    pub tolerance: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub std_err: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub samples: Option<u64>,
    pub pass: bool,
}

fn report(suite: &str, identity: &str, observed: f64, tolerance: f64) -> IdentityReport {
    IdentityReport {
        suite: suite.into(),
        identity: identity.into(),
        observed,
        tolerance,
        std_err: None,
        samples: None,
        pass: observed.is_finite() && observed <= tolerance,
    }
}

fn report_mc(
    suite: &str,
    identity: &str,
    observed: f64,
    tolerance: f64,
    std_err: f64,
    samples: u64,
) -> IdentityReport {
    IdentityReport {
        suite: suite.into(),
        identity: identity.into(),
        observed,
        tolerance,
        std_err: Some(std_err),
        samples: Some(samples),
        pass: observed.is_finite() && observed <= tolerance,
    }
}

fn tube(x: [f64; 4], r: [f64; 4]) -> FutureTubePoint {
    FutureTubePoint::new(RealFourVector(x), RealFourVector(r)).expect("fixed interior point")
}

// ---------------------------------------------------------------------------
// Suites
// ---------------------------------------------------------------------------

/// Kernel closed forms: diagonal value and the momentum-form identity.
pub fn suite_kernel(cfg: &VerifyConfig) -> Result<Vec<IdentityReport>> {
    let mut out = Vec::new();
    let e0 = tube([0.0; 4], [1.0, 0.0, 0.0, 0.0]);
    let target = 0.75 / std::f64::consts::PI.powi(4);
    let rel = (kernel4_diag(&e0) - target).abs() / target;
    out.push(report("kernel", "diagonal value 3/(4π⁴) at r=e0", rel, 1e-12));

    let mut rng = substream(cfg.seed, "verify-kernel", 0);
    let mut worst: f64 = 0.0;
    for _ in 0..10_000 {
        let z = random_tube_point(&mut rng, 2.0, 0.3, 3.0, 1.2);
        let k = kernel4_diag(&z);
        let p = kelvin_map(&z.r, cfg.hbar)?;
        let km = kernel4_momentum_form(&p, cfg.hbar)?;
        worst = worst.max((k - km).abs() / k);
    }
    out.push(report(
        "kernel",
        "momentum form 3(p·p)⁴/(4π⁴ħ⁸) at 10⁴ points",
        worst,
        1e-12,
    ));

    let mut worst_h: f64 = 0.0;
    for _ in 0..2000 {
        let z = random_tube_point(&mut rng, 2.0, 0.3, 3.0, 1.2);
        let w = random_tube_point(&mut rng, 2.0, 0.3, 3.0, 1.2);
        let kzw = kernel4(&z, &w)?;
        let kwz = kernel4(&w, &z)?;
        worst_h = worst_h.max((kzw - kwz.conj()).norm() / kzw.norm());
    }
    out.push(report("kernel", "Hermitian symmetry", worst_h, 1e-12));
    Ok(out)
}

/// Finite-difference Bergman metric against the closed-form phase-space
/// metric, plus positive definiteness.
pub fn suite_metric(cfg: &VerifyConfig) -> Result<Vec<IdentityReport>> {
    let mut rng = substream(cfg.seed, "verify-metric", 0);
    let mut worst: f64 = 0.0;
    let mut pd_fail = 0u32;
    for _ in 0..100 {
        let z = random_tube_point(&mut rng, 1.0, 0.5, 2.0, 0.8);
        let numeric = bergman_metric_numeric(&z, default_metric_step(&z))?;
        let (h, _) = phase_space_metric(&z.r)?;
        let scale = h.amax();
        worst = worst.max((numeric - h).amax() / scale);
        if nalgebra::Cholesky::new(h).is_none() {
            pd_fail += 1;
        }
    }
    Ok(vec![
        report(
            "metric",
            "∂∂̄ log K / 2 equals phase-space metric at 100 points",
            worst,
            1e-6,
        ),
        report("metric", "positive definiteness (Cholesky)", pd_fail as f64, 0.0),
    ])
}

/// Dynamics oracles: geodesic, harmonic pair, uniform-field helix, drifts.
pub fn suite_dynamics(_cfg: &VerifyConfig) -> Result<Vec<IdentityReport>> {
    let mut out = Vec::new();

    // Free particle against the straight world line.
    let p = RealFourVector::new(1.25, 0.75, 0.0, 0.0);
    let init = CotangentPoint {
        x: RealFourVector::new(0.1, -0.2, 0.3, 0.0),
        p,
    };
    let m = p.norm_sqr().sqrt();
    let traj = integrate_cotangent(
        &HamiltonianSpec::FreeParticle,
        &[init],
        &IntegratorConfig::rk4(10_000, 10.0),
    )?;
    let mut worst: f64 = 0.0;
    for (i, st) in traj.states.iter().enumerate() {
        let c = st.single().expect("single system");
        let s = traj.s[i];
        for a in 0..4 {
            let exact = init.x.0[a] + p.0[a] / m * s;
            worst = worst.max((c.x.0[a] - exact).abs());
        }
    }
    out.push(report("dynamics", "free particle geodesic", worst, 1e-9));

    // Harmonic pair over one period.
    let alpha = RealFourVector::new(0.0, 0.5, 0.0, 0.0);
    let beta = RealFourVector::new(0.0, 0.0, 0.3, 0.0);
    let (k, mass) = (1.0, 1.0);
    let (c1, c2) = oscillator_initial_data(&alpha, &beta, k, mass, mass);
    let omega = (k / (2.0 * mass * mass)).sqrt();
    let period = 2.0 * std::f64::consts::PI / omega;
    let spec = HamiltonianSpec::two_body_oscillator(k);
    let traj = integrate_cotangent(&spec, &[c1, c2], &IntegratorConfig::rk4(20_000, period))?;
    let mut worst: f64 = 0.0;
    for (i, st) in traj.states.iter().enumerate() {
        let (a, b) = st.pair().expect("pair system");
        let xi = crate::dynamics::internal_coordinate(&a.x, &b.x, &a.p, &b.p)?;
        let exact = two_body_oscillator_closed_form(&alpha, &beta, k, mass, mass, traj.s[i]);
        for c in 0..4 {
            worst = worst.max((xi.0[c] - exact.0[c]).abs());
        }
    }
    out.push(report(
        "dynamics",
        "two-body oscillator ξ(s) = α cos + β sin over one period",
        worst,
        1e-6,
    ));

    let cons = conserved_quantities(&traj, &spec)?;
    out.push(report("dynamics", "H drift (harmonic pair)", cons.h_drift, 1e-8));
    out.push(report(
        "dynamics",
        "P·Q drift (harmonic pair)",
        cons.extra_drift.unwrap_or(f64::NAN),
        1e-8,
    ));

    // Uniform-field helix.
    let (q, b, v) = (1.0f64, 1.0f64, 0.5f64);
    let pi0 = RealFourVector::new((1.0 + v * v).sqrt(), v, 0.0, 0.0);
    let x0 = RealFourVector::zero();
    let init = CotangentPoint { x: x0, p: pi0 };
    let h = pi0.norm_sqr().sqrt();
    let period = 2.0 * std::f64::consts::PI * h / (q * b);
    let spec = HamiltonianSpec::charged_uniform_b(q, b);
    let traj = integrate_cotangent(&spec, &[init], &IntegratorConfig::rk4(10_000, period))?;
    let mut worst: f64 = 0.0;
    for (i, st) in traj.states.iter().enumerate() {
        let c = st.single().expect("single system");
        let (x_exact, p_exact) = charged_helix_closed_form(&x0, &pi0, q, b, traj.s[i]);
        for a in 0..4 {
            worst = worst.max((c.x.0[a] - x_exact.0[a]).abs());
            worst = worst.max((c.p.0[a] - p_exact.0[a]).abs());
        }
    }
    out.push(report("dynamics", "charged-particle helix", worst, 1e-6));
    Ok(out)
}

/// Kelvin inversion: involution and cone preservation over 10⁵ samples.
pub fn suite_kelvin(cfg: &VerifyConfig) -> Result<Vec<IdentityReport>> {
    let mut rng = substream(cfg.seed, "verify-kelvin", 0);
    let mut worst: f64 = 0.0;
    let mut cone_fail = 0u64;
    for _ in 0..100_000 {
        let z = random_tube_point(&mut rng, 1.0, 0.1, 10.0, 2.0);
        let p = kelvin_map(&z.r, cfg.hbar)?;
        if !p.is_timelike_future(0.0) {
            cone_fail += 1;
            continue;
        }
        let back = kelvin_map(&p, cfg.hbar)?;
        for a in 0..4 {
            let scale = z.r.0[a].abs().max(1.0);
            worst = worst.max((back.0[a] - z.r.0[a]).abs() / scale);
        }
    }
    Ok(vec![
        report("kelvin", "involution r ↦ ħp/(p·p) ↦ r over 10⁵", worst, 1e-12),
        report("kelvin", "cone preservation failures", cone_fail as f64, 0.0),
    ])
}

/// One-dimensional half-plane model: orthonormality, partial sums,
/// reproducing property.
pub fn suite_halfplane(_cfg: &VerifyConfig) -> Result<Vec<IdentityReport>> {
    let mut out = Vec::new();
    let rule = DiskRule::new(64, 128);

    // Orthonormality of the pulled-back basis for n, m ≤ 10.
    let mut worst: f64 = 0.0;
    for n in 1..=10u32 {
        for m in 1..=10u32 {
            let val = halfplane_integral(&rule, |z| {
                basis_halfplane(n, z) * basis_halfplane(m, z).conj()
            });
            let target = if n == m { 1.0 } else { 0.0 };
            worst = worst.max((val - Complex64::new(target, 0.0)).norm());
        }
    }
    out.push(report("halfplane", "basis orthonormality n,m ≤ 10", worst, 1e-6));

    // Partial-sum kernel versus the closed form on a compact patch.
    let mut worst: f64 = 0.0;
    for i in 0..5 {
        for j in 0..5 {
            let z = Complex64::new(-0.3 + 0.15 * i as f64, -0.4 - 0.2 * j as f64);
            let w = Complex64::new(0.25 - 0.12 * j as f64, -0.5 - 0.15 * i as f64);
            let full = kernel_halfplane(z, w)?;
            let partial = kernel_halfplane_partial_sum(z, w, 200);
            worst = worst.max((full - partial).norm() / full.norm());
        }
    }
    out.push(report("halfplane", "partial-sum kernel N = 200", worst, 1e-6));

    // Reproducing property for a span element f = φ¹ + (0.3−0.2i)φ³.
    let c3 = Complex64::new(0.3, -0.2);
    let f = |z: Complex64| basis_halfplane(1, z) + c3 * basis_halfplane(3, z);
    let mut worst: f64 = 0.0;
    for zt in [
        Complex64::new(0.0, -1.0),
        Complex64::new(0.4, -0.7),
        Complex64::new(-0.3, -1.6),
    ] {
        let got = halfplane_integral(&rule, |w| kernel_halfplane(zt, w).unwrap() * f(w));
        worst = worst.max((got - f(zt)).norm());
    }
    out.push(report("halfplane", "reproducing property on span", worst, 1e-4));
    Ok(out)
}

/// Poincaré invariance of the 4-D kernel over 10⁴ random (L, B, x, z).
pub fn suite_unitarity(cfg: &VerifyConfig) -> Result<Vec<IdentityReport>> {
    let mut rng = substream(cfg.seed, "verify-unitarity", 0);
    let mut worst: f64 = 0.0;
    for _ in 0..10_000 {
        let l = lorentz_from_params(
            [
                rng.random::<f64>() - 0.5,
                rng.random::<f64>() - 0.5,
                rng.random::<f64>() - 0.5,
            ],
            [
                2.0 * (rng.random::<f64>() - 0.5),
                2.0 * (rng.random::<f64>() - 0.5),
                2.0 * (rng.random::<f64>() - 0.5),
            ],
        );
        let b = RealFourVector::new(
            2.0 * (rng.random::<f64>() - 0.5),
            2.0 * (rng.random::<f64>() - 0.5),
            2.0 * (rng.random::<f64>() - 0.5),
            2.0 * (rng.random::<f64>() - 0.5),
        );
        let x = random_tube_point(&mut rng, 1.5, 0.4, 2.5, 1.0);
        let z = random_tube_point(&mut rng, 1.5, 0.4, 2.5, 1.0);
        let g = ConformalMap::poincare(&l, b)?;
        let k0 = kernel4(&x, &z)?;
        let k1 = kernel4(&apply_point(&g, &x)?, &apply_point(&g, &z)?)?;
        worst = worst.max((k1 - k0).norm() / k0.norm());
    }
    Ok(vec![report(
        "unitarity",
        "K(Lx+B, (Lz+B)‾) = K(x,z̄) over 10⁴",
        worst,
        1e-10,
    )])
}

/// Conformal covariance, phase agreement, composition, cross-ratio
/// invariance.
pub fn suite_conformal(cfg: &VerifyConfig) -> Result<Vec<IdentityReport>> {
    let mut rng = substream(cfg.seed, "verify-conformal", 0);
    let mut out = Vec::new();

    let y = tube([0.1, -0.2, 0.0, 0.3], [1.2, 0.1, -0.1, 0.0]);
    let probes: Vec<_> = (0..1000)
        .map(|_| random_tube_point(&mut rng, 1.0, 0.6, 1.8, 0.6))
        .collect();
    let l = lorentz_from_params([0.4, -0.1, 0.2], [0.3, 0.7, -0.2]);
    let factors = [
        (
            "Poincaré",
            ConformalMap::poincare(&l, RealFourVector::new(0.3, -0.2, 0.1, 0.4))?,
        ),
        ("dilatation", ConformalMap::dilatation(1.7)?),
        (
            "special conformal",
            ConformalMap::special(RealFourVector::new(0.08, -0.05, 0.03, 0.02)),
        ),
    ];
    for (name, g) in &factors {
        let worst = covariance_residual(g, &y, &probes)?;
        out.push(report(
            "conformal",
            &format!("coherent covariance U ψ_z = e^{{iθ}} ψ_w ({name}, 10³ probes)"),
            worst,
            1e-9,
        ));
    }

    // Phase expressions agree mod 2π.
    let mut worst: f64 = 0.0;
    for _ in 0..5000 {
        let z = random_tube_point(&mut rng, 1.5, 0.5, 2.0, 0.8);
        let lam = RealFourVector::new(
            0.2 * (rng.random::<f64>() - 0.5),
            0.2 * (rng.random::<f64>() - 0.5),
            0.2 * (rng.random::<f64>() - 0.5),
            0.2 * (rng.random::<f64>() - 0.5),
        );
        let (_, theta) = act_on_coherent(&ConformalMap::special(lam), &z)?;
        let alt = special_phase_alternative(&lam, &z)?;
        let d = (theta - alt).rem_euclid(2.0 * std::f64::consts::PI);
        worst = worst.max(d.min(2.0 * std::f64::consts::PI - d));
    }
    out.push(report("conformal", "two phase expressions agree mod 2π", worst, 1e-10));

    // Composition S_λ∘S_μ = S_{λ+μ}.
    let mut worst: f64 = 0.0;
    for _ in 0..2000 {
        let z = random_tube_point(&mut rng, 1.5, 0.5, 2.0, 0.8);
        let lam = RealFourVector::new(
            0.15 * (rng.random::<f64>() - 0.5),
            0.15 * (rng.random::<f64>() - 0.5),
            0.15 * (rng.random::<f64>() - 0.5),
            0.15 * (rng.random::<f64>() - 0.5),
        );
        let mu = RealFourVector::new(
            0.15 * (rng.random::<f64>() - 0.5),
            0.15 * (rng.random::<f64>() - 0.5),
            0.15 * (rng.random::<f64>() - 0.5),
            0.15 * (rng.random::<f64>() - 0.5),
        );
        let one = apply_point(
            &ConformalMap::special(lam),
            &apply_point(&ConformalMap::special(mu), &z)?,
        )?;
        let two = apply_point(&compose_special(&lam, &mu), &z)?;
        for a in 0..4 {
            worst = worst.max((one.x.0[a] - two.x.0[a]).abs());
            worst = worst.max((one.r.0[a] - two.r.0[a]).abs());
        }
    }
    out.push(report("conformal", "composition ν = λ + μ", worst, 1e-10));

    // Cross-ratio invariance under all factor types.
    let mut worst: f64 = 0.0;
    for (_, g) in &factors {
        for _ in 0..700 {
            let a = random_tube_point(&mut rng, 1.5, 0.5, 2.0, 0.8);
            let b = random_tube_point(&mut rng, 1.5, 0.5, 2.0, 0.8);
            let before = cross_ratio(&a, &b)?;
            let after = cross_ratio(&apply_point(g, &a)?, &apply_point(g, &b)?)?;
            worst = worst.max((before - after).norm() / before.norm().max(1e-12));
        }
    }
    out.push(report("conformal", "cross-ratio invariance", worst, 1e-9));
    Ok(out)
}

/// Reproducing property of the 4-D kernel by Monte Carlo at ≥ 20 pairs.
pub fn suite_reproducing(cfg: &VerifyConfig) -> Result<Vec<IdentityReport>> {
    let mut rng = substream(cfg.seed, "verify-reproducing", 0);
    let mut out = Vec::new();
    let mut worst_rel: f64 = 0.0;
    let mut worst_sigma: f64 = 0.0;
    let pairs = 20;
    for i in 0..pairs {
        let z = random_tube_point(&mut rng, 0.8, 0.7, 1.5, 0.5);
        let w = random_tube_point(&mut rng, 0.8, 0.7, 1.5, 0.5);
        let target = kernel4(&z, &w)?;
        let mc = McConfig::new(cfg.seed.wrapping_add(1000 + i), cfg.samples);
        let est = reproduce_mc(&z, |u| kernel4(u, &w).unwrap_or_default(), &[w], &mc)?;
        let dev = (est.estimate - target).norm();
        worst_rel = worst_rel.max(dev / target.norm());
        worst_sigma = worst_sigma.max(dev / est.std_err.max(1e-300));
    }
    out.push(report_mc(
        "reproducing",
        "∫K(z,ū)K(u,w̄)dμ = K(z,w̄), 20 pairs, relative error",
        worst_rel,
        0.05,
        0.0,
        cfg.samples * pairs,
    ));
    out.push(report(
        "reproducing",
        "estimates within 3σ of closed form",
        worst_sigma,
        3.0,
    ));
    Ok(out)
}

/// Fourier suite: cone integral, plane-wave identity, coherent round trip,
/// Parseval pairing.
pub fn suite_fourier(cfg: &VerifyConfig) -> Result<Vec<IdentityReport>> {
    let mut out = Vec::new();
    let samples = cfg.samples.max(200_000);

    // Cone integral against 8π/(ξ·ξ)².
    let xi = RealFourVector::new(1.5, 0.3, -0.2, 0.1);
    let target = cone_exponential_integral(&xi)?;
    let est = cone_integral_mc(
        |p| Complex64::new((-minkowski_inner(&xi, p)).exp(), 0.0),
        &xi.scale(0.8),
        &McConfig::new(cfg.seed, samples),
        "verify-cone",
    )?;
    out.push(report_mc(
        "fourier",
        "∫e^{−ξ·p} = 8π/(ξ·ξ)²",
        (est.estimate.re - target).abs() / target,
        0.02,
        est.std_err / target,
        est.samples,
    ));

    // Plane wave inverts to the kernel.
    let z = tube([0.2, 0.1, 0.0, -0.1], [1.0, 0.0, 0.2, 0.0]);
    let w = tube([-0.3, 0.3, 0.2, 0.0], [1.2, -0.1, 0.0, 0.3]);
    let target = kernel4(&z, &w)?;
    let est = inverse_ft_mc(
        plane_wave_hat(&w),
        &z,
        Some(z.r.add(&w.r)),
        &McConfig::new(cfg.seed.wrapping_add(1), samples),
    )?;
    out.push(report_mc(
        "fourier",
        "plane wave Ψ(p)=e^{ip·w̄} inverts to K(z,w̄)",
        (est.estimate - target).norm() / target.norm(),
        0.05,
        est.std_err / target.norm(),
        est.samples,
    ));

    // Coherent round trip.
    let target = coherent_wavefunction(&w, &z)?;
    let est = inverse_ft_mc(
        |p| coherent_ft(&w, p),
        &z,
        Some(z.r.add(&w.r)),
        &McConfig::new(cfg.seed.wrapping_add(2), samples),
    )?;
    out.push(report_mc(
        "fourier",
        "coherent transform round trip",
        (est.estimate - target).norm() / target.norm(),
        0.05,
        est.std_err / target.norm(),
        est.samples,
    ));

    // Parseval within 3 combined standard errors.
    let (est, exact) = parseval_coherent_mc(&z, &w, &McConfig::new(cfg.seed.wrapping_add(3), samples))?;
    let dev = (est.estimate - exact).norm();
    out.push(report_mc(
        "fourier",
        "momentum pairing reproduces ⟨ψ_z|ψ_w⟩ (3σ)",
        dev / est.std_err.max(1e-300),
        3.0,
        est.std_err,
        est.samples,
    ));
    Ok(out)
}

/// Measurement suite: normalization, additivity, collapse, orthogonality,
/// decoherence.
pub fn suite_measurement(cfg: &VerifyConfig) -> Result<Vec<IdentityReport>> {
    let mut out = Vec::new();
    let samples = cfg.samples.max(200_000);
    let z = tube([0.0; 4], [1.0, 0.0, 0.0, 0.0]);
    let w = tube([0.5, 0.2, 0.0, -0.1], [1.3, 0.0, 0.2, 0.0]);
    let state = DensityState::pure(PureState::new(
        vec![z, w],
        vec![Complex64::new(0.8, 0.1), Complex64::new(-0.2, 0.5)],
    )?);

    // Normalization over Γ.
    let p_all = povm_probability(&state, &Region::all(), &McConfig::new(cfg.seed, samples))?;
    out.push(report_mc(
        "measurement",
        "P(Γ) = 1",
        (p_all.estimate.re - 1.0).abs(),
        0.02,
        p_all.std_err,
        p_all.samples,
    ));

    // Additivity over a disjoint split of Γ.
    let mut left = BoxBounds::unbounded();
    left.x_max[0] = Some(0.1);
    let mut right = BoxBounds::unbounded();
    right.x_min[0] = Some(0.1);
    let pa = povm_probability(
        &state,
        &Region { boxes: vec![left] },
        &McConfig::new(cfg.seed.wrapping_add(1), samples),
    )?;
    let pb = povm_probability(
        &state,
        &Region { boxes: vec![right] },
        &McConfig::new(cfg.seed.wrapping_add(2), samples),
    )?;
    let sum_dev = (pa.estimate.re + pb.estimate.re - 1.0).abs();
    let combined = (pa.std_err + pb.std_err) * 3.0 + 0.02;
    out.push(report_mc(
        "measurement",
        "additivity P(A) + P(Γ\\A) = 1",
        sum_dev,
        combined,
        pa.std_err + pb.std_err,
        pa.samples + pb.samples,
    ));

    // Point-outcome collapse is exactly coherent.
    let collapsed = post_measurement_point(&w);
    let exact = collapsed.branches.len() == 1
        && collapsed.branches[0].state.foci.len() == 1
        && collapsed.branches[0].state.foci[0].x.0 == w.x.0
        && collapsed.branches[0].state.foci[0].r.0 == w.r.0
        && (purity(&collapsed)? - 1.0).abs() < 1e-12;
    out.push(report(
        "measurement",
        "point-outcome collapse returns the coherent state exactly",
        if exact { 0.0 } else { 1.0 },
        0.0,
    ));

    // Orthogonal state vanishes at the removed focus.
    let amp = overlap(&z, &w)?;
    let theta = PureState::new(vec![w, z], vec![Complex64::new(1.0, 0.0), -amp])?;
    let vanish = theta.wavefunction(&z)?.norm() / kernel4_diag(&z).sqrt();
    out.push(report(
        "measurement",
        "Gram-orthogonalized state vanishes at focus",
        vanish,
        1e-10,
    ));

    // Decoherence strictly reduces purity.
    let before = purity(&state)?;
    let after = purity(&decohere_unrecorded(
        &state,
        64,
        &McConfig::new(cfg.seed.wrapping_add(3), 0),
    )?)?;
    out.push(report(
        "measurement",
        "unrecorded measurement strictly reduces purity",
        after - before,
        -1e-6,
    ));

    // Transition probability symmetry and amplitude bound spot checks.
    let mut rng = substream(cfg.seed, "verify-measure", 0);
    let mut worst_sym: f64 = 0.0;
    let mut worst_bound: f64 = 0.0;
    for _ in 0..2000 {
        let a = random_tube_point(&mut rng, 1.5, 0.4, 2.0, 0.8);
        let b = random_tube_point(&mut rng, 1.5, 0.4, 2.0, 0.8);
        let pab = transition_probability_cross_ratio(&a, &b)?;
        let pba = transition_probability_cross_ratio(&b, &a)?;
        worst_sym = worst_sym.max((pab - pba).abs());
        let amp2 = density_diagonal(&state, &a)?;
        worst_bound = worst_bound.max(amp2 / kernel4_diag(&a) - 1.0);
    }
    out.push(report(
        "measurement",
        "transition symmetry p(w,z) = p(z,w)",
        worst_sym,
        1e-14,
    ));
    out.push(report(
        "measurement",
        "amplitude bound ρ(z,z̄) ≤ K(z,z̄)",
        worst_bound,
        1e-9,
    ));
    Ok(out)
}

/// Localization bound: scan, saturation, eighth-power scaling.
pub fn suite_localization(cfg: &VerifyConfig) -> Result<Vec<IdentityReport>> {
    let mut rng = substream(cfg.seed, "verify-localization", 0);
    let mut out = Vec::new();

    let foci: Vec<_> = (0..5)
        .map(|_| random_tube_point(&mut rng, 1.0, 0.6, 1.8, 0.6))
        .collect();
    let coeffs: Vec<_> = (0..5)
        .map(|_| Complex64::new(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5))
        .collect();
    let state = DensityState::pure(PureState::new(foci, coeffs)?);
    let points: Vec<_> = (0..10_000)
        .map(|_| random_tube_point(&mut rng, 2.0, 0.3, 3.0, 1.0))
        .collect();
    let reports = scan_bound(&state, &points, cfg.hbar)?;
    let max_ratio = reports.iter().map(|r| r.ratio).fold(0.0f64, f64::max);
    out.push(report(
        "localization",
        "density/bound ratio over 10⁴-point scan",
        max_ratio - 1.0,
        1e-9,
    ));

    let zc = tube([0.4, -0.1, 0.2, 0.0], [1.1, 0.0, 0.3, -0.2]);
    let coherent = DensityState::coherent(zc);
    let sat = scan_bound(&coherent, &[zc], cfg.hbar)?;
    out.push(report(
        "localization",
        "saturation at a coherent state's own focus",
        (sat[0].ratio - 1.0).abs(),
        1e-12,
    ));

    let mut worst: f64 = 0.0;
    for m in [0.2, 1.0, 5.0] {
        let b = density_bound_for_mass(m, cfg.hbar);
        let b2 = density_bound_for_mass(2.0 * m, cfg.hbar);
        worst = worst.max((b2 / b - 256.0).abs());
    }
    out.push(report("localization", "M → 2M scales the bound by 256", worst, 0.0));

    // Bound identity against the kernel diagonal.
    let mut worst: f64 = 0.0;
    for _ in 0..10_000 {
        let z = random_tube_point(&mut rng, 2.0, 0.3, 3.0, 1.2);
        let b = density_bound(&z, cfg.hbar);
        let k = kernel4_diag(&z);
        worst = worst.max((b - k).abs() / k);
    }
    out.push(report(
        "localization",
        "bound = K(z,z̄) at 10⁴ points",
        worst,
        1e-12,
    ));

    // Mass is Kelvin-consistent: M = √(p·p).
    let z = tube([0.0; 4], [2.0, 0.0, 0.0, 0.0]);
    out.push(report(
        "localization",
        "M = ħ/√(r·r) (= 1/2 at r = 2e₀)",
        (mass_of_point(&z, cfg.hbar) - 0.5 * cfg.hbar).abs(),
        1e-15,
    ));
    Ok(out)
}

/// Completeness of coherent projectors: ∫Ψ_z K(z,z̄) dμ matches the kernel.
pub fn suite_completeness(cfg: &VerifyConfig) -> Result<Vec<IdentityReport>> {
    let x = tube([0.2, 0.0, -0.1, 0.0], [1.0, 0.1, 0.0, 0.0]);
    let y = tube([-0.3, 0.2, 0.0, 0.1], [1.2, 0.0, -0.2, 0.0]);
    let samples = cfg.samples.max(200_000);
    let (est, target) =
        crate::states::completeness_check(&x, &y, &McConfig::new(cfg.seed, samples))?;
    let dev = (est.estimate - target).norm();
    Ok(vec![report_mc(
        "completeness",
        "∫ψ_z(x)ψ̄_z(ȳ)K(z,z̄)dμ_z = K(x,ȳ) (3σ + 5%)",
        dev,
        3.0 * est.std_err + 0.05 * target.norm(),
        est.std_err,
        est.samples,
    )])
}

/// All suite names, in run order.
pub const SUITES: [&str; 11] = [
    "kernel",
    "metric",
    "dynamics",
    "kelvin",
    "halfplane",
    "unitarity",
    "conformal",
    "reproducing",
    "fourier",
    "measurement",
    "localization",
];

/// Runs one named suite, `completeness`, or `all`.
pub fn run_suite(name: &str, cfg: &VerifyConfig) -> Result<Vec<IdentityReport>> {
    match name {
        "kernel" => suite_kernel(cfg),
        "metric" => suite_metric(cfg),
        "dynamics" => suite_dynamics(cfg),
        "kelvin" => suite_kelvin(cfg),
        "halfplane" => suite_halfplane(cfg),
        "unitarity" => suite_unitarity(cfg),
        "conformal" => suite_conformal(cfg),
        "reproducing" => suite_reproducing(cfg),
        "fourier" => suite_fourier(cfg),
        "measurement" => suite_measurement(cfg),
        "localization" => suite_localization(cfg),
        "completeness" => suite_completeness(cfg),
        "all" => {
            let mut out = Vec::new();
            for s in SUITES {
                out.extend(run_suite(s, cfg)?);
            }
            out.extend(suite_completeness(cfg)?);
            Ok(out)
        }
        other => Err(crate::error::Error::InvalidArgument(format!(
            "unknown suite '{other}'; expected one of {SUITES:?}, completeness, all"
        ))),
    }
}
