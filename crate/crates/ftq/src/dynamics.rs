//! Hamilton's equations in the symmetric form with explicit metric raising,
//! on the cotangent bundle (dx/ds = g^{ab} ∂H/∂p^b, dp/ds = −g^{ab} ∂H/∂x^b)
//! and on the future tube, where the analogous equations pick up the inverse
//! phase-space metric and a deliberate sign reversal:
//! ħ dx/ds = −k^{ab} ∂H/∂r^b, ħ dr/ds = k^{ab} ∂H/∂x^b.
//!
//! Three systems ship with analytic derivatives: the free particle
//! H = √(p·p), a charge in an external potential H = √((p−qA)·(p−qA)), and a
//! synchronized two-body system H = √(X·X + Y·Y − 2Φ(u)) whose interaction
//! depends on the invariant separation u = −ξ·ξ of the internal coordinate.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::minkowski::{kelvin_map, minkowski_inner, phase_space_metric, FutureTubePoint, RealFourVector};
use crate::EPS_GAMMA;

/// Radicand floor for the square-root Hamiltonians: below this the step
/// fails rather than taking a complex root.
const RADICAND_FLOOR: f64 = 1e-12;

/// A point of the cotangent bundle; momentum components are stored with the
/// index up.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CotangentPoint {
    pub x: RealFourVector,
    pub p: RealFourVector,
}

/// External potential A^a(x), components with the index up.
pub type PotentialFn = Arc<dyn Fn(&RealFourVector) -> RealFourVector + Send + Sync>;
/// Jacobian ∂A^d/∂x^b, indexed [d][b].
pub type PotentialJacFn = Arc<dyn Fn(&RealFourVector) -> [[f64; 4]; 4] + Send + Sync>;
/// Interaction Φ(u) of the invariant separation u > 0.
pub type ScalarFn = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

/// The built-in Hamiltonian systems.
#[derive(Clone)]
pub enum HamiltonianSpec {
    /// H = √(p·p); geodesics of Minkowski space.
    FreeParticle,
    /// H = √(π·π) with kinetic momentum π = p − qA(x).
    ChargedParticle {
        q: f64,
        potential: PotentialFn,
        /// Analytic ∂A^d/∂x^b when available; finite differences otherwise.
        jacobian: Option<PotentialJacFn>,
    },
    /// Synchronized pair with H = √(X·X + Y·Y − 2Φ(u)).
    TwoBody {
        phi: ScalarFn,
        /// Analytic Φ′ when available; finite differences otherwise.
        dphi: Option<ScalarFn>,
    },
}

impl HamiltonianSpec {
    /// Uniform magnetic field B along the 3-axis in the symmetric gauge
    /// A = (0, −(B/2)x², (B/2)x¹, 0).
    pub fn charged_uniform_b(q: f64, b: f64) -> Self {
        let half = 0.5 * b;
        HamiltonianSpec::ChargedParticle {
            q,
            potential: Arc::new(move |x: &RealFourVector| {
                RealFourVector::new(0.0, -half * x.0[2], half * x.0[1], 0.0)
            }),
            jacobian: Some(Arc::new(move |_| {
                let mut j = [[0.0; 4]; 4];
                j[1][2] = -half;
                j[2][1] = half;
                j
            })),
        }
    }

    /// Harmonic pair interaction Φ(u) = k·u.
    pub fn two_body_oscillator(k: f64) -> Self {
        HamiltonianSpec::TwoBody {
            phi: Arc::new(move |u| k * u),
            dphi: Some(Arc::new(move |_| k)),
        }
    }

    /// Coulomb-type pair interaction Φ(u) = −e₁e₂ u^{−1/2}.
    pub fn two_body_coulomb(e1e2: f64) -> Self {
        HamiltonianSpec::TwoBody {
            phi: Arc::new(move |u| -e1e2 / u.sqrt()),
            dphi: Some(Arc::new(move |u| 0.5 * e1e2 * u.powf(-1.5))),
        }
    }

    fn n_bodies(&self) -> usize {
        match self {
            HamiltonianSpec::TwoBody { .. } => 2,
            _ => 1,
        }
    }
}

/// Integration method. RK4 is the default; the tube leapfrog is a Strang
/// splitting of the x- and r-subsystems (second order).
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Method {
    Rk4,
    LeapfrogTube,
}

#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct IntegratorConfig {
    pub method: Method,
    pub steps: usize,
    pub s_max: f64,
    /// Tolerance used by conservation diagnostics.
    pub tol: f64,
}

impl IntegratorConfig {
    pub fn rk4(steps: usize, s_max: f64) -> Self {
        IntegratorConfig {
            method: Method::Rk4,
            steps,
            s_max,
            tol: 1e-8,
        }
    }
}

/// One trajectory sample: a single particle, a synchronized pair, or a
/// future-tube point.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub enum DynState {
    Single(CotangentPoint),
    Pair {
        first: CotangentPoint,
        second: CotangentPoint,
    },
    Tube(FutureTubePoint),
}

impl DynState {
    pub fn single(&self) -> Option<&CotangentPoint> {
        match self {
            DynState::Single(c) => Some(c),
            _ => None,
        }
    }

    pub fn pair(&self) -> Option<(&CotangentPoint, &CotangentPoint)> {
        match self {
            DynState::Pair { first, second } => Some((first, second)),
            _ => None,
        }
    }

    pub fn tube(&self) -> Option<&FutureTubePoint> {
        match self {
            DynState::Tube(z) => Some(z),
            _ => None,
        }
    }
}

/// An integrated trajectory with per-sample conserved-quantity log.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Trajectory {
    pub s: Vec<f64>,
    pub states: Vec<DynState>,
    /// H at each sample.
    pub h: Vec<f64>,
    /// P·Q at each sample for the two-body system, empty otherwise.
    pub extra: Vec<f64>,
}

impl Trajectory {
    pub fn len(&self) -> usize {
        self.s.len()
    }

    pub fn is_empty(&self) -> bool {
        self.s.is_empty()
    }

    /// CSV export: `s,x0..x3,p0..p3,H[,...]`, with the pair's second particle
    /// as `y0..y3,q0..q3` and the tube's fibre as `r0..r3`.
    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        match self.states.first() {
            Some(DynState::Single(_)) | None => {
                out.push_str("s,x0,x1,x2,x3,p0,p1,p2,p3,H\n");
            }
            Some(DynState::Pair { .. }) => {
                out.push_str("s,x0,x1,x2,x3,p0,p1,p2,p3,y0,y1,y2,y3,q0,q1,q2,q3,H,PdotQ\n");
            }
            Some(DynState::Tube(_)) => {
                out.push_str("s,x0,x1,x2,x3,r0,r1,r2,r3,H\n");
            }
        }
        for (i, st) in self.states.iter().enumerate() {
            let mut row = vec![self.s[i]];
            match st {
                DynState::Single(c) => {
                    row.extend_from_slice(&c.x.0);
                    row.extend_from_slice(&c.p.0);
                    row.push(self.h[i]);
                }
                DynState::Pair { first, second } => {
                    row.extend_from_slice(&first.x.0);
                    row.extend_from_slice(&first.p.0);
                    row.extend_from_slice(&second.x.0);
                    row.extend_from_slice(&second.p.0);
                    row.push(self.h[i]);
                    row.push(self.extra[i]);
                }
                DynState::Tube(z) => {
                    row.extend_from_slice(&z.x.0);
                    row.extend_from_slice(&z.r.0);
                    row.push(self.h[i]);
                }
            }
            let cells: Vec<String> = row.iter().map(|v| format!("{v:.17e}")).collect();
            out.push_str(&cells.join(","));
            out.push('\n');
        }
        out
    }
}

/// Flat ODE state helpers: Single/Tube use 8 slots, Pair uses 16.
fn pack_single(c: &CotangentPoint, y: &mut [f64]) {
    y[..4].copy_from_slice(&c.x.0);
    y[4..8].copy_from_slice(&c.p.0);
}

fn unpack_single(y: &[f64]) -> CotangentPoint {
    CotangentPoint {
        x: RealFourVector([y[0], y[1], y[2], y[3]]),
        p: RealFourVector([y[4], y[5], y[6], y[7]]),
    }
}

fn pack_pair(a: &CotangentPoint, b: &CotangentPoint, y: &mut [f64]) {
    y[..4].copy_from_slice(&a.x.0);
    y[4..8].copy_from_slice(&a.p.0);
    y[8..12].copy_from_slice(&b.x.0);
    y[12..16].copy_from_slice(&b.p.0);
}

fn unpack_pair(y: &[f64]) -> (CotangentPoint, CotangentPoint) {
    (unpack_single(&y[..8]), unpack_single(&y[8..16]))
}

/// Lowers an index: v_a = g_{ab} v^b.
fn lower(v: &RealFourVector) -> [f64; 4] {
    [v.0[0], -v.0[1], -v.0[2], -v.0[3]]
}

impl HamiltonianSpec {
    /// H at a state vector; the radicand is returned alongside so callers can
    /// distinguish a mass-shell violation from a mid-run domain exit.
    fn hamiltonian(&self, y: &[f64]) -> Result<(f64, f64)> {
        let radicand = match self {
            HamiltonianSpec::FreeParticle => {
                let c = unpack_single(y);
                c.p.norm_sqr()
            }
            HamiltonianSpec::ChargedParticle { q, potential, .. } => {
                let c = unpack_single(y);
                let a = potential(&c.x);
                let pi = c.p.sub(&a.scale(*q));
                pi.norm_sqr()
            }
            HamiltonianSpec::TwoBody { phi, .. } => {
                let (a, b) = unpack_pair(y);
                let u = separation_invariant(&a, &b)?;
                a.p.norm_sqr() + b.p.norm_sqr() - 2.0 * phi(u)
            }
        };
        if !radicand.is_finite() || radicand <= RADICAND_FLOOR {
            return Err(Error::MassShellViolation {
                h_squared: radicand,
            });
        }
        Ok((radicand.sqrt(), radicand))
    }

    fn dphi_value(&self, u: f64) -> f64 {
        match self {
            HamiltonianSpec::TwoBody { phi, dphi } => match dphi {
                Some(d) => d(u),
                None => {
                    let h = 1e-6 * u.abs().max(1.0);
                    (phi(u + h) - phi(u - h)) / (2.0 * h)
                }
            },
            _ => 0.0,
        }
    }

    fn potential_jacobian(&self, x: &RealFourVector) -> [[f64; 4]; 4] {
        match self {
            HamiltonianSpec::ChargedParticle {
                potential,
                jacobian,
                ..
            } => match jacobian {
                Some(j) => j(x),
                None => {
                    let mut out = [[0.0; 4]; 4];
                    for b in 0..4 {
                        let h = 1e-6 * x.0[b].abs().max(1.0);
                        let mut xp = *x;
                        let mut xm = *x;
                        xp.0[b] += h;
                        xm.0[b] -= h;
                        let ap = potential(&xp);
                        let am = potential(&xm);
                        for d in 0..4 {
                            out[d][b] = (ap.0[d] - am.0[d]) / (2.0 * h);
                        }
                    }
                    out
                }
            },
            _ => [[0.0; 4]; 4],
        }
    }

    /// Right-hand side of Hamilton's equations in the symmetric form.
    fn rhs(&self, s: f64, y: &[f64], dy: &mut [f64]) -> Result<()> {
        let (h, _) = self.hamiltonian(y).map_err(|e| match e {
            Error::MassShellViolation { .. } => Error::StepFailure {
                s,
                reason: "square-root Hamiltonian left its domain",
            },
            other => other,
        })?;
        match self {
            HamiltonianSpec::FreeParticle => {
                let c = unpack_single(y);
                for a in 0..4 {
                    dy[a] = c.p.0[a] / h;
                    dy[4 + a] = 0.0;
                }
            }
            HamiltonianSpec::ChargedParticle { q, potential, .. } => {
                let c = unpack_single(y);
                let pot = potential(&c.x);
                let pi = c.p.sub(&pot.scale(*q));
                let pi_lo = lower(&pi);
                let jac = self.potential_jacobian(&c.x);
                let g = [1.0, -1.0, -1.0, -1.0];
                for a in 0..4 {
                    dy[a] = pi.0[a] / h;
                    // dp^a/ds = (q/H) g^{ab} Σ_d π_d ∂A^d/∂x^b
                    let mut acc = 0.0;
                    for d in 0..4 {
                        acc += pi_lo[d] * jac[d][a];
                    }
                    dy[4 + a] = q / h * g[a] * acc;
                }
            }
            HamiltonianSpec::TwoBody { .. } => {
                let (ca, cb) = unpack_pair(y);
                let u = separation_invariant(&ca, &cb).map_err(|_| Error::StepFailure {
                    s,
                    reason: "total momentum left the timelike cone",
                })?;
                let xi = internal_coordinate(&ca.x, &cb.x, &ca.p, &cb.p).map_err(|_| {
                    Error::StepFailure {
                        s,
                        reason: "total momentum left the timelike cone",
                    }
                })?;
                let p_tot = ca.p.add(&cb.p);
                let q_rel = ca.x.sub(&cb.x).scale(0.5);
                let sigma = minkowski_inner(&q_rel, &p_tot) / p_tot.norm_sqr();
                let dphi = self.dphi_value(u);
                let pull = xi.scale(2.0 * dphi * sigma);
                let kick = xi.scale(dphi / h);
                for a in 0..4 {
                    dy[a] = (ca.p.0[a] - pull.0[a]) / h;
                    dy[8 + a] = (cb.p.0[a] - pull.0[a]) / h;
                    dy[4 + a] = -kick.0[a];
                    dy[12 + a] = kick.0[a];
                }
            }
        }
        Ok(())
    }
}

fn separation_invariant(a: &CotangentPoint, b: &CotangentPoint) -> Result<f64> {
    let xi = internal_coordinate(&a.x, &b.x, &a.p, &b.p)?;
    Ok(-xi.norm_sqr())
}

/// The internal coordinate ξ = q − (q·P/P·P)P with q = (x−y)/2 and P = X+Y;
/// by construction ξ·P = 0 and ξ is spacelike or zero.
pub fn internal_coordinate(
    x: &RealFourVector,
    y: &RealFourVector,
    big_x: &RealFourVector,
    big_y: &RealFourVector,
) -> Result<RealFourVector> {
    let p = big_x.add(big_y);
    let pp = p.norm_sqr();
    if pp <= 0.0 {
        return Err(Error::DegenerateVector { vv: pp });
    }
    let q = x.sub(y).scale(0.5);
    let sigma = minkowski_inner(&q, &p) / pp;
    Ok(q.sub(&p.scale(sigma)))
}

/// ξ(s) = α cos(ωs) + β sin(ωs) with ω² = k/(m₁² + m₂²): the internal motion
/// of the harmonic pair on the shell H = √(m₁² + m₂²).
pub fn two_body_oscillator_closed_form(
    alpha: &RealFourVector,
    beta: &RealFourVector,
    k: f64,
    m1: f64,
    m2: f64,
    s: f64,
) -> RealFourVector {
    let omega = (k / (m1 * m1 + m2 * m2)).sqrt();
    alpha
        .scale((omega * s).cos())
        .add(&beta.scale((omega * s).sin()))
}

fn rk4_step<F>(f: &F, s: f64, y: &[f64], h: f64) -> Result<Vec<f64>>
where
    F: Fn(f64, &[f64], &mut [f64]) -> Result<()>,
{
    let n = y.len();
    let mut k1 = vec![0.0; n];
    let mut k2 = vec![0.0; n];
    let mut k3 = vec![0.0; n];
    let mut k4 = vec![0.0; n];
    let mut tmp = vec![0.0; n];
    f(s, y, &mut k1)?;
    for i in 0..n {
        tmp[i] = y[i] + 0.5 * h * k1[i];
    }
    f(s + 0.5 * h, &tmp, &mut k2)?;
    for i in 0..n {
        tmp[i] = y[i] + 0.5 * h * k2[i];
    }
    f(s + 0.5 * h, &tmp, &mut k3)?;
    for i in 0..n {
        tmp[i] = y[i] + h * k3[i];
    }
    f(s + h, &tmp, &mut k4)?;
    let mut out = vec![0.0; n];
    for i in 0..n {
        out[i] = y[i] + h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
    }
    Ok(out)
}

/// Integrates Hamilton's equations on the cotangent bundle. `init` carries
/// one point for the single-particle systems, two for the pair.
pub fn integrate_cotangent(
    spec: &HamiltonianSpec,
    init: &[CotangentPoint],
    cfg: &IntegratorConfig,
) -> Result<Trajectory> {
    if init.len() != spec.n_bodies() {
        return Err(Error::InvalidArgument(format!(
            "system expects {} initial point(s), got {}",
            spec.n_bodies(),
            init.len()
        )));
    }
    if cfg.steps == 0 || cfg.s_max <= 0.0 {
        return Err(Error::InvalidArgument(
            "integrator needs steps ≥ 1 and s_max > 0".into(),
        ));
    }
    let dim = 8 * init.len();
    let mut y = vec![0.0; dim];
    match init {
        [c] => pack_single(c, &mut y),
        [a, b] => pack_pair(a, b, &mut y),
        _ => unreachable!(),
    }
    // A bad initial state is a mass-shell violation, not a step failure.
    let (h0, _) = spec.hamiltonian(&y)?;

    let two_body = spec.n_bodies() == 2;
    let ds = cfg.s_max / cfg.steps as f64;
    let mut traj = Trajectory {
        s: Vec::with_capacity(cfg.steps + 1),
        states: Vec::with_capacity(cfg.steps + 1),
        h: Vec::with_capacity(cfg.steps + 1),
        extra: Vec::new(),
    };
    let record = |traj: &mut Trajectory, s: f64, y: &[f64], h: f64| {
        traj.s.push(s);
        traj.h.push(h);
        if two_body {
            let (a, b) = unpack_pair(y);
            let p = a.p.add(&b.p);
            let q = a.p.sub(&b.p);
            traj.extra.push(minkowski_inner(&p, &q));
            traj.states.push(DynState::Pair {
                first: a,
                second: b,
            });
        } else {
            traj.states.push(DynState::Single(unpack_single(y)));
        }
    };
    record(&mut traj, 0.0, &y, h0);

    let f = |s: f64, y: &[f64], dy: &mut [f64]| spec.rhs(s, y, dy);
    for i in 0..cfg.steps {
        let s = i as f64 * ds;
        y = rk4_step(&f, s, &y, ds)?;
        let (h, _) = spec.hamiltonian(&y).map_err(|e| match e {
            Error::MassShellViolation { .. } => Error::StepFailure {
                s: s + ds,
                reason: "square-root Hamiltonian left its domain",
            },
            other => other,
        })?;
        record(&mut traj, (i + 1) as f64 * ds, &y, h);
    }
    Ok(traj)
}

/// Gradients of a scalar on Γ by scale-aware central differences.
fn tube_gradients<H>(h_fn: &H, z: &FutureTubePoint) -> ([f64; 4], [f64; 4])
where
    H: Fn(&FutureTubePoint) -> f64,
{
    let mut gx = [0.0; 4];
    let mut gr = [0.0; 4];
    let scale_x = 1e-6 * z.x.0.iter().fold(1.0f64, |m, v| m.max(v.abs()));
    let scale_r = 1e-6 * z.rr().sqrt();
    for a in 0..4 {
        let mut zp = *z;
        let mut zm = *z;
        zp.x.0[a] += scale_x;
        zm.x.0[a] -= scale_x;
        gx[a] = (h_fn(&zp) - h_fn(&zm)) / (2.0 * scale_x);
        let mut zp = *z;
        let mut zm = *z;
        zp.r.0[a] += scale_r;
        zm.r.0[a] -= scale_r;
        gr[a] = (h_fn(&zp) - h_fn(&zm)) / (2.0 * scale_r);
    }
    (gx, gr)
}

fn tube_rhs<H>(h_fn: &H, hbar: f64, z: &FutureTubePoint) -> Result<([f64; 4], [f64; 4])>
where
    H: Fn(&FutureTubePoint) -> f64,
{
    let (_, k) = phase_space_metric(&z.r)?;
    let (gx, gr) = tube_gradients(h_fn, z);
    let mut dx = [0.0; 4];
    let mut dr = [0.0; 4];
    for a in 0..4 {
        let mut accx = 0.0;
        let mut accr = 0.0;
        for b in 0..4 {
            accx += k[(a, b)] * gr[b];
            accr += k[(a, b)] * gx[b];
        }
        dx[a] = -accx / hbar;
        dr[a] = accr / hbar;
    }
    Ok((dx, dr))
}

/// Integrates the future-tube form of Hamilton's equations for a scalar H on
/// Γ. The trajectory halts with `LeftFutureTube` if r leaves the open cone.
pub fn integrate_future_tube<H>(
    h_fn: H,
    z0: &FutureTubePoint,
    hbar: f64,
    cfg: &IntegratorConfig,
) -> Result<Trajectory>
where
    H: Fn(&FutureTubePoint) -> f64,
{
    if cfg.steps == 0 || cfg.s_max <= 0.0 {
        return Err(Error::InvalidArgument(
            "integrator needs steps ≥ 1 and s_max > 0".into(),
        ));
    }
    let ds = cfg.s_max / cfg.steps as f64;
    let mut traj = Trajectory {
        s: Vec::with_capacity(cfg.steps + 1),
        states: Vec::with_capacity(cfg.steps + 1),
        h: Vec::with_capacity(cfg.steps + 1),
        extra: Vec::new(),
    };
    let mut z = *z0;
    traj.s.push(0.0);
    traj.h.push(h_fn(&z));
    traj.states.push(DynState::Tube(z));

    let guard = |z: &FutureTubePoint, s: f64| -> Result<()> {
        if z.r.norm_sqr() <= EPS_GAMMA || z.r.0[0] <= 0.0 {
            Err(Error::LeftFutureTube { s })
        } else {
            Ok(())
        }
    };

    for i in 0..cfg.steps {
        let s = i as f64 * ds;
        z = match cfg.method {
            Method::Rk4 => {
                let f = |s_sub: f64, y: &[f64], dy: &mut [f64]| -> Result<()> {
                    let zz = FutureTubePoint {
                        x: RealFourVector([y[0], y[1], y[2], y[3]]),
                        r: RealFourVector([y[4], y[5], y[6], y[7]]),
                    };
                    if zz.r.norm_sqr() <= EPS_GAMMA || zz.r.0[0] <= 0.0 {
                        return Err(Error::LeftFutureTube { s: s_sub });
                    }
                    let (dx, dr) = tube_rhs(&h_fn, hbar, &zz)?;
                    dy[..4].copy_from_slice(&dx);
                    dy[4..8].copy_from_slice(&dr);
                    Ok(())
                };
                let mut y = [0.0; 8];
                y[..4].copy_from_slice(&z.x.0);
                y[4..8].copy_from_slice(&z.r.0);
                let y1 = rk4_step(&|s, y: &[f64], dy: &mut [f64]| f(s, y, dy), s, &y, ds)?;
                FutureTubePoint {
                    x: RealFourVector([y1[0], y1[1], y1[2], y1[3]]),
                    r: RealFourVector([y1[4], y1[5], y1[6], y1[7]]),
                }
            }
            Method::LeapfrogTube => leapfrog_tube_step(&h_fn, hbar, &z, ds, s)?,
        };
        guard(&z, s + ds)?;
        traj.s.push((i + 1) as f64 * ds);
        traj.h.push(h_fn(&z));
        traj.states.push(DynState::Tube(z));
    }
    Ok(traj)
}

/// Strang splitting: half-kick in r (midpoint), full drift in x (midpoint),
/// half-kick in r.
fn leapfrog_tube_step<H>(
    h_fn: &H,
    hbar: f64,
    z: &FutureTubePoint,
    ds: f64,
    s: f64,
) -> Result<FutureTubePoint>
where
    H: Fn(&FutureTubePoint) -> f64,
{
    let kick = |z: &FutureTubePoint, dt: f64| -> Result<FutureTubePoint> {
        let (_, dr) = tube_rhs(h_fn, hbar, z)?;
        let mut mid = *z;
        for a in 0..4 {
            mid.r.0[a] += 0.5 * dt * dr[a];
        }
        if mid.r.norm_sqr() <= EPS_GAMMA || mid.r.0[0] <= 0.0 {
            return Err(Error::LeftFutureTube { s });
        }
        let (_, dr_mid) = tube_rhs(h_fn, hbar, &mid)?;
        let mut out = *z;
        for a in 0..4 {
            out.r.0[a] += dt * dr_mid[a];
        }
        Ok(out)
    };
    let drift = |z: &FutureTubePoint, dt: f64| -> Result<FutureTubePoint> {
        let (dx, _) = tube_rhs(h_fn, hbar, z)?;
        let mut mid = *z;
        for a in 0..4 {
            mid.x.0[a] += 0.5 * dt * dx[a];
        }
        let (dx_mid, _) = tube_rhs(h_fn, hbar, &mid)?;
        let mut out = *z;
        for a in 0..4 {
            out.x.0[a] += dt * dx_mid[a];
        }
        Ok(out)
    };
    let z1 = kick(z, 0.5 * ds)?;
    let z2 = drift(&z1, ds)?;
    kick(&z2, 0.5 * ds)
}

/// Per-sample conserved quantities and their maximum drifts.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ConservationReport {
    pub h: Vec<f64>,
    pub h_drift: f64,
    pub extra: Option<Vec<f64>>,
    pub extra_drift: Option<f64>,
}

/// Recomputes H (and P·Q for the pair system) along a trajectory and reports
/// maximum absolute drifts from the initial values.
pub fn conserved_quantities(traj: &Trajectory, spec: &HamiltonianSpec) -> Result<ConservationReport> {
    if traj.is_empty() {
        return Err(Error::InvalidArgument("empty trajectory".into()));
    }
    let mut h = Vec::with_capacity(traj.len());
    let mut extra = Vec::new();
    for st in &traj.states {
        match st {
            DynState::Single(c) => {
                let mut y = [0.0; 8];
                pack_single(c, &mut y);
                h.push(spec.hamiltonian(&y)?.0);
            }
            DynState::Pair { first, second } => {
                let mut y = [0.0; 16];
                pack_pair(first, second, &mut y);
                h.push(spec.hamiltonian(&y)?.0);
                let p = first.p.add(&second.p);
                let q = first.p.sub(&second.p);
                extra.push(minkowski_inner(&p, &q));
            }
            DynState::Tube(_) => {
                return Err(Error::InvalidArgument(
                    "tube trajectories carry H directly; see Trajectory::h".into(),
                ))
            }
        }
    }
    let drift = |v: &[f64]| {
        v.iter()
            .map(|x| (x - v[0]).abs())
            .fold(0.0f64, f64::max)
    };
    let h_drift = drift(&h);
    let (extra_out, extra_drift) = if extra.is_empty() {
        (None, None)
    } else {
        let d = drift(&extra);
        (Some(extra), Some(d))
    };
    Ok(ConservationReport {
        h,
        h_drift,
        extra: extra_out,
        extra_drift,
    })
}

/// Closed-form helix for the uniform-field charge (symmetric gauge), given
/// kinetic momentum π(0) and position x(0). Returns (x(s), canonical p(s)).
pub fn charged_helix_closed_form(
    x0: &RealFourVector,
    pi0: &RealFourVector,
    q: f64,
    b: f64,
    s: f64,
) -> (RealFourVector, RealFourVector) {
    let h = pi0.norm_sqr().sqrt();
    let omega = q * b / h;
    // π¹+iπ² rotates clockwise: w(s) = w₀ e^{−iΩs}.
    let (w0_re, w0_im) = (pi0.0[1], pi0.0[2]);
    let (c, sn) = ((omega * s).cos(), (omega * s).sin());
    let pi1 = w0_re * c + w0_im * sn;
    let pi2 = -w0_re * sn + w0_im * c;
    // x¹+ix² = z₀ + (i/(qB)) w₀ (e^{−iΩs} − 1).
    let ew_re = w0_re * c + w0_im * sn - w0_re;
    let ew_im = -w0_re * sn + w0_im * c - w0_im;
    let x1 = x0.0[1] - ew_im / (q * b);
    let x2 = x0.0[2] + ew_re / (q * b);
    let x = RealFourVector::new(
        x0.0[0] + pi0.0[0] / h * s,
        x1,
        x2,
        x0.0[3] + pi0.0[3] / h * s,
    );
    // Canonical p = π + qA(x) in the symmetric gauge.
    let p = RealFourVector::new(
        pi0.0[0],
        pi1 - 0.5 * q * b * x.0[2],
        pi2 + 0.5 * q * b * x.0[1],
        pi0.0[3],
    );
    (x, p)
}

/// Initial data putting the harmonic pair on the H = √(m₁²+m₂²) shell with
/// ξ(0) = α and ξ̇(0) = ωβ, in the rest frame of P.
pub fn oscillator_initial_data(
    alpha: &RealFourVector,
    beta: &RealFourVector,
    k: f64,
    m1: f64,
    m2: f64,
) -> (CotangentPoint, CotangentPoint) {
    let h2 = m1 * m1 + m2 * m2;
    let omega = (k / h2).sqrt();
    let a2 = -alpha.norm_sqr();
    let b2 = -beta.norm_sqr();
    let p0 = (2.0 * h2 + 4.0 * k * (a2 + b2)).sqrt();
    let hw = h2.sqrt() * omega;
    let big_x = RealFourVector::new(0.5 * p0, hw * beta.0[1], hw * beta.0[2], hw * beta.0[3]);
    let big_y = RealFourVector::new(0.5 * p0, -hw * beta.0[1], -hw * beta.0[2], -hw * beta.0[3]);
    (
        CotangentPoint { x: *alpha, p: big_x },
        CotangentPoint {
            x: alpha.scale(-1.0),
            p: big_y,
        },
    )
}

/// Pushes a cotangent free-particle state through the phase-space
/// correspondence r = ħp/(p·p).
pub fn cotangent_to_tube(c: &CotangentPoint, hbar: f64) -> Result<FutureTubePoint> {
    let r = kelvin_map(&c.p, hbar)?;
    FutureTubePoint::new(c.x, r)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cfg(steps: usize, s_max: f64) -> IntegratorConfig {
        IntegratorConfig::rk4(steps, s_max)
    }

    #[test]
    fn free_particle_matches_geodesic() {
        let m = 2.0;
        let init = CotangentPoint {
            x: RealFourVector::zero(),
            p: RealFourVector::new(m, 0.0, 0.0, 0.0),
        };
        let traj = integrate_cotangent(&HamiltonianSpec::FreeParticle, &[init], &cfg(10_000, 10.0 / m)).unwrap();
        for (i, st) in traj.states.iter().enumerate() {
            let c = st.single().unwrap();
            let s = traj.s[i];
            assert!((c.x.0[0] - s).abs() <= 1e-9 * s.max(1.0));
            for k in 1..4 {
                assert!(c.x.0[k].abs() < 1e-12);
            }
            assert_eq!(c.p, init.p);
        }
    }

    #[test]
    fn free_particle_boosted_geodesic() {
        let p = RealFourVector::new(1.25, 0.75, 0.0, 0.0); // p·p = 1
        let init = CotangentPoint {
            x: RealFourVector::new(0.1, -0.2, 0.3, 0.0),
            p,
        };
        let traj = integrate_cotangent(&HamiltonianSpec::FreeParticle, &[init], &cfg(10_000, 10.0)).unwrap();
        let m = p.norm_sqr().sqrt();
        let last = traj.states.last().unwrap().single().unwrap();
        let s = *traj.s.last().unwrap();
        for a in 0..4 {
            let expect = init.x.0[a] + p.0[a] / m * s;
            assert!((last.x.0[a] - expect).abs() < 1e-9 * expect.abs().max(1.0));
        }
    }

    #[test]
    fn spacelike_momentum_is_rejected() {
        let init = CotangentPoint {
            x: RealFourVector::zero(),
            p: RealFourVector::new(0.1, 1.0, 0.0, 0.0),
        };
        let err = integrate_cotangent(&HamiltonianSpec::FreeParticle, &[init], &cfg(10, 1.0)).unwrap_err();
        assert!(matches!(err, Error::MassShellViolation { .. }));
    }

    #[test]
    fn charged_particle_tracks_helix_for_one_period() {
        let (q, b, m, v) = (1.0f64, 1.0f64, 1.0f64, 0.5f64);
        let pi0 = RealFourVector::new(m * (1.0 + v * v).sqrt(), m * v, 0.0, 0.0);
        let x0 = RealFourVector::zero();
        let init = CotangentPoint { x: x0, p: pi0 }; // A(0) = 0, so p(0) = π(0)
        let period = 2.0 * std::f64::consts::PI * m / (q * b);
        let spec = HamiltonianSpec::charged_uniform_b(q, b);
        let traj = integrate_cotangent(&spec, &[init], &cfg(10_000, period)).unwrap();
        for (i, st) in traj.states.iter().enumerate() {
            let c = st.single().unwrap();
            let (x_exact, p_exact) = charged_helix_closed_form(&x0, &pi0, q, b, traj.s[i]);
            for a in 0..4 {
                assert!(
                    (c.x.0[a] - x_exact.0[a]).abs() < 1e-6,
                    "x^{a} at step {i}: {} vs {}",
                    c.x.0[a],
                    x_exact.0[a]
                );
                assert!((c.p.0[a] - p_exact.0[a]).abs() < 1e-6);
            }
        }
        // One full period returns to the start.
        let last = traj.states.last().unwrap().single().unwrap();
        assert!(last.x.0[1].abs() < 1e-6 && last.x.0[2].abs() < 1e-6);
    }

    #[test]
    fn rk4_halving_reduces_error_sixteenfold() {
        let (q, b, m, v) = (1.0f64, 1.0f64, 1.0f64, 0.5f64);
        let pi0 = RealFourVector::new(m * (1.0 + v * v).sqrt(), m * v, 0.0, 0.0);
        let init = CotangentPoint {
            x: RealFourVector::zero(),
            p: pi0,
        };
        let period = 2.0 * std::f64::consts::PI * m / (q * b);
        let spec = HamiltonianSpec::charged_uniform_b(q, b);
        let err_at = |steps: usize| -> f64 {
            let traj = integrate_cotangent(&spec, &[init], &cfg(steps, period)).unwrap();
            let last = traj.states.last().unwrap().single().unwrap();
            let (x_exact, _) = charged_helix_closed_form(&RealFourVector::zero(), &pi0, q, b, period);
            (0..4)
                .map(|a| (last.x.0[a] - x_exact.0[a]).abs())
                .fold(0.0f64, f64::max)
        };
        let ratio = err_at(100) / err_at(200);
        assert!(
            (12.0..=20.0).contains(&ratio),
            "RK4 order ratio {ratio} outside [12, 20]"
        );
    }

    #[test]
    fn lorentz_force_residual_vanishes_at_integrator_order() {
        let (q, b) = (0.8, 1.3);
        let pi0 = RealFourVector::new((1.0f64 + 0.09).sqrt(), 0.3, 0.0, 0.0);
        let init = CotangentPoint {
            x: RealFourVector::zero(),
            p: pi0,
        };
        let spec = HamiltonianSpec::charged_uniform_b(q, b);
        let traj = integrate_cotangent(&spec, &[init], &cfg(4000, 4.0)).unwrap();
        let ds = traj.s[1] - traj.s[0];
        let h = pi0.norm_sqr().sqrt();
        // m ẍ^a = q F^a_c ẋ^c with F¹₂ = B, F²₁ = −B (others zero).
        for i in 1..traj.len() - 1 {
            let xm = traj.states[i - 1].single().unwrap().x;
            let x0 = traj.states[i].single().unwrap().x;
            let xp = traj.states[i + 1].single().unwrap().x;
            for a in 0..4 {
                let acc = (xp.0[a] - 2.0 * x0.0[a] + xm.0[a]) / (ds * ds);
                let vel1 = (xp.0[1] - xm.0[1]) / (2.0 * ds);
                let vel2 = (xp.0[2] - xm.0[2]) / (2.0 * ds);
                let force = match a {
                    1 => q * b * vel2,
                    2 => -q * b * vel1,
                    _ => 0.0,
                };
                assert!(
                    (h * acc - force).abs() < 1e-5,
                    "residual at sample {i}, component {a}"
                );
            }
        }
    }

    #[test]
    fn internal_coordinate_examples() {
        let m = RealFourVector::new(1.0, 0.0, 0.0, 0.0);
        let xi = internal_coordinate(
            &RealFourVector::new(0.0, 2.0, 0.0, 0.0),
            &RealFourVector::zero(),
            &m,
            &m,
        )
        .unwrap();
        assert_eq!(xi, RealFourVector::new(0.0, 1.0, 0.0, 0.0));

        // q parallel to P projects to zero.
        let p = RealFourVector::new(2.0, 0.4, 0.0, 0.0);
        let xi = internal_coordinate(&p.scale(3.0), &p.scale(1.0), &p, &p).unwrap();
        for a in 0..4 {
            assert!(xi.0[a].abs() < 1e-12);
        }

        // Generic inputs stay orthogonal to P.
        let x = RealFourVector::new(0.3, -1.2, 0.7, 2.0);
        let y = RealFourVector::new(-0.4, 0.9, 0.1, -0.5);
        let big_x = RealFourVector::new(2.0, 0.3, -0.2, 0.5);
        let big_y = RealFourVector::new(1.5, -0.1, 0.4, -0.3);
        let xi = internal_coordinate(&x, &y, &big_x, &big_y).unwrap();
        let p = big_x.add(&big_y);
        assert!(minkowski_inner(&xi, &p).abs() < 1e-12);

        // Spacelike (or zero) always.
        assert!(xi.norm_sqr() <= 0.0);
    }

    #[test]
    fn closed_form_satisfies_harmonic_identity() {
        let alpha = RealFourVector::new(0.0, 0.7, 0.0, 0.0);
        let beta = RealFourVector::new(0.0, 0.0, -0.4, 0.0);
        let (k, m1, m2) = (1.0f64, 1.0f64, 1.0f64);
        let omega2 = k / (m1 * m1 + m2 * m2);
        assert!((omega2.sqrt() - 1.0 / 2.0f64.sqrt()).abs() < 1e-15);
        let h = 1e-4;
        for &s in &[0.0, 0.3, 1.7, 4.0] {
            let xm = two_body_oscillator_closed_form(&alpha, &beta, k, m1, m2, s - h);
            let x0 = two_body_oscillator_closed_form(&alpha, &beta, k, m1, m2, s);
            let xp = two_body_oscillator_closed_form(&alpha, &beta, k, m1, m2, s + h);
            for a in 0..4 {
                let acc = (xp.0[a] - 2.0 * x0.0[a] + xm.0[a]) / (h * h);
                assert!((acc + omega2 * x0.0[a]).abs() < 1e-6);
            }
        }
        assert_eq!(
            two_body_oscillator_closed_form(&alpha, &beta, k, m1, m2, 0.0),
            alpha
        );
    }

    #[test]
    fn two_body_oscillator_matches_closed_form_over_one_period() {
        let alpha = RealFourVector::new(0.0, 0.5, 0.0, 0.0);
        let beta = RealFourVector::new(0.0, 0.0, 0.3, 0.0);
        let (k, m) = (1.0, 1.0);
        let (c1, c2) = oscillator_initial_data(&alpha, &beta, k, m, m);
        let omega = (k / (2.0 * m * m)).sqrt();
        let period = 2.0 * std::f64::consts::PI / omega;
        let spec = HamiltonianSpec::two_body_oscillator(k);
        let traj = integrate_cotangent(&spec, &[c1, c2], &cfg(10_000, period)).unwrap();

        for (i, st) in traj.states.iter().enumerate() {
            let (a, b) = st.pair().unwrap();
            let xi = internal_coordinate(&a.x, &b.x, &a.p, &b.p).unwrap();
            let exact = two_body_oscillator_closed_form(&alpha, &beta, k, m, m, traj.s[i]);
            for c in 0..4 {
                assert!(
                    (xi.0[c] - exact.0[c]).abs() < 1e-6,
                    "ξ^{c} at step {i}: {} vs {}",
                    xi.0[c],
                    exact.0[c]
                );
            }
            // ξ ⊥ P along the whole trajectory.
            let p = a.p.add(&b.p);
            assert!(minkowski_inner(&xi, &p).abs() < 1e-10);
        }

        let report = conserved_quantities(&traj, &spec).unwrap();
        assert!((report.h[0] - (2.0f64).sqrt()).abs() < 1e-12);
        assert!(report.h_drift / report.h[0] <= 1e-8, "H drift {}", report.h_drift);
        assert!(report.extra_drift.unwrap() <= 1e-8);
    }

    #[test]
    fn tube_free_particle_and_kelvin_conjugacy() {
        let hbar = 1.0;
        let p = RealFourVector::new(1.25, 0.75, 0.0, 0.0);
        let m = p.norm_sqr().sqrt();
        let init = CotangentPoint {
            x: RealFourVector::new(0.2, 0.1, -0.3, 0.4),
            p,
        };
        let z0 = cotangent_to_tube(&init, hbar).unwrap();
        let h_free = move |z: &FutureTubePoint| hbar / z.rr().sqrt();
        let c = IntegratorConfig::rk4(2000, 5.0);
        let tube = integrate_future_tube(h_free, &z0, hbar, &c).unwrap();
        let cot = integrate_cotangent(&HamiltonianSpec::FreeParticle, &[init], &c).unwrap();
        for i in 0..tube.len() {
            let zt = tube.states[i].tube().unwrap();
            let ct = cot.states[i].single().unwrap();
            let mapped = cotangent_to_tube(ct, hbar).unwrap();
            for a in 0..4 {
                assert!((zt.x.0[a] - mapped.x.0[a]).abs() < 1e-8, "x mismatch at {i}");
                assert!((zt.r.0[a] - mapped.r.0[a]).abs() < 1e-8, "r mismatch at {i}");
            }
        }
        // Velocity matches p/m, confirming the sign reversal is implemented
        // with the stated orientation.
        let z_end = tube.states.last().unwrap().tube().unwrap();
        let s_end = *tube.s.last().unwrap();
        for a in 0..4 {
            let expect = z0.x.0[a] + p.0[a] / m * s_end;
            assert!((z_end.x.0[a] - expect).abs() < 1e-8);
        }
    }

    #[test]
    fn tube_x_independent_hamiltonian_freezes_r() {
        let h_fn = |z: &FutureTubePoint| z.rr().powi(2) + 3.0;
        let z0 = FutureTubePoint::new(
            RealFourVector::zero(),
            RealFourVector::new(1.0, 0.3, -0.2, 0.1),
        )
        .unwrap();
        let traj = integrate_future_tube(h_fn, &z0, 1.0, &IntegratorConfig::rk4(500, 2.0)).unwrap();
        for st in &traj.states {
            let z = st.tube().unwrap();
            for a in 0..4 {
                assert!((z.r.0[a] - z0.r.0[a]).abs() < 1e-10);
            }
        }
        // x does evolve.
        let z_end = traj.states.last().unwrap().tube().unwrap();
        assert!((z_end.x.0[0] - z0.x.0[0]).abs() > 1e-3);
    }

    #[test]
    fn tube_leapfrog_agrees_with_rk4_on_free_particle() {
        let hbar = 1.0;
        let z0 = FutureTubePoint::new(
            RealFourVector::zero(),
            RealFourVector::new(1.0, 0.0, 0.4, 0.0),
        )
        .unwrap();
        let h_free = move |z: &FutureTubePoint| hbar / z.rr().sqrt();
        let mut c = IntegratorConfig::rk4(400, 3.0);
        let rk = integrate_future_tube(h_free, &z0, hbar, &c).unwrap();
        c.method = Method::LeapfrogTube;
        let lf = integrate_future_tube(h_free, &z0, hbar, &c).unwrap();
        let a = rk.states.last().unwrap().tube().unwrap();
        let b = lf.states.last().unwrap().tube().unwrap();
        for i in 0..4 {
            assert!((a.x.0[i] - b.x.0[i]).abs() < 1e-5);
            assert!((a.r.0[i] - b.r.0[i]).abs() < 1e-5);
        }
    }

    #[test]
    fn driven_tube_hamiltonian_exits_through_boundary() {
        // H = −x⁰/(r·r) gives ṙ⁰ = −1/ħ exactly for axial r, so the cone
        // boundary is reached at s = ħ r⁰(0).
        let h_fn = |z: &FutureTubePoint| -z.x.0[0] / z.rr();
        let z0 = FutureTubePoint::new(
            RealFourVector::zero(),
            RealFourVector::new(0.5, 0.0, 0.0, 0.0),
        )
        .unwrap();
        let err = integrate_future_tube(h_fn, &z0, 1.0, &IntegratorConfig::rk4(4000, 10.0)).unwrap_err();
        assert!(matches!(err, Error::LeftFutureTube { .. }));
    }

    #[test]
    fn coulomb_head_on_collision_fails_the_step() {
        // Attractive pair (Φ = −1/√u) on a radial collision course: u → 0 in
        // finite s and the interaction singularity destroys the radicand.
        let spec = HamiltonianSpec::two_body_coulomb(1.0);
        let alpha = RealFourVector::new(0.0, 0.1, 0.0, 0.0);
        let p0 = 3.0;
        let infall = 2.0;
        let c1 = CotangentPoint {
            x: alpha,
            p: RealFourVector::new(0.5 * p0, -infall * alpha.0[1], 0.0, 0.0),
        };
        let c2 = CotangentPoint {
            x: alpha.scale(-1.0),
            p: RealFourVector::new(0.5 * p0, infall * alpha.0[1], 0.0, 0.0),
        };
        let err = integrate_cotangent(&spec, &[c1, c2], &cfg(20_000, 20.0)).unwrap_err();
        assert!(matches!(err, Error::StepFailure { .. }));
    }

    #[test]
    fn trajectory_csv_has_expected_shape() {
        let init = CotangentPoint {
            x: RealFourVector::zero(),
            p: RealFourVector::new(1.0, 0.0, 0.0, 0.0),
        };
        let traj = integrate_cotangent(&HamiltonianSpec::FreeParticle, &[init], &cfg(4, 1.0)).unwrap();
        let csv = traj.to_csv();
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines.len(), 6);
        assert_eq!(lines[0], "s,x0,x1,x2,x3,p0,p1,p2,p3,H");
        assert_eq!(lines[1].split(',').count(), 10);
    }
}
