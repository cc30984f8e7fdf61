//! Four-vector algebra with signature (+,−,−,−), future-tube membership,
//! the Kelvin position–momentum inversion, the phase-space metric, and the
//! 2×2 matrix / Cayley realizations of tube points.

use nalgebra::{Matrix2, Matrix4};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::EPS_GAMMA;

/// A real four-vector, components indexed 0..3 with upper indices.
#[derive(Clone, Copy, Debug, PartialEq, Default, Serialize, Deserialize)]
#[serde(transparent)]
pub struct RealFourVector(pub [f64; 4]);

/// A complexified four-vector.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ComplexFourVector(pub [Complex64; 4]);

/// 4×4 real matrix used for g_ab, h_ab, k^ab and Lorentz maps.
pub type MetricTensor = Matrix4<f64>;

/// 2×2 complex matrix form Ẑ = z⁰Î + z¹σ̂_x + z²σ̂_y + z³σ̂_z of a point.
pub type TwoByTwoComplex = Matrix2<Complex64>;

impl RealFourVector {
    pub fn new(v0: f64, v1: f64, v2: f64, v3: f64) -> Self {
        RealFourVector([v0, v1, v2, v3])
    }

    pub fn zero() -> Self {
        RealFourVector([0.0; 4])
    }

    /// Squared Minkowski norm v·v.
    pub fn norm_sqr(&self) -> f64 {
        minkowski_inner(self, self)
    }

    /// Lowered components v_a (sign flip on the spatial part).
    pub fn lower(&self) -> [f64; 4] {
        [self.0[0], -self.0[1], -self.0[2], -self.0[3]]
    }

    pub fn scale(&self, c: f64) -> Self {
        RealFourVector([c * self.0[0], c * self.0[1], c * self.0[2], c * self.0[3]])
    }

    pub fn add(&self, o: &Self) -> Self {
        RealFourVector([
            self.0[0] + o.0[0],
            self.0[1] + o.0[1],
            self.0[2] + o.0[2],
            self.0[3] + o.0[3],
        ])
    }

    pub fn sub(&self, o: &Self) -> Self {
        RealFourVector([
            self.0[0] - o.0[0],
            self.0[1] - o.0[1],
            self.0[2] - o.0[2],
            self.0[3] - o.0[3],
        ])
    }

    pub fn to_complex(&self) -> ComplexFourVector {
        ComplexFourVector([
            Complex64::new(self.0[0], 0.0),
            Complex64::new(self.0[1], 0.0),
            Complex64::new(self.0[2], 0.0),
            Complex64::new(self.0[3], 0.0),
        ])
    }

    /// Applies a 4×4 matrix: (L v)^a = L^a_b v^b.
    pub fn transform(&self, l: &Matrix4<f64>) -> Self {
        let mut out = [0.0; 4];
        for (a, slot) in out.iter_mut().enumerate() {
            *slot = (0..4).map(|b| l[(a, b)] * self.0[b]).sum();
        }
        RealFourVector(out)
    }

    /// True when v·v > eps and v⁰ > 0.
    pub fn is_timelike_future(&self, eps: f64) -> bool {
        self.norm_sqr() > eps && self.0[0] > 0.0
    }
}

impl std::ops::Index<usize> for RealFourVector {
    type Output = f64;
    fn index(&self, i: usize) -> &f64 {
        &self.0[i]
    }
}

impl ComplexFourVector {
    pub fn from_re_im(x: &RealFourVector, minus_im: &RealFourVector) -> Self {
        // z = x − i r, stored componentwise.
        ComplexFourVector([
            Complex64::new(x.0[0], -minus_im.0[0]),
            Complex64::new(x.0[1], -minus_im.0[1]),
            Complex64::new(x.0[2], -minus_im.0[2]),
            Complex64::new(x.0[3], -minus_im.0[3]),
        ])
    }

    pub fn re(&self) -> RealFourVector {
        RealFourVector([self.0[0].re, self.0[1].re, self.0[2].re, self.0[3].re])
    }

    pub fn im(&self) -> RealFourVector {
        RealFourVector([self.0[0].im, self.0[1].im, self.0[2].im, self.0[3].im])
    }

    pub fn conj(&self) -> Self {
        ComplexFourVector([
            self.0[0].conj(),
            self.0[1].conj(),
            self.0[2].conj(),
            self.0[3].conj(),
        ])
    }

    pub fn sub(&self, o: &Self) -> Self {
        ComplexFourVector([
            self.0[0] - o.0[0],
            self.0[1] - o.0[1],
            self.0[2] - o.0[2],
            self.0[3] - o.0[3],
        ])
    }

    pub fn add(&self, o: &Self) -> Self {
        ComplexFourVector([
            self.0[0] + o.0[0],
            self.0[1] + o.0[1],
            self.0[2] + o.0[2],
            self.0[3] + o.0[3],
        ])
    }

    pub fn scale(&self, c: Complex64) -> Self {
        ComplexFourVector([c * self.0[0], c * self.0[1], c * self.0[2], c * self.0[3]])
    }

    /// Bilinear (not sesquilinear) Minkowski square z·z.
    pub fn norm_sqr_bilinear(&self) -> Complex64 {
        complex_inner(self, self)
    }

    /// Applies a real 4×4 matrix componentwise.
    pub fn transform(&self, l: &Matrix4<f64>) -> Self {
        let mut out = [Complex64::new(0.0, 0.0); 4];
        for (a, slot) in out.iter_mut().enumerate() {
            *slot = (0..4).map(|b| self.0[b] * l[(a, b)]).sum();
        }
        ComplexFourVector(out)
    }
}

impl std::ops::Index<usize> for ComplexFourVector {
    type Output = Complex64;
    fn index(&self, i: usize) -> &Complex64 {
        &self.0[i]
    }
}

/// g_ab a^a b^b with the fixed signature (+,−,−,−).
pub fn minkowski_inner(a: &RealFourVector, b: &RealFourVector) -> f64 {
    a.0[0] * b.0[0] - a.0[1] * b.0[1] - a.0[2] * b.0[2] - a.0[3] * b.0[3]
}

/// Bilinear extension of the inner product to complex four-vectors.
pub fn complex_inner(a: &ComplexFourVector, b: &ComplexFourVector) -> Complex64 {
    a.0[0] * b.0[0] - a.0[1] * b.0[1] - a.0[2] * b.0[2] - a.0[3] * b.0[3]
}

/// The base metric diag(+1,−1,−1,−1).
pub fn minkowski_metric() -> MetricTensor {
    Matrix4::from_diagonal(&nalgebra::Vector4::new(1.0, -1.0, -1.0, -1.0))
}

/// Causal classification of a real four-vector.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum VectorClass {
    TimelikeFuture,
    TimelikePast,
    NullFuture,
    NullPast,
    Spacelike,
    Zero,
}

/// Classifies by the sign of v·v and of v⁰. Vectors with every component
/// below 1e−14 in magnitude count as zero to avoid misreading round-off.
pub fn classify_vector(v: &RealFourVector) -> VectorClass {
    if v.0.iter().all(|c| c.abs() < 1e-14) {
        return VectorClass::Zero;
    }
    let vv = v.norm_sqr();
    if vv > 0.0 {
        if v.0[0] > 0.0 {
            VectorClass::TimelikeFuture
        } else {
            VectorClass::TimelikePast
        }
    } else if vv < 0.0 {
        VectorClass::Spacelike
    } else if v.0[0] > 0.0 {
        VectorClass::NullFuture
    } else {
        VectorClass::NullPast
    }
}

/// A point z = x − i r of the future tube Γ (r timelike future-pointing).
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct FutureTubePoint {
    pub x: RealFourVector,
    pub r: RealFourVector,
}

impl FutureTubePoint {
    /// Builds a tube point, insisting on strict interior membership:
    /// r·r > EPS_GAMMA and r⁰ > 0.
    pub fn new(x: RealFourVector, r: RealFourVector) -> Result<Self> {
        let rr = r.norm_sqr();
        if rr > EPS_GAMMA && r.0[0] > 0.0 {
            Ok(FutureTubePoint { x, r })
        } else {
            Err(Error::DegenerateVector { vv: rr })
        }
    }

    /// The complex coordinates z = x − i r.
    pub fn z(&self) -> ComplexFourVector {
        ComplexFourVector::from_re_im(&self.x, &self.r)
    }

    /// r·r, strictly positive on the tube.
    pub fn rr(&self) -> f64 {
        self.r.norm_sqr()
    }
}

/// Decomposes z = x − i r and returns the tube point when r is strictly
/// timelike future-pointing; `None` for boundary and exterior points.
pub fn is_in_future_tube(z: &ComplexFourVector) -> Option<FutureTubePoint> {
    let x = z.re();
    let r = z.im().scale(-1.0);
    FutureTubePoint::new(x, r).ok()
}

/// Kelvin inversion ħ v/(v·v): swaps the inverse-momentum and momentum
/// pictures and maps the open forward cone onto itself.
pub fn kelvin_map(v: &RealFourVector, hbar: f64) -> Result<RealFourVector> {
    let vv = v.norm_sqr();
    if vv <= 0.0 || v.0[0] <= 0.0 {
        return Err(Error::DegenerateVector { vv });
    }
    Ok(v.scale(hbar / vv))
}

/// The positive-definite phase-space metric h_ab = −(g_ab − 2 r_a r_b/r·r)/r·r
/// and its inverse k^ab = −r·r (g^ab − 2 r^a r^b/r·r).
pub fn phase_space_metric(r: &RealFourVector) -> Result<(MetricTensor, MetricTensor)> {
    let rr = r.norm_sqr();
    if rr <= 0.0 || r.0[0] <= 0.0 {
        return Err(Error::DegenerateVector { vv: rr });
    }
    let lo = r.lower();
    let mut h = Matrix4::zeros();
    let mut k = Matrix4::zeros();
    let g = [1.0, -1.0, -1.0, -1.0];
    for a in 0..4 {
        for b in 0..4 {
            let gab = if a == b { g[a] } else { 0.0 };
            h[(a, b)] = -(gab - 2.0 * lo[a] * lo[b] / rr) / rr;
            // The inverse has upper indices; g^ab = g_ab numerically.
            k[(a, b)] = -rr * (gab - 2.0 * r.0[a] * r.0[b] / rr);
        }
    }
    Ok((h, k))
}

/// Ẑ = z⁰Î + z¹σ̂_x + z²σ̂_y + z³σ̂_z.
pub fn to_matrix_form(z: &ComplexFourVector) -> TwoByTwoComplex {
    let (z0, z1, z2, z3) = (z.0[0], z.0[1], z.0[2], z.0[3]);
    let i = Complex64::new(0.0, 1.0);
    Matrix2::new(z0 + z3, z1 - i * z2, z1 + i * z2, z0 - z3)
}

/// Inverse of [`to_matrix_form`]: z⁰ = tr(Ẑ)/2 and z^k = tr(Ẑ σ̂_k)/2.
pub fn from_matrix_form(m: &TwoByTwoComplex) -> ComplexFourVector {
    let half = Complex64::new(0.5, 0.0);
    let i = Complex64::new(0.0, 1.0);
    ComplexFourVector([
        (m[(0, 0)] + m[(1, 1)]) * half,
        (m[(0, 1)] + m[(1, 0)]) * half,
        i * (m[(0, 1)] - m[(1, 0)]) * half,
        (m[(0, 0)] - m[(1, 1)]) * half,
    ])
}

/// Cayley transform W = (iÎ + Ẑ)(iÎ − Ẑ)⁻¹ taking Γ into the matrix ball
/// Î − W†W ≻ 0. The resolvent iÎ − Ẑ is invertible everywhere on Γ.
pub fn cayley_to_ball(z: &FutureTubePoint) -> Result<TwoByTwoComplex> {
    let zm = to_matrix_form(&z.z());
    let i = Complex64::new(0.0, 1.0);
    let id: TwoByTwoComplex = Matrix2::identity();
    let num = id.map(|e| e * i) + zm;
    let den = id.map(|e| e * i) - zm;
    let den_inv = den.try_inverse().ok_or(Error::SingularMap {
        context: "iI - Z is singular (point not in the tube)",
    })?;
    Ok(num * den_inv)
}

/// Strict positive-definiteness of a 2×2 Hermitian matrix.
pub fn hermitian2_positive_definite(m: &TwoByTwoComplex) -> bool {
    let d00 = m[(0, 0)].re;
    let det = (m[(0, 0)] * m[(1, 1)] - m[(0, 1)] * m[(1, 0)]).re;
    d00 > 0.0 && det > 0.0
}

/// Pure boost with rapidity vector η (direction = boost axis, |η| = rapidity).
pub fn boost_from_rapidity(eta: [f64; 3]) -> MetricTensor {
    let mag = (eta[0] * eta[0] + eta[1] * eta[1] + eta[2] * eta[2]).sqrt();
    if mag == 0.0 {
        return Matrix4::identity();
    }
    let n = [eta[0] / mag, eta[1] / mag, eta[2] / mag];
    let (ch, sh) = (mag.cosh(), mag.sinh());
    let mut l = Matrix4::identity();
    l[(0, 0)] = ch;
    for i in 0..3 {
        l[(0, i + 1)] = sh * n[i];
        l[(i + 1, 0)] = sh * n[i];
        for j in 0..3 {
            l[(i + 1, j + 1)] = (if i == j { 1.0 } else { 0.0 }) + (ch - 1.0) * n[i] * n[j];
        }
    }
    l
}

/// Spatial rotation from an axis-angle vector (Rodrigues formula).
pub fn rotation_from_axis_angle(aa: [f64; 3]) -> MetricTensor {
    let angle = (aa[0] * aa[0] + aa[1] * aa[1] + aa[2] * aa[2]).sqrt();
    if angle == 0.0 {
        return Matrix4::identity();
    }
    let n = [aa[0] / angle, aa[1] / angle, aa[2] / angle];
    let (c, s) = (angle.cos(), angle.sin());
    let mut l = Matrix4::identity();
    for i in 0..3 {
        for j in 0..3 {
            let eps: f64 = match (i, j) {
                (0, 1) => -n[2],
                (1, 0) => n[2],
                (0, 2) => n[1],
                (2, 0) => -n[1],
                (1, 2) => -n[0],
                (2, 1) => n[0],
                _ => 0.0,
            };
            l[(i + 1, j + 1)] =
                c * (if i == j { 1.0 } else { 0.0 }) + s * eps + (1.0 - c) * n[i] * n[j];
        }
    }
    l
}

/// Boost taking e₀ to the unit timelike vector u (u·u = 1, u⁰ > 0).
pub fn boost_to_frame(u: &RealFourVector) -> MetricTensor {
    let gamma = u.0[0];
    let mut l = Matrix4::identity();
    l[(0, 0)] = gamma;
    for i in 0..3 {
        l[(0, i + 1)] = u.0[i + 1];
        l[(i + 1, 0)] = u.0[i + 1];
        for j in 0..3 {
            l[(i + 1, j + 1)] =
                (if i == j { 1.0 } else { 0.0 }) + u.0[i + 1] * u.0[j + 1] / (1.0 + gamma);
        }
    }
    l
}

/// Inverse of a Lorentz matrix via the metric: L⁻¹ = g Lᵀ g.
pub fn lorentz_inverse(l: &MetricTensor) -> MetricTensor {
    let g = minkowski_metric();
    g * l.transpose() * g
}
