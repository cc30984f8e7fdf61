//! The conformal group action on the future tube: Poincaré maps, dilatations,
//! special conformal transformations, and words in these generators, together
//! with the induced unitary action on wavefunctions and its effect on
//! coherent states (focus relocation plus a pure phase).

use nalgebra::Matrix4;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::bergman::{kernel4, kernel4_diag};
use crate::error::{Error, Result};
use crate::minkowski::{
    boost_from_rapidity, complex_inner, lorentz_inverse, minkowski_metric,
    rotation_from_axis_angle, ComplexFourVector, FutureTubePoint, MetricTensor, RealFourVector,
};

/// Relative floor for special-conformal denominators; below it the point is
/// treated as having been carried onto the boundary.
pub const DENOM_FLOOR: f64 = 1e-10;

/// A finite word in the generators of the tube-preserving conformal group.
/// `Word` composes left-to-right as functions: the rightmost factor acts on a
/// point first.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ConformalMap {
    Poincare {
        /// Proper orthochronous Lorentz matrix, row-major.
        lorentz: [[f64; 4]; 4],
        translation: RealFourVector,
    },
    Dilatation {
        /// Scale factor Λ > 0.
        lambda: f64,
    },
    SpecialConformal {
        /// Real parameter vector of z ↦ (z + z²λ)/(1 + 2λ·z + λ²z²).
        lambda: RealFourVector,
    },
    Word {
        factors: Vec<ConformalMap>,
    },
}

/// Lorentz matrix from row-major storage.
pub fn lorentz_matrix(rows: &[[f64; 4]; 4]) -> MetricTensor {
    Matrix4::from_fn(|i, j| rows[i][j])
}

fn lorentz_rows(l: &MetricTensor) -> [[f64; 4]; 4] {
    let mut rows = [[0.0; 4]; 4];
    for (i, row) in rows.iter_mut().enumerate() {
        for (j, v) in row.iter_mut().enumerate() {
            *v = l[(i, j)];
        }
    }
    rows
}

/// Checks Λᵀ g Λ = g, det Λ = +1, Λ⁰₀ ≥ 1 within `tol`.
pub fn is_proper_orthochronous(l: &MetricTensor, tol: f64) -> bool {
    let g = minkowski_metric();
    let res = l.transpose() * g * l - g;
    res.amax() <= tol && (l.determinant() - 1.0).abs() <= tol && l[(0, 0)] >= 1.0 - tol
}

/// Builds Λ = B(η) R(axis·angle) from a boost rapidity vector and an
/// axis-angle rotation vector.
pub fn lorentz_from_params(rapidity: [f64; 3], axis_angle: [f64; 3]) -> MetricTensor {
    boost_from_rapidity(rapidity) * rotation_from_axis_angle(axis_angle)
}

impl ConformalMap {
    pub fn poincare(l: &MetricTensor, translation: RealFourVector) -> Result<Self> {
        if !is_proper_orthochronous(l, 1e-9) {
            return Err(Error::InvalidArgument(
                "Lorentz factor must be proper orthochronous".into(),
            ));
        }
        Ok(ConformalMap::Poincare {
            lorentz: lorentz_rows(l),
            translation,
        })
    }

    pub fn translation(b: RealFourVector) -> Self {
        ConformalMap::Poincare {
            lorentz: lorentz_rows(&Matrix4::identity()),
            translation: b,
        }
    }

    pub fn dilatation(lambda: f64) -> Result<Self> {
        if !(lambda > 0.0) || !lambda.is_finite() {
            return Err(Error::InvalidArgument(format!(
                "dilatation factor must be positive, got {lambda}"
            )));
        }
        Ok(ConformalMap::Dilatation { lambda })
    }

    pub fn special(lambda: RealFourVector) -> Self {
        ConformalMap::SpecialConformal { lambda }
    }

    /// The inverse word.
    pub fn inverse(&self) -> Self {
        match self {
            ConformalMap::Poincare {
                lorentz,
                translation,
            } => {
                let li = lorentz_inverse(&lorentz_matrix(lorentz));
                let tb = translation.scale(-1.0).transform(&li);
                ConformalMap::Poincare {
                    lorentz: lorentz_rows(&li),
                    translation: tb,
                }
            }
            ConformalMap::Dilatation { lambda } => ConformalMap::Dilatation {
                lambda: 1.0 / lambda,
            },
            ConformalMap::SpecialConformal { lambda } => ConformalMap::SpecialConformal {
                lambda: lambda.scale(-1.0),
            },
            ConformalMap::Word { factors } => ConformalMap::Word {
                factors: factors.iter().rev().map(|f| f.inverse()).collect(),
            },
        }
    }
}

/// Composition of two special conformal maps: S_λ ∘ S_μ = S_{λ+μ}.
pub fn compose_special(lambda: &RealFourVector, mu: &RealFourVector) -> ConformalMap {
    ConformalMap::SpecialConformal {
        lambda: lambda.add(mu),
    }
}

/// Denominator D(z) = 1 + 2 λ·z + (λ·λ)(z·z) of the special conformal map.
fn special_denominator(lambda: &RealFourVector, z: &ComplexFourVector) -> Complex64 {
    let lc = lambda.to_complex();
    let lz = complex_inner(&lc, z);
    let zz = complex_inner(z, z);
    let ll = lambda.norm_sqr();
    Complex64::new(1.0, 0.0) + 2.0 * lz + ll * zz
}

/// S_λ(z) on complex coordinates, with its denominator. Errors when the
/// denominator falls below `DENOM_FLOOR` relative to the term magnitudes.
pub fn special_apply_complex(
    lambda: &RealFourVector,
    z: &ComplexFourVector,
) -> Result<(ComplexFourVector, Complex64)> {
    let lc = lambda.to_complex();
    let lz = complex_inner(&lc, z);
    let zz = complex_inner(z, z);
    let ll = lambda.norm_sqr();
    let denom = Complex64::new(1.0, 0.0) + 2.0 * lz + ll * zz;
    let scale = 1.0 + 2.0 * lz.norm() + (ll * zz).norm();
    if denom.norm() < DENOM_FLOOR * scale {
        return Err(Error::BoundaryDivergence {
            denom: denom.norm(),
        });
    }
    let numer = z.add(&lc.scale(zz));
    Ok((numer.scale(denom.inv()), denom))
}

/// Applies the map to a tube point. `Word` factors act right-to-left.
pub fn apply_point(map: &ConformalMap, z: &FutureTubePoint) -> Result<FutureTubePoint> {
    match map {
        ConformalMap::Poincare {
            lorentz,
            translation,
        } => {
            let l = lorentz_matrix(lorentz);
            let x = z.x.transform(&l).add(translation);
            let r = z.r.transform(&l);
            FutureTubePoint::new(x, r)
        }
        ConformalMap::Dilatation { lambda } => {
            FutureTubePoint::new(z.x.scale(*lambda), z.r.scale(*lambda))
        }
        ConformalMap::SpecialConformal { lambda } => {
            let (w, _) = special_apply_complex(lambda, &z.z())?;
            let x = w.re();
            let r = w.im().scale(-1.0);
            FutureTubePoint::new(x, r).map_err(|_| Error::NumericalBoundary {
                rr: r.norm_sqr(),
            })
        }
        ConformalMap::Word { factors } => {
            let mut cur = *z;
            for f in factors.iter().rev() {
                cur = apply_point(f, &cur)?;
            }
            Ok(cur)
        }
    }
}

/// Conformal weight multiplier of the unitary action at the complex point z:
/// 1 for Poincaré maps, Λ⁴ for dilatations, D(z)⁻⁴ for special conformal
/// maps.
fn multiplier(map: &ConformalMap, z: &ComplexFourVector) -> Result<Complex64> {
    match map {
        ConformalMap::Poincare { .. } => Ok(Complex64::new(1.0, 0.0)),
        ConformalMap::Dilatation { lambda } => Ok(Complex64::new(lambda.powi(4), 0.0)),
        ConformalMap::SpecialConformal { lambda } => {
            let (_, denom) = special_apply_complex(lambda, z)?;
            Ok(denom.powi(-4))
        }
        ConformalMap::Word { .. } => Err(Error::InvalidArgument(
            "multiplier is defined factorwise".into(),
        )),
    }
}

/// The transformed coherent wavefunction in kernel normalization:
/// (U_g K(·,ȳ))(x), evaluated through the multiplier form
/// m_g(x) K(g(x), ȳ) and recursively for words.
pub fn unitary_kernel(
    map: &ConformalMap,
    x: &FutureTubePoint,
    y: &FutureTubePoint,
) -> Result<Complex64> {
    match map {
        ConformalMap::Word { factors } => {
            if factors.is_empty() {
                return kernel4(x, y);
            }
            let head = &factors[0];
            let rest = ConformalMap::Word {
                factors: factors[1..].to_vec(),
            };
            let m = multiplier(head, &x.z())?;
            let gx = apply_point(head, x)?;
            Ok(m * unitary_kernel(&rest, &gx, y)?)
        }
        _ => {
            let m = multiplier(map, &x.z())?;
            let gx = apply_point(map, x)?;
            Ok(m * kernel4(&gx, y)?)
        }
    }
}

/// How the unitary action moves a coherent state: U_g ψ_z = e^{iθ} ψ_w.
/// Returns (w, θ). The focus moves by the inverse point map; Poincaré maps
/// and dilatations contribute no phase, the special conformal phase is
/// 4·arg(1 − 2λ·z + λ²z²).
pub fn act_on_coherent(map: &ConformalMap, z: &FutureTubePoint) -> Result<(FutureTubePoint, f64)> {
    match map {
        ConformalMap::Poincare {
            lorentz,
            translation,
        } => {
            let li = lorentz_inverse(&lorentz_matrix(lorentz));
            let x = z.x.sub(translation).transform(&li);
            let r = z.r.transform(&li);
            Ok((FutureTubePoint::new(x, r)?, 0.0))
        }
        ConformalMap::Dilatation { lambda } => Ok((
            FutureTubePoint::new(z.x.scale(1.0 / lambda), z.r.scale(1.0 / lambda))?,
            0.0,
        )),
        ConformalMap::SpecialConformal { lambda } => {
            let minus = lambda.scale(-1.0);
            let w = apply_point(&ConformalMap::SpecialConformal { lambda: minus }, z)?;
            let d_minus = special_denominator(&minus, &z.z());
            Ok((w, 4.0 * d_minus.arg()))
        }
        ConformalMap::Word { factors } => {
            let mut w = *z;
            let mut theta = 0.0;
            for f in factors.iter().rev() {
                let (w2, t) = act_on_coherent(f, &w)?;
                w = w2;
                theta += t;
            }
            Ok((w, theta))
        }
    }
}

/// The special-conformal phase computed from the alternative closed form
/// (1/2i)·4·log[z²w̄²/(z̄²w²)] with w the transformed focus; agrees with the
/// value from [`act_on_coherent`] modulo 2π.
pub fn special_phase_alternative(lambda: &RealFourVector, z: &FutureTubePoint) -> Result<f64> {
    let minus = lambda.scale(-1.0);
    let (w, _) = special_apply_complex(&minus, &z.z())?;
    let zz = complex_inner(&z.z(), &z.z());
    let ww = complex_inner(&w, &w);
    // z²/w² = D₋(z); the phase is 4·arg of that ratio.
    Ok(4.0 * (zz / ww).arg())
}

/// Conformally invariant cross ratio
/// [(a−ā)²(b−b̄)²] / [(a−b̄)²(b−ā)²] of two tube points.
pub fn cross_ratio(a: &FutureTubePoint, b: &FutureTubePoint) -> Result<Complex64> {
    let sq = |u: &ComplexFourVector| complex_inner(u, u);
    let az = a.z();
    let bz = b.z();
    let num = sq(&az.sub(&az.conj())) * sq(&bz.sub(&bz.conj()));
    let den = sq(&az.sub(&bz.conj())) * sq(&bz.sub(&az.conj()));
    if den.norm() < 1e-300 {
        return Err(Error::BoundaryDivergence { denom: den.norm() });
    }
    Ok(num / den)
}

/// Overlap preservation |⟨ψ_{g·a}|ψ_{g·b}⟩| = |⟨ψ_a|ψ_b⟩| stated through
/// foci: returns the two |overlap|² values (cross-ratio power) for a map and
/// a point pair.
pub fn overlap_invariance(
    map: &ConformalMap,
    a: &FutureTubePoint,
    b: &FutureTubePoint,
) -> Result<(f64, f64)> {
    let before = crate::states::transition_probability_cross_ratio(a, b)?;
    let ga = apply_point(map, a)?;
    let gb = apply_point(map, b)?;
    let after = crate::states::transition_probability_cross_ratio(&ga, &gb)?;
    Ok((before, after))
}

/// Unitarity through the Gram algebra: ⟨U ψ_a|U ψ_b⟩ compared with
/// ⟨ψ_a|ψ_b⟩, using the focus-plus-phase form of the transformed states.
pub fn coherent_inner_after_map(
    map: &ConformalMap,
    a: &FutureTubePoint,
    b: &FutureTubePoint,
) -> Result<(Complex64, Complex64)> {
    let (wa, ta) = act_on_coherent(map, a)?;
    let (wb, tb) = act_on_coherent(map, b)?;
    let before = crate::states::overlap(a, b)?;
    let after = crate::states::overlap(&wa, &wb)? * Complex64::from_polar(1.0, tb - ta);
    Ok((before, after))
}

/// Covariance residual max_u |(U_g K(·,ȳ))(u) − c·K(u,w̄)| /scale at the
/// probe points, where (w, θ) = act_on_coherent(g, y) and
/// c = e^{iθ}·√(K(y,ȳ)/K(w,w̄)).
pub fn covariance_residual(
    map: &ConformalMap,
    y: &FutureTubePoint,
    probes: &[FutureTubePoint],
) -> Result<f64> {
    let (w, theta) = act_on_coherent(map, y)?;
    let c = Complex64::from_polar(
        (kernel4_diag(y) / kernel4_diag(&w)).sqrt(),
        theta,
    );
    let mut worst: f64 = 0.0;
    for u in probes {
        let lhs = unitary_kernel(map, u, y)?;
        let rhs = c * kernel4(u, &w)?;
        let scale = lhs.norm().max(rhs.norm()).max(1e-300);
        worst = worst.max((lhs - rhs).norm() / scale);
    }
    Ok(worst)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mc::{random_tube_point, substream};
    use rand::Rng;

    fn tube(x: [f64; 4], r: [f64; 4]) -> FutureTubePoint {
        FutureTubePoint::new(RealFourVector(x), RealFourVector(r)).unwrap()
    }

    fn random_map<R: Rng>(rng: &mut R) -> ConformalMap {
        let pick: u8 = rng.random_range(0..4);
        match pick {
            0 => {
                let l = lorentz_from_params(
                    [
                        0.6 * (rng.random::<f64>() - 0.5),
                        0.6 * (rng.random::<f64>() - 0.5),
                        0.6 * (rng.random::<f64>() - 0.5),
                    ],
                    [
                        2.0 * (rng.random::<f64>() - 0.5),
                        2.0 * (rng.random::<f64>() - 0.5),
                        2.0 * (rng.random::<f64>() - 0.5),
                    ],
                );
                let b = RealFourVector::new(
                    rng.random::<f64>() - 0.5,
                    rng.random::<f64>() - 0.5,
                    rng.random::<f64>() - 0.5,
                    rng.random::<f64>() - 0.5,
                );
                ConformalMap::poincare(&l, b).unwrap()
            }
            1 => ConformalMap::dilatation(0.5 + 1.5 * rng.random::<f64>()).unwrap(),
            2 => ConformalMap::special(RealFourVector::new(
                0.2 * (rng.random::<f64>() - 0.5),
                0.2 * (rng.random::<f64>() - 0.5),
                0.2 * (rng.random::<f64>() - 0.5),
                0.2 * (rng.random::<f64>() - 0.5),
            )),
            _ => {
                let l = lorentz_from_params([0.3, -0.2, 0.1], [0.0, 0.5, 0.0]);
                ConformalMap::Word {
                    factors: vec![
                        ConformalMap::special(RealFourVector::new(0.05, -0.04, 0.02, 0.0)),
                        ConformalMap::poincare(&l, RealFourVector::new(0.2, 0.0, -0.1, 0.0))
                            .unwrap(),
                        ConformalMap::dilatation(1.3).unwrap(),
                    ],
                }
            }
        }
    }

    #[test]
    fn lorentz_constructions_are_proper_orthochronous() {
        let mut rng = substream(41, "lorentz", 0);
        for _ in 0..200 {
            let l = lorentz_from_params(
                [
                    2.0 * (rng.random::<f64>() - 0.5),
                    2.0 * (rng.random::<f64>() - 0.5),
                    2.0 * (rng.random::<f64>() - 0.5),
                ],
                [
                    4.0 * (rng.random::<f64>() - 0.5),
                    4.0 * (rng.random::<f64>() - 0.5),
                    4.0 * (rng.random::<f64>() - 0.5),
                ],
            );
            assert!(is_proper_orthochronous(&l, 1e-9));
            let li = lorentz_inverse(&l);
            assert!((l * li - Matrix4::identity()).amax() < 1e-10);
        }
        // Time reversal is rejected.
        let mut t = Matrix4::identity();
        t[(0, 0)] = -1.0;
        t[(1, 1)] = -1.0;
        assert!(!is_proper_orthochronous(&t, 1e-9));
    }

    #[test]
    fn poincare_and_dilatation_point_action() {
        let z = tube([0.2, -0.4, 0.1, 0.0], [1.0, 0.1, 0.0, -0.2]);
        let l = lorentz_from_params([0.4, 0.0, -0.3], [0.2, 0.0, 1.0]);
        let b = RealFourVector::new(0.3, -1.0, 0.2, 0.0);
        let g = ConformalMap::poincare(&l, b).unwrap();
        let gz = apply_point(&g, &z).unwrap();
        assert!((gz.rr() - z.rr()).abs() < 1e-12 * z.rr());
        // Inverse round-trips.
        let back = apply_point(&g.inverse(), &gz).unwrap();
        for a in 0..4 {
            assert!((back.x.0[a] - z.x.0[a]).abs() < 1e-12);
            assert!((back.r.0[a] - z.r.0[a]).abs() < 1e-12);
        }

        let d = ConformalMap::dilatation(2.5).unwrap();
        let dz = apply_point(&d, &z).unwrap();
        assert!((dz.rr() - 2.5 * 2.5 * z.rr()).abs() < 1e-12);
    }

    #[test]
    fn special_conformal_preserves_tube_and_composes() {
        let mut rng = substream(42, "special", 0);
        let lam = RealFourVector::new(0.1, -0.05, 0.02, 0.08);
        let mu = RealFourVector::new(-0.03, 0.06, 0.01, -0.02);
        let s_lam = ConformalMap::special(lam);
        let s_mu = ConformalMap::special(mu);
        let s_sum = compose_special(&lam, &mu);
        for _ in 0..2000 {
            let z = random_tube_point(&mut rng, 1.5, 0.5, 2.0, 0.8);
            let w1 = apply_point(&s_lam, &apply_point(&s_mu, &z).unwrap()).unwrap();
            let w2 = apply_point(&s_sum, &z).unwrap();
            for a in 0..4 {
                assert!((w1.x.0[a] - w2.x.0[a]).abs() < 1e-10, "composition x");
                assert!((w1.r.0[a] - w2.r.0[a]).abs() < 1e-10, "composition r");
            }
            // Inverse: S_{−λ} undoes S_λ.
            let back = apply_point(&s_lam.inverse(), &apply_point(&s_lam, &z).unwrap()).unwrap();
            for a in 0..4 {
                assert!((back.x.0[a] - z.x.0[a]).abs() < 1e-9);
                assert!((back.r.0[a] - z.r.0[a]).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn random_words_preserve_the_tube() {
        let mut rng = substream(43, "words", 0);
        let mut checked = 0u32;
        while checked < 100_000 {
            let z = random_tube_point(&mut rng, 1.5, 0.5, 2.0, 0.8);
            let g = random_map(&mut rng);
            let gz = apply_point(&g, &z).expect("map keeps the point inside Γ");
            assert!(gz.rr() > crate::EPS_GAMMA && gz.r.0[0] > 0.0);
            checked += 1;
        }
    }

    #[test]
    fn cross_ratio_is_invariant() {
        let mut rng = substream(44, "crossratio", 0);
        for _ in 0..2000 {
            let a = random_tube_point(&mut rng, 1.5, 0.5, 2.0, 0.8);
            let b = random_tube_point(&mut rng, 1.5, 0.5, 2.0, 0.8);
            let g = random_map(&mut rng);
            let before = cross_ratio(&a, &b).unwrap();
            let after = cross_ratio(
                &apply_point(&g, &a).unwrap(),
                &apply_point(&g, &b).unwrap(),
            )
            .unwrap();
            assert!(
                (before - after).norm() <= 1e-9 * before.norm().max(1e-12),
                "cross ratio moved: {before} vs {after}"
            );
        }
    }

    #[test]
    fn kernel_transformation_rules() {
        // Dilatation: K(Λx, Λȳ) = Λ⁻⁸ K(x, ȳ).
        let x = tube([0.2, 0.0, -0.1, 0.3], [1.1, 0.0, 0.2, 0.0]);
        let y = tube([-0.4, 0.2, 0.0, 0.0], [0.9, -0.1, 0.0, 0.1]);
        let lam = 1.7;
        let d = ConformalMap::dilatation(lam).unwrap();
        let kd = kernel4(&apply_point(&d, &x).unwrap(), &apply_point(&d, &y).unwrap()).unwrap();
        let k0 = kernel4(&x, &y).unwrap();
        assert!((kd - k0 * lam.powi(-8)).norm() < 1e-12 * k0.norm());

        // Special conformal: K(S(x), S(y)‾) = D(x)⁴ D̄(y)⁴ K(x, ȳ).
        let lv = RealFourVector::new(0.1, 0.05, -0.03, 0.07);
        let s = ConformalMap::special(lv);
        let (sx, dx) = special_apply_complex(&lv, &x.z()).unwrap();
        let (_, dy) = special_apply_complex(&lv, &y.z()).unwrap();
        let _ = sx;
        let ks = kernel4(&apply_point(&s, &x).unwrap(), &apply_point(&s, &y).unwrap()).unwrap();
        let expect = dx.powi(4) * dy.conj().powi(4) * k0;
        assert!((ks - expect).norm() < 1e-10 * expect.norm());
    }

    #[test]
    fn coherent_covariance_with_phase() {
        let mut rng = substream(45, "covariance", 0);
        let y = tube([0.1, -0.2, 0.0, 0.3], [1.2, 0.1, -0.1, 0.0]);
        let probes: Vec<_> = (0..50)
            .map(|_| random_tube_point(&mut rng, 1.0, 0.6, 1.8, 0.6))
            .collect();
        for _ in 0..50 {
            let g = random_map(&mut rng);
            let worst = covariance_residual(&g, &y, &probes).unwrap();
            assert!(worst < 1e-9, "covariance residual {worst}");
        }
    }

    #[test]
    fn special_phase_alternative_form_agrees() {
        let mut rng = substream(46, "phase", 0);
        for _ in 0..5000 {
            let z = random_tube_point(&mut rng, 1.5, 0.5, 2.0, 0.8);
            let lam = RealFourVector::new(
                0.2 * (rng.random::<f64>() - 0.5),
                0.2 * (rng.random::<f64>() - 0.5),
                0.2 * (rng.random::<f64>() - 0.5),
                0.2 * (rng.random::<f64>() - 0.5),
            );
            let g = ConformalMap::special(lam);
            let (_, theta) = act_on_coherent(&g, &z).unwrap();
            let alt = special_phase_alternative(&lam, &z).unwrap();
            let diff = (theta - alt).rem_euclid(2.0 * std::f64::consts::PI);
            let diff = diff.min(2.0 * std::f64::consts::PI - diff);
            assert!(diff < 1e-10, "phase mismatch {diff}");
        }
    }

    #[test]
    fn unitarity_of_overlaps() {
        let mut rng = substream(47, "unitarity", 0);
        for _ in 0..10_000 {
            let a = random_tube_point(&mut rng, 1.5, 0.5, 2.0, 0.8);
            let b = random_tube_point(&mut rng, 1.5, 0.5, 2.0, 0.8);
            let g = random_map(&mut rng);
            let (before, after) = coherent_inner_after_map(&g, &a, &b).unwrap();
            assert!(
                (before - after).norm() <= 1e-10 * before.norm().max(1e-12),
                "inner product moved: {before} vs {after}"
            );
        }
    }

    #[test]
    fn word_acts_right_to_left() {
        let z = tube([0.0; 4], [1.0, 0.0, 0.0, 0.0]);
        let shift = ConformalMap::translation(RealFourVector::new(0.0, 1.0, 0.0, 0.0));
        let dil = ConformalMap::dilatation(2.0).unwrap();
        // dil ∘ shift: shift first, then scale: x¹ = 2.
        let w1 = ConformalMap::Word {
            factors: vec![dil.clone(), shift.clone()],
        };
        let p1 = apply_point(&w1, &z).unwrap();
        assert!((p1.x.0[1] - 2.0).abs() < 1e-14);
        // shift ∘ dil: scale first, then shift: x¹ = 1.
        let w2 = ConformalMap::Word {
            factors: vec![shift, dil],
        };
        let p2 = apply_point(&w2, &z).unwrap();
        assert!((p2.x.0[1] - 1.0).abs() < 1e-14);
    }

    #[test]
    fn map_json_round_trip() {
        let l = lorentz_from_params([0.2, 0.0, 0.0], [0.0, 0.0, 0.4]);
        let g = ConformalMap::Word {
            factors: vec![
                ConformalMap::poincare(&l, RealFourVector::new(0.1, 0.0, 0.0, 0.0)).unwrap(),
                ConformalMap::dilatation(1.5).unwrap(),
                ConformalMap::special(RealFourVector::new(0.05, 0.0, -0.02, 0.0)),
            ],
        };
        let json = serde_json::to_string(&g).unwrap();
        assert!(json.contains("\"kind\""));
        let back: ConformalMap = serde_json::from_str(&json).unwrap();
        let z = tube([0.3, 0.1, 0.0, -0.2], [1.0, 0.0, 0.2, 0.0]);
        let a = apply_point(&g, &z).unwrap();
        let b = apply_point(&back, &z).unwrap();
        for i in 0..4 {
            assert_eq!(a.x.0[i], b.x.0[i]);
            assert_eq!(a.r.0[i], b.r.0[i]);
        }
    }

    #[test]
    fn boundary_divergence_from_extreme_special_map() {
        // Push λ large along z² direction so the denominator crosses zero
        // for some point; verify the guarded error rather than a panic.
        let z = tube([0.0; 4], [1.0, 0.0, 0.0, 0.0]);
        // z = −i e₀: z² = −1, D = 1 − λ² − 2iλ⁰. Choose λ = e₀: D = −2i·1 ⇒
        // fine; instead λ·λ = 1 with λ⁰ = 0 impossible (spacelike λ has
        // λ·λ < 0). Use a null-ish λ and large magnitude to shrink |D|.
        let lam = RealFourVector::new(5.0, 4.99, 0.0, 0.0);
        let res = apply_point(&ConformalMap::special(lam), &z);
        match res {
            Ok(p) => assert!(p.rr() > 0.0),
            Err(Error::BoundaryDivergence { .. }) | Err(Error::NumericalBoundary { .. }) => {}
            Err(e) => panic!("unexpected error {e:?}"),
        }
    }
}
