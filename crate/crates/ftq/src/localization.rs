//! Mass-dependent localization bounds: a point of the tube carries the mass
//! scale M = ħ/√(r·r), and every normalized state obeys the density bound
//! ρ(z,z̄) ≤ 3M⁸/(4π⁴ħ⁸) = K(z,z̄), with equality exactly for the coherent
//! state focused at z. Sharper localization therefore costs mass to the
//! eighth power: doubling M multiplies the ceiling by 256.

use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::minkowski::FutureTubePoint;
use crate::states::{density_diagonal, DensityState};

/// Mass scale carried by a tube point: M = ħ/√(r·r).
pub fn mass_of_point(z: &FutureTubePoint, hbar: f64) -> f64 {
    hbar / z.rr().sqrt()
}

/// Density ceiling 3M⁸/(4π⁴ħ⁸) at mass scale M; equivalently 3/(4π⁴λ̄⁸)
/// with λ̄ = ħ/M the reduced Compton wavelength.
pub fn density_bound_for_mass(mass: f64, hbar: f64) -> f64 {
    let m2 = mass * mass;
    let m8 = m2 * m2 * m2 * m2;
    let h2 = hbar * hbar;
    let h8 = h2 * h2 * h2 * h2;
    0.75 * m8 / (std::f64::consts::PI.powi(4) * h8)
}

/// Density ceiling at a tube point: 3M_z⁸/(4π⁴ħ⁸), identical to the kernel
/// diagonal K(z,z̄).
pub fn density_bound(z: &FutureTubePoint, hbar: f64) -> f64 {
    density_bound_for_mass(mass_of_point(z, hbar), hbar)
}

/// One scan entry: the bound, the state's actual density, and their ratio.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct LocalizationReport {
    pub point: FutureTubePoint,
    pub mass: f64,
    pub bound: f64,
    pub density: f64,
    pub ratio: f64,
}

/// Evaluates the localization inequality for a state at each probe point.
pub fn scan_bound(
    state: &DensityState,
    points: &[FutureTubePoint],
    hbar: f64,
) -> Result<Vec<LocalizationReport>> {
    let mut out = Vec::with_capacity(points.len());
    for z in points {
        let mass = mass_of_point(z, hbar);
        let bound = density_bound(z, hbar);
        let density = density_diagonal(state, z)?;
        out.push(LocalizationReport {
            point: *z,
            mass,
            bound,
            density,
            ratio: density / bound,
        });
    }
    Ok(out)
}

/// CSV export: point coordinates, mass, bound, density, ratio.
pub fn reports_to_csv(reports: &[LocalizationReport]) -> String {
    let mut s = String::from("x0,x1,x2,x3,r0,r1,r2,r3,mass,bound,density,ratio\n");
    for rep in reports {
        for a in 0..4 {
            s.push_str(&format!("{:.17e},", rep.point.x.0[a]));
        }
        for a in 0..4 {
            s.push_str(&format!("{:.17e},", rep.point.r.0[a]));
        }
        s.push_str(&format!(
            "{:.17e},{:.17e},{:.17e},{:.17e}\n",
            rep.mass, rep.bound, rep.density, rep.ratio
        ));
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bergman::kernel4_diag;
    use crate::mc::{random_tube_point, substream};
    use crate::minkowski::RealFourVector;

    fn tube(x: [f64; 4], r: [f64; 4]) -> FutureTubePoint {
        FutureTubePoint::new(RealFourVector(x), RealFourVector(r)).unwrap()
    }

    #[test]
    fn mass_scale_examples() {
        // Unit rest frame and its Kelvin-dual reading.
        let z1 = tube([0.0; 4], [1.0, 0.0, 0.0, 0.0]);
        assert_eq!(mass_of_point(&z1, 1.0), 1.0);
        let z2 = tube([0.0; 4], [2.0, 0.0, 0.0, 0.0]);
        assert!((mass_of_point(&z2, 1.0) - 0.5).abs() < 1e-15);
        // M = √(p·p) with p = ħr/(r·r).
        let z3 = tube([0.3, 0.0, -0.2, 0.1], [1.2, 0.3, 0.0, -0.4]);
        let p = crate::minkowski::kelvin_map(&z3.r, 1.0).unwrap();
        assert!((mass_of_point(&z3, 1.0) - p.norm_sqr().sqrt()).abs() < 1e-14);
        // Boost invariance.
        let l = crate::minkowski::boost_from_rapidity([0.8, -0.3, 0.2]);
        let zb = FutureTubePoint::new(z3.x.transform(&l), z3.r.transform(&l)).unwrap();
        let m0 = mass_of_point(&z3, 1.0);
        assert!((mass_of_point(&zb, 1.0) - m0).abs() < 1e-12 * m0);
    }

    #[test]
    fn bound_equals_kernel_diagonal() {
        let mut rng = substream(71, "locbound", 0);
        for _ in 0..1000 {
            let z = random_tube_point(&mut rng, 2.0, 0.3, 3.0, 1.2);
            let b = density_bound(&z, 1.0);
            let k = kernel4_diag(&z);
            assert!((b - k).abs() <= 1e-12 * k, "{b} vs {k}");
        }
        // ħ-independence of the ceiling at fixed point.
        let z = tube([0.0; 4], [1.3, 0.2, 0.0, -0.4]);
        let b1 = density_bound(&z, 1.0);
        let b2 = density_bound(&z, 0.37);
        assert!((b1 - b2).abs() <= 1e-12 * b1);
    }

    #[test]
    fn doubling_mass_multiplies_bound_by_256() {
        for m in [0.1, 1.0, 3.7, 42.0] {
            let b = density_bound_for_mass(m, 1.0);
            let b2 = density_bound_for_mass(2.0 * m, 1.0);
            assert_eq!(b2, 256.0 * b);
        }
    }

    #[test]
    fn coherent_state_saturates_at_its_focus() {
        let z = tube([0.4, -0.1, 0.2, 0.0], [1.1, 0.0, 0.3, -0.2]);
        let state = DensityState::coherent(z);
        let reports = scan_bound(&state, &[z], 1.0).unwrap();
        assert!((reports[0].ratio - 1.0).abs() < 1e-12);
    }

    #[test]
    fn scan_never_exceeds_bound() {
        let z = tube([0.0; 4], [1.0, 0.0, 0.0, 0.0]);
        let w = tube([0.5, 0.2, 0.0, -0.1], [1.4, 0.1, -0.2, 0.0]);
        let state = DensityState::uniform_mixture(vec![z, w]).unwrap();
        let mut rng = substream(72, "locscan", 0);
        let points: Vec<_> = (0..2000)
            .map(|_| random_tube_point(&mut rng, 2.0, 0.3, 3.0, 1.0))
            .collect();
        let reports = scan_bound(&state, &points, 1.0).unwrap();
        for rep in &reports {
            assert!(rep.ratio <= 1.0 + 1e-9, "ratio {}", rep.ratio);
        }
    }

    #[test]
    fn csv_layout() {
        let z = tube([0.0; 4], [1.0, 0.0, 0.0, 0.0]);
        let state = DensityState::coherent(z);
        let reports = scan_bound(&state, &[z], 1.0).unwrap();
        let csv = reports_to_csv(&reports);
        let mut lines = csv.lines();
        assert_eq!(
            lines.next().unwrap(),
            "x0,x1,x2,x3,r0,r1,r2,r3,mass,bound,density,ratio"
        );
        let row = lines.next().unwrap();
        assert_eq!(row.split(',').count(), 12);
    }
}
