//! Randomized invariant checks across module boundaries: geometry of the
//! tube and cone, kernel symmetries, state-space bounds, conformal
//! invariants, sampler supports, and serialization round trips.

use num_complex::Complex64;
use proptest::prelude::*;

use ftq::bergman::{kernel4, kernel4_diag};
use ftq::conformal::{
    apply_point, cross_ratio, is_proper_orthochronous, lorentz_from_params, ConformalMap,
};
use ftq::localization::{density_bound, mass_of_point};
use ftq::mc::{random_tube_point, substream, ConeExpSampler, McConfig, TubeProposal};
use ftq::minkowski::{
    boost_from_rapidity, is_in_future_tube, kelvin_map, lorentz_inverse, minkowski_inner,
    phase_space_metric, rotation_from_axis_angle, FutureTubePoint, RealFourVector,
};
use ftq::EPS_GAMMA;
use ftq::states::{
    density_diagonal, gram_matrix, overlap, purity, transition_probability_cross_ratio,
    DensityState, PureState, Region,
};

fn tube_point(x: [f64; 4], rs: [f64; 3], gap: f64) -> FutureTubePoint {
    let r0 = (rs[0] * rs[0] + rs[1] * rs[1] + rs[2] * rs[2]).sqrt() + gap;
    FutureTubePoint::new(
        RealFourVector::new(x[0], x[1], x[2], x[3]),
        RealFourVector::new(r0, rs[0], rs[1], rs[2]),
    )
    .expect("r is future time-like by construction")
}

fn arb_tube_point() -> impl Strategy<Value = FutureTubePoint> {
    (
        prop::array::uniform4(-3.0..3.0f64),
        prop::array::uniform3(-2.0..2.0f64),
        0.2..3.0f64,
    )
        .prop_map(|(x, rs, gap)| tube_point(x, rs, gap))
}

fn arb_momentum() -> impl Strategy<Value = RealFourVector> {
    (prop::array::uniform3(-2.0..2.0f64), 0.1..4.0f64).prop_map(|(ps, gap)| {
        let p0 = (ps[0] * ps[0] + ps[1] * ps[1] + ps[2] * ps[2]).sqrt() + gap;
        RealFourVector::new(p0, ps[0], ps[1], ps[2])
    })
}

fn arb_lorentz() -> impl Strategy<Value = nalgebra::Matrix4<f64>> {
    (
        prop::array::uniform3(-0.8..0.8f64),
        prop::array::uniform3(-2.0..2.0f64),
    )
        .prop_map(|(eta, aa)| lorentz_from_params(eta, aa))
}

proptest! {
    #[test]
    fn kelvin_is_an_involution_on_the_cone(p in arb_momentum(), hbar in 0.25..4.0f64) {
        let r = kelvin_map(&p, hbar).unwrap();
        prop_assert!(r.is_timelike_future(EPS_GAMMA));
        let back = kelvin_map(&r, hbar).unwrap();
        for a in 0..4 {
            prop_assert!((back.0[a] - p.0[a]).abs() <= 1e-10 * (1.0 + p.0[a].abs()));
        }
    }

    #[test]
    fn phase_space_metric_is_positive_definite_with_inverse(z in arb_tube_point()) {
        let r = z.z().im().scale(-1.0);
        let (h, k) = phase_space_metric(&r).unwrap();
        prop_assert!(nalgebra::Cholesky::new(h).is_some());
        let prod = h * k;
        for a in 0..4 {
            for b in 0..4 {
                let expect = if a == b { 1.0 } else { 0.0 };
                prop_assert!((prod[(a, b)] - expect).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn lorentz_preserves_inner_product(l in arb_lorentz(), p in arb_momentum(), q in arb_momentum()) {
        prop_assert!(is_proper_orthochronous(&l, 1e-9));
        let before = minkowski_inner(&p, &q);
        let after = minkowski_inner(&p.transform(&l), &q.transform(&l));
        prop_assert!((after - before).abs() < 1e-9 * (1.0 + before.abs()));
        let inv = lorentz_inverse(&l);
        let ident = l * inv;
        for a in 0..4 {
            for b in 0..4 {
                let expect = if a == b { 1.0 } else { 0.0 };
                prop_assert!((ident[(a, b)] - expect).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn boosts_and_rotations_are_orthochronous(eta in prop::array::uniform3(-2.0..2.0f64),
                                              aa in prop::array::uniform3(-3.0..3.0f64)) {
        prop_assert!(is_proper_orthochronous(&boost_from_rapidity(eta), 1e-9));
        prop_assert!(is_proper_orthochronous(&rotation_from_axis_angle(aa), 1e-9));
    }

    #[test]
    fn kernel_is_hermitian_and_positive_on_diagonal(z in arb_tube_point(), w in arb_tube_point()) {
        let kzw = kernel4(&z, &w).unwrap();
        let kwz = kernel4(&w, &z).unwrap();
        let scale = kzw.norm().max(1.0);
        prop_assert!((kzw - kwz.conj()).norm() < 1e-10 * scale);
        let diag = kernel4_diag(&z);
        prop_assert!(diag > 0.0);
        let from_pair = kernel4(&z, &z).unwrap();
        prop_assert!((from_pair.re - diag).abs() < 1e-10 * diag);
        prop_assert!(from_pair.im.abs() < 1e-10 * diag);
    }

    #[test]
    fn overlap_is_bounded_and_symmetric(z in arb_tube_point(), w in arb_tube_point()) {
        let o = overlap(&w, &z).unwrap();
        prop_assert!(o.norm() <= 1.0 + 1e-9);
        prop_assert!(o.norm() > 0.0);
        let p = transition_probability_cross_ratio(&w, &z).unwrap();
        let q = transition_probability_cross_ratio(&z, &w).unwrap();
        prop_assert!((p - o.norm_sqr()).abs() < 1e-9 * (1.0 + p));
        prop_assert!((p - q).abs() < 1e-12 * (1.0 + p));
        let self_p = transition_probability_cross_ratio(&z, &z).unwrap();
        prop_assert!((self_p - 1.0).abs() < 1e-12);
    }

    #[test]
    fn gram_matrix_is_positive_semidefinite(z in arb_tube_point(), w in arb_tube_point(), v in arb_tube_point()) {
        let g = gram_matrix(&[z, w, v]).unwrap();
        let eig = g.clone().symmetric_eigen();
        for lambda in eig.eigenvalues.iter() {
            prop_assert!(*lambda > -1e-10);
        }
        for i in 0..3 {
            prop_assert!((g[(i, i)].re - 1.0).abs() < 1e-12);
            prop_assert!(g[(i, i)].im.abs() < 1e-14);
        }
    }

    #[test]
    fn density_diagonal_respects_localization_bound(z in arb_tube_point(),
                                                    w in arb_tube_point(),
                                                    u in arb_tube_point(),
                                                    c_re in -1.0..1.0f64,
                                                    c_im in -1.0..1.0f64) {
        let state = PureState::new(vec![z, w], vec![Complex64::new(1.0, 0.0), Complex64::new(c_re, c_im)]).unwrap();
        let rho = DensityState::pure(state);
        let d = density_diagonal(&rho, &u).unwrap();
        prop_assert!(d >= 0.0);
        prop_assert!(d <= density_bound(&u, 1.0) * (1.0 + 1e-9));
        let pu = purity(&rho).unwrap();
        prop_assert!(pu > 0.0 && pu <= 1.0 + 1e-9);
    }

    #[test]
    fn mass_scale_matches_kelvin_momentum(p in arb_momentum(), hbar in 0.25..4.0f64) {
        let r = kelvin_map(&p, hbar).unwrap();
        let z = FutureTubePoint::new(RealFourVector::zero(), r).unwrap();
        let m = mass_of_point(&z, hbar);
        prop_assert!((m - p.norm_sqr().sqrt()).abs() < 1e-9 * m);
    }

    #[test]
    fn conformal_maps_preserve_the_tube(z in arb_tube_point(),
                                        eta in prop::array::uniform3(-0.5..0.5f64),
                                        aa in prop::array::uniform3(-1.0..1.0f64),
                                        b in prop::array::uniform4(-1.0..1.0f64),
                                        lam in 0.3..3.0f64,
                                        s in prop::array::uniform4(-0.2..0.2f64)) {
        let maps = [
            ConformalMap::poincare(
                &lorentz_from_params(eta, aa),
                RealFourVector::new(b[0], b[1], b[2], b[3]),
            )
            .unwrap(),
            ConformalMap::dilatation(lam).unwrap(),
            ConformalMap::special(RealFourVector::new(s[0], s[1], s[2], s[3])),
        ];
        for map in &maps {
            if let Ok(w) = apply_point(map, &z) {
                prop_assert!(is_in_future_tube(&w.z()).is_some());
                let back = apply_point(&map.inverse(), &w).unwrap();
                let zz = z.z();
                let bb = back.z();
                for a in 0..4 {
                    prop_assert!((zz.0[a] - bb.0[a]).norm() < 1e-7 * (1.0 + zz.0[a].norm()));
                }
            }
        }
    }

    #[test]
    fn cross_ratio_is_poincare_invariant(z in arb_tube_point(), w in arb_tube_point(),
                                         eta in prop::array::uniform3(-0.5..0.5f64),
                                         b in prop::array::uniform4(-1.0..1.0f64)) {
        let map = ConformalMap::poincare(
            &boost_from_rapidity(eta),
            RealFourVector::new(b[0], b[1], b[2], b[3]),
        )
        .unwrap();
        let before = cross_ratio(&z, &w).unwrap();
        let za = apply_point(&map, &z).unwrap();
        let wa = apply_point(&map, &w).unwrap();
        let after = cross_ratio(&za, &wa).unwrap();
        prop_assert!((before - after).norm() < 1e-9 * (1.0 + before.norm()));
    }

    #[test]
    fn cone_sampler_stays_in_forward_cone(xi in arb_momentum(), seed in 0u64..1_000) {
        let sampler = ConeExpSampler::new(xi).unwrap();
        let mut rng = substream(seed, "prop-cone", 0);
        for _ in 0..50 {
            let p = sampler.sample(&mut rng);
            prop_assert!(p.is_timelike_future(0.0));
            prop_assert!(sampler.density(&p) > 0.0);
        }
    }

    #[test]
    fn tube_proposal_stays_in_tube(z in arb_tube_point(), seed in 0u64..1_000) {
        let cfg = McConfig::new(seed, 64);
        let proposal = TubeProposal::new(&[z], &cfg).unwrap();
        let mut rng = substream(seed, "prop-tube", 0);
        for _ in 0..30 {
            let u = proposal.sample(&mut rng);
            prop_assert!(u.rr() > 0.0);
            prop_assert!(proposal.density(&u) > 0.0);
        }
    }

    #[test]
    fn random_tube_points_lie_in_tube(seed in 0u64..5_000) {
        let mut rng = substream(seed, "prop-random-tube", 0);
        let z = random_tube_point(&mut rng, 2.0, 0.3, 2.0, 1.0);
        prop_assert!(is_in_future_tube(&z.z()).is_some());
    }

    #[test]
    fn serde_round_trips_are_exact(z in arb_tube_point(), w in arb_tube_point(), lam in 0.3..3.0f64) {
        let json = serde_json::to_string(&z).unwrap();
        let z2: FutureTubePoint = serde_json::from_str(&json).unwrap();
        prop_assert_eq!(serde_json::to_string(&z2).unwrap(), json);

        let state = DensityState::uniform_mixture(vec![z, w]).unwrap();
        let s2 = DensityState::from_json(&state.to_json()).unwrap();
        prop_assert_eq!(s2.to_json(), state.to_json());

        let map = ConformalMap::dilatation(lam).unwrap();
        let mj = serde_json::to_string(&map).unwrap();
        let m2: ConformalMap = serde_json::from_str(&mj).unwrap();
        prop_assert_eq!(serde_json::to_string(&m2).unwrap(), mj);

        let region = Region::all();
        let r2 = Region::from_json(&region.to_json()).unwrap();
        prop_assert_eq!(r2.to_json(), region.to_json());
    }
}

#[test]
fn future_tube_rejects_spacelike_imaginary_part() {
    let bad = FutureTubePoint::new(
        RealFourVector::zero(),
        RealFourVector::new(0.5, 1.0, 0.0, 0.0),
    );
    assert!(bad.is_err());
    let past = FutureTubePoint::new(
        RealFourVector::zero(),
        RealFourVector::new(-1.0, 0.0, 0.0, 0.0),
    );
    assert!(past.is_err());
}
