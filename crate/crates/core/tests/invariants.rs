use num_complex::Complex;
use proptest::prelude::*;

use pnss_core::channel::{attenuation_length, transmission_efficiency};
use pnss_core::photonics::g2_zero_delay;
use pnss_core::receiver::{gamma_analytic, PulseAreas};
use pnss_core::sender::{simulate_sender_ode, theta};
use pnss_core::{
    mhz, Params64, PhotonObservables, PulseShape, SampledFunction, SenderTrajectory, State64,
    TimeGrid,
};

fn state() -> impl Strategy<Value = State64> {
    prop::array::uniform6(-1.0f64..1.0)
        .prop_filter("non-zero", |v| v.iter().map(|x| x * x).sum::<f64>() > 1e-3)
        .prop_map(|v| {
            State64::normalized(
                Complex::new(v[0], v[1]),
                Complex::new(v[2], v[3]),
                Complex::new(v[4], v[5]),
            )
            .unwrap()
        })
}

fn sender(c: &State64, points: usize) -> (SenderTrajectory<f64>, PhotonObservables<f64>) {
    let p = Params64::rb87_reference();
    let alpha1 = p.derive().unwrap().alpha1;
    let pulse = PulseShape::gaussian(0.0, 0.3e-6).unwrap();
    let grid = TimeGrid::centered(0.0, 1.8e-6, points).unwrap();
    let traj = SenderTrajectory::closed_form(theta(&pulse, alpha1, &grid), c);
    let obs = PhotonObservables::compute(&traj, &pulse, alpha1, c);
    (traj, obs)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn signal_to_noise_ignores_drive(omega in 1.0f64..50.0, delta in 60.0f64..400.0) {
        let mut p = Params64::rb87_reference();
        let base = p.derive().unwrap().r_sn;
        p.omega1 = mhz(omega);
        p.delta = mhz(delta);
        let d = p.derive().unwrap();
        prop_assert!((d.r_sn - base).abs() < 1e-12 * base);
        prop_assert!((d.g1 - p.g * p.omega1 / p.delta).abs() < 1e-9 * d.g1);
    }

    #[test]
    fn rates_scale_with_units(s in 0.1f64..10.0) {
        let p = Params64::rb87_reference();
        let mut q = p;
        q.g *= s;
        q.k *= s;
        q.gamma_sp *= s;
        q.omega1 *= s;
        q.delta *= s;
        let (a, b) = (p.derive().unwrap(), q.derive().unwrap());
        prop_assert!((b.alpha1 / a.alpha1 - s).abs() < 1e-12 * s);
        prop_assert!((b.g1 / a.g1 - s).abs() < 1e-12 * s);
        prop_assert!((b.r_sn / a.r_sn - 1.0).abs() < 1e-12);
    }

    #[test]
    fn sender_populations_stay_normalized(c in state()) {
        let (traj, obs) = sender(&c, 4001);
        prop_assert!(traj.populations.conservation_error() < 1e-10);
        for i in 0..obs.grid.len() {
            let total = obs.p0[i] + obs.p1[i] + obs.p2[i];
            prop_assert!((total - 1.0).abs() < 1e-10);
            prop_assert!((obs.n_out.samples()[i] - obs.p1[i] - 2.0 * obs.p2[i]).abs() < 1e-10);
            let v = obs.g2.values[i];
            prop_assert!(v >= 0.0);
        }
    }

    #[test]
    fn sender_observables_ignore_global_phase(c in state(), chi in -3.0f64..3.0) {
        let (_, a) = sender(&c, 2001);
        let (_, b) = sender(&c.with_global_phase(chi), 2001);
        for i in 0..a.grid.len() {
            prop_assert!((a.p1[i] - b.p1[i]).abs() < 1e-14);
            prop_assert!((a.p2[i] - b.p2[i]).abs() < 1e-14);
            prop_assert!((a.g2.values[i] - b.g2.values[i]).abs() < 1e-12);
        }
    }

    #[test]
    fn qubit_g2_never_exceeds_one(pm1 in 0.0f64..1.0) {
        let c = State64::from_populations(pm1, 1.0 - pm1, 0.0).unwrap();
        let (_, obs) = sender(&c, 4001);
        let g2 = g2_zero_delay(&obs.fluxes.modes, &c);
        prop_assert!(g2.values.iter().all(|v| *v <= 1.0 + 1e-9));
    }

    #[test]
    fn receiver_blocks_hold_for_any_areas(c in state(), eta in 0.0f64..7.0, zeta in 0.0f64..7.0) {
        let grid = TimeGrid::uniform(0.0, 1.0, 33).unwrap();
        let areas = PulseAreas {
            eta: SampledFunction::from_fn(grid, |t| eta * t),
            zeta: SampledFunction::from_fn(grid, |t| zeta * t * t),
        };
        let traj = gamma_analytic(&areas, &c, std::f64::consts::FRAC_PI_2).unwrap();
        let (e1, e2) = traj.block_norm_errors(&c);
        prop_assert!(e1 < 1e-12 && e2 < 1e-12);
    }

    #[test]
    fn two_photon_branch_pays_twice(l0 in 0.0f64..50.0, db in 0.05f64..5.0) {
        let l = attenuation_length(db).unwrap();
        let e1 = transmission_efficiency(l0, l, 1);
        let e2 = transmission_efficiency(l0, l, 2);
        prop_assert_eq!(e2, e1 * e1);
        prop_assert!(e2 <= e1 && e1 <= 1.0);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(6))]

    #[test]
    fn sender_ode_tracks_closed_form(c in state()) {
        let p = Params64::rb87_reference();
        let pulse = PulseShape::gaussian(0.0, 0.3e-6).unwrap();
        let grid = TimeGrid::centered(0.0, 1.8e-6, 12001).unwrap();
        let (traj, _) = sender(&c, 12001);
        let ode = simulate_sender_ode(&p, &pulse, &c, &grid).unwrap();
        prop_assert!(ode.max_deviation(&traj.populations) < 1e-6);
    }
}
