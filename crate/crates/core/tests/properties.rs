use std::f64::consts::TAU;

use proptest::prelude::*;
use pumpsim_core::laminate::{
    abd_matrix, actuation_deflection, cure_residual_state, plate_state, ActuationModel, LaminateStack,
    Material, Ply,
};
use pumpsim_core::power::{synthetic_power, LoadModel};
use pumpsim_core::pump::{calibrate, flow_rate, stroke_volume, trace_cycle, CalibrationSet, PumpParams};
use pumpsim_core::signal::{PhaseSchedule, Shape, DEFAULT_OFFSETS, SEAL_THRESHOLD, SEAL_TOLERANCE};

fn isotropic(e: f64, nu: f64, alpha: f64) -> Material {
    Material {
        e1: e,
        e2: e,
        g12: e / (2.0 * (1.0 + nu)),
        nu12: nu,
        alpha1: alpha,
        alpha2: alpha,
        d31: 0.0,
    }
}

/// Curvature of a two-layer strip under uniform temperature change, in
/// Timoshenko's bimetal form with `m = t1/t2`, `n = E1/E2`.
fn timoshenko(m: f64, n: f64, d_alpha: f64, delta_t: f64, h: f64) -> f64 {
    6.0 * (1.0 + m).powi(2) * d_alpha * delta_t
        / (h * (3.0 * (1.0 + m).powi(2) + (1.0 + m * n) * (m * m + 1.0 / (m * n))))
}

fn published() -> PumpParams {
    calibrate(&CalibrationSet::published()).unwrap()
}

fn passive_ply() -> impl Strategy<Value = Ply> {
    (prop::bool::ANY, 20e-6..200e-6, -90.0f64..90.0).prop_map(|(carbon, t, deg)| Ply {
        material: if carbon {
            Material::CARBON_EPOXY
        } else {
            Material::GLASS_EPOXY
        },
        thickness: t,
        angle: deg.to_radians(),
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn symmetric_layups_have_no_coupling(half in prop::collection::vec(passive_ply(), 1..5)) {
        let mut plies = half.clone();
        plies.extend(half.iter().rev().copied());
        let stack = LaminateStack::new(plies, 12e-3, 4e-3, 0).unwrap();
        let abd = abd_matrix(&stack).unwrap();
        prop_assert!(abd.b.norm() <= 1e-12 * abd.a.norm() * stack.thickness());
    }

    #[test]
    fn bimetal_curvature_matches_closed_form(m in 0.5f64..2.0, n in 0.1f64..10.0) {
        let (t2, e2, delta_t) = (0.5e-3, 70e9, 100.0);
        let (a1, a2) = (20e-6, 10e-6);
        let plies = vec![
            Ply::new(isotropic(n * e2, 0.3, a1), m * t2, 0.0).unwrap(),
            Ply::new(isotropic(e2, 0.3, a2), t2, 0.0).unwrap(),
        ];
        let stack = LaminateStack::new(plies, 10e-3, 2e-3, 0).unwrap();
        let kappa = cure_residual_state(&stack, delta_t).unwrap().kappa;
        let expected = timoshenko(m, n, a1 - a2, delta_t, stack.thickness());
        prop_assert!((kappa.x.abs() - expected).abs() <= 1e-3 * expected);
        prop_assert!((kappa.y - kappa.x).abs() <= 1e-9 * expected);
    }

    #[test]
    fn cure_and_voltage_superpose(v in -80.0f64..80.0, dt in -200.0f64..50.0) {
        let stack = LaminateStack::lipca_preset();
        let model = ActuationModel::linear();
        let both = plate_state(&stack, dt, v, &model).unwrap();
        let sum = plate_state(&stack, dt, 0.0, &model).unwrap() + plate_state(&stack, 0.0, v, &model).unwrap();
        let scale = both.kappa.norm().max(sum.kappa.norm());
        prop_assert!((both.kappa - sum.kappa).norm() <= 1e-10 * scale);
    }

    #[test]
    fn linear_actuation_is_odd_in_voltage(v in 0.1f64..80.0) {
        let stack = LaminateStack::lipca_preset();
        let model = ActuationModel::linear();
        let up = plate_state(&stack, 0.0, v, &model).unwrap().kappa;
        let down = plate_state(&stack, 0.0, -v, &model).unwrap().kappa;
        prop_assert!((up + down).norm() <= 1e-12 * up.norm());
    }

    #[test]
    fn linear_deflection_doubles_with_voltage(v in 1.0f64..80.0) {
        let stack = LaminateStack::lipca_preset();
        let model = ActuationModel::linear();
        let w1 = actuation_deflection(&stack, v, &model).unwrap();
        let w2 = actuation_deflection(&stack, 2.0 * v, &model).unwrap();
        prop_assert!((w2 / w1 - 2.0).abs() <= 1e-9);
    }

    #[test]
    fn deflection_is_monotone_for_nonnegative_beta(beta in 0.0f64..1e-6, v in 0.0f64..159.0) {
        let stack = LaminateStack::lipca_preset();
        let model = ActuationModel { beta, ..ActuationModel::linear() };
        let lo = actuation_deflection(&stack, v, &model).unwrap();
        let hi = actuation_deflection(&stack, v + 1.0, &model).unwrap();
        prop_assert!(hi >= lo);
    }

    #[test]
    fn positions_repeat_every_period(t in 0.0f64..1.0, f in 1.0f64..200.0) {
        let s = PhaseSchedule::balanced(160.0, f, Shape::Sine).unwrap();
        let (a, b) = (s.positions(t), s.positions(t + s.period()));
        for k in 0..3 {
            prop_assert!((a[k] - b[k]).abs() <= 1e-9);
        }
    }

    #[test]
    fn three_phase_sine_always_seals_one_chamber(t in 0.0f64..1.0) {
        let s = PhaseSchedule::balanced(160.0, 60.0, Shape::Sine).unwrap();
        let lowest = s.positions(t).into_iter().fold(f64::INFINITY, f64::min);
        prop_assert!(lowest <= SEAL_THRESHOLD + SEAL_TOLERANCE);
    }

    #[test]
    fn reverse_is_an_involution(a in 0.0f64..TAU, b in 0.0f64..TAU, c in 0.0f64..TAU) {
        prop_assume!((a - b).abs() > 1e-6 && (b - c).abs() > 1e-6 && (a - c).abs() > 1e-6);
        let s = PhaseSchedule::new(100.0, 30.0, Shape::Sine, [a, b, c]).unwrap();
        prop_assert_eq!(s.reverse().reverse(), s);
    }

    #[test]
    fn reversed_cycle_negates_net_volume(steps in 6usize..400, square in prop::bool::ANY, vpp in 41.0f64..160.0) {
        let shape = if square { Shape::Square } else { Shape::Sine };
        let s = PhaseSchedule::new(vpp, 60.0, shape, DEFAULT_OFFSETS).unwrap();
        let p = published();
        let fwd = trace_cycle(&s, &p, 30e-6, steps).unwrap().net_displaced;
        let rev = trace_cycle(&s.reverse(), &p, 30e-6, steps).unwrap().net_displaced;
        prop_assert_eq!(rev, -fwd);
    }

    #[test]
    fn flow_falls_with_backpressure(vpp in 0.0f64..160.0, f in 1.0f64..200.0, dp in 0.0f64..2000.0) {
        let p = published();
        let q0 = flow_rate(&p, vpp, f, dp).unwrap();
        let q1 = flow_rate(&p, vpp, f, dp + 10.0).unwrap();
        prop_assert!(q1 <= q0);
        prop_assert!(q0 >= 0.0);
    }

    #[test]
    fn flow_grows_with_voltage(vpp in 0.0f64..159.0, f in 1.0f64..200.0, dp in 0.0f64..2000.0) {
        let p = published();
        prop_assert!(flow_rate(&p, vpp + 1.0, f, dp).unwrap() >= flow_rate(&p, vpp, f, dp).unwrap());
    }

    #[test]
    fn load_line_is_linear_below_shut_off(vpp in 50.0f64..160.0, u in 0.0f64..1.0) {
        let p = published();
        let dp_max = pumpsim_core::pump::max_backpressure(&p, vpp);
        let dp = u * dp_max;
        let q0 = flow_rate(&p, vpp, 60.0, 0.0).unwrap();
        let q = flow_rate(&p, vpp, 60.0, dp).unwrap();
        prop_assert!((q - q0 * (1.0 - u)).abs() <= 1e-12 * q0.max(1e-30));
    }

    #[test]
    fn stroke_scales_linearly_with_deflection(d in 1e-7f64..1e-4, k in 0.1f64..10.0) {
        let p = published();
        let a = stroke_volume(&p, k * d);
        let b = k * stroke_volume(&p, d);
        prop_assert!((a - b).abs() <= 1e-12 * b);
    }

    #[test]
    fn power_scales_with_square_of_voltage(vpp in 10.0f64..80.0, k in 1.1f64..2.0) {
        let load = LoadModel { c_eff: 100e-9, tan_delta: 0.02, r_e: 1000.0 };
        let p1 = synthetic_power(&load, vpp, 60.0, 200).unwrap().total;
        let p2 = synthetic_power(&load, k * vpp, 60.0, 200).unwrap().total;
        prop_assert!((p2 / p1 - k * k).abs() <= 1e-9 * k * k);
    }
}
