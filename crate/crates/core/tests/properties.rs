use proptest::prelude::*;

use ralm_core::actor::{gate, modulate_with_draw, SamConfig};
use ralm_core::alm::{alm_fit_tree, importance_weights, AlmConfig, Dataset};
use ralm_core::critic::{Region, Rpp, RppConfig, StatePoint};
use ralm_core::fuzzy::FuzzySystem;
use ralm_core::grid::{extract_narrow_line, spread_of, GridSpec, InkWindow, Plane};
use ralm_core::learner::{filter_data, ActionPlaneSet, Transition};
use ralm_core::presets::linear_seed;

fn spec() -> GridSpec {
    GridSpec::new((-1.0, 1.0), (-2.0, 2.0), 12, 10).unwrap()
}

fn drop_strategy() -> impl Strategy<Value = (f64, f64, f64)> {
    (-1.2f64..1.2, -2.4f64..2.4, -2.0f64..2.0)
}

fn two_input_seed() -> FuzzySystem {
    linear_seed(&[(-1.0, 1.0), (-2.0, 2.0)], (-3.0, 3.0), &[1.5, -0.5], 17, 1.0).unwrap()
}

proptest! {
    #[test]
    fn superposition(a in drop_strategy(), b in drop_strategy(), r in 0usize..4) {
        let w = InkWindow::pyramid(r, r + 1);
        let mut both = Plane::new(spec()).unwrap();
        both.drop_ink(a.0, a.1, &w, a.2).unwrap();
        both.drop_ink(b.0, b.1, &w, b.2).unwrap();
        let mut pa = Plane::new(spec()).unwrap();
        pa.drop_ink(a.0, a.1, &w, a.2).unwrap();
        let mut pb = Plane::new(spec()).unwrap();
        pb.drop_ink(b.0, b.1, &w, b.2).unwrap();
        for ((s, x), y) in both.values().iter().zip(pa.values()).zip(pb.values()) {
            prop_assert!((s - (x + y)).abs() <= 1e-12);
        }
    }

    #[test]
    fn drops_stay_local(a in drop_strategy(), rx in 0usize..4, ry in 0usize..4, gaussian in any::<bool>()) {
        let w = if gaussian { InkWindow::gaussian(rx, ry) } else { InkWindow::pyramid(rx, ry) };
        let mut p = Plane::new(spec()).unwrap();
        p.drop_ink(a.0, a.1, &w, a.2).unwrap();
        let (cx, cy) = p.cell_of(a.0, a.1).unwrap();
        for iy in 0..p.spec().ny {
            for ix in 0..p.spec().nx {
                if ix.abs_diff(cx) > rx || iy.abs_diff(cy) > ry {
                    prop_assert_eq!(p.get(ix, iy), 0.0);
                }
            }
        }
    }

    #[test]
    fn line_is_scale_invariant(drops in prop::collection::vec(drop_strategy(), 1..30), k in 0.01f64..100.0) {
        let w = InkWindow::pyramid(1, 2);
        let mut p = Plane::new(spec()).unwrap();
        for d in &drops {
            p.drop_ink(d.0, d.1, &w, d.2.abs() + 0.1).unwrap();
        }
        let before = extract_narrow_line(&p).unwrap();
        p.scale(k);
        let after = extract_narrow_line(&p).unwrap();
        for (a, b) in before.y_at.iter().zip(&after.y_at) {
            prop_assert!((a - b).abs() <= 1e-9);
        }
    }

    #[test]
    fn single_row_columns_have_zero_spread(cells in prop::collection::vec((0usize..12, 0usize..10, 0.1f64..3.0), 1..12)) {
        let mut p = Plane::new(spec()).unwrap();
        let mut row_of = [None; 12];
        for (ix, iy, w) in cells {
            let iy = *row_of[ix].get_or_insert(iy);
            p.set(ix, iy, p.get(ix, iy) + w);
        }
        let line = extract_narrow_line(&p).unwrap();
        prop_assert!(spread_of(&p, &line).unwrap().aggregate.abs() <= 1e-9);
    }

    #[test]
    fn cell_of_inverts_node_coordinates(nx in 2usize..80, ny in 2usize..80, lo in -10.0f64..10.0, w in 0.01f64..50.0) {
        let s = GridSpec::new((lo, lo + w), (lo - 2.0 * w, lo), nx, ny).unwrap();
        for ix in 0..s.nx {
            for iy in [0, s.ny / 2, s.ny - 1] {
                prop_assert_eq!(s.cell_of(s.x_at(ix), s.y_at(iy)).unwrap(), (ix, iy));
            }
        }
    }

    #[test]
    fn filter_returns_a_subset(points in prop::collection::vec((-1.0f64..1.0, -1.0f64..1.0, -1.0f64..1.0), 1..60),
                               deltas in prop::collection::vec(-1.0f64..1.0, 60)) {
        let ranges = [(-1.0, 1.0), (-1.0, 1.0)];
        let mut aps = ActionPlaneSet::new(&ranges, (-1.0, 1.0), 9, 9).unwrap();
        let mut data = Dataset::new(ranges.to_vec(), (-1.0, 1.0)).unwrap();
        for (k, (x0, x1, a)) in points.iter().enumerate() {
            let tr = Transition { prev_inputs: vec![*x0, *x1], prev_action: *a, prev_point: StatePoint::new(0.0, 0.0), cur_point: StatePoint::new(0.0, 0.0) };
            aps.update(&tr, deltas[k], &InkWindow::pyramid(1, 1)).unwrap();
            data.push(&[*x0, *x1], *a).unwrap();
        }
        if let Ok(kept) = filter_data(&data, &aps) {
            // kept samples appear in the original, in order
            let mut it = data.samples().iter();
            for s in kept.samples() {
                prop_assert!(it.any(|o| o == s));
            }
        }
    }

    #[test]
    fn td_never_moves_fixed_regions(steps in prop::collection::vec((-1.0f64..1.0, -0.1f64..0.1, -1.0f64..1.0, -0.1f64..0.1), 1..200), r in 0usize..4) {
        let cfg = RppConfig { window: InkWindow::pyramid(r, r), nx: 20, ny: 20, ..RppConfig::default() };
        let mut rpp = Rpp::new(cfg.clone()).unwrap();
        for (e0, c0, e1, c1) in steps {
            let prev = StatePoint::new(e0, c0);
            let cur = StatePoint::new(e1, c1);
            let before = rpp.value(cur).unwrap() - rpp.value(prev).unwrap();
            let delta = rpp.td_update(prev, cur).unwrap();
            prop_assert_eq!(delta > 0.0, before > 0.0);
        }
        let spec = *rpp.plane().spec();
        for iy in 0..spec.ny {
            for ix in 0..spec.nx {
                let v = rpp.plane().get(ix, iy);
                match rpp.region(ix, iy) {
                    Region::Reward => prop_assert_eq!(v, 1.0),
                    Region::Penalty => prop_assert_eq!(v, cfg.penalty_value),
                    Region::Play => prop_assert!((-1.0..=1.0).contains(&v)),
                }
            }
        }
    }

    #[test]
    fn gate_decreases_with_critic_value(alpha in 0.01f64..10.0, a in -1.0f64..1.0, b in -1.0f64..1.0) {
        prop_assume!(a < b);
        prop_assert!(gate(alpha, a) > gate(alpha, b));
        prop_assert_eq!(gate(alpha, 1.0), 0.0);
    }

    #[test]
    fn best_critic_value_passes_action_through(asn in -1e6f64..1e6, z in -10.0f64..10.0, var in 0.0f64..1e4, alpha in 0.01f64..10.0) {
        let cfg = SamConfig { var, alpha, seed: 0 };
        prop_assert_eq!(modulate_with_draw(asn, 1.0, &cfg, z).to_bits(), asn.to_bits());
    }

    #[test]
    fn importance_weights_form_a_distribution(spreads in prop::collection::vec(0.0f64..5.0, 1..6)) {
        let w = importance_weights(&spreads, 1e-6);
        prop_assert!((w.iter().sum::<f64>() - 1.0).abs() <= 1e-12);
        for i in 0..w.len() {
            for j in 0..w.len() {
                if spreads[i] < spreads[j] {
                    prop_assert!(w[i] >= w[j]);
                }
            }
        }
    }

    #[test]
    fn lower_threshold_never_loses_rules(k in 0.5f64..6.0, hi in 0.005f64..0.2, frac in 0.0f64..1.0) {
        let mut d = Dataset::new(vec![(-1.0, 1.0)], (-1.0, 1.0)).unwrap();
        for i in 0..201 {
            let x = -1.0 + i as f64 / 100.0;
            d.push(&[x], (k * x).sin()).unwrap();
        }
        let fit = |t: f64| alm_fit_tree(&d, &AlmConfig { spread_threshold: t, max_depth: 4, ..AlmConfig::default() }).unwrap().0.leaves();
        prop_assert!(fit(hi * frac + 1e-4) >= fit(hi + 1e-4));
    }

    #[test]
    fn inference_is_bounded(x0 in -3.0f64..3.0, x1 in -5.0f64..5.0) {
        let fs = two_input_seed();
        let y = fs.infer(&[x0, x1]).unwrap();
        prop_assert!((-3.0..=3.0).contains(&y));
    }

    #[test]
    fn unit_reward_scaling_is_identity(x0 in -1.0f64..1.0, x1 in -2.0f64..2.0) {
        let fs = two_input_seed();
        let same = fs.scale_for_reward(&[(-1.0, 1.0), (-2.0, 2.0)]).unwrap();
        prop_assert_eq!(fs.infer(&[x0, x1]).unwrap(), same.infer(&[x0, x1]).unwrap());
    }

    #[test]
    fn reward_scaling_composes(x0 in -0.1f64..0.1, x1 in -0.2f64..0.2) {
        let fs = two_input_seed();
        let once = fs.scale_for_reward(&[(-0.5, 0.5), (-1.0, 1.0)]).unwrap();
        let twice = once.scale_for_reward(&[(-0.1, 0.1), (-0.2, 0.2)]).unwrap();
        let direct = fs.scale_for_reward(&[(-0.1, 0.1), (-0.2, 0.2)]).unwrap();
        prop_assert!((twice.infer(&[x0, x1]).unwrap() - direct.infer(&[x0, x1]).unwrap()).abs() <= 1e-12);
    }
}
