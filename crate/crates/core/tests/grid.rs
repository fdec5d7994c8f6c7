use fracreg::grid::{fmt17, oscillation};
use fracreg::*;
use proptest::prelude::*;

#[test]
fn zero_function_evaluates_to_zero_everywhere() {
    let u = TimeGridFunction::from_fn(-1.0, 0.0, 0.125, HistorySpec::zero(), |_| 0.0).unwrap();
    for t in [-7.0, -1.0, -0.3, 0.0] {
        assert_eq!(u.eval_with_history(t).unwrap(), 0.0);
    }
}

#[test]
fn constant_history_is_returned_before_the_grid() {
    let u = TimeGridFunction::from_fn(0.0, 1.0, 0.25, HistorySpec::constant(3.0).unwrap(), |_| 3.0).unwrap();
    assert_eq!(u.eval_with_history(-5.0).unwrap(), 3.0);
}

#[test]
fn midpoint_interpolation() {
    let eps = 0.1;
    let u = TimeGridFunction::new(0.0, eps, vec![0.0, 1.0], HistorySpec::zero()).unwrap();
    assert!((u.eval_with_history(eps / 2.0).unwrap() - 0.5).abs() < 1e-15);
}

#[test]
fn evaluation_past_the_end_is_rejected() {
    let u = TimeGridFunction::new(0.0, 0.1, vec![0.0, 1.0], HistorySpec::zero()).unwrap();
    assert!(matches!(u.eval_with_history(0.3), Err(Error::Invalid(_))));
}

#[test]
fn construction_rejects_bad_grids() {
    assert!(TimeGridFunction::new(0.0, 0.0, vec![1.0], HistorySpec::zero()).is_err());
    assert!(TimeGridFunction::new(0.0, 0.1, vec![f64::NAN], HistorySpec::zero()).is_err());
    assert!(TimeGridFunction::from_fn(0.0, -1.0, 0.1, HistorySpec::zero(), |_| 0.0).is_err());
    assert!(TimeGridFunction::from_fn(0.0, 1.0, 0.3, HistorySpec::zero(), |_| 0.0).is_err());
    assert!(HistorySpec::sampled(vec![0.0, 0.0], vec![1.0, 2.0], 0.0).is_err());
}

#[test]
fn node_count_matches_the_grid_length() {
    let u = TimeGridFunction::from_fn(-2.0, 0.0, 1.0 / 1024.0, HistorySpec::zero(), |t| t).unwrap();
    assert_eq!(u.len(), 2049);
    assert_eq!(u.t_end(), 0.0);
}

#[test]
fn sampled_history_interpolates_and_holds_its_ends() {
    let h = HistorySpec::sampled(vec![-3.0, -2.0], vec![1.0, 3.0], -1.0).unwrap();
    assert_eq!(h.eval(-4.0), -1.0);
    assert_eq!(h.eval(-2.5), 2.0);
    assert_eq!(h.eval(-1.0), 3.0);
    assert_eq!(h.sup_bound(), Some(3.0));
    assert_eq!(h.inf_bound(), -1.0);
}

#[test]
fn power_history_is_an_unbounded_envelope() {
    let h = HistorySpec::power(2.0, 0.25, 0.5, 1.0).unwrap();
    assert_eq!(h.eval(-1.0), 0.0);
    assert!((h.eval(-16.0) - 3.0).abs() < 1e-15);
    assert_eq!(h.sup_bound(), None);
    assert_eq!(h.growth_exponent(), 0.5);
    let r = h.time_rescaled(4.0);
    assert!((r.eval(-4.0) - h.eval(-16.0)).abs() < 1e-15);
}

#[test]
fn time_csv_has_header_and_round_trips() {
    let u = TimeGridFunction::from_fn(0.0, 0.3, 0.1, HistorySpec::zero(), |t| t / 3.0).unwrap();
    let mut buf = Vec::new();
    u.write_csv(&mut buf).unwrap();
    let text = String::from_utf8(buf).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("t,value"));
    for (j, line) in lines.enumerate() {
        let mut parts = line.split(',');
        let t: f64 = parts.next().unwrap().parse().unwrap();
        let v: f64 = parts.next().unwrap().parse().unwrap();
        assert_eq!(t, u.time(j));
        assert_eq!(v, u.value(j));
    }
}

#[test]
fn fmt17_round_trips() {
    for x in [0.1, 1.0 / 3.0, -2.5e-300, 123456789.123456789, 0.0] {
        assert_eq!(fmt17(x).parse::<f64>().unwrap(), x);
    }
}

#[test]
fn space_time_csv_is_time_major() {
    let u = SpaceTimeGridFunction::from_fn(1.0, 3, 0.0, 0.5, 0.5, SpatialTail::Constant(0.0), HistorySpec::zero(), |x, t| x + t).unwrap();
    let mut buf = Vec::new();
    u.write_csv(&mut buf).unwrap();
    let text = String::from_utf8(buf).unwrap();
    let rows: Vec<&str> = text.lines().collect();
    assert_eq!(rows[0], "x,t,value");
    assert_eq!(rows.len(), 1 + 6);
    let second: Vec<f64> = rows[2].split(',').map(|s| s.parse().unwrap()).collect();
    assert_eq!(second, vec![0.0, 0.0, 0.0]);
    let fourth: Vec<f64> = rows[4].split(',').map(|s| s.parse().unwrap()).collect();
    assert_eq!(fourth, vec![-1.0, 0.5, -0.5]);
}

#[test]
fn growth_tail_must_dominate_the_boundary() {
    let tail = SpatialTail::Growth { rate: 0.25, exponent: 0.5 };
    let ok = SpaceTimeGridFunction::from_fn(4.0, 9, 0.0, 1.0, 0.5, tail, HistorySpec::zero(), |_, _| 0.5);
    assert!(ok.is_ok());
    let bad = SpaceTimeGridFunction::from_fn(4.0, 9, 0.0, 1.0, 0.5, tail, HistorySpec::zero(), |_, _| 3.0);
    assert!(matches!(bad, Err(Error::Precondition(_))));
}

#[test]
fn value_at_uses_tail_outside_and_interpolation_inside() {
    let u = SpaceTimeGridFunction::from_fn(1.0, 5, 0.0, 1.0, 1.0, SpatialTail::Constant(-2.0), HistorySpec::zero(), |x, _| x).unwrap();
    assert_eq!(u.value_at(1.5, 0), -2.0);
    assert!((u.value_at(0.25, 1) - 0.25).abs() < 1e-15);
    let e = u.with_values(u.values().to_vec()).unwrap();
    let ext = SpaceTimeGridFunction::new(1.0, 5, 0.0, 1.0, e.values().to_vec(), SpatialTail::Extension, HistorySpec::zero()).unwrap();
    assert_eq!(ext.value_at(3.0, 0), 1.0);
    assert_eq!(ext.value_at(-3.0, 0), -1.0);
}

fn sqrt_abs_grid() -> SpaceTimeGridFunction {
    SpaceTimeGridFunction::from_fn(1.0, 257, -1.0, 0.0, 1.0 / 64.0, SpatialTail::Constant(1.0), HistorySpec::zero(), |x, _| x.abs().sqrt()).unwrap()
}

#[test]
fn oscillation_examples() {
    let c = SpaceTimeGridFunction::from_fn(1.0, 9, -1.0, 0.0, 0.25, SpatialTail::Constant(5.0), HistorySpec::zero(), |_, _| 5.0).unwrap();
    let q = Cylinder::new(0.0, 0.0, 0.5, 0.5, 0.5).unwrap();
    assert_eq!(oscillation(&c, &q).unwrap(), 0.0);

    let lin = SpaceTimeGridFunction::from_fn(1.0, 9, -1.0, 0.0, 0.25, SpatialTail::Constant(0.0), HistorySpec::zero(), |x, _| x).unwrap();
    let q1 = Cylinder::new(0.0, 0.0, 1.0, 0.5, 0.5).unwrap();
    assert!((oscillation(&lin, &q1).unwrap() - 2.0).abs() < 1e-15);

    // |x|^{1/2} over |x| ≤ 1/4: max 1/2 at the rim, min 0 at the centre.
    let q = Cylinder::new(0.0, 0.0, 0.25, 0.5, 0.5).unwrap();
    assert!((oscillation(&sqrt_abs_grid(), &q).unwrap() - 0.5).abs() < 1e-12);
}

#[test]
fn empty_cylinder_is_an_error() {
    let u = sqrt_abs_grid();
    let q = Cylinder::new(5.0, 0.0, 0.1, 0.5, 0.5).unwrap();
    assert!(oscillation(&u, &q).is_err());
}

#[test]
fn cylinder_depth_is_anisotropic() {
    let q = Cylinder::new(0.0, 0.0, 0.25, 0.5, 0.25).unwrap();
    assert!((q.depth() - 0.25f64.powi(4)).abs() < 1e-18);
    assert!(q.contains(0.25, 0.0));
    assert!(!q.contains(0.0, -q.depth()));
    assert!(Cylinder::new(0.0, 0.0, 0.0, 0.5, 0.5).is_err());
}

proptest! {
    #[test]
    fn eval_is_exact_on_nodes(vals in proptest::collection::vec(-1e3f64..1e3, 2..60), start in -5.0f64..5.0, step in 1e-3f64..1.0) {
        let u = TimeGridFunction::new(start, step, vals.clone(), HistorySpec::zero()).unwrap();
        for (j, v) in vals.iter().enumerate() {
            prop_assert_eq!(u.eval_with_history(u.time(j)).unwrap(), *v);
        }
    }

    #[test]
    fn interpolation_stays_between_neighbours(vals in proptest::collection::vec(-1e3f64..1e3, 2..40), frac in 0.0f64..1.0) {
        let u = TimeGridFunction::new(0.0, 0.5, vals.clone(), HistorySpec::zero()).unwrap();
        let t = frac * u.t_end();
        let v = u.eval_with_history(t).unwrap();
        let j = ((t / 0.5).floor() as usize).min(vals.len() - 2);
        let (lo, hi) = (vals[j].min(vals[j + 1]), vals[j].max(vals[j + 1]));
        prop_assert!(v >= lo - 1e-9 && v <= hi + 1e-9);
    }

    #[test]
    fn oscillation_is_monotone_shift_invariant_and_homogeneous(
        seed in proptest::collection::vec(-1.0f64..1.0, 9 * 9),
        r1 in 0.2f64..0.6, extra in 0.0f64..0.4, c in -10.0f64..10.0, k in 0.0f64..5.0,
    ) {
        let u = SpaceTimeGridFunction::new(1.0, 9, -1.0, 0.125, seed.clone(), SpatialTail::Constant(0.0), HistorySpec::zero()).unwrap();
        let q1 = Cylinder::new(0.0, 0.0, r1, 0.5, 0.5).unwrap();
        let q2 = Cylinder::new(0.0, 0.0, r1 + extra, 0.5, 0.5).unwrap();
        let o1 = oscillation(&u, &q1).unwrap();
        prop_assert!(o1 <= oscillation(&u, &q2).unwrap());
        let shifted = u.with_values(seed.iter().map(|v| v + c).collect()).unwrap();
        prop_assert!((oscillation(&shifted, &q1).unwrap() - o1).abs() < 1e-12);
        let scaled = u.with_values(seed.iter().map(|v| v * k).collect()).unwrap();
        prop_assert!((oscillation(&scaled, &q1).unwrap() - k * o1).abs() < 1e-12);
    }
}
