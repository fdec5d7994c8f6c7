use fracreg::ode::*;
use fracreg::parabolic::*;
use fracreg::regularity::*;
use fracreg::special::gamma;
use fracreg::*;
use proptest::prelude::*;
use std::sync::Arc;

fn spec() -> QuadratureSpec {
    QuadratureSpec::default()
}

fn tgf(t0: f64, t1: f64, step: f64, f: impl Fn(f64) -> f64) -> TimeGridFunction {
    TimeGridFunction::from_fn(t0, t1, step, HistorySpec::zero(), f).unwrap()
}

fn halves(n: i32) -> Vec<f64> {
    (0..n).map(|k| 0.5f64.powi(k + 1)).collect()
}

#[test]
fn seminorm_examples() {
    let c = tgf(-1.0, 1.0, 1.0 / 64.0, |_| 3.0);
    assert_eq!(holder_seminorm(&c, 0.5, (-1.0, 1.0)).unwrap().value, 0.0);
    let lin = tgf(-1.0, 1.0, 1.0 / 64.0, |t| t);
    assert!((holder_seminorm(&lin, 1.0, (-1.0, 1.0)).unwrap().value - 1.0).abs() < 1e-12);
    // |t|^{1/2} has seminorm exactly 1 at β = 1/2: pairs symmetric around 0 give √2, but
    // sup |√a − √b|/√|a − b| over same-sign pairs is 1.
    let root = tgf(0.0, 1.0, 1.0 / 1023.0, |t| t.abs().sqrt());
    let s = holder_seminorm(&root, 0.5, (0.0, 1.0)).unwrap();
    assert_eq!(s.stride, 1);
    assert!((s.value - 1.0).abs() < 0.02, "{}", s.value);
}

#[test]
fn seminorm_rejects_bad_input() {
    let u = tgf(-1.0, 0.0, 0.125, |t| t);
    assert!(holder_seminorm(&u, 0.0, (-1.0, 0.0)).is_err());
    assert!(holder_seminorm(&u, 1.5, (-1.0, 0.0)).is_err());
    assert!(holder_seminorm(&u, 0.5, (0.0, -1.0)).is_err());
    assert!(holder_seminorm(&u, 0.5, (-2.0, 0.0)).is_err());
}

#[test]
fn power_law_fit_is_exact_on_pure_powers() {
    let radii = halves(6);
    for &(a, k) in &[(1.0, 0.5), (3.7, 1.0), (0.2, 0.13), (10.0, 2.0)] {
        let osc: Vec<f64> = radii.iter().map(|r: &f64| a * r.powf(k)).collect();
        let e = fit_power_law(&radii, &osc).unwrap();
        assert!((e.exponent - k).abs() < 1e-10);
        assert!((e.constant / a - 1.0).abs() < 1e-10);
        assert!(e.residual < 1e-10);
    }
}

#[test]
fn power_law_fit_rejects_bad_radii() {
    let osc = [1.0, 0.5, 0.25, 0.125, 0.0625];
    assert!(fit_power_law(&[1.0, 0.5, 0.25], &osc[..3]).is_err());
    assert!(fit_power_law(&[1.0, 0.5, 0.3, 0.2, 0.1], &osc).is_err());
    assert!(fit_power_law(&[0.1, 0.2, 0.4, 0.8, 1.6], &osc).is_err());
    // Zero oscillations are dropped; fewer than four survivors is an error.
    let e = fit_power_law(&halves(5), &[1.0, 0.5, 0.25, 0.125, 0.0]).unwrap();
    assert_eq!(e.radii_used.len(), 4);
    assert!(fit_power_law(&halves(5), &[1.0, 0.5, 0.0, 0.125, 0.0]).is_err());
}

fn space_time(x_half: f64, nx: usize, eps: f64, f: impl Fn(f64, f64) -> f64) -> SpaceTimeGridFunction {
    SpaceTimeGridFunction::from_fn(x_half, nx, -2.0, 0.0, eps, SpatialTail::Constant(0.0), HistorySpec::zero(), f).unwrap()
}

#[test]
fn holder_exponent_of_synthetic_profiles() {
    let radii = halves(6);
    // σ = α/2 makes the cylinder depth equal to its radius.
    let root = space_time(1.0, 1025, 1.0 / 128.0, |x, _| x.abs().sqrt());
    let e = fit_holder_exponent(&root, 0.0, 0.0, &radii, 0.25, 0.5).unwrap();
    assert!((e.exponent - 0.5).abs() < 0.05, "{e:?}");
    let quad = space_time(1.0, 1025, 1.0 / 128.0, |x, _| x * x + x);
    let e = fit_holder_exponent(&quad, 0.0, 0.0, &radii, 0.25, 0.5).unwrap();
    assert!(e.exponent >= 0.95, "{e:?}");
}

#[test]
fn holder_exponent_preconditions() {
    let u = space_time(1.0, 65, 1.0 / 64.0, |x, _| x);
    // Smallest radius below 4h = 1/8.
    assert!(matches!(fit_holder_exponent(&u, 0.0, 0.0, &halves(5), 0.5, 0.5), Err(Error::Precondition(_))));
    // Ball leaves the grid.
    assert!(fit_holder_exponent(&u, 0.8, 0.0, &[1.0, 0.5, 0.25, 0.125], 0.5, 0.5).is_err());
}

#[test]
fn time_and_modulus_exponents() {
    // Oscillation over a half-open window of length s is s − ε on the grid.
    let u = space_time(1.0, 17, 1.0 / 256.0, |_, t| t + 2.0);
    let e = fit_time_exponent(&u, 0.0, 0.0, &halves(4), 0.25, 0.5).unwrap();
    assert!((e.exponent - 1.0).abs() < 0.05, "{e:?}");
    let v = tgf(-2.0, 0.0, 1.0 / 1024.0, |t| (t + 2.0).sqrt());
    let e = fit_modulus_exponent(&v, (-2.0, 0.0), &halves(6)).unwrap();
    assert!((e.exponent - 0.5).abs() < 0.02, "{e:?}");
    assert!(matches!(fit_modulus_exponent(&v, (-2.0, 0.0), &halves(9)), Err(Error::Precondition(_))));
}

#[test]
fn parabolic_solution_is_holder_at_an_interior_point() {
    let p = ParabolicProblem::new(
        TimeKernel::caputo(0.5).unwrap(),
        SpaceKernelFamily::fractional_laplacian(0.5).unwrap(),
        Arc::new(|x: f64, t: f64| (2.0 * x).cos() * (1.0 + 0.5 * t.sin())),
        2.0,
        65,
        -2.0,
        0.0,
        1.0 / 64.0,
    );
    let u = solve_parabolic(&p, &spec()).unwrap().u;
    let radii: Vec<f64> = (0..5).map(|k| 0.5f64.powf(0.5 * k as f64)).collect();
    let e = fit_holder_exponent(&u, 0.25, 0.0, &radii, 0.5, 0.5).unwrap();
    assert!(e.exponent > 0.0 && e.residual < 0.2, "{e:?}");
}

fn ode_family(kernel: KernelForm, rhs: TimeFn, sup: f64, n: f64) -> SweepFamily {
    SweepFamily::Ode(OdeSweepFamily { kernel, rhs, rhs_sup: sup, t_start: -2.0, t_end: 0.0, step: 1.0 / n, interval: (-0.5, 0.0), radii: halves(5) })
}

const ALPHAS: [f64; 5] = [0.5, 0.7, 0.9, 0.95, 0.99];

#[test]
fn zero_source_sweep_is_flat() {
    let r = alpha_sweep(&ode_family(KernelForm::Caputo, Arc::new(|_| 0.0), 1.0, 128.0), &ALPHAS, &spec()).unwrap();
    assert!(r.rows.iter().all(|row| row.constant == 0.0 && row.seminorm == 0.0));
    assert!(r.pass);
}

#[test]
fn unit_source_sweep_matches_the_closed_form() {
    let r = alpha_sweep(&ode_family(KernelForm::Caputo, Arc::new(|_| 1.0), 1.0, 256.0), &ALPHAS, &spec()).unwrap();
    assert!(r.pass && r.blowup_exponent < 0.5, "{r:?}");
    for row in &r.rows {
        let a = row.alpha;
        let exact = tgf(-0.5, 0.0, 1.0 / 256.0, |t| (t + 2.0).powf(a) / gamma(1.0 + a));
        let s = holder_seminorm(&exact, row.kappa, (-0.5, 0.0)).unwrap().value;
        assert!((row.seminorm / s - 1.0).abs() < 0.02, "α={a}: {} vs {s}", row.seminorm);
        assert!(row.constant < 1.0);
    }
}

#[test]
fn sweep_is_stable_under_refinement_and_kernel_change() {
    let rho = TimeModulation::CosLag { a: 1.5, b: 0.4, freq: 3.0 };
    let modulated = KernelForm::Modulated { lambda: 1.0, big_lambda: 2.0, rho };
    let run = |k: &KernelForm, n: f64| alpha_sweep(&ode_family(k.clone(), Arc::new(|_| 1.0), 1.0, n), &ALPHAS, &spec()).unwrap();
    let base = run(&KernelForm::Caputo, 128.0);
    let fine = run(&KernelForm::Caputo, 256.0);
    let m = run(&modulated, 128.0);
    assert!(m.pass);
    for i in 0..ALPHAS.len() {
        assert!((fine.rows[i].constant / base.rows[i].constant - 1.0).abs() < 0.2);
        assert!(m.rows[i].constant <= 2.0 * base.rows[i].constant);
    }
}

#[test]
fn sweep_rejects_bad_alphas() {
    let fam = ode_family(KernelForm::Caputo, Arc::new(|_| 1.0), 1.0, 64.0);
    assert!(alpha_sweep(&fam, &[0.7, 0.5], &spec()).is_err());
    assert!(alpha_sweep(&fam, &[0.5, 0.999], &spec()).is_err());
}

#[test]
fn sweep_csv_has_the_documented_header() {
    let r = alpha_sweep(&ode_family(KernelForm::Caputo, Arc::new(|_| 1.0), 1.0, 128.0), &[0.5, 0.9], &spec()).unwrap();
    let mut buf = Vec::new();
    r.write_csv(&mut buf).unwrap();
    let text = String::from_utf8(buf).unwrap();
    assert!(text.starts_with("alpha,kappa,constant,residual"));
    assert_eq!(text.lines().count(), 3);
}

#[test]
fn measure_probe_trivial_cases() {
    let a = 0.5;
    let up = tgf(-2.0, 0.0, 1.0 / 256.0, |t| t + 2.0);
    let r = measure_estimate_probe(&up, 0.0, 10.0, 1.0, 2.0, 1.0, 1.0, a, &spec()).unwrap();
    assert!(!r.rings.is_empty());
    assert!(r.rings.iter().all(|row| row.sublevel == 0.0 && row.c0_needed == 0.0));
    assert_eq!(r.first_k, Some(0));
    let flat = TimeGridFunction::from_fn(-2.0, 0.0, 1.0 / 256.0, HistorySpec::constant(1.0).unwrap(), |_| 1.0).unwrap();
    let r = measure_estimate_probe(&flat, 0.0, 0.0, 1.0, 2.0, 1.0, 0.0, a, &spec()).unwrap();
    assert_eq!(r.min_c0, 0.0);
    let bump = tgf(-2.0, 0.0, 1.0 / 256.0, |t| -(t + 1.0) * (t + 1.0));
    assert!(matches!(measure_estimate_probe(&bump, 0.0, 1.0, 1.0, 2.0, 1.0, 1.0, a, &spec()), Err(Error::Precondition(_))));
}

#[test]
fn measure_probe_on_a_solution() {
    let s = solve_discrete(&OdeProblem::new(TimeKernel::caputo(0.5).unwrap(), Arc::new(|_| 1.0), -2.0, 0.0, 1.0 / 512.0), &spec()).unwrap().solution;
    let r = measure_estimate_probe(&s, 0.0, 1.0, 1.0, 1.0, 1.0, 1.0, 0.5, &spec()).unwrap();
    assert!(r.min_c0.is_finite());
}

#[test]
fn lepsilon_trivial_cases() {
    let zero = tgf(-1.0, 0.0, 1.0 / 128.0, |_| 0.0);
    let r = lepsilon_probe(&zero, 1.0, 0.25, 1.0, 1.0, 2.0, 0.5, &spec()).unwrap();
    assert!(r.pass && r.curve.is_empty());
    let c = tgf(-1.0, 0.0, 1.0 / 128.0, |_| 0.7);
    let r = lepsilon_probe(&c, 1.0, 0.25, 1.0, 1.0, 2.0, 0.5, &spec()).unwrap();
    assert!(r.pass, "{r:?}");
    // A step curve: d must cover the full window just below the plateau.
    let big_a = 2.0 * 0.7 + 0.25f64.sqrt();
    assert!(r.d >= (0.7 / big_a).powf(r.epsilon) * (1.0 - 1e-9));
    let neg = tgf(-1.0, 0.0, 1.0 / 128.0, |t| t);
    assert!(matches!(lepsilon_probe(&neg, 1.0, 0.25, 1.0, 1.0, 2.0, 0.5, &spec()), Err(Error::Precondition(_))));
    let falling = tgf(-1.0, 0.0, 1.0 / 128.0, |t| -50.0 * t);
    assert!(matches!(lepsilon_probe(&falling, 0.0, 0.25, 1.0, 1.0, 2.0, 0.5, &spec()), Err(Error::HypothesesNotMet(_))));
}

fn memory_min(mu: f64, c1: f64, alpha: f64) -> f64 {
    let g = move |t: f64| if t <= -1.0 { mu } else { 0.0 };
    let m = solve_memory_ode(&TimeKernel::caputo(alpha).unwrap(), Arc::new(g), 1.0, c1, -2.0, 0.0, 1.0 / 128.0, &spec()).unwrap();
    min_on(&m.solution, -1.0, 0.0)
}

#[test]
fn memory_minimum_is_monotone_in_mass_and_damping() {
    for &a in &[0.5, 0.9] {
        let mus = [0.1, 0.5, 1.0];
        let c1s = [0.0, 1.0, 3.0];
        let table: Vec<Vec<f64>> = mus.iter().map(|&mu| c1s.iter().map(|&c| memory_min(mu, c, a)).collect()).collect();
        for i in 0..3 {
            for j in 0..3 {
                assert!(table[i][j] > 0.0);
                if i > 0 {
                    assert!(table[i][j] >= table[i - 1][j]);
                }
                if j > 0 {
                    assert!(table[i][j] <= table[i][j - 1]);
                }
            }
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn seminorm_shrinks_with_the_interval(c in prop::collection::vec(-1.0f64..1.0, 3), beta in 0.1f64..1.0, a in -1.0f64..-0.2, b in 0.2f64..1.0) {
        let f = move |t: f64| c[0] * (3.0 * t).sin() + c[1] * t.abs().sqrt() + c[2] * t * t;
        let u = tgf(-1.0, 1.0, 1.0 / 64.0, f);
        let outer = holder_seminorm(&u, beta, (-1.0, 1.0)).unwrap().value;
        let inner = holder_seminorm(&u, beta, (a, b)).unwrap().value;
        prop_assert!(inner <= outer + 1e-12);
    }

    #[test]
    fn seminorm_triangle_inequality(c in prop::collection::vec(-1.0f64..1.0, 4), beta in 0.1f64..1.0) {
        let u = tgf(-1.0, 1.0, 1.0 / 64.0, |t| c[0] * (2.0 * t).sin() + c[1] * t.abs().sqrt());
        let v = tgf(-1.0, 1.0, 1.0 / 64.0, |t| c[2] * t * t * t + c[3] * (t + 1.0).sqrt());
        let w = tgf(-1.0, 1.0, 1.0 / 64.0, |t| c[0] * (2.0 * t).sin() + c[1] * t.abs().sqrt() + c[2] * t * t * t + c[3] * (t + 1.0).sqrt());
        let s = |g: &TimeGridFunction| holder_seminorm(g, beta, (-1.0, 1.0)).unwrap().value;
        prop_assert!(s(&w) <= s(&u) + s(&v) + 1e-12);
    }

    #[test]
    fn power_law_fit_recovers_any_power(a in 0.01f64..100.0, k in 0.05f64..3.0, q in 0.3f64..0.9) {
        let radii: Vec<f64> = (0..6).map(|i| q.powi(i)).collect();
        let osc: Vec<f64> = radii.iter().map(|r| a * r.powf(k)).collect();
        let e = fit_power_law(&radii, &osc).unwrap();
        prop_assert!((e.exponent - k).abs() < 1e-10);
    }
}
