//! The six experiment kinds. Each writes its CSV artifacts into the output
//! directory and returns a verdict plus summary entries for the manifest.

use crate::config::{Config, Experiment};
use anyhow::{Context, Result};
use fracreg::fracops::{pucci_time_with, FnSlice, SpaceStencil, TimeStencil};
use fracreg::ode::*;
use fracreg::parabolic::*;
use fracreg::regularity::*;
use fracreg::grid::fmt17;
use fracreg::{HistorySpec, Sign, TimeGridFunction, TimeKernel};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::path::Path;
use std::sync::Arc;

pub struct Outcome {
    pub pass: bool,
    pub summary: Vec<(String, String)>,
    pub artifacts: Vec<String>,
}

impl Outcome {
    fn new(pass: bool) -> Self {
        Self { pass, summary: Vec::new(), artifacts: Vec::new() }
    }

    fn note(&mut self, key: &str, value: impl ToString) {
        self.summary.push((key.to_string(), value.to_string()));
    }
}

pub fn run(cfg: &Config, out: &Path) -> Result<Outcome> {
    match cfg.experiment {
        Experiment::SolveOde => solve_ode(cfg, out),
        Experiment::SolveParabolic => solve_parab(cfg, out),
        Experiment::EstimateHolder => estimate_holder(cfg, out),
        Experiment::SweepAlpha => sweep_alpha(cfg, out),
        Experiment::ProbeMeasure => probe_measure(cfg, out),
        Experiment::VerifyInvariants => verify_invariants(cfg, out),
    }
}

fn ode_problem(cfg: &Config) -> OdeProblem {
    let p = &cfg.raw.problem;
    OdeProblem::new(cfg.kernel.clone(), cfg.time_rhs(), p.t_start, p.t_end, p.step)
        .with_history(cfg.history.clone())
        .with_damping(p.damping)
        .with_source_scale(p.source_scale)
}

fn parabolic_problem(cfg: &Config) -> ParabolicProblem {
    let p = &cfg.raw.problem;
    let s = cfg.raw.space.as_ref().expect("validated: space block present");
    let family = cfg.family.clone().expect("validated: family built");
    ParabolicProblem::new(cfg.kernel.clone(), family, cfg.space_time_rhs(), s.x_half_width, s.nx, p.t_start, p.t_end, p.step)
        .with_tail(cfg.tail)
        .with_history(cfg.history.clone())
}

fn save(out: &Path, name: &str, o: &mut Outcome, write: impl FnOnce(&Path) -> fracreg::Result<()>) -> Result<()> {
    let path = out.join(name);
    write(&path).with_context(|| format!("writing {}", path.display()))?;
    o.artifacts.push(name.to_string());
    Ok(())
}

fn csv_writer(out: &Path, name: &str, o: &mut Outcome) -> Result<csv::Writer<std::fs::File>> {
    let path = out.join(name);
    o.artifacts.push(name.to_string());
    csv::Writer::from_path(&path).with_context(|| format!("creating {}", path.display()))
}

fn check_finite(name: &str, values: &[f64]) -> Result<()> {
    if let Some(v) = values.iter().find(|v| !v.is_finite()) {
        anyhow::bail!(fracreg::Error::Invalid(format!("{name}: non-finite value {v} produced")));
    }
    Ok(())
}

fn solve_ode(cfg: &Config, out: &Path) -> Result<Outcome> {
    let p = ode_problem(cfg);
    let s = solve_discrete(&p, &cfg.quadrature)?;
    check_finite("solution", s.solution.values())?;
    let f = cfg.time_rhs();
    let c0 = cfg.raw.problem.source_scale;
    let res = s.max_relative_residual(&|t| c0 * f(t));
    let mut o = Outcome::new(res < 1e-8);
    save(out, "solution.csv", &mut o, |path| s.solution.save_csv(path))?;
    o.note("nodes", s.solution.len());
    o.note("value_at_end", fmt17(s.solution.value(s.solution.len() - 1)));
    o.note("max_relative_residual", fmt17(res));
    Ok(o)
}

fn solve_parab(cfg: &Config, out: &Path) -> Result<Outcome> {
    let p = parabolic_problem(cfg);
    let s = solve_parabolic(&p, &cfg.quadrature)?;
    check_finite("solution", s.u.values())?;
    let fam = &p.family;
    let f = p.rhs.clone();
    let rep = residual_sandwich(&s.u, &*f, fam.sigma(), fam.lambda(), fam.big_lambda(), &p.time_kernel, &cfg.quadrature)?;
    let mut o = Outcome::new(rep.pass());
    save(out, "solution.csv", &mut o, |path| s.u.save_csv(path))?;
    o.note("grid", format!("{}x{}", s.u.nx(), s.u.nt()));
    o.note("max_abs_residual", fmt17(s.max_abs_residual()));
    o.note("max_policy_sweeps", s.policy_sweeps.iter().max().copied().unwrap_or(0));
    o.note("sandwich_nodes", rep.nodes_checked);
    o.note("sandwich_upper_violations", rep.upper_violations);
    o.note("sandwich_lower_violations", rep.lower_violations);
    o.note("sandwich_max_upper_excess", fmt17(rep.max_upper_excess));
    o.note("sandwich_min_lower_margin", fmt17(rep.min_lower_margin));
    Ok(o)
}

fn estimate_holder(cfg: &Config, out: &Path) -> Result<Outcome> {
    let h = cfg.raw.holder.as_ref().expect("validated: holder block present");
    let radii = h.radii.values();
    let p = &cfg.raw.problem;
    let t0 = h.t0.unwrap_or(p.t_end);
    let mut fits = Vec::new();
    if cfg.raw.space.is_some() {
        let u = solve_parabolic(&parabolic_problem(cfg), &cfg.quadrature)?.u;
        let sigma = cfg.family.as_ref().expect("validated").sigma();
        let alpha = cfg.kernel.alpha();
        fits.push(("space-time", fit_holder_exponent(&u, h.x0, t0, &radii, sigma, alpha)?));
        fits.push(("time", fit_time_exponent(&u, h.x0, t0, &radii, sigma, alpha)?));
    } else {
        let u = solve_discrete(&ode_problem(cfg), &cfg.quadrature)?.solution;
        let [a, b] = h.interval.unwrap_or([p.t_end - 0.25 * (p.t_end - p.t_start), p.t_end]);
        fits.push(("time", fit_modulus_exponent(&u, (a, b), &radii)?));
    }
    let main = &fits[0].1;
    let mut o = Outcome::new(main.exponent > 0.0 && main.residual < 0.2);
    let mut w = csv_writer(out, "holder.csv", &mut o)?;
    w.write_record(["direction", "radius", "oscillation"])?;
    for (dir, e) in &fits {
        for (r, osc) in e.radii_used.iter().zip(&e.oscillations) {
            w.write_record([dir.to_string(), fmt17(*r), fmt17(*osc)])?;
        }
    }
    w.flush()?;
    for (dir, e) in &fits {
        o.note(&format!("{dir}_exponent"), fmt17(e.exponent));
        o.note(&format!("{dir}_constant"), fmt17(e.constant));
        o.note(&format!("{dir}_fit_residual"), fmt17(e.residual));
    }
    Ok(o)
}

fn sweep_alpha(cfg: &Config, out: &Path) -> Result<Outcome> {
    let s = cfg.raw.sweep.as_ref().expect("validated: sweep block present");
    let p = &cfg.raw.problem;
    let rhs_sup = s.rhs_sup.unwrap_or_else(|| cfg.rhs_sup());
    let family = match (&cfg.raw.space, &cfg.family) {
        (Some(sp), Some(fam)) => SweepFamily::Parabolic(ParabolicSweepFamily {
            kernel: cfg.kernel_form.clone(),
            family: fam.clone(),
            rhs: cfg.space_time_rhs(),
            rhs_sup,
            x_half_width: sp.x_half_width,
            nx: sp.nx,
            t_start: p.t_start,
            t_end: p.t_end,
            step: p.step,
            tail: cfg.tail,
            x0: s.x0,
            t0: s.t0.unwrap_or(p.t_end),
            radii: s.radii.values(),
        }),
        _ => {
            let [a, b] = s.interval.unwrap_or([p.t_end - 0.25 * (p.t_end - p.t_start), p.t_end]);
            SweepFamily::Ode(OdeSweepFamily {
                kernel: cfg.kernel_form.clone(),
                rhs: cfg.time_rhs(),
                rhs_sup,
                t_start: p.t_start,
                t_end: p.t_end,
                step: p.step,
                interval: (a, b),
                radii: s.radii.values(),
            })
        }
    };
    let r = alpha_sweep(&family, &s.alphas, &cfg.quadrature)?;
    let mut o = Outcome::new(r.pass);
    save(out, "sweep.csv", &mut o, |path| {
        let mut f = std::io::BufWriter::new(std::fs::File::create(path)?);
        r.write_csv(&mut f)
    })?;
    o.note("family", r.family.clone());
    o.note("kappa_min", fmt17(r.kappa_min));
    o.note("blowup_exponent", fmt17(r.blowup_exponent));
    Ok(o)
}

fn probe_measure(cfg: &Config, out: &Path) -> Result<Outcome> {
    let pr = cfg.raw.probe.clone().unwrap_or(crate::config::ProbeBlock { t0: None, big_m: 1.0, c0: 1.0, lepsilon: None });
    let u = solve_discrete(&ode_problem(cfg), &cfg.quadrature)?.solution;
    let t0 = pr.t0.unwrap_or(u.t_end());
    let f = cfg.time_rhs();
    let k = &cfg.raw.kernel;
    let (lam, big) = (k.lambda, k.big_lambda);
    let alpha = cfg.kernel.alpha();
    let rep = measure_estimate_probe(&u, t0, cfg.raw.problem.source_scale * f(t0), lam, big, pr.big_m, pr.c0, alpha, &cfg.quadrature)?;
    let mut pass = rep.first_k.is_some();
    let mut o = Outcome::new(true);
    let mut w = csv_writer(out, "rings.csv", &mut o)?;
    w.write_record(["k", "radius", "sublevel", "ring", "c0_needed"])?;
    for r in &rep.rings {
        w.write_record([r.k.to_string(), fmt17(r.radius), fmt17(r.sublevel), fmt17(r.ring), fmt17(r.c0_needed)])?;
    }
    w.flush()?;
    o.note("rings", rep.rings.len());
    o.note("first_k", rep.first_k.map_or("none".to_string(), |k| k.to_string()));
    o.note("min_c0", fmt17(rep.min_c0));
    if let Some(l) = &pr.lepsilon {
        let le = lepsilon_probe(&u, l.c0, l.r, l.eps0, lam, big, alpha, &cfg.quadrature)?;
        pass &= le.pass;
        let mut w = csv_writer(out, "lepsilon.csv", &mut o)?;
        w.write_record(["level", "measure"])?;
        for (t, m) in &le.curve {
            w.write_record([fmt17(*t), fmt17(*m)])?;
        }
        w.flush()?;
        o.note("lepsilon_d", fmt17(le.d));
        o.note("lepsilon_epsilon", fmt17(le.epsilon));
        o.note("lepsilon_violation", fmt17(le.violation));
    }
    o.pass = pass;
    Ok(o)
}

// ------------------------------------------------------------ invariants ----

type Profile = Vec<(f64, f64, f64)>;

fn random_profile(r: &mut ChaCha8Rng) -> Profile {
    (0..r.gen_range(1..4)).map(|_| (r.gen_range(-1.0..1.0), r.gen_range(0.2..6.0), r.gen_range(0.0..6.3))).collect()
}

fn eval(p: &Profile, t: f64) -> f64 {
    p.iter().map(|&(a, w, ph)| a * (w * t + ph).sin()).sum()
}

struct Suite {
    name: &'static str,
    trials: usize,
    failures: usize,
    skipped: bool,
}

fn verify_invariants(cfg: &Config, out: &Path) -> Result<Outcome> {
    let trials = cfg.raw.invariants.as_ref().map_or(20, |i| i.trials);
    let seed = cfg.raw.seed;
    let rng = |salt: u64| ChaCha8Rng::seed_from_u64(seed.wrapping_mul(0x9e37_79b9_7f4a_7c15).wrapping_add(salt));
    let suites = vec![
        comparison_suite(cfg, trials, &mut rng(1))?,
        time_pucci_suite(cfg, trials, &mut rng(2))?,
        space_pucci_suite(cfg, trials, &mut rng(3))?,
        envelope_suite(cfg, trials, &mut rng(4))?,
        energy_suite(cfg, trials, &mut rng(5))?,
        memory_suite(cfg, trials, &mut rng(6))?,
    ];
    let pass = suites.iter().all(|s| s.failures == 0);
    let mut o = Outcome::new(pass);
    let mut w = csv_writer(out, "invariants.csv", &mut o)?;
    w.write_record(["suite", "trials", "failures", "status"])?;
    for s in &suites {
        let status = if s.skipped {
            "skipped"
        } else if s.failures == 0 {
            "pass"
        } else {
            "fail"
        };
        w.write_record([s.name.to_string(), s.trials.to_string(), s.failures.to_string(), status.to_string()])?;
        o.note(&format!("suite_{}", s.name), status);
    }
    w.flush()?;
    Ok(o)
}

fn comparison_suite(cfg: &Config, trials: usize, r: &mut ChaCha8Rng) -> Result<Suite> {
    let base = ode_problem(cfg);
    let n = fracreg::grid::node_count(base.t_start, base.t_end, base.step)?;
    let stencil = TimeStencil::new(&cfg.kernel, base.t_start, base.step, n, &cfg.quadrature)?;
    let h0 = cfg.history.eval(base.t_start - 1.0);
    let constant_history = matches!(cfg.history.kind(), fracreg::HistoryKind::Zero | fracreg::HistoryKind::Constant(_));
    let mut failures = 0;
    for _ in 0..trials {
        // f₁ = f + p₁ ≤ f₂ = f₁ + |p₂|, φ₁ ≤ φ₂.
        let (p1, p2) = (random_profile(r), random_profile(r));
        let dh = if constant_history { r.gen_range(0.0..1.0) } else { 0.0 };
        let f = base.rhs.clone();
        let f1: TimeFn = Arc::new(move |t| f(t) + eval(&p1, t));
        let f1c = f1.clone();
        let f2: TimeFn = Arc::new(move |t| f1c(t) + eval(&p2, t).abs());
        let mut a = base.clone();
        a.rhs = f1;
        let mut b = base.clone();
        b.rhs = f2;
        if constant_history {
            a.history = HistorySpec::constant(h0)?;
            b.history = HistorySpec::constant(h0 + dh)?;
        }
        let v1 = solve_with_stencil(&a, &stencil)?.solution;
        let v2 = solve_with_stencil(&b, &stencil)?.solution;
        if (0..v1.len()).any(|j| v1.value(j) > v2.value(j) + 4.0 * f64::EPSILON * (1.0 + v2.value(j).abs())) {
            failures += 1;
        }
    }
    Ok(Suite { name: "comparison", trials, failures, skipped: false })
}

fn close(a: f64, b: f64, scale: f64) -> bool {
    (a - b).abs() <= 1e-10 * (1.0 + scale)
}

fn le(a: f64, b: f64, scale: f64) -> bool {
    a <= b + 1e-10 * (1.0 + scale)
}

/// The five Pucci relations for values `m(u, ±)`, `m(v, ±)`, `m(u+v, ±)`,
/// `m(−u, +)` and `m(cu, ±)`.
#[allow(clippy::too_many_arguments)]
fn pucci_relations(up: f64, um: f64, vp: f64, vm: f64, wp: f64, wm: f64, neg_up: f64, cup: f64, cum: f64, c: f64) -> bool {
    let s = up.abs() + um.abs() + vp.abs() + vm.abs();
    le(um, up, s)
        && close(um, -neg_up, s)
        && close(cup, c * up, c * s)
        && close(cum, c * um, c * s)
        && le(up + vm, wp, s)
        && le(wp, up + vp, s)
        && le(um + vm, wm, s)
        && le(wm, um + vp, s)
}

fn band(cfg: &Config) -> (f64, f64) {
    let k = &cfg.raw.kernel;
    if k.big_lambda > k.lambda {
        (k.lambda, k.big_lambda)
    } else {
        (1.0, 2.0)
    }
}

fn time_pucci_suite(cfg: &Config, trials: usize, r: &mut ChaCha8Rng) -> Result<Suite> {
    let p = &cfg.raw.problem;
    let n = fracreg::grid::node_count(p.t_start, p.t_end, p.step)?;
    let reference = TimeKernel::caputo(cfg.kernel.alpha())?;
    let st = TimeStencil::new(&reference, p.t_start, p.step, n, &cfg.quadrature)?;
    let (lam, big) = band(cfg);
    let mut failures = 0;
    for _ in 0..trials {
        let (pu, pv) = (random_profile(r), random_profile(r));
        let (hu, hv) = (r.gen_range(-1.0..1.0), r.gen_range(-1.0..1.0));
        let c = r.gen_range(0.0..5.0);
        let j = r.gen_range(1..n);
        let mk = |f: &dyn Fn(f64) -> f64, h: f64| TimeGridFunction::from_fn(p.t_start, p.t_end, p.step, HistorySpec::constant(h)?, f);
        let u = mk(&|t| eval(&pu, t), hu)?;
        let v = mk(&|t| eval(&pv, t), hv)?;
        let w = mk(&|t| eval(&pu, t) + eval(&pv, t), hu + hv)?;
        let neg = mk(&|t| -eval(&pu, t), -hu)?;
        let cu = mk(&|t| c * eval(&pu, t), c * hu)?;
        let m = |g: &TimeGridFunction, s| pucci_time_with(&st, g, lam, big, s, j);
        let ok = pucci_relations(
            m(&u, Sign::Plus)?,
            m(&u, Sign::Minus)?,
            m(&v, Sign::Plus)?,
            m(&v, Sign::Minus)?,
            m(&w, Sign::Plus)?,
            m(&w, Sign::Minus)?,
            m(&neg, Sign::Plus)?,
            m(&cu, Sign::Plus)?,
            m(&cu, Sign::Minus)?,
            c,
        );
        failures += usize::from(!ok);
    }
    Ok(Suite { name: "pucci-time", trials, failures, skipped: false })
}

fn space_pucci_suite(cfg: &Config, trials: usize, r: &mut ChaCha8Rng) -> Result<Suite> {
    let (sigma, lam, big) = match &cfg.family {
        Some(f) if f.big_lambda() > f.lambda() => (f.sigma(), f.lambda(), f.big_lambda()),
        Some(f) => (f.sigma(), 1.0, 2.0),
        None => (0.5, 1.0, 2.0),
    };
    let h = 1.0 / 32.0;
    let st = SpaceStencil::new(sigma, h, 64, 0.0, &cfg.quadrature)?;
    let mut failures = 0;
    for _ in 0..trials {
        let (pu, pv) = (random_profile(r), random_profile(r));
        let c = r.gen_range(0.0..5.0);
        let x = r.gen_range(-1.0..1.0);
        let m = |f: &dyn Fn(f64) -> f64, s| st.apply_pucci(&FnSlice { f, x, h }, lam, big, s);
        let u = |z| eval(&pu, z);
        let v = |z| eval(&pv, z);
        let w = |z| eval(&pu, z) + eval(&pv, z);
        let ok = pucci_relations(
            m(&u, Sign::Plus),
            m(&u, Sign::Minus),
            m(&v, Sign::Plus),
            m(&v, Sign::Minus),
            m(&w, Sign::Plus),
            m(&w, Sign::Minus),
            m(&|z| -u(z), Sign::Plus),
            m(&|z| c * u(z), Sign::Plus),
            m(&|z| c * u(z), Sign::Minus),
            c,
        );
        failures += usize::from(!ok);
    }
    Ok(Suite { name: "pucci-space", trials, failures, skipped: false })
}

fn envelope_suite(cfg: &Config, trials: usize, r: &mut ChaCha8Rng) -> Result<Suite> {
    let p = &cfg.raw.problem;
    let mut failures = 0;
    for _ in 0..trials {
        // Random upper semicontinuous step profile with constant history.
        let jumps: Vec<(f64, f64)> = (0..r.gen_range(1..8)).map(|_| (r.gen_range(p.t_start..p.t_end), r.gen_range(-1.0..1.0))).collect();
        let hist = r.gen_range(-1.0..1.0);
        let u = TimeGridFunction::from_fn(p.t_start, p.t_end, p.step, HistorySpec::constant(hist)?, |t| {
            hist + jumps.iter().filter(|(s, _)| t >= *s).map(|(_, a)| a).sum::<f64>()
        })?;
        let sup = u.sup_abs().max(hist.abs());
        let e1 = r.gen_range(0.01..0.3);
        let e2 = e1 + r.gen_range(0.0..0.3);
        let up = sup_convolution(&u, e1)?;
        let up2 = sup_convolution(&u, e2)?;
        let down = inf_convolution(&u, e1)?;
        let mut ok = true;
        for j in 0..u.len() {
            let (t, ue) = (u.time(j), up.values.value(j));
            let ts = up.argmax[j];
            ok &= ts <= t && u.eval_with_history(ts)? + (ts - t) / e1 + e1 == ue;
            ok &= ue >= u.value(j) + e1;
            ok &= ue <= up2.values.value(j);
            ok &= t - ts <= 2.0 * e1 * sup;
            ok &= j == 0 || ue - up.values.value(j - 1) >= -u.step() / e1 - 1e-15;
            ok &= down.values.value(j) <= u.value(j) - e1;
        }
        failures += usize::from(!ok);
    }
    Ok(Suite { name: "envelopes", trials, failures, skipped: false })
}

fn energy_suite(cfg: &Config, trials: usize, r: &mut ChaCha8Rng) -> Result<Suite> {
    if !cfg.kernel.is_symmetric() {
        return Ok(Suite { name: "energy", trials: 0, failures: 0, skipped: true });
    }
    let p = &cfg.raw.problem;
    let mut failures = 0;
    for _ in 0..trials {
        let q = random_profile(r);
        let f = move |t: f64| eval(&q, t).abs();
        let v = solve_discrete(&OdeProblem::new(cfg.kernel.clone(), Arc::new(f.clone()), p.t_start, p.t_end, p.step), &cfg.quadrature)?.solution;
        let rep = divergence_energy_check(&v, &f, &cfg.kernel, &cfg.quadrature, 8)?;
        failures += usize::from(!rep.pass);
    }
    Ok(Suite { name: "energy", trials, failures, skipped: false })
}

fn memory_suite(cfg: &Config, trials: usize, r: &mut ChaCha8Rng) -> Result<Suite> {
    let p = &cfg.raw.problem;
    let mut failures = 0;
    for _ in 0..trials {
        let q = random_profile(r);
        let (c0, c1) = (r.gen_range(0.0..3.0), r.gen_range(0.0..3.0));
        let g = move |t: f64| eval(&q, t).abs();
        let m = solve_memory_ode(&cfg.kernel, Arc::new(g), c0, c1, p.t_start, p.t_end, p.step, &cfg.quadrature)?;
        failures += usize::from(m.solution.values().iter().any(|&v| v < 0.0));
    }
    Ok(Suite { name: "memory-positivity", trials, failures, skipped: false })
}
