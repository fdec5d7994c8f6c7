//! Regression store: measured reference values with per-entry tolerances,
//! kept in a flat text file with provenance comments.
//!
//! ```text
//! # suite bump: config 3f0c…, fracreg 0.1.0 — β₁ of the interior bump, σ = 0.5, λ = 1, Λ = 2, h = 1/32
//! bump.beta1 = 4.6876019834849975e-1 tol=1e-6 config=3f0c…
//! ```

use anyhow::{bail, Context, Result};
use fracreg::grid::fmt17;
use fracreg::ode::{min_on, solve_discrete, solve_memory_ode, OdeProblem};
use fracreg::parabolic::*;
use fracreg::regularity::*;
use fracreg::{QuadratureSpec, SpaceKernelFamily, TimeKernel};
use sha2::{Digest, Sha256};
use std::collections::BTreeMap;
use std::path::Path;
use std::sync::Arc;

pub const SUITES: [&str; 5] = ["bump", "mubound", "kappa", "tail", "probes"];

#[derive(Debug, Clone, PartialEq)]
pub struct Entry {
    pub key: String,
    pub value: f64,
    pub tol: f64,
    pub config: String,
}

impl Entry {
    fn suite(&self) -> &str {
        self.key.split('.').next().unwrap_or("")
    }

    fn line(&self) -> String {
        format!("{} = {} tol={:e} config={}", self.key, fmt17(self.value), self.tol, self.config)
    }
}

struct Measured {
    suite: &'static str,
    description: String,
    entries: Vec<(String, f64, f64)>,
}

/// First 16 hex digits of SHA-256 of `text`.
pub fn short_hash(text: &str) -> String {
    hex::encode(Sha256::digest(text.as_bytes()))[..16].to_string()
}

fn halves(first: i32, n: i32) -> Vec<f64> {
    (first..first + n).map(|k| 0.5f64.powi(k)).collect()
}

fn measure(suite: &str, spec: &QuadratureSpec) -> Result<Measured> {
    Ok(match suite {
        "bump" => {
            let rep = bump_threshold(0.5, 1.0, 2.0, 1.0 / 32.0, spec)?;
            Measured {
                suite: "bump",
                description: "β₁ of the interior bump barrier; σ = 0.5, λ = 1, Λ = 2, h = 1/32".into(),
                entries: vec![("bump.beta1".into(), rep.beta1, 1e-6), ("bump.min_outside".into(), rep.min_outside, 1e-6)],
            }
        }
        "mubound" => {
            let k = TimeKernel::caputo(0.5)?;
            let mut entries = Vec::new();
            for mu in [0.1, 0.5, 1.0] {
                let g = move |t: f64| if t <= -1.0 { mu } else { 0.0 };
                let m = solve_memory_ode(&k, Arc::new(g), 1.0, 1.0, -2.0, 0.0, 1.0 / 256.0, spec)?;
                entries.push((format!("mubound.delta4.mu={mu}"), min_on(&m.solution, -1.0, 0.0), 1e-6));
            }
            Measured {
                suite: "mubound",
                description: "δ₄ = min over [−1, 0] of the memory solution; G = μ on [−2, −1], c₀ = 1, C₁ = 1, caputo α = 0.5, ε = 1/256".into(),
                entries,
            }
        }
        "kappa" => {
            let alphas = [0.5, 0.7, 0.9, 0.95, 0.99];
            let fam = SweepFamily::Ode(OdeSweepFamily {
                kernel: KernelForm::Caputo,
                rhs: Arc::new(|_| 1.0),
                rhs_sup: 1.0,
                t_start: -2.0,
                t_end: 0.0,
                step: 1.0 / 256.0,
                interval: (-0.5, 0.0),
                radii: halves(1, 5),
            });
            let r = alpha_sweep(&fam, &alphas, spec)?;
            let mut entries: Vec<(String, f64, f64)> = r.rows.iter().map(|row| (format!("kappa.ode.alpha={}", row.alpha), row.kappa, 1e-6)).collect();
            let p = ParabolicProblem::new(
                TimeKernel::caputo(0.5)?,
                SpaceKernelFamily::fractional_laplacian(0.5)?,
                Arc::new(|_, _| 1.0),
                1.5,
                97,
                -1.25,
                0.0,
                1.0 / 256.0,
            );
            let u = solve_parabolic(&p, spec)?.u;
            let e = fit_holder_exponent(&u, 0.0, 0.0, &halves(0, 4), 0.5, 0.5)?;
            entries.push(("kappa.parabolic.x0=0".into(), e.exponent, 1e-6));
            Measured {
                suite: "kappa",
                description: "fitted κ̂: ode α-sweep (caputo, f ≡ 1, ε = 1/256, radii 2^-1..2^-5 on [−0.5, 0]); parabolic (σ = α = 0.5, f ≡ 1, X = 1.5, nx = 97, ε = 1/256, radii 1..1/8 at (0, 0))".into(),
                entries,
            }
        }
        "tail" => {
            let mut entries = Vec::new();
            for a in [0.5, 0.7, 0.9, 0.99] {
                let rep = tail_barrier_probe(&TimeKernel::caputo(a)?, a / 2.0, tail_barrier_rate(a, 0.5), 4.0, 1.0 / 256.0, 64, spec)?;
                entries.push((format!("tail.c.alpha={a}"), rep.constant, 1e-6));
            }
            Measured {
                suite: "tail",
                description: "c_{α,ν} of the tail barrier, ν = α/2, rate for σ = 0.5, probes on [−4, 0], ε = 1/256".into(),
                entries,
            }
        }
        "probes" => {
            let k = TimeKernel::caputo(0.5)?;
            let u = solve_discrete(&OdeProblem::new(k.clone(), Arc::new(|_| 1.0), -2.0, 0.0, 1.0 / 512.0), spec)?.solution;
            let rep = measure_estimate_probe(&u, 0.0, 1.0, 1.0, 2.0, 1.0, 1.0, 0.5, spec)?;
            let g = |t: f64| if t <= -1.0 { 1.0 } else { 0.0 };
            let m = solve_memory_ode(&k, Arc::new(g), 1.0, 1.0, -2.0, 0.0, 1.0 / 256.0, spec)?.solution;
            let le = lepsilon_probe(&m, 4.0, 0.5, 1.0, 1.0, 2.0, 0.5, spec)?;
            Measured {
                suite: "probes",
                description: "minimal C₀ of the ring scan for solve_discrete(f ≡ 1), caputo α = 0.5, ε = 1/512, M = 1 at t₀ = 0; fitted (d, ε) of the L^ε probe on the memory solution (G = 1 on [−2, −1], c₀ = C₁ = 1), r = 0.5, C₀ = 4".into(),
                entries: vec![
                    ("probes.measure.min_c0".into(), rep.min_c0, 1e-6),
                    ("probes.lepsilon.d".into(), le.d, 1e-6),
                    ("probes.lepsilon.epsilon".into(), le.epsilon, 1e-6),
                ],
            }
        }
        other => bail!(crate::config::ConfigError { line: 0, message: format!("unknown regression suite {other:?}; known: {}", SUITES.join(", ")) }),
    })
}

fn selected(suite: &str) -> Result<Vec<&'static str>> {
    if suite == "all" {
        return Ok(SUITES.to_vec());
    }
    match SUITES.iter().find(|s| **s == suite) {
        Some(s) => Ok(vec![*s]),
        None => bail!(crate::config::ConfigError { line: 0, message: format!("unknown regression suite {suite:?}; known: all, {}", SUITES.join(", ")) }),
    }
}

pub fn parse_store(text: &str) -> Result<(BTreeMap<String, Vec<String>>, Vec<Entry>)> {
    let mut comments: BTreeMap<String, Vec<String>> = BTreeMap::new();
    let mut entries = Vec::new();
    for (n, line) in text.lines().enumerate() {
        let l = line.trim();
        if l.is_empty() {
            continue;
        }
        if let Some(c) = l.strip_prefix("# suite ") {
            let suite = c.split(':').next().unwrap_or("").trim().to_string();
            comments.entry(suite).or_default().push(l.to_string());
            continue;
        }
        if l.starts_with('#') {
            continue;
        }
        let bad = || crate::config::ConfigError { line: n + 1, message: format!("malformed store entry {l:?}") };
        let (key, rest) = l.split_once(" = ").ok_or_else(bad)?;
        let mut parts = rest.split_whitespace();
        let value: f64 = parts.next().and_then(|v| v.parse().ok()).ok_or_else(bad)?;
        let mut tol = None;
        let mut config = String::new();
        for p in parts {
            if let Some(t) = p.strip_prefix("tol=") {
                tol = t.parse().ok();
            } else if let Some(c) = p.strip_prefix("config=") {
                config = c.to_string();
            }
        }
        entries.push(Entry { key: key.trim().to_string(), value, tol: tol.ok_or_else(bad)?, config });
    }
    Ok((comments, entries))
}

fn render(comments: &BTreeMap<String, Vec<String>>, entries: &[Entry]) -> String {
    let mut out = String::from("# fracreg regression store; rewrite with `fracreg regression update`\n");
    for suite in SUITES {
        let mine: Vec<&Entry> = entries.iter().filter(|e| e.suite() == suite).collect();
        if mine.is_empty() {
            continue;
        }
        out.push('\n');
        for c in comments.get(suite).into_iter().flatten() {
            out.push_str(c);
            out.push('\n');
        }
        for e in mine {
            out.push_str(&e.line());
            out.push('\n');
        }
    }
    out
}

fn measured_entries(m: &Measured) -> (String, Vec<Entry>) {
    let config = short_hash(&m.description);
    let comment = format!("# suite {}: config {config}, fracreg {} — {}", m.suite, env!("CARGO_PKG_VERSION"), m.description);
    let entries = m.entries.iter().map(|(k, v, t)| Entry { key: k.clone(), value: *v, tol: *t, config: config.clone() }).collect();
    (comment, entries)
}

pub struct CheckRow {
    pub key: String,
    pub measured: f64,
    pub stored: Option<f64>,
    pub pass: bool,
}

pub fn update(store: &Path, suite: &str, spec: &QuadratureSpec) -> Result<usize> {
    let suites = selected(suite)?;
    let (mut comments, mut entries) = if store.exists() {
        parse_store(&std::fs::read_to_string(store).with_context(|| format!("reading {}", store.display()))?)?
    } else {
        (BTreeMap::new(), Vec::new())
    };
    let mut written = 0;
    for s in suites {
        let m = measure(s, spec)?;
        let (comment, fresh) = measured_entries(&m);
        comments.insert(s.to_string(), vec![comment]);
        entries.retain(|e| e.suite() != s);
        written += fresh.len();
        entries.extend(fresh);
    }
    std::fs::write(store, render(&comments, &entries)).with_context(|| format!("writing {}", store.display()))?;
    Ok(written)
}

pub fn check(store: &Path, suite: &str, spec: &QuadratureSpec) -> Result<Vec<CheckRow>> {
    let suites = selected(suite)?;
    if !store.exists() {
        bail!(crate::config::ConfigError { line: 0, message: format!("regression store {} does not exist", store.display()) });
    }
    let (_, stored) = parse_store(&std::fs::read_to_string(store)?)?;
    let mut rows = Vec::new();
    for s in suites {
        let m = measure(s, spec)?;
        for (key, value, _) in &m.entries {
            let hit = stored.iter().find(|e| &e.key == key);
            let pass = hit.is_some_and(|e| (value - e.value).abs() <= e.tol * e.value.abs().max(1e-12));
            rows.push(CheckRow { key: key.clone(), measured: *value, stored: hit.map(|e| e.value), pass });
        }
    }
    Ok(rows)
}
