//! Acceptance suite. Runs without the libtest harness so that the nine
//! PASS/FAIL lines are always printed; exits non-zero if any criterion fails.

use std::process::Command;
use std::time::{Duration, Instant};

use effcompat::models::zoo_model;
use effcompat::oracle::grid_lambda0;
use effcompat::sampling::{random_effect_pair, seeded_rng};
use effcompat::{
    compatible_by_feasibility, compute_lambda0, is_compatible, joint_observable, CompatReport, Effect, Model,
    Tolerances,
};

const PAIRS_PER_MODEL: usize = 200;
const SIMPLEX_PAIRS: usize = 500;
const ORACLE_PAIRS: usize = 50;
const ORACLE_RESOLUTION: usize = 51;

struct Case {
    model: &'static str,
    e: Effect,
    f: Effect,
    report: CompatReport,
}

struct Outcome {
    ok: bool,
    detail: String,
}

fn pass(detail: impl Into<String>) -> Outcome {
    Outcome {
        ok: true,
        detail: detail.into(),
    }
}

fn fail(detail: impl Into<String>) -> Outcome {
    Outcome {
        ok: false,
        detail: detail.into(),
    }
}

fn tol() -> Tolerances {
    Tolerances::default()
}

fn model(name: &str) -> Model {
    zoo_model(name).unwrap_or_else(|e| panic!("zoo model {name}: {e}"))
}

fn seed_for(name: &str) -> u64 {
    // fixed per-model streams, independent of list order
    name.bytes().fold(0xcbf2_9ce4_8422_2325u64, |h, b| {
        (h ^ b as u64).wrapping_mul(0x0100_0000_01b3)
    })
}

fn values(m: &Model, e: &Effect) -> Vec<f64> {
    m.space.vertex_values(e).expect("vertex values")
}

fn sampled_pairs(name: &str, count: usize) -> Vec<(Effect, Effect)> {
    let m = model(name);
    let mut rng = seeded_rng(seed_for(name));
    (0..count).map(|_| random_effect_pair(&m.space, &mut rng)).collect()
}

/// Criterion 1, and the shared sample for criteria 2, 3, 6 and 7.
fn criterion_1(cases: &mut Vec<Case>) -> Outcome {
    let start = Instant::now();
    let mut disagreements = Vec::new();
    for name in ["simplex-3", "gbit", "hypercube-3", "polygon-5"] {
        let m = model(name);
        for (i, (e, f)) in sampled_pairs(name, PAIRS_PER_MODEL).into_iter().enumerate() {
            let report = match compute_lambda0(&m.space, &e, &f, &tol()) {
                Ok(r) => r,
                Err(err) => return fail(format!("{name} pair {i}: {err}")),
            };
            let by_lambda = is_compatible(&m.space, &e, &f, &tol()).unwrap();
            let by_feasibility = compatible_by_feasibility(&m.space, &e, &f, &tol()).unwrap();
            if by_lambda != by_feasibility || by_lambda != report.compatible {
                disagreements.push(format!("{name}#{i} (λ0 = {})", report.lambda0));
            }
            cases.push(Case {
                model: name,
                e,
                f,
                report,
            });
        }
    }
    let elapsed = start.elapsed();
    let incompatible = cases.iter().filter(|c| !c.report.compatible).count();
    let summary = format!(
        "{} pairs, {incompatible} incompatible, {} disagreements, {:.2?}",
        cases.len(),
        disagreements.len(),
        elapsed
    );
    if !disagreements.is_empty() {
        fail(format!("{summary}: {}", disagreements.join(", ")))
    } else if elapsed >= Duration::from_secs(10) {
        fail(format!("{summary}: exceeds 10 s"))
    } else {
        pass(summary)
    }
}

fn criterion_2(cases: &[Case]) -> Outcome {
    let mut worst: f64 = 0.0;
    let mut bad = 0;
    for c in cases {
        let m = model(c.model);
        let (ev, fv, gv) = (values(&m, &c.e), values(&m, &c.f), values(&m, &c.report.witness));
        let lambda = c.report.lambda0;
        let mut v: f64 = 0.0;
        for i in 0..ev.len() {
            v = v
                .max(gv[i] - ev[i])
                .max(gv[i] - fv[i])
                .max(ev[i] + fv[i] - gv[i] - lambda);
        }
        worst = worst.max(v);
        if v > 1e-7 {
            bad += 1;
        }
    }
    let summary = format!("{} witnesses, worst violation {worst:.3e}", cases.len());
    if bad == 0 {
        pass(summary)
    } else {
        fail(format!("{summary}, {bad} beyond 1e-7"))
    }
}

fn criterion_3(cases: &[Case]) -> Outcome {
    let mut bad = Vec::new();
    for (i, c) in cases.iter().enumerate() {
        let m = model(c.model);
        let lower = values(&m, &c.e).into_iter().chain(values(&m, &c.f)).fold(0.0, f64::max);
        let (l, s) = (c.report.lambda0, c.report.sigma0);
        if !(l >= lower - 1e-7 && l <= 2.0 + 1e-7 && (0.0..=1.0).contains(&s)) {
            bad.push(format!("{}#{i}: λ0 = {l}, σ0 = {s}, lower {lower}", c.model));
        }
    }
    if bad.is_empty() {
        pass(format!("{} pairs within bounds", cases.len()))
    } else {
        fail(bad.join("; "))
    }
}

fn criterion_4() -> Outcome {
    let mut worst: f64 = 0.0;
    let mut bad = Vec::new();
    for name in ["simplex-2", "simplex-3", "simplex-4"] {
        let m = model(name);
        for (i, (e, f)) in sampled_pairs(name, SIMPLEX_PAIRS).into_iter().enumerate() {
            let closed = values(&m, &e).into_iter().chain(values(&m, &f)).fold(0.0, f64::max);
            let r = compute_lambda0(&m.space, &e, &f, &tol()).unwrap();
            let gap = (r.lambda0 - closed).abs();
            worst = worst.max(gap);
            if gap > 1e-9 || !r.compatible {
                bad.push(format!("{name}#{i}: LP {} vs {closed}", r.lambda0));
            }
        }
    }
    let summary = format!("{} pairs, worst |LP - closed form| {worst:.3e}", 3 * SIMPLEX_PAIRS);
    if bad.is_empty() {
        pass(summary)
    } else {
        fail(format!("{summary}: {}", bad.join("; ")))
    }
}

fn criterion_5() -> Outcome {
    let m = model("gbit");
    let (e, f) = (m.effect("e_x").unwrap(), m.effect("e_y").unwrap());
    let r = compute_lambda0(&m.space, e, f, &tol()).unwrap();
    let witness_zero = values(&m, &r.witness).iter().all(|v| v.abs() <= 1e-9);
    let grid = grid_lambda0(&m.space, e, f, 101, &tol()).unwrap();
    let detail = format!(
        "λ0 = {}, σ0 = {}, witness ≡ 0: {witness_zero}, grid(101) = {}",
        r.lambda0, r.sigma0, grid.value
    );
    let ok = (r.lambda0 - 2.0).abs() <= 1e-9
        && (r.sigma0 - 1.0).abs() <= 1e-9
        && !r.compatible
        && witness_zero
        && (grid.value - 2.0).abs() <= 1e-9;
    if ok {
        pass(detail)
    } else {
        fail(detail)
    }
}

/// Random pairs whose vertex values are stretched onto all of `[0, 1]`;
/// incompatibility is common among these, unlike the base sample.
fn sharpened_cases() -> Vec<Case> {
    let mut out = Vec::new();
    for name in ["gbit", "hypercube-3", "polygon-5"] {
        let m = model(name);
        let stretch = |e: &Effect| {
            let v = values(&m, e);
            let (lo, hi) = v
                .iter()
                .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &x| (a.min(x), b.max(x)));
            let w: Vec<f64> = v.iter().map(|x| ((x - lo) / (hi - lo)).clamp(0.0, 1.0)).collect();
            m.space.effect_from_vertex_values(&w, &tol()).unwrap()
        };
        for (e, f) in sampled_pairs(name, PAIRS_PER_MODEL) {
            let (e, f) = (stretch(&e), stretch(&f));
            let report = compute_lambda0(&m.space, &e, &f, &tol()).unwrap();
            out.push(Case {
                model: name,
                e,
                f,
                report,
            });
        }
    }
    out
}

fn criterion_6(cases: &[Case]) -> Outcome {
    let mut tested = 0;
    let mut bad = Vec::new();
    let sharpened = sharpened_cases();
    for (i, c) in cases
        .iter()
        .chain(&sharpened)
        .enumerate()
        .filter(|(_, c)| !c.report.compatible)
    {
        tested += 1;
        let m = model(c.model);
        let l = c.report.lambda0;
        let at = |k: f64| is_compatible(&m.space, &c.e.shrink(k).unwrap(), &c.f.shrink(k).unwrap(), &tol()).unwrap();
        let k = 1.0 + 0.75 * (l - 1.0);
        if !at(l) {
            bad.push(format!("{}#{i}: e/λ0 incompatible (λ0 = {l})", c.model));
        }
        if at(k) {
            bad.push(format!("{}#{i}: e/{k} compatible (λ0 = {l})", c.model));
        }
    }
    if tested == 0 {
        fail("no incompatible pairs in the sample")
    } else if bad.is_empty() {
        pass(format!("{tested} incompatible pairs"))
    } else {
        fail(bad.join("; "))
    }
}

fn criterion_7(cases: &[Case]) -> Outcome {
    let mut tested = 0;
    let mut worst: f64 = 0.0;
    let mut bad = Vec::new();
    for (i, c) in cases.iter().enumerate().filter(|(_, c)| c.report.compatible) {
        tested += 1;
        let m = model(c.model);
        let obs = match joint_observable(&m.space, &c.e, &c.f, &tol()) {
            Ok((_, Some(obs))) => obs,
            Ok((_, None)) => {
                bad.push(format!("{}#{i}: no observable", c.model));
                continue;
            }
            Err(err) => {
                bad.push(format!("{}#{i}: {err}", c.model));
                continue;
            }
        };
        if !m.space.is_observable(&obs, &tol()) {
            bad.push(format!(
                "{}#{i}: {:?}",
                c.model,
                m.space.observable_diagnostics(&obs, &tol())
            ));
            continue;
        }
        let part = |label: &str| values(&m, obs.component(label).expect("joint outcome"));
        let (p11, p10, p01) = (part("(1,1)"), part("(1,0)"), part("(0,1)"));
        let (ev, fv) = (values(&m, &c.e), values(&m, &c.f));
        let mut dev: f64 = 0.0;
        for v in 0..ev.len() {
            dev = dev
                .max((p11[v] + p10[v] - ev[v]).abs())
                .max((p11[v] + p01[v] - fv[v]).abs());
        }
        worst = worst.max(dev);
        if dev > 1e-9 {
            bad.push(format!("{}#{i}: margin deviation {dev:.3e}", c.model));
        }
    }
    let summary = format!("{tested} compatible pairs, worst margin deviation {worst:.3e}");
    if tested == 0 {
        fail("no compatible pairs in the sample")
    } else if bad.is_empty() {
        pass(summary)
    } else {
        fail(format!("{summary}: {}", bad.join("; ")))
    }
}

fn criterion_8() -> Outcome {
    let start = Instant::now();
    let mut tested = 0;
    let mut worst_gap: f64 = 0.0;
    let mut bad = Vec::new();
    for name in ["simplex-2", "simplex-3", "gbit", "polygon-4", "polygon-5", "polygon-6"] {
        let m = model(name);
        assert!(m.space.dimension() <= 2);
        for (i, (e, f)) in sampled_pairs(name, ORACLE_PAIRS).into_iter().enumerate() {
            tested += 1;
            let lp = compute_lambda0(&m.space, &e, &f, &tol()).unwrap().lambda0;
            let grid = grid_lambda0(&m.space, &e, &f, ORACLE_RESOLUTION, &tol()).unwrap();
            worst_gap = worst_gap.max((grid.value - lp) / grid.step);
            // the lower bound is a max of vertex values; allow rounding only
            if lp < grid.lower_bound - 1e-12 || lp > grid.value + grid.step {
                bad.push(format!(
                    "{name}#{i}: LP {lp} outside [{}, {} + {}]",
                    grid.lower_bound, grid.value, grid.step
                ));
            }
        }
    }
    let elapsed = start.elapsed();
    let summary = format!("{tested} pairs, worst grid gap {worst_gap:.2} steps, {elapsed:.2?}");
    if !bad.is_empty() {
        fail(format!("{summary}: {}", bad.join("; ")))
    } else if elapsed >= Duration::from_secs(60) {
        fail(format!("{summary}: exceeds 60 s"))
    } else {
        pass(summary)
    }
}

fn run_scan(out: &std::path::Path) -> Result<Vec<u8>, String> {
    let status = Command::new(env!("CARGO_BIN_EXE_effcompat"))
        .args([
            "scan",
            "zoo:gbit",
            "e_x",
            "e_y",
            "--kernel",
            "scaling",
            "--param-range",
            "1:2:11",
            "--out",
        ])
        .arg(out)
        .status()
        .map_err(|e| e.to_string())?;
    if !status.success() {
        return Err(format!("scan exited with {status}"));
    }
    std::fs::read(out).map_err(|e| e.to_string())
}

fn criterion_9() -> Outcome {
    let dir = tempfile::tempdir().expect("temp dir");
    let (first, second) = match (run_scan(&dir.path().join("a.csv")), run_scan(&dir.path().join("b.csv"))) {
        (Ok(a), Ok(b)) => (a, b),
        (Err(e), _) | (_, Err(e)) => return fail(e),
    };
    if first != second {
        return fail("two runs differ");
    }
    let text = String::from_utf8(first).expect("utf-8 csv");
    if text.contains('\r') {
        return fail("CRLF line endings");
    }
    let mut lines = text.lines().filter(|l| !l.starts_with('#'));
    if lines.next() != Some("param,lambda0,sigma0,compatible") {
        return fail("missing header");
    }
    let rows: Vec<(f64, bool)> = lines
        .map(|l| {
            let cols: Vec<&str> = l.split(',').collect();
            (cols[0].parse().unwrap(), cols[3].parse().unwrap())
        })
        .collect();
    let flips: Vec<f64> = rows.windows(2).filter(|w| w[0].1 != w[1].1).map(|w| w[1].0).collect();
    let detail = format!("{} rows, flips at {flips:?}, runs byte-identical", rows.len());
    let ok = rows.len() == 11 && flips == [2.0] && !rows[0].1 && rows[10].1 && text.ends_with('\n');
    if ok {
        pass(detail)
    } else {
        fail(detail)
    }
}

fn main() {
    // cargo passes libtest flags such as --list; there is nothing to list
    if std::env::args().any(|a| a == "--list") {
        return;
    }
    let mut cases = Vec::new();
    let results = [
        (
            "1 compatibility by λ0 agrees with feasibility at λ = 1",
            criterion_1(&mut cases),
        ),
        ("2 witness attains λ0", criterion_2(&cases)),
        ("3 λ0 and σ0 bounds", criterion_3(&cases)),
        ("4 simplex closed form", criterion_4()),
        ("5 sharp gbit pair golden values", criterion_5()),
        ("6 scaled pairs", criterion_6(&cases)),
        ("7 joint observable and margins", criterion_7(&cases)),
        ("8 grid oracle sandwich", criterion_8()),
        ("9 CLI scaling scan regression", criterion_9()),
    ];
    let mut failed = 0;
    for (name, outcome) in &results {
        let tag = if outcome.ok { "PASS" } else { "FAIL" };
        println!("{tag} criterion {name}: {}", outcome.detail);
        failed += usize::from(!outcome.ok);
    }
    println!("acceptance: {} passed, {failed} failed", results.len() - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
