//! Acceptance suite. Runs without the libtest harness so that every
//! criterion prints exactly one PASS/FAIL line; exits nonzero if any fails.

use std::process::Command;
use std::time::{Duration, Instant};

use num_complex::Complex64 as C64;

use fibsic::cli::gradient_check;
use fibsic::fibonacci::{check_dimension_properties, check_identities, dimension_u64};
use fibsic::modmat::{
    appleby_fa, classify_order3_against, conjugate, fibonacci_matrix, reference_conjugations,
    zauner, Order3Class,
};
use fibsic::search::{
    derive_seed, frame_potential, haar_random_vector, prepare_symmetry, search, to_real,
    welch_bound, SearchConfig, SearchResult, SymmetricObjective,
};
use fibsic::verify::{default_candidates, exact_fiducial_4a, gram_check, stabilizer_probe};
use fibsic::weyl::{clifford_modulus, WeylHeisenberg};

type Outcome = Result<String, String>;

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn identities() -> Outcome {
    let r = check_identities(60);
    ensure(r.all_passed(), || format!("{} violated instances", r.failures().count()))?;
    Ok(format!("{} exact instances", r.checks.len()))
}

fn dimension_properties() -> Outcome {
    let r = check_dimension_properties(20);
    ensure(r.all_passed(), || format!("{} violated instances", r.failures().count()))?;
    Ok(format!("{} exact instances", r.checks.len()))
}

fn symmetry_orders() -> Outcome {
    let mut orders = Vec::new();
    for k in 1..=8u64 {
        let d = dimension_u64(k);
        let f = fibonacci_matrix(d);
        let order = f.order(12 * k).map_err(|e| e.to_string())?;
        ensure(order == 6 * k, || format!("k={k}: order {order}"))?;
        let tr = f.pow(2 * k).trace();
        ensure(tr == d - 1, || format!("k={k}: trace F^2k = {tr}"))?;
        if k % 2 == 0 {
            let s = f.pow(3 * k).scalar_value();
            ensure(matches!(s, Some(v) if v != 1), || format!("k={k}: F^3k = {s:?}"))?;
        }
        orders.push(order.to_string());
    }
    Ok(format!("orders {}", orders.join(",")))
}

fn order3_classes() -> Outcome {
    let mut classes = Vec::new();
    for k in 1..=7u64 {
        let d = dimension_u64(k);
        let x = fibonacci_matrix(d).pow(2 * k);
        let fa = appleby_fa(d);
        let c = classify_order3_against(&x, &zauner(d), fa.as_ref()).map_err(|e| e.to_string())?;
        let (expected, rep) = if k == 4 {
            (Order3Class::ApplebyFa, fa)
        } else {
            (Order3Class::Zauner, Some(zauner(d)))
        };
        ensure(c.class == expected, || format!("k={k}: {}", c.class))?;
        let g = c.witness.ok_or_else(|| format!("k={k}: no witness"))?;
        ensure(conjugate(&g, &x).ok() == rep, || format!("k={k}: witness does not conjugate"))?;
        classes.push(format!("{}:{}", d, c.class));
    }
    Ok(classes.join(" "))
}

fn conjugations() -> Outcome {
    let ids = reference_conjugations();
    for id in &ids {
        let c = id.evaluate().map_err(|e| format!("{}: {e}", id.label))?;
        ensure(c.passed(), || format!("{} gives {:?}", id.label, c.result))?;
    }
    Ok(format!("{} identities reproduce F_f", ids.len()))
}

fn welch() -> Outcome {
    let mut worst = f64::INFINITY;
    for d in [4usize, 8, 19] {
        for i in 0..200 {
            let v = haar_random_vector(d, derive_seed(2024, i));
            let excess = frame_potential(&v).map_err(|e| e.to_string())? - welch_bound(d);
            ensure(excess >= -1e-12, || format!("d={d} sample {i}: excess {excess:e}"))?;
            worst = worst.min(excess);
        }
        let mut e0 = vec![C64::new(0.0, 0.0); d];
        e0[0] = C64::new(1.0, 0.0);
        let p = frame_potential(&e0).unwrap();
        ensure((p - 1.0).abs() <= 1e-14, || format!("d={d}: P(e0) = {p}"))?;
    }
    Ok(format!("min excess over 600 samples {worst:.3e}"))
}

fn gradients() -> Outcome {
    let h = 1e-6;
    let mut worst: f64 = 0.0;
    for d in [3usize, 4, 8] {
        let wh = WeylHeisenberg::new(d).unwrap();
        let ce = prepare_symmetry(&wh, &fibonacci_matrix(clifford_modulus(d))).map_err(|e| e.to_string())?;
        let obj = SymmetricObjective::new(ce, false);
        for s in 0..20u64 {
            let x = to_real(&haar_random_vector(d, 90_000 + s));
            let (_, g) = obj.value_and_gradient(&x).map_err(|e| e.to_string())?;
            let (_, gp) = obj.engine().normalized_value_and_gradient(&x);
            let scale = g.iter().fold(1e-2f64, |m, v| m.max(v.abs()));
            let scale_p = gp.iter().fold(1e-2f64, |m, v| m.max(v.abs()));
            for i in 0..2 * d {
                let mut xp = x.clone();
                let mut xm = x.clone();
                xp[i] += h;
                xm[i] -= h;
                let fd = (obj.value(&xp).unwrap() - obj.value(&xm).unwrap()) / (2.0 * h);
                worst = worst.max((fd - g[i]).abs() / scale);
                let e = obj.engine();
                let fdp = (e.normalized_value_and_gradient(&xp).0 - e.normalized_value_and_gradient(&xm).0) / (2.0 * h);
                worst = worst.max((fdp - gp[i]).abs() / scale_p);
            }
        }
    }
    ensure(worst <= 1e-6, || format!("relative error {worst:e}"))?;
    let (ok, w4) = gradient_check(4);
    ensure(ok, || format!("self-test gradient check {w4:e}"))?;
    Ok(format!("max relative error {worst:.2e}"))
}

struct Solutions {
    found: Vec<(usize, SearchResult, Duration)>,
}

fn run_searches() -> (Solutions, Outcome) {
    let mut found = Vec::new();
    let mut notes = Vec::new();
    let mut failure = None;
    for (d, seed, limit) in [
        (4usize, 42u64, Duration::from_secs(60)),
        (8, 7, Duration::from_secs(60)),
        (19, 1, Duration::from_secs(600)),
    ] {
        let t = Instant::now();
        let r = search(&SearchConfig { master_seed: seed, ..SearchConfig::new(d) });
        let el = t.elapsed();
        match r {
            Ok(r) => {
                let ok = r.converged && r.gap() <= 1e-13 && el <= limit;
                notes.push(format!("d={d} gap {:.1e} in {:.2}s", r.gap(), el.as_secs_f64()));
                if !ok && failure.is_none() {
                    failure = Some(format!("d={d}: converged={} gap={:e} time={el:?}", r.converged, r.gap()));
                }
                found.push((d, r, el));
            }
            Err(e) => failure = failure.or(Some(format!("d={d}: {e}"))),
        }
    }
    // smoke run: must not crash, convergence not required
    let smoke = search(&SearchConfig { master_seed: 3, max_restarts: 2, ..SearchConfig::new(48) });
    match smoke {
        Ok(r) => notes.push(format!("d=48 smoke ok (converged={})", r.converged)),
        Err(e) => failure = failure.or(Some(format!("d=48 smoke: {e}"))),
    }
    let outcome = match failure {
        None => Ok(notes.join("; ")),
        Some(f) => Err(f),
    };
    (Solutions { found }, outcome)
}

fn certification(sol: &Solutions) -> Outcome {
    ensure(sol.found.len() == 3, || "missing search results".into())?;
    let mut notes = Vec::new();
    for (d, r, _) in &sol.found {
        ensure(r.converged, || format!("d={d} not converged"))?;
        let rep = gram_check(&r.fiducial, 1e-9).map_err(|e| e.to_string())?;
        ensure(rep.passed, || format!("d={d}: gram {:e}", rep.max_gram_deviation))?;
        ensure(rep.overlap_modulus_deviation <= 1e-9, || format!("d={d}: moduli {:e}", rep.overlap_modulus_deviation))?;
        let wh = WeylHeisenberg::new(*d).unwrap();
        let ce = prepare_symmetry(&wh, &fibonacci_matrix(clifford_modulus(*d))).map_err(|e| e.to_string())?;
        let res = ce.residual(&r.fiducial);
        ensure(res <= 1e-10, || format!("d={d}: con-eigen residual {res:e}"))?;
        notes.push(format!("d={d} gram {:.1e} residual {:.1e}", rep.max_gram_deviation, res));
    }
    Ok(notes.join("; "))
}

fn symmetry_detection(sol: &Solutions) -> Outcome {
    let mut notes = Vec::new();
    for (d, expected) in [(4usize, 6u64), (8, 12)] {
        let (_, r, _) = sol
            .found
            .iter()
            .find(|(dd, _, _)| *dd == d)
            .ok_or_else(|| format!("no d={d} solution"))?;
        let wh = WeylHeisenberg::new(d).unwrap();
        let rep = stabilizer_probe(&wh, &r.fiducial, &default_candidates(d));
        ensure(rep.candidates[0].accepted, || format!("d={d}: F_f rejected"))?;
        ensure(rep.antiunitary_order() == Some(expected), || {
            format!("d={d}: order {:?}", rep.antiunitary_order())
        })?;
        notes.push(format!("d={d} order {expected}"));
    }
    Ok(notes.join("; "))
}

fn exact_solution() -> Outcome {
    let psi = exact_fiducial_4a();
    let rep = gram_check(&psi, 1e-12).map_err(|e| e.to_string())?;
    ensure(rep.passed, || format!("gram {:e}", rep.max_gram_deviation))?;
    // any orbit translate with a phase passes as well
    let wh = WeylHeisenberg::new(4).unwrap();
    let moved: Vec<C64> = wh.displace(3, 1, &psi).iter().map(|z| z * C64::from_polar(1.0, 1.1)).collect();
    let moved_rep = gram_check(&moved, 1e-12).map_err(|e| e.to_string())?;
    ensure(moved_rep.passed, || "translate fails".into())?;
    Ok(format!("max gram deviation {:.1e}", rep.max_gram_deviation))
}

fn determinism() -> Outcome {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let bin = env!("CARGO_BIN_EXE_fibsic");
    let mut contents = Vec::new();
    for (tag, jobs) in [("a", "1"), ("b", "1"), ("c", "4")] {
        let out = dir.path().join(format!("f{tag}.txt"));
        let status = Command::new(bin)
            .args(["search", "--k", "2", "--seed", "7", "--quiet", "--jobs", jobs, "--out"])
            .arg(&out)
            .output()
            .map_err(|e| e.to_string())?;
        ensure(status.status.code() == Some(0), || format!("exit {:?}", status.status.code()))?;
        contents.push(std::fs::read(&out).map_err(|e| e.to_string())?);
    }
    ensure(contents[0] == contents[1], || "same flags gave different files".into())?;
    ensure(contents[0] == contents[2], || "--jobs 4 changed the file".into())?;
    Ok(format!("3 runs, {} identical bytes", contents[0].len()))
}

fn main() {
    let mut failures = 0;
    let mut report = |n: usize, name: &str, limit: Option<Duration>, f: &mut dyn FnMut() -> Outcome| {
        let t = Instant::now();
        let mut outcome = f();
        let el = t.elapsed();
        if let (Ok(_), Some(limit)) = (&outcome, limit) {
            if el > limit {
                outcome = Err(format!("took {:.2}s, limit {:.0}s", el.as_secs_f64(), limit.as_secs_f64()));
            }
        }
        let (tag, detail) = match &outcome {
            Ok(s) => ("PASS", s.clone()),
            Err(s) => {
                failures += 1;
                ("FAIL", s.clone())
            }
        };
        println!("[{tag}] {n:>2}. {name} ({:.2}s): {detail}", el.as_secs_f64());
    };

    let secs = Duration::from_secs;
    report(1, "Fibonacci-Lucas identities", Some(secs(1)), &mut identities);
    report(2, "dimension properties", Some(secs(1)), &mut dimension_properties);
    report(3, "Fibonacci symmetry orders", Some(secs(1)), &mut symmetry_orders);
    report(4, "order-3 classification", Some(secs(10)), &mut order3_classes);
    report(5, "conjugation identities", Some(secs(1)), &mut conjugations);
    report(6, "Welch bound", Some(secs(30)), &mut welch);
    report(7, "gradient oracle", Some(secs(30)), &mut gradients);
    let mut solutions = None;
    report(8, "search reproduces fiducials", None, &mut || {
        let (s, o) = run_searches();
        solutions = Some(s);
        o
    });
    let solutions = solutions.expect("criterion 8 ran");
    report(9, "end-to-end certification", None, &mut || certification(&solutions));
    report(10, "symmetry detection", None, &mut || symmetry_detection(&solutions));
    report(11, "exact solution cross-check", None, &mut exact_solution);
    report(12, "determinism across runs and --jobs", None, &mut determinism);

    if failures > 0 {
        println!("acceptance: {failures} of 12 criteria FAILED");
        std::process::exit(1);
    }
    println!("acceptance: all 12 criteria passed");
}
