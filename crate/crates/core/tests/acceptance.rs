//! Acceptance suite. Each criterion prints one PASS/FAIL line to stderr
//! (uncaptured) and the test fails if any criterion does.

use std::io::Write;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::process::Command;
use std::time::{Duration, Instant};

use ksum_core::baseline::solve_brute;
use ksum_core::cells::ProbeMeter;
use ksum_core::cellsample::experiment;
use ksum_core::geometry::{
    containment_translation, default_abar, pair_for_translation, query_polygon, solve_via_3pol, solve_via_polygon,
    translations_by_cover,
};
use ksum_core::group::{GroupElement, GroupSpec};
use ksum_core::instance::{binomial, enumerate_sumset, gen_average_case, Instance};
use ksum_core::inverter::{build_inverter, measure_success, plan_parameters, Mode, TableFunction};
use ksum_core::ksum::{next_prime, BuildOptions, KSumStructure};
use ksum_core::owf::{distribution_distance, run_attack, trial_rng, Hellman, InverseTable, Null};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

type Outcome = Result<String, String>;

fn check(cond: bool, detail: String) -> Outcome {
    if cond {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn report(id: &str, name: &str, f: impl FnOnce() -> Outcome) -> bool {
    let started = Instant::now();
    let outcome = catch_unwind(AssertUnwindSafe(f)).unwrap_or_else(|p| {
        let msg = p
            .downcast_ref::<String>()
            .cloned()
            .or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()))
            .unwrap_or_default();
        Err(format!("panicked: {msg}"))
    });
    let secs = started.elapsed().as_secs_f64();
    let (tag, detail, ok) = match outcome {
        Ok(d) => ("PASS", d, true),
        Err(d) => ("FAIL", d, false),
    };
    let line = format!("[{tag}] criterion {id} {name} ({secs:.1}s): {detail}\n");
    let _ = std::io::stderr().write_all(line.as_bytes());
    ok
}

fn log2(n: usize) -> f64 {
    (n as f64).log2()
}

fn correctness_sweep() -> Outcome {
    let started = Instant::now();
    let configs: Vec<(usize, usize, GroupSpec)> = [3usize, 4]
        .iter()
        .flat_map(|&k| {
            [8usize, 16, 32].into_iter().flat_map(move |n| {
                let modular = GroupSpec::modular(next_prime((n * n * n) as u64) as u128).unwrap();
                let xor = GroupSpec::xor(3 * n.trailing_zeros()).unwrap();
                [(n, k, modular), (n, k, xor)]
            })
        })
        .collect();
    let failures: Vec<String> = (0..200usize)
        .into_par_iter()
        .filter_map(|i| {
            let (n, k, spec) = configs[i % configs.len()];
            let mut rng = trial_rng(1, i as u64);
            let inst = gen_average_case(spec, n, k, &mut rng).unwrap();
            let opts = BuildOptions {
                verify: Some(true),
                ..BuildOptions::default()
            };
            let ks = KSumStructure::build(&inst, &opts, &mut rng).unwrap();
            let z = enumerate_sumset(&inst).unwrap();
            for b in z.values() {
                match ks.query(b, &mut ProbeMeter::new()) {
                    Some(w) if inst.verifies(&w, b) => {}
                    other => return Some(format!("instance {i} ({spec}, N={n}, k={k}): b={b} gave {other:?}")),
                }
            }
            let mut outside = 0;
            while outside < 10_000 {
                let b = spec.sample_uniform(&mut rng);
                if z.contains(b) {
                    continue;
                }
                outside += 1;
                if let Some(w) = ks.query(b, &mut ProbeMeter::new()) {
                    return Some(format!("instance {i}: false positive {w} for b={b}"));
                }
            }
            None
        })
        .collect();
    let elapsed = started.elapsed();
    if let Some(f) = failures.first() {
        return Err(format!("{} failing instances, first: {f}", failures.len()));
    }
    check(
        elapsed <= Duration::from_secs(300),
        format!("200 instances, all of Z answered, 10^4 outside Z each, {:.1}s", elapsed.as_secs_f64()),
    )
}

fn tradeoff_envelope() -> Outcome {
    let n = 1024usize;
    let spec = GroupSpec::modular(1_048_583).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let inst = gen_average_case(spec, n, 3, &mut rng).unwrap();
    let mut workload: Vec<GroupElement> = (0..300).map(|_| inst.sample_planted(&mut rng).0).collect();
    workload.extend((0..300).map(|_| spec.sample_uniform(&mut rng)));
    let l3 = log2(n).powi(3);
    let mut rows = Vec::new();
    let mut ok = true;
    for delta in [0.0, 0.15, 0.3] {
        let ks = KSumStructure::build_with_seed(&inst, &BuildOptions::with_delta(delta), 7).unwrap();
        let results: Vec<(bool, u64)> = workload
            .par_iter()
            .enumerate()
            .map(|(q, &b)| {
                let mut meter = ProbeMeter::new();
                let w = ks.query(b, &mut meter);
                let sound = w.as_ref().is_none_or(|w| inst.verifies(w, b));
                (sound && (q >= 300 || w.is_some()), meter.probes())
            })
            .collect();
        let worst = results.iter().map(|r| r.1).max().unwrap();
        let space = ks.space_words() as f64;
        let c1 = space / ((n as f64).powf(2.0 - delta) * l3);
        let c2 = worst as f64 / ((n as f64).powf(3.0 * delta) * l3);
        let correct = results.iter().all(|r| r.0);
        ok &= c1 <= 64.0 && c2 <= 64.0 && correct;
        rows.push(format!(
            "delta={delta}: space={} (C1={c1:.3}) worst={worst} (C2={c2:.3}) correct={correct}",
            ks.space_words()
        ));
    }
    check(ok, rows.join("; "))
}

fn inversion_engine() -> Outcome {
    let m = 1u64 << 16;
    let budget = (m as f64).powf(2.0 / 3.0).round() as u64;
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let f = TableFunction::random(m, m, &mut rng);
    let plan = plan_parameters(m, budget, Mode::RandomFunction).map_err(|e| e.to_string())?;
    let tables = build_inverter(&f, plan.params, &mut rng);
    let rep = measure_success(&tables, &f, 1000, &mut rng);
    check(
        rep.rate() >= 0.5 && rep.invalid == 0,
        format!(
            "M=2^16 budget={budget} words={} success={:.3} invalid={} max_probes={}",
            tables.space_words(),
            rep.rate(),
            rep.invalid,
            rep.probes.max
        ),
    )
}

fn owf_harness() -> Outcome {
    let mut notes = Vec::new();
    let mut ok = true;
    for (n, k, spec) in [
        (16, 3, GroupSpec::modular(4099).unwrap()),
        (16, 4, GroupSpec::modular(65_537).unwrap()),
        (256, 3, GroupSpec::xor(24).unwrap()),
        (1024, 3, GroupSpec::xor(24).unwrap()),
    ] {
        // Each trial rebuilds the whole table, so the 2^24-word cases get fewer.
        let trials = if spec.order() > 1 << 20 { 50 } else { 200 };
        let rep = run_attack(&InverseTable, spec, n, k, trials, 4).map_err(|e| e.to_string())?;
        ok &= rep.eps_hat() == 1.0 && rep.t_max <= k as u64;
        notes.push(format!("inverse N={n} k={k}: eps={:.3} T_max={}", rep.eps_hat(), rep.t_max));
    }

    let n = 256usize;
    let spec = GroupSpec::modular(next_prime(1 << 24) as u128).unwrap();
    let words = (n as f64).powf(4.0 / 3.0).round() as u64;
    let hellman = Hellman { budget_bits: 64 * words };
    let rep = run_attack(&hellman, spec, n, 3, 500, 5).map_err(|e| e.to_string())?;
    ok &= rep.eps_hat() >= 0.3;
    notes.push(format!("hellman {words} words: eps={:.3} T_max={}", rep.eps_hat(), rep.t_max));

    let rep = run_attack(&Null, spec, n, 3, 2000, 6).map_err(|e| e.to_string())?;
    ok &= rep.eps_hat() <= 0.02;
    notes.push(format!("null: eps={:.4}", rep.eps_hat()));
    check(ok, notes.join("; "))
}

fn distribution_bounds() -> Outcome {
    let n = 12usize;
    let spec = GroupSpec::modular((n * n * n) as u128).unwrap();
    let draws: Vec<(f64, f64)> = (0..200u64)
        .into_par_iter()
        .map(|i| {
            let inst = gen_average_case(spec, n, 3, &mut trial_rng(7, i)).unwrap();
            let tv = distribution_distance(&inst).unwrap();
            let z = enumerate_sumset(&inst).unwrap();
            let missing = binomial(n as u64, 2) as f64 - z.len() as f64;
            (tv, missing)
        })
        .collect();
    let count = draws.len() as f64;
    let mean_tv = draws.iter().map(|d| d.0).sum::<f64>() / count;
    let tv_bound = 5.0 / (n as f64).sqrt();

    let mean_missing = draws.iter().map(|d| d.1).sum::<f64>() / count;
    let var = draws.iter().map(|d| (d.1 - mean_missing).powi(2)).sum::<f64>() / (count - 1.0);
    let se = (var / count).sqrt();
    let pairs = binomial(n as u64, 2) as f64;
    let collision_bound = pairs * pairs / spec.order() as f64;
    check(
        mean_tv <= tv_bound && mean_missing <= collision_bound + 3.0 * se,
        format!(
            "mean TV={mean_tv:.4} (bound {tv_bound:.4}); mean C(N,2)-|Z|={mean_missing:.3} (bound {collision_bound:.3} + 3*{se:.3})"
        ),
    )
}

fn cell_sampling() -> Outcome {
    let mut notes = Vec::new();
    let mut ok = true;
    for n in [16usize, 32] {
        let rep = experiment(GroupSpec::xor(16).unwrap(), n, 3, None, 1000, 8).map_err(|e| e.to_string())?;
        let p = 1.0 / 16.0;
        let sigma = (p * (1.0 - p) / rep.trials as f64).sqrt();
        ok &= rep.frac_savings_event >= p - 3.0 * sigma && rep.roundtrip_ok && rep.bound_ok;
        notes.push(format!(
            "N={n} v={} frac={:.3} roundtrip={} bound={}",
            rep.v, rep.frac_savings_event, rep.roundtrip_ok, rep.bound_ok
        ));
    }
    check(ok, notes.join("; "))
}

fn distinct_instance(spec: GroupSpec, n: usize, i: u64) -> Instance {
    let mut rng = trial_rng(9, i);
    loop {
        let inst = gen_average_case(spec, n, 3, &mut rng).unwrap();
        let mut v: Vec<_> = inst.elements().to_vec();
        v.sort_unstable();
        v.dedup();
        if v.len() == n {
            return inst;
        }
    }
}

fn reductions() -> Outcome {
    let m = 1031u128;
    let spec = GroupSpec::modular(m).unwrap();
    let sizes = [8usize, 16, 24, 32];
    let failures: Vec<String> = (0..100u64)
        .into_par_iter()
        .filter_map(|i| {
            let n = sizes[i as usize % sizes.len()];
            let inst = distinct_instance(spec, n, i);
            let values: Vec<i128> = inst.elements().iter().map(|g| g.value() as i128).collect();
            let abar = default_abar(&values);
            let p = ksum_core::geometry::to_polygon(&values, abar).unwrap();
            for v in 0..m {
                let b = spec.from_index(v).unwrap();
                let brute = solve_brute(&inst, b).unwrap();
                let pol = solve_via_3pol(&inst, b).unwrap();
                let comb = solve_via_polygon(&inst, Some(abar), b).unwrap();
                let sound = |w: &Option<_>| w.as_ref().is_none_or(|w| inst.verifies(w, b));
                if brute.is_some() != pol.is_some() || brute.is_some() != comb.is_some() || !sound(&pol) || !sound(&comb) {
                    return Some(format!("instance {i}, b={b}: brute {brute:?} 3pol {pol:?} polygon {comb:?}"));
                }
                // The alignment search must agree with an exact rectangle
                // cover check over all candidate translations.
                for t in [v as i128, v as i128 + m as i128] {
                    let Some(q) = query_polygon(t, abar) else { continue };
                    let aligned = containment_translation(&p, &q).map(|x| x.0);
                    let covered: Vec<_> = translations_by_cover(&p, &q)
                        .into_iter()
                        .filter(|&tr| pair_for_translation(&p, &q, tr).is_some())
                        .collect();
                    if aligned.is_some() == covered.is_empty() || aligned.is_some_and(|a| !covered.contains(&a)) {
                        return Some(format!("instance {i}, target {t}: alignment {aligned:?}, cover {covered:?}"));
                    }
                }
            }
            None
        })
        .collect();
    match failures.first() {
        None => Ok(format!("100 instances over mod:{m}, N in {sizes:?}, every query agrees for both reductions")),
        Some(f) => Err(format!("{} failing instances, first: {f}", failures.len())),
    }
}

fn run_cli(args: &[&str]) -> Result<Vec<u8>, String> {
    let out = Command::new(env!("CARGO_BIN_EXE_ksum"))
        .args(args)
        .output()
        .map_err(|e| e.to_string())?;
    if !out.status.success() {
        return Err(format!("{args:?} exited {:?}: {}", out.status.code(), String::from_utf8_lossy(&out.stderr)));
    }
    Ok(out.stdout)
}

fn dir_bytes(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut files: Vec<_> = std::fs::read_dir(dir)
        .unwrap()
        .map(|e| {
            let e = e.unwrap();
            (e.file_name().to_string_lossy().into_owned(), std::fs::read(e.path()).unwrap())
        })
        .collect();
    files.sort();
    files
}

fn determinism() -> Outcome {
    let tmp = tempfile::tempdir().map_err(|e| e.to_string())?;
    let path = |name: &str| tmp.path().join(name).to_string_lossy().into_owned();
    let (inst_a, inst_b, dir_a, dir_b) = (path("a.txt"), path("b.txt"), path("sa"), path("sb"));

    let gen = |out: &str| run_cli(&["gen", "--group", "mod:32771", "--n", "32", "--k", "3", "--seed", "3", "--out", out]);
    gen(&inst_a)?;
    gen(&inst_b)?;
    let mut same = vec![("gen", std::fs::read(&inst_a).unwrap() == std::fs::read(&inst_b).unwrap())];

    let build = |dir: &str| {
        run_cli(&["build", "--instance", &inst_a, "--delta", "0.5", "--dir", dir, "--seed", "4"])
    };
    same.push(("build", build(&dir_a)? == build(&dir_b)? && dir_bytes(Path::new(&dir_a)) == dir_bytes(Path::new(&dir_b))));

    let subcommands: Vec<(&str, Vec<&str>)> = vec![
        ("query", vec!["query", "--dir", &dir_a, "--b", "17", "--sample", "20", "--seed", "5"]),
        (
            "bench-tradeoff",
            vec!["bench-tradeoff", "--group", "mod:32771", "--n", "32", "--delta", "0", "0.5", "--queries", "50", "--seed", "6"],
        ),
        (
            "attack-owf",
            vec!["attack-owf", "--attack", "hellman", "--n", "64", "--k", "3", "--budget-bits", "65536", "--trials", "50", "--seed", "7"],
        ),
        ("cellsample-demo", vec!["cellsample-demo", "--n", "16", "--trials", "50", "--seed", "8"]),
        ("reduce-3pol", vec!["reduce-3pol", "--group", "mod:131", "--n", "12", "--instances", "3", "--seed", "9"]),
        ("reduce-polygon", vec!["reduce-polygon", "--group", "mod:131", "--n", "12", "--instances", "3", "--seed", "10"]),
        ("invert-bench", vec!["invert-bench", "--m", "4096", "--budget", "256", "--trials", "200", "--seed", "11"]),
    ];
    for (name, args) in &subcommands {
        let first = run_cli(args)?;
        same.push((name, !first.is_empty() && first == run_cli(args)?));
    }
    let differing: Vec<&str> = same.iter().filter(|s| !s.1).map(|s| s.0).collect();
    check(
        differing.is_empty(),
        if differing.is_empty() {
            format!("{} subcommands byte-identical across runs", same.len())
        } else {
            format!("output differs for {differing:?}")
        },
    )
}

#[test]
fn acceptance() {
    let results = [
        report("1", "correctness sweep", correctness_sweep),
        report("2", "tradeoff envelope", tradeoff_envelope),
        report("3", "inversion engine", inversion_engine),
        report("4", "owf harness", owf_harness),
        report("5", "distribution bounds", distribution_bounds),
        report("6", "cell sampling", cell_sampling),
        report("7", "geometric reductions", reductions),
        report("8", "cli determinism", determinism),
    ];
    let failed = results.iter().filter(|ok| !**ok).count();
    assert_eq!(failed, 0, "{failed} acceptance criteria failed");
}
