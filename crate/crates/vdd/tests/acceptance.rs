//! Acceptance harness: one PASS/FAIL line per criterion, non-zero exit on any failure.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;
use std::time::{Duration, Instant};

use sha2::{Digest, Sha256};
use vdd_core::calibration::{
    apply_posthoc_debias, calibration_params, classify_debiased, PosthocOptions, PriorEstimate, DEFAULT_EPSILON,
};
use vdd_core::decoding::{
    generate, plausibility_head, vdd_distribution, vdd_step, DebiasMode, DecodingConfig, Strategy,
};
use vdd_core::eval::{classification_metrics, confidence_bins, f1_score, weighted_bin_accuracy, EvalRecord};
use vdd_core::source::scenario::{prior_vs_evidence, PriorEvidenceParams, EOS_TOKEN};
use vdd_core::source::{ScenarioSource, ScenarioSpec};
use vdd_core::sweep::{enumerate_configs, summarize, Group, SelectionMode, TOP_K_VALUES};
use vdd_core::{softmax, LogitSource, LogitVector, ProbVector, SeededRng, TokenId, Variant};

const GOLDEN_GRID: &str = include_str!("../../core/tests/data/grid.golden.jsonl");
const PINNED: &str = include_str!("data/pinned.sha256");
const SUITE_SIZE: usize = 1000;
const SUITE_SEED: u64 = 20240101;

type Outcome = Result<String, String>;
type Criterion = (&'static str, &'static str, Option<Duration>, fn() -> Outcome);

fn check(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn lv(v: Vec<f64>) -> LogitVector {
    LogitVector::new(v).unwrap()
}

fn random_logits(rng: &mut SeededRng, n: usize, scale: f64) -> Vec<f64> {
    (0..n).map(|_| rng.uniform(-scale, scale)).collect()
}

fn c1_grid() -> Outcome {
    let grid = enumerate_configs(&DecodingConfig::default());
    check(grid.to_golden() == GOLDEN_GRID, || {
        "grid differs from golden file".into()
    })?;
    let hundredths = |g: Group| -> Vec<u32> { grid.group(g).map(|p| p.value).collect() };
    let twentieths: Vec<u32> = (1..=20).map(|i| i * 5).collect();
    check(hundredths(Group::Temp) == twentieths, || "temperature values".into())?;
    check(hundredths(Group::TopP) == twentieths, || "top-p values".into())?;
    check(hundredths(Group::TopK) == TOP_K_VALUES.to_vec(), || {
        "top-k values".into()
    })?;
    check(grid.len() == 49, || format!("{} points", grid.len()))?;
    Ok("20 temp + 9 top_k + 20 top_p = 49, golden bytes equal".into())
}

fn c2_self_cancel() -> Outcome {
    let mut rng = SeededRng::new(2);
    let mut worst = 0.0f64;
    for _ in 0..1000 {
        let n = 2 + rng.below(63) as usize;
        let p = ProbVector::normalize((0..n).map(|_| rng.uniform(1e-3, 1.0)).collect()).unwrap();
        let prior = PriorEstimate {
            p_prime: p.clone(),
            variants_used: vec![Variant::NoneCtx],
        };
        let y = apply_posthoc_debias(&p, &calibration_params(&prior, DEFAULT_EPSILON).unwrap()).unwrap();
        let u = 1.0 / n as f64;
        for &v in y.as_slice() {
            worst = worst.max((v - u).abs());
        }
    }
    check(worst <= 1e-12, || format!("max deviation {worst:e}"))?;
    Ok(format!("1000 vectors, max deviation from uniform {worst:.1e}"))
}

fn suite() -> (ScenarioSpec, ScenarioSource) {
    let spec = prior_vs_evidence(&PriorEvidenceParams {
        samples: SUITE_SIZE,
        seed: SUITE_SEED,
        evidence_margin: 1.0,
        noise_amplitude: 0.0,
    });
    let source = ScenarioSource::new(spec.clone()).unwrap();
    (spec, source)
}

fn brute_softmax(v: &[f64]) -> Vec<f64> {
    let m = v.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let e: Vec<f64> = v.iter().map(|x| (x - m).exp()).collect();
    let z: f64 = e.iter().sum();
    e.into_iter().map(|x| x / z).collect()
}

fn brute_argmax(v: &[f64]) -> usize {
    let mut best = 0;
    for (i, x) in v.iter().enumerate() {
        if *x > v[best] {
            best = i;
        }
    }
    best
}

fn add(a: &[f64], b: &[f64]) -> Vec<f64> {
    a.iter().zip(b).map(|(x, y)| x + y).collect()
}

fn c3_prior_cancellation() -> Outcome {
    let (spec, source) = suite();
    let options = PosthocOptions {
        variants: vec![Variant::NoneCtx],
        ..PosthocOptions::default()
    };
    let (mut naive_ok, mut debiased_ok, mut oracle_ok) = (0, 0, 0);
    for (s, sample) in spec.samples.iter().zip(source.samples()) {
        let c = classify_debiased(&source, &sample.prompt, &sample.visual(), &options).map_err(|e| e.to_string())?;
        let gold = sample.gold_label().ok_or("gold is not a candidate")?;
        naive_ok += usize::from(c.naive_label() == gold);
        debiased_ok += usize::from(c.label == gold);

        // full-vocabulary softmax, restricted and renormalized over the candidates
        let ids: Vec<usize> = s
            .candidates
            .as_ref()
            .unwrap()
            .iter()
            .map(|c| spec.vocab.iter().position(|v| *v == c[0]).unwrap())
            .collect();
        let restrict = |row: Vec<f64>| {
            let p = brute_softmax(&row);
            let sub: Vec<f64> = ids.iter().map(|&i| p[i]).collect();
            let z: f64 = sub.iter().sum();
            sub.into_iter().map(|x| x / z).collect::<Vec<f64>>()
        };
        let p = restrict(add(&s.prior[0], &s.evidence.real[0]));
        let q = restrict(add(&s.prior[0], &s.evidence.degenerate[0]));
        let y = brute_softmax(&p.iter().zip(&q).map(|(a, b)| a / b.max(1e-8)).collect::<Vec<_>>());
        let agree = y.iter().zip(c.debiased.as_slice()).all(|(a, b)| (a - b).abs() < 1e-12)
            && p.iter().zip(c.naive.as_slice()).all(|(a, b)| (a - b).abs() < 1e-12);
        oracle_ok += usize::from(agree && brute_argmax(&y) == c.label);
    }
    check(naive_ok == 0, || format!("naive accuracy {naive_ok}/{SUITE_SIZE}"))?;
    check(debiased_ok == SUITE_SIZE, || {
        format!("debiased accuracy {debiased_ok}/{SUITE_SIZE}")
    })?;
    check(oracle_ok == SUITE_SIZE, || {
        format!("oracle agreement {oracle_ok}/{SUITE_SIZE}")
    })?;
    Ok(format!(
        "naive 0/{SUITE_SIZE}, post-hoc {SUITE_SIZE}/{SUITE_SIZE}, oracle agrees on all"
    ))
}

fn c4_vdd_amplification() -> Outcome {
    let (spec, source) = suite();
    let eos = source.vocabulary().id(EOS_TOKEN).unwrap();
    let config = |debias| DecodingConfig {
        strategy: Strategy::Greedy,
        debias,
        alpha: 1.0,
        beta: 0.1,
        max_new_tokens: 2,
        stop_tokens: vec![eos],
        seed: 0,
    };
    let (mut naive_ok, mut vdd_ok, mut steps_checked) = (0, 0, 0);
    for (s, sample) in spec.samples.iter().zip(source.samples()) {
        let gold = source.vocabulary().decode(&sample.gold);
        for (mode, counter) in [(DebiasMode::Naive, &mut naive_ok), (DebiasMode::VddNone, &mut vdd_ok)] {
            let mut rng = SeededRng::new(0);
            let g = generate(&source, &sample.prompt, &sample.visual(), &config(mode), &mut rng)
                .map_err(|e| e.to_string())?;
            *counter += usize::from(source.vocabulary().decode(&g.tokens) == gold);
            for st in &g.steps {
                let l = add(&s.prior[st.step], &s.evidence.real[st.step]);
                let r = add(&s.prior[st.step], &s.evidence.degenerate[st.step]);
                let want = match mode {
                    DebiasMode::Naive => brute_argmax(&l),
                    _ => {
                        let p = brute_softmax(&l);
                        let max = p.iter().cloned().fold(0.0, f64::max);
                        let scores: Vec<f64> = (0..l.len())
                            .map(|i| {
                                if p[i] >= 0.1 * max {
                                    2.0 * l[i] - r[i]
                                } else {
                                    f64::NEG_INFINITY
                                }
                            })
                            .collect();
                        brute_argmax(&scores)
                    }
                };
                check(st.chosen == TokenId(want as u32), || {
                    format!("{} step {}: chose {:?}, oracle {want}", s.sample, st.step, st.chosen)
                })?;
                steps_checked += 1;
            }
        }
    }
    check(naive_ok == 0, || {
        format!("naive greedy accuracy {naive_ok}/{SUITE_SIZE}")
    })?;
    check(vdd_ok == SUITE_SIZE, || {
        format!("contrastive accuracy {vdd_ok}/{SUITE_SIZE}")
    })?;
    Ok(format!(
        "naive 0/{SUITE_SIZE}, contrastive {SUITE_SIZE}/{SUITE_SIZE}, {steps_checked} steps match brute-force argmax"
    ))
}

fn c5_identity() -> Outcome {
    let mut rng = SeededRng::new(5);
    let mut worst = 0.0f64;
    for _ in 0..10_000 {
        let n = 2 + rng.below(63) as usize;
        let l = random_logits(&mut rng, n, 10.0);
        let r = random_logits(&mut rng, n, 10.0);
        let base = softmax(&lv(l.clone())).unwrap();
        let mut cmp = |p: ProbVector| {
            for (a, b) in p.as_slice().iter().zip(base.as_slice()) {
                worst = worst.max((a - b).abs());
            }
        };
        cmp(vdd_distribution(&lv(l.clone()), &lv(r), 0.0, 0.0).unwrap());
        for alpha in [0.5, 1.0, 2.0] {
            cmp(vdd_distribution(&lv(l.clone()), &lv(l.clone()), alpha, 0.0).unwrap());
        }
    }
    check(worst <= 1e-12, || format!("max deviation {worst:e}"))?;
    Ok(format!("10000 pairs, max deviation {worst:.1e}"))
}

fn c6_log_odds() -> Outcome {
    let mut rng = SeededRng::new(6);
    let mut worst = 0.0f64;
    for _ in 0..10_000 {
        let n = 2 + rng.below(63) as usize;
        let l = random_logits(&mut rng, n, 8.0);
        let r = random_logits(&mut rng, n, 8.0);
        let alpha = rng.uniform(0.0, 3.0);
        let step = vdd_step(&lv(l.clone()), &lv(r.clone()), alpha, 0.1).unwrap();
        let p = step.probs.as_slice();
        let mut head: Vec<usize> = step.head.allowed.iter().map(|t| t.index()).collect();
        head.sort_by(|&a, &b| p[b].total_cmp(&p[a]).then(a.cmp(&b)));
        head.truncate(5);
        for &a in &head {
            for &b in &head {
                let got = (p[a] / p[b]).ln();
                let want = (1.0 + alpha) * (l[a] - l[b]) - alpha * (r[a] - r[b]);
                worst = worst.max((got - want).abs());
            }
        }
    }
    check(worst <= 1e-9, || format!("max log-odds error {worst:e}"))?;
    Ok(format!("10000 triples, max log-odds error {worst:.1e}"))
}

fn c7_head() -> Outcome {
    let mut rng = SeededRng::new(7);
    for i in 0..10_000 {
        let n = 1 + rng.below(64) as usize;
        // half-integer logits make exact ties common
        let l: Vec<f64> = (0..n).map(|_| (rng.below(9) as f64) * 0.5).collect();
        let p = softmax(&lv(l)).unwrap();
        let max = p.max();
        for beta in [0.0, 0.1, 0.5, 1.0] {
            let head = plausibility_head(&p, beta).map_err(|e| e.to_string())?;
            check(head.contains(p.argmax()), || {
                format!("vector {i}, beta {beta}: argmax outside head")
            })?;
            let want: Vec<TokenId> = if beta == 0.0 {
                (0..n as u32).map(TokenId).collect()
            } else if beta == 1.0 {
                (0..n)
                    .filter(|&j| p.as_slice()[j] == max)
                    .map(|j| TokenId(j as u32))
                    .collect()
            } else {
                (0..n)
                    .filter(|&j| p.as_slice()[j] >= beta * max)
                    .map(|j| TokenId(j as u32))
                    .collect()
            };
            check(head.allowed == want, || {
                format!("vector {i}, beta {beta}: head {:?} != {want:?}", head.allowed)
            })?;
        }
    }
    Ok("10000 vectors x 4 betas: ties kept at 1, all kept at 0, argmax always inside".into())
}

fn read_tree(dir: &Path) -> BTreeMap<String, Vec<u8>> {
    let mut out = BTreeMap::new();
    let mut stack = vec![dir.to_path_buf()];
    while let Some(d) = stack.pop() {
        for e in fs::read_dir(&d).unwrap() {
            let p = e.unwrap().path();
            if p.is_dir() {
                stack.push(p);
            } else {
                let rel = p.strip_prefix(dir).unwrap().to_string_lossy().replace('\\', "/");
                out.insert(rel, fs::read(&p).unwrap());
            }
        }
    }
    out
}

fn cli(args: &[&str]) -> Result<(), String> {
    let code = vdd::cli::run(std::iter::once("vdd").chain(args.iter().copied()));
    check(code == 0, || format!("`vdd {}` exited {code}", args.join(" ")))
}

fn c8_sweep() -> Outcome {
    let tmp = tempfile::tempdir().map_err(|e| e.to_string())?;
    let fx = tmp.path().join("fx");
    vdd::fixtures::make_fixtures(&fx, 0).map_err(|e| e.to_string())?;
    let cfg = fx.join("sweep.config.json");
    let cfg = cfg.to_str().unwrap();
    let mut trees = Vec::new();
    for threads in ["1", "8"] {
        let out = tmp.path().join(format!("t{threads}"));
        let out = out.to_str().unwrap();
        for debias in ["naive", "none"] {
            cli(&[
                "sweep",
                "--config",
                cfg,
                "--output",
                out,
                "--parallelism",
                threads,
                "--debias",
                debias,
            ])?;
            cli(&[
                "sweep",
                "--config",
                cfg,
                "--output",
                out,
                "--parallelism",
                threads,
                "--debias",
                debias,
                "--mode",
                "fixed",
            ])?;
        }
        trees.push(read_tree(Path::new(out)));
    }
    check(trees[0].len() == 16, || format!("{} output files", trees[0].len()))?;
    check(trees[0] == trees[1], || "parallelism 1 and 8 outputs differ".into())?;

    let spec: ScenarioSpec = serde_json::from_slice(&fs::read(fx.join("scenarios.json")).unwrap()).unwrap();
    let source = ScenarioSource::new(spec).unwrap();
    let mut compared = 0;
    for debias in [DebiasMode::Naive, DebiasMode::VddNone] {
        let base = DecodingConfig {
            debias,
            max_new_tokens: 2,
            stop_tokens: vec![source.vocabulary().id(EOS_TOKEN).unwrap()],
            ..DecodingConfig::default()
        };
        let result = vdd::runner::run_sweep(&source, source.samples(), &base, 1).map_err(|e| e.to_string())?;
        let oracle = summarize(&result, SelectionMode::Oracle);
        let fixed = summarize(&result, SelectionMode::Fixed);
        let (o, f) = (&oracle.groups, &fixed.groups);
        for (group, og, fg) in [
            ("temp", o.temp, f.temp),
            ("top_p", o.top_p, f.top_p),
            ("top_k", o.top_k, f.top_k),
        ] {
            check(o.overall >= og, || {
                format!("{debias:?}: overall {} < {group} {og}", o.overall)
            })?;
            check(og >= fg, || format!("{debias:?}: {group} oracle {og} < fixed {fg}"))?;
            compared += 1;
        }
        // every single configuration is bounded by its group's oracle score
        let n = result.samples.len() as f64;
        for point in &result.grid.points {
            let correct = result
                .records
                .iter()
                .filter(|r| r.config_index == point.index && r.is_correct())
                .count() as f64;
            let bound = match point.group {
                Group::Temp => o.temp,
                Group::TopP => o.top_p,
                Group::TopK => o.top_k,
            };
            check(correct / n <= bound, || {
                format!("{} scores {} above its group", point.label(), correct / n)
            })?;
        }
    }
    Ok(format!(
        "{compared} group comparisons hold for naive and contrastive sweeps; 16 files byte-identical at 1 vs 8 threads"
    ))
}

fn c9_metrics() -> Outcome {
    let f1 = 100.0 * f1_score(0.893, 0.762);
    check((f1 - 82.2).abs() <= 0.05, || format!("F1 {f1}"))?;
    let rec = |p: &str, g: &str| EvalRecord::new("r", p, g, 0.5).unwrap();
    let mut records = Vec::new();
    for (p, g, n) in [("yes", "yes", 3), ("yes", "no", 1), ("no", "yes", 2), ("no", "no", 4)] {
        records.extend((0..n).map(|_| rec(p, g)));
    }
    let m = classification_metrics(&records, "yes").map_err(|e| e.to_string())?;
    let c = m.confusion;
    check((c.tp, c.fp, c.fn_, c.tn) == (3, 1, 2, 4), || format!("confusion {c:?}"))?;
    check(m.accuracy == 0.7 && m.precision == 0.75 && m.recall == 0.6, || {
        format!("{m:?}")
    })?;
    check((m.f1 - 2.0 / 3.0).abs() < 1e-15, || format!("f1 {}", m.f1))?;

    let all_no: Vec<EvalRecord> = (0..4).map(|_| rec("no", "yes")).collect();
    let m = classification_metrics(&all_no, "yes").map_err(|e| e.to_string())?;
    let c = m.confusion;
    check((c.tp, c.fp, c.fn_, c.tn) == (0, 0, 4, 0), || format!("confusion {c:?}"))?;
    check(
        m.precision == 0.0 && m.recall == 0.0 && m.f1 == 0.0 && m.accuracy == 0.0,
        || format!("{m:?}"),
    )?;

    let perfect = [rec("Yes.", "yes"), rec("no", " No ")];
    let m = classification_metrics(&perfect, "yes").map_err(|e| e.to_string())?;
    check(
        m.accuracy == 1.0 && m.f1 == 1.0 && (m.confusion.tp, m.confusion.tn) == (1, 1),
        || format!("{m:?}"),
    )?;

    let three = [rec("yes", "yes"), rec("no", "maybe")];
    check(classification_metrics(&three, "yes").is_err(), || {
        "three labels accepted".into()
    })?;
    Ok(format!("F1(89.3, 76.2) = {f1:.4}; 4 confusion cases exact"))
}

fn c10_bins() -> Outcome {
    let tmp = tempfile::tempdir().map_err(|e| e.to_string())?;
    let fx = tmp.path().join("fx");
    vdd::fixtures::make_fixtures(&fx, 0).map_err(|e| e.to_string())?;
    for task in ["classify", "generate", "sweep"] {
        let cfg = fx.join(format!("{task}.config.json"));
        cli(&[task, "--config", cfg.to_str().unwrap()])?;
    }
    let mut sets: Vec<(String, Vec<EvalRecord>)> = Vec::new();
    for (name, bytes) in read_tree(&fx.join("out")) {
        let text = String::from_utf8(bytes).unwrap();
        if name.starts_with("classify") && name.ends_with("s0.jsonl") {
            let records: Vec<vdd::runner::ClassifyRecord> =
                text.lines().map(|l| serde_json::from_str(l).unwrap()).collect();
            for debiased in [false, true] {
                sets.push((
                    format!("{name} debiased={debiased}"),
                    vdd::report::eval_records(&records, debiased).map_err(|e| e.to_string())?,
                ));
            }
        } else if name.ends_with(".jsonl") && !name.starts_with("classify") {
            let mut recs = Vec::new();
            for (i, line) in text.lines().enumerate() {
                let v: serde_json::Value = serde_json::from_str(line).unwrap();
                let (correct, conf) = if name.starts_with("sweep") {
                    (
                        v["response"]["correct"].as_bool().unwrap(),
                        v["response"]["confidence"].as_f64().unwrap(),
                    )
                } else {
                    (v["correct"].as_bool().unwrap(), v["confidence"].as_f64().unwrap())
                };
                let gold = if correct { "a" } else { "b" };
                recs.push(EvalRecord::new(format!("{i}"), "a", gold, conf).unwrap());
            }
            sets.push((name, recs));
        }
    }
    check(sets.len() == 5, || format!("{} record sets", sets.len()))?;
    let mut worst = 0.0f64;
    for (name, recs) in &sets {
        let acc = recs.iter().filter(|r| r.correct).count() as f64 / recs.len() as f64;
        for n in [1, 5, 10, 20] {
            let bins = confidence_bins(recs, n).unwrap();
            let w = weighted_bin_accuracy(&bins).ok_or_else(|| format!("{name}: no records"))?;
            worst = worst.max((w - acc).abs());
        }
    }
    check(worst <= 1e-12, || format!("max bin deviation {worst:e}"))?;
    Ok(format!(
        "{} fixture record sets x 4 bin counts, max deviation {worst:.1e}",
        sets.len()
    ))
}

fn c11_hashes() -> Outcome {
    let tmp = tempfile::tempdir().map_err(|e| e.to_string())?;
    let fx = tmp.path().join("fx");
    cli(&["make-fixtures", "--seed", "0", "--output", fx.to_str().unwrap()])?;
    for task in ["classify", "sweep"] {
        cli(&[
            task,
            "--config",
            fx.join(format!("{task}.config.json")).to_str().unwrap(),
        ])?;
    }
    let got: BTreeMap<String, String> = read_tree(&fx)
        .into_iter()
        .map(|(k, v)| (k, hex::encode(Sha256::digest(v))))
        .collect();
    let want: BTreeMap<String, String> = PINNED
        .lines()
        .filter_map(|l| l.split_once("  "))
        .map(|(h, p)| (p.to_string(), h.to_string()))
        .collect();
    let mismatched: Vec<&String> = want
        .keys()
        .chain(got.keys())
        .filter(|k| want.get(*k) != got.get(*k))
        .collect();
    check(!want.is_empty() && mismatched.is_empty(), || {
        format!("mismatched: {mismatched:?}")
    })?;
    Ok(format!(
        "{} files match pinned sha256 ({} on {})",
        got.len(),
        std::env::consts::ARCH,
        std::env::consts::OS
    ))
}

fn main() {
    let criteria: [Criterion; 11] = [
        ("1", "grid exactness", Some(Duration::from_secs(1)), c1_grid),
        (
            "2",
            "post-hoc self-cancellation",
            Some(Duration::from_secs(1)),
            c2_self_cancel,
        ),
        (
            "3",
            "prior-cancellation benchmark",
            Some(Duration::from_secs(5)),
            c3_prior_cancellation,
        ),
        (
            "4",
            "contrastive amplification benchmark",
            Some(Duration::from_secs(5)),
            c4_vdd_amplification,
        ),
        ("5", "contrastive identity cases", None, c5_identity),
        ("6", "log-odds linearity", None, c6_log_odds),
        ("7", "plausibility head", None, c7_head),
        ("8", "sweep dominance and determinism", None, c8_sweep),
        ("9", "metric sanity", None, c9_metrics),
        ("10", "confidence-bin consistency", None, c10_bins),
        ("11", "end-to-end reproducibility", None, c11_hashes),
    ];
    let mut failed = 0;
    for (id, name, limit, f) in criteria {
        let start = Instant::now();
        let outcome = f();
        let took = start.elapsed();
        let outcome = match (outcome, limit) {
            (Ok(msg), Some(l)) if took > l => Err(format!("{msg}; took {took:?}, limit {l:?}")),
            (o, _) => o,
        };
        match outcome {
            Ok(msg) => println!("PASS criterion {id:>2} {name}: {msg} [{:.3}s]", took.as_secs_f64()),
            Err(msg) => {
                failed += 1;
                println!("FAIL criterion {id:>2} {name}: {msg} [{:.3}s]", took.as_secs_f64());
            }
        }
    }
    println!("{} of 11 criteria passed", 11 - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
