//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! nonzero if any fails.

use std::collections::HashMap;
use std::time::Instant;

use lastquery::datagen::{generate, SynthConfig};
use lastquery::features::{
    build_window, compute_tdiff, transform_elapsed, FeatureWindow, Interaction, TDIFF_CAP_MS, TOKEN_UNKNOWN,
};
use lastquery::gradcheck::{check_model_gradients, GRAD_TOLERANCE};
use lastquery::model::{
    attention_flops, full_attention_reference, last_query_attention, write_checkpoint, AttentionParams,
    AttentionVariant, ModelConfig, ModelParams,
};
use lastquery::numcore::{Matrix, Rng};
use lastquery::training::{
    auc, build_dataset, evaluate, member_predictions, report_from_predictions, train, Dataset, DatasetConfig,
    QuestionMeanBaseline, TrainConfig, TrainOutcome,
};
use proptest::prelude::*;
use proptest::test_runner::{Config, TestRunner};

type Outcome = Result<String, String>;

fn check(ok: bool, detail: String) -> Outcome {
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn last_query_equivalence() -> Outcome {
    let start = Instant::now();
    let mut rng = Rng::new(101);
    let mut worst = 0.0f64;
    let instances = 200;
    for _ in 0..instances {
        let n_heads = [1, 2, 4][rng.below(3)];
        let d = n_heads * (1 + rng.below(32 / n_heads));
        let len = 1 + rng.below(64);
        let n_pad = rng.below(len);
        let x = Matrix::new(len, d, (0..len * d).map(|_| rng.normal(0.0, 1.0)).collect()).unwrap();
        let mask: Vec<bool> = (0..len).map(|i| i < n_pad).collect();
        let p = AttentionParams::<f64>::new(d, &mut rng);
        let lq = last_query_attention(&x, &mask, &p, n_heads).map_err(|e| e.to_string())?;
        let full = full_attention_reference(&x, &mask, &p, n_heads).map_err(|e| e.to_string())?;
        let last = Matrix::row_vector(full.output.row(len - 1).to_vec());
        worst = worst.max(lq.context.max_abs_diff(&last).unwrap());
    }
    let secs = start.elapsed().as_secs_f64();
    check(
        worst <= 1e-9 && secs < 60.0,
        format!("{instances} instances, max |diff| {worst:.2e} (≤ 1e-9), {secs:.1}s"),
    )
}

fn complexity() -> Outcome {
    let (d, n_heads) = (128, 8);
    let d_k = (d / n_heads) as u64;
    let mut rng = Rng::new(102);
    let p = AttentionParams::<f64>::new(d, &mut rng);
    let mut notes = Vec::new();
    let mut ok = true;
    for len in [256usize, 512, 1024, 1728] {
        let x = Matrix::new(len, d, (0..len * d).map(|_| rng.normal(0.0, 1.0)).collect()).unwrap();
        let mask = vec![false; len];
        let t = Instant::now();
        let lq = last_query_attention(&x, &mask, &p, n_heads).map_err(|e| e.to_string())?.score_macs;
        let t_lq = t.elapsed().as_secs_f64() * 1e3;
        let t = Instant::now();
        let full = full_attention_reference(&x, &mask, &p, n_heads).map_err(|e| e.to_string())?.score_macs;
        let t_full = t.elapsed().as_secs_f64() * 1e3;
        let l = len as u64;
        ok &= lq == n_heads as u64 * l * d_k
            && full == n_heads as u64 * l * l * d_k
            && full / lq == l
            && full % lq == 0
            && lq == attention_flops(len, d, n_heads, AttentionVariant::LastQuery)
            && full == attention_flops(len, d, n_heads, AttentionVariant::Full);
        notes.push(format!("L={len}: {lq} vs {full} MACs, {t_lq:.1}ms vs {t_full:.0}ms"));
    }
    check(ok, notes.join("; "))
}

fn gradient_suite() -> Outcome {
    let start = Instant::now();
    let cfg = ModelConfig::tiny();
    let checks = check_model_gradients(&cfg, 0, None).map_err(|e| e.to_string())?;
    let worst = checks.iter().map(|c| c.max_rel_error).fold(0.0, f64::max);
    let failed: Vec<_> = checks.iter().filter(|c| !c.passed()).map(|c| c.name.clone()).collect();
    let control = check_model_gradients(&cfg, 0, Some("encoder.attn.w_k")).map_err(|e| e.to_string())?;
    let control_caught = control.iter().any(|c| c.name == "encoder.attn.w_k" && !c.passed());
    let secs = start.elapsed().as_secs_f64();
    check(
        failed.is_empty() && control_caught && secs < 120.0,
        format!(
            "{} tensors, max relative error {worst:.2e} (≤ {GRAD_TOLERANCE:e}), failing {failed:?}, corrupted control caught: {control_caught}, {secs:.1}s",
            checks.len()
        ),
    )
}

fn random_history(seed: u64, n: usize) -> Vec<Interaction> {
    let mut rng = Rng::new(seed);
    let mut t = 0u64;
    (0..n)
        .map(|k| {
            t += if rng.bernoulli(0.2) {
                rng.range_inclusive(TDIFF_CAP_MS - 5, 3 * TDIFF_CAP_MS)
            } else {
                rng.range_inclusive(0, 600_000)
            };
            Interaction {
                user_id: 1,
                question_id: rng.below(50) as u32,
                part: rng.range_inclusive(1, 7) as u8,
                timestamp_ms: t,
                answered_correctly: rng.bernoulli(0.5),
                prior_elapsed_ms: if k == 0 || rng.bernoulli(0.1) {
                    None
                } else {
                    Some(rng.range_inclusive(0, 400_000))
                },
            }
        })
        .collect()
}

fn feature_transforms() -> Outcome {
    let cases = 512;
    let mut runner = TestRunner::new(Config {
        cases,
        failure_persistence: None,
        ..Config::default()
    });
    let mut results = Vec::new();

    results.push((
        "3-day clip",
        runner.run(&prop::collection::vec(0u64..u64::MAX / 4, 1..60), |mut ts| {
            ts.sort_unstable();
            let out = compute_tdiff(0, &ts).unwrap();
            prop_assert_eq!(out[0], 0);
            for k in 1..ts.len() {
                let gap = ts[k] - ts[k - 1];
                prop_assert!(out[k] <= 259_200_000);
                prop_assert_eq!(out[k], gap.min(259_200_000));
            }
            Ok(())
        })
        .map_err(|e| e.to_string()),
    ));

    results.push((
        "elapsed shift",
        runner.run(&prop::collection::vec(prop::option::of(0u64..1_000_000), 1..60), |prior| {
            let out = transform_elapsed(&prior);
            prop_assert_eq!(out.len(), prior.len());
            for k in 0..prior.len() - 1 {
                prop_assert_eq!(out[k], prior[k + 1].unwrap_or(0));
            }
            prop_assert_eq!(out[prior.len() - 1], 0);
            Ok(())
        })
        .map_err(|e| e.to_string()),
    ));

    results.push((
        "padding layout and UNKNOWN query token",
        runner.run(&(any::<u64>(), 1usize..80, 1usize..48), |(seed, n, seq_len)| {
            let h = random_history(seed, n);
            let end = (seed as usize) % n;
            let w: FeatureWindow = build_window(&h, end, seq_len).unwrap();
            prop_assert!(w.validate().is_ok());
            let n_pad = seq_len.saturating_sub(end + 1);
            prop_assert_eq!(w.n_pad(), n_pad);
            prop_assert!(w.pad_mask[..n_pad].iter().all(|&m| m));
            prop_assert!(w.pad_mask[n_pad..].iter().all(|&m| !m));
            prop_assert!(w.question[..n_pad].iter().all(|&q| q == 0));
            prop_assert_eq!(w.correctness[seq_len - 1], TOKEN_UNKNOWN);
            prop_assert!(w.correctness[n_pad..seq_len - 1].iter().all(|&c| c == 1 || c == 2));
            prop_assert_eq!(w.elapsed[seq_len - 1], 0.0);
            prop_assert_eq!(w.label, h[end].answered_correctly as u8);
            Ok(())
        })
        .map_err(|e| e.to_string()),
    ));

    let failed: Vec<String> = results
        .iter()
        .filter_map(|(name, r): &(&str, Result<(), String>)| r.as_ref().err().map(|e| format!("{name}: {e}")))
        .collect();
    let names: Vec<&str> = results.iter().map(|(n, _)| *n).collect();
    if failed.is_empty() {
        Ok(format!("{} properties × {cases} random cases: {}", names.len(), names.join(", ")))
    } else {
        Err(failed.join("; "))
    }
}

struct DeskRun {
    dataset: Dataset,
    oracle_auc: f64,
    baseline_auc: f64,
    members: Vec<(usize, TrainOutcome<f64>, f64)>,
}

/// Default synthetic corpus, one desk model per head count trained
/// concurrently (each run is single-threaded and seeded on its own).
fn desk_run(heads: &[usize]) -> Result<DeskRun, String> {
    let corpus = generate(&SynthConfig::default()).map_err(|e| e.to_string())?;
    let dataset = build_dataset(&corpus.users, &DatasetConfig::new(128)).map_err(|e| e.to_string())?;

    let truth: HashMap<(u64, usize), f64> =
        corpus.truth.iter().map(|t| ((t.user_id, t.event_index), t.p_true)).collect();
    let labels: Vec<u8> = dataset.valid.iter().map(|w| w.label).collect();
    let oracle: Vec<f64> = dataset.valid.iter().map(|w| truth[&(w.user_id, w.end_index)]).collect();
    let oracle_auc = auc(&oracle, &labels).map_err(|e| e.to_string())?;
    let baseline = QuestionMeanBaseline::fit(&corpus.users, &dataset.train_users);
    let base: Vec<f64> = dataset.valid.iter().map(|w| baseline.predict(w)).collect();
    let baseline_auc = auc(&base, &labels).map_err(|e| e.to_string())?;

    let members = std::thread::scope(|s| {
        let handles: Vec<_> = heads
            .iter()
            .map(|&h| {
                let ds = &dataset;
                s.spawn(move || {
                    let start = Instant::now();
                    let mut model = ModelConfig::desk(100);
                    model.n_heads = h;
                    let cfg = TrainConfig {
                        seed: h as u64,
                        ..TrainConfig::new(model)
                    };
                    let out = train::<f64>(ds, &cfg, &mut Rng::new(cfg.seed));
                    out.map(|o| (h, o, start.elapsed().as_secs_f64()))
                })
            })
            .collect();
        handles.into_iter().map(|t| t.join().unwrap()).collect::<Result<Vec<_>, _>>()
    })
    .map_err(|e| e.to_string())?;
    Ok(DeskRun {
        dataset,
        oracle_auc,
        baseline_auc,
        members,
    })
}

fn learning(run: &DeskRun) -> Outcome {
    let (h, out, secs) = &run.members[0];
    let report = evaluate(&[&out.params], &run.dataset.valid).map_err(|e| e.to_string())?;
    let floor = 0.5 + 0.6 * (run.oracle_auc - 0.5);
    let margin = report.auc - run.baseline_auc;
    check(
        report.auc >= floor && margin >= 0.02 && *secs <= 600.0,
        format!(
            "heads={h}: valid AUC {:.4} on {} windows; oracle {:.4} → floor {floor:.4}; per-question baseline {:.4} (margin {margin:+.4}, need ≥ 0.02); {secs:.0}s",
            report.auc, report.n_examples, run.oracle_auc, run.baseline_auc
        ),
    )
}

fn ensembling(run: &DeskRun) -> Outcome {
    let valid = &run.dataset.valid;
    let params: Vec<&ModelParams<f64>> = run.members.iter().map(|(_, o, _)| &o.params).collect();
    let preds = member_predictions(&params, valid).map_err(|e| e.to_string())?;
    let report = report_from_predictions(&preds, valid).map_err(|e| e.to_string())?;
    let best = report.member_aucs.iter().cloned().fold(f64::MIN, f64::max);

    let single = &preds[..1];
    let twice = [preds[0].clone(), preds[0].clone()];
    let a = report_from_predictions(single, valid).map_err(|e| e.to_string())?;
    let b = report_from_predictions(&twice, valid).map_err(|e| e.to_string())?;
    let identical = lastquery::training::evaluate(&[params[0], params[0]], valid).map_err(|e| e.to_string())?;
    let exact = a.auc == b.auc && a.auc == identical.auc && a.loss == identical.loss;

    check(
        report.auc >= best - 0.005 && exact,
        format!(
            "members {:?} → ensemble {:.4} (need ≥ {:.4}); identical members reproduce the single model exactly: {exact}",
            run.members.iter().zip(&report.member_aucs).map(|((h, _, _), a)| format!("h{h}={a:.4}")).collect::<Vec<_>>(),
            report.auc,
            best - 0.005
        ),
    )
}

fn determinism() -> Outcome {
    let corpus = generate(&SynthConfig {
        n_users: 120,
        seed: 7,
        ..SynthConfig::default()
    })
    .map_err(|e| e.to_string())?;
    let dataset = build_dataset(&corpus.users, &DatasetConfig::new(32)).map_err(|e| e.to_string())?;
    let mut model = ModelConfig::desk(100);
    model.seq_len = 32;
    let cfg = TrainConfig {
        epochs: 2,
        seed: 5,
        ..TrainConfig::new(model)
    };
    let run = || -> Result<(Vec<u8>, Vec<String>), String> {
        let out = train::<f64>(&dataset, &cfg, &mut Rng::new(cfg.seed)).map_err(|e| e.to_string())?;
        let mut bytes = Vec::new();
        write_checkpoint(&out.params, &mut bytes).map_err(|e| e.to_string())?;
        // the seconds column is wall-clock time
        let log = out
            .log
            .iter()
            .map(|l| l.to_string().rsplit_once('\t').unwrap().0.to_string())
            .collect();
        Ok((bytes, log))
    };
    let (a, b) = (run()?, run()?);
    check(
        a == b,
        format!(
            "two seeded runs: checkpoints {} bytes, identical {}; log lines identical {}",
            a.0.len(),
            a.0 == b.0,
            a.1 == b.1
        ),
    )
}

fn non_reproducibility_note() -> Outcome {
    let path = concat!(env!("CARGO_MANIFEST_DIR"), "/../../README.md");
    let text = std::fs::read_to_string(path).map_err(|e| format!("reading README: {e}"))?;
    let needed = ["0.8165", "0.816", "0.818", "0.820", "not reproducible"];
    let missing: Vec<_> = needed.iter().filter(|s| !text.contains(*s)).collect();
    check(
        missing.is_empty(),
        if missing.is_empty() {
            "README documents the leaderboard AUCs as not reproducible at desk scale".into()
        } else {
            format!("README is missing {missing:?}")
        },
    )
}

fn main() {
    let mut failures = 0;
    let mut report = |n: usize, name: &str, r: Outcome| {
        match &r {
            Ok(d) => println!("criterion {n} [{name}]: PASS ({d})"),
            Err(d) => {
                failures += 1;
                println!("criterion {n} [{name}]: FAIL ({d})")
            }
        }
    };

    report(1, "last-query equivalence", last_query_equivalence());
    report(2, "linear score cost", complexity());
    report(3, "gradient suite", gradient_suite());
    report(4, "feature transforms", feature_transforms());
    match desk_run(&[2, 4]) {
        Ok(run) => {
            report(5, "learning at desk scale", learning(&run));
            report(6, "ensembling", ensembling(&run));
        }
        Err(e) => {
            report(5, "learning at desk scale", Err(e.clone()));
            report(6, "ensembling", Err(e));
        }
    }
    report(7, "determinism", determinism());
    report(8, "non-reproducibility note", non_reproducibility_note());

    println!("acceptance: {} of 8 criteria passed", 8 - failures);
    if failures > 0 {
        std::process::exit(1);
    }
}
