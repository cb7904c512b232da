use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use anyhow::{bail, ensure, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use lastquery::datagen::{self, SynthConfig};
use lastquery::features::UserHistory;
use lastquery::gradcheck::{check_model_gradients, GRAD_TOLERANCE};
use lastquery::model::{
    attention_flops, full_attention_reference, last_query_attention, load_checkpoint, save_checkpoint,
    AttentionParams, AttentionVariant, ModelConfig, ModelParams,
};
use lastquery::numcore::{Matrix, Rng};
use lastquery::training::{
    build_dataset, check_compatible, ensemble_predict, member_predictions, report_from_predictions, train_with,
    windows_for, split_users, DatasetConfig, EpochLog, TrainConfig, TrainOutcome, TRAIN_RATIO,
};

mod config_file;

#[derive(Parser, Debug)]
#[command(name = "lastquery", version, about = "Last-query transformer knowledge tracing")]
#[command(args_override_self = true)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Generate a synthetic interaction corpus.
    GenData(GenDataArgs),
    /// Train one model, or one per head count with --ensemble.
    Train(TrainArgs),
    /// Validation AUC of one or more checkpoints and of their mean.
    Eval(EvalArgs),
    /// Predict the last interaction of every user.
    Predict(PredictArgs),
    /// Attention score cost and wall-clock per sequence length.
    BenchAttn(BenchArgs),
    /// Finite-difference check of every parameter gradient.
    CheckGrad(CheckGradArgs),
}

#[derive(Args, Debug)]
struct GenDataArgs {
    #[arg(long, default_value_t = 2000)]
    users: usize,
    #[arg(long, default_value_t = 100)]
    questions: usize,
    #[arg(long, default_value_t = 20)]
    min_interactions: usize,
    #[arg(long, default_value_t = 200)]
    max_interactions: usize,
    #[arg(long, default_value_t = 0.05)]
    drift: f64,
    #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
    difficulty_mean: f64,
    #[arg(long, default_value_t = 1.0)]
    difficulty_spread: f64,
    #[arg(long, default_value_t = 0.02)]
    long_gap_rate: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args, Debug)]
struct TrainArgs {
    #[arg(long)]
    data: PathBuf,
    #[arg(long, default_value_t = 32)]
    d: usize,
    #[arg(long, default_value_t = 2)]
    heads: usize,
    /// Window length L.
    #[arg(long, default_value_t = 128)]
    len: usize,
    /// Feed-forward width; 4·d when omitted.
    #[arg(long)]
    d_ff: Option<usize>,
    /// Input embedding width; d when omitted.
    #[arg(long)]
    d_e: Option<usize>,
    #[arg(long, default_value_t = 10)]
    epochs: usize,
    #[arg(long, default_value_t = 64)]
    batch_size: usize,
    #[arg(long, default_value_t = 1e-3)]
    lr: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Distance between training targets of one user; L/2 when omitted.
    #[arg(long)]
    stride: Option<usize>,
    /// Distance between validation targets of one user.
    #[arg(long, default_value_t = 4)]
    eval_stride: usize,
    /// Checkpoint path. Ensemble members go to `<stem>.h<heads>.<ext>`.
    #[arg(long)]
    out: PathBuf,
    /// Head counts, comma-separated, one model each.
    #[arg(long, value_delimiter = ',')]
    ensemble: Option<Vec<usize>>,
    /// Train ensemble members concurrently.
    #[arg(long)]
    parallel: bool,
}

#[derive(Args, Debug)]
struct EvalArgs {
    #[arg(long)]
    data: PathBuf,
    /// Checkpoints, comma-separated.
    #[arg(long, value_delimiter = ',', required = true)]
    model: Vec<PathBuf>,
    #[arg(long, default_value_t = 4)]
    eval_stride: usize,
}

#[derive(Args, Debug)]
struct PredictArgs {
    #[arg(long)]
    data: PathBuf,
    #[arg(long, value_delimiter = ',', required = true)]
    model: Vec<PathBuf>,
}

#[derive(Clone, Copy, Debug, PartialEq, ValueEnum)]
enum VariantArg {
    LastQuery,
    Full,
    Both,
}

#[derive(Args, Debug)]
struct BenchArgs {
    #[arg(long, default_value_t = 128)]
    d: usize,
    #[arg(long, default_value_t = 8)]
    heads: usize,
    #[arg(long, value_delimiter = ',', default_value = "256,512,1024,1728")]
    lens: Vec<usize>,
    #[arg(long, value_enum, default_value_t = VariantArg::Both)]
    variant: VariantArg,
    /// Timed runs per row; the median is reported.
    #[arg(long, default_value_t = 5)]
    runs: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum Preset {
    Tiny,
}

#[derive(Args, Debug)]
struct CheckGradArgs {
    #[arg(long, value_enum, default_value_t = Preset::Tiny)]
    config: Preset,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Perturb this tensor's analytic gradient (negative control).
    #[arg(long, hide = true)]
    corrupt: Option<String>,
}

fn main() -> ExitCode {
    let args = match config_file::expand(std::env::args_os().collect()) {
        Ok(a) => a,
        Err(e) => {
            eprintln!("error: {e:#}");
            return ExitCode::from(2);
        }
    };
    let cli = Cli::parse_from(args);
    eprintln!("# resolved configuration: {:?}", cli.command);
    let result = match cli.command {
        Command::GenData(a) => gen_data(a),
        Command::Train(a) => train(a),
        Command::Eval(a) => eval(a),
        Command::Predict(a) => predict(a),
        Command::BenchAttn(a) => bench_attn(a),
        Command::CheckGrad(a) => check_grad(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}

fn gen_data(a: GenDataArgs) -> Result<()> {
    let cfg = SynthConfig {
        n_users: a.users,
        n_questions: a.questions,
        min_interactions: a.min_interactions,
        max_interactions: a.max_interactions,
        drift: a.drift,
        difficulty_mean: a.difficulty_mean,
        difficulty_spread: a.difficulty_spread,
        long_gap_rate: a.long_gap_rate,
        seed: a.seed,
    };
    let corpus = datagen::generate(&cfg)?;
    datagen::write_corpus(&a.out, &corpus).with_context(|| format!("writing corpus to {}", a.out.display()))?;
    println!("users\tevents\tbase_rate");
    println!("{}\t{}\t{:.6}", corpus.users.len(), corpus.n_events(), corpus.base_rate());
    Ok(())
}

/// Ingested users plus the question vocabulary size.
fn load_data(dir: &Path) -> Result<(Vec<UserHistory>, usize)> {
    let users = datagen::ingest_dir(dir).with_context(|| format!("reading data from {}", dir.display()))?;
    let questions = datagen::read_questions(&dir.join(datagen::QUESTIONS_FILE))?;
    let n_questions = questions.keys().max().map_or(0, |&q| q as usize + 1);
    ensure!(!users.is_empty(), "no question interactions in {}", dir.display());
    Ok((users, n_questions))
}

fn member_path(out: &Path, heads: usize) -> PathBuf {
    let stem = out.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
    let name = match out.extension() {
        Some(ext) => format!("{stem}.h{heads}.{}", ext.to_string_lossy()),
        None => format!("{stem}.h{heads}"),
    };
    out.with_file_name(name)
}

fn log_path(ckpt: &Path) -> PathBuf {
    let mut s = ckpt.as_os_str().to_owned();
    s.push(".log");
    PathBuf::from(s)
}

fn write_log(path: &Path, log: &[EpochLog]) -> Result<()> {
    let mut text = String::from("epoch\ttrain_loss\tvalid_auc\tseconds\n");
    for l in log {
        text.push_str(&format!("{l}\n"));
    }
    std::fs::write(path, text).with_context(|| format!("writing {}", path.display()))
}

fn train(a: TrainArgs) -> Result<()> {
    let heads = a.ensemble.clone().unwrap_or_else(|| vec![a.heads]);
    ensure!(!heads.is_empty(), "--ensemble needs at least one head count");
    let model = ModelConfig {
        d: a.d,
        n_heads: heads[0],
        seq_len: a.len,
        d_ff: a.d_ff.unwrap_or(4 * a.d),
        d_e: a.d_e.unwrap_or(a.d),
        n_questions: 1,
    };
    let mut cfg = TrainConfig {
        epochs: a.epochs,
        batch_size: a.batch_size,
        lr: a.lr,
        seed: a.seed,
        model,
        ensemble_heads: heads.clone(),
    };
    // shape errors surface before any data is read
    cfg.validate()?;

    let (users, n_questions) = load_data(&a.data)?;
    cfg.model.n_questions = n_questions;
    let ds_cfg = DatasetConfig {
        seq_len: a.len,
        train_stride: a.stride.unwrap_or((a.len / 2).max(1)),
        valid_stride: a.eval_stride,
        split_ratio: TRAIN_RATIO,
    };
    let dataset = build_dataset(&users, &ds_cfg)?;
    eprintln!(
        "# {} training windows from {} users, {} validation windows from {} users",
        dataset.train.len(),
        dataset.train_users.len(),
        dataset.valid.len(),
        dataset.valid_users.len()
    );

    let ensemble = a.ensemble.is_some();
    let run_member = |i: usize, h: usize, echo: bool| -> Result<TrainOutcome<f64>> {
        let member = TrainConfig {
            model: cfg.member_config(h),
            ..cfg.clone()
        };
        let mut rng = if ensemble { Rng::new(cfg.seed).fork(i as u64) } else { Rng::new(cfg.seed) };
        train_with(&dataset, &member, &mut rng, |l| {
            if echo {
                println!("{l}");
            }
        })
        .with_context(|| format!("training model with {h} heads"))
    };

    let outcomes: Vec<TrainOutcome<f64>> = if a.parallel && heads.len() > 1 {
        std::thread::scope(|s| {
            let handles: Vec<_> = heads
                .iter()
                .enumerate()
                .map(|(i, &h)| {
                    let run = &run_member;
                    s.spawn(move || run(i, h, false))
                })
                .collect();
            handles.into_iter().map(|t| t.join().expect("training thread panicked")).collect::<Result<Vec<_>>>()
        })?
    } else {
        heads
            .iter()
            .enumerate()
            .map(|(i, &h)| {
                eprintln!("# training model with {h} heads");
                println!("epoch\ttrain_loss\tvalid_auc\tseconds");
                run_member(i, h, true)
            })
            .collect::<Result<_>>()?
    };

    println!("model\theads\tbest_epoch\tvalid_auc\tcheckpoint");
    let mut members = Vec::new();
    for (o, &h) in outcomes.iter().zip(&heads) {
        let path = if ensemble { member_path(&a.out, h) } else { a.out.clone() };
        save_checkpoint(&o.params, &path).with_context(|| format!("writing {}", path.display()))?;
        write_log(&log_path(&path), &o.log)?;
        let best = o.best_epoch.map_or("-".into(), |e| e.to_string());
        let auc = o
            .best_epoch
            .and_then(|e| o.log[e - 1].valid_auc)
            .map_or("nan".into(), |v| format!("{v:.6}"));
        println!("member\t{h}\t{best}\t{auc}\t{}", path.display());
        members.push(&o.params);
    }
    if ensemble && !dataset.valid.is_empty() {
        let preds = member_predictions(&members, &dataset.valid)?;
        let r = report_from_predictions(&preds, &dataset.valid)?;
        println!("ensemble\t{}\t-\t{:.6}\t-", heads.iter().map(|h| h.to_string()).collect::<Vec<_>>().join(","), r.auc);
    }
    Ok(())
}

fn load_models(paths: &[PathBuf]) -> Result<Vec<ModelParams<f64>>> {
    let models = paths
        .iter()
        .map(|p| load_checkpoint::<f64>(p).with_context(|| format!("loading {}", p.display())))
        .collect::<Result<Vec<_>>>()?;
    check_compatible(&models.iter().collect::<Vec<_>>())?;
    Ok(models)
}

fn check_vocab(models: &[ModelParams<f64>], n_questions: usize) -> Result<()> {
    let have = models[0].config.n_questions;
    ensure!(
        n_questions <= have,
        "data has {n_questions} questions but the model was trained on {have}"
    );
    Ok(())
}

fn eval(a: EvalArgs) -> Result<()> {
    let models = load_models(&a.model)?;
    let (users, n_questions) = load_data(&a.data)?;
    check_vocab(&models, n_questions)?;
    let ids: Vec<u64> = users.iter().map(|u| u.user_id).collect();
    let (_, valid_ids) = split_users(&ids, TRAIN_RATIO)?;
    let windows = windows_for(&users, &valid_ids, models[0].config.seq_len, a.eval_stride)?;
    ensure!(!windows.is_empty(), "validation split has no examples");

    let refs: Vec<&ModelParams<f64>> = models.iter().collect();
    let preds = member_predictions(&refs, &windows)?;
    println!("model\tvalid_auc\tloss\tn_examples");
    for (p, path) in preds.iter().zip(&a.model) {
        let r = report_from_predictions(std::slice::from_ref(p), &windows)?;
        println!("{}\t{:.6}\t{:.6}\t{}", path.display(), r.auc, r.loss, r.n_examples);
    }
    let r = report_from_predictions(&preds, &windows)?;
    println!("ensemble\t{:.6}\t{:.6}\t{}", r.auc, r.loss, r.n_examples);
    Ok(())
}

fn predict(a: PredictArgs) -> Result<()> {
    let models = load_models(&a.model)?;
    let (users, n_questions) = load_data(&a.data)?;
    check_vocab(&models, n_questions)?;
    let refs: Vec<&ModelParams<f64>> = models.iter().collect();
    let seq_len = models[0].config.seq_len;
    println!("user_id\tevent_index\tcontent_id\tprobability");
    for u in users.iter().filter(|u| !u.is_empty()) {
        let end = u.len() - 1;
        let feats = lastquery::features::UserFeatures::from_interactions(&u.interactions)?;
        let w = feats.window(end, seq_len)?;
        let p = ensemble_predict(&refs, &w)?;
        println!("{}\t{end}\t{}\t{p:.6}", u.user_id, u.interactions[end].question_id);
    }
    Ok(())
}

fn median_ms(mut samples: Vec<f64>) -> f64 {
    samples.sort_by(f64::total_cmp);
    let n = samples.len();
    if n % 2 == 1 {
        samples[n / 2]
    } else {
        (samples[n / 2 - 1] + samples[n / 2]) / 2.0
    }
}

fn bench_attn(a: BenchArgs) -> Result<()> {
    ensure!(a.runs >= 5, "--runs must be at least 5");
    ensure!(!a.lens.is_empty() && a.lens.iter().all(|&l| l > 0), "--lens must be positive");
    if a.heads == 0 || !a.d.is_multiple_of(a.heads) {
        bail!("d={} is not divisible by heads={}", a.d, a.heads);
    }
    let variants: &[AttentionVariant] = match a.variant {
        VariantArg::LastQuery => &[AttentionVariant::LastQuery],
        VariantArg::Full => &[AttentionVariant::Full],
        VariantArg::Both => &[AttentionVariant::LastQuery, AttentionVariant::Full],
    };
    let mut rng = Rng::new(a.seed);
    let params = AttentionParams::<f64>::new(a.d, &mut rng);
    println!("L\tvariant\tscore_macs\tms");
    for &len in &a.lens {
        let data = (0..len * a.d).map(|_| rng.normal(0.0, 1.0)).collect();
        let x = Matrix::new(len, a.d, data)?;
        let mask = vec![false; len];
        for &v in variants {
            let mut times = Vec::with_capacity(a.runs);
            let mut macs = 0;
            for _ in 0..a.runs {
                let t = Instant::now();
                macs = match v {
                    AttentionVariant::LastQuery => last_query_attention(&x, &mask, &params, a.heads)?.score_macs,
                    AttentionVariant::Full => full_attention_reference(&x, &mask, &params, a.heads)?.score_macs,
                };
                times.push(t.elapsed().as_secs_f64() * 1e3);
            }
            let expected = attention_flops(len, a.d, a.heads, v);
            ensure!(
                macs == expected,
                "{} at L={len}: counted {macs} score MACs, expected {expected}",
                v.name()
            );
            println!("{len}\t{}\t{macs}\t{:.3}", v.name(), median_ms(times));
        }
    }
    Ok(())
}

fn check_grad(a: CheckGradArgs) -> Result<()> {
    let config = match a.config {
        Preset::Tiny => ModelConfig::tiny(),
    };
    let checks = check_model_gradients(&config, a.seed, a.corrupt.as_deref())?;
    println!("tensor\trows\tcols\tmax_rel_error\tstatus");
    for c in &checks {
        let status = if c.passed() { "ok" } else { "FAIL" };
        println!("{}\t{}\t{}\t{:.3e}\t{status}", c.name, c.shape.0, c.shape.1, c.max_rel_error);
    }
    let failed: Vec<&str> = checks.iter().filter(|c| !c.passed()).map(|c| c.name.as_str()).collect();
    if !failed.is_empty() {
        bail!(
            "{} tensor(s) exceed relative error {GRAD_TOLERANCE:e}: {}",
            failed.len(),
            failed.join(", ")
        );
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn member_paths() {
        assert_eq!(member_path(Path::new("out/m.ckpt"), 4), PathBuf::from("out/m.h4.ckpt"));
        assert_eq!(member_path(Path::new("m"), 2), PathBuf::from("m.h2"));
        assert_eq!(log_path(Path::new("m.ckpt")), PathBuf::from("m.ckpt.log"));
    }

    #[test]
    fn median() {
        assert_eq!(median_ms(vec![5.0, 1.0, 3.0]), 3.0);
        assert_eq!(median_ms(vec![4.0, 1.0, 3.0, 2.0]), 2.5);
    }
}
