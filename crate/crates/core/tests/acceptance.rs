//! Acceptance suite: one line per criterion, non-zero exit if any binding
//! criterion fails. Criterion 10 needs external data and a trained
//! checkpoint and is skipped unless both are supplied:
//!
//! - `EMOSPAN_SEMEVAL_DIR`: directory with the official `2018-E-c-{En,Ar,Es}-{train,dev,test-gold}.txt`;
//! - `EMOSPAN_CHECKPOINT_{EN,AR,ES}`: trained checkpoints to score on the test files.

mod common;

use std::collections::HashSet;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::{Duration, Instant};

use emospan::analysis::{cosine, label_correlations, similarity_from_hidden, word_associations, LabelSource};
use emospan::checkpoint::load_checkpoint;
use emospan::data::{compute_stats, load_ec_tsv, Dataset, Example, Split};
use emospan::labels::{default_semeval_space, Language, SEMEVAL_EMOTIONS};
use emospan::metrics::evaluate;
use emospan::model::{
    score_tokens, AnyEncoder, Head, HeadKind, HeadParameters, HiddenStates, ModelRng, SpanModel, ToyConfig,
    ToyEncoder, Vocab,
};
use emospan::objectives::{joint_loss, joint_loss_grad, lca_loss, LossConfig};
use emospan::trainer::{evaluate_checkpoint, train, Ablation, LogSplit, TrainConfig};
use emospan::{LabelSpace, LabelVector};
use ndarray::{Array1, Array2};
use rand::{Rng, SeedableRng};

use common::{load_fixture, overfit_config, overfit_data, quick_config};

enum Status {
    Pass,
    Fail,
    Skip,
}

struct Outcome {
    status: Status,
    detail: String,
}

fn pass(detail: impl Into<String>) -> Outcome {
    Outcome { status: Status::Pass, detail: detail.into() }
}

fn fail(detail: impl Into<String>) -> Outcome {
    Outcome { status: Status::Fail, detail: detail.into() }
}

fn check(ok: bool, detail: String) -> Outcome {
    if ok {
        pass(detail)
    } else {
        fail(detail)
    }
}

fn rng(seed: u64) -> ModelRng {
    ModelRng::seed_from_u64(seed)
}

fn random_labels(r: &mut ModelRng, c: usize) -> LabelVector {
    LabelVector::from_bools(&(0..c).map(|_| r.random_bool(0.35)).collect::<Vec<_>>())
}

// 1 ------------------------------------------------------------------------

fn lca_oracle(y: &LabelVector, p: &[f64]) -> f64 {
    let mut sum = 0.0;
    let mut pairs = 0usize;
    for a in 0..y.len() {
        for b in 0..y.len() {
            if !y.get(a) && y.get(b) {
                sum += (p[a] - p[b]).exp();
                pairs += 1;
            }
        }
    }
    if pairs == 0 {
        0.0
    } else {
        sum / pairs as f64
    }
}

fn lca_against_oracle() -> Outcome {
    let start = Instant::now();
    let mut r = rng(1);
    let mut worst: f64 = 0.0;
    for _ in 0..1000 {
        let c = r.random_range(2..=11);
        let y = random_labels(&mut r, c);
        let p: Vec<f64> = (0..c).map(|_| r.random::<f64>()).collect();
        worst = worst.max((lca_loss(&y, &p).unwrap() - lca_oracle(&y, &p)).abs());
    }
    let mut edges_zero = true;
    for c in 2..=11 {
        let p: Vec<f64> = (0..c).map(|_| r.random::<f64>()).collect();
        edges_zero &= lca_loss(&LabelVector::zeros(c), &p).unwrap() == 0.0;
        edges_zero &= lca_loss(&LabelVector::new(vec![1; c]).unwrap(), &p).unwrap() == 0.0;
    }
    let t = start.elapsed();
    check(
        worst <= 1e-12 && edges_zero && t < Duration::from_secs(5),
        format!("max |Δ| = {worst:.1e} over 1000 cases, neutral/all-positive exactly 0: {edges_zero}, {t:.2?}"),
    )
}

// 2 ------------------------------------------------------------------------

fn gradient_check() -> Outcome {
    let start = Instant::now();
    let mut r = rng(2);
    let step = 1e-5;
    let mut worst: f64 = 0.0;
    let mut instances = 0;
    for &alpha in &[0.0, 0.2, 0.5, 1.0] {
        let cfg = LossConfig::new(alpha).unwrap();
        for _ in 0..30 {
            let m = r.random_range(1..=4);
            let c = r.random_range(2..=11);
            let ys: Vec<LabelVector> = (0..m).map(|_| random_labels(&mut r, c)).collect();
            let ps: Vec<Vec<f64>> = (0..m).map(|_| (0..c).map(|_| r.random_range(0.05..0.95)).collect()).collect();
            let grads = joint_loss_grad(&ys, &ps, cfg).unwrap();
            for i in 0..m {
                for k in 0..c {
                    let mut plus = ps.clone();
                    plus[i][k] += step;
                    let mut minus = ps.clone();
                    minus[i][k] -= step;
                    let fd = (joint_loss(&ys, &plus, cfg).unwrap().total - joint_loss(&ys, &minus, cfg).unwrap().total)
                        / (2.0 * step);
                    let an = grads[i][k];
                    worst = worst.max((fd - an).abs() / an.abs().max(fd.abs()).max(1e-8));
                }
            }
            instances += 1;
        }
    }
    let t = start.elapsed();
    check(
        worst < 1e-4 && instances >= 100 && t < Duration::from_secs(30),
        format!("max relative error {worst:.2e} over {instances} batches, α ∈ {{0, 0.2, 0.5, 1}}, {t:.2?}"),
    )
}

// 3 ------------------------------------------------------------------------

fn mixture_endpoints() -> Outcome {
    let mut r = rng(3);
    let mut ok = true;
    let mut worst: f64 = 0.0;
    for _ in 0..200 {
        let c = r.random_range(2..=11);
        let ys: Vec<LabelVector> = (0..3).map(|_| random_labels(&mut r, c)).collect();
        let ps: Vec<Vec<f64>> = (0..3).map(|_| (0..c).map(|_| r.random::<f64>()).collect()).collect();
        let at = |a: f64| joint_loss(&ys, &ps, LossConfig::new(a).unwrap()).unwrap();
        let (v0, v1) = (at(0.0), at(1.0));
        ok &= v0.total == v0.bce_part && v1.total == v1.lca_part;
        let totals: Vec<f64> = [0.2, 0.5, 0.8]
            .iter()
            .map(|&alpha| {
                let v = at(alpha);
                worst = worst.max((v.total - ((1.0 - alpha) * v0.bce_part + alpha * v1.lca_part)).abs());
                v.total
            })
            .collect();
        // equally spaced α: equal increments
        worst = worst.max(((totals[1] - totals[0]) - (totals[2] - totals[1])).abs());
    }
    check(ok && worst <= 1e-12, format!("α=0 ≡ BCE and α=1 ≡ LCA bit-exact: {ok}; affinity residual {worst:.1e}"))
}

// 4 ------------------------------------------------------------------------

fn metric_oracle(gold: &[LabelVector], pred: &[LabelVector]) -> (f64, f64, f64) {
    let c = gold[0].len();
    let set = |y: &LabelVector| -> HashSet<usize> { (0..c).filter(|&k| y.get(k)).collect() };
    let (mut tp, mut fp, mut fn_) = (vec![0usize; c], vec![0usize; c], vec![0usize; c]);
    let mut jac = 0.0;
    for (g, p) in gold.iter().zip(pred) {
        let (gs, ps) = (set(g), set(p));
        for k in 0..c {
            match (gs.contains(&k), ps.contains(&k)) {
                (true, true) => tp[k] += 1,
                (false, true) => fp[k] += 1,
                (true, false) => fn_[k] += 1,
                _ => {}
            }
        }
        let union = gs.union(&ps).count();
        jac += if union == 0 { 1.0 } else { gs.intersection(&ps).count() as f64 / union as f64 };
    }
    let f1 = |t: usize, p: usize, n: usize| if 2 * t + p + n == 0 { 0.0 } else { (2 * t) as f64 / (2 * t + p + n) as f64 };
    let micro = f1(tp.iter().sum(), fp.iter().sum(), fn_.iter().sum());
    let macro_ = (0..c).map(|k| f1(tp[k], fp[k], fn_[k])).sum::<f64>() / c as f64;
    (micro, macro_, jac / gold.len() as f64)
}

fn metrics_against_oracle() -> Outcome {
    let mut r = rng(4);
    let mut mismatches = 0;
    for _ in 0..500 {
        let c = r.random_range(2..=11);
        let n = r.random_range(1..=12);
        let gold: Vec<LabelVector> = (0..n).map(|_| random_labels(&mut r, c)).collect();
        let pred: Vec<LabelVector> = (0..n).map(|_| random_labels(&mut r, c)).collect();
        let rep = evaluate(&gold, &pred).unwrap();
        if (rep.micro_f1, rep.macro_f1, rep.jaccard) != metric_oracle(&gold, &pred) {
            mismatches += 1;
        }
    }
    let neutral = evaluate(&[LabelVector::zeros(11)], &[LabelVector::zeros(11)]).unwrap().jaccard;
    let s = default_semeval_space();
    let footnote =
        evaluate(&[s.vector_of(&["anger", "joy"]).unwrap()], &[s.vector_of(&["joy"]).unwrap()]).unwrap().jaccard;
    check(
        mismatches == 0 && neutral == 1.0 && footnote == 0.5,
        format!("{mismatches}/500 mismatches; both-empty jacS = {neutral}; {{anger, joy}} vs {{joy}} jacS = {footnote}"),
    )
}

// 5 ------------------------------------------------------------------------

fn head_algebra() -> Outcome {
    let mut r = rng(5);
    let (t, d) = (9, 7);
    let h = Array2::from_shape_fn((t, d), |_| r.random_range(-1.0..1.0));
    let w = Array2::from_shape_fn((d, d), |_| r.random_range(-1.0..1.0));
    let b = Array1::from_shape_fn(d, |_| r.random_range(-1.0..1.0));
    let p = Array1::from_shape_fn(d, |_| r.random_range(-1.0..1.0));
    let head = HeadParameters::from_arrays(w.clone(), b.clone(), p.clone()).unwrap();
    let hs = HiddenStates::new(h.clone());
    let scores = score_tokens(&hs, &head).unwrap();
    let mut worst: f64 = 0.0;
    for (ti, score) in scores.iter().enumerate() {
        let mut s = 0.0;
        for j in 0..d {
            let mut z = b[j];
            for i in 0..d {
                z += h[[ti, i]] * w[[i, j]];
            }
            s += p[j] * z.tanh();
        }
        worst = worst.max((s - score).abs());
    }

    let zero = HeadParameters::zeros(d);
    let zero_scores = score_tokens(&hs, &zero).unwrap();
    let half = zero_scores.iter().all(|&s| emospan::model::sigmoid(s) == 0.5);

    let p2 = Array1::from_shape_fn(d, |_| r.random_range(-1.0..1.0));
    let (ka, kb) = (1.7, -0.4);
    let at = |pv: Array1<f64>| score_tokens(&hs, &HeadParameters::from_arrays(w.clone(), b.clone(), pv).unwrap()).unwrap();
    let s1 = at(p.clone());
    let s2 = at(p2.clone());
    let mix = at(&p * ka + &p2 * kb);
    let lin = mix.iter().zip(s1.iter().zip(&s2)).map(|(m, (x, y))| (m - (ka * x + kb * y)).abs()).fold(0.0, f64::max);
    check(
        worst < 1e-9 && half && lin < 1e-9,
        format!("scalar-oracle |Δ| {worst:.1e}; zero head gives 0.5: {half}; linearity residual {lin:.1e}"),
    )
}

// 6 ------------------------------------------------------------------------

fn overfit() -> Outcome {
    let start = Instant::now();
    let (tr, va) = overfit_data();
    let cfg = overfit_config();
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    let run = |dir: &Path| train(&cfg, &tr, &va, dir).unwrap();
    let (ra, rb) = (run(a.path()), run(b.path()));
    let first = ra
        .log
        .iter()
        .find(|row| row.split == LogSplit::Train && row.metrics.unwrap().2 >= 0.95)
        .map(|row| row.epoch);
    let final_jac = evaluate_checkpoint(&ra.checkpoint, &tr, cfg.threshold).unwrap().jaccard;
    let identical = std::fs::read(&ra.log_path).unwrap() == std::fs::read(&rb.log_path).unwrap();
    let t = start.elapsed();
    check(
        first.is_some_and(|e| e <= 200) && final_jac >= 0.95 && identical && t < Duration::from_secs(120),
        format!(
            "train jacS ≥ 0.95 first at epoch {first:?}; kept checkpoint jacS {final_jac:.3}; logs byte-identical: {identical}; {t:.2?} for two runs"
        ),
    )
}

// 7 ------------------------------------------------------------------------

fn ablation_wiring() -> Outcome {
    let (tr, va) = overfit_data();
    let mut seen = Vec::new();
    let mut problems = Vec::new();
    for ablation in Ablation::ALL {
        let cfg = TrainConfig { ablation, epochs: 1, early_stop_patience: 1, ..quick_config() };
        let dir = tempfile::tempdir().unwrap();
        let out = train(&cfg, &tr, &va, dir.path()).unwrap();
        let (model, meta) = load_checkpoint(&out.checkpoint).unwrap();
        let input = model.assemble(&tr.examples[0].tokens).unwrap();
        let expected_alpha = match ablation {
            Ablation::NoLca => 0.0,
            Ablation::NoBce => 1.0,
            _ => 0.2,
        };
        let sentence_only = ablation == Ablation::NoLabelSegment;
        if meta.ablation != ablation || meta.alpha != expected_alpha {
            problems.push(format!("{ablation}: metadata"));
        }
        if (meta.head == HeadKind::Pooled) != sentence_only {
            problems.push(format!("{ablation}: head kind"));
        }
        if sentence_only != (input.label_token_count() == 0 && input.label_positions.is_empty()) {
            problems.push(format!("{ablation}: label tokens"));
        }
        seen.push((meta.ablation, meta.alpha, meta.head));
    }
    let distinct = seen.iter().map(|s| format!("{s:?}")).collect::<HashSet<_>>().len();
    check(
        problems.is_empty() && distinct == 4,
        format!("4 checkpoints, {distinct} distinct (ablation, α, head) records; no_label_segment consumes 0 label tokens; problems: {problems:?}"),
    )
}

// 8 ------------------------------------------------------------------------

struct Table3 {
    lang: &'static str,
    language: Language,
    counts: [usize; 3],
    pct: [f64; 3],
}

const TABLE3: [Table3; 3] = [
    Table3 { lang: "En", language: Language::English, counts: [6838, 886, 3259], pct: [14.36, 40.55, 30.92] },
    Table3 { lang: "Ar", language: Language::Arabic, counts: [2278, 585, 1518], pct: [21.38, 39.03, 29.85] },
    Table3 { lang: "Es", language: Language::Spanish, counts: [3561, 679, 2854], pct: [39.11, 42.15, 12.76] },
];

fn official_paths(dir: &Path, lang: &str) -> Option<[PathBuf; 3]> {
    let find = |suffixes: &[&str]| {
        suffixes.iter().map(|s| dir.join(format!("2018-E-c-{lang}-{s}.txt"))).find(|p| p.exists())
    };
    Some([find(&["train"])?, find(&["dev"])?, find(&["test-gold", "test"])?])
}

fn data_statistics() -> Outcome {
    let (tr, va, te) = (load_fixture(Split::Train), load_fixture(Split::Valid), load_fixture(Split::Test));
    let s = compute_stats(&[&tr, &va, &te]).unwrap();
    let fixture_ok = s.counts[&Split::Train] == 30
        && s.counts[&Split::Valid] == 8
        && s.counts[&Split::Test] == 12
        && s.class_count == 11
        && s.neutral_count == 5
        && (s.co_existing_pct[&1] - 100.0 / 3.0).abs() < 1e-9
        && (s.co_existing_pct[&2] - 40.0).abs() < 1e-9
        && (s.co_existing_pct[&3] - 20.0).abs() < 1e-9;
    let mut detail = format!("fixture 30/8/12, 11 classes, 33.33/40.00/20.00 %: {fixture_ok}");
    let mut ok = fixture_ok;

    if let Some(dir) = std::env::var_os("EMOSPAN_SEMEVAL_DIR").map(PathBuf::from) {
        for row in &TABLE3 {
            let Some(paths) = official_paths(&dir, row.lang) else {
                detail.push_str(&format!("; {} files absent", row.lang));
                continue;
            };
            let space = LabelSpace::for_language(row.language);
            let sets: Vec<Dataset> = paths
                .iter()
                .zip([Split::Train, Split::Valid, Split::Test])
                .map(|(p, split)| load_ec_tsv(p, &space, split).unwrap())
                .collect();
            let st = compute_stats(&sets.iter().collect::<Vec<_>>()).unwrap();
            let counts = [st.counts[&Split::Train], st.counts[&Split::Valid], st.counts[&Split::Test]];
            let pct = [st.co_existing_pct[&1], st.co_existing_pct[&2], st.co_existing_pct[&3]];
            let lang_ok = counts == row.counts
                && st.class_count == 11
                && pct.iter().zip(row.pct).all(|(a, b)| (a - b).abs() <= 0.5);
            ok &= lang_ok;
            detail.push_str(&format!(
                "; {} official {:?} vs {:?}, co-emo % [{:.2}, {:.2}, {:.2}] vs {:?}: {lang_ok}",
                row.lang, counts, row.counts, pct[0], pct[1], pct[2], row.pct
            ));
        }
    } else {
        detail.push_str("; official files not supplied (EMOSPAN_SEMEVAL_DIR)");
    }
    check(ok, detail)
}

// 9 ------------------------------------------------------------------------

fn rigged_model() -> SpanModel {
    let vocab = Vocab::build(SEMEVAL_EMOTIONS.iter().copied().chain(["pissed", "calm", "today", "rain"]));
    let mut enc = ToyEncoder::zeros(ToyConfig { width: 5, ..Default::default() }, vocab.clone());
    let mut r = rng(9);
    for v in enc.tokens.value.iter_mut() {
        *v = r.random_range(-1.0..1.0);
    }
    let shared = enc.tokens.value.row(vocab.id("pissed").unwrap() as usize).to_owned();
    enc.tokens.value.row_mut(vocab.id("anger").unwrap() as usize).assign(&shared);
    SpanModel {
        space: default_semeval_space(),
        encoder: AnyEncoder::Toy(enc),
        head: Head::Span(HeadParameters::zeros(5)),
        dropout: 0.0,
    }
}

fn analysis_invariants() -> Outcome {
    let model = rigged_model();
    let tokens: Vec<String> = ["calm", "pissed", "rain"].iter().map(|s| s.to_string()).collect();
    let input = model.assemble(&tokens).unwrap();
    let h = model.hidden_states(&input).unwrap();
    let base = similarity_from_hidden(&input, &h);
    let mut r = rng(10);
    let mut scaled = h.clone();
    for mut row in scaled.matrix_mut().rows_mut() {
        row *= r.random_range(0.01..100.0);
    }
    let scale_dev = base
        .iter()
        .flatten()
        .zip(similarity_from_hidden(&input, &scaled).iter().flatten())
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max);
    let self_cos = cosine(h.row(0), h.row(0));

    let dev = load_fixture(Split::Valid);
    let gold = dev.labels();
    let corr = label_correlations(&gold, dev.space.names(), LabelSource::Gold).unwrap();
    let mut pearson_dev: f64 = 0.0;
    for i in 0..11 {
        for j in 0..11 {
            if let Some(v) = corr.values[i][j] {
                let x: Vec<f64> = gold.iter().map(|y| y.get(i) as u8 as f64).collect();
                let y: Vec<f64> = gold.iter().map(|y| y.get(j) as u8 as f64).collect();
                let n = x.len() as f64;
                let (mx, my) = (x.iter().sum::<f64>() / n, y.iter().sum::<f64>() / n);
                let cov: f64 = x.iter().zip(&y).map(|(a, b)| (a - mx) * (b - my)).sum();
                let vx: f64 = x.iter().map(|a| (a - mx).powi(2)).sum();
                let vy: f64 = y.iter().map(|b| (b - my).powi(2)).sum();
                pearson_dev = pearson_dev.max((v - cov / (vx * vy).sqrt()).abs());
            }
        }
    }
    let signs = corr.get("anger", "disgust").is_some_and(|v| v > 0.0) && corr.get("joy", "sadness").is_some_and(|v| v < 0.0);

    let sentences = ["so calm today", "pissed rain today", "calm pissed"];
    let examples = sentences
        .iter()
        .enumerate()
        .map(|(i, s)| Example::new(format!("r{i}"), *s, LabelVector::zeros(11)))
        .collect();
    let ds = Dataset::new(Split::Valid, default_semeval_space(), examples).unwrap();
    let table = word_associations(&model, &ds, 3).unwrap();
    let top = &table.rows[0][0];
    let rigged = top.0 == "pissed" && (top.1 - 1.0).abs() < 1e-12;
    let deterministic = table == word_associations(&model, &ds, 3).unwrap();

    check(
        scale_dev < 1e-12 && (self_cos - 1.0).abs() < 1e-12 && pearson_dev < 1e-12 && signs && rigged && deterministic,
        format!(
            "scale-invariance |Δ| {scale_dev:.1e}; Pearson oracle |Δ| {pearson_dev:.1e}; gold signs anger~disgust > 0, joy~sadness < 0: {signs}; rigged word first at {:.12}: {rigged}; deterministic: {deterministic}",
            top.1
        ),
    )
}

// 10 -----------------------------------------------------------------------

fn full_scale() -> Outcome {
    // (language, miF1, tol, optional (maF1, tol), optional (jacS, tol))
    let targets = [
        ("EN", "En", 0.713, 0.015, Some((0.578, 0.02)), Some((0.601, 0.015))),
        ("AR", "Ar", 0.666, 0.02, None, None),
        ("ES", "Es", 0.641, 0.02, None, None),
    ];
    let Some(dir) = std::env::var_os("EMOSPAN_SEMEVAL_DIR").map(PathBuf::from) else {
        return Outcome { status: Status::Skip, detail: "optional; EMOSPAN_SEMEVAL_DIR not set".into() };
    };
    let mut details = Vec::new();
    let mut ok = true;
    let mut ran = false;
    for (tag, lang, mi, mi_tol, ma, jac) in targets {
        let Some(ck) = std::env::var_os(format!("EMOSPAN_CHECKPOINT_{tag}")).map(PathBuf::from) else { continue };
        let Some(paths) = official_paths(&dir, lang) else { continue };
        ran = true;
        let (_, meta) = load_checkpoint(&ck).unwrap();
        let test = load_ec_tsv(&paths[2], &meta.space, Split::Test).unwrap();
        let r = evaluate_checkpoint(&ck, &test, meta.threshold).unwrap();
        let mut lang_ok = (r.micro_f1 - mi).abs() <= mi_tol;
        if let Some((v, t)) = ma {
            lang_ok &= (r.macro_f1 - v).abs() <= t;
        }
        if let Some((v, t)) = jac {
            lang_ok &= (r.jaccard - v).abs() <= t;
        }
        ok &= lang_ok;
        details.push(format!("{lang}: {r} (target miF1 {mi}): {lang_ok}"));
    }
    if !ran {
        return Outcome { status: Status::Skip, detail: "optional; no EMOSPAN_CHECKPOINT_{EN,AR,ES} supplied".into() };
    }
    check(ok, details.join("; "))
}

fn main() -> ExitCode {
    type Criterion = (&'static str, fn() -> Outcome);
    let criteria: [Criterion; 10] = [
        ("LCA loss matches pair-enumeration oracle", lca_against_oracle),
        ("joint-loss gradient matches finite differences", gradient_check),
        ("loss mixture endpoints and affinity", mixture_endpoints),
        ("metrics match counting oracle", metrics_against_oracle),
        ("span head algebra", head_algebra),
        ("toy encoder overfits trigger data", overfit),
        ("ablation wiring", ablation_wiring),
        ("dataset statistics", data_statistics),
        ("analysis invariants", analysis_invariants),
        ("full-scale test scores (optional)", full_scale),
    ];
    let mut failed = 0;
    for (i, (name, run)) in criteria.iter().enumerate() {
        let outcome = run();
        let tag = match outcome.status {
            Status::Pass => "PASS",
            Status::Fail => {
                // criterion 10 never gates the build
                if i + 1 != 10 {
                    failed += 1;
                }
                "FAIL"
            }
            Status::Skip => "SKIP",
        };
        println!("[{tag}] {:>2}. {name}: {}", i + 1, outcome.detail);
    }
    if failed == 0 {
        println!("acceptance: all binding criteria passed");
        ExitCode::SUCCESS
    } else {
        println!("acceptance: {failed} binding criteria failed");
        ExitCode::FAILURE
    }
}
