mod common;

use common::tiny_config;
use vcot::chartgen::{generate_corpus, render_chart};
use vcot::model::{decode_logits, encode_image, init_model, patchify};
use vcot::numcore::{AdamWConfig, OptimizerState, Tape};
use vcot::train::*;

fn tiny_train_config() -> TrainConfig {
    let mut c = TrainConfig {
        lr: 1e-3,
        batch: 4,
        max_epochs: 6,
        patience: 2,
        ..TrainConfig::default()
    };
    c.model = tiny_config(0);
    c.curriculum.epochs_per_stage = [1, 1, 1];
    c
}

#[test]
fn repeated_steps_on_one_batch_reduce_loss() {
    let recs = generate_corpus(4, 21);
    let vocab = build_vocabulary(&recs);
    let mut params = init_model(&tiny_config(vocab.len()), 2).unwrap();
    let seqs: Vec<TrainingSequence> = recs
        .iter()
        .map(|r| build_training_sequence(r, &vocab, Variant::Full).unwrap())
        .collect();
    let batch: Vec<TrainExample> = recs
        .iter()
        .zip(&seqs)
        .map(|(r, s)| TrainExample {
            patches: patchify(&render_chart(&r.spec, 64).unwrap(), &params.config).unwrap(),
            sequence: s,
        })
        .collect();
    let mut opt = OptimizerState::new(AdamWConfig {
        lr: 1e-3,
        ..AdamWConfig::default()
    });
    let losses: Vec<f64> = (0..51).map(|_| train_step(&mut params, &mut opt, &batch).unwrap()).collect();
    let decreases = losses.windows(2).filter(|w| w[1] < w[0]).count();
    assert!(decreases >= 45, "{decreases}/50 decreasing steps: {losses:?}");
    assert!(losses[50] < losses[0]);
}

#[test]
fn instruction_prefix_receives_no_gradient() {
    let recs = generate_corpus(2, 22);
    let vocab = build_vocabulary(&recs);
    let params = init_model(&tiny_config(vocab.len()), 3).unwrap();
    for variant in [Variant::Full, Variant::NoVcot] {
        let seq = build_training_sequence(&recs[0], &vocab, variant).unwrap();
        let img = render_chart(&recs[0].spec, 64).unwrap();
        let features = encode_image(&params, &img).unwrap();
        let logits = decode_logits(&params, &features, &seq.ids[..seq.ids.len() - 1]).unwrap();
        let mut tape = Tape::new();
        let l = tape.param(logits);
        let loss = tape.cross_entropy(l, &seq.ids[1..], &seq.loss_mask[1..]).unwrap();
        let g = tape.backward(loss).unwrap().wrt(l);
        let (rows, _) = g.dims2();
        let prompt_rows = seq.loss_mask[1..].iter().take_while(|&&m| m == 0.0).count();
        assert!(prompt_rows > 5);
        for r in 0..rows {
            let zero = g.row(r).iter().all(|&v| v == 0.0);
            assert_eq!(zero, r < prompt_rows, "row {r}");
        }
    }
}

#[test]
fn fit_is_deterministic() {
    let recs = generate_corpus(20, 23);
    let vocab = build_vocabulary(&recs);
    let split = split_corpus(&recs);
    let mut c = tiny_train_config();
    c.max_epochs = 3;
    let a = fit(&c, &split.train, &split.val, &vocab).unwrap();
    let b = fit(&c, &split.train, &split.val, &vocab).unwrap();
    assert_eq!(history_table(&a.history), history_table(&b.history));
    assert_eq!(a.params.flatten(), b.params.flatten());
    c.workers = 3;
    let w = fit(&c, &split.train, &split.val, &vocab).unwrap();
    assert_eq!(w.params.flatten(), a.params.flatten());
}

#[test]
fn history_bounded_and_best_returned() {
    let recs = generate_corpus(20, 24);
    let vocab = build_vocabulary(&recs);
    let split = split_corpus(&recs);
    let c = tiny_train_config();
    let r = fit(&c, &split.train, &split.val, &vocab).unwrap();
    assert!(r.history.len() <= c.max_epochs);
    let min = r.history.iter().map(|h| h.val_nll).fold(f64::INFINITY, f64::min);
    assert_eq!(r.best_val_nll, min);
    assert_eq!(r.history[r.best_epoch].val_nll, min);
    let again = evaluate_nll(&r.params, &split.val, &vocab, &c).unwrap();
    assert!((again - min).abs() < 1e-12);
}

#[test]
fn max_steps_caps_training() {
    let recs = generate_corpus(20, 25);
    let vocab = build_vocabulary(&recs);
    let split = split_corpus(&recs);
    let mut c = tiny_train_config();
    c.max_steps = Some(5);
    let r = fit(&c, &split.train, &split.val, &vocab).unwrap();
    assert_eq!(r.steps, 5);
    assert_eq!(r.stop, StopReason::MaxSteps);
}

#[test]
fn lora_training_moves_only_adapters() {
    let recs = generate_corpus(20, 26);
    let vocab = build_vocabulary(&recs);
    let split = split_corpus(&recs);
    let mut c = tiny_train_config();
    c.max_epochs = 1;
    c.lora_rank = Some(2);
    let r = fit(&c, &split.train, &split.val, &vocab).unwrap();
    let mut mc = c.model.clone();
    mc.vocab_size = vocab.len();
    let base = init_model(&mc, c.seed).unwrap();
    for p in base.params() {
        assert_eq!(r.params.get(&p.name).unwrap().value, p.value, "{}", p.name);
    }
    assert!(r.params.params().iter().any(|p| p.name.ends_with("lora_b") && p.value.data().iter().any(|&v| v != 0.0)));
}
