mod common;

use common::{max_grad_error, rng};
use partcap::aggregate::ShapeFeature;
use partcap::captioner::{
    tokenize, train_captioner, CaptionerConfig, CaptionerModel, CaptionerTrainConfig, TokenSequence, Vocabulary,
    BOS, EOS, PAD, UNK,
};
use partcap::nn::{GruCell, OptimizerConfig, OptimizerKind, Parameters, Tensor};
use proptest::prelude::*;
use rand::Rng;

fn feature(seed: u64, c: usize, d: usize, present: &[bool]) -> ShapeFeature {
    let mut r = rng(seed);
    let mut f = ShapeFeature::empty(c, d);
    for k in 0..c {
        if present[k] {
            f.per_class[k] = (0..d).map(|_| r.gen_range(-1.0..1.0)).collect();
            f.present[k] = true;
        }
    }
    f
}

#[test]
fn caption_loss_gradients_match_finite_differences() {
    for seed in 0..5u64 {
        for skip_absent in [false, true] {
            let mut cfg = CaptionerConfig::new(12, 4, 5);
            cfg.embed_dim = 6;
            cfg.hidden_dim = 8;
            cfg.skip_absent = skip_absent;
            let model = CaptionerModel::new(cfg, seed).unwrap();
            let f = feature(seed, 4, 5, &[true, false, true, true]);
            let seq = TokenSequence::from_words(&[4, 7, 11, 4, 3], 12).unwrap();
            let (_, grad) = model.loss_and_grad(&f, &seq).unwrap();
            let err = max_grad_error(&model, &grad, |m| m.caption_loss(&f, &seq).unwrap());
            assert!(err < 1e-4, "seed {seed} skip {skip_absent}: {err:e}");
        }
    }
}

#[derive(Clone)]
struct Cell(GruCell);

impl Parameters for Cell {
    fn visit(&self, f: &mut dyn FnMut(&str, &Tensor)) {
        self.0.visit("gru", f);
    }
    fn visit_mut(&mut self, f: &mut dyn FnMut(&str, &mut Tensor)) {
        self.0.visit_mut("gru", f);
    }
}

#[test]
fn gru_cell_gradients_match_finite_differences() {
    for seed in 0..5u64 {
        let mut r = rng(seed);
        let cell = Cell(GruCell::new(3, 4, &mut r));
        let x: Vec<f64> = (0..3).map(|_| r.gen_range(-1.0..1.0)).collect();
        let h: Vec<f64> = (0..4).map(|_| r.gen_range(-1.0..1.0)).collect();
        let w: Vec<f64> = (0..4).map(|_| r.gen_range(-1.0..1.0)).collect();
        let objective = |c: &Cell, x: &[f64], h: &[f64]| -> f64 { c.0.forward(x, h).iter().zip(&w).map(|(a, b)| a * b).sum() };
        let mut grad = Cell(cell.0.zeros_like());
        let (dx, dh) = cell.0.backward(&cell.0.step(&x, &h), &w, &mut grad.0);
        let err = max_grad_error(&cell, &grad, |c| objective(c, &x, &h));
        assert!(err < 1e-4, "params {err:e}");
        for (i, g) in dx.iter().enumerate() {
            let (mut up, mut down) = (x.clone(), x.clone());
            up[i] += 1e-4;
            down[i] -= 1e-4;
            let n = (objective(&cell, &up, &h) - objective(&cell, &down, &h)) / 2e-4;
            assert!((g - n).abs() < 1e-8);
        }
        for (i, g) in dh.iter().enumerate() {
            let (mut up, mut down) = (h.clone(), h.clone());
            up[i] += 1e-4;
            down[i] -= 1e-4;
            let n = (objective(&cell, &x, &up) - objective(&cell, &x, &down)) / 2e-4;
            assert!((g - n).abs() < 1e-8);
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn loss_is_positive_and_generation_pure(seed in any::<u64>(), words in prop::collection::vec(4usize..10, 0..8)) {
        let model = CaptionerModel::new(CaptionerConfig::new(10, 3, 4), seed).unwrap();
        let f = feature(seed, 3, 4, &[true, true, false]);
        let seq = TokenSequence::from_words(&words, 10).unwrap();
        prop_assert!(model.caption_loss(&f, &seq).unwrap() > 0.0);
        let a = model.generate_caption(&f, 12).unwrap();
        prop_assert_eq!(&a, &model.generate_caption(&f, 12).unwrap());
        prop_assert!(a.len() <= 12);
        prop_assert!(a.words().iter().all(|&w| w != PAD && w != BOS && w != EOS && w < 10));
        prop_assert_eq!(a.ids()[0], BOS);
        prop_assert_eq!(*a.ids().last().unwrap(), EOS);
    }

    #[test]
    fn tokens_are_lowercase_and_split(text in "[A-Za-z ,.!]{0,40}") {
        let toks = tokenize(&text);
        for t in &toks {
            prop_assert_eq!(t.to_lowercase(), t.clone());
            prop_assert!(!t.contains(' '));
            prop_assert!(t.len() == 1 || !t.chars().any(|c| c.is_ascii_punctuation()));
        }
        prop_assert_eq!(toks.concat(), text.to_lowercase().replace(' ', ""));
    }
}

#[test]
fn vocabulary_layout() {
    let v = Vocabulary::build(["A red chair.", "a blue chair !"]);
    assert_eq!(v.token(PAD), Some("<pad>"));
    assert_eq!(v.token(UNK), Some("<unk>"));
    assert_eq!(v.id("a"), Some(4));
    assert_eq!(v.len(), 4 + 6);
    let seq = v.encode("A green chair.");
    assert_eq!(seq.words()[1], UNK);
    assert_eq!(v.decode(&v.encode("a red chair .")), "a red chair .");
    let back = Vocabulary::from_text(&v.to_text()).unwrap();
    assert_eq!(back, v);
    assert_eq!(Vocabulary::from_tokens(["x", "x"]).unwrap().len(), 5);
    assert!(Vocabulary::from_text("<pad>\n<bos>\n<eos>\n<unk>\nx\nx\n").is_err());
    assert!(Vocabulary::from_tokens(["Upper"]).is_err());
    assert!(TokenSequence::from_words(&[BOS], 10).is_err());
    assert!(TokenSequence::from_words(&[10], 10).is_err());
}

#[test]
fn memorized_caption_beats_random_sequence() {
    let captions = ["a b c d .", "b d a a c .", "c c b ."];
    let vocab = Vocabulary::build(captions);
    let data: Vec<_> = captions
        .iter()
        .enumerate()
        .map(|(i, c)| (feature(i as u64, 2, 4, &[true, i != 1]), vocab.encode(c)))
        .collect();
    let tc = CaptionerTrainConfig {
        steps: 600,
        batch_size: 3,
        optimizer: OptimizerConfig { kind: OptimizerKind::Adam, learning_rate: 1e-2, ..Default::default() },
        seed: 1,
    };
    let (model, log) = train_captioner(&data, CaptionerConfig::new(vocab.len(), 2, 4), &tc).unwrap();
    assert!(log.tail_mean(20) < 0.1 * log.head_mean(20));
    let mut r = rng(5);
    for (f, seq) in &data {
        assert_eq!(&model.generate_caption(f, 10).unwrap(), seq);
        let random: Vec<usize> = (0..seq.len()).map(|_| r.gen_range(4..vocab.len())).collect();
        let random = TokenSequence::from_words(&random, vocab.len()).unwrap();
        assert!(model.caption_loss(f, seq).unwrap() < model.caption_loss(f, &random).unwrap());
    }
}

#[test]
fn checkpoint_roundtrip_and_errors() {
    let model = CaptionerModel::new(CaptionerConfig::new(9, 2, 3), 4).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path().join("c.ckpt");
    model.save(&p).unwrap();
    let back = CaptionerModel::load(&p).unwrap();
    assert_eq!(back.config, model.config);
    assert!(model.caption_loss(&ShapeFeature::empty(3, 3), &TokenSequence::from_words(&[4], 9).unwrap()).is_err());
    assert!(train_captioner(&[], model.config, &CaptionerTrainConfig::default()).is_err());
    assert!(CaptionerModel::new(CaptionerConfig::new(3, 2, 3), 0).is_err());
}
