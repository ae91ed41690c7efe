//! Trains the captioner on random per-class features paired with template
//! captions and checks it can reproduce them greedily.

use partcap::aggregate::ShapeFeature;
use partcap::captioner::{train_captioner, CaptionerConfig, CaptionerTrainConfig, Vocabulary};
use partcap::nn::{OptimizerConfig, OptimizerKind};
use partcap::pipeline::{generate_synthetic_dataset, ShapeCategory};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let shapes = generate_synthetic_dataset(10, 2, ShapeCategory::Table)?;
    let vocab = Vocabulary::build(shapes.iter().map(|s| s.caption.as_str()));
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let (c, d) = (3, 16);
    let data: Vec<_> = shapes
        .iter()
        .map(|s| {
            let mut f = ShapeFeature::empty(c, d);
            for k in 0..c {
                f.per_class[k] = (0..d).map(|_| rng.gen_range(-1.0..1.0)).collect();
                f.present[k] = true;
            }
            (f, vocab.encode(&s.caption))
        })
        .collect();
    let tc = CaptionerTrainConfig {
        steps: 3000,
        optimizer: OptimizerConfig {
            kind: OptimizerKind::Adam,
            learning_rate: 3e-3,
            ..Default::default()
        },
        ..Default::default()
    };
    let (model, log) = train_captioner(&data, CaptionerConfig::new(vocab.len(), c, d), &tc)?;
    println!("vocabulary {} tokens, loss {:.3} -> {:.3}", vocab.len(), log.head_mean(20), log.tail_mean(20));
    let mut exact = 0;
    for ((f, _), s) in data.iter().zip(&shapes) {
        let out = vocab.decode(&model.generate_caption(f, 30)?);
        exact += usize::from(out == s.caption);
        println!("{}  {out}", if out == s.caption { "ok  " } else { "miss" });
    }
    println!("{exact}/{} exact", shapes.len());
    Ok(())
}
