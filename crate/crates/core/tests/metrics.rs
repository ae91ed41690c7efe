use std::collections::BTreeMap;

use partcap::captioner::tokenize;
use partcap::metrics::{
    align, bleu_n, cider, corpus_bleu, evaluate, meteor_simple, modified_precision, rouge_l, Tokens, COLUMNS,
};
use proptest::prelude::*;

fn t(s: &str) -> Tokens {
    tokenize(s)
}

fn sentence() -> impl Strategy<Value = Tokens> {
    prop::collection::vec(prop::sample::select(vec!["a", "b", "c", "d", "e", "f"]), 1..10)
        .prop_map(|v| v.into_iter().map(String::from).collect())
}

#[test]
fn hand_values() {
    assert_eq!(modified_precision(&t("the the the the the the the"), &[t("the cat is on the mat")], 1), (2, 7));
    assert!((rouge_l(&t("a b c d"), &[t("a c b d")]).unwrap() - 0.75).abs() < 1e-12);
    assert_eq!(align(&t("the cat sat"), &t("the sat cat")), (3, 3));
    assert!((meteor_simple(&t("the cat sat"), &[t("the sat cat")]).unwrap() - 0.5).abs() < 1e-12);
    let n = 5.0;
    let s = t("a b c d e");
    assert!((meteor_simple(&s, &[s.clone()]).unwrap() - (1.0 - 0.5 / (n * n * n))).abs() < 1e-12);
    let c = cider(&[t("a red chair"), t("a blue table")], &[vec![t("a red chair")], vec![t("one blue table")]]);
    assert!(c.is_ok());
    let (x, y) = (t("a red wooden chair"), t("one blue metal table"));
    let c = cider(&[x.clone(), y.clone()], &[vec![x], vec![y]]).unwrap();
    assert!((c.mean - 10.0).abs() < 1e-9);
    let short = cider(&[t("red chair"), t("blue table")], &[vec![t("red chair")], vec![t("blue table")]]).unwrap();
    assert!((short.mean - 5.0).abs() < 1e-9);
    assert_eq!(meteor_simple(&t("x y"), &[t("a b")]).unwrap(), 0.0);
    let zero = cider(&[t("x y"), t("blue table")], &[vec![t("red chair")], vec![t("blue table")]]).unwrap();
    assert_eq!(zero.per_shape[0], 0.0);
}

#[test]
fn errors() {
    assert!(cider(&[t("a")], &[vec![t("a")]]).is_err());
    assert!(bleu_n(&t("a"), &[], 1).is_err());
    assert!(rouge_l(&t("a"), &[]).is_err());
    assert!(meteor_simple(&t("a"), &[]).is_err());
    assert!(evaluate(&BTreeMap::new(), &BTreeMap::new()).is_err());
    let cands = BTreeMap::from([("x".to_string(), "a b".to_string())]);
    assert!(evaluate(&cands, &BTreeMap::new()).is_err());
}

#[test]
fn evaluate_table_layout() {
    let cands = BTreeMap::from([("s1".to_string(), "a red chair .".to_string()), ("s2".to_string(), "a table".to_string())]);
    let refs = BTreeMap::from([
        ("s1".to_string(), vec!["a red chair .".to_string()]),
        ("s2".to_string(), vec!["a green table .".to_string(), "green table".to_string()]),
    ]);
    let e = evaluate(&cands, &refs).unwrap();
    assert_eq!(COLUMNS, ["B-1", "B-2", "B-3", "B-4", "M", "R", "C"]);
    assert_eq!(e.samples.len(), 2);
    assert_eq!(e.exact_match_rate, 0.5);
    for (i, v) in e.table.iter().enumerate() {
        let mean = e.samples.iter().map(|s| s.scores[i]).sum::<f64>() / 2.0;
        assert!((v - mean).abs() < 1e-12);
    }
    assert!(e.table_text().starts_with("     B-1     B-2"));
    assert_eq!(e.samples_tsv().lines().count(), 3);
}

proptest! {
    #[test]
    fn scores_in_range(c in sentence(), r in prop::collection::vec(sentence(), 1..3), other in sentence()) {
        for n in 1..=4 {
            let b = bleu_n(&c, &r, n).unwrap();
            prop_assert!((0.0..=1.0).contains(&b));
        }
        let m = meteor_simple(&c, &r).unwrap();
        let l = rouge_l(&c, &r).unwrap();
        prop_assert!((0.0..=1.0).contains(&m) && (0.0..=1.0).contains(&l));
        let cd = cider(&[c.clone(), other.clone()], &[r.clone(), vec![other.clone()]]).unwrap();
        prop_assert!(cd.per_shape.iter().all(|v| (0.0..=10.0 + 1e-9).contains(v)));
    }

    #[test]
    fn identity_maximizes(c in sentence(), d in sentence()) {
        prop_assert!((bleu_n(&c, &[c.clone()], 1).unwrap() - 1.0).abs() < 1e-12);
        prop_assert!((rouge_l(&c, &[c.clone()]).unwrap() - 1.0).abs() < 1e-12);
        let n = c.len() as f64;
        prop_assert!((meteor_simple(&c, &[c.clone()]).unwrap() - (1.0 - 0.5 / (n * n * n))).abs() < 1e-12);
        prop_assert!(meteor_simple(&d, &[c.clone()]).unwrap() <= meteor_simple(&c, &[c.clone()]).unwrap() + 1e-12);
        prop_assert!(rouge_l(&d, &[c.clone()]).unwrap() <= 1.0);
    }

    #[test]
    fn extra_reference_never_hurts(c in sentence(), r in sentence(), extra in sentence()) {
        prop_assert!(rouge_l(&c, &[r.clone(), extra.clone()]).unwrap() >= rouge_l(&c, &[r.clone()]).unwrap());
        prop_assert!(meteor_simple(&c, &[r.clone(), extra.clone()]).unwrap() >= meteor_simple(&c, &[r.clone()]).unwrap());
    }

    #[test]
    fn duplicated_references_leave_cider(c in sentence(), r in sentence(), c2 in sentence(), r2 in sentence()) {
        let a = cider(&[c.clone(), c2.clone()], &[vec![r.clone()], vec![r2.clone()]]).unwrap();
        let b = cider(&[c, c2], &[vec![r.clone(), r], vec![r2.clone(), r2]]).unwrap();
        for (x, y) in a.per_shape.iter().zip(&b.per_shape) {
            prop_assert!((x - y).abs() < 1e-9);
        }
    }

    #[test]
    fn corpus_bleu_of_one_pair_is_sentence_bleu(c in sentence(), r in sentence()) {
        for n in 1..=4 {
            let s = bleu_n(&c, &[r.clone()], n).unwrap();
            let k = corpus_bleu(&[c.clone()], &[vec![r.clone()]], n).unwrap();
            prop_assert!((s - k).abs() < 1e-12);
        }
    }
}

#[test]
fn bleu_non_increasing_in_n_on_captions() {
    let refs = [
        "a red wooden chair with a tall green back , two arms and four long legs .",
        "a black metal table with a square top , no shelf and four short legs .",
    ];
    let cands = [
        "a red metal chair with a tall green back , no arms and four long legs .",
        "a black wooden table with a long top , a shelf and four short legs .",
        "a chair with a back and legs .",
    ];
    for r in refs {
        for c in cands {
            let v: Vec<f64> = (1..=4).map(|n| bleu_n(&t(c), &[t(r)], n).unwrap()).collect();
            assert!(v.windows(2).all(|w| w[1] <= w[0] + 1e-12), "{c} | {r}: {v:?}");
        }
    }
}
