//! Scores a few candidate captions with BLEU, METEOR, ROUGE-L and CIDEr.

use std::collections::BTreeMap;

use partcap::metrics::evaluate;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let pairs = [
        ("s1", "a red wooden chair with four legs .", "a red wooden chair with four short legs ."),
        ("s2", "a metal table with a shelf .", "a green metal table with no shelf ."),
        ("s3", "a chair", "a purple plastic chair with a tall back ."),
    ];
    let cands: BTreeMap<String, String> = pairs.iter().map(|(k, c, _)| (k.to_string(), c.to_string())).collect();
    let refs: BTreeMap<String, Vec<String>> =
        pairs.iter().map(|(k, _, r)| (k.to_string(), vec![r.to_string()])).collect();
    let e = evaluate(&cands, &refs)?;
    print!("{}", e.table_text());
    print!("{}", e.samples_tsv());
    Ok(())
}
