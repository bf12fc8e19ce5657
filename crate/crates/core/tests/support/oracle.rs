//! Slow reference implementations of the corpus metrics, written without
//! sharing code with the library.

#![allow(dead_code)]

use std::collections::BTreeMap;

/// N-grams keyed by their space-joined text.
fn grams(tokens: &[String], n: usize) -> BTreeMap<String, usize> {
    let mut m = BTreeMap::new();
    let mut i = 0;
    while i + n <= tokens.len() {
        *m.entry(tokens[i..i + n].join(" ")).or_insert(0) += 1;
        i += 1;
    }
    m
}

/// Corpus BLEU-4: clipped counts summed over the corpus, geometric mean
/// of the four precisions taken as a product, brevity penalty from the
/// closest reference length (shorter wins ties). Zero when any precision
/// is zero.
pub fn bleu(corpus: &[(Vec<String>, Vec<Vec<String>>)]) -> f64 {
    let mut num = [0usize; 4];
    let mut den = [0usize; 4];
    let mut c = 0usize;
    let mut r = 0usize;
    for (hyp, refs) in corpus {
        c += hyp.len();
        let mut lens: Vec<usize> = refs.iter().map(Vec::len).collect();
        lens.sort();
        let mut best = lens[0];
        for &l in &lens {
            let d = |x: usize| if x > hyp.len() { x - hyp.len() } else { hyp.len() - x };
            if d(l) < d(best) {
                best = l;
            }
        }
        r += best;
        for n in 1..=4 {
            let h = grams(hyp, n);
            for (g, count) in &h {
                let mut allowed = 0;
                for rf in refs {
                    allowed = allowed.max(*grams(rf, n).get(g).unwrap_or(&0));
                }
                num[n - 1] += (*count).min(allowed);
                den[n - 1] += count;
            }
        }
    }
    if num.iter().any(|&x| x == 0) {
        return 0.0;
    }
    let product: f64 = (0..4).map(|k| num[k] as f64 / den[k] as f64).product();
    let bp = if c > r { 1.0 } else { (1.0 - r as f64 / c as f64).exp() };
    bp * product.powf(0.25)
}

fn is_subsequence(sub: &[&String], of: &[String]) -> bool {
    let mut it = of.iter();
    sub.iter().all(|s| it.any(|t| t == *s))
}

/// Longest common subsequence by enumerating every subset of `a`.
pub fn lcs_brute(a: &[String], b: &[String]) -> usize {
    assert!(a.len() <= 16);
    let mut best = 0;
    for mask in 0u32..(1 << a.len()) {
        let k = mask.count_ones() as usize;
        if k <= best {
            continue;
        }
        let sub: Vec<&String> = (0..a.len()).filter(|i| mask >> i & 1 == 1).map(|i| &a[i]).collect();
        if is_subsequence(&sub, b) {
            best = k;
        }
    }
    best
}

/// Mean over pairs of the best per-reference ROUGE-L F1 (or recall).
pub fn rouge_l(corpus: &[(Vec<String>, Vec<Vec<String>>)], recall_only: bool) -> f64 {
    if corpus.is_empty() {
        return 0.0;
    }
    let mut total = 0.0;
    for (hyp, refs) in corpus {
        let mut best: f64 = 0.0;
        for rf in refs {
            let l = lcs_brute(hyp, rf) as f64;
            let score = if l == 0.0 {
                0.0
            } else if recall_only {
                l / rf.len() as f64
            } else {
                let p = l / hyp.len() as f64;
                let r = l / rf.len() as f64;
                2.0 * p * r / (p + r)
            };
            best = best.max(score);
        }
        total += best;
    }
    total / corpus.len() as f64
}
