//! Deliberately naive reference implementations for the metric tests.

/// Pad every ASCII punctuation character except `_` with spaces, then split.
pub fn words(text: &str) -> Vec<String> {
    let mut spaced = String::new();
    for c in text.chars() {
        if c.is_ascii_punctuation() && c != '_' {
            spaced.push(' ');
            spaced.push(c);
            spaced.push(' ');
        } else {
            spaced.push(c);
        }
    }
    spaced.split_whitespace().map(str::to_string).collect()
}

fn grams(toks: &[String], n: usize) -> Vec<String> {
    if toks.len() < n {
        return Vec::new();
    }
    (0..=toks.len() - n).map(|i| toks[i..i + n].join("\u{1}")).collect()
}

fn occurrences(list: &[String], g: &str) -> usize {
    list.iter().filter(|x| x.as_str() == g).count()
}

/// Clipped matches by scanning every distinct hypothesis n-gram.
pub fn clipped(hyp: &[String], reference: &[String], n: usize) -> (usize, usize) {
    let h = grams(hyp, n);
    let r = grams(reference, n);
    let mut distinct: Vec<&String> = Vec::new();
    for g in &h {
        if !distinct.contains(&g) {
            distinct.push(g);
        }
    }
    let matched = distinct.iter().map(|g| occurrences(&h, g).min(occurrences(&r, g))).sum();
    (matched, h.len())
}

pub fn bleu(hyps: &[&str], refs: &[&str]) -> f64 {
    let mut m = [0usize; 4];
    let mut t = [0usize; 4];
    let (mut c, mut r) = (0usize, 0usize);
    for (h, rf) in hyps.iter().zip(refs) {
        let hw = words(h);
        let rw = words(rf);
        c += hw.len();
        r += rw.len();
        for n in 1..=4 {
            let (a, b) = clipped(&hw, &rw, n);
            m[n - 1] += a;
            t[n - 1] += b;
        }
    }
    let mut product = 1.0;
    for n in 0..4 {
        if t[n] == 0 || m[n] == 0 {
            return 0.0;
        }
        product *= m[n] as f64 / t[n] as f64;
    }
    let bp = if c > r { 1.0 } else { (1.0 - r as f64 / c as f64).exp() };
    100.0 * bp * product.powf(0.25)
}

/// LCS length by the full quadratic table.
pub fn lcs(a: &[String], b: &[String]) -> usize {
    let mut t = vec![vec![0usize; b.len() + 1]; a.len() + 1];
    for i in 1..=a.len() {
        for j in 1..=b.len() {
            t[i][j] = if a[i - 1] == b[j - 1] {
                t[i - 1][j - 1] + 1
            } else {
                t[i - 1][j].max(t[i][j - 1])
            };
        }
    }
    t[a.len()][b.len()]
}

fn prf(overlap: usize, hyp_total: usize, ref_total: usize) -> [f64; 3] {
    if overlap == 0 || hyp_total == 0 || ref_total == 0 {
        return [0.0; 3];
    }
    let p = overlap as f64 / hyp_total as f64;
    let r = overlap as f64 / ref_total as f64;
    [p, r, 2.0 * p * r / (p + r)]
}

/// [[P, R, F1] for ROUGE-1, ROUGE-2, ROUGE-L].
pub fn rouge(hyp: &str, reference: &str) -> [[f64; 3]; 3] {
    let h = words(hyp);
    let r = words(reference);
    let (m1, t1) = clipped(&h, &r, 1);
    let (m2, t2) = clipped(&h, &r, 2);
    [
        prf(m1, t1, r.len()),
        prf(m2, t2, r.len().saturating_sub(1)),
        prf(lcs(&h, &r), h.len(), r.len()),
    ]
}

/// Random token soup with plenty of overlap between pairs.
pub fn random_pairs(seed: u64, count: usize) -> Vec<(String, String)> {
    use rand::{Rng, SeedableRng};
    const VOCAB: [&str; 12] = ["the", "cat", "x", "y", "(", ")", ",", "foo_bar", "=", "1", "return", "self"];
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let sentence = |rng: &mut rand_chacha::ChaCha8Rng| {
        let n = rng.gen_range(0..=30);
        (0..n).map(|_| VOCAB[rng.gen_range(0..VOCAB.len())]).collect::<Vec<_>>().join(" ")
    };
    (0..count)
        .map(|_| {
            let a = sentence(&mut rng);
            let b = if rng.gen_bool(0.3) { a.clone() } else { sentence(&mut rng) };
            (a, b)
        })
        .collect()
}
