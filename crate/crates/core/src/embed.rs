//! Hashed character n-gram embeddings and PCA.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub const DIM: usize = 100;
pub const NGRAMS: [usize; 3] = [3, 4, 5];
const BUCKET_SEED: u64 = 0x5eed_0001;
const SIGN_SEED: u64 = 0x5eed_0002;

pub const PCA_TOLERANCE: f64 = 1e-9;
pub const PCA_MAX_ITER: usize = 1000;
pub const MIN_EIGENVALUE: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum EmbedError {
    #[error("cannot embed empty text")]
    EmptyText,
    #[error("need 1 <= k <= {max}, got {k}")]
    BadK { k: usize, max: usize },
    #[error("rows must be non-empty and share one dimension")]
    BadMatrix,
    #[error("only {found} components above the eigenvalue floor, {wanted} requested")]
    RankDeficient { found: usize, wanted: usize },
}

/// FNV-1a over UTF-8 bytes, with the seed folded into the offset basis.
fn fnv1a(seed: u64, data: &[u8]) -> u64 {
    let mut h = 0xcbf2_9ce4_8422_2325u64 ^ seed.wrapping_mul(0x9e37_79b9_7f4a_7c15);
    for &b in data {
        h ^= u64::from(b);
        h = h.wrapping_mul(0x0000_0100_0000_01b3);
    }
    h
}

/// Sum of signed one-hot buckets for every 3-, 4- and 5-gram of
/// `<text>`, scaled to unit length.
pub fn embed(text: &str) -> Result<Vec<f64>, EmbedError> {
    if text.trim().is_empty() {
        return Err(EmbedError::EmptyText);
    }
    let padded: Vec<char> = format!("<{text}>").chars().collect();
    let mut v = vec![0.0; DIM];
    let mut buf = String::new();
    for n in NGRAMS {
        for w in padded.windows(n) {
            buf.clear();
            buf.extend(w);
            let bucket = (fnv1a(BUCKET_SEED, buf.as_bytes()) % DIM as u64) as usize;
            let sign = if fnv1a(SIGN_SEED, buf.as_bytes()) & 1 == 0 { 1.0 } else { -1.0 };
            v[bucket] += sign;
        }
    }
    let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    if norm == 0.0 {
        // Every n-gram cancelled out; fall back to the first bucket.
        v[0] = 1.0;
    } else {
        v.iter_mut().for_each(|x| *x /= norm);
    }
    Ok(v)
}

pub fn cosine(a: &[f64], b: &[f64]) -> f64 {
    let dot: f64 = a.iter().zip(b).map(|(x, y)| x * y).sum();
    let na = a.iter().map(|x| x * x).sum::<f64>().sqrt();
    let nb = b.iter().map(|x| x * x).sum::<f64>().sqrt();
    dot / (na * nb)
}

#[derive(Debug, Clone, PartialEq)]
pub struct Pca {
    pub mean: Vec<f64>,
    /// Unit eigenvectors of the covariance, by decreasing eigenvalue.
    pub components: Vec<Vec<f64>>,
    /// Variance along each component (population covariance, divided by n).
    pub eigenvalues: Vec<f64>,
    pub total_variance: f64,
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn mat_vec(m: &[Vec<f64>], v: &[f64]) -> Vec<f64> {
    m.iter().map(|row| dot(row, v)).collect()
}

fn normalize(v: &mut [f64]) -> f64 {
    let n = dot(v, v).sqrt();
    if n > 0.0 {
        v.iter_mut().for_each(|x| *x /= n);
    }
    n
}

impl Pca {
    /// Fit the top `k` components by power iteration with deflation.
    pub fn fit(rows: &[Vec<f64>], k: usize) -> Result<Pca, EmbedError> {
        let d = rows.first().map_or(0, Vec::len);
        if d == 0 || rows.iter().any(|r| r.len() != d) {
            return Err(EmbedError::BadMatrix);
        }
        if k == 0 || k > d || k > rows.len() {
            return Err(EmbedError::BadK { k, max: d.min(rows.len()) });
        }
        let n = rows.len() as f64;
        let mut mean = vec![0.0; d];
        for r in rows {
            for (m, x) in mean.iter_mut().zip(r) {
                *m += x;
            }
        }
        mean.iter_mut().for_each(|m| *m /= n);
        let mut cov = vec![vec![0.0; d]; d];
        for r in rows {
            let c: Vec<f64> = r.iter().zip(&mean).map(|(x, m)| x - m).collect();
            for i in 0..d {
                for j in i..d {
                    cov[i][j] += c[i] * c[j];
                }
            }
        }
        for i in 0..d {
            for j in i..d {
                cov[i][j] /= n;
                cov[j][i] = cov[i][j];
            }
        }
        let total_variance = (0..d).map(|i| cov[i][i]).sum();

        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let mut components = Vec::with_capacity(k);
        let mut eigenvalues = Vec::with_capacity(k);
        for _ in 0..k {
            let mut v: Vec<f64> = (0..d).map(|_| rng.gen_range(-1.0..1.0)).collect();
            normalize(&mut v);
            for _ in 0..PCA_MAX_ITER {
                let mut next = mat_vec(&cov, &v);
                if normalize(&mut next) == 0.0 {
                    v = next;
                    break;
                }
                let delta = next.iter().zip(&v).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
                v = next;
                if delta < PCA_TOLERANCE {
                    break;
                }
            }
            let lambda = dot(&v, &mat_vec(&cov, &v));
            if !(lambda >= MIN_EIGENVALUE) {
                return Err(EmbedError::RankDeficient { found: components.len(), wanted: k });
            }
            // Fix the sign so the largest entry is positive.
            let pivot = v.iter().copied().fold(0.0, |a: f64, x| if x.abs() > a.abs() { x } else { a });
            if pivot < 0.0 {
                v.iter_mut().for_each(|x| *x = -*x);
            }
            for i in 0..d {
                for j in 0..d {
                    cov[i][j] -= lambda * v[i] * v[j];
                }
            }
            components.push(v);
            eigenvalues.push(lambda);
        }
        Ok(Pca { mean, components, eigenvalues, total_variance })
    }

    pub fn project(&self, row: &[f64]) -> Vec<f64> {
        let c: Vec<f64> = row.iter().zip(&self.mean).map(|(x, m)| x - m).collect();
        self.components.iter().map(|v| dot(v, &c)).collect()
    }

    pub fn transform(&self, rows: &[Vec<f64>]) -> Vec<Vec<f64>> {
        rows.iter().map(|r| self.project(r)).collect()
    }
}

/// Fit and project in one step.
pub fn pca(rows: &[Vec<f64>], k: usize) -> Result<Vec<Vec<f64>>, EmbedError> {
    Ok(Pca::fit(rows, k)?.transform(rows))
}
