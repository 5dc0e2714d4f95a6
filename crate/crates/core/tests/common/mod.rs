//! Shared test support: fixture loading, random instances, and independent
//! reference implementations used as oracles.
#![allow(dead_code)]

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::collections::BTreeMap;
use std::path::PathBuf;
use vlmc::format::read_model;
use vlmc::{Alphabet, Sample, VlmcModel};

pub fn fixture_path(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures").join(name)
}

pub fn load(name: &str) -> VlmcModel {
    read_model(&fixture_path(name)).unwrap()
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Random binary sample whose first `past` symbols are the past, drawn from
/// a random chain of order at most 2 so that deep words carry structure.
pub fn random_sample(rng: &mut ChaCha8Rng, past: usize, n: usize) -> Sample {
    let order = rng.random_range(0..=2usize);
    let probs: Vec<f64> = (0..1 << order).map(|_| rng.random::<f64>()).collect();
    let mut s: Vec<u8> = (0..past.max(order)).map(|_| rng.random_range(0..2)).collect();
    while s.len() < past.max(order) + n {
        let ctx = s[s.len() - order..].iter().fold(0usize, |a, &b| a * 2 + b as usize);
        s.push(u8::from(rng.random::<f64>() < probs[ctx]));
    }
    let s = s[s.len() - past - n..].to_vec();
    Sample::new(Alphabet::binary(), s, past).unwrap()
}

/// `N(w, a)` by brute force: every effective position `t` whose preceding
/// `|w|` symbols spell `w`.
pub fn naive_counts(raw: &[u8], past: usize, w: &[u8], a: usize) -> Vec<u64> {
    let mut out = vec![0; a];
    for t in past..raw.len() {
        if raw[t - w.len()..t] == *w {
            out[raw[t] as usize] += 1;
        }
    }
    out
}

/// All words of length `k` over `0..a` as plain vectors.
pub fn words(a: usize, k: usize) -> Vec<Vec<u8>> {
    let mut out = vec![vec![]];
    for _ in 0..k {
        out = out
            .into_iter()
            .flat_map(|w| (0..a as u8).map(move |b| [w.clone(), vec![b]].concat()))
            .collect();
    }
    out
}

/// Straight-line bound formulas, written independently of the library.
pub mod reference {
    use std::f64::consts::E;

    pub fn over(n: f64, delta: f64, a: f64) -> f64 {
        let a_sq = a.powf(2.0);
        let term = E * (delta * n.ln() + a_sq) * n.powf(2.0) * E.powf(-delta / a_sq);
        1.0 - term
    }

    pub fn over_restricted(n: f64, delta: f64, a: f64, k_n: f64) -> f64 {
        let a_sq = a.powf(2.0);
        1.0 - 2.0 * E * (delta * n.ln() + a_sq) * k_n * E.powf(-delta / a_sq)
    }

    #[allow(clippy::too_many_arguments)]
    pub fn under(alpha0: f64, beta: f64, eps: f64, p_min: f64, n: f64, f: f64, a: f64, k: f64, d: f64) -> f64 {
        let pref_exp = alpha0 / (32.0 * E.powf(2.0) * a.powf(2.0) * (a * beta + 2.0 * alpha0));
        let bracket = p_min.powf(d) - 8.0 * a * d * f / (eps.powf(2.0) * n);
        let arg = -n * eps.powf(2.0) * bracket.powf(2.0) / (16.0 * (d + 1.0));
        1.0 - 3.0 * E.powf(pref_exp) * a.powf(2.0 + k) * E.powf(arg)
    }

    pub fn dev_binary(delta: f64, n: f64) -> f64 {
        2.0 * E * (delta * n.ln()).ceil() * E.powf(-delta)
    }

    pub fn dev_multi(delta: f64, n: f64, a: f64) -> f64 {
        2.0 * E * (delta * n.ln() + a) * E.powf(-delta / a)
    }

    pub fn dev_multi_conditional(delta: f64, n: f64, a: f64) -> f64 {
        2.0 * E * (delta * n.ln() + a - 1.0) * E.powf(-delta / (a - 1.0))
    }

    pub fn count_dev(alpha0: f64, beta: f64, a: f64, wa_len: f64, n: f64, t: f64) -> f64 {
        E.powf(alpha0 / (8.0 * E.powf(2.0) * (a * beta + 2.0 * alpha0))) * E.powf(-t.powf(2.0) / (wa_len * n))
    }

    pub fn count_lower(alpha0: f64, beta: f64, a: f64, p_w: f64, w_len: f64, n: f64, t: f64) -> f64 {
        E.powf(alpha0 / (8.0 * E.powf(2.0) * a.powf(2.0) * (a * beta + 2.0 * alpha0)))
            * a
            * E.powf(-n * (p_w - t / n).powf(2.0) / (w_len + 1.0))
    }

    #[allow(clippy::too_many_arguments)]
    pub fn div_sep(alpha0: f64, beta: f64, a: f64, p_u: f64, p_w: f64, u_len: f64, w_len: f64, n: f64, t: f64) -> f64 {
        let m = f64::min(p_w.powf(2.0) / (w_len + 1.0), p_u.powf(2.0) / (u_len + 1.0));
        2.0 * E.powf(alpha0 / (32.0 * E.powf(2.0) * a.powf(2.0) * (a * beta + 2.0 * alpha0)))
            * (a + 1.0)
            * E.powf(-n * (t / 2.0) * m)
    }

    pub fn rel_close(x: f64, y: f64, tol: f64) -> bool {
        x == y || (x - y).abs() <= tol * x.abs().max(y.abs())
    }
}

/// Exact rational-free conditional probabilities of a model by brute force:
/// `p(v)` via the block chain solved by long power iteration on a dense
/// matrix, used to cross-check coefficient computations.
pub fn dense_stationary(model: &VlmcModel) -> BTreeMap<Vec<u8>, f64> {
    let a = model.alphabet_size();
    let h = model.height().max(1);
    let states = words(a, h);
    let index: BTreeMap<Vec<u8>, usize> = states.iter().cloned().enumerate().map(|(i, s)| (s, i)).collect();
    let m = states.len();
    let mut p = vec![vec![0.0; m]; m];
    let resolver = model.resolver();
    for (i, s) in states.iter().enumerate() {
        let dist = model.dist_at(resolver.resolve(s).unwrap());
        for (x, &q) in dist.iter().enumerate() {
            let mut t = s[1..].to_vec();
            t.push(x as u8);
            p[i][index[&t]] += q;
        }
    }
    let mut pi = vec![1.0 / m as f64; m];
    for _ in 0..20_000 {
        let mut next = vec![0.0; m];
        for i in 0..m {
            for j in 0..m {
                next[j] += pi[i] * (0.5 * p[i][j] + if i == j { 0.5 } else { 0.0 });
            }
        }
        pi = next;
    }
    states.into_iter().zip(pi).collect()
}
