mod common;

use common::reference as refimpl;
use common::{load, rng, words};
use rand::Rng;
use vlmc::bounds::*;
use vlmc::simulate::{conditional_dist, marginal_prob, stationary_distribution};
use vlmc::{TruncationLevel, VlmcModel, Word};

const TOL: f64 = 1e-12;

fn close(x: f64, y: f64) -> bool {
    refimpl::rel_close(x, y, TOL)
}

fn constants(r: &mut impl Rng) -> ChainConstants {
    ChainConstants {
        alpha0: r.random_range(0.01..=1.0),
        beta: r.random_range(0.0..3.0),
        epsilon: r.random_range(0.01..1.0),
        p_min: r.random_range(0.01..=1.0),
    }
}

#[test]
fn over_bounds_match_reference() {
    let mut r = rng(31);
    for _ in 0..100 {
        let n = r.random_range(2..10_000_000u64);
        let delta = r.random_range(0.5..500.0);
        let a = r.random_range(2..6usize);
        let k_n = r.random_range(1.0..1e4);
        let got = over_bound(n, delta, a).unwrap();
        assert!(close(got.raw, refimpl::over(n as f64, delta, a as f64)));
        assert!((0.0..=1.0).contains(&got.clamped));
        let got = over_bound_restricted(n, delta, a, k_n).unwrap();
        assert!(close(got.raw, refimpl::over_restricted(n as f64, delta, a as f64, k_n)));
    }
}

#[test]
fn under_bound_matches_reference() {
    let mut r = rng(32);
    for _ in 0..100 {
        let c = constants(&mut r);
        let n = r.random_range(10..100_000_000u64);
        let f = r.random_range(0.0..50.0);
        let a = r.random_range(2..5usize);
        let (k, d) = (r.random_range(1..5usize), r.random_range(1..6usize));
        let got = under_bound(&c, n, f, a, k, d).unwrap();
        let want = refimpl::under(c.alpha0, c.beta, c.epsilon, c.p_min, n as f64, f, a as f64, k as f64, d as f64);
        assert!(close(got.raw, want), "{} vs {want}", got.raw);
        let bracket = c.p_min.powi(d as i32) - 8.0 * a as f64 * d as f64 * f / (c.epsilon.powi(2) * n as f64);
        assert_eq!(got.valid, bracket > 0.0 && got.raw >= 0.0);
    }
}

#[test]
fn deviation_bounds_match_reference() {
    let mut r = rng(33);
    for _ in 0..100 {
        let delta = r.random_range(0.1..100.0);
        let n = r.random_range(2..1_000_000u64);
        let a = r.random_range(2..6usize);
        assert!(close(dev_bound_binary(delta, n).unwrap().raw, refimpl::dev_binary(delta, n as f64)));
        assert!(close(dev_bound_multi(delta, n, a).unwrap().raw, refimpl::dev_multi(delta, n as f64, a as f64)));
        let cond = dev_bound_multi_conditional(delta, n, a).unwrap();
        assert!(close(cond.raw, refimpl::dev_multi_conditional(delta, n as f64, a as f64)));
        assert_eq!(cond.valid, delta > 1.0 && cond.raw <= 1.0);
    }
}

#[test]
fn count_and_separation_bounds_match_reference() {
    let mut r = rng(34);
    for _ in 0..100 {
        let c = constants(&mut r);
        let a = r.random_range(2..5usize);
        let n = r.random_range(10..1_000_000u64);
        let (w_len, u_len) = (r.random_range(0..5usize), r.random_range(0..5usize));
        let (p_w, p_u) = (r.random_range(0.01..1.0), r.random_range(0.01..1.0));
        let t = r.random_range(0.01..1.0) * n as f64 * p_w;
        let got = appb_empirical_count_bound(&c, a, w_len, n, t).unwrap();
        assert!(close(got.raw, refimpl::count_dev(c.alpha0, c.beta, a as f64, (w_len + 1) as f64, n as f64, t)));
        let got = appb_count_lower_tail(&c, p_w, w_len, n, t, a).unwrap();
        assert!(close(got.raw, refimpl::count_lower(c.alpha0, c.beta, a as f64, p_w, w_len as f64, n as f64, t)));
        let gap = r.random_range(0.01..1.0);
        let tt = r.random_range(0.001..0.999) * gap * gap / 8.0;
        let got = appb_div_separation(&c, p_u, p_w, u_len, w_len, n, tt, a, gap).unwrap();
        let want = refimpl::div_sep(c.alpha0, c.beta, a as f64, p_u, p_w, u_len as f64, w_len as f64, n as f64, tt);
        assert!(close(got.raw, want));
    }
}

#[test]
fn count_and_separation_bounds_nonincreasing_in_n() {
    let c = ChainConstants { alpha0: 0.4, beta: 0.5, epsilon: 0.2, p_min: 0.1 };
    let mut prev = [f64::INFINITY; 3];
    for n in (1..=20).map(|i| i * 1000u64) {
        // the count deviation is measured on the scale of n, so t grows with it
        let now = [
            appb_empirical_count_bound(&c, 2, 2, n, 0.05 * n as f64).unwrap().raw,
            appb_count_lower_tail(&c, 0.6, 2, n, 500.0, 2).unwrap().raw,
            appb_div_separation(&c, 0.3, 0.4, 2, 1, n, 0.01, 2, 0.5).unwrap().raw,
        ];
        for (p, q) in prev.iter().zip(&now) {
            assert!(q <= p);
        }
        prev = now;
    }
}

#[test]
fn count_deviation_weakens_with_n_at_fixed_t() {
    let c = ChainConstants { alpha0: 0.4, beta: 0.5, epsilon: 0.2, p_min: 0.1 };
    let small = appb_empirical_count_bound(&c, 2, 2, 1000, 100.0).unwrap().raw;
    let large = appb_empirical_count_bound(&c, 2, 2, 10_000, 100.0).unwrap().raw;
    assert!(large > small);
}

#[test]
fn failed_preconditions_never_yield_claims() {
    let c = ChainConstants { alpha0: 0.4, beta: 0.5, epsilon: 0.2, p_min: 0.1 };
    assert!(matches!(appb_count_lower_tail(&c, 0.5, 1, 100, 50.0, 2), Err(BoundError::PreconditionViolated(_))));
    assert!(matches!(appb_div_separation(&c, 0.5, 0.5, 1, 1, 100, 0.1, 2, 0.5), Err(BoundError::PreconditionViolated(_))));
    assert!(appb_empirical_count_bound(&c, 2, 1, 100, 0.0).is_err());
    assert!(over_bound(0, 1.0, 2).is_err());
    assert!(over_bound(10, 1.0, 1).is_err());
    let zero = ChainConstants { alpha0: 0.0, ..c };
    let rep = under_bound(&zero, 1_000_000, 1.0, 2, 1, 1).unwrap();
    assert!(!rep.valid && rep.reason.as_deref().is_some_and(|s| s.contains("alpha0")));
    let rep = under_bound(&ChainConstants { epsilon: 0.0, ..c }, 1_000_000, 1.0, 2, 1, 1).unwrap();
    assert!(!rep.valid);
    let rep = under_bound(&c, 10, 5.0, 2, 1, 1).unwrap();
    assert!(!rep.valid && rep.reason.as_deref().is_some_and(|s| s.contains("n0")));
    let rep = dev_bound_binary(0.5, 100).unwrap();
    assert!(!rep.valid && rep.clamped == 1.0);
}

/// `β_k` straight from the definition: all `w ∈ A^k`, `u ∈ A^r` for
/// `r ≤ h + 2`, conditionals computed as ratios of marginals.
fn beta_k_direct(m: &VlmcModel, k: usize) -> f64 {
    let table = stationary_distribution(m).unwrap();
    let a = m.alphabet_size();
    let p = |w: &[u8]| marginal_prob(m, &table, &Word::new(w.to_vec()));
    let cond = |w: &[u8], x: u8| p(&[w, &[x]].concat()) / p(w);
    let mut best: f64 = 0.0;
    for w in words(a, k) {
        if p(&w) == 0.0 {
            continue;
        }
        for r in 1..=m.height() + 2 {
            for u in words(a, r) {
                let uw = [u, w.clone()].concat();
                if p(&uw) == 0.0 {
                    continue;
                }
                for x in 0..a as u8 {
                    best = best.max((cond(&w, x) - cond(&uw, x)).abs());
                }
            }
        }
    }
    best
}

#[test]
fn beta_k_two_ways() {
    for name in ["fixture.model", "order1.model", "iid.model", "ternary.model"] {
        let m = load(name);
        let table = stationary_distribution(&m).unwrap();
        for k in 1..=m.height() + 1 {
            let lib = beta_k(&m, &table, k).unwrap();
            let direct = beta_k_direct(&m, k);
            assert!((lib - direct).abs() <= 1e-12, "{name} k={k}: {lib} vs {direct}");
            if k >= m.height() {
                assert_eq!(lib, 0.0, "{name} k={k}");
            }
        }
    }
}

#[test]
fn fixture_coefficients() {
    let m = load("fixture.model");
    let table = stationary_distribution(&m).unwrap();
    assert_eq!(alpha0(&m), 0.4);
    assert_eq!(p_min_d(&m, &table, 2).unwrap(), 0.1);
    let coeffs = ModelCoefficients::compute(&m, TruncationLevel::new(3).unwrap(), 4).unwrap();
    assert_eq!(coeffs.alpha0, 0.4);
    assert_eq!(coeffs.beta_k.len(), 1);
    // conditionals of a context word come straight from the model
    assert_eq!(conditional_dist(&m, &table, &Word::new(vec![0, 0])).unwrap(), vec![0.1, 0.9]);
}
