mod common;

use common::{dense_stationary, load, words};
use vlmc::simulate::{conditional_dist, marginal_prob, sample_path, stationary_distribution, Init, SimConfig};
use vlmc::{CountTrie, Word};

const FIXTURES: [&str; 4] = ["fixture.model", "order1.model", "iid.model", "ternary.model"];

#[test]
fn residuals_are_small() {
    for name in FIXTURES {
        let table = stationary_distribution(&load(name)).unwrap();
        assert!(table.residual() <= 1e-12, "{name}: {}", table.residual());
    }
}

#[test]
fn marginals_are_consistent() {
    for name in FIXTURES {
        let m = load(name);
        let a = m.alphabet_size();
        let table = stationary_distribution(&m).unwrap();
        for k in 0..=3 {
            let total: f64 = words(a, k).into_iter().map(|w| marginal_prob(&m, &table, &Word::new(w))).sum();
            assert!((total - 1.0).abs() < 1e-12, "{name} k={k}");
        }
        // stationarity: p(w) = Σ_b p(bw) = Σ_a p(wa)
        for k in 0..=2 {
            for w in words(a, k) {
                let p = marginal_prob(&m, &table, &Word::new(w.clone()));
                let left: f64 = (0..a as u8).map(|b| marginal_prob(&m, &table, &Word::new([vec![b], w.clone()].concat()))).sum();
                let right: f64 = (0..a as u8).map(|b| marginal_prob(&m, &table, &Word::new([w.clone(), vec![b]].concat()))).sum();
                assert!((p - left).abs() < 1e-12 && (p - right).abs() < 1e-12, "{name} {w:?}");
            }
        }
    }
}

#[test]
fn stationary_table_matches_dense_solver() {
    for name in FIXTURES {
        let m = load(name);
        let table = stationary_distribution(&m).unwrap();
        for (block, p) in dense_stationary(&m) {
            let got = table.prob_of_block(&Word::new(block.clone())).unwrap();
            assert!((got - p).abs() < 1e-10, "{name} {block:?}: {got} vs {p}");
        }
    }
}

#[test]
fn order_one_stationary_law() {
    let m = load("order1.model");
    let table = stationary_distribution(&m).unwrap();
    assert!((marginal_prob(&m, &table, &Word::new(vec![1])) - 0.2).abs() <= 1e-12);
}

#[test]
fn empirical_conditionals_within_three_standard_errors() {
    for (i, name) in FIXTURES.iter().enumerate() {
        let m = load(name);
        let a = m.alphabet_size();
        let table = stationary_distribution(&m).unwrap();
        let cfg = SimConfig { n: 100_000, past: 3, seed: 100 + i as u64, init: Init::Stationary };
        let s = sample_path(&m, &cfg).unwrap();
        let trie = CountTrie::build(&s, 3).unwrap();
        let (mut checked, mut ok) = (0, 0);
        for k in 0..=3 {
            for w in words(a, k) {
                let w = Word::new(w);
                let c = trie.query(&w).unwrap();
                let Some(p) = conditional_dist(&m, &table, &w) else { continue };
                if c.total < 30 {
                    continue;
                }
                for (x, &px) in p.iter().enumerate() {
                    let se = (px * (1.0 - px) / c.total as f64).sqrt();
                    let phat = c.next[x] as f64 / c.total as f64;
                    checked += 1;
                    if (phat - px).abs() <= 3.0 * se + 1e-12 {
                        ok += 1;
                    }
                }
            }
        }
        assert!(checked > 0);
        assert!(ok as f64 >= 0.95 * checked as f64, "{name}: {ok}/{checked}");
    }
}
