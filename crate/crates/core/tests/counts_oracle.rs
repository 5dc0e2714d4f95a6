mod common;

use common::{naive_counts, random_sample, rng, words};
use proptest::prelude::*;
use vlmc::{Alphabet, CountTrie, Sample, Word};

fn check_against_scan(raw: &[u8], past: usize, depth: usize, a: usize) {
    let sample = Sample::new(Alphabet::new((0..a).map(|i| (b'a' + i as u8) as char)).unwrap(), raw.to_vec(), past).unwrap();
    let trie = CountTrie::build(&sample, depth).unwrap();
    assert_eq!(trie.n(), raw.len() - past);
    for k in 0..=depth {
        for w in words(a, k) {
            let expected = naive_counts(raw, past, &w, a);
            let got = trie.query(&Word::new(w.clone())).unwrap();
            assert_eq!(got.next, expected, "word {w:?}");
            assert_eq!(got.total, expected.iter().sum::<u64>());
        }
    }
}

#[test]
fn trie_matches_naive_scan() {
    let mut r = rng(11);
    for _ in 0..200 {
        let n = 1 + rand::Rng::random_range(&mut r, 0..80usize);
        let s = random_sample(&mut r, 3, n);
        check_against_scan(s.raw(), 3, 3, 2);
    }
}

#[test]
fn child_sum_identity_on_fuzzed_samples() {
    let mut r = rng(12);
    for _ in 0..500 {
        let s = random_sample(&mut r, 4, 50);
        let trie = CountTrie::build(&s, 4).unwrap();
        for node in trie.nodes() {
            if trie.node_depth(node) == trie.depth() {
                continue;
            }
            let child_sum: u64 = trie.children(node).map(|(_, c)| trie.total(c)).sum();
            assert_eq!(child_sum, trie.total(node));
            let total: u64 = trie.next_counts(node).iter().sum();
            assert_eq!(total, trie.total(node));
        }
    }
}

proptest! {
    #[test]
    fn ternary_counts_match_scan(raw in prop::collection::vec(0u8..3, 4..60), past in 2usize..4) {
        let depth = past.min(2);
        check_against_scan(&raw, past, depth, 3);
    }

    #[test]
    fn root_counts_are_symbol_frequencies(raw in prop::collection::vec(0u8..2, 2..100)) {
        let s = Sample::new(Alphabet::binary(), raw.clone(), 1).unwrap();
        let trie = CountTrie::build(&s, 1).unwrap();
        let ones = raw[1..].iter().filter(|&&b| b == 1).count() as u64;
        prop_assert_eq!(trie.next_counts(trie.root()), &[raw.len() as u64 - 1 - ones, ones][..]);
    }
}
