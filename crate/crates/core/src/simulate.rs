//! Stationary simulation of finite VLMC sources.
//!
//! A model of height `h` is a first-order Markov chain on blocks `A^H` with
//! `H = max(h, 1)`: the block `s` moves to `s_2..s_H a` with probability
//! `p(a | context(s))`. Its stationary law gives exact cylinder
//! probabilities and an exact stationary start for sample paths.
//!
//! Randomness comes from [`ChaCha8Rng`] seeded through [`splitmix64`].
//! Each symbol costs exactly one uniform draw, mapped to a symbol by the
//! inverse CDF in alphabet order.

use crate::alphabet::Symbol;
use crate::counts::{CountError, Sample};
use crate::model::{ContextResolver, VlmcModel};
use crate::word::Word;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

/// Largest block chain [`stationary_distribution`] will build.
pub const MAX_STATES: usize = 1 << 20;
pub const STATIONARY_TOL: f64 = 1e-12;
pub const MAX_ITERATIONS: usize = 1_000_000;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SimError {
    #[error("block chain on A^{horizon} has more than {} states", MAX_STATES)]
    HorizonTooLarge { horizon: usize },
    #[error("power iteration stopped after {iterations} iterations with residual {residual:e}")]
    NoConvergence { iterations: usize, residual: f64 },
    #[error("block chain has {classes} closed classes; the stationary law is not unique")]
    Reducible { classes: usize },
    #[error("effective length must be at least 1")]
    ZeroLength,
    #[error(transparent)]
    Count(#[from] CountError),
}

/// SplitMix64 finalizer, used to spread seeds before they reach the PRNG.
pub fn splitmix64(x: u64) -> u64 {
    let mut z = x.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Stream seed for replicate `r` at grid point `n` of a run with seed `base`:
/// `splitmix64(splitmix64(splitmix64(base) ^ n) ^ r)`.
pub fn derive_seed(base: u64, n: u64, r: u64) -> u64 {
    splitmix64(splitmix64(splitmix64(base) ^ n) ^ r)
}

fn rng_for(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(splitmix64(seed))
}

fn draw(cdf: &[f64], rng: &mut ChaCha8Rng) -> usize {
    let u: f64 = rng.random();
    // first index with u < cdf[i]; rounding in the last entry falls back to
    // the last symbol with positive mass
    cdf.iter().position(|&c| u < c).unwrap_or_else(|| {
        let mut last = cdf.len() - 1;
        while last > 0 && cdf[last] == cdf[last - 1] {
            last -= 1;
        }
        last
    })
}

fn cumulative(probs: &[f64]) -> Vec<f64> {
    probs
        .iter()
        .scan(0.0, |acc, &p| {
            *acc += p;
            Some(*acc)
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Init {
    /// Initial block drawn from the stationary law.
    #[default]
    Stationary,
    /// Start from the all-zero block and discard this many steps.
    BurnIn(usize),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SimConfig {
    pub n: usize,
    pub past: usize,
    pub seed: u64,
    pub init: Init,
}

/// Stationary law of the block chain on `A^h`, blocks indexed in
/// lexicographic order (oldest symbol most significant).
#[derive(Debug, Clone, PartialEq)]
pub struct StationaryTable {
    alphabet_size: usize,
    horizon: usize,
    pi: Vec<f64>,
    residual: f64,
}

impl StationaryTable {
    pub fn horizon(&self) -> usize {
        self.horizon
    }

    pub fn pi(&self) -> &[f64] {
        &self.pi
    }

    pub fn residual(&self) -> f64 {
        self.residual
    }

    pub fn prob_of_block(&self, block: &Word) -> Option<f64> {
        (block.len() == self.horizon).then(|| self.pi[encode(block.symbols(), self.alphabet_size)])
    }
}

fn encode(symbols: &[Symbol], a: usize) -> usize {
    symbols.iter().fold(0, |acc, &s| acc * a + s as usize)
}

fn decode(mut index: usize, a: usize, len: usize) -> Vec<Symbol> {
    let mut out = vec![0; len];
    for slot in out.iter_mut().rev() {
        *slot = (index % a) as Symbol;
        index /= a;
    }
    out
}

struct BlockChain {
    states: usize,
    // succ[s * a + x] with probability prob[s * a + x]
    succ: Vec<usize>,
    prob: Vec<f64>,
}

impl BlockChain {
    fn new(model: &VlmcModel, horizon: usize) -> Self {
        let a = model.alphabet_size();
        let states = a.pow(horizon as u32);
        let resolver = model.resolver();
        let mut succ = Vec::with_capacity(states * a);
        let mut prob = Vec::with_capacity(states * a);
        for s in 0..states {
            let block = decode(s, a, horizon);
            let leaf = resolver.resolve(&block).expect("block is as long as the tree height");
            let dist = model.dist_at(leaf);
            for (x, &p) in dist.iter().enumerate() {
                succ.push((s * a) % states + x);
                prob.push(p);
            }
        }
        Self { states, succ, prob }
    }

    /// Closed strongly connected components of the positive-probability graph.
    fn closed_classes(&self) -> Vec<Vec<usize>> {
        let a = self.succ.len() / self.states;
        let edges = |s: usize| (0..a).filter(move |&x| self.prob[s * a + x] > 0.0).map(move |x| self.succ[s * a + x]);
        let comp = tarjan(self.states, &edges);
        let count = comp.iter().copied().max().map_or(0, |m| m + 1);
        let mut closed = vec![true; count];
        for s in 0..self.states {
            if edges(s).any(|t| comp[t] != comp[s]) {
                closed[comp[s]] = false;
            }
        }
        let mut classes = vec![Vec::new(); count];
        for s in 0..self.states {
            if closed[comp[s]] {
                classes[comp[s]].push(s);
            }
        }
        classes.retain(|c| !c.is_empty());
        classes
    }

    fn step(&self, pi: &[f64], out: &mut [f64]) {
        let a = self.succ.len() / self.states;
        out.iter_mut().for_each(|x| *x = 0.0);
        for (s, &mass) in pi.iter().enumerate() {
            if mass == 0.0 {
                continue;
            }
            for x in 0..a {
                out[self.succ[s * a + x]] += mass * self.prob[s * a + x];
            }
        }
    }
}

/// Iterative Tarjan; returns a component id per vertex.
fn tarjan<I: Iterator<Item = usize>>(n: usize, edges: &dyn Fn(usize) -> I) -> Vec<usize> {
    const UNSEEN: usize = usize::MAX;
    let mut index = vec![UNSEEN; n];
    let mut low = vec![0; n];
    let mut on_stack = vec![false; n];
    let mut comp = vec![UNSEEN; n];
    let mut stack = Vec::new();
    let mut next_index = 0;
    let mut next_comp = 0;
    for root in 0..n {
        if index[root] != UNSEEN {
            continue;
        }
        let mut call: Vec<(usize, Vec<usize>)> = Vec::new();
        index[root] = next_index;
        low[root] = next_index;
        next_index += 1;
        stack.push(root);
        on_stack[root] = true;
        call.push((root, edges(root).collect()));
        while let Some((v, pending)) = call.last_mut() {
            let v = *v;
            if let Some(w) = pending.pop() {
                if index[w] == UNSEEN {
                    index[w] = next_index;
                    low[w] = next_index;
                    next_index += 1;
                    stack.push(w);
                    on_stack[w] = true;
                    call.push((w, edges(w).collect()));
                } else if on_stack[w] {
                    low[v] = low[v].min(index[w]);
                }
                continue;
            }
            call.pop();
            if let Some((parent, _)) = call.last() {
                low[*parent] = low[*parent].min(low[v]);
            }
            if low[v] == index[v] {
                while let Some(w) = stack.pop() {
                    on_stack[w] = false;
                    comp[w] = next_comp;
                    if w == v {
                        break;
                    }
                }
                next_comp += 1;
            }
        }
    }
    comp
}

fn block_horizon(model: &VlmcModel) -> Result<usize, SimError> {
    let horizon = model.height().max(1);
    let a = model.alphabet_size();
    match a.checked_pow(horizon as u32) {
        Some(states) if states <= MAX_STATES => Ok(horizon),
        _ => Err(SimError::HorizonTooLarge { horizon }),
    }
}

/// Stationary law of the block chain, restricted to its unique closed class.
///
/// Power iteration runs on the lazy chain `(I + P)/2`, which has the same
/// stationary law and is aperiodic.
pub fn stationary_distribution(model: &VlmcModel) -> Result<StationaryTable, SimError> {
    let horizon = block_horizon(model)?;
    let chain = BlockChain::new(model, horizon);
    let classes = chain.closed_classes();
    if classes.len() != 1 {
        return Err(SimError::Reducible { classes: classes.len() });
    }
    let class = &classes[0];
    let mut pi = vec![0.0; chain.states];
    for &s in class {
        pi[s] = 1.0 / class.len() as f64;
    }
    let mut next = vec![0.0; chain.states];
    let mut best = f64::INFINITY;
    let mut stalled = 0;
    for iteration in 1..=MAX_ITERATIONS {
        chain.step(&pi, &mut next);
        let residual = pi.iter().zip(&next).map(|(p, q)| (p - q).abs()).fold(0.0, f64::max);
        // stop at round-off level, or once progress has stalled below tolerance
        if residual <= 1e-15 || (residual <= STATIONARY_TOL && stalled >= 50) {
            return Ok(StationaryTable {
                alphabet_size: model.alphabet_size(),
                horizon,
                pi,
                residual,
            });
        }
        if residual < best {
            best = residual;
            stalled = 0;
        } else {
            stalled += 1;
        }
        for (p, q) in pi.iter_mut().zip(&next) {
            *p = 0.5 * (*p + q);
        }
        let total: f64 = pi.iter().sum();
        pi.iter_mut().for_each(|p| *p /= total);
        if iteration == MAX_ITERATIONS {
            return Err(SimError::NoConvergence { iterations: iteration, residual });
        }
    }
    unreachable!("loop returns on its last iteration")
}

/// Stationary cylinder probability `p(w)`.
pub fn marginal_prob(model: &VlmcModel, table: &StationaryTable, w: &Word) -> f64 {
    let a = table.alphabet_size;
    let h = table.horizon;
    let symbols = w.symbols();
    if symbols.len() <= h {
        let span = a.pow(symbols.len() as u32);
        let code = encode(symbols, a);
        return (0..a.pow((h - symbols.len()) as u32)).map(|prefix| table.pi[prefix * span + code]).sum();
    }
    let resolver = model.resolver();
    let mut p = table.pi[encode(&symbols[..h], a)];
    for j in h..symbols.len() {
        if p == 0.0 {
            break;
        }
        let leaf = resolver.resolve(&symbols[..j]).expect("history longer than the tree height");
        p *= model.dist_at(leaf)[symbols[j] as usize];
    }
    p
}

/// `p(a | v)`: the model distribution when `v` has a context as suffix, and
/// `p(va)/p(v)` otherwise. `None` when `p(v) = 0`.
pub fn conditional_dist(model: &VlmcModel, table: &StationaryTable, v: &Word) -> Option<Vec<f64>> {
    if marginal_prob(model, table, v) == 0.0 {
        return None;
    }
    if let Some(leaf) = model.resolver().resolve(v.symbols()) {
        return Some(model.dist_at(leaf).to_vec());
    }
    let pv = marginal_prob(model, table, v);
    Some(
        (0..model.alphabet_size())
            .map(|x| marginal_prob(model, table, &v.append(x as Symbol)) / pv)
            .collect(),
    )
}

/// Precomputed sampler for one model.
#[derive(Debug, Clone)]
pub struct Simulator<'m> {
    model: &'m VlmcModel,
    resolver: ContextResolver,
    cdfs: Vec<Vec<f64>>,
    horizon: usize,
    block_cdf: Option<Vec<f64>>,
}

impl<'m> Simulator<'m> {
    /// Sampler with an exact stationary start.
    pub fn new(model: &'m VlmcModel) -> Result<Self, SimError> {
        let table = stationary_distribution(model)?;
        Ok(Self::with_table(model, &table))
    }

    pub fn with_table(model: &'m VlmcModel, table: &StationaryTable) -> Self {
        let mut s = Self::burn_in_only(model);
        s.horizon = table.horizon;
        s.block_cdf = Some(cumulative(&table.pi));
        s
    }

    /// Sampler without a stationary table; only [`Init::BurnIn`] is usable.
    pub fn burn_in_only(model: &'m VlmcModel) -> Self {
        Self {
            model,
            resolver: model.resolver(),
            cdfs: model.entries().map(|(_, d)| cumulative(d)).collect(),
            horizon: model.height().max(1),
            block_cdf: None,
        }
    }

    /// `past + n` symbols; the first `past` form the observed past.
    ///
    /// # Panics
    /// With [`Init::Stationary`] on a sampler built by [`Self::burn_in_only`].
    pub fn sample(&self, config: &SimConfig) -> Result<Sample, SimError> {
        if config.n == 0 {
            return Err(SimError::ZeroLength);
        }
        if config.past == 0 {
            return Err(CountError::ZeroPast.into());
        }
        let a = self.model.alphabet_size();
        let mut rng = rng_for(config.seed);
        let (mut history, discard) = match config.init {
            Init::Stationary => {
                let cdf = self.block_cdf.as_ref().expect("stationary start needs a stationary table");
                (decode(draw(cdf, &mut rng), a, self.horizon), 0)
            }
            Init::BurnIn(b) => (vec![0; self.horizon], b),
        };
        let start = history.len() + discard;
        let total = start + config.past + config.n;
        history.reserve(total - history.len());
        while history.len() < total {
            let leaf = self.resolver.resolve(&history).expect("history covers the tree height");
            history.push(draw(&self.cdfs[leaf], &mut rng) as Symbol);
        }
        history.drain(..start);
        Ok(Sample::new(self.model.alphabet().clone(), history, config.past)?)
    }
}

/// One sample path; the stationary table is recomputed on every call, so
/// use [`Simulator`] for replicates.
pub fn sample_path(model: &VlmcModel, config: &SimConfig) -> Result<Sample, SimError> {
    match config.init {
        Init::Stationary => Simulator::new(model)?.sample(config),
        Init::BurnIn(_) => Simulator::burn_in_only(model).sample(config),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::alphabet::Alphabet;
    use crate::counts::CountTrie;

    fn fixture() -> VlmcModel {
        VlmcModel::from_strs(
            &Alphabet::binary(),
            &[("1", vec![0.7, 0.3]), ("10", vec![0.4, 0.6]), ("00", vec![0.1, 0.9])],
        )
        .unwrap()
    }

    fn order_one(p0: f64, p1: f64) -> VlmcModel {
        VlmcModel::from_strs(&Alphabet::binary(), &[("0", vec![1.0 - p0, p0]), ("1", vec![1.0 - p1, p1])]).unwrap()
    }

    fn iid() -> VlmcModel {
        VlmcModel::from_strs(&Alphabet::binary(), &[("EPS", vec![0.5, 0.5])]).unwrap()
    }

    fn w(s: &str) -> Word {
        Word::parse(s, &Alphabet::binary()).unwrap()
    }

    #[test]
    fn splitmix_reference_values() {
        // first outputs of the reference generator seeded with 0
        assert_eq!(splitmix64(0), 0xE220_A839_7B1D_CDAF);
        assert_eq!(splitmix64(0x9E37_79B9_7F4A_7C15), 0x6E78_9E6A_A1B9_65F4);
        assert_ne!(derive_seed(1, 2, 3), derive_seed(1, 3, 2));
    }

    #[test]
    fn stationary_examples() {
        let t = stationary_distribution(&iid()).unwrap();
        assert_eq!(t.horizon(), 1);
        assert!((t.pi()[0] - 0.5).abs() < 1e-15);
        let t = stationary_distribution(&order_one(0.2, 0.8)).unwrap();
        assert!((t.pi()[1] - 0.5).abs() < 1e-12);
        let m = order_one(0.1, 0.6);
        let t = stationary_distribution(&m).unwrap();
        assert!((t.pi()[1] - 0.2).abs() < 1e-12);
        assert!(t.residual() <= STATIONARY_TOL);
        assert!((marginal_prob(&m, &t, &w("01")) - 0.08).abs() < 1e-12);
    }

    #[test]
    fn fixture_stationary_law() {
        let m = fixture();
        let t = stationary_distribution(&m).unwrap();
        let expected = [28.0, 63.0, 63.0, 27.0].map(|x| x / 181.0);
        for (p, e) in t.pi().iter().zip(expected) {
            assert!((p - e).abs() < 1e-12, "{p} vs {e}");
        }
        assert!((marginal_prob(&m, &t, &w("1")) - 90.0 / 181.0).abs() < 1e-12);
        assert_eq!(marginal_prob(&m, &t, &Word::empty()), 1.0);
        for k in 0..=4 {
            let total: f64 = Word::all_of_length(2, k).map(|v| marginal_prob(&m, &t, &v)).sum();
            assert!((total - 1.0).abs() < 1e-9, "k = {k}");
        }
        let c = conditional_dist(&m, &t, &w("0")).unwrap();
        assert!((c[1] - 9.0 / 13.0).abs() < 1e-12);
        assert_eq!(conditional_dist(&m, &t, &w("10")).unwrap(), vec![0.4, 0.6]);
    }

    #[test]
    fn reducible_and_transient() {
        // 1 is absorbing: state 0 is transient and gets mass 0
        let m = order_one(0.5, 1.0);
        let t = stationary_distribution(&m).unwrap();
        assert_eq!(t.pi(), &[0.0, 1.0]);
        let m = order_one(0.0, 1.0);
        assert_eq!(stationary_distribution(&m), Err(SimError::Reducible { classes: 2 }));
    }

    #[test]
    fn periodic_chain_converges() {
        let m = order_one(1.0, 0.0);
        let t = stationary_distribution(&m).unwrap();
        assert!((t.pi()[0] - 0.5).abs() < 1e-12);
    }

    #[test]
    fn horizon_guard() {
        // comb tree 1, 10, 100, ..., 10^20, 0^21
        let mut leaves: Vec<String> = (0..21).map(|k| format!("1{}", "0".repeat(k))).collect();
        leaves.push("0".repeat(21));
        let entries: Vec<(Word, Vec<f64>)> = leaves.iter().map(|l| (w(l), vec![0.5, 0.5])).collect();
        let m = VlmcModel::new(Alphabet::binary(), entries).unwrap();
        assert_eq!(stationary_distribution(&m), Err(SimError::HorizonTooLarge { horizon: 21 }));
    }

    #[test]
    fn deterministic_paths() {
        let m = fixture();
        let cfg = SimConfig { n: 500, past: 4, seed: 7, init: Init::Stationary };
        let a = sample_path(&m, &cfg).unwrap();
        assert_eq!(a, sample_path(&m, &cfg).unwrap());
        assert_eq!(a.raw().len(), 504);
        assert_ne!(a, sample_path(&m, &SimConfig { seed: 8, ..cfg }).unwrap());
        let b = sample_path(&m, &SimConfig { init: Init::BurnIn(100), ..cfg }).unwrap();
        assert_eq!(b.raw().len(), 504);
        assert!(sample_path(&m, &SimConfig { n: 0, ..cfg }).is_err());
    }

    #[test]
    fn iid_frequency() {
        let cfg = SimConfig { n: 100_000, past: 1, seed: 11, init: Init::Stationary };
        let s = sample_path(&iid(), &cfg).unwrap();
        let ones = s.effective().iter().filter(|&&x| x == 1).count() as f64;
        assert!((ones / 1e5 - 0.5).abs() <= 0.01);
    }

    #[test]
    fn fixture_conditional_frequency() {
        let m = fixture();
        let cfg = SimConfig { n: 100_000, past: 2, seed: 3, init: Init::Stationary };
        let s = sample_path(&m, &cfg).unwrap();
        let trie = CountTrie::build(&s, 2).unwrap();
        let p = trie.empirical_prob(&w("10")).unwrap();
        assert!((p[1] - 0.6).abs() <= 0.02);
    }
}
