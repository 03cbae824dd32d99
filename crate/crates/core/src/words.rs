//! Words over a `k`-letter alphabet, containment predicates, waiting times
//! and block decompositions.
//!
//! Symbols are stored 0-based (`0..k`). The 1-based alphabet `1..=k` is
//! only used by [`Word::from_one_based`] and [`Word::to_one_based`].

use std::fmt;
use std::ops::{Deref, Range};

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{invalid, Error, Result};
use crate::rng::{Generator, Lane, RngStream};
use crate::seqalgs::{lcs_alignment, lcs_length, BitLcs};

/// A finite word. Every symbol is `< k`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Word {
    symbols: Vec<u32>,
    k: u32,
}

impl Word {
    pub fn new(symbols: Vec<u32>, k: u32) -> Result<Self> {
        if k == 0 {
            return invalid("alphabet size must be positive");
        }
        if let Some(&bad) = symbols.iter().find(|&&s| s >= k) {
            return Err(Error::SymbolOutOfRange { symbol: bad, k });
        }
        Ok(Self { symbols, k })
    }

    pub fn empty(k: u32) -> Self {
        Self { symbols: Vec::new(), k }
    }

    pub fn alphabet_size(&self) -> u32 {
        self.k
    }

    pub fn symbols(&self) -> &[u32] {
        &self.symbols
    }

    pub fn into_symbols(self) -> Vec<u32> {
        self.symbols
    }

    /// `w_{<m}`.
    pub fn prefix(&self, m: usize) -> Word {
        Word {
            symbols: self.symbols[..m.min(self.len())].to_vec(),
            k: self.k,
        }
    }

    pub fn slice(&self, range: Range<usize>) -> Word {
        Word {
            symbols: self.symbols[range].to_vec(),
            k: self.k,
        }
    }

    /// Parses 0-based digits, e.g. `"0120"`. Requires `k <= 10`.
    pub fn from_digits(s: &str, k: u32) -> Result<Self> {
        if k > 10 {
            return invalid(format!("digit strings need k <= 10, got {k}"));
        }
        let symbols = s
            .chars()
            .map(|c| {
                c.to_digit(10)
                    .ok_or_else(|| Error::Parse(format!("not a digit: {c:?}")))
            })
            .collect::<Result<Vec<_>>>()?;
        Self::new(symbols, k)
    }

    /// Parses the 1-based alphabet `1..=k`, e.g. `"1323121"` over `[3]`.
    /// Requires `k <= 9`.
    pub fn from_one_based(s: &str, k: u32) -> Result<Self> {
        if k > 9 {
            return invalid(format!("1-based digit strings need k <= 9, got {k}"));
        }
        let symbols = s
            .chars()
            .map(|c| match c.to_digit(10) {
                Some(d) if d >= 1 => Ok(d - 1),
                _ => Err(Error::Parse(format!("not a symbol of [k]: {c:?}"))),
            })
            .collect::<Result<Vec<_>>>()?;
        Self::new(symbols, k)
    }

    pub fn to_one_based(&self) -> String {
        if self.k <= 9 {
            self.symbols.iter().map(|s| char::from(b'1' + *s as u8)).collect()
        } else {
            let shifted: Vec<u32> = self.symbols.iter().map(|s| s + 1).collect();
            serde_json::to_string(&shifted).expect("integer array serializes")
        }
    }
}

impl Deref for Word {
    type Target = [u32];

    fn deref(&self) -> &[u32] {
        &self.symbols
    }
}

/// Digits for `k <= 10`, a JSON array of integers otherwise.
impl fmt::Display for Word {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.k <= 10 {
            for s in &self.symbols {
                write!(f, "{s}")?;
            }
            Ok(())
        } else {
            let json = serde_json::to_string(&self.symbols).map_err(|_| fmt::Error)?;
            f.write_str(&json)
        }
    }
}

#[derive(Serialize, Deserialize)]
#[serde(untagged)]
enum SymbolsRepr {
    Digits(String),
    Ints(Vec<u32>),
}

#[derive(Serialize, Deserialize)]
struct WordRepr {
    k: u32,
    symbols: SymbolsRepr,
}

impl Serialize for Word {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        let symbols = if self.k <= 10 {
            SymbolsRepr::Digits(self.to_string())
        } else {
            SymbolsRepr::Ints(self.symbols.clone())
        };
        WordRepr { k: self.k, symbols }.serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for Word {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let repr = WordRepr::deserialize(deserializer)?;
        let word = match repr.symbols {
            SymbolsRepr::Digits(s) => Word::from_digits(&s, repr.k),
            SymbolsRepr::Ints(v) => Word::new(v, repr.k),
        };
        word.map_err(serde::de::Error::custom)
    }
}

/// Anything that can hand out `w[pos]`, possibly generating it on demand.
pub trait SymbolSource {
    fn alphabet_size(&self) -> u32;

    /// `None` when the source is finite and `pos` lies past its end.
    fn symbol(&mut self, pos: usize) -> Option<u32>;
}

impl SymbolSource for Word {
    fn alphabet_size(&self) -> u32 {
        self.k
    }

    fn symbol(&mut self, pos: usize) -> Option<u32> {
        self.symbols.get(pos).copied()
    }
}

impl<S: SymbolSource + ?Sized> SymbolSource for &mut S {
    fn alphabet_size(&self) -> u32 {
        (**self).alphabet_size()
    }

    fn symbol(&mut self, pos: usize) -> Option<u32> {
        (**self).symbol(pos)
    }
}

/// An infinite uniform word, materialized as far as it has been read.
#[derive(Debug, Clone)]
pub struct LazyWord {
    k: u32,
    generator: Generator,
    buffer: Vec<u32>,
}

impl LazyWord {
    pub fn new(k: u32, rng: &RngStream, lane: Lane) -> Result<Self> {
        if k == 0 {
            return invalid("alphabet size must be positive");
        }
        Ok(Self {
            k,
            generator: rng.generator(lane),
            buffer: Vec::new(),
        })
    }

    pub fn materialized(&self) -> &[u32] {
        &self.buffer
    }

    #[inline]
    pub fn get(&mut self, pos: usize) -> u32 {
        while self.buffer.len() <= pos {
            let s = self.generator.symbol(self.k);
            self.buffer.push(s);
        }
        self.buffer[pos]
    }
}

impl SymbolSource for LazyWord {
    fn alphabet_size(&self) -> u32 {
        self.k
    }

    #[inline]
    fn symbol(&mut self, pos: usize) -> Option<u32> {
        Some(self.get(pos))
    }
}

/// The suffix of a source starting at `offset`.
#[derive(Debug)]
pub struct Suffix<S> {
    pub source: S,
    pub offset: usize,
}

impl<S: SymbolSource> SymbolSource for Suffix<S> {
    fn alphabet_size(&self) -> u32 {
        self.source.alphabet_size()
    }

    fn symbol(&mut self, pos: usize) -> Option<u32> {
        self.source.symbol(self.offset + pos)
    }
}

/// `w ~ [k]^n`, deterministic in `rng`.
pub fn sample_word(k: u32, n: usize, rng: &RngStream) -> Result<Word> {
    sample_word_in_lane(k, n, rng, Lane::Word)
}

pub fn sample_word_in_lane(k: u32, n: usize, rng: &RngStream, lane: Lane) -> Result<Word> {
    if k == 0 {
        return invalid("alphabet size must be positive");
    }
    let mut g = rng.generator(lane);
    let symbols = (0..n).map(|_| g.symbol(k)).collect();
    Ok(Word { symbols, k })
}

/// `u ≺_0 w`, by greedy left-to-right matching.
pub fn is_subsequence(u: &[u32], w: &[u32]) -> bool {
    let mut rest = w.iter();
    u.iter().all(|s| rest.any(|x| x == s))
}

/// `u ≺_d w`: deleting at most `d` symbols of `u` leaves a subsequence of `w`.
/// The minimum number of deletions is `len(u) - LCS(u, w)`.
pub fn almost_contained(u: &[u32], w: &[u32], d: usize) -> bool {
    u.len() - lcs_length(u, w) <= d
}

enum PrefixScan {
    /// The prefix of this length is maximal and the next symbol exists.
    Stopped(usize),
    /// The source ran out while every prefix was still contained.
    Exhausted(usize),
}

fn scan_contained_prefix<S: SymbolSource>(w: &mut S, reference: &[u32], d: usize) -> PrefixScan {
    let mut table = BitLcs::new(reference);
    let mut m = 0;
    loop {
        let Some(s) = w.symbol(m) else {
            return PrefixScan::Exhausted(m);
        };
        let lcs = table.push(s);
        // Deletions needed are non-decreasing in m.
        if m + 1 - lcs > d {
            return PrefixScan::Stopped(m);
        }
        m += 1;
    }
}

/// `P_d(L) = max{ m : w_{<m} ≺_d w'_{<L} }` with `w'_{<L}` given.
///
/// Errors if `w` ends before the maximal prefix is certified, i.e. before the
/// first symbol that breaks containment has been seen.
pub fn waiting_time<S: SymbolSource>(w: &mut S, w_prime_prefix: &[u32], d: usize) -> Result<usize> {
    match scan_contained_prefix(w, w_prime_prefix, d) {
        PrefixScan::Stopped(m) => Ok(m),
        PrefixScan::Exhausted(consumed) => Err(Error::Exhausted { consumed }),
    }
}

/// Length of the longest prefix of a finite `v` that is `d`-almost contained
/// in `reference`; may be all of `v`.
pub fn longest_contained_prefix(v: &[u32], reference: &[u32], d: usize) -> usize {
    let mut src = v;
    let mut view = SliceSource(&mut src);
    match scan_contained_prefix(&mut view, reference, d) {
        PrefixScan::Stopped(m) | PrefixScan::Exhausted(m) => m,
    }
}

struct SliceSource<'a, 'b>(&'a mut &'b [u32]);

impl SymbolSource for SliceSource<'_, '_> {
    fn alphabet_size(&self) -> u32 {
        self.0.iter().copied().max().map_or(1, |m| m + 1)
    }

    fn symbol(&mut self, pos: usize) -> Option<u32> {
        self.0.get(pos).copied()
    }
}

/// Per-block deletion budgets `d_1..d_M` for a reference split into blocks
/// of `block_len` symbols.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DeletionBudgetVector {
    pub budgets: Vec<usize>,
    pub block_len: usize,
}

impl DeletionBudgetVector {
    pub fn new(budgets: Vec<usize>, block_len: usize) -> Result<Self> {
        if block_len == 0 {
            return invalid("block length must be positive");
        }
        Ok(Self { budgets, block_len })
    }

    pub fn zeros(blocks: usize, block_len: usize) -> Result<Self> {
        Self::new(vec![0; blocks], block_len)
    }

    pub fn blocks(&self) -> usize {
        self.budgets.len()
    }

    /// `D = d_1 + ... + d_M`.
    pub fn total(&self) -> usize {
        self.budgets.iter().sum()
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StandardPrefix {
    pub blocks: Vec<Word>,
    pub consumed: usize,
}

/// Greedy block decomposition: block `i` is the longest prefix of what is
/// left of `w` that is `d_i`-almost contained in the `i`-th block of `w'`.
pub fn standard_prefix(w: &Word, w_prime: &Word, dvec: &DeletionBudgetVector) -> Result<StandardPrefix> {
    let l = dvec.block_len;
    if w_prime.len() != dvec.blocks() * l {
        return invalid(format!(
            "reference length {} is not {} blocks of {}",
            w_prime.len(),
            dvec.blocks(),
            l
        ));
    }
    let mut consumed = 0;
    let mut blocks = Vec::with_capacity(dvec.blocks());
    for (i, &d) in dvec.budgets.iter().enumerate() {
        let reference = &w_prime[i * l..(i + 1) * l];
        let len = longest_contained_prefix(&w[consumed..], reference, d);
        blocks.push(w.slice(consumed..consumed + len));
        consumed += len;
    }
    Ok(StandardPrefix { blocks, consumed })
}

/// `w ≺_d⃗ w'`. Holds exactly when the standard prefix is all of `w`.
pub fn vector_almost_contained(w: &Word, w_prime: &Word, dvec: &DeletionBudgetVector) -> Result<bool> {
    Ok(standard_prefix(w, w_prime, dvec)?.consumed == w.len())
}

/// A split of `w` into consecutive pieces with per-piece deletion counts,
/// witnessing `w ≺_d⃗ w'`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DominatingSplit {
    pub dvec: DeletionBudgetVector,
    pub pieces: Vec<Range<usize>>,
}

/// Cuts `w` along one longest common subsequence with `w'`: piece `i` runs up
/// to the first symbol matched into a later block, and `d_i` counts its
/// unmatched symbols. The budgets then sum to `len(w) - LCS(w, w')`.
pub fn lcs_dominating_split(w: &Word, w_prime: &Word, block_len: usize) -> Result<DominatingSplit> {
    if block_len == 0 || !w_prime.len().is_multiple_of(block_len) {
        return invalid(format!(
            "reference length {} is not a multiple of block length {block_len}",
            w_prime.len()
        ));
    }
    let blocks = w_prime.len() / block_len;
    if blocks == 0 {
        if w.is_empty() {
            return Ok(DominatingSplit {
                dvec: DeletionBudgetVector::new(Vec::new(), block_len)?,
                pieces: Vec::new(),
            });
        }
        return invalid("a non-empty word needs at least one reference block");
    }
    let mut matched_block = vec![None; w.len()];
    for (i, j) in lcs_alignment(w, w_prime) {
        matched_block[i] = Some(j / block_len);
    }
    let mut budgets = vec![0usize; blocks];
    let mut starts = vec![0usize; blocks];
    let mut current = 0;
    for (pos, m) in matched_block.iter().enumerate() {
        match m {
            Some(b) => {
                while current < *b {
                    current += 1;
                    starts[current] = pos;
                }
            }
            None => budgets[current] += 1,
        }
    }
    while current + 1 < blocks {
        current += 1;
        starts[current] = w.len();
    }
    let pieces = (0..blocks)
        .map(|b| starts[b]..if b + 1 < blocks { starts[b + 1] } else { w.len() })
        .collect();
    Ok(DominatingSplit {
        dvec: DeletionBudgetVector::new(budgets, block_len)?,
        pieces,
    })
}

pub fn lcs_dominating_dvec(w: &Word, w_prime: &Word, block_len: usize) -> Result<DeletionBudgetVector> {
    Ok(lcs_dominating_split(w, w_prime, block_len)?.dvec)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn letters(s: &str) -> Word {
        Word::new(s.bytes().map(|b| u32::from(b - b'a')).collect(), 26).unwrap()
    }

    /// Oracle: try every set of at most `d` deletions from `u`.
    fn almost_contained_brute(u: &[u32], w: &[u32], d: usize) -> bool {
        let n = u.len();
        (0u32..(1 << n)).any(|mask| {
            mask.count_ones() as usize <= d && {
                let kept: Vec<u32> = (0..n).filter(|i| mask >> i & 1 == 0).map(|i| u[i]).collect();
                is_subsequence(&kept, w)
            }
        })
    }

    #[test]
    fn sample_word_examples() {
        let rng = RngStream::new(123, 4);
        assert_eq!(sample_word(1, 5, &rng).unwrap().symbols(), &[0, 0, 0, 0, 0]);
        assert!(sample_word(2, 0, &rng).unwrap().is_empty());
        assert!(sample_word(0, 3, &rng).is_err());
        let a = sample_word(4, 1_000_000, &rng).unwrap();
        let b = sample_word(4, 1_000_000, &rng).unwrap();
        assert_eq!(a, b);
        assert!(a.iter().all(|&s| s < 4));
    }

    #[test]
    fn subsequence_examples() {
        assert!(is_subsequence(&letters("abada"), &letters("abracadabra")));
        assert!(is_subsequence(&[], &letters("abracadabra")));
        assert!(!is_subsequence(&letters("aab"), &letters("aba")));
        assert!(!almost_contained_brute(&letters("aab"), &letters("aba"), 0));
    }

    #[test]
    fn almost_containment_examples() {
        let macabre = letters("macabre");
        let abra = letters("abracadabra");
        assert!(almost_contained(&macabre, &abra, 2));
        assert!(!almost_contained(&macabre, &abra, 1));
        assert!(!almost_contained_brute(&macabre, &abra, 1));
        assert!(almost_contained(&macabre, &macabre, 0));
    }

    #[test]
    fn word_parsing_and_display() {
        let w = Word::from_one_based("1323121", 3).unwrap();
        assert_eq!(w.symbols(), &[0, 2, 1, 2, 0, 1, 0]);
        assert_eq!(w.to_one_based(), "1323121");
        assert_eq!(w.to_string(), "0212010");
        assert!(Word::from_one_based("04", 4).is_err());
        assert!(Word::from_digits("05", 5).is_err());
        let big = Word::new(vec![0, 11, 3], 12).unwrap();
        assert_eq!(big.to_string(), "[0,11,3]");
        assert_eq!(big.to_one_based(), "[1,12,4]");
        let json = serde_json::to_string(&big).unwrap();
        assert_eq!(serde_json::from_str::<Word>(&json).unwrap(), big);
        let json = serde_json::to_string(&w).unwrap();
        assert_eq!(json, r#"{"k":3,"symbols":"0212010"}"#);
        assert_eq!(serde_json::from_str::<Word>(&json).unwrap(), w);
    }

    #[test]
    fn waiting_time_worked_example() {
        let mut w = Word::from_one_based("1323121", 3).unwrap();
        let wp = Word::from_one_based("231", 3).unwrap();
        assert_eq!(waiting_time(&mut w, &wp, 3).unwrap(), 6);
        assert_eq!(waiting_time(&mut w, &wp, 0).unwrap(), 1);
        assert_eq!(waiting_time(&mut w, &wp[..1], 0).unwrap(), 0);
    }

    #[test]
    fn waiting_time_small_and_exhaustion() {
        // w = "ab...", w' = "b", d = 1: "ab" loses only the a, "ab?" needs two
        // deletions whatever comes next.
        let mut w = Word::new(vec![0, 1, 0], 2).unwrap();
        assert_eq!(waiting_time(&mut w, &[1], 1).unwrap(), 2);
        let mut short = Word::new(vec![0, 1], 2).unwrap();
        assert_eq!(waiting_time(&mut short, &[1], 1), Err(Error::Exhausted { consumed: 2 }));
        // L = 0 gives P_d(0) = d.
        let mut lazy = LazyWord::new(3, &RngStream::new(1, 1), Lane::Word).unwrap();
        assert_eq!(waiting_time(&mut lazy, &[], 4).unwrap(), 4);
    }

    fn waiting_time_by_definition(w: &[u32], wp: &[u32], d: usize) -> usize {
        let mut m = 0;
        while m < w.len() && almost_contained(&w[..=m], wp, d) {
            m += 1;
        }
        assert!(m < w.len(), "word too short for the oracle");
        m
    }

    #[test]
    fn waiting_time_matches_definition() {
        let mut g = RngStream::new(77, 0).generator(Lane::Fortune);
        for case in 0..1000u64 {
            let k = 1 + g.symbol(4);
            let l = g.symbol(13) as usize;
            let d = g.symbol(4) as usize;
            let rng = RngStream::new(77, case);
            let w = sample_word(k, 4 * (l + d) + 60, &rng).unwrap();
            let wp = sample_word_in_lane(k, l, &rng, Lane::WordPrime).unwrap();
            if k == 1 {
                assert_eq!(waiting_time(&mut w.clone(), &wp, d).unwrap(), l + d);
                continue;
            }
            let expected = waiting_time_by_definition(&w, &wp, d);
            assert_eq!(waiting_time(&mut w.clone(), &wp, d).unwrap(), expected);
        }
    }

    #[test]
    fn waiting_time_monotone_exhaustive() {
        // All w' over k <= 3 up to length 8, fixed long w per k.
        for k in 2u32..=3 {
            let w = sample_word(k, 80, &RngStream::new(5, u64::from(k))).unwrap();
            for l in 0..=8u32 {
                for code in 0..k.pow(l) {
                    let mut c = code;
                    let wp: Vec<u32> = (0..l)
                        .map(|_| {
                            let s = c % k;
                            c /= k;
                            s
                        })
                        .collect();
                    let mut prev_d = None;
                    for d in 0..=2 {
                        let p = waiting_time(&mut w.clone(), &wp, d).unwrap();
                        if let Some(q) = prev_d {
                            assert!(p >= q);
                        }
                        prev_d = Some(p);
                        if l > 0 {
                            let shorter = waiting_time(&mut w.clone(), &wp[..l as usize - 1], d).unwrap();
                            assert!(p >= shorter);
                        }
                    }
                }
            }
        }
    }

    #[test]
    fn standard_prefix_examples() {
        let wp = sample_word(2, 12, &RngStream::new(1, 0)).unwrap();
        let dvec = DeletionBudgetVector::new(vec![1, 0, 1], 4).unwrap();
        let empty = standard_prefix(&Word::empty(2), &wp, &dvec).unwrap();
        assert_eq!(empty.consumed, 0);
        assert!(empty.blocks.iter().all(|b| b.is_empty()));
        assert!(standard_prefix(&Word::empty(2), &wp, &DeletionBudgetVector::new(vec![0], 4).unwrap()).is_err());
    }

    #[test]
    fn standard_prefix_matches_blockwise_waiting_times() {
        for seed in 0..300u64 {
            let rng = RngStream::new(seed, 9);
            let wp = sample_word_in_lane(2, 12, &rng, Lane::WordPrime).unwrap();
            let w = sample_word(2, 200, &rng).unwrap();
            let dvec = DeletionBudgetVector::new(vec![1, 0, 1], 4).unwrap();
            let sp = standard_prefix(&w, &wp, &dvec).unwrap();
            let mut offset = 0;
            for (i, block) in sp.blocks.iter().enumerate() {
                let mut rest = Suffix {
                    source: w.clone(),
                    offset,
                };
                let p = waiting_time(&mut rest, &wp[4 * i..4 * i + 4], dvec.budgets[i]).unwrap();
                assert_eq!(block.len(), p);
                offset += p;
            }
            assert_eq!(sp.consumed, offset);
        }
    }

    #[test]
    fn dominating_split_example() {
        let w = letters("ab");
        let wp = letters("xabx");
        let split = lcs_dominating_split(&w, &wp, 2).unwrap();
        assert_eq!(split.dvec.budgets, vec![0, 0]);
        assert_eq!(split.pieces, vec![0..1, 1..2]);
        let sub = letters("ace");
        let dvec = lcs_dominating_dvec(&sub, &letters("abcdef"), 3).unwrap();
        assert_eq!(dvec.total(), 0);
        assert!(lcs_dominating_split(&w, &letters("xab"), 2).is_err());
    }

    /// Builds `w` block by block as `u_i` = a random word that is
    /// `d_i`-almost contained in block `i` of `w'`, by taking a random
    /// subsequence of the block and inserting up to `d_i` extra symbols.
    fn planted(wp: &Word, dvec: &DeletionBudgetVector, g: &mut Generator) -> Word {
        let k = wp.alphabet_size();
        let l = dvec.block_len;
        let mut symbols = Vec::new();
        for (i, &d) in dvec.budgets.iter().enumerate() {
            let mut piece: Vec<u32> = wp[i * l..(i + 1) * l]
                .iter()
                .copied()
                .filter(|_| g.chance(1, 2))
                .collect();
            let extra = g.symbol(d as u32 + 1);
            for _ in 0..extra {
                let at = g.symbol(piece.len() as u32 + 1) as usize;
                piece.insert(at, g.symbol(k));
            }
            symbols.extend(piece);
        }
        Word::new(symbols, k).unwrap()
    }

    #[test]
    fn standard_prefix_consumes_planted_words() {
        let mut g = RngStream::new(31, 0).generator(Lane::Fortune);
        for case in 0..500u64 {
            let k = 2 + g.symbol(3);
            let blocks = 1 + g.symbol(4) as usize;
            let l = 1 + g.symbol(6) as usize;
            let budgets = (0..blocks).map(|_| g.symbol(3) as usize).collect();
            let dvec = DeletionBudgetVector::new(budgets, l).unwrap();
            let wp = sample_word_in_lane(k, blocks * l, &RngStream::new(31, case), Lane::WordPrime).unwrap();
            let w = planted(&wp, &dvec, &mut g);
            let sp = standard_prefix(&w, &wp, &dvec).unwrap();
            assert_eq!(sp.consumed, w.len(), "w={w} w'={wp} d={:?}", dvec.budgets);
        }
    }

    proptest! {
        #[test]
        fn subsequence_iff_zero_budget(u in prop::collection::vec(0u32..3, 0..10),
                                       w in prop::collection::vec(0u32..3, 0..14)) {
            prop_assert_eq!(is_subsequence(&u, &w), almost_contained(&u, &w, 0));
        }

        #[test]
        fn budget_identity_matches_enumeration(u in prop::collection::vec(0u32..3, 0..9),
                                               w in prop::collection::vec(0u32..3, 0..10),
                                               d in 0usize..4) {
            prop_assert_eq!(almost_contained(&u, &w, d), almost_contained_brute(&u, &w, d));
            if almost_contained(&u, &w, d) {
                prop_assert!(almost_contained(&u, &w, d + 1));
            }
        }

        #[test]
        fn dominating_split_postconditions(w in prop::collection::vec(0u32..3, 0..30),
                                           blocks in 1usize..5, l in 1usize..8, seed in any::<u64>()) {
            let w = Word::new(w, 3).unwrap();
            let wp = sample_word(3, blocks * l, &RngStream::new(seed, 0)).unwrap();
            let split = lcs_dominating_split(&w, &wp, l).unwrap();
            prop_assert_eq!(split.dvec.total(), w.len() - lcs_length(&w, &wp));
            prop_assert_eq!(split.pieces.len(), blocks);
            let mut next = 0;
            for (i, piece) in split.pieces.iter().enumerate() {
                prop_assert_eq!(piece.start, next);
                next = piece.end;
                prop_assert!(almost_contained(&w[piece.clone()], &wp[i * l..(i + 1) * l], split.dvec.budgets[i]));
            }
            prop_assert_eq!(next, w.len());
            prop_assert!(vector_almost_contained(&w, &wp, &split.dvec).unwrap());
        }
    }
}
