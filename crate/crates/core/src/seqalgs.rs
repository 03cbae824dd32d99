//! LCS length and longest non-decreasing subsequences.
//!
//! Two LCS engines share one incremental interface: feed the symbols of one
//! word into a table built over the other and read off the LCS of the fed
//! prefix. [`LcsTable`] is the textbook rolling-row dynamic program;
//! [`BitLcs`] packs the same row into machine words (Hyyrö's bit-vector
//! recurrence) and is what the hot paths use. They agree bit for bit.

/// Rolling-row LCS dynamic program against a fixed reference word.
///
/// After feeding a prefix `u` of some word, `row[j] = LCS(u, reference[..j])`.
/// Entries are non-decreasing along the row and adjacent entries differ by at
/// most one.
#[derive(Debug, Clone)]
pub struct LcsTable<'a> {
    reference: &'a [u32],
    row: Vec<u32>,
    fed: usize,
}

impl<'a> LcsTable<'a> {
    pub fn new(reference: &'a [u32]) -> Self {
        Self {
            reference,
            row: vec![0; reference.len() + 1],
            fed: 0,
        }
    }

    /// Appends one symbol to the fed word and returns the new LCS length.
    pub fn push(&mut self, symbol: u32) -> usize {
        let mut diag = 0; // row[j-1] before this update
        for (j, &r) in self.reference.iter().enumerate() {
            let up = self.row[j + 1];
            let next = if r == symbol { diag + 1 } else { up.max(self.row[j]) };
            diag = up;
            self.row[j + 1] = next;
        }
        self.fed += 1;
        self.lcs()
    }

    pub fn lcs(&self) -> usize {
        self.row[self.reference.len()] as usize
    }

    pub fn fed(&self) -> usize {
        self.fed
    }

    pub fn row(&self) -> &[u32] {
        &self.row
    }
}

/// Bit-parallel LCS against a fixed reference word.
///
/// Keeps a bit vector `V` over the reference positions; a zero bit marks a
/// position where the LCS row steps up. Each fed symbol costs
/// `O(len(reference) / 64)` word operations.
#[derive(Debug, Clone)]
pub struct BitLcs {
    len: usize,
    /// Match masks, `masks[s]` has bit `j` set iff `reference[j] == s`.
    masks: Vec<Vec<u64>>,
    v: Vec<u64>,
    fed: usize,
}

impl BitLcs {
    pub fn new(reference: &[u32]) -> Self {
        let len = reference.len();
        let words = len.div_ceil(64);
        let max_symbol = reference.iter().copied().max().map_or(0, |m| m as usize + 1);
        let mut masks = vec![Vec::new(); max_symbol];
        for (j, &s) in reference.iter().enumerate() {
            let m = &mut masks[s as usize];
            if m.is_empty() {
                m.resize(words, 0);
            }
            m[j / 64] |= 1 << (j % 64);
        }
        let mut v = vec![u64::MAX; words];
        if !len.is_multiple_of(64) {
            if let Some(last) = v.last_mut() {
                *last = (1u64 << (len % 64)) - 1;
            }
        }
        Self { len, masks, v, fed: 0 }
    }

    /// Appends one symbol to the fed word and returns the new LCS length.
    pub fn push(&mut self, symbol: u32) -> usize {
        self.fed += 1;
        let Some(mask) = self.masks.get(symbol as usize).filter(|m| !m.is_empty()) else {
            return self.lcs();
        };
        // V' = (V + (V & M)) | (V & !M), with carries across words.
        let mut carry = 0u64;
        for (v, &m) in self.v.iter_mut().zip(mask) {
            let u = *v & m;
            let (s1, c1) = v.overflowing_add(u);
            let (s2, c2) = s1.overflowing_add(carry);
            carry = u64::from(c1 | c2);
            *v = s2 | (*v & !m);
        }
        if !self.len.is_multiple_of(64) {
            if let Some(last) = self.v.last_mut() {
                *last &= (1u64 << (self.len % 64)) - 1;
            }
        }
        self.lcs()
    }

    pub fn lcs(&self) -> usize {
        let ones: usize = self.v.iter().map(|w| w.count_ones() as usize).sum();
        self.len - ones
    }

    pub fn fed(&self) -> usize {
        self.fed
    }
}

/// Length of the longest common subsequence. Symmetric; uses the bit-parallel
/// engine with the shorter word as reference.
pub fn lcs_length(u: &[u32], w: &[u32]) -> usize {
    let (short, long) = if u.len() <= w.len() { (u, w) } else { (w, u) };
    if short.is_empty() {
        return 0;
    }
    let mut table = BitLcs::new(short);
    for &s in long {
        table.push(s);
    }
    table.lcs()
}

/// Reference dynamic program, `O(len(u) * len(w))` time and `O(min len)` memory.
pub fn lcs_length_dp(u: &[u32], w: &[u32]) -> usize {
    let (short, long) = if u.len() <= w.len() { (u, w) } else { (w, u) };
    let mut table = LcsTable::new(short);
    for &s in long {
        table.push(s);
    }
    table.lcs()
}

/// One longest common subsequence as matched index pairs `(i, j)` with
/// `u[i] == w[j]`, both strictly increasing. Full-table traceback.
pub fn lcs_alignment(u: &[u32], w: &[u32]) -> Vec<(usize, usize)> {
    let (n, m) = (u.len(), w.len());
    let width = m + 1;
    let mut t = vec![0u32; (n + 1) * width];
    for i in 1..=n {
        for j in 1..=m {
            t[i * width + j] = if u[i - 1] == w[j - 1] {
                t[(i - 1) * width + j - 1] + 1
            } else {
                t[(i - 1) * width + j].max(t[i * width + j - 1])
            };
        }
    }
    let mut pairs = Vec::with_capacity(t[n * width + m] as usize);
    let (mut i, mut j) = (n, m);
    while i > 0 && j > 0 {
        if u[i - 1] == w[j - 1] && t[i * width + j] == t[(i - 1) * width + j - 1] + 1 {
            pairs.push((i - 1, j - 1));
            i -= 1;
            j -= 1;
        } else if t[(i - 1) * width + j] >= t[i * width + j - 1] {
            i -= 1;
        } else {
            j -= 1;
        }
    }
    pairs.reverse();
    pairs
}

/// Longest non-decreasing subsequence, patience style.
///
/// `tails[l]` is the smallest possible last symbol of a non-decreasing
/// subsequence of length `l + 1`; each symbol replaces the first tail that is
/// strictly greater than it.
pub fn lnds(w: &[u32]) -> usize {
    let mut tails: Vec<u32> = Vec::new();
    for &x in w {
        let idx = tails.partition_point(|&t| t <= x);
        if idx == tails.len() {
            tails.push(x);
        } else {
            tails[idx] = x;
        }
    }
    tails.len()
}

/// LNDS of the word with every symbol greater than `ceiling` deleted.
pub fn lnds_restricted(w: &[u32], ceiling: u32) -> usize {
    let mut tails: Vec<u32> = Vec::new();
    for &x in w.iter().filter(|&&x| x <= ceiling) {
        let idx = tails.partition_point(|&t| t <= x);
        if idx == tails.len() {
            tails.push(x);
        } else {
            tails[idx] = x;
        }
    }
    tails.len()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn letters(s: &str) -> Vec<u32> {
        s.bytes().map(|b| u32::from(b - b'a')).collect()
    }

    fn digits(s: &str) -> Vec<u32> {
        s.bytes().map(|b| u32::from(b - b'0')).collect()
    }

    /// Exhaustive oracle: longest subsequence of `u` (by deletion set) that is
    /// a subsequence of `w`.
    fn lcs_brute(u: &[u32], w: &[u32]) -> usize {
        let n = u.len();
        let mut best = 0;
        for mask in 0u32..(1 << n) {
            let sub: Vec<u32> = (0..n).filter(|i| mask >> i & 1 == 1).map(|i| u[i]).collect();
            let mut it = w.iter();
            if sub.iter().all(|s| it.any(|x| x == s)) {
                best = best.max(sub.len());
            }
        }
        best
    }

    /// Quadratic LNDS oracle.
    fn lnds_quadratic(w: &[u32]) -> usize {
        let mut best = vec![1usize; w.len()];
        for i in 0..w.len() {
            for j in 0..i {
                if w[j] <= w[i] {
                    best[i] = best[i].max(best[j] + 1);
                }
            }
        }
        best.into_iter().max().unwrap_or(0)
    }

    #[test]
    fn lcs_examples() {
        assert_eq!(lcs_length(&letters("abada"), &letters("abracadabra")), 5);
        assert_eq!(lcs_length(&[], &letters("abracadabra")), 0);
        let macabre = letters("macabre");
        let abra = letters("abracadabra");
        assert_eq!(lcs_brute(&macabre, &abra), 5);
        assert_eq!(lcs_length(&macabre, &abra), 5);
        assert_eq!(lcs_length_dp(&macabre, &abra), 5);
    }

    #[test]
    fn lcs_table_rows_are_unit_steps() {
        let reference = letters("abracadabra");
        let mut t = LcsTable::new(&reference);
        for s in letters("macabre") {
            t.push(s);
            for pair in t.row().windows(2) {
                assert!(pair[1] == pair[0] || pair[1] == pair[0] + 1);
            }
        }
        assert_eq!(t.fed(), 7);
    }

    #[test]
    fn alignment_is_a_valid_lcs() {
        let u = letters("macabre");
        let w = letters("abracadabra");
        let pairs = lcs_alignment(&u, &w);
        assert_eq!(pairs.len(), 5);
        for win in pairs.windows(2) {
            assert!(win[0].0 < win[1].0 && win[0].1 < win[1].1);
        }
        assert!(pairs.iter().all(|&(i, j)| u[i] == w[j]));
    }

    #[test]
    fn bitlcs_crosses_word_boundaries() {
        // Lengths around multiples of 64 exercise carries and tail masking.
        for len in [63usize, 64, 65, 127, 128, 129, 200] {
            let a: Vec<u32> = (0..len).map(|i| ((i * 7 + 3) % 5) as u32).collect();
            let b: Vec<u32> = (0..len + 17).map(|i| ((i * 11 + 1) % 5) as u32).collect();
            assert_eq!(lcs_length(&a, &b), lcs_length_dp(&a, &b), "len {len}");
        }
    }

    #[test]
    fn lnds_examples() {
        assert_eq!(lnds(&digits("22120")), 3);
        assert_eq!(lnds(&digits("001224")), 6);
        assert_eq!(lnds(&[5, 4, 3, 2, 1, 0]), 1);
        assert_eq!(lnds(&[]), 0);
        assert_eq!(lnds_restricted(&digits("22120"), 1), 1);
        assert_eq!(lnds_restricted(&digits("22120"), 0), 1);
        assert_eq!(lnds_quadratic(&[0]), 1);
        assert_eq!(lnds_restricted(&digits("22120"), 2), lnds(&digits("22120")));
    }

    #[test]
    fn lnds_matches_quadratic_exhaustively() {
        for k in 1u32..=3 {
            for n in 0..=10u32 {
                let total = k.pow(n);
                for code in 0..total {
                    let mut c = code;
                    let w: Vec<u32> = (0..n)
                        .map(|_| {
                            let s = c % k;
                            c /= k;
                            s
                        })
                        .collect();
                    assert_eq!(lnds(&w), lnds_quadratic(&w), "{w:?}");
                }
            }
        }
    }

    fn all_words(alphabet: u32, max_len: u32) -> Vec<Vec<u32>> {
        let mut out = vec![Vec::new()];
        let mut layer = vec![Vec::new()];
        for _ in 0..max_len {
            layer = layer
                .iter()
                .flat_map(|w: &Vec<u32>| {
                    (0..alphabet).map(move |s| {
                        let mut v = w.clone();
                        v.push(s);
                        v
                    })
                })
                .collect();
            out.extend(layer.iter().cloned());
        }
        out
    }

    /// Set partitions of `0..n` as bitmasks of their blocks.
    fn set_partitions(n: usize) -> Vec<Vec<u32>> {
        fn grow(i: usize, n: usize, blocks: &mut Vec<u32>, out: &mut Vec<Vec<u32>>) {
            if i == n {
                out.push(blocks.clone());
                return;
            }
            for b in 0..blocks.len() {
                blocks[b] |= 1 << i;
                grow(i + 1, n, blocks, out);
                blocks[b] &= !(1 << i);
            }
            blocks.push(1 << i);
            grow(i + 1, n, blocks, out);
            blocks.pop();
        }
        let mut out = Vec::new();
        grow(0, n, &mut Vec::new(), &mut out);
        out
    }

    /// Averaging `lnds(w · A↓ · w')` over the parts `A` of any partition of
    /// the alphabet into `k` parts gains at least `1/k`. Empty parts add
    /// nothing, so this is `Σ_A (lnds(w A↓ w') - lnds(w w')) >= 1` over the
    /// non-empty parts, independently of `k`.
    #[test]
    fn descending_insert_gains_on_average() {
        assert_eq!(set_partitions(4).len(), 15);
        for d in 1u32..=3 {
            let words = all_words(d + 1, 5);
            let partitions = set_partitions(d as usize + 1);
            let mut joined = Vec::with_capacity(16);
            for w in &words {
                for wp in &words {
                    joined.clear();
                    joined.extend_from_slice(w);
                    joined.extend_from_slice(wp);
                    let base = lnds(&joined);
                    let mut gain = [0usize; 16];
                    for (mask, g) in gain.iter_mut().enumerate().skip(1).take((1 << (d + 1)) - 1) {
                        joined.clear();
                        joined.extend_from_slice(w);
                        joined.extend((0..=d).rev().filter(|s| mask >> s & 1 == 1));
                        joined.extend_from_slice(wp);
                        *g = lnds(&joined) - base;
                    }
                    for p in &partitions {
                        let total: usize = p.iter().map(|&m| gain[m as usize]).sum();
                        assert!(total >= 1, "w={w:?} w'={wp:?} partition={p:?}");
                    }
                }
            }
        }
    }

    #[test]
    fn lnds_matches_quadratic_on_random_words() {
        let mut g = crate::rng::RngStream::new(11, 0).generator(crate::rng::Lane::Word);
        for _ in 0..10_000 {
            let k = 1 + g.symbol(8);
            let n = g.symbol(201) as usize;
            let w: Vec<u32> = (0..n).map(|_| g.symbol(k)).collect();
            assert_eq!(lnds(&w), lnds_quadratic(&w));
        }
    }

    proptest! {
        #[test]
        fn lcs_engines_agree(u in prop::collection::vec(0u32..4, 0..150),
                             w in prop::collection::vec(0u32..4, 0..150)) {
            let dp = lcs_length_dp(&u, &w);
            prop_assert_eq!(lcs_length(&u, &w), dp);
            prop_assert_eq!(lcs_length(&w, &u), dp);
            prop_assert_eq!(lcs_alignment(&u, &w).len(), dp);
            prop_assert!(dp <= u.len().min(w.len()));
        }

        #[test]
        fn lcs_self_and_common_append(u in prop::collection::vec(0u32..3, 0..40),
                                      w in prop::collection::vec(0u32..3, 0..40),
                                      s in 0u32..3) {
            prop_assert_eq!(lcs_length(&u, &u), u.len());
            let mut u2 = u.clone();
            u2.push(s);
            let mut w2 = w.clone();
            w2.push(s);
            prop_assert_eq!(lcs_length(&u2, &w2), lcs_length(&u, &w) + 1);
        }

        #[test]
        fn lcs_small_matches_brute(u in prop::collection::vec(0u32..3, 0..9),
                                   w in prop::collection::vec(0u32..3, 0..12)) {
            prop_assert_eq!(lcs_length(&u, &w), lcs_brute(&u, &w));
        }

        #[test]
        fn lnds_subadditive_over_position_split(
            w in prop::collection::vec(0u32..5, 0..60),
            split in prop::collection::vec(any::<bool>(), 60),
        ) {
            let (mut a, mut b) = (Vec::new(), Vec::new());
            for (i, &s) in w.iter().enumerate() {
                if split[i] { a.push(s) } else { b.push(s) }
            }
            prop_assert!(lnds(&w) <= lnds(&a) + lnds(&b));
        }
    }
}
