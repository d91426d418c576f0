//! GF(2) words, the Hadamard code and the coset structure of `{0,1}^n / H`.
//!
//! A word of length `n` is written leftmost bit first. When a word of length
//! at most 64 is packed into a `u64`, position `i` (0-based from the left)
//! is bit `n - 1 - i`, so integer order coincides with lexicographic order.
//!
//! Cosets are indexed by the integer order of their lexicographically
//! smallest element. Inside a coset, the element `rep ⊕ c_k` carries the
//! local label `k`; this is the identification of a coset with `{0,1}^l`.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};

/// Largest `l` for which coset indices fit a `u64` (`n = 64`).
pub const MAX_TABLE_L: u32 = 6;
/// Largest `n` for which `locate` is backed by a precomputed lookup table.
const DENSE_LOCATOR_MAX_N: usize = 16;
/// Largest number of (coset, label) pairs a custom relabeling may cover.
const RELABEL_BUDGET: u64 = 1 << 22;

#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct BitWord {
    len: usize,
    limbs: Vec<u64>,
}

impl BitWord {
    pub fn zeros(len: usize) -> Result<Self> {
        if len == 0 {
            return Err(Error::invalid("bit word", "length must be positive"));
        }
        Ok(Self {
            len,
            limbs: vec![0; len.div_ceil(64)],
        })
    }

    pub fn from_bits(bits: &[u8]) -> Result<Self> {
        let mut w = Self::zeros(bits.len())?;
        for (i, &b) in bits.iter().enumerate() {
            if b > 1 {
                return Err(Error::invalid(
                    "bit word",
                    format!("entry {i} is {b}, expected 0 or 1"),
                ));
            }
            w.set(i, b);
        }
        Ok(w)
    }

    /// Packs `value` as a word of `len <= 64` bits, most significant bit first.
    pub fn from_u64(len: usize, value: u64) -> Result<Self> {
        if len > 64 {
            return Err(Error::dim(format!(
                "packed words hold at most 64 bits, got {len}"
            )));
        }
        if value & !word_mask(len) != 0 {
            return Err(Error::dim(format!(
                "value {value} does not fit in {len} bits"
            )));
        }
        let mut w = Self::zeros(len)?;
        w.limbs[0] = value << (64 - len);
        Ok(w)
    }

    pub fn to_u64(&self) -> Option<u64> {
        (self.len <= 64).then(|| self.limbs[0] >> (64 - self.len))
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn get(&self, i: usize) -> u8 {
        assert!(
            i < self.len,
            "bit index {i} out of range for length {}",
            self.len
        );
        ((self.limbs[i / 64] >> (63 - i % 64)) & 1) as u8
    }

    pub fn set(&mut self, i: usize, bit: u8) {
        assert!(
            i < self.len,
            "bit index {i} out of range for length {}",
            self.len
        );
        let mask = 1u64 << (63 - i % 64);
        if bit & 1 == 1 {
            self.limbs[i / 64] |= mask;
        } else {
            self.limbs[i / 64] &= !mask;
        }
    }

    pub fn xor(&self, other: &BitWord) -> Result<BitWord> {
        check_len(self, other)?;
        let limbs = self
            .limbs
            .iter()
            .zip(&other.limbs)
            .map(|(a, b)| a ^ b)
            .collect();
        Ok(BitWord {
            len: self.len,
            limbs,
        })
    }

    pub fn weight(&self) -> usize {
        self.limbs.iter().map(|l| l.count_ones() as usize).sum()
    }
}

impl fmt::Display for BitWord {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for i in 0..self.len {
            f.write_str(if self.get(i) == 1 { "1" } else { "0" })?;
        }
        Ok(())
    }
}

impl fmt::Debug for BitWord {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "BitWord({self})")
    }
}

impl FromStr for BitWord {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let bits = s
            .chars()
            .map(|c| match c {
                '0' => Ok(0),
                '1' => Ok(1),
                other => Err(Error::invalid(
                    "bit word",
                    format!("unexpected character {other:?}"),
                )),
            })
            .collect::<Result<Vec<u8>>>()?;
        BitWord::from_bits(&bits)
    }
}

impl Serialize for BitWord {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for BitWord {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

fn check_len(u: &BitWord, v: &BitWord) -> Result<()> {
    if u.len != v.len {
        return Err(Error::dim(format!(
            "word lengths differ: {} vs {}",
            u.len, v.len
        )));
    }
    Ok(())
}

#[inline]
pub(crate) fn word_mask(len: usize) -> u64 {
    if len >= 64 {
        u64::MAX
    } else {
        (1u64 << len) - 1
    }
}

/// `sum_i u_i v_i mod 2`.
pub fn gf2_dot(u: &BitWord, v: &BitWord) -> Result<u8> {
    check_len(u, v)?;
    let ones: u32 = u
        .limbs
        .iter()
        .zip(&v.limbs)
        .map(|(a, b)| (a & b).count_ones())
        .sum();
    Ok((ones & 1) as u8)
}

pub fn hamming_weight(w: &BitWord) -> usize {
    w.weight()
}

/// Packed inner product of two `l`-bit labels.
#[inline]
pub fn parity(x: u64) -> u32 {
    x.count_ones() & 1
}

/// `(-1)^<u, v>`.
#[inline]
pub fn character(u: u64, v: u64) -> f64 {
    if parity(u & v) == 0 {
        1.0
    } else {
        -1.0
    }
}

/// Packed Hadamard codeword `c_k` of length `n = 2^l`: position `i` holds
/// `<k, i> mod 2`.
pub fn codeword_packed(l: u32, k: u64) -> u64 {
    let n = 1usize << l;
    let mut w = 0u64;
    for i in 0..n as u64 {
        w = (w << 1) | u64::from(parity(k & i));
    }
    w
}

pub fn hadamard_codeword(l: u32, k: &BitWord) -> Result<BitWord> {
    if l == 0 {
        return Err(Error::invalid("code order", "l must be positive"));
    }
    if k.len() != l as usize {
        return Err(Error::dim(format!(
            "index word has length {}, expected l = {l}",
            k.len()
        )));
    }
    let n = 1usize << l;
    let mut w = BitWord::zeros(n)?;
    for i in 0..n {
        let mut bit = 0u8;
        for t in 0..l as usize {
            // bit t of i counted from the left of the l-bit index
            let it = ((i >> (l as usize - 1 - t)) & 1) as u8;
            bit ^= it & k.get(t);
        }
        w.set(i, bit);
    }
    Ok(w)
}

/// In-place unnormalized Walsh-Hadamard transform:
/// `out[k] = sum_j (-1)^<j,k> in[j]`. Length must be a power of two.
pub fn walsh_hadamard(values: &mut [f64]) {
    let len = values.len();
    assert!(
        len.is_power_of_two(),
        "transform length {len} is not a power of two"
    );
    let mut h = 1;
    while h < len {
        for block in values.chunks_mut(2 * h) {
            let (lo, hi) = block.split_at_mut(h);
            for (a, b) in lo.iter_mut().zip(hi.iter_mut()) {
                let (x, y) = (*a, *b);
                *a = x + y;
                *b = x - y;
            }
        }
        h *= 2;
    }
}

#[inline]
fn pext(x: u64, mut mask: u64) -> u64 {
    let mut out = 0u64;
    let mut bit = 1u64;
    while mask != 0 {
        let low = mask & mask.wrapping_neg();
        if x & low != 0 {
            out |= bit;
        }
        bit <<= 1;
        mask &= mask - 1;
    }
    out
}

#[inline]
fn pdep(x: u64, mut mask: u64) -> u64 {
    let mut out = 0u64;
    let mut bit = 1u64;
    while mask != 0 {
        let low = mask & mask.wrapping_neg();
        if x & bit != 0 {
            out |= low;
        }
        bit <<= 1;
        mask &= mask - 1;
    }
    out
}

#[derive(Debug, Clone)]
struct Relabeling {
    /// `coset * n + k` -> label
    forward: Vec<u32>,
    /// `coset * n + label` -> k
    inverse: Vec<u32>,
}

/// The Hadamard subgroup of `{0,1}^n`, `n = 2^l`, with its cosets.
///
/// Cosets are never materialized: the lexicographically smallest element of
/// `w ⊕ H` is obtained by clearing the pivot bits of a reduced-echelon basis
/// of `H`, and coset indices are the remaining free bits of that
/// representative compressed in order. Small tables additionally cache a
/// direct lookup.
#[derive(Debug, Clone)]
pub struct CosetTable {
    l: u32,
    n: usize,
    subgroup: Vec<u64>,
    /// Reduced echelon basis rows, as (pivot bit, row).
    basis: Vec<(u32, u64)>,
    /// Bit masks of the positions `2^t` (0-based from the left) that spell
    /// out the codeword index, least significant index bit first.
    index_bits: Vec<u64>,
    free_mask: u64,
    coset_count: u64,
    relabel: Option<Relabeling>,
    locator: Option<Vec<u32>>,
}

impl CosetTable {
    pub fn new(l: u32) -> Result<Self> {
        if l == 0 {
            return Err(Error::invalid("code order", "l must be at least 1"));
        }
        if l > MAX_TABLE_L {
            return Err(Error::Resource(format!(
                "coset tables support l <= {MAX_TABLE_L} (n <= 64, 2^58 cosets); got l = {l}"
            )));
        }
        let n = 1usize << l;
        let subgroup: Vec<u64> = (0..n as u64).map(|k| codeword_packed(l, k)).collect();

        // Reduced echelon form with pivots at the most significant bit.
        let mut rows: Vec<u64> = (0..l).map(|t| subgroup[1usize << t]).collect();
        let mut basis: Vec<(u32, u64)> = Vec::new();
        // The largest remaining row carries the highest leading bit.
        while let Some((top, &row)) = rows.iter().enumerate().max_by_key(|&(_, r)| *r) {
            if row == 0 {
                break;
            }
            rows.swap_remove(top);
            let pivot = 63 - row.leading_zeros();
            for r in rows.iter_mut() {
                if (*r >> pivot) & 1 == 1 {
                    *r ^= row;
                }
            }
            for (_, b) in basis.iter_mut() {
                if (*b >> pivot) & 1 == 1 {
                    *b ^= row;
                }
            }
            basis.push((pivot, row));
        }
        debug_assert_eq!(basis.len(), l as usize);
        let pivot_mask: u64 = basis.iter().fold(0, |m, &(p, _)| m | (1u64 << p));
        let free_mask = word_mask(n) & !pivot_mask;
        let index_bits = (0..l).map(|t| 1u64 << (n - 1 - (1usize << t))).collect();

        let mut table = Self {
            l,
            n,
            subgroup,
            basis,
            index_bits,
            free_mask,
            coset_count: 1u64 << (n - l as usize),
            relabel: None,
            locator: None,
        };
        if n <= DENSE_LOCATOR_MAX_N {
            let locator = (0..1u64 << n)
                .map(|w| {
                    let (c, k) = table.locate_uncached(w);
                    (c as u32) * n as u32 + k as u32
                })
                .collect();
            table.locator = Some(locator);
        }
        Ok(table)
    }

    /// Same coset structure with a different per-coset identification of
    /// labels: `perms[c][k]` is the label of `representative(c) ⊕ c_k`.
    pub fn with_relabeling(&self, perms: &[Vec<usize>]) -> Result<Self> {
        let total = self.coset_count.saturating_mul(self.n as u64);
        if total > RELABEL_BUDGET {
            return Err(Error::Resource(format!(
                "custom relabeling needs {total} entries, limit is {RELABEL_BUDGET}"
            )));
        }
        if perms.len() as u64 != self.coset_count {
            return Err(Error::dim(format!(
                "{} permutations for {} cosets",
                perms.len(),
                self.coset_count
            )));
        }
        let n = self.n;
        let mut forward = vec![0u32; total as usize];
        let mut inverse = vec![u32::MAX; total as usize];
        for (c, perm) in perms.iter().enumerate() {
            if perm.len() != n {
                return Err(Error::dim(format!(
                    "permutation {c} has length {}, expected {n}",
                    perm.len()
                )));
            }
            for (k, &label) in perm.iter().enumerate() {
                if label >= n || inverse[c * n + label] != u32::MAX {
                    return Err(Error::invalid(
                        "relabeling",
                        format!("coset {c} is not a permutation"),
                    ));
                }
                forward[c * n + k] = label as u32;
                inverse[c * n + label] = k as u32;
            }
        }
        let mut t = self.clone();
        t.relabel = Some(Relabeling { forward, inverse });
        Ok(t)
    }

    pub fn l(&self) -> u32 {
        self.l
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn coset_count(&self) -> u64 {
        self.coset_count
    }

    /// Codewords indexed by `k` in increasing integer order.
    pub fn subgroup(&self) -> &[u64] {
        &self.subgroup
    }

    pub fn codeword(&self, k: usize) -> u64 {
        self.subgroup[k]
    }

    pub fn representative(&self, coset: u64) -> u64 {
        debug_assert!(coset < self.coset_count);
        pdep(coset, self.free_mask)
    }

    pub fn representatives(&self) -> impl Iterator<Item = u64> + '_ {
        (0..self.coset_count).map(move |c| self.representative(c))
    }

    /// The element of coset `coset` carrying label `label`.
    pub fn element(&self, coset: u64, label: usize) -> u64 {
        let k = match &self.relabel {
            Some(r) => r.inverse[coset as usize * self.n + label] as usize,
            None => label,
        };
        self.representative(coset) ^ self.subgroup[k]
    }

    /// Index of the coset containing packed word `w`.
    pub fn coset_of(&self, w: u64) -> u64 {
        self.locate_packed(w).0
    }

    /// (coset index, label) of packed word `w`.
    #[inline]
    pub fn locate_packed(&self, w: u64) -> (u64, usize) {
        let (c, k) = match &self.locator {
            Some(loc) => {
                let e = loc[w as usize] as usize;
                ((e / self.n) as u64, e % self.n)
            }
            None => self.locate_uncached(w),
        };
        match &self.relabel {
            Some(r) => (c, r.forward[c as usize * self.n + k] as usize),
            None => (c, k),
        }
    }

    fn locate_uncached(&self, w: u64) -> (u64, usize) {
        let mut rep = w;
        for &(pivot, row) in &self.basis {
            if (rep >> pivot) & 1 == 1 {
                rep ^= row;
            }
        }
        let diff = w ^ rep;
        let k = self
            .index_bits
            .iter()
            .enumerate()
            .fold(
                0usize,
                |k, (t, &m)| if diff & m != 0 { k | (1 << t) } else { k },
            );
        (pext(rep, self.free_mask), k)
    }

    /// Locate a word given as a [`BitWord`]; the label is returned as an
    /// `l`-bit word.
    pub fn locate(&self, w: &BitWord) -> Result<(u64, BitWord)> {
        if w.len() != self.n {
            return Err(Error::dim(format!(
                "word has length {}, table has n = {}",
                w.len(),
                self.n
            )));
        }
        let packed = w.to_u64().expect("n <= 64");
        let (c, k) = self.locate_packed(packed);
        Ok((c, BitWord::from_u64(self.l as usize, k as u64)?))
    }

    pub fn word(&self, packed: u64) -> BitWord {
        BitWord::from_u64(self.n, packed).expect("packed word fits n")
    }
}

pub fn build_coset_table(l: u32) -> Result<CosetTable> {
    CosetTable::new(l)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn w(s: &str) -> BitWord {
        s.parse().unwrap()
    }

    #[test]
    fn dot_examples() {
        assert_eq!(gf2_dot(&w("00"), &w("11")).unwrap(), 0);
        assert_eq!(gf2_dot(&w("01"), &w("01")).unwrap(), 1);
        assert_eq!(gf2_dot(&w("11"), &w("11")).unwrap(), 0);
        assert!(matches!(
            gf2_dot(&w("1"), &w("11")),
            Err(Error::Dimension(_))
        ));
    }

    #[test]
    fn weight_examples() {
        assert_eq!(hamming_weight(&w("0000")), 0);
        assert_eq!(hamming_weight(&w("0101")), 2);
        assert_eq!(hamming_weight(&w("1111")), 4);
    }

    #[test]
    fn bitword_rejects_empty_and_junk() {
        assert!(BitWord::zeros(0).is_err());
        assert!("01x".parse::<BitWord>().is_err());
        assert!("".parse::<BitWord>().is_err());
    }

    #[test]
    fn bitword_self_xor_is_zero() {
        let a = w("1011001110001111000011110000111100001111000011110000111100001111101");
        assert_eq!(a.xor(&a).unwrap().weight(), 0);
        assert_eq!(a.to_string().len(), 67);
    }

    #[test]
    fn codeword_examples() {
        assert_eq!(hadamard_codeword(2, &w("00")).unwrap(), w("0000"));
        assert_eq!(hadamard_codeword(2, &w("01")).unwrap(), w("0101"));
        assert_eq!(hadamard_codeword(2, &w("11")).unwrap(), w("0110"));
        assert!(hadamard_codeword(2, &w("011")).is_err());
    }

    #[test]
    fn packed_codewords_match_bitword_codewords() {
        for l in 1..=4u32 {
            for k in 0..(1u64 << l) {
                let kw = BitWord::from_u64(l as usize, k).unwrap();
                let cw = hadamard_codeword(l, &kw).unwrap();
                assert_eq!(cw.to_u64().unwrap(), codeword_packed(l, k));
            }
        }
    }

    #[test]
    fn table_l1() {
        let t = build_coset_table(1).unwrap();
        let sub: Vec<String> = t
            .subgroup()
            .iter()
            .map(|&c| t.word(c).to_string())
            .collect();
        assert_eq!(sub, ["00", "01"]);
        let reps: Vec<String> = t.representatives().map(|r| t.word(r).to_string()).collect();
        assert_eq!(reps, ["00", "10"]);
        assert_eq!(t.coset_count(), 2);
    }

    #[test]
    fn table_l2() {
        let t = build_coset_table(2).unwrap();
        let sub: Vec<String> = t
            .subgroup()
            .iter()
            .map(|&c| t.word(c).to_string())
            .collect();
        assert_eq!(sub, ["0000", "0101", "0011", "0110"]);
        let reps: Vec<String> = t.representatives().map(|r| t.word(r).to_string()).collect();
        assert_eq!(reps, ["0000", "0001", "1000", "1001"]);
        assert_eq!(t.coset_count(), 4);
    }

    #[test]
    fn locate_examples() {
        let t = build_coset_table(2).unwrap();
        assert_eq!(t.locate(&w("0000")).unwrap(), (0, w("00")));
        assert_eq!(t.locate(&w("0100")).unwrap(), (1, w("01")));
        assert_eq!(t.locate(&w("1111")).unwrap(), (3, w("11")));
        assert!(t.locate(&w("000")).is_err());
    }

    #[test]
    fn coset_count_formula() {
        for l in 1..=MAX_TABLE_L {
            let t = build_coset_table(l).unwrap();
            let n = 1u128 << l;
            assert_eq!(u128::from(t.coset_count()), (1u128 << n) / n);
        }
        assert!(matches!(build_coset_table(7), Err(Error::Resource(_))));
        assert!(build_coset_table(0).is_err());
    }

    #[test]
    fn representatives_are_lex_smallest() {
        for l in 1..=3u32 {
            let t = build_coset_table(l).unwrap();
            let n = t.n();
            let mut reps: Vec<u64> = (0..1u64 << n)
                .map(|x| t.subgroup().iter().map(|c| x ^ c).min().unwrap())
                .collect();
            reps.sort_unstable();
            reps.dedup();
            assert_eq!(reps, t.representatives().collect::<Vec<_>>());
        }
    }

    #[test]
    fn nonzero_codewords_have_half_weight() {
        for l in 1..=MAX_TABLE_L {
            let t = build_coset_table(l).unwrap();
            for &c in &t.subgroup()[1..] {
                assert_eq!(c.count_ones() as usize, t.n() / 2);
            }
            assert_eq!(t.subgroup()[0], 0);
        }
    }

    #[test]
    fn subgroup_closed_under_xor() {
        let t = build_coset_table(3).unwrap();
        let set: std::collections::HashSet<u64> = t.subgroup().iter().copied().collect();
        for &a in t.subgroup() {
            for &b in t.subgroup() {
                assert!(set.contains(&(a ^ b)));
            }
        }
    }

    #[test]
    fn fourier_orthogonality() {
        for l in 1..=5u32 {
            let n = 1u64 << l;
            for c in 0..n {
                let s: i64 = (0..n)
                    .map(|k| if parity(c & k) == 0 { 1 } else { -1 })
                    .sum();
                assert_eq!(s, if c == 0 { n as i64 } else { 0 });
            }
        }
    }

    #[test]
    fn locate_is_a_bijection() {
        for l in 1..=4u32 {
            let t = build_coset_table(l).unwrap();
            let n = t.n();
            let mut seen = vec![false; 1usize << n];
            for word in 0..1u64 << n {
                let (c, k) = t.locate_packed(word);
                assert_eq!(t.element(c, k), word);
                let slot = c as usize * n + k;
                assert!(!seen[slot]);
                seen[slot] = true;
            }
        }
    }

    #[test]
    fn uncached_locate_agrees_beyond_cache() {
        let t = build_coset_table(5).unwrap();
        assert!(t.locator.is_none());
        let mut x = 0x9E37_79B9u64;
        for _ in 0..2000 {
            x = x
                .wrapping_mul(6364136223846793005)
                .wrapping_add(1442695040888963407);
            let word = x >> 32;
            let (c, k) = t.locate_packed(word);
            assert_eq!(t.representative(c) ^ t.codeword(k), word);
            assert!(t.representative(c) <= word);
        }
        let t6 = build_coset_table(6).unwrap();
        let (c, k) = t6.locate_packed(u64::MAX);
        assert_eq!(t6.element(c, k), u64::MAX);
    }

    #[test]
    fn relabeling_keeps_cosets() {
        let t = build_coset_table(2).unwrap();
        let perms = vec![
            vec![3, 2, 1, 0],
            vec![0, 1, 2, 3],
            vec![1, 0, 3, 2],
            vec![2, 3, 0, 1],
        ];
        let r = t.with_relabeling(&perms).unwrap();
        for word in 0..16u64 {
            let (c0, k0) = t.locate_packed(word);
            let (c1, k1) = r.locate_packed(word);
            assert_eq!(c0, c1);
            assert_eq!(k1, perms[c0 as usize][k0]);
            assert_eq!(r.element(c1, k1), word);
        }
        assert!(t.with_relabeling(&vec![vec![0, 0, 1, 2]; 4]).is_err());
    }

    #[test]
    fn walsh_hadamard_matches_definition() {
        let v = [0.5, -1.0, 2.0, 0.25, 0.0, 1.0, -0.5, 3.0];
        let mut fast = v;
        walsh_hadamard(&mut fast);
        for (k, &f) in fast.iter().enumerate() {
            let direct: f64 = v
                .iter()
                .enumerate()
                .map(|(j, &x)| character(j as u64, k as u64) * x)
                .sum();
            assert!((f - direct).abs() < 1e-12);
        }
    }

    proptest! {
        #[test]
        fn codewords_are_linear(l in 1u32..=4, k1 in 0u64..16, k2 in 0u64..16) {
            let n = 1u64 << l;
            let (k1, k2) = (k1 % n, k2 % n);
            prop_assert_eq!(codeword_packed(l, k1 ^ k2), codeword_packed(l, k1) ^ codeword_packed(l, k2));
        }

        #[test]
        fn bitword_string_round_trip(bits in proptest::collection::vec(0u8..2, 1..150)) {
            let word = BitWord::from_bits(&bits).unwrap();
            let back: BitWord = word.to_string().parse().unwrap();
            prop_assert_eq!(back, word);
        }
    }
}
