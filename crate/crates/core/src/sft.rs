//! Alphabets, adjacency matrices, admissible words and cylinder levels.

use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

use crate::error::{Error, Result};

/// A finite word over the alphabet. Symbols are stored 0-based.
///
/// The empty word stands for the whole shift space.
#[derive(Clone, Debug, Default, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Word(Vec<u8>);

impl Word {
    pub fn empty() -> Self {
        Word(Vec::new())
    }

    /// Builds a word from 0-based symbols.
    pub fn new(symbols: Vec<u8>) -> Self {
        Word(symbols)
    }

    /// Builds a word from 1-based symbols as they appear in files and output.
    ///
    /// Fails with `Inadmissible` on a zero or oversized symbol.
    pub fn from_one_based(symbols: &[u32]) -> Result<Self> {
        symbols
            .iter()
            .map(|&s| {
                if s == 0 || s > 256 {
                    Err(Error::Inadmissible)
                } else {
                    Ok((s - 1) as u8)
                }
            })
            .collect::<Result<Vec<u8>>>()
            .map(Word)
    }

    pub fn symbols(&self) -> &[u8] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn last(&self) -> Option<u8> {
        self.0.last().copied()
    }

    /// The word extended by one symbol.
    pub fn child(&self, symbol: u8) -> Word {
        let mut s = Vec::with_capacity(self.0.len() + 1);
        s.extend_from_slice(&self.0);
        s.push(symbol);
        Word(s)
    }

    pub fn prefix(&self, n: usize) -> Word {
        Word(self.0[..n.min(self.0.len())].to_vec())
    }

    pub fn is_prefix_of(&self, other: &Word) -> bool {
        other.0.starts_with(&self.0)
    }

    pub fn common_prefix_len(&self, other: &Word) -> usize {
        self.0
            .iter()
            .zip(other.0.iter())
            .take_while(|(a, b)| a == b)
            .count()
    }

    pub fn one_based(&self) -> Vec<u32> {
        self.0.iter().map(|&s| s as u32 + 1).collect()
    }
}

impl From<&[u8]> for Word {
    fn from(s: &[u8]) -> Self {
        Word(s.to_vec())
    }
}

/// Prints 1-based symbols, concatenated when every symbol is a single
/// digit and dot separated otherwise. The empty word prints as `e`.
impl fmt::Display for Word {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.0.is_empty() {
            return write!(f, "e");
        }
        let short = self.0.iter().all(|&s| s < 9);
        for (i, s) in self.0.iter().enumerate() {
            if i > 0 && !short {
                write!(f, ".")?;
            }
            write!(f, "{}", *s as u32 + 1)?;
        }
        Ok(())
    }
}

/// A validated primitive adjacency matrix.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SubshiftSpec {
    size: usize,
    adjacency: Vec<bool>,
    exponent: usize,
}

fn bool_mul(a: &[bool], b: &[bool], n: usize) -> Vec<bool> {
    let mut out = vec![false; n * n];
    for i in 0..n {
        for k in 0..n {
            if a[i * n + k] {
                for j in 0..n {
                    out[i * n + j] |= b[k * n + j];
                }
            }
        }
    }
    out
}

fn bool_pow(a: &[bool], n: usize, mut e: usize) -> Vec<bool> {
    let mut result = vec![false; n * n];
    for i in 0..n {
        result[i * n + i] = true;
    }
    let mut base = a.to_vec();
    while e > 0 {
        if e & 1 == 1 {
            result = bool_mul(&result, &base, n);
        }
        base = bool_mul(&base, &base, n);
        e >>= 1;
    }
    result
}

/// Validates an adjacency matrix given row-major as 0/1 entries.
pub fn build_subshift(alphabet_size: usize, adjacency: &[u8]) -> Result<SubshiftSpec> {
    let l = alphabet_size;
    if l < 2 {
        return Err(Error::BadShape("alphabet needs at least two symbols"));
    }
    if l > 255 {
        return Err(Error::BadShape("alphabet larger than 255 symbols"));
    }
    if adjacency.len() != l * l {
        return Err(Error::BadShape("adjacency is not square"));
    }
    if adjacency.iter().any(|&a| a > 1) {
        return Err(Error::BadShape("entries must be 0 or 1"));
    }
    let adj: Vec<bool> = adjacency.iter().map(|&a| a == 1).collect();
    for i in 0..l {
        let row = (0..l).any(|j| adj[i * l + j]);
        let col = (0..l).any(|j| adj[j * l + i]);
        if !row || !col {
            return Err(Error::NotPrimitive);
        }
    }
    // Wielandt: primitive iff A^m > 0 for m = (l-1)^2 + 1.
    let wielandt = (l - 1) * (l - 1) + 1;
    if !bool_pow(&adj, l, wielandt).iter().all(|&b| b) {
        return Err(Error::NotPrimitive);
    }
    let mut exponent = 1;
    let mut p = adj.clone();
    while !p.iter().all(|&b| b) {
        p = bool_mul(&p, &adj, l);
        exponent += 1;
    }
    Ok(SubshiftSpec {
        size: l,
        adjacency: adj,
        exponent,
    })
}

/// Same as [`build_subshift`] with one inner vector per row.
pub fn build_subshift_rows(rows: &[Vec<u8>]) -> Result<SubshiftSpec> {
    let l = rows.len();
    if rows.iter().any(|r| r.len() != l) {
        return Err(Error::BadShape("adjacency is not square"));
    }
    let flat: Vec<u8> = rows.iter().flatten().copied().collect();
    build_subshift(l, &flat)
}

impl SubshiftSpec {
    pub fn full(l: usize) -> Result<Self> {
        build_subshift(l, &vec![1u8; l * l])
    }

    pub fn golden_mean() -> Self {
        build_subshift(2, &[1, 1, 1, 0]).expect("golden mean matrix is primitive")
    }

    pub fn alphabet_size(&self) -> usize {
        self.size
    }

    /// Smallest m with A^m strictly positive.
    pub fn primitivity_exponent(&self) -> usize {
        self.exponent
    }

    /// Whether symbol `b` may follow symbol `a`.
    pub fn allowed(&self, a: u8, b: u8) -> bool {
        self.adjacency[a as usize * self.size + b as usize]
    }

    pub fn adjacency_row(&self, a: u8) -> &[bool] {
        let i = a as usize * self.size;
        &self.adjacency[i..i + self.size]
    }

    pub fn is_admissible(&self, word: &[u8]) -> bool {
        word.iter().all(|&s| (s as usize) < self.size)
            && word.windows(2).all(|w| self.allowed(w[0], w[1]))
    }

    pub fn check(&self, word: &Word) -> Result<()> {
        if self.is_admissible(word.symbols()) {
            Ok(())
        } else {
            Err(Error::Inadmissible)
        }
    }

    /// Symbols that may follow `last`, ascending. `None` means the empty word.
    pub fn followers(&self, last: Option<u8>) -> impl Iterator<Item = u8> + '_ {
        (0..self.size as u8).filter(move |&b| last.is_none_or(|a| self.allowed(a, b)))
    }

    /// Symbols that may precede `first`, ascending.
    pub fn predecessors(&self, first: u8) -> impl Iterator<Item = u8> + '_ {
        (0..self.size as u8).filter(move |&a| self.allowed(a, first))
    }

    /// Allowed next symbols in ascending order.
    pub fn children(&self, word: &Word) -> Result<Vec<u8>> {
        self.check(word)?;
        Ok(self.followers(word.last()).collect())
    }

    /// Number of children α(x).
    pub fn alpha(&self, last: Option<u8>) -> usize {
        match last {
            None => self.size,
            Some(a) => self.adjacency_row(a).iter().filter(|&&b| b).count(),
        }
    }

    /// All admissible words of length `k` in lexicographic order.
    pub fn enumerate_cylinders(&self, k: usize) -> Vec<Word> {
        let mut level = vec![Word::empty()];
        for _ in 0..k {
            let mut next = Vec::new();
            for w in &level {
                for b in self.followers(w.last()) {
                    next.push(w.child(b));
                }
            }
            level = next;
        }
        level
    }

    /// card of the admissible k-words, from the matrix power A^{k-1}.
    pub fn count_words(&self, k: usize) -> u128 {
        if k == 0 {
            return 1;
        }
        let l = self.size;
        let mut v = vec![1u128; l];
        for _ in 1..k {
            let mut next = vec![0u128; l];
            for (a, &va) in v.iter().enumerate() {
                for (b, n) in next.iter_mut().enumerate() {
                    if self.adjacency[a * l + b] {
                        *n += va;
                    }
                }
            }
            v = next;
        }
        v.iter().sum()
    }
}

/// 2^{-n} with n the length of the common prefix.
pub fn common_prefix_metric(w1: &Word, w2: &Word) -> f64 {
    libm::exp2(-(w1.common_prefix_len(w2) as f64))
}

/// The admissible words of one length with index lookup.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Level {
    len: usize,
    words: Vec<Word>,
}

impl Level {
    pub fn new(spec: &SubshiftSpec, len: usize) -> Self {
        Level {
            len,
            words: spec.enumerate_cylinders(len),
        }
    }

    pub fn word_len(&self) -> usize {
        self.len
    }

    pub fn words(&self) -> &[Word] {
        &self.words
    }

    pub fn len(&self) -> usize {
        self.words.len()
    }

    pub fn is_empty(&self) -> bool {
        self.words.is_empty()
    }

    pub fn index_of(&self, symbols: &[u8]) -> Option<usize> {
        if symbols.len() != self.len {
            return None;
        }
        self.words
            .binary_search_by(|w| w.symbols().cmp(symbols))
            .ok()
    }
}

/// A real function constant on the admissible words of one length.
#[derive(Clone, Debug, PartialEq)]
pub struct LevelFunction {
    pub level: usize,
    pub values: Vec<f64>,
}

impl LevelFunction {
    pub fn new(spec: &SubshiftSpec, level: usize, values: Vec<f64>) -> Result<Self> {
        let n = spec.count_words(level) as usize;
        if values.len() != n {
            return Err(Error::ShapeMismatch {
                expected: n,
                found: values.len(),
            });
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidValue("function value is not finite"));
        }
        Ok(LevelFunction { level, values })
    }

    pub fn constant(spec: &SubshiftSpec, level: usize, c: f64) -> Self {
        let n = spec.count_words(level) as usize;
        LevelFunction {
            level,
            values: vec![c; n],
        }
    }

    /// Characteristic function of [x] on words of length `level` ≥ |x|.
    pub fn indicator(spec: &SubshiftSpec, x: &Word, level: usize) -> Result<Self> {
        spec.check(x)?;
        if level < x.len() {
            return Err(Error::LevelMismatch {
                expected: x.len(),
                found: level,
            });
        }
        let values = spec
            .enumerate_cylinders(level)
            .iter()
            .map(|w| if x.is_prefix_of(w) { 1.0 } else { 0.0 })
            .collect();
        Ok(LevelFunction { level, values })
    }
}
