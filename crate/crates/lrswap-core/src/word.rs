//! Lexicographic indexing of species words.
//!
//! A word of length `n` over `{1..N}` labels one basis vector of the
//! `N^n`-dimensional tensor space. Rows and columns of every operator are
//! ordered lexicographically from `11..1` to `NN..N`.

use crate::error::{Error, Result};
use crate::DIMENSION_CAP;

/// The basis of length-`len` words over `{1..species}`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct WordSpace {
    pub len: usize,
    pub species: usize,
}

impl WordSpace {
    pub fn new(len: usize, species: usize) -> Result<Self> {
        if len == 0 {
            return Err(Error::invalid("word length must be positive"));
        }
        if species == 0 {
            return Err(Error::invalid("species count must be positive"));
        }
        let mut dim = 1usize;
        for _ in 0..len {
            dim = dim
                .checked_mul(species)
                .filter(|&d| d <= DIMENSION_CAP)
                .ok_or_else(|| {
                    Error::resource(format!(
                        "dimension {species}^{len} exceeds cap {DIMENSION_CAP}"
                    ))
                })?;
        }
        Ok(WordSpace { len, species })
    }

    pub fn dim(&self) -> usize {
        self.species.pow(self.len as u32)
    }

    /// Lexicographic index of a word.
    pub fn index(&self, word: &[u8]) -> usize {
        debug_assert_eq!(word.len(), self.len);
        word.iter().fold(0usize, |acc, &c| {
            debug_assert!(c >= 1 && c as usize <= self.species);
            acc * self.species + (c as usize - 1)
        })
    }

    /// Word at a lexicographic index.
    pub fn word(&self, mut index: usize) -> Vec<u8> {
        debug_assert!(index < self.dim());
        let mut out = vec![0u8; self.len];
        for slot in (0..self.len).rev() {
            out[slot] = (index % self.species) as u8 + 1;
            index /= self.species;
        }
        out
    }

    pub fn words(&self) -> impl Iterator<Item = Vec<u8>> + '_ {
        (0..self.dim()).map(|i| self.word(i))
    }
}

/// Compact display of a species word: digits for `N <= 9`, dot-separated
/// otherwise.
pub fn word_string(word: &[u8]) -> String {
    if word.iter().all(|&c| c <= 9) {
        word.iter().map(|c| char::from(b'0' + c)).collect()
    } else {
        word.iter()
            .map(|c| c.to_string())
            .collect::<Vec<_>>()
            .join(".")
    }
}

/// Parse a word written as digits (`"231"`) or dot-separated (`"2.3.1"`).
pub fn parse_word(s: &str) -> Result<Vec<u8>> {
    let word: Vec<u8> = if s.contains('.') {
        s.split('.')
            .map(|p| p.parse::<u8>().map_err(|_| Error::invalid(format!("bad species label {p:?}"))))
            .collect::<Result<_>>()?
    } else {
        s.chars()
            .map(|c| {
                c.to_digit(10)
                    .filter(|&d| d >= 1)
                    .map(|d| d as u8)
                    .ok_or_else(|| Error::invalid(format!("bad species digit {c:?}")))
            })
            .collect::<Result<_>>()?
    };
    if word.is_empty() || word.contains(&0) {
        return Err(Error::invalid(format!("empty or zero species in word {s:?}")));
    }
    Ok(word)
}

/// Multiset of species labels, as counts indexed by label.
pub fn species_counts(word: &[u8]) -> Vec<(u8, usize)> {
    let mut counts: Vec<(u8, usize)> = Vec::new();
    let mut sorted = word.to_vec();
    sorted.sort_unstable();
    for c in sorted {
        match counts.last_mut() {
            Some((label, k)) if *label == c => *k += 1,
            _ => counts.push((c, 1)),
        }
    }
    counts
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn lexicographic_round_trip() {
        let space = WordSpace::new(3, 3).unwrap();
        assert_eq!(space.dim(), 27);
        assert_eq!(space.index(&[1, 1, 1]), 0);
        assert_eq!(space.index(&[3, 3, 3]), 26);
        assert_eq!(space.index(&[2, 3, 1]), 9 + 2 * 3);
        for i in 0..space.dim() {
            assert_eq!(space.index(&space.word(i)), i);
        }
    }

    #[test]
    fn dimension_cap_enforced() {
        assert!(WordSpace::new(9, 3).is_err());
        assert!(WordSpace::new(12, 2).is_ok());
        assert!(WordSpace::new(13, 2).is_err());
    }

    #[test]
    fn word_parsing() {
        assert_eq!(parse_word("231").unwrap(), vec![2, 3, 1]);
        assert_eq!(parse_word("10.2").unwrap(), vec![10, 2]);
        assert!(parse_word("0").is_err());
        assert!(parse_word("").is_err());
        assert_eq!(word_string(&[2, 3, 1]), "231");
        assert_eq!(word_string(&[10, 2]), "10.2");
    }

    #[test]
    fn multiset_counts() {
        assert_eq!(species_counts(&[2, 1, 2]), vec![(1, 1), (2, 2)]);
        assert_eq!(species_counts(&[1, 2]), species_counts(&[2, 1]));
        assert_ne!(species_counts(&[1, 1]), species_counts(&[1, 2]));
    }
}
