//! Two-particle interaction matrices and their n-particle tensor calculus.
//!
//! `B` encodes hidden-state resolutions where a particle jumps in from the
//! left neighbouring site; `B'` encodes same-shape label exchanges. Both are
//! `N^2 x N^2` matrices with at most one 1 per column, so every operator built
//! from their tensor embeddings is a partial permutation of the word basis
//! and can be stored as a map from input words to output words.

mod identities;
mod tensor;

pub use identities::{verify_identities, IdentityCheck, IdentityReport};
pub use tensor::TensorOperator;

use crate::error::{Error, Result};
use crate::rules::{pair_b_image, pair_b_prime_image, RuleType};
use crate::word::WordSpace;

/// An `N^2 x N^2` 0/1 matrix with at most one nonzero entry per column,
/// stored as a partial map on length-2 words.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PairMatrix {
    pub species: usize,
    /// `cols[index(a,b)]` is the index of the image word, if any.
    cols: Vec<Option<usize>>,
}

impl PairMatrix {
    fn build(species: usize, image: impl Fn(u8, u8) -> Option<(u8, u8)>) -> Self {
        let n = species;
        let mut cols = vec![None; n * n];
        for a in 1..=n as u8 {
            for b in 1..=n as u8 {
                let col = (a as usize - 1) * n + (b as usize - 1);
                cols[col] = image(a, b).map(|(p, q)| (p as usize - 1) * n + (q as usize - 1));
            }
        }
        PairMatrix { species, cols }
    }

    /// Image of the column labelled by the word `(a, b)`.
    pub fn image(&self, a: u8, b: u8) -> Option<(u8, u8)> {
        let n = self.species;
        let col = (a as usize - 1) * n + (b as usize - 1);
        self.cols[col].map(|out| ((out / n) as u8 + 1, (out % n) as u8 + 1))
    }

    /// Dense 0/1 rows, ordered lexicographically.
    pub fn dense(&self) -> Vec<Vec<u8>> {
        let d = self.species * self.species;
        let mut rows = vec![vec![0u8; d]; d];
        for (col, out) in self.cols.iter().enumerate() {
            if let Some(row) = out {
                rows[*row][col] = 1;
            }
        }
        rows
    }

    /// Number of nonzero entries in each column of `self + other`.
    pub fn column_sums_with(&self, other: &PairMatrix) -> Vec<usize> {
        self.cols
            .iter()
            .zip(&other.cols)
            .map(|(a, b)| usize::from(a.is_some()) + usize::from(b.is_some()))
            .collect()
    }
}

/// Construct the pair `(B, B')` for a rule.
pub fn build_pair_matrices(species: usize, rule: RuleType) -> Result<(PairMatrix, PairMatrix)> {
    if species == 0 {
        return Err(Error::invalid("species count must be positive"));
    }
    let b = PairMatrix::build(species, |a, c| pair_b_image(rule, a, c));
    let bp = PairMatrix::build(species, |a, c| pair_b_prime_image(rule, a, c));
    Ok((b, bp))
}

/// A partial permutation of the length-`n` word basis with all coefficients 1.
///
/// Products of embedded `B_i`, `B'_i` stay in this class; composition is
/// composition of partial functions.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BasisMap {
    pub space: WordSpace,
    cols: Vec<Option<usize>>,
}

impl BasisMap {
    pub fn identity(space: WordSpace) -> Self {
        BasisMap {
            space,
            cols: (0..space.dim()).map(Some).collect(),
        }
    }

    pub fn zero(space: WordSpace) -> Self {
        BasisMap {
            space,
            cols: vec![None; space.dim()],
        }
    }

    /// `I^(i-1) (x) m (x) I^(n-i-1)`, acting on word slots `i`, `i+1`
    /// (1-based, `1 <= i <= n-1`).
    pub fn embed(m: &PairMatrix, site: usize, space: WordSpace) -> Result<Self> {
        if site == 0 || site >= space.len {
            return Err(Error::invalid(format!(
                "embedding site {site} out of range 1..={}",
                space.len - 1
            )));
        }
        if m.species != space.species {
            return Err(Error::invalid("species count mismatch"));
        }
        let mut cols = vec![None; space.dim()];
        for (idx, col) in cols.iter_mut().enumerate() {
            let mut word = space.word(idx);
            if let Some((p, q)) = m.image(word[site - 1], word[site]) {
                word[site - 1] = p;
                word[site] = q;
                *col = Some(space.index(&word));
            }
        }
        Ok(BasisMap { space, cols })
    }

    pub fn image(&self, col: usize) -> Option<usize> {
        self.cols[col]
    }

    /// `self . rhs` (apply `rhs` first).
    pub fn compose(&self, rhs: &BasisMap) -> BasisMap {
        debug_assert_eq!(self.space, rhs.space);
        BasisMap {
            space: self.space,
            cols: rhs.cols.iter().map(|c| c.and_then(|m| self.cols[m])).collect(),
        }
    }

    /// Product of factors written in the usual left-to-right matrix order
    /// (the rightmost factor acts first).
    pub fn product(factors: &[&BasisMap], space: WordSpace) -> BasisMap {
        match factors.split_first() {
            None => BasisMap::identity(space),
            Some((first, rest)) => rest.iter().fold((*first).clone(), |acc, f| acc.compose(f)),
        }
    }

    pub fn is_zero(&self) -> bool {
        self.cols.iter().all(Option::is_none)
    }

    /// First column where the two maps differ.
    pub fn first_difference(&self, other: &BasisMap) -> Option<usize> {
        self.cols
            .iter()
            .zip(&other.cols)
            .position(|(a, b)| a != b)
    }
}

/// The embedded jump-in matrix `B_site` (1-based site).
pub fn embed_b(site: usize, n: usize, species: usize, rule: RuleType) -> Result<BasisMap> {
    let space = WordSpace::new(n, species)?;
    let (b, _) = build_pair_matrices(species, rule)?;
    BasisMap::embed(&b, site, space)
}

/// The embedded exchange matrix `B'_site` (1-based site).
pub fn embed_b_prime(site: usize, n: usize, species: usize, rule: RuleType) -> Result<BasisMap> {
    let space = WordSpace::new(n, species)?;
    let (_, bp) = build_pair_matrices(species, rule)?;
    BasisMap::embed(&bp, site, space)
}

/// The two-particle swap matrix
/// `M_ij = B_(j-1) ... B_(i+1) B'_i B'_(i+1) ... B'_(j-1)` describing the
/// interchange of the `i`th and `j`th leftmost particles (1-based, `i < j`).
pub fn swap_matrix(i: usize, j: usize, n: usize, species: usize, rule: RuleType) -> Result<BasisMap> {
    if i == 0 || i >= j || j > n {
        return Err(Error::invalid(format!(
            "swap indices must satisfy 1 <= i < j <= n, got i={i}, j={j}, n={n}"
        )));
    }
    let space = WordSpace::new(n, species)?;
    let (b, bp) = build_pair_matrices(species, rule)?;
    let mut factors: Vec<BasisMap> = Vec::new();
    for site in (i + 1..j).rev() {
        factors.push(BasisMap::embed(&b, site, space)?);
    }
    for site in i..j {
        factors.push(BasisMap::embed(&bp, site, space)?);
    }
    let refs: Vec<&BasisMap> = factors.iter().collect();
    Ok(BasisMap::product(&refs, space))
}

/// The operator family defined by `frak_A_0 = I`,
/// `frak_A_k = I + B_(k+1) frak_A_(k-1) B'_k`, the closed form of
/// `(I - B_(k+1) frak_A_(k-1) B'_k)^(-1)`.
pub fn frak_a<S: crate::scalar::Scalar>(
    k: usize,
    n: usize,
    species: usize,
    rule: RuleType,
) -> Result<TensorOperator<S>> {
    if n < 2 || k > n - 2 {
        return Err(Error::invalid(format!(
            "recursion depth k={k} out of range 0..={}",
            n.saturating_sub(2)
        )));
    }
    let space = WordSpace::new(n, species)?;
    let (b, bp) = build_pair_matrices(species, rule)?;
    let mut acc = TensorOperator::<S>::identity(space);
    for level in 1..=k {
        let b_next = TensorOperator::from_basis_map(&BasisMap::embed(&b, level + 1, space)?);
        let bp_here = TensorOperator::from_basis_map(&BasisMap::embed(&bp, level, space)?);
        acc = TensorOperator::identity(space).add(&b_next.compose(&acc).compose(&bp_here));
    }
    Ok(acc)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::rat;
    use num::BigRational;

    fn dense_flat(m: &PairMatrix) -> Vec<u8> {
        m.dense().into_iter().flatten().collect()
    }

    #[test]
    fn drop_push_pair_matrices_two_species() {
        let (b, bp) = build_pair_matrices(2, RuleType::DropPush).unwrap();
        #[rustfmt::skip]
        let expected_b = vec![
            1, 0, 0, 0,
            0, 0, 0, 0,
            0, 1, 0, 0,
            0, 0, 0, 1,
        ];
        #[rustfmt::skip]
        let expected_bp = vec![
            0, 0, 0, 0,
            0, 0, 1, 0,
            0, 0, 0, 0,
            0, 0, 0, 0,
        ];
        assert_eq!(dense_flat(&b), expected_b);
        assert_eq!(dense_flat(&bp), expected_bp);
    }

    #[test]
    fn tasep_pair_matrices_two_species() {
        let (b, bp) = build_pair_matrices(2, RuleType::Tasep).unwrap();
        #[rustfmt::skip]
        let expected_b = vec![
            0, 0, 0, 0,
            0, 0, 0, 0,
            0, 1, 0, 0,
            0, 0, 0, 0,
        ];
        #[rustfmt::skip]
        let expected_bp = vec![
            1, 0, 0, 0,
            0, 0, 1, 0,
            0, 0, 0, 0,
            0, 0, 0, 1,
        ];
        assert_eq!(dense_flat(&b), expected_b);
        assert_eq!(dense_flat(&bp), expected_bp);
    }

    #[test]
    fn non_integrable_pair_matrices_two_species() {
        let (b, bp) = build_pair_matrices(2, RuleType::NonIntegrableAlt).unwrap();
        #[rustfmt::skip]
        let expected_b = vec![
            0, 0, 0, 0,
            0, 0, 0, 0,
            0, 0, 1, 0,
            0, 0, 0, 0,
        ];
        #[rustfmt::skip]
        let expected_bp = vec![
            1, 0, 0, 0,
            0, 1, 0, 0,
            0, 0, 0, 0,
            0, 0, 0, 1,
        ];
        assert_eq!(dense_flat(&b), expected_b);
        assert_eq!(dense_flat(&bp), expected_bp);
    }

    #[test]
    fn single_species_matrices() {
        let (b, bp) = build_pair_matrices(1, RuleType::DropPush).unwrap();
        assert_eq!(dense_flat(&b), vec![1]);
        assert_eq!(dense_flat(&bp), vec![0]);
        let (b, bp) = build_pair_matrices(1, RuleType::Tasep).unwrap();
        assert_eq!(dense_flat(&b), vec![0]);
        assert_eq!(dense_flat(&bp), vec![1]);
    }

    #[test]
    fn column_sums_are_one_for_all_rules() {
        for rule in [RuleType::DropPush, RuleType::Tasep] {
            for species in 1..=4 {
                let (b, bp) = build_pair_matrices(species, rule).unwrap();
                assert!(b.column_sums_with(&bp).iter().all(|&s| s == 1), "{rule} N={species}");
            }
        }
    }

    #[test]
    fn zero_species_rejected() {
        assert!(build_pair_matrices(0, RuleType::DropPush).is_err());
    }

    #[test]
    fn embedding_at_first_site_of_two_is_the_pair_matrix() {
        let space = WordSpace::new(2, 3).unwrap();
        let (b, _) = build_pair_matrices(3, RuleType::DropPush).unwrap();
        let embedded = BasisMap::embed(&b, 1, space).unwrap();
        for col in 0..space.dim() {
            let w = space.word(col);
            let expected = b.image(w[0], w[1]).map(|(p, q)| space.index(&[p, q]));
            assert_eq!(embedded.image(col), expected);
        }
    }

    #[test]
    fn embedding_acts_only_on_its_two_slots() {
        // Entry (pqr, uvw) of B (x) I is nonzero iff r = w and B maps uv to pq.
        let space = WordSpace::new(3, 3).unwrap();
        let (b, _) = build_pair_matrices(3, RuleType::DropPush).unwrap();
        let b1 = BasisMap::embed(&b, 1, space).unwrap();
        for col in 0..space.dim() {
            let w = space.word(col);
            match b1.image(col) {
                Some(out) => {
                    let o = space.word(out);
                    assert_eq!(o[2], w[2]);
                    assert_eq!(b.image(w[0], w[1]), Some((o[0], o[1])));
                }
                None => assert_eq!(b.image(w[0], w[1]), None),
            }
        }
    }

    #[test]
    fn embedding_at_second_site_is_tensor_with_identity_on_left() {
        let space = WordSpace::new(3, 2).unwrap();
        let (_, bp) = build_pair_matrices(2, RuleType::DropPush).unwrap();
        let b2 = BasisMap::embed(&bp, 2, space).unwrap();
        for col in 0..space.dim() {
            let w = space.word(col);
            let expected = bp.image(w[1], w[2]).map(|(p, q)| space.index(&[w[0], p, q]));
            assert_eq!(b2.image(col), expected);
        }
    }

    #[test]
    fn embedding_site_out_of_range() {
        let space = WordSpace::new(3, 2).unwrap();
        let (b, _) = build_pair_matrices(2, RuleType::DropPush).unwrap();
        assert!(BasisMap::embed(&b, 0, space).is_err());
        assert!(BasisMap::embed(&b, 3, space).is_err());
    }

    #[test]
    fn adjacent_swap_matrix_is_b_prime() {
        let m12 = swap_matrix(1, 2, 2, 2, RuleType::DropPush).unwrap();
        let bp1 = embed_b_prime(1, 2, 2, RuleType::DropPush).unwrap();
        assert_eq!(m12, bp1);
    }

    #[test]
    fn long_swap_matrix_and_braid_form() {
        // M_13 = B_2 B'_1 B'_2 and also B'_1 B'_2 B_1.
        for rule in [RuleType::DropPush, RuleType::Tasep] {
            let space = WordSpace::new(3, 3).unwrap();
            let m13 = swap_matrix(1, 3, 3, 3, rule).unwrap();
            let b2 = embed_b(2, 3, 3, rule).unwrap();
            let bp1 = embed_b_prime(1, 3, 3, rule).unwrap();
            let bp2 = embed_b_prime(2, 3, 3, rule).unwrap();
            let direct = BasisMap::product(&[&b2, &bp1, &bp2], space);
            let braided = BasisMap::product(&[&bp1, &bp2, &embed_b(1, 3, 3, rule).unwrap()], space);
            assert_eq!(m13, direct);
            assert_eq!(m13, braided);
        }
    }

    #[test]
    fn swap_matrix_shift_identity() {
        // B_j M_ij B'_j = M_i(j+1) for n = 3.
        let space = WordSpace::new(3, 3).unwrap();
        let rule = RuleType::DropPush;
        let m12 = swap_matrix(1, 2, 3, 3, rule).unwrap();
        let m13 = swap_matrix(1, 3, 3, 3, rule).unwrap();
        let b2 = embed_b(2, 3, 3, rule).unwrap();
        let bp2 = embed_b_prime(2, 3, 3, rule).unwrap();
        assert_eq!(BasisMap::product(&[&b2, &m12, &bp2], space), m13);
    }

    #[test]
    fn swap_matrix_rejects_bad_indices() {
        assert!(swap_matrix(2, 2, 3, 2, RuleType::DropPush).is_err());
        assert!(swap_matrix(0, 1, 3, 2, RuleType::DropPush).is_err());
        assert!(swap_matrix(1, 4, 3, 2, RuleType::DropPush).is_err());
    }

    #[test]
    fn frak_a_base_case_is_identity() {
        let op = frak_a::<BigRational>(0, 3, 3, RuleType::DropPush).unwrap();
        let space = WordSpace::new(3, 3).unwrap();
        assert_eq!(op, TensorOperator::identity(space));
    }

    #[test]
    fn frak_a_first_level_expansion() {
        // frak_A_1 = I + B_2 B'_1.
        let space = WordSpace::new(3, 3).unwrap();
        let rule = RuleType::DropPush;
        let op = frak_a::<BigRational>(1, 3, 3, rule).unwrap();
        let b2 = TensorOperator::from_basis_map(&embed_b(2, 3, 3, rule).unwrap());
        let bp1 = TensorOperator::from_basis_map(&embed_b_prime(1, 3, 3, rule).unwrap());
        let expected = TensorOperator::identity(space).add(&b2.compose(&bp1));
        assert_eq!(op, expected);
        assert_eq!(op.dense()[0], rat(1, 1));
    }

    #[test]
    fn frak_a_depth_out_of_range() {
        assert!(frak_a::<BigRational>(2, 3, 3, RuleType::DropPush).is_err());
    }
}
