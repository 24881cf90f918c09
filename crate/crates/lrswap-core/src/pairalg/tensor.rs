//! Column-sparse linear operators on the word basis.

use crate::pairalg::BasisMap;
use crate::scalar::Scalar;
use crate::word::WordSpace;

/// A linear operator stored column-wise as `(output word, coefficient)`
/// pairs. Partial permutations embed with coefficient 1; sums of them (the
/// inverse closed form, the swap-sum matrices) get genuine coefficients.
#[derive(Debug, Clone)]
pub struct TensorOperator<S: Scalar> {
    pub space: WordSpace,
    cols: Vec<Vec<(usize, S)>>,
}

impl<S: Scalar> TensorOperator<S> {
    pub fn zero(space: WordSpace) -> Self {
        TensorOperator {
            space,
            cols: vec![Vec::new(); space.dim()],
        }
    }

    pub fn identity(space: WordSpace) -> Self {
        TensorOperator {
            space,
            cols: (0..space.dim()).map(|i| vec![(i, S::one())]).collect(),
        }
    }

    pub fn from_basis_map(map: &BasisMap) -> Self {
        TensorOperator {
            space: map.space,
            cols: (0..map.space.dim())
                .map(|c| map.image(c).map(|out| (out, S::one())).into_iter().collect())
                .collect(),
        }
    }

    pub fn from_columns(space: WordSpace, cols: Vec<Vec<(usize, S)>>) -> Self {
        debug_assert_eq!(cols.len(), space.dim());
        let mut op = TensorOperator { space, cols };
        op.normalize();
        op
    }

    pub fn column(&self, col: usize) -> &[(usize, S)] {
        &self.cols[col]
    }

    fn normalize(&mut self) {
        for col in &mut self.cols {
            col.sort_by_key(|(out, _)| *out);
            let mut merged: Vec<(usize, S)> = Vec::with_capacity(col.len());
            for (out, coeff) in col.drain(..) {
                match merged.last_mut() {
                    Some((prev, acc)) if *prev == out => {
                        *acc = acc.clone() + coeff;
                    }
                    _ => merged.push((out, coeff)),
                }
            }
            merged.retain(|(_, c)| !c.is_zero());
            *col = merged;
        }
    }

    pub fn add(&self, other: &Self) -> Self {
        debug_assert_eq!(self.space, other.space);
        let cols = self
            .cols
            .iter()
            .zip(&other.cols)
            .map(|(a, b)| a.iter().chain(b).cloned().collect())
            .collect();
        Self::from_columns(self.space, cols)
    }

    pub fn sub(&self, other: &Self) -> Self {
        self.add(&other.scale(&(-S::one())))
    }

    pub fn scale(&self, factor: &S) -> Self {
        let cols = self
            .cols
            .iter()
            .map(|col| {
                col.iter()
                    .map(|(out, c)| (*out, c.clone() * factor.clone()))
                    .collect()
            })
            .collect();
        Self::from_columns(self.space, cols)
    }

    /// `self . rhs` (apply `rhs` first).
    pub fn compose(&self, rhs: &Self) -> Self {
        debug_assert_eq!(self.space, rhs.space);
        let cols = rhs
            .cols
            .iter()
            .map(|col| {
                let mut out: Vec<(usize, S)> = Vec::new();
                for (mid, w) in col {
                    for (fin, v) in &self.cols[*mid] {
                        out.push((*fin, w.clone() * v.clone()));
                    }
                }
                out
            })
            .collect();
        Self::from_columns(self.space, cols)
    }

    pub fn is_zero(&self) -> bool {
        self.cols.iter().all(Vec::is_empty)
    }

    /// First input word index on which the two operators differ.
    pub fn first_difference(&self, other: &Self) -> Option<usize> {
        self.cols.iter().zip(&other.cols).position(|(a, b)| a != b)
    }

    /// Dense row-major entries. Intended for small spaces.
    pub fn dense(&self) -> Vec<S> {
        let d = self.space.dim();
        assert!(d * d <= 1 << 22, "dense conversion of a {d}x{d} operator");
        let mut out = vec![S::zero(); d * d];
        for (col, entries) in self.cols.iter().enumerate() {
            for (row, coeff) in entries {
                out[row * d + col] = coeff.clone();
            }
        }
        out
    }

    pub fn from_dense(space: WordSpace, entries: &[S]) -> Self {
        let d = space.dim();
        debug_assert_eq!(entries.len(), d * d);
        let mut cols = vec![Vec::new(); d];
        for row in 0..d {
            for (col, cell) in cols.iter_mut().enumerate() {
                let v = &entries[row * d + col];
                if !v.is_zero() {
                    cell.push((row, v.clone()));
                }
            }
        }
        Self::from_columns(space, cols)
    }

    /// `y = A x` over dense vectors.
    pub fn apply(&self, x: &[S], y: &mut [S]) {
        debug_assert_eq!(x.len(), self.space.dim());
        debug_assert_eq!(y.len(), self.space.dim());
        for v in y.iter_mut() {
            *v = S::zero();
        }
        for (col, entries) in self.cols.iter().enumerate() {
            if x[col].is_zero() {
                continue;
            }
            for (row, coeff) in entries {
                y[*row] = y[*row].clone() + coeff.clone() * x[col].clone();
            }
        }
    }

    /// Largest entrywise magnitude of `self - other`.
    pub fn max_difference(&self, other: &Self) -> f64 {
        let diff = self.sub(other);
        diff.cols
            .iter()
            .flatten()
            .map(|(_, c)| c.magnitude())
            .fold(0.0, f64::max)
    }
}

impl<S: Scalar> PartialEq for TensorOperator<S> {
    fn eq(&self, other: &Self) -> bool {
        self.space == other.space && self.cols == other.cols
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pairalg::{build_pair_matrices, embed_b, embed_b_prime};
    use crate::rules::RuleType;
    use crate::scalar::rat;
    use num::BigRational;
    use proptest::prelude::*;

    fn arb_operator() -> impl Strategy<Value = TensorOperator<BigRational>> {
        // Random small operator with integer coefficients on a 2-species,
        // 2-particle space.
        let space = WordSpace::new(2, 2).unwrap();
        proptest::collection::vec(
            proptest::collection::vec((0usize..4, -3i64..4), 0..4),
            4,
        )
        .prop_map(move |cols| {
            let cols = cols
                .into_iter()
                .map(|col| {
                    col.into_iter()
                        .map(|(out, c)| (out, rat(c, 1)))
                        .collect::<Vec<_>>()
                })
                .collect();
            TensorOperator::from_columns(space, cols)
        })
    }

    proptest! {
        #[test]
        fn dense_round_trip_is_lossless(op in arb_operator()) {
            let back = TensorOperator::from_dense(op.space, &op.dense());
            prop_assert_eq!(back, op);
        }

        #[test]
        fn addition_commutes(a in arb_operator(), b in arb_operator()) {
            prop_assert_eq!(a.add(&b), b.add(&a));
        }
    }

    #[test]
    fn embeddings_commute_when_far_apart() {
        let space = WordSpace::new(4, 2).unwrap();
        let rule = RuleType::DropPush;
        let (b, bp) = build_pair_matrices(2, rule).unwrap();
        for (left, right) in [(&b, &b), (&b, &bp), (&bp, &bp)] {
            let a = BasisMap::embed(left, 1, space).unwrap();
            let c = BasisMap::embed(right, 3, space).unwrap();
            assert_eq!(a.compose(&c), c.compose(&a));
        }
    }

    #[test]
    fn products_of_embeddings_stay_partial_permutations() {
        // Composition in TensorOperator form never produces a coefficient
        // other than 1 when the factors are embedded B / B' matrices.
        let rule = RuleType::Tasep;
        let factors = [
            embed_b(1, 3, 3, rule).unwrap(),
            embed_b_prime(2, 3, 3, rule).unwrap(),
            embed_b(2, 3, 3, rule).unwrap(),
            embed_b_prime(1, 3, 3, rule).unwrap(),
        ];
        let mut acc = TensorOperator::<BigRational>::identity(factors[0].space);
        for f in &factors {
            acc = TensorOperator::from_basis_map(f).compose(&acc);
            for col in 0..acc.space.dim() {
                let entries = acc.column(col);
                assert!(entries.len() <= 1);
                if let Some((_, c)) = entries.first() {
                    assert_eq!(c, &rat(1, 1));
                }
            }
        }
    }

    #[test]
    fn apply_matches_dense_action() {
        let space = WordSpace::new(2, 2).unwrap();
        let op = TensorOperator::from_columns(
            space,
            vec![
                vec![(0, rat(2, 1)), (3, rat(-1, 2))],
                vec![(1, rat(1, 3))],
                vec![],
                vec![(0, rat(5, 1))],
            ],
        );
        let x = vec![rat(1, 1), rat(2, 1), rat(3, 1), rat(4, 1)];
        let mut y = vec![rat(0, 1); 4];
        op.apply(&x, &mut y);
        assert_eq!(y[0], rat(2, 1) + rat(20, 1));
        assert_eq!(y[1], rat(2, 3));
        assert_eq!(y[2], rat(0, 1));
        assert_eq!(y[3], rat(-1, 2));
    }
}
