//! Two- and multi-particle scattering matrices.
//!
//! The two-particle scattering matrix relating Bethe amplitudes across a
//! transposition of spectral variables is
//!
//! ```text
//! R_ba = -(I(x)I - B/xi_b - B' xi_a)^(-1) (I(x)I - B/xi_a - B' xi_b).
//! ```
//!
//! Both factors preserve the span of each unordered species pair, so the
//! inverse is computed blockwise (scalars on equal-species words, 2x2 on
//! mixed pairs); a generic dense Gauss-Jordan path is kept as an internal
//! oracle.

use num::BigRational;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::pairalg::{build_pair_matrices, TensorOperator};
use crate::rules::RuleType;
use crate::scalar::Scalar;
use crate::word::{word_string, WordSpace};

/// Entrywise tolerance for Yang-Baxter and boundary-sum checks over
/// double-precision complex scalars.
pub const COMPLEX_CHECK_TOL: f64 = 1e-12;

/// The tuple of Bethe spectral variables.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralPoint<S: Scalar> {
    values: Vec<S>,
}

impl<S: Scalar> SpectralPoint<S> {
    pub fn new(values: Vec<S>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::invalid("spectral point needs at least one value"));
        }
        if values.iter().any(S::is_zero) {
            return Err(Error::invalid("spectral values must be nonzero"));
        }
        Ok(SpectralPoint { values })
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn value(&self, index: usize) -> &S {
        &self.values[index]
    }

    pub fn values(&self) -> &[S] {
        &self.values
    }

    /// Scattering-matrix regularity: pairwise distinct values.
    pub fn require_distinct(&self) -> Result<()> {
        for i in 0..self.values.len() {
            for j in i + 1..self.values.len() {
                if self.values[i] == self.values[j] {
                    return Err(Error::invalid(format!(
                        "spectral values {} and {} coincide",
                        i + 1,
                        j + 1
                    )));
                }
            }
        }
        Ok(())
    }
}

fn small_inverse<S: Scalar>(f: &[Vec<S>]) -> Option<Vec<Vec<S>>> {
    match f.len() {
        1 => {
            if f[0][0].is_zero() {
                None
            } else {
                Some(vec![vec![f[0][0].recip()]])
            }
        }
        2 => {
            let det = f[0][0].clone() * f[1][1].clone() - f[0][1].clone() * f[1][0].clone();
            if det.is_zero() {
                return None;
            }
            let inv_det = det.recip();
            Some(vec![
                vec![f[1][1].clone() * inv_det.clone(), -(f[0][1].clone() * inv_det.clone())],
                vec![-(f[1][0].clone() * inv_det.clone()), f[0][0].clone() * inv_det],
            ])
        }
        _ => unreachable!("species blocks are 1x1 or 2x2"),
    }
}

fn mat_mul<S: Scalar>(a: &[Vec<S>], b: &[Vec<S>]) -> Vec<Vec<S>> {
    let n = a.len();
    let mut out = vec![vec![S::zero(); n]; n];
    for r in 0..n {
        for c in 0..n {
            let mut acc = S::zero();
            for (k, row) in b.iter().enumerate() {
                acc = acc + a[r][k].clone() * row[c].clone();
            }
            out[r][c] = acc;
        }
    }
    out
}

/// Restrict a pair matrix to the block spanned by `words`.
fn pair_block(
    m: &crate::pairalg::PairMatrix,
    words: &[(u8, u8)],
) -> Vec<Vec<u8>> {
    let dim = words.len();
    let mut out = vec![vec![0u8; dim]; dim];
    for (col, &(a, b)) in words.iter().enumerate() {
        if let Some(img) = m.image(a, b) {
            if let Some(row) = words.iter().position(|w| *w == img) {
                out[row][col] = 1;
            }
        }
    }
    out
}

/// The two-particle scattering matrix `R_ba` at `(xi_a, xi_b)`.
///
/// Blockwise construction; fails with the offending species block when a
/// factor is singular (`xi_a = xi_b` on mixed blocks, a rule-dependent
/// condition on equal-species blocks).
pub fn r_matrix<S: Scalar>(
    xi_alpha: &S,
    xi_beta: &S,
    species: usize,
    rule: RuleType,
) -> Result<TensorOperator<S>> {
    if xi_alpha.is_zero() || xi_beta.is_zero() {
        return Err(Error::invalid("spectral values must be nonzero"));
    }
    let space = WordSpace::new(2, species)?;
    let (b, bp) = build_pair_matrices(species, rule)?;
    let mut cols: Vec<Vec<(usize, S)>> = vec![Vec::new(); space.dim()];

    let mut fill_block = |words: &[(u8, u8)]| -> Result<()> {
        let dim = words.len();
        let b_blk = pair_block(&b, words);
        let bp_blk = pair_block(&bp, words);
        let inv_beta = xi_beta.recip();
        let inv_alpha = xi_alpha.recip();
        let build = |jump_scale: &S, swap_scale: &S| -> Vec<Vec<S>> {
            let mut m = vec![vec![S::zero(); dim]; dim];
            for r in 0..dim {
                for c in 0..dim {
                    let mut v = if r == c { S::one() } else { S::zero() };
                    if b_blk[r][c] == 1 {
                        v = v - jump_scale.clone();
                    }
                    if bp_blk[r][c] == 1 {
                        v = v - swap_scale.clone();
                    }
                    m[r][c] = v;
                }
            }
            m
        };
        let f = build(&inv_beta, xi_alpha);
        let g = build(&inv_alpha, xi_beta);
        let f_inv = small_inverse(&f).ok_or_else(|| Error::SingularBlock {
            block: words
                .iter()
                .map(|&(p, q)| word_string(&[p, q]))
                .collect::<Vec<_>>()
                .join(","),
            detail: format!("factor I - B/xi_b - B' xi_a singular at xi_a={xi_alpha}, xi_b={xi_beta}"),
        })?;
        let r = mat_mul(&f_inv, &g);
        for (c, &(wa, wb)) in words.iter().enumerate() {
            let col_index = space.index(&[wa, wb]);
            for (row, &(ra, rb)) in words.iter().enumerate() {
                if !r[row][c].is_zero() {
                    cols[col_index].push((space.index(&[ra, rb]), -r[row][c].clone()));
                }
            }
        }
        Ok(())
    };

    for a in 1..=species as u8 {
        fill_block(&[(a, a)])?;
        for bb in a + 1..=species as u8 {
            fill_block(&[(a, bb), (bb, a)])?;
        }
    }
    Ok(TensorOperator::from_columns(space, cols))
}

/// Dense Gauss-Jordan construction of `R_ba`; internal oracle for the
/// blockwise path.
pub fn r_matrix_dense<S: Scalar>(
    xi_alpha: &S,
    xi_beta: &S,
    species: usize,
    rule: RuleType,
) -> Result<TensorOperator<S>> {
    let space = WordSpace::new(2, species)?;
    let d = space.dim();
    let (b, bp) = build_pair_matrices(species, rule)?;
    let dense_of = |jump_scale: &S, swap_scale: &S| -> Vec<S> {
        let mut m = vec![S::zero(); d * d];
        for i in 0..d {
            m[i * d + i] = S::one();
        }
        for col in 0..d {
            let w = space.word(col);
            if let Some((p, q)) = b.image(w[0], w[1]) {
                let row = space.index(&[p, q]);
                m[row * d + col] = m[row * d + col].clone() - jump_scale.clone();
            }
            if let Some((p, q)) = bp.image(w[0], w[1]) {
                let row = space.index(&[p, q]);
                m[row * d + col] = m[row * d + col].clone() - swap_scale.clone();
            }
        }
        m
    };
    let f = dense_of(&xi_beta.recip(), xi_alpha);
    let g = dense_of(&xi_alpha.recip(), xi_beta);

    // Gauss-Jordan inversion of f.
    let mut aug = vec![S::zero(); d * 2 * d];
    for r in 0..d {
        for c in 0..d {
            aug[r * 2 * d + c] = f[r * d + c].clone();
        }
        aug[r * 2 * d + d + r] = S::one();
    }
    for col in 0..d {
        let pivot_row = (col..d)
            .find(|&r| !aug[r * 2 * d + col].is_zero())
            .ok_or_else(|| Error::SingularBlock {
                block: "dense".into(),
                detail: "singular factor in dense inversion".into(),
            })?;
        if pivot_row != col {
            for c in 0..2 * d {
                aug.swap(col * 2 * d + c, pivot_row * 2 * d + c);
            }
        }
        let pivot = aug[col * 2 * d + col].clone().recip();
        for c in 0..2 * d {
            aug[col * 2 * d + c] = aug[col * 2 * d + c].clone() * pivot.clone();
        }
        for r in 0..d {
            if r == col || aug[r * 2 * d + col].is_zero() {
                continue;
            }
            let factor = aug[r * 2 * d + col].clone();
            for c in 0..2 * d {
                let delta = factor.clone() * aug[col * 2 * d + c].clone();
                aug[r * 2 * d + c] = aug[r * 2 * d + c].clone() - delta;
            }
        }
    }
    let mut out = vec![S::zero(); d * d];
    for r in 0..d {
        for c in 0..d {
            let mut acc = S::zero();
            for k in 0..d {
                acc = acc + aug[r * 2 * d + d + k].clone() * g[k * d + c].clone();
            }
            out[r * d + c] = -acc;
        }
    }
    Ok(TensorOperator::from_dense(space, &out))
}

/// Embed an operator on the pair space at 1-based site `i` of an `n`-site
/// space: `I^(i-1) (x) R (x) I^(n-i-1)`.
pub fn embed_pair_operator<S: Scalar>(
    r: &TensorOperator<S>,
    site: usize,
    n: usize,
) -> Result<TensorOperator<S>> {
    if r.space.len != 2 {
        return Err(Error::invalid("embed_pair_operator expects a two-site operator"));
    }
    if site == 0 || site >= n {
        return Err(Error::invalid(format!(
            "embedding site {site} out of range 1..={}",
            n - 1
        )));
    }
    let species = r.space.species;
    let space = WordSpace::new(n, species)?;
    let pair_space = r.space;
    let mut cols: Vec<Vec<(usize, S)>> = vec![Vec::new(); space.dim()];
    for (idx, col) in cols.iter_mut().enumerate() {
        let mut word = space.word(idx);
        let pair_col = pair_space.index(&[word[site - 1], word[site]]);
        for (out_pair, coeff) in r.column(pair_col) {
            let out_word = pair_space.word(*out_pair);
            word[site - 1] = out_word[0];
            word[site] = out_word[1];
            col.push((space.index(&word), coeff.clone()));
        }
    }
    Ok(TensorOperator::from_columns(space, cols))
}

/// `T_(i,ba)`: the two-particle scattering matrix acting on sites `i`, `i+1`
/// of the `n`-particle system, with spectral labels `beta`, `alpha`
/// (0-based indices into `xi`).
pub fn t_matrix<S: Scalar>(
    site: usize,
    beta: usize,
    alpha: usize,
    xi: &SpectralPoint<S>,
    n: usize,
    species: usize,
    rule: RuleType,
) -> Result<TensorOperator<S>> {
    if beta >= xi.len() || alpha >= xi.len() || beta == alpha {
        return Err(Error::invalid("bad spectral labels"));
    }
    let r = r_matrix(xi.value(alpha), xi.value(beta), species, rule)?;
    embed_pair_operator(&r, site, n)
}

/// A permutation in one-line notation, with reduced words computed by
/// adjacent-transposition sorting.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Permutation {
    /// `images[i]` is the 0-based image of position `i`.
    images: Vec<usize>,
}

impl Permutation {
    pub fn identity(n: usize) -> Self {
        Permutation {
            images: (0..n).collect(),
        }
    }

    /// Build from 1-based one-line notation, e.g. `[3, 2, 1]`.
    pub fn from_one_line(values: &[usize]) -> Result<Self> {
        let n = values.len();
        let mut seen = vec![false; n];
        for &v in values {
            if v == 0 || v > n || seen[v - 1] {
                return Err(Error::invalid(format!("not a permutation: {values:?}")));
            }
            seen[v - 1] = true;
        }
        Ok(Permutation {
            images: values.iter().map(|&v| v - 1).collect(),
        })
    }

    pub fn n(&self) -> usize {
        self.images.len()
    }

    /// 0-based image of 0-based position.
    pub fn image(&self, pos: usize) -> usize {
        self.images[pos]
    }

    pub fn is_identity(&self) -> bool {
        self.images.iter().enumerate().all(|(i, &v)| i == v)
    }

    /// Swap positions `p`, `p+1` (0-based).
    pub fn apply_adjacent(&self, p: usize) -> Self {
        let mut images = self.images.clone();
        images.swap(p, p + 1);
        Permutation { images }
    }

    /// Inversions as 0-based value pairs `(larger-first, smaller-later)`.
    pub fn inversions(&self) -> Vec<(usize, usize)> {
        let mut out = Vec::new();
        for i in 0..self.images.len() {
            for j in i + 1..self.images.len() {
                if self.images[i] > self.images[j] {
                    out.push((self.images[i], self.images[j]));
                }
            }
        }
        out
    }

    pub fn inversion_count(&self) -> usize {
        self.inversions().len()
    }

    /// A reduced word as 0-based adjacent positions in application order:
    /// applying the swaps to the identity sequence yields this permutation.
    /// Produced by left-to-right bubble passes, so its length equals the
    /// inversion count.
    pub fn reduced_word(&self) -> Vec<usize> {
        self.reduced_word_by(|w| (0..w.len() - 1).find(|&p| w[p] > w[p + 1]))
    }

    /// A second reduced word, scanning descents right-to-left; used to check
    /// that scattering products do not depend on the decomposition.
    pub fn reduced_word_alt(&self) -> Vec<usize> {
        self.reduced_word_by(|w| (0..w.len() - 1).rev().find(|&p| w[p] > w[p + 1]))
    }

    fn reduced_word_by(&self, pick: impl Fn(&[usize]) -> Option<usize>) -> Vec<usize> {
        if self.images.len() < 2 {
            return Vec::new();
        }
        let mut w = self.images.clone();
        let mut swaps = Vec::new();
        while let Some(p) = pick(&w) {
            w.swap(p, p + 1);
            swaps.push(p);
        }
        swaps.reverse();
        swaps
    }

    /// All permutations of `{1..n}` in lexicographic one-line order.
    pub fn all(n: usize) -> Vec<Permutation> {
        let mut out = Vec::new();
        let mut current: Vec<usize> = Vec::new();
        let mut used = vec![false; n];
        fn rec(
            n: usize,
            current: &mut Vec<usize>,
            used: &mut Vec<bool>,
            out: &mut Vec<Permutation>,
        ) {
            if current.len() == n {
                out.push(Permutation {
                    images: current.clone(),
                });
                return;
            }
            for v in 0..n {
                if !used[v] {
                    used[v] = true;
                    current.push(v);
                    rec(n, current, used, out);
                    current.pop();
                    used[v] = false;
                }
            }
        }
        rec(n, &mut current, &mut used, &mut out);
        out
    }

    pub fn one_line(&self) -> Vec<usize> {
        self.images.iter().map(|&v| v + 1).collect()
    }
}

/// Multi-particle scattering matrix `A_sigma` as the ordered product of
/// `T_(i,ba)` factors along a reduced word of `sigma`.
pub fn a_sigma<S: Scalar>(
    sigma: &Permutation,
    xi: &SpectralPoint<S>,
    species: usize,
    rule: RuleType,
) -> Result<TensorOperator<S>> {
    a_sigma_from_word(sigma, &sigma.reduced_word(), xi, species, rule)
}

/// `A_sigma` along an explicit adjacent-transposition word (must produce
/// `sigma` from the identity).
pub fn a_sigma_from_word<S: Scalar>(
    sigma: &Permutation,
    word: &[usize],
    xi: &SpectralPoint<S>,
    species: usize,
    rule: RuleType,
) -> Result<TensorOperator<S>> {
    let n = sigma.n();
    if xi.len() != n {
        return Err(Error::invalid("spectral point arity mismatch"));
    }
    xi.require_distinct()?;
    let space = WordSpace::new(n, species)?;
    let mut seq: Vec<usize> = (0..n).collect();
    let mut op = TensorOperator::<S>::identity(space);
    for &p in word {
        if p + 1 >= n {
            return Err(Error::invalid(format!("transposition position {p} out of range")));
        }
        let alpha = seq[p];
        let beta = seq[p + 1];
        let t = t_matrix(p + 1, beta, alpha, xi, n, species, rule)?;
        op = t.compose(&op);
        seq.swap(p, p + 1);
    }
    if seq != sigma.images {
        return Err(Error::invalid(
            "transposition word does not produce the permutation",
        ));
    }
    Ok(op)
}

/// Outcome of an exact-or-tolerance operator comparison.
#[derive(Debug, Clone, Copy)]
pub struct CheckOutcome {
    pub pass: bool,
    pub max_discrepancy: f64,
}

fn compare_ops<S: Scalar>(lhs: &TensorOperator<S>, rhs: &TensorOperator<S>) -> CheckOutcome {
    if S::EXACT {
        CheckOutcome {
            pass: lhs == rhs,
            max_discrepancy: if lhs == rhs { 0.0 } else { lhs.max_difference(rhs) },
        }
    } else {
        let diff = lhs.max_difference(rhs);
        CheckOutcome {
            pass: diff <= COMPLEX_CHECK_TOL,
            max_discrepancy: diff,
        }
    }
}

/// Yang-Baxter equation on the `N^3`-dimensional space:
/// `(R_cb (x) I)(I (x) R_ca)(R_ba (x) I) = (I (x) R_ba)(R_ca (x) I)(I (x) R_cb)`.
pub fn verify_ybe<S: Scalar>(
    xi_alpha: &S,
    xi_beta: &S,
    xi_gamma: &S,
    species: usize,
    rule: RuleType,
) -> Result<CheckOutcome> {
    let r_ba = r_matrix(xi_alpha, xi_beta, species, rule)?;
    let r_ca = r_matrix(xi_alpha, xi_gamma, species, rule)?;
    let r_cb = r_matrix(xi_beta, xi_gamma, species, rule)?;
    let left = |r: &TensorOperator<S>| embed_pair_operator(r, 1, 3);
    let right = |r: &TensorOperator<S>| embed_pair_operator(r, 2, 3);
    let lhs = left(&r_cb)?.compose(&right(&r_ca)?).compose(&left(&r_ba)?);
    let rhs = right(&r_ba)?.compose(&left(&r_ca)?).compose(&right(&r_cb)?);
    Ok(compare_ops(&lhs, &rhs))
}

/// Boundary-condition sum at 1-based site `i`:
/// `sum_sigma (I - B_i/xi_sigma(i) - B'_i xi_sigma(i+1)) A_sigma = 0`.
pub fn verify_bc_sum<S: Scalar>(
    site: usize,
    xi: &SpectralPoint<S>,
    species: usize,
    rule: RuleType,
) -> Result<CheckOutcome> {
    let n = xi.len();
    if site == 0 || site >= n {
        return Err(Error::invalid(format!(
            "boundary site {site} out of range 1..={}",
            n - 1
        )));
    }
    let space = WordSpace::new(n, species)?;
    let (b, bp) = build_pair_matrices(species, rule)?;
    let b_i = TensorOperator::<S>::from_basis_map(&crate::pairalg::BasisMap::embed(
        &b, site, space,
    )?);
    let bp_i = TensorOperator::<S>::from_basis_map(&crate::pairalg::BasisMap::embed(
        &bp, site, space,
    )?);
    let identity = TensorOperator::<S>::identity(space);

    let mut total = TensorOperator::<S>::zero(space);
    for sigma in Permutation::all(n) {
        let a = a_sigma(&sigma, xi, species, rule)?;
        let alpha = sigma.image(site - 1);
        let beta = sigma.image(site);
        let factor = identity
            .sub(&b_i.scale(&xi.value(alpha).recip()))
            .sub(&bp_i.scale(xi.value(beta)));
        total = total.add(&factor.compose(&a));
    }
    Ok(compare_ops(&total, &TensorOperator::zero(space)))
}

/// Seeded regular rational triples for property suites: numerators in
/// `[-9, 9]` excluding 0, denominators in `[1, 9]`, values excluding
/// `{0, 1}`, pairwise distinct within each triple.
pub fn seeded_rational_triples(count: usize, seed: u64) -> Vec<[BigRational; 3]> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::with_capacity(count);
    let draw = |rng: &mut ChaCha8Rng| -> BigRational {
        loop {
            let num = rng.gen_range(-9i64..=9);
            let den = rng.gen_range(1i64..=9);
            if num == 0 || num == den {
                continue;
            }
            return crate::scalar::rat(num, den);
        }
    };
    while out.len() < count {
        let a = draw(&mut rng);
        let b = draw(&mut rng);
        let c = draw(&mut rng);
        if a == b || a == c || b == c {
            continue;
        }
        out.push([a, b, c]);
    }
    out
}
