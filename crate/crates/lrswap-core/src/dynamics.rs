//! The long-range swap process.
//!
//! Each particle waits an exponential rate-1 time and then exchanges
//! positions with the nearest weaker particle (or vacancy) to its right.
//! Equal species are skipped under the drop-push rule and block the attempt
//! under the TASEP rule. The total event rate is therefore exactly `n`, which
//! makes uniformization an exact oracle: the chain at time `t` is the
//! embedded jump chain subordinated to a Poisson(n t) clock.

use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::pairalg::BasisMap;
use crate::rules::RuleType;
use crate::word::{species_counts, word_string, WordSpace};

/// Maximum number of states the series oracle will track.
pub const SERIES_STATE_CAP: usize = 1_000_000;

/// A Markov state: strictly increasing positions paired with a species word.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub struct Configuration {
    positions: Vec<i64>,
    word: Vec<u8>,
}

impl Configuration {
    pub fn new(positions: Vec<i64>, word: Vec<u8>) -> Result<Self> {
        if positions.is_empty() || positions.len() != word.len() {
            return Err(Error::invalid(
                "positions and species word must be nonempty and of equal length",
            ));
        }
        if !positions.windows(2).all(|w| w[0] < w[1]) {
            return Err(Error::invalid(format!(
                "positions must be strictly increasing, got {positions:?}"
            )));
        }
        if word.contains(&0) {
            return Err(Error::invalid("species labels start at 1"));
        }
        Ok(Configuration { positions, word })
    }

    pub fn n(&self) -> usize {
        self.positions.len()
    }

    pub fn positions(&self) -> &[i64] {
        &self.positions
    }

    pub fn word(&self) -> &[u8] {
        &self.word
    }

    pub fn max_species(&self) -> u8 {
        *self.word.iter().max().expect("nonempty word")
    }

    pub fn species_counts(&self) -> Vec<(u8, usize)> {
        species_counts(&self.word)
    }

    /// Canonical encoding `x_1,...,x_n|word`.
    pub fn key(&self) -> String {
        let pos = self
            .positions
            .iter()
            .map(|p| p.to_string())
            .collect::<Vec<_>>()
            .join(",");
        format!("{pos}|{}", word_string(&self.word))
    }
}

/// Resolution of one attempted move.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MoveOutcome {
    /// TASEP rule only: an equal-species particle was met before any weaker
    /// site; the configuration is unchanged.
    Null,
    /// Exchange with the weaker particle at this index.
    Swap { target: usize },
    /// Exchange with a vacancy: the mover advances to this site.
    Advance { site: i64 },
}

impl MoveOutcome {
    pub fn target_site(&self, c: &Configuration) -> Option<i64> {
        match self {
            MoveOutcome::Null => None,
            MoveOutcome::Swap { target } => Some(c.positions[*target]),
            MoveOutcome::Advance { site } => Some(*site),
        }
    }
}

/// Scan rightward from the mover (0-based index) for the nearest weaker
/// particle or vacancy.
pub fn long_range_target(c: &Configuration, mover: usize, rule: RuleType) -> Result<MoveOutcome> {
    if !rule.is_integrable() {
        return Err(Error::UnsupportedRule(rule));
    }
    if mover >= c.n() {
        return Err(Error::invalid(format!("mover index {mover} out of range")));
    }
    let species = c.word[mover];
    let mut site = c.positions[mover] + 1;
    let mut next = mover + 1;
    loop {
        if next < c.n() && c.positions[next] == site {
            let resident = c.word[next];
            if resident < species {
                return Ok(MoveOutcome::Swap { target: next });
            }
            if resident == species && rule == RuleType::Tasep {
                return Ok(MoveOutcome::Null);
            }
            // Stronger (or equal under drop-push): jump over and keep scanning.
            next += 1;
            site += 1;
        } else {
            return Ok(MoveOutcome::Advance { site });
        }
    }
}

/// Apply an outcome, producing the successor configuration.
pub fn apply_move(c: &Configuration, mover: usize, outcome: &MoveOutcome) -> Configuration {
    match outcome {
        MoveOutcome::Null => c.clone(),
        MoveOutcome::Swap { target } => {
            let mut word = c.word.clone();
            word.swap(mover, *target);
            Configuration {
                positions: c.positions.clone(),
                word,
            }
        }
        MoveOutcome::Advance { site } => {
            let mut pairs: Vec<(i64, u8)> = c
                .positions
                .iter()
                .copied()
                .zip(c.word.iter().copied())
                .collect();
            pairs[mover] = (*site, c.word[mover]);
            pairs.sort_unstable();
            Configuration {
                positions: pairs.iter().map(|p| p.0).collect(),
                word: pairs.iter().map(|p| p.1).collect(),
            }
        }
    }
}

/// One step through the instant two-particles-on-one-site hidden states.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum StepResolution {
    /// The arriving particle skips over a stronger-or-equal resident.
    ForwardJump,
    /// The arriving particle displaces a weaker resident backward.
    BackwardPush,
    /// The displaced particle skips leftward over a stronger resident.
    BackwardJumpOver,
}

/// A hidden state `(site, site, left right)` and how it resolves.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct TraceStep {
    pub site: i64,
    pub left_species: u8,
    pub right_species: u8,
    pub resolution: StepResolution,
}

/// The local-update realization of one long-range move.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct MoveTrace {
    pub mover: usize,
    pub steps: Vec<TraceStep>,
}

/// Decompose a (non-null) move into its chain of local hidden-state updates:
/// forward jumps of the mover over each intervening resident, one backward
/// push at the target, then backward jump-overs of the displaced particle
/// back to the mover's origin.
pub fn local_decomposition(c: &Configuration, mover: usize, rule: RuleType) -> Result<MoveTrace> {
    let outcome = long_range_target(c, mover, rule)?;
    let mut steps = Vec::new();
    let species = c.word[mover];
    match outcome {
        MoveOutcome::Null => {}
        MoveOutcome::Advance { site } => {
            for (idx, &p) in c.positions.iter().enumerate().skip(mover + 1) {
                if p >= site {
                    break;
                }
                steps.push(TraceStep {
                    site: p,
                    left_species: species,
                    right_species: c.word[idx],
                    resolution: StepResolution::ForwardJump,
                });
            }
        }
        MoveOutcome::Swap { target } => {
            for idx in mover + 1..target {
                steps.push(TraceStep {
                    site: c.positions[idx],
                    left_species: species,
                    right_species: c.word[idx],
                    resolution: StepResolution::ForwardJump,
                });
            }
            let displaced = c.word[target];
            steps.push(TraceStep {
                site: c.positions[target],
                left_species: species,
                right_species: displaced,
                resolution: StepResolution::BackwardPush,
            });
            for idx in (mover + 1..target).rev() {
                steps.push(TraceStep {
                    site: c.positions[idx],
                    left_species: c.word[idx],
                    right_species: displaced,
                    resolution: StepResolution::BackwardJumpOver,
                });
            }
        }
    }
    Ok(MoveTrace { mover, steps })
}

/// Re-run a trace through the local rules, checking each hidden state against
/// the occupancy it claims, and return the resulting configuration.
pub fn replay_trace(c: &Configuration, trace: &MoveTrace) -> Result<Configuration> {
    let mover = trace.mover;
    if mover >= c.n() {
        return Err(Error::invalid("trace mover out of range"));
    }
    let mover_species = c.word[mover];
    let origin = c.positions[mover];
    let mut occupants: BTreeMap<i64, u8> = c
        .positions
        .iter()
        .copied()
        .zip(c.word.iter().copied())
        .filter(|&(p, _)| p != origin)
        .collect();

    let mut iter = trace.steps.iter().peekable();
    let mut cursor = origin;
    // Forward phase: the mover walks right over each claimed resident.
    while let Some(step) = iter.peek() {
        if step.resolution != StepResolution::ForwardJump {
            break;
        }
        let step = iter.next().unwrap();
        let expected = occupants.get(&step.site).copied();
        if step.site != cursor + 1
            || expected != Some(step.right_species)
            || step.left_species != mover_species
        {
            return Err(Error::invalid(format!(
                "forward jump at {} does not match occupancy",
                step.site
            )));
        }
        cursor = step.site;
    }

    match iter.next() {
        None => {
            // Pure advance into the vacancy just past the last resident.
            let landing = cursor + 1;
            if occupants.contains_key(&landing) {
                return Err(Error::invalid("advance landing site is occupied"));
            }
            occupants.insert(landing, mover_species);
        }
        Some(push) => {
            if push.resolution != StepResolution::BackwardPush
                || push.site != cursor + 1
                || push.left_species != mover_species
                || occupants.get(&push.site) != Some(&push.right_species)
                || push.right_species >= mover_species
            {
                return Err(Error::invalid("backward push does not match occupancy"));
            }
            let displaced = push.right_species;
            occupants.remove(&push.site);
            occupants.insert(push.site, mover_species);
            let mut back = push.site - 1;
            for step in iter {
                if step.resolution != StepResolution::BackwardJumpOver
                    || step.site != back
                    || step.right_species != displaced
                    || occupants.get(&step.site) != Some(&step.left_species)
                    || step.left_species < displaced
                {
                    return Err(Error::invalid("backward jump-over does not match occupancy"));
                }
                back -= 1;
            }
            if occupants.contains_key(&back) {
                return Err(Error::invalid("displaced particle lands on an occupied site"));
            }
            occupants.insert(back, displaced);
        }
    }

    let positions: Vec<i64> = occupants.keys().copied().collect();
    let word: Vec<u8> = occupants.values().copied().collect();
    Configuration::new(positions, word)
}

fn exponential_time(rng: &mut impl Rng, rate: f64) -> f64 {
    let u: f64 = rng.gen();
    -(1.0 - u).ln() / rate
}

/// Continuous-time simulation to time `t`: the total event rate is exactly
/// `n`, events pick a uniformly random particle. Deterministic given the rng.
pub fn simulate_with_rng(
    c0: &Configuration,
    t: f64,
    rng: &mut impl Rng,
    rule: RuleType,
) -> Result<Configuration> {
    if !rule.is_integrable() {
        return Err(Error::UnsupportedRule(rule));
    }
    if t < 0.0 || !t.is_finite() {
        return Err(Error::invalid("time must be nonnegative and finite"));
    }
    let n = c0.n();
    let rate = n as f64;
    let mut clock = 0.0;
    let mut state = c0.clone();
    loop {
        clock += exponential_time(rng, rate);
        if clock > t {
            return Ok(state);
        }
        let mover = rng.gen_range(0..n);
        let outcome = long_range_target(&state, mover, rule)?;
        state = apply_move(&state, mover, &outcome);
    }
}

pub fn simulate(c0: &Configuration, t: f64, seed: u64, rule: RuleType) -> Result<Configuration> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    simulate_with_rng(c0, t, &mut rng, rule)
}

/// Run `trials` independent trajectories with per-trajectory derived streams
/// of one seeded generator, and count terminal states. Trajectories run in
/// parallel; counting is order-independent, so the result is deterministic.
pub fn simulate_ensemble(
    c0: &Configuration,
    t: f64,
    trials: u64,
    seed: u64,
    rule: RuleType,
) -> Result<BTreeMap<Configuration, u64>> {
    if !rule.is_integrable() {
        return Err(Error::UnsupportedRule(rule));
    }
    let chunks: Vec<BTreeMap<Configuration, u64>> = (0..trials)
        .into_par_iter()
        .fold(BTreeMap::new, |mut acc, trial| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(trial + 1);
            let end = simulate_with_rng(c0, t, &mut rng, rule).expect("validated inputs");
            *acc.entry(end).or_insert(0) += 1;
            acc
        })
        .collect();
    let mut total = BTreeMap::new();
    for chunk in chunks {
        for (state, count) in chunk {
            *total.entry(state).or_insert(0) += count;
        }
    }
    Ok(total)
}

/// Poisson(lambda) weights `w_0..w_K` with `1 - sum w_k < tail_tol`, plus the
/// actual tail bound.
pub fn poisson_weights(lambda: f64, tail_tol: f64) -> (Vec<f64>, f64) {
    assert!(lambda >= 0.0 && tail_tol > 0.0);
    let mut weights = vec![(-lambda).exp()];
    let mut cumulative = weights[0];
    let mut k = 0usize;
    while 1.0 - cumulative >= tail_tol {
        k += 1;
        let next = weights[k - 1] * lambda / k as f64;
        weights.push(next);
        cumulative += next;
        if k > 100_000 {
            break;
        }
    }
    (weights, (1.0 - cumulative).max(0.0))
}

/// Smallest window width `D` such that `P(Poisson(lambda) >= D + 1) < target`.
/// The maximum position advances by at most one site per event, so a spatial
/// window of `D` sites beyond the initial front captures all but that tail.
pub fn poisson_tail_window(lambda: f64, target: f64) -> usize {
    let (weights, _) = poisson_weights(lambda, target);
    weights.len() - 1
}

/// The distribution at time `t`, computed by uniformization: exact forward
/// propagation of the embedded jump chain, Poisson-weighted, truncated at an
/// explicit tail bound. No randomness and no spatial truncation.
#[derive(Debug, Clone)]
pub struct SeriesDistribution {
    pub mass: BTreeMap<Configuration, f64>,
    pub tail_bound: f64,
    pub steps: usize,
}

impl SeriesDistribution {
    pub fn probability(&self, state: &Configuration) -> f64 {
        self.mass.get(state).copied().unwrap_or(0.0)
    }

    pub fn total_mass(&self) -> f64 {
        self.mass.values().sum()
    }
}

pub fn series_distribution(
    initial: &Configuration,
    t: f64,
    rule: RuleType,
    tail_tol: f64,
) -> Result<SeriesDistribution> {
    if !rule.is_integrable() {
        return Err(Error::UnsupportedRule(rule));
    }
    if t < 0.0 || !t.is_finite() {
        return Err(Error::invalid("time must be nonnegative and finite"));
    }
    if tail_tol <= 0.0 {
        return Err(Error::invalid("tail tolerance must be positive"));
    }
    let n = initial.n();
    let (weights, tail) = poisson_weights(n as f64 * t, tail_tol);

    let mut current: BTreeMap<Configuration, f64> = BTreeMap::new();
    current.insert(initial.clone(), 1.0);
    let mut accumulated: BTreeMap<Configuration, f64> = BTreeMap::new();

    for (k, &w) in weights.iter().enumerate() {
        for (state, p) in &current {
            *accumulated.entry(state.clone()).or_insert(0.0) += w * p;
        }
        if k + 1 == weights.len() {
            break;
        }
        let mut next: BTreeMap<Configuration, f64> = BTreeMap::new();
        let uniform = 1.0 / n as f64;
        for (state, p) in &current {
            let share = p * uniform;
            for mover in 0..n {
                let outcome = long_range_target(state, mover, rule)?;
                let successor = apply_move(state, mover, &outcome);
                *next.entry(successor).or_insert(0.0) += share;
            }
        }
        if next.len() > SERIES_STATE_CAP {
            return Err(Error::resource(format!(
                "series oracle exceeded {SERIES_STATE_CAP} states"
            )));
        }
        current = next;
    }

    Ok(SeriesDistribution {
        mass: accumulated,
        tail_bound: tail,
        steps: weights.len() - 1,
    })
}

/// Transition probability from `initial` to `target` at time `t` by the
/// uniformized series.
pub fn series_oracle(
    initial: &Configuration,
    target: &Configuration,
    t: f64,
    rule: RuleType,
    tail_tol: f64,
) -> Result<f64> {
    Ok(series_distribution(initial, t, rule, tail_tol)?.probability(target))
}

/// Distribution of the embedded jump chain after exactly `steps` events
/// (uniform particle choice each event).
pub fn jump_chain_distribution(
    initial: &Configuration,
    rule: RuleType,
    steps: usize,
) -> Result<BTreeMap<Configuration, f64>> {
    if !rule.is_integrable() {
        return Err(Error::UnsupportedRule(rule));
    }
    let n = initial.n();
    let mut current: BTreeMap<Configuration, f64> = BTreeMap::new();
    current.insert(initial.clone(), 1.0);
    for _ in 0..steps {
        let mut next: BTreeMap<Configuration, f64> = BTreeMap::new();
        let uniform = 1.0 / n as f64;
        for (state, p) in &current {
            let share = p * uniform;
            for mover in 0..n {
                let outcome = long_range_target(state, mover, rule)?;
                let successor = apply_move(state, mover, &outcome);
                *next.entry(successor).or_insert(0.0) += share;
            }
        }
        current = next;
    }
    Ok(current)
}

/// Integer rate matrix on the word basis of a fixed shape.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct RateMatrix {
    pub dim: usize,
    /// Row-major counts: entry `(pi, nu)` is the rate of `nu -> pi`.
    pub entries: Vec<u64>,
}

impl RateMatrix {
    fn zero(dim: usize) -> Self {
        RateMatrix {
            dim,
            entries: vec![0; dim * dim],
        }
    }

    pub fn get(&self, row: usize, col: usize) -> u64 {
        self.entries[row * self.dim + col]
    }

    fn bump(&mut self, row: usize, col: usize) {
        self.entries[row * self.dim + col] += 1;
    }

    /// Sum of 0/1 partial permutations as an integer matrix.
    pub fn from_basis_maps(space: WordSpace, maps: &[&BasisMap]) -> Self {
        let mut out = RateMatrix::zero(space.dim());
        for m in maps {
            for col in 0..space.dim() {
                if let Some(row) = m.image(col) {
                    out.bump(row, col);
                }
            }
        }
        out
    }

    pub fn column_sum(&self, col: usize) -> u64 {
        (0..self.dim).map(|r| self.get(r, col)).sum()
    }

    /// Entrywise differences against another matrix.
    pub fn diff(&self, other: &RateMatrix) -> Vec<(usize, usize, u64, u64)> {
        let mut out = Vec::new();
        for r in 0..self.dim {
            for c in 0..self.dim {
                if self.get(r, c) != other.get(r, c) {
                    out.push((r, c, self.get(r, c), other.get(r, c)));
                }
            }
        }
        out
    }
}

/// All single-event rates out of one position shape, tallied per target
/// shape. Null attempts (TASEP rule) count as same-shape self-loops, so every
/// column across all targets sums to `n`.
#[derive(Debug, Clone, Serialize)]
pub struct GeneratorSlice {
    pub source: Vec<i64>,
    pub species: usize,
    pub rule: RuleType,
    pub rates: BTreeMap<Vec<i64>, RateMatrix>,
}

pub fn extract_generator(
    shape: &[i64],
    species: usize,
    rule: RuleType,
) -> Result<GeneratorSlice> {
    if !rule.is_integrable() {
        return Err(Error::UnsupportedRule(rule));
    }
    let n = shape.len();
    if n == 0 || n > 4 || species == 0 || species > 3 {
        return Err(Error::resource(
            "generator extraction is limited to n <= 4, N <= 3",
        ));
    }
    if !shape.windows(2).all(|w| w[0] < w[1]) {
        return Err(Error::invalid("shape positions must be strictly increasing"));
    }
    let space = WordSpace::new(n, species)?;
    let mut rates: BTreeMap<Vec<i64>, RateMatrix> = BTreeMap::new();
    for nu in 0..space.dim() {
        let word = space.word(nu);
        let state = Configuration::new(shape.to_vec(), word)?;
        for mover in 0..n {
            let outcome = long_range_target(&state, mover, rule)?;
            let successor = apply_move(&state, mover, &outcome);
            let pi = space.index(successor.word());
            rates
                .entry(successor.positions().to_vec())
                .or_insert_with(|| RateMatrix::zero(space.dim()))
                .bump(pi, nu);
        }
    }
    Ok(GeneratorSlice {
        source: shape.to_vec(),
        species,
        rule,
        rates,
    })
}

/// One extracted-vs-predicted rate matrix comparison.
#[derive(Debug, Clone, Serialize)]
pub struct GeneratorCheck {
    pub name: String,
    pub source: Vec<i64>,
    pub target: Vec<i64>,
    pub pass: bool,
    /// Entrywise mismatches as `(pi word, nu word, extracted, expected)`.
    pub diffs: Vec<(String, String, u64, u64)>,
}

#[derive(Debug, Clone, Serialize)]
pub struct GeneratorCheckReport {
    pub rule_type: RuleType,
    pub n: usize,
    #[serde(rename = "N")]
    pub species: usize,
    pub checks: Vec<GeneratorCheck>,
}

impl GeneratorCheckReport {
    pub fn all_pass(&self) -> bool {
        self.checks.iter().all(|c| c.pass)
    }
}

/// Compare extracted single-event rates against the master-equation
/// matrices: arrivals into the packed shape `X = (0..n-1)` from each
/// left-shifted shape carry `B_(i-1)...B_1`, and same-shape exchanges carry
/// the sum of all two-particle swap matrices.
pub fn generator_cross_check(
    n: usize,
    species: usize,
    rule: RuleType,
) -> Result<GeneratorCheckReport> {
    if !rule.is_integrable() {
        return Err(Error::UnsupportedRule(rule));
    }
    if n < 2 {
        return Err(Error::invalid("cross-check needs at least two particles"));
    }
    let space = WordSpace::new(n, species)?;
    let packed: Vec<i64> = (0..n as i64).collect();
    let mut checks = Vec::new();

    let mut compare = |name: String, source: Vec<i64>, expected: RateMatrix| -> Result<()> {
        let slice = extract_generator(&source, species, rule)?;
        let zero = RateMatrix {
            dim: space.dim(),
            entries: vec![0; space.dim() * space.dim()],
        };
        let extracted = slice.rates.get(&packed).unwrap_or(&zero);
        let diffs = extracted
            .diff(&expected)
            .into_iter()
            .map(|(r, c, got, want)| {
                (
                    word_string(&space.word(r)),
                    word_string(&space.word(c)),
                    got,
                    want,
                )
            })
            .collect::<Vec<_>>();
        checks.push(GeneratorCheck {
            name,
            source,
            target: packed.clone(),
            pass: diffs.is_empty(),
            diffs,
        });
        Ok(())
    };

    // Arrival from the shape with the first i coordinates shifted left:
    // the leftmost particle crosses i-1 residents into the vacancy.
    for i in 1..=n {
        let mut source: Vec<i64> = Vec::with_capacity(n);
        for k in 0..i {
            source.push(k as i64 - 1);
        }
        for k in i..n {
            source.push(k as i64);
        }
        let mut factors: Vec<crate::pairalg::BasisMap> = Vec::new();
        for site in (1..i).rev() {
            factors.push(crate::pairalg::embed_b(site, n, species, rule)?);
        }
        let refs: Vec<&BasisMap> = factors.iter().collect();
        let expected = RateMatrix::from_basis_maps(
            space,
            &[&BasisMap::product(&refs, space)],
        );
        compare(format!("arrival_shift[i={i}]"), source, expected)?;
    }

    // Same-shape exchanges: M_0 = sum of all M_ij.
    {
        let mut maps = Vec::new();
        for i in 1..n {
            for j in i + 1..=n {
                maps.push(crate::pairalg::swap_matrix(i, j, n, species, rule)?);
            }
        }
        let refs: Vec<&BasisMap> = maps.iter().collect();
        let expected = RateMatrix::from_basis_maps(space, &refs);
        compare("same_shape_swaps".to_string(), packed.clone(), expected)?;
    }

    Ok(GeneratorCheckReport {
        rule_type: rule,
        n,
        species,
        checks,
    })
}
