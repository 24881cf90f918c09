//! Transition probabilities by contour quadrature.
//!
//! The n-fold contour integral over circles of radius r > 1 is evaluated by
//! the product trapezoid rule with M equispaced nodes per circle. Nodes in
//! dimension d carry a small angular offset so nodes from different
//! dimensions never coincide, keeping every scattering factor regular. The
//! 1/(2 pi i) normalization folds into the node weights: under xi = r e^(i a)
//! each node contributes xi/M per dimension.
//!
//! Scattering entries are evaluated by sparse application of the T factors to
//! the initial basis vector; the entries of the two-particle matrix depend
//! only on the order relation of the two species at the acted-on slots, which
//! keeps the per-node cost at O(n! n^2 N^n).

use num::complex::Complex64 as C64;
use rayon::prelude::*;
use serde::Serialize;

use crate::dynamics::{poisson_tail_window, Configuration};
use crate::error::{Error, Result};
use crate::rules::RuleType;
use crate::scatter::Permutation;
use crate::word::{species_counts, WordSpace};

/// Tolerance on imaginary residuals of reported probabilities.
pub const IMAG_TOL: f64 = 1e-8;

/// Largest node count the product rule will enumerate.
const NODE_CAP: usize = 1 << 24;

#[derive(Debug, Clone, Copy, Serialize)]
pub struct QuadratureConfig {
    /// Circle radius; must exceed 1 so the contour encloses 0 and 1.
    pub radius: f64,
    /// Nodes per circle; a power of two, at least 8.
    pub nodes: usize,
    /// Re-evaluate at twice the node count and report the difference.
    pub convergence_check: bool,
}

impl QuadratureConfig {
    pub fn new(radius: f64, nodes: usize, convergence_check: bool) -> Result<Self> {
        if radius <= 1.0 || !radius.is_finite() {
            return Err(Error::invalid("contour radius must exceed 1"));
        }
        if nodes < 8 || !nodes.is_power_of_two() {
            return Err(Error::invalid("node count must be a power of two, at least 8"));
        }
        Ok(QuadratureConfig {
            radius,
            nodes,
            convergence_check,
        })
    }

    /// Desk-scale defaults: r = 1.5 with 64 nodes for n <= 2, 32 for n = 3.
    pub fn for_particle_count(n: usize) -> Self {
        QuadratureConfig {
            radius: 1.5,
            nodes: if n <= 2 { 64 } else { 32 },
            convergence_check: false,
        }
    }

    fn with_nodes(self, nodes: usize) -> Self {
        QuadratureConfig { nodes, ..self }
    }
}

/// A transition-probability query `(Y, nu) -> (X, pi)` at time `t`.
#[derive(Debug, Clone, Serialize)]
pub struct TransitionQuery {
    pub initial: Configuration,
    pub target: Configuration,
    pub time: f64,
    pub rule: RuleType,
    /// Ambient species count; entries do not depend on it as long as it
    /// covers every label in the words.
    pub species: usize,
}

impl TransitionQuery {
    pub fn new(
        initial: Configuration,
        target: Configuration,
        time: f64,
        rule: RuleType,
    ) -> Result<Self> {
        let species = initial.max_species().max(target.max_species()) as usize;
        Self::with_species(initial, target, time, rule, species)
    }

    pub fn with_species(
        initial: Configuration,
        target: Configuration,
        time: f64,
        rule: RuleType,
        species: usize,
    ) -> Result<Self> {
        if !rule.is_integrable() {
            return Err(Error::UnsupportedRule(rule));
        }
        if initial.n() != target.n() {
            return Err(Error::invalid("initial and target particle counts differ"));
        }
        if time < 0.0 || !time.is_finite() {
            return Err(Error::invalid("time must be nonnegative and finite"));
        }
        if (species as u8) < initial.max_species().max(target.max_species()) {
            return Err(Error::invalid("species count below the largest label"));
        }
        Ok(TransitionQuery {
            initial,
            target,
            time,
            rule,
            species,
        })
    }

    pub fn n(&self) -> usize {
        self.initial.n()
    }

    /// Whether the species multisets match; otherwise the probability is 0
    /// with no integration needed.
    pub fn multisets_match(&self) -> bool {
        species_counts(self.initial.word()) == species_counts(self.target.word())
    }

    /// The uniformized-series value for the same query.
    pub fn series_oracle(&self, tail_tol: f64) -> Result<f64> {
        crate::dynamics::series_oracle(&self.initial, &self.target, self.time, self.rule, tail_tol)
    }
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct ProbabilityEstimate {
    pub probability: f64,
    pub imag_residual: f64,
    /// |P_M - P_2M| when the convergence check is on.
    pub convergence_delta: Option<f64>,
    /// Set when the imaginary residual exceeds the reporting tolerance.
    pub imag_warning: bool,
}

/// Entries of the two-particle scattering matrix, reduced to the three cases
/// a word slot pair can be in. Valid for every ambient species count.
#[derive(Debug, Clone, Copy)]
struct RAction {
    equal: C64,
    ascending: C64,
    descending: C64,
    swaps: bool,
}

fn r_action(rule: RuleType, xi_alpha: C64, xi_beta: C64) -> RAction {
    let one = C64::new(1.0, 0.0);
    match rule {
        RuleType::DropPush => RAction {
            equal: -((one - xi_alpha) * xi_beta) / ((one - xi_beta) * xi_alpha),
            ascending: xi_alpha.inv(),
            descending: xi_beta,
            swaps: true,
        },
        RuleType::Tasep => RAction {
            equal: -(one - xi_beta) / (one - xi_alpha),
            ascending: xi_alpha.inv(),
            descending: xi_beta,
            swaps: true,
        },
        RuleType::NonIntegrableAlt => RAction {
            equal: -(one - xi_beta) / (one - xi_alpha),
            ascending: -(one - xi_beta) / (one - xi_alpha),
            descending: -(one - xi_alpha.inv()) / (one - xi_beta.inv()),
            swaps: false,
        },
    }
}

/// One permutation with its scattering schedule: the factors of `A_sigma`
/// along a reduced word, as `(slot, beta, alpha)` spectral labels.
struct SigmaPlan {
    sigma: Permutation,
    factors: Vec<(usize, usize, usize)>,
}

impl SigmaPlan {
    fn new(sigma: Permutation) -> Self {
        let n = sigma.n();
        let mut seq: Vec<usize> = (0..n).collect();
        let mut factors = Vec::new();
        for p in sigma.reduced_word() {
            factors.push((p, seq[p + 1], seq[p]));
            seq.swap(p, p + 1);
        }
        debug_assert_eq!(seq, (0..n).map(|i| sigma.image(i)).collect::<Vec<_>>());
        SigmaPlan { sigma, factors }
    }
}

struct Engine {
    space: WordSpace,
    n: usize,
    rule: RuleType,
    plans: Vec<SigmaPlan>,
    /// `pows[slot]` = N^(n-1-slot), for digit arithmetic on word indices.
    pows: Vec<usize>,
}

struct Scratch {
    vec_a: Vec<C64>,
    vec_b: Vec<C64>,
    /// Per-(beta, alpha) scattering actions for the current node.
    actions: Vec<Option<RAction>>,
    /// Concatenated `A_sigma e_nu` vectors for the current node.
    sigma_vecs: Vec<C64>,
}

impl Engine {
    fn new(n: usize, species: usize, rule: RuleType) -> Result<Engine> {
        let space = WordSpace::new(n, species)?;
        let plans = Permutation::all(n).into_iter().map(SigmaPlan::new).collect();
        let pows = (0..n)
            .map(|slot| species.pow((n - 1 - slot) as u32))
            .collect();
        Ok(Engine {
            space,
            n,
            rule,
            plans,
            pows,
        })
    }

    fn scratch(&self) -> Scratch {
        let dim = self.space.dim();
        Scratch {
            vec_a: vec![C64::default(); dim],
            vec_b: vec![C64::default(); dim],
            actions: vec![None; self.n * self.n],
            sigma_vecs: vec![C64::default(); dim * self.plans.len()],
        }
    }

    fn apply_action(&self, act: &RAction, slot: usize, x: &[C64], y: &mut [C64]) {
        let pa = self.pows[slot] as i64;
        let pb = self.pows[slot + 1] as i64;
        let species = self.space.species;
        y.fill(C64::default());
        for (idx, &v) in x.iter().enumerate() {
            if v == C64::default() {
                continue;
            }
            let a = (idx / self.pows[slot]) % species;
            let b = (idx / self.pows[slot + 1]) % species;
            if a == b {
                y[idx] += act.equal * v;
            } else {
                let coeff = if a < b { act.ascending } else { act.descending };
                let out = if act.swaps {
                    (idx as i64 + (b as i64 - a as i64) * pa + (a as i64 - b as i64) * pb) as usize
                } else {
                    idx
                };
                y[out] += coeff * v;
            }
        }
    }

    /// Fill `scratch.sigma_vecs` with `A_sigma e_nu` for every permutation at
    /// the spectral point `xi`.
    fn sigma_vectors(&self, xi: &[C64], nu: usize, scratch: &mut Scratch) {
        let dim = self.space.dim();
        for slot in scratch.actions.iter_mut() {
            *slot = None;
        }
        for (s, plan) in self.plans.iter().enumerate() {
            scratch.vec_a.fill(C64::default());
            scratch.vec_a[nu] = C64::new(1.0, 0.0);
            for &(slot, beta, alpha) in &plan.factors {
                let key = beta * self.n + alpha;
                let act = match scratch.actions[key] {
                    Some(act) => act,
                    None => {
                        let act = r_action(self.rule, xi[alpha], xi[beta]);
                        scratch.actions[key] = Some(act);
                        act
                    }
                };
                let (a, b) = (&mut scratch.vec_a, &mut scratch.vec_b);
                self.apply_action(&act, slot, a, b);
                std::mem::swap(a, b);
            }
            scratch.sigma_vecs[s * dim..(s + 1) * dim].copy_from_slice(&scratch.vec_a);
        }
    }
}

struct Grid {
    m: usize,
    n: usize,
    /// Per dimension, per node index: node value, node weight, energy factor.
    nodes: Vec<Vec<C64>>,
    weights: Vec<Vec<C64>>,
    energy: Vec<Vec<C64>>,
}

fn build_grid(n: usize, cfg: &QuadratureConfig, time: f64) -> Grid {
    let m = cfg.nodes;
    let mut nodes = Vec::with_capacity(n);
    let mut weights = Vec::with_capacity(n);
    let mut energy = Vec::with_capacity(n);
    for d in 0..n {
        let offset = (2 * d + 1) as f64 / (2 * n) as f64;
        let mut nv = Vec::with_capacity(m);
        let mut wv = Vec::with_capacity(m);
        let mut ev = Vec::with_capacity(m);
        for k in 0..m {
            let angle = 2.0 * std::f64::consts::PI * (k as f64 + offset) / m as f64;
            let node = C64::from_polar(cfg.radius, angle);
            nv.push(node);
            wv.push(node / m as f64);
            ev.push(((node.inv() - C64::new(1.0, 0.0)) * time).exp());
        }
        nodes.push(nv);
        weights.push(wv);
        energy.push(ev);
    }
    Grid {
        m,
        n,
        nodes,
        weights,
        energy,
    }
}

impl Grid {
    fn total(&self) -> usize {
        self.m.pow(self.n as u32)
    }

    /// Node indices per dimension for a flat index.
    fn decode(&self, mut flat: usize, out: &mut [usize]) {
        for d in (0..self.n).rev() {
            out[d] = flat % self.m;
            flat /= self.m;
        }
    }
}

/// Deterministic pairwise summation over a fixed-order buffer.
fn pairwise_sum(values: &[C64]) -> C64 {
    if values.len() <= 16 {
        return values.iter().fold(C64::default(), |a, &b| a + b);
    }
    let mid = values.len() / 2;
    pairwise_sum(&values[..mid]) + pairwise_sum(&values[mid..])
}

/// The Bethe integrand entry at an explicit spectral point:
/// `sum_sigma (A_sigma)_(pi,nu) prod_i xi_sigma(i)^(x_i - y_sigma(i) - 1) e^(eps(xi_i) t)`
/// with `eps(xi) = 1/xi - 1`.
pub fn integrand_entry(xi: &[C64], query: &TransitionQuery) -> Result<C64> {
    let n = query.n();
    if xi.len() != n {
        return Err(Error::invalid("spectral point arity mismatch"));
    }
    for (i, a) in xi.iter().enumerate() {
        if a.norm() == 0.0 {
            return Err(Error::invalid("spectral values must be nonzero"));
        }
        for b in &xi[i + 1..] {
            if a == b {
                return Err(Error::invalid("spectral values must be pairwise distinct"));
            }
        }
    }
    let engine = Engine::new(n, query.species, query.rule)?;
    let mut scratch = engine.scratch();
    let nu = engine.space.index(query.initial.word());
    let pi = engine.space.index(query.target.word());
    engine.sigma_vectors(xi, nu, &mut scratch);
    let dim = engine.space.dim();
    let mut total = C64::default();
    for (s, plan) in engine.plans.iter().enumerate() {
        let amp = scratch.sigma_vecs[s * dim + pi];
        if amp == C64::default() {
            continue;
        }
        let mut factor = amp;
        for i in 0..n {
            let d = plan.sigma.image(i);
            let exp = query.target.positions()[i] - query.initial.positions()[d] - 1;
            factor *= xi[d].powi(exp as i32);
        }
        total += factor;
    }
    let mut energy = C64::new(1.0, 0.0);
    for x in xi {
        energy *= ((x.inv() - C64::new(1.0, 0.0)) * query.time).exp();
    }
    Ok(total * energy)
}

fn integrate_entry(query: &TransitionQuery, cfg: &QuadratureConfig) -> Result<C64> {
    let n = query.n();
    let engine = Engine::new(n, query.species, query.rule)?;
    let grid = build_grid(n, cfg, query.time);
    let total = grid.total();
    if total > NODE_CAP {
        return Err(Error::resource(format!(
            "quadrature would enumerate {total} nodes"
        )));
    }
    let nu = engine.space.index(query.initial.word());
    let pi = engine.space.index(query.target.word());
    let dim = engine.space.dim();

    let values: Vec<C64> = (0..total)
        .into_par_iter()
        .map_init(
            || (engine.scratch(), vec![0usize; n], vec![C64::default(); n]),
            |(scratch, ks, xi), flat| {
                grid.decode(flat, ks);
                for (d, slot) in xi.iter_mut().enumerate() {
                    *slot = grid.nodes[d][ks[d]];
                }
                engine.sigma_vectors(xi, nu, scratch);
                let mut sum = C64::default();
                for (s, plan) in engine.plans.iter().enumerate() {
                    let amp = scratch.sigma_vecs[s * dim + pi];
                    if amp == C64::default() {
                        continue;
                    }
                    let mut factor = amp;
                    for i in 0..n {
                        let d = plan.sigma.image(i);
                        let exp =
                            query.target.positions()[i] - query.initial.positions()[d] - 1;
                        factor *= xi[d].powi(exp as i32);
                    }
                    sum += factor;
                }
                let mut scale = C64::new(1.0, 0.0);
                for (d, &k) in ks.iter().enumerate() {
                    scale *= grid.weights[d][k] * grid.energy[d][k];
                }
                sum * scale
            },
        )
        .collect();
    Ok(pairwise_sum(&values))
}

/// Transition probability by the n-fold contour quadrature.
pub fn transition_probability(
    query: &TransitionQuery,
    cfg: &QuadratureConfig,
) -> Result<ProbabilityEstimate> {
    let n = query.n();
    if n > 3 {
        return Err(Error::resource(
            "quadrature cost grows as M^n n!: limited to n <= 3",
        ));
    }
    if !query.multisets_match() {
        return Ok(ProbabilityEstimate {
            probability: 0.0,
            imag_residual: 0.0,
            convergence_delta: cfg.convergence_check.then_some(0.0),
            imag_warning: false,
        });
    }
    let value = integrate_entry(query, cfg)?;
    let convergence_delta = if cfg.convergence_check {
        let refined = integrate_entry(query, &cfg.with_nodes(cfg.nodes * 2))?;
        Some((value - refined).norm())
    } else {
        None
    };
    let imag_residual = value.im.abs();
    Ok(ProbabilityEstimate {
        probability: value.re,
        imag_residual,
        convergence_delta,
        imag_warning: imag_residual > IMAG_TOL,
    })
}

/// Max magnitude over all `(pi, nu)` entries of the single-permutation
/// integral `oint A_sigma prod_i xi_sigma(i)^(x_i - y_sigma(i) - 1)`, which
/// vanishes for every non-identity permutation when `y_i <= x_i`.
pub fn vanishing_check(
    sigma: &Permutation,
    x: &[i64],
    y: &[i64],
    species: usize,
    rule: RuleType,
    cfg: &QuadratureConfig,
) -> Result<f64> {
    let n = sigma.n();
    if sigma.is_identity() {
        return Err(Error::invalid("the vanishing statement concerns non-identity permutations"));
    }
    if x.len() != n || y.len() != n {
        return Err(Error::invalid("position arity mismatch"));
    }
    if !x.windows(2).all(|w| w[0] < w[1]) || !y.windows(2).all(|w| w[0] < w[1]) {
        return Err(Error::invalid("positions must be strictly increasing"));
    }
    if x.iter().zip(y).any(|(xi, yi)| yi > xi) {
        return Err(Error::invalid("requires y_i <= x_i for all i"));
    }
    if n > 3 {
        return Err(Error::resource("vanishing check limited to n <= 3"));
    }
    let engine = Engine::new(n, species, rule)?;
    let grid = build_grid(n, cfg, 0.0);
    let total = grid.total();
    if total > NODE_CAP {
        return Err(Error::resource(format!(
            "quadrature would enumerate {total} nodes"
        )));
    }
    let dim = engine.space.dim();
    let plan = SigmaPlan::new(sigma.clone());

    // Chunk over the first dimension; accumulate a dense (pi, nu) matrix per
    // chunk, then combine chunks pairwise in index order.
    let rest: usize = grid.m.pow((n - 1) as u32);
    let chunks: Vec<Vec<C64>> = (0..grid.m)
        .into_par_iter()
        .map_init(
            || (engine.scratch(), vec![0usize; n.saturating_sub(1)], vec![C64::default(); n]),
            |(scratch, ks, xi), k0| {
                let mut acc = vec![C64::default(); dim * dim];
                for flat in 0..rest {
                    let mut f = flat;
                    for d in (0..n - 1).rev() {
                        ks[d] = f % grid.m;
                        f /= grid.m;
                    }
                    xi[0] = grid.nodes[0][k0];
                    for d in 1..n {
                        xi[d] = grid.nodes[d][ks[d - 1]];
                    }
                    let mut scale = grid.weights[0][k0];
                    for d in 1..n {
                        scale *= grid.weights[d][ks[d - 1]];
                    }
                    let mut power = C64::new(1.0, 0.0);
                    for (i, &xv) in x.iter().enumerate() {
                        let d = plan.sigma.image(i);
                        power *= xi[d].powi((xv - y[d] - 1) as i32);
                    }
                    let factor = scale * power;
                    for nu in 0..dim {
                        scratch.vec_a.fill(C64::default());
                        scratch.vec_a[nu] = C64::new(1.0, 0.0);
                        for slot in scratch.actions.iter_mut() {
                            *slot = None;
                        }
                        for &(slot, beta, alpha) in &plan.factors {
                            let key = beta * engine.n + alpha;
                            let act = match scratch.actions[key] {
                                Some(act) => act,
                                None => {
                                    let act = r_action(engine.rule, xi[alpha], xi[beta]);
                                    scratch.actions[key] = Some(act);
                                    act
                                }
                            };
                            let (a, b) = (&mut scratch.vec_a, &mut scratch.vec_b);
                            engine.apply_action(&act, slot, a, b);
                            std::mem::swap(a, b);
                        }
                        for pi in 0..dim {
                            acc[pi * dim + nu] += factor * scratch.vec_a[pi];
                        }
                    }
                }
                acc
            },
        )
        .collect();

    let mut combined = vec![C64::default(); dim * dim];
    for entry in 0..dim * dim {
        let column: Vec<C64> = chunks.iter().map(|c| c[entry]).collect();
        combined[entry] = pairwise_sum(&column);
    }
    Ok(combined.iter().map(|v| v.norm()).fold(0.0, f64::max))
}

#[derive(Debug, Clone, Serialize)]
pub struct TableRow {
    pub positions: Vec<i64>,
    pub word: Vec<u8>,
    pub probability: f64,
    pub imag_residual: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub convergence_delta: Option<f64>,
}

#[derive(Debug, Clone, Serialize)]
pub struct ProbabilityTable {
    pub window: usize,
    pub rows: Vec<TableRow>,
    pub total_mass: f64,
    /// `1 - total_mass`: the Bethe mass escaping the enumeration window.
    pub deficit: f64,
    pub max_imag: f64,
    /// Rows whose probability falls outside `[-1e-8, 1 + 1e-8]`.
    pub range_violations: usize,
}

/// Window width from the Poisson tail rule: the front advances at most one
/// site per event, so `P(escape) <= P(Poisson(n t) > window)`.
pub fn tail_rule_window(n: usize, time: f64) -> usize {
    poisson_tail_window(n as f64 * time, 1e-7)
}

fn enumerate_positions(lo: i64, hi: i64, n: usize) -> Vec<Vec<i64>> {
    fn rec(start: i64, hi: i64, left: usize, prefix: &mut Vec<i64>, out: &mut Vec<Vec<i64>>) {
        if left == 0 {
            out.push(prefix.clone());
            return;
        }
        for p in start..=hi - (left as i64 - 1) {
            prefix.push(p);
            rec(p + 1, hi, left - 1, prefix, out);
            prefix.pop();
        }
    }
    let mut out = Vec::new();
    if hi >= lo && (hi - lo + 1) as usize >= n {
        rec(lo, hi, n, &mut Vec::new(), &mut out);
    }
    out
}

/// Bethe probabilities for every state in the window
/// `X subset [y_1, y_n + window]`, over all words with the species multiset
/// of the initial word.
pub fn probability_table(
    initial: &Configuration,
    time: f64,
    window: usize,
    rule: RuleType,
    cfg: &QuadratureConfig,
) -> Result<ProbabilityTable> {
    let n = initial.n();
    if n > 3 {
        return Err(Error::resource("probability tables limited to n <= 3"));
    }
    if !rule.is_integrable() {
        return Err(Error::UnsupportedRule(rule));
    }
    if time < 0.0 || !time.is_finite() {
        return Err(Error::invalid("time must be nonnegative and finite"));
    }
    let species = initial.max_species() as usize;
    let engine = Engine::new(n, species, rule)?;
    let space = engine.space;

    let lo = initial.positions()[0];
    let hi = initial.positions()[n - 1] + window as i64;
    let position_sets = enumerate_positions(lo, hi, n);
    let target_counts = initial.species_counts();
    let words: Vec<usize> = (0..space.dim())
        .filter(|&w| species_counts(&space.word(w)) == target_counts)
        .collect();
    let states = position_sets.len() * words.len();
    if states == 0 {
        return Err(Error::invalid("empty enumeration window"));
    }
    if states > 100_000 {
        return Err(Error::resource(format!(
            "window enumerates {states} states (cap 100000)"
        )));
    }

    let sums = table_sums(&engine, initial, time, &position_sets, &words, cfg)?;
    let refined = if cfg.convergence_check {
        Some(table_sums(
            &engine,
            initial,
            time,
            &position_sets,
            &words,
            &cfg.with_nodes(cfg.nodes * 2),
        )?)
    } else {
        None
    };

    let mut rows = Vec::with_capacity(states);
    let mut total = 0.0;
    let mut max_imag: f64 = 0.0;
    let mut range_violations = 0usize;
    for (xi_idx, positions) in position_sets.iter().enumerate() {
        for (w_idx, &w) in words.iter().enumerate() {
            let v = sums[xi_idx * words.len() + w_idx];
            total += v.re;
            max_imag = max_imag.max(v.im.abs());
            if v.re < -IMAG_TOL || v.re > 1.0 + IMAG_TOL {
                range_violations += 1;
            }
            rows.push(TableRow {
                positions: positions.clone(),
                word: space.word(w),
                probability: v.re,
                imag_residual: v.im.abs(),
                convergence_delta: refined
                    .as_ref()
                    .map(|r| (v - r[xi_idx * words.len() + w_idx]).norm()),
            });
        }
    }
    Ok(ProbabilityTable {
        window,
        rows,
        total_mass: total,
        deficit: 1.0 - total,
        max_imag,
        range_violations,
    })
}

fn table_sums(
    engine: &Engine,
    initial: &Configuration,
    time: f64,
    position_sets: &[Vec<i64>],
    words: &[usize],
    cfg: &QuadratureConfig,
) -> Result<Vec<C64>> {
    let n = engine.n;
    let grid = build_grid(n, cfg, time);
    if grid.total() > NODE_CAP {
        return Err(Error::resource("quadrature node cap exceeded"));
    }
    let dim = engine.space.dim();
    let nu = engine.space.index(initial.word());
    let y = initial.positions();
    let lo = y[0];
    // Exponent range of x_i - y_d - 1 over the window.
    let hi = position_sets
        .iter()
        .flat_map(|p| p.iter().copied())
        .max()
        .unwrap_or(lo);
    let e_min = lo - y[n - 1] - 1;
    let e_max = hi - y[0] - 1;
    let span = (e_max - e_min + 1) as usize;
    let states = position_sets.len() * words.len();
    let rest: usize = grid.m.pow((n - 1) as u32);

    let chunks: Vec<Vec<C64>> = (0..grid.m)
        .into_par_iter()
        .map_init(
            || {
                (
                    engine.scratch(),
                    vec![0usize; n.saturating_sub(1)],
                    vec![C64::default(); n],
                    vec![C64::default(); n * span],
                )
            },
            |(scratch, ks, xi, powers), k0| {
                let mut acc = vec![C64::default(); states];
                for flat in 0..rest {
                    let mut f = flat;
                    for d in (0..n - 1).rev() {
                        ks[d] = f % grid.m;
                        f /= grid.m;
                    }
                    xi[0] = grid.nodes[0][k0];
                    for d in 1..n {
                        xi[d] = grid.nodes[d][ks[d - 1]];
                    }
                    let mut scale = grid.weights[0][k0] * grid.energy[0][k0];
                    for d in 1..n {
                        scale *= grid.weights[d][ks[d - 1]] * grid.energy[d][ks[d - 1]];
                    }
                    for d in 0..n {
                        let base = xi[d].powi(e_min as i32);
                        let mut v = base;
                        for e in 0..span {
                            powers[d * span + e] = v;
                            v *= xi[d];
                        }
                    }
                    engine.sigma_vectors(xi, nu, scratch);
                    for (xi_idx, positions) in position_sets.iter().enumerate() {
                        for (s, plan) in engine.plans.iter().enumerate() {
                            let mut geom = C64::new(1.0, 0.0);
                            for (i, &pos) in positions.iter().enumerate() {
                                let d = plan.sigma.image(i);
                                let e = (pos - y[d] - 1 - e_min) as usize;
                                geom *= powers[d * span + e];
                            }
                            let geom = geom * scale;
                            for (w_idx, &w) in words.iter().enumerate() {
                                let amp = scratch.sigma_vecs[s * dim + w];
                                if amp != C64::default() {
                                    acc[xi_idx * words.len() + w_idx] += geom * amp;
                                }
                            }
                        }
                    }
                }
                acc
            },
        )
        .collect();

    let mut combined = vec![C64::default(); states];
    for (state, slot) in combined.iter_mut().enumerate() {
        let column: Vec<C64> = chunks.iter().map(|c| c[state]).collect();
        *slot = pairwise_sum(&column);
    }
    Ok(combined)
}
