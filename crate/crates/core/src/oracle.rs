//! Brute-force reference computations for cross-checking.
//!
//! Everything here works straight from the definitions, forward from each
//! state and over explicitly enumerated beliefs, and is only meant for small
//! models. Random model generation and run sampling also live here.

use std::collections::{BTreeSet, HashSet, VecDeque};

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::belief::{belief_step, initial_belief};
use crate::distances::DistanceTable;
use crate::frontier::compute_frontier;
use crate::interval::{ExtNat, TimeInterval};
use crate::model::{validate, DesModel, EventId, ModelBuilder, StateId};
use crate::par::Exec;
use crate::twin::{build_twin, StatePair};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum OracleError {
    #[error("belief enumeration exceeded {0} beliefs")]
    CapExceeded(usize),
}

#[derive(Debug, Clone)]
pub struct OracleConfig {
    pub belief_cap: usize,
    pub max_states: usize,
    pub max_events: usize,
    pub observable_prob: f64,
    pub fault_prob: f64,
    pub max_out_degree: usize,
    pub runs: usize,
    pub run_length: usize,
    pub seed: u64,
}

impl Default for OracleConfig {
    fn default() -> Self {
        OracleConfig {
            belief_cap: 1 << 16,
            max_states: 8,
            max_events: 4,
            observable_prob: 0.6,
            fault_prob: 0.3,
            max_out_degree: 3,
            runs: 1000,
            run_length: 24,
            seed: 0x5EED,
        }
    }
}

fn seeded(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

// ---------------------------------------------------------------------------
// distances

/// States reachable from `from` with zero observations.
fn silent_reach(m: &DesModel, from: &BTreeSet<StateId>) -> BTreeSet<StateId> {
    let mut out = from.clone();
    let mut work: Vec<StateId> = from.iter().copied().collect();
    while let Some(q) = work.pop() {
        for t in m.transitions() {
            if t.source == q && !m.is_observable(t.event) && out.insert(t.target) {
                work.push(t.target);
            }
        }
    }
    out
}

/// States reachable from `layer` with exactly one more observation `e`
/// (or any observable event when `e` is `None`).
fn one_observation(m: &DesModel, layer: &BTreeSet<StateId>, e: Option<EventId>) -> BTreeSet<StateId> {
    // Search over (state, already observed?) pairs.
    let mut seen: HashSet<(StateId, bool)> = layer.iter().map(|&q| (q, false)).collect();
    let mut work: Vec<(StateId, bool)> = seen.iter().copied().collect();
    let mut out = BTreeSet::new();
    while let Some((q, done)) = work.pop() {
        if done {
            out.insert(q);
        }
        for t in m.transitions().iter().filter(|t| t.source == q) {
            let next = if !m.is_observable(t.event) {
                Some((t.target, done))
            } else if !done && e.is_none_or(|e| e == t.event) {
                Some((t.target, true))
            } else {
                None
            };
            if let Some(s) = next {
                if seen.insert(s) {
                    work.push(s);
                }
            }
        }
    }
    out
}

/// `dmin` by layered search over observation counts, forward from each state.
pub fn oracle_dmin(m: &DesModel) -> Vec<ExtNat> {
    let n = m.state_count();
    m.states()
        .map(|q| {
            let mut layer = silent_reach(m, &BTreeSet::from([q]));
            for k in 0..=n as u32 {
                if layer.iter().any(|&s| m.is_faulty(s)) {
                    return ExtNat::Fin(k);
                }
                layer = one_observation(m, &layer, None);
                if layer.is_empty() {
                    break;
                }
            }
            ExtNat::Inf
        })
        .collect()
}

/// Non-faulty states that can reach a non-faulty cycle without touching F.
pub fn oracle_avoid_set(m: &DesModel) -> BTreeSet<StateId> {
    let safe_succ = |q: StateId| -> Vec<StateId> {
        m.transitions()
            .iter()
            .filter(|t| t.source == q && !m.is_faulty(t.target))
            .map(|t| t.target)
            .collect()
    };
    let reach_from = |q: StateId| -> BTreeSet<StateId> {
        let mut seen = BTreeSet::new();
        let mut work = safe_succ(q);
        while let Some(s) = work.pop() {
            if seen.insert(s) {
                work.extend(safe_succ(s));
            }
        }
        seen
    };
    let safe: Vec<StateId> = m.states().filter(|&q| !m.is_faulty(q)).collect();
    let on_cycle: BTreeSet<StateId> = safe
        .iter()
        .copied()
        .filter(|&q| reach_from(q).contains(&q))
        .collect();
    safe.into_iter()
        .filter(|&q| on_cycle.contains(&q) || reach_from(q).iter().any(|s| on_cycle.contains(s)))
        .collect()
}

/// `dmax` by enumerating every path that stays outside F.
pub fn oracle_dmax(m: &DesModel) -> Vec<ExtNat> {
    let avoid = oracle_avoid_set(m);
    fn longest(m: &DesModel, q: StateId, depth: usize) -> u32 {
        assert!(depth <= m.state_count(), "path longer than |Q| outside F and N");
        m.transitions()
            .iter()
            .filter(|t| t.source == q && !m.is_faulty(t.target))
            .map(|t| m.cost(t.event) + longest(m, t.target, depth + 1))
            .max()
            .unwrap_or(0)
    }
    m.states()
        .map(|q| {
            if m.is_faulty(q) {
                ExtNat::ZERO
            } else if avoid.contains(&q) {
                ExtNat::Inf
            } else {
                ExtNat::Fin(longest(m, q, 0) + 1)
            }
        })
        .collect()
}

// ---------------------------------------------------------------------------
// beliefs

/// Every reachable belief, by subset construction from the definition.
pub fn oracle_beliefs(m: &DesModel, cap: usize) -> Result<Vec<BTreeSet<StateId>>, OracleError> {
    let start = silent_reach(m, &BTreeSet::from([m.initial()]));
    let mut seen: BTreeSet<BTreeSet<StateId>> = BTreeSet::from([start.clone()]);
    let mut order = vec![start.clone()];
    let mut work = VecDeque::from([start]);
    let observable: Vec<EventId> = m.observable_events().collect();
    while let Some(b) = work.pop_front() {
        for &e in &observable {
            let next = one_observation(m, &b, Some(e));
            if next.is_empty() || seen.contains(&next) {
                continue;
            }
            if seen.len() >= cap {
                return Err(OracleError::CapExceeded(cap));
            }
            seen.insert(next.clone());
            order.push(next.clone());
            work.push_back(next);
        }
    }
    Ok(order)
}

/// Unordered pairs co-occurring in some reachable belief.
pub fn oracle_pairs(m: &DesModel, cap: usize) -> Result<BTreeSet<StatePair>, OracleError> {
    let mut out = BTreeSet::new();
    for b in oracle_beliefs(m, cap)? {
        for &x in &b {
            for &y in &b {
                if x <= y {
                    out.insert(StatePair(x, y));
                }
            }
        }
    }
    Ok(out)
}

/// Predictability from the enumerated beliefs: no belief hull may strictly
/// contain `(i,j)`.
pub fn oracle_is_ij_predictable(
    m: &DesModel,
    i: u32,
    j: ExtNat,
    cap: usize,
) -> Result<bool, OracleError> {
    let query = TimeInterval::new(i, j).expect("oracle queries need i <= j");
    let dmin = oracle_dmin(m);
    let dmax = oracle_dmax(m);
    let beliefs = oracle_beliefs(m, cap)?;
    Ok(decide_from_beliefs(m, &dmin, &dmax, &beliefs, query))
}

fn decide_from_beliefs(
    m: &DesModel,
    dmin: &[ExtNat],
    dmax: &[ExtNat],
    beliefs: &[BTreeSet<StateId>],
    query: TimeInterval,
) -> bool {
    let init = dmin[m.initial().index()];
    if init == ExtNat::Inf {
        return true;
    }
    if query.lo() > init {
        return false;
    }
    !beliefs.iter().any(|b| {
        let lo = b.iter().map(|q| dmin[q.index()]).min().unwrap();
        let hi = b.iter().map(|q| dmax[q.index()]).max().unwrap();
        let hull = TimeInterval::new(lo, hi).unwrap();
        query.is_strict_subset(&hull)
    })
}

// ---------------------------------------------------------------------------
// cross-checking

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CrossCheck {
    pub dmin_match: bool,
    pub dmax_match: bool,
    pub pairs_match: bool,
    pub queries_checked: usize,
    /// `(i, j, main answer, oracle answer)` for every disagreement.
    pub query_mismatches: Vec<(u32, ExtNat, bool, bool)>,
}

impl CrossCheck {
    pub fn all_match(&self) -> bool {
        self.dmin_match && self.dmax_match && self.pairs_match && self.query_mismatches.is_empty()
    }
}

/// Compares distances, pair sets and every query with `i, j <= |Q| + 1`
/// (plus `j = inf`) between the main algorithms and the oracle.
pub fn crosscheck(m: &DesModel, cap: usize) -> Result<CrossCheck, OracleError> {
    let d = DistanceTable::compute(m);
    let t = build_twin(m);
    let f = compute_frontier(m, &d, &t);

    let dmin = oracle_dmin(m);
    let dmax = oracle_dmax(m);
    let beliefs = oracle_beliefs(m, cap)?;
    let oracle_pair_set = oracle_pairs(m, cap)?;
    let main_pairs: BTreeSet<StatePair> = t.pairs().iter().copied().collect();

    let bound = m.state_count() as u32 + 1;
    let mut checked = 0;
    let mut mismatches = Vec::new();
    for i in 0..=bound {
        for j in (i..=bound).map(ExtNat::Fin).chain([ExtNat::Inf]) {
            let main = f.is_ij_predictable(i, j).unwrap().predictable;
            let query = TimeInterval::new(i, j).unwrap();
            let reference = decide_from_beliefs(m, &dmin, &dmax, &beliefs, query);
            checked += 1;
            if main != reference {
                mismatches.push((i, j, main, reference));
            }
        }
    }
    Ok(CrossCheck {
        dmin_match: d.dmin_table() == dmin.as_slice(),
        dmax_match: d.dmax_table() == dmax.as_slice(),
        pairs_match: main_pairs == oracle_pair_set,
        queries_checked: checked,
        query_mismatches: mismatches,
    })
}

#[derive(Debug, Clone)]
pub struct RandomCrossCheck {
    pub models: usize,
    pub queries: usize,
    /// `(model index, report)` for every model with a disagreement.
    pub failures: Vec<(usize, CrossCheck)>,
}

/// Cross-checks `count` random valid models derived from `cfg.seed`.
pub fn crosscheck_random(cfg: &OracleConfig, count: usize, exec: Exec) -> RandomCrossCheck {
    let reports = exec.map_range(count, |k| {
        let m = random_model(cfg, k as u64);
        crosscheck(&m, cfg.belief_cap).expect("random models are small")
    });
    let queries = reports.iter().map(|r| r.queries_checked).sum();
    let failures = reports
        .into_iter()
        .enumerate()
        .filter(|(_, r)| !r.all_match())
        .collect();
    RandomCrossCheck {
        models: count,
        queries,
        failures,
    }
}

// ---------------------------------------------------------------------------
// random models

/// The `index`-th random model of the stream seeded by `cfg.seed`.
///
/// Faulty states only get transitions into faulty states and every state
/// gets at least one transition; candidates that still fail validation
/// (unobservable cycles) are discarded and redrawn.
pub fn random_model(cfg: &OracleConfig, index: u64) -> DesModel {
    let mut rng = seeded(cfg.seed, index);
    loop {
        let m = draw_model(cfg, &mut rng);
        if validate(&m).is_clean() {
            return m;
        }
    }
}

fn draw_model(cfg: &OracleConfig, rng: &mut ChaCha8Rng) -> DesModel {
    let n = rng.gen_range(1..=cfg.max_states);
    let k = rng.gen_range(1..=cfg.max_events);
    let mut b = ModelBuilder::new();
    let events: Vec<EventId> = (0..k)
        .map(|i| {
            let observable = rng.gen_bool(cfg.observable_prob);
            b.event(&format!("e{i}"), observable).unwrap()
        })
        .collect();
    let states: Vec<StateId> = (0..n).map(|i| b.state(&format!("q{i}")).unwrap()).collect();
    b.initial(states[0]);
    let faulty: Vec<bool> = (0..n).map(|i| i > 0 && rng.gen_bool(cfg.fault_prob)).collect();
    let faulty_states: Vec<StateId> = states.iter().copied().filter(|q| faulty[q.index()]).collect();
    for (i, &q) in states.iter().enumerate() {
        if faulty[i] {
            b.fault(q);
        }
        let targets: &[StateId] = if faulty[i] { &faulty_states } else { &states };
        let degree = rng.gen_range(1..=cfg.max_out_degree);
        for _ in 0..degree {
            let e = *events.choose(rng).unwrap();
            let t = *targets.choose(rng).unwrap();
            // Duplicate draws are simply dropped.
            let _ = b.transition(q, e, t);
        }
    }
    b.build().unwrap()
}

// ---------------------------------------------------------------------------
// run sampling

/// A random path of `steps` transitions from the initial state.
pub fn sample_run(m: &DesModel, rng: &mut impl Rng, steps: usize) -> (Vec<EventId>, Vec<StateId>) {
    let mut states = vec![m.initial()];
    let mut events = Vec::with_capacity(steps);
    for _ in 0..steps {
        let q = *states.last().unwrap();
        let choices: Vec<_> = m.outgoing(q).collect();
        let t = choices.choose(rng).expect("model is live");
        events.push(t.event);
        states.push(t.target);
    }
    (events, states)
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct SoundnessReport {
    pub runs: usize,
    pub checks: usize,
    pub violations: usize,
}

/// Optimal predictions along every prefix of a run, alongside the
/// observation count of each prefix.
fn prefix_predictions(m: &DesModel, d: &DistanceTable, events: &[EventId]) -> Vec<(u32, TimeInterval)> {
    let mut b = initial_belief(m, d);
    let mut count = 0;
    let mut out = vec![(0, b.interval())];
    for &e in events {
        if m.is_observable(e) {
            b = belief_step(m, d, &b, e).expect("a real run is never impossible");
            count += 1;
        }
        out.push((count, b.interval()));
    }
    out
}

/// Checks the predictor conditions on sampled runs: for prefixes `u1 ⊑ u2`
/// with prediction `(x, y)` after `u1` and `g` observations in between,
/// `g < x` forbids a faulty end state and `g >= y` requires one.
pub fn check_predictor_soundness(
    m: &DesModel,
    d: &DistanceTable,
    cfg: &OracleConfig,
    exec: Exec,
) -> SoundnessReport {
    let per_run = exec.map_range(cfg.runs, |r| {
        let mut rng = seeded(cfg.seed, r as u64);
        let (events, states) = sample_run(m, &mut rng, cfg.run_length);
        let preds = prefix_predictions(m, d, &events);
        let mut checks = 0;
        let mut violations = 0;
        for k1 in 0..preds.len() {
            let (c1, pred) = preds[k1];
            for k2 in k1..preds.len() {
                let gap = ExtNat::Fin(preds[k2].0 - c1);
                let faulty = m.is_faulty(states[k2]);
                checks += 1;
                if (gap < pred.lo() && faulty) || (gap >= pred.hi() && !faulty) {
                    violations += 1;
                }
            }
        }
        (checks, violations)
    });
    SoundnessReport {
        runs: cfg.runs,
        checks: per_run.iter().map(|r| r.0).sum(),
        violations: per_run.iter().map(|r| r.1).sum(),
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct IntervalCoverage {
    pub faulty_runs: usize,
    /// Faulty runs with no prefix prediction inside the target interval.
    pub uncovered: usize,
}

/// For each sampled run that reaches F, whether some prefix was predicted
/// within `target`.
pub fn check_interval_coverage(
    m: &DesModel,
    d: &DistanceTable,
    target: TimeInterval,
    cfg: &OracleConfig,
    exec: Exec,
) -> IntervalCoverage {
    let per_run = exec.map_range(cfg.runs, |r| {
        let mut rng = seeded(cfg.seed ^ 0xC0FFEE, r as u64);
        let (events, states) = sample_run(m, &mut rng, cfg.run_length);
        if !states.iter().any(|&q| m.is_faulty(q)) {
            return None;
        }
        let preds = prefix_predictions(m, d, &events);
        Some(preds.iter().any(|(_, p)| p.is_subset(&target)))
    });
    IntervalCoverage {
        faulty_runs: per_run.iter().flatten().count(),
        uncovered: per_run.iter().flatten().filter(|&&ok| !ok).count(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;
    use ExtNat::{Fin, Inf};

    #[test]
    fn fig1_tables() {
        let m = fixtures::fig1();
        let names = ["A", "B", "C", "D", "E", "F", "G"];
        let dmin = oracle_dmin(&m);
        let dmax = oracle_dmax(&m);
        let expect_min = [3, 3, 3, 2, 2, 1, 0];
        let expect_max = [Inf, Inf, Inf, Inf, Fin(2), Fin(1), Fin(0)];
        for (k, name) in names.iter().enumerate() {
            let q = m.state_by_name(name).unwrap().index();
            assert_eq!(dmin[q], Fin(expect_min[k]), "dmin({name})");
            assert_eq!(dmax[q], expect_max[k], "dmax({name})");
        }
    }

    #[test]
    fn trivial_shapes() {
        let mut b = ModelBuilder::new();
        b.event("a", true).unwrap();
        let s = b.state("S").unwrap();
        b.initial(s);
        b.trans("S", "a", "S").unwrap();
        let m = b.build().unwrap();
        assert_eq!(oracle_dmin(&m), vec![Inf]);
        assert_eq!(oracle_dmax(&m), vec![Inf]);

        // Chain of k observable steps into an absorbing fault.
        let k = 5;
        let mut b = ModelBuilder::new();
        b.event("a", true).unwrap();
        for i in 0..k {
            b.trans(&format!("s{i}"), "a", &format!("s{}", i + 1)).unwrap();
        }
        b.trans(&format!("s{k}"), "a", &format!("s{k}")).unwrap();
        let s0 = b.state("s0").unwrap();
        b.initial(s0);
        let last = b.state(&format!("s{k}")).unwrap();
        b.fault(last);
        let m = b.build().unwrap();
        assert_eq!(oracle_dmin(&m)[s0.index()], Fin(k));
    }

    #[test]
    fn fig3a_pairs() {
        let m = fixtures::fig3a(3);
        let pairs = oracle_pairs(&m, 1024).unwrap();
        let ordered: usize = pairs.iter().map(|p| if p.is_diagonal() { 1 } else { 2 }).sum();
        assert_eq!(ordered, 26);
        let m = fixtures::fig2a();
        assert!(oracle_pairs(&m, 1024).unwrap().iter().all(StatePair::is_diagonal));
    }

    #[test]
    fn fig_queries() {
        let m = fixtures::fig1();
        assert!(oracle_is_ij_predictable(&m, 1, Fin(2), 1024).unwrap());
        assert!(!oracle_is_ij_predictable(&m, 2, Fin(2), 1024).unwrap());
        let m = fixtures::fig2b();
        assert!(!oracle_is_ij_predictable(&m, 1, Fin(1), 1024).unwrap());
        assert_eq!(oracle_beliefs(&fixtures::fig1(), 2), Err(OracleError::CapExceeded(2)));
    }

    #[test]
    fn fixtures_cross_check() {
        for m in [fixtures::fig1(), fixtures::fig2a(), fixtures::fig2b(), fixtures::fig3a(3)] {
            let r = crosscheck(&m, 1024).unwrap();
            assert!(r.all_match(), "{r:?}");
        }
    }

    #[test]
    fn random_models_are_valid_and_reproducible() {
        let cfg = OracleConfig::default();
        for k in 0..50 {
            let m = random_model(&cfg, k);
            assert!(validate(&m).is_clean());
            assert!(m.state_count() <= cfg.max_states);
            assert_eq!(m, random_model(&cfg, k));
        }
    }
}
