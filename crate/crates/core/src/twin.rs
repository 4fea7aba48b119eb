//! Reachable part of the twin plant, i.e. the relation `q1 ~ q2`
//! ("some observation sequence leaves both `q1` and `q2` possible").
//!
//! Observable events move both components in lockstep; unobservable events
//! move one component at a time. Pairs are stored unordered since the
//! reachable set is symmetric. The search is a 0/1 BFS in which lockstep
//! moves cost one observation, so recorded parents give shortest
//! observation witnesses.

use std::collections::{HashMap, VecDeque};

use thiserror::Error;

use crate::model::{DesModel, EventId, StateId};

/// Canonical unordered pair, smaller index first.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct StatePair(pub StateId, pub StateId);

impl StatePair {
    pub fn new(a: StateId, b: StateId) -> StatePair {
        if a <= b {
            StatePair(a, b)
        } else {
            StatePair(b, a)
        }
    }

    pub fn is_diagonal(&self) -> bool {
        self.0 == self.1
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
struct Parent {
    prev: u32,
    /// Observable event of a lockstep move, `None` for an unobservable one.
    label: Option<EventId>,
}

#[derive(Debug, Clone, Copy, Default)]
pub struct TwinOptions {
    /// Record parent links so [`TwinReachability::witness_observations`] works.
    pub record_parents: bool,
    /// Record explored edges between pairs (for DOT output).
    pub record_edges: bool,
    /// Never take the fully-observable shortcut.
    pub force_generic: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum TwinError {
    #[error("witnesses were not recorded for this twin plant")]
    NoWitness,
    #[error("pair ({0}, {1}) is not reachable")]
    NotReachable(String, String),
}

#[derive(Debug, Clone)]
pub struct TwinReachability {
    pairs: Vec<StatePair>,
    index: HashMap<StatePair, u32>,
    parents: Option<Vec<Option<Parent>>>,
    edges: Option<Vec<(u32, Option<EventId>, u32)>>,
    explored_transitions: usize,
    fully_observable_fastpath: bool,
}

impl TwinReachability {
    /// Pairs in discovery order; the first is always `{init, init}`.
    pub fn pairs(&self) -> &[StatePair] {
        &self.pairs
    }

    /// Number of unordered pairs.
    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }

    /// Number of reachable ordered pairs `⟨q1, q2⟩`, as a product automaton counts them.
    pub fn ordered_len(&self) -> usize {
        self.pairs
            .iter()
            .map(|p| if p.is_diagonal() { 1 } else { 2 })
            .sum()
    }

    pub fn explored_transitions(&self) -> usize {
        self.explored_transitions
    }

    pub fn used_fastpath(&self) -> bool {
        self.fully_observable_fastpath
    }

    pub fn sim_related(&self, q1: StateId, q2: StateId) -> bool {
        self.index.contains_key(&StatePair::new(q1, q2))
    }

    pub fn position(&self, pair: StatePair) -> Option<usize> {
        self.index.get(&pair).map(|&i| i as usize)
    }

    pub fn has_witnesses(&self) -> bool {
        self.parents.is_some()
    }

    pub fn edges(&self) -> Option<&[(u32, Option<EventId>, u32)]> {
        self.edges.as_deref()
    }

    /// Shortest observation sequence after which both states are possible.
    pub fn witness_observations(
        &self,
        m: &DesModel,
        q1: StateId,
        q2: StateId,
    ) -> Result<Vec<EventId>, TwinError> {
        let parents = self.parents.as_ref().ok_or(TwinError::NoWitness)?;
        let mut at = *self.index.get(&StatePair::new(q1, q2)).ok_or_else(|| {
            TwinError::NotReachable(m.state_name(q1).to_string(), m.state_name(q2).to_string())
        })?;
        let mut labels = Vec::new();
        while let Some(p) = parents[at as usize] {
            if let Some(e) = p.label {
                labels.push(e);
            }
            at = p.prev;
        }
        labels.reverse();
        Ok(labels)
    }
}

struct Explorer {
    pairs: Vec<StatePair>,
    index: HashMap<StatePair, u32>,
    dist: Vec<u32>,
    parents: Option<Vec<Option<Parent>>>,
    edges: Option<Vec<(u32, Option<EventId>, u32)>>,
    queue: VecDeque<u32>,
    explored: usize,
}

impl Explorer {
    fn new(opts: TwinOptions) -> Self {
        Explorer {
            pairs: Vec::new(),
            index: HashMap::new(),
            dist: Vec::new(),
            parents: opts.record_parents.then(Vec::new),
            edges: opts.record_edges.then(Vec::new),
            queue: VecDeque::new(),
            explored: 0,
        }
    }

    fn root(&mut self, pair: StatePair) {
        self.index.insert(pair, 0);
        self.pairs.push(pair);
        self.dist.push(0);
        if let Some(p) = &mut self.parents {
            p.push(None);
        }
        self.queue.push_back(0);
    }

    /// Relaxes the move `from --label--> pair`. Zero-cost moves go to the front.
    fn relax(&mut self, from: u32, pair: StatePair, label: Option<EventId>) {
        self.explored += 1;
        let cost = u32::from(label.is_some());
        let nd = self.dist[from as usize] + cost;
        let idx = match self.index.get(&pair) {
            Some(&i) => {
                if nd >= self.dist[i as usize] {
                    if let Some(e) = &mut self.edges {
                        e.push((from, label, i));
                    }
                    return;
                }
                self.dist[i as usize] = nd;
                i
            }
            None => {
                let i = self.pairs.len() as u32;
                self.index.insert(pair, i);
                self.pairs.push(pair);
                self.dist.push(nd);
                if let Some(p) = &mut self.parents {
                    p.push(None);
                }
                i
            }
        };
        if let Some(p) = &mut self.parents {
            p[idx as usize] = Some(Parent { prev: from, label });
        }
        if let Some(e) = &mut self.edges {
            e.push((from, label, idx));
        }
        if cost == 0 {
            self.queue.push_front(idx);
        } else {
            self.queue.push_back(idx);
        }
    }

    fn finish(self, fastpath: bool) -> TwinReachability {
        TwinReachability {
            pairs: self.pairs,
            index: self.index,
            parents: self.parents,
            edges: self.edges,
            explored_transitions: self.explored,
            fully_observable_fastpath: fastpath,
        }
    }
}

pub fn build_twin(m: &DesModel) -> TwinReachability {
    build_twin_with(m, TwinOptions::default())
}

pub fn build_twin_with(m: &DesModel, opts: TwinOptions) -> TwinReachability {
    if m.fully_observable() && m.is_deterministic() && !opts.force_generic {
        return build_diagonal(m, opts);
    }
    let mut ex = Explorer::new(opts);
    let init = m.initial();
    ex.root(StatePair(init, init));
    let mut done = Vec::<bool>::new();

    while let Some(idx) = ex.queue.pop_front() {
        if done.len() <= idx as usize {
            done.resize(ex.pairs.len().max(idx as usize + 1), false);
        }
        if done[idx as usize] {
            continue;
        }
        done[idx as usize] = true;
        let StatePair(q1, q2) = ex.pairs[idx as usize];

        // Unobservable moves of either component.
        for t in m.outgoing(q1).filter(|t| !m.is_observable(t.event)) {
            ex.relax(idx, StatePair::new(t.target, q2), None);
        }
        if q1 != q2 {
            for t in m.outgoing(q2).filter(|t| !m.is_observable(t.event)) {
                ex.relax(idx, StatePair::new(q1, t.target), None);
            }
        }

        // Lockstep moves: merge the two event-sorted outgoing lists.
        let left: Vec<_> = m.outgoing(q1).filter(|t| m.is_observable(t.event)).collect();
        let right: Vec<_> = m.outgoing(q2).filter(|t| m.is_observable(t.event)).collect();
        let (mut i, mut j) = (0, 0);
        while i < left.len() && j < right.len() {
            let (ei, ej) = (left[i].event, right[j].event);
            if ei < ej {
                i += 1;
            } else if ej < ei {
                j += 1;
            } else {
                let i_end = i + left[i..].iter().take_while(|t| t.event == ei).count();
                let j_end = j + right[j..].iter().take_while(|t| t.event == ej).count();
                for a in &left[i..i_end] {
                    for b in &right[j..j_end] {
                        // On the diagonal, (a, b) and (b, a) give the same pair.
                        if q1 == q2 && b.target < a.target {
                            continue;
                        }
                        ex.relax(idx, StatePair::new(a.target, b.target), Some(ei));
                    }
                }
                i = i_end;
                j = j_end;
            }
        }
    }
    ex.finish(false)
}

/// With every event observable and at most one successor per event, `~` is
/// the identity on reachable states.
fn build_diagonal(m: &DesModel, opts: TwinOptions) -> TwinReachability {
    let mut ex = Explorer::new(opts);
    let init = m.initial();
    ex.root(StatePair(init, init));
    while let Some(idx) = ex.queue.pop_front() {
        let StatePair(q, _) = ex.pairs[idx as usize];
        for t in m.outgoing(q) {
            // Plain BFS: all moves cost one, so first discovery is shortest.
            let pair = StatePair(t.target, t.target);
            if ex.index.contains_key(&pair) {
                ex.explored += 1;
                if let Some(e) = &mut ex.edges {
                    e.push((idx, Some(t.event), ex.index[&pair]));
                }
            } else {
                ex.relax(idx, pair, Some(t.event));
            }
        }
    }
    ex.finish(true)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;

    fn q(m: &DesModel, name: &str) -> StateId {
        m.state_by_name(name).unwrap()
    }

    fn names(m: &DesModel, evs: &[EventId]) -> Vec<String> {
        evs.iter().map(|&e| m.event_name(e).to_string()).collect()
    }

    #[test]
    fn fig1_relation() {
        let m = fixtures::fig1();
        let t = build_twin_with(
            &m,
            TwinOptions {
                record_parents: true,
                ..Default::default()
            },
        );
        assert!(!t.used_fastpath());
        assert!(t.sim_related(q(&m, "E"), q(&m, "F")));
        assert!(t.sim_related(q(&m, "F"), q(&m, "E")));
        assert!(!t.sim_related(q(&m, "E"), q(&m, "G")));
        for s in ["A", "B", "C", "D", "E", "F", "G"] {
            assert!(t.sim_related(q(&m, s), q(&m, s)), "{s} ~ {s}");
        }
        assert!(t.sim_related(q(&m, "A"), q(&m, "C")));
        assert!(t.sim_related(q(&m, "C"), q(&m, "C")));
        assert!(t.sim_related(q(&m, "B"), q(&m, "D")));
        assert!(!t.sim_related(q(&m, "A"), q(&m, "B")));

        let w = t.witness_observations(&m, q(&m, "E"), q(&m, "F")).unwrap();
        assert_eq!(names(&m, &w), ["a", "d"]);
        let w = t.witness_observations(&m, q(&m, "A"), q(&m, "C")).unwrap();
        assert!(w.is_empty());
        assert_eq!(t.len(), 10);
        assert_eq!(t.pairs()[0], StatePair(m.initial(), m.initial()));
    }

    #[test]
    fn non_transitive() {
        // B(ε) = {X, W, V}, every later belief is {Y, Z, V}.
        let mut b = crate::model::ModelBuilder::new();
        b.event("a", true).unwrap();
        b.event("h", false).unwrap();
        let x = b.state("X").unwrap();
        b.initial(x);
        b.trans("X", "a", "Y").unwrap();
        b.trans("Y", "a", "Y").unwrap();
        b.trans("X", "h", "W").unwrap();
        b.trans("W", "a", "Z").unwrap();
        b.trans("Z", "a", "Z").unwrap();
        b.trans("W", "h", "V").unwrap();
        b.trans("V", "a", "V").unwrap();
        let m = b.build().unwrap();
        let t = build_twin(&m);
        let (y, z, v) = (q(&m, "Y"), q(&m, "Z"), q(&m, "V"));
        let w = q(&m, "W");
        assert!(t.sim_related(x, w) && t.sim_related(x, v) && t.sim_related(y, z));
        assert!(t.sim_related(z, v));
        // Y ~ V and V ~ X, but not Y ~ X.
        assert!(t.sim_related(y, v) && !t.sim_related(x, y));
    }

    #[test]
    fn fully_observable_fastpath() {
        let m = fixtures::fig2a();
        let t = build_twin_with(
            &m,
            TwinOptions {
                record_parents: true,
                ..Default::default()
            },
        );
        assert!(t.used_fastpath());
        let pairs: Vec<_> = t.pairs().to_vec();
        assert_eq!(pairs.len(), 3);
        assert!(pairs.iter().all(StatePair::is_diagonal));
        let s1 = q(&m, "S1");
        assert_eq!(names(&m, &t.witness_observations(&m, s1, s1).unwrap()), ["a"]);

        let generic = build_twin_with(
            &m,
            TwinOptions {
                force_generic: true,
                ..Default::default()
            },
        );
        let mut a = generic.pairs().to_vec();
        let mut b = pairs;
        a.sort();
        b.sort();
        assert_eq!(a, b);
    }

    #[test]
    fn nondeterministic_full_observation_is_not_identity() {
        let mut b = crate::model::ModelBuilder::new();
        b.event("a", true).unwrap();
        b.trans("P", "a", "X").unwrap();
        b.trans("P", "a", "Y").unwrap();
        b.trans("X", "a", "X").unwrap();
        b.trans("Y", "a", "Y").unwrap();
        let p = b.state("P").unwrap();
        b.initial(p);
        let m = b.build().unwrap();
        let t = build_twin(&m);
        assert!(!t.used_fastpath());
        assert!(t.sim_related(q(&m, "X"), q(&m, "Y")));
    }

    #[test]
    fn witness_requires_parents() {
        let m = fixtures::fig1();
        let t = build_twin(&m);
        assert_eq!(
            t.witness_observations(&m, m.initial(), m.initial()),
            Err(TwinError::NoWitness)
        );
    }

    #[test]
    fn fig3a_counts() {
        for n in 1..=6usize {
            let m = fixtures::fig3a(n);
            let t = build_twin(&m);
            assert_eq!(t.ordered_len(), 2 * n * n + 2 * n + 2, "n = {n}");
            assert_eq!(t.len(), n * n + 2 * n + 2);
        }
    }
}
