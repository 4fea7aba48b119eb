//! Minimal and maximal observation distances to the faulty set.
//!
//! `dmin(q)` is the fewest observations on a path from `q` into F.
//! `dmax(q)` is one more than the most observations a path from `q` can emit
//! while staying outside F; it is `inf` for states in the avoid set `N`
//! (non-faulty states with an infinite path that never enters F) and `0` on F.

use crate::interval::{ExtNat, TimeInterval};
use crate::model::{DesModel, StateId};

/// How `dmax` is evaluated once `N` is known. Both produce identical tables.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum DmaxMode {
    /// Single pass in reverse topological order of the acyclic remainder.
    #[default]
    Topological,
    /// Relaxation sweeps until nothing changes. Kept for debugging.
    Fixpoint,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DistanceTable {
    dmin: Vec<ExtNat>,
    dmax: Vec<ExtNat>,
    avoid: Vec<bool>,
}

impl DistanceTable {
    pub fn compute(m: &DesModel) -> DistanceTable {
        Self::compute_with(m, DmaxMode::default())
    }

    pub fn compute_with(m: &DesModel, mode: DmaxMode) -> DistanceTable {
        let dmin = compute_dmin(m);
        let avoid = compute_avoid_set(m);
        let dmax = match mode {
            DmaxMode::Topological => compute_dmax(m, &avoid),
            DmaxMode::Fixpoint => compute_dmax_fixpoint(m, &avoid),
        };
        DistanceTable { dmin, dmax, avoid }
    }

    pub fn dmin(&self, q: StateId) -> ExtNat {
        self.dmin[q.index()]
    }

    pub fn dmax(&self, q: StateId) -> ExtNat {
        self.dmax[q.index()]
    }

    pub fn in_avoid_set(&self, q: StateId) -> bool {
        self.avoid[q.index()]
    }

    pub fn avoid_set(&self) -> Vec<StateId> {
        (0..self.avoid.len() as u32)
            .map(StateId)
            .filter(|&q| self.avoid[q.index()])
            .collect()
    }

    /// `(dmin(q), dmax(q))`.
    pub fn state_interval(&self, q: StateId) -> TimeInterval {
        TimeInterval::new(self.dmin(q), self.dmax(q))
            .expect("dmin never exceeds dmax for a validated model")
    }

    pub fn dmin_table(&self) -> &[ExtNat] {
        &self.dmin
    }

    pub fn dmax_table(&self) -> &[ExtNat] {
        &self.dmax
    }
}

/// 0/1-weighted shortest distance to F over reversed transitions.
///
/// Two FIFO buckets hold the frontier at distance `d` and `d + 1`; stale
/// entries are skipped on pop by a settled flag.
pub fn compute_dmin(m: &DesModel) -> Vec<ExtNat> {
    let n = m.state_count();
    let mut dist = vec![u32::MAX; n];
    let mut settled = vec![false; n];
    let mut current: Vec<StateId> = Vec::new();
    let mut next: Vec<StateId> = Vec::new();
    for q in m.faulty_states() {
        dist[q.index()] = 0;
        current.push(q);
    }
    let mut level = 0u32;
    // `current` is used as a FIFO via a read cursor so zero-cost pushes land behind it.
    let mut cursor = 0;
    loop {
        if cursor == current.len() {
            if next.is_empty() {
                break;
            }
            current.clear();
            std::mem::swap(&mut current, &mut next);
            cursor = 0;
            level += 1;
        }
        let q2 = current[cursor];
        cursor += 1;
        if settled[q2.index()] || dist[q2.index()] != level {
            continue;
        }
        settled[q2.index()] = true;
        for t in m.incoming(q2) {
            let q = t.source.index();
            let c = m.cost(t.event);
            let nd = level + c;
            if nd < dist[q] {
                dist[q] = nd;
                if c == 0 {
                    current.push(t.source);
                } else {
                    next.push(t.source);
                }
            }
        }
    }
    dist.into_iter()
        .map(|d| if d == u32::MAX { ExtNat::Inf } else { ExtNat::Fin(d) })
        .collect()
}

/// Non-faulty states with an infinite path avoiding F (greatest fixpoint),
/// as a membership mask.
///
/// Successor counting only considers targets outside F, so a state whose
/// every exit enters F is eliminated.
pub fn compute_avoid_set(m: &DesModel) -> Vec<bool> {
    let n = m.state_count();
    let mut in_n: Vec<bool> = m.states().map(|q| !m.is_faulty(q)).collect();
    let mut live_succ = vec![0usize; n];
    let mut removed = Vec::new();
    for q in m.states().filter(|&q| !m.is_faulty(q)) {
        live_succ[q.index()] = m.outgoing(q).filter(|t| !m.is_faulty(t.target)).count();
        if live_succ[q.index()] == 0 {
            in_n[q.index()] = false;
            removed.push(q);
        }
    }
    while let Some(q2) = removed.pop() {
        for t in m.incoming(q2) {
            let q = t.source.index();
            if in_n[q] {
                live_succ[q] -= 1;
                if live_succ[q] == 0 {
                    in_n[q] = false;
                    removed.push(t.source);
                }
            }
        }
    }
    in_n
}

/// Longest-path evaluation of `dmax` on `Q \ (F ∪ N)`.
///
/// Panics if that subgraph has a cycle, which would contradict `avoid`.
pub fn compute_dmax(m: &DesModel, avoid: &[bool]) -> Vec<ExtNat> {
    let n = m.state_count();
    let finite = |q: StateId| !m.is_faulty(q) && !avoid[q.index()];

    // Kahn's algorithm on edges q -> q' with both ends in the finite part;
    // a successor of a finite state is either faulty or finite itself.
    let mut pending = vec![0usize; n];
    for t in m.transitions() {
        if finite(t.source) && !m.is_faulty(t.target) {
            assert!(
                finite(t.target),
                "state {} has a successor in the avoid set but is not in it",
                m.state_name(t.source)
            );
            pending[t.source.index()] += 1;
        }
    }
    let mut order: Vec<StateId> = m.states().filter(|&q| finite(q) && pending[q.index()] == 0).collect();
    let mut dmax: Vec<ExtNat> = m
        .states()
        .map(|q| {
            if m.is_faulty(q) {
                ExtNat::ZERO
            } else if avoid[q.index()] {
                ExtNat::Inf
            } else {
                ExtNat::Fin(1)
            }
        })
        .collect();

    let mut head = 0;
    while head < order.len() {
        let q2 = order[head];
        head += 1;
        // Every finite successor of q2 was finalised before q2 entered the queue.
        let best = m
            .outgoing(q2)
            .filter(|t| !m.is_faulty(t.target))
            .filter_map(|t| dmax[t.target.index()].finite().map(|d| d + m.cost(t.event)))
            .max()
            .unwrap_or(0)
            .max(1);
        dmax[q2.index()] = ExtNat::Fin(best);
        for t in m.incoming(q2) {
            if finite(t.source) {
                let p = &mut pending[t.source.index()];
                *p -= 1;
                if *p == 0 {
                    order.push(t.source);
                }
            }
        }
    }
    let finite_count = m.states().filter(|&q| finite(q)).count();
    assert_eq!(
        order.len(),
        finite_count,
        "cycle outside F and N: avoid set is inconsistent"
    );
    dmax
}

/// Relaxation version of [`compute_dmax`]: sweep all transitions until stable.
pub fn compute_dmax_fixpoint(m: &DesModel, avoid: &[bool]) -> Vec<ExtNat> {
    let mut dmax: Vec<ExtNat> = m
        .states()
        .map(|q| {
            if m.is_faulty(q) {
                ExtNat::ZERO
            } else if avoid[q.index()] {
                ExtNat::Inf
            } else {
                ExtNat::Fin(1)
            }
        })
        .collect();
    let mut changed = true;
    while changed {
        changed = false;
        for t in m.transitions() {
            if m.is_faulty(t.source) || avoid[t.source.index()] || m.is_faulty(t.target) {
                continue;
            }
            let candidate = dmax[t.target.index()].plus(m.cost(t.event));
            if dmax[t.source.index()] < candidate {
                dmax[t.source.index()] = candidate;
                changed = true;
            }
        }
    }
    dmax
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;
    use ExtNat::{Fin, Inf};

    fn by_name(m: &DesModel, table: &[ExtNat], name: &str) -> ExtNat {
        table[m.state_by_name(name).unwrap().index()]
    }

    // Values below were produced by the brute-force routines in `oracle`.
    #[test]
    fn fig1_dmin() {
        let m = fixtures::fig1();
        let d = compute_dmin(&m);
        let expect = [("A", 3), ("B", 3), ("C", 3), ("D", 2), ("E", 2), ("F", 1), ("G", 0)];
        for (name, v) in expect {
            assert_eq!(by_name(&m, &d, name), Fin(v), "dmin({name})");
        }
    }

    #[test]
    fn fig1_avoid_and_dmax() {
        let m = fixtures::fig1();
        let t = DistanceTable::compute(&m);
        let names: Vec<_> = t.avoid_set().iter().map(|&q| m.state_name(q)).collect();
        assert_eq!(names, ["A", "B", "C", "D"]);
        let expect = [
            ("A", Inf),
            ("B", Inf),
            ("C", Inf),
            ("D", Inf),
            ("E", Fin(2)),
            ("F", Fin(1)),
            ("G", Fin(0)),
        ];
        for (name, v) in expect {
            assert_eq!(by_name(&m, t.dmax_table(), name), v, "dmax({name})");
        }
        let q = |n| m.state_by_name(n).unwrap();
        assert_eq!(t.state_interval(q("F")), TimeInterval::new(1, 1).unwrap());
        assert_eq!(t.state_interval(q("G")), TimeInterval::new(0, 0).unwrap());
        assert_eq!(t.state_interval(q("D")), TimeInterval::new(2, Inf).unwrap());
    }

    #[test]
    fn fig2_tables() {
        let m = fixtures::fig2a();
        let t = DistanceTable::compute(&m);
        let s0 = m.state_by_name("S0").unwrap();
        assert_eq!(t.dmin(s0), Fin(2));
        assert_eq!(t.avoid_set(), vec![s0]);

        let m = fixtures::fig2b();
        let t = DistanceTable::compute(&m);
        assert_eq!(t.dmax(m.state_by_name("S1").unwrap()), Fin(3));
        assert_eq!(t.dmax(m.state_by_name("S4").unwrap()), Fin(0));
    }

    #[test]
    fn exits_only_into_faults() {
        // Every path hits F; P's only exit is unobservable, so dmax is floored at 1.
        let mut b = crate::model::ModelBuilder::new();
        b.event("a", true).unwrap();
        b.event("h", false).unwrap();
        let p = b.state("P").unwrap();
        b.initial(p);
        b.trans("P", "h", "X").unwrap();
        b.trans("X", "a", "X").unwrap();
        let x = b.state("X").unwrap();
        b.fault(x);
        let m = b.build().unwrap();
        let t = DistanceTable::compute(&m);
        assert!(t.avoid_set().is_empty());
        assert_eq!(t.dmin(p), Fin(0));
        assert_eq!(t.dmax(p), Fin(1));
        assert_eq!(compute_dmax_fixpoint(&m, &compute_avoid_set(&m)), t.dmax_table());
    }

    #[test]
    fn faulty_states_are_zero_and_modes_agree() {
        for m in [fixtures::fig1(), fixtures::fig2a(), fixtures::fig2b(), fixtures::fig3a(3)] {
            let a = DistanceTable::compute_with(&m, DmaxMode::Topological);
            let b = DistanceTable::compute_with(&m, DmaxMode::Fixpoint);
            assert_eq!(a, b);
            for q in m.faulty_states() {
                assert_eq!(a.dmax(q), Fin(0));
                assert_eq!(a.dmin(q), Fin(0));
            }
        }
    }
}
