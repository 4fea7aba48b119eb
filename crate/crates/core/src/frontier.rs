//! `(i,j)`-predictability queries and the predictability frontier.
//!
//! Each reachable twin pair `{q1, q2}` contributes the hull of the two state
//! intervals. The system is `(i,j)`-predictable iff `i <= dmin(init)` and no
//! pair hull strictly contains `(i,j)`. Queries scan the deduplicated hulls
//! directly; the frontier array `p` (`p[x] = max hull.hi over hulls with
//! hull.lo = x`) is a summary kept for reporting.

use std::collections::HashMap;

use crate::distances::DistanceTable;
use crate::interval::{ExtNat, InvalidInterval, TimeInterval};
use crate::model::{DesModel, EventId, StateId};
use crate::par::Exec;
use crate::twin::{StatePair, TwinReachability};

/// One distinct hull together with the first pair (in discovery order) producing it.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PairHull {
    pub interval: TimeInterval,
    pub pair: StatePair,
    /// Shortest observations reaching the pair, when the twin recorded parents.
    pub witness: Option<Vec<EventId>>,
}

#[derive(Debug, Clone)]
pub struct PredictabilityFrontier {
    dmin_init: ExtNat,
    p: Vec<ExtNat>,
    hulls: Vec<PairHull>,
    vacuous: bool,
    state_count: usize,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct QueryVerdict {
    pub predictable: bool,
    /// Present iff the query fails because some pair hull strictly contains it.
    pub blocking: Option<PairHull>,
}

impl PredictabilityFrontier {
    pub fn dmin_init(&self) -> ExtNat {
        self.dmin_init
    }

    /// True iff no faulty state is reachable.
    pub fn is_vacuous(&self) -> bool {
        self.vacuous
    }

    /// `(i, p[i])` for every stored `i`.
    pub fn rows(&self) -> impl Iterator<Item = (u32, ExtNat)> + '_ {
        self.p.iter().enumerate().map(|(i, &v)| (i as u32, v))
    }

    pub fn p(&self, i: u32) -> Option<ExtNat> {
        self.p.get(i as usize).copied()
    }

    pub fn hulls(&self) -> &[PairHull] {
        &self.hulls
    }

    pub fn state_count(&self) -> usize {
        self.state_count
    }

    /// Decides `(i,j)`-predictability.
    pub fn is_ij_predictable(&self, i: u32, j: ExtNat) -> Result<QueryVerdict, InvalidInterval> {
        let query = TimeInterval::new(i, j)?;
        if self.vacuous {
            return Ok(QueryVerdict {
                predictable: true,
                blocking: None,
            });
        }
        if ExtNat::Fin(i) > self.dmin_init {
            return Ok(QueryVerdict {
                predictable: false,
                blocking: None,
            });
        }
        let blocking = self
            .hulls
            .iter()
            .find(|h| query.is_strict_subset(&h.interval))
            .cloned();
        Ok(QueryVerdict {
            predictable: blocking.is_none(),
            blocking,
        })
    }

    /// `(i,j)`-predictable for some finite `j`.
    ///
    /// Finite hull bounds never exceed `|Q|`, so any `j` above all of them
    /// behaves like every larger finite bound.
    pub fn is_i_predictable(&self, i: u32) -> bool {
        if self.vacuous {
            return true;
        }
        let j = self.saturating_bound().max(i);
        self.is_ij_predictable(i, ExtNat::Fin(j))
            .map(|v| v.predictable)
            .unwrap_or(false)
    }

    /// `i`-predictable for some `i >= 1`.
    pub fn is_predictable(&self) -> bool {
        self.is_i_predictable(1)
    }

    /// Largest `i >= 1` that is `i`-predictable, with the smallest `j` that
    /// works for it. `None` when nothing is, and for vacuous systems.
    pub fn best_horizon(&self) -> Option<(u32, u32)> {
        if self.vacuous {
            return None;
        }
        let top = self.p.len().saturating_sub(1) as u32;
        let i = (1..=top).rev().find(|&i| self.is_i_predictable(i))?;
        let j = self.min_finite_j(i)?;
        Some((i, j))
    }

    /// Smallest finite `j` with `(i,j)` predictable.
    pub fn min_finite_j(&self, i: u32) -> Option<u32> {
        let limit = self.saturating_bound().max(i);
        (i..=limit).find(|&j| {
            self.is_ij_predictable(i, ExtNat::Fin(j))
                .map(|v| v.predictable)
                .unwrap_or(false)
        })
    }

    /// One past the largest finite hull upper bound.
    fn saturating_bound(&self) -> u32 {
        self.hulls
            .iter()
            .filter_map(|h| h.interval.hi().finite())
            .max()
            .map_or(1, |v| v + 1)
    }

    /// Evaluates every query `(i, j)` with `i <= j` over `i in 0..=i_max`,
    /// `j in 0..=j_max` and `j = inf`. Rows are ordered by `i`, then `j`.
    pub fn query_grid(&self, i_max: u32, j_max: u32, exec: Exec) -> Vec<(u32, ExtNat, bool)> {
        let queries: Vec<(u32, ExtNat)> = (0..=i_max)
            .flat_map(|i| {
                (i..=j_max)
                    .map(ExtNat::Fin)
                    .chain(std::iter::once(ExtNat::Inf))
                    .map(move |j| (i, j))
            })
            .collect();
        exec.map(&queries, |&(i, j)| {
            let ok = self
                .is_ij_predictable(i, j)
                .expect("grid only contains i <= j")
                .predictable;
            (i, j, ok)
        })
    }
}

/// Builds the frontier from the twin pairs and state distances.
pub fn compute_frontier(
    m: &DesModel,
    d: &DistanceTable,
    t: &TwinReachability,
) -> PredictabilityFrontier {
    compute_frontier_with(m, d, t, Exec::default())
}

pub fn compute_frontier_with(
    m: &DesModel,
    d: &DistanceTable,
    t: &TwinReachability,
    exec: Exec,
) -> PredictabilityFrontier {
    let dmin_init = d.dmin(m.initial());
    let vacuous = dmin_init == ExtNat::Inf;
    let n = m.state_count() as u32;
    let top = match dmin_init {
        ExtNat::Fin(v) => v.min(n),
        ExtNat::Inf => n,
    };
    let mut p: Vec<ExtNat> = (0..=top).map(ExtNat::Fin).collect();

    let hull_of = |pair: &StatePair| d.state_interval(pair.0).hull(&d.state_interval(pair.1));
    let intervals = exec.map(t.pairs(), hull_of);

    let mut seen: HashMap<TimeInterval, usize> = HashMap::new();
    let mut hulls = Vec::new();
    for (pair, interval) in t.pairs().iter().zip(intervals) {
        let ExtNat::Fin(lo) = interval.lo() else {
            continue;
        };
        if let Some(slot) = p.get_mut(lo as usize) {
            *slot = (*slot).max(interval.hi());
        }
        seen.entry(interval).or_insert_with(|| {
            hulls.push(PairHull {
                interval,
                pair: *pair,
                witness: t.witness_observations(m, pair.0, pair.1).ok(),
            });
            hulls.len() - 1
        });
    }

    PredictabilityFrontier {
        dmin_init,
        p,
        hulls,
        vacuous,
        state_count: m.state_count(),
    }
}

/// Convenience: distances, twin plant (with witnesses) and frontier in one go.
pub fn analyze(m: &DesModel) -> (DistanceTable, TwinReachability, PredictabilityFrontier) {
    let d = DistanceTable::compute(m);
    let t = crate::twin::build_twin_with(
        m,
        crate::twin::TwinOptions {
            record_parents: true,
            ..Default::default()
        },
    );
    let f = compute_frontier(m, &d, &t);
    (d, t, f)
}

/// Names of the two states of a pair.
pub fn pair_names(m: &DesModel, pair: StatePair) -> (&str, &str) {
    (m.state_name(pair.0), m.state_name(pair.1))
}

#[doc(hidden)]
pub fn pair_of(m: &DesModel, a: &str, b: &str) -> Option<StatePair> {
    let q = |n: &str| -> Option<StateId> { m.state_by_name(n) };
    Some(StatePair::new(q(a)?, q(b)?))
}
