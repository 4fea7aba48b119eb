//! Online optimal prediction by belief-state tracking.
//!
//! The belief after observations `o` is every state some trace with
//! projection `o` can reach. The optimal prediction is the hull of the
//! member intervals, attained by two members (lowest `dmin`, highest `dmax`).

use std::collections::{HashMap, VecDeque};

use thiserror::Error;

use crate::distances::DistanceTable;
use crate::interval::TimeInterval;
use crate::model::{DesModel, EventId, StateId};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum PredictError {
    #[error("observation `{0}` is impossible from the current belief")]
    ImpossibleObservation(String),
    #[error("event `{0}` is not observable")]
    NotObservable(String),
    #[error("unknown event `{0}`")]
    UnknownEvent(String),
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("belief automaton exceeds {cap} nodes ({discovered} discovered, {expanded} expanded)")]
pub struct CapExceeded {
    pub cap: usize,
    pub discovered: usize,
    pub expanded: usize,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BeliefState {
    members: Vec<StateId>,
    interval: TimeInterval,
    witnesses: (StateId, StateId),
}

impl BeliefState {
    /// Builds a belief from a non-empty member set.
    fn from_members(d: &DistanceTable, mut members: Vec<StateId>) -> BeliefState {
        members.sort_unstable();
        members.dedup();
        let lo_state = *members
            .iter()
            .min_by_key(|&&q| (d.dmin(q), q))
            .expect("beliefs are never empty");
        let hi_state = *members
            .iter()
            .max_by_key(|&&q| (d.dmax(q), std::cmp::Reverse(q)))
            .unwrap();
        let interval = d.state_interval(lo_state).hull(&d.state_interval(hi_state));
        BeliefState {
            members,
            interval,
            witnesses: (lo_state, hi_state),
        }
    }

    /// Sorted member states.
    pub fn members(&self) -> &[StateId] {
        &self.members
    }

    pub fn interval(&self) -> TimeInterval {
        self.interval
    }

    /// Members attaining the lower and the upper bound of [`Self::interval`].
    pub fn witnesses(&self) -> (StateId, StateId) {
        self.witnesses
    }

    pub fn contains_faulty(&self, m: &DesModel) -> bool {
        self.members.iter().any(|&q| m.is_faulty(q))
    }
}

/// Unobservable closure of the initial state.
pub fn initial_belief(m: &DesModel, d: &DistanceTable) -> BeliefState {
    let mut set = vec![m.initial()];
    m.unobservable_closure(&mut set);
    BeliefState::from_members(d, set)
}

/// Successor belief after observing `e`.
pub fn belief_step(
    m: &DesModel,
    d: &DistanceTable,
    b: &BeliefState,
    e: EventId,
) -> Result<BeliefState, PredictError> {
    if !m.is_observable(e) {
        return Err(PredictError::NotObservable(m.event_name(e).to_string()));
    }
    // Members are already closed under unobservable moves.
    let mut next: Vec<StateId> = b
        .members
        .iter()
        .flat_map(|&q| m.outgoing(q).filter(|t| t.event == e).map(|t| t.target))
        .collect();
    next.sort_unstable();
    next.dedup();
    if next.is_empty() {
        return Err(PredictError::ImpossibleObservation(m.event_name(e).to_string()));
    }
    m.unobservable_closure(&mut next);
    Ok(BeliefState::from_members(d, next))
}

/// Optimal prediction after the whole sequence.
pub fn predict_sequence(
    m: &DesModel,
    d: &DistanceTable,
    obs: &[EventId],
) -> Result<TimeInterval, PredictError> {
    let mut b = initial_belief(m, d);
    for &e in obs {
        b = belief_step(m, d, &b, e)?;
    }
    Ok(b.interval())
}

/// A single-owner streaming predictor.
#[derive(Debug, Clone)]
pub struct PredictorSession<'a> {
    model: &'a DesModel,
    distances: &'a DistanceTable,
    belief: BeliefState,
    consumed: usize,
}

impl<'a> PredictorSession<'a> {
    pub fn new(model: &'a DesModel, distances: &'a DistanceTable) -> Self {
        PredictorSession {
            model,
            distances,
            belief: initial_belief(model, distances),
            consumed: 0,
        }
    }

    pub fn belief(&self) -> &BeliefState {
        &self.belief
    }

    pub fn prediction(&self) -> TimeInterval {
        self.belief.interval()
    }

    pub fn consumed(&self) -> usize {
        self.consumed
    }

    /// Feeds one observation. On error the session is left unchanged.
    pub fn observe(&mut self, e: EventId) -> Result<TimeInterval, PredictError> {
        self.belief = belief_step(self.model, self.distances, &self.belief, e)?;
        self.consumed += 1;
        Ok(self.belief.interval())
    }

    /// Feeds one observation by event name.
    pub fn observe_name(&mut self, name: &str) -> Result<TimeInterval, PredictError> {
        let e = self
            .model
            .event_by_name(name)
            .ok_or_else(|| PredictError::UnknownEvent(name.to_string()))?;
        self.observe(e)
    }
}

/// Deterministic automaton over observable events whose nodes are beliefs.
#[derive(Debug, Clone)]
pub struct BeliefAutomaton {
    nodes: Vec<BeliefState>,
    /// Per node, `(event, successor)` sorted by event.
    edges: Vec<Vec<(EventId, usize)>>,
}

impl BeliefAutomaton {
    pub const DEFAULT_CAP: usize = 1 << 16;

    pub fn nodes(&self) -> &[BeliefState] {
        &self.nodes
    }

    pub fn initial(&self) -> usize {
        0
    }

    pub fn edges(&self, node: usize) -> &[(EventId, usize)] {
        &self.edges[node]
    }

    pub fn edge_count(&self) -> usize {
        self.edges.iter().map(Vec::len).sum()
    }

    pub fn next(&self, node: usize, e: EventId) -> Option<usize> {
        self.edges[node]
            .binary_search_by_key(&e, |&(ev, _)| ev)
            .ok()
            .map(|i| self.edges[node][i].1)
    }

    /// Prediction after `obs`, in constant time per observation.
    pub fn predict(&self, obs: &[EventId]) -> Option<TimeInterval> {
        let mut at = self.initial();
        for &e in obs {
            at = self.next(at, e)?;
        }
        Some(self.nodes[at].interval())
    }
}

/// Breadth-first subset construction of every reachable belief.
pub fn compile_predictor(
    m: &DesModel,
    d: &DistanceTable,
    cap: usize,
) -> Result<BeliefAutomaton, CapExceeded> {
    assert!(cap >= 1, "cap must be positive");
    let observable: Vec<EventId> = m.observable_events().collect();
    let mut nodes = vec![initial_belief(m, d)];
    let mut edges: Vec<Vec<(EventId, usize)>> = vec![Vec::new()];
    let mut index: HashMap<Vec<StateId>, usize> = HashMap::new();
    index.insert(nodes[0].members.clone(), 0);
    let mut queue = VecDeque::from([0usize]);
    let mut expanded = 0;

    while let Some(at) = queue.pop_front() {
        for &e in &observable {
            let Ok(next) = belief_step(m, d, &nodes[at], e) else {
                continue;
            };
            let target = match index.get(&next.members) {
                Some(&i) => i,
                None => {
                    if nodes.len() == cap {
                        return Err(CapExceeded {
                            cap,
                            discovered: nodes.len() + 1,
                            expanded,
                        });
                    }
                    let i = nodes.len();
                    index.insert(next.members.clone(), i);
                    nodes.push(next);
                    edges.push(Vec::new());
                    queue.push_back(i);
                    i
                }
            };
            edges[at].push((e, target));
        }
        expanded += 1;
    }
    for list in &mut edges {
        list.sort_by_key(|&(e, _)| e);
    }
    Ok(BeliefAutomaton { nodes, edges })
}
