//! Partially observable finite state machines with a faulty state set.

use std::collections::HashMap;
use std::fmt;

use thiserror::Error;

/// Dense index into a model's state table.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct StateId(pub u32);

/// Dense index into a model's event table.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct EventId(pub u32);

impl StateId {
    #[inline]
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

impl EventId {
    #[inline]
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Transition {
    pub source: StateId,
    pub event: EventId,
    pub target: StateId,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ModelError {
    #[error("invalid name `{0}`: names must be non-empty and contain no whitespace")]
    InvalidName(String),
    #[error("event `{0}` declared twice")]
    DuplicateEvent(String),
    #[error("transition {0} declared twice")]
    DuplicateTransition(String),
    #[error("no initial state")]
    NoInitial,
    #[error("initial state `{0}` is faulty")]
    InitialFaulty(String),
}

/// Accumulates states, events and transitions; states are created on first use.
#[derive(Debug, Default, Clone)]
pub struct ModelBuilder {
    state_names: Vec<String>,
    state_index: HashMap<String, StateId>,
    event_names: Vec<String>,
    event_index: HashMap<String, EventId>,
    observable: Vec<bool>,
    transitions: Vec<Transition>,
    seen: std::collections::HashSet<Transition>,
    initial: Option<StateId>,
    faulty: Vec<bool>,
}

fn check_name(name: &str) -> Result<(), ModelError> {
    if name.is_empty() || name.chars().any(char::is_whitespace) {
        return Err(ModelError::InvalidName(name.to_string()));
    }
    Ok(())
}

impl ModelBuilder {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn state(&mut self, name: &str) -> Result<StateId, ModelError> {
        if let Some(&id) = self.state_index.get(name) {
            return Ok(id);
        }
        check_name(name)?;
        let id = StateId(self.state_names.len() as u32);
        self.state_names.push(name.to_string());
        self.state_index.insert(name.to_string(), id);
        self.faulty.push(false);
        Ok(id)
    }

    pub fn event(&mut self, name: &str, observable: bool) -> Result<EventId, ModelError> {
        if self.event_index.contains_key(name) {
            return Err(ModelError::DuplicateEvent(name.to_string()));
        }
        check_name(name)?;
        let id = EventId(self.event_names.len() as u32);
        self.event_names.push(name.to_string());
        self.event_index.insert(name.to_string(), id);
        self.observable.push(observable);
        Ok(id)
    }

    pub fn event_id(&self, name: &str) -> Option<EventId> {
        self.event_index.get(name).copied()
    }

    pub fn transition(
        &mut self,
        source: StateId,
        event: EventId,
        target: StateId,
    ) -> Result<(), ModelError> {
        let t = Transition {
            source,
            event,
            target,
        };
        if !self.seen.insert(t) {
            return Err(ModelError::DuplicateTransition(format!(
                "{} {} {}",
                self.state_names[source.index()],
                self.event_names[event.index()],
                self.state_names[target.index()]
            )));
        }
        self.transitions.push(t);
        Ok(())
    }

    /// Convenience for fixtures: states by name, event must already exist.
    pub fn trans(&mut self, source: &str, event: &str, target: &str) -> Result<(), ModelError> {
        let s = self.state(source)?;
        let e = self
            .event_id(event)
            .ok_or_else(|| ModelError::InvalidName(event.to_string()))?;
        let t = self.state(target)?;
        self.transition(s, e, t)
    }

    pub fn initial(&mut self, state: StateId) {
        self.initial = Some(state);
    }

    pub fn fault(&mut self, state: StateId) {
        self.faulty[state.index()] = true;
    }

    /// Builds without checking the behavioural invariants; see [`validate`].
    pub fn build(self) -> Result<DesModel, ModelError> {
        let initial = self.initial.ok_or(ModelError::NoInitial)?;
        Ok(DesModel::assemble(
            self.state_names,
            self.event_names,
            self.observable,
            self.transitions,
            initial,
            self.faulty,
        ))
    }
}

/// A partially observable FSM `(Q, Σ, T, q_init, Σ_o)` with faulty set `F ⊆ Q`.
///
/// Nondeterminism is allowed. Adjacency is precomputed in both directions.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DesModel {
    state_names: Vec<String>,
    event_names: Vec<String>,
    observable: Vec<bool>,
    transitions: Vec<Transition>,
    initial: StateId,
    faulty: Vec<bool>,
    // CSR indices into `transitions`; outgoing lists are sorted by event.
    out_offsets: Vec<usize>,
    out_edges: Vec<u32>,
    in_offsets: Vec<usize>,
    in_edges: Vec<u32>,
}

fn csr(n: usize, transitions: &[Transition], key: impl Fn(&Transition) -> usize) -> (Vec<usize>, Vec<u32>) {
    let mut offsets = vec![0usize; n + 1];
    for t in transitions {
        offsets[key(t) + 1] += 1;
    }
    for i in 0..n {
        offsets[i + 1] += offsets[i];
    }
    let mut fill = offsets.clone();
    let mut edges = vec![0u32; transitions.len()];
    for (idx, t) in transitions.iter().enumerate() {
        let slot = &mut fill[key(t)];
        edges[*slot] = idx as u32;
        *slot += 1;
    }
    (offsets, edges)
}

impl DesModel {
    fn assemble(
        state_names: Vec<String>,
        event_names: Vec<String>,
        observable: Vec<bool>,
        transitions: Vec<Transition>,
        initial: StateId,
        faulty: Vec<bool>,
    ) -> DesModel {
        let n = state_names.len();
        let (out_offsets, mut out_edges) = csr(n, &transitions, |t| t.source.index());
        for q in 0..n {
            out_edges[out_offsets[q]..out_offsets[q + 1]]
                .sort_by_key(|&i| (transitions[i as usize].event, transitions[i as usize].target));
        }
        let (in_offsets, in_edges) = csr(n, &transitions, |t| t.target.index());
        DesModel {
            state_names,
            event_names,
            observable,
            transitions,
            initial,
            faulty,
            out_offsets,
            out_edges,
            in_offsets,
            in_edges,
        }
    }

    pub fn state_count(&self) -> usize {
        self.state_names.len()
    }

    pub fn event_count(&self) -> usize {
        self.event_names.len()
    }

    pub fn transition_count(&self) -> usize {
        self.transitions.len()
    }

    pub fn states(&self) -> impl Iterator<Item = StateId> + '_ {
        (0..self.state_names.len() as u32).map(StateId)
    }

    pub fn events(&self) -> impl Iterator<Item = EventId> + '_ {
        (0..self.event_names.len() as u32).map(EventId)
    }

    pub fn observable_events(&self) -> impl Iterator<Item = EventId> + '_ {
        self.events().filter(|&e| self.is_observable(e))
    }

    pub fn transitions(&self) -> &[Transition] {
        &self.transitions
    }

    pub fn initial(&self) -> StateId {
        self.initial
    }

    pub fn state_name(&self, q: StateId) -> &str {
        &self.state_names[q.index()]
    }

    pub fn event_name(&self, e: EventId) -> &str {
        &self.event_names[e.index()]
    }

    pub fn state_by_name(&self, name: &str) -> Option<StateId> {
        self.state_names
            .iter()
            .position(|n| n == name)
            .map(|i| StateId(i as u32))
    }

    pub fn event_by_name(&self, name: &str) -> Option<EventId> {
        self.event_names
            .iter()
            .position(|n| n == name)
            .map(|i| EventId(i as u32))
    }

    #[inline]
    pub fn is_observable(&self, e: EventId) -> bool {
        self.observable[e.index()]
    }

    /// Observation cost of an event: 1 if observable, 0 otherwise.
    #[inline]
    pub fn cost(&self, e: EventId) -> u32 {
        u32::from(self.observable[e.index()])
    }

    pub fn fully_observable(&self) -> bool {
        self.observable.iter().all(|&o| o)
    }

    /// No state has two transitions with the same event.
    pub fn is_deterministic(&self) -> bool {
        self.states().all(|q| {
            let out: Vec<_> = self.outgoing(q).collect();
            out.windows(2).all(|w| w[0].event != w[1].event)
        })
    }

    #[inline]
    pub fn is_faulty(&self, q: StateId) -> bool {
        self.faulty[q.index()]
    }

    pub fn faulty_states(&self) -> impl Iterator<Item = StateId> + '_ {
        self.states().filter(|&q| self.is_faulty(q))
    }

    /// Outgoing transitions, sorted by event.
    pub fn outgoing(&self, q: StateId) -> impl Iterator<Item = &Transition> + '_ {
        let r = self.out_offsets[q.index()]..self.out_offsets[q.index() + 1];
        self.out_edges[r]
            .iter()
            .map(move |&i| &self.transitions[i as usize])
    }

    pub fn incoming(&self, q: StateId) -> impl Iterator<Item = &Transition> + '_ {
        let r = self.in_offsets[q.index()]..self.in_offsets[q.index() + 1];
        self.in_edges[r]
            .iter()
            .map(move |&i| &self.transitions[i as usize])
    }

    pub fn out_degree(&self, q: StateId) -> usize {
        self.out_offsets[q.index() + 1] - self.out_offsets[q.index()]
    }

    /// Copy of this model with a different faulty set.
    pub fn with_faulty(&self, faulty: impl IntoIterator<Item = StateId>) -> DesModel {
        let mut mask = vec![false; self.state_count()];
        for q in faulty {
            mask[q.index()] = true;
        }
        DesModel {
            faulty: mask,
            ..self.clone()
        }
    }

    /// Copy of this model with different observability flags.
    pub fn with_observability(&self, observable: impl Fn(EventId) -> bool) -> DesModel {
        let flags = self.events().map(observable).collect();
        DesModel {
            observable: flags,
            ..self.clone()
        }
    }

    /// Copy of this model without the transitions rejected by `keep`.
    pub fn filter_transitions(&self, keep: impl Fn(&Transition) -> bool) -> DesModel {
        let transitions = self.transitions.iter().copied().filter(|t| keep(t)).collect();
        DesModel::assemble(
            self.state_names.clone(),
            self.event_names.clone(),
            self.observable.clone(),
            transitions,
            self.initial,
            self.faulty.clone(),
        )
    }

    /// Adds to `set` every state reachable from it through unobservable transitions.
    pub fn unobservable_closure(&self, set: &mut Vec<StateId>) {
        let mut seen = vec![false; self.state_count()];
        for &q in set.iter() {
            seen[q.index()] = true;
        }
        let mut stack = set.clone();
        while let Some(q) = stack.pop() {
            for t in self.outgoing(q) {
                if !self.is_observable(t.event) && !seen[t.target.index()] {
                    seen[t.target.index()] = true;
                    set.push(t.target);
                    stack.push(t.target);
                }
            }
        }
    }

    /// Whether two models are the same up to renumbering of states and events.
    pub fn equivalent(&self, other: &DesModel) -> bool {
        use std::collections::BTreeSet;
        let events = |m: &DesModel| -> BTreeSet<(String, bool)> {
            m.events()
                .map(|e| (m.event_name(e).to_string(), m.is_observable(e)))
                .collect()
        };
        let states = |m: &DesModel| -> BTreeSet<(String, bool)> {
            m.states()
                .map(|q| (m.state_name(q).to_string(), m.is_faulty(q)))
                .collect()
        };
        let trans = |m: &DesModel| -> BTreeSet<(String, String, String)> {
            m.transitions
                .iter()
                .map(|t| {
                    (
                        m.state_name(t.source).to_string(),
                        m.event_name(t.event).to_string(),
                        m.state_name(t.target).to_string(),
                    )
                })
                .collect()
        };
        self.state_name(self.initial) == other.state_name(other.initial)
            && events(self) == events(other)
            && states(self) == states(other)
            && trans(self) == trans(other)
    }
}

// ---------------------------------------------------------------------------
// validation

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Severity {
    Error,
    Warning,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum FindingCode {
    Liveness,
    FaultClosure,
    InitialFaulty,
    ObservationLiveness,
}

impl fmt::Display for FindingCode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            FindingCode::Liveness => "Liveness",
            FindingCode::FaultClosure => "FaultClosure",
            FindingCode::InitialFaulty => "InitialFaulty",
            FindingCode::ObservationLiveness => "ObservationLiveness",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Offender {
    State(StateId),
    Transition(Transition),
    /// States along an all-unobservable cycle, in order.
    Cycle(Vec<StateId>),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Finding {
    pub severity: Severity,
    pub code: FindingCode,
    pub offender: Offender,
    pub message: String,
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ValidationReport {
    pub findings: Vec<Finding>,
}

impl ValidationReport {
    pub fn is_clean(&self) -> bool {
        self.findings.is_empty()
    }

    pub fn has_errors(&self) -> bool {
        self.findings.iter().any(|f| f.severity == Severity::Error)
    }

    pub fn codes(&self) -> Vec<FindingCode> {
        self.findings.iter().map(|f| f.code).collect()
    }
}

impl fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.findings.is_empty() {
            return writeln!(f, "ok");
        }
        for finding in &self.findings {
            let sev = match finding.severity {
                Severity::Error => "error",
                Severity::Warning => "warning",
            };
            writeln!(f, "{sev}\t{}\t{}", finding.code, finding.message)?;
        }
        Ok(())
    }
}

/// Checks liveness, fault closure, non-faulty initial state and the absence
/// of cycles made only of unobservable transitions.
pub fn validate(m: &DesModel) -> ValidationReport {
    let mut findings = Vec::new();
    let err = |code, offender, message| Finding {
        severity: Severity::Error,
        code,
        offender,
        message,
    };

    for q in m.states() {
        if m.out_degree(q) == 0 {
            findings.push(err(
                FindingCode::Liveness,
                Offender::State(q),
                format!("state {} has no outgoing transition", m.state_name(q)),
            ));
        }
    }
    for t in m.transitions() {
        if m.is_faulty(t.source) && !m.is_faulty(t.target) {
            findings.push(err(
                FindingCode::FaultClosure,
                Offender::Transition(*t),
                format!(
                    "transition {} {} {} leaves the faulty set",
                    m.state_name(t.source),
                    m.event_name(t.event),
                    m.state_name(t.target)
                ),
            ));
        }
    }
    if m.is_faulty(m.initial()) {
        findings.push(err(
            FindingCode::InitialFaulty,
            Offender::State(m.initial()),
            format!("initial state {} is faulty", m.state_name(m.initial())),
        ));
    }
    for cycle in unobservable_cycles(m) {
        let names: Vec<&str> = cycle.iter().map(|&q| m.state_name(q)).collect();
        findings.push(err(
            FindingCode::ObservationLiveness,
            Offender::Cycle(cycle.clone()),
            format!("unobservable cycle {}", names.join(" -> ")),
        ));
    }
    ValidationReport { findings }
}

/// One cycle per back edge found by an iterative DFS over unobservable transitions.
fn unobservable_cycles(m: &DesModel) -> Vec<Vec<StateId>> {
    #[derive(Clone, Copy, PartialEq)]
    enum Mark {
        White,
        Grey,
        Black,
    }
    let n = m.state_count();
    let mut mark = vec![Mark::White; n];
    let mut cycles = Vec::new();
    for root in m.states() {
        if mark[root.index()] != Mark::White {
            continue;
        }
        // (state, remaining unobservable successors)
        let mut path: Vec<(StateId, Vec<StateId>)> = Vec::new();
        let succ = |q: StateId| -> Vec<StateId> {
            m.outgoing(q)
                .filter(|t| !m.is_observable(t.event))
                .map(|t| t.target)
                .collect()
        };
        mark[root.index()] = Mark::Grey;
        path.push((root, succ(root)));
        while let Some((_, pending)) = path.last_mut() {
            match pending.pop() {
                Some(next) => match mark[next.index()] {
                    Mark::White => {
                        mark[next.index()] = Mark::Grey;
                        path.push((next, succ(next)));
                    }
                    Mark::Grey => {
                        let start = path.iter().position(|(q, _)| *q == next).unwrap();
                        cycles.push(path[start..].iter().map(|(q, _)| *q).collect());
                    }
                    Mark::Black => {}
                },
                None => {
                    let (q, _) = path.pop().unwrap();
                    mark[q.index()] = Mark::Black;
                }
            }
        }
    }
    cycles
}

/// Replaces the faulty set by its forward-reachable closure.
pub fn fault_closure(m: &DesModel) -> Result<DesModel, ModelError> {
    let mut closed: Vec<StateId> = m.faulty_states().collect();
    let mut seen = vec![false; m.state_count()];
    for &q in &closed {
        seen[q.index()] = true;
    }
    let mut stack = closed.clone();
    while let Some(q) = stack.pop() {
        for t in m.outgoing(q) {
            if !seen[t.target.index()] {
                seen[t.target.index()] = true;
                closed.push(t.target);
                stack.push(t.target);
            }
        }
    }
    if seen[m.initial().index()] {
        return Err(ModelError::InitialFaulty(
            m.state_name(m.initial()).to_string(),
        ));
    }
    Ok(m.with_faulty(closed))
}

/// Projection of a trace on the observable events.
pub fn observe(m: &DesModel, trace: &[EventId]) -> Vec<EventId> {
    trace
        .iter()
        .copied()
        .filter(|&e| m.is_observable(e))
        .collect()
}

/// All states reached from the initial state by a path labelled exactly by `trace`.
pub fn run(m: &DesModel, trace: &[EventId]) -> Vec<StateId> {
    let n = m.state_count();
    let mut current = vec![m.initial()];
    let mut mark = vec![false; n];
    for &e in trace {
        let mut next = Vec::new();
        for &q in &current {
            for t in m.outgoing(q).filter(|t| t.event == e) {
                if !mark[t.target.index()] {
                    mark[t.target.index()] = true;
                    next.push(t.target);
                }
            }
        }
        for &q in &next {
            mark[q.index()] = false;
        }
        current = next;
        if current.is_empty() {
            break;
        }
    }
    current.sort();
    current
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;

    fn ids(m: &DesModel, names: &[&str]) -> Vec<StateId> {
        let mut v: Vec<_> = names.iter().map(|n| m.state_by_name(n).unwrap()).collect();
        v.sort();
        v
    }

    fn trace(m: &DesModel, names: &[&str]) -> Vec<EventId> {
        names.iter().map(|n| m.event_by_name(n).unwrap()).collect()
    }

    #[test]
    fn fig1_is_valid() {
        let m = fixtures::fig1();
        assert_eq!(m.state_count(), 7);
        assert_eq!(m.transition_count(), 10);
        assert!(validate(&m).is_clean());
    }

    #[test]
    fn dead_state_breaks_liveness() {
        let m = fixtures::fig1();
        let g = m.state_by_name("G").unwrap();
        let dead = m.filter_transitions(|t| !(t.source == g && t.target == g));
        let report = validate(&dead);
        assert_eq!(report.codes(), vec![FindingCode::Liveness]);
        assert_eq!(report.findings[0].offender, Offender::State(g));
    }

    #[test]
    fn hidden_cycle_breaks_observation_liveness() {
        let m = fixtures::fig1();
        let c = m.event_by_name("c").unwrap();
        let report = validate(&m.with_observability(|e| e != c && m.is_observable(e)));
        assert!(report.is_clean(), "C-a-D-c-C still observable via a");

        let b = m.event_by_name("b").unwrap();
        let a = m.event_by_name("a").unwrap();
        let hide_ab = m.filter_transitions(|t| t.event != a || t.source != t.target);
        let hide_ab = hide_ab.with_observability(|e| e != a && e != b && m.is_observable(e));
        let report = validate(&hide_ab);
        assert!(report.codes().contains(&FindingCode::ObservationLiveness));
        let cycle = report.findings.iter().find(|f| f.code == FindingCode::ObservationLiveness);
        match &cycle.unwrap().offender {
            Offender::Cycle(c) => {
                let mut c = c.clone();
                c.sort();
                assert_eq!(c, ids(&m, &["A", "B"]));
            }
            other => panic!("unexpected offender {other:?}"),
        }
    }

    #[test]
    fn open_fault_set_and_faulty_initial() {
        let m = fixtures::fig1();
        let f = m.with_faulty(ids(&m, &["F"]));
        assert_eq!(validate(&f).codes(), vec![FindingCode::FaultClosure]);
        let a = m.with_faulty(ids(&m, &["A"]));
        assert!(validate(&a).codes().contains(&FindingCode::InitialFaulty));
    }

    #[test]
    fn fault_closure_examples() {
        let m = fixtures::fig1();
        assert_eq!(fault_closure(&m).unwrap(), m);
        let seeded = m.with_faulty(ids(&m, &["F"]));
        let closed = fault_closure(&seeded).unwrap();
        assert_eq!(closed.faulty_states().collect::<Vec<_>>(), ids(&m, &["F", "G"]));
        assert_eq!(fault_closure(&closed).unwrap(), closed);
        assert!(matches!(
            fault_closure(&m.with_faulty(ids(&m, &["A"]))),
            Err(ModelError::InitialFaulty(_))
        ));
    }

    #[test]
    fn observe_projects() {
        let m = fixtures::fig1();
        assert_eq!(
            observe(&m, &trace(&m, &["a", "b", "t", "a"])),
            trace(&m, &["a", "b", "a"])
        );
        assert!(observe(&m, &[]).is_empty());
        assert!(observe(&m, &trace(&m, &["t"])).is_empty());
    }

    #[test]
    fn run_follows_paths() {
        let m = fixtures::fig1();
        assert_eq!(run(&m, &trace(&m, &["a", "d"])), ids(&m, &["E"]));
        assert_eq!(run(&m, &[]), ids(&m, &["A"]));
        assert!(run(&m, &trace(&m, &["b"])).is_empty());
        let f3 = fixtures::fig3a(2);
        assert_eq!(run(&f3, &trace(&f3, &["a"])), ids(&f3, &["B1", "B2"]));
    }

    #[test]
    fn builder_rejects_bad_input() {
        let mut b = ModelBuilder::new();
        b.event("a", true).unwrap();
        assert_eq!(b.event("a", false), Err(ModelError::DuplicateEvent("a".into())));
        assert!(matches!(b.state("x y"), Err(ModelError::InvalidName(_))));
        b.trans("p", "a", "p").unwrap();
        assert!(matches!(b.trans("p", "a", "p"), Err(ModelError::DuplicateTransition(_))));
        assert_eq!(b.build(), Err(ModelError::NoInitial));
    }
}
