//! Graphviz output. Nodes containing a faulty state are filled grey.

use std::fmt::Write as _;

use crate::belief::BeliefAutomaton;
use crate::distances::DistanceTable;
use crate::model::DesModel;
use crate::twin::TwinReachability;

/// Quotes a label. Backslashes are left alone so `\n` line breaks survive.
fn quote(s: &str) -> String {
    format!("\"{}\"", s.replace('"', "\\\""))
}

const FAULTY_STYLE: &str = ", style=filled, fillcolor=grey80";

/// The reachable twin plant. Edges are drawn only when the twin was built
/// with `record_edges`; unobservable moves are dashed.
pub fn twin_to_dot(m: &DesModel, d: &DistanceTable, t: &TwinReachability) -> String {
    let mut out = String::from("digraph twin {\n  rankdir=LR;\n  node [shape=box];\n");
    for (i, p) in t.pairs().iter().enumerate() {
        let hull = d.state_interval(p.0).hull(&d.state_interval(p.1));
        let label = format!("{},{}\\n{}", m.state_name(p.0), m.state_name(p.1), hull);
        let style = if m.is_faulty(p.0) || m.is_faulty(p.1) {
            FAULTY_STYLE
        } else {
            ""
        };
        let _ = writeln!(out, "  p{i} [label={}{style}];", quote(&label));
    }
    for &(a, e, b) in t.edges().unwrap_or(&[]) {
        match e {
            Some(e) => {
                let _ = writeln!(out, "  p{a} -> p{b} [label={}];", quote(m.event_name(e)));
            }
            None => {
                let _ = writeln!(out, "  p{a} -> p{b} [style=dashed];");
            }
        }
    }
    out.push_str("}\n");
    out
}

/// The compiled predictor: one node per belief, labelled with its members
/// and prediction.
pub fn automaton_to_dot(m: &DesModel, a: &BeliefAutomaton) -> String {
    let mut out = String::from("digraph predictor {\n  rankdir=LR;\n  node [shape=box];\n");
    for (i, b) in a.nodes().iter().enumerate() {
        let members: Vec<&str> = b.members().iter().map(|&q| m.state_name(q)).collect();
        let label = format!("{{{}}}\\n{}", members.join(","), b.interval());
        let style = if b.contains_faulty(m) { FAULTY_STYLE } else { "" };
        let peripheries = if i == a.initial() { ", peripheries=2" } else { "" };
        let _ = writeln!(out, "  b{i} [label={}{style}{peripheries}];", quote(&label));
    }
    for i in 0..a.nodes().len() {
        for &(e, j) in a.edges(i) {
            let _ = writeln!(out, "  b{i} -> b{j} [label={}];", quote(m.event_name(e)));
        }
    }
    out.push_str("}\n");
    out
}
