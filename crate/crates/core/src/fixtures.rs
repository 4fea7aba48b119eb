//! Reference systems and the parametric `fig3a` family.

use crate::format::parse_model;
use crate::model::{DesModel, ModelBuilder};

pub const FIG1_TEXT: &str = include_str!("../fixtures/fig1.des");
pub const FIG2A_TEXT: &str = include_str!("../fixtures/fig2a.des");
pub const FIG2B_TEXT: &str = include_str!("../fixtures/fig2b.des");

/// Seven states A..G, `t` unobservable, G faulty.
pub fn fig1() -> DesModel {
    parse_model(FIG1_TEXT).expect("fig1 fixture is valid")
}

/// Fully observable chain S0 -a-> S1 -a-> S2 with a `b` loop on S0.
pub fn fig2a() -> DesModel {
    parse_model(FIG2A_TEXT).expect("fig2a fixture is valid")
}

/// Fully observable; faults are preceded by `aaa` or `aabb`.
pub fn fig2b() -> DesModel {
    parse_model(FIG2B_TEXT).expect("fig2b fixture is valid")
}

/// Fault-free family with `2n + 2` states and `4n` transitions:
/// `A -a-> B_i`, `B_i -t-> C`, `C -a-> D_i`, `D_i -a-> D_i`.
pub fn fig3a(n: usize) -> DesModel {
    assert!(n >= 1, "fig3a needs n >= 1");
    let mut b = ModelBuilder::new();
    let a = b.event("a", true).unwrap();
    let t = b.event("t", false).unwrap();
    let init = b.state("A").unwrap();
    b.initial(init);
    let bs: Vec<_> = (1..=n).map(|i| b.state(&format!("B{i}")).unwrap()).collect();
    let c = b.state("C").unwrap();
    let ds: Vec<_> = (1..=n).map(|i| b.state(&format!("D{i}")).unwrap()).collect();
    for &bi in &bs {
        b.transition(init, a, bi).unwrap();
    }
    for &bi in &bs {
        b.transition(bi, t, c).unwrap();
    }
    for &di in &ds {
        b.transition(c, a, di).unwrap();
    }
    for &di in &ds {
        b.transition(di, a, di).unwrap();
    }
    b.build().unwrap()
}

/// Named fixture lookup for the CLI.
pub fn by_name(name: &str) -> Option<DesModel> {
    match name {
        "fig1" => Some(fig1()),
        "fig2a" => Some(fig2a()),
        "fig2b" => Some(fig2b()),
        _ => None,
    }
}
