//! Graphviz rendering of the labelled transition graph.

use std::fmt::Write;

use crate::graph::AsyncGraph;
use crate::network::Network;

/// One node per state, labelled with its bitstring and unstable coordinates
/// underlined, and one edge μ → Φ^λ(μ) per nonempty λ ⊆ unstable(μ), labelled
/// by λ. States and edges appear in increasing numeric order, so the output
/// is a pure function of the table.
pub fn export_dot(net: &Network) -> crate::Result<String> {
    let g = AsyncGraph::build(net)?;
    let mut out = String::new();
    out.push_str("digraph portrait {\n  node [shape=plaintext];\n");
    for mu in net.states() {
        let unstable = net.unstable_set(mu)?;
        let mut label = String::new();
        for i in 1..=net.dim() {
            let c = if mu.get(i) { '1' } else { '0' };
            if unstable.get(i) {
                let _ = write!(label, "<U>{c}</U>");
            } else {
                label.push(c);
            }
        }
        let _ = writeln!(out, "  \"{mu}\" [label=<{label}>];");
    }
    for mu in net.states() {
        for (lam, target) in g.successors(mu) {
            if !lam.is_zero() {
                let _ = writeln!(out, "  \"{mu}\" -> \"{target}\" [label=\"{lam}\"];");
            }
        }
    }
    out.push_str("}\n");
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::network::fixtures::*;

    const NET1_DOT: &str = "digraph portrait {
  node [shape=plaintext];
  \"00\" [label=<<U>0</U><U>0</U>>];
  \"01\" [label=<<U>0</U>1>];
  \"10\" [label=<10>];
  \"11\" [label=<<U>1</U>1>];
  \"00\" -> \"01\" [label=\"01\"];
  \"00\" -> \"10\" [label=\"10\"];
  \"00\" -> \"11\" [label=\"11\"];
  \"01\" -> \"11\" [label=\"10\"];
  \"11\" -> \"01\" [label=\"10\"];
}
";

    #[test]
    fn net1_portrait() {
        let dot = export_dot(&net1()).unwrap();
        assert_eq!(dot, NET1_DOT);
        assert_eq!(export_dot(&net1()).unwrap(), dot);
        let node00 = dot.lines().find(|l| l.starts_with("  \"00\" [")).unwrap();
        assert_eq!(node00.matches("<U>").count(), 2);
        assert_eq!(dot.lines().filter(|l| l.starts_with("  \"00\" ->")).count(), 3);
        assert_eq!(dot.lines().filter(|l| l.starts_with("  \"10\" ->")).count(), 0);
    }

    #[test]
    fn identity_has_no_edges() {
        let dot = export_dot(&id2()).unwrap();
        assert_eq!(dot.matches("[label=<").count(), 4);
        assert!(!dot.contains("->"));
        assert!(!dot.contains("<U>"));
    }

    #[test]
    fn respects_graph_cap() {
        let mut net = id2();
        net.set_limits(crate::network::Limits { graph_max_dim: 1, ..net.limits().clone() });
        assert!(export_dot(&net).is_err());
    }
}
