//! Graphviz rendering of a scope.

use std::fmt::Write;

use crate::model::Atlas;
use crate::navigation::{NavError, NavOptions, Scope, ScopeGraph};

fn quote(text: &str) -> String {
    let mut out = String::with_capacity(text.len() + 2);
    out.push('"');
    for ch in text.chars() {
        match ch {
            '"' => out.push_str("\\\""),
            '\\' => out.push_str("\\\\"),
            '\n' => out.push_str("\\n"),
            _ => out.push(ch),
        }
    }
    out.push('"');
    out
}

/// Renders every pattern in scope as a node labelled with its name and every
/// link as an edge labelled with its semantics. Cross-language links are
/// dashed. Nodes are ordered by ref and edges by link id.
pub fn export_graph(atlas: &Atlas, scope: &Scope) -> Result<String, NavError> {
    let graph = ScopeGraph::resolve(atlas, scope, NavOptions::default())?;
    let mut out = String::new();
    writeln!(out, "digraph {} {{", quote(&scope.to_string())).unwrap();
    out.push_str("  rankdir=LR;\n");
    for (at, pattern) in graph.patterns() {
        writeln!(
            out,
            "  {} [label={}];",
            quote(&at.to_string()),
            quote(&pattern.name)
        )
        .unwrap();
    }
    for link in graph.links() {
        write!(
            out,
            "  {} -> {} [label={}",
            quote(&link.source.to_string()),
            quote(&link.target.to_string()),
            quote(link.semantics.display_label())
        )
        .unwrap();
        if link.is_cross_language() {
            out.push_str(", style=dashed");
        }
        out.push_str("];\n");
    }
    out.push_str("}\n");
    Ok(out)
}
