//! Line-oriented text format for relation expressions.
//!
//! Grammar (one statement per line, `#` starts a comment, a blank line
//! separates terms):
//!
//! ```text
//! term <coef> [unassigned]
//! vertex <id> g=<int> [m={<label>,…}] [psi@m<label>=<int>]…
//! edge <id>-<id> [psi@<id>=<int>]…
//! ```
//!
//! Marking labels are `1..9` for the ambient points and `q1, q2, …` for
//! extra points. A `psi@` clause on an edge names the side (vertex) that
//! carries the cotangent exponent; exponents on loops are not
//! representable. Statements may end with `;`. Only the parsed canonical
//! form is significant, not the byte layout.

use crate::error::Error;
use crate::graph::{DualGraph, EdgeEnd, Marking};
use crate::rational::{format_rational, parse_rational};
use crate::relation::{RelationExpr, StratumTerm};
use std::collections::BTreeMap;

pub fn parse_relation(text: &str) -> Result<RelationExpr, Error> {
    let mut terms: Vec<StratumTerm> = Vec::new();
    let mut current: Option<TermBuilder> = None;

    for (idx, raw_line) in text.lines().enumerate() {
        let line_no = idx + 1;
        let line = strip_comment(raw_line);
        let trimmed = line.trim();
        if trimmed.is_empty() {
            if let Some(builder) = current.take() {
                terms.push(builder.finish(line_no)?);
            }
            continue;
        }
        let stmt = trimmed.trim_end_matches(';').trim();
        let mut words = stmt.split_whitespace();
        let head = words.next().unwrap_or_default();
        match head {
            "term" => {
                if let Some(builder) = current.take() {
                    terms.push(builder.finish(line_no)?);
                }
                let coef_text = words
                    .next()
                    .ok_or_else(|| parse_err(line_no, 1, "term requires a coefficient"))?;
                let coefficient = parse_rational(coef_text)
                    .map_err(|m| parse_err(line_no, column_of(raw_line, coef_text), &m))?;
                let mut assigned = true;
                for w in words {
                    match w {
                        "unassigned" => assigned = false,
                        other => {
                            return Err(parse_err(
                                line_no,
                                column_of(raw_line, other),
                                &format!("unexpected token `{other}` after term"),
                            ))
                        }
                    }
                }
                current = Some(TermBuilder::new(coefficient, assigned, line_no));
            }
            "vertex" => {
                let builder = current
                    .as_mut()
                    .ok_or_else(|| parse_err(line_no, 1, "vertex before any term"))?;
                builder.vertex(stmt, raw_line, line_no)?;
            }
            "edge" => {
                let builder = current
                    .as_mut()
                    .ok_or_else(|| parse_err(line_no, 1, "edge before any term"))?;
                builder.edge(stmt, raw_line, line_no)?;
            }
            other => {
                return Err(parse_err(
                    line_no,
                    column_of(raw_line, other),
                    &format!("unknown statement `{other}`"),
                ))
            }
        }
    }
    if let Some(builder) = current.take() {
        let last = text.lines().count();
        terms.push(builder.finish(last)?);
    }
    if terms.is_empty() {
        return Err(Error::Semantic("relation file contains no terms".into()));
    }

    let ambient_genus = terms[0].graph.total_genus();
    let ambient_markings = terms
        .iter()
        .flat_map(|t| t.graph.markings().keys())
        .filter_map(|m| match m {
            Marking::Primary(k) => Some(*k),
            _ => None,
        })
        .max()
        .unwrap_or(0);
    let expr = RelationExpr { terms, ambient_genus, ambient_markings };
    expr.validate()?;
    Ok(RelationExpr {
        terms: expr
            .terms
            .into_iter()
            .map(|t| StratumTerm { graph: t.graph.canonicalized(), ..t })
            .collect(),
        ..expr
    })
}

/// Render an expression in the same grammar the parser accepts.
pub fn pretty_print(expr: &RelationExpr) -> String {
    let mut out = String::new();
    for (i, term) in expr.terms.iter().enumerate() {
        if i > 0 {
            out.push('\n');
        }
        out.push_str(&format!(
            "term {}{}\n",
            format_rational(&term.coefficient),
            if term.assigned { "" } else { " unassigned" }
        ));
        let g = &term.graph;
        for v in 0..g.vertex_count() {
            let mut line = format!("vertex v{v} g={}", g.genus(v));
            let marks = g.markings_at(v);
            if !marks.is_empty() {
                let labels: Vec<String> = marks.iter().map(|m| m.to_string()).collect();
                line.push_str(&format!(" m={{{}}}", labels.join(",")));
            }
            for m in marks {
                let psi = g.marking_psi(m);
                if psi > 0 {
                    line.push_str(&format!(" psi@m{m}={psi}"));
                }
            }
            out.push_str(&line);
            out.push('\n');
        }
        for e in g.edges() {
            let mut line = format!("edge v{}-v{}", e.0.vertex, e.1.vertex);
            if e.0.psi > 0 {
                line.push_str(&format!(" psi@v{}={}", e.0.vertex, e.0.psi));
            }
            if e.1.psi > 0 {
                line.push_str(&format!(" psi@v{}={}", e.1.vertex, e.1.psi));
            }
            out.push_str(&line);
            out.push('\n');
        }
    }
    out
}

struct TermBuilder {
    coefficient: crate::rational::Q,
    assigned: bool,
    start_line: usize,
    vertex_ids: BTreeMap<String, usize>,
    genus: Vec<u32>,
    markings: Vec<(Marking, usize)>,
    marking_psi: Vec<(Marking, u32)>,
    edges: Vec<(EdgeEnd, EdgeEnd)>,
}

impl TermBuilder {
    fn new(coefficient: crate::rational::Q, assigned: bool, start_line: usize) -> Self {
        TermBuilder {
            coefficient,
            assigned,
            start_line,
            vertex_ids: BTreeMap::new(),
            genus: Vec::new(),
            markings: Vec::new(),
            marking_psi: Vec::new(),
            edges: Vec::new(),
        }
    }

    fn vertex(&mut self, stmt: &str, raw: &str, line: usize) -> Result<(), Error> {
        let mut words = stmt.split_whitespace().skip(1);
        let id = words
            .next()
            .ok_or_else(|| parse_err(line, 1, "vertex requires an identifier"))?;
        if self.vertex_ids.contains_key(id) {
            return Err(parse_err(line, column_of(raw, id), &format!("duplicate vertex `{id}`")));
        }
        let index = self.genus.len();
        let mut genus: Option<u32> = None;
        for w in words {
            if let Some(v) = w.strip_prefix("g=") {
                genus = Some(v.parse().map_err(|_| {
                    parse_err(line, column_of(raw, w), &format!("bad genus `{v}`"))
                })?);
            } else if let Some(v) = w.strip_prefix("m={") {
                let inner = v.strip_suffix('}').ok_or_else(|| {
                    parse_err(line, column_of(raw, w), "unterminated marking set")
                })?;
                for label in inner.split(',').filter(|s| !s.is_empty()) {
                    let m = parse_marking(label)
                        .map_err(|msg| parse_err(line, column_of(raw, w), &msg))?;
                    self.markings.push((m, index));
                }
            } else if let Some(v) = w.strip_prefix("psi@m") {
                let (label, exp) = v.split_once('=').ok_or_else(|| {
                    parse_err(line, column_of(raw, w), "psi clause requires `=<int>`")
                })?;
                let m = parse_marking(label)
                    .map_err(|msg| parse_err(line, column_of(raw, w), &msg))?;
                let exp: u32 = exp.parse().map_err(|_| {
                    parse_err(line, column_of(raw, w), &format!("bad exponent `{exp}`"))
                })?;
                self.marking_psi.push((m, exp));
            } else {
                return Err(parse_err(
                    line,
                    column_of(raw, w),
                    &format!("unexpected vertex field `{w}`"),
                ));
            }
        }
        let genus =
            genus.ok_or_else(|| parse_err(line, 1, &format!("vertex `{id}` is missing g=")))?;
        self.vertex_ids.insert(id.to_string(), index);
        self.genus.push(genus);
        Ok(())
    }

    fn edge(&mut self, stmt: &str, raw: &str, line: usize) -> Result<(), Error> {
        let mut words = stmt.split_whitespace().skip(1);
        let pair = words
            .next()
            .ok_or_else(|| parse_err(line, 1, "edge requires `<id>-<id>`"))?;
        let (a, b) = pair
            .split_once('-')
            .ok_or_else(|| parse_err(line, column_of(raw, pair), "edge requires `<id>-<id>`"))?;
        let va = self.lookup(a, raw, line)?;
        let vb = self.lookup(b, raw, line)?;
        let mut psi_a = 0u32;
        let mut psi_b = 0u32;
        for w in words {
            let clause = w.strip_prefix("psi@").ok_or_else(|| {
                parse_err(line, column_of(raw, w), &format!("unexpected edge field `{w}`"))
            })?;
            let (id, exp) = clause.split_once('=').ok_or_else(|| {
                parse_err(line, column_of(raw, w), "psi clause requires `=<int>`")
            })?;
            let exp: u32 = exp.parse().map_err(|_| {
                parse_err(line, column_of(raw, w), &format!("bad exponent `{exp}`"))
            })?;
            let side = self.lookup(id, raw, line)?;
            if va == vb {
                return Err(parse_err(
                    line,
                    column_of(raw, w),
                    "cotangent exponents on loops are not representable",
                ));
            }
            if side == va {
                psi_a = exp;
            } else if side == vb {
                psi_b = exp;
            } else {
                return Err(parse_err(
                    line,
                    column_of(raw, w),
                    &format!("psi side `{id}` is not an end of this edge"),
                ));
            }
        }
        self.edges.push((EdgeEnd { vertex: va, psi: psi_a }, EdgeEnd { vertex: vb, psi: psi_b }));
        Ok(())
    }

    fn lookup(&self, id: &str, raw: &str, line: usize) -> Result<usize, Error> {
        self.vertex_ids
            .get(id)
            .copied()
            .ok_or_else(|| parse_err(line, column_of(raw, id), &format!("unknown vertex `{id}`")))
    }

    fn finish(self, _line: usize) -> Result<StratumTerm, Error> {
        let mut graph = DualGraph::new(self.genus);
        for (m, v) in self.markings {
            graph.add_marking(m, v).map_err(|e| at_term(self.start_line, e))?;
        }
        for (m, p) in self.marking_psi {
            graph.set_marking_psi(m, p).map_err(|e| at_term(self.start_line, e))?;
        }
        for (a, b) in self.edges {
            graph.add_edge(a, b).map_err(|e| at_term(self.start_line, e))?;
        }
        Ok(StratumTerm { coefficient: self.coefficient, graph, assigned: self.assigned })
    }
}

fn parse_marking(label: &str) -> Result<Marking, String> {
    if let Some(rest) = label.strip_prefix('q') {
        let k: u32 = rest.parse().map_err(|_| format!("bad extra marking `{label}`"))?;
        if k == 0 {
            return Err("extra markings are numbered from q1".into());
        }
        Ok(Marking::Extra(k))
    } else {
        let k: u8 = label.parse().map_err(|_| format!("bad marking `{label}`"))?;
        if k == 0 {
            return Err("primary markings are numbered from 1".into());
        }
        Ok(Marking::Primary(k))
    }
}

fn strip_comment(line: &str) -> &str {
    match line.find('#') {
        Some(i) => &line[..i],
        None => line,
    }
}

fn column_of(raw: &str, token: &str) -> usize {
    raw.find(token).map(|i| i + 1).unwrap_or(1)
}

fn parse_err(line: usize, column: usize, message: &str) -> Error {
    Error::Parse { line, column, message: message.to_string() }
}

fn at_term(line: usize, e: Error) -> Error {
    match e {
        Error::Semantic(msg) => Error::Semantic(format!("term at line {line}: {msg}")),
        other => other,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::qi;

    #[test]
    fn single_vertex_smallest_stable_graph() {
        let expr = parse_relation("term 1\nvertex a g=2 m={1,2,3}\n").unwrap();
        assert_eq!(expr.len(), 1);
        assert_eq!(expr.terms[0].coefficient, qi(1));
        assert_eq!(expr.terms[0].graph.edges().len(), 0);
        assert_eq!(expr.ambient_genus, 2);
        assert_eq!(expr.ambient_markings, 3);
    }

    #[test]
    fn unstable_vertex_rejected_with_reason() {
        let text = "term 1\nvertex a g=2 m={2,3}\nvertex b g=0 m={1}\nedge a-b\n";
        match parse_relation(text) {
            Err(Error::Semantic(msg)) => assert!(msg.contains("unstable"), "{msg}"),
            other => panic!("expected semantic error, got {other:?}"),
        }
    }

    #[test]
    fn syntax_error_carries_location() {
        match parse_relation("term 1\nvertex a g=2 m={1,2,3}\nedgy a-a\n") {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 3),
            other => panic!("expected parse error, got {other:?}"),
        }
    }

    #[test]
    fn round_trip_on_canonical_forms() {
        let text = "\
term -3 unassigned
vertex a g=2 m={1}
vertex b g=0 m={2,3}
edge a-b psi@a=1

term 2/5 unassigned
vertex x g=1
vertex y g=0 m={1,2,3}
vertex z g=1
edge x-y
edge y-z
";
        let once = parse_relation(text).unwrap();
        let printed = pretty_print(&once);
        let twice = parse_relation(&printed).unwrap();
        assert_eq!(once.len(), twice.len());
        for (a, b) in once.terms.iter().zip(twice.terms.iter()) {
            assert_eq!(a.coefficient, b.coefficient);
            assert_eq!(a.assigned, b.assigned);
            assert_eq!(a.graph.canonical_key(), b.graph.canonical_key());
        }
    }

    #[test]
    fn comments_and_semicolons_tolerated() {
        let text = "# leading comment\nterm 1; # trailing\nvertex a g=2 m={1,2,3};\n";
        assert!(parse_relation(text).is_ok());
    }

    #[test]
    fn psi_on_loop_rejected() {
        let text = "term 1\nvertex a g=1 m={1,2,3}\nedge a-a psi@a=1\n";
        assert!(matches!(parse_relation(text), Err(Error::Parse { .. })));
    }
}
