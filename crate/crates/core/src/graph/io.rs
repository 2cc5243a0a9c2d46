//! Plain-text formats.
//!
//! Graph: a header `n m`, then `m` lines `u v w` (0-based ids, decimal weight).
//! Groups: one line of `n` group indices. Crusade: the removal order as a
//! whitespace-separated node list. Blank lines and `#` comments are skipped.

use std::fmt::Write;

use super::{Bag, Crusade, NodeId, WeightedGraph};
use crate::error::{Error, Result};
use crate::num::{format_rational, parse_rational};

struct Token<'a> {
    text: &'a str,
    line: usize,
    column: usize,
}

fn content_lines(src: &str) -> impl Iterator<Item = (usize, Vec<Token<'_>>)> {
    src.lines().enumerate().filter_map(|(i, line)| {
        let body = line.split('#').next().unwrap_or("");
        let mut tokens = Vec::new();
        let mut offset = 0;
        for piece in body.split_whitespace() {
            let col = body[offset..].find(piece).unwrap() + offset;
            offset = col + piece.len();
            tokens.push(Token {
                text: piece,
                line: i + 1,
                column: col + 1,
            });
        }
        (!tokens.is_empty()).then_some((i + 1, tokens))
    })
}

fn parse_usize(t: &Token<'_>, what: &str) -> Result<usize> {
    t.text
        .parse()
        .map_err(|_| Error::parse(t.line, t.column, format!("expected {what}, found {:?}", t.text)))
}

pub fn parse_graph(src: &str) -> Result<WeightedGraph> {
    let mut lines = content_lines(src);
    let (hline, header) = lines
        .next()
        .ok_or_else(|| Error::parse(1, 1, "missing header line `n m`"))?;
    if header.len() != 2 {
        return Err(Error::parse(hline, 1, "header must be `n m`"));
    }
    let n = parse_usize(&header[0], "node count")?;
    let m = parse_usize(&header[1], "edge count")?;
    let mut edges = Vec::with_capacity(m);
    for (lineno, toks) in lines {
        if edges.len() == m {
            return Err(Error::parse(lineno, 1, format!("more than {m} edge lines")));
        }
        if toks.len() != 3 {
            return Err(Error::parse(lineno, 1, "edge line must be `u v w`"));
        }
        let u = parse_usize(&toks[0], "node id")?;
        let v = parse_usize(&toks[1], "node id")?;
        let w = parse_rational(toks[2].text).map_err(|e| Error::parse(lineno, toks[2].column, e))?;
        edges.push((u, v, w));
    }
    if edges.len() != m {
        return Err(Error::parse(
            src.lines().count().max(1),
            1,
            format!("expected {m} edges, found {}", edges.len()),
        ));
    }
    WeightedGraph::new(n, edges)
}

pub fn write_graph(g: &WeightedGraph) -> String {
    let mut out = format!("{} {}\n", g.node_count(), g.edge_count());
    for e in g.edges() {
        writeln!(out, "{} {} {}", e.u, e.v, format_rational(&e.w)).unwrap();
    }
    out
}

fn parse_ids(src: &str) -> Result<Vec<usize>> {
    let mut out = Vec::new();
    for (_, toks) in content_lines(src) {
        for t in &toks {
            out.push(parse_usize(t, "integer")?);
        }
    }
    Ok(out)
}

pub fn parse_groups(src: &str, n: usize) -> Result<Vec<usize>> {
    let groups = parse_ids(src)?;
    if groups.len() != n {
        return Err(Error::parse(1, 1, format!("expected {n} group indices, found {}", groups.len())));
    }
    Ok(groups)
}

pub fn write_groups(groups: &[usize]) -> String {
    let mut s = groups.iter().map(|g| g.to_string()).collect::<Vec<_>>().join(" ");
    s.push('\n');
    s
}

pub fn parse_node_list(src: &str) -> Result<Vec<NodeId>> {
    parse_ids(src)
}

/// A removal order read back as a crusade from its own node set to ∅.
pub fn parse_crusade(src: &str) -> Result<Crusade> {
    let order = parse_ids(src)?;
    let start: Bag = order.iter().copied().collect();
    Crusade::full(start, order)
}

pub fn write_crusade(p: &Crusade) -> String {
    let mut s = p
        .removal_order()
        .iter()
        .map(|u| u.to_string())
        .collect::<Vec<_>>()
        .join(" ");
    s.push('\n');
    s
}
