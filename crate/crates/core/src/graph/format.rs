//! Line-oriented text format.
//!
//! ```text
//! graph v2
//! v <id> <m>
//! w <id>
//! e <src> <dst> <b>
//! ```
//!
//! Ids are signed integers or double-quoted strings (`\"` and `\\` escapes).
//! Numbers are decimals (optional exponent) or rationals `p/q`, parsed exactly.
//! `w` marks a window-boundary vertex. Blank lines and lines starting with `#`
//! are ignored.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;
use std::path::Path;

use num_bigint::BigInt;
use num_traits::{One, Signed, Zero};

use super::{DirectedWeightedGraph, GraphBuilder, Rational, VertexId};
use crate::error::{ParseError, ParseErrorKind, Result};

pub const HEADER: &str = "graph v2";

pub fn load_graph(path: impl AsRef<Path>) -> Result<DirectedWeightedGraph> {
    let text = std::fs::read_to_string(path)?;
    Ok(parse_graph(&text)?)
}

pub fn save_graph(graph: &DirectedWeightedGraph, path: impl AsRef<Path>) -> Result<()> {
    std::fs::write(path, write_graph(graph))?;
    Ok(())
}

pub fn write_graph(graph: &DirectedWeightedGraph) -> String {
    let mut out = String::new();
    out.push_str(HEADER);
    out.push('\n');
    for x in 0..graph.len() {
        let _ = writeln!(out, "v {} {}", graph.id(x), format_rational(graph.measure_exact(x)));
    }
    for x in (0..graph.len()).filter(|&x| graph.is_window_boundary(x)) {
        let _ = writeln!(out, "w {}", graph.id(x));
    }
    for (x, y, arc) in graph.edges() {
        let _ = writeln!(out, "e {} {} {}", graph.id(x), graph.id(y), format_rational(&arc.weight));
    }
    out
}

pub fn format_rational(r: &Rational) -> String {
    if r.denom().is_one() {
        r.numer().to_string()
    } else {
        format!("{}/{}", r.numer(), r.denom())
    }
}

fn err(line: usize, kind: ParseErrorKind) -> ParseError {
    ParseError { line, kind }
}

pub fn parse_graph(text: &str) -> std::result::Result<DirectedWeightedGraph, ParseError> {
    let mut seen_header = false;
    let mut measures: BTreeMap<VertexId, Rational> = BTreeMap::new();
    let mut edges: Vec<(usize, VertexId, VertexId, Rational)> = Vec::new();
    let mut edge_keys: BTreeSet<(VertexId, VertexId)> = BTreeSet::new();
    let mut boundary: Vec<(usize, VertexId)> = Vec::new();

    for (i, raw) in text.lines().enumerate() {
        let line_no = i + 1;
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let tokens = tokenize(line).map_err(|m| err(line_no, ParseErrorKind::Malformed(m)))?;
        if !seen_header {
            if tokens.len() == 2 && tokens[0] == Token::Bare("graph".into()) && tokens[1] == Token::Bare("v2".into()) {
                seen_header = true;
                continue;
            }
            return Err(err(line_no, ParseErrorKind::MissingHeader));
        }
        let directive = match &tokens[0] {
            Token::Bare(d) => d.as_str(),
            Token::Quoted(_) => return Err(err(line_no, ParseErrorKind::Malformed(line.to_string()))),
        };
        let arity = |n: usize| {
            if tokens.len() == n {
                Ok(())
            } else {
                Err(err(line_no, ParseErrorKind::Malformed(format!("`{directive}` takes {} fields", n - 1))))
            }
        };
        match directive {
            "v" => {
                arity(3)?;
                let id = parse_id(&tokens[1], line_no)?;
                let m = parse_number(&tokens[2], line_no)?;
                if !m.is_positive() {
                    return Err(err(line_no, ParseErrorKind::NonpositiveMeasure(format_rational(&m))));
                }
                if measures.contains_key(&id) {
                    return Err(err(line_no, ParseErrorKind::DuplicateVertex(id.to_string())));
                }
                measures.insert(id, m);
            }
            "w" => {
                arity(2)?;
                boundary.push((line_no, parse_id(&tokens[1], line_no)?));
            }
            "e" => {
                arity(4)?;
                let src = parse_id(&tokens[1], line_no)?;
                let dst = parse_id(&tokens[2], line_no)?;
                let w = parse_number(&tokens[3], line_no)?;
                if src == dst {
                    return Err(err(line_no, ParseErrorKind::SelfLoop(src.to_string())));
                }
                if !w.is_positive() {
                    return Err(err(line_no, ParseErrorKind::NonpositiveWeight(format_rational(&w))));
                }
                if !edge_keys.insert((src.clone(), dst.clone())) {
                    return Err(err(line_no, ParseErrorKind::DuplicateEdge(src.to_string(), dst.to_string())));
                }
                edges.push((line_no, src, dst, w));
            }
            other => return Err(err(line_no, ParseErrorKind::UnknownDirective(other.to_string()))),
        }
    }
    if !seen_header {
        return Err(err(1, ParseErrorKind::MissingHeader));
    }

    let mut builder = GraphBuilder::new();
    for (id, m) in &measures {
        builder.vertex(id.clone(), m.clone());
    }
    for (line_no, src, dst, w) in edges {
        for id in [&src, &dst] {
            if !measures.contains_key(id) {
                return Err(err(line_no, ParseErrorKind::MissingMeasure(id.to_string())));
            }
        }
        builder.edge(src, dst, w);
    }
    for (line_no, id) in boundary {
        if !measures.contains_key(&id) {
            return Err(err(line_no, ParseErrorKind::MissingMeasure(id.to_string())));
        }
        builder.window_boundary(id);
    }
    // Every storage invariant was checked above.
    Ok(builder.build().expect("parsed graph satisfies storage invariants"))
}

#[derive(Debug, PartialEq, Eq)]
enum Token {
    Bare(String),
    Quoted(String),
}

fn tokenize(line: &str) -> std::result::Result<Vec<Token>, String> {
    let mut tokens = Vec::new();
    let mut chars = line.chars().peekable();
    while let Some(&c) = chars.peek() {
        if c.is_whitespace() {
            chars.next();
        } else if c == '"' {
            chars.next();
            let mut s = String::new();
            loop {
                match chars.next() {
                    Some('"') => break,
                    Some('\\') => match chars.next() {
                        Some(e @ ('"' | '\\')) => s.push(e),
                        Some(e) => return Err(format!("bad escape `\\{e}`")),
                        None => return Err("unterminated string".into()),
                    },
                    Some(c) => s.push(c),
                    None => return Err("unterminated string".into()),
                }
            }
            tokens.push(Token::Quoted(s));
        } else {
            let mut s = String::new();
            while let Some(&c) = chars.peek() {
                if c.is_whitespace() {
                    break;
                }
                s.push(c);
                chars.next();
            }
            tokens.push(Token::Bare(s));
        }
    }
    Ok(tokens)
}

fn parse_id(token: &Token, line: usize) -> std::result::Result<VertexId, ParseError> {
    match token {
        Token::Quoted(s) => Ok(VertexId::Name(s.clone())),
        Token::Bare(s) => s
            .parse::<i64>()
            .map(VertexId::Int)
            .map_err(|_| err(line, ParseErrorKind::Malformed(format!("bad vertex id `{s}`")))),
    }
}

fn parse_number(token: &Token, line: usize) -> std::result::Result<Rational, ParseError> {
    let s = match token {
        Token::Bare(s) => s.as_str(),
        Token::Quoted(s) => return Err(err(line, ParseErrorKind::BadNumber(s.clone()))),
    };
    parse_exact(s).ok_or_else(|| err(line, ParseErrorKind::BadNumber(s.to_string())))
}

/// Exact value of `p/q` or a decimal literal such as `-1.25e-3`.
pub fn parse_exact(s: &str) -> Option<Rational> {
    if let Some((p, q)) = s.split_once('/') {
        let p: BigInt = p.parse().ok()?;
        let q: BigInt = q.parse().ok()?;
        if q.is_zero() || q.is_negative() {
            return None;
        }
        return Some(Rational::new(p, q));
    }
    let (mantissa, exponent) = match s.find(['e', 'E']) {
        Some(i) => (&s[..i], s[i + 1..].parse::<i32>().ok()?),
        None => (s, 0),
    };
    let (negative, digits) = match mantissa.strip_prefix('-') {
        Some(rest) => (true, rest),
        None => (false, mantissa.strip_prefix('+').unwrap_or(mantissa)),
    };
    let (int_part, frac_part) = digits.split_once('.').unwrap_or((digits, ""));
    if int_part.is_empty() && frac_part.is_empty() {
        return None;
    }
    if !int_part.chars().chain(frac_part.chars()).all(|c| c.is_ascii_digit()) {
        return None;
    }
    let all: BigInt = format!("0{int_part}{frac_part}").parse().ok()?;
    let scale = exponent - frac_part.len() as i32;
    let ten = BigInt::from(10);
    let mut value = if scale >= 0 {
        Rational::from_integer(all * num_traits::pow(ten, scale as usize))
    } else {
        Rational::new(all, num_traits::pow(ten, (-scale) as usize))
    };
    if negative {
        value = -value;
    }
    Some(value)
}
