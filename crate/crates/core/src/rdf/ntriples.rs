use std::fmt::Write as _;

use thiserror::Error;

use super::graph::Graph;
use super::term::{validate_iri, Datatype, Literal, Term};

/// Parse failure with 1-based line and column (in characters).
#[derive(Debug, Error, PartialEq, Eq)]
#[error("line {line}, column {column}: {message}")]
pub struct ParseError {
    pub line: usize,
    pub column: usize,
    pub message: String,
}

struct Cursor<'a> {
    chars: Vec<char>,
    pos: usize,
    line: usize,
    _src: &'a str,
}

impl<'a> Cursor<'a> {
    fn new(src: &'a str, line: usize) -> Self {
        Cursor {
            chars: src.chars().collect(),
            pos: 0,
            line,
            _src: src,
        }
    }

    fn err(&self, message: impl Into<String>) -> ParseError {
        self.err_at(self.pos, message)
    }

    fn err_at(&self, pos: usize, message: impl Into<String>) -> ParseError {
        ParseError {
            line: self.line,
            column: pos + 1,
            message: message.into(),
        }
    }

    fn peek(&self) -> Option<char> {
        self.chars.get(self.pos).copied()
    }

    fn bump(&mut self) -> Option<char> {
        let c = self.peek()?;
        self.pos += 1;
        Some(c)
    }

    fn skip_ws(&mut self) -> bool {
        let start = self.pos;
        while matches!(self.peek(), Some(' ' | '\t')) {
            self.pos += 1;
        }
        self.pos > start
    }

    fn at_end_or_comment(&self) -> bool {
        matches!(self.peek(), None | Some('#'))
    }

    fn expect(&mut self, c: char) -> Result<(), ParseError> {
        match self.peek() {
            Some(x) if x == c => {
                self.pos += 1;
                Ok(())
            }
            Some(x) => Err(self.err(format!("expected `{c}`, found `{x}`"))),
            None => Err(self.err(format!("expected `{c}`, found end of line"))),
        }
    }

    fn hex_escape(&mut self, len: usize) -> Result<char, ParseError> {
        let start = self.pos;
        let mut v = 0u32;
        for _ in 0..len {
            let d = self
                .bump()
                .and_then(|c| c.to_digit(16))
                .ok_or_else(|| self.err_at(start, "malformed unicode escape"))?;
            v = v * 16 + d;
        }
        char::from_u32(v).ok_or_else(|| self.err_at(start, "escape is not a Unicode scalar value"))
    }

    fn iri(&mut self) -> Result<String, ParseError> {
        let start = self.pos;
        self.expect('<')?;
        let mut out = String::new();
        loop {
            match self.bump() {
                None => return Err(self.err_at(start, "unterminated IRI")),
                Some('>') => break,
                Some('\\') => {
                    let c = match self.bump() {
                        Some('u') => self.hex_escape(4)?,
                        Some('U') => self.hex_escape(8)?,
                        _ => return Err(self.err_at(self.pos - 1, "invalid escape in IRI")),
                    };
                    out.push(c);
                }
                Some(c) => out.push(c),
            }
        }
        validate_iri(&out).map_err(|e| self.err_at(start, e.to_string()))?;
        if !out.contains(':') {
            return Err(self.err_at(start, format!("IRI <{out}> is not absolute")));
        }
        Ok(out)
    }

    fn subject_or_predicate(&mut self, what: &str) -> Result<Term, ParseError> {
        match self.peek() {
            Some('<') => Ok(Term::Iri(self.iri()?)),
            Some('_') => Err(self.err("blank nodes are not supported")),
            Some(c) => Err(self.err(format!("expected IRI as {what}, found `{c}`"))),
            None => Err(self.err(format!("expected {what}, found end of line"))),
        }
    }

    fn object(&mut self) -> Result<Term, ParseError> {
        match self.peek() {
            Some('<') => Ok(Term::Iri(self.iri()?)),
            Some('"') => self.literal(),
            Some('_') => Err(self.err("blank nodes are not supported")),
            Some(c) => Err(self.err(format!("expected object, found `{c}`"))),
            None => Err(self.err("expected object, found end of line")),
        }
    }

    fn literal(&mut self) -> Result<Term, ParseError> {
        let start = self.pos;
        self.expect('"')?;
        let mut lexical = String::new();
        loop {
            match self.bump() {
                None => return Err(self.err_at(start, "unterminated literal")),
                Some('"') => break,
                Some('\\') => {
                    let c = match self.bump() {
                        Some('t') => '\t',
                        Some('b') => '\u{8}',
                        Some('n') => '\n',
                        Some('r') => '\r',
                        Some('f') => '\u{c}',
                        Some('"') => '"',
                        Some('\'') => '\'',
                        Some('\\') => '\\',
                        Some('u') => self.hex_escape(4)?,
                        Some('U') => self.hex_escape(8)?,
                        _ => return Err(self.err_at(self.pos - 1, "invalid escape in literal")),
                    };
                    lexical.push(c);
                }
                Some(c) => lexical.push(c),
            }
        }
        let datatype = match self.peek() {
            Some('^') => {
                self.pos += 1;
                self.expect('^')?;
                let at = self.pos;
                let iri = self.iri()?;
                Datatype::from_iri(&iri).map_err(|e| self.err_at(at, e.to_string()))?
            }
            Some('@') => return Err(self.err("language-tagged literals are not supported")),
            _ => Datatype::String,
        };
        Literal::new(lexical, datatype)
            .map(Term::Literal)
            .map_err(|e| self.err_at(start, e.to_string()))
    }
}

/// Parses an N-Triples document. Comments and blank lines are skipped.
pub fn parse_ntriples(input: &str) -> Result<Graph, ParseError> {
    let mut graph = Graph::new();
    for (idx, raw) in input.lines().enumerate() {
        let mut c = Cursor::new(raw, idx + 1);
        c.skip_ws();
        if c.at_end_or_comment() {
            continue;
        }
        let s = c.subject_or_predicate("subject")?;
        if !c.skip_ws() {
            return Err(c.err("expected whitespace after subject"));
        }
        let p = c.subject_or_predicate("predicate")?;
        if !c.skip_ws() {
            return Err(c.err("expected whitespace after predicate"));
        }
        let o = c.object()?;
        c.skip_ws();
        c.expect('.')?;
        c.skip_ws();
        if !c.at_end_or_comment() {
            return Err(c.err("unexpected content after `.`"));
        }
        graph.add(&s, &p, &o);
    }
    Ok(graph)
}

/// Canonical N-Triples: one line per triple, sorted by serialized terms.
pub fn serialize_ntriples(graph: &Graph) -> String {
    let mut lines: Vec<(String, String, String)> = graph
        .iter()
        .map(|(s, p, o)| (s.to_string(), p.to_string(), o.to_string()))
        .collect();
    lines.sort();
    let mut out = String::with_capacity(lines.len() * 96);
    for (s, p, o) in lines {
        let _ = writeln!(out, "{s} {p} {o} .");
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_terms_and_comments() {
        let doc = "# header\n\n<http://x/a> <http://x/p> <http://x/b> .\n\
                   <http://x/a>\t<http://x/q> \"1.5\"^^<http://www.w3.org/2001/XMLSchema#decimal> . # tail\n\
                   <http://x/a> <http://x/r> \"say \\\"hi\\\"\\n\" .\n";
        let g = parse_ntriples(doc).unwrap();
        assert_eq!(g.len(), 3);
        let lits: Vec<_> = g.iter().filter_map(|(_, _, o)| o.as_literal().cloned()).collect();
        assert_eq!(lits[0].as_f64(), Some(1.5));
        assert_eq!(lits[1].lexical(), "say \"hi\"\n");
        assert_eq!(lits[1].datatype(), Datatype::String);
    }

    #[test]
    fn error_positions() {
        let e = parse_ntriples("<http://x/a> <http://x/p> <http://x/b> .\n<http://x/a> _:b <http://x/c> .")
            .unwrap_err();
        assert_eq!((e.line, e.column), (2, 14));
        let e = parse_ntriples("<http://x/a> <http://x/p> <http://x/b>").unwrap_err();
        assert_eq!((e.line, e.column), (1, 39));
        let e = parse_ntriples("<http://x/a> <http://x/p> \"x\"^^<http://x/dt> .").unwrap_err();
        assert_eq!(e.line, 1);
        assert!(e.message.contains("unsupported datatype"));
        let e = parse_ntriples("<a> <http://x/p> <http://x/b> .").unwrap_err();
        assert!(e.message.contains("absolute"));
        assert!(parse_ntriples("<http://x/a> <http://x/p> \"x\"@en .").is_err());
        assert!(parse_ntriples("<http://x/a> <http://x/p> \"abc .").is_err());
        assert!(parse_ntriples("<http://x/a> <http://x/p> <http://x/b> . x").is_err());
    }

    #[test]
    fn serialization_is_sorted_and_round_trips() {
        let doc = "<http://x/b> <http://x/p> \"tab\\there\" .\n<http://x/a> <http://x/p> \"2\"^^<http://www.w3.org/2001/XMLSchema#integer> .\n";
        let g = parse_ntriples(doc).unwrap();
        let out = serialize_ntriples(&g);
        assert!(out.starts_with("<http://x/a>"));
        let again = parse_ntriples(&out).unwrap();
        assert_eq!(g, again);
        assert_eq!(serialize_ntriples(&again), out);
    }
}
