use std::fmt;

use thiserror::Error;

use super::vocab;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum TermError {
    #[error("IRI must be non-empty")]
    EmptyIri,
    #[error("IRI `{0}` contains a forbidden character")]
    InvalidIri(String),
    #[error("unsupported datatype <{0}>")]
    UnsupportedDatatype(String),
    #[error("`{lexical}` is not a valid {datatype} lexical form")]
    InvalidLexical { lexical: String, datatype: Datatype },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Datatype {
    Decimal,
    Integer,
    String,
    DateTime,
}

impl Datatype {
    pub fn iri(self) -> &'static str {
        match self {
            Datatype::Decimal => vocab::XSD_DECIMAL,
            Datatype::Integer => vocab::XSD_INTEGER,
            Datatype::String => vocab::XSD_STRING,
            Datatype::DateTime => vocab::XSD_DATETIME,
        }
    }

    pub fn from_iri(iri: &str) -> Result<Self, TermError> {
        match iri {
            vocab::XSD_DECIMAL => Ok(Datatype::Decimal),
            vocab::XSD_INTEGER => Ok(Datatype::Integer),
            vocab::XSD_STRING => Ok(Datatype::String),
            vocab::XSD_DATETIME => Ok(Datatype::DateTime),
            other => Err(TermError::UnsupportedDatatype(other.to_string())),
        }
    }
}

impl fmt::Display for Datatype {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let name = match self {
            Datatype::Decimal => "xsd:decimal",
            Datatype::Integer => "xsd:integer",
            Datatype::String => "xsd:string",
            Datatype::DateTime => "xsd:dateTime",
        };
        f.write_str(name)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Literal {
    lexical: String,
    datatype: Datatype,
}

impl Literal {
    pub fn new(lexical: impl Into<String>, datatype: Datatype) -> Result<Self, TermError> {
        let lexical = lexical.into();
        let ok = match datatype {
            Datatype::Decimal => is_decimal(&lexical),
            Datatype::Integer => is_integer(&lexical),
            Datatype::DateTime => is_datetime(&lexical),
            Datatype::String => true,
        };
        if !ok {
            return Err(TermError::InvalidLexical { lexical, datatype });
        }
        Ok(Literal { lexical, datatype })
    }

    /// Decimal literal from a finite float, written in plain positional notation.
    pub fn decimal(value: f64) -> Self {
        assert!(value.is_finite(), "decimal literal from non-finite value");
        let mut lexical = format!("{value}");
        if lexical == "-0" {
            lexical = "0".into();
        }
        Literal {
            lexical,
            datatype: Datatype::Decimal,
        }
    }

    pub fn integer(value: i64) -> Self {
        Literal {
            lexical: value.to_string(),
            datatype: Datatype::Integer,
        }
    }

    pub fn string(value: impl Into<String>) -> Self {
        Literal {
            lexical: value.into(),
            datatype: Datatype::String,
        }
    }

    pub fn lexical(&self) -> &str {
        &self.lexical
    }

    pub fn datatype(&self) -> Datatype {
        self.datatype
    }

    /// Numeric value of decimal and integer literals.
    pub fn as_f64(&self) -> Option<f64> {
        match self.datatype {
            Datatype::Decimal | Datatype::Integer => self.lexical.parse().ok(),
            _ => None,
        }
    }
}

fn is_integer(s: &str) -> bool {
    let digits = s.strip_prefix(['+', '-']).unwrap_or(s);
    !digits.is_empty() && digits.bytes().all(|b| b.is_ascii_digit())
}

fn is_decimal(s: &str) -> bool {
    let body = s.strip_prefix(['+', '-']).unwrap_or(s);
    let (int, frac) = match body.split_once('.') {
        Some((i, f)) => (i, Some(f)),
        None => (body, None),
    };
    let all_digits = |p: &str| p.bytes().all(|b| b.is_ascii_digit());
    match frac {
        None => !int.is_empty() && all_digits(int),
        Some(f) => (!int.is_empty() || !f.is_empty()) && all_digits(int) && all_digits(f),
    }
}

fn is_datetime(s: &str) -> bool {
    // YYYY-MM-DDThh:mm:ss with optional fraction and zone
    let b = s.as_bytes();
    b.len() >= 19
        && b[4] == b'-'
        && b[7] == b'-'
        && b[10] == b'T'
        && b[13] == b':'
        && b[16] == b':'
        && [0, 1, 2, 3, 5, 6, 8, 9, 11, 12, 14, 15, 17, 18]
            .iter()
            .all(|&i| b[i].is_ascii_digit())
}

/// An RDF term: an absolute IRI or a typed literal.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Term {
    Iri(String),
    Literal(Literal),
}

impl Term {
    pub fn iri(value: impl Into<String>) -> Result<Self, TermError> {
        let value = value.into();
        validate_iri(&value)?;
        Ok(Term::Iri(value))
    }

    pub fn literal(lit: Literal) -> Self {
        Term::Literal(lit)
    }

    pub fn is_iri(&self) -> bool {
        matches!(self, Term::Iri(_))
    }

    pub fn is_literal(&self) -> bool {
        matches!(self, Term::Literal(_))
    }

    pub fn as_iri(&self) -> Option<&str> {
        match self {
            Term::Iri(s) => Some(s),
            Term::Literal(_) => None,
        }
    }

    pub fn as_literal(&self) -> Option<&Literal> {
        match self {
            Term::Literal(l) => Some(l),
            Term::Iri(_) => None,
        }
    }
}

pub(crate) fn validate_iri(value: &str) -> Result<(), TermError> {
    if value.is_empty() {
        return Err(TermError::EmptyIri);
    }
    let bad = value
        .chars()
        .any(|c| c <= ' ' || matches!(c, '<' | '>' | '"' | '{' | '}' | '|' | '^' | '`' | '\\'));
    if bad {
        return Err(TermError::InvalidIri(value.to_string()));
    }
    Ok(())
}

/// N-Triples rendering of a single term.
impl fmt::Display for Term {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Term::Iri(i) => write!(f, "<{i}>"),
            Term::Literal(l) => {
                f.write_str("\"")?;
                for c in l.lexical.chars() {
                    match c {
                        '"' => f.write_str("\\\"")?,
                        '\\' => f.write_str("\\\\")?,
                        '\n' => f.write_str("\\n")?,
                        '\r' => f.write_str("\\r")?,
                        '\t' => f.write_str("\\t")?,
                        c if (c as u32) < 0x20 || c as u32 == 0x7f => {
                            write!(f, "\\u{:04X}", c as u32)?
                        }
                        c => write!(f, "{c}")?,
                    }
                }
                f.write_str("\"")?;
                if l.datatype != Datatype::String {
                    write!(f, "^^<{}>", l.datatype.iri())?;
                }
                Ok(())
            }
        }
    }
}

/// `(subject, predicate, object)` with IRI subject and predicate.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Triple {
    pub subject: Term,
    pub predicate: Term,
    pub object: Term,
}

impl Triple {
    /// Panics unless subject and predicate are IRIs.
    pub fn new(subject: Term, predicate: Term, object: Term) -> Self {
        assert!(subject.is_iri(), "triple subject must be an IRI");
        assert!(predicate.is_iri(), "triple predicate must be an IRI");
        Triple {
            subject,
            predicate,
            object,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn iri_validation() {
        assert!(Term::iri("http://x.org/a").is_ok());
        assert_eq!(Term::iri(""), Err(TermError::EmptyIri));
        assert!(Term::iri("http://x.org/a b").is_err());
        assert!(Term::iri("http://x.org/<a>").is_err());
    }

    #[test]
    fn lexical_forms() {
        assert!(Literal::new("1.0", Datatype::Decimal).is_ok());
        assert!(Literal::new("-.5", Datatype::Decimal).is_ok());
        assert!(Literal::new("12", Datatype::Decimal).is_ok());
        assert!(Literal::new("1e5", Datatype::Decimal).is_err());
        assert!(Literal::new("+7", Datatype::Integer).is_ok());
        assert!(Literal::new("7.0", Datatype::Integer).is_err());
        assert!(Literal::new("2024-01-02T03:04:05Z", Datatype::DateTime).is_ok());
        assert!(Literal::new("2024-01-02", Datatype::DateTime).is_err());
    }

    #[test]
    fn decimal_constructor_never_uses_exponents() {
        for v in [1e-7, 123456789.125, 0.1, -3.0, 1e21] {
            let l = Literal::decimal(v);
            assert!(is_decimal(l.lexical()), "{}", l.lexical());
            assert_eq!(l.as_f64(), Some(v));
        }
        assert_eq!(Literal::decimal(-0.0).lexical(), "0");
    }
}
