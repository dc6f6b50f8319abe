//! Line-oriented crystal configuration.
//!
//! ```text
//! # comment
//! p = 5
//! E = [-5, 1]
//! precision = 12
//! degree = 6
//! A1 = [[-3, 1/5], [[0, 1], 2*5^-1 + O(5^4)]]
//! ```
//!
//! Matrix entries are either a scalar or a π-basis list of scalars. A scalar
//! is a rational `n/d`, a power form `u*b^v`, or either followed by `+ O(p^N)`.

use std::fmt;

use htcrystal::{HtCrystal, KElement, KMatrix, LocalField, PadicScalar, PrecisionPolicy};
use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{Signed, Zero};

pub const DEFAULT_PRECISION: i64 = 12;
pub const DEFAULT_DEGREE: usize = 6;

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Scalar {
    Exact(BigRational),
    /// `value + O(base^precision)`.
    Approx {
        value: BigRational,
        base: u32,
        precision: i64,
    },
}

impl fmt::Display for Scalar {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Scalar::Exact(q) => write!(f, "{q}"),
            Scalar::Approx {
                value,
                base,
                precision,
            } => write!(f, "{value} + O({base}^{precision})"),
        }
    }
}

/// π-basis coefficients of one matrix entry.
pub type ElementLiteral = Vec<Scalar>;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CrystalConfig {
    pub p: u32,
    pub eisenstein: Vec<BigRational>,
    pub precision: i64,
    pub degree: usize,
    pub a1: Vec<Vec<ElementLiteral>>,
    pub seed: Option<u64>,
    pub count: Option<usize>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ErrorKind {
    Syntax,
    Semantic,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ConfigError {
    pub line: usize,
    pub column: usize,
    pub kind: ErrorKind,
    pub message: String,
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let kind = match self.kind {
            ErrorKind::Syntax => "syntax",
            ErrorKind::Semantic => "semantic",
        };
        write!(
            f,
            "line {}, column {}: {kind} error: {}",
            self.line, self.column, self.message
        )
    }
}

impl std::error::Error for ConfigError {}

#[derive(Clone, Debug)]
enum Node {
    List(Vec<Node>, usize),
    Atom(Scalar, usize),
}

impl Node {
    fn column(&self) -> usize {
        match self {
            Node::List(_, c) | Node::Atom(_, c) => *c,
        }
    }
}

struct Cursor {
    chars: Vec<char>,
    pos: usize,
    line: usize,
    offset: usize,
}

impl Cursor {
    fn new(src: &str, line: usize, offset: usize) -> Self {
        Cursor {
            chars: src.chars().collect(),
            pos: 0,
            line,
            offset,
        }
    }

    fn column(&self) -> usize {
        self.offset + self.pos + 1
    }

    fn err(&self, message: impl Into<String>) -> ConfigError {
        ConfigError {
            line: self.line,
            column: self.column(),
            kind: ErrorKind::Syntax,
            message: message.into(),
        }
    }

    fn skip_ws(&mut self) {
        while self.peek().is_some_and(char::is_whitespace) {
            self.pos += 1;
        }
    }

    fn peek(&self) -> Option<char> {
        self.chars.get(self.pos).copied()
    }

    fn eat(&mut self, c: char) -> bool {
        self.skip_ws();
        if self.peek() == Some(c) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn expect(&mut self, c: char) -> Result<(), ConfigError> {
        if self.eat(c) {
            Ok(())
        } else {
            Err(self.err(match self.peek() {
                Some(found) => format!("expected '{c}', found '{found}'"),
                None => format!("expected '{c}', found end of line"),
            }))
        }
    }

    fn integer(&mut self) -> Result<BigInt, ConfigError> {
        self.skip_ws();
        let start = self.pos;
        if matches!(self.peek(), Some('-') | Some('+')) {
            self.pos += 1;
        }
        let digits_start = self.pos;
        while self.peek().is_some_and(|c| c.is_ascii_digit()) {
            self.pos += 1;
        }
        if self.pos == digits_start {
            self.pos = start;
            return Err(self.err("expected an integer"));
        }
        let text: String = self.chars[start..self.pos].iter().collect();
        Ok(text.trim_start_matches('+').parse().expect("digits"))
    }

    fn small_integer(&mut self) -> Result<i64, ConfigError> {
        let col = self.column();
        let n = self.integer()?;
        i64::try_from(n).map_err(|_| ConfigError {
            column: col,
            ..self.err("integer out of range")
        })
    }

    fn value(&mut self) -> Result<Node, ConfigError> {
        self.skip_ws();
        let col = self.column();
        if self.eat('[') {
            let mut items = vec![];
            if self.eat(']') {
                return Ok(Node::List(items, col));
            }
            loop {
                items.push(self.value()?);
                if self.eat(',') {
                    continue;
                }
                self.expect(']')?;
                return Ok(Node::List(items, col));
            }
        }
        Ok(Node::Atom(self.scalar()?, col))
    }

    fn scalar(&mut self) -> Result<Scalar, ConfigError> {
        let n = self.integer()?;
        let value = if self.eat('/') {
            let col = self.column();
            let d = self.integer()?;
            if d.is_zero() {
                return Err(ConfigError {
                    column: col,
                    ..self.err("zero denominator")
                });
            }
            BigRational::new(n, d)
        } else if self.eat('*') {
            let base = self.integer()?;
            self.expect('^')?;
            let v = self.small_integer()?;
            let b = BigRational::from_integer(base);
            let pow = if v >= 0 {
                num_traits::pow(b, v as usize)
            } else {
                num_traits::pow(b, v.unsigned_abs() as usize).recip()
            };
            BigRational::from_integer(n) * pow
        } else {
            BigRational::from_integer(n)
        };
        // Optional "+ O(p^N)" or "- O(p^N)".
        let save = self.pos;
        self.skip_ws();
        if matches!(self.peek(), Some('+') | Some('-')) {
            self.pos += 1;
            self.skip_ws();
            if self.peek() == Some('O') {
                self.pos += 1;
                self.expect('(')?;
                let col = self.column();
                let base = self.small_integer()?;
                self.expect('^')?;
                let precision = self.small_integer()?;
                self.expect(')')?;
                let base = u32::try_from(base).map_err(|_| ConfigError {
                    column: col,
                    ..self.err("invalid base")
                })?;
                return Ok(Scalar::Approx {
                    value,
                    base,
                    precision,
                });
            }
            return Err(self.err("expected 'O(p^N)' after sign"));
        }
        self.pos = save;
        Ok(Scalar::Exact(value))
    }
}

fn semantic(line: usize, column: usize, message: impl Into<String>) -> ConfigError {
    ConfigError {
        line,
        column,
        kind: ErrorKind::Semantic,
        message: message.into(),
    }
}

fn exact(node: &Node, line: usize) -> Result<BigRational, ConfigError> {
    match node {
        Node::Atom(Scalar::Exact(q), _) => Ok(q.clone()),
        other => Err(semantic(line, other.column(), "expected an exact rational")),
    }
}

fn nonnegative(node: &Node, line: usize, what: &str) -> Result<u64, ConfigError> {
    let q = exact(node, line)?;
    if !q.is_integer() || q.is_negative() {
        return Err(semantic(line, node.column(), format!("{what} must be a non-negative integer")));
    }
    u64::try_from(q.to_integer()).map_err(|_| semantic(line, node.column(), format!("{what} out of range")))
}

fn element(node: &Node, line: usize) -> Result<ElementLiteral, ConfigError> {
    match node {
        Node::Atom(s, _) => Ok(vec![s.clone()]),
        Node::List(items, col) => {
            if items.is_empty() {
                return Err(semantic(line, *col, "empty element"));
            }
            items
                .iter()
                .map(|it| match it {
                    Node::Atom(s, _) => Ok(s.clone()),
                    Node::List(_, c) => Err(semantic(line, *c, "element coefficients must be scalars")),
                })
                .collect()
        }
    }
}

/// Parses and validates a configuration; errors carry a line and column.
pub fn parse_config(text: &str) -> Result<CrystalConfig, ConfigError> {
    let mut fields: Vec<(String, Node, usize)> = vec![];
    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        let body = raw.split('#').next().unwrap_or("");
        if body.trim().is_empty() {
            continue;
        }
        let Some(eq) = body.find('=') else {
            let col = body.len() - body.trim_start().len() + 1;
            return Err(ConfigError {
                line,
                column: col,
                kind: ErrorKind::Syntax,
                message: "expected 'key = value'".into(),
            });
        };
        let key = body[..eq].trim();
        let key_col = body.len() - body.trim_start().len() + 1;
        if key.is_empty() || !key.chars().all(|c| c.is_ascii_alphanumeric() || c == '_') {
            return Err(ConfigError {
                line,
                column: key_col,
                kind: ErrorKind::Syntax,
                message: format!("invalid key '{key}'"),
            });
        }
        let offset = body[..=eq].chars().count();
        let mut cur = Cursor::new(&body[eq + 1..], line, offset);
        let node = cur.value()?;
        cur.skip_ws();
        if cur.peek().is_some() {
            return Err(cur.err("unexpected trailing input"));
        }
        if fields.iter().any(|(k, _, _)| k == key) {
            return Err(semantic(line, key_col, format!("duplicate key '{key}'")));
        }
        fields.push((key.to_string(), node, line));
    }

    let get = |k: &str| fields.iter().find(|(key, _, _)| key == k);
    let last_line = text.lines().count().max(1);
    let missing = |k: &str| semantic(last_line, 1, format!("missing key '{k}'"));

    for (k, node, line) in &fields {
        if !["p", "E", "precision", "degree", "A1", "seed", "count"].contains(&k.as_str()) {
            return Err(semantic(*line, node.column(), format!("unknown key '{k}'")));
        }
    }

    let (p_node, p_line) = get("p").map(|(_, n, l)| (n, *l)).ok_or_else(|| missing("p"))?;
    let p = u32::try_from(nonnegative(p_node, p_line, "p")?)
        .map_err(|_| semantic(p_line, p_node.column(), "p out of range"))?;

    let (e_node, e_line) = get("E").map(|(_, n, l)| (n, *l)).ok_or_else(|| missing("E"))?;
    let eisenstein = match e_node {
        Node::List(items, _) => items
            .iter()
            .map(|n| exact(n, e_line))
            .collect::<Result<Vec<_>, _>>()?,
        other => return Err(semantic(e_line, other.column(), "E must be a coefficient list")),
    };

    let precision = match get("precision") {
        Some((_, n, l)) => {
            let v = nonnegative(n, *l, "precision")?;
            if v == 0 {
                return Err(semantic(*l, n.column(), "precision must be positive"));
            }
            v as i64
        }
        None => DEFAULT_PRECISION,
    };
    let degree = match get("degree") {
        Some((_, n, l)) => nonnegative(n, *l, "degree")? as usize,
        None => DEFAULT_DEGREE,
    };
    let seed = get("seed").map(|(_, n, l)| nonnegative(n, *l, "seed")).transpose()?;
    let count = get("count")
        .map(|(_, n, l)| nonnegative(n, *l, "count").map(|c| c as usize))
        .transpose()?;

    let (a_node, a_line) = get("A1").map(|(_, n, l)| (n, *l)).ok_or_else(|| missing("A1"))?;
    let rows = match a_node {
        Node::List(rows, _) if !rows.is_empty() => rows,
        other => return Err(semantic(a_line, other.column(), "A1 must be a non-empty list of rows")),
    };
    let d = rows.len();
    let mut a1 = vec![];
    for (i, row) in rows.iter().enumerate() {
        let Node::List(cells, col) = row else {
            return Err(semantic(a_line, row.column(), format!("row {} is not a list", i + 1)));
        };
        if cells.len() != d {
            return Err(semantic(
                a_line,
                *col,
                format!("row {} has {} entries, expected {d} (A1 must be square)", i + 1, cells.len()),
            ));
        }
        a1.push(cells.iter().map(|c| element(c, a_line)).collect::<Result<Vec<_>, _>>()?);
    }

    let config = CrystalConfig {
        p,
        eisenstein,
        precision,
        degree,
        a1,
        seed,
        count,
    };
    // Semantic validation of E and of p-adic literals.
    config
        .field(None, None)
        .map_err(|e| semantic(e_line, e_node.column(), e.to_string()))?;
    for row in &config.a1 {
        for entry in row {
            for s in entry {
                if let Scalar::Approx { base, .. } = s {
                    if *base != p {
                        return Err(semantic(a_line, a_node.column(), format!("O({base}^N) does not match p = {p}")));
                    }
                }
            }
        }
    }
    Ok(config)
}

impl CrystalConfig {
    pub fn rank(&self) -> usize {
        self.a1.len()
    }

    /// The field with the configured (or overridden) precision policy.
    pub fn field(&self, precision: Option<i64>, degree: Option<usize>) -> htcrystal::Result<LocalField> {
        let policy = PrecisionPolicy {
            target: precision.unwrap_or(self.precision),
            max_degree: degree.unwrap_or(self.degree).max(2),
        };
        LocalField::new(self.p, &self.eisenstein, policy)
    }

    pub fn element(&self, field: &LocalField, lit: &ElementLiteral) -> KElement {
        let n = field.working_precision();
        let pads = lit
            .iter()
            .map(|s| match s {
                Scalar::Exact(q) => PadicScalar::from_rational(field.p(), q, n),
                Scalar::Approx {
                    value, precision, ..
                } if value.is_zero() => PadicScalar::zero_at(field.p(), *precision),
                Scalar::Approx {
                    value, precision, ..
                } => PadicScalar::from_rational(field.p(), value, *precision),
            })
            .collect();
        field.element_from_padics(pads)
    }

    pub fn crystal(&self, field: &LocalField) -> HtCrystal {
        let rows = self
            .a1
            .iter()
            .map(|r| r.iter().map(|lit| self.element(field, lit)).collect())
            .collect();
        HtCrystal::new(KMatrix::from_rows(field, rows).expect("validated shape"))
    }

    /// Serializes back to the config grammar; `parse_config(to_text())` is the identity.
    pub fn to_text(&self) -> String {
        let list = |v: Vec<String>| format!("[{}]", v.join(", "));
        let e = list(self.eisenstein.iter().map(|q| q.to_string()).collect());
        let a1 = list(
            self.a1
                .iter()
                .map(|row| {
                    list(
                        row.iter()
                            .map(|lit| list(lit.iter().map(Scalar::to_string).collect()))
                            .collect(),
                    )
                })
                .collect(),
        );
        let mut out = format!(
            "p = {}\nE = {e}\nprecision = {}\ndegree = {}\nA1 = {a1}\n",
            self.p, self.precision, self.degree
        );
        if let Some(s) = self.seed {
            out.push_str(&format!("seed = {s}\n"));
        }
        if let Some(c) = self.count {
            out.push_str(&format!("count = {c}\n"));
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rank_one_config() {
        let c = parse_config("p = 5\nE = [-5, 1]\nA1 = [[-3]]\nprecision = 12").unwrap();
        assert_eq!(c.p, 5);
        assert_eq!(c.rank(), 1);
        assert_eq!(c.precision, 12);
        assert_eq!(c.degree, DEFAULT_DEGREE);
        assert_eq!(c.a1[0][0], vec![Scalar::Exact(BigRational::from_integer((-3).into()))]);
    }

    #[test]
    fn not_eisenstein() {
        let err = parse_config("p = 5\nE = [1, 1]\nA1 = [[0]]").unwrap_err();
        assert_eq!(err.kind, ErrorKind::Semantic);
        assert_eq!((err.line, err.column), (2, 5));
        assert!(err.message.contains("Eisenstein"), "{}", err.message);
    }

    #[test]
    fn ragged_matrix_points_at_row() {
        let err = parse_config("p = 5\nE = [-5, 1]\nA1 = [[1,2],[3]]").unwrap_err();
        assert_eq!(err.kind, ErrorKind::Semantic);
        assert_eq!((err.line, err.column), (3, 13));
        assert!(err.message.contains("row 2"));
    }

    #[test]
    fn syntax_errors_have_locations() {
        let err = parse_config("p = 5\nE = [-5, 1\n").unwrap_err();
        assert_eq!(err.kind, ErrorKind::Syntax);
        assert_eq!(err.line, 2);
        let err = parse_config("p = 5\nE = [-5, 1]\nA1 = [[1/0]]").unwrap_err();
        assert_eq!((err.line, err.column), (3, 10));
        let err = parse_config("just words").unwrap_err();
        assert_eq!((err.line, err.column, err.kind), (1, 1, ErrorKind::Syntax));
    }

    #[test]
    fn padic_and_pi_basis_literals() {
        let c = parse_config(
            "# rank two\np = 3\nE = [-3, 0, 1]\nA1 = [[[1/2, 3], 2*3^-1 + O(3^5)], [0, [0, 1]]] # trailing\n",
        )
        .unwrap();
        let k = c.field(None, None).unwrap();
        let a = c.crystal(&k);
        assert!(a.a1().get(1, 1).eq_at_precision(&k.pi()));
        let x = a.a1().get(0, 1);
        assert_eq!(x.precision_p(), Some(5));
        assert!(x.eq_at_precision(&k.element(&[BigRational::new(2.into(), 3.into())])));
    }

    #[test]
    fn mismatched_padic_base() {
        let err = parse_config("p = 3\nE = [-3, 1]\nA1 = [[1 + O(5^3)]]").unwrap_err();
        assert_eq!(err.kind, ErrorKind::Semantic);
    }

    #[test]
    fn unknown_and_duplicate_keys() {
        assert!(parse_config("p = 3\np = 3\nE = [-3, 1]\nA1 = [[1]]").is_err());
        let err = parse_config("p = 3\nE = [-3, 1]\nA1 = [[1]]\nfoo = 1").unwrap_err();
        assert!(err.message.contains("unknown key"));
    }

    #[test]
    fn text_round_trip() {
        let src = "p = 2\nE = [2, 2, 1]\nprecision = 10\ndegree = 8\nA1 = [[[1/3, -1], 5 + O(2^7)], [[0], [4, 1]]]\nseed = 9\n";
        let c = parse_config(src).unwrap();
        assert_eq!(parse_config(&c.to_text()).unwrap(), c);
    }
}
