//! Coordinate functions as Boolean expressions, one `y<i> = <expr>` line per
//! coordinate. Precedence from tightest: `!`, `&`, `^`, `|`; binary operators
//! associate to the left.

use std::fmt;

use super::ParseError;
use crate::bits::{State, MAX_DIM};
use crate::network::Network;

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Expr {
    /// x_i, 1-based.
    Var(usize),
    Const(bool),
    Not(Box<Expr>),
    And(Box<Expr>, Box<Expr>),
    Xor(Box<Expr>, Box<Expr>),
    Or(Box<Expr>, Box<Expr>),
}

impl Expr {
    /// Value at μ, with x_i read from coordinate i.
    pub fn eval(&self, mu: State) -> bool {
        match self {
            Expr::Var(i) => mu.get(*i),
            Expr::Const(b) => *b,
            Expr::Not(e) => !e.eval(mu),
            Expr::And(a, b) => a.eval(mu) && b.eval(mu),
            Expr::Xor(a, b) => a.eval(mu) != b.eval(mu),
            Expr::Or(a, b) => a.eval(mu) || b.eval(mu),
        }
    }

    /// Largest variable index used, 0 for none.
    pub fn max_var(&self) -> usize {
        match self {
            Expr::Var(i) => *i,
            Expr::Const(_) => 0,
            Expr::Not(e) => e.max_var(),
            Expr::And(a, b) | Expr::Xor(a, b) | Expr::Or(a, b) => a.max_var().max(b.max_var()),
        }
    }

    fn precedence(&self) -> u8 {
        match self {
            Expr::Or(..) => 1,
            Expr::Xor(..) => 2,
            Expr::And(..) => 3,
            Expr::Not(_) => 4,
            Expr::Var(_) | Expr::Const(_) => 5,
        }
    }
}

impl fmt::Display for Expr {
    /// Minimal parentheses; parsing the output gives back the same tree.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let sub = |f: &mut fmt::Formatter<'_>, e: &Expr, parens: bool| {
            if parens {
                write!(f, "({e})")
            } else {
                write!(f, "{e}")
            }
        };
        match self {
            Expr::Var(i) => write!(f, "x{i}"),
            Expr::Const(b) => f.write_str(if *b { "1" } else { "0" }),
            Expr::Not(e) => {
                f.write_str("!")?;
                sub(f, e, e.precedence() < 4)
            }
            Expr::And(a, b) | Expr::Xor(a, b) | Expr::Or(a, b) => {
                let p = self.precedence();
                let op = match self {
                    Expr::And(..) => " & ",
                    Expr::Xor(..) => " ^ ",
                    _ => " | ",
                };
                sub(f, a, a.precedence() < p)?;
                f.write_str(op)?;
                sub(f, b, b.precedence() <= p)
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Tok {
    Var(usize),
    Const(bool),
    Not,
    And,
    Xor,
    Or,
    Open,
    Close,
}

/// Tokens paired with their 1-based column, measured from `base`.
fn lex(text: &str, line: usize, base: usize) -> Result<Vec<(Tok, usize)>, ParseError> {
    let bytes = text.as_bytes();
    let mut out = Vec::new();
    let mut i = 0;
    while i < bytes.len() {
        let col = base + i + 1;
        let tok = match bytes[i] {
            b' ' | b'\t' => {
                i += 1;
                continue;
            }
            b'!' => Tok::Not,
            b'&' => Tok::And,
            b'^' => Tok::Xor,
            b'|' => Tok::Or,
            b'(' => Tok::Open,
            b')' => Tok::Close,
            b'0' => Tok::Const(false),
            b'1' => Tok::Const(true),
            b'x' => {
                let digits = bytes[i + 1..].iter().take_while(|b| b.is_ascii_digit()).count();
                let idx: usize = text[i + 1..i + 1 + digits]
                    .parse()
                    .ok()
                    .filter(|&k| k >= 1)
                    .ok_or_else(|| ParseError::new(line, col, "expected a variable index after `x`"))?;
                out.push((Tok::Var(idx), col));
                i += 1 + digits;
                continue;
            }
            other => {
                let c = text[i..].chars().next().unwrap_or(other as char);
                return Err(ParseError::new(line, col, format!("unexpected character `{c}`")));
            }
        };
        out.push((tok, col));
        i += 1;
    }
    Ok(out)
}

struct Parser {
    toks: Vec<(Tok, usize)>,
    pos: usize,
    line: usize,
    end_col: usize,
}

impl Parser {
    fn peek(&self) -> Option<Tok> {
        self.toks.get(self.pos).map(|t| t.0)
    }

    fn col(&self) -> usize {
        self.toks.get(self.pos).map_or(self.end_col, |t| t.1)
    }

    fn error(&self, expected: &str) -> ParseError {
        match self.toks.get(self.pos) {
            None => ParseError::new(self.line, self.end_col, format!("syntax error at end of input: expected {expected}")),
            Some(_) => ParseError::new(self.line, self.col(), format!("syntax error: expected {expected}")),
        }
    }

    fn binary(&mut self, level: u8) -> Result<Expr, ParseError> {
        if level == 4 {
            return self.unary();
        }
        let mut lhs = self.binary(level + 1)?;
        loop {
            let build: fn(Box<Expr>, Box<Expr>) -> Expr = match (level, self.peek()) {
                (1, Some(Tok::Or)) => Expr::Or,
                (2, Some(Tok::Xor)) => Expr::Xor,
                (3, Some(Tok::And)) => Expr::And,
                _ => return Ok(lhs),
            };
            self.pos += 1;
            let rhs = self.binary(level + 1)?;
            lhs = build(Box::new(lhs), Box::new(rhs));
        }
    }

    fn unary(&mut self) -> Result<Expr, ParseError> {
        let tok = self.peek().ok_or_else(|| self.error("an operand"))?;
        self.pos += 1;
        match tok {
            Tok::Not => Ok(Expr::Not(Box::new(self.unary()?))),
            Tok::Var(i) => Ok(Expr::Var(i)),
            Tok::Const(b) => Ok(Expr::Const(b)),
            Tok::Open => {
                let inner = self.binary(1)?;
                if self.peek() != Some(Tok::Close) {
                    return Err(self.error("`)`"));
                }
                self.pos += 1;
                Ok(inner)
            }
            _ => {
                self.pos -= 1;
                Err(self.error("an operand"))
            }
        }
    }
}

fn parse_at(text: &str, line: usize, base: usize) -> Result<(Expr, Vec<(Tok, usize)>), ParseError> {
    let toks = lex(text, line, base)?;
    let mut p = Parser { toks, pos: 0, line, end_col: base + text.trim_end().len() + 1 };
    let e = p.binary(1)?;
    if p.pos < p.toks.len() {
        return Err(p.error("an operator or end of input"));
    }
    Ok((e, p.toks))
}

/// Parses a single expression (reported as line 1).
pub fn parse_expr(text: &str) -> Result<Expr, ParseError> {
    parse_at(text, 1, 0).map(|(e, _)| e)
}

/// Reads `y<i> = <expr>` lines, exactly one for each i in 1..=n, where n is
/// the largest index defined. `#` starts a comment.
pub fn parse_network_exprs(text: &str) -> Result<Network, ParseError> {
    let mut defs: Vec<Option<(Expr, usize)>> = Vec::new();
    let mut last_line = 1;
    let mut var_uses: Vec<(usize, usize, usize)> = Vec::new(); // (index, line, column)
    for (k, raw) in text.lines().enumerate() {
        let ln = k + 1;
        let line = raw.split('#').next().unwrap_or("");
        if line.trim().is_empty() {
            continue;
        }
        last_line = ln;
        let lead = line.len() - line.trim_start().len();
        let body = line.trim_start();
        let Some((lhs, rhs)) = body.split_once('=') else {
            return Err(ParseError::new(ln, lead + 1, "expected `y<i> = <expr>`"));
        };
        let idx: usize = lhs
            .trim()
            .strip_prefix('y')
            .and_then(|d| d.parse().ok())
            .filter(|&i| (1..=MAX_DIM).contains(&i))
            .ok_or_else(|| ParseError::new(ln, lead + 1, format!("bad coordinate name `{}`", lhs.trim())))?;
        let base = lead + lhs.len() + 1;
        let (e, toks) = parse_at(rhs, ln, base)?;
        for (t, col) in toks {
            if let Tok::Var(i) = t {
                var_uses.push((i, ln, col));
            }
        }
        if defs.len() < idx {
            defs.resize(idx, None);
        }
        if let Some((_, first)) = &defs[idx - 1] {
            return Err(ParseError::new(ln, lead + 1, format!("coordinate {idx} defined twice (first on line {first})")));
        }
        defs[idx - 1] = Some((e, ln));
    }
    if defs.is_empty() {
        return Err(ParseError::new(last_line, 0, "no coordinate functions given"));
    }
    let dim = defs.len();
    if let Some(i) = defs.iter().position(Option::is_none) {
        return Err(ParseError::new(last_line, 0, format!("coordinate {} is not defined", i + 1)));
    }
    if let Some(&(i, ln, col)) = var_uses.iter().find(|u| u.0 > dim) {
        return Err(ParseError::new(ln, col, format!("undefined variable x{i}: the network has {dim} coordinates")));
    }
    let exprs: Vec<Expr> = defs.into_iter().map(|d| d.expect("checked").0).collect();
    compile_exprs(&exprs).map_err(|e| ParseError::new(last_line, 0, e.to_string()))
}

/// The truth table of y_i = `exprs[i-1]`.
pub fn compile_exprs(exprs: &[Expr]) -> crate::Result<Network> {
    let dim = exprs.len();
    if let Some(big) = exprs.iter().map(Expr::max_var).find(|&m| m > dim) {
        return Err(crate::Error::DimensionMismatch { expected: dim, found: big });
    }
    Network::from_fn(dim, |mu| {
        let coords: Vec<bool> = exprs.iter().map(|e| e.eval(mu)).collect();
        State::from_coords(&coords).expect("dimension within range")
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::network::fixtures::*;
    use proptest::prelude::*;

    #[test]
    fn net1_from_expressions() {
        let text = "y1 = !x1 | (x1 & !x2)\ny2 = !x1 | (x1 & x2)\n";
        assert_eq!(parse_network_exprs(text).unwrap(), net1());
        assert_eq!(parse_network_exprs("y1 = x1").unwrap(), Network::identity(1).unwrap());
        let reordered = "# constant\n  y2 = 0\ny1 = 1 # first\n";
        assert_eq!(parse_network_exprs(reordered).unwrap(), const10());
    }

    #[test]
    fn precedence() {
        let e = parse_expr("x1 | x2 ^ x3 & !x4").unwrap();
        assert_eq!(e.to_string(), "x1 | x2 ^ x3 & !x4");
        match e {
            Expr::Or(a, b) => {
                assert_eq!(*a, Expr::Var(1));
                assert!(matches!(*b, Expr::Xor(..)));
            }
            other => panic!("{other:?}"),
        }
        let left = parse_expr("x1 & x2 & x3").unwrap();
        assert!(matches!(left, Expr::And(ref a, _) if matches!(**a, Expr::And(..))));
        assert_eq!(parse_expr("x1 & (x2 & x3)").unwrap().to_string(), "x1 & (x2 & x3)");
        assert_eq!(parse_expr("!(x1 | 0)").unwrap().to_string(), "!(x1 | 0)");
    }

    #[test]
    fn diagnostics() {
        let e = parse_network_exprs("y1 = x1 &").unwrap_err();
        assert!(e.message.starts_with("syntax error at end of input"), "{e}");
        assert_eq!((e.line, e.column), (1, 10));

        let e = parse_network_exprs("y1 = x1 + x2").unwrap_err();
        assert_eq!((e.line, e.column), (1, 9));

        let e = parse_network_exprs("y1 = x1\ny1 = x1").unwrap_err();
        assert_eq!((e.line, e.message.as_str()), (2, "coordinate 1 defined twice (first on line 1)"));

        let e = parse_network_exprs("y1 = x1\ny3 = x1").unwrap_err();
        assert_eq!(e.message, "coordinate 2 is not defined");

        let e = parse_network_exprs("y1 = x1\ny2 = (x3)").unwrap_err();
        assert_eq!((e.line, e.column), (2, 7));
        assert!(e.message.starts_with("undefined variable x3"));

        let e = parse_network_exprs("y1 = (x1").unwrap_err();
        assert!(e.message.contains("`)`"), "{e}");
        assert!(parse_network_exprs("z1 = x1").is_err());
        assert!(parse_network_exprs("y1 = x0").is_err());
        assert!(parse_network_exprs("").is_err());
    }

    fn arb_expr(vars: usize) -> impl Strategy<Value = Expr> {
        let leaf = prop_oneof![(1..=vars).prop_map(Expr::Var), any::<bool>().prop_map(Expr::Const)];
        leaf.prop_recursive(5, 32, 2, |inner| {
            prop_oneof![
                inner.clone().prop_map(|e| Expr::Not(Box::new(e))),
                (inner.clone(), inner.clone()).prop_map(|(a, b)| Expr::And(Box::new(a), Box::new(b))),
                (inner.clone(), inner.clone()).prop_map(|(a, b)| Expr::Xor(Box::new(a), Box::new(b))),
                (inner.clone(), inner).prop_map(|(a, b)| Expr::Or(Box::new(a), Box::new(b))),
            ]
        })
    }

    /// Canonical sum of minterms of a coordinate, built from the table alone.
    fn minterms(net: &Network, i: usize) -> String {
        let n = net.dim();
        let terms: Vec<String> = net
            .states()
            .filter(|&mu| net.image(mu).unwrap().get(i))
            .map(|mu| {
                let lits: Vec<String> =
                    (1..=n).map(|j| if mu.get(j) { format!("x{j}") } else { format!("!x{j}") }).collect();
                format!("({})", lits.join(" & "))
            })
            .collect();
        if terms.is_empty() {
            "0".into()
        } else {
            terms.join(" | ")
        }
    }

    proptest! {
        #[test]
        fn display_parses_back(e in arb_expr(3)) {
            prop_assert_eq!(parse_expr(&e.to_string()).unwrap(), e);
        }

        #[test]
        fn expressions_agree_with_tables(table in proptest::collection::vec(0u32..8, 8)) {
            let net = Network::new(3, table).unwrap();
            let text: String = (1..=3).map(|i| format!("y{i} = {}\n", minterms(&net, i))).collect();
            prop_assert_eq!(parse_network_exprs(&text).unwrap(), net);
        }

        #[test]
        fn compiled_rows_evaluate(exprs in proptest::collection::vec(arb_expr(2), 2)) {
            let net = compile_exprs(&exprs).unwrap();
            for mu in net.states() {
                let img = net.image(mu).unwrap();
                for (i, e) in exprs.iter().enumerate() {
                    prop_assert_eq!(img.get(i + 1), e.eval(mu));
                }
            }
        }
    }
}
