//! Boundary-datum inputs: a closed-form expression in x1, x2 over the
//! grammar (+, −, *, /, ^ with integer powers, parentheses, numeric
//! literals), or a sampled two-column file (arc angle, value) interpolated
//! linearly. The angle is atan2(x₂, x₁) ∈ [−π/2, π/2] on the arc.

use std::fmt;
use std::path::Path;

/// Parsed arithmetic expression tree.
#[derive(Debug, Clone)]
pub enum Expr {
    Num(f64),
    X1,
    X2,
    Neg(Box<Expr>),
    Add(Box<Expr>, Box<Expr>),
    Sub(Box<Expr>, Box<Expr>),
    Mul(Box<Expr>, Box<Expr>),
    Div(Box<Expr>, Box<Expr>),
    Pow(Box<Expr>, i32),
}

impl Expr {
    pub fn eval(&self, x1: f64, x2: f64) -> f64 {
        match self {
            Expr::Num(v) => *v,
            Expr::X1 => x1,
            Expr::X2 => x2,
            Expr::Neg(e) => -e.eval(x1, x2),
            Expr::Add(a, b) => a.eval(x1, x2) + b.eval(x1, x2),
            Expr::Sub(a, b) => a.eval(x1, x2) - b.eval(x1, x2),
            Expr::Mul(a, b) => a.eval(x1, x2) * b.eval(x1, x2),
            Expr::Div(a, b) => a.eval(x1, x2) / b.eval(x1, x2),
            Expr::Pow(a, k) => a.eval(x1, x2).powi(*k),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Num(f64),
    X1,
    X2,
    Plus,
    Minus,
    Star,
    Slash,
    Caret,
    LParen,
    RParen,
}

impl fmt::Display for Tok {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Tok::Num(v) => write!(f, "{v}"),
            Tok::X1 => write!(f, "x1"),
            Tok::X2 => write!(f, "x2"),
            Tok::Plus => write!(f, "+"),
            Tok::Minus => write!(f, "-"),
            Tok::Star => write!(f, "*"),
            Tok::Slash => write!(f, "/"),
            Tok::Caret => write!(f, "^"),
            Tok::LParen => write!(f, "("),
            Tok::RParen => write!(f, ")"),
        }
    }
}

fn tokenize(src: &str) -> Result<Vec<Tok>, String> {
    let bytes = src.as_bytes();
    let mut toks = Vec::new();
    let mut k = 0;
    while k < bytes.len() {
        let c = bytes[k] as char;
        match c {
            ' ' | '\t' => k += 1,
            '+' => {
                toks.push(Tok::Plus);
                k += 1;
            }
            '-' => {
                toks.push(Tok::Minus);
                k += 1;
            }
            '*' => {
                toks.push(Tok::Star);
                k += 1;
            }
            '/' => {
                toks.push(Tok::Slash);
                k += 1;
            }
            '^' => {
                toks.push(Tok::Caret);
                k += 1;
            }
            '(' => {
                toks.push(Tok::LParen);
                k += 1;
            }
            ')' => {
                toks.push(Tok::RParen);
                k += 1;
            }
            'x' => {
                let rest = &src[k..];
                if rest.starts_with("x1") {
                    toks.push(Tok::X1);
                } else if rest.starts_with("x2") {
                    toks.push(Tok::X2);
                } else {
                    return Err(format!("unknown symbol at '{rest}' (expected x1 or x2)"));
                }
                k += 2;
            }
            '0'..='9' | '.' => {
                let start = k;
                while k < bytes.len() && matches!(bytes[k] as char, '0'..='9' | '.') {
                    k += 1;
                }
                // Scientific suffix: 1.5e-3.
                if k < bytes.len()
                    && matches!(bytes[k] as char, 'e' | 'E')
                    && bytes
                        .get(k + 1)
                        .is_some_and(|&b| matches!(b as char, '0'..='9' | '+' | '-'))
                {
                    k += 2;
                    while k < bytes.len() && (bytes[k] as char).is_ascii_digit() {
                        k += 1;
                    }
                }
                let lit = &src[start..k];
                let v: f64 = lit
                    .parse()
                    .map_err(|_| format!("malformed numeric literal '{lit}'"))?;
                toks.push(Tok::Num(v));
            }
            other => return Err(format!("unexpected character '{other}'")),
        }
    }
    Ok(toks)
}

struct Parser<'a> {
    toks: &'a [Tok],
    pos: usize,
}

impl Parser<'_> {
    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.pos)
    }

    fn bump(&mut self) -> Option<Tok> {
        let t = self.toks.get(self.pos).cloned();
        self.pos += t.is_some() as usize;
        t
    }

    fn expr(&mut self) -> Result<Expr, String> {
        let mut lhs = self.term()?;
        loop {
            match self.peek() {
                Some(Tok::Plus) => {
                    self.bump();
                    lhs = Expr::Add(Box::new(lhs), Box::new(self.term()?));
                }
                Some(Tok::Minus) => {
                    self.bump();
                    lhs = Expr::Sub(Box::new(lhs), Box::new(self.term()?));
                }
                _ => return Ok(lhs),
            }
        }
    }

    fn term(&mut self) -> Result<Expr, String> {
        let mut lhs = self.unary()?;
        loop {
            match self.peek() {
                Some(Tok::Star) => {
                    self.bump();
                    lhs = Expr::Mul(Box::new(lhs), Box::new(self.unary()?));
                }
                Some(Tok::Slash) => {
                    self.bump();
                    lhs = Expr::Div(Box::new(lhs), Box::new(self.unary()?));
                }
                _ => return Ok(lhs),
            }
        }
    }

    fn unary(&mut self) -> Result<Expr, String> {
        if self.peek() == Some(&Tok::Minus) {
            self.bump();
            return Ok(Expr::Neg(Box::new(self.unary()?)));
        }
        self.power()
    }

    fn power(&mut self) -> Result<Expr, String> {
        let base = self.atom()?;
        if self.peek() != Some(&Tok::Caret) {
            return Ok(base);
        }
        self.bump();
        let neg = self.peek() == Some(&Tok::Minus);
        if neg {
            self.bump();
        }
        match self.bump() {
            Some(Tok::Num(v)) if v.fract() == 0.0 && v.abs() <= i32::MAX as f64 => {
                let k = v as i32;
                Ok(Expr::Pow(Box::new(base), if neg { -k } else { k }))
            }
            Some(t) => Err(format!("exponent must be an integer literal, got '{t}'")),
            None => Err("missing exponent after '^'".into()),
        }
    }

    fn atom(&mut self) -> Result<Expr, String> {
        match self.bump() {
            Some(Tok::Num(v)) => Ok(Expr::Num(v)),
            Some(Tok::X1) => Ok(Expr::X1),
            Some(Tok::X2) => Ok(Expr::X2),
            Some(Tok::LParen) => {
                let inner = self.expr()?;
                match self.bump() {
                    Some(Tok::RParen) => Ok(inner),
                    _ => Err("unbalanced parenthesis".into()),
                }
            }
            Some(t) => Err(format!("expected a value, got '{t}'")),
            None => Err("expression ended unexpectedly".into()),
        }
    }
}

pub fn parse_expr(src: &str) -> Result<Expr, String> {
    let toks = tokenize(src)?;
    if toks.is_empty() {
        return Err("empty expression".into());
    }
    let mut p = Parser { toks: &toks, pos: 0 };
    let e = p.expr()?;
    if p.pos != toks.len() {
        return Err(format!("trailing tokens starting at '{}'", toks[p.pos]));
    }
    Ok(e)
}

/// Boundary datum: a closed-form expression or an angle-sampled table.
pub enum Datum {
    Expr(Expr),
    /// (angle, value) rows sorted by angle; evaluated by linear
    /// interpolation in atan2(x₂, x₁), clamped beyond the sampled range.
    Table(Vec<(f64, f64)>),
}

impl Datum {
    /// Reads `spec` as a sampled file when a file of that name exists,
    /// otherwise parses it as an expression.
    pub fn parse(spec: &str) -> Result<Datum, String> {
        if Path::new(spec).is_file() {
            return parse_table(spec).map(Datum::Table);
        }
        parse_expr(spec)
            .map(Datum::Expr)
            .map_err(|e| format!("malformed expression '{spec}': {e}"))
    }

    pub fn eval(&self, x1: f64, x2: f64) -> f64 {
        match self {
            Datum::Expr(e) => e.eval(x1, x2),
            Datum::Table(rows) => {
                let angle = x2.atan2(x1);
                let pos = rows.partition_point(|&(a, _)| a < angle);
                if pos == 0 {
                    return rows[0].1;
                }
                if pos == rows.len() {
                    return rows[rows.len() - 1].1;
                }
                let (a0, v0) = rows[pos - 1];
                let (a1, v1) = rows[pos];
                v0 + (v1 - v0) * (angle - a0) / (a1 - a0)
            }
        }
    }
}

fn parse_table(path: &str) -> Result<Vec<(f64, f64)>, String> {
    let text =
        std::fs::read_to_string(path).map_err(|e| format!("unreadable file '{path}': {e}"))?;
    let mut rows = Vec::new();
    for (ln, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let mut parts = line.split(|c: char| c == ',' || c.is_whitespace()).filter(|s| !s.is_empty());
        let (Some(a), Some(v), None) = (parts.next(), parts.next(), parts.next()) else {
            return Err(format!("{path}:{}: expected two columns (angle, value)", ln + 1));
        };
        let a: f64 = a
            .parse()
            .map_err(|_| format!("{path}:{}: malformed angle '{a}'", ln + 1))?;
        let v: f64 = v
            .parse()
            .map_err(|_| format!("{path}:{}: malformed value '{v}'", ln + 1))?;
        if !a.is_finite() || !v.is_finite() {
            return Err(format!("{path}:{}: non-finite sample", ln + 1));
        }
        rows.push((a, v));
    }
    if rows.len() < 2 {
        return Err(format!("{path}: need at least two samples"));
    }
    rows.sort_by(|x, y| x.0.total_cmp(&y.0));
    if rows.windows(2).any(|w| w[0].0 == w[1].0) {
        return Err(format!("{path}: duplicate angles"));
    }
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_reference_datum() {
        // −43·x₁⁸ + 19·x₁ + 5·x₂ − 5 at a few hand-computed points.
        let e = parse_expr("-43*x1^8+19*x1+5*x2-5").unwrap();
        assert_eq!(e.eval(0.0, 0.0), -5.0);
        assert_eq!(e.eval(0.0, 1.0), 0.0);
        assert_eq!(e.eval(1.0, 0.0), -43.0 + 19.0 - 5.0);
        let (x1, x2) = (0.6, -0.8);
        let by_hand = -43.0 * 0.6f64.powi(8) + 19.0 * 0.6 + 5.0 * (-0.8) - 5.0;
        assert_eq!(e.eval(x1, x2), by_hand);
    }

    #[test]
    fn precedence_and_parens() {
        let e = parse_expr("1+2*3^2").unwrap();
        assert_eq!(e.eval(0.0, 0.0), 19.0);
        let e = parse_expr("(1+2)*3").unwrap();
        assert_eq!(e.eval(0.0, 0.0), 9.0);
        let e = parse_expr("-x2^2").unwrap();
        // Unary minus binds weaker than ^.
        assert_eq!(e.eval(0.0, 3.0), -9.0);
        let e = parse_expr("2^-1").unwrap();
        assert_eq!(e.eval(0.0, 0.0), 0.5);
        let e = parse_expr("1.5e2/3").unwrap();
        assert_eq!(e.eval(0.0, 0.0), 50.0);
    }

    #[test]
    fn rejects_malformed() {
        assert!(parse_expr("").is_err());
        assert!(parse_expr("x3").is_err());
        assert!(parse_expr("1+").is_err());
        assert!(parse_expr("(1+2").is_err());
        assert!(parse_expr("2^0.5").is_err());
        assert!(parse_expr("1 2").is_err());
        assert!(parse_expr("sin(x1)").is_err());
    }

    #[test]
    fn table_interpolates_and_clamps() {
        let dir = std::env::temp_dir().join(format!("dnl-expr-{}", std::process::id()));
        std::fs::create_dir_all(&dir).unwrap();
        let path = dir.join("samples.txt");
        std::fs::write(&path, "# angle value\n-1.0 2.0\n0.0, 4.0\n1.0 6.0\n").unwrap();
        let d = Datum::parse(path.to_str().unwrap()).unwrap();
        // angle = atan2(x2, x1): midpoint of the second segment.
        let a = 0.5f64;
        let v = d.eval(a.cos(), a.sin());
        assert!((v - 5.0).abs() < 1e-12);
        // Clamped beyond the sampled range (angle π/2 > 1.0).
        assert_eq!(d.eval(0.0, 1.0), 6.0);
        assert_eq!(d.eval(0.3, -0.95), 2.0);
        std::fs::remove_dir_all(&dir).unwrap();
    }
}
