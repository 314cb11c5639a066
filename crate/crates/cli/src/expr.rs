//! Pauli-string operator expressions.
//!
//! ```text
//! expr   := ['+' | '-'] term (('+' | '-') term)*
//! term   := [real '*'] factor ('*' factor)*
//! factor := ('I' | 'X' | 'Y' | 'Z') site
//! ```
//!
//! Sites are 0-based and site 0 is the leftmost Kronecker factor. An
//! expression of the form `file:PATH` refers to a dense matrix file instead.

use std::fmt;
use std::path::{Path, PathBuf};

use nalgebra::DMatrix;
use num_complex::Complex64;
use qsymplectic::operators::{make_hermitian, pauli, HermitianOperator};
use qsymplectic::space::CMatrix;

use crate::matrix_file;
use crate::CliError;

/// Largest qubit count an expression may address (a 1024×1024 matrix).
pub const MAX_QUBITS: usize = 10;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Pauli {
    I,
    X,
    Y,
    Z,
}

impl Pauli {
    fn matrix(self) -> CMatrix {
        match self {
            Pauli::I => pauli::identity(),
            Pauli::X => pauli::x(),
            Pauli::Y => pauli::y(),
            Pauli::Z => pauli::z(),
        }
    }

    fn symbol(self) -> char {
        match self {
            Pauli::I => 'I',
            Pauli::X => 'X',
            Pauli::Y => 'Y',
            Pauli::Z => 'Z',
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Factor {
    pub pauli: Pauli,
    pub site: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Term {
    pub coefficient: f64,
    pub factors: Vec<Factor>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum OperatorExpr {
    Sum(Vec<Term>),
    File(PathBuf),
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("{message} at position {position}")]
pub struct ParseError {
    /// Byte offset into the source text.
    pub position: usize,
    pub message: String,
}

struct Parser<'a> {
    src: &'a str,
    pos: usize,
}

impl<'a> Parser<'a> {
    fn error(&self, message: impl Into<String>) -> ParseError {
        ParseError { position: self.pos, message: message.into() }
    }

    fn skip_ws(&mut self) {
        while let Some(c) = self.peek() {
            if !c.is_whitespace() {
                break;
            }
            self.pos += c.len_utf8();
        }
    }

    fn peek(&self) -> Option<char> {
        self.src[self.pos..].chars().next()
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

    fn expr(&mut self) -> Result<Vec<Term>, ParseError> {
        let mut terms = Vec::new();
        let mut sign = if self.eat('-') {
            -1.0
        } else {
            self.eat('+');
            1.0
        };
        loop {
            let mut term = self.term()?;
            term.coefficient *= sign;
            terms.push(term);
            if self.eat('+') {
                sign = 1.0;
            } else if self.eat('-') {
                sign = -1.0;
            } else {
                break;
            }
        }
        self.skip_ws();
        if self.pos < self.src.len() {
            return Err(self.error(format!("unexpected '{}'", self.peek().unwrap_or(' '))));
        }
        Ok(terms)
    }

    fn term(&mut self) -> Result<Term, ParseError> {
        self.skip_ws();
        let mut coefficient = 1.0;
        let mut factors = Vec::new();
        match self.peek() {
            Some(c) if c.is_ascii_digit() || c == '.' => {
                coefficient = self.number()?;
                if !self.eat('*') {
                    return Err(self.error("expected '*' after coefficient"));
                }
                factors.push(self.factor()?);
            }
            _ => factors.push(self.factor()?),
        }
        while self.eat('*') {
            factors.push(self.factor()?);
        }
        Ok(Term { coefficient, factors })
    }

    fn factor(&mut self) -> Result<Factor, ParseError> {
        self.skip_ws();
        let pauli = match self.peek() {
            Some('I') => Pauli::I,
            Some('X') => Pauli::X,
            Some('Y') => Pauli::Y,
            Some('Z') => Pauli::Z,
            Some(c) => return Err(self.error(format!("expected one of I, X, Y, Z, found '{c}'"))),
            None => return Err(self.error("expected one of I, X, Y, Z, found end of input")),
        };
        self.pos += 1;
        let start = self.pos;
        while matches!(self.peek(), Some(c) if c.is_ascii_digit()) {
            self.pos += 1;
        }
        if start == self.pos {
            return Err(self.error("expected site index"));
        }
        let site = self.src[start..self.pos]
            .parse::<usize>()
            .map_err(|_| ParseError { position: start, message: "site index out of range".into() })?;
        Ok(Factor { pauli, site })
    }

    fn number(&mut self) -> Result<f64, ParseError> {
        let start = self.pos;
        let digits = |p: &mut Self| {
            let s = p.pos;
            while matches!(p.peek(), Some(c) if c.is_ascii_digit()) {
                p.pos += 1;
            }
            p.pos - s
        };
        let mut mantissa = digits(self);
        if self.peek() == Some('.') {
            self.pos += 1;
            mantissa += digits(self);
        }
        if mantissa == 0 {
            return Err(ParseError { position: start, message: "malformed number".into() });
        }
        if matches!(self.peek(), Some('e' | 'E')) {
            self.pos += 1;
            if matches!(self.peek(), Some('+' | '-')) {
                self.pos += 1;
            }
            if digits(self) == 0 {
                return Err(self.error("malformed exponent"));
            }
        }
        let value: f64 = self.src[start..self.pos]
            .parse()
            .map_err(|_| ParseError { position: start, message: "malformed number".into() })?;
        if !value.is_finite() {
            return Err(ParseError { position: start, message: "coefficient is not finite".into() });
        }
        Ok(value)
    }
}

pub fn parse_operator_expr(text: &str) -> Result<OperatorExpr, ParseError> {
    let trimmed = text.trim_start();
    if let Some(path) = trimmed.strip_prefix("file:") {
        let path = path.trim();
        if path.is_empty() {
            return Err(ParseError { position: text.len(), message: "missing file path".into() });
        }
        return Ok(OperatorExpr::File(PathBuf::from(path)));
    }
    Parser { src: text, pos: 0 }.expr().map(OperatorExpr::Sum)
}

impl fmt::Display for OperatorExpr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let terms = match self {
            OperatorExpr::File(path) => return write!(f, "file:{}", path.display()),
            OperatorExpr::Sum(terms) => terms,
        };
        for (k, term) in terms.iter().enumerate() {
            let negative = term.coefficient.is_sign_negative();
            match (k, negative) {
                (0, true) => f.write_str("-")?,
                (0, false) => {}
                (_, true) => f.write_str(" - ")?,
                (_, false) => f.write_str(" + ")?,
            }
            let magnitude = term.coefficient.abs();
            if magnitude != 1.0 {
                write!(f, "{magnitude:?}*")?;
            }
            for (j, factor) in term.factors.iter().enumerate() {
                if j > 0 {
                    f.write_str("*")?;
                }
                write!(f, "{}{}", factor.pauli.symbol(), factor.site)?;
            }
        }
        Ok(())
    }
}

impl OperatorExpr {
    /// Qubit count implied by the largest site index; `None` for files.
    pub fn qubits(&self) -> Option<usize> {
        match self {
            OperatorExpr::File(_) => None,
            OperatorExpr::Sum(terms) => {
                terms.iter().flat_map(|t| t.factors.iter()).map(|f| f.site + 1).max()
            }
        }
    }

    /// Dense matrix of the expression. File paths are resolved against
    /// `base`.
    pub fn to_matrix(&self, base: &Path) -> Result<CMatrix, CliError> {
        let terms = match self {
            OperatorExpr::File(path) => return matrix_file::read_matrix(&base.join(path)),
            OperatorExpr::Sum(terms) => terms,
        };
        let qubits = self.qubits().unwrap_or(0);
        if qubits > MAX_QUBITS {
            return Err(CliError::Config(format!(
                "cannot infer operator dimension: site {} needs {qubits} qubits, at most {MAX_QUBITS} are supported",
                qubits - 1
            )));
        }
        let dim = 1usize << qubits;
        let mut total = DMatrix::<Complex64>::zeros(dim, dim);
        for term in terms {
            let mut local = vec![pauli::identity(); qubits];
            for factor in &term.factors {
                local[factor.site] = &local[factor.site] * factor.pauli.matrix();
            }
            let product = local
                .iter()
                .fold(DMatrix::from_element(1, 1, Complex64::new(1.0, 0.0)), |acc, m| acc.kronecker(m));
            total += product * Complex64::new(term.coefficient, 0.0);
        }
        Ok(total)
    }

    /// Evaluates and validates the expression as a Hermitian operator.
    pub fn to_operator(&self, base: &Path) -> Result<HermitianOperator, CliError> {
        let m = self.to_matrix(base)?;
        make_hermitian(m)
            .map(|op| op.with_label(self.to_string()))
            .map_err(|e| CliError::Config(format!("operator \"{self}\": {e}")))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64) -> Complex64 {
        Complex64::new(re, 0.0)
    }

    #[test]
    fn single_z() {
        let m = parse_operator_expr("Z0").unwrap().to_matrix(Path::new(".")).unwrap();
        assert_eq!(m, DMatrix::from_row_slice(2, 2, &[c(1.0), c(0.0), c(0.0), c(-1.0)]));
    }

    #[test]
    fn two_site_transverse_field() {
        let m = parse_operator_expr("0.5*X0 + 0.5*X1").unwrap().to_matrix(Path::new(".")).unwrap();
        // (X⊗I + I⊗X)/2 in the basis |00⟩, |01⟩, |10⟩, |11⟩
        #[rustfmt::skip]
        let expected = DMatrix::from_row_slice(4, 4, &[
            c(0.0), c(0.5), c(0.5), c(0.0),
            c(0.5), c(0.0), c(0.0), c(0.5),
            c(0.5), c(0.0), c(0.0), c(0.5),
            c(0.0), c(0.5), c(0.5), c(0.0),
        ]);
        assert_eq!(m, expected);
    }

    #[test]
    fn site_zero_is_leftmost() {
        let m = parse_operator_expr("Z0").unwrap();
        let wide = parse_operator_expr("Z0 + 0*I1").unwrap().to_matrix(Path::new(".")).unwrap();
        assert_eq!(m.qubits(), Some(1));
        // Z⊗I = diag(1, 1, −1, −1)
        assert_eq!(wide.diagonal().iter().map(|z| z.re).collect::<Vec<_>>(), vec![1.0, 1.0, -1.0, -1.0]);
    }

    #[test]
    fn non_hermitian_product_is_rejected() {
        let expr = parse_operator_expr("X0*Z0").unwrap();
        let err = expr.to_operator(Path::new(".")).unwrap_err().to_string();
        assert!(err.contains("X0*Z0") && err.contains("not Hermitian"), "{err}");
    }

    #[test]
    fn syntax_errors_carry_positions() {
        assert_eq!(parse_operator_expr("Z0 + ").unwrap_err().position, 5);
        assert_eq!(parse_operator_expr("Z0 Q1").unwrap_err().position, 3);
        assert_eq!(parse_operator_expr("0.5*X").unwrap_err().position, 5);
        assert_eq!(parse_operator_expr("0.5 X0").unwrap_err().position, 4);
        assert_eq!(parse_operator_expr("1e*X0").unwrap_err().position, 2);
    }

    #[test]
    fn whitespace_is_ignored() {
        assert_eq!(parse_operator_expr(" -0.25 * X0*Y1\t+Z2 ").unwrap(), parse_operator_expr("-0.25*X0*Y1+Z2").unwrap());
    }

    #[test]
    fn too_many_qubits() {
        let err = parse_operator_expr("Z11").unwrap().to_matrix(Path::new(".")).unwrap_err();
        assert!(matches!(err, CliError::Config(_)));
    }

    #[test]
    fn pretty_printing() {
        let e = parse_operator_expr("- 1*X0 + 2.50*Z1*Z0 - 1e-3 * Y2").unwrap();
        assert_eq!(e.to_string(), "-X0 + 2.5*Z1*Z0 - 0.001*Y2");
        assert_eq!(parse_operator_expr("file: ops/h.txt").unwrap().to_string(), "file:ops/h.txt");
    }
}
