//! Potentials on the Julia set and their Birkhoff sums.
//!
//! The constructor set is closed on purpose: constants, `-t log|f'|`, the two
//! coordinate functions, sums and scalings. Each leaf is Hölder on the Julia set
//! of a hyperbolic map, and so is every tree built from them.
//!
//! Text form (prefix notation, whitespace-insensitive):
//!
//! ```text
//! expr := "const(" number ")"
//!       | "logderiv"                 log|f'|
//!       | "neglogderiv(" number ")"  -t log|f'|
//!       | "re" | "im"
//!       | "sum(" expr "," expr ")"
//!       | "scale(" number "," expr ")"
//! ```

use crate::map::{MapError, RationalMap};
use num_complex::Complex64;
use std::fmt;

pub const DEFAULT_MAX_DEPTH: usize = 32;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum PotentialError {
    #[error("log|f'| undefined at critical point {z}")]
    CriticalPoint { z: Complex64 },
    #[error("potential evaluation failed at orbit step {step}: {source}")]
    AtStep {
        step: usize,
        #[source]
        source: Box<PotentialError>,
    },
    #[error(transparent)]
    Map(#[from] MapError),
    #[error("birkhoff sum needs n >= 1")]
    EmptySum,
    #[error("potential tree depth {depth} exceeds limit {limit}")]
    TooDeep { depth: usize, limit: usize },
    #[error("potential syntax error at column {column}: {message}")]
    Syntax { column: usize, message: String },
}

#[derive(Debug, Clone, PartialEq)]
pub enum Potential {
    Const(f64),
    /// `z -> -t log|f'(z)|`.
    NegTLogAbsDeriv(f64),
    CoordRe,
    CoordIm,
    Sum(Box<Potential>, Box<Potential>),
    Scale(f64, Box<Potential>),
}

impl Potential {
    pub fn zero() -> Self {
        Potential::Const(0.0)
    }

    pub fn sum(a: Potential, b: Potential) -> Self {
        Potential::Sum(Box::new(a), Box::new(b))
    }

    pub fn scale(s: f64, inner: Potential) -> Self {
        Potential::Scale(s, Box::new(inner))
    }

    pub fn depth(&self) -> usize {
        match self {
            Potential::Sum(a, b) => 1 + a.depth().max(b.depth()),
            Potential::Scale(_, inner) => 1 + inner.depth(),
            _ => 1,
        }
    }

    pub fn check_depth(&self, limit: usize) -> Result<(), PotentialError> {
        let depth = self.depth();
        if depth > limit {
            return Err(PotentialError::TooDeep { depth, limit });
        }
        Ok(())
    }

    /// True when the tree has a `log|f'|` leaf with nonzero weight.
    pub fn uses_derivative(&self) -> bool {
        match self {
            Potential::NegTLogAbsDeriv(t) => *t != 0.0,
            Potential::Sum(a, b) => a.uses_derivative() || b.uses_derivative(),
            Potential::Scale(_, inner) => inner.uses_derivative(),
            _ => false,
        }
    }

    pub fn eval(&self, map: &RationalMap, z: Complex64) -> Result<f64, PotentialError> {
        Ok(match self {
            Potential::Const(a) => *a,
            Potential::NegTLogAbsDeriv(t) => {
                if *t == 0.0 {
                    return Ok(0.0);
                }
                let l = map.log_abs_deriv(z)?;
                if !l.is_finite() {
                    return Err(PotentialError::CriticalPoint { z });
                }
                -t * l
            }
            Potential::CoordRe => z.re,
            Potential::CoordIm => z.im,
            Potential::Sum(a, b) => a.eval(map, z)? + b.eval(map, z)?,
            Potential::Scale(s, inner) => s * inner.eval(map, z)?,
        })
    }

    /// `S_n phi(z) = sum_{k<n} phi(f^k z)` over a single forward orbit.
    pub fn birkhoff_sum(&self, map: &RationalMap, z: Complex64, n: usize) -> Result<f64, PotentialError> {
        if n == 0 {
            return Err(PotentialError::EmptySum);
        }
        let mut total = 0.0;
        let mut w = z;
        for step in 0..n {
            if step > 0 {
                w = map.step(w, step)?;
            }
            total += self.eval(map, w).map_err(|e| PotentialError::AtStep {
                step,
                source: Box::new(e),
            })?;
        }
        Ok(total)
    }

    /// Birkhoff sum along an orbit that is already known.
    pub fn sum_along(&self, map: &RationalMap, orbit: &[Complex64]) -> Result<f64, PotentialError> {
        orbit.iter().enumerate().try_fold(0.0, |acc, (step, &w)| {
            self.eval(map, w)
                .map(|v| acc + v)
                .map_err(|e| PotentialError::AtStep {
                    step,
                    source: Box::new(e),
                })
        })
    }

    pub fn parse(text: &str) -> Result<Self, PotentialError> {
        let mut parser = Parser { src: text, pos: 0 };
        let expr = parser.expr()?;
        parser.skip_ws();
        if parser.pos != text.len() {
            return Err(parser.error("trailing input"));
        }
        expr.check_depth(DEFAULT_MAX_DEPTH)?;
        Ok(expr)
    }
}

impl fmt::Display for Potential {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Potential::Const(a) => write!(f, "const({a:?})"),
            Potential::NegTLogAbsDeriv(t) => write!(f, "neglogderiv({t:?})"),
            Potential::CoordRe => write!(f, "re"),
            Potential::CoordIm => write!(f, "im"),
            Potential::Sum(a, b) => write!(f, "sum({a}, {b})"),
            Potential::Scale(s, inner) => write!(f, "scale({s:?}, {inner})"),
        }
    }
}

impl std::str::FromStr for Potential {
    type Err = PotentialError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Potential::parse(s)
    }
}

struct Parser<'a> {
    src: &'a str,
    pos: usize,
}

impl Parser<'_> {
    fn error(&self, message: impl Into<String>) -> PotentialError {
        PotentialError::Syntax {
            column: self.pos + 1,
            message: message.into(),
        }
    }

    fn skip_ws(&mut self) {
        let rest = &self.src[self.pos..];
        self.pos += rest.len() - rest.trim_start().len();
    }

    fn eat(&mut self, ch: char) -> Result<(), PotentialError> {
        self.skip_ws();
        if self.src[self.pos..].starts_with(ch) {
            self.pos += ch.len_utf8();
            Ok(())
        } else {
            Err(self.error(format!("expected '{ch}'")))
        }
    }

    fn ident(&mut self) -> &str {
        self.skip_ws();
        let start = self.pos;
        let len = self.src[start..]
            .find(|c: char| !c.is_ascii_alphabetic())
            .unwrap_or(self.src.len() - start);
        self.pos += len;
        &self.src[start..start + len]
    }

    fn number(&mut self) -> Result<f64, PotentialError> {
        self.skip_ws();
        let start = self.pos;
        let len = self.src[start..]
            .find(|c: char| !(c.is_ascii_digit() || matches!(c, '.' | '-' | '+' | 'e' | 'E')))
            .unwrap_or(self.src.len() - start);
        let text = &self.src[start..start + len];
        let value: f64 = text
            .parse()
            .map_err(|_| self.error(format!("invalid number '{text}'")))?;
        if !value.is_finite() {
            return Err(self.error("number must be finite"));
        }
        self.pos += len;
        Ok(value)
    }

    fn expr(&mut self) -> Result<Potential, PotentialError> {
        let start = {
            self.skip_ws();
            self.pos
        };
        let name = self.ident().to_ascii_lowercase();
        let node = match name.as_str() {
            "const" => {
                self.eat('(')?;
                let a = self.number()?;
                self.eat(')')?;
                Potential::Const(a)
            }
            "logderiv" => Potential::NegTLogAbsDeriv(-1.0),
            "neglogderiv" => {
                self.eat('(')?;
                let t = self.number()?;
                self.eat(')')?;
                Potential::NegTLogAbsDeriv(t)
            }
            "re" => Potential::CoordRe,
            "im" => Potential::CoordIm,
            "sum" => {
                self.eat('(')?;
                let a = self.expr()?;
                self.eat(',')?;
                let b = self.expr()?;
                self.eat(')')?;
                Potential::sum(a, b)
            }
            "scale" => {
                self.eat('(')?;
                let s = self.number()?;
                self.eat(',')?;
                let inner = self.expr()?;
                self.eat(')')?;
                Potential::scale(s, inner)
            }
            "" => return Err(self.error("expected a potential")),
            other => {
                self.pos = start;
                return Err(self.error(format!("unknown potential '{other}'")));
            }
        };
        Ok(node)
    }
}
