//! Piecewise polynomial (and, after speed reduction, piecewise rational)
//! coefficients on `[0,1]`.
//!
//! Text grammar for one coefficient:
//!
//! ```text
//! const <r>
//! poly <c0> <c1> ...
//! piece <a> <b>: <const|poly ...>; piece <a> <b>: ...
//! ```
//!
//! Polynomials are in the global variable `x` with ascending coefficients.
//! Pieces are half-open `[a,b)`; the last one is closed at 1, so sampling at
//! an interior breakpoint returns the right limit.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CoefficientKind {
    Density,
    Damping,
}

/// One piece `num(x)/den(x)` on `[a,b)`.
#[derive(Clone, Debug, PartialEq)]
pub struct Piece {
    pub a: f64,
    pub b: f64,
    pub num: Vec<f64>,
    /// `[1.0]` for polynomial pieces.
    pub den: Vec<f64>,
}

impl Piece {
    pub fn polynomial(a: f64, b: f64, coeffs: Vec<f64>) -> Self {
        Piece { a, b, num: coeffs, den: vec![1.0] }
    }

    pub fn is_polynomial(&self) -> bool {
        self.den.len() <= 1
    }

    /// Polynomial coefficients, folding a constant denominator into the numerator.
    pub fn as_polynomial(&self) -> Option<Vec<f64>> {
        match self.den.as_slice() {
            [] => Some(self.num.clone()),
            [d] => Some(self.num.iter().map(|c| c / d).collect()),
            _ => None,
        }
    }

    pub fn eval(&self, x: f64) -> f64 {
        horner(&self.num, x) / horner(&self.den, x)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct CoefficientSpec {
    pieces: Vec<Piece>,
    kind: CoefficientKind,
}

/// Samples per piece for the density positivity check.
const POSITIVITY_SAMPLES: usize = 256;

impl CoefficientSpec {
    pub fn new(pieces: Vec<Piece>, kind: CoefficientKind) -> Result<Self> {
        let spec = CoefficientSpec { pieces, kind };
        spec.validate()?;
        Ok(spec)
    }

    pub fn constant(value: f64, kind: CoefficientKind) -> Result<Self> {
        Self::new(vec![Piece::polynomial(0.0, 1.0, vec![value])], kind)
    }

    pub fn polynomial(coeffs: Vec<f64>, kind: CoefficientKind) -> Result<Self> {
        Self::new(vec![Piece::polynomial(0.0, 1.0, coeffs)], kind)
    }

    pub fn pieces(&self) -> &[Piece] {
        &self.pieces
    }

    pub fn kind(&self) -> CoefficientKind {
        self.kind
    }

    pub fn is_polynomial(&self) -> bool {
        self.pieces.iter().all(Piece::is_polynomial)
    }

    /// Interior and end breakpoints, ascending.
    pub fn breakpoints(&self) -> Vec<f64> {
        let mut v: Vec<f64> = self.pieces.iter().map(|p| p.a).collect();
        v.push(1.0);
        v
    }

    fn validate(&self) -> Result<()> {
        let p = &self.pieces;
        if p.is_empty() {
            return Err(Error::Partition("no pieces".into()));
        }
        if p[0].a != 0.0 {
            return Err(Error::Partition(format!("first piece starts at {}", p[0].a)));
        }
        if p[p.len() - 1].b != 1.0 {
            return Err(Error::Partition(format!("last piece ends at {}", p[p.len() - 1].b)));
        }
        for (k, piece) in p.iter().enumerate() {
            if !(piece.a < piece.b) {
                return Err(Error::Partition(format!("empty piece [{}, {})", piece.a, piece.b)));
            }
            if k + 1 < p.len() && p[k + 1].a != piece.b {
                let what = if p[k + 1].a > piece.b { "gap" } else { "overlap" };
                return Err(Error::Partition(format!("{what} between {} and {}", piece.b, p[k + 1].a)));
            }
            if piece.num.is_empty() || piece.den.is_empty() {
                return Err(Error::Partition("piece without coefficients".into()));
            }
            if piece.num.iter().chain(&piece.den).any(|c| !c.is_finite()) {
                return Err(Error::Partition("non-finite coefficient".into()));
            }
        }
        if self.kind == CoefficientKind::Density {
            for piece in p {
                for s in 0..=POSITIVITY_SAMPLES {
                    let x = piece.a + (piece.b - piece.a) * s as f64 / POSITIVITY_SAMPLES as f64;
                    let value = piece.eval(x);
                    if !(value > 0.0) || !value.is_finite() {
                        return Err(Error::NonPositive { x, value });
                    }
                }
            }
        }
        Ok(())
    }

    fn piece_index(&self, x: f64) -> usize {
        // Right-limit convention: the piece whose half-open interval holds x.
        let k = self.pieces.partition_point(|p| p.b <= x);
        k.min(self.pieces.len() - 1)
    }

    /// Value at `x`, right limit at interior breakpoints.
    pub fn sample(&self, x: f64) -> Result<f64> {
        if !(0.0..=1.0).contains(&x) {
            return Err(Error::OutOfDomain(x));
        }
        Ok(self.value(x))
    }

    /// Unchecked [`sample`](Self::sample); `x` is clamped to `[0,1]`.
    pub fn value(&self, x: f64) -> f64 {
        let x = x.clamp(0.0, 1.0);
        self.pieces[self.piece_index(x)].eval(x)
    }

    /// Rewrite the polynomial coefficients of every piece.
    pub fn map_polynomials(&self, f: impl Fn(&[f64]) -> Vec<f64>, kind: CoefficientKind) -> Result<Self> {
        let pieces = self
            .pieces
            .iter()
            .map(|p| Piece { a: p.a, b: p.b, num: f(&p.num), den: p.den.clone() })
            .collect();
        Self::new(pieces, kind)
    }

    /// Polynomial coefficients of piece `k`; `None` for genuinely rational pieces.
    pub fn piece_polynomial(&self, k: usize) -> Option<Vec<f64>> {
        self.pieces[k].as_polynomial()
    }
}

impl fmt::Display for CoefficientSpec {
    /// Canonical text form; rational pieces print as `ratio [num] / [den]`.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let sub = |p: &Piece| -> String {
            match p.as_polynomial() {
                Some(c) if c.len() == 1 => format!("const {}", c[0]),
                Some(c) => format!("poly {}", join(&c)),
                None => format!("ratio [{}] / [{}]", join(&p.num), join(&p.den)),
            }
        };
        if self.pieces.len() == 1 {
            return write!(f, "{}", sub(&self.pieces[0]));
        }
        let parts: Vec<String> = self.pieces.iter().map(|p| format!("piece {} {}: {}", p.a, p.b, sub(p))).collect();
        write!(f, "{}", parts.join("; "))
    }
}

fn join(c: &[f64]) -> String {
    c.iter().map(|x| format!("{x}")).collect::<Vec<_>>().join(" ")
}

pub fn horner(c: &[f64], x: f64) -> f64 {
    c.iter().rev().fold(0.0, |acc, &ck| acc * x + ck)
}

pub fn poly_mul(a: &[f64], b: &[f64]) -> Vec<f64> {
    if a.is_empty() || b.is_empty() {
        return Vec::new();
    }
    let mut out = vec![0.0; a.len() + b.len() - 1];
    for (i, &ai) in a.iter().enumerate() {
        for (j, &bj) in b.iter().enumerate() {
            out[i + j] += ai * bj;
        }
    }
    out
}

/// `∫_s^t p(x) dx` from the closed-form antiderivative.
pub fn poly_integral(p: &[f64], s: f64, t: f64) -> f64 {
    let mut acc = 0.0;
    for (k, &ck) in p.iter().enumerate().rev() {
        let e = (k + 1) as i32;
        acc += ck * (t.powi(e) - s.powi(e)) / e as f64;
    }
    acc
}

// ---------------------------------------------------------------- parsing

#[derive(Debug, Clone, PartialEq)]
enum Tok<'a> {
    Word(&'a str),
    Colon,
    Semi,
}

fn tokenize(text: &str) -> Vec<(usize, Tok<'_>)> {
    let mut out = Vec::new();
    let mut start: Option<usize> = None;
    for (i, ch) in text.char_indices() {
        let sep = ch.is_whitespace() || ch == ':' || ch == ';';
        if sep {
            if let Some(s) = start.take() {
                out.push((s, Tok::Word(&text[s..i])));
            }
            match ch {
                ':' => out.push((i, Tok::Colon)),
                ';' => out.push((i, Tok::Semi)),
                _ => {}
            }
        } else if start.is_none() {
            start = Some(i);
        }
    }
    if let Some(s) = start {
        out.push((s, Tok::Word(&text[s..])));
    }
    out
}

struct Parser<'a> {
    toks: Vec<(usize, Tok<'a>)>,
    at: usize,
    end: usize,
}

impl<'a> Parser<'a> {
    fn pos(&self) -> usize {
        self.toks.get(self.at).map(|t| t.0).unwrap_or(self.end)
    }

    fn err<T>(&self, msg: impl Into<String>) -> Result<T> {
        Err(Error::Syntax { pos: self.pos(), msg: msg.into() })
    }

    fn peek(&self) -> Option<&Tok<'a>> {
        self.toks.get(self.at).map(|t| &t.1)
    }

    fn number(&mut self) -> Result<f64> {
        match self.peek() {
            Some(Tok::Word(w)) => match w.parse::<f64>() {
                Ok(v) if v.is_finite() => {
                    self.at += 1;
                    Ok(v)
                }
                _ => self.err(format!("expected a decimal literal, found `{w}`")),
            },
            Some(_) => self.err("expected a decimal literal"),
            None => self.err("unexpected end of input, expected a decimal literal"),
        }
    }

    fn is_number(&self) -> bool {
        matches!(self.peek(), Some(Tok::Word(w)) if w.parse::<f64>().is_ok())
    }

    fn simple(&mut self) -> Result<Vec<f64>> {
        match self.peek() {
            Some(Tok::Word("const")) => {
                self.at += 1;
                Ok(vec![self.number()?])
            }
            Some(Tok::Word("poly")) => {
                self.at += 1;
                let mut c = vec![self.number()?];
                while self.is_number() {
                    c.push(self.number()?);
                }
                Ok(c)
            }
            Some(Tok::Word(w)) => self.err(format!("expected `const` or `poly`, found `{w}`")),
            Some(_) => self.err("expected `const` or `poly`"),
            None => self.err("empty coefficient"),
        }
    }

    fn expect(&mut self, tok: Tok<'static>, what: &str) -> Result<()> {
        if self.peek() == Some(&tok) {
            self.at += 1;
            Ok(())
        } else {
            self.err(format!("expected `{what}`"))
        }
    }

    fn spec(&mut self) -> Result<Vec<Piece>> {
        if self.peek() != Some(&Tok::Word("piece")) {
            let c = self.simple()?;
            return Ok(vec![Piece::polynomial(0.0, 1.0, c)]);
        }
        let mut pieces = Vec::new();
        loop {
            self.expect(Tok::Word("piece"), "piece")?;
            let a = self.number()?;
            let b = self.number()?;
            self.expect(Tok::Colon, ":")?;
            let c = self.simple()?;
            pieces.push(Piece::polynomial(a, b, c));
            match self.peek() {
                Some(Tok::Semi) => {
                    self.at += 1;
                    if self.peek().is_none() {
                        break;
                    }
                }
                None => break,
                Some(_) => return self.err("expected `;` or end of input"),
            }
        }
        Ok(pieces)
    }
}

/// Parse and validate one coefficient description.
pub fn parse_coefficient_spec(text: &str, kind: CoefficientKind) -> Result<CoefficientSpec> {
    let mut p = Parser { toks: tokenize(text), at: 0, end: text.len() };
    let pieces = p.spec()?;
    if p.peek().is_some() {
        return p.err("trailing input");
    }
    CoefficientSpec::new(pieces, kind)
}

// ------------------------------------------------------------ integration

/// One factor of an integrand.
#[derive(Clone, Debug)]
pub enum Factor<'a> {
    Spec(&'a CoefficientSpec),
    /// Global polynomial, ascending coefficients.
    Poly(Vec<f64>),
}

impl Factor<'_> {
    /// `x^k`.
    pub fn monomial(k: usize) -> Factor<'static> {
        let mut c = vec![0.0; k + 1];
        c[k] = 1.0;
        Factor::Poly(c)
    }
}

/// Exact `∫_a^b Π factors dx` by per-piece closed-form antiderivatives.
pub fn integrate_product(factors: &[Factor<'_>], a: f64, b: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&a) || !(0.0..=1.0).contains(&b) {
        return Err(Error::OutOfDomain(if (0.0..=1.0).contains(&a) { b } else { a }));
    }
    if a > b {
        return Err(Error::Factor(format!("reversed interval [{a}, {b}]")));
    }
    if factors.is_empty() {
        return Err(Error::Factor("empty factor list".into()));
    }
    for f in factors {
        match f {
            Factor::Spec(s) if !s.is_polynomial() => {
                return Err(Error::Factor("rational piece cannot be integrated exactly".into()))
            }
            Factor::Poly(p) if p.is_empty() || p.iter().any(|c| !c.is_finite()) => {
                return Err(Error::Factor("empty or non-finite polynomial factor".into()))
            }
            _ => {}
        }
    }
    let mut cuts = vec![a, b];
    for f in factors {
        if let Factor::Spec(s) = f {
            cuts.extend(s.breakpoints().into_iter().filter(|&x| x > a && x < b));
        }
    }
    cuts.sort_by(f64::total_cmp);
    cuts.dedup();
    let mut total = 0.0;
    for w in cuts.windows(2) {
        let (s, t) = (w[0], w[1]);
        if s == t {
            continue;
        }
        let mid = 0.5 * (s + t);
        let mut prod = vec![1.0];
        for f in factors {
            let p = match f {
                Factor::Spec(spec) => spec.pieces[spec.piece_index(mid)].as_polynomial().expect("checked above"),
                Factor::Poly(p) => p.clone(),
            };
            prod = poly_mul(&prod, &p);
        }
        total += poly_integral(&prod, s, t);
    }
    Ok(total)
}

/// Gauss–Legendre nodes and weights on `[-1, 1]`.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut x = vec![0.0; n];
    let mut w = vec![0.0; n];
    for i in 0..n {
        let mut z = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, z);
            for k in 2..=n {
                let p2 = ((2 * k - 1) as f64 * z * p1 - (k - 1) as f64 * p0) / k as f64;
                p0 = p1;
                p1 = p2;
            }
            let pn = if n == 0 { 1.0 } else if n == 1 { z } else { p1 };
            let pm = if n == 1 { 1.0 } else { p0 };
            dp = n as f64 * (z * pn - pm) / (z * z - 1.0);
            let dz = pn / dp;
            z -= dz;
            if dz.abs() < 1e-16 {
                break;
            }
        }
        x[i] = z;
        w[i] = 2.0 / ((1.0 - z * z) * dp * dp);
    }
    (x, w)
}

/// `∫_a^b f`, exact on polynomial pieces and 32-point Gauss–Legendre on rational ones.
pub fn integrate_any(spec: &CoefficientSpec, a: f64, b: f64) -> Result<f64> {
    if spec.is_polynomial() {
        return integrate(spec, a, b);
    }
    let (x, w) = gauss_legendre(32);
    let mut cuts: Vec<f64> = spec.breakpoints().into_iter().filter(|&t| a < t && t < b).collect();
    cuts.insert(0, a);
    cuts.push(b);
    let mut acc = 0.0;
    for s in cuts.windows(2) {
        let (mid, half) = (0.5 * (s[0] + s[1]), 0.5 * (s[1] - s[0]));
        let p = &spec.pieces[spec.piece_index(mid)];
        acc += x.iter().zip(&w).map(|(x, w)| w * half * p.eval(mid + half * x)).sum::<f64>();
    }
    Ok(acc)
}

/// `∫_a^b spec dx`.
pub fn integrate(spec: &CoefficientSpec, a: f64, b: f64) -> Result<f64> {
    integrate_product(&[Factor::Spec(spec)], a, b)
}

/// Replace `ρ` by `ρ/c²` and `α` by `α/c²` for variable wave speed `c`.
pub fn reduce_variable_speed(
    rho: &CoefficientSpec,
    alpha: &CoefficientSpec,
    c: &CoefficientSpec,
) -> Result<(CoefficientSpec, CoefficientSpec)> {
    if c.kind != CoefficientKind::Density {
        // Re-validate under the positivity invariant.
        CoefficientSpec::new(c.pieces.clone(), CoefficientKind::Density)?;
    }
    let divide = |f: &CoefficientSpec, kind| -> Result<CoefficientSpec> {
        let mut cuts: Vec<f64> = f.breakpoints();
        cuts.extend(c.breakpoints());
        cuts.sort_by(f64::total_cmp);
        cuts.dedup();
        let mut pieces = Vec::new();
        for w in cuts.windows(2) {
            let mid = 0.5 * (w[0] + w[1]);
            let fp = &f.pieces[f.piece_index(mid)];
            let cp = &c.pieces[c.piece_index(mid)];
            let c2 = poly_mul(&poly_mul(&cp.num, &cp.num), &poly_mul(&fp.den, &[1.0]));
            let num = poly_mul(&fp.num, &poly_mul(&cp.den, &cp.den));
            let mut piece = Piece { a: w[0], b: w[1], num, den: c2 };
            if let Some(p) = piece.as_polynomial() {
                piece = Piece::polynomial(w[0], w[1], p);
            }
            pieces.push(piece);
        }
        CoefficientSpec::new(pieces, kind)
    };
    Ok((divide(rho, CoefficientKind::Density)?, divide(alpha, CoefficientKind::Damping)?))
}
