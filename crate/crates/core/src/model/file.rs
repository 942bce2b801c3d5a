use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{ParameterPoint, ParametricHamiltonian};
use crate::error::{Error, Result};
use crate::operator::{c, hermitize, CMatrix, HermitianOperator, C64, HERMITICITY_TOL};

/// Largest monomial exponent accepted in a model file.
pub const MAX_EXPONENT: u32 = 64;

/// One term `lambda^e * M` of a file-backed model.
#[derive(Debug, Clone, PartialEq)]
pub struct Term {
    pub exponents: Vec<u32>,
    pub matrix: HermitianOperator,
}

impl Term {
    fn coefficient(&self, x: &[f64]) -> f64 {
        self.exponents.iter().zip(x).map(|(&e, &v)| v.powi(e as i32)).product()
    }

    fn partial(&self, x: &[f64], mu: usize) -> f64 {
        let e = self.exponents[mu];
        if e == 0 {
            return 0.0;
        }
        self.exponents
            .iter()
            .zip(x)
            .enumerate()
            .map(|(k, (&ek, &v))| if k == mu { ek as f64 * v.powi(ek as i32 - 1) } else { v.powi(ek as i32) })
            .product()
    }
}

/// `H(lambda) = sum_k lambda^{e_k} M_k` read from a model file.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelSpec {
    dim: usize,
    names: Vec<String>,
    terms: Vec<Term>,
}

impl ModelSpec {
    pub fn new(dim: usize, names: Vec<String>, terms: Vec<Term>) -> Result<Self> {
        if dim == 0 || names.is_empty() {
            return Err(Error::InvalidConfig("model needs dim >= 1 and at least one parameter".into()));
        }
        for t in &terms {
            if t.matrix.dim() != dim {
                return Err(Error::DimensionMismatch { expected: dim, got: t.matrix.dim() });
            }
            if t.exponents.len() != names.len() {
                return Err(Error::DimensionMismatch { expected: names.len(), got: t.exponents.len() });
            }
            if t.exponents.iter().any(|&e| e > MAX_EXPONENT) {
                return Err(Error::InvalidConfig(format!("exponent above {MAX_EXPONENT}")));
            }
        }
        Ok(Self { dim, names, terms })
    }

    pub fn terms(&self) -> &[Term] {
        &self.terms
    }

    /// Parse the text model format.
    pub fn parse(text: &str) -> Result<Self> {
        let syntax = |line: usize, message: String| Error::Syntax { line, message };
        let mut lines = text
            .lines()
            .enumerate()
            .map(|(i, l)| (i + 1, l.trim()))
            .filter(|(_, l)| !l.is_empty() && !l.starts_with('#'))
            .peekable();

        let mut dim = None;
        let mut names = None;
        while let Some(&(no, line)) = lines.peek() {
            if line.starts_with("term") {
                break;
            }
            lines.next();
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| syntax(no, format!("expected `key = value`, found `{line}`")))?;
            match key.trim() {
                "dim" => {
                    let d: usize =
                        value.trim().parse().map_err(|_| syntax(no, format!("bad dim `{}`", value.trim())))?;
                    if d == 0 {
                        return Err(syntax(no, "dim must be positive".into()));
                    }
                    dim = Some(d);
                }
                "params" => {
                    let n: Vec<String> = value.split_whitespace().map(str::to_owned).collect();
                    if n.is_empty() {
                        return Err(syntax(no, "params needs at least one name".into()));
                    }
                    names = Some(n);
                }
                other => return Err(syntax(no, format!("unknown header `{other}`"))),
            }
        }
        let dim = dim.ok_or_else(|| syntax(0, "missing `dim` header".into()))?;
        let names = names.ok_or_else(|| syntax(0, "missing `params` header".into()))?;

        let mut terms = Vec::new();
        while let Some((no, line)) = lines.next() {
            let mut words = line.split_whitespace();
            if words.next() != Some("term") {
                return Err(syntax(no, format!("expected `term`, found `{line}`")));
            }
            let exponents = words
                .map(|w| {
                    let e: u32 = w.parse().map_err(|_| syntax(no, format!("bad exponent `{w}`")))?;
                    if e > MAX_EXPONENT {
                        return Err(syntax(no, format!("exponent {e} exceeds {MAX_EXPONENT}")));
                    }
                    Ok(e)
                })
                .collect::<Result<Vec<u32>>>()?;
            if exponents.len() != names.len() {
                return Err(syntax(no, format!("term has {} exponents for {} params", exponents.len(), names.len())));
            }
            let mut m = CMatrix::zeros(dim, dim);
            for row in 0..dim {
                let (rno, rline) = lines
                    .next()
                    .ok_or_else(|| syntax(no, format!("term ends after {row} of {dim} rows")))?;
                if rline.starts_with("term") {
                    return Err(syntax(rno, format!("term ends after {row} of {dim} rows")));
                }
                let entries: Vec<&str> = rline.split_whitespace().collect();
                if entries.len() != dim {
                    return Err(syntax(rno, format!("row has {} entries, dim is {dim}", entries.len())));
                }
                for (col, s) in entries.into_iter().enumerate() {
                    m[(row, col)] = parse_complex(s).ok_or_else(|| syntax(rno, format!("bad complex entry `{s}`")))?;
                }
            }
            let h = hermitize(&m)?;
            if h.relative_asymmetry > HERMITICITY_TOL {
                return Err(syntax(no, format!("term matrix is not Hermitian ({:.3e})", h.relative_asymmetry)));
            }
            terms.push(Term { exponents, matrix: h.operator });
        }
        if let Some((no, _)) = lines.peek() {
            return Err(syntax(*no, "trailing content".into()));
        }
        Self::new(dim, names, terms)
    }

    /// Random model with `n_terms` terms of total degree at most 2, for property tests.
    pub fn pseudo_random(dim: usize, n_params: usize, n_terms: usize, seed: u64) -> Result<Self> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let names = (0..n_params).map(|k| format!("x{k}")).collect();
        let mut terms = Vec::with_capacity(n_terms + 1);
        let diag = CMatrix::from_fn(dim, dim, |i, j| c(if i == j { 2.0 * i as f64 } else { 0.0 }, 0.0));
        terms.push(Term { exponents: vec![0; n_params], matrix: HermitianOperator::hermitian_part(&diag) });
        for _ in 0..n_terms {
            let mut exponents = vec![0; n_params];
            for _ in 0..rng.gen_range(1..=2) {
                exponents[rng.gen_range(0..n_params)] += 1;
            }
            let m = CMatrix::from_fn(dim, dim, |_, _| c(rng.gen_range(-0.5..0.5), rng.gen_range(-0.5..0.5)));
            terms.push(Term { exponents, matrix: HermitianOperator::hermitian_part(&m) });
        }
        Self::new(dim, names, terms)
    }
}

impl FromStr for ModelSpec {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        Self::parse(s)
    }
}

fn parse_complex(s: &str) -> Option<C64> {
    let z = C64::from_str(s).ok()?;
    (z.re.is_finite() && z.im.is_finite()).then_some(z)
}

fn fmt_complex(z: C64) -> String {
    let sign = if z.im.is_sign_negative() { '-' } else { '+' };
    format!("{:?}{sign}{:?}i", z.re, z.im.abs())
}

impl fmt::Display for ModelSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "dim = {}", self.dim)?;
        writeln!(f, "params = {}", self.names.join(" "))?;
        for t in &self.terms {
            let e: Vec<String> = t.exponents.iter().map(u32::to_string).collect();
            writeln!(f, "term {}", e.join(" "))?;
            let m = t.matrix.matrix();
            for i in 0..self.dim {
                let row: Vec<String> = (0..self.dim).map(|j| fmt_complex(m[(i, j)])).collect();
                writeln!(f, "{}", row.join(" "))?;
            }
        }
        Ok(())
    }
}

impl ParametricHamiltonian for ModelSpec {
    fn dim(&self) -> usize {
        self.dim
    }

    fn n_params(&self) -> usize {
        self.names.len()
    }

    fn param_names(&self) -> Vec<String> {
        self.names.clone()
    }

    fn eval_unchecked(&self, p: &ParameterPoint) -> HermitianOperator {
        let mut h = CMatrix::zeros(self.dim, self.dim);
        for t in &self.terms {
            h += t.matrix.matrix().scale(t.coefficient(p.coords()));
        }
        HermitianOperator::hermitian_part(&h)
    }

    fn analytic_grad(&self, p: &ParameterPoint) -> Option<Vec<HermitianOperator>> {
        Some(
            (0..self.n_params())
                .map(|mu| {
                    let mut g = CMatrix::zeros(self.dim, self.dim);
                    for t in &self.terms {
                        let d = t.partial(p.coords(), mu);
                        if d != 0.0 {
                            g += t.matrix.matrix().scale(d);
                        }
                    }
                    HermitianOperator::hermitian_part(&g)
                })
                .collect(),
        )
    }
}
