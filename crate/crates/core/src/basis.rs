//! Declared basis terms over named covariate columns: `1`, `x1`, `x1^2`, `x1*x2`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A monomial in the covariates. An empty factor list is the intercept.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Term {
    factors: Vec<(usize, u32)>,
}

impl Term {
    pub fn intercept() -> Self {
        Self { factors: vec![] }
    }

    pub fn linear(column: usize) -> Self {
        Self {
            factors: vec![(column, 1)],
        }
    }

    /// Factors are merged per column and kept sorted so equal monomials compare equal.
    pub fn from_factors(factors: impl IntoIterator<Item = (usize, u32)>) -> Self {
        let mut merged: Vec<(usize, u32)> = Vec::new();
        for (col, pow) in factors {
            if pow == 0 {
                continue;
            }
            match merged.iter_mut().find(|(c, _)| *c == col) {
                Some(entry) => entry.1 += pow,
                None => merged.push((col, pow)),
            }
        }
        merged.sort_unstable();
        Self { factors: merged }
    }

    pub fn parse(text: &str, columns: &[String]) -> Result<Self> {
        let text = text.trim();
        if text == "1" {
            return Ok(Self::intercept());
        }
        let mut factors = Vec::new();
        for raw in text.split('*') {
            let raw = raw.trim();
            if raw.is_empty() {
                return Err(Error::Spec(format!("empty factor in term '{text}'")));
            }
            if raw == "1" {
                continue;
            }
            let (name, pow) = match raw.split_once('^') {
                Some((name, pow)) => {
                    let pow: u32 = pow.trim().parse().map_err(|_| {
                        Error::Spec(format!("bad exponent '{}' in term '{text}'", pow.trim()))
                    })?;
                    (name.trim(), pow)
                }
                None => (raw, 1),
            };
            let col = columns.iter().position(|c| c == name).ok_or_else(|| {
                Error::Spec(format!(
                    "term '{text}' references undeclared covariate '{name}'"
                ))
            })?;
            factors.push((col, pow));
        }
        Ok(Self::from_factors(factors))
    }

    pub fn eval(&self, x: &[f64]) -> f64 {
        self.factors
            .iter()
            .map(|&(col, pow)| x[col].powi(pow as i32))
            .product()
    }

    pub fn degree(&self) -> u32 {
        self.factors.iter().map(|(_, p)| p).sum()
    }

    pub fn is_intercept(&self) -> bool {
        self.factors.is_empty()
    }

    /// The column when this term is a bare linear covariate.
    pub fn linear_column(&self) -> Option<usize> {
        match self.factors.as_slice() {
            [(col, 1)] => Some(*col),
            _ => None,
        }
    }

    pub fn columns(&self) -> impl Iterator<Item = usize> + '_ {
        self.factors.iter().map(|(c, _)| *c)
    }

    pub fn label(&self, columns: &[String]) -> String {
        if self.factors.is_empty() {
            return "1".to_string();
        }
        self.factors
            .iter()
            .map(|&(col, pow)| {
                if pow == 1 {
                    columns[col].clone()
                } else {
                    format!("{}^{}", columns[col], pow)
                }
            })
            .collect::<Vec<_>>()
            .join("*")
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Basis {
    pub terms: Vec<Term>,
}

impl Basis {
    pub fn new(terms: Vec<Term>) -> Self {
        Self { terms }
    }

    pub fn parse<S: AsRef<str>>(terms: &[S], columns: &[String]) -> Result<Self> {
        terms
            .iter()
            .map(|t| Term::parse(t.as_ref(), columns))
            .collect::<Result<Vec<_>>>()
            .map(Self::new)
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn eval_into(&self, x: &[f64], out: &mut [f64]) {
        for (o, term) in out.iter_mut().zip(&self.terms) {
            *o = term.eval(x);
        }
    }

    pub fn eval(&self, x: &[f64]) -> Vec<f64> {
        self.terms.iter().map(|t| t.eval(x)).collect()
    }

    /// Only the intercept (or nothing): the function does not vary with x.
    pub fn is_constant(&self) -> bool {
        self.terms.iter().all(Term::is_intercept)
    }

    pub fn max_degree(&self) -> u32 {
        self.terms.iter().map(Term::degree).max().unwrap_or(0)
    }

    pub fn uses_column(&self, col: usize) -> bool {
        self.terms.iter().any(|t| t.columns().any(|c| c == col))
    }

    pub fn labels(&self, columns: &[String]) -> Vec<String> {
        self.terms.iter().map(|t| t.label(columns)).collect()
    }
}
