//! Basis-function designs for the outcome and mediator logistic models.
//!
//! A design is an ordered list of terms written as short expressions:
//!
//! | expression              | basis                                         |
//! |-------------------------|-----------------------------------------------|
//! | `1`                     | constant                                      |
//! | `x`, `m`, `BMI`         | exposure, mediator, named covariate           |
//! | `x^2`                   | integer power                                 |
//! | `log(x)`                | natural logarithm                             |
//! | `x*m`, `x:Gender`       | product of two or more variables              |
//! | `table(x; 10=0, 40=1)`  | piecewise-linear lookup through user knots    |
//!
//! `x` and `m` are reserved for the exposure and the mediator; every other
//! name refers to a covariate column.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Read access to the variables a term may reference.
pub trait Variables {
    fn exposure(&self) -> f64;
    fn mediator(&self) -> Option<f64>;
    fn covariate(&self, name: &str) -> Option<f64>;
}

/// An evaluation point for a fitted model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Point {
    pub exposure: f64,
    pub mediator: Option<f64>,
    pub covariates: BTreeMap<String, f64>,
}

impl Point {
    pub fn new(exposure: f64, mediator: Option<f64>, covariates: BTreeMap<String, f64>) -> Self {
        Point {
            exposure,
            mediator,
            covariates,
        }
    }
}

impl Variables for Point {
    fn exposure(&self) -> f64 {
        self.exposure
    }
    fn mediator(&self) -> Option<f64> {
        self.mediator
    }
    fn covariate(&self, name: &str) -> Option<f64> {
        self.covariates.get(name).copied()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Var {
    Exposure,
    Mediator,
    Covariate(String),
}

impl Var {
    fn value(&self, vars: &impl Variables) -> Result<f64> {
        match self {
            Var::Exposure => Ok(vars.exposure()),
            Var::Mediator => vars
                .mediator()
                .ok_or_else(|| Error::MissingVariable("m".into())),
            Var::Covariate(name) => vars
                .covariate(name)
                .ok_or_else(|| Error::MissingVariable(name.clone())),
        }
    }

    fn parse(s: &str, term: &str) -> Result<Var> {
        let s = s.trim();
        let valid = !s.is_empty()
            && s.chars()
                .all(|c| c.is_alphanumeric() || c == '_' || c == '.')
            && !s.chars().next().is_some_and(|c| c.is_ascii_digit());
        if !valid {
            return Err(Error::InvalidTerm {
                term: term.into(),
                message: format!("`{s}` is not a variable name"),
            });
        }
        Ok(match s {
            "x" => Var::Exposure,
            "m" => Var::Mediator,
            other => Var::Covariate(other.to_string()),
        })
    }
}

impl fmt::Display for Var {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Var::Exposure => f.write_str("x"),
            Var::Mediator => f.write_str("m"),
            Var::Covariate(name) => f.write_str(name),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub enum Term {
    Intercept,
    Linear(Var),
    Power(Var, i32),
    Log(Var),
    Product(Vec<Var>),
    /// Piecewise-linear interpolation through `(input, output)` knots,
    /// constant beyond the outermost knots.
    Table {
        var: Var,
        knots: Vec<(f64, f64)>,
    },
}

impl Term {
    pub fn eval(&self, vars: &impl Variables) -> Result<f64> {
        match self {
            Term::Intercept => Ok(1.0),
            Term::Linear(v) => v.value(vars),
            Term::Power(v, k) => Ok(v.value(vars)?.powi(*k)),
            Term::Log(v) => Ok(v.value(vars)?.ln()),
            Term::Product(vs) => vs.iter().try_fold(1.0, |acc, v| Ok(acc * v.value(vars)?)),
            Term::Table { var, knots } => Ok(interpolate(knots, var.value(vars)?)),
        }
    }

    pub fn variables(&self) -> Vec<&Var> {
        match self {
            Term::Intercept => vec![],
            Term::Linear(v) | Term::Power(v, _) | Term::Log(v) => vec![v],
            Term::Table { var, .. } => vec![var],
            Term::Product(vs) => vs.iter().collect(),
        }
    }

    pub fn references_mediator(&self) -> bool {
        self.variables().into_iter().any(|v| *v == Var::Mediator)
    }
}

fn interpolate(knots: &[(f64, f64)], v: f64) -> f64 {
    let (first, last) = (knots[0], knots[knots.len() - 1]);
    if v <= first.0 {
        return first.1;
    }
    if v >= last.0 {
        return last.1;
    }
    let i = knots.partition_point(|k| k.0 <= v);
    let (x0, y0) = knots[i - 1];
    let (x1, y1) = knots[i];
    y0 + (y1 - y0) * (v - x0) / (x1 - x0)
}

impl FromStr for Term {
    type Err = Error;

    fn from_str(raw: &str) -> Result<Term> {
        let s = raw.trim();
        let bad = |message: &str| Error::InvalidTerm {
            term: raw.to_string(),
            message: message.to_string(),
        };
        if s == "1" || s.eq_ignore_ascii_case("intercept") {
            return Ok(Term::Intercept);
        }
        if let Some(inner) = s.strip_prefix("log(").and_then(|r| r.strip_suffix(')')) {
            return Ok(Term::Log(Var::parse(inner, raw)?));
        }
        if let Some(inner) = s.strip_prefix("table(").and_then(|r| r.strip_suffix(')')) {
            let (var, spec) = inner
                .split_once(';')
                .ok_or_else(|| bad("expected `table(var; in=out, ...)`"))?;
            let var = Var::parse(var, raw)?;
            let mut knots = Vec::new();
            for knot in spec.split(',') {
                let (a, b) = knot
                    .split_once('=')
                    .ok_or_else(|| bad("knots are written `input=output`"))?;
                let a: f64 = a
                    .trim()
                    .parse()
                    .map_err(|_| bad("knot input is not a number"))?;
                let b: f64 = b
                    .trim()
                    .parse()
                    .map_err(|_| bad("knot output is not a number"))?;
                if !a.is_finite() || !b.is_finite() {
                    return Err(bad("knots must be finite"));
                }
                knots.push((a, b));
            }
            if knots.len() < 2 {
                return Err(bad("a table needs at least two knots"));
            }
            if knots.windows(2).any(|w| w[1].0 <= w[0].0) {
                return Err(bad("knot inputs must be strictly increasing"));
            }
            return Ok(Term::Table { var, knots });
        }
        if s.contains('*') || s.contains(':') {
            let vars = s
                .split(['*', ':'])
                .map(|p| Var::parse(p, raw))
                .collect::<Result<Vec<_>>>()?;
            return Ok(Term::Product(vars));
        }
        if let Some((v, k)) = s.split_once('^') {
            let k: i32 = k
                .trim()
                .parse()
                .map_err(|_| bad("exponent must be an integer"))?;
            if k < 2 {
                return Err(bad("exponent must be at least 2"));
            }
            return Ok(Term::Power(Var::parse(v, raw)?, k));
        }
        Ok(Term::Linear(Var::parse(s, raw)?))
    }
}

impl fmt::Display for Term {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Term::Intercept => f.write_str("1"),
            Term::Linear(v) => write!(f, "{v}"),
            Term::Power(v, k) => write!(f, "{v}^{k}"),
            Term::Log(v) => write!(f, "log({v})"),
            Term::Product(vs) => {
                let parts: Vec<String> = vs.iter().map(|v| v.to_string()).collect();
                f.write_str(&parts.join("*"))
            }
            Term::Table { var, knots } => {
                let parts: Vec<String> = knots.iter().map(|(a, b)| format!("{a}={b}")).collect();
                write!(f, "table({var}; {})", parts.join(", "))
            }
        }
    }
}

impl TryFrom<String> for Term {
    type Error = Error;
    fn try_from(s: String) -> Result<Term> {
        s.parse()
    }
}

impl From<Term> for String {
    fn from(t: Term) -> String {
        t.to_string()
    }
}

/// Which logistic model a design feeds.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Role {
    Outcome,
    Mediator,
}

/// Ordered basis for one logistic linear predictor.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<Term>", into = "Vec<Term>")]
pub struct DesignSpec {
    terms: Vec<Term>,
}

impl DesignSpec {
    pub fn new(terms: Vec<Term>) -> Result<Self> {
        if terms.is_empty() {
            return Err(Error::InvalidDesign(
                "a design needs at least one term".into(),
            ));
        }
        if terms.iter().skip(1).any(|t| *t == Term::Intercept) {
            return Err(Error::InvalidDesign(
                "the constant term must come first".into(),
            ));
        }
        for (i, t) in terms.iter().enumerate() {
            if terms[..i].contains(t) {
                return Err(Error::InvalidDesign(format!("term `{t}` appears twice")));
            }
        }
        Ok(DesignSpec { terms })
    }

    pub fn parse<S: AsRef<str>>(terms: &[S]) -> Result<Self> {
        Self::new(
            terms
                .iter()
                .map(|s| s.as_ref().parse())
                .collect::<Result<_>>()?,
        )
    }

    pub fn terms(&self) -> &[Term] {
        &self.terms
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn has_intercept(&self) -> bool {
        self.terms.first() == Some(&Term::Intercept)
    }

    pub fn includes_mediator(&self) -> bool {
        self.terms.iter().any(Term::references_mediator)
    }

    pub fn labels(&self) -> Vec<String> {
        self.terms.iter().map(Term::to_string).collect()
    }

    pub fn covariates(&self) -> Vec<String> {
        let mut names: Vec<String> = self
            .terms
            .iter()
            .flat_map(|t| t.variables())
            .filter_map(|v| match v {
                Var::Covariate(n) => Some(n.clone()),
                _ => None,
            })
            .collect();
        names.sort();
        names.dedup();
        names
    }

    /// Basis evaluations at one point.
    pub fn row(&self, vars: &impl Variables) -> Result<Vec<f64>> {
        self.terms.iter().map(|t| t.eval(vars)).collect()
    }
}

impl TryFrom<Vec<Term>> for DesignSpec {
    type Error = Error;
    fn try_from(terms: Vec<Term>) -> Result<Self> {
        DesignSpec::new(terms)
    }
}

impl From<DesignSpec> for Vec<Term> {
    fn from(d: DesignSpec) -> Vec<Term> {
        d.terms
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn point(x: f64, m: Option<f64>) -> Point {
        let mut c = BTreeMap::new();
        c.insert("BMI".to_string(), 28.5);
        c.insert("Gender".to_string(), 1.0);
        Point::new(x, m, c)
    }

    #[test]
    fn parses_every_term_kind() {
        let d = DesignSpec::parse(&[
            "1",
            "x",
            "m",
            "BMI",
            "x^2",
            "log(x)",
            "x*m",
            "x:Gender",
            "table(x; 10=0, 50=2)",
        ])
        .unwrap();
        let row = d.row(&point(30.0, Some(1.0))).unwrap();
        let expected = [1.0, 30.0, 1.0, 28.5, 900.0, 30.0_f64.ln(), 30.0, 30.0, 1.0];
        for (a, b) in row.iter().zip(expected) {
            assert!((a - b).abs() < 1e-12);
        }
        assert!(d.includes_mediator());
        assert_eq!(
            d.covariates(),
            vec!["BMI".to_string(), "Gender".to_string()]
        );
    }

    #[test]
    fn labels_roundtrip_through_parser() {
        let src = [
            "1",
            "x",
            "x^3",
            "log(BMI)",
            "x*m*Gender",
            "table(x; 10=0, 50=2.5)",
        ];
        let d = DesignSpec::parse(&src).unwrap();
        let again = DesignSpec::parse(&d.labels()).unwrap();
        assert_eq!(d, again);
    }

    #[test]
    fn table_extrapolates_flat() {
        let t: Term = "table(x; 10=0, 50=2)".parse().unwrap();
        assert_eq!(t.eval(&point(0.0, None)).unwrap(), 0.0);
        assert_eq!(t.eval(&point(100.0, None)).unwrap(), 2.0);
        assert!((t.eval(&point(20.0, None)).unwrap() - 0.5).abs() < 1e-15);
    }

    #[test]
    fn missing_variables_are_named() {
        let d = DesignSpec::parse(&["1", "x", "m", "Age"]).unwrap();
        match d.row(&point(1.0, Some(0.0))) {
            Err(Error::MissingVariable(n)) => assert_eq!(n, "Age"),
            other => panic!("unexpected {other:?}"),
        }
        match d.row(&point(1.0, None)) {
            Err(Error::MissingVariable(n)) => assert_eq!(n, "m"),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn rejects_malformed_designs() {
        assert!(DesignSpec::parse::<&str>(&[]).is_err());
        assert!(DesignSpec::parse(&["x", "1"]).is_err());
        assert!(DesignSpec::parse(&["x", "x"]).is_err());
        assert!("x^1".parse::<Term>().is_err());
        assert!("table(x; 5=1)".parse::<Term>().is_err());
        assert!("table(x; 5=1, 4=2)".parse::<Term>().is_err());
        assert!("2x".parse::<Term>().is_err());
    }
}
