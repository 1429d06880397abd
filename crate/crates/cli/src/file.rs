//! Line-oriented congruence files.
//!
//! ```text
//! # comment
//! chart b
//! domain -1 1 -1 1
//! b1 0 1 2
//! b2 2 0 7/2
//! ```
//!
//! A term line `b1 du dv c` adds `c u^du v^dv` to component `b1`. With
//! `chart a` the components are `a1` and `a2`.

use std::fmt;

use linecong::congruence::ChartKind;
use linecong::scalar::parse_rational;
use linecong::{Congruence, Domain, Poly, Scalar};
use num_rational::BigRational;

#[derive(Debug, thiserror::Error, PartialEq)]
pub enum FileError {
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("domain is empty")]
    DomainEmpty,
    #[error("no `chart` line")]
    MissingChart,
}

/// One `coeff * u^du * v^dv` record.
#[derive(Clone, Debug, PartialEq)]
pub struct Term {
    pub du: u32,
    pub dv: u32,
    pub coeff: BigRational,
}

#[derive(Clone, Debug, PartialEq)]
pub struct CongruenceFile {
    /// `BChart` or `AChart`.
    pub chart: ChartKind,
    pub domain: Option<[f64; 4]>,
    pub components: [Vec<Term>; 2],
}

fn prefix(chart: ChartKind) -> char {
    if chart == ChartKind::AChart {
        'a'
    } else {
        'b'
    }
}

impl CongruenceFile {
    pub fn parse(text: &str) -> Result<Self, FileError> {
        let mut chart = None;
        let mut domain = None;
        let mut terms: Vec<(usize, String, Term)> = Vec::new();
        for (k, raw) in text.lines().enumerate() {
            let line = k + 1;
            let err = |message: String| FileError::Parse { line, message };
            let body = raw.split('#').next().unwrap_or("").trim();
            if body.is_empty() {
                continue;
            }
            let fields: Vec<&str> = body.split_whitespace().collect();
            match fields[0] {
                "chart" => {
                    if chart.is_some() {
                        return Err(err("duplicate `chart`".into()));
                    }
                    chart = Some(match fields.get(1..) {
                        Some(["b"]) => ChartKind::BChart,
                        Some(["a"]) => ChartKind::AChart,
                        _ => return Err(err("expected `chart b` or `chart a`".into())),
                    });
                }
                "domain" => {
                    if domain.is_some() {
                        return Err(err("duplicate `domain`".into()));
                    }
                    if fields.len() != 5 {
                        return Err(err("expected `domain umin umax vmin vmax`".into()));
                    }
                    let mut d = [0.0; 4];
                    for (slot, f) in d.iter_mut().zip(&fields[1..]) {
                        *slot = f.parse::<f64>().map_err(|_| err(format!("bad number `{f}`")))?;
                        if !slot.is_finite() {
                            return Err(err(format!("bad number `{f}`")));
                        }
                    }
                    domain = Some(d);
                }
                key @ ("a1" | "a2" | "b1" | "b2") => {
                    if fields.len() != 4 {
                        return Err(err(format!("expected `{key} du dv coeff`")));
                    }
                    let exp = |f: &str| f.parse::<u32>().map_err(|_| err(format!("bad exponent `{f}`")));
                    let (du, dv) = (exp(fields[1])?, exp(fields[2])?);
                    let coeff = parse_rational(fields[3]).ok_or_else(|| err(format!("bad coefficient `{}`", fields[3])))?;
                    terms.push((line, key.to_string(), Term { du, dv, coeff }));
                }
                other => return Err(err(format!("unknown key `{other}`"))),
            }
        }
        let chart = chart.ok_or(FileError::MissingChart)?;
        if let Some([umin, umax, vmin, vmax]) = domain {
            if Domain::new(umin, umax, vmin, vmax).is_empty() {
                return Err(FileError::DomainEmpty);
            }
        }
        let p = prefix(chart);
        let mut components = [Vec::new(), Vec::new()];
        for (line, key, term) in terms {
            let mut chars = key.chars();
            if chars.next() != Some(p) {
                return Err(FileError::Parse { line, message: format!("`{key}` does not belong to chart {p}") });
            }
            let idx = if chars.next() == Some('1') { 0 } else { 1 };
            components[idx].push(term);
        }
        Ok(CongruenceFile { chart, domain, components })
    }

    pub fn domain(&self) -> Domain {
        self.domain.map(|[a, b, c, d]| Domain::new(a, b, c, d)).unwrap_or_default()
    }

    fn poly<T: Scalar>(&self, idx: usize, conv: &impl Fn(&BigRational) -> T) -> Poly<T> {
        let mut p = Poly::zero();
        for t in &self.components[idx] {
            p.add_term(t.du, t.dv, conv(&t.coeff));
        }
        p
    }

    fn build<T: Scalar>(&self, conv: impl Fn(&BigRational) -> T) -> Congruence<T> {
        let (p1, p2) = (self.poly(0, &conv), self.poly(1, &conv));
        let z = match self.chart {
            ChartKind::AChart => Congruence::achart(p1, p2),
            _ => Congruence::bchart(p1, p2),
        };
        z.with_domain(self.domain())
    }

    /// The congruence with exact rational coefficients.
    pub fn to_exact(&self) -> Congruence<BigRational> {
        self.build(|c| c.clone())
    }

    pub fn to_f64(&self) -> Congruence<f64> {
        self.build(Scalar::to_f64)
    }
}

impl fmt::Display for CongruenceFile {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let p = prefix(self.chart);
        writeln!(f, "chart {p}")?;
        if let Some([a, b, c, d]) = self.domain {
            writeln!(f, "domain {a:?} {b:?} {c:?} {d:?}")?;
        }
        for (idx, terms) in self.components.iter().enumerate() {
            for t in terms {
                writeln!(f, "{p}{} {} {} {}", idx + 1, t.du, t.dv, t.coeff)?;
            }
        }
        Ok(())
    }
}
