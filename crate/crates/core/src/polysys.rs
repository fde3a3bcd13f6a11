//! The alignment conditions as a bilinear polynomial system in the reduced
//! filter variables.
//!
//! Each transmit beam is written as `ṽ = [e_n; v̄]` and each receive beam as
//! `ũ = [e_m; ū]`, so equation `E[k,j;m,n]` becomes
//!
//! ```text
//! H[m,n] + Σ_l H[m,d_j+l] v̄_l + Σ_i H[d_k+i,n] conj(ū_i) + Σ_{i,l} H[d_k+i,d_j+l] conj(ū_i) v̄_l
//! ```
//!
//! The unknowns are the transmit slots and the *conjugated* receive slots,
//! ordered as in [`SystemSpec::variables`].

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{solve_linear, ChannelSet, ComplexMatrix, C64};
use crate::model::{EquationId, SystemSpec, VariableId};

/// Coefficients at or below this magnitude count as vanishing.
pub const GENERICITY_TOL: f64 = 1e-14;

/// Exponents of one monomial.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ExponentVector(pub Vec<u32>);

impl ExponentVector {
    pub fn zero(n: usize) -> Self {
        Self(vec![0; n])
    }

    pub fn unit(n: usize, i: usize) -> Self {
        let mut v = vec![0; n];
        v[i] = 1;
        Self(v)
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn total_degree(&self) -> u32 {
        self.0.iter().sum()
    }

    pub fn add(&self, other: &ExponentVector) -> ExponentVector {
        Self(self.0.iter().zip(&other.0).map(|(a, b)| a + b).collect())
    }
}

/// The exponent vectors of one polynomial, kept sorted and distinct.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SupportSet {
    points: Vec<ExponentVector>,
    pub equation: Option<EquationId>,
}

impl SupportSet {
    pub fn new(points: Vec<ExponentVector>) -> Result<Self> {
        let dim = points.first().map(ExponentVector::dim).ok_or_else(|| {
            Error::Dimension("support sets must be nonempty".into())
        })?;
        if points.iter().any(|p| p.dim() != dim) {
            return Err(Error::Dimension("support points differ in dimension".into()));
        }
        let mut points = points;
        points.sort();
        points.dedup();
        Ok(Self {
            points,
            equation: None,
        })
    }

    pub fn points(&self) -> &[ExponentVector] {
        &self.points
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.points[0].dim()
    }

    pub fn contains(&self, p: &ExponentVector) -> bool {
        self.points.binary_search(p).is_ok()
    }

    /// Indices of coordinates used by at least one point.
    pub fn active_coordinates(&self) -> Vec<usize> {
        (0..self.dim())
            .filter(|&i| self.points.iter().any(|p| p.0[i] != 0))
            .collect()
    }
}

/// Wraps raw exponent tuples into a support set.
pub fn literal_support(points: &[Vec<u32>]) -> Result<SupportSet> {
    SupportSet::new(points.iter().cloned().map(ExponentVector).collect())
}

/// Maximum total degree over the support.
pub fn degree(support: &SupportSet) -> u32 {
    support.points.iter().map(ExponentVector::total_degree).max().unwrap_or(0)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PolynomialSystem {
    pub supports: Vec<SupportSet>,
    /// One coefficient per support point, parallel to `supports[i].points()`.
    pub coefficients: Option<Vec<Vec<C64>>>,
    pub variable_order: Vec<VariableId>,
    pub system: Option<SystemSpec>,
}

impl PolynomialSystem {
    /// A bare system from literal supports (no alignment structure).
    pub fn from_supports(supports: Vec<SupportSet>) -> Result<Self> {
        if let Some(first) = supports.first() {
            let dim = first.dim();
            if supports.iter().any(|s| s.dim() != dim) {
                return Err(Error::Dimension("supports differ in dimension".into()));
            }
        }
        Ok(Self {
            supports,
            coefficients: None,
            variable_order: Vec::new(),
            system: None,
        })
    }

    pub fn num_equations(&self) -> usize {
        self.supports.len()
    }

    pub fn num_variables(&self) -> usize {
        self.supports.first().map_or(0, SupportSet::dim)
    }

    /// Evaluates every polynomial at `x`. Requires bound coefficients.
    pub fn evaluate(&self, x: &[C64]) -> Result<Vec<C64>> {
        let coeffs = self
            .coefficients
            .as_ref()
            .ok_or_else(|| Error::Dimension("no coefficients bound".into()))?;
        if x.len() != self.num_variables() {
            return Err(Error::Dimension(format!(
                "{} values for {} variables",
                x.len(),
                self.num_variables()
            )));
        }
        Ok(self
            .supports
            .iter()
            .zip(coeffs)
            .map(|(s, cs)| {
                s.points
                    .iter()
                    .zip(cs)
                    .map(|(p, c)| {
                        p.0.iter()
                            .enumerate()
                            .filter(|(_, &e)| e > 0)
                            .fold(*c, |acc, (i, &e)| acc * x[i].powu(e))
                    })
                    .sum()
            })
            .collect())
    }

    /// All bound coefficients are nonzero and no value repeats anywhere in
    /// the system. Multi-beam systems fail the second part by construction
    /// because each channel entry appears in several equations.
    pub fn is_generic(&self) -> bool {
        let Some(coeffs) = &self.coefficients else {
            return false;
        };
        let mut all: Vec<C64> = coeffs.iter().flatten().copied().collect();
        if all.iter().any(|c| c.norm() <= GENERICITY_TOL) {
            return false;
        }
        all.sort_by(|a, b| a.re.total_cmp(&b.re).then(a.im.total_cmp(&b.im)));
        // Sorting on the real part only brings equal values together when
        // they are exactly equal; compare all pairs for near-repeats.
        for i in 0..all.len() {
            for j in i + 1..all.len() {
                if all[j].re - all[i].re > GENERICITY_TOL {
                    break;
                }
                if (all[i] - all[j]).norm() <= GENERICITY_TOL {
                    return false;
                }
            }
        }
        true
    }

    /// Keeps the listed equations (by position).
    pub fn subsystem(&self, rows: &[usize]) -> PolynomialSystem {
        PolynomialSystem {
            supports: rows.iter().map(|&i| self.supports[i].clone()).collect(),
            coefficients: self
                .coefficients
                .as_ref()
                .map(|c| rows.iter().map(|&i| c[i].clone()).collect()),
            variable_order: self.variable_order.clone(),
            system: self.system.clone(),
        }
    }
}

#[derive(Debug, Clone, Copy)]
enum Term {
    Constant,
    Transmit(usize),
    Receive(usize),
    Product(usize, usize),
}

/// `(point, term)` pairs of one equation in the canonical variable order.
fn equation_terms(sys: &SystemSpec, eq: &EquationId, n_vars: usize) -> Vec<(ExponentVector, Term)> {
    let tx = sys.user(eq.tx_user);
    let rx = sys.user(eq.rx_user);
    let t_idx: Vec<usize> = (1..=tx.tx_free())
        .map(|slot| {
            sys.variable_index(&VariableId {
                side: crate::model::Side::Transmit,
                user: eq.tx_user,
                beam: eq.tx_beam,
                slot,
            })
        })
        .collect();
    let r_idx: Vec<usize> = (1..=rx.rx_free())
        .map(|slot| {
            sys.variable_index(&VariableId {
                side: crate::model::Side::Receive,
                user: eq.rx_user,
                beam: eq.rx_beam,
                slot,
            })
        })
        .collect();
    let mut terms = vec![(ExponentVector::zero(n_vars), Term::Constant)];
    for (l, &t) in t_idx.iter().enumerate() {
        terms.push((ExponentVector::unit(n_vars, t), Term::Transmit(l)));
    }
    for (i, &r) in r_idx.iter().enumerate() {
        terms.push((ExponentVector::unit(n_vars, r), Term::Receive(i)));
    }
    for (i, &r) in r_idx.iter().enumerate() {
        for (l, &t) in t_idx.iter().enumerate() {
            let mut p = ExponentVector::zero(n_vars);
            p.0[r] = 1;
            p.0[t] = 1;
            terms.push((p, Term::Product(i, l)));
        }
    }
    terms.sort_by(|a, b| a.0.cmp(&b.0));
    terms
}

/// Support sets of all zero-forcing equations (no coefficients).
pub fn build_supports(sys: &SystemSpec) -> PolynomialSystem {
    let variable_order = sys.variables();
    let n_vars = variable_order.len();
    let supports = sys
        .enumerate_equations()
        .iter()
        .map(|eq| SupportSet {
            points: equation_terms(sys, eq, n_vars).into_iter().map(|(p, _)| p).collect(),
            equation: Some(*eq),
        })
        .collect();
    PolynomialSystem {
        supports,
        coefficients: None,
        variable_order,
        system: Some(sys.clone()),
    }
}

/// Attaches channel-derived coefficients to a system from [`build_supports`].
pub fn bind_channels(ps: &PolynomialSystem, ch: &ChannelSet) -> Result<PolynomialSystem> {
    let sys = ps
        .system
        .as_ref()
        .ok_or_else(|| Error::Dimension("polynomial system has no network attached".into()))?;
    ch.check_shapes(sys)?;
    let n_vars = ps.num_variables();
    let mut coefficients = Vec::with_capacity(ps.supports.len());
    for support in &ps.supports {
        let eq = support
            .equation
            .ok_or_else(|| Error::Dimension("support without equation id".into()))?;
        let h = ch.h(eq.rx_user, eq.tx_user);
        let dk = sys.user(eq.rx_user).dof;
        let dj = sys.user(eq.tx_user).dof;
        let (m, n) = (eq.rx_beam - 1, eq.tx_beam - 1);
        let by_point: BTreeMap<ExponentVector, C64> = equation_terms(sys, &eq, n_vars)
            .into_iter()
            .map(|(p, term)| {
                let c = match term {
                    Term::Constant => h[(m, n)],
                    Term::Transmit(l) => h[(m, dj + l)],
                    Term::Receive(i) => h[(dk + i, n)],
                    Term::Product(i, l) => h[(dk + i, dj + l)],
                };
                (p, c)
            })
            .collect();
        coefficients.push(support.points.iter().map(|p| by_point[p]).collect());
    }
    Ok(PolynomialSystem {
        coefficients: Some(coefficients),
        ..ps.clone()
    })
}

/// Reduced-variable values for given filters: `Ṽ = V B⁻¹` with `B` the top
/// `d x d` block (likewise for `U`), receive slots conjugated.
pub fn assignment_from_filters(
    sys: &SystemSpec,
    v: &[ComplexMatrix],
    u: &[ComplexMatrix],
) -> Result<Vec<C64>> {
    let reduce = |m: &ComplexMatrix, d: usize| -> Result<ComplexMatrix> {
        let top = m.rows_range(0..d);
        // Ṽ = V B⁻¹  <=>  Ṽ† = B⁻† V†
        let t = solve_linear(&top.adjoint(), &m.adjoint())?;
        Ok(t.adjoint())
    };
    let mut x = vec![C64::new(0.0, 0.0); sys.variables().len()];
    for var in sys.variables() {
        let user = sys.user(var.user);
        let d = user.dof;
        let idx = sys.variable_index(&var);
        x[idx] = match var.side {
            crate::model::Side::Transmit => {
                let red = reduce(&v[var.user - 1], d)?;
                red[(d + var.slot - 1, var.beam - 1)]
            }
            crate::model::Side::Receive => {
                let red = reduce(&u[var.user - 1], d)?;
                red[(d + var.slot - 1, var.beam - 1)].conj()
            }
        };
    }
    Ok(x)
}

/// JSON array of supports, each an array of integer exponent vectors.
pub fn supports_to_json(supports: &[SupportSet]) -> String {
    let raw: Vec<Vec<Vec<u32>>> = supports
        .iter()
        .map(|s| s.points.iter().map(|p| p.0.clone()).collect())
        .collect();
    serde_json::to_string(&raw).expect("plain integer arrays serialize")
}

pub fn supports_from_json(text: &str) -> Result<Vec<SupportSet>> {
    let raw: Vec<Vec<Vec<u32>>> = serde_json::from_str(text)?;
    let supports: Vec<SupportSet> = raw.iter().map(|s| literal_support(s)).collect::<Result<_>>()?;
    PolynomialSystem::from_supports(supports.clone())?;
    Ok(supports)
}

/// Product of degrees.
pub fn bezout_bound(ps: &PolynomialSystem) -> u128 {
    ps.supports
        .iter()
        .map(|s| u128::from(degree(s)))
        .fold(1u128, u128::saturating_mul)
}
