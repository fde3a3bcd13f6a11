//! Proper/improper classification.
//!
//! A system is proper when every subset of zero-forcing equations touches at
//! least as many free variables as it has equations. By Hall's theorem that
//! holds exactly when the equation/variable incidence graph has a matching
//! saturating every equation, so [`classify`] decides it with Hopcroft-Karp
//! instead of enumerating subsets. [`classify_bruteforce`] does the subset
//! enumeration and exists as an oracle.

use std::collections::{BTreeSet, VecDeque};

use num_rational::Rational64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{count_equations, count_variables, EquationId, SystemSpec, UserSpec};

/// Largest equation count [`classify_bruteforce`] accepts.
pub const BRUTE_FORCE_LIMIT: usize = 22;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ProperStatus {
    Proper,
    Improper,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Method {
    SymmetricTheorem,
    TotalCount,
    Matching,
    BruteForce,
}

/// A set of equations touching fewer variables than its size.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DeficientSet {
    pub equations: Vec<EquationId>,
    pub variable_count: usize,
}

impl DeficientSet {
    /// Recomputes the variable union from scratch and checks deficiency.
    pub fn is_deficient(&self, sys: &SystemSpec) -> bool {
        let union: BTreeSet<_> = self
            .equations
            .iter()
            .flat_map(|e| sys.equation_variables(e))
            .collect();
        union.len() == self.variable_count && self.variable_count < self.equations.len()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ProperVerdict {
    pub status: ProperStatus,
    pub certificate: Option<DeficientSet>,
    pub via: Method,
}

impl ProperVerdict {
    pub fn is_proper(&self) -> bool {
        self.status == ProperStatus::Proper
    }
}

/// Symmetric `(MxN,d)^K` systems are proper iff `M + N - (K+1) d >= 0`.
pub fn classify_symmetric(m: usize, n: usize, d: usize, k: usize) -> Result<ProperVerdict> {
    let user = UserSpec::new(m, n, d);
    if !user.is_valid() {
        return Err(Error::InvalidUser { user: 1, m, n, d });
    }
    if k < 2 {
        return Err(Error::TooFewUsers(k));
    }
    let status = if m + n >= (k + 1) * d {
        ProperStatus::Proper
    } else {
        ProperStatus::Improper
    };
    Ok(ProperVerdict {
        status,
        certificate: None,
        via: Method::SymmetricTheorem,
    })
}

/// [`classify_symmetric`] for a parsed system; rejects asymmetric ones.
pub fn classify_symmetric_system(sys: &SystemSpec) -> Result<ProperVerdict> {
    if !sys.symmetric() {
        return Err(Error::NotSymmetric);
    }
    let u = sys.user(1);
    classify_symmetric(u.tx_antennas, u.rx_antennas, u.dof, sys.num_users())
}

/// Maximum matching in a bipartite graph given by left-side adjacency lists.
#[derive(Debug, Clone)]
pub struct Matching {
    pub left_to_right: Vec<Option<usize>>,
    pub right_to_left: Vec<Option<usize>>,
    pub size: usize,
    /// Adjacency entries inspected while searching.
    pub edge_visits: usize,
}

/// Hopcroft-Karp. Deterministic for a fixed adjacency order.
pub fn hopcroft_karp(adj: &[Vec<usize>], n_right: usize) -> Matching {
    let n_left = adj.len();
    let mut l2r: Vec<Option<usize>> = vec![None; n_left];
    let mut r2l: Vec<Option<usize>> = vec![None; n_right];
    let mut dist = vec![usize::MAX; n_left];
    let mut visits = 0usize;
    let mut size = 0;

    loop {
        // BFS layering from free left vertices.
        let mut queue = VecDeque::new();
        for u in 0..n_left {
            if l2r[u].is_none() {
                dist[u] = 0;
                queue.push_back(u);
            } else {
                dist[u] = usize::MAX;
            }
        }
        let mut found = false;
        while let Some(u) = queue.pop_front() {
            for &v in &adj[u] {
                visits += 1;
                match r2l[v] {
                    None => found = true,
                    Some(w) if dist[w] == usize::MAX => {
                        dist[w] = dist[u] + 1;
                        queue.push_back(w);
                    }
                    _ => {}
                }
            }
        }
        if !found {
            break;
        }

        let mut next = vec![0usize; n_left];
        for u in 0..n_left {
            if l2r[u].is_none()
                && augment(u, adj, &mut l2r, &mut r2l, &mut dist, &mut next, &mut visits)
            {
                size += 1;
            }
        }
    }

    Matching {
        left_to_right: l2r,
        right_to_left: r2l,
        size,
        edge_visits: visits,
    }
}

fn augment(
    u: usize,
    adj: &[Vec<usize>],
    l2r: &mut [Option<usize>],
    r2l: &mut [Option<usize>],
    dist: &mut [usize],
    next: &mut [usize],
    visits: &mut usize,
) -> bool {
    while next[u] < adj[u].len() {
        let v = adj[u][next[u]];
        next[u] += 1;
        *visits += 1;
        let ok = match r2l[v] {
            None => true,
            Some(w) => dist[w] == dist[u] + 1 && augment(w, adj, l2r, r2l, dist, next, visits),
        };
        if ok {
            l2r[u] = Some(v);
            r2l[v] = Some(u);
            return true;
        }
    }
    dist[u] = usize::MAX;
    false
}

/// Equation/variable incidence graph in canonical orders.
pub fn incidence(sys: &SystemSpec) -> (Vec<EquationId>, Vec<Vec<usize>>) {
    let eqs = sys.enumerate_equations();
    let adj = eqs.iter().map(|e| sys.equation_variable_indices(e)).collect();
    (eqs, adj)
}

/// Exact proper test with a Hall-violator certificate when improper.
pub fn classify(sys: &SystemSpec) -> ProperVerdict {
    classify_with_stats(sys).0
}

/// [`classify`] plus the matching it was decided from.
pub fn classify_with_stats(sys: &SystemSpec) -> (ProperVerdict, Matching) {
    let (eqs, adj) = incidence(sys);
    let matching = hopcroft_karp(&adj, count_variables(sys));
    if matching.size == eqs.len() {
        let verdict = ProperVerdict {
            status: ProperStatus::Proper,
            certificate: None,
            via: Method::Matching,
        };
        return (verdict, matching);
    }

    // Alternating reachability from the first unmatched equation. Every
    // variable reached is matched (the matching is maximum), so the reached
    // equations outnumber the reached variables by exactly one.
    let start = matching
        .left_to_right
        .iter()
        .position(Option::is_none)
        .expect("unsaturated matching has a free equation");
    let mut seen_eq = vec![false; eqs.len()];
    let mut seen_var = vec![false; matching.right_to_left.len()];
    let mut queue = VecDeque::from([start]);
    seen_eq[start] = true;
    while let Some(e) = queue.pop_front() {
        for &v in &adj[e] {
            if seen_var[v] {
                continue;
            }
            seen_var[v] = true;
            let w = matching.right_to_left[v].expect("reachable variable is matched");
            if !seen_eq[w] {
                seen_eq[w] = true;
                queue.push_back(w);
            }
        }
    }
    let equations: Vec<EquationId> = eqs
        .iter()
        .zip(&seen_eq)
        .filter_map(|(e, &s)| s.then_some(*e))
        .collect();
    let variable_count = seen_var.iter().filter(|&&s| s).count();
    let verdict = ProperVerdict {
        status: ProperStatus::Improper,
        certificate: Some(DeficientSet {
            equations,
            variable_count,
        }),
        via: Method::Matching,
    };
    (verdict, matching)
}

/// Quick necessary condition: `N_v < N_e` means improper.
pub fn total_count_improper(sys: &SystemSpec) -> bool {
    count_variables(sys) < count_equations(sys)
}

/// Checks every subset of equations directly. Oracle only: exponential.
pub fn classify_bruteforce(sys: &SystemSpec) -> Result<ProperVerdict> {
    let (eqs, adj) = incidence(sys);
    if eqs.len() > BRUTE_FORCE_LIMIT {
        return Err(Error::TooManyEquations {
            limit: BRUTE_FORCE_LIMIT,
            actual: eqs.len(),
        });
    }
    let words = count_variables(sys).div_ceil(64).max(1);
    let masks: Vec<Vec<u64>> = adj
        .iter()
        .map(|vars| {
            let mut m = vec![0u64; words];
            for &v in vars {
                m[v / 64] |= 1 << (v % 64);
            }
            m
        })
        .collect();

    // Depth-first over include/exclude decisions, one union mask per level.
    let n = eqs.len();
    let mut stack_masks = vec![vec![0u64; words]; n + 1];
    let mut chosen = Vec::with_capacity(n);
    let found = search(0, &masks, &mut stack_masks, &mut chosen);

    Ok(match found {
        Some(subset) => {
            let equations: Vec<EquationId> = subset.iter().map(|&i| eqs[i]).collect();
            let union: BTreeSet<usize> = subset.iter().flat_map(|&i| adj[i].clone()).collect();
            ProperVerdict {
                status: ProperStatus::Improper,
                certificate: Some(DeficientSet {
                    equations,
                    variable_count: union.len(),
                }),
                via: Method::BruteForce,
            }
        }
        None => ProperVerdict {
            status: ProperStatus::Proper,
            certificate: None,
            via: Method::BruteForce,
        },
    })
}

fn search(
    idx: usize,
    masks: &[Vec<u64>],
    stack: &mut [Vec<u64>],
    chosen: &mut Vec<usize>,
) -> Option<Vec<usize>> {
    if idx == masks.len() {
        let vars: u32 = stack[idx].iter().map(|w| w.count_ones()).sum();
        return ((vars as usize) < chosen.len()).then(|| chosen.clone());
    }
    // exclude
    let (head, tail) = stack.split_at_mut(idx + 1);
    tail[0].copy_from_slice(&head[idx]);
    if let Some(s) = search(idx + 1, masks, stack, chosen) {
        return Some(s);
    }
    // include
    let (head, tail) = stack.split_at_mut(idx + 1);
    for (dst, (a, b)) in tail[0].iter_mut().zip(head[idx].iter().zip(&masks[idx])) {
        *dst = a | b;
    }
    chosen.push(idx);
    let r = search(idx + 1, masks, stack, chosen);
    chosen.pop();
    r
}

/// Normalized DoF bound for a proper symmetric system.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct DofBound {
    /// `1 + max(M,N)/min(M,N) - d/min(M,N)`
    pub bound: Rational64,
    /// `dK/min(M,N)`
    pub normalized_dof: Rational64,
    pub satisfied: bool,
}

pub fn normalized_dof_bound(m: usize, n: usize, d: usize, k: usize) -> Result<DofBound> {
    if !classify_symmetric(m, n, d, k)?.is_proper() {
        return Err(Error::Improper);
    }
    let lo = m.min(n) as i64;
    let hi = m.max(n) as i64;
    let bound = Rational64::from_integer(1) + Rational64::new(hi, lo) - Rational64::new(d as i64, lo);
    let normalized_dof = Rational64::new((d * k) as i64, lo);
    Ok(DofBound {
        bound,
        normalized_dof,
        satisfied: normalized_dof <= bound,
    })
}

/// Antenna splits `(M', N')` with the same total that still support `d`.
/// Every member has the same proper status.
pub fn antenna_transfer_group(m: usize, n: usize, d: usize, _k: usize) -> Vec<(usize, usize)> {
    let total = m + n;
    (d..=total.saturating_sub(d))
        .map(|mp| (mp, total - mp))
        .filter(|&(mp, np)| d <= mp.min(np))
        .collect()
}
