//! Newton polytopes, Minkowski sums, exact small-dimension volumes and the
//! mixed volume.
//!
//! [`mixed_volume`] enumerates the mixed cells of a random regular lifting:
//! one edge per support, chosen depth-first, with partial choices pruned by a
//! margin LP. Every accepted cell is re-checked in exact rational arithmetic
//! before its `|det|` is counted.

use std::time::Instant;

use num_bigint::BigInt;
use num_rational::{BigRational, Rational64};
use num_traits::{Signed, Zero};
use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lp::{max_margin, Margin};
use crate::polysys::{ExponentVector, PolynomialSystem, SupportSet};
use crate::proper::hopcroft_karp;

/// LP margins within this band of zero are treated as lifting ties.
pub const TIE_TOL: f64 = 1e-9;
/// Fresh liftings drawn after a tie before giving up.
pub const MAX_LIFTING_RETRIES: usize = 5;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Polytope2D {
    /// Counterclockwise, strictly convex.
    pub vertices: Vec<[i64; 2]>,
    /// Set when the hull is a point or a segment.
    pub degenerate: bool,
}

fn cross(o: [i64; 2], a: [i64; 2], b: [i64; 2]) -> i64 {
    (a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0])
}

/// Andrew's monotone chain, collinear points dropped.
pub fn convex_hull_2d(points: &[[i64; 2]]) -> Polytope2D {
    let mut pts = points.to_vec();
    pts.sort_unstable();
    pts.dedup();
    if pts.len() <= 2 {
        return Polytope2D {
            vertices: pts,
            degenerate: true,
        };
    }
    let mut lower: Vec<[i64; 2]> = Vec::new();
    for &p in &pts {
        while lower.len() >= 2 && cross(lower[lower.len() - 2], lower[lower.len() - 1], p) <= 0 {
            lower.pop();
        }
        lower.push(p);
    }
    let mut upper: Vec<[i64; 2]> = Vec::new();
    for &p in pts.iter().rev() {
        while upper.len() >= 2 && cross(upper[upper.len() - 2], upper[upper.len() - 1], p) <= 0 {
            upper.pop();
        }
        upper.push(p);
    }
    lower.pop();
    upper.pop();
    lower.extend(upper);
    let degenerate = lower.len() < 3;
    Polytope2D {
        vertices: lower,
        degenerate,
    }
}

/// Shoelace area.
pub fn area_2d(p: &Polytope2D) -> Rational64 {
    if p.degenerate {
        return Rational64::zero();
    }
    let v = &p.vertices;
    let twice: i64 = (0..v.len())
        .map(|i| {
            let (a, b) = (v[i], v[(i + 1) % v.len()]);
            a[0] * b[1] - a[1] * b[0]
        })
        .sum();
    Rational64::new(twice.abs(), 2)
}

fn to_i64(p: &ExponentVector) -> Vec<i64> {
    p.0.iter().map(|&x| i64::from(x)).collect()
}

fn planar(s: &SupportSet) -> Result<Vec<[i64; 2]>> {
    if s.dim() != 2 {
        return Err(Error::Dimension(format!("expected planar support, got dimension {}", s.dim())));
    }
    Ok(s.points().iter().map(|p| [i64::from(p.0[0]), i64::from(p.0[1])]).collect())
}

/// Hull of a planar support set.
pub fn newton_polygon(s: &SupportSet) -> Result<Polytope2D> {
    Ok(convex_hull_2d(&planar(s)?))
}

/// `{a + b}` with duplicates collapsed.
pub fn minkowski_sum(a: &SupportSet, b: &SupportSet) -> Result<SupportSet> {
    if a.dim() != b.dim() {
        return Err(Error::Dimension(format!(
            "Minkowski sum of dimensions {} and {}",
            a.dim(),
            b.dim()
        )));
    }
    let pts = a
        .points()
        .iter()
        .flat_map(|p| b.points().iter().map(move |q| p.add(q)))
        .collect();
    SupportSet::new(pts)
}

fn sub3(a: &[i64], b: &[i64]) -> [i64; 3] {
    [a[0] - b[0], a[1] - b[1], a[2] - b[2]]
}

fn cross3(a: [i64; 3], b: [i64; 3]) -> [i64; 3] {
    [
        a[1] * b[2] - a[2] * b[1],
        a[2] * b[0] - a[0] * b[2],
        a[0] * b[1] - a[1] * b[0],
    ]
}

fn dot3(a: [i64; 3], b: [i64; 3]) -> i64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

/// Exact volume of the convex hull of a 3-dimensional lattice point set.
/// Facets are found by brute force over point triples; each facet polygon is
/// fan-triangulated against a fixed hull vertex.
pub fn volume_3d(points: &[Vec<i64>]) -> Rational64 {
    let mut pts = points.to_vec();
    pts.sort();
    pts.dedup();
    let n = pts.len();
    let mut planes: Vec<([i64; 3], i64)> = Vec::new();
    for i in 0..n {
        for j in i + 1..n {
            for k in j + 1..n {
                let normal = cross3(sub3(&pts[j], &pts[i]), sub3(&pts[k], &pts[i]));
                if normal == [0, 0, 0] {
                    continue;
                }
                let g = gcd(gcd(normal[0].abs(), normal[1].abs()), normal[2].abs()).max(1);
                let mut normal = [normal[0] / g, normal[1] / g, normal[2] / g];
                let mut off = dot3(normal, [pts[i][0], pts[i][1], pts[i][2]]);
                let side = |p: &Vec<i64>| dot3(normal, [p[0], p[1], p[2]]) - off;
                let (mut pos, mut neg) = (false, false);
                for p in &pts {
                    let s = side(p);
                    pos |= s > 0;
                    neg |= s < 0;
                }
                if pos && neg {
                    continue;
                }
                if !pos && !neg {
                    return Rational64::zero();
                }
                if pos {
                    normal = [-normal[0], -normal[1], -normal[2]];
                    off = -off;
                }
                if !planes.contains(&(normal, off)) {
                    planes.push((normal, off));
                }
            }
        }
    }
    let apex = &pts[0];
    let mut six_vol = 0i64;
    for (normal, off) in planes {
        if dot3(normal, [apex[0], apex[1], apex[2]]) == off {
            continue;
        }
        let face: Vec<&Vec<i64>> = pts
            .iter()
            .filter(|p| dot3(normal, [p[0], p[1], p[2]]) == off)
            .collect();
        // project away the dominant normal coordinate and order the face
        let drop = (0..3).max_by_key(|&c| normal[c].abs()).unwrap();
        let keep: Vec<usize> = (0..3).filter(|&c| c != drop).collect();
        let proj: Vec<[i64; 2]> = face.iter().map(|p| [p[keep[0]], p[keep[1]]]).collect();
        let hull = convex_hull_2d(&proj);
        let lift = |q: [i64; 2]| face[proj.iter().position(|&x| x == q).unwrap()];
        let v: Vec<&Vec<i64>> = hull.vertices.iter().map(|&q| lift(q)).collect();
        for t in 1..v.len().saturating_sub(1) {
            let a = sub3(v[0], apex);
            let b = sub3(v[t], apex);
            let c = sub3(v[t + 1], apex);
            six_vol += dot3(a, cross3(b, c)).abs();
        }
    }
    Rational64::new(six_vol, 6)
}

fn gcd(a: i64, b: i64) -> i64 {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

fn hull_volume(s: &SupportSet) -> Result<Rational64> {
    let pts: Vec<Vec<i64>> = s.points().iter().map(to_i64).collect();
    match s.dim() {
        1 => {
            let lo = pts.iter().map(|p| p[0]).min().unwrap();
            let hi = pts.iter().map(|p| p[0]).max().unwrap();
            Ok(Rational64::from_integer(hi - lo))
        }
        2 => newton_polygon(s).map(|p| area_2d(&p)),
        3 => Ok(volume_3d(&pts)),
        n => Err(Error::GuardExceeded {
            what: "exact hull volume dimension",
            limit: 3,
            actual: n,
        }),
    }
}

fn check_square(supports: &[SupportSet]) -> Result<usize> {
    let n = supports.len();
    if n == 0 {
        return Err(Error::Dimension("no supports".into()));
    }
    if let Some(bad) = supports.iter().find(|s| s.dim() != n) {
        return Err(Error::Dimension(format!(
            "{} supports in dimension {}",
            n,
            bad.dim()
        )));
    }
    Ok(n)
}

/// Inclusion-exclusion over all nonempty subsets of supports,
/// `Σ_k (-1)^(n-k) Σ_{|I|=k} Vol(Σ_{i∈I} P_i)`, for `n <= 3`.
pub fn mixed_volume_ie(supports: &[SupportSet]) -> Result<u64> {
    let n = check_square(supports)?;
    if n > 3 {
        return Err(Error::GuardExceeded {
            what: "inclusion-exclusion dimension",
            limit: 3,
            actual: n,
        });
    }
    let mut total = Rational64::zero();
    for mask in 1u32..(1 << n) {
        let members: Vec<&SupportSet> = (0..n).filter(|i| mask >> i & 1 == 1).map(|i| &supports[i]).collect();
        let mut sum = members[0].clone();
        for s in &members[1..] {
            sum = minkowski_sum(&sum, s)?;
        }
        let vol = hull_volume(&sum)?;
        if (n - members.len()) % 2 == 0 {
            total += vol;
        } else {
            total -= vol;
        }
    }
    debug_assert!(total.is_integer());
    Ok(total.to_integer().max(0) as u64)
}

/// Per-support lift values, one per point in support order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Lifting {
    pub seed: u64,
    pub values: Vec<Vec<f64>>,
}

impl Lifting {
    pub fn random(supports: &[SupportSet], seed: u64) -> Self {
        let mut rng = ChaCha20Rng::seed_from_u64(seed);
        let values = supports
            .iter()
            .map(|s| (0..s.len()).map(|_| rng.random::<f64>()).collect())
            .collect();
        Self { seed, values }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MixedCell {
    /// One edge per support, in the original support order.
    pub edges: Vec<(ExponentVector, ExponentVector)>,
    pub volume: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MixedVolumeResult {
    pub mixed_volume: u64,
    pub cells: Vec<MixedCell>,
    /// Seed of the lifting that produced the cells.
    pub lifting_seed: u64,
    pub retries: usize,
    /// LP solves performed in the final attempt.
    pub lp_calls: usize,
    pub runtime_ms: u128,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct MixedVolumeOptions {
    pub seed: u64,
    /// Return 0 straight away when some group of supports spans fewer
    /// coordinates than its size.
    pub structural_shortcut: bool,
}

impl Default for MixedVolumeOptions {
    fn default() -> Self {
        Self {
            seed: 0,
            structural_shortcut: true,
        }
    }
}

/// Whether a transversal of active coordinates exists (a necessary
/// condition for a nonzero mixed volume).
pub fn coordinates_transversal(supports: &[SupportSet]) -> bool {
    let n = supports.first().map_or(0, SupportSet::dim);
    let adj: Vec<Vec<usize>> = supports.iter().map(SupportSet::active_coordinates).collect();
    hopcroft_karp(&adj, n).size == supports.len()
}

struct Tie;

struct Search<'a> {
    n: usize,
    pts: Vec<Vec<Vec<i64>>>,
    lifts: &'a [Vec<f64>],
    order: Vec<usize>,
    /// Candidate edges per support (point index pairs).
    edges: Vec<Vec<(usize, usize)>>,
    /// `compat[i][e]` lists, for each later depth, allowed edge indices.
    compat: Vec<Vec<Vec<Vec<bool>>>>,
    lp_calls: usize,
    cells: Vec<(Vec<(usize, usize)>, u64)>,
}

impl Search<'_> {
    fn constraints(&self, choice: &[(usize, (usize, usize))]) -> (Vec<Vec<f64>>, Vec<f64>, Vec<Vec<f64>>, Vec<f64>) {
        let (mut eq, mut eqb, mut ineq, mut ineqh) = (Vec::new(), Vec::new(), Vec::new(), Vec::new());
        for &(s, (a, b)) in choice {
            let pa = &self.pts[s][a];
            let pb = &self.pts[s][b];
            let wa = self.lifts[s][a];
            let wb = self.lifts[s][b];
            eq.push(pb.iter().zip(pa).map(|(x, y)| (x - y) as f64).collect());
            eqb.push(wa - wb);
            for (p, pp) in self.pts[s].iter().enumerate() {
                if p == a || p == b {
                    continue;
                }
                ineq.push(pp.iter().zip(pa).map(|(x, y)| (x - y) as f64).collect());
                ineqh.push(wa - self.lifts[s][p]);
            }
        }
        (eq, eqb, ineq, ineqh)
    }

    /// `Ok(true)` if the partial choice is a face of the lower hull.
    fn feasible(&mut self, choice: &[(usize, (usize, usize))]) -> std::result::Result<bool, Tie> {
        self.lp_calls += 1;
        let (eq, eqb, ineq, ineqh) = self.constraints(choice);
        match max_margin(&eq, &eqb, &ineq, &ineqh, self.n, 1.0, TIE_TOL) {
            Margin::Dependent => Ok(false),
            Margin::Value(t) if t > TIE_TOL => Ok(true),
            Margin::Value(t) if t < -TIE_TOL => Ok(false),
            Margin::Value(_) => Err(Tie),
        }
    }

    fn dfs(&mut self, depth: usize, chosen: &mut Vec<usize>) -> std::result::Result<(), Tie> {
        if depth == self.n {
            let choice: Vec<(usize, (usize, usize))> = chosen
                .iter()
                .enumerate()
                .map(|(d, &e)| (self.order[d], self.edges[d][e]))
                .collect();
            let vol = self.verify_exact(&choice)?;
            let mut edges = vec![(0, 0); self.n];
            for &(s, e) in &choice {
                edges[s] = e;
            }
            self.cells.push((edges, vol));
            return Ok(());
        }
        for e in 0..self.edges[depth].len() {
            if !(0..depth).all(|d| self.compat[d][chosen[d]][depth][e]) {
                continue;
            }
            chosen.push(e);
            let choice: Vec<(usize, (usize, usize))> = chosen
                .iter()
                .enumerate()
                .map(|(d, &e)| (self.order[d], self.edges[d][e]))
                .collect();
            // depth 0 and 1 were already decided by the candidate tables
            let ok = depth < 2 || self.feasible(&choice)?;
            if ok {
                self.dfs(depth + 1, chosen)?;
            }
            chosen.pop();
        }
        Ok(())
    }

    /// Exact check of a full cell; returns `|det|` of the edge matrix.
    fn verify_exact(&self, choice: &[(usize, (usize, usize))]) -> std::result::Result<u64, Tie> {
        let n = self.n;
        let exact = |w: f64| BigRational::from_float(w).expect("lifts are finite");
        let mut m: Vec<Vec<BigRational>> = choice
            .iter()
            .map(|&(s, (a, b))| {
                let mut row: Vec<BigRational> = self.pts[s][b]
                    .iter()
                    .zip(&self.pts[s][a])
                    .map(|(x, y)| BigRational::from_integer(BigInt::from(x - y)))
                    .collect();
                row.push(exact(self.lifts[s][a]) - exact(self.lifts[s][b]));
                row
            })
            .collect();
        let mut det = BigRational::from_integer(BigInt::from(1));
        for c in 0..n {
            let Some(p) = (c..n).find(|&r| !m[r][c].is_zero()) else {
                return Err(Tie);
            };
            if p != c {
                m.swap(p, c);
                det = -det;
            }
            let pivot = m[c][c].clone();
            det *= &pivot;
            for j in c..=n {
                m[c][j] = &m[c][j] / &pivot;
            }
            for r in 0..n {
                if r != c && !m[r][c].is_zero() {
                    let f = m[r][c].clone();
                    for j in c..=n {
                        let sub = &f * &m[c][j];
                        m[r][j] -= sub;
                    }
                }
            }
        }
        let alpha: Vec<BigRational> = (0..n).map(|i| m[i][n].clone()).collect();
        for &(s, (a, b)) in choice {
            let base = exact(self.lifts[s][a]);
            for (p, pp) in self.pts[s].iter().enumerate() {
                if p == a || p == b {
                    continue;
                }
                let mut v = exact(self.lifts[s][p]) - &base;
                for (k, al) in alpha.iter().enumerate() {
                    let diff = pp[k] - self.pts[s][a][k];
                    if diff != 0 {
                        v += al * BigRational::from_integer(BigInt::from(diff));
                    }
                }
                if !v.is_positive() {
                    return Err(Tie);
                }
            }
        }
        let det = det.abs();
        debug_assert!(det.is_integer());
        Ok(det
            .to_integer()
            .try_into()
            .expect("cell volume fits in u64"))
    }
}

fn search_order(supports: &[SupportSet], candidates: &[Vec<(usize, usize)>]) -> Vec<usize> {
    let n = supports.len();
    let active: Vec<Vec<usize>> = supports.iter().map(SupportSet::active_coordinates).collect();
    let mut covered = vec![false; n];
    let mut used = vec![false; n];
    let mut order = Vec::with_capacity(n);
    for _ in 0..n {
        let next = (0..n)
            .filter(|&i| !used[i])
            .max_by_key(|&i| {
                let overlap = active[i].iter().filter(|&&c| covered[c]).count() as i64;
                let fresh = active[i].len() as i64 - overlap;
                (overlap, -fresh, -(candidates[i].len() as i64), -(i as i64))
            })
            .unwrap();
        used[next] = true;
        for &c in &active[next] {
            covered[c] = true;
        }
        order.push(next);
    }
    order
}

fn attempt(supports: &[SupportSet], lifting: &Lifting) -> std::result::Result<(Vec<MixedCell>, usize), Tie> {
    let n = supports.len();
    let pts: Vec<Vec<Vec<i64>>> = supports
        .iter()
        .map(|s| s.points().iter().map(to_i64).collect())
        .collect();
    let mut search = Search {
        n,
        pts,
        lifts: &lifting.values,
        order: Vec::new(),
        edges: Vec::new(),
        compat: Vec::new(),
        lp_calls: 0,
        cells: Vec::new(),
    };
    // lower edges of each lifted support on its own
    let mut candidates = Vec::with_capacity(n);
    for s in 0..n {
        let m = supports[s].len();
        let mut list = Vec::new();
        for a in 0..m {
            for b in a + 1..m {
                if search.feasible(&[(s, (a, b))])? {
                    list.push((a, b));
                }
            }
        }
        candidates.push(list);
    }
    search.order = search_order(supports, &candidates);
    search.edges = search.order.iter().map(|&s| candidates[s].clone()).collect();
    let mut compat = Vec::with_capacity(n);
    for d in 0..n {
        let mut per_edge = Vec::with_capacity(search.edges[d].len());
        for e in 0..search.edges[d].len() {
            let mut later = vec![Vec::new(); n];
            for (d2, slot) in later.iter_mut().enumerate().skip(d + 1) {
                let mut row = Vec::with_capacity(search.edges[d2].len());
                for f in 0..search.edges[d2].len() {
                    let pair = [
                        (search.order[d], search.edges[d][e]),
                        (search.order[d2], search.edges[d2][f]),
                    ];
                    row.push(search.feasible(&pair)?);
                }
                *slot = row;
            }
            per_edge.push(later);
        }
        compat.push(per_edge);
    }
    search.compat = compat;
    search.dfs(0, &mut Vec::with_capacity(n))?;
    let cells = search
        .cells
        .iter()
        .map(|(edges, vol)| MixedCell {
            edges: edges
                .iter()
                .enumerate()
                .map(|(s, &(a, b))| (supports[s].points()[a].clone(), supports[s].points()[b].clone()))
                .collect(),
            volume: *vol,
        })
        .collect();
    Ok((cells, search.lp_calls))
}

/// Mixed volume by mixed-cell enumeration over a random regular lifting.
pub fn mixed_volume(supports: &[SupportSet], seed: u64) -> Result<MixedVolumeResult> {
    mixed_volume_with(supports, MixedVolumeOptions { seed, ..Default::default() })
}

pub fn mixed_volume_with(supports: &[SupportSet], opts: MixedVolumeOptions) -> Result<MixedVolumeResult> {
    let start = Instant::now();
    check_square(supports)?;
    let zero = |seed| MixedVolumeResult {
        mixed_volume: 0,
        cells: Vec::new(),
        lifting_seed: seed,
        retries: 0,
        lp_calls: 0,
        runtime_ms: start.elapsed().as_millis(),
    };
    if supports.iter().any(|s| s.len() < 2) {
        return Ok(zero(opts.seed));
    }
    if opts.structural_shortcut && !coordinates_transversal(supports) {
        return Ok(zero(opts.seed));
    }
    let mut seeder = ChaCha20Rng::seed_from_u64(opts.seed);
    let mut seed = opts.seed;
    for retry in 0..=MAX_LIFTING_RETRIES {
        let lifting = Lifting::random(supports, seed);
        if let Ok((cells, lp_calls)) = attempt(supports, &lifting) {
            return Ok(MixedVolumeResult {
                mixed_volume: cells.iter().map(|c| c.volume).sum(),
                cells,
                lifting_seed: seed,
                retries: retry,
                lp_calls,
                runtime_ms: start.elapsed().as_millis(),
            });
        }
        seed = seeder.random();
    }
    Err(Error::NonRegularLifting(MAX_LIFTING_RETRIES + 1))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum SubsetStrategy {
    /// First `N_v` equations in canonical order.
    CanonicalPrefix,
    /// A uniformly random `N_v`-subset, kept in canonical order.
    Random(u64),
}

/// Reduces an overdetermined system to as many equations as variables.
pub fn select_square_subsystem(ps: &PolynomialSystem, strategy: SubsetStrategy) -> Result<PolynomialSystem> {
    let (ne, nv) = (ps.num_equations(), ps.num_variables());
    if ne < nv {
        return Err(Error::Underdetermined {
            equations: ne,
            variables: nv,
        });
    }
    let rows: Vec<usize> = match strategy {
        SubsetStrategy::CanonicalPrefix => (0..nv).collect(),
        SubsetStrategy::Random(seed) => {
            let mut rng = ChaCha20Rng::seed_from_u64(seed);
            let mut rows = sample(&mut rng, ne, nv).into_vec();
            rows.sort_unstable();
            rows
        }
    };
    Ok(ps.subsystem(&rows))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::polysys::{build_supports, literal_support};
    use crate::model::parse_system;

    fn example5() -> (SupportSet, SupportSet) {
        (
            literal_support(&[vec![1, 2], vec![2, 0], vec![0, 2], vec![0, 0]]).unwrap(),
            literal_support(&[vec![3, 1], vec![0, 4], vec![1, 1]]).unwrap(),
        )
    }

    #[test]
    fn hulls_and_areas() {
        let (a1, a2) = example5();
        let p1 = newton_polygon(&a1).unwrap();
        let p2 = newton_polygon(&a2).unwrap();
        assert_eq!(p1.vertices.len(), 4);
        assert_eq!(p2.vertices.len(), 3);
        let sum = minkowski_sum(&a1, &a2).unwrap();
        assert_eq!(sum.len(), 11);
        assert_eq!(area_2d(&p1), Rational64::from_integer(3));
        assert_eq!(area_2d(&p2), Rational64::from_integer(3));
        assert_eq!(area_2d(&newton_polygon(&sum).unwrap()), Rational64::from_integer(15));
        assert!(convex_hull_2d(&[[1, 1]]).degenerate);
        assert!(convex_hull_2d(&[[0, 0], [1, 1], [2, 2]]).degenerate);
    }

    #[test]
    fn minkowski_identities() {
        let (a1, _) = example5();
        let zero = literal_support(&[vec![0, 0]]).unwrap();
        assert_eq!(minkowski_sum(&a1, &zero).unwrap(), a1);
        let e1 = literal_support(&[vec![0, 0], vec![1, 0]]).unwrap();
        let e2 = literal_support(&[vec![0, 0], vec![0, 1]]).unwrap();
        let sq = minkowski_sum(&e1, &e2).unwrap();
        assert_eq!(sq.len(), 4);
        let other = literal_support(&[vec![0, 0, 0]]).unwrap();
        assert!(minkowski_sum(&a1, &other).is_err());
    }

    #[test]
    fn unit_cube_volume() {
        let mut pts = Vec::new();
        for x in 0..2 {
            for y in 0..2 {
                for z in 0..2 {
                    pts.push(vec![x, y, z]);
                }
            }
        }
        assert_eq!(volume_3d(&pts), Rational64::from_integer(1));
        let simplex = vec![vec![0, 0, 0], vec![1, 0, 0], vec![0, 1, 0], vec![0, 0, 1]];
        assert_eq!(volume_3d(&simplex), Rational64::new(1, 6));
        let flat = vec![vec![0, 0, 0], vec![1, 0, 0], vec![0, 1, 0]];
        assert_eq!(volume_3d(&flat), Rational64::zero());
    }

    #[test]
    fn example5_mixed_volume() {
        let (a1, a2) = example5();
        assert_eq!(mixed_volume_ie(&[a1.clone(), a2.clone()]).unwrap(), 9);
        let r = mixed_volume(&[a1, a2], 7).unwrap();
        assert_eq!(r.mixed_volume, 9);
    }

    #[test]
    fn facet_example_is_zero() {
        let s = [
            literal_support(&[vec![2, 0, 0], vec![0, 2, 0], vec![0, 0, 1], vec![0, 0, 0]]).unwrap(),
            literal_support(&[vec![2, 0, 0], vec![0, 0, 0]]).unwrap(),
            literal_support(&[vec![1, 0, 0], vec![0, 0, 0]]).unwrap(),
        ];
        assert_eq!(mixed_volume_ie(&s).unwrap(), 0);
        assert_eq!(mixed_volume(&s, 1).unwrap().mixed_volume, 0);
        let opts = MixedVolumeOptions {
            seed: 1,
            structural_shortcut: false,
        };
        assert_eq!(mixed_volume_with(&s, opts).unwrap().mixed_volume, 0);
    }

    #[test]
    fn dense_bezout() {
        let dense = |deg: u32| {
            let mut pts = Vec::new();
            for a in 0..=deg {
                for b in 0..=deg - a {
                    pts.push(vec![a, b]);
                }
            }
            literal_support(&pts).unwrap()
        };
        let s = [dense(3), dense(4)];
        assert_eq!(mixed_volume(&s, 3).unwrap().mixed_volume, 12);
        assert_eq!(mixed_volume_ie(&s).unwrap(), 12);
    }

    #[test]
    fn alignment_systems() {
        for (spec, mv) in [("(2x3,1)^4", 9), ("(2x3,1)^2(3x2,1)^2", 4), ("(2x2,1)^3(3x5,1)", 0)] {
            let ps = build_supports(&parse_system(spec).unwrap());
            let r = mixed_volume(&ps.supports, 0).unwrap();
            assert_eq!(r.mixed_volume, mv, "{spec}");
        }
    }

    #[test]
    fn square_selection() {
        let ps = build_supports(&parse_system("(5x5,3)(5x5,2)^3").unwrap());
        let sq = select_square_subsystem(&ps, SubsetStrategy::CanonicalPrefix).unwrap();
        assert_eq!(sq.num_equations(), 48);
        assert_eq!(sq.supports[0], ps.supports[0]);
        let r = select_square_subsystem(&ps, SubsetStrategy::Random(4)).unwrap();
        assert_eq!(r.num_equations(), 48);
        let ps = build_supports(&parse_system("(2x3,1)^4").unwrap());
        assert_eq!(select_square_subsystem(&ps, SubsetStrategy::CanonicalPrefix).unwrap(), ps);
        let ps = build_supports(&parse_system("(3x3,1)^2").unwrap());
        assert!(matches!(
            select_square_subsystem(&ps, SubsetStrategy::CanonicalPrefix),
            Err(Error::Underdetermined { .. })
        ));
    }
}
