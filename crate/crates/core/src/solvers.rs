//! Closed-form alignment constructions for a few small networks, and the
//! check of the zero-forcing and rank conditions.

use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{
    eig_general_small, eig_hermitian, inverse, null_space, orthogonal_complement, random_gaussian_matrix, random_orthonormal,
    smallest_singular_value, solve_linear, ChannelSet, ComplexMatrix, C64,
};
use crate::model::{EquationId, SystemSpec};

/// Smallest singular value below which a filter counts as rank deficient.
pub const RANK_FLOOR: f64 = 1e-10;

/// Systems with a constructive solver, in dispatch order.
pub const SUPPORTED_SHAPES: [&str; 4] = [
    "(2x2,1)^3",
    "(2x3,1)^2(3x2,1)^2",
    "(2x4,1)(2x3,1)^3",
    "(2x3,1)^4",
];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Beamformers {
    /// `M_k x d_k` transmit filters.
    pub v: Vec<ComplexMatrix>,
    /// `N_k x d_k` receive filters.
    pub u: Vec<ComplexMatrix>,
}

impl Beamformers {
    /// Normalizes every column and checks full column rank.
    pub fn new(v: Vec<ComplexMatrix>, u: Vec<ComplexMatrix>) -> Result<Self> {
        if v.len() != u.len() {
            return Err(Error::Dimension(format!("{} transmit vs {} receive filters", v.len(), u.len())));
        }
        let v: Vec<ComplexMatrix> = v.iter().map(ComplexMatrix::canonicalized).collect();
        let u: Vec<ComplexMatrix> = u.iter().map(ComplexMatrix::canonicalized).collect();
        for m in v.iter().chain(&u) {
            if !m.is_finite() || smallest_singular_value(m) <= RANK_FLOOR {
                return Err(Error::Singular);
            }
        }
        Ok(Self { v, u })
    }

    /// Random orthonormal filters (a negative control for verification).
    pub fn random(sys: &SystemSpec, seed: u64) -> Self {
        let mut rng = ChaCha20Rng::seed_from_u64(seed);
        let v = sys
            .users()
            .iter()
            .map(|u| random_orthonormal(u.tx_antennas, u.dof, &mut rng))
            .collect();
        let u = sys
            .users()
            .iter()
            .map(|u| random_orthonormal(u.rx_antennas, u.dof, &mut rng))
            .collect();
        Self::new(v, u).expect("orthonormal columns have full rank")
    }

    pub fn num_users(&self) -> usize {
        self.v.len()
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let raw: Beamformers = serde_json::from_str(text)?;
        Self::new(raw.v, raw.u)
    }

    /// Whether `other` spans the same column spaces up to per-column scaling.
    pub fn same_solution(&self, other: &Beamformers, tol: f64) -> bool {
        let close = |a: &ComplexMatrix, b: &ComplexMatrix| {
            a.shape() == b.shape() && (0..a.cols()).all(|j| {
                let inner: C64 = a
                    .column_entries(j)
                    .iter()
                    .zip(b.column_entries(j))
                    .map(|(x, y)| x.conj() * y)
                    .sum();
                (1.0 - inner.norm()).abs() <= tol
            })
        };
        self.v.iter().zip(&other.v).all(|(a, b)| close(a, b))
            && self.u.iter().zip(&other.u).all(|(a, b)| close(a, b))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AlignmentCheck {
    pub max_cross_residual: f64,
    pub min_desired_gain: f64,
    pub residuals: Vec<(EquationId, f64)>,
}

impl AlignmentCheck {
    pub fn passes(&self, residual_tol: f64, gain_floor: f64) -> bool {
        self.max_cross_residual <= residual_tol && self.min_desired_gain >= gain_floor
    }
}

/// Largest `|u† H v|` over cross links and smallest singular value of each
/// direct-link product `U_k† H_kk V_k`.
pub fn verify_alignment(sys: &SystemSpec, ch: &ChannelSet, bf: &Beamformers) -> Result<AlignmentCheck> {
    ch.check_shapes(sys)?;
    let k = sys.num_users();
    if bf.num_users() != k {
        return Err(Error::Dimension(format!("{} filters for {} users", bf.num_users(), k)));
    }
    for (i, user) in sys.users().iter().enumerate() {
        if bf.v[i].shape() != (user.tx_antennas, user.dof) || bf.u[i].shape() != (user.rx_antennas, user.dof) {
            return Err(Error::Dimension(format!("filter shapes of user {}", i + 1)));
        }
    }
    let mut residuals = Vec::new();
    let mut max_cross = 0.0f64;
    for eq in sys.enumerate_equations() {
        let u = bf.u[eq.rx_user - 1].column(eq.rx_beam - 1);
        let v = bf.v[eq.tx_user - 1].column(eq.tx_beam - 1);
        let r = u.adjoint_mul(&(ch.h(eq.rx_user, eq.tx_user) * &v))[(0, 0)].norm();
        max_cross = max_cross.max(r);
        residuals.push((eq, r));
    }
    let min_gain = (1..=k)
        .map(|i| smallest_singular_value(&bf.u[i - 1].adjoint_mul(&(ch.h(i, i) * &bf.v[i - 1]))))
        .fold(f64::INFINITY, f64::min);
    Ok(AlignmentCheck {
        max_cross_residual: max_cross,
        min_desired_gain: min_gain,
        residuals,
    })
}

fn shape_of(ch: &ChannelSet) -> Vec<(usize, usize)> {
    let k = ch.num_users();
    (1..=k)
        .map(|i| (ch.h(1, i).cols(), ch.h(i, 1).rows()))
        .collect()
}

fn require_shape(ch: &ChannelSet, expected: &[(usize, usize)], name: &str) -> Result<()> {
    if shape_of(ch) != expected {
        return Err(Error::UnsupportedShape(format!(
            "this construction handles {name}; supported: {}",
            SUPPORTED_SHAPES.join(", ")
        )));
    }
    Ok(())
}

fn unit(entries: &[C64]) -> ComplexMatrix {
    let n: f64 = entries.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    ComplexMatrix::column_vector(&entries.iter().map(|z| z / n).collect::<Vec<_>>())
}

/// Unit vector orthogonal to `w` in C^2.
fn perp2(w: &ComplexMatrix) -> ComplexMatrix {
    unit(&[-w[(1, 0)].conj(), w[(0, 0)].conj()])
}

/// Both eigen branches of a 2x2 product, largest magnitude first.
fn branches(a: &ComplexMatrix) -> Result<Vec<ComplexMatrix>> {
    let eig = eig_general_small(a)?;
    if eig.defective || eig.vectors.len() < 2 {
        return Err(Error::Singular);
    }
    Ok(eig.vectors.iter().map(|v| unit(v)).collect())
}

/// 3-user network of 2x2 links given as `h(rx, tx)` with 0-based indices.
/// Returns `(v, u)` for every eigen branch.
fn three_user_core(h: &dyn Fn(usize, usize) -> ComplexMatrix) -> Result<Vec<(Vec<ComplexMatrix>, Vec<ComplexMatrix>)>> {
    let inv = |rx, tx| inverse(&h(rx, tx));
    // (H31)^-1 H32 (H12)^-1 H13 (H23)^-1 H21
    let prod = &(&(&(&(&inv(2, 0)? * &h(2, 1)) * &inv(0, 1)?) * &h(0, 2)) * &inv(1, 2)?) * &h(1, 0);
    let mut out = Vec::new();
    for v1 in branches(&prod)? {
        let v2 = solve_linear(&h(2, 1), &(&h(2, 0) * &v1))?;
        let v3 = solve_linear(&h(1, 2), &(&h(1, 0) * &v1))?;
        let u1 = perp2(&(&h(0, 1) * &v2));
        let u2 = perp2(&(&h(1, 0) * &v1));
        let u3 = perp2(&(&h(2, 0) * &v1));
        out.push((vec![v1, v2, v3], vec![u1, u2, u3]));
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Branch {
    /// Eigenvector of the largest-magnitude eigenvalue at every eigen step.
    Dominant,
    /// Branch index per eigen step (0 = largest magnitude).
    Index(usize, usize),
}

/// `(2x2,1)^3`: the classic eigenvector construction.
pub fn solve_3user_square(ch: &ChannelSet) -> Result<Beamformers> {
    solve_3user_square_all(ch)?
        .into_iter()
        .next()
        .ok_or(Error::Singular)
}

/// Every eigen branch of [`solve_3user_square`].
pub fn solve_3user_square_all(ch: &ChannelSet) -> Result<Vec<Beamformers>> {
    require_shape(ch, &[(2, 2); 3], "(2x2,1)^3")?;
    three_user_core(&|r, t| ch.h(r + 1, t + 1).clone())?
        .into_iter()
        .map(|(v, u)| Beamformers::new(v, u))
        .collect()
}

/// `(2x3,1)^2(3x2,1)^2`: align transmitters 1 and 2 at receivers 3 and 4,
/// then solve the reduced 2x2 problem between transmitters 3, 4 and
/// receivers 1, 2.
pub fn solve_asym_2323(ch: &ChannelSet, branch: Branch) -> Result<Beamformers> {
    let (a, b) = match branch {
        Branch::Dominant => (0, 0),
        Branch::Index(a, b) => (a, b),
    };
    if a > 1 || b > 1 {
        return Err(Error::Dimension("branch indices are 0 or 1".into()));
    }
    let all = asym_2323_branches(ch, Some((a, b)))?;
    all.into_iter().next().ok_or(Error::Singular)
}

/// All four branch combinations of [`solve_asym_2323`].
pub fn solve_asym_2323_all(ch: &ChannelSet) -> Result<Vec<Beamformers>> {
    asym_2323_branches(ch, None)
}

fn asym_2323_branches(ch: &ChannelSet, only: Option<(usize, usize)>) -> Result<Vec<Beamformers>> {
    require_shape(ch, &[(2, 3), (2, 3), (3, 2), (3, 2)], "(2x3,1)^2(3x2,1)^2")?;
    let h = |r: usize, t: usize| ch.h(r, t);
    let first = &(&(&inverse(h(4, 1))? * h(4, 2)) * &inverse(h(3, 2))?) * h(3, 1);
    let mut out = Vec::new();
    for (ia, v1) in branches(&first)?.into_iter().enumerate() {
        if only.is_some_and(|(a, _)| a != ia) {
            continue;
        }
        let v2 = solve_linear(h(4, 2), &(h(4, 1) * &v1))?;
        let u3 = perp2(&(h(3, 1) * &v1));
        let u4 = perp2(&(h(4, 1) * &v1));
        let n4 = null_space(&u3.adjoint_mul(h(3, 4)));
        let n3 = null_space(&u4.adjoint_mul(h(4, 3)));
        let q1 = orthogonal_complement(&(h(1, 2) * &v2));
        let q2 = orthogonal_complement(&(h(2, 1) * &v1));
        if n3.cols() != 2 || n4.cols() != 2 || q1.cols() != 2 || q2.cols() != 2 {
            return Err(Error::Singular);
        }
        let reduced = |q: &ComplexMatrix, hh: &ComplexMatrix, n: &ComplexMatrix| q.adjoint_mul(&(hh * n));
        let h13 = reduced(&q1, h(1, 3), &n3);
        let h14 = reduced(&q1, h(1, 4), &n4);
        let h23 = reduced(&q2, h(2, 3), &n3);
        let h24 = reduced(&q2, h(2, 4), &n4);
        let second = &(&(&inverse(&h23)? * &h24) * &inverse(&h14)?) * &h13;
        for (ib, v3p) in branches(&second)?.into_iter().enumerate() {
            if only.is_some_and(|(_, b)| b != ib) {
                continue;
            }
            let v4p = solve_linear(&h14, &(&h13 * &v3p))?;
            let u1p = perp2(&(&h13 * &v3p));
            let u2p = perp2(&(&h23 * &v3p));
            let v = vec![v1.clone(), v2.clone(), &n3 * &v3p, &n4 * &v4p];
            let u = vec![&q1 * &u1p, &q2 * &u2p, u3.clone(), u4.clone()];
            out.push(Beamformers::new(v, u)?);
        }
    }
    Ok(out)
}

/// Choice of the free transmit vector in [`solve_2433`].
#[derive(Debug, Clone, PartialEq)]
pub enum FreeVector {
    Random(u64),
    Fixed(Vec<C64>),
}

/// Receivers 2..=4 discard the direction of transmitter 1's interference.
/// Returns the 3x2 bases and the projected 2x2 links among users 2..=4.
fn project_out(ch: &ChannelSet, v1: &ComplexMatrix) -> Result<(Vec<ComplexMatrix>, Vec<Vec<ComplexMatrix>>)> {
    let q: Vec<ComplexMatrix> = (2..=4).map(|i| orthogonal_complement(&(ch.h(i, 1) * v1))).collect();
    if q.iter().any(|m| m.cols() != 2) {
        return Err(Error::Singular);
    }
    let g = (0..3)
        .map(|r| (0..3).map(|t| q[r].adjoint_mul(ch.h(r + 2, t + 2))).collect())
        .collect();
    Ok((q, g))
}

/// `(2x4,1)(2x3,1)^3`: pick `v1`, reduce receivers 2..=4 to a 3-user 2x2
/// network, then zero-force at the 4-antenna receiver 1.
pub fn solve_2433(ch: &ChannelSet, free: &FreeVector) -> Result<Beamformers> {
    require_shape(ch, &[(2, 4), (2, 3), (2, 3), (2, 3)], "(2x4,1)(2x3,1)^3")?;
    let v1 = match free {
        FreeVector::Random(seed) => {
            let mut rng = ChaCha20Rng::seed_from_u64(*seed);
            let g = random_gaussian_matrix(2, 1, &mut rng);
            unit(&g.column_entries(0))
        }
        FreeVector::Fixed(v) if v.len() == 2 => unit(v),
        FreeVector::Fixed(v) => return Err(Error::Dimension(format!("v1 needs 2 entries, got {}", v.len()))),
    };
    let (q, g) = project_out(ch, &v1)?;
    let (vs, us) = three_user_core(&|r, t| g[r][t].clone())?
        .into_iter()
        .next()
        .ok_or(Error::Singular)?;
    let interference = ComplexMatrix::hstack(&[
        &(ch.h(1, 2) * &vs[0]),
        &(ch.h(1, 3) * &vs[1]),
        &(ch.h(1, 4) * &vs[2]),
    ])?;
    let u1 = orthogonal_complement(&interference);
    if u1.cols() != 1 {
        return Err(Error::Singular);
    }
    let mut v = vec![v1];
    v.extend(vs);
    let mut u = vec![u1];
    u.extend((0..3).map(|i| &q[i] * &us[i]));
    Beamformers::new(v, u)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Solve2334Options {
    /// Target for the largest cross-link residual.
    pub tol: f64,
    /// Total secant iterations across all restarts.
    pub max_iter: usize,
    pub seed: u64,
}

impl Default for Solve2334Options {
    fn default() -> Self {
        Self {
            tol: 1e-8,
            max_iter: 500,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Solve2334Outcome {
    pub beamformers: Beamformers,
    pub check: AlignmentCheck,
    pub iterations: usize,
    pub restarts: usize,
}

/// Annihilating rows of `w` in C^3 without conjugation, so that everything
/// downstream stays holomorphic in the search variable.
fn left_annihilator(w: &ComplexMatrix) -> ComplexMatrix {
    let (a, b, c) = (w[(0, 0)], w[(1, 0)], w[(2, 0)]);
    let zero = C64::new(0.0, 0.0);
    let (r1, r2) = if a.norm() >= b.norm().max(c.norm()) {
        ([b, -a, zero], [c, zero, -a])
    } else if b.norm() >= c.norm() {
        ([b, -a, zero], [zero, c, -b])
    } else {
        ([c, zero, -a], [zero, c, -b])
    };
    ComplexMatrix::from_row_major(2, 3, r1.into_iter().chain(r2).collect()).expect("2x3")
}

struct Eval2334 {
    g: C64,
    /// `|g|` relative to the column norms.
    rel: f64,
    lambda: C64,
    v: Vec<ComplexMatrix>,
}

/// For `v1 = [1; x]`, solve the holomorphically projected 3-user subproblem
/// on the branch nearest `prev` and return `det[H12 v2, H13 v3, H14 v4]`.
fn eval_2334(ch: &ChannelSet, x: C64, prev: Option<C64>, pick: usize) -> Result<Eval2334> {
    let one = C64::new(1.0, 0.0);
    let v1 = ComplexMatrix::column_vector(&[one, x]);
    let r: Vec<ComplexMatrix> = (2..=4).map(|i| left_annihilator(&(ch.h(i, 1) * &v1))).collect();
    let g = |rx: usize, tx: usize| &r[rx] * ch.h(rx + 2, tx + 2);
    let inv = |rx, tx| inverse(&g(rx, tx));
    let prod = &(&(&(&(&inv(2, 0)? * &g(2, 1)) * &inv(0, 1)?) * &g(0, 2)) * &inv(1, 2)?) * &g(1, 0);
    let eig = eig_general_small(&prod)?;
    if eig.vectors.len() < 2 {
        return Err(Error::Singular);
    }
    let idx = match prev {
        Some(p) => (0..2).min_by(|&a, &b| (eig.values[a] - p).norm().total_cmp(&(eig.values[b] - p).norm())).unwrap(),
        None => pick,
    };
    let e = &eig.vectors[idx];
    if e[0].norm() < 1e-300 {
        return Err(Error::Singular);
    }
    let w2 = ComplexMatrix::column_vector(&[one, e[1] / e[0]]);
    let w3 = solve_linear(&g(2, 1), &(&g(2, 0) * &w2))?;
    let w4 = solve_linear(&g(1, 2), &(&g(1, 0) * &w2))?;
    let cols = [ch.h(1, 2) * &w2, ch.h(1, 3) * &w3, ch.h(1, 4) * &w4];
    let m = ComplexMatrix::hstack(&[&cols[0], &cols[1], &cols[2]])?;
    let det = m[(0, 0)] * (m[(1, 1)] * m[(2, 2)] - m[(1, 2)] * m[(2, 1)])
        - m[(0, 1)] * (m[(1, 0)] * m[(2, 2)] - m[(1, 2)] * m[(2, 0)])
        + m[(0, 2)] * (m[(1, 0)] * m[(2, 1)] - m[(1, 1)] * m[(2, 0)]);
    let scale: f64 = cols.iter().map(ComplexMatrix::norm_fro).product();
    Ok(Eval2334 {
        g: det,
        rel: det.norm() / scale.max(f64::MIN_POSITIVE),
        lambda: eig.values[idx],
        v: vec![v1, w2, w3, w4],
    })
}

fn assemble_2334(ch: &ChannelSet, v: &[ComplexMatrix]) -> Result<Beamformers> {
    let u1 = {
        let m = ComplexMatrix::hstack(&[&(ch.h(1, 2) * &v[1]), &(ch.h(1, 3) * &v[2]), &(ch.h(1, 4) * &v[3])])?;
        // direction of least energy of the (nearly rank-2) interference
        let eig = eig_hermitian(&m.matmul(&m.adjoint()))?;
        eig.vectors.column(0)
    };
    let mut u = vec![u1];
    for i in 2..=4 {
        let others: Vec<ComplexMatrix> = (1..=4).filter(|&j| j != i).map(|j| ch.h(i, j) * &v[j - 1]).collect();
        let refs: Vec<&ComplexMatrix> = others.iter().collect();
        let m = ComplexMatrix::hstack(&refs)?;
        let eig = eig_hermitian(&m.matmul(&m.adjoint()))?;
        u.push(eig.vectors.column(0));
    }
    Beamformers::new(v.to_vec(), u)
}

/// `(2x3,1)^4`: the extra receive dimension of the `(2x4,1)(2x3,1)^3`
/// construction is removed by solving for `v1 = [1; x]` such that the three
/// interference vectors at receiver 1 become coplanar. Complex secant
/// iteration with random restarts over both eigen branches.
pub fn solve_2334(ch: &ChannelSet, opts: &Solve2334Options) -> Result<Solve2334Outcome> {
    solve_2334_roots(ch, opts, 1)?
        .into_iter()
        .next()
        .ok_or_else(|| Error::NoConvergence(format!("no root within {} iterations", opts.max_iter)))
}

/// Up to `want` distinct solutions of [`solve_2334`] within the iteration
/// budget. Returns what was found (possibly none).
pub fn solve_2334_roots(ch: &ChannelSet, opts: &Solve2334Options, want: usize) -> Result<Vec<Solve2334Outcome>> {
    require_shape(ch, &[(2, 3); 4], "(2x3,1)^4")?;
    let sys = SystemSpec::symmetric_system(2, 3, 1, 4)?;
    let mut rng = ChaCha20Rng::seed_from_u64(opts.seed);
    let mut found: Vec<Solve2334Outcome> = Vec::new();
    let mut used = 0usize;
    let mut restarts = 0usize;
    while used < opts.max_iter && found.len() < want {
        restarts += 1;
        let start = random_gaussian_matrix(1, 2, &mut rng);
        let pick = restarts % 2;
        let (mut x0, mut x1) = (start[(0, 0)], start[(0, 0)] + start[(0, 1)] * 0.1);
        let Ok(mut e0) = eval_2334(ch, x0, None, pick) else {
            used += 1;
            continue;
        };
        let Ok(mut e1) = eval_2334(ch, x1, Some(e0.lambda), pick) else {
            used += 1;
            continue;
        };
        used += 2;
        while used < opts.max_iter {
            used += 1;
            let denom = e1.g - e0.g;
            if denom.norm() < 1e-300 || !x1.is_finite() || x1.norm() > 1e8 {
                break;
            }
            let mut step = e1.g * (x1 - x0) / denom;
            let cap = 1.0 + x1.norm();
            if step.norm() > cap {
                step *= cap / step.norm();
            }
            let x2 = x1 - step;
            let Ok(e2) = eval_2334(ch, x2, Some(e1.lambda), pick) else {
                break;
            };
            (x0, e0, x1, e1) = (x1, e1, x2, e2);
            if e1.rel <= opts.tol * 1e-2 || step.norm() <= 1e-15 * (1.0 + x1.norm()) {
                let Ok(bf) = assemble_2334(ch, &e1.v) else {
                    break;
                };
                let check = verify_alignment(&sys, ch, &bf)?;
                if check.max_cross_residual <= opts.tol {
                    if !found.iter().any(|f| f.beamformers.same_solution(&bf, 1e-6)) {
                        found.push(Solve2334Outcome {
                            beamformers: bf,
                            check,
                            iterations: used,
                            restarts,
                        });
                    }
                    break;
                }
            }
        }
    }
    Ok(found)
}

/// Runs the constructive solver matching the system's shape.
pub fn solve_by_shape(sys: &SystemSpec, ch: &ChannelSet, seed: u64) -> Result<Beamformers> {
    ch.check_shapes(sys)?;
    match sys.render().as_str() {
        "(2x2,1)^3" => solve_3user_square(ch),
        "(2x3,1)^2(3x2,1)^2" => solve_asym_2323(ch, Branch::Dominant),
        "(2x4,1)(2x3,1)^3" => solve_2433(ch, &FreeVector::Random(seed)),
        "(2x3,1)^4" => solve_2334(ch, &Solve2334Options { seed, ..Default::default() }).map(|o| o.beamformers),
        other => Err(Error::UnsupportedShape(format!(
            "{other}; supported: {}",
            SUPPORTED_SHAPES.join(", ")
        ))),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::random_channels;
    use crate::model::parse_system;

    fn check(spec: &str, seed: u64, bf: &Beamformers) -> AlignmentCheck {
        let sys = parse_system(spec).unwrap();
        verify_alignment(&sys, &random_channels(&sys, seed), bf).unwrap()
    }

    #[test]
    fn three_user_both_branches() {
        let sys = parse_system("(2x2,1)^3").unwrap();
        let ch = random_channels(&sys, 5);
        let all = solve_3user_square_all(&ch).unwrap();
        assert_eq!(all.len(), 2);
        for bf in &all {
            assert!(check("(2x2,1)^3", 5, bf).passes(1e-9, 1e-6));
        }
        assert!(!all[0].same_solution(&all[1], 1e-6));
    }

    #[test]
    fn asym_four_branches() {
        let sys = parse_system("(2x3,1)^2(3x2,1)^2").unwrap();
        let ch = random_channels(&sys, 9);
        let all = solve_asym_2323_all(&ch).unwrap();
        assert_eq!(all.len(), 4);
        for bf in &all {
            assert!(check("(2x3,1)^2(3x2,1)^2", 9, bf).passes(1e-9, 1e-6));
        }
        let random = Beamformers::random(&sys, 1);
        assert!(check("(2x3,1)^2(3x2,1)^2", 9, &random).max_cross_residual > 1e-3);
    }

    #[test]
    fn two_four_three_three() {
        let sys = parse_system("(2x4,1)(2x3,1)^3").unwrap();
        let ch = random_channels(&sys, 2);
        let bf = solve_2433(&ch, &FreeVector::Random(3)).unwrap();
        assert!(check("(2x4,1)(2x3,1)^3", 2, &bf).passes(1e-9, 1e-6));
        let e1 = vec![C64::new(1.0, 0.0), C64::new(0.0, 0.0)];
        let bf = solve_2433(&ch, &FreeVector::Fixed(e1)).unwrap();
        assert!(check("(2x4,1)(2x3,1)^3", 2, &bf).passes(1e-9, 1e-6));
    }

    #[test]
    fn symmetric_2334_converges() {
        let sys = parse_system("(2x3,1)^4").unwrap();
        let ch = random_channels(&sys, 4);
        let out = solve_2334(&ch, &Solve2334Options::default()).unwrap();
        assert!(out.check.max_cross_residual <= 1e-8);
    }

    #[test]
    fn wrong_shapes() {
        let sys = parse_system("(2x3,1)^2(3x2,1)^2").unwrap();
        let ch = random_channels(&sys, 0);
        assert!(matches!(solve_3user_square(&ch), Err(Error::UnsupportedShape(_))));
        let swapped = parse_system("(3x2,1)^2(2x3,1)^2").unwrap();
        let ch = random_channels(&swapped, 0);
        assert!(matches!(solve_asym_2323(&ch, Branch::Dominant), Err(Error::UnsupportedShape(_))));
        let big = parse_system("(7x7,3)^5").unwrap();
        assert!(matches!(
            solve_by_shape(&big, &random_channels(&big, 0), 0),
            Err(Error::UnsupportedShape(_))
        ));
    }

    #[test]
    fn rank_deficient_channel() {
        let sys = parse_system("(2x2,1)^3").unwrap();
        let mut ch = random_channels(&sys, 1);
        *ch.h_mut(3, 1) = ComplexMatrix::from_real(2, 2, &[1.0, 2.0, 2.0, 4.0]);
        assert!(solve_3user_square(&ch).is_err());
    }

    #[test]
    fn zero_forcing_pair() {
        let sys = parse_system("(2x1,1)^2").unwrap();
        let ch = random_channels(&sys, 3);
        let v1 = orthogonal_complement(&ch.h(2, 1).adjoint());
        let v2 = orthogonal_complement(&ch.h(1, 2).adjoint());
        let u = vec![ComplexMatrix::identity(1), ComplexMatrix::identity(1)];
        let bf = Beamformers::new(vec![v1, v2], u).unwrap();
        assert!(verify_alignment(&sys, &ch, &bf).unwrap().max_cross_residual <= 1e-12);
    }

    #[test]
    fn json_roundtrip() {
        let sys = parse_system("(2x2,1)^3").unwrap();
        let bf = solve_3user_square(&random_channels(&sys, 8)).unwrap();
        let back = Beamformers::from_json(&bf.to_json().unwrap()).unwrap();
        assert!(back.same_solution(&bf, 1e-12));
    }
}
