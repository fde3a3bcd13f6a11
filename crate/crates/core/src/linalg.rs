//! Dense complex linear algebra for the small matrices of MIMO channel
//! models: products, pivoted solves, Householder null spaces, Jacobi
//! eigen/singular value decompositions, small general eigenproblems, and
//! seeded Gaussian channel generation.

use std::ops::{Add, Index, IndexMut, Mul, Sub};

use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::SystemSpec;

pub type C64 = Complex64;

const ZERO: C64 = C64::new(0.0, 0.0);
const ONE: C64 = C64::new(1.0, 0.0);

/// Relative rank tolerance for null spaces.
pub const RANK_TOL: f64 = 1e-10;
/// Relative Hermitian-symmetry tolerance accepted by [`eig_hermitian`].
pub const HERMITIAN_TOL: f64 = 1e-12;

/// Row-major dense complex matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct ComplexMatrix {
    rows: usize,
    cols: usize,
    data: Vec<C64>,
}

impl ComplexMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![ZERO; rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        Self::from_fn(n, n, |i, j| if i == j { ONE } else { ZERO })
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> C64) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                data.push(f(i, j));
            }
        }
        Self { rows, cols, data }
    }

    pub fn from_row_major(rows: usize, cols: usize, data: Vec<C64>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::Dimension(format!(
                "{} entries for a {rows}x{cols} matrix",
                data.len()
            )));
        }
        Ok(Self { rows, cols, data })
    }

    /// Builds from real parts only.
    pub fn from_real(rows: usize, cols: usize, re: &[f64]) -> Self {
        assert_eq!(re.len(), rows * cols);
        Self {
            rows,
            cols,
            data: re.iter().map(|&x| C64::new(x, 0.0)).collect(),
        }
    }

    pub fn column_vector(entries: &[C64]) -> Self {
        Self {
            rows: entries.len(),
            cols: 1,
            data: entries.to_vec(),
        }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    pub fn data(&self) -> &[C64] {
        &self.data
    }

    pub fn column(&self, j: usize) -> ComplexMatrix {
        Self::from_fn(self.rows, 1, |i, _| self[(i, j)])
    }

    pub fn column_entries(&self, j: usize) -> Vec<C64> {
        (0..self.rows).map(|i| self[(i, j)]).collect()
    }

    pub fn set_column(&mut self, j: usize, col: &[C64]) {
        assert_eq!(col.len(), self.rows);
        for (i, &x) in col.iter().enumerate() {
            self[(i, j)] = x;
        }
    }

    /// Columns `range` as a new matrix.
    pub fn columns(&self, range: std::ops::Range<usize>) -> ComplexMatrix {
        let start = range.start;
        Self::from_fn(self.rows, range.len(), |i, j| self[(i, start + j)])
    }

    pub fn rows_range(&self, range: std::ops::Range<usize>) -> ComplexMatrix {
        let start = range.start;
        Self::from_fn(range.len(), self.cols, |i, j| self[(start + i, j)])
    }

    pub fn hstack(parts: &[&ComplexMatrix]) -> Result<ComplexMatrix> {
        let rows = parts.first().map_or(0, |p| p.rows);
        if parts.iter().any(|p| p.rows != rows) {
            return Err(Error::Dimension("hstack row mismatch".into()));
        }
        let cols = parts.iter().map(|p| p.cols).sum();
        let mut out = Self::zeros(rows, cols);
        let mut off = 0;
        for p in parts {
            for i in 0..rows {
                for j in 0..p.cols {
                    out[(i, off + j)] = p[(i, j)];
                }
            }
            off += p.cols;
        }
        Ok(out)
    }

    /// Conjugate transpose.
    pub fn adjoint(&self) -> ComplexMatrix {
        Self::from_fn(self.cols, self.rows, |i, j| self[(j, i)].conj())
    }

    pub fn transpose(&self) -> ComplexMatrix {
        Self::from_fn(self.cols, self.rows, |i, j| self[(j, i)])
    }

    pub fn scale(&self, s: C64) -> ComplexMatrix {
        Self {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|&x| x * s).collect(),
        }
    }

    pub fn trace(&self) -> C64 {
        (0..self.rows.min(self.cols)).map(|i| self[(i, i)]).sum()
    }

    pub fn norm_max(&self) -> f64 {
        self.data.iter().map(|x| x.norm()).fold(0.0, f64::max)
    }

    pub fn norm_fro(&self) -> f64 {
        self.data.iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt()
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|x| x.re.is_finite() && x.im.is_finite())
    }

    /// `‖A - A†‖_max`.
    pub fn hermitian_deviation(&self) -> f64 {
        if !self.is_square() {
            return f64::INFINITY;
        }
        let mut dev: f64 = 0.0;
        for i in 0..self.rows {
            for j in i..self.cols {
                dev = dev.max((self[(i, j)] - self[(j, i)].conj()).norm());
            }
        }
        dev
    }

    /// `(A + A†) / 2`.
    pub fn hermitian_part(&self) -> ComplexMatrix {
        Self::from_fn(self.rows, self.cols, |i, j| (self[(i, j)] + self[(j, i)].conj()) * 0.5)
    }

    pub fn matmul(&self, rhs: &ComplexMatrix) -> ComplexMatrix {
        assert_eq!(self.cols, rhs.rows, "matmul shape mismatch");
        let mut out = Self::zeros(self.rows, rhs.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self[(i, k)];
                if a == ZERO {
                    continue;
                }
                for j in 0..rhs.cols {
                    out.data[i * rhs.cols + j] += a * rhs.data[k * rhs.cols + j];
                }
            }
        }
        out
    }

    /// `self† · rhs` without forming the adjoint.
    pub fn adjoint_mul(&self, rhs: &ComplexMatrix) -> ComplexMatrix {
        assert_eq!(self.rows, rhs.rows, "adjoint_mul shape mismatch");
        let mut out = Self::zeros(self.cols, rhs.cols);
        for k in 0..self.rows {
            for i in 0..self.cols {
                let a = self[(k, i)].conj();
                for j in 0..rhs.cols {
                    out.data[i * rhs.cols + j] += a * rhs.data[k * rhs.cols + j];
                }
            }
        }
        out
    }

    /// Scales every column to unit 2-norm with its first nonzero entry real
    /// and positive. Zero columns are left alone.
    pub fn canonicalize_columns(&mut self) {
        for j in 0..self.cols {
            let norm = (0..self.rows).map(|i| self[(i, j)].norm_sqr()).sum::<f64>().sqrt();
            if norm == 0.0 {
                continue;
            }
            let lead = (0..self.rows)
                .map(|i| self[(i, j)])
                .find(|x| x.norm() > 1e-12 * norm)
                .unwrap_or(ONE);
            let phase = lead.conj() / lead.norm();
            for i in 0..self.rows {
                self[(i, j)] = self[(i, j)] * phase / norm;
            }
        }
    }

    pub fn canonicalized(&self) -> ComplexMatrix {
        let mut m = self.clone();
        m.canonicalize_columns();
        m
    }
}

impl Index<(usize, usize)> for ComplexMatrix {
    type Output = C64;

    fn index(&self, (i, j): (usize, usize)) -> &C64 {
        debug_assert!(i < self.rows && j < self.cols);
        &self.data[i * self.cols + j]
    }
}

impl IndexMut<(usize, usize)> for ComplexMatrix {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut C64 {
        debug_assert!(i < self.rows && j < self.cols);
        &mut self.data[i * self.cols + j]
    }
}

impl Mul for &ComplexMatrix {
    type Output = ComplexMatrix;

    fn mul(self, rhs: &ComplexMatrix) -> ComplexMatrix {
        self.matmul(rhs)
    }
}

impl Add for &ComplexMatrix {
    type Output = ComplexMatrix;

    fn add(self, rhs: &ComplexMatrix) -> ComplexMatrix {
        assert_eq!(self.shape(), rhs.shape());
        ComplexMatrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().zip(&rhs.data).map(|(a, b)| a + b).collect(),
        }
    }
}

impl Sub for &ComplexMatrix {
    type Output = ComplexMatrix;

    fn sub(self, rhs: &ComplexMatrix) -> ComplexMatrix {
        assert_eq!(self.shape(), rhs.shape());
        ComplexMatrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().zip(&rhs.data).map(|(a, b)| a - b).collect(),
        }
    }
}

#[derive(Serialize, Deserialize)]
struct MatrixRepr {
    rows: usize,
    cols: usize,
    /// Row-major `[re, im]` pairs.
    data: Vec<[f64; 2]>,
}

impl Serialize for ComplexMatrix {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        MatrixRepr {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|x| [x.re, x.im]).collect(),
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for ComplexMatrix {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let r = MatrixRepr::deserialize(d)?;
        let data = r.data.iter().map(|&[re, im]| C64::new(re, im)).collect();
        ComplexMatrix::from_row_major(r.rows, r.cols, data).map_err(serde::de::Error::custom)
    }
}

// ---------------------------------------------------------------------------
// Channels

/// Channel matrices `H[k][j]` (`N^[k] x M^[j]`) for every ordered user pair,
/// direct links included.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChannelSet {
    pub seed: Option<u64>,
    /// Outer index is the receiver, inner the transmitter (both 0-based).
    matrices: Vec<Vec<ComplexMatrix>>,
}

impl ChannelSet {
    /// Wraps explicit matrices after checking their shapes against `sys`.
    pub fn from_matrices(sys: &SystemSpec, matrices: Vec<Vec<ComplexMatrix>>) -> Result<Self> {
        let ch = Self {
            seed: None,
            matrices,
        };
        ch.check_shapes(sys)?;
        Ok(ch)
    }

    pub fn check_shapes(&self, sys: &SystemSpec) -> Result<()> {
        let k = sys.num_users();
        if self.matrices.len() != k || self.matrices.iter().any(|row| row.len() != k) {
            return Err(Error::Dimension(format!("channel set is not {k}x{k}")));
        }
        for rx in 1..=k {
            for tx in 1..=k {
                let want = (sys.user(rx).rx_antennas, sys.user(tx).tx_antennas);
                let got = self.h(rx, tx).shape();
                if got != want {
                    return Err(Error::Dimension(format!(
                        "H[{rx}{tx}] is {}x{}, expected {}x{}",
                        got.0, got.1, want.0, want.1
                    )));
                }
            }
        }
        Ok(())
    }

    pub fn num_users(&self) -> usize {
        self.matrices.len()
    }

    /// `H^[rx tx]` with 1-based user indices.
    pub fn h(&self, rx: usize, tx: usize) -> &ComplexMatrix {
        &self.matrices[rx - 1][tx - 1]
    }

    pub fn h_mut(&mut self, rx: usize, tx: usize) -> &mut ComplexMatrix {
        &mut self.matrices[rx - 1][tx - 1]
    }

    /// Channels of the reciprocal network: `H̄[j][k] = H[k][j]†`.
    pub fn reciprocal(&self) -> ChannelSet {
        let k = self.num_users();
        let matrices = (1..=k)
            .map(|rx| (1..=k).map(|tx| self.h(tx, rx).adjoint()).collect())
            .collect();
        ChannelSet {
            seed: self.seed,
            matrices,
        }
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(text: &str, sys: &SystemSpec) -> Result<Self> {
        let ch: ChannelSet = serde_json::from_str(text)?;
        ch.check_shapes(sys)?;
        Ok(ch)
    }
}

/// Seeded ChaCha20 stream used for every random draw in the crate.
pub fn rng_from_seed(seed: u64) -> ChaCha20Rng {
    ChaCha20Rng::seed_from_u64(seed)
}

/// Circularly-symmetric complex Gaussian with unit variance.
pub fn complex_gaussian<R: rand::Rng + ?Sized>(rng: &mut R) -> C64 {
    let s = std::f64::consts::FRAC_1_SQRT_2;
    let re: f64 = StandardNormal.sample(rng);
    let im: f64 = StandardNormal.sample(rng);
    C64::new(re * s, im * s)
}

pub fn random_gaussian_matrix<R: rand::Rng + ?Sized>(rows: usize, cols: usize, rng: &mut R) -> ComplexMatrix {
    ComplexMatrix::from_fn(rows, cols, |_, _| complex_gaussian(rng))
}

/// iid unit-variance complex Gaussian channels. Matrices are drawn in
/// `(rx, tx)` lexicographic order, entries row-major, real part first.
pub fn random_channels(sys: &SystemSpec, seed: u64) -> ChannelSet {
    let mut rng = rng_from_seed(seed);
    let k = sys.num_users();
    let matrices = (1..=k)
        .map(|rx| {
            (1..=k)
                .map(|tx| random_gaussian_matrix(sys.user(rx).rx_antennas, sys.user(tx).tx_antennas, &mut rng))
                .collect()
        })
        .collect();
    ChannelSet {
        seed: Some(seed),
        matrices,
    }
}

/// `n x d` matrix with orthonormal columns spanning a random subspace.
pub fn random_orthonormal<R: rand::Rng + ?Sized>(n: usize, d: usize, rng: &mut R) -> ComplexMatrix {
    let g = random_gaussian_matrix(n, d, rng);
    let (q, _, _) = householder_qr(&g, false);
    q.columns(0..d)
}

// ---------------------------------------------------------------------------
// Solves and factorizations

/// Solves `A X = B` by Gaussian elimination with partial pivoting.
pub fn solve_linear(a: &ComplexMatrix, b: &ComplexMatrix) -> Result<ComplexMatrix> {
    if !a.is_square() || a.rows() != b.rows() {
        return Err(Error::Dimension(format!(
            "solve {}x{} with rhs {}x{}",
            a.rows(),
            a.cols(),
            b.rows(),
            b.cols()
        )));
    }
    let n = a.rows();
    let mut lu = a.clone();
    let mut x = b.clone();
    let scale = a.norm_max();
    if scale == 0.0 {
        return Err(Error::Singular);
    }
    let mut min_pivot = f64::INFINITY;
    let mut max_pivot: f64 = 0.0;
    for col in 0..n {
        let piv = (col..n)
            .max_by(|&i, &j| lu[(i, col)].norm().total_cmp(&lu[(j, col)].norm()))
            .unwrap();
        let p = lu[(piv, col)];
        min_pivot = min_pivot.min(p.norm());
        max_pivot = max_pivot.max(p.norm());
        if p.norm() <= 1e-14 * scale {
            return Err(Error::Singular);
        }
        if piv != col {
            for j in 0..n {
                let t = lu[(col, j)];
                lu[(col, j)] = lu[(piv, j)];
                lu[(piv, j)] = t;
            }
            for j in 0..x.cols() {
                let t = x[(col, j)];
                x[(col, j)] = x[(piv, j)];
                x[(piv, j)] = t;
            }
        }
        for r in col + 1..n {
            let f = lu[(r, col)] / p;
            if f == ZERO {
                continue;
            }
            for j in col..n {
                let v = lu[(col, j)];
                lu[(r, j)] -= f * v;
            }
            for j in 0..x.cols() {
                let v = x[(col, j)];
                x[(r, j)] -= f * v;
            }
        }
    }
    // Pivot growth ratio as a cheap condition estimate.
    if max_pivot / min_pivot > 1e12 {
        return Err(Error::Singular);
    }
    for col in (0..n).rev() {
        let p = lu[(col, col)];
        for j in 0..x.cols() {
            let mut s = x[(col, j)];
            for k in col + 1..n {
                s -= lu[(col, k)] * x[(k, j)];
            }
            x[(col, j)] = s / p;
        }
    }
    Ok(x)
}

/// `A⁻¹` via [`solve_linear`].
pub fn inverse(a: &ComplexMatrix) -> Result<ComplexMatrix> {
    solve_linear(a, &ComplexMatrix::identity(a.rows()))
}

/// Householder reflector for `x`: returns `(v, beta, alpha)` with
/// `(I - beta v v†) x = alpha e1`.
fn householder(x: &[C64]) -> (Vec<C64>, f64, C64) {
    let norm = x.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    if norm == 0.0 {
        return (vec![ZERO; x.len()], 0.0, ZERO);
    }
    let phase = if x[0].norm() > 0.0 { x[0] / x[0].norm() } else { ONE };
    let alpha = -phase * norm;
    let mut v = x.to_vec();
    v[0] -= alpha;
    let vnorm2: f64 = v.iter().map(|z| z.norm_sqr()).sum();
    let beta = if vnorm2 > 0.0 { 2.0 / vnorm2 } else { 0.0 };
    (v, beta, alpha)
}

/// Householder QR, optionally with column pivoting: `A P = Q R` with `Q`
/// square unitary. Returns `(Q, R, perm)` where `perm[j]` is the original
/// index of column `j`.
pub fn householder_qr(a: &ComplexMatrix, pivot: bool) -> (ComplexMatrix, ComplexMatrix, Vec<usize>) {
    let (m, n) = a.shape();
    let mut r = a.clone();
    let mut q = ComplexMatrix::identity(m);
    let mut perm: Vec<usize> = (0..n).collect();
    for i in 0..m.min(n) {
        if pivot {
            let col_norm = |r: &ComplexMatrix, j: usize| (i..m).map(|k| r[(k, j)].norm_sqr()).sum::<f64>();
            let best = (i..n)
                .max_by(|&x, &y| col_norm(&r, x).total_cmp(&col_norm(&r, y)))
                .unwrap();
            if best != i {
                for k in 0..m {
                    let t = r[(k, i)];
                    r[(k, i)] = r[(k, best)];
                    r[(k, best)] = t;
                }
                perm.swap(i, best);
            }
        }
        let x: Vec<C64> = (i..m).map(|k| r[(k, i)]).collect();
        let (v, beta, _) = householder(&x);
        if beta == 0.0 {
            continue;
        }
        // R <- H R on rows i..m
        for j in i..n {
            let s: C64 = (i..m).map(|k| v[k - i].conj() * r[(k, j)]).sum::<C64>() * beta;
            for k in i..m {
                r[(k, j)] -= v[k - i] * s;
            }
        }
        // Q <- Q H on columns i..m
        for row in 0..m {
            let s: C64 = (i..m).map(|k| q[(row, k)] * v[k - i]).sum::<C64>() * beta;
            for k in i..m {
                q[(row, k)] -= s * v[k - i].conj();
            }
        }
        for k in i + 1..m {
            r[(k, i)] = ZERO;
        }
    }
    (q, r, perm)
}

/// Numerical rank from a pivoted QR, relative tolerance [`RANK_TOL`].
pub fn rank(a: &ComplexMatrix) -> usize {
    if a.rows() == 0 || a.cols() == 0 {
        return 0;
    }
    let (_, r, _) = householder_qr(a, true);
    rank_from_r(&r)
}

fn rank_from_r(r: &ComplexMatrix) -> usize {
    let k = r.rows().min(r.cols());
    if k == 0 {
        return 0;
    }
    let lead = r[(0, 0)].norm();
    if lead == 0.0 {
        return 0;
    }
    (0..k).take_while(|&i| r[(i, i)].norm() > RANK_TOL * lead).count()
}

/// Orthonormal basis of `{x : A x = 0}` as the columns of the result.
pub fn null_space(a: &ComplexMatrix) -> ComplexMatrix {
    let n = a.cols();
    if a.rows() == 0 {
        return ComplexMatrix::identity(n);
    }
    // range(A†)⊥ = null(A); the trailing columns of Q from A† P = Q R.
    let (q, r, _) = householder_qr(&a.adjoint(), true);
    let rk = rank_from_r(&r);
    q.columns(rk..n)
}

/// Orthonormal basis of the orthogonal complement of the column span of `a`.
pub fn orthogonal_complement(a: &ComplexMatrix) -> ComplexMatrix {
    null_space(&a.adjoint())
}

// ---------------------------------------------------------------------------
// Eigen and singular values

/// 2x2 unitary `G` such that `G† [[a, c], [c̄, b]] G` is diagonal.
fn jacobi_rotation(a: f64, b: f64, c: C64) -> [[C64; 2]; 2] {
    let h = c.norm();
    if h == 0.0 {
        return [[ONE, ZERO], [ZERO, ONE]];
    }
    let phase = c / h;
    let tau = (b - a) / (2.0 * h);
    let t = if tau >= 0.0 {
        1.0 / (tau + (1.0 + tau * tau).sqrt())
    } else {
        -1.0 / (-tau + (1.0 + tau * tau).sqrt())
    };
    let cs = 1.0 / (1.0 + t * t).sqrt();
    let sn = t * cs;
    // G = diag(1, e^{-iφ}) · [[cs, sn], [-sn, cs]]
    [
        [C64::new(cs, 0.0), C64::new(sn, 0.0)],
        [-phase.conj() * sn, phase.conj() * cs],
    ]
}

/// Hermitian eigen-decomposition.
#[derive(Debug, Clone)]
pub struct HermitianEigen {
    /// Ascending.
    pub values: Vec<f64>,
    /// Column `i` pairs with `values[i]`.
    pub vectors: ComplexMatrix,
}

/// Cyclic complex Jacobi on the Hermitian part of `a`.
pub fn eig_hermitian(a: &ComplexMatrix) -> Result<HermitianEigen> {
    if !a.is_square() {
        return Err(Error::Dimension("eig_hermitian needs a square matrix".into()));
    }
    let scale = a.norm_max();
    let dev = a.hermitian_deviation();
    if dev > HERMITIAN_TOL * scale.max(1.0) {
        return Err(Error::NotHermitian(dev));
    }
    let n = a.rows();
    let mut m = a.hermitian_part();
    let mut v = ComplexMatrix::identity(n);
    let total = m.norm_fro();
    for _sweep in 0..100 {
        let off: f64 = (0..n)
            .flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| (i, j)))
            .map(|(i, j)| m[(i, j)].norm_sqr())
            .sum::<f64>()
            .sqrt();
        if off <= 1e-15 * total || total == 0.0 {
            break;
        }
        for p in 0..n {
            for q in p + 1..n {
                if m[(p, q)].norm() <= 1e-300 {
                    continue;
                }
                let g = jacobi_rotation(m[(p, p)].re, m[(q, q)].re, m[(p, q)]);
                apply_two_sided(&mut m, p, q, &g);
                for row in 0..n {
                    let x = v[(row, p)];
                    let y = v[(row, q)];
                    v[(row, p)] = x * g[0][0] + y * g[1][0];
                    v[(row, q)] = x * g[0][1] + y * g[1][1];
                }
            }
        }
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| m[(i, i)].re.total_cmp(&m[(j, j)].re));
    let values = order.iter().map(|&i| m[(i, i)].re).collect();
    let vectors = ComplexMatrix::from_fn(n, n, |r, c| v[(r, order[c])]);
    Ok(HermitianEigen { values, vectors })
}

/// `M <- G† M G` restricted to rows/columns `p`, `q`.
fn apply_two_sided(m: &mut ComplexMatrix, p: usize, q: usize, g: &[[C64; 2]; 2]) {
    let n = m.rows();
    for row in 0..n {
        let x = m[(row, p)];
        let y = m[(row, q)];
        m[(row, p)] = x * g[0][0] + y * g[1][0];
        m[(row, q)] = x * g[0][1] + y * g[1][1];
    }
    for col in 0..n {
        let x = m[(p, col)];
        let y = m[(q, col)];
        m[(p, col)] = g[0][0].conj() * x + g[1][0].conj() * y;
        m[(q, col)] = g[0][1].conj() * x + g[1][1].conj() * y;
    }
    m[(p, q)] = ZERO;
    m[(q, p)] = ZERO;
    m[(p, p)] = C64::new(m[(p, p)].re, 0.0);
    m[(q, q)] = C64::new(m[(q, q)].re, 0.0);
}

/// Singular values in descending order (one-sided Jacobi).
pub fn singular_values(a: &ComplexMatrix) -> Vec<f64> {
    // Work on the taller orientation so columns <= rows.
    let mut w = if a.cols() > a.rows() { a.adjoint() } else { a.clone() };
    let (m, n) = w.shape();
    for _sweep in 0..100 {
        let mut rotated = false;
        for p in 0..n {
            for q in p + 1..n {
                let alpha: f64 = (0..m).map(|i| w[(i, p)].norm_sqr()).sum();
                let beta: f64 = (0..m).map(|i| w[(i, q)].norm_sqr()).sum();
                let gamma: C64 = (0..m).map(|i| w[(i, p)].conj() * w[(i, q)]).sum();
                if gamma.norm() <= 1e-15 * (alpha * beta).sqrt() || gamma.norm() == 0.0 {
                    continue;
                }
                rotated = true;
                let g = jacobi_rotation(alpha, beta, gamma);
                for i in 0..m {
                    let x = w[(i, p)];
                    let y = w[(i, q)];
                    w[(i, p)] = x * g[0][0] + y * g[1][0];
                    w[(i, q)] = x * g[0][1] + y * g[1][1];
                }
            }
        }
        if !rotated {
            break;
        }
    }
    let mut s: Vec<f64> = (0..n)
        .map(|j| (0..m).map(|i| w[(i, j)].norm_sqr()).sum::<f64>().sqrt())
        .collect();
    s.sort_by(|a, b| b.total_cmp(a));
    s
}

pub fn smallest_singular_value(a: &ComplexMatrix) -> f64 {
    singular_values(a).last().copied().unwrap_or(0.0)
}

/// Eigenpairs of a small general matrix.
#[derive(Debug, Clone)]
pub struct GeneralEigen {
    pub values: Vec<C64>,
    /// Unit-norm eigenvectors; `vectors[i]` pairs with `values[i]`.
    pub vectors: Vec<Vec<C64>>,
    /// Set when fewer independent eigenvectors than the dimension exist.
    pub defective: bool,
}

/// Largest size accepted by [`eig_general_small`].
pub const GENERAL_EIG_MAX: usize = 8;

/// Eigenpairs of a square matrix of size at most 8. Closed form for 2x2;
/// larger sizes go through Hessenberg reduction, shifted QR and inverse
/// iteration. Eigenpairs are ordered by decreasing eigenvalue magnitude.
pub fn eig_general_small(a: &ComplexMatrix) -> Result<GeneralEigen> {
    if !a.is_square() || a.rows() == 0 || a.rows() > GENERAL_EIG_MAX {
        return Err(Error::Dimension(format!(
            "eig_general_small takes square matrices up to {GENERAL_EIG_MAX}, got {}x{}",
            a.rows(),
            a.cols()
        )));
    }
    let n = a.rows();
    let scale = a.norm_max().max(f64::MIN_POSITIVE);
    let mut out = if n == 1 {
        GeneralEigen {
            values: vec![a[(0, 0)]],
            vectors: vec![vec![ONE]],
            defective: false,
        }
    } else if n == 2 {
        eig_2x2(a, scale)
    } else {
        let values = qr_eigenvalues(a)?;
        eigvecs_for(a, values, scale)?
    };
    for (lam, v) in out.values.iter().zip(&out.vectors) {
        let x = ComplexMatrix::column_vector(v);
        let r = &(a * &x) - &x.scale(*lam);
        if r.norm_max() > 1e-8 * scale {
            return Err(Error::NoConvergence(format!(
                "eigenpair residual {:e}",
                r.norm_max()
            )));
        }
    }
    let mut idx: Vec<usize> = (0..out.values.len()).collect();
    idx.sort_by(|&i, &j| out.values[j].norm().total_cmp(&out.values[i].norm()));
    out.values = idx.iter().map(|&i| out.values[i]).collect();
    out.vectors = idx.iter().map(|&i| out.vectors[i].clone()).collect();
    Ok(out)
}

fn unit(v: Vec<C64>) -> Vec<C64> {
    let n = v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    v.into_iter().map(|z| z / n).collect()
}

fn eig_2x2(a: &ComplexMatrix, scale: f64) -> GeneralEigen {
    let (p, q, r, s) = (a[(0, 0)], a[(0, 1)], a[(1, 0)], a[(1, 1)]);
    let half_tr = (p + s) * 0.5;
    let disc = ((p - s) * 0.5).powu(2) + q * r;
    let root = disc.sqrt();
    let l1 = half_tr + root;
    let l2 = half_tr - root;
    let vec_for = |lam: C64| -> Vec<C64> {
        // Rows of (A - λI) are orthogonal to v; pick the better-conditioned.
        let c1 = vec![q, lam - p];
        let c2 = vec![lam - s, r];
        let n1: f64 = c1.iter().map(|z| z.norm_sqr()).sum();
        let n2: f64 = c2.iter().map(|z| z.norm_sqr()).sum();
        if n1.max(n2) <= (1e-14 * scale).powi(2) {
            vec![ONE, ZERO]
        } else if n1 >= n2 {
            unit(c1)
        } else {
            unit(c2)
        }
    };
    if (l1 - l2).norm() <= 1e-12 * scale {
        let lam = half_tr;
        let off = q.norm().max(r.norm()).max((p - s).norm());
        if off <= 1e-14 * scale {
            return GeneralEigen {
                values: vec![lam, lam],
                vectors: vec![vec![ONE, ZERO], vec![ZERO, ONE]],
                defective: false,
            };
        }
        return GeneralEigen {
            values: vec![lam],
            vectors: vec![vec_for(lam)],
            defective: true,
        };
    }
    GeneralEigen {
        values: vec![l1, l2],
        vectors: vec![vec_for(l1), vec_for(l2)],
        defective: false,
    }
}

/// Eigenvalues by Hessenberg reduction and single-shift complex QR with
/// Wilkinson shifts.
fn qr_eigenvalues(a: &ComplexMatrix) -> Result<Vec<C64>> {
    let n = a.rows();
    let mut h = a.clone();
    // Hessenberg reduction by similarity reflectors.
    for k in 0..n.saturating_sub(2) {
        let x: Vec<C64> = (k + 1..n).map(|i| h[(i, k)]).collect();
        let (v, beta, _) = householder(&x);
        if beta == 0.0 {
            continue;
        }
        for j in 0..n {
            let s: C64 = (k + 1..n).map(|i| v[i - k - 1].conj() * h[(i, j)]).sum::<C64>() * beta;
            for i in k + 1..n {
                h[(i, j)] -= v[i - k - 1] * s;
            }
        }
        for i in 0..n {
            let s: C64 = (k + 1..n).map(|j| h[(i, j)] * v[j - k - 1]).sum::<C64>() * beta;
            for j in k + 1..n {
                h[(i, j)] -= s * v[j - k - 1].conj();
            }
        }
    }

    let mut values = Vec::with_capacity(n);
    let mut hi = n - 1;
    let mut iters_since = 0;
    let mut total_iters = 0;
    loop {
        if hi == 0 {
            values.push(h[(0, 0)]);
            break;
        }
        // Find the active unreduced block [lo, hi].
        let mut lo = hi;
        while lo > 0 {
            let sub = h[(lo, lo - 1)].norm();
            let diag = h[(lo, lo)].norm() + h[(lo - 1, lo - 1)].norm();
            if sub <= f64::EPSILON * diag.max(f64::MIN_POSITIVE) {
                h[(lo, lo - 1)] = ZERO;
                break;
            }
            lo -= 1;
        }
        if lo == hi {
            values.push(h[(hi, hi)]);
            hi -= 1;
            iters_since = 0;
            continue;
        }
        iters_since += 1;
        total_iters += 1;
        if total_iters > 1000 * n {
            return Err(Error::NoConvergence("shifted QR iteration budget".into()));
        }
        let shift = if iters_since % 11 == 10 {
            h[(hi, hi)] + C64::new(h[(hi, hi - 1)].norm(), 0.0)
        } else {
            let (p, q, r, s) = (h[(hi - 1, hi - 1)], h[(hi - 1, hi)], h[(hi, hi - 1)], h[(hi, hi)]);
            let half_tr = (p + s) * 0.5;
            let root = (((p - s) * 0.5).powu(2) + q * r).sqrt();
            let (l1, l2) = (half_tr + root, half_tr - root);
            if (l1 - s).norm() < (l2 - s).norm() { l1 } else { l2 }
        };
        // QR step on the active block via Givens rotations.
        for i in lo..=hi {
            h[(i, i)] -= shift;
        }
        let mut rots = Vec::with_capacity(hi - lo);
        for k in lo..hi {
            let x = h[(k, k)];
            let y = h[(k + 1, k)];
            let r = (x.norm_sqr() + y.norm_sqr()).sqrt();
            let (c, s) = if r == 0.0 { (ONE, ZERO) } else { (x / r, y / r) };
            // [c̄ s̄; -s c] applied to rows k, k+1
            for j in k..=hi {
                let a1 = h[(k, j)];
                let a2 = h[(k + 1, j)];
                h[(k, j)] = c.conj() * a1 + s.conj() * a2;
                h[(k + 1, j)] = -s * a1 + c * a2;
            }
            rots.push((c, s));
        }
        for (idx, k) in (lo..hi).enumerate() {
            let (c, s) = rots[idx];
            for i in lo..=(k + 2).min(hi) {
                let a1 = h[(i, k)];
                let a2 = h[(i, k + 1)];
                h[(i, k)] = a1 * c + a2 * s;
                h[(i, k + 1)] = -a1 * s.conj() + a2 * c.conj();
            }
        }
        for i in lo..=hi {
            h[(i, i)] += shift;
        }
    }
    Ok(values)
}

fn eigvecs_for(a: &ComplexMatrix, values: Vec<C64>, scale: f64) -> Result<GeneralEigen> {
    let n = a.rows();
    // Group numerically equal eigenvalues.
    let mut groups: Vec<(C64, usize)> = Vec::new();
    for lam in values {
        match groups.iter_mut().find(|(g, _)| (*g - lam).norm() <= 1e-8 * scale) {
            Some(g) => g.1 += 1,
            None => groups.push((lam, 1)),
        }
    }
    let mut out_vals = Vec::new();
    let mut out_vecs = Vec::new();
    let mut defective = false;
    for (lam, mult) in groups {
        let shifted = &*a - &ComplexMatrix::identity(n).scale(lam);
        if mult == 1 {
            out_vals.push(lam);
            out_vecs.push(inverse_iteration(&shifted, scale));
        } else {
            let ns = null_space_tol(&shifted, 1e-8);
            let k = ns.cols().min(mult);
            if k < mult {
                defective = true;
            }
            if k == 0 {
                out_vals.push(lam);
                out_vecs.push(inverse_iteration(&shifted, scale));
                continue;
            }
            for j in 0..k {
                out_vals.push(lam);
                out_vecs.push(ns.column_entries(j));
            }
        }
    }
    Ok(GeneralEigen {
        values: out_vals,
        vectors: out_vecs,
        defective,
    })
}

fn null_space_tol(a: &ComplexMatrix, tol: f64) -> ComplexMatrix {
    let n = a.cols();
    let (q, r, _) = householder_qr(&a.adjoint(), true);
    let k = r.rows().min(r.cols());
    let lead = if k > 0 { r[(0, 0)].norm() } else { 0.0 };
    let rk = if lead == 0.0 {
        0
    } else {
        (0..k).take_while(|&i| r[(i, i)].norm() > tol * lead).count()
    };
    q.columns(rk..n)
}

/// A few steps of inverse iteration on a nearly singular `A - λI`.
fn inverse_iteration(shifted: &ComplexMatrix, scale: f64) -> Vec<C64> {
    let n = shifted.rows();
    let mut m = shifted.clone();
    let eps = 1e-13 * scale;
    for i in 0..n {
        m[(i, i)] += C64::new(eps, eps * 0.5);
    }
    let mut x = vec![ONE; n];
    for (i, xi) in x.iter_mut().enumerate() {
        *xi = C64::new(1.0 + 0.1 * i as f64, 0.05 * i as f64);
    }
    for _ in 0..3 {
        let b = ComplexMatrix::column_vector(&x);
        let y = lu_solve_perturbed(&m, &b);
        x = unit(y.column_entries(0));
    }
    x
}

/// Partial-pivot LU solve that replaces zero pivots instead of failing.
fn lu_solve_perturbed(a: &ComplexMatrix, b: &ComplexMatrix) -> ComplexMatrix {
    let n = a.rows();
    let mut lu = a.clone();
    let mut x = b.clone();
    let floor = f64::EPSILON * a.norm_max().max(f64::MIN_POSITIVE);
    for col in 0..n {
        let piv = (col..n)
            .max_by(|&i, &j| lu[(i, col)].norm().total_cmp(&lu[(j, col)].norm()))
            .unwrap();
        if piv != col {
            for j in 0..n {
                let t = lu[(col, j)];
                lu[(col, j)] = lu[(piv, j)];
                lu[(piv, j)] = t;
            }
            let t = x[(col, 0)];
            x[(col, 0)] = x[(piv, 0)];
            x[(piv, 0)] = t;
        }
        if lu[(col, col)].norm() < floor {
            lu[(col, col)] = C64::new(floor, 0.0);
        }
        let p = lu[(col, col)];
        for r in col + 1..n {
            let f = lu[(r, col)] / p;
            for j in col..n {
                let v = lu[(col, j)];
                lu[(r, j)] -= f * v;
            }
            let v = x[(col, 0)];
            x[(r, 0)] -= f * v;
        }
    }
    for col in (0..n).rev() {
        let mut s = x[(col, 0)];
        for k in col + 1..n {
            s -= lu[(col, k)] * x[(k, 0)];
        }
        x[(col, 0)] = s / lu[(col, col)];
    }
    x
}
