//! Interference leakage: covariance, interference percentage, alternating
//! minimization and beam-overload sweeps.
//!
//! Total leakage is `Σ_k Σ_{j≠k} (P_j/d_j) ‖U_k† H_kj V_j‖_F²` with
//! orthonormal filters. The receive step picks the `d_k` least-energy
//! eigenvectors of `Q_k`; the transmit step does the same on the reciprocal
//! network with identical link weights, so neither step can raise the total.

use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{eig_hermitian, random_channels, random_orthonormal, ChannelSet, ComplexMatrix};
use crate::model::{SystemSpec, UserSpec};
use crate::solvers::Beamformers;

/// Interference percentages below this count as zero leakage.
pub const FEASIBLE_THRESHOLD: f64 = 1e-6;
/// `tr(Q_k)` at or below this fraction of the available interference power
/// is treated as no interference at all.
pub const ZERO_TRACE_REL: f64 = 1e-24;

/// Per-transmitter power, `P_j` (defaults to 1).
fn power(powers: Option<&[f64]>, j: usize) -> f64 {
    powers.map_or(1.0, |p| p[j - 1])
}

/// `Q_k = Σ_{j≠k} (P_j/d_j) H_kj V_j V_j† H_kj†`.
pub fn interference_covariance(
    sys: &SystemSpec,
    ch: &ChannelSet,
    bf: &Beamformers,
    k: usize,
    powers: Option<&[f64]>,
) -> ComplexMatrix {
    let n = sys.user(k).rx_antennas;
    let mut q = ComplexMatrix::zeros(n, n);
    for j in (1..=sys.num_users()).filter(|&j| j != k) {
        let w = power(powers, j) / sys.user(j).dof as f64;
        let hv = ch.h(k, j) * &bf.v[j - 1];
        q = &q + &hv.matmul(&hv.adjoint()).scale(w.into());
    }
    q.hermitian_part()
}

fn available_power(sys: &SystemSpec, ch: &ChannelSet, k: usize, powers: Option<&[f64]>) -> f64 {
    (1..=sys.num_users())
        .filter(|&j| j != k)
        .map(|j| power(powers, j) / sys.user(j).dof as f64 * ch.h(k, j).norm_fro().powi(2))
        .sum()
}

/// Sum of the `d_k` smallest eigenvalues of `Q_k` over its trace.
pub fn percentage_of(q: &ComplexMatrix, d: usize, reference: f64) -> Result<f64> {
    let tr = q.trace().re;
    if tr <= ZERO_TRACE_REL * reference.max(f64::MIN_POSITIVE) {
        return Ok(0.0);
    }
    let eig = eig_hermitian(q)?;
    let low: f64 = eig.values[..d].iter().map(|&l| l.max(0.0)).sum();
    Ok((low / tr).clamp(0.0, 1.0))
}

/// Interference percentage `p_k` at receiver `k`.
pub fn interference_percentage(
    sys: &SystemSpec,
    ch: &ChannelSet,
    bf: &Beamformers,
    k: usize,
    powers: Option<&[f64]>,
) -> Result<f64> {
    let q = interference_covariance(sys, ch, bf, k, powers);
    percentage_of(&q, sys.user(k).dof, available_power(sys, ch, k, powers))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MinimizeOptions {
    pub max_iters: usize,
    /// Stop once the total leakage changes by less than this.
    pub tol: f64,
    /// Seed for the initial transmit filters.
    pub seed: u64,
    pub powers: Option<Vec<f64>>,
}

impl Default for MinimizeOptions {
    fn default() -> Self {
        Self {
            max_iters: 5000,
            tol: 1e-10,
            seed: 0,
            powers: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LeakageTrace {
    /// Total leakage after each receive update.
    pub leakage: Vec<f64>,
    pub percentages: Vec<f64>,
    pub iterations: usize,
    pub converged: bool,
}

impl LeakageTrace {
    pub fn max_percentage(&self) -> f64 {
        self.percentages.iter().copied().fold(0.0, f64::max)
    }

    pub fn mean_percentage(&self) -> f64 {
        self.percentages.iter().sum::<f64>() / self.percentages.len().max(1) as f64
    }

    /// Largest single-step increase of the total leakage.
    pub fn worst_increase(&self) -> f64 {
        self.leakage
            .windows(2)
            .map(|w| w[1] - w[0])
            .fold(f64::NEG_INFINITY, f64::max)
    }
}

/// Least-energy `d`-dimensional subspace of `q`.
fn smallest_eigvecs(q: &ComplexMatrix, d: usize) -> Result<(ComplexMatrix, f64)> {
    let eig = eig_hermitian(q)?;
    Ok((eig.vectors.columns(0..d), eig.values[..d].iter().sum()))
}

/// Alternating leakage minimization from random orthonormal transmit filters.
pub fn minimize(sys: &SystemSpec, ch: &ChannelSet, opts: &MinimizeOptions) -> Result<(Beamformers, LeakageTrace)> {
    ch.check_shapes(sys)?;
    let k = sys.num_users();
    if let Some(p) = &opts.powers {
        if p.len() != k || p.iter().any(|&x| x <= 0.0 || !x.is_finite()) {
            return Err(Error::Dimension(format!("{} positive powers expected", k)));
        }
    }
    let powers = opts.powers.as_deref();
    let recip_sys = sys.reciprocal();
    let recip_ch = ch.reciprocal();
    let mut rng = ChaCha20Rng::seed_from_u64(opts.seed);
    let mut v: Vec<ComplexMatrix> = sys
        .users()
        .iter()
        .map(|u| random_orthonormal(u.tx_antennas, u.dof, &mut rng))
        .collect();
    let mut u: Vec<ComplexMatrix> = sys
        .users()
        .iter()
        .map(|x| ComplexMatrix::zeros(x.rx_antennas, x.dof))
        .collect();
    let weight = |j: usize| power(powers, j) / sys.user(j).dof as f64;
    let mut leakage = Vec::new();
    let mut converged = false;
    for _ in 0..opts.max_iters {
        // receive step
        let mut total = 0.0;
        for kk in 1..=k {
            let n = sys.user(kk).rx_antennas;
            let mut q = ComplexMatrix::zeros(n, n);
            for j in (1..=k).filter(|&j| j != kk) {
                let hv = ch.h(kk, j) * &v[j - 1];
                q = &q + &hv.matmul(&hv.adjoint()).scale(weight(j).into());
            }
            let (vecs, low) = smallest_eigvecs(&q.hermitian_part(), sys.user(kk).dof)?;
            u[kk - 1] = vecs;
            total += low;
        }
        let done = leakage.last().is_some_and(|&prev: &f64| (prev - total).abs() < opts.tol);
        leakage.push(total);
        if done {
            converged = true;
            break;
        }
        // transmit step on the reciprocal network, same link weights
        for j in 1..=k {
            let m = recip_sys.user(j).rx_antennas;
            let mut q = ComplexMatrix::zeros(m, m);
            for kk in (1..=k).filter(|&kk| kk != j) {
                let hu = recip_ch.h(j, kk) * &u[kk - 1];
                q = &q + &hu.matmul(&hu.adjoint()).scale(weight(j).into());
            }
            v[j - 1] = smallest_eigvecs(&q.hermitian_part(), sys.user(j).dof)?.0;
        }
    }
    let bf = Beamformers::new(v, u)?;
    let percentages = (1..=k)
        .map(|kk| interference_percentage(sys, ch, &bf, kk, powers))
        .collect::<Result<Vec<_>>>()?;
    Ok((
        bf,
        LeakageTrace {
            iterations: leakage.len(),
            leakage,
            percentages,
            converged,
        },
    ))
}

/// Which user receives each extra beam beyond the base system.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub enum OverloadSchedule {
    /// Users in index order, skipping any already at `min(M, N)` beams.
    RoundRobin,
    /// Explicit 1-based user per extra beam.
    Users(Vec<usize>),
}

/// Number of points on the sweep axis (the base system plus four overloads).
pub const SWEEP_POINTS: usize = 5;

/// The systems on the sweep axis, starting from `base`.
pub fn overload_systems(base: &SystemSpec, schedule: &OverloadSchedule, points: usize) -> Result<Vec<SystemSpec>> {
    let mut users: Vec<UserSpec> = base.users().to_vec();
    let k = users.len();
    let mut out = vec![base.clone()];
    let mut cursor = 0usize;
    for step in 1..points {
        let target = match schedule {
            OverloadSchedule::RoundRobin => {
                let pick = (0..k)
                    .map(|o| (cursor + o) % k)
                    .find(|&i| users[i].dof < users[i].tx_antennas.min(users[i].rx_antennas))
                    .ok_or_else(|| Error::GuardExceeded {
                        what: "beam overload",
                        limit: users.iter().map(|u| u.tx_antennas.min(u.rx_antennas)).sum(),
                        actual: base.total_dof() + step,
                    })?;
                cursor = pick + 1;
                pick
            }
            OverloadSchedule::Users(list) => {
                let i = *list
                    .get(step - 1)
                    .ok_or_else(|| Error::Dimension(format!("schedule lists {} beams, {} needed", list.len(), points - 1)))?;
                if i == 0 || i > k {
                    return Err(Error::Dimension(format!("schedule names user {i} of {k}")));
                }
                i - 1
            }
        };
        users[target].dof += 1;
        out.push(SystemSpec::new(users.clone())?);
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub system: String,
    pub total_beams: usize,
    pub trial: usize,
    pub iter: usize,
    pub max_p: f64,
    pub mean_p: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepPoint {
    pub system: String,
    pub total_beams: usize,
    /// Median over trials of the per-trial `max_k p_k`.
    pub max_p: f64,
    /// Median over trials of the per-trial `mean_k p_k`.
    pub mean_p: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepResult {
    pub points: Vec<SweepPoint>,
    pub rows: Vec<SweepRow>,
    /// Largest leakage increase seen in any run.
    pub worst_increase: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepOptions {
    pub schedule: OverloadSchedule,
    pub trials: usize,
    pub seed: u64,
    pub minimize: MinimizeOptions,
}

impl Default for SweepOptions {
    fn default() -> Self {
        Self {
            schedule: OverloadSchedule::RoundRobin,
            trials: 5,
            seed: 0,
            minimize: MinimizeOptions::default(),
        }
    }
}

/// Seeds for trial `t`: one for the channel draw (shared by every point of
/// the sweep) and one for the filter initialisation.
fn trial_seeds(seed: u64, t: usize) -> (u64, u64) {
    let mix = |x: u64| {
        let mut z = x.wrapping_add(0x9E37_79B9_7F4A_7C15);
        z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
        z ^ (z >> 31)
    };
    let a = mix(seed ^ mix(t as u64));
    (a, mix(a))
}

fn median(mut xs: Vec<f64>) -> f64 {
    xs.sort_by(f64::total_cmp);
    let n = xs.len();
    if n == 0 {
        return f64::NAN;
    }
    if n % 2 == 1 {
        xs[n / 2]
    } else {
        0.5 * (xs[n / 2 - 1] + xs[n / 2])
    }
}

/// Runs [`minimize`] on `trials` channel draws at each of the
/// [`SWEEP_POINTS`] beam counts.
pub fn beam_sweep(base: &SystemSpec, opts: &SweepOptions) -> Result<SweepResult> {
    let systems = overload_systems(base, &opts.schedule, SWEEP_POINTS)?;
    let mut points = Vec::new();
    let mut rows = Vec::new();
    let mut worst = f64::NEG_INFINITY;
    for sys in &systems {
        let name = sys.render();
        let runs: Vec<(SweepRow, f64)> = (0..opts.trials)
            .into_par_iter()
            .map(|t| {
                let (ch_seed, init_seed) = trial_seeds(opts.seed, t);
                let ch = random_channels(sys, ch_seed);
                let mopts = MinimizeOptions {
                    seed: init_seed,
                    ..opts.minimize.clone()
                };
                let (_, trace) = minimize(sys, &ch, &mopts)?;
                Ok((
                    SweepRow {
                        system: name.clone(),
                        total_beams: sys.total_dof(),
                        trial: t,
                        iter: trace.iterations,
                        max_p: trace.max_percentage(),
                        mean_p: trace.mean_percentage(),
                    },
                    trace.worst_increase(),
                ))
            })
            .collect::<Result<_>>()?;
        points.push(SweepPoint {
            system: name.clone(),
            total_beams: sys.total_dof(),
            max_p: median(runs.iter().map(|(r, _)| r.max_p).collect()),
            mean_p: median(runs.iter().map(|(r, _)| r.mean_p).collect()),
        });
        for (row, inc) in runs {
            worst = worst.max(inc);
            rows.push(row);
        }
    }
    Ok(SweepResult {
        points,
        rows,
        worst_increase: worst,
    })
}

impl SweepResult {
    /// One row per trial: `system,total_beams,trial,iter,max_p,mean_p`.
    pub fn to_csv(&self) -> Result<String> {
        let mut w = csv::Writer::from_writer(Vec::new());
        for row in &self.rows {
            w.serialize(row).map_err(|e| Error::Json(e.to_string()))?;
        }
        let bytes = w.into_inner().map_err(|e| Error::Json(e.to_string()))?;
        Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::parse_system;
    use crate::solvers::solve_asym_2323;
    use crate::solvers::Branch;

    #[test]
    fn aligned_solution_has_no_leakage() {
        let sys = parse_system("(2x3,1)^2(3x2,1)^2").unwrap();
        let ch = random_channels(&sys, 3);
        let bf = solve_asym_2323(&ch, Branch::Dominant).unwrap();
        for k in 1..=4 {
            let q = interference_covariance(&sys, &ch, &bf, k, None);
            let eig = eig_hermitian(&q).unwrap();
            assert!(eig.values[0] <= 1e-12 * q.trace().re);
            assert!(interference_percentage(&sys, &ch, &bf, k, None).unwrap() <= 1e-6);
        }
    }

    #[test]
    fn percentage_edge_cases() {
        let q = ComplexMatrix::from_real(2, 2, &[2.0, 0.5, 0.5, 1.0]);
        assert!((percentage_of(&q, 2, 1.0).unwrap() - 1.0).abs() < 1e-12);
        let x = ComplexMatrix::from_real(3, 1, &[1.0, 2.0, -1.0]);
        let rank1 = x.matmul(&x.adjoint());
        assert!(percentage_of(&rank1, 1, 1.0).unwrap() < 1e-12);
        assert_eq!(percentage_of(&ComplexMatrix::zeros(2, 2), 1, 1.0).unwrap(), 0.0);
    }

    #[test]
    fn minimize_feasible_and_monotone() {
        let sys = parse_system("(2x3,1)^4").unwrap();
        let ch = random_channels(&sys, 1);
        let (_, trace) = minimize(&sys, &ch, &MinimizeOptions::default()).unwrap();
        assert!(trace.max_percentage() < FEASIBLE_THRESHOLD, "{:?}", trace.percentages);
        assert!(trace.worst_increase() <= 1e-12);
    }

    #[test]
    fn minimize_improper_stays_positive() {
        let sys = parse_system("(1x2,1)^3").unwrap();
        let ch = random_channels(&sys, 1);
        let (_, trace) = minimize(&sys, &ch, &MinimizeOptions::default()).unwrap();
        assert!(trace.max_percentage() > 1e-3);
    }

    #[test]
    fn round_robin_schedule() {
        let base = parse_system("(2x3,1)^4").unwrap();
        let s = overload_systems(&base, &OverloadSchedule::RoundRobin, 5).unwrap();
        let names: Vec<String> = s.iter().map(SystemSpec::render).collect();
        assert_eq!(names[1], "(2x3,2)(2x3,1)^3");
        assert_eq!(names[4], "(2x3,2)^4");
        let base = parse_system("(1x3,1)(2x3,1)").unwrap();
        let s = overload_systems(&base, &OverloadSchedule::RoundRobin, 2).unwrap();
        assert_eq!(s[1].render(), "(1x3,1)(2x3,2)");
        assert!(overload_systems(&base, &OverloadSchedule::RoundRobin, 3).is_err());
    }

    #[test]
    fn sweep_csv_shape() {
        let base = parse_system("(2x3,1)^4").unwrap();
        let opts = SweepOptions {
            trials: 2,
            minimize: MinimizeOptions {
                max_iters: 50,
                ..Default::default()
            },
            ..Default::default()
        };
        let r = beam_sweep(&base, &opts).unwrap();
        assert_eq!(r.points.len(), 5);
        assert_eq!(r.rows.len(), 10);
        let csv = r.to_csv().unwrap();
        let mut lines = csv.lines();
        assert_eq!(lines.next(), Some("system,total_beams,trial,iter,max_p,mean_p"));
        assert!(lines.next().unwrap().starts_with("\"(2x3,1)^4\",4,0,"));
    }
}
