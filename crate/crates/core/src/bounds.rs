//! Single-user, two-user and cooperative DoF outer bounds.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{SystemSpec, UserSpec};

/// Largest user count for which all set partitions are enumerated.
pub const MAX_COOPERATIVE_USERS: usize = 10;

/// `d <= min(M, N)` for each user.
pub fn check_single_user(users: &[UserSpec]) -> Vec<bool> {
    users
        .iter()
        .map(|u| u.dof <= u.tx_antennas.min(u.rx_antennas))
        .collect()
}

/// Two-user DoF outer bound
/// `min(M_a + M_b, N_a + N_b, max(M_a, N_b), max(M_b, N_a))`.
pub fn pairwise_bound(a: &UserSpec, b: &UserSpec) -> usize {
    (a.tx_antennas + b.tx_antennas)
        .min(a.rx_antennas + b.rx_antennas)
        .min(a.tx_antennas.max(b.rx_antennas))
        .min(b.tx_antennas.max(a.rx_antennas))
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PairViolation {
    /// 1-based user (or group) indices.
    pub first: usize,
    pub second: usize,
    pub bound: usize,
    pub demand: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CooperativeViolation {
    /// Groups of 1-based user indices.
    pub partition: Vec<Vec<usize>>,
    /// Indices into `partition` (0-based).
    pub pair: (usize, usize),
    pub merged: (UserSpec, UserSpec),
    pub bound: usize,
}

impl CooperativeViolation {
    pub fn describe(&self) -> String {
        describe_partition(&self.partition)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BoundReport {
    pub single_user_ok: bool,
    pub pairwise_violations: Vec<PairViolation>,
    pub cooperative_violations: Vec<CooperativeViolation>,
    pub partitions_checked: usize,
}

impl BoundReport {
    pub fn passes(&self) -> bool {
        self.single_user_ok
            && self.pairwise_violations.is_empty()
            && self.cooperative_violations.is_empty()
    }
}

/// Renders `[[1,2],[3]]` as `{1,2}|{3}`.
pub fn describe_partition(partition: &[Vec<usize>]) -> String {
    partition
        .iter()
        .map(|g| {
            let inner: Vec<String> = g.iter().map(usize::to_string).collect();
            format!("{{{}}}", inner.join(","))
        })
        .collect::<Vec<_>>()
        .join("|")
}

/// Direct pairwise check between all users.
pub fn pairwise_violations(users: &[UserSpec]) -> Vec<PairViolation> {
    let mut out = Vec::new();
    for i in 0..users.len() {
        for j in i + 1..users.len() {
            let bound = pairwise_bound(&users[i], &users[j]);
            let demand = users[i].dof + users[j].dof;
            if demand > bound {
                out.push(PairViolation {
                    first: i + 1,
                    second: j + 1,
                    bound,
                    demand,
                });
            }
        }
    }
    out
}

/// Merges each group (sums of M, N and d) and applies [`pairwise_bound`]
/// to every pair of merged groups.
pub fn partition_violations(users: &[UserSpec], partition: &[Vec<usize>]) -> Vec<CooperativeViolation> {
    let merged: Vec<UserSpec> = partition
        .iter()
        .map(|g| {
            g.iter()
                .map(|&k| users[k - 1])
                .reduce(|a, b| a.merge(&b))
                .expect("groups are nonempty")
        })
        .collect();
    let mut out = Vec::new();
    for a in 0..merged.len() {
        for b in a + 1..merged.len() {
            let bound = pairwise_bound(&merged[a], &merged[b]);
            if merged[a].dof + merged[b].dof > bound {
                out.push(CooperativeViolation {
                    partition: partition.to_vec(),
                    pair: (a, b),
                    merged: (merged[a], merged[b]),
                    bound,
                });
            }
        }
    }
    out
}

/// Every set partition of `{1..k}` as groups of 1-based indices, generated
/// from restricted growth strings.
pub fn set_partitions(k: usize) -> Vec<Vec<Vec<usize>>> {
    let mut out = Vec::new();
    if k == 0 {
        return out;
    }
    let mut rgs = vec![0usize; k];
    loop {
        let blocks = rgs.iter().max().unwrap() + 1;
        let mut groups = vec![Vec::new(); blocks];
        for (i, &b) in rgs.iter().enumerate() {
            groups[b].push(i + 1);
        }
        out.push(groups);

        // next restricted growth string
        let mut i = k - 1;
        loop {
            if i == 0 {
                return out;
            }
            let prefix_max = rgs[..i].iter().copied().max().unwrap();
            if rgs[i] <= prefix_max {
                rgs[i] += 1;
                for x in &mut rgs[i + 1..] {
                    *x = 0;
                }
                break;
            }
            i -= 1;
        }
    }
}

/// Bell number `B(k)`.
pub fn bell_number(k: usize) -> usize {
    let mut row = vec![1usize];
    for _ in 0..k {
        let mut next = vec![*row.last().unwrap()];
        for &x in &row {
            next.push(next.last().unwrap() + x);
        }
        row = next;
    }
    row[0]
}

/// Full bound report: single-user, direct pairwise, and every cooperative
/// grouping that merges at least two users.
pub fn cooperative_check(sys: &SystemSpec, max_partitions: usize) -> Result<BoundReport> {
    let users = sys.users();
    let k = users.len();
    if k > MAX_COOPERATIVE_USERS {
        return Err(Error::GuardExceeded {
            what: "cooperative user count",
            limit: MAX_COOPERATIVE_USERS,
            actual: k,
        });
    }
    let total = bell_number(k);
    if total > max_partitions {
        return Err(Error::GuardExceeded {
            what: "set partitions",
            limit: max_partitions,
            actual: total,
        });
    }
    let single_user_ok = check_single_user(users).into_iter().all(|ok| ok);
    let pairwise = pairwise_violations(users);
    let mut cooperative = Vec::new();
    for p in set_partitions(k) {
        if p.len() < 2 || p.len() == k {
            continue;
        }
        cooperative.extend(partition_violations(users, &p));
    }
    Ok(BoundReport {
        single_user_ok,
        pairwise_violations: pairwise,
        cooperative_violations: cooperative,
        partitions_checked: total,
    })
}
