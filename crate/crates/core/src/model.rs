//! Network description, spec-string grammar, and the equation/variable
//! bookkeeping behind the counting quantities `N_e` and `N_v`.
//!
//! A system is written as a concatenation of terms `(MxN,d)`, optionally
//! followed by `^K` to repeat a term `K` times, e.g. `(2x3,1)^2(3x2,1)^2`.
//! `M` is the transmit antenna count, `N` the receive antenna count and `d`
//! the number of streams. Whitespace is ignored. Users are numbered from 1.

use std::collections::BTreeSet;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Antennas and demanded streams of one transmitter/receiver pair.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct UserSpec {
    pub tx_antennas: usize,
    pub rx_antennas: usize,
    pub dof: usize,
}

impl UserSpec {
    pub const fn new(tx_antennas: usize, rx_antennas: usize, dof: usize) -> Self {
        Self {
            tx_antennas,
            rx_antennas,
            dof,
        }
    }

    pub fn is_valid(&self) -> bool {
        self.tx_antennas > 0
            && self.rx_antennas > 0
            && self.dof > 0
            && self.dof <= self.tx_antennas.min(self.rx_antennas)
    }

    /// Free entries of one reduced transmit beam (`M - d`).
    pub fn tx_free(&self) -> usize {
        self.tx_antennas - self.dof
    }

    /// Free entries of one reduced receive beam (`N - d`).
    pub fn rx_free(&self) -> usize {
        self.rx_antennas - self.dof
    }

    /// Exchanges the roles of transmit and receive antennas.
    pub fn reciprocal(&self) -> Self {
        Self::new(self.rx_antennas, self.tx_antennas, self.dof)
    }

    /// Joint transmitter/receiver of two cooperating users.
    pub fn merge(&self, other: &UserSpec) -> Self {
        Self::new(
            self.tx_antennas + other.tx_antennas,
            self.rx_antennas + other.rx_antennas,
            self.dof + other.dof,
        )
    }
}

impl fmt::Display for UserSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}x{},{})", self.tx_antennas, self.rx_antennas, self.dof)
    }
}

/// An ordered list of at least two users.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct SystemSpec {
    users: Vec<UserSpec>,
}

impl SystemSpec {
    pub fn new(users: Vec<UserSpec>) -> Result<Self> {
        if users.len() < 2 {
            return Err(Error::TooFewUsers(users.len()));
        }
        for (i, u) in users.iter().enumerate() {
            if !u.is_valid() {
                return Err(Error::InvalidUser {
                    user: i + 1,
                    m: u.tx_antennas,
                    n: u.rx_antennas,
                    d: u.dof,
                });
            }
        }
        Ok(Self { users })
    }

    /// `K` copies of the same user.
    pub fn symmetric_system(m: usize, n: usize, d: usize, k: usize) -> Result<Self> {
        Self::new(vec![UserSpec::new(m, n, d); k])
    }

    pub fn users(&self) -> &[UserSpec] {
        &self.users
    }

    /// 1-based user lookup.
    pub fn user(&self, k: usize) -> &UserSpec {
        &self.users[k - 1]
    }

    pub fn num_users(&self) -> usize {
        self.users.len()
    }

    pub fn symmetric(&self) -> bool {
        self.users.windows(2).all(|w| w[0] == w[1])
    }

    pub fn total_dof(&self) -> usize {
        self.users.iter().map(|u| u.dof).sum()
    }

    pub fn single_beam(&self) -> bool {
        self.users.iter().all(|u| u.dof == 1)
    }

    pub fn reciprocal(&self) -> Self {
        Self {
            users: self.users.iter().map(UserSpec::reciprocal).collect(),
        }
    }

    /// Canonical spec string with run-length compression of adjacent
    /// identical users.
    pub fn render(&self) -> String {
        let mut out = String::new();
        let mut i = 0;
        while i < self.users.len() {
            let u = self.users[i];
            let mut run = 1;
            while i + run < self.users.len() && self.users[i + run] == u {
                run += 1;
            }
            out.push_str(&u.to_string());
            if run > 1 {
                out.push_str(&format!("^{run}"));
            }
            i += run;
        }
        out
    }

    /// All zero-forcing equations, ordered lexicographically by `(k, j, m, n)`.
    pub fn enumerate_equations(&self) -> Vec<EquationId> {
        let k_users = self.num_users();
        let mut eqs = Vec::with_capacity(count_equations(self));
        for k in 1..=k_users {
            for j in 1..=k_users {
                if j == k {
                    continue;
                }
                for m in 1..=self.user(k).dof {
                    for n in 1..=self.user(j).dof {
                        eqs.push(EquationId { rx_user: k, tx_user: j, rx_beam: m, tx_beam: n });
                    }
                }
            }
        }
        eqs
    }

    /// All reduced-filter variables: every transmit slot ordered by
    /// `(user, beam, slot)`, then every receive slot in the same order.
    pub fn variables(&self) -> Vec<VariableId> {
        let mut vars = Vec::with_capacity(count_variables(self));
        for side in [Side::Transmit, Side::Receive] {
            for (i, u) in self.users.iter().enumerate() {
                let free = match side {
                    Side::Transmit => u.tx_free(),
                    Side::Receive => u.rx_free(),
                };
                for beam in 1..=u.dof {
                    for slot in 1..=free {
                        vars.push(VariableId { side, user: i + 1, beam, slot });
                    }
                }
            }
        }
        vars
    }

    /// Position of `var` in [`SystemSpec::variables`].
    pub fn variable_index(&self, var: &VariableId) -> usize {
        let free = |u: &UserSpec| match var.side {
            Side::Transmit => u.tx_free(),
            Side::Receive => u.rx_free(),
        };
        let mut offset = match var.side {
            Side::Transmit => 0,
            Side::Receive => self.users.iter().map(|u| u.dof * u.tx_free()).sum(),
        };
        for u in &self.users[..var.user - 1] {
            offset += u.dof * free(u);
        }
        let u = self.user(var.user);
        offset + (var.beam - 1) * free(u) + (var.slot - 1)
    }

    /// The variables appearing in equation `eq`: the transmit slots of beam
    /// `n` of user `j` followed by the receive slots of beam `m` of user `k`.
    pub fn equation_variables(&self, eq: &EquationId) -> Vec<VariableId> {
        let tx = self.user(eq.tx_user);
        let rx = self.user(eq.rx_user);
        let transmit = (1..=tx.tx_free()).map(|slot| VariableId {
            side: Side::Transmit,
            user: eq.tx_user,
            beam: eq.tx_beam,
            slot,
        });
        let receive = (1..=rx.rx_free()).map(|slot| VariableId {
            side: Side::Receive,
            user: eq.rx_user,
            beam: eq.rx_beam,
            slot,
        });
        transmit.chain(receive).collect()
    }

    /// Same as [`SystemSpec::equation_variables`] as indices into the
    /// canonical variable order.
    pub fn equation_variable_indices(&self, eq: &EquationId) -> Vec<usize> {
        self.equation_variables(eq)
            .iter()
            .map(|v| self.variable_index(v))
            .collect()
    }

    /// Distinct variables referenced by at least one equation.
    pub fn referenced_variables(&self) -> BTreeSet<VariableId> {
        self.enumerate_equations()
            .iter()
            .flat_map(|e| self.equation_variables(e))
            .collect()
    }
}

impl fmt::Display for SystemSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.render())
    }
}

impl FromStr for SystemSpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        parse_system(s)
    }
}

impl Serialize for SystemSpec {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(&self.render())
    }
}

impl<'de> Deserialize<'de> for SystemSpec {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        parse_system(&s).map_err(serde::de::Error::custom)
    }
}

/// Zero-forcing equation `u_m^[k]† H^[kj] v_n^[j] = 0`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct EquationId {
    pub rx_user: usize,
    pub tx_user: usize,
    pub rx_beam: usize,
    pub tx_beam: usize,
}

impl fmt::Display for EquationId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "E[{},{};{},{}]",
            self.rx_user, self.tx_user, self.rx_beam, self.tx_beam
        )
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Side {
    Transmit,
    Receive,
}

/// A free entry of a reduced transmit or receive filter.
///
/// For receive filters the variable stands for the conjugate of the filter
/// entry so that every equation is an ordinary polynomial.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct VariableId {
    pub side: Side,
    pub user: usize,
    pub beam: usize,
    pub slot: usize,
}

impl fmt::Display for VariableId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let tag = match self.side {
            Side::Transmit => 'v',
            Side::Receive => 'u',
        };
        write!(f, "{tag}[{}]{}.{}", self.user, self.beam, self.slot)
    }
}

/// `N_e = Σ_{k≠j} d^[k] d^[j]`.
pub fn count_equations(sys: &SystemSpec) -> usize {
    let total: usize = sys.total_dof();
    let squares: usize = sys.users().iter().map(|u| u.dof * u.dof).sum();
    total * total - squares
}

/// `N_v = Σ_k d^[k] (M^[k] + N^[k] - 2 d^[k])`.
pub fn count_variables(sys: &SystemSpec) -> usize {
    sys.users()
        .iter()
        .map(|u| u.dof * (u.tx_free() + u.rx_free()))
        .sum()
}

pub fn parse_system(text: &str) -> Result<SystemSpec> {
    let mut p = Parser::new(text);
    let mut users = Vec::new();
    p.skip_ws();
    if p.at_end() {
        return Err(p.error("empty system"));
    }
    while !p.at_end() {
        p.expect('(')?;
        let m = p.integer()?;
        p.expect('x')?;
        let n = p.integer()?;
        p.expect(',')?;
        let d = p.integer()?;
        p.expect(')')?;
        let mut reps = 1;
        p.skip_ws();
        if p.peek() == Some('^') {
            p.bump();
            reps = p.integer()?;
            if reps == 0 {
                return Err(p.error("repetition count must be positive"));
            }
        }
        users.extend(std::iter::repeat_n(UserSpec::new(m, n, d), reps));
        p.skip_ws();
    }
    SystemSpec::new(users)
}

struct Parser<'a> {
    chars: Vec<(usize, char)>,
    idx: usize,
    src: &'a str,
}

impl<'a> Parser<'a> {
    fn new(src: &'a str) -> Self {
        Self {
            chars: src.char_indices().collect(),
            idx: 0,
            src,
        }
    }

    fn pos(&self) -> usize {
        self.chars.get(self.idx).map_or(self.src.len(), |c| c.0)
    }

    fn error(&self, msg: impl Into<String>) -> Error {
        Error::Syntax {
            pos: self.pos(),
            msg: msg.into(),
        }
    }

    fn skip_ws(&mut self) {
        while self.chars.get(self.idx).is_some_and(|c| c.1.is_whitespace()) {
            self.idx += 1;
        }
    }

    fn at_end(&self) -> bool {
        self.idx >= self.chars.len()
    }

    fn peek(&self) -> Option<char> {
        self.chars.get(self.idx).map(|c| c.1)
    }

    fn bump(&mut self) {
        self.idx += 1;
    }

    fn expect(&mut self, want: char) -> Result<()> {
        self.skip_ws();
        match self.peek() {
            Some(c) if c == want => {
                self.bump();
                Ok(())
            }
            Some(c) => Err(self.error(format!("expected '{want}', found '{c}'"))),
            None => Err(self.error(format!("expected '{want}', found end of input"))),
        }
    }

    fn integer(&mut self) -> Result<usize> {
        self.skip_ws();
        let start = self.idx;
        let mut value: usize = 0;
        while let Some(c) = self.peek().and_then(|c| c.to_digit(10)) {
            value = value
                .checked_mul(10)
                .and_then(|v| v.checked_add(c as usize))
                .ok_or_else(|| self.error("integer overflow"))?;
            self.bump();
        }
        if self.idx == start {
            return Err(self.error("expected integer"));
        }
        Ok(value)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sys(s: &str) -> SystemSpec {
        parse_system(s).unwrap()
    }

    #[test]
    fn parse_repetition() {
        let s = sys("(2x3,1)^4");
        assert_eq!(s.users(), &[UserSpec::new(2, 3, 1); 4]);
        let s = sys("(2x3,1)^2(3x2,1)^2");
        assert_eq!(
            s.users(),
            &[
                UserSpec::new(2, 3, 1),
                UserSpec::new(2, 3, 1),
                UserSpec::new(3, 2, 1),
                UserSpec::new(3, 2, 1)
            ]
        );
        assert_eq!(sys(" ( 2 x 3 , 1 ) ^ 2 ( 3x2,1)").num_users(), 3);
    }

    #[test]
    fn parse_errors() {
        assert_eq!(parse_system("(3x3,2)"), Err(Error::TooFewUsers(1)));
        assert!(matches!(
            parse_system("(2x3,3)^2"),
            Err(Error::InvalidUser { user: 1, .. })
        ));
        assert!(matches!(parse_system("(2x3;1)^2"), Err(Error::Syntax { pos: 4, .. })));
        assert!(matches!(parse_system(""), Err(Error::Syntax { .. })));
        assert!(matches!(parse_system("(2x3,1)^"), Err(Error::Syntax { .. })));
        assert!(matches!(parse_system("(2x3,1)^0(1x1,1)"), Err(Error::Syntax { .. })));
        assert!(matches!(parse_system("(0x3,0)^2"), Err(Error::InvalidUser { .. })));
    }

    #[test]
    fn counts_from_examples() {
        assert_eq!(count_equations(&sys("(5x5,2)^4")), 48);
        assert_eq!(count_equations(&sys("(5x5,3)(5x5,2)^3")), 60);
        assert_eq!(count_equations(&sys("(2x2,1)(2x3,1)^3")), 12);
        assert_eq!(count_variables(&sys("(2x2,1)(2x3,1)^3")), 11);
        assert_eq!(count_variables(&sys("(5x5,3)(5x5,2)^3")), 48);
        assert_eq!(count_variables(&sys("(2x3,1)^4")), 4 * (2 + 3 - 2));
    }

    #[test]
    fn enumerate_small() {
        let s = sys("(2x1,1)(1x2,1)");
        let eqs = s.enumerate_equations();
        assert_eq!(
            eqs,
            vec![
                EquationId { rx_user: 1, tx_user: 2, rx_beam: 1, tx_beam: 1 },
                EquationId { rx_user: 2, tx_user: 1, rx_beam: 1, tx_beam: 1 },
            ]
        );
        assert!(s.equation_variables(&eqs[0]).is_empty());
        assert_eq!(sys("(2x3,1)^4").enumerate_equations().len(), 12);
        assert_eq!(sys("(5x5,2)^4").enumerate_equations().len(), 48);
    }

    #[test]
    fn equation_variable_sets() {
        let s = sys("(2x3,1)^4");
        let e = EquationId { rx_user: 1, tx_user: 2, rx_beam: 1, tx_beam: 1 };
        let vars = s.equation_variables(&e);
        assert_eq!(vars.len(), 3);
        assert_eq!(vars.iter().filter(|v| v.side == Side::Transmit).count(), 1);
        assert!(vars.iter().all(|v| (v.side == Side::Transmit && v.user == 2)
            || (v.side == Side::Receive && v.user == 1)));

        let s = sys("(5x5,2)^4");
        for e in s.enumerate_equations() {
            assert_eq!(s.equation_variables(&e).len(), 6);
        }
    }

    #[test]
    fn variable_index_matches_order() {
        let s = sys("(2x3,1)(5x5,2)(3x4,2)");
        for (i, v) in s.variables().iter().enumerate() {
            assert_eq!(s.variable_index(v), i);
        }
    }

    #[test]
    fn render_compresses_runs() {
        assert_eq!(sys("(2x3,1)(2x3,1)(3x2,1)").render(), "(2x3,1)^2(3x2,1)");
        assert_eq!(sys("(1x2,1)(2x1,1)(1x2,1)").render(), "(1x2,1)(2x1,1)(1x2,1)");
    }
}
