//! The sign vector S(q, p) and the constraints the marginals conditions put
//! on it.
//!
//! Signs are encoded additively, S = (-1)^s with s in GF(2). A line condition
//! `S(a) S(b) = tau^<b,a> epsilon(b,a) S([a+b])` becomes
//! `s(a) + s(b) + s([a+b]) = t` with `(-1)^t` the (necessarily real) phase.
//!
//! Free variables are chosen by a fixed preference order: points `(1, p)`
//! by ascending p, then `(q, 1)` by ascending q, then the rest row-major.
//! For N = 2^n this reproduces the canonical free signs S(1, p0) and
//! S(q0, 1) with q0 even.

use std::collections::HashSet;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gf2::{BitRow, Echelon, Insert};
use crate::lines::{IsotropicLine, LineType};
use crate::phase::{epsilon, eta, TauPhase};
use crate::ring::{grid_points, symplectic_lift, PhasePoint};

/// A total map from grid points to +-1, stored row-major.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct SignAssignment {
    n: u32,
    values: Vec<i8>,
}

impl SignAssignment {
    pub fn all_plus(n: u32) -> Self {
        Self {
            n,
            values: vec![1; (n * n) as usize],
        }
    }

    pub fn from_fn(n: u32, f: impl Fn(PhasePoint) -> i8) -> Self {
        let values = grid_points(n)
            .map(|s| {
                let v = f(s);
                assert!(v == 1 || v == -1, "signs are +-1");
                v
            })
            .collect();
        Self { n, values }
    }

    /// From GF(2) exponents in row-major order.
    pub fn from_bits(n: u32, bits: &BitRow) -> Self {
        let values = (0..(n * n) as usize)
            .map(|i| if bits.get(i) { -1 } else { 1 })
            .collect();
        Self { n, values }
    }

    pub fn n(&self) -> u32 {
        self.n
    }

    pub fn get(&self, s: PhasePoint) -> i8 {
        debug_assert_eq!(s.modulus(), self.n);
        self.values[s.index()]
    }

    pub fn set(&mut self, s: PhasePoint, value: i8) {
        assert!(value == 1 || value == -1);
        self.values[s.index()] = value;
    }

    pub fn values(&self) -> &[i8] {
        &self.values
    }

    /// `grid[q][p]`.
    pub fn grid(&self) -> Vec<Vec<i8>> {
        self.values.chunks(self.n as usize).map(<[i8]>::to_vec).collect()
    }

    /// S(sigma) = eta_sigma S([N - sigma]) everywhere; returns the first violation.
    pub fn symmetry_violation(&self) -> Option<PhasePoint> {
        grid_points(self.n).find(|&s| self.get(s) != eta(s) * self.get(s.neg()))
    }

    /// S(q, 0) = S(0, p) = +1.
    pub fn has_standard_marginals(&self) -> bool {
        grid_points(self.n)
            .filter(|s| s.q() == 0 || s.p() == 0)
            .all(|s| self.get(s) == 1)
    }

    /// Evaluates the projector condition multiplicatively on every ordered pair
    /// of the line.
    pub fn satisfies_line(&self, line: &IsotropicLine) -> bool {
        line.points.iter().all(|&a| {
            line.points.iter().all(|&b| {
                let phase = line_phase(b, a);
                self.get(a) * self.get(b) == phase * self.get(a.add(b))
            })
        })
    }
}

impl fmt::Display for SignAssignment {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for row in self.grid() {
            let cells: Vec<&str> = row.iter().map(|&v| if v == 1 { "+" } else { "-" }).collect();
            writeln!(f, "{}", cells.join(" "))?;
        }
        Ok(())
    }
}

/// `tau^<b,a> epsilon(b,a)` for two points on a common line, where it is +-1.
fn line_phase(b: PhasePoint, a: PhasePoint) -> i8 {
    let tau = TauPhase::new(symplectic_lift(b, a), a.modulus());
    let sign = tau
        .as_sign()
        .unwrap_or_else(|| panic!("tau^<{b},{a}> is not real: points are not on a common line"));
    sign * epsilon(b, a)
}

/// Where an equation came from.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Provenance {
    /// S(q, 0) = 1 or S(0, p) = 1.
    StandardMarginal { point: (u32, u32) },
    /// S(sigma) = eta S([N - sigma]).
    Symmetry { point: (u32, u32) },
    /// Projector condition on `line` for the ordered pair (a, b).
    Line {
        line: usize,
        line_type: LineType,
        a: (u32, u32),
        b: (u32, u32),
    },
}

fn coords(s: PhasePoint) -> (u32, u32) {
    (s.q(), s.p())
}

/// `sum of s(v) over vars = parity` (mod 2).
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Equation {
    /// Row-major variable indices with repeated pairs cancelled, sorted.
    pub vars: Vec<usize>,
    pub parity: bool,
    pub source: Provenance,
}

impl Equation {
    fn new(vars: impl IntoIterator<Item = usize>, parity: bool, source: Provenance) -> Self {
        let mut v: Vec<usize> = vars.into_iter().collect();
        v.sort_unstable();
        let mut reduced: Vec<usize> = Vec::with_capacity(v.len());
        for x in v {
            if reduced.last() == Some(&x) {
                reduced.pop();
            } else {
                reduced.push(x);
            }
        }
        Self {
            vars: reduced,
            parity,
            source,
        }
    }

    pub fn holds(&self, s: &SignAssignment) -> bool {
        let lhs = self.vars.iter().fold(false, |acc, &v| acc ^ (s.values[v] == -1));
        lhs == self.parity
    }
}

#[derive(Clone, Debug)]
pub struct SignSystem {
    pub n: u32,
    pub equations: Vec<Equation>,
}

impl SignSystem {
    pub fn num_variables(&self) -> usize {
        (self.n * self.n) as usize
    }

    pub fn is_satisfied_by(&self, s: &SignAssignment) -> bool {
        self.equations.iter().all(|e| e.holds(s))
    }
}

/// Constraint equations in the order: standard marginals, symmetry, then each
/// line's ordered pairs (including a = b) in the order given.
pub fn build_system(
    n: u32,
    lines: &[&IsotropicLine],
    include_symmetry: bool,
    include_standard_marginals: bool,
) -> SignSystem {
    let mut equations = Vec::new();
    if include_standard_marginals {
        for s in grid_points(n).filter(|s| s.q() == 0 || s.p() == 0) {
            equations.push(Equation::new(
                [s.index()],
                false,
                Provenance::StandardMarginal { point: coords(s) },
            ));
        }
    }
    if include_symmetry {
        for s in grid_points(n) {
            equations.push(Equation::new(
                [s.index(), s.neg().index()],
                eta(s) == -1,
                Provenance::Symmetry { point: coords(s) },
            ));
        }
    }
    for line in lines {
        debug_assert_eq!(line.n, n);
        for &a in &line.points {
            for &b in &line.points {
                let parity = line_phase(b, a) == -1;
                equations.push(Equation::new(
                    [a.index(), b.index(), a.add(b).index()],
                    parity,
                    Provenance::Line {
                        line: line.id,
                        line_type: line.line_type,
                        a: coords(a),
                        b: coords(b),
                    },
                ));
            }
        }
    }
    SignSystem { n, equations }
}

/// Lines on which the marginals condition can hold together: all lines for
/// odd N, otherwise those whose 2-power component is of type a.
pub fn admissible_lines(lines: &[IsotropicLine]) -> Vec<&IsotropicLine> {
    lines.iter().filter(|l| l.line_type != LineType::B).collect()
}

/// The system used by default: admissible lines (optionally followed by the
/// type-b lines), the standard marginals and the reflection symmetry.
pub fn standard_system(n: u32, lines: &[IsotropicLine], include_type_b: bool) -> SignSystem {
    let mut chosen = admissible_lines(lines);
    if include_type_b {
        chosen.extend(lines.iter().filter(|l| l.line_type == LineType::B));
    }
    build_system(n, &chosen, true, true)
}

/// Solution family of [`standard_system`] without the type-b lines.
pub fn admissible_family(n: u32) -> Result<SignFamily> {
    crate::check_dimension(n)?;
    let lines = crate::lines::enumerate_lines(n)?;
    solve(&standard_system(n, &lines, false)).into_family()
}

/// Member of the admissible family for a `--sign-choice` bit string; an
/// absent choice means all free signs +1.
pub fn signs_for_choice(n: u32, choice: Option<&[bool]>) -> Result<SignAssignment> {
    let family = admissible_family(n)?;
    match choice {
        Some(bits) => family.member(bits),
        None => Ok(family.particular()),
    }
}

/// Variable preference: smaller rank = preferred as a free variable.
fn preference_order(n: u32) -> Vec<usize> {
    let mut order: Vec<usize> = Vec::with_capacity((n * n) as usize);
    let mut taken = vec![false; (n * n) as usize];
    let mut take = |s: PhasePoint, order: &mut Vec<usize>| {
        if !taken[s.index()] {
            taken[s.index()] = true;
            order.push(s.index());
        }
    };
    for p in 0..n {
        take(PhasePoint::new(1, p as i64, n), &mut order);
    }
    for q in 0..n {
        take(PhasePoint::new(q as i64, 1, n), &mut order);
    }
    for s in grid_points(n) {
        take(s, &mut order);
    }
    order
}

/// One step of a derivation: `point` takes `value` from `source`, given the
/// values of `uses`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DerivationStep {
    pub point: (u32, u32),
    pub value: i8,
    pub source: Provenance,
    pub uses: Vec<(u32, u32)>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Derivation {
    pub value: i8,
    /// Ordered so that each step only uses points fixed by earlier steps.
    pub steps: Vec<DerivationStep>,
}

/// Two incompatible values for the sign at `point`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Witness {
    pub point: (u32, u32),
    pub first: Derivation,
    pub second: Derivation,
}

/// A consistent system with free parameters.
#[derive(Clone, Debug)]
pub struct SignFamily {
    n: u32,
    particular: BitRow,
    free_points: Vec<PhasePoint>,
    /// Row-major flip masks, one per free point.
    basis: Vec<BitRow>,
}

impl SignFamily {
    pub fn n(&self) -> u32 {
        self.n
    }

    pub fn nullspace_dim(&self) -> usize {
        self.free_points.len()
    }

    pub fn free_points(&self) -> &[PhasePoint] {
        &self.free_points
    }

    pub fn basis(&self) -> &[BitRow] {
        &self.basis
    }

    /// All free signs +1.
    pub fn particular(&self) -> SignAssignment {
        SignAssignment::from_bits(self.n, &self.particular)
    }

    pub fn particular_bits(&self) -> &BitRow {
        &self.particular
    }

    /// Member where free point `i` has S = -1 exactly when `choice[i]`.
    pub fn member(&self, choice: &[bool]) -> Result<SignAssignment> {
        if choice.len() != self.nullspace_dim() {
            return Err(Error::SignChoiceLength {
                got: choice.len(),
                expected: self.nullspace_dim(),
            });
        }
        let mut bits = self.particular.clone();
        for (flip, &on) in self.basis.iter().zip(choice) {
            if on {
                bits.xor_assign(flip);
            }
        }
        Ok(SignAssignment::from_bits(self.n, &bits))
    }

    /// Member number `index`: bit i of `index` is `choice[i]`.
    pub fn member_by_index(&self, index: u64) -> SignAssignment {
        let choice: Vec<bool> = (0..self.nullspace_dim()).map(|i| index >> i & 1 == 1).collect();
        self.member(&choice).expect("choice length matches")
    }

    pub fn size(&self) -> u64 {
        1u64 << self.nullspace_dim()
    }

    pub fn members(&self) -> impl Iterator<Item = SignAssignment> + '_ {
        (0..self.size()).map(|i| self.member_by_index(i))
    }
}

/// Parses a `--sign-choice` string of `0`/`1` characters (`1` = S = -1).
pub fn parse_sign_choice(bits: &str) -> std::result::Result<Vec<bool>, String> {
    bits.chars()
        .map(|c| match c {
            '0' => Ok(false),
            '1' => Ok(true),
            other => Err(format!("sign choice must be 0/1 characters, found {other:?}")),
        })
        .collect()
}

#[derive(Clone, Debug)]
pub enum SolveOutcome {
    Unique(SignAssignment),
    Family(SignFamily),
    Inconsistent(Box<Witness>),
}

impl SolveOutcome {
    pub fn kind(&self) -> &'static str {
        match self {
            SolveOutcome::Unique(_) => "unique",
            SolveOutcome::Family(_) => "family",
            SolveOutcome::Inconsistent(_) => "inconsistent",
        }
    }

    /// The solution set as a family (a unique solution has dimension 0).
    pub fn into_family(self) -> Result<SignFamily> {
        match self {
            SolveOutcome::Family(f) => Ok(f),
            SolveOutcome::Unique(s) => {
                let nbits = (s.n * s.n) as usize;
                let bits = BitRow::from_bits(
                    nbits,
                    s.values.iter().enumerate().filter(|(_, &v)| v == -1).map(|(i, _)| i),
                );
                Ok(SignFamily {
                    n: s.n,
                    particular: bits,
                    free_points: Vec::new(),
                    basis: Vec::new(),
                })
            }
            SolveOutcome::Inconsistent(_) => Err(Error::Inconsistent),
        }
    }
}

/// Gaussian elimination with the fixed variable preference order.
pub fn solve(system: &SignSystem) -> SolveOutcome {
    let n = system.n;
    let nvars = system.num_variables();
    let order = preference_order(n);
    let mut column_of = vec![0usize; nvars];
    for (rank, &var) in order.iter().enumerate() {
        column_of[var] = rank;
    }
    let to_row = |e: &Equation| BitRow::from_bits(nvars, e.vars.iter().map(|&v| column_of[v]));

    let mut echelon = Echelon::new(nvars);
    let mut seen: HashSet<(&[usize], bool)> = HashSet::new();
    for (idx, eq) in system.equations.iter().enumerate() {
        if !seen.insert((eq.vars.as_slice(), eq.parity)) {
            continue;
        }
        if echelon.insert(to_row(eq), eq.parity) == Insert::Conflict {
            let witness = build_witness(system, idx, &echelon, &column_of);
            return SolveOutcome::Inconsistent(Box::new(witness));
        }
    }

    let solution = echelon.solve();
    let from_columns = |row: &BitRow| BitRow::from_bits(nvars, row.ones().map(|c| order[c]));
    let particular = from_columns(&solution.particular);
    if solution.free.is_empty() {
        return SolveOutcome::Unique(SignAssignment::from_bits(n, &particular));
    }
    SolveOutcome::Family(SignFamily {
        n,
        particular,
        free_points: solution.free.iter().map(|&c| PhasePoint::from_index(order[c], n)).collect(),
        basis: solution.nullspace.iter().map(from_columns).collect(),
    })
}

/// Unit propagation over `equations[..end]` in rounds, so each fixed variable
/// records a derivation of minimal depth.
fn propagate(system: &SignSystem, end: usize) -> Vec<Option<(bool, usize)>> {
    let nvars = system.num_variables();
    let mut fixed: Vec<Option<(bool, usize)>> = vec![None; nvars];
    let eqs = &system.equations[..end];
    loop {
        let mut round = Vec::new();
        for (i, eq) in eqs.iter().enumerate() {
            let unknown: Vec<usize> = eq.vars.iter().copied().filter(|&v| fixed[v].is_none()).collect();
            if let [v] = unknown.as_slice() {
                let known = eq
                    .vars
                    .iter()
                    .filter(|&&u| u != *v)
                    .fold(false, |acc, &u| acc ^ fixed[u].expect("known").0);
                round.push((*v, eq.parity ^ known, i));
            }
        }
        let mut changed = false;
        for (v, value, i) in round {
            if fixed[v].is_none() {
                fixed[v] = Some((value, i));
                changed = true;
            }
        }
        if !changed {
            return fixed;
        }
    }
}

fn sign_of(bit: bool) -> i8 {
    if bit {
        -1
    } else {
        1
    }
}

fn chain(
    system: &SignSystem,
    fixed: &[Option<(bool, usize)>],
    roots: &[usize],
) -> Vec<DerivationStep> {
    let n = system.n;
    let mut order: Vec<usize> = Vec::new();
    let mut visited = HashSet::new();
    fn visit(
        v: usize,
        system: &SignSystem,
        fixed: &[Option<(bool, usize)>],
        visited: &mut HashSet<usize>,
        order: &mut Vec<usize>,
    ) {
        if !visited.insert(v) {
            return;
        }
        let Some((_, eq)) = fixed[v] else { return };
        for &u in &system.equations[eq].vars {
            if u != v {
                visit(u, system, fixed, visited, order);
            }
        }
        order.push(v);
    }
    for &r in roots {
        visit(r, system, fixed, &mut visited, &mut order);
    }
    order
        .into_iter()
        .filter_map(|v| {
            let (value, eq) = fixed[v]?;
            let e = &system.equations[eq];
            Some(DerivationStep {
                point: coords(PhasePoint::from_index(v, n)),
                value: sign_of(value),
                source: e.source.clone(),
                uses: e
                    .vars
                    .iter()
                    .filter(|&&u| u != v)
                    .map(|&u| coords(PhasePoint::from_index(u, n)))
                    .collect(),
            })
        })
        .collect()
}

/// Two derivations of the sign at one point of the conflicting equation: one
/// from the equations before it and one through it.
fn build_witness(system: &SignSystem, conflict: usize, prior: &Echelon, column_of: &[usize]) -> Witness {
    let n = system.n;
    let eq = &system.equations[conflict];
    let fixed = propagate(system, conflict);
    let all_known = eq.vars.iter().all(|&v| fixed[v].is_some());
    let point = *eq.vars.last().expect("a conflicting equation has variables");

    let forced = |v: usize| -> bool {
        match fixed[v] {
            Some((value, _)) => value,
            None => prior.forced_value(column_of[v]).unwrap_or(false),
        }
    };
    let first_value = forced(point);
    let others: Vec<usize> = eq.vars.iter().copied().filter(|&v| v != point).collect();
    let second_value = others.iter().fold(eq.parity, |acc, &v| acc ^ forced(v));
    debug_assert_ne!(first_value, second_value);

    let (first_steps, mut second_steps) = if all_known {
        (chain(system, &fixed, &[point]), chain(system, &fixed, &others))
    } else {
        (Vec::new(), Vec::new())
    };
    second_steps.push(DerivationStep {
        point: coords(PhasePoint::from_index(point, n)),
        value: sign_of(second_value),
        source: eq.source.clone(),
        uses: others.iter().map(|&u| coords(PhasePoint::from_index(u, n))).collect(),
    });
    Witness {
        point: coords(PhasePoint::from_index(point, n)),
        first: Derivation {
            value: sign_of(first_value),
            steps: first_steps,
        },
        second: Derivation {
            value: sign_of(second_value),
            steps: second_steps,
        },
    }
}

/// S(q, p) = (-1)^{qp}, the unique solution for odd N.
pub fn odd_closed_form(n: u32) -> Result<SignAssignment> {
    if n.is_multiple_of(2) {
        return Err(Error::EvenDimension(n));
    }
    Ok(SignAssignment::from_fn(n, |s| if (s.q() * s.p()) % 2 == 0 { 1 } else { -1 }))
}

/// Free signs left by the type-a lines and the standard marginals for N = 2^n.
pub fn free_sign_count(n: u32) -> Result<usize> {
    if !n.is_power_of_two() || n < 2 {
        return Err(Error::NotPowerOfTwo(n));
    }
    let lines = crate::lines::enumerate_lines(n)?;
    let type_a: Vec<&IsotropicLine> = lines.iter().filter(|l| l.line_type.is_type_a()).collect();
    let system = build_system(n, &type_a, false, true);
    Ok(solve(&system).into_family()?.nullspace_dim())
}

/// S(1, p0) for p0 = 1..N-1 and S(q0, 1) for even q0 = 2..N-2.
pub fn canonical_free_points(n: u32) -> Vec<PhasePoint> {
    let mut pts: Vec<PhasePoint> = (1..n).map(|p| PhasePoint::new(1, p as i64, n)).collect();
    pts.extend((2..n.saturating_sub(1)).step_by(2).map(|q| PhasePoint::new(q as i64, 1, n)));
    pts
}

/// Checks the closed-form propagation of the free signs along type-a lines
/// for N = 2^n: S = +1 on even points and on the axes, and
///
/// S(2j+1, [(2j+1) p0]) = (-1)^{(2j p0 - [2j p0]) / N} S(1, p0) x (-1 if p0 + [2j p0] >= N),
/// S([(2k+1) q0], 2k+1) = (-1)^{(2k q0 - [2k q0]) / N} S(q0, 1) x (-1 if q0 + [2k q0] >= N).
pub fn propagation_check(s: &SignAssignment, n: u32) -> Result<bool> {
    if !n.is_power_of_two() || n < 2 || s.n() != n {
        return Err(Error::NotPowerOfTwo(n));
    }
    let pt = |q: u32, p: u32| PhasePoint::new(q as i64, p as i64, n);
    let wrap_sign = |twice: u32, base: u32| -> i8 {
        let reduced = twice % n;
        let carry = if ((twice - reduced) / n).is_multiple_of(2) { 1 } else { -1 };
        let overflow = if base + reduced >= n { -1 } else { 1 };
        carry * overflow
    };
    for q in 0..n {
        for p in 0..n {
            if (q % 2 == 0 && p % 2 == 0 || q == 0 || p == 0) && s.get(pt(q, p)) != 1 {
                return Ok(false);
            }
        }
    }
    for p0 in 0..n {
        for j in 0..n / 2 {
            let expected = wrap_sign(2 * j * p0, p0) * s.get(pt(1, p0));
            if s.get(pt(2 * j + 1, (2 * j + 1) * p0 % n)) != expected {
                return Ok(false);
            }
        }
    }
    for q0 in (0..n).step_by(2) {
        for k in 0..n / 2 {
            let expected = wrap_sign(2 * k * q0, q0) * s.get(pt(q0, 1));
            if s.get(pt((2 * k + 1) * q0 % n, 2 * k + 1)) != expected {
                return Ok(false);
            }
        }
    }
    Ok(true)
}
