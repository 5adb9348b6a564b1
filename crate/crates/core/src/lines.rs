//! Isotropic lines of Z_N x Z_N: enumeration, SL(2, Z_N) orbits, the
//! a1/a2/b classification for N = 2^n, and parallel translates.
//!
//! A line is an order-N subgroup on which the symplectic product vanishes.
//! Enumeration is generate-and-verify: every cyclic subgroup generated by a
//! point of order N, plus every subgroup spanned by an upper-triangular
//! generator pair `(a, b), (0, d)` with `a d = N`, `0 <= b < d`. The latter
//! family reaches every subgroup of order N, so the two together are complete;
//! each candidate is checked against the full invariant battery and the count
//! is compared with the divisor-sum formula.

use std::collections::{HashMap, HashSet, VecDeque};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ring::{
    grid_points, point_valuation, prime_factorize, symplectic_product, PhasePoint,
};

#[derive(Copy, Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LineType {
    /// Generated by `(1, p0)`.
    A1,
    /// Generated by `(q0, 1)` with `q0` even.
    A2,
    /// Needs two generators; covers only even points.
    B,
    /// N odd: the a/b distinction does not apply.
    Odd,
}

impl LineType {
    pub fn is_type_a(self) -> bool {
        matches!(self, LineType::A1 | LineType::A2)
    }
}

#[derive(Clone, Debug)]
pub struct IsotropicLine {
    pub id: usize,
    pub n: u32,
    /// Sorted row-major.
    pub points: Vec<PhasePoint>,
    /// One generator for cyclic lines, two otherwise.
    pub generators: Vec<PhasePoint>,
    pub orbit_id: usize,
    /// For even N that is not a power of two this is the type of the line's
    /// projection onto the 2-power CRT factor.
    pub line_type: LineType,
    mask: Vec<bool>,
}

impl IsotropicLine {
    fn from_points(n: u32, mut points: Vec<PhasePoint>) -> Self {
        points.sort();
        let mut mask = vec![false; (n * n) as usize];
        for s in &points {
            mask[s.index()] = true;
        }
        let generators = canonical_generators(n, &points);
        let line_type = two_adic_type(n, &points);
        Self {
            id: 0,
            n,
            points,
            generators,
            orbit_id: 0,
            line_type,
            mask,
        }
    }

    pub fn contains(&self, s: PhasePoint) -> bool {
        s.modulus() == self.n && self.mask[s.index()]
    }

    pub fn is_cyclic(&self) -> bool {
        self.generators.len() == 1
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    fn key(&self) -> Vec<usize> {
        self.points.iter().map(|s| s.index()).collect()
    }

    /// Checks every structural property a line must have; the error names the
    /// first violated one.
    pub fn check_invariants(&self) -> std::result::Result<(), String> {
        let n = self.n;
        if self.points.len() != n as usize {
            return Err(format!("has {} points, expected {n}", self.points.len()));
        }
        if !self.contains(PhasePoint::new(0, 0, n)) {
            return Err("does not contain the origin".into());
        }
        for &a in &self.points {
            if !self.contains(a.neg()) {
                return Err(format!("contains {a} but not its negative"));
            }
            for &b in &self.points {
                if !self.contains(a.add(b)) {
                    return Err(format!("not closed: {a} + {b}"));
                }
                if !symplectic_product(a, b).expect("same modulus").is_zero() {
                    return Err(format!("<{a}, {b}> != 0"));
                }
            }
        }
        for s in grid_points(n) {
            if !self.contains(s)
                && self
                    .points
                    .iter()
                    .all(|&t| symplectic_product(s, t).expect("same modulus").is_zero())
            {
                return Err(format!("not maximal: {s} is orthogonal to every point"));
            }
        }
        Ok(())
    }
}

/// Subgroup generated by `gens`, in row-major order.
pub fn span(n: u32, gens: &[PhasePoint]) -> Vec<PhasePoint> {
    let mut seen = vec![false; (n * n) as usize];
    let origin = PhasePoint::new(0, 0, n);
    seen[origin.index()] = true;
    let mut frontier = vec![origin];
    let mut out = vec![origin];
    while let Some(s) = frontier.pop() {
        for &g in gens {
            let t = s.add(g);
            if !seen[t.index()] {
                seen[t.index()] = true;
                out.push(t);
                frontier.push(t);
            }
        }
    }
    out.sort();
    out
}

fn canonical_generators(n: u32, points: &[PhasePoint]) -> Vec<PhasePoint> {
    let full_order: Vec<PhasePoint> = points.iter().copied().filter(|s| s.order() == n).collect();
    if full_order.is_empty() {
        return hermite_generators(n, points);
    }
    let with_q1 = full_order.iter().find(|s| s.q() == 1);
    let with_p1 = full_order.iter().find(|s| s.p() == 1);
    vec![*with_q1.or(with_p1).unwrap_or(&full_order[0])]
}

/// The generator pair `(a, b), (0, d)` of the subgroup in Hermite normal form:
/// `a` is the smallest positive first coordinate, `d` the smallest positive
/// second coordinate among points with first coordinate 0.
fn hermite_generators(n: u32, points: &[PhasePoint]) -> Vec<PhasePoint> {
    let d = points
        .iter()
        .filter(|s| s.q() == 0 && s.p() != 0)
        .map(|s| s.p())
        .min()
        .unwrap_or(n);
    let a = points
        .iter()
        .filter(|s| s.q() != 0)
        .map(|s| s.q())
        .min()
        .unwrap_or(n);
    let first = points
        .iter()
        .filter(|s| s.q() == a % n)
        .map(|s| PhasePoint::new(s.q() as i64, (s.p() % d) as i64, n))
        .min()
        .unwrap_or(PhasePoint::new(0, 0, n));
    vec![first, PhasePoint::new(0, d as i64, n)]
}

fn classify_points_power_of_two(m: u32, points: &HashSet<(u32, u32)>) -> LineType {
    let order = |(q, p): (u32, u32)| {
        let g = crate::ring::gcd(crate::ring::gcd(q as u64, p as u64), m as u64) as u32;
        m / g
    };
    let cyclic = points.iter().any(|&s| order(s) == m);
    if !cyclic {
        LineType::B
    } else if points.iter().any(|&(q, _)| q == 1 % m) {
        LineType::A1
    } else {
        LineType::A2
    }
}

fn two_adic_type(n: u32, points: &[PhasePoint]) -> LineType {
    let e = prime_factorize(n).two_adic_exponent();
    if e == 0 {
        return LineType::Odd;
    }
    let m = 1u32 << e;
    let projected: HashSet<(u32, u32)> = points.iter().map(|s| (s.q() % m, s.p() % m)).collect();
    classify_points_power_of_two(m, &projected)
}

/// a1 / a2 / b classification for N = 2^n.
pub fn classify_line(line: &IsotropicLine, n: u32) -> Result<LineType> {
    if !n.is_power_of_two() || n < 2 {
        return Err(Error::NotPowerOfTwo(n));
    }
    let pts: HashSet<(u32, u32)> = line.points.iter().map(|s| (s.q(), s.p())).collect();
    Ok(classify_points_power_of_two(n, &pts))
}

/// sigma_1(N): the number of order-N subgroups of Z_N x Z_N, which for
/// N = p^n is (p^{n+1} - 1) / (p - 1) and is multiplicative over CRT factors.
pub fn expected_line_count(n: u32) -> usize {
    prime_factorize(n)
        .factors()
        .iter()
        .map(|&(p, e)| ((p.pow(e + 1) - 1) / (p - 1)) as usize)
        .product()
}

/// Order of SL(2, Z_N): product over factors of p^{3n-2} (p^2 - 1).
pub fn expected_sl2_order(n: u32) -> u64 {
    prime_factorize(n)
        .factors()
        .iter()
        .map(|&(p, e)| (p as u64).pow(3 * e - 2) * (p as u64 * p as u64 - 1))
        .product()
}

/// Lines through `s` for N = p^n: (p^{v(s)+1} - 1) / (p - 1).
pub fn expected_lines_through(s: PhasePoint) -> Option<usize> {
    let (p, e) = prime_factorize(s.modulus()).as_prime_power()?;
    let v = point_valuation(s, p, e);
    Some(((p.pow(v + 1) - 1) / (p - 1)) as usize)
}

/// Expected orbit sizes for N = p^n, largest first.
pub fn expected_orbit_sizes(n: u32) -> Option<Vec<usize>> {
    let (p, e) = prime_factorize(n).as_prime_power()?;
    Some(
        (0..=e / 2)
            .map(|k| {
                if 2 * k == e {
                    1
                } else {
                    ((p + 1) * p.pow(e - 2 * k - 1)) as usize
                }
            })
            .collect(),
    )
}

fn sort_key(line: &IsotropicLine) -> (u8, usize, usize) {
    let g = line.generators[0];
    match line.generators.as_slice() {
        [g] if g.q() == 1 => (0, g.p() as usize, 0),
        [g] if g.p() == 1 => (1, g.q() as usize, 0),
        [g] => (2, g.index(), 0),
        [_, h] => (3, g.index(), h.index()),
        _ => unreachable!("lines have one or two generators"),
    }
}

/// All isotropic lines for N, with ids, orbit ids and types filled in.
pub fn enumerate_lines(n: u32) -> Result<Vec<IsotropicLine>> {
    crate::check_dimension(n)?;
    let mut seen: HashMap<Vec<usize>, ()> = HashMap::new();
    let mut lines = Vec::new();
    let mut push = |pts: Vec<PhasePoint>| {
        if pts.len() != n as usize {
            return;
        }
        let line = IsotropicLine::from_points(n, pts);
        if seen.insert(line.key(), ()).is_none() {
            lines.push(line);
        }
    };

    for g in grid_points(n).filter(|g| g.order() == n) {
        push(span(n, &[g]));
    }
    for a in (1..=n).filter(|a| n.is_multiple_of(*a)) {
        let d = n / a;
        for b in 0..d {
            let gens = [
                PhasePoint::new(a as i64, b as i64, n),
                PhasePoint::new(0, d as i64, n),
            ];
            push(span(n, &gens));
        }
    }

    for line in &lines {
        if let Err(why) = line.check_invariants() {
            panic!("enumerated subgroup {:?} is not an isotropic line: {why}", line.generators);
        }
    }
    assert_eq!(lines.len(), expected_line_count(n), "line count for N = {n}");

    lines.sort_by_key(sort_key);
    for (id, line) in lines.iter_mut().enumerate() {
        line.id = id;
    }
    for (orbit_id, orbit) in sl2_orbits(&lines, n).iter().enumerate() {
        for &i in orbit {
            lines[i].orbit_id = orbit_id;
        }
    }
    Ok(lines)
}

pub fn lines_through(s: PhasePoint, lines: &[IsotropicLine]) -> Vec<&IsotropicLine> {
    lines.iter().filter(|l| l.contains(s)).collect()
}

type Sl2 = [u32; 4];

fn act(m: Sl2, s: PhasePoint) -> PhasePoint {
    let (q, p) = (s.q() as i64, s.p() as i64);
    PhasePoint::new(
        m[0] as i64 * q + m[1] as i64 * p,
        m[2] as i64 * q + m[3] as i64 * p,
        s.modulus(),
    )
}

/// `[[1, 1], [0, 1]]` and `[[0, -1], [1, 0]]`, which generate SL(2, Z_N).
fn sl2_generators(n: u32) -> [Sl2; 2] {
    [[1 % n, 1 % n, 0, 1 % n], [0, n - 1, 1 % n, 0]]
}

/// Orbits of the lines under SL(2, Z_N) as lists of indices into `lines`,
/// largest first (ties broken by smallest member).
pub fn sl2_orbits(lines: &[IsotropicLine], n: u32) -> Vec<Vec<usize>> {
    let index: HashMap<Vec<usize>, usize> =
        lines.iter().enumerate().map(|(i, l)| (l.key(), i)).collect();
    let gens = sl2_generators(n);
    let image = |line: &IsotropicLine, m: Sl2| -> usize {
        let mut key: Vec<usize> = line.points.iter().map(|&s| act(m, s).index()).collect();
        key.sort_unstable();
        *index.get(&key).expect("SL(2, Z_N) maps isotropic lines to isotropic lines")
    };

    let mut orbit_of = vec![usize::MAX; lines.len()];
    let mut orbits = Vec::new();
    for start in 0..lines.len() {
        if orbit_of[start] != usize::MAX {
            continue;
        }
        let id = orbits.len();
        let mut members = vec![start];
        orbit_of[start] = id;
        let mut queue = VecDeque::from([start]);
        while let Some(i) = queue.pop_front() {
            for &m in &gens {
                let j = image(&lines[i], m);
                if orbit_of[j] == usize::MAX {
                    orbit_of[j] = id;
                    members.push(j);
                    queue.push_back(j);
                }
            }
        }
        members.sort_unstable();
        orbits.push(members);
    }
    orbits.sort_by(|a, b| b.len().cmp(&a.len()).then(a[0].cmp(&b[0])));
    orbits
}

/// Size of the group generated by the two standard generators, by closure.
pub fn sl2_group_order(n: u32) -> u64 {
    let mul = |a: Sl2, b: Sl2| -> Sl2 {
        let m = |x: u32, y: u32| x as u64 * y as u64;
        let r = |v: u64| (v % n as u64) as u32;
        [
            r(m(a[0], b[0]) + m(a[1], b[2])),
            r(m(a[0], b[1]) + m(a[1], b[3])),
            r(m(a[2], b[0]) + m(a[3], b[2])),
            r(m(a[2], b[1]) + m(a[3], b[3])),
        ]
    };
    let gens = sl2_generators(n);
    let id = [1 % n, 0, 0, 1 % n];
    let mut seen = HashSet::from([id]);
    let mut queue = VecDeque::from([id]);
    while let Some(a) = queue.pop_front() {
        for &g in &gens {
            let b = mul(a, g);
            if seen.insert(b) {
                queue.push_back(b);
            }
        }
    }
    seen.len() as u64
}

/// A line together with its N parallel translates.
#[derive(Clone, Debug)]
pub struct LineBundle {
    pub line_id: usize,
    /// Unit shift: translate i is the line moved by `i * shift`.
    pub shift: PhasePoint,
    pub translates: Vec<Vec<PhasePoint>>,
}

/// Parallel translates of a line. The shift is (0, i) when the line meets the
/// momentum axis only at the origin (type a1, or any line through a point
/// (1, p0)), otherwise (i, 0) when it meets the position axis only at the
/// origin (type a2). Lines meeting both axes nontrivially, which only happens
/// for composite N, use the first row-major shift whose multiples give N
/// distinct translates. Non-cyclic lines (every type-b line) have no bundle.
pub fn bundle(line: &IsotropicLine) -> Result<LineBundle> {
    let n = line.n;
    let meets_momentum_axis = line.points.iter().any(|s| s.q() == 0 && s.p() != 0);
    let meets_position_axis = line.points.iter().any(|s| s.p() == 0 && s.q() != 0);
    let shift = if !meets_momentum_axis {
        PhasePoint::new(0, 1, n)
    } else if !meets_position_axis {
        PhasePoint::new(1, 0, n)
    } else {
        grid_points(n)
            .find(|&d| (1..n as i64).all(|i| !line.contains(d.scale(i))))
            .ok_or(Error::NoBundle(line.id))?
    };
    let translates = (0..n as i64)
        .map(|i| {
            let offset = shift.scale(i);
            let mut pts: Vec<PhasePoint> = line.points.iter().map(|s| s.add(offset)).collect();
            pts.sort();
            pts
        })
        .collect();
    Ok(LineBundle {
        line_id: line.id,
        shift,
        translates,
    })
}

/// Line counts grouped by orbit and type.
#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct LineCensus {
    pub n: u32,
    pub total: usize,
    pub orbit_sizes: Vec<usize>,
    pub a1: usize,
    pub a2: usize,
    pub b: usize,
    pub odd: usize,
}

pub fn census(lines: &[IsotropicLine], n: u32) -> LineCensus {
    let count = |t: LineType| lines.iter().filter(|l| l.line_type == t).count();
    let mut orbit_sizes = vec![0; lines.iter().map(|l| l.orbit_id + 1).max().unwrap_or(0)];
    for l in lines {
        orbit_sizes[l.orbit_id] += 1;
    }
    LineCensus {
        n,
        total: lines.len(),
        orbit_sizes,
        a1: count(LineType::A1),
        a2: count(LineType::A2),
        b: count(LineType::B),
        odd: count(LineType::Odd),
    }
}
