//! Exact arithmetic on Z_N and on the grid Z_N x Z_N.
//!
//! Every residue is kept as its canonical representative in `[0, N)`.
//! Nothing here allocates beyond small vectors; `N` is bounded by
//! [`max_n`](crate::max_n), so trial division and exhaustive loops are fine.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// An element of Z_N.
#[derive(Copy, Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Residue {
    value: u32,
    modulus: u32,
}

impl Residue {
    /// Reduces `value` into `[0, modulus)`. Negative inputs wrap.
    pub fn new(value: i64, modulus: u32) -> Self {
        assert!(modulus >= 1, "modulus must be positive");
        Self {
            value: value.rem_euclid(modulus as i64) as u32,
            modulus,
        }
    }

    pub fn value(self) -> u32 {
        self.value
    }

    pub fn modulus(self) -> u32 {
        self.modulus
    }

    pub fn is_zero(self) -> bool {
        self.value == 0
    }

    pub fn add(self, other: Self) -> Result<Self> {
        self.same_modulus(other)?;
        Ok(Self::new(self.value as i64 + other.value as i64, self.modulus))
    }

    pub fn mul(self, other: Self) -> Result<Self> {
        self.same_modulus(other)?;
        Ok(Self::new(self.value as i64 * other.value as i64, self.modulus))
    }

    pub fn neg(self) -> Self {
        Self::new(-(self.value as i64), self.modulus)
    }

    /// Multiplicative inverse, if `gcd(value, modulus) = 1`.
    pub fn inverse(self) -> Option<Self> {
        mod_inverse(self.value as i64, self.modulus as i64).map(|v| Self::new(v, self.modulus))
    }

    fn same_modulus(self, other: Self) -> Result<()> {
        if self.modulus == other.modulus {
            Ok(())
        } else {
            Err(Error::ModulusMismatch(self.modulus, other.modulus))
        }
    }
}

impl fmt::Display for Residue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} mod {}", self.value, self.modulus)
    }
}

/// A point sigma = (q, p) of the phase-space grid.
#[derive(Copy, Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct PhasePoint {
    q: Residue,
    p: Residue,
}

impl PhasePoint {
    pub fn new(q: i64, p: i64, n: u32) -> Self {
        Self {
            q: Residue::new(q, n),
            p: Residue::new(p, n),
        }
    }

    pub fn from_residues(q: Residue, p: Residue) -> Result<Self> {
        q.same_modulus(p)?;
        Ok(Self { q, p })
    }

    /// Inverse of [`PhasePoint::index`].
    pub fn from_index(index: usize, n: u32) -> Self {
        let n_us = n as usize;
        debug_assert!(index < n_us * n_us);
        Self::new((index / n_us) as i64, (index % n_us) as i64, n)
    }

    pub fn q(self) -> u32 {
        self.q.value
    }

    pub fn p(self) -> u32 {
        self.p.value
    }

    pub fn q_residue(self) -> Residue {
        self.q
    }

    pub fn p_residue(self) -> Residue {
        self.p
    }

    pub fn modulus(self) -> u32 {
        self.q.modulus
    }

    /// Row-major position `q * N + p`.
    pub fn index(self) -> usize {
        self.q.value as usize * self.modulus() as usize + self.p.value as usize
    }

    pub fn is_origin(self) -> bool {
        self.q.value == 0 && self.p.value == 0
    }

    /// Both coordinates even.
    pub fn is_even(self) -> bool {
        self.q.value.is_multiple_of(2) && self.p.value.is_multiple_of(2)
    }

    /// `[sigma + other]`, componentwise mod N.
    pub fn add(self, other: Self) -> Self {
        debug_assert_eq!(self.modulus(), other.modulus());
        Self::new(
            self.q() as i64 + other.q() as i64,
            self.p() as i64 + other.p() as i64,
            self.modulus(),
        )
    }

    /// `[N - sigma]`.
    pub fn neg(self) -> Self {
        Self::new(-(self.q() as i64), -(self.p() as i64), self.modulus())
    }

    /// `[k sigma]`.
    pub fn scale(self, k: i64) -> Self {
        Self::new(k * self.q() as i64, k * self.p() as i64, self.modulus())
    }

    /// Additive order of the point in Z_N x Z_N.
    pub fn order(self) -> u32 {
        let n = self.modulus();
        let g = gcd(gcd(self.q() as u64, self.p() as u64), n as u64) as u32;
        n / g
    }
}

impl fmt::Display for PhasePoint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({},{})", self.q(), self.p())
    }
}

/// All N^2 points in row-major `(q, p)` order.
pub fn grid_points(n: u32) -> impl Iterator<Item = PhasePoint> {
    (0..n).flat_map(move |q| (0..n).map(move |p| PhasePoint::new(q as i64, p as i64, n)))
}

/// `<a, b> = a.p * b.q - a.q * b.p mod N`.
pub fn symplectic_product(a: PhasePoint, b: PhasePoint) -> Result<Residue> {
    if a.modulus() != b.modulus() {
        return Err(Error::ModulusMismatch(a.modulus(), b.modulus()));
    }
    Ok(Residue::new(symplectic_lift(a, b), a.modulus()))
}

/// The symplectic product as a plain integer computed from canonical
/// representatives, without reduction. Phase factors tau^<a,b> depend on
/// this value mod 2N, not just mod N.
pub fn symplectic_lift(a: PhasePoint, b: PhasePoint) -> i64 {
    a.p() as i64 * b.q() as i64 - a.q() as i64 * b.p() as i64
}

/// Factorization `N = prod p_j^{n_j}` with strictly increasing primes.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct PrimeFactorization {
    factors: Vec<(u32, u32)>,
}

impl PrimeFactorization {
    pub fn factors(&self) -> &[(u32, u32)] {
        &self.factors
    }

    /// The prime-power moduli N_j = p_j^{n_j}.
    pub fn moduli(&self) -> Vec<u32> {
        self.factors.iter().map(|&(p, e)| p.pow(e)).collect()
    }

    pub fn value(&self) -> u32 {
        self.moduli().iter().product()
    }

    /// `Some((p, n))` if N = p^n for a single prime.
    pub fn as_prime_power(&self) -> Option<(u32, u32)> {
        match self.factors.as_slice() {
            [single] => Some(*single),
            _ => None,
        }
    }

    /// Exponent of 2 in N (0 when N is odd).
    pub fn two_adic_exponent(&self) -> u32 {
        self.factors
            .iter()
            .find(|&&(p, _)| p == 2)
            .map_or(0, |&(_, e)| e)
    }
}

/// Trial division.
pub fn prime_factorize(n: u32) -> PrimeFactorization {
    assert!(n >= 1, "cannot factorize 0");
    let mut factors = Vec::new();
    let mut rest = n;
    let mut d = 2;
    while d * d <= rest {
        let mut e = 0;
        while rest.is_multiple_of(d) {
            rest /= d;
            e += 1;
        }
        if e > 0 {
            factors.push((d, e));
        }
        d += 1;
    }
    if rest > 1 {
        factors.push((rest, 1));
    }
    PrimeFactorization { factors }
}

/// Components `q mod N_j` for each prime-power factor.
pub fn crt_split(q: Residue, f: &PrimeFactorization) -> Vec<Residue> {
    debug_assert_eq!(q.modulus(), f.value());
    f.moduli()
        .into_iter()
        .map(|m| Residue::new(q.value() as i64, m))
        .collect()
}

/// Recombines `q = sum q_j nu_j mu_j mod N`, nu_j = N / N_j, mu_j = nu_j^{-1} mod N_j.
pub fn crt_join(parts: &[Residue], f: &PrimeFactorization) -> Result<Residue> {
    let moduli = f.moduli();
    if parts.len() != moduli.len() {
        return Err(Error::DimensionMismatch(parts.len(), moduli.len()));
    }
    let n = f.value() as i64;
    let mut acc = 0i64;
    for (part, &m) in parts.iter().zip(&moduli) {
        if part.modulus() != m {
            return Err(Error::ModulusMismatch(part.modulus(), m));
        }
        let nu = n / m as i64;
        let mu = mod_inverse(nu, m as i64).expect("N / N_j is coprime to N_j");
        acc = (acc + part.value() as i64 * nu % n * mu) % n;
    }
    Ok(Residue::new(acc, f.value()))
}

/// p-valuation of a residue mod p^n: the largest j <= n with p^j | a,
/// with the convention v(0) = n.
pub fn p_valuation(a: Residue, p: u32, n: u32) -> u32 {
    debug_assert_eq!(a.modulus(), p.pow(n));
    let mut v = a.value();
    if v == 0 {
        return n;
    }
    let mut j = 0;
    while v.is_multiple_of(p) {
        v /= p;
        j += 1;
    }
    j
}

/// `min(v(q), v(p))`.
pub fn point_valuation(s: PhasePoint, p: u32, n: u32) -> u32 {
    p_valuation(s.q_residue(), p, n).min(p_valuation(s.p_residue(), p, n))
}

pub fn gcd(mut a: u64, mut b: u64) -> u64 {
    while b != 0 {
        (a, b) = (b, a % b);
    }
    a
}

fn mod_inverse(a: i64, m: i64) -> Option<i64> {
    if m == 1 {
        return Some(0);
    }
    let (mut old_r, mut r) = (a.rem_euclid(m), m);
    let (mut old_s, mut s) = (1i64, 0i64);
    while r != 0 {
        let quot = old_r / r;
        (old_r, r) = (r, old_r - quot * r);
        (old_s, s) = (s, old_s - quot * s);
    }
    (old_r == 1).then(|| old_s.rem_euclid(m))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pt(q: i64, p: i64, n: u32) -> PhasePoint {
        PhasePoint::new(q, p, n)
    }

    #[test]
    fn symplectic_examples() {
        assert_eq!(symplectic_product(pt(1, 0, 4), pt(1, 0, 4)).unwrap().value(), 0);
        assert_eq!(symplectic_product(pt(1, 0, 4), pt(0, 1, 4)).unwrap().value(), 3);
        assert_eq!(symplectic_product(pt(1, 1, 2), pt(1, 1, 2)).unwrap().value(), 0);
    }

    #[test]
    fn symplectic_modulus_mismatch() {
        assert_eq!(
            symplectic_product(pt(1, 0, 4), pt(1, 0, 3)),
            Err(Error::ModulusMismatch(4, 3))
        );
    }

    #[test]
    fn symplectic_antisymmetric_exhaustive() {
        for n in [2, 3, 4, 5, 6, 8] {
            for a in grid_points(n) {
                for b in grid_points(n) {
                    let ab = symplectic_product(a, b).unwrap();
                    let ba = symplectic_product(b, a).unwrap();
                    assert!(ab.add(ba).unwrap().is_zero());
                }
            }
        }
    }

    #[test]
    fn factorization_examples() {
        assert_eq!(prime_factorize(12).factors(), &[(2, 2), (3, 1)]);
        assert_eq!(prime_factorize(8).factors(), &[(2, 3)]);
        assert_eq!(prime_factorize(15).factors(), &[(3, 1), (5, 1)]);
        assert_eq!(prime_factorize(1).factors(), &[]);
        assert_eq!(prime_factorize(64).as_prime_power(), Some((2, 6)));
        assert_eq!(prime_factorize(12).two_adic_exponent(), 2);
    }

    #[test]
    fn factorization_multiplies_back() {
        for n in 1..=64u32 {
            let f = prime_factorize(n);
            assert_eq!(f.value(), n);
            assert!(f.factors().windows(2).all(|w| w[0].0 < w[1].0));
            assert!(f.factors().iter().all(|&(_, e)| e >= 1));
        }
    }

    #[test]
    fn crt_examples() {
        let f6 = prime_factorize(6);
        let split = crt_split(Residue::new(5, 6), &f6);
        assert_eq!(split, vec![Residue::new(1, 2), Residue::new(2, 3)]);
        assert_eq!(crt_split(Residue::new(0, 6), &f6), vec![Residue::new(0, 2), Residue::new(0, 3)]);
        assert_eq!(crt_split(Residue::new(1, 6), &f6), vec![Residue::new(1, 2), Residue::new(1, 3)]);

        assert_eq!(crt_join(&split, &f6).unwrap().value(), 5);
        assert_eq!(crt_join(&[Residue::new(0, 2), Residue::new(0, 3)], &f6).unwrap().value(), 0);
        let f15 = prime_factorize(15);
        assert_eq!(crt_join(&[Residue::new(2, 3), Residue::new(3, 5)], &f15).unwrap().value(), 8);
    }

    #[test]
    fn crt_join_rejects_wrong_moduli() {
        let f6 = prime_factorize(6);
        assert!(crt_join(&[Residue::new(1, 3), Residue::new(1, 2)], &f6).is_err());
        assert!(crt_join(&[Residue::new(1, 2)], &f6).is_err());
    }

    #[test]
    fn crt_is_a_ring_isomorphism_exhaustive() {
        for n in 1..=64u32 {
            let f = prime_factorize(n);
            for a in 0..n {
                let ra = Residue::new(a as i64, n);
                let sa = crt_split(ra, &f);
                assert_eq!(crt_join(&sa, &f).unwrap(), ra);
                for b in 0..n {
                    let rb = Residue::new(b as i64, n);
                    let sb = crt_split(rb, &f);
                    let sum: Vec<_> = sa.iter().zip(&sb).map(|(x, y)| x.add(*y).unwrap()).collect();
                    let prod: Vec<_> = sa.iter().zip(&sb).map(|(x, y)| x.mul(*y).unwrap()).collect();
                    assert_eq!(crt_split(ra.add(rb).unwrap(), &f), sum);
                    assert_eq!(crt_split(ra.mul(rb).unwrap(), &f), prod);
                }
            }
        }
    }

    #[test]
    fn valuation_examples() {
        assert_eq!(p_valuation(Residue::new(4, 8), 2, 3), 2);
        assert_eq!(p_valuation(Residue::new(0, 8), 2, 3), 3);
        assert_eq!(p_valuation(Residue::new(7, 8), 2, 3), 0);
        assert_eq!(point_valuation(pt(0, 0, 8), 2, 3), 3);
        assert_eq!(point_valuation(pt(1, 4, 8), 2, 3), 0);
        assert_eq!(point_valuation(pt(2, 4, 8), 2, 3), 1);
    }

    #[test]
    fn valuation_matches_divisibility_exhaustive() {
        for n in 2..=64u32 {
            let Some((p, e)) = prime_factorize(n).as_prime_power() else { continue };
            for a in 1..n {
                let j = p_valuation(Residue::new(a as i64, n), p, e);
                assert_eq!(a % p.pow(j), 0);
                assert_ne!(a % p.pow(j + 1), 0);
            }
        }
    }

    #[test]
    fn inverse_and_order() {
        assert_eq!(Residue::new(3, 8).inverse(), Some(Residue::new(3, 8)));
        assert_eq!(Residue::new(2, 8).inverse(), None);
        assert_eq!(pt(2, 4, 8).order(), 4);
        assert_eq!(pt(1, 4, 8).order(), 8);
        assert_eq!(pt(0, 0, 8).order(), 1);
        assert_eq!(pt(3, 0, 6).order(), 2);
    }

    #[test]
    fn index_roundtrip() {
        for s in grid_points(6) {
            assert_eq!(PhasePoint::from_index(s.index(), 6), s);
        }
        assert_eq!(pt(-1, 7, 4), pt(3, 3, 4));
    }
}
