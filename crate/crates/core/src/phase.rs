//! Exact phase bookkeeping in powers of tau = e^{i pi / N}, the cocycles
//! eta and epsilon, and the Weyl/displacement matrices.
//!
//! Phases stay integer exponents mod 2N until a matrix is materialized.

use std::f64::consts::PI;

use num_complex::Complex64;

use crate::matrix::CMatrix;
use crate::ring::PhasePoint;

/// tau^k for an exponent k mod 2N.
#[derive(Copy, Clone, Debug, PartialEq, Eq, Hash)]
pub struct TauPhase {
    exponent: u32,
    n: u32,
}

impl TauPhase {
    pub fn new(exponent: i64, n: u32) -> Self {
        let two_n = 2 * n as i64;
        Self {
            exponent: exponent.rem_euclid(two_n) as u32,
            n,
        }
    }

    pub fn one(n: u32) -> Self {
        Self::new(0, n)
    }

    /// omega^k = tau^{2k}.
    pub fn omega(k: i64, n: u32) -> Self {
        Self::new(2 * k, n)
    }

    pub fn exponent(self) -> u32 {
        self.exponent
    }

    pub fn mul(self, other: Self) -> Self {
        debug_assert_eq!(self.n, other.n);
        Self::new(self.exponent as i64 + other.exponent as i64, self.n)
    }

    pub fn conj(self) -> Self {
        Self::new(-(self.exponent as i64), self.n)
    }

    /// `Some(+1)` / `Some(-1)` when the phase is real, `None` otherwise.
    pub fn as_sign(self) -> Option<i8> {
        match self.exponent {
            0 => Some(1),
            e if e == self.n => Some(-1),
            _ => None,
        }
    }

    pub fn to_complex(self) -> Complex64 {
        tau_complex(self.exponent as i64, self.n)
    }
}

/// (cos(pi k / N), sin(pi k / N)), with the real cases returned exactly.
pub fn tau_complex(k: i64, n: u32) -> Complex64 {
    let two_n = 2 * n as i64;
    let k = k.rem_euclid(two_n);
    if k == 0 {
        Complex64::new(1.0, 0.0)
    } else if k == n as i64 {
        Complex64::new(-1.0, 0.0)
    } else if 2 * k == n as i64 {
        Complex64::new(0.0, 1.0)
    } else if 2 * k == 3 * n as i64 {
        Complex64::new(0.0, -1.0)
    } else {
        let theta = PI * k as f64 / n as f64;
        Complex64::new(theta.cos(), theta.sin())
    }
}

/// All powers tau^0 .. tau^{2N-1}.
pub fn tau_table(n: u32) -> Vec<Complex64> {
    (0..2 * n as i64).map(|k| tau_complex(k, n)).collect()
}

/// Cocycle in D(sigma)^{-1} = eta_sigma D([N - sigma]).
pub fn eta(s: PhasePoint) -> i8 {
    let n = s.modulus();
    let (q, p) = (s.q(), s.p());
    let from_table: i8 = if q == 0 || p == 0 {
        1
    } else if (q + p + n).is_multiple_of(2) {
        1
    } else {
        -1
    };
    let nq = (n - q) % n;
    let np = (n - p) % n;
    let from_exponent = TauPhase::new(-(nq as i64 * np as i64) + q as i64 * p as i64, n)
        .as_sign()
        .expect("eta is always real");
    assert_eq!(from_table, from_exponent, "eta case table disagrees with exponent form at {s}");
    from_table
}

/// Symmetric cocycle in D(a) D(b) = tau^{<a,b>} epsilon(a,b) D([a + b]).
pub fn epsilon(a: PhasePoint, b: PhasePoint) -> i8 {
    debug_assert_eq!(a.modulus(), b.modulus());
    let n = a.modulus();
    let qs = a.q() + b.q();
    let ps = a.p() + b.p();
    let parity = |e: u32| if e.is_multiple_of(2) { 1 } else { -1 };
    let from_table: i8 = match (qs >= n, ps >= n) {
        (false, false) => 1,
        (false, true) => parity(qs),
        (true, false) => parity(ps),
        (true, true) => parity(qs + ps + n),
    };
    let lifted = qs as i64 * ps as i64 - (qs % n) as i64 * (ps % n) as i64;
    let from_exponent = TauPhase::new(lifted, n)
        .as_sign()
        .expect("epsilon is always real");
    assert_eq!(
        from_table, from_exponent,
        "epsilon case table disagrees with exponent form at {a}, {b}"
    );
    from_table
}

/// The clock U = diag(omega^q) and the shift V|q> = |q+1>.
pub fn weyl_matrices(n: u32) -> (CMatrix, CMatrix) {
    let dim = n as usize;
    let u = CMatrix::from_fn(dim, dim, |r, c| {
        if r == c {
            tau_complex(2 * r as i64, n)
        } else {
            Complex64::new(0.0, 0.0)
        }
    });
    let v = CMatrix::from_fn(dim, dim, |r, c| {
        if r == (c + 1) % dim {
            Complex64::new(1.0, 0.0)
        } else {
            Complex64::new(0.0, 0.0)
        }
    });
    (u, v)
}

/// Exponent of tau in the single nonzero entry `D(sigma)[(c + q) mod N, c]`.
#[inline]
pub fn displacement_entry_exponent(s: PhasePoint, col: u32) -> i64 {
    s.q() as i64 * s.p() as i64 + 2 * s.p() as i64 * col as i64
}

/// D(q, p) = tau^{qp} V^q U^p, assembled directly from its monomial structure.
pub fn displacement(s: PhasePoint) -> CMatrix {
    let n = s.modulus();
    let dim = n as usize;
    let mut d = CMatrix::zeros(dim, dim);
    for c in 0..n {
        let r = ((c + s.q()) % n) as usize;
        d[(r, c as usize)] = tau_complex(displacement_entry_exponent(s, c), n);
    }
    d
}
