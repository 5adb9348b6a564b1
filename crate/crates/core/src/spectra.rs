//! Census of the distinct spectra of W(0, 0) over a sign family.
//!
//! Members are visited in Gray-code order so consecutive members differ by a
//! single basis flip. Work is split into contiguous index ranges whose partial
//! tallies are merged; the merge is order independent.

use std::collections::HashMap;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gf2::BitRow;
use crate::matrix::{hermitian_eigenvalues_unchecked, CMatrix, Spectrum, SPECTRUM_TOL};
use crate::phase::{displacement_entry_exponent, tau_table};
use crate::ring::{grid_points, PhasePoint};
use crate::signs::{admissible_family, SignAssignment, SignFamily};

/// Gray code of `i`.
pub fn gray(i: u64) -> u64 {
    i ^ (i >> 1)
}

/// Every member of the admissible family for N = 2^n, in Gray-code order.
pub fn enumerate_family(n: u32) -> Result<impl Iterator<Item = SignAssignment>> {
    if !n.is_power_of_two() || n < 2 {
        return Err(Error::NotPowerOfTwo(n));
    }
    let family = admissible_family(n)?;
    Ok((0..family.size()).map(move |i| family.member_by_index(gray(i))))
}

/// One distinct spectrum.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SpectrumClass {
    /// Descending.
    pub eigenvalues: Vec<f64>,
    pub count: u64,
    /// Smallest member index with this spectrum; bit i = free sign i is -1.
    pub representative: u64,
    pub representative_choice: Vec<bool>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Census {
    pub n: u32,
    pub family_size: u64,
    pub free_points: Vec<(u32, u32)>,
    pub classes: Vec<SpectrumClass>,
}

struct Assembler {
    n: u32,
    taus: Vec<Complex64>,
}

impl Assembler {
    fn new(n: u32) -> Self {
        Self { n, taus: tau_table(n) }
    }

    /// `W(0, 0) = (1/N) sum S(sigma) D(sigma)` for the signs encoded by `bits`.
    fn origin_operator(&self, bits: &BitRow) -> CMatrix {
        let n = self.n;
        let two_n = 2 * n as i64;
        let dim = n as usize;
        let scale = 1.0 / n as f64;
        let mut m = CMatrix::zeros(dim, dim);
        for sp in grid_points(n) {
            let sign = if bits.get(sp.index()) { -scale } else { scale };
            for c in 0..n {
                let k = displacement_entry_exponent(sp, c).rem_euclid(two_n) as usize;
                m[(((c + sp.q()) % n) as usize, c as usize)] += self.taus[k] * sign;
            }
        }
        m
    }
}

type Key = Vec<i64>;

fn key_of(values: &[f64]) -> Key {
    values.iter().map(|v| (v / SPECTRUM_TOL).round() as i64).collect()
}

#[derive(Default)]
struct Tally {
    classes: HashMap<Key, (Vec<f64>, u64, u64)>,
}

impl Tally {
    fn add(&mut self, values: Vec<f64>, index: u64) {
        let entry = self.classes.entry(key_of(&values)).or_insert((values, 0, index));
        entry.1 += 1;
        entry.2 = entry.2.min(index);
    }

    fn merge(mut self, other: Tally) -> Tally {
        for (k, (values, count, rep)) in other.classes {
            let entry = self.classes.entry(k).or_insert((values, 0, rep));
            entry.1 += count;
            entry.2 = entry.2.min(rep);
        }
        self
    }
}

const CHUNK: u64 = 1 << 12;

fn tally_range(family: &SignFamily, asm: &Assembler, start: u64, end: u64) -> Tally {
    let mut tally = Tally::default();
    let mut choice = gray(start);
    let mut bits = family.particular_bits().clone();
    for (j, flip) in family.basis().iter().enumerate() {
        if choice >> j & 1 == 1 {
            bits.xor_assign(flip);
        }
    }
    for i in start..end {
        if i > start {
            let j = (i.trailing_zeros()) as usize;
            bits.xor_assign(&family.basis()[j]);
            choice ^= 1 << j;
        }
        debug_assert_eq!(choice, gray(i));
        let w = asm.origin_operator(&bits);
        tally.add(hermitian_eigenvalues_unchecked(&w).values, choice);
    }
    tally
}

/// Distinct spectra of W(0, 0) over the admissible family of N = 2^n.
/// Classes whose rounded keys differ but which agree within `tol` are merged.
pub fn census(n: u32, tol: f64) -> Result<Census> {
    if !n.is_power_of_two() || n < 2 {
        return Err(Error::NotPowerOfTwo(n));
    }
    let family = admissible_family(n)?;
    let asm = Assembler::new(n);
    let size = family.size();
    let starts: Vec<u64> = (0..size).step_by(CHUNK as usize).collect();
    let tally = starts
        .into_par_iter()
        .map(|s| tally_range(&family, &asm, s, (s + CHUNK).min(size)))
        .reduce(Tally::default, Tally::merge);

    let mut merged: Vec<(Spectrum, u64, u64)> = Vec::new();
    let mut raw: Vec<(Vec<f64>, u64, u64)> = tally.classes.into_values().collect();
    raw.sort_by_key(|c| c.2);
    for (values, count, rep) in raw {
        let spec = Spectrum::new(values, tol);
        match merged.iter_mut().find(|(s, _, _)| s.approx_eq(&spec)) {
            Some(existing) => {
                existing.1 += count;
                existing.2 = existing.2.min(rep);
            }
            None => merged.push((spec, count, rep)),
        }
    }
    merged.sort_by(|a, b| b.1.cmp(&a.1).then(a.2.cmp(&b.2)));
    let dim = family.nullspace_dim();
    Ok(Census {
        n,
        family_size: size,
        free_points: family.free_points().iter().map(|s| (s.q(), s.p())).collect(),
        classes: merged
            .into_iter()
            .map(|(spec, count, rep)| SpectrumClass {
                eigenvalues: spec.values,
                count,
                representative: rep,
                representative_choice: (0..dim).map(|j| rep >> j & 1 == 1).collect(),
            })
            .collect(),
    })
}

/// Spectrum of W(sigma) for one sign assignment.
pub fn spectrum_at(s: &SignAssignment, sigma: PhasePoint) -> Result<Spectrum> {
    let w = crate::wigner::phase_point_operator(sigma, s)?;
    crate::matrix::hermitian_eigenvalues(&w.matrix)
}
