//! Tomographic frame from the bundles of admissible lines, and least-squares
//! state reconstruction from bundle probabilities.

use std::collections::BTreeMap;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::lines::{bundle, enumerate_lines, LineType};
use crate::matrix::{gram_matrix, identity, symmetric_pinv_solve, symmetric_rank, CMatrix, RANK_TOL};
use crate::signs::SignAssignment;
use crate::wigner::{bundle_projectors, DensityMatrix};

/// Bundle probabilities keyed by (line id, translate index).
pub type Probabilities = BTreeMap<(usize, u32), f64>;

/// Traceless operators `T = P_(line, i) - I/N` for translates i = 1..N-1.
#[derive(Clone, Debug)]
pub struct TomoFrame {
    pub n: u32,
    pub operators: Vec<CMatrix>,
    pub labels: Vec<(usize, u32)>,
    /// Every translate projector, i = 0..N-1, per line id.
    pub projectors: BTreeMap<usize, Vec<CMatrix>>,
    gram: DMatrix<f64>,
}

impl TomoFrame {
    pub fn len(&self) -> usize {
        self.operators.len()
    }

    pub fn is_empty(&self) -> bool {
        self.operators.is_empty()
    }

    pub fn gram(&self) -> &DMatrix<f64> {
        &self.gram
    }

    pub fn line_ids(&self) -> impl Iterator<Item = usize> + '_ {
        self.projectors.keys().copied()
    }
}

/// Frame over every line that is not of type b and has a bundle. For N = 2^n
/// these are the 3N/2 type-a lines.
pub fn build_frame(n: u32, s: &SignAssignment) -> Result<TomoFrame> {
    crate::check_dimension(n)?;
    if s.n() != n {
        return Err(Error::ModulusMismatch(s.n(), n));
    }
    let lines = enumerate_lines(n)?;
    let shift = identity(n as usize) / Complex64::new(n as f64, 0.0);
    let mut operators = Vec::new();
    let mut labels = Vec::new();
    let mut projectors = BTreeMap::new();
    for line in lines.iter().filter(|l| l.line_type != LineType::B) {
        let Ok(b) = bundle(line) else { continue };
        let ps = bundle_projectors(line, &b, s)?;
        for (i, p) in ps.iter().enumerate().skip(1) {
            operators.push(p - &shift);
            labels.push((line.id, i as u32));
        }
        projectors.insert(line.id, ps);
    }
    let gram = gram_matrix(&operators)?;
    Ok(TomoFrame {
        n,
        operators,
        labels,
        projectors,
        gram,
    })
}

/// Numerical rank of the frame's Gram matrix.
pub fn frame_rank(frame: &TomoFrame) -> usize {
    symmetric_rank(&frame.gram, RANK_TOL)
}

/// `Tr(rho P_(line, i))` for every bundle of the frame and i = 0..N-1.
pub fn exact_probabilities(rho: &DensityMatrix, frame: &TomoFrame) -> Result<Probabilities> {
    if rho.dim() != frame.n as usize {
        return Err(Error::DimensionMismatch(rho.dim(), frame.n as usize));
    }
    let mut out = Probabilities::new();
    for (&id, ps) in &frame.projectors {
        for (i, p) in ps.iter().enumerate() {
            out.insert((id, i as u32), rho.expectation(p).re);
        }
    }
    Ok(out)
}

const PROBABILITY_TOL: f64 = 1e-6;

fn check_probabilities(frame: &TomoFrame, probs: &Probabilities) -> Result<()> {
    for id in frame.line_ids() {
        let mut total = 0.0;
        for i in 0..frame.n {
            let v = *probs
                .get(&(id, i))
                .ok_or_else(|| Error::BadProbabilities(format!("missing entry for line {id}, translate {i}")))?;
            if !(-PROBABILITY_TOL..=1.0 + PROBABILITY_TOL).contains(&v) {
                return Err(Error::BadProbabilities(format!(
                    "line {id}, translate {i}: {v} is outside [0, 1]"
                )));
            }
            total += v;
        }
        if (total - 1.0).abs() > PROBABILITY_TOL {
            return Err(Error::BadProbabilities(format!("line {id} sums to {total}")));
        }
    }
    if let Some(key) = probs.keys().find(|(id, _)| !frame.projectors.contains_key(id)) {
        return Err(Error::BadProbabilities(format!("line {} is not in the frame", key.0)));
    }
    Ok(())
}

/// `rho = I/N + sum_k c_k T_k` with `c` the minimum-norm solution of
/// `G c = p - 1/N`. The result is not projected onto the state space.
pub fn reconstruct(frame: &TomoFrame, probs: &Probabilities) -> Result<CMatrix> {
    let n = frame.n;
    let needed = (n * n - 1) as usize;
    let rank = frame_rank(frame);
    if rank < needed {
        return Err(Error::RankDeficient { rank, needed });
    }
    check_probabilities(frame, probs)?;
    let rhs = DVector::from_iterator(
        frame.len(),
        frame.labels.iter().map(|key| probs[key] - 1.0 / n as f64),
    );
    let c = symmetric_pinv_solve(&frame.gram, &rhs, RANK_TOL);
    let mut rho = identity(n as usize) / Complex64::new(n as f64, 0.0);
    for (ck, t) in c.iter().zip(&frame.operators) {
        rho += t * Complex64::new(*ck, 0.0);
    }
    Ok(rho)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::matrix::{hermiticity_defect, max_abs_diff, trace};
    use crate::signs::admissible_family;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn frame_sizes_and_ranks() {
        for (n, size, rank) in [(2u32, 3usize, 3usize), (4, 18, 15), (8, 84, 63)] {
            let s = admissible_family(n).unwrap().particular();
            let frame = build_frame(n, &s).unwrap();
            assert_eq!(frame.len(), size);
            assert_eq!(size, 3 * (n * (n - 1)) as usize / 2);
            assert_eq!(frame_rank(&frame), rank);
            assert_eq!(size - rank, ((n - 1) * (n - 2) / 2) as usize);
            for t in &frame.operators {
                assert!(trace(t).norm() < 1e-12);
                assert!(hermiticity_defect(t) < 1e-12);
            }
        }
    }

    #[test]
    fn odd_frames_are_complete() {
        for n in [3u32, 5, 9] {
            let s = admissible_family(n).unwrap().particular();
            let frame = build_frame(n, &s).unwrap();
            assert_eq!(frame_rank(&frame), (n * n - 1) as usize);
        }
    }

    #[test]
    fn round_trips() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for n in [2u32, 3, 4] {
            let s = admissible_family(n).unwrap().member_by_index(3);
            let frame = build_frame(n, &s).unwrap();
            let mixed = DensityMatrix::maximally_mixed(n);
            let probs = exact_probabilities(&mixed, &frame).unwrap();
            assert!(probs.values().all(|p| (p - 1.0 / n as f64).abs() < 1e-12));
            assert!(max_abs_diff(&reconstruct(&frame, &probs).unwrap(), mixed.matrix()) < 1e-12);
            for _ in 0..5 {
                let rho = DensityMatrix::random_mixed(n, &mut rng);
                let probs = exact_probabilities(&rho, &frame).unwrap();
                let back = reconstruct(&frame, &probs).unwrap();
                assert!(max_abs_diff(&back, rho.matrix()) < 1e-8);
            }
        }
    }

    #[test]
    fn composite_frames_round_trip() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        for n in [6u32, 10, 12, 15] {
            let s = admissible_family(n).unwrap().particular();
            let frame = build_frame(n, &s).unwrap();
            assert_eq!(frame_rank(&frame), (n * n - 1) as usize);
            let rho = DensityMatrix::random_pure(n, &mut rng);
            let back = reconstruct(&frame, &exact_probabilities(&rho, &frame).unwrap()).unwrap();
            assert!(max_abs_diff(&back, rho.matrix()) < 1e-8);
        }
    }

    #[test]
    fn malformed_probabilities() {
        let s = admissible_family(2).unwrap().particular();
        let frame = build_frame(2, &s).unwrap();
        let mut probs = exact_probabilities(&DensityMatrix::position_state(2, 0), &frame).unwrap();
        let key = *probs.keys().next().unwrap();
        probs.insert(key, 1.4);
        assert!(matches!(reconstruct(&frame, &probs), Err(Error::BadProbabilities(_))));
        probs.remove(&key);
        assert!(matches!(reconstruct(&frame, &probs), Err(Error::BadProbabilities(_))));
    }

    #[test]
    fn rank_deficiency_reported() {
        let s = admissible_family(4).unwrap().particular();
        let mut frame = build_frame(4, &s).unwrap();
        frame.operators.truncate(9);
        frame.labels.truncate(9);
        frame.gram = gram_matrix(&frame.operators).unwrap();
        let probs = exact_probabilities(&DensityMatrix::maximally_mixed(4), &frame).unwrap();
        assert!(matches!(
            reconstruct(&frame, &probs),
            Err(Error::RankDeficient { needed: 15, .. })
        ));
    }
}
