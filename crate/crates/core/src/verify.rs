//! Invariant battery for one grid size.
//!
//! Small grids (N <= 8) are checked exhaustively; larger ones on seeded
//! random samples of point pairs.

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::lines::{
    bundle, enumerate_lines, expected_line_count, expected_lines_through, expected_orbit_sizes,
    expected_sl2_order, lines_through, sl2_group_order, IsotropicLine, LineType,
};
use crate::matrix::{hermiticity_defect, identity, max_abs_diff, trace, trace_inner, CMatrix};
use crate::phase::{displacement, epsilon, eta, tau_complex, TauPhase};
use crate::ring::{grid_points, symplectic_lift, PhasePoint};
use crate::signs::{admissible_family, odd_closed_form, SignAssignment};
use crate::tomography::{build_frame, exact_probabilities, frame_rank, reconstruct};
use crate::wigner::{
    bundle_marginal, phase_point_operator, projector_residual, wigner_function,
    DensityMatrix,
};

pub const ALGEBRA_TOL: f64 = 1e-10;
pub const EXHAUSTIVE_MAX_N: u32 = 8;
pub const SAMPLED_PAIRS: usize = 1000;

#[derive(Copy, Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Status {
    Pass,
    Fail,
    Skip,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    pub status: Status,
    pub detail: String,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct VerifyReport {
    pub n: u32,
    pub seed: u64,
    pub checks: Vec<Check>,
}

impl VerifyReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.status != Status::Fail)
    }

    fn push(&mut self, name: &str, ok: bool, detail: impl Into<String>) {
        self.checks.push(Check {
            name: name.to_string(),
            status: if ok { Status::Pass } else { Status::Fail },
            detail: detail.into(),
        });
    }

    fn skip(&mut self, name: &str, detail: impl Into<String>) {
        self.checks.push(Check {
            name: name.to_string(),
            status: Status::Skip,
            detail: detail.into(),
        });
    }

    fn error_check(&mut self, name: &str, err: f64, tol: f64) {
        self.push(name, err <= tol, format!("max error {err:.3e} (tol {tol:.0e})"));
    }
}

/// Every ordered pair for small N, otherwise `SAMPLED_PAIRS` random pairs.
pub fn point_pairs<R: Rng + ?Sized>(n: u32, rng: &mut R) -> Vec<(PhasePoint, PhasePoint)> {
    if n <= EXHAUSTIVE_MAX_N {
        grid_points(n)
            .flat_map(|a| grid_points(n).map(move |b| (a, b)))
            .collect()
    } else {
        let mut pick = || PhasePoint::new(rng.random_range(0..n) as i64, rng.random_range(0..n) as i64, n);
        (0..SAMPLED_PAIRS).map(|_| (pick(), pick())).collect()
    }
}

fn scalar(z: Complex64, m: &CMatrix) -> CMatrix {
    m * z
}

/// `max |Tr(D(a)^dagger D(b)) - N delta_ab|`.
pub fn trace_orthogonality_error(pairs: &[(PhasePoint, PhasePoint)]) -> f64 {
    pairs
        .iter()
        .map(|&(a, b)| {
            let n = a.modulus() as f64;
            let t = trace_inner(&displacement(a), &displacement(b)).expect("same size");
            let want = if a == b { n } else { 0.0 };
            (t - Complex64::new(want, 0.0)).norm()
        })
        .fold(0.0, f64::max)
}

/// `D(a) D(b) = tau^<a,b> epsilon(a,b) D([a+b])`.
pub fn composition_error(pairs: &[(PhasePoint, PhasePoint)]) -> f64 {
    pairs
        .iter()
        .map(|&(a, b)| {
            let n = a.modulus();
            let phase = tau_complex(symplectic_lift(a, b), n) * epsilon(a, b) as f64;
            max_abs_diff(&(displacement(a) * displacement(b)), &scalar(phase, &displacement(a.add(b))))
        })
        .fold(0.0, f64::max)
}

/// `D(a) eta_a D([N - a]) = I`, over the first points of the pairs.
pub fn inverse_error(pairs: &[(PhasePoint, PhasePoint)]) -> f64 {
    pairs
        .iter()
        .map(|&(a, _)| {
            let dim = a.modulus() as usize;
            let inv = scalar(Complex64::new(eta(a) as f64, 0.0), &displacement(a.neg()));
            max_abs_diff(&(displacement(a) * inv), &identity(dim))
        })
        .fold(0.0, f64::max)
}

/// Phase-point operators, built on demand and cached for small grids.
pub struct OperatorCache<'a> {
    signs: &'a SignAssignment,
    all: Option<Vec<CMatrix>>,
}

impl<'a> OperatorCache<'a> {
    /// Caches every operator when N <= `cache_max_n`.
    pub fn new(signs: &'a SignAssignment, cache_max_n: u32) -> Result<Self> {
        let all = if signs.n() <= cache_max_n {
            Some(
                crate::wigner::all_phase_point_operators(signs)?
                    .into_iter()
                    .map(|w| w.matrix)
                    .collect(),
            )
        } else {
            None
        };
        Ok(Self { signs, all })
    }

    pub fn get(&self, s: PhasePoint) -> Result<CMatrix> {
        match &self.all {
            Some(all) => Ok(all[s.index()].clone()),
            None => Ok(phase_point_operator(s, self.signs)?.matrix),
        }
    }

    pub fn is_cached(&self) -> bool {
        self.all.is_some()
    }
}

/// `max |Tr(W(a) W(b)) - N delta_ab|`.
pub fn wigner_orthogonality_error(ops: &OperatorCache, pairs: &[(PhasePoint, PhasePoint)]) -> Result<f64> {
    let mut worst: f64 = 0.0;
    for &(a, b) in pairs {
        let n = a.modulus() as f64;
        let t = trace_inner(&ops.get(a)?, &ops.get(b)?)?;
        let want = if a == b { n } else { 0.0 };
        worst = worst.max((t - Complex64::new(want, 0.0)).norm());
    }
    Ok(worst)
}

/// `D(b) W(a) D(b)^dagger = W([a + b])`.
pub fn covariance_error(ops: &OperatorCache, pairs: &[(PhasePoint, PhasePoint)]) -> Result<f64> {
    let mut worst: f64 = 0.0;
    for &(a, b) in pairs {
        let d = displacement(b);
        let moved = &d * ops.get(a)? * d.adjoint();
        worst = worst.max(max_abs_diff(&moved, &ops.get(a.add(b))?));
    }
    Ok(worst)
}

/// `S(a) D(a) = (1/N) sum_b omega^<a,b> W(b)` at every point when the
/// operators are cached; otherwise the equivalent trace form
/// `Tr(W(b) D(a)^dagger) = omega^<b,a> S(a)` on the pairs.
pub fn inversion_error(
    ops: &OperatorCache,
    signs: &SignAssignment,
    pairs: &[(PhasePoint, PhasePoint)],
) -> Result<f64> {
    let n = signs.n();
    let mut worst: f64 = 0.0;
    if ops.is_cached() {
        for a in grid_points(n) {
            let mut rhs = CMatrix::zeros(n as usize, n as usize);
            for b in grid_points(n) {
                rhs += ops.get(b)? * TauPhase::new(2 * symplectic_lift(a, b), n).to_complex();
            }
            rhs /= Complex64::new(n as f64, 0.0);
            let lhs = scalar(Complex64::new(signs.get(a) as f64, 0.0), &displacement(a));
            worst = worst.max(max_abs_diff(&lhs, &rhs));
        }
    } else {
        for &(a, b) in pairs {
            let t = trace_inner(&displacement(a), &ops.get(b)?)?;
            let want = TauPhase::new(2 * symplectic_lift(b, a), n).to_complex() * signs.get(a) as f64;
            worst = worst.max((t - want).norm());
        }
    }
    Ok(worst)
}

fn check_lines(report: &mut VerifyReport, n: u32, lines: &[IsotropicLine]) {
    let expected = expected_line_count(n);
    report.push(
        "line_count",
        lines.len() == expected,
        format!("{} lines, expected {expected}", lines.len()),
    );
    let broken: Vec<String> = lines
        .iter()
        .filter_map(|l| l.check_invariants().err().map(|e| format!("line {}: {e}", l.id)))
        .collect();
    report.push("line_invariants", broken.is_empty(), broken.join("; "));

    if expected_lines_through(PhasePoint::new(0, 0, n)).is_some() {
        let bad = grid_points(n)
            .filter(|&s| Some(lines_through(s, lines).len()) != expected_lines_through(s))
            .count();
        report.push("lines_through_points", bad == 0, format!("{bad} points disagree"));
    } else {
        report.skip("lines_through_points", "closed form covers prime powers only");
    }

    match expected_orbit_sizes(n) {
        Some(want) => {
            let got = crate::lines::census(lines, n).orbit_sizes;
            report.push("orbit_sizes", got == want, format!("{got:?}, expected {want:?}"));
        }
        None => report.skip("orbit_sizes", "closed form covers prime powers only"),
    }

    let order = expected_sl2_order(n);
    if order <= 2_000_000 {
        let got = sl2_group_order(n);
        report.push("sl2_order", got == order, format!("{got}, expected {order}"));
    } else {
        report.skip("sl2_order", format!("group of order {order} not enumerated"));
    }
}

fn check_signs(report: &mut VerifyReport, n: u32, signs: &SignAssignment, lines: &[IsotropicLine]) {
    report.push(
        "standard_marginal_signs",
        signs.has_standard_marginals(),
        "S(q,0) = S(0,p) = 1",
    );
    report.push(
        "sign_symmetry",
        signs.symmetry_violation().is_none(),
        format!("{:?}", signs.symmetry_violation().map(|s| (s.q(), s.p()))),
    );
    if n % 2 == 1 {
        let closed = odd_closed_form(n).expect("odd");
        report.push("odd_closed_form", *signs == closed, "S(q,p) = (-1)^(qp)");
    } else if n.is_power_of_two() {
        let dim = admissible_family(n).map(|f| f.nullspace_dim());
        let want = 3 * n as usize / 2 - 2;
        report.push(
            "free_sign_count",
            dim.as_ref().ok() == Some(&want),
            format!("{dim:?}, expected {want}"),
        );
    }
    let failing: Vec<usize> = lines
        .iter()
        .filter(|l| l.line_type != LineType::B && !signs.satisfies_line(l))
        .map(|l| l.id)
        .collect();
    report.push("line_conditions", failing.is_empty(), format!("violated on lines {failing:?}"));
}

fn check_wigner(
    report: &mut VerifyReport,
    n: u32,
    signs: &SignAssignment,
    lines: &[IsotropicLine],
    ops: &OperatorCache,
    rng: &mut ChaCha8Rng,
) -> Result<()> {
    let dim = n as usize;
    let mut herm: f64 = 0.0;
    let mut tr: f64 = 0.0;
    let mut total = CMatrix::zeros(dim, dim);
    for s in grid_points(n) {
        let w = ops.get(s)?;
        herm = herm.max(hermiticity_defect(&w));
        tr = tr.max((trace(&w) - Complex64::new(1.0, 0.0)).norm());
        total += w;
    }
    report.error_check("wigner_hermitian", herm, ALGEBRA_TOL);
    report.error_check("wigner_unit_trace", tr, ALGEBRA_TOL);
    let nid = identity(dim) * Complex64::new(n as f64, 0.0);
    report.error_check("wigner_sum_identity", max_abs_diff(&total, &nid), 1e-9);

    let spec = crate::matrix::hermitian_eigenvalues(&ops.get(PhasePoint::new(0, 0, n))?)?;
    let moments = (spec.sum() - 1.0).abs().max((spec.sum_of_squares() - n as f64).abs());
    report.error_check("origin_spectrum_moments", moments, 1e-9);

    let mut proj: f64 = 0.0;
    for l in lines.iter().filter(|l| l.line_type != LineType::B) {
        let p = crate::wigner::line_operator(l, signs)?;
        proj = proj.max(projector_residual(&p)?);
    }
    report.error_check("line_projectors_rank_one", proj, ALGEBRA_TOL);

    let mut min_prob: f64 = f64::INFINITY;
    let mut sum_err: f64 = 0.0;
    let mut marg_err: f64 = 0.0;
    let bundled: Vec<_> = lines
        .iter()
        .filter(|l| l.line_type != LineType::B)
        .filter_map(|l| bundle(l).ok().map(|b| (l, b)))
        .collect();
    for _ in 0..10 {
        let rho = DensityMatrix::random_mixed(n, rng);
        let grid = wigner_function(&rho, signs)?;
        sum_err = sum_err.max((grid.sum() - 1.0).abs());
        for (q, m) in grid.position_marginal().iter().enumerate() {
            marg_err = marg_err.max((m - rho.matrix()[(q, q)].re).abs());
        }
        for (l, b) in &bundled {
            let probs = bundle_marginal(&rho, l, b, signs)?;
            min_prob = min_prob.min(probs.iter().copied().fold(f64::INFINITY, f64::min));
            sum_err = sum_err.max((probs.iter().sum::<f64>() - 1.0).abs());
            for (i, p) in probs.iter().enumerate() {
                marg_err = marg_err.max((p - grid.sum_over(&b.translates[i])).abs());
            }
        }
    }
    report.push(
        "bundle_probabilities_nonnegative",
        min_prob >= -ALGEBRA_TOL,
        format!("min {min_prob:.3e}"),
    );
    report.error_check("probabilities_normalized", sum_err, 1e-9);
    report.error_check("bundle_marginals_match_wigner", marg_err, 1e-9);
    Ok(())
}

pub const TOMOGRAPHY_MAX_N: u32 = 16;

fn check_tomography(report: &mut VerifyReport, n: u32, signs: &SignAssignment, rng: &mut ChaCha8Rng) -> Result<()> {
    if n > TOMOGRAPHY_MAX_N {
        report.skip("frame_rank", format!("frame Gram matrix not formed above N = {TOMOGRAPHY_MAX_N}"));
        return Ok(());
    }
    let frame = build_frame(n, signs)?;
    let rank = frame_rank(&frame);
    let needed = (n * n - 1) as usize;
    report.push("frame_rank", rank == needed, format!("rank {rank} of {} operators, need {needed}", frame.len()));
    if rank < needed {
        return Ok(());
    }
    let mut worst: f64 = 0.0;
    for k in 0..4 {
        let rho = if k % 2 == 0 {
            DensityMatrix::random_pure(n, rng)
        } else {
            DensityMatrix::random_mixed(n, rng)
        };
        let probs = exact_probabilities(&rho, &frame)?;
        worst = worst.max(max_abs_diff(&reconstruct(&frame, &probs)?, rho.matrix()));
    }
    report.error_check("tomography_round_trip", worst, 1e-8);
    Ok(())
}

/// Runs every check for grid size `n` with the admissible sign assignment
/// selected by `choice` (all free signs +1 when absent).
pub fn verify(n: u32, seed: u64, choice: Option<&[bool]>) -> Result<VerifyReport> {
    crate::check_dimension(n)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut report = VerifyReport { n, seed, checks: Vec::new() };
    let lines = enumerate_lines(n)?;
    check_lines(&mut report, n, &lines);

    let signs = match crate::signs::signs_for_choice(n, choice) {
        Ok(s) => s,
        Err(crate::Error::Inconsistent) => {
            report.push("sign_system_consistent", false, "admissible sign system has no solution");
            return Ok(report);
        }
        Err(e) => return Err(e),
    };
    check_signs(&mut report, n, &signs, &lines);

    let pairs = point_pairs(n, &mut rng);
    report.error_check("displacement_trace_orthogonality", trace_orthogonality_error(&pairs), ALGEBRA_TOL);
    report.error_check("displacement_composition", composition_error(&pairs), ALGEBRA_TOL);
    report.error_check("displacement_inverse", inverse_error(&pairs), ALGEBRA_TOL);

    let ops = OperatorCache::new(&signs, 32)?;
    report.error_check("wigner_orthogonality", wigner_orthogonality_error(&ops, &pairs)?, ALGEBRA_TOL);
    report.error_check("wigner_covariance", covariance_error(&ops, &pairs)?, ALGEBRA_TOL);
    report.error_check("wigner_inversion", inversion_error(&ops, &signs, &pairs)?, ALGEBRA_TOL);

    check_wigner(&mut report, n, &signs, &lines, &ops, &mut rng)?;
    check_tomography(&mut report, n, &signs, &mut rng)?;
    Ok(report)
}
