//! End-to-end acceptance run. Prints one PASS/FAIL line per criterion and
//! fails if any criterion fails.

use std::collections::{BTreeSet, HashMap, HashSet, VecDeque};
use std::io::Write;
use std::time::{Duration, Instant};

use fwigner_core::lines::{bundle, enumerate_lines, sl2_group_order, IsotropicLine, LineType};
use fwigner_core::matrix::{max_abs_diff, CMatrix, SPECTRUM_TOL};
use fwigner_core::ring::{grid_points, PhasePoint};
use fwigner_core::signs::{
    admissible_family, build_system, free_sign_count, odd_closed_form, solve, standard_system,
    SignAssignment, SolveOutcome,
};
use fwigner_core::phase::displacement;
use fwigner_core::spectra::census;
use fwigner_core::tomography::{build_frame, exact_probabilities, frame_rank, reconstruct};
use fwigner_core::verify::{
    composition_error, covariance_error, inverse_error, inversion_error, point_pairs,
    trace_orthogonality_error, wigner_orthogonality_error, OperatorCache,
};
use fwigner_core::wigner::{
    bundle_marginal, line_operator, phase_point_operator, projector_residual, DensityMatrix,
};
use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

type Outcome = Result<String, String>;

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn within(elapsed: Duration, budget: Duration) -> Result<(), String> {
    ensure(elapsed <= budget, || format!("took {elapsed:.1?}, budget {budget:?}"))
}

fn pt(q: i64, p: i64, n: u32) -> PhasePoint {
    PhasePoint::new(q, p, n)
}

/// Prime power decomposition by trial division, kept separate from the crate.
fn prime_power(n: u32) -> Option<(u32, u32)> {
    let p = (2..=n).find(|d| n.is_multiple_of(*d))?;
    let mut m = n;
    let mut e = 0;
    while m.is_multiple_of(p) {
        m /= p;
        e += 1;
    }
    (m == 1).then_some((p, e))
}

fn parity_matrix(n: u32) -> CMatrix {
    let dim = n as usize;
    CMatrix::from_fn(dim, dim, |r, c| {
        if r == (dim - c) % dim {
            Complex64::new(1.0, 0.0)
        } else {
            Complex64::new(0.0, 0.0)
        }
    })
}

fn odd_uniqueness() -> Outcome {
    let start = Instant::now();
    for n in [3u32, 5, 7, 9, 15] {
        let lines = enumerate_lines(n).map_err(|e| e.to_string())?;
        let all: Vec<&IsotropicLine> = lines.iter().collect();
        let SolveOutcome::Unique(s) = solve(&build_system(n, &all, false, false)) else {
            return Err(format!("N = {n}: solution is not unique"));
        };
        let closed = SignAssignment::from_fn(n, |s| {
            if (s.q() * s.p()) % 2 == 0 {
                1
            } else {
                -1
            }
        });
        ensure(s == closed, || format!("N = {n}: solution differs from (-1)^(qp)"))?;
        ensure(s == odd_closed_form(n).unwrap(), || format!("N = {n}: closed form helper disagrees"))?;
        let w = phase_point_operator(pt(0, 0, n), &s).map_err(|e| e.to_string())?;
        let err = max_abs_diff(&w.matrix, &parity_matrix(n));
        ensure(err <= 1e-10, || format!("N = {n}: W(0,0) differs from parity by {err:.2e}"))?;
    }
    within(start.elapsed(), Duration::from_secs(10))?;
    Ok(format!("N in {{3,5,7,9,15}} unique, W(0,0) = parity, {:.1?}", start.elapsed()))
}

/// All order-N isotropic subgroups from spans of point pairs.
fn brute_force_lines(n: u32) -> HashSet<Vec<(u32, u32)>> {
    let pts: Vec<PhasePoint> = grid_points(n).collect();
    let mut found = HashSet::new();
    for &a in &pts {
        for &b in &pts {
            let mut span = BTreeSet::new();
            for i in 0..n as i64 {
                for j in 0..n as i64 {
                    let s = a.scale(i).add(b.scale(j));
                    span.insert((s.q(), s.p()));
                }
            }
            let isotropic = span.iter().all(|&(q1, p1)| {
                span.iter().all(|&(q2, p2)| (p1 as i64 * q2 as i64 - q1 as i64 * p2 as i64).rem_euclid(n as i64) == 0)
            });
            if span.len() == n as usize && isotropic {
                found.insert(span.into_iter().collect());
            }
        }
    }
    found
}

fn valuation(x: u32, p: u32, e: u32) -> u32 {
    if x == 0 {
        return e;
    }
    let mut v = 0;
    let mut x = x;
    while x.is_multiple_of(p) {
        x /= p;
        v += 1;
    }
    v
}

fn line_census() -> Outcome {
    let start = Instant::now();
    for n in [2u32, 3, 4, 5, 8, 9, 16] {
        let (p, e) = prime_power(n).unwrap();
        let lines = enumerate_lines(n).map_err(|e| e.to_string())?;
        let want = ((p.pow(e + 1) - 1) / (p - 1)) as usize;
        ensure(lines.len() == want, || format!("N = {n}: {} lines, expected {want}", lines.len()))?;
        for s in grid_points(n) {
            let v = valuation(s.q(), p, e).min(valuation(s.p(), p, e));
            let want = ((p.pow(v + 1) - 1) / (p - 1)) as usize;
            let got = lines.iter().filter(|l| l.contains(s)).count();
            ensure(got == want, || format!("N = {n}: {got} lines through {s}, expected {want}"))?;
        }
    }
    let oracle = brute_force_lines(6);
    let lines6 = enumerate_lines(6).map_err(|e| e.to_string())?;
    let ours: HashSet<Vec<(u32, u32)>> = lines6
        .iter()
        .map(|l| l.points.iter().map(|s| (s.q(), s.p())).collect())
        .collect();
    ensure(oracle.len() == 12 && ours == oracle, || {
        format!("N = 6: oracle {} lines, enumeration {}", oracle.len(), ours.len())
    })?;
    within(start.elapsed(), Duration::from_secs(30))?;
    Ok(format!("counts, through-point counts and N = 6 oracle agree, {:.1?}", start.elapsed()))
}

/// Orbits of the lines under the generators T and S applied to point sets.
fn orbit_sizes_oracle(n: u32, lines: &[IsotropicLine]) -> Vec<usize> {
    let key = |pts: &[PhasePoint]| -> Vec<(u32, u32)> {
        let mut v: Vec<(u32, u32)> = pts.iter().map(|s| (s.q(), s.p())).collect();
        v.sort_unstable();
        v
    };
    let index: HashMap<Vec<(u32, u32)>, usize> =
        lines.iter().enumerate().map(|(i, l)| (key(&l.points), i)).collect();
    let act = |m: [i64; 4], s: PhasePoint| {
        let (q, p) = (s.q() as i64, s.p() as i64);
        pt(m[0] * q + m[1] * p, m[2] * q + m[3] * p, n)
    };
    let gens = [[1, 1, 0, 1], [0, -1, 1, 0]];
    let mut seen = vec![false; lines.len()];
    let mut sizes = Vec::new();
    for start in 0..lines.len() {
        if seen[start] {
            continue;
        }
        seen[start] = true;
        let mut queue = VecDeque::from([start]);
        let mut size = 0;
        while let Some(i) = queue.pop_front() {
            size += 1;
            for g in gens {
                let image: Vec<PhasePoint> = lines[i].points.iter().map(|&s| act(g, s)).collect();
                let j = index[&key(&image)];
                if !seen[j] {
                    seen[j] = true;
                    queue.push_back(j);
                }
            }
        }
        sizes.push(size);
    }
    sizes.sort_unstable_by(|a, b| b.cmp(a));
    sizes
}

fn sl2_brute_force(n: u32) -> u64 {
    let n64 = n as u64;
    let mut count = 0;
    for a in 0..n64 {
        for b in 0..n64 {
            for c in 0..n64 {
                for d in 0..n64 {
                    if (a * d + n64 * n64 - b * c) % n64 == 1 % n64 {
                        count += 1;
                    }
                }
            }
        }
    }
    count
}

fn orbit_structure() -> Outcome {
    let start = Instant::now();
    for n in [2u32, 3, 4, 8, 9, 16] {
        let (p, e) = prime_power(n).unwrap();
        let lines = enumerate_lines(n).map_err(|e| e.to_string())?;
        let mut want: Vec<usize> = (0..=e / 2)
            .map(|k| if 2 * k == e { 1 } else { ((p + 1) * p.pow(e - 2 * k - 1)) as usize })
            .collect();
        want.sort_unstable_by(|a, b| b.cmp(a));
        ensure(want.len() as u32 == 1 + e / 2, || "orbit count formula".into())?;
        let oracle = orbit_sizes_oracle(n, &lines);
        ensure(oracle == want, || format!("N = {n}: oracle orbits {oracle:?}, expected {want:?}"))?;
        let mut ours = vec![0usize; lines.iter().map(|l| l.orbit_id + 1).max().unwrap()];
        for l in &lines {
            ours[l.orbit_id] += 1;
        }
        ours.sort_unstable_by(|a, b| b.cmp(a));
        ensure(ours == want, || format!("N = {n}: library orbits {ours:?}, expected {want:?}"))?;
        let order = (p as u64).pow(3 * e - 2) * (p as u64 * p as u64 - 1);
        let bfs = sl2_group_order(n);
        let brute = sl2_brute_force(n);
        ensure(bfs == order && brute == order, || {
            format!("N = {n}: group order bfs {bfs}, brute {brute}, expected {order}")
        })?;
    }
    within(start.elapsed(), Duration::from_secs(60))?;
    Ok(format!("orbit sizes and SL(2,Z_N) orders agree, {:.1?}", start.elapsed()))
}

fn even_free_signs() -> Outcome {
    for (n, want) in [(2u32, 1usize), (4, 4), (8, 10), (16, 22)] {
        let got = free_sign_count(n).map_err(|e| e.to_string())?;
        ensure(got == want, || format!("N = {n}: {got} free signs, expected {want}"))?;
        let e = n.trailing_zeros();
        ensure(want == 3 * (1 << (e - 1)) - 2, || "closed form".into())?;
    }
    let fam = admissible_family(4).map_err(|e| e.to_string())?;
    let free: Vec<(u32, u32)> = fam.free_points().iter().map(|s| (s.q(), s.p())).collect();
    ensure(free == [(1, 1), (1, 2), (1, 3), (2, 1)], || format!("N = 4 free points {free:?}"))?;
    for s in fam.members() {
        let (a, b, c, d) = (s.get(pt(1, 1, 4)), s.get(pt(1, 2, 4)), s.get(pt(1, 3, 4)), s.get(pt(2, 1, 4)));
        let table = [
            [1, 1, 1, 1],
            [1, a, b, c],
            [1, d, 1, -d],
            [1, c, -b, a],
        ];
        ensure(s.grid().iter().zip(&table).all(|(row, want)| row[..] == want[..]), || {
            format!("N = 4 table mismatch:\n{s}")
        })?;
    }
    Ok("dimensions 1, 4, 10, 22; N = 4 table matches for all 16 members".into())
}

fn type_b_inconsistency() -> Outcome {
    let lines4 = enumerate_lines(4).map_err(|e| e.to_string())?;
    let b4 = lines4.iter().find(|l| l.line_type == LineType::B).unwrap();
    let mut pts: Vec<(u32, u32)> = b4.points.iter().map(|s| (s.q(), s.p())).collect();
    pts.sort_unstable();
    ensure(pts == [(0, 0), (0, 2), (2, 0), (2, 2)], || format!("N = 4 type-b line {pts:?}"))?;
    let SolveOutcome::Inconsistent(w) = solve(&standard_system(4, &lines4, true)) else {
        return Err("N = 4 with the type-b line is consistent".into());
    };
    ensure(w.point == (2, 2) && w.first.value == 1 && w.second.value == -1, || {
        format!("witness at {:?}: {} vs {}", w.point, w.first.value, w.second.value)
    })?;

    let lines8 = enumerate_lines(8).map_err(|e| e.to_string())?;
    let type_a: Vec<&IsotropicLine> = lines8.iter().filter(|l| l.line_type.is_type_a()).collect();
    let type_b: Vec<&IsotropicLine> = lines8.iter().filter(|l| l.line_type == LineType::B).collect();
    ensure(type_b.len() == 3, || format!("{} type-b lines for N = 8", type_b.len()))?;
    ensure(!matches!(solve(&build_system(8, &type_a, true, true)), SolveOutcome::Inconsistent(_)), || {
        "N = 8 type-a system alone is inconsistent".into()
    })?;
    for b in &type_b {
        let mut chosen = type_a.clone();
        chosen.push(b);
        let out = solve(&build_system(8, &chosen, true, true));
        ensure(matches!(out, SolveOutcome::Inconsistent(_)), || {
            format!("N = 8 type-b line {:?} is consistent with type a", b.generators)
        })?;
    }
    Ok("N = 4 witness at (2,2): +1 vs -1; each N = 8 type-b line conflicts".into())
}

/// Probabilities over the N cosets of a line without a single-shift bundle,
/// each coset measured by the projector conjugated to its first point.
fn coset_probabilities(rho: &DensityMatrix, line: &IsotropicLine, s: &SignAssignment) -> Vec<f64> {
    let n = line.n;
    let p = line_operator(line, s).unwrap();
    let mut covered = HashSet::new();
    let mut probs = Vec::new();
    for r in grid_points(n) {
        if covered.contains(&r) {
            continue;
        }
        covered.extend(line.points.iter().map(|&x| x.add(r)));
        let d = displacement(r);
        probs.push(rho.expectation(&(&d * &p * d.adjoint())).re);
    }
    assert_eq!(probs.len(), n as usize);
    probs
}

fn marginals() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let mut worst_residual: f64 = 0.0;
    let mut min_prob = f64::INFINITY;
    let mut worst_sum: f64 = 0.0;
    let mut members_checked = 0;
    for n in [2u32, 3, 4, 5, 7, 8, 9] {
        let lines = enumerate_lines(n).map_err(|e| e.to_string())?;
        let fam = admissible_family(n).map_err(|e| e.to_string())?;
        let members: Vec<u64> = if fam.size() <= 16 {
            (0..fam.size()).collect()
        } else {
            (0..32).map(|_| rand::Rng::random_range(&mut rng, 0..fam.size())).collect()
        };
        let checked: Vec<&IsotropicLine> = lines
            .iter()
            .filter(|l| if n % 2 == 1 { true } else { l.line_type.is_type_a() })
            .collect();
        for &m in &members {
            let s = fam.member_by_index(m);
            members_checked += 1;
            for l in &checked {
                let r = projector_residual(&line_operator(l, &s).map_err(|e| e.to_string())?)
                    .map_err(|e| e.to_string())?;
                worst_residual = worst_residual.max(r);
            }
        }
        let s = fam.member_by_index(*members.last().unwrap());
        for _ in 0..10 {
            let rho = DensityMatrix::random_mixed(n, &mut rng);
            for l in &checked {
                let probs = match bundle(l) {
                    Ok(b) => bundle_marginal(&rho, l, &b, &s).map_err(|e| e.to_string())?,
                    Err(_) => coset_probabilities(&rho, l, &s),
                };
                min_prob = probs.iter().copied().fold(min_prob, f64::min);
                worst_sum = worst_sum.max((probs.iter().sum::<f64>() - 1.0).abs());
            }
        }
    }
    ensure(worst_residual <= 1e-10, || format!("projector residual {worst_residual:.2e}"))?;
    ensure(min_prob >= -1e-10, || format!("negative probability {min_prob:.2e}"))?;
    ensure(worst_sum <= 1e-9, || format!("bundle sum off by {worst_sum:.2e}"))?;
    Ok(format!(
        "{members_checked} sign assignments, residual {worst_residual:.1e}, min p {min_prob:.1e}, sum err {worst_sum:.1e}"
    ))
}

fn tomography() -> Outcome {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(77);
    let mut worst: f64 = 0.0;
    for (n, want) in [(2u32, 3usize), (4, 15), (8, 63)] {
        let fam = admissible_family(n).map_err(|e| e.to_string())?;
        let frame = build_frame(n, &fam.particular()).map_err(|e| e.to_string())?;
        let rank = frame_rank(&frame);
        ensure(rank == want, || format!("N = {n}: rank {rank}, expected {want}"))?;
        ensure(frame.len() == (3 * n * (n - 1) / 2) as usize, || format!("N = {n}: frame size {}", frame.len()))?;
        for k in 0..20 {
            let rho = if k % 2 == 0 {
                DensityMatrix::random_pure(n, &mut rng)
            } else {
                DensityMatrix::random_mixed(n, &mut rng)
            };
            let probs = exact_probabilities(&rho, &frame).map_err(|e| e.to_string())?;
            let back = reconstruct(&frame, &probs).map_err(|e| e.to_string())?;
            worst = worst.max(max_abs_diff(&back, rho.matrix()));
        }
    }
    ensure(worst <= 1e-8, || format!("round-trip error {worst:.2e}"))?;
    within(start.elapsed(), Duration::from_secs(30))?;
    Ok(format!("ranks 3, 15, 63; round-trip error {worst:.1e}, {:.1?}", start.elapsed()))
}

fn close(a: &[f64], b: &[f64], tol: f64) -> bool {
    a.len() == b.len() && a.iter().zip(b).all(|(x, y)| (x - y).abs() <= tol)
}

fn spectra_census() -> Outcome {
    for (n, want) in [(2u32, 1usize), (4, 3), (8, 4)] {
        let c = census(n, SPECTRUM_TOL).map_err(|e| e.to_string())?;
        ensure(c.classes.len() == want, || format!("N = {n}: {} spectra, expected {want}", c.classes.len()))?;
    }
    let (r2, r6) = (2f64.sqrt(), 6f64.sqrt());
    let sorted = |mut v: Vec<f64>| {
        v.sort_by(|a, b| b.partial_cmp(a).unwrap());
        v
    };
    let closed = [
        sorted(vec![(1.0 + r6) / 2.0, (1.0 - r6) / 2.0, -0.5, 0.5]),
        sorted(vec![(1.0 + 2.0 * r2) / 2.0, -0.5, (1.0 - r2) / 2.0, (1.0 - r2) / 2.0]),
        sorted(vec![(1.0 + r2) / 2.0, (1.0 + r2) / 2.0, (1.0 - 2.0 * r2) / 2.0, -0.5]),
    ];
    let c4 = census(4, SPECTRUM_TOL).map_err(|e| e.to_string())?;
    for want in &closed {
        ensure(c4.classes.iter().any(|k| close(&k.eigenvalues, want, 1e-9)), || {
            format!("N = 4 spectrum {want:?} not found")
        })?;
    }
    let start = Instant::now();
    let c16 = census(16, SPECTRUM_TOL).map_err(|e| e.to_string())?;
    let elapsed = start.elapsed();
    ensure(c16.family_size == 1 << 22, || format!("N = 16 family size {}", c16.family_size))?;
    ensure(c16.classes.len() == 15, || format!("N = 16: {} spectra, expected 15", c16.classes.len()))?;
    within(elapsed, Duration::from_secs(600))?;
    Ok(format!("1, 3, 4, 15 distinct spectra; N = 4 closed forms match; N = 16 in {elapsed:.1?}"))
}

fn operator_algebra() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(99);
    let mut report = Vec::new();
    for n in (2u32..=8).chain([16]) {
        let pairs = point_pairs(n, &mut rng);
        let expected_pairs = if n <= 8 { (n * n * n * n) as usize } else { 1000 };
        ensure(pairs.len() == expected_pairs, || format!("N = {n}: {} pairs", pairs.len()))?;
        let s = admissible_family(n).map_err(|e| e.to_string())?.member_by_index(1);
        let ops = OperatorCache::new(&s, 16).map_err(|e| e.to_string())?;
        let errors = [
            ("trace orthogonality", trace_orthogonality_error(&pairs)),
            ("composition", composition_error(&pairs)),
            ("inverse", inverse_error(&pairs)),
            ("wigner orthogonality", wigner_orthogonality_error(&ops, &pairs).map_err(|e| e.to_string())?),
            ("covariance", covariance_error(&ops, &pairs).map_err(|e| e.to_string())?),
            ("inversion", inversion_error(&ops, &s, &pairs).map_err(|e| e.to_string())?),
        ];
        for (name, err) in errors {
            ensure(err <= 1e-10, || format!("N = {n}: {name} error {err:.2e}"))?;
        }
        report.push(errors.iter().map(|e| e.1).fold(0.0, f64::max));
    }
    let worst = report.iter().copied().fold(0.0, f64::max);
    Ok(format!("N = 2..8 exhaustive, N = 16 on 1000 pairs, max error {worst:.1e}"))
}

#[test]
fn acceptance() {
    let criteria: [(&str, fn() -> Outcome); 9] = [
        ("odd-N uniqueness", odd_uniqueness),
        ("line census", line_census),
        ("orbit structure", orbit_structure),
        ("even-N free signs", even_free_signs),
        ("type-b inconsistency", type_b_inconsistency),
        ("marginals", marginals),
        ("tomography", tomography),
        ("spectra census", spectra_census),
        ("operator algebra", operator_algebra),
    ];
    // FW_ACCEPTANCE=6,8 runs a subset.
    let only: Option<Vec<usize>> = std::env::var("FW_ACCEPTANCE")
        .ok()
        .map(|v| v.split(',').filter_map(|x| x.trim().parse().ok()).collect());
    let mut failures = Vec::new();
    let mut out = std::io::stdout().lock();
    for (i, (name, run)) in criteria.iter().enumerate() {
        if only.as_ref().is_some_and(|o| !o.contains(&(i + 1))) {
            writeln!(out, "[{}] {name}: SKIPPED (FW_ACCEPTANCE)", i + 1).unwrap();
            continue;
        }
        let line = match run() {
            Ok(detail) => format!("[{}] {name}: PASS ({detail})", i + 1),
            Err(why) => {
                failures.push(*name);
                format!("[{}] {name}: FAIL ({why})", i + 1)
            }
        };
        writeln!(out, "{line}").unwrap();
        out.flush().unwrap();
    }
    assert!(failures.is_empty(), "failed criteria: {failures:?}");
}
