//! `fwigner`: discrete Wigner function toolkit.
//!
//! Every subcommand prints one JSON document on stdout, or a plain-text
//! table with `--pretty`. Exit codes: 0 success, 1 usage or input error,
//! 2 a mathematical check failed.

use std::collections::BTreeMap;
use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use fwigner_core::lines::{bundle, census as line_census, enumerate_lines, LineType};
use fwigner_core::matrix::{max_abs_diff, SPECTRUM_TOL};
use fwigner_core::signs::{
    admissible_family, parse_sign_choice, solve, standard_system, SignFamily, SolveOutcome,
};
use fwigner_core::tomography::{build_frame, exact_probabilities, frame_rank, reconstruct};
use fwigner_core::wigner::{bundle_marginal, wigner_function, DensityMatrix, DensityMatrixFile};
use fwigner_core::{check_dimension, spectra, verify, Error};
use serde::Serialize;
use serde_json::{json, Value};

#[derive(Parser)]
#[command(name = "fwigner", version, about = "Discrete Wigner functions on an N x N grid")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Output {
    /// Emit JSON (the default).
    #[arg(long, conflicts_with = "pretty")]
    json: bool,
    /// Human-readable tables instead of JSON.
    #[arg(long)]
    pretty: bool,
}

#[derive(Subcommand)]
enum Command {
    /// Isotropic lines: count, orbits and types.
    Lines {
        #[arg(long)]
        n: u32,
        #[command(flatten)]
        out: Output,
    },
    /// Solve the sign system for the marginals conditions.
    Signs {
        #[arg(long)]
        n: u32,
        /// Also impose the conditions on type-b lines.
        #[arg(long)]
        include_type_b: bool,
        #[command(flatten)]
        out: Output,
    },
    /// Wigner function of a state and its bundle marginals.
    Wigner {
        #[arg(long)]
        n: u32,
        /// JSON file `{"n": N, "re": [[..]], "im": [[..]]}`.
        #[arg(long)]
        state: PathBuf,
        /// Free signs as 0/1 characters, `1` meaning S = -1.
        #[arg(long)]
        sign_choice: Option<String>,
        #[command(flatten)]
        out: Output,
    },
    /// Tomographic frame rank and state round trip.
    Tomo {
        #[arg(long)]
        n: u32,
        #[arg(long)]
        sign_choice: Option<String>,
        #[arg(long)]
        state: Option<PathBuf>,
        /// Only report frame size and rank.
        #[arg(long)]
        rank_only: bool,
        #[command(flatten)]
        out: Output,
    },
    /// Distinct spectra of W(0,0) over the sign family (N = 2^n).
    Spectra {
        #[arg(long)]
        n: u32,
        /// Allow N > 8 (N = 16 takes minutes).
        #[arg(long)]
        deep: bool,
        #[command(flatten)]
        out: Output,
    },
    /// Run the invariant battery.
    Verify {
        #[arg(long)]
        n: u32,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        sign_choice: Option<String>,
        #[command(flatten)]
        out: Output,
    },
}

#[derive(Debug, thiserror::Error)]
enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error(transparent)]
    Core(#[from] Error),
}

impl CliError {
    fn is_usage(&self) -> bool {
        match self {
            CliError::Usage(_) => true,
            // Bad input reaches the library as these.
            CliError::Core(e) => matches!(
                e,
                Error::DimensionOutOfRange { .. }
                    | Error::NotPowerOfTwo(_)
                    | Error::SignChoiceLength { .. }
                    | Error::InvalidState(_)
                    | Error::NotHermitian(_)
                    | Error::DimensionMismatch(..)
                    | Error::BadProbabilities(_)
            ),
        }
    }
}

/// What a subcommand produced.
struct Report {
    json: Value,
    text: String,
    failed: bool,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    let pretty = match &cli.command {
        Command::Lines { out, .. }
        | Command::Signs { out, .. }
        | Command::Wigner { out, .. }
        | Command::Tomo { out, .. }
        | Command::Spectra { out, .. }
        | Command::Verify { out, .. } => out.pretty,
    };
    match run(cli.command) {
        Ok(report) => {
            // A closed pipe (e.g. `| head`) is not an error.
            let mut out = std::io::stdout().lock();
            let _ = if pretty {
                write!(out, "{}", report.text)
            } else {
                writeln!(out, "{}", report.json)
            };
            if report.failed {
                ExitCode::from(2)
            } else {
                ExitCode::SUCCESS
            }
        }
        Err(e) => {
            eprintln!("error: {e}");
            if e.is_usage() {
                ExitCode::from(1)
            } else {
                ExitCode::from(2)
            }
        }
    }
}

fn run(command: Command) -> Result<Report, CliError> {
    match command {
        Command::Lines { n, .. } => lines(n),
        Command::Signs { n, include_type_b, .. } => signs(n, include_type_b),
        Command::Wigner { n, state, sign_choice, .. } => wigner(n, &state, sign_choice.as_deref()),
        Command::Tomo { n, sign_choice, state, rank_only, .. } => {
            tomo(n, sign_choice.as_deref(), state.as_deref(), rank_only)
        }
        Command::Spectra { n, deep, .. } => spectra_cmd(n, deep),
        Command::Verify { n, seed, sign_choice, .. } => verify_cmd(n, seed, sign_choice.as_deref()),
    }
}

fn to_value<T: Serialize>(v: &T) -> Value {
    serde_json::to_value(v).expect("plain data serializes")
}

fn lines(n: u32) -> Result<Report, CliError> {
    check_dimension(n)?;
    let all = enumerate_lines(n)?;
    let c = line_census(&all, n);
    let orbits: Vec<Value> = c
        .orbit_sizes
        .iter()
        .enumerate()
        .map(|(id, size)| json!({"id": id, "size": size}))
        .collect();
    let types = if n % 2 == 1 {
        json!({"odd": c.odd})
    } else {
        json!({"a1": c.a1, "a2": c.a2, "b": c.b})
    };
    let mut text = format!("N = {n}: {} isotropic lines\n\n", c.total);
    text.push_str(&format!("{:>4}  {:>5}  {:>4}  generators\n", "id", "orbit", "type"));
    for l in &all {
        let gens: Vec<String> = l.generators.iter().map(|g| g.to_string()).collect();
        let t = match l.line_type {
            LineType::A1 => "a1",
            LineType::A2 => "a2",
            LineType::B => "b",
            LineType::Odd => "odd",
        };
        text.push_str(&format!("{:>4}  {:>5}  {:>4}  {}\n", l.id, l.orbit_id, t, gens.join(" ")));
    }
    Ok(Report {
        json: json!({"n": n, "total": c.total, "orbits": orbits, "types": types}),
        text,
        failed: false,
    })
}

fn sign_grid_text(grid: &[Vec<i8>]) -> String {
    grid.iter()
        .map(|row| {
            let cells: Vec<String> = row.iter().map(|v| format!("{v:>3}")).collect();
            cells.join("") + "\n"
        })
        .collect()
}

fn family_json(f: &SignFamily) -> Value {
    json!({
        "nullspace_dim": f.nullspace_dim(),
        "family_size": f.size(),
        "free_points": f.free_points().iter().map(|s| [s.q(), s.p()]).collect::<Vec<_>>(),
        "particular": f.particular().grid(),
    })
}

fn signs(n: u32, include_type_b: bool) -> Result<Report, CliError> {
    check_dimension(n)?;
    let all = enumerate_lines(n)?;
    let system = standard_system(n, &all, include_type_b);
    let outcome = solve(&system);
    let mut json = json!({
        "n": n,
        "include_type_b": include_type_b,
        "equations": system.equations.len(),
        "outcome": outcome.kind(),
    });
    let text;
    let mut failed = false;
    match &outcome {
        SolveOutcome::Unique(s) => {
            json["signs"] = to_value(&s.grid());
            text = format!("N = {n}: unique solution\n{}", sign_grid_text(&s.grid()));
        }
        SolveOutcome::Family(f) => {
            for (k, v) in family_json(f).as_object().unwrap() {
                json[k] = v.clone();
            }
            let free: Vec<String> = f.free_points().iter().map(|s| s.to_string()).collect();
            text = format!(
                "N = {n}: family of {} solutions, free signs in order: {}\nall free signs +1:\n{}",
                f.size(),
                free.join(" "),
                sign_grid_text(&f.particular().grid())
            );
        }
        SolveOutcome::Inconsistent(w) => {
            json["witness"] = to_value(w);
            let mut t = format!("N = {n}: inconsistent at {:?}\n", w.point);
            for (label, d) in [("first", &w.first), ("second", &w.second)] {
                t.push_str(&format!("{label} derivation gives {:+}:\n", d.value));
                for step in &d.steps {
                    t.push_str(&format!("  S{:?} = {:+}  from {:?}\n", step.point, step.value, step.source));
                }
            }
            text = t;
            // Only unexpected without the type-b lines.
            failed = !include_type_b;
        }
    }
    Ok(Report { json, text, failed })
}

fn parse_choice(bits: Option<&str>) -> Result<Option<Vec<bool>>, CliError> {
    bits.map(|b| parse_sign_choice(b).map_err(CliError::Usage)).transpose()
}

fn load_state(path: &std::path::Path, n: u32) -> Result<DensityMatrix, CliError> {
    let raw = std::fs::read_to_string(path)
        .map_err(|e| CliError::Usage(format!("cannot read {}: {e}", path.display())))?;
    let file: DensityMatrixFile = serde_json::from_str(&raw)
        .map_err(|e| CliError::Usage(format!("malformed state file {}: {e}", path.display())))?;
    if file.n != n {
        return Err(CliError::Usage(format!("state file has n = {}, expected {n}", file.n)));
    }
    Ok(DensityMatrix::from_file(&file)?)
}

fn choice_string(choice: &Option<Vec<bool>>, family: &SignFamily) -> String {
    match choice {
        Some(c) => c.iter().map(|&b| if b { '1' } else { '0' }).collect(),
        None => "0".repeat(family.nullspace_dim()),
    }
}

fn family_and_signs(n: u32, choice: &Option<Vec<bool>>) -> Result<(SignFamily, fwigner_core::signs::SignAssignment), CliError> {
    let family = admissible_family(n)?;
    let s = match choice {
        Some(c) => family.member(c)?,
        None => family.particular(),
    };
    Ok((family, s))
}

fn wigner(n: u32, state: &std::path::Path, sign_choice: Option<&str>) -> Result<Report, CliError> {
    check_dimension(n)?;
    let choice = parse_choice(sign_choice)?;
    let rho = load_state(state, n)?;
    let (family, s) = family_and_signs(n, &choice)?;
    let grid = wigner_function(&rho, &s)?;
    let lines = enumerate_lines(n)?;
    let mut bundles = Vec::new();
    let mut worst: f64 = 0.0;
    let mut min_prob = f64::INFINITY;
    for line in lines.iter().filter(|l| l.line_type != LineType::B) {
        let Ok(b) = bundle(line) else { continue };
        let probs = bundle_marginal(&rho, line, &b, &s)?;
        let sum: f64 = probs.iter().sum();
        for (i, p) in probs.iter().enumerate() {
            worst = worst.max((p - grid.sum_over(&b.translates[i])).abs());
            min_prob = min_prob.min(*p);
        }
        worst = worst.max((sum - 1.0).abs());
        bundles.push(json!({
            "line": line.id,
            "shift": [b.shift.q(), b.shift.p()],
            "probabilities": probs,
        }));
    }
    let position_err = grid
        .position_marginal()
        .iter()
        .enumerate()
        .map(|(q, m)| (m - rho.matrix()[(q, q)].re).abs())
        .fold(0.0, f64::max);
    let ok = worst <= 1e-9 && position_err <= 1e-9 && min_prob >= -1e-10 && (grid.sum() - 1.0).abs() <= 1e-9;
    let mut text = format!("W(q,p) for N = {n}, rows q, columns p\n");
    for row in grid.rows() {
        let cells: Vec<String> = row.iter().map(|v| format!("{v:>10.6}")).collect();
        text.push_str(&cells.join(" "));
        text.push('\n');
    }
    text.push_str(&format!(
        "\nsum {:.12}, {} bundles, max marginal error {worst:.2e}, min probability {min_prob:.3e}\n",
        grid.sum(),
        bundles.len()
    ));
    Ok(Report {
        json: json!({
            "n": n,
            "sign_choice": choice_string(&choice, &family),
            "free_points": family.free_points().iter().map(|p| [p.q(), p.p()]).collect::<Vec<_>>(),
            "grid": grid.rows(),
            "sum": grid.sum(),
            "position_marginal": grid.position_marginal(),
            "momentum_marginal": grid.momentum_marginal(),
            "bundles": bundles,
            "checks": {
                "max_marginal_error": worst,
                "position_marginal_error": position_err,
                "min_probability": min_prob,
                "passed": ok,
            },
        }),
        text,
        failed: !ok,
    })
}

fn tomo(n: u32, sign_choice: Option<&str>, state: Option<&std::path::Path>, rank_only: bool) -> Result<Report, CliError> {
    check_dimension(n)?;
    let choice = parse_choice(sign_choice)?;
    let rho = state.map(|p| load_state(p, n)).transpose()?;
    let (family, s) = family_and_signs(n, &choice)?;
    let frame = build_frame(n, &s)?;
    let rank = frame_rank(&frame);
    let needed = (n * n - 1) as usize;
    let mut json = json!({
        "n": n,
        "sign_choice": choice_string(&choice, &family),
        "frame_size": frame.len(),
        "rank": rank,
        "needed": needed,
        "complete": rank == needed,
    });
    let mut text = format!("N = {n}: {} frame operators, Gram rank {rank} of {needed}\n", frame.len());
    let mut failed = rank != needed;
    if !rank_only {
        json["bundles"] = json!(frame.line_ids().count());
        json["overcompleteness"] = json!(frame.len() as i64 - needed as i64);
        if let Some(rho) = rho {
            let probs = exact_probabilities(&rho, &frame)?;
            let back = reconstruct(&frame, &probs)?;
            let err = max_abs_diff(&back, rho.matrix());
            json["round_trip_error"] = json!(err);
            text.push_str(&format!("round-trip error {err:.3e}\n"));
            failed |= err > 1e-8;
        }
    }
    Ok(Report { json, text, failed })
}

fn spectra_cmd(n: u32, deep: bool) -> Result<Report, CliError> {
    check_dimension(n)?;
    if !n.is_power_of_two() {
        return Err(Error::NotPowerOfTwo(n).into());
    }
    if n > 8 && !deep {
        return Err(CliError::Usage(format!("N = {n} enumerates 2^{} sign choices; pass --deep", 3 * n / 2 - 2)));
    }
    let c = spectra::census(n, SPECTRUM_TOL)?;
    let classes: Vec<Value> = c
        .classes
        .iter()
        .map(|k| {
            let bits: String = k.representative_choice.iter().map(|&b| if b { '1' } else { '0' }).collect();
            json!({"eigenvalues": k.eigenvalues, "count": k.count, "representative": bits})
        })
        .collect();
    let mut text = format!(
        "N = {n}: {} distinct spectra over {} sign choices\n",
        c.classes.len(),
        c.family_size
    );
    for k in &c.classes {
        let ev: Vec<String> = k.eigenvalues.iter().map(|v| format!("{v:.6}")).collect();
        text.push_str(&format!("{:>9}  {}\n", k.count, ev.join(" ")));
    }
    Ok(Report {
        json: json!({
            "n": n,
            "family_size": c.family_size,
            "free_points": c.free_points,
            "distinct": c.classes.len(),
            "spectra": classes,
        }),
        text,
        failed: false,
    })
}

fn verify_cmd(n: u32, seed: u64, sign_choice: Option<&str>) -> Result<Report, CliError> {
    check_dimension(n)?;
    let choice = parse_choice(sign_choice)?;
    let report = verify::verify(n, seed, choice.as_deref())?;
    let mut counts: BTreeMap<&str, usize> = BTreeMap::new();
    let mut text = String::new();
    for c in &report.checks {
        let tag = match c.status {
            verify::Status::Pass => "pass",
            verify::Status::Fail => "FAIL",
            verify::Status::Skip => "skip",
        };
        *counts.entry(tag).or_default() += 1;
        text.push_str(&format!("{tag:<5} {:<36} {}\n", c.name, c.detail));
    }
    let passed = report.passed();
    let mut json = to_value(&report);
    json["passed"] = json!(passed);
    let tally: Vec<String> = counts.iter().map(|(k, v)| format!("{v} {k}")).collect();
    text.push_str(&format!(
        "\nN = {n}, seed {seed}: {} ({})\n",
        if passed { "all checks passed" } else { "FAILED" },
        tally.join(", ")
    ));
    Ok(Report { json, text, failed: !passed })
}
