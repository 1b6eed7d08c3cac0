//! Command-line surface: compute the solved table, verify every check,
//! or print a compiled equation's coefficient tables.
//!
//! Exit codes: 0 success, 1 usage, 2 data/configuration problems,
//! 3 mathematical inconsistency. All numeric output is exact rational
//! text; no value field ever contains a decimal point.

use crate::dsl::parse_relation;
use crate::engine::{Assignment, CompiledEquation, Engine, SolveOptions, SolveResult, ASSIGNMENTS};
use crate::error::Error;
use crate::correlator::Symbol;
use crate::rational::{format_rational, Q};
use crate::series::Genus1Data;
use crate::verify::{compare_printed, DegreeComparison};
use num_traits::Zero;
use serde::Serialize;
use std::collections::BTreeMap;
use std::io::Write;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum OutputFormat {
    Csv,
    Json,
    Text,
}

/// Resolved run configuration shared by the subcommands.
pub struct RunConfig {
    pub max_degree: u32,
    pub genus1_path: Option<String>,
    pub relation_path: Option<String>,
    pub format: OutputFormat,
    pub output: Option<String>,
    pub threads: usize,
}

impl RunConfig {
    pub fn build_engine(&self) -> Result<Engine, Error> {
        let relation_text = match &self.relation_path {
            Some(path) => std::fs::read_to_string(path)
                .map_err(|e| Error::Data(format!("cannot read relation file {path}: {e}")))?,
            None => crate::RELATION_EQ1.to_string(),
        };
        let relation = parse_relation(&relation_text)?;
        let genus1 = match &self.genus1_path {
            Some(path) => {
                let text = std::fs::read_to_string(path)
                    .map_err(|e| Error::Data(format!("cannot read genus-1 file {path}: {e}")))?;
                Genus1Data::parse(&text)?
            }
            None => Genus1Data::shipped(),
        };
        Engine::new(&relation, genus1, self.threads)
    }

    fn write_out(&self, content: &str) -> Result<(), Error> {
        match &self.output {
            None => {
                print!("{content}");
                std::io::stdout().flush().ok();
                Ok(())
            }
            Some(path) => std::fs::write(path, content)
                .map_err(|e| Error::Data(format!("cannot write {path}: {e}"))),
        }
    }
}

#[derive(Serialize)]
struct TableRow {
    d: u32,
    n2: String,
    h2: String,
    p2: String,
}

fn table_rows(result: &SolveResult, max_degree: u32) -> Vec<TableRow> {
    (1..=max_degree)
        .map(|d| TableRow {
            d,
            n2: format_rational(&result.table.n2[&d].0),
            h2: format_rational(&result.table.h2[&d].0),
            p2: format_rational(&result.table.p2[&d].0),
        })
        .collect()
}

/// `compute`: solve and print the table.
pub fn cmd_compute(config: &RunConfig) -> Result<(), Error> {
    let engine = config.build_engine()?;
    let result = engine.solve_up_to(config.max_degree, &SolveOptions::default())?;
    let rows = table_rows(&result, config.max_degree);
    let content = match config.format {
        OutputFormat::Csv => {
            let mut out = String::from("d,N2,H2,P2\n");
            for r in &rows {
                out.push_str(&format!("{},{},{},{}\n", r.d, r.n2, r.h2, r.p2));
            }
            out
        }
        OutputFormat::Json => {
            let mut out = serde_json::to_string_pretty(&rows).expect("table serializes");
            out.push('\n');
            out
        }
        OutputFormat::Text => {
            let mut out = String::new();
            let width = rows.iter().map(|r| r.n2.len().max(r.h2.len()).max(r.p2.len())).max().unwrap_or(4);
            out.push_str(&format!(
                "{:>3} {:>width$} {:>width$} {:>width$}\n",
                "d", "N2", "H2", "P2",
            ));
            for r in &rows {
                out.push_str(&format!(
                    "{:>3} {:>width$} {:>width$} {:>width$}\n",
                    r.d, r.n2, r.h2, r.p2,
                ));
            }
            out
        }
    };
    config.write_out(&content)
}

#[derive(Serialize)]
struct VerifyDegree {
    d: u32,
    coefficient_checks: usize,
    mismatches: usize,
    unknown_side: String,
    printed_rhs: String,
    sides_equal: bool,
}

#[derive(Serialize)]
struct VerifyReport {
    max_degree: u32,
    degrees: Vec<VerifyDegree>,
    consistency_parameters: Vec<VerifyParameter>,
    displayed_p20_note: String,
    all_passed: bool,
}

#[derive(Serialize)]
struct VerifyParameter {
    parameter: u32,
    equations: usize,
    consistency_rows: usize,
    pinned: Vec<String>,
}

/// `verify`: solve (every surplus equation checked), then compare the
/// compiled all-divisor equation against the closed-form coefficient
/// families degree by degree.
pub fn cmd_verify(config: &RunConfig) -> Result<(), Error> {
    let engine = config.build_engine()?;
    let result = engine.solve_up_to(config.max_degree, &SolveOptions::default())?;
    let mut degrees = Vec::new();
    let mut first_failure: Option<(u32, String)> = None;
    for d in 1..=config.max_degree {
        let cmp: DegreeComparison = compare_printed(&engine, d, &result.table)?;
        let mismatches: Vec<_> = cmp.checks.iter().filter(|c| !c.matches()).collect();
        if first_failure.is_none() {
            if let Some(m) = mismatches.first() {
                first_failure = Some((d, m.label.clone()));
            } else if !cmp.sides_equal() {
                first_failure = Some((d, "numeric side evaluation".into()));
            }
        }
        degrees.push(VerifyDegree {
            d,
            coefficient_checks: cmp.checks.len(),
            mismatches: mismatches.len(),
            unknown_side: format_rational(&cmp.unknown_side_value),
            printed_rhs: format_rational(&cmp.printed_rhs_value),
            sides_equal: cmp.sides_equal(),
        });
    }
    let report = VerifyReport {
        max_degree: config.max_degree,
        degrees,
        consistency_parameters: result
            .reports
            .iter()
            .map(|r| VerifyParameter {
                parameter: r.parameter,
                equations: r.feasible.len(),
                consistency_rows: r.consistency_checks,
                pinned: r.pinned.iter().map(|s| s.to_string()).collect(),
            })
            .collect(),
        displayed_p20_note: "coefficient comparison uses the corrected N2·N0 family: \
            the second binomial term enters with a minus sign; the displayed plus sign \
            contradicts the reproduced value table (see documentation)"
            .into(),
        all_passed: first_failure.is_none(),
    };
    let content = match config.format {
        OutputFormat::Json => {
            let mut out = serde_json::to_string_pretty(&report).expect("report serializes");
            out.push('\n');
            out
        }
        _ => {
            let mut out = String::new();
            for deg in &report.degrees {
                out.push_str(&format!(
                    "degree {:>2}: {:>3} coefficient checks, {} mismatches; sides {} = {}\n",
                    deg.d,
                    deg.coefficient_checks,
                    deg.mismatches,
                    deg.unknown_side,
                    deg.printed_rhs,
                ));
            }
            out.push_str(&format!(
                "surplus/consistency rows verified across parameters 1..{}\n",
                config.max_degree + 1
            ));
            out.push_str(if report.all_passed { "verify: PASS\n" } else { "verify: FAIL\n" });
            out
        }
    };
    config.write_out(&content)?;
    if let Some((d, label)) = first_failure {
        return Err(Error::Inconsistent {
            degree: d,
            a: 1,
            b: 1,
            c: 1,
            discrepancy: format!("coefficient family {label}"),
        });
    }
    Ok(())
}

/// `emit-recursion`: print the compiled equation for one assignment as
/// coefficient tables per bucket family, with best-effort closed forms.
pub fn cmd_emit_recursion(config: &RunConfig, assignment: Assignment) -> Result<(), Error> {
    let engine = config.build_engine()?;
    if !ASSIGNMENTS.contains(&assignment) {
        return Err(Error::Data(format!(
            "assignment ({},{},{}) is not one of the four point-condition choices",
            assignment[0], assignment[1], assignment[2]
        )));
    }
    let feasible: Vec<u32> = (1..=config.max_degree)
        .filter(|&d| engine.extra_points(assignment, d) >= 0)
        .collect();
    if feasible.is_empty() {
        return Err(Error::InfeasibleAssignment {
            a: assignment[0],
            b: assignment[1],
            c: assignment[2],
            degree: config.max_degree,
        });
    }
    let mut out = String::new();
    let mut family_samples: BTreeMap<String, Vec<(u32, Vec<u32>, Q)>> = BTreeMap::new();
    for &d in &feasible {
        let compiled: CompiledEquation = engine.compile_buckets(assignment, d)?;
        out.push_str(&format!(
            "degree {d} (assignment {},{},{}; {} extra points):\n",
            assignment[0], assignment[1], assignment[2], compiled.extra_points
        ));
        for (syms, coeff) in &compiled.buckets.0 {
            let label: Vec<String> = syms.iter().map(|s| s.to_string()).collect();
            out.push_str(&format!(
                "  {:<28} {}\n",
                if label.is_empty() { "1".to_string() } else { label.join("·") },
                format_rational(coeff)
            ));
            let (family, degrees) = family_key(syms);
            family_samples.entry(family).or_default().push((d, degrees, coeff.clone()));
        }
    }
    out.push_str("\nclosed forms (fit over the emitted degrees; display only):\n");
    for (family, samples) in &family_samples {
        if let Some(text) = fit_two_factor_family(samples) {
            out.push_str(&format!("  {family}: {text}\n"));
        }
    }
    config.write_out(&out)
}

/// Family name (symbol kinds) and the degree tuple of a bucket key.
fn family_key(syms: &[Symbol]) -> (String, Vec<u32>) {
    let mut kinds = Vec::new();
    let mut degrees = Vec::new();
    for s in syms {
        let (kind, d) = match s {
            Symbol::One => ("1", 0),
            Symbol::C1 => ("C1", 0),
            Symbol::N0(d) => ("N0", *d),
            Symbol::N1(d) => ("N1", *d),
            Symbol::N2(d) => ("N2", *d),
            Symbol::H2(d) => ("H2", *d),
            Symbol::P2(d) => ("P2", *d),
        };
        kinds.push(kind);
        degrees.push(d);
    }
    (kinds.join("·"), degrees)
}

/// Try to express a two-factor family's coefficients as
/// `C(3d-1,3a)·poly1(a,b) + C(3d-1,3a+1)·poly2(a,b)` with small exact
/// polynomials, where `(a, b)` are the two bucket degrees. Returns a
/// rendering when an exact fit matches every sample.
fn fit_two_factor_family(samples: &[(u32, Vec<u32>, Q)]) -> Option<String> {
    for swap in [false, true] {
        if let Some(text) = fit_two_factor_oriented(samples, swap) {
            return Some(text);
        }
    }
    None
}

fn fit_two_factor_oriented(samples: &[(u32, Vec<u32>, Q)], swap: bool) -> Option<String> {
    use crate::rational::binomial;
    let pts: Vec<(u32, u32, u32, Q)> = samples
        .iter()
        .filter(|(_, degs, _)| degs.len() == 2 && degs.iter().all(|&x| x >= 1))
        .map(|(d, degs, v)| {
            let (a, b) = if swap { (degs[1], degs[0]) } else { (degs[0], degs[1]) };
            (*d, a, b, v.clone())
        })
        .collect();
    if pts.len() < 14 {
        return None;
    }
    // Monomial basis a^i b^j with i+j <= 3, per binomial.
    let mut exps: Vec<(u32, u32)> = Vec::new();
    for i in 0..=3u32 {
        for j in 0..=(3 - i) {
            exps.push((i, j));
        }
    }
    let cols = exps.len() * 2;
    if pts.len() < cols {
        return None;
    }
    let mut matrix: Vec<Vec<Q>> = Vec::new();
    for (d, a, b, v) in &pts {
        let mut row = Vec::with_capacity(cols + 1);
        let b0 = Q::from_integer(binomial((3 * d - 1) as u64, (3 * a) as u64));
        let b1 = Q::from_integer(binomial((3 * d - 1) as u64, (3 * a + 1) as u64));
        for &(i, j) in &exps {
            let m = crate::rational::qi((*a as i64).pow(i) * (*b as i64).pow(j));
            row.push(&b0 * &m);
        }
        for &(i, j) in &exps {
            let m = crate::rational::qi((*a as i64).pow(i) * (*b as i64).pow(j));
            row.push(&b1 * &m);
        }
        row.push(v.clone());
        matrix.push(row);
    }
    let solution = solve_exact(&mut matrix, cols)?;
    let render = |offset: usize| -> String {
        let terms: Vec<String> = exps
            .iter()
            .enumerate()
            .filter(|(k, _)| !solution[offset + k].is_zero())
            .map(|(k, &(i, j))| {
                let mono = match (i, j) {
                    (0, 0) => String::new(),
                    _ => {
                        let mut s = String::new();
                        if i > 0 {
                            s.push_str(&format!("x{}", if i > 1 { format!("^{i}") } else { String::new() }));
                        }
                        if j > 0 {
                            if !s.is_empty() {
                                s.push('·');
                            }
                            s.push_str(&format!("y{}", if j > 1 { format!("^{j}") } else { String::new() }));
                        }
                        s
                    }
                };
                let c = format_rational(&solution[offset + k]);
                if mono.is_empty() {
                    c
                } else {
                    format!("{c}·{mono}")
                }
            })
            .collect();
        if terms.is_empty() { "0".to_string() } else { terms.join(" + ") }
    };
    let orientation = if swap {
        "x = second bucket degree, y = first"
    } else {
        "x = first bucket degree, y = second"
    };
    Some(format!(
        "C(3d-1,3x)·[{}] + C(3d-1,3x+1)·[{}]  ({orientation})",
        render(0),
        render(exps.len())
    ))
}

/// Exact Gaussian elimination for an overdetermined system given as rows
/// `[coefficients…, rhs]`. Dependent columns get coefficient zero (the
/// basis may be redundant on the sampled points); `None` only when the
/// system is inconsistent. The result is *a* representation, which is all
/// the display needs.
fn solve_exact(matrix: &mut [Vec<Q>], cols: usize) -> Option<Vec<Q>> {
    let rows = matrix.len();
    let mut pivot_of_column: Vec<Option<usize>> = vec![None; cols];
    let mut r = 0;
    for c in 0..cols {
        let Some(p) = (r..rows).find(|&i| !matrix[i][c].is_zero()) else {
            continue;
        };
        matrix.swap(r, p);
        let pv = matrix[r][c].clone();
        for x in matrix[r].iter_mut() {
            *x = &*x / &pv;
        }
        for i in 0..rows {
            if i != r && !matrix[i][c].is_zero() {
                let f = matrix[i][c].clone();
                for k in 0..=cols {
                    let s = &matrix[r][k] * &f;
                    matrix[i][k] = &matrix[i][k] - &s;
                }
            }
        }
        pivot_of_column[c] = Some(r);
        r += 1;
        if r == rows {
            break;
        }
    }
    // Rows without pivots must have cancelled exactly.
    for i in r..rows {
        if !matrix[i][cols].is_zero() {
            return None;
        }
    }
    Some(
        (0..cols)
            .map(|c| match pivot_of_column[c] {
                Some(row) => matrix[row][cols].clone(),
                None => Q::zero(),
            })
            .collect(),
    )
}
