//! One function per subcommand. Each returns its table and, for commands
//! whose rows are still worth writing when something goes wrong, the error
//! that should set the exit status.

use std::path::{Path, PathBuf};

use rayon::prelude::*;
use revpot::bvp::find_reversal_bvp;
use revpot::profile::{matching_residual, reconstruct_solved};
use revpot::{ghk_reversal, reversal_charge, reversal_potential, solve, Error};

use crate::config::{Point, RunConfig};
use crate::output::{num, Table};
use crate::CliError;

/// Rows plus a failure to report once they are written.
#[derive(Debug)]
pub struct Run {
    pub table: Table,
    pub failure: Option<CliError>,
}

impl Run {
    fn ok(table: Table) -> Self {
        Self {
            table,
            failure: None,
        }
    }
}

fn collect_rows(rows: Vec<Result<Vec<String>, CliError>>) -> Result<Vec<Vec<String>>, CliError> {
    rows.into_iter().collect()
}

/// `q0, theta, d1, d2, a, b, vrev, j, residual`; every row passes the
/// bounds check on `V_rev` and `J` before it is emitted.
pub fn vrev(cfg: &RunConfig) -> Result<Run, CliError> {
    let (bath, geom) = (cfg.bath()?, cfg.geometry()?);
    let points = cfg.points()?;
    let rows = points
        .par_iter()
        .map(|p| {
            let s = solve(p.q0, &p.transport, &bath, &geom)?;
            s.check_bounds(&bath).map_err(|e| {
                CliError::Solver(format!(
                    "Q0 = {}, d1 = {}, d2 = {}: {e}",
                    p.q0, p.transport.d1, p.transport.d2
                ))
            })?;
            Ok(vec![
                num(s.q0),
                num(s.theta),
                num(s.d1),
                num(s.d2),
                num(s.a),
                num(s.b),
                num(s.vrev),
                num(s.j),
                num(s.residual_g2),
            ])
        })
        .collect();
    let mut table = Table::new(&["q0", "theta", "d1", "d2", "a", "b", "vrev", "j", "residual"]);
    table.rows = collect_rows(rows)?;
    Ok(Run::ok(table))
}

/// `q0, theta, d1, d2, j, a, b`.
pub fn flux(cfg: &RunConfig) -> Result<Run, CliError> {
    let (bath, geom) = (cfg.bath()?, cfg.geometry()?);
    let points = cfg.points()?;
    let rows = points
        .par_iter()
        .map(|p| {
            let s = solve(p.q0, &p.transport, &bath, &geom)?;
            s.check_bounds(&bath)
                .map_err(|e| CliError::Solver(e.to_string()))?;
            Ok(vec![
                num(s.q0),
                num(s.theta),
                num(s.d1),
                num(s.d2),
                num(s.j),
                num(s.a),
                num(s.b),
            ])
        })
        .collect();
    let mut table = Table::new(&["q0", "theta", "d1", "d2", "j", "a", "b"]);
    table.rows = collect_rows(rows)?;
    Ok(Run::ok(table))
}

/// `v, theta, d1, d2, qrev, residual, multiplicity_flag, status`. Potentials
/// outside the band get an empty `qrev`, status `no_reversal_charge`, and
/// make the run exit with the existence code after all rows are written.
pub fn qrev(cfg: &RunConfig) -> Result<Run, CliError> {
    let (bath, geom) = (cfg.bath()?, cfg.geometry()?);
    // Charge is the unknown here.
    let points = cfg.grid(false, true)?;
    let rows: Vec<Result<(Vec<String>, bool), CliError>> = points
        .par_iter()
        .map(|p| {
            let theta = p.transport.theta();
            let lead = vec![
                num(p.v),
                num(theta),
                num(p.transport.d1),
                num(p.transport.d2),
            ];
            match reversal_charge(p.v, theta, &bath, &geom) {
                Ok(rc) => {
                    let mut row = lead;
                    row.extend([
                        num(rc.qrev),
                        num(rc.residual_g1),
                        rc.multiplicity_flag.to_string(),
                        if rc.degenerate { "degenerate" } else { "ok" }.to_string(),
                    ]);
                    Ok((row, false))
                }
                Err(Error::NoReversalCharge { .. } | Error::DegenerateBaths(_)) => {
                    let mut row = lead;
                    row.extend([
                        String::new(),
                        String::new(),
                        String::new(),
                        "no_reversal_charge".into(),
                    ]);
                    Ok((row, true))
                }
                Err(e) => Err(e.into()),
            }
        })
        .collect();
    let mut table = Table::new(&[
        "v",
        "theta",
        "d1",
        "d2",
        "qrev",
        "residual",
        "multiplicity_flag",
        "status",
    ]);
    let mut outside = 0;
    for r in rows {
        let (row, missing) = r?;
        outside += usize::from(missing);
        table.rows.push(row);
    }
    let failure = (outside > 0).then(|| {
        CliError::Existence(format!(
            "{outside} potential(s) with |z1 V| >= |ln(l/r)| = {}",
            bath.log_ratio().abs()
        ))
    });
    Ok(Run { table, failure })
}

/// `field, value`: the junction and layer values of the singular orbit,
/// then one `residual:<equation>` row per matching equation.
pub fn profile(cfg: &RunConfig) -> Result<Run, CliError> {
    let (bath, geom) = (cfg.bath()?, cfg.geometry()?);
    if !(cfg.charge.q0.is_single() && cfg.transport.d1.is_single() && cfg.transport.d2.is_single())
    {
        return Err(CliError::Config(
            "profile needs single values for charge.q0, transport.d1 and transport.d2".into(),
        ));
    }
    let p = cfg.points()?[0];
    let (prof, inputs) = reconstruct_solved(p.q0, &bath, &geom, &p.transport)?;
    let residuals = matching_residual(&prof, &inputs);
    let mut table = Table::new(&["field", "value"]);
    table.rows.push(vec!["q0".into(), num(p.q0)]);
    table.rows.push(vec!["v".into(), num(inputs.v)]);
    for (name, value) in prof.fields() {
        table.rows.push(vec![name.into(), num(value)]);
    }
    for (name, value) in &residuals.entries {
        table
            .rows
            .push(vec![format!("residual:{name}"), num(*value)]);
    }
    table
        .rows
        .push(vec!["residual:max".into(), num(residuals.max())]);
    Ok(Run::ok(table))
}

/// `d1, d2, theta, vghk` over the transport grid.
pub fn ghk(cfg: &RunConfig) -> Result<Run, CliError> {
    let bath = cfg.bath()?;
    let mut table = Table::new(&["d1", "d2", "theta", "vghk"]);
    for p in cfg.grid(false, false)? {
        let (t, theta) = (p.transport, p.transport.theta());
        table.rows.push(vec![
            num(t.d1),
            num(t.d2),
            num(theta),
            num(ghk_reversal(theta, &bath)),
        ]);
    }
    Ok(Run::ok(table))
}

fn fields_path(base: &Path, index: usize, count: usize) -> PathBuf {
    if count == 1 {
        return base.to_path_buf();
    }
    let stem = base
        .file_stem()
        .and_then(|s| s.to_str())
        .unwrap_or("fields");
    let name = match base.extension().and_then(|e| e.to_str()) {
        Some(ext) => format!("{stem}_{index}.{ext}"),
        None => format!("{stem}_{index}"),
    };
    base.with_file_name(name)
}

/// `q0, theta, d1, d2, epsilon, vrev_bvp, vrev_reduced, abs_diff, status`.
/// The run fails with the oracle code when any case's last-ε difference
/// exceeds `tolerance · |ln(l/r)|/z1`, and with the solver code when a
/// BVP solve fails.
pub fn oracle(cfg: &RunConfig) -> Result<Run, CliError> {
    let (bath, geom) = (cfg.bath()?, cfg.geometry()?);
    let oc = cfg
        .oracle
        .as_ref()
        .ok_or_else(|| CliError::Config("oracle: section missing".into()))?;
    // The potential is the unknown here.
    let cases: Vec<Point> = cfg.grid(true, false)?;
    let bound = bath.log_ratio().abs() / bath.z1;

    let jobs: Vec<(usize, f64)> = (0..cases.len())
        .flat_map(|c| oc.epsilons.iter().map(move |&e| (c, e)))
        .collect();
    let results: Vec<_> = jobs
        .par_iter()
        .map(|&(c, eps)| {
            let p = &cases[c];
            let reduced = reversal_potential(p.q0, p.transport.theta(), &bath, &geom);
            let bvp = find_reversal_bvp(eps, p.q0, &bath, &geom, &p.transport);
            (reduced, bvp)
        })
        .collect();

    let mut table = Table::new(&[
        "q0",
        "theta",
        "d1",
        "d2",
        "epsilon",
        "vrev_bvp",
        "vrev_reduced",
        "abs_diff",
        "status",
    ]);
    let mut solver_errors = Vec::new();
    let mut over = Vec::new();
    let last = oc.epsilons.len() - 1;
    for (k, ((c, eps), (reduced, bvp))) in jobs.iter().zip(results).enumerate() {
        let p = &cases[*c];
        let reduced = reduced?;
        let mut row = vec![
            num(p.q0),
            num(p.transport.theta()),
            num(p.transport.d1),
            num(p.transport.d2),
            num(*eps),
        ];
        match bvp {
            Ok(sol) => {
                let diff = (sol.v - reduced).abs();
                row.extend([num(sol.v), num(reduced), num(diff), "ok".into()]);
                if k % oc.epsilons.len() == last {
                    if diff > oc.tolerance * bound {
                        over.push(format!(
                            "Q0 = {}, theta = {}: {diff:.3e}",
                            p.q0,
                            p.transport.theta()
                        ));
                    }
                    if let Some(base) = &oc.fields {
                        let path = fields_path(base, *c, cases.len());
                        let file = std::fs::File::create(&path)?;
                        sol.solution
                            .write_fields_csv(std::io::BufWriter::new(file))?;
                    }
                }
            }
            Err(e) => {
                solver_errors.push(format!("Q0 = {}, epsilon = {eps}: {e}", p.q0));
                row.extend([
                    String::new(),
                    num(reduced),
                    String::new(),
                    "no_convergence".into(),
                ]);
            }
        }
        table.rows.push(row);
    }
    let failure = if !solver_errors.is_empty() {
        Some(CliError::Solver(solver_errors.join("; ")))
    } else if !over.is_empty() {
        Some(CliError::Oracle(format!(
            "limit {:.3e} ({} of |ln(l/r)|/z1): {}",
            oc.tolerance * bound,
            oc.tolerance,
            over.join("; ")
        )))
    } else {
        None
    };
    Ok(Run { table, failure })
}
