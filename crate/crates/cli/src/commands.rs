//! Subcommand implementations.

use std::fs::{self, File};
use std::io::{self as stdio, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::time::Instant;

use distmaj::applications::{
    convex_reg_fit, cosine_mm_iterate, dnn_project, fire_station, isotone_fit, summa_gap, svm_fit, Method,
    MethodConfig, Norm, RegressionData,
};
use distmaj::dual::DualConfig;
use distmaj::io::{self, Summary, Table};
use distmaj::penalty::{feasibility_solve, FeasibilityConfig, Solution, SolveTrace, SolverConfig};
use distmaj::robust::{default_solver_config, kappa_bound, robust_regression, RobustConfig};
use nalgebra::{DMatrix, DVector, Vector2};

use crate::source::{self, GenSpec};
use crate::{BenchProblem, Command, NormArg, SolveArgs, SolverArg, Status};

pub fn run(command: Command) -> Result<Status, String> {
    match command {
        Command::Feasibility(args) => feasibility(&args),
        Command::ProjectDnn(args) => project_dnn(&args),
        Command::Isotone(args) => isotone(&args),
        Command::Convexreg(args) => convexreg(&args),
        Command::Svm { args, lambda } => svm(&args, lambda),
        Command::Firestation {
            source,
            norm,
            start,
            out,
        } => firestation(&source, norm, start, out.as_deref()),
        Command::Robust { args, cutoff } => robust(&args, cutoff),
        Command::CosineDemo { x0, steps } => cosine_demo(x0, steps),
        Command::Bench {
            problem,
            size,
            seed,
            out,
        } => bench(problem, size, seed, out.as_deref()),
        Command::Generate {
            kind,
            size,
            dim,
            seed,
            output,
        } => generate(kind, size, dim, seed, output.as_deref()),
    }
}

fn err(e: impl std::fmt::Display) -> String {
    e.to_string()
}

fn status(converged: bool) -> Status {
    if converged {
        Status::Converged
    } else {
        Status::NotConverged
    }
}

/// Rejects the dual solvers for problems without a strongly convex loss.
fn primal_only(args: &SolveArgs, command: &str) -> Result<(), String> {
    if args.solver.method().is_dual() {
        return Err(format!(
            "--solver: {command} has no strongly convex loss; use mm or mm-qn"
        ));
    }
    Ok(())
}

fn validate_rho(rho: Option<f64>) -> Result<(), String> {
    match rho {
        Some(r) if !(r > 0.0 && r.is_finite()) => Err(format!("--rho: `{r}` must be positive")),
        _ => Ok(()),
    }
}

/// `config` with the `--rho` and `--solver` choices applied.
fn penalty_config(args: &SolveArgs, mut config: SolverConfig, secants: usize) -> SolverConfig {
    if let Some(rho) = args.rho {
        config.rho = rho;
    }
    config.acceleration = (args.solver == SolverArg::MmQn).then_some(args.secants.unwrap_or(secants));
    config
}

fn method_config(args: &SolveArgs, solver: SolverConfig, dual: DualConfig, secants: usize) -> MethodConfig {
    let mut solver = solver;
    let mut dual = dual;
    if let Some(rho) = args.rho {
        solver.rho = rho;
        dual.rho = rho;
    }
    let mut config = MethodConfig::new(args.solver.method(), solver, dual);
    config.secants = args.secants.unwrap_or(secants);
    config
}

/// Writes the summary to standard output and, with `--out`, the summary,
/// the trace and any result tables to the directory.
fn emit(out: Option<&Path>, summary: &Summary, trace: &SolveTrace, tables: &[(&str, Table)]) -> Result<(), String> {
    summary.write_json(stdio::stdout().lock()).map_err(err)?;
    let Some(dir) = out else {
        return Ok(());
    };
    fs::create_dir_all(dir).map_err(|e| format!("--out: cannot create {}: {e}", dir.display()))?;
    let create = |name: &str| -> Result<BufWriter<File>, String> {
        let path = dir.join(name);
        File::create(&path)
            .map(BufWriter::new)
            .map_err(|e| format!("--out: cannot write {}: {e}", path.display()))
    };
    summary.write_json(create("summary.json")?).map_err(err)?;
    trace.write_csv(create("trace.csv")?).map_err(err)?;
    for (name, table) in tables {
        io::write_table(create(name)?, &table.headers, &table.values).map_err(err)?;
    }
    Ok(())
}

fn column_table(names: &[&str], columns: &[&DVector<f64>]) -> Table {
    let rows = columns.first().map_or(0, |c| c.len());
    Table {
        headers: names.iter().map(|s| s.to_string()).collect(),
        values: DMatrix::from_fn(rows, columns.len(), |i, j| columns[j][i]),
    }
}

/// Data columns of `data` followed by extra named columns.
fn with_columns(data: &RegressionData, extra: &[(&str, &DVector<f64>)]) -> Table {
    let mut table = io::regression_table(data);
    for (name, column) in extra {
        table.headers.push(name.to_string());
        let c = table.values.ncols();
        table.values = table.values.clone().insert_column(c, 0.0);
        table.values.set_column(c, column);
    }
    table
}

fn feasibility(args: &SolveArgs) -> Result<Status, String> {
    primal_only(args, "feasibility")?;
    validate_rho(args.rho)?;
    let sets = source::halfspaces(args.source.load()?)?;
    let dim = sets.first().ok_or("input has no halfspaces")?.dim();
    let mut config = FeasibilityConfig {
        acceleration: (args.solver == SolverArg::MmQn).then_some(args.secants.unwrap_or(2)),
        ..FeasibilityConfig::default()
    };
    if let Some(rho) = args.rho {
        config.step_tol = rho;
    }
    let started = Instant::now();
    let out = feasibility_solve(&sets, &DVector::zeros(dim), &config).map_err(err)?;
    let summary = Summary {
        objective: out.proximity,
        violation_max: out.max_distance,
        violation_signed: -out.max_distance,
        iterations: out.iterations,
        seconds: started.elapsed().as_secs_f64(),
        mu_final: 0.0,
        converged: out.feasible,
    };
    let point = column_table(&["x"], &[&out.point]);
    emit(args.out.as_deref(), &summary, &out.trace, &[("point.csv", point)])?;
    Ok(status(out.feasible))
}

fn project_dnn(args: &SolveArgs) -> Result<Status, String> {
    validate_rho(args.rho)?;
    let s = source::symmetric_matrix(args.source.load()?)?;
    let config = method_config(
        args,
        SolverConfig::projection(),
        DualConfig::default().with_rho(1e-6),
        2,
    );
    let started = Instant::now();
    let result = dnn_project(&s, &config).map_err(err)?;
    let seconds = started.elapsed().as_secs_f64();
    let summary = Summary::from_solution(&result.solution, 0.5 * result.distance.powi(2), seconds);
    let tables = [("matrix.csv", io::matrix_table(&result.matrix))];
    emit(args.out.as_deref(), &summary, &result.solution.trace, &tables)?;
    Ok(status(result.solution.converged))
}

fn weighted_half_sse(data: &RegressionData, fitted: &DVector<f64>) -> f64 {
    0.5 * (0..data.n())
        .map(|i| data.w[i] * (fitted[i] - data.y[i]).powi(2))
        .sum::<f64>()
}

fn isotone_config(args: &SolveArgs) -> MethodConfig {
    method_config(args, SolverConfig::isotone(), DualConfig::default().with_rho(1e-6), 2)
}

fn isotone(args: &SolveArgs) -> Result<Status, String> {
    validate_rho(args.rho)?;
    let data = source::regression(args.source.load()?, source::isotone_data)?;
    let started = Instant::now();
    let fit = isotone_fit(&data, &isotone_config(args)).map_err(err)?;
    let seconds = started.elapsed().as_secs_f64();
    let summary = Summary::from_solution(&fit.solution, weighted_half_sse(&data, &fit.fitted), seconds);
    let table = with_columns(&data, &[("fit", &fit.fitted)]);
    emit(
        args.out.as_deref(),
        &summary,
        &fit.solution.trace,
        &[("fit.csv", table)],
    )?;
    Ok(status(fit.solution.converged))
}

fn convexreg(args: &SolveArgs) -> Result<Status, String> {
    primal_only(args, "convexreg")?;
    validate_rho(args.rho)?;
    let data = source::regression(args.source.load()?, source::convexreg_data)?;
    if data.p() == 0 {
        return Err("convex regression needs at least one predictor column".into());
    }
    let config = penalty_config(args, SolverConfig::tight(), 5);
    let started = Instant::now();
    let fit = convex_reg_fit(&data, &config).map_err(err)?;
    let seconds = started.elapsed().as_secs_f64();
    let summary = Summary::from_solution(&fit.solution, fit.objective, seconds);
    // subgradients are stored one case per column
    let gradients: Vec<DVector<f64>> = (0..data.p()).map(|l| fit.xi.row(l).transpose()).collect();
    let names: Vec<String> = (1..=data.p()).map(|l| format!("g{l}")).collect();
    let mut extra: Vec<(&str, &DVector<f64>)> = vec![("fit", &fit.theta)];
    extra.extend(names.iter().map(String::as_str).zip(gradients.iter()));
    let table = with_columns(&data, &extra);
    emit(
        args.out.as_deref(),
        &summary,
        &fit.solution.trace,
        &[("fit.csv", table)],
    )?;
    Ok(status(fit.solution.converged))
}

fn svm(args: &SolveArgs, lambda: f64) -> Result<Status, String> {
    primal_only(args, "svm")?;
    validate_rho(args.rho)?;
    if !(lambda > 0.0 && lambda.is_finite()) {
        return Err(format!("--lambda: `{lambda}` must be positive"));
    }
    let data = source::svm_cases(args.source.load()?)?;
    let config = penalty_config(args, SolverConfig::tight(), 5);
    let started = Instant::now();
    let model = svm_fit(&data, lambda, &config).map_err(|e| format!("column `y`: {e}"))?;
    let seconds = started.elapsed().as_secs_f64();
    let summary = Summary::from_solution(&model.solution, model.objective, seconds);
    let table = column_table(&["theta"], &[&model.theta]);
    emit(
        args.out.as_deref(),
        &summary,
        &model.solution.trace,
        &[("coefficients.csv", table)],
    )?;
    Ok(status(model.solution.converged))
}

fn firestation(source: &crate::Source, norm: NormArg, start: (f64, f64), out: Option<&Path>) -> Result<Status, String> {
    let rects = source::rectangles(source)?;
    let norm = match norm {
        NormArg::L1 => Norm::L1,
        NormArg::L2 => Norm::L2,
    };
    let started = Instant::now();
    let result = fire_station(&rects, norm, Vector2::new(start.0, start.1), 10_000).map_err(err)?;
    let seconds = started.elapsed().as_secs_f64();
    let summary = Summary {
        objective: result.objective,
        violation_max: 0.0,
        violation_signed: 0.0,
        iterations: result.iterations,
        seconds,
        mu_final: 0.0,
        converged: result.converged,
    };
    let mut trace = SolveTrace::default();
    for (iter, &objective) in result.history.iter().enumerate() {
        trace.push(distmaj::penalty::TraceRecord {
            iter,
            stage: 0,
            mu: 0.0,
            objective,
            violation: 0.0,
            residual: 0.0,
            seconds: 0.0,
            extrapolated: false,
        });
    }
    let location = DVector::from_column_slice(result.location.as_slice());
    emit(
        out,
        &summary,
        &trace,
        &[("location.csv", column_table(&["x"], &[&location]))],
    )?;
    Ok(status(result.converged))
}

fn robust(args: &SolveArgs, cutoff: f64) -> Result<Status, String> {
    primal_only(args, "robust")?;
    validate_rho(args.rho)?;
    if !(cutoff > 0.0 && cutoff.is_finite()) {
        return Err(format!("--cutoff: `{cutoff}` must be positive"));
    }
    let (x, y) = source::robust_cases(args.source.load()?)?;
    if x.ncols() == 0 {
        return Err("robust regression needs at least one predictor column".into());
    }
    let solver = penalty_config(args, default_solver_config(kappa_bound(&x)), 5);
    let config = RobustConfig {
        solver: Some(solver),
        ..RobustConfig::default()
    };
    let started = Instant::now();
    let fit = robust_regression(&x, &y, cutoff, vec![], &config).map_err(err)?;
    let seconds = started.elapsed().as_secs_f64();
    let summary = Summary::from_solution(&fit.solution, fit.solution.objective, seconds);
    let table = column_table(&["beta"], &[&fit.beta]);
    emit(
        args.out.as_deref(),
        &summary,
        &fit.solution.trace,
        &[("coefficients.csv", table)],
    )?;
    Ok(status(fit.solution.converged))
}

fn cosine_demo(x0: f64, steps: usize) -> Result<Status, String> {
    if !x0.is_finite() {
        return Err(format!("--x0: `{x0}` is not finite"));
    }
    let iterates = cosine_mm_iterate(x0, steps);
    let mut stdout = stdio::stdout().lock();
    let mut write = || -> stdio::Result<()> {
        writeln!(stdout, "iter,x,cos")?;
        for (i, x) in iterates.iter().enumerate() {
            writeln!(stdout, "{i},{x},{}", x.cos())?;
        }
        let two_pi = 2.0 * std::f64::consts::PI;
        let grid = 4000;
        let (gap, at) = (0..=grid)
            .map(|k| -two_pi + 2.0 * two_pi * k as f64 / grid as f64)
            .map(|x| (summa_gap(x, x0), x))
            .fold((f64::INFINITY, 0.0), |best, c| if c.0 < best.0 { c } else { best });
        writeln!(stdout, "minimum SUMMA gap on [-2pi, 2pi]: {gap:.6} at x = {at:.6}")
    };
    write().map_err(err)?;
    Ok(Status::Converged)
}

struct BenchRow {
    method: Method,
    seconds: f64,
    iterations: usize,
    distance: f64,
    violation: f64,
    converged: bool,
}

fn bench(problem: BenchProblem, size: usize, seed: u64, out: Option<&Path>) -> Result<Status, String> {
    let spec = GenSpec {
        n: Some(size),
        p: None,
        seed,
    };
    let mut rows = Vec::new();
    for method in Method::ALL {
        let started = Instant::now();
        let (solution, distance, violation): (Solution, f64, f64) = match problem {
            BenchProblem::Dnn => {
                let s = source::dnn_matrix(&spec);
                let mut config =
                    MethodConfig::new(method, SolverConfig::projection(), DualConfig::default().with_rho(1e-6));
                config.secants = 2;
                let r = dnn_project(&s, &config).map_err(err)?;
                let violation = r.eigen_violation.max(r.entry_violation);
                (r.solution, r.distance, violation)
            }
            BenchProblem::Isotone => {
                let data = source::isotone_data(&spec)?;
                let mut config =
                    MethodConfig::new(method, SolverConfig::isotone(), DualConfig::default().with_rho(1e-6));
                config.secants = 2;
                let fit = isotone_fit(&data, &config).map_err(err)?;
                let distance = (2.0 * weighted_half_sse(&data, &fit.fitted)).sqrt();
                let violation = fit.solution.violation.max_abs;
                (fit.solution, distance, violation)
            }
        };
        rows.push(BenchRow {
            method,
            seconds: started.elapsed().as_secs_f64(),
            iterations: solution.iterations,
            distance,
            violation,
            converged: solution.converged,
        });
    }
    println!(
        "{:<12} {:>10} {:>10} {:>14} {:>12} {:>9}",
        "method", "seconds", "iterations", "distance", "violation", "converged"
    );
    for r in &rows {
        println!(
            "{:<12} {:>10.3} {:>10} {:>14.6} {:>12.3e} {:>9}",
            r.method.label(),
            r.seconds,
            r.iterations,
            r.distance,
            r.violation,
            r.converged
        );
    }
    if let Some(dir) = out {
        fs::create_dir_all(dir).map_err(|e| format!("--out: cannot create {}: {e}", dir.display()))?;
        let path = dir.join("bench.csv");
        let write = || -> stdio::Result<()> {
            let mut f = BufWriter::new(File::create(&path)?);
            writeln!(f, "method,seconds,iterations,distance,violation,converged")?;
            for r in &rows {
                writeln!(
                    f,
                    "{},{},{},{},{},{}",
                    r.method.label(),
                    r.seconds,
                    r.iterations,
                    r.distance,
                    r.violation,
                    r.converged
                )?;
            }
            f.flush()
        };
        write().map_err(|e| format!("--out: cannot write {}: {e}", path.display()))?;
    }
    Ok(status(rows.iter().all(|r| r.converged)))
}

fn generate(
    kind: crate::Kind,
    size: Option<usize>,
    dim: Option<usize>,
    seed: u64,
    output: Option<&Path>,
) -> Result<Status, String> {
    let table = source::generate_table(kind, size, dim, seed)?;
    match output {
        Some(path) => {
            let path: PathBuf = path.into();
            io::write_table_file(&path, &table.headers, &table.values)
                .map_err(|e| format!("--output: cannot write {}: {e}", path.display()))?;
        }
        None => io::write_table(stdio::stdout().lock(), &table.headers, &table.values).map_err(err)?,
    }
    Ok(Status::Converged)
}
