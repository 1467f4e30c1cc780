use std::io::Write;
use std::path::Path;

use clap::ValueEnum;
use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use qtl_core::freq::{
    check_lbr as lbr, check_lpr, scattering_g, AnalyticTransfer, CertificateKind, SamplingPlan,
};
use qtl_core::markov::{ito_table, markov_model};
use qtl_core::spectral::{commutator_sigma, kernel_samples};
use qtl_core::timedomain::{propagate_ohmic, simulate_memory};
use qtl_core::{CircuitSpec, MarkovModel};
use rayon::prelude::*;
use serde_json::{json, Value};

use crate::config::load_config;
use crate::output::{complex_matrix, real, real_matrix, Table};
use crate::{CliError, Format, OutArgs, TableArgs};

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Transfer {
    S,
    Sigma,
    Memory,
}

fn emit(out: &OutArgs, text: &str) -> Result<(), CliError> {
    match &out.out {
        Some(path) => std::fs::write(path, text).map_err(|e| CliError::Io {
            path: path.display().to_string(),
            message: e.to_string(),
        }),
        None => {
            let mut stdout = std::io::stdout().lock();
            stdout
                .write_all(text.as_bytes())
                .and_then(|_| stdout.flush())
                .map_err(|e| CliError::Io {
                    path: "<stdout>".into(),
                    message: e.to_string(),
                })
        }
    }
}

fn emit_table(args: &TableArgs, table: &Table) -> Result<(), CliError> {
    let text = match args.format {
        Format::Csv => table.to_csv(),
        Format::Json => table.to_json().to_string() + "\n",
        Format::Text => return Err(CliError::Usage("tables are written as csv or json".into())),
    };
    emit(&args.out, &text)
}

fn positive(name: &str, x: f64) -> Result<(), CliError> {
    if x.is_finite() && x > 0.0 {
        Ok(())
    } else {
        Err(CliError::Usage(format!(
            "--{name} must be positive, got {x}"
        )))
    }
}

pub fn validate(path: &Path) -> Result<u8, CliError> {
    load_config(path)?;
    println!("OK");
    Ok(0)
}

fn grid(lo: f64, hi: f64, steps: usize) -> Result<Vec<f64>, CliError> {
    if !(lo.is_finite() && hi.is_finite() && lo < hi) || steps < 2 {
        return Err(CliError::Usage(
            "need omega-min < omega-max and at least 2 steps".into(),
        ));
    }
    let h = (hi - lo) / (steps - 1) as f64;
    Ok((0..steps)
        .map(|i| {
            if i + 1 == steps {
                hi
            } else {
                lo + h * i as f64
            }
        })
        .collect())
}

fn freq_row(spec: &CircuitSpec, w: f64) -> Vec<f64> {
    let n = spec.n;
    let mut row = vec![w];
    match scattering_g(spec, w) {
        Ok(g) => {
            for j in 0..n {
                for k in 0..n {
                    row.push(g[(j, k)].re);
                    row.push(g[(j, k)].im);
                }
            }
            let id = DMatrix::<Complex64>::identity(n, n);
            row.push((g.adjoint() * g - id).camax());
        }
        Err(e) => {
            log::warn!("G({w}) unavailable: {e}");
            row.extend(std::iter::repeat_n(f64::NAN, 2 * n * n + 1));
        }
    }
    row
}

pub fn freq(
    path: &Path,
    omega_min: f64,
    omega_max: f64,
    steps: usize,
    args: &TableArgs,
) -> Result<u8, CliError> {
    let spec = load_config(path)?;
    let omegas = grid(omega_min, omega_max, steps)?;
    let n = spec.n;
    let mut columns = vec!["omega".to_string()];
    for j in 1..=n {
        for k in 1..=n {
            columns.push(format!("re_G{j}{k}"));
            columns.push(format!("im_G{j}{k}"));
        }
    }
    columns.push("unitarity_residual".into());
    let mut table = Table::new(columns);
    let rows: Vec<Vec<f64>> = omegas.par_iter().map(|&w| freq_row(&spec, w)).collect();
    rows.into_iter().for_each(|r| table.push(r));
    emit_table(args, &table)?;
    Ok(0)
}

pub fn check_lbr(
    path: &Path,
    tol: f64,
    transfer: Transfer,
    format: Format,
    out: &OutArgs,
) -> Result<u8, CliError> {
    if !(tol.is_finite() && tol >= 0.0) {
        return Err(CliError::Usage(format!(
            "--tol must be non-negative, got {tol}"
        )));
    }
    let spec = load_config(path)?;
    let plan = SamplingPlan::default();
    let (label, verdict) = match transfer {
        Transfer::S => (
            "LBR",
            lbr(&AnalyticTransfer::scattering(&spec)?, &plan, tol)?,
        ),
        Transfer::Sigma => (
            "LPR",
            check_lpr(&AnalyticTransfer::sigma(&spec)?, &plan, tol)?,
        ),
        Transfer::Memory => (
            "LPR",
            check_lpr(&AnalyticTransfer::memory_laplace(&spec), &plan, tol)?,
        ),
    };
    let pass = verdict.verdict();
    let detail = json!({
        "property": label,
        "verdict": pass,
        "analytic_ok": verdict.analytic_ok,
        "contractive_ok": verdict.contractive_ok,
        "boundary_lossless_ok": verdict.boundary_lossless_ok,
        "symmetry_ok": verdict.symmetry_ok,
        "worst_point": { "re": real(verdict.worst_point.re), "im": real(verdict.worst_point.im) },
        "worst_value": real(verdict.worst_value),
        "certificate_kind": verdict.certificate_kind.to_string(),
        "tol": tol,
    });
    let text = match format {
        Format::Json => format!("{detail}\n"),
        Format::Text => format!("{label}={pass} ({})\n{detail}\n", verdict.certificate_kind),
        Format::Csv => return Err(CliError::Usage("check-lbr writes text or json".into())),
    };
    emit(out, &text)?;
    Ok(match (pass, verdict.certificate_kind) {
        (false, _) => 1,
        (true, CertificateKind::RationalExact) => 0,
        (true, CertificateKind::Sampled) => 2,
    })
}

pub fn kernel(path: &Path, t_max: f64, dt: f64, args: &TableArgs) -> Result<u8, CliError> {
    positive("dt", dt)?;
    positive("t-max", t_max)?;
    let spec = load_config(path)?;
    let samples = kernel_samples(&spec.lines, t_max, dt)?;
    let n = spec.n;
    let mut columns = vec!["t".to_string()];
    columns.extend((1..=n).map(|k| format!("gamma_{k}")));
    columns.extend((1..=n).map(|k| format!("sigma_{k}")));
    let mut table = Table::new(columns);
    for (i, &t) in samples.t.iter().enumerate() {
        let mut row = vec![t];
        row.extend(samples.values.iter().map(|v| v[i]));
        row.extend(
            spec.lines
                .iter()
                .map(|sd| commutator_sigma(sd, t).unwrap_or(f64::NAN)),
        );
        table.push(row);
    }
    emit_table(args, &table)?;
    Ok(0)
}

fn initial(
    name: &str,
    v: Option<Vec<f64>>,
    n: usize,
    default: DVector<f64>,
) -> Result<DVector<f64>, CliError> {
    match v {
        None => Ok(default),
        Some(v) if v.len() == n => Ok(DVector::from_vec(v)),
        Some(v) => Err(CliError::Usage(format!(
            "--{name} has {} entries, the circuit has {n} nodes",
            v.len()
        ))),
    }
}

pub fn simulate(
    path: &Path,
    t_max: f64,
    dt: f64,
    q0: Option<Vec<f64>>,
    i0: Option<Vec<f64>>,
    args: &TableArgs,
) -> Result<u8, CliError> {
    positive("dt", dt)?;
    positive("t-max", t_max)?;
    let spec = load_config(path)?;
    let n = spec.n;
    let mut unit = DVector::zeros(n);
    unit[0] = 1.0;
    let q0 = initial("q0", q0, n, unit)?;
    let i0 = initial("i0", i0, n, DVector::zeros(n))?;
    let traj = match spec.common_ohmic_resistance() {
        Some(r) => propagate_ohmic(&spec, r, &q0, &i0, None, dt, t_max)?,
        None => simulate_memory(&spec, None, &q0, &i0, dt, t_max)?,
    };
    let mut columns = vec!["t".to_string()];
    columns.extend((1..=n).map(|k| format!("q_{k}")));
    columns.extend((1..=n).map(|k| format!("i_{k}")));
    columns.push("energy".into());
    let mut table = Table::new(columns);
    for (k, &t) in traj.t.iter().enumerate() {
        let mut row = vec![t];
        row.extend(traj.q.column(k).iter());
        row.extend(traj.i.column(k).iter());
        row.push(traj.energy[k]);
        table.push(row);
    }
    emit_table(args, &table)?;
    Ok(0)
}

fn markov_json(spec: &CircuitSpec, freq_tol: f64, m: &MarkovModel) -> Value {
    let modes: Vec<Value> = (0..m.omegas.len())
        .map(|j| {
            json!({
                "omega": real(m.omegas[j]),
                "gamma": real(m.gammas[j]),
                "epsilon": real(m.epsilons[j]),
            })
        })
        .collect();
    let channels: Vec<Value> = m
        .channels
        .iter()
        .map(|c| json!({ "line": c.line, "omega": real(c.omega), "weight": real(c.weight) }))
        .collect();
    let ito = ito_table(&m.channels);
    json!({
        "hbar": spec.hbar,
        "freq_tol": freq_tol,
        "modes": modes,
        "omegas": m.omegas.iter().map(|&v| real(v)).collect::<Vec<_>>(),
        "gammas": m.gammas.iter().map(|&v| real(v)).collect::<Vec<_>>(),
        "epsilons": m.epsilons.iter().map(|&v| real(v)).collect::<Vec<_>>(),
        "Y": real_matrix(&m.y),
        "kappa": complex_matrix(&m.kappa),
        "A": complex_matrix(&m.a_mat),
        "B": complex_matrix(&m.b_mat),
        "C": complex_matrix(&m.c_mat),
        "channels": channels,
        "ito_weights": ito.diagonal().iter().map(|&v| real(v)).collect::<Vec<_>>(),
    })
}

fn read_complex_matrix(v: &Value, name: &str) -> Result<DMatrix<Complex64>, CliError> {
    let bad = || CliError::Verify(format!("{name} is not a complex matrix"));
    let rows = v.get(name).and_then(Value::as_array).ok_or_else(bad)?;
    let mut parsed = Vec::with_capacity(rows.len());
    for row in rows {
        let row = row.as_array().ok_or_else(bad)?;
        let mut out = Vec::with_capacity(row.len());
        for z in row {
            let re = z.get("re").and_then(Value::as_f64).ok_or_else(bad)?;
            let im = z.get("im").and_then(Value::as_f64).ok_or_else(bad)?;
            out.push(Complex64::new(re, im));
        }
        parsed.push(out);
    }
    let ncols = parsed.first().map_or(0, Vec::len);
    if parsed.iter().any(|r| r.len() != ncols) {
        return Err(bad());
    }
    Ok(DMatrix::from_fn(parsed.len(), ncols, |i, j| parsed[i][j]))
}

fn verify_model(file: &Path, m: &MarkovModel) -> Result<(), CliError> {
    let text = std::fs::read_to_string(file).map_err(|e| CliError::Io {
        path: file.display().to_string(),
        message: e.to_string(),
    })?;
    let v: Value = serde_json::from_str(&text).map_err(|e| CliError::Parse {
        message: e.to_string(),
        line: e.line(),
        column: e.column(),
    })?;
    for (name, fresh) in [("A", &m.a_mat), ("B", &m.b_mat), ("C", &m.c_mat)] {
        let stored = read_complex_matrix(&v, name)?;
        if &stored != fresh {
            return Err(CliError::Verify(format!(
                "{name} differs from the stored model"
            )));
        }
    }
    Ok(())
}

pub fn markov(
    path: &Path,
    freq_tol: f64,
    verify: Option<&Path>,
    format: Format,
    out: &OutArgs,
) -> Result<u8, CliError> {
    if format != Format::Json {
        return Err(CliError::Usage("markov writes json".into()));
    }
    if !(freq_tol.is_finite() && freq_tol >= 0.0) {
        return Err(CliError::Usage(format!(
            "--freq-tol must be non-negative, got {freq_tol}"
        )));
    }
    let spec = load_config(path)?;
    let model = markov_model(&spec, freq_tol)?;
    if let Some(file) = verify {
        verify_model(file, &model)?;
        emit(out, "OK\n")?;
        return Ok(0);
    }
    let text = serde_json::to_string_pretty(&markov_json(&spec, freq_tol, &model))
        .expect("serializing a json value");
    emit(out, &(text + "\n"))?;
    Ok(0)
}
