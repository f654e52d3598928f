//! Run reports and their serialized forms. Every float is written with 17
//! significant digits so the decimal text round-trips to the exact bits, and
//! the CSV column order is part of the output contract:
//! `k,omega_next,gamma,mu,radius,basis_dim,wall_time_s`.

use serde::{Deserialize, Serialize};
use stabrad::{ProbeReport, RadiusResult};
use std::io::{self, Write};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "snake_case")]
pub enum ConfigEcho {
    Solver {
        eps_rel: f64,
        k_max: usize,
        gamma_floor: f64,
        #[serde(skip_serializing_if = "Option::is_none", default)]
        omega_max: Option<f64>,
        coarse_samples: usize,
        timings: bool,
    },
    Oracle {
        omega_grid_points: usize,
        gamma_grid_points: usize,
        refine_iters: usize,
        gamma_floor: f64,
        #[serde(skip_serializing_if = "Option::is_none", default)]
        omega_max: Option<f64>,
    },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct IterationRow {
    pub k: usize,
    pub omega_next: f64,
    pub gamma: f64,
    pub mu: f64,
    pub radius: f64,
    pub basis_dim: usize,
    pub wall_time_s: f64,
    /// |μ_k − μ*| against the final iterate, or against 1/reference.
    pub mu_err: f64,
    /// |r_k − r*| against the final iterate, or against the reference.
    pub radius_err: f64,
    pub deflated: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProbeSummary {
    pub trials: usize,
    pub shrink: f64,
    pub target_norm: f64,
    pub violations: usize,
    pub max_abscissa: f64,
}

impl From<&ProbeReport> for ProbeSummary {
    fn from(r: &ProbeReport) -> Self {
        Self {
            trials: r.trials,
            shrink: r.shrink,
            target_norm: r.target_norm,
            violations: r.violations.len(),
            max_abscissa: r.max_abscissa,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub command: String,
    pub input: String,
    pub config: ConfigEcho,
    pub radius: f64,
    pub omega_star: f64,
    pub gamma_star: f64,
    pub mu_star: f64,
    pub converged: bool,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub reference_radius: Option<f64>,
    pub iterations: Vec<IterationRow>,
    pub warnings: Vec<String>,
    pub wall_time_s: f64,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub probe: Option<ProbeSummary>,
}

impl RunReport {
    pub fn new(
        command: &str,
        input: String,
        config: ConfigEcho,
        result: &RadiusResult,
        wall_time_s: f64,
        reference_radius: Option<f64>,
    ) -> Self {
        let r_star = reference_radius.unwrap_or(result.radius);
        let mu_star = reference_radius.map(|r| 1.0 / r).unwrap_or(result.mu_star);
        let iterations = result
            .history
            .iter()
            .map(|rec| IterationRow {
                k: rec.k,
                omega_next: rec.omega_next,
                gamma: rec.gamma_at_opt,
                mu: rec.mu_k,
                radius: rec.r_k,
                basis_dim: rec.basis_dim,
                wall_time_s: rec.wall_time,
                mu_err: (rec.mu_k - mu_star).abs(),
                radius_err: (rec.r_k - r_star).abs(),
                deflated: rec.deflated,
            })
            .collect();
        Self {
            command: command.into(),
            input,
            config,
            radius: result.radius,
            omega_star: result.omega_star,
            gamma_star: result.gamma_star,
            mu_star: result.mu_star,
            converged: result.converged,
            reference_radius,
            iterations,
            warnings: result.warnings.clone(),
            wall_time_s,
            probe: None,
        }
    }
}

/// serde_json formatter that writes every f64 as `{:.16e}` — 17 significant
/// digits, enough to reproduce the exact bits on parse.
struct SciFormatter;

impl serde_json::ser::Formatter for SciFormatter {
    fn write_f64<W>(&mut self, writer: &mut W, value: f64) -> io::Result<()>
    where
        W: ?Sized + Write,
    {
        write!(writer, "{value:.16e}")
    }
}

pub fn to_json(report: &RunReport) -> String {
    let mut out = Vec::new();
    let mut ser = serde_json::Serializer::with_formatter(&mut out, SciFormatter);
    report
        .serialize(&mut ser)
        .expect("report serialization is infallible");
    String::from_utf8(out).expect("serialized report is UTF-8")
}

pub fn to_csv(report: &RunReport) -> String {
    let mut s = String::from("k,omega_next,gamma,mu,radius,basis_dim,wall_time_s\n");
    for row in &report.iterations {
        s.push_str(&format!(
            "{},{:.16e},{:.16e},{:.16e},{:.16e},{},{:.16e}\n",
            row.k, row.omega_next, row.gamma, row.mu, row.radius, row.basis_dim, row.wall_time_s
        ));
    }
    s
}

pub fn print_human(report: &RunReport) {
    println!("command     {}", report.command);
    println!("input       {}", report.input);
    println!("radius      {:.12e}", report.radius);
    println!("omega_star  {:.12e}", report.omega_star);
    println!("gamma_star  {:.12e}", report.gamma_star);
    println!("mu_star     {:.12e}", report.mu_star);
    println!(
        "converged   {} ({} subspace iterations)",
        report.converged,
        report.iterations.len().saturating_sub(1)
    );
    if let Some(r) = report.reference_radius {
        println!("reference   {r:.12e}");
    }
    println!(
        "\n{:>3}  {:>20}  {:>20}  {:>20}  {:>5}  {:>10}  {:>10}",
        "k", "omega_next", "mu_k", "r_k", "dim", "|mu-mu*|", "|r-r*|"
    );
    for row in &report.iterations {
        println!(
            "{:>3}  {:>20.12e}  {:>20.12e}  {:>20.12e}  {:>5}  {:>10.3e}  {:>10.3e}{}",
            row.k,
            row.omega_next,
            row.mu,
            row.radius,
            row.basis_dim,
            row.mu_err,
            row.radius_err,
            if row.deflated { "  (deflated)" } else { "" }
        );
    }
    if let Some(p) = &report.probe {
        println!(
            "\nprobe       {} trials at ‖Δ‖ = {:.6e} ({}×radius): {} violations, max abscissa {:.6e}",
            p.trials, p.target_norm, p.shrink, p.violations, p.max_abscissa
        );
    }
    for w in &report.warnings {
        println!("warning     {w}");
    }
    println!("wall_time_s {:.3}", report.wall_time_s);
}
