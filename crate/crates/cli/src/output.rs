//! CSV and JSON writers for experiment results.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use distbandit_core::experiment::{distribution_diagnostic, DiagRow, ExperimentOutput};
use distbandit_core::{Mode, UtilitySpec};
use serde_json::json;

use crate::CliError;

pub const GAP_HEADER: &str = "t,mode,gap_mean,gap_se,n";
pub const BIAS_HEADER: &str = "t,mode,bias_inf_mean,bias_inf_se,n";
pub const WEIGHTS_HEADER: &str = "mode,k,wbar_mean,wbar_se";
pub const DIAG_HEADER: &str = "x,cdf_oracle_mixture,cdf_learned_mixture,cdf_empirical_mixture";

/// `x` with 9 significant digits, in the shorter of fixed and exponent form.
pub fn sig9(x: f64) -> String {
    if x == 0.0 {
        return "0".into();
    }
    if !x.is_finite() {
        return format!("{x}");
    }
    let sci = format!("{x:.8e}");
    let (mantissa, exp) = sci.split_once('e').expect("exponent form");
    let exp: i32 = exp.parse().expect("integer exponent");
    if (-4..9).contains(&exp) {
        let fixed = format!("{:.*}", (8 - exp) as usize, x);
        trim_zeros(&fixed).to_string()
    } else {
        format!("{}e{}", trim_zeros(mantissa), exp)
    }
}

fn trim_zeros(s: &str) -> &str {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.')
    } else {
        s
    }
}

fn write(path: &Path, body: &str) -> Result<(), CliError> {
    fs::write(path, body).map_err(|e| CliError::Io(format!("cannot write {}: {e}", path.display())))
}

pub fn gap_csv(out: &ExperimentOutput) -> String {
    let mut s = format!("{GAP_HEADER}\n");
    for m in &out.modes {
        for (i, a) in m.gap.iter().enumerate() {
            let _ = writeln!(s, "{},{},{},{},{}", i + 1, m.mode.label(), sig9(a.mean), sig9(a.se), a.n);
        }
    }
    s
}

pub fn bias_csv(out: &ExperimentOutput) -> String {
    let mut s = format!("{BIAS_HEADER}\n");
    for m in &out.modes {
        for (t, a) in &m.bias {
            let _ = writeln!(s, "{},{},{},{},{}", t, m.mode.label(), sig9(a.mean), sig9(a.se), a.n);
        }
    }
    s
}

/// Arms are numbered from 1.
pub fn weights_csv(out: &ExperimentOutput) -> String {
    let mut s = format!("{WEIGHTS_HEADER}\n");
    for m in &out.modes {
        for (k, a) in m.wbar.iter().enumerate() {
            let _ = writeln!(s, "{},{},{},{}", m.mode.label(), k + 1, sig9(a.mean), sig9(a.se));
        }
    }
    s
}

pub fn diag_csv(rows: &[DiagRow]) -> String {
    let mut s = format!("{DIAG_HEADER}\n");
    for r in rows {
        let _ = writeln!(s, "{},{},{},{}", sig9(r.x), sig9(r.oracle), sig9(r.learned), sig9(r.empirical));
    }
    s
}

pub fn summary_json(out: &ExperimentOutput, jobs: Option<usize>, plots: bool) -> serde_json::Value {
    let t = out.config.horizon;
    let modes: serde_json::Map<String, serde_json::Value> = out
        .modes
        .iter()
        .map(|m| {
            let gap = m.final_gap();
            let rate = m.regret_rate(t);
            let k = m.wbar.len();
            let mean_pulls: Vec<f64> = (0..k)
                .map(|j| m.episodes.iter().map(|e| e.pulls[j] as f64).sum::<f64>() / m.episodes.len() as f64)
                .collect();
            (
                m.mode.label().to_string(),
                json!({
                    "final_gap_mean": gap.mean,
                    "final_gap_se": gap.se,
                    "regret_rate_mean": rate.mean,
                    "regret_rate_se": rate.se,
                    "wbar_mean": m.wbar.iter().map(|a| a.mean).collect::<Vec<_>>(),
                    "mean_pulls": mean_pulls,
                    "episodes": m.episodes.len(),
                }),
            )
        })
        .collect();
    json!({
        "config": out.config,
        "jobs": jobs,
        "plots": plots,
        "oracle": {
            "wstar": out.oracle.wstar,
            "ustar": out.oracle.ustar,
            "certificate": out.oracle.certificate,
            "method": out.oracle.method,
            "iterations": out.oracle.iterations,
            "flagged": out.oracle.flagged,
        },
        "results": modes,
    })
}

/// The mode whose final states feed the distribution diagnostic: the plug-in
/// learner when it ran, the exact one otherwise.
pub fn diagnostic_mode(out: &ExperimentOutput) -> Option<Mode> {
    out.mode(Mode::EstimatedIf).or_else(|| out.mode(Mode::ExactIf)).map(|m| m.mode)
}

/// Writes every result file into `dir`; returns the names written.
pub fn write_all(out: &ExperimentOutput, dir: &Path, jobs: Option<usize>, plots: bool) -> Result<Vec<String>, CliError> {
    fs::create_dir_all(dir).map_err(|e| CliError::Io(format!("cannot create {}: {e}", dir.display())))?;
    let mut written = Vec::new();
    let mut put = |name: &str, body: &str| -> Result<(), CliError> {
        write(&dir.join(name), body)?;
        written.push(name.to_string());
        Ok(())
    };
    put("gap.csv", &gap_csv(out))?;
    put("bias.csv", &bias_csv(out))?;
    put("weights.csv", &weights_csv(out))?;
    let summary = serde_json::to_string_pretty(&summary_json(out, jobs, plots)).expect("summary serializes");
    put("summary.json", &(summary + "\n"))?;
    if matches!(out.config.utility, UtilitySpec::Wasserstein { .. }) {
        if let Some(mode) = diagnostic_mode(out) {
            let instance = out.config.instance().map_err(|e| CliError::Config(e.to_string()))?;
            let rows = distribution_diagnostic(&instance, &out.oracle.wstar, out.mode(mode).expect("mode ran"))
                .map_err(|e| CliError::Config(e.to_string()))?;
            put("diag.csv", &diag_csv(&rows))?;
        }
    }
    if plots {
        put("gap.svg", &crate::plot::gap_svg(out))?;
        if out.modes.iter().any(|m| !m.bias.is_empty()) {
            put("bias.svg", &crate::plot::bias_svg(out))?;
        }
    }
    Ok(written)
}
