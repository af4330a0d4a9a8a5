//! Simulation results table: one row per scenario and test.

use std::io::{Read, Write};

use goflab_core::hl::Method;
use goflab_core::simulate::SimSummary;
use goflab_core::stats::McSummary;

use crate::error::{CliError, Result};

pub const HEADER: [&str; 16] = [
    "n",
    "m",
    "d",
    "G",
    "sigma2_e",
    "reps",
    "failures",
    "method",
    "mean",
    "var",
    "rejection",
    "mean_ci_lo",
    "mean_ci_hi",
    "rej_ci_lo",
    "rej_ci_hi",
    "seed",
];

/// Extra full-precision columns of the long format.
pub const LONG_HEADER: [&str; 6] = [
    "reps_used",
    "mean_exact",
    "var_exact",
    "rejection_exact",
    "mean_sigma_diag",
    "mean_df",
];

/// Formats with 6 significant digits, `%g` style.
pub fn sig6(x: f64) -> String {
    if x == 0.0 {
        return "0".into();
    }
    if !x.is_finite() {
        return x.to_string();
    }
    let exp = x.abs().log10().floor() as i32;
    if (-5..6).contains(&exp) {
        let decimals = (5 - exp).max(0) as usize;
        let s = format!("{x:.decimals$}");
        trim_zeros(&s)
    } else {
        let s = format!("{x:.5e}");
        let (mantissa, e) = s.split_once('e').unwrap();
        format!("{}e{e}", trim_zeros(mantissa))
    }
}

fn trim_zeros(s: &str) -> String {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.').to_string()
    } else {
        s.to_string()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ResultRow {
    pub n: usize,
    pub m: usize,
    pub d: usize,
    pub groups: usize,
    pub sigma2_e: f64,
    pub reps: usize,
    pub failures: usize,
    pub method: String,
    pub mean: f64,
    pub var: f64,
    pub rejection: f64,
    pub mean_ci: (f64, f64),
    pub rej_ci: (f64, f64),
    pub seed: u64,
}

fn summary_fields(s: &SimSummary, method: Method, mc: &McSummary) -> Vec<String> {
    let sc = &s.scenario;
    vec![
        sc.n.to_string(),
        sc.m.to_string(),
        sc.d.to_string(),
        sc.groups.to_string(),
        sig6(sc.sigma2_e),
        sc.reps.to_string(),
        s.failures.to_string(),
        method.to_string(),
        sig6(mc.mean),
        sig6(mc.variance),
        sig6(mc.rejection_rate),
        sig6(mc.mean_ci.0),
        sig6(mc.mean_ci.1),
        sig6(mc.rejection_ci.0),
        sig6(mc.rejection_ci.1),
        sc.seed.to_string(),
    ]
}

pub fn write_results<W: Write>(writer: W, summaries: &[SimSummary], long: bool) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    let mut header: Vec<&str> = HEADER.to_vec();
    if long {
        header.extend(LONG_HEADER);
    }
    w.write_record(&header).map_err(csv_write_err)?;
    for s in summaries {
        for (method, mc) in [(Method::Hl, &s.hl), (Method::Ghl, &s.ghl)] {
            let mut rec = summary_fields(s, method, mc);
            if long {
                let df = if method == Method::Hl {
                    (s.scenario.groups - 2) as f64
                } else {
                    s.mean_ghl_df
                };
                rec.extend([
                    s.reps_used.to_string(),
                    format!("{:?}", mc.mean),
                    format!("{:?}", mc.variance),
                    format!("{:?}", mc.rejection_rate),
                    format!("{:?}", s.mean_sigma_diag),
                    format!("{df:?}"),
                ]);
            }
            w.write_record(&rec).map_err(csv_write_err)?;
        }
    }
    w.flush().map_err(|e| CliError::io("<results>", e))?;
    Ok(())
}

fn csv_write_err(e: csv::Error) -> CliError {
    CliError::Schema(e.to_string())
}

pub fn read_results<R: Read>(reader: R) -> Result<Vec<ResultRow>> {
    let mut rdr = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_reader(reader);
    let headers = rdr
        .headers()
        .map_err(|e| CliError::Schema(e.to_string()))?
        .clone();
    let col = |name: &str| -> Result<usize> {
        headers
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| CliError::Schema(format!("missing column {name:?}")))
    };
    let idx: Vec<usize> = HEADER.iter().map(|h| col(h)).collect::<Result<_>>()?;
    let mut rows = Vec::new();
    for rec in rdr.records() {
        let rec = rec.map_err(|e| CliError::Schema(e.to_string()))?;
        let line = rec.position().map_or(0, |p| p.line());
        let field = |k: usize| rec.get(idx[k]).unwrap_or("");
        let num = |k: usize| -> Result<f64> {
            field(k).parse().map_err(|_| {
                CliError::Schema(format!(
                    "line {line}: bad {} value {:?}",
                    HEADER[k],
                    field(k)
                ))
            })
        };
        let int = |k: usize| -> Result<usize> {
            field(k).parse().map_err(|_| {
                CliError::Schema(format!(
                    "line {line}: bad {} value {:?}",
                    HEADER[k],
                    field(k)
                ))
            })
        };
        rows.push(ResultRow {
            n: int(0)?,
            m: int(1)?,
            d: int(2)?,
            groups: int(3)?,
            sigma2_e: num(4)?,
            reps: int(5)?,
            failures: int(6)?,
            method: field(7).to_string(),
            mean: num(8)?,
            var: num(9)?,
            rejection: num(10)?,
            mean_ci: (num(11)?, num(12)?),
            rej_ci: (num(13)?, num(14)?),
            seed: field(15).parse().map_err(|_| {
                CliError::Schema(format!("line {line}: bad seed value {:?}", field(15)))
            })?,
        });
    }
    Ok(rows)
}
