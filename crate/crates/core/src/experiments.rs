//! Family sweeps comparing tuned ADMM against tuned gradient descent.
//!
//! For a family `𝒢_n`, each record stores the optimal rates and the times
//! `R_G = (1 − τ*_G)⁻¹` and `R_A = (1 − τ*_A)⁻¹`. The exponent estimators are
//! `β̂₁ = ln R_A / ln R_G` and `β̂₂ = (R_G/R_A)·(ΔR_A/ΔR_G)`, where the
//! differences run between consecutive records of the sweep (or between
//! records of equal index parity), since torus and barbell families are not
//! defined at every vertex count.

use std::fmt;
use std::io::{Read, Write};
use std::str::FromStr;

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::graphs::{build_barbell, build_cycle, build_torus, factor_graph, Graph};
use crate::tuning::{tune_admm, tune_gd_closed_form, AdmmSearchSpec, TuneStatus};

pub const CSV_HEADER: [&str; 12] = [
    "family",
    "index",
    "n",
    "alpha_star",
    "tau_G_star",
    "R_G",
    "gamma_star",
    "rho_star",
    "tau_A_star",
    "R_A",
    "beta1",
    "beta2",
];

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Family {
    Cycle,
    Torus,
    Barbell,
}

impl Family {
    pub fn graph(self, index: usize) -> Result<Graph<f64>> {
        match self {
            Family::Cycle => build_cycle(index),
            Family::Torus => build_torus(index),
            Family::Barbell => build_barbell(index),
        }
    }

    pub fn vertex_count(self, index: usize) -> usize {
        match self {
            Family::Cycle => index,
            Family::Torus => index * index,
            Family::Barbell => 2 * index,
        }
    }
}

impl fmt::Display for Family {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Family::Cycle => "cycle",
            Family::Torus => "torus",
            Family::Barbell => "barbell",
        })
    }
}

impl FromStr for Family {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "cycle" => Ok(Family::Cycle),
            "torus" => Ok(Family::Torus),
            "barbell" => Ok(Family::Barbell),
            other => Err(Error::Parse(format!("unknown family {other:?}"))),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SweepRecord {
    pub family: Family,
    pub index: usize,
    pub n: usize,
    pub alpha_star: f64,
    pub tau_g_star: f64,
    pub r_g: f64,
    pub gamma_star: f64,
    pub rho_star: f64,
    pub tau_a_star: f64,
    pub r_a: f64,
    /// Not part of the CSV; reconstructed from `tau_a_star` on read.
    pub admm_status: TuneStatus,
}

impl SweepRecord {
    /// `τ*_A ≤ τ*_G`, false whenever either rate is missing.
    pub fn admm_dominates(&self) -> bool {
        self.tau_a_star <= self.tau_g_star
    }

    /// Tuning failed, so the ADMM columns hold no usable values.
    pub fn failed(&self) -> bool {
        self.admm_status == TuneStatus::Failed
    }

    fn missing(family: Family, index: usize) -> Self {
        SweepRecord {
            family,
            index,
            n: family.vertex_count(index),
            alpha_star: f64::NAN,
            tau_g_star: f64::NAN,
            r_g: f64::NAN,
            gamma_star: f64::NAN,
            rho_star: f64::NAN,
            tau_a_star: f64::NAN,
            r_a: f64::NAN,
            admm_status: TuneStatus::Failed,
        }
    }
}

/// Tunes both methods on one family member. Failures yield a record with
/// missing values and status `Failed` instead of an error.
pub fn sweep_one(family: Family, index: usize, spec: &AdmmSearchSpec) -> SweepRecord {
    let run = || -> Result<SweepRecord> {
        let g = family.graph(index)?;
        let fg = factor_graph(&g);
        let gd = tune_gd_closed_form(&fg, fg.weights())?;
        let admm = tune_admm(&fg, fg.weights(), spec)?;
        let (gamma_star, rho_star) = admm.gamma_rho().expect("ADMM result carries (γ, ρ)");
        Ok(SweepRecord {
            family,
            index,
            n: g.n(),
            alpha_star: gd.alpha().expect("GD result carries α"),
            tau_g_star: gd.tau,
            r_g: gd.r,
            gamma_star,
            rho_star,
            tau_a_star: admm.tau,
            r_a: admm.r,
            admm_status: admm.status,
        })
    };
    run().unwrap_or_else(|_| SweepRecord::missing(family, index))
}

/// One record per index, in the order given. Indices run in parallel.
pub fn sweep(family: Family, indices: &[usize], spec: &AdmmSearchSpec) -> Result<Vec<SweepRecord>> {
    spec.validate()?;
    Ok(indices.par_iter().map(|&k| sweep_one(family, k, spec)).collect())
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum Differencing {
    /// Between neighbouring records.
    #[default]
    Consecutive,
    /// Between the nearest earlier record whose index has the same parity.
    SameParity,
}

/// Estimators aligned with the records they were computed from.
#[derive(Clone, Debug, PartialEq)]
pub struct BetaSeries {
    pub indices: Vec<usize>,
    pub beta1: Vec<Option<f64>>,
    /// On the later record of each differenced pair; `None` on the first
    /// record and wherever `ΔR_G = 0` or a value is missing.
    pub beta2: Vec<Option<f64>>,
}

impl BetaSeries {
    pub fn last_beta1(&self) -> Option<f64> {
        self.beta1.last().copied().flatten()
    }

    pub fn last_beta2(&self) -> Option<f64> {
        self.beta2.last().copied().flatten()
    }

    pub fn max_beta1(&self) -> Option<f64> {
        self.beta1.iter().flatten().copied().reduce(f64::max)
    }
}

/// `ln R_A / ln R_G` when both logs are defined and `R_G > 1`.
pub fn beta1(r_g: f64, r_a: f64) -> Option<f64> {
    (r_g > 1.0 && r_a > 0.0 && r_g.is_finite() && r_a.is_finite()).then(|| r_a.ln() / r_g.ln())
}

/// `(R_G/R_A)·(R_A' − R_A)/(R_G' − R_G)`, evaluated at the earlier point.
pub fn beta2(r_g: f64, r_a: f64, r_g_next: f64, r_a_next: f64) -> Option<f64> {
    let d_g = r_g_next - r_g;
    let value = (r_g / r_a) * (r_a_next - r_a) / d_g;
    (d_g != 0.0 && value.is_finite()).then_some(value)
}

/// Estimators for records sorted by index.
pub fn beta_hats(records: &[SweepRecord], differencing: Differencing) -> Result<BetaSeries> {
    if records.len() < 2 {
        return Err(Error::InvalidInput("estimators need at least two records".into()));
    }
    if records.windows(2).any(|w| w[0].index >= w[1].index || w[0].family != w[1].family) {
        return Err(Error::InvalidInput("records must share a family and have increasing indices".into()));
    }
    let beta2_at = |k: usize| {
        let partner = match differencing {
            Differencing::Consecutive => k.checked_sub(1),
            Differencing::SameParity => (0..k).rev().find(|&j| records[j].index % 2 == records[k].index % 2),
        }?;
        let (p, c) = (&records[partner], &records[k]);
        beta2(p.r_g, p.r_a, c.r_g, c.r_a)
    };
    Ok(BetaSeries {
        indices: records.iter().map(|r| r.index).collect(),
        beta1: records.iter().map(|r| beta1(r.r_g, r.r_a)).collect(),
        beta2: (0..records.len()).map(beta2_at).collect(),
    })
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

/// CSV with [`CSV_HEADER`]. Floats use the shortest representation that
/// reads back to the same bits. `betas` must come from the same records,
/// or be `None` to leave both estimator columns blank.
pub fn write_csv<W: Write>(out: W, records: &[SweepRecord], betas: Option<&BetaSeries>) -> Result<()> {
    if let Some(b) = betas {
        if b.beta1.len() != records.len() || b.beta2.len() != records.len() {
            return Err(Error::InvalidInput("estimator series does not match the records".into()));
        }
    }
    let mut w = csv::Writer::from_writer(out);
    w.write_record(CSV_HEADER)?;
    for (i, r) in records.iter().enumerate() {
        let (b1, b2) = betas.map_or((None, None), |b| (b.beta1[i], b.beta2[i]));
        w.write_record([
            r.family.to_string(),
            r.index.to_string(),
            r.n.to_string(),
            r.alpha_star.to_string(),
            r.tau_g_star.to_string(),
            r.r_g.to_string(),
            r.gamma_star.to_string(),
            r.rho_star.to_string(),
            r.tau_a_star.to_string(),
            r.r_a.to_string(),
            fmt_opt(b1),
            fmt_opt(b2),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// Rows of a CSV written by [`write_csv`].
#[derive(Clone, Debug, PartialEq)]
pub struct CsvRow {
    pub record: SweepRecord,
    pub beta1: Option<f64>,
    pub beta2: Option<f64>,
}

pub fn read_csv<R: Read>(input: R) -> Result<Vec<CsvRow>> {
    let mut rd = csv::Reader::from_reader(input);
    let header: Vec<String> = rd.headers()?.iter().map(str::to_string).collect();
    if header != CSV_HEADER {
        return Err(Error::Parse(format!("unexpected header {header:?}")));
    }
    let mut rows = Vec::new();
    for rec in rd.records() {
        let rec = rec?;
        let field = |i: usize| rec.get(i).unwrap_or("");
        let num = |i: usize| -> Result<f64> {
            field(i).parse().map_err(|_| Error::Parse(format!("bad {} value {:?}", CSV_HEADER[i], field(i))))
        };
        let int = |i: usize| -> Result<usize> {
            field(i).parse().map_err(|_| Error::Parse(format!("bad {} value {:?}", CSV_HEADER[i], field(i))))
        };
        let opt = |i: usize| -> Result<Option<f64>> { if field(i).is_empty() { Ok(None) } else { num(i).map(Some) } };
        let tau_a_star = num(8)?;
        rows.push(CsvRow {
            record: SweepRecord {
                family: field(0).parse()?,
                index: int(1)?,
                n: int(2)?,
                alpha_star: num(3)?,
                tau_g_star: num(4)?,
                r_g: num(5)?,
                gamma_star: num(6)?,
                rho_star: num(7)?,
                tau_a_star,
                r_a: num(9)?,
                admm_status: if tau_a_star < 1.0 { TuneStatus::Converged } else { TuneStatus::Failed },
            },
            beta1: opt(10)?,
            beta2: opt(11)?,
        });
    }
    Ok(rows)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SweepSummary {
    pub family: Family,
    pub indices: Vec<usize>,
    pub beta1_last: Option<f64>,
    pub beta2_last: Option<f64>,
    pub max_beta1: Option<f64>,
}

pub fn summarize(family: Family, betas: &BetaSeries) -> SweepSummary {
    SweepSummary {
        family,
        indices: betas.indices.clone(),
        beta1_last: betas.last_beta1(),
        beta2_last: betas.last_beta2(),
        max_beta1: betas.max_beta1(),
    }
}
