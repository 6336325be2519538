use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::cheeger::{abs_condition, check_schedule, interior_annulus, strictly_increasing_tail};
use crate::error::Result;
use crate::generators::GeneratorSpec;
use crate::graph::{DirectedWeightedGraph, Filtration};
use crate::operators::{assemble, OperatorKind};

use super::lambda1_symmetric;

/// Relative change below which successive `k` values count as converged.
const CONVERGENCE_RTOL: f64 = 1e-3;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EssCell {
    pub n: usize,
    pub k: usize,
    /// `λ₁(S^D_{G_k∖G_n})`.
    pub lambda1: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct InnerLimit {
    pub n: usize,
    /// Value at the largest scheduled `k`.
    pub value: f64,
    /// Nonincreasing in `k` (domains grow, so this should always hold).
    pub monotone_in_k: bool,
    /// Relative change under `1e-3` across the last three `k`.
    pub converged: bool,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum EssVerdict {
    Diverges,
    Bounded,
    Inconclusive,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EssSpectrumEstimate {
    pub table: Vec<EssCell>,
    pub inner_limits: Vec<InnerLimit>,
    /// `(n, c_n)` from the isoperimetric side.
    pub c_sequence: Vec<(usize, f64)>,
    /// Last inner limit; a lower-bound estimate for `inf σ_ess(S)`.
    pub eta_ess_lower: f64,
    pub verdict: EssVerdict,
}

impl EssSpectrumEstimate {
    pub fn to_csv(&self) -> String {
        let mut s = String::from("n,k,lambda1\n");
        for c in &self.table {
            s.push_str(&format!("{},{},{}\n", c.n, c.k, crate::linalg::fmt_f64(c.lambda1)));
        }
        s
    }
}

/// Fill the `(n, k)` table of Dirichlet bottoms on annuli `G_k ∖ G_n`.
///
/// Divergence needs every inner limit at or above `n/16` plus a strictly
/// increasing tail over the last three `n`.
pub fn ess_spectrum_estimate(
    graph: &DirectedWeightedGraph,
    filtration: &Filtration,
    schedule: &[(usize, Vec<usize>)],
) -> Result<EssSpectrumEstimate> {
    check_schedule(schedule)?;
    let jobs: Vec<(usize, usize)> = schedule.iter().flat_map(|(n, ks)| ks.iter().map(move |&k| (*n, k))).collect();
    let table = jobs
        .par_iter()
        .map(|&(n, k)| {
            let omega = interior_annulus(graph, filtration, n, k)?;
            let lambda1 = lambda1_symmetric(&assemble(graph, &omega, OperatorKind::S)?)?;
            Ok(EssCell { n, k, lambda1 })
        })
        .collect::<Result<Vec<_>>>()?;

    let inner_limits: Vec<InnerLimit> = schedule
        .iter()
        .map(|(n, ks)| {
            let mut row: Vec<(usize, f64)> =
                table.iter().filter(|c| c.n == *n && ks.contains(&c.k)).map(|c| (c.k, c.lambda1)).collect();
            row.sort_by_key(|r| r.0);
            row.dedup_by_key(|r| r.0);
            let vals: Vec<f64> = row.iter().map(|r| r.1).collect();
            let monotone_in_k = vals.windows(2).all(|w| w[1] <= w[0] + 1e-10 * w[0].abs().max(1.0));
            let converged = vals.len() >= 3
                && vals[vals.len() - 3..]
                    .windows(2)
                    .all(|w| (w[1] - w[0]).abs() <= CONVERGENCE_RTOL * w[0].abs().max(f64::MIN_POSITIVE));
            InnerLimit { n: *n, value: *vals.last().expect("non-empty row"), monotone_in_k, converged }
        })
        .collect();

    let c_sequence = abs_condition(graph, filtration, schedule)?.c_sequence;
    let values: Vec<f64> = inner_limits.iter().map(|l| l.value).collect();
    let above = inner_limits.iter().all(|l| l.value >= l.n as f64 / 16.0);
    let verdict = if values.len() < 3 {
        EssVerdict::Inconclusive
    } else if above && strictly_increasing_tail(&values) {
        EssVerdict::Diverges
    } else if !strictly_increasing_tail(&values) && inner_limits.last().is_some_and(|l| l.value < l.n as f64 / 16.0) {
        EssVerdict::Bounded
    } else {
        EssVerdict::Inconclusive
    };
    Ok(EssSpectrumEstimate {
        eta_ess_lower: *values.last().expect("non-empty schedule"),
        table,
        inner_limits,
        c_sequence,
        verdict,
    })
}

pub fn ess_spectrum_estimate_for_spec(
    spec: &GeneratorSpec,
    schedule: &[(usize, Vec<usize>)],
) -> Result<EssSpectrumEstimate> {
    let graph = spec.build()?;
    let max_k = schedule.iter().flat_map(|(_, ks)| ks.iter().copied()).max().unwrap_or(0);
    let filtration = Filtration::hop_balls(&graph, spec.root(&graph), max_k)?;
    ess_spectrum_estimate(&graph, &filtration, schedule)
}
