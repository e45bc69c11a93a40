//! Executable checks with residuals and tolerances, and the suite that runs
//! them all against one matrix.
//!
//! Every check returns a [`CheckResult`]: a list of named residuals, each
//! with its own tolerance, plus informational metrics that do not affect the
//! verdict. A check passes when every residual is at most its tolerance.
//! Failures carry the offending matrices so they can be replayed.

mod checks;

use std::collections::BTreeMap;
use std::time::Instant;

use num_complex::Complex64;
use rand::seq::index::sample;
use rand::Rng;
use rayon::prelude::*;
use serde::ser::{SerializeMap, SerializeStruct};
use serde::{Serialize, Serializer};
use sha2::{Digest, Sha256};

use crate::decomp::hs_flag;
use crate::error::{Error, Result};
use crate::flags::Flag;
use crate::generate::{aq_pair, commuting_pair, commuting_pair_on, derive_seed, rng};
use crate::holo::{HoloFunction, DEFAULT_NODES};
use crate::linalg::{eigenvalues, Matrix, OrderingTag};

pub use checks::{
    check_lemma_22, check_lemma_aq, check_lemma_einv_htexp, check_lemma_htinv, check_lemma_invs,
    check_prop_commuting, check_theorem_i, check_theorem_ii, cond_factor, COND_CAP,
};

/// Tunable parameters shared by all checks.
#[derive(Clone)]
pub struct Config {
    /// Multiplies every default tolerance.
    pub tol_scale: f64,
    /// Quadrature nodes per contour circle.
    pub nodes: usize,
    /// Random shifts per determinant comparison.
    pub lemma22_trials: usize,
    pub order: OrderingTag,
}

impl Default for Config {
    fn default() -> Self {
        Self {
            tol_scale: 1.0,
            nodes: DEFAULT_NODES,
            lemma22_trials: 20,
            order: OrderingTag::ModulusArgument,
        }
    }
}

impl Config {
    pub fn tol(&self, base: f64) -> f64 {
        base * self.tol_scale
    }
}

impl Serialize for Config {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        let mut s = serializer.serialize_struct("Config", 4)?;
        s.serialize_field("tol_scale", &self.tol_scale)?;
        s.serialize_field("nodes", &self.nodes)?;
        s.serialize_field("lemma22_trials", &self.lemma22_trials)?;
        s.serialize_field("order", self.order.name())?;
        s.end()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Status {
    Passed,
    Failed,
    Skipped,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Residual {
    pub name: String,
    pub value: f64,
    pub tolerance: f64,
}

impl Residual {
    pub fn ok(&self) -> bool {
        self.value <= self.tolerance
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CheckResult {
    pub name: String,
    pub residuals: Vec<Residual>,
    pub metrics: Vec<(String, f64)>,
    pub details: String,
    pub skip_reason: Option<String>,
    /// A failure message from an error raised mid-check.
    pub error: Option<String>,
    pub replay: Vec<(String, Matrix)>,
}

impl CheckResult {
    pub fn new(name: &str) -> Self {
        Self {
            name: name.to_string(),
            residuals: Vec::new(),
            metrics: Vec::new(),
            details: String::new(),
            skip_reason: None,
            error: None,
            replay: Vec::new(),
        }
    }

    pub fn skipped(name: &str, reason: String) -> Self {
        Self {
            skip_reason: Some(reason),
            ..Self::new(name)
        }
    }

    pub fn errored(name: &str, message: String) -> Self {
        Self {
            error: Some(message),
            ..Self::new(name)
        }
    }

    pub fn residual(&mut self, name: &str, value: f64, tolerance: f64) {
        self.residuals.push(Residual {
            name: name.to_string(),
            value,
            tolerance,
        });
    }

    pub fn metric(&mut self, name: &str, value: f64) {
        self.metrics.push((name.to_string(), value));
    }

    pub fn note(&mut self, text: &str) {
        if !self.details.is_empty() {
            self.details.push_str("; ");
        }
        self.details.push_str(text);
    }

    pub fn get(&self, name: &str) -> Option<&Residual> {
        self.residuals.iter().find(|r| r.name == name)
    }

    pub fn status(&self) -> Status {
        if self.skip_reason.is_some() {
            Status::Skipped
        } else if self.error.is_none() && self.residuals.iter().all(Residual::ok) {
            Status::Passed
        } else {
            Status::Failed
        }
    }

    pub fn passed(&self) -> bool {
        self.status() == Status::Passed
    }

    /// Tolerance of the residual closest to (or furthest past) its limit.
    pub fn tolerance(&self) -> Option<f64> {
        self.binding().map(|r| r.tolerance)
    }

    fn binding(&self) -> Option<&Residual> {
        self.residuals
            .iter()
            .max_by(|a, b| ratio(a).total_cmp(&ratio(b)))
    }

    /// Attaches `inputs` for replay when the check did not pass.
    pub fn with_replay(mut self, inputs: &[(&str, &Matrix)]) -> Self {
        if self.status() == Status::Failed {
            self.replay = inputs.iter().map(|(k, m)| (k.to_string(), (*m).clone())).collect();
        }
        self
    }

    /// One line for terminals.
    pub fn summary(&self) -> String {
        match self.status() {
            Status::Skipped => format!("{}: skipped ({})", self.name, self.skip_reason.as_deref().unwrap_or("")),
            status => {
                let worst = self
                    .binding()
                    .map(|r| format!(" worst {}={:.3e} (tol {:.1e})", r.name, r.value, r.tolerance))
                    .unwrap_or_default();
                let err = self.error.as_deref().map(|e| format!(" error: {e}")).unwrap_or_default();
                let verdict = if status == Status::Passed { "pass" } else { "FAIL" };
                format!("{}: {verdict}{worst}{err}", self.name)
            }
        }
    }
}

fn ratio(r: &Residual) -> f64 {
    if r.value.is_nan() {
        f64::INFINITY
    } else if r.tolerance > 0.0 {
        r.value / r.tolerance
    } else if r.value > 0.0 {
        f64::INFINITY
    } else {
        0.0
    }
}

struct Ordered<'a, T>(&'a [(String, T)]);

impl<T: Serialize> Serialize for Ordered<'_, T> {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        let mut map = serializer.serialize_map(Some(self.0.len()))?;
        for (k, v) in self.0 {
            map.serialize_entry(k, v)?;
        }
        map.end()
    }
}

impl Serialize for CheckResult {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        let values: Vec<(String, f64)> = self.residuals.iter().map(|r| (r.name.clone(), r.value)).collect();
        let tols: Vec<(String, f64)> = self.residuals.iter().map(|r| (r.name.clone(), r.tolerance)).collect();
        let mut s = serializer.serialize_struct("CheckResult", 11)?;
        s.serialize_field("name", &self.name)?;
        s.serialize_field("status", &self.status())?;
        s.serialize_field("passed", &self.passed())?;
        s.serialize_field("tolerance", &self.tolerance())?;
        s.serialize_field("residuals", &Ordered(&values))?;
        s.serialize_field("tolerances", &Ordered(&tols))?;
        s.serialize_field("metrics", &Ordered(&self.metrics))?;
        s.serialize_field("details", &self.details)?;
        if let Some(reason) = &self.skip_reason {
            s.serialize_field("skip_reason", reason)?;
        }
        if let Some(error) = &self.error {
            s.serialize_field("error", error)?;
        }
        if !self.replay.is_empty() {
            s.serialize_field("replay", &Ordered(&self.replay))?;
        }
        s.end()
    }
}

/// Dimension, Frobenius norm and SHA-256 of the little-endian bytes of the
/// entries (real then imaginary part, row-major).
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Fingerprint {
    pub n: usize,
    pub frobenius_norm: f64,
    pub sha256: String,
}

impl Fingerprint {
    pub fn of(t: &Matrix) -> Self {
        let mut hasher = Sha256::new();
        for z in t.as_slice() {
            hasher.update(z.re.to_le_bytes());
            hasher.update(z.im.to_le_bytes());
        }
        let sha256 = hasher.finalize().iter().map(|b| format!("{b:02x}")).collect();
        Self {
            n: t.rows(),
            frobenius_norm: t.norm_fro(),
            sha256,
        }
    }
}

#[derive(Clone)]
pub struct VerificationReport {
    pub fingerprint: Fingerprint,
    pub function: String,
    pub seed: u64,
    pub config: Config,
    pub checks: Vec<CheckResult>,
    /// Wall-clock milliseconds per check, in check order.
    pub timings_ms: Option<Vec<(String, f64)>>,
}

impl VerificationReport {
    /// True when no check failed; skipped checks do not count against it.
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.status() != Status::Failed)
    }

    pub fn without_timings(&self) -> Self {
        Self {
            timings_ms: None,
            ..self.clone()
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }
}

impl Serialize for VerificationReport {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        let mut s = serializer.serialize_struct("VerificationReport", 7)?;
        s.serialize_field("fingerprint", &self.fingerprint)?;
        s.serialize_field("function", &self.function)?;
        s.serialize_field("seed", &self.seed)?;
        s.serialize_field("config", &self.config)?;
        s.serialize_field("passed", &self.passed())?;
        s.serialize_field("checks", &self.checks)?;
        if let Some(t) = &self.timings_ms {
            s.serialize_field("timings_ms", &Ordered(t))?;
        }
        s.end()
    }
}

/// Check names in suite order.
pub const SUITE: [&str; 8] = [
    "theorem_i",
    "theorem_ii",
    "lemma_invs",
    "lemma_aq",
    "prop_commuting",
    "lemma_htinv",
    "lemma_einv_htexp",
    "lemma_22",
];

/// Flag from `basis` with between 2 and 5 blocks (at most `n`).
pub fn random_coarse_flag<R: Rng>(rng: &mut R, basis: Matrix) -> Result<Flag> {
    let n = basis.rows();
    if n < 2 {
        return Flag::new(basis, vec![0, n]);
    }
    let blocks = rng.random_range(2..=n.min(5));
    let mut cuts: Vec<usize> = sample(rng, n - 1, blocks - 1).into_iter().map(|c| c + 1).collect();
    cuts.sort_unstable();
    cuts.insert(0, 0);
    cuts.push(n);
    Flag::new(basis, cuts)
}

/// Greedy subset of `points` with pairwise distances above `gap`.
fn separated(points: &[Complex64], gap: f64) -> Vec<Complex64> {
    let mut out: Vec<Complex64> = Vec::new();
    for &p in points {
        if out.iter().all(|q| (p - q).norm() > gap) {
            out.push(p);
        }
    }
    out
}

/// Size of the largest group of numerically equal eigenvalues.
fn largest_eigenvalue_block(m: &Matrix) -> Result<usize> {
    let eigs = eigenvalues(m)?;
    let tol = 1e-6 * m.norm_fro().max(1.0);
    Ok(eigs
        .iter()
        .map(|a| eigs.iter().filter(|b| (*a - **b).norm() <= tol).count())
        .max()
        .unwrap_or(0))
}

/// Errors that mean "this check does not apply here" rather than "failed".
fn is_precondition(e: &Error) -> bool {
    matches!(
        e,
        Error::ZeroInSupport { .. }
            | Error::TrivialProjection
            | Error::NotInvariant { .. }
            | Error::NotCommuting { .. }
            | Error::NotNilpotent { .. }
            | Error::SingularMatrix { .. }
            | Error::SingularCorner { .. }
            | Error::ClusterTooLarge { .. }
    )
}

fn run_check(index: usize, t: &Matrix, h: &HoloFunction, cfg: &Config, seed: u64) -> Result<CheckResult> {
    let n = t.rows();
    let stream = derive_seed(seed, index as u64);
    let mut r = rng(stream);
    match SUITE[index] {
        "theorem_i" => check_theorem_i(t, h, cfg),
        "theorem_ii" => check_theorem_ii(t, cfg),
        "lemma_invs" => {
            let d = crate::decomp::decompose(t, cfg.order.clone())?;
            check_lemma_invs(&d.n_part, &d.q_part, cfg)
        }
        "lemma_aq" => {
            let (a, q) = aq_pair(&mut r, n);
            let mut out = check_lemma_aq(&a, &q, cfg)?;
            out.note(&format!("seeded commuting pair of size {n}"));
            Ok(out)
        }
        "prop_commuting" => {
            let entire = h.singularities().is_empty() && h.branch_cuts().is_empty();
            let (np, qp, _) = if entire {
                commuting_pair(&mut r, n)
            } else {
                let values = separated(&eigenvalues(t)?, 0.05);
                commuting_pair_on(&mut r, n, &values)
            };
            let largest = largest_eigenvalue_block(&np)?;
            if largest > 8 && !h.is_polynomial() {
                return Ok(CheckResult::skipped(
                    "prop_commuting",
                    format!("spectrum of T too clustered for a commuting pair (block of {largest})"),
                ));
            }
            let mut out = check_prop_commuting(&np, &qp, h, cfg)?;
            let origin = if entire { "" } else { " on the spectrum of T" };
            out.note(&format!("seeded commuting pair of size {n}{origin}"));
            Ok(out)
        }
        "lemma_htinv" => {
            if n < 2 {
                return Err(Error::TrivialProjection);
            }
            let flag = hs_flag(t, cfg.order.clone())?;
            let k = r.random_range(1..n);
            let mut out = check_lemma_htinv(t, &flag.projection(k), h, cfg)?;
            out.note(&format!("Schur flag projection of rank {k}"));
            Ok(out)
        }
        "lemma_einv_htexp" | "lemma_22" => {
            let mut flag_rng = rng(derive_seed(seed, SUITE.len() as u64));
            let flag = random_coarse_flag(&mut flag_rng, hs_flag(t, cfg.order.clone())?.basis().clone())?;
            let mut out = if SUITE[index] == "lemma_22" {
                check_lemma_22(t, &flag, cfg.lemma22_trials, stream, cfg)?
            } else {
                check_lemma_einv_htexp(t, &flag, h, cfg)?
            };
            out.note(&format!("coarse Schur flag with cuts {:?}", flag.cuts()));
            Ok(out)
        }
        other => unreachable!("unknown check {other}"),
    }
}

/// Runs every check in [`SUITE`] order.
///
/// Checks run concurrently, each with its own RNG stream derived from
/// `seed`, so the report does not depend on scheduling. Precondition
/// failures are recorded as skipped; any other error is recorded as a
/// failed check.
pub fn run_suite(t: &Matrix, h: &HoloFunction, cfg: &Config, seed: u64) -> VerificationReport {
    let results: Vec<(CheckResult, f64)> = (0..SUITE.len())
        .into_par_iter()
        .map(|i| {
            let start = Instant::now();
            let result = match run_check(i, t, h, cfg, seed) {
                Ok(mut c) => {
                    c.name = SUITE[i].to_string();
                    c
                }
                Err(e) if is_precondition(&e) => CheckResult::skipped(SUITE[i], e.to_string()),
                Err(e) => CheckResult::errored(SUITE[i], e.to_string()).with_replay(&[("T", t)]),
            };
            (result, start.elapsed().as_secs_f64() * 1e3)
        })
        .collect();
    let timings = results.iter().map(|(c, ms)| (c.name.clone(), *ms)).collect();
    VerificationReport {
        fingerprint: Fingerprint::of(t),
        function: h.source().to_string(),
        seed,
        config: cfg.clone(),
        checks: results.into_iter().map(|(c, _)| c).collect(),
        timings_ms: Some(timings),
    }
}

/// Per-check pass counts over many reports, keyed by check name.
pub fn tally<'a>(reports: impl IntoIterator<Item = &'a VerificationReport>) -> BTreeMap<String, [usize; 3]> {
    let mut out = BTreeMap::new();
    for report in reports {
        for c in &report.checks {
            let slot: &mut [usize; 3] = out.entry(c.name.clone()).or_default();
            slot[c.status() as usize] += 1;
        }
    }
    out
}

#[cfg(test)]
mod tests;
