//! Randomized soundness campaign: every applicable certificate is checked against the oracle.
//!
//! Each trial draws its instance and its Monte Carlo seed from a ChaCha8 stream keyed by
//! `(seed, trial)`, so trials can run in any order and on any number of threads. Both vectors of a
//! trial share the sample seed (common random numbers). A check is flagged when the Monte Carlo
//! estimate of `β(x, a)` exceeds that of `β(x, b)` by more than both error bounds; a flag counts as a
//! violation only if inversion confirms it.

use std::collections::BTreeMap;
use std::io::Write;

use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::full_report;
use crate::certificates::{Region, Rule};
use crate::error::{Error, Result};
use crate::model::ComparisonInstance;
use crate::oracle::{beta_cdf_inversion, EmpiricalCdf};

const LOG_LO: f64 = -std::f64::consts::LN_10;
const LOG_HI: f64 = std::f64::consts::LN_10;
const POINTS_PER_REGION: usize = 10;

#[derive(Debug, Clone)]
pub struct VerifyConfig {
    pub trials: usize,
    pub n_min: usize,
    pub n_max: usize,
    pub seed: u64,
    pub samples: u64,
    pub sigmas: f64,
    pub confirm_tol: f64,
    /// Replaces the random draw in every trial.
    pub fixture: Option<ComparisonInstance>,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct RuleTally {
    /// Applicable certificates seen.
    pub certificates: usize,
    pub checks: usize,
    pub passed: usize,
    /// Monte Carlo disagreements that inversion did not confirm.
    pub unconfirmed: usize,
    pub violations: usize,
}

impl RuleTally {
    fn add(&mut self, o: &RuleTally) {
        self.certificates += o.certificates;
        self.checks += o.checks;
        self.passed += o.passed;
        self.unconfirmed += o.unconfirmed;
        self.violations += o.violations;
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Violation {
    pub trial: usize,
    pub rule: Rule,
    pub x: f64,
    pub a: Vec<f64>,
    pub b: Vec<f64>,
    pub beta_a: f64,
    pub beta_b: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerifySummary {
    pub trials: usize,
    pub n_min: usize,
    pub n_max: usize,
    pub seed: u64,
    pub samples: u64,
    pub sigmas: f64,
    pub per_rule: BTreeMap<Rule, RuleTally>,
    /// Trials whose report could not be built.
    pub errors: Vec<String>,
    pub violations_found: Vec<Violation>,
}

impl VerifySummary {
    pub fn violations(&self) -> usize {
        self.violations_found.len() + self.errors.len()
    }

    pub fn render(&self, out: &mut dyn Write) -> std::io::Result<()> {
        writeln!(
            out,
            "trials {}  n {}..={}  seed {}  samples {}  sigmas {}",
            self.trials, self.n_min, self.n_max, self.seed, self.samples, self.sigmas
        )?;
        writeln!(
            out,
            "{:<18} {:>6} {:>7} {:>7} {:>11} {:>10}",
            "rule", "certs", "checks", "passed", "unconfirmed", "violations"
        )?;
        for (rule, t) in &self.per_rule {
            writeln!(
                out,
                "{:<18} {:>6} {:>7} {:>7} {:>11} {:>10}",
                rule.name(),
                t.certificates,
                t.checks,
                t.passed,
                t.unconfirmed,
                t.violations
            )?;
        }
        for e in &self.errors {
            writeln!(out, "error: {e}")?;
        }
        for v in &self.violations_found {
            writeln!(
                out,
                "VIOLATION trial {} {} x = {}: β(x, a) = {:.9} > β(x, b) = {:.9}  a = {:?} b = {:?}",
                v.trial, v.rule, v.x, v.beta_a, v.beta_b, v.a, v.b
            )?;
        }
        writeln!(out, "violations: {}", self.violations())
    }
}

/// Ten check points inside `region`; empty when the region has no positive `x`.
pub fn sample_points(region: Region, sum_b: f64) -> Vec<f64> {
    let logspace = |lo: f64, hi: f64| -> Vec<f64> {
        let (l, h) = (lo.ln(), hi.ln());
        (0..POINTS_PER_REGION)
            .map(|j| (l + (h - l) * j as f64 / (POINTS_PER_REGION - 1) as f64).exp())
            .collect()
    };
    match region {
        Region::AllX => logspace(0.1 * sum_b, 10.0 * sum_b),
        Region::AtMost(t) if t > 0.0 => (1..=POINTS_PER_REGION)
            .map(|j| t * j as f64 / POINTS_PER_REGION as f64)
            .collect(),
        Region::AtMost(_) => Vec::new(),
        Region::AtLeast(t) if t > 0.0 => logspace(t, 10.0 * t),
        Region::AtLeast(_) => logspace(0.1 * sum_b, 10.0 * sum_b),
    }
}

fn trial_rng(seed: u64, trial: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(trial as u64);
    rng
}

fn draw_instance(rng: &mut ChaCha8Rng, n_min: usize, n_max: usize) -> Result<ComparisonInstance> {
    let n = rng.random_range(n_min..=n_max);
    let mut v = || -> Vec<f64> { (0..n).map(|_| rng.random_range(LOG_LO..LOG_HI).exp()).collect() };
    let a = v();
    let b = v();
    ComparisonInstance::new(&a, &b)
}

struct TrialOutcome {
    per_rule: BTreeMap<Rule, RuleTally>,
    error: Option<String>,
    violations: Vec<Violation>,
}

fn run_trial(cfg: &VerifyConfig, trial: usize) -> Result<TrialOutcome> {
    let mut rng = trial_rng(cfg.seed, trial);
    let inst = match &cfg.fixture {
        Some(f) => f.clone(),
        None => draw_instance(&mut rng, cfg.n_min, cfg.n_max)?,
    };
    let mc_seed = rng.next_u64();
    let mut outcome = TrialOutcome {
        per_rule: BTreeMap::new(),
        error: None,
        violations: Vec::new(),
    };
    let report = match full_report(&inst, None) {
        Ok(r) => r,
        Err(e) => {
            outcome.error = Some(format!("trial {trial}: {e}"));
            return Ok(outcome);
        }
    };
    let emp_a = EmpiricalCdf::draw(inst.a(), cfg.samples, mc_seed)?;
    let emp_b = EmpiricalCdf::draw(inst.b(), cfg.samples, mc_seed)?;
    let sum_b = inst.b().sum();
    for cert in report.applicable() {
        let Some(region) = cert.region else { continue };
        let tally = outcome.per_rule.entry(cert.rule).or_default();
        tally.certificates += 1;
        for x in sample_points(region, sum_b) {
            tally.checks += 1;
            let ea = emp_a.estimate_sigmas(x, cfg.sigmas);
            let eb = emp_b.estimate_sigmas(x, cfg.sigmas);
            if ea.lower() <= eb.upper() {
                tally.passed += 1;
                continue;
            }
            let ia = beta_cdf_inversion(inst.a(), x, cfg.confirm_tol)?;
            let ib = beta_cdf_inversion(inst.b(), x, cfg.confirm_tol)?;
            if ia.lower() > ib.upper() {
                tally.violations += 1;
                outcome.violations.push(Violation {
                    trial,
                    rule: cert.rule,
                    x,
                    a: inst.a().weights().to_vec(),
                    b: inst.b().weights().to_vec(),
                    beta_a: ia.value,
                    beta_b: ib.value,
                });
            } else {
                tally.unconfirmed += 1;
            }
        }
    }
    Ok(outcome)
}

/// Runs the campaign; the summary depends only on `cfg`.
pub fn run_verify(cfg: &VerifyConfig) -> Result<VerifySummary> {
    if cfg.fixture.is_none() && !(1 <= cfg.n_min && cfg.n_min <= cfg.n_max) {
        return Err(Error::InvalidArgument(format!(
            "need 1 ≤ n-min ≤ n (got {}..={})",
            cfg.n_min, cfg.n_max
        )));
    }
    if !(cfg.sigmas > 0.0) {
        return Err(Error::InvalidArgument("sigmas must be positive".into()));
    }
    let outcomes: Vec<TrialOutcome> = (0..cfg.trials)
        .into_par_iter()
        .map(|t| run_trial(cfg, t))
        .collect::<Result<_>>()?;
    let mut per_rule = BTreeMap::new();
    let mut errors = Vec::new();
    let mut violations_found = Vec::new();
    for o in outcomes {
        for (rule, t) in &o.per_rule {
            per_rule.entry(*rule).or_insert_with(RuleTally::default).add(t);
        }
        errors.extend(o.error);
        violations_found.extend(o.violations);
    }
    Ok(VerifySummary {
        trials: cfg.trials,
        n_min: cfg.n_min,
        n_max: cfg.n_max,
        seed: cfg.seed,
        samples: cfg.samples,
        sigmas: cfg.sigmas,
        per_rule,
        errors,
        violations_found,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cfg(trials: usize, fixture: Option<ComparisonInstance>) -> VerifyConfig {
        VerifyConfig {
            trials,
            n_min: 2,
            n_max: 4,
            seed: 3,
            samples: 20_000,
            sigmas: 4.0,
            confirm_tol: 1e-9,
            fixture,
        }
    }

    #[test]
    fn region_sampling() {
        let p = sample_points(Region::AllX, 2.0);
        assert_eq!(p.len(), 10);
        assert!((p[0] - 0.2).abs() < 1e-12 && (p[9] - 20.0).abs() < 1e-12);
        assert_eq!(sample_points(Region::AtMost(1.0), 5.0)[9], 1.0);
        assert!(sample_points(Region::AtMost(-1.0), 5.0).is_empty());
        let p = sample_points(Region::AtLeast(3.0), 1.0);
        assert!((p[0] - 3.0).abs() < 1e-12 && (p[9] - 30.0).abs() < 1e-9);
    }

    #[test]
    fn equal_vectors_pass() {
        let s = run_verify(&cfg(1, Some(ComparisonInstance::new(&[1.0, 2.0], &[2.0, 1.0]).unwrap()))).unwrap();
        assert_eq!(s.violations(), 0);
        assert!(s.per_rule.values().all(|t| t.passed == t.checks));
    }

    #[test]
    fn first_example_rules_all_pass() {
        let s = run_verify(&cfg(1, Some(ComparisonInstance::new(&[4.0, 1.0], &[1.0, 1.0]).unwrap()))).unwrap();
        assert_eq!(s.violations(), 0);
        for rule in [Rule::Lemma1PairSwap, Rule::Cor1, Rule::Prop1, Rule::Thm1] {
            let t = s.per_rule[&rule];
            assert_eq!((t.certificates, t.checks, t.passed), (1, 10, 10), "{rule}");
        }
    }

    #[test]
    fn trials_are_order_independent() {
        let c = cfg(6, None);
        let whole = run_verify(&c).unwrap();
        let serial = rayon::ThreadPoolBuilder::new()
            .num_threads(1)
            .build()
            .unwrap()
            .install(|| run_verify(&c).unwrap());
        assert_eq!(whole, serial);
        assert_eq!(whole.violations(), 0);
    }
}
