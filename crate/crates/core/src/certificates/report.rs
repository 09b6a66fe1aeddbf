use serde::{Deserialize, Serialize};

use super::rules::{
    bakirov, corollary1, corollary2, dominance, necessary_max, necessity_refutes_at,
    pair_swap_applicable,
    partition_certificate, prop1, theorem1, theorem2,
};
use super::{Certificate, Region, Rule, Witness};
use crate::error::{Error, Result};
use crate::model::ComparisonInstance;
use crate::oracle::CdfEstimate;

/// Pair swaps are tried over all index pairs only up to this length.
pub const PAIR_SWAP_MAX_N: usize = 12;

/// Closed interval `[lo, hi]` of `x`; `hi = None` means unbounded.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Interval {
    pub lo: f64,
    pub hi: Option<f64>,
}

impl Interval {
    pub fn contains(&self, x: f64) -> bool {
        x >= self.lo && self.hi.is_none_or(|h| x <= h)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum HoldsAtX {
    Certified,
    Unknown,
    /// The necessity comparison shows `β(x, a) > β(x, b)` at this `x`, so no all-x ordering exists.
    ImpossibleAllX,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CertificateReport {
    pub a: Vec<f64>,
    pub b: Vec<f64>,
    pub a_canonical: Vec<f64>,
    pub b_canonical: Vec<f64>,
    pub certificates: Vec<Certificate>,
    pub necessary_max: bool,
    pub region_union: Vec<Interval>,
    pub x_query: Option<f64>,
    pub holds_at_x: Option<HoldsAtX>,
    pub oracle_spotcheck: Option<[CdfEstimate; 2]>,
    pub notes: Vec<String>,
}

/// Sorted, disjoint union of the applicable regions.
pub fn union_of(regions: impl IntoIterator<Item = Region>) -> Vec<Interval> {
    let mut iv: Vec<Interval> = regions.into_iter().map(|r| r.interval()).collect();
    iv.sort_by(|p, q| p.lo.total_cmp(&q.lo));
    let mut out: Vec<Interval> = Vec::new();
    for next in iv {
        if let Some(last) = out.last_mut() {
            match last.hi {
                None => continue,
                Some(h) if next.lo <= h => {
                    last.hi = match next.hi {
                        None => None,
                        Some(nh) => Some(h.max(nh)),
                    };
                    continue;
                }
                _ => {}
            }
        }
        out.push(next);
    }
    out
}

impl CertificateReport {
    /// Assembles a report from already evaluated certificates.
    ///
    /// Fails with [`Error::InternalInconsistency`] if an applicable all-x certificate coexists with
    /// `max a < max b`.
    pub fn from_certificates(
        inst: &ComparisonInstance,
        certificates: Vec<Certificate>,
        x: Option<f64>,
        notes: Vec<String>,
    ) -> Result<Self> {
        let possible = necessary_max(inst);
        if !possible {
            if let Some(c) = certificates
                .iter()
                .find(|c| c.applicable && c.region == Some(Region::AllX))
            {
                return Err(Error::InternalInconsistency(format!(
                    "{} certifies all x although max a < max b",
                    c.rule
                )));
            }
        }
        let region_union = union_of(certificates.iter().filter(|c| c.applicable).filter_map(|c| c.region));
        let holds_at_x = match x {
            None => None,
            Some(x) => {
                let certified = region_union.iter().any(|iv| iv.contains(x));
                let refuted = necessity_refutes_at(inst, x);
                Some(match (certified, refuted) {
                    (true, true) => {
                        return Err(Error::InternalInconsistency(format!(
                            "x = {x} is both certified and refuted"
                        )))
                    }
                    (true, false) => HoldsAtX::Certified,
                    (false, true) => HoldsAtX::ImpossibleAllX,
                    (false, false) => HoldsAtX::Unknown,
                })
            }
        };
        Ok(Self {
            a: inst.a().original(),
            b: inst.b().original(),
            a_canonical: inst.a().weights().to_vec(),
            b_canonical: inst.b().weights().to_vec(),
            certificates,
            necessary_max: possible,
            region_union,
            x_query: x,
            holds_at_x,
            oracle_spotcheck: None,
            notes,
        })
    }

    pub fn applicable(&self) -> impl Iterator<Item = &Certificate> {
        self.certificates.iter().filter(|c| c.applicable)
    }

    /// The ordering is certified for every `x ≥ 0`.
    pub fn all_x(&self) -> bool {
        self.region_union.first().is_some_and(|iv| iv.lo <= 0.0 && iv.hi.is_none())
    }

    pub fn certified_at(&self, x: f64) -> bool {
        self.region_union.iter().any(|iv| iv.contains(x))
    }

    /// The first applicable certificate (in report order) whose region contains `x`.
    pub fn best_rule_at(&self, x: f64) -> Option<Rule> {
        self.applicable()
            .find(|c| c.region.is_some_and(|r| r.contains(x)))
            .map(|c| c.rule)
    }
}

fn settle(rule: Rule, r: Result<Certificate>) -> Result<Certificate> {
    match r {
        Ok(c) => Ok(c),
        Err(Error::NotApplicable(m)) => Ok(Certificate::fails(rule, Witness::None, m)),
        Err(e) => Err(e),
    }
}

/// Runs every rule on the instance.
pub fn certify_all(inst: &ComparisonInstance, x: Option<f64>) -> Result<CertificateReport> {
    let n = inst.n();
    let mut notes = Vec::new();
    let mut certs = vec![bakirov(inst), dominance(inst)];

    if n < 2 {
        certs.push(Certificate::fails(Rule::Lemma1PairSwap, Witness::None, "needs n ≥ 2"));
    } else if n <= PAIR_SWAP_MAX_N {
        let mut found = None;
        'outer: for i in 0..n {
            for j in i + 1..n {
                let c = pair_swap_applicable(inst, i, j)?;
                if c.applicable {
                    found = Some(c);
                    break 'outer;
                }
            }
        }
        certs.push(found.unwrap_or_else(|| {
            Certificate::fails(Rule::Lemma1PairSwap, Witness::None, "no index pair qualifies")
        }));
    } else {
        notes.push(format!("pair swaps skipped for n = {n} > {PAIR_SWAP_MAX_N}"));
    }
    certs.push(partition_certificate(inst, None)?);

    if inst.is_strictly_positive() {
        certs.push(settle(Rule::Prop1, prop1(inst, None, None))?);
        certs.push(settle(Rule::Thm1, theorem1(inst))?);
        certs.push(corollary1(inst)?);
        certs.push(corollary2(inst)?);
        certs.push(settle(Rule::Thm2, theorem2(inst))?);
    } else {
        notes.push("zero weights present: rules based on f are skipped".into());
    }
    CertificateReport::from_certificates(inst, certs, x, notes)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn report(a: &[f64], b: &[f64], x: Option<f64>) -> CertificateReport {
        certify_all(&ComparisonInstance::new(a, b).unwrap(), x).unwrap()
    }

    #[test]
    fn first_example_certified_everywhere() {
        let r = report(&[4.0, 1.0], &[1.0, 1.0], Some(10.0));
        assert_eq!(r.holds_at_x, Some(HoldsAtX::Certified));
        assert!(r.all_x());
        let rules: Vec<Rule> = r.applicable().map(|c| c.rule).collect();
        assert!(rules.contains(&Rule::Lemma1PairSwap));
        assert!(rules.contains(&Rule::Cor1));
    }

    #[test]
    fn second_example_regions() {
        let r = report(&[1.0, 1.0, 1.0], &[1.2, 0.5, 0.4], Some(1.0));
        assert_eq!(r.holds_at_x, Some(HoldsAtX::Certified));
        assert_eq!(r.best_rule_at(1.0), Some(Rule::Thm2));
        assert_eq!(r.region_union.len(), 1);
        assert!((r.region_union[0].hi.unwrap() - 1.203_973).abs() < 1e-6);
        let r = report(&[1.0, 1.0, 1.0], &[1.2, 0.5, 0.4], Some(2.0));
        assert_eq!(r.holds_at_x, Some(HoldsAtX::Unknown));
    }

    #[test]
    fn impossible_when_max_is_smaller() {
        let r = report(&[0.5, 0.5], &[1.0, 0.0001], Some(5.0));
        assert!(!r.necessary_max);
        assert_eq!(r.holds_at_x, Some(HoldsAtX::ImpossibleAllX));
        let r = report(&[0.5, 0.5], &[1.0, 0.0001], Some(0.5));
        assert_eq!(r.holds_at_x, Some(HoldsAtX::Unknown));
    }

    #[test]
    fn union_merges_overlaps() {
        let u = union_of([Region::AtMost(1.0), Region::AtLeast(3.0), Region::AtMost(2.0)]);
        assert_eq!(
            u,
            vec![
                Interval { lo: 0.0, hi: Some(2.0) },
                Interval { lo: 3.0, hi: None }
            ]
        );
        let u = union_of([Region::AtMost(4.0), Region::AtLeast(3.0)]);
        assert_eq!(u, vec![Interval { lo: 0.0, hi: None }]);
        assert!(union_of([]).is_empty());
    }

    #[test]
    fn guard_rejects_all_x_against_necessity() {
        let inst = ComparisonInstance::new(&[0.5, 0.5], &[1.0, 0.5]).unwrap();
        let bogus = Certificate::holds(Rule::Lemma1Dominance, Region::AllX, Witness::None);
        assert!(matches!(
            CertificateReport::from_certificates(&inst, vec![bogus], None, vec![]),
            Err(Error::InternalInconsistency(_))
        ));
    }
}
