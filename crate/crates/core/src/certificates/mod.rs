//! Sufficient and necessary conditions for `β(x, a) ≤ β(x, b)`.
//!
//! Every rule is a pure function of a [`ComparisonInstance`] and returns a [`Certificate`] whose
//! [`Witness`] carries enough numbers to recompute the validity region
//! ([`Certificate::region_from_witness`]).
//!
//! [`ComparisonInstance`]: crate::model::ComparisonInstance

mod levels;
mod report;
mod rules;

use serde::{Deserialize, Serialize};

pub use levels::{
    d_root, d_roots, d_start_index, jensen_bounds, t_root, t_roots, t_start_index, JensenBounds,
    RootResult, LEVEL_RTOL,
};
pub(crate) use levels::{d_level, first_argmax, log_sum, t_level};
pub use report::{certify_all, union_of, CertificateReport, HoldsAtX, Interval, PAIR_SWAP_MAX_N};
pub use rules::{
    bakirov, corollary1, corollary2, dominance, k1_index, k2_index, n1_index, necessary_max,
    necessity_refutes_at, pair_swap_applicable, partition_certificate, prop1, theorem1, theorem2, K_SCAN_TOL,
    PARTITION_EXHAUSTIVE_MAX_N,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Rule {
    Bakirov,
    Lemma1Dominance,
    Lemma1PairSwap,
    Lemma1Partition,
    Prop1,
    Thm1,
    Cor1,
    Cor2,
    Thm2,
}

impl Rule {
    pub const ALL: [Rule; 9] = [
        Rule::Bakirov,
        Rule::Lemma1Dominance,
        Rule::Lemma1PairSwap,
        Rule::Lemma1Partition,
        Rule::Prop1,
        Rule::Thm1,
        Rule::Cor1,
        Rule::Cor2,
        Rule::Thm2,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Rule::Bakirov => "bakirov",
            Rule::Lemma1Dominance => "lemma1_dominance",
            Rule::Lemma1PairSwap => "lemma1_pair_swap",
            Rule::Lemma1Partition => "lemma1_partition",
            Rule::Prop1 => "prop1",
            Rule::Thm1 => "thm1",
            Rule::Cor1 => "cor1",
            Rule::Cor2 => "cor2",
            Rule::Thm2 => "thm2",
        }
    }
}

impl std::fmt::Display for Rule {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

/// Set of `x ≥ 0` on which a certificate asserts the ordering.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "x_star", rename_all = "snake_case")]
pub enum Region {
    AllX,
    AtMost(f64),
    AtLeast(f64),
}

impl Region {
    pub fn contains(&self, x: f64) -> bool {
        match *self {
            Region::AllX => true,
            Region::AtMost(t) => x <= t,
            Region::AtLeast(t) => x >= t,
        }
    }

    pub fn interval(&self) -> Interval {
        match *self {
            Region::AllX => Interval { lo: 0.0, hi: None },
            Region::AtMost(t) => Interval { lo: 0.0, hi: Some(t) },
            Region::AtLeast(t) => Interval { lo: t, hi: None },
        }
    }
}

/// Which of the two sides fired in [`corollary1`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Side {
    A,
    B,
}

/// Rule-specific numbers from which the region is recomputed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum Witness {
    None,
    Bakirov {
        sum_b: f64,
        /// Smallest `Σ_{i≤k} (aᵢ − bᵢ)` over `k`.
        min_partial_margin: f64,
    },
    Dominance {
        /// Smallest `aᵢ − bᵢ`.
        min_margin: f64,
    },
    PairSwap {
        i: usize,
        j: usize,
    },
    Partition {
        blocks: Vec<Vec<usize>>,
        geometric_means: Vec<f64>,
    },
    Prop1 {
        c: Vec<f64>,
        d: Vec<f64>,
        two_ln_d: f64,
        max_f: f64,
        argmax: usize,
    },
    Thm1 {
        two_ln_d: f64,
        /// Literal scan indices `min{k: f(k) ≥ T(k)}` and `min{k: f(k) ≥ D(k)}`.
        k1: usize,
        k2: usize,
        t_k1: f64,
        d_k2: f64,
        /// Start of the flat suffix in the balancing limits (first argmax of `T(k)`, `D(k)`).
        t_start: usize,
        d_start: usize,
        t_max: f64,
        d_max: f64,
    },
    Cor1 {
        side: Side,
        two_ln_d: f64,
        f1: f64,
        /// `2 ln D + Σ ln(1 − f(1) bᵢ)` for side A, `2 ln D − Σ ln(1 + f(1) aᵢ)` for side B.
        condition: f64,
        level: f64,
        level_max: f64,
    },
    Cor2 {
        two_ln_d: f64,
        f1: f64,
        sum_b: f64,
    },
    Thm2 {
        n1: usize,
        d: f64,
        /// `None` on the all-x branch (`n₁` is the first index).
        g: Option<f64>,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Certificate {
    pub rule: Rule,
    pub applicable: bool,
    pub region: Option<Region>,
    pub witness: Witness,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
}

impl Certificate {
    /// An applicable certificate. The stored region is the one recomputed from the witness, so
    /// that a serialized report reproduces it bit for bit.
    pub(crate) fn holds(rule: Rule, region: Region, witness: Witness) -> Self {
        let mut c = Self {
            rule,
            applicable: true,
            region: Some(region),
            witness,
            note: None,
        };
        if let Some(derived) = c.region_from_witness() {
            debug_assert!(same_region(derived, region), "{rule}: {derived:?} vs {region:?}");
            c.region = Some(derived);
        }
        c
    }

    pub(crate) fn fails(rule: Rule, witness: Witness, note: impl Into<String>) -> Self {
        Self {
            rule,
            applicable: false,
            region: None,
            witness,
            note: Some(note.into()),
        }
    }

    pub(crate) fn with_note(mut self, note: impl Into<String>) -> Self {
        self.note = Some(note.into());
        self
    }

    /// Recomputes the region from the witness alone; `None` when not applicable.
    pub fn region_from_witness(&self) -> Option<Region> {
        if !self.applicable {
            return None;
        }
        Some(match &self.witness {
            Witness::None => return None,
            Witness::Bakirov { sum_b, .. } => Region::AtLeast(2.0 * sum_b),
            Witness::Dominance { .. }
            | Witness::PairSwap { .. }
            | Witness::Partition { .. }
            | Witness::Cor1 { .. } => Region::AllX,
            Witness::Prop1 {
                two_ln_d, max_f, ..
            } => Region::AtMost(two_ln_d / max_f),
            Witness::Thm1 {
                two_ln_d,
                t_max,
                d_max,
                ..
            } => Region::AtMost(two_ln_d / t_max.min(*d_max)),
            Witness::Cor2 { sum_b, .. } => Region::AtMost(*sum_b),
            Witness::Thm2 { g: None, .. } => Region::AllX,
            Witness::Thm2 { g: Some(g), .. } => Region::AtMost(*g),
        })
    }
}

fn same_region(p: Region, q: Region) -> bool {
    let close = |x: f64, y: f64| (x - y).abs() <= 1e-12 * x.abs().max(y.abs());
    match (p, q) {
        (Region::AllX, Region::AllX) => true,
        (Region::AtMost(x), Region::AtMost(y)) | (Region::AtLeast(x), Region::AtLeast(y)) => close(x, y),
        _ => false,
    }
}
