use super::levels::{d_roots, first_argmax, log_sum, t_roots, LEVEL_RTOL};
use super::{Certificate, Region, Rule, Side, Witness};
use crate::error::{Error, Result};
use crate::model::{ComparisonInstance, IDENTITY_RTOL};
use statrs::function::erf::erfc;
use statrs::function::gamma::gamma_ur;

/// Slack in the `f(k) ≥ T(k)` scans; equality holds exactly at the last index.
pub const K_SCAN_TOL: f64 = 1e-10;
/// Largest `n` for which the partition search falls back to enumerating all set partitions.
pub const PARTITION_EXHAUSTIVE_MAX_N: usize = 10;
/// Relative margin demanded of the tail comparison in [`necessity_refutes_at`].
const REFUTE_RTOL: f64 = 1e-9;

/// Partial sums of `a` dominate those of `b`; valid for `x ≥ 2 Σ bᵢ`.
pub fn bakirov(inst: &ComparisonInstance) -> Certificate {
    let (a, b) = (inst.a().weights(), inst.b().weights());
    let mut margin = 0.0;
    let mut min_margin = f64::INFINITY;
    for (&ai, &bi) in a.iter().zip(b) {
        margin += ai - bi;
        min_margin = min_margin.min(margin);
    }
    let sum_b = inst.b().sum();
    let witness = Witness::Bakirov {
        sum_b,
        min_partial_margin: min_margin,
    };
    // Compare the partial sums themselves to avoid cancellation in the running margin.
    let mut sa = 0.0;
    let mut sb = 0.0;
    let ok = a.iter().zip(b).all(|(&ai, &bi)| {
        sa += ai;
        sb += bi;
        sa >= sb
    });
    if ok {
        Certificate::holds(Rule::Bakirov, Region::AtLeast(2.0 * sum_b), witness)
    } else {
        Certificate::fails(Rule::Bakirov, witness, "a partial sum of a is below that of b")
    }
}

/// `a ≥ b` componentwise.
pub fn dominance(inst: &ComparisonInstance) -> Certificate {
    let (a, b) = (inst.a().weights(), inst.b().weights());
    let min_margin = a
        .iter()
        .zip(b)
        .map(|(&ai, &bi)| ai - bi)
        .fold(f64::INFINITY, f64::min);
    let witness = Witness::Dominance { min_margin };
    if a.iter().zip(b).all(|(ai, bi)| ai >= bi) {
        Certificate::holds(Rule::Lemma1Dominance, Region::AllX, witness)
    } else {
        Certificate::fails(Rule::Lemma1Dominance, witness, "some aᵢ < bᵢ")
    }
}

/// Two coordinates with `max aᵢ,aⱼ ≥ max bᵢ,bⱼ` and `aᵢaⱼ ≥ bᵢbⱼ`, dominance elsewhere.
pub fn pair_swap_applicable(inst: &ComparisonInstance, i: usize, j: usize) -> Result<Certificate> {
    inst.check_index(i)?;
    inst.check_index(j)?;
    if i == j {
        return Err(Error::InvalidArgument(format!(
            "pair indices must differ (got {i} twice)"
        )));
    }
    let (a, b) = (inst.a().weights(), inst.b().weights());
    let witness = Witness::PairSwap { i, j };
    if a[i].max(a[j]) < b[i].max(b[j]) {
        return Ok(Certificate::fails(Rule::Lemma1PairSwap, witness, "max test fails"));
    }
    if a[i] * a[j] < b[i] * b[j] {
        return Ok(Certificate::fails(Rule::Lemma1PairSwap, witness, "product test fails"));
    }
    if let Some(k) = (0..a.len()).find(|&k| k != i && k != j && a[k] < b[k]) {
        return Ok(Certificate::fails(
            Rule::Lemma1PairSwap,
            witness,
            format!("a < b at index {k} outside the pair"),
        ));
    }
    Ok(Certificate::holds(Rule::Lemma1PairSwap, Region::AllX, witness))
}

fn geometric_mean(a: &[f64], block: &[usize]) -> f64 {
    let s: f64 = block.iter().map(|&i| a[i].ln()).sum();
    (s / block.len() as f64).exp()
}

fn block_ok(a: &[f64], b: &[f64], block: &[usize]) -> bool {
    let g = geometric_mean(a, block);
    block.iter().all(|&i| b[i] <= g * (1.0 + IDENTITY_RTOL))
}

fn validate_partition(n: usize, blocks: &[Vec<usize>]) -> Result<()> {
    let mut seen = vec![false; n];
    for block in blocks {
        if block.is_empty() {
            return Err(Error::InvalidPartition("empty block".into()));
        }
        for &i in block {
            if i >= n {
                return Err(Error::InvalidPartition(format!("index {i} out of range for n = {n}")));
            }
            if seen[i] {
                return Err(Error::InvalidPartition(format!("index {i} appears twice")));
            }
            seen[i] = true;
        }
    }
    if let Some(i) = seen.iter().position(|s| !s) {
        return Err(Error::InvalidPartition(format!("index {i} is not covered")));
    }
    Ok(())
}

/// A feasible split of the canonical positions into consecutive blocks, if any.
fn contiguous_search(a: &[f64], b: &[f64]) -> Option<Vec<Vec<usize>>> {
    let n = a.len();
    // back[j] = start of the last block of a feasible split of 0..j.
    let mut back: Vec<Option<usize>> = vec![None; n + 1];
    back[0] = Some(0);
    for j in 1..=n {
        for i in (0..j).rev() {
            if back[i].is_some() && block_ok(a, b, &(i..j).collect::<Vec<_>>()) {
                back[j] = Some(i);
                break;
            }
        }
    }
    back[n]?;
    let mut blocks = Vec::new();
    let mut j = n;
    while j > 0 {
        let i = back[j].expect("reachable");
        blocks.push((i..j).collect());
        j = i;
    }
    blocks.reverse();
    Some(blocks)
}

/// Enumerates set partitions via restricted growth strings.
fn exhaustive_search(a: &[f64], b: &[f64]) -> Option<Vec<Vec<usize>>> {
    let n = a.len();
    let mut label = vec![0usize; n];
    loop {
        let count = label.iter().max().map_or(0, |m| m + 1);
        let mut blocks = vec![Vec::new(); count];
        for (i, &l) in label.iter().enumerate() {
            blocks[l].push(i);
        }
        if blocks.iter().all(|blk| block_ok(a, b, blk)) {
            return Some(blocks);
        }
        // Next restricted growth string: label[i] ≤ 1 + max(label[..i]).
        let mut i = n;
        loop {
            if i <= 1 {
                return None;
            }
            i -= 1;
            let prefix_max = label[..i].iter().copied().max().unwrap_or(0);
            if label[i] <= prefix_max {
                label[i] += 1;
                for l in &mut label[i + 1..] {
                    *l = 0;
                }
                break;
            }
        }
    }
}

/// Blocks whose geometric mean of `a` covers every `bᵢ` in the block.
///
/// With `partition = None` a search is run: consecutive blocks first, then every set partition
/// when `n ≤ PARTITION_EXHAUSTIVE_MAX_N`.
pub fn partition_certificate(
    inst: &ComparisonInstance,
    partition: Option<&[Vec<usize>]>,
) -> Result<Certificate> {
    let (a, b) = (inst.a().weights(), inst.b().weights());
    let n = inst.n();
    let found = match partition {
        Some(p) => {
            validate_partition(n, p)?;
            let p = p.to_vec();
            if p.iter().all(|blk| block_ok(a, b, blk)) {
                Some(p)
            } else {
                let means = p.iter().map(|blk| geometric_mean(a, blk)).collect();
                return Ok(Certificate::fails(
                    Rule::Lemma1Partition,
                    Witness::Partition {
                        blocks: p,
                        geometric_means: means,
                    },
                    "some bᵢ exceeds its block's geometric mean",
                ));
            }
        }
        None => contiguous_search(a, b).or_else(|| {
            if n <= PARTITION_EXHAUSTIVE_MAX_N {
                exhaustive_search(a, b)
            } else {
                None
            }
        }),
    };
    Ok(match found {
        Some(blocks) => {
            let means = blocks.iter().map(|blk| geometric_mean(a, blk)).collect();
            Certificate::holds(
                Rule::Lemma1Partition,
                Region::AllX,
                Witness::Partition {
                    blocks,
                    geometric_means: means,
                },
            )
        }
        None => Certificate::fails(Rule::Lemma1Partition, Witness::None, "no feasible partition found"),
    })
}

/// `x ≤ 2 ln D(c, d) / max f(·, c, d)` for auxiliary `c ≤ a`, `d ≥ b`.
///
/// `c` and `d` are aligned with the canonical order of `a` and `b` and default to them.
pub fn prop1(inst: &ComparisonInstance, c: Option<&[f64]>, d: Option<&[f64]>) -> Result<Certificate> {
    let (a, b) = (inst.a().weights(), inst.b().weights());
    let c = c.unwrap_or(a);
    let d = d.unwrap_or(b);
    for (name, v) in [("c", c), ("d", d)] {
        if v.len() != inst.n() {
            return Err(Error::InvalidAuxiliary(format!(
                "{name} has length {}, expected {}",
                v.len(),
                inst.n()
            )));
        }
        if let Some(i) = v.iter().position(|&x| !(x > 0.0 && x.is_finite())) {
            return Err(Error::InvalidAuxiliary(format!("{name}[{i}] must be positive")));
        }
    }
    if let Some(i) = (0..c.len()).find(|&i| c[i] > a[i]) {
        return Err(Error::InvalidAuxiliary(format!("c[{i}] = {} exceeds a[{i}] = {}", c[i], a[i])));
    }
    if let Some(i) = (0..d.len()).find(|&i| d[i] < b[i]) {
        return Err(Error::InvalidAuxiliary(format!("d[{i}] = {} is below b[{i}] = {}", d[i], b[i])));
    }

    let lr: Vec<f64> = c.iter().zip(d).map(|(&ci, &di)| (ci / di).ln()).collect();
    let two_ln_d = log_sum(&lr);
    if two_ln_d <= 0.0 {
        return Err(Error::NotApplicable(format!("2 ln D(c, d) = {two_ln_d} ≤ 0")));
    }
    let f: Vec<f64> = c.iter().zip(d).map(|(&ci, &di)| 1.0 / di - 1.0 / ci).collect();
    let argmax = first_argmax_exact(&f);
    let max_f = f[argmax];
    if max_f <= 0.0 {
        return Err(Error::NotApplicable(format!("max f(·, c, d) = {max_f} ≤ 0")));
    }
    Ok(Certificate::holds(
        Rule::Prop1,
        Region::AtMost(two_ln_d / max_f),
        Witness::Prop1 {
            c: c.to_vec(),
            d: d.to_vec(),
            two_ln_d,
            max_f,
            argmax,
        },
    ))
}

fn first_argmax_exact(v: &[f64]) -> usize {
    let m = v.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    v.iter().position(|&x| x == m).unwrap_or(0)
}

fn scan(f: &[f64], levels: &[f64]) -> usize {
    f.iter()
        .zip(levels)
        .position(|(&fk, &lk)| fk >= lk - K_SCAN_TOL)
        .unwrap_or(f.len() - 1)
}

/// `min{k : f(k) ≥ T(k)}`, zero-based.
///
/// This is the first local maximum of `k ↦ T(k)`, which need not be where the a-side balancing
/// limit becomes flat; [`theorem1`] records it but uses [`t_start_index`](super::t_start_index).
pub fn k1_index(inst: &ComparisonInstance) -> Result<usize> {
    let t: Vec<f64> = t_roots(inst)?.iter().map(|r| r.value).collect();
    Ok(scan(inst.f_values(), &t))
}

/// `min{k : f(k) ≥ D(k)}`, zero-based.
pub fn k2_index(inst: &ComparisonInstance) -> Result<usize> {
    let d: Vec<f64> = d_roots(inst)?.iter().map(|r| r.value).collect();
    Ok(scan(inst.f_values(), &d))
}

/// `x ≤ 2 ln D / min{T★, D★}` where `T★`, `D★` are the flat levels of the balancing limits,
/// i.e. the largest `T(k)` and `D(k)`.
pub fn theorem1(inst: &ComparisonInstance) -> Result<Certificate> {
    inst.require_positive()?;
    let two_ln_d = inst.two_ln_d();
    if two_ln_d <= 0.0 {
        return Err(Error::NotApplicable(format!("2 ln D = {two_ln_d} ≤ 0")));
    }
    let t: Vec<f64> = t_roots(inst)?.iter().map(|r| r.value).collect();
    let d: Vec<f64> = d_roots(inst)?.iter().map(|r| r.value).collect();
    let f = inst.f_values();
    let (k1, k2) = (scan(f, &t), scan(f, &d));
    let (t_start, d_start) = (first_argmax(&t), first_argmax(&d));
    let t_max = t.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let d_max = d.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let denom = t_max.min(d_max);
    if denom <= 0.0 {
        return Err(Error::NotApplicable(format!("min(T★, D★) = {denom} ≤ 0")));
    }
    let cert = Certificate::holds(
        Rule::Thm1,
        Region::AtMost(two_ln_d / denom),
        Witness::Thm1 {
            two_ln_d,
            k1,
            k2,
            t_k1: t[k1],
            d_k2: d[k2],
            t_start,
            d_start,
            t_max,
            d_max,
        },
    );
    Ok(if k1 != t_start || k2 != d_start {
        cert.with_note("scan index differs from the flat-suffix start; the larger level is used")
    } else {
        cert
    })
}

fn is_top(levels: &[f64], k: usize) -> bool {
    let m = levels.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    levels[k] >= m - LEVEL_RTOL * m.abs()
}

/// All-x ordering when balancing one side flattens every coordinate to a nonnegative level.
///
/// Requires `a₁ ≥ b₁`, `Σ ln(aᵢ/bᵢ) ≥ 0` and, for side A,
/// `Σ ln(aᵢ/bᵢ) + Σ ln(1 − f(1) bᵢ) ≤ 0` (side B: `Σ ln(aᵢ/bᵢ) − Σ ln(1 + f(1) aᵢ) ≤ 0`).
/// In addition `T(1)` (side B: `D(1)`) must be the largest of the suffix levels; without it the
/// balancing limit is not flat from the first index and the conclusion can fail.
pub fn corollary1(inst: &ComparisonInstance) -> Result<Certificate> {
    inst.require_positive()?;
    let (a, b) = (inst.a().weights(), inst.b().weights());
    let two_ln_d = inst.two_ln_d();
    let f1 = inst.f_values()[0];
    if a[0] < b[0] {
        return Ok(Certificate::fails(Rule::Cor1, Witness::None, "a₁ < b₁"));
    }
    if two_ln_d < 0.0 {
        return Ok(Certificate::fails(Rule::Cor1, Witness::None, "Σ ln(aᵢ/bᵢ) < 0"));
    }
    let cond_a = two_ln_d + b.iter().map(|&bi| (-f1 * bi).ln_1p()).sum::<f64>();
    let cond_b = two_ln_d - a.iter().map(|&ai| (f1 * ai).ln_1p()).sum::<f64>();

    let mut last = None;
    for (side, condition) in [(Side::A, cond_a), (Side::B, cond_b)] {
        if condition > 0.0 {
            continue;
        }
        let levels: Vec<f64> = match side {
            Side::A => t_roots(inst)?,
            Side::B => d_roots(inst)?,
        }
        .iter()
        .map(|r| r.value)
        .collect();
        let level_max = levels.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let witness = Witness::Cor1 {
            side,
            two_ln_d,
            f1,
            condition,
            level: levels[0],
            level_max,
        };
        if is_top(&levels, 0) {
            return Ok(Certificate::holds(Rule::Cor1, Region::AllX, witness));
        }
        last = Some(witness);
    }
    Ok(match last {
        Some(w) => Certificate::fails(
            Rule::Cor1,
            w,
            "first-index level is not the largest suffix level",
        ),
        None => Certificate::fails(Rule::Cor1, Witness::None, "neither side condition holds"),
    })
}

/// `x ≤ Σ bᵢ` when `f` peaks at the first index and `Π aᵢ ≥ Π bᵢ`.
pub fn corollary2(inst: &ComparisonInstance) -> Result<Certificate> {
    inst.require_positive()?;
    let two_ln_d = inst.two_ln_d();
    let f1 = inst.f_values()[0];
    let sum_b = inst.b().sum();
    let witness = Witness::Cor2 {
        two_ln_d,
        f1,
        sum_b,
    };
    if inst.argmax_first() != 0 {
        return Ok(Certificate::fails(Rule::Cor2, witness, "max f is not at the first index"));
    }
    if two_ln_d < 0.0 {
        return Ok(Certificate::fails(Rule::Cor2, witness, "Π aᵢ < Π bᵢ"));
    }
    Ok(Certificate::holds(Rule::Cor2, Region::AtMost(sum_b), witness))
}

/// Smallest zero-based `m` with `Σ_{i≤j} ln(aᵢ/bᵢ) ≥ 0` for every `j ≥ m`; `None` when the full
/// sum is negative.
pub fn n1_index(inst: &ComparisonInstance) -> Option<usize> {
    let p = inst.prefix_sums();
    let n = inst.n();
    if p[n] < 0.0 {
        return None;
    }
    let mut m = n - 1;
    while m > 0 && p[m] >= 0.0 {
        m -= 1;
    }
    Some(m)
}

/// For `f` nondecreasing: all-x ordering when `n₁` is the first index, otherwise `x ≤ G` with
/// `G = (Σ_{i<n₁} ln(aᵢ/bᵢ) + Σ_{i≥n₁} ln(1 + d aᵢ)) / d` and `d = f(n₁)`.
pub fn theorem2(inst: &ComparisonInstance) -> Result<Certificate> {
    inst.require_positive()?;
    if !inst.f_nondecreasing() {
        return Err(Error::NotApplicable("f is not nondecreasing under the sorted pairing".into()));
    }
    let n1 = n1_index(inst)
        .ok_or_else(|| Error::NotApplicable("n₁ undefined: Σ ln(aᵢ/bᵢ) < 0".into()))?;
    let d = inst.f_values()[n1];
    if n1 == 0 {
        let dom = super::dominance(inst);
        if !dom.applicable {
            return Err(Error::InternalInconsistency(
                "n₁ = 1 with nondecreasing f but a ≱ b".into(),
            ));
        }
        return Ok(Certificate::holds(
            Rule::Thm2,
            Region::AllX,
            Witness::Thm2 { n1, d, g: None },
        ));
    }
    if d <= 0.0 {
        return Err(Error::NotApplicable(format!("d = f(n₁) = {d} ≤ 0")));
    }
    let head = inst.prefix_sums()[n1];
    let tail: f64 = inst.a().weights()[n1..]
        .iter()
        .map(|&ai| (d * ai).ln_1p())
        .sum();
    let g = (head + tail) / d;
    if g <= 0.0 {
        return Err(Error::NotApplicable(format!("G = {g} ≤ 0")));
    }
    Ok(Certificate::holds(Rule::Thm2, Region::AtMost(g), Witness::Thm2 { n1, d, g: Some(g) }))
}

/// `max a ≥ max b`, necessary for the ordering to hold at every `x`.
pub fn necessary_max(inst: &ComparisonInstance) -> bool {
    inst.a().max() >= inst.b().max()
}

/// Whether `β(x, a) > β(x, b)` follows from the extreme forms `max a · χ²ₘ` (m positive weights
/// of `a`), whose upper tail dominates that of `a`, and `max b · χ²₁`, whose upper tail is
/// dominated by that of `b`.
pub fn necessity_refutes_at(inst: &ComparisonInstance, x: f64) -> bool {
    if !(x > 0.0 && x.is_finite()) {
        return false;
    }
    let m = inst.a().positive_count() as f64;
    let tail_a = gamma_ur(0.5 * m, 0.5 * x / inst.a().max());
    let tail_b = erfc((0.5 * x / inst.b().max()).sqrt());
    tail_a * (1.0 + REFUTE_RTOL) < tail_b
}
