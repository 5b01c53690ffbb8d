//! The thin sets `B+ = { n : {phi_1(n)} < psi(n) }` and
//! `B- = { n : {-phi_1(n)} < psi(n) }`, materialized on `[1, N]`.

use std::cmp::Ordering;
use std::collections::BTreeMap;
use std::sync::Arc;

use num_bigint::BigUint;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::hp::Hp;
use crate::sum::Neumaier;
use crate::regvar::{make_function, make_psi, FunctionSpec, Inverse, Psi, PsiKind, PsiSpec, RegVarError};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ThinSetError {
    #[error("configuration error at `{key}`: {message}")]
    Config { key: String, message: String },
    #[error(transparent)]
    RegVar(#[from] RegVarError),
    #[error("membership of n = {n} is undecided at extended precision")]
    PrecisionExhausted { n: u64 },
    #[error("horizon must be at least 1")]
    EmptyHorizon,
    #[error("t = {t} is outside the horizon [0, {horizon}]")]
    OutOfHorizon { t: u64, horizon: u64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Sign {
    Plus,
    Minus,
}

impl Sign {
    fn factor(self) -> f64 {
        match self {
            Sign::Plus => 1.0,
            Sign::Minus => -1.0,
        }
    }
}

/// The generating data of a thin set: `h_1` (through `phi_1`), `h_2` (through
/// `phi_2`, which drives `psi`), the `psi` construction and the sign.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ThinSetSpec {
    pub h1: FunctionSpec,
    pub h2: FunctionSpec,
    #[serde(default)]
    pub psi: PsiSpec,
    pub sign: Sign,
}

impl ThinSetSpec {
    /// `h_1 = h_2 = f`, `psi = min(1/2, kappa phi')`.
    pub fn symmetric(f: FunctionSpec, kappa: f64, sign: Sign) -> Self {
        ThinSetSpec { h1: f.clone(), h2: f, psi: PsiSpec::derivative(kappa), sign }
    }

    /// `h(x) = x^c`, sign minus, `psi(n) = phi(n + 1) - phi(n)`; the set is
    /// `{ floor(m^c) : m >= 1 }`.
    pub fn integer_parts_of_powers(c: f64) -> Self {
        let f = FunctionSpec::pow(c);
        ThinSetSpec { h1: f.clone(), h2: f, psi: PsiSpec::forward_difference(1.0), sign: Sign::Minus }
    }

    /// `phi_2 = 100 C phi_1` with `C = 2^(1 - 1/c)` the doubling constant of
    /// `phi_1'` for `h_1 = x^c`; realized as `h_2 = h_1` with `kappa = 100 C`.
    /// Blocks of the set then contain about `100 C` consecutive integers.
    pub fn long_blocks(c: f64) -> Self {
        let doubling = 2f64.powf(1.0 - 1.0 / c);
        ThinSetSpec::symmetric(FunctionSpec::pow(c), 100.0 * doubling, Sign::Plus)
    }

    /// Strict JSON parsing; unknown keys are rejected and errors name the key.
    pub fn from_json_str(s: &str) -> Result<Self, ThinSetError> {
        let spec: ThinSetSpec = serde_json::from_str(s).map_err(|e| config_error_from_json(&e))?;
        spec.validate()?;
        Ok(spec)
    }

    /// Builds every component once, reporting failures against the key that
    /// caused them.
    pub fn validate(&self) -> Result<(), ThinSetError> {
        Evaluator::new(self).map(|_| ())
    }
}

/// Extracts the offending key from a serde_json message where possible.
pub fn config_error_from_json(e: &serde_json::Error) -> ThinSetError {
    let msg = e.to_string();
    let key = ["unknown field `", "missing field `", "unknown variant `"]
        .iter()
        .find_map(|p| {
            let i = msg.find(p)? + p.len();
            let j = msg[i..].find('`')?;
            Some(msg[i..i + j].to_string())
        })
        .unwrap_or_else(|| "<root>".into());
    ThinSetError::Config { key, message: msg }
}

/// Named configurations used across tests, the suite and the CLI.
pub fn registry() -> Vec<(&'static str, ThinSetSpec)> {
    vec![
        ("pow1.02", ThinSetSpec::symmetric(FunctionSpec::pow(1.02), 1.0, Sign::Plus)),
        ("pow1.05", ThinSetSpec::symmetric(FunctionSpec::pow(1.05), 1.0, Sign::Plus)),
        ("pow1.25", ThinSetSpec::symmetric(FunctionSpec::pow(1.25), 1.0, Sign::Plus)),
        ("pow_log1.05", ThinSetSpec::symmetric(FunctionSpec::pow_log(1.05), 1.0, Sign::Plus)),
        ("pow_div_log1.25", ThinSetSpec::symmetric(FunctionSpec::pow_div_log(1.25), 1.0, Sign::Plus)),
        ("pow_explog0.5", ThinSetSpec::symmetric(FunctionSpec::pow_explog(0.5), 1.0, Sign::Plus)),
        ("pow1.05_minus", ThinSetSpec::symmetric(FunctionSpec::pow(1.05), 1.0, Sign::Minus)),
        ("powers1.5", ThinSetSpec::integer_parts_of_powers(1.5)),
        ("long_blocks1.75", ThinSetSpec::long_blocks(1.75)),
    ]
}

pub fn registry_get(name: &str) -> Option<ThinSetSpec> {
    registry().into_iter().find(|(n, _)| *n == name).map(|(_, s)| s)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Membership {
    #[serde(rename = "in")]
    pub in_set: bool,
    /// `|{+-phi_1(n)} - psi(n)|`.
    pub boundary_margin: f64,
    pub used_high_precision: bool,
}

/// Relative size below which extended-precision quantities are treated as
/// indistinguishable (the working precision is 2^-256).
fn hp_tiny(scale: f64) -> Hp {
    Hp::from_f64(2f64.powi(-200) * scale.max(1.0))
}

/// `a^e1` compared with `b^e2`, exactly.
fn pow_cmp(a: u64, e1: u32, b: u64, e2: u32) -> Ordering {
    BigUint::from(a).pow(e1).cmp(&BigUint::from(b).pow(e2))
}

fn ulp(x: f64) -> f64 {
    x.next_up() - x
}

/// Per-point evaluation of a set spec.
#[derive(Debug, Clone)]
pub struct Evaluator {
    spec: ThinSetSpec,
    inv1: Inverse,
    inv2: Inverse,
    psi: Psi,
    same_phi: bool,
    /// `h_1(x) = x^(p/q)` exactly.
    rational_power: Option<(u32, u32)>,
}

impl Evaluator {
    pub fn new(spec: &ThinSetSpec) -> Result<Self, ThinSetError> {
        let wrap = |key: &str| {
            let key = key.to_string();
            move |e: RegVarError| ThinSetError::Config { key: key.clone(), message: e.to_string() }
        };
        let f1 = make_function(&spec.h1).map_err(wrap("h1"))?;
        let f2 = make_function(&spec.h2).map_err(wrap("h2"))?;
        let inv1 = f1.invert();
        let inv2 = f2.invert();
        let psi = make_psi(inv2.clone(), &spec.psi).map_err(wrap("psi"))?;
        let rational_power = f1.c_rational().map(|(p, q)| (p as u32, q as u32));
        Ok(Evaluator { spec: spec.clone(), inv1, inv2, psi, same_phi: spec.h1 == spec.h2, rational_power })
    }

    pub fn spec(&self) -> &ThinSetSpec {
        &self.spec
    }

    pub fn phi1(&self, x: f64) -> Result<f64, ThinSetError> {
        Ok(self.inv1.phi(x)?)
    }

    pub fn phi2(&self, x: f64) -> Result<f64, ThinSetError> {
        Ok(self.inv2.phi(x)?)
    }

    pub fn inverse1(&self) -> &Inverse {
        &self.inv1
    }

    pub fn inverse2(&self) -> &Inverse {
        &self.inv2
    }

    pub fn psi_fn(&self) -> &Psi {
        &self.psi
    }

    pub fn psi(&self, x: f64) -> Result<f64, ThinSetError> {
        Ok(self.psi.value(x)?)
    }

    fn guard(phi: f64) -> f64 {
        64.0 * ulp(phi.max(1.0))
    }

    /// Exact comparison of `phi_1(n)` with the integer `m`, when `h_1` is a
    /// rational power.
    fn exact_phi_cmp(&self, n: u64, m: u64) -> Option<Ordering> {
        let (p, q) = self.rational_power?;
        // phi(n) vs m  <=>  n vs m^(p/q)  <=>  n^q vs m^p.
        Some(pow_cmp(n, q, m, p))
    }

    /// `{s phi_1(n)}` in extended precision, with exact handling when
    /// `phi_1(n)` lies on or next to an integer.
    fn frac_hp(&self, n: u64) -> Result<(Hp, Hp), ThinSetError> {
        let phi = self.inv1.phi_hp(&Hp::from_u64(n))?;
        let s = self.spec.sign;
        let m = phi.to_f64().round().max(0.0);
        let d = phi.sub(&Hp::from_f64(m));
        let tiny = hp_tiny(m);
        if d.abs().cmp_hp(&tiny) == Ordering::Less {
            let side = self.exact_phi_cmp(n, m as u64).ok_or(ThinSetError::PrecisionExhausted { n })?;
            let fr = match (side, s) {
                (Ordering::Equal, _) => Hp::zero(),
                (Ordering::Greater, Sign::Plus) | (Ordering::Less, Sign::Minus) => d.abs(),
                _ => Hp::one().sub(&d.abs()),
            };
            let phi = match side {
                Ordering::Equal => Hp::from_f64(m),
                _ => phi,
            };
            return Ok((phi, fr));
        }
        let u = match s {
            Sign::Plus => phi.clone(),
            Sign::Minus => -&phi,
        };
        Ok((phi, u.frac()))
    }

    /// Decides `{s phi_1(n)} < psi(n)` when the two sides agree to the
    /// working precision. Exact only for the integer-parts-of-powers
    /// configuration, where the comparison reduces to `ceil(phi(n))` versus
    /// `phi(n + 1)`.
    /// A difference that vanishes identically at the working precision is
    /// taken as an exact tie (the strict inequality fails); this happens on
    /// the linear continuation below `h(x0)`, where both sides are the same
    /// multiple of the slope.
    fn resolve_tie(&self, n: u64, phi: &Hp, diff: &Hp) -> Result<bool, ThinSetError> {
        if diff.cmp_hp(&Hp::zero()) == Ordering::Equal {
            return Ok(false);
        }
        if self.same_phi && self.spec.sign == Sign::Minus && self.psi.kind() == PsiKind::ForwardDifference && self.psi.kappa() == 1.0 {
            let k = phi.ceil().to_f64() as u64;
            if let Some(o) = self.exact_phi_cmp(n + 1, k) {
                // in  <=>  k < phi(n + 1).
                return Ok(o == Ordering::Greater);
            }
        }
        Err(ThinSetError::PrecisionExhausted { n })
    }

    /// Fractional-part test with guarded precision.
    pub fn membership(&self, n: u64) -> Result<Membership, ThinSetError> {
        let x = n as f64;
        let phi = self.inv1.phi(x)?;
        let u = self.spec.sign.factor() * phi;
        let fr = u - u.floor();
        let psi = self.psi.value(x)?;
        let margin = (fr - psi).abs();
        let to_int = fr.min(1.0 - fr);
        let guard = Self::guard(phi);
        if margin > guard && to_int > guard {
            return Ok(Membership { in_set: fr < psi, boundary_margin: margin, used_high_precision: false });
        }
        let (phi_h, fr_h) = self.frac_hp(n)?;
        let psi_h = self.psi.value_hp(&Hp::from_u64(n))?;
        let diff = fr_h.sub(&psi_h);
        let in_set = if diff.abs().cmp_hp(&hp_tiny(phi)) == Ordering::Less {
            self.resolve_tie(n, &phi_h, &diff)?
        } else {
            diff.cmp_hp(&Hp::zero()) == Ordering::Less
        };
        Ok(Membership { in_set, boundary_margin: diff.abs().to_f64(), used_high_precision: true })
    }

    /// Floor-difference identity `floor(u) - floor(u - psi(n)) = 1`, with
    /// `u = s phi_1(n)`, under the same guarded precision.
    pub fn membership_floor_identity(&self, n: u64) -> Result<bool, ThinSetError> {
        let x = n as f64;
        let phi = self.inv1.phi(x)?;
        let u = self.spec.sign.factor() * phi;
        let psi = self.psi.value(x)?;
        let v = u - psi;
        let guard = Self::guard(phi);
        if (u - u.round()).abs() > guard && (v - v.round()).abs() > guard {
            return Ok(u.floor() - v.floor() == 1.0);
        }
        let (phi_h, fr_h) = self.frac_hp(n)?;
        let u_h = match self.spec.sign {
            Sign::Plus => phi_h.clone(),
            Sign::Minus => -&phi_h,
        };
        // floor(u) from the exactly resolved fractional part.
        let fu = u_h.sub(&fr_h).to_f64().round();
        let psi_h = self.psi.value_hp(&Hp::from_u64(n))?;
        let v_h = Hp::from_f64(fu).add(&fr_h).sub(&psi_h);
        let r = v_h.to_f64().round();
        let dv = v_h.sub(&Hp::from_f64(r));
        let fv = if dv.abs().cmp_hp(&hp_tiny(phi)) == Ordering::Less {
            // v sits on the integer r: floor(v) is r unless v is just below.
            if self.resolve_tie(n, &phi_h, &v_h.sub(&Hp::from_f64(r)))? {
                r - 1.0
            } else {
                r
            }
        } else {
            v_h.floor().to_f64()
        };
        Ok(fu - fv == 1.0)
    }

    /// `({u}, {u - psi(n)})` with `u = s phi_1(n)`, switching to extended
    /// precision near the membership boundary so that
    /// `1_B(n) = psi(n) + {u - psi(n)} - {u}` holds at every `n`.
    pub fn fractional_parts(&self, n: u64) -> Result<(f64, f64), ThinSetError> {
        let x = n as f64;
        let phi = self.inv1.phi(x)?;
        let u = self.spec.sign.factor() * phi;
        let fr = u - u.floor();
        let psi = self.psi.value(x)?;
        let guard = Self::guard(phi);
        if (fr - psi).abs() > guard && fr.min(1.0 - fr) > guard {
            let v = u - psi;
            return Ok((fr, v - v.floor()));
        }
        let (_, fr_h) = self.frac_hp(n)?;
        let in_set = self.membership(n)?.in_set;
        let v = fr_h.sub(&self.psi.value_hp(&Hp::from_u64(n))?);
        // Out of the set means {u} >= psi(n); a tie leaves v at zero.
        let fv = if in_set {
            v.add(&Hp::one())
        } else if v.cmp_hp(&Hp::zero()) == std::cmp::Ordering::Less {
            Hp::zero()
        } else {
            v
        };
        Ok((fr_h.to_f64(), fv.to_f64()))
    }

    /// Block label: `floor(phi_1(n))` for plus, `ceil(phi_1(n))` for minus.
    fn block_label(&self, n: u64, used_hp: bool) -> Result<i64, ThinSetError> {
        let phi = self.inv1.phi(n as f64)?;
        let near_int = (phi - phi.round()).abs() <= Self::guard(phi);
        if !used_hp && !near_int {
            return Ok(match self.spec.sign {
                Sign::Plus => phi.floor() as i64,
                Sign::Minus => phi.ceil() as i64,
            });
        }
        let (phi_h, fr_h) = self.frac_hp(n)?;
        let label = match self.spec.sign {
            Sign::Plus => phi_h.sub(&fr_h).to_f64().round(),
            Sign::Minus => phi_h.add(&fr_h).to_f64().round(),
        };
        Ok(label as i64)
    }
}

/// Membership of a single integer (builds the evaluator on every call).
pub fn membership(spec: &ThinSetSpec, n: u64) -> Result<Membership, ThinSetError> {
    Evaluator::new(spec)?.membership(n)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Block {
    pub label: i64,
    pub start: u64,
    pub end: u64,
}

impl Block {
    pub fn len(&self) -> u64 {
        self.end - self.start + 1
    }

    pub fn is_empty(&self) -> bool {
        false
    }
}

/// `B` materialized on `[1, N]`, together with `psi(n)` and the cumulative
/// `Psi(t) = sum_{n <= t} psi(n)`.
#[derive(Debug, Clone)]
pub struct ThinSet {
    eval: Arc<Evaluator>,
    horizon: u64,
    words: Vec<u64>,
    ranks: Vec<u32>,
    elements: Vec<u64>,
    blocks: Vec<Block>,
    psi: Vec<f64>,
    psi_cum: Vec<f64>,
    high_precision_calls: usize,
}

const CHUNK: u64 = 1 << 14;

struct ChunkOut {
    members: Vec<(u64, i64)>,
    psi: Vec<f64>,
    hp_calls: usize,
}

/// Enumerates `B` on `[1, N]` (parallel over disjoint ranges).
pub fn enumerate(spec: &ThinSetSpec, horizon: u64) -> Result<ThinSet, ThinSetError> {
    if horizon == 0 {
        return Err(ThinSetError::EmptyHorizon);
    }
    let eval = Arc::new(Evaluator::new(spec)?);
    let chunks: Vec<u64> = (0..horizon.div_ceil(CHUNK)).collect();
    let outs: Vec<Result<ChunkOut, ThinSetError>> = chunks
        .par_iter()
        .map(|&k| {
            let lo = k * CHUNK + 1;
            let hi = ((k + 1) * CHUNK).min(horizon);
            let mut out = ChunkOut { members: Vec::new(), psi: Vec::with_capacity((hi - lo + 1) as usize), hp_calls: 0 };
            for n in lo..=hi {
                let m = eval.membership(n)?;
                out.psi.push(eval.psi(n as f64)?);
                if m.used_high_precision {
                    out.hp_calls += 1;
                }
                if m.in_set {
                    out.members.push((n, eval.block_label(n, m.used_high_precision)?));
                }
            }
            Ok(out)
        })
        .collect();
    let mut elements = Vec::new();
    let mut labels = Vec::new();
    let mut psi = Vec::with_capacity(horizon as usize + 1);
    psi.push(0.0);
    let mut high_precision_calls = 0;
    for out in outs {
        let out = out?;
        high_precision_calls += out.hp_calls;
        for (n, l) in out.members {
            elements.push(n);
            labels.push(l);
        }
        psi.extend(out.psi);
    }
    let nwords = (horizon as usize >> 6) + 1;
    let mut words = vec![0u64; nwords];
    for &n in &elements {
        words[(n >> 6) as usize] |= 1 << (n & 63);
    }
    let mut ranks = Vec::with_capacity(nwords);
    let mut acc = 0u32;
    for w in &words {
        ranks.push(acc);
        acc += w.count_ones();
    }
    let mut blocks: Vec<Block> = Vec::new();
    for (&n, &l) in elements.iter().zip(&labels) {
        match blocks.last_mut() {
            Some(b) if b.label == l => b.end = n,
            _ => blocks.push(Block { label: l, start: n, end: n }),
        }
    }
    let psi_cum = compensated_prefix(&psi);
    Ok(ThinSet { eval, horizon, words, ranks, elements, blocks, psi, psi_cum, high_precision_calls })
}

/// Prefix sums with Neumaier compensation.
pub fn compensated_prefix(v: &[f64]) -> Vec<f64> {
    let mut acc = Neumaier::new();
    v.iter()
        .map(|&x| {
            acc.add(x);
            acc.value()
        })
        .collect()
}

impl ThinSet {
    pub fn spec(&self) -> &ThinSetSpec {
        self.eval.spec()
    }

    pub fn evaluator(&self) -> &Evaluator {
        &self.eval
    }

    pub fn horizon(&self) -> u64 {
        self.horizon
    }

    pub fn elements(&self) -> &[u64] {
        &self.elements
    }

    pub fn blocks(&self) -> &[Block] {
        &self.blocks
    }

    pub fn high_precision_calls(&self) -> usize {
        self.high_precision_calls
    }

    /// O(1) membership; false outside `[1, N]`.
    #[inline]
    pub fn contains(&self, n: i64) -> bool {
        n >= 1 && (n as u64) <= self.horizon && (self.words[(n >> 6) as usize] >> (n & 63)) & 1 == 1
    }

    /// `|B ∩ [1, t]|` in O(1).
    pub fn count(&self, t: u64) -> Result<u64, ThinSetError> {
        if t > self.horizon {
            return Err(ThinSetError::OutOfHorizon { t, horizon: self.horizon });
        }
        Ok(self.count_unchecked(t))
    }

    #[inline]
    pub(crate) fn count_unchecked(&self, t: u64) -> u64 {
        let w = (t >> 6) as usize;
        let mask = if t & 63 == 63 { u64::MAX } else { (2u64 << (t & 63)) - 1 };
        (self.ranks[w] + (self.words[w] & mask).count_ones()) as u64
    }

    /// `psi(n)` for `1 <= n <= N`.
    #[inline]
    pub fn psi(&self, n: u64) -> f64 {
        self.psi[n as usize]
    }

    /// `Psi(t) = sum_{1 <= n <= t} psi(n)`.
    pub fn psi_sum(&self, t: u64) -> Result<f64, ThinSetError> {
        if t > self.horizon {
            return Err(ThinSetError::OutOfHorizon { t, horizon: self.horizon });
        }
        Ok(self.psi_cum[t as usize])
    }

    pub fn phi1(&self, x: f64) -> f64 {
        self.eval.phi1(x).unwrap_or(f64::NAN)
    }

    pub fn phi2(&self, x: f64) -> f64 {
        self.eval.phi2(x).unwrap_or(f64::NAN)
    }

    /// Restriction to `[1, t]` without re-evaluating membership.
    pub fn truncate(&self, t: u64) -> Result<ThinSet, ThinSetError> {
        if t == 0 {
            return Err(ThinSetError::EmptyHorizon);
        }
        if t > self.horizon {
            return Err(ThinSetError::OutOfHorizon { t, horizon: self.horizon });
        }
        let k = self.count_unchecked(t) as usize;
        let elements = self.elements[..k].to_vec();
        let nwords = (t as usize >> 6) + 1;
        let mut words = self.words[..nwords].to_vec();
        let last = t & 63;
        if last != 63 {
            words[nwords - 1] &= (2u64 << last) - 1;
        }
        let ranks = self.ranks[..nwords].to_vec();
        let blocks = self
            .blocks
            .iter()
            .filter(|b| b.start <= t)
            .map(|b| Block { end: b.end.min(t), ..*b })
            .collect();
        Ok(ThinSet {
            eval: self.eval.clone(),
            horizon: t,
            words,
            ranks,
            elements,
            blocks,
            psi: self.psi[..=t as usize].to_vec(),
            psi_cum: self.psi_cum[..=t as usize].to_vec(),
            high_precision_calls: self.high_precision_calls,
        })
    }

    pub fn run_stats(&self) -> RunStats {
        let mut hist = BTreeMap::new();
        let mut max_run = 0u64;
        let mut i = 0;
        while i < self.elements.len() {
            let mut j = i;
            while j + 1 < self.elements.len() && self.elements[j + 1] == self.elements[j] + 1 {
                j += 1;
            }
            let len = (j - i + 1) as u64;
            max_run = max_run.max(len);
            *hist.entry(len).or_insert(0u64) += 1;
            i = j + 1;
        }
        let gaps: Vec<u64> = self.blocks.windows(2).map(|w| w[1].start - w[0].end).collect();
        let tail = &gaps[gaps.len() / 2..];
        RunStats {
            max_run,
            run_histogram: hist.into_iter().collect(),
            dist_between_blocks: gaps.iter().copied().min(),
            dist_between_blocks_tail: tail.iter().copied().min(),
            max_block_len: self.blocks.iter().map(Block::len).max().unwrap_or(0),
            blocks: self.blocks.len() as u64,
            elements: self.elements.len() as u64,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunStats {
    pub max_run: u64,
    /// `(run length, number of runs)` pairs, sorted by length.
    pub run_histogram: Vec<(u64, u64)>,
    /// Minimal `start(B_k) - end(B_m)` between consecutive non-empty blocks.
    pub dist_between_blocks: Option<u64>,
    /// The same minimum restricted to the second half of the blocks.
    pub dist_between_blocks_tail: Option<u64>,
    pub max_block_len: u64,
    pub blocks: u64,
    pub elements: u64,
}

#[cfg(test)]
mod tests {
    use super::*;

    fn powers_oracle(c: f64, n: u64) -> Vec<u64> {
        // floor(m^c) with exact integer arithmetic for c = 3/2.
        assert_eq!(c, 1.5);
        let mut out = Vec::new();
        let mut m = 1u64;
        loop {
            let v = (m * m * m) as f64;
            let mut r = v.sqrt() as u64;
            while r * r > m * m * m {
                r -= 1;
            }
            while (r + 1) * (r + 1) <= m * m * m {
                r += 1;
            }
            if r > n {
                break;
            }
            out.push(r);
            m += 1;
        }
        out
    }

    #[test]
    fn integer_parts_of_powers_small() {
        let ts = enumerate(&ThinSetSpec::integer_parts_of_powers(1.5), 20).unwrap();
        assert_eq!(ts.elements(), &[1, 2, 5, 8, 11, 14, 18]);
        assert_eq!(ts.count(20).unwrap(), 7);
        assert_eq!(ts.run_stats().max_run, 2);
        assert_eq!(powers_oracle(1.5, 20), vec![1, 2, 5, 8, 11, 14, 18]);
    }

    #[test]
    fn integer_parts_of_powers_exact_ties() {
        // n + 1 = j^3 makes phi(n + 1) an integer; n = j^3 makes phi(n) one.
        let spec = ThinSetSpec::integer_parts_of_powers(1.5);
        let ev = Evaluator::new(&spec).unwrap();
        for j in 2..40u64 {
            let cube = j * j * j;
            assert!(ev.membership(cube).unwrap().in_set, "{cube}");
            assert!(ev.membership_floor_identity(cube).unwrap());
            let before = ev.membership(cube - 1).unwrap();
            let oracle = powers_oracle(1.5, cube).contains(&(cube - 1));
            assert_eq!(before.in_set, oracle, "{}", cube - 1);
        }
        let ts = enumerate(&spec, 20_000).unwrap();
        assert_eq!(ts.elements(), powers_oracle(1.5, 20_000).as_slice());
    }

    #[test]
    fn worked_membership_values() {
        let spec = ThinSetSpec::symmetric(FunctionSpec::pow(1.25), 1.0, Sign::Plus);
        let m = membership(&spec, 2).unwrap();
        assert!(!m.in_set);
        // 2^0.8 = 1.7411..., psi(2) = 0.8 * 2^(-0.2) / 1 clipped to 1/2.
        assert!((m.boundary_margin - (2f64.powf(0.8) - 1.0 - 0.5)).abs() < 1e-12);
        assert!(membership(&spec, 1).unwrap().in_set);
        assert!(membership(&ThinSetSpec::integer_parts_of_powers(1.5), 5).unwrap().in_set);
    }

    #[test]
    fn horizon_edge_cases() {
        let spec = ThinSetSpec::symmetric(FunctionSpec::pow(1.25), 1.0, Sign::Plus);
        assert_eq!(enumerate(&spec, 0).unwrap_err(), ThinSetError::EmptyHorizon);
        let ts = enumerate(&spec, 1).unwrap();
        assert_eq!(ts.elements(), &[1]);
        assert_eq!(ts.run_stats().max_run, 1);
        assert!(matches!(ts.count(2), Err(ThinSetError::OutOfHorizon { .. })));
    }

    #[test]
    fn count_matches_list_and_bitmap() {
        for (_, spec) in registry() {
            let ts = enumerate(&spec, 5000).unwrap();
            let mut c = 0;
            for t in 0..=5000u64 {
                if ts.contains(t as i64) {
                    c += 1;
                }
                assert_eq!(ts.count(t).unwrap(), c);
            }
            assert_eq!(c as usize, ts.elements().len());
            for b in ts.blocks().windows(2) {
                assert!(b[0].label < b[1].label);
                assert!(b[0].end < b[1].start);
            }
            let covered: u64 = ts.blocks().iter().map(Block::len).sum();
            assert_eq!(covered as usize, ts.elements().len());
        }
    }

    #[test]
    fn blocks_satisfy_partition_definition() {
        let ts = enumerate(&registry_get("pow1.25").unwrap(), 20_000).unwrap();
        let ev = ts.evaluator();
        for b in ts.blocks() {
            for n in b.start..=b.end {
                assert!(ts.contains(n as i64));
                let d = ev.phi1(n as f64).unwrap() - b.label as f64;
                assert!(d >= 0.0 && d < ev.psi(n as f64).unwrap());
            }
        }
    }

    #[test]
    fn config_parsing() {
        let s = r#"{"h1":{"family":"pow","c":1.05},"h2":{"family":"pow","c":1.05},"psi":{"kappa":1.0},"sign":"plus"}"#;
        let spec = ThinSetSpec::from_json_str(s).unwrap();
        assert_eq!(spec, registry_get("pow1.05").unwrap());
        let bad = r#"{"h1":{"family":"pow","c":1.05},"h2":{"family":"pow","c":1.05},"sign":"plus","extra":1}"#;
        match ThinSetSpec::from_json_str(bad) {
            Err(ThinSetError::Config { key, .. }) => assert_eq!(key, "extra"),
            other => panic!("{other:?}"),
        }
        let bad = r#"{"h1":{"family":"pow","c":2.3},"h2":{"family":"pow","c":1.05},"sign":"plus"}"#;
        match ThinSetSpec::from_json_str(bad) {
            Err(ThinSetError::Config { key, .. }) => assert_eq!(key, "h1"),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn truncate_agrees_with_fresh_enumeration() {
        let spec = registry_get("pow1.05").unwrap();
        let big = enumerate(&spec, 3000).unwrap();
        let small = enumerate(&spec, 1234).unwrap();
        let cut = big.truncate(1234).unwrap();
        assert_eq!(cut.elements(), small.elements());
        assert_eq!(cut.blocks(), small.blocks());
        assert_eq!(cut.count(1234).unwrap(), small.count(1234).unwrap());
        assert_eq!(cut.psi_sum(1234).unwrap(), small.psi_sum(1234).unwrap());
    }
}
