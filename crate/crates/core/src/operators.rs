//! Averaging operators along `B`, their maximal functions, the
//! `lambda_s^k` bridge between `D_k` and `H_s`, and oscillation and
//! 2-variation seminorms.
//!
//! With `B_t = B ∩ [1, t]` and `Psi(t) = sum_{s <= t} psi(s)`:
//!
//! * `M_t f(x) = |B_t|^{-1} sum_{n in B_t} f(x - n)`
//! * `A_t f(x) = |B_t|^{-1} sum_{s <= t} psi(s) f(x - s)`
//! * `D_t f(x) = Psi(t)^{-1} sum_{s <= t} psi(s) f(x - s)`
//! * `H_t f(x) = t^{-1} sum_{s <= t} f(x - s)`

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::kernels::{kernel_smooth_dyadic, KernelError};
pub use crate::signal::Signal;
use crate::signal::convolve;
use crate::sum::Neumaier;
use crate::thinset::ThinSet;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum OpError {
    #[error("B ∩ [1, {t}] is empty")]
    EmptySet { t: u64 },
    #[error("the scale plan has no scales within the horizon")]
    EmptyPlan,
    #[error("bad cut points: {0}")]
    BadCutPoints(String),
    #[error("psi increases between s = {s} and s + 1")]
    NonMonotonePsi { s: u64 },
    #[error("identity violated at x = {x}: deviation {deviation:e}")]
    IdentityViolation { x: i64, deviation: f64 },
    #[error("no input signals")]
    EmptyInput,
    #[error("scale {t} exceeds the horizon {horizon}")]
    OutOfHorizon { t: u64, horizon: u64 },
    #[error("tau = {0} must lie in (0, 1/2)")]
    InvalidTau(f64),
    #[error("scale must be at least 1")]
    ZeroScale,
    #[error(transparent)]
    Kernel(#[from] KernelError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Op {
    M,
    A,
    D,
    H,
    #[serde(rename = "smooth_dyadic")]
    SmoothDyadic,
}

impl std::str::FromStr for Op {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "M" | "m" => Ok(Op::M),
            "A" | "a" => Ok(Op::A),
            "D" | "d" => Ok(Op::D),
            "H" | "h" => Ok(Op::H),
            "smooth_dyadic" | "sd" => Ok(Op::SmoothDyadic),
            _ => Err(format!("unknown operator `{s}` (expected M, A, D, H or smooth_dyadic)")),
        }
    }
}

/// Which scales a maximal function or oscillation ranges over.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ScalePlan {
    /// Every integer scale (compressed internally to the scales where the
    /// average can change).
    AllT,
    /// `2^k`.
    Dyadic,
    /// `floor(2^(n^tau))`, `n = 0, 1, ...`.
    TauDyadic { tau: f64 },
}

impl std::str::FromStr for ScalePlan {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "all_t" => Ok(ScalePlan::AllT),
            "dyadic" => Ok(ScalePlan::Dyadic),
            _ => {
                let tau = s
                    .strip_prefix("tau_dyadic:")
                    .ok_or_else(|| format!("unknown plan `{s}` (expected all_t, dyadic or tau_dyadic:<tau>)"))?;
                let tau: f64 = tau.parse().map_err(|_| format!("bad tau in `{s}`"))?;
                Ok(ScalePlan::TauDyadic { tau })
            }
        }
    }
}

impl ScalePlan {
    /// The increasing list of scales `<= max`.
    pub fn scales(&self, max: u64) -> Result<Vec<u64>, OpError> {
        let mut out = Vec::new();
        match *self {
            ScalePlan::AllT => out.extend(1..=max),
            ScalePlan::Dyadic => {
                let mut t = 1u64;
                while t <= max {
                    out.push(t);
                    t *= 2;
                }
            }
            ScalePlan::TauDyadic { tau } => {
                if !(tau > 0.0 && tau < 0.5) {
                    return Err(OpError::InvalidTau(tau));
                }
                let mut n = 0u64;
                loop {
                    let v = 2f64.powf((n as f64).powf(tau)).floor();
                    if v > max as f64 {
                        break;
                    }
                    out.push(v as u64);
                    n += 1;
                    if n > 1 << 40 {
                        break;
                    }
                }
                out.dedup();
            }
        }
        if out.is_empty() {
            return Err(OpError::EmptyPlan);
        }
        Ok(out)
    }

    /// Whether `tau < min((p0 - 1) / 2, 1/2)`.
    pub fn tau_admissible_for(&self, p0: f64) -> bool {
        match *self {
            ScalePlan::TauDyadic { tau } => tau > 0.0 && tau < ((p0 - 1.0) / 2.0).min(0.5),
            _ => true,
        }
    }
}

fn check_scale(ts: &ThinSet, t: u64) -> Result<(), OpError> {
    if t == 0 {
        return Err(OpError::ZeroScale);
    }
    if t > ts.horizon() {
        return Err(OpError::OutOfHorizon { t, horizon: ts.horizon() });
    }
    Ok(())
}

/// Weight `w(s)` and normalizer of the operator at scale `t`.
#[inline]
fn weight(ts: &ThinSet, op: Op, s: u64) -> f64 {
    match op {
        Op::M => {
            if ts.contains(s as i64) {
                1.0
            } else {
                0.0
            }
        }
        Op::A | Op::D => ts.psi(s),
        Op::H => 1.0,
        Op::SmoothDyadic => unreachable!("smooth dyadic averages are kernel convolutions"),
    }
}

#[inline]
fn norm(ts: &ThinSet, op: Op, t: u64) -> f64 {
    match op {
        Op::M | Op::A => ts.count_unchecked(t) as f64,
        Op::D => ts.psi_sum(t).expect("scale within horizon"),
        Op::H => t as f64,
        Op::SmoothDyadic => unreachable!(),
    }
}

/// Work (output points times atoms) below which averages are summed per
/// point; above it the FFT convolution is used.
pub const DIRECT_WORK: usize = 1 << 26;

/// `op_t f` on `[offset(f) + 1, end(f) + t]`.
///
/// On the direct path every output value is the compensated sum of
/// `w(s) f(x - s)` in increasing `s`, divided by the normalizer.
pub fn apply(ts: &ThinSet, f: &Signal, t: u64, op: Op) -> Result<Signal, OpError> {
    check_scale(ts, t)?;
    if op == Op::SmoothDyadic {
        let k = kernel_smooth_dyadic(ts, t)?;
        return Ok(convolve(&k.signal, f));
    }
    if matches!(op, Op::M | Op::A) && ts.count_unchecked(t) == 0 {
        return Err(OpError::EmptySet { t });
    }
    if f.is_empty() {
        return Ok(Signal::new(f.offset + 1, Vec::new()));
    }
    if op == Op::H {
        return Ok(apply_h_prefix(f, t));
    }
    let lo = f.offset + 1;
    let len = f.len() + t as usize;
    let atoms: Vec<(i64, f64)> = f.nonzeros().collect();
    let nrm = norm(ts, op, t);
    if len.saturating_mul(atoms.len()) <= DIRECT_WORK {
        let values: Vec<f64> = (0..len)
            .into_par_iter()
            .map(|i| {
                let x = lo + i as i64;
                let mut acc = Neumaier::new();
                for &(p, v) in atoms.iter().rev() {
                    let s = x - p;
                    if s < 1 {
                        continue;
                    }
                    if s as u64 > t {
                        break;
                    }
                    let w = weight(ts, op, s as u64);
                    if w != 0.0 {
                        acc.add(w * v);
                    }
                }
                acc.value() / nrm
            })
            .collect();
        return Ok(Signal::new(lo, values));
    }
    let kernel = Signal::new(1, (1..=t).map(|s| weight(ts, op, s) / nrm).collect());
    let out = convolve(&kernel, f);
    Ok(Signal::new(lo, out.values[..len.min(out.values.len())].to_vec()))
}

fn apply_h_prefix(f: &Signal, t: u64) -> Signal {
    let mut pre = Vec::with_capacity(f.len() + 1);
    let mut acc = Neumaier::new();
    pre.push(0.0);
    for &v in &f.values {
        acc.add(v);
        pre.push(acc.value());
    }
    let l = f.len() as i64;
    let prefix = |k: i64| -> f64 { pre[k.clamp(0, l) as usize] };
    let len = f.len() + t as usize;
    let tt = t as i64;
    let values = (0..len as i64)
        .map(|i| {
            // x = offset + 1 + i; the window f(x - t .. x - 1) covers indices i + 1 - t ..= i.
            (prefix(i + 1) - prefix(i + 1 - tt)) / t as f64
        })
        .collect();
    Signal::new(f.offset + 1, values)
}

pub fn apply_m(ts: &ThinSet, f: &Signal, t: u64) -> Result<Signal, OpError> {
    apply(ts, f, t, Op::M)
}

pub fn apply_a(ts: &ThinSet, f: &Signal, t: u64) -> Result<Signal, OpError> {
    apply(ts, f, t, Op::A)
}

pub fn apply_d(ts: &ThinSet, f: &Signal, t: u64) -> Result<Signal, OpError> {
    apply(ts, f, t, Op::D)
}

/// `H_t` does not depend on `B`.
pub fn apply_h(f: &Signal, t: u64) -> Result<Signal, OpError> {
    if t == 0 {
        return Err(OpError::ZeroScale);
    }
    Ok(apply_h_prefix(f, t))
}

/// `lambda_s^k = s (psi(s) - psi(s+1)) / Psi(k)` for `s < k` and
/// `k psi(k) / Psi(k)` at `s = k`; entry `s - 1` of the result.
pub fn lambda_weights(ts: &ThinSet, k: u64) -> Result<Vec<f64>, OpError> {
    check_scale(ts, k)?;
    for s in 1..k {
        if ts.psi(s + 1) > ts.psi(s) + 1e-15 {
            return Err(OpError::NonMonotonePsi { s });
        }
    }
    let total = ts.psi_sum(k).expect("scale within horizon");
    let mut out: Vec<f64> = (1..k).map(|s| s as f64 * (ts.psi(s) - ts.psi(s + 1)) / total).collect();
    out.push(k as f64 * ts.psi(k) / total);
    Ok(out)
}

/// `sum_s lambda_s^k H_s f`, checked against `D_k f` pointwise to `1e-10`
/// relative to `max |f|`.
pub fn dk_via_hk(ts: &ThinSet, f: &Signal, k: u64) -> Result<Signal, OpError> {
    let lambda = lambda_weights(ts, k)?;
    let direct = apply_d(ts, f, k)?;
    let lo = f.offset + 1;
    let len = f.len() + k as usize;
    let mut pre = vec![0.0];
    let mut acc = Neumaier::new();
    for &v in &f.values {
        acc.add(v);
        pre.push(acc.value());
    }
    let l = f.len() as i64;
    let prefix = |j: i64| pre[j.clamp(0, l) as usize];
    let values: Vec<f64> = (0..len as i64)
        .into_par_iter()
        .map(|i| {
            let mut s_acc = Neumaier::new();
            for (s0, &lam) in lambda.iter().enumerate() {
                if lam == 0.0 {
                    continue;
                }
                let s = s0 as i64 + 1;
                s_acc.add(lam * (prefix(i + 1) - prefix(i + 1 - s)) / s as f64);
            }
            s_acc.value()
        })
        .collect();
    let out = Signal::new(lo, values);
    let scale = f.values.iter().fold(0.0f64, |m, v| m.max(v.abs())).max(f64::MIN_POSITIVE);
    let (x, dev) = worst_deviation(&out, &direct);
    if dev > 1e-10 * scale {
        return Err(OpError::IdentityViolation { x, deviation: dev });
    }
    Ok(out)
}

/// Largest `|a(x) - b(x)|` over the union of the two ranges.
pub fn worst_deviation(a: &Signal, b: &Signal) -> (i64, f64) {
    let lo = a.offset.min(b.offset);
    let hi = a.end().max(b.end());
    let mut worst = (lo, 0.0);
    for x in lo..=hi {
        let d = (a.get(x) - b.get(x)).abs();
        if d > worst.1 {
            worst = (x, d);
        }
    }
    worst
}

/// The step function `N_k(t) = min { N : sum_{i <= N} lambda_i^k > t }` on
/// `[0, 1)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Rearrangement {
    pub k: u64,
    pub lambda: Vec<f64>,
    /// `0 = c_0 <= c_1 <= ... <= c_k`, `c_s = sum_{i <= s} lambda_i`.
    pub breakpoints: Vec<f64>,
}

impl Rearrangement {
    /// `N_k(t)`; values of `t` beyond the last breakpoint map to `k`.
    pub fn n_at(&self, t: f64) -> u64 {
        let i = self.breakpoints[1..].partition_point(|&c| c <= t);
        (i as u64 + 1).min(self.k)
    }

    /// `int_0^1 H_{N_k(t)} f dt`, integrating the step function piece by
    /// piece with `H_s f` accumulated by direct running sums.
    pub fn integrate_h(&self, f: &Signal) -> Signal {
        let k = self.k as usize;
        let lo = f.offset + 1;
        let len = f.len() + k;
        let mut pieces: Vec<(u64, f64)> = Vec::new();
        for s in 1..=k {
            let a = self.breakpoints[s - 1].min(1.0);
            let b = if s == k { 1.0 } else { self.breakpoints[s].min(1.0) };
            if b > a {
                pieces.push((self.n_at(a), b - a));
            }
        }
        let values = (0..len as i64)
            .into_par_iter()
            .map(|i| {
                let x = lo + i;
                let mut running = 0.0;
                let mut s_done = 0u64;
                let mut out = Neumaier::new();
                for &(s, len) in &pieces {
                    while s_done < s {
                        s_done += 1;
                        running += f.get(x - s_done as i64);
                    }
                    out.add(len * running / s as f64);
                }
                out.value()
            })
            .collect();
        Signal::new(lo, values)
    }
}

pub fn rearrangement_nk(ts: &ThinSet, k: u64) -> Result<Rearrangement, OpError> {
    let lambda = lambda_weights(ts, k)?;
    let mut breakpoints = Vec::with_capacity(lambda.len() + 1);
    let mut acc = Neumaier::new();
    breakpoints.push(0.0);
    for &l in &lambda {
        acc.add(l);
        breakpoints.push(acc.value());
    }
    Ok(Rearrangement { k, lambda, breakpoints })
}

/// Largest scale of a plan for the given operator.
fn plan_scales(ts: &ThinSet, plan: &ScalePlan, op: Op) -> Result<Vec<u64>, OpError> {
    let max = match op {
        Op::SmoothDyadic => ts.horizon() / 4,
        _ => ts.horizon(),
    };
    if max == 0 {
        return Err(OpError::EmptyPlan);
    }
    let plan = match (op, plan) {
        (Op::SmoothDyadic, ScalePlan::AllT) => ScalePlan::Dyadic,
        _ => *plan,
    };
    let mut scales = plan.scales(max)?;
    if matches!(op, Op::M | Op::A) {
        scales.retain(|&t| ts.count_unchecked(t) > 0);
    }
    if scales.is_empty() {
        return Err(OpError::EmptyPlan);
    }
    Ok(scales)
}

/// `sup_t op_t |f|(x)` over the plan's scales, on
/// `[offset(f) + 1, end(f) + T]` with `T` the largest support reach.
///
/// For `AllT` the supremum is taken exactly: along each `x` the running
/// numerator changes only at scales `s = x - p` with `p` in the support of
/// `f`, while the normalizer is nondecreasing, so the supremum is attained at
/// one of those scales.
pub fn maximal(ts: &ThinSet, f: &Signal, plan: &ScalePlan, op: Op) -> Result<Signal, OpError> {
    let scales = plan_scales(ts, plan, op)?;
    let g = f.abs();
    if *plan == ScalePlan::AllT && op != Op::SmoothDyadic {
        return Ok(maximal_all_t(ts, &g, *scales.last().unwrap(), op));
    }
    let reach = match op {
        Op::SmoothDyadic => 4 * scales.last().unwrap() - 1,
        _ => *scales.last().unwrap(),
    };
    let lo = g.offset + 1;
    let len = g.len() + reach as usize;
    let mut out = vec![0.0f64; len];
    let per_scale: Vec<Signal> = scales.par_iter().map(|&t| apply(ts, &g, t, op)).collect::<Result<_, _>>()?;
    for s in per_scale {
        for (i, &v) in s.values.iter().enumerate() {
            let x = s.offset + i as i64;
            let j = x - lo;
            if j >= 0 && (j as usize) < len && v > out[j as usize] {
                out[j as usize] = v;
            }
        }
    }
    Ok(Signal::new(lo, out))
}

fn maximal_all_t(ts: &ThinSet, g: &Signal, t_max: u64, op: Op) -> Signal {
    let atoms: Vec<(i64, f64)> = g.nonzeros().collect();
    let lo = g.offset + 1;
    let len = g.len() + t_max as usize;
    let first = ts.elements().first().copied().unwrap_or(u64::MAX);
    let values = (0..len)
        .into_par_iter()
        .map(|i| {
            let x = lo + i as i64;
            let mut acc = Neumaier::new();
            let mut best = 0.0f64;
            // Scales below the first element of B are not admissible for the
            // |B_t|-normalized operators; their mass enters at t = first.
            let gate = matches!(op, Op::A);
            let mut pending = false;
            for &(p, v) in atoms.iter().rev() {
                let s = x - p;
                if s < 1 {
                    continue;
                }
                let s = s as u64;
                if s > t_max {
                    break;
                }
                if gate && pending && s > first {
                    best = best.max(acc.value() / norm(ts, op, first));
                    pending = false;
                }
                let w = weight(ts, op, s);
                if w == 0.0 {
                    continue;
                }
                acc.add(w * v);
                if gate && s < first {
                    pending = true;
                    continue;
                }
                best = best.max(acc.value() / norm(ts, op, s));
            }
            if gate && pending && first <= t_max {
                best = best.max(acc.value() / norm(ts, op, first));
            }
            best
        })
        .collect();
    Signal::new(lo, values)
}

/// `sup_t op_t |f|` by evaluating every scale of the plan separately.
pub fn maximal_brute_force(ts: &ThinSet, f: &Signal, plan: &ScalePlan, op: Op) -> Result<Signal, OpError> {
    let scales = plan_scales(ts, plan, op)?;
    let g = f.abs();
    let reach = match op {
        Op::SmoothDyadic => 4 * scales.last().unwrap() - 1,
        _ => *scales.last().unwrap(),
    };
    let lo = g.offset + 1;
    let mut out = vec![0.0f64; g.len() + reach as usize];
    for &t in &scales {
        let s = apply(ts, &g, t, op)?;
        for (i, &v) in s.values.iter().enumerate() {
            let j = s.offset + i as i64 - lo;
            if j >= 0 && (j as usize) < out.len() {
                out[j as usize] = out[j as usize].max(v);
            }
        }
    }
    Ok(Signal::new(lo, out))
}

/// Exponents of the norm tables.
pub const P_GRID: [f64; 5] = [1.25, 1.5, 2.0, 3.0, 4.0];

/// `(sum |v|^p)^(1/p)`.
pub fn lp_norm(values: &[f64], p: f64) -> f64 {
    crate::sum::sum(values.iter().map(|v| v.abs().powf(p))).powf(1.0 / p)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Variation {
    pub value: f64,
    /// False when `value` is the `l^1` upper bound rather than the exact
    /// 2-variation.
    pub exact: bool,
}

/// Length up to which the 2-variation is computed exactly.
pub const V2_EXACT_MAX: usize = 512;

/// `sup_{t_0 < ... < t_J} (sum_j |a_{t_{j+1}} - a_{t_j}|^2)^{1/2}`.
///
/// Exact `O(n^2)` dynamic programme over the best chain ending at each index
/// for `n <= 512`; beyond that the bound `sum |a_{i+1} - a_i|`.
pub fn variation2(seq: &[f64]) -> Variation {
    if seq.len() <= V2_EXACT_MAX {
        Variation { value: variation2_exact(seq), exact: true }
    } else {
        Variation { value: l1_increments(seq), exact: false }
    }
}

pub fn variation2_exact(seq: &[f64]) -> f64 {
    let n = seq.len();
    let mut best = vec![0.0f64; n];
    let mut overall = 0.0f64;
    for i in 1..n {
        let mut b = 0.0f64;
        for j in 0..i {
            let d = seq[i] - seq[j];
            b = b.max(best[j] + d * d);
        }
        best[i] = b;
        overall = overall.max(b);
    }
    overall.sqrt()
}

pub fn l1_increments(seq: &[f64]) -> f64 {
    crate::sum::sum(seq.windows(2).map(|w| (w[1] - w[0]).abs()))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OscillationReport {
    pub op: Op,
    pub cuts: Vec<u64>,
    /// `O^2_{I,J}` at every `x`.
    pub o2: Signal,
    /// `(p, ||O^2||_p, ||f||_p)` for `p` in [`P_GRID`].
    pub norms: Vec<(f64, f64, f64)>,
    /// Per-`x` 2-variation along the effective scales in `[I_0, I_J)`.
    pub v2: Option<Vec<Variation>>,
    /// Per-`x` `sum |a_{t+1} - a_t|` along the same scales.
    pub l1: Option<Vec<f64>>,
}

/// `O^2_{I,J}(a_t(x) : t)(x) = (sum_j sup_{t in [I_j, I_{j+1})} |a_t(x) - a_{I_j}(x)|^2)^{1/2}`.
///
/// The inner supremum runs over the scales at which `a_t` can change: `t in B`
/// (and `t = I_j`) for `M`, every integer for `A`, `D` and `H`.
pub fn oscillation(ts: &ThinSet, f: &Signal, cuts: &[u64], op: Op, with_variation: bool) -> Result<OscillationReport, OpError> {
    if cuts.len() < 2 {
        return Err(OpError::BadCutPoints("need at least two cut points".into()));
    }
    if cuts[0] == 0 || cuts.windows(2).any(|w| w[1] <= w[0]) {
        return Err(OpError::BadCutPoints(format!("{cuts:?} is not strictly increasing from 1")));
    }
    if op == Op::SmoothDyadic {
        return Err(OpError::BadCutPoints("oscillation is defined for M, A, D and H".into()));
    }
    let t_end = *cuts.last().unwrap();
    if t_end > ts.horizon() {
        return Err(OpError::OutOfHorizon { t: t_end, horizon: ts.horizon() });
    }
    if matches!(op, Op::M | Op::A) && ts.count_unchecked(cuts[0]) == 0 {
        return Err(OpError::BadCutPoints(format!("B ∩ [1, {}] is empty", cuts[0])));
    }
    // Scales used: [I_0, I_J) (the last cut point closes the last window).
    let lo = f.offset + 1;
    let len = f.len() + t_end as usize;
    let effective: Vec<bool> = (0..t_end)
        .map(|t| t > 0 && (op != Op::M || ts.contains(t as i64) || cuts.contains(&t)))
        .collect();
    let rows: Vec<(f64, Option<Variation>, Option<f64>)> = (0..len)
        .into_par_iter()
        .map(|i| {
            let x = lo + i as i64;
            let mut acc = Neumaier::new();
            let mut total = 0.0f64;
            let mut window = 0usize;
            let mut base = 0.0f64;
            let mut sup = 0.0f64;
            let mut seq = Vec::new();
            for t in 1..t_end {
                let w = weight(ts, op, t);
                if w != 0.0 {
                    acc.add(w * f.get(x - t as i64));
                }
                if t < cuts[0] {
                    continue;
                }
                if window + 1 < cuts.len() && t == cuts[window + 1] {
                    total += sup * sup;
                    window += 1;
                    sup = 0.0;
                }
                if !effective[t as usize] {
                    continue;
                }
                let a = acc.value() / norm(ts, op, t);
                if t == cuts[window] {
                    base = a;
                }
                sup = sup.max((a - base).abs());
                if with_variation {
                    seq.push(a);
                }
            }
            total += sup * sup;
            let v = with_variation.then(|| variation2(&seq));
            let l1 = with_variation.then(|| l1_increments(&seq));
            (total.sqrt(), v, l1)
        })
        .collect();
    let o2 = Signal::new(lo, rows.iter().map(|r| r.0).collect());
    let norms = P_GRID.iter().map(|&p| (p, lp_norm(&o2.values, p), lp_norm(&f.values, p))).collect();
    let (v2, l1) = if with_variation {
        (Some(rows.iter().map(|r| r.1.unwrap()).collect()), Some(rows.iter().map(|r| r.2.unwrap()).collect()))
    } else {
        (None, None)
    };
    Ok(OscillationReport { op, cuts: cuts.to_vec(), o2, norms, v2, l1 })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VectorMaximalRow {
    pub p: f64,
    /// `|| (sum_j (M |f_j|)^2)^{1/2} ||_p`.
    pub lhs_norm: f64,
    /// `|| (sum_j |f_j|^2)^{1/2} ||_p`.
    pub rhs_norm: f64,
    pub ratio: f64,
}

/// Square-function norms of the maximal functions of a family of signals.
pub fn vector_maximal(ts: &ThinSet, fs: &[Signal], plan: &ScalePlan, op: Op) -> Result<Vec<VectorMaximalRow>, OpError> {
    if fs.is_empty() {
        return Err(OpError::EmptyInput);
    }
    let maxes: Vec<Signal> = fs.iter().map(|f| maximal(ts, f, plan, op)).collect::<Result<_, _>>()?;
    let lo = fs.iter().map(|f| f.offset).chain(maxes.iter().map(|m| m.offset)).min().unwrap();
    let hi = fs.iter().map(|f| f.end()).chain(maxes.iter().map(|m| m.end())).max().unwrap();
    let square = |sigs: &[Signal]| -> Vec<f64> {
        (lo..=hi)
            .map(|x| crate::sum::sum(sigs.iter().map(|s| s.get(x) * s.get(x))).sqrt())
            .collect()
    };
    let lhs = square(&maxes);
    let rhs = square(fs);
    Ok(P_GRID
        .iter()
        .map(|&p| {
            let l = lp_norm(&lhs, p);
            let r = lp_norm(&rhs, p);
            VectorMaximalRow { p, lhs_norm: l, rhs_norm: r, ratio: l / r }
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::thinset::{enumerate, registry_get};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn powers(n: u64) -> ThinSet {
        enumerate(&registry_get("powers1.5").unwrap(), n).unwrap()
    }

    fn random_signal(rng: &mut ChaCha8Rng, len: usize, density: f64) -> Signal {
        let off = rng.gen_range(-50..50);
        Signal::new(off, (0..len).map(|_| if rng.gen_bool(density) { rng.gen_range(-3.0..3.0) } else { 0.0 }).collect())
    }

    #[test]
    fn m_of_delta_on_powers() {
        let ts = powers(40);
        let m = apply_m(&ts, &Signal::delta(0, 1.0), 20).unwrap();
        for x in 1..=20 {
            let want = if [1, 2, 5, 8, 11, 14, 18].contains(&x) { 1.0 / 7.0 } else { 0.0 };
            assert_eq!(m.get(x), want);
        }
        let m = apply_m(&ts, &Signal::delta(0, 1.0), 5).unwrap();
        for x in [1, 2, 5] {
            assert_eq!(m.get(x), 1.0 / 3.0);
        }
    }

    #[test]
    fn averages_of_constants() {
        let ts = enumerate(&registry_get("pow1.25").unwrap(), 4096).unwrap();
        let f = Signal::new(0, vec![2.5; 3000]);
        let t = 500;
        for (op, factor) in [
            (Op::M, 1.0),
            (Op::D, 1.0),
            (Op::H, 1.0),
            (Op::A, ts.psi_sum(t).unwrap() / ts.count(t).unwrap() as f64),
        ] {
            let g = apply(&ts, &f, t, op).unwrap();
            for x in (t as i64 + 1)..3000 {
                assert!((g.get(x) - 2.5 * factor).abs() < 1e-12, "{op:?}");
            }
        }
    }

    #[test]
    fn h_of_delta() {
        let h = apply_h(&Signal::delta(0, 1.0), 4).unwrap();
        for x in -2..8 {
            assert_eq!(h.get(x), if (1..=4).contains(&x) { 0.25 } else { 0.0 });
        }
        let f = Signal::new(3, vec![1.0, 2.0, 3.0]);
        assert_eq!(apply_h(&f, 1).unwrap().values, vec![1.0, 2.0, 3.0, 0.0]);
    }

    #[test]
    fn empty_set_and_plan_errors() {
        let ts = enumerate(&registry_get("pow_explog0.5").unwrap(), 100).unwrap();
        assert!(ts.count(1).unwrap() == 0);
        assert_eq!(apply_m(&ts, &Signal::delta(0, 1.0), 1).unwrap_err(), OpError::EmptySet { t: 1 });
        assert_eq!(ScalePlan::TauDyadic { tau: 0.7 }.scales(100).unwrap_err(), OpError::InvalidTau(0.7));
        assert_eq!(ScalePlan::Dyadic.scales(0).unwrap_err(), OpError::EmptyPlan);
    }

    #[test]
    fn scale_plans() {
        assert_eq!(ScalePlan::Dyadic.scales(20).unwrap(), vec![1, 2, 4, 8, 16]);
        let s = ScalePlan::TauDyadic { tau: 0.4 }.scales(1 << 20).unwrap();
        assert!(s.windows(2).all(|w| w[0] < w[1]));
        assert_eq!(s[0], 1);
        assert!(ScalePlan::TauDyadic { tau: 0.2 }.tau_admissible_for(1.5));
        assert!(!ScalePlan::TauDyadic { tau: 0.3 }.tau_admissible_for(1.5));
        assert_eq!("tau_dyadic:0.25".parse::<ScalePlan>().unwrap(), ScalePlan::TauDyadic { tau: 0.25 });
    }

    #[test]
    fn lambda_weights_basics() {
        let ts = enumerate(&registry_get("pow1.25").unwrap(), 20_000).unwrap();
        let l1 = lambda_weights(&ts, 1).unwrap();
        assert_eq!(l1, vec![1.0]);
        let l = lambda_weights(&ts, 10_000).unwrap();
        assert!(l.iter().all(|&v| v >= 0.0));
        assert!((crate::sum::sum(l.iter().copied()) - 1.0).abs() <= 1e-12);
    }

    #[test]
    fn d_k_three_routes() {
        let ts = enumerate(&registry_get("pow1.25").unwrap(), 4096).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for k in [1u64, 2, 37, 1024] {
            let f = random_signal(&mut rng, 300, 0.3);
            let d = apply_d(&ts, &f, k).unwrap();
            let via_h = dk_via_hk(&ts, &f, k).unwrap();
            let r = rearrangement_nk(&ts, k).unwrap();
            let quad = r.integrate_h(&f);
            let scale = f.values.iter().fold(0.0f64, |m, v| m.max(v.abs()));
            assert!(worst_deviation(&d, &via_h).1 <= 1e-10 * scale);
            assert!(worst_deviation(&d, &quad).1 <= 1e-10 * scale);
        }
        let f = Signal::new(0, vec![1.5, -2.0, 4.0]);
        let one = dk_via_hk(&ts, &f, 1).unwrap();
        assert_eq!(one.values[..3], [1.5, -2.0, 4.0]);
    }

    #[test]
    fn rearrangement_pieces() {
        let ts = enumerate(&registry_get("pow1.25").unwrap(), 4096).unwrap();
        let r = rearrangement_nk(&ts, 1).unwrap();
        assert_eq!(r.n_at(0.0), 1);
        assert_eq!(r.n_at(0.999), 1);
        let r = rearrangement_nk(&ts, 500).unwrap();
        for s in 1..=500usize {
            let piece = r.breakpoints[s] - r.breakpoints[s - 1];
            assert!((piece - r.lambda[s - 1]).abs() <= 1e-15);
        }
        let mut prev = 0;
        for i in 0..1000 {
            let n = r.n_at(i as f64 / 1000.0);
            assert!(n >= prev);
            prev = n;
        }
    }

    #[test]
    fn maximal_of_delta() {
        let ts = enumerate(&registry_get("pow1.05").unwrap(), 2048).unwrap();
        let m = maximal(&ts, &Signal::delta(0, 1.0), &ScalePlan::AllT, Op::M).unwrap();
        for x in 1..=2048i64 {
            let want = if ts.contains(x) { 1.0 / ts.count(x as u64).unwrap() as f64 } else { 0.0 };
            assert_eq!(m.get(x), want);
        }
    }

    #[test]
    fn all_t_maximal_matches_brute_force() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for name in ["pow1.05", "powers1.5", "pow_explog0.5"] {
            let ts = enumerate(&registry_get(name).unwrap(), 1 << 9).unwrap();
            for _ in 0..3 {
                let f = random_signal(&mut rng, 40, 0.4);
                for op in [Op::M, Op::A, Op::D, Op::H] {
                    let a = maximal(&ts, &f, &ScalePlan::AllT, op).unwrap();
                    let b = maximal_brute_force(&ts, &f, &ScalePlan::AllT, op).unwrap();
                    let scale = f.values.iter().fold(0.0f64, |m, v| m.max(v.abs()));
                    assert!(worst_deviation(&a, &b).1 <= 1e-12 * scale, "{name} {op:?}");
                }
            }
        }
    }

    #[test]
    fn constant_input_maximal_is_one_inside() {
        let ts = enumerate(&registry_get("pow1.25").unwrap(), 1 << 10).unwrap();
        let f = Signal::new(0, vec![1.0; 4096]);
        for op in [Op::M, Op::D, Op::H] {
            let m = maximal(&ts, &f, &ScalePlan::Dyadic, op).unwrap();
            for x in 1100..4000 {
                assert!((m.get(x) - 1.0).abs() < 1e-12, "{op:?}");
            }
        }
    }

    #[test]
    fn maximal_is_dominated_by_smooth_dyadic() {
        let ts = enumerate(&registry_get("pow1.05").unwrap(), 1 << 12).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let mut worst = 0.0f64;
        for _ in 0..5 {
            let f = random_signal(&mut rng, 64, 0.3);
            let m = maximal(&ts, &f, &ScalePlan::AllT, Op::M).unwrap();
            let sd = maximal(&ts, &f, &ScalePlan::Dyadic, Op::SmoothDyadic).unwrap();
            // Compare where both operators see their full range of scales.
            for x in m.offset..=(f.end() + 512) {
                if m.get(x) > 0.0 {
                    worst = worst.max(m.get(x) / sd.get(x));
                }
            }
        }
        assert!(worst.is_finite() && worst < 8.0, "{worst}");
    }

    #[test]
    fn variation_dp_against_brute_force() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..50 {
            let seq: Vec<f64> = (0..8).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let mut best = 0.0f64;
            for mask in 0u32..256 {
                let sub: Vec<f64> = (0..8).filter(|i| mask >> i & 1 == 1).map(|i| seq[i]).collect();
                let s: f64 = sub.windows(2).map(|w| (w[1] - w[0]).powi(2)).sum();
                best = best.max(s);
            }
            assert!((variation2_exact(&seq) - best.sqrt()).abs() < 1e-12);
        }
        assert_eq!(variation2(&[1.0; 10]).value, 0.0);
        let v = variation2_exact(&[0.0, 1.0, 3.0]);
        assert_eq!(v, 3.0);
        assert!(v >= (1.0f64 + 4.0).sqrt());
        let long: Vec<f64> = (0..600).map(|i| (i as f64).sin()).collect();
        assert!(!variation2(&long).exact);
    }

    #[test]
    fn oscillation_basics() {
        let ts = powers(64);
        let c = Signal::new(-100, vec![3.0; 300]);
        let r = oscillation(&ts, &c, &[1, 4, 16, 32], Op::M, true).unwrap();
        for x in 0..150 {
            assert!(r.o2.get(x).abs() < 1e-12);
        }
        assert!(matches!(oscillation(&ts, &c, &[4, 4], Op::M, false), Err(OpError::BadCutPoints(_))));
        // Delta at the origin, windows [1,2) and [2,5): hand computation.
        let r = oscillation(&ts, &Signal::delta(0, 1.0), &[1, 2, 5], Op::M, true).unwrap();
        // Window [2,5) uses scales 2 (base) and 5 is excluded; only t = 2 is effective.
        // Window [1,2) contains only t = 1.
        for x in 0..10 {
            assert_eq!(r.o2.get(x), 0.0);
        }
        let r = oscillation(&ts, &Signal::delta(0, 1.0), &[1, 2, 6], Op::M, true).unwrap();
        // In [2,6): M_2 delta(x) = 1/2 on {1,2}; M_5 delta = 1/3 on {1,2,5}.
        assert!((r.o2.get(1) - (0.5 - 1.0 / 3.0)).abs() < 1e-15);
        assert!((r.o2.get(5) - 1.0 / 3.0).abs() < 1e-15);
        assert_eq!(r.o2.get(3), 0.0);
    }

    #[test]
    fn oscillation_below_variation_below_l1() {
        let ts = enumerate(&registry_get("pow1.05").unwrap(), 1024).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        for op in [Op::M, Op::D, Op::H] {
            let f = random_signal(&mut rng, 50, 0.5);
            let r = oscillation(&ts, &f, &[1, 4, 16, 64, 256], op, true).unwrap();
            let v2 = r.v2.as_ref().unwrap();
            let l1 = r.l1.as_ref().unwrap();
            for (i, o) in r.o2.values.iter().enumerate() {
                assert!(*o <= v2[i].value + 1e-12);
                assert!(v2[i].value <= l1[i] + 1e-12);
            }
        }
    }

    #[test]
    fn vector_maximal_of_shifted_deltas() {
        let ts = enumerate(&registry_get("pow1.05").unwrap(), 1 << 10).unwrap();
        let single = vector_maximal(&ts, &[Signal::delta(0, 1.0)], &ScalePlan::AllT, Op::M).unwrap();
        let fs: Vec<Signal> = (0..4).map(|j| Signal::delta(5000 * j, 1.0)).collect();
        let many = vector_maximal(&ts, &fs, &ScalePlan::AllT, Op::M).unwrap();
        for (a, b) in single.iter().zip(&many) {
            assert!((a.ratio - b.ratio).abs() <= 1e-12 * a.ratio);
        }
        assert_eq!(vector_maximal(&ts, &[], &ScalePlan::AllT, Op::M).unwrap_err(), OpError::EmptyInput);
    }
}
