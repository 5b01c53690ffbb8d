//! Dyadic Calderón–Zygmund decomposition on the integers, its refinement
//! by thresholds `d_n`, `D_n`, the weak-type statistic of the maximal
//! function along `B`, and measured surrogates of the hypotheses of the
//! abstract weak-type theorem for the smooth dyadic kernels.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::fit::{linear_fit, loglog_fit, spread, LineFit};
use crate::kernels::{gn_en_split, KernelError};
use crate::operators::{maximal, Op, OpError, ScalePlan};
use crate::regvar::Family;
use crate::signal::Signal;
use crate::sum::{sum, Neumaier};
use crate::thinset::ThinSet;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum CzdError {
    #[error("alpha = {0} must be positive and finite")]
    InvalidAlpha(f64),
    #[error("no dyadic root of side up to 2^62 has average at most alpha = {alpha}")]
    AlphaTooSmall { alpha: f64 },
    #[error("thresholds must satisfy d_n >= 1 and D_n >= 1 (got {d_n}, {big_d_n})")]
    InvalidThreshold { d_n: f64, big_d_n: f64 },
    #[error("invariant `{name}` violated: {detail}")]
    Invariant { name: &'static str, detail: String },
    #[error(transparent)]
    Op(#[from] OpError),
    #[error(transparent)]
    Kernel(#[from] KernelError),
}

/// Relative slack for norm comparisons.
pub const SLACK: f64 = 1e-12;

/// `Q_{s,j} = [j 2^s, (j + 1) 2^s)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Cube {
    pub s: u32,
    pub j: i64,
}

impl Cube {
    pub fn start(&self) -> i64 {
        self.j << self.s
    }

    pub fn side(&self) -> i64 {
        1i64 << self.s
    }

    /// Last point (inclusive).
    pub fn last(&self) -> i64 {
        self.start() + self.side() - 1
    }

    pub fn parent(&self) -> Cube {
        Cube { s: self.s + 1, j: self.j.div_euclid(2) }
    }

    pub fn contains(&self, x: i64) -> bool {
        x.div_euclid(self.side()) == self.j
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CZDecomposition {
    pub f: Signal,
    pub alpha: f64,
    /// Level of the root cubes the stopping time starts from.
    pub root_level: u32,
    /// Selected cubes in increasing position.
    pub cubes: Vec<Cube>,
    /// `g` and `b` share one window covering `f` and every cube.
    pub g: Signal,
    pub b: Signal,
}

fn abs_mass(f: &Signal, lo: i64, hi: i64) -> f64 {
    let a = lo.max(f.offset);
    let z = hi.min(f.end());
    if a > z {
        return 0.0;
    }
    sum(f.values[(a - f.offset) as usize..=(z - f.offset) as usize].iter().map(|v| v.abs()))
}

fn signed_mass(f: &Signal, lo: i64, hi: i64) -> f64 {
    let a = lo.max(f.offset);
    let z = hi.min(f.end());
    if a > z {
        return 0.0;
    }
    sum(f.values[(a - f.offset) as usize..=(z - f.offset) as usize].iter().copied())
}

/// `[|f|]_Q > alpha`, i.e. `sum_Q |f| > alpha 2^s` (scaling by `2^s` is exact).
fn exceeds(f: &Signal, q: Cube, alpha: f64) -> bool {
    abs_mass(f, q.start(), q.last()) > alpha * q.side() as f64
}

/// Stopping-time selection of the maximal dyadic cubes with `[|f|]_Q > alpha`.
///
/// The roots are the level-`s0` cubes meeting the support of `f`, with `s0`
/// the least level at which all of them have average at most `alpha`. A tie
/// `[|f|]_Q = alpha` does not select the cube. All invariants are checked
/// before returning.
pub fn cz_decompose(f: &Signal, alpha: f64) -> Result<CZDecomposition, CzdError> {
    if !(alpha > 0.0 && alpha.is_finite()) {
        return Err(CzdError::InvalidAlpha(alpha));
    }
    let f = f.trimmed();
    let Some((lo, hi)) = f.support() else {
        return Ok(CZDecomposition {
            g: f.clone(),
            b: Signal::zeros(f.offset, f.len()),
            f,
            alpha,
            root_level: 0,
            cubes: Vec::new(),
        });
    };
    let roots_at = |s: u32| -> Vec<Cube> {
        let side = 1i64 << s;
        (lo.div_euclid(side)..=hi.div_euclid(side)).map(|j| Cube { s, j }).collect()
    };
    let mut root_level = None;
    for s in 0..=62u32 {
        let side = 1i64 << s;
        // Until the side covers the support there are many roots; all must pass.
        if (hi.div_euclid(side) - lo.div_euclid(side)) > (1 << 20) {
            continue;
        }
        if roots_at(s).iter().all(|&q| !exceeds(&f, q, alpha)) {
            root_level = Some(s);
            break;
        }
    }
    let root_level = root_level.ok_or(CzdError::AlphaTooSmall { alpha })?;
    let mut cubes = Vec::new();
    let mut stack: Vec<Cube> = roots_at(root_level).into_iter().rev().collect();
    while let Some(q) = stack.pop() {
        if q.s == 0 || abs_mass(&f, q.start(), q.last()) == 0.0 {
            continue;
        }
        // Right child pushed first so that selection proceeds left to right.
        for child in [Cube { s: q.s - 1, j: 2 * q.j + 1 }, Cube { s: q.s - 1, j: 2 * q.j }] {
            if exceeds(&f, child, alpha) {
                cubes.push(child);
            } else {
                stack.push(child);
            }
        }
    }
    cubes.sort_by_key(|q| q.start());
    let w_lo = cubes.iter().map(|q| q.start()).chain([lo]).min().unwrap();
    let w_hi = cubes.iter().map(|q| q.last()).chain([hi]).max().unwrap();
    let len = (w_hi - w_lo + 1) as usize;
    let mut g = Signal::new(w_lo, (w_lo..=w_hi).map(|x| f.get(x)).collect());
    let mut b = Signal::zeros(w_lo, len);
    for q in &cubes {
        let avg = signed_mass(&f, q.start(), q.last()) / q.side() as f64;
        for x in q.start()..=q.last() {
            let i = (x - w_lo) as usize;
            g.values[i] = avg;
            b.values[i] = f.get(x) - avg;
        }
    }
    let dec = CZDecomposition { f, alpha, root_level, cubes, g, b };
    dec.check_invariants()?;
    Ok(dec)
}

fn violation(name: &'static str, detail: String) -> CzdError {
    CzdError::Invariant { name, detail }
}

impl CZDecomposition {
    /// `b_{s,j} = (f - [f]_Q) 1_Q` for the `i`-th cube.
    pub fn piece(&self, i: usize) -> Signal {
        let q = self.cubes[i];
        Signal::new(q.start(), (q.start()..=q.last()).map(|x| self.b.get(x)).collect())
    }

    /// Levels carrying at least one cube, increasing.
    pub fn levels(&self) -> Vec<u32> {
        let mut l: Vec<u32> = self.cubes.iter().map(|q| q.s).collect();
        l.sort_unstable();
        l.dedup();
        l
    }

    /// `b_s = sum_j b_{s,j}` on the common window.
    pub fn b_level(&self, s: u32) -> Signal {
        let mut out = Signal::zeros(self.b.offset, self.b.len());
        for q in self.cubes.iter().filter(|q| q.s == s) {
            for x in q.start()..=q.last() {
                out.values[(x - out.offset) as usize] = self.b.get(x);
            }
        }
        out
    }

    pub fn total_cube_size(&self) -> u128 {
        self.cubes.iter().map(|q| q.side() as u128).sum()
    }

    /// The decomposition invariants, with [`SLACK`] on floating comparisons.
    pub fn check_invariants(&self) -> Result<(), CzdError> {
        let f = &self.f;
        let alpha = self.alpha;
        let f_inf = f.values.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        let f_l1 = f.l1();
        for (i, (&g, &b)) in self.g.values.iter().zip(&self.b.values).enumerate() {
            let x = self.g.offset + i as i64;
            if (g + b - f.get(x)).abs() > SLACK * f_inf {
                return Err(violation("f = g + b", format!("x = {x}")));
            }
        }
        let g_l1 = self.g.l1();
        if g_l1 > f_l1 * (1.0 + SLACK) {
            return Err(violation("|g|_1 <= |f|_1", format!("{g_l1} > {f_l1}")));
        }
        let g_inf = self.g.values.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        if g_inf > 2.0 * alpha * (1.0 + SLACK) {
            return Err(violation("|g|_inf <= 2 alpha", format!("{g_inf} > {}", 2.0 * alpha)));
        }
        for (i, q) in self.cubes.iter().enumerate() {
            let piece = self.piece(i);
            let local = abs_mass(f, q.start(), q.last());
            let mean = piece.sum();
            if mean.abs() > SLACK * local.max(f64::MIN_POSITIVE) * 4.0 {
                return Err(violation("mean zero", format!("cube {q:?}: sum {mean:e}")));
            }
            let l1 = piece.l1();
            if l1 > 4.0 * alpha * q.side() as f64 * (1.0 + SLACK) {
                return Err(violation("|b_Q|_1 <= 4 alpha |Q|", format!("cube {q:?}: {l1}")));
            }
            if !exceeds(f, *q, alpha) {
                return Err(violation("selected cubes have average > alpha", format!("{q:?}")));
            }
            if q.s < self.root_level && exceeds(f, q.parent(), alpha) {
                return Err(violation("parents have average <= alpha", format!("{q:?}")));
            }
        }
        for w in self.cubes.windows(2) {
            if w[1].start() <= w[0].last() {
                return Err(violation("cubes disjoint", format!("{:?} and {:?}", w[0], w[1])));
            }
        }
        let size = self.total_cube_size() as f64;
        if size > f_l1 / alpha * (1.0 + SLACK) {
            return Err(violation("sum |Q| <= |f|_1 / alpha", format!("{size} > {}", f_l1 / alpha)));
        }
        Ok(())
    }
}

/// The pieces at level `s` for one threshold pair.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LevelSplit {
    pub s: u32,
    /// `b_s^n = b_s 1_{|b_s| > alpha d_n}`.
    pub b_sn: Signal,
    /// `h_s^n = b_s - b_s^n`.
    pub h_sn: Signal,
    /// `g_s^n = sum_j [h_s^n]_{Q_{s,j}} 1_{Q_{s,j}}`.
    pub g_sn: Signal,
    /// `B_s^n = h_s^n - g_s^n`.
    pub bb_sn: Signal,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Refinement {
    pub d_n: f64,
    pub big_d_n: f64,
    /// `s(n) = min { s : 2^s >= D_n }`.
    pub s_n: u32,
    pub levels: Vec<LevelSplit>,
    /// `g + sum_s g_s^n`.
    pub good: Signal,
    /// `sum_s b_s^n`.
    pub bad: Signal,
    /// `sum_{s < s(n)} B_s^n`.
    pub small: Signal,
    /// `sum_{s >= s(n)} B_s^n`.
    pub large: Signal,
}

impl Refinement {
    /// `good + bad + small + large`.
    pub fn reconstruct(&self) -> Signal {
        let v = (0..self.good.len())
            .map(|i| sum([self.good.values[i], self.bad.values[i], self.small.values[i], self.large.values[i]]))
            .collect();
        Signal::new(self.good.offset, v)
    }
}

/// Splits every `b_s` at height `alpha d_n` and re-centres the remainder on
/// the cubes of level `s`; all per-level invariants and the four-way
/// reconstruction are checked before returning.
pub fn refine(dec: &CZDecomposition, d_n: f64, big_d_n: f64) -> Result<Refinement, CzdError> {
    if !(d_n >= 1.0 && big_d_n >= 1.0 && d_n.is_finite() && big_d_n.is_finite()) {
        return Err(CzdError::InvalidThreshold { d_n, big_d_n });
    }
    let mut s_n = 0u32;
    while ((1u64 << s_n) as f64) < big_d_n {
        s_n += 1;
    }
    let off = dec.b.offset;
    let len = dec.b.len();
    let cut = dec.alpha * d_n;
    let mut good = dec.g.clone();
    let mut bad = Signal::zeros(off, len);
    let mut small = Signal::zeros(off, len);
    let mut large = Signal::zeros(off, len);
    let mut levels = Vec::new();
    for s in dec.levels() {
        let b_s = dec.b_level(s);
        let b_sn = Signal::new(off, b_s.values.iter().map(|&v| if v.abs() > cut { v } else { 0.0 }).collect());
        let h_sn = Signal::new(off, b_s.values.iter().zip(&b_sn.values).map(|(a, c)| a - c).collect());
        let mut g_sn = Signal::zeros(off, len);
        for q in dec.cubes.iter().filter(|q| q.s == s) {
            let avg = signed_mass(&h_sn, q.start(), q.last()) / q.side() as f64;
            for x in q.start()..=q.last() {
                g_sn.values[(x - off) as usize] = avg;
            }
        }
        let bb_sn = Signal::new(off, h_sn.values.iter().zip(&g_sn.values).map(|(h, g)| h - g).collect());
        for i in 0..len {
            good.values[i] += g_sn.values[i];
            bad.values[i] += b_sn.values[i];
            if s < s_n {
                small.values[i] += bb_sn.values[i];
            } else {
                large.values[i] += bb_sn.values[i];
            }
        }
        let split = LevelSplit { s, b_sn, h_sn, g_sn, bb_sn };
        check_level(dec, &b_s, &split)?;
        levels.push(split);
    }
    let r = Refinement { d_n, big_d_n, s_n, levels, good, bad, small, large };
    let back = r.reconstruct();
    let f_inf = dec.f.values.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    for (i, v) in back.values.iter().enumerate() {
        let x = back.offset + i as i64;
        if (v - dec.f.get(x)).abs() > SLACK * f_inf * 4.0 {
            return Err(violation("four-way reconstruction", format!("x = {x}")));
        }
    }
    Ok(r)
}

fn check_level(dec: &CZDecomposition, b_s: &Signal, p: &LevelSplit) -> Result<(), CzdError> {
    for i in 0..b_s.len() {
        if p.b_sn.values[i] + p.h_sn.values[i] != b_s.values[i] {
            return Err(violation("b_s^n + h_s^n = b_s", format!("s = {}, x = {}", p.s, b_s.offset + i as i64)));
        }
    }
    let scale = b_s.values.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    for i in 0..b_s.len() {
        if (p.g_sn.values[i] + p.bb_sn.values[i] - p.h_sn.values[i]).abs() > SLACK * scale {
            return Err(violation("h_s^n = g_s^n + B_s^n", format!("s = {}", p.s)));
        }
    }
    for q in dec.cubes.iter().filter(|q| q.s == p.s) {
        let mut mean = Neumaier::new();
        let mut l1 = Neumaier::new();
        for x in q.start()..=q.last() {
            mean.add(p.bb_sn.get(x));
            l1.add(p.bb_sn.get(x).abs());
        }
        let local = abs_mass(&dec.b, q.start(), q.last());
        if mean.value().abs() > 4.0 * SLACK * local.max(f64::MIN_POSITIVE) {
            return Err(violation("B_s^n mean zero", format!("cube {q:?}: {:e}", mean.value())));
        }
        if l1.value() > 4.0 * dec.alpha * q.side() as f64 * (1.0 + SLACK) {
            return Err(violation("|B_s^n 1_Q|_1 <= 4 alpha 2^s", format!("cube {q:?}: {}", l1.value())));
        }
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WeakTypeReport {
    pub f_l1: f64,
    /// `(lambda, |{Mf > lambda}|)`.
    pub level_sets: Vec<(f64, u64)>,
    /// `sup_lambda lambda |{Mf > lambda}| / |f|_1`.
    pub statistic: f64,
    /// Level at which the supremum is approached (from below).
    pub argmax_lambda: f64,
}

/// Exact level sets of `M_B |f|` and the empirical weak-type constant.
///
/// With the values of `Mf` sorted decreasingly, the supremum over `lambda`
/// is `max_i v_(i) i`, approached as `lambda` increases to `v_(i)`.
pub fn weaktype_scan(ts: &ThinSet, f: &Signal, lambdas: &[f64], plan: &ScalePlan) -> Result<WeakTypeReport, CzdError> {
    let m = maximal(ts, f, plan, Op::M)?;
    let mut vals: Vec<f64> = m.values.into_iter().filter(|v| *v > 0.0).collect();
    vals.sort_by(|a, b| b.total_cmp(a));
    let f_l1 = f.l1();
    let mut best = 0.0f64;
    let mut arg = 0.0;
    for (i, &v) in vals.iter().enumerate() {
        let s = v * (i + 1) as f64;
        if s > best {
            best = s;
            arg = v;
        }
    }
    let level_sets = lambdas
        .iter()
        .map(|&l| (l, vals.partition_point(|&v| v > l) as u64))
        .collect();
    Ok(WeakTypeReport { f_l1, level_sets, statistic: if f_l1 > 0.0 { best / f_l1 } else { 0.0 }, argmax_lambda: arg })
}

/// `count` unit deltas of random sign at random positions in `[0, span)`;
/// coinciding positions add up.
pub fn random_deltas(seed: u64, count: usize, span: i64) -> Signal {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let pts: Vec<(i64, f64)> = (0..count).map(|_| (rng.gen_range(0..span), if rng.gen_bool(0.5) { 1.0 } else { -1.0 })).collect();
    Signal::from_sparse(&pts)
}

/// Weak-type statistics of `trials` independent [`random_deltas`] inputs,
/// trial `i` drawn from seed `seed + i`.
pub fn weaktype_trials(ts: &ThinSet, trials: usize, count: usize, span: i64, seed: u64) -> Result<Vec<WeakTypeReport>, CzdError> {
    (0..trials)
        .into_par_iter()
        .map(|i| weaktype_scan(ts, &random_deltas(seed.wrapping_add(i as u64), count, span), &[], &ScalePlan::AllT))
        .collect()
}

/// Measured quantities for one `n`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AbsThmRow {
    pub n: u32,
    /// `ceil(phi_1(2^n))`.
    pub d_n: f64,
    /// `2^(n + 2)`.
    pub big_d_n: f64,
    /// `|supp K_n|` and the largest point of the support.
    pub support_size: u64,
    pub support_max: i64,
    /// `max |K_n * K~_n - F_n|`.
    pub e_max: f64,
    /// `sup_{|x| <= A} d_n F_n(x)`.
    pub near: f64,
    /// `sup_{|x| > A} D_n F_n(x)`.
    pub far: f64,
    /// `max D_n^2 |F_n(x + 1) - F_n(x)|` over `|x|, |x + 1| > d_n`.
    pub lipschitz: f64,
    pub symmetric: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AbsThmHarness {
    pub rows: Vec<AbsThmRow>,
    /// The small-`|x|` cutoff `A`.
    pub a: u64,
    /// Fit of `log max|E_n|` against `log D_n`; `epsilon_1 = -slope - 1`.
    pub e_fit: Option<LineFit>,
    pub epsilon1: f64,
    /// Fit of `log d_n` against `log D_n`.
    pub epsilon0: f64,
    /// `min(d_{n+1} / d_n, D_{n+1} / D_n)` over the probed range.
    pub lacunarity: f64,
    pub far_spread: f64,
    pub lipschitz_spread: f64,
    pub warning: Option<String>,
}

/// Builds `K_n` (smooth dyadic at `2^n`), `F_n` (`K_n * K~_n` on
/// `|x| <= phi_1(2^n)`, `G_{2^n}` beyond) and `E_n` for each `n`, and measures
/// the hypotheses of the abstract weak-type theorem.
pub fn verify_absthm_hypotheses(ts: &ThinSet, ns: &[u32]) -> Result<AbsThmHarness, CzdError> {
    let spec = ts.spec();
    let faithful = spec.h1 == spec.h2
        && matches!(spec.h1.family, Family::Pow | Family::PowLog | Family::PowDivLog)
        && spec.h1.c.is_some_and(|c| c > 1.0 && c < 30.0 / 29.0);
    let warning = (!faithful).then(|| "configuration outside h1 = h2 with 1 < c < 30/29".to_string());
    let mut rows = Vec::new();
    let mut a = 0u64;
    for &n in ns {
        let big_n = 1u64 << n;
        let r = gn_en_split(ts, big_n, 0.0)?;
        a = r.c0;
        let d_n = r.phi1_n.ceil();
        let big_d_n = 4.0 * big_n as f64;
        let kernel = crate::kernels::kernel_smooth_dyadic(ts, big_n)?;
        let support_size = kernel.signal.support_size() as u64;
        let support_max = kernel.signal.support().map_or(0, |s| s.1);
        let f_at = |i: usize| -> f64 {
            let x = r.x_min + i as i64;
            if (x.unsigned_abs() as f64) <= r.phi1_n {
                r.kk[i]
            } else {
                r.g[i]
            }
        };
        let mut near = 0.0f64;
        let mut far = 0.0f64;
        let mut lip = 0.0f64;
        let mut e_max = 0.0f64;
        let mut symmetric = true;
        let len = r.kk.len();
        for i in 0..len {
            let x = r.x_min + i as i64;
            let fx = f_at(i);
            e_max = e_max.max((r.kk[i] - fx).abs());
            if x.unsigned_abs() <= a {
                near = near.max(d_n * fx);
            } else {
                far = far.max(big_d_n * fx);
            }
            if i + 1 < len {
                let (x0, x1) = (x.unsigned_abs() as f64, (x + 1).unsigned_abs() as f64);
                if x0 > d_n && x1 > d_n {
                    lip = lip.max(big_d_n * big_d_n * (f_at(i + 1) - fx).abs());
                }
            }
            if fx != f_at(len - 1 - i) {
                symmetric = false;
            }
        }
        rows.push(AbsThmRow { n, d_n, big_d_n, support_size, support_max, e_max, near, far, lipschitz: lip, symmetric });
    }
    let dd: Vec<f64> = rows.iter().map(|r| r.big_d_n).collect();
    let e_fit = loglog_fit(&dd, &rows.iter().map(|r| r.e_max).collect::<Vec<_>>());
    let epsilon1 = e_fit.map_or(f64::NAN, |f| -f.slope - 1.0);
    let ld: Vec<f64> = dd.iter().map(|v| v.ln()).collect();
    let epsilon0 = linear_fit(&ld, &rows.iter().map(|r| r.d_n.ln()).collect::<Vec<_>>()).map_or(f64::NAN, |f| f.slope);
    let lacunarity = rows
        .windows(2)
        .map(|w| (w[1].d_n / w[0].d_n).min(w[1].big_d_n / w[0].big_d_n))
        .fold(f64::INFINITY, f64::min);
    Ok(AbsThmHarness {
        far_spread: spread(&rows.iter().map(|r| r.far).collect::<Vec<_>>()),
        lipschitz_spread: spread(&rows.iter().map(|r| r.lipschitz).collect::<Vec<_>>()),
        rows,
        a,
        e_fit,
        epsilon1,
        epsilon0,
        lacunarity,
        warning,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::thinset::{enumerate, registry_get};

    #[test]
    fn delta_fixture() {
        let d = cz_decompose(&Signal::delta(0, 1.0), 0.25).unwrap();
        assert_eq!(d.cubes, vec![Cube { s: 1, j: 0 }]);
        assert_eq!(d.g.window(0, 1), vec![0.5, 0.5]);
        assert_eq!(d.b.window(0, 1), vec![0.5, -0.5]);
        assert_eq!(d.root_level, 2);
    }

    #[test]
    fn large_alpha_selects_nothing() {
        let f = Signal::new(-3, vec![1.0, -2.0, 0.5, 0.0, 3.0]);
        let d = cz_decompose(&f, 3.0).unwrap();
        assert!(d.cubes.is_empty());
        assert_eq!(d.g.window(-3, 1), f.values);
        assert!(d.b.values.iter().all(|v| *v == 0.0));
    }

    #[test]
    fn tie_is_not_selected() {
        // [|f|] over {0, 1} is exactly 0.5.
        let f = Signal::new(0, vec![0.5, 0.5]);
        let d = cz_decompose(&f, 0.5).unwrap();
        assert!(d.cubes.is_empty());
    }

    #[test]
    fn support_across_zero() {
        let f = Signal::new(-2, vec![1.0, 0.0, 0.0, 1.0]);
        let d = cz_decompose(&f, 0.1).unwrap();
        assert!(d.check_invariants().is_ok());
        assert!(d.cubes.iter().any(|q| q.start() < 0));
        assert!(d.cubes.iter().any(|q| q.start() >= 0));
    }

    #[test]
    fn random_decompositions_and_refinements() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..100 {
            let len = rng.gen_range(1..300);
            let f = Signal::new(
                rng.gen_range(-500..500),
                (0..len).map(|_| if rng.gen_bool(0.3) { rng.gen_range(-10.0..10.0) } else { 0.0 }).collect(),
            );
            let alpha = 10f64.powf(rng.gen_range(-2.0..1.0));
            let d = cz_decompose(&f, alpha).unwrap();
            let d_n = rng.gen_range(1.0..20.0);
            let r = refine(&d, d_n, rng.gen_range(1.0..100.0)).unwrap();
            assert_eq!(r.levels.len(), d.levels().len());
        }
    }

    #[test]
    fn refine_threshold_above_range() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let f = Signal::new(0, (0..64).map(|_| rng.gen_range(-1.0..1.0)).collect());
        let d = cz_decompose(&f, 0.05).unwrap();
        let b_inf = d.b.values.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        let r = refine(&d, b_inf / 0.05 + 1.0, 8.0).unwrap();
        for l in &r.levels {
            assert!(l.b_sn.values.iter().all(|v| *v == 0.0));
            assert_eq!(l.h_sn, d.b_level(l.s));
        }
        assert!(matches!(refine(&d, 0.0, 4.0), Err(CzdError::InvalidThreshold { .. })));
    }

    #[test]
    fn weak_type_of_delta() {
        let ts = enumerate(&registry_get("pow1.05").unwrap(), 1 << 12).unwrap();
        let r = weaktype_scan(&ts, &Signal::delta(0, 1.0), &[0.5, 0.01], &ScalePlan::AllT).unwrap();
        // Mf(x) = 1 / count(x) on B: values 1, 1/2, 1/3, ...
        let count = ts.count(1 << 12).unwrap();
        assert_eq!(r.level_sets[0].1, 1);
        let want = (1..=count).filter(|&k| 1.0 / k as f64 > 0.01).count() as u64;
        assert_eq!(r.level_sets[1].1, want);
        assert!((r.statistic - 1.0).abs() < 1e-15);
    }

    #[test]
    fn weak_type_invariances() {
        let ts = enumerate(&registry_get("pow1.05").unwrap(), 1 << 12).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let pts: Vec<(i64, f64)> = (0..20).map(|_| (rng.gen_range(0..500), if rng.gen_bool(0.5) { 1.0 } else { -1.0 })).collect();
        let f = Signal::from_sparse(&pts);
        let a = weaktype_scan(&ts, &f, &[], &ScalePlan::AllT).unwrap().statistic;
        let b = weaktype_scan(&ts, &f.scaled(2.0), &[], &ScalePlan::AllT).unwrap().statistic;
        let c = weaktype_scan(&ts, &f.translated(-777), &[], &ScalePlan::AllT).unwrap().statistic;
        assert_eq!(a, b);
        assert_eq!(a, c);
    }

    #[test]
    fn harness_on_pow102() {
        let ts = enumerate(&registry_get("pow1.02").unwrap(), 1 << 14).unwrap();
        let h = verify_absthm_hypotheses(&ts, &[8, 9, 10, 11, 12]).unwrap();
        assert!(h.warning.is_none());
        assert!(h.rows.iter().all(|r| r.symmetric));
        assert!(h.rows.iter().all(|r| r.support_max < r.big_d_n as i64));
        assert!(h.epsilon1 > 0.0, "{}", h.epsilon1);
        assert!(h.far_spread <= 4.0, "{}", h.far_spread);
        assert!(h.lacunarity > 1.0);
        assert!(h.epsilon0 < 1.0);
    }
}
