//! The acceptance battery: thirteen numbered criteria, each evaluated to a
//! pass/fail record with its measured values and thresholds.

use std::collections::BTreeMap;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::czd::{cz_decompose, random_deltas, refine, weaktype_scan, Cube};
use crate::ergodic::{
    birkhoff_average, ergodic_average, multiparam_average, multiparam_average_direct, MultiObservable, MultiRotation, Observable,
    RotationSystem, ShiftSystem, Theta,
};
use crate::expsum::{trest_scan, xi_grid};
use crate::fit::{loglog_fit, spread};
use crate::kernels::gn_en_split;
use crate::operators::{apply_d, apply_m, dk_via_hk, lambda_weights, oscillation, rearrangement_nk, variation2_exact, worst_deviation, Op, ScalePlan};
use crate::signal::Signal;
use crate::sum::sum;
use crate::thinset::{enumerate, registry_get, Evaluator, ThinSet, ThinSetSpec};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    /// Reduced horizons and trial counts, same thresholds.
    Quick,
    /// The stated sizes.
    Full,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Status {
    Pass,
    Fail,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CriterionResult {
    pub criterion_id: String,
    pub status: Status,
    pub measured: BTreeMap<String, f64>,
    pub threshold: BTreeMap<String, f64>,
    /// One-line human summary (not serialized: it may carry timings).
    #[serde(skip)]
    pub summary: String,
}

impl CriterionResult {
    pub fn passed(&self) -> bool {
        self.status == Status::Pass
    }

    /// `C<k> PASS|FAIL <summary>`.
    pub fn line(&self) -> String {
        let s = if self.passed() { "PASS" } else { "FAIL" };
        format!("{} {s} {}", self.criterion_id, self.summary)
    }
}

pub const CRITERIA: u32 = 13;

struct Rec {
    measured: Vec<(&'static str, f64)>,
    threshold: Vec<(&'static str, f64)>,
    pass: bool,
    summary: String,
}

fn finish(id: u32, r: Result<Rec, String>) -> CriterionResult {
    let criterion_id = format!("C{id}");
    match r {
        Ok(r) => CriterionResult {
            criterion_id,
            status: if r.pass { Status::Pass } else { Status::Fail },
            measured: r.measured.into_iter().map(|(k, v)| (k.to_string(), v)).collect(),
            threshold: r.threshold.into_iter().map(|(k, v)| (k.to_string(), v)).collect(),
            summary: r.summary,
        },
        Err(e) => CriterionResult {
            criterion_id,
            status: Status::Fail,
            measured: BTreeMap::new(),
            threshold: BTreeMap::new(),
            summary: format!("error: {e}"),
        },
    }
}

fn spec(name: &str) -> Result<ThinSetSpec, String> {
    registry_get(name).ok_or_else(|| format!("unknown configuration {name}"))
}

fn set(name: &str, horizon: u64) -> Result<ThinSet, String> {
    enumerate(&spec(name)?, horizon).map_err(|e| e.to_string())
}

fn rng(seed: u64, id: u32) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed ^ (0x9E37_79B9_7F4A_7C15u64.wrapping_mul(id as u64 + 1)))
}

fn random_signal(rng: &mut ChaCha8Rng, max_len: usize) -> Signal {
    let len = rng.gen_range(1..=max_len);
    let density = rng.gen_range(0.1..1.0);
    Signal::new(
        rng.gen_range(-1000..1000),
        (0..len).map(|_| if rng.gen_bool(density) { rng.gen_range(-5.0..5.0) } else { 0.0 }).collect(),
    )
}

/// Runs one criterion.
pub fn run_criterion(id: u32, mode: Mode, seed: u64) -> CriterionResult {
    let r = match id {
        1 => c1(mode),
        2 => c2(mode),
        3 => c3(mode),
        4 => c4(mode),
        5 => c5(mode),
        6 => c6(mode),
        7 => c7(mode, seed),
        8 => c8(mode, seed),
        9 => c9(mode, seed),
        10 => c10(mode, seed),
        11 => c11(mode, seed),
        12 => c12(mode, seed),
        13 => c13(seed, None),
        _ => Err(format!("no criterion {id}")),
    };
    finish(id, r)
}

/// Runs criteria 1 to 12, then criterion 13 (which re-runs the quick
/// battery and, in full mode, also bounds the wall time).
pub fn run_all(mode: Mode, seed: u64) -> Vec<CriterionResult> {
    let start = Instant::now();
    let mut out: Vec<CriterionResult> = (1..CRITERIA).map(|id| run_criterion(id, mode, seed)).collect();
    let elapsed = (mode == Mode::Full).then(|| start.elapsed().as_secs_f64());
    let quick = (mode == Mode::Quick).then(|| to_json(&out));
    out.push(finish(13, c13_with(seed, elapsed, quick)));
    out
}

/// The JSON summary: an array of `{criterion_id, status, measured, threshold}`.
pub fn to_json(results: &[CriterionResult]) -> String {
    serde_json::to_string_pretty(results).expect("results serialize")
}

fn quick_battery(seed: u64) -> String {
    to_json(&(1..CRITERIA).map(|id| run_criterion(id, Mode::Quick, seed)).collect::<Vec<_>>())
}

fn c13(seed: u64, elapsed: Option<f64>) -> Result<Rec, String> {
    c13_with(seed, elapsed, None)
}

/// Determinism: the quick battery serializes identically on a second run
/// and on a single-threaded pool.
fn c13_with(seed: u64, elapsed: Option<f64>, first: Option<String>) -> Result<Rec, String> {
    let a = match first {
        Some(a) => a,
        None => quick_battery(seed),
    };
    let pool = rayon::ThreadPoolBuilder::new().num_threads(1).build().map_err(|e| e.to_string())?;
    let b = pool.install(|| quick_battery(seed));
    let identical = a == b;
    let within = elapsed.is_none_or(|t| t <= 900.0);
    let timing = elapsed.map_or(String::new(), |t| format!(", full battery {t:.1} s"));
    Ok(Rec {
        measured: vec![("identical", identical as u8 as f64)],
        threshold: vec![("identical", 1.0), ("full_suite_seconds", 900.0)],
        pass: identical && within,
        summary: format!("quick battery byte-identical across runs and thread counts: {identical}{timing}"),
    })
}

fn c1(mode: Mode) -> Result<Rec, String> {
    let horizon: u64 = if mode == Mode::Full { 1_000_000 } else { 100_000 };
    let start = Instant::now();
    let mut total = 0u64;
    let mut parts = Vec::new();
    for name in ["pow1.05", "pow1.25", "pow_log1.05"] {
        let ev = Evaluator::new(&spec(name)?).map_err(|e| e.to_string())?;
        const CHUNK: u64 = 1 << 14;
        let counts: Vec<u64> = (0..horizon.div_ceil(CHUNK))
            .into_par_iter()
            .map(|k| -> Result<u64, String> {
                let mut bad = 0;
                for n in k * CHUNK + 1..=((k + 1) * CHUNK).min(horizon) {
                    let a = ev.membership(n).map_err(|e| e.to_string())?.in_set;
                    let b = ev.membership_floor_identity(n).map_err(|e| e.to_string())?;
                    bad += (a != b) as u64;
                }
                Ok(bad)
            })
            .collect::<Result<_, _>>()?;
        let d: u64 = counts.iter().sum();
        total += d;
        parts.push(format!("{name}: {d}"));
    }
    let secs = start.elapsed().as_secs_f64();
    Ok(Rec {
        measured: vec![("disagreements", total as f64), ("horizon", horizon as f64)],
        threshold: vec![("disagreements", 0.0), ("seconds", 60.0)],
        pass: total == 0 && secs <= 60.0,
        summary: format!("dual membership up to {horizon}: {} disagreements ({secs:.1} s)", parts.join(", ")),
    })
}

/// `{ floor(m^{3/2}) : m >= 1 }` up to `hi`, in exact integer arithmetic.
pub fn integer_parts_of_three_halves(hi: u64) -> Vec<u64> {
    let mut out = Vec::new();
    let mut m = 1u64;
    loop {
        let v = (m * m * m).isqrt();
        if v > hi {
            break;
        }
        out.push(v);
        m += 1;
    }
    out
}

fn c2(_mode: Mode) -> Result<Rec, String> {
    let hi = 100_000u64;
    let ts = set("powers1.5", hi)?;
    let got: Vec<u64> = ts.elements().iter().copied().filter(|&n| n >= 4).collect();
    let want: Vec<u64> = integer_parts_of_three_halves(hi).into_iter().filter(|&n| n >= 4).collect();
    let a: std::collections::BTreeSet<u64> = got.iter().copied().collect();
    let b: std::collections::BTreeSet<u64> = want.iter().copied().collect();
    let diff = a.symmetric_difference(&b).count();
    Ok(Rec {
        measured: vec![("symmetric_difference", diff as f64), ("elements", got.len() as f64)],
        threshold: vec![("symmetric_difference", 0.0)],
        pass: diff == 0,
        summary: format!("floor(m^1.5) on [4, {hi}]: {} elements, symmetric difference {diff}", got.len()),
    })
}

fn c3(mode: Mode) -> Result<Rec, String> {
    let (horizon, lo, hi, at) = if mode == Mode::Full { (1u64 << 20, 14, 20, 1_000_000u64) } else { (1 << 18, 12, 18, 1 << 18) };
    let ts = set("pow1.05", horizon)?;
    let ratio = |t: u64| ts.count(t).map(|c| c as f64 / ts.phi2(t as f64)).map_err(|e| e.to_string());
    let r = ratio(at)?;
    let grid: Vec<f64> = (lo..=hi).map(|k| ratio(1 << k)).collect::<Result<_, _>>()?;
    let violations = grid.windows(2).filter(|w| (w[1] - 1.0).abs() > (w[0] - 1.0).abs()).count();
    Ok(Rec {
        measured: vec![("ratio", r), ("violations", violations as f64)],
        threshold: vec![("ratio_min", 0.9), ("ratio_max", 1.1), ("violations", 2.0)],
        pass: (0.9..=1.1).contains(&r) && violations <= 2,
        summary: format!("|B_N|/phi_2(N) = {r:.4} at N = {at}; {violations} trend violations over 2^{lo}..2^{hi}"),
    })
}

fn c4(mode: Mode) -> Result<Rec, String> {
    let start = Instant::now();
    let long = set("long_blocks1.75", 1_000_000)?.run_stats().max_run;
    let top: u64 = if mode == Mode::Full { 1 << 22 } else { 1 << 18 };
    let ts = set("pow1.05", top)?;
    let big = ts.run_stats().max_run;
    let small = ts.truncate(1 << 14).map_err(|e| e.to_string())?.run_stats().max_run;
    let secs = start.elapsed().as_secs_f64();
    Ok(Rec {
        measured: vec![("long_blocks_max_run", long as f64), ("max_run_top", big as f64), ("max_run_2^14", small as f64)],
        threshold: vec![("long_blocks_max_run_min", 100.0), ("growth", 2.0), ("seconds", 120.0)],
        pass: long >= 100 && big <= small + 2 && secs <= 120.0,
        summary: format!("long blocks max run {long}; pow1.05 max run {small} at 2^14, {big} at {top} ({secs:.1} s)"),
    })
}

fn c5(mode: Mode) -> Result<Rec, String> {
    let (top, q) = if mode == Mode::Full { (20, 64) } else { (16, 8) };
    let ts = set("pow1.05", 1 << top)?;
    let grid: Vec<u64> = (10..=top).map(|k| 1u64 << k).collect();
    let xis = xi_grid(q);
    let r = trest_scan(&ts, &grid, &xis).map_err(|e| e.to_string())?;
    let slope = r.fit.map_or(f64::NAN, |f| f.slope);
    let mut exact = true;
    for (i, &n) in grid.iter().enumerate() {
        let want = (ts.count(n).unwrap() as f64 - ts.psi_sum(n).unwrap()).abs() / ts.phi2(n as f64);
        exact &= r.abs_error(i, 0) / r.normalizer(i, &ts) == want;
    }
    Ok(Rec {
        measured: vec![("slope", slope), ("xi0_exact", exact as u8 as f64), ("frequencies", xis.len() as f64)],
        threshold: vec![("slope_max", -0.01), ("xi0_exact", 1.0)],
        pass: slope <= -0.01 && exact,
        summary: format!("normalized sup error slope {slope:.3} over 2^10..2^{top} ({} frequencies); xi = 0 exact: {exact}", xis.len()),
    })
}

fn c6(mode: Mode) -> Result<Rec, String> {
    let top = if mode == Mode::Full { 16 } else { 12 };
    let ts = set("pow1.02", 4 << top)?;
    let reports: Vec<_> = (8..=top).map(|k| gn_en_split(&ts, 1 << k, 0.0)).collect::<Result<_, _>>().map_err(|e| e.to_string())?;
    let symmetric = reports.iter().all(|r| r.symmetric);
    let mass = reports.iter().map(|r| r.mass_rel_error).fold(0.0, f64::max);
    let c_spread = spread(&reports.iter().map(|r| r.c_small).collect::<Vec<_>>());
    let ns: Vec<f64> = reports.iter().map(|r| r.n as f64).collect();
    let slope = loglog_fit(&ns, &reports.iter().map(|r| r.e_max).collect::<Vec<_>>()).map_or(f64::NAN, |f| f.slope);
    let l_spread = spread(&reports.iter().map(|r| r.lipschitz).collect::<Vec<_>>());
    Ok(Rec {
        measured: vec![
            ("symmetric", symmetric as u8 as f64),
            ("mass_rel_error", mass),
            ("c_small_spread", c_spread),
            ("e_slope", slope),
            ("lipschitz_spread", l_spread),
        ],
        threshold: vec![
            ("symmetric", 1.0),
            ("mass_rel_error", 1e-12),
            ("c_small_spread", 8.0),
            ("e_slope", -1.0),
            ("lipschitz_spread", 4.0),
        ],
        pass: symmetric && mass <= 1e-12 && c_spread <= 8.0 && slope <= -1.0 && l_spread <= 4.0,
        summary: format!(
            "N = 2^8..2^{top}: symmetric {symmetric}, mass error {mass:.1e}, C_small spread {c_spread:.2}, E slope {slope:.3}, Lipschitz spread {l_spread:.2}"
        ),
    })
}

fn c7(mode: Mode, seed: u64) -> Result<Rec, String> {
    let mut rng = rng(seed, 7);
    let kmax = 10_000u64;
    let ts = set("pow1.05", kmax + 1)?;
    let err = |e: crate::operators::OpError| e.to_string();
    let mut ks: Vec<u64> = (1..=50).chain([100, 500, 1000, 2500, 5000, kmax]).collect();
    let extra = if mode == Mode::Full { 40 } else { 10 };
    ks.extend((0..extra).map(|_| rng.gen_range(1..=kmax)));
    let mut sum_err = 0.0f64;
    let mut negative = 0usize;
    for &k in &ks {
        let l = lambda_weights(&ts, k).map_err(err)?;
        sum_err = sum_err.max((sum(l.iter().copied()) - 1.0).abs());
        negative += l.iter().filter(|v| **v < 0.0).count();
    }
    let pairs = 100;
    let mut mono_bad = 0;
    for _ in 0..pairs {
        let k = rng.gen_range(1..kmax);
        let k2 = rng.gen_range(k + 1..=kmax);
        let n = rng.gen_range(1..=k) as usize;
        let a = rearrangement_nk(&ts, k).map_err(err)?;
        let b = rearrangement_nk(&ts, k2).map_err(err)?;
        if b.breakpoints[n] > a.breakpoints[n] + 1e-12 {
            mono_bad += 1;
        }
        let t = rng.gen_range(0.0..1.0);
        if b.n_at(t) < a.n_at(t) {
            mono_bad += 1;
        }
    }
    let signals = if mode == Mode::Full { 50 } else { 15 };
    let mut worst = 0.0f64;
    for _ in 0..signals {
        let f = random_signal(&mut rng, 128);
        let k = rng.gen_range(1..=1024);
        let scale = f.values.iter().fold(0.0f64, |m, v| m.max(v.abs())).max(f64::MIN_POSITIVE);
        let d = apply_d(&ts, &f, k).map_err(err)?;
        let h = dk_via_hk(&ts, &f, k).map_err(err)?;
        let q = rearrangement_nk(&ts, k).map_err(err)?.integrate_h(&f);
        worst = worst.max(worst_deviation(&d, &h).1 / scale).max(worst_deviation(&d, &q).1 / scale);
    }
    Ok(Rec {
        measured: vec![
            ("sum_error", sum_err),
            ("negative", negative as f64),
            ("monotonicity_violations", mono_bad as f64),
            ("identity_deviation", worst),
        ],
        threshold: vec![("sum_error", 1e-12), ("negative", 0.0), ("monotonicity_violations", 0.0), ("identity_deviation", 1e-10)],
        pass: sum_err <= 1e-12 && negative == 0 && mono_bad == 0 && worst <= 1e-10,
        summary: format!(
            "{} k values: |sum - 1| <= {sum_err:.1e}, {negative} negative; {mono_bad} monotonicity violations in {pairs} pairs; D_k routes agree to {worst:.1e} on {signals} signals",
            ks.len()
        ),
    })
}

fn c8(mode: Mode, seed: u64) -> Result<Rec, String> {
    let mut rng = rng(seed, 8);
    let fixture = cz_decompose(&Signal::delta(0, 1.0), 0.25).map_err(|e| e.to_string())?;
    let fixture_ok = fixture.cubes == vec![Cube { s: 1, j: 0 }]
        && fixture.g.window(0, 1) == vec![0.5, 0.5]
        && fixture.b.window(0, 1) == vec![0.5, -0.5];
    let (cases, max_supp) = if mode == Mode::Full { (1000, 4096) } else { (200, 512) };
    let inputs: Vec<(Signal, f64, f64, f64)> = (0..cases)
        .map(|_| {
            let f = random_signal(&mut rng, max_supp);
            let inf = f.values.iter().fold(0.0f64, |m, v| m.max(v.abs()));
            let alpha = if inf > 0.0 { inf * 10f64.powf(rng.gen_range(-1.5..0.3)) } else { 1.0 };
            (f, alpha, rng.gen_range(1.0..50.0), rng.gen_range(1.0..4096.0))
        })
        .collect();
    let failures: Vec<Option<String>> = inputs
        .par_iter()
        .map(|(f, alpha, d, big_d)| {
            let dec = match cz_decompose(f, *alpha) {
                Ok(d) => d,
                Err(e) => return Some(e.to_string()),
            };
            refine(&dec, *d, *big_d).err().map(|e| e.to_string())
        })
        .collect();
    let failed: Vec<&String> = failures.iter().flatten().collect();
    Ok(Rec {
        measured: vec![("cases", cases as f64), ("failures", failed.len() as f64), ("fixture", fixture_ok as u8 as f64)],
        threshold: vec![("failures", 0.0), ("fixture", 1.0)],
        pass: failed.is_empty() && fixture_ok,
        summary: format!(
            "{cases} random decompositions and refinements, {} invariant failures{}; delta fixture {}",
            failed.len(),
            failed.first().map_or(String::new(), |e| format!(" (first: {e})")),
            if fixture_ok { "reproduced" } else { "differs" }
        ),
    })
}

fn c9(mode: Mode, seed: u64) -> Result<Rec, String> {
    let mut rng = rng(seed, 9);
    let (horizon, trials) = if mode == Mode::Full { (1u64 << 20, 20) } else { (1 << 16, 3) };
    let ts = set("pow1.02", horizon)?;
    let mut worst = 0.0f64;
    let mut invariant = true;
    for trial in 0..trials {
        let f = random_deltas(rng.gen(), 100, 4096);
        let stat = |g: &Signal| weaktype_scan(&ts, g, &[], &ScalePlan::AllT).map(|r| r.statistic).map_err(|e| e.to_string());
        let s = stat(&f)?;
        worst = worst.max(s);
        if trial < 2 {
            let shift = rng.gen_range(-100_000..100_000);
            invariant &= stat(&f.scaled(2.0))? == s && stat(&f.translated(shift))? == s;
        }
    }
    Ok(Rec {
        measured: vec![("max_statistic", worst), ("invariant", invariant as u8 as f64)],
        threshold: vec![("max_statistic", 10.0), ("invariant", 1.0)],
        pass: worst <= 10.0 && invariant,
        summary: format!("{trials} trials at horizon {horizon}: sup lambda |{{Mf > lambda}}| / |f|_1 <= {worst:.3}; invariances exact: {invariant}"),
    })
}

fn c10(mode: Mode, seed: u64) -> Result<Rec, String> {
    let mut rng = rng(seed, 10);
    let ts = set("pow1.05", 4096)?;
    let err = |e: crate::operators::OpError| e.to_string();
    let cuts = [1u64, 4, 16, 64, 256, 1024];
    let c = Signal::new(0, vec![1.0; 3000]);
    let mut const_max = 0.0f64;
    // A_t is not an average (A_t 1 = Psi(t) / |B_t|), so only M, D and H fix constants.
    for op in [Op::M, Op::D, Op::H] {
        let r = oscillation(&ts, &c, &cuts, op, false).map_err(err)?;
        // Interior: x - s stays in the support for every s < 1024.
        for x in 1024..=3000 {
            const_max = const_max.max(r.o2.get(x));
        }
    }
    let signals = if mode == Mode::Full { 20 } else { 6 };
    let mut order_bad = 0usize;
    let mut points = 0usize;
    for i in 0..signals {
        let f = random_signal(&mut rng, 64);
        let mut cuts: Vec<u64> = (0..rng.gen_range(2..6)).map(|_| rng.gen_range(1..=512)).collect();
        cuts.sort_unstable();
        cuts.dedup();
        if cuts.len() < 2 {
            cuts = vec![1, 512];
        }
        let op = [Op::M, Op::A, Op::D, Op::H][i % 4];
        let r = oscillation(&ts, &f, &cuts, op, true).map_err(err)?;
        let v2 = r.v2.unwrap();
        let l1 = r.l1.unwrap();
        for (j, &o) in r.o2.values.iter().enumerate() {
            points += 1;
            let v = v2[j].value;
            if o > v * (1.0 + 1e-12) + 1e-15 || v > l1[j] * (1.0 + 1e-12) + 1e-15 {
                order_bad += 1;
            }
        }
    }
    let mut dp_bad = 0;
    for _ in 0..200 {
        let seq: Vec<f64> = (0..8).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let mut best = 0.0f64;
        for mask in 0u32..256 {
            let sub: Vec<f64> = (0..8).filter(|i| mask >> i & 1 == 1).map(|i| seq[i]).collect();
            let mut s = 0.0;
            for w in sub.windows(2) {
                s += (w[1] - w[0]) * (w[1] - w[0]);
            }
            best = best.max(s);
        }
        if variation2_exact(&seq) != best.sqrt() {
            dp_bad += 1;
        }
    }
    Ok(Rec {
        measured: vec![("constant_o2_max", const_max), ("order_violations", order_bad as f64), ("dp_mismatches", dp_bad as f64)],
        threshold: vec![("constant_o2_max", 1e-14), ("order_violations", 0.0), ("dp_mismatches", 0.0)],
        pass: const_max <= 1e-14 && order_bad == 0 && dp_bad == 0,
        summary: format!(
            "O^2 of constants <= {const_max:.1e}; O^2 <= V^2 <= l1 violated at {order_bad} of {points} points; DP vs brute force: {dp_bad} of 200 differ"
        ),
    })
}

fn c11(mode: Mode, seed: u64) -> Result<Rec, String> {
    let mut rng = rng(seed, 11);
    let n: u64 = if mode == Mode::Full { 1_000_000 } else { 100_000 };
    let ts = set("pow1.05", n)?;
    let sys = RotationSystem { theta: Theta::sqrt2m1(), f: Observable::Indicator { a: 0.0, b: 0.5 } };
    let starts: Vec<f64> = (0..10).map(|_| rng.gen_range(0.0..1.0)).collect();
    let mut dev = 0.0f64;
    let mut birk = 0.0f64;
    for &x in &starts {
        dev = dev.max((ergodic_average(&ts, &sys, x, n).map_err(|e| e.to_string())? - 0.5).abs());
        birk = birk.max((birkhoff_average(&sys, x, n) - 0.5).abs());
    }
    let n2: u64 = if mode == Mode::Full { 10_000 } else { 4096 };
    let ts2 = set("pow1.05", n2.max(1 << 10))?;
    let two = MultiRotation {
        thetas: vec![Theta::sqrt2m1(), Theta::golden()],
        f: MultiObservable::Separable { factors: vec![Observable::Indicator { a: 0.0, b: 0.5 }, Observable::Indicator { a: 0.0, b: 1.0 / 3.0 }] },
    };
    let x0 = [rng.gen_range(0.0..1.0), rng.gen_range(0.0..1.0)];
    let avg2 = multiparam_average(&[&ts2, &ts2], &two, &x0, &[n2, n2]).map_err(|e| e.to_string())?;
    let dev2 = (avg2 - 1.0 / 6.0).abs();
    let sep = MultiRotation {
        thetas: two.thetas.clone(),
        f: MultiObservable::Separable { factors: vec![Observable::Cos { k: 1 }, Observable::Indicator { a: 0.25, b: 0.9 }] },
    };
    let p = multiparam_average(&[&ts2, &ts2], &sep, &x0, &[1 << 10, 1 << 10]).map_err(|e| e.to_string())?;
    let d = multiparam_average_direct(&[&ts2, &ts2], &sep, &x0, &[1 << 10, 1 << 10]).map_err(|e| e.to_string())?;
    let fact = (p - d).abs();
    Ok(Rec {
        measured: vec![("deviation_1d", dev), ("birkhoff_deviation", birk), ("deviation_2d", dev2), ("factorization_error", fact)],
        threshold: vec![("deviation_1d", 0.02), ("deviation_2d", 0.05), ("factorization_error", 1e-12)],
        pass: dev <= 0.02 && dev2 <= 0.05 && fact <= 1e-12,
        summary: format!(
            "N = {n}: max |avg - 1/2| = {dev:.2e} (plain Birkhoff {birk:.2e}); 2-D N_i = {n2}: |avg - 1/6| = {dev2:.2e}; factorization error {fact:.1e}"
        ),
    })
}

fn c12(mode: Mode, seed: u64) -> Result<Rec, String> {
    let mut rng = rng(seed, 12);
    let ts = set("pow1.05", 4096)?;
    let cases = if mode == Mode::Full { 100 } else { 30 };
    let mut mismatches = 0;
    for _ in 0..cases {
        let f = random_signal(&mut rng, 64);
        let n = rng.gen_range(1..=4096);
        let m = apply_m(&ts, &f, n).map_err(|e| e.to_string())?;
        let sys = ShiftSystem { f: f.clone() };
        let x = rng.gen_range(m.offset - 5..=m.end() + 5);
        if ergodic_average(&ts, &sys, x, n).map_err(|e| e.to_string())?.to_bits() != m.get(x).to_bits() {
            mismatches += 1;
        }
    }
    Ok(Rec {
        measured: vec![("cases", cases as f64), ("mismatches", mismatches as f64)],
        threshold: vec![("mismatches", 0.0)],
        pass: mismatches == 0,
        summary: format!("shift-system averages vs M_N f: {mismatches} of {cases} differ"),
    })
}
