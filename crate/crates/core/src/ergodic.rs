//! Irrational rotations and the integer shift as measure-preserving systems,
//! with one- and multi-parameter ergodic averages along `B`.

use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::hp::Hp;
use crate::signal::Signal;
use crate::sum::Neumaier;
use crate::thinset::ThinSet;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ErgodicError {
    #[error("B ∩ [1, {n}] is empty")]
    EmptySet { n: u64 },
    #[error("{n} exceeds the enumerated horizon {horizon}")]
    OutOfHorizon { n: u64, horizon: u64 },
    #[error("dimension {0} exceeds 3")]
    DimensionTooLarge(usize),
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("bad observable `{0}`")]
    BadObservable(String),
    #[error("unknown angle `{0}` (expected sqrt2m1 or golden)")]
    BadTheta(String),
}

/// A rotation angle as an unevaluated sum `hi + lo` of two doubles.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Theta {
    pub hi: f64,
    pub lo: f64,
}

impl Theta {
    /// `sqrt(2) - 1`.
    pub fn sqrt2m1() -> Self {
        let two = Hp::from_i64(2);
        Theta::from_hp(&two.powf(&Hp::ratio(1, 2)).sub(&Hp::one()))
    }

    /// `(sqrt(5) - 1) / 2`.
    pub fn golden() -> Self {
        let five = Hp::from_i64(5);
        Theta::from_hp(&five.powf(&Hp::ratio(1, 2)).sub(&Hp::one()).div(&Hp::from_i64(2)))
    }

    fn from_hp(x: &Hp) -> Self {
        let hi = x.to_f64();
        let lo = x.sub(&Hp::from_f64(hi)).to_f64();
        Theta { hi, lo }
    }

    pub fn value(&self) -> f64 {
        self.hi
    }

    /// `{x0 + n theta}`, with `n hi` split exactly so that no error
    /// accumulates in `n`.
    #[inline]
    pub fn orbit(&self, x0: f64, n: u64) -> f64 {
        let nf = n as f64;
        let p = nf * self.hi;
        let e = nf.mul_add(self.hi, -p);
        let fp = p - p.floor();
        let t = fp + (e + nf * self.lo + x0);
        t - t.floor()
    }
}

impl FromStr for Theta {
    type Err = ErgodicError;
    fn from_str(s: &str) -> Result<Self, ErgodicError> {
        match s {
            "sqrt2m1" => Ok(Theta::sqrt2m1()),
            "golden" => Ok(Theta::golden()),
            _ => Err(ErgodicError::BadTheta(s.into())),
        }
    }
}

/// Functions on `[0, 1)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Observable {
    Const { c: f64 },
    /// `1_{[a, b)}`.
    Indicator { a: f64, b: f64 },
    /// `cos(2 pi k x)`.
    Cos { k: i64 },
}

impl Observable {
    #[inline]
    pub fn eval(&self, x: f64) -> f64 {
        match *self {
            Observable::Const { c } => c,
            Observable::Indicator { a, b } => {
                if a <= x && x < b {
                    1.0
                } else {
                    0.0
                }
            }
            Observable::Cos { k } => (std::f64::consts::TAU * ((k as f64 * x) % 1.0)).cos(),
        }
    }

    pub fn integral(&self) -> f64 {
        match *self {
            Observable::Const { c } => c,
            Observable::Indicator { a, b } => (b.min(1.0) - a.max(0.0)).max(0.0),
            Observable::Cos { k } => {
                if k == 0 {
                    1.0
                } else {
                    0.0
                }
            }
        }
    }

    pub fn range(&self) -> (f64, f64) {
        match *self {
            Observable::Const { c } => (c, c),
            Observable::Indicator { .. } => (0.0, 1.0),
            Observable::Cos { k } => {
                if k == 0 {
                    (1.0, 1.0)
                } else {
                    (-1.0, 1.0)
                }
            }
        }
    }
}

/// `const:c`, `indicator:a,b` or `cos:k`.
impl FromStr for Observable {
    type Err = ErgodicError;
    fn from_str(s: &str) -> Result<Self, ErgodicError> {
        let bad = || ErgodicError::BadObservable(s.into());
        let (kind, args) = s.split_once(':').ok_or_else(bad)?;
        let nums: Vec<&str> = args.split(',').map(str::trim).collect();
        match (kind, nums.as_slice()) {
            ("const", [c]) => Ok(Observable::Const { c: c.parse().map_err(|_| bad())? }),
            ("indicator", [a, b]) => {
                let (a, b): (f64, f64) = (a.parse().map_err(|_| bad())?, b.parse().map_err(|_| bad())?);
                if !(0.0..=1.0).contains(&a) || !(0.0..=1.0).contains(&b) || a > b {
                    return Err(bad());
                }
                Ok(Observable::Indicator { a, b })
            }
            ("cos", [k]) => Ok(Observable::Cos { k: k.parse().map_err(|_| bad())? }),
            _ => Err(bad()),
        }
    }
}

/// A measure-preserving system with an observable: `observe(x, n) = f(T^n x)`.
pub trait MeasurePreservingSystem {
    type Point: Copy;
    fn observe(&self, x: Self::Point, n: u64) -> f64;
}

/// `T x = x + theta mod 1` on `[0, 1)` with Lebesgue measure.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RotationSystem {
    pub theta: Theta,
    pub f: Observable,
}

impl MeasurePreservingSystem for RotationSystem {
    type Point = f64;
    #[inline]
    fn observe(&self, x: f64, n: u64) -> f64 {
        self.f.eval(self.theta.orbit(x, n))
    }
}

/// `T x = x - 1` on the integers with counting measure.
#[derive(Debug, Clone, PartialEq)]
pub struct ShiftSystem {
    pub f: Signal,
}

impl MeasurePreservingSystem for ShiftSystem {
    type Point = i64;
    #[inline]
    fn observe(&self, x: i64, n: u64) -> f64 {
        self.f.get(x - n as i64)
    }
}

fn check_n(ts: &ThinSet, n: u64) -> Result<u64, ErgodicError> {
    if n > ts.horizon() {
        return Err(ErgodicError::OutOfHorizon { n, horizon: ts.horizon() });
    }
    match ts.count_unchecked(n) {
        0 => Err(ErgodicError::EmptySet { n }),
        c => Ok(c),
    }
}

/// `|B ∩ [1, N]|^{-1} sum_{n in B, n <= N} f(T^n x)`, summed in increasing
/// `n` with compensation.
pub fn ergodic_average<S: MeasurePreservingSystem>(ts: &ThinSet, sys: &S, x: S::Point, n: u64) -> Result<f64, ErgodicError> {
    let count = check_n(ts, n)?;
    let mut acc = Neumaier::new();
    for &m in &ts.elements()[..count as usize] {
        acc.add(sys.observe(x, m));
    }
    Ok(acc.value() / count as f64)
}

/// `N^{-1} sum_{n <= N} f(T^n x)`.
pub fn birkhoff_average<S: MeasurePreservingSystem>(sys: &S, x: S::Point, n: u64) -> f64 {
    let mut acc = Neumaier::new();
    for m in 1..=n {
        acc.add(sys.observe(x, m));
    }
    acc.value() / n as f64
}

/// Functions on `[0, 1)^k`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum MultiObservable {
    /// `prod_i u_i(x_i)`.
    Separable { factors: Vec<Observable> },
    /// `cos(2 pi sum_i k_i x_i)`.
    CosSum { ks: Vec<i64> },
}

impl MultiObservable {
    pub fn dim(&self) -> usize {
        match self {
            MultiObservable::Separable { factors } => factors.len(),
            MultiObservable::CosSum { ks } => ks.len(),
        }
    }

    pub fn eval(&self, x: &[f64]) -> f64 {
        match self {
            MultiObservable::Separable { factors } => factors.iter().zip(x).map(|(u, &xi)| u.eval(xi)).product(),
            MultiObservable::CosSum { ks } => {
                let s: f64 = ks.iter().zip(x).map(|(&k, &xi)| (k as f64 * xi) % 1.0).sum();
                (std::f64::consts::TAU * (s % 1.0)).cos()
            }
        }
    }

    pub fn integral(&self) -> f64 {
        match self {
            MultiObservable::Separable { factors } => factors.iter().map(Observable::integral).product(),
            MultiObservable::CosSum { ks } => {
                if ks.iter().all(|&k| k == 0) {
                    1.0
                } else {
                    0.0
                }
            }
        }
    }
}

/// Commuting rotations `S_i` by `theta_i` in coordinate `i` of `[0, 1)^k`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MultiRotation {
    pub thetas: Vec<Theta>,
    pub f: MultiObservable,
}

pub const MAX_DIM: usize = 3;

fn check_multi(ts_list: &[&ThinSet], sys: &MultiRotation, x0: &[f64], ns: &[u64]) -> Result<Vec<u64>, ErgodicError> {
    let k = ts_list.len();
    if k > MAX_DIM {
        return Err(ErgodicError::DimensionTooLarge(k));
    }
    if sys.thetas.len() != k || sys.f.dim() != k || x0.len() != k || ns.len() != k {
        return Err(ErgodicError::DimensionMismatch(format!(
            "{k} sets, {} angles, observable of dimension {}, {} start coordinates, {} scales",
            sys.thetas.len(),
            sys.f.dim(),
            x0.len(),
            ns.len()
        )));
    }
    ts_list.iter().zip(ns).map(|(ts, &n)| check_n(ts, n)).collect()
}

/// Average of `f(S^l x)` over `l in prod_i B_i ∩ [1, N_i]`.
///
/// Separable observables factor into one-dimensional averages; other
/// observables are summed over the full product set.
pub fn multiparam_average(ts_list: &[&ThinSet], sys: &MultiRotation, x0: &[f64], ns: &[u64]) -> Result<f64, ErgodicError> {
    check_multi(ts_list, sys, x0, ns)?;
    match &sys.f {
        MultiObservable::Separable { factors } => {
            let mut prod = 1.0;
            for i in 0..factors.len() {
                let one = RotationSystem { theta: sys.thetas[i], f: factors[i] };
                prod *= ergodic_average(ts_list[i], &one, x0[i], ns[i])?;
            }
            Ok(prod)
        }
        MultiObservable::CosSum { .. } => multiparam_average_direct(ts_list, sys, x0, ns),
    }
}

/// The product-set average by direct summation over every multi-index.
pub fn multiparam_average_direct(ts_list: &[&ThinSet], sys: &MultiRotation, x0: &[f64], ns: &[u64]) -> Result<f64, ErgodicError> {
    let counts = check_multi(ts_list, sys, x0, ns)?;
    let k = ts_list.len();
    let orbits: Vec<Vec<f64>> = (0..k)
        .map(|i| ts_list[i].elements()[..counts[i] as usize].iter().map(|&m| sys.thetas[i].orbit(x0[i], m)).collect())
        .collect();
    let mut acc = Neumaier::new();
    let mut idx = vec![0usize; k];
    let mut point = vec![0.0; k];
    'outer: loop {
        for i in 0..k {
            point[i] = orbits[i][idx[i]];
        }
        acc.add(sys.f.eval(&point));
        for i in (0..k).rev() {
            idx[i] += 1;
            if idx[i] < orbits[i].len() {
                continue 'outer;
            }
            idx[i] = 0;
        }
        break;
    }
    let total: f64 = counts.iter().map(|&c| c as f64).product();
    Ok(acc.value() / total)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceTrace {
    pub n_grid: Vec<u64>,
    pub x0: Vec<f64>,
    /// `averages[i][j]`: start `x0[i]`, scale `n_grid[j]`.
    pub averages: Vec<Vec<f64>>,
    pub reference: f64,
    /// `|average - reference|`.
    pub deviations: Vec<Vec<f64>>,
    /// `|a_{j+1} - a_j|` per start.
    pub increments: Vec<Vec<f64>>,
    pub max_increment_bottom: f64,
    pub max_increment_top: f64,
    /// Whether the top-half increments stay below the bottom-half ones.
    pub shrinking: bool,
}

/// Averages along an increasing grid of scales, in one pass per start.
pub fn convergence_trace(ts: &ThinSet, sys: &RotationSystem, x0: &[f64], n_grid: &[u64]) -> Result<ConvergenceTrace, ErgodicError> {
    if n_grid.windows(2).any(|w| w[1] <= w[0]) {
        return Err(ErgodicError::DimensionMismatch("the scale grid must increase".into()));
    }
    let counts: Vec<u64> = n_grid.iter().map(|&n| check_n(ts, n)).collect::<Result<_, _>>()?;
    let averages: Vec<Vec<f64>> = x0
        .iter()
        .map(|&x| {
            let mut acc = Neumaier::new();
            let mut done = 0usize;
            counts
                .iter()
                .map(|&c| {
                    for &m in &ts.elements()[done..c as usize] {
                        acc.add(sys.observe(x, m));
                    }
                    done = c as usize;
                    acc.value() / c as f64
                })
                .collect()
        })
        .collect();
    let reference = sys.f.integral();
    let deviations = averages.iter().map(|row| row.iter().map(|a| (a - reference).abs()).collect()).collect();
    let increments: Vec<Vec<f64>> = averages.iter().map(|row| row.windows(2).map(|w| (w[1] - w[0]).abs()).collect()).collect();
    let half = increments.first().map_or(0, |r| r.len() / 2);
    let max_over = |range: std::ops::Range<usize>| {
        increments.iter().flat_map(|r| r[range.clone()].iter().copied()).fold(0.0f64, f64::max)
    };
    let m = increments.first().map_or(0, Vec::len);
    let max_increment_bottom = max_over(0..half);
    let max_increment_top = max_over(half..m);
    Ok(ConvergenceTrace {
        n_grid: n_grid.to_vec(),
        x0: x0.to_vec(),
        averages,
        reference,
        deviations,
        increments,
        max_increment_bottom,
        max_increment_top,
        shrinking: max_increment_top <= max_increment_bottom,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::operators::apply_m;
    use crate::thinset::{enumerate, registry_get};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn theta_values() {
        let t = Theta::sqrt2m1();
        assert!((t.hi - (std::f64::consts::SQRT_2 - 1.0)).abs() < 2e-16);
        assert!(t.lo.abs() < 1e-16 && t.lo != 0.0);
        let g = Theta::golden();
        assert!((g.hi - 0.618_033_988_749_894_9).abs() < 1e-16);
        // The orbit stays exact far out: compare against a high-precision value.
        let n = 123_456_789_012u64;
        let hp = Hp::from_i64(2).powf(&Hp::ratio(1, 2)).sub(&Hp::one()).mul(&Hp::from_u64(n)).frac().to_f64();
        assert!((t.orbit(0.0, n) - hp).abs() < 1e-12);
    }

    #[test]
    fn observable_parsing() {
        assert_eq!("indicator:0,0.5".parse::<Observable>().unwrap(), Observable::Indicator { a: 0.0, b: 0.5 });
        assert_eq!("cos:1".parse::<Observable>().unwrap(), Observable::Cos { k: 1 });
        assert!("indicator:0.7,0.5".parse::<Observable>().is_err());
        assert!("sin:1".parse::<Observable>().is_err());
    }

    #[test]
    fn constant_average_is_one() {
        let ts = enumerate(&registry_get("pow1.05").unwrap(), 10_000).unwrap();
        let sys = RotationSystem { theta: Theta::sqrt2m1(), f: Observable::Const { c: 1.0 } };
        assert_eq!(ergodic_average(&ts, &sys, 0.3, 10_000).unwrap(), 1.0);
        let tr = convergence_trace(&ts, &sys, &[0.1, 0.2], &[10, 100, 1000, 10_000]).unwrap();
        assert!(tr.increments.iter().flatten().all(|v| *v == 0.0));
    }

    #[test]
    fn empty_set_below_first_element() {
        let ts = enumerate(&registry_get("pow_explog0.5").unwrap(), 100).unwrap();
        let first = ts.elements()[0];
        let sys = RotationSystem { theta: Theta::sqrt2m1(), f: Observable::Const { c: 1.0 } };
        assert_eq!(ergodic_average(&ts, &sys, 0.0, first - 1), Err(ErgodicError::EmptySet { n: first - 1 }));
    }

    #[test]
    fn averages_stay_in_range() {
        let ts = enumerate(&registry_get("pow1.25").unwrap(), 5000).unwrap();
        for f in [Observable::Indicator { a: 0.2, b: 0.7 }, Observable::Cos { k: 3 }] {
            let sys = RotationSystem { theta: Theta::golden(), f };
            let (lo, hi) = f.range();
            for n in [10, 333, 5000] {
                let a = ergodic_average(&ts, &sys, 0.77, n).unwrap();
                assert!(lo <= a && a <= hi);
            }
        }
    }

    #[test]
    fn shift_system_transference() {
        let ts = enumerate(&registry_get("pow1.05").unwrap(), 4096).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        for _ in 0..10 {
            let f = Signal::new(rng.gen_range(-20..20), (0..64).map(|_| rng.gen_range(-1.0..1.0)).collect());
            let n = rng.gen_range(1..4096);
            let m = apply_m(&ts, &f, n).unwrap();
            let sys = ShiftSystem { f: f.clone() };
            for _ in 0..20 {
                let x = rng.gen_range(m.offset..=m.end());
                assert_eq!(ergodic_average(&ts, &sys, x, n).unwrap(), m.get(x));
            }
        }
    }

    #[test]
    fn separable_factorization_matches_direct() {
        let ts = enumerate(&registry_get("pow1.05").unwrap(), 1 << 10).unwrap();
        let sys = MultiRotation {
            thetas: vec![Theta::sqrt2m1(), Theta::golden()],
            f: MultiObservable::Separable {
                factors: vec![Observable::Indicator { a: 0.0, b: 0.5 }, Observable::Cos { k: 2 }],
            },
        };
        let a = multiparam_average(&[&ts, &ts], &sys, &[0.1, 0.4], &[1 << 10, 700]).unwrap();
        let b = multiparam_average_direct(&[&ts, &ts], &sys, &[0.1, 0.4], &[1 << 10, 700]).unwrap();
        assert!((a - b).abs() <= 1e-12);
        let four = vec![&ts; 4];
        assert!(matches!(multiparam_average(&four, &sys, &[0.0; 4], &[10; 4]), Err(ErgodicError::DimensionTooLarge(4))));
    }

    #[test]
    fn cos_sum_has_zero_limit() {
        let ts = enumerate(&registry_get("pow1.25").unwrap(), 1 << 12).unwrap();
        let sys = MultiRotation { thetas: vec![Theta::sqrt2m1(), Theta::golden()], f: MultiObservable::CosSum { ks: vec![1, 1] } };
        let a = multiparam_average(&[&ts, &ts], &sys, &[0.3, 0.6], &[1 << 12, 1 << 12]).unwrap();
        assert!(a.abs() < 0.1, "{a}");
    }
}
