//! Exponential sums over `B` and over `[1, N]`, the truncated Fourier
//! expansion of the sawtooth, and decay fits of the normalized errors.

use std::f64::consts::PI;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::fit::{loglog_fit, median, LineFit};
use crate::sum::{ComplexNeumaier, Neumaier};
use crate::thinset::{ThinSet, ThinSetError};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ExpSumError {
    #[error(transparent)]
    ThinSet(#[from] ThinSetError),
    #[error("N = {n} exceeds the horizon {horizon}")]
    OutOfHorizon { n: u64, horizon: u64 },
    #[error("frequency {0} is outside [0, 1)")]
    InvalidFrequency(f64),
    #[error("empty {0} grid")]
    EmptyGrid(&'static str),
    #[error("truncation level M must be at least 1")]
    ZeroTruncation,
}

/// `e(x) = exp(2 pi i x)`.
#[inline]
pub fn e(x: f64) -> Complex64 {
    let (s, c) = (2.0 * PI * x).sin_cos();
    Complex64::new(c, s)
}

/// A frequency in `[0, 1)`; rationals are kept exact so that `n xi mod 1`
/// is computed without rounding.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Frequency {
    Rational { p: u64, q: u64 },
    Real(f64),
}

impl Frequency {
    pub fn real(x: f64) -> Result<Self, ExpSumError> {
        if !(0.0..1.0).contains(&x) {
            return Err(ExpSumError::InvalidFrequency(x));
        }
        Ok(Frequency::Real(x))
    }

    pub fn value(&self) -> f64 {
        match *self {
            Frequency::Rational { p, q } => p as f64 / q as f64,
            Frequency::Real(x) => x,
        }
    }

    pub fn label(&self) -> String {
        match *self {
            Frequency::Rational { p, q } => format!("{p}/{q}"),
            Frequency::Real(x) => format!("{x:.17}"),
        }
    }

    /// `{n xi}`; for real `xi` the product is split with a fused multiply-add
    /// so the phase keeps full relative accuracy for large `n`.
    #[inline]
    pub fn phase(&self, n: u64) -> f64 {
        match *self {
            Frequency::Rational { p, q } => ((n % q) * p % q) as f64 / q as f64,
            Frequency::Real(x) => {
                let nf = n as f64;
                let prod = nf * x;
                let err = nf.mul_add(x, -prod);
                let f = prod - prod.floor() + err;
                f - f.floor()
            }
        }
    }

    fn check(&self) -> Result<(), ExpSumError> {
        match *self {
            Frequency::Rational { p, q } if q == 0 || p >= q => Err(ExpSumError::InvalidFrequency(p as f64 / q as f64)),
            Frequency::Real(x) if !(0.0..1.0).contains(&x) => Err(ExpSumError::InvalidFrequency(x)),
            _ => Ok(()),
        }
    }
}

/// `e(n xi)` for consecutive `n`, from a table for rational `xi`.
struct Rotor {
    freq: Frequency,
    table: Vec<Complex64>,
}

impl Rotor {
    fn new(freq: Frequency) -> Self {
        let table = match freq {
            Frequency::Rational { q, .. } => (0..q).map(|k| e(k as f64 / q as f64)).collect(),
            Frequency::Real(_) => Vec::new(),
        };
        Rotor { freq, table }
    }

    #[inline]
    fn at(&self, n: u64) -> Complex64 {
        match self.freq {
            Frequency::Rational { p, q } => self.table[((n % q) * p % q) as usize],
            Frequency::Real(_) => e(self.freq.phase(n)),
        }
    }
}

/// `{0}`, the Farey fractions of order `q_max` in `(0, 1)`, and three
/// badly approximable irrationals.
pub fn xi_grid(q_max: u64) -> Vec<Frequency> {
    let mut out = vec![Frequency::Rational { p: 0, q: 1 }];
    let mut fr: Vec<(u64, u64)> = Vec::new();
    for q in 2..=q_max {
        for p in 1..q {
            if gcd(p, q) == 1 {
                fr.push((p, q));
            }
        }
    }
    fr.sort_by(|a, b| (a.0 * b.1).cmp(&(b.0 * a.1)));
    out.extend(fr.into_iter().map(|(p, q)| Frequency::Rational { p, q }));
    out.push(Frequency::Real(std::f64::consts::SQRT_2 - 1.0));
    out.push(Frequency::Real((5f64.sqrt() - 1.0) / 2.0));
    out.push(Frequency::Real(PI - 3.0));
    out
}

fn gcd(mut a: u64, mut b: u64) -> u64 {
    while b != 0 {
        (a, b) = (b, a % b);
    }
    a
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Weight {
    Unit,
    InvPsi,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RefWeight {
    Unit,
    Psi,
}

fn check_n(ts: &ThinSet, n: u64) -> Result<(), ExpSumError> {
    if n > ts.horizon() {
        return Err(ExpSumError::OutOfHorizon { n, horizon: ts.horizon() });
    }
    Ok(())
}

/// `sum_{n in B, lo <= n <= hi} w(n) e(n xi)`.
pub fn exp_sum_over_b_range(ts: &ThinSet, lo: u64, hi: u64, xi: Frequency, weight: Weight) -> Result<Complex64, ExpSumError> {
    check_n(ts, hi)?;
    xi.check()?;
    let rotor = Rotor::new(xi);
    let mut acc = ComplexNeumaier::new();
    let start = ts.elements().partition_point(|&n| n < lo);
    for &n in ts.elements()[start..].iter().take_while(|&&n| n <= hi) {
        let w = match weight {
            Weight::Unit => 1.0,
            Weight::InvPsi => 1.0 / ts.psi(n),
        };
        acc.add(rotor.at(n) * w);
    }
    Ok(acc.value())
}

/// `sum_{n in B ∩ [1, N]} w(n) e(n xi)`.
pub fn exp_sum_over_b(ts: &ThinSet, n: u64, xi: Frequency, weight: Weight) -> Result<Complex64, ExpSumError> {
    exp_sum_over_b_range(ts, 1, n, xi, weight)
}

/// `sum_{n=1}^{N} e(n xi)` in closed form.
pub fn geometric_sum(n: u64, xi: Frequency) -> Complex64 {
    let x = xi.value();
    if x == 0.0 {
        return Complex64::new(n as f64, 0.0);
    }
    let z = e(x);
    z * (e(xi.phase(n)) - 1.0) / (z - 1.0)
}

/// `sum_{n=1}^{N} w(n) e(n xi)`: closed form for unit weight, compensated
/// direct sum for the `psi` weight.
pub fn exp_sum_reference(ts: &ThinSet, n: u64, xi: Frequency, weight: RefWeight) -> Result<Complex64, ExpSumError> {
    check_n(ts, n)?;
    xi.check()?;
    Ok(match weight {
        RefWeight::Unit => geometric_sum(n, xi),
        RefWeight::Psi => {
            let rotor = Rotor::new(xi);
            let mut acc = ComplexNeumaier::new();
            for k in 1..=n {
                acc.add(rotor.at(k) * ts.psi(k));
            }
            acc.value()
        }
    })
}

/// Which pair of sums a scan compares.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Variant {
    /// `sum_{B} psi^{-1} e(n xi)` against `sum_{[N]} e(n xi)`, normalized by `N`.
    Ext,
    /// `sum_{B} e(n xi)` against `sum_{[N]} psi(n) e(n xi)`, normalized by `phi_2(N)`.
    Ext2,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Normalization {
    Raw,
    ByPhi2,
    ByN,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExpSumReport {
    pub variant: Variant,
    pub normalization: Normalization,
    pub n_grid: Vec<u64>,
    pub xi_grid: Vec<Frequency>,
    /// `lhs[i][j]` at `N = n_grid[i]`, `xi = xi_grid[j]`.
    pub lhs: Vec<Vec<Complex64>>,
    pub rhs: Vec<Vec<Complex64>>,
    /// `sup_xi |lhs - rhs|` per `N`.
    pub sup_error: Vec<f64>,
    /// `sup_error` divided by the normalizer.
    pub normalized_error: Vec<f64>,
    /// Index into `xi_grid` attaining the supremum, per `N`.
    pub argmax_xi: Vec<usize>,
    /// `max / median` of the errors over the frequency grid, per `N`.
    pub uniformity: Vec<f64>,
    /// Log-log fit of `normalized_error` against `N`; present with at least
    /// six grid points.
    pub fit: Option<LineFit>,
}

impl ExpSumReport {
    pub fn abs_error(&self, i: usize, j: usize) -> f64 {
        (self.lhs[i][j] - self.rhs[i][j]).norm()
    }

    pub fn normalizer(&self, i: usize, ts: &ThinSet) -> f64 {
        let n = self.n_grid[i];
        match self.normalization {
            Normalization::Raw => 1.0,
            Normalization::ByPhi2 => ts.phi2(n as f64),
            Normalization::ByN => n as f64,
        }
    }
}

/// Minimum grid size for the decay fit.
pub const MIN_FIT_POINTS: usize = 6;

/// Scans both sides of the chosen identity over `N` and `xi` grids.
pub fn trest_scan_variant(ts: &ThinSet, n_grid: &[u64], xi_grid: &[Frequency], variant: Variant) -> Result<ExpSumReport, ExpSumError> {
    if n_grid.is_empty() {
        return Err(ExpSumError::EmptyGrid("N"));
    }
    if xi_grid.is_empty() {
        return Err(ExpSumError::EmptyGrid("xi"));
    }
    let mut ns = n_grid.to_vec();
    ns.sort_unstable();
    ns.dedup();
    let nmax = *ns.last().unwrap();
    check_n(ts, nmax)?;
    for xi in xi_grid {
        xi.check()?;
    }
    // One pass over [1, nmax] per frequency, snapshotting at the grid points.
    let columns: Vec<(Vec<Complex64>, Vec<Complex64>)> = xi_grid
        .par_iter()
        .map(|&xi| {
            let rotor = Rotor::new(xi);
            let mut lhs = ComplexNeumaier::new();
            let mut rhs = ComplexNeumaier::new();
            let mut out_l = Vec::with_capacity(ns.len());
            let mut out_r = Vec::with_capacity(ns.len());
            let mut next = 0;
            for n in 1..=nmax {
                let z = rotor.at(n);
                let member = ts.contains(n as i64);
                match variant {
                    Variant::Ext2 => {
                        if member {
                            lhs.add(z);
                        }
                        rhs.add(z * ts.psi(n));
                    }
                    Variant::Ext => {
                        if member {
                            lhs.add(z / ts.psi(n));
                        }
                        rhs.add(z);
                    }
                }
                while next < ns.len() && ns[next] == n {
                    out_l.push(lhs.value());
                    out_r.push(rhs.value());
                    next += 1;
                }
            }
            (out_l, out_r)
        })
        .collect();
    let normalization = match variant {
        Variant::Ext2 => Normalization::ByPhi2,
        Variant::Ext => Normalization::ByN,
    };
    let mut report = ExpSumReport {
        variant,
        normalization,
        n_grid: ns.clone(),
        xi_grid: xi_grid.to_vec(),
        lhs: vec![Vec::with_capacity(xi_grid.len()); ns.len()],
        rhs: vec![Vec::with_capacity(xi_grid.len()); ns.len()],
        sup_error: Vec::new(),
        normalized_error: Vec::new(),
        argmax_xi: Vec::new(),
        uniformity: Vec::new(),
        fit: None,
    };
    for (l, r) in &columns {
        for i in 0..ns.len() {
            report.lhs[i].push(l[i]);
            report.rhs[i].push(r[i]);
        }
    }
    for i in 0..ns.len() {
        let errs: Vec<f64> = (0..xi_grid.len()).map(|j| report.abs_error(i, j)).collect();
        let (arg, sup) = errs
            .iter()
            .enumerate()
            .fold((0, f64::MIN), |(a, m), (j, &v)| if v > m { (j, v) } else { (a, m) });
        let med = median(&errs);
        report.sup_error.push(sup);
        report.normalized_error.push(sup / report.normalizer(i, ts));
        report.argmax_xi.push(arg);
        report.uniformity.push(if med > 0.0 { sup / med } else { f64::INFINITY });
    }
    if ns.len() >= MIN_FIT_POINTS {
        let xs: Vec<f64> = ns.iter().map(|&n| n as f64).collect();
        report.fit = loglog_fit(&xs, &report.normalized_error);
    }
    Ok(report)
}

/// The `psi`-weighted comparison, normalized by `phi_2(N)`.
pub fn trest_scan(ts: &ThinSet, n_grid: &[u64], xi_grid: &[Frequency]) -> Result<ExpSumReport, ExpSumError> {
    trest_scan_variant(ts, n_grid, xi_grid, Variant::Ext2)
}

/// `(1 - gamma_1) + 3 (1 - gamma_2) + 6 chi < 1`, the admissibility condition
/// tying the decay exponent `chi` to `gamma_i = 1 / c_i`.
pub fn trest_admissible(gamma1: f64, gamma2: f64, chi: f64) -> bool {
    chi > 0.0 && (1.0 - gamma1) + 3.0 * (1.0 - gamma2) + 6.0 * chi < 1.0
}

/// Largest `chi` allowed by [`trest_admissible`] for exponents `c1`, `c2`.
pub fn trest_chi_bound(c1: f64, c2: f64) -> f64 {
    (1.0 - (1.0 - 1.0 / c1) - 3.0 * (1.0 - 1.0 / c2)) / 6.0
}

/// `Phi(x) = {x} - 1/2` expressed through a fractional part.
#[inline]
fn sawtooth_of_frac(fr: f64) -> f64 {
    fr - 0.5
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SawtoothSplit {
    pub m: usize,
    pub n: Vec<u64>,
    pub indicator: Vec<f64>,
    pub psi: Vec<f64>,
    pub delta: Vec<f64>,
    pub pi: Vec<f64>,
    /// `max |1_B - psi - Delta_M - Pi_M|`.
    pub max_residual: f64,
    /// `max |Im Delta_M|` before taking the real part.
    pub max_imag: f64,
    pub max_abs_pi: f64,
}

/// `1_B(n) = psi(n) + Delta_M(n) + Pi_M(n)` on `lo..=hi`, with
/// `Delta_M(n) = sum_{0<|m|<=M} e(-m u)(e(m psi) - 1) / (2 pi i m)`, `u = +-phi_1(n)`,
/// and `Pi_M = Phi(u - psi) - Phi(u) - Delta_M`.
pub fn sawtooth_split(ts: &ThinSet, lo: u64, hi: u64, m: usize) -> Result<SawtoothSplit, ExpSumError> {
    if m == 0 {
        return Err(ExpSumError::ZeroTruncation);
    }
    check_n(ts, hi)?;
    let lo = lo.max(1);
    let ev = ts.evaluator();
    let rows: Vec<Result<(u64, f64, f64, f64, f64, f64, f64), ExpSumError>> = (lo..=hi)
        .into_par_iter()
        .map(|n| {
            let (fu, fv) = ev.fractional_parts(n)?;
            let psi = ts.psi(n);
            let mut acc = ComplexNeumaier::new();
            for k in 1..=m {
                let kf = k as f64;
                for s in [kf, -kf] {
                    // e(-s u) depends on u only through {u}.
                    let term = e(-s * fu) * (e(s * psi) - 1.0) / Complex64::new(0.0, 2.0 * PI * s);
                    acc.add(term);
                }
            }
            let delta = acc.value();
            let ind = if ts.contains(n as i64) { 1.0 } else { 0.0 };
            let saw = sawtooth_of_frac(fv) - sawtooth_of_frac(fu);
            let pi = saw - delta.re;
            let mut r = Neumaier::new();
            r.add(ind);
            r.add(-psi);
            r.add(-delta.re);
            r.add(-pi);
            Ok((n, ind, psi, delta.re, pi, r.value().abs(), delta.im.abs()))
        })
        .collect();
    let mut out = SawtoothSplit {
        m,
        n: Vec::new(),
        indicator: Vec::new(),
        psi: Vec::new(),
        delta: Vec::new(),
        pi: Vec::new(),
        max_residual: 0.0,
        max_imag: 0.0,
        max_abs_pi: 0.0,
    };
    for row in rows {
        let (n, ind, psi, d, p, res, im) = row?;
        out.n.push(n);
        out.indicator.push(ind);
        out.psi.push(psi);
        out.delta.push(d);
        out.pi.push(p);
        out.max_residual = out.max_residual.max(res);
        out.max_imag = out.max_imag.max(im);
        out.max_abs_pi = out.max_abs_pi.max(p.abs());
    }
    Ok(out)
}
