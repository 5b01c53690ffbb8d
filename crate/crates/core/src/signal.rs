//! Finitely supported real functions on the integers, and their
//! convolution and correlation (direct or FFT).

use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};
use serde::{Deserialize, Serialize};

use crate::sum::Neumaier;

/// `f(x) = values[x - offset]` for `offset <= x < offset + len`, zero elsewhere.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Signal {
    pub offset: i64,
    pub values: Vec<f64>,
}

impl Signal {
    pub fn new(offset: i64, values: Vec<f64>) -> Self {
        Signal { offset, values }
    }

    pub fn zeros(offset: i64, len: usize) -> Self {
        Signal { offset, values: vec![0.0; len] }
    }

    /// `a delta_x`.
    pub fn delta(x: i64, a: f64) -> Self {
        Signal { offset: x, values: vec![a] }
    }

    /// Builds a signal from `(x, value)` pairs; repeated points add up.
    pub fn from_sparse(points: &[(i64, f64)]) -> Self {
        if points.is_empty() {
            return Signal::new(0, Vec::new());
        }
        let lo = points.iter().map(|p| p.0).min().unwrap();
        let hi = points.iter().map(|p| p.0).max().unwrap();
        let mut s = Signal::zeros(lo, (hi - lo + 1) as usize);
        for &(x, v) in points {
            s.values[(x - lo) as usize] += v;
        }
        s
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Last index covered by the value array (inclusive).
    pub fn end(&self) -> i64 {
        self.offset + self.values.len() as i64 - 1
    }

    #[inline]
    pub fn get(&self, x: i64) -> f64 {
        let i = x - self.offset;
        if i < 0 || i >= self.values.len() as i64 {
            0.0
        } else {
            self.values[i as usize]
        }
    }

    /// `(x, f(x))` over the non-zero entries, in increasing `x`.
    pub fn nonzeros(&self) -> impl Iterator<Item = (i64, f64)> + '_ {
        self.values
            .iter()
            .enumerate()
            .filter(|(_, v)| **v != 0.0)
            .map(move |(i, &v)| (self.offset + i as i64, v))
    }

    /// Smallest and largest `x` with `f(x) != 0`.
    pub fn support(&self) -> Option<(i64, i64)> {
        let first = self.values.iter().position(|v| *v != 0.0)?;
        let last = self.values.iter().rposition(|v| *v != 0.0)?;
        Some((self.offset + first as i64, self.offset + last as i64))
    }

    pub fn support_size(&self) -> usize {
        self.values.iter().filter(|v| **v != 0.0).count()
    }

    /// Drops leading and trailing zeros.
    pub fn trimmed(&self) -> Signal {
        match self.support() {
            None => Signal::new(0, Vec::new()),
            Some((a, b)) => Signal::new(a, self.values[(a - self.offset) as usize..=(b - self.offset) as usize].to_vec()),
        }
    }

    pub fn sum(&self) -> f64 {
        crate::sum::sum(self.values.iter().copied())
    }

    pub fn l1(&self) -> f64 {
        crate::sum::sum(self.values.iter().map(|v| v.abs()))
    }

    pub fn l2(&self) -> f64 {
        crate::sum::sum(self.values.iter().map(|v| v * v)).sqrt()
    }

    pub fn abs(&self) -> Signal {
        Signal::new(self.offset, self.values.iter().map(|v| v.abs()).collect())
    }

    pub fn scaled(&self, c: f64) -> Signal {
        Signal::new(self.offset, self.values.iter().map(|v| v * c).collect())
    }

    /// `f(. - tau)`.
    pub fn translated(&self, tau: i64) -> Signal {
        Signal::new(self.offset + tau, self.values.clone())
    }

    /// `f~(x) = f(-x)`.
    pub fn reflected(&self) -> Signal {
        let mut v = self.values.clone();
        v.reverse();
        Signal::new(-self.end(), v)
    }

    /// Values on `[lo, hi]`, zero-padded.
    pub fn window(&self, lo: i64, hi: i64) -> Vec<f64> {
        (lo..=hi).map(|x| self.get(x)).collect()
    }
}

/// Below this many multiply-adds the direct convolution is used.
pub const DIRECT_LIMIT: usize = 1 << 24;

/// `(f * g)(x) = sum_y f(y) g(x - y)`, choosing direct or FFT evaluation.
pub fn convolve(f: &Signal, g: &Signal) -> Signal {
    if f.is_empty() || g.is_empty() {
        return Signal::new(0, Vec::new());
    }
    let work = f.support_size().saturating_mul(g.len());
    if work <= DIRECT_LIMIT {
        convolve_direct(f, g)
    } else {
        convolve_fft(f, g)
    }
}

/// Direct convolution over the non-zero entries of `f`.
pub fn convolve_direct(f: &Signal, g: &Signal) -> Signal {
    let mut out = Signal::zeros(f.offset + g.offset, f.len() + g.len() - 1);
    for (x, a) in f.nonzeros() {
        let base = (x - f.offset) as usize;
        for (j, &b) in g.values.iter().enumerate() {
            out.values[base + j] += a * b;
        }
    }
    out
}

fn fft_pair(n: usize) -> (Arc<dyn Fft<f64>>, Arc<dyn Fft<f64>>) {
    let mut planner = FftPlanner::new();
    (planner.plan_fft_forward(n), planner.plan_fft_inverse(n))
}

/// FFT convolution (zero padded to a power of two).
pub fn convolve_fft(f: &Signal, g: &Signal) -> Signal {
    let len = f.len() + g.len() - 1;
    let n = len.next_power_of_two();
    let (fwd, inv) = fft_pair(n);
    let mut a: Vec<Complex64> = f.values.iter().map(|&v| Complex64::new(v, 0.0)).collect();
    a.resize(n, Complex64::new(0.0, 0.0));
    let mut b: Vec<Complex64> = g.values.iter().map(|&v| Complex64::new(v, 0.0)).collect();
    b.resize(n, Complex64::new(0.0, 0.0));
    fwd.process(&mut a);
    fwd.process(&mut b);
    for (x, y) in a.iter_mut().zip(&b) {
        *x *= y;
    }
    inv.process(&mut a);
    let scale = 1.0 / n as f64;
    Signal::new(f.offset + g.offset, a[..len].iter().map(|z| z.re * scale).collect())
}

/// Autocorrelation `A(x) = sum_y f(y) f(y + x)`, returned on
/// `[-(L-1), L-1]` and symmetrized so that `A(x) = A(-x)` holds exactly.
pub fn autocorrelate_direct(f: &Signal) -> Signal {
    let l = f.len();
    if l == 0 {
        return Signal::new(0, Vec::new());
    }
    let nz: Vec<(usize, f64)> = f.values.iter().copied().enumerate().filter(|(_, v)| *v != 0.0).collect();
    let mut acc = vec![Neumaier::new(); 2 * l - 1];
    for &(i, a) in &nz {
        for &(j, b) in &nz {
            // x = j - i.
            acc[j + l - 1 - i].add(a * b);
        }
    }
    symmetrize(Signal::new(-(l as i64 - 1), acc.iter().map(Neumaier::value).collect()))
}

pub fn autocorrelate_fft(f: &Signal) -> Signal {
    let l = f.len();
    if l == 0 {
        return Signal::new(0, Vec::new());
    }
    let r = convolve_fft(&Signal::new(0, f.values.clone()), &Signal::new(0, f.values.iter().rev().copied().collect()));
    symmetrize(Signal::new(-(l as i64 - 1), r.values))
}

/// Atom count up to which the direct autocorrelation is used.
pub const DIRECT_ATOMS: usize = 1 << 12;

pub fn autocorrelate(f: &Signal) -> Signal {
    if f.support_size() <= DIRECT_ATOMS {
        autocorrelate_direct(f)
    } else {
        autocorrelate_fft(f)
    }
}

/// Averages `A(x)` and `A(-x)`; the signal must be centred at 0.
fn symmetrize(mut s: Signal) -> Signal {
    let n = s.values.len();
    for i in 0..n / 2 {
        let j = n - 1 - i;
        let m = 0.5 * (s.values[i] + s.values[j]);
        s.values[i] = m;
        s.values[j] = m;
    }
    s
}
