//! Kernels supported on `B`: smooth dyadic `K_N`, flat `K_t`, the
//! `psi`-weighted `L_t`, and the autocorrelation of `K_N` split into the
//! smooth main term `G_N` and the error `E_N`.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::signal::{self, Signal};
use crate::thinset::ThinSet;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum KernelError {
    #[error("scale {scale} needs horizon {needed}, have {horizon}")]
    OutOfHorizon { scale: u64, needed: u64, horizon: u64 },
    #[error("B ∩ [1, {0}] is empty")]
    EmptySet(u64),
    #[error("scale must be positive")]
    ZeroScale,
}

fn s_fn(u: f64) -> f64 {
    if u > 0.0 {
        (-1.0 / u).exp()
    } else {
        0.0
    }
}

fn t_fn(u: f64) -> f64 {
    let a = s_fn(u);
    let b = s_fn(1.0 - u);
    a / (a + b)
}

/// Smooth bump with support in `(1/2, 4)`, equal to 1 on `[1, 2]`:
/// `T(2x - 1)` on `(1/2, 1]`, `T((4 - x) / 2)` on `[2, 4)`, where
/// `T(u) = S(u) / (S(u) + S(1 - u))` and `S(u) = exp(-1/u)`.
pub fn bump_eta(x: f64) -> f64 {
    if x <= 0.5 || x >= 4.0 {
        0.0
    } else if x < 1.0 {
        t_fn(2.0 * x - 1.0)
    } else if x <= 2.0 {
        1.0
    } else {
        t_fn((4.0 - x) / 2.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum KernelKind {
    /// `|B_t|^{-1} sum_{n in B_t} delta_n`.
    Flat,
    /// `phi_2(N)^{-1} sum_{n in B} eta(n / N) delta_n`.
    SmoothDyadic,
    /// `|B_t|^{-1} sum_{s <= t} psi(s) delta_s`.
    Weighted,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Kernel {
    pub signal: Signal,
    pub kind: KernelKind,
    pub scale: u64,
}

impl Kernel {
    pub fn mass(&self) -> f64 {
        self.signal.sum()
    }
}

pub fn kernel_smooth_dyadic(ts: &ThinSet, n: u64) -> Result<Kernel, KernelError> {
    if n == 0 {
        return Err(KernelError::ZeroScale);
    }
    if 4 * n > ts.horizon() {
        return Err(KernelError::OutOfHorizon { scale: n, needed: 4 * n, horizon: ts.horizon() });
    }
    let lo = n / 2 + 1;
    let hi = 4 * n - 1;
    let norm = ts.phi2(n as f64);
    let nf = n as f64;
    let values = (lo..=hi)
        .map(|k| if ts.contains(k as i64) { bump_eta(k as f64 / nf) / norm } else { 0.0 })
        .collect();
    Ok(Kernel { signal: Signal::new(lo as i64, values), kind: KernelKind::SmoothDyadic, scale: n })
}

fn check_t(ts: &ThinSet, t: u64) -> Result<u64, KernelError> {
    if t == 0 {
        return Err(KernelError::ZeroScale);
    }
    if t > ts.horizon() {
        return Err(KernelError::OutOfHorizon { scale: t, needed: t, horizon: ts.horizon() });
    }
    let c = ts.count(t).expect("checked horizon");
    if c == 0 {
        return Err(KernelError::EmptySet(t));
    }
    Ok(c)
}

pub fn kernel_flat(ts: &ThinSet, t: u64) -> Result<Kernel, KernelError> {
    let c = check_t(ts, t)?;
    let w = 1.0 / c as f64;
    let values = (1..=t).map(|k| if ts.contains(k as i64) { w } else { 0.0 }).collect();
    Ok(Kernel { signal: Signal::new(1, values), kind: KernelKind::Flat, scale: t })
}

pub fn kernel_weighted(ts: &ThinSet, t: u64) -> Result<Kernel, KernelError> {
    let c = check_t(ts, t)? as f64;
    let values = (1..=t).map(|k| ts.psi(k) / c).collect();
    Ok(Kernel { signal: Signal::new(1, values), kind: KernelKind::Weighted, scale: t })
}

/// `K * K~`, symmetric in `x`.
pub fn autocorrelate(k: &Kernel) -> Signal {
    signal::autocorrelate(&k.signal)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AutocorrReport {
    pub n: u64,
    /// `x` of the first entry of `kk`, `g` and `e`.
    pub x_min: i64,
    pub kk: Vec<f64>,
    pub g: Vec<f64>,
    pub e: Vec<f64>,
    pub phi1_n: f64,
    /// Lower cutoff of the small-`x` range: observed maximal run plus twice the
    /// observed gap between blocks.
    pub c0: u64,
    /// `max_{C0 <= |x| <= phi_1(N)} N |K * K~(x)|`.
    pub c_small: f64,
    /// `max_{|x| > phi_1(N)} |E_N(x)|`.
    pub e_max: f64,
    /// `N^{1 + chi_probe} e_max`.
    pub e_bound: f64,
    pub chi_probe: f64,
    /// `max_x |G_N(x + 1) - G_N(x)| N^2`.
    pub lipschitz: f64,
    /// `max_x N G_N(x)`.
    pub g_scaled_max: f64,
    pub symmetric: bool,
    /// `|sum K*K~ - (sum K)^2| / (sum K)^2`.
    pub mass_rel_error: f64,
    /// Set when `phi_1` and `phi_2` are not the same function.
    pub warning: Option<String>,
}

impl AutocorrReport {
    pub fn x_values(&self) -> impl Iterator<Item = i64> + '_ {
        (0..self.kk.len()).map(|i| self.x_min + i as i64)
    }
}

/// Autocorrelation of `K_N`, the main term
/// `G_N(x) = phi_2(N)^{-2} sum_n psi(n) psi(n + |x|) eta(n/N) eta((n + |x|)/N)`
/// and `E_N = K_N * K~_N - G_N`, with the summary maxima.
pub fn gn_en_split(ts: &ThinSet, n: u64, chi_probe: f64) -> Result<AutocorrReport, KernelError> {
    let k = kernel_smooth_dyadic(ts, n)?;
    let kk = autocorrelate(&k);
    let norm = ts.phi2(n as f64);
    let nf = n as f64;
    let dense = Signal::new(
        k.signal.offset,
        (0..k.signal.len())
            .map(|i| {
                let m = k.signal.offset as u64 + i as u64;
                ts.psi(m) * bump_eta(m as f64 / nf) / norm
            })
            .collect(),
    );
    let g = signal::autocorrelate_fft(&dense);
    debug_assert_eq!(g.offset, kk.offset);
    let x_min = kk.offset;
    let phi1_n = ts.phi1(nf);
    let stats = ts.run_stats();
    let gap = stats.dist_between_blocks_tail.unwrap_or(2);
    let c0 = stats.max_run + 2 * gap;
    let mut c_small = 0.0f64;
    let mut e_max = 0.0f64;
    let mut e = Vec::with_capacity(kk.len());
    let mut symmetric = true;
    for (i, (&a, &b)) in kk.values.iter().zip(&g.values).enumerate() {
        let x = x_min + i as i64;
        let ax = x.unsigned_abs() as f64;
        let d = a - b;
        e.push(d);
        if ax >= c0 as f64 && ax <= phi1_n {
            c_small = c_small.max(nf * a.abs());
        }
        if ax > phi1_n {
            e_max = e_max.max(d.abs());
        }
        if a != kk.get(-x) {
            symmetric = false;
        }
    }
    let lipschitz = g.values.windows(2).map(|w| (w[1] - w[0]).abs()).fold(0.0, f64::max) * nf * nf;
    let g_scaled_max = g.values.iter().fold(0.0f64, |m, v| m.max(*v)) * nf;
    let mass = k.mass();
    let mass_rel_error = (kk.sum() - mass * mass).abs() / (mass * mass);
    let warning = (ts.spec().h1 != ts.spec().h2).then(|| "phi_1 and phi_2 differ; the main-term approximation assumes they agree".to_string());
    Ok(AutocorrReport {
        n,
        x_min,
        kk: kk.values,
        g: g.values,
        e,
        phi1_n,
        c0,
        c_small,
        e_max,
        e_bound: nf.powf(1.0 + chi_probe) * e_max,
        chi_probe,
        lipschitz,
        g_scaled_max,
        symmetric,
        mass_rel_error,
        warning,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::signal::{autocorrelate_direct, autocorrelate_fft};
    use crate::thinset::{enumerate, registry_get};

    #[test]
    fn bump_values() {
        assert_eq!(bump_eta(1.5), 1.0);
        assert_eq!(bump_eta(1.0), 1.0);
        assert_eq!(bump_eta(2.0), 1.0);
        assert_eq!(bump_eta(0.4), 0.0);
        assert_eq!(bump_eta(0.5), 0.0);
        assert_eq!(bump_eta(4.0), 0.0);
        // Regression fixture: the bump is symmetric about the midpoint of [2, 4].
        assert_eq!(bump_eta(3.0), 0.5);
        assert!(bump_eta(3.5) > 0.0 && bump_eta(3.5) < 0.5);
        let mut x = -1.0;
        while x < 5.0 {
            let v = bump_eta(x);
            assert!((0.0..=1.0).contains(&v));
            x += 0.01;
        }
    }

    #[test]
    fn bump_is_smooth_at_the_joins() {
        // All one-sided difference quotients vanish at the plateau edges.
        for x in [1.0, 2.0] {
            for h in [1e-2, 1e-3] {
                assert!((bump_eta(x + h) - bump_eta(x - h)).abs() / h < 1e-10);
            }
        }
    }

    #[test]
    fn flat_kernel_on_integer_parts_of_powers() {
        let ts = enumerate(&registry_get("powers1.5").unwrap(), 20).unwrap();
        let k = kernel_flat(&ts, 20).unwrap();
        let atoms: Vec<(i64, f64)> = k.signal.nonzeros().collect();
        assert_eq!(atoms.iter().map(|a| a.0).collect::<Vec<_>>(), vec![1, 2, 5, 8, 11, 14, 18]);
        assert!(atoms.iter().all(|a| a.1 == 1.0 / 7.0));
        assert!((k.mass() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn kernel_supports_and_masses() {
        let ts = enumerate(&registry_get("pow1.05").unwrap(), 1 << 16).unwrap();
        let n = 1 << 12;
        let k = kernel_smooth_dyadic(&ts, n).unwrap();
        for (x, v) in k.signal.nonzeros() {
            assert!(x as u64 > n / 2 && (x as u64) < 4 * n);
            assert!(ts.contains(x));
            assert!(v > 0.0);
        }
        assert!(matches!(kernel_smooth_dyadic(&ts, 1 << 15), Err(KernelError::OutOfHorizon { .. })));
        let mut prev = f64::INFINITY;
        for t in [1u64 << 10, 1 << 13, 1 << 16] {
            let w = kernel_weighted(&ts, t).unwrap();
            let want = ts.psi_sum(t).unwrap() / ts.count(t).unwrap() as f64;
            assert!((w.mass() - want).abs() < 1e-12);
            let dev = (w.mass() - 1.0).abs();
            assert!(dev < prev);
            prev = dev;
            assert!((kernel_flat(&ts, t).unwrap().mass() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn autocorrelation_routes_agree() {
        let ts = enumerate(&registry_get("pow1.02").unwrap(), 1 << 12).unwrap();
        let k = kernel_smooth_dyadic(&ts, 1 << 10).unwrap();
        let a = autocorrelate_direct(&k.signal);
        let b = autocorrelate_fft(&k.signal);
        for (x, y) in a.values.iter().zip(&b.values) {
            assert!((x - y).abs() <= 1e-10);
        }
        let m = k.mass();
        assert!((a.sum() - m * m).abs() <= 1e-12 * m * m);
        assert!(a.values.iter().all(|v| *v <= a.get(0)));
    }

    #[test]
    fn split_report_is_consistent() {
        let ts = enumerate(&registry_get("pow1.02").unwrap(), 1 << 13).unwrap();
        let r = gn_en_split(&ts, 1 << 11, 0.0).unwrap();
        assert!(r.symmetric);
        assert!(r.mass_rel_error < 1e-12);
        assert!(r.c_small.is_finite() && r.c_small > 0.0);
        assert!(r.e_max.is_finite() && r.lipschitz.is_finite());
        assert!(r.warning.is_none());
        for (i, x) in r.x_values().enumerate() {
            assert_eq!(r.e[i], r.kk[i] - r.g[i]);
            let ax = x.unsigned_abs();
            if ax >= r.c0 && (ax as f64) <= r.phi1_n {
                assert!(r.n as f64 * r.kk[i] <= r.c_small);
            }
        }
    }
}
