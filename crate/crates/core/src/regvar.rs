//! Regularly varying functions `h(x) = x^c l(x)`, their inverses `phi`, and
//! the thickness function `psi` built from an inverse.
//!
//! Four closed-form families are supported:
//!
//! | family        | `h(x)`                 | default `x0` |
//! |---------------|------------------------|--------------|
//! | `pow`         | `x^c`                  | 1            |
//! | `pow_log`     | `x^c ln x`             | e            |
//! | `pow_div_log` | `x^c / ln x`           | e^2          |
//! | `pow_explog`  | `x^c exp((ln x)^a)`    | e            |
//!
//! Derivatives are evaluated from the unified representation
//! `h = x^c g(L)`, `L = ln x`, so that `h' = x^(c-1) (c g + g')` and so on.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::hp::Hp;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum RegVarError {
    #[error("exponent c = {0} is outside the admissible range [1, 2)")]
    InadmissibleExponent(f64),
    #[error("slowly varying factor is not admissible: {0}")]
    InadmissibleSlowlyVarying(String),
    #[error("domain start x0 = {x0} is too small: {reason}")]
    DomainTooSmall { x0: f64, reason: String },
    #[error("inversion did not converge for y = {y} within {iterations} iterations")]
    NoConvergence { y: f64, iterations: usize },
    #[error("missing parameter `{0}`")]
    MissingParameter(&'static str),
    #[error("invalid value for `{key}`: {reason}")]
    InvalidParameter { key: &'static str, reason: String },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Family {
    Pow,
    PowLog,
    PowDivLog,
    PowExplog,
}

/// Serializable description of a member of one of the families.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FunctionSpec {
    pub family: Family,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub c: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub a: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub x0: Option<f64>,
}

impl FunctionSpec {
    pub fn pow(c: f64) -> Self {
        FunctionSpec { family: Family::Pow, c: Some(c), a: None, x0: None }
    }

    pub fn pow_log(c: f64) -> Self {
        FunctionSpec { family: Family::PowLog, c: Some(c), a: None, x0: None }
    }

    pub fn pow_div_log(c: f64) -> Self {
        FunctionSpec { family: Family::PowDivLog, c: Some(c), a: None, x0: None }
    }

    /// `x exp((ln x)^a)`; the exponent `c` defaults to 1.
    pub fn pow_explog(a: f64) -> Self {
        FunctionSpec { family: Family::PowExplog, c: None, a: Some(a), x0: None }
    }

    pub fn with_x0(mut self, x0: f64) -> Self {
        self.x0 = Some(x0);
        self
    }
}

/// Tolerance of the numerical regular-variation ratio test.
pub const DEFAULT_RATIO_TOL: f64 = 1.0;

/// An admissible regularly varying function.
#[derive(Debug, Clone, PartialEq)]
pub struct RegVar {
    spec: FunctionSpec,
    family: Family,
    c: f64,
    a: f64,
    x0: f64,
    /// `x0 = e^k` when the default domain start is used.
    x0_exp: Option<u32>,
    /// `c = p / q` when `c` is a short rational (`q <= 64`).
    c_rational: Option<(i64, i64)>,
    y0: f64,
}

/// Best rational approximation `p / q` with `q <= qmax` agreeing with `x` to
/// within `1e-12`, found from the continued fraction of `x`.
pub fn rational_approx(x: f64, qmax: i64) -> Option<(i64, i64)> {
    if !x.is_finite() || x <= 0.0 {
        return None;
    }
    let (mut p0, mut q0, mut p1, mut q1) = (0i64, 1i64, 1i64, 0i64);
    let mut r = x;
    for _ in 0..40 {
        let a = r.floor();
        if a > 1e12 {
            break;
        }
        let a = a as i64;
        let p2 = a.checked_mul(p1)?.checked_add(p0)?;
        let q2 = a.checked_mul(q1)?.checked_add(q0)?;
        if q2 > qmax {
            break;
        }
        if ((p2 as f64) / (q2 as f64) - x).abs() <= 1e-12 * x.max(1.0) {
            return Some((p2, q2));
        }
        (p0, q0, p1, q1) = (p1, q1, p2, q2);
        let f = r - r.floor();
        if f == 0.0 {
            break;
        }
        r = 1.0 / f;
    }
    None
}

/// Validates a function spec and builds the function, running the
/// regular-variation ratio test with [`DEFAULT_RATIO_TOL`].
pub fn make_function(spec: &FunctionSpec) -> Result<RegVar, RegVarError> {
    make_function_with_tol(spec, DEFAULT_RATIO_TOL)
}

pub fn make_function_with_tol(spec: &FunctionSpec, ratio_tol: f64) -> Result<RegVar, RegVarError> {
    let family = spec.family;
    let c = match (family, spec.c) {
        (_, Some(c)) => c,
        (Family::PowExplog, None) => 1.0,
        (_, None) => return Err(RegVarError::MissingParameter("c")),
    };
    if !(1.0..2.0).contains(&c) {
        return Err(RegVarError::InadmissibleExponent(c));
    }
    let a = match family {
        Family::PowExplog => {
            let a = spec.a.ok_or(RegVarError::MissingParameter("a"))?;
            if !(a > 0.0 && a < 1.0) {
                return Err(RegVarError::InadmissibleSlowlyVarying(format!(
                    "exp((ln x)^a) needs a in (0, 1), got a = {a}"
                )));
            }
            a
        }
        _ => {
            if spec.a.is_some() {
                return Err(RegVarError::InvalidParameter {
                    key: "a",
                    reason: "only the pow_explog family takes `a`".into(),
                });
            }
            0.0
        }
    };
    if c == 1.0 && matches!(family, Family::Pow | Family::PowDivLog) {
        return Err(RegVarError::InadmissibleSlowlyVarying(
            "c = 1 requires an unbounded slowly varying factor such as ln x or exp((ln x)^a)".into(),
        ));
    }
    let (x0, x0_exp) = match (spec.x0, family) {
        (Some(x0), _) => (x0, None),
        (None, Family::Pow) => (1.0, None),
        (None, Family::PowDivLog) => (std::f64::consts::E * std::f64::consts::E, Some(2)),
        (None, _) => (std::f64::consts::E, Some(1)),
    };
    if !(x0.is_finite() && x0 > 0.0) {
        return Err(RegVarError::InvalidParameter { key: "x0", reason: format!("{x0} is not positive") });
    }
    if family != Family::Pow && x0 <= 1.0 {
        return Err(RegVarError::DomainTooSmall {
            x0,
            reason: "ln x must be positive on the domain".into(),
        });
    }
    let mut f = RegVar {
        spec: spec.clone(),
        family,
        c,
        a,
        x0,
        x0_exp,
        c_rational: if family == Family::Pow { rational_approx(c, 64) } else { None },
        y0: 0.0,
    };
    f.y0 = f.h(x0);
    if !(f.y0 >= 1.0) {
        return Err(RegVarError::DomainTooSmall { x0, reason: format!("h(x0) = {} < 1", f.y0) });
    }
    f.check_shape(ratio_tol)?;
    Ok(f)
}

impl RegVar {
    pub fn spec(&self) -> &FunctionSpec {
        &self.spec
    }

    pub fn family(&self) -> Family {
        self.family
    }

    /// Regular-variation index.
    pub fn c(&self) -> f64 {
        self.c
    }

    pub fn x0(&self) -> f64 {
        self.x0
    }

    /// `c = p / q` for the pure power family when `c` is a short rational.
    pub fn c_rational(&self) -> Option<(i64, i64)> {
        self.c_rational
    }

    /// Monotonicity and convexity on a geometric grid, plus the ratio test
    /// `h(2x) / h(x) -> 2^c`.
    fn check_shape(&self, ratio_tol: f64) -> Result<(), RegVarError> {
        let mut x = self.x0;
        let mut prev_dev = f64::INFINITY;
        let mut devs = Vec::new();
        while x < 1e15 {
            let [_, d1, d2, _] = self.derivs(x);
            if !(d1 > 0.0) {
                return Err(RegVarError::DomainTooSmall {
                    x0: self.x0,
                    reason: format!("h is not increasing near x = {x:.6e}"),
                });
            }
            let scale = self.c * (self.c - 1.0).max(1e-3) * d1 / x;
            if d2 < -1e-12 * scale {
                return Err(RegVarError::DomainTooSmall {
                    x0: self.x0,
                    reason: format!(
                        "h is not convex near x = {x:.6e}; choose x0 beyond the last inflection point"
                    ),
                });
            }
            let dev = (self.h(2.0 * x) / self.h(x) / 2f64.powf(self.c) - 1.0).abs();
            devs.push(dev);
            prev_dev = prev_dev.min(dev);
            x *= 2.0;
        }
        let tail = &devs[devs.len() / 2..];
        let increasing = tail.windows(2).any(|w| w[1] > w[0] * (1.0 + 1e-9) + 1e-15);
        let last = *tail.last().unwrap_or(&0.0);
        if increasing || last > ratio_tol {
            return Err(RegVarError::InadmissibleSlowlyVarying(format!(
                "ratio test h(2x)/h(x) -> 2^c failed (final deviation {last:.3e})"
            )));
        }
        Ok(())
    }

    /// `[g, g', g'', g''']` with respect to `L = ln x`.
    fn g(&self, l: f64) -> [f64; 4] {
        match self.family {
            Family::Pow => [1.0, 0.0, 0.0, 0.0],
            Family::PowLog => [l, 1.0, 0.0, 0.0],
            Family::PowDivLog => {
                let r = 1.0 / l;
                [r, -r * r, 2.0 * r * r * r, -6.0 * r * r * r * r]
            }
            Family::PowExplog => {
                let a = self.a;
                let e = l.powf(a).exp();
                let p = a * (a - 1.0) * l.powf(a - 2.0) + a * a * l.powf(2.0 * a - 2.0);
                let dp = a * (a - 1.0) * (a - 2.0) * l.powf(a - 3.0)
                    + a * a * (2.0 * a - 2.0) * l.powf(2.0 * a - 3.0);
                let g1 = a * l.powf(a - 1.0) * e;
                [e, g1, e * p, e * (a * l.powf(a - 1.0) * p + dp)]
            }
        }
    }

    /// `[h, h', h'', h''']` at `x > 0`.
    pub fn derivs(&self, x: f64) -> [f64; 4] {
        let c = self.c;
        if self.family == Family::Pow {
            let p = x.powf(c);
            return [p, c * p / x, c * (c - 1.0) * p / (x * x), c * (c - 1.0) * (c - 2.0) * p / (x * x * x)];
        }
        let [g, g1, g2, g3] = self.g(x.ln());
        let big1 = c * g + g1;
        let big2 = c * (c - 1.0) * g + (2.0 * c - 1.0) * g1 + g2;
        let big2p = c * (c - 1.0) * g1 + (2.0 * c - 1.0) * g2 + g3;
        let big3 = (c - 2.0) * big2 + big2p;
        let xc = x.powf(c);
        [xc * g, xc / x * big1, xc / (x * x) * big2, xc / (x * x * x) * big3]
    }

    pub fn h(&self, x: f64) -> f64 {
        let c = self.c;
        let l = x.ln();
        match self.family {
            Family::Pow => x.powf(c),
            Family::PowLog => x.powf(c) * l,
            Family::PowDivLog => x.powf(c) / l,
            Family::PowExplog => (c * l + l.powf(self.a)).exp(),
        }
    }

    pub fn dh(&self, x: f64) -> f64 {
        self.derivs(x)[1]
    }

    fn c_hp(&self) -> Hp {
        match self.c_rational {
            Some((p, q)) => Hp::ratio(p, q),
            None => Hp::from_f64(self.c),
        }
    }

    fn x0_hp(&self) -> Hp {
        match self.x0_exp {
            Some(1) => Hp::e(),
            Some(k) => Hp::from_u64(k as u64).exp(),
            None => Hp::from_f64(self.x0),
        }
    }

    /// `h(x)` in extended precision.
    pub fn h_hp(&self, x: &Hp) -> Hp {
        let l = x.ln();
        let xc = l.mul(&self.c_hp()).exp();
        match self.family {
            Family::Pow => xc,
            Family::PowLog => xc.mul(&l),
            Family::PowDivLog => xc.div(&l),
            Family::PowExplog => xc.mul(&l.powf(&Hp::from_f64(self.a)).exp()),
        }
    }

    /// `h'(x)` in extended precision.
    pub fn dh_hp(&self, x: &Hp) -> Hp {
        let c = self.c_hp();
        let l = x.ln();
        let xc1 = l.mul(&c.sub(&Hp::one())).exp();
        let big1 = match self.family {
            Family::Pow => c,
            Family::PowLog => c.mul(&l).add(&Hp::one()),
            Family::PowDivLog => {
                let r = Hp::one().div(&l);
                c.mul(&r).sub(&r.mul(&r))
            }
            Family::PowExplog => {
                let a = Hp::from_f64(self.a);
                let la = l.powf(&a);
                let e = la.exp();
                c.mul(&e).add(&a.mul(&la).div(&l).mul(&e))
            }
        };
        xc1.mul(&big1)
    }

    pub fn invert(&self) -> Inverse {
        Inverse { f: self.clone() }
    }
}

/// The inverse `phi = h^{-1}`.
///
/// For the non-power families `h` is only inverted on `[h(x0), inf)`; below
/// `h(x0)` the inverse is continued linearly through the origin.
#[derive(Debug, Clone, PartialEq)]
pub struct Inverse {
    f: RegVar,
}

/// Iteration budget for the safeguarded Newton inversion.
pub const NEWTON_BUDGET: usize = 200;

impl Inverse {
    pub fn function(&self) -> &RegVar {
        &self.f
    }

    /// Slope of the linear continuation below `h(x0)`, or `None` for the pure
    /// power family which is inverted in closed form everywhere.
    fn prefix_slope(&self) -> Option<f64> {
        match self.f.family {
            Family::Pow => None,
            _ => Some(self.f.x0 / self.f.y0),
        }
    }

    /// End of the linear continuation (`h(x0)`), or 0 for the power family.
    pub fn prefix_end(&self) -> f64 {
        match self.f.family {
            Family::Pow => 0.0,
            _ => self.f.y0,
        }
    }

    pub fn phi(&self, y: f64) -> Result<f64, RegVarError> {
        if !(y >= 0.0) || !y.is_finite() {
            return Err(RegVarError::InvalidParameter { key: "y", reason: format!("{y} is not a finite non-negative number") });
        }
        if self.f.family == Family::Pow {
            return Ok(y.powf(1.0 / self.f.c));
        }
        if y < self.f.y0 {
            return Ok(y * self.f.x0 / self.f.y0);
        }
        let f = &self.f;
        let mut lo = f.x0;
        let mut hi = (2.0 * y.powf(1.0 / f.c) + 16.0).max(2.0 * f.x0);
        while f.h(hi) < y {
            lo = hi;
            hi *= 2.0;
            if !hi.is_finite() {
                return Err(RegVarError::NoConvergence { y, iterations: 0 });
            }
        }
        let mut x = y.powf(1.0 / f.c).clamp(lo, hi);
        for _ in 0..NEWTON_BUDGET {
            let [hx, d1, _, _] = f.derivs(x);
            let r = hx - y;
            if r == 0.0 {
                return Ok(x);
            }
            if r > 0.0 {
                hi = x;
            } else {
                lo = x;
            }
            let mut xn = x - r / d1;
            if !(xn > lo && xn < hi) {
                xn = 0.5 * (lo + hi);
            }
            if (xn - x).abs() <= 2.0 * f64::EPSILON * x || hi - lo <= 2.0 * f64::EPSILON * hi {
                return Ok(xn);
            }
            x = xn;
        }
        Err(RegVarError::NoConvergence { y, iterations: NEWTON_BUDGET })
    }

    /// `phi'(y) = 1 / h'(phi(y))`.
    pub fn dphi(&self, y: f64) -> Result<f64, RegVarError> {
        Ok(self.derivs(y)?[1])
    }

    /// `[phi, phi', phi'', phi''']` at `y`.
    pub fn derivs(&self, y: f64) -> Result<[f64; 4], RegVarError> {
        let x = self.phi(y)?;
        if let Some(s) = self.prefix_slope() {
            if y < self.f.y0 {
                return Ok([x, s, 0.0, 0.0]);
            }
        }
        let [_, d1, d2, d3] = self.f.derivs(x);
        let d1_3 = d1 * d1 * d1;
        Ok([x, 1.0 / d1, -d2 / d1_3, (3.0 * d2 * d2 - d1 * d3) / (d1_3 * d1 * d1)])
    }

    /// `phi(y)` in extended precision.
    pub fn phi_hp(&self, y: &Hp) -> Result<Hp, RegVarError> {
        let f = &self.f;
        if f.family == Family::Pow {
            let inv_c = match f.c_rational {
                Some((p, q)) => Hp::ratio(q, p),
                None => Hp::one().div(&Hp::from_f64(f.c)),
            };
            if y.cmp_hp(&Hp::zero()) == std::cmp::Ordering::Equal {
                return Ok(Hp::zero());
            }
            return Ok(y.powf(&inv_c));
        }
        let x0 = f.x0_hp();
        let y0 = f.h_hp(&x0);
        if y.cmp_hp(&y0) == std::cmp::Ordering::Less {
            return Ok(y.mul(&x0).div(&y0));
        }
        let mut x = Hp::from_f64(self.phi(y.to_f64())?);
        // Quadratic convergence from a double-precision start: 6 steps take
        // 53 correct bits well past the working precision.
        for _ in 0..6 {
            let r = f.h_hp(&x).sub(y);
            x = x.sub(&r.div(&f.dh_hp(&x)));
        }
        Ok(x)
    }

    /// `phi'(y)` in extended precision.
    pub fn dphi_hp(&self, y: &Hp) -> Result<Hp, RegVarError> {
        let f = &self.f;
        if f.family != Family::Pow {
            let x0 = f.x0_hp();
            let y0 = f.h_hp(&x0);
            if y.cmp_hp(&y0) == std::cmp::Ordering::Less {
                return Ok(x0.div(&y0));
            }
        }
        let x = self.phi_hp(y)?;
        Ok(Hp::one().div(&f.dh_hp(&x)))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PsiKind {
    /// `psi(x) = min(1/2, kappa phi'(x))`.
    #[default]
    Derivative,
    /// `psi(x) = min(1/2, kappa (phi(x + 1) - phi(x)))`.
    ForwardDifference,
}

fn default_kappa() -> f64 {
    1.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PsiSpec {
    #[serde(default = "default_kappa")]
    pub kappa: f64,
    #[serde(default)]
    pub kind: PsiKind,
}

impl PsiSpec {
    pub fn derivative(kappa: f64) -> Self {
        PsiSpec { kappa, kind: PsiKind::Derivative }
    }

    pub fn forward_difference(kappa: f64) -> Self {
        PsiSpec { kappa, kind: PsiKind::ForwardDifference }
    }
}

impl Default for PsiSpec {
    fn default() -> Self {
        PsiSpec::derivative(1.0)
    }
}

/// The thickness function `psi`, clipped at 1/2.
#[derive(Debug, Clone, PartialEq)]
pub struct Psi {
    inv: Inverse,
    kappa: f64,
    kind: PsiKind,
    clip: f64,
}

/// Builds `psi` from the inverse `phi_2`, locating the clip threshold
/// `x* = sup { x : kappa phi_2'(x) >= 1/2 }` (or its forward-difference analogue).
pub fn make_psi(inv: Inverse, spec: &PsiSpec) -> Result<Psi, RegVarError> {
    if !(spec.kappa.is_finite() && spec.kappa > 0.0) {
        return Err(RegVarError::InvalidParameter { key: "kappa", reason: format!("{} is not positive", spec.kappa) });
    }
    let mut psi = Psi { inv, kappa: spec.kappa, kind: spec.kind, clip: 0.0 };
    psi.clip = psi.find_clip()?;
    Ok(psi)
}

impl Psi {
    pub fn inverse(&self) -> &Inverse {
        &self.inv
    }

    pub fn kappa(&self) -> f64 {
        self.kappa
    }

    pub fn kind(&self) -> PsiKind {
        self.kind
    }

    /// Below this point `psi` equals 1/2.
    pub fn clip_threshold(&self) -> f64 {
        self.clip
    }

    fn raw(&self, x: f64) -> Result<f64, RegVarError> {
        Ok(match self.kind {
            PsiKind::Derivative => self.kappa * self.inv.dphi(x)?,
            PsiKind::ForwardDifference => self.kappa * (self.inv.phi(x + 1.0)? - self.inv.phi(x)?),
        })
    }

    fn find_clip(&self) -> Result<f64, RegVarError> {
        // The raw value is non-increasing past the linear prefix; scan for the
        // last point at which it is still >= 1/2.
        let start = self.inv.prefix_end();
        let mut lo = start;
        if self.raw(lo.max(1e-300))? < 0.5 {
            return Ok(if self.inv.prefix_slope().is_some() && self.kappa * self.inv.f.x0 / self.inv.f.y0 >= 0.5 {
                start
            } else {
                0.0
            });
        }
        let mut hi = (2.0 * lo).max(1.0);
        while self.raw(hi)? >= 0.5 {
            lo = hi;
            hi *= 2.0;
            if hi > 1e300 {
                return Ok(f64::INFINITY);
            }
        }
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if mid <= lo || mid >= hi {
                break;
            }
            if self.raw(mid)? >= 0.5 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        Ok(lo)
    }

    pub fn value(&self, x: f64) -> Result<f64, RegVarError> {
        Ok(self.raw(x)?.min(0.5))
    }

    /// `psi'(x)`; zero where the clip is active.
    pub fn derivative(&self, x: f64) -> Result<f64, RegVarError> {
        if self.raw(x)? >= 0.5 {
            return Ok(0.0);
        }
        Ok(match self.kind {
            PsiKind::Derivative => self.kappa * self.inv.derivs(x)?[2],
            PsiKind::ForwardDifference => self.kappa * (self.inv.dphi(x + 1.0)? - self.inv.dphi(x)?),
        })
    }

    /// `psi''(x)`; zero where the clip is active.
    pub fn second_derivative(&self, x: f64) -> Result<f64, RegVarError> {
        if self.raw(x)? >= 0.5 {
            return Ok(0.0);
        }
        Ok(match self.kind {
            PsiKind::Derivative => self.kappa * self.inv.derivs(x)?[3],
            PsiKind::ForwardDifference => self.kappa * (self.inv.derivs(x + 1.0)?[2] - self.inv.derivs(x)?[2]),
        })
    }

    /// `psi(x)` in extended precision.
    pub fn value_hp(&self, x: &Hp) -> Result<Hp, RegVarError> {
        let k = Hp::from_f64(self.kappa);
        let raw = match self.kind {
            PsiKind::Derivative => k.mul(&self.inv.dphi_hp(x)?),
            PsiKind::ForwardDifference => {
                let x1 = x.add(&Hp::one());
                k.mul(&self.inv.phi_hp(&x1)?.sub(&self.inv.phi_hp(x)?))
            }
        };
        Ok(raw.min(&Hp::ratio(1, 2)))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn all_specs() -> Vec<FunctionSpec> {
        vec![
            FunctionSpec::pow(1.05),
            FunctionSpec::pow(1.5),
            FunctionSpec::pow(1.9),
            FunctionSpec::pow_log(1.05),
            FunctionSpec::pow_log(1.0),
            FunctionSpec::pow_div_log(1.25),
            FunctionSpec::pow_explog(0.5),
            FunctionSpec::pow_explog(0.9),
        ]
    }

    #[test]
    fn worked_values() {
        let f = make_function(&FunctionSpec::pow(1.5)).unwrap();
        assert!((f.h(4.0) - 8.0).abs() < 1e-12);
        let inv = f.invert();
        assert!((inv.phi(8.0).unwrap() - 4.0).abs() < 1e-12);
        let g = make_function(&FunctionSpec::pow(1.25)).unwrap();
        assert!((g.invert().phi(32.0).unwrap() - 16.0).abs() < 1e-12);
    }

    #[test]
    fn exponent_out_of_range() {
        for c in [2.3, 2.0, 0.99, f64::NAN] {
            let e = make_function(&FunctionSpec::pow(c)).unwrap_err();
            assert!(matches!(e, RegVarError::InadmissibleExponent(_)), "{c}: {e}");
        }
    }

    #[test]
    fn c_one_needs_unbounded_factor() {
        assert!(matches!(
            make_function(&FunctionSpec::pow(1.0)),
            Err(RegVarError::InadmissibleSlowlyVarying(_))
        ));
        assert!(make_function(&FunctionSpec::pow_log(1.0)).is_ok());
        assert!(make_function(&FunctionSpec::pow_explog(0.5)).is_ok());
        assert!(matches!(
            make_function(&FunctionSpec::pow_explog(1.0)),
            Err(RegVarError::InadmissibleSlowlyVarying(_))
        ));
    }

    #[test]
    fn domain_checks() {
        assert!(matches!(
            make_function(&FunctionSpec::pow_log(1.2).with_x0(1.0)),
            Err(RegVarError::DomainTooSmall { .. })
        ));
        // x^1.05 / ln x has an inflection point near ln x = 18.9.
        assert!(matches!(
            make_function(&FunctionSpec::pow_div_log(1.05)),
            Err(RegVarError::DomainTooSmall { .. })
        ));
        assert!(make_function(&FunctionSpec::pow_div_log(1.05).with_x0(19.5f64.exp())).is_ok());
    }

    #[test]
    fn missing_and_stray_parameters() {
        let spec = FunctionSpec { family: Family::Pow, c: None, a: None, x0: None };
        assert_eq!(make_function(&spec), Err(RegVarError::MissingParameter("c")));
        let spec = FunctionSpec { family: Family::Pow, c: Some(1.5), a: Some(0.5), x0: None };
        assert!(matches!(make_function(&spec), Err(RegVarError::InvalidParameter { key: "a", .. })));
    }

    #[test]
    fn json_round_trip_and_unknown_keys() {
        let s = r#"{"family":"pow_explog","a":0.5}"#;
        let spec: FunctionSpec = serde_json::from_str(s).unwrap();
        assert_eq!(spec, FunctionSpec::pow_explog(0.5));
        let back = serde_json::to_string(&spec).unwrap();
        assert_eq!(back, s);
        let bad = serde_json::from_str::<FunctionSpec>(r#"{"family":"pow","c":1.5,"d":1}"#);
        assert!(bad.unwrap_err().to_string().contains("unknown field `d`"));
    }

    #[test]
    fn round_trip_inversion() {
        for spec in all_specs() {
            let f = make_function(&spec).unwrap();
            let inv = f.invert();
            let mut y = inv.prefix_end().max(1.0);
            while y < 1e15 {
                let x = inv.phi(y).unwrap();
                assert!((f.h(x) - y).abs() <= 1e-12 * y, "{spec:?} y={y}");
                y *= 1.7;
            }
        }
    }

    #[test]
    fn derivatives_against_finite_differences() {
        for spec in all_specs() {
            let f = make_function(&spec).unwrap();
            let inv = f.invert();
            let mut y = inv.prefix_end().max(1.0) * 1.5;
            while y < 1e12 {
                let d = inv.derivs(y).unwrap();
                let s = 1e-4 * y;
                let fd1 = (inv.phi(y + s).unwrap() - inv.phi(y - s).unwrap()) / (2.0 * s);
                let fd2 = (inv.dphi(y + s).unwrap() - inv.dphi(y - s).unwrap()) / (2.0 * s);
                assert!((fd1 - d[1]).abs() <= 1e-6 * d[1].abs(), "{spec:?} phi' at {y}");
                assert!((fd2 - d[2]).abs() <= 1e-6 * d[2].abs(), "{spec:?} phi'' at {y}");
                // Closed forms against the definition through h.
                let [_, h1, h2, _] = f.derivs(d[0]);
                assert!((d[1] - 1.0 / h1).abs() <= 1e-10 * d[1]);
                assert!((d[2] + h2 / h1.powi(3)).abs() <= 1e-10 * d[2].abs());
                y *= 3.1;
            }
        }
    }

    #[test]
    fn h_derivatives_against_finite_differences() {
        for spec in all_specs() {
            let f = make_function(&spec).unwrap();
            let mut x = f.x0() * 1.5;
            while x < 1e12 {
                let d = f.derivs(x);
                let s = 1e-4 * x;
                for k in 0..3 {
                    let fd = (f.derivs(x + s)[k] - f.derivs(x - s)[k]) / (2.0 * s);
                    assert!((fd - d[k + 1]).abs() <= 1e-6 * d[k + 1].abs(), "{spec:?} order {} at {x}", k + 1);
                }
                x *= 2.9;
            }
        }
    }

    #[test]
    fn psi_values_and_clip() {
        let inv = make_function(&FunctionSpec::pow(1.5)).unwrap().invert();
        let psi = make_psi(inv, &PsiSpec::derivative(1.0)).unwrap();
        assert!((psi.value(8.0).unwrap() - 1.0 / 3.0).abs() < 1e-12);
        assert_eq!(psi.value(1.0).unwrap(), 0.5);
        // (2/3) x^(-1/3) = 1/2 at x = (4/3)^3.
        assert!((psi.clip_threshold() - (4.0f64 / 3.0).powi(3)).abs() < 1e-9);
        let inv = make_function(&FunctionSpec::pow(1.05)).unwrap().invert();
        let psi = make_psi(inv, &PsiSpec::derivative(1.0)).unwrap();
        let t = (2.0f64 / 1.05).powf(20.0);
        assert!((psi.clip_threshold() / t.powf(1.05) - 1.0).abs() < 1e-9);
    }

    #[test]
    fn psi_derivatives() {
        let inv = make_function(&FunctionSpec::pow_log(1.1)).unwrap().invert();
        let psi = make_psi(inv, &PsiSpec::derivative(0.7)).unwrap();
        let mut x = psi.clip_threshold() * 2.0 + 10.0;
        while x < 1e10 {
            let s = 1e-4 * x;
            let fd = (psi.value(x + s).unwrap() - psi.value(x - s).unwrap()) / (2.0 * s);
            let d = psi.derivative(x).unwrap();
            assert!((fd - d).abs() <= 1e-6 * d.abs());
            let fd2 = (psi.derivative(x + s).unwrap() - psi.derivative(x - s).unwrap()) / (2.0 * s);
            let d2 = psi.second_derivative(x).unwrap();
            assert!((fd2 - d2).abs() <= 1e-6 * d2.abs());
            x *= 5.0;
        }
        assert!(matches!(
            make_psi(make_function(&FunctionSpec::pow(1.5)).unwrap().invert(), &PsiSpec::derivative(0.0)),
            Err(RegVarError::InvalidParameter { key: "kappa", .. })
        ));
    }

    #[test]
    fn extended_precision_agrees() {
        for spec in all_specs() {
            let f = make_function(&spec).unwrap();
            let inv = f.invert();
            for y in [3.0, 1234.5, 9.87e6] {
                let a = inv.phi(y).unwrap();
                let b = inv.phi_hp(&Hp::from_f64(y)).unwrap().to_f64();
                assert!((a - b).abs() <= 4.0 * f64::EPSILON * a, "{spec:?} {y}");
                let x = Hp::from_f64(b);
                assert!((f.h_hp(&x).to_f64() - f.h(b)).abs() <= 1e-14 * f.h(b));
                if b > f.x0() {
                    assert!((f.dh_hp(&x).to_f64() - f.dh(b)).abs() <= 1e-13 * f.dh(b));
                }
            }
        }
    }

    #[test]
    fn rational_exponents() {
        assert_eq!(rational_approx(1.5, 64), Some((3, 2)));
        assert_eq!(rational_approx(1.05, 64), Some((21, 20)));
        assert_eq!(rational_approx(std::f64::consts::SQRT_2, 64), None);
    }
}
