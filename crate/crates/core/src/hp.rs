//! Extended-precision scalar used when double precision cannot decide a
//! membership question. Thin wrapper over `astro_float::BigFloat` at a fixed
//! working precision of 256 bits (about 77 decimal digits).

use std::cell::RefCell;
use std::cmp::Ordering;
use std::ops::{Add, Div, Mul, Neg, Sub};

use astro_float::{BigFloat, Consts, RoundingMode};

/// Working precision in bits.
pub const PREC: usize = 256;

/// Decimal digits carried by [`PREC`] bits, rounded down.
pub const DIGITS: u32 = 77;

const RM: RoundingMode = RoundingMode::ToEven;

thread_local! {
    static CONSTS: RefCell<Consts> =
        RefCell::new(Consts::new().expect("astro-float constant cache"));
}

fn with_consts<R>(f: impl FnOnce(&mut Consts) -> R) -> R {
    CONSTS.with(|c| f(&mut c.borrow_mut()))
}

#[derive(Clone, Debug)]
pub struct Hp(BigFloat);

impl Hp {
    pub fn from_f64(x: f64) -> Self {
        Hp(BigFloat::from_f64(x, PREC))
    }

    pub fn from_i64(x: i64) -> Self {
        Hp(BigFloat::from_i64(x, PREC))
    }

    pub fn from_u64(x: u64) -> Self {
        Hp(BigFloat::from_u64(x, PREC))
    }

    /// The rational `p / q` rounded to working precision.
    pub fn ratio(p: i64, q: i64) -> Self {
        Hp::from_i64(p).div(&Hp::from_i64(q))
    }

    pub fn zero() -> Self {
        Hp::from_u64(0)
    }

    pub fn one() -> Self {
        Hp::from_u64(1)
    }

    pub fn e() -> Self {
        Hp(with_consts(|cc| cc.e(PREC, RM)))
    }

    pub fn add(&self, o: &Hp) -> Hp {
        Hp(self.0.add(&o.0, PREC, RM))
    }

    pub fn sub(&self, o: &Hp) -> Hp {
        Hp(self.0.sub(&o.0, PREC, RM))
    }

    pub fn mul(&self, o: &Hp) -> Hp {
        Hp(self.0.mul(&o.0, PREC, RM))
    }

    pub fn div(&self, o: &Hp) -> Hp {
        Hp(self.0.div(&o.0, PREC, RM))
    }

    pub fn ln(&self) -> Hp {
        Hp(with_consts(|cc| self.0.ln(PREC, RM, cc)))
    }

    pub fn exp(&self) -> Hp {
        Hp(with_consts(|cc| self.0.exp(PREC, RM, cc)))
    }

    /// `self^y` for positive `self`.
    pub fn powf(&self, y: &Hp) -> Hp {
        self.ln().mul(y).exp()
    }

    pub fn floor(&self) -> Hp {
        Hp(self.0.floor())
    }

    pub fn ceil(&self) -> Hp {
        Hp(self.0.ceil())
    }

    /// `self - floor(self)`, in `[0, 1)`.
    pub fn frac(&self) -> Hp {
        self.sub(&self.floor())
    }

    pub fn abs(&self) -> Hp {
        Hp(self.0.abs())
    }

    pub fn is_finite(&self) -> bool {
        !self.0.is_nan() && !self.0.is_inf()
    }

    pub fn min(&self, o: &Hp) -> Hp {
        if self.cmp_hp(o) == Ordering::Greater {
            o.clone()
        } else {
            self.clone()
        }
    }

    pub fn cmp_hp(&self, o: &Hp) -> Ordering {
        match self.0.cmp(&o.0) {
            Some(c) if c < 0 => Ordering::Less,
            Some(0) => Ordering::Equal,
            _ => Ordering::Greater,
        }
    }

    /// Nearest double, via a decimal round trip (correctly rounded parse).
    pub fn to_f64(&self) -> f64 {
        if self.0.is_nan() {
            return f64::NAN;
        }
        if self.0.is_zero() {
            return 0.0;
        }
        let s = format!("{}", self.0);
        s.parse::<f64>().unwrap_or(f64::NAN)
    }

    /// The value as an `i128` if it is an integer of modest size.
    pub fn to_i128(&self) -> Option<i128> {
        if !self.0.is_int() {
            return None;
        }
        let s = format!("{}", self.0);
        let v: f64 = s.parse().ok()?;
        if v.abs() < 1e30 {
            // Integers below 2^53 round-trip exactly through the decimal form;
            // larger ones go through the exact mantissa digits.
            if v.abs() < 9.0e15 {
                return Some(v as i128);
            }
            let (mant, exp) = s.split_once('e')?;
            let exp: i32 = exp.parse().ok()?;
            let neg = mant.starts_with('-');
            let digits: String = mant.chars().filter(|c| c.is_ascii_digit()).collect();
            let int_digits = exp + 1;
            if int_digits <= 0 || int_digits as usize > digits.len() + 40 {
                return None;
            }
            let mut out: i128 = 0;
            for i in 0..int_digits as usize {
                let d = digits.as_bytes().get(i).map(|b| (b - b'0') as i128).unwrap_or(0);
                out = out.checked_mul(10)?.checked_add(d)?;
            }
            return Some(if neg { -out } else { out });
        }
        None
    }
}

impl Add for &Hp {
    type Output = Hp;
    fn add(self, o: &Hp) -> Hp {
        Hp::add(self, o)
    }
}

impl Sub for &Hp {
    type Output = Hp;
    fn sub(self, o: &Hp) -> Hp {
        Hp::sub(self, o)
    }
}

impl Mul for &Hp {
    type Output = Hp;
    fn mul(self, o: &Hp) -> Hp {
        Hp::mul(self, o)
    }
}

impl Div for &Hp {
    type Output = Hp;
    fn div(self, o: &Hp) -> Hp {
        Hp::div(self, o)
    }
}

impl Neg for &Hp {
    type Output = Hp;
    fn neg(self) -> Hp {
        Hp(-self.0.clone())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trips_doubles() {
        for x in [1.0, 0.1, 3.75, 1e300, -2.5e-10, 123456789.0] {
            assert_eq!(Hp::from_f64(x).to_f64(), x);
        }
    }

    #[test]
    fn elementary_functions() {
        let e = Hp::e();
        assert!((e.to_f64() - std::f64::consts::E).abs() < 1e-15);
        assert!((e.ln().to_f64() - 1.0).abs() < 1e-15);
        let x = Hp::from_u64(8).powf(&Hp::ratio(2, 3));
        assert!((x.to_f64() - 4.0).abs() < 1e-15);
        // 8^(2/3) agrees with 4 far beyond double precision.
        let d = x.sub(&Hp::from_u64(4)).abs();
        assert!(d.cmp_hp(&Hp::from_f64(1e-70)) == Ordering::Less);
    }

    #[test]
    fn floor_and_frac() {
        let x = Hp::from_f64(-2.25);
        assert_eq!(x.floor().to_f64(), -3.0);
        assert_eq!(x.frac().to_f64(), 0.75);
        assert_eq!(Hp::from_f64(7.0).to_i128(), Some(7));
        assert_eq!(Hp::from_f64(7.5).to_i128(), None);
        assert_eq!(Hp::from_f64(2f64.powi(60)).to_i128(), Some(1i128 << 60));
    }
}
