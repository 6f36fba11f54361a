//! Binary floating point with a wide mantissa, enough for reference values
//! built from `+ - * /`, square roots and integer powers.

use std::cmp::Ordering;

use num_bigint::{BigInt, Sign};
use num_traits::{Signed, ToPrimitive, Zero};

/// Mantissa bits kept after every operation (about 1230 decimal digits).
pub const PREC: u64 = 4096;

/// `mant * 2^exp`.
#[derive(Clone, Debug)]
pub struct BigFloat {
    mant: BigInt,
    exp: i64,
}

impl BigFloat {
    pub fn zero() -> Self {
        Self { mant: BigInt::zero(), exp: 0 }
    }

    pub fn from_u64(v: u64) -> Self {
        Self { mant: BigInt::from(v), exp: 0 }.norm()
    }

    pub fn from_f64(x: f64) -> Self {
        assert!(x.is_finite(), "finite input expected");
        if x == 0.0 {
            return Self::zero();
        }
        let bits = x.to_bits();
        let sign = if bits >> 63 == 0 { 1i64 } else { -1 };
        let raw_exp = ((bits >> 52) & 0x7ff) as i64;
        let frac = bits & ((1u64 << 52) - 1);
        let (m, e) = if raw_exp == 0 { (frac, -1074) } else { (frac | (1u64 << 52), raw_exp - 1075) };
        Self { mant: BigInt::from(m) * sign, exp: e }.norm()
    }

    /// Power of two `2^k`.
    pub fn pow2(k: i64) -> Self {
        Self { mant: BigInt::from(1u8), exp: k }
    }

    fn norm(mut self) -> Self {
        if self.mant.is_zero() {
            self.exp = 0;
            return self;
        }
        let bits = self.mant.bits();
        if bits > PREC {
            let shift = bits - PREC;
            self.mant >>= shift as usize;
            self.exp += shift as i64;
        }
        self
    }

    pub fn is_zero(&self) -> bool {
        self.mant.is_zero()
    }

    pub fn is_negative(&self) -> bool {
        self.mant.sign() == Sign::Minus
    }

    pub fn add(&self, o: &Self) -> Self {
        if self.is_zero() {
            return o.clone();
        }
        if o.is_zero() {
            return self.clone();
        }
        let e = self.exp.min(o.exp);
        // Aligning a far smaller term would only produce bits that are cut
        // again; drop it once it lies entirely below the kept precision.
        let top = (self.exp + self.mant.bits() as i64).max(o.exp + o.mant.bits() as i64);
        let floor = top - 2 * PREC as i64 - 8;
        let e = e.max(floor);
        let a = Self::shifted(&self.mant, self.exp - e);
        let b = Self::shifted(&o.mant, o.exp - e);
        Self { mant: a + b, exp: e }.norm()
    }

    fn shifted(m: &BigInt, s: i64) -> BigInt {
        if s >= 0 {
            m << (s as usize)
        } else {
            m >> ((-s) as usize)
        }
    }

    pub fn neg(&self) -> Self {
        Self { mant: -self.mant.clone(), exp: self.exp }
    }

    pub fn sub(&self, o: &Self) -> Self {
        self.add(&o.neg())
    }

    pub fn mul(&self, o: &Self) -> Self {
        Self { mant: &self.mant * &o.mant, exp: self.exp + o.exp }.norm()
    }

    pub fn div(&self, o: &Self) -> Self {
        assert!(!o.is_zero(), "division by zero");
        let shift = (PREC + o.mant.bits()) as usize + 2;
        Self { mant: (&self.mant << shift) / &o.mant, exp: self.exp - o.exp - shift as i64 }.norm()
    }

    pub fn sqrt(&self) -> Self {
        assert!(!self.is_negative(), "square root of a negative number");
        if self.is_zero() {
            return Self::zero();
        }
        let mut shift = (2 * PREC + 2).saturating_sub(self.mant.bits()) as i64;
        if (self.exp - shift) % 2 != 0 {
            shift += 1;
        }
        let m = &self.mant << (shift as usize);
        Self { mant: m.sqrt(), exp: (self.exp - shift) / 2 }.norm()
    }

    pub fn powu(&self, mut k: u64) -> Self {
        let mut base = self.clone();
        let mut acc = Self::from_u64(1);
        while k > 0 {
            if k & 1 == 1 {
                acc = acc.mul(&base);
            }
            base = base.mul(&base);
            k >>= 1;
        }
        acc
    }

    pub fn cmp_val(&self, o: &Self) -> Ordering {
        let diff = self.sub(o);
        if diff.is_zero() {
            Ordering::Equal
        } else if diff.is_negative() {
            Ordering::Less
        } else {
            Ordering::Greater
        }
    }

    /// Nearest `f64` up to a couple of ulps; values beyond the `f64` range map
    /// to `0` or infinity.
    pub fn to_f64(&self) -> f64 {
        if self.is_zero() {
            return 0.0;
        }
        let bits = self.mant.bits() as i64;
        let keep = 64.min(bits);
        let top = Self::shifted(&self.mant.abs(), keep - bits).to_u64().expect("fits in 64 bits") as f64;
        let e = self.exp + bits - keep;
        let v = if e > 2000 {
            f64::INFINITY
        } else if e < -2200 {
            0.0
        } else {
            // split the scaling so intermediate powers stay finite
            let half = e / 2;
            top * 2f64.powi(half as i32) * 2f64.powi((e - half) as i32)
        };
        if self.is_negative() {
            -v
        } else {
            v
        }
    }

    /// Natural logarithm to about `f64` accuracy, for comparing quantities
    /// outside the `f64` range.
    pub fn ln_f64(&self) -> f64 {
        assert!(!self.is_zero() && !self.is_negative(), "log of a non-positive number");
        let bits = self.mant.bits() as i64;
        let keep = 64.min(bits);
        let top = Self::shifted(&self.mant, keep - bits).to_u64().expect("fits in 64 bits") as f64;
        top.ln() + (self.exp + bits - keep) as f64 * std::f64::consts::LN_2
    }
}
