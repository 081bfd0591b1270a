//! Angular-momentum bookkeeping for central-field spinors.
//!
//! Half-integers are carried doubled (`two_j = 2j`) everywhere so that all
//! selection rules are integer arithmetic.

use std::cmp::Ordering;
use std::fmt;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

use crate::error::{Error, Result};

/// Relativistic angular symmetry of a central-field spinor, labelled by κ.
///
/// `κ = -(j + 1/2)` when `j = l + 1/2` and `κ = +(j + 1/2)` when `j = l - 1/2`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct AngularSymmetry {
    kappa: i32,
}

impl AngularSymmetry {
    pub fn new(kappa: i32) -> Result<Self> {
        if kappa == 0 {
            return Err(Error::InvalidInput("kappa must be nonzero".into()));
        }
        Ok(Self { kappa })
    }

    /// Symmetry with orbital angular momentum `l` and `j = l + 1/2` (`high_j`) or `j = l - 1/2`.
    pub fn from_l(l: u32, high_j: bool) -> Result<Self> {
        if high_j {
            Self::new(-(l as i32) - 1)
        } else if l == 0 {
            Err(Error::InvalidInput("s shells have no j = l - 1/2 partner".into()))
        } else {
            Self::new(l as i32)
        }
    }

    pub fn kappa(&self) -> i32 {
        self.kappa
    }

    /// `2j = 2|κ| - 1`.
    pub fn two_j(&self) -> u32 {
        2 * self.kappa.unsigned_abs() - 1
    }

    pub fn j(&self) -> f64 {
        self.two_j() as f64 / 2.0
    }

    /// Orbital angular momentum of the large component.
    pub fn l_large(&self) -> u32 {
        if self.kappa > 0 {
            self.kappa as u32
        } else {
            (-self.kappa - 1) as u32
        }
    }

    /// Orbital angular momentum of the small component (the `l` of `-κ`).
    pub fn l_small(&self) -> u32 {
        if self.kappa > 0 {
            (self.kappa - 1) as u32
        } else {
            (-self.kappa) as u32
        }
    }

    /// Number of magnetic sublevels, `2j + 1 = 2|κ|`.
    pub fn degeneracy(&self) -> u32 {
        2 * self.kappa.unsigned_abs()
    }

    /// Spectroscopic letter of the large component.
    pub fn l_letter(&self) -> char {
        l_letter(self.l_large())
    }

    /// Label suffix in the `nl-` / `nl` convention: `-` marks `j = l - 1/2`.
    pub fn label(&self, n: u32) -> String {
        let minus = if self.kappa > 0 { "-" } else { "" };
        format!("{}{}{}", n, self.l_letter(), minus)
    }
}

impl Ord for AngularSymmetry {
    /// Orders by `l`, then by `j` (`p-` before `p`).
    fn cmp(&self, other: &Self) -> Ordering {
        (self.l_large(), self.two_j()).cmp(&(other.l_large(), other.two_j()))
    }
}

impl PartialOrd for AngularSymmetry {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Display for AngularSymmetry {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let minus = if self.kappa > 0 { "-" } else { "" };
        write!(f, "{}{} (kappa={})", self.l_letter(), minus, self.kappa)
    }
}

pub fn l_letter(l: u32) -> char {
    const LETTERS: &[u8] = b"spdfghiklmnoqrtuv";
    LETTERS.get(l as usize).map(|&b| b as char).unwrap_or('?')
}

pub fn l_from_letter(c: char) -> Option<u32> {
    const LETTERS: &str = "spdfghiklmnoqrtuv";
    LETTERS.find(c.to_ascii_lowercase()).map(|i| i as u32)
}

fn factorial(n: i64) -> BigInt {
    debug_assert!(n >= 0);
    let mut acc = BigInt::one();
    for k in 2..=n {
        acc *= k;
    }
    acc
}

/// Exact Wigner 3j symbol in doubled arguments, returned as `(sign, value²)`.
///
/// Racah's single-sum formula evaluated in rational arithmetic; the only
/// irrational step is the final square root. Returns `(0, 0)` whenever a
/// selection rule fails.
pub fn wigner_3j_squared(
    tj1: i64,
    tj2: i64,
    tj3: i64,
    tm1: i64,
    tm2: i64,
    tm3: i64,
) -> (i8, BigRational) {
    let zero = (0i8, BigRational::zero());
    if tm1 + tm2 + tm3 != 0 {
        return zero;
    }
    if tj3 < (tj1 - tj2).abs() || tj3 > tj1 + tj2 {
        return zero;
    }
    if (tj1 + tj2 + tj3) % 2 != 0 {
        return zero;
    }
    for (tj, tm) in [(tj1, tm1), (tj2, tm2), (tj3, tm3)] {
        if tm.abs() > tj || (tj + tm) % 2 != 0 {
            return zero;
        }
    }
    // Undoubled integer combinations.
    let a = (tj1 + tj2 - tj3) / 2;
    let b = (tj1 - tj2 + tj3) / 2;
    let c = (-tj1 + tj2 + tj3) / 2;
    let d = (tj1 + tj2 + tj3) / 2 + 1;
    let triangle = BigRational::new(factorial(a) * factorial(b) * factorial(c), factorial(d));

    let p1 = (tj1 + tm1) / 2;
    let q1 = (tj1 - tm1) / 2;
    let p2 = (tj2 + tm2) / 2;
    let q2 = (tj2 - tm2) / 2;
    let p3 = (tj3 + tm3) / 2;
    let q3 = (tj3 - tm3) / 2;
    let mprod = factorial(p1)
        * factorial(q1)
        * factorial(p2)
        * factorial(q2)
        * factorial(p3)
        * factorial(q3);

    let t1 = (tj3 - tj2 + tm1) / 2;
    let t2 = (tj3 - tj1 - tm2) / 2;
    let kmin = 0.max(-t1).max(-t2);
    let kmax = a.min(q1).min(p2);
    let mut sum = BigRational::zero();
    for k in kmin..=kmax {
        let den = factorial(k)
            * factorial(t1 + k)
            * factorial(t2 + k)
            * factorial(a - k)
            * factorial(q1 - k)
            * factorial(p2 - k);
        let term = BigRational::new(BigInt::one(), den);
        if k % 2 == 0 {
            sum += term;
        } else {
            sum -= term;
        }
    }
    if sum.is_zero() {
        return zero;
    }
    let phase_exp = (tj1 - tj2 - tm3) / 2;
    let mut sign: i8 = if phase_exp.rem_euclid(2) == 0 { 1 } else { -1 };
    if sum.is_negative() {
        sign = -sign;
    }
    let squared = triangle * BigRational::from_integer(mprod) * (&sum * &sum);
    (sign, squared)
}

/// Wigner 3j symbol `(j_a l j_b; 1/2 0 -1/2)` with doubled `j` arguments.
///
/// Zero outside the triangle `|j_a - j_b| <= l <= j_a + j_b`.
pub fn threejm_half(two_ja: u32, l: u32, two_jb: u32) -> f64 {
    let (sign, sq) = wigner_3j_squared(two_ja as i64, 2 * l as i64, two_jb as i64, 1, 0, -1);
    if sign == 0 {
        return 0.0;
    }
    sign as f64 * sq.to_f64().unwrap_or(0.0).sqrt()
}

/// Average-of-configuration exchange coefficient
/// `Γ^l(a, b) = (j_a l j_b; 1/2 0 -1/2)²`, restricted by the parity of
/// `l_a + l_b + l` (large-component orbital momenta).
pub fn gamma_coefficient(a: AngularSymmetry, b: AngularSymmetry, l: u32) -> f64 {
    if (a.l_large() + b.l_large() + l) % 2 != 0 {
        return 0.0;
    }
    let (sign, sq) = wigner_3j_squared(a.two_j() as i64, 2 * l as i64, b.two_j() as i64, 1, 0, -1);
    if sign == 0 {
        return 0.0;
    }
    sq.to_f64().unwrap_or(0.0)
}

/// Multipole orders with nonvanishing exchange coupling between `a` and `b`, ascending.
pub fn allowed_l_range(a: AngularSymmetry, b: AngularSymmetry) -> Vec<u32> {
    let lo = (a.two_j() as i64 - b.two_j() as i64).unsigned_abs() as u32 / 2;
    let hi = (a.two_j() + b.two_j()) / 2;
    (lo..=hi)
        .filter(|l| (a.l_large() + b.l_large() + l) % 2 == 0)
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sym(k: i32) -> AngularSymmetry {
        AngularSymmetry::new(k).unwrap()
    }

    #[test]
    fn kappa_bookkeeping() {
        for k in [-4, -3, -2, -1, 1, 2, 3, 4] {
            let s = sym(k);
            assert_eq!(s.two_j() as i32, 2 * k.abs() - 1);
            assert_eq!(s.degeneracy(), s.two_j() + 1);
            assert_eq!((s.l_large() as i32 - s.l_small() as i32).abs(), 1);
        }
        assert_eq!(sym(-1).l_large(), 0);
        assert_eq!(sym(1).l_large(), 1);
        assert_eq!(sym(1).l_small(), 0);
        assert_eq!(sym(-2).label(2), "2p");
        assert_eq!(sym(1).label(2), "2p-");
        assert!(AngularSymmetry::new(0).is_err());
    }

    #[test]
    fn three_j_half_reference_values() {
        let v = threejm_half(1, 0, 1);
        assert!((v + 1.0 / 2f64.sqrt()).abs() < 1e-15);
        assert_eq!(threejm_half(1, 5, 1), 0.0);
    }

    #[test]
    fn gamma_examples() {
        assert!((gamma_coefficient(sym(-1), sym(-1), 0) - 0.5).abs() < 1e-15);
        assert_eq!(gamma_coefficient(sym(-1), sym(-1), 1), 0.0);
        assert!((gamma_coefficient(sym(-1), sym(1), 1) - 1.0 / 6.0).abs() < 1e-15);
    }

    #[test]
    fn allowed_ranges() {
        assert_eq!(allowed_l_range(sym(-1), sym(-1)), vec![0]);
        assert_eq!(allowed_l_range(sym(-1), sym(2)), vec![2]);
        assert_eq!(allowed_l_range(sym(-2), sym(-2)), vec![0, 2]);
    }

    #[test]
    fn ordering_follows_table_convention() {
        let mut v = vec![sym(-3), sym(1), sym(-1), sym(2), sym(-2)];
        v.sort();
        assert_eq!(v.iter().map(|s| s.kappa()).collect::<Vec<_>>(), vec![-1, 1, -2, 2, -3]);
    }
}
