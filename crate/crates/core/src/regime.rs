//! Classification of `(m, p)` against the well-posedness regions for the
//! three-dimensional torus.
//!
//! Predicates are generic so they can be evaluated exactly on rationals
//! (`num_rational::Ratio`) as well as on floats; all comparisons are
//! rearranged to avoid division.

use std::fmt;

use num_rational::Ratio;
use num_traits::{FromPrimitive, Num, ToPrimitive};
use serde::Serialize;

use crate::error::{Error, Result};

pub type Rational = Ratio<i64>;

/// Numbers the region predicates can be evaluated on.
pub trait RegimeNum: Num + PartialOrd + Clone + FromPrimitive + ToPrimitive + fmt::Display {}

impl<T: Num + PartialOrd + Clone + FromPrimitive + ToPrimitive + fmt::Display> RegimeNum for T {}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum Existence {
    /// `1 <= p <= m <= 5`.
    Case1,
    /// `m > 5` and `1 <= p < 5(m + 1)/6`.
    Case2,
    NotCovered,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum Uniqueness {
    /// `1 <= p <= m <= 5`.
    CaseI,
    /// `m > 5` and `1 <= p <= 2m/3 + 5/3`.
    CaseII,
    NotCovered,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct RegimeVerdict {
    pub existence: Existence,
    pub uniqueness: Uniqueness,
    /// Source stronger than damping (`p > m`).
    pub blowup_candidate: bool,
    pub notes: Vec<String>,
}

fn lit<T: RegimeNum>(x: u32) -> T {
    T::from_u32(x).expect("small integer fits")
}

pub fn existence_case<T: RegimeNum>(m: &T, p: &T) -> Existence {
    let one = T::one();
    let five = lit::<T>(5);
    if one <= *p && p <= m && *m <= five {
        Existence::Case1
    } else if *m > five && one <= *p && lit::<T>(6) * p.clone() < five * (m.clone() + one) {
        Existence::Case2
    } else {
        Existence::NotCovered
    }
}

pub fn uniqueness_case<T: RegimeNum>(m: &T, p: &T) -> Uniqueness {
    let one = T::one();
    let five = lit::<T>(5);
    if one <= *p && p <= m && *m <= five {
        Uniqueness::CaseI
    } else if *m > five && one <= *p && lit::<T>(3) * p.clone() <= lit::<T>(2) * m.clone() + five {
        Uniqueness::CaseII
    } else {
        Uniqueness::NotCovered
    }
}

/// `1 <= p <= min{2m/3 + 5/3, m}`.
pub fn uniqueness_closed_form<T: RegimeNum>(m: &T, p: &T) -> bool {
    T::one() <= *p && p <= m && lit::<T>(3) * p.clone() <= lit::<T>(2) * m.clone() + lit::<T>(5)
}

pub fn classify<T: RegimeNum>(m: T, p: T) -> Result<RegimeVerdict> {
    if !(m >= T::one()) || !(p >= T::one()) {
        return Err(Error::InvalidExponent(format!("regime needs m >= 1 and p >= 1, got m = {m}, p = {p}")));
    }
    let existence = existence_case(&m, &p);
    let uniqueness = uniqueness_case(&m, &p);
    let blowup_candidate = p > m;
    let mut notes = Vec::new();
    if blowup_candidate {
        notes.push(format!(
            "p = {p} > m = {m}: source dominates damping; finite-time blow-up is expected for large data"
        ));
    }
    if existence == Existence::NotCovered {
        notes.push("(m, p) lies outside the global existence region".into());
    } else if uniqueness == Uniqueness::NotCovered {
        notes.push("existence holds but uniqueness/continuous dependence is not covered".into());
    }
    Ok(RegimeVerdict { existence, uniqueness, blowup_candidate, notes })
}

/// [`classify`] with an extra note when simulating on a lower-dimensional torus.
pub fn classify_for_dim<T: RegimeNum>(m: T, p: T, dim: usize) -> Result<RegimeVerdict> {
    let mut v = classify(m, p)?;
    if dim < 3 {
        v.notes.push(format!(
            "regions are the three-dimensional ones; they are conservative for the {dim}-d grid being simulated"
        ));
    }
    Ok(v)
}

/// Checks `(Case I or Case II) <=> p <= min{2m/3 + 5/3, m}` at every grid point.
pub fn uniqueness_region_equivalence_check<T: RegimeNum>(grid: &[(T, T)]) -> bool {
    grid.iter().all(|(m, p)| (uniqueness_case(m, p) != Uniqueness::NotCovered) == uniqueness_closed_form(m, p))
}

/// `{lo, lo + step, ..., hi}` in exact arithmetic.
pub fn rational_range(lo: Rational, hi: Rational, step: Rational) -> Vec<Rational> {
    assert!(step > Rational::from_integer(0), "step must be positive");
    let mut out = Vec::new();
    let mut x = lo;
    while x <= hi {
        out.push(x);
        x += step;
    }
    out
}

/// Parses `"17/3"`, `"5"`, or a decimal such as `"5.25"` into an exact rational.
pub fn parse_rational(text: &str) -> Result<Rational> {
    let text = text.trim();
    let bad = || Error::InvalidArgument(format!("not a rational number: {text:?}"));
    if let Some((n, d)) = text.split_once('/') {
        let n: i64 = n.trim().parse().map_err(|_| bad())?;
        let d: i64 = d.trim().parse().map_err(|_| bad())?;
        if d == 0 {
            return Err(bad());
        }
        return Ok(Rational::new(n, d));
    }
    let (neg, body) = match text.strip_prefix('-') {
        Some(rest) => (true, rest),
        None => (false, text.strip_prefix('+').unwrap_or(text)),
    };
    let (int_part, frac_part) = body.split_once('.').unwrap_or((body, ""));
    if int_part.is_empty() && frac_part.is_empty() {
        return Err(bad());
    }
    if !int_part.chars().chain(frac_part.chars()).all(|c| c.is_ascii_digit()) || frac_part.len() > 15 {
        return Err(bad());
    }
    let digits = format!("{int_part}{frac_part}");
    let num: i64 = if digits.is_empty() { 0 } else { digits.parse().map_err(|_| bad())? };
    let den = 10i64.checked_pow(frac_part.len() as u32).ok_or_else(bad)?;
    let r = Rational::new(num, den);
    Ok(if neg { -r } else { r })
}

/// Rows `m, p, existence, uniqueness, blowup_candidate` over the product grid.
pub fn sweep(values: &[Rational]) -> Vec<(Rational, Rational, RegimeVerdict)> {
    let mut out = Vec::with_capacity(values.len() * values.len());
    for m in values {
        for p in values {
            if let Ok(v) = classify(*m, *p) {
                out.push((*m, *p, v));
            }
        }
    }
    out
}

impl fmt::Display for RegimeVerdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "existence: {:?}", self.existence)?;
        writeln!(f, "uniqueness: {:?}", self.uniqueness)?;
        writeln!(f, "blowup_candidate: {}", self.blowup_candidate)?;
        for n in &self.notes {
            writeln!(f, "note: {n}")?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn r(n: i64, d: i64) -> Rational {
        Rational::new(n, d)
    }

    fn ri(n: i64) -> Rational {
        Rational::from_integer(n)
    }

    #[test]
    fn example_verdicts() {
        let v = classify(ri(5), ri(5)).unwrap();
        assert_eq!((v.existence, v.uniqueness, v.blowup_candidate), (Existence::Case1, Uniqueness::CaseI, false));
        let v = classify(ri(9), ri(8)).unwrap();
        assert_eq!((v.existence, v.uniqueness), (Existence::Case2, Uniqueness::NotCovered));
        let v = classify(ri(1), ri(1)).unwrap();
        assert_eq!((v.existence, v.uniqueness), (Existence::Case1, Uniqueness::CaseI));
        let v = classify(ri(3), ri(4)).unwrap();
        assert_eq!(v.existence, Existence::NotCovered);
        assert!(v.blowup_candidate);
        let v = classify(6.0, 5.9).unwrap();
        assert_eq!(v.uniqueness, Uniqueness::NotCovered);
        assert!(!uniqueness_closed_form(&6.0, &5.9));
        assert!(classify(0.5, 1.0).is_err());
    }

    #[test]
    fn boundaries_are_strict_and_non_strict() {
        let m = ri(7);
        assert_eq!(existence_case(&m, &(r(5, 6) * (m + 1))), Existence::NotCovered);
        assert_eq!(existence_case(&m, &(r(5, 6) * (m + 1) - r(1, 1000))), Existence::Case2);
        let on = r(2, 3) * m + r(5, 3);
        assert_eq!(uniqueness_case(&m, &on), Uniqueness::CaseII);
        assert_eq!(uniqueness_case(&m, &(on + r(1, 1000))), Uniqueness::NotCovered);
        assert_eq!(existence_case(&ri(5), &ri(5)), Existence::Case1);
        assert_eq!(existence_case(&r(51, 10), &ri(5)), Existence::Case2);
    }

    #[test]
    fn parse_rational_forms() {
        assert_eq!(parse_rational("17/3").unwrap(), r(17, 3));
        assert_eq!(parse_rational("5").unwrap(), ri(5));
        assert_eq!(parse_rational("5.25").unwrap(), r(21, 4));
        assert_eq!(parse_rational("-0.5").unwrap(), r(-1, 2));
        assert!(parse_rational("1/0").is_err());
        assert!(parse_rational("abc").is_err());
        assert!(parse_rational("1e3").is_err());
    }

    #[test]
    fn range_is_exact() {
        let v = rational_range(ri(1), ri(12), r(1, 4));
        assert_eq!(v.len(), 45);
        assert_eq!(*v.last().unwrap(), ri(12));
    }

    #[test]
    fn low_dimensional_note() {
        let v = classify_for_dim(3.0, 3.0, 1).unwrap();
        assert!(v.notes.iter().any(|n| n.contains("conservative")));
        assert!(classify_for_dim(3.0, 3.0, 3).unwrap().notes.is_empty());
    }
}
