//! Floating-point scalar abstraction shared by every numerical module.
//!
//! The solver is written once against [`Real`] and instantiated for `f32` and
//! `f64`. FFT plans are cached per thread and per precision.

use std::cell::RefCell;
use std::fmt::{Debug, Display, LowerExp};
use std::iter::Sum;

use num_traits::{Float, FloatConst, FromPrimitive, ToPrimitive};
use rustfft::{FftNum, FftPlanner};

pub trait Real:
    Float
    + FloatConst
    + FftNum
    + FromPrimitive
    + ToPrimitive
    + Default
    + Debug
    + Display
    + LowerExp
    + Sum
    + Send
    + Sync
    + 'static
{
    /// Runs `f` with this thread's FFT planner for the precision.
    fn with_planner<R>(f: impl FnOnce(&mut FftPlanner<Self>) -> R) -> R;

    /// Converts an `f64` literal. Every `Real` can represent (a rounding of) any f64.
    #[inline]
    fn lit(x: f64) -> Self {
        Self::from_f64(x).expect("f64 literal representable")
    }

    #[inline]
    fn as_f64(self) -> f64 {
        self.to_f64().expect("finite-or-special float converts to f64")
    }
}

macro_rules! impl_real {
    ($($t:ty => $cache:ident),* $(,)?) => {$(
        thread_local! {
            static $cache: RefCell<FftPlanner<$t>> = RefCell::new(FftPlanner::new());
        }

        impl Real for $t {
            fn with_planner<R>(f: impl FnOnce(&mut FftPlanner<Self>) -> R) -> R {
                $cache.with(|p| f(&mut p.borrow_mut()))
            }
        }
    )*};
}

impl_real!(f32 => PLANNER_F32, f64 => PLANNER_F64);

/// `|x|^q`, using exact repeated multiplication for small integer exponents.
#[inline]
pub fn pow_abs<T: Real>(x: T, q: T) -> T {
    let ax = x.abs();
    if ax == T::zero() {
        return if q == T::zero() { T::one() } else { T::zero() };
    }
    if q == T::one() {
        return ax;
    }
    if q.fract() == T::zero() && q <= T::lit(64.0) {
        return ax.powi(q.to_i32().unwrap_or(0));
    }
    (q * ax.ln()).exp()
}

/// The odd power `|x|^{q-1} x = sign(x)|x|^q`, with `0 -> 0` for every `q >= 1`.
#[inline]
pub fn odd_pow<T: Real>(x: T, q: T) -> T {
    if x == T::zero() {
        return T::zero();
    }
    let mag = pow_abs(x, q);
    if x < T::zero() {
        -mag
    } else {
        mag
    }
}
