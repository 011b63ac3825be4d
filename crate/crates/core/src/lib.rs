//! Pricing and dynamic replication of volatility derivatives written on the
//! realized quadratic variation of a Heston log-price.
//!
//! The crate is organized around the pipeline the experiments run:
//!
//! * [`heston`] — closed-form characteristic functions for the log-price and
//!   for quadratic variation, true claim values, and a numerical QV density;
//! * [`carr_lee`] — exponent pairs `u±(s)`, correlation-immunization weights
//!   `α±(s)`, multipliers `N`, European legs `Q`, and hedge ratios;
//! * [`payoffs`] — finite exponential combinations `Σ aₖ e^{i sₖ ⟨X⟩}` plus
//!   Bernstein-polynomial approximations of put and volatility-swap payoffs;
//! * [`mc`] — Euler–Maruyama path simulation and the discrete evolution of
//!   the basic and immunized hedging portfolios;
//! * [`stats`] — hedging-error summaries, histograms, and table rendering.
//!
//! Analytic modules are generic over the scalar (`f32`/`f64` via
//! [`num_traits::Float`]); the simulation engine is pinned to `f64`. The
//! `*64` aliases below are the concrete types most callers want.

pub mod carr_lee;
pub mod error;
pub mod heston;
pub mod mc;
pub mod payoffs;
pub mod rng;
pub mod stats;

pub use error::{Error, Result};

/// Double-precision [`heston::HestonParams`].
pub type HestonParams64 = heston::HestonParams<f64>;
/// Double-precision [`heston::MarketState`].
pub type MarketState64 = heston::MarketState<f64>;
/// Double-precision [`payoffs::PayoffSpec`].
pub type PayoffSpec64 = payoffs::PayoffSpec<f64>;
/// Double-precision [`carr_lee::ExponentPair`].
pub type ExponentPair64 = carr_lee::ExponentPair<f64>;
/// Double-precision [`carr_lee::ImmunizationWeights`].
pub type ImmunizationWeights64 = carr_lee::ImmunizationWeights<f64>;

/// Shorthand used throughout the f64-pinned modules.
pub(crate) type C64 = num_complex::Complex<f64>;

/// Converts an `f64` literal into the generic scalar.
///
/// Panics only if `T` cannot represent ordinary finite literals, which no
/// `Float` implementation of interest fails to do.
pub(crate) fn lit<T: num_traits::Float>(v: f64) -> T {
    T::from(v).expect("finite f64 literal must convert into the scalar type")
}

/// Complex exponential with guaranteed conjugate symmetry.
///
/// `cexp(conj(z))` is bit-for-bit `conj(cexp(z))`: the circular part is
/// evaluated on `|Im z|` and the sine's sign restored afterwards, so the
/// symmetry cannot depend on the platform libm being exactly even/odd. The
/// hedging tests assert bitwise `Re ε⁺ = Re ε⁻` for conjugate exponent pairs,
/// which rides on this property.
pub(crate) fn cexp<T: num_traits::Float>(
    z: num_complex::Complex<T>,
) -> num_complex::Complex<T> {
    let mag = z.re.exp();
    let (sin_abs, cos) = z.im.abs().sin_cos();
    let sin = if z.im < T::zero() { -sin_abs } else { sin_abs };
    num_complex::Complex::new(mag * cos, mag * sin)
}

/// `e^z - 1`, sharing `cexp`'s symmetric sine/cosine evaluation and accurate
/// for small `|z|` where the naive `cexp(z) - 1` cancels.
///
/// Real part uses `e^x cos w - 1 = expm1(x) cos w - 2 sin²(w/2)`, both pieces
/// small together with `z`; the portfolio recursion leans on this to keep
/// per-step increments at full relative accuracy (and a constant claim's
/// increments exactly zero).
pub(crate) fn cexpm1<T: num_traits::Float>(
    z: num_complex::Complex<T>,
) -> num_complex::Complex<T> {
    let im_abs = z.im.abs();
    let (sin_abs, cos) = im_abs.sin_cos();
    let sin_half = (im_abs * lit::<T>(0.5)).sin();
    let em = z.re.exp_m1();
    let re = em * cos - lit::<T>(2.0) * sin_half * sin_half;
    let im_mag = (em + T::one()) * sin_abs;
    let im = if z.im < T::zero() { -im_mag } else { im_mag };
    num_complex::Complex::new(re, im)
}
