//! Exact-arithmetic reference calculators.
//!
//! Everything here is computed with [`BigRational`] (arbitrary-precision
//! rationals), entirely independently of the `cachelab` crate, so that the
//! fast floating-point calculators in `cachelab::analysis` can be checked
//! against a second implementation that cannot suffer rounding, overflow, or
//! cancellation. Inputs arrive as `f64` and are converted *exactly* (every
//! finite `f64` is a rational); only the final conversion back to `f64`
//! rounds.
//!
//! This crate is a dev-dependency of the test suites and is never linked
//! into the library or the CLI.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

/// Converts a finite `f64` to the rational it represents, exactly.
///
/// # Panics
///
/// Panics if `x` is NaN or infinite.
pub fn rational(x: f64) -> BigRational {
    BigRational::from_float(x).expect("finite input")
}

/// Rounds a rational to the nearest `f64`, accurate to ~2^-80 relative error.
///
/// `BigRational::to_f64` divides two independently rounded big integers,
/// which degenerates to `inf/inf = NaN` once either side exceeds the `f64`
/// range; this version scales the quotient first so huge numerators and
/// denominators are handled.
pub fn to_f64(r: &BigRational) -> f64 {
    if r.is_zero() {
        return 0.0;
    }
    let negative = r.is_negative();
    let abs = r.abs();
    // Shift the numerator up so the integer quotient keeps 80 significant
    // bits, then undo the shift in floating point.
    let shift = 80i64
        + (abs.denom().bits() as i64)
        - (abs.numer().bits() as i64);
    let scaled = if shift >= 0 {
        (abs.numer() << shift as u64) / abs.denom()
    } else {
        abs.numer() / (abs.denom() << (-shift) as u64)
    };
    let q = scaled.to_f64().expect("80-bit quotient is finite");
    let magnitude = q * 2f64.powi(-shift as i32);
    if negative {
        -magnitude
    } else {
        magnitude
    }
}

/// `exp(x)` as a rational, accurate to well below 1e-30 relative error.
///
/// Uses argument halving (`exp(x) = exp(x/2)^2`) until the argument is
/// inside [-1/2, 1/2], then a 48-term Taylor series evaluated exactly.
/// The squaring cascade runs on a raw numerator/denominator pair truncated
/// to ~1024 significant bits per step; without that cap the operands double
/// in size every squaring and the gcd reduction `BigRational` performs after
/// each multiply turns quadratically slow. Each truncation perturbs the
/// value by less than 2^-1000, negligible next to the series truncation.
///
/// # Panics
///
/// Panics if `|x| > 1024` (results there underflow or overflow `f64` anyway).
pub fn exp(x: f64) -> BigRational {
    assert!(x.is_finite() && x.abs() <= 1024.0, "exp argument out of range");
    let mut halvings = 0u32;
    let mut scale = 1.0f64;
    while (x * scale).abs() > 0.5 {
        scale /= 2.0;
        halvings += 1;
    }
    let arg = rational(x) / BigInt::from(1u64 << halvings.min(63)) * pow2_correction(halvings);
    let mut term = BigRational::one();
    let mut sum = BigRational::one();
    for n in 1..48u64 {
        term = term * &arg / BigInt::from(n);
        sum += &term;
    }
    let mut num = sum.numer().clone();
    let mut den = sum.denom().clone();
    for _ in 0..halvings {
        num = &num * &num;
        den = &den * &den;
        let spare = num.bits().min(den.bits()).saturating_sub(1024);
        if spare > 0 {
            num >>= spare;
            den >>= spare;
        }
    }
    BigRational::new(num, den)
}

// `1u64 << h` overflows past 63; express 2^h as a rational correction so the
// halving count is unbounded in principle (it never exceeds ~11 in practice).
fn pow2_correction(halvings: u32) -> BigRational {
    if halvings <= 63 {
        BigRational::one()
    } else {
        let extra = halvings - 63;
        BigRational::new(BigInt::one(), BigInt::one() << extra as u64)
    }
}

/// Binomial coefficient `C(w, n)` as a big integer.
pub fn choose(w: u64, n: u64) -> BigInt {
    if n > w {
        return BigInt::zero();
    }
    let n = n.min(w - n);
    let mut c = BigInt::one();
    for i in 1..=n {
        c = c * BigInt::from(w - n + i) / BigInt::from(i);
    }
    c
}

/// `p` decomposed exactly as `a / 2^k` straight from the `f64` bit pattern.
///
/// Every finite `f64` in [0, 1] has this form. Keeping the denominator a
/// power of two lets the tail sums below run entirely in `BigInt` over a
/// shared denominator, avoiding the gcd reduction `BigRational` performs
/// after every operation (which is quadratically slow on huge operands).
fn dyadic(p: f64) -> (BigInt, u64) {
    assert!((0.0..=1.0).contains(&p), "probability out of range: {p}");
    let r = rational(p);
    let k = r.denom().bits() - 1; // reduced denominator is exactly 2^k
    (r.numer().clone(), k)
}

/// Upper binomial tail `sum_{n=n0}^{w} C(w,n) p^n (1-p)^(w-n)`, exactly.
pub fn binomial_upper_tail(p: f64, w: u64, n0: u64) -> BigRational {
    // With p = a/2^k every term is an integer over 2^(k*w); summing the
    // integer numerators sidesteps per-term rational reduction.
    let (numer, bits) = binomial_upper_tail_dyadic(p, w, n0);
    BigRational::new(numer, BigInt::one() << bits)
}

/// The same tail as `binomial_upper_tail`, as `numerator / 2^bits`.
fn binomial_upper_tail_dyadic(p: f64, w: u64, n0: u64) -> (BigInt, u64) {
    let (a, k) = dyadic(p);
    let b = (BigInt::one() << k) - &a;
    let mut numer = BigInt::zero();
    for n in n0..=w {
        numer += choose(w, n) * int_pow(&a, n) * int_pow(&b, w - n);
    }
    (numer, k * w)
}

fn int_pow(base: &BigInt, mut e: u64) -> BigInt {
    let mut acc = BigInt::one();
    let mut b = base.clone();
    while e > 0 {
        if e & 1 == 1 {
            acc *= &b;
        }
        b = &b * &b;
        e >>= 1;
    }
    acc
}

fn pow(base: &BigRational, mut e: u64) -> BigRational {
    let mut acc = BigRational::one();
    let mut b = base.clone();
    while e > 0 {
        if e & 1 == 1 {
            acc *= &b;
        }
        b = &b * &b;
        e >>= 1;
    }
    acc
}

/// Harmonic-like normalizer `sum_{i=1}^{l} i^(-beta)` for integer `beta`.
pub fn zipf_normalizer(l: u64, beta: u32) -> BigRational {
    let mut sum = BigRational::zero();
    for i in 1..=l {
        sum += BigRational::new(BigInt::one(), BigInt::from(i).pow(beta));
    }
    sum
}

/// Zipf probability of item `i` (1-based) under integer exponent `beta`.
pub fn zipf_prob(l: u64, beta: u32, i: u64) -> BigRational {
    BigRational::new(BigInt::one(), BigInt::from(i).pow(beta)) / zipf_normalizer(l, beta)
}

/// Frequency-count placement regret bound `min(16/gap^2, 4*c*(l-c)/gap)`.
pub fn lfu_bound(gap: f64, l: u64, c: u64) -> f64 {
    let gap = rational(gap);
    let a = rational(16.0) / (&gap * &gap);
    let b = BigRational::from(BigInt::from(4 * c * (l - c))) / &gap;
    to_f64(&a.min(b))
}

/// Sliding-window placement linear regret floor `(mu_c - mu_c1) * mu_c1^w * t`.
pub fn wlfu_lower_bound(mu_c: f64, mu_c1: f64, w: u64, t: u64) -> f64 {
    let r = (rational(mu_c) - rational(mu_c1)) * pow(&rational(mu_c1), w) * BigInt::from(t);
    to_f64(&r)
}

/// Window entry probability: upper binomial tail of `w` trials at success
/// probability `mu` with threshold `floor(mu_c1 * w) + 1`.
pub fn window_entry_probability(mu: f64, mu_c1: f64, w: u64) -> BigRational {
    binomial_upper_tail(mu, w, entry_threshold(mu_c1, w))
}

/// Window-count threshold `floor(mu_c1 * w) + 1`.
fn entry_threshold(mu_c1: f64, w: u64) -> u64 {
    let (a, k) = dyadic(mu_c1);
    let floor = (a * BigInt::from(w)) >> k;
    floor.to_u64().expect("threshold fits in u64") + 1
}

/// Windowed-admission regret bound `c*(l-c)*w/p_min + 4*c*(l-c)/gap`.
pub fn lfu_lite_bound(gap: f64, l: u64, c: u64, w: u64, p_min: f64) -> f64 {
    let faces = BigInt::from(c * (l - c));
    let r = BigRational::from(&faces * BigInt::from(w)) / rational(p_min)
        + BigRational::from(BigInt::from(4) * faces) / rational(gap);
    to_f64(&r)
}

/// Posterior-sampling logarithmic envelope `(l-c)*c*ln(t)`.
pub fn mps_envelope(l: u64, c: u64, t: u64) -> f64 {
    ((l - c) * c) as f64 * (t as f64).ln()
}

/// Side-information regret bound
/// `c*(l-c)*(2/gap^2 + (4/gap^2)*(4 + (32/gap^2)*exp(-gap^2/8)))`.
pub fn si_bound(gap: f64, l: u64, c: u64) -> f64 {
    let g2 = &rational(gap) * &rational(gap);
    let e = exp(to_f64(&(-&g2 / BigInt::from(8))));
    let inner = rational(2.0) / &g2
        + rational(4.0) / &g2 * (rational(4.0) + rational(32.0) / &g2 * e);
    to_f64(&(inner * BigInt::from(c * (l - c))))
}

/// Uniform deviation envelope `2*exp(-t*eps^2/2)`.
pub fn dkw_envelope(t: u64, eps: f64) -> f64 {
    let arg = -to_f64(&(rational(eps) * rational(eps) * BigInt::from(t) / BigInt::from(2)));
    to_f64(&(rational(2.0) * exp(arg)))
}

/// Expected number of items ever admitted by a windowed counter bank:
/// `sum_i 1 - (1 - p_i)^ceil(t/w)` with `p_i` the window entry probability.
pub fn expected_bank_size(probs: &[f64], mu_c1: f64, w: u64, t: u64) -> f64 {
    let windows = t.div_ceil(w);
    let n0 = entry_threshold(mu_c1, w);
    // Work over power-of-two denominators end to end: each per-item term is
    // (D^m - (D - N)^m) / D^m with entry probability N / D, D = 2^bits and
    // m = windows. Summing over the largest exponent avoids rational
    // reduction entirely, which matters because these integers run to
    // hundreds of kilobits.
    let mut terms: Vec<(BigInt, u64)> = Vec::with_capacity(probs.len());
    let mut max_bits = 0u64;
    for &mu in probs {
        let (n, bits) = binomial_upper_tail_dyadic(mu, w, n0);
        let miss = (BigInt::one() << bits) - n;
        let e = bits * windows;
        let numer = (BigInt::one() << e) - int_pow(&miss, windows);
        max_bits = max_bits.max(e);
        terms.push((numer, e));
    }
    let mut sum = BigInt::zero();
    for (numer, e) in terms {
        sum += numer << (max_bits - e);
    }
    to_f64(&BigRational::new_raw(sum, BigInt::one() << max_bits))
}

/// Steady-state per-step regret of caching the single most recent request
/// (window length 1, cache size 1): `max(mu) - sum_i mu_i^2`.
pub fn last_request_step_regret(probs: &[f64]) -> f64 {
    let best = probs.iter().cloned().fold(f64::MIN, f64::max);
    let mut hit = BigRational::zero();
    for &mu in probs {
        hit += &rational(mu) * &rational(mu);
    }
    to_f64(&(rational(best) - hit))
}
