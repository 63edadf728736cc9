//! Closed-form regret bounds and related quantities.
//!
//! Everything here is plain `f64` plug-in evaluation, written so that each
//! value stays within ~1e-13 relative error of exact arithmetic (the test
//! suites compare against an arbitrary-precision oracle at 1e-12). The one
//! numerically delicate piece is the binomial upper tail, which is computed
//! from an anchored leading term in extended-range form plus an exact-ratio
//! recurrence, never through logarithms.

use crate::model::{Error, PopularityProfile};
use crate::util::kahan_sum;

use super::GapStructure;

/// Regret ceiling of all-time frequency-count placement:
/// `min(16/delta^2, 4C(L-C)/delta)`. Infinite when the gap vanishes.
pub fn bound_lfu(delta_min: f64, library_size: u32, cache_size: u32) -> f64 {
    if delta_min <= 0.0 {
        return f64::INFINITY;
    }
    let faces = (cache_size as f64) * (library_size - cache_size) as f64;
    (16.0 / (delta_min * delta_min)).min(4.0 * faces / delta_min)
}

/// Linear regret floor of sliding-window placement:
/// `(mu_C - mu_{C+1}) * mu_{C+1}^w * T`.
pub fn bound_wlfu_lower(mu_c: f64, mu_c1: f64, window: u64, horizon: u64) -> f64 {
    (mu_c - mu_c1) * pow_u64(mu_c1, window) * horizon as f64
}

/// Probability that the rank-`C` item clears the window admission threshold
/// in one window: the upper binomial tail of `w` trials at success
/// probability `mu_c`, starting at count `floor(mu_c1 * w) + 1`.
///
/// An empty summation range (only possible when `mu_c1 >= 1`) yields 0.
pub fn p_min(mu_c: f64, mu_c1: f64, window: u64) -> f64 {
    assert!(
        (0.0..=1.0).contains(&mu_c) && (0.0..=1.0).contains(&mu_c1),
        "popularities must lie in [0, 1]"
    );
    binomial_upper_tail(mu_c, window, admission_threshold(mu_c1, window))
}

/// Regret ceiling of window-gated bank placement:
/// `C(L-C)w / p_min + 4C(L-C)/delta`.
pub fn bound_lfulite(
    delta_min: f64,
    library_size: u32,
    cache_size: u32,
    window: u64,
    p_min: f64,
) -> f64 {
    if delta_min <= 0.0 || p_min <= 0.0 {
        return f64::INFINITY;
    }
    let faces = (cache_size as f64) * (library_size - cache_size) as f64;
    faces * window as f64 / p_min + 4.0 * faces / delta_min
}

/// Logarithmic growth envelope of marginal posterior sampling,
/// `(L-C) * C * ln T`, with unit constant. A shape for growth checks, not a
/// certified ceiling.
pub fn bound_mps(library_size: u32, cache_size: u32, horizon: u64) -> f64 {
    ((library_size - cache_size) as f64) * (cache_size as f64) * (horizon as f64).ln()
}

/// Regret ceiling of threshold placement with known boundary popularity:
/// `C(L-C) * (2/d^2 + (4/d^2)(4 + (32/d^2) e^{-d^2/8}))`.
pub fn bound_si(delta: f64, library_size: u32, cache_size: u32) -> f64 {
    if delta <= 0.0 {
        return f64::INFINITY;
    }
    let faces = (cache_size as f64) * (library_size - cache_size) as f64;
    let inv = 1.0 / (delta * delta);
    faces * (2.0 * inv + 4.0 * inv * (4.0 + 32.0 * inv * (-delta * delta / 8.0).exp()))
}

/// Uniform-deviation envelope `2 e^{-t eps^2 / 2}` on the probability that
/// any empirical frequency strays more than `eps` from its mean.
pub fn dkw_envelope(t: u64, eps: f64) -> f64 {
    2.0 * (-(t as f64) * eps * eps / 2.0).exp()
}

/// Expected number of items ever admitted by a windowed counter bank by
/// time `t`: `sum_i 1 - (1 - p_i)^ceil(t/w)`, where `p_i` applies the
/// admission-threshold tail to item `i`'s popularity.
///
/// This substitutes the threshold-count event for the true top-`C`-in-window
/// admission event, so it is an approximation of the simulated bank, not a
/// bound on it; it is exact only as a formula, which is what the oracle
/// equivalence tests check.
pub fn expected_bank_size(
    profile: &PopularityProfile,
    cache_size: u32,
    window: u64,
    t: u64,
) -> Result<f64, Error> {
    Ok(expected_bank_curve(profile, cache_size, window, &[t])?[0])
}

/// [`expected_bank_size`] over several times at one tail computation per
/// item.
pub fn expected_bank_curve(
    profile: &PopularityProfile,
    cache_size: u32,
    window: u64,
    ts: &[u64],
) -> Result<Vec<f64>, Error> {
    if window == 0 {
        return Err(Error::InvalidParameter("window length must be at least 1".into()));
    }
    let gaps = GapStructure::new(profile, cache_size)?;
    let threshold = admission_threshold(gaps.mu_c1(), window);
    let entry: Vec<f64> = profile
        .probs()
        .iter()
        .map(|&mu| binomial_upper_tail(mu, window, threshold))
        .collect();
    Ok(ts
        .iter()
        .map(|&t| {
            let windows = t.div_ceil(window);
            kahan_sum(entry.iter().map(|&p| 1.0 - pow_u64(1.0 - p, windows)))
        })
        .collect())
}

/// All closed-form values applicable to one experiment instance.
#[derive(Clone, Debug)]
pub struct BoundReport {
    pub library_size: u32,
    pub cache_size: u32,
    pub mu_c: f64,
    pub mu_c1: f64,
    pub delta_min: f64,
    /// Boundary tie: the genie is non-unique and every constant bound below
    /// is infinite.
    pub degenerate: bool,
    pub lfu: f64,
    pub si: f64,
    pub mps_envelope: f64,
    /// Window-dependent values, present when a window length is configured.
    pub window: Option<u64>,
    pub p_min: Option<f64>,
    pub wlfu_lower: Option<f64>,
    pub lfulite: Option<f64>,
    pub expected_terminal_bank: Option<f64>,
}

/// Evaluates every bound for a profile/cache-size instance; window-specific
/// entries are filled when `window` is given.
pub fn bound_report(
    profile: &PopularityProfile,
    cache_size: u32,
    window: Option<u64>,
    horizon: u64,
) -> Result<BoundReport, Error> {
    let gaps = GapStructure::new(profile, cache_size)?;
    let l = gaps.library_size();
    let delta = gaps.delta_min();
    let mut report = BoundReport {
        library_size: l,
        cache_size,
        mu_c: gaps.mu_c(),
        mu_c1: gaps.mu_c1(),
        delta_min: delta,
        degenerate: gaps.is_degenerate(),
        lfu: bound_lfu(delta, l, cache_size),
        si: bound_si(delta, l, cache_size),
        mps_envelope: bound_mps(l, cache_size, horizon),
        window: None,
        p_min: None,
        wlfu_lower: None,
        lfulite: None,
        expected_terminal_bank: None,
    };
    if let Some(w) = window {
        if w == 0 {
            return Err(Error::InvalidParameter("window length must be at least 1".into()));
        }
        let p = p_min(gaps.mu_c(), gaps.mu_c1(), w);
        report.window = Some(w);
        report.p_min = Some(p);
        report.wlfu_lower = Some(bound_wlfu_lower(gaps.mu_c(), gaps.mu_c1(), w, horizon));
        report.lfulite = Some(bound_lfulite(delta, l, cache_size, w, p));
        report.expected_terminal_bank =
            Some(expected_bank_size(profile, cache_size, w, horizon)?);
    }
    Ok(report)
}

/// `floor(mu_c1 * w) + 1`, with the floor taken on the exact product of the
/// dyadic rational `mu_c1` and `w` (a rounded `f64` product can land on the
/// wrong side of an integer).
fn admission_threshold(mu_c1: f64, window: u64) -> u64 {
    exact_floor_mul(mu_c1, window) + 1
}

/// `floor(x * w)` computed exactly from the bit representation of `x`.
/// Requires `0 <= x <= 1`.
fn exact_floor_mul(x: f64, w: u64) -> u64 {
    debug_assert!((0.0..=1.0).contains(&x));
    if x == 0.0 {
        return 0;
    }
    let bits = x.to_bits();
    let exponent_field = ((bits >> 52) & 0x7ff) as i64;
    let fraction = bits & ((1u64 << 52) - 1);
    // x = mantissa * 2^exponent, exactly.
    let (mantissa, exponent) = if exponent_field == 0 {
        (fraction, -1074i64)
    } else {
        (fraction | (1 << 52), exponent_field - 1075)
    };
    debug_assert!(exponent < 0, "finite x <= 1 has a negative exponent");
    let product = mantissa as u128 * w as u128;
    let shift = -exponent as u32;
    if shift >= 128 {
        0
    } else {
        (product >> shift) as u64
    }
}

/// Upper binomial tail `sum_{n=n0}^{w} C(w,n) p^n (1-p)^(w-n)`.
///
/// The `n0` term is built as a product in (mantissa, base-2 exponent) form,
/// then the remaining terms follow by the exact term ratio with compensated
/// summation; everything is renormalized in exact powers of two, so the
/// only rounding is one multiply-chain's worth (~`w` half-ulps).
pub fn binomial_upper_tail(p: f64, w: u64, n0: u64) -> f64 {
    if n0 > w {
        return 0.0;
    }
    if n0 == 0 || p >= 1.0 {
        return 1.0;
    }
    if p <= 0.0 {
        return 0.0;
    }
    let q = 1.0 - p;
    let ratio = p / q;
    let mut mantissa = 1.0f64;
    let mut exponent = 0i64;
    for k in 1..=n0 {
        mantissa *= (w - n0 + k) as f64 / k as f64 * p;
        renormalize(&mut mantissa, &mut exponent);
    }
    for _ in 0..(w - n0) {
        mantissa *= q;
        renormalize(&mut mantissa, &mut exponent);
    }
    let mut sum = mantissa;
    let mut compensation = 0.0f64;
    let mut term = mantissa;
    for n in n0..w {
        term *= (w - n) as f64 / (n + 1) as f64 * ratio;
        let y = term - compensation;
        let t = sum + y;
        compensation = (t - sum) - y;
        sum = t;
        // Terms grow toward the mode; rescale the whole accumulator state
        // (exactly) before anything overflows.
        if term > 1e280 || sum > 1e280 {
            let down = 2f64.powi(-512);
            term *= down;
            sum *= down;
            compensation *= down;
            exponent += 512;
        }
    }
    ldexp(sum + compensation, exponent).clamp(0.0, 1.0)
}

/// `base^e` by squaring; ~`2 log2(e)` roundings.
fn pow_u64(base: f64, mut e: u64) -> f64 {
    let mut acc = 1.0f64;
    let mut b = base;
    while e > 0 {
        if e & 1 == 1 {
            acc *= b;
        }
        b *= b;
        e >>= 1;
    }
    acc
}

#[inline]
fn renormalize(mantissa: &mut f64, exponent: &mut i64) {
    if *mantissa == 0.0 {
        return;
    }
    while *mantissa < 1e-280 {
        *mantissa *= 2f64.powi(512);
        *exponent -= 512;
    }
    while *mantissa > 1e280 {
        *mantissa *= 2f64.powi(-512);
        *exponent += 512;
    }
}

/// `x * 2^e` through exact power-of-two multiplies.
fn ldexp(mut x: f64, mut e: i64) -> f64 {
    while e > 512 {
        x *= 2f64.powi(512);
        e -= 512;
        if !x.is_finite() {
            return x;
        }
    }
    while e < -512 {
        x *= 2f64.powi(-512);
        e += 512;
        if x == 0.0 {
            return 0.0;
        }
    }
    x * 2f64.powi(e as i32)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::workloads::zipf_profile;

    #[test]
    fn lfu_bound_picks_the_smaller_branch() {
        // delta=0.1, C=10, L=100: min(1600, 36000).
        assert!((bound_lfu(0.1, 100, 10) - 1600.0).abs() < 1e-9);
        // delta=1 keeps the first branch at 16 whenever C(L-C) >= 4.
        assert_eq!(bound_lfu(1.0, 10, 2), 16.0);
        assert_eq!(bound_lfu(0.0, 10, 2), f64::INFINITY);
    }

    #[test]
    fn wlfu_lower_examples() {
        assert!((bound_wlfu_lower(0.6, 0.4, 1, 1000) - 80.0).abs() < 1e-10);
        assert_eq!(bound_wlfu_lower(0.5, 0.5, 3, 100), 0.0);
        assert!(bound_wlfu_lower(0.6, 0.4, 500, 10_000) < 1e-100);
    }

    #[test]
    fn p_min_matches_hand_computation() {
        // floor(0.2 * 5) + 1 = 2: tail of Bin(5, 0.3) from 2.
        let got = p_min(0.3, 0.2, 5);
        let complement = 1.0 - 0.7f64.powi(5) - 5.0 * 0.3 * 0.7f64.powi(4);
        assert!((got - 0.47178).abs() < 1e-5);
        assert!((got - complement).abs() < 1e-14);
        assert_eq!(p_min(1.0, 0.2, 7), 1.0);
    }

    #[test]
    fn tail_handles_edges() {
        assert_eq!(binomial_upper_tail(0.3, 12, 0), 1.0);
        assert_eq!(binomial_upper_tail(0.3, 12, 13), 0.0);
        assert_eq!(binomial_upper_tail(0.0, 12, 1), 0.0);
        assert_eq!(binomial_upper_tail(1.0, 12, 12), 1.0);
        // Bin(4, 0.5) >= 2: 11/16.
        assert!((binomial_upper_tail(0.5, 4, 2) - 11.0 / 16.0).abs() < 1e-15);
    }

    #[test]
    fn tail_survives_large_w_without_overflow() {
        // Anchor far in the left tail of Bin(20000, 0.5); the sum crosses
        // ~2^20000/2^280 in scaled space, exercising mid-loop rescaling.
        let v = binomial_upper_tail(0.5, 20_000, 1);
        assert!((v - 1.0).abs() < 1e-12);
        let half = binomial_upper_tail(0.5, 20_001, 10_001);
        assert!((half - 0.5).abs() < 1e-9);
    }

    #[test]
    fn threshold_floor_is_exact() {
        // 0.2 as f64 is slightly above 1/5, so 0.2 * 5 exceeds 1.
        assert_eq!(admission_threshold(0.2, 5), 2);
        assert_eq!(admission_threshold(0.25, 4), 2);
        assert_eq!(admission_threshold(0.5, 4), 3);
        assert_eq!(admission_threshold(0.0, 9), 1);
        // 0.1 is slightly above 1/10: floor(0.1 * 10) = 1.
        assert_eq!(admission_threshold(0.1, 10), 2);
        assert_eq!(admission_threshold(1.0, 6), 7);
    }

    #[test]
    fn si_bound_example_shape() {
        // delta=0.1, L=20, C=2: 36 * (200 + 400 * (4 + 3200 e^{-0.00125})).
        let inner = 200.0 + 400.0 * (4.0 + 3200.0 * (-0.00125f64).exp());
        assert!((bound_si(0.1, 20, 2) - 36.0 * inner).abs() < 1e-6);
        assert_eq!(bound_si(0.0, 20, 2), f64::INFINITY);
    }

    #[test]
    fn dkw_example_and_vacuous_limit() {
        assert!((dkw_envelope(800, 0.2) - 2.0 * (-16.0f64).exp()).abs() < 1e-20);
        assert!((dkw_envelope(800, 0.2) - 2.25e-7).abs() < 1e-9);
        assert_eq!(dkw_envelope(100, 0.0), 2.0);
    }

    #[test]
    fn mps_envelope_is_linear_in_log_t() {
        let a = bound_mps(20, 2, 100);
        let b = bound_mps(20, 2, 10_000);
        assert!((b - 2.0 * a).abs() < 1e-9);
    }

    #[test]
    fn lfulite_bound_degenerates_to_lfu_tail_term() {
        let with_window = bound_lfulite(0.1, 50, 5, 0, 1.0);
        assert!((with_window - 4.0 * 5.0 * 45.0 / 0.1).abs() < 1e-9);
        assert_eq!(bound_lfulite(0.1, 50, 5, 10, 0.0), f64::INFINITY);
    }

    #[test]
    fn bank_curve_single_window_is_entry_mass() {
        let profile = zipf_profile(4, 1.0).unwrap();
        let threshold = admission_threshold(profile.probs()[2], 6);
        let direct: f64 = profile
            .probs()
            .iter()
            .map(|&mu| binomial_upper_tail(mu, 6, threshold))
            .sum();
        let curve = expected_bank_curve(&profile, 2, 6, &[6]).unwrap();
        assert!((curve[0] - direct).abs() < 1e-12);
    }

    #[test]
    fn bank_curve_is_concave_and_monotone_in_whole_windows() {
        let profile = zipf_profile(8, 1.0).unwrap();
        let ts: Vec<u64> = (1..=12u64).map(|m| m * 20).collect();
        let curve = expected_bank_curve(&profile, 3, 20, &ts).unwrap();
        for pair in curve.windows(2) {
            assert!(pair[1] >= pair[0] - 1e-12);
        }
        for triple in curve.windows(3) {
            assert!(triple[2] - triple[1] <= triple[1] - triple[0] + 1e-12);
        }
    }

    #[test]
    fn larger_window_admits_less_tail_mass() {
        // Contribution of the below-boundary items shrinks with the window.
        let probs = [0.4, 0.3, 0.2, 0.1];
        let mu_c1 = probs[2];
        let tail_mass = |w: u64, t: u64| -> f64 {
            let threshold = admission_threshold(mu_c1, w);
            probs[2..]
                .iter()
                .map(|&mu| {
                    let p = binomial_upper_tail(mu, w, threshold);
                    1.0 - pow_u64(1.0 - p, t.div_ceil(w))
                })
                .sum()
        };
        assert!(tail_mass(40, 1000) <= tail_mass(10, 1000) + 1e-12);
        assert!(tail_mass(160, 1000) <= tail_mass(40, 1000) + 1e-12);
    }

    #[test]
    fn report_fills_window_fields_on_request() {
        let profile = zipf_profile(20, 1.0).unwrap();
        let bare = bound_report(&profile, 4, None, 10_000).unwrap();
        assert!(bare.p_min.is_none() && bare.lfulite.is_none());
        assert!(bare.lfu.is_finite() && bare.si.is_finite());
        let windowed = bound_report(&profile, 4, Some(60), 10_000).unwrap();
        assert!(windowed.p_min.unwrap() > 0.0);
        // The bank bound keeps the full second term, so it dominates the
        // plain frequency-count bound.
        assert!(windowed.lfulite.unwrap() >= bare.lfu);
        assert!(!windowed.degenerate);
    }
}
