//! Gaussian tail analytics.
//!
//! For a standard normal `Z`, `B(gamma)` is the contribution of the
//! largest-magnitude `gamma` fraction of draws to `E|Z|`, and `G(gamma)` the
//! contribution of the smallest `1 - gamma` fraction:
//!
//! ```text
//! B(gamma) = sqrt(2/pi) * exp(-(erfinv(1 - gamma))^2)
//! G(gamma) = sqrt(2/pi) * (1 - exp(-(erfinv(1 - gamma))^2))
//! ```
//!
//! They partition `E|Z| = sqrt(2/pi)`. The critical corruption fraction
//! [`eta0`] is where the two masses balance, `G(eta) = B(eta)`, with the
//! closed form `2(1 - Phi(sqrt(2 ln 2))) ~= 0.239`: below it the honest
//! samples outweigh whatever an adversary can place on the worst fraction,
//! above it they cannot. [`tail_moments_p`] generalizes the split to `p`-th
//! absolute moments for `0 < p <= 1`, and [`breakdown_threshold`] locates the
//! balancing fraction for each `p`, which climbs toward 1/2 as `p` shrinks.
//!
//! Everything here is a pure function of its arguments; results are suitable
//! for concurrent use.

mod special;
pub mod quadrature;

use std::fmt::Write as _;
use std::sync::OnceLock;

use thiserror::Error;

pub use special::{erf, erfc, std_normal_pdf};

/// `E|Z| = sqrt(2/pi)` for a standard normal `Z`.
pub const MEAN_ABS_NORMAL: f64 = 0.797_884_560_802_865_4;

#[derive(Debug, Error)]
pub enum AnalyticsError {
    #[error("non-finite input {0}")]
    NonFinite(f64),
    #[error("{name} = {value} outside {range}")]
    OutOfRange {
        name: &'static str,
        value: f64,
        range: &'static str,
    },
    #[error("grid must be strictly increasing at position {0}")]
    GridNotIncreasing(usize),
}

/// A dimensionless fraction of samples, pinned to `[0, 1]`.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd)]
pub struct Fraction(f64);

impl Fraction {
    pub fn new(value: f64) -> Result<Self, AnalyticsError> {
        if !value.is_finite() {
            return Err(AnalyticsError::NonFinite(value));
        }
        if !(0.0..=1.0).contains(&value) {
            return Err(AnalyticsError::OutOfRange {
                name: "fraction",
                value,
                range: "[0, 1]",
            });
        }
        Ok(Self(value))
    }

    pub fn value(self) -> f64 {
        self.0
    }

    /// The corruption budget `floor(eta * m)`, nudged so that decimal
    /// fractions like 0.15 * 2000 land on the intended integer.
    pub fn budget(self, m: usize) -> usize {
        ((self.0 * m as f64) + 1e-9).floor() as usize
    }
}

impl std::fmt::Display for Fraction {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        self.0.fmt(f)
    }
}

/// Standard normal CDF, absolute error below 1e-12.
pub fn std_normal_cdf(x: f64) -> Result<f64, AnalyticsError> {
    if !x.is_finite() {
        return Err(AnalyticsError::NonFinite(x));
    }
    Ok(special::cdf_unchecked(x))
}

/// Standard normal quantile on the open interval `0 < p < 1`.
pub fn std_normal_quantile(p: f64) -> Result<f64, AnalyticsError> {
    if !p.is_finite() {
        return Err(AnalyticsError::NonFinite(p));
    }
    if p <= 0.0 || p >= 1.0 {
        return Err(AnalyticsError::OutOfRange {
            name: "probability",
            value: p,
            range: "(0, 1)",
        });
    }
    Ok(special::quantile_unchecked(p))
}

/// Inverse error function on `-1 < y < 1`.
pub fn inv_erf(y: f64) -> Result<f64, AnalyticsError> {
    if !y.is_finite() {
        return Err(AnalyticsError::NonFinite(y));
    }
    if y.abs() >= 1.0 {
        return Err(AnalyticsError::OutOfRange {
            name: "inv_erf argument",
            value: y,
            range: "(-1, 1)",
        });
    }
    // erfinv(y) = Phi^{-1}((1+y)/2) / sqrt(2); odd symmetry keeps the
    // mapped probability in the well-conditioned half.
    let a = y.abs();
    let q = special::quantile_unchecked(0.5 * (1.0 + a)) * std::f64::consts::FRAC_1_SQRT_2;
    Ok(if y < 0.0 { -q } else { q })
}

/// L1 mass of the largest-magnitude `gamma` fraction of a standard normal.
pub fn big_b(gamma: Fraction) -> f64 {
    let g = gamma.value();
    if g <= 0.0 {
        return 0.0;
    }
    if g >= 1.0 {
        return MEAN_ABS_NORMAL;
    }
    let u = inv_erf(1.0 - g).expect("1 - gamma is interior");
    MEAN_ABS_NORMAL * (-u * u).exp()
}

/// L1 mass of the smallest-magnitude `1 - gamma` fraction; the complement of
/// [`big_b`], with `big_g + big_b = sqrt(2/pi)` exactly in the closed forms.
pub fn big_g(gamma: Fraction) -> f64 {
    MEAN_ABS_NORMAL - big_b(gamma)
}

/// The critical corruption fraction: the root of `G(eta) = B(eta)`, located
/// by bisection on the monotone difference.
pub fn eta0() -> Fraction {
    static ETA0: OnceLock<f64> = OnceLock::new();
    let v = *ETA0.get_or_init(|| {
        let f = |g: f64| {
            let g = Fraction::new(g).unwrap();
            big_g(g) - big_b(g)
        };
        bisect(f, 1e-9, 1.0 - 1e-9, 1e-13)
    });
    Fraction::new(v).unwrap()
}

/// Bisection for a decreasing function with a sign change on `[lo, hi]`.
fn bisect(f: impl Fn(f64) -> f64, mut lo: f64, mut hi: f64, xtol: f64) -> f64 {
    debug_assert!(f(lo) > 0.0 && f(hi) < 0.0);
    while hi - lo > xtol {
        let mid = 0.5 * (lo + hi);
        if f(mid) > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// The threshold `t` with `P(|Z| > t) = gamma`.
fn two_sided_threshold(gamma: f64) -> f64 {
    special::quantile_unchecked(1.0 - 0.5 * gamma)
}

/// Splits `E|Z|^p` at the two-sided threshold for `gamma`: returns
/// `(g_p, b_p)` with `g_p = E[|Z|^p ; |Z| <= t]` and
/// `b_p = E[|Z|^p ; |Z| > t]`, each integrated to absolute error 1e-8 or
/// better. The integrand beyond `t + 40` is below 1e-300 and is dropped.
pub fn tail_moments_p(gamma: Fraction, p: f64) -> Result<(f64, f64), AnalyticsError> {
    if !p.is_finite() {
        return Err(AnalyticsError::NonFinite(p));
    }
    if p <= 0.0 || p > 1.0 {
        return Err(AnalyticsError::OutOfRange {
            name: "moment exponent",
            value: p,
            range: "(0, 1]",
        });
    }
    let integrand = |z: f64| 2.0 * z.powf(p) * std_normal_pdf(z);
    let g = gamma.value();
    if g <= 0.0 {
        let total = quadrature::integrate(integrand, 0.0, 40.0, 1e-10);
        return Ok((total, 0.0));
    }
    if g >= 1.0 {
        let total = quadrature::integrate(integrand, 0.0, 40.0, 1e-10);
        return Ok((0.0, total));
    }
    let t = two_sided_threshold(g);
    let kept = quadrature::integrate(integrand, 0.0, t, 1e-10);
    let tail = quadrature::integrate(integrand, t, t + 40.0, 1e-10);
    Ok((kept, tail))
}

/// The corruption fraction at which the `p`-th-moment bulk and tail masses
/// balance: `g_p(gamma) = b_p(gamma)`, found by bisection to 1e-6. Equals
/// [`eta0`] at `p = 1` and rises toward 1/2 as `p` decreases.
pub fn breakdown_threshold(p: f64) -> Result<Fraction, AnalyticsError> {
    if !p.is_finite() {
        return Err(AnalyticsError::NonFinite(p));
    }
    if p <= 0.0 || p > 1.0 {
        return Err(AnalyticsError::OutOfRange {
            name: "moment exponent",
            value: p,
            range: "(0, 1]",
        });
    }
    let diff = |g: f64| {
        let (kept, tail) = tail_moments_p(Fraction::new(g).unwrap(), p).unwrap();
        kept - tail
    };
    let root = bisect(diff, 1e-7, 1.0 - 1e-7, 1e-7);
    Fraction::new(root)
}

/// Evaluations of the bulk/tail masses on a fraction grid for one exponent.
#[derive(Debug, Clone)]
pub struct AnalyticsTable {
    grid: Vec<Fraction>,
    g_values: Vec<f64>,
    b_values: Vec<f64>,
    p: f64,
}

impl AnalyticsTable {
    /// Evaluates the table on a strictly increasing grid. `p = 1` uses the
    /// closed forms; other exponents use quadrature.
    pub fn build(grid: Vec<Fraction>, p: f64) -> Result<Self, AnalyticsError> {
        for i in 1..grid.len() {
            if grid[i].value() <= grid[i - 1].value() {
                return Err(AnalyticsError::GridNotIncreasing(i));
            }
        }
        let mut g_values = Vec::with_capacity(grid.len());
        let mut b_values = Vec::with_capacity(grid.len());
        for &gamma in &grid {
            let (g, b) = if p == 1.0 {
                (big_g(gamma), big_b(gamma))
            } else {
                tail_moments_p(gamma, p)?
            };
            g_values.push(g);
            b_values.push(b);
        }
        Ok(Self {
            grid,
            g_values,
            b_values,
            p,
        })
    }

    pub fn grid(&self) -> &[Fraction] {
        &self.grid
    }

    pub fn g_values(&self) -> &[f64] {
        &self.g_values
    }

    pub fn b_values(&self) -> &[f64] {
        &self.b_values
    }

    pub fn p(&self) -> f64 {
        self.p
    }

    /// CSV rendering with header `gamma,p,g,b`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("gamma,p,g,b\n");
        for i in 0..self.grid.len() {
            let _ = writeln!(
                out,
                "{},{},{},{}",
                crate::numerics::fmt_full(self.grid[i].value()),
                crate::numerics::fmt_full(self.p),
                crate::numerics::fmt_full(self.g_values[i]),
                crate::numerics::fmt_full(self.b_values[i]),
            );
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn frac(v: f64) -> Fraction {
        Fraction::new(v).unwrap()
    }

    /// Quadrature oracle for the CDF, independent of the rational-function
    /// implementation path.
    fn cdf_oracle(x: f64) -> f64 {
        0.5 + quadrature::integrate(std_normal_pdf, 0.0, x, 1e-14)
    }

    /// Quadrature oracle for the tail L1 mass `B(gamma)`:
    /// `(2/sqrt(2 pi)) * integral_t^inf z exp(-z^2/2) dz`.
    fn big_b_oracle(gamma: f64) -> f64 {
        if gamma <= 0.0 {
            return 0.0;
        }
        if gamma >= 1.0 {
            return MEAN_ABS_NORMAL;
        }
        let t = std_normal_quantile(1.0 - 0.5 * gamma).unwrap();
        quadrature::integrate(|z| 2.0 * z * std_normal_pdf(z), t, t + 40.0, 1e-12)
    }

    #[test]
    fn cdf_examples() {
        assert_eq!(std_normal_cdf(0.0).unwrap(), 0.5);
        // tail decay: delta = P(Z > 10) well below 1e-20
        let delta = 0.5 * erfc(10.0 * std::f64::consts::FRAC_1_SQRT_2);
        assert!(delta < 1e-20);
        assert!(std_normal_cdf(10.0).unwrap() > 1.0 - 1e-15);
        // quadrature-derived value near the critical threshold
        let x = 1.17741;
        assert!((std_normal_cdf(x).unwrap() - cdf_oracle(x)).abs() < 1e-12);
        assert!((std_normal_cdf(x).unwrap() - 0.8805).abs() < 1e-4);
        assert!(std_normal_cdf(f64::NAN).is_err());
        assert!(std_normal_cdf(f64::INFINITY).is_err());
    }

    #[test]
    fn cdf_matches_quadrature_on_grid() {
        let mut x = -8.0;
        while x <= 8.0 {
            let got = std_normal_cdf(x).unwrap();
            assert!(
                (got - cdf_oracle(x)).abs() <= 1e-12,
                "cdf mismatch at {x}: {got} vs {}",
                cdf_oracle(x)
            );
            x += 0.37;
        }
    }

    #[test]
    fn cdf_monotone() {
        let mut prev = 0.0;
        let mut x = -12.0;
        while x <= 12.0 {
            let v = std_normal_cdf(x).unwrap();
            assert!(v >= prev);
            prev = v;
            x += 0.05;
        }
    }

    #[test]
    fn quantile_examples() {
        assert_eq!(std_normal_quantile(0.5).unwrap(), 0.0);
        for p in [0.01, 0.2, 0.37, 0.49] {
            let a = std_normal_quantile(p).unwrap();
            let b = std_normal_quantile(1.0 - p).unwrap();
            assert!((a + b).abs() < 1e-12, "symmetry failed at {p}");
        }
        // oracle: invert the quadrature CDF by bisection
        let target = 0.8805;
        let (mut lo, mut hi) = (0.0, 3.0);
        while hi - lo > 1e-13 {
            let mid = 0.5 * (lo + hi);
            if cdf_oracle(mid) < target {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        let oracle = 0.5 * (lo + hi);
        let got = std_normal_quantile(target).unwrap();
        assert!((got - oracle).abs() < 1e-10);
        assert!((got - 1.17741).abs() < 1e-4);
        assert!(std_normal_quantile(0.0).is_err());
        assert!(std_normal_quantile(1.0).is_err());
        assert!(std_normal_quantile(-0.5).is_err());
    }

    #[test]
    fn quantile_round_trip_tolerance() {
        let mut p = 0.001;
        while p < 1.0 {
            let x = std_normal_quantile(p).unwrap();
            assert!((std_normal_cdf(x).unwrap() - p).abs() <= 1e-10);
            p += 0.0017;
        }
    }

    #[test]
    fn inv_erf_examples() {
        assert_eq!(inv_erf(0.0).unwrap(), 0.0);
        for y in [0.1, 0.33, 0.7, 0.95] {
            let a = inv_erf(y).unwrap();
            let b = inv_erf(-y).unwrap();
            assert!((a + b).abs() < 1e-13, "odd symmetry failed at {y}");
            assert!((erf(a) - y).abs() <= 1e-10, "round trip failed at {y}");
        }
        // Newton oracle on quadrature-evaluated erf
        let target = 0.5;
        let erf_quad =
            |x: f64| quadrature::integrate(|t| 2.0 * (-t * t).exp(), 0.0, x, 1e-14) / std::f64::consts::PI.sqrt();
        let mut x = 0.5;
        for _ in 0..60 {
            let step = (erf_quad(x) - target)
                / (2.0 / std::f64::consts::PI.sqrt() * (-x * x).exp());
            x -= step;
            if step.abs() < 1e-14 {
                break;
            }
        }
        assert!((inv_erf(0.5).unwrap() - x).abs() < 1e-12);
        assert!((inv_erf(0.5).unwrap() - 0.476936).abs() < 1e-6);
        assert!(inv_erf(1.0).is_err());
        assert!(inv_erf(-1.0).is_err());
    }

    #[test]
    fn big_b_examples() {
        assert_eq!(big_b(frac(0.0)), 0.0);
        assert!((big_b(frac(1.0)) - MEAN_ABS_NORMAL).abs() < 1e-15);
        let at_eta0 = big_b(eta0());
        assert!((at_eta0 - 0.5 * MEAN_ABS_NORMAL).abs() < 1e-9);
    }

    #[test]
    fn big_g_examples() {
        assert!((big_g(frac(0.0)) - MEAN_ABS_NORMAL).abs() < 1e-15);
        assert_eq!(big_g(frac(1.0)), 0.0);
        let b_half = big_b_oracle(0.5);
        assert!((big_g(frac(0.5)) - (MEAN_ABS_NORMAL - b_half)).abs() < 1e-9);
        assert!((big_g(frac(0.5)) - 0.162331).abs() < 1e-5);
    }

    #[test]
    fn closed_forms_match_quadrature_on_grid() {
        for i in 1..100 {
            let gamma = i as f64 * 0.01;
            let direct = big_b(frac(gamma));
            let quad = big_b_oracle(gamma);
            assert!(
                (direct - quad).abs() <= 1e-9,
                "B({gamma}) closed {direct} vs quadrature {quad}"
            );
        }
    }

    #[test]
    fn partition_and_monotonicity_on_grid() {
        let mut prev_b = -1.0;
        let mut prev_g = f64::INFINITY;
        for i in 0..=100 {
            let gamma = frac(i as f64 * 0.01);
            let b = big_b(gamma);
            let g = big_g(gamma);
            assert!((b + g - MEAN_ABS_NORMAL).abs() <= 1e-10);
            if i > 0 && i < 100 {
                assert!(b > prev_b, "B not strictly increasing at {gamma}");
                assert!(g < prev_g, "G not strictly decreasing at {gamma}");
            }
            prev_b = b;
            prev_g = g;
        }
    }

    #[test]
    fn eta0_value_and_identities() {
        let e = eta0().value();
        // bisection against the quadrature-free closed forms
        assert!((e - 0.239).abs() < 5e-4);
        assert!((e - 0.23906).abs() < 5e-4);
        // closed-form identity from the balance equation
        let closed = 2.0 * (1.0 - std_normal_cdf((2.0 * 2.0f64.ln()).sqrt()).unwrap());
        assert!((e - closed).abs() < 1e-8);
        let gap = (big_g(eta0()) - big_b(eta0())).abs();
        assert!(gap <= 1e-8);
    }

    #[test]
    fn tail_moments_consistency() {
        // p = 1 agrees with the closed forms
        for gamma in [0.05, 0.239, 0.5, 0.9] {
            let (g, b) = tail_moments_p(frac(gamma), 1.0).unwrap();
            assert!((g - big_g(frac(gamma))).abs() <= 1e-8);
            assert!((b - big_b(frac(gamma))).abs() <= 1e-8);
        }
        // empty tail
        let (g, b) = tail_moments_p(frac(0.0), 0.7).unwrap();
        assert_eq!(b, 0.0);
        assert!(g > 0.0);
        // independent quadrature of the total p-th absolute moment
        let p = 0.5;
        let total_oracle = quadrature::integrate(
            |z| 2.0 * z.powf(p) * std_normal_pdf(z),
            0.0,
            40.0,
            1e-12,
        );
        let (g, b) = tail_moments_p(frac(0.3), p).unwrap();
        assert!((g + b - total_oracle).abs() <= 1e-8);
        assert!(tail_moments_p(frac(0.3), 0.0).is_err());
        assert!(tail_moments_p(frac(0.3), 1.5).is_err());
    }

    #[test]
    fn breakdown_threshold_curve() {
        let at_one = breakdown_threshold(1.0).unwrap().value();
        assert!((at_one - eta0().value()).abs() <= 1e-6);
        assert!(breakdown_threshold(0.05).unwrap().value() > 0.45);
        let mid = breakdown_threshold(0.5).unwrap().value();
        assert!(mid > eta0().value() + 1e-3 && mid < 0.5 - 1e-3);
        // strictly decreasing in p
        let mut prev = f64::INFINITY;
        for i in 1..=10 {
            let p = i as f64 * 0.1;
            let v = breakdown_threshold(p).unwrap().value();
            assert!(v < prev, "threshold not strictly decreasing at p={p}");
            prev = v;
        }
    }

    #[test]
    fn table_build_and_csv() {
        let grid: Vec<Fraction> = (1..50).map(|i| frac(i as f64 * 0.02)).collect();
        let table = AnalyticsTable::build(grid, 1.0).unwrap();
        for i in 0..table.grid().len() {
            assert!(
                (table.g_values()[i] + table.b_values()[i] - MEAN_ABS_NORMAL).abs() < 1e-10
            );
        }
        let csv = table.to_csv();
        assert!(csv.starts_with("gamma,p,g,b\n"));
        assert_eq!(csv.lines().count(), 50);

        let bad = AnalyticsTable::build(vec![frac(0.5), frac(0.5)], 1.0);
        assert!(matches!(bad, Err(AnalyticsError::GridNotIncreasing(1))));
    }

    #[test]
    fn fraction_budget_rounding() {
        assert_eq!(Fraction::new(0.15).unwrap().budget(2000), 300);
        assert_eq!(Fraction::new(0.3).unwrap().budget(10), 3);
        assert_eq!(Fraction::new(1.0 / 3.0).unwrap().budget(3), 1);
        assert_eq!(Fraction::new(0.0).unwrap().budget(100), 0);
        assert_eq!(Fraction::new(1.0).unwrap().budget(7), 7);
    }
}
