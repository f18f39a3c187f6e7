//! Closed-form convergence bounds and optimal batch sizes.
//!
//! Two algorithms are covered:
//!
//! * ByzSGDm (robust aggregation of local momenta). Its bound on
//!   `(1/T) Σ E‖∇F(w_t)‖²`, rewritten at a fixed gradient-computation budget
//!   `C = T·B·m·(1-δ)`, is the strictly convex function
//!
//!   ```text
//!   U(B) = 16 √(σ²(1+cδm)(1-δ)/C) (√(10LF₀) + √(3cδσ²/B))
//!        + 32 L F₀ B m (1-δ) / C
//!        + 20 σ² (1+cδm)(1-δ) / C
//!   ```
//!
//!   minimized at `B* = (3/(16L²F₀²m))^⅓ (cδ(1+cδm)/(m(1-δ)))^⅓ σ^{4/3} C^⅓`.
//!
//! * ByzSGDnm (normalized server step). Its bound on `(1/T) Σ E‖∇F(w_t)‖`
//!   with the recommended `(α, η)` is minimized at fixed `C` by
//!   `B̃* = 9 K^{3/2} σ² / (80 m (1-δ) L F₀)` with `K = √(2cmδ(1-δ)) + 1`.
//!
//! [`numeric_argmin`] is an independent golden-section route used to
//! cross-check both closed forms.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Symbols shared by every bound: smoothness `L`, noise `σ`, initial gap
/// `F₀`, robustness constant `c`, Byzantine fraction `δ`, worker count `m`
/// and budget `C` (used by the fixed-budget formulas only).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoundParams {
    pub l_smooth: f64,
    pub sigma: f64,
    pub f0: f64,
    pub c: f64,
    pub delta: f64,
    pub m: usize,
    pub budget: f64,
}

impl BoundParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.l_smooth > 0.0) {
            return Err(Error::invalid("L must be > 0"));
        }
        if !(self.sigma >= 0.0 && self.f0 >= 0.0 && self.c >= 0.0) {
            return Err(Error::invalid("sigma, F0 and c must be >= 0"));
        }
        if !(0.0..0.5).contains(&self.delta) {
            return Err(Error::invalid("delta must be < 0.5"));
        }
        if self.m == 0 {
            return Err(Error::invalid("m must be >= 1"));
        }
        Ok(())
    }

    fn m(&self) -> f64 {
        self.m as f64
    }

    fn check_budget(&self) -> Result<()> {
        if !(self.budget > 0.0) {
            return Err(Error::invalid("budget C must be > 0"));
        }
        Ok(())
    }

    /// `K = √(2cmδ(1-δ)) + 1`, the Byzantine inflation factor of ByzSGDnm.
    pub fn nm_factor(&self) -> f64 {
        (2.0 * self.c * self.m() * self.delta * (1.0 - self.delta)).sqrt() + 1.0
    }

    /// Iterations implied by the budget at batch size `b`.
    pub fn iterations_for(&self, b: f64) -> f64 {
        self.budget / (b * self.m() * (1.0 - self.delta))
    }
}

fn check_tb(t: f64, b: f64) -> Result<()> {
    if !(t >= 1.0 && b >= 1.0) {
        return Err(Error::invalid("T and B must be >= 1"));
    }
    Ok(())
}

/// The three terms of `U(B)`, in order.
pub fn bound_byzsgdm_terms(b: f64, p: &BoundParams) -> Result<[f64; 3]> {
    p.validate()?;
    p.check_budget()?;
    if !(b > 0.0) {
        return Err(Error::invalid("batch size must be > 0"));
    }
    let (l, s2, f0, c, d, m, cb) = (p.l_smooth, p.sigma * p.sigma, p.f0, p.c, p.delta, p.m(), p.budget);
    let inflation = 1.0 + c * d * m;
    let t1 = 16.0 * (s2 * inflation * (1.0 - d) / cb).sqrt() * ((10.0 * l * f0).sqrt() + (3.0 * c * d * s2 / b).sqrt());
    let t2 = 32.0 * l * f0 * b * m * (1.0 - d) / cb;
    let t3 = 20.0 * s2 * inflation * (1.0 - d) / cb;
    Ok([t1, t2, t3])
}

/// `U(B)`, the ByzSGDm bound at fixed budget.
pub fn bound_byzsgdm_u(b: f64, p: &BoundParams) -> Result<f64> {
    Ok(bound_byzsgdm_terms(b, p)?.iter().sum())
}

/// ByzSGDm bound for explicit `(T, B)`.
pub fn bound_byzsgdm(t: f64, b: f64, p: &BoundParams) -> Result<f64> {
    p.validate()?;
    check_tb(t, b)?;
    let (l, s2, f0, c, d, m) = (p.l_smooth, p.sigma * p.sigma, p.f0, p.c, p.delta, p.m());
    let inflation = 1.0 + c * d * m;
    Ok(16.0 * (s2 * inflation / (t * b * m)).sqrt() * ((10.0 * l * f0).sqrt() + (3.0 * c * d * s2 / b).sqrt())
        + 32.0 * l * f0 / t
        + 20.0 * s2 * inflation / (t * b * m))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BatchOptimum {
    pub batch: f64,
    pub bound: f64,
    /// False when `δ = 0` (or `cσ = 0`): no interior optimum exists and the
    /// batch size should be chosen by systems constraints instead.
    pub interior: bool,
}

/// The three terms of `U(B*)` in closed form.
pub fn u_at_optimum_terms(p: &BoundParams) -> Result<[f64; 3]> {
    p.validate()?;
    p.check_budget()?;
    let (l, s, f0, c, d, m, cb) = (p.l_smooth, p.sigma, p.f0, p.c, p.delta, p.m(), p.budget);
    let inflation = 1.0 + c * d * m;
    Ok([
        16.0 * (10.0 * l * f0 * inflation * (1.0 - d)).sqrt() * s / cb.sqrt(),
        24.0 * (12.0 * c * d * inflation * (1.0 - d).powi(2) * l * f0 * m).cbrt() * s.powf(4.0 / 3.0) / cb.powf(2.0 / 3.0),
        20.0 * inflation * (1.0 - d) * s * s / cb,
    ])
}

/// `B*` for ByzSGDm and `U(B*)`.
pub fn optimal_batch_byzsgdm(p: &BoundParams) -> Result<BatchOptimum> {
    p.validate()?;
    p.check_budget()?;
    let (l, s, f0, c, d, m, cb) = (p.l_smooth, p.sigma, p.f0, p.c, p.delta, p.m(), p.budget);
    let batch = (3.0 / (16.0 * l * l * f0 * f0 * m)).cbrt()
        * (c * d * (1.0 + c * d * m) / (m * (1.0 - d))).cbrt()
        * s.powf(4.0 / 3.0)
        * cb.cbrt();
    let interior = batch > 0.0 && batch.is_finite();
    let bound = u_at_optimum_terms(p)?.iter().sum();
    Ok(BatchOptimum { batch: if interior { batch } else { 0.0 }, bound, interior })
}

/// The better of `max(1, ⌊B*⌋)` and `⌊B*⌋ + 1` under `U`; ties go to the
/// smaller batch.
pub fn integer_batch(b_star: f64, p: &BoundParams) -> Result<usize> {
    if !(b_star >= 0.0) {
        return Err(Error::invalid("B* must be >= 0"));
    }
    let lo = (b_star.floor() as usize).max(1);
    let hi = b_star.floor() as usize + 1;
    if hi <= lo {
        return Ok(lo);
    }
    let (ul, uh) = (bound_byzsgdm_u(lo as f64, p)?, bound_byzsgdm_u(hi as f64, p)?);
    Ok(if uh < ul { hi } else { lo })
}

/// Recommended `(η, β)` for ByzSGDm: `η = min(√((F₀ + 5cδσ²/(16BL)) /
/// ((20LTσ²/B)(2/m + cδ))), 1/(8L))` and `1 - β = 8Lη`.
pub fn hyperparams_byzsgdm(t: f64, b: f64, p: &BoundParams) -> Result<(f64, f64)> {
    p.validate()?;
    check_tb(t, b)?;
    let (l, s2, f0, c, d, m) = (p.l_smooth, p.sigma * p.sigma, p.f0, p.c, p.delta, p.m());
    let num = f0 + 5.0 * c * d * s2 / (16.0 * b * l);
    let den = (20.0 * l * t * s2 / b) * (2.0 / m + c * d);
    let first = if den > 0.0 { (num / den).sqrt() } else { f64::INFINITY };
    let eta = first.min(1.0 / (8.0 * l));
    Ok((eta, 1.0 - 8.0 * l * eta))
}

/// Generic ByzSGDnm bound on `(1/T) Σ E‖∇F(w_t)‖` for any constant step `η`
/// and momentum weight `α = 1 - β`.
pub fn generic_bound_byzsgdnm(t: f64, b: f64, eta: f64, alpha: f64, p: &BoundParams) -> Result<f64> {
    p.validate()?;
    check_tb(t, b)?;
    if !(eta > 0.0 && alpha > 0.0 && alpha <= 1.0) {
        return Err(Error::invalid("need eta > 0 and alpha in (0, 1]"));
    }
    let (l, f0, d, m) = (p.l_smooth, p.f0, p.delta, p.m());
    Ok(2.0 * f0 / (eta * t)
        + 10.0 * eta * l / alpha
        + 9.0 * p.nm_factor() / (b * m * (1.0 - d)).sqrt() * (1.0 / (alpha * t) + alpha.sqrt()) * p.sigma)
}

/// Terms of the ByzSGDnm bound under the recommended `(α, η)`.
pub fn bound_byzsgdnm_terms(t: f64, b: f64, p: &BoundParams) -> Result<[f64; 3]> {
    p.validate()?;
    check_tb(t, b)?;
    let (l, s2, f0, d, m) = (p.l_smooth, p.sigma * p.sigma, p.f0, p.delta, p.m());
    let k = p.nm_factor();
    Ok([
        6.0 * k.sqrt() * (5.0 * l * f0 * s2 / (t * b * m * (1.0 - d))).powf(0.25),
        12.0 * (5.0 * l * f0 / t).sqrt(),
        27.0 * k.powf(1.5) * s2 / (4.0 * (5.0 * t * b * b * m * m * (1.0 - d).powi(2) * l * f0).sqrt()),
    ])
}

/// ByzSGDnm bound with the recommended `(α, η)`.
pub fn bound_byzsgdnm(t: f64, b: f64, p: &BoundParams) -> Result<f64> {
    Ok(bound_byzsgdnm_terms(t, b, p)?.iter().sum())
}

/// [`bound_byzsgdnm`] at fixed budget, `T = C / (B m (1-δ))`. `T` is treated
/// as a real number here.
pub fn bound_byzsgdnm_at_budget(b: f64, p: &BoundParams) -> Result<f64> {
    p.validate()?;
    p.check_budget()?;
    if !(b > 0.0) {
        return Err(Error::invalid("batch size must be > 0"));
    }
    let (l, s2, f0, d, m) = (p.l_smooth, p.sigma * p.sigma, p.f0, p.delta, p.m());
    let t = p.iterations_for(b);
    let k = p.nm_factor();
    Ok(6.0 * k.sqrt() * (5.0 * l * f0 * s2 / p.budget).powf(0.25)
        + 12.0 * (5.0 * l * f0 / t).sqrt()
        + 27.0 * k.powf(1.5) * s2 / (4.0 * (5.0 * t * b * b * m * m * (1.0 - d).powi(2) * l * f0).sqrt()))
}

/// Recommended `(α, η)` for ByzSGDnm:
/// `α = min(√(80LF₀Bm(1-δ)) / ((9K)σ√T), 1)`, `η = √(αF₀/(5LT))`; `β = 1 - α`.
pub fn hyperparams_byzsgdnm(t: f64, b: f64, p: &BoundParams) -> Result<(f64, f64)> {
    p.validate()?;
    check_tb(t, b)?;
    let (l, f0, d, m) = (p.l_smooth, p.f0, p.delta, p.m());
    let den = 9.0 * p.nm_factor() * p.sigma * t.sqrt();
    let alpha = if den > 0.0 {
        ((80.0 * l * f0 * b * m * (1.0 - d)).sqrt() / den).min(1.0)
    } else {
        1.0
    };
    Ok((alpha, (alpha * f0 / (5.0 * l * t)).sqrt()))
}

/// `B̃*` for ByzSGDnm and the bound it achieves at budget `C`.
pub fn optimal_batch_byzsgdnm(p: &BoundParams) -> Result<BatchOptimum> {
    p.validate()?;
    p.check_budget()?;
    let (l, s, f0, d, m, cb) = (p.l_smooth, p.sigma, p.f0, p.delta, p.m(), p.budget);
    let k = p.nm_factor();
    let batch = 9.0 * k.powf(1.5) * s * s / (80.0 * m * (1.0 - d) * l * f0);
    let bound = 6.0 * k.sqrt() * (5.0 * l * f0 * s * s).powf(0.25) / cb.powf(0.25) + 18.0 * k.powf(0.75) * s / cb.sqrt();
    Ok(BatchOptimum { batch, bound, interior: batch > 0.0 && batch.is_finite() })
}

/// Golden-section search for the minimizer of `f` over `[lo, hi]` on a
/// log scale. Assumes `f ∘ exp` is unimodal.
pub fn numeric_argmin(f: impl Fn(f64) -> f64, lo: f64, hi: f64, iters: usize) -> f64 {
    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let (mut a, mut b) = (lo.ln(), hi.ln());
    let mut x1 = b - inv_phi * (b - a);
    let mut x2 = a + inv_phi * (b - a);
    let (mut f1, mut f2) = (f(x1.exp()), f(x2.exp()));
    for _ in 0..iters {
        if f1 <= f2 {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - inv_phi * (b - a);
            f1 = f(x1.exp());
        } else {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + inv_phi * (b - a);
            f2 = f(x2.exp());
        }
    }
    (0.5 * (a + b)).exp()
}

/// Search window and iteration count of the numeric oracle.
pub const ARGMIN_RANGE: (f64, f64) = (1e-3, 1e8);
pub const ARGMIN_ITERS: usize = 200;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConvexityReport {
    pub points: usize,
    /// Smallest second divided difference of `U` over the grid.
    pub min_second_difference: f64,
    pub all_positive: bool,
    /// `cδ = 0`: `U` is affine in `B` and convexity is not strict.
    pub boundary: bool,
}

/// Checks convexity of `U` through second divided differences on `grid`
/// (which may be unevenly spaced, e.g. logarithmic).
pub fn convexity_check(p: &BoundParams, grid: &[f64]) -> Result<ConvexityReport> {
    if grid.len() < 3 {
        return Err(Error::invalid("convexity check needs at least 3 grid points"));
    }
    let mut xs = grid.to_vec();
    xs.sort_by(f64::total_cmp);
    let us: Vec<f64> = xs.iter().map(|&b| bound_byzsgdm_u(b, p)).collect::<Result<_>>()?;
    let mut min_d2 = f64::INFINITY;
    for i in 1..xs.len() - 1 {
        let (h1, h2) = (xs[i] - xs[i - 1], xs[i + 1] - xs[i]);
        let d2 = 2.0 * ((us[i + 1] - us[i]) / h2 - (us[i] - us[i - 1]) / h1) / (h1 + h2);
        min_d2 = min_d2.min(d2);
    }
    Ok(ConvexityReport {
        points: xs.len(),
        min_second_difference: min_d2,
        all_positive: min_d2 > 0.0,
        boundary: p.c * p.delta == 0.0,
    })
}

/// `n` logarithmically spaced points in `[lo, hi]`.
pub fn log_grid(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    let (a, b) = (lo.ln(), hi.ln());
    (0..n)
        .map(|i| (a + (b - a) * i as f64 / (n - 1) as f64).exp())
        .collect()
}

/// Everything the `plan` subcommand prints.
#[derive(Debug, Clone, Serialize)]
pub struct PlanReport {
    pub params: BoundParams,
    pub b_star: BatchOptimum,
    pub b_star_integer: usize,
    pub b_tilde_star: BatchOptimum,
    /// Iterations and hyperparameters at the recommended integer batch.
    pub byzsgdm_iterations: f64,
    pub byzsgdm_eta: f64,
    pub byzsgdm_beta: f64,
    pub byzsgdnm_batch: usize,
    pub byzsgdnm_iterations: f64,
    pub byzsgdnm_eta: f64,
    pub byzsgdnm_beta: f64,
}

pub fn plan(p: &BoundParams) -> Result<PlanReport> {
    let b_star = optimal_batch_byzsgdm(p)?;
    let b_int = integer_batch(b_star.batch, p)?;
    let t_m = p.iterations_for(b_int as f64).max(1.0);
    let (eta_m, beta_m) = hyperparams_byzsgdm(t_m, b_int as f64, p)?;
    let b_tilde = optimal_batch_byzsgdnm(p)?;
    let b_nm = (b_tilde.batch.round() as usize).max(1);
    let t_nm = p.iterations_for(b_nm as f64).max(1.0);
    let (alpha, eta_nm) = hyperparams_byzsgdnm(t_nm, b_nm as f64, p)?;
    Ok(PlanReport {
        params: *p,
        b_star,
        b_star_integer: b_int,
        b_tilde_star: b_tilde,
        byzsgdm_iterations: t_m,
        byzsgdm_eta: eta_m,
        byzsgdm_beta: beta_m,
        byzsgdnm_batch: b_nm,
        byzsgdnm_iterations: t_nm,
        byzsgdnm_eta: eta_nm,
        byzsgdnm_beta: 1.0 - alpha,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn unit(delta: f64, budget: f64) -> BoundParams {
        BoundParams { l_smooth: 1.0, sigma: 1.0, f0: 1.0, c: 1.0, delta, m: 8, budget }
    }

    fn rel(a: f64, b: f64) -> f64 {
        (a - b).abs() / b.abs().max(f64::MIN_POSITIVE)
    }

    #[test]
    fn u_at_zero_delta_has_no_inverse_sqrt_term() {
        let p = BoundParams { l_smooth: 2.0, sigma: 0.5, f0: 3.0, c: 1.0, delta: 0.0, m: 8, budget: 1e5 };
        for b in [1.0, 10.0, 100.0] {
            let want = 16.0 * (10.0 * 2.0 * 3.0 * 0.25 / 1e5f64).sqrt() + 32.0 * 6.0 * b * 8.0 / 1e5 + 20.0 * 0.25 / 1e5;
            assert!(rel(bound_byzsgdm_u(b, &p).unwrap(), want) < 1e-12);
        }
    }

    #[test]
    fn u_reference_value() {
        // Term-by-term re-derivation at L=F0=σ=c=1, m=8, δ=1/8, C=1e6, B=64.
        let p = unit(0.125, 1e6);
        let infl: f64 = 1.0 + 0.125 * 8.0;
        let pre = (infl * 0.875 / 1e6).sqrt() * 16.0;
        let want = pre * (10f64.sqrt() + (3.0 * 0.125 / 64.0f64).sqrt()) + 32.0 * 64.0 * 8.0 * 0.875 / 1e6 + 20.0 * infl * 0.875 / 1e6;
        assert!(rel(bound_byzsgdm_u(64.0, &p).unwrap(), want) < 1e-12);
    }

    #[test]
    fn u_limits_and_errors() {
        let p = unit(0.125, 1e6);
        assert!(bound_byzsgdm_u(1e-12, &p).unwrap() > 1e2);
        assert!(bound_byzsgdm_u(1e12, &p).unwrap() > 1e6);
        assert!(bound_byzsgdm_u(0.0, &p).is_err());
        assert!(bound_byzsgdm_u(1.0, &unit(0.125, 0.0)).is_err());
        assert!(bound_byzsgdm_u(1.0, &unit(0.6, 1.0)).is_err());
    }

    #[test]
    fn u_matches_t_form_at_budget() {
        let p = unit(0.25, 1e7);
        let b = 50.0;
        assert!(rel(bound_byzsgdm_u(b, &p).unwrap(), bound_byzsgdm(p.iterations_for(b), b, &p).unwrap()) < 1e-12);
    }

    #[test]
    fn b_star_examples() {
        let zero = optimal_batch_byzsgdm(&unit(0.0, 1e6)).unwrap();
        assert_eq!(zero.batch, 0.0);
        assert!(!zero.interior);
        let lo = optimal_batch_byzsgdm(&unit(0.125, 1e6)).unwrap();
        let hi = optimal_batch_byzsgdm(&unit(0.375, 1e6)).unwrap();
        assert!(hi.batch > lo.batch);
        let p = unit(0.125, 1e6);
        let numeric = numeric_argmin(|b| bound_byzsgdm_u(b, &p).unwrap(), ARGMIN_RANGE.0, ARGMIN_RANGE.1, ARGMIN_ITERS);
        assert!(rel(numeric, lo.batch) < 1e-6, "{numeric} vs {}", lo.batch);
        // The closed-form minimum value agrees with U evaluated at B*.
        assert!(rel(lo.bound, bound_byzsgdm_u(lo.batch, &p).unwrap()) < 1e-12);
    }

    #[test]
    fn integer_batch_examples() {
        let p = unit(0.125, 1e6);
        assert_eq!(integer_batch(0.4, &p).unwrap(), 1);
        assert_eq!(integer_batch(0.0, &p).unwrap(), 1);
        let b = optimal_batch_byzsgdm(&p).unwrap().batch;
        let k = integer_batch(b, &p).unwrap();
        let fl = b.floor();
        let want = if bound_byzsgdm_u(fl + 1.0, &p).unwrap() < bound_byzsgdm_u(fl, &p).unwrap() { fl + 1.0 } else { fl };
        assert_eq!(k as f64, want);
        // Integral B* returns itself when it is the continuous optimum.
        let p = BoundParams { budget: 1e6, ..unit(0.125, 1e6) };
        let target: f64 = 20.0;
        let budget = target.powi(3) / optimal_batch_byzsgdm(&p).unwrap().batch.powi(3) * 1e6;
        let q = BoundParams { budget, ..p };
        let bs = optimal_batch_byzsgdm(&q).unwrap().batch;
        assert!((bs - 20.0).abs() < 1e-9);
        assert_eq!(integer_batch(20.0, &q).unwrap(), 20);
    }

    #[test]
    fn byzsgdm_hyperparams() {
        let p = unit(0.125, 1e6);
        let (e1, _) = hyperparams_byzsgdm(1e6, 64.0, &p).unwrap();
        let (e4, _) = hyperparams_byzsgdm(4e6, 64.0, &p).unwrap();
        assert!((e4 / e1 - 0.5).abs() < 1e-9);
        let (e, beta) = hyperparams_byzsgdm(1.0, 64.0, &p).unwrap();
        assert_eq!(e, 1.0 / 8.0);
        assert_eq!(beta, 0.0);
        let (e, beta) = hyperparams_byzsgdm(1e4, 64.0, &p).unwrap();
        let want = ((1.0f64 + 5.0 * 0.125 / (16.0 * 64.0)) / ((20.0 * 1e4 / 64.0) * (0.25 + 0.125))).sqrt();
        assert!(rel(e, want.min(0.125)) < 1e-12);
        assert!(rel(beta, 1.0 - 8.0 * e) < 1e-12);
    }

    #[test]
    fn byzsgdnm_bound_examples() {
        let p = BoundParams { delta: 0.0, ..unit(0.0, 1.0) };
        let (t, b): (f64, f64) = (1000.0, 32.0);
        let want = 6.0 * (5.0 / (t * b * 8.0)).powf(0.25) + 12.0 * (5.0 / t).sqrt() + 27.0 / (4.0 * (5.0 * t * b * b * 64.0f64).sqrt());
        assert!(rel(bound_byzsgdnm(t, b, &p).unwrap(), want) < 1e-12);

        let p = unit(0.375, 1.0);
        let k: f64 = (2.0 * 8.0 * 0.375 * 0.625f64).sqrt() + 1.0;
        let (t, b): (f64, f64) = (1e3, 256.0);
        let want = 6.0 * k.sqrt() * (5.0 / (t * b * 8.0 * 0.625)).powf(0.25)
            + 12.0 * (5.0 / t).sqrt()
            + 27.0 * k.powf(1.5) / (4.0 * (5.0 * t * b * b * 64.0 * 0.625 * 0.625f64).sqrt());
        assert!(rel(bound_byzsgdnm(t, b, &p).unwrap(), want) < 1e-12);

        for t in [10.0, 100.0, 1e4] {
            assert!(bound_byzsgdnm(2.0 * t, 8.0, &p).unwrap() < bound_byzsgdnm(t, 8.0, &p).unwrap());
        }
    }

    #[test]
    fn byzsgdnm_hyperparams() {
        let noiseless = BoundParams { sigma: 0.0, ..unit(0.125, 1.0) };
        let (a, e) = hyperparams_byzsgdnm(100.0, 4.0, &noiseless).unwrap();
        assert_eq!(a, 1.0);
        assert!(rel(e, (1.0 / 500.0f64).sqrt()) < 1e-15);
        let p = unit(0.125, 1.0);
        assert_eq!(hyperparams_byzsgdnm(1.0, 64.0, &p).unwrap().0, 1.0);
        let (a, e) = hyperparams_byzsgdnm(1e4, 64.0, &p).unwrap();
        let k = (2.0 * 8.0 * 0.125 * 0.875f64).sqrt() + 1.0;
        let want_a = ((80.0 * 64.0 * 8.0 * 0.875f64).sqrt() / (9.0 * k * 100.0)).min(1.0);
        assert!(rel(a, want_a) < 1e-12);
        assert!(rel(e, (want_a / 5e4).sqrt()) < 1e-12);
    }

    #[test]
    fn b_tilde_examples() {
        let p = unit(0.0, 1e6);
        assert!(rel(optimal_batch_byzsgdnm(&p).unwrap().batch, 9.0 / 640.0) < 1e-15);
        assert!(optimal_batch_byzsgdnm(&unit(0.375, 1e6)).unwrap().batch > optimal_batch_byzsgdnm(&unit(0.125, 1e6)).unwrap().batch);
        let p = BoundParams { sigma: 10.0, ..unit(0.25, 1e8) };
        let opt = optimal_batch_byzsgdnm(&p).unwrap();
        let numeric = numeric_argmin(|b| bound_byzsgdnm_at_budget(b, &p).unwrap(), ARGMIN_RANGE.0, ARGMIN_RANGE.1, ARGMIN_ITERS);
        assert!(rel(numeric, opt.batch) < 1e-6);
        assert!(rel(opt.bound, bound_byzsgdnm_at_budget(opt.batch, &p).unwrap()) < 1e-12);
    }

    #[test]
    fn convexity_examples() {
        let grid = log_grid(1.0, 1e5, 200);
        let r = convexity_check(&unit(0.125, 1e6), &grid).unwrap();
        assert!(r.all_positive && !r.boundary);
        let r = convexity_check(&unit(0.0, 1e6), &grid).unwrap();
        assert!(r.boundary);
        assert!(r.min_second_difference.abs() < 1e-12);
        assert!(convexity_check(&unit(0.1, 1e6), &[1.0, 2.0]).is_err());
    }

    #[test]
    fn plan_report_is_consistent() {
        let r = plan(&unit(0.125, 1e6)).unwrap();
        assert!(r.b_star.interior);
        assert!(r.byzsgdm_beta >= 0.0 && r.byzsgdm_beta < 1.0);
        assert!(r.byzsgdnm_beta >= 0.0 && r.byzsgdnm_beta < 1.0);
    }

    fn params() -> impl Strategy<Value = BoundParams> {
        (0.1f64..10.0, 0.1f64..10.0, 0.1f64..10.0, 0.1f64..4.0, 0.01f64..0.45, 2usize..64, 4.0f64..9.0).prop_map(
            |(l, s, f0, c, d, m, lc)| BoundParams { l_smooth: l, sigma: s, f0, c, delta: d, m, budget: 10f64.powf(lc) },
        )
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(40))]

        #[test]
        fn b_star_increasing_in_delta(p in params()) {
            let mut prev = 0.0;
            for i in 1..=50 {
                let q = BoundParams { delta: 0.45 * i as f64 / 51.0, ..p };
                let b = optimal_batch_byzsgdm(&q).unwrap().batch;
                prop_assert!(b > prev);
                prev = b;
            }
        }

        #[test]
        fn integer_batch_is_exhaustive_argmin(p in params()) {
            let q = BoundParams { budget: p.budget.min(1e6), ..p };
            let b = optimal_batch_byzsgdm(&q).unwrap().batch;
            let k = integer_batch(b, &q).unwrap();
            let uk = bound_byzsgdm_u(k as f64, &q).unwrap();
            for j in 1..=(2 * b.ceil() as usize + 10) {
                prop_assert!(uk <= bound_byzsgdm_u(j as f64, &q).unwrap() * (1.0 + 1e-12));
            }
        }

        #[test]
        fn first_optimum_term_homogeneous(p in params(), k in 0.1f64..10.0) {
            let a = u_at_optimum_terms(&p).unwrap()[0];
            let q = BoundParams { sigma: p.sigma * k, budget: p.budget * k * k, ..p };
            let b = u_at_optimum_terms(&q).unwrap()[0];
            prop_assert!(rel(a, b) < 1e-9);
        }

        #[test]
        fn recipe_substituted_into_generic_bound(p in params(), lt in 1.0f64..5.0, lb in 0.0f64..3.0) {
            let (t, b) = (10f64.powf(lt).round(), 10f64.powf(lb).round());
            let (alpha, eta) = hyperparams_byzsgdnm(t, b, &p).unwrap();
            let generic = generic_bound_byzsgdnm(t, b, eta, alpha, &p).unwrap();
            if alpha < 1.0 {
                let (l, f0, s2) = (p.l_smooth, p.f0, p.sigma * p.sigma);
                let sm = b * p.m as f64 * (1.0 - p.delta);
                let k = p.nm_factor();
                let direct = 12.0 * k.sqrt() * (5.0 * l * f0 * s2 / (t * sm)).powf(0.25)
                    + 81.0 * k * k * s2 / (4.0 * sm * (5.0 * l * f0 * t).sqrt());
                prop_assert!(rel(generic, direct) < 1e-9);
            }
            // The recipe's step size is optimal for its momentum weight.
            for k in log_grid(1e-2, 1e2, 41) {
                prop_assert!(generic_bound_byzsgdnm(t, b, eta * k, alpha, &p).unwrap() >= generic * (1.0 - 1e-12));
            }
        }
    }
}
