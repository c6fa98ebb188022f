//! Closed-form fixation probabilities for two urns under `∞^i` weights.
//!
//! With `μ = p/(1-p)`, the fixation probability from `C1(ℓ)` is
//! `q_ℓ = A·λ₋^ℓ + C·μ^ℓ` and from `C2(ℓ)` it is
//! `r_ℓ = (1+p)/(2-p)·μ^ℓ`. `q_ℓ` are the Taylor coefficients of
//! `f(x) = A e^{λ₋x} + C e^{μx}`, the bounded solution of
//! `(1-p/2)² y'' - y' + (p/2)² y + p(1+p)/2 · e^{μx} = 0`.

use crate::error::{invalid, Result};

fn check_closed(p: f64) -> Result<()> {
    if !(0.0..=0.5).contains(&p) {
        return Err(invalid(format!("p must lie in [0, 1/2], got {p}")));
    }
    Ok(())
}

fn check_open(p: f64) -> Result<()> {
    if !(0.0..0.5).contains(&p) {
        return Err(invalid(format!("p must lie in [0, 1/2), got {p}")));
    }
    Ok(())
}

fn mu(p: f64) -> f64 {
    p / (1.0 - p)
}

/// Roots `(λ₋, λ₊)` of `(1-p/2)² λ² - λ + (p/2)² = 0`.
pub fn lambda_pm(p: f64) -> Result<(f64, f64)> {
    check_closed(p)?;
    let a = (1.0 - p / 2.0).powi(2);
    let disc = (1.0 - p * p * a).sqrt();
    Ok(((1.0 - disc) / (2.0 * a), (1.0 + disc) / (2.0 * a)))
}

/// Coefficient of the particular solution `C e^{μx}`.
pub fn c_of(p: f64) -> Result<f64> {
    check_closed(p)?;
    let den = 2.0 * p.powi(3) - 6.0 * p * p + 9.0 * p - 4.0;
    assert!(den < 0.0, "denominator vanishes at p = {p}");
    Ok(-2.0 * (1.0 - p).powi(2) * (1.0 + p) / den)
}

/// Coefficient of the bounded homogeneous solution `A e^{λ₋x}`.
pub fn a_of(p: f64) -> Result<f64> {
    let c = c_of(p)?;
    let (lm, _) = lambda_pm(p)?;
    Ok((1.0 - p + c * (3.0 * p - 2.0)) / ((1.0 - p) * (2.0 - lm)))
}

/// Probability that two initially empty urns fixate on the same color.
pub fn q0(p: f64) -> Result<f64> {
    Ok(a_of(p)? + c_of(p)?)
}

/// Fixation probability from `C1(ell)`.
pub fn q_ell(p: f64, ell: u32) -> Result<f64> {
    let (lm, _) = lambda_pm(p)?;
    let (a, c) = (a_of(p)?, c_of(p)?);
    let m = if p == 0.5 { 1.0 } else { mu(p) };
    Ok(a * lm.powi(ell as i32) + c * m.powi(ell as i32))
}

/// Fixation probability from `C2(ell)`.
pub fn r_ell(p: f64, ell: u32) -> Result<f64> {
    check_open(p)?;
    Ok((1.0 + p) / (2.0 - p) * mu(p).powi(ell as i32))
}

/// All closed-form quantities at one `p`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ClosedForm {
    pub p: f64,
    pub lambda_minus: f64,
    pub lambda_plus: f64,
    pub c: f64,
    pub a: f64,
    pub q0: f64,
}

impl ClosedForm {
    pub fn new(p: f64) -> Result<Self> {
        let (lambda_minus, lambda_plus) = lambda_pm(p)?;
        let c = c_of(p)?;
        let a = a_of(p)?;
        Ok(Self { p, lambda_minus, lambda_plus, c, a, q0: a + c })
    }
}

/// The exponential generating function `f(x) = Σ q_ℓ x^ℓ/ℓ!` and its first two derivatives.
pub fn f_p_derivatives(p: f64, x: f64) -> Result<[f64; 3]> {
    check_open(p)?;
    let (lm, _) = lambda_pm(p)?;
    let (a, c, m) = (a_of(p)?, c_of(p)?, mu(p));
    let (el, em) = ((lm * x).exp(), (m * x).exp());
    Ok([
        a * el + c * em,
        a * lm * el + c * m * em,
        a * lm * lm * el + c * m * m * em,
    ])
}

pub fn f_p_eval(p: f64, x: f64) -> Result<f64> {
    Ok(f_p_derivatives(p, x)?[0])
}

/// Left-hand side of the second-order ODE evaluated on the closed form.
pub fn ode_residual(p: f64, x: f64) -> Result<f64> {
    let [f, f1, f2] = f_p_derivatives(p, x)?;
    Ok((1.0 - p / 2.0).powi(2) * f2 - f1 + (p / 2.0).powi(2) * f + p * (1.0 + p) / 2.0 * (mu(p) * x).exp())
}

/// Checks `f(x) <= e^x` on the given points, the bound that rules out an
/// `e^{λ₊x}` component.
pub fn growth_bound_holds(p: f64, xs: &[f64]) -> Result<bool> {
    for &x in xs {
        if f_p_eval(p, x)? > x.exp() * (1.0 + 1e-12) {
            return Ok(false);
        }
    }
    Ok(true)
}

/// Probability that a non-conforming urn one ball short of the majority
/// color eventually conforms.
pub fn r1(p: f64) -> Result<f64> {
    check_open(p)?;
    Ok(p * (1.0 + p) / ((1.0 - p) * (2.0 - p)))
}

fn binomial_pmf(n: u32, prob: f64) -> Vec<f64> {
    let mut out = Vec::with_capacity(n as usize + 1);
    let mut coeff = 1.0;
    for k in 0..=n {
        if k > 0 {
            coeff *= (n - k + 1) as f64 / k as f64;
        }
        out.push(coeff * prob.powi(k as i32) * (1.0 - prob).powi((n - k) as i32));
    }
    out
}

/// Law of the number of non-conforming urns for an odd number of urns.
///
/// The first draws fix the majority color; each of the `M` minority urns
/// then escapes independently with probability `1 - r₁(p)`.
pub fn nonconformist_pmf(urns: u32, p: f64) -> Result<Vec<f64>> {
    if urns < 3 || urns.is_multiple_of(2) {
        return Err(invalid(format!("need an odd number of urns >= 3, got {urns}")));
    }
    let escape = 1.0 - r1(p)?;
    let half = (urns - 1) / 2;
    let first = binomial_pmf(urns, 0.5);
    let mut pmf = vec![0.0; half as usize + 1];
    for (k, pk) in first.iter().enumerate() {
        let m = (k as u32).min(urns - k as u32);
        for (n, pn) in binomial_pmf(m, escape).iter().enumerate() {
            pmf[n] += pk * pn;
        }
    }
    Ok(pmf)
}

/// Fixation probability of two urns with `colors` colors.
pub fn multicolor_q(colors: u32, p: f64) -> Result<f64> {
    if colors < 2 {
        return Err(invalid("need at least two colors"));
    }
    let c = colors as f64;
    Ok(1.0 / c + (c - 1.0) / c * q_ell(p, 1)?)
}

/// Largest argument for which the total-progeny generating function is real.
pub fn gw_nu0(p: f64) -> Result<f64> {
    if !(p > 0.0 && p < 0.5) {
        return Err(invalid(format!("p must lie in (0, 1/2), got {p}")));
    }
    Ok(1.0 / (4.0 * p * (1.0 - p)))
}

/// Generating function `E[ν^Z]` of the total progeny `Z` of a Galton–Watson
/// tree with geometric offspring `P(k) = (1-p) p^k`: the smallest root of
/// `g = ν(1-p) / (1 - p g)`.
pub fn gw_total_progeny_gf(p: f64, nu: f64) -> Result<f64> {
    let nu0 = gw_nu0(p)?;
    if !(0.0..=nu0).contains(&nu) {
        return Err(invalid(format!("nu must lie in [0, {nu0}], got {nu}")));
    }
    let disc = (1.0 - 4.0 * p * (1.0 - p) * nu).max(0.0);
    Ok((1.0 - disc.sqrt()) / (2.0 * p))
}
