use num_rational::Ratio;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::kvgame::KV_CONSTANTS;

/// (C′/C)/25, the constant of the five-copy lower bound.
pub const C_DOUBLE_PRIME: f64 = KV_CONSTANTS.c_prime / KV_CONSTANTS.c / 25.0;

/// A bound D·factor + offset with the universal constant D left unevaluated.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SymbolicBound {
    pub formula: String,
    /// Coefficient of D.
    pub factor: f64,
    pub offset: f64,
}

fn check_base(d: f64) -> Result<()> {
    if d.is_finite() && d >= 2.0 {
        Ok(())
    } else {
        Err(Error::invalid(format!("dimension d = {d} must be at least 2")))
    }
}

fn check_alpha_open_half(alpha: f64) -> Result<()> {
    if alpha > 0.0 && alpha < 0.5 {
        Ok(())
    } else {
        Err(Error::invalid(format!("α = {alpha} must lie in (0, 1/2)")))
    }
}

/// ln of (C′/C)·α^k/(k ln d)².
fn log_ratio_bound(d: f64, k: u64, alpha: f64) -> f64 {
    let kk = k as f64;
    (KV_CONSTANTS.c_prime / KV_CONSTANTS.c).ln() + kk * alpha.ln() - 2.0 * (kk * d.ln()).ln()
}

/// (C′/C)·α^k/(k ln d)², the lower bound on ⟨G_KV,Q⟩/(C/d^k) for k copies
/// of the isotropic state with weight p = α/d.
///
/// Evaluated in the log domain; large k may return +∞.
pub fn superactivation_ratio_bound(d: usize, k: u64, alpha: f64) -> Result<f64> {
    check_base(d as f64)?;
    if k == 0 {
        return Err(Error::invalid("k must be at least 1"));
    }
    if !(alpha > 0.0 && alpha.is_finite()) {
        return Err(Error::invalid(format!("α = {alpha} must be positive")));
    }
    Ok(log_ratio_bound(d as f64, k, alpha).exp())
}

/// Smallest k ≤ `k_limit` with bound(k) > 1.
pub fn first_crossing(d: usize, alpha: f64, k_limit: u64) -> Result<Option<u64>> {
    superactivation_ratio_bound(d, 1, alpha)?;
    Ok((1..=k_limit).find(|&k| log_ratio_bound(d as f64, k, alpha) > 0.0))
}

/// p = (ln d)^{1/2−α}/d.
pub fn almost_activation_weight(d: f64, alpha: f64) -> Result<f64> {
    check_base(d)?;
    check_alpha_open_half(alpha)?;
    let p = d.ln().powf(0.5 - alpha) / d;
    if p > 1.0 {
        return Err(Error::invalid(format!("weight (ln d)^(1/2-α)/d = {p} exceeds 1 at d = {d}")));
    }
    Ok(p)
}

/// 1/2 − 5α, exactly.
pub fn almost_activation_exponent(alpha: Ratio<i64>) -> Result<Ratio<i64>> {
    let half = Ratio::new(1, 2);
    if alpha <= Ratio::from_integer(0) || alpha >= half {
        return Err(Error::invalid(format!("α = {alpha} must lie in (0, 1/2)")));
    }
    Ok(half - alpha * 5)
}

/// C″·(ln d)^{1/2−5α}, the lower bound on LV of five copies.
pub fn almost_activation_lower_factor(d: f64, alpha: f64) -> Result<f64> {
    check_base(d)?;
    check_alpha_open_half(alpha)?;
    Ok(C_DOUBLE_PRIME * d.ln().powf(0.5 - 5.0 * alpha))
}

/// Smallest ln d at which the lower factor exceeds `delta`; `None` unless
/// the exponent is positive.
pub fn almost_activation_threshold_ln_d(delta: f64, alpha: f64) -> Result<Option<f64>> {
    check_alpha_open_half(alpha)?;
    if !(delta > 0.0 && delta.is_finite()) {
        return Err(Error::invalid(format!("δ = {delta} must be positive")));
    }
    let e = 0.5 - 5.0 * alpha;
    if e <= 0.0 {
        return Ok(None);
    }
    // ln d must also be at least ln 2 for the formula to apply.
    Ok(Some((delta / C_DOUBLE_PRIME).powf(1.0 / e).max(2f64.ln())))
}

/// LV of the MES in dimension d is at most D·d/√(ln d).
pub fn lv_mes_upper_bound_symbolic(d: f64) -> Result<SymbolicBound> {
    check_base(d)?;
    Ok(SymbolicBound { formula: "D·d/√(ln d)".into(), factor: d / d.ln().sqrt(), offset: 0.0 })
}

/// LV of the almost-local state is at most D·(ln d)^{−α} + 1.
pub fn lv_tensor_upper_bound_symbolic(d: f64, alpha: f64) -> Result<SymbolicBound> {
    check_base(d)?;
    check_alpha_open_half(alpha)?;
    Ok(SymbolicBound { formula: "D·(ln d)^(-α) + 1".into(), factor: d.ln().powf(-alpha), offset: 1.0 })
}
