use serde::{Deserialize, Serialize};

use crate::core::{invalid, Result};

/// Concatenation width ℓ, table count L and exponent ρ.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LshParams {
    pub ell: usize,
    pub tables: usize,
    pub rho: f64,
}

/// ρ = ln p1 / ln p2, ℓ = ⌈log_{1/p2} m⌉ (at least 1), L = ⌈m^ρ⌉.
pub fn derive_params(m: usize, p1: f64, p2: f64) -> Result<LshParams> {
    if m == 0 {
        return invalid("m must be positive");
    }
    if !(0.0 < p2 && p2 < p1 && p1 < 1.0) {
        return invalid(format!("need 0 < p2 < p1 < 1, got p1={p1} p2={p2}"));
    }
    let rho = p1.ln() / p2.ln();
    let m = m as f64;
    let ell = ((m.ln() / (1.0 / p2).ln()).ceil() as usize).max(1);
    let tables = (m.powf(rho).ceil() as usize).max(1);
    Ok(LshParams { ell, tables, rho })
}
