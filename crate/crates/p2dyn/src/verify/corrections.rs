//! The correction terms `O₁(ε) … O₆(ε)` in closed form.
//!
//! Each `Oᵢ` is the gap between the exact bound and the `ε`-dependent
//! bound obtained by solving the corresponding inequality for the
//! dimension:
//!
//! * `(λ₁+4ε)(d_Z − d_ν + 2ε) + 8ε ≥ 2λ₁ − log d` gives `O₁`,
//! * `(λ₁+4ε)(d_W − d_ν + 2ε) + 8ε ≥ 2λ₂ − log d` gives `O₂`,
//! * `d_Z ≤ (log d + 2λ₁ + 3ε)/(λ₂ − 4ε)` gives `O₃`,
//! * `d_W ≤ (log d + 2λ₂ + 3ε)/(λ₂ − 4ε)` gives `O₄`,
//! * `d_Z ≥ 2 + (h − log d − 13ε)/(λ₁+4ε) − ε` gives `O₅`,
//! * `d_W ≥ 2λ₂/(λ₁+4ε) + (h − log d − 5ε)/(λ₁+4ε) − ε` gives `O₆`.

use serde::Serialize;

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Corrections {
    pub epsilon: f64,
    pub o1: f64,
    pub o2: f64,
    pub o3: f64,
    pub o4: f64,
    pub o5: f64,
    pub o6: f64,
}

/// `O₁ … O₆` at `ε` for exponents `λ₁ ≥ λ₂ > 0`, entropy `h` and degree `d`.
pub fn epsilon_corrections(eps: f64, lambda1: f64, lambda2: f64, h: f64, d: u32) -> Result<Corrections> {
    if !(eps > 0.0) {
        return Err(Error::Domain(format!("ε must be positive, got {eps}")));
    }
    if !(lambda2 > 0.0) || lambda1 < lambda2 {
        return Err(Error::Domain(format!("need λ₁ ≥ λ₂ > 0, got {lambda1}, {lambda2}")));
    }
    if lambda2 <= 4.0 * eps {
        return Err(Error::Domain(format!("λ₂ = {lambda2} ≤ 4ε = {}", 4.0 * eps)));
    }
    let ld = (d as f64).ln();
    let (l1, l2) = (lambda1, lambda2);
    let a = l1 + 4.0 * eps;
    let o1 = (2.0 - ld / l1) - ((2.0 * l1 - ld - 8.0 * eps) / a - 2.0 * eps);
    let o2 = (2.0 * l2 / l1 - ld / l1) - ((2.0 * l2 - ld - 8.0 * eps) / a - 2.0 * eps);
    let o3 = (ld + 2.0 * l1 + 3.0 * eps) / (l2 - 4.0 * eps) - (ld + 2.0 * l1) / l2;
    let o4 = (ld + 2.0 * l2 + 3.0 * eps) / (l2 - 4.0 * eps) - (ld / l2 + 2.0);
    let o5 = (2.0 + (h - ld) / l1) - (2.0 + (h - ld - 13.0 * eps) / a - eps);
    let o6 = (2.0 * l2 / l1 + (h - ld) / l1) - (2.0 * l2 / a + (h - ld - 5.0 * eps) / a - eps);
    Ok(Corrections { epsilon: eps, o1, o2, o3, o4, o5, o6 })
}

/// `ε = 3·(max exponent stderr + 0.02)`.
pub fn epsilon_policy(max_stderr: f64) -> f64 {
    3.0 * (max_stderr + 0.02)
}
