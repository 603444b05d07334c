//! Lorentzian zero-temperature bath and its two-exponential decomposition.

use std::f64::consts::PI;

use num_complex::Complex64 as C64;

use crate::error::{Error, Result};
use crate::operator::Mat2;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BathSpec {
    /// overall coupling strength γ (the integrated spectral weight)
    pub gamma: f64,
    /// Lorentzian half-width λ; the bath memory time is ~1/λ
    pub lambda: f64,
    pub omega_c: f64,
    pub g_z: f64,
    pub g_x: f64,
}

impl Default for BathSpec {
    fn default() -> Self {
        Self {
            gamma: 0.0,
            lambda: 0.5,
            omega_c: 0.5,
            g_z: 0.0,
            g_x: 0.5,
        }
    }
}

impl BathSpec {
    /// Transversal coupling (`g_z = 0`, `g_x = 1/2`).
    pub fn transversal(gamma: f64, lambda: f64, omega_c: f64) -> Self {
        Self {
            gamma,
            lambda,
            omega_c,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.gamma >= 0.0 && self.gamma.is_finite()) {
            return Err(Error::param("gamma", format!("must be >= 0, got {}", self.gamma)));
        }
        if !(self.lambda > 0.0 && self.lambda.is_finite()) {
            return Err(Error::param("lambda", format!("must be > 0, got {}", self.lambda)));
        }
        for (name, v) in [("omega_c", self.omega_c), ("gz", self.g_z), ("gx", self.g_x)] {
            if !v.is_finite() {
                return Err(Error::param("bath", format!("{name} is not finite")));
            }
        }
        Ok(())
    }

    /// System side of the coupling, `V = g_z σz + g_x σx`.
    pub fn coupling_operator(&self) -> Mat2 {
        Mat2::pauli(self.g_x, 0.0, self.g_z)
    }
}

/// `J(ω) = (1/π) γλ / ((ω − ω_c)² + λ²)`.
pub fn spectral_density(omega: f64, spec: &BathSpec) -> f64 {
    let d = omega - spec.omega_c;
    spec.gamma * spec.lambda / (PI * (d * d + spec.lambda * spec.lambda))
}

/// `C(t) = γ exp[−(λ + iω_c) t]` for `t ≥ 0`.
pub fn correlation(t: f64, spec: &BathSpec) -> Result<C64> {
    if !(t >= 0.0) {
        return Err(Error::param("t", format!("correlation needs t >= 0, got {t}")));
    }
    let (s, c) = (spec.omega_c * t).sin_cos();
    Ok(C64::new(c, -s) * (spec.gamma * (-spec.lambda * t).exp()))
}

/// `C(t) = Σ_k (γ/2) e^{−ν_k t} [1 + (−1)^k]` split into real and imaginary
/// parts, with `ν = (λ − iω_c, λ + iω_c)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExponentialDecomposition {
    pub nu: [C64; 2],
    /// coefficients of `C^R(t) = Σ_k cR_k e^{−ν_k t}`
    pub c_re: [f64; 2],
    /// `(−1)^k γ/2`; `C^I(t) = Σ_k (cI_k / i) e^{−ν_k t}`
    pub c_im: [f64; 2],
}

impl ExponentialDecomposition {
    pub fn real_part(&self, t: f64) -> C64 {
        (0..2).map(|k| self.c_re[k] * (-self.nu[k] * t).exp()).sum()
    }

    pub fn imag_part(&self, t: f64) -> C64 {
        let minus_i = C64::new(0.0, -1.0);
        (0..2)
            .map(|k| minus_i * self.c_im[k] * (-self.nu[k] * t).exp())
            .sum()
    }

    /// `C^R(t) + i C^I(t)`
    pub fn reconstruct(&self, t: f64) -> C64 {
        self.real_part(t) + C64::new(0.0, 1.0) * self.imag_part(t)
    }
}

pub fn decompose(spec: &BathSpec) -> ExponentialDecomposition {
    let half = 0.5 * spec.gamma;
    ExponentialDecomposition {
        nu: [
            C64::new(spec.lambda, -spec.omega_c),
            C64::new(spec.lambda, spec.omega_c),
        ],
        c_re: [half, half],
        c_im: [-half, half],
    }
}
