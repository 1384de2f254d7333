//! The dual objective `J(Q) = ⟨Q, Σ⟩ - ∫ log(Ψ⁻¹ + Q)`, its Wirtinger
//! gradient and Hessian, and the primal spectrum it recovers.
//!
//! Every integral is a Riemann sum on the grid that carries `Ψ⁻¹`.

use faer::c64;

use crate::error::{Error, Result};
use crate::grid::{eval_trig_poly, fourier_coefficients, quadrature, GridFunction};
use crate::lattice::SymmetricMultisequence;
use crate::tbt::TbtGenerators;

/// `Ψ⁻¹ + Q` on the grid, or the infeasibility error carrying its minimum.
pub fn shifted_polynomial(
    q: &SymmetricMultisequence,
    psi_inv: &GridFunction,
) -> Result<GridFunction> {
    let p = eval_trig_poly(q, psi_inv.grid()).zip_with(psi_inv, |a, b| a + b)?;
    let min_value = p.min();
    if min_value.is_nan() || min_value <= 0.0 {
        return Err(Error::Infeasible { min_value });
    }
    Ok(p)
}

pub fn dual_objective(
    q: &SymmetricMultisequence,
    sigma: &SymmetricMultisequence,
    psi_inv: &GridFunction,
) -> Result<f64> {
    let p = shifted_polynomial(q, psi_inv)?;
    Ok(q.real_inner_product(sigma)? - quadrature(&p.map(f64::ln)))
}

/// `∂J/∂q_k = σ_{-k} - ∫ e^{-i⟨k,θ⟩} (Ψ⁻¹ + Q)⁻¹`.
///
/// In the real parametrization the derivative of `J` along a symmetric
/// direction `d` is `Σ_k d_k g_k`, see [`directional_derivative`].
pub fn dual_gradient(
    q: &SymmetricMultisequence,
    sigma: &SymmetricMultisequence,
    psi_inv: &GridFunction,
) -> Result<SymmetricMultisequence> {
    let p = shifted_polynomial(q, psi_inv)?;
    gradient_from(sigma, &p)
}

fn gradient_from(sigma: &SymmetricMultisequence, p: &GridFunction) -> Result<SymmetricMultisequence> {
    let s = *sigma.index_set();
    let moments = fourier_coefficients(&p.recip(), s.n1(), s.n2())?;
    // g_k = conj(σ_k - c_k) because both sequences are conjugate-symmetric
    let values = sigma
        .values()
        .iter()
        .zip(moments.values())
        .map(|(a, b)| (a - b).conj())
        .collect();
    let mut g = SymmetricMultisequence::from_values(s, values, f64::INFINITY)?;
    g.symmetrize();
    Ok(g)
}

/// Derivative of `t ↦ J(q + t d)` at `t = 0`: `Σ_k d_k g_k`.
pub fn directional_derivative(
    gradient: &SymmetricMultisequence,
    d: &SymmetricMultisequence,
) -> Result<f64> {
    d.real_inner_product(&gradient.conj())
}

/// `t ↦ J(q + t d) - J(q)` along a fixed direction, evaluated as
/// `t ⟨d, Σ⟩ - ∫ log(1 + t D / (Ψ⁻¹ + Q))` so that tiny decreases near the
/// optimum are not lost to cancellation.
#[derive(Debug, Clone)]
pub struct LineProbe {
    ratio: GridFunction,
    pairing: f64,
}

impl LineProbe {
    pub fn new(
        q: &SymmetricMultisequence,
        d: &SymmetricMultisequence,
        sigma: &SymmetricMultisequence,
        psi_inv: &GridFunction,
    ) -> Result<Self> {
        let p = shifted_polynomial(q, psi_inv)?;
        let ratio = eval_trig_poly(d, psi_inv.grid()).zip_with(&p, |dv, pv| dv / pv)?;
        Ok(LineProbe {
            ratio,
            pairing: d.real_inner_product(sigma)?,
        })
    }

    /// `J(q + t d) - J(q)`, or `None` when `q + t d` is infeasible.
    pub fn decrease(&self, t: f64) -> Option<f64> {
        let mut sum = 0.0;
        for &r in self.ratio.values() {
            let x = t * r;
            if x.is_nan() || x <= -1.0 {
                return None;
            }
            sum += x.ln_1p();
        }
        Some(t * self.pairing - sum / self.ratio.values().len() as f64)
    }
}

/// First block row of the Hessian, `h_{j,l} = ∫ e^{i⟨(j,l),θ⟩} (Ψ⁻¹ + Q)⁻²`,
/// from one FFT. The grid must resolve lags up to `(2 n1, 2 n2)`.
pub fn hessian_generators(
    q: &SymmetricMultisequence,
    psi_inv: &GridFunction,
) -> Result<TbtGenerators> {
    let s = q.index_set();
    psi_inv.grid().check_lags(2 * s.n1(), 2 * s.n2())?;
    let p = shifted_polynomial(q, psi_inv)?;
    generators_from(&p, s.n1(), s.n2())
}

fn generators_from(p: &GridFunction, n1: usize, n2: usize) -> Result<TbtGenerators> {
    let weight = p.map(|v| 1.0 / (v * v));
    TbtGenerators::from_lag_coefficients(&fourier_coefficients(&weight, 2 * n1, 2 * n2)?)
}

/// Gradient and Hessian generators sharing one evaluation of `Ψ⁻¹ + Q`.
pub fn gradient_and_generators(
    q: &SymmetricMultisequence,
    sigma: &SymmetricMultisequence,
    psi_inv: &GridFunction,
) -> Result<(SymmetricMultisequence, TbtGenerators)> {
    let s = q.index_set();
    psi_inv.grid().check_lags(2 * s.n1(), 2 * s.n2())?;
    let p = shifted_polynomial(q, psi_inv)?;
    Ok((gradient_from(sigma, &p)?, generators_from(&p, s.n1(), s.n2())?))
}

/// The estimated spectrum `Φ = (Ψ⁻¹ + Q)⁻¹`.
pub fn primal_recover(q: &SymmetricMultisequence, psi_inv: &GridFunction) -> Result<GridFunction> {
    Ok(shifted_polynomial(q, psi_inv)?.recip())
}

/// Itakura-Saito divergence `∫ log(Ψ/Φ) + (Φ - Ψ)/Ψ`.
pub fn is_divergence(phi: &GridFunction, psi: &GridFunction) -> Result<f64> {
    if !phi.is_strictly_positive() || !psi.is_strictly_positive() {
        return Err(Error::domain("both spectra must be strictly positive"));
    }
    let integrand = phi.zip_with(psi, |f, s| (s / f).ln() + (f - s) / s)?;
    Ok(quadrature(&integrand))
}

/// Moments `∫ e^{i⟨k,θ⟩} Φ` over the lag set of `sigma`, minus `sigma`;
/// zero at the dual optimum.
pub fn moment_residual(phi: &GridFunction, sigma: &SymmetricMultisequence) -> Result<f64> {
    let s = sigma.index_set();
    let moments = fourier_coefficients(phi, s.n1(), s.n2())?;
    Ok(sigma
        .values()
        .iter()
        .zip(moments.values())
        .map(|(a, b)| (a - b).norm())
        .fold(0.0, f64::max))
}

pub(crate) fn real(v: f64) -> c64 {
    c64::new(v, 0.0)
}
