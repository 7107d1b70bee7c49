//! Fundamental-soliton baselines in closed form.
//!
//! On an anomalous-dispersion Kerr fibre the fundamental soliton
//! `q(t) = A·sech(t/T₀)` with `T₀ = √(|β₂|/γ)/A` propagates without
//! envelope change (lossless case). Its energy is `E = 2A·√(|β₂|/γ)`, and
//! because `sech²` also describes its energy spectrum, the ε-effective
//! duration and bandwidth have the closed forms
//!
//! ```text
//! T_s = T₀·Λ,    W_s = Λ/(π²·T₀),    Λ = ln((2 − ε)/ε),
//! ```
//!
//! giving the energy-independent time–bandwidth product `T_s·W_s = Λ²/π²`.
//! Requiring `W_s ≤ W` bounds the soliton energy by
//! `E_max = 2π²·|β₂|·W/(γ·Λ)`, and spacing energy-modulation levels by
//! quadratic steps up to `E_max` bounds the achievable bit rate of a
//! soliton energy-modulation link (see [`soliton_em_rate_bound`]).

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::propagator::FiberParams;
use crate::signal::{SampledSignal, TimeGrid};

fn check_eps(eps: f64) -> Result<f64> {
    if !(eps.is_finite() && eps > 0.0 && eps < 1.0) {
        return Err(Error::InvalidParameter(format!(
            "eps must lie strictly between 0 and 1, got {eps}"
        )));
    }
    Ok(((2.0 - eps) / eps).ln())
}

fn check_kerr(fiber: &FiberParams) -> Result<()> {
    if fiber.gamma_per_w_km() <= 0.0 {
        return Err(Error::InvalidParameter(
            "soliton formulas need a Kerr coefficient gamma > 0".into(),
        ));
    }
    Ok(())
}

/// The duration/bandwidth log factor `Λ(ε) = ln((2 − ε)/ε)`.
pub fn duration_log_factor(eps: f64) -> Result<f64> {
    check_eps(eps)
}

/// Soliton amplitude `A` (in `√W`) whose energy is `energy` joules:
/// `A = (E/2)·√(γ/|β₂|)`.
pub fn soliton_amplitude_for_energy(energy: f64, fiber: &FiberParams) -> Result<f64> {
    check_kerr(fiber)?;
    if !(energy.is_finite() && energy > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "soliton energy must be positive, got {energy}"
        )));
    }
    Ok(0.5 * energy * (fiber.gamma_per_w_m() / fiber.beta2_s2_per_m().abs()).sqrt())
}

/// Energy in joules of the soliton with amplitude `A`: `E = 2A·√(|β₂|/γ)`.
pub fn soliton_energy(amplitude: f64, fiber: &FiberParams) -> Result<f64> {
    check_kerr(fiber)?;
    if !(amplitude.is_finite() && amplitude > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "soliton amplitude must be positive, got {amplitude}"
        )));
    }
    Ok(2.0 * amplitude * (fiber.beta2_s2_per_m().abs() / fiber.gamma_per_w_m()).sqrt())
}

/// Soliton time scale `T₀ = √(|β₂|/γ)/A` in seconds.
pub fn soliton_t0(amplitude: f64, fiber: &FiberParams) -> Result<f64> {
    check_kerr(fiber)?;
    if !(amplitude.is_finite() && amplitude > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "soliton amplitude must be positive, got {amplitude}"
        )));
    }
    Ok((fiber.beta2_s2_per_m().abs() / fiber.gamma_per_w_m()).sqrt() / amplitude)
}

/// ε-effective duration `T_s = T₀·Λ` of the soliton with amplitude `A`.
pub fn soliton_duration(amplitude: f64, fiber: &FiberParams, eps: f64) -> Result<f64> {
    let log_factor = check_eps(eps)?;
    Ok(soliton_t0(amplitude, fiber)? * log_factor)
}

/// ε-effective (full) bandwidth `W_s = Λ/(π²·T₀)` in hertz.
pub fn soliton_bandwidth(amplitude: f64, fiber: &FiberParams, eps: f64) -> Result<f64> {
    let log_factor = check_eps(eps)?;
    let pi2 = std::f64::consts::PI * std::f64::consts::PI;
    Ok(log_factor / (pi2 * soliton_t0(amplitude, fiber)?))
}

/// Energy-independent soliton time–bandwidth product `Λ²/π²`.
pub fn soliton_tbp(eps: f64) -> Result<f64> {
    let log_factor = check_eps(eps)?;
    let pi2 = std::f64::consts::PI * std::f64::consts::PI;
    Ok(log_factor * log_factor / pi2)
}

/// Largest soliton energy whose ε-effective bandwidth stays within `w_full`
/// hertz (full width): `E_max = 2π²·|β₂|·w_full/(γ·Λ)`.
pub fn max_soliton_energy(w_full: f64, eps: f64, fiber: &FiberParams) -> Result<f64> {
    check_kerr(fiber)?;
    let log_factor = check_eps(eps)?;
    if !(w_full.is_finite() && w_full > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "bandwidth limit must be positive, got {w_full}"
        )));
    }
    let pi2 = std::f64::consts::PI * std::f64::consts::PI;
    Ok(2.0 * pi2 * fiber.beta2_s2_per_m().abs() * w_full
        / (fiber.gamma_per_w_m() * log_factor))
}

/// Soliton of the given energy truncated to its ε-effective duration: the
/// envelope `A·sech(t/T₀)` zeroed outside `[−T_s/2, T_s/2]`. The truncation
/// removes exactly the ε energy fraction (up to sampling), so the result
/// carries `(1 − ε)·energy`.
///
/// Fails when the support does not fit the central half of the grid.
pub fn truncated_soliton(
    energy: f64,
    eps: f64,
    fiber: &FiberParams,
    grid: TimeGrid,
) -> Result<SampledSignal> {
    check_eps(eps)?;
    let a = soliton_amplitude_for_energy(energy, fiber)?;
    let t0 = soliton_t0(a, fiber)?;
    let t_s = soliton_duration(a, fiber, eps)?;
    if t_s > grid.window() / 2.0 {
        return Err(Error::GridOverflow(format!(
            "soliton duration {:.3e} s exceeds half the window {:.3e} s",
            t_s,
            grid.window()
        )));
    }
    SampledSignal::from_fn(grid, |t| {
        if t.abs() <= t_s / 2.0 {
            Complex64::new(a / (t / t0).cosh(), 0.0)
        } else {
            Complex64::new(0.0, 0.0)
        }
    })
}

/// Bit-rate bound in bit/s for an `M`-ary soliton energy-modulation link
/// whose levels are quadratically spaced up to the bandwidth-limited soliton
/// energy: `π²·w_full·log₂(M)/((M − 1)²·Λ²)`. `M` must be a power of two,
/// at least 2.
pub fn soliton_em_rate_bound(m: u32, w_full: f64, eps: f64) -> Result<f64> {
    let log_factor = check_eps(eps)?;
    if m < 2 || !m.is_power_of_two() {
        return Err(Error::InvalidParameter(format!(
            "modulation order must be a power of two >= 2, got {m}"
        )));
    }
    if !(w_full.is_finite() && w_full > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "bandwidth limit must be positive, got {w_full}"
        )));
    }
    let pi2 = std::f64::consts::PI * std::f64::consts::PI;
    let bits = (m as f64).log2();
    Ok(pi2 * w_full * bits / (((m - 1) as f64).powi(2) * log_factor * log_factor))
}
