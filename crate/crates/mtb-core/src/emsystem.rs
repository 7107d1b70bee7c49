//! Energy-modulation link construction and evaluation.
//!
//! An [`EmScheme`] carries everything needed to run an `M`-ary
//! energy-modulation link over one fibre: the quadratically spaced energy
//! levels ([`energy_levels`]), one pulse per nonzero level, the measured
//! transmit/receive effective durations and bandwidths, the modulation
//! interval `T` (the slot length, lower-bounded by every duration), and the
//! occupied bandwidth `W` (the largest effective bandwidth). Rates follow
//! from these: `R = log2(M)/T`, spectral efficiency `R/W`, time-bandwidth
//! product `W·T`.
//!
//! Two families of schemes are provided. [`truncated_soliton_scheme`] uses
//! energy-scaled truncated fundamental solitons, whose transmit durations
//! follow the closed form (duration inversely proportional to energy);
//! [`best_truncated_soliton_scheme`] sweeps the top energy level over a
//! grid and returns the rate-maximising scheme. [`mtb_scheme`] assembles a
//! scheme from externally optimised minimum-time-broadening designs, and
//! [`best_mtb_operating_point`] performs the same top-level sweep on a
//! precomputed duration-vs-energy curve ([`DurationCurve`]) so the sweep
//! does not re-run any fixed-point searches.
//!
//! [`modulate`] builds a slot-aligned pulse train, [`detect`] maps per-slot
//! received energies to the nearest level (ties to the lower level), and
//! [`evaluate_link`] runs the whole chain — modulate, propagate, re-amplify
//! on lossy fibres, detect — and reports symbol errors, per-slot energy
//! leakage, and the rate figures.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::optimizer::DesignResult;
use crate::propagator::{self, FiberParams, SsfmConfig};
use crate::signal::{self, SampledSignal, TimeGrid};
use crate::soliton;

/// Relative plateau within which a higher top energy level is preferred
/// when sweeping for the rate-maximising scheme: duration measurements
/// carry sub-percent noise, and ties at the band limit should resolve to
/// the band-filling operating point.
const RATE_PLATEAU: f64 = 1e-2;

fn check_levels(m: usize) -> Result<()> {
    if m < 2 || !m.is_power_of_two() {
        return Err(Error::InvalidParameter(format!(
            "modulation order must be a power of two >= 2, got {m}"
        )));
    }
    Ok(())
}

/// Quadratically spaced energy levels `E_m = ((m−1)/(M−1))²·e_max` for
/// `m = 1..=M`; level 1 is exactly zero.
pub fn energy_levels(m: usize, e_max: f64) -> Result<Vec<f64>> {
    check_levels(m)?;
    if !(e_max.is_finite() && e_max > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "top energy level must be positive, got {e_max}"
        )));
    }
    let denom = (m - 1) as f64;
    Ok((0..m)
        .map(|idx| (idx as f64 / denom).powi(2) * e_max)
        .collect())
}

/// The modulation interval: the largest transmit or received effective
/// duration over all nonzero levels.
pub fn modulation_interval(tx_durations: &[f64], rx_durations: &[f64]) -> Result<f64> {
    if tx_durations.is_empty() || rx_durations.is_empty() {
        return Err(Error::InvalidParameter(
            "duration lists must be nonempty".into(),
        ));
    }
    let all = tx_durations.iter().chain(rx_durations);
    let mut t_mod = 0.0f64;
    for &d in all {
        if !(d.is_finite() && d > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "durations must be positive, got {d}"
            )));
        }
        t_mod = t_mod.max(d);
    }
    Ok(t_mod)
}

/// Transmission rate `log2(M)/T` in bit/s.
pub fn transmission_rate(m: usize, t_mod: f64) -> Result<f64> {
    check_levels(m)?;
    if !(t_mod.is_finite() && t_mod > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "modulation interval must be positive, got {t_mod}"
        )));
    }
    Ok((m as f64).log2() / t_mod)
}

/// Spectral efficiency `log2(M)/(W·T)` in bit/s/Hz.
pub fn spectral_efficiency(m: usize, t_mod: f64, w_eff: f64) -> Result<f64> {
    if !(w_eff.is_finite() && w_eff > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "occupied bandwidth must be positive, got {w_eff}"
        )));
    }
    Ok(transmission_rate(m, t_mod)? / w_eff)
}

/// Time-bandwidth product `W·T` (dimensionless).
pub fn time_bandwidth_product(t_mod: f64, w_eff: f64) -> Result<f64> {
    if !(t_mod.is_finite() && t_mod > 0.0 && w_eff.is_finite() && w_eff > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "need positive interval and bandwidth, got {t_mod} s and {w_eff} Hz"
        )));
    }
    Ok(t_mod * w_eff)
}

/// A complete `M`-ary energy-modulation scheme over one fibre.
#[derive(Debug, Clone)]
pub struct EmScheme {
    /// Modulation order `M` (power of two ≥ 2).
    pub m_levels: usize,
    /// Top energy level in joules.
    pub e_max: f64,
    /// Energy fraction tolerance used for all effective-width measures.
    pub eps: f64,
    /// All `M` energy levels in joules (level 1 is zero).
    pub energies: Vec<f64>,
    /// One transmit pulse per nonzero level (level `m` at index `m − 2`),
    /// all on one common grid, each centred at the grid midpoint.
    pub pulses: Vec<SampledSignal>,
    /// Transmit durations in seconds per nonzero level: the time limit the
    /// pulse is confined to.
    pub tx_durations: Vec<f64>,
    /// Received effective durations in seconds per nonzero level (after
    /// propagation and, on lossy fibres, re-amplification).
    pub rx_durations: Vec<f64>,
    /// Transmit effective bandwidths in hertz per nonzero level.
    pub tx_bandwidths: Vec<f64>,
    /// Received effective bandwidths in hertz per nonzero level.
    pub rx_bandwidths: Vec<f64>,
    /// Modulation interval in seconds (max of all durations).
    pub t_mod: f64,
    /// Occupied bandwidth in hertz (max of all effective bandwidths).
    pub w_eff: f64,
}

impl EmScheme {
    /// Transmission rate `log2(M)/T` in bit/s.
    pub fn transmission_rate(&self) -> f64 {
        (self.m_levels as f64).log2() / self.t_mod
    }

    /// Spectral efficiency `log2(M)/(W·T)` in bit/s/Hz.
    pub fn spectral_efficiency(&self) -> f64 {
        self.transmission_rate() / self.w_eff
    }

    /// Time-bandwidth product `W·T`.
    pub fn time_bandwidth_product(&self) -> f64 {
        self.t_mod * self.w_eff
    }

    fn validate(&self) -> Result<()> {
        check_levels(self.m_levels)?;
        let n_pulses = self.m_levels - 1;
        if self.pulses.len() != n_pulses
            || self.energies.len() != self.m_levels
            || self.tx_durations.len() != n_pulses
            || self.rx_durations.len() != n_pulses
        {
            return Err(Error::ShapeMismatch(format!(
                "scheme for M = {} has inconsistent level vectors",
                self.m_levels
            )));
        }
        if !(self.t_mod.is_finite() && self.t_mod > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "modulation interval must be positive, got {}",
                self.t_mod
            )));
        }
        let grid = self.pulses[0].grid();
        if self.pulses.iter().any(|p| p.grid() != grid) {
            return Err(Error::ShapeMismatch(
                "scheme pulses must share one grid".into(),
            ));
        }
        Ok(())
    }
}

/// Measurement outcome for one pulse sent through the channel.
struct LevelMetrics {
    rx_duration: f64,
    tx_bandwidth: f64,
    rx_bandwidth: f64,
}

/// Propagates one pulse (re-amplifying on lossy fibres) and measures the
/// received effective duration and both effective bandwidths.
fn measure_level(
    pulse: &SampledSignal,
    eps: f64,
    fiber: &FiberParams,
    cfg: &SsfmConfig,
) -> Result<LevelMetrics> {
    let tx_bandwidth = signal::effective_bandwidth(pulse, eps)?;
    let mut received = propagator::propagate(pulse, fiber, cfg)?;
    if fiber.alpha_db_per_km() > 0.0 {
        received = propagator::amplify_to_energy(&received, signal::energy(pulse))?;
    }
    Ok(LevelMetrics {
        rx_duration: signal::effective_duration(&received, eps)?,
        tx_bandwidth,
        rx_bandwidth: signal::effective_bandwidth(&received, eps)?,
    })
}

/// Grid on which a soliton scheme's pulses are measured: fine sampling
/// (sixteen points per band period) and a window that keeps the longest
/// pulse plus its dispersive spread inside the central half.
fn soliton_measure_grid(
    longest_duration: f64,
    w_max: f64,
    fiber: &FiberParams,
) -> Result<TimeGrid> {
    let dt = 1.0 / (16.0 * w_max);
    let spread = fiber.beta2_s2_per_m().abs()
        * (2.0 * std::f64::consts::PI * w_max)
        * fiber.length_m();
    let half_window = 2.2 * (longest_duration / 2.0 + spread);
    let n = ((2.0 * half_window / dt).ceil() as usize)
        .next_power_of_two()
        .max(64);
    TimeGrid::new(n, dt)
}

/// Compact storage grid for scheme pulses (eight points per band period,
/// window just covering the modulation interval).
fn scheme_storage_grid(t_mod: f64, w_max: f64) -> Result<TimeGrid> {
    let dt = 1.0 / (8.0 * w_max);
    let n = ((1.5 * t_mod / dt).ceil() as usize).next_power_of_two().max(64);
    TimeGrid::new(n, dt)
}

/// Builds the `M`-ary truncated-soliton scheme with top level `e_max`.
///
/// Transmit durations use the closed-form soliton duration (inversely
/// proportional to energy); received durations and all bandwidths are
/// measured by propagating each level's pulse. Fails when the soliton at
/// `e_max` exceeds the band (its closed-form bandwidth above `w_max`).
pub fn truncated_soliton_scheme(
    m: usize,
    e_max: f64,
    w_max: f64,
    eps: f64,
    fiber: &FiberParams,
    cfg: &SsfmConfig,
) -> Result<EmScheme> {
    check_levels(m)?;
    if !(w_max.is_finite() && w_max > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "band limit must be positive, got {w_max}"
        )));
    }
    let e_cap = soliton::max_soliton_energy(w_max, eps, fiber)?;
    if e_max > e_cap * (1.0 + 1e-9) {
        return Err(Error::InvalidParameter(format!(
            "top level {e_max} J exceeds the {e_cap:.6e} J soliton energy limit of a {:.3e} Hz band",
            w_max
        )));
    }
    let energies = energy_levels(m, e_max)?;

    // Closed-form transmit durations; the longest belongs to level 2.
    let mut tx_durations = Vec::with_capacity(m - 1);
    for &e in &energies[1..] {
        let a = soliton::soliton_amplitude_for_energy(e, fiber)?;
        tx_durations.push(soliton::soliton_duration(a, fiber, eps)?);
    }
    let longest = tx_durations.iter().cloned().fold(0.0f64, f64::max);

    // Measure each level on a fine common grid.
    let measure_grid = soliton_measure_grid(longest, w_max, fiber)?;
    let mut rx_durations = Vec::with_capacity(m - 1);
    let mut tx_bandwidths = Vec::with_capacity(m - 1);
    let mut rx_bandwidths = Vec::with_capacity(m - 1);
    for &e in &energies[1..] {
        let pulse = soliton::truncated_soliton(e, eps, fiber, measure_grid)?;
        let metrics = measure_level(&pulse, eps, fiber, cfg)?;
        rx_durations.push(metrics.rx_duration);
        tx_bandwidths.push(metrics.tx_bandwidth);
        rx_bandwidths.push(metrics.rx_bandwidth);
    }

    let t_mod = modulation_interval(&tx_durations, &rx_durations)?;
    let w_eff = tx_bandwidths
        .iter()
        .chain(&rx_bandwidths)
        .cloned()
        .fold(0.0f64, f64::max);

    // Store the pulses compactly for train assembly.
    let storage_grid = scheme_storage_grid(t_mod, w_max)?;
    let pulses = energies[1..]
        .iter()
        .map(|&e| soliton::truncated_soliton(e, eps, fiber, storage_grid))
        .collect::<Result<Vec<_>>>()?;

    let scheme = EmScheme {
        m_levels: m,
        e_max,
        eps,
        energies,
        pulses,
        tx_durations,
        rx_durations,
        tx_bandwidths,
        rx_bandwidths,
        t_mod,
        w_eff,
    };
    scheme.validate()?;
    Ok(scheme)
}

/// One row of a truncated-soliton broadening sweep: closed-form transmit
/// duration and measured received duration at one energy.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BroadeningRow {
    /// Pulse energy in joules.
    pub energy: f64,
    /// Closed-form transmit duration in seconds.
    pub tx_duration: f64,
    /// Received effective duration in seconds (after re-amplification on
    /// lossy fibres).
    pub rx_duration: f64,
}

/// Measures how truncated solitons broaden through one fibre. Each energy's
/// pulse is built on its own adequate grid, propagated (and re-amplified on
/// lossy fibres), and its received effective duration measured. Returns one
/// row per energy, in input order.
pub fn soliton_broadening_sweep(
    energies: &[f64],
    w_max: f64,
    eps: f64,
    fiber: &FiberParams,
    cfg: &SsfmConfig,
) -> Result<Vec<BroadeningRow>> {
    let mut rows = Vec::with_capacity(energies.len());
    for &e in energies {
        let a = soliton::soliton_amplitude_for_energy(e, fiber)?;
        let tx_duration = soliton::soliton_duration(a, fiber, eps)?;
        let grid = soliton_measure_grid(tx_duration, w_max, fiber)?;
        let pulse = soliton::truncated_soliton(e, eps, fiber, grid)?;
        let metrics = measure_level(&pulse, eps, fiber, cfg)?;
        rows.push(BroadeningRow {
            energy: e,
            tx_duration,
            rx_duration: metrics.rx_duration,
        });
    }
    Ok(rows)
}

/// One row of a top-level sweep: candidate energy, modulation interval,
/// and rate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SweepRow {
    /// Candidate top energy level in joules.
    pub e_max: f64,
    /// Resulting modulation interval in seconds.
    pub t_mod: f64,
    /// Resulting transmission rate in bit/s.
    pub rate: f64,
    /// Whether the candidate was fully constructed and measured. `false`
    /// means the candidate was ruled out from its transmit durations alone;
    /// `t_mod` then holds the transmit floor and `rate` the corresponding
    /// upper bound.
    pub evaluated: bool,
}

/// The default top-level sweep grid: 0.1 pJ steps up to 1.8 pJ, plus the
/// exact soliton energy limit of the band when it lies above the grid.
pub fn default_energy_sweep(w_max: f64, eps: f64, fiber: &FiberParams) -> Result<Vec<f64>> {
    let mut grid: Vec<f64> = (1..=18).map(|k| k as f64 * 0.1e-12).collect();
    if fiber.gamma_per_w_km() > 0.0 {
        let e_cap = soliton::max_soliton_energy(w_max, eps, fiber)?;
        if e_cap > *grid.last().unwrap() {
            grid.push(e_cap);
        } else {
            grid.retain(|&e| e <= e_cap);
            grid.push(e_cap);
        }
    }
    Ok(grid)
}

/// Picks the row maximising the rate, resolving near-ties (within
/// [`RATE_PLATEAU`] relative) toward the highest energy.
fn pick_plateau_max(rows: &[SweepRow]) -> Option<usize> {
    let best = rows
        .iter()
        .map(|r| r.rate)
        .fold(f64::NEG_INFINITY, f64::max);
    if !best.is_finite() {
        return None;
    }
    rows.iter()
        .enumerate()
        .filter(|(_, r)| r.rate >= best * (1.0 - RATE_PLATEAU))
        .max_by(|(_, a), (_, b)| a.e_max.partial_cmp(&b.e_max).unwrap())
        .map(|(i, _)| i)
}

/// Sweeps the top energy level over [`default_energy_sweep`] and returns
/// the rate-maximising truncated-soliton scheme together with the sweep
/// rows. Near-ties in rate resolve toward the highest energy (band-filling
/// operation).
pub fn best_truncated_soliton_scheme(
    m: usize,
    w_max: f64,
    eps: f64,
    fiber: &FiberParams,
    cfg: &SsfmConfig,
) -> Result<(EmScheme, Vec<SweepRow>)> {
    check_levels(m)?;
    let mut candidates = default_energy_sweep(w_max, eps, fiber)?;
    // Sweep from the top down: transmit durations shrink with energy, so the
    // highest candidates set a strong incumbent rate early and the transmit
    // floor can rule out most of the low-energy tail without propagating it.
    candidates.sort_by(|a, b| b.partial_cmp(a).unwrap());
    let mut entries: Vec<(SweepRow, Option<EmScheme>)> = Vec::with_capacity(candidates.len());
    let mut best_rate = 0.0f64;
    for &e in &candidates {
        let a2 = soliton::soliton_amplitude_for_energy(e / ((m - 1) as f64).powi(2), fiber)?;
        let tx_floor = soliton::soliton_duration(a2, fiber, eps)?;
        let rate_ceiling = (m as f64).log2() / tx_floor;
        if rate_ceiling < best_rate * (1.0 - RATE_PLATEAU) {
            // Even a zero received duration could not bring this candidate
            // into the plateau of the incumbent rate.
            entries.push((
                SweepRow {
                    e_max: e,
                    t_mod: tx_floor,
                    rate: rate_ceiling,
                    evaluated: false,
                },
                None,
            ));
            continue;
        }
        let scheme = truncated_soliton_scheme(m, e, w_max, eps, fiber, cfg)?;
        let rate = scheme.transmission_rate();
        best_rate = best_rate.max(rate);
        entries.push((
            SweepRow {
                e_max: e,
                t_mod: scheme.t_mod,
                rate,
                evaluated: true,
            },
            Some(scheme),
        ));
    }
    entries.sort_by(|(a, _), (b, _)| a.e_max.partial_cmp(&b.e_max).unwrap());
    let rows: Vec<SweepRow> = entries.iter().map(|(r, _)| *r).collect();
    // A candidate skipped via its transmit floor satisfied
    // `rate < best_at_the_time·(1 − plateau) ≤ final_best·(1 − plateau)`,
    // so the plateau pick always lands on an evaluated row.
    let idx = pick_plateau_max(&rows)
        .ok_or_else(|| Error::Infeasible("no feasible top level in the sweep".into()))?;
    let winner = match entries[idx].1.take() {
        Some(scheme) => scheme,
        None => truncated_soliton_scheme(m, rows[idx].e_max, w_max, eps, fiber, cfg)?,
    };
    Ok((winner, rows))
}

/// A piecewise-linear optimised-duration curve `t*(E)`: fixed-point
/// durations at sampled energies, with a zero-energy limit (the
/// dispersion-only fixed point) anchoring the low end.
#[derive(Debug, Clone)]
pub struct DurationCurve {
    energies: Vec<f64>,
    durations: Vec<f64>,
    t_zero: f64,
}

impl DurationCurve {
    /// Builds a curve from `(energy, duration)` anchors and the
    /// zero-energy (dispersion-only) duration limit.
    pub fn new(mut points: Vec<(f64, f64)>, t_zero: f64) -> Result<Self> {
        if points.is_empty() {
            return Err(Error::InvalidParameter(
                "duration curve needs at least one anchor".into(),
            ));
        }
        if !(t_zero.is_finite() && t_zero > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "zero-energy duration must be positive, got {t_zero}"
            )));
        }
        points.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
        for pair in points.windows(2) {
            if pair[0].0 == pair[1].0 {
                return Err(Error::InvalidParameter(format!(
                    "duplicate curve anchor at {} J",
                    pair[0].0
                )));
            }
        }
        for &(e, t) in &points {
            if !(e.is_finite() && e > 0.0 && t.is_finite() && t > 0.0) {
                return Err(Error::InvalidParameter(format!(
                    "curve anchors must be positive, got ({e} J, {t} s)"
                )));
            }
        }
        let (energies, durations) = points.into_iter().unzip();
        Ok(Self {
            energies,
            durations,
            t_zero,
        })
    }

    /// The largest anchored energy.
    pub fn max_energy(&self) -> f64 {
        *self.energies.last().unwrap()
    }

    /// Linear interpolation of `t*(energy)`; energies below the first
    /// anchor interpolate toward the zero-energy limit, and energies above
    /// the last anchor are an error (the curve does not extrapolate).
    pub fn interpolate(&self, energy: f64) -> Result<f64> {
        if !(energy.is_finite() && energy >= 0.0) {
            return Err(Error::InvalidParameter(format!(
                "energy must be nonnegative, got {energy}"
            )));
        }
        if energy > self.max_energy() * (1.0 + 1e-12) {
            return Err(Error::InvalidParameter(format!(
                "energy {energy} J beyond the last curve anchor at {} J",
                self.max_energy()
            )));
        }
        let (mut e0, mut t0) = (0.0, self.t_zero);
        for (&e1, &t1) in self.energies.iter().zip(&self.durations) {
            if energy <= e1 {
                let frac = (energy - e0) / (e1 - e0);
                return Ok(t0 + frac * (t1 - t0));
            }
            e0 = e1;
            t0 = t1;
        }
        Ok(*self.durations.last().unwrap())
    }
}

/// Sweeps the top energy level of an `M`-ary scheme of optimised pulses
/// over `candidates`, estimating each candidate's modulation interval from
/// the duration curve (max of `t*(E_m)` over nonzero levels), and returns
/// the plateau-resolved best row plus all rows. No pulse design runs here.
pub fn best_mtb_operating_point(
    m: usize,
    curve: &DurationCurve,
    candidates: &[f64],
) -> Result<(SweepRow, Vec<SweepRow>)> {
    check_levels(m)?;
    if candidates.is_empty() {
        return Err(Error::InvalidParameter(
            "need at least one candidate top level".into(),
        ));
    }
    let mut rows = Vec::with_capacity(candidates.len());
    for &e in candidates {
        let mut t_mod = 0.0f64;
        for level in energy_levels(m, e)?.into_iter().skip(1) {
            t_mod = t_mod.max(curve.interpolate(level)?);
        }
        rows.push(SweepRow {
            e_max: e,
            t_mod,
            rate: transmission_rate(m, t_mod)?,
            evaluated: true,
        });
    }
    let idx = pick_plateau_max(&rows)
        .ok_or_else(|| Error::Infeasible("no feasible top level in the sweep".into()))?;
    Ok((rows[idx], rows))
}

/// Assembles an `M`-ary scheme from optimised designs, one per nonzero
/// level in ascending level order, with energies matching
/// `energy_levels(M, e_max)`. Received durations and all bandwidths are
/// re-measured on each design's own grid; transmit durations are the
/// designs' time limits. Designs may live on different grids — pulses are
/// recentred onto one common grid for train assembly.
pub fn mtb_scheme(
    m: usize,
    e_max: f64,
    designs: &[DesignResult],
    fiber: &FiberParams,
    cfg: &SsfmConfig,
) -> Result<EmScheme> {
    check_levels(m)?;
    if designs.len() != m - 1 {
        return Err(Error::ShapeMismatch(format!(
            "need {} designs for M = {m}, got {}",
            m - 1,
            designs.len()
        )));
    }
    let energies = energy_levels(m, e_max)?;
    let eps = designs[0].eps;
    for (d, &e) in designs.iter().zip(&energies[1..]) {
        if (d.energy - e).abs() > 1e-6 * e {
            return Err(Error::InvalidParameter(format!(
                "design energy {} J does not match level energy {} J",
                d.energy, e
            )));
        }
        if d.eps != eps {
            return Err(Error::InvalidParameter(
                "designs must share one energy fraction tolerance".into(),
            ));
        }
    }

    let mut tx_durations = Vec::with_capacity(m - 1);
    let mut rx_durations = Vec::with_capacity(m - 1);
    let mut tx_bandwidths = Vec::with_capacity(m - 1);
    let mut rx_bandwidths = Vec::with_capacity(m - 1);
    for d in designs {
        let metrics = measure_level(&d.pulse, eps, fiber, cfg)?;
        tx_durations.push(d.t_p);
        rx_durations.push(metrics.rx_duration);
        tx_bandwidths.push(metrics.tx_bandwidth);
        rx_bandwidths.push(metrics.rx_bandwidth);
    }
    let t_mod = modulation_interval(&tx_durations, &rx_durations)?;
    let w_eff = tx_bandwidths
        .iter()
        .chain(&rx_bandwidths)
        .cloned()
        .fold(0.0f64, f64::max);

    // Recentre every pulse onto one common grid: the finest dt and the
    // widest window among the designs.
    let dt = designs
        .iter()
        .map(|d| d.pulse.grid().dt())
        .fold(f64::INFINITY, f64::min);
    for d in designs {
        if (d.pulse.grid().dt() - dt).abs() > 1e-18 {
            return Err(Error::ShapeMismatch(
                "designs must share one sample interval".into(),
            ));
        }
    }
    let n = designs
        .iter()
        .map(|d| d.pulse.grid().n_samples())
        .max()
        .unwrap();
    let common = TimeGrid::new(n, dt)?;
    let pulses = designs
        .iter()
        .map(|d| embed_centered(&d.pulse, common))
        .collect::<Result<Vec<_>>>()?;

    let scheme = EmScheme {
        m_levels: m,
        e_max,
        eps,
        energies,
        pulses,
        tx_durations,
        rx_durations,
        tx_bandwidths,
        rx_bandwidths,
        t_mod,
        w_eff,
    };
    scheme.validate()?;
    Ok(scheme)
}

/// Copies a centred pulse onto a (possibly larger) grid with the same
/// sample interval, keeping the centre sample aligned.
fn embed_centered(pulse: &SampledSignal, grid: TimeGrid) -> Result<SampledSignal> {
    let src = pulse.grid();
    if src.n_samples() > grid.n_samples() {
        return Err(Error::GridOverflow(format!(
            "cannot embed {} samples into {}",
            src.n_samples(),
            grid.n_samples()
        )));
    }
    let offset = grid.n_samples() / 2 - src.n_samples() / 2;
    let mut samples = vec![Complex64::new(0.0, 0.0); grid.n_samples()];
    samples[offset..offset + src.n_samples()].copy_from_slice(pulse.samples());
    SampledSignal::new(grid, samples)
}

/// Slot layout of a modulated train: where each symbol's window sits on
/// the train grid.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrainLayout {
    /// The train grid.
    pub grid: TimeGrid,
    /// Samples per slot (even, `slot_samples·dt ≥ t_mod`).
    pub slot_samples: usize,
    /// Number of message slots.
    pub n_slots: usize,
    /// Index of the first sample of slot 0.
    pub first_sample: usize,
}

impl TrainLayout {
    /// Sample range `[start, end)` of slot `k`.
    pub fn slot_range(&self, k: usize) -> (usize, usize) {
        let start = self.first_sample + k * self.slot_samples;
        (start, start + self.slot_samples)
    }

    /// Centre sample of slot `k`.
    pub fn slot_center(&self, k: usize) -> usize {
        self.first_sample + k * self.slot_samples + self.slot_samples / 2
    }
}

/// Computes the slot-aligned train layout for `n_messages` slots of the
/// scheme: slots of an even number of samples covering `t_mod`, padded by
/// at least three slots on each side so edge pulses and their dispersed
/// tails stay on the grid.
pub fn train_layout(scheme: &EmScheme, n_messages: usize) -> Result<TrainLayout> {
    scheme.validate()?;
    if n_messages == 0 {
        return Err(Error::InvalidParameter(
            "need at least one message slot".into(),
        ));
    }
    let dt = scheme.pulses[0].grid().dt();
    let slot_samples = 2 * ((scheme.t_mod / (2.0 * dt)) - 1e-9).ceil().max(1.0) as usize;
    let needed = (n_messages + 6) * slot_samples;
    let n = needed.next_power_of_two().max(64);
    let grid = TimeGrid::new(n, dt)?;
    let first_sample = (n - n_messages * slot_samples) / 2;
    Ok(TrainLayout {
        grid,
        slot_samples,
        n_slots: n_messages,
        first_sample,
    })
}

/// Builds the transmit train `Σ_k p_{m_k}(t − t_k)` for the message
/// sequence (levels in `1..=M`; level 1 transmits nothing), with slot `k`'s
/// pulse centred on the slot centre sample. Returns the train and its
/// layout.
pub fn modulate(messages: &[usize], scheme: &EmScheme) -> Result<(SampledSignal, TrainLayout)> {
    let layout = train_layout(scheme, messages.len())?;
    let n = layout.grid.n_samples();
    let mut samples = vec![Complex64::new(0.0, 0.0); n];
    for (k, &m) in messages.iter().enumerate() {
        if m < 1 || m > scheme.m_levels {
            return Err(Error::InvalidParameter(format!(
                "message {m} outside levels 1..={}",
                scheme.m_levels
            )));
        }
        if m == 1 {
            continue;
        }
        let pulse = &scheme.pulses[m - 2];
        let n_p = pulse.grid().n_samples();
        let center = layout.slot_center(k) as isize;
        for (j, &c) in pulse.samples().iter().enumerate() {
            if c == Complex64::new(0.0, 0.0) {
                continue;
            }
            let idx = center + j as isize - (n_p / 2) as isize;
            if idx < 0 || idx >= n as isize {
                return Err(Error::GridOverflow(format!(
                    "slot {k} pulse sample falls off the train grid at index {idx}"
                )));
            }
            samples[idx as usize] += c;
        }
    }
    Ok((SampledSignal::new(layout.grid, samples)?, layout))
}

/// Maps each slot of a received train to the nearest energy level
/// (minimum absolute energy distance, ties to the lower level). The train
/// must be on the layout produced by [`train_layout`] for `n_messages`
/// slots.
pub fn detect(
    received: &SampledSignal,
    scheme: &EmScheme,
    n_messages: usize,
) -> Result<Vec<usize>> {
    let layout = train_layout(scheme, n_messages)?;
    if received.grid() != layout.grid {
        return Err(Error::ShapeMismatch(format!(
            "received train grid ({} x {:.3e} s) does not match the layout ({} x {:.3e} s)",
            received.grid().n_samples(),
            received.grid().dt(),
            layout.grid.n_samples(),
            layout.grid.dt()
        )));
    }
    let energies = slot_energies(received, &layout);
    Ok(energies
        .iter()
        .map(|&e| nearest_level(e, &scheme.energies))
        .collect())
}

/// Per-slot energies of a train.
fn slot_energies(train: &SampledSignal, layout: &TrainLayout) -> Vec<f64> {
    let dt = layout.grid.dt();
    (0..layout.n_slots)
        .map(|k| {
            let (start, end) = layout.slot_range(k);
            train.samples()[start..end]
                .iter()
                .map(|c| c.norm_sqr())
                .sum::<f64>()
                * dt
        })
        .collect()
}

/// Nearest level index (1-based) by absolute energy distance, ties to the
/// lower level.
fn nearest_level(energy: f64, levels: &[f64]) -> usize {
    let mut best = 1;
    let mut best_dist = f64::INFINITY;
    for (idx, &e) in levels.iter().enumerate() {
        let dist = (energy - e).abs();
        if dist < best_dist {
            best_dist = dist;
            best = idx + 1;
        }
    }
    best
}

/// Outcome of one end-to-end link evaluation.
#[derive(Debug, Clone)]
pub struct LinkReport {
    /// Detected level per slot.
    pub detected: Vec<usize>,
    /// Number of slots detected at the wrong level.
    pub symbol_errors: usize,
    /// Received energy per slot in joules (after re-amplification on lossy
    /// fibres).
    pub slot_energies: Vec<f64>,
    /// Largest deviation in joules of any slot energy from its
    /// transmitted level.
    pub max_leakage: f64,
    /// Transmission rate in bit/s.
    pub rate: f64,
    /// Spectral efficiency in bit/s/Hz.
    pub spectral_efficiency: f64,
    /// Time-bandwidth product.
    pub time_bandwidth_product: f64,
}

/// Runs the full noiseless link: modulate the messages, propagate the
/// train, re-amplify on lossy fibres, and detect per-slot energies.
///
/// The propagation margin guard is replaced by a train-specific check
/// (energy beyond the padded message region must stay below the
/// per-symbol leakage budget), since a train legitimately fills most of
/// its window.
pub fn evaluate_link(
    scheme: &EmScheme,
    fiber: &FiberParams,
    cfg: &SsfmConfig,
    messages: &[usize],
) -> Result<LinkReport> {
    let (train, layout) = modulate(messages, scheme)?;
    let tx_energy = signal::energy(&train);

    let mut train_cfg = *cfg;
    train_cfg.check_margins = false;
    let mut received = propagator::propagate(&train, fiber, &train_cfg)?;
    if fiber.alpha_db_per_km() > 0.0 && tx_energy > 0.0 {
        received = propagator::amplify_to_energy(&received, tx_energy)?;
    }

    // Train edge check: energy outside the message region plus one slot of
    // guard on each side must stay within the leakage budget.
    let budget = 4.0 * scheme.eps * scheme.e_max;
    let (first, _) = layout.slot_range(0);
    let (_, last) = layout.slot_range(layout.n_slots - 1);
    let dt = layout.grid.dt();
    let s = layout.slot_samples;
    let outside: f64 = received.samples()[..first.saturating_sub(s)]
        .iter()
        .chain(&received.samples()[(last + s).min(received.samples().len())..])
        .map(|c| c.norm_sqr())
        .sum::<f64>()
        * dt;
    if outside > budget {
        return Err(Error::GridOverflow(format!(
            "{outside:.3e} J of received energy beyond the train's guard slots \
             (budget {budget:.3e} J); enlarge the padding"
        )));
    }

    let slot_energies = slot_energies(&received, &layout);
    let detected: Vec<usize> = slot_energies
        .iter()
        .map(|&e| nearest_level(e, &scheme.energies))
        .collect();
    let symbol_errors = detected
        .iter()
        .zip(messages)
        .filter(|(d, m)| d != m)
        .count();
    let max_leakage = slot_energies
        .iter()
        .zip(messages)
        .map(|(&e, &m)| (e - scheme.energies[m - 1]).abs())
        .fold(0.0f64, f64::max);

    Ok(LinkReport {
        detected,
        symbol_errors,
        slot_energies,
        max_leakage,
        rate: scheme.transmission_rate(),
        spectral_efficiency: scheme.spectral_efficiency(),
        time_bandwidth_product: scheme.time_bandwidth_product(),
    })
}
