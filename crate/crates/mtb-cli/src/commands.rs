//! The five subcommands: each turns a config into CSV files (and waveform
//! files where pulses are designed), printing a one-line summary.

use std::fmt::Write as _;
use std::path::Path;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use mtb_core::emsystem::{self, EmScheme, SweepRow};
use mtb_core::optimizer::{self, DesignProblem, DesignResult};
use mtb_core::{signal, soliton};

use crate::config::{PulseType, RunConfig};
use crate::error::CliError;
use crate::waveform;

/// Lossless decimal rendering of an f64 (17 significant digits).
fn sig(x: f64) -> String {
    format!("{x:.17e}")
}

fn write_file(path: &Path, contents: &str) -> Result<(), CliError> {
    std::fs::write(path, contents)
        .map_err(|e| CliError::Io(format!("cannot write {}: {e}", path.display())))
}

/// Transmit and received durations of truncated solitons over the config's
/// energy list, on the configured channel and its lossless twin.
pub fn soliton_sweep(cfg: &RunConfig, out: &Path) -> Result<(), CliError> {
    let fiber = cfg.fiber()?;
    let lossless = cfg.lossless_fiber()?;
    let ssfm = cfg.ssfm()?;
    let w = cfg.w_max_hz();
    let energies = cfg.energies_si();

    let rows_lossless =
        emsystem::soliton_broadening_sweep(&energies, w, cfg.eps, &lossless, &ssfm)?;
    let rows_lossy = if fiber.alpha_db_per_km() > 0.0 {
        emsystem::soliton_broadening_sweep(&energies, w, cfg.eps, &fiber, &ssfm)?
    } else {
        rows_lossless.clone()
    };

    let mut csv =
        String::from("energy_j,tx_duration_s,rx_duration_lossless_s,rx_duration_lossy_s\n");
    for (ll, lo) in rows_lossless.iter().zip(&rows_lossy) {
        writeln!(
            csv,
            "{},{},{},{}",
            sig(ll.energy),
            sig(ll.tx_duration),
            sig(ll.rx_duration),
            sig(lo.rx_duration)
        )
        .unwrap();
    }
    let path = out.join("soliton_sweep.csv");
    write_file(&path, &csv)?;
    println!(
        "soliton-sweep: {} energies -> {}",
        rows_lossless.len(),
        path.display()
    );
    Ok(())
}

fn design_template(cfg: &RunConfig, energy: f64) -> Result<DesignProblem, CliError> {
    let fiber = cfg.fiber()?;
    let mut template = DesignProblem::new(
        energy,
        optimizer::default_initial_t_p(energy, cfg.eps, &fiber)?,
        cfg.w_max_hz(),
        cfg.eps,
        fiber,
        cfg.ssfm()?,
    );
    cfg.apply_design_overrides(&mut template)?;
    Ok(template)
}

/// Minimum time-broadening designs: one fixed point per configured energy,
/// a summary CSV, and one waveform file per design.
pub fn mtb_design(cfg: &RunConfig, out: &Path) -> Result<(), CliError> {
    let energies = cfg.energies_si();
    if energies.is_empty() {
        return Err(CliError::Config(
            "mtb-design needs a non-empty energies_pj list".into(),
        ));
    }
    let mut csv = String::from(
        "energy_j,t_star_s,rx_duration_s,inband_fraction,w_eff_hz,waveform_file\n",
    );
    for (i, &e) in energies.iter().enumerate() {
        let template = design_template(cfg, e)?;
        let result = optimizer::find_mtb_from(&template)?;
        let w_eff = signal::effective_bandwidth(&result.design.pulse, cfg.eps)?;
        let file = format!("mtb_pulse_{i:02}.csv");
        waveform::write_waveform(&out.join(&file), &result.design.pulse)?;
        writeln!(
            csv,
            "{},{},{},{},{},{}",
            sig(e),
            sig(result.t_star),
            sig(result.design.rx_duration),
            sig(result.design.inband),
            sig(w_eff),
            file
        )
        .unwrap();
        println!(
            "mtb-design: E = {:.4} pJ -> t* = {:.2} ps ({} evaluations)",
            e * 1e12,
            result.t_star * 1e12,
            result.evaluations.len()
        );
        for note in &result.diagnostics {
            eprintln!("mtb-design: note: {note}");
        }
    }
    let path = out.join("mtb_designs.csv");
    write_file(&path, &csv)?;
    println!("mtb-design: {} designs -> {}", energies.len(), path.display());
    Ok(())
}

fn mtb_designs_for_levels(
    cfg: &RunConfig,
    m: usize,
    e_max: f64,
) -> Result<Vec<DesignResult>, CliError> {
    let levels = emsystem::energy_levels(m, e_max)?;
    let mut designs = Vec::with_capacity(m - 1);
    for &e in &levels[1..] {
        let template = design_template(cfg, e)?;
        let result = optimizer::find_mtb_from(&template)?;
        println!(
            "em-evaluate: level {:.4} pJ -> t* = {:.2} ps",
            e * 1e12,
            result.t_star * 1e12
        );
        designs.push(result.design);
    }
    Ok(designs)
}

fn sweep_csv(rows: &[SweepRow]) -> String {
    let mut csv = String::from("e_max_j,t_mod_s,rate_bit_per_s,evaluated\n");
    for r in rows {
        writeln!(
            csv,
            "{},{},{},{}",
            sig(r.e_max),
            sig(r.t_mod),
            sig(r.rate),
            r.evaluated
        )
        .unwrap();
    }
    csv
}

fn levels_csv(scheme: &EmScheme) -> String {
    let mut csv = String::from(
        "level,energy_j,tx_duration_s,rx_duration_s,tx_bandwidth_hz,rx_bandwidth_hz\n",
    );
    writeln!(csv, "1,{},,,,", sig(scheme.energies[0])).unwrap();
    for k in 0..scheme.m_levels - 1 {
        writeln!(
            csv,
            "{},{},{},{},{},{}",
            k + 2,
            sig(scheme.energies[k + 1]),
            sig(scheme.tx_durations[k]),
            sig(scheme.rx_durations[k]),
            sig(scheme.tx_bandwidths[k]),
            sig(scheme.rx_bandwidths[k])
        )
        .unwrap();
    }
    csv
}

/// Builds the configured energy-modulated link, runs a random-message
/// noiseless loopback, and writes summary, per-level, and (for soliton
/// sweeps) rate-sweep CSVs.
pub fn em_evaluate(cfg: &RunConfig, out: &Path, seed_flag: Option<u64>) -> Result<(), CliError> {
    let fiber = cfg.fiber()?;
    let ssfm = cfg.ssfm()?;
    let w = cfg.w_max_hz();
    let m = cfg
        .m_levels
        .ok_or_else(|| CliError::Config("em-evaluate needs m_levels".into()))?;
    let pulse_type = cfg
        .pulse_type
        .ok_or_else(|| CliError::Config("em-evaluate needs pulse_type (soliton|mtb)".into()))?;

    let (scheme, sweep_rows) = match pulse_type {
        PulseType::Soliton => match cfg.e_max_si() {
            Some(e_max) => (
                emsystem::truncated_soliton_scheme(m, e_max, w, cfg.eps, &fiber, &ssfm)?,
                None,
            ),
            None => {
                let (scheme, rows) =
                    emsystem::best_truncated_soliton_scheme(m, w, cfg.eps, &fiber, &ssfm)?;
                (scheme, Some(rows))
            }
        },
        PulseType::Mtb => {
            let e_max = cfg.e_max_si().ok_or_else(|| {
                CliError::Config(
                    "pulse_type \"mtb\" needs e_max_pj (each level is a fixed-point design)"
                        .into(),
                )
            })?;
            let designs = mtb_designs_for_levels(cfg, m, e_max)?;
            (
                emsystem::mtb_scheme(m, e_max, &designs, &fiber, &ssfm)?,
                None,
            )
        }
    };

    let n_messages = cfg.n_messages.unwrap_or(256);
    let seed = seed_flag.or(cfg.message_seed).unwrap_or(0);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let messages: Vec<usize> = (0..n_messages).map(|_| rng.random_range(1..=m)).collect();
    let report = emsystem::evaluate_link(&scheme, &fiber, &ssfm, &messages)?;
    let bound = soliton::soliton_em_rate_bound(m as u32, w, cfg.eps)?;

    let kind = match pulse_type {
        PulseType::Soliton => "soliton",
        PulseType::Mtb => "mtb",
    };
    let mut summary = String::from(
        "pulse_type,m_levels,e_max_j,t_mod_s,w_eff_hz,rate_bit_per_s,bound_bit_per_s,\
         spectral_efficiency_bit_per_s_per_hz,time_bandwidth_product,n_messages,\
         symbol_errors,max_leakage_j\n",
    );
    writeln!(
        summary,
        "{kind},{},{},{},{},{},{},{},{},{},{},{}",
        m,
        sig(scheme.e_max),
        sig(scheme.t_mod),
        sig(scheme.w_eff),
        sig(report.rate),
        sig(bound),
        sig(report.spectral_efficiency),
        sig(report.time_bandwidth_product),
        n_messages,
        report.symbol_errors,
        sig(report.max_leakage)
    )
    .unwrap();
    write_file(&out.join("em_summary.csv"), &summary)?;
    write_file(&out.join("em_levels.csv"), &levels_csv(&scheme))?;
    if let Some(rows) = &sweep_rows {
        write_file(&out.join("em_sweep.csv"), &sweep_csv(rows))?;
    }
    println!(
        "em-evaluate: {kind} M = {m}, E_max = {:.4} pJ: rate {:.4} Gbit/s \
         (bound {:.4}), SE {:.4} bit/s/Hz, {} errors in {} symbols",
        scheme.e_max * 1e12,
        report.rate / 1e9,
        bound / 1e9,
        report.spectral_efficiency,
        report.symbol_errors,
        n_messages
    );
    Ok(())
}

/// Propagates a waveform file through the configured channel and writes the
/// `|q(t, z)|²` surface at equally spaced z positions.
pub fn propagate(cfg: &RunConfig, out: &Path, waveform_path: &Path) -> Result<(), CliError> {
    let input = waveform::read_waveform(waveform_path)?;
    let fiber = cfg.fiber()?;
    let ssfm = cfg.ssfm()?;
    let n_z = cfg.n_snapshots.unwrap_or(17);
    let checkpoints = mtb_core::propagator::propagate_with_checkpoints(&input, &fiber, &ssfm, n_z)?;

    let mut csv = String::from("z_m,t_seconds,intensity_w\n");
    for (z, envelope) in &checkpoints {
        let grid = envelope.grid();
        for (k, c) in envelope.samples().iter().enumerate() {
            writeln!(csv, "{},{},{}", sig(*z), sig(grid.time(k)), sig(c.norm_sqr())).unwrap();
        }
    }
    let path = out.join("propagation_surface.csv");
    write_file(&path, &csv)?;
    println!(
        "propagate: {} -> {} ({} z positions x {} samples)",
        waveform_path.display(),
        path.display(),
        checkpoints.len(),
        input.grid().n_samples()
    );
    Ok(())
}

/// Closed-form rate bound for `M`-ary soliton energy modulation on the
/// configured band.
pub fn bound(cfg: &RunConfig, out: &Path, m: u32) -> Result<(), CliError> {
    let w = cfg.w_max_hz();
    let value = soliton::soliton_em_rate_bound(m, w, cfg.eps)?;
    let mut csv = String::from("m_levels,w_max_hz,eps,bound_bit_per_s\n");
    writeln!(csv, "{m},{},{},{}", sig(w), sig(cfg.eps), sig(value)).unwrap();
    let path = out.join("bound.csv");
    write_file(&path, &csv)?;
    println!("bound: M = {m} -> {:.6} Gbit/s", value / 1e9);
    Ok(())
}
