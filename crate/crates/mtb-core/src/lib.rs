//! Numerical toolkit for designing time-limited optical pulses with minimum
//! received duration over single-mode fibre channels governed by the
//! nonlinear Schrödinger equation, and for evaluating energy-modulated links
//! built from such pulses.
//!
//! The crate is organised bottom-up:
//!
//! * [`signal`] — sampled complex envelopes on uniform time grids, unitary
//!   spectra, and ε-effective duration/bandwidth metrology.
//! * [`propagator`] — split-step Fourier integration of the nonlinear
//!   Schrödinger equation with loss, plus fibre parameter handling.
//! * [`soliton`] — closed-form fundamental-soliton baselines: energy/amplitude
//!   maps, effective widths, time–bandwidth product, and the soliton
//!   energy-modulation rate bound.
//! * [`basis`] — discrete prolate spheroidal (Slepian) bases for jointly
//!   time-limited, spectrally concentrated pulse synthesis.
//! * [`optimizer`] — penalty-method multi-start search for minimum received
//!   duration over a Slepian coefficient sphere, and the fixed-point solve
//!   for the minimum time broadening (MTB) duration.
//! * [`emsystem`] — energy-modulation schemes: level grids, pulse trains,
//!   energy detection, and rate/spectral-efficiency accounting.
//!
//! All public quantities are SI (seconds, hertz, joules, watts, metres)
//! unless a name says otherwise; fibre parameters are entered in the
//! engineering units conventional for fibre data sheets (ps²/km, 1/W/km,
//! dB/km, km) and converted internally.

pub mod basis;
pub mod emsystem;
mod error;
pub mod optimizer;
pub mod propagator;
pub mod signal;
pub mod soliton;

pub use error::{Error, Result};
pub use propagator::{FiberParams, FiberRegime, SsfmConfig};
pub use signal::{SampledSignal, Spectrum, TimeGrid};
