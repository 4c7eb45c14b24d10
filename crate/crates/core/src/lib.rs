//! Mitigability benchmarking for zero-noise extrapolation.
//!
//! A model qubit is driven through logically equivalent Rabi programs whose
//! pulses are stretched in time; the accumulated noise of each program is
//! predicted from a calibrated, amplitude-dependent relaxation model and
//! the measured expectation values are extrapolated to zero noise. The
//! distance between the extrapolated and the ideal value is the
//! mitigability score.
//!
//! - [`device`]: qubit parameters, power law and relaxation-rate model
//! - [`sim`]: Bloch-equation simulator and shot-sampled readout
//! - [`calibration`]: curve fits that recover the device model from data
//! - [`extrapolation`]: Richardson and weighted linear estimators
//! - [`harness`]: program suites, noise factors, file formats and reports

// negated comparisons are used to reject NaN
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod calibration;
pub mod device;
pub mod extrapolation;
pub mod harness;
pub mod seed;
pub mod sim;

pub use device::DeviceModel;
