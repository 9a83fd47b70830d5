//! Transmitter and receiver imperfections.

pub mod adc;
pub mod noise;
pub mod nonlinearity;
pub mod phase_noise;

pub use adc::{quantization_noise_dbfs, quantization_variance, quantize, AdcConfig, FullScale, QuantizedSignal};
pub use noise::{add_gaussian_noise, GaussianNoiseModel, NoiseConfig, NoiseFigureModel, NoiseTable};
pub use nonlinearity::{
    apply_nonlinearity, calibrate_alpha3, distortion_ratio_db, NonlinearOutput, NonlinearityConfig,
};
pub use phase_noise::{
    apply_phase_noise, gen_phase_noise, PhaseNoiseConfig, PhaseNoiseModel, PhaseNoiseProcess, PllPole,
};
