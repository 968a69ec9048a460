#![doc = include_str!("../../../book/src/introduction.md")]

#[doc = include_str!("../../../book/src/array-model.md")]
pub mod array_model {}

#[doc = include_str!("../../../book/src/throughput.md")]
pub mod throughput {}

#[doc = include_str!("../../../book/src/beamforming.md")]
pub mod beamforming {}

#[doc = include_str!("../../../book/src/simulation.md")]
pub mod simulation {}

#[doc = include_str!("../../../book/src/experiments.md")]
pub mod experiments {}
