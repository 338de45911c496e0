pub mod double_pendulum;
pub mod pendulum;
pub mod planck;
pub mod rietkerk;
