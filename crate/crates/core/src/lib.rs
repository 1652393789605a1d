//! Simulation and analysis library for a multirotor weather-sounding
//! platform: atmosphere and airframe models, mission generation, flight
//! simulation, the on-board logger and its file server, and the ground
//! station's indices and reports.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod airframe;
pub mod atmosphere;
pub mod error;
pub mod firmware;
pub mod flightsim;
pub mod groundstation;
pub mod mission;
pub mod pipeline;
pub mod synclink;
pub mod wxindices;

pub use airframe::AirframeConfig;
pub use atmosphere::{AtmosphereModel, StationCalibration};
pub use error::{Error, Result};
pub use firmware::{FirmwareConfig, SdCardImage, SensorSample};
pub use flightsim::{Environment, SimOptions, Trajectory};
pub use mission::{MissionCommand, MissionPlan, SoundingPattern};
pub use pipeline::RunConfig;
pub use synclink::{SyncResult, Which};
pub use wxindices::{SoundingProfile, WxReport};
