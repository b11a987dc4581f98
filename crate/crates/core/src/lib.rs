//! Complex-valued reservoir computing for classifying terrain aspect and
//! estimating slope angles from interferometric phase rasters.

pub mod cxnum;
pub mod error;
pub mod experiments;
pub mod raster;
pub mod readout;
pub mod reservoir;
pub mod seed;
pub mod synth;

pub use cxnum::{CMatrix, CVector};
pub use error::{Error, Result};
pub use raster::{Aspect, ComplexRaster, Direction, LabelMap, Rect, TeacherArea};
pub use readout::ReadoutModel;
pub use reservoir::{DynamicsMode, ReservoirConfig, ReservoirState, ReservoirWeights, ValueDomain};
pub use synth::{Dem, Grid, SceneSpec};
