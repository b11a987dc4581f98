//! End-to-end pipelines: aspect classification with both reservoir
//! variants and the neighbor-difference baseline, slope estimation,
//! metrics, sweeps and traces.

pub mod aspect;
pub mod metrics;
pub mod slope;
pub mod sweep;
pub mod trace;

use std::time::{Duration, Instant};

pub use aspect::{
    aspect_outputs, classify_aspect, neighbor_difference_classify, neighbor_tau, train_aspect, AspectHyper, AspectRun,
    DirectionalNet, OutputField,
};
pub use metrics::{accuracy, isolated_flips, rmse, Accuracy, Metrics};
pub use slope::{estimate_slope, evaluate_slope_row, train_slope, SlopeEval, SlopeRun, SlopeSpec};
pub use sweep::{sweep_frames, sweep_neurons, FrameSweepRow, NeuronSweepRow};
pub use trace::{trace_csv, trace_reservoir, LineSpec, TraceStep};

use crate::error::{Error, Result};
use crate::raster::{phase_difference, ComplexRaster, Direction, LabelMap, Rect, TeacherArea};
use crate::reservoir::{ReservoirConfig, ValueDomain};
use crate::synth::SyntheticScene;

/// Aspect classifier under comparison.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Method {
    #[default]
    Cvrc,
    Rvrc,
    Neighbor,
}

impl Method {
    pub fn name(self) -> &'static str {
        match self {
            Self::Cvrc => "cvrc",
            Self::Rvrc => "rvrc",
            Self::Neighbor => "neighbor",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        [Self::Cvrc, Self::Rvrc, Self::Neighbor].into_iter().find(|m| m.name() == s)
    }
}

/// Difference rasters, truth and evaluation layout for one scene.
#[derive(Debug, Clone)]
pub struct PreparedScene {
    pub diff_ew: ComplexRaster,
    pub diff_ns: ComplexRaster,
    pub truth: LabelMap,
    pub water_mask: Vec<bool>,
    pub areas: Vec<TeacherArea>,
    pub regions: Vec<(String, Rect)>,
}

impl PreparedScene {
    pub fn new(
        interferogram: &ComplexRaster,
        truth: LabelMap,
        water_mask: Vec<bool>,
        areas: Vec<TeacherArea>,
        regions: Vec<(String, Rect)>,
    ) -> Result<Self> {
        if truth.width() != interferogram.width() || truth.height() != interferogram.height() {
            return Err(Error::dim("PreparedScene", "truth does not match the interferogram"));
        }
        if water_mask.len() != truth.width() * truth.height() {
            return Err(Error::dim("PreparedScene", "water mask does not match the interferogram"));
        }
        for (name, r) in &regions {
            if !r.fits_in(truth.width(), truth.height()) {
                return Err(Error::invalid(format!("region {name} lies outside the scene")));
            }
        }
        Ok(Self {
            diff_ew: phase_difference(interferogram, Direction::EastWest)?,
            diff_ns: phase_difference(interferogram, Direction::NorthSouth)?,
            truth,
            water_mask,
            areas,
            regions,
        })
    }

    pub fn from_scene(scene: &SyntheticScene, areas: Vec<TeacherArea>, regions: Vec<(String, Rect)>) -> Result<Self> {
        Self::new(
            &scene.interferogram,
            scene.truth.aspect.clone(),
            scene.truth.water_mask.clone(),
            areas,
            regions,
        )
    }

    pub fn width(&self) -> usize {
        self.truth.width()
    }

    pub fn height(&self) -> usize {
        self.truth.height()
    }

    /// Overall and per-region accuracy of a prediction.
    pub fn evaluate(&self, pred: &LabelMap, region: Option<Rect>) -> Result<(Accuracy, Vec<(String, Accuracy)>)> {
        let overall = accuracy(pred, &self.truth, region)?;
        let regions = self
            .regions
            .iter()
            .map(|(n, r)| Ok((n.clone(), accuracy(pred, &self.truth, Some(*r))?)))
            .collect::<Result<Vec<_>>>()?;
        Ok((overall, regions))
    }
}

/// Result of one aspect experiment.
#[derive(Debug, Clone)]
pub struct AspectOutcome {
    pub labels: LabelMap,
    pub metrics: Metrics,
    /// Trained networks (absent for the neighbor-difference baseline).
    pub run: Option<AspectRun>,
}

/// Trains (where applicable), classifies and evaluates one method.
pub fn run_aspect(
    scene: &PreparedScene,
    method: Method,
    hyper: &AspectHyper,
    base: &ReservoirConfig,
    seed: u64,
) -> Result<AspectOutcome> {
    let (mut labels, run, learn, classify) = match method {
        Method::Neighbor => {
            let t0 = Instant::now();
            let tau = neighbor_tau(&scene.diff_ew, &scene.diff_ns, &scene.areas)?;
            let learn = t0.elapsed();
            let t1 = Instant::now();
            let labels = neighbor_difference_classify(&scene.diff_ew, &scene.diff_ns, tau)?;
            (labels, None, learn, t1.elapsed())
        }
        Method::Cvrc | Method::Rvrc => {
            let config = ReservoirConfig {
                value_domain: if method == Method::Cvrc { ValueDomain::Complex } else { ValueDomain::RealPair },
                ..base.clone()
            };
            let run = train_aspect(&scene.diff_ew, &scene.diff_ns, &scene.areas, hyper, &config, seed)?;
            let t1 = Instant::now();
            let labels = classify_aspect(&run, &scene.diff_ew, &scene.diff_ns)?;
            let classify = t1.elapsed();
            let learn = run.learn_time;
            (labels, Some(run), learn, classify)
        }
    };
    aspect::apply_mask(&mut labels, &scene.water_mask)?;
    let (overall, regions) = scene.evaluate(&labels, None)?;
    Ok(AspectOutcome {
        labels,
        metrics: Metrics {
            method: method.name().to_string(),
            overall,
            regions,
            learn_time_s: secs(learn),
            classify_time_s: secs(classify),
        },
        run,
    })
}

fn secs(d: Duration) -> f64 {
    d.as_secs_f64()
}
