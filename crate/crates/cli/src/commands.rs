//! The five subcommands. Each returns the files it wrote plus a short
//! human-readable summary; nothing is written unless the whole command
//! succeeds.

use std::fmt::Write as _;
use std::path::PathBuf;

use cvrc_core::experiments::{
    self, run_aspect, sweep, trace_csv, trace_reservoir, AspectOutcome, LineSpec, Method, Metrics, PreparedScene,
};
use cvrc_core::synth::{Grid, SyntheticScene};
use cvrc_core::{ComplexRaster, Direction, LabelMap, SceneSpec};

use crate::config::RunConfig;
use crate::error::{core, CliError};
use crate::files::{self, Outputs};

/// What a command produced.
#[derive(Debug)]
pub struct Report {
    pub written: Vec<PathBuf>,
    pub summary: String,
}

fn scene_spec(cfg: &RunConfig) -> SceneSpec {
    SceneSpec { seed: cfg.seed, ..cfg.scene.clone() }
}

fn bytes(stage: &'static str, f: impl FnOnce(&mut Vec<u8>) -> cvrc_core::Result<()>) -> Result<Vec<u8>, CliError> {
    let mut buf = Vec::new();
    f(&mut buf).map_err(core(stage))?;
    Ok(buf)
}

fn finish(out: Outputs, cfg: &RunConfig, summary: String) -> Result<Report, CliError> {
    Ok(Report { written: out.commit(&cfg.out)?, summary })
}

/// Loaded or generated inputs of the aspect-style commands.
struct Inputs {
    scene: PreparedScene,
    slope_truth: Option<Grid>,
}

fn load_inputs(cfg: &RunConfig, need_slope: bool) -> Result<Inputs, CliError> {
    match &cfg.input {
        Some(dir) => {
            let mut names = vec![files::INTERFEROGRAM, files::TRUTH];
            if need_slope {
                names.push(files::SLOPE_TRUTH);
            }
            files::require_inputs(dir, &names)?;
            files::prepare_out_dir(&cfg.out)?;
            let ifg = ComplexRaster::read_from(files::open(&dir.join(files::INTERFEROGRAM))?)
                .map_err(core("reading interferogram"))?;
            let truth = LabelMap::read_pgm(files::open(&dir.join(files::TRUTH))?).map_err(core("reading truth"))?;
            let mask = truth.labels().iter().map(|&l| l == LabelMap::MASKED).collect();
            let slope_truth = if need_slope {
                Some(Grid::read_from(files::open(&dir.join(files::SLOPE_TRUTH))?).map_err(core("reading slope truth"))?)
            } else {
                None
            };
            let scene = PreparedScene::new(&ifg, truth, mask, cfg.teacher_areas.clone(), cfg.regions.clone())
                .map_err(core("scene"))?;
            Ok(Inputs { scene, slope_truth })
        }
        None => {
            files::prepare_out_dir(&cfg.out)?;
            let synth = SyntheticScene::generate(&scene_spec(cfg), &cfg.teacher_areas).map_err(core("synth"))?;
            let scene = PreparedScene::from_scene(&synth, cfg.teacher_areas.clone(), cfg.regions.clone())
                .map_err(core("scene"))?;
            Ok(Inputs { scene, slope_truth: need_slope.then_some(synth.truth.slope_ew) })
        }
    }
}

/// Generates the scene and writes the DEM, interferogram, both difference
/// rasters, the aspect truth and the slope truth.
pub fn cmd_synth(cfg: &RunConfig) -> Result<Report, CliError> {
    let spec = scene_spec(cfg);
    files::prepare_out_dir(&cfg.out)?;
    let scene = SyntheticScene::generate(&spec, &cfg.teacher_areas).map_err(core("synth"))?;
    let ew = cvrc_core::raster::phase_difference(&scene.interferogram, Direction::EastWest).map_err(core("synth"))?;
    let ns = cvrc_core::raster::phase_difference(&scene.interferogram, Direction::NorthSouth).map_err(core("synth"))?;

    let mut out = Outputs::default();
    out.add(files::DEM, bytes("writing DEM", |b| scene.dem.write_to(b))?);
    out.add(files::INTERFEROGRAM, bytes("writing interferogram", |b| scene.interferogram.write_to(b))?);
    out.add(files::DIFF_EW, bytes("writing differences", |b| ew.write_to(b))?);
    out.add(files::DIFF_NS, bytes("writing differences", |b| ns.write_to(b))?);
    out.add(files::TRUTH, bytes("writing truth", |b| scene.truth.aspect.write_pgm(b))?);
    out.add(files::SLOPE_TRUTH, bytes("writing slope truth", |b| scene.truth.slope_ew.write_to(b))?);
    let summary = format!(
        "synthesized {}x{} scene (seed {}, coherence {}, tau {:.3} m)",
        spec.width, spec.height, cfg.seed, spec.coherence, scene.truth.tau
    );
    finish(out, cfg, summary)
}

fn report_text(cfg: &RunConfig, m: &Metrics) -> String {
    let mut s = String::new();
    let h = &cfg.hyper;
    let _ = writeln!(s, "seed: {}", cfg.seed);
    if cfg.method != Method::Neighbor {
        let r = &cfg.reservoir;
        let _ = writeln!(
            s,
            "reservoir: n_res {} sigma_d {} alpha {} {:?}",
            r.n_res, r.desired_spectral_radius, r.leak_rate, r.dynamics_mode
        );
        let _ = writeln!(s, "frames: {}x{}, {} per teacher area, lambda {:e}", h.n_w, h.n_t, h.per_area, h.lambda);
    }
    s.push_str(&m.report());
    s
}

fn trace_file(inputs: &Inputs, outcome: &AspectOutcome, line: LineSpec) -> Result<Vec<u8>, CliError> {
    let run = outcome
        .run
        .as_ref()
        .ok_or_else(|| CliError::Usage("trace: the neighbor-difference baseline has no reservoir to trace".into()))?;
    let steps = trace_reservoir(run, &inputs.scene.diff_ew, &inputs.scene.diff_ns, &inputs.scene.truth, line)
        .map_err(core("trace"))?;
    Ok(trace_csv(&steps).into_bytes())
}

/// Trains (unless the baseline needs no training), classifies, evaluates,
/// and writes models, labels, metrics and an optional trace.
pub fn cmd_aspect(cfg: &RunConfig) -> Result<Report, CliError> {
    if cfg.trace.is_some() && cfg.method == Method::Neighbor {
        return Err(CliError::Usage("--trace needs a reservoir method, not the neighbor baseline".into()));
    }
    let inputs = load_inputs(cfg, false)?;
    let outcome =
        run_aspect(&inputs.scene, cfg.method, &cfg.hyper, &cfg.reservoir, cfg.seed).map_err(core("aspect"))?;

    let mut out = Outputs::default();
    if let Some(run) = &outcome.run {
        out.add("model_ew.cvm", bytes("writing model", |b| run.ew.readout.write_to(b))?);
        out.add("model_ns.cvm", bytes("writing model", |b| run.ns.readout.write_to(b))?);
    }
    out.add("labels.pgm", bytes("writing labels", |b| outcome.labels.write_pgm(b))?);
    let m = &outcome.metrics;
    out.add("metrics.csv", format!("{}\n{}", Metrics::csv_header(), m.csv_rows()).into_bytes());
    out.add("report.txt", report_text(cfg, m).into_bytes());
    if let Some(line) = cfg.trace {
        out.add("trace.csv", trace_file(&inputs, &outcome, line)?);
    }
    let summary = format!(
        "{}: overall {:.2}% (learn {:.3} s, classify {:.3} s)",
        m.method, m.overall.percent, m.learn_time_s, m.classify_time_s
    );
    finish(out, cfg, summary)
}

/// Trains the aspect networks and writes only the per-step trace.
pub fn cmd_trace(cfg: &RunConfig) -> Result<Report, CliError> {
    let line = cfg
        .trace
        .ok_or_else(|| CliError::Usage("trace: no scan line given (use --trace or aspect.trace)".into()))?;
    if cfg.method == Method::Neighbor {
        return Err(CliError::Usage("trace needs a reservoir method, not the neighbor baseline".into()));
    }
    let inputs = load_inputs(cfg, false)?;
    let outcome =
        run_aspect(&inputs.scene, cfg.method, &cfg.hyper, &cfg.reservoir, cfg.seed).map_err(core("aspect"))?;
    let mut out = Outputs::default();
    out.add("trace.csv", trace_file(&inputs, &outcome, line)?);
    finish(out, cfg, format!("traced {line:?} with {}", cfg.method.name()))
}

/// Trains the slope regressor and writes one CSV per evaluation row plus a
/// summary.
pub fn cmd_slope(cfg: &RunConfig) -> Result<Report, CliError> {
    if cfg.slope.eval_rows.is_empty() {
        return Err(CliError::Usage("slope: no evaluation rows".into()));
    }
    let inputs = load_inputs(cfg, true)?;
    let truth = inputs.slope_truth.as_ref().expect("slope truth requested");
    let diff = &inputs.scene.diff_ew;
    let run = experiments::train_slope(diff, truth, &cfg.slope, cfg.seed).map_err(core("slope training"))?;

    let mut out = Outputs::default();
    let mut summary = String::from("row,seen,mae_cvrc_deg,mae_neighbor_deg,rmse_cvrc_deg,rmse_neighbor_deg\n");
    let mut text = format!("learn {:.3} s", run.learn_time.as_secs_f64());
    for &row in &cfg.slope.eval_rows {
        let eval = experiments::evaluate_slope_row(&run, diff, truth, row, cfg.scene.height_ambiguity)
            .map_err(core("slope evaluation"))?;
        let (mae_c, mae_n) = eval.mean_abs_error();
        let (rmse_c, rmse_n) = eval.rmse();
        let _ = writeln!(summary, "{row},{},{mae_c:.6},{mae_n:.6},{rmse_c:.6},{rmse_n:.6}", eval.seen);
        let _ = write!(text, "; row {row}: cvrc {mae_c:.2} deg, neighbor {mae_n:.2} deg");
        out.add(format!("slope_row{row}.csv"), eval.csv().into_bytes());
    }
    out.add("slope_summary.csv", summary.into_bytes());
    out.add("slope_model.cvm", bytes("writing model", |b| run.readout.write_to(b))?);
    finish(out, cfg, text)
}

/// Neuron-count and frame-size sweeps as two CSV tables.
pub fn cmd_sweep(cfg: &RunConfig) -> Result<Report, CliError> {
    if cfg.sweep_neurons.is_empty() || cfg.sweep_frames.is_empty() {
        return Err(CliError::Usage("sweep: neuron and frame grids must be nonempty".into()));
    }
    let inputs = load_inputs(cfg, false)?;
    let neurons = experiments::sweep_neurons(&inputs.scene, &cfg.sweep_neurons, &cfg.hyper, &cfg.reservoir, cfg.seed)
        .map_err(core("neuron sweep"))?;
    let sizes: Vec<(usize, usize)> = cfg
        .sweep_frames
        .iter()
        .flat_map(|&w| cfg.sweep_frames.iter().map(move |&t| (w, t)))
        .collect();
    let frames = experiments::sweep_frames(&inputs.scene, &sizes, &cfg.hyper, &cfg.reservoir, cfg.seed)
        .map_err(core("frame sweep"))?;

    let mut out = Outputs::default();
    out.add("sweep_neurons.csv", sweep::neuron_sweep_csv(&neurons).into_bytes());
    out.add("sweep_frames.csv", sweep::frame_sweep_csv(&frames).into_bytes());
    let best = frames
        .iter()
        .max_by(|a, b| a.accuracy.percent.total_cmp(&b.accuracy.percent))
        .map(|r| format!("best frame size {}x{} ({:.2}%)", r.n_w, r.n_t, r.accuracy.percent))
        .unwrap_or_default();
    finish(out, cfg, format!("{} neuron rows, {} frame rows; {best}", neurons.len(), frames.len()))
}
