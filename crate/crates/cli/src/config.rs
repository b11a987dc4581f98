//! Plain-text `key = value` run configuration.
//!
//! One setting per line, `#` starts a comment. Keys are grouped by prefix
//! (`scene.`, `reservoir.`, `aspect.`, `slope.`, `sweep.`, `teacher.`,
//! `region.`); anything not listed in [`RunConfig::set`] is rejected.

use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

use cvrc_core::experiments::{AspectHyper, LineSpec, Method, SlopeSpec};
use cvrc_core::synth::{self, Cone, Lake, RoughMountain};
use cvrc_core::{Aspect, DynamicsMode, Rect, ReservoirConfig, SceneSpec, TeacherArea};

/// A config problem: bad syntax, an unknown key or a value out of range.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConfigError(pub String);

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for ConfigError {}

type Result<T> = std::result::Result<T, ConfigError>;

fn err<T>(msg: impl Into<String>) -> Result<T> {
    Err(ConfigError(msg.into()))
}

/// Everything a command needs. Defaults reproduce the reference scene and
/// the published hyperparameters.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub seed: u64,
    /// Directory written by `synth`; when absent the scene is generated in
    /// memory from `scene`.
    pub input: Option<PathBuf>,
    pub out: PathBuf,
    pub scene: SceneSpec,
    pub teacher_areas: Vec<TeacherArea>,
    pub regions: Vec<(String, Rect)>,
    pub reservoir: ReservoirConfig,
    pub hyper: AspectHyper,
    pub method: Method,
    pub trace: Option<LineSpec>,
    pub slope: SlopeSpec,
    pub sweep_neurons: Vec<usize>,
    pub sweep_frames: Vec<usize>,
    custom_regions: bool,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            seed: 1,
            input: None,
            out: PathBuf::from("out"),
            scene: SceneSpec::default(),
            teacher_areas: synth::reference_teacher_areas(),
            regions: synth::reference_regions(),
            reservoir: ReservoirConfig::default(),
            hyper: AspectHyper::default(),
            method: Method::Cvrc,
            trace: None,
            slope: SlopeSpec::default(),
            sweep_neurons: vec![1, 5, 15, 30, 40, 50],
            sweep_frames: vec![1, 5, 50],
            custom_regions: false,
        }
    }
}

fn num<T: FromStr>(key: &str, v: &str) -> Result<T> {
    v.parse().map_err(|_| ConfigError(format!("{key}: cannot parse {v:?}")))
}

fn positive(key: &str, v: &str) -> Result<f64> {
    let x: f64 = num(key, v)?;
    if !(x.is_finite() && x > 0.0) {
        return err(format!("{key}: must be a positive number, got {v}"));
    }
    Ok(x)
}

fn list<T: FromStr>(key: &str, v: &str) -> Result<Vec<T>> {
    if v.trim().is_empty() {
        return Ok(Vec::new());
    }
    v.split(',').map(|p| num(key, p.trim())).collect()
}

fn fixed<const N: usize>(key: &str, v: &str) -> Result<[f64; N]> {
    let vals: Vec<f64> = list(key, v)?;
    vals.try_into()
        .map_err(|_| ConfigError(format!("{key}: expected {N} comma-separated numbers")))
}

fn rect(key: &str, v: &str) -> Result<Rect> {
    let vals: Vec<usize> = list(key, v)?;
    match vals[..] {
        [r, c, h, w] if h > 0 && w > 0 => Ok(Rect::new(r, c, h, w)),
        _ => err(format!("{key}: expected row,col,rows,cols with nonzero size")),
    }
}

fn optional<T>(v: &str, parse: impl FnOnce() -> Result<T>) -> Result<Option<T>> {
    if v.eq_ignore_ascii_case("none") {
        Ok(None)
    } else {
        parse().map(Some)
    }
}

pub fn parse_dynamics(v: &str) -> Result<DynamicsMode> {
    match v {
        "simplified" => Ok(DynamicsMode::Simplified),
        "general" => Ok(DynamicsMode::General),
        _ => err(format!("dynamics: expected simplified or general, got {v:?}")),
    }
}

pub fn parse_method(v: &str) -> Result<Method> {
    Method::parse(v).ok_or_else(|| ConfigError(format!("baseline: expected cvrc, rvrc or neighbor, got {v:?}")))
}

impl RunConfig {
    /// Parses config text on top of the defaults.
    pub fn parse(text: &str) -> Result<Self> {
        let mut cfg = Self::default();
        for (n, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let Some((k, v)) = line.split_once('=') else {
                return err(format!("line {}: expected key = value", n + 1));
            };
            cfg.set(k.trim(), v.trim())
                .map_err(|e| ConfigError(format!("line {}: {e}", n + 1)))?;
        }
        Ok(cfg)
    }

    pub fn set(&mut self, key: &str, v: &str) -> Result<()> {
        match key {
            "seed" => self.seed = num(key, v)?,
            "input" => self.input = Some(PathBuf::from(v)),
            "out" => self.out = PathBuf::from(v),

            "scene.width" => self.scene.width = num(key, v)?,
            "scene.height" => self.scene.height = num(key, v)?,
            "scene.spacing" => {
                let [r, a] = fixed(key, v)?;
                self.scene.spacing = (r, a);
            }
            "scene.flat_height" => self.scene.flat_height = num(key, v)?,
            "scene.cone" => {
                self.scene.cone = optional(v, || {
                    let [r, c, radius, peak] = fixed(key, v)?;
                    Ok(Cone { center: (r, c), base_radius: radius, peak_height: peak })
                })?
            }
            "scene.rough_mountain" => {
                self.scene.rough_mountain = optional(v, || {
                    let [r, c, radius, height, octaves] = fixed(key, v)?;
                    if octaves < 1.0 || octaves.fract() != 0.0 {
                        return err(format!("{key}: octaves must be a positive integer"));
                    }
                    Ok(RoughMountain { center: (r, c), radius, height, octaves: octaves as u32 })
                })?
            }
            "scene.lake" => {
                self.scene.lake = optional(v, || {
                    let [r, c, radius] = fixed(key, v)?;
                    Ok(Lake { center: (r, c), radius })
                })?
            }
            "scene.height_ambiguity" => self.scene.height_ambiguity = positive(key, v)?,
            "scene.coherence" => self.scene.coherence = num(key, v)?,
            "scene.scree_radius" => self.scene.summit_scree_radius = num(key, v)?,

            "reservoir.n_res" => self.reservoir.n_res = num(key, v)?,
            "reservoir.init_radius" => self.reservoir.init_spectral_radius = positive(key, v)?,
            "reservoir.spectral_radius" => self.reservoir.desired_spectral_radius = positive(key, v)?,
            "reservoir.leak_rate" => self.reservoir.leak_rate = num(key, v)?,
            "reservoir.dynamics" => {
                let mode = parse_dynamics(v)?;
                self.reservoir.dynamics_mode = mode;
                self.slope.config.dynamics_mode = mode;
            }
            "reservoir.delta" => self.reservoir.delta = positive(key, v)?,
            "reservoir.time_const" => self.reservoir.time_const = positive(key, v)?,
            "reservoir.input_scale" => self.reservoir.input_scale = positive(key, v)?,

            "aspect.n_w" => self.hyper.n_w = num(key, v)?,
            "aspect.n_t" => self.hyper.n_t = num(key, v)?,
            "aspect.per_area" => self.hyper.per_area = num(key, v)?,
            "aspect.lambda" => self.hyper.lambda = num(key, v)?,
            "aspect.baseline" => self.method = parse_method(v)?,
            "aspect.trace" => {
                self.trace = optional(v, || LineSpec::parse(v).map_err(|e| ConfigError(e.to_string())))?
            }

            "slope.n_res" => self.slope.config.n_res = num(key, v)?,
            "slope.window" => self.slope.config.n_in = num(key, v)?,
            "slope.init_radius" => self.slope.config.init_spectral_radius = positive(key, v)?,
            "slope.spectral_radius" => self.slope.config.desired_spectral_radius = positive(key, v)?,
            "slope.leak_rate" => self.slope.config.leak_rate = num(key, v)?,
            "slope.delay" => self.slope.delay = num(key, v)?,
            "slope.lambda" => self.slope.lambda = num(key, v)?,
            "slope.train_rows" => self.slope.train_rows = list(key, v)?,
            "slope.eval_rows" => self.slope.eval_rows = list(key, v)?,
            "slope.cols" => {
                let (a, b) = v
                    .split_once('-')
                    .ok_or_else(|| ConfigError(format!("{key}: expected FIRST-LAST")))?;
                let (a, b): (usize, usize) = (num(key, a.trim())?, num(key, b.trim())?);
                if a > b {
                    return err(format!("{key}: empty range {v}"));
                }
                self.slope.col_range = (a, b + 1);
            }

            "sweep.neurons" => self.sweep_neurons = list(key, v)?,
            "sweep.frames" => self.sweep_frames = list(key, v)?,

            _ => {
                if let Some(class) = key.strip_prefix("teacher.") {
                    let class = Aspect::parse(class)
                        .ok_or_else(|| ConfigError(format!("{key}: unknown class {class:?}")))?;
                    let r = rect(key, v)?;
                    match self.teacher_areas.iter_mut().find(|a| a.class == class) {
                        Some(a) => a.rect = r,
                        None => self.teacher_areas.push(TeacherArea { rect: r, class }),
                    }
                } else if let Some(name) = key.strip_prefix("region.") {
                    if name.is_empty() || name.contains(',') {
                        return err(format!("{key}: bad region name"));
                    }
                    // The first region in a config replaces the built-in set.
                    if !self.custom_regions {
                        self.regions.clear();
                        self.custom_regions = true;
                    }
                    let r = rect(key, v)?;
                    match self.regions.iter_mut().find(|(n, _)| n == name) {
                        Some(slot) => slot.1 = r,
                        None => self.regions.push((name.to_string(), r)),
                    }
                } else {
                    return err(format!("unknown key {key:?}"));
                }
            }
        }
        Ok(())
    }

    /// Checks that do not need the scene: reservoir and scene specs and grid
    /// lists.
    pub fn validate(&self) -> Result<()> {
        if self.input.is_none() {
            self.scene.validate().map_err(|e| ConfigError(format!("scene: {e}")))?;
        }
        let reservoir = ReservoirConfig { n_in: self.hyper.n_w, ..self.reservoir.clone() };
        reservoir.validate().map_err(|e| ConfigError(format!("reservoir: {e}")))?;
        self.slope.config.validate().map_err(|e| ConfigError(format!("slope: {e}")))?;
        let AspectHyper { n_w, n_t, per_area, lambda } = self.hyper;
        if n_w == 0 || n_t == 0 || per_area == 0 {
            return err("aspect: n_w, n_t and per_area must be positive");
        }
        for (name, lambda) in [("aspect", lambda), ("slope", self.slope.lambda)] {
            if !(lambda.is_finite() && lambda >= 0.0) {
                return err(format!("{name}.lambda must be finite and non-negative"));
            }
        }
        if self.sweep_neurons.contains(&0) || self.sweep_frames.contains(&0) {
            return err("sweep grids must not contain 0");
        }
        Ok(())
    }
}
