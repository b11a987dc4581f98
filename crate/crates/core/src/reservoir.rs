//! Leaky echo-state reservoir with an amplitude-saturating, phase-preserving
//! activation, plus the real-valued baseline that runs on split real and
//! imaginary channels.

use num_complex::Complex64;
use rand::Rng;

use crate::cxnum::{self, CMatrix, CVector, ZERO};
use crate::error::{Error, Result};
use crate::seed;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum DynamicsMode {
    /// `x_t = (1-α) x_{t-1} + α f(z_t)`
    #[default]
    Simplified,
    /// `x_t = (1-αδ/c) x_{t-1} + (δ/c) f(z_t)`
    General,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ValueDomain {
    /// Complex weights, states and activation.
    #[default]
    Complex,
    /// Real-valued baseline: inputs split into `[re.., im..]`, real weights,
    /// real `tanh`.
    RealPair,
}

impl ValueDomain {
    pub fn as_byte(self) -> u8 {
        match self {
            ValueDomain::Complex => 0,
            ValueDomain::RealPair => 1,
        }
    }

    pub fn from_byte(b: u8) -> Option<Self> {
        match b {
            0 => Some(ValueDomain::Complex),
            1 => Some(ValueDomain::RealPair),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReservoirConfig {
    pub n_in: usize,
    pub n_res: usize,
    /// Spectral radius `W_res` is scaled to right after drawing.
    pub init_spectral_radius: f64,
    pub desired_spectral_radius: f64,
    pub leak_rate: f64,
    pub dynamics_mode: DynamicsMode,
    pub delta: f64,
    pub time_const: f64,
    pub input_scale: f64,
    pub seed: u64,
    pub value_domain: ValueDomain,
}

impl Default for ReservoirConfig {
    /// Aspect-classification settings: 5 inputs, 5 neurons, initial radius
    /// 0.16 normalized to 0.10, leak rate 0.30.
    fn default() -> Self {
        Self {
            n_in: 5,
            n_res: 5,
            init_spectral_radius: 0.16,
            desired_spectral_radius: 0.10,
            leak_rate: 0.30,
            dynamics_mode: DynamicsMode::Simplified,
            delta: 1.0,
            time_const: 1.0,
            input_scale: 1.0,
            seed: 0,
            value_domain: ValueDomain::Complex,
        }
    }
}

impl ReservoirConfig {
    /// Slope-estimation settings: 300 neurons, radius 0.90, leak rate 0.80.
    pub fn slope_default() -> Self {
        Self {
            n_res: 300,
            desired_spectral_radius: 0.90,
            leak_rate: 0.80,
            ..Self::default()
        }
    }

    /// Width of the vectors the reservoir consumes per step.
    pub fn input_width(&self) -> usize {
        match self.value_domain {
            ValueDomain::Complex => self.n_in,
            ValueDomain::RealPair => 2 * self.n_in,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_in == 0 || self.n_res == 0 {
            return Err(Error::invalid("n_in and n_res must be positive"));
        }
        if !(0.0..=1.0).contains(&self.leak_rate) {
            return Err(Error::invalid(format!("leak rate {} outside [0, 1]", self.leak_rate)));
        }
        for (name, v) in [
            ("init_spectral_radius", self.init_spectral_radius),
            ("desired_spectral_radius", self.desired_spectral_radius),
            ("input_scale", self.input_scale),
        ] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::invalid(format!("{name} must be positive, got {v}")));
            }
        }
        if self.dynamics_mode == DynamicsMode::General {
            if !(self.delta > 0.0 && self.time_const > 0.0) {
                return Err(Error::invalid("delta and time_const must be positive"));
            }
            if self.delta / self.time_const > 1.0 {
                return Err(Error::invalid(format!(
                    "delta/time_const = {} exceeds 1",
                    self.delta / self.time_const
                )));
            }
        }
        Ok(())
    }

    /// Maps a raw complex input to what the reservoir consumes: unchanged in
    /// the complex domain, `[re.., im..]` for the real baseline.
    pub fn encode_input(&self, u: &CVector) -> CVector {
        match self.value_domain {
            ValueDomain::Complex => u.clone(),
            ValueDomain::RealPair => {
                let mut out = Vec::with_capacity(2 * u.len());
                out.extend(u.iter().map(|v| Complex64::new(v.re, 0.0)));
                out.extend(u.iter().map(|v| Complex64::new(v.im, 0.0)));
                CVector::from_vec(out).expect("non-empty input")
            }
        }
    }
}

/// Fixed input and recurrent weights. Never trained.
#[derive(Debug, Clone, PartialEq)]
pub struct ReservoirWeights {
    w_in: CMatrix,
    w_res: CMatrix,
    provenance: Vec<String>,
}

impl ReservoirWeights {
    /// Wraps explicit matrices, e.g. hand-built ones in tests.
    pub fn from_parts(w_in: CMatrix, w_res: CMatrix) -> Result<Self> {
        if !w_res.is_square() || w_in.rows() != w_res.rows() {
            return Err(Error::dim(
                "ReservoirWeights::from_parts",
                format!(
                    "w_in {}x{}, w_res {}x{}",
                    w_in.rows(),
                    w_in.cols(),
                    w_res.rows(),
                    w_res.cols()
                ),
            ));
        }
        Ok(Self {
            w_in,
            w_res,
            provenance: Vec::new(),
        })
    }

    pub fn w_in(&self) -> &CMatrix {
        &self.w_in
    }

    pub fn w_res(&self) -> &CMatrix {
        &self.w_res
    }

    pub fn n_res(&self) -> usize {
        self.w_res.rows()
    }

    /// Notes about re-draws made during initialization.
    pub fn provenance(&self) -> &[String] {
        &self.provenance
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReservoirState {
    pub x: CVector,
    pub t: u64,
}

impl ReservoirState {
    pub fn zeros(n_res: usize) -> Self {
        Self {
            x: CVector::zeros(n_res),
            t: 0,
        }
    }
}

fn draw_entry(rng: &mut impl Rng, domain: ValueDomain) -> Complex64 {
    match domain {
        ValueDomain::Complex => {
            // Uniform over the unit disk.
            let r = rng.random::<f64>().sqrt();
            let theta = rng.random_range(0.0..std::f64::consts::TAU);
            Complex64::from_polar(r, theta)
        }
        ValueDomain::RealPair => Complex64::new(rng.random_range(-1.0..=1.0), 0.0),
    }
}

/// Draws `W_in`, `W_res` from the config seed, scales `W_res` to the initial
/// spectral radius, then normalizes it to the desired one. A draw that is
/// all zeros, or whose spectral radius power iteration cannot resolve (two
/// dominant eigenvalues of almost equal modulus), is replaced by a draw
/// from the next sub-seed and noted in the provenance log.
pub fn init_weights(config: &ReservoirConfig) -> Result<ReservoirWeights> {
    const MAX_DRAWS: u32 = 64;
    config.validate()?;
    let width = config.input_width();
    let mut provenance = Vec::new();
    let mut attempt = 0u32;
    let (w_in, w_res) = loop {
        let mut rng = seed::rng(seed::derive(config.seed, &format!("reservoir-weights/{attempt}")));
        let w_in = CMatrix::from_fn(config.n_res, width, |_, _| draw_entry(&mut rng, config.value_domain));
        let w_res =
            CMatrix::from_fn(config.n_res, config.n_res, |_, _| draw_entry(&mut rng, config.value_domain));
        let problem = if w_in.is_zero() || w_res.is_zero() {
            "produced a zero matrix".to_string()
        } else {
            match normalize_spectral(&w_res, config.init_spectral_radius) {
                Ok(w_res) => break (w_in, w_res),
                Err(e @ Error::NonConvergence { .. }) if attempt + 1 < MAX_DRAWS => format!("rejected: {e}"),
                Err(e) => return Err(e),
            }
        };
        if attempt + 1 >= MAX_DRAWS {
            return Err(Error::invalid(format!("no usable reservoir draw in {MAX_DRAWS} attempts")));
        }
        provenance.push(format!("draw {attempt} {problem}; re-drawn with sub-seed {}", attempt + 1));
        attempt += 1;
    };

    let w_res = normalize_spectral(&w_res, config.desired_spectral_radius)?;
    Ok(ReservoirWeights {
        w_in,
        w_res,
        provenance,
    })
}

/// `W ← (σ_d / σ(W)) · W`.
pub fn normalize_spectral(w: &CMatrix, sigma_d: f64) -> Result<CMatrix> {
    if !(sigma_d > 0.0) {
        return Err(Error::invalid(format!("desired spectral radius must be positive, got {sigma_d}")));
    }
    let sigma = cxnum::spectral_radius(w, cxnum::SPECTRAL_TOL, cxnum::SPECTRAL_MAX_ITER)?;
    if sigma == 0.0 {
        return Err(Error::invalid("cannot normalize a matrix with zero spectral radius"));
    }
    Ok(w.scale(Complex64::new(sigma_d / sigma, 0.0)))
}

/// `tanh(|z|) · exp(j arg z)`, with `activate(0) = 0`.
#[inline]
pub fn activate(z: Complex64) -> Complex64 {
    let r = z.norm();
    if r == 0.0 {
        return ZERO;
    }
    z * (r.tanh() / r)
}

#[inline]
fn activate_in(domain: ValueDomain, z: Complex64) -> Complex64 {
    match domain {
        ValueDomain::Complex => activate(z),
        ValueDomain::RealPair => Complex64::new(z.re.tanh(), 0.0),
    }
}

/// Reusable stepping engine; holds scratch space so long scans do not
/// allocate per step.
#[derive(Debug)]
pub struct Stepper<'a> {
    weights: &'a ReservoirWeights,
    config: &'a ReservoirConfig,
    keep: f64,
    gain: f64,
    z: Vec<Complex64>,
    scaled: Vec<Complex64>,
}

impl<'a> Stepper<'a> {
    pub fn new(weights: &'a ReservoirWeights, config: &'a ReservoirConfig) -> Result<Self> {
        config.validate()?;
        if weights.n_res() != config.n_res || weights.w_in.cols() != config.input_width() {
            return Err(Error::dim(
                "Stepper::new",
                format!(
                    "weights are {}x{} but config expects {}x{}",
                    weights.n_res(),
                    weights.w_in.cols(),
                    config.n_res,
                    config.input_width()
                ),
            ));
        }
        let (keep, gain) = match config.dynamics_mode {
            DynamicsMode::Simplified => (1.0 - config.leak_rate, config.leak_rate),
            DynamicsMode::General => {
                let r = config.delta / config.time_const;
                (1.0 - config.leak_rate * r, r)
            }
        };
        Ok(Self {
            weights,
            config,
            keep,
            gain,
            z: vec![ZERO; config.n_res],
            scaled: vec![ZERO; config.input_width()],
        })
    }

    pub fn input_width(&self) -> usize {
        self.scaled.len()
    }

    /// Advances `state` by one input.
    pub fn advance(&mut self, state: &mut ReservoirState, u: &[Complex64]) -> Result<()> {
        if u.len() != self.scaled.len() {
            return Err(Error::dim(
                "step",
                format!("input of length {}, expected {}", u.len(), self.scaled.len()),
            ));
        }
        if state.x.len() != self.z.len() {
            return Err(Error::dim(
                "step",
                format!("state of length {}, expected {}", state.x.len(), self.z.len()),
            ));
        }
        let s = self.config.input_scale;
        for (d, &v) in self.scaled.iter_mut().zip(u) {
            *d = v * s;
        }
        self.weights.w_res.mul_vec_into(state.x.as_slice(), &mut self.z);
        self.weights.w_in.mul_vec_acc(&self.scaled, &mut self.z);

        let domain = self.config.value_domain;
        if self.gain == 1.0 && self.keep == 0.0 {
            for (x, &z) in state.x.as_mut_slice().iter_mut().zip(&self.z) {
                *x = activate_in(domain, z);
            }
        } else {
            for (x, &z) in state.x.as_mut_slice().iter_mut().zip(&self.z) {
                *x = *x * self.keep + activate_in(domain, z) * self.gain;
            }
        }
        state.t += 1;
        Ok(())
    }
}

/// One reservoir update.
pub fn step(
    weights: &ReservoirWeights,
    state: &ReservoirState,
    u: &CVector,
    config: &ReservoirConfig,
) -> Result<ReservoirState> {
    let mut next = state.clone();
    Stepper::new(weights, config)?.advance(&mut next, u.as_slice())?;
    Ok(next)
}

/// Drives the reservoir through `sequence`, copying the state after each
/// step listed in `collect_at`.
pub fn run_collect(
    weights: &ReservoirWeights,
    config: &ReservoirConfig,
    sequence: &[CVector],
    collect_at: &[usize],
    initial: ReservoirState,
) -> Result<(Vec<CVector>, ReservoirState)> {
    if let Some(w) = collect_at.windows(2).find(|w| w[0] >= w[1]) {
        return Err(Error::invalid(format!(
            "collection indices must be strictly increasing ({} then {})",
            w[0], w[1]
        )));
    }
    if let Some(&last) = collect_at.last() {
        if last >= sequence.len() {
            return Err(Error::invalid(format!(
                "collection index {last} out of range for sequence of length {}",
                sequence.len()
            )));
        }
    }
    let mut stepper = Stepper::new(weights, config)?;
    if let Some((i, u)) = sequence.iter().enumerate().find(|(_, u)| u.len() != stepper.input_width()) {
        return Err(Error::dim(
            "run_collect",
            format!("input {i} has length {}, expected {}", u.len(), stepper.input_width()),
        ));
    }

    let mut state = initial;
    let mut out = Vec::with_capacity(collect_at.len());
    let mut next = collect_at.iter().peekable();
    for (i, u) in sequence.iter().enumerate() {
        stepper.advance(&mut state, u.as_slice())?;
        if next.peek() == Some(&&i) {
            out.push(state.x.clone());
            next.next();
        }
    }
    Ok((out, state))
}

/// Full state trace: the state after every step.
pub fn run_trace(
    weights: &ReservoirWeights,
    config: &ReservoirConfig,
    sequence: &[CVector],
    initial: ReservoirState,
) -> Result<(Vec<CVector>, ReservoirState)> {
    let all: Vec<usize> = (0..sequence.len()).collect();
    run_collect(weights, config, sequence, &all, initial)
}
