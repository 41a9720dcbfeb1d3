//! Spin-basis OTOC: boundary vectors, the evolution driver and the relaxation
//! series.

use crate::engine::{
    apply_layer, ChainState, ChainStateDense, ChainStateTT, ProductVector, SinkSet, TruncationPolicy,
};
use crate::error::{Error, Result};
use crate::gates::{param_transition, Flavor, GateParams, TransitionMatrix4};
use crate::scalar::{LogValue, Real};
use crate::schedule::{build_schedule, Boundary, Geometry, LayerSchedule};

/// Natural log of the smallest magnitude still reported.
pub const SIGNAL_FLOOR_LN: f64 = -690.775_527_898_213_7; // ln(1e-300)

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum EngineKind {
    #[default]
    TensorTrain,
    Dense,
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct EngineOptions {
    pub kind: EngineKind,
    pub policy: TruncationPolicy,
}

impl EngineOptions {
    pub fn dense() -> Self {
        Self { kind: EngineKind::Dense, policy: TruncationPolicy::default() }
    }

    pub fn tt(chi: usize, cutoff: f64) -> Self {
        Self { kind: EngineKind::TensorTrain, policy: TruncationPolicy { chi, cutoff, ..Default::default() } }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OtocConfig<T> {
    pub params: GateParams<T>,
    pub geometry: Geometry,
    pub boundary: Boundary,
    pub len: usize,
    /// Total time in time units (one brickwork layer = 1).
    pub total_time: usize,
    pub x_v: usize,
    pub x_w: usize,
}

impl<T: Real> OtocConfig<T> {
    /// Dual-unitary `(1, 1, a_z)` circuit with `x_v = 0` and `x_w = 4`
    /// (or `L / 4` on very short chains).
    pub fn dual_unitary(a_z: T, geometry: Geometry, boundary: Boundary, len: usize, total_time: usize) -> Result<Self> {
        let cfg = Self {
            params: GateParams::dual_unitary(a_z)?,
            geometry,
            boundary,
            len,
            total_time,
            x_v: 0,
            x_w: 4.min(len / 4).max(1),
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn with_sites(mut self, x_v: usize, x_w: usize) -> Result<Self> {
        self.x_v = x_v;
        self.x_w = x_w;
        self.validate()?;
        Ok(self)
    }

    pub fn validate(&self) -> Result<()> {
        if self.x_v >= self.len || self.x_w >= self.len {
            return Err(Error::InvalidParameter(format!(
                "operator sites x_v = {}, x_w = {} must lie in [0, {})",
                self.x_v, self.x_w, self.len
            )));
        }
        if self.x_v == self.x_w {
            return Err(Error::InvalidParameter("x_v and x_w must differ".into()));
        }
        self.schedule().map(|_| ())
    }

    pub fn schedule(&self) -> Result<LayerSchedule> {
        build_schedule(self.geometry, self.boundary, self.len, self.total_time)
    }
}

/// `-` at `x_v`, `+` elsewhere.
pub fn top_state<T: Real>(len: usize, x_v: usize) -> ProductVector<T> {
    let mut config = vec![0u8; len];
    config[x_v] = 1;
    ProductVector::basis(&config)
}

/// Bra that weights each `-` by `q` and keeps only `+` at `x_w`.
pub fn bottom_bra<T: Real>(len: usize, x_w: usize, q: u32) -> ProductVector<T> {
    let q = T::lit(q as f64);
    let mut sites = vec![[T::one(), q]; len];
    sites[x_w] = [T::one(), T::zero()];
    ProductVector::new(sites)
}

/// `sum_z C_z q^{n_-(z)} [z_{x_w} = +]` in log form.
pub fn bottom_overlap<T: Real, S: ChainState<T>>(state: &S, x_w: usize, q: u32) -> LogValue<T> {
    state.log_overlap(&bottom_bra(state.len(), x_w, q))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RunStatus {
    Completed,
    /// The tracked value fell below `exp(SIGNAL_FLOOR_LN)` at time `t`.
    SignalFloor { t: usize },
    /// The accumulated truncation error exceeded the signal at time `t`.
    NoiseFloor { t: usize },
}

impl RunStatus {
    pub fn label(&self) -> String {
        match self {
            RunStatus::Completed => "completed".into(),
            RunStatus::SignalFloor { t } => format!("signal-floor at t={t}"),
            RunStatus::NoiseFloor { t } => format!("noise-floor at t={t}"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SeriesPoint {
    pub t: usize,
    /// Natural log of the magnitude (`-inf` for an exact zero).
    pub ln_abs: f64,
    pub sign: i8,
    pub trunc_err: f64,
}

impl SeriesPoint {
    pub fn log10_abs(&self) -> f64 {
        self.ln_abs / std::f64::consts::LN_10
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RelaxationSeries {
    pub points: Vec<SeriesPoint>,
    pub status: RunStatus,
}

impl RelaxationSeries {
    pub fn times(&self) -> Vec<usize> {
        self.points.iter().map(|p| p.t).collect()
    }

    pub fn ln_values(&self) -> Vec<f64> {
        self.points.iter().map(|p| p.ln_abs).collect()
    }

    pub fn end_time(&self) -> usize {
        self.points.last().map_or(0, |p| p.t)
    }
}

/// Everything that defines one Markov run.
#[derive(Debug, Clone)]
pub struct MarkovRun<'a, T> {
    pub schedule: &'a LayerSchedule,
    pub matrix: &'a TransitionMatrix4<T>,
    pub sinks: &'a SinkSet<T>,
    pub bra: &'a ProductVector<T>,
}

fn with_step(err: Error, t: usize) -> Error {
    match err {
        Error::TruncationCeiling { error, ceiling, .. } => Error::TruncationCeiling { step: t, error, ceiling },
        Error::SignalLost { .. } => Error::SignalLost { step: t },
        other => other,
    }
}

fn point<T: Real, S: ChainState<T>>(state: &S, bra: &ProductVector<T>, t: usize) -> SeriesPoint {
    let v = state.log_overlap(bra);
    SeriesPoint { t, ln_abs: v.ln_abs.as_f64(), sign: v.sign, trunc_err: state.truncation_error().as_f64() }
}

/// Typical size of the overlap error caused by discarded weight: the overlap
/// of the bra with a vector of norm `sqrt(trunc_err)` spread evenly over all
/// `2^L` configurations. The Cauchy-Schwarz bound `sqrt(trunc_err) |bra|` is
/// reached only when the discarded weight is aligned with the bra and stops
/// long runs far too early.
fn noise_estimate<T: Real>(trunc_err: T, bra: &ProductVector<T>) -> f64 {
    let ln_bra: f64 = bra.sites.iter().map(|s| (s[0] * s[0] + s[1] * s[1]).sqrt().as_f64().ln()).sum();
    let ln_spread = -0.5 * bra.len() as f64 * std::f64::consts::LN_2;
    (0.5 * trunc_err.as_f64().ln() + ln_bra + ln_spread).exp()
}

/// Evolves `state` tick by tick. After each tick the sinks are removed, the
/// state is renormalized and `visit` sees it. Returns the final status.
pub fn evolve<T: Real, S: ChainState<T>>(
    state: &mut S,
    schedule: &LayerSchedule,
    matrix: &TransitionMatrix4<T>,
    sinks: &SinkSet<T>,
    mut visit: impl FnMut(usize, &S) -> Result<bool>,
) -> Result<RunStatus> {
    for tick in schedule.ticks() {
        let t = tick.time;
        apply_layer(state, tick.bonds, matrix).map_err(|e| with_step(e, t))?;
        if !sinks.is_empty() {
            state.subtract_sinks(sinks);
        }
        match state.renormalize() {
            Ok(_) => {}
            Err(Error::SignalLost { .. }) => return Ok(RunStatus::SignalFloor { t }),
            Err(e) => return Err(with_step(e, t)),
        }
        if !visit(t, state)? {
            return Ok(RunStatus::Completed);
        }
    }
    Ok(RunStatus::Completed)
}

/// Runs a Markov evolution and records `<bra|state(t)>` at every time unit,
/// starting with `t = 0`.
pub fn run_series<T: Real, S: ChainState<T>>(state: S, run: &MarkovRun<'_, T>) -> Result<RelaxationSeries> {
    run_series_with_state(state, run).map(|(series, _)| series)
}

/// Like [`run_series`], also returning the state at the last evolved tick.
pub fn run_series_with_state<T: Real, S: ChainState<T>>(
    mut state: S,
    run: &MarkovRun<'_, T>,
) -> Result<(RelaxationSeries, S)> {
    if !run.sinks.is_empty() {
        state.subtract_sinks(run.sinks);
    }
    state.renormalize().map_err(|e| with_step(e, 0))?;
    let mut points = vec![point(&state, run.bra, 0)];
    let mut stop = None;
    let status = evolve(&mut state, run.schedule, run.matrix, run.sinks, |t, s| {
        let p = point(s, run.bra, t);
        if p.sign == 0 || p.ln_abs < SIGNAL_FLOOR_LN {
            stop = Some(RunStatus::SignalFloor { t });
            return Ok(false);
        }
        let raw = s.overlap(run.bra).abs().as_f64();
        let err = s.truncation_error();
        if err > T::zero() && raw < noise_estimate(err, run.bra) {
            stop = Some(RunStatus::NoiseFloor { t });
            return Ok(false);
        }
        points.push(p);
        Ok(true)
    })?;
    Ok((RelaxationSeries { points, status: stop.unwrap_or(status) }, state))
}

/// Runs with the engine selected in `opts`.
pub fn run_with_engine<T: Real>(
    initial: &ProductVector<T>,
    flavor: Flavor,
    run: &MarkovRun<'_, T>,
    opts: &EngineOptions,
) -> Result<RelaxationSeries> {
    match opts.kind {
        EngineKind::TensorTrain => run_series(ChainStateTT::from_product(initial, flavor, opts.policy)?, run),
        EngineKind::Dense => run_series(ChainStateDense::from_product(initial, flavor)?, run),
    }
}

/// Sink-subtracted spin-basis OTOC series.
pub fn run_otoc<T: Real>(config: &OtocConfig<T>, opts: &EngineOptions) -> Result<RelaxationSeries> {
    config.validate()?;
    let schedule = config.schedule()?;
    let matrix = param_transition(&config.params)?;
    let sinks = SinkSet::spin(config.len);
    let bra = bottom_bra(config.len, config.x_w, config.params.q);
    let run = MarkovRun { schedule: &schedule, matrix: &matrix, sinks: &sinks, bra: &bra };
    run_with_engine(&top_state(config.len, config.x_v), Flavor::Spin, &run, opts)
}

/// Tensor-train spin OTOC that also hands back the final state, for
/// checkpointing.
pub fn run_otoc_with_state<T: Real>(
    config: &OtocConfig<T>,
    policy: TruncationPolicy,
) -> Result<(RelaxationSeries, ChainStateTT<T>)> {
    config.validate()?;
    let schedule = config.schedule()?;
    let matrix = param_transition(&config.params)?;
    let sinks = SinkSet::spin(config.len);
    let bra = bottom_bra(config.len, config.x_w, config.params.q);
    let run = MarkovRun { schedule: &schedule, matrix: &matrix, sinks: &sinks, bra: &bra };
    let state = ChainStateTT::from_product(&top_state(config.len, config.x_v), Flavor::Spin, policy)?;
    run_series_with_state(state, &run)
}
