//! Dominant states, dominant trajectories and magnetization heatmaps.

use crate::engine::{
    apply_layer_transposed, config_of, ChainState, ChainStateDense, ChainStateTT, ProductVector,
    SinkSet, DENSE_MAX_SITES,
};
use crate::error::{Error, Result};
use crate::gates::{modified_transition, param_transition, Flavor, TransitionMatrix4};
use crate::otoc::{evolve, top_state, EngineKind, EngineOptions, OtocConfig};
use crate::scalar::{LogValue, Real};
use crate::schedule::LayerSchedule;

/// Slack allowed on grid values outside `[-1, 1]`.
pub const GRID_SLACK: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq)]
pub struct DominantState {
    /// Local indices, `0` = `+`, `1` = `-`.
    pub config: Vec<u8>,
    /// Weight of the configuration under the modified dynamics.
    pub score: LogValue<f64>,
    /// `false` when found by the greedy search instead of a full scan.
    pub exact: bool,
}

impl DominantState {
    /// `+`/`-` string, site 0 first.
    pub fn pattern(&self) -> String {
        self.config.iter().map(|&s| if s == 0 { '+' } else { '-' }).collect()
    }
}

/// Site-by-time matrix; `values[x][tau]`.
#[derive(Debug, Clone, PartialEq)]
pub struct MagnetizationGrid {
    pub values: Vec<Vec<f64>>,
    /// Identity insertion divided by the normalization, per time.
    pub identity: Vec<f64>,
    pub times: Vec<usize>,
    /// Final configuration used as bra, when there is one.
    pub final_config: Option<Vec<u8>>,
    pub approximate: bool,
}

impl MagnetizationGrid {
    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn column(&self, tau: usize) -> Vec<f64> {
        self.values.iter().map(|row| row[tau]).collect()
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().flatten().fold(0.0f64, |m, v| m.max(v.abs()))
    }

    pub fn max_identity_deviation(&self) -> f64 {
        self.identity.iter().fold(0.0f64, |m, v| m.max((v - 1.0).abs()))
    }
}

fn schedule_for<T: Real>(config: &OtocConfig<T>, t: usize) -> Result<LayerSchedule> {
    let mut c = *config;
    c.total_time = t;
    c.validate()?;
    c.schedule()
}

fn forward_states<T: Real, S: ChainState<T>>(
    mut state: S,
    schedule: &LayerSchedule,
    matrix: &TransitionMatrix4<T>,
    sinks: &SinkSet<T>,
) -> Result<Vec<S>> {
    state.subtract_sinks(sinks);
    state.renormalize().map_err(|_| Error::SignalLost { step: 0 })?;
    let mut out = vec![state.clone()];
    let status = evolve(&mut state, schedule, matrix, sinks, |_, s| {
        out.push(s.clone());
        Ok(true)
    })?;
    if out.len() != schedule.total_time_units() + 1 {
        return Err(Error::SignalLost {
            step: match status {
                crate::otoc::RunStatus::SignalFloor { t } => t,
                _ => out.len(),
            },
        });
    }
    Ok(out)
}

/// Bras `b_tau = <final| (P M)^{t - tau}` for every `tau`, with `P` the sink
/// projector.
fn backward_states<T: Real, S: ChainState<T>>(
    mut bra: S,
    schedule: &LayerSchedule,
    matrix: &TransitionMatrix4<T>,
    sinks: &SinkSet<T>,
) -> Result<Vec<S>> {
    let ticks = schedule.ticks();
    let bra_sinks = sinks.transposed();
    let mut out = vec![bra.clone()];
    for tick in ticks.iter().rev() {
        bra.subtract_sinks(&bra_sinks);
        apply_layer_transposed(&mut bra, tick.bonds, matrix)?;
        bra.renormalize().map_err(|_| Error::DegenerateNormalization { step: tick.time })?;
        out.push(bra.clone());
    }
    out.reverse();
    Ok(out)
}

/// Weighted insertion of `diag` at every `(x, tau)`, normalized by the final
/// overlap `<bra|state(t)>`.
fn insertion_grid<T: Real, S: ChainState<T>>(
    ket: S,
    bra: S,
    schedule: &LayerSchedule,
    matrix: &TransitionMatrix4<T>,
    sinks: &SinkSet<T>,
    diag: [T; 2],
) -> Result<(Vec<Vec<f64>>, Vec<f64>)> {
    let forward = forward_states(ket, schedule, matrix, sinks)?;
    let backward = backward_states(bra, schedule, matrix, sinks)?;
    let len = forward[0].len();
    let t = forward.len() - 1;
    let (z_raw, _) = forward[t].insertion_profile(&backward[t], [T::one(), T::one()]);
    let z = LogValue::from_parts(z_raw, forward[t].log_norm() + backward[t].log_norm());
    if z.sign == 0 {
        return Err(Error::DegenerateNormalization { step: schedule.total_time_units() });
    }
    let mut values = vec![vec![0.0; t + 1]; len];
    let mut identity = vec![0.0; t + 1];
    for tau in 0..=t {
        let (plain, prof) = forward[tau].insertion_profile(&backward[tau], diag);
        let shift = (forward[tau].log_norm() + backward[tau].log_norm()).as_f64() - z.ln_abs.as_f64();
        let scale = shift.exp() * z.sign as f64;
        identity[tau] = plain.as_f64() * scale;
        for x in 0..len {
            values[x][tau] = prof[x].as_f64() * scale;
        }
    }
    Ok((values, identity))
}

/// Dispatches a grid computation to the engine chosen in `opts`.
pub(crate) fn grid_with_engine<T: Real>(
    initial: &ProductVector<T>,
    final_bra: &ProductVector<T>,
    flavor: Flavor,
    schedule: &LayerSchedule,
    matrix: &TransitionMatrix4<T>,
    sinks: &SinkSet<T>,
    opts: &EngineOptions,
) -> Result<(Vec<Vec<f64>>, Vec<f64>)> {
    let diag = [T::one(), -T::one()];
    match opts.kind {
        EngineKind::TensorTrain => insertion_grid(
            ChainStateTT::from_product(initial, flavor, opts.policy)?,
            ChainStateTT::from_product(final_bra, flavor, opts.policy)?,
            schedule,
            matrix,
            sinks,
            diag,
        ),
        EngineKind::Dense => insertion_grid(
            ChainStateDense::from_product(initial, flavor)?,
            ChainStateDense::from_product(final_bra, flavor)?,
            schedule,
            matrix,
            sinks,
            diag,
        ),
    }
}

fn modified_evolution<T: Real, S: ChainState<T>>(config: &OtocConfig<T>, t: usize, state: S) -> Result<S> {
    let schedule = schedule_for(config, t)?;
    let matrix = modified_transition(&config.params)?;
    let sinks = SinkSet::spin(config.len);
    let mut states = forward_states(state, &schedule, &matrix, &sinks)?;
    Ok(states.pop().expect("at least the initial state"))
}

/// Configuration with `+` at `x_w` carrying the largest weight after `t` time
/// units of the modified dynamics started from the top state.
///
/// Chains up to [`DENSE_MAX_SITES`] are scanned exhaustively. Longer chains
/// use three passes of site-by-site conditional maximization from two seeds
/// (the top state and the single `+` at `x_w`), and the result is marked as
/// approximate.
pub fn dominant_state<T: Real>(config: &OtocConfig<T>, t: usize, opts: &EngineOptions) -> Result<DominantState> {
    let len = config.len;
    let x_w = config.x_w;
    let top = top_state::<T>(len, config.x_v);
    if len <= DENSE_MAX_SITES {
        let state = modified_evolution(config, t, ChainStateDense::from_product(&top, Flavor::Spin)?)?;
        let w = state.weights();
        let mask = 1usize << (len - 1 - x_w);
        let best = (0..w.len())
            .filter(|i| i & mask == 0)
            .max_by(|&a, &b| w[a].abs().partial_cmp(&w[b].abs()).unwrap_or(std::cmp::Ordering::Equal))
            .expect("non-empty");
        let score = LogValue::from_parts(w[best], state.log_norm());
        return Ok(DominantState {
            config: config_of(best, len),
            score: LogValue { ln_abs: score.ln_abs.as_f64(), sign: score.sign },
            exact: true,
        });
    }
    let state = modified_evolution(config, t, ChainStateTT::from_product(&top, Flavor::Spin, opts.policy)?)?;
    let weight = |c: &[u8]| state.overlap(&ProductVector::basis(c)).abs();
    let mut seeds = vec![vec![0u8; len], vec![1u8; len]];
    seeds[0][config.x_v] = 1;
    seeds[1][x_w] = 0;
    let mut best: Option<(Vec<u8>, T)> = None;
    for mut c in seeds {
        c[x_w] = 0;
        for _ in 0..3 {
            for x in (0..len).filter(|&x| x != x_w) {
                c[x] = 0;
                let w0 = weight(&c);
                c[x] = 1;
                let w1 = weight(&c);
                c[x] = u8::from(w1 > w0);
            }
        }
        let w = weight(&c);
        if best.as_ref().is_none_or(|(_, bw)| w > *bw) {
            best = Some((c, w));
        }
    }
    let (c, _) = best.expect("two seeds");
    let score = LogValue::from_parts(state.overlap(&ProductVector::basis(&c)), state.log_norm());
    Ok(DominantState { config: c, score: LogValue { ln_abs: score.ln_abs.as_f64(), sign: score.sign }, exact: false })
}

/// `<sigma_z(x, tau)>` between the top state and the dominant configuration at
/// time `t`, under the unmodified dynamics. With `final_config = None` the
/// dominant state is computed first.
pub fn magnetization_grid<T: Real>(
    config: &OtocConfig<T>,
    t: usize,
    final_config: Option<&[u8]>,
    opts: &EngineOptions,
) -> Result<MagnetizationGrid> {
    if t < 2 {
        return Err(Error::InvalidParameter(format!("magnetization grid needs t >= 2, got {t}")));
    }
    let (z, approximate) = match final_config {
        Some(c) => {
            if c.len() != config.len || c.iter().any(|&s| s > 1) {
                return Err(Error::InvalidParameter("final configuration must have L entries in {0, 1}".into()));
            }
            (c.to_vec(), false)
        }
        None => {
            let d = dominant_state(config, t, opts)?;
            (d.config, !d.exact)
        }
    };
    let schedule = schedule_for(config, t)?;
    let matrix = param_transition(&config.params)?;
    let sinks = SinkSet::spin(config.len);
    let (values, identity) = grid_with_engine(
        &top_state(config.len, config.x_v),
        &ProductVector::basis(&z),
        Flavor::Spin,
        &schedule,
        &matrix,
        &sinks,
        opts,
    )?;
    Ok(MagnetizationGrid { values, identity, times: (0..=t).collect(), final_config: Some(z), approximate })
}

/// Most likely intermediate configuration at every time, exact scan only.
pub fn dominant_trajectory<T: Real>(config: &OtocConfig<T>, t: usize) -> Result<Vec<Vec<u8>>> {
    let len = config.len;
    if len > DENSE_MAX_SITES {
        return Err(Error::Unsupported(format!(
            "dominant trajectory needs L <= {DENSE_MAX_SITES}; use the magnetization grid instead"
        )));
    }
    let end = dominant_state(config, t, &EngineOptions::dense())?;
    let schedule = schedule_for(config, t)?;
    let matrix = modified_transition(&config.params)?;
    let sinks = SinkSet::spin(len);
    let forward = forward_states(
        ChainStateDense::from_product(&top_state(len, config.x_v), Flavor::Spin)?,
        &schedule,
        &matrix,
        &sinks,
    )?;
    let backward = backward_states(
        ChainStateDense::from_product(&ProductVector::basis(&end.config), Flavor::Spin)?,
        &schedule,
        &matrix,
        &sinks,
    )?;
    Ok(forward
        .iter()
        .zip(&backward)
        .map(|(f, b)| {
            let (fw, bw) = (f.weights(), b.weights());
            let best = (0..fw.len())
                .max_by(|&x, &y| {
                    (fw[x] * bw[x]).abs().partial_cmp(&(fw[y] * bw[y]).abs()).unwrap_or(std::cmp::Ordering::Equal)
                })
                .expect("non-empty");
            config_of(best, len)
        })
        .collect())
}
