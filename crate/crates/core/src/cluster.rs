//! Occupied/unoccupied cluster basis: one-point function squared, the
//! cluster-basis OTOC and its polarization heatmap.
//!
//! Bookkeeping coordinates are orthonormal here as well; the physical norms
//! `<o|o> = 1`, `<*|*> = 1 / (q^2 - 1)` enter only through the boundary bras.

use crate::engine::{ProductVector, SinkSet};
use crate::error::{Error, Result};
use crate::gates::{cluster_transfer, Flavor};
use crate::otoc::{run_with_engine, EngineOptions, MarkovRun, OtocConfig, RelaxationSeries};
use crate::scalar::Real;
use crate::trajectory::{grid_with_engine, MagnetizationGrid};

/// `|* o ... o>` with the occupied site at `x_v`.
pub fn cluster_top_state<T: Real>(len: usize, x_v: usize) -> ProductVector<T> {
    let mut config = vec![0u8; len];
    config[x_v] = 1;
    ProductVector::basis(&config)
}

/// Per-site weight `1` for `o` and `1 / (q + 1)` for `*`.
pub fn one_point_bra<T: Real>(len: usize, q: u32) -> ProductVector<T> {
    ProductVector::uniform(len, [T::one(), T::one() / T::lit(f64::from(q + 1))])
}

/// `(1/q, 1/q)` at every site except `(1/q, -1/(q(q^2-1)))` at `x_w`.
///
/// At `q = 2` the second entry is `-1/6 = -1/(q(q+1))`.
pub fn cluster_otoc_bra<T: Real>(len: usize, x_w: usize, q: u32) -> ProductVector<T> {
    let qf = T::lit(f64::from(q));
    let inv_q = T::one() / qf;
    let mut sites = vec![[inv_q, inv_q]; len];
    sites[x_w] = [inv_q, -T::one() / (qf * (qf * qf - T::one()))];
    ProductVector::new(sites)
}

fn check<T: Real>(config: &OtocConfig<T>) -> Result<()> {
    config.validate()?;
    if !config.params.is_dual_unitary() || config.params.q != 2 {
        return Err(Error::UnsupportedEnsemble(
            "the cluster transfer matrix is derived for the dual-unitary family at q = 2".into(),
        ));
    }
    Ok(())
}

fn cluster_series<T: Real>(
    config: &OtocConfig<T>,
    bra: &ProductVector<T>,
    opts: &EngineOptions,
) -> Result<RelaxationSeries> {
    check(config)?;
    let schedule = config.schedule()?;
    let matrix = cluster_transfer(config.params.a_z)?;
    let sinks = SinkSet::cluster(config.len, config.params.q);
    let run = MarkovRun { schedule: &schedule, matrix: &matrix, sinks: &sinks, bra };
    run_with_engine(&cluster_top_state(config.len, config.x_v), Flavor::Cluster, &run, opts)
}

/// Sink-subtracted one-point function squared. `x_w` is ignored.
pub fn one_point_sq<T: Real>(config: &OtocConfig<T>, opts: &EngineOptions) -> Result<RelaxationSeries> {
    cluster_series(config, &one_point_bra(config.len, config.params.q), opts)
}

/// Sink-subtracted OTOC evaluated in the cluster basis. Equals the spin-basis
/// series divided by `q^{L-1} (q^2 - 1)`.
pub fn otoc_cluster<T: Real>(config: &OtocConfig<T>, opts: &EngineOptions) -> Result<RelaxationSeries> {
    cluster_series(config, &cluster_otoc_bra(config.len, config.x_w, config.params.q), opts)
}

/// Polarization `diag(+1 for o, -1 for *)` inserted between the cluster top
/// state and the cluster OTOC bra.
pub fn cluster_heatmap<T: Real>(config: &OtocConfig<T>, t: usize, opts: &EngineOptions) -> Result<MagnetizationGrid> {
    check(config)?;
    if t < 2 {
        return Err(Error::InvalidParameter(format!("heatmap needs t >= 2, got {t}")));
    }
    let mut c = *config;
    c.total_time = t;
    let schedule = c.schedule()?;
    let matrix = cluster_transfer(config.params.a_z)?;
    let sinks = SinkSet::cluster(config.len, config.params.q);
    let (values, identity) = grid_with_engine(
        &cluster_top_state(config.len, config.x_v),
        &cluster_otoc_bra(config.len, config.x_w, config.params.q),
        Flavor::Cluster,
        &schedule,
        &matrix,
        &sinks,
        opts,
    )?;
    Ok(MagnetizationGrid { values, identity, times: (0..=t).collect(), final_config: None, approximate: false })
}

/// `ln(q^{L-1} (q^2 - 1))`, the constant between spin and cluster OTOC series.
pub fn spin_cluster_offset(len: usize, q: u32) -> f64 {
    let q = f64::from(q);
    (len as f64 - 1.0) * q.ln() + (q * q - 1.0).ln()
}
