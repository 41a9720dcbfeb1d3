use std::fs::File;
use std::io::BufWriter;

use otoc_core::cluster::{cluster_heatmap, one_point_sq, otoc_cluster};
use otoc_core::engine::write_checkpoint;
use otoc_core::fit::{fit_two_stage, FitOptions};
use otoc_core::floquet::{disorder_average, first_stage_fit};
use otoc_core::gates::{magnon_rate, predicted_rates, rates, RatePrediction};
use otoc_core::otoc::{run_otoc, run_otoc_with_state, EngineOptions, OtocConfig, RelaxationSeries};
use otoc_core::schedule::{Boundary, Geometry};
use otoc_core::trajectory::magnetization_grid;
use rayon::prelude::*;

use crate::config::{Basis, RunConfig, Subcmd};
use crate::error::CliError;
use crate::io;

/// Largest deviation in natural-log value that oracle-check accepts.
pub const ORACLE_TOLERANCE: f64 = 1e-8;

/// Runs one resolved configuration, or every point of its sweep.
pub fn execute(cfg: &RunConfig) -> Result<(), CliError> {
    let Some(sweep) = &cfg.sweep else { return dispatch(cfg) };
    let points: Vec<RunConfig> = sweep.values.iter().map(|&v| sweep.point(cfg, v)).collect::<Result<_, _>>()?;
    io::write_text(&cfg.out.join("sweep.txt"), &sweep_index(cfg, &points))?;
    let results: Vec<Result<(), CliError>> = points.par_iter().map(dispatch).collect();
    results.into_iter().collect()
}

fn sweep_index(cfg: &RunConfig, points: &[RunConfig]) -> String {
    let mut s = format!("# otoc-relax sweep v1\ncommand = {}\n", cfg.command.name());
    for p in points {
        s += &format!("{}\n", p.out.display());
    }
    s
}

fn dispatch(cfg: &RunConfig) -> Result<(), CliError> {
    if cfg.command != Subcmd::Rates {
        io::write_text(&cfg.out.join("config.resolved"), &cfg.resolved_text())?;
    }
    match cfg.command {
        Subcmd::SpinOtoc => spin_otoc(cfg),
        Subcmd::ClusterOtoc => {
            let c = cfg.otoc_config()?;
            let s = otoc_cluster(&c, &cfg.engine_options())?;
            finish_series(cfg, &c, &s, c.x_w as f64)
        }
        Subcmd::OnePoint => {
            let c = cfg.otoc_config()?;
            let s = one_point_sq(&c, &cfg.engine_options())?;
            finish_series(cfg, &c, &s, 0.0)
        }
        Subcmd::Heatmap => heatmap(cfg),
        Subcmd::Floquet => floquet(cfg),
        Subcmd::OracleCheck => oracle_check(cfg),
        Subcmd::Rates => print_rates(cfg),
    }
}

fn spin_otoc(cfg: &RunConfig) -> Result<(), CliError> {
    let c = cfg.otoc_config()?;
    let series = match &cfg.save_state {
        Some(path) => {
            let EngineOptions { policy, .. } = cfg.engine_options();
            let (series, state) = run_otoc_with_state(&c, policy)?;
            let f = File::create(path).map_err(|e| CliError::io(format!("creating {}", path.display()), e))?;
            write_checkpoint(&state, &mut BufWriter::new(f))?;
            series
        }
        None => run_otoc(&c, &cfg.engine_options())?,
    };
    finish_series(cfg, &c, &series, c.x_w as f64)
}

fn prediction(c: &OtocConfig<f64>) -> Option<RatePrediction<f64>> {
    (c.params.is_dual_unitary() && c.params.q == 2).then(|| predicted_rates(c.geometry, c.boundary, c.params.a_z))
}

/// Writes `series.csv`, then fits and writes `fit.txt`.
fn finish_series(cfg: &RunConfig, c: &OtocConfig<f64>, series: &RelaxationSeries, start: f64) -> Result<(), CliError> {
    io::write_series(&cfg.out.join("series.csv"), series)?;
    let fit = fit_two_stage(series, c.len, c.boundary, &FitOptions::starting_at(start));
    let fit = match fit {
        Ok(f) => f,
        Err(e) => {
            io::write_text(&cfg.out.join("fit.txt"), &format!("status = failed\nerror = {e}\n"))?;
            return Err(e.into());
        }
    };
    let predicted = match cfg.command {
        Subcmd::SpinOtoc | Subcmd::ClusterOtoc => prediction(c),
        _ => None,
    };
    io::write_text(&cfg.out.join("fit.txt"), &io::fit_report(&fit, predicted.as_ref()))?;
    println!(
        "{} r1={:.6} r2={:.6} window1={} window2={} status={} out={}",
        cfg.command.name(),
        fit.r1,
        fit.r2,
        fit.window1,
        fit.window2,
        series.status.label(),
        cfg.out.display()
    );
    Ok(())
}

fn heatmap(cfg: &RunConfig) -> Result<(), CliError> {
    let c = cfg.otoc_config()?;
    let grid = match cfg.basis {
        Basis::Spin => magnetization_grid(&c, cfg.total, None, &cfg.engine_options())?,
        Basis::Cluster => cluster_heatmap(&c, cfg.total, &cfg.engine_options())?,
    };
    io::write_grid(&cfg.out, &grid, cfg.pgm)?;
    println!(
        "heatmap sites={} times={} max_abs={:.4} identity_dev={:.2e} out={}",
        grid.len(),
        grid.times.len(),
        grid.max_abs(),
        grid.max_identity_deviation(),
        cfg.out.display()
    );
    Ok(())
}

fn floquet(cfg: &RunConfig) -> Result<(), CliError> {
    let p = cfg.floquet_params();
    let series = disorder_average(&p)?;
    io::write_floquet_series(&cfg.out.join("series.csv"), &series)?;
    let target = magnon_rate(cfg.az) / 2.0;
    match first_stage_fit(&series, &p) {
        Ok(fit) => {
            io::write_text(&cfg.out.join("fit.txt"), &io::floquet_fit_report(&fit, target))?;
            println!(
                "floquet r1={:.6} r1_per_period={:.6} window1={} out={}",
                fit.per_layer,
                fit.per_period,
                fit.window,
                cfg.out.display()
            );
            Ok(())
        }
        Err(e) => {
            io::write_text(&cfg.out.join("fit.txt"), &format!("status = failed\nerror = {e}\n"))?;
            Err(e.into())
        }
    }
}

/// Largest `|ln|a| - ln|b||` over the common times; a sign mismatch counts as
/// infinite.
pub fn log_deviation(a: &RelaxationSeries, b: &RelaxationSeries) -> f64 {
    a.points
        .iter()
        .zip(&b.points)
        .map(|(x, y)| if x.sign != y.sign || x.t != y.t { f64::INFINITY } else { (x.ln_abs - y.ln_abs).abs() })
        .fold(0.0, f64::max)
}

fn oracle_check(cfg: &RunConfig) -> Result<(), CliError> {
    let mut report = String::from("# otoc-relax oracle v1\ngeom,bc,az,points,max_log_dev\n");
    let mut worst = 0.0f64;
    let mut cases = 0;
    for geom in [Geometry::Brickwork, Geometry::Staircase] {
        for bc in [Boundary::Open, Boundary::Periodic] {
            if geom == Geometry::Brickwork && bc == Boundary::Periodic && cfg.len % 2 == 1 {
                continue;
            }
            for az in [0.2, 0.5, 0.8] {
                let c = OtocConfig::dual_unitary(az, geom, bc, cfg.len, cfg.total)?.with_sites(cfg.xv, cfg.xw)?;
                let tt = run_otoc(&c, &EngineOptions::tt(cfg.chi, cfg.cutoff))?;
                let dense = run_otoc(&c, &EngineOptions::dense())?;
                let mut dev = log_deviation(&tt, &dense);
                if tt.points.len() != dense.points.len() {
                    dev = f64::INFINITY;
                }
                report += &format!("{geom},{bc},{az},{},{dev:e}\n", tt.points.len());
                worst = worst.max(dev);
                cases += 1;
            }
        }
    }
    io::write_text(&cfg.out.join("oracle.csv"), &report)?;
    let verdict = if worst <= ORACLE_TOLERANCE { "PASS" } else { "FAIL" };
    println!("{verdict} oracle-check L={} T={} cases={cases} max_log_dev={worst:.3e} tol={ORACLE_TOLERANCE:e}", cfg.len, cfg.total);
    if worst <= ORACLE_TOLERANCE {
        Ok(())
    } else {
        Err(CliError::OracleMismatch(format!("max log deviation {worst:e} exceeds {ORACLE_TOLERANCE:e}")))
    }
}

fn print_rates(cfg: &RunConfig) -> Result<(), CliError> {
    let (dw, mag) = rates(&cfg.gate_params()?)?;
    println!("a_z={}", cfg.az);
    println!("r_DW={dw}");
    println!("r_mag={mag:.6}");
    println!("geom bc r1 r2");
    for geom in [Geometry::Brickwork, Geometry::Staircase] {
        for bc in [Boundary::Open, Boundary::Periodic] {
            let p = predicted_rates(geom, bc, cfg.az);
            println!("{geom} {bc} {:.6} {:.6}", p.r1, p.r2);
        }
    }
    Ok(())
}

