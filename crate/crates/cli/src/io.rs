//! Output files. Every CSV starts with a `# otoc-relax <kind> v<n>` line so
//! downstream tooling can check the schema.

use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::Path;

use otoc_core::fit::TwoStageFit;
use otoc_core::floquet::{FloquetFit, FloquetSeries};
use otoc_core::gates::RatePrediction;
use otoc_core::otoc::RelaxationSeries;
use otoc_core::trajectory::MagnetizationGrid;

use crate::config::PgmFormat;
use crate::error::CliError;

pub const SERIES_SCHEMA: &str = "# otoc-relax series v1";
pub const FLOQUET_SCHEMA: &str = "# otoc-relax floquet-series v1";
pub const GRID_SCHEMA: &str = "# otoc-relax grid v1";

fn create(path: &Path) -> Result<BufWriter<File>, CliError> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(|e| CliError::io(format!("creating {}", dir.display()), e))?;
    }
    File::create(path).map(BufWriter::new).map_err(|e| CliError::io(format!("creating {}", path.display()), e))
}

fn finish(path: &Path, result: std::io::Result<()>) -> Result<(), CliError> {
    result.map_err(|e| CliError::io(format!("writing {}", path.display()), e))
}

pub fn write_text(path: &Path, text: &str) -> Result<(), CliError> {
    let mut w = create(path)?;
    finish(path, w.write_all(text.as_bytes()).and_then(|_| w.flush()))
}

/// `t,log10_abs,sign,trunc_err`.
pub fn series_csv(series: &RelaxationSeries, w: &mut impl Write) -> std::io::Result<()> {
    writeln!(w, "{SERIES_SCHEMA} status={}", series.status.label().replace(' ', "_"))?;
    writeln!(w, "t,log10_abs,sign,trunc_err")?;
    for p in &series.points {
        writeln!(w, "{},{:.12e},{},{:e}", p.t, p.log10_abs(), p.sign, p.trunc_err)?;
    }
    Ok(())
}

pub fn write_series(path: &Path, series: &RelaxationSeries) -> Result<(), CliError> {
    let mut w = create(path)?;
    finish(path, series_csv(series, &mut w).and_then(|_| w.flush()))
}

/// `t,otoc_re,otoc_im,otoc_minus_sat_abs,n_samples,seed`.
pub fn floquet_csv(series: &FloquetSeries, w: &mut impl Write) -> std::io::Result<()> {
    writeln!(w, "{FLOQUET_SCHEMA} n_typ={} saturation={:e}", series.n_typ, series.saturation)?;
    writeln!(w, "t,otoc_re,otoc_im,otoc_minus_sat_abs,n_samples,seed")?;
    for p in &series.points {
        writeln!(
            w,
            "{},{:.15e},{:.15e},{:.15e},{},{}",
            p.t, p.otoc.re, p.otoc.im, p.minus_sat_abs, series.n_samples, series.seed
        )?;
    }
    Ok(())
}

pub fn write_floquet_series(path: &Path, series: &FloquetSeries) -> Result<(), CliError> {
    let mut w = create(path)?;
    finish(path, floquet_csv(series, &mut w).and_then(|_| w.flush()))
}

/// Structured `key = value` report.
pub fn fit_report(fit: &TwoStageFit, predicted: Option<&RatePrediction<f64>>) -> String {
    let mut s = format!(
        "r1 = {:.6}\nr2 = {:.6}\nwindow1 = {}\nwindow2 = {}\nrms_residual = {:.6e}\nbreakpoint = {}\nrms1 = {:.6e}\nrms2 = {:.6e}\n",
        fit.r1, fit.r2, fit.window1, fit.window2, fit.rms, fit.breakpoint, fit.rms1, fit.rms2
    );
    if let Some(p) = predicted {
        s += &format!(
            "predicted_r1 = {:.6}\npredicted_r2 = {:.6}\nrel_err_r1 = {:+.4}\nrel_err_r2 = {:+.4}\n",
            p.r1,
            p.r2,
            fit.r1 / p.r1 - 1.0,
            fit.r2 / p.r2 - 1.0
        );
    }
    s
}

pub fn floquet_fit_report(fit: &FloquetFit, target: f64) -> String {
    format!(
        "r1 = {:.6}\nr1_per_period = {:.6}\nwindow1 = {}\nrms_residual = {:.6e}\npoints = {}\ntarget_r1 = {:.6}\nrel_err_r1 = {:+.4}\n",
        fit.per_layer,
        fit.per_period,
        fit.window,
        fit.rms,
        fit.points,
        target,
        fit.per_layer / target - 1.0
    )
}

/// `x,tau,m,identity` in long format.
pub fn grid_csv(grid: &MagnetizationGrid, w: &mut impl Write) -> std::io::Result<()> {
    writeln!(w, "{GRID_SCHEMA} sites={} times={}", grid.len(), grid.times.len())?;
    writeln!(w, "x,tau,m,identity")?;
    for (x, row) in grid.values.iter().enumerate() {
        for (i, v) in row.iter().enumerate() {
            writeln!(w, "{x},{},{:.12e},{:.12e}", grid.times[i], v, grid.identity[i])?;
        }
    }
    Ok(())
}

/// Grey level for a grid value: `round(127.5 (v + 1))` after clamping to
/// `[-1, 1]`.
pub fn grey_level(v: f64) -> u8 {
    if v.is_nan() {
        return 128;
    }
    (127.5 * (v.clamp(-1.0, 1.0) + 1.0)).round() as u8
}

/// Rows are times (top row `tau = 0`), columns are sites.
pub fn pgm(grid: &MagnetizationGrid, format: PgmFormat, w: &mut impl Write) -> std::io::Result<()> {
    let (width, height) = (grid.len(), grid.times.len());
    let magic = match format {
        PgmFormat::P2 => "P2",
        PgmFormat::P5 => "P5",
    };
    write!(w, "{magic}\n{width} {height}\n255\n")?;
    for i in 0..height {
        let row: Vec<u8> = (0..width).map(|x| grey_level(grid.values[x][i])).collect();
        match format {
            PgmFormat::P5 => w.write_all(&row)?,
            PgmFormat::P2 => {
                let line: Vec<String> = row.iter().map(u8::to_string).collect();
                writeln!(w, "{}", line.join(" "))?;
            }
        }
    }
    Ok(())
}

pub fn pgm_sidecar(grid: &MagnetizationGrid) -> String {
    let clamped = grid.values.iter().flatten().filter(|v| v.abs() > 1.0).count();
    let mut s = format!(
        "# otoc-relax grid-image v1\nrows = tau 0..{}\ncolumns = x 0..{}\nmap = round(127.5 * (clamp(v, -1, 1) + 1))\nmaxval = 255\nmax_abs = {:.6e}\nclamped_pixels = {clamped}\nmax_identity_deviation = {:.3e}\napproximate = {}\n",
        grid.times.len().saturating_sub(1),
        grid.len().saturating_sub(1),
        grid.max_abs(),
        grid.max_identity_deviation(),
        grid.approximate
    );
    if let Some(c) = &grid.final_config {
        let pattern: String = c.iter().map(|&s| if s == 0 { '+' } else { '-' }).collect();
        s += &format!("final_config = {pattern}\n");
    }
    s
}

/// `grid.csv`, `grid.pgm` and the `grid.pgm.txt` sidecar.
pub fn write_grid(dir: &Path, grid: &MagnetizationGrid, format: PgmFormat) -> Result<(), CliError> {
    let p = dir.join("grid.csv");
    let mut w = create(&p)?;
    finish(&p, grid_csv(grid, &mut w).and_then(|_| w.flush()))?;
    let p = dir.join("grid.pgm");
    let mut w = create(&p)?;
    finish(&p, pgm(grid, format, &mut w).and_then(|_| w.flush()))?;
    write_text(&dir.join("grid.pgm.txt"), &pgm_sidecar(grid))
}
