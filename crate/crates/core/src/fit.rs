//! Two-stage exponential fits of relaxation series.

use std::f64::consts::LN_2;
use std::fmt;

use crate::error::{Error, Result};
use crate::otoc::RelaxationSeries;
use crate::schedule::Boundary;

/// Half-open time interval `(start, end]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Window {
    pub start: f64,
    pub end: f64,
}

impl Window {
    pub fn contains(&self, t: f64) -> bool {
        t > self.start && t <= self.end
    }
}

impl fmt::Display for Window {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {}]", self.start, self.end)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FitOptions {
    /// First window starts after this time (typically `x_w`).
    pub start: f64,
    /// Breakpoint in units of `L`. `None` picks 2 for open and 1 for periodic
    /// chains.
    pub breakpoint_factor: Option<f64>,
    /// Time units skipped next to every window edge that touches a
    /// breakpoint or the start of the run.
    pub margin: f64,
    pub min_points: usize,
}

impl Default for FitOptions {
    fn default() -> Self {
        Self { start: 0.0, breakpoint_factor: None, margin: 3.0, min_points: 10 }
    }
}

impl FitOptions {
    pub fn starting_at(start: f64) -> Self {
        Self { start, ..Default::default() }
    }

    pub fn factor(&self, boundary: Boundary) -> f64 {
        self.breakpoint_factor.unwrap_or(match boundary {
            Boundary::Open => 2.0,
            Boundary::Periodic => 1.0,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LineFit {
    pub slope: f64,
    pub intercept: f64,
    pub rms: f64,
    pub points: usize,
}

/// Ordinary least squares `y = slope * x + intercept`.
pub fn line_fit(xs: &[f64], ys: &[f64]) -> Option<LineFit> {
    let n = xs.len();
    if n < 2 || ys.len() != n {
        return None;
    }
    let nf = n as f64;
    let mx = xs.iter().sum::<f64>() / nf;
    let my = ys.iter().sum::<f64>() / nf;
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    if sxx == 0.0 {
        return None;
    }
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let ss: f64 = xs.iter().zip(ys).map(|(x, y)| (y - slope * x - intercept).powi(2)).sum();
    Some(LineFit { slope, intercept, rms: (ss / nf).sqrt(), points: n })
}

/// Decay rate in units of `ln 2` per time unit over a window.
pub fn window_rate(series: &RelaxationSeries, window: Window) -> Option<LineFit> {
    let (xs, ys): (Vec<f64>, Vec<f64>) = series
        .points
        .iter()
        .filter(|p| p.sign != 0 && p.ln_abs.is_finite() && window.contains(p.t as f64))
        .map(|p| (p.t as f64, p.ln_abs))
        .unzip();
    line_fit(&xs, &ys)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TwoStageFit {
    pub r1: f64,
    pub r2: f64,
    pub window1: Window,
    pub window2: Window,
    pub rms1: f64,
    pub rms2: f64,
    /// Root-mean-square residual over both windows.
    pub rms: f64,
    pub breakpoint: f64,
}

/// Fits `ln|Z(t)|` separately on `(start + m, cL - m]` and `(cL + m, end]`.
pub fn fit_two_stage(series: &RelaxationSeries, len: usize, boundary: Boundary, opts: &FitOptions) -> Result<TwoStageFit> {
    let breakpoint = opts.factor(boundary) * len as f64;
    let end = series.end_time() as f64;
    let window1 = Window { start: opts.start + opts.margin, end: breakpoint - opts.margin };
    let window2 = Window { start: breakpoint + opts.margin, end };
    let count = |w: Window| {
        series.points.iter().filter(|p| p.sign != 0 && p.ln_abs.is_finite() && w.contains(p.t as f64)).count()
    };
    for (name, w) in [("window1", window1), ("window2", window2)] {
        let points = count(w);
        if points < opts.min_points {
            return Err(Error::FitInsufficient {
                window: name,
                points,
                needed: opts.min_points,
                required_t: (w.start.floor() as usize) + opts.min_points,
            });
        }
    }
    let f1 = window_rate(series, window1).expect("window has enough points");
    let f2 = window_rate(series, window2).expect("window has enough points");
    let n = (f1.points + f2.points) as f64;
    let rms = ((f1.rms * f1.rms * f1.points as f64 + f2.rms * f2.rms * f2.points as f64) / n).sqrt();
    Ok(TwoStageFit {
        r1: -f1.slope / LN_2,
        r2: -f2.slope / LN_2,
        window1,
        window2,
        rms1: f1.rms,
        rms2: f2.rms,
        rms,
        breakpoint,
    })
}
