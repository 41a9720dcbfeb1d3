//! Exact state-vector dynamics of the brickwork Floquet circuit and its OTOC
//! by canonical typicality.
//!
//! Amplitude index bit `i` holds site `i` (`0` = `Z = +1`). A two-site gate
//! acts on the pair index `2 a_left + a_right`.

use std::f64::consts::{FRAC_PI_4, LN_2, TAU};

use num_complex::Complex;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::fit::{window_rate, Window};
use crate::otoc::{RelaxationSeries, RunStatus, SeriesPoint};
use crate::scalar::Real;
use crate::schedule::{build_schedule, Bond, Boundary, Geometry};

pub type Gate2<T> = [[Complex<T>; 4]; 4];
pub type Gate1<T> = [[Complex<T>; 2]; 2];

/// Largest chain accepted by the state-vector simulator.
pub const FLOQUET_MAX_SITES: usize = 24;

/// Largest norm drift tolerated over a run before it is reported.
pub const NORM_DRIFT_LIMIT: f64 = 1e-8;

fn c<T: Real>(re: f64, im: f64) -> Complex<T> {
    Complex::new(T::lit(re), T::lit(im))
}

/// `u(phi) = exp(i (sin(phi) X + cos(phi) Z))`.
pub fn single_site_u<T: Real>(phi: f64) -> Gate1<T> {
    let (s, co) = (1f64.sin(), 1f64.cos());
    let (nx, nz) = (phi.sin(), phi.cos());
    [[c(co, s * nz), c(0.0, s * nx)], [c(0.0, s * nx), c(co, -s * nz)]]
}

/// `exp(-i pi/4 (XX + YY + a_z ZZ))`.
///
/// `|00>` and `|11>` are eigenvectors with eigenvalue `a_z`; on `{|01>, |10>}`
/// the exponent is `[[-a_z, 2], [2, -a_z]]`.
pub fn entangler<T: Real>(a_z: f64) -> Gate2<T> {
    let th = FRAC_PI_4;
    let outer = c::<T>((th * a_z).cos(), -(th * a_z).sin());
    let inner = c::<T>((th * a_z).cos(), (th * a_z).sin());
    let (cs, sn) = ((2.0 * th).cos(), (2.0 * th).sin());
    let z = Complex::new(T::zero(), T::zero());
    let diag = inner * c::<T>(cs, 0.0);
    let off = inner * c::<T>(0.0, -sn);
    [[outer, z, z, z], [z, diag, off, z], [z, off, diag, z], [z, z, z, outer]]
}

pub fn kron<T: Real>(a: &Gate1<T>, b: &Gate1<T>) -> Gate2<T> {
    let mut out = [[Complex::new(T::zero(), T::zero()); 4]; 4];
    for r in 0..4 {
        for col in 0..4 {
            out[r][col] = a[r >> 1][col >> 1] * b[r & 1][col & 1];
        }
    }
    out
}

pub fn matmul<T: Real>(a: &Gate2<T>, b: &Gate2<T>) -> Gate2<T> {
    let mut out = [[Complex::new(T::zero(), T::zero()); 4]; 4];
    for r in 0..4 {
        for col in 0..4 {
            out[r][col] = (0..4).fold(Complex::new(T::zero(), T::zero()), |acc, k| acc + a[r][k] * b[k][col]);
        }
    }
    out
}

pub fn adjoint<T: Real>(g: &Gate2<T>) -> Gate2<T> {
    let mut out = *g;
    for r in 0..4 {
        for col in 0..4 {
            out[r][col] = g[col][r].conj();
        }
    }
    out
}

/// Gate with independent single-site angles on the left and right legs.
pub fn floquet_gate_sites<T: Real>(a_z: f64, phi_left: f64, phi_right: f64) -> Gate2<T> {
    matmul(&entangler(a_z), &kron(&single_site_u(phi_left), &single_site_u(phi_right)))
}

/// `exp(-i pi/4 (XX + YY + a_z ZZ)) (u(phi) x u(phi))`.
pub fn floquet_gate<T: Real>(a_z: f64, phi: f64) -> Gate2<T> {
    floquet_gate_sites(a_z, phi, phi)
}

/// Largest entry of `|G^dagger G - 1|`.
pub fn unitarity_defect<T: Real>(g: &Gate2<T>) -> f64 {
    let p = matmul(&adjoint(g), g);
    let mut worst = 0.0f64;
    for (r, row) in p.iter().enumerate() {
        for (col, x) in row.iter().enumerate() {
            let id = if r == col { 1.0 } else { 0.0 };
            worst = worst.max((x - c::<T>(id, 0.0)).norm().as_f64());
        }
    }
    worst
}

#[derive(Debug, Clone, PartialEq)]
pub struct PureState<T> {
    len: usize,
    amps: Vec<Complex<T>>,
}

impl<T: Real> PureState<T> {
    fn check_len(len: usize) -> Result<()> {
        if !(2..=FLOQUET_MAX_SITES).contains(&len) {
            return Err(Error::InvalidParameter(format!(
                "state-vector simulation needs 2 <= L <= {FLOQUET_MAX_SITES}, got L = {len}"
            )));
        }
        Ok(())
    }

    pub fn basis(len: usize, index: usize) -> Result<Self> {
        Self::check_len(len)?;
        let mut amps = vec![Complex::new(T::zero(), T::zero()); 1 << len];
        amps[index] = Complex::new(T::one(), T::zero());
        Ok(Self { len, amps })
    }

    /// Haar-random state from normalized complex Gaussian amplitudes.
    pub fn random<R: Rng>(len: usize, rng: &mut R) -> Result<Self> {
        Self::check_len(len)?;
        let mut amps: Vec<Complex<T>> = (0..1usize << len)
            .map(|_| {
                let re: f64 = rng.sample(StandardNormal);
                let im: f64 = rng.sample(StandardNormal);
                c(re, im)
            })
            .collect();
        let n = amps.iter().fold(T::zero(), |a, z| a + z.norm_sqr()).sqrt();
        amps.iter_mut().for_each(|z| *z /= n);
        Ok(Self { len, amps })
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.amps.is_empty()
    }

    pub fn amplitudes(&self) -> &[Complex<T>] {
        &self.amps
    }

    pub fn norm(&self) -> T {
        self.amps.iter().fold(T::zero(), |a, z| a + z.norm_sqr()).sqrt()
    }

    /// `<self|other>`.
    pub fn inner(&self, other: &Self) -> Complex<T> {
        self.amps
            .iter()
            .zip(&other.amps)
            .fold(Complex::new(T::zero(), T::zero()), |acc, (a, b)| acc + a.conj() * b)
    }

    pub fn apply_z(&mut self, site: usize) {
        let bit = 1usize << site;
        for (i, z) in self.amps.iter_mut().enumerate() {
            if i & bit != 0 {
                *z = -*z;
            }
        }
    }

    pub fn apply_two(&mut self, left: usize, right: usize, g: &Gate2<T>) {
        let (bl, br) = (1usize << left, 1usize << right);
        let (lo, hi) = if left < right { (left, right) } else { (right, left) };
        let quarter = self.amps.len() >> 2;
        for k in 0..quarter {
            // spread k over the bits other than lo and hi
            let low = k & ((1 << lo) - 1);
            let rest = k >> lo;
            let mid = rest & ((1 << (hi - lo - 1)) - 1);
            let top = rest >> (hi - lo - 1);
            let base = low | (mid << (lo + 1)) | (top << (hi + 1));
            let idx = [base, base | br, base | bl, base | bl | br];
            let v = idx.map(|i| self.amps[i]);
            for (row, &i) in g.iter().zip(&idx) {
                self.amps[i] = row[0] * v[0] + row[1] * v[1] + row[2] * v[2] + row[3] * v[3];
            }
        }
    }
}

/// How the single-site angles are chosen.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum PhiMode {
    Clean(f64),
    /// One angle per circuit, uniform in `[0, 2 pi)`.
    Homogeneous,
    /// One angle per site, uniform in `[0, 2 pi)`.
    Site,
}

impl PhiMode {
    pub fn label(&self) -> &'static str {
        match self {
            PhiMode::Clean(_) => "clean",
            PhiMode::Homogeneous => "homog",
            PhiMode::Site => "site",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FloquetParams {
    pub a_z: f64,
    pub phi_mode: PhiMode,
    pub boundary: Boundary,
    pub len: usize,
    /// Number of brickwork layers.
    pub layers: usize,
    pub n_typ: usize,
    pub n_samples: usize,
    pub seed: u64,
    pub x_v: usize,
    pub x_w: usize,
}

impl FloquetParams {
    /// Clean circuit, OBC, `V` at site 0 and `W` at site 1, one random state.
    pub fn clean(a_z: f64, phi: f64, len: usize, layers: usize) -> Self {
        Self {
            a_z,
            phi_mode: PhiMode::Clean(phi),
            boundary: Boundary::Open,
            len,
            layers,
            n_typ: 1,
            n_samples: 1,
            seed: 0,
            x_v: 0,
            x_w: 1,
        }
    }

    pub fn validate(&self) -> Result<()> {
        PureState::<f64>::check_len(self.len)?;
        if self.n_typ == 0 || self.n_samples == 0 {
            return Err(Error::InvalidParameter("n_typ and n_samples must be at least 1".into()));
        }
        if self.x_v >= self.len || self.x_w >= self.len {
            return Err(Error::InvalidParameter(format!(
                "operator sites x_v = {}, x_w = {} must lie in [0, {})",
                self.x_v, self.x_w, self.len
            )));
        }
        if !self.a_z.is_finite() {
            return Err(Error::InvalidParameter(format!("a_z = {} is not finite", self.a_z)));
        }
        if let PhiMode::Clean(phi) = self.phi_mode {
            if !phi.is_finite() {
                return Err(Error::InvalidParameter(format!("phi = {phi} is not finite")));
            }
        }
        build_schedule(Geometry::Brickwork, self.boundary, self.len, 2).map(|_| ())
    }

    /// `-1 / (4^L - 1)`.
    pub fn saturation(&self) -> f64 {
        saturation(self.len)
    }
}

pub fn saturation(len: usize) -> f64 {
    -1.0 / (4f64.powi(len as i32) - 1.0)
}

/// One period of the circuit: even then odd bonds, each with its gate.
#[derive(Debug, Clone)]
pub struct FloquetCircuit<T> {
    len: usize,
    layers: [Vec<(Bond, Gate2<T>)>; 2],
}

impl<T: Real> FloquetCircuit<T> {
    pub fn new(len: usize, boundary: Boundary, a_z: f64, phis: &[f64]) -> Result<Self> {
        if phis.len() != len {
            return Err(Error::InvalidParameter(format!("need {len} angles, got {}", phis.len())));
        }
        let sched = build_schedule(Geometry::Brickwork, boundary, len, 2)?;
        let mk = |bonds: &Vec<Bond>| {
            bonds.iter().map(|&b| (b, floquet_gate_sites(a_z, phis[b.left], phis[b.right]))).collect()
        };
        let layers = [mk(&sched.layers()[0]), mk(&sched.layers()[1])];
        Ok(Self { len, layers })
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    /// Applies layer number `k` (0-based) of the circuit.
    pub fn forward(&self, state: &mut PureState<T>, k: usize) {
        for (b, g) in &self.layers[k % 2] {
            state.apply_two(b.left, b.right, g);
        }
    }

    /// Undoes layer number `k`.
    pub fn backward(&self, state: &mut PureState<T>, k: usize) {
        for (b, g) in self.layers[k % 2].iter().rev() {
            state.apply_two(b.left, b.right, &adjoint(g));
        }
    }

    /// `|state>` replaced by `U^{-t} Z_site U^t |state>`.
    pub fn heisenberg_z(&self, state: &mut PureState<T>, site: usize, t: usize) {
        for k in 0..t {
            self.forward(state, k);
        }
        state.apply_z(site);
        for k in (0..t).rev() {
            self.backward(state, k);
        }
    }
}

/// `<psi| A V A V |psi> / <psi|psi>` for `t = 0..=layers`, with `V = Z_{x_v}`
/// and `A = U^{-t} Z_{x_w} U^t`. The layer next to `V` is always layer 0.
pub fn state_otoc<T: Real>(
    circuit: &FloquetCircuit<T>,
    psi: &PureState<T>,
    x_v: usize,
    x_w: usize,
    layers: usize,
) -> Result<Vec<Complex<f64>>> {
    let n0 = psi.norm().as_f64();
    let n2 = psi.inner(psi).re.as_f64();
    let mut fwd_a = psi.clone();
    let mut fwd_b = psi.clone();
    fwd_b.apply_z(x_v);
    let mut out = Vec::with_capacity(layers + 1);
    for t in 0..=layers {
        if t > 0 {
            circuit.forward(&mut fwd_a, t - 1);
            circuit.forward(&mut fwd_b, t - 1);
        }
        let mut u = fwd_a.clone();
        u.apply_z(x_w);
        let mut v = fwd_b.clone();
        v.apply_z(x_w);
        for k in (0..t).rev() {
            circuit.backward(&mut u, k);
            circuit.backward(&mut v, k);
        }
        v.apply_z(x_v);
        let drift = (u.norm().as_f64() - n0).abs().max((v.norm().as_f64() - n0).abs());
        if drift > NORM_DRIFT_LIMIT {
            return Err(Error::NumericalIntegrity(format!("norm drift {drift:e} at t = {t}")));
        }
        let z = u.inner(&v);
        out.push(Complex::new(z.re.as_f64() / n2, z.im.as_f64() / n2));
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FloquetPoint {
    pub t: usize,
    pub otoc: Complex<f64>,
    /// `|Re OTOC - saturation|`.
    pub minus_sat_abs: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FloquetSeries {
    pub points: Vec<FloquetPoint>,
    pub n_samples: usize,
    pub n_typ: usize,
    pub seed: u64,
    /// Angles drawn for each circuit sample.
    pub sample_phis: Vec<Vec<f64>>,
    pub saturation: f64,
}

impl FloquetSeries {
    /// `ln |Re OTOC - saturation|` as a relaxation series (for the fitters).
    pub fn relaxation(&self) -> RelaxationSeries {
        let points = self
            .points
            .iter()
            .map(|p| {
                let d = p.otoc.re - self.saturation;
                SeriesPoint {
                    t: p.t,
                    ln_abs: d.abs().ln(),
                    sign: if d > 0.0 { 1 } else if d < 0.0 { -1 } else { 0 },
                    trunc_err: 0.0,
                }
            })
            .collect();
        RelaxationSeries { points, status: RunStatus::Completed }
    }

    /// Rough size of the typicality error, `1 / sqrt(2^L N)`.
    pub fn noise_level(&self, len: usize) -> f64 {
        let n = (self.n_typ * self.n_samples) as f64;
        (-(len as f64) * 0.5 * std::f64::consts::LN_2).exp() / n.sqrt()
    }
}

/// Generator of circuit sample `index` for a run seeded with `seed`.
pub fn sample_rng(seed: u64, index: u64) -> ChaCha20Rng {
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}

fn draw_phis(mode: PhiMode, len: usize, rng: &mut ChaCha20Rng) -> Vec<f64> {
    match mode {
        PhiMode::Clean(phi) => vec![phi; len],
        PhiMode::Homogeneous => vec![rng.random::<f64>() * TAU; len],
        PhiMode::Site => (0..len).map(|_| rng.random::<f64>() * TAU).collect(),
    }
}

/// OTOC averaged over typicality states and circuit samples. Samples run in
/// parallel; each draws its angles and states from its own stream, so the
/// result does not depend on the thread count.
pub fn disorder_average(params: &FloquetParams) -> Result<FloquetSeries> {
    params.validate()?;
    let p = *params;
    let per_sample: Vec<Result<(Vec<f64>, Vec<Complex<f64>>)>> = (0..p.n_samples as u64)
        .into_par_iter()
        .map(|s| {
            let mut rng = sample_rng(p.seed, s);
            let phis = draw_phis(p.phi_mode, p.len, &mut rng);
            let circuit = FloquetCircuit::<f64>::new(p.len, p.boundary, p.a_z, &phis)?;
            let mut acc = vec![Complex::new(0.0, 0.0); p.layers + 1];
            for _ in 0..p.n_typ {
                let psi = PureState::random(p.len, &mut rng)?;
                let vals = state_otoc(&circuit, &psi, p.x_v, p.x_w, p.layers)?;
                acc.iter_mut().zip(vals).for_each(|(a, v)| *a += v);
            }
            Ok((phis, acc))
        })
        .collect();
    let sat = p.saturation();
    let mut total = vec![Complex::new(0.0, 0.0); p.layers + 1];
    let mut sample_phis = Vec::with_capacity(p.n_samples);
    for r in per_sample {
        let (phis, acc) = r?;
        total.iter_mut().zip(acc).for_each(|(a, v)| *a += v);
        sample_phis.push(phis);
    }
    let norm = (p.n_samples * p.n_typ) as f64;
    let points = total
        .into_iter()
        .enumerate()
        .map(|(t, z)| {
            let otoc = z / norm;
            FloquetPoint { t, otoc, minus_sat_abs: (otoc.re - sat).abs() }
        })
        .collect();
    Ok(FloquetSeries { points, n_samples: p.n_samples, n_typ: p.n_typ, seed: p.seed, sample_phis, saturation: sat })
}

/// Typicality OTOC of one clean circuit (or, with a disorder mode, of the
/// averaged ensemble).
pub fn otoc_typicality(params: &FloquetParams) -> Result<FloquetSeries> {
    disorder_average(params)
}

/// First-stage decay of a Floquet OTOC.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FloquetFit {
    pub window: Window,
    /// Rate in units of `ln 2` per brickwork layer.
    pub per_layer: f64,
    /// Rate per Floquet period (two layers).
    pub per_period: f64,
    pub rms: f64,
    pub points: usize,
}

/// Fits `ln |OTOC - saturation|` on `(x_w + 3, t_end]`, where `t_end` is the
/// earlier of the first-stage breakpoint (`2L` open, `L` periodic) and the
/// last time before the signal drops under ten times the typicality noise.
pub fn first_stage_fit(series: &FloquetSeries, params: &FloquetParams) -> Result<FloquetFit> {
    let start = params.x_w as f64 + 3.0;
    let breakpoint = match params.boundary {
        Boundary::Open => 2 * params.len,
        Boundary::Periodic => params.len,
    };
    let floor = 10.0 * series.noise_level(params.len);
    let noisy = series
        .points
        .iter()
        .find(|p| p.t as f64 > start && p.minus_sat_abs < floor)
        .map_or(usize::MAX, |p| p.t - 1);
    let end = breakpoint.min(noisy).min(series.points.last().map_or(0, |p| p.t));
    let window = Window { start, end: end as f64 };
    let fit = window_rate(&series.relaxation(), window);
    match fit {
        Some(f) if f.points >= FLOQUET_MIN_POINTS => {
            let per_layer = -f.slope / LN_2;
            Ok(FloquetFit { window, per_layer, per_period: 2.0 * per_layer, rms: f.rms, points: f.points })
        }
        other => {
            let points = other.map_or(0, |f| f.points);
            let (window, needed) = ("floquet first stage", FLOQUET_MIN_POINTS);
            let required_t = start as usize + FLOQUET_MIN_POINTS;
            let last = series.points.last().map_or(0, |p| p.t);
            if last >= required_t && noisy < breakpoint.min(required_t) {
                Err(Error::FitBelowNoise { window, points, needed, floor_t: noisy + 1 })
            } else {
                Err(Error::FitInsufficient { window, points, needed, required_t })
            }
        }
    }
}

/// Fewest points accepted by [`first_stage_fit`].
pub const FLOQUET_MIN_POINTS: usize = 8;
