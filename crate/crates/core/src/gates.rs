//! Averaged two-site transition matrices and closed-form decay rates.
//!
//! Matrices act on column weight vectors: `entries[row][col]` is the weight
//! carried from basis state `col` to basis state `row`. Each matrix declares
//! its basis order through [`Flavor`]:
//!
//! * spin: `(--, -+, +-, ++)`
//! * cluster: `(oo, o*, *o, **)` with `o` unoccupied and `*` occupied
//!
//! The evolution engines use a different, flavor-independent local encoding
//! (`0` = `+`/`o`, `1` = `-`/`*`, pair index `2*left + right`). Use
//! [`TransitionMatrix4::kernel`] to get the matrix in that encoding.

use std::f64::consts::{LN_2, PI};
use std::fmt;

use crate::error::{Error, Result};
use crate::scalar::Real;
use crate::schedule::{Boundary, Geometry};

/// 4x4 matrix in engine encoding, `kernel[out][in]`.
pub type Kernel<T> = [[T; 4]; 4];

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Flavor {
    Spin,
    Cluster,
}

impl Flavor {
    pub fn name(self) -> &'static str {
        match self {
            Flavor::Spin => "spin",
            Flavor::Cluster => "cluster",
        }
    }

    /// Maps a declared-basis index to the engine pair index.
    fn engine_index(self, declared: usize) -> usize {
        match self {
            // -- -+ +- ++  with + = 0, - = 1
            Flavor::Spin => 3 - declared,
            Flavor::Cluster => declared,
        }
    }
}

impl fmt::Display for Flavor {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Gate-ensemble parameters `(a_x, a_y, a_z)` and local dimension `q`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GateParams<T> {
    pub a_x: T,
    pub a_y: T,
    pub a_z: T,
    pub q: u32,
}

impl<T: Real> GateParams<T> {
    pub fn new(a_x: T, a_y: T, a_z: T, q: u32) -> Result<Self> {
        if q < 2 {
            return Err(Error::InvalidParameter(format!("q = {q}, need q >= 2")));
        }
        for (name, a) in [("a_x", a_x), ("a_y", a_y), ("a_z", a_z)] {
            if !a.is_finite() {
                return Err(Error::InvalidParameter(format!("{name} = {a} is not finite")));
            }
        }
        Ok(Self { a_x, a_y, a_z, q })
    }

    /// The dual-unitary family `(1, 1, a_z)` at `q = 2`.
    pub fn dual_unitary(a_z: T) -> Result<Self> {
        Self::new(T::one(), T::one(), a_z, 2)
    }

    fn cosines(&self) -> [T; 3] {
        let pi = T::lit(PI);
        [(pi * self.a_x).cos(), (pi * self.a_y).cos(), (pi * self.a_z).cos()]
    }

    /// `cos(pi a_x) + cos(pi a_y) + cos(pi a_z)`.
    pub fn u(&self) -> T {
        let [cx, cy, cz] = self.cosines();
        cx + cy + cz
    }

    /// `cx cy + cy cz + cz cx`.
    pub fn v(&self) -> T {
        let [cx, cy, cz] = self.cosines();
        cx * cy + cy * cz + cz * cx
    }

    /// Two of the three parameters equal to one.
    pub fn is_dual_unitary(&self) -> bool {
        let one = T::one();
        self.a_x == one && self.a_y == one
    }

    pub fn q_real(&self) -> T {
        T::lit(self.q as f64)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TransitionMatrix4<T> {
    entries: [[T; 4]; 4],
    flavor: Flavor,
}

impl<T: Real> TransitionMatrix4<T> {
    pub fn from_entries(entries: [[T; 4]; 4], flavor: Flavor) -> Self {
        Self { entries, flavor }
    }

    pub fn flavor(&self) -> Flavor {
        self.flavor
    }

    /// Entry in the declared basis order.
    pub fn entry(&self, row: usize, col: usize) -> T {
        self.entries[row][col]
    }

    pub fn entries(&self) -> &[[T; 4]; 4] {
        &self.entries
    }

    pub fn column(&self, col: usize) -> [T; 4] {
        [0, 1, 2, 3].map(|r| self.entries[r][col])
    }

    pub fn column_sums(&self) -> [T; 4] {
        [0, 1, 2, 3].map(|c| self.column(c).into_iter().fold(T::zero(), |a, b| a + b))
    }

    pub fn transpose(&self) -> Self {
        let mut e = self.entries;
        for (r, row) in e.iter_mut().enumerate() {
            for (c, x) in row.iter_mut().enumerate() {
                *x = self.entries[c][r];
            }
        }
        Self { entries: e, flavor: self.flavor }
    }

    /// The matrix in engine encoding.
    pub fn kernel(&self) -> Kernel<T> {
        let mut k = [[T::zero(); 4]; 4];
        for r in 0..4 {
            for c in 0..4 {
                k[self.flavor.engine_index(r)][self.flavor.engine_index(c)] = self.entries[r][c];
            }
        }
        k
    }
}

/// Haar-averaged spin transition matrix for local dimension `q`.
pub fn haar_transition<T: Real>(q: u32) -> Result<TransitionMatrix4<T>> {
    if q < 2 {
        return Err(Error::InvalidParameter(format!("q = {q}, need q >= 2")));
    }
    let qf = T::lit(q as f64);
    let h = qf / (qf * qf + T::one());
    let (o, z) = (T::one(), T::zero());
    Ok(TransitionMatrix4::from_entries(
        [[o, h, h, z], [z, z, z, z], [z, z, z, z], [z, h, h, o]],
        Flavor::Spin,
    ))
}

/// `(h, b_+, b_-)` for the single-qubit-averaged ensemble.
pub fn transition_weights<T: Real>(p: &GateParams<T>) -> (T, T, T) {
    let (u, v) = (p.u(), p.v());
    let h = (T::lit(3.0) - v) / T::lit(9.0);
    let b_plus = (T::lit(3.0) + T::lit(6.0) * u + T::lit(5.0) * v) / T::lit(36.0);
    let b_minus = (T::lit(3.0) - T::lit(6.0) * u + T::lit(5.0) * v) / T::lit(36.0);
    (h, b_plus, b_minus)
}

fn require_qubit<T: Real>(p: &GateParams<T>) -> Result<()> {
    if p.q != 2 {
        return Err(Error::UnsupportedEnsemble(format!(
            "parameterized gate family needs q = 2, got q = {}",
            p.q
        )));
    }
    Ok(())
}

/// Spin transition matrix of the `(a_x, a_y, a_z)` ensemble. Entries may be
/// negative.
pub fn param_transition<T: Real>(p: &GateParams<T>) -> Result<TransitionMatrix4<T>> {
    require_qubit(p)?;
    let (h, bp, bm) = transition_weights(p);
    let (o, z) = (T::one(), T::zero());
    Ok(TransitionMatrix4::from_entries(
        [[o, h, h, z], [z, bp, bm, z], [z, bm, bp, z], [z, h, h, o]],
        Flavor::Spin,
    ))
}

/// Transition matrix that folds the bottom-boundary weight `q^{n_-}` into the
/// dynamics: a step that creates a `-` (to `--`) gains a factor `q`, a step
/// that removes one (to `++`) loses a factor `q`. Evolving `|z)` under this
/// matrix gives `C_z(t) q^{n_-(z) - n_-(z_0)}`.
pub fn modified_transition<T: Real>(p: &GateParams<T>) -> Result<TransitionMatrix4<T>> {
    require_qubit(p)?;
    let (h, bp, bm) = transition_weights(p);
    let q = p.q_real();
    let (o, z) = (T::one(), T::zero());
    let (up, down) = (h * q, h / q);
    Ok(TransitionMatrix4::from_entries(
        [[o, up, up, z], [z, bp, bm, z], [z, bm, bp, z], [z, down, down, o]],
        Flavor::Spin,
    ))
}

/// Column-stochastic cluster transfer matrix of the dual-unitary family.
pub fn cluster_transfer<T: Real>(a_z: T) -> Result<TransitionMatrix4<T>> {
    if !a_z.is_finite() {
        return Err(Error::InvalidParameter(format!("a_z = {a_z} is not finite")));
    }
    let c = (T::lit(PI) * a_z).cos();
    let (o, z) = (T::one(), T::zero());
    let (three, nine) = (T::lit(3.0), T::lit(9.0));
    let exch = (T::lit(2.0) - c) / three;
    let grow = (o + c) / three;
    let shrink = (o + c) / nine;
    // last column computed as the complement so the column sum is exactly one
    let stay = o - shrink - shrink;
    Ok(TransitionMatrix4::from_entries(
        [
            [o, z, z, z],
            [z, z, exch, shrink],
            [z, exch, z, shrink],
            [z, grow, grow, stay],
        ],
        Flavor::Cluster,
    ))
}

/// Spin-to-cluster change of basis for one site, engine encoding:
/// `|+> = q|o>`, `|-> = |o> + (q^2-1)|*>`.
pub fn spin_to_cluster<T: Real>(q: u32) -> [[T; 2]; 2] {
    let q = T::lit(q as f64);
    [[q, T::one()], [T::zero(), q * q - T::one()]]
}

/// `(r_DW, r_mag)` in units of `ln 2` per brickwork layer.
pub fn rates<T: Real>(p: &GateParams<T>) -> Result<(T, T)> {
    if !p.is_dual_unitary() || p.q != 2 {
        return Err(Error::Unsupported(
            "closed-form rates are only known for the dual-unitary family (1, 1, a_z), q = 2"
                .into(),
        ));
    }
    Ok((T::one(), magnon_rate(p.a_z)))
}

/// `ln(3 / (2 - cos(pi a_z))) / ln 2`.
pub fn magnon_rate<T: Real>(a_z: T) -> T {
    let c = (T::lit(PI) * a_z).cos();
    (T::lit(3.0) / (T::lit(2.0) - c)).ln() / T::lit(LN_2)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RatePrediction<T> {
    pub r1: T,
    pub r2: T,
    pub geometry: Geometry,
    pub boundary: Boundary,
}

/// Two-stage rates for the dual-unitary family.
pub fn predicted_rates<T: Real>(geometry: Geometry, boundary: Boundary, a_z: T) -> RatePrediction<T> {
    let r_mag = magnon_rate(a_z);
    let half = r_mag / T::lit(2.0);
    let r2 = match (geometry, boundary) {
        (Geometry::Brickwork, Boundary::Periodic) => r_mag,
        (Geometry::Staircase, Boundary::Periodic) => half,
        (_, Boundary::Open) => {
            if a_z < T::lit(1.0 / 3.0) {
                T::one()
            } else {
                r_mag
            }
        }
    };
    RatePrediction { r1: half, r2, geometry, boundary }
}
