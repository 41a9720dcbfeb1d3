//! Evolution of length-`L` weight vectors under products of two-site
//! transition matrices.
//!
//! Two interchangeable containers implement [`ChainState`]: a tensor train
//! ([`ChainStateTT`]) used for production runs and a dense `2^L` vector
//! ([`ChainStateDense`]) used as the oracle. Weights are stored in orthonormal
//! bookkeeping coordinates with local index `0` = `+`/`o` and `1` = `-`/`*`;
//! any non-orthogonality of the physical basis lives in the boundary vectors.
//!
//! Both containers keep the state normalized on demand and accumulate the
//! removed factors in a log-norm, so quantities that decay far below the
//! floating-point range stay representable.

mod checkpoint;
mod dense;
mod tt;

pub use checkpoint::{read_checkpoint, write_checkpoint, CHECKPOINT_MAGIC, CHECKPOINT_VERSION};
pub use dense::{ChainStateDense, DENSE_MAX_SITES};
pub use tt::{ChainStateTT, TruncationPolicy};

use crate::error::{Error, Result};
use crate::gates::{Flavor, Kernel, TransitionMatrix4};
use crate::scalar::{LogValue, Real};
use crate::schedule::Bond;

/// Per-site vector, `site[i] = [weight of local 0, weight of local 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct ProductVector<T> {
    pub sites: Vec<[T; 2]>,
}

impl<T: Real> ProductVector<T> {
    pub fn new(sites: Vec<[T; 2]>) -> Self {
        Self { sites }
    }

    pub fn uniform(len: usize, site: [T; 2]) -> Self {
        Self { sites: vec![site; len] }
    }

    /// Unit vector of a configuration given as local indices (0 or 1).
    pub fn basis(config: &[u8]) -> Self {
        Self {
            sites: config
                .iter()
                .map(|&s| if s == 0 { [T::one(), T::zero()] } else { [T::zero(), T::one()] })
                .collect(),
        }
    }

    pub fn len(&self) -> usize {
        self.sites.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sites.is_empty()
    }

    /// Inner product of two product vectors.
    pub fn dot(&self, other: &Self) -> T {
        self.sites
            .iter()
            .zip(&other.sites)
            .fold(T::one(), |acc, (a, b)| acc * (a[0] * b[0] + a[1] * b[1]))
    }

    /// Component of a configuration index (site 0 is the most significant bit).
    pub fn component(&self, index: usize) -> T {
        let len = self.sites.len();
        self.sites
            .iter()
            .enumerate()
            .fold(T::one(), |acc, (i, s)| acc * s[(index >> (len - 1 - i)) & 1])
    }
}

/// Fixed points of the dynamics together with dual vectors used to measure
/// their components: subtracting `sum_k <dual_k|psi> ket_k` removes every sink
/// direction, with `<dual_j|ket_k> = delta_jk`.
#[derive(Debug, Clone, PartialEq)]
pub struct SinkSet<T> {
    pub pairs: Vec<(ProductVector<T>, ProductVector<T>)>,
}

impl<T: Real> SinkSet<T> {
    pub fn none() -> Self {
        Self { pairs: Vec::new() }
    }

    /// The same projector acting from the left on bras: kets and duals swap
    /// roles.
    pub fn transposed(&self) -> Self {
        Self { pairs: self.pairs.iter().map(|(k, d)| (d.clone(), k.clone())).collect() }
    }

    /// All-`+` and all-`-`, orthonormal in bookkeeping coordinates.
    pub fn spin(len: usize) -> Self {
        let plus = ProductVector::uniform(len, [T::one(), T::zero()]);
        let minus = ProductVector::uniform(len, [T::zero(), T::one()]);
        Self { pairs: vec![(plus.clone(), plus), (minus.clone(), minus)] }
    }

    /// Images of the spin sinks in the cluster basis: all-`o`, and the random
    /// operator state `(|o> + (q^2-1)|*>)^L`. The duals are the spin duals
    /// carried through the same change of basis.
    pub fn cluster(len: usize, q: u32) -> Self {
        let q2m1 = T::lit((q * q - 1) as f64);
        let all_o = ProductVector::uniform(len, [T::one(), T::zero()]);
        let random_op = ProductVector::uniform(len, [T::one(), q2m1]);
        let dual_o = ProductVector::uniform(len, [T::one(), -T::one() / q2m1]);
        let dual_random = ProductVector::uniform(len, [T::zero(), T::one() / q2m1]);
        Self { pairs: vec![(all_o, dual_o), (random_op, dual_random)] }
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }
}

/// Common interface of the tensor-train and dense containers.
pub trait ChainState<T: Real>: Clone + Send {
    fn len(&self) -> usize;

    fn is_empty(&self) -> bool {
        self.len() == 0
    }

    fn flavor(&self) -> Flavor;

    /// Accumulated natural log of factors removed by [`ChainState::renormalize`].
    fn log_norm(&self) -> T;

    /// Cumulative discarded weight (relative, summed over truncations).
    fn truncation_error(&self) -> T;

    /// Applies a kernel (engine encoding, first index on `bond.left`).
    fn apply_bond(&mut self, bond: Bond, kernel: &Kernel<T>) -> Result<()>;

    /// Removes every sink direction.
    fn subtract_sinks(&mut self, sinks: &SinkSet<T>);

    /// Euclidean norm of the stored coordinates.
    fn norm(&self) -> T;

    /// Rescales to unit norm and adds the log of the removed factor to the
    /// accumulator. Returns that log.
    fn renormalize(&mut self) -> Result<T>;

    /// `<bra|state>` in stored coordinates, without the log-norm factor.
    fn overlap(&self, bra: &ProductVector<T>) -> T;

    /// Multiplies every weight of local state `1` at `site` by `factor[1]` and
    /// of local state `0` by `factor[0]`.
    fn scale_site(&mut self, site: usize, factor: [T; 2]);

    /// Stored coordinates as a dense vector (site 0 most significant).
    fn to_dense(&self) -> Vec<T>;

    /// `(<bra|state>, [<bra|D_x|state> for x in 0..L])` in stored coordinates,
    /// where `D_x` multiplies local state `s` at site `x` by `diag[s]`.
    fn insertion_profile(&self, bra: &Self, diag: [T; 2]) -> (T, Vec<T>);

    /// `<bra|state>` including the accumulated log-norm.
    fn log_overlap(&self, bra: &ProductVector<T>) -> LogValue<T> {
        LogValue::from_parts(self.overlap(bra), self.log_norm())
    }
}

/// Applies every bond of a layer, in order.
pub fn apply_layer<T: Real, S: ChainState<T>>(
    state: &mut S,
    bonds: &[Bond],
    matrix: &TransitionMatrix4<T>,
) -> Result<()> {
    if matrix.flavor() != state.flavor() {
        return Err(Error::FlavorMismatch { expected: state.flavor().name(), found: matrix.flavor().name() });
    }
    let kernel = matrix.kernel();
    for &bond in bonds {
        state.apply_bond(bond, &kernel)?;
    }
    Ok(())
}

/// Applies the transpose of a layer to a bra stored as a column vector: the
/// bonds run in reverse order with transposed kernels.
pub fn apply_layer_transposed<T: Real, S: ChainState<T>>(
    state: &mut S,
    bonds: &[Bond],
    matrix: &TransitionMatrix4<T>,
) -> Result<()> {
    if matrix.flavor() != state.flavor() {
        return Err(Error::FlavorMismatch { expected: state.flavor().name(), found: matrix.flavor().name() });
    }
    let kernel = transpose_kernel(&matrix.kernel());
    for &bond in bonds.iter().rev() {
        state.apply_bond(bond, &kernel)?;
    }
    Ok(())
}

/// `K'[(a,b),(c,d)] = K[(b,a),(d,c)]`: the same gate with its two legs swapped.
pub fn swap_legs<T: Real>(k: &Kernel<T>) -> Kernel<T> {
    let flip = |i: usize| ((i & 1) << 1) | (i >> 1);
    let mut out = [[T::zero(); 4]; 4];
    for (r, row) in out.iter_mut().enumerate() {
        for (c, x) in row.iter_mut().enumerate() {
            *x = k[flip(r)][flip(c)];
        }
    }
    out
}

pub fn transpose_kernel<T: Real>(k: &Kernel<T>) -> Kernel<T> {
    let mut out = [[T::zero(); 4]; 4];
    for (r, row) in out.iter_mut().enumerate() {
        for (c, x) in row.iter_mut().enumerate() {
            *x = k[c][r];
        }
    }
    out
}

pub fn swap_kernel<T: Real>() -> Kernel<T> {
    let (o, z) = (T::one(), T::zero());
    [[o, z, z, z], [z, z, o, z], [z, o, z, z], [z, z, z, o]]
}

/// Local configuration from a dense index (site 0 most significant).
pub fn config_of(index: usize, len: usize) -> Vec<u8> {
    (0..len).map(|i| ((index >> (len - 1 - i)) & 1) as u8).collect()
}

pub fn index_of(config: &[u8]) -> usize {
    config.iter().fold(0usize, |acc, &s| (acc << 1) | s as usize)
}
