use crate::engine::{ChainState, ProductVector, SinkSet};
use crate::error::{Error, Result};
use crate::gates::{Flavor, Kernel};
use crate::scalar::Real;
use crate::schedule::Bond;

/// Largest chain the dense container accepts.
pub const DENSE_MAX_SITES: usize = 14;

/// Full `2^L` weight vector. Site `i` is bit `L-1-i` of the index.
#[derive(Debug, Clone, PartialEq)]
pub struct ChainStateDense<T> {
    len: usize,
    flavor: Flavor,
    weights: Vec<T>,
    log_norm: T,
}

impl<T: Real> ChainStateDense<T> {
    pub fn from_product(p: &ProductVector<T>, flavor: Flavor) -> Result<Self> {
        let len = p.len();
        Self::check_len(len)?;
        let weights = (0..1usize << len).map(|i| p.component(i)).collect();
        Ok(Self { len, flavor, weights, log_norm: T::zero() })
    }

    pub fn from_weights(len: usize, flavor: Flavor, weights: Vec<T>) -> Result<Self> {
        Self::check_len(len)?;
        if weights.len() != 1 << len {
            return Err(Error::InvalidParameter(format!(
                "expected {} weights for L = {len}, got {}",
                1usize << len,
                weights.len()
            )));
        }
        Ok(Self { len, flavor, weights, log_norm: T::zero() })
    }

    fn check_len(len: usize) -> Result<()> {
        if len == 0 || len > DENSE_MAX_SITES {
            return Err(Error::InvalidParameter(format!(
                "dense container supports 1 <= L <= {DENSE_MAX_SITES}, got L = {len}"
            )));
        }
        Ok(())
    }

    pub fn weights(&self) -> &[T] {
        &self.weights
    }

    fn bit(&self, site: usize) -> usize {
        1 << (self.len - 1 - site)
    }
}

impl<T: Real> ChainState<T> for ChainStateDense<T> {
    fn len(&self) -> usize {
        self.len
    }

    fn flavor(&self) -> Flavor {
        self.flavor
    }

    fn log_norm(&self) -> T {
        self.log_norm
    }

    fn truncation_error(&self) -> T {
        T::zero()
    }

    fn apply_bond(&mut self, bond: Bond, kernel: &Kernel<T>) -> Result<()> {
        bond.validate(self.len)?;
        let (bl, br) = (self.bit(bond.left), self.bit(bond.right));
        for base in 0..self.weights.len() {
            if base & (bl | br) != 0 {
                continue;
            }
            let idx = [base, base | br, base | bl, base | bl | br];
            let v = idx.map(|i| self.weights[i]);
            for (out, &i) in idx.iter().enumerate() {
                let row = &kernel[out];
                self.weights[i] = row[0] * v[0] + row[1] * v[1] + row[2] * v[2] + row[3] * v[3];
            }
        }
        Ok(())
    }

    fn subtract_sinks(&mut self, sinks: &SinkSet<T>) {
        let coeffs: Vec<T> = sinks.pairs.iter().map(|(_, dual)| self.overlap(dual)).collect();
        for ((ket, _), c) in sinks.pairs.iter().zip(coeffs) {
            if c == T::zero() {
                continue;
            }
            for (i, w) in self.weights.iter_mut().enumerate() {
                *w -= c * ket.component(i);
            }
        }
    }

    fn norm(&self) -> T {
        self.weights.iter().fold(T::zero(), |a, &w| a + w * w).sqrt()
    }

    fn renormalize(&mut self) -> Result<T> {
        let n = self.norm();
        if n == T::zero() || !n.is_finite() {
            return Err(Error::SignalLost { step: 0 });
        }
        for w in &mut self.weights {
            *w /= n;
        }
        let ln = n.ln();
        self.log_norm += ln;
        Ok(ln)
    }

    fn overlap(&self, bra: &ProductVector<T>) -> T {
        self.weights
            .iter()
            .enumerate()
            .fold(T::zero(), |acc, (i, &w)| acc + w * bra.component(i))
    }

    fn scale_site(&mut self, site: usize, factor: [T; 2]) {
        let b = self.bit(site);
        for (i, w) in self.weights.iter_mut().enumerate() {
            *w *= factor[usize::from(i & b != 0)];
        }
    }

    fn insertion_profile(&self, bra: &Self, diag: [T; 2]) -> (T, Vec<T>) {
        let mut plain = T::zero();
        let mut prof = vec![T::zero(); self.len];
        for (i, (&k, &b)) in self.weights.iter().zip(&bra.weights).enumerate() {
            let w = k * b;
            if w == T::zero() {
                continue;
            }
            plain += w;
            for (x, p) in prof.iter_mut().enumerate() {
                *p += w * diag[(i >> (self.len - 1 - x)) & 1];
            }
        }
        (plain, prof)
    }

    fn to_dense(&self) -> Vec<T> {
        self.weights.clone()
    }
}
