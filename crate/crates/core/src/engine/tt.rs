use faer::Mat;

use crate::engine::{swap_kernel, swap_legs, ChainState, ProductVector, SinkSet};
use crate::error::{Error, Result};
use crate::gates::{Flavor, Kernel};
use crate::scalar::Real;
use crate::schedule::Bond;

/// Bond-dimension cap, relative singular-value cutoff and the hard ceiling on
/// the accumulated truncation error.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TruncationPolicy {
    pub chi: usize,
    pub cutoff: f64,
    pub ceiling: f64,
}

impl Default for TruncationPolicy {
    fn default() -> Self {
        Self { chi: 128, cutoff: 1e-14, ceiling: 1e-6 }
    }
}

impl TruncationPolicy {
    /// Large enough that nothing is ever discarded for chains of `len` sites.
    pub fn exact(len: usize) -> Self {
        Self { chi: 1 << len.div_ceil(2), cutoff: 0.0, ceiling: f64::INFINITY }
    }
}

/// One site tensor, row-major `[left][phys][right]`.
#[derive(Debug, Clone, PartialEq)]
pub(crate) struct Site<T> {
    pub(crate) dl: usize,
    pub(crate) dr: usize,
    pub(crate) data: Vec<T>,
}

impl<T: Real> Site<T> {
    fn zeros(dl: usize, dr: usize) -> Self {
        Self { dl, dr, data: vec![T::zero(); dl * 2 * dr] }
    }

    #[inline]
    fn at(&self, l: usize, s: usize, r: usize) -> T {
        self.data[(l * 2 + s) * self.dr + r]
    }

    /// `(dl*2) x dr` view as a faer matrix.
    fn left_matrix(&self) -> Mat<T> {
        Mat::from_fn(self.dl * 2, self.dr, |i, j| self.data[i * self.dr + j])
    }

    /// `dl x (2*dr)` view as a faer matrix.
    fn right_matrix(&self) -> Mat<T> {
        let w = 2 * self.dr;
        Mat::from_fn(self.dl, w, |i, j| self.data[i * w + j])
    }

    fn from_left_matrix(m: &Mat<T>) -> Self {
        let (rows, dr) = (m.nrows(), m.ncols());
        let mut data = Vec::with_capacity(rows * dr);
        for i in 0..rows {
            for j in 0..dr {
                data.push(m[(i, j)]);
            }
        }
        Self { dl: rows / 2, dr, data }
    }

    fn from_right_matrix(m: &Mat<T>) -> Self {
        let (dl, cols) = (m.nrows(), m.ncols());
        let mut data = Vec::with_capacity(dl * cols);
        for i in 0..dl {
            for j in 0..cols {
                data.push(m[(i, j)]);
            }
        }
        Self { dl, dr: cols / 2, data }
    }

    /// `dl x dr` slice at fixed physical index.
    fn slice(&self, s: usize) -> Mat<T> {
        Mat::from_fn(self.dl, self.dr, |l, r| self.at(l, s, r))
    }

    fn norm_sq(&self) -> T {
        self.data.iter().fold(T::zero(), |a, &x| a + x * x)
    }
}

/// Tensor-train weight vector in mixed-canonical form.
///
/// Sites left of `center` are left-orthonormal and sites right of it are
/// right-orthonormal, so the Euclidean norm of the whole vector is the norm of
/// the center tensor and every two-site SVD is a true Schmidt decomposition.
#[derive(Debug, Clone, PartialEq)]
pub struct ChainStateTT<T> {
    pub(crate) sites: Vec<Site<T>>,
    pub(crate) center: usize,
    pub(crate) flavor: Flavor,
    pub(crate) log_norm: T,
    pub(crate) trunc_err: T,
    pub(crate) policy: TruncationPolicy,
}

impl<T: Real> ChainStateTT<T> {
    pub fn from_product(p: &ProductVector<T>, flavor: Flavor, policy: TruncationPolicy) -> Result<Self> {
        if p.is_empty() {
            return Err(Error::InvalidParameter("empty chain".into()));
        }
        if policy.chi == 0 {
            return Err(Error::InvalidParameter("bond dimension cap must be at least 1".into()));
        }
        let mut scale = T::one();
        let sites = p
            .sites
            .iter()
            .map(|v| {
                let n = (v[0] * v[0] + v[1] * v[1]).sqrt();
                let (a, b) = if n > T::zero() { (v[0] / n, v[1] / n) } else { (T::zero(), T::zero()) };
                scale *= n;
                Site { dl: 1, dr: 1, data: vec![a, b] }
            })
            .collect::<Vec<_>>();
        let mut state = Self { sites, center: 0, flavor, log_norm: T::zero(), trunc_err: T::zero(), policy };
        for x in &mut state.sites[0].data {
            *x *= scale;
        }
        Ok(state)
    }

    pub fn policy(&self) -> TruncationPolicy {
        self.policy
    }

    pub fn set_policy(&mut self, policy: TruncationPolicy) {
        self.policy = policy;
    }

    pub fn center(&self) -> usize {
        self.center
    }

    /// Bond dimensions between consecutive sites (`len - 1` entries).
    pub fn bond_dims(&self) -> Vec<usize> {
        self.sites[..self.sites.len() - 1].iter().map(|s| s.dr).collect()
    }

    pub fn max_bond_dim(&self) -> usize {
        self.sites.iter().map(|s| s.dr).max().unwrap_or(1)
    }

    fn move_right(&mut self) {
        let c = self.center;
        let qr = self.sites[c].left_matrix().qr();
        let q = qr.compute_thin_Q();
        let r = qr.thin_R().to_owned();
        let next = &r * self.sites[c + 1].right_matrix();
        self.sites[c] = Site::from_left_matrix(&q);
        self.sites[c + 1] = Site::from_right_matrix(&next);
        self.center = c + 1;
    }

    fn move_left(&mut self) {
        let c = self.center;
        let mt = self.sites[c].right_matrix().transpose().to_owned();
        let qr = mt.qr();
        let q = qr.compute_thin_Q();
        let r = qr.thin_R().to_owned();
        let prev = self.sites[c - 1].left_matrix() * r.transpose();
        self.sites[c] = Site::from_right_matrix(&q.transpose().to_owned());
        self.sites[c - 1] = Site::from_left_matrix(&prev);
        self.center = c - 1;
    }

    pub fn move_center(&mut self, target: usize) {
        while self.center < target {
            self.move_right();
        }
        while self.center > target {
            self.move_left();
        }
    }

    /// Applies a kernel to adjacent sites `(i, i + 1)` with an SVD split.
    fn apply_adjacent(&mut self, i: usize, kernel: &Kernel<T>) -> Result<()> {
        let came_from_right = self.center > i;
        self.move_center(if came_from_right { i + 1 } else { i });
        let (a, b) = (&self.sites[i], &self.sites[i + 1]);
        let (dl, dr) = (a.dl, b.dr);
        let theta = a.left_matrix() * b.right_matrix();
        // theta rows (l, s), columns (t, r)
        let mut gated = Mat::<T>::zeros(dl * 2, 2 * dr);
        for l in 0..dl {
            for r in 0..dr {
                let v = [
                    theta[(l * 2, r)],
                    theta[(l * 2, dr + r)],
                    theta[(l * 2 + 1, r)],
                    theta[(l * 2 + 1, dr + r)],
                ];
                for (out, row) in kernel.iter().enumerate() {
                    let x = row[0] * v[0] + row[1] * v[1] + row[2] * v[2] + row[3] * v[3];
                    gated[(l * 2 + (out >> 1), (out & 1) * dr + r)] = x;
                }
            }
        }
        let svd = gated
            .thin_svd()
            .map_err(|e| Error::NumericalIntegrity(format!("SVD did not converge: {e:?}")))?;
        let s = svd.S().column_vector();
        let n = s.nrows();
        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by(|&x, &y| s[y].partial_cmp(&s[x]).unwrap_or(std::cmp::Ordering::Equal));
        let s0 = s[order[0]];
        let cutoff = T::lit(self.policy.cutoff) * s0;
        let mut keep = order
            .iter()
            .take(self.policy.chi)
            .take_while(|&&k| s[k] > cutoff)
            .count()
            .max(1);
        keep = keep.min(n);
        let total = order.iter().fold(T::zero(), |acc, &k| acc + s[k] * s[k]);
        if total > T::zero() {
            let dropped = order[keep..].iter().fold(T::zero(), |acc, &k| acc + s[k] * s[k]);
            self.trunc_err += dropped / total;
        }
        let (u, v) = (svd.U(), svd.V());
        let mut left = Site::zeros(dl, keep);
        let mut right = Site::zeros(keep, dr);
        let put_s_left = came_from_right;
        for (j, &k) in order[..keep].iter().enumerate() {
            let (sl, sr) = if put_s_left { (s[k], T::one()) } else { (T::one(), s[k]) };
            for row in 0..dl * 2 {
                left.data[row * keep + j] = u[(row, k)] * sl;
            }
            for col in 0..2 * dr {
                right.data[j * 2 * dr + col] = v[(col, k)] * sr;
            }
        }
        self.sites[i] = left;
        self.sites[i + 1] = right;
        self.center = if put_s_left { i } else { i + 1 };
        let ceiling = self.policy.ceiling;
        if self.trunc_err.as_f64() > ceiling {
            return Err(Error::TruncationCeiling { step: 0, error: self.trunc_err.as_f64(), ceiling });
        }
        Ok(())
    }

    /// Left-to-right contraction of `<bra|state>`.
    fn contract(&self, bra: &ProductVector<T>) -> T {
        let mut env = vec![T::one()];
        for (site, b) in self.sites.iter().zip(&bra.sites) {
            let mut next = vec![T::zero(); site.dr];
            for (l, &e) in env.iter().enumerate() {
                if e == T::zero() {
                    continue;
                }
                for s in 0..2 {
                    let w = e * b[s];
                    if w == T::zero() {
                        continue;
                    }
                    let base = (l * 2 + s) * site.dr;
                    for (r, x) in next.iter_mut().enumerate() {
                        *x += w * site.data[base + r];
                    }
                }
            }
            env = next;
        }
        env[0]
    }
}

impl<T: Real> ChainState<T> for ChainStateTT<T> {
    fn len(&self) -> usize {
        self.sites.len()
    }

    fn flavor(&self) -> Flavor {
        self.flavor
    }

    fn log_norm(&self) -> T {
        self.log_norm
    }

    fn truncation_error(&self) -> T {
        self.trunc_err
    }

    fn apply_bond(&mut self, bond: Bond, kernel: &Kernel<T>) -> Result<()> {
        let len = self.len();
        bond.validate(len)?;
        if !bond.is_wrap() {
            return self.apply_adjacent(bond.left, kernel);
        }
        // Carry the last site next to site 0, act, and carry it back.
        let swap = swap_kernel::<T>();
        for i in (1..len - 1).rev() {
            self.apply_adjacent(i, &swap)?;
        }
        self.apply_adjacent(0, &swap_legs(kernel))?;
        for i in 1..len - 1 {
            self.apply_adjacent(i, &swap)?;
        }
        Ok(())
    }

    fn subtract_sinks(&mut self, sinks: &SinkSet<T>) {
        let coeffs: Vec<T> = sinks.pairs.iter().map(|(_, dual)| self.contract(dual)).collect();
        let active: Vec<(&ProductVector<T>, T)> = sinks
            .pairs
            .iter()
            .zip(coeffs)
            .filter(|(_, c)| *c != T::zero())
            .map(|((ket, _), c)| (ket, c))
            .collect();
        if active.is_empty() {
            return;
        }
        let len = self.len();
        let m = active.len();
        let mut sites = Vec::with_capacity(len);
        for (i, site) in self.sites.iter().enumerate() {
            let dl = if i == 0 { 1 } else { site.dl + m };
            let dr = if i == len - 1 { 1 } else { site.dr + m };
            let mut out = Site::zeros(dl, dr);
            for l in 0..site.dl {
                for s in 0..2 {
                    for r in 0..site.dr {
                        out.data[(l * 2 + s) * dr + r] = site.at(l, s, r);
                    }
                }
            }
            for (k, (ket, c)) in active.iter().enumerate() {
                let l = if i == 0 { 0 } else { site.dl + k };
                let r = if i == len - 1 { 0 } else { site.dr + k };
                let scale = if i == 0 { -*c } else { T::one() };
                for s in 0..2 {
                    out.data[(l * 2 + s) * dr + r] = scale * ket.sites[i][s];
                }
            }
            sites.push(out);
        }
        // Direct sum breaks canonical form: restore it with a right-to-left
        // sweep that ends with the center on site 0.
        self.sites = sites;
        self.center = len - 1;
        self.move_center(0);
    }

    fn norm(&self) -> T {
        self.sites[self.center].norm_sq().sqrt()
    }

    fn renormalize(&mut self) -> Result<T> {
        let n = self.norm();
        if n == T::zero() || !n.is_finite() {
            return Err(Error::SignalLost { step: 0 });
        }
        for x in &mut self.sites[self.center].data {
            *x /= n;
        }
        let ln = n.ln();
        self.log_norm += ln;
        Ok(ln)
    }

    fn overlap(&self, bra: &ProductVector<T>) -> T {
        self.contract(bra)
    }

    fn scale_site(&mut self, site: usize, factor: [T; 2]) {
        self.move_center(site);
        let t = &mut self.sites[site];
        for l in 0..t.dl {
            for s in 0..2 {
                for r in 0..t.dr {
                    let idx = (l * 2 + s) * t.dr + r;
                    t.data[idx] *= factor[s];
                }
            }
        }
    }

    fn insertion_profile(&self, bra: &Self, diag: [T; 2]) -> (T, Vec<T>) {
        let len = self.len();
        let slices = |t: &Self| -> Vec<[Mat<T>; 2]> { t.sites.iter().map(|s| [s.slice(0), s.slice(1)]).collect() };
        let (ks, bs) = (slices(self), slices(bra));
        // left[x]: environment of sites < x, rows = bra bond, columns = ket bond
        let mut left = Vec::with_capacity(len + 1);
        left.push(Mat::<T>::from_fn(1, 1, |_, _| T::one()));
        for x in 0..len {
            let e = &left[x];
            let next = bs[x][0].transpose() * e * &ks[x][0] + bs[x][1].transpose() * e * &ks[x][1];
            left.push(next);
        }
        let mut right = vec![Mat::<T>::zeros(0, 0); len + 1];
        right[len] = Mat::from_fn(1, 1, |_, _| T::one());
        for x in (0..len).rev() {
            let f = &right[x + 1];
            right[x] = &bs[x][0] * f * ks[x][0].transpose() + &bs[x][1] * f * ks[x][1].transpose();
        }
        let plain = left[len][(0, 0)];
        let prof = (0..len)
            .map(|x| {
                let mut acc = T::zero();
                for s in 0..2 {
                    let m = bs[x][s].transpose() * &left[x] * &ks[x][s];
                    let f = &right[x + 1];
                    let mut dot = T::zero();
                    for j in 0..m.ncols() {
                        for i in 0..m.nrows() {
                            dot += m[(i, j)] * f[(i, j)];
                        }
                    }
                    acc += diag[s] * dot;
                }
                acc
            })
            .collect();
        (plain, prof)
    }

    fn to_dense(&self) -> Vec<T> {
        // rows: configurations of the sites contracted so far; columns: bond
        let mut acc = vec![T::one()];
        let mut width = 1usize;
        for site in &self.sites {
            let rows = acc.len() / width;
            let mut next = vec![T::zero(); rows * 2 * site.dr];
            for row in 0..rows {
                for l in 0..width {
                    let a = acc[row * width + l];
                    if a == T::zero() {
                        continue;
                    }
                    for s in 0..2 {
                        for r in 0..site.dr {
                            next[(row * 2 + s) * site.dr + r] += a * site.at(l, s, r);
                        }
                    }
                }
            }
            acc = next;
            width = site.dr;
        }
        acc
    }
}
