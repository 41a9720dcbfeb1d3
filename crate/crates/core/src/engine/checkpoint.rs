//! Binary checkpoint of a tensor-train state.
//!
//! Layout (all integers `u64` and all reals `f64`, little-endian):
//!
//! ```text
//! magic      8 bytes  "OTOCTT\0\0"
//! version    u64      currently 1
//! flavor     u64      0 = spin, 1 = cluster
//! len        u64      number of sites L
//! center     u64      orthogonality center
//! chi        u64      bond-dimension cap
//! cutoff     f64
//! ceiling    f64
//! log_norm   f64
//! trunc_err  f64
//! L times:
//!   dl       u64
//!   dr       u64
//!   data     dl*2*dr f64, row-major [left][phys][right]
//! ```

use std::io::{Read, Write};

use crate::engine::tt::Site;
use crate::engine::{ChainStateTT, TruncationPolicy};
use crate::error::{Error, Result};
use crate::gates::Flavor;
use crate::scalar::Real;

pub const CHECKPOINT_MAGIC: &[u8; 8] = b"OTOCTT\0\0";
pub const CHECKPOINT_VERSION: u64 = 1;

fn put_u64(w: &mut impl Write, x: u64) -> Result<()> {
    w.write_all(&x.to_le_bytes())?;
    Ok(())
}

fn put_f64(w: &mut impl Write, x: f64) -> Result<()> {
    w.write_all(&x.to_le_bytes())?;
    Ok(())
}

fn get_u64(r: &mut impl Read) -> Result<u64> {
    let mut b = [0u8; 8];
    r.read_exact(&mut b)?;
    Ok(u64::from_le_bytes(b))
}

fn get_f64(r: &mut impl Read) -> Result<f64> {
    let mut b = [0u8; 8];
    r.read_exact(&mut b)?;
    Ok(f64::from_le_bytes(b))
}

pub fn write_checkpoint<T: Real>(state: &ChainStateTT<T>, w: &mut impl Write) -> Result<()> {
    w.write_all(CHECKPOINT_MAGIC)?;
    put_u64(w, CHECKPOINT_VERSION)?;
    put_u64(w, if state.flavor == Flavor::Spin { 0 } else { 1 })?;
    put_u64(w, state.sites.len() as u64)?;
    put_u64(w, state.center as u64)?;
    put_u64(w, state.policy.chi as u64)?;
    put_f64(w, state.policy.cutoff)?;
    put_f64(w, state.policy.ceiling)?;
    put_f64(w, state.log_norm.as_f64())?;
    put_f64(w, state.trunc_err.as_f64())?;
    for site in &state.sites {
        put_u64(w, site.dl as u64)?;
        put_u64(w, site.dr as u64)?;
        for &x in &site.data {
            put_f64(w, x.as_f64())?;
        }
    }
    Ok(())
}

pub fn read_checkpoint<T: Real>(r: &mut impl Read) -> Result<ChainStateTT<T>> {
    let mut magic = [0u8; 8];
    r.read_exact(&mut magic)?;
    if &magic != CHECKPOINT_MAGIC {
        return Err(Error::Parse("not a tensor-train checkpoint (bad magic)".into()));
    }
    let version = get_u64(r)?;
    if version != CHECKPOINT_VERSION {
        return Err(Error::Parse(format!("unsupported checkpoint version {version}")));
    }
    let flavor = match get_u64(r)? {
        0 => Flavor::Spin,
        1 => Flavor::Cluster,
        other => return Err(Error::Parse(format!("unknown flavor tag {other}"))),
    };
    let len = get_u64(r)? as usize;
    let center = get_u64(r)? as usize;
    let chi = get_u64(r)? as usize;
    let cutoff = get_f64(r)?;
    let ceiling = get_f64(r)?;
    let log_norm = T::lit(get_f64(r)?);
    let trunc_err = T::lit(get_f64(r)?);
    if len == 0 || center >= len {
        return Err(Error::Parse(format!("invalid header: len = {len}, center = {center}")));
    }
    let mut sites = Vec::with_capacity(len);
    let mut prev_dr = 1usize;
    for i in 0..len {
        let dl = get_u64(r)? as usize;
        let dr = get_u64(r)? as usize;
        let last = i + 1 == len;
        if dl != prev_dr || dl == 0 || dr == 0 || (last && dr != 1) || dl > 1 << 20 || dr > 1 << 20 {
            return Err(Error::Parse(format!("inconsistent shape at site {i}: {dl} x 2 x {dr}")));
        }
        let data = (0..dl * 2 * dr).map(|_| get_f64(r).map(T::lit)).collect::<Result<Vec<T>>>()?;
        sites.push(Site { dl, dr, data });
        prev_dr = dr;
    }
    Ok(ChainStateTT {
        sites,
        center,
        flavor,
        log_norm,
        trunc_err,
        policy: TruncationPolicy { chi, cutoff, ceiling },
    })
}
