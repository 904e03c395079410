//! Binary dump of a [`LaneEmdenTable`], keyed by `(N, p, n, tol)`.
//!
//! Layout (little endian): magic `PBLE`, u32 version, u32 dim, f64 p, u64 n,
//! f64 tol, f64 r0, then `u0`, `du0`, `ip_cum` as `n` f64 each.

use std::fs;
use std::io::{Read, Write};
use std::path::{Path, PathBuf};

use super::{
    build_lane_emden_with, series_coefficients, LaneEmdenOptions, LaneEmdenTable, SERIES_TERMS,
};
use crate::error::{Error, Result};
use crate::radial_core::make_grid;

const MAGIC: &[u8; 4] = b"PBLE";
const VERSION: u32 = 1;
pub const CACHE_ENV: &str = "PLASMA_BRANCH_CACHE";

pub fn cache_dir() -> Option<PathBuf> {
    std::env::var_os(CACHE_ENV).map(PathBuf::from)
}

fn cache_name(dim: usize, p: f64, n: usize, tol: f64) -> String {
    format!(
        "lane_emden_N{dim}_p{:016x}_n{n}_t{:016x}.bin",
        p.to_bits(),
        tol.to_bits()
    )
}

pub fn save_table(table: &LaneEmdenTable, path: &Path) -> Result<()> {
    let mut buf = Vec::with_capacity(48 + 24 * table.grid.n());
    buf.extend_from_slice(MAGIC);
    buf.extend_from_slice(&VERSION.to_le_bytes());
    buf.extend_from_slice(&(table.dim as u32).to_le_bytes());
    buf.extend_from_slice(&table.exponent.to_le_bytes());
    buf.extend_from_slice(&(table.grid.n() as u64).to_le_bytes());
    buf.extend_from_slice(&table.tol.to_le_bytes());
    buf.extend_from_slice(&table.r0.to_le_bytes());
    for arr in [&table.u0, &table.du0, &table.ip_cum] {
        for v in arr.iter() {
            buf.extend_from_slice(&v.to_le_bytes());
        }
    }
    // write-then-rename so concurrent readers never see a partial file
    let tmp = path.with_extension(format!("tmp{}", std::process::id()));
    let mut f = fs::File::create(&tmp).map_err(|e| Error::Cache(e.to_string()))?;
    f.write_all(&buf).map_err(|e| Error::Cache(e.to_string()))?;
    drop(f);
    fs::rename(&tmp, path).map_err(|e| Error::Cache(e.to_string()))
}

pub fn load_table(path: &Path) -> Result<LaneEmdenTable> {
    let mut raw = Vec::new();
    fs::File::open(path)
        .and_then(|mut f| f.read_to_end(&mut raw))
        .map_err(|e| Error::Cache(e.to_string()))?;
    let mut pos = 0usize;
    let mut take = |k: usize| -> Result<&[u8]> {
        let s = raw
            .get(pos..pos + k)
            .ok_or_else(|| Error::Cache("truncated file".into()))?;
        pos += k;
        Ok(s)
    };
    if take(4)? != MAGIC {
        return Err(Error::Cache("bad magic".into()));
    }
    let u32_at = |b: &[u8]| u32::from_le_bytes(b.try_into().unwrap());
    let f64_at = |b: &[u8]| f64::from_le_bytes(b.try_into().unwrap());
    let version = u32_at(take(4)?);
    if version != VERSION {
        return Err(Error::Cache(format!("unsupported version {version}")));
    }
    let dim = u32_at(take(4)?) as usize;
    let p = f64_at(take(8)?);
    let n = u64::from_le_bytes(take(8)?.try_into().unwrap()) as usize;
    let tol = f64_at(take(8)?);
    let r0 = f64_at(take(8)?);
    let mut arrays = Vec::with_capacity(3);
    for _ in 0..3 {
        let bytes = take(8 * n)?;
        arrays.push(bytes.chunks_exact(8).map(f64_at).collect::<Vec<f64>>());
    }
    drop(take);
    if pos != raw.len() {
        return Err(Error::Cache("trailing bytes".into()));
    }
    let ip_cum = arrays.pop().unwrap();
    let du0 = arrays.pop().unwrap();
    let u0 = arrays.pop().unwrap();
    Ok(LaneEmdenTable {
        dim,
        exponent: p,
        grid: make_grid(dim, 1.0, n)?,
        u0_at_0: u0[0],
        du0_at_1: du0[n - 1],
        ip_total: ip_cum[n - 1],
        r0,
        tol,
        u0,
        du0,
        ip_cum,
        series: series_coefficients(dim, p, SERIES_TERMS),
    })
}

/// Builds a table, reusing `$PLASMA_BRANCH_CACHE` when set. Cache I/O
/// failures fall back to a fresh build.
pub fn build_lane_emden_cached(dim: usize, p: f64, n: usize) -> Result<LaneEmdenTable> {
    let opts = LaneEmdenOptions::default();
    let Some(dir) = cache_dir() else {
        return build_lane_emden_with(dim, p, n, opts);
    };
    let path = dir.join(cache_name(dim, p, n, opts.tol));
    if let Ok(t) = load_table(&path) {
        if t.dim == dim && t.exponent.to_bits() == p.to_bits() && t.grid.n() == n {
            return Ok(t);
        }
    }
    let table = build_lane_emden_with(dim, p, n, opts)?;
    if fs::create_dir_all(&dir).is_ok() {
        let _ = save_table(&table, &path);
    }
    Ok(table)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn scratch(name: &str) -> PathBuf {
        let d = std::env::temp_dir().join(format!("pb_cache_{}_{name}", std::process::id()));
        fs::create_dir_all(&d).unwrap();
        d.join("t.bin")
    }

    #[test]
    fn round_trip_is_bit_exact() {
        let t = super::super::build_lane_emden(3, 1.5, 129).unwrap();
        let path = scratch("rt");
        save_table(&t, &path).unwrap();
        let back = load_table(&path).unwrap();
        assert_eq!(t, back);
    }

    #[test]
    fn rejects_garbage() {
        let path = scratch("bad");
        fs::write(&path, b"nope").unwrap();
        assert!(load_table(&path).is_err());
        let t = super::super::build_lane_emden(2, 2.0, 129).unwrap();
        save_table(&t, &path).unwrap();
        let mut raw = fs::read(&path).unwrap();
        raw.truncate(raw.len() - 3);
        fs::write(&path, raw).unwrap();
        assert!(matches!(load_table(&path), Err(Error::Cache(_))));
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(8))]
        #[test]
        fn round_trip_any_exponent(p in 1.05f64..4.0, dim in 2usize..4) {
            let p = if dim == 3 { p.min(4.5) } else { p };
            let t = super::super::build_lane_emden(dim, p, 65).unwrap();
            let path = scratch(&format!("pp{}", p.to_bits()));
            save_table(&t, &path).unwrap();
            prop_assert_eq!(t, load_table(&path).unwrap());
        }
    }
}
