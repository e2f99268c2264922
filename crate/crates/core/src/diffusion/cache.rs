//! Binary endpoint cache.
//!
//! Layout, little-endian throughout: magic `HGEB`, format version `u16`,
//! geometry id (`u16` length + UTF-8), start point (`u8` dimension + `f64`s),
//! horizon `f64`, path count `u64`, seed `u64`, `dt` `f64`, scheme `u8`,
//! then the endpoint coordinates as `f64`s. Files are named by the SHA-256
//! of the header, so a cache hit implies identical inputs.

use std::fs;
use std::io::{Read, Write};
use std::path::{Path, PathBuf};

use sha2::{Digest, Sha256};

use super::{simulate, EndpointBatch, Scheme, SimConfig};
use crate::error::{Error, Result};
use crate::geometry::{Geometry, Point};

pub const CACHE_MAGIC: &[u8; 4] = b"HGEB";
pub const CACHE_VERSION: u16 = 1;

fn header(g: Geometry, start: &[f64], t: f64, cfg: &SimConfig) -> Vec<u8> {
    let mut h = Vec::with_capacity(64);
    h.extend_from_slice(CACHE_MAGIC);
    h.extend_from_slice(&CACHE_VERSION.to_le_bytes());
    let id = g.to_string();
    h.extend_from_slice(&(id.len() as u16).to_le_bytes());
    h.extend_from_slice(id.as_bytes());
    h.push(start.len() as u8);
    for c in start {
        h.extend_from_slice(&c.to_le_bytes());
    }
    h.extend_from_slice(&t.to_le_bytes());
    h.extend_from_slice(&(cfg.n_paths as u64).to_le_bytes());
    h.extend_from_slice(&cfg.seed.to_le_bytes());
    h.extend_from_slice(&cfg.dt.to_le_bytes());
    h.push(cfg.scheme.code());
    h
}

/// Hex SHA-256 of the header for these inputs.
pub fn cache_key(g: Geometry, start: &[f64], t: f64, cfg: &SimConfig) -> String {
    hex::encode(Sha256::digest(header(g, start, t, cfg)))
}

fn cache_path(dir: &Path, g: Geometry, start: &[f64], t: f64, cfg: &SimConfig) -> PathBuf {
    dir.join(format!("{}.hgeb", cache_key(g, start, t, cfg)))
}

/// Writes `batch` into `dir` and returns the file path.
pub fn write_cache(dir: &Path, batch: &EndpointBatch) -> Result<PathBuf> {
    fs::create_dir_all(dir)?;
    let path = cache_path(dir, batch.geometry, &batch.start, batch.horizon, &batch.config);
    let mut buf = header(batch.geometry, &batch.start, batch.horizon, &batch.config);
    buf.reserve(batch.coords().len() * 8);
    for c in batch.coords() {
        buf.extend_from_slice(&c.to_le_bytes());
    }
    let tmp = path.with_extension("tmp");
    fs::File::create(&tmp)?.write_all(&buf)?;
    fs::rename(&tmp, &path)?;
    Ok(path)
}

struct Cursor<'a> {
    buf: &'a [u8],
    pos: usize,
}

impl<'a> Cursor<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        let end = self.pos.checked_add(n).filter(|&e| e <= self.buf.len());
        let end = end.ok_or_else(|| Error::Cache(format!("truncated at byte {}", self.pos)))?;
        let s = &self.buf[self.pos..end];
        self.pos = end;
        Ok(s)
    }

    fn array<const N: usize>(&mut self) -> Result<[u8; N]> {
        Ok(self.take(N)?.try_into().expect("length checked"))
    }

    fn u8(&mut self) -> Result<u8> {
        Ok(self.take(1)?[0])
    }

    fn u16(&mut self) -> Result<u16> {
        Ok(u16::from_le_bytes(self.array()?))
    }

    fn u64(&mut self) -> Result<u64> {
        Ok(u64::from_le_bytes(self.array()?))
    }

    fn f64(&mut self) -> Result<f64> {
        Ok(f64::from_le_bytes(self.array()?))
    }
}

/// Reads a cache file written by [`write_cache`].
pub fn read_cache(path: &Path) -> Result<EndpointBatch> {
    let mut buf = Vec::new();
    fs::File::open(path)?.read_to_end(&mut buf)?;
    let mut c = Cursor { buf: &buf, pos: 0 };
    if c.take(4)? != CACHE_MAGIC {
        return Err(Error::Cache("bad magic".into()));
    }
    let version = c.u16()?;
    if version != CACHE_VERSION {
        return Err(Error::Cache(format!("unsupported version {version}")));
    }
    let len = c.u16()? as usize;
    let id = std::str::from_utf8(c.take(len)?).map_err(|e| Error::Cache(e.to_string()))?;
    let g: Geometry = id.parse().map_err(|e: Error| Error::Cache(e.to_string()))?;
    let dim = c.u8()? as usize;
    let start: Vec<f64> = (0..dim).map(|_| c.f64()).collect::<Result<_>>()?;
    let t = c.f64()?;
    let n = c.u64()? as usize;
    let seed = c.u64()?;
    let dt = c.f64()?;
    let scheme = Scheme::from_code(c.u8()?).ok_or_else(|| Error::Cache("unknown scheme".into()))?;
    let cfg = SimConfig::new(dt, n, seed, scheme).map_err(|e| Error::Cache(e.to_string()))?;
    let rest = &buf[c.pos..];
    if rest.len() != n * g.dim() * 8 {
        return Err(Error::Cache(format!(
            "payload has {} bytes, expected {}",
            rest.len(),
            n * g.dim() * 8
        )));
    }
    let coords = rest
        .chunks_exact(8)
        .map(|b| f64::from_le_bytes(b.try_into().expect("chunk of 8")))
        .collect();
    let (_, step) = cfg.steps_for(t);
    EndpointBatch::from_coords(g, Point::new(start), t, cfg, step, coords)
}

/// Returns the cached batch for these inputs, simulating and storing it on a miss.
pub fn load_or_simulate(dir: &Path, g: Geometry, x0: &Point, t: f64, cfg: &SimConfig) -> Result<EndpointBatch> {
    let path = cache_path(dir, g, x0, t, cfg);
    if path.exists() {
        return read_cache(&path);
    }
    let batch = simulate(g, x0, t, cfg)?;
    write_cache(dir, &batch)?;
    Ok(batch)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip_preserves_batch() {
        let dir = tempfile::tempdir().unwrap();
        let g = Geometry::Heisenberg;
        let cfg = SimConfig::new(0.01, 300, 2, Scheme::Euler).unwrap();
        let batch = simulate(g, &Point::from([1.0, 0.0, 0.0]), 0.5, &cfg).unwrap();
        let path = write_cache(dir.path(), &batch).unwrap();
        let bytes = fs::read(&path).unwrap();
        assert_eq!(&bytes[..4], b"HGEB");
        assert_eq!(read_cache(&path).unwrap(), batch);
    }

    #[test]
    fn load_or_simulate_reuses_file() {
        let dir = tempfile::tempdir().unwrap();
        let g = Geometry::Euclidean(2);
        let cfg = SimConfig::default_for(g, 1.0, 50, 1);
        let a = load_or_simulate(dir.path(), g, &Point::from([0.0, 0.0]), 1.0, &cfg).unwrap();
        let b = load_or_simulate(dir.path(), g, &Point::from([0.0, 0.0]), 1.0, &cfg).unwrap();
        assert_eq!(a, b);
        assert_eq!(fs::read_dir(dir.path()).unwrap().count(), 1);
    }

    #[test]
    fn key_depends_on_every_field() {
        let g = Geometry::Hyperbolic3;
        let cfg = SimConfig::default_for(g, 1.0, 10, 1);
        let k = cache_key(g, &[0.0, 0.0, 1.0], 1.0, &cfg);
        assert_ne!(k, cache_key(g, &[0.0, 0.0, 1.0], 1.0, &cfg.with_seed(2)));
        assert_ne!(k, cache_key(g, &[0.0, 0.0, 1.0], 2.0, &cfg));
        assert_ne!(k, cache_key(g, &[0.0, 0.1, 1.0], 1.0, &cfg));
        assert_ne!(k, cache_key(g, &[0.0, 0.0, 1.0], 1.0, &cfg.with_paths(11)));
    }

    #[test]
    fn corrupt_files_are_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("x.hgeb");
        fs::write(&p, b"NOPE").unwrap();
        assert!(matches!(read_cache(&p), Err(Error::Cache(_))));
        let g = Geometry::Euclidean(1);
        let batch = simulate(g, &Point::from([0.0]), 1.0, &SimConfig::default_for(g, 1.0, 4, 0)).unwrap();
        let path = write_cache(dir.path(), &batch).unwrap();
        let mut bytes = fs::read(&path).unwrap();
        bytes.pop();
        fs::write(&path, bytes).unwrap();
        assert!(matches!(read_cache(&path), Err(Error::Cache(_))));
    }
}
