//! Binary orbit-cache files.
//!
//! Layout (little-endian): magic `ANOSOV1\0`, u32 version, u32 p, u32 depth,
//! u32 factor count followed by the factor dimensions as u32, a 32-byte
//! digest of the generator matrices and depth, u64 row count, then per row:
//! u16 word length, the letters as i16, mu and lambda coordinates as f64
//! sequences, and a u8 marker followed by the flag frame entries as f64 when
//! present. Round-trips are bit-exact.

use crate::boundary::Flag;
use crate::error::{Error, Result};
use crate::group::CartanVector;
use crate::linalg::Mat;
use crate::words::{GeneratorSystem, OrbitRow, OrbitTable};
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::{Path, PathBuf};

pub const MAGIC: &[u8; 8] = b"ANOSOV1\0";
pub const VERSION: u32 = 1;

/// Cache directory: `ANOSOV_CACHE_DIR` when set, else `.anosov-cache`.
pub fn cache_dir() -> PathBuf {
    match std::env::var_os("ANOSOV_CACHE_DIR") {
        Some(dir) => PathBuf::from(dir),
        None => PathBuf::from(".anosov-cache"),
    }
}

/// Conventional cache file name for a generator system at a depth.
pub fn cache_path(dir: &Path, gens: &GeneratorSystem, depth: u32) -> PathBuf {
    let digest = gens.digest(depth);
    let hex: String = digest[..8].iter().map(|b| format!("{b:02x}")).collect();
    dir.join(format!("ball-{hex}-d{depth}.orbit"))
}

pub fn save_table(table: &OrbitTable, path: &Path) -> Result<()> {
    if let Some(parent) = path.parent() {
        if !parent.as_os_str().is_empty() {
            std::fs::create_dir_all(parent)?;
        }
    }
    let mut w = BufWriter::new(std::fs::File::create(path)?);
    w.write_all(MAGIC)?;
    w.write_all(&VERSION.to_le_bytes())?;
    w.write_all(&(table.p as u32).to_le_bytes())?;
    w.write_all(&table.depth.to_le_bytes())?;
    w.write_all(&(table.descriptor.num_factors() as u32).to_le_bytes())?;
    for &d in &table.descriptor.factor_dims {
        w.write_all(&(d as u32).to_le_bytes())?;
    }
    w.write_all(&table.digest)?;
    w.write_all(&(table.rows.len() as u64).to_le_bytes())?;
    for row in &table.rows {
        w.write_all(&(row.word.len() as u16).to_le_bytes())?;
        for &l in &row.word {
            w.write_all(&l.to_le_bytes())?;
        }
        for &x in &row.mu.coords {
            w.write_all(&x.to_le_bytes())?;
        }
        for &x in &row.lambda.coords {
            w.write_all(&x.to_le_bytes())?;
        }
        match &row.flag {
            Some(flag) => {
                w.write_all(&[1u8])?;
                for frame in &flag.frames {
                    for &x in &frame.data {
                        w.write_all(&x.to_le_bytes())?;
                    }
                }
            }
            None => w.write_all(&[0u8])?,
        }
    }
    w.flush()?;
    Ok(())
}

fn read_exact(r: &mut impl Read, buf: &mut [u8], what: &str) -> Result<()> {
    r.read_exact(buf)
        .map_err(|_| Error::CacheFormat(format!("truncated payload reading {what}")))
}

fn read_u32(r: &mut impl Read, what: &str) -> Result<u32> {
    let mut b = [0u8; 4];
    read_exact(r, &mut b, what)?;
    Ok(u32::from_le_bytes(b))
}

fn read_u64(r: &mut impl Read, what: &str) -> Result<u64> {
    let mut b = [0u8; 8];
    read_exact(r, &mut b, what)?;
    Ok(u64::from_le_bytes(b))
}

fn read_f64(r: &mut impl Read, what: &str) -> Result<f64> {
    let mut b = [0u8; 8];
    read_exact(r, &mut b, what)?;
    Ok(f64::from_le_bytes(b))
}

/// Loads a table and validates its digest against the requested generator
/// system. A mismatch means the cache was produced by different generators
/// and is reported as stale.
pub fn load_table(path: &Path, gens: &GeneratorSystem) -> Result<OrbitTable> {
    let mut r = BufReader::new(std::fs::File::open(path)?);
    let mut magic = [0u8; 8];
    read_exact(&mut r, &mut magic, "magic")?;
    if &magic != MAGIC {
        return Err(Error::CacheFormat("bad magic bytes".into()));
    }
    let version = read_u32(&mut r, "version")?;
    if version != VERSION {
        return Err(Error::CacheFormat(format!("unsupported version {version}")));
    }
    let p = read_u32(&mut r, "p")? as usize;
    let depth = read_u32(&mut r, "depth")?;
    let nf = read_u32(&mut r, "factor count")? as usize;
    if nf == 0 || nf > 16 {
        return Err(Error::CacheFormat(format!("implausible factor count {nf}")));
    }
    let mut dims = Vec::with_capacity(nf);
    for _ in 0..nf {
        let d = read_u32(&mut r, "factor dimension")? as usize;
        if !(2..=64).contains(&d) {
            return Err(Error::CacheFormat(format!("implausible factor dimension {d}")));
        }
        dims.push(d);
    }
    let mut digest = [0u8; 32];
    read_exact(&mut r, &mut digest, "digest")?;
    if digest != gens.digest(depth) {
        return Err(Error::StaleCache(
            "cache digest does not match the requested generators".into(),
        ));
    }
    if dims != gens.descriptor.factor_dims || p != gens.p() {
        return Err(Error::StaleCache("cache header does not match the generators".into()));
    }
    let descriptor = gens.descriptor.clone();
    let coord_len = descriptor.coord_len();
    let n_rows = read_u64(&mut r, "row count")?;
    let mut rows = Vec::with_capacity(n_rows as usize);
    for _ in 0..n_rows {
        let mut b = [0u8; 2];
        read_exact(&mut r, &mut b, "word length")?;
        let wl = u16::from_le_bytes(b) as usize;
        let mut word = Vec::with_capacity(wl);
        for _ in 0..wl {
            let mut lb = [0u8; 2];
            read_exact(&mut r, &mut lb, "word letter")?;
            word.push(i16::from_le_bytes(lb));
        }
        let mut mu = Vec::with_capacity(coord_len);
        for _ in 0..coord_len {
            mu.push(read_f64(&mut r, "mu coordinate")?);
        }
        let mut lambda = Vec::with_capacity(coord_len);
        for _ in 0..coord_len {
            lambda.push(read_f64(&mut r, "lambda coordinate")?);
        }
        let mut marker = [0u8; 1];
        read_exact(&mut r, &mut marker, "flag marker")?;
        let flag = match marker[0] {
            0 => None,
            1 => {
                let mut frames = Vec::with_capacity(nf);
                for &d in &descriptor.factor_dims {
                    let mut m = Mat::zeros(d, d);
                    for i in 0..d * d {
                        m.data[i] = read_f64(&mut r, "flag frame entry")?;
                    }
                    frames.push(m);
                }
                Some(Flag { descriptor: descriptor.clone(), frames })
            }
            x => return Err(Error::CacheFormat(format!("bad flag marker {x}"))),
        };
        rows.push(OrbitRow {
            word,
            mu: CartanVector { descriptor: descriptor.clone(), coords: mu },
            lambda: CartanVector { descriptor: descriptor.clone(), coords: lambda },
            flag,
        });
    }
    let mut trailing = [0u8; 1];
    if r.read(&mut trailing)? != 0 {
        return Err(Error::CacheFormat("trailing bytes after payload".into()));
    }
    Ok(OrbitTable { descriptor, p, depth, digest, rows })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;
    use crate::words::{enumerate_ball, EnumerateOptions};

    #[test]
    fn roundtrip_bit_exact() {
        let gens = fixtures::sl2_ball_fixture();
        let table = enumerate_ball(
            &gens,
            3,
            &EnumerateOptions { with_flags: true, ..Default::default() },
        )
        .unwrap();
        let dir = std::env::temp_dir().join("anosov-cache-test");
        let path = cache_path(&dir, &gens, 3);
        save_table(&table, &path).unwrap();
        let loaded = load_table(&path, &gens).unwrap();
        assert_eq!(loaded.rows.len(), table.rows.len());
        for (a, b) in table.rows.iter().zip(&loaded.rows) {
            assert_eq!(a.word, b.word);
            assert!(a.mu.coords.iter().zip(&b.mu.coords).all(|(x, y)| x == y));
            assert!(a.lambda.coords.iter().zip(&b.lambda.coords).all(|(x, y)| x == y));
            let (fa, fb) = (a.flag.as_ref().unwrap(), b.flag.as_ref().unwrap());
            assert_eq!(fa.frames, fb.frames);
        }
        std::fs::remove_file(&path).unwrap();
    }

    #[test]
    fn stale_cache_detected() {
        let gens = fixtures::sl2_ball_fixture();
        let table = enumerate_ball(&gens, 2, &EnumerateOptions::default()).unwrap();
        let dir = std::env::temp_dir().join("anosov-cache-test");
        let path = dir.join("stale.orbit");
        save_table(&table, &path).unwrap();
        let other = fixtures::sl2_schottky_fixture();
        let err = load_table(&path, &other).unwrap_err();
        assert!(matches!(err, Error::StaleCache(_)));
        std::fs::remove_file(&path).unwrap();
    }

    #[test]
    fn corrupt_header_rejected() {
        let dir = std::env::temp_dir().join("anosov-cache-test");
        std::fs::create_dir_all(&dir).unwrap();
        let path = dir.join("corrupt.orbit");
        std::fs::write(&path, b"NOTMAGIC").unwrap();
        let gens = fixtures::sl2_ball_fixture();
        let err = load_table(&path, &gens).unwrap_err();
        assert!(matches!(err, Error::CacheFormat(_)));
        std::fs::remove_file(&path).unwrap();
    }

    #[test]
    fn truncated_payload_rejected() {
        let gens = fixtures::sl2_ball_fixture();
        let table = enumerate_ball(&gens, 2, &EnumerateOptions::default()).unwrap();
        let dir = std::env::temp_dir().join("anosov-cache-test");
        let path = dir.join("trunc.orbit");
        save_table(&table, &path).unwrap();
        let bytes = std::fs::read(&path).unwrap();
        std::fs::write(&path, &bytes[..bytes.len() - 7]).unwrap();
        let err = load_table(&path, &gens).unwrap_err();
        assert!(matches!(err, Error::CacheFormat(_)));
        std::fs::remove_file(&path).unwrap();
    }
}
