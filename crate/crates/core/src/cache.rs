//! On-disk cache of enumerated periodic points.
//!
//! One text file per map and period:
//!
//! ```text
//! julia-pressure periodic cache v1
//! fingerprint <sha256 of the canonical coefficients>
//! n <n> found <found> expected <expected>
//! P <re> <im> <mult_re> <mult_im> <log_abs_mult> <primitive_period> <residual>
//! ...
//! ```
//!
//! Reals are written with 17 significant digits, which round-trips `f64`
//! exactly. Malformed point lines, including a final line cut off before its
//! newline, are skipped and counted.

use crate::map::RationalMap;
use crate::periodic::{EnumerationReport, PeriodicPoint, PeriodicSet};
use num_complex::Complex64;
use sha2::{Digest, Sha256};
use std::fmt::Write as _;
use std::fs;
use std::io;
use std::path::{Path, PathBuf};

pub const CACHE_VERSION: u32 = 1;
pub const CACHE_DIR_ENV: &str = "JULIA_PRESSURE_CACHE_DIR";
const MAGIC: &str = "julia-pressure periodic cache v";

#[derive(Debug, thiserror::Error)]
pub enum CacheError {
    #[error("cache i/o on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: io::Error,
    },
    #[error("malformed cache header at line {line}: {message}")]
    BadHeader { line: usize, message: String },
    #[error("cache version {found} is not supported (expected {CACHE_VERSION})")]
    Version { found: String },
    #[error("stale cache: fingerprint {found} does not match the requested map ({expected})")]
    FingerprintMismatch { expected: String, found: String },
}

/// SHA-256 of the map's canonical coefficient string, hex encoded.
pub fn fingerprint(map: &RationalMap) -> String {
    hex::encode(Sha256::digest(map.canonical_coefficients().as_bytes()))
}

#[derive(Debug, Clone, PartialEq)]
pub struct CacheRecord {
    pub fingerprint: String,
    pub set: PeriodicSet,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LoadedRecord {
    pub record: CacheRecord,
    /// Point lines that could not be parsed.
    pub skipped: usize,
}

pub fn encode(record: &CacheRecord) -> String {
    let r = &record.set.report;
    let mut out = format!(
        "{MAGIC}{CACHE_VERSION}\nfingerprint {}\nn {} found {} expected {}\n",
        record.fingerprint, r.n, r.found, r.expected
    );
    for p in &record.set.points {
        let _ = writeln!(
            out,
            "P {:.16e} {:.16e} {:.16e} {:.16e} {:.16e} {} {:.16e}",
            p.z.re, p.z.im, p.multiplier.re, p.multiplier.im, p.log_abs_multiplier, p.primitive_period, p.residual
        );
    }
    out
}

fn header_field<'a>(line: Option<&'a str>, index: usize, key: &str) -> Result<&'a str, CacheError> {
    line.and_then(|l| l.strip_prefix(key))
        .and_then(|rest| rest.strip_prefix(' '))
        .ok_or_else(|| CacheError::BadHeader {
            line: index,
            message: format!("expected `{key} ...`"),
        })
}

fn parse_point(line: &str, n: usize) -> Option<PeriodicPoint> {
    let mut it = line.strip_prefix("P ")?.split(' ');
    let mut real = || it.next()?.parse::<f64>().ok();
    let (re, im, mre, mim, log_abs) = (real()?, real()?, real()?, real()?, real()?);
    let primitive_period = it.next()?.parse::<usize>().ok()?;
    let residual = it.next()?.parse::<f64>().ok()?;
    if it.next().is_some() || primitive_period == 0 || !n.is_multiple_of(primitive_period) {
        return None;
    }
    Some(PeriodicPoint {
        z: Complex64::new(re, im),
        period: n,
        primitive_period,
        multiplier: Complex64::new(mre, mim),
        log_abs_multiplier: log_abs,
        residual,
    })
}

/// Parses a cache file and checks it against `expected_fingerprint`.
pub fn decode(text: &str, expected_fingerprint: &str) -> Result<LoadedRecord, CacheError> {
    let mut lines = text.split('\n');
    let magic = lines.next().unwrap_or_default();
    let version = magic.strip_prefix(MAGIC).ok_or_else(|| CacheError::BadHeader {
        line: 1,
        message: "not a periodic-point cache".into(),
    })?;
    if version != CACHE_VERSION.to_string() {
        return Err(CacheError::Version { found: version.into() });
    }
    let found_fp = header_field(lines.next(), 2, "fingerprint")?;
    if found_fp != expected_fingerprint {
        return Err(CacheError::FingerprintMismatch {
            expected: expected_fingerprint.into(),
            found: found_fp.into(),
        });
    }
    let counts: Vec<&str> = header_field(lines.next(), 3, "n")?.split(' ').collect();
    let bad_counts = || CacheError::BadHeader {
        line: 3,
        message: "expected `n <n> found <found> expected <expected>`".into(),
    };
    let [n, "found", found, "expected", expected] = counts[..] else {
        return Err(bad_counts());
    };
    let parse = |s: &str| s.parse::<usize>().map_err(|_| bad_counts());
    let (n, found, expected) = (parse(n)?, parse(found)?, parse(expected)?);

    let body: Vec<&str> = lines.collect();
    // `split` yields a final empty piece when the text ends in a newline; anything
    // else there is a line that was cut off.
    let (complete, tail) = body.split_at(body.len().saturating_sub(1));
    let mut skipped = tail.iter().filter(|l| !l.is_empty()).count();
    let mut points = Vec::with_capacity(complete.len());
    for line in complete {
        match parse_point(line, n) {
            Some(p) => points.push(p),
            None => skipped += 1,
        }
    }
    let report = if skipped == 0 && points.len() == found {
        EnumerationReport::new(n, found, expected)
    } else {
        EnumerationReport::new(n, points.len(), expected)
    };
    Ok(LoadedRecord {
        record: CacheRecord {
            fingerprint: found_fp.into(),
            set: PeriodicSet { points, report },
        },
        skipped,
    })
}

/// Cache directory: the environment override if set, else `default`.
pub fn cache_dir(default: &Path) -> PathBuf {
    std::env::var_os(CACHE_DIR_ENV)
        .filter(|v| !v.is_empty())
        .map_or_else(|| default.to_path_buf(), PathBuf::from)
}

#[derive(Debug, Clone)]
pub struct PeriodicCache {
    dir: PathBuf,
}

impl PeriodicCache {
    pub fn new(dir: impl Into<PathBuf>) -> Self {
        Self { dir: dir.into() }
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    pub fn path_for(&self, fingerprint: &str, n: usize) -> PathBuf {
        self.dir.join(format!("{}-n{n:02}.cache", &fingerprint[..16.min(fingerprint.len())]))
    }

    fn io(path: &Path) -> impl FnOnce(io::Error) -> CacheError + '_ {
        move |source| CacheError::Io {
            path: path.to_path_buf(),
            source,
        }
    }

    /// The stored record for `map` and `n`, if any.
    pub fn load(&self, map: &RationalMap, n: usize) -> Result<Option<LoadedRecord>, CacheError> {
        let fp = fingerprint(map);
        let path = self.path_for(&fp, n);
        match fs::read_to_string(&path) {
            Ok(text) => decode(&text, &fp).map(Some),
            Err(e) if e.kind() == io::ErrorKind::NotFound => Ok(None),
            Err(e) => Err(Self::io(&path)(e)),
        }
    }

    /// Writes through a temporary file so readers never see a partial record.
    pub fn store(&self, map: &RationalMap, set: &PeriodicSet) -> Result<PathBuf, CacheError> {
        fs::create_dir_all(&self.dir).map_err(Self::io(&self.dir))?;
        let fp = fingerprint(map);
        let path = self.path_for(&fp, set.report.n);
        let tmp = path.with_extension("tmp");
        let record = CacheRecord {
            fingerprint: fp,
            set: set.clone(),
        };
        fs::write(&tmp, encode(&record)).map_err(Self::io(&tmp))?;
        fs::rename(&tmp, &path).map_err(Self::io(&path))?;
        Ok(path)
    }
}
