//! Persistent cache of smoothed partial zeta values.
//!
//! One record per line, `<query key>\t<rational>`, after a header that records the smoothing
//! normalization. The file is held under an exclusive advisory lock while open. A damaged tail
//! (a partial last write, or any unparsable line and everything after it) is cut off on open.

use std::collections::HashMap;
use std::fs::{File, OpenOptions};
use std::io::{Read, Seek, SeekFrom, Write};
use std::path::{Path, PathBuf};

use num_rational::BigRational;

use crate::error::{Error, Result};
use crate::quadfield::QuadField;
use crate::shintani::{partial_zeta, ZetaQuery};

/// First line of every cache file.
pub const HEADER: &str =
    "# bsunit zeta cache v1: zeta_T(b, -k) with T-smoothing 1 - ell sigma_q^-1 on lattice b^-1 q";

/// Environment variable overriding the default cache location.
pub const CACHE_ENV: &str = "BSUNIT_CACHE";

fn io(e: std::io::Error) -> Error {
    Error::Io(e.to_string())
}

#[derive(Debug)]
pub struct ZetaCache {
    path: PathBuf,
    file: File,
    values: HashMap<String, BigRational>,
    hits: u64,
}

impl ZetaCache {
    pub fn open(path: &Path) -> Result<Self> {
        if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
            std::fs::create_dir_all(dir).map_err(io)?;
        }
        let mut file = OpenOptions::new().read(true).write(true).create(true).truncate(false).open(path).map_err(io)?;
        file.lock().map_err(io)?;
        let mut text = String::new();
        file.read_to_string(&mut text).map_err(io)?;
        let mut values = HashMap::new();
        let mut good = 0usize;
        let mut damaged = false;
        if text.is_empty() {
            file.write_all(format!("{HEADER}\n").as_bytes()).map_err(io)?;
        } else {
            let mut lines = text.split_inclusive('\n');
            match lines.next() {
                Some(h) if h.trim_end() == HEADER && h.ends_with('\n') => good = h.len(),
                _ => return Err(Error::Io(format!("{} is not a zeta cache", path.display()))),
            }
            for line in lines {
                match parse_record(line) {
                    Some((k, v)) => {
                        values.insert(k, v);
                        good += line.len();
                    }
                    None => {
                        damaged = true;
                        break;
                    }
                }
            }
        }
        if damaged {
            log::warn!("truncating damaged cache tail of {} at byte {good}", path.display());
            file.set_len(good as u64).map_err(io)?;
        }
        file.seek(SeekFrom::End(0)).map_err(io)?;
        Ok(ZetaCache { path: path.to_path_buf(), file, values, hits: 0 })
    }

    pub fn path(&self) -> &Path {
        &self.path
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Number of lookups answered from the cache since opening.
    pub fn hits(&self) -> u64 {
        self.hits
    }

    pub fn get(&mut self, key: &str) -> Option<BigRational> {
        let v = self.values.get(key).cloned();
        if v.is_some() {
            self.hits += 1;
        }
        v
    }

    pub fn insert(&mut self, key: &str, value: &BigRational) -> Result<()> {
        if key.contains(['\t', '\n']) {
            return Err(Error::Invalid("cache keys cannot contain tabs or newlines".into()));
        }
        if self.values.contains_key(key) {
            return Ok(());
        }
        self.file.write_all(format!("{key}\t{value}\n").as_bytes()).map_err(io)?;
        self.file.flush().map_err(io)?;
        self.values.insert(key.to_string(), value.clone());
        Ok(())
    }

    /// `partial_zeta` through the cache.
    pub fn zeta(&mut self, field: &QuadField, q: &ZetaQuery) -> Result<BigRational> {
        let key = q.key(field.d());
        if let Some(v) = self.get(&key) {
            return Ok(v);
        }
        let v = partial_zeta(field, q)?;
        self.insert(&key, &v)?;
        Ok(v)
    }
}

fn parse_record(line: &str) -> Option<(String, BigRational)> {
    let body = line.strip_suffix('\n')?;
    let (k, v) = body.split_once('\t')?;
    if k.is_empty() {
        return None;
    }
    Some((k.to_string(), v.parse().ok()?))
}
