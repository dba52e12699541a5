//! Text store of eigensystems, one file per `(k, N)`.
//!
//! ```text
//! CUSPMOMENT-EIG v1 k=<k> N=<N> dim=<d>
//! omega=<ω> <λ(2)> <λ(3)> <λ(5)> …
//! ```
//!
//! Only prime eigenvalues are stored; composites are rebuilt on load.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use super::{fill_multiplicative, Eigensystem};
use crate::arith::Sieve;
use crate::{Error, Result};

const MAGIC: &str = "CUSPMOMENT-EIG v1";

pub fn store_path(dir: &Path, k: u32, n: usize) -> PathBuf {
    dir.join(format!("eig-k{k}-N{n}.txt"))
}

pub fn format_store(k: u32, n: usize, systems: &[Eigensystem]) -> String {
    let sieve = Sieve::new(n.max(2));
    let primes: Vec<u64> = sieve.primes().collect();
    let mut out = format!("{MAGIC} k={k} N={n} dim={}\n", systems.len());
    for f in systems {
        out.push_str(&format!("omega={:.24e}", f.omega));
        for &p in &primes {
            out.push_str(&format!(" {:.24e}", f.lambdas[p as usize]));
        }
        out.push('\n');
    }
    out
}

pub fn parse_store(text: &str) -> Result<(u32, usize, Vec<Eigensystem>)> {
    let mut lines = text.lines();
    let header = lines.next().ok_or_else(|| Error::Store("empty file".into()))?;
    let rest = header
        .strip_prefix(MAGIC)
        .ok_or_else(|| Error::Store(format!("bad header {header:?}")))?;
    let mut k = None;
    let mut n = None;
    let mut dim = None;
    for field in rest.split_whitespace() {
        let (key, value) = field
            .split_once('=')
            .ok_or_else(|| Error::Store(format!("bad header field {field:?}")))?;
        let parsed: u64 = value
            .parse()
            .map_err(|_| Error::Store(format!("bad header value {field:?}")))?;
        match key {
            "k" => k = Some(parsed as u32),
            "N" => n = Some(parsed as usize),
            "dim" => dim = Some(parsed as usize),
            _ => return Err(Error::Store(format!("unknown header field {key:?}"))),
        }
    }
    let (k, n, dim) = match (k, n, dim) {
        (Some(k), Some(n), Some(d)) => (k, n, d),
        _ => return Err(Error::Store("header lacks k, N or dim".into())),
    };
    let sieve = Sieve::new(n.max(2));
    let primes: Vec<u64> = sieve.primes().collect();
    let mut systems = Vec::with_capacity(dim);
    for line in lines.filter(|l| !l.trim().is_empty()) {
        let mut fields = line.split_whitespace();
        let omega = fields
            .next()
            .and_then(|f| f.strip_prefix("omega="))
            .ok_or_else(|| Error::Store("form line must start with omega=".into()))?;
        let omega: f64 = omega.parse().map_err(|_| Error::Store(format!("bad omega {omega:?}")))?;
        let values: Vec<f64> = fields
            .map(|f| f.parse().map_err(|_| Error::Store(format!("bad eigenvalue {f:?}"))))
            .collect::<Result<_>>()?;
        if values.len() != primes.len() {
            return Err(Error::Store(format!(
                "expected {} prime eigenvalues, found {}",
                primes.len(),
                values.len()
            )));
        }
        let mut lambdas = vec![0.0; n + 1];
        for (&p, &v) in primes.iter().zip(&values) {
            if (p as usize) <= n {
                lambdas[p as usize] = v;
            }
        }
        fill_multiplicative(&mut lambdas, &sieve);
        systems.push(Eigensystem { weight: k, bound: n, lambdas, omega });
    }
    if systems.len() != dim {
        return Err(Error::Store(format!("header says dim={dim}, found {} forms", systems.len())));
    }
    Ok((k, n, systems))
}

pub fn save(dir: &Path, k: u32, n: usize, systems: &[Eigensystem]) -> Result<PathBuf> {
    fs::create_dir_all(dir)?;
    let path = store_path(dir, k, n);
    let tmp = path.with_extension("tmp");
    let mut file = fs::File::create(&tmp)?;
    file.write_all(format_store(k, n, systems).as_bytes())?;
    file.sync_all()?;
    fs::rename(&tmp, &path)?;
    Ok(path)
}

/// Loads the smallest store for weight `k` whose bound is at least `min_n`.
pub fn find(dir: &Path, k: u32, min_n: usize) -> Result<Vec<Eigensystem>> {
    let prefix = format!("eig-k{k}-N");
    let mut best: Option<usize> = None;
    if let Ok(entries) = fs::read_dir(dir) {
        for entry in entries.flatten() {
            let name = entry.file_name().to_string_lossy().into_owned();
            let bound = name
                .strip_prefix(&prefix)
                .and_then(|rest| rest.strip_suffix(".txt"))
                .and_then(|n| n.parse::<usize>().ok());
            if let Some(n) = bound {
                if n >= min_n && best.is_none_or(|b| n < b) {
                    best = Some(n);
                }
            }
        }
    }
    match best {
        Some(n) => load(dir, k, n),
        None => Err(Error::Store(format!(
            "no eigensystem store for k={k} with N ≥ {min_n} in {}; run `cuspmoment eigensystems --k {k} --n {min_n}` first",
            dir.display()
        ))),
    }
}

pub fn load(dir: &Path, k: u32, n: usize) -> Result<Vec<Eigensystem>> {
    let path = store_path(dir, k, n);
    let text = fs::read_to_string(&path).map_err(|e| {
        Error::Store(format!("cannot read {}: {e}; run `cuspmoment eigensystems --k {k} --n {n}` first", path.display()))
    })?;
    let (fk, fnn, systems) = parse_store(&text)?;
    if fk != k || fnn != n {
        return Err(Error::Store(format!("{} holds k={fk} N={fnn}", path.display())));
    }
    Ok(systems)
}
