//! Run configuration merged from an optional `key=value` file and the flags.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use fermispin::fock::ModeUnitary;
use fermispin::nbrdm::MAX_NBRDM_SPINS;
use fermispin::{Error, Result};

use crate::Common;

#[derive(Debug, Clone)]
pub struct RunConfig {
    pub m: usize,
    pub shells: usize,
    /// `identity`, `qft`, `random`, `random:<seed>` or `file:<path>`.
    pub unitary: String,
    pub modes: Vec<usize>,
    pub seed: u64,
    pub tol: f64,
    pub raw: bool,
    pub json: bool,
}

const KEYS: [&str; 8] = ["m", "shells", "unitary", "modes", "seed", "tol", "raw", "json"];

pub fn read_config_file(path: &Path) -> Result<BTreeMap<String, String>> {
    let text = std::fs::read_to_string(path)?;
    let mut map = BTreeMap::new();
    for (lineno, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (key, value) = line
            .split_once('=')
            .ok_or_else(|| Error::InvalidConfiguration(format!("line {}: expected key=value", lineno + 1)))?;
        let key = key.trim().trim_start_matches("--").to_string();
        if !KEYS.contains(&key.as_str()) {
            return Err(Error::InvalidConfiguration(format!("line {}: unknown key {key:?}", lineno + 1)));
        }
        map.insert(key, value.trim().to_string());
    }
    Ok(map)
}

fn parse<T: std::str::FromStr>(key: &str, value: &str) -> Result<T> {
    value
        .parse()
        .map_err(|_| Error::InvalidConfiguration(format!("bad value {value:?} for {key}")))
}

pub fn parse_modes(value: &str) -> Result<Vec<usize>> {
    value
        .split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|s| parse("modes", s))
        .collect()
}

fn parse_bool(key: &str, value: &str) -> Result<bool> {
    match value {
        "true" | "1" | "yes" => Ok(true),
        "false" | "0" | "no" => Ok(false),
        _ => Err(Error::InvalidConfiguration(format!("bad value {value:?} for {key}"))),
    }
}

impl RunConfig {
    pub fn resolve(common: &Common) -> Result<Self> {
        let file = match &common.config {
            Some(path) => read_config_file(path)?,
            None => BTreeMap::new(),
        };
        let get = |key: &str| file.get(key).map(String::as_str);
        let m = match common.m {
            Some(m) => m,
            None => get("m").map(|v| parse("m", v)).transpose()?.unwrap_or(4),
        };
        let shells = match common.shells {
            Some(p) => p,
            None => get("shells").map(|v| parse("shells", v)).transpose()?.unwrap_or(2),
        };
        let unitary = common
            .unitary
            .clone()
            .or_else(|| get("unitary").map(String::from))
            .unwrap_or_else(|| "qft".into());
        let modes = match &common.modes {
            Some(v) => parse_modes(v)?,
            None => match get("modes") {
                Some(v) => parse_modes(v)?,
                None => (0..m.min(4)).collect(),
            },
        };
        let seed = match common.seed {
            Some(s) => s,
            None => get("seed").map(|v| parse("seed", v)).transpose()?.unwrap_or(0),
        };
        let tol = match common.tol {
            Some(t) => t,
            None => get("tol").map(|v| parse("tol", v)).transpose()?.unwrap_or(1e-10),
        };
        let raw = common.raw || get("raw").map(|v| parse_bool("raw", v)).transpose()?.unwrap_or(false);
        let json = common.json || get("json").map(|v| parse_bool("json", v)).transpose()?.unwrap_or(false);
        let config = Self {
            m,
            shells,
            unitary,
            modes,
            seed,
            tol,
            raw,
            json,
        };
        config.validate()?;
        Ok(config)
    }

    fn validate(&self) -> Result<()> {
        if self.shells == 0 || self.shells > self.m {
            return Err(Error::InvalidConfiguration(format!(
                "need 1 <= shells <= m, got shells={} m={}",
                self.shells, self.m
            )));
        }
        for (i, &mode) in self.modes.iter().enumerate() {
            if mode >= self.m {
                return Err(Error::InvalidConfiguration(format!("mode {mode} out of range for m={}", self.m)));
            }
            if self.modes[..i].contains(&mode) {
                return Err(Error::InvalidConfiguration(format!("duplicate mode {mode}")));
            }
        }
        if self.modes.len() > MAX_NBRDM_SPINS {
            return Err(Error::Capacity(format!(
                "at most {MAX_NBRDM_SPINS} extraction modes, got {}",
                self.modes.len()
            )));
        }
        if self.modes.is_empty() {
            return Err(Error::InvalidConfiguration("no extraction modes".into()));
        }
        if !(self.tol > 0.0) {
            return Err(Error::InvalidConfiguration(format!("tolerance must be positive, got {}", self.tol)));
        }
        Ok(())
    }

    /// Canonical name of the unitary, with `random` bound to the seed.
    pub fn unitary_name(&self) -> String {
        if self.unitary == "random" {
            format!("random:{}", self.seed)
        } else {
            self.unitary.clone()
        }
    }

    pub fn load_unitary(&self) -> Result<ModeUnitary> {
        let name = self.unitary_name();
        let u = match name.strip_prefix("file:") {
            Some(path) => ModeUnitary::read_file(&PathBuf::from(path))?,
            None => ModeUnitary::from_named(&name, self.m)?,
        };
        if u.dim() != self.m {
            return Err(Error::InvalidConfiguration(format!(
                "unitary has dimension {} but m={}",
                u.dim(),
                self.m
            )));
        }
        Ok(u)
    }
}
