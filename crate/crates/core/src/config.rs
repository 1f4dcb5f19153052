//! Line-oriented `key = value` study configuration files.

use std::path::{Path, PathBuf};
use std::str::FromStr;

use crate::cells::{Domain, ReferenceCell};
use crate::error::{Error, Result};
use crate::expr::{parse_expression, Expr};
use crate::nfunc::NFunction;
use crate::study::{StudyConfig, StudyKind};

/// An expression together with the text it was parsed from.
#[derive(Debug, Clone, PartialEq)]
pub struct Formula {
    pub source: String,
    pub expr: Expr,
}

impl Formula {
    pub fn parse(source: &str, dim: usize) -> Result<Self> {
        Ok(Formula { source: source.trim().to_string(), expr: parse_expression(source, dim)? })
    }
}

impl FromStr for StudyKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "strong" => Ok(StudyKind::Strong),
            "periodic" => Ok(StudyKind::Periodic),
            "uci" => Ok(StudyKind::Uci),
            "weak" => Ok(StudyKind::Weak),
            "liminf" => Ok(StudyKind::Liminf),
            other => Err(Error::config(format!(
                "unknown study kind `{other}` (expected strong, periodic, uci, weak or liminf)"
            ))),
        }
    }
}

const KEYS: [&str; 11] = ["nfunction", "domain", "cell", "kind", "eps", "m", "f", "g", "w", "out", "rel_tol"];

/// Parses a comma-separated eps list.
pub fn parse_eps_list(text: &str) -> Result<Vec<f64>> {
    text.split(',')
        .map(|e| e.trim().parse::<f64>().map_err(|err| Error::config(format!("bad eps value `{}`: {err}", e.trim()))))
        .collect()
}

impl StudyConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        let mut cfg = StudyConfig::parse(&text)?;
        if let Some(out) = &cfg.out {
            if out.is_relative() {
                if let Some(dir) = path.parent() {
                    cfg.out = Some(dir.join(out));
                }
            }
        }
        Ok(cfg)
    }

    /// Parses the text of a config file. `#` starts a comment line.
    pub fn parse(text: &str) -> Result<Self> {
        let mut entries: Vec<(String, String)> = Vec::new();
        for (lineno, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| Error::config(format!("line {}: expected `key = value`", lineno + 1)))?;
            let key = key.trim();
            if !KEYS.contains(&key) {
                return Err(Error::config(format!("line {}: unknown key `{key}`", lineno + 1)));
            }
            if entries.iter().any(|(k, _)| k == key) {
                return Err(Error::config(format!("line {}: duplicate key `{key}`", lineno + 1)));
            }
            entries.push((key.to_string(), value.trim().to_string()));
        }
        let get = |k: &str| entries.iter().find(|(key, _)| key == k).map(|(_, v)| v.as_str());
        let require = |k: &str| get(k).ok_or_else(|| Error::config(format!("missing key `{k}`")));

        let nfunction_spec = require("nfunction")?.to_string();
        let nfunction = NFunction::from_spec(&nfunction_spec)?;
        let domain = Domain::from_spec(require("domain")?)?;
        let dim = domain.dim();
        let cell = match get("cell") {
            Some(c) => ReferenceCell::from_spec(c)?,
            None => ReferenceCell::unit(dim),
        };
        let kind: StudyKind = require("kind")?.parse()?;
        let eps = parse_eps_list(require("eps")?)?;
        let m = require("m")?.parse::<usize>().map_err(|e| Error::config(format!("bad m: {e}")))?;
        let formula = |k: &str| get(k).map(|s| Formula::parse(s, dim)).transpose();
        let rel_tol = match get("rel_tol") {
            Some(v) => v.parse::<f64>().map_err(|e| Error::config(format!("bad rel_tol: {e}")))?,
            None => crate::study::STUDY_REL_TOL,
        };
        let cfg = StudyConfig {
            nfunction_spec,
            nfunction,
            domain,
            cell,
            kind,
            eps,
            m,
            f: formula("f")?,
            g: formula("g")?,
            w: formula("w")?,
            out: get("out").map(PathBuf::from),
            rel_tol,
        };
        cfg.validate()?;
        Ok(cfg)
    }
}
