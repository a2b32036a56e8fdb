//! Experiment configuration: flags or a plain `key = value` file.

use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::VARIANTS;
use crate::error::{Error, Result};
use crate::graph::{GeneratorKind, DEFAULT_RETRIES};
use crate::protect::Mode;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Preset {
    /// 100 runs, sizes 9 to 36.
    Desk,
    /// 1000 runs, sizes 9 to 100.
    Full,
}

impl FromStr for Preset {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "desk" => Ok(Preset::Desk),
            "full" => Ok(Preset::Full),
            _ => Err(Error::Config(format!("unknown preset {s:?}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    #[serde(with = "kind_name")]
    pub network: GeneratorKind,
    pub sizes: Vec<usize>,
    pub runs: usize,
    pub seed: u64,
    pub variants: Vec<Mode>,
    /// Apply the rule-table optimizer to failure-disjoint matrices before measuring.
    pub optimize: bool,
    /// Replace every link weight by 1 (hop counts).
    pub unweighted: bool,
    pub retries: usize,
    /// Worker threads; `None` uses all cores.
    pub threads: Option<usize>,
}

mod kind_name {
    use serde::{Deserialize, Deserializer, Serializer};

    use crate::graph::GeneratorKind;

    pub fn serialize<S: Serializer>(k: &GeneratorKind, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(k.name())
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<GeneratorKind, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self::preset(Preset::Desk)
    }
}

impl ExperimentConfig {
    pub fn preset(p: Preset) -> Self {
        let (sizes, runs) = match p {
            Preset::Desk => (vec![9, 16, 25, 36], 100),
            Preset::Full => (vec![9, 16, 25, 36, 49, 64, 81, 100], 1000),
        };
        ExperimentConfig {
            network: GeneratorKind::ErdosRenyi,
            sizes,
            runs,
            seed: 1,
            variants: VARIANTS.to_vec(),
            optimize: true,
            unweighted: false,
            retries: DEFAULT_RETRIES,
            threads: None,
        }
    }

    /// Sets one option. Keys: `preset`, `network`, `sizes`, `runs`, `seed`, `variants`,
    /// `optimize`, `unweighted`, `retries`, `threads`. A preset replaces sizes and runs.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let value = value.trim();
        let bad = |what: &str| Error::Config(format!("invalid {what} {value:?}"));
        let list = || value.split(',').map(str::trim).filter(|s| !s.is_empty());
        match key.trim() {
            "preset" => {
                let p = Self::preset(value.parse()?);
                self.sizes = p.sizes;
                self.runs = p.runs;
            }
            "network" => self.network = value.parse()?,
            "sizes" => {
                self.sizes = list()
                    .map(|s| s.parse().map_err(|_| bad("size")))
                    .collect::<Result<_>>()?
            }
            "runs" => self.runs = value.parse().map_err(|_| bad("run count"))?,
            "seed" => self.seed = value.parse().map_err(|_| bad("seed"))?,
            "variants" => self.variants = list().map(str::parse).collect::<Result<_>>()?,
            "optimize" => self.optimize = value.parse().map_err(|_| bad("flag"))?,
            "unweighted" => self.unweighted = value.parse().map_err(|_| bad("flag"))?,
            "retries" => self.retries = value.parse().map_err(|_| bad("retry budget"))?,
            "threads" => {
                let n: usize = value.parse().map_err(|_| bad("thread count"))?;
                self.threads = (n > 0).then_some(n);
            }
            other => return Err(Error::Config(format!("unknown key {other:?}"))),
        }
        Ok(())
    }

    /// Applies a `key = value` file on top of `self`. `#` starts a comment.
    pub fn apply_text(&mut self, text: &str) -> Result<()> {
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| Error::Config(format!("line {}: expected key = value", i + 1)))?;
            self.set(k, v)
                .map_err(|e| Error::Config(format!("line {}: {e}", i + 1)))?;
        }
        Ok(())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let mut c = Self::default();
        c.apply_text(&std::fs::read_to_string(path)?)?;
        Ok(c)
    }

    pub fn validate(&self) -> Result<()> {
        if self.sizes.is_empty() || self.runs == 0 || self.variants.is_empty() {
            return Err(Error::Config(
                "sizes, runs and variants must be non-empty".into(),
            ));
        }
        Ok(())
    }
}
