//! Plain `key = value` configuration files. Blank lines and lines starting
//! with `#` are ignored.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::neurokit::TrainConfig;
use crate::sigstream::{GenConfig, ImpairmentRanges};

use super::pipeline::RunConfig;

/// Parsed key/value pairs. Typed reads consume keys so leftovers can be
/// reported as unknown.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct ConfigMap {
    entries: BTreeMap<String, (usize, String)>,
    errors: Vec<String>,
}

impl ConfigMap {
    pub fn parse(text: &str) -> Result<Self> {
        let mut map = ConfigMap::default();
        let mut errs = Vec::new();
        for (n, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            match line.split_once('=') {
                Some((k, v)) if !k.trim().is_empty() => {
                    let k = k.trim().to_string();
                    if map.entries.contains_key(&k) {
                        errs.push(format!("line {}: duplicate key {k:?}", n + 1));
                    }
                    map.entries.insert(k, (n + 1, v.trim().to_string()));
                }
                _ => errs.push(format!("line {}: expected key = value", n + 1)),
            }
        }
        if errs.is_empty() {
            Ok(map)
        } else {
            Err(Error::Validation(errs))
        }
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::parse(&std::fs::read_to_string(path)?)
    }

    pub fn set(&mut self, key: &str, value: impl ToString) {
        self.entries.insert(key.to_string(), (0, value.to_string()));
    }

    pub fn contains(&self, key: &str) -> bool {
        self.entries.contains_key(key)
    }

    /// Removes and parses `key`; a bad value is recorded and reads as absent.
    pub fn take<T: FromStr>(&mut self, key: &str) -> Option<T>
    where
        T::Err: std::fmt::Display,
    {
        let (line, v) = self.entries.remove(key)?;
        match v.parse() {
            Ok(t) => Some(t),
            Err(e) => {
                self.errors.push(format!("line {line}: {key} = {v:?}: {e}"));
                None
            }
        }
    }

    pub fn take_list<T: FromStr>(&mut self, key: &str) -> Option<Vec<T>>
    where
        T::Err: std::fmt::Display,
    {
        let (line, v) = self.entries.remove(key)?;
        let mut out = Vec::new();
        for part in v.split(',').map(str::trim).filter(|p| !p.is_empty()) {
            match part.parse() {
                Ok(t) => out.push(t),
                Err(e) => {
                    self.errors.push(format!("line {line}: {key} item {part:?}: {e}"));
                    return None;
                }
            }
        }
        Some(out)
    }

    /// Fails on parse errors and on keys nobody read.
    pub fn finish(self) -> Result<()> {
        let mut errs = self.errors;
        for (k, (line, _)) in self.entries {
            errs.push(format!("line {line}: unknown key {k:?}"));
        }
        if errs.is_empty() {
            Ok(())
        } else {
            Err(Error::Validation(errs))
        }
    }
}

/// Everything the bench reads from a config file.
#[derive(Clone, Debug, PartialEq)]
pub struct BenchConfig {
    pub gen: GenConfig,
    pub run: RunConfig,
}

impl BenchConfig {
    pub fn from_map(mut m: ConfigMap) -> Result<Self> {
        let mut gen = GenConfig::default();
        if let Some(v) = m.take("d") {
            gen.d = v;
        }
        if let Some(v) = m.take("shift") {
            gen.shift = v;
        }
        if let Some(v) = m.take("sps") {
            gen.sps = v;
        }
        if let Some(v) = m.take_list("snr_grid") {
            gen.snr_grid = v;
        }
        if let Some(v) = m.take("frames_per_class_per_snr") {
            gen.frames_per_class_per_snr = v;
        }
        if let Some(v) = m.take("frames_per_waveform") {
            gen.frames_per_waveform = v;
        }
        if let Some(v) = m.take("workers") {
            gen.workers = v;
        }
        if let Some(v) = m.take::<String>("impairments") {
            match v.as_str() {
                "default" => gen.impairments = ImpairmentRanges::default(),
                "none" => gen.impairments = ImpairmentRanges::none(),
                _ => m.errors.push(format!("impairments must be default or none, got {v:?}")),
            }
        }
        let seed = m.take("seed").unwrap_or(0);
        gen.seed = seed;

        let mut run = RunConfig {
            seed,
            ..RunConfig::default()
        };
        if let Some(v) = m.take::<PathBuf>("dataset") {
            run.dataset = v;
        }
        if let Some(v) = m.take("method") {
            run.method = v;
        }
        run.k = m.take("k");
        run.out = m.take("out");
        run.rankers = m.take("rankers");
        run.plan = m.take("plan");
        if let Some(v) = m.take("test_fraction") {
            run.test_fraction = v;
        }
        if let Some(v) = m.take("val_fraction") {
            run.val_fraction = v;
        }
        if let Some(v) = m.take("leaf_budget") {
            run.leaf_budget = v;
        }
        read_train(&mut m, "", &mut run.train);
        read_train(&mut m, "ranker_", &mut run.ranker);
        read_train(&mut m, "leaf_", &mut run.leaf);
        m.finish()?;
        Ok(BenchConfig { gen, run })
    }

    pub fn load(path: Option<&Path>) -> Result<Self> {
        match path {
            Some(p) => Self::from_map(ConfigMap::load(p)?),
            None => Self::from_map(ConfigMap::default()),
        }
    }
}

fn read_train(m: &mut ConfigMap, prefix: &str, cfg: &mut TrainConfig) {
    if let Some(v) = m.take(&format!("{prefix}epochs")) {
        cfg.max_epochs = v;
    }
    if let Some(v) = m.take(&format!("{prefix}patience")) {
        cfg.patience = v;
    }
    if let Some(v) = m.take(&format!("{prefix}batch_size")) {
        cfg.batch_size = v;
    }
    if let Some(v) = m.take(&format!("{prefix}learning_rate")) {
        cfg.learning_rate = v;
    }
}
