//! Experiment configuration, read from flat `key=value` text.
//!
//! ```text
//! num_dim=10
//! num_rounds=30
//! num_arms=1
//! methods=sts,ts,random
//! functions=sphere,ackley
//! repeats=10
//! seed=42
//! distort=true
//! ```
//!
//! Blank lines and lines starting with `#` are ignored. `num_rounds`
//! defaults to `max(30, num_dim)`, `num_arms` to 1, `repeats` to 1, `seed`
//! to 0 and `distort` to true.

use std::collections::HashSet;
use std::path::Path;

use stagger::testbed::TestFunction;

use crate::error::{HarnessError, Result};
use crate::method::MethodSpec;

#[derive(Clone, Debug, PartialEq)]
pub struct ExperimentConfig {
    pub functions: Vec<String>,
    pub num_dim: usize,
    pub num_rounds: usize,
    pub num_arms: usize,
    pub methods: Vec<MethodSpec>,
    pub repeats: usize,
    pub seed: u64,
    /// Whether each (function, repeat) cell sees a seeded distortion.
    pub distort: bool,
}

pub fn default_rounds(num_dim: usize) -> usize {
    num_dim.max(30)
}

fn config_err(msg: impl Into<String>) -> HarnessError {
    HarnessError::Config(msg.into())
}

fn parse_number<T: std::str::FromStr>(key: &str, value: &str) -> Result<T> {
    value
        .parse()
        .map_err(|_| config_err(format!("`{key}` expects a non-negative integer, got `{value}`")))
}

fn parse_list(value: &str) -> Vec<String> {
    value
        .split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(str::to_string)
        .collect()
}

impl ExperimentConfig {
    /// A configuration with default rounds, one arm per round, one repeat
    /// and seed 0.
    pub fn new(functions: &[&str], num_dim: usize, methods: &[&str]) -> Result<Self> {
        let cfg = Self {
            functions: functions.iter().map(|s| s.to_string()).collect(),
            num_dim,
            num_rounds: default_rounds(num_dim),
            num_arms: 1,
            methods: methods.iter().map(|m| MethodSpec::parse(m)).collect::<Result<_>>()?,
            repeats: 1,
            seed: 0,
            distort: true,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn parse(text: &str) -> Result<Self> {
        let mut seen = HashSet::new();
        let mut functions = None;
        let mut methods = None;
        let mut num_dim = None;
        let mut num_rounds = None;
        let mut num_arms = 1;
        let mut repeats = 1;
        let mut seed = 0;
        let mut distort = true;
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| config_err(format!("line {}: expected key=value", lineno + 1)))?;
            let (key, value) = (key.trim(), value.trim());
            if !seen.insert(key.to_string()) {
                return Err(config_err(format!("duplicate key `{key}`")));
            }
            match key {
                "functions" => functions = Some(parse_list(value)),
                "methods" => methods = Some(parse_list(value)),
                "num_dim" => num_dim = Some(parse_number(key, value)?),
                "num_rounds" => num_rounds = Some(parse_number(key, value)?),
                "num_arms" => num_arms = parse_number(key, value)?,
                "repeats" => repeats = parse_number(key, value)?,
                "seed" => seed = parse_number(key, value)?,
                "distort" => {
                    distort = value
                        .parse()
                        .map_err(|_| config_err(format!("`distort` expects true or false, got `{value}`")))?
                }
                _ => return Err(config_err(format!("unknown key `{key}`"))),
            }
        }
        let num_dim = num_dim.ok_or_else(|| config_err("missing `num_dim`"))?;
        let methods: Vec<String> = methods.ok_or_else(|| config_err("missing `methods`"))?;
        let cfg = Self {
            functions: functions.ok_or_else(|| config_err("missing `functions`"))?,
            num_dim,
            num_rounds: num_rounds.unwrap_or_else(|| default_rounds(num_dim)),
            num_arms,
            methods: methods.iter().map(|m| MethodSpec::parse(m)).collect::<Result<_>>()?,
            repeats,
            seed,
            distort,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        let text =
            std::fs::read_to_string(path).map_err(|e| config_err(format!("cannot read {}: {e}", path.display())))?;
        Self::parse(&text)
    }

    pub fn validate(&self) -> Result<()> {
        if self.num_dim == 0 {
            return Err(config_err("num_dim must be at least 1"));
        }
        if self.num_rounds == 0 || self.num_arms == 0 || self.repeats == 0 {
            return Err(config_err("num_rounds, num_arms and repeats must be at least 1"));
        }
        if self.functions.is_empty() {
            return Err(config_err("no functions listed"));
        }
        if self.methods.is_empty() {
            return Err(config_err("no methods listed"));
        }
        let mut names = HashSet::new();
        for f in &self.functions {
            TestFunction::by_name(f, self.num_dim).map_err(|e| config_err(e.to_string()))?;
            if !names.insert(f.as_str()) {
                return Err(config_err(format!("function `{f}` listed twice")));
            }
        }
        let mut names = HashSet::new();
        for m in &self.methods {
            if !names.insert(m.name.as_str()) {
                return Err(config_err(format!("method `{}` listed twice", m.name)));
            }
        }
        Ok(())
    }

    /// The same experiment with a different method list.
    pub fn with_methods(&self, methods: Vec<MethodSpec>) -> Result<Self> {
        let cfg = Self {
            methods,
            ..self.clone()
        };
        cfg.validate()?;
        Ok(cfg)
    }

    /// Renders the configuration back to `key=value` text.
    pub fn to_text(&self) -> String {
        let methods: Vec<&str> = self.methods.iter().map(|m| m.name.as_str()).collect();
        format!(
            "num_dim={}\nnum_rounds={}\nnum_arms={}\nmethods={}\nfunctions={}\nrepeats={}\nseed={}\ndistort={}\n",
            self.num_dim,
            self.num_rounds,
            self.num_arms,
            methods.join(","),
            self.functions.join(","),
            self.repeats,
            self.seed,
            self.distort
        )
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_follow_dimension() {
        let cfg = ExperimentConfig::parse("num_dim=50\nmethods=sts\nfunctions=ackley\n").unwrap();
        assert_eq!(cfg.num_rounds, 50);
        assert_eq!(cfg.num_arms, 1);
        assert_eq!(cfg.repeats, 1);
        let cfg = ExperimentConfig::parse("num_dim=5\nmethods=sts\nfunctions=ackley\n").unwrap();
        assert_eq!(cfg.num_rounds, 30);
    }

    #[test]
    fn round_trips_through_text() {
        let text = "# comment\nnum_dim=10\nnum_rounds=12\nmethods=sts, ts ,random\nfunctions=sphere,ackley\nrepeats=10\nseed=42\n\nnum_arms=3\ndistort=false\n";
        let cfg = ExperimentConfig::parse(text).unwrap();
        assert_eq!(cfg.functions, ["sphere", "ackley"]);
        assert_eq!(cfg.methods.len(), 3);
        assert_eq!(
            (cfg.num_dim, cfg.num_rounds, cfg.num_arms, cfg.repeats, cfg.seed),
            (10, 12, 3, 10, 42)
        );
        assert!(!cfg.distort);
        assert_eq!(ExperimentConfig::parse(&cfg.to_text()).unwrap(), cfg);
    }

    #[test]
    fn rejects_bad_input() {
        let base = "num_dim=3\nmethods=sts\nfunctions=sphere\n";
        for extra in [
            "bogus=1",
            "num_rounds=0",
            "num_arms=0",
            "repeats=0",
            "seed=-1",
            "num_rounds=x",
            "no equals sign",
            "num_dim=4",
            "distort=maybe",
        ] {
            let text = format!("{base}{extra}\n");
            assert!(
                matches!(ExperimentConfig::parse(&text), Err(HarnessError::Config(_))),
                "{extra}"
            );
        }
        for text in [
            "methods=sts\nfunctions=sphere\n",
            "num_dim=0\nmethods=sts\nfunctions=sphere\n",
            "num_dim=2\nmethods=warp\nfunctions=sphere\n",
            "num_dim=2\nmethods=sts\nfunctions=nowhere\n",
            "num_dim=2\nmethods=sts,sts\nfunctions=sphere\n",
            "num_dim=2\nmethods=\nfunctions=sphere\n",
        ] {
            assert!(
                matches!(ExperimentConfig::parse(text), Err(HarnessError::Config(_))),
                "{text}"
            );
        }
    }
}
