//! Method names as they appear in configuration files.
//!
//! | name            | arms come from                                        |
//! |-----------------|-------------------------------------------------------|
//! | `sts`           | stagger Thompson sampler                              |
//! | `sts-ui`, `sts-m`, `sts-t`, `sts-ns` | its ablations                    |
//! | `<sts name>@M`  | any of the above with `M` refinement iterations       |
//! | `ts`, `ts-N`    | Thompson sampling over 1000 or `N` uniform candidates |
//! | `pss`           | Hit-and-Run sampler                                   |
//! | `ei`, `ucb`, `sr` | acquisition maximization, greedy for batches        |
//! | `random`, `sobol` | uniform or scrambled Sobol' points                  |
//! | `mtv`, `mtv+sts` | terminal-variance batches, p* from PSS or STS        |

use stagger::acquisitions::{AcqKind, AcqSpec};
use stagger::samplers::{PssConfig, PstarSampler, StsConfig, TsConfig};

use crate::error::{HarnessError, Result};

#[derive(Clone, Debug, PartialEq)]
pub enum MethodKind {
    Sts(StsConfig),
    Ts(TsConfig),
    Pss(PssConfig),
    Acquisition(AcqSpec),
    Mtv(PstarSampler),
}

#[derive(Clone, Debug, PartialEq)]
pub struct MethodSpec {
    pub name: String,
    pub kind: MethodKind,
}

impl MethodSpec {
    pub fn parse(name: &str) -> Result<Self> {
        let unknown = || HarnessError::Config(format!("unknown method `{name}`"));
        let kind = if let Some((base, m)) = name.split_once('@') {
            let iterations: usize = m.parse().map_err(|_| unknown())?;
            let cfg = StsConfig::variant(base).ok_or_else(unknown)?;
            MethodKind::Sts(cfg.with_iterations(iterations))
        } else if let Some(cfg) = StsConfig::variant(name) {
            MethodKind::Sts(cfg)
        } else if name == "ts" {
            MethodKind::Ts(TsConfig::default())
        } else if let Some(n) = name.strip_prefix("ts-") {
            let n: usize = n.parse().map_err(|_| unknown())?;
            if n == 0 {
                return Err(unknown());
            }
            MethodKind::Ts(TsConfig::with_candidates(n))
        } else {
            match name {
                "pss" => MethodKind::Pss(PssConfig::default()),
                "ei" => MethodKind::Acquisition(AcqSpec::new(AcqKind::Ei)),
                "ucb" => MethodKind::Acquisition(AcqSpec::new(AcqKind::Ucb)),
                "sr" => MethodKind::Acquisition(AcqSpec::new(AcqKind::Sr)),
                "random" => MethodKind::Acquisition(AcqSpec::new(AcqKind::Random)),
                "sobol" => MethodKind::Acquisition(AcqSpec::new(AcqKind::Sobol)),
                "mtv" => MethodKind::Mtv(PstarSampler::Pss(PssConfig::default())),
                "mtv+sts" => MethodKind::Mtv(PstarSampler::Sts(StsConfig::default())),
                _ => return Err(unknown()),
            }
        };
        Ok(Self {
            name: name.to_string(),
            kind,
        })
    }

    /// Whether arm generation needs a fitted surrogate.
    pub fn uses_model(&self) -> bool {
        match &self.kind {
            MethodKind::Acquisition(spec) => spec.uses_model(),
            _ => true,
        }
    }

    /// The sampler of `p*` behind this method, if it is one.
    pub fn pstar_sampler(&self) -> Option<PstarSampler> {
        match &self.kind {
            MethodKind::Sts(c) => Some(PstarSampler::Sts(c.clone())),
            MethodKind::Ts(c) => Some(PstarSampler::Ts(c.clone())),
            MethodKind::Pss(c) => Some(PstarSampler::Pss(c.clone())),
            _ => None,
        }
    }
}
