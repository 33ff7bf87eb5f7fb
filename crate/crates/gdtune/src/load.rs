//! Instance lookup: files on disk or the bundled `builtin:NAME` set.

use std::path::Path;

use gdtune_core::instances::{sample_instances, Instance};

use crate::config::RunConfig;
use crate::error::{CliError, Result};
use crate::format::parse_instance;

/// Bundled instances, addressed as `builtin:NAME`.
pub const BUILTINS: &[(&str, &str)] = &[
    ("quadratic", include_str!("../instances/quadratic.json")),
    ("relu_scalar", include_str!("../instances/relu_scalar.json")),
];

pub fn builtin_text(name: &str) -> Option<&'static str> {
    BUILTINS.iter().find(|(n, _)| *n == name).map(|(_, t)| *t)
}

pub fn load_instance(spec: &str) -> Result<Instance> {
    if let Some(name) = spec.strip_prefix("builtin:") {
        let text = builtin_text(name).ok_or_else(|| {
            let known: Vec<&str> = BUILTINS.iter().map(|(n, _)| *n).collect();
            CliError::Config(format!("unknown builtin {name:?}; known: {}", known.join(", ")))
        })?;
        return parse_instance(text);
    }
    let path = Path::new(spec);
    let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    let mut inst = parse_instance(&text).map_err(|e| match e {
        CliError::Parse { at, message } => CliError::Parse {
            at: format!("{spec}: {at}"),
            message,
        },
        other => other,
    })?;
    if inst.label.is_empty() {
        inst.label = spec.to_string();
    }
    Ok(inst)
}

/// Positional instances win, then `sample.instances`, then `sample.m`
/// draws from the configured distribution.
pub fn resolve_sample(cfg: &RunConfig, positional: &[String]) -> Result<Vec<Instance>> {
    let listed = if positional.is_empty() {
        &cfg.sample.instances
    } else {
        positional
    };
    if !listed.is_empty() {
        return listed.iter().map(|s| load_instance(s)).collect();
    }
    let m = cfg
        .sample
        .m
        .ok_or_else(|| CliError::Config("no instances given and sample.m is not set".into()))?;
    let dist = cfg.distribution()?;
    Ok(sample_instances(&dist, m, cfg.sample.seed.unwrap_or(cfg.seed()))?)
}
