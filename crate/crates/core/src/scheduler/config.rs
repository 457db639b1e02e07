use std::path::{Path, PathBuf};

use indexmap::IndexMap;
use num::Zero;
use serde::Deserialize;
use thiserror::Error;

use crate::cost::CostExpr;
use crate::inference::{analyze, AnalysisError, Env, InferOptions};
use crate::program::CostProgram;
use crate::rational::{serde_exact, Rational};
use crate::solver::{solve_symbolic, Binding, SolveError};

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read {path}: {message}")]
    Io { path: PathBuf, message: String },
    #[error("invalid JSON in {0}")]
    Json(String),
    #[error("function {function}: {error}")]
    Analysis { function: String, error: AnalysisError },
    #[error("{0}")]
    Invalid(String),
}

/// A deployed function: its cost program and the closed form computed at
/// deployment with nothing bound.
#[derive(Debug, Clone)]
pub struct FunctionEntry {
    pub name: String,
    /// Untagged functions are scheduled by the `default` policy.
    pub tag: Option<String>,
    pub env: Env,
    pub program: CostProgram,
    pub base_expression: Result<CostExpr, SolveError>,
    pub memory_mb: Rational,
}

impl FunctionEntry {
    /// Analyses `source`; `tag` overrides a `// tag:` comment in the source.
    pub fn deploy(
        name: &str,
        source: &str,
        tag: Option<&str>,
        memory_mb: Rational,
        options: &InferOptions,
    ) -> Result<Self, ConfigError> {
        if memory_mb <= Rational::zero() {
            return Err(ConfigError::Invalid(format!("function {name} needs a positive memory_mb")));
        }
        let analysis = analyze(source, name, options).map_err(|error| ConfigError::Analysis {
            function: name.to_string(),
            error,
        })?;
        let base_expression = solve_symbolic(&analysis.program, &Binding::new());
        Ok(Self {
            name: name.to_string(),
            tag: tag.map(str::to_string).or(analysis.function.tag.clone()),
            env: analysis.env,
            program: analysis.program,
            base_expression,
            memory_mb,
        })
    }

    /// Maps parameter names (or their symbols) to cost-program symbols.
    pub fn symbol_binding(&self, bindings: &Binding) -> Result<Binding, String> {
        let mut out = Binding::new();
        for (name, value) in bindings {
            let symbol = match self.env.params.get(name) {
                Some(symbol) => symbol,
                None if self.env.params.values().any(|s| s == name) => name,
                None => return Err(format!("function {} has no parameter {name}", self.name)),
            };
            out.insert(symbol.clone(), value.clone());
        }
        Ok(out)
    }
}

#[derive(Deserialize)]
struct RegistryRecord {
    source: PathBuf,
    tag: Option<String>,
    #[serde(with = "serde_exact")]
    memory_mb: Rational,
}

#[derive(Debug, Clone, Default)]
pub struct Registry {
    pub functions: IndexMap<String, FunctionEntry>,
}

impl Registry {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert(&mut self, entry: FunctionEntry) {
        self.functions.insert(entry.name.clone(), entry);
    }

    pub fn get(&self, name: &str) -> Option<&FunctionEntry> {
        self.functions.get(name)
    }

    /// Reads `{"name": {"source", "tag", "memory_mb"}}`; sources are
    /// resolved against `base_dir`.
    pub fn from_json(text: &str, base_dir: &Path, options: &InferOptions) -> Result<Self, ConfigError> {
        let records: IndexMap<String, RegistryRecord> =
            serde_json::from_str(text).map_err(|e| ConfigError::Json(format!("registry: {e}")))?;
        let mut registry = Registry::new();
        for (name, record) in records {
            let path = base_dir.join(&record.source);
            let source = std::fs::read_to_string(&path).map_err(|e| ConfigError::Io {
                path: path.clone(),
                message: e.to_string(),
            })?;
            registry.insert(FunctionEntry::deploy(&name, &source, record.tag.as_deref(), record.memory_mb, options)?);
        }
        Ok(registry)
    }

    pub fn load(path: &Path, options: &InferOptions) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|e| ConfigError::Io {
            path: path.to_path_buf(),
            message: e.to_string(),
        })?;
        Self::from_json(&text, path.parent().unwrap_or(Path::new(".")), options)
    }

    /// `(function, tag)` pairs, as expected by [`crate::capp::validate`].
    pub fn tags(&self) -> Vec<(String, Option<String>)> {
        self.functions.values().map(|f| (f.name.clone(), f.tag.clone())).collect()
    }
}
