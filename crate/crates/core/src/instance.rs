//! JSON instance files: a backend, a family of sets, their stabilizers and
//! the window parameters.

use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::backends::{Backend, BackendError, SetDescriptor, SetSpec, Stabilizer};

pub const DEFAULT_RADIUS: usize = 3;
pub const DEFAULT_MARGIN: usize = 2;

#[derive(Debug, Error)]
pub enum InstanceError {
    #[error("cannot read {path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error("line {line}, column {column}: {msg}")]
    Json { line: usize, column: usize, msg: String },
    #[error("set {index}: {source}")]
    Set { index: usize, source: BackendError },
    #[error("{0}")]
    Shape(String),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct WindowParams {
    pub radius: usize,
    pub margin: usize,
}

impl Default for WindowParams {
    fn default() -> Self {
        WindowParams { radius: DEFAULT_RADIUS, margin: DEFAULT_MARGIN }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
struct InstanceFile {
    backend: Backend,
    sets: Vec<SetSpec>,
    #[serde(default)]
    stabilizers: Vec<Stabilizer>,
    #[serde(default)]
    window: Option<WindowParams>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Instance {
    pub backend: Backend,
    pub family: Vec<SetDescriptor>,
    pub window: WindowParams,
}

/// A descriptor that was accepted but is not written in canonical form.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct NonCanonical {
    pub index: usize,
    pub given: String,
    pub canonical: String,
}

impl Instance {
    pub fn new(backend: Backend, family: Vec<SetDescriptor>, window: WindowParams) -> Result<Self, InstanceError> {
        if family.is_empty() {
            return Err(InstanceError::Shape("an instance needs at least one set".into()));
        }
        for (index, d) in family.iter().enumerate() {
            if d.backend() != backend {
                return Err(InstanceError::Set { index, source: BackendError::Mismatch(backend, d.backend()) });
            }
        }
        Ok(Instance { backend, family, window })
    }

    pub fn load(path: &Path) -> Result<Self, InstanceError> {
        let text = std::fs::read_to_string(path)
            .map_err(|source| InstanceError::Io { path: path.display().to_string(), source })?;
        Self::from_json(&text)
    }

    pub fn from_json(text: &str) -> Result<Self, InstanceError> {
        Ok(Self::parse_checked(text)?.0)
    }

    /// Parses and also lists sets whose text differs from the canonical form.
    pub fn parse_checked(text: &str) -> Result<(Self, Vec<NonCanonical>), InstanceError> {
        let file: InstanceFile = serde_json::from_str(text)
            .map_err(|e| InstanceError::Json { line: e.line(), column: e.column(), msg: e.to_string() })?;
        if !file.stabilizers.is_empty() && file.stabilizers.len() != file.sets.len() {
            return Err(InstanceError::Shape(format!(
                "{} stabilizers given for {} sets",
                file.stabilizers.len(),
                file.sets.len()
            )));
        }
        let mut family = Vec::new();
        let mut non_canonical = Vec::new();
        for (index, spec) in file.sets.iter().enumerate() {
            let stab = file.stabilizers.get(index).copied();
            let d = spec.to_descriptor(file.backend, stab).map_err(|source| InstanceError::Set { index, source })?;
            if d.is_trivial().map_err(|source| InstanceError::Set { index, source })? {
                return Err(InstanceError::Set { index, source: BackendError::Trivial });
            }
            let canonical = SetSpec::from_descriptor(&d).map_err(|source| InstanceError::Set { index, source })?;
            if &canonical != spec {
                non_canonical.push(NonCanonical { index, given: spec.to_string(), canonical: canonical.to_string() });
            }
            family.push(d);
        }
        let inst = Instance::new(file.backend, family, file.window.unwrap_or_default())?;
        Ok((inst, non_canonical))
    }

    /// Canonical JSON text.
    pub fn to_json(&self) -> String {
        let file = InstanceFile {
            backend: self.backend,
            sets: self.family.iter().map(|d| SetSpec::from_descriptor(d).expect("family sets render")).collect(),
            stabilizers: self.family.iter().map(|d| d.stabilizer()).collect(),
            window: Some(self.window),
        };
        serde_json::to_string_pretty(&file).expect("instance serializes") + "\n"
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parse_and_round_trip() {
        let text = r#"{"backend":"grid","sets":[{"axis":"y","side":"R","threshold":1},{"axis":"x","side":"R","threshold":1}]}"#;
        let inst = Instance::from_json(text).unwrap();
        assert_eq!(inst.family[0].stabilizer(), Stabilizer::Cyclic([1, 0]));
        assert_eq!(inst.window, WindowParams::default());
        let again = Instance::from_json(&inst.to_json()).unwrap();
        assert_eq!(again, inst);
    }

    #[test]
    fn reports_non_canonical_text() {
        let text = r#"{"backend":"halfline","sets":[{"side":"L","threshold":2,"exceptions":[1]}]}"#;
        let (_, nc) = Instance::parse_checked(text).unwrap();
        assert_eq!(nc.len(), 1);
        assert_eq!(nc[0].canonical, "L_0 Δ {2}");
    }

    #[test]
    fn errors_carry_positions() {
        match Instance::from_json("{\n  \"backend\": \"halfline\",\n  \"sets\": [,]\n}") {
            Err(InstanceError::Json { line, .. }) => assert_eq!(line, 3),
            other => panic!("unexpected {other:?}"),
        }
        let trivial = r#"{"backend":"free","sets":[{"cones":[],"exceptions":["a"]}]}"#;
        assert!(matches!(Instance::from_json(trivial), Err(InstanceError::Set { index: 0, .. })));
    }
}
