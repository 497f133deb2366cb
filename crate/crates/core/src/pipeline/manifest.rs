use std::collections::HashSet;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::io;

/// One scene's files. Relative paths resolve against the manifest's
/// directory.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SceneEntry {
    pub scene_id: String,
    pub depth: PathBuf,
    pub annotations: PathBuf,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub config: Option<PathBuf>,
    /// Plain-text detection list.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub detections: Option<PathBuf>,
    /// Grid prediction tensor; takes precedence over `detections`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tensor: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub density: Option<PathBuf>,
}

impl SceneEntry {
    fn resolve(&mut self, base: &Path) {
        let join = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        };
        join(&mut self.depth);
        join(&mut self.annotations);
        for p in [
            &mut self.config,
            &mut self.detections,
            &mut self.tensor,
            &mut self.density,
        ]
        .into_iter()
        .flatten()
        {
            join(p);
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub dataset_id: String,
    pub scenes: Vec<SceneEntry>,
}

impl Manifest {
    /// Reads a manifest and resolves its paths. Missing scene files are not
    /// checked here; they fail the affected scene at run time.
    pub fn load(path: &Path) -> Result<Self> {
        let mut m: Manifest = io::read_json(path)?;
        let base = path.parent().unwrap_or(Path::new(""));
        for s in &mut m.scenes {
            s.resolve(base);
        }
        m.check_ids()?;
        Ok(m)
    }

    pub fn check_ids(&self) -> Result<()> {
        let mut seen = HashSet::new();
        for s in &self.scenes {
            if s.scene_id.is_empty() {
                return Err(Error::Config("empty scene_id in manifest".into()));
            }
            if !seen.insert(s.scene_id.as_str()) {
                return Err(Error::Config(format!("duplicate scene_id {:?} in manifest", s.scene_id)));
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn paths_resolve_against_manifest_dir() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("m.json");
        std::fs::write(
            &path,
            r#"{"dataset_id": "d", "scenes": [
                {"scene_id": "a", "depth": "a/depth.digd", "annotations": "/abs/ann.json",
                 "density": "a/density.digf"}
            ]}"#,
        )
        .unwrap();
        let m = Manifest::load(&path).unwrap();
        let s = &m.scenes[0];
        assert_eq!(s.depth, dir.path().join("a/depth.digd"));
        assert_eq!(s.annotations, PathBuf::from("/abs/ann.json"));
        assert_eq!(s.density.as_deref(), Some(dir.path().join("a/density.digf").as_path()));
        assert!(s.config.is_none());
    }

    #[test]
    fn duplicate_ids_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("m.json");
        let entry = r#"{"scene_id": "a", "depth": "d", "annotations": "a"}"#;
        std::fs::write(&path, format!(r#"{{"dataset_id": "d", "scenes": [{entry}, {entry}]}}"#)).unwrap();
        assert!(matches!(Manifest::load(&path), Err(Error::Config(_))));
    }
}
