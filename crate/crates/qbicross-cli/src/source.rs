//! Resolving `--algebra` to a catalog entry or a spec file.

use std::path::{Path, PathBuf};
use std::sync::Arc;

use qbicross::bicross::BicrossData;
use qbicross::catalog::{self, CatalogEntry};
use qbicross::ncalg::SpecSource;

use crate::Failure;

pub const DATA_DIR_VAR: &str = "BICROSS_DATA_DIR";

pub enum Source {
    Catalog(Box<CatalogEntry>),
    Algebra(Arc<SpecSource>),
    Bicross(Arc<BicrossData>),
}

impl Source {
    pub fn name(&self) -> String {
        match self {
            Source::Catalog(e) => e.name.to_string(),
            Source::Algebra(s) => s.name.clone(),
            Source::Bicross(b) => b.name.clone(),
        }
    }

    pub fn inverse(&self) -> bool {
        match self {
            Source::Catalog(e) => e.bicross.inverse,
            Source::Algebra(s) => s.inverse,
            Source::Bicross(b) => b.inverse,
        }
    }

    pub fn entry(&self, what: &str) -> Result<&CatalogEntry, Failure> {
        match self {
            Source::Catalog(e) => Ok(e),
            _ => Err(Failure::Usage(format!(
                "{what} needs a catalog entry ({})",
                catalog::list().join(", ")
            ))),
        }
    }

    pub fn bicross(&self) -> Result<Arc<BicrossData>, Failure> {
        match self {
            Source::Catalog(e) => Ok(e.bicross.clone()),
            Source::Bicross(b) => Ok(b.clone()),
            Source::Algebra(s) => Err(Failure::Usage(format!(
                "{} is an algebra spec, not bicross data",
                s.name
            ))),
        }
    }
}

fn locate(name: &str) -> Option<PathBuf> {
    let direct = Path::new(name);
    if direct.is_file() {
        return Some(direct.to_path_buf());
    }
    let dir = std::env::var_os(DATA_DIR_VAR)?;
    let dir = Path::new(&dir);
    [dir.join(name), dir.join(format!("{name}.spec"))]
        .into_iter()
        .find(|p| p.is_file())
}

/// Catalog names win; otherwise a file path, then `$BICROSS_DATA_DIR/<name>[.spec]`.
pub fn resolve(name: &str) -> Result<Source, Failure> {
    if let Ok(e) = catalog::get(name) {
        return Ok(Source::Catalog(Box::new(e)));
    }
    let path = locate(name).ok_or_else(|| {
        Failure::Usage(format!(
            "`{name}` is neither a catalog entry ({}) nor a spec file",
            catalog::list().join(", ")
        ))
    })?;
    let text = std::fs::read_to_string(&path)?;
    let is_bicross = text.lines().any(|l| l.trim() == "[bicross]");
    if is_bicross {
        Ok(Source::Bicross(Arc::new(BicrossData::from_text(&text)?)))
    } else {
        Ok(Source::Algebra(Arc::new(SpecSource::from_text(&text)?)))
    }
}
