//! File formats and configuration.

pub mod colmap;
pub mod config;
pub mod manifest;
pub mod report;
pub mod trajectory_csv;

use std::path::Path;

use crate::{Error, Result};

pub(crate) fn create_parent(path: &Path) -> Result<()> {
    if let Some(dir) = path.parent() {
        if !dir.as_os_str().is_empty() {
            std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        }
    }
    Ok(())
}
