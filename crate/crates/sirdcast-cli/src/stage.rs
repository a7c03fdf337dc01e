//! Atomic output staging: every command writes into a scratch directory next
//! to the destination, and files move into place only after the whole
//! command has succeeded. A failed run leaves no partial unlabeled output.

use std::fs;
use std::path::{Path, PathBuf};

use sirdcast::Result;

/// Run `write` against a staging directory, then move its contents into
/// `out_dir` (overwriting existing files) and remove the staging directory.
pub fn with_staging<F>(out_dir: &Path, write: F) -> Result<()>
where
    F: FnOnce(&Path) -> Result<()>,
{
    let parent = out_dir.parent().filter(|p| !p.as_os_str().is_empty());
    if let Some(parent) = parent {
        fs::create_dir_all(parent)?;
    }
    let stage = staging_path(out_dir);
    if stage.exists() {
        fs::remove_dir_all(&stage)?;
    }
    fs::create_dir_all(&stage)?;

    let outcome = write(&stage);
    if outcome.is_err() {
        let _ = fs::remove_dir_all(&stage);
        return outcome;
    }

    move_tree(&stage, out_dir)?;
    fs::remove_dir_all(&stage)?;
    Ok(())
}

fn staging_path(out_dir: &Path) -> PathBuf {
    let name = out_dir
        .file_name()
        .map(|n| n.to_string_lossy().to_string())
        .unwrap_or_else(|| "out".to_string());
    out_dir.with_file_name(format!(".{name}.staging-{}", std::process::id()))
}

fn move_tree(from: &Path, to: &Path) -> Result<()> {
    fs::create_dir_all(to)?;
    for entry in fs::read_dir(from)? {
        let entry = entry?;
        let target = to.join(entry.file_name());
        if entry.file_type()?.is_dir() {
            move_tree(&entry.path(), &target)?;
        } else {
            // Same filesystem by construction, so rename is atomic.
            fs::rename(entry.path(), &target)?;
        }
    }
    Ok(())
}
