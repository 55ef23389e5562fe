use std::io::Write;
use std::path::{Path, PathBuf};

use tempfile::NamedTempFile;

use crate::error::{CliError, StageExt};

/// Output directory whose files are written atomically (temp file + rename).
pub struct OutDir {
    dir: PathBuf,
    written: Vec<PathBuf>,
}

impl OutDir {
    pub fn create(dir: &Path) -> Result<Self, CliError> {
        std::fs::create_dir_all(dir)
            .stage("create output directory", &dir.display().to_string())?;
        Ok(OutDir {
            dir: dir.to_path_buf(),
            written: Vec::new(),
        })
    }

    pub fn write(&mut self, name: &str, bytes: &[u8]) -> Result<PathBuf, CliError> {
        let path = self.dir.join(name);
        let label = path.display().to_string();
        let mut tmp = NamedTempFile::new_in(&self.dir).stage("write output", &label)?;
        tmp.write_all(bytes).stage("write output", &label)?;
        tmp.flush().stage("write output", &label)?;
        tmp.persist(&path)
            .map_err(|e| e.error)
            .stage("write output", &label)?;
        self.written.push(path.clone());
        Ok(path)
    }

    /// Prints the files written so far.
    pub fn announce(&self) {
        for p in &self.written {
            say!("wrote {}", p.display());
        }
    }
}

/// Writes text to stdout, ignoring a closed pipe.
pub fn say_raw(text: &str) {
    let _ = std::io::stdout().lock().write_all(text.as_bytes());
}
