//! Input checks and all-or-nothing output writing.

use std::fs;
use std::io::BufReader;
use std::path::{Path, PathBuf};

use crate::error::CliError;

pub const DEM: &str = "dem.dem1";
pub const INTERFEROGRAM: &str = "interferogram.cxr";
pub const DIFF_EW: &str = "diff_ew.cxr";
pub const DIFF_NS: &str = "diff_ns.cxr";
pub const TRUTH: &str = "truth.pgm";
pub const SLOPE_TRUTH: &str = "slope_truth.dem1";

/// Fails unless every `names` entry exists as a file under `dir`.
pub fn require_inputs(dir: &Path, names: &[&str]) -> Result<(), CliError> {
    if !dir.is_dir() {
        return Err(CliError::Io(format!("input directory {} does not exist", dir.display())));
    }
    for name in names {
        let p = dir.join(name);
        if !p.is_file() {
            return Err(CliError::Io(format!("missing input file {}", p.display())));
        }
    }
    Ok(())
}

/// Creates `dir` if needed and proves it is writable, before any real work.
pub fn prepare_out_dir(dir: &Path) -> Result<(), CliError> {
    let io = |e: std::io::Error| CliError::Io(format!("output directory {}: {e}", dir.display()));
    fs::create_dir_all(dir).map_err(io)?;
    let probe = dir.join(".cvrc-probe");
    fs::write(&probe, b"").map_err(io)?;
    fs::remove_file(&probe).map_err(io)
}

pub fn open(path: &Path) -> Result<BufReader<fs::File>, CliError> {
    fs::File::open(path)
        .map(BufReader::new)
        .map_err(|e| CliError::Io(format!("{}: {e}", path.display())))
}

/// Files produced by a command, held in memory until the command succeeds.
#[derive(Debug, Default)]
pub struct Outputs {
    files: Vec<(String, Vec<u8>)>,
}

impl Outputs {
    pub fn add(&mut self, name: impl Into<String>, bytes: Vec<u8>) {
        self.files.push((name.into(), bytes));
    }

    pub fn names(&self) -> impl Iterator<Item = &str> {
        self.files.iter().map(|(n, _)| n.as_str())
    }

    /// Writes everything to temporary names first and renames only once all
    /// writes succeeded, so a failure leaves no new files behind.
    pub fn commit(self, dir: &Path) -> Result<Vec<PathBuf>, CliError> {
        let io = |p: &Path, e: std::io::Error| CliError::Io(format!("{}: {e}", p.display()));
        fs::create_dir_all(dir).map_err(|e| io(dir, e))?;
        let mut staged: Vec<(PathBuf, PathBuf)> = Vec::with_capacity(self.files.len());
        let cleanup = |staged: &[(PathBuf, PathBuf)]| {
            for (tmp, _) in staged {
                let _ = fs::remove_file(tmp);
            }
        };
        for (name, bytes) in &self.files {
            let tmp = dir.join(format!(".{name}.partial"));
            if let Err(e) = fs::write(&tmp, bytes) {
                cleanup(&staged);
                let _ = fs::remove_file(&tmp);
                return Err(io(&tmp, e));
            }
            staged.push((tmp, dir.join(name)));
        }
        for (i, (tmp, dest)) in staged.iter().enumerate() {
            if let Err(e) = fs::rename(tmp, dest) {
                cleanup(&staged[i..]);
                return Err(io(dest, e));
            }
        }
        Ok(staged.into_iter().map(|(_, d)| d).collect())
    }
}
