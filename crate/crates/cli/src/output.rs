//! Output directory handling and the plain-text writers shared by all commands.

use std::fs;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use crate::outcome::Failure;

fn io_err(path: &Path, e: std::io::Error) -> Failure {
    Failure::Io(format!("{}: {e}", path.display()))
}

/// A directory that commands write into; created on first use.
#[derive(Debug, Clone)]
pub struct OutDir {
    root: PathBuf,
    plot_data: bool,
}

impl OutDir {
    pub fn create(root: &Path, plot_data: bool) -> Result<Self, Failure> {
        fs::create_dir_all(root).map_err(|e| io_err(root, e))?;
        Ok(Self {
            root: root.to_path_buf(),
            plot_data,
        })
    }

    pub fn subdir(&self, name: &str) -> Result<Self, Failure> {
        Self::create(&self.root.join(name), self.plot_data)
    }

    /// Writes a file through a buffered writer filled by `fill`.
    pub fn write<F>(&self, name: &str, fill: F) -> Result<(), Failure>
    where
        F: FnOnce(&mut dyn Write) -> std::io::Result<()>,
    {
        let path = self.root.join(name);
        if let Some(parent) = path.parent() {
            fs::create_dir_all(parent).map_err(|e| io_err(parent, e))?;
        }
        let file = fs::File::create(&path).map_err(|e| io_err(&path, e))?;
        let mut w = BufWriter::new(file);
        fill(&mut w)
            .and_then(|_| w.flush())
            .map_err(|e| io_err(&path, e))
    }

    pub fn write_text(&self, name: &str, text: &str) -> Result<(), Failure> {
        self.write(name, |w| w.write_all(text.as_bytes()))
    }

    /// Two-column `x y` series under `plot/`, written only with `--plot-data`.
    pub fn plot(&self, name: &str, x_label: &str, y_label: &str, x: &[f64], y: &[f64]) -> Result<(), Failure> {
        if !self.plot_data {
            return Ok(());
        }
        self.write(&format!("plot/{name}.dat"), |w| {
            writeln!(w, "# {x_label} {y_label}")?;
            for (a, b) in x.iter().zip(y) {
                writeln!(w, "{a:.16e} {b:.16e}")?;
            }
            Ok(())
        })
    }
}

/// `key = value` lines.
pub fn metadata(pairs: &[(&str, String)]) -> String {
    pairs.iter().map(|(k, v)| format!("{k} = {v}\n")).collect()
}

pub fn num(x: f64) -> String {
    format!("{x:.16e}")
}
