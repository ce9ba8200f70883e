//! Output directory handling and the run manifest.

use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;

/// Everything needed to rerun a command, written as `manifest.toml`.
#[derive(Debug, Default, Serialize)]
pub struct Manifest {
    pub tool: String,
    pub version: String,
    pub command: String,
    pub argv: Vec<String>,
    pub instance: Option<String>,
    pub config: Option<String>,
    pub seed: Option<u64>,
    pub runs: Option<usize>,
    pub crn: Option<bool>,
    pub threads: Option<usize>,
    pub horizon: Option<usize>,
    pub balancing_variant: Option<String>,
    pub num: Option<String>,
    pub den: Option<String>,
    pub outputs: Vec<String>,
}

impl Manifest {
    pub fn new(command: &str) -> Self {
        Self {
            tool: "invctl".into(),
            version: env!("CARGO_PKG_VERSION").into(),
            command: command.into(),
            argv: std::env::args().collect(),
            ..Self::default()
        }
    }
}

/// Collects files for an optional output directory.
pub struct Sink {
    dir: Option<PathBuf>,
    pub manifest: Manifest,
}

impl Sink {
    pub fn new(dir: Option<&Path>, manifest: Manifest) -> anyhow::Result<Self> {
        if let Some(d) = dir {
            fs::create_dir_all(d)?;
        }
        Ok(Self {
            dir: dir.map(Path::to_path_buf),
            manifest,
        })
    }

    pub fn enabled(&self) -> bool {
        self.dir.is_some()
    }

    pub fn write(&mut self, name: &str, contents: &str) -> anyhow::Result<()> {
        if let Some(d) = &self.dir {
            fs::write(d.join(name), contents)?;
            self.manifest.outputs.push(name.to_string());
        }
        Ok(())
    }

    pub fn finish(mut self) -> anyhow::Result<()> {
        if let Some(d) = self.dir.take() {
            self.manifest.outputs.push("manifest.toml".into());
            fs::write(d.join("manifest.toml"), toml::to_string(&self.manifest)?)?;
            log::info!(
                "wrote {} file(s) to {}",
                self.manifest.outputs.len(),
                d.display()
            );
        }
        Ok(())
    }
}

/// Gnuplot script drawing the ratio column of a two-location CSV as a heatmap.
pub fn gnuplot_script(csv: &str, title: &str) -> String {
    format!(
        "set datafile separator ','\n\
         set title '{title}'\n\
         set xlabel 'x1'\nset ylabel 'x2'\n\
         set view map\n\
         set palette rgbformulae 33,13,10\n\
         set key off\n\
         plot '{csv}' every ::1 using 1:2:7 with image\n"
    )
}
