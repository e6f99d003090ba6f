//! Artifact writing: data files, their hashes and companion plot scripts.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::config::sha256_hex;
use crate::error::{io_context, CliError};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Artifact {
    /// Path relative to the output directory.
    pub path: String,
    pub sha256: String,
    pub bytes: u64,
}

/// How the companion script draws a CSV.
pub enum Plot<'a> {
    /// `u, v, value` rows on a regular grid, u fastest.
    Map {
        u_label: &'a str,
        v_label: &'a str,
        value_label: &'a str,
    },
    /// `x, y[, yerr]` columns.
    Curve { x_label: &'a str, y_label: &'a str },
    /// `value, count` columns.
    Bars { x_label: &'a str, y_label: &'a str },
}

pub struct ArtifactWriter {
    dir: PathBuf,
    written: Vec<Artifact>,
}

impl ArtifactWriter {
    pub fn new(dir: &Path) -> Result<Self, CliError> {
        fs::create_dir_all(dir).map_err(io_context(format!("creating {}", dir.display())))?;
        Ok(Self {
            dir: dir.to_owned(),
            written: Vec::new(),
        })
    }

    pub fn write(&mut self, name: &str, bytes: &[u8]) -> Result<(), CliError> {
        let path = self.dir.join(name);
        fs::write(&path, bytes).map_err(io_context(format!("writing {}", path.display())))?;
        self.written.push(Artifact {
            path: name.to_owned(),
            sha256: sha256_hex(bytes),
            bytes: bytes.len() as u64,
        });
        Ok(())
    }

    pub fn write_json<T: Serialize>(&mut self, name: &str, value: &T) -> Result<(), CliError> {
        let mut text = serde_json::to_string_pretty(value).expect("report serialises");
        text.push('\n');
        self.write(name, text.as_bytes())
    }

    /// Write a CSV and a `plot_<stem>.py` script that renders it to PNG.
    pub fn write_csv(&mut self, name: &str, csv: &str, plot: Plot) -> Result<(), CliError> {
        self.write(name, csv.as_bytes())?;
        let stem = name.trim_end_matches(".csv");
        self.write(&format!("plot_{stem}.py"), plot_script(name, stem, &plot).as_bytes())
    }

    pub fn into_artifacts(self) -> Vec<Artifact> {
        self.written
    }
}

fn plot_script(csv: &str, stem: &str, plot: &Plot) -> String {
    let body = match plot {
        Plot::Map {
            u_label,
            v_label,
            value_label,
        } => format!(
            "u, v = np.unique(d[:, 0]), np.unique(d[:, 1])\n\
             img = d[:, 2].reshape(len(v), len(u))\n\
             fig, ax = plt.subplots()\n\
             m = ax.pcolormesh(u * 1e6, v * 1e6, img, shading=\"auto\")\n\
             fig.colorbar(m, label=\"{value_label}\")\n\
             ax.set_xlabel(\"{u_label}\")\n\
             ax.set_ylabel(\"{v_label}\")\n"
        ),
        Plot::Curve { x_label, y_label } => format!(
            "fig, ax = plt.subplots()\n\
             if d.shape[1] > 2:\n    ax.errorbar(d[:, 0], d[:, 1], yerr=d[:, 2], fmt=\"o\")\n\
             else:\n    ax.plot(d[:, 0], d[:, 1], \"o-\")\n\
             ax.set_xlabel(\"{x_label}\")\n\
             ax.set_ylabel(\"{y_label}\")\n"
        ),
        Plot::Bars { x_label, y_label } => format!(
            "fig, ax = plt.subplots()\n\
             ax.bar(d[:, 0], d[:, 1], width=1.0)\n\
             ax.set_xlabel(\"{x_label}\")\n\
             ax.set_ylabel(\"{y_label}\")\n"
        ),
    };
    format!(
        "#!/usr/bin/env python3\n\
         import matplotlib.pyplot as plt\n\
         import numpy as np\n\n\
         d = np.loadtxt(\"{csv}\", delimiter=\",\", comments=\"#\", ndmin=2)\n\
         {body}\
         fig.tight_layout()\n\
         fig.savefig(\"{stem}.png\", dpi=150)\n"
    )
}
