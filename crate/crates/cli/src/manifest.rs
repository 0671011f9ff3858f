//! Run manifest: everything needed to reproduce a run bit for bit — the
//! command line, the resolved config, and the seed — plus timing facts.

use std::io::Write;
use std::path::{Path, PathBuf};

use chrono::{DateTime, SecondsFormat, Utc};

pub struct RunManifest {
    pub command: String,
    pub dataset: Option<String>,
    pub dataset_dir: Option<PathBuf>,
    pub seed: u64,
    pub config_kv: String,
    started: DateTime<Utc>,
    started_instant: std::time::Instant,
}

impl RunManifest {
    pub fn begin(seed: u64) -> RunManifest {
        let argv: Vec<String> = std::env::args().collect();
        RunManifest {
            command: argv.join(" "),
            dataset: None,
            dataset_dir: None,
            seed,
            config_kv: String::new(),
            started: Utc::now(),
            started_instant: std::time::Instant::now(),
        }
    }

    pub fn write(&self, path: &Path) -> std::io::Result<()> {
        let mut f = std::fs::File::create(path)?;
        writeln!(f, "ihgnn-run-manifest v1")?;
        writeln!(f, "command={}", self.command)?;
        writeln!(f, "tool_version={}", env!("CARGO_PKG_VERSION"))?;
        if let Some(dataset) = &self.dataset {
            writeln!(f, "dataset={dataset}")?;
        }
        if let Some(dir) = &self.dataset_dir {
            writeln!(f, "dataset_dir={}", dir.display())?;
        }
        writeln!(f, "seed={}", self.seed)?;
        writeln!(
            f,
            "started={}",
            self.started.to_rfc3339_opts(SecondsFormat::Secs, true)
        )?;
        writeln!(
            f,
            "finished={}",
            Utc::now().to_rfc3339_opts(SecondsFormat::Secs, true)
        )?;
        writeln!(
            f,
            "wall_time_s={:.3}",
            self.started_instant.elapsed().as_secs_f64()
        )?;
        if !self.config_kv.is_empty() {
            writeln!(f, "[config]")?;
            f.write_all(self.config_kv.as_bytes())?;
        }
        Ok(())
    }
}
