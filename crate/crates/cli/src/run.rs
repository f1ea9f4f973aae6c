use std::path::{Path, PathBuf};

use morphoscope::charlm::{CharLm, Checkpoint};
use morphoscope::exec::{configure_threads, Exec};
use morphoscope::probes::ProbeCheckpoint;
use morphoscope::report;
use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::config::Config;
use crate::failure::Failure;

pub const THREADS_ENV: &str = "MORPHOSCOPE_THREADS";

#[derive(Serialize)]
struct InputDigest {
    key: String,
    path: String,
    sha256: String,
}

#[derive(Serialize)]
struct Manifest<'a> {
    command: &'a str,
    seed: u64,
    config_hash: String,
    config: &'a std::collections::BTreeMap<String, String>,
    inputs: Vec<InputDigest>,
    outputs: &'a [String],
}

/// One command invocation: resolved config, output directory and provenance.
pub struct Run {
    pub command: String,
    pub cfg: Config,
    pub seed: u64,
    pub exec: Exec,
    pub out: PathBuf,
    inputs: Vec<(String, PathBuf)>,
    outputs: Vec<String>,
}

pub fn resolve_threads(flag: Option<usize>) -> Result<usize, Failure> {
    let n = match flag {
        Some(n) => n,
        None => match std::env::var(THREADS_ENV) {
            Ok(v) => {
                v.trim().parse().map_err(|_| Failure::Usage(format!("{THREADS_ENV}={v:?} is not a thread count")))?
            }
            Err(_) => 1,
        },
    };
    if n == 0 {
        return Err(Failure::Usage("thread count must be >= 1".into()));
    }
    Ok(n)
}

impl Run {
    pub fn new(command: &str, cfg: Config, threads: usize) -> Result<Self, Failure> {
        let seed = cfg.get("seed")?;
        let out: PathBuf = cfg.get::<String>("out")?.into();
        std::fs::create_dir_all(&out)
            .map_err(|e| Failure::Usage(format!("output directory {} not writable: {e}", out.display())))?;
        if threads > 1 {
            configure_threads(threads)?;
        }
        Ok(Run {
            command: command.to_string(),
            cfg,
            seed,
            exec: Exec::for_threads(threads),
            out,
            inputs: Vec::new(),
            outputs: Vec::new(),
        })
    }

    /// A required input file, recorded for the manifest.
    pub fn input(&mut self, key: &str) -> Result<PathBuf, Failure> {
        let p = self.cfg.input(key)?;
        self.record_input(key, &p);
        Ok(p)
    }

    pub fn opt_input(&mut self, key: &str) -> Result<Option<PathBuf>, Failure> {
        match self.cfg.opt_path(key) {
            None => Ok(None),
            Some(_) => self.input(key).map(Some),
        }
    }

    /// Every file of a comma-separated list key.
    pub fn inputs(&mut self, key: &str) -> Result<Vec<PathBuf>, Failure> {
        let paths: Vec<PathBuf> = self.cfg.list(key).into_iter().map(PathBuf::from).collect();
        for p in &paths {
            crate::config::require_file(p)?;
            self.record_input(key, p);
        }
        Ok(paths)
    }

    pub fn record_input(&mut self, key: &str, path: &Path) {
        self.inputs.push((key.to_string(), path.to_path_buf()));
    }

    pub fn load_lm(&mut self) -> Result<CharLm<f32>, Failure> {
        let p = self.input("lm")?;
        Ok(Checkpoint::load(&p)?.model)
    }

    pub fn load_probe(&mut self, key: &str, task: &str) -> Result<ProbeCheckpoint, Failure> {
        let p = self.input(key)?;
        let ckpt = ProbeCheckpoint::load(&p)?;
        if ckpt.meta.task != task {
            return Err(morphoscope::Error::Format(format!(
                "{} holds a {:?} probe, expected {task:?}",
                p.display(),
                ckpt.meta.task
            ))
            .into());
        }
        Ok(ckpt)
    }

    /// Path of an output artifact, recorded for the manifest.
    pub fn output(&mut self, name: &str) -> PathBuf {
        if !self.outputs.iter().any(|o| o == name) {
            self.outputs.push(name.to_string());
        }
        self.out.join(name)
    }

    pub fn write_json<T: Serialize>(&mut self, name: &str, value: &T) -> Result<(), Failure> {
        let p = self.output(name);
        report::write_json(&p, value)?;
        Ok(())
    }

    pub fn finish(mut self) -> Result<(), Failure> {
        let mut inputs = Vec::new();
        for (key, path) in &self.inputs {
            let bytes = std::fs::read(path)?;
            inputs.push(InputDigest {
                key: key.clone(),
                path: path.display().to_string(),
                sha256: hex::encode(Sha256::digest(&bytes)),
            });
        }
        let path = self.output("manifest.json");
        let mut settings = self.cfg.clone();
        settings.remove("out");
        let manifest = Manifest {
            command: &self.command,
            seed: self.seed,
            config_hash: settings.hash(),
            config: settings.entries(),
            inputs,
            outputs: &self.outputs,
        };
        report::write_json(&path, &manifest)?;
        Ok(())
    }
}
