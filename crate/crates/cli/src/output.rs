//! Stdout/--out handling and the run manifest.

use std::fs;
use std::path::Path;
use std::time::Instant;

use serde::Serialize;
use serde_json::{json, Value};
use sha2::{Digest, Sha256};

use crate::{AnyResult, Common};

pub enum Outcome {
    Success,
    /// Empty speed interval, failed hypothesis.
    Negative,
    NotConverged,
}

impl Outcome {
    pub fn code(&self) -> u8 {
        match self {
            Outcome::Success => 0,
            Outcome::Negative => 2,
            Outcome::NotConverged => 3,
        }
    }
}

#[derive(Serialize)]
struct RunManifest<'a> {
    subcommand: &'a str,
    params: &'a Value,
    version: &'a str,
    wall_time_seconds: f64,
    input_sha256: String,
    outputs: Vec<String>,
}

pub struct Output {
    subcommand: &'static str,
    params: Value,
    common: Common,
    started: Instant,
    input: Vec<u8>,
}

impl Output {
    pub fn new(subcommand: &'static str, params: Value, common: &Common, started: Instant) -> Self {
        Self {
            subcommand,
            params,
            common: common.clone(),
            started,
            input: Vec::new(),
        }
    }

    /// Extra bytes (e.g. a config file) folded into the input hash.
    pub fn with_input(mut self, bytes: &[u8]) -> Self {
        self.input = bytes.to_vec();
        self
    }

    fn input_hash(&self) -> String {
        let mut hasher = Sha256::new();
        hasher.update(self.subcommand.as_bytes());
        hasher.update(serde_json::to_vec(&self.params).unwrap_or_default());
        hasher.update(&self.input);
        format!("{:x}", hasher.finalize())
    }

    /// Prints `body` as JSON and, with `--out`, writes it plus `extra` files.
    pub fn emit_json(&self, body: &Value, file: &str, extra: &[(&str, Vec<u8>)]) -> AnyResult<()> {
        let text = serde_json::to_string_pretty(body)? + "\n";
        print!("{text}");
        self.write_files(Some((file, with_manifest_ref(body))), extra)
    }

    /// Prints plain text and, with `--out`, writes it under `file`.
    pub fn emit_text(&self, text: &str, file: &str) -> AnyResult<()> {
        print!("{text}");
        self.write_files(None, &[(file, text.as_bytes().to_vec())])
    }

    /// Prints a human summary; `--out` still receives the JSON body.
    pub fn emit_text_with(
        &self,
        text: &str,
        body: &Value,
        file: &str,
        extra: &[(&str, Vec<u8>)],
    ) -> AnyResult<()> {
        print!("{text}");
        self.write_files(Some((file, with_manifest_ref(body))), extra)
    }

    fn write_files(&self, main: Option<(&str, Value)>, extra: &[(&str, Vec<u8>)]) -> AnyResult<()> {
        let Some(dir) = &self.common.out else {
            return Ok(());
        };
        fs::create_dir_all(dir)?;
        let mut outputs = Vec::new();
        if let Some((name, body)) = main {
            write(dir, name, (serde_json::to_string_pretty(&body)? + "\n").as_bytes())?;
            outputs.push(name.to_string());
        }
        for (name, bytes) in extra {
            write(dir, name, bytes)?;
            outputs.push(name.to_string());
        }
        let manifest = RunManifest {
            subcommand: self.subcommand,
            params: &self.params,
            version: env!("CARGO_PKG_VERSION"),
            wall_time_seconds: self.started.elapsed().as_secs_f64(),
            input_sha256: self.input_hash(),
            outputs,
        };
        write(
            dir,
            "manifest.json",
            (serde_json::to_string_pretty(&manifest)? + "\n").as_bytes(),
        )?;
        Ok(())
    }
}

fn with_manifest_ref(body: &Value) -> Value {
    match body {
        Value::Object(map) => {
            let mut m = map.clone();
            m.insert("manifest".into(), json!("manifest.json"));
            Value::Object(m)
        }
        other => other.clone(),
    }
}

fn write(dir: &Path, name: &str, bytes: &[u8]) -> AnyResult<()> {
    fs::write(dir.join(name), bytes).map_err(|e| format!("{}: {e}", dir.join(name).display()).into())
}
