use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use anyhow::{Context, Result};
use sha2::{Digest, Sha256};

pub(crate) fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}

/// Output directory whose files are written atomically and removed again
/// unless [`OutputDir::commit`] is reached.
pub struct OutputDir {
    root: PathBuf,
    written: Vec<PathBuf>,
    created_root: bool,
    committed: bool,
}

impl OutputDir {
    pub fn create(root: &Path) -> Result<Self> {
        let created_root = !root.exists();
        fs::create_dir_all(root).with_context(|| format!("cannot create output directory {}", root.display()))?;
        Ok(Self { root: root.to_path_buf(), written: Vec::new(), created_root, committed: false })
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    /// Writes `name` through a temporary file and a rename.
    pub fn write(&mut self, name: &str, bytes: &[u8]) -> Result<PathBuf> {
        let dest = self.root.join(name);
        let tmp = self.root.join(format!(".{name}.tmp"));
        fs::write(&tmp, bytes).with_context(|| format!("cannot write {}", tmp.display()))?;
        if let Err(e) = fs::rename(&tmp, &dest) {
            let _ = fs::remove_file(&tmp);
            return Err(e).with_context(|| format!("cannot move output into {}", dest.display()));
        }
        self.written.push(dest.clone());
        Ok(dest)
    }

    pub fn written(&self) -> &[PathBuf] {
        &self.written
    }

    pub fn commit(mut self) {
        self.committed = true;
    }
}

impl Drop for OutputDir {
    fn drop(&mut self) {
        if self.committed {
            return;
        }
        for p in &self.written {
            let _ = fs::remove_file(p);
        }
        if self.created_root {
            let _ = fs::remove_dir(&self.root);
        }
    }
}

/// Provenance record written next to every command's outputs.
pub struct Manifest {
    command: String,
    args: Vec<String>,
    seed: Option<u64>,
    config: Vec<String>,
    inputs: Vec<(String, String)>,
    checkpoint_hash: Option<String>,
    started: Instant,
}

impl Manifest {
    pub fn new(command: &str, args: &[String]) -> Self {
        Self {
            command: command.to_string(),
            args: args.to_vec(),
            seed: None,
            config: Vec::new(),
            inputs: Vec::new(),
            checkpoint_hash: None,
            started: Instant::now(),
        }
    }

    pub fn seed(&mut self, seed: u64) {
        self.seed = Some(seed);
    }

    pub fn config(&mut self, lines: impl IntoIterator<Item = String>) {
        self.config.extend(lines);
    }

    pub fn input(&mut self, path: &Path, bytes: &[u8]) {
        self.inputs.push((path.display().to_string(), sha256_hex(bytes)));
    }

    pub fn checkpoint_hash(&mut self, hash: &str) {
        self.checkpoint_hash = Some(hash.to_string());
    }

    /// Hashes every written output, appends `manifest.txt` and commits.
    pub fn finish(self, mut out: OutputDir) -> Result<()> {
        let mut s = String::new();
        writeln!(s, "command={}", self.command)?;
        writeln!(s, "args={}", self.args.join(" "))?;
        writeln!(s, "seed={}", self.seed.map_or("-".to_string(), |v| v.to_string()))?;
        for c in &self.config {
            writeln!(s, "config.{c}")?;
        }
        for (p, h) in &self.inputs {
            writeln!(s, "input={p} sha256={h}")?;
        }
        for p in out.written() {
            let bytes = fs::read(p).with_context(|| format!("cannot re-read {}", p.display()))?;
            let name = p.file_name().map(|n| n.to_string_lossy().into_owned()).unwrap_or_default();
            writeln!(s, "output={name} sha256={}", sha256_hex(&bytes))?;
        }
        writeln!(s, "checkpoint_hash={}", self.checkpoint_hash.as_deref().unwrap_or("-"))?;
        writeln!(s, "duration_ms={}", self.started.elapsed().as_millis())?;
        out.write("manifest.txt", s.as_bytes())?;
        out.commit();
        Ok(())
    }
}
