use std::fs::File;
use std::io::{self, BufRead, BufReader, BufWriter, Read, Write};
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use serde::Deserialize;
use tabrec_core::assignment::AssignConfig;
use tabrec_core::structure::{EmptyFormTable, DEFAULT_MAX_LEN};
use tabrec_core::synth::SynthParams;

/// Settings read from the TOML config file. Every key is optional.
#[derive(Debug, Clone, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Config {
    pub max_len: usize,
    pub strict: bool,
    pub jobs: usize,
    pub format_correction: bool,
    pub empty_form_table: Option<PathBuf>,
    pub assign: AssignConfig,
    pub stats: StatsConfig,
    pub synth: SynthParams,
}

impl Default for Config {
    fn default() -> Self {
        Self {
            max_len: DEFAULT_MAX_LEN,
            strict: false,
            jobs: 0,
            format_correction: true,
            empty_form_table: None,
            assign: AssignConfig::default(),
            stats: StatsConfig::default(),
            synth: SynthParams::default(),
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct StatsConfig {
    pub length_limit: usize,
    pub bin_width: usize,
    pub long_cell_chars: usize,
    pub top_k: usize,
}

impl Default for StatsConfig {
    fn default() -> Self {
        Self {
            length_limit: DEFAULT_MAX_LEN,
            bin_width: 50,
            long_cell_chars: 100,
            top_k: 20,
        }
    }
}

impl Config {
    pub fn load(path: Option<&Path>) -> Result<Self> {
        let Some(path) = path else {
            return Ok(Self::default());
        };
        let text = std::fs::read_to_string(path).with_context(|| format!("reading config {}", path.display()))?;
        let cfg: Config = toml::from_str(&text).with_context(|| format!("parsing config {}", path.display()))?;
        log::debug!("config from {}: {cfg:?}", path.display());
        Ok(cfg)
    }

    /// The flag wins over the config file, which wins over the built-in table.
    pub fn forms(&self, flag: Option<&Path>) -> Result<EmptyFormTable> {
        match flag.or(self.empty_form_table.as_deref()) {
            Some(p) => EmptyFormTable::load(p).with_context(|| format!("loading empty-form table {}", p.display())),
            None => Ok(EmptyFormTable::default()),
        }
    }
}

fn is_std(path: &Path) -> bool {
    path.as_os_str() == "-"
}

pub fn open_input(path: &Path) -> Result<Box<dyn BufRead>> {
    if is_std(path) {
        Ok(Box::new(BufReader::new(io::stdin())))
    } else {
        let f = File::open(path).with_context(|| format!("opening {}", path.display()))?;
        Ok(Box::new(BufReader::new(f)))
    }
}

pub fn read_text(path: &Path) -> Result<String> {
    let mut text = String::new();
    open_input(path)?
        .read_to_string(&mut text)
        .with_context(|| format!("reading {}", path.display()))?;
    Ok(text)
}

pub fn open_output(path: &Path) -> Result<Box<dyn Write>> {
    if is_std(path) {
        Ok(Box::new(BufWriter::new(io::stdout())))
    } else {
        let f = File::create(path).with_context(|| format!("creating {}", path.display()))?;
        Ok(Box::new(BufWriter::new(f)))
    }
}

pub fn write_json_line<T: serde::Serialize>(out: &mut dyn Write, value: &T) -> Result<()> {
    serde_json::to_writer(&mut *out, value)?;
    out.write_all(b"\n")?;
    Ok(())
}
