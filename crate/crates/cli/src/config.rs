//! Flat key=value configuration. Every table the pipeline consumes can be
//! swapped by pointing its key at a replacement file; unset keys fall back
//! to the data files embedded in the library.

use std::path::{Path, PathBuf};

use npchunk::corpus::TagMap;
use npchunk::error::{Error, Result};
use npchunk::fsm::FsmSpec;
use npchunk::heads::PriorityTable;

pub const CONFIG_ENV: &str = "NP_CHUNKER_CONFIG";

#[derive(Debug, Clone, Default)]
pub struct Config {
    pub tag_map: Option<PathBuf>,
    pub syntactic_priority: Option<PathBuf>,
    pub semantic_priority: Option<PathBuf>,
    pub fsm_spec: Option<PathBuf>,
    pub model: Option<PathBuf>,
    pub chunk_len_cap: Option<usize>,
    pub epsilon: Option<f64>,
    pub np_label_prefix: Option<String>,
    pub report_format: Option<String>,
}

impl Config {
    pub fn parse(text: &str, base: &Path) -> Result<Config> {
        let mut cfg = Config::default();
        for (idx, raw) in text.lines().enumerate() {
            let line_no = idx + 1;
            let line = match raw.find('#') {
                Some(i) => &raw[..i],
                None => raw,
            };
            let line = line.trim();
            if line.is_empty() {
                continue;
            }
            let Some((key, value)) = line.split_once('=') else {
                return Err(Error::parse(line_no, format!("expected key=value, got {line:?}")));
            };
            let (key, value) = (key.trim(), value.trim());
            let path = |v: &str| -> PathBuf {
                let p = PathBuf::from(v);
                if p.is_absolute() {
                    p
                } else {
                    base.join(p)
                }
            };
            match key {
                "tag_map" => cfg.tag_map = Some(path(value)),
                "syntactic_priority" => cfg.syntactic_priority = Some(path(value)),
                "semantic_priority" => cfg.semantic_priority = Some(path(value)),
                "fsm_spec" => cfg.fsm_spec = Some(path(value)),
                "model" => cfg.model = Some(path(value)),
                "chunk_len_cap" => {
                    cfg.chunk_len_cap = Some(
                        value
                            .parse()
                            .map_err(|_| Error::parse(line_no, "chunk_len_cap must be an integer"))?,
                    )
                }
                "epsilon" => {
                    cfg.epsilon = Some(
                        value
                            .parse()
                            .map_err(|_| Error::parse(line_no, "epsilon must be a number"))?,
                    )
                }
                "np_label_prefix" => cfg.np_label_prefix = Some(value.to_string()),
                "report_format" => match value {
                    "json" | "text" => cfg.report_format = Some(value.to_string()),
                    other => {
                        return Err(Error::parse(
                            line_no,
                            format!("report_format must be json or text, got {other:?}"),
                        ))
                    }
                },
                other => return Err(Error::parse(line_no, format!("unknown key {other:?}"))),
            }
        }
        cfg.check_paths()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Config> {
        let text = std::fs::read_to_string(path)?;
        let base = path.parent().unwrap_or(Path::new("."));
        Config::parse(&text, base)
    }

    /// Loads the file named by NP_CHUNKER_CONFIG when no --config was given.
    pub fn from_env_or_default(explicit: Option<&Path>) -> Result<Config> {
        if let Some(p) = explicit {
            return Config::load(p);
        }
        match std::env::var_os(CONFIG_ENV) {
            Some(p) => Config::load(Path::new(&p)),
            None => Ok(Config::default()),
        }
    }

    fn check_paths(&self) -> Result<()> {
        for (key, path) in [
            ("tag_map", &self.tag_map),
            ("syntactic_priority", &self.syntactic_priority),
            ("semantic_priority", &self.semantic_priority),
            ("fsm_spec", &self.fsm_spec),
            ("model", &self.model),
        ] {
            if let Some(p) = path {
                if !p.is_file() {
                    return Err(Error::Validation(format!(
                        "{key} path {} does not exist",
                        p.display()
                    )));
                }
            }
        }
        Ok(())
    }

    pub fn tag_map(&self) -> Result<TagMap> {
        match &self.tag_map {
            Some(p) => TagMap::parse(&std::fs::read_to_string(p)?),
            None => Ok(npchunk::corpus::default_tag_map()),
        }
    }

    pub fn syntactic_table(&self) -> Result<PriorityTable> {
        match &self.syntactic_priority {
            Some(p) => PriorityTable::parse(&std::fs::read_to_string(p)?),
            None => Ok(npchunk::heads::default_syntactic_table()),
        }
    }

    pub fn semantic_table(&self) -> Result<PriorityTable> {
        match &self.semantic_priority {
            Some(p) => PriorityTable::parse(&std::fs::read_to_string(p)?),
            None => Ok(npchunk::heads::default_semantic_table()),
        }
    }

    pub fn fsm_spec(&self) -> Result<FsmSpec> {
        match &self.fsm_spec {
            Some(p) => npchunk::fsm::load_fsm_spec(p),
            None => Ok(npchunk::fsm::default_fsm_spec()),
        }
    }
}
