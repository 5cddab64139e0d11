//! Flat `key = value` configuration merged under the command-line flags.
//!
//! Keys: `hbar`, `model`, `grid`, `out`, `format`, `threads`, and model
//! parameters either bare (`gamma0 = 0.6`) or prefixed (`param.gamma0 = 0.6`).
//! Blank lines and lines starting with `#` are ignored.

use std::path::{Path, PathBuf};

use moyal::models::ModelPreset;
use moyal::symbols::io::Format;

use crate::args::{FormatArg, Global};
use crate::CliError;

const MODEL_PARAMS: [&str; 10] = ["m0", "gamma0", "omega0", "a", "b", "profile", "omega1", "omega2", "t_on", "width"];

#[derive(Debug, Clone)]
pub struct Settings {
    pub hbar: f64,
    pub models: Vec<String>,
    /// Ordered overrides; later entries win.
    pub params: Vec<(String, String)>,
    pub grid: Option<usize>,
    pub out: Option<PathBuf>,
    pub format: Option<Format>,
    pub threads: Option<usize>,
}

fn usage(msg: impl Into<String>) -> CliError {
    CliError::Usage(msg.into())
}

fn split_pair(s: &str, what: &str) -> Result<(String, String), CliError> {
    let (k, v) = s.split_once('=').ok_or_else(|| usage(format!("{what} '{s}' is not of the form key=value")))?;
    let (k, v) = (k.trim(), v.trim());
    if k.is_empty() {
        return Err(usage(format!("{what} '{s}' has an empty key")));
    }
    Ok((k.to_string(), v.to_string()))
}

fn parse_format(v: &str) -> Result<Format, CliError> {
    match v.to_ascii_lowercase().as_str() {
        "csv" => Ok(Format::Csv),
        "json" => Ok(Format::Json),
        other => Err(usage(format!("unknown format '{other}' (expected csv or json)"))),
    }
}

fn parse_num<T: std::str::FromStr>(key: &str, v: &str) -> Result<T, CliError> {
    v.parse().map_err(|_| usage(format!("{key}: '{v}' is not a valid value")))
}

#[derive(Debug, Default)]
struct FileEntries {
    hbar: Option<f64>,
    model: Option<String>,
    params: Vec<(String, String)>,
    grid: Option<usize>,
    out: Option<PathBuf>,
    format: Option<Format>,
    threads: Option<usize>,
}

fn read_file(path: &Path) -> Result<FileEntries, CliError> {
    let text = std::fs::read_to_string(path).map_err(|e| usage(format!("config {}: {e}", path.display())))?;
    let mut f = FileEntries::default();
    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (key, value) = split_pair(line, &format!("config line {}", lineno + 1))?;
        match key.as_str() {
            "hbar" => f.hbar = Some(parse_num(&key, &value)?),
            "model" => f.model = Some(value),
            "grid" => f.grid = Some(parse_num(&key, &value)?),
            "out" => f.out = Some(PathBuf::from(value)),
            "format" => f.format = Some(parse_format(&value)?),
            "threads" => f.threads = Some(parse_num(&key, &value)?),
            k => {
                let name = k.strip_prefix("param.").unwrap_or(k);
                if !MODEL_PARAMS.contains(&name) {
                    return Err(usage(format!("config line {}: unknown key '{k}'", lineno + 1)));
                }
                f.params.push((name.to_string(), value));
            }
        }
    }
    Ok(f)
}

impl Settings {
    pub fn resolve(g: &Global) -> Result<Self, CliError> {
        let file = match &g.config {
            Some(p) => read_file(p)?,
            None => FileEntries::default(),
        };
        let hbar = g.hbar.or(file.hbar).unwrap_or(1.0);
        if !(hbar > 0.0 && hbar.is_finite()) {
            return Err(usage(format!("--hbar must be positive, got {hbar}")));
        }
        let model = g.model.clone().or(file.model).unwrap_or_else(|| "sho".into());
        let models: Vec<String> = if model.trim() == "all" {
            vec!["sho".into(), "ck".into(), "tdf".into()]
        } else {
            model.split(',').map(|m| m.trim().to_string()).filter(|m| !m.is_empty()).collect()
        };
        if models.is_empty() {
            return Err(usage("--model is empty"));
        }
        let mut params = file.params;
        for p in &g.params {
            params.push(split_pair(p, "--param")?);
        }
        for (k, v) in [("m0", &g.m0), ("gamma0", &g.gamma0), ("omega0", &g.omega0)] {
            if let Some(v) = v {
                params.push((k.into(), v.clone()));
            }
        }
        let grid = g.grid.or(file.grid);
        if let Some(n) = grid {
            if n < 8 {
                return Err(usage(format!("--grid must be at least 8, got {n}")));
            }
        }
        let threads = g.threads.or(file.threads);
        if threads == Some(0) {
            return Err(usage("--threads must be at least 1"));
        }
        Ok(Self {
            hbar,
            models,
            params,
            grid,
            out: g.out.clone().or(file.out),
            format: g.format.map(|f| match f {
                FormatArg::Csv => Format::Csv,
                FormatArg::Json => Format::Json,
            })
            .or(file.format),
            threads,
        })
    }

    /// The single selected model with its overrides; `profile` is applied
    /// first because it resets the profile parameters.
    pub fn preset(&self) -> Result<(String, ModelPreset), CliError> {
        if self.models.len() != 1 {
            return Err(usage(format!("this command takes one model, got {}", self.models.join(","))));
        }
        self.preset_named(&self.models[0], true)
    }

    /// Every selected model. Overrides a model does not accept are skipped
    /// when several models are selected.
    pub fn presets(&self) -> Result<Vec<(String, ModelPreset)>, CliError> {
        let strict = self.models.len() == 1;
        self.models.iter().map(|m| self.preset_named(m, strict)).collect()
    }

    fn preset_named(&self, name: &str, strict: bool) -> Result<(String, ModelPreset), CliError> {
        let mut preset = ModelPreset::by_name(name).map_err(|e| usage(e.to_string()))?;
        let ordered = self.params.iter().filter(|(k, _)| k == "profile").chain(self.params.iter().filter(|(k, _)| k != "profile"));
        for (k, v) in ordered {
            if !strict && !preset.param_names().contains(&k.as_str()) {
                continue;
            }
            preset.set_param(k, v).map_err(|e| usage(e.to_string()))?;
        }
        preset.validate()?;
        Ok((name.to_string(), preset))
    }
}
