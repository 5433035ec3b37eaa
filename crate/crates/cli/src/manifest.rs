//! The audit manifest: one TOML file describing a whole run.

use std::collections::BTreeSet;
use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use citegauge::ingest::{ColumnConfig, ReferenceColumns, Scheme};
use serde::Deserialize;

pub const SCHEMA: &str = "citegauge-manifest/1";
pub const BASELINE_GOLD: &str = "baseline";

fn default_per_year() -> usize {
    1000
}

fn default_source_format() -> String {
    "edge-dump".to_string()
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawManifest {
    schema: String,
    baseline: PathBuf,
    output_dir: PathBuf,
    seed: u64,
    year_range: Option<(i32, i32)>,
    #[serde(default = "default_per_year")]
    per_year: usize,
    #[serde(default)]
    sources: Vec<RawSource>,
    #[serde(default)]
    golds: Vec<RawGold>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawSource {
    name: String,
    path: PathBuf,
    #[serde(default = "default_source_format")]
    format: String,
    scheme: Option<Scheme>,
    columns: Option<ColumnConfig>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawGold {
    name: String,
    path: PathBuf,
    format: String,
    delimiter: Option<char>,
    columns: Option<ReferenceColumns>,
}

#[derive(Debug, Clone)]
pub struct SourceSpec {
    pub name: String,
    pub path: PathBuf,
    pub columns: ColumnConfig,
}

#[derive(Debug, Clone)]
pub enum GoldInput {
    Baseline,
    Export {
        path: PathBuf,
        columns: Box<ReferenceColumns>,
        delimiter: u8,
    },
}

#[derive(Debug, Clone)]
pub struct GoldSpec {
    pub name: String,
    pub input: GoldInput,
}

#[derive(Debug, Clone)]
pub struct AuditManifest {
    pub baseline: PathBuf,
    pub output_dir: PathBuf,
    pub seed: u64,
    pub year_range: Option<(i32, i32)>,
    pub per_year: usize,
    pub sources: Vec<SourceSpec>,
    pub golds: Vec<GoldSpec>,
}

/// Names end up in file names and CSV headers.
fn check_name(kind: &str, name: &str) -> Result<()> {
    let ok = !name.is_empty()
        && !name.starts_with('.')
        && name
            .chars()
            .all(|c| c.is_ascii_alphanumeric() || matches!(c, '.' | '-' | '_'));
    if !ok {
        bail!("{kind} name {name:?} must be non-empty and use only ASCII letters, digits, '.', '-' or '_'");
    }
    Ok(())
}

fn check_unique<'a>(kind: &str, names: impl Iterator<Item = &'a str>) -> Result<()> {
    let mut seen = BTreeSet::new();
    for name in names {
        check_name(kind, name)?;
        if !seen.insert(name) {
            bail!("duplicate {kind} name {name:?}");
        }
    }
    Ok(())
}

impl AuditManifest {
    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).with_context(|| format!("cannot read manifest {}", path.display()))?;
        let base = path.parent().unwrap_or(Path::new("."));
        Self::parse(&text, base).with_context(|| format!("invalid manifest {}", path.display()))
    }

    /// Parses manifest text; relative paths are taken from `base`.
    pub fn parse(text: &str, base: &Path) -> Result<Self> {
        let raw: RawManifest = toml::from_str(text)?;
        if raw.schema != SCHEMA {
            bail!("unsupported schema {:?} (expected {SCHEMA:?})", raw.schema);
        }
        check_unique("source", raw.sources.iter().map(|s| s.name.as_str()))?;
        check_unique("gold", raw.golds.iter().map(|g| g.name.as_str()))?;
        if raw.per_year == 0 {
            bail!("per_year must be positive");
        }
        if let Some((a, b)) = raw.year_range {
            if a > b {
                bail!("year_range [{a}, {b}] is empty");
            }
        }
        let resolve = |p: &Path| base.join(p);

        let sources = raw
            .sources
            .into_iter()
            .map(|s| {
                if s.format != "edge-dump" {
                    bail!("source {:?}: unknown format {:?}", s.name, s.format);
                }
                let columns = match (s.columns, s.scheme) {
                    (Some(c), None) => c,
                    (None, Some(scheme)) => ColumnConfig::uniform(scheme),
                    _ => bail!("source {:?}: give exactly one of `scheme` or `columns`", s.name),
                };
                Ok(SourceSpec {
                    name: s.name,
                    path: resolve(&s.path),
                    columns,
                })
            })
            .collect::<Result<Vec<_>>>()?;

        let golds = raw
            .golds
            .into_iter()
            .map(|g| {
                let input = if g.format == BASELINE_GOLD {
                    if g.path != Path::new(BASELINE_GOLD) {
                        bail!("gold {:?}: format \"baseline\" takes path \"baseline\"", g.name);
                    }
                    GoldInput::Baseline
                } else {
                    let columns = match g.columns {
                        Some(c) => c,
                        None => ReferenceColumns::for_tag(&g.format).with_context(|| format!("gold {:?}", g.name))?,
                    };
                    let delimiter = match g.delimiter.unwrap_or(',') {
                        c if c.is_ascii() => c as u8,
                        c => bail!("gold {:?}: delimiter {c:?} is not ASCII", g.name),
                    };
                    GoldInput::Export {
                        path: resolve(&g.path),
                        columns: Box::new(columns),
                        delimiter,
                    }
                };
                Ok(GoldSpec { name: g.name, input })
            })
            .collect::<Result<Vec<_>>>()?;

        Ok(AuditManifest {
            baseline: resolve(&raw.baseline),
            output_dir: resolve(&raw.output_dir),
            seed: raw.seed,
            year_range: raw.year_range,
            per_year: raw.per_year,
            sources,
            golds,
        })
    }

    pub fn source(&self, name: &str) -> Option<&SourceSpec> {
        self.sources.iter().find(|s| s.name == name)
    }

    pub fn gold(&self, name: &str) -> Option<&GoldSpec> {
        self.golds.iter().find(|g| g.name == name)
    }
}
