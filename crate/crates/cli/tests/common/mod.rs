//! Synthetic audit inputs: a baseline, three differently shaped source dumps,
//! a reference export and the manifest tying them together.

#![allow(dead_code)]

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub const BIN: &str = env!("CARGO_BIN_EXE_citegauge");

const ISSNS: [&str; 4] = ["0138-9130", "2049-3630", "2434-561X", "0028-0836"];
const AUTHORS: [&str; 6] = ["smith", "garcia", "wang", "müller", "okafor", "ivanova"];

pub struct SynthConfig {
    pub docs: usize,
    /// Approximate number of raw edge lines over all three dumps.
    pub edges: usize,
    pub export_docs: usize,
    pub seed: u64,
    pub manifest_seed: u64,
}

impl Default for SynthConfig {
    fn default() -> Self {
        SynthConfig {
            docs: 400,
            edges: 4_000,
            export_docs: 20,
            seed: 1,
            manifest_seed: 42,
        }
    }
}

struct Doc {
    pmid: u64,
    doi: Option<String>,
    year: i32,
    issn: &'static str,
    volume: u32,
    page: u32,
}

fn pmid_of(i: usize) -> u64 {
    3 * i as u64 + 11
}

/// Writes every input under `dir` and returns the manifest path.
pub fn write_fixture(dir: &Path, cfg: &SynthConfig) -> PathBuf {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let docs: Vec<Doc> = (0..cfg.docs)
        .map(|i| Doc {
            pmid: pmid_of(i),
            doi: rng.gen_bool(0.8).then(|| format!("10.5555/syn.{i}")),
            year: 1990 + (i % 30) as i32,
            issn: ISSNS[i % ISSNS.len()],
            volume: rng.gen_range(1..60),
            page: rng.gen_range(1..2000),
        })
        .collect();

    // The true citation graph; references point at any other document.
    let per_doc = (cfg.edges / 3 / cfg.docs).max(1) * 2;
    let truth: Vec<BTreeSet<usize>> = (0..cfg.docs)
        .map(|i| {
            (0..rng.gen_range(0..=per_doc))
                .map(|_| rng.gen_range(0..cfg.docs))
                .filter(|j| *j != i)
                .collect()
        })
        .collect();
    let shipped: BTreeSet<usize> = (0..cfg.docs).filter(|_| rng.gen_bool(0.15)).collect();

    let mut baseline = String::new();
    for (i, d) in docs.iter().enumerate() {
        let types: &[&str] = match i % 20 {
            0 => &["other"],
            1 => &["review"],
            _ => &["journal-article"],
        };
        let mut rec = serde_json::json!({
            "pmid": d.pmid,
            "title": format!("Synthetic study number {i}"),
            "year": d.year,
            "issn": d.issn,
            "volume": d.volume,
            "page": format!("{}-{}", d.page, d.page + 9),
            "author_last": AUTHORS[i % AUTHORS.len()],
            "types": types,
        });
        if let Some(doi) = &d.doi {
            rec["doi"] = doi.clone().into();
        }
        if shipped.contains(&i) {
            let mut refs: Vec<u64> = truth[i].iter().map(|j| docs[*j].pmid).collect();
            refs.push(999_999_999);
            rec["refs"] = refs.into();
        }
        writeln!(baseline, "{rec}").unwrap();
    }
    fs::write(dir.join("baseline.jsonl"), baseline).unwrap();

    let mut noisy = |keep: f64| -> Vec<(usize, usize)> {
        let mut edges = Vec::new();
        for (i, refs) in truth.iter().enumerate() {
            for j in refs {
                if rng.gen_bool(keep) {
                    edges.push((i, *j));
                }
            }
            if rng.gen_bool(0.1) {
                edges.push((i, rng.gen_range(0..cfg.docs)));
            }
        }
        edges.shuffle(&mut rng);
        edges
    };

    // Source A: tab-separated PMID pairs.
    let mut a = String::new();
    for (i, j) in noisy(0.9) {
        writeln!(a, "{}\t{}", docs[i].pmid, docs[j].pmid).unwrap();
    }
    a.push_str("12\t13\n11\t11\n\n");
    fs::write(dir.join("a.tsv"), a).unwrap();

    // Source B: DOI pairs with mixed spellings.
    let mut b = String::new();
    for (i, j) in noisy(0.6) {
        if let (Some(x), Some(y)) = (&docs[i].doi, &docs[j].doi) {
            let y = if j % 3 == 0 {
                format!("https://doi.org/{}", y.to_uppercase())
            } else {
                y.clone()
            };
            writeln!(b, "{x},{y}").unwrap();
        }
    }
    b.push_str("10.9999/nowhere,10.5555/syn.1\nnot-a-line\n");
    fs::write(dir.join("b.csv"), b).unwrap();

    // Source C: per-line identifier scheme.
    let mut c = String::new();
    for (i, j) in noisy(0.75) {
        let (st, sv) = match &docs[i].doi {
            Some(doi) if i % 2 == 0 => ("doi", doi.clone()),
            _ => ("pmid", docs[i].pmid.to_string()),
        };
        writeln!(c, "{st}|{sv}|pmid|{}", docs[j].pmid).unwrap();
    }
    fs::write(dir.join("c.psv"), c).unwrap();

    // Reference export for documents without shipped references.
    let mut export = String::from("citing_pmid,ref_pmid,ref_doi,ref_title,ref_year,ref_issn,ref_volume,ref_page\n");
    let candidates: Vec<usize> = (0..cfg.docs)
        .filter(|i| !shipped.contains(i) && !truth[*i].is_empty())
        .collect();
    for &i in candidates.iter().take(cfg.export_docs) {
        for &j in &truth[i] {
            let d = &docs[j];
            let row = match rng.gen_range(0..4) {
                0 => format!("{},{},,,,,,", docs[i].pmid, d.pmid),
                1 if d.doi.is_some() => format!("{},,{},,,,,", docs[i].pmid, d.doi.as_ref().unwrap()),
                2 => format!("{},,,,{},{},{},{}", docs[i].pmid, d.year, d.issn, d.volume, d.page),
                _ => format!("{},,,\"Synthetic Study Number {j}\",{},,,", docs[i].pmid, d.year),
            };
            writeln!(export, "{row}").unwrap();
        }
        writeln!(export, "{},,,Unmatched reference,1901,,,", docs[i].pmid).unwrap();
    }
    fs::write(dir.join("export.csv"), export).unwrap();

    let manifest = format!(
        r#"schema = "citegauge-manifest/1"
baseline = "baseline.jsonl"
output_dir = "out"
seed = {seed}
year_range = [1988, 2020]
per_year = 5

[[sources]]
name = "alpha"
path = "a.tsv"
[sources.columns]
delimiter = "\t"
citing = {{ scheme = "pmid", column = 0 }}
cited = {{ scheme = "pmid", column = 1 }}

[[sources]]
name = "beta"
path = "b.csv"
scheme = "doi"

[[sources]]
name = "gamma"
path = "c.psv"
[sources.columns]
delimiter = "|"
citing = {{ scheme_column = 0, id_column = 1 }}
cited = {{ scheme_column = 2, id_column = 3 }}

[[golds]]
name = "shipped"
path = "baseline"
format = "baseline"

[[golds]]
name = "external"
path = "export.csv"
format = "canonical"
"#,
        seed = cfg.manifest_seed
    );
    let path = dir.join("audit.toml");
    fs::write(&path, manifest).unwrap();
    path
}

pub fn citegauge(args: &[&str], manifest: &Path) -> Output {
    let mut cmd = Command::new(BIN);
    cmd.args(args)
        .arg("--manifest")
        .arg(manifest)
        .env_remove("CITEGAUGE_LOG");
    cmd.output().expect("binary runs")
}

pub fn run_ok(args: &[&str], manifest: &Path) {
    let out = citegauge(args, manifest);
    assert!(
        out.status.success(),
        "citegauge {args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
}

/// The full pipeline in stage order.
pub const PIPELINE: [&[&str]; 7] = [
    &["resolve"],
    &["evaluate"],
    &["overlap", "--level", "document"],
    &["overlap", "--level", "edge"],
    &["correlate"],
    &["sample"],
    &["report"],
];

pub fn run_pipeline(manifest: &Path) {
    for args in PIPELINE {
        run_ok(args, manifest);
    }
}

/// Relative path → contents of every file under `root`, except timings.
pub fn snapshot(root: &Path) -> BTreeMap<String, Vec<u8>> {
    let mut files = BTreeMap::new();
    let mut stack = vec![root.to_path_buf()];
    while let Some(dir) = stack.pop() {
        for entry in fs::read_dir(&dir).unwrap() {
            let path = entry.unwrap().path();
            if path.is_dir() {
                stack.push(path);
            } else {
                let rel = path.strip_prefix(root).unwrap().to_string_lossy().replace('\\', "/");
                if rel != "timings.log" {
                    files.insert(rel, fs::read(&path).unwrap());
                }
            }
        }
    }
    files
}

/// Paths whose contents differ, plus paths present on one side only.
pub fn diff(a: &BTreeMap<String, Vec<u8>>, b: &BTreeMap<String, Vec<u8>>) -> Vec<String> {
    let keys: BTreeSet<&String> = a.keys().chain(b.keys()).collect();
    keys.into_iter().filter(|k| a.get(*k) != b.get(*k)).cloned().collect()
}
