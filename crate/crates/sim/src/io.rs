//! Artifact formats.
//!
//! CSV files start with `# key = value` comment lines (always including
//! `config_hash` and `seed`), then one column-name line, then data rows.
//! Floats are written in their shortest round-trip form.
//!
//! Checkpoints are little-endian binary:
//!
//! | offset      | size  | content                              |
//! |-------------|-------|--------------------------------------|
//! | 0           | 8     | magic `UAMCKPT\0`                    |
//! | 8           | 4     | format version, `u32` (currently 1)  |
//! | 12          | 4     | header length `h` in bytes, `u32`    |
//! | 16          | h     | UTF-8 TOML header                    |
//! | 16 + h      | 8     | parameter count `n`, `u64`           |
//! | 24 + h      | 8 n   | parameters, `f64`                    |

use std::fmt::Write as _;
use std::path::Path;

use uam_core::afl::AflTrace;
use uam_core::burgers::ClientDataset;
use uam_core::NetworkRealization;

use crate::config::ExperimentConfig;
use crate::{Result, SimError};

pub const CHECKPOINT_MAGIC: [u8; 8] = *b"UAMCKPT\0";
pub const CHECKPOINT_VERSION: u32 = 1;

/// Float formatting used in every CSV.
pub fn fmt_f64(v: f64) -> String {
    let a = v.abs();
    if v == 0.0 || (1e-4..1e15).contains(&a) || !v.is_finite() {
        format!("{v}")
    } else {
        format!("{v:e}")
    }
}

/// A CSV file held in memory.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct CsvTable {
    pub meta: Vec<(String, String)>,
    pub columns: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl CsvTable {
    /// Empty table whose header carries the config hash and seed.
    pub fn new(cfg: &ExperimentConfig, kind: &str, columns: &[&str]) -> Self {
        CsvTable {
            meta: vec![
                ("artifact".into(), kind.into()),
                ("config_hash".into(), cfg.hash()),
                ("seed".into(), cfg.seed.to_string()),
            ],
            columns: columns.iter().map(|c| c.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    pub fn meta(&mut self, key: &str, value: impl ToString) -> &mut Self {
        self.meta.push((key.into(), value.to_string()));
        self
    }

    pub fn get_meta(&self, key: &str) -> Option<&str> {
        self.meta.iter().find(|(k, _)| k == key).map(|(_, v)| v.as_str())
    }

    pub fn push(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }

    pub fn push_f64(&mut self, row: &[f64]) {
        self.push(row.iter().map(|&v| fmt_f64(v)).collect());
    }

    pub fn render(&self) -> String {
        let mut s = String::new();
        for (k, v) in &self.meta {
            let _ = writeln!(s, "# {k} = {v}");
        }
        let _ = writeln!(s, "{}", self.columns.join(","));
        for r in &self.rows {
            let _ = writeln!(s, "{}", r.join(","));
        }
        s
    }

    pub fn parse(text: &str) -> Result<Self> {
        let mut t = CsvTable::default();
        let mut lines = text.lines();
        for line in lines.by_ref() {
            if let Some(rest) = line.strip_prefix("# ") {
                let (k, v) = rest
                    .split_once(" = ")
                    .ok_or_else(|| SimError::Config(format!("malformed header line `{line}`")))?;
                t.meta.push((k.into(), v.into()));
            } else {
                t.columns = line.split(',').map(String::from).collect();
                break;
            }
        }
        for line in lines {
            let row: Vec<String> = line.split(',').map(String::from).collect();
            if row.len() != t.columns.len() {
                return Err(SimError::Config(format!(
                    "row has {} fields, expected {}",
                    row.len(),
                    t.columns.len()
                )));
            }
            t.rows.push(row);
        }
        Ok(t)
    }

    /// Column `name` parsed as floats; empty cells become NaN.
    pub fn column_f64(&self, name: &str) -> Option<Vec<f64>> {
        let i = self.columns.iter().position(|c| c == name)?;
        Some(self.rows.iter().map(|r| r[i].parse().unwrap_or(f64::NAN)).collect())
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.render()).map_err(|e| SimError::io(path, e))
    }

    pub fn read(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| SimError::io(path, e))?;
        Self::parse(&text)
    }
}

/// One row per entity: GBS, cluster center, corridor (at its foot point)
/// and aircraft. Lengths in meters, angles in radians.
pub fn realization_table(cfg: &ExperimentConfig, real: &NetworkRealization) -> CsvTable {
    let mut t = CsvTable::new(cfg, "realization", &["kind", "cluster_id", "corridor_id", "x", "y", "r", "theta", "u"]);
    t.meta("disc_radius_m", fmt_f64(real.disc_radius)).meta("height_m", fmt_f64(real.height));
    let f = fmt_f64;
    for p in &real.gbs {
        t.push(vec!["gbs".into(), String::new(), String::new(), f(p.x), f(p.y), String::new(), String::new(), String::new()]);
    }
    for (ci, c) in real.clusters.iter().enumerate() {
        t.push(vec!["cp".into(), ci.to_string(), String::new(), f(c.cp.x), f(c.cp.y), String::new(), String::new(), String::new()]);
        for (li, k) in c.corridors.iter().enumerate() {
            let foot = k.foot();
            t.push(vec!["corridor".into(), ci.to_string(), li.to_string(), f(foot.x), f(foot.y), f(k.r), f(k.theta), String::new()]);
        }
        for a in &c.aircraft {
            let k = &c.corridors[a.corridor];
            t.push(vec![
                "aircraft".into(),
                ci.to_string(),
                a.corridor.to_string(),
                f(a.pos.x),
                f(a.pos.y),
                f(k.r),
                f(k.theta),
                f(a.offset.0),
            ]);
        }
    }
    t
}

/// One row per sample: client, sample, the `n` input values, the `n` target values.
pub fn dataset_table(cfg: &ExperimentConfig, clients: &[ClientDataset]) -> CsvTable {
    let n = clients.first().and_then(|c| c.samples.first()).map_or(0, |s| s.input.len());
    let mut names = vec!["client_id".to_string(), "sample_id".to_string()];
    names.extend((0..n).map(|i| format!("input_{i}")));
    names.extend((0..n).map(|i| format!("target_{i}")));
    let mut t = CsvTable::new(cfg, "dataset", &[]);
    t.columns = names;
    t.meta("n_grid", n).meta("clients", clients.len());
    t.meta(
        "client_decay",
        clients.iter().map(|c| fmt_f64(c.decay)).collect::<Vec<_>>().join(" "),
    );
    t.meta("config", cfg.canonical_toml().replace('\n', "\\n"));
    for c in clients {
        for (j, s) in c.samples.iter().enumerate() {
            let mut row = vec![c.client.to_string(), j.to_string()];
            row.extend(s.input.values.iter().map(|&v| fmt_f64(v)));
            row.extend(s.target.values.iter().map(|&v| fmt_f64(v)));
            t.push(row);
        }
    }
    t
}

pub const TRACE_COLUMNS: [&str; 6] = ["round", "sim_clock_s", "client_id", "staleness_s", "g1_weight", "global_test_loss"];

pub fn trace_table(cfg: &ExperimentConfig, runner: &str, trace: &AflTrace) -> CsvTable {
    let mut t = CsvTable::new(cfg, "trace", &TRACE_COLUMNS);
    t.meta("runner", runner).meta("events", trace.events);
    for r in &trace.records {
        t.push(vec![
            r.round.to_string(),
            fmt_f64(r.sim_clock),
            r.client.map_or(String::new(), |c| c.to_string()),
            fmt_f64(r.staleness),
            fmt_f64(r.g1_weight),
            fmt_f64(r.test_loss),
        ]);
    }
    t
}

pub fn encode_checkpoint(header: &str, params: &[f64]) -> Vec<u8> {
    let h = header.as_bytes();
    let mut out = Vec::with_capacity(24 + h.len() + 8 * params.len());
    out.extend_from_slice(&CHECKPOINT_MAGIC);
    out.extend_from_slice(&CHECKPOINT_VERSION.to_le_bytes());
    out.extend_from_slice(&(h.len() as u32).to_le_bytes());
    out.extend_from_slice(h);
    out.extend_from_slice(&(params.len() as u64).to_le_bytes());
    for v in params {
        out.extend_from_slice(&v.to_le_bytes());
    }
    out
}

/// Header text and parameters of a checkpoint.
pub fn decode_checkpoint(bytes: &[u8]) -> Result<(String, Vec<f64>)> {
    let bad = |m: &str| SimError::Config(format!("checkpoint: {m}"));
    let take = |at: usize, n: usize| bytes.get(at..at + n).ok_or_else(|| bad("truncated"));
    if take(0, 8)? != CHECKPOINT_MAGIC {
        return Err(bad("bad magic"));
    }
    let version = u32::from_le_bytes(take(8, 4)?.try_into().unwrap());
    if version != CHECKPOINT_VERSION {
        return Err(bad(&format!("unsupported version {version}")));
    }
    let h = u32::from_le_bytes(take(12, 4)?.try_into().unwrap()) as usize;
    let header = std::str::from_utf8(take(16, h)?).map_err(|_| bad("header is not UTF-8"))?.to_string();
    let n = u64::from_le_bytes(take(16 + h, 8)?.try_into().unwrap()) as usize;
    let body = take(24 + h, n.checked_mul(8).ok_or_else(|| bad("bad count"))?)?;
    if bytes.len() != 24 + h + 8 * n {
        return Err(bad("trailing bytes"));
    }
    let params = body.chunks_exact(8).map(|c| f64::from_le_bytes(c.try_into().unwrap())).collect();
    Ok((header, params))
}

pub fn write_checkpoint(path: &Path, header: &str, params: &[f64]) -> Result<()> {
    std::fs::write(path, encode_checkpoint(header, params)).map_err(|e| SimError::io(path, e))
}

pub fn read_checkpoint(path: &Path) -> Result<(String, Vec<f64>)> {
    let bytes = std::fs::read(path).map_err(|e| SimError::io(path, e))?;
    decode_checkpoint(&bytes)
}
