use std::fmt::Write as _;
use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::time::Instant;

use anyhow::Result;
use dml_core::sme::StepStats;
use serde::{Deserialize, Serialize};

use crate::args::{Format, OutputArgs};
use crate::{BracketError, OutputError, UsageError};

/// Provenance record written next to every data file as
/// `<data file>.manifest.json`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunManifest {
    pub tool_version: String,
    pub command: String,
    pub command_line: Vec<String>,
    pub seed: u64,
    pub dt: Option<f64>,
    pub n_traj: Option<usize>,
    pub scenario: Option<String>,
    /// Command-specific inputs (efficiency, ratio, grid, ...).
    pub parameters: serde_json::Value,
    pub data_file: String,
    pub wall_time_s: f64,
    /// Absent for commands whose core routines do not report step counts.
    pub steps: Option<u64>,
    pub step_rejections: Option<u64>,
    pub step_clamps: Option<u64>,
}

impl RunManifest {
    pub fn manifest_path(data: &Path) -> PathBuf {
        let mut name = data.as_os_str().to_owned();
        name.push(".manifest.json");
        PathBuf::from(name)
    }
}

/// What a command knows about its own run, filled in as it goes.
pub(crate) struct Provenance {
    pub command: &'static str,
    pub command_line: Vec<String>,
    pub started: Instant,
    pub seed: u64,
    pub dt: Option<f64>,
    pub n_traj: Option<usize>,
    pub scenario: Option<String>,
    pub parameters: serde_json::Value,
    pub stats: Option<StepStats>,
}

impl Provenance {
    pub fn new(command: &'static str, command_line: Vec<String>, seed: u64) -> Self {
        Provenance {
            command,
            command_line,
            started: Instant::now(),
            seed,
            dt: None,
            n_traj: None,
            scenario: None,
            parameters: serde_json::Value::Null,
            stats: None,
        }
    }

    fn manifest(&self, data_file: &Path) -> RunManifest {
        RunManifest {
            tool_version: env!("CARGO_PKG_VERSION").to_string(),
            command: self.command.to_string(),
            command_line: self.command_line.clone(),
            seed: self.seed,
            dt: self.dt,
            n_traj: self.n_traj,
            scenario: self.scenario.clone(),
            parameters: self.parameters.clone(),
            data_file: data_file.display().to_string(),
            wall_time_s: self.started.elapsed().as_secs_f64(),
            steps: self.stats.map(|s| s.steps),
            step_rejections: self.stats.map(|s| s.retries),
            step_clamps: self.stats.map(|s| s.clamps),
        }
    }
}

pub(crate) fn write_file(path: &Path, content: &str) -> Result<()> {
    let wrap = |source| OutputError {
        path: path.display().to_string(),
        source,
    };
    fs::write(path, content).map_err(wrap)?;
    Ok(())
}

/// Write `content` to the requested file (plus its manifest) or to stdout.
pub(crate) fn emit(path: Option<&Path>, content: &str, prov: &Provenance) -> Result<()> {
    match path {
        Some(path) => {
            write_file(path, content)?;
            let manifest = serde_json::to_string_pretty(&prov.manifest(path))? + "\n";
            write_file(&RunManifest::manifest_path(path), &manifest)
        }
        None => {
            let mut out = std::io::stdout().lock();
            out.write_all(content.as_bytes())
                .and_then(|_| out.flush())
                .map_err(|source| OutputError {
                    path: "stdout".into(),
                    source,
                })?;
            Ok(())
        }
    }
}

/// Records rendered as CSV or as a JSON array of objects with the same keys.
pub(crate) struct Table {
    header: Vec<&'static str>,
    rows: Vec<Vec<Cell>>,
}

pub(crate) enum Cell {
    Num(f64),
    Int(u64),
    Text(String),
}

impl From<f64> for Cell {
    fn from(v: f64) -> Self {
        Cell::Num(v)
    }
}

impl From<usize> for Cell {
    fn from(v: usize) -> Self {
        Cell::Int(v as u64)
    }
}

impl From<u64> for Cell {
    fn from(v: u64) -> Self {
        Cell::Int(v)
    }
}

impl From<String> for Cell {
    fn from(v: String) -> Self {
        Cell::Text(v)
    }
}

impl Table {
    pub fn new(header: &[&'static str]) -> Self {
        Table {
            header: header.to_vec(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<Cell>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }

    pub fn render(&self, format: Format) -> Result<String> {
        match format {
            Format::Csv => Ok(self.csv()),
            Format::Json => {
                let records: Vec<serde_json::Map<String, serde_json::Value>> = self
                    .rows
                    .iter()
                    .map(|row| {
                        self.header
                            .iter()
                            .zip(row)
                            .map(|(k, c)| {
                                let v = match c {
                                    Cell::Num(x) => serde_json::json!(x),
                                    Cell::Int(n) => serde_json::json!(n),
                                    Cell::Text(s) => serde_json::json!(s),
                                };
                                (k.to_string(), v)
                            })
                            .collect()
                    })
                    .collect();
                Ok(serde_json::to_string_pretty(&records)? + "\n")
            }
        }
    }

    fn csv(&self) -> String {
        let mut s = self.header.join(",");
        s.push('\n');
        for row in &self.rows {
            for (i, c) in row.iter().enumerate() {
                if i > 0 {
                    s.push(',');
                }
                // `{}` on f64 is the shortest round-tripping form, so equal
                // numbers always print identically; `+ 0.0` folds −0 into 0.
                let _ = match c {
                    Cell::Num(x) => write!(s, "{}", x + 0.0),
                    Cell::Int(n) => write!(s, "{n}"),
                    Cell::Text(t) => write!(s, "{t}"),
                };
            }
            s.push('\n');
        }
        s
    }
}

pub(crate) fn emit_table(out: &OutputArgs, table: &Table, prov: &Provenance) -> Result<()> {
    emit(out.output.as_deref(), &table.render(out.format)?, prov)
}

/// `a:b:n` → `n` evenly spaced points from `a` to `b` inclusive.
pub fn parse_grid(text: &str) -> Result<Vec<f64>> {
    let bad = || UsageError(format!("grid '{text}' is not of the form lo:hi:n"));
    let parts: Vec<&str> = text.split(':').collect();
    let [a, b, n] = parts[..] else {
        return Err(bad().into());
    };
    let a: f64 = a.trim().parse().map_err(|_| bad())?;
    let b: f64 = b.trim().parse().map_err(|_| bad())?;
    let n: usize = n.trim().parse().map_err(|_| bad())?;
    if n == 0 || !a.is_finite() || !b.is_finite() {
        return Err(bad().into());
    }
    if n == 1 {
        return Ok(vec![a]);
    }
    let h = (b - a) / (n - 1) as f64;
    Ok((0..n).map(|i| if i == n - 1 { b } else { a + i as f64 * h }).collect())
}

/// `lo:hi` with `0 ≤ lo < hi ≤ 1`.
pub fn parse_bracket(text: &str) -> Result<(f64, f64)> {
    let parts: Vec<&str> = text.split(':').collect();
    let [lo, hi] = parts[..] else {
        return Err(BracketError(format!("'{text}' is not of the form lo:hi")).into());
    };
    let parse = |s: &str| {
        s.trim()
            .parse::<f64>()
            .map_err(|_| BracketError(format!("'{s}' is not a number")))
    };
    let (lo, hi) = (parse(lo)?, parse(hi)?);
    if !(0.0..=1.0).contains(&lo) || !(0.0..=1.0).contains(&hi) || lo >= hi {
        return Err(BracketError(format!("need 0 ≤ lo < hi ≤ 1, got {lo}:{hi}")).into());
    }
    Ok((lo, hi))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grids() {
        assert_eq!(parse_grid("0.55:0.85:7").unwrap().len(), 7);
        let g = parse_grid("0:1:5").unwrap();
        assert_eq!(g, vec![0.0, 0.25, 0.5, 0.75, 1.0]);
        assert_eq!(parse_grid("0.3:0.9:1").unwrap(), vec![0.3]);
        for bad in ["", "0:1", "0:1:0", "a:1:3", "0:1:2:3"] {
            assert!(parse_grid(bad).is_err(), "{bad}");
        }
    }

    #[test]
    fn brackets() {
        assert_eq!(parse_bracket("0.7:0.95").unwrap(), (0.7, 0.95));
        for bad in ["0.9:0.7", "0.7", "x:0.9", "0.5:1.5", "0.5:0.5"] {
            let e = parse_bracket(bad).unwrap_err();
            assert!(e.is::<BracketError>(), "{bad}");
        }
    }

    #[test]
    fn csv_and_json_carry_the_same_records() {
        let mut t = Table::new(&["eta", "S", "n_traj"]);
        t.push(vec![0.7.into(), 1.0125.into(), 100usize.into()]);
        assert_eq!(t.render(Format::Csv).unwrap(), "eta,S,n_traj\n0.7,1.0125,100\n");
        let v: serde_json::Value = serde_json::from_str(&t.render(Format::Json).unwrap()).unwrap();
        assert_eq!(v[0]["S"], 1.0125);
        assert_eq!(v[0]["n_traj"], 100);
    }

    #[test]
    fn manifest_sits_next_to_data() {
        let p = RunManifest::manifest_path(Path::new("/tmp/out.csv"));
        assert_eq!(p, PathBuf::from("/tmp/out.csv.manifest.json"));
    }
}
