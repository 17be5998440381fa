//! CSV tables, JSON summaries and the markdown report. Files are written to a
//! temporary name and renamed, so readers never see partial output.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::kernel::Params;

/// One checked claim, as stored in `<command>.summary.json`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub experiment: String,
    /// Plain statement of the property under test.
    pub theorem: String,
    pub slope: Option<f64>,
    pub r2: Option<f64>,
    /// Headline number for checks without a slope (max deviation, sup error, ...).
    pub value: Option<f64>,
    pub tolerance: Option<f64>,
    pub pass: bool,
    /// Some quadrature did not reach its tolerance.
    pub flagged: bool,
}

impl Summary {
    pub fn value(experiment: &str, theorem: &str, value: f64, tolerance: f64, pass: bool, flagged: bool) -> Self {
        Summary {
            experiment: experiment.into(),
            theorem: theorem.into(),
            slope: None,
            r2: None,
            value: Some(value),
            tolerance: Some(tolerance),
            pass,
            flagged,
        }
    }
}

/// Shortest round-trip form, in exponent notation outside [1e-4, 1e7).
pub fn num(v: f64) -> String {
    let a = v.abs();
    if a == 0.0 || !a.is_finite() || (1e-4..1e7).contains(&a) {
        format!("{v}")
    } else {
        format!("{v:e}")
    }
}

pub fn opt(v: Option<f64>) -> String {
    v.map(num).unwrap_or_default()
}

pub const PARAM_HEADER: [&str; 6] = ["claim", "epsilon", "delta", "kappa", "theta", "N"];

/// The leading (claim, ε, δ, k, θ, N) block of a table row.
pub fn param_cells(claim: &str, p: &Params, theta: Option<f64>) -> Vec<String> {
    vec![claim.into(), num(p.epsilon), num(p.delta), num(p.kappa), opt(theta), p.dim.to_string()]
}

/// The same block for rows that aggregate a whole parameter grid.
pub fn grid_cells(claim: &str) -> Vec<String> {
    let mut v = vec![claim.to_string()];
    v.extend(std::iter::repeat_n("grid".to_string(), 5));
    v
}

pub struct Table {
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    /// A table whose header starts with the parameter block.
    pub fn with_params(rest: &[&str]) -> Self {
        let header = PARAM_HEADER.iter().chain(rest).map(|s| s.to_string()).collect();
        Table { header, rows: Vec::new() }
    }

    pub fn push(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }

    pub fn to_csv(&self) -> Result<Vec<u8>> {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(&self.header).map_err(std::io::Error::from)?;
        for r in &self.rows {
            w.write_record(r).map_err(std::io::Error::from)?;
        }
        w.into_inner().map_err(|e| crate::Error::Io(e.into_error()))
    }
}

pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let tmp = path.with_extension("tmp");
    {
        let mut f = fs::File::create(&tmp)?;
        f.write_all(bytes)?;
        f.sync_all()?;
    }
    fs::rename(&tmp, path)?;
    Ok(())
}

pub struct OutDir {
    pub dir: PathBuf,
}

impl OutDir {
    pub fn create(dir: &Path) -> Result<Self> {
        fs::create_dir_all(dir)?;
        Ok(OutDir { dir: dir.to_path_buf() })
    }

    pub fn table(&self, name: &str, table: &Table) -> Result<PathBuf> {
        let path = self.dir.join(format!("{name}.csv"));
        write_atomic(&path, &table.to_csv()?)?;
        Ok(path)
    }

    pub fn json<T: Serialize>(&self, name: &str, value: &T) -> Result<PathBuf> {
        let path = self.dir.join(format!("{name}.json"));
        let mut bytes = serde_json::to_vec_pretty(value).map_err(|e| crate::Error::Io(e.into()))?;
        bytes.push(b'\n');
        write_atomic(&path, &bytes)?;
        Ok(path)
    }

    pub fn summaries(&self, command: &str, s: &[Summary]) -> Result<PathBuf> {
        self.json(&format!("{command}.summary"), &s)
    }
}

/// Collects every `*.summary.json` in `dir`, in file-name order.
pub fn read_summaries(dir: &Path) -> Result<Vec<(String, Vec<Summary>)>> {
    let mut names: Vec<PathBuf> = fs::read_dir(dir)?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.file_name().and_then(|n| n.to_str()).is_some_and(|n| n.ends_with(".summary.json")))
        .collect();
    names.sort();
    let mut out = Vec::new();
    for p in names {
        let text = fs::read_to_string(&p)?;
        let s: Vec<Summary> = serde_json::from_str(&text)
            .map_err(|e| crate::Error::Config(format!("{}: {e}", p.display())))?;
        let stem = p.file_name().and_then(|n| n.to_str()).unwrap_or_default().trim_end_matches(".summary.json").to_string();
        out.push((stem, s));
    }
    Ok(out)
}

fn cell(s: &str) -> String {
    s.replace('|', "\\|")
}

pub fn markdown_report(groups: &[(String, Vec<Summary>)]) -> String {
    let mut md = String::from("# dynheat report\n\n");
    let total: usize = groups.iter().map(|g| g.1.len()).sum();
    let passed: usize = groups.iter().flat_map(|g| &g.1).filter(|s| s.pass).count();
    md.push_str(&format!("{passed} of {total} checks passed.\n"));
    for (command, rows) in groups {
        md.push_str(&format!("\n## {command}\n\n"));
        md.push_str("| experiment | claim | slope | r² | value | tolerance | flagged | result |\n");
        md.push_str("|---|---|---|---|---|---|---|---|\n");
        for s in rows {
            md.push_str(&format!(
                "| {} | {} | {} | {} | {} | {} | {} | {} |\n",
                cell(&s.experiment),
                cell(&s.theorem),
                opt(s.slope),
                opt(s.r2),
                opt(s.value),
                opt(s.tolerance),
                if s.flagged { "yes" } else { "" },
                if s.pass { "PASS" } else { "FAIL" }
            ));
        }
    }
    md
}
