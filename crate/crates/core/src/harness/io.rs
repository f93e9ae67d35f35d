//! Versioned CSV tables, JSON documents and binary checkpoints.
//!
//! Every CSV file starts with a `# schema: <id>` line followed by a header
//! row. Checkpoints store the spectral coefficients of all members as raw
//! little-endian `f64` pairs `(re, im)`, member-major, then component, then
//! flat mode index (last axis fastest); a JSON sidecar describes the layout.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Read, Write};
use std::path::{Path, PathBuf};
use std::sync::Arc;

use num_complex::Complex64;
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::diagnostics::{EnergyBudget, MemberSample, ProofLedger, Sample};
use crate::error::{Error, Result};
use crate::spectral::{Grid, GridSpec, SpectralField};

pub const SAMPLES_SCHEMA: &str = "eev-samples-v1";
pub const BUDGET_SCHEMA: &str = "eev-budget-v1";
pub const LEDGER_SCHEMA: &str = "eev-ledger-v1";
pub const SWEEP_SCHEMA: &str = "eev-sweep-v1";
pub const SUMMARY_SCHEMA: &str = "eev-summary-v1";
pub const CHECKPOINT_SCHEMA: &str = "eev-checkpoint-v1";

fn schema_line(schema: &str) -> String {
    format!("# schema: {schema}")
}

pub fn write_csv<T: Serialize>(path: &Path, schema: &str, rows: &[T]) -> Result<()> {
    let mut out = BufWriter::new(File::create(path)?);
    writeln!(out, "{}", schema_line(schema))?;
    let mut w = csv::Writer::from_writer(out);
    for r in rows {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

/// Reads a schema-tagged CSV file, rejecting any other schema id.
pub fn read_csv<T: DeserializeOwned>(path: &Path, schema: &str) -> Result<Vec<T>> {
    let mut reader = BufReader::new(File::open(path)?);
    let mut first = String::new();
    reader.read_line(&mut first)?;
    let found = first.trim_end();
    if found != schema_line(schema) {
        return Err(Error::Schema { expected: schema.to_string(), found: found.to_string() });
    }
    let mut r = csv::Reader::from_reader(reader);
    let rows = r.deserialize().collect::<std::result::Result<Vec<T>, _>>()?;
    Ok(rows)
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut out = BufWriter::new(File::create(path)?);
    serde_json::to_writer_pretty(&mut out, value)?;
    writeln!(out)?;
    out.flush()?;
    Ok(())
}

pub fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T> {
    Ok(serde_json::from_reader(BufReader::new(File::open(path)?))?)
}

/// One row of `samples.csv`: a member at one instant, with the ensemble-level
/// quantities repeated on every member row.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SampleRow {
    pub t: f64,
    pub member: usize,
    pub ke: f64,
    pub power: f64,
    pub eps_viscous: f64,
    pub eps_turb: f64,
    pub advect_force: f64,
    pub viscous_force: f64,
    pub eddy_force: f64,
    pub eddy_force_abs: f64,
    pub nu_turb_mean: f64,
    pub fluct_ms: f64,
    pub eps_turb_mean_part: f64,
    pub eps_turb_fluct_part: f64,
}

pub fn sample_rows(samples: &[Sample]) -> Vec<SampleRow> {
    samples
        .iter()
        .flat_map(|s| {
            s.members.iter().enumerate().map(move |(member, m)| SampleRow {
                t: s.t,
                member,
                ke: m.ke,
                power: m.power,
                eps_viscous: m.eps_viscous,
                eps_turb: m.eps_turb,
                advect_force: m.advect_force,
                viscous_force: m.viscous_force,
                eddy_force: m.eddy_force,
                eddy_force_abs: m.eddy_force_abs,
                nu_turb_mean: s.nu_turb_mean,
                fluct_ms: s.fluct_ms,
                eps_turb_mean_part: s.eps_turb_mean_part,
                eps_turb_fluct_part: s.eps_turb_fluct_part,
            })
        })
        .collect()
}

/// Inverse of [`sample_rows`]; rows of one instant must be contiguous and
/// list members `0..J` in order.
pub fn samples_from_rows(rows: &[SampleRow]) -> Result<Vec<Sample>> {
    let mut out: Vec<Sample> = Vec::new();
    for r in rows {
        let m = MemberSample {
            ke: r.ke,
            power: r.power,
            eps_viscous: r.eps_viscous,
            eps_turb: r.eps_turb,
            advect_force: r.advect_force,
            viscous_force: r.viscous_force,
            eddy_force: r.eddy_force,
            eddy_force_abs: r.eddy_force_abs,
        };
        match out.last_mut() {
            Some(s) if s.t == r.t && r.member == s.members.len() => s.members.push(m),
            _ if r.member == 0 => out.push(Sample {
                t: r.t,
                members: vec![m],
                nu_turb_mean: r.nu_turb_mean,
                fluct_ms: r.fluct_ms,
                eps_turb_mean_part: r.eps_turb_mean_part,
                eps_turb_fluct_part: r.eps_turb_fluct_part,
            }),
            _ => return Err(Error::config(format!("samples table out of order at t = {}, member {}", r.t, r.member))),
        }
    }
    if let Some(j) = out.first().map(|s| s.members.len()) {
        if out.iter().any(|s| s.members.len() != j) {
            return Err(Error::config("samples table has instants with differing ensemble sizes"));
        }
    }
    Ok(out)
}

/// One row of `budget.csv`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BudgetRow {
    pub t: f64,
    pub ke_ens: f64,
    pub eps_viscous: f64,
    pub eps_turb: f64,
    pub eps_turb_mean_part: f64,
    pub eps_turb_fluct_part: f64,
    #[serde(rename = "avg_eps_T")]
    pub avg_eps_t: f64,
}

impl From<&EnergyBudget> for BudgetRow {
    fn from(b: &EnergyBudget) -> Self {
        Self {
            t: b.t,
            ke_ens: b.ke_mean_of_members,
            eps_viscous: b.eps_viscous,
            eps_turb: b.eps_turb,
            eps_turb_mean_part: b.eps_turb_mean_part,
            eps_turb_fluct_part: b.eps_turb_fluct_part,
            avg_eps_t: b.avg_eps,
        }
    }
}

/// Writes `ledger.csv`: every ledger field, then `slack_<name>` and
/// `rel_slack_<name>` for each exact inequality.
pub fn write_ledger_csv(path: &Path, ledgers: &[ProofLedger]) -> Result<()> {
    let mut out = BufWriter::new(File::create(path)?);
    writeln!(out, "{}", schema_line(LEDGER_SCHEMA))?;
    let mut w = csv::Writer::from_writer(out);
    for (i, lg) in ledgers.iter().enumerate() {
        let serde_json::Value::Object(map) = serde_json::to_value(lg)? else {
            unreachable!("a ledger serializes to an object");
        };
        let mut names: Vec<String> = map.keys().cloned().collect();
        let mut values: Vec<String> = map.values().map(json_cell).collect();
        for (name, lhs, rhs) in lg.inequalities() {
            let slack = rhs - lhs;
            names.push(format!("slack_{name}"));
            values.push(slack.to_string());
            names.push(format!("rel_slack_{name}"));
            values.push(if rhs.abs() > 0.0 { slack / rhs.abs() } else { slack }.to_string());
        }
        if i == 0 {
            w.write_record(&names)?;
        }
        w.write_record(&values)?;
    }
    w.flush()?;
    Ok(())
}

fn json_cell(v: &serde_json::Value) -> String {
    match v {
        serde_json::Value::String(s) => s.clone(),
        other => other.to_string(),
    }
}

/// JSON sidecar of a checkpoint.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckpointHeader {
    pub schema: String,
    pub t: f64,
    pub step: u64,
    pub grid: GridSpec,
    pub ensemble_size: usize,
    pub layout: String,
    pub data_file: String,
}

/// Writes `<stem>.bin` and `<stem>.json`; returns both paths.
pub fn write_checkpoint(
    dir: &Path,
    stem: &str,
    t: f64,
    step: u64,
    members: &[SpectralField],
) -> Result<(PathBuf, PathBuf)> {
    let first = members.first().ok_or_else(|| Error::config("checkpoint needs at least one member"))?;
    let data_file = format!("{stem}.bin");
    let bin = dir.join(&data_file);
    let mut out = BufWriter::new(File::create(&bin)?);
    for m in members {
        for c in m.components() {
            for v in c {
                out.write_all(&v.re.to_le_bytes())?;
                out.write_all(&v.im.to_le_bytes())?;
            }
        }
    }
    out.flush()?;
    let header = CheckpointHeader {
        schema: CHECKPOINT_SCHEMA.to_string(),
        t,
        step,
        grid: *first.grid().spec(),
        ensemble_size: members.len(),
        layout: "f64 little-endian (re, im); member, component, flat mode index (last axis fastest)".into(),
        data_file,
    };
    let json = dir.join(format!("{stem}.json"));
    write_json(&json, &header)?;
    Ok((bin, json))
}

/// Loads a checkpoint from its JSON sidecar.
pub fn read_checkpoint(sidecar: &Path) -> Result<(CheckpointHeader, Vec<SpectralField>)> {
    let header: CheckpointHeader = read_json(sidecar)?;
    if header.schema != CHECKPOINT_SCHEMA {
        return Err(Error::Schema { expected: CHECKPOINT_SCHEMA.into(), found: header.schema });
    }
    let grid: Arc<Grid> = Grid::new(header.grid)?;
    let dir = sidecar.parent().unwrap_or_else(|| Path::new("."));
    let mut bytes = Vec::new();
    File::open(dir.join(&header.data_file))?.read_to_end(&mut bytes)?;
    let per_comp = grid.points();
    let expected = header.ensemble_size * grid.dim() * per_comp * 16;
    if bytes.len() != expected {
        return Err(Error::config(format!("checkpoint holds {} bytes, expected {expected}", bytes.len())));
    }
    let f = |o: usize| f64::from_le_bytes(bytes[o..o + 8].try_into().expect("8 bytes"));
    let mut members = Vec::with_capacity(header.ensemble_size);
    let mut off = 0;
    for _ in 0..header.ensemble_size {
        let mut comps = Vec::with_capacity(grid.dim());
        for _ in 0..grid.dim() {
            let mut c = Vec::with_capacity(per_comp);
            for _ in 0..per_comp {
                c.push(Complex64::new(f(off), f(off + 8)));
                off += 16;
            }
            comps.push(c);
        }
        members.push(SpectralField::from_components(&grid, comps)?);
    }
    Ok((header, members))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectral::fixtures::random_field;
    use crate::spectral::{dealias, GridSpec};

    #[derive(Debug, PartialEq, Serialize, Deserialize)]
    struct Row {
        t: f64,
        value: f64,
        flag: bool,
    }

    #[test]
    fn csv_round_trip_is_exact() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("x.csv");
        let rows: Vec<Row> = (0..5)
            .map(|k| Row { t: 0.1 * k as f64, value: (k as f64).sqrt() / 3.0 + 1e-300, flag: k % 2 == 0 })
            .collect();
        write_csv(&path, BUDGET_SCHEMA, &rows).unwrap();
        let back: Vec<Row> = read_csv(&path, BUDGET_SCHEMA).unwrap();
        assert_eq!(back, rows);
        assert!(matches!(read_csv::<Row>(&path, LEDGER_SCHEMA), Err(Error::Schema { .. })));
    }

    #[test]
    fn samples_table_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("samples.csv");
        let m = |k: f64| MemberSample {
            ke: k,
            power: 0.1 * k,
            eps_viscous: 1.0 / 3.0,
            eps_turb: k * k,
            advect_force: -k,
            viscous_force: 2.0,
            eddy_force: 1e-17,
            eddy_force_abs: 7.0,
        };
        let samples: Vec<Sample> = (0..4)
            .map(|i| Sample {
                t: 0.25 * i as f64,
                members: vec![m(i as f64), m(0.5 + i as f64), m(std::f64::consts::PI)],
                nu_turb_mean: 0.3,
                fluct_ms: 0.1 * i as f64,
                eps_turb_mean_part: 0.2,
                eps_turb_fluct_part: 0.4,
            })
            .collect();
        write_csv(&path, SAMPLES_SCHEMA, &sample_rows(&samples)).unwrap();
        let rows: Vec<SampleRow> = read_csv(&path, SAMPLES_SCHEMA).unwrap();
        assert_eq!(samples_from_rows(&rows).unwrap(), samples);
    }

    #[test]
    fn ledger_table_has_slack_columns() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("ledger.csv");
        let lg = ProofLedger { window: "full".into(), span: 2.0, power: 1.0, power_bound: 3.0, ..Default::default() };
        write_ledger_csv(&path, &[lg.clone(), lg]).unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        let mut lines = text.lines();
        assert_eq!(lines.next().unwrap(), "# schema: eev-ledger-v1");
        let header: Vec<&str> = lines.next().unwrap().split(',').collect();
        assert!(header.contains(&"T") && header.contains(&"verdict"));
        let k = header.iter().position(|h| *h == "slack_power_cs").unwrap();
        let row: Vec<&str> = lines.next().unwrap().split(',').collect();
        assert_eq!(row[k], "2");
        assert_eq!(lines.count(), 1);
    }

    #[test]
    fn checkpoint_round_trip_is_bitwise() {
        let dir = tempfile::tempdir().unwrap();
        let g = Grid::new(GridSpec::new(3, 8, 1.0)).unwrap();
        let members: Vec<_> = (0..2).map(|s| dealias(&random_field(&g, s, 2, true))).collect();
        let (_, json) = write_checkpoint(dir.path(), "state", 1.25, 7, &members).unwrap();
        let (h, back) = read_checkpoint(&json).unwrap();
        assert_eq!((h.t, h.step, h.ensemble_size), (1.25, 7, 2));
        for (a, b) in members.iter().zip(&back) {
            assert_eq!(a.components(), b.components());
            assert!(b.is_divergence_free());
        }
    }
}
