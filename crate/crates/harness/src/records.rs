//! Run records and their two on-disk forms: a flat CSV for tooling and a
//! JSON sidecar that also keeps the traces.

use std::fs::File;
use std::io::{BufReader, BufWriter, Write};
use std::path::Path;

use boundwalk::{AttackResult, NormKind, TracePoint};
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::spec::AttackKind;
use crate::{io_err, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub sample_id: usize,
    pub rep: usize,
    pub attack: AttackKind,
    pub norm: NormKind,
    pub hyperparameter: f64,
    pub success: bool,
    /// Infinite when no adversarial was found.
    #[serde(serialize_with = "finite_or_null", deserialize_with = "null_is_infinite")]
    pub distance: f64,
    pub queries: usize,
    #[serde(default)]
    pub start_queries: usize,
    #[serde(default)]
    pub trace: Vec<TracePoint>,
}

fn finite_or_null<S: Serializer>(v: &f64, s: S) -> std::result::Result<S::Ok, S::Error> {
    if v.is_finite() {
        s.serialize_some(v)
    } else {
        s.serialize_none()
    }
}

fn null_is_infinite<'de, D: Deserializer<'de>>(d: D) -> std::result::Result<f64, D::Error> {
    Ok(Option::<f64>::deserialize(d)?.unwrap_or(f64::INFINITY))
}

impl RunRecord {
    pub fn from_result(
        sample_id: usize,
        rep: usize,
        attack: AttackKind,
        hyperparameter: f64,
        result: &AttackResult,
    ) -> Self {
        Self {
            sample_id,
            rep,
            attack,
            norm: attack.norm(),
            hyperparameter,
            success: result.success,
            distance: result.distance,
            queries: result.queries_used,
            start_queries: result.start_queries,
            trace: result.trace.clone(),
        }
    }

    pub fn failed(sample_id: usize, rep: usize, attack: AttackKind, hyperparameter: f64, queries: usize) -> Self {
        Self {
            sample_id,
            rep,
            attack,
            norm: attack.norm(),
            hyperparameter,
            success: false,
            distance: f64::INFINITY,
            queries,
            start_queries: 0,
            trace: Vec::new(),
        }
    }
}

#[derive(Serialize, Deserialize)]
struct CsvRow {
    sample_id: usize,
    rep: usize,
    attack: AttackKind,
    norm: NormKind,
    hyperparameter: f64,
    success: bool,
    distance: f64,
    queries: usize,
}

pub fn write_csv(path: impl AsRef<Path>, records: &[RunRecord]) -> Result<()> {
    let path = path.as_ref();
    let file = File::create(path).map_err(io_err(path))?;
    let mut w = csv::Writer::from_writer(BufWriter::new(file));
    for r in records {
        w.serialize(CsvRow {
            sample_id: r.sample_id,
            rep: r.rep,
            attack: r.attack,
            norm: r.norm,
            hyperparameter: r.hyperparameter,
            success: r.success,
            distance: r.distance,
            queries: r.queries,
        })?;
    }
    w.flush().map_err(io_err(path))?;
    Ok(())
}

/// Reads the CSV form. Traces and start queries are not part of it.
pub fn read_csv(path: impl AsRef<Path>) -> Result<Vec<RunRecord>> {
    let path = path.as_ref();
    let file = File::open(path).map_err(io_err(path))?;
    let mut rdr = csv::Reader::from_reader(BufReader::new(file));
    let mut out = Vec::new();
    for row in rdr.deserialize() {
        let row: CsvRow = row?;
        out.push(RunRecord {
            sample_id: row.sample_id,
            rep: row.rep,
            attack: row.attack,
            norm: row.norm,
            hyperparameter: row.hyperparameter,
            success: row.success,
            distance: row.distance,
            queries: row.queries,
            start_queries: 0,
            trace: Vec::new(),
        });
    }
    Ok(out)
}

pub fn write_sidecar(path: impl AsRef<Path>, records: &[RunRecord]) -> Result<()> {
    let path = path.as_ref();
    let file = File::create(path).map_err(io_err(path))?;
    let mut w = BufWriter::new(file);
    serde_json::to_writer(&mut w, records)?;
    w.flush().map_err(io_err(path))?;
    Ok(())
}

pub fn read_sidecar(path: impl AsRef<Path>) -> Result<Vec<RunRecord>> {
    let path = path.as_ref();
    let file = File::open(path).map_err(io_err(path))?;
    Ok(serde_json::from_reader(BufReader::new(file))?)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> Vec<RunRecord> {
        vec![
            RunRecord {
                sample_id: 3,
                rep: 1,
                attack: AttackKind::OursL2,
                norm: NormKind::L2,
                hyperparameter: 0.1,
                success: true,
                distance: 0.123456789012345,
                queries: 42,
                start_queries: 5,
                trace: vec![
                    TracePoint { queries: 10, best_distance: 0.5 },
                    TracePoint { queries: 42, best_distance: 0.123456789012345 },
                ],
            },
            RunRecord::failed(4, 0, AttackKind::Pgd, 1e-3, 1001),
        ]
    }

    #[test]
    fn sidecar_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("r.json");
        write_sidecar(&path, &sample()).unwrap();
        assert_eq!(read_sidecar(&path).unwrap(), sample());
    }

    #[test]
    fn csv_round_trip_keeps_flat_fields() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("r.csv");
        write_csv(&path, &sample()).unwrap();
        let back = read_csv(&path).unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        assert!(text.starts_with("sample_id,rep,attack,norm,hyperparameter,success,distance,queries\n"));
        assert!(text.contains("ours-l2,l2,"));
        for (a, b) in back.iter().zip(sample()) {
            assert_eq!(a.distance, b.distance);
            assert_eq!((a.sample_id, a.rep, a.attack, a.norm, a.success, a.queries), (b.sample_id, b.rep, b.attack, b.norm, b.success, b.queries));
            assert_eq!(a.hyperparameter, b.hyperparameter);
        }
    }
}
