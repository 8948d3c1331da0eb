//! Atomic CSV and JSON artifacts.

use std::io::Write;
use std::path::{Path, PathBuf};

use mfpmp_core::forward::Trajectory;
use mfpmp_core::optimizer::IterationRecord;
use mfpmp_core::ControlSignal;
use serde::Serialize;

use crate::error::CliError;

/// Output directory; every file is written to a temporary sibling and
/// renamed into place.
pub struct OutputDir {
    root: PathBuf,
}

impl OutputDir {
    pub fn create(root: &Path) -> Result<Self, CliError> {
        std::fs::create_dir_all(root).map_err(|source| CliError::Io {
            path: root.to_path_buf(),
            source,
        })?;
        Ok(Self {
            root: root.to_path_buf(),
        })
    }

    pub fn path(&self, name: &str) -> PathBuf {
        self.root.join(name)
    }

    pub fn write_bytes(&self, name: &str, bytes: &[u8]) -> Result<PathBuf, CliError> {
        let target = self.path(name);
        let io = |source| CliError::Io {
            path: target.clone(),
            source,
        };
        let mut tmp = tempfile::NamedTempFile::new_in(&self.root).map_err(io)?;
        tmp.write_all(bytes).map_err(io)?;
        tmp.as_file().sync_all().map_err(io)?;
        tmp.persist(&target).map_err(|e| io(e.error))?;
        Ok(target)
    }

    pub fn write_json<T: Serialize>(&self, name: &str, value: &T) -> Result<PathBuf, CliError> {
        let mut bytes =
            serde_json::to_vec_pretty(value).map_err(|e| CliError::Config(e.to_string()))?;
        bytes.push(b'\n');
        self.write_bytes(name, &bytes)
    }

    pub fn write_csv<R: Serialize>(
        &self,
        name: &str,
        rows: impl IntoIterator<Item = R>,
    ) -> Result<PathBuf, CliError> {
        let mut w = csv::Writer::from_writer(Vec::new());
        for row in rows {
            w.serialize(row).map_err(|e| self.csv_error(name, e))?;
        }
        let bytes = w
            .into_inner()
            .map_err(|e| self.csv_error(name, e.into_error().into()))?;
        self.write_bytes(name, &bytes)
    }

    fn csv_error(&self, name: &str, e: csv::Error) -> CliError {
        CliError::Io {
            path: self.path(name),
            source: std::io::Error::other(e),
        }
    }
}

#[derive(Serialize)]
pub struct ConvergenceRow {
    pub k: usize,
    pub cost: f64,
    pub non_extremality: f64,
    pub lambda: f64,
    pub backtrack_count: u32,
}

impl From<&IterationRecord> for ConvergenceRow {
    fn from(r: &IterationRecord) -> Self {
        Self {
            k: r.k,
            cost: r.cost,
            non_extremality: r.non_extremality,
            lambda: r.lambda,
            backtrack_count: r.backtrack_count,
        }
    }
}

#[derive(Serialize)]
pub struct SnapshotRow {
    pub t: f64,
    pub x: f64,
    pub value: f64,
}

/// Physical-space values of `traj` at the nodes nearest to `times`.
pub fn snapshot_rows(traj: &Trajectory, times: &[f64]) -> Result<Vec<SnapshotRow>, CliError> {
    let mut rows = Vec::new();
    for &t in times {
        let (at, field) = traj.nearest(t);
        let grid = field.to_physical()?;
        rows.extend(grid.points().zip(grid.values()).map(|(x, v)| SnapshotRow {
            t: at,
            x,
            value: *v,
        }));
    }
    Ok(rows)
}

/// `t, u1, …, um` at the left node of every step.
pub fn control_csv(u: &ControlSignal) -> Vec<u8> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let mut header = vec!["t".to_string()];
    header.extend((1..=u.dim()).map(|j| format!("u{j}")));
    w.write_record(&header).expect("in-memory write");
    for (k, v) in u.values().iter().enumerate() {
        let mut record = vec![u.grid().node(k).to_string()];
        record.extend(v.0.iter().map(|x| x.to_string()));
        w.write_record(&record).expect("in-memory write");
    }
    w.into_inner().expect("in-memory write")
}
