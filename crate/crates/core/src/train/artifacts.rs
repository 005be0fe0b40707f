use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{EpochRecord, EvalReport, TrainError};
use crate::ledger::CostLedger;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalSummary {
    pub train: EvalReport,
    pub val: Option<EvalReport>,
    pub test: Option<EvalReport>,
}

/// Contents of `metrics.json`. Fields ending in `_secs` are timings and the
/// only ones allowed to differ between identical runs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunMetrics {
    pub trainer: String,
    pub precision: String,
    pub seed: u64,
    pub epochs_per_layer: Vec<usize>,
    pub eval: EvalSummary,
    pub ledger: CostLedger,
    pub train_time_secs: f64,
}

#[derive(Serialize, Deserialize)]
struct CurveRow {
    epoch: usize,
    layer: Option<usize>,
    train_loss: f64,
    val_f1: Option<f64>,
}

fn csv_err(path: &Path, e: csv::Error) -> TrainError {
    TrainError::Artifact {
        path: path.to_path_buf(),
        msg: e.to_string(),
    }
}

/// Writes `loss_curve.csv` with columns `epoch,layer,train_loss,val_f1`;
/// absent values are empty fields.
pub fn write_loss_curve(path: &Path, history: &[EpochRecord]) -> Result<(), TrainError> {
    let mut w = csv::Writer::from_path(path).map_err(|e| csv_err(path, e))?;
    for r in history {
        w.serialize(CurveRow {
            epoch: r.epoch,
            layer: r.layer,
            train_loss: r.train_loss,
            val_f1: r.val_f1,
        })
        .map_err(|e| csv_err(path, e))?;
    }
    w.flush().map_err(|source| TrainError::Io {
        path: path.to_path_buf(),
        source,
    })
}

pub fn read_loss_curve(path: &Path) -> Result<Vec<EpochRecord>, TrainError> {
    let mut r = csv::Reader::from_path(path).map_err(|e| csv_err(path, e))?;
    r.deserialize::<CurveRow>()
        .map(|row| {
            let row = row.map_err(|e| csv_err(path, e))?;
            Ok(EpochRecord {
                layer: row.layer,
                epoch: row.epoch,
                train_loss: row.train_loss,
                val_f1: row.val_f1,
            })
        })
        .collect()
}
