//! The on-disk model format shared by every fitted model kind.

use std::path::Path;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::elasticnet::EnetModel;
use crate::error::{Error, Result};
use crate::gam::GamModel;
use crate::gbt::TreeEnsemble;
use crate::ingest::write_atomic;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "model", rename_all = "lowercase")]
pub enum SavedModel {
    Enet(EnetModel),
    Gbt(TreeEnsemble),
    Gam(GamModel),
}

impl SavedModel {
    pub fn kind(&self) -> &'static str {
        match self {
            SavedModel::Enet(_) => "enet",
            SavedModel::Gbt(_) => "gbt",
            SavedModel::Gam(_) => "gam",
        }
    }

    pub fn predict(&self, x: &[f64]) -> Result<f64> {
        match self {
            SavedModel::Enet(m) => m.predict(x),
            SavedModel::Gbt(m) => m.predict(x),
            SavedModel::Gam(m) => m.predict(x),
        }
    }

    pub fn predict_matrix(&self, x: &DMatrix<f64>) -> Result<Vec<f64>> {
        match self {
            SavedModel::Enet(m) => Ok(m.predict_matrix(x)?.iter().copied().collect()),
            SavedModel::Gbt(m) => m.predict_matrix(x),
            SavedModel::Gam(m) => (0..x.nrows())
                .map(|i| m.predict(&x.row(i).iter().copied().collect::<Vec<_>>()))
                .collect(),
        }
    }

    pub fn write(&self, path: impl AsRef<Path>) -> Result<()> {
        let mut bytes = serde_json::to_vec_pretty(self)?;
        bytes.push(b'\n');
        write_atomic(path.as_ref(), &bytes)
    }

    pub fn read(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let model: SavedModel = serde_json::from_str(&text)?;
        if let SavedModel::Gbt(m) = &model {
            m.validate()?;
        }
        Ok(model)
    }
}
