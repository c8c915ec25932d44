//! Directory-level loading of SigMF recordings and the receiver layout.

use std::collections::HashMap;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ingest::geo::GeoFix;
use crate::ingest::iq::{sample_count, Datatype};
use crate::ingest::sigmf::{FieldMap, FrameRecord, RecordIssue, RejectedAnnotation, SigmfMeta};
use crate::types::ReceiverId;

pub const META_EXT: &str = "sigmf-meta";
pub const DATA_EXT: &str = "sigmf-data";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReceiverEntry {
    pub id: ReceiverId,
    pub lat: f64,
    pub lon: f64,
    pub alt: f64,
}

/// Receiver positions plus the annotation field mapping.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct DatasetConfig {
    #[serde(default)]
    pub receivers: Vec<ReceiverEntry>,
    #[serde(default)]
    pub field_map: FieldMap,
}

impl DatasetConfig {
    pub fn positions(&self) -> Result<HashMap<ReceiverId, GeoFix>> {
        self.receivers
            .iter()
            .map(|r| Ok((r.id.clone(), GeoFix::new(r.lat, r.lon, r.alt)?)))
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FileIssue {
    pub file: PathBuf,
    pub rejected: RejectedAnnotation,
}

#[derive(Debug, Clone, Default)]
pub struct Dataset {
    pub records: Vec<FrameRecord>,
    pub rejected: Vec<FileIssue>,
    pub files: Vec<PathBuf>,
}

/// Lists `.sigmf-meta` files: `path` itself if it is one, else the
/// directory's entries in name order.
pub fn meta_files(path: &Path) -> Result<Vec<PathBuf>> {
    if path.is_file() {
        return Ok(vec![path.to_path_buf()]);
    }
    let mut files = Vec::new();
    for entry in fs::read_dir(path)? {
        let p = entry?.path();
        if p.extension().is_some_and(|e| e == META_EXT) {
            files.push(p);
        }
    }
    files.sort();
    Ok(files)
}

/// Reads every recording under `path`.
///
/// When the paired `.sigmf-data` file exists, frames whose start lies past
/// its end are rejected.
pub fn load_dataset(path: &Path, field_map: &FieldMap) -> Result<Dataset> {
    let mut ds = Dataset::default();
    for file in meta_files(path)? {
        let bytes = fs::read(&file)?;
        let meta = SigmfMeta::from_slice(&bytes).map_err(|e| match e {
            Error::Parse { offset, message } => Error::Parse {
                offset,
                message: format!("{}: {message}", file.display()),
            },
            other => other,
        })?;
        let parsed = meta.frames(field_map);
        let data_len = data_file_len(&file, &meta)?;
        for rejected in parsed.rejected {
            ds.rejected.push(FileIssue {
                file: file.clone(),
                rejected,
            });
        }
        for (rec, index) in parsed.records.into_iter().zip(parsed.sources) {
            if let Some(n) = data_len {
                if rec.frame_start >= n as u64 {
                    ds.rejected.push(FileIssue {
                        file: file.clone(),
                        rejected: RejectedAnnotation {
                            index,
                            issue: RecordIssue::Invariant(format!(
                                "frame_start {} beyond {} samples in data file",
                                rec.frame_start, n
                            )),
                        },
                    });
                    continue;
                }
            }
            ds.records.push(rec);
        }
        ds.files.push(file);
    }
    Ok(ds)
}

fn data_file_len(meta_path: &Path, meta: &SigmfMeta) -> Result<Option<usize>> {
    let data_path = meta_path.with_extension(DATA_EXT);
    let Ok(md) = fs::metadata(&data_path) else {
        return Ok(None);
    };
    let dt: Datatype = meta.datatype().unwrap_or("cf32_le").parse()?;
    Ok(Some(sample_count(md.len() as usize, dt)))
}
