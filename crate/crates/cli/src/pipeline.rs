use std::fs;
use std::io::Write;
use std::path::Path;

use oddsmith::dataset::{encode, impute, load_csv, load_csv_all, prune_columns, Dataset};

use crate::config::DataOptions;
use crate::error::{CliError, Result};

/// Rows and columns of the raw CSV, before any cleaning.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct InputShape {
    pub rows: usize,
    pub columns: usize,
}

pub fn input_shape(path: &Path) -> Result<InputShape> {
    let mut rdr = csv::ReaderBuilder::new()
        .flexible(true)
        .from_path(path)
        .map_err(|e| CliError::input(format!("{}: {e}", path.display())))?;
    let columns = rdr
        .headers()
        .map_err(|e| CliError::input(format!("{}: {e}", path.display())))?
        .len();
    let rows = rdr.records().count();
    Ok(InputShape { rows, columns })
}

/// Load, prune, impute and encode; every modelling command goes through here.
pub fn load_encoded(opts: &DataOptions) -> Result<Dataset> {
    let path = &opts.data;
    if !path.exists() {
        return Err(CliError::input(format!("data file {} not found", path.display())));
    }
    let records = match &opts.stats {
        Some(stats) => load_csv(path, stats),
        None => load_csv_all(path),
    }
    .map_err(|e| CliError::input(format!("{}: {e}", path.display())))?;
    let records = impute(prune_columns(records), opts.impute)?;
    let dataset = encode(&records)?;
    log::info!("loaded {}: {dataset}", path.display());
    Ok(dataset)
}

/// [`load_encoded`] minus the excluded features.
pub fn load_dataset(opts: &DataOptions) -> Result<Dataset> {
    Ok(load_encoded(opts)?.without_features(&opts.exclude_features))
}

/// Writes via a sibling temporary file and a rename, so readers never see a
/// half-written file.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir)?;
    }
    let name = path
        .file_name()
        .ok_or_else(|| CliError::input(format!("{} is not a file path", path.display())))?;
    let tmp = path.with_file_name(format!(".{}.tmp", name.to_string_lossy()));
    {
        let mut f = fs::File::create(&tmp)?;
        f.write_all(bytes)?;
        f.sync_all()?;
    }
    fs::rename(&tmp, path)?;
    Ok(())
}

pub fn to_pretty_json<T: serde::Serialize>(value: &T) -> Vec<u8> {
    let mut out = serde_json::to_vec_pretty(value).expect("report types serialize");
    out.push(b'\n');
    out
}
