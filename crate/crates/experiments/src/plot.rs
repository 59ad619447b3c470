//! Plain-text tables for external plotting tools.

use std::path::{Path, PathBuf};

use chronobasis::discretization::TimeGrid;

use crate::error::Result;
use crate::study::QuantileStudy;

/// Writes `text` to `path`, creating parent directories.
pub fn emit_plot_data(path: impl AsRef<Path>, text: &str) -> Result<()> {
    let path = path.as_ref();
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).map_err(|e| chronobasis::Error::io(dir, e))?;
    }
    std::fs::write(path, text).map_err(|e| chronobasis::Error::io(path, e))?;
    Ok(())
}

/// Quantile row, per-realization table and mean error curve of a study, written to
/// `<dir>/<label>.{quantiles,realizations,curve}.dat`. Returns the written paths.
pub fn emit_study(study: &QuantileStudy, grid: &TimeGrid, dir: impl AsRef<Path>) -> Result<Vec<PathBuf>> {
    let dir = dir.as_ref();
    let files = [
        ("quantiles", study.quantile_table()),
        ("realizations", study.realization_table()),
        ("curve", study.curve_table(grid)),
    ];
    files
        .into_iter()
        .map(|(kind, text)| {
            let path = dir.join(format!("{}.{kind}.dat", study.label));
            emit_plot_data(&path, &text)?;
            Ok(path)
        })
        .collect()
}
