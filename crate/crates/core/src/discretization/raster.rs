//! Cell-value raster files: line 1 is `nx ny`, followed by `nx·ny` values in row-major
//! order with the bottom row first.

use std::path::Path;

use crate::error::{Error, Result};
use crate::linalg::io::fmt_f64;

#[derive(Clone, Debug, PartialEq)]
pub struct Raster {
    pub nx: usize,
    pub ny: usize,
    /// Cell `i + j·nx` holds column `i` of row `j` (counted from the bottom).
    pub values: Vec<f64>,
}

impl Raster {
    pub fn parse(text: &str) -> Result<Self> {
        let mut tokens = text.split_whitespace();
        let mut dim = |name: &str| -> Result<usize> {
            tokens
                .next()
                .ok_or_else(|| Error::parse("raster header", format!("missing {name}")))?
                .parse::<usize>()
                .map_err(|e| Error::parse("raster header", e.to_string()))
        };
        let (nx, ny) = (dim("nx")?, dim("ny")?);
        let values: Vec<f64> = tokens
            .map(|t| t.parse::<f64>())
            .collect::<Result<_, _>>()
            .map_err(|e| Error::parse("raster values", e.to_string()))?;
        if values.len() != nx * ny {
            return Err(Error::parse(
                "raster values",
                format!("expected {} values for {nx}x{ny}, got {}", nx * ny, values.len()),
            ));
        }
        Ok(Raster { nx, ny, values })
    }

    pub fn to_text(&self) -> String {
        let mut s = format!("{} {}\n", self.nx, self.ny);
        for row in self.values.chunks(self.nx) {
            let line: Vec<String> = row.iter().map(|&v| fmt_f64(v)).collect();
            s.push_str(&line.join(" "));
            s.push('\n');
        }
        s
    }

    pub fn read(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&text)
    }

    pub fn write(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        std::fs::write(path, self.to_text()).map_err(|e| Error::io(path, e))
    }
}
