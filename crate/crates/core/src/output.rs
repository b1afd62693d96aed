//! Semicolon-separated CSV with a fixed float format, so reruns are byte-identical.

use std::fs::File;
use std::path::Path;

use crate::error::{Error, Result};

/// 17 significant digits in scientific notation.
pub fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}

pub(crate) struct CsvOut {
    writer: csv::Writer<File>,
    path: std::path::PathBuf,
}

impl CsvOut {
    pub(crate) fn create(path: &Path, header: &[&str]) -> Result<Self> {
        let file = File::create(path).map_err(|e| Error::io(path, e))?;
        let mut out = CsvOut {
            writer: csv::WriterBuilder::new().delimiter(b';').from_writer(file),
            path: path.to_path_buf(),
        };
        out.row(header.iter().map(|s| s.to_string()))?;
        Ok(out)
    }

    pub(crate) fn row<I: IntoIterator<Item = String>>(&mut self, fields: I) -> Result<()> {
        let fields: Vec<String> = fields.into_iter().collect();
        self.writer.write_record(&fields).map_err(|e| self.err(e))
    }

    pub(crate) fn finish(mut self) -> Result<()> {
        self.writer
            .flush()
            .map_err(|e| Error::io(&self.path, e))
    }

    fn err(&self, e: csv::Error) -> Error {
        Error::io(&self.path, std::io::Error::other(e.to_string()))
    }
}
