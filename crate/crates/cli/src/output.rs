use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::Path;

use ccmv_core::Result;

/// Buffered writer on `path`, or stdout.
pub fn sink(path: Option<&Path>) -> Result<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(File::create(p)?)),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    })
}
