use std::fs;
use std::io::{self, BufWriter, Write};
use std::path::Path;

/// Reads a one-value-per-line sample file. Blank lines and lines starting
/// with `#` are skipped.
pub fn read_samples(path: &Path) -> io::Result<Vec<f64>> {
    let text = fs::read_to_string(path)?;
    let mut out = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let v: f64 = line.parse().map_err(|_| {
            io::Error::new(
                io::ErrorKind::InvalidData,
                format!("{}:{}: not a number: {line:?}", path.display(), lineno + 1),
            )
        })?;
        out.push(v);
    }
    Ok(out)
}

/// Writes samples one per line, with full round-trip precision.
pub fn write_samples(path: &Path, samples: &[f64]) -> io::Result<()> {
    let mut w = BufWriter::new(fs::File::create(path)?);
    for x in samples {
        writeln!(w, "{x:?}")?;
    }
    w.flush()
}
