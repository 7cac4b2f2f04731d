use std::io::{self, Write};

/// Formats a float with 17 significant digits and a '.' decimal separator.
pub fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}

/// Minimal CSV emitter: leading `#` metadata lines, one header line, rows.
pub struct CsvOut<W: Write> {
    inner: W,
}

impl<W: Write> CsvOut<W> {
    pub fn new(inner: W) -> Self {
        Self { inner }
    }

    pub fn meta(&mut self, key: &str, value: impl std::fmt::Display) -> io::Result<()> {
        writeln!(self.inner, "# {key}={value}")
    }

    pub fn header(&mut self, columns: &[&str]) -> io::Result<()> {
        writeln!(self.inner, "{}", columns.join(","))
    }

    pub fn row(&mut self, fields: &[String]) -> io::Result<()> {
        writeln!(self.inner, "{}", fields.join(","))
    }

    pub fn into_inner(self) -> W {
        self.inner
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip_precision() {
        for &x in &[0.1, 1.0 / 3.0, 2.5e-300, 0.0, 123456.789] {
            let s = fmt_f64(x);
            assert_eq!(s.parse::<f64>().unwrap(), x, "{s}");
            assert!(!s.contains(','));
        }
    }
}
