//! Output assembly. Everything is rendered into a buffer first and written
//! in one shot: to stdout, or to a temp file renamed onto the target so a
//! failed run never leaves a partial file behind.

use std::fmt::Write as _;
use std::path::Path;

/// CSV buffer with shortest-round-trip doubles (the default `{}` formatting
/// for `f64` round-trips exactly).
pub struct Csv {
    buf: String,
}

impl Csv {
    pub fn new(header: &str) -> Self {
        Csv {
            buf: format!("{header}\n"),
        }
    }

    pub fn row(&mut self, fields: &[f64]) {
        for (i, f) in fields.iter().enumerate() {
            if i > 0 {
                self.buf.push(',');
            }
            let _ = write!(self.buf, "{f}");
        }
        self.buf.push('\n');
    }

    /// Footer/comment line, prefixed with `# `.
    pub fn note(&mut self, line: &str) {
        let _ = writeln!(self.buf, "# {line}");
    }

    pub fn raw_line(&mut self, line: &str) {
        let _ = writeln!(self.buf, "{line}");
    }

    pub fn finish(self) -> String {
        self.buf
    }
}

pub fn write_out(out: Option<&Path>, content: &str) -> std::io::Result<()> {
    match out {
        None => {
            print!("{content}");
            Ok(())
        }
        Some(path) => {
            let tmp = path.with_extension("tmp");
            std::fs::write(&tmp, content)?;
            std::fs::rename(&tmp, path)
        }
    }
}
