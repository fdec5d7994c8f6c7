//! Flat `key=value` run manifest.

use std::fmt::Write as _;
use std::path::Path;

#[derive(Default)]
pub struct Manifest {
    lines: Vec<(String, String)>,
}

impl Manifest {
    pub fn set(&mut self, key: &str, value: impl ToString) {
        // Values are single-line by construction.
        let v = value.to_string().replace('\n', " ");
        self.lines.push((key.to_string(), v));
    }

    pub fn render(&self) -> String {
        let mut s = String::new();
        for (k, v) in &self.lines {
            let _ = writeln!(s, "{k}={v}");
        }
        s
    }

    pub fn write(&self, path: &Path) -> std::io::Result<()> {
        std::fs::write(path, self.render())
    }
}
