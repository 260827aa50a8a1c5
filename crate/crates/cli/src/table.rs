use std::fmt::Write as _;
use std::io::{self, Write};
use std::path::Path;

use halfline::estimates::PowerLawFit;
use halfline::Warning;

/// A CSV table with `#` metadata lines before the header and after the body.
#[derive(Debug, Default)]
pub struct Table {
    meta: Vec<String>,
    header: Vec<String>,
    rows: Vec<Vec<String>>,
    footer: Vec<String>,
    pub warnings: Vec<Warning>,
}

pub fn num(v: f64) -> String {
    format!("{v:.14e}")
}

impl Table {
    pub fn new(command: &str) -> Self {
        let mut t = Table::default();
        t.meta(format!("halfline {}", env!("CARGO_PKG_VERSION")));
        t.meta(format!("command = {command}"));
        t
    }

    pub fn meta(&mut self, line: impl Into<String>) {
        self.meta.push(line.into());
    }

    pub fn param(&mut self, name: &str, value: impl std::fmt::Display) {
        self.meta(format!("{name} = {value}"));
    }

    pub fn columns(&mut self, names: &[&str]) {
        self.header = names.iter().map(|s| s.to_string()).collect();
    }

    pub fn row(&mut self, values: &[f64]) {
        self.rows.push(values.iter().map(|&v| num(v)).collect());
    }

    pub fn footer(&mut self, line: impl Into<String>) {
        self.footer.push(line.into());
    }

    pub fn fit(&mut self, label: &str, fit: &PowerLawFit) {
        self.footer(format!("fit {label}"));
        self.footer(format!("exponent = {}", num(fit.exponent)));
        self.footer(format!("prefactor = {}", num(fit.prefactor)));
        self.footer(format!("r_squared = {}", num(fit.r_squared)));
        self.footer(format!("n_points = {}", fit.n_points));
    }

    pub fn warn(&mut self, warnings: impl IntoIterator<Item = Warning>) {
        self.warnings.extend(warnings);
    }

    pub fn render(&self) -> String {
        let mut s = String::new();
        for m in &self.meta {
            let _ = writeln!(s, "# {m}");
        }
        if !self.header.is_empty() {
            let _ = writeln!(s, "{}", self.header.join(","));
        }
        for r in &self.rows {
            let _ = writeln!(s, "{}", r.join(","));
        }
        for f in &self.footer {
            let _ = writeln!(s, "# {f}");
        }
        for w in &self.warnings {
            let _ = writeln!(s, "# warning: {w}");
        }
        s
    }

    pub fn write(&self, out: Option<&Path>) -> io::Result<()> {
        let text = self.render();
        match out {
            Some(path) => std::fs::write(path, text),
            None => io::stdout().lock().write_all(text.as_bytes()),
        }
    }
}
