//! CSV and JSON emitters. Numbers in CSV use C's `%.17g` layout so every
//! value round-trips exactly.

use serde::Serialize;
use std::fmt::Write as _;
use std::path::Path;

/// `printf("%.17g", x)`.
pub fn fmt_g(x: f64) -> String {
    if x.is_nan() {
        return "nan".into();
    }
    if x.is_infinite() {
        return if x > 0.0 { "inf".into() } else { "-inf".into() };
    }
    if x == 0.0 {
        return if x.is_sign_negative() { "-0".into() } else { "0".into() };
    }
    let sci = format!("{x:.16e}");
    let (mantissa, exp) = sci.split_once('e').expect("exponent present");
    let exp: i32 = exp.parse().expect("integer exponent");
    if !(-4..17).contains(&exp) {
        let mantissa = strip_zeros(mantissa);
        let sign = if exp < 0 { '-' } else { '+' };
        format!("{mantissa}e{sign}{:02}", exp.abs())
    } else {
        strip_zeros(&format!("{x:.*}", (16 - exp) as usize)).to_string()
    }
}

fn strip_zeros(s: &str) -> &str {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.')
    } else {
        s
    }
}

/// A CSV table with `#` metadata lines and a one-line header.
pub struct Csv {
    text: String,
    columns: usize,
}

impl Csv {
    pub fn new(command: &str, config_hash: &str, header: &[&str]) -> Self {
        let mut text = String::new();
        writeln!(text, "# command: {command}").unwrap();
        writeln!(text, "# burgers-cli {}", env!("CARGO_PKG_VERSION")).unwrap();
        writeln!(text, "# config_sha256: {config_hash}").unwrap();
        writeln!(text, "{}", header.join(",")).unwrap();
        Self {
            text,
            columns: header.len(),
        }
    }

    pub fn row(&mut self, cells: &[Cell]) {
        debug_assert_eq!(cells.len(), self.columns);
        let line: Vec<String> = cells.iter().map(Cell::render).collect();
        writeln!(self.text, "{}", line.join(",")).unwrap();
    }

    pub fn into_string(self) -> String {
        self.text
    }
}

pub enum Cell {
    Num(f64),
    Int(i64),
}

impl Cell {
    fn render(&self) -> String {
        match self {
            Cell::Num(x) => fmt_g(*x),
            Cell::Int(n) => n.to_string(),
        }
    }
}

impl From<f64> for Cell {
    fn from(x: f64) -> Self {
        Cell::Num(x)
    }
}

/// Writes `<command>.json` and `<command>.csv` into `dir` when set, and
/// prints either the JSON summary or (with `csv_stdout`) the table.
pub fn emit<T: Serialize>(
    command: &str,
    summary: &T,
    csv: Option<Csv>,
    dir: Option<&str>,
    csv_stdout: bool,
) -> std::io::Result<()> {
    let json = serde_json::to_string_pretty(summary).expect("summary serializes") + "\n";
    let csv = csv.map(Csv::into_string);
    if let Some(dir) = dir {
        let dir = Path::new(dir);
        std::fs::create_dir_all(dir)?;
        std::fs::write(dir.join(format!("{command}.json")), &json)?;
        if let Some(csv) = &csv {
            std::fs::write(dir.join(format!("{command}.csv")), csv)?;
        }
    }
    match (csv_stdout, csv) {
        (true, Some(csv)) => print!("{csv}"),
        _ => print!("{json}"),
    }
    Ok(())
}
