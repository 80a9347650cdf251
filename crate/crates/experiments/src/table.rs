use std::fmt::Display;
use std::io::{self, Write};

/// One CSV field.
#[derive(Clone, Debug, PartialEq)]
pub enum Cell {
    Label(String),
    Int(i64),
    Real(f64),
}

impl Cell {
    pub fn as_real(&self) -> Option<f64> {
        match self {
            Cell::Real(x) => Some(*x),
            Cell::Int(i) => Some(*i as f64),
            Cell::Label(_) => None,
        }
    }

    pub fn as_label(&self) -> Option<&str> {
        match self {
            Cell::Label(s) => Some(s),
            _ => None,
        }
    }

    fn render(&self) -> String {
        match self {
            Cell::Label(s) => s.clone(),
            Cell::Int(i) => i.to_string(),
            Cell::Real(x) if x.is_nan() => "NaN".into(),
            Cell::Real(x) if x.is_infinite() => if *x > 0.0 { "inf" } else { "-inf" }.into(),
            // 17 significant digits.
            Cell::Real(x) => format!("{x:.16e}"),
        }
    }
}

impl From<&str> for Cell {
    fn from(s: &str) -> Self {
        Cell::Label(s.to_string())
    }
}

impl From<String> for Cell {
    fn from(s: String) -> Self {
        Cell::Label(s)
    }
}

impl From<f64> for Cell {
    fn from(x: f64) -> Self {
        Cell::Real(x)
    }
}

impl From<usize> for Cell {
    fn from(i: usize) -> Self {
        Cell::Int(i as i64)
    }
}

impl From<bool> for Cell {
    fn from(b: bool) -> Self {
        Cell::Int(b as i64)
    }
}

/// Result table of one experiment: the configuration it ran with, a header
/// and rows. `failure` is set when a run stopped on a numerical error; the
/// rows then end with a diagnostic row.
#[derive(Clone, Debug, PartialEq)]
pub struct Table {
    pub command: String,
    pub config: Vec<(String, String)>,
    pub header: Vec<String>,
    pub rows: Vec<Vec<Cell>>,
    pub failure: Option<String>,
}

impl Table {
    pub fn new(command: &str, header: &[&str]) -> Self {
        Self {
            command: command.to_string(),
            config: Vec::new(),
            header: header.iter().map(|s| s.to_string()).collect(),
            rows: Vec::new(),
            failure: None,
        }
    }

    pub fn set(&mut self, key: &str, value: impl Display) {
        self.config.push((key.to_string(), value.to_string()));
    }

    pub fn push(&mut self, row: Vec<Cell>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }

    pub fn column_index(&self, name: &str) -> Option<usize> {
        self.header.iter().position(|h| h == name)
    }

    /// Rows whose `key` column holds the label `value`.
    pub fn rows_where<'a>(&'a self, key: &str, value: &'a str) -> impl Iterator<Item = &'a Vec<Cell>> + 'a {
        let idx = self.column_index(key).expect("unknown column");
        self.rows.iter().filter(move |r| r[idx].as_label() == Some(value))
    }

    /// Numeric value of column `name` in `row`.
    pub fn value(&self, row: &[Cell], name: &str) -> f64 {
        row[self.column_index(name).expect("unknown column")].as_real().expect("numeric column")
    }

    /// `# config: ...` comment, header, rows, and a `# failure: ...` comment
    /// when the run stopped early.
    pub fn write_csv<W: Write>(&self, mut out: W) -> io::Result<()> {
        let config: Vec<String> = std::iter::once(format!("command={}", self.command))
            .chain(self.config.iter().map(|(k, v)| format!("{k}={v}")))
            .collect();
        writeln!(out, "# config: {}", config.join(" "))?;
        {
            let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(&mut out);
            w.write_record(&self.header)?;
            for row in &self.rows {
                w.write_record(row.iter().map(Cell::render))?;
            }
            w.flush()?;
        }
        if let Some(f) = &self.failure {
            writeln!(out, "# failure: {f}")?;
        }
        Ok(())
    }

    pub fn to_csv_string(&self) -> String {
        let mut buf = Vec::new();
        self.write_csv(&mut buf).expect("writing to memory");
        String::from_utf8(buf).expect("csv output is utf-8")
    }
}

/// `a;b;c` for list-valued config entries.
pub fn list<T: Display>(items: &[T]) -> String {
    items.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(";")
}
