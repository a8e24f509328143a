//! CSV tables, their schema files and plotting stubs.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use crate::error::Result;

#[derive(Clone, Debug, PartialEq)]
pub enum Cell {
    F(f64),
    U(u64),
    S(String),
    B(bool),
}

impl Cell {
    fn render(&self) -> String {
        match self {
            // 17 significant digits round-trip every f64
            Cell::F(x) => format!("{x:.16e}"),
            Cell::U(x) => x.to_string(),
            Cell::S(s) => s.clone(),
            Cell::B(b) => b.to_string(),
        }
    }
}

impl From<f64> for Cell {
    fn from(x: f64) -> Self {
        Cell::F(x)
    }
}

impl From<u64> for Cell {
    fn from(x: u64) -> Self {
        Cell::U(x)
    }
}

impl From<u32> for Cell {
    fn from(x: u32) -> Self {
        Cell::U(x as u64)
    }
}

impl From<usize> for Cell {
    fn from(x: usize) -> Self {
        Cell::U(x as u64)
    }
}

impl From<bool> for Cell {
    fn from(x: bool) -> Self {
        Cell::B(x)
    }
}

impl From<&str> for Cell {
    fn from(x: &str) -> Self {
        Cell::S(x.to_string())
    }
}

impl From<String> for Cell {
    fn from(x: String) -> Self {
        Cell::S(x)
    }
}

/// A named table with documented columns.
#[derive(Clone, Debug)]
pub struct Table {
    pub name: &'static str,
    columns: &'static [(&'static str, &'static str)],
    rows: Vec<Vec<Cell>>,
}

impl Table {
    pub fn new(name: &'static str, columns: &'static [(&'static str, &'static str)]) -> Self {
        Self {
            name,
            columns,
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<Cell>) {
        assert_eq!(row.len(), self.columns.len(), "row width for {}", self.name);
        self.rows.push(row);
    }

    pub fn rows(&self) -> &[Vec<Cell>] {
        &self.rows
    }

    /// Writes `<name>.csv` (comment preamble, header, rows) and
    /// `<name>.schema.csv`.
    pub fn write(&self, dir: &Path, preamble: &str) -> Result<PathBuf> {
        let mut csv = String::from(preamble);
        let header: Vec<&str> = self.columns.iter().map(|(c, _)| *c).collect();
        csv.push_str(&header.join(","));
        csv.push('\n');
        for row in &self.rows {
            let cells: Vec<String> = row.iter().map(Cell::render).collect();
            csv.push_str(&cells.join(","));
            csv.push('\n');
        }
        let path = dir.join(format!("{}.csv", self.name));
        fs::write(&path, csv)?;
        let mut schema = String::from("column,description\n");
        for (c, d) in self.columns {
            let _ = writeln!(schema, "{c},\"{}\"", d.replace('"', "\"\""));
        }
        fs::write(dir.join(format!("{}.schema.csv", self.name)), schema)?;
        Ok(path)
    }
}

/// Writes `plot_<command>.py`, a matplotlib stub over the given tables.
pub fn write_plot_stub(dir: &Path, command: &str, tables: &[&Table]) -> Result<()> {
    let mut s = String::from(
        "# Plotting stub; edit freely.\nimport sys\nimport pandas as pd\nimport matplotlib.pyplot as plt\n\n",
    );
    for t in tables {
        let _ = writeln!(s, "{0} = pd.read_csv(\"{0}.csv\", comment=\"#\")", t.name);
    }
    if let Some(t) = tables.first() {
        let cols: Vec<&str> = t.columns.iter().map(|(c, _)| *c).collect();
        if cols.len() >= 2 {
            let x = ["time", "n", "radius"].into_iter().find(|c| cols.contains(c)).unwrap_or(cols[0]);
            let _ = write!(
                s,
                "\nfig, ax = plt.subplots()\nax.plot({0}[\"{1}\"], {0}[\"{2}\"], \".\")\nax.set_xlabel(\"{1}\")\nax.set_ylabel(\"{2}\")\nfig.savefig(sys.argv[1] if len(sys.argv) > 1 else \"{3}.png\")\n",
                t.name, x, cols[cols.len() - 1], command
            );
        }
    }
    fs::write(dir.join(format!("plot_{}.py", command.replace('-', "_"))), s)?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn writes_round_trippable_numbers() {
        let dir = tempfile::tempdir().unwrap();
        let mut t = Table::new("demo", &[("x", "a value"), ("flag", "a flag")]);
        t.push(vec![0.1.into(), true.into()]);
        t.write(dir.path(), "# seed = 1\n").unwrap();
        let text = fs::read_to_string(dir.path().join("demo.csv")).unwrap();
        let last = text.lines().last().unwrap();
        let x: f64 = last.split(',').next().unwrap().parse().unwrap();
        assert_eq!(x, 0.1);
        assert!(text.starts_with("# seed = 1\nx,flag\n"));
        let schema = fs::read_to_string(dir.path().join("demo.schema.csv")).unwrap();
        assert_eq!(schema, "column,description\nx,\"a value\"\nflag,\"a flag\"\n");
        write_plot_stub(dir.path(), "sn-decay", &[&t]).unwrap();
        assert!(dir.path().join("plot_sn_decay.py").exists());
    }
}
