//! Atomic file writers and the summary / long-format table layouts.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use svar_signs::analysis::summarize;

use crate::error::CliError;

fn partial_path(path: &Path) -> PathBuf {
    let name = path.file_name().map(|n| n.to_string_lossy().into_owned()).unwrap_or_default();
    path.with_file_name(format!(".{name}.partial"))
}

/// Writes `bytes` to a temporary sibling and renames it over `path`, so the
/// final name never holds a half-written file.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<(), CliError> {
    let tmp = partial_path(path);
    let err = |source| CliError::Write { path: path.to_path_buf(), source };
    std::fs::write(&tmp, bytes).map_err(err)?;
    std::fs::rename(&tmp, path).map_err(err)
}

/// Streaming CSV writer committed by rename.
pub struct AtomicCsv {
    path: PathBuf,
    tmp: PathBuf,
    writer: csv::Writer<BufWriter<File>>,
}

impl AtomicCsv {
    pub fn create(path: &Path, header: &[&str]) -> Result<Self, CliError> {
        let tmp = partial_path(path);
        let file = File::create(&tmp).map_err(|source| CliError::Write { path: path.to_path_buf(), source })?;
        let mut out =
            AtomicCsv { path: path.to_path_buf(), tmp, writer: csv::Writer::from_writer(BufWriter::new(file)) };
        out.row(header)?;
        Ok(out)
    }

    pub fn row<I, S>(&mut self, fields: I) -> Result<(), CliError>
    where
        I: IntoIterator<Item = S>,
        S: AsRef<[u8]>,
    {
        let path = &self.path;
        self.writer.write_record(fields).map_err(|e| CliError::Write { path: path.clone(), source: e.into() })
    }

    pub fn commit(self) -> Result<(), CliError> {
        let AtomicCsv { path, tmp, writer } = self;
        let err = |source| CliError::Write { path: path.clone(), source };
        let mut inner = writer.into_inner().map_err(|e| err(e.into_error()))?;
        inner.flush().map_err(err)?;
        drop(inner);
        std::fs::rename(&tmp, &path).map_err(err)
    }
}

/// Shortest representation that parses back to the same value.
pub fn num(v: f64) -> String {
    format!("{v}")
}

fn index1(i: Option<usize>) -> String {
    i.map(|i| (i + 1).to_string()).unwrap_or_default()
}

/// One reported quantity: 0-based variable and shock, and a horizon or
/// period label.
#[derive(Debug, Clone, PartialEq)]
pub struct Cell {
    pub variable: Option<usize>,
    pub shock: Option<usize>,
    pub index: String,
}

/// Values of a set of cells across draws: `values[draw][cell]`.
#[derive(Debug, Clone)]
pub struct Block {
    pub cells: Vec<Cell>,
    pub values: Vec<Vec<f64>>,
}

impl Block {
    /// Evaluates `f` on every draw in parallel; each call must return one
    /// value per cell in the order of `cells`.
    pub fn compute<D, F>(cells: Vec<Cell>, draws: &[D], f: F) -> Result<Block, CliError>
    where
        D: Sync,
        F: Fn(&D) -> svar_signs::Result<Vec<f64>> + Sync,
    {
        let values: Vec<Vec<f64>> = draws.par_iter().map(&f).collect::<svar_signs::Result<_>>()?;
        debug_assert!(values.iter().all(|v| v.len() == cells.len()));
        Ok(Block { cells, values })
    }
}

/// Summary table `variable, shock, <index>, mean, sd, lo, hi` with an
/// optional long-format companion `draw, variable, shock, <index>, value`.
pub struct TableWriter {
    summary: AtomicCsv,
    draws: Option<AtomicCsv>,
    probability: f64,
    pub files: Vec<String>,
}

impl TableWriter {
    pub fn create(
        dir: &Path,
        stem: &str,
        index_name: &str,
        probability: f64,
        with_draws: bool,
    ) -> Result<Self, CliError> {
        let summary_name = format!("{stem}_summary.csv");
        let summary =
            AtomicCsv::create(&dir.join(&summary_name), &["variable", "shock", index_name, "mean", "sd", "lo", "hi"])?;
        let mut files = vec![summary_name];
        let draws = if with_draws {
            let name = format!("{stem}_draws.csv");
            let w = AtomicCsv::create(&dir.join(&name), &["draw", "variable", "shock", index_name, "value"])?;
            files.push(name);
            Some(w)
        } else {
            None
        };
        Ok(TableWriter { summary, draws, probability, files })
    }

    pub fn write(&mut self, block: &Block) -> Result<(), CliError> {
        let columns: Vec<Vec<f64>> =
            (0..block.cells.len()).into_par_iter().map(|c| block.values.iter().map(|v| v[c]).collect()).collect();
        let summaries =
            columns.par_iter().map(|col| summarize(col, self.probability)).collect::<svar_signs::Result<Vec<_>>>()?;
        for (cell, s) in block.cells.iter().zip(&summaries) {
            self.summary.row([
                index1(cell.variable),
                index1(cell.shock),
                cell.index.clone(),
                num(s.mean),
                num(s.sd),
                num(s.lower),
                num(s.upper),
            ])?;
        }
        if let Some(w) = &mut self.draws {
            for (d, values) in block.values.iter().enumerate() {
                for (cell, v) in block.cells.iter().zip(values) {
                    w.row([
                        (d + 1).to_string(),
                        index1(cell.variable),
                        index1(cell.shock),
                        cell.index.clone(),
                        num(*v),
                    ])?;
                }
            }
        }
        Ok(())
    }

    pub fn commit(self) -> Result<Vec<String>, CliError> {
        self.summary.commit()?;
        if let Some(w) = self.draws {
            w.commit()?;
        }
        Ok(self.files)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn numbers_round_trip() {
        for v in [0.1, 1.0 / 3.0, -2.5e-300, 123456.789, 0.0] {
            assert_eq!(num(v).parse::<f64>().unwrap(), v);
        }
    }

    #[test]
    fn table_writes_summary_and_long_format() {
        let dir = tempfile::tempdir().unwrap();
        let cells = vec![
            Cell { variable: Some(0), shock: Some(1), index: "0".into() },
            Cell { variable: Some(1), shock: None, index: "1".into() },
        ];
        let draws: Vec<f64> = (1..=5).map(f64::from).collect();
        let block = Block::compute(cells, &draws, |&d| Ok(vec![d, 2.0 * d])).unwrap();
        let mut t = TableWriter::create(dir.path(), "x", "horizon", 0.5, true).unwrap();
        t.write(&block).unwrap();
        assert_eq!(t.commit().unwrap(), vec!["x_summary.csv", "x_draws.csv"]);
        let summary = std::fs::read_to_string(dir.path().join("x_summary.csv")).unwrap();
        let lines: Vec<&str> = summary.lines().collect();
        assert_eq!(lines[0], "variable,shock,horizon,mean,sd,lo,hi");
        assert!(lines[1].starts_with("1,2,0,3,"));
        assert!(lines[1].ends_with(",2,4"));
        assert!(lines[2].starts_with("2,,1,6,"));
        let long = std::fs::read_to_string(dir.path().join("x_draws.csv")).unwrap();
        assert_eq!(long.lines().count(), 11);
        assert_eq!(long.lines().nth(2).unwrap(), "1,2,,1,2");
        assert!(!dir.path().join(".x_summary.csv.partial").exists());
    }
}
