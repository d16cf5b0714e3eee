//! CSV writers. Floats are written with 17 significant digits so every value
//! round-trips exactly.

use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};

use baro_core::{DiagnosticsRow, EocTable, Field, RunSink};

use crate::config::RunConfig;

pub const DIAGNOSTICS_HEADER: &str = "t,entropy,kinetic_energy,potential_energy";
pub const SNAPSHOT_HEADER_1D: &str = "x,rho,mom1";
pub const SNAPSHOT_HEADER_2D: &str = "x1,x2,rho,mom1,mom2";

pub fn fmt_f64(v: f64) -> String {
    format!("{v:.16e}")
}

/// `snapshot_<t>.csv`, with `t` in shortest round-trip form.
pub fn snapshot_file_name(t: f64) -> String {
    format!("snapshot_{t}.csv")
}

pub fn write_field_csv(path: &Path, field: &Field) -> io::Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    let grid = field.grid();
    let two_d = grid.dim() == 2;
    writeln!(
        w,
        "{}",
        if two_d {
            SNAPSHOT_HEADER_2D
        } else {
            SNAPSHOT_HEADER_1D
        }
    )?;
    for c in 0..field.cell_count() {
        let x = grid.center(c);
        let mut cols = vec![fmt_f64(x[0])];
        if two_d {
            cols.push(fmt_f64(x[1]));
        }
        cols.push(fmt_f64(field.rho()[c]));
        for k in 0..grid.dim() {
            cols.push(fmt_f64(field.mom(k)[c]));
        }
        writeln!(w, "{}", cols.join(","))?;
    }
    w.flush()
}

pub fn write_run_meta(path: &Path, config: &RunConfig) -> io::Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    writeln!(w, "key,value")?;
    for (k, v) in config.to_pairs() {
        writeln!(w, "{k},{v}")?;
    }
    writeln!(w, "code_version,{}", env!("CARGO_PKG_VERSION"))?;
    w.flush()
}

pub fn write_eoc_csv(path: &Path, table: &EocTable) -> io::Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    let mut header = vec!["N".to_string(), "dx".to_string()];
    for v in &table.variables {
        header.push(format!("err_{v}"));
        header.push(format!("eoc_{v}"));
    }
    writeln!(w, "{}", header.join(","))?;
    for row in &table.rows {
        let mut cols = vec![row.n.to_string(), fmt_f64(row.dx)];
        for (e, eoc) in row.errors.iter().zip(&row.eoc) {
            cols.push(fmt_f64(*e));
            cols.push(eoc.map(fmt_f64).unwrap_or_default());
        }
        writeln!(w, "{}", cols.join(","))?;
    }
    w.flush()
}

/// Streams diagnostics rows and writes snapshot files into one directory.
pub struct CsvSink {
    dir: PathBuf,
    diagnostics: BufWriter<File>,
    pub snapshot_paths: Vec<PathBuf>,
}

impl CsvSink {
    pub fn create(dir: &Path) -> io::Result<Self> {
        std::fs::create_dir_all(dir)?;
        let mut diagnostics = BufWriter::new(File::create(dir.join("diagnostics.csv"))?);
        writeln!(diagnostics, "{DIAGNOSTICS_HEADER}")?;
        Ok(Self {
            dir: dir.to_path_buf(),
            diagnostics,
            snapshot_paths: Vec::new(),
        })
    }

    pub fn flush(&mut self) -> io::Result<()> {
        self.diagnostics.flush()
    }
}

impl RunSink for CsvSink {
    fn diagnostics(&mut self, row: &DiagnosticsRow) -> io::Result<()> {
        writeln!(
            self.diagnostics,
            "{},{},{},{}",
            fmt_f64(row.t),
            fmt_f64(row.entropy),
            fmt_f64(row.ke),
            fmt_f64(row.pe)
        )
    }

    fn snapshot(&mut self, requested: f64, _t: f64, field: &Field) -> io::Result<()> {
        let path = self.dir.join(snapshot_file_name(requested));
        write_field_csv(&path, field)?;
        self.snapshot_paths.push(path);
        Ok(())
    }
}
