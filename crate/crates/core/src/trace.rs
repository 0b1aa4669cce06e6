//! CSV traces. Optional values are written as empty fields; `elapsed_s` is
//! left empty unless timing is requested so that reruns are byte-identical.

use std::io::{BufRead, Write};

use crate::error::{Error, Result};
use crate::gladmm::GladmmRecord;
use crate::glalm::GlalmRecord;
use crate::gpgm::GpgmRecord;

pub const GPGM_HEADER: &str = "k,obj,obj_gap,dist_to_opt,bound,elapsed_s";
pub const GLALM_HEADER: &str = "k,obj,obj_gap,feas,bound,elapsed_s";
pub const GLADMM_HEADER: &str = "k,obj,obj_gap,feas,rel_err,gapQ,elapsed_s";
pub const GPGM_AUX_HEADER: &str = "k,xhat_dist_sq,x_dist_sq,lyapunov";
pub const GLALM_AUX_HEADER: &str = "k,lyapunov,inner_iterations,inner_residual";
pub const GLADMM_AUX_HEADER: &str = "k,bound,multiplier_residual";

fn opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

fn elapsed(v: f64, timing: bool) -> String {
    if timing {
        v.to_string()
    } else {
        String::new()
    }
}

pub fn write_gpgm_trace<W: Write>(mut w: W, records: &[GpgmRecord], timing: bool) -> Result<()> {
    writeln!(w, "{GPGM_HEADER}")?;
    for r in records {
        writeln!(
            w,
            "{},{},{},{},{},{}",
            r.k,
            r.obj,
            opt(r.obj_gap),
            opt(r.dist_to_opt),
            opt(r.bound),
            elapsed(r.elapsed_s, timing)
        )?;
    }
    Ok(())
}

pub fn write_gpgm_aux<W: Write>(mut w: W, records: &[GpgmRecord]) -> Result<()> {
    writeln!(w, "{GPGM_AUX_HEADER}")?;
    for r in records {
        writeln!(w, "{},{},{},{}", r.k, opt(r.xhat_dist_sq), opt(r.x_dist_sq), opt(r.lyapunov))?;
    }
    Ok(())
}

pub fn write_glalm_trace<W: Write>(mut w: W, records: &[GlalmRecord], timing: bool) -> Result<()> {
    writeln!(w, "{GLALM_HEADER}")?;
    for r in records {
        writeln!(
            w,
            "{},{},{},{},{},{}",
            r.k,
            r.obj,
            opt(r.obj_gap),
            r.feas,
            opt(r.bound),
            elapsed(r.elapsed_s, timing)
        )?;
    }
    Ok(())
}

pub fn write_glalm_aux<W: Write>(mut w: W, records: &[GlalmRecord]) -> Result<()> {
    writeln!(w, "{GLALM_AUX_HEADER}")?;
    for r in records {
        writeln!(w, "{},{},{},{}", r.k, opt(r.lyapunov), r.inner_iterations, r.inner_residual)?;
    }
    Ok(())
}

pub fn write_gladmm_trace<W: Write>(mut w: W, records: &[GladmmRecord], timing: bool) -> Result<()> {
    writeln!(w, "{GLADMM_HEADER}")?;
    for r in records {
        writeln!(
            w,
            "{},{},{},{},{},{},{}",
            r.k,
            r.obj,
            opt(r.obj_gap),
            r.feas,
            opt(r.rel_err),
            opt(r.gap_q),
            elapsed(r.elapsed_s, timing)
        )?;
    }
    Ok(())
}

pub fn write_gladmm_aux<W: Write>(mut w: W, records: &[GladmmRecord]) -> Result<()> {
    writeln!(w, "{GLADMM_AUX_HEADER}")?;
    for r in records {
        writeln!(w, "{},{},{}", r.k, opt(r.bound), opt(r.multiplier_residual))?;
    }
    Ok(())
}

/// A parsed CSV file with a header row.
#[derive(Clone, Debug, PartialEq)]
pub struct CsvTable {
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl CsvTable {
    pub fn read<R: BufRead>(r: R) -> Result<Self> {
        let mut lines = r.lines();
        let header = match lines.next() {
            Some(l) => l?.split(',').map(str::to_string).collect::<Vec<_>>(),
            None => return Err(Error::Parse("empty CSV".into())),
        };
        let mut rows = Vec::new();
        for (i, line) in lines.enumerate() {
            let line = line?;
            if line.is_empty() {
                continue;
            }
            let row: Vec<String> = line.split(',').map(str::to_string).collect();
            if row.len() != header.len() {
                return Err(Error::Parse(format!(
                    "row {} has {} fields, header has {}",
                    i + 2,
                    row.len(),
                    header.len()
                )));
            }
            rows.push(row);
        }
        Ok(Self { header, rows })
    }

    pub fn column_index(&self, name: &str) -> Result<usize> {
        self.header
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| Error::Parse(format!("missing column {name}")))
    }

    /// Column values; empty fields become `None`.
    pub fn column(&self, name: &str) -> Result<Vec<Option<f64>>> {
        let j = self.column_index(name)?;
        self.rows
            .iter()
            .map(|row| {
                let s = row[j].trim();
                if s.is_empty() {
                    Ok(None)
                } else {
                    s.parse::<f64>()
                        .map(Some)
                        .map_err(|e| Error::Parse(format!("column {name}: {s:?}: {e}")))
                }
            })
            .collect()
    }

    /// Column values, all required.
    pub fn required_column(&self, name: &str) -> Result<Vec<f64>> {
        self.column(name)?
            .into_iter()
            .enumerate()
            .map(|(i, v)| v.ok_or_else(|| Error::Parse(format!("column {name}: empty field in row {}", i + 2))))
            .collect()
    }

    pub fn header_line(&self) -> String {
        self.header.join(",")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rec(k: usize) -> GpgmRecord {
        GpgmRecord {
            k,
            obj: 0.5,
            obj_gap: Some(0.125),
            dist_to_opt: None,
            bound: Some(0.625),
            xhat_dist_sq: Some(0.0625),
            x_dist_sq: None,
            lyapunov: None,
            elapsed_s: 1.5,
        }
    }

    #[test]
    fn gpgm_round_trip() {
        let mut buf = Vec::new();
        write_gpgm_trace(&mut buf, &[rec(1), rec(2)], false).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert_eq!(text.lines().nth(1).unwrap(), "1,0.5,0.125,,0.625,");
        let t = CsvTable::read(buf.as_slice()).unwrap();
        assert_eq!(t.header_line(), GPGM_HEADER);
        assert_eq!(t.required_column("bound").unwrap(), vec![0.625, 0.625]);
        assert_eq!(t.column("dist_to_opt").unwrap(), vec![None, None]);
        assert!(t.required_column("elapsed_s").is_err());
    }

    #[test]
    fn timing_column_when_enabled() {
        let mut buf = Vec::new();
        write_gpgm_trace(&mut buf, &[rec(1)], true).unwrap();
        assert!(String::from_utf8(buf).unwrap().ends_with(",1.5\n"));
    }

    #[test]
    fn ragged_rows_rejected() {
        assert!(CsvTable::read("a,b\n1\n".as_bytes()).is_err());
        assert!(CsvTable::read("".as_bytes()).is_err());
    }
}
