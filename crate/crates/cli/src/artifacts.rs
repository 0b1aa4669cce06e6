//! On-disk layout of a run directory.
//!
//! ```text
//! instance/meta.txt           generator parameters
//! instance/*.txt              matrices and vectors (optional)
//! reference/meta.txt          f_star and norms of the reference point
//! reference/{x,y,z}.txt       reference primal, split and dual vectors
//! params_<label>.txt          solver parameters
//! x1_<label>.txt              initial point
//! trace_<label>.csv           per-iteration trace
//! aux_<label>.csv             quantities the certificates need
//! cert_<label>.csv            certificate report
//! summary.txt
//! ```

use std::fs::{self, File};
use std::io::{BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use accelopt::gladmm::GladmmRecord;
use accelopt::glalm::GlalmRecord;
use accelopt::gpgm::GpgmRecord;
use accelopt::io::{load_vector, save_vector, Meta};
use accelopt::linalg::{norm, norm_sq, DenseMatrix};
use accelopt::problems::Reference;
use accelopt::trace::{self, CsvTable};
use anyhow::{anyhow, Context, Result};

pub fn create(path: &Path) -> Result<BufWriter<File>> {
    let f = File::create(path).with_context(|| format!("creating {}", path.display()))?;
    Ok(BufWriter::new(f))
}

pub fn save_matrix(path: &Path, m: &DenseMatrix) -> Result<()> {
    let mut w = create(path)?;
    m.write_text(&mut w)?;
    w.flush()?;
    Ok(())
}

pub fn params_path(dir: &Path, label: &str) -> PathBuf {
    dir.join(format!("params_{label}.txt"))
}

pub fn trace_path(dir: &Path, label: &str) -> PathBuf {
    dir.join(format!("trace_{label}.csv"))
}

pub fn aux_path(dir: &Path, label: &str) -> PathBuf {
    dir.join(format!("aux_{label}.csv"))
}

pub fn cert_path(dir: &Path, label: &str) -> PathBuf {
    dir.join(format!("cert_{label}.csv"))
}

pub fn x1_path(dir: &Path, label: &str) -> PathBuf {
    dir.join(format!("x1_{label}.txt"))
}

/// Labels of all `params_<label>.txt` files, sorted.
pub fn list_labels(dir: &Path) -> Result<Vec<String>> {
    let mut labels = Vec::new();
    for entry in fs::read_dir(dir).with_context(|| format!("listing {}", dir.display()))? {
        let name = entry?.file_name().to_string_lossy().into_owned();
        if let Some(label) = name.strip_prefix("params_").and_then(|s| s.strip_suffix(".txt")) {
            labels.push(label.to_string());
        }
    }
    labels.sort();
    Ok(labels)
}

pub fn read_table(path: &Path) -> Result<CsvTable> {
    let f = File::open(path).with_context(|| format!("opening {}", path.display()))?;
    CsvTable::read(BufReader::new(f)).with_context(|| format!("parsing {}", path.display()))
}

/// Writes `reference/`. `by_star_sq` is `‖By*‖²` for two-block problems.
pub fn write_reference(dir: &Path, r: &Reference, by_star_sq: Option<f64>) -> Result<()> {
    let rd = dir.join("reference");
    fs::create_dir_all(&rd)?;
    save_vector(&rd.join("x.txt"), &r.x)?;
    let mut meta = Meta::new();
    meta.set("f_star", r.f_star)
        .set("iterations", r.iterations)
        .set("x_norm_sq", norm_sq(&r.x));
    if let Some(y) = &r.y {
        save_vector(&rd.join("y.txt"), y)?;
    }
    if let Some(z) = &r.z {
        save_vector(&rd.join("z.txt"), z)?;
        meta.set("z_norm", norm(z));
    }
    if let Some(v) = by_star_sq {
        meta.set("by_star_norm_sq", v);
    }
    meta.save(&rd.join("meta.txt"))?;
    Ok(())
}

/// Reference data as stored on disk.
#[derive(Clone, Debug)]
pub struct StoredReference {
    pub x: Vec<f64>,
    pub y: Option<Vec<f64>>,
    pub z: Option<Vec<f64>>,
    pub meta: Meta,
}

impl StoredReference {
    pub fn f_star(&self) -> Result<f64> {
        Ok(self.meta.get_f64("f_star")?)
    }

    pub fn z_norm(&self) -> Result<f64> {
        self.z
            .as_deref()
            .map(norm)
            .ok_or_else(|| anyhow!("reference multiplier z* is missing (reference/z.txt)"))
    }
}

pub fn load_reference(dir: &Path) -> Result<StoredReference> {
    let rd = dir.join("reference");
    let meta_path = rd.join("meta.txt");
    if !meta_path.exists() {
        return Err(anyhow!(
            "no reference in {}: certificates need x*, F* and z* and are never evaluated against estimates",
            rd.display()
        ));
    }
    let meta = Meta::load(&meta_path)?;
    let x = load_vector(&rd.join("x.txt")).context("reference/x.txt")?;
    let opt = |name: &str| -> Result<Option<Vec<f64>>> {
        let p = rd.join(name);
        if p.exists() {
            Ok(Some(load_vector(&p)?))
        } else {
            Ok(None)
        }
    };
    Ok(StoredReference {
        x,
        y: opt("y.txt")?,
        z: opt("z.txt")?,
        meta,
    })
}

pub fn write_gpgm(dir: &Path, label: &str, params: &Meta, x1: &[f64], records: &[GpgmRecord], timing: bool) -> Result<()> {
    params.save(&params_path(dir, label))?;
    save_vector(&x1_path(dir, label), x1)?;
    let mut w = create(&trace_path(dir, label))?;
    trace::write_gpgm_trace(&mut w, records, timing)?;
    w.flush()?;
    let mut w = create(&aux_path(dir, label))?;
    trace::write_gpgm_aux(&mut w, records)?;
    w.flush()?;
    Ok(())
}

pub fn write_glalm(dir: &Path, label: &str, params: &Meta, x1: &[f64], records: &[GlalmRecord], timing: bool) -> Result<()> {
    params.save(&params_path(dir, label))?;
    save_vector(&x1_path(dir, label), x1)?;
    let mut w = create(&trace_path(dir, label))?;
    trace::write_glalm_trace(&mut w, records, timing)?;
    w.flush()?;
    let mut w = create(&aux_path(dir, label))?;
    trace::write_glalm_aux(&mut w, records)?;
    w.flush()?;
    Ok(())
}

pub fn write_gladmm(dir: &Path, label: &str, params: &Meta, x1: &[f64], records: &[GladmmRecord], timing: bool) -> Result<()> {
    params.save(&params_path(dir, label))?;
    save_vector(&x1_path(dir, label), x1)?;
    let mut w = create(&trace_path(dir, label))?;
    trace::write_gladmm_trace(&mut w, records, timing)?;
    w.flush()?;
    let mut w = create(&aux_path(dir, label))?;
    trace::write_gladmm_aux(&mut w, records)?;
    w.flush()?;
    Ok(())
}
