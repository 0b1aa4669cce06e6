//! Plain-text vectors, `key=value` metadata and binary PGM images.

use std::collections::BTreeMap;
use std::fs;
use std::io::Write;
use std::path::Path;

use crate::error::{Error, Result};

/// One value per line.
pub fn write_vector<W: Write>(mut w: W, v: &[f64]) -> Result<()> {
    for x in v {
        writeln!(w, "{x}")?;
    }
    Ok(())
}

pub fn read_vector(text: &str) -> Result<Vec<f64>> {
    text.split_whitespace()
        .map(|s| s.parse::<f64>().map_err(|e| Error::Parse(format!("{s:?}: {e}"))))
        .collect()
}

pub fn save_vector(path: &Path, v: &[f64]) -> Result<()> {
    let mut buf = Vec::new();
    write_vector(&mut buf, v)?;
    fs::write(path, buf)?;
    Ok(())
}

pub fn load_vector(path: &Path) -> Result<Vec<f64>> {
    read_vector(&fs::read_to_string(path)?)
}

/// Ordered `key=value` metadata. Lines starting with `#` are ignored.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Meta {
    entries: BTreeMap<String, String>,
}

impl Meta {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn set(&mut self, key: &str, value: impl ToString) -> &mut Self {
        self.entries.insert(key.to_string(), value.to_string());
        self
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.entries.get(key).map(String::as_str)
    }

    pub fn get_f64(&self, key: &str) -> Result<f64> {
        let s = self.get(key).ok_or_else(|| Error::Parse(format!("missing key {key}")))?;
        s.parse().map_err(|e| Error::Parse(format!("{key}={s}: {e}")))
    }

    pub fn get_usize(&self, key: &str) -> Result<usize> {
        let s = self.get(key).ok_or_else(|| Error::Parse(format!("missing key {key}")))?;
        s.parse().map_err(|e| Error::Parse(format!("{key}={s}: {e}")))
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, &str)> {
        self.entries.iter().map(|(k, v)| (k.as_str(), v.as_str()))
    }

    pub fn parse(text: &str) -> Result<Self> {
        let mut m = Self::new();
        for (i, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| Error::Parse(format!("line {}: expected key=value", i + 1)))?;
            m.set(k.trim(), v.trim());
        }
        Ok(m)
    }

    pub fn to_text(&self) -> String {
        self.entries.iter().map(|(k, v)| format!("{k}={v}\n")).collect()
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        fs::write(path, self.to_text())?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::parse(&fs::read_to_string(path)?)
    }
}

/// Binary P5, maxval 255, row-major. Values are clipped to `[0, 1]`.
pub fn write_pgm<W: Write>(mut w: W, width: usize, height: usize, pixels: &[f64]) -> Result<()> {
    if pixels.len() != width * height {
        return Err(Error::DimensionMismatch {
            what: "PGM pixels",
            expected: width * height,
            got: pixels.len(),
        });
    }
    write!(w, "P5\n{width} {height}\n255\n")?;
    let bytes: Vec<u8> = pixels
        .iter()
        .map(|&p| (p.clamp(0.0, 1.0) * 255.0).round() as u8)
        .collect();
    w.write_all(&bytes)?;
    Ok(())
}

pub fn save_pgm(path: &Path, width: usize, height: usize, pixels: &[f64]) -> Result<()> {
    let mut buf = Vec::new();
    write_pgm(&mut buf, width, height, pixels)?;
    fs::write(path, buf)?;
    Ok(())
}
