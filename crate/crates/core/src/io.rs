//! Bit-specified outputs: raw little-endian float64 arrays with JSON
//! sidecars, CSV tables at full round-trip precision (LF endings, '.'
//! decimal), and run manifests keyed by a config hash.

use crate::error::Result;
use crate::normal_form::NormalField;
use crate::phase_space::PhaseSpaceDensity;
use crate::solver::SpinorField;
use serde::{Deserialize, Serialize};
use std::io::Write;
use std::path::{Path, PathBuf};

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Sidecar {
    pub shape: Vec<usize>,
    pub dtype: String,
    pub order: String,
    pub endianness: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub eps: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub t: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub axes: Option<serde_json::Value>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub scale: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub n: Option<i32>,
}

impl Sidecar {
    pub fn new(shape: Vec<usize>) -> Self {
        Self {
            shape,
            dtype: "f8".into(),
            order: "C".into(),
            endianness: "little".into(),
            eps: None,
            t: None,
            axes: None,
            scale: None,
            n: None,
        }
    }
}

pub fn write_raw_f64(path: &Path, data: &[f64], sidecar: &Sidecar) -> Result<()> {
    if let Some(dir) = path.parent() {
        std::fs::create_dir_all(dir)?;
    }
    let mut buf = Vec::with_capacity(data.len() * 8);
    for v in data {
        buf.extend_from_slice(&v.to_le_bytes());
    }
    std::fs::write(path, &buf)?;
    let side = path.with_extension(format!(
        "{}json",
        path.extension()
            .map(|e| format!("{}.", e.to_string_lossy()))
            .unwrap_or_default()
    ));
    let mut f = std::fs::File::create(side)?;
    f.write_all(serde_json::to_string_pretty(sidecar)?.as_bytes())?;
    f.write_all(b"\n")?;
    Ok(())
}

pub fn read_raw_f64(path: &Path) -> Result<Vec<f64>> {
    let bytes = std::fs::read(path)?;
    Ok(bytes
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
        .collect())
}

/// Snapshot layout: shape [N2, N1, 4] with channels
/// (Re u1, Im u1, Re u2, Im u2), row-major.
pub fn write_snapshot(path: &Path, field: &SpinorField) -> Result<()> {
    let g = field.grid;
    let mut data = Vec::with_capacity(g.len() * 4);
    for v in &field.values {
        data.push(v[0].re);
        data.push(v[0].im);
        data.push(v[1].re);
        data.push(v[1].im);
    }
    let mut sc = Sidecar::new(vec![g.n2, g.n1, 4]);
    sc.eps = Some(field.eps);
    sc.t = Some(field.t);
    write_raw_f64(path, &data, &sc)
}

pub fn read_snapshot(path: &Path, grid: crate::solver::Grid2D) -> Result<SpinorField> {
    let data = read_raw_f64(path)?;
    let side_path = path.with_extension(format!(
        "{}json",
        path.extension()
            .map(|e| format!("{}.", e.to_string_lossy()))
            .unwrap_or_default()
    ));
    let side: Sidecar = serde_json::from_str(&std::fs::read_to_string(side_path)?)?;
    let mut f = SpinorField::zeros(grid, side.eps.unwrap_or(1.0));
    f.t = side.t.unwrap_or(0.0);
    for (i, chunk) in data.chunks_exact(4).enumerate() {
        f.values[i] = [
            num_complex::Complex64::new(chunk[0], chunk[1]),
            num_complex::Complex64::new(chunk[2], chunk[3]),
        ];
    }
    Ok(f)
}

pub fn write_density(path: &Path, d: &PhaseSpaceDensity, eps: f64, t: f64) -> Result<()> {
    let mut sc = Sidecar::new(vec![d.s_axis.n, d.sigma_axis.n]);
    sc.eps = Some(eps);
    sc.t = Some(t);
    sc.scale = Some(d.scale);
    sc.n = d.mode;
    sc.axes = Some(serde_json::json!({
        "s": {"min": d.s_axis.min, "step": d.s_axis.step, "n": d.s_axis.n},
        "sigma": {"min": d.sigma_axis.min, "step": d.sigma_axis.step, "n": d.sigma_axis.n},
    }));
    write_raw_f64(path, &d.values, &sc)
}

/// Raw-array layout of a normal-coordinate field: shape [n_s, n_y, 4].
pub fn write_normal_field(path: &Path, nf: &NormalField) -> Result<()> {
    let g = nf.grid;
    let mut data = Vec::with_capacity(g.len() * 4);
    for v in &nf.values {
        data.push(v[0].re);
        data.push(v[0].im);
        data.push(v[1].re);
        data.push(v[1].im);
    }
    let mut sc = Sidecar::new(vec![g.n_s, g.n_y, 4]);
    sc.eps = Some(nf.eps);
    sc.t = Some(nf.t);
    sc.axes = Some(serde_json::json!({
        "s": {"min": g.s0, "step": g.ds, "n": g.n_s, "period": g.s_period},
        "y": {"max": g.y_max, "n": g.n_y, "rescaled": nf.rescaled},
    }));
    write_raw_f64(path, &data, &sc)
}

/// FNV-1a hash of the scenario text, hex-encoded (deterministic run key).
pub fn config_hash(text: &str) -> String {
    let mut h: u64 = 0xcbf29ce484222325;
    for b in text.as_bytes() {
        h ^= *b as u64;
        h = h.wrapping_mul(0x100000001b3);
    }
    format!("{h:016x}")
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ManifestEntry {
    pub path: String,
    pub shape: Vec<usize>,
    pub bytes: u64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Manifest {
    pub scenario: String,
    pub config_hash: String,
    pub eps: f64,
    pub outputs: Vec<ManifestEntry>,
}

impl Manifest {
    pub fn write(&self, dir: &Path) -> Result<PathBuf> {
        std::fs::create_dir_all(dir)?;
        let path = dir.join("manifest.json");
        std::fs::write(&path, format!("{}\n", serde_json::to_string_pretty(self)?))?;
        Ok(path)
    }
}

/// CSV writer: header + rows of f64 at shortest round-trip precision.
pub fn write_csv(path: &Path, header: &str, rows: &[Vec<f64>]) -> Result<()> {
    if let Some(dir) = path.parent() {
        std::fs::create_dir_all(dir)?;
    }
    let mut out = String::with_capacity(rows.len() * 32);
    out.push_str(header);
    out.push('\n');
    for row in rows {
        let cells: Vec<String> = row.iter().map(|v| format!("{v}")).collect();
        out.push_str(&cells.join(","));
        out.push('\n');
    }
    std::fs::write(path, out)?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::solver::Grid2D;
    use num_complex::Complex64;

    #[test]
    fn raw_roundtrip_bit_exact() {
        let dir = std::env::temp_dir().join("edgerun_io_test");
        let path = dir.join("arr.bin");
        let data = vec![1.0, -0.5, 3.25e-300, 0.1 + 0.2];
        write_raw_f64(&path, &data, &Sidecar::new(vec![4])).unwrap();
        let back = read_raw_f64(&path).unwrap();
        assert_eq!(data.len(), back.len());
        for (a, b) in data.iter().zip(&back) {
            assert_eq!(a.to_bits(), b.to_bits());
        }
        let side: Sidecar =
            serde_json::from_str(&std::fs::read_to_string(dir.join("arr.bin.json")).unwrap())
                .unwrap();
        assert_eq!(side.dtype, "f8");
        assert_eq!(side.endianness, "little");
        std::fs::remove_dir_all(dir).ok();
    }

    #[test]
    fn snapshot_roundtrip() {
        let dir = std::env::temp_dir().join("edgerun_snap_test");
        let grid = Grid2D::new(2.0, 2.0, 8, 8).unwrap();
        let mut f = SpinorField::zeros(grid, 0.25);
        f.t = 1.5;
        for (i, v) in f.values.iter_mut().enumerate() {
            v[0] = Complex64::new(i as f64, -0.5 * i as f64);
            v[1] = Complex64::new(0.25, i as f64);
        }
        let path = dir.join("snap_000.bin");
        write_snapshot(&path, &f).unwrap();
        let back = read_snapshot(&path, grid).unwrap();
        assert_eq!(back.t, 1.5);
        assert_eq!(back.eps, 0.25);
        for (a, b) in f.values.iter().zip(&back.values) {
            assert_eq!(a[0], b[0]);
            assert_eq!(a[1], b[1]);
        }
        std::fs::remove_dir_all(dir).ok();
    }

    #[test]
    fn csv_full_precision() {
        let dir = std::env::temp_dir().join("edgerun_csv_test");
        let path = dir.join("t.csv");
        let v = 0.1234567890123456789_f64;
        write_csv(&path, "a,b", &[vec![v, 2.0]]).unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        assert!(text.starts_with("a,b\n"));
        assert!(!text.contains('\r'));
        let cell = text.lines().nth(1).unwrap().split(',').next().unwrap();
        let parsed: f64 = cell.parse().unwrap();
        assert_eq!(parsed.to_bits(), v.to_bits());
        std::fs::remove_dir_all(dir).ok();
    }

    #[test]
    fn config_hash_stable() {
        let h1 = config_hash("alpha = 1\n");
        let h2 = config_hash("alpha = 1\n");
        let h3 = config_hash("alpha = 2\n");
        assert_eq!(h1, h2);
        assert_ne!(h1, h3);
        assert_eq!(h1.len(), 16);
    }
}
