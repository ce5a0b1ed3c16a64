//! Content-addressed cache for dispersion tables.
//!
//! Keyed by a SHA-256 hash over the exact bit patterns of every input that
//! determines a scan (geometry, material, scan configuration,
//! polarization), so a hit is byte-identical to recomputation. Disk writes
//! are atomic (write to a temp file, then rename), which makes concurrent
//! CLI invocations safe.

use crate::error::Result;
use crate::fibermodel::{FiberGeometry, MaterialModel};
use crate::modesolver::{DispersionTable, ScanConfig};
use crate::sfwm::Polarization;
use sha2::{Digest, Sha256};
use std::collections::HashMap;
use std::path::PathBuf;
use std::sync::{Arc, Mutex};

/// Bumped when solver numerics change in result-affecting ways.
const SOLVER_VERSION: u32 = 1;

/// Cache key: hex SHA-256 of the scan's determining inputs.
pub fn scan_key(
    geometry: &FiberGeometry,
    material: &MaterialModel,
    scan: &ScanConfig,
    eigen_tolerance: f64,
    polarization: Polarization,
) -> String {
    let mut h = Sha256::new();
    let mut push = |v: f64| h.update(v.to_bits().to_le_bytes());
    push(geometry.d_um);
    push(geometry.big_d_um);
    push(geometry.pitch_um);
    push(geometry.length_m);
    for i in 0..3 {
        push(material.b[i]);
        push(material.c_um2[i]);
    }
    push(material.valid_um.0);
    push(material.valid_um.1);
    push(scan.omega_min_rad_s);
    push(scan.omega_max_rad_s);
    push(scan.resolution_per_um);
    push(scan.half_extent_um.unwrap_or(-1.0));
    push(eigen_tolerance);
    let mut h2 = h; // appease the closure borrow
    h2.update((geometry.n_rings as u64).to_le_bytes());
    h2.update((scan.n_samples as u64).to_le_bytes());
    h2.update((SOLVER_VERSION as u64).to_le_bytes());
    h2.update(match polarization {
        Polarization::X => b"x",
        Polarization::Y => b"y",
    });
    hex::encode(h2.finalize())
}

/// Two-level cache: in-memory map plus an optional on-disk directory of
/// CSV files named by key.
#[derive(Clone)]
pub struct DispersionCache {
    dir: Option<PathBuf>,
    mem: Arc<Mutex<HashMap<String, Arc<DispersionTable>>>>,
    hits: Arc<Mutex<u64>>,
    misses: Arc<Mutex<u64>>,
}

impl DispersionCache {
    /// Memory-only cache.
    pub fn in_memory() -> DispersionCache {
        DispersionCache {
            dir: None,
            mem: Arc::new(Mutex::new(HashMap::new())),
            hits: Arc::new(Mutex::new(0)),
            misses: Arc::new(Mutex::new(0)),
        }
    }

    /// Cache backed by a directory (created on demand).
    pub fn on_disk(dir: PathBuf) -> DispersionCache {
        DispersionCache {
            dir: Some(dir),
            ..DispersionCache::in_memory()
        }
    }

    pub fn counters(&self) -> (u64, u64) {
        (*self.hits.lock().unwrap(), *self.misses.lock().unwrap())
    }

    /// Returns the cached table or computes, stores, and returns it.
    pub fn get_or_compute(
        &self,
        key: &str,
        polarization: Polarization,
        compute: impl FnOnce() -> Result<DispersionTable>,
    ) -> Result<Arc<DispersionTable>> {
        if let Some(t) = self.mem.lock().unwrap().get(key) {
            *self.hits.lock().unwrap() += 1;
            return Ok(t.clone());
        }
        if let Some(dir) = &self.dir {
            let path = dir.join(format!("{key}.csv"));
            if let Ok(text) = std::fs::read_to_string(&path) {
                if let Ok(table) = DispersionTable::from_csv(polarization, &text) {
                    let arc = Arc::new(table);
                    self.mem.lock().unwrap().insert(key.to_string(), arc.clone());
                    *self.hits.lock().unwrap() += 1;
                    return Ok(arc);
                }
            }
        }
        *self.misses.lock().unwrap() += 1;
        let table = compute()?;
        let arc = Arc::new(table);
        if let Some(dir) = &self.dir {
            std::fs::create_dir_all(dir)?;
            let path = dir.join(format!("{key}.csv"));
            let tmp = dir.join(format!("{key}.csv.tmp.{}", std::process::id()));
            std::fs::write(&tmp, arc.to_csv()?)?;
            std::fs::rename(&tmp, &path)?;
        }
        self.mem.lock().unwrap().insert(key.to_string(), arc.clone());
        Ok(arc)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::modesolver::DispersionTable;

    fn table() -> DispersionTable {
        let omegas: Vec<f64> = (0..16).map(|i| 1.5e15 + 0.05e15 * i as f64).collect();
        DispersionTable::from_columns(
            Polarization::X,
            omegas.clone(),
            omegas.iter().map(|&w| 4.8e-9 * w).collect(),
            vec![1.4; 16],
            vec![2e8; 16],
            vec![2.0; 16],
        )
        .unwrap()
    }

    #[test]
    fn keys_differ_when_inputs_differ() {
        let g1 = FiberGeometry::fitted();
        let mut g2 = g1;
        g2.pitch_um += 1e-12;
        let m = MaterialModel::default();
        let scan = ScanConfig::from_lambda_range_um(0.5, 1.6, 32, 20.0);
        let k1 = scan_key(&g1, &m, &scan, 1e-10, Polarization::X);
        let k2 = scan_key(&g2, &m, &scan, 1e-10, Polarization::X);
        let k3 = scan_key(&g1, &m, &scan, 1e-10, Polarization::Y);
        assert_ne!(k1, k2);
        assert_ne!(k1, k3);
    }

    #[test]
    fn memory_and_disk_roundtrip() {
        let tmp = tempfile::tempdir().unwrap();
        let cache = DispersionCache::on_disk(tmp.path().to_path_buf());
        let key = "deadbeef";
        let t1 = cache
            .get_or_compute(key, Polarization::X, || Ok(table()))
            .unwrap();
        // second hit must not recompute
        let t2 = cache
            .get_or_compute(key, Polarization::X, || {
                panic!("should have been cached")
            })
            .unwrap();
        assert_eq!(t1.k_rad_m, t2.k_rad_m);
        assert_eq!(cache.counters().0, 1);
        // a fresh cache instance reads the file back
        let cache2 = DispersionCache::on_disk(tmp.path().to_path_buf());
        let t3 = cache2
            .get_or_compute(key, Polarization::X, || {
                panic!("disk entry should have been found")
            })
            .unwrap();
        assert_eq!(t1.omega_rad_s, t3.omega_rad_s);
    }
}
