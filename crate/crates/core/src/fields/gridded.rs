//! Time series of velocities on a regular vertex grid.
//!
//! On disk a field is a small `key: value` descriptor plus a raw blob of
//! little-endian `f32` values laid out `[t][y][x][component]`, components
//! ordered `(u, v)`.

use std::collections::HashMap;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use super::VectorField;
use crate::error::FieldError;
use crate::geometry::{Domain, Vec3};

#[derive(Debug, Clone, PartialEq)]
pub struct GriddedField {
    domain: Domain,
    nx: usize,
    ny: usize,
    n_steps: usize,
    dt: f64,
    velocities: Vec<f32>,
}

impl GriddedField {
    pub fn new(
        domain: Domain,
        nx: usize,
        ny: usize,
        n_steps: usize,
        dt: f64,
        velocities: Vec<f32>,
    ) -> Result<Self, FieldError> {
        if nx < 2 || ny < 2 || n_steps < 2 {
            return Err(FieldError::Descriptor(format!(
                "grid needs at least 2 nodes per axis and 2 time slices, got {nx}x{ny}x{n_steps}"
            )));
        }
        if !(dt.is_finite() && dt > 0.0) {
            return Err(FieldError::Descriptor(format!("dt must be positive, got {dt}")));
        }
        let expected = n_steps * ny * nx * 2;
        if velocities.len() != expected {
            return Err(FieldError::SizeMismatch {
                expected: expected as u64 * 4,
                actual: velocities.len() as u64 * 4,
            });
        }
        if let Some(index) = velocities.iter().position(|v| !v.is_finite()) {
            return Err(FieldError::NonFinite { index });
        }
        Ok(Self { domain, nx, ny, n_steps, dt, velocities })
    }

    /// Samples `field` on an `nx × ny` vertex grid at `n_steps` slices spaced `dt`.
    pub fn sample_from<F: VectorField>(
        field: &F,
        domain: Domain,
        nx: usize,
        ny: usize,
        n_steps: usize,
        dt: f64,
    ) -> Result<Self, FieldError> {
        let mut velocities = Vec::with_capacity(n_steps * ny * nx * 2);
        for k in 0..n_steps {
            let t = k as f64 * dt;
            for j in 0..ny {
                for i in 0..nx {
                    let p = Self::node(&domain, nx, ny, i, j);
                    let v = field.velocity(p, t)?;
                    velocities.push(v.x as f32);
                    velocities.push(v.y as f32);
                }
            }
        }
        Self::new(domain, nx, ny, n_steps, dt, velocities)
    }

    fn node(domain: &Domain, nx: usize, ny: usize, i: usize, j: usize) -> Vec3 {
        Vec3::xy(
            domain.x_min + domain.width() * i as f64 / (nx - 1) as f64,
            domain.y_min + domain.height() * j as f64 / (ny - 1) as f64,
        )
    }

    pub fn nx(&self) -> usize {
        self.nx
    }

    pub fn ny(&self) -> usize {
        self.ny
    }

    pub fn n_steps(&self) -> usize {
        self.n_steps
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn t_max(&self) -> f64 {
        (self.n_steps - 1) as f64 * self.dt
    }

    pub fn velocities(&self) -> &[f32] {
        &self.velocities
    }

    /// Position of grid node `(i, j)`.
    pub fn node_position(&self, i: usize, j: usize) -> Vec3 {
        Self::node(&self.domain, self.nx, self.ny, i, j)
    }

    fn stored(&self, k: usize, j: usize, i: usize) -> (f64, f64) {
        let base = ((k * self.ny + j) * self.nx + i) * 2;
        (self.velocities[base] as f64, self.velocities[base + 1] as f64)
    }

    fn bilinear(&self, k: usize, i: usize, j: usize, wx: f64, wy: f64) -> (f64, f64) {
        let (u00, v00) = self.stored(k, j, i);
        let (u10, v10) = self.stored(k, j, i + 1);
        let (u01, v01) = self.stored(k, j + 1, i);
        let (u11, v11) = self.stored(k, j + 1, i + 1);
        let lerp = |a: f64, b: f64, w: f64| (1.0 - w) * a + w * b;
        (
            lerp(lerp(u00, u10, wx), lerp(u01, u11, wx), wy),
            lerp(lerp(v00, v10, wx), lerp(v01, v11, wx), wy),
        )
    }

    /// Cell index and fractional offset along one axis; `n` nodes over `[lo, hi]`.
    fn locate(coord: f64, lo: f64, hi: f64, n: usize) -> (usize, f64) {
        let f = (coord - lo) / (hi - lo) * (n - 1) as f64;
        let i = (f.floor() as usize).min(n - 2);
        (i, f - i as f64)
    }

    /// Bilinear in space, linear in time. Times within half a slice past the
    /// last slice are clamped to it.
    pub fn sample(&self, p: Vec3, t: f64) -> Result<Vec3, FieldError> {
        if !self.domain.contains(p) || !p.x.is_finite() || !p.y.is_finite() {
            return Err(FieldError::OutOfDomain { x: p.x, y: p.y });
        }
        let t_max = self.t_max();
        if !(t >= 0.0 && t <= t_max + 0.5 * self.dt) {
            return Err(FieldError::TimeOutOfRange { t, max: t_max });
        }
        let t = t.min(t_max);
        let d = &self.domain;
        let (i, wx) = Self::locate(p.x, d.x_min, d.x_max, self.nx);
        let (j, wy) = Self::locate(p.y, d.y_min, d.y_max, self.ny);
        let (k, wt) = Self::locate(t, 0.0, t_max, self.n_steps);
        let (u0, v0) = self.bilinear(k, i, j, wx, wy);
        if wt == 0.0 {
            return Ok(Vec3::new(u0, v0, 0.0));
        }
        let (u1, v1) = self.bilinear(k + 1, i, j, wx, wy);
        Ok(Vec3::new((1.0 - wt) * u0 + wt * u1, (1.0 - wt) * v0 + wt * v1, 0.0))
    }
}

impl VectorField for GriddedField {
    fn velocity(&self, p: Vec3, t: f64) -> Result<Vec3, FieldError> {
        self.sample(p, t)
    }

    fn domain(&self) -> Domain {
        self.domain
    }

    fn confines_particles(&self) -> bool {
        true
    }
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> FieldError + '_ {
    move |source| FieldError::Io { path: path.to_path_buf(), source }
}

fn parse_descriptor(text: &str) -> Result<HashMap<String, String>, FieldError> {
    let mut entries = HashMap::new();
    for (lineno, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (key, value) = line.split_once(':').ok_or_else(|| {
            FieldError::Descriptor(format!("line {}: expected `key: value`", lineno + 1))
        })?;
        entries.insert(key.trim().to_string(), value.trim().to_string());
    }
    Ok(entries)
}

fn required<T: std::str::FromStr>(
    entries: &HashMap<String, String>,
    key: &str,
) -> Result<T, FieldError> {
    let raw = entries
        .get(key)
        .ok_or_else(|| FieldError::Descriptor(format!("missing key `{key}`")))?;
    raw.parse()
        .map_err(|_| FieldError::Descriptor(format!("cannot parse `{key}` value {raw:?}")))
}

/// Loads a gridded field from its descriptor. A relative `blob_path` is
/// resolved against the descriptor's directory.
pub fn load_gridded_field(descriptor_path: impl AsRef<Path>) -> Result<GriddedField, FieldError> {
    let descriptor_path = descriptor_path.as_ref();
    let text = fs::read_to_string(descriptor_path).map_err(io_err(descriptor_path))?;
    let entries = parse_descriptor(&text)?;

    let nx: usize = required(&entries, "nx")?;
    let ny: usize = required(&entries, "ny")?;
    let n_steps: usize = required(&entries, "n_steps")?;
    let dt: f64 = required(&entries, "dt")?;
    let domain = Domain::new(
        required(&entries, "x_min")?,
        required(&entries, "x_max")?,
        required(&entries, "y_min")?,
        required(&entries, "y_max")?,
    )?;
    let blob: PathBuf = required::<String>(&entries, "blob_path")?.into();
    let blob = if blob.is_relative() {
        descriptor_path.parent().unwrap_or(Path::new(".")).join(blob)
    } else {
        blob
    };

    let bytes = fs::read(&blob).map_err(io_err(&blob))?;
    let expected = (n_steps * ny * nx * 2 * 4) as u64;
    if bytes.len() as u64 != expected {
        return Err(FieldError::SizeMismatch { expected, actual: bytes.len() as u64 });
    }
    let velocities = bytes
        .chunks_exact(4)
        .map(|c| f32::from_le_bytes([c[0], c[1], c[2], c[3]]))
        .collect();
    GriddedField::new(domain, nx, ny, n_steps, dt, velocities)
}

/// Writes `field` as a descriptor plus blob; the descriptor stores the blob's
/// file name relative to its own directory.
pub fn write_gridded_field(
    field: &GriddedField,
    descriptor_path: impl AsRef<Path>,
    blob_path: impl AsRef<Path>,
) -> Result<(), FieldError> {
    let descriptor_path = descriptor_path.as_ref();
    let blob_path = blob_path.as_ref();
    let mut blob = fs::File::create(blob_path).map_err(io_err(blob_path))?;
    let bytes: Vec<u8> = field.velocities.iter().flat_map(|v| v.to_le_bytes()).collect();
    blob.write_all(&bytes).map_err(io_err(blob_path))?;

    let blob_ref = match (blob_path.parent(), descriptor_path.parent()) {
        (Some(a), Some(b)) if a == b => PathBuf::from(blob_path.file_name().unwrap_or_default()),
        _ => blob_path.to_path_buf(),
    };
    let d = field.domain;
    let text = format!(
        "nx: {}\nny: {}\nn_steps: {}\ndt: {}\nx_min: {}\nx_max: {}\ny_min: {}\ny_max: {}\nblob_path: {}\n",
        field.nx,
        field.ny,
        field.n_steps,
        field.dt,
        d.x_min,
        d.x_max,
        d.y_min,
        d.y_max,
        blob_ref.display()
    );
    fs::write(descriptor_path, text).map_err(io_err(descriptor_path))
}
