//! Camera records, CSV parsing, and pinhole pose/intrinsics construction.
//!
//! Conventions (shared with the simulator so they cancel internally):
//! - Euler angles are applied as intrinsic Z*Y*X (world_from_camera =
//!   Rz(rz) * Ry(ry) * Rx(rx)), matching common DCC-tool exports.
//! - The camera looks down its local -Z axis with +Y up.
//! - Principal point at the image center; no distortion.

use crate::error::{Error, Result};

pub const CAMERA_CSV_HEADER: [&str; 10] = [
    "Camera Name",
    "Position X",
    "Position Y",
    "Position Z",
    "Rotation X",
    "Rotation Y",
    "Rotation Z",
    "Focal Length",
    "Horizontal Aperture",
    "Vertical Aperture",
];

#[derive(Debug, Clone, PartialEq)]
pub struct CameraRecord {
    pub name: String,
    pub position: [f64; 3],
    pub rotation_euler_deg: [f64; 3],
    pub focal_length_mm: f64,
    pub horizontal_aperture_mm: f64,
    pub vertical_aperture_mm: f64,
}

/// Pixel-space intrinsics for a given image size.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Intrinsics {
    pub fx: f64,
    pub fy: f64,
    pub cx: f64,
    pub cy: f64,
    pub width: usize,
    pub height: usize,
}

/// Row-major 3x3 rotation plus translation; maps camera coordinates to world.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CameraPose {
    pub rotation: [[f64; 3]; 3],
    pub position: [f64; 3],
}

impl CameraPose {
    pub fn rotate(&self, v: [f64; 3]) -> [f64; 3] {
        let r = &self.rotation;
        [
            r[0][0] * v[0] + r[0][1] * v[1] + r[0][2] * v[2],
            r[1][0] * v[0] + r[1][1] * v[1] + r[1][2] * v[2],
            r[2][0] * v[0] + r[2][1] * v[1] + r[2][2] * v[2],
        ]
    }

    /// Inverse rotation (transpose) applied to a world-space vector.
    pub fn rotate_inv(&self, v: [f64; 3]) -> [f64; 3] {
        let r = &self.rotation;
        [
            r[0][0] * v[0] + r[1][0] * v[1] + r[2][0] * v[2],
            r[0][1] * v[0] + r[1][1] * v[1] + r[2][1] * v[2],
            r[0][2] * v[0] + r[1][2] * v[1] + r[2][2] * v[2],
        ]
    }

    /// World point to camera coordinates.
    pub fn world_to_camera(&self, p: [f64; 3]) -> [f64; 3] {
        self.rotate_inv([
            p[0] - self.position[0],
            p[1] - self.position[1],
            p[2] - self.position[2],
        ])
    }

    /// Unit vector the camera looks along (local -Z in world frame).
    pub fn forward(&self) -> [f64; 3] {
        let r = &self.rotation;
        [-r[0][2], -r[1][2], -r[2][2]]
    }

    /// Homogeneous 4x4 world_from_camera matrix.
    pub fn matrix(&self) -> [[f64; 4]; 4] {
        let r = &self.rotation;
        [
            [r[0][0], r[0][1], r[0][2], self.position[0]],
            [r[1][0], r[1][1], r[1][2], self.position[1]],
            [r[2][0], r[2][1], r[2][2], self.position[2]],
            [0.0, 0.0, 0.0, 1.0],
        ]
    }
}

fn rot_x(a: f64) -> [[f64; 3]; 3] {
    let (s, c) = a.sin_cos();
    [[1.0, 0.0, 0.0], [0.0, c, -s], [0.0, s, c]]
}

fn rot_y(a: f64) -> [[f64; 3]; 3] {
    let (s, c) = a.sin_cos();
    [[c, 0.0, s], [0.0, 1.0, 0.0], [-s, 0.0, c]]
}

fn rot_z(a: f64) -> [[f64; 3]; 3] {
    let (s, c) = a.sin_cos();
    [[c, -s, 0.0], [s, c, 0.0], [0.0, 0.0, 1.0]]
}

fn mat_mul(a: [[f64; 3]; 3], b: [[f64; 3]; 3]) -> [[f64; 3]; 3] {
    let mut out = [[0.0; 3]; 3];
    for i in 0..3 {
        for j in 0..3 {
            for k in 0..3 {
                out[i][j] += a[i][k] * b[k][j];
            }
        }
    }
    out
}

pub fn rotation_from_euler_deg(deg: [f64; 3]) -> [[f64; 3]; 3] {
    let r = deg.map(|d| d.to_radians());
    mat_mul(rot_z(r[2]), mat_mul(rot_y(r[1]), rot_x(r[0])))
}

/// Recovers Z*Y*X Euler angles (degrees) from a rotation matrix. Used by the
/// simulator to emit camera CSVs from look-at matrices.
pub fn euler_deg_from_rotation(r: &[[f64; 3]; 3]) -> [f64; 3] {
    // r = Rz * Ry * Rx => r[2][0] = -sin(ry)
    let ry = (-r[2][0]).asin();
    let (rx, rz) = if r[2][0].abs() < 1.0 - 1e-9 {
        (r[2][1].atan2(r[2][2]), r[1][0].atan2(r[0][0]))
    } else {
        // Gimbal lock: fold the X rotation into Z.
        (0.0, (-r[0][1]).atan2(r[1][1]))
    };
    [rx.to_degrees(), ry.to_degrees(), rz.to_degrees()]
}

impl CameraRecord {
    pub fn validate(&self) -> Result<()> {
        if !(self.focal_length_mm > 0.0) {
            return Err(Error::InvalidCamera(format!(
                "{}: focal length must be positive",
                self.name
            )));
        }
        if !(self.horizontal_aperture_mm > 0.0) || !(self.vertical_aperture_mm > 0.0) {
            return Err(Error::InvalidCamera(format!(
                "{}: apertures must be positive",
                self.name
            )));
        }
        if self.rotation_euler_deg.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidCamera(format!(
                "{}: rotation must be finite",
                self.name
            )));
        }
        Ok(())
    }

    pub fn pose(&self) -> CameraPose {
        CameraPose {
            rotation: rotation_from_euler_deg(self.rotation_euler_deg),
            position: self.position,
        }
    }

    /// Pixel intrinsics for an image of the given size.
    pub fn intrinsics(&self, height: usize, width: usize) -> Result<Intrinsics> {
        self.validate()?;
        Ok(Intrinsics {
            fx: self.focal_length_mm * width as f64 / self.horizontal_aperture_mm,
            fy: self.focal_length_mm * height as f64 / self.vertical_aperture_mm,
            cx: width as f64 / 2.0,
            cy: height as f64 / 2.0,
            width,
            height,
        })
    }
}

/// Full pose + intrinsics pair, precomputed per view.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Camera {
    pub pose: CameraPose,
    pub intr: Intrinsics,
}

impl Camera {
    pub fn from_record(rec: &CameraRecord, height: usize, width: usize) -> Result<Self> {
        Ok(Camera {
            pose: rec.pose(),
            intr: rec.intrinsics(height, width)?,
        })
    }

    /// World-space unit ray direction through a (possibly fractional) pixel
    /// position, `(row + 0.5, col + 0.5)` being the pixel center.
    pub fn ray_direction(&self, row: f64, col: f64) -> [f64; 3] {
        let x = (col - self.intr.cx) / self.intr.fx;
        let y = -(row - self.intr.cy) / self.intr.fy;
        let d = self.pose.rotate([x, y, -1.0]);
        let n = (d[0] * d[0] + d[1] * d[1] + d[2] * d[2]).sqrt();
        [d[0] / n, d[1] / n, d[2] / n]
    }

    /// Projects a world point to pixel coordinates `(row, col)` plus the
    /// euclidean distance from the camera. Points behind the camera return
    /// a negative depth.
    pub fn project(&self, p: [f64; 3]) -> ([f64; 2], f64) {
        let c = self.pose.world_to_camera(p);
        let dist = (c[0] * c[0] + c[1] * c[1] + c[2] * c[2]).sqrt();
        if c[2] >= 0.0 {
            return ([f64::NAN, f64::NAN], -dist);
        }
        let z = -c[2];
        let col = self.intr.cx + self.intr.fx * c[0] / z;
        let row = self.intr.cy - self.intr.fy * c[1] / z;
        ([row, col], dist)
    }
}

pub fn parse_camera_csv(text: &str) -> Result<Vec<CameraRecord>> {
    let mut reader = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes());
    let headers = reader
        .headers()
        .map_err(|e| Error::SceneLoad(format!("camera CSV: {e}")))?
        .clone();
    let mut col_index = [0usize; 10];
    for (i, name) in CAMERA_CSV_HEADER.iter().enumerate() {
        col_index[i] = headers
            .iter()
            .position(|h| h == *name)
            .ok_or_else(|| Error::MissingColumn(name.to_string()))?;
    }
    let parse_field = |row: usize, field: &str, value: &str| -> Result<f64> {
        value.parse::<f64>().map_err(|_| Error::CsvParse {
            row,
            field: field.to_string(),
            value: value.to_string(),
        })
    };
    let mut records = Vec::new();
    for (row_idx, row) in reader.records().enumerate() {
        let row = row.map_err(|e| Error::SceneLoad(format!("camera CSV row {row_idx}: {e}")))?;
        let get = |i: usize| row.get(col_index[i]).unwrap_or("");
        let mut nums = [0.0; 9];
        for (slot, num) in nums.iter_mut().enumerate() {
            *num = parse_field(row_idx, CAMERA_CSV_HEADER[slot + 1], get(slot + 1))?;
        }
        records.push(CameraRecord {
            name: get(0).to_string(),
            position: [nums[0], nums[1], nums[2]],
            rotation_euler_deg: [nums[3], nums[4], nums[5]],
            focal_length_mm: nums[6],
            horizontal_aperture_mm: nums[7],
            vertical_aperture_mm: nums[8],
        });
    }
    Ok(records)
}

pub fn serialize_camera_csv(records: &[CameraRecord]) -> String {
    let mut out = CAMERA_CSV_HEADER.join(",");
    out.push('\n');
    for rec in records {
        out.push_str(&format!(
            "{},{},{},{},{},{},{},{},{},{}\n",
            rec.name,
            rec.position[0],
            rec.position[1],
            rec.position[2],
            rec.rotation_euler_deg[0],
            rec.rotation_euler_deg[1],
            rec.rotation_euler_deg[2],
            rec.focal_length_mm,
            rec.horizontal_aperture_mm,
            rec.vertical_aperture_mm
        ));
    }
    out
}
