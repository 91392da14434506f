use crate::dataset::camera::Camera;
use crate::dataset::SceneDataset;
use crate::error::{Error, Result};

/// A single camera ray through a pixel center.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Ray {
    pub origin: [f64; 3],
    pub direction: [f64; 3],
    pub pixel_coord: (usize, usize),
    pub view_index: usize,
}

pub fn ray_for_pixel(camera: &Camera, view_index: usize, row: usize, col: usize) -> Ray {
    Ray {
        origin: camera.pose.position,
        direction: camera.ray_direction(row as f64 + 0.5, col as f64 + 0.5),
        pixel_coord: (row, col),
        view_index,
    }
}

/// All `h*w` rays of one view, row-major.
pub fn generate_rays(dataset: &SceneDataset, view_index: usize) -> Result<Vec<Ray>> {
    if view_index >= dataset.views.len() {
        return Err(Error::ViewIndex {
            index: view_index,
            count: dataset.views.len(),
        });
    }
    let (h, w) = dataset.image_size();
    let camera = dataset.camera(view_index)?;
    let mut rays = Vec::with_capacity(h * w);
    for row in 0..h {
        for col in 0..w {
            rays.push(ray_for_pixel(&camera, view_index, row, col));
        }
    }
    Ok(rays)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::camera::CameraRecord;
    use crate::dataset::SceneDataset;
    use ndarray::Array3;

    fn dataset_with(records: Vec<CameraRecord>, h: usize, w: usize) -> SceneDataset {
        let views = records
            .into_iter()
            .map(|rec| (Array3::zeros((h, w, 3)), rec))
            .collect();
        SceneDataset::new(views, None, None, None, (2.0, 6.0)).unwrap()
    }

    fn record(position: [f64; 3], rotation: [f64; 3]) -> CameraRecord {
        CameraRecord {
            name: "cam".into(),
            position,
            rotation_euler_deg: rotation,
            focal_length_mm: 35.0,
            horizontal_aperture_mm: 36.0,
            vertical_aperture_mm: 36.0,
        }
    }

    #[test]
    fn identity_pose_center_pixel_looks_forward() {
        // Odd size so a pixel center coincides with the principal point.
        let ds = dataset_with(
            vec![record([0.0, 0.0, 5.0], [0.0, 0.0, 0.0]), record([0.0, 0.0, 5.0], [0.0, 0.0, 0.0])],
            9,
            9,
        );
        let rays = generate_rays(&ds, 0).unwrap();
        let center = &rays[4 * 9 + 4];
        let fwd = ds.camera(0).unwrap().pose.forward();
        for k in 0..3 {
            assert!((center.direction[k] - fwd[k]).abs() < 1e-6);
        }
        assert_eq!(center.pixel_coord, (4, 4));
    }

    #[test]
    fn all_rays_unit_norm_and_counted() {
        let ds = dataset_with(
            vec![
                record([1.0, 2.0, 3.0], [15.0, -30.0, 80.0]),
                record([0.0, 0.0, 5.0], [0.0, 0.0, 0.0]),
            ],
            6,
            7,
        );
        let rays = generate_rays(&ds, 0).unwrap();
        assert_eq!(rays.len(), 42);
        for ray in &rays {
            let n: f64 = ray.direction.iter().map(|v| v * v).sum::<f64>().sqrt();
            assert!((n - 1.0).abs() < 1e-6);
            assert_eq!(ray.origin, [1.0, 2.0, 3.0]);
        }
    }

    #[test]
    fn mirrored_cameras_give_antiparallel_center_rays() {
        let ds = dataset_with(
            vec![
                record([0.0, 0.0, 5.0], [0.0, 0.0, 0.0]),
                record([0.0, 0.0, -5.0], [0.0, 180.0, 0.0]),
            ],
            9,
            9,
        );
        let a = &generate_rays(&ds, 0).unwrap()[4 * 9 + 4];
        let b = &generate_rays(&ds, 1).unwrap()[4 * 9 + 4];
        let dot: f64 = (0..3).map(|k| a.direction[k] * b.direction[k]).sum();
        assert!((dot + 1.0).abs() < 1e-6, "dot={dot}");
    }

    #[test]
    fn out_of_range_view_errors() {
        let ds = dataset_with(
            vec![record([0.0; 3], [0.0; 3]), record([0.0; 3], [0.0; 3])],
            4,
            4,
        );
        assert!(matches!(
            generate_rays(&ds, 2),
            Err(Error::ViewIndex { index: 2, count: 2 })
        ));
    }
}
