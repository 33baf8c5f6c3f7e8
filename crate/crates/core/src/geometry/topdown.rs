use nalgebra::Vector3;
use serde::{Deserialize, Serialize};

use super::{CameraModel, GeometryError};
use crate::data::{DepthMap, Image};

/// Table-aligned region for orthographic top-down projection (world z is up).
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Workspace {
    pub x_range: [f64; 2],
    pub y_range: [f64; 2],
    pub table_height: f64,
    /// Meters per top-down pixel.
    pub topdown_resolution: f64,
}

impl Workspace {
    pub fn check(&self) -> Result<(), GeometryError> {
        let finite = [self.x_range[0], self.x_range[1], self.y_range[0], self.y_range[1], self.table_height]
            .iter()
            .all(|v| v.is_finite());
        if !finite {
            return Err(GeometryError::InvalidWorkspace("non-finite bounds".into()));
        }
        if !(self.x_range[0] < self.x_range[1] && self.y_range[0] < self.y_range[1]) {
            return Err(GeometryError::InvalidWorkspace("empty x or y range".into()));
        }
        if !(self.topdown_resolution > 0.0 && self.topdown_resolution.is_finite()) {
            return Err(GeometryError::InvalidWorkspace("resolution must be positive".into()));
        }
        Ok(())
    }

    /// Grid size `(columns, rows)`; columns run along x, rows along y.
    pub fn grid_dims(&self) -> (u32, u32) {
        let cells = |lo: f64, hi: f64| (((hi - lo) / self.topdown_resolution) - 1e-9).ceil().max(1.0) as u32;
        (cells(self.x_range[0], self.x_range[1]), cells(self.y_range[0], self.y_range[1]))
    }

    pub fn contains_xy(&self, x: f64, y: f64) -> bool {
        (self.x_range[0]..=self.x_range[1]).contains(&x) && (self.y_range[0]..=self.y_range[1]).contains(&y)
    }

    /// Grid cell of a world `(x, y)`, if inside the grid.
    pub fn cell_of(&self, x: f64, y: f64) -> Option<(u32, u32)> {
        if !self.contains_xy(x, y) {
            return None;
        }
        let (w, h) = self.grid_dims();
        let c = ((x - self.x_range[0]) / self.topdown_resolution).floor() as u32;
        let r = ((y - self.y_range[0]) / self.topdown_resolution).floor() as u32;
        Some((c.min(w - 1), r.min(h - 1)))
    }

    /// World `(x, y)` of a cell center.
    pub fn cell_center(&self, col: u32, row: u32) -> (f64, f64) {
        (
            self.x_range[0] + (col as f64 + 0.5) * self.topdown_resolution,
            self.y_range[0] + (row as f64 + 0.5) * self.topdown_resolution,
        )
    }
}

/// Height above the table per top-down cell; `None` where nothing was observed.
#[derive(Clone, Debug, PartialEq)]
pub struct Heightmap {
    width: u32,
    height: u32,
    cells: Vec<Option<f64>>,
}

impl Heightmap {
    pub fn empty(width: u32, height: u32) -> Self {
        Self { width, height, cells: vec![None; width as usize * height as usize] }
    }

    pub fn width(&self) -> u32 {
        self.width
    }

    pub fn height(&self) -> u32 {
        self.height
    }

    pub fn get(&self, col: u32, row: u32) -> Option<f64> {
        self.cells[row as usize * self.width as usize + col as usize]
    }

    pub fn set(&mut self, col: u32, row: u32, h: Option<f64>) {
        self.cells[row as usize * self.width as usize + col as usize] = h;
    }

    pub fn cells(&self) -> &[Option<f64>] {
        &self.cells
    }

    pub fn covered(&self) -> usize {
        self.cells.iter().filter(|c| c.is_some()).count()
    }
}

#[derive(Clone, Debug)]
pub struct TopDown {
    /// Color of the highest point per cell; black where uncovered.
    pub image: Image,
    pub heightmap: Heightmap,
    pub warnings: Vec<String>,
}

/// Back-projects every valid depth pixel and splats it onto the workspace grid, highest point wins.
pub fn project_topdown(
    rgb: &Image,
    depth: &DepthMap,
    camera: &CameraModel,
    ws: &Workspace,
) -> Result<TopDown, GeometryError> {
    if rgb.dims() != depth.dims() {
        return Err(GeometryError::DimensionMismatch(format!(
            "image {:?} vs depth {:?}",
            rgb.dims(),
            depth.dims()
        )));
    }
    ws.check()?;
    camera.check()?;
    let (gw, gh) = ws.grid_dims();
    let mut image = Image::filled(gw, gh, [0, 0, 0]);
    let mut heightmap = Heightmap::empty(gw, gh);
    for y in 0..depth.height() {
        for x in 0..depth.width() {
            let Some(d) = depth.valid(x, y) else { continue };
            let p = camera.unproject(x as f64 + 0.5, y as f64 + 0.5, d as f64);
            let Some((c, r)) = ws.cell_of(p.x, p.y) else { continue };
            let h = p.z - ws.table_height;
            if heightmap.get(c, r).is_none_or(|prev| h > prev) {
                heightmap.set(c, r, Some(h));
                image.set_pixel(c, r, rgb.pixel(x, y));
            }
        }
    }
    let mut warnings = Vec::new();
    if heightmap.covered() == 0 {
        let msg = "no depth sample falls inside the workspace".to_string();
        log::warn!("{msg}");
        warnings.push(msg);
    }
    Ok(TopDown { image, heightmap, warnings })
}

/// World point at the center of cell `(col, row)`, at the cell's observed height.
pub fn topdown_pixel_to_world(
    col: i64,
    row: i64,
    heightmap: &Heightmap,
    ws: &Workspace,
) -> Result<Vector3<f64>, GeometryError> {
    let (w, h) = (heightmap.width(), heightmap.height());
    if col < 0 || row < 0 || col >= w as i64 || row >= h as i64 {
        return Err(GeometryError::OutOfGrid { x: col, y: row, width: w, height: h });
    }
    let (col, row) = (col as u32, row as u32);
    let height = heightmap.get(col, row).ok_or(GeometryError::InvalidCell { x: col, y: row })?;
    let (x, y) = ws.cell_center(col, row);
    Ok(Vector3::new(x, y, ws.table_height + height))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn unit_ws() -> Workspace {
        Workspace { x_range: [0.0, 1.0], y_range: [0.0, 1.0], table_height: 0.2, topdown_resolution: 0.01 }
    }

    #[test]
    fn grid_is_exact_for_even_division() {
        assert_eq!(unit_ws().grid_dims(), (100, 100));
    }

    #[test]
    fn cell_center_of_origin() {
        let ws = unit_ws();
        let mut hm = Heightmap::empty(100, 100);
        hm.set(0, 0, Some(0.0));
        let p = topdown_pixel_to_world(0, 0, &hm, &ws).unwrap();
        assert!((p - Vector3::new(0.005, 0.005, 0.2)).norm() < 1e-12);
    }

    #[test]
    fn outside_grid_and_empty_cell_are_errors() {
        let ws = unit_ws();
        let hm = Heightmap::empty(100, 100);
        assert!(matches!(topdown_pixel_to_world(100, 0, &hm, &ws), Err(GeometryError::OutOfGrid { .. })));
        assert!(matches!(topdown_pixel_to_world(-1, 0, &hm, &ws), Err(GeometryError::OutOfGrid { .. })));
        assert!(matches!(topdown_pixel_to_world(3, 3, &hm, &ws), Err(GeometryError::InvalidCell { .. })));
    }

    #[test]
    fn all_invalid_depth_gives_empty_topdown() {
        let cam = CameraModel::new(50.0, 50.0, 16.0, 16.0, crate::geometry::RigidTransform::identity()).unwrap();
        let td = project_topdown(&Image::filled(32, 32, [9, 9, 9]), &DepthMap::invalid(32, 32), &cam, &unit_ws()).unwrap();
        assert_eq!(td.heightmap.covered(), 0);
        assert!(td.image.as_bytes().iter().all(|&b| b == 0));
        assert_eq!(td.warnings.len(), 1);
    }
}
