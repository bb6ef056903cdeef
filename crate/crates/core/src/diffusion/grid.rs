use serde::{Deserialize, Serialize};

use super::DiffusionError;
use crate::facet::BBox;
use crate::model::GeoPoint;

/// Mean Earth radius in meters (IUGG).
const EARTH_RADIUS_M: f64 = 6_371_008.8;

pub const DEFAULT_CELL_CAP: usize = 4_000_000;

/// Regular grid in a local equirectangular projection. Row 0 is the southern
/// edge; cell `(col, row)` is stored at `row * n_cols + col`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    /// South-west corner.
    pub origin: GeoPoint,
    pub cell_size_m: f64,
    pub n_cols: usize,
    pub n_rows: usize,
    /// Latitude the projection is scaled about (mean latitude of the domain).
    pub ref_lat: f64,
}

impl GridSpec {
    pub fn cell_count(&self) -> usize {
        self.n_cols * self.n_rows
    }

    fn m_per_deg_lat() -> f64 {
        EARTH_RADIUS_M * std::f64::consts::PI / 180.0
    }

    fn m_per_deg_lon(&self) -> f64 {
        Self::m_per_deg_lat() * self.ref_lat.to_radians().cos()
    }

    /// Meters east and north of the origin.
    pub fn project(&self, p: &GeoPoint) -> (f64, f64) {
        (
            (p.lon() - self.origin.lon()) * self.m_per_deg_lon(),
            (p.lat() - self.origin.lat()) * Self::m_per_deg_lat(),
        )
    }

    /// Inverse of [`project`](Self::project), returning `(lat, lon)`.
    pub fn unproject(&self, x: f64, y: f64) -> (f64, f64) {
        (
            self.origin.lat() + y / Self::m_per_deg_lat(),
            self.origin.lon() + x / self.m_per_deg_lon(),
        )
    }

    pub fn cell_center(&self, col: usize, row: usize) -> (f64, f64) {
        ((col as f64 + 0.5) * self.cell_size_m, (row as f64 + 0.5) * self.cell_size_m)
    }

    /// Cell containing a projected point, if it lies on the grid.
    pub fn cell_of(&self, x: f64, y: f64) -> Option<usize> {
        let col = (x / self.cell_size_m).floor();
        let row = (y / self.cell_size_m).floor();
        if col < 0.0 || row < 0.0 || col >= self.n_cols as f64 || row >= self.n_rows as f64 {
            return None;
        }
        Some(row as usize * self.n_cols + col as usize)
    }

    /// Cell size in degrees `(lon, lat)`.
    pub fn cell_size_deg(&self) -> (f64, f64) {
        (self.cell_size_m / self.m_per_deg_lon(), self.cell_size_m / Self::m_per_deg_lat())
    }
}

/// Closed, simple polygon ring bounding the analysed area.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BarrierPolygon {
    ring: Vec<GeoPoint>,
}

impl BarrierPolygon {
    pub fn new(ring: Vec<GeoPoint>) -> Result<Self, DiffusionError> {
        if ring.len() < 4 {
            return Err(DiffusionError::InvalidBarrier(format!(
                "ring needs at least 4 points including closure, got {}",
                ring.len()
            )));
        }
        if ring.first() != ring.last() {
            return Err(DiffusionError::InvalidBarrier("ring is not closed".into()));
        }
        let pts: Vec<(f64, f64)> = ring.iter().map(|p| (p.lon(), p.lat())).collect();
        if let Some(i) = pts.windows(2).position(|w| w[0] == w[1]) {
            return Err(DiffusionError::InvalidBarrier(format!(
                "repeated consecutive vertex at position {i}"
            )));
        }
        check_simple(&pts)?;
        Ok(BarrierPolygon { ring })
    }

    pub fn ring(&self) -> &[GeoPoint] {
        &self.ring
    }

    pub fn bbox(&self) -> BBox {
        let mut b = BBox {
            min_lon: f64::INFINITY,
            min_lat: f64::INFINITY,
            max_lon: f64::NEG_INFINITY,
            max_lat: f64::NEG_INFINITY,
        };
        for p in &self.ring {
            b.min_lon = b.min_lon.min(p.lon());
            b.min_lat = b.min_lat.min(p.lat());
            b.max_lon = b.max_lon.max(p.lon());
            b.max_lat = b.max_lat.max(p.lat());
        }
        b
    }

    /// Reads the single exterior ring of a GeoJSON Polygon. Accepts a bare
    /// geometry, a Feature, or a FeatureCollection holding one Feature.
    pub fn from_geojson(text: &str) -> Result<Self, DiffusionError> {
        let bad = |m: &str| DiffusionError::InvalidBarrier(m.to_string());
        let v: serde_json::Value =
            serde_json::from_str(text).map_err(|e| bad(&format!("not JSON: {e}")))?;
        let geometry = match v["type"].as_str() {
            Some("Polygon") => &v,
            Some("Feature") => &v["geometry"],
            Some("FeatureCollection") => match v["features"].as_array().map(Vec::as_slice) {
                Some([one]) => &one["geometry"],
                _ => return Err(bad("FeatureCollection must hold exactly one feature")),
            },
            _ => return Err(bad("expected a Polygon geometry")),
        };
        if geometry["type"] != "Polygon" {
            return Err(bad("expected a Polygon geometry"));
        }
        let rings = geometry["coordinates"]
            .as_array()
            .ok_or_else(|| bad("missing coordinates"))?;
        let [ring] = rings.as_slice() else {
            return Err(bad("barrier must be a single ring without holes"));
        };
        let points = ring
            .as_array()
            .ok_or_else(|| bad("ring is not an array"))?
            .iter()
            .map(|pos| {
                let lon = pos[0].as_f64().ok_or_else(|| bad("position is not numeric"))?;
                let lat = pos[1].as_f64().ok_or_else(|| bad("position is not numeric"))?;
                GeoPoint::new(lat, lon).map_err(|e| bad(&e.to_string()))
            })
            .collect::<Result<Vec<_>, _>>()?;
        Self::new(points)
    }

    pub fn to_geojson(&self) -> String {
        let coords: Vec<[f64; 2]> = self.ring.iter().map(|p| [p.lon(), p.lat()]).collect();
        let v = serde_json::json!({
            "type": "Feature",
            "properties": {},
            "geometry": { "type": "Polygon", "coordinates": [coords] }
        });
        String::from_utf8(crate::feeds::to_json_bytes(&v)).expect("utf8 json")
    }
}

fn orient(a: (f64, f64), b: (f64, f64), c: (f64, f64)) -> f64 {
    (b.0 - a.0) * (c.1 - a.1) - (b.1 - a.1) * (c.0 - a.0)
}

fn on_segment(a: (f64, f64), b: (f64, f64), p: (f64, f64)) -> bool {
    p.0 >= a.0.min(b.0) && p.0 <= a.0.max(b.0) && p.1 >= a.1.min(b.1) && p.1 <= a.1.max(b.1)
}

fn segments_touch(a: (f64, f64), b: (f64, f64), c: (f64, f64), d: (f64, f64)) -> bool {
    let (o1, o2, o3, o4) = (orient(a, b, c), orient(a, b, d), orient(c, d, a), orient(c, d, b));
    if o1 * o2 < 0.0 && o3 * o4 < 0.0 {
        return true;
    }
    (o1 == 0.0 && on_segment(a, b, c))
        || (o2 == 0.0 && on_segment(a, b, d))
        || (o3 == 0.0 && on_segment(c, d, a))
        || (o4 == 0.0 && on_segment(c, d, b))
}

fn check_simple(pts: &[(f64, f64)]) -> Result<(), DiffusionError> {
    let n = pts.len() - 1;
    for i in 0..n {
        for j in i + 1..n {
            let adjacent = j == i + 1 || (i == 0 && j == n - 1);
            if adjacent {
                // Neighbouring edges share a vertex; they only conflict when
                // they fold back over each other.
                let (shared, a, b) = if j == i + 1 {
                    (pts[j], pts[i], pts[j + 1])
                } else {
                    (pts[i], pts[i + 1], pts[j])
                };
                if orient(shared, a, b) == 0.0
                    && (a.0 - shared.0) * (b.0 - shared.0) + (a.1 - shared.1) * (b.1 - shared.1) > 0.0
                {
                    return Err(DiffusionError::InvalidBarrier(format!(
                        "edges {i} and {j} overlap"
                    )));
                }
                continue;
            }
            if segments_touch(pts[i], pts[i + 1], pts[j], pts[j + 1]) {
                return Err(DiffusionError::InvalidBarrier(format!(
                    "ring is not simple: edges {i} and {j} intersect"
                )));
            }
        }
    }
    Ok(())
}

/// Builds the grid covering `bbox` and marks cells whose centers fall inside
/// the barrier ring under the even-odd rule.
pub fn rasterize(
    bbox: &BBox,
    barrier: &BarrierPolygon,
    cell_size_m: f64,
    cell_cap: usize,
) -> Result<(GridSpec, Vec<bool>), DiffusionError> {
    bbox.validate().map_err(|e| DiffusionError::InvalidDomain(e.to_string()))?;
    if !(cell_size_m.is_finite() && cell_size_m > 0.0) {
        return Err(DiffusionError::InvalidDomain(format!("cell size {cell_size_m} must be positive")));
    }
    let bb = barrier.bbox();
    if bb.min_lon < bbox.min_lon
        || bb.max_lon > bbox.max_lon
        || bb.min_lat < bbox.min_lat
        || bb.max_lat > bbox.max_lat
    {
        return Err(DiffusionError::InvalidDomain("barrier extends beyond the domain bbox".into()));
    }
    let origin = GeoPoint::new(bbox.min_lat, bbox.min_lon)
        .map_err(|e| DiffusionError::InvalidDomain(e.to_string()))?;
    let mut grid = GridSpec {
        origin,
        cell_size_m,
        n_cols: 0,
        n_rows: 0,
        ref_lat: (bbox.min_lat + bbox.max_lat) / 2.0,
    };
    let (width, height) = (
        (bbox.max_lon - bbox.min_lon) * grid.m_per_deg_lon(),
        (bbox.max_lat - bbox.min_lat) * GridSpec::m_per_deg_lat(),
    );
    let cols = (width / cell_size_m).ceil().max(1.0);
    let rows = (height / cell_size_m).ceil().max(1.0);
    if cols * rows > cell_cap as f64 {
        return Err(DiffusionError::CellCapExceeded { cells: (cols * rows) as u64, cap: cell_cap });
    }
    grid.n_cols = cols as usize;
    grid.n_rows = rows as usize;

    let ring: Vec<(f64, f64)> = barrier.ring().iter().map(|p| grid.project(p)).collect();
    let mut mask = vec![false; grid.cell_count()];
    let mut crossings = Vec::new();
    for row in 0..grid.n_rows {
        let yc = (row as f64 + 0.5) * cell_size_m;
        crossings.clear();
        for e in ring.windows(2) {
            let ((x1, y1), (x2, y2)) = (e[0], e[1]);
            if (y1 > yc) != (y2 > yc) {
                crossings.push(x1 + (yc - y1) * (x2 - x1) / (y2 - y1));
            }
        }
        crossings.sort_by(f64::total_cmp);
        // Walking west to east, a center is inside when an odd number of
        // crossings lie strictly east of it.
        let mut k = 0;
        for col in 0..grid.n_cols {
            let xc = (col as f64 + 0.5) * cell_size_m;
            while k < crossings.len() && crossings[k] <= xc {
                k += 1;
            }
            mask[row * grid.n_cols + col] = (crossings.len() - k) % 2 == 1;
        }
    }
    Ok((grid, mask))
}
