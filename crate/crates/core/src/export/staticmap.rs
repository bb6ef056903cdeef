use crate::diffusion::{zone_color, zone_rgba, ZoneRaster};
use crate::model::{CulturalAffiliation, GeoPoint};
use crate::pngio;

const TARGET_PX: usize = 480;
const MAX_PX: usize = 2048;
const FRAME_W: usize = 480;
const FRAME_H: usize = 360;
const BACKGROUND: [u8; 3] = [0xf4, 0xf1, 0xea];
const OUTSIDE: [u8; 3] = [0xd6, 0xd3, 0xcc];
const OUTLINE: [u8; 3] = [0x20, 0x20, 0x20];
const MARKER_RADIUS: f64 = 3.5;

struct Canvas {
    w: usize,
    h: usize,
    px: Vec<u8>,
}

impl Canvas {
    fn filled(w: usize, h: usize, rgb: [u8; 3]) -> Self {
        let mut px = Vec::with_capacity(w * h * 4);
        for _ in 0..w * h {
            px.extend_from_slice(&[rgb[0], rgb[1], rgb[2], 255]);
        }
        Canvas { w, h, px }
    }

    fn put(&mut self, x: i64, y: i64, rgb: [u8; 3]) {
        if x >= 0 && y >= 0 && (x as usize) < self.w && (y as usize) < self.h {
            let o = (y as usize * self.w + x as usize) * 4;
            self.px[o..o + 3].copy_from_slice(&rgb);
        }
    }

    fn marker(&mut self, cx: f64, cy: f64, rgb: [u8; 3]) {
        let r = MARKER_RADIUS + 1.0;
        for y in (cy - r).floor() as i64..=(cy + r).ceil() as i64 {
            for x in (cx - r).floor() as i64..=(cx + r).ceil() as i64 {
                let d = ((x as f64 + 0.5 - cx).powi(2) + (y as f64 + 0.5 - cy).powi(2)).sqrt();
                if d <= MARKER_RADIUS {
                    self.put(x, y, rgb);
                } else if d <= r {
                    self.put(x, y, OUTLINE);
                }
            }
        }
    }

    fn png(&self) -> Vec<u8> {
        pngio::encode_rgba(self.w as u32, self.h as u32, &self.px)
    }
}

fn blend(under: [u8; 3], over: [u8; 4]) -> [u8; 3] {
    let a = over[3] as u32;
    std::array::from_fn(|k| ((over[k] as u32 * a + under[k] as u32 * (255 - a) + 127) / 255) as u8)
}

/// Renders points coloured by affiliation, over the zone raster when given.
pub fn render_static_map(points: &[(GeoPoint, CulturalAffiliation)], zones: Option<&ZoneRaster>) -> Vec<u8> {
    match zones {
        Some(z) => over_zones(points, z),
        None => plain(points),
    }
}

fn over_zones(points: &[(GeoPoint, CulturalAffiliation)], zones: &ZoneRaster) -> Vec<u8> {
    let grid = &zones.grid;
    let longest = grid.n_cols.max(grid.n_rows);
    let mut k = TARGET_PX.div_ceil(longest).max(1);
    while k > 1 && longest * k > MAX_PX {
        k -= 1;
    }
    let (w, h, rgba) = zone_rgba(zones);
    let (w, h) = (w as usize, h as usize);
    let mut canvas = Canvas::filled(w * k, h * k, BACKGROUND);
    for y in 0..h {
        let row = h - 1 - y;
        for x in 0..w {
            let i = row * w + x;
            let o = (y * w + x) * 4;
            let base = if zones.active[i] { BACKGROUND } else { OUTSIDE };
            let rgb = blend(base, [rgba[o], rgba[o + 1], rgba[o + 2], rgba[o + 3]]);
            for dy in 0..k {
                for dx in 0..k {
                    canvas.put((x * k + dx) as i64, (y * k + dy) as i64, rgb);
                }
            }
        }
    }
    let scale = k as f64 / grid.cell_size_m;
    let top = grid.n_rows as f64 * grid.cell_size_m;
    for (p, a) in points {
        let (x, y) = grid.project(p);
        canvas.marker(x * scale, (top - y) * scale, zone_color(*a));
    }
    canvas.png()
}

fn plain(points: &[(GeoPoint, CulturalAffiliation)]) -> Vec<u8> {
    let mut canvas = Canvas::filled(FRAME_W, FRAME_H, BACKGROUND);
    if points.is_empty() {
        return canvas.png();
    }
    let fold = |f: fn(f64, f64) -> f64, init: f64, g: fn(&GeoPoint) -> f64| {
        points.iter().map(|(p, _)| g(p)).fold(init, f)
    };
    let (min_lon, max_lon) = (fold(f64::min, f64::INFINITY, GeoPoint::lon), fold(f64::max, f64::NEG_INFINITY, GeoPoint::lon));
    let (min_lat, max_lat) = (fold(f64::min, f64::INFINITY, GeoPoint::lat), fold(f64::max, f64::NEG_INFINITY, GeoPoint::lat));
    let kx = ((min_lat + max_lat) / 2.0).to_radians().cos();
    let span_x = ((max_lon - min_lon) * kx).max(0.01);
    let span_y = (max_lat - min_lat).max(0.01);
    let margin = 24.0;
    let scale = ((FRAME_W as f64 - 2.0 * margin) / span_x).min((FRAME_H as f64 - 2.0 * margin) / span_y);
    let cx = (min_lon + max_lon) / 2.0;
    let cy = (min_lat + max_lat) / 2.0;
    for (p, a) in points {
        let x = FRAME_W as f64 / 2.0 + (p.lon() - cx) * kx * scale;
        let y = FRAME_H as f64 / 2.0 - (p.lat() - cy) * scale;
        canvas.marker(x, y, zone_color(*a));
    }
    canvas.png()
}
