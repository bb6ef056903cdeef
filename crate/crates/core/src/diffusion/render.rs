use serde::{Deserialize, Serialize};

use super::{DiffusionParams, GridSpec, ZoneRaster};
use crate::model::CulturalAffiliation;
use crate::pngio;

/// Max-probability thresholds separating the opacity bands.
pub const BAND_THRESHOLDS: [f64; 5] = [0.5, 0.6, 0.7, 0.8, 0.9];
const BAND_ALPHA: [u8; 6] = [64, 102, 140, 178, 216, 255];

pub fn zone_color(a: CulturalAffiliation) -> [u8; 3] {
    match a {
        CulturalAffiliation::Polis => [0x1f, 0x4f, 0xff],
        CulturalAffiliation::Mesogeia => [0xff, 0x9f, 0x1f],
        CulturalAffiliation::Hinterland => [0xe0, 0x20, 0x20],
    }
}

fn band_alpha(max_prob: f64) -> u8 {
    BAND_ALPHA[BAND_THRESHOLDS.iter().filter(|&&t| max_prob >= t).count()]
}

/// RGBA pixels, one per cell, north row first. NoData is fully transparent.
pub fn zone_rgba(zones: &ZoneRaster) -> (u32, u32, Vec<u8>) {
    let (w, h) = (zones.grid.n_cols, zones.grid.n_rows);
    let mut px = vec![0u8; w * h * 4];
    for row in 0..h {
        let out_row = h - 1 - row;
        for col in 0..w {
            let i = row * w + col;
            if let Some(a) = zones.zone[i] {
                let [r, g, b] = zone_color(a);
                let o = (out_row * w + col) * 4;
                px[o..o + 4].copy_from_slice(&[r, g, b, band_alpha(zones.max_prob[i])]);
            }
        }
    }
    (w as u32, h as u32, px)
}

pub fn render_zone_png(zones: &ZoneRaster) -> Vec<u8> {
    let (w, h, px) = zone_rgba(zones);
    pngio::encode_rgba(w, h, &px)
}

/// Six-line world file georeferencing the PNG in degrees: pixel sizes, zero
/// rotation terms, and the center of the upper-left pixel.
pub fn world_file(grid: &GridSpec) -> String {
    let (dx, dy) = grid.cell_size_deg();
    let (x, y) = grid.cell_center(0, grid.n_rows - 1);
    let (lat, lon) = grid.unproject(x, y);
    format!("{dx}\n0\n0\n{}\n{lon}\n{lat}\n", -dy)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LegendEntry {
    pub affiliation: CulturalAffiliation,
    pub color: String,
}

/// Published description of a zone raster.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ZoneMetadata {
    pub grid: GridSpec,
    pub params: DiffusionParams,
    pub steps: usize,
    pub cells: usize,
    pub active_cells: usize,
    pub zone_cells: std::collections::BTreeMap<String, usize>,
    pub nodata_cells: usize,
    pub band_thresholds: [f64; 5],
    pub legend: Vec<LegendEntry>,
    pub png: String,
}

impl ZoneMetadata {
    pub fn describe(zones: &ZoneRaster, png_link: &str) -> Self {
        let (counts, nodata) = zones.zone_counts();
        ZoneMetadata {
            grid: zones.grid,
            params: zones.params,
            steps: zones.steps,
            cells: zones.grid.cell_count(),
            active_cells: zones.active.iter().filter(|&&a| a).count(),
            zone_cells: CulturalAffiliation::ALL
                .iter()
                .map(|a| (a.to_string(), counts[*a as usize]))
                .collect(),
            nodata_cells: nodata,
            band_thresholds: BAND_THRESHOLDS,
            legend: CulturalAffiliation::ALL
                .iter()
                .map(|&a| {
                    let [r, g, b] = zone_color(a);
                    LegendEntry { affiliation: a, color: format!("#{r:02x}{g:02x}{b:02x}") }
                })
                .collect(),
            png: png_link.to_string(),
        }
    }
}
