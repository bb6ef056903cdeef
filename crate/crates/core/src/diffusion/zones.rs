use std::sync::Arc;

use super::{deposit, diffuse, rasterize, BarrierPolygon, DepositWarning, DiffusionError, DiffusionParams, GridSpec};
use crate::facet::BBox;
use crate::model::{classify, CulturalAffiliation, SurveyFeature};

/// Probability gap under which the two leading affiliations count as tied.
pub const TIE_TOLERANCE: f64 = 1e-12;

/// Per-cell affiliation probabilities and the resulting zone classification.
#[derive(Debug, Clone, PartialEq)]
pub struct ZoneRaster {
    pub grid: GridSpec,
    pub active: Arc<Vec<bool>>,
    /// Indexed by `CulturalAffiliation as usize`; zero where NoData.
    pub prob: [Vec<f64>; 3],
    /// `None` is NoData: inactive, below epsilon, or tied.
    pub zone: Vec<Option<CulturalAffiliation>>,
    pub max_prob: Vec<f64>,
    pub params: DiffusionParams,
    pub steps: usize,
}

impl ZoneRaster {
    pub fn zone_at(&self, col: usize, row: usize) -> Option<CulturalAffiliation> {
        self.zone[row * self.grid.n_cols + col]
    }

    pub fn prob_at(&self, a: CulturalAffiliation, col: usize, row: usize) -> f64 {
        self.prob[a as usize][row * self.grid.n_cols + col]
    }

    /// Cell counts per affiliation followed by the NoData count.
    pub fn zone_counts(&self) -> ([usize; 3], usize) {
        let mut counts = [0; 3];
        let mut nodata = 0;
        for z in &self.zone {
            match z {
                Some(a) => counts[*a as usize] += 1,
                None => nodata += 1,
            }
        }
        (counts, nodata)
    }
}

/// Rasterizes the barrier, diffuses one deposit per affiliation and
/// normalizes the per-cell totals into probabilities.
pub fn interpolate_zones(
    features: &[SurveyFeature],
    barrier: &BarrierPolygon,
    bbox: &BBox,
    cell_size_m: f64,
    params: &DiffusionParams,
    cell_cap: usize,
) -> Result<(ZoneRaster, Vec<DepositWarning>), DiffusionError> {
    if features.is_empty() {
        return Err(DiffusionError::NoFeatures);
    }
    params.validate()?;
    let (grid, mask) = rasterize(bbox, barrier, cell_size_m, cell_cap)?;
    let active = Arc::new(mask);

    let mut warnings = Vec::new();
    let deposits: Vec<_> = CulturalAffiliation::ALL
        .iter()
        .map(|&a| {
            let (field, w) = deposit(
                grid,
                active.clone(),
                features.iter().filter(|f| classify(f) == a),
            );
            warnings.extend(w);
            field
        })
        .collect();

    let fields = std::thread::scope(|s| {
        let handles: Vec<_> = deposits
            .iter()
            .map(|field| s.spawn(move || diffuse(field, params)))
            .collect();
        handles
            .into_iter()
            .map(|h| h.join().expect("diffusion worker panicked"))
            .collect::<Result<Vec<_>, _>>()
    })?;

    let n = grid.cell_count();
    let mut prob = [vec![0.0; n], vec![0.0; n], vec![0.0; n]];
    let mut zone = vec![None; n];
    let mut max_prob = vec![0.0; n];
    for i in (0..n).filter(|&i| active[i]) {
        let u = [fields[0].values[i], fields[1].values[i], fields[2].values[i]];
        let total = u[0] + u[1] + u[2];
        if total < params.epsilon {
            continue;
        }
        let p = u.map(|v| v / total);
        for k in 0..3 {
            prob[k][i] = p[k];
        }
        let mut order = [0usize, 1, 2];
        order.sort_by(|&a, &b| p[b].total_cmp(&p[a]));
        max_prob[i] = p[order[0]];
        if p[order[0]] - p[order[1]] > TIE_TOLERANCE {
            zone[i] = Some(CulturalAffiliation::ALL[order[0]]);
        }
    }

    let steps = params.resolved_steps(cell_size_m);
    Ok((
        ZoneRaster { grid, active, prob, zone, max_prob, params: *params, steps },
        warnings,
    ))
}
