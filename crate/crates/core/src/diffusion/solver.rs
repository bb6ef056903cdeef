use std::sync::Arc;

use super::{DiffusionError, DiffusionParams, GridSpec};
use crate::model::SurveyFeature;

/// Non-negative values over a masked grid; inactive cells hold exactly zero.
#[derive(Debug, Clone, PartialEq)]
pub struct MaskedField {
    pub grid: GridSpec,
    pub active: Arc<Vec<bool>>,
    pub values: Vec<f64>,
}

impl MaskedField {
    pub fn zeros(grid: GridSpec, active: Arc<Vec<bool>>) -> Self {
        assert_eq!(active.len(), grid.cell_count(), "mask does not match grid");
        let values = vec![0.0; grid.cell_count()];
        MaskedField { grid, active, values }
    }

    pub fn total(&self) -> f64 {
        self.values.iter().sum()
    }

    pub fn get(&self, col: usize, row: usize) -> f64 {
        self.values[row * self.grid.n_cols + col]
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DepositWarning {
    pub feature_id: String,
    pub reason: &'static str,
}

/// Adds a unit mass per feature to the active cell holding its projected
/// location. Features off the grid or on inactive cells are skipped with a
/// warning.
pub fn deposit<'a>(
    grid: GridSpec,
    active: Arc<Vec<bool>>,
    features: impl IntoIterator<Item = &'a SurveyFeature>,
) -> (MaskedField, Vec<DepositWarning>) {
    let mut field = MaskedField::zeros(grid, active);
    let mut warnings = Vec::new();
    for f in features {
        let (x, y) = grid.project(&f.location);
        match grid.cell_of(x, y) {
            Some(i) if field.active[i] => field.values[i] += 1.0,
            Some(_) => warnings.push(DepositWarning {
                feature_id: f.id.clone(),
                reason: "outside barrier",
            }),
            None => warnings.push(DepositWarning {
                feature_id: f.id.clone(),
                reason: "outside grid",
            }),
        }
    }
    (field, warnings)
}

/// Runs the explicit 5-point heat iteration
/// `u_i <- u_i + alpha * sum_j (u_j - u_i)` over active 4-neighbours.
///
/// Inactive cells take no part in the sum, which gives a no-flux boundary:
/// mass never crosses a barrier and the total is conserved. The update is
/// evaluated as `u_i * (1 - alpha * deg) + alpha * ((w + e) + (s + n))` so
/// every term is non-negative for `alpha <= 0.25` and east/west (and
/// north/south) contributions combine symmetrically.
pub fn diffuse(field: &MaskedField, params: &DiffusionParams) -> Result<MaskedField, DiffusionError> {
    params.validate()?;
    let steps = params.resolved_steps(field.grid.cell_size_m);
    let (cols, rows) = (field.grid.n_cols, field.grid.n_rows);
    let active = &field.active;
    let alpha = params.alpha;

    let is_active = |c: isize, r: isize| -> bool {
        c >= 0 && r >= 0 && (c as usize) < cols && (r as usize) < rows && active[r as usize * cols + c as usize]
    };
    // Per cell: neighbour flags (w, e, s, n) and the self weight.
    let mut nbr = vec![[false; 4]; cols * rows];
    let mut keep = vec![0.0; cols * rows];
    for r in 0..rows {
        for c in 0..cols {
            let i = r * cols + c;
            if !active[i] {
                continue;
            }
            let (ci, ri) = (c as isize, r as isize);
            let flags = [
                is_active(ci - 1, ri),
                is_active(ci + 1, ri),
                is_active(ci, ri - 1),
                is_active(ci, ri + 1),
            ];
            let deg = flags.iter().filter(|&&f| f).count() as f64;
            nbr[i] = flags;
            keep[i] = 1.0 - alpha * deg;
        }
    }

    let mut cur = field.values.clone();
    let mut next = vec![0.0; cur.len()];
    for _ in 0..steps {
        for r in 0..rows {
            for c in 0..cols {
                let i = r * cols + c;
                if !active[i] {
                    continue;
                }
                let [w, e, s, n] = nbr[i];
                let west = if w { cur[i - 1] } else { 0.0 };
                let east = if e { cur[i + 1] } else { 0.0 };
                let south = if s { cur[i - cols] } else { 0.0 };
                let north = if n { cur[i + cols] } else { 0.0 };
                next[i] = cur[i] * keep[i] + alpha * ((west + east) + (south + north));
            }
        }
        std::mem::swap(&mut cur, &mut next);
    }
    Ok(MaskedField { grid: field.grid, active: field.active.clone(), values: cur })
}
