//! Counting records: N(T) on a uniform grid, computed by a single sorted pass
//! over orbit tables, with optional region restriction.

use crate::error::{Error, Result};
use crate::group::{inner, CartanVector, LinearForm};
use crate::words::OrbitTable;
use serde::Serialize;

/// Uniform grid step used for all counting series.
pub const T_STEP: f64 = 0.1;

/// Region of the positive chamber a count is restricted to.
#[derive(Clone, Debug)]
pub enum Region {
    /// No restriction.
    All,
    /// Angular cone: trace-form angle to `axis` at most `aperture` radians.
    Cone { axis: CartanVector, aperture: f64 },
    /// Intersection of half-spaces form(x) >= bound.
    HalfSpaces(Vec<(LinearForm, f64)>),
}

impl Region {
    pub fn contains(&self, v: &CartanVector) -> bool {
        match self {
            Region::All => true,
            Region::Cone { axis, aperture } => {
                let n = v.norm();
                if n == 0.0 {
                    return false;
                }
                let cos = (inner(v, axis) / (n * axis.norm())).clamp(-1.0, 1.0);
                cos.acos() <= *aperture
            }
            Region::HalfSpaces(constraints) => {
                constraints.iter().all(|(form, bound)| form.eval(v) >= *bound)
            }
        }
    }
}

/// Monotone counting series (T, N(T)) on a uniform grid.
#[derive(Clone, Debug, Serialize)]
pub struct CountRecord {
    pub t_grid: Vec<f64>,
    pub counts: Vec<u64>,
    pub depth: u32,
    pub region_label: String,
    pub dedup_mode: String,
}

impl CountRecord {
    /// Builds the record from raw sizes by one sorted pass.
    pub fn from_sizes(mut sizes: Vec<f64>, depth: u32, region_label: &str) -> CountRecord {
        sizes.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let t_max = sizes.last().copied().unwrap_or(0.0);
        let n_bins = (t_max / T_STEP).ceil() as usize + 1;
        let mut t_grid = Vec::with_capacity(n_bins);
        let mut counts = Vec::with_capacity(n_bins);
        let mut idx = 0usize;
        for bin in 0..n_bins {
            let t = bin as f64 * T_STEP;
            while idx < sizes.len() && sizes[idx] <= t {
                idx += 1;
            }
            t_grid.push(t);
            counts.push(idx as u64);
        }
        CountRecord {
            t_grid,
            counts,
            depth,
            region_label: region_label.to_string(),
            dedup_mode: "none".to_string(),
        }
    }

    pub fn total(&self) -> u64 {
        self.counts.last().copied().unwrap_or(0)
    }

    /// N(T) by binary search over the grid.
    pub fn count_at(&self, t: f64) -> u64 {
        if self.t_grid.is_empty() || t < self.t_grid[0] {
            return 0;
        }
        let idx = match self
            .t_grid
            .binary_search_by(|probe| probe.partial_cmp(&t).unwrap())
        {
            Ok(i) => i,
            Err(i) => i.saturating_sub(1),
        };
        self.counts[idx.min(self.counts.len() - 1)]
    }
}

/// Which size functional orders the count.
#[derive(Clone, Debug)]
pub enum SizeNorm {
    /// Trace norm of mu.
    TraceMu,
    /// Trace norm of lambda.
    TraceLambda,
}

/// N(T) = #{rows : size(row) <= T, projection in region}. The identity row
/// (zero projection, no direction) is never counted.
pub fn count_in_cone(
    table: &OrbitTable,
    region: &Region,
    size: &SizeNorm,
    region_label: &str,
) -> Result<CountRecord> {
    if let Region::Cone { axis, .. } = region {
        if axis.descriptor != table.descriptor {
            return Err(Error::DimensionMismatch(
                "region axis does not match the table's group".into(),
            ));
        }
    }
    let mut sizes = Vec::new();
    for row in &table.rows {
        let (proj, norm) = match size {
            SizeNorm::TraceMu => (&row.mu, row.mu.norm()),
            SizeNorm::TraceLambda => (&row.lambda, row.lambda.norm()),
        };
        if norm > 0.0 && region.contains(proj) {
            sizes.push(norm);
        }
    }
    Ok(CountRecord::from_sizes(sizes, table.depth, region_label))
}
