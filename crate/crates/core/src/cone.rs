//! Limit-cone estimation on the simplex slice of the positive chamber, the
//! growth indicator via aperture-scheduled directional counting, tangent
//! forms by finite differences on the unit sphere, adapted norms, and the
//! volume factor s_v.

use crate::count::{count_in_cone, Region, SizeNorm};
use crate::error::{Error, Result};
use crate::fit::{fit_exponential_polynomial, FitModel, WindowPolicy};
use crate::group::{inner, CartanVector, GroupDescriptor, LinearForm};
use crate::words::OrbitTable;
use serde::Serialize;

/// Convex hull of the normalized Jordan directions on the simplex slice.
#[derive(Clone, Debug)]
pub struct LimitConeEstimate {
    pub descriptor: GroupDescriptor,
    /// All retained sample points in unit-sum simple-root coordinates.
    pub samples: Vec<Vec<f64>>,
    /// Hull vertices (exact for slice dimension <= 2).
    pub hull_vertices: Vec<Vec<f64>>,
    /// Whether the vertex list is an exact hull.
    pub hull_exact: bool,
    pub depth: u32,
    /// Min over samples of the minimal simple-root coordinate; positive iff
    /// the estimated cone avoids the chamber walls.
    pub wall_margin: f64,
}

/// Unit-sum simple-root coordinates of a dominant direction.
pub fn simplex_coords(desc: &GroupDescriptor, v: &CartanVector) -> Option<Vec<f64>> {
    let vals = desc.simple_root_values(v);
    let sum: f64 = vals.iter().sum();
    if sum <= 0.0 {
        return None;
    }
    Some(vals.iter().map(|x| x / sum).collect())
}

/// Dominant vector with the given simplex coordinates, unit trace norm.
pub fn direction_from_simplex(desc: &GroupDescriptor, coords: &[f64]) -> CartanVector {
    let rays = desc.chamber_rays();
    assert_eq!(coords.len(), rays.len(), "one coordinate per chamber ray");
    let mut v = CartanVector::zero(desc);
    for (c, ray) in coords.iter().zip(&rays) {
        v = v.add(&ray.scale(*c));
    }
    v.normalized()
}

fn monotone_chain(points: &[Vec<f64>]) -> Vec<Vec<f64>> {
    // Planar convex hull on the first two coordinates.
    let mut pts: Vec<(f64, f64, usize)> = points
        .iter()
        .enumerate()
        .map(|(i, p)| (p[0], p[1], i))
        .collect();
    pts.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap().then(a.1.partial_cmp(&b.1).unwrap()));
    pts.dedup_by(|a, b| (a.0 - b.0).abs() < 1e-12 && (a.1 - b.1).abs() < 1e-12);
    if pts.len() <= 2 {
        return pts.iter().map(|&(_, _, i)| points[i].clone()).collect();
    }
    let cross = |o: &(f64, f64, usize), a: &(f64, f64, usize), b: &(f64, f64, usize)| {
        (a.0 - o.0) * (b.1 - o.1) - (a.1 - o.1) * (b.0 - o.0)
    };
    let mut lower: Vec<(f64, f64, usize)> = Vec::new();
    for p in &pts {
        while lower.len() >= 2 && cross(&lower[lower.len() - 2], &lower[lower.len() - 1], p) <= 0.0
        {
            lower.pop();
        }
        lower.push(*p);
    }
    let mut upper: Vec<(f64, f64, usize)> = Vec::new();
    for p in pts.iter().rev() {
        while upper.len() >= 2 && cross(&upper[upper.len() - 2], &upper[upper.len() - 1], p) <= 0.0
        {
            upper.pop();
        }
        upper.push(*p);
    }
    lower.pop();
    upper.pop();
    lower.extend(upper);
    lower.iter().map(|&(_, _, i)| points[i].clone()).collect()
}

impl LimitConeEstimate {
    /// Point-in-hull with tolerance, exact for slice dimension <= 2.
    pub fn contains(&self, coords: &[f64], tol: f64) -> bool {
        let r = self.descriptor.rank();
        match r {
            1 => (coords[0] - 1.0).abs() <= tol,
            2 => {
                let xs: Vec<f64> = self.hull_vertices.iter().map(|p| p[0]).collect();
                let lo = xs.iter().cloned().fold(f64::INFINITY, f64::min);
                let hi = xs.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
                coords[0] >= lo - tol && coords[0] <= hi + tol
            }
            3 => {
                // Inside all edges of the planar hull (counterclockwise).
                let h = &self.hull_vertices;
                if h.len() < 3 {
                    return h.iter().any(|p| {
                        (p[0] - coords[0]).abs() <= tol && (p[1] - coords[1]).abs() <= tol
                    });
                }
                for i in 0..h.len() {
                    let a = &h[i];
                    let b = &h[(i + 1) % h.len()];
                    let cross = (b[0] - a[0]) * (coords[1] - a[1])
                        - (b[1] - a[1]) * (coords[0] - a[0]);
                    if cross < -tol {
                        return false;
                    }
                }
                true
            }
            _ => false,
        }
    }

    /// Max over samples of a linear functional given by coefficients on the
    /// simplex coordinates. Exact on the hull.
    pub fn support(&self, coeffs: &[f64]) -> f64 {
        self.samples
            .iter()
            .map(|p| p.iter().zip(coeffs).map(|(a, b)| a * b).sum::<f64>())
            .fold(f64::NEG_INFINITY, f64::max)
    }
}

/// Convex hull of the normalized Jordan projections with norm above
/// `min_norm`.
pub fn estimate_limit_cone(table: &OrbitTable, min_norm: f64) -> Result<LimitConeEstimate> {
    if table.depth < 2 {
        return Err(Error::Precondition("limit cone estimation needs depth >= 2".into()));
    }
    let desc = table.descriptor.clone();
    let r = desc.rank();
    let mut samples = Vec::new();
    for row in &table.rows {
        if row.lambda.norm() <= min_norm {
            continue;
        }
        if let Some(coords) = simplex_coords(&desc, &row.lambda) {
            samples.push(coords);
        }
    }
    if samples.len() < r + 1 {
        return Err(Error::InsufficientData(format!(
            "{} usable Jordan directions, need at least {}",
            samples.len(),
            r + 1
        )));
    }
    let (hull_vertices, hull_exact) = match r {
        1 => (vec![vec![1.0]], true),
        2 => {
            let lo = samples.iter().map(|p| p[0]).fold(f64::INFINITY, f64::min);
            let hi = samples.iter().map(|p| p[0]).fold(f64::NEG_INFINITY, f64::max);
            if (hi - lo).abs() < 1e-12 {
                (vec![vec![lo, 1.0 - lo]], true)
            } else {
                (vec![vec![lo, 1.0 - lo], vec![hi, 1.0 - hi]], true)
            }
        }
        3 => (monotone_chain(&samples), true),
        _ => {
            // Full hull extraction above slice dimension 2 is not supported;
            // keep deduplicated samples as candidate vertices.
            let mut dedup: Vec<Vec<f64>> = Vec::new();
            for p in &samples {
                if !dedup
                    .iter()
                    .any(|q| q.iter().zip(p).all(|(a, b)| (a - b).abs() < 1e-9))
                {
                    dedup.push(p.clone());
                }
            }
            (dedup, false)
        }
    };
    let wall_margin = samples
        .iter()
        .map(|p| p.iter().cloned().fold(f64::INFINITY, f64::min))
        .fold(f64::INFINITY, f64::min);
    let est = LimitConeEstimate {
        descriptor: desc,
        samples,
        hull_vertices,
        hull_exact,
        depth: table.depth,
        wall_margin,
    };
    if est.hull_exact {
        debug_assert!(est.samples.iter().all(|p| est.contains(p, 1e-9)));
    }
    Ok(est)
}

/// Per-direction, per-aperture fit diagnostics.
#[derive(Clone, Debug, Serialize)]
pub struct ApertureFit {
    pub aperture: f64,
    pub delta: Option<f64>,
    pub residual_rms: Option<f64>,
    pub n_points: usize,
}

#[derive(Clone, Debug, Serialize)]
pub struct DirectionEstimate {
    pub direction: CartanVector,
    /// Growth rate in this direction; -inf means the cone was empty.
    pub value: f64,
    pub chosen_aperture: Option<f64>,
    pub window: (f64, f64),
    pub residual_rms: Option<f64>,
    pub aperture_fits: Vec<ApertureFit>,
}

/// Growth indicator estimate on a fixed direction grid. Values are stored on
/// unit vectors; homogeneous evaluation scales by t.
#[derive(Clone, Debug, Serialize)]
pub struct GrowthIndicatorEstimate {
    pub directions: Vec<DirectionEstimate>,
}

impl GrowthIndicatorEstimate {
    pub fn values(&self) -> Vec<f64> {
        self.directions.iter().map(|d| d.value).collect()
    }

    /// Homogeneous evaluation at t * (stored unit direction).
    pub fn eval_scaled(&self, index: usize, t: f64) -> f64 {
        t * self.directions[index].value
    }

    pub fn best_index(&self) -> Option<usize> {
        let mut best = None;
        for (i, d) in self.directions.iter().enumerate() {
            if d.value.is_finite() {
                match best {
                    None => best = Some(i),
                    Some(j) => {
                        if d.value > self.directions[j].value {
                            best = Some(i);
                        }
                    }
                }
            }
        }
        best
    }
}

#[derive(Clone, Debug)]
pub struct GrowthOptions {
    pub apertures: Vec<f64>,
    pub policy: WindowPolicy,
    /// RMS residual in log units below which an aperture fit is acceptable.
    pub acceptable_residual: f64,
    /// Smallest letter norm of the generator system, fixing the fit window.
    pub min_letter_norm: f64,
}

impl GrowthOptions {
    pub fn new(min_letter_norm: f64) -> Self {
        GrowthOptions {
            apertures: vec![0.2, 0.1, 0.05],
            policy: WindowPolicy::default(),
            acceptable_residual: 0.25,
            min_letter_norm,
        }
    }
}

/// Growth rate along a single unit direction: counts in shrinking angular
/// cones and fits log N over the reliable window, preferring the smallest
/// aperture with an acceptable residual.
pub fn growth_at_direction(
    table: &OrbitTable,
    u: &CartanVector,
    opts: &GrowthOptions,
) -> Result<DirectionEstimate> {
    let window = opts.policy.window(table.depth, opts.min_letter_norm);
    let mut fits = Vec::new();
    for &aperture in &opts.apertures {
        let region = Region::Cone { axis: u.clone(), aperture };
        let record = count_in_cone(table, &region, &SizeNorm::TraceMu, "direction")?;
        match fit_exponential_polynomial(&record, &FitModel::Exponential, window, &opts.policy)
        {
            Ok(fit) => fits.push(ApertureFit {
                aperture,
                delta: Some(fit.delta),
                residual_rms: Some(fit.residual_rms),
                n_points: fit.n_points,
            }),
            Err(_) => fits.push(ApertureFit {
                aperture,
                delta: None,
                residual_rms: None,
                n_points: 0,
            }),
        }
    }
    // Smallest acceptable aperture wins; the full schedule is kept in the
    // diagnostics.
    let mut chosen: Option<&ApertureFit> = None;
    for f in fits.iter() {
        if let (Some(_), Some(res)) = (f.delta, f.residual_rms) {
            if res <= opts.acceptable_residual {
                match chosen {
                    None => chosen = Some(f),
                    Some(c) => {
                        if f.aperture < c.aperture {
                            chosen = Some(f);
                        }
                    }
                }
            }
        }
    }
    if chosen.is_none() {
        // Fall back to the best residual among successful fits.
        chosen = fits
            .iter()
            .filter(|f| f.delta.is_some())
            .min_by(|a, b| a.residual_rms.partial_cmp(&b.residual_rms).unwrap());
    }
    Ok(match chosen {
        Some(f) => DirectionEstimate {
            direction: u.clone(),
            value: f.delta.unwrap(),
            chosen_aperture: Some(f.aperture),
            window,
            residual_rms: f.residual_rms,
            aperture_fits: fits,
        },
        None => DirectionEstimate {
            direction: u.clone(),
            value: f64::NEG_INFINITY,
            chosen_aperture: None,
            window,
            residual_rms: None,
            aperture_fits: fits,
        },
    })
}

/// Growth indicator over a grid of unit directions.
pub fn estimate_growth_indicator(
    table: &OrbitTable,
    grid: &[CartanVector],
    opts: &GrowthOptions,
) -> Result<GrowthIndicatorEstimate> {
    let mut directions = Vec::with_capacity(grid.len());
    for u in grid {
        directions.push(growth_at_direction(table, u, opts)?);
    }
    Ok(GrowthIndicatorEstimate { directions })
}

/// Uniform grid of unit dominant directions for rank <= 3 groups: convex
/// mixtures of the chamber's extreme rays.
pub fn direction_grid(desc: &GroupDescriptor, resolution: usize) -> Result<Vec<CartanVector>> {
    let rays = desc.chamber_rays();
    let r = desc.rank();
    match r {
        1 => Ok(vec![rays[0].clone()]),
        2 => {
            let n = resolution.max(3);
            let mut grid = Vec::with_capacity(n);
            for i in 0..n {
                let t = (i as f64 + 0.5) / n as f64;
                grid.push(direction_from_simplex(desc, &[1.0 - t, t]));
            }
            Ok(grid)
        }
        3 => {
            let n = resolution.max(3);
            let mut grid = Vec::new();
            for i in 0..n {
                for j in 0..n - i {
                    let a = (i as f64 + 0.5) / n as f64;
                    let b = (j as f64 + 0.5) / n as f64;
                    let c = 1.0 - a - b;
                    if c <= 0.0 {
                        continue;
                    }
                    grid.push(direction_from_simplex(desc, &[a, b, c]));
                }
            }
            Ok(grid)
        }
        _ => Err(Error::Config(format!("direction grids support rank <= 3, got {r}"))),
    }
}

/// Argmax of the growth indicator over the grid, refined by golden-section
/// search between the best direction's grid neighbors.
pub fn maximal_growth_direction(
    table: &OrbitTable,
    est: &GrowthIndicatorEstimate,
    opts: &GrowthOptions,
) -> Result<(CartanVector, f64)> {
    let best = est
        .best_index()
        .ok_or_else(|| Error::InsufficientData("all directions have empty cones".into()))?;
    let desc = est.directions[best].direction.descriptor.clone();
    let r = desc.rank();
    if r == 1 || est.directions.len() == 1 {
        return Ok((est.directions[best].direction.clone(), est.directions[best].value));
    }
    // Golden-section refinement along the segment through the best direction
    // and its neighbors, coordinate-cyclic for slice dimension 2.
    let coords_of = |u: &CartanVector| simplex_coords(&desc, u).expect("grid is dominant");
    let value_at = |coords: &[f64]| -> Result<f64> {
        let u = direction_from_simplex(&desc, coords);
        Ok(growth_at_direction(table, &u, opts)?.value)
    };
    let mut center = coords_of(&est.directions[best].direction);
    let mut center_val = est.directions[best].value;
    let spacing = {
        // Typical grid spacing from the two nearest grid coords.
        let mut ds: Vec<f64> = est
            .directions
            .iter()
            .map(|d| {
                let c = coords_of(&d.direction);
                c.iter().zip(&center).map(|(a, b)| (a - b).abs()).sum::<f64>()
            })
            .filter(|&d| d > 1e-12)
            .collect();
        ds.sort_by(|a, b| a.partial_cmp(b).unwrap());
        ds.first().copied().unwrap_or(0.1)
    };
    let golden = 0.5 * (3.0 - 5.0f64.sqrt());
    let dims = center.len();
    for _pass in 0..2 {
        for axis in 0..dims.saturating_sub(1) {
            // Move mass between coordinate `axis` and the last coordinate.
            let mut lo = -spacing;
            let mut hi = spacing;
            let eval_shift = |s: f64, center: &[f64]| -> Option<Vec<f64>> {
                let mut c = center.to_vec();
                c[axis] += s;
                let last = c.len() - 1;
                c[last] -= s;
                if c.iter().any(|&x| x <= 1e-4) {
                    return None;
                }
                Some(c)
            };
            for _ in 0..12 {
                let m1 = lo + golden * (hi - lo);
                let m2 = hi - golden * (hi - lo);
                let v1 = eval_shift(m1, &center)
                    .map(|c| value_at(&c))
                    .transpose()?
                    .unwrap_or(f64::NEG_INFINITY);
                let v2 = eval_shift(m2, &center)
                    .map(|c| value_at(&c))
                    .transpose()?
                    .unwrap_or(f64::NEG_INFINITY);
                if v1 >= v2 {
                    hi = m2;
                } else {
                    lo = m1;
                }
            }
            let s = 0.5 * (lo + hi);
            if let Some(c) = eval_shift(s, &center) {
                let v = value_at(&c)?;
                if v > center_val {
                    center = c;
                    center_val = v;
                }
            }
        }
    }
    Ok((direction_from_simplex(&desc, &center), center_val))
}

/// Linear form tangent to the growth indicator at a direction, with its
/// gradient estimate and the grid domination slack.
#[derive(Clone, Debug, Serialize)]
pub struct TangentForm {
    pub theta: LinearForm,
    pub base: CartanVector,
    pub gradient: CartanVector,
    /// min over the grid of theta(u) - psi_hat(u); near nonnegative when the
    /// form dominates the indicator.
    pub domination_slack: f64,
    pub fd_step: f64,
}

/// Orthonormal (trace form) basis of the orthogonal complement of `v` inside
/// the Cartan subspace.
fn tangent_basis(desc: &GroupDescriptor, v: &CartanVector) -> Vec<CartanVector> {
    let offs = desc.factor_offsets();
    let mut seeds = Vec::new();
    for (f, &d) in desc.factor_dims.iter().enumerate() {
        for i in 0..d - 1 {
            let mut coords = vec![0.0; desc.coord_len()];
            coords[offs[f] + i] = 1.0;
            coords[offs[f] + i + 1] = -1.0;
            seeds.push(CartanVector { descriptor: desc.clone(), coords });
        }
    }
    let mut basis: Vec<CartanVector> = Vec::new();
    for seed in seeds {
        let mut w = seed.clone();
        let proj_v = inner(&w, v);
        w = w.sub(&v.scale(proj_v / inner(v, v)));
        for b in &basis {
            let c = inner(&w, b);
            w = w.sub(&b.scale(c));
        }
        let n = w.norm();
        if n > 1e-9 {
            basis.push(w.scale(1.0 / n));
        }
    }
    basis
}

#[derive(Clone, Debug)]
pub struct TangentOptions {
    /// Finite-difference step on the sphere.
    pub step: f64,
    pub growth: GrowthOptions,
}

/// Central finite-difference gradient at unit `v` of an arbitrary
/// 1-homogeneous function given by its values on unit vectors, lifted to a
/// linear form: the radial derivative equals the value, the tangential
/// derivatives come from sphere differences with one Richardson halving.
pub fn tangent_form_with(
    eval: &dyn Fn(&CartanVector) -> Result<f64>,
    v: &CartanVector,
    step: f64,
) -> Result<(CartanVector, f64)> {
    let desc = v.descriptor.clone();
    let v = v.normalized();
    let psi_v = eval(&v)?;
    if !psi_v.is_finite() {
        return Err(Error::InsufficientData("indicator is -inf at the base direction".into()));
    }
    let basis = tangent_basis(&desc, &v);
    let sphere_derivative = |e: &CartanVector, h: f64| -> Result<f64> {
        let plus = v.add(&e.scale(h)).normalized();
        let minus = v.sub(&e.scale(h)).normalized();
        let fp = eval(&plus)?;
        let fm = eval(&minus)?;
        if !fp.is_finite() || !fm.is_finite() {
            return Err(Error::Precondition(
                "finite-difference stencil leaves the cone; direction too close to the wall"
                    .into(),
            ));
        }
        Ok((fp - fm) / (2.0 * h))
    };
    let mut gradient = v.scale(psi_v);
    for e in &basis {
        let d_h = sphere_derivative(e, step)?;
        let d_h2 = sphere_derivative(e, step / 2.0)?;
        let d = (4.0 * d_h2 - d_h) / 3.0;
        gradient = gradient.add(&e.scale(d));
    }
    Ok((gradient, psi_v))
}

/// Tangent form of the estimated growth indicator at a direction strictly
/// inside the estimated cone.
pub fn tangent_form(
    table: &OrbitTable,
    est: &GrowthIndicatorEstimate,
    cone: &LimitConeEstimate,
    v: &CartanVector,
    opts: &TangentOptions,
) -> Result<TangentForm> {
    let desc = v.descriptor.clone();
    let coords = simplex_coords(&desc, v)
        .ok_or_else(|| Error::Precondition("direction is not dominant".into()))?;
    if !cone.contains(&coords, 0.0) || cone.wall_margin <= 0.0 {
        return Err(Error::Precondition(
            "direction is not strictly inside the estimated cone".into(),
        ));
    }
    let eval = |u: &CartanVector| -> Result<f64> {
        Ok(growth_at_direction(table, u, &opts.growth)?.value)
    };
    let (gradient, _) = tangent_form_with(&eval, v, opts.step)?;
    let theta = LinearForm::from_vector(&gradient);
    let mut slack = f64::INFINITY;
    for dir in &est.directions {
        if dir.value.is_finite() {
            slack = slack.min(theta.eval(&dir.direction) - dir.value);
        }
    }
    Ok(TangentForm {
        theta,
        base: v.normalized(),
        gradient,
        domination_slack: slack,
        fd_step: opts.step,
    })
}

/// Inner product adapted to a tangent form: the base direction has unit
/// length and is orthogonal to ker(theta); the trace form is kept on
/// ker(theta).
#[derive(Clone, Debug)]
pub struct AdaptedNorm {
    pub base: CartanVector,
    /// Unit trace-form normal of ker theta.
    pub normal: CartanVector,
    pub theta: LinearForm,
}

impl AdaptedNorm {
    /// Image of x under the map fixing ker(theta) and sending the base to the
    /// unit normal.
    fn straighten(&self, x: &CartanVector) -> CartanVector {
        let a = self.theta.eval(x) / self.theta.eval(&self.base);
        let w = x.sub(&self.base.scale(a));
        w.add(&self.normal.scale(a))
    }

    pub fn inner(&self, x: &CartanVector, y: &CartanVector) -> f64 {
        inner(&self.straighten(x), &self.straighten(y))
    }

    pub fn norm(&self, x: &CartanVector) -> f64 {
        self.inner(x, x).sqrt()
    }
}

/// Builds the adapted norm for a tangent form with theta(v) > 0.
pub fn adapted_norm(theta: &LinearForm, v: &CartanVector) -> Result<AdaptedNorm> {
    if theta.eval(v) <= 0.0 {
        return Err(Error::InvalidInput("tangent form must be positive at the base".into()));
    }
    let dual = theta.dual_vector();
    let n = dual.norm();
    if n <= 0.0 {
        return Err(Error::InvalidInput("zero tangent form".into()));
    }
    Ok(AdaptedNorm {
        base: v.normalized(),
        normal: dual.scale(1.0 / n),
        theta: theta.clone(),
    })
}

/// Volume factor s_v = 1/|det S_v| where S_v fixes ker(theta) and maps v to
/// the unit trace normal of ker(theta). Equals |<v, n>|.
pub fn s_v(theta: &LinearForm, v: &CartanVector) -> Result<f64> {
    let norm = adapted_norm(theta, v)?;
    Ok(inner(&norm.base, &norm.normal).abs())
}
