//! Experiment harness: JSON configuration, orbit-table provisioning through
//! the cache, the counting/bisector/symmetric-count/PS-measure experiments,
//! and deterministic output serialization (CSV, JSON, SVG scatter).

use crate::boundary::{conformality_residual, ps_atoms, AtomicMeasure};
use crate::cache;
use crate::cone::{
    adapted_norm, direction_grid, estimate_growth_indicator, estimate_limit_cone,
    growth_at_direction, maximal_growth_direction, simplex_coords, tangent_form,
    GrowthIndicatorEstimate, GrowthOptions, LimitConeEstimate, TangentOptions,
};
use crate::count::{count_in_cone, CountRecord, Region, SizeNorm};
use crate::error::{Error, Result};
use crate::fit::{fit_exponential_polynomial, FitModel, FitResult, WindowPolicy};
use crate::group::{cartan_projection, CartanVector, GroupDescriptor, GroupElement, LinearForm};
use crate::linalg::Mat;
use crate::symmetric::{h_cartan_projection, PairKind, SymmetricPairDescriptor};
use crate::words::{dedup_cosets, enumerate_ball, CosetInvariant, EnumerateOptions, GeneratorSystem, OrbitTable};
use serde::{Deserialize, Serialize};
use std::path::{Path, PathBuf};

// ---------------------------------------------------------------------------
// Configuration schema
// ---------------------------------------------------------------------------

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub group: GroupConfig,
    #[serde(default)]
    pub pair: Option<PairConfig>,
    pub experiment: ExperimentSpec,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct GroupConfig {
    pub factors: Vec<FactorConfig>,
    pub generators: Vec<GeneratorConfig>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct FactorConfig {
    pub dim: usize,
    #[serde(default)]
    pub projective: bool,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct GeneratorConfig {
    pub label: String,
    /// One row-major d x d matrix per factor.
    pub matrices: Vec<Vec<Vec<f64>>>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct PairConfig {
    /// "theta", "swap", or "indefinite-orthogonal".
    pub kind: String,
    #[serde(default)]
    pub p: usize,
    #[serde(default)]
    pub q: usize,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ExperimentSpec {
    /// enumerate | limit-cone | growth-indicator | count | bisector |
    /// symmetric-count | ps-measure | verify
    pub kind: String,
    #[serde(default)]
    pub params: serde_json::Value,
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Self::from_json(&text)
    }
}

/// Run-time knobs shared by all experiments; flags override config params.
#[derive(Clone, Debug)]
pub struct RunOptions {
    pub depth: Option<u32>,
    pub seed: u64,
    pub threads: usize,
    pub cache_dir: Option<PathBuf>,
    pub use_cache: bool,
}

impl Default for RunOptions {
    fn default() -> Self {
        RunOptions { depth: None, seed: 0, threads: 1, cache_dir: None, use_cache: false }
    }
}

pub struct ExperimentContext {
    pub gens: GeneratorSystem,
    pub pair: Option<SymmetricPairDescriptor>,
    pub opts: RunOptions,
}

pub fn build_generator_system(group: &GroupConfig) -> Result<GeneratorSystem> {
    let dims: Vec<usize> = group.factors.iter().map(|f| f.dim).collect();
    let flags: Vec<bool> = group.factors.iter().map(|f| f.projective).collect();
    let descriptor = GroupDescriptor::new(dims, flags)?;
    let mut labeled = Vec::new();
    for g in &group.generators {
        if g.matrices.len() != descriptor.num_factors() {
            return Err(Error::Config(format!(
                "generator {} needs {} factor matrices",
                g.label,
                descriptor.num_factors()
            )));
        }
        let factors: Vec<Mat> = g
            .matrices
            .iter()
            .map(|rows| Mat::from_rows(rows))
            .collect();
        labeled.push((g.label.clone(), GroupElement::new(descriptor.clone(), factors)?));
    }
    GeneratorSystem::new(descriptor, labeled, 0.05)
}

pub fn build_context(config: &ExperimentConfig, opts: RunOptions) -> Result<ExperimentContext> {
    let gens = build_generator_system(&config.group)?;
    let pair = match &config.pair {
        None => None,
        Some(pc) => {
            let kind = match pc.kind.as_str() {
                "theta" => PairKind::Theta,
                "swap" | "factor-swap" => PairKind::FactorSwap,
                "indefinite-orthogonal" => {
                    PairKind::IndefiniteOrthogonal { p: pc.p, q: pc.q }
                }
                other => {
                    return Err(Error::Config(format!("unknown pair kind '{other}'")))
                }
            };
            Some(SymmetricPairDescriptor::new(kind, gens.descriptor.clone())?)
        }
    };
    Ok(ExperimentContext { gens, pair, opts })
}

/// Table provisioning: hits the cache when enabled, enumerating otherwise.
pub fn provide_table(
    ctx: &ExperimentContext,
    depth: u32,
    with_flags: bool,
) -> Result<OrbitTable> {
    let enum_opts = EnumerateOptions {
        with_flags,
        threads: ctx.opts.threads,
        ..Default::default()
    };
    if ctx.opts.use_cache {
        let dir = ctx.opts.cache_dir.clone().unwrap_or_else(cache::cache_dir);
        let path = cache::cache_path(&dir, &ctx.gens, depth);
        if path.exists() {
            match cache::load_table(&path, &ctx.gens) {
                Ok(table) => {
                    let has_flags = table.rows.iter().all(|r| r.flag.is_some());
                    if !with_flags || has_flags {
                        return Ok(table);
                    }
                }
                Err(Error::StaleCache(_)) => {}
                Err(e) => return Err(e),
            }
        }
        let table = enumerate_ball(&ctx.gens, depth, &enum_opts)?;
        cache::save_table(&table, &path)?;
        Ok(table)
    } else {
        enumerate_ball(&ctx.gens, depth, &enum_opts)
    }
}

fn min_letter_norm(gens: &GeneratorSystem) -> f64 {
    gens.generators
        .iter()
        .map(|g| cartan_projection(g).expect("generators are valid").norm())
        .fold(f64::INFINITY, f64::min)
}

fn param<T: serde::de::DeserializeOwned + Clone>(
    params: &serde_json::Value,
    key: &str,
    default: T,
) -> T {
    params
        .get(key)
        .and_then(|v| serde_json::from_value(v.clone()).ok())
        .unwrap_or(default)
}

// ---------------------------------------------------------------------------
// Reports
// ---------------------------------------------------------------------------

#[derive(Clone, Debug, Serialize)]
pub struct LimitConeReport {
    pub depth: u32,
    pub hull_vertices: Vec<Vec<f64>>,
    pub hull_exact: bool,
    pub wall_margin: f64,
    pub sample_count: usize,
}

#[derive(Clone, Debug, Serialize)]
pub struct GrowthReport {
    pub depth: u32,
    pub directions: Vec<GrowthDirectionReport>,
    pub max_direction: Vec<f64>,
    pub delta: f64,
    /// Which inner product the rates are measured against.
    pub metric: String,
}

#[derive(Clone, Debug, Serialize)]
pub struct GrowthDirectionReport {
    pub direction: Vec<f64>,
    pub simplex: Vec<f64>,
    pub value: f64,
    pub aperture: Option<f64>,
    pub residual: Option<f64>,
    pub window: (f64, f64),
}

#[derive(Clone, Debug, Serialize)]
pub struct CountReport {
    pub record: CountRecord,
    pub fit: Option<FitResult>,
}

#[derive(Clone, Debug, Serialize)]
pub struct BisectorReport {
    pub record: CountRecord,
    pub fit: Option<FitResult>,
    pub growth_delta_at_direction: f64,
    pub beta_target: f64,
    pub rows_total: usize,
    pub rows_ambiguous: usize,
    pub rows_counted: usize,
}

#[derive(Clone, Debug, Serialize)]
pub struct SymmetricCountReport {
    pub record: CountRecord,
    pub fit: Option<FitResult>,
    pub delta_full_group: f64,
    pub beta_target: f64,
    pub rows_before_dedup: usize,
    pub rows_after_dedup: usize,
}

#[derive(Clone, Debug, Serialize)]
pub struct PsMeasureReport {
    pub depth: u32,
    pub s: f64,
    pub atom_count: usize,
    pub total_mass: f64,
    /// Max relative conformality discrepancy per generator label.
    pub conformality: Vec<(String, f64)>,
}

// ---------------------------------------------------------------------------
// Runners
// ---------------------------------------------------------------------------

pub fn run_limit_cone(ctx: &ExperimentContext, params: &serde_json::Value) -> Result<(OrbitTable, LimitConeReport)> {
    let depth = ctx.opts.depth.unwrap_or_else(|| param(params, "depth", 8u32));
    let min_norm = param(params, "min_norm", 0.5f64);
    let table = provide_table(ctx, depth, false)?;
    let est = estimate_limit_cone(&table, min_norm)?;
    let report = LimitConeReport {
        depth,
        hull_vertices: est.hull_vertices.clone(),
        hull_exact: est.hull_exact,
        wall_margin: est.wall_margin,
        sample_count: est.samples.len(),
    };
    Ok((table, report))
}

pub fn growth_options(ctx: &ExperimentContext, params: &serde_json::Value) -> GrowthOptions {
    let mut opts = GrowthOptions::new(min_letter_norm(&ctx.gens));
    opts.apertures = param(params, "apertures", opts.apertures.clone());
    opts.acceptable_residual = param(params, "acceptable_residual", opts.acceptable_residual);
    opts
}

pub fn run_growth_indicator(
    ctx: &ExperimentContext,
    params: &serde_json::Value,
) -> Result<(OrbitTable, GrowthIndicatorEstimate, GrowthReport)> {
    let depth = ctx.opts.depth.unwrap_or_else(|| param(params, "depth", 10u32));
    let resolution = param(params, "grid_resolution", 9usize);
    let table = provide_table(ctx, depth, false)?;
    let grid = direction_grid(&ctx.gens.descriptor, resolution)?;
    let opts = growth_options(ctx, params);
    let est = estimate_growth_indicator(&table, &grid, &opts)?;
    let (u_max, delta) = maximal_growth_direction(&table, &est, &opts)?;
    let report = GrowthReport {
        depth,
        directions: est
            .directions
            .iter()
            .map(|d| GrowthDirectionReport {
                direction: d.direction.coords.clone(),
                simplex: simplex_coords(&ctx.gens.descriptor, &d.direction)
                    .unwrap_or_default(),
                value: d.value,
                aperture: d.chosen_aperture,
                residual: d.residual_rms,
                window: d.window,
            })
            .collect(),
        max_direction: u_max.coords.clone(),
        delta,
        metric: "trace form per factor".into(),
    };
    Ok((table, est, report))
}

pub fn run_count(
    ctx: &ExperimentContext,
    params: &serde_json::Value,
) -> Result<(OrbitTable, CountReport)> {
    let depth = ctx.opts.depth.unwrap_or_else(|| param(params, "depth", 10u32));
    let table = provide_table(ctx, depth, false)?;
    let aperture = param(params, "aperture", 0.2f64);
    let direction: Option<Vec<f64>> = param(params, "direction", None);
    let region = match direction {
        None => Region::All,
        Some(coords) => {
            let axis = CartanVector::new(ctx.gens.descriptor.clone(), coords)?;
            Region::Cone { axis: axis.normalized(), aperture }
        }
    };
    let record = count_in_cone(&table, &region, &SizeNorm::TraceMu, "count")?;
    let policy = WindowPolicy::default();
    let window = policy.window(depth, min_letter_norm(&ctx.gens));
    let beta_frozen: Option<f64> = param(params, "beta_frozen", None);
    let model = match beta_frozen {
        Some(b) => FitModel::FrozenBeta(b),
        None => FitModel::ExponentialPolynomial,
    };
    let fit = fit_exponential_polynomial(&record, &model, window, &policy).ok();
    Ok((table, CountReport { record, fit }))
}

/// Finite subgroup H cap M as explicit sign matrices, used for the
/// bi-M-invariant distances defining the bisector windows.
fn h_cap_m(pair: &SymmetricPairDescriptor) -> Vec<GroupElement> {
    let desc = &pair.group;
    let mut elements = vec![GroupElement::identity(desc)];
    // Enumerate all per-factor sign patterns with determinant +1, filter by
    // sigma-fixedness.
    let dims = desc.factor_dims.clone();
    let total: usize = dims.iter().map(|&d| 1usize << d).product();
    for pattern in 1..total {
        let mut rem = pattern;
        let mut factors = Vec::with_capacity(dims.len());
        let mut ok = true;
        for &d in &dims {
            let mut signs = vec![1.0; d];
            for s in signs.iter_mut() {
                if rem & 1 == 1 {
                    *s = -1.0;
                }
                rem >>= 1;
            }
            if signs.iter().product::<f64>() < 0.0 {
                ok = false;
                break;
            }
            factors.push(Mat::diag(&signs));
        }
        if !ok {
            continue;
        }
        let m = GroupElement { descriptor: desc.clone(), factors };
        if pair.h_membership_residual(&m) < 1e-12 {
            elements.push(m);
        }
    }
    elements
}

fn m_group(desc: &GroupDescriptor) -> Vec<GroupElement> {
    let dims = desc.factor_dims.clone();
    let total: usize = dims.iter().map(|&d| 1usize << d).product();
    let mut elements = Vec::new();
    for pattern in 0..total {
        let mut rem = pattern;
        let mut factors = Vec::with_capacity(dims.len());
        let mut ok = true;
        for &d in &dims {
            let mut signs = vec![1.0; d];
            for s in signs.iter_mut() {
                if rem & 1 == 1 {
                    *s = -1.0;
                }
                rem >>= 1;
            }
            if signs.iter().product::<f64>() < 0.0 {
                ok = false;
                break;
            }
            factors.push(Mat::diag(&signs));
        }
        if ok {
            elements.push(GroupElement { descriptor: desc.clone(), factors });
        }
    }
    elements
}

/// Ball window in H: right (H cap M)-invariant distance to a center.
#[derive(Clone, Debug)]
pub enum GroupWindow {
    All,
    Ball { center: GroupElement, radius: f64 },
}

impl GroupWindow {
    fn contains_mod(&self, g: &GroupElement, quotient: &[GroupElement], right: bool) -> bool {
        match self {
            GroupWindow::All => true,
            GroupWindow::Ball { center, radius } => quotient.iter().any(|m| {
                let moved = if right { g.mul(m) } else { m.mul(g) };
                moved.dist(center) <= *radius
            }),
        }
    }
}

pub struct BisectorParams {
    pub depth: u32,
    /// Direction in b-coordinates.
    pub direction: Vec<f64>,
    pub aperture: f64,
    pub omega_h: GroupWindow,
    pub omega_k: GroupWindow,
    pub beta_frozen: Option<f64>,
}

pub fn run_bisector(
    ctx: &ExperimentContext,
    params: &BisectorParams,
) -> Result<(OrbitTable, BisectorReport)> {
    let pair = ctx
        .pair
        .as_ref()
        .ok_or_else(|| Error::Config("bisector experiment requires a pair".into()))?;
    let table = provide_table(ctx, params.depth, false)?;
    let r = ctx.gens.descriptor.rank();
    let r0 = pair.r0();
    let beta_target = (r0 as f64 - r as f64) / 2.0;

    let hm = h_cap_m(pair);
    let mg = m_group(&ctx.gens.descriptor);
    let dir_norm: f64 = params.direction.iter().map(|x| x * x).sum::<f64>().sqrt();
    if dir_norm <= 0.0 {
        return Err(Error::Config("bisector direction must be nonzero".into()));
    }
    let dir: Vec<f64> = params.direction.iter().map(|x| x / dir_norm).collect();

    let mut sizes = Vec::new();
    let mut ambiguous = 0usize;
    for row in &table.rows {
        let g = ctx.gens.element_of_word(&row.word)?;
        let dec = match crate::symmetric::gcartan_decompose_with_tolerance(&g, pair, 1e-4) {
            Ok(d) => d,
            Err(Error::Ambiguous(_)) | Err(Error::DecompositionFailure(_)) => {
                ambiguous += 1;
                continue;
            }
            Err(e) => return Err(e),
        };
        // Angular restriction in b-coordinates.
        let bn = dec.b.norm();
        if bn > 0.0 {
            let cos: f64 = dec
                .b
                .coords
                .iter()
                .zip(&dir)
                .map(|(a, c)| a * c)
                .sum::<f64>()
                / bn;
            if cos.clamp(-1.0, 1.0).acos() > params.aperture {
                continue;
            }
        }
        if !params.omega_h.contains_mod(&dec.h, &hm, true) {
            continue;
        }
        if !params.omega_k.contains_mod(&dec.k, &mg, false) {
            continue;
        }
        sizes.push(bn);
    }
    let rows_total = table.rows.len();
    if ambiguous * 100 > rows_total {
        return Err(Error::ExperimentAborted(format!(
            "{ambiguous} of {rows_total} rows had ambiguous decompositions (> 1%)"
        )));
    }
    let rows_counted = sizes.len();
    let record = CountRecord::from_sizes(sizes, params.depth, "bisector");
    let policy = WindowPolicy::default();
    let window = policy.window(params.depth, min_letter_norm(&ctx.gens));
    let model = match params.beta_frozen {
        Some(b) => FitModel::FrozenBeta(b),
        None => FitModel::FrozenBeta(beta_target),
    };
    let fit = fit_exponential_polynomial(&record, &model, window, &policy).ok();

    // For the cross-check, evaluate the growth indicator at the embedded
    // direction when it is dominant.
    let growth_opts = GrowthOptions::new(min_letter_norm(&ctx.gens));
    let embedded = pair.from_b_coords(&dir).embedded;
    let growth_delta = if embedded.is_dominant(1e-9) {
        growth_at_direction(&table, &embedded.normalized(), &growth_opts)?.value
    } else {
        f64::NEG_INFINITY
    };
    Ok((
        table,
        BisectorReport {
            record,
            fit,
            growth_delta_at_direction: growth_delta,
            beta_target,
            rows_total,
            rows_ambiguous: ambiguous,
            rows_counted,
        },
    ))
}

pub struct SymmetricCountParams {
    pub depth: u32,
    pub invariant: CosetInvariant,
    /// Use the adapted norm induced by the tangent form at the maximal
    /// direction instead of the trace norm.
    pub beta_frozen: Option<f64>,
}

pub fn run_symmetric_count(
    ctx: &ExperimentContext,
    params: &SymmetricCountParams,
) -> Result<(OrbitTable, SymmetricCountReport)> {
    let pair = ctx
        .pair
        .as_ref()
        .ok_or_else(|| Error::Config("symmetric count requires a pair".into()))?;
    let table = provide_table(ctx, params.depth, false)?;
    let rows_before = table.rows.len();
    let deduped = dedup_cosets(&table, &ctx.gens, &params.invariant)?;
    let rows_after = deduped.rows.len();

    let mut sizes = Vec::with_capacity(rows_after);
    for row in &deduped.rows {
        let g = ctx.gens.element_of_word(&row.word)?;
        let b = h_cartan_projection(&g, pair)?;
        sizes.push(b.norm());
    }
    let mut record = CountRecord::from_sizes(sizes, params.depth, "symmetric-count");
    record.dedup_mode = match params.invariant {
        CosetInvariant::FactorRatio => "factor-ratio".into(),
        CosetInvariant::OrthogonalForm { .. } => "orthogonal-form".into(),
    };
    let r = ctx.gens.descriptor.rank();
    let r0 = pair.r0();
    let beta_target = (r0 as f64 - r as f64) / 2.0;
    let policy = WindowPolicy::default();
    let window = policy.window(params.depth, min_letter_norm(&ctx.gens));
    let model = match params.beta_frozen {
        Some(b) => FitModel::FrozenBeta(b),
        None => FitModel::FrozenBeta(beta_target),
    };
    let fit = fit_exponential_polynomial(&record, &model, window, &policy).ok();

    // Full-group growth rate for the comparison delta_hat <= delta_Gamma.
    // Shallow tables cannot support the fit; the comparison degrades to NaN
    // rather than failing the count.
    let growth_opts = GrowthOptions::new(min_letter_norm(&ctx.gens));
    let grid = direction_grid(&ctx.gens.descriptor, 9)?;
    let est = estimate_growth_indicator(&table, &grid, &growth_opts)?;
    let delta_full = match maximal_growth_direction(&table, &est, &growth_opts) {
        Ok((_, d)) => d,
        Err(Error::InsufficientData(_)) => f64::NAN,
        Err(e) => return Err(e),
    };
    Ok((
        table,
        SymmetricCountReport {
            record,
            fit,
            delta_full_group: delta_full,
            beta_target,
            rows_before_dedup: rows_before,
            rows_after_dedup: rows_after,
        },
    ))
}

pub fn run_ps_measure(
    ctx: &ExperimentContext,
    params: &serde_json::Value,
) -> Result<(AtomicMeasure, PsMeasureReport)> {
    let depth = ctx.opts.depth.unwrap_or_else(|| param(params, "depth", 8u32));
    let table = provide_table(ctx, depth, true)?;
    let norm_floor = param(params, "norm_floor", 1e-6f64);

    // Default form: delta_hat times the dual of the maximal growth direction.
    let growth_opts = GrowthOptions::new(min_letter_norm(&ctx.gens));
    let grid = direction_grid(&ctx.gens.descriptor, 9)?;
    let est = estimate_growth_indicator(&table, &grid, &growth_opts)?;
    let (u_max, delta) = maximal_growth_direction(&table, &est, &growth_opts)?;
    let psi_coeffs: Option<Vec<f64>> = param(params, "psi", None);
    let psi = match psi_coeffs {
        Some(c) => LinearForm::new(ctx.gens.descriptor.clone(), c),
        None => LinearForm::from_vector(&u_max.scale(delta)),
    };
    let s = param(params, "s", 1.05f64);
    let measure = ps_atoms(&table, &psi, s, norm_floor)?;

    let mut conformality = Vec::new();
    for (i, label) in ctx.gens.labels.iter().enumerate() {
        let residual = conformality_residual(
            &table,
            &ctx.gens,
            &psi,
            s,
            &[(i + 1) as i16],
            norm_floor,
        )?;
        conformality.push((label.clone(), residual));
    }
    let report = PsMeasureReport {
        depth,
        s,
        atom_count: measure.atoms.len(),
        total_mass: measure.total_mass(),
        conformality,
    };
    Ok((measure, report))
}

// ---------------------------------------------------------------------------
// Output serialization (deterministic)
// ---------------------------------------------------------------------------

/// results.csv: T, N, logN rows. Numbers use the shortest round-trip decimal.
pub fn results_csv(record: &CountRecord) -> String {
    let mut out = String::from("T,N,logN\n");
    for (&t, &n) in record.t_grid.iter().zip(&record.counts) {
        let log_n = if n > 0 { (n as f64).ln().to_string() } else { "-inf".to_string() };
        out.push_str(&format!("{t},{n},{log_n}\n"));
    }
    out
}

pub fn fit_json(fit: &Option<FitResult>) -> String {
    match fit {
        Some(f) => serde_json::to_string_pretty(f).expect("fit serializes"),
        None => "null".to_string(),
    }
}

pub fn report_json<T: Serialize>(report: &T) -> String {
    serde_json::to_string_pretty(report).expect("report serializes")
}

/// Atom table as CSV: flattened frame entries then the weight.
pub fn atoms_csv(measure: &AtomicMeasure) -> String {
    let mut out = String::new();
    if let Some((flag, _)) = measure.atoms.first() {
        let cols: usize = flag.frames.iter().map(|f| f.data.len()).sum();
        for i in 0..cols {
            out.push_str(&format!("f{i},"));
        }
        out.push_str("weight\n");
    }
    for (flag, w) in &measure.atoms {
        for frame in &flag.frames {
            for x in &frame.data {
                out.push_str(&format!("{x},"));
            }
        }
        out.push_str(&format!("{w}\n"));
    }
    out
}

/// Plain scatter of (T, log N) with the fitted line, as a minimal SVG.
pub fn scatter_svg(record: &CountRecord, fit: &Option<FitResult>) -> String {
    let pts: Vec<(f64, f64)> = record
        .t_grid
        .iter()
        .zip(&record.counts)
        .filter(|(_, &n)| n > 0)
        .map(|(&t, &n)| (t, (n as f64).ln()))
        .collect();
    let (w, h) = (640.0, 400.0);
    let mut svg = format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{w}\" height=\"{h}\" viewBox=\"0 0 {w} {h}\">\n"
    );
    svg.push_str("<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n");
    if !pts.is_empty() {
        let x_max = pts.iter().map(|p| p.0).fold(f64::MIN, f64::max).max(1e-9);
        let y_max = pts.iter().map(|p| p.1).fold(f64::MIN, f64::max).max(1e-9);
        let sx = |x: f64| 40.0 + x / x_max * (w - 60.0);
        let sy = |y: f64| h - 30.0 - (y / y_max * (h - 60.0)).max(0.0);
        for (x, y) in &pts {
            svg.push_str(&format!(
                "<circle cx=\"{:.2}\" cy=\"{:.2}\" r=\"1.5\" fill=\"black\"/>\n",
                sx(*x),
                sy(*y)
            ));
        }
        if let Some(f) = fit {
            let y0 = f.delta * f.window.0 + f.beta * f.window.0.max(1e-9).ln() + f.c;
            let y1 = f.delta * f.window.1 + f.beta * f.window.1.ln() + f.c;
            svg.push_str(&format!(
                "<line x1=\"{:.2}\" y1=\"{:.2}\" x2=\"{:.2}\" y2=\"{:.2}\" stroke=\"red\"/>\n",
                sx(f.window.0),
                sy(y0),
                sx(f.window.1),
                sy(y1)
            ));
        }
        svg.push_str(&format!(
            "<text x=\"40\" y=\"16\" font-size=\"12\">{} rows, depth {}</text>\n",
            record.total(),
            record.depth
        ));
    }
    svg.push_str("</svg>\n");
    svg
}

// ---------------------------------------------------------------------------
// High-level helpers shared by the CLI and the acceptance suite
// ---------------------------------------------------------------------------

/// Tangent data at a direction: the form, the adapted norm, and s_v.
pub fn tangent_data_at(
    table: &OrbitTable,
    est: &GrowthIndicatorEstimate,
    cone_est: &LimitConeEstimate,
    v: &CartanVector,
    growth: &GrowthOptions,
) -> Result<(crate::cone::TangentForm, crate::cone::AdaptedNorm, f64)> {
    let opts = TangentOptions { step: 0.02, growth: growth.clone() };
    let tf = tangent_form(table, est, cone_est, v, &opts)?;
    let norm = adapted_norm(&tf.theta, v)?;
    let sv = crate::cone::s_v(&tf.theta, v)?;
    Ok((tf, norm, sv))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;

    fn theta_ctx(depth: u32) -> ExperimentContext {
        let gens = fixtures::product_schottky_fixture();
        ExperimentContext {
            pair: Some(
                SymmetricPairDescriptor::new(PairKind::Theta, gens.descriptor.clone())
                    .unwrap(),
            ),
            gens,
            opts: RunOptions { depth: Some(depth), threads: 2, ..Default::default() },
        }
    }

    fn bisector_params(ctx: &ExperimentContext, omega_h: GroupWindow, omega_k: GroupWindow) -> BisectorParams {
        let v = crate::cone::direction_from_simplex(&ctx.gens.descriptor, &[0.5, 0.5]);
        let b_dir = ctx.pair.as_ref().unwrap().project_to_b(&v);
        BisectorParams {
            depth: ctx.opts.depth.unwrap(),
            direction: b_dir.coords,
            aperture: 0.3,
            omega_h,
            omega_k,
            beta_frozen: Some(0.0),
        }
    }

    #[test]
    fn empty_window_counts_nothing() {
        let ctx = theta_ctx(4);
        let center = GroupElement::identity(&ctx.gens.descriptor);
        let params = bisector_params(
            &ctx,
            GroupWindow::All,
            GroupWindow::Ball { center, radius: -1.0 },
        );
        let (_, report) = run_bisector(&ctx, &params).unwrap();
        assert_eq!(report.record.total(), 0);
    }

    #[test]
    fn shrinking_omega_h_is_pointwise_monotone() {
        let ctx = theta_ctx(4);
        let center = GroupElement::identity(&ctx.gens.descriptor);
        let big = bisector_params(
            &ctx,
            GroupWindow::Ball { center: center.clone(), radius: 1.6 },
            GroupWindow::All,
        );
        let small = bisector_params(
            &ctx,
            GroupWindow::Ball { center, radius: 0.8 },
            GroupWindow::All,
        );
        let (_, rep_big) = run_bisector(&ctx, &big).unwrap();
        let (_, rep_small) = run_bisector(&ctx, &small).unwrap();
        assert!(rep_small.record.total() <= rep_big.record.total());
        assert!(rep_small.record.total() > 0);
        for (i, &t) in rep_small.record.t_grid.iter().enumerate() {
            let n_small = rep_small.record.counts[i];
            let n_big = rep_big.record.count_at(t);
            assert!(n_small <= n_big, "monotonicity broken at T = {t}");
        }
    }

    #[test]
    fn diagonal_fixture_has_constant_symmetric_count() {
        // Gamma inside H: every b(gamma) vanishes, so N(T) is constant and
        // dedup collapses to one coset.
        let gens = fixtures::diagonal_product_fixture();
        let ctx = ExperimentContext {
            pair: Some(
                SymmetricPairDescriptor::new(
                    PairKind::FactorSwap,
                    gens.descriptor.clone(),
                )
                .unwrap(),
            ),
            gens,
            opts: RunOptions { depth: Some(3), threads: 1, ..Default::default() },
        };
        let (_, report) = run_symmetric_count(
            &ctx,
            &SymmetricCountParams {
                depth: 3,
                invariant: crate::words::CosetInvariant::FactorRatio,
                beta_frozen: Some(-0.5),
            },
        )
        .unwrap();
        assert_eq!(report.rows_after_dedup, 1);
        let counts = &report.record.counts;
        assert!(counts.iter().all(|&n| n == counts[0]), "N(T) not constant: {counts:?}");
    }

    #[test]
    fn symmetric_count_matches_naive_recount() {
        let gens = fixtures::product_schottky_fixture();
        let pair =
            SymmetricPairDescriptor::new(PairKind::FactorSwap, gens.descriptor.clone())
                .unwrap();
        let ctx = ExperimentContext {
            pair: Some(pair.clone()),
            gens: gens.clone(),
            opts: RunOptions { depth: Some(4), threads: 2, ..Default::default() },
        };
        let (table, report) = run_symmetric_count(
            &ctx,
            &SymmetricCountParams {
                depth: 4,
                invariant: crate::words::CosetInvariant::FactorRatio,
                beta_frozen: None,
            },
        )
        .unwrap();
        // Naive per-row recount straight from the table.
        let deduped =
            dedup_cosets(&table, &gens, &crate::words::CosetInvariant::FactorRatio).unwrap();
        let mut sizes: Vec<f64> = deduped
            .rows
            .iter()
            .map(|row| {
                h_cartan_projection(&gens.element_of_word(&row.word).unwrap(), &pair)
                    .unwrap()
                    .norm()
            })
            .collect();
        sizes.sort_by(|a, b| a.partial_cmp(b).unwrap());
        for (i, &t) in report.record.t_grid.iter().enumerate() {
            let brute = sizes.iter().filter(|&&x| x <= t).count() as u64;
            assert_eq!(report.record.counts[i], brute, "mismatch at T = {t}");
        }
    }

    #[test]
    fn config_roundtrip_and_context() {
        let text = r#"{
            "group": {
                "factors": [{"dim": 2}, {"dim": 2, "projective": false}],
                "generators": [
                    {"label": "a", "matrices": [[[2.0,1.0],[1.0,1.0]], [[3.0,1.0],[2.0,1.0]]]},
                    {"label": "b", "matrices": [[[1.0,1.0],[1.0,2.0]], [[1.0,2.0],[1.0,3.0]]]}
                ]
            },
            "pair": {"kind": "swap"},
            "experiment": {"kind": "symmetric-count", "params": {"depth": 3}}
        }"#;
        let config = ExperimentConfig::from_json(text).unwrap();
        let ctx = build_context(&config, RunOptions::default()).unwrap();
        assert_eq!(ctx.gens.p(), 2);
        assert!(matches!(ctx.pair.as_ref().unwrap().kind, PairKind::FactorSwap));
    }

    #[test]
    fn csv_serialization_format() {
        let record = crate::count::CountRecord::from_sizes(vec![0.05, 0.15], 1, "t");
        let csv = results_csv(&record);
        let mut lines = csv.lines();
        assert_eq!(lines.next(), Some("T,N,logN"));
        assert_eq!(lines.next(), Some("0,0,-inf"));
        assert!(csv.ends_with('\n'));
    }
}
