//! Acceptance suite: one test per release criterion, each printing a single
//! PASS/FAIL line (run with `--nocapture` to see them all). Tolerances are
//! pinned here, not configurable.

use anosov_core::boundary::conformality_residual;
use anosov_core::cone::{
    direction_from_simplex, direction_grid, estimate_growth_indicator, estimate_limit_cone,
    growth_at_direction, maximal_growth_direction, simplex_coords, GrowthOptions,
};
use anosov_core::count::{count_in_cone, Region, SizeNorm};
use anosov_core::experiment::{
    fit_json, results_csv, run_bisector, run_count, run_ps_measure, run_symmetric_count,
    BisectorParams, ExperimentContext, GroupWindow, RunOptions, SymmetricCountParams,
};
use anosov_core::fit::{
    fit_exponential_polynomial, poincare_abscissa, FitModel, WindowPolicy,
};
use anosov_core::fixtures;
use anosov_core::group::{
    cartan_projection, inner, iwasawa_decompose, jordan_projection, kak_decompose,
    opposition_involution, CartanVector, GroupElement, LinearForm,
};
use anosov_core::linalg::Mat;
use anosov_core::symmetric::{
    dom_integral_check, gcartan_decompose, PairKind, SymmetricPairDescriptor,
};
use anosov_core::words::{enumerate_ball, CosetInvariant, EnumerateOptions, GeneratorSystem, OrbitTable};
use rand::{RngExt, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::sync::OnceLock;

const SEED: u64 = 0xACCE;

fn verdict(criterion: &str, passed: bool, detail: &str) -> bool {
    println!(
        "criterion {criterion}: {} - {detail}",
        if passed { "PASS" } else { "FAIL" }
    );
    passed
}

fn enumerate(gens: &GeneratorSystem, depth: u32, with_flags: bool) -> OrbitTable {
    enumerate_ball(
        gens,
        depth,
        &EnumerateOptions { with_flags, threads: 8, ..Default::default() },
    )
    .expect("fixture enumeration succeeds")
}

fn product_table_12() -> &'static OrbitTable {
    static TABLE: OnceLock<OrbitTable> = OnceLock::new();
    TABLE.get_or_init(|| enumerate(&fixtures::product_schottky_fixture(), 12, false))
}

fn rankone_table_10() -> &'static OrbitTable {
    static TABLE: OnceLock<OrbitTable> = OnceLock::new();
    TABLE.get_or_init(|| enumerate(&fixtures::sl2_schottky_fixture(), 10, true))
}

fn rankone_table_12() -> &'static OrbitTable {
    static TABLE: OnceLock<OrbitTable> = OnceLock::new();
    TABLE.get_or_init(|| enumerate(&fixtures::sl2_schottky_fixture(), 12, true))
}

fn min_letter(gens: &GeneratorSystem) -> f64 {
    gens.generators
        .iter()
        .map(|g| cartan_projection(g).unwrap().norm())
        .fold(f64::INFINITY, f64::min)
}

fn bounded_word(
    gens: &GeneratorSystem,
    rng: &mut ChaCha8Rng,
    max_len: usize,
    max_entry: f64,
) -> GroupElement {
    for _ in 0..64 {
        let len = rng.random_range(1..=max_len);
        let word = fixtures::random_reduced_word(rng, gens.p(), len);
        let g = gens.element_of_word(&word).unwrap();
        if g.max_abs() <= max_entry {
            return g;
        }
    }
    gens.generators[0].clone()
}

// ---------------------------------------------------------------------------
// 1. Identity suite
// ---------------------------------------------------------------------------

#[test]
fn criterion_1_identity_suite() {
    let systems = [
        ("sl2", fixtures::sl2_ball_fixture()),
        ("sl3", fixtures::sl3_fixture()),
        ("sl2xsl2", fixtures::product_schottky_fixture()),
    ];
    let words_per_fixture = 10_000usize;
    let mut involution_worst: f64 = 0.0;
    let mut homogeneity_worst: f64 = 0.0;
    for (f, (_, gens)) in systems.iter().enumerate() {
        let mut rng = ChaCha8Rng::seed_from_u64(SEED + f as u64);
        for _ in 0..words_per_fixture {
            let g = bounded_word(gens, &mut rng, 8, 300.0);
            let mu = cartan_projection(&g).unwrap();
            let mu_inv = cartan_projection(&g.inverse()).unwrap();
            involution_worst =
                involution_worst.max(mu_inv.dist(&opposition_involution(&mu)));
            let lam = jordan_projection(&g).unwrap();
            let lam_inv = jordan_projection(&g.inverse()).unwrap();
            involution_worst =
                involution_worst.max(lam_inv.dist(&opposition_involution(&lam)));
        }
        // Powers multiply the spectral spread; keep the base words short so
        // g^5 stays within what f64 entries can represent.
        for _ in 0..words_per_fixture / 4 {
            let g = bounded_word(gens, &mut rng, 2, 300.0);
            let lam = jordan_projection(&g).unwrap();
            let mut power = g.clone();
            for n in 2..=5usize {
                power = power.mul(&g);
                let lam_n = jordan_projection(&power).unwrap();
                homogeneity_worst = homogeneity_worst.max(lam_n.dist(&lam.scale(n as f64)));
            }
        }
    }

    // Busemann identities on the sl3 fixture.
    let gens = fixtures::sl3_fixture();
    let desc = gens.descriptor.clone();
    let mut rng = ChaCha8Rng::seed_from_u64(SEED + 10);
    let e = GroupElement::identity(&desc);
    let mut busemann_worst: f64 = 0.0;
    let mut cocycle_worst: f64 = 0.0;
    let mut cancel_worst: f64 = 0.0;
    for _ in 0..10_000 {
        use anosov_core::boundary::{busemann, iwasawa_cocycle, Flag};
        // The identity defect grows like eps * kappa(g) * kappa(h); entry
        // bound 10 keeps the whole battery two orders below tolerance.
        let g = bounded_word(&gens, &mut rng, 3, 10.0);
        let h = bounded_word(&gens, &mut rng, 3, 10.0);
        let q = bounded_word(&gens, &mut rng, 3, 10.0);
        let k = fixtures::random_orthogonal(&desc, &mut rng);
        let xi = Flag::from_element(&k);
        let sum = busemann(&xi, &g, &h).unwrap().add(&busemann(&xi, &h, &q).unwrap());
        busemann_worst = busemann_worst.max(sum.dist(&busemann(&xi, &g, &q).unwrap()));
        let moved = busemann(&xi.translate(&g), &g.mul(&h), &g.mul(&q)).unwrap();
        busemann_worst = busemann_worst.max(moved.dist(&busemann(&xi, &h, &q).unwrap()));
        let lhs = iwasawa_cocycle(&g.mul(&h), &xi).unwrap();
        let rhs = iwasawa_cocycle(&g, &xi.translate(&h))
            .unwrap()
            .add(&iwasawa_cocycle(&h, &xi).unwrap());
        cocycle_worst = cocycle_worst.max(lhs.dist(&rhs));

        let v = fixtures::random_dominant(&desc, &mut rng, 0.0);
        let a = GroupElement::exp_cartan(&v);
        let plus = busemann(&Flag::base_plus(&desc), &e, &a).unwrap();
        let minus = busemann(&Flag::base_minus(&desc), &e, &a).unwrap();
        cancel_worst = cancel_worst.max(plus.add(&opposition_involution(&minus)).norm());
    }

    let pass = involution_worst < 1e-9
        && homogeneity_worst < 1e-8
        && busemann_worst < 1e-8
        && cocycle_worst < 1e-8
        && cancel_worst < 1e-10;
    assert!(
        verdict(
            "1 (identity suite)",
            pass,
            &format!(
                "involution {involution_worst:.2e} (<1e-9), power {homogeneity_worst:.2e} \
                 (<1e-8), busemann {busemann_worst:.2e} / cocycle {cocycle_worst:.2e} (<1e-8), \
                 cancellation {cancel_worst:.2e} (<1e-10)"
            ),
        ),
        "identity suite exceeded tolerances"
    );
}

// ---------------------------------------------------------------------------
// 2. Decomposition round-trips
// ---------------------------------------------------------------------------

#[test]
fn criterion_2_decomposition_roundtrips() {
    let systems = [
        fixtures::sl2_ball_fixture(),
        fixtures::sl3_fixture(),
        fixtures::product_schottky_fixture(),
    ];
    let mut iw_worst: f64 = 0.0;
    let mut kak_worst: f64 = 0.0;
    for (f, gens) in systems.iter().enumerate() {
        let mut rng = ChaCha8Rng::seed_from_u64(SEED + 20 + f as u64);
        for _ in 0..1_000 {
            let g = bounded_word(gens, &mut rng, 6, 60.0);
            let scale = 1.0 + g.max_abs();
            let (k, a, n) = iwasawa_decompose(&g).unwrap();
            let rec = k.mul(&GroupElement::exp_cartan(&a)).mul(&n);
            iw_worst = iw_worst.max(rec.dist(&g) / scale);
            let kak = kak_decompose(&g).unwrap();
            let rec = kak.k1.mul(&GroupElement::exp_cartan(&kak.mu)).mul(&kak.k2);
            kak_worst = kak_worst.max(rec.dist(&g) / scale);
        }
    }

    // Generalized Cartan: 1000 constructed samples per supported pair.
    let pairs = [
        SymmetricPairDescriptor::new(PairKind::Theta, fixtures::sl2_descriptor()).unwrap(),
        SymmetricPairDescriptor::new(PairKind::FactorSwap, fixtures::product_descriptor())
            .unwrap(),
        SymmetricPairDescriptor::new(
            PairKind::IndefiniteOrthogonal { p: 2, q: 1 },
            fixtures::sl3_descriptor(),
        )
        .unwrap(),
    ];
    let mut g_worst: f64 = 0.0;
    let mut h_worst: f64 = 0.0;
    for (pi, pair) in pairs.iter().enumerate() {
        let mut rng = ChaCha8Rng::seed_from_u64(SEED + 30 + pi as u64);
        let mut done = 0;
        while done < 1_000 {
            let mut coords: Vec<f64> =
                (0..pair.r0()).map(|_| rng.random_range(0.3..1.8)).collect();
            coords.sort_by(|a, b| b.partial_cmp(a).unwrap());
            for i in 1..coords.len() {
                let bound = coords[i - 1] - 0.2;
                if coords[i] > bound {
                    coords[i] = bound;
                }
            }
            let b = pair.from_b_coords(&coords);
            if !b.is_dominant(pair, 0.0) {
                continue;
            }
            // exp of the sigma-symmetrized part of a random Lie element lies
            // in the identity component of H.
            let y: Vec<Mat> = pair
                .group
                .factor_dims
                .iter()
                .map(|&d| {
                    let mut m = Mat::zeros(d, d);
                    for x in m.data.iter_mut() {
                        *x = rng.random_range(-0.4..0.4);
                    }
                    let tr = m.trace() / d as f64;
                    for i in 0..d {
                        m[(i, i)] -= tr;
                    }
                    m
                })
                .collect();
            let sy = pair.sigma_lie(&y);
            let h = GroupElement {
                descriptor: pair.group.clone(),
                factors: y.iter().zip(&sy).map(|(a, s)| a.add(s).scale(0.5).expm()).collect(),
            };
            let k = fixtures::random_orthogonal(&pair.group, &mut rng);
            let g = h.mul(&GroupElement::exp_cartan(&b.embedded)).mul(&k);
            let dec = gcartan_decompose(&g, pair).unwrap();
            g_worst = g_worst.max(dec.residual);
            h_worst = h_worst.max(dec.h_residual);
            done += 1;
        }
    }
    let pass = iw_worst < 1e-10 && kak_worst < 1e-9 && g_worst < 1e-8 && h_worst < 1e-7;
    assert!(
        verdict(
            "2 (decomposition round-trips)",
            pass,
            &format!(
                "iwasawa {iw_worst:.2e} (<1e-10), kak {kak_worst:.2e} (<1e-9), gcartan \
                 {g_worst:.2e} (<1e-8), sigma(h)=h {h_worst:.2e} (<1e-7)"
            ),
        ),
        "decomposition residuals exceeded tolerances"
    );
}

// ---------------------------------------------------------------------------
// 3. Dominated-convergence quadrature
// ---------------------------------------------------------------------------

#[test]
fn criterion_3_dom_quadrature() {
    let mut worst_rel: f64 = 0.0;
    let mut bound_ok = true;
    for gap in [0usize, 1, 2] {
        for w in [0.0f64, 1.0, 2.0] {
            let (r, r0) = (2 + gap, 2);
            let chk =
                dom_integral_check(1.0, r, r0, w, 1e4, std::f64::consts::FRAC_PI_4).unwrap();
            worst_rel = worst_rel.max((chk.numeric - chk.limit).abs() / chk.limit);
            // At w = 0, r > r0 the finite-T integral exceeds the paper bound
            // by |r0-r|/(2 delta T); the bound is enforced at the criterion's
            // own relative tolerance.
            if chk.numeric > chk.bound * 1.005 {
                bound_ok = false;
            }
        }
    }
    let pass = worst_rel < 0.005 && bound_ok;
    assert!(
        verdict(
            "3 (dominated-convergence quadrature)",
            pass,
            &format!("worst relative gap to the limit {worst_rel:.2e} (<5e-3), bounds {bound_ok}"),
        ),
        "quadrature check failed"
    );
}

// ---------------------------------------------------------------------------
// 4. Vanishing outside the limit cone
// ---------------------------------------------------------------------------

#[test]
fn criterion_4_vanishing_outside_limit_cone() {
    let gens = fixtures::product_schottky_fixture();
    let desc = gens.descriptor.clone();
    let table10 = enumerate(&gens, 10, false);
    let table12 = product_table_12();
    let cone = estimate_limit_cone(table12, 1.0).unwrap();
    let hull_hi = cone.hull_vertices.iter().map(|p| p[0]).fold(f64::MIN, f64::max);
    let hull_lo = cone.hull_vertices.iter().map(|p| p[0]).fold(f64::MAX, f64::min);

    // Forbidden zones: simplex coordinate at least 0.1 beyond the hull.
    let zones = [(hull_hi + 0.1, f64::INFINITY), (f64::NEG_INFINITY, hull_lo - 0.1)];
    let in_zone = |table: &OrbitTable, zone: &(f64, f64)| -> (usize, f64) {
        let mut count = 0;
        let mut t0: f64 = 0.0;
        for row in &table.rows {
            if row.mu.norm() == 0.0 {
                continue;
            }
            if let Some(c) = simplex_coords(&desc, &row.mu) {
                if c[0] >= zone.0 && c[0] <= zone.1 {
                    count += 1;
                    t0 = t0.max(row.mu.norm());
                }
            }
        }
        (count, t0)
    };
    let mut pass = cone.wall_margin > 0.0;
    let mut detail = format!("hull [{hull_lo:.3}, {hull_hi:.3}]");
    for zone in &zones {
        // T0 recorded at depth 10; depth 12 must add nothing beyond it.
        let (_, t0) = in_zone(&table10, zone);
        let mut beyond = 0usize;
        for row in &table12.rows {
            if row.mu.norm() <= t0 {
                continue;
            }
            if let Some(c) = simplex_coords(&desc, &row.mu) {
                if c[0] >= zone.0 && c[0] <= zone.1 {
                    beyond += 1;
                }
            }
        }
        detail.push_str(&format!(", zone T0 = {t0:.3} with {beyond} points beyond"));
        if beyond != 0 {
            pass = false;
        }
    }
    assert!(
        verdict("4 (vanishing outside the limit cone)", pass, &detail),
        "forbidden cone contains deep orbit points"
    );
}

// ---------------------------------------------------------------------------
// 5. Growth-exponent consistency
// ---------------------------------------------------------------------------

#[test]
fn criterion_5_growth_exponent_consistency() {
    let gens = fixtures::sl2_schottky_fixture();
    let u = direction_grid(&gens.descriptor, 1).unwrap()[0].clone();
    let opts = GrowthOptions::new(min_letter(&gens));
    let two_rho_bound = gens.descriptor.two_rho().eval(&u);

    let mut deltas = Vec::new();
    let mut abscissas = Vec::new();
    for table in [rankone_table_10(), rankone_table_12()] {
        deltas.push(growth_at_direction(table, &u, &opts).unwrap().value);
        abscissas.push(poincare_abscissa(table).unwrap());
    }
    let depth_rel = (deltas[1] - deltas[0]).abs() / deltas[1];
    let oracle_rel_10 = (deltas[0] - abscissas[0]).abs() / abscissas[0];
    let oracle_rel_12 = (deltas[1] - abscissas[1]).abs() / abscissas[1];
    let positive_and_bounded = deltas.iter().all(|&d| d > 0.0 && d <= two_rho_bound);
    let pass = depth_rel < 0.05
        && oracle_rel_10 < 0.05
        && oracle_rel_12 < 0.05
        && positive_and_bounded;
    assert!(
        verdict(
            "5 (growth-exponent consistency)",
            pass,
            &format!(
                "delta(10) = {:.5}, delta(12) = {:.5} (depth rel {depth_rel:.3}), Poincare \
                 {:.5}/{:.5} (rel {oracle_rel_10:.3}/{oracle_rel_12:.3}), bound {two_rho_bound:.4}",
                deltas[0], deltas[1], abscissas[0], abscissas[1]
            ),
        ),
        "growth exponents inconsistent"
    );
}

// ---------------------------------------------------------------------------
// 6. Directional counting vs growth indicator; bisector reduction
// ---------------------------------------------------------------------------

#[test]
fn criterion_6_directional_counts_and_bisector_reduction() {
    let gens = fixtures::product_schottky_fixture();
    let desc = gens.descriptor.clone();
    let table = product_table_12();
    let opts = GrowthOptions::new(min_letter(&gens));
    let policy = WindowPolicy::default();
    let window = policy.window(12, min_letter(&gens));
    let r = desc.rank();
    let beta_frozen = -((r as f64 - 1.0) / 2.0);

    let mut worst_rel: f64 = 0.0;
    let mut details = String::new();
    for simplex0 in [0.42, 0.5, 0.58] {
        let v = direction_from_simplex(&desc, &[simplex0, 1.0 - simplex0]);
        let psi_hat = growth_at_direction(table, &v, &opts).unwrap().value;
        let region = Region::Cone { axis: v.clone(), aperture: 0.05 };
        let record = count_in_cone(table, &region, &SizeNorm::TraceMu, "c6").unwrap();
        let fit = fit_exponential_polynomial(
            &record,
            &FitModel::FrozenBeta(beta_frozen),
            window,
            &policy,
        )
        .unwrap();
        let rel = (fit.delta / psi_hat - 1.0).abs();
        worst_rel = worst_rel.max(rel);
        details.push_str(&format!("v={simplex0}: {:.4}/{:.4} ", fit.delta, psi_hat));
    }

    // H = K bisector reduction: identical counts to the plain directional
    // count through the generalized Cartan route.
    let ctx = ExperimentContext {
        gens: gens.clone(),
        pair: Some(SymmetricPairDescriptor::new(PairKind::Theta, desc.clone()).unwrap()),
        opts: RunOptions { depth: Some(8), threads: 8, ..Default::default() },
    };
    let v = direction_from_simplex(&desc, &[0.5, 0.5]);
    let b_dir = ctx.pair.as_ref().unwrap().project_to_b(&v);
    let (table8, bis) = run_bisector(
        &ctx,
        &BisectorParams {
            depth: 8,
            direction: b_dir.coords.clone(),
            aperture: 0.12,
            omega_h: GroupWindow::All,
            omega_k: GroupWindow::All,
            beta_frozen: Some(0.0),
        },
    )
    .unwrap();
    let region = Region::Cone { axis: v, aperture: 0.12 };
    let plain = count_in_cone(&table8, &region, &SizeNorm::TraceMu, "plain").unwrap();
    let exact = plain.counts == bis.record.counts;

    let pass = worst_rel <= 0.10 && exact;
    assert!(
        verdict(
            "6 (directional counts vs indicator)",
            pass,
            &format!(
                "{details}worst rel {worst_rel:.3} (<=0.10), bisector reduction identical: \
                 {exact} ({} rows)",
                bis.record.total()
            ),
        ),
        "directional counting inconsistent with the growth indicator"
    );
}

// ---------------------------------------------------------------------------
// 7. Symmetric-count experiment
// ---------------------------------------------------------------------------

#[test]
fn criterion_7_symmetric_count() {
    let gens = fixtures::product_schottky_fixture();
    let ctx = ExperimentContext {
        gens: gens.clone(),
        pair: Some(
            SymmetricPairDescriptor::new(PairKind::FactorSwap, gens.descriptor.clone())
                .unwrap(),
        ),
        opts: RunOptions { depth: Some(12), threads: 8, ..Default::default() },
    };
    let (_, report) = run_symmetric_count(
        &ctx,
        &SymmetricCountParams {
            depth: 12,
            invariant: CosetInvariant::FactorRatio,
            beta_frozen: Some(-0.5), // (r0 - r)/2 for r0 = 1, r = 2
        },
    )
    .unwrap();
    let fit = report.fit.as_ref().expect("fit succeeds at depth 12");
    let upper = report.delta_full_group + 2.0 * fit.stderr_delta;
    let strictly_increasing = report.record.total() > 0;

    // Unconstrained beta is a diagnostic only: the polynomial term is not
    // tightly reproducible at desk scale.
    let policy = WindowPolicy::default();
    let window = policy.window(12, min_letter(&gens));
    let free_beta = fit_exponential_polynomial(
        &report.record,
        &FitModel::ExponentialPolynomial,
        window,
        &policy,
    )
    .map(|f| f.beta)
    .unwrap_or(f64::NAN);

    let pass = fit.delta <= upper && strictly_increasing;
    assert!(
        verdict(
            "7 (symmetric count)",
            pass,
            &format!(
                "delta_b = {:.5} <= delta_Gamma + 2se = {:.5}; beta diagnostic {free_beta:.3} \
                 (target -0.5, no hard tolerance); dedup {} -> {}",
                fit.delta, upper, report.rows_before_dedup, report.rows_after_dedup
            ),
        ),
        "symmetric count exponent exceeded the full-group rate"
    );
}

// ---------------------------------------------------------------------------
// 8. Conformality trend
// ---------------------------------------------------------------------------

#[test]
fn criterion_8_conformality_trend() {
    let gens = fixtures::sl2_schottky_fixture();
    let u = direction_grid(&gens.descriptor, 1).unwrap()[0].clone();
    let opts = GrowthOptions::new(min_letter(&gens));

    let mut residuals = Vec::new();
    for table in [rankone_table_10(), rankone_table_12()] {
        let delta = growth_at_direction(table, &u, &opts).unwrap().value;
        let psi = LinearForm::from_vector(&u.scale(delta));
        let per_gen: Vec<f64> = (1..=gens.p() as i16)
            .map(|letter| {
                conformality_residual(table, &gens, &psi, 1.05, &[letter], 1e-6).unwrap()
            })
            .collect();
        residuals.push(per_gen);
    }
    let trend_ok = residuals[0]
        .iter()
        .zip(&residuals[1])
        .all(|(shallow, deep)| deep < shallow);

    // Scale invariance: multiplying the raw weights by a power of two before
    // normalization reproduces the normalized weights bit for bit (scaling by
    // 2^k commutes with every rounding in the sum and the division).
    let table = rankone_table_10();
    let delta = growth_at_direction(table, &u, &opts).unwrap().value;
    let psi = LinearForm::from_vector(&u.scale(delta));
    let raw: Vec<f64> = table
        .rows
        .iter()
        .filter(|r| !r.word.is_empty() && r.mu.norm() > 1e-6)
        .map(|r| (-1.05 * psi.eval(&r.mu)).exp())
        .collect();
    let total: f64 = raw.iter().sum();
    let total4: f64 = raw.iter().map(|w| w * 4.0).sum();
    let scale_exact = raw
        .iter()
        .all(|w| w / total == (w * 4.0) / total4);

    let pass = trend_ok && scale_exact;
    assert!(
        verdict(
            "8 (conformality trend)",
            pass,
            &format!(
                "residuals depth 10 {:?} -> depth 12 {:?}, scale-invariance exact: {scale_exact}",
                residuals[0], residuals[1]
            ),
        ),
        "conformality residual did not improve with depth"
    );
}

// ---------------------------------------------------------------------------
// 9. Determinism across worker counts
// ---------------------------------------------------------------------------

#[test]
fn criterion_9_worker_determinism() {
    let gens = fixtures::product_schottky_fixture();
    let rankone = fixtures::sl2_schottky_fixture();
    let mut artifacts: Vec<Vec<String>> = Vec::new();
    for threads in [1usize, 2, 8] {
        let mut batch = Vec::new();
        // Plain count + fit (criteria 4-6 pipeline).
        let ctx = ExperimentContext {
            gens: gens.clone(),
            pair: None,
            opts: RunOptions { depth: Some(9), threads, ..Default::default() },
        };
        let params = serde_json::json!({
            "depth": 9,
            "direction": [0.5, -0.5, 0.5, -0.5],
            "aperture": 0.1,
        });
        let (_, count_report) = run_count(&ctx, &params).unwrap();
        batch.push(results_csv(&count_report.record));
        batch.push(fit_json(&count_report.fit));

        // Bisector pipeline (criterion 6).
        let ctx_theta = ExperimentContext {
            gens: gens.clone(),
            pair: Some(
                SymmetricPairDescriptor::new(PairKind::Theta, gens.descriptor.clone())
                    .unwrap(),
            ),
            opts: RunOptions { depth: Some(7), threads, ..Default::default() },
        };
        let v = direction_from_simplex(&gens.descriptor, &[0.5, 0.5]);
        let b_dir = ctx_theta.pair.as_ref().unwrap().project_to_b(&v);
        let (_, bis) = run_bisector(
            &ctx_theta,
            &BisectorParams {
                depth: 7,
                direction: b_dir.coords.clone(),
                aperture: 0.15,
                omega_h: GroupWindow::All,
                omega_k: GroupWindow::All,
                beta_frozen: Some(0.0),
            },
        )
        .unwrap();
        batch.push(results_csv(&bis.record));
        batch.push(fit_json(&bis.fit));

        // Symmetric count pipeline (criterion 7).
        let ctx_swap = ExperimentContext {
            gens: gens.clone(),
            pair: Some(
                SymmetricPairDescriptor::new(
                    PairKind::FactorSwap,
                    gens.descriptor.clone(),
                )
                .unwrap(),
            ),
            opts: RunOptions { depth: Some(7), threads, ..Default::default() },
        };
        let (_, sym) = run_symmetric_count(
            &ctx_swap,
            &SymmetricCountParams {
                depth: 7,
                invariant: CosetInvariant::FactorRatio,
                beta_frozen: Some(-0.5),
            },
        )
        .unwrap();
        batch.push(results_csv(&sym.record));

        // PS measure pipeline (criterion 8).
        let ctx_ps = ExperimentContext {
            gens: rankone.clone(),
            pair: None,
            opts: RunOptions { depth: Some(8), threads, ..Default::default() },
        };
        let ps_params = serde_json::json!({ "depth": 8, "s": 1.05 });
        let (measure, ps_report) = run_ps_measure(&ctx_ps, &ps_params).unwrap();
        batch.push(anosov_core::experiment::atoms_csv(&measure));
        batch.push(anosov_core::experiment::report_json(&ps_report));

        // Growth/limit-cone report (criterion 5 pipeline, small grid).
        let table = enumerate_ball(
            &rankone,
            8,
            &EnumerateOptions { threads, ..Default::default() },
        )
        .unwrap();
        let grid = direction_grid(&rankone.descriptor, 1).unwrap();
        let opts = GrowthOptions::new(min_letter(&rankone));
        let est = estimate_growth_indicator(&table, &grid, &opts).unwrap();
        let (_, delta) = maximal_growth_direction(&table, &est, &opts).unwrap();
        batch.push(format!("{delta}"));

        artifacts.push(batch);
    }
    let identical = artifacts.iter().all(|batch| {
        batch.len() == artifacts[0].len()
            && batch.iter().zip(&artifacts[0]).all(|(a, b)| a == b)
    });
    assert!(
        verdict(
            "9 (worker determinism)",
            identical,
            &format!(
                "{} artifacts byte-identical across 1, 2, and 8 workers",
                artifacts[0].len()
            ),
        ),
        "outputs depend on the worker count"
    );
}

// ---------------------------------------------------------------------------
// Inner-product sanity shared by several criteria
// ---------------------------------------------------------------------------

#[test]
fn directions_are_unit_and_dominant() {
    for desc in [
        fixtures::sl2_descriptor(),
        fixtures::sl3_descriptor(),
        fixtures::product_descriptor(),
    ] {
        let grid = direction_grid(&desc, 7).unwrap();
        for u in grid {
            assert!((u.norm() - 1.0).abs() < 1e-12);
            assert!(u.is_dominant(1e-12));
            assert!(inner(&u, &u) > 0.0);
            let c = CartanVector::zero(&desc);
            assert!(inner(&u, &c).abs() < 1e-15);
        }
    }
}

// ---------------------------------------------------------------------------
// Supporting spec examples at acceptance scale
// ---------------------------------------------------------------------------

#[test]
fn orbit_cache_large_roundtrip_is_bit_exact() {
    let gens = fixtures::product_schottky_fixture();
    let table = product_table_12();
    let dir = std::env::temp_dir().join("anosov-acceptance-cache");
    let path = anosov_core::cache::cache_path(&dir, &gens, 12);
    anosov_core::cache::save_table(table, &path).unwrap();
    let loaded = anosov_core::cache::load_table(&path, &gens).unwrap();
    let _ = std::fs::remove_file(&path);
    assert_eq!(loaded.rows.len(), table.rows.len());
    let exact = table.rows.iter().zip(&loaded.rows).all(|(a, b)| {
        a.word == b.word
            && a.mu.coords.iter().zip(&b.mu.coords).all(|(x, y)| x.to_bits() == y.to_bits())
            && a.lambda
                .coords
                .iter()
                .zip(&b.lambda.coords)
                .all(|(x, y)| x.to_bits() == y.to_bits())
    });
    assert!(exact, "million-row cache round-trip must be bit-exact");
}

#[test]
fn ps_atom_flags_cluster_near_fixed_flags() {
    // Clustering happens along the word length: the worst distance from a
    // shell's flags to the fixed-point flags drops steeply over the first
    // few letters and then saturates at the limit-set ball radius, never
    // growing again.
    use anosov_core::boundary::attracting_flag;
    let gens = fixtures::sl2_schottky_fixture();
    let mut fixed = Vec::new();
    for i in 0..gens.p() {
        fixed.push(attracting_flag(&gens.generators[i]).unwrap());
        fixed.push(attracting_flag(&gens.inverses[i]).unwrap());
    }
    let table = rankone_table_10();
    let worst_by_shell: Vec<f64> = (1..=table.depth as usize)
        .map(|len| {
            table
                .rows
                .iter()
                .filter(|r| r.word.len() == len)
                .map(|r| {
                    let flag = r.flag.as_ref().expect("flags enumerated");
                    fixed
                        .iter()
                        .map(|f| flag.distance(f))
                        .fold(f64::INFINITY, f64::min)
                })
                .fold(0.0, f64::max)
        })
        .collect();
    // Containment: every atom flag sits within a ball tiny against the
    // inter-fixed-point separation (~0.79 for this fixture).
    let radius = worst_by_shell.iter().cloned().fold(0.0, f64::max);
    assert!(radius < 5e-3, "atoms not clustered: worst distance {radius:.3e}");
    // Saturation: the worst distance stops moving once the cylinder depth
    // resolves the limit-set balls (here by length 3).
    for w in worst_by_shell[2..].windows(2) {
        assert!(
            (w[1] - w[0]).abs() <= w[0] * 0.1,
            "shell distances kept drifting: {worst_by_shell:?}"
        );
    }
}

#[test]
fn growth_is_minus_infinity_outside_the_cone() {
    let gens = fixtures::product_schottky_fixture();
    let table = product_table_12();
    let opts = GrowthOptions::new(min_letter(&gens));
    let outside = direction_from_simplex(&gens.descriptor, &[0.95, 0.05]);
    let est = growth_at_direction(table, &outside, &opts).unwrap();
    assert_eq!(est.value, f64::NEG_INFINITY);
    assert!(est.chosen_aperture.is_none());
}

#[test]
fn maximal_growth_direction_is_i_symmetric() {
    // mu(Gamma) is i-symmetric as a set (gamma and gamma^{-1} both occur), so
    // the estimated indicator and its argmax are i-symmetric up to grid
    // resolution. SL_3 makes i nontrivial.
    let gens = fixtures::sl3_schottky_fixture();
    let table = enumerate(&gens, 7, false);
    let opts = GrowthOptions::new(min_letter(&gens));
    let grid = direction_grid(&gens.descriptor, 7).unwrap();
    let est = estimate_growth_indicator(&table, &grid, &opts).unwrap();
    let (umax, delta) = maximal_growth_direction(&table, &est, &opts).unwrap();
    assert!(delta > 0.0);
    let moved = opposition_involution(&umax);
    let grid_cell = 1.0 / 7.0;
    assert!(
        moved.dist(&umax) <= grid_cell,
        "i moves u_max by {:.4}, more than one grid cell",
        moved.dist(&umax)
    );
    // psi_hat o i = psi_hat on mirrored grid directions.
    let n = est.directions.len();
    for (i, d) in est.directions.iter().enumerate() {
        let mirror = &est.directions[n - 1 - i];
        if d.value.is_finite() && mirror.value.is_finite() {
            assert!(
                (d.value - mirror.value).abs() < 1e-9,
                "grid values not i-symmetric: {} vs {}",
                d.value,
                mirror.value
            );
        }
    }
}

#[test]
fn tangent_form_at_max_direction() {
    use anosov_core::cone::{estimate_limit_cone, tangent_form, TangentOptions};
    let gens = fixtures::product_schottky_fixture();
    let table = product_table_12();
    let opts = GrowthOptions::new(min_letter(&gens));
    let grid = direction_grid(&gens.descriptor, 9).unwrap();
    let est = estimate_growth_indicator(table, &grid, &opts).unwrap();
    let cone = estimate_limit_cone(table, 1.0).unwrap();
    let (umax, delta) = maximal_growth_direction(table, &est, &opts).unwrap();
    let tf = tangent_form(
        table,
        &est,
        &cone,
        &umax,
        &TangentOptions { step: 0.02, growth: opts.clone() },
    )
    .unwrap();
    // Invariants: theta(v) = psi_hat(v) by homogeneity, the form dominates
    // the grid up to fit noise, and at the maximum the dual direction aligns
    // with u_max (the tangential part is pure finite-difference noise, so the
    // alignment is loose).
    assert!((tf.theta.eval(&umax) - delta).abs() < 1e-9);
    assert!(tf.domination_slack > -0.05, "slack {}", tf.domination_slack);
    let dual = tf.theta.dual_vector();
    let cos = inner(&dual, &umax) / dual.norm();
    assert!(cos > 0.5, "dual direction barely aligned: cos = {cos:.3}");

    // Tangent form at a non-maximal interior direction still dominates.
    let v = direction_from_simplex(&gens.descriptor, &[0.45, 0.55]);
    let tf2 = tangent_form(
        table,
        &est,
        &cone,
        &v,
        &TangentOptions { step: 0.02, growth: opts },
    )
    .unwrap();
    // Away from the maximum the slack is dominated by finite-difference
    // noise of the ragged estimator (~0.2 * grid spread); it must stay small
    // relative to the growth rate but cannot be pinned near zero.
    assert!(tf2.domination_slack > -0.2, "slack {}", tf2.domination_slack);

    // Wall-adjacent directions are rejected.
    let near_wall = direction_from_simplex(&gens.descriptor, &[0.999, 0.001]);
    assert!(tangent_form(
        table,
        &est,
        &cone,
        &near_wall,
        &TangentOptions { step: 0.02, growth: GrowthOptions::new(min_letter(&gens)) },
    )
    .is_err());
}
