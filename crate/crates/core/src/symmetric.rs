//! Symmetric pairs (G, H): the generalized Cartan decomposition
//! g = h exp(b) k, restricted-root multiplicities and the radial density
//! xi(b), skinning weights, counting regions R_T(w) in adapted coordinates,
//! and the dominated-convergence integral checks.

use crate::boundary::{busemann, flag_pair};
use crate::cone::AdaptedNorm;
use crate::error::{Error, Result};
use crate::group::{inner, CartanVector, GroupDescriptor, GroupElement, LinearForm};
use crate::linalg::{self, Mat};
use serde::{Deserialize, Serialize};

/// Supported involution kinds.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub enum PairKind {
    /// sigma = theta, H = K. The decomposition reduces to KAK and b = mu.
    Theta,
    /// sigma(g1, g2) = (g2, g1) on a two-factor product; H is the diagonal.
    FactorSwap,
    /// sigma(g) = J g^{-T} J with J = diag(I_p, -I_q); H = SO(p, q) identity
    /// component.
    IndefiniteOrthogonal { p: usize, q: usize },
}

/// Restricted root of b with theta-sigma eigenspace multiplicities. The form
/// is stored in coordinates dual to the pair's orthonormal b-basis.
#[derive(Clone, Debug, Serialize)]
pub struct RestrictedRoot {
    pub coeffs: Vec<f64>,
    pub ell_plus: usize,
    pub ell_minus: usize,
}

impl RestrictedRoot {
    pub fn eval(&self, b: &BCartanVector) -> f64 {
        self.coeffs.iter().zip(&b.coords).map(|(a, c)| a * c).sum()
    }
}

/// Point of b in the orthonormal basis, together with its embedded view in
/// the full Cartan subspace.
#[derive(Clone, Debug, Serialize)]
pub struct BCartanVector {
    pub coords: Vec<f64>,
    pub embedded: CartanVector,
}

impl BCartanVector {
    pub fn norm(&self) -> f64 {
        self.coords.iter().map(|c| c * c).sum::<f64>().sqrt()
    }

    /// Dominance for the pair's positive restricted roots.
    pub fn is_dominant(&self, pair: &SymmetricPairDescriptor, tol: f64) -> bool {
        pair.roots.iter().all(|root| root.eval(self) >= -tol)
    }
}

#[derive(Clone, Debug)]
pub struct SymmetricPairDescriptor {
    pub kind: PairKind,
    pub group: GroupDescriptor,
    /// Orthonormal (trace form) basis of b = a cap q.
    pub b_basis: Vec<CartanVector>,
    /// Positive restricted roots with multiplicities.
    pub roots: Vec<RestrictedRoot>,
}

impl SymmetricPairDescriptor {
    pub fn new(kind: PairKind, group: GroupDescriptor) -> Result<Self> {
        match &kind {
            PairKind::Theta => {}
            PairKind::FactorSwap => {
                if group.num_factors() != 2 || group.factor_dims[0] != group.factor_dims[1] {
                    return Err(Error::Config(
                        "factor-swap pair requires two factors of equal dimension".into(),
                    ));
                }
            }
            PairKind::IndefiniteOrthogonal { p, q } => {
                if *p == 0 || *q == 0 {
                    return Err(Error::Config("indefinite form needs p, q >= 1".into()));
                }
                for &d in &group.factor_dims {
                    if p + q != d {
                        return Err(Error::Config(format!(
                            "signature ({p},{q}) does not match factor dimension {d}"
                        )));
                    }
                }
            }
        }
        let b_basis = build_b_basis(&kind, &group);
        let roots = restricted_roots(&kind, &group, &b_basis);
        let pair = SymmetricPairDescriptor { kind, group, b_basis, roots };
        pair.validate()?;
        Ok(pair)
    }

    pub fn r0(&self) -> usize {
        self.b_basis.len()
    }

    /// sigma as a group automorphism.
    pub fn sigma_group(&self, g: &GroupElement) -> GroupElement {
        match &self.kind {
            PairKind::Theta => g.inverse().transpose(),
            PairKind::FactorSwap => GroupElement {
                descriptor: g.descriptor.clone(),
                factors: vec![g.factors[1].clone(), g.factors[0].clone()],
            },
            PairKind::IndefiniteOrthogonal { p, q } => {
                let factors = g
                    .factors
                    .iter()
                    .map(|m| {
                        let j = j_form(*p, *q);
                        j.mul(&m.inverse().expect("group element invertible").transpose())
                            .mul(&j)
                    })
                    .collect();
                GroupElement { descriptor: g.descriptor.clone(), factors }
            }
        }
    }

    /// sigma as a Lie algebra involution on factor-tuples of matrices.
    pub fn sigma_lie(&self, y: &[Mat]) -> Vec<Mat> {
        match &self.kind {
            PairKind::Theta => y.iter().map(|m| m.transpose().scale(-1.0)).collect(),
            PairKind::FactorSwap => vec![y[1].clone(), y[0].clone()],
            PairKind::IndefiniteOrthogonal { p, q } => y
                .iter()
                .map(|m| {
                    let j = j_form(*p, *q);
                    j.mul(&m.transpose()).mul(&j).scale(-1.0)
                })
                .collect(),
        }
    }

    /// theta on factor-tuples: Y -> -Y^T.
    pub fn theta_lie(&self, y: &[Mat]) -> Vec<Mat> {
        y.iter().map(|m| m.transpose().scale(-1.0)).collect()
    }

    /// Frobenius residual of sigma(h) = h.
    pub fn h_membership_residual(&self, h: &GroupElement) -> f64 {
        let image = self.sigma_group(h);
        image.dist(h) / (1.0 + h.max_abs())
    }

    /// Trace-orthogonal projection onto span(b_basis).
    pub fn project_to_b(&self, v: &CartanVector) -> BCartanVector {
        let coords: Vec<f64> = self.b_basis.iter().map(|b| inner(v, b)).collect();
        self.from_b_coords(&coords)
    }

    pub fn from_b_coords(&self, coords: &[f64]) -> BCartanVector {
        let mut embedded = CartanVector::zero(&self.group);
        for (c, b) in coords.iter().zip(&self.b_basis) {
            embedded = embedded.add(&b.scale(*c));
        }
        BCartanVector { coords: coords.to_vec(), embedded }
    }

    fn validate(&self) -> Result<()> {
        // b-basis lies in q (sigma acts by -1) and is orthonormal.
        for (i, b) in self.b_basis.iter().enumerate() {
            let diag = embed_cartan(&self.group, b);
            let image = self.sigma_lie(&diag);
            for (m, d) in image.iter().zip(&diag) {
                if m.add(d).max_abs() > 1e-10 {
                    return Err(Error::Config(format!(
                        "b-basis vector {i} is not in the (-1)-eigenspace of sigma"
                    )));
                }
            }
            for (j, c) in self.b_basis.iter().enumerate() {
                let target = if i == j { 1.0 } else { 0.0 };
                if (inner(b, c) - target).abs() > 1e-10 {
                    return Err(Error::Config("b-basis is not orthonormal".into()));
                }
            }
        }
        Ok(())
    }
}

fn j_form(p: usize, q: usize) -> Mat {
    let d = p + q;
    let mut j = Mat::zeros(d, d);
    for i in 0..d {
        j[(i, i)] = if i < p { 1.0 } else { -1.0 };
    }
    j
}

/// Embeds a Cartan vector as a tuple of diagonal matrices.
fn embed_cartan(desc: &GroupDescriptor, v: &CartanVector) -> Vec<Mat> {
    let offs = desc.factor_offsets();
    desc.factor_dims
        .iter()
        .enumerate()
        .map(|(f, &d)| {
            let entries: Vec<f64> = (0..d).map(|i| v.coords[offs[f] + i]).collect();
            Mat::diag(&entries)
        })
        .collect()
}

/// Orthonormal basis of a = sum-zero diagonals, per factor.
fn full_cartan_basis(desc: &GroupDescriptor) -> Vec<CartanVector> {
    let offs = desc.factor_offsets();
    let mut basis: Vec<CartanVector> = Vec::new();
    for (f, &d) in desc.factor_dims.iter().enumerate() {
        for i in 0..d - 1 {
            let mut coords = vec![0.0; desc.coord_len()];
            coords[offs[f] + i] = 1.0;
            coords[offs[f] + i + 1] = -1.0;
            let mut w = CartanVector { descriptor: desc.clone(), coords };
            for b in &basis {
                let c = inner(&w, b);
                w = w.sub(&b.scale(c));
            }
            let n = w.norm();
            if n > 1e-12 {
                basis.push(w.scale(1.0 / n));
            }
        }
    }
    basis
}

fn build_b_basis(kind: &PairKind, group: &GroupDescriptor) -> Vec<CartanVector> {
    match kind {
        // b = a for both single-group kinds.
        PairKind::Theta | PairKind::IndefiniteOrthogonal { .. } => full_cartan_basis(group),
        PairKind::FactorSwap => {
            // b = {(X, -X)}: push an orthonormal basis of the first factor's
            // Cartan through the anti-diagonal embedding, renormalized.
            let single = GroupDescriptor::simple(&group.factor_dims[..1]);
            full_cartan_basis(&single)
                .iter()
                .map(|x| {
                    let mut coords = Vec::with_capacity(group.coord_len());
                    coords.extend(x.coords.iter());
                    coords.extend(x.coords.iter().map(|c| -c));
                    CartanVector { descriptor: group.clone(), coords }
                        .scale(1.0 / 2.0f64.sqrt())
                })
                .collect()
        }
    }
}

/// Interior dominant reference point of b+, used to orient the positive
/// restricted-root system.
fn b_reference(kind: &PairKind, group: &GroupDescriptor, basis: &[CartanVector]) -> Vec<f64> {
    let strictly_dominant = |desc: &GroupDescriptor| -> CartanVector {
        let offs = desc.factor_offsets();
        let mut coords = vec![0.0; desc.coord_len()];
        for (f, &d) in desc.factor_dims.iter().enumerate() {
            for i in 0..d {
                coords[offs[f] + i] = (d - 1) as f64 - 2.0 * i as f64;
            }
        }
        CartanVector::from_logs(desc.clone(), coords)
    };
    let embedded = match kind {
        PairKind::Theta | PairKind::IndefiniteOrthogonal { .. } => strictly_dominant(group),
        PairKind::FactorSwap => {
            let single = GroupDescriptor::simple(&group.factor_dims[..1]);
            let x = strictly_dominant(&single);
            let mut coords = Vec::with_capacity(group.coord_len());
            coords.extend(x.coords.iter());
            coords.extend(x.coords.iter().map(|c| -c));
            CartanVector { descriptor: group.clone(), coords }
        }
    };
    basis.iter().map(|b| inner(&embedded, b)).collect()
}

/// Brute-force restricted roots: every elementary root vector E_ij of every
/// factor is graded by its b-weight; vectors sharing a (quantized) nonzero
/// weight span one restricted root space, on which theta-sigma acts as an
/// involution whose trace determines the multiplicities.
fn restricted_roots(
    kind: &PairKind,
    group: &GroupDescriptor,
    basis: &[CartanVector],
) -> Vec<RestrictedRoot> {
    let pair_stub = SymmetricPairDescriptor {
        kind: kind.clone(),
        group: group.clone(),
        b_basis: basis.to_vec(),
        roots: Vec::new(),
    };
    let reference = b_reference(kind, group, basis);

    // All elementary root vectors with their weights on b.
    struct RootVector {
        factor: usize,
        i: usize,
        j: usize,
        weight: Vec<f64>,
    }
    let mut vectors = Vec::new();
    for (f, &d) in group.factor_dims.iter().enumerate() {
        let offs = group.factor_offsets();
        for i in 0..d {
            for j in 0..d {
                if i == j {
                    continue;
                }
                // alpha(b) = b_i - b_j on factor f, expressed in b-coords.
                let weight: Vec<f64> = basis
                    .iter()
                    .map(|b| b.coords[offs[f] + i] - b.coords[offs[f] + j])
                    .collect();
                if weight.iter().all(|w| w.abs() < 1e-12) {
                    continue;
                }
                vectors.push(RootVector { factor: f, i, j, weight });
            }
        }
    }

    // Group by quantized weight, keep the positive ones.
    let mut groups: Vec<(Vec<f64>, Vec<usize>)> = Vec::new();
    for (idx, rv) in vectors.iter().enumerate() {
        let mut found = false;
        for (w, members) in groups.iter_mut() {
            if w.iter().zip(&rv.weight).all(|(a, b)| (a - b).abs() < 1e-9) {
                members.push(idx);
                found = true;
                break;
            }
        }
        if !found {
            groups.push((rv.weight.clone(), vec![idx]));
        }
    }

    let elementary = |f: usize, i: usize, j: usize| -> Vec<Mat> {
        group
            .factor_dims
            .iter()
            .enumerate()
            .map(|(ff, &d)| {
                let mut m = Mat::zeros(d, d);
                if ff == f {
                    m[(i, j)] = 1.0;
                }
                m
            })
            .collect()
    };
    let frob = |a: &[Mat], b: &[Mat]| -> f64 {
        a.iter()
            .zip(b)
            .map(|(x, y)| x.data.iter().zip(&y.data).map(|(u, v)| u * v).sum::<f64>())
            .sum()
    };

    let mut roots = Vec::new();
    for (weight, members) in groups {
        let at_ref: f64 = weight.iter().zip(&reference).map(|(a, b)| a * b).sum();
        if at_ref <= 0.0 {
            continue;
        }
        // theta sigma preserves this root space and squares to the identity;
        // its trace on the space gives the eigenspace dimensions.
        let m = members.len();
        let mut trace = 0.0;
        for &idx in &members {
            let rv = &vectors[idx];
            let e = elementary(rv.factor, rv.i, rv.j);
            let image = pair_stub.theta_lie(&pair_stub.sigma_lie(&e));
            trace += frob(&image, &e);
        }
        let ell_plus = ((m as f64 + trace) / 2.0).round() as usize;
        let ell_minus = m - ell_plus;
        roots.push(RestrictedRoot { coeffs: weight, ell_plus, ell_minus });
    }
    // Deterministic order: by coefficients.
    roots.sort_by(|a, b| {
        a.coeffs
            .iter()
            .zip(&b.coeffs)
            .find_map(|(x, y)| x.partial_cmp(y).filter(|o| o.is_ne()))
            .unwrap_or(std::cmp::Ordering::Equal)
    });
    roots
}

/// Radial density of the generalized Cartan decomposition:
/// product over positive restricted roots of
/// sinh(alpha(b))^{l+} cosh(alpha(b))^{l-}.
pub fn xi_density(b: &BCartanVector, pair: &SymmetricPairDescriptor) -> f64 {
    let mut out = 1.0;
    for root in &pair.roots {
        let a = root.eval(b);
        out *= a.sinh().powi(root.ell_plus as i32) * a.cosh().powi(root.ell_minus as i32);
    }
    out
}

/// Per-factor eigenvalue logs of S = X X^T assembled from both S and its
/// inverse's Gram matrix, so both spectral tails stay accurate under grading.
fn graded_sym_logs(x: &Mat) -> Result<Vec<f64>> {
    let d = x.rows;
    let s = x.mul(&x.transpose());
    let (vals_fwd, _) = linalg::sym_eigen(&s);
    // x is unimodular up to sign, so the adjugate serves as the inverse for
    // Gram purposes.
    let x_inv = x.adjugate();
    let s_inv = x_inv.mul(&x_inv.transpose());
    let (vals_bwd, _) = linalg::sym_eigen(&s_inv);
    let half = d / 2;
    // Only the top halves of the two spectra are consumed; the unused small
    // eigenvalues may round negative at the eps * lambda_top noise floor.
    for i in 0..half.max(1) {
        if vals_fwd[i] <= 0.0 || vals_bwd[i] <= 0.0 {
            return Err(Error::DecompositionFailure(
                "nonpositive eigenvalue in the symmetrized Gram matrix".into(),
            ));
        }
    }
    let mut logs = vec![0.0; d];
    for i in 0..half {
        logs[i] = vals_fwd[i].ln();
        logs[d - 1 - i] = -vals_bwd[i].ln();
    }
    if d % 2 == 1 {
        let partial: f64 = (0..half).map(|i| logs[i] + logs[d - 1 - i]).sum();
        logs[half] = -partial;
    }
    logs.sort_by(|a, b| b.partial_cmp(a).unwrap());
    Ok(logs)
}

/// Projection to b+ of the generalized Cartan decomposition: the unique
/// dominant b with g in H exp(b) K. Computed from X = sigma(g)^{-1} g, whose
/// symmetrized Gram matrix has eigenvalues e^{4 b_i}.
pub fn h_cartan_projection(
    g: &GroupElement,
    pair: &SymmetricPairDescriptor,
) -> Result<BCartanVector> {
    let x = pair.sigma_group(g).inverse().mul(g);
    let embedded = match pair.kind {
        PairKind::Theta | PairKind::IndefiniteOrthogonal { .. } => {
            // b = a: descending logs per factor are the dominant representative.
            let mut coords = Vec::with_capacity(pair.group.coord_len());
            for m in &x.factors {
                coords.extend(graded_sym_logs(m)?);
            }
            CartanVector::from_logs(pair.group.clone(), coords).scale(0.25)
        }
        PairKind::FactorSwap => {
            // b = (x, -x): the first factor's descending logs give 4x; the
            // second factor's spectrum is its mirror and serves as a cross
            // check only.
            let logs1 = graded_sym_logs(&x.factors[0])?;
            let logs2 = graded_sym_logs(&x.factors[1])?;
            let d = logs1.len();
            for i in 0..d {
                let expect = -logs1[d - 1 - i];
                if (logs2[i] - expect).abs() > 1e-6 * (1.0 + expect.abs()) {
                    return Err(Error::DecompositionFailure(
                        "factor spectra of the swap pair are not mirrored".into(),
                    ));
                }
            }
            let mut coords = Vec::with_capacity(2 * d);
            coords.extend(logs1.iter());
            coords.extend(logs1.iter().map(|c| -c));
            CartanVector::from_logs(pair.group.clone(), coords).scale(0.25)
        }
    };
    let b = pair.project_to_b(&embedded);
    if b.embedded.dist(&embedded) > 1e-8 * (1.0 + embedded.norm()) {
        return Err(Error::DecompositionFailure(
            "projection left the span of b; spectra are inconsistent".into(),
        ));
    }
    debug_assert!(b.is_dominant(pair, 1e-8));
    Ok(b)
}

/// Full generalized Cartan decomposition g = h exp(b) k with h in H and k in
/// K, recovered from the eigenframe of the symmetrized Gram matrix.
#[derive(Clone, Debug)]
pub struct GCartanDecomposition {
    pub h: GroupElement,
    pub b: BCartanVector,
    pub k: GroupElement,
    /// Frobenius residual of sigma(h) = h.
    pub h_residual: f64,
    /// Frobenius recomposition residual, relative.
    pub residual: f64,
}

pub fn gcartan_decompose(
    g: &GroupElement,
    pair: &SymmetricPairDescriptor,
) -> Result<GCartanDecomposition> {
    gcartan_decompose_with_tolerance(g, pair, 1e-7)
}

/// As `gcartan_decompose` with an explicit bound on the sigma(h) = h
/// residual. Deep rows lose membership precision like eps times the squared
/// entry scale, so batch consumers that only need the windows and |b| pass a
/// looser bound.
pub fn gcartan_decompose_with_tolerance(
    g: &GroupElement,
    pair: &SymmetricPairDescriptor,
    h_residual_tol: f64,
) -> Result<GCartanDecomposition> {
    let b = h_cartan_projection(g, pair)?;
    let offs = pair.group.factor_offsets();

    // Regularity: the frame recovery needs distinct exponentials per factor.
    for (f, &d) in pair.group.factor_dims.iter().enumerate() {
        let mut vals: Vec<f64> = (0..d).map(|i| b.embedded.coords[offs[f] + i]).collect();
        vals.sort_by(|a, c| c.partial_cmp(a).unwrap());
        for w in vals.windows(2) {
            if (w[0] - w[1]).abs() < 1e-7 {
                return Err(Error::Ambiguous(
                    "b lies on a restricted-root wall; frame recovery is not unique".into(),
                ));
            }
        }
    }

    if pair.kind == PairKind::Theta {
        return gcartan_theta(g, pair, b);
    }

    // X = sigma(g)^{-1} g = sigma(k)^{-1} exp(2b) k. Its SVD recovers k as
    // D V^T with a per-column sign ambiguity D resolved by the sigma(h) = h
    // residual of the reassembled h.
    let x = pair.sigma_group(g).inverse().mul(g);
    let mut v_factors = Vec::new();
    for (f, m) in x.factors.iter().enumerate() {
        let d = m.rows;
        let (_, sv, v) = linalg::svd(m);
        // Column `rank` of v belongs in the coordinate slot whose target log
        // is the rank-th largest.
        let targets: Vec<f64> = (0..d).map(|i| 2.0 * b.embedded.coords[offs[f] + i]).collect();
        let mut slot_order: Vec<usize> = (0..d).collect();
        slot_order.sort_by(|&a, &c| targets[c].partial_cmp(&targets[a]).unwrap());
        let top = targets[slot_order[0]];
        let mut vv = Mat::zeros(d, d);
        for (rank, &slot) in slot_order.iter().enumerate() {
            let expect = targets[slot];
            // Singular values of the graded X sit on a noise floor of
            // eps * sigma_top; below it only the ordering is meaningful.
            if expect > top - 30.0 {
                let got = if sv[rank] > 0.0 { sv[rank].ln() } else { f64::NEG_INFINITY };
                let spread = (top - expect).clamp(0.0, 34.0);
                let allowed =
                    1e-6 * (1.0 + expect.abs()) + 8.0 * f64::EPSILON * spread.exp();
                if (got - expect).abs() > allowed {
                    return Err(Error::DecompositionFailure(format!(
                        "singular value log {got:.6} does not match target {expect:.6}"
                    )));
                }
            }
            for r in 0..d {
                vv[(r, slot)] = v[(r, rank)];
            }
        }
        v_factors.push(vv);
    }

    // Resolve the per-column sign ambiguity by minimizing the H-membership
    // residual of the recovered h.
    let exp_b_inv = GroupElement::exp_cartan(&b.embedded.scale(-1.0));
    let n_factors = v_factors.len();
    let dims: Vec<usize> = pair.group.factor_dims.clone();
    let mut best: Option<GCartanDecomposition> = None;
    let mut sign_state: Vec<Vec<f64>> = dims.iter().map(|&d| vec![1.0; d]).collect();
    let total_patterns: usize = dims.iter().map(|&d| 1usize << d).product();
    for pattern in 0..total_patterns {
        let mut rem = pattern;
        for f in 0..n_factors {
            let d = dims[f];
            for i in 0..d {
                sign_state[f][i] = if rem & 1 == 1 { -1.0 } else { 1.0 };
                rem >>= 1;
            }
        }
        // k = D V^T must be special orthogonal per factor.
        let mut k_factors = Vec::with_capacity(n_factors);
        let mut det_ok = true;
        for f in 0..n_factors {
            let v = &v_factors[f];
            let d = dims[f];
            let mut k = Mat::zeros(d, d);
            for r in 0..d {
                for c in 0..d {
                    k[(r, c)] = sign_state[f][r] * v[(c, r)];
                }
            }
            if k.det() < 0.0 {
                det_ok = false;
                break;
            }
            k_factors.push(k);
        }
        if !det_ok {
            continue;
        }
        let k = GroupElement { descriptor: pair.group.clone(), factors: k_factors };
        let h = g.mul(&k.inverse()).mul(&exp_b_inv);
        let h_res = pair.h_membership_residual(&h);
        let take = match &best {
            None => true,
            Some(prev) => h_res < prev.h_residual,
        };
        if take {
            let recomposed = h.mul(&GroupElement::exp_cartan(&b.embedded)).mul(&k);
            let residual = recomposed.dist(g) / (1.0 + g.max_abs());
            best = Some(GCartanDecomposition {
                h,
                b: pair.from_b_coords(&b.coords),
                k,
                h_residual: h_res,
                residual,
            });
        }
    }
    let best = best.ok_or_else(|| {
        Error::DecompositionFailure("no special-orthogonal sign pattern".into())
    })?;
    if best.h_residual > h_residual_tol {
        return Err(Error::DecompositionFailure(format!(
            "H-membership residual {:.3e} exceeds {h_residual_tol:e}",
            best.h_residual
        )));
    }
    Ok(best)
}

/// Theta-pair specialization: the decomposition is the per-factor SVD of g
/// itself, so h = U is orthogonal to machine precision at any depth.
fn gcartan_theta(
    g: &GroupElement,
    pair: &SymmetricPairDescriptor,
    b: BCartanVector,
) -> Result<GCartanDecomposition> {
    let offs = pair.group.factor_offsets();
    let mut h_factors = Vec::new();
    let mut k_factors = Vec::new();
    for (f, m) in g.factors.iter().enumerate() {
        let d = m.rows;
        let (u, sv, v) = linalg::svd(m);
        let targets: Vec<f64> = (0..d).map(|i| b.embedded.coords[offs[f] + i]).collect();
        let mut slot_order: Vec<usize> = (0..d).collect();
        slot_order.sort_by(|&a, &c| targets[c].partial_cmp(&targets[a]).unwrap());
        let top = targets[slot_order[0]];
        let mut uu = Mat::zeros(d, d);
        let mut vv = Mat::zeros(d, d);
        for (rank, &slot) in slot_order.iter().enumerate() {
            let expect = targets[slot];
            if expect > top - 30.0 {
                let got = if sv[rank] > 0.0 { sv[rank].ln() } else { f64::NEG_INFINITY };
                let spread = (top - expect).clamp(0.0, 34.0);
                let allowed =
                    1e-6 * (1.0 + expect.abs()) + 8.0 * f64::EPSILON * spread.exp();
                if (got - expect).abs() > allowed {
                    return Err(Error::DecompositionFailure(format!(
                        "singular value log {got:.6} does not match target {expect:.6}"
                    )));
                }
            }
            for r in 0..d {
                uu[(r, slot)] = u[(r, rank)];
                vv[(r, slot)] = v[(r, rank)];
            }
        }
        // Canonical signs: make the largest entry of each k-row positive,
        // flipping matched U columns; then fix both determinants together.
        for i in 0..d {
            let mut lead = 0;
            for c in 1..d {
                if vv[(c, i)].abs() > vv[(lead, i)].abs() {
                    lead = c;
                }
            }
            if vv[(lead, i)] < 0.0 {
                for r in 0..d {
                    vv[(r, i)] = -vv[(r, i)];
                    uu[(r, i)] = -uu[(r, i)];
                }
            }
        }
        if uu.det() < 0.0 {
            for r in 0..d {
                uu[(r, d - 1)] = -uu[(r, d - 1)];
                vv[(r, d - 1)] = -vv[(r, d - 1)];
            }
        }
        h_factors.push(uu);
        k_factors.push(vv.transpose());
    }
    let h = GroupElement { descriptor: pair.group.clone(), factors: h_factors };
    let k = GroupElement { descriptor: pair.group.clone(), factors: k_factors };
    let h_res = pair.h_membership_residual(&h);
    let recomposed = h.mul(&GroupElement::exp_cartan(&b.embedded)).mul(&k);
    let residual = recomposed.dist(g) / (1.0 + g.max_abs());
    Ok(GCartanDecomposition {
        h,
        b: pair.from_b_coords(&b.coords),
        k,
        h_residual: h_res,
        residual,
    })
}

/// Skinning density exp(Theta(beta_{h0+}(e, h0 p))) for p in the subgroup
/// H cap P = (H cap M)(H cap A); p must be diagonal and sigma-fixed.
pub fn skinning_weight(
    h0: &GroupElement,
    p: &GroupElement,
    theta: &LinearForm,
    pair: &SymmetricPairDescriptor,
) -> Result<f64> {
    // Membership check, per the H cap P structure: diagonal (m a) and fixed
    // by sigma.
    for m in &p.factors {
        let d = m.rows;
        let scale = m.max_abs().max(1e-12);
        for i in 0..d {
            for j in 0..d {
                if i != j && m[(i, j)].abs() > 1e-7 * scale {
                    return Err(Error::Precondition(
                        "p is not in H\u{2229}P: off-diagonal entries present".into(),
                    ));
                }
            }
        }
    }
    if pair.h_membership_residual(p) > 1e-7 {
        return Err(Error::Precondition("p is not fixed by sigma".into()));
    }
    let e = GroupElement::identity(&pair.group);
    let (h0_plus, _) = flag_pair(h0)?;
    let beta = busemann(&h0_plus, &e, &h0.mul(p))?;
    Ok(theta.eval(&beta).exp())
}

/// Counting region: a convex cone in b+ cut out by linear inequalities on the
/// b-coordinates, measured in an adapted norm centered at `v`.
#[derive(Clone, Debug)]
pub struct RegionSpec {
    /// Inequalities coeffs . b >= 0 in b-coordinates.
    pub inequalities: Vec<Vec<f64>>,
    pub v: BCartanVector,
    pub norm: AdaptedNorm,
}

impl RegionSpec {
    /// Validates that `v` is interior and that the closed cone meets
    /// ker(theta) only at the origin (sampled over a deterministic direction
    /// grid on the unit sphere of b).
    pub fn new(
        pair: &SymmetricPairDescriptor,
        inequalities: Vec<Vec<f64>>,
        v: BCartanVector,
        norm: AdaptedNorm,
        theta: &LinearForm,
    ) -> Result<Self> {
        let spec = RegionSpec { inequalities, v, norm };
        for (i, ineq) in spec.inequalities.iter().enumerate() {
            let val: f64 = ineq.iter().zip(&spec.v.coords).map(|(a, b)| a * b).sum();
            if val <= 0.0 {
                return Err(Error::Config(format!(
                    "base direction is not interior: inequality {i} gives {val:.3e}"
                )));
            }
        }
        let dim = spec.v.coords.len();
        let mut dirs: Vec<Vec<f64>> = Vec::new();
        match dim {
            1 => dirs.extend([vec![1.0], vec![-1.0]]),
            2 => {
                for s in 0..720 {
                    let a = s as f64 / 720.0 * std::f64::consts::TAU;
                    dirs.push(vec![a.cos(), a.sin()]);
                }
            }
            _ => {
                // Coarse deterministic sphere grid for higher rank.
                let mut state = 0x9e3779b97f4a7c15u64;
                for _ in 0..4096 {
                    let mut d = vec![0.0; dim];
                    for x in d.iter_mut() {
                        state = state.wrapping_mul(6364136223846793005).wrapping_add(1);
                        *x = ((state >> 11) as f64 / (1u64 << 53) as f64) * 2.0 - 1.0;
                    }
                    let n: f64 = d.iter().map(|x| x * x).sum::<f64>().sqrt();
                    if n > 1e-3 {
                        for x in d.iter_mut() {
                            *x /= n;
                        }
                        dirs.push(d);
                    }
                }
            }
        }
        for dir in dirs {
            let inside = spec
                .inequalities
                .iter()
                .all(|ineq| ineq.iter().zip(&dir).map(|(a, b)| a * b).sum::<f64>() >= 0.0);
            if !inside {
                continue;
            }
            let embedded = pair.from_b_coords(&dir).embedded;
            if theta.eval(&embedded) <= 0.0 {
                return Err(Error::Config(
                    "cone closure meets ker Theta; region is not admissible".into(),
                ));
            }
        }
        Ok(spec)
    }

    pub fn contains(&self, coords: &[f64], tol: f64) -> bool {
        self.inequalities
            .iter()
            .all(|ineq| ineq.iter().zip(coords).map(|(a, b)| a * b).sum::<f64>() >= -tol)
    }
}

/// Angular cone of half-aperture `aperture` around `v` in b-coordinates,
/// approximated by supporting hyperplanes in the coordinate planes.
pub fn region_from_pair(
    pair: &SymmetricPairDescriptor,
    v: &BCartanVector,
    theta: &LinearForm,
    norm: AdaptedNorm,
    aperture: f64,
) -> Result<RegionSpec> {
    let dim = v.coords.len();
    let vn: Vec<f64> = {
        let n = v.norm();
        v.coords.iter().map(|c| c / n).collect()
    };
    let mut inequalities = Vec::new();
    if dim == 1 {
        inequalities.push(vec![vn[0]]);
    } else {
        let cos_ap = aperture.cos();
        let sin_ap = aperture.sin();
        for axis in 0..dim {
            let mut t = vec![0.0; dim];
            t[axis] = 1.0;
            let dot: f64 = t.iter().zip(&vn).map(|(a, b)| a * b).sum();
            for (ti, vi) in t.iter_mut().zip(&vn) {
                *ti -= dot * vi;
            }
            let tn: f64 = t.iter().map(|x| x * x).sum::<f64>().sqrt();
            if tn < 1e-12 {
                continue;
            }
            for sign in [1.0, -1.0] {
                let ineq: Vec<f64> = vn
                    .iter()
                    .zip(&t)
                    .map(|(vi, ti)| sin_ap * vi - sign * cos_ap * ti / tn)
                    .collect();
                inequalities.push(ineq);
            }
        }
    }
    RegionSpec::new(pair, inequalities, v.clone(), norm, theta)
}

/// The interval R_T(w) = {t : t v + sqrt(t) w in C, |t v + sqrt(t) w| < T},
/// with the upper endpoint in closed form and the entry time by bisection.
pub fn region_interval(
    w: &BCartanVector,
    t_cap: f64,
    region: &RegionSpec,
) -> Result<Option<(f64, f64)>> {
    if t_cap <= 0.0 {
        return Err(Error::Precondition("T must be positive".into()));
    }
    let v = &region.v;
    // w must be orthogonal to v in the adapted norm.
    let ip = region.norm.inner(&w.embedded, &v.embedded);
    let wn = region.norm.norm(&w.embedded);
    if ip.abs() > 1e-8 * (1.0 + wn) {
        return Err(Error::Precondition(
            "w is not orthogonal to the base direction in the adapted norm".into(),
        ));
    }
    let upper = 0.5 * (-wn * wn + (wn.powi(4) + 4.0 * t_cap * t_cap).sqrt());
    if wn == 0.0 {
        return Ok(Some((0.0, upper)));
    }
    // Entry time in the parameter s = sqrt(t): the curve t v + sqrt(t) w lies
    // in the cone iff v + w/s does, and membership is monotone in s by
    // convexity (the point slides along a segment towards the interior
    // direction v).
    let in_cone = |s: f64| -> bool {
        let point: Vec<f64> = v
            .coords
            .iter()
            .zip(&w.coords)
            .map(|(a, b)| a + b / s)
            .collect();
        region.contains(&point, 0.0)
    };
    let mut lo = 1e-9;
    if in_cone(lo) {
        return Ok(Some((0.0, upper)));
    }
    let mut hi = upper.sqrt().max(1.0);
    if !in_cone(hi) {
        let mut entered = false;
        for _ in 0..80 {
            hi *= 2.0;
            if in_cone(hi) {
                entered = true;
                break;
            }
        }
        if !entered {
            return Ok(None);
        }
    }
    while hi * hi - lo * lo > 1e-10 {
        let mid = 0.5 * (lo + hi);
        if in_cone(mid) {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    let t_w = hi * hi;
    if t_w >= upper {
        Ok(None)
    } else {
        Ok(Some((t_w, upper)))
    }
}

/// Adaptive Simpson quadrature with relative tolerance.
fn adaptive_simpson(
    f: &dyn Fn(f64) -> f64,
    a: f64,
    b: f64,
    tol: f64,
    depth: usize,
    whole: f64,
    fa: f64,
    fm: f64,
    fb: f64,
) -> Result<f64> {
    let m = 0.5 * (a + b);
    let lm = 0.5 * (a + m);
    let rm = 0.5 * (m + b);
    let flm = f(lm);
    let frm = f(rm);
    let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
    let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
    let delta = left + right - whole;
    if depth == 0 {
        return Err(Error::Numerical("quadrature failed to converge".into()));
    }
    if delta.abs() <= 15.0 * tol {
        return Ok(left + right + delta / 15.0);
    }
    let lhs = adaptive_simpson(f, a, m, tol / 2.0, depth - 1, left, fa, flm, fm)?;
    let rhs = adaptive_simpson(f, m, b, tol / 2.0, depth - 1, right, fm, frm, fb)?;
    Ok(lhs + rhs)
}

fn integrate(f: impl Fn(f64) -> f64, a: f64, b: f64, rel_tol: f64) -> Result<f64> {
    if b <= a {
        return Ok(0.0);
    }
    let m = 0.5 * (a + b);
    let (fa, fm, fb) = (f(a), f(m), f(b));
    let whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    let scale = whole.abs().max(1e-12);
    adaptive_simpson(&f, a, b, rel_tol * scale, 48, whole, fa, fm, fb)
}

#[derive(Clone, Debug, Serialize)]
pub struct DomIntegralCheck {
    /// e^{-dT} T^{(r-r0)/2} int_{R_T(w)} t^{(r0-r)/2} e^{dt} dt, by adaptive
    /// quadrature in the shifted variable u = t - T.
    pub numeric: f64,
    /// The T -> infinity limit d^{-1} e^{-d |w|^2 / 2}.
    pub limit: f64,
    /// The uniform bound d^{-1} e^{-c d |w|^2} with c from the cone aperture.
    pub bound: f64,
    pub c: f64,
}

/// The aperture constant c = (1 - (1 + 4(cot^2 + cot^4))^{-1/2}) / 2.
pub fn aperture_constant(theta0: f64) -> f64 {
    let cot2 = 1.0 / theta0.tan().powi(2);
    0.5 * (1.0 - (1.0 + 4.0 * (cot2 + cot2 * cot2)).powf(-0.5))
}

/// Dominated-convergence check for the model interval
/// R_T(w) = [|w|^2 cot^2(theta0), (-|w|^2 + sqrt(|w|^4 + 4T^2)) / 2].
pub fn dom_integral_check(
    delta: f64,
    r: usize,
    r0: usize,
    w_norm: f64,
    t_cap: f64,
    theta0: f64,
) -> Result<DomIntegralCheck> {
    if delta <= 0.0 {
        return Err(Error::Precondition("delta must be positive".into()));
    }
    if r < r0 || r0 < 1 {
        return Err(Error::Precondition("need r >= r0 >= 1".into()));
    }
    let t_w = if w_norm == 0.0 { 0.0 } else { w_norm * w_norm / theta0.tan().powi(2) };
    let upper = 0.5 * (-w_norm * w_norm + (w_norm.powi(4) + 4.0 * t_cap * t_cap).sqrt());
    if upper <= t_w {
        return Err(Error::Precondition("interval is empty; increase T".into()));
    }
    let beta = (r0 as f64 - r as f64) / 2.0;
    // Shift u = t - T: integrand (1 + u/T)^beta e^{delta u} stays O(1).
    let lo = (t_w - t_cap).max(upper - t_cap - 60.0 / delta - 60.0);
    let hi = upper - t_cap;
    let f = |u: f64| (1.0 + u / t_cap).max(0.0).powf(beta) * (delta * u).exp();
    let numeric = integrate(f, lo, hi, 1e-10)?;
    let limit = (-delta * w_norm * w_norm / 2.0).exp() / delta;
    let c = aperture_constant(theta0);
    let bound = (-c * delta * w_norm * w_norm).exp() / delta;
    Ok(DomIntegralCheck { numeric, limit, bound, c })
}
