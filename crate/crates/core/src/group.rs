//! Group elements of products of SL_d(R) and their Lie-theoretic projections:
//! Cartan and Jordan projections, the opposition involution, Iwasawa (QR) and
//! KAK decompositions, and the trace-form inner product on the Cartan subspace.
//!
//! Conventions: the positive chamber consists of non-increasing diagonals, the
//! horospherical subgroup `N` is upper unipotent, and singular/eigenvalue
//! spectra are reported as descending logarithms.

use crate::error::{Error, Result};
use crate::linalg::{self, Mat};
use serde::{Deserialize, Serialize};

/// Determinant normalization tolerance for valid group elements.
pub const DET_TOL: f64 = 1e-9;

/// Shape of the ambient group: one SL_{d_i}(R) factor per entry.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct GroupDescriptor {
    pub factor_dims: Vec<usize>,
    pub projective_flags: Vec<bool>,
}

impl GroupDescriptor {
    pub fn new(factor_dims: Vec<usize>, projective_flags: Vec<bool>) -> Result<Self> {
        if factor_dims.is_empty() {
            return Err(Error::InvalidInput("at least one factor required".into()));
        }
        if factor_dims.iter().any(|&d| d < 2) {
            return Err(Error::InvalidInput("factor dimensions must be >= 2".into()));
        }
        if projective_flags.len() != factor_dims.len() {
            return Err(Error::InvalidInput("one projective flag per factor".into()));
        }
        Ok(GroupDescriptor { factor_dims, projective_flags })
    }

    pub fn simple(dims: &[usize]) -> Self {
        GroupDescriptor { factor_dims: dims.to_vec(), projective_flags: vec![false; dims.len()] }
    }

    /// Real rank: sum of (d_i - 1).
    pub fn rank(&self) -> usize {
        self.factor_dims.iter().map(|d| d - 1).sum()
    }

    /// Total coordinate count of a Cartan vector: sum of d_i.
    pub fn coord_len(&self) -> usize {
        self.factor_dims.iter().sum()
    }

    pub fn num_factors(&self) -> usize {
        self.factor_dims.len()
    }

    /// Byte offsets of each factor's coordinate block.
    pub fn factor_offsets(&self) -> Vec<usize> {
        let mut offs = Vec::with_capacity(self.factor_dims.len());
        let mut acc = 0;
        for &d in &self.factor_dims {
            offs.push(acc);
            acc += d;
        }
        offs
    }

    /// The sum-of-positive-roots form 2*rho, with per-factor coefficients
    /// (d-1, d-3, ..., -(d-1)).
    pub fn two_rho(&self) -> LinearForm {
        let mut coeffs = Vec::with_capacity(self.coord_len());
        for &d in &self.factor_dims {
            for i in 0..d {
                coeffs.push((d - 1) as f64 - 2.0 * i as f64);
            }
        }
        LinearForm::new(self.clone(), coeffs)
    }

    /// Extreme rays of the positive chamber, one per simple root wall complement:
    /// the fundamental coweight directions of each factor, trace-normalized.
    pub fn chamber_rays(&self) -> Vec<CartanVector> {
        let mut rays = Vec::new();
        for (f, &d) in self.factor_dims.iter().enumerate() {
            for k in 1..d {
                // omega_k ~ (1,...,1,0,...,0) - k/d * ones, with k leading ones.
                let mut coords = vec![0.0; self.coord_len()];
                let off = self.factor_offsets()[f];
                for i in 0..d {
                    let base = if i < k { 1.0 } else { 0.0 };
                    coords[off + i] = base - k as f64 / d as f64;
                }
                let mut v = CartanVector::new(self.clone(), coords).expect("ray is sum-zero");
                let n = v.norm();
                for c in v.coords.iter_mut() {
                    *c /= n;
                }
                rays.push(v);
            }
        }
        rays
    }

    /// Values of the simple roots at `v`, concatenated over factors. These are
    /// the barycentric coordinates used for simplex slices of the chamber.
    pub fn simple_root_values(&self, v: &CartanVector) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.rank());
        let offs = self.factor_offsets();
        for (f, &d) in self.factor_dims.iter().enumerate() {
            for i in 0..d - 1 {
                out.push(v.coords[offs[f] + i] - v.coords[offs[f] + i + 1]);
            }
        }
        out
    }
}

/// Element of the product group, one unimodular matrix per factor.
#[derive(Clone, Debug, PartialEq)]
pub struct GroupElement {
    pub descriptor: GroupDescriptor,
    pub factors: Vec<Mat>,
}

impl GroupElement {
    /// Validates and canonicalizes: scales each factor to |det| = 1, fixes the
    /// determinant sign (negating odd-dimensional factors as needed), and for
    /// projective factors flips the global sign so the entry of largest
    /// absolute value is positive.
    pub fn new(descriptor: GroupDescriptor, factors: Vec<Mat>) -> Result<Self> {
        if factors.len() != descriptor.num_factors() {
            return Err(Error::InvalidInput(format!(
                "expected {} factors, got {}",
                descriptor.num_factors(),
                factors.len()
            )));
        }
        let mut canon = Vec::with_capacity(factors.len());
        for (f, m) in factors.into_iter().enumerate() {
            let d = descriptor.factor_dims[f];
            if m.rows != d || m.cols != d {
                return Err(Error::InvalidInput(format!(
                    "factor {f} must be {d}x{d}, got {}x{}",
                    m.rows, m.cols
                )));
            }
            if !m.is_finite() {
                return Err(Error::InvalidInput(format!("factor {f} has non-finite entries")));
            }
            let det = m.det();
            if det == 0.0 || !det.is_finite() {
                return Err(Error::InvalidInput(format!("factor {f} is singular")));
            }
            let scale = det.abs().powf(-1.0 / d as f64);
            let mut m = m.scale(scale);
            let new_det = m.det();
            if new_det < 0.0 {
                if d % 2 == 1 {
                    m = m.scale(-1.0);
                } else {
                    return Err(Error::InvalidInput(format!(
                        "factor {f} has determinant -1; not in SL_{d}"
                    )));
                }
            }
            if (m.det().abs() - 1.0).abs() > DET_TOL {
                return Err(Error::InvalidInput(format!(
                    "factor {f} determinant off by more than {DET_TOL:e} after renormalization"
                )));
            }
            if descriptor.projective_flags[f] && d % 2 == 0 {
                canon.push(projective_canonicalize(m));
            } else {
                canon.push(m);
            }
        }
        Ok(GroupElement { descriptor, factors: canon })
    }

    pub fn identity(descriptor: &GroupDescriptor) -> Self {
        let factors = descriptor.factor_dims.iter().map(|&d| Mat::identity(d)).collect();
        GroupElement { descriptor: descriptor.clone(), factors }
    }

    /// Factorwise product. Products of valid elements stay unimodular, so no
    /// renormalization happens here; re-deriving the determinant from large
    /// entries would only inject noise.
    pub fn mul(&self, other: &GroupElement) -> GroupElement {
        assert_eq!(self.descriptor, other.descriptor, "descriptor mismatch");
        let factors = self
            .factors
            .iter()
            .zip(&other.factors)
            .map(|(a, b)| a.mul(b))
            .collect();
        GroupElement { descriptor: self.descriptor.clone(), factors }
    }

    /// Inverse via the adjugate: the determinant is +1 by construction, so
    /// adj(m) = m^{-1} exactly, and the dominant entries stay accurate for
    /// long word products where elimination would cancel catastrophically.
    pub fn inverse(&self) -> GroupElement {
        let factors: Vec<Mat> = self.factors.iter().map(|m| m.adjugate()).collect();
        GroupElement { descriptor: self.descriptor.clone(), factors }
    }

    pub fn transpose(&self) -> GroupElement {
        GroupElement {
            descriptor: self.descriptor.clone(),
            factors: self.factors.iter().map(|m| m.transpose()).collect(),
        }
    }

    pub fn max_abs(&self) -> f64 {
        self.factors.iter().fold(0.0, |m, f| m.max(f.max_abs()))
    }

    pub fn dist(&self, other: &GroupElement) -> f64 {
        self.factors
            .iter()
            .zip(&other.factors)
            .map(|(a, b)| a.dist(b))
            .fold(0.0, f64::max)
    }

    /// exp of a Cartan vector: diagonal positive element per factor.
    pub fn exp_cartan(v: &CartanVector) -> GroupElement {
        let offs = v.descriptor.factor_offsets();
        let factors = v
            .descriptor
            .factor_dims
            .iter()
            .enumerate()
            .map(|(f, &d)| {
                let entries: Vec<f64> =
                    (0..d).map(|i| v.coords[offs[f] + i].exp()).collect();
                Mat::diag(&entries)
            })
            .collect();
        GroupElement { descriptor: v.descriptor.clone(), factors }
    }

    /// A fixed representative of the longest Weyl element: the reversal
    /// permutation per factor, sign-adjusted to determinant +1.
    pub fn w0(descriptor: &GroupDescriptor) -> GroupElement {
        let factors = descriptor
            .factor_dims
            .iter()
            .map(|&d| {
                let mut m = Mat::zeros(d, d);
                for i in 0..d {
                    m[(i, d - 1 - i)] = 1.0;
                }
                if m.det() < 0.0 {
                    for i in 0..d {
                        m[(i, 0)] = -m[(i, 0)];
                    }
                }
                m
            })
            .collect();
        GroupElement { descriptor: descriptor.clone(), factors }
    }
}

pub(crate) fn projective_canonicalize(m: Mat) -> Mat {
    let mut best = 0usize;
    for (i, x) in m.data.iter().enumerate() {
        if x.abs() > m.data[best].abs() {
            best = i;
        }
    }
    if m.data[best] < 0.0 {
        m.scale(-1.0)
    } else {
        m
    }
}

/// Point of the Cartan subspace: per-factor trace-zero diagonal coordinates,
/// in logarithmic units.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CartanVector {
    pub descriptor: GroupDescriptor,
    pub coords: Vec<f64>,
}

impl CartanVector {
    pub fn new(descriptor: GroupDescriptor, coords: Vec<f64>) -> Result<Self> {
        if coords.len() != descriptor.coord_len() {
            return Err(Error::DimensionMismatch(format!(
                "expected {} coordinates, got {}",
                descriptor.coord_len(),
                coords.len()
            )));
        }
        if !coords.iter().all(|c| c.is_finite()) {
            return Err(Error::InvalidInput("non-finite coordinate".into()));
        }
        let v = CartanVector { descriptor, coords };
        for (f, sum) in v.factor_sums().into_iter().enumerate() {
            if sum.abs() > 1e-9 * (1.0 + v.norm()) {
                return Err(Error::InvalidInput(format!(
                    "factor {f} coordinates sum to {sum:e}, not zero"
                )));
            }
        }
        Ok(v)
    }

    /// Builds from raw per-factor logs, subtracting each factor's mean so the
    /// sums are exactly zero.
    pub fn from_logs(descriptor: GroupDescriptor, mut coords: Vec<f64>) -> Self {
        let offs = descriptor.factor_offsets();
        for (f, &d) in descriptor.factor_dims.iter().enumerate() {
            let mean: f64 = coords[offs[f]..offs[f] + d].iter().sum::<f64>() / d as f64;
            for c in coords[offs[f]..offs[f] + d].iter_mut() {
                *c -= mean;
            }
        }
        CartanVector { descriptor, coords }
    }

    pub fn zero(descriptor: &GroupDescriptor) -> Self {
        CartanVector { descriptor: descriptor.clone(), coords: vec![0.0; descriptor.coord_len()] }
    }

    fn factor_sums(&self) -> Vec<f64> {
        let offs = self.descriptor.factor_offsets();
        self.descriptor
            .factor_dims
            .iter()
            .enumerate()
            .map(|(f, &d)| self.coords[offs[f]..offs[f] + d].iter().sum())
            .collect()
    }

    /// Per-factor slice of coordinates.
    pub fn factor(&self, f: usize) -> &[f64] {
        let offs = self.descriptor.factor_offsets();
        let d = self.descriptor.factor_dims[f];
        &self.coords[offs[f]..offs[f] + d]
    }

    /// Membership in the closed positive chamber: per-factor non-increasing.
    pub fn is_dominant(&self, tol: f64) -> bool {
        let offs = self.descriptor.factor_offsets();
        for (f, &d) in self.descriptor.factor_dims.iter().enumerate() {
            for i in 0..d - 1 {
                if self.coords[offs[f] + i] < self.coords[offs[f] + i + 1] - tol {
                    return false;
                }
            }
        }
        true
    }

    pub fn add(&self, other: &CartanVector) -> CartanVector {
        assert_eq!(self.descriptor, other.descriptor);
        let coords = self.coords.iter().zip(&other.coords).map(|(a, b)| a + b).collect();
        CartanVector { descriptor: self.descriptor.clone(), coords }
    }

    pub fn sub(&self, other: &CartanVector) -> CartanVector {
        assert_eq!(self.descriptor, other.descriptor);
        let coords = self.coords.iter().zip(&other.coords).map(|(a, b)| a - b).collect();
        CartanVector { descriptor: self.descriptor.clone(), coords }
    }

    pub fn scale(&self, s: f64) -> CartanVector {
        CartanVector {
            descriptor: self.descriptor.clone(),
            coords: self.coords.iter().map(|c| c * s).collect(),
        }
    }

    pub fn norm(&self) -> f64 {
        inner(self, self).sqrt()
    }

    pub fn normalized(&self) -> CartanVector {
        let n = self.norm();
        assert!(n > 0.0, "cannot normalize the zero vector");
        self.scale(1.0 / n)
    }

    pub fn dist(&self, other: &CartanVector) -> f64 {
        self.sub(other).norm()
    }
}

/// Trace-form inner product on the Cartan subspace. In the stored coordinates
/// this is the plain dot product, since tr(XY) = sum x_i y_i on diagonals.
pub fn inner(v: &CartanVector, w: &CartanVector) -> f64 {
    assert_eq!(v.descriptor, w.descriptor, "descriptor mismatch in inner product");
    v.coords.iter().zip(&w.coords).map(|(a, b)| a * b).sum()
}

/// Linear form on the Cartan subspace, stored as coefficients dual to the
/// Cartan coordinates via the trace pairing. Coefficients are canonicalized to
/// per-factor sum zero, which makes the dual vector equal to the coefficient
/// vector.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LinearForm {
    pub descriptor: GroupDescriptor,
    pub coeffs: Vec<f64>,
}

impl LinearForm {
    pub fn new(descriptor: GroupDescriptor, coeffs: Vec<f64>) -> Self {
        assert_eq!(coeffs.len(), descriptor.coord_len(), "coefficient length mismatch");
        let v = CartanVector::from_logs(descriptor.clone(), coeffs);
        LinearForm { descriptor, coeffs: v.coords }
    }

    /// The form <v, .> dual to a Cartan vector.
    pub fn from_vector(v: &CartanVector) -> Self {
        LinearForm { descriptor: v.descriptor.clone(), coeffs: v.coords.clone() }
    }

    pub fn zero(descriptor: &GroupDescriptor) -> Self {
        LinearForm { descriptor: descriptor.clone(), coeffs: vec![0.0; descriptor.coord_len()] }
    }

    pub fn eval(&self, v: &CartanVector) -> f64 {
        assert_eq!(self.descriptor, v.descriptor, "descriptor mismatch in form evaluation");
        self.coeffs.iter().zip(&v.coords).map(|(a, b)| a * b).sum()
    }

    /// Trace-form dual vector of the form.
    pub fn dual_vector(&self) -> CartanVector {
        CartanVector { descriptor: self.descriptor.clone(), coords: self.coeffs.clone() }
    }

    pub fn scale(&self, s: f64) -> LinearForm {
        LinearForm {
            descriptor: self.descriptor.clone(),
            coeffs: self.coeffs.iter().map(|c| c * s).collect(),
        }
    }

    pub fn norm(&self) -> f64 {
        self.coeffs.iter().map(|c| c * c).sum::<f64>().sqrt()
    }
}

/// Opposition involution: per SL_d factor, reverse the coordinates and negate.
pub fn opposition_involution(v: &CartanVector) -> CartanVector {
    let offs = v.descriptor.factor_offsets();
    let mut coords = v.coords.clone();
    for (f, &d) in v.descriptor.factor_dims.iter().enumerate() {
        for i in 0..d {
            coords[offs[f] + i] = -v.coords[offs[f] + d - 1 - i];
        }
    }
    CartanVector { descriptor: v.descriptor.clone(), coords }
}

/// Descending log-singular-value spectrum of a single factor, assembled from
/// the top halves of the spectra of `m` and of `m^{-1}`. Top singular values
/// are well conditioned at any grading, so each log is computed where it is
/// large; the middle value of odd dimensions comes from the unimodularity
/// constraint (the logs sum to zero).
fn log_singular_values(m: &Mat) -> Vec<f64> {
    let d = m.rows;
    let (_, s_fwd, _) = linalg::svd(m);
    // Unimodular input: the adjugate is the inverse up to determinant sign,
    // which the singular values ignore.
    let inv = m.adjugate();
    let (_, s_inv, _) = linalg::svd(&inv);
    let mut logs = vec![0.0; d];
    let half = d / 2;
    for i in 0..half {
        logs[i] = s_fwd[i].ln();
        logs[d - 1 - i] = -s_inv[i].ln();
    }
    if d % 2 == 1 {
        let partial: f64 = (0..half).map(|i| logs[i] + logs[d - 1 - i]).sum();
        logs[half] = -partial;
    }
    logs.sort_by(|a, b| b.partial_cmp(a).unwrap());
    logs
}

/// Descending log-eigenvalue-modulus spectrum of a single factor, assembled
/// the same way as `log_singular_values` but from characteristic polynomial
/// roots of `m` and `m^{-1}`.
fn log_eigenvalue_moduli(m: &Mat) -> Vec<f64> {
    let d = m.rows;
    let moduli_desc = |a: &Mat| -> Vec<f64> {
        let mut mods: Vec<f64> = linalg::poly_roots(&linalg::char_poly(a))
            .iter()
            .map(|r| r.norm())
            .collect();
        mods.sort_by(|a, b| b.partial_cmp(a).unwrap());
        mods
    };
    let fwd = moduli_desc(m);
    let inv = moduli_desc(&m.adjugate());
    let mut logs = vec![0.0; d];
    let half = d / 2;
    for i in 0..half {
        logs[i] = fwd[i].max(1e-300).ln();
        logs[d - 1 - i] = -inv[i].max(1e-300).ln();
    }
    if d % 2 == 1 {
        let partial: f64 = (0..half).map(|i| logs[i] + logs[d - 1 - i]).sum();
        logs[half] = -partial;
    }
    logs.sort_by(|a, b| b.partial_cmp(a).unwrap());
    logs
}

/// Cartan projection: per factor, the descending logarithms of the singular
/// values. Lands in the closed positive chamber.
pub fn cartan_projection(g: &GroupElement) -> Result<CartanVector> {
    if !g.factors.iter().all(|m| m.is_finite()) {
        return Err(Error::InvalidInput("non-finite entries".into()));
    }
    let mut coords = Vec::with_capacity(g.descriptor.coord_len());
    for m in &g.factors {
        coords.extend(log_singular_values(m));
    }
    Ok(CartanVector::from_logs(g.descriptor.clone(), coords))
}

/// Jordan projection: per factor, the descending logarithms of the eigenvalue
/// moduli.
pub fn jordan_projection(g: &GroupElement) -> Result<CartanVector> {
    if !g.factors.iter().all(|m| m.is_finite()) {
        return Err(Error::InvalidInput("non-finite entries".into()));
    }
    let mut coords = Vec::with_capacity(g.descriptor.coord_len());
    for m in &g.factors {
        coords.extend(log_eigenvalue_moduli(m));
    }
    Ok(CartanVector::from_logs(g.descriptor.clone(), coords))
}

/// True iff per factor the sorted log-moduli of the eigenvalues are strictly
/// decreasing with all consecutive gaps exceeding `margin`.
pub fn is_loxodromic(g: &GroupElement, margin: f64) -> bool {
    assert!(margin >= 0.0, "margin must be non-negative");
    let lambda = match jordan_projection(g) {
        Ok(l) => l,
        Err(_) => return false,
    };
    let offs = g.descriptor.factor_offsets();
    for (f, &d) in g.descriptor.factor_dims.iter().enumerate() {
        for i in 0..d - 1 {
            if lambda.coords[offs[f] + i] - lambda.coords[offs[f] + i + 1] <= margin {
                return false;
            }
        }
    }
    true
}

/// Iwasawa (KAN) decomposition: per factor `g = k * exp(a) * n` with `k`
/// special orthogonal, `exp(a)` positive diagonal, and `n` upper unipotent.
pub fn iwasawa_decompose(
    g: &GroupElement,
) -> Result<(GroupElement, CartanVector, GroupElement)> {
    let mut ks = Vec::new();
    let mut ns = Vec::new();
    let mut logs = Vec::new();
    for m in &g.factors {
        if !m.is_finite() {
            return Err(Error::InvalidInput("non-finite entries".into()));
        }
        let (q, r) = linalg::qr(m);
        let d = m.rows;
        for i in 0..d {
            if !(r[(i, i)] > 0.0) || !r[(i, i)].is_finite() {
                return Err(Error::DecompositionFailure(
                    "numerically singular input to Iwasawa decomposition".into(),
                ));
            }
        }
        let mut n = Mat::identity(d);
        for i in 0..d {
            for j in i + 1..d {
                n[(i, j)] = r[(i, j)] / r[(i, i)];
            }
        }
        for i in 0..d {
            logs.push(r[(i, i)].ln());
        }
        ks.push(q);
        ns.push(n);
    }
    let k = GroupElement { descriptor: g.descriptor.clone(), factors: ks };
    let n = GroupElement { descriptor: g.descriptor.clone(), factors: ns };
    // log diag(R), projected to exact trace zero. The projection absorbs the
    // input's determinant drift, so the recomposition residual scales with
    // that drift rather than with machine epsilon on large inputs.
    let a = CartanVector::from_logs(g.descriptor.clone(), logs);
    Ok((k, a, n))
}

/// KAK decomposition `g = k1 * exp(mu) * k2` with `mu` dominant and `k1, k2`
/// special orthogonal. The boolean is true when `mu` has a repeated coordinate
/// in some factor, in which case the flag parts are not unique.
pub struct KakDecomposition {
    pub k1: GroupElement,
    pub mu: CartanVector,
    pub k2: GroupElement,
    pub non_unique: bool,
}

pub fn kak_decompose(g: &GroupElement) -> Result<KakDecomposition> {
    let mu = cartan_projection(g)?;
    let mut k1s = Vec::new();
    let mut k2s = Vec::new();
    let mut non_unique = false;
    for m in &g.factors {
        let d = m.rows;
        let (u, s, v) = linalg::svd(m);
        // Repeated singular values make the frames non-unique. Ties are kept
        // as the deterministic output of the solver.
        for i in 0..d - 1 {
            if (s[i] - s[i + 1]).abs() <= 1e-12 * (1.0 + s[i].abs()) {
                non_unique = true;
            }
        }
        let (mut u, mut v) = (u, v);
        // det u and det v have equal sign; force both +1 by flipping a
        // matched column pair.
        if u.det() < 0.0 {
            for i in 0..d {
                u[(i, d - 1)] = -u[(i, d - 1)];
                v[(i, d - 1)] = -v[(i, d - 1)];
            }
        }
        k1s.push(u);
        k2s.push(v.transpose());
    }
    Ok(KakDecomposition {
        k1: GroupElement { descriptor: g.descriptor.clone(), factors: k1s },
        mu,
        k2: GroupElement { descriptor: g.descriptor.clone(), factors: k2s },
        non_unique,
    })
}

/// norm induced by the trace form.
pub fn norm(v: &CartanVector) -> f64 {
    v.norm()
}
