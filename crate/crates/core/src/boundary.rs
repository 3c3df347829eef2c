//! The Furstenberg boundary as sign-canonicalized orthonormal frames, the
//! Iwasawa cocycle and Busemann functions, Hopf coordinates, flag
//! transversality, atomic Patterson-Sullivan approximations, and the
//! Hopf-coordinate weight density.

use crate::error::{Error, Result};
use crate::group::{
    iwasawa_decompose, CartanVector, GroupDescriptor, GroupElement, LinearForm,
};
use crate::linalg::{self, Mat};
use crate::words::OrbitTable;

/// Boundary point: one orthonormal frame per factor, sign-canonicalized so the
/// first entry of each column above the noise floor is positive. Frames
/// represent full flags through their nested column spans, so individual
/// column signs carry no information.
#[derive(Clone, Debug, PartialEq)]
pub struct Flag {
    pub descriptor: GroupDescriptor,
    pub frames: Vec<Mat>,
}

const SIGN_FLOOR: f64 = 1e-8;

fn canonicalize_frame(mut m: Mat) -> Mat {
    let d = m.rows;
    for j in 0..d {
        let mut lead = None;
        for i in 0..d {
            if m[(i, j)].abs() > SIGN_FLOOR {
                lead = Some(i);
                break;
            }
        }
        if let Some(i) = lead {
            if m[(i, j)] < 0.0 {
                for r in 0..d {
                    m[(r, j)] = -m[(r, j)];
                }
            }
        }
    }
    m
}

impl Flag {
    /// Canonicalizes the frames of an orthogonal group element.
    pub fn from_frames(descriptor: GroupDescriptor, frames: Vec<Mat>) -> Result<Self> {
        for (f, m) in frames.iter().enumerate() {
            if m.rows != descriptor.factor_dims[f] || m.cols != descriptor.factor_dims[f] {
                return Err(Error::DimensionMismatch(format!("frame {f} has wrong shape")));
            }
            if m.orthogonality_residual() > 1e-10 {
                return Err(Error::InvalidInput(format!(
                    "frame {f} is not orthonormal to 1e-10"
                )));
            }
        }
        Ok(Flag { descriptor, frames: frames.into_iter().map(canonicalize_frame).collect() })
    }

    pub fn from_element(k: &GroupElement) -> Self {
        Flag {
            descriptor: k.descriptor.clone(),
            frames: k.factors.iter().cloned().map(canonicalize_frame).collect(),
        }
    }

    /// The base flag e+ (identity frames).
    pub fn base_plus(descriptor: &GroupDescriptor) -> Self {
        Flag::from_element(&GroupElement::identity(descriptor))
    }

    /// The opposite base flag e- (longest Weyl element frames).
    pub fn base_minus(descriptor: &GroupDescriptor) -> Self {
        Flag::from_element(&GroupElement::w0(descriptor))
    }

    /// Any orthogonal representative of the flag as a group element. The
    /// canonical frame may have determinant -1 in some factor; a column sign
    /// flip inside the stabilizer fixes that without moving the flag.
    pub fn representative(&self) -> GroupElement {
        let factors = self
            .frames
            .iter()
            .map(|m| {
                if m.det() < 0.0 {
                    let mut m = m.clone();
                    let d = m.rows;
                    for i in 0..d {
                        m[(i, d - 1)] = -m[(i, d - 1)];
                    }
                    m
                } else {
                    m.clone()
                }
            })
            .collect();
        GroupElement { descriptor: self.descriptor.clone(), factors }
    }

    /// Largest principal angle between the partial frames, maximized over
    /// nesting levels and factors. K-invariant and insensitive to column signs,
    /// hence a metric on the flag variety.
    pub fn distance(&self, other: &Flag) -> f64 {
        assert_eq!(self.descriptor, other.descriptor);
        let mut worst: f64 = 0.0;
        for (a, b) in self.frames.iter().zip(&other.frames) {
            let d = a.rows;
            for level in 1..d {
                // Principal angles between the spans of the first `level`
                // columns: cosines are the singular values of A_l^T B_l.
                let mut g = Mat::zeros(level, level);
                for i in 0..level {
                    for j in 0..level {
                        let mut dot = 0.0;
                        for r in 0..d {
                            dot += a[(r, i)] * b[(r, j)];
                        }
                        g[(i, j)] = dot;
                    }
                }
                let (_, s, _) = linalg::svd(&g);
                let cos_min = s[level - 1].clamp(-1.0, 1.0);
                worst = worst.max(cos_min.min(1.0).acos());
            }
        }
        worst
    }

    /// Left action of a group element: QR of g*k per factor, canonicalized.
    pub fn translate(&self, g: &GroupElement) -> Flag {
        let rep = self.representative();
        let moved = g.mul(&rep);
        let (k, _, _) = iwasawa_decompose(&moved).expect("translate of a valid flag");
        Flag::from_element(&k)
    }
}

/// Iwasawa cocycle sigma(g, xi): the log-A-part of g*k in KAN coordinates, for
/// any frame representative k of xi. Independent of the representative.
pub fn iwasawa_cocycle(g: &GroupElement, xi: &Flag) -> Result<CartanVector> {
    let rep = xi.representative();
    let (_, a, _) = iwasawa_decompose(&g.mul(&rep))?;
    Ok(a)
}

/// Busemann function beta_xi(g, h) = sigma(g^{-1}, xi) - sigma(h^{-1}, xi).
pub fn busemann(xi: &Flag, g: &GroupElement, h: &GroupElement) -> Result<CartanVector> {
    let sg = iwasawa_cocycle(&g.inverse(), xi)?;
    let sh = iwasawa_cocycle(&h.inverse(), xi)?;
    Ok(sg.sub(&sh))
}

/// Forward and backward flags (g+, g-) of a group element.
pub fn flag_pair(g: &GroupElement) -> Result<(Flag, Flag)> {
    let (k_plus, _, _) = iwasawa_decompose(g)?;
    let w0 = GroupElement::w0(&g.descriptor);
    let (k_minus, _, _) = iwasawa_decompose(&g.mul(&w0))?;
    Ok((Flag::from_element(&k_plus), Flag::from_element(&k_minus)))
}

/// Hopf coordinates (g+, g-, beta_{g-}(e, g)).
pub fn hopf(g: &GroupElement) -> Result<(Flag, Flag, CartanVector)> {
    let (plus, minus) = flag_pair(g)?;
    let e = GroupElement::identity(&g.descriptor);
    let b = busemann(&minus, &e, g)?;
    Ok((plus, minus, b))
}

/// Transversality test: per factor, for every nesting level i the i x i minor
/// pairing the first i columns of xi's frame with the last i columns of eta's
/// must have |det| > margin. Equivalent to V_i + W_{d-i} = R^d at every level.
pub fn in_general_position(xi: &Flag, eta: &Flag, margin: f64) -> bool {
    assert!(margin >= 0.0);
    for (a, b) in xi.frames.iter().zip(&eta.frames) {
        let d = a.rows;
        for level in 1..d {
            let mut m = Mat::zeros(level, level);
            for i in 0..level {
                for j in 0..level {
                    let mut dot = 0.0;
                    for r in 0..d {
                        dot += a[(r, i)] * b[(r, d - level + j)];
                    }
                    m[(i, j)] = dot;
                }
            }
            if m.det().abs() <= margin {
                return false;
            }
        }
    }
    true
}

/// Attracting fixed flag of a loxodromic element: the orthonormalized
/// eigenframe ordered by decreasing eigenvalue modulus.
pub fn attracting_flag(g: &GroupElement) -> Result<Flag> {
    let mut frames = Vec::new();
    for m in &g.factors {
        let d = m.rows;
        // Power/deflation-free route: eigenvectors from shifted inverse
        // iteration seeded by the roots of the characteristic polynomial.
        let roots = linalg::poly_roots(&linalg::char_poly(m));
        let mut order: Vec<usize> = (0..d).collect();
        order.sort_by(|&i, &j| roots[j].norm().partial_cmp(&roots[i].norm()).unwrap());
        let mut basis = Mat::zeros(d, d);
        for (col, &ri) in order.iter().enumerate() {
            let lam = roots[ri];
            if lam.im.abs() > 1e-9 * (1.0 + lam.norm()) {
                return Err(Error::Precondition(
                    "attracting flag requires real loxodromic spectrum".into(),
                ));
            }
            let mut shifted = m.clone();
            // Small regularization keeps the shift invertible.
            let eps = 1e-10 * (1.0 + lam.norm());
            for i in 0..d {
                shifted[(i, i)] -= lam.re + eps;
            }
            let inv = shifted
                .inverse()
                .ok_or_else(|| Error::DecompositionFailure("eigen shift singular".into()))?;
            // Inverse iteration from fixed generic starts; a start vector can
            // accidentally be another eigenvector, so the residual picks the
            // winner.
            let mut best: Option<(f64, Vec<f64>)> = None;
            for base in [1.31f64, -0.77] {
                let mut v: Vec<f64> = (0..d).map(|i| base.powi(i as i32 + 1)).collect();
                let n0 = v.iter().map(|x| x * x).sum::<f64>().sqrt();
                for x in v.iter_mut() {
                    *x /= n0;
                }
                for _ in 0..12 {
                    let mut w = vec![0.0; d];
                    for i in 0..d {
                        for j in 0..d {
                            w[i] += inv[(i, j)] * v[j];
                        }
                    }
                    let n = w.iter().map(|x| x * x).sum::<f64>().sqrt();
                    if n == 0.0 {
                        break;
                    }
                    for i in 0..d {
                        v[i] = w[i] / n;
                    }
                }
                let mut residual = 0.0f64;
                for i in 0..d {
                    let mut mv = 0.0;
                    for j in 0..d {
                        mv += m[(i, j)] * v[j];
                    }
                    residual = residual.max((mv - lam.re * v[i]).abs());
                }
                residual /= 1.0 + m.max_abs();
                if best.as_ref().is_none_or(|(r, _)| residual < *r) {
                    best = Some((residual, v));
                }
            }
            let (_, v) = best.expect("two starts attempted");
            for i in 0..d {
                basis[(i, col)] = v[i];
            }
        }
        let (q, _) = linalg::qr(&basis);
        frames.push(q);
    }
    Flag::from_frames(g.descriptor.clone(), frames)
}

/// Finitely supported measure on the boundary.
#[derive(Clone, Debug)]
pub struct AtomicMeasure {
    pub atoms: Vec<(Flag, f64)>,
}

impl AtomicMeasure {
    pub fn total_mass(&self) -> f64 {
        self.atoms.iter().map(|(_, w)| w).sum()
    }

    pub fn normalized(mut self) -> Result<Self> {
        let total = self.total_mass();
        if !(total > 0.0) || !total.is_finite() {
            return Err(Error::DegenerateMeasure(format!("total mass {total}")));
        }
        for (_, w) in self.atoms.iter_mut() {
            *w /= total;
        }
        Ok(self)
    }
}

/// Atomic Patterson-Sullivan approximation: atoms at the attracting frames
/// k1(gamma) of the table rows, weighted by exp(-s * psi(mu(gamma))) and
/// normalized. The identity and rows with ||mu|| below `norm_floor` are
/// excluded.
pub fn ps_atoms(
    table: &OrbitTable,
    psi: &LinearForm,
    s: f64,
    norm_floor: f64,
) -> Result<AtomicMeasure> {
    if !(s > 0.0) {
        return Err(Error::Precondition("ps_atoms requires s > 0".into()));
    }
    let mut atoms = Vec::new();
    for row in &table.rows {
        if row.word.is_empty() || row.mu.norm() <= norm_floor {
            continue;
        }
        let flag = match &row.flag {
            Some(f) => f.clone(),
            None => {
                return Err(Error::Precondition(
                    "table lacks attracting flags; enumerate with flags enabled".into(),
                ))
            }
        };
        let w = (-s * psi.eval(&row.mu)).exp();
        if w > 0.0 {
            atoms.push((flag, w));
        }
    }
    if atoms.is_empty() {
        return Err(Error::DegenerateMeasure("all weights underflowed".into()));
    }
    AtomicMeasure { atoms }.normalized()
}

/// Hopf-coordinate density factor
/// exp(psi1(beta_{g+}(e,g)) + psi2(beta_{g-}(e,g))).
pub fn bms_weight(g: &GroupElement, psi1: &LinearForm, psi2: &LinearForm) -> Result<f64> {
    let (plus, minus) = flag_pair(g)?;
    let e = GroupElement::identity(&g.descriptor);
    let b_plus = busemann(&plus, &e, g)?;
    let b_minus = busemann(&minus, &e, g)?;
    Ok((psi1.eval(&b_plus) + psi2.eval(&b_minus)).exp())
}

/// Max relative conformality discrepancy over first-letter cylinders.
///
/// Builds the atomic measure at depth L from `table` and compares, per
/// cylinder, the gamma-pushforward mass against the conformal-density
/// integral: the direct atom masses reweighted by
/// exp(s * psi(beta_xi(e, gamma))) at the atoms' own flags. Cylinder
/// membership of a pushed atom is decided by the first letter of the
/// reduced word. Cylinder masses are the finite-measure analog of the
/// Radon-Nikodym comparison; the density is integrated atomwise because a
/// single representative cannot see its variation across the cylinder,
/// which would leave a depth-independent bias.
pub fn conformality_residual(
    table: &OrbitTable,
    gens: &crate::words::GeneratorSystem,
    psi: &LinearForm,
    s: f64,
    gamma_word: &[i16],
    norm_floor: f64,
) -> Result<f64> {
    if table.depth < 3 {
        return Err(Error::Precondition("conformality residual needs depth >= 3".into()));
    }
    let gamma = gens.element_of_word(gamma_word)?;
    if gamma_word.is_empty() {
        return Ok(0.0);
    }
    let measure = ps_atoms(table, psi, s, norm_floor)?;
    let p = gens.generators.len();
    let letters: Vec<i16> = (1..=p as i16).flat_map(|i| [i, -i]).collect();
    let mut expected = vec![0.0f64; letters.len()];
    let mut pushed = vec![0.0f64; letters.len()];
    let idx_of = |letter: i16| -> usize {
        let i = letter.unsigned_abs() as usize - 1;
        2 * i + if letter > 0 { 0 } else { 1 }
    };
    let e = GroupElement::identity(&gens.descriptor);
    let mut atom_iter = measure.atoms.iter();
    for row in &table.rows {
        if row.word.is_empty() || row.mu.norm() <= norm_floor {
            continue;
        }
        let (flag, w) = atom_iter.next().expect("atom per retained row");
        let density = (s * psi.eval(&busemann(flag, &e, &gamma)?)).exp();
        expected[idx_of(row.word[0])] += w * density;
        let moved = crate::words::reduce_concat(gamma_word, &row.word);
        if let Some(&first) = moved.first() {
            pushed[idx_of(first)] += w;
        }
    }
    let mut worst: f64 = 0.0;
    for ci in 0..letters.len() {
        if expected[ci] <= 0.0 || pushed[ci] <= 0.0 {
            continue; // empty cylinder: excluded with notice
        }
        let denom = expected[ci].max(pushed[ci]);
        worst = worst.max((pushed[ci] - expected[ci]).abs() / denom);
    }
    Ok(worst)
}
