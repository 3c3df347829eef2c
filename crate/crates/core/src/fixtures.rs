//! Standard fixture groups used by the verification suite, the acceptance
//! tests, and the benchmarks. All matrices are fixed rationals/exponentials so
//! every run sees identical inputs.

use crate::group::{CartanVector, GroupDescriptor, GroupElement};
use crate::linalg::Mat;
use crate::words::GeneratorSystem;
use rand::RngExt;

/// Hyperbolic element of SL_2(R) with prescribed attracting/repelling fixed
/// points on the boundary circle and half translation length `t` (so the
/// eigenvalues are e^{+-t}).
pub fn hyperbolic_sl2(attract: f64, repel: f64, t: f64) -> Mat {
    // Conjugate diag(e^t, e^{-t}) (attracting infinity, repelling 0) by the
    // Moebius map sending infinity -> attract, 0 -> repel. A fixed point at
    // infinity is represented by the projective column (1, 0).
    let col = |p: f64| if p.is_infinite() { (1.0, 0.0) } else { (p, 1.0) };
    let (a0, a1) = col(attract);
    let (r0, r1) = col(repel);
    let mut c = Mat::from_rows(&[vec![a0, r0], vec![a1, r1]]);
    if c.det() < 0.0 {
        c[(0, 1)] = -c[(0, 1)];
        c[(1, 1)] = -c[(1, 1)];
    }
    let s = c.det().abs().sqrt();
    let c = c.scale(1.0 / s);
    let a = Mat::diag(&[t.exp(), (-t).exp()]);
    c.mul(&a).mul(&c.inverse().expect("conjugator is invertible"))
}

fn rot3(axis: usize, theta: f64) -> Mat {
    let (c, s) = (theta.cos(), theta.sin());
    match axis {
        0 => Mat::from_rows(&[
            vec![1.0, 0.0, 0.0],
            vec![0.0, c, -s],
            vec![0.0, s, c],
        ]),
        1 => Mat::from_rows(&[
            vec![c, 0.0, s],
            vec![0.0, 1.0, 0.0],
            vec![-s, 0.0, c],
        ]),
        _ => Mat::from_rows(&[
            vec![c, -s, 0.0],
            vec![s, c, 0.0],
            vec![0.0, 0.0, 1.0],
        ]),
    }
}

pub fn sl2_descriptor() -> GroupDescriptor {
    GroupDescriptor::simple(&[2])
}

pub fn sl3_descriptor() -> GroupDescriptor {
    GroupDescriptor::simple(&[3])
}

pub fn product_descriptor() -> GroupDescriptor {
    GroupDescriptor::simple(&[2, 2])
}

fn sl2_element(m: Mat) -> GroupElement {
    GroupElement::new(sl2_descriptor(), vec![m]).expect("fixture matrix is valid")
}

/// Mild SL_2 Schottky pair for ball enumeration and identity suites: axes
/// (0, infinity) and (1, 3), half translation length 1.2.
pub fn sl2_ball_fixture() -> GeneratorSystem {
    let a = sl2_element(hyperbolic_sl2(f64::INFINITY, 0.0, 1.2));
    let b = sl2_element(hyperbolic_sl2(1.0, 3.0, 1.2));
    GeneratorSystem::new(
        sl2_descriptor(),
        vec![("a".into(), a), ("b".into(), b)],
        0.1,
    )
    .expect("fixture generators are valid")
}

/// Rank-one Schottky fixture with translation length 10 (eigenvalues e^{+-5})
/// and axes far apart. This is the counting fixture for growth-exponent and
/// conformality experiments.
pub fn sl2_schottky_fixture() -> GeneratorSystem {
    let a = sl2_element(hyperbolic_sl2(f64::INFINITY, 0.0, 5.0));
    let b = sl2_element(hyperbolic_sl2(1.0, 3.0, 5.0));
    GeneratorSystem::new(
        sl2_descriptor(),
        vec![("a".into(), a), ("b".into(), b)],
        0.1,
    )
    .expect("fixture generators are valid")
}

/// Loxodromic SL_3 pair for identity suites (not necessarily free at depth).
pub fn sl3_fixture() -> GeneratorSystem {
    let r1 = rot3(2, 0.7).mul(&rot3(0, 0.4));
    let r2 = rot3(1, 1.1).mul(&rot3(2, 0.3));
    let d1 = Mat::diag(&[1.2f64.exp(), 0.1f64.exp(), (-1.3f64).exp()]);
    let d2 = Mat::diag(&[1.0f64.exp(), (-0.2f64).exp(), (-0.8f64).exp()]);
    let a = r1.mul(&d1).mul(&r1.inverse().unwrap());
    let b = r2.mul(&d2).mul(&r2.inverse().unwrap());
    let desc = sl3_descriptor();
    GeneratorSystem::new(
        desc.clone(),
        vec![
            ("a".into(), GroupElement::new(desc.clone(), vec![a]).unwrap()),
            ("b".into(), GroupElement::new(desc, vec![b]).unwrap()),
        ],
        0.05,
    )
    .expect("fixture generators are valid")
}

/// SL_3 Schottky-style pair with strong contraction, free at desk depths.
pub fn sl3_schottky_fixture() -> GeneratorSystem {
    let r1 = rot3(2, 0.9).mul(&rot3(0, 0.5));
    let r2 = rot3(1, 1.3).mul(&rot3(2, 0.4));
    let d1 = Mat::diag(&[1.8f64.exp(), 0.2f64.exp(), (-2.0f64).exp()]);
    let d2 = Mat::diag(&[1.6f64.exp(), (-0.1f64).exp(), (-1.5f64).exp()]);
    let a = r1.mul(&d1).mul(&r1.inverse().unwrap());
    let b = r2.mul(&d2).mul(&r2.inverse().unwrap());
    let desc = sl3_descriptor();
    GeneratorSystem::new(
        desc.clone(),
        vec![
            ("a".into(), GroupElement::new(desc.clone(), vec![a]).unwrap()),
            ("b".into(), GroupElement::new(desc, vec![b]).unwrap()),
        ],
        0.05,
    )
    .expect("fixture generators are valid")
}

/// Product Schottky in SL_2 x SL_2: two generators whose Jordan directions are
/// not colinear, so the limit cone is a nondegenerate interval in the simplex
/// slice. The factor representations differ only in translation lengths.
pub fn product_schottky_fixture() -> GeneratorSystem {
    let desc = product_descriptor();
    let g1 = GroupElement::new(
        desc.clone(),
        vec![
            hyperbolic_sl2(f64::INFINITY, 0.0, 2.5),
            hyperbolic_sl2(f64::INFINITY, 0.0, 1.5),
        ],
    )
    .unwrap();
    let g2 = GroupElement::new(
        desc.clone(),
        vec![hyperbolic_sl2(1.0, 3.0, 1.5), hyperbolic_sl2(1.0, 3.0, 2.8)],
    )
    .unwrap();
    GeneratorSystem::new(desc, vec![("a".into(), g1), ("b".into(), g2)], 0.1)
        .expect("fixture generators are valid")
}

/// Degenerate product fixture contained in the diagonal: both factors carry
/// the same representation.
pub fn diagonal_product_fixture() -> GeneratorSystem {
    let desc = product_descriptor();
    let a2 = hyperbolic_sl2(f64::INFINITY, 0.0, 1.2);
    let b2 = hyperbolic_sl2(1.0, 3.0, 1.2);
    let g1 = GroupElement::new(desc.clone(), vec![a2.clone(), a2]).unwrap();
    let g2 = GroupElement::new(desc.clone(), vec![b2.clone(), b2]).unwrap();
    GeneratorSystem::new(desc, vec![("a".into(), g1), ("b".into(), g2)], 0.1)
        .expect("fixture generators are valid")
}

/// Uniformly random reduced word of the given length.
pub fn random_reduced_word<R: RngExt>(rng: &mut R, p: usize, len: usize) -> Vec<i16> {
    let mut word: Vec<i16> = Vec::with_capacity(len);
    while word.len() < len {
        let mag = rng.random_range(1..=p as i16);
        let letter = if rng.random_bool(0.5) { mag } else { -mag };
        if word.last() == Some(&-letter) {
            continue;
        }
        word.push(letter);
    }
    word
}

/// Haar-ish random special orthogonal element: QR of a Gaussian-free uniform
/// matrix, determinant-corrected.
pub fn random_orthogonal<R: RngExt>(desc: &GroupDescriptor, rng: &mut R) -> GroupElement {
    let factors = desc
        .factor_dims
        .iter()
        .map(|&d| {
            let mut m = Mat::zeros(d, d);
            loop {
                for x in m.data.iter_mut() {
                    *x = rng.random_range(-1.0..1.0);
                }
                if m.det().abs() > 0.01 {
                    break;
                }
            }
            let (mut q, _) = crate::linalg::qr(&m);
            if q.det() < 0.0 {
                for i in 0..d {
                    q[(i, d - 1)] = -q[(i, d - 1)];
                }
            }
            q
        })
        .collect();
    GroupElement { descriptor: desc.clone(), factors }
}

/// Random dominant Cartan vector with coordinates in a moderate range and
/// consecutive gaps at least `gap`.
pub fn random_dominant<R: RngExt>(desc: &GroupDescriptor, rng: &mut R, gap: f64) -> CartanVector {
    let offs = desc.factor_offsets();
    let mut coords = vec![0.0; desc.coord_len()];
    for (f, &d) in desc.factor_dims.iter().enumerate() {
        let mut vals: Vec<f64> = (0..d).map(|_| rng.random_range(0.0..1.5)).collect();
        vals.sort_by(|a, b| b.partial_cmp(a).unwrap());
        for i in 1..d {
            vals[i] = vals[i].min(vals[i - 1] - gap);
        }
        for i in 0..d {
            coords[offs[f] + i] = vals[i];
        }
    }
    CartanVector::from_logs(desc.clone(), coords)
}
