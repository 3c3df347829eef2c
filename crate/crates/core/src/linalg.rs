//! Small dense matrix kernels: QR, Jacobi eigensolvers, one-sided Jacobi SVD,
//! characteristic polynomials and polynomial roots.
//!
//! Everything here targets matrices of dimension 2..=6. Robustness for strongly
//! graded spectra (singular values spanning many orders of magnitude) matters
//! more than asymptotic speed: long word products concentrate all their mass in
//! the top singular direction, and log-scale invariants need the small singular
//! values to full relative accuracy. Callers that need both tails accurate
//! should combine results for `a` and `a.inverse()` (see `group::cartan_projection`).

use num_complex::Complex64;

/// Row-major dense square-ish matrix with `f64` entries.
#[derive(Clone, Debug, PartialEq)]
pub struct Mat {
    pub rows: usize,
    pub cols: usize,
    pub data: Vec<f64>,
}

impl Mat {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Mat { rows, cols, data: vec![0.0; rows * cols] }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Mat::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = 1.0;
        }
        m
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Self {
        let r = rows.len();
        let c = if r > 0 { rows[0].len() } else { 0 };
        assert!(rows.iter().all(|row| row.len() == c), "ragged rows");
        Mat { rows: r, cols: c, data: rows.iter().flatten().copied().collect() }
    }

    pub fn diag(entries: &[f64]) -> Self {
        let n = entries.len();
        let mut m = Mat::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = entries[i];
        }
        m
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    pub fn transpose(&self) -> Mat {
        let mut t = Mat::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                t[(j, i)] = self[(i, j)];
            }
        }
        t
    }

    pub fn mul(&self, other: &Mat) -> Mat {
        assert_eq!(self.cols, other.rows, "dimension mismatch in mul");
        let mut out = Mat::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self[(i, k)];
                if a == 0.0 {
                    continue;
                }
                for j in 0..other.cols {
                    out[(i, j)] += a * other[(k, j)];
                }
            }
        }
        out
    }

    pub fn scale(&self, s: f64) -> Mat {
        Mat { rows: self.rows, cols: self.cols, data: self.data.iter().map(|x| x * s).collect() }
    }

    pub fn add(&self, other: &Mat) -> Mat {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        let data = self.data.iter().zip(&other.data).map(|(a, b)| a + b).collect();
        Mat { rows: self.rows, cols: self.cols, data }
    }

    pub fn sub(&self, other: &Mat) -> Mat {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        let data = self.data.iter().zip(&other.data).map(|(a, b)| a - b).collect();
        Mat { rows: self.rows, cols: self.cols, data }
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |m, x| m.max(x.abs()))
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|x| x.is_finite())
    }

    pub fn trace(&self) -> f64 {
        (0..self.rows.min(self.cols)).map(|i| self[(i, i)]).sum()
    }

    pub fn col(&self, j: usize) -> Vec<f64> {
        (0..self.rows).map(|i| self[(i, j)]).collect()
    }

    /// Frobenius distance to another matrix.
    pub fn dist(&self, other: &Mat) -> f64 {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        self.data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| (a - b) * (a - b))
            .sum::<f64>()
            .sqrt()
    }

    /// max_ij |Q^T Q - I|, a cheap orthogonality residual.
    pub fn orthogonality_residual(&self) -> f64 {
        let g = self.transpose().mul(self);
        let mut r: f64 = 0.0;
        for i in 0..g.rows {
            for j in 0..g.cols {
                let target = if i == j { 1.0 } else { 0.0 };
                r = r.max((g[(i, j)] - target).abs());
            }
        }
        r
    }

    /// Determinant via LU with partial pivoting.
    pub fn det(&self) -> f64 {
        assert!(self.is_square());
        let n = self.rows;
        let mut a = self.clone();
        let mut det = 1.0;
        for k in 0..n {
            let mut piv = k;
            for i in k + 1..n {
                if a[(i, k)].abs() > a[(piv, k)].abs() {
                    piv = i;
                }
            }
            if a[(piv, k)] == 0.0 {
                return 0.0;
            }
            if piv != k {
                for j in 0..n {
                    let tmp = a[(k, j)];
                    a[(k, j)] = a[(piv, j)];
                    a[(piv, j)] = tmp;
                }
                det = -det;
            }
            det *= a[(k, k)];
            for i in k + 1..n {
                let f = a[(i, k)] / a[(k, k)];
                for j in k..n {
                    a[(i, j)] -= f * a[(k, j)];
                }
            }
        }
        det
    }

    /// Inverse via Gauss-Jordan with partial pivoting. Returns `None` when the
    /// pivot underflows relative to the matrix scale.
    pub fn inverse(&self) -> Option<Mat> {
        assert!(self.is_square());
        let n = self.rows;
        let mut a = self.clone();
        let mut inv = Mat::identity(n);
        let scale = self.max_abs().max(1e-300);
        for k in 0..n {
            let mut piv = k;
            for i in k + 1..n {
                if a[(i, k)].abs() > a[(piv, k)].abs() {
                    piv = i;
                }
            }
            if a[(piv, k)].abs() < 1e-300 * scale {
                return None;
            }
            if piv != k {
                for j in 0..n {
                    a.data.swap(k * n + j, piv * n + j);
                    inv.data.swap(k * n + j, piv * n + j);
                }
            }
            let p = a[(k, k)];
            for j in 0..n {
                a[(k, j)] /= p;
                inv[(k, j)] /= p;
            }
            for i in 0..n {
                if i == k {
                    continue;
                }
                let f = a[(i, k)];
                if f == 0.0 {
                    continue;
                }
                for j in 0..n {
                    a[(i, j)] -= f * a[(k, j)];
                    inv[(i, j)] -= f * inv[(k, j)];
                }
            }
        }
        Some(inv)
    }

    /// Adjugate (transposed cofactor matrix). For a unimodular matrix this is
    /// the inverse (up to the determinant sign), and unlike elimination it
    /// keeps the dominant entries accurate for strongly graded inputs: the
    /// large cofactors are products of large entries with no cancellation
    /// against the pivot scale.
    pub fn adjugate(&self) -> Mat {
        assert!(self.is_square());
        let n = self.rows;
        if n == 1 {
            return Mat::from_rows(&[vec![1.0]]);
        }
        let mut adj = Mat::zeros(n, n);
        let mut minor = Mat::zeros(n - 1, n - 1);
        for i in 0..n {
            for j in 0..n {
                let mut r = 0;
                for ii in 0..n {
                    if ii == i {
                        continue;
                    }
                    let mut c = 0;
                    for jj in 0..n {
                        if jj == j {
                            continue;
                        }
                        minor[(r, c)] = self[(ii, jj)];
                        c += 1;
                    }
                    r += 1;
                }
                let sign = if (i + j) % 2 == 0 { 1.0 } else { -1.0 };
                adj[(j, i)] = sign * minor.det();
            }
        }
        adj
    }

    /// Matrix exponential by scaling-and-squaring with a Taylor series.
    /// Intended for the moderate-norm Lie algebra elements used to build
    /// test samples, not for graded inputs.
    pub fn expm(&self) -> Mat {
        assert!(self.is_square());
        let n = self.rows;
        let norm = self.max_abs();
        let squarings = if norm > 0.5 { (norm / 0.5).log2().ceil() as u32 } else { 0 };
        let a = self.scale(0.5f64.powi(squarings as i32));
        let mut term = Mat::identity(n);
        let mut sum = Mat::identity(n);
        for k in 1..=24 {
            term = term.mul(&a).scale(1.0 / k as f64);
            sum = sum.add(&term);
        }
        for _ in 0..squarings {
            sum = sum.mul(&sum);
        }
        sum
    }
}

impl std::ops::Index<(usize, usize)> for Mat {
    type Output = f64;
    fn index(&self, (i, j): (usize, usize)) -> &f64 {
        &self.data[i * self.cols + j]
    }
}

impl std::ops::IndexMut<(usize, usize)> for Mat {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut f64 {
        &mut self.data[i * self.cols + j]
    }
}

/// Householder QR with the sign convention `r[(i,i)] > 0`.
///
/// Returns `(q, r)` with `q` orthogonal and `r` upper triangular. When the
/// input has positive determinant, `q` has determinant +1.
pub fn qr(a: &Mat) -> (Mat, Mat) {
    assert!(a.is_square());
    let n = a.rows;
    let mut r = a.clone();
    let mut q = Mat::identity(n);
    for k in 0..n {
        // Householder vector for column k.
        let mut alpha = 0.0;
        for i in k..n {
            alpha += r[(i, k)] * r[(i, k)];
        }
        alpha = alpha.sqrt();
        if alpha == 0.0 {
            continue;
        }
        if r[(k, k)] > 0.0 {
            alpha = -alpha;
        }
        let mut v = vec![0.0; n];
        v[k] = r[(k, k)] - alpha;
        for i in k + 1..n {
            v[i] = r[(i, k)];
        }
        let vnorm2: f64 = v[k..].iter().map(|x| x * x).sum();
        if vnorm2 == 0.0 {
            continue;
        }
        // r <- (I - 2 v v^T / v^T v) r ; q <- q (I - 2 v v^T / v^T v)
        for j in 0..n {
            let dot: f64 = (k..n).map(|i| v[i] * r[(i, j)]).sum();
            let f = 2.0 * dot / vnorm2;
            for i in k..n {
                r[(i, j)] -= f * v[i];
            }
        }
        for i in 0..n {
            let dot: f64 = (k..n).map(|j| v[j] * q[(i, j)]).sum();
            let f = 2.0 * dot / vnorm2;
            for j in k..n {
                q[(i, j)] -= f * v[j];
            }
        }
    }
    // Flip signs so the diagonal of r is positive.
    for i in 0..n {
        if r[(i, i)] < 0.0 {
            for j in 0..n {
                r[(i, j)] = -r[(i, j)];
                q[(j, i)] = -q[(j, i)];
            }
        }
        for j in 0..i {
            r[(i, j)] = 0.0;
        }
    }
    (q, r)
}

/// Symmetric eigendecomposition by cyclic Jacobi rotations.
///
/// Returns eigenvalues in descending order and the orthogonal matrix whose
/// columns are the matching eigenvectors. Deterministic sweep order.
pub fn sym_eigen(a: &Mat) -> (Vec<f64>, Mat) {
    assert!(a.is_square());
    let n = a.rows;
    let mut s = a.clone();
    // Symmetrize defensively; callers pass Gram-type matrices.
    for i in 0..n {
        for j in 0..i {
            let avg = 0.5 * (s[(i, j)] + s[(j, i)]);
            s[(i, j)] = avg;
            s[(j, i)] = avg;
        }
    }
    let mut v = Mat::identity(n);
    for _sweep in 0..60 {
        let mut off: f64 = 0.0;
        for p in 0..n {
            for q in p + 1..n {
                off = off.max(s[(p, q)].abs() / (s[(p, p)].abs().max(s[(q, q)].abs()).max(1e-300)));
            }
        }
        if off < 1e-15 {
            break;
        }
        for p in 0..n {
            for q in p + 1..n {
                let apq = s[(p, q)];
                if apq.abs() <= 1e-300 {
                    continue;
                }
                let app = s[(p, p)];
                let aqq = s[(q, q)];
                let tau = (aqq - app) / (2.0 * apq);
                let t = if tau >= 0.0 {
                    1.0 / (tau + (1.0 + tau * tau).sqrt())
                } else {
                    -1.0 / (-tau + (1.0 + tau * tau).sqrt())
                };
                let c = 1.0 / (1.0 + t * t).sqrt();
                let sn = t * c;
                for i in 0..n {
                    let sip = s[(i, p)];
                    let siq = s[(i, q)];
                    s[(i, p)] = c * sip - sn * siq;
                    s[(i, q)] = sn * sip + c * siq;
                }
                for j in 0..n {
                    let spj = s[(p, j)];
                    let sqj = s[(q, j)];
                    s[(p, j)] = c * spj - sn * sqj;
                    s[(q, j)] = sn * spj + c * sqj;
                }
                for i in 0..n {
                    let vip = v[(i, p)];
                    let viq = v[(i, q)];
                    v[(i, p)] = c * vip - sn * viq;
                    v[(i, q)] = sn * vip + c * viq;
                }
            }
        }
    }
    let mut pairs: Vec<(f64, usize)> = (0..n).map(|i| (s[(i, i)], i)).collect();
    pairs.sort_by(|a, b| b.0.partial_cmp(&a.0).unwrap().then(a.1.cmp(&b.1)));
    let vals: Vec<f64> = pairs.iter().map(|p| p.0).collect();
    let mut vecs = Mat::zeros(n, n);
    for (new_j, &(_, old_j)) in pairs.iter().enumerate() {
        for i in 0..n {
            vecs[(i, new_j)] = v[(i, old_j)];
        }
    }
    (vals, vecs)
}

/// One-sided Jacobi SVD: `a = u * diag(sigma) * v^T` with sigma descending.
///
/// Column rotations are applied until all column pairs are numerically
/// orthogonal, which keeps good relative accuracy on the large singular
/// values even for strongly graded inputs.
pub fn svd(a: &Mat) -> (Mat, Vec<f64>, Mat) {
    assert!(a.is_square());
    let n = a.rows;
    let mut u = a.clone();
    let mut v = Mat::identity(n);
    for _sweep in 0..60 {
        let mut rotated = false;
        for p in 0..n {
            for q in p + 1..n {
                let mut app = 0.0;
                let mut aqq = 0.0;
                let mut apq = 0.0;
                for i in 0..n {
                    app += u[(i, p)] * u[(i, p)];
                    aqq += u[(i, q)] * u[(i, q)];
                    apq += u[(i, p)] * u[(i, q)];
                }
                if apq.abs() <= 1e-15 * (app * aqq).sqrt() || apq == 0.0 {
                    continue;
                }
                rotated = true;
                let tau = (aqq - app) / (2.0 * apq);
                let t = if tau >= 0.0 {
                    1.0 / (tau + (1.0 + tau * tau).sqrt())
                } else {
                    -1.0 / (-tau + (1.0 + tau * tau).sqrt())
                };
                let c = 1.0 / (1.0 + t * t).sqrt();
                let sn = t * c;
                for i in 0..n {
                    let uip = u[(i, p)];
                    let uiq = u[(i, q)];
                    u[(i, p)] = c * uip - sn * uiq;
                    u[(i, q)] = sn * uip + c * uiq;
                    let vip = v[(i, p)];
                    let viq = v[(i, q)];
                    v[(i, p)] = c * vip - sn * viq;
                    v[(i, q)] = sn * vip + c * viq;
                }
            }
        }
        if !rotated {
            break;
        }
    }
    let sigma: Vec<f64> = (0..n)
        .map(|j| (0..n).map(|i| u[(i, j)] * u[(i, j)]).sum::<f64>().sqrt())
        .collect();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| sigma[b].partial_cmp(&sigma[a]).unwrap().then(a.cmp(&b)));
    let mut u_out = Mat::zeros(n, n);
    let mut v_out = Mat::zeros(n, n);
    let mut s_out = vec![0.0; n];
    for (new_j, &old_j) in order.iter().enumerate() {
        s_out[new_j] = sigma[old_j];
        let snorm = if sigma[old_j] > 0.0 { sigma[old_j] } else { 1.0 };
        for i in 0..n {
            u_out[(i, new_j)] = u[(i, old_j)] / snorm;
            v_out[(i, new_j)] = v[(i, old_j)];
        }
    }
    // Trailing singular values below the eps * sigma_1 floor leave their
    // u-columns parallel to the leading directions. Re-orthonormalize: QR
    // keeps the accurate leading spans and replaces the garbage columns with
    // the orthogonal complement, flipping matched v-columns to preserve the
    // factorization's signs.
    if u_out.orthogonality_residual() > 1e-10 {
        let (q, _) = qr(&u_out);
        for j in 0..n {
            let dot: f64 = (0..n).map(|i| q[(i, j)] * u_out[(i, j)]).sum();
            if dot < 0.0 {
                for i in 0..n {
                    v_out[(i, j)] = -v_out[(i, j)];
                }
            }
        }
        u_out = q;
    }
    (u_out, s_out, v_out)
}

/// Coefficients of the characteristic polynomial of `a`,
/// `z^n + c[n-1] z^{n-1} + ... + c[0]`, by the Faddeev-LeVerrier recurrence.
pub fn char_poly(a: &Mat) -> Vec<f64> {
    assert!(a.is_square());
    let n = a.rows;
    let mut coeffs = vec![0.0; n];
    let mut m = Mat::identity(n);
    for k in 1..=n {
        let am = a.mul(&m);
        let c = -am.trace() / k as f64;
        coeffs[n - k] = c;
        if k < n {
            m = am;
            for i in 0..n {
                m[(i, i)] += c;
            }
        }
    }
    coeffs
}

/// All complex roots of the monic polynomial `z^n + c[n-1] z^{n-1} + ... + c[0]`
/// by Durand-Kerner iteration with deterministic seeds, followed by one Newton
/// polish per root.
pub fn poly_roots(coeffs: &[f64]) -> Vec<Complex64> {
    let n = coeffs.len();
    if n == 0 {
        return Vec::new();
    }
    if n == 1 {
        return vec![Complex64::new(-coeffs[0], 0.0)];
    }
    if n == 2 {
        // Stable quadratic formula.
        let b = coeffs[1];
        let c = coeffs[0];
        let disc = b * b - 4.0 * c;
        if disc >= 0.0 {
            let sq = disc.sqrt();
            let q = -0.5 * (b + b.signum() * sq);
            let r1 = if q != 0.0 { q } else { 0.0 };
            let r2 = if q != 0.0 { c / q } else { 0.0 };
            if b == 0.0 {
                let s = (-c).max(0.0).sqrt();
                return vec![Complex64::new(s, 0.0), Complex64::new(-s, 0.0)];
            }
            return vec![Complex64::new(r1, 0.0), Complex64::new(r2, 0.0)];
        }
        let re = -b / 2.0;
        let im = (-disc).sqrt() / 2.0;
        return vec![Complex64::new(re, im), Complex64::new(re, -im)];
    }

    // Rescale z = s*w so the root moduli are O(1): Fujiwara-style bound.
    let mut s: f64 = 0.0;
    for k in 0..n {
        let deg = (n - k) as f64;
        let c = coeffs[k].abs();
        if c > 0.0 {
            s = s.max((2.0 * c).powf(1.0 / deg));
        }
    }
    if s == 0.0 {
        return vec![Complex64::new(0.0, 0.0); n];
    }
    let mut scaled = vec![0.0; n];
    for k in 0..n {
        scaled[k] = coeffs[k] / s.powi((n - k) as i32);
    }
    let eval = |c: &[f64], z: Complex64| -> Complex64 {
        let mut p = Complex64::new(1.0, 0.0);
        for &ck in c.iter().rev() {
            p = p * z + Complex64::new(ck, 0.0);
        }
        p
    };
    let seed = Complex64::new(0.4, 0.9);
    let mut roots: Vec<Complex64> = (0..n).map(|k| seed.powu(k as u32 + 1)).collect();
    for _iter in 0..400 {
        let mut max_step: f64 = 0.0;
        for i in 0..n {
            let mut denom = Complex64::new(1.0, 0.0);
            for j in 0..n {
                if i != j {
                    denom *= roots[i] - roots[j];
                }
            }
            if denom.norm() == 0.0 {
                continue;
            }
            let step = eval(&scaled, roots[i]) / denom;
            roots[i] -= step;
            max_step = max_step.max(step.norm() / (1.0 + roots[i].norm()));
        }
        if max_step < 1e-15 {
            break;
        }
    }
    // Newton polish on the scaled polynomial.
    // p'(z) = n z^{n-1} + sum_{k=1..n-1} k c_k z^{k-1}
    for r in roots.iter_mut() {
        for _ in 0..3 {
            let p = eval(&scaled, *r);
            let mut dp = Complex64::new(n as f64, 0.0) * r.powu(n as u32 - 1);
            let mut zk = Complex64::new(1.0, 0.0);
            for k in 1..n {
                dp += Complex64::new(k as f64 * scaled[k], 0.0) * zk;
                zk *= *r;
            }
            if dp.norm() < 1e-280 {
                break;
            }
            let step = p / dp;
            if step.norm() > 0.5 * (1.0 + r.norm()) {
                break;
            }
            *r -= step;
        }
    }
    roots.iter().map(|r| r * s).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn mat2(a: f64, b: f64, c: f64, d: f64) -> Mat {
        Mat::from_rows(&[vec![a, b], vec![c, d]])
    }

    #[test]
    fn qr_recomposes() {
        let g = Mat::from_rows(&[vec![1.0, 0.0], vec![1.0, 1.0]]);
        let (q, r) = qr(&g);
        assert!(q.orthogonality_residual() < 1e-14);
        assert!(q.mul(&r).dist(&g) < 1e-14);
        assert!(r[(0, 0)] > 0.0 && r[(1, 1)] > 0.0);
        // Hand Gram-Schmidt oracle: first column of q is (1,1)/sqrt(2).
        let s = 1.0 / 2.0f64.sqrt();
        assert!((q[(0, 0)] - s).abs() < 1e-14);
        assert!((q[(1, 0)] - s).abs() < 1e-14);
    }

    #[test]
    fn jacobi_eigen_golden_ratio() {
        // g g^T for [[2,1],[1,1]] has eigenvalues (7 +- 3 sqrt 5)/2.
        let ggt = mat2(5.0, 3.0, 3.0, 2.0);
        let (vals, vecs) = sym_eigen(&ggt);
        let expect_hi = (7.0 + 3.0 * 5.0f64.sqrt()) / 2.0;
        let expect_lo = (7.0 - 3.0 * 5.0f64.sqrt()) / 2.0;
        assert!((vals[0] - expect_hi).abs() < 1e-12);
        assert!((vals[1] - expect_lo).abs() < 1e-12);
        assert!(vecs.orthogonality_residual() < 1e-13);
    }

    #[test]
    fn svd_graded() {
        // Diagonal grading across 12 orders of magnitude.
        let a = Mat::from_rows(&[
            vec![1e6, 1.0, 0.0],
            vec![0.0, 1.0, 1.0],
            vec![0.0, 0.0, 1e-6],
        ]);
        let (u, s, v) = svd(&a);
        assert!(u.orthogonality_residual() < 1e-12);
        assert!(v.orthogonality_residual() < 1e-12);
        let rec = u.mul(&Mat::diag(&s)).mul(&v.transpose());
        assert!(rec.dist(&a) / a.max_abs() < 1e-13);
        assert!((s[0] - 1e6).abs() / 1e6 < 1e-10);
    }

    #[test]
    fn char_poly_and_roots() {
        let g = mat2(2.0, 1.0, 1.0, 1.0);
        let c = char_poly(&g); // z^2 - 3z + 1
        assert!((c[1] + 3.0).abs() < 1e-14);
        assert!((c[0] - 1.0).abs() < 1e-14);
        let roots = poly_roots(&c);
        let phi2 = (3.0 + 5.0f64.sqrt()) / 2.0;
        let mut mods: Vec<f64> = roots.iter().map(|r| r.norm()).collect();
        mods.sort_by(|a, b| b.partial_cmp(a).unwrap());
        assert!((mods[0] - phi2).abs() < 1e-12);
        assert!((mods[1] - 1.0 / phi2).abs() < 1e-12);
    }

    #[test]
    fn roots_of_cubic_with_complex_pair() {
        // (z - 2)(z^2 + 1) = z^3 - 2 z^2 + z - 2
        let roots = poly_roots(&[-2.0, 1.0, -2.0]);
        let mut mods: Vec<f64> = roots.iter().map(|r| r.norm()).collect();
        mods.sort_by(|a, b| b.partial_cmp(a).unwrap());
        assert!((mods[0] - 2.0).abs() < 1e-10);
        assert!((mods[1] - 1.0).abs() < 1e-10);
        assert!((mods[2] - 1.0).abs() < 1e-10);
    }

    #[test]
    fn expm_inverts_log_on_diagonals() {
        let x = Mat::diag(&[0.7, -0.2, -0.5]);
        let e = x.expm();
        for i in 0..3 {
            assert!((e[(i, i)] - x[(i, i)].exp()).abs() < 1e-12);
        }
    }

    #[test]
    fn inverse_roundtrip() {
        let g = Mat::from_rows(&[vec![2.0, 1.0, 0.0], vec![1.0, 1.0, 0.5], vec![0.0, 0.3, 1.0]]);
        let inv = g.inverse().unwrap();
        assert!(g.mul(&inv).dist(&Mat::identity(3)) < 1e-12);
    }
}
