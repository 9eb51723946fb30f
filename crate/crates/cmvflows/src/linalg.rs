//! Dense linear-algebra helpers: eigenvalues, polynomial roots, Hermitian
//! matrix functions, the QL-type split `A = u·L`, and distances between
//! finite multisets of complex numbers.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::laurent::CMat;

/// Eigenvalues of a square complex matrix (complex Schur form).
pub fn eigenvalues(m: &CMat) -> Result<Vec<Complex64>> {
    let schur = m.clone().try_schur(1e-15, 10_000).ok_or_else(|| Error::NotConverged {
        what: "Schur decomposition".into(),
        residual: f64::NAN,
    })?;
    let (_, t) = schur.unpack();
    Ok((0..t.nrows()).map(|i| t[(i, i)]).collect())
}

/// Roots of `Σ_k c_k z^k` (coefficients listed from the constant term up).
///
/// The polynomial is made monic, its companion matrix is balanced by powers
/// of two, and the eigenvalues are refined by a few Newton steps on the
/// original coefficients.
pub fn poly_roots(coeffs: &[Complex64]) -> Result<Vec<Complex64>> {
    let n = coeffs.len().saturating_sub(1);
    if n == 0 {
        return Ok(Vec::new());
    }
    let lead = coeffs[n];
    let scale = coeffs.iter().map(|c| c.norm()).fold(0.0, f64::max);
    if lead.norm() < 1e-14 * scale.max(1.0) {
        return Err(Error::Domain(format!(
            "leading coefficient {lead} is numerically zero"
        )));
    }
    let mut comp = CMat::zeros(n, n);
    for i in 1..n {
        comp[(i, i - 1)] = Complex64::new(1.0, 0.0);
    }
    for i in 0..n {
        comp[(i, n - 1)] = -coeffs[i] / lead;
    }
    balance(&mut comp);
    let mut roots = eigenvalues(&comp)?;
    for r in roots.iter_mut() {
        *r = newton_polish(coeffs, *r);
    }
    Ok(roots)
}

fn horner(coeffs: &[Complex64], z: Complex64) -> (Complex64, Complex64) {
    let mut p = Complex64::new(0.0, 0.0);
    let mut dp = Complex64::new(0.0, 0.0);
    for c in coeffs.iter().rev() {
        dp = dp * z + p;
        p = p * z + c;
    }
    (p, dp)
}

fn newton_polish(coeffs: &[Complex64], mut z: Complex64) -> Complex64 {
    let (mut best, _) = horner(coeffs, z);
    for _ in 0..3 {
        let (p, dp) = horner(coeffs, z);
        if dp.norm() == 0.0 {
            break;
        }
        let next = z - p / dp;
        let (pn, _) = horner(coeffs, next);
        if pn.norm() < best.norm() {
            z = next;
            best = pn;
        } else {
            break;
        }
    }
    z
}

/// Diagonal similarity by powers of two that equalizes row and column norms.
fn balance(m: &mut CMat) {
    let n = m.nrows();
    let radix = 2.0f64;
    let mut converged = false;
    while !converged {
        converged = true;
        for i in 0..n {
            let mut c = 0.0;
            let mut r = 0.0;
            for j in 0..n {
                if j != i {
                    c += m[(j, i)].norm();
                    r += m[(i, j)].norm();
                }
            }
            if c == 0.0 || r == 0.0 {
                continue;
            }
            let s = c + r;
            let mut f = 1.0;
            let (mut cc, mut rr) = (c, r);
            while cc < rr / radix {
                cc *= radix;
                rr /= radix;
                f *= radix;
            }
            while cc > rr * radix {
                cc /= radix;
                rr *= radix;
                f /= radix;
            }
            if (cc + rr) < 0.95 * s {
                converged = false;
                for j in 0..n {
                    m[(i, j)] /= f;
                    m[(j, i)] *= f;
                }
            }
        }
    }
}

/// `exp(H)` for a Hermitian matrix `H` via its eigendecomposition. Only the
/// Hermitian part of the input is used.
pub fn hermitian_exp(h: &CMat) -> CMat {
    hermitian_map(h, f64::exp)
}

/// Applies a real function to the eigenvalues of the Hermitian part of `h`.
pub fn hermitian_map(h: &CMat, f: impl Fn(f64) -> f64) -> CMat {
    let sym = (h + h.adjoint()) * Complex64::new(0.5, 0.0);
    let eig = sym.symmetric_eigen();
    let v = &eig.eigenvectors;
    let d = CMat::from_diagonal(
        &eig.eigenvalues
            .map(|x| Complex64::new(f(x), 0.0)),
    );
    v * d * v.adjoint()
}

/// Smallest eigenvalue of the Hermitian part of `h`.
pub fn min_hermitian_eigenvalue(h: &CMat) -> f64 {
    let sym = (h + h.adjoint()) * Complex64::new(0.5, 0.0);
    sym.symmetric_eigenvalues()
        .iter()
        .copied()
        .fold(f64::INFINITY, f64::min)
}

/// Splits an invertible `A` as `A = u·L` with `u` unitary and `L` lower
/// triangular with a strictly positive diagonal.
///
/// With `J` the reversal permutation, the QR factorization `AJ = QR` gives
/// `A = (QJ)(JRJ)` where `JRJ` is lower triangular; diagonal phases are then
/// moved from `L` into `u`.
pub fn ql_split(a: &CMat) -> Result<(CMat, CMat)> {
    let n = a.nrows();
    let j = reversal(n);
    let qr = (a * &j).qr();
    let (q, r) = (qr.q(), qr.r());
    let mut u = &q * &j;
    let mut l = &j * r * &j;
    for i in 0..n {
        let d = l[(i, i)];
        if d.norm() < 1e-300 {
            return Err(Error::Domain("QL split of a singular matrix".into()));
        }
        let phase = d / d.norm();
        for c in 0..n {
            l[(i, c)] /= phase;
            u[(c, i)] *= phase;
        }
    }
    Ok((u, l))
}

/// The `n × n` reversal permutation `J`.
pub fn reversal(n: usize) -> CMat {
    CMat::from_fn(n, n, |i, j| {
        if i + j + 1 == n {
            Complex64::new(1.0, 0.0)
        } else {
            Complex64::new(0.0, 0.0)
        }
    })
}

/// Bottleneck distance between two equal-size multisets: the smallest, over
/// all matchings, of the largest matched distance. Exact for up to eight
/// points, greedy beyond that.
pub fn multiset_distance(a: &[Complex64], b: &[Complex64]) -> f64 {
    if a.len() != b.len() {
        return f64::INFINITY;
    }
    let n = a.len();
    if n == 0 {
        return 0.0;
    }
    if n <= 8 {
        let mut perm: Vec<usize> = (0..n).collect();
        let mut best = f64::INFINITY;
        permute(&mut perm, 0, &mut |p| {
            let cost = p
                .iter()
                .enumerate()
                .map(|(i, &j)| (a[i] - b[j]).norm())
                .fold(0.0, f64::max);
            best = best.min(cost);
        });
        best
    } else {
        let mut used = vec![false; n];
        let mut worst: f64 = 0.0;
        for x in a {
            let (j, d) = b
                .iter()
                .enumerate()
                .filter(|(j, _)| !used[*j])
                .map(|(j, y)| (j, (x - y).norm()))
                .min_by(|l, r| l.1.total_cmp(&r.1))
                .expect("equal sizes");
            used[j] = true;
            worst = worst.max(d);
        }
        worst
    }
}

fn permute(p: &mut Vec<usize>, k: usize, visit: &mut impl FnMut(&[usize])) {
    if k == p.len() {
        visit(p);
        return;
    }
    for i in k..p.len() {
        p.swap(k, i);
        permute(p, k + 1, visit);
        p.swap(k, i);
    }
}

/// Hausdorff distance between two finite point sets.
pub fn hausdorff(a: &[Complex64], b: &[Complex64]) -> f64 {
    let one_sided = |x: &[Complex64], y: &[Complex64]| {
        x.iter()
            .map(|p| y.iter().map(|q| (p - q).norm()).fold(f64::INFINITY, f64::min))
            .fold(0.0, f64::max)
    };
    one_sided(a, b).max(one_sided(b, a))
}
