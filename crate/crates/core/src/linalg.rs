//! Small dense helpers on top of `nalgebra`.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use rand::Rng;
use rand_distr::StandardNormal;

pub type Mat = DMatrix<f64>;
pub type Vector = DVector<f64>;

pub fn symmetrize(m: &Mat) -> Mat {
    (m + m.transpose()) * 0.5
}

/// `‖M − Mᵀ‖_F / ‖M‖_F`, zero for the zero matrix.
pub fn asym_rel(m: &Mat) -> f64 {
    let n = m.norm();
    if n == 0.0 {
        return 0.0;
    }
    (m - m.transpose()).norm() / n
}

/// `[A, B] = AB − BA`.
pub fn commutator(a: &Mat, b: &Mat) -> Mat {
    a * b - b * a
}

pub fn kron(a: &Mat, b: &Mat) -> Mat {
    a.kronecker(b)
}

/// `A ⊕ B := A ⊗ B + B ⊗ A`.
pub fn kron_sum(a: &Mat, b: &Mat) -> Mat {
    a.kronecker(b) + b.kronecker(a)
}

/// Column-major vectorization.
pub fn vec_of(m: &Mat) -> Vector {
    Vector::from_column_slice(m.as_slice())
}

/// Ratio of extreme singular values; infinite when the smallest is zero.
pub fn condition_number(m: &Mat) -> f64 {
    let sv = m.clone().svd(false, false).singular_values;
    let max = sv.max();
    let min = sv.min();
    if min == 0.0 {
        f64::INFINITY
    } else {
        max / min
    }
}

/// Eigenvalues and eigenvectors of a symmetric matrix, sorted by descending eigenvalue.
pub fn sorted_sym_eigen(m: &Mat) -> (Vec<f64>, Mat) {
    let eig = SymmetricEigen::new(symmetrize(m));
    let n = eig.eigenvalues.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| eig.eigenvalues[j].total_cmp(&eig.eigenvalues[i]));
    let values = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let vectors = Mat::from_fn(n, n, |r, c| eig.eigenvectors[(r, order[c])]);
    (values, vectors)
}

pub fn min_sym_eigenvalue(m: &Mat) -> f64 {
    SymmetricEigen::new(symmetrize(m)).eigenvalues.min()
}

/// Spectral norm (largest singular value).
pub fn spectral_norm(m: &Mat) -> f64 {
    m.clone().svd(false, false).singular_values.max()
}

/// `rows × cols` matrix with i.i.d. `N(0, scale²)` entries.
pub fn gaussian_matrix<R: Rng + ?Sized>(rows: usize, cols: usize, scale: f64, rng: &mut R) -> Mat {
    Mat::from_fn(rows, cols, |_, _| scale * rng.sample::<f64, _>(StandardNormal))
}

pub fn gaussian_vector<R: Rng + ?Sized>(len: usize, scale: f64, rng: &mut R) -> Vector {
    Vector::from_fn(len, |_, _| scale * rng.sample::<f64, _>(StandardNormal))
}

/// Random orthogonal matrix (Q factor of a Gaussian matrix with sign-fixed diagonal of R).
pub fn random_orthogonal<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Mat {
    let g = gaussian_matrix(n, n, 1.0, rng);
    let qr = g.qr();
    let mut q = qr.q();
    let r = qr.r();
    for j in 0..n {
        if r[(j, j)] < 0.0 {
            q.column_mut(j).neg_mut();
        }
    }
    q
}

/// Largest principal angle (radians) between unit vectors `u` and `v`, ignoring sign.
pub fn unsigned_angle(u: &Vector, v: &Vector) -> f64 {
    let c = u.dot(v).abs();
    let perp = (v - u * u.dot(v)).norm();
    perp.atan2(c)
}
