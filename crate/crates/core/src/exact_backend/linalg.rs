//! Dense complex linear algebra on top of nalgebra.
//!
//! Complex products are split into real products so that f32/f64 reach the
//! blocked real kernels; Hermitian matrices with vanishing imaginary part take
//! the real symmetric eigensolver.

use crate::error::{Error, Result};
use crate::scalar::{c_abs, c_real, c_zero, cplx, Real, C};
use nalgebra::{DMatrix, DVector, SymmetricEigen};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub type CMatrix<T> = DMatrix<C<T>>;

pub fn split<T: Real>(a: &CMatrix<T>) -> (DMatrix<T>, DMatrix<T>) {
    (a.map(|z| z.re), a.map(|z| z.im))
}

pub fn join<T: Real>(re: &DMatrix<T>, im: &DMatrix<T>) -> CMatrix<T> {
    re.zip_map(im, |r, i| cplx(r, i))
}

fn is_real<T: Real>(a: &CMatrix<T>) -> bool {
    a.iter().all(|z| z.im == T::zero())
}

/// `a · b` through real matrix products.
pub fn cmul<T: Real>(a: &CMatrix<T>, b: &CMatrix<T>) -> CMatrix<T> {
    let (ar, ai) = split(a);
    let (br, bi) = split(b);
    let a_real = ai.iter().all(|v| *v == T::zero());
    let b_real = bi.iter().all(|v| *v == T::zero());
    match (a_real, b_real) {
        (true, true) => (&ar * &br).map(c_real),
        (true, false) => join(&(&ar * &br), &(&ar * &bi)),
        (false, true) => join(&(&ar * &br), &(&ai * &br)),
        (false, false) => {
            let re = &ar * &br - &ai * &bi;
            let im = &ar * &bi + &ai * &br;
            join(&re, &im)
        }
    }
}

/// `real · complex`.
pub fn rcmul<T: Real>(a: &DMatrix<T>, b: &CMatrix<T>) -> CMatrix<T> {
    let (br, bi) = split(b);
    join(&(a * &br), &(a * &bi))
}

/// `complex · real`.
pub fn crmul<T: Real>(a: &CMatrix<T>, b: &DMatrix<T>) -> CMatrix<T> {
    let (ar, ai) = split(a);
    join(&(&ar * b), &(&ai * b))
}

pub fn adjoint<T: Real>(a: &CMatrix<T>) -> CMatrix<T> {
    a.adjoint()
}

pub fn frobenius<T: Real>(a: &CMatrix<T>) -> T {
    a.iter().fold(T::zero(), |s, z| s + z.norm_sqr()).sqrt()
}

pub fn max_abs_entry<T: Real>(a: &CMatrix<T>) -> T {
    a.iter().fold(T::zero(), |m, z| m.max(c_abs(*z)))
}

#[derive(Debug, Clone)]
pub enum Eigenvectors<T: Real> {
    Real(DMatrix<T>),
    Complex(CMatrix<T>),
}

/// Spectral decomposition `A = V diag(values) V†` of a Hermitian matrix, ascending values.
#[derive(Debug, Clone)]
pub struct HermitianEigen<T: Real> {
    pub values: Vec<T>,
    pub vectors: Eigenvectors<T>,
}

impl<T: Real> HermitianEigen<T> {
    pub fn new(a: &CMatrix<T>) -> Self {
        let (values, vectors) = if is_real(a) {
            let e = SymmetricEigen::new(a.map(|z| z.re));
            (e.eigenvalues.iter().copied().collect::<Vec<_>>(), Eigenvectors::Real(e.eigenvectors))
        } else {
            let e = SymmetricEigen::new(a.clone());
            (e.eigenvalues.iter().copied().collect::<Vec<_>>(), Eigenvectors::Complex(e.eigenvectors))
        };
        let mut order: Vec<usize> = (0..values.len()).collect();
        order.sort_by(|&i, &j| values[i].partial_cmp(&values[j]).unwrap_or(std::cmp::Ordering::Equal));
        let values = order.iter().map(|&i| values[i]).collect();
        let vectors = match vectors {
            Eigenvectors::Real(v) => Eigenvectors::Real(v.select_columns(order.iter())),
            Eigenvectors::Complex(v) => Eigenvectors::Complex(v.select_columns(order.iter())),
        };
        Self { values, vectors }
    }

    pub fn dim(&self) -> usize {
        self.values.len()
    }

    pub fn vectors_complex(&self) -> CMatrix<T> {
        match &self.vectors {
            Eigenvectors::Real(v) => v.map(c_real),
            Eigenvectors::Complex(v) => v.clone(),
        }
    }

    /// `V† A V`.
    pub fn to_eigenbasis(&self, a: &CMatrix<T>) -> CMatrix<T> {
        match &self.vectors {
            Eigenvectors::Real(v) => rcmul(&v.transpose(), &crmul(a, v)),
            Eigenvectors::Complex(v) => cmul(&v.adjoint(), &cmul(a, v)),
        }
    }

    /// `V A V†`.
    pub fn from_eigenbasis(&self, a: &CMatrix<T>) -> CMatrix<T> {
        match &self.vectors {
            Eigenvectors::Real(v) => rcmul(v, &crmul(a, &v.transpose())),
            Eigenvectors::Complex(v) => cmul(v, &cmul(a, &v.adjoint())),
        }
    }

    /// `V f(Λ) V†`.
    pub fn map_spectrum(&self, f: impl Fn(T) -> C<T>) -> CMatrix<T> {
        let fv: Vec<C<T>> = self.values.iter().map(|&x| f(x)).collect();
        self.with_diagonal(&fv)
    }

    /// `V diag(fv) V†`.
    pub fn with_diagonal(&self, fv: &[C<T>]) -> CMatrix<T> {
        match &self.vectors {
            Eigenvectors::Real(v) => {
                let fr: Vec<T> = fv.iter().map(|z| z.re).collect();
                let fi: Vec<T> = fv.iter().map(|z| z.im).collect();
                let vt = v.transpose();
                let scaled = |w: &[T]| {
                    let mut m = v.clone();
                    for (j, mut col) in m.column_iter_mut().enumerate() {
                        col *= w[j];
                    }
                    &m * &vt
                };
                let re = scaled(&fr);
                if fi.iter().all(|x| *x == T::zero()) {
                    re.map(c_real)
                } else {
                    join(&re, &scaled(&fi))
                }
            }
            Eigenvectors::Complex(v) => {
                let mut m = v.clone();
                for (j, mut col) in m.column_iter_mut().enumerate() {
                    col *= fv[j];
                }
                cmul(&m, &v.adjoint())
            }
        }
    }

    /// `V diag(d) V† x` for a vector.
    pub fn apply_diag(&self, d: &[C<T>], x: &DVector<C<T>>) -> DVector<C<T>> {
        match &self.vectors {
            Eigenvectors::Real(v) => {
                let xr = x.map(|z| z.re);
                let xi = x.map(|z| z.im);
                let yr = v.tr_mul(&xr);
                let yi = v.tr_mul(&xi);
                let y = DVector::from_iterator(d.len(), (0..d.len()).map(|k| cplx(yr[k], yi[k]) * d[k]));
                let zr = v * y.map(|z| z.re);
                let zi = v * y.map(|z| z.im);
                zr.zip_map(&zi, |a, b| cplx(a, b))
            }
            Eigenvectors::Complex(v) => {
                let mut y = v.ad_mul(x);
                for (k, yk) in y.iter_mut().enumerate() {
                    *yk *= d[k];
                }
                v * y
            }
        }
    }
}

/// Largest singular value by dense eigendecomposition (eigenvalues only).
pub fn spectral_norm_dense<T: Real>(a: &CMatrix<T>) -> T {
    if a.nrows() == 0 {
        return T::zero();
    }
    let tol = T::lit(64.0) * T::default_epsilon() * max_abs_entry(a);
    let herm = is_hermitian(a, tol);
    let anti = !herm && is_hermitian(&a.map(|z| cplx(-z.im, z.re)), tol);
    if herm || anti {
        let m = if herm { a.clone() } else { a.map(|z| cplx(-z.im, z.re)) };
        hermitian_eigenvalues(&m).iter().fold(T::zero(), |s, v| s.max(v.abs()))
    } else {
        let g = cmul(&a.adjoint(), a);
        hermitian_eigenvalues(&g).iter().fold(T::zero(), |s, v| s.max(*v)).max(T::zero()).sqrt()
    }
}

/// `U = V diag(z) V†` for a unitary `U`, from the complex Schur form.
#[derive(Debug, Clone)]
pub struct UnitaryEigen<T: Real> {
    /// Eigenvalues, renormalized onto the unit circle.
    pub values: Vec<C<T>>,
    pub vectors: CMatrix<T>,
    /// Largest off-diagonal modulus left in the triangular factor.
    pub residual: T,
}

impl<T: Real> UnitaryEigen<T> {
    pub fn new(u: &CMatrix<T>) -> Result<Self> {
        let n = u.nrows();
        let schur =
            nalgebra::Schur::try_new(u.clone(), T::default_epsilon(), 10_000).ok_or_else(|| Error::Accuracy {
                what: "Schur decomposition of a unitary did not converge".into(),
                estimate: f64::INFINITY,
            })?;
        let (q, t) = schur.unpack();
        let mut residual = T::zero();
        for i in 0..n {
            for j in i + 1..n {
                residual = residual.max(c_abs(t[(i, j)]));
            }
        }
        let values = (0..n)
            .map(|i| {
                let z = t[(i, i)];
                z / c_real(c_abs(z))
            })
            .collect();
        Ok(Self { values, vectors: q, residual })
    }

    /// `V† A V`.
    pub fn to_eigenbasis(&self, a: &CMatrix<T>) -> CMatrix<T> {
        cmul(&self.vectors.adjoint(), &cmul(a, &self.vectors))
    }
}

/// Eigenvalues of a Hermitian matrix, unsorted; uses the real path when possible.
pub fn hermitian_eigenvalues<T: Real>(a: &CMatrix<T>) -> Vec<T> {
    if is_real(a) {
        a.map(|z| z.re).symmetric_eigenvalues().iter().copied().collect()
    } else {
        a.symmetric_eigenvalues().iter().copied().collect()
    }
}

pub fn is_hermitian<T: Real>(a: &CMatrix<T>, tol: T) -> bool {
    let n = a.nrows();
    if n != a.ncols() {
        return false;
    }
    for i in 0..n {
        for j in 0..=i {
            if c_abs(a[(i, j)] - a[(j, i)].conj()) > tol {
                return false;
            }
        }
    }
    true
}

/// Extreme eigenvalues of a Hermitian operator given as a matvec, by Lanczos with full
/// reorthogonalization. Returns `(min, max)`.
pub fn lanczos_extremes<T: Real>(
    dim: usize,
    mut matvec: impl FnMut(&DVector<C<T>>) -> DVector<C<T>>,
    rel_tol: T,
    seed: u64,
) -> Result<(T, T)> {
    if dim == 0 {
        return Ok((T::zero(), T::zero()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut q = DVector::from_iterator(
        dim,
        (0..dim).map(|_| cplx(T::lit(rng.gen::<f64>() - 0.5), T::lit(rng.gen::<f64>() - 0.5))),
    );
    q /= c_real(q.norm());
    let mut basis: Vec<DVector<C<T>>> = Vec::new();
    let mut alphas: Vec<T> = Vec::new();
    let mut betas: Vec<T> = Vec::new();
    let mut prev: Option<(T, T)> = None;
    let max_iter = dim.min(400);
    for it in 0..max_iter {
        let mut w = matvec(&q);
        let a = q.dotc(&w).re;
        basis.push(q.clone());
        alphas.push(a);
        // Two passes of Gram-Schmidt keep the basis orthogonal to working precision.
        for _ in 0..2 {
            for b in &basis {
                let proj = b.dotc(&w);
                w.axpy(-proj, b, c_real(T::one()));
            }
        }
        let beta = w.norm();
        let (lo, hi) = tridiagonal_extremes(&alphas, &betas);
        let scale = lo.abs().max(hi.abs()).max(T::lit(1e-300));
        let done = beta <= scale * T::lit(1e-14) || it + 1 == dim;
        if let Some((plo, phi)) = prev {
            if ((lo - plo).abs() + (hi - phi).abs()) <= rel_tol * scale && it >= 3 {
                return Ok((lo, hi));
            }
        }
        if done {
            return Ok((lo, hi));
        }
        prev = Some((lo, hi));
        betas.push(beta);
        q = w / c_real(beta);
    }
    Err(Error::Accuracy {
        what: format!("Lanczos did not converge in {max_iter} iterations"),
        estimate: prev.map(|p| p.1.as_f64()).unwrap_or(f64::NAN),
    })
}

fn tridiagonal_extremes<T: Real>(alphas: &[T], betas: &[T]) -> (T, T) {
    let n = alphas.len();
    let mut m = DMatrix::<T>::zeros(n, n);
    for i in 0..n {
        m[(i, i)] = alphas[i];
        if i + 1 < n {
            m[(i, i + 1)] = betas[i];
            m[(i + 1, i)] = betas[i];
        }
    }
    let e = SymmetricEigen::new(m);
    let lo = e.eigenvalues.iter().copied().fold(e.eigenvalues[0], |a, b| a.min(b));
    let hi = e.eigenvalues.iter().copied().fold(e.eigenvalues[0], |a, b| a.max(b));
    (lo, hi)
}

/// Spectral norm of a Hermitian (or anti-Hermitian, flagged) matvec operator.
pub fn lanczos_norm<T: Real>(
    dim: usize,
    mut matvec: impl FnMut(&DVector<C<T>>) -> DVector<C<T>>,
    anti_hermitian: bool,
    rel_tol: T,
    seed: u64,
) -> Result<T> {
    let (lo, hi) = if anti_hermitian {
        lanczos_extremes(dim, |v| matvec(v).map(|z| cplx(-z.im, z.re)), rel_tol, seed)?
    } else {
        lanczos_extremes(dim, matvec, rel_tol, seed)?
    };
    Ok(lo.abs().max(hi.abs()))
}

pub fn zero_vector<T: Real>(dim: usize) -> DVector<C<T>> {
    DVector::from_element(dim, c_zero())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn random_matrix(n: usize, seed: u64) -> CMatrix<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        CMatrix::from_fn(n, n, |_, _| cplx(rng.gen::<f64>() - 0.5, rng.gen::<f64>() - 0.5))
    }

    #[test]
    fn unitary_eigen_reconstructs() {
        let h = random_matrix(12, 5);
        let h = (&h + h.adjoint()) * cplx(0.5, 0.0);
        let e = HermitianEigen::new(&h);
        // Doubly degenerate spectrum on top of a generic one.
        let u = e.map_spectrum(|x| crate::scalar::c_phase(if x > 0.0 { 1.0 } else { x }));
        let ue = UnitaryEigen::new(&u).unwrap();
        let d: Vec<C<f64>> = ue.values.clone();
        let rebuilt = cmul(&ue.vectors, &cmul(&CMatrix::from_diagonal(&DVector::from_vec(d)), &ue.vectors.adjoint()));
        assert!(frobenius(&(rebuilt - &u)) < 1e-12);
        assert!(ue.residual < 1e-12);
        let vv = cmul(&ue.vectors.adjoint(), &ue.vectors) - CMatrix::<f64>::identity(12, 12);
        assert!(frobenius(&vv) < 1e-12);
    }

    #[test]
    fn split_product_matches_native() {
        let a = random_matrix(7, 1);
        let b = random_matrix(7, 2);
        let d = cmul(&a, &b) - &a * &b;
        assert!(max_abs_entry(&d) < 1e-13);
    }

    #[test]
    fn hermitian_eigen_reconstructs() {
        let a = random_matrix(6, 3);
        let h = &a + a.adjoint();
        let e = HermitianEigen::new(&h);
        let back = e.map_spectrum(c_real);
        assert!(max_abs_entry(&(back - &h)) < 1e-12);
        assert!(e.values.windows(2).all(|w| w[0] <= w[1]));
        let diag = e.to_eigenbasis(&h);
        for i in 0..6 {
            assert!((diag[(i, i)].re - e.values[i]).abs() < 1e-12);
        }
    }

    #[test]
    fn lanczos_matches_dense() {
        let a = random_matrix(40, 4);
        let h = &a + a.adjoint();
        let dense = spectral_norm_dense(&h);
        let lz = lanczos_norm(40, |v| &h * v, false, 1e-13, 9).unwrap();
        assert!((dense - lz).abs() < 1e-10 * dense);
    }

    #[test]
    fn non_normal_norm() {
        // [[0, 2], [0, 0]] has norm 2 and zero eigenvalues.
        let mut m = CMatrix::<f64>::zeros(2, 2);
        m[(0, 1)] = cplx(2.0, 0.0);
        assert!((spectral_norm_dense(&m) - 2.0).abs() < 1e-14);
    }
}
