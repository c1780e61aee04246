//! Dense reference backend: Kronecker realizations, thermal states, propagators.
//!
//! Site `sites[0]` is the leftmost Kronecker factor, i.e. the most significant bit
//! of the computational-basis index.

pub mod linalg;

use crate::error::{domain, resource, Error, Result};
use crate::pauli_algebra::OperatorSum;
use crate::scalar::{c_abs, c_phase, c_real, c_zero, i_pow, Real, C};
use crate::time_periodic::FourierOperator;
use linalg::{cmul, frobenius, CMatrix, HermitianEigen};
use nalgebra::DVector;

/// Largest number of sites realized densely.
pub const MAX_DENSE_SITES: usize = 14;

/// Matrix together with the ordered lattice sites it acts on.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseOperator<T: Real> {
    pub matrix: CMatrix<T>,
    pub sites: Vec<usize>,
}

impl<T: Real> DenseOperator<T> {
    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn is_hermitian(&self, tol: T) -> bool {
        linalg::is_hermitian(&self.matrix, tol)
    }

    /// `‖U†U − 1‖_F`.
    pub fn unitarity_defect(&self) -> T {
        let n = self.dim();
        let g = cmul(&self.matrix.adjoint(), &self.matrix) - CMatrix::<T>::identity(n, n);
        frobenius(&g)
    }

    pub fn norm(&self) -> T {
        linalg::spectral_norm_dense(&self.matrix)
    }

    pub fn trace(&self) -> C<T> {
        self.matrix.trace()
    }
}

fn check_sites(sites: &[usize]) -> Result<()> {
    if sites.len() > MAX_DENSE_SITES {
        return Err(resource(format!("{} sites exceed the dense cap of {MAX_DENSE_SITES}", sites.len())));
    }
    let mut sorted = sites.to_vec();
    sorted.sort_unstable();
    sorted.dedup();
    if sorted.len() != sites.len() {
        return Err(domain("site list contains duplicates"));
    }
    Ok(())
}

/// Per-term basis-bit masks `(x, z, coefficient · i^{|x∧z|})` relative to `sites`.
fn local_terms<T: Real>(a: &OperatorSum<T>, sites: &[usize]) -> Result<Vec<(usize, usize, C<T>)>> {
    let n = sites.len();
    let mut out = Vec::with_capacity(a.len());
    for &(s, c) in a.terms() {
        let (mut xb, mut zb) = (0usize, 0usize);
        let mut covered = 0u64;
        for (pos, &site) in sites.iter().enumerate() {
            if site >= 64 {
                continue;
            }
            let bit = 1usize << (n - 1 - pos);
            if s.x_mask() >> site & 1 == 1 {
                xb |= bit;
            }
            if s.z_mask() >> site & 1 == 1 {
                zb |= bit;
            }
            covered |= 1u64 << site;
        }
        if s.support_mask() & !covered != 0 {
            return Err(domain(format!("term [{s}] acts outside the realized sites")));
        }
        let y = (xb & zb).count_ones() as u8;
        out.push((xb, zb, c * i_pow::<T>(y)));
    }
    Ok(out)
}

fn parity_sign<T: Real>(z: usize, b: usize) -> T {
    if (z & b).count_ones().is_multiple_of(2) {
        T::one()
    } else {
        -T::one()
    }
}

/// Kronecker realization of `a` on the ordered `sites`.
pub fn to_matrix<T: Real>(a: &OperatorSum<T>, sites: &[usize]) -> Result<DenseOperator<T>> {
    check_sites(sites)?;
    let dim = 1usize << sites.len();
    let mut m = CMatrix::<T>::zeros(dim, dim);
    for (xb, zb, c) in local_terms(a, sites)? {
        for b in 0..dim {
            m[(b ^ xb, b)] += c * parity_sign::<T>(zb, b);
        }
    }
    Ok(DenseOperator { matrix: m, sites: sites.to_vec() })
}

/// Realization on sites `0..n`.
pub fn to_matrix_n<T: Real>(a: &OperatorSum<T>, n: usize) -> Result<DenseOperator<T>> {
    let sites: Vec<usize> = (0..n).collect();
    to_matrix(a, &sites)
}

/// Matrix-free action of `a` on a state vector over `sites`.
pub struct PauliAction<T: Real> {
    terms: Vec<(usize, usize, C<T>)>,
    dim: usize,
}

impl<T: Real> PauliAction<T> {
    pub fn new(a: &OperatorSum<T>, sites: &[usize]) -> Result<Self> {
        if sites.len() > 30 {
            return Err(resource("matrix-free action limited to 30 sites"));
        }
        Ok(Self { terms: local_terms(a, sites)?, dim: 1usize << sites.len() })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn apply(&self, v: &DVector<C<T>>) -> DVector<C<T>> {
        let mut out = DVector::from_element(self.dim, c_zero());
        for &(xb, zb, c) in &self.terms {
            for b in 0..self.dim {
                let amp = v[b];
                if amp.re == T::zero() && amp.im == T::zero() {
                    continue;
                }
                out[b ^ xb] += c * amp * parity_sign::<T>(zb, b);
            }
        }
        out
    }
}

/// Time-periodic operator with each harmonic realized densely.
#[derive(Debug, Clone)]
pub struct DenseFourier<T: Real> {
    pub omega: T,
    pub harmonics: Vec<(i32, CMatrix<T>)>,
    pub sites: Vec<usize>,
}

impl<T: Real> DenseFourier<T> {
    pub fn new(h: &FourierOperator<T>, sites: &[usize]) -> Result<Self> {
        let harmonics =
            h.harmonics().iter().map(|(&m, op)| Ok((m, to_matrix(op, sites)?.matrix))).collect::<Result<Vec<_>>>()?;
        Ok(Self { omega: h.omega(), harmonics, sites: sites.to_vec() })
    }

    pub fn dim(&self) -> usize {
        1usize << self.sites.len()
    }

    /// `Σ_k w_k H(t_k)`, with imaginary round-off of Hermitian combinations removed.
    pub fn weighted(&self, points: &[(T, T)]) -> CMatrix<T> {
        let n = self.dim();
        let mut out = CMatrix::<T>::zeros(n, n);
        for (m, mat) in &self.harmonics {
            let coef = points
                .iter()
                .fold(c_zero::<T>(), |acc, &(w, t)| acc + c_phase(T::from_i32(*m).unwrap() * self.omega * t) * w);
            out += mat * coef;
        }
        let scale = linalg::max_abs_entry(&out).max(T::one());
        let tiny = T::lit(64.0) * T::default_epsilon() * scale;
        if out.iter().all(|z| z.im.abs() <= tiny) {
            out.iter_mut().for_each(|z| z.im = T::zero());
        }
        out
    }

    pub fn at(&self, t: T) -> CMatrix<T> {
        self.weighted(&[(T::one(), t)])
    }

    pub fn is_static(&self) -> bool {
        self.harmonics.iter().all(|(m, _)| *m == 0)
    }
}

fn exp_minus_i<T: Real>(a: &CMatrix<T>, dt: T) -> CMatrix<T> {
    let e = HermitianEigen::new(a);
    e.map_spectrum(|x| c_phase(-dt * x))
}

/// Fourth-order commutator-free propagator from `t0` to `t1` with `steps` uniform steps.
pub fn propagate_fixed<T: Real>(h: &DenseFourier<T>, t0: T, t1: T, steps: usize) -> CMatrix<T> {
    let n = h.dim();
    if h.is_static() {
        let a = h.at(t0);
        return exp_minus_i(&a, t1 - t0);
    }
    let sqrt3 = T::lit(3.0).sqrt();
    let (a1, a2) = (T::lit(0.25) + sqrt3 / T::lit(6.0), T::lit(0.25) - sqrt3 / T::lit(6.0));
    let (c1, c2) = (T::lit(0.5) - sqrt3 / T::lit(6.0), T::lit(0.5) + sqrt3 / T::lit(6.0));
    let dt = (t1 - t0) / T::from_usize_lossy(steps);
    let mut u = CMatrix::<T>::identity(n, n);
    for s in 0..steps {
        let t = t0 + dt * T::from_usize_lossy(s);
        let (ta, tb) = (t + c1 * dt, t + c2 * dt);
        let a = h.weighted(&[(a1, ta), (a2, tb)]);
        let b = h.weighted(&[(a2, ta), (a1, tb)]);
        let step = cmul(&exp_minus_i(&b, dt), &exp_minus_i(&a, dt));
        u = cmul(&step, &u);
    }
    u
}

/// Propagator over one period with its step-doubling convergence record.
#[derive(Debug, Clone)]
pub struct FloquetPropagator<T: Real> {
    pub unitary: DenseOperator<T>,
    pub period: T,
    pub stepper_order: usize,
    pub steps_per_period: usize,
    pub convergence_estimate: T,
}

pub const STEP_CAP: usize = 1 << 14;

/// Doubles the step count from `steps` until successive results agree to `tol` (Frobenius).
pub fn propagate_converged<T: Real>(
    h: &DenseFourier<T>,
    t0: T,
    t1: T,
    steps: usize,
    tol: T,
) -> Result<(CMatrix<T>, usize, T)> {
    if steps < 4 {
        return Err(domain("at least 4 steps required"));
    }
    if h.is_static() {
        return Ok((propagate_fixed(h, t0, t1, 1), 1, T::zero()));
    }
    let mut s = steps;
    let mut prev = propagate_fixed(h, t0, t1, s);
    loop {
        if s * 2 > STEP_CAP {
            return Err(Error::Accuracy { what: format!("propagator not converged at {s} steps"), estimate: f64::NAN });
        }
        s *= 2;
        let cur = propagate_fixed(h, t0, t1, s);
        let est = frobenius(&(&cur - &prev));
        if est <= tol {
            return Ok((cur, s, est));
        }
        if s * 2 > STEP_CAP {
            return Err(Error::Accuracy {
                what: format!("propagator not converged at {s} steps"),
                estimate: est.as_f64(),
            });
        }
        prev = cur;
    }
}

pub const FLOQUET_TOLERANCE: f64 = 1e-8;

/// One-period propagator `U_F = T exp(−i∫₀^T H)` on sites `0..n_sites`.
pub fn floquet_propagator<T: Real>(
    h: &FourierOperator<T>,
    n_sites: usize,
    steps: usize,
) -> Result<FloquetPropagator<T>> {
    let sites: Vec<usize> = (0..n_sites).collect();
    let dense = DenseFourier::new(h, &sites)?;
    floquet_from_dense(&dense, steps)
}

pub fn floquet_from_dense<T: Real>(dense: &DenseFourier<T>, steps: usize) -> Result<FloquetPropagator<T>> {
    let period = T::two_pi() / dense.omega;
    let (u, s, est) = propagate_converged(dense, T::zero(), period, steps, T::lit(FLOQUET_TOLERANCE))?;
    Ok(FloquetPropagator {
        unitary: DenseOperator { matrix: u, sites: dense.sites.clone() },
        period,
        stepper_order: 4,
        steps_per_period: s,
        convergence_estimate: est,
    })
}

/// `e^{−βH₀}/Tr e^{−βH₀}` with the spectrum shifted by its minimum.
pub fn thermal_state<T: Real>(h0: &DenseOperator<T>, beta: T) -> DenseOperator<T> {
    let e = HermitianEigen::new(&h0.matrix);
    DenseOperator { matrix: thermal_from_eigen(&e, beta), sites: h0.sites.clone() }
}

pub fn boltzmann_weights<T: Real>(values: &[T], beta: T) -> Vec<T> {
    let emin = values.iter().copied().fold(values[0], |a, b| a.min(b));
    let w: Vec<T> = values.iter().map(|&x| (-beta * (x - emin)).exp()).collect();
    let z = w.iter().fold(T::zero(), |s, x| s + *x);
    w.into_iter().map(|x| x / z).collect()
}

pub fn thermal_from_eigen<T: Real>(e: &HermitianEigen<T>, beta: T) -> CMatrix<T> {
    let p: Vec<C<T>> = boltzmann_weights(&e.values, beta).into_iter().map(c_real).collect();
    e.with_diagonal(&p)
}

/// Hamiltonian for Heisenberg evolution: static or time-periodic.
pub enum Evolution<'a, T: Real> {
    Static(&'a OperatorSum<T>),
    Periodic(&'a FourierOperator<T>),
}

/// `U(t)† A U(t)` with `U(0) = 1`.
pub fn heisenberg_evolve<T: Real>(h: Evolution<'_, T>, a: &DenseOperator<T>, t: T) -> Result<DenseOperator<T>> {
    let u = match h {
        Evolution::Static(op) => {
            let hm = to_matrix(op, &a.sites)?;
            exp_minus_i(&hm.matrix, t)
        }
        Evolution::Periodic(f) => {
            let dense = DenseFourier::new(f, &a.sites)?;
            propagate_converged(&dense, T::zero(), t, 4, T::lit(FLOQUET_TOLERANCE))?.0
        }
    };
    Ok(DenseOperator { matrix: cmul(&u.adjoint(), &cmul(&a.matrix, &u)), sites: a.sites.clone() })
}

/// Largest-modulus difference of two operators, entrywise.
pub fn max_entry_difference<T: Real>(a: &CMatrix<T>, b: &CMatrix<T>) -> T {
    a.iter().zip(b.iter()).fold(T::zero(), |m, (x, y)| m.max(c_abs(*x - *y)))
}

/// Exact `e^{iHt} A e^{−iHt}` evaluator reusing one spectral decomposition of a static `H`.
pub struct StaticEvolver<T: Real> {
    eigen: HermitianEigen<T>,
}

impl<T: Real> StaticEvolver<T> {
    pub fn new(h: &DenseOperator<T>) -> Self {
        Self { eigen: HermitianEigen::new(&h.matrix) }
    }

    pub fn eigen(&self) -> &HermitianEigen<T> {
        &self.eigen
    }

    /// `A` expressed in the eigenbasis.
    pub fn to_eigenbasis(&self, a: &CMatrix<T>) -> CMatrix<T> {
        self.eigen.to_eigenbasis(a)
    }

    /// `A(t)` in the eigenbasis given `A` in the eigenbasis: entries pick up `e^{i(E_m − E_n)t}`.
    pub fn evolve_in_eigenbasis(&self, a_eig: &CMatrix<T>, t: T) -> CMatrix<T> {
        let e = &self.eigen.values;
        CMatrix::from_fn(a_eig.nrows(), a_eig.ncols(), |m, n| a_eig[(m, n)] * c_phase((e[m] - e[n]) * t))
    }

    pub fn from_eigenbasis(&self, a: &CMatrix<T>) -> CMatrix<T> {
        self.eigen.from_eigenbasis(a)
    }
}
