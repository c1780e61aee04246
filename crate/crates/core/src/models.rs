//! Named Hamiltonian families used by the benchmarks and the CLI.

use crate::error::{domain, Result};
use crate::lattice_ops::Lattice;
use crate::magnus_engine::fourier_support_norms;
use crate::pauli_algebra::{certificate_from_norms, OperatorSum, Pauli, PauliString, PowerLawSpec, SupportNorms};
use crate::scalar::{c_real, Real};
use crate::time_periodic::FourierOperator;

/// `H₀ = J Σ_{i<j} dist(i,j)^{−α} Z_iZ_j + h_x Σ X_i + h_z Σ Z_i`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PowerLawIsing<T> {
    pub alpha: T,
    pub j: T,
    pub hx: T,
    pub hz: T,
}

impl<T: Real> PowerLawIsing<T> {
    /// Benchmark couplings: `J = 1`, `h_x = h_z = 1/2`.
    pub fn benchmark(alpha: T) -> Self {
        Self { alpha, j: T::one(), hx: T::lit(0.5), hz: T::lit(0.5) }
    }

    pub fn hamiltonian(&self, lattice: &Lattice) -> Result<OperatorSum<T>> {
        let n = lattice.num_sites();
        if n > crate::pauli_algebra::MAX_SITES {
            return Err(domain(format!("{n} sites exceed the Pauli string width")));
        }
        let mut terms = Vec::new();
        for i in 0..n {
            for k in i + 1..n {
                let d: T = lattice.distance(i, k)?;
                let s = PauliString::from_letters([(i, Pauli::Z), (k, Pauli::Z)])?;
                terms.push((s, c_real(self.j * d.powf(-self.alpha))));
            }
            terms.push((PauliString::single(i, Pauli::X)?, c_real(self.hx)));
            terms.push((PauliString::single(i, Pauli::Z)?, c_real(self.hz)));
        }
        Ok(OperatorSum::from_terms(terms))
    }
}

/// `Σ_i P_i` over every site.
pub fn uniform_field<T: Real>(lattice: &Lattice, p: Pauli) -> Result<OperatorSum<T>> {
    let terms = (0..lattice.num_sites())
        .map(|i| Ok((PauliString::single(i, p)?, c_real(T::one()))))
        .collect::<Result<Vec<_>>>()?;
    Ok(OperatorSum::from_terms(terms))
}

/// `H(t) = H₀ + g cos(ωt) Σ_i X_i`.
pub fn transverse_drive<T: Real>(h0: &OperatorSum<T>, lattice: &Lattice, g: T, omega: T) -> Result<FourierOperator<T>> {
    if omega <= T::zero() {
        return Err(domain("drive frequency must be positive"));
    }
    FourierOperator::constant(h0.clone(), omega).add(&FourierOperator::cosine(
        g,
        &uniform_field(lattice, Pauli::X)?,
        omega,
    ))
}

/// Smallest `η` with `H(t) ∈ H_α` (harmonics summed, so valid for every `t`), at least 1.
pub fn minimal_eta<T: Real>(h: &FourierOperator<T>, lattice: &Lattice, alpha: T, k: usize) -> Result<T> {
    let norms = fourier_support_norms(h)?;
    let spec = PowerLawSpec::new(alpha, T::one(), lattice.dimension(), k)?;
    Ok(certificate_from_norms(&norms, lattice, &spec, T::one())?.required_prefactor().max(T::one()))
}

/// As [`minimal_eta`] for a static operator.
pub fn minimal_eta_static<T: Real>(h: &OperatorSum<T>, lattice: &Lattice, alpha: T, k: usize) -> Result<T> {
    let spec = PowerLawSpec::new(alpha, T::one(), lattice.dimension(), k)?;
    Ok(certificate_from_norms(&SupportNorms::of(h)?, lattice, &spec, T::one())?.required_prefactor().max(T::one()))
}
