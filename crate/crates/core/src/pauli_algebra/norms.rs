use super::sum::OperatorSum;
use crate::error::{resource, Result};
use crate::exact_backend::linalg::{lanczos_norm, spectral_norm_dense};
use crate::exact_backend::{to_matrix, PauliAction, MAX_DENSE_SITES};
use crate::lattice_ops::SiteSet;
use crate::scalar::Real;
use std::collections::BTreeMap;

/// Largest support for which `‖h_X‖` is computed exactly.
pub const EXACT_TERM_SUPPORT: usize = 8;

/// Largest dimension handled by full diagonalization before switching to Lanczos.
const DENSE_NORM_SITES: usize = 9;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NormMethod {
    /// Largest singular value.
    Exact,
    /// Σ |coefficients|.
    Upper,
}

/// `‖H‖_l = sup_i Σ_{X∋i} ‖h_X‖`; `exact` is false if any group used the coefficient bound.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LocalNorm<T> {
    pub value: T,
    pub exact: bool,
}

/// Support-grouped norms `‖h_X‖` keyed by support mask.
#[derive(Debug, Clone, PartialEq)]
pub struct SupportNorms<T> {
    pub norms: BTreeMap<u64, T>,
    pub exact: bool,
}

impl<T: Real> SupportNorms<T> {
    pub fn of(h: &OperatorSum<T>) -> Result<Self> {
        let mut norms = BTreeMap::new();
        let mut exact = true;
        for (mask, group) in h.group_by_support() {
            let n = if mask.count_ones() as usize <= EXACT_TERM_SUPPORT {
                operator_norm(&group, NormMethod::Exact)?
            } else {
                exact = false;
                group.coefficient_l1()
            };
            norms.insert(mask, n);
        }
        Ok(Self { norms, exact })
    }

    /// Σ over several operators of their support-grouped norms (triangle inequality).
    pub fn sum_of<'a>(ops: impl IntoIterator<Item = &'a OperatorSum<T>>) -> Result<Self> {
        let mut out = Self { norms: BTreeMap::new(), exact: true };
        for h in ops {
            let s = Self::of(h)?;
            out.exact &= s.exact;
            for (m, v) in s.norms {
                *out.norms.entry(m).or_insert_with(T::zero) += v;
            }
        }
        Ok(out)
    }

    pub fn local_norm(&self) -> LocalNorm<T> {
        let mut per_site: BTreeMap<usize, T> = BTreeMap::new();
        for (&mask, &v) in &self.norms {
            for s in SiteSet::from_mask(mask).iter() {
                *per_site.entry(*s).or_insert_with(T::zero) += v;
            }
        }
        LocalNorm { value: per_site.values().fold(T::zero(), |m, v| m.max(*v)), exact: self.exact }
    }
}

pub fn local_norm<T: Real>(h: &OperatorSum<T>) -> Result<LocalNorm<T>> {
    Ok(SupportNorms::of(h)?.local_norm())
}

/// Operator norm on the joint support of `a`.
pub fn operator_norm<T: Real>(a: &OperatorSum<T>, method: NormMethod) -> Result<T> {
    if a.is_zero() {
        return Ok(T::zero());
    }
    if method == NormMethod::Upper {
        return Ok(a.coefficient_l1());
    }
    if a.len() == 1 {
        return Ok(crate::scalar::c_abs(a.terms()[0].1));
    }
    let sites: Vec<usize> = SiteSet::from_mask(a.support_mask()).as_slice().to_vec();
    if sites.len() > MAX_DENSE_SITES {
        return Err(resource(format!("exact norm needs {} sites, cap is {MAX_DENSE_SITES}", sites.len())));
    }
    let tol = T::lit(1e-14);
    let herm = a.is_hermitian(T::zero());
    let anti = a.is_anti_hermitian(T::zero());
    if sites.len() <= DENSE_NORM_SITES || !(herm || anti) {
        return Ok(spectral_norm_dense(&to_matrix(a, &sites)?.matrix));
    }
    let act = PauliAction::new(a, &sites)?;
    lanczos_norm(act.dim(), |v| act.apply(v), anti, tol, 0x5eed)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pauli_algebra::PauliString;
    use crate::scalar::{c_real, cplx};

    fn op(s: &str, c: f64) -> OperatorSum<f64> {
        OperatorSum::term(c_real(c), PauliString::parse(s).unwrap())
    }

    #[test]
    fn local_norm_examples() {
        let chain = (0..5).fold(OperatorSum::zero(), |acc, i| &acc + &op(&format!("X{i} X{}", i + 1), 1.0));
        assert!((local_norm(&chain).unwrap().value - 2.0).abs() < 1e-14);
        assert!((local_norm(&op("Z0", 3.0)).unwrap().value - 3.0).abs() < 1e-14);
        let xy = &op("X0 X1", 1.0) + &op("Y0 Y1", 1.0);
        let ln = local_norm(&xy).unwrap();
        assert!((ln.value - 2.0).abs() < 1e-13 && ln.exact);
    }

    #[test]
    fn operator_norm_examples() {
        assert_eq!(operator_norm(&op("Y3", 1.0), NormMethod::Exact).unwrap(), 1.0);
        assert_eq!(operator_norm(&op("Y3", 1.0), NormMethod::Upper).unwrap(), 1.0);
        let xz = &op("X0", 1.0) + &op("Z0", 1.0);
        assert!((operator_norm(&xz, NormMethod::Exact).unwrap() - 2f64.sqrt()).abs() < 1e-14);
        assert_eq!(operator_norm(&xz, NormMethod::Upper).unwrap(), 2.0);
        assert_eq!(operator_norm(&OperatorSum::<f64>::zero(), NormMethod::Exact).unwrap(), 0.0);
    }

    #[test]
    fn lanczos_path_matches_dense() {
        // Open XX chain plus field on 11 sites exercises the matrix-free branch.
        let mut h = OperatorSum::zero();
        for i in 0..10 {
            h = &h + &op(&format!("X{i} X{}", i + 1), 1.0);
            h = &h + &op(&format!("Z{i}"), 0.3 + 0.05 * i as f64);
        }
        let lz = operator_norm(&h, NormMethod::Exact).unwrap();
        let sites: Vec<usize> = (0..11).collect();
        let dense = spectral_norm_dense(&to_matrix(&h, &sites).unwrap().matrix);
        assert!((lz - dense).abs() < 1e-9 * dense, "{lz} vs {dense}");
        let anti = h.scale(cplx(0.0, 1.0));
        assert!((operator_norm(&anti, NormMethod::Exact).unwrap() - dense).abs() < 1e-9 * dense);
    }

    #[test]
    fn norm_cap() {
        let wide = op("X0 X15", 1.0);
        assert_eq!(operator_norm(&wide, NormMethod::Exact).unwrap(), 1.0);
        let two = &wide + &op("Z7", 1.0);
        assert!(operator_norm(&two, NormMethod::Exact).is_ok());
        let far = &two + &op("X1 X2 X3 X4 X5 X6 X8 X9 X10 X11 X12 X13", 1.0);
        assert!(operator_norm(&far, NormMethod::Exact).is_err());
    }
}
