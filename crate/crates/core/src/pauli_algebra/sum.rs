use super::string::{Pauli, PauliString};
use crate::error::{resource, Result};
use crate::scalar::{c_abs, c_real, c_zero, i_pow, Real, C};
use rustc_hash::FxHashMap;
use std::collections::BTreeMap;
use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

/// Complex linear combination of Pauli strings in canonical form.
///
/// Strings are unique and sorted; coefficients with modulus at or below
/// [`Real::prune_tolerance`] are dropped.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct OperatorSum<T: Real> {
    terms: Vec<(PauliString, C<T>)>,
}

impl<T: Real> OperatorSum<T> {
    pub fn zero() -> Self {
        Self { terms: Vec::new() }
    }

    pub fn identity() -> Self {
        Self::term(c_real(T::one()), PauliString::IDENTITY)
    }

    pub fn term(coefficient: C<T>, string: PauliString) -> Self {
        Self::from_terms([(string, coefficient)])
    }

    /// Real multiple of a single-site Pauli.
    pub fn single(site: usize, p: Pauli, coefficient: T) -> Result<Self> {
        Ok(Self::term(c_real(coefficient), PauliString::single(site, p)?))
    }

    pub fn from_terms(terms: impl IntoIterator<Item = (PauliString, C<T>)>) -> Self {
        let mut acc: FxHashMap<PauliString, C<T>> = FxHashMap::default();
        for (s, c) in terms {
            *acc.entry(s).or_insert_with(c_zero) += c;
        }
        Self::from_map(acc)
    }

    fn from_map(acc: FxHashMap<PauliString, C<T>>) -> Self {
        let tol = T::prune_tolerance();
        let mut terms: Vec<_> = acc.into_iter().filter(|(_, c)| c_abs(*c) > tol).collect();
        terms.sort_unstable_by_key(|t| t.0);
        Self { terms }
    }

    pub fn terms(&self) -> &[(PauliString, C<T>)] {
        &self.terms
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn is_empty(&self) -> bool {
        self.is_zero()
    }

    pub fn coefficient(&self, s: &PauliString) -> C<T> {
        self.terms.binary_search_by(|t| t.0.cmp(s)).map(|i| self.terms[i].1).unwrap_or_else(|_| c_zero())
    }

    pub fn support_mask(&self) -> u64 {
        self.terms.iter().fold(0, |m, t| m | t.0.support_mask())
    }

    /// Number of sites needed to hold every string (highest site + 1).
    pub fn span(&self) -> usize {
        64 - self.support_mask().leading_zeros() as usize
    }

    pub fn max_support_size(&self) -> usize {
        self.terms.iter().map(|t| t.0.weight()).max().unwrap_or(0)
    }

    pub fn max_abs_coefficient(&self) -> T {
        self.terms.iter().fold(T::zero(), |m, t| m.max(c_abs(t.1)))
    }

    /// Σ |c|, an upper bound on the operator norm.
    pub fn coefficient_l1(&self) -> T {
        self.terms.iter().fold(T::zero(), |m, t| m + c_abs(t.1))
    }

    pub fn scale(&self, a: C<T>) -> Self {
        Self::from_terms(self.terms.iter().map(|&(s, c)| (s, c * a)))
    }

    pub fn scale_real(&self, a: T) -> Self {
        self.scale(c_real(a))
    }

    pub fn adjoint(&self) -> Self {
        Self { terms: self.terms.iter().map(|&(s, c)| (s, c.conj())).collect() }
    }

    /// Hermitian iff every coefficient is real (each string is Hermitian).
    pub fn is_hermitian(&self, tol: T) -> bool {
        self.terms.iter().all(|t| t.1.im.abs() <= tol)
    }

    pub fn is_anti_hermitian(&self, tol: T) -> bool {
        self.terms.iter().all(|t| t.1.re.abs() <= tol)
    }

    pub fn product(&self, other: &Self) -> Self {
        let mut acc: FxHashMap<PauliString, C<T>> = FxHashMap::default();
        for (a, ca) in &self.terms {
            for (b, cb) in &other.terms {
                let (k, s) = a.mul(b);
                *acc.entry(s).or_insert_with(c_zero) += *ca * *cb * i_pow::<T>(k);
            }
        }
        Self::from_map(acc)
    }

    /// `[self, other]`.
    pub fn commutator(&self, other: &Self) -> Self {
        let mut acc: FxHashMap<PauliString, C<T>> =
            FxHashMap::with_capacity_and_hasher(self.len().max(other.len()) * 4, Default::default());
        let two = c_real(T::lit(2.0));
        for (a, ca) in &self.terms {
            for (b, cb) in &other.terms {
                if a.commutes_with(b) {
                    continue;
                }
                let (k, s) = a.mul(b);
                *acc.entry(s).or_insert_with(c_zero) += two * *ca * *cb * i_pow::<T>(k);
            }
        }
        Self::from_map(acc)
    }

    /// Groups terms by exact support mask.
    pub fn group_by_support(&self) -> BTreeMap<u64, OperatorSum<T>> {
        let mut groups: BTreeMap<u64, Vec<(PauliString, C<T>)>> = BTreeMap::new();
        for &(s, c) in &self.terms {
            groups.entry(s.support_mask()).or_default().push((s, c));
        }
        groups.into_iter().map(|(m, terms)| (m, Self { terms })).collect()
    }

    /// Drops every term touching a site outside `mask`.
    pub fn restrict_to(&self, mask: u64) -> Self {
        Self { terms: self.terms.iter().filter(|t| t.0.support_mask() & !mask == 0).copied().collect() }
    }
}

/// `ad_H^k O`, failing once an intermediate result exceeds `term_cap` strings.
pub fn adjoint_power<T: Real>(
    h: &OperatorSum<T>,
    o: &OperatorSum<T>,
    k: usize,
    term_cap: usize,
) -> Result<OperatorSum<T>> {
    let mut cur = o.clone();
    for depth in 1..=k {
        cur = h.commutator(&cur);
        if cur.len() > term_cap {
            return Err(resource(format!(
                "adjoint power reached {} terms at depth {depth} of {k} (cap {term_cap})",
                cur.len()
            )));
        }
        if cur.is_zero() {
            break;
        }
    }
    Ok(cur)
}

impl<T: Real> Add for &OperatorSum<T> {
    type Output = OperatorSum<T>;
    fn add(self, rhs: Self) -> OperatorSum<T> {
        OperatorSum::from_terms(self.terms.iter().chain(rhs.terms.iter()).copied())
    }
}

impl<T: Real> Sub for &OperatorSum<T> {
    type Output = OperatorSum<T>;
    fn sub(self, rhs: Self) -> OperatorSum<T> {
        OperatorSum::from_terms(self.terms.iter().copied().chain(rhs.terms.iter().map(|&(s, c)| (s, -c))))
    }
}

impl<T: Real> Neg for &OperatorSum<T> {
    type Output = OperatorSum<T>;
    fn neg(self) -> OperatorSum<T> {
        OperatorSum { terms: self.terms.iter().map(|&(s, c)| (s, -c)).collect() }
    }
}

impl<T: Real> Mul<C<T>> for &OperatorSum<T> {
    type Output = OperatorSum<T>;
    fn mul(self, rhs: C<T>) -> OperatorSum<T> {
        self.scale(rhs)
    }
}

impl<T: Real> fmt::Display for OperatorSum<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return write!(f, "0");
        }
        for (n, (s, c)) in self.terms.iter().enumerate() {
            if n > 0 {
                write!(f, " + ")?;
            }
            write!(f, "({:e}{:+e}i)·[{}]", c.re, c.im, s)?;
        }
        Ok(())
    }
}
