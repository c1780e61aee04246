//! Finite Fourier series `F(t) = Σ_m e^{imωt} H_m` with operator coefficients.

use crate::error::{domain, Result};
use crate::pauli_algebra::OperatorSum;
use crate::scalar::{c_abs, c_phase, cplx, Real, C};
use std::collections::BTreeMap;

#[derive(Debug, Clone, PartialEq)]
pub struct FourierOperator<T: Real> {
    omega: T,
    harmonics: BTreeMap<i32, OperatorSum<T>>,
}

impl<T: Real> FourierOperator<T> {
    pub fn zero(omega: T) -> Self {
        Self { omega, harmonics: BTreeMap::new() }
    }

    pub fn new(omega: T, harmonics: impl IntoIterator<Item = (i32, OperatorSum<T>)>) -> Self {
        let mut f = Self::zero(omega);
        for (m, h) in harmonics {
            f.accumulate(m, &h);
        }
        f
    }

    pub fn constant(h: OperatorSum<T>, omega: T) -> Self {
        Self::new(omega, [(0, h)])
    }

    /// `g cos(ωt) O`.
    pub fn cosine(g: T, o: &OperatorSum<T>, omega: T) -> Self {
        let half = o.scale_real(g * T::lit(0.5));
        Self::new(omega, [(1, half.clone()), (-1, half)])
    }

    /// `g sin(ωt) O`.
    pub fn sine(g: T, o: &OperatorSum<T>, omega: T) -> Self {
        let c = cplx(T::zero(), -g * T::lit(0.5));
        Self::new(omega, [(1, o.scale(c)), (-1, o.scale(-c))])
    }

    fn accumulate(&mut self, m: i32, h: &OperatorSum<T>) {
        if h.is_zero() {
            return;
        }
        let sum = match self.harmonics.get(&m) {
            Some(prev) => prev + h,
            None => h.clone(),
        };
        if sum.is_zero() {
            self.harmonics.remove(&m);
        } else {
            self.harmonics.insert(m, sum);
        }
    }

    pub fn omega(&self) -> T {
        self.omega
    }

    pub fn period(&self) -> T {
        T::two_pi() / self.omega
    }

    pub fn harmonics(&self) -> &BTreeMap<i32, OperatorSum<T>> {
        &self.harmonics
    }

    pub fn harmonic(&self, m: i32) -> OperatorSum<T> {
        self.harmonics.get(&m).cloned().unwrap_or_default()
    }

    pub fn is_zero(&self) -> bool {
        self.harmonics.is_empty()
    }

    pub fn max_harmonic(&self) -> i32 {
        self.harmonics.keys().map(|m| m.abs()).max().unwrap_or(0)
    }

    pub fn term_count(&self) -> usize {
        self.harmonics.values().map(|h| h.len()).sum()
    }

    pub fn max_abs_coefficient(&self) -> T {
        self.harmonics.values().fold(T::zero(), |m, h| m.max(h.max_abs_coefficient()))
    }

    pub fn support_mask(&self) -> u64 {
        self.harmonics.values().fold(0, |m, h| m | h.support_mask())
    }

    pub fn max_support_size(&self) -> usize {
        self.harmonics.values().map(|h| h.max_support_size()).max().unwrap_or(0)
    }

    fn check_omega(&self, other: &Self) -> Result<()> {
        if self.omega == other.omega || self.is_zero() || other.is_zero() {
            Ok(())
        } else {
            Err(domain(format!("drive frequencies differ: {} vs {}", self.omega, other.omega)))
        }
    }

    fn merged_omega(&self, other: &Self) -> T {
        if self.is_zero() {
            other.omega
        } else {
            self.omega
        }
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.check_omega(other)?;
        let mut out = self.clone();
        out.omega = self.merged_omega(other);
        for (&m, h) in &other.harmonics {
            out.accumulate(m, h);
        }
        Ok(out)
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.add(&other.scale(cplx(-T::one(), T::zero())))
    }

    pub fn scale(&self, a: C<T>) -> Self {
        Self::new(self.omega, self.harmonics.iter().map(|(&m, h)| (m, h.scale(a))))
    }

    pub fn evaluate_at(&self, t: T) -> OperatorSum<T> {
        let mut terms = Vec::new();
        for (&m, h) in &self.harmonics {
            let ph = c_phase(T::from_i32(m).unwrap() * self.omega * t);
            terms.extend(h.terms().iter().map(|&(s, c)| (s, c * ph)));
        }
        OperatorSum::from_terms(terms)
    }

    /// The `m = 0` harmonic, i.e. the exact period average.
    pub fn time_average(&self) -> OperatorSum<T> {
        self.harmonic(0)
    }

    /// Removes the mean.
    pub fn oscillating_part(&self) -> Self {
        let mut out = self.clone();
        out.harmonics.remove(&0);
        out
    }

    pub fn derivative(&self) -> Self {
        Self::new(
            self.omega,
            self.harmonics.iter().map(|(&m, h)| (m, h.scale(cplx(T::zero(), T::from_i32(m).unwrap() * self.omega)))),
        )
    }

    /// `G(t) = ∫₀^t F` for zero-mean `F`, exactly.
    pub fn antiderivative_zero_start(&self) -> Result<Self> {
        if !self.time_average().is_zero() {
            return Err(domain("antiderivative of a series with nonzero mean is not periodic"));
        }
        let mut out = Self::zero(self.omega);
        for (&m, h) in &self.harmonics {
            let inv = cplx(T::zero(), T::from_i32(m).unwrap() * self.omega).inv();
            let g = h.scale(inv);
            out.accumulate(m, &g);
            out.accumulate(0, &g.scale(cplx(-T::one(), T::zero())));
        }
        Ok(out)
    }

    /// Harmonic convolution `[F, G]_m = Σ_{p+q=m} [F_p, G_q]`.
    pub fn commutator(&self, other: &Self) -> Result<Self> {
        self.check_omega(other)?;
        let mut out = Self::zero(self.merged_omega(other));
        for (&p, f) in &self.harmonics {
            for (&q, g) in &other.harmonics {
                out.accumulate(p + q, &f.commutator(g));
            }
        }
        Ok(out)
    }

    /// Commutator with a time-independent operator on the left.
    pub fn commutator_static_left(&self, h: &OperatorSum<T>) -> Self {
        Self::new(self.omega, self.harmonics.iter().map(|(&m, g)| (m, h.commutator(g))))
    }

    /// `F(t)† = F(t)` for all t.
    pub fn is_hermitian(&self, tol: T) -> bool {
        self.conjugation_defect(T::one()) <= tol
    }

    pub fn is_anti_hermitian(&self, tol: T) -> bool {
        self.conjugation_defect(-T::one()) <= tol
    }

    /// max |H_{−m} − s·H_m†| over coefficients.
    fn conjugation_defect(&self, s: T) -> T {
        let mut worst = T::zero();
        let keys: Vec<i32> = self.harmonics.keys().copied().collect();
        for m in keys {
            let lhs = self.harmonic(-m);
            let rhs = self.harmonic(m).adjoint().scale_real(s);
            let d = &lhs - &rhs;
            worst = worst.max(d.terms().iter().fold(T::zero(), |a, t| a.max(c_abs(t.1))));
        }
        worst
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pauli_algebra::{Pauli, PauliString};
    use crate::scalar::{c_i, c_real};
    use proptest::prelude::*;
    use std::f64::consts::PI;

    fn op(s: &str, c: f64) -> OperatorSum<f64> {
        OperatorSum::term(c_real(c), PauliString::parse(s).unwrap())
    }

    fn close(a: &OperatorSum<f64>, b: &OperatorSum<f64>, tol: f64) -> bool {
        (a - b).terms().iter().all(|t| c_abs(t.1) <= tol)
    }

    #[test]
    fn cosine_drive_evaluation() {
        let o = op("X0 X1", 1.0);
        let v = FourierOperator::cosine(0.5, &o, 3.0);
        assert!(close(&v.evaluate_at(0.0), &o.scale_real(0.5), 1e-15));
        assert!(v.evaluate_at(v.period() / 4.0).is_zero());
        assert!(v.time_average().is_zero());
        let h0 = op("Z0", 1.3);
        let c = FourierOperator::constant(h0.clone(), 3.0);
        assert!(close(&c.evaluate_at(0.77), &h0, 0.0));
        assert!(v.is_hermitian(1e-15));
    }

    #[test]
    fn averages() {
        let h0 = op("Z0", 1.0);
        let f =
            FourierOperator::constant(h0.clone(), 2.0).add(&FourierOperator::cosine(1.0, &op("X1", 1.0), 2.0)).unwrap();
        assert_eq!(f.time_average(), h0);
        let s2 = FourierOperator::new(2.0, [(2, op("Y0", 0.5)), (-2, op("Y0", 0.5))]);
        assert!(s2.time_average().is_zero());
    }

    #[test]
    fn cosine_antiderivative_is_sine() {
        let (g, w) = (0.7, 2.5);
        let o = op("X0", 1.0);
        let a = FourierOperator::cosine(g, &o, w).antiderivative_zero_start().unwrap();
        let expect = FourierOperator::sine(g / w, &o, w);
        let d = a.sub(&expect).unwrap();
        assert!(d.max_abs_coefficient() < 1e-15);
        assert!(a.evaluate_at(0.0).is_zero());
        assert!(FourierOperator::<f64>::zero(1.0).antiderivative_zero_start().unwrap().is_zero());
        assert!(FourierOperator::constant(o, w).antiderivative_zero_start().is_err());
    }

    #[test]
    fn commutator_examples() {
        let w = 1.7;
        let a = op("Z0", 1.0);
        let b = op("Z0 Z1", 1.0);
        assert!(FourierOperator::cosine(1.0, &a, w).commutator(&FourierOperator::constant(b, w)).unwrap().is_zero());
        let c = FourierOperator::cosine(1.0, &a, w).commutator(&FourierOperator::constant(op("X0", 1.0), w)).unwrap();
        let y = OperatorSum::single(0, Pauli::Y, 1.0).unwrap().scale(c_i() * 2.0);
        for k in 0..8 {
            let t = k as f64 * 0.37;
            assert!(close(&c.evaluate_at(t), &y.scale_real((w * t).cos()), 1e-14));
        }
        let h = FourierOperator::constant(op("X0 X1", 1.0), w);
        assert!(h.commutator(&h).unwrap().is_zero());
        assert!(h.commutator(&FourierOperator::constant(op("X0", 1.0), 2.0)).is_err());
    }

    fn series(seed: u64, mean: bool) -> FourierOperator<f64> {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let mut f = FourierOperator::zero(1.3);
        for m in -2..=2 {
            if m == 0 && !mean {
                continue;
            }
            let terms = (0..3).map(|_| {
                let x = rng.gen::<u64>() & 7;
                let z = rng.gen::<u64>() & 7;
                (PauliString::from_masks(x, z), cplx(rng.gen::<f64>() - 0.5, rng.gen::<f64>() - 0.5))
            });
            f = f.add(&FourierOperator::new(1.3, [(m, OperatorSum::from_terms(terms))])).unwrap();
        }
        f
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(32))]
        #[test]
        fn pointwise_commutator(seed in 0u64..5000) {
            let f = series(seed, true);
            let g = series(seed + 7, true);
            let c = f.commutator(&g).unwrap();
            for k in 0..16 {
                let t = 2.0 * PI / 1.3 * k as f64 / 16.0;
                let direct = f.evaluate_at(t).commutator(&g.evaluate_at(t));
                prop_assert!(close(&c.evaluate_at(t), &direct, 1e-11));
            }
        }

        #[test]
        fn derivative_then_antiderivative(seed in 0u64..5000) {
            let f = series(seed, false).antiderivative_zero_start().unwrap();
            let back = f.derivative().antiderivative_zero_start().unwrap();
            prop_assert!(back.sub(&f).unwrap().max_abs_coefficient() < 1e-12);
        }

        #[test]
        fn periodic_in_time(seed in 0u64..5000, t in 0.0f64..10.0) {
            let f = series(seed, true);
            prop_assert!(close(&f.evaluate_at(t), &f.evaluate_at(t + f.period()), 1e-12));
        }

        #[test]
        fn anti_hermitian_generator_preserves_hermiticity(seed in 0u64..5000) {
            let raw = series(seed, true);
            let h = raw.add(&FourierOperator::new(1.3, raw.harmonics().iter().map(|(&m, x)| (-m, x.adjoint())))).unwrap();
            let g = series(seed + 3, true);
            let anti = g.sub(&FourierOperator::new(1.3, g.harmonics().iter().map(|(&m, x)| (-m, x.adjoint())))).unwrap();
            prop_assert!(h.is_hermitian(1e-14));
            prop_assert!(anti.is_anti_hermitian(1e-14));
            prop_assert!(anti.commutator(&h).unwrap().is_hermitian(1e-12));
        }
    }
}
