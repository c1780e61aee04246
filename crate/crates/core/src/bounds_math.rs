//! Combinatorial and analytic inequalities behind the effective-Hamiltonian estimates,
//! checked by brute force against their closed forms.
//!
//! Integer sums use exact big-integer arithmetic; the analytic sums use `f64`.

use crate::error::{domain, precondition, Result};
use crate::lattice_ops::Lattice;
use crate::pauli_algebra::{powerlaw_certificate, CertificateReport, OperatorSum, Pauli, PauliString, PowerLawSpec};
use crate::scalar::{c_real, Real};
use num_bigint::BigUint;
use num_traits::{One, ToPrimitive, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use statrs::function::gamma::{gamma, gamma_ur, ln_gamma};
use std::f64::consts::{E, PI};

/// One checked inequality `lhs ≤ rhs` at a parameter point.
#[derive(Debug, Clone, PartialEq)]
pub struct LemmaReport {
    pub lemma: &'static str,
    pub point: String,
    pub lhs: f64,
    pub rhs: f64,
    pub pass: bool,
}

impl LemmaReport {
    fn new(lemma: &'static str, point: String, lhs: f64, rhs: f64) -> Self {
        Self { lemma, point, lhs, rhs, pass: lhs <= rhs }
    }
}

/// Exact sum and closed-form bound of a factorial-composition inequality.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FactorialSum {
    pub exact: BigUint,
    pub bound: BigUint,
    pub compositions: u64,
}

impl FactorialSum {
    pub fn pass(&self) -> bool {
        self.exact <= self.bound
    }
}

fn factorial(n: usize) -> BigUint {
    (1..=n).fold(BigUint::one(), |p, i| p * BigUint::from(i))
}

/// Visits every composition of `q` into `k` parts, each at least `min_part`.
fn for_each_composition(q: usize, k: usize, min_part: usize, f: &mut impl FnMut(&[usize])) {
    fn rec(left: usize, slots: usize, min_part: usize, buf: &mut Vec<usize>, f: &mut impl FnMut(&[usize])) {
        if slots == 1 {
            if left >= min_part {
                buf.push(left);
                f(buf);
                buf.pop();
            }
            return;
        }
        let reserve = min_part * (slots - 1);
        if left < reserve + min_part {
            return;
        }
        for i in min_part..=left - reserve {
            buf.push(i);
            rec(left - i, slots - 1, min_part, buf, f);
            buf.pop();
        }
    }
    if k == 0 {
        return;
    }
    rec(q, k, min_part, &mut Vec::with_capacity(k), f);
}

/// `Σ_{i₁+…+i_k=q} Π_j i_j!` by enumeration, against `q!/(k−1)!` (positive parts) or
/// `2^k q!` (zeros allowed).
pub fn factorial_composition_sum(q: usize, k: usize, allow_zero: bool) -> Result<FactorialSum> {
    if k < 1 || k > q {
        return Err(domain(format!("factorial sums need 1 <= k <= q, got q = {q}, k = {k}")));
    }
    let facts: Vec<BigUint> = (0..=q).map(factorial).collect();
    let mut exact = BigUint::zero();
    let mut compositions = 0u64;
    for_each_composition(q, k, usize::from(!allow_zero), &mut |parts| {
        exact += parts.iter().fold(BigUint::one(), |p, &i| p * &facts[i]);
        compositions += 1;
    });
    let bound = if allow_zero { (BigUint::one() << k) * &facts[q] } else { &facts[q] / factorial(k - 1) };
    Ok(FactorialSum { exact, bound, compositions })
}

/// `Σ_{i₁+…+i_k=q₀, i_j ≥ 1} Π_j (i_j − 1)!` against `2^k (q₀ − k)!`.
pub fn factorial_shifted_sum(q0: usize, k: usize) -> Result<FactorialSum> {
    if k < 1 || k > q0 {
        return Err(domain(format!("shifted factorial sums need 1 <= k <= q0, got q0 = {q0}, k = {k}")));
    }
    let facts: Vec<BigUint> = (0..=q0).map(factorial).collect();
    let mut exact = BigUint::zero();
    let mut compositions = 0u64;
    for_each_composition(q0, k, 1, &mut |parts| {
        exact += parts.iter().fold(BigUint::one(), |p, &i| p * &facts[i - 1]);
        compositions += 1;
    });
    Ok(FactorialSum { exact, bound: (BigUint::one() << k) * &facts[q0 - k], compositions })
}

/// `Σ_{k=1}^{q₀} (2q₀/c)^k (q₀−k)!/(q₀! k!)` against `(e/√(2π))(e^{2e/c} − 1)`.
pub fn c1_sum(q0: usize, c: f64) -> Result<(f64, f64)> {
    if q0 < 1 || c <= 0.0 || !c.is_finite() {
        return Err(domain("the Stirling sum needs q0 >= 1 and c > 0"));
    }
    let q = q0 as f64;
    let lnq = ln_gamma(q + 1.0);
    let exact = (1..=q0)
        .map(|k| {
            let kf = k as f64;
            (kf * (2.0 * q / c).ln() + ln_gamma(q - kf + 1.0) - lnq - ln_gamma(kf + 1.0)).exp()
        })
        .sum();
    Ok((exact, E / (2.0 * PI).sqrt() * (2.0 * E / c).exp_m1()))
}

/// Terms summed one by one before the remainder is bounded by an integral.
const TAIL_DIRECT_TERMS: u64 = 200_000;

/// Upper estimate of `Σ_{r > r_*} r^{D−1} e^{−r^η}` and the bound `(2/η) 2^{D/η} Γ(D/η) r_*^D e^{−r_*^η}`.
///
/// Terms are summed directly up to a cutoff; the rest is bounded by
/// `∫_R^∞ f + 2 max_{x ≥ R} f` (valid for the unimodal summand), so the first value is
/// never below the true sum.
pub fn tail_sum(r_star: f64, dimension: usize, eta: f64) -> Result<(f64, f64)> {
    if r_star <= 1.0 || !(eta > 0.0 && eta < 1.0) || dimension < 1 {
        return Err(domain("the tail sum needs r_star > 1, 0 < eta < 1 and D >= 1"));
    }
    let d = dimension as f64;
    let f = |x: f64| x.powf(d - 1.0) * (-x.powf(eta)).exp();
    let first = r_star.floor() as u64 + 1;
    let mut partial = 0.0;
    let mut r = first;
    let last = first + TAIL_DIRECT_TERMS;
    while r < last {
        let v = f(r as f64);
        partial += v;
        if v < 1e-300 && (r as f64).powf(eta) > (d - 1.0) / eta {
            break;
        }
        r += 1;
    }
    let cut = r as f64;
    let a = d / eta;
    let integral = gamma_ur(a, cut.powf(eta)) * gamma(a) / eta;
    let peak = ((d - 1.0) / eta).powf(1.0 / eta);
    let max_beyond = if cut >= peak { f(cut) } else { f(peak) };
    let exact = partial + integral + 2.0 * max_beyond;
    let bound = 2.0 / eta * 2f64.powf(a) * gamma(a) * r_star.powf(d) * (-r_star.powf(eta)).exp();
    Ok((exact, bound))
}

/// `∫_{x_*}^∞ x^β e^{−x} dx` against `2^β Γ(β+1) x_*^β e^{−x_*}`.
pub fn tail_inner(beta: f64, x_star: f64) -> Result<(f64, f64)> {
    if beta < 0.0 || x_star <= 0.0 {
        return Err(domain("the incomplete-gamma inequality needs beta >= 0 and x_star > 0"));
    }
    let g = gamma(beta + 1.0);
    Ok((gamma_ur(beta + 1.0, x_star) * g, 2f64.powf(beta) * g * x_star.powf(beta) * (-x_star).exp()))
}

/// Certificate of `[H₁, H₂]` at prefactor `a·b·η·λ·max(k₁, k₂)` in the class of index `k₁ + k₂`.
#[derive(Debug, Clone, PartialEq)]
pub struct ClosureReport<T> {
    pub prefactor: T,
    pub certificate: CertificateReport<T>,
    pub commutator_terms: usize,
}

impl<T: Real> ClosureReport<T> {
    pub fn lemma_report(&self, point: String) -> LemmaReport {
        LemmaReport {
            lemma: "adjoint-closure",
            point,
            lhs: self.certificate.worst_ratio().as_f64(),
            rhs: 1.0,
            pass: self.certificate.pass,
        }
    }
}

/// Checks that the commutator of two certified power-law operators is again power-law.
///
/// `H₁ ∈ a·H_α^{(k₁)}` and `H₂ ∈ b·H_α^{(k₂)}` must certify with the same `α`, `η`, `D`.
pub fn adjoint_closure_check<T: Real>(
    h1: &OperatorSum<T>,
    spec1: (T, &PowerLawSpec<T>),
    h2: &OperatorSum<T>,
    spec2: (T, &PowerLawSpec<T>),
    lattice: &Lattice,
) -> Result<ClosureReport<T>> {
    let (a, s1) = spec1;
    let (b, s2) = spec2;
    if s1.alpha != s2.alpha || s1.eta != s2.eta || s1.dimension != s2.dimension {
        return Err(domain("closure inputs must share alpha, eta and D"));
    }
    for (h, p, s) in [(h1, a, s1), (h2, b, s2)] {
        let rep = powerlaw_certificate(h, lattice, s, p)?;
        if !rep.pass {
            return Err(precondition(format!(
                "input certificate fails (worst ratio {:.3e})",
                rep.worst_ratio().as_f64()
            )));
        }
    }
    let lambda = lattice.constants(s1.alpha)?.lambda;
    let kmax = T::from_usize_lossy(s1.k.max(s2.k));
    let prefactor = a * b * s1.eta * lambda * kmax;
    let comm = h1.commutator(h2);
    let out = s1.with_k(s1.k + s2.k);
    let certificate = powerlaw_certificate(&comm, lattice, &out, prefactor)?;
    Ok(ClosureReport { prefactor, certificate, commutator_terms: comm.len() })
}

fn big_to_f64(x: &BigUint) -> f64 {
    x.to_f64().unwrap_or(f64::INFINITY)
}

/// Factorial-composition grid: every `k ≤ q ≤ q_max`, both variants, plus the shifted sums.
pub fn factorial_grid(q_max: usize) -> Result<Vec<LemmaReport>> {
    let mut out = Vec::new();
    for q in 1..=q_max {
        for k in 1..=q {
            for (name, zero) in [("factorial-positive", false), ("factorial-zeros", true)] {
                let s = factorial_composition_sum(q, k, zero)?;
                out.push(LemmaReport {
                    pass: s.pass(),
                    ..LemmaReport::new(name, format!("q={q} k={k}"), big_to_f64(&s.exact), big_to_f64(&s.bound))
                });
            }
            let s = factorial_shifted_sum(q, k)?;
            out.push(LemmaReport {
                pass: s.pass(),
                ..LemmaReport::new(
                    "factorial-shifted",
                    format!("q0={q} k={k}"),
                    big_to_f64(&s.exact),
                    big_to_f64(&s.bound),
                )
            });
        }
    }
    Ok(out)
}

pub const STIRLING_C_GRID: [f64; 5] = [1.0, 2.0, 5.0, 10.0, 100.0];

pub fn stirling_grid(q0_max: usize) -> Result<Vec<LemmaReport>> {
    let mut out = Vec::new();
    for q0 in 1..=q0_max {
        for c in STIRLING_C_GRID {
            let (lhs, rhs) = c1_sum(q0, c)?;
            out.push(LemmaReport::new("stirling-sum", format!("q0={q0} c={c}"), lhs, rhs));
        }
    }
    Ok(out)
}

pub const TAIL_R_GRID: [f64; 4] = [2.0, 4.0, 8.0, 16.0];

pub fn tail_grid() -> Result<Vec<LemmaReport>> {
    let mut out = Vec::new();
    for d in 1..=3 {
        for e in 1..=9 {
            let eta = e as f64 / 10.0;
            for r in TAIL_R_GRID {
                let (lhs, rhs) = tail_sum(r, d, eta)?;
                out.push(LemmaReport::new("tail-sum", format!("D={d} eta={eta} r_star={r}"), lhs, rhs));
            }
        }
    }
    Ok(out)
}

/// The incomplete-gamma step at `β = D/η − 1`, `x_* = r_*^η` over the tail grid.
///
/// Reported separately: it fails for some `β < 1` near `x_* ≈ 2` while the outer sum bound holds.
pub fn tail_inner_grid() -> Result<Vec<LemmaReport>> {
    let mut out = Vec::new();
    for d in 1..=3 {
        for e in 1..=9 {
            let eta = e as f64 / 10.0;
            for r in TAIL_R_GRID {
                let beta = d as f64 / eta - 1.0;
                let x = r.powf(eta);
                let (lhs, rhs) = tail_inner(beta, x)?;
                out.push(LemmaReport::new("tail-inner", format!("D={d} eta={eta} r_star={r}"), lhs, rhs));
            }
        }
    }
    Ok(out)
}

/// Random two-body chain operator with pair weights `≤ 1/d^α` and fields `≤ 1`.
pub fn random_powerlaw_chain(seed: u64, n: usize, alpha: f64) -> OperatorSum<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let paulis = [Pauli::X, Pauli::Y, Pauli::Z];
    let mut terms = Vec::new();
    for i in 0..n {
        for j in i + 1..n {
            let s = PauliString::from_letters([(i, paulis[rng.gen_range(0..3)]), (j, paulis[rng.gen_range(0..3)])])
                .expect("distinct sites");
            let c = rng.gen_range(-1.0..1.0) * ((j - i) as f64).powf(-alpha);
            terms.push((s, c_real(c)));
        }
        terms.push((
            PauliString::single(i, paulis[rng.gen_range(0..3)]).expect("valid site"),
            c_real(rng.gen_range(-1.0..1.0)),
        ));
    }
    OperatorSum::from_terms(terms)
}

pub const CLOSURE_SITES: usize = 6;
pub const CLOSURE_ALPHA: f64 = 3.0;

/// Closure check on `cases` random pairs of certified 6-site operators, seeded from `seed`.
pub fn closure_grid(cases: usize, seed: u64) -> Result<Vec<LemmaReport>> {
    let l = Lattice::chain(CLOSURE_SITES);
    let spec = PowerLawSpec::new(CLOSURE_ALPHA, 1.0, 1, 1)?;
    (0..cases as u64)
        .map(|i| {
            let s = seed.wrapping_add(i);
            let h1 = random_powerlaw_chain(s, CLOSURE_SITES, CLOSURE_ALPHA);
            let h2 = random_powerlaw_chain(s ^ 0x5eed, CLOSURE_SITES, CLOSURE_ALPHA);
            Ok(adjoint_closure_check(&h1, (1.0, &spec), &h2, (1.0, &spec), &l)?.lemma_report(format!("seed={s}")))
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn factorial_examples() {
        let s = factorial_composition_sum(3, 2, false).unwrap();
        assert_eq!((s.exact, s.bound, s.compositions), (BigUint::from(4u32), BigUint::from(6u32), 2));
        let s = factorial_composition_sum(2, 2, true).unwrap();
        assert_eq!((s.exact, s.bound, s.compositions), (BigUint::from(5u32), BigUint::from(8u32), 3));
        for q in 1..8 {
            let s = factorial_composition_sum(q, 1, false).unwrap();
            assert_eq!(s.exact, factorial(q));
            assert_eq!(s.bound, factorial(q));
        }
        assert!(factorial_composition_sum(2, 3, false).is_err());
        assert!(factorial_composition_sum(2, 0, true).is_err());
        // (1,1,2),(1,2,1),(2,1,1) shifted: 0!0!1! each.
        assert_eq!(factorial_shifted_sum(4, 3).unwrap().exact, BigUint::from(3u32));
    }

    #[test]
    fn enumeration_counts() {
        // Stars and bars: C(q−1, k−1) positive, C(q+k−1, k−1) with zeros.
        let s = factorial_composition_sum(10, 4, false).unwrap();
        assert_eq!(s.compositions, 84);
        let s = factorial_composition_sum(10, 4, true).unwrap();
        assert_eq!(s.compositions, 286);
    }

    #[test]
    fn big_integers_past_u64() {
        let s = factorial_composition_sum(22, 3, true).unwrap();
        assert!(s.bound > BigUint::from(u64::MAX));
        assert!(s.pass());
    }

    #[test]
    fn stirling_examples() {
        for &c in &[0.1, 1.0, 3.0, 1e3] {
            let (lhs, rhs) = c1_sum(1, c).unwrap();
            assert!((lhs - 2.0 / c).abs() < 1e-12 * lhs);
            assert!(rhs >= lhs);
        }
        let (lhs, rhs) = c1_sum(10, 10.0).unwrap();
        assert!(lhs < rhs);
        let (lhs, rhs) = c1_sum(10, 1e12).unwrap();
        assert!(lhs < 1e-11 && rhs < 1e-11);
        assert!(c1_sum(0, 1.0).is_err());
    }

    #[test]
    fn tail_examples() {
        let (lhs, rhs) = tail_sum(4.0, 1, 0.5).unwrap();
        let direct: f64 = (5..2_000_000).map(|r| (-(r as f64).sqrt()).exp()).sum();
        assert!(lhs >= direct && lhs < direct * 1.0001, "{lhs} vs {direct}");
        assert!(lhs <= rhs);
        let (lhs, rhs) = tail_sum(1e4, 1, 0.9).unwrap();
        assert!(lhs <= rhs);
        let (lhs, rhs) = tail_inner(0.0, 2.0).unwrap();
        assert!((lhs - (-2f64).exp()).abs() < 1e-15 && (rhs - (-2f64).exp()).abs() < 1e-15);
        assert!(tail_sum(1.0, 1, 0.5).is_err());
        assert!(tail_sum(2.0, 1, 1.0).is_err());
        assert!(tail_sum(2.0, 0, 0.5).is_err());
    }

    #[test]
    fn inner_step_fails_below_beta_one() {
        // β = 1/0.8 − 1 at x_* = 2^0.8.
        let (lhs, rhs) = tail_inner(0.25, 2f64.powf(0.8)).unwrap();
        assert!(lhs > rhs);
        for beta in [1.0, 2.0, 5.0, 9.0] {
            for x in [1.0, 2.0, 10.0] {
                let (lhs, rhs) = tail_inner(beta, x).unwrap();
                assert!(lhs <= rhs * (1.0 + 1e-12), "beta = {beta}, x = {x}");
            }
        }
    }

    #[test]
    fn invariant_grids_pass() {
        let all: Vec<LemmaReport> =
            [factorial_grid(12).unwrap(), stirling_grid(30).unwrap(), tail_grid().unwrap()].concat();
        let failures: Vec<_> = all.iter().filter(|r| !r.pass).collect();
        assert!(failures.is_empty(), "{failures:?}");
        assert_eq!(tail_grid().unwrap().len(), 108);
    }

    fn op(s: &str, c: f64) -> OperatorSum<f64> {
        OperatorSum::term(c_real(c), PauliString::parse(s).unwrap())
    }

    #[test]
    fn closure_trivial_cases() {
        let l = Lattice::chain(6);
        let spec = PowerLawSpec::new(3.0, 1.0, 1, 1).unwrap();
        let r = adjoint_closure_check(&op("X0", 1.0), (1.0, &spec), &op("Z3", 1.0), (1.0, &spec), &l).unwrap();
        assert!(r.certificate.pass && r.commutator_terms == 0);
        let h = random_powerlaw_chain(3, 6, 3.0);
        let r = adjoint_closure_check(&h, (1.0, &spec), &h, (1.0, &spec), &l).unwrap();
        assert!(r.certificate.pass && r.commutator_terms == 0);
        let err = adjoint_closure_check(&op("X0 X1", 2.0), (1.0, &spec), &h, (1.0, &spec), &l).unwrap_err();
        assert!(matches!(err, crate::error::Error::Precondition(_)));
    }

    #[test]
    fn closure_grid_is_seeded() {
        let a = closure_grid(3, 7).unwrap();
        assert_eq!(a, closure_grid(3, 7).unwrap());
        assert!(a.iter().all(|r| r.pass && r.lemma == "adjoint-closure"));
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(100))]
        #[test]
        fn closure_random_pairs(seed in 0u64..1_000_000) {
            let l = Lattice::chain(6);
            let spec = PowerLawSpec::new(3.0, 1.0, 1, 1).unwrap();
            let h1 = random_powerlaw_chain(seed, 6, 3.0);
            let h2 = random_powerlaw_chain(seed ^ 0x5eed, 6, 3.0);
            let r = adjoint_closure_check(&h1, (1.0, &spec), &h2, (1.0, &spec), &l).unwrap();
            prop_assert!(r.certificate.pass, "{:?}", r.certificate);
        }

        #[test]
        fn enumeration_matches_convolution(q in 1usize..10, k in 1usize..10) {
            prop_assume!(k <= q);
            // S_k(q) = Σ_i i!·S_{k−1}(q − i).
            let mut s = vec![BigUint::zero(); q + 1];
            s[0] = BigUint::one();
            for _ in 0..k {
                let mut next = vec![BigUint::zero(); q + 1];
                for total in 0..=q {
                    for i in 0..=total {
                        next[total] += factorial(i) * &s[total - i];
                    }
                }
                s = next;
            }
            prop_assert_eq!(factorial_composition_sum(q, k, true).unwrap().exact, s[q].clone());
        }
    }
}
