//! Order-by-order rotating-frame construction for periodically driven Hamiltonians.
//!
//! With `Q(t) = e^{Ω(t)}`, `Ω = Σ_q Ω_q`, the transformed Hamiltonian is
//! `H′ = Σ_q G_q`, where `G_0 = H` and for `q ≥ 1`
//!
//! ```text
//! G_q = Σ_k (−1)^k/k!      Σ_{i₁+…+i_k = q}       ad_{Ω_{i₁}}…ad_{Ω_{i_k}} H
//!     + i Σ_k (−1)^{k+1}/(k+1)! Σ_{i₁+…+i_k+m = q+1} ad_{Ω_{i₁}}…ad_{Ω_{i_k}} ∂_tΩ_m
//! ```
//!
//! Each advanced order removes the time dependence of `G_q` by choosing
//! `Ω_{q+1} = −i ∫₀^t (G_q − avg G_q)`.

use crate::error::{domain, Error, Result};
use crate::exact_backend::linalg::{CMatrix, HermitianEigen};
use crate::exact_backend::{to_matrix, DenseOperator};
use crate::lattice_ops::Lattice;
use crate::pauli_algebra::{
    certificate_from_norms, CertificateReport, LocalNorm, OperatorSum, PowerLawSpec, SupportNorms,
};
use crate::scalar::{c_i, c_phase, c_real, cplx, Real};
use crate::time_periodic::FourierOperator;

/// Truncation order choice.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum QMax {
    Fixed(usize),
    Auto,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MagnusConfig<T> {
    pub q_max: QMax,
    pub kappa: T,
    pub c: T,
    pub period: T,
    pub lambda: T,
    /// Highest order `Q_report ≥ q_max` materialized in the residual drive; `None` means `q_max + 2`.
    pub report_orders: Option<usize>,
}

impl<T: Real> MagnusConfig<T> {
    /// Defaults `κ = 1`, `c = 10`.
    pub fn new(period: T, lambda: T, q_max: QMax) -> Self {
        Self { q_max, kappa: T::one(), c: T::lit(10.0), period, lambda, report_orders: None }
    }

    /// `κ′ = κ − ln 2 − 1/c`.
    pub fn kappa_prime(&self) -> T {
        self.kappa - T::ln_2() - T::one() / self.c
    }
}

/// `ω_* = e·e^{−κ}/(cTλ)` and `q_max = max(1, ⌊ω_*⌋)`.
pub fn select_qmax<T: Real>(config: &MagnusConfig<T>) -> Result<(usize, T)> {
    if config.kappa <= T::ln_2() {
        return Err(domain(format!("kappa = {} must exceed ln 2", config.kappa)));
    }
    if config.c <= T::zero() || config.period <= T::zero() || config.lambda <= T::zero() {
        return Err(domain("c, T and lambda must be positive"));
    }
    let omega_star = T::e() * (-config.kappa).exp() / (config.c * config.period * config.lambda);
    let q = omega_star.floor().to_usize().unwrap_or(usize::MAX).max(1);
    Ok((q, omega_star))
}

/// Memoized nested adjoints for the two sums defining `G_q`.
///
/// `first[n][k] = Σ_{i₁+…+i_k = n} ad_{Ω_{i₁}}…ad_{Ω_{i_k}} H` and
/// `second[s][k]` the same acting on `∂_tΩ_m` with `i₁+…+i_k+m = s`.
struct NestedAdjoints<T: Real> {
    h: FourierOperator<T>,
    omegas: Vec<FourierOperator<T>>,
    first: Vec<Vec<Option<FourierOperator<T>>>>,
    second: Vec<Vec<Option<FourierOperator<T>>>>,
}

impl<T: Real> NestedAdjoints<T> {
    fn new(h: FourierOperator<T>) -> Self {
        Self { h, omegas: Vec::new(), first: Vec::new(), second: Vec::new() }
    }

    fn omega(&self, i: usize) -> Option<&FourierOperator<T>> {
        self.omegas.get(i - 1).filter(|o| !o.is_zero())
    }

    fn zero(&self) -> FourierOperator<T> {
        FourierOperator::zero(self.h.omega())
    }

    fn slot(table: &mut Vec<Vec<Option<FourierOperator<T>>>>, n: usize, k: usize) -> &mut Option<FourierOperator<T>> {
        while table.len() <= n {
            table.push(Vec::new());
        }
        while table[n].len() <= k {
            table[n].push(None);
        }
        &mut table[n][k]
    }

    fn first(&mut self, n: usize, k: usize) -> Result<FourierOperator<T>> {
        if let Some(v) = Self::slot(&mut self.first, n, k).as_ref() {
            return Ok(v.clone());
        }
        let v = if k == 0 {
            if n == 0 {
                self.h.clone()
            } else {
                self.zero()
            }
        } else if k > n {
            self.zero()
        } else {
            let mut acc = self.zero();
            for i in 1..=n - k + 1 {
                if self.omega(i).is_none() {
                    continue;
                }
                let inner = self.first(n - i, k - 1)?;
                if inner.is_zero() {
                    continue;
                }
                acc = acc.add(&self.omega(i).unwrap().commutator(&inner)?)?;
            }
            acc
        };
        *Self::slot(&mut self.first, n, k) = Some(v.clone());
        Ok(v)
    }

    fn second(&mut self, s: usize, k: usize) -> Result<FourierOperator<T>> {
        if let Some(v) = Self::slot(&mut self.second, s, k).as_ref() {
            return Ok(v.clone());
        }
        let v = if s == 0 {
            self.zero()
        } else if k == 0 {
            self.omega(s).map(|o| o.derivative()).unwrap_or_else(|| self.zero())
        } else if k + 1 > s {
            self.zero()
        } else {
            let mut acc = self.zero();
            for i in 1..=s - k {
                if self.omega(i).is_none() {
                    continue;
                }
                let inner = self.second(s - i, k - 1)?;
                if inner.is_zero() {
                    continue;
                }
                acc = acc.add(&self.omega(i).unwrap().commutator(&inner)?)?;
            }
            acc
        };
        *Self::slot(&mut self.second, s, k) = Some(v.clone());
        Ok(v)
    }

    fn gq(&mut self, q: usize) -> Result<FourierOperator<T>> {
        if q == 0 {
            return Ok(self.h.clone());
        }
        let mut g = self.zero();
        let mut fact = T::one();
        for k in 1..=q {
            fact *= T::from_usize_lossy(k);
            let sign = if k % 2 == 0 { T::one() } else { -T::one() };
            let a = self.first(q, k)?;
            g = g.add(&a.scale(c_real(sign / fact)))?;
            let b = self.second(q + 1, k)?;
            // i (−1)^{k+1}/(k+1)!
            let w = -sign / (fact * T::from_usize_lossy(k + 1));
            g = g.add(&b.scale(cplx(T::zero(), w)))?;
        }
        Ok(g)
    }
}

/// `G_q` from `H` and `Ω_1 … Ω_q` (missing entries are zero).
pub fn compute_gq<T: Real>(
    h: &FourierOperator<T>,
    omegas: &[FourierOperator<T>],
    q: usize,
) -> Result<FourierOperator<T>> {
    let mut cache = NestedAdjoints::new(h.clone());
    cache.omegas = omegas.iter().take(q).cloned().collect();
    cache.gq(q)
}

/// Which inequality an order's certificate checks.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CertificateKind {
    /// `G_q ∈ T^q q! c^q λ^q H_α^{(q+1)}` for `q < q_max`.
    OrderBound,
    /// `G_q ∈ C e^{−κ′q} H_α` for `q ≥ q_max`, with `C` the empirical sup.
    Tail,
}

#[derive(Debug, Clone)]
pub struct OrderCertificate<T: Real> {
    pub q: usize,
    pub kind: CertificateKind,
    pub report: CertificateReport<T>,
    pub local_norm: LocalNorm<T>,
    /// `T^q q! c^q λ^{q+1}`.
    pub local_norm_bound: T,
}

#[derive(Debug, Clone)]
pub struct MagnusResult<T: Real> {
    pub q_max: usize,
    pub report_orders: usize,
    pub omega_star: T,
    /// `H̄′_q` for `q < q_max`.
    pub hbar: Vec<OperatorSum<T>>,
    /// `Ω_1 … Ω_{q_max}`.
    pub omegas: Vec<FourierOperator<T>>,
    /// `G_0 … G_{Q_report}`.
    pub g: Vec<FourierOperator<T>>,
    pub h_star: OperatorSum<T>,
    /// `Σ_{q_max ≤ q ≤ Q_report} G_q`.
    pub v_prime: FourierOperator<T>,
    /// Largest coefficient of `G_q − i∂_tΩ_{q+1} − H̄′_q` per advanced order.
    pub frame_residuals: Vec<T>,
    pub certificates: Vec<OrderCertificate<T>>,
    /// `γ = Σ_{q<q_max} T^q q! c^q λ^q`.
    pub gamma_star: T,
    pub h_star_certificate: CertificateReport<T>,
    /// Empirical `C = sup_{q ≥ q_max} e^{κ′q} · (required prefactor of G_q)`.
    pub tail_constant: T,
    pub kappa_prime: T,
}

impl<T: Real> MagnusResult<T> {
    pub fn all_certificates_pass(&self) -> bool {
        self.certificates.iter().all(|c| c.report.pass) && self.h_star_certificate.pass
    }

    /// First failing order, with the suggestion to retry at doubled `c`.
    pub fn failure_summary(&self, c: T) -> Option<String> {
        self.certificates.iter().find(|c| !c.report.pass).map(|f| {
            format!(
                "order {} certificate failed (worst pair {:?}, ratio {:.3e}); retry with c = {}",
                f.q,
                f.report.worst_pair,
                f.report.worst_ratio().as_f64(),
                c * T::lit(2.0)
            )
        })
    }

    /// `Ω(t) = Σ_q Ω_q(t)`.
    pub fn omega_at(&self, t: T) -> OperatorSum<T> {
        self.omegas.iter().fold(OperatorSum::zero(), |acc, o| &acc + &o.evaluate_at(t))
    }

    pub fn omega_dot_at(&self, t: T) -> OperatorSum<T> {
        self.omegas.iter().fold(OperatorSum::zero(), |acc, o| &acc + &o.derivative().evaluate_at(t))
    }
}

/// Incremental state of the construction.
pub struct MagnusState<T: Real> {
    cache: NestedAdjoints<T>,
    pub hbar: Vec<OperatorSum<T>>,
    pub g: Vec<FourierOperator<T>>,
    pub frame_residuals: Vec<T>,
}

impl<T: Real> MagnusState<T> {
    pub fn new(h: &FourierOperator<T>) -> Self {
        Self { cache: NestedAdjoints::new(h.clone()), hbar: Vec::new(), g: Vec::new(), frame_residuals: Vec::new() }
    }

    pub fn omegas(&self) -> &[FourierOperator<T>] {
        &self.cache.omegas
    }

    /// Computes `G_q`, `H̄′_q = avg G_q`, `Ω_{q+1}` and the frame residual.
    pub fn advance_order(&mut self, q: usize) -> Result<()> {
        if q != self.hbar.len() {
            return Err(domain(format!("order {q} advanced out of sequence")));
        }
        let gq = self.cache.gq(q)?;
        let hbar = gq.time_average();
        let osc = gq.oscillating_part();
        let next = osc.antiderivative_zero_start()?.scale(-c_i::<T>());
        let check = gq.sub(&next.derivative().scale(c_i()))?;
        let residual =
            check.oscillating_part().max_abs_coefficient().max((&check.time_average() - &hbar).max_abs_coefficient());
        self.cache.omegas.push(next);
        self.hbar.push(hbar);
        self.g.push(gq);
        self.frame_residuals.push(residual);
        Ok(())
    }

    /// Computes `G_q` with `Ω_{q+1}, … = 0` beyond the advanced orders.
    pub fn truncated_order(&mut self, q: usize) -> Result<FourierOperator<T>> {
        let g = self.cache.gq(q)?;
        if self.g.len() == q {
            self.g.push(g.clone());
        }
        Ok(g)
    }
}

fn factorial<T: Real>(q: usize) -> T {
    (1..=q).fold(T::one(), |f, k| f * T::from_usize_lossy(k))
}

/// `T^q q! c^q λ^q`.
pub fn order_prefactor<T: Real>(config: &MagnusConfig<T>, q: usize) -> T {
    let base = config.period * config.c * config.lambda;
    base.powi(q as i32) * factorial::<T>(q)
}

/// `T^q q! c^q λ^{q+1}`.
pub fn local_norm_bound<T: Real>(config: &MagnusConfig<T>, q: usize) -> T {
    order_prefactor(config, q) * config.lambda
}

/// `λ e √q (T q c λ / e)^q`, the Stirling form of [`local_norm_bound`].
pub fn stirling_local_norm_bound<T: Real>(config: &MagnusConfig<T>, q: usize) -> T {
    let qf = T::from_usize_lossy(q);
    config.lambda * T::e() * qf.sqrt() * (config.period * qf * config.c * config.lambda / T::e()).powi(q as i32)
}

/// Support norms of a periodic operator, summed over harmonics (a bound on `sup_t`).
pub fn fourier_support_norms<T: Real>(f: &FourierOperator<T>) -> Result<SupportNorms<T>> {
    SupportNorms::sum_of(f.harmonics().values())
}

/// Locality certificate of any materialized order: prefactor `T^q q! c^q λ^q`, support `q + 2`.
pub fn order_certificate<T: Real>(
    result: &MagnusResult<T>,
    q: usize,
    lattice: &Lattice,
    config: &MagnusConfig<T>,
    spec: &PowerLawSpec<T>,
) -> Result<CertificateReport<T>> {
    let g = result.g.get(q).ok_or_else(|| domain(format!("order {q} was not materialized")))?;
    certificate_from_norms(&fourier_support_norms(g)?, lattice, &spec.with_k(q + 1), order_prefactor(config, q))
}

/// Runs the construction to `q_max`, materializes `G_q` up to `Q_report` and certifies each order.
pub fn build_effective<T: Real>(
    h: &FourierOperator<T>,
    lattice: &Lattice,
    config: &MagnusConfig<T>,
    spec: &PowerLawSpec<T>,
) -> Result<MagnusResult<T>> {
    if !h.is_hermitian(T::lit(1e3) * T::prune_tolerance()) {
        return Err(domain("drive Hamiltonian is not Hermitian"));
    }
    let period = h.period();
    if (period - config.period).abs() > T::lit(1e-9) * period {
        return Err(domain(format!("config period {} does not match 2π/ω = {period}", config.period)));
    }
    let (auto_q, omega_star) = select_qmax(config)?;
    let q_max = match config.q_max {
        QMax::Fixed(q) if q >= 1 => q,
        QMax::Fixed(_) => return Err(domain("q_max must be at least 1")),
        QMax::Auto => auto_q,
    };
    let report_orders = config.report_orders.unwrap_or(q_max + 2);
    if report_orders < q_max {
        return Err(domain("report_orders must be at least q_max"));
    }

    let mut state = MagnusState::new(h);
    for q in 0..q_max {
        state.advance_order(q)?;
    }
    for q in q_max..=report_orders {
        state.truncated_order(q)?;
    }
    let herm_tol = T::lit(1e3) * T::prune_tolerance();
    for (q, hb) in state.hbar.iter().enumerate() {
        if !hb.is_hermitian(herm_tol) {
            return Err(Error::Accuracy { what: format!("H̄′_{q} lost Hermiticity"), estimate: f64::NAN });
        }
    }
    for (i, o) in state.omegas().iter().enumerate() {
        if !o.is_anti_hermitian(herm_tol) {
            return Err(Error::Accuracy { what: format!("Ω_{} is not anti-Hermitian", i + 1), estimate: f64::NAN });
        }
    }

    let mut certificates = Vec::new();
    for q in 0..q_max {
        let norms = fourier_support_norms(&state.g[q])?;
        let report = certificate_from_norms(&norms, lattice, &spec.with_k(q + 1), order_prefactor(config, q))?;
        certificates.push(OrderCertificate {
            q,
            kind: CertificateKind::OrderBound,
            report,
            local_norm: norms.local_norm(),
            local_norm_bound: local_norm_bound(config, q),
        });
    }
    let kappa_prime = config.kappa_prime();
    let mut tail_norms = Vec::new();
    let mut tail_constant = T::zero();
    for q in q_max..=report_orders {
        let norms = fourier_support_norms(&state.g[q])?;
        let unit = certificate_from_norms(&norms, lattice, &spec.with_k(q + 1), T::one())?;
        tail_constant = tail_constant.max((kappa_prime * T::from_usize_lossy(q)).exp() * unit.required_prefactor());
        tail_norms.push((q, norms));
    }
    let tail_scale = if tail_constant > T::zero() { tail_constant } else { T::one() };
    for (q, norms) in tail_norms {
        let pref = tail_scale * (-kappa_prime * T::from_usize_lossy(q)).exp();
        let report = certificate_from_norms(&norms, lattice, &spec.with_k(q + 1), pref)?;
        certificates.push(OrderCertificate {
            q,
            kind: CertificateKind::Tail,
            report,
            local_norm: norms.local_norm(),
            local_norm_bound: local_norm_bound(config, q),
        });
    }

    let h_star = state.hbar.iter().fold(OperatorSum::zero(), |acc, x| &acc + x);
    let gamma_star = (0..q_max).fold(T::zero(), |s, q| s + order_prefactor(config, q));
    let h_star_certificate =
        certificate_from_norms(&SupportNorms::of(&h_star)?, lattice, &spec.with_k(q_max), gamma_star)?;
    let mut v_prime = FourierOperator::zero(h.omega());
    for q in q_max..=report_orders {
        v_prime = v_prime.add(&state.g[q])?;
    }
    Ok(MagnusResult {
        q_max,
        report_orders,
        omega_star,
        hbar: state.hbar.clone(),
        omegas: state.omegas()[..q_max].to_vec(),
        g: state.g.clone(),
        h_star,
        v_prime,
        frame_residuals: state.frame_residuals.clone(),
        certificates,
        gamma_star,
        h_star_certificate,
        tail_constant,
        kappa_prime,
    })
}

/// `H′(t) − H_*` from the exact frame transformation `H′ = Q†HQ − iQ†∂_tQ`, `Q = e^{Ω(t)}`.
///
/// `∂_tQ` is the Fréchet derivative of the exponential along `∂_tΩ`, evaluated in the
/// eigenbasis of `iΩ` through divided differences.
pub fn residual_drive_exact<T: Real>(
    result: &MagnusResult<T>,
    h: &FourierOperator<T>,
    n_sites: usize,
    t: T,
) -> Result<DenseOperator<T>> {
    let sites: Vec<usize> = (0..n_sites).collect();
    let h_t = to_matrix(&h.evaluate_at(t), &sites)?.matrix;
    let h_star = to_matrix(&result.h_star, &sites)?.matrix;
    let kgen = to_matrix(&result.omega_at(t).scale(c_i()), &sites)?.matrix;
    let omega_dot = to_matrix(&result.omega_dot_at(t), &sites)?.matrix;
    let eig = HermitianEigen::new(&kgen);
    let k = &eig.values;
    let n = k.len();
    let h_e = eig.to_eigenbasis(&h_t);
    let d_e = eig.to_eigenbasis(&omega_dot);
    let two = T::lit(2.0);
    // In the eigenbasis Q = diag(e^{−iκ_j}).
    let hp = CMatrix::from_fn(n, n, |j, l| {
        let rot = h_e[(j, l)] * c_phase(k[j] - k[l]);
        let delta = (k[j] - k[l]) / two;
        let sinc =
            if delta.abs() < T::lit(1e-8) { T::one() - delta * delta / T::lit(6.0) } else { delta.sin() / delta };
        // Q†∂_tQ = e^{iκ_j} Ω̇_{jl} e^{−i(κ_j+κ_l)/2} sinc((κ_j−κ_l)/2)
        let qdq = d_e[(j, l)] * c_phase(delta) * sinc;
        rot - c_i::<T>() * qdq
    });
    let lab = eig.from_eigenbasis(&hp);
    Ok(DenseOperator { matrix: lab - h_star, sites })
}

/// `max_t ‖V′_exact(t)‖` over `samples` equally spaced times in one period.
pub fn max_residual_norm<T: Real>(
    result: &MagnusResult<T>,
    h: &FourierOperator<T>,
    n_sites: usize,
    samples: usize,
) -> Result<T> {
    let period = h.period();
    let mut worst = T::zero();
    for s in 0..samples {
        let t = period * T::from_usize_lossy(s) / T::from_usize_lossy(samples);
        worst = worst.max(residual_drive_exact(result, h, n_sites, t)?.norm());
    }
    Ok(worst)
}

/// Dense `Q(t) = e^{Ω(t)}`.
pub fn frame_rotation<T: Real>(result: &MagnusResult<T>, n_sites: usize, t: T) -> Result<CMatrix<T>> {
    let sites: Vec<usize> = (0..n_sites).collect();
    let kgen = to_matrix(&result.omega_at(t).scale(c_i()), &sites)?.matrix;
    let eig = HermitianEigen::new(&kgen);
    Ok(eig.map_spectrum(|x| c_phase(-x)))
}
