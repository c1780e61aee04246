//! Lieb-Robinson bound evaluators, the time-slicing transform, series oracles and
//! measured commutator light cones.

use crate::error::{domain, resource, Result};
use crate::exact_backend::linalg::{is_hermitian, max_abs_entry, spectral_norm_dense, CMatrix};
use crate::exact_backend::{propagate_converged, to_matrix, DenseFourier, StaticEvolver, FLOQUET_TOLERANCE};
use crate::lattice_ops::{Lattice, SiteSet};
use crate::pauli_algebra::{operator_norm, NormMethod, OperatorSum, Pauli};
use crate::scalar::{c_real, c_zero, cplx, Real, C};
use crate::time_periodic::FourierOperator;
use nalgebra::DMatrix;
use rayon::prelude::*;
use std::fmt;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum BoundKind {
    HastingsKoma,
    Gong,
    GongNoY,
    GongNoYNoX,
    TranKBody,
    TranR0Const,
    Else,
    Conjectured,
}

impl BoundKind {
    pub const ALL: [BoundKind; 8] = [
        BoundKind::HastingsKoma,
        BoundKind::Gong,
        BoundKind::GongNoY,
        BoundKind::GongNoYNoX,
        BoundKind::TranKBody,
        BoundKind::TranR0Const,
        BoundKind::Else,
        BoundKind::Conjectured,
    ];

    pub fn name(self) -> &'static str {
        match self {
            BoundKind::HastingsKoma => "HK",
            BoundKind::Gong => "Gong",
            BoundKind::GongNoY => "GongNoY",
            BoundKind::GongNoYNoX => "GongNoYNoX",
            BoundKind::TranKBody => "TranKBody",
            BoundKind::TranR0Const => "TranR0Const",
            BoundKind::Else => "Else",
            BoundKind::Conjectured => "Conjectured",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|k| k.name().eq_ignore_ascii_case(s))
            .ok_or_else(|| domain(format!("unknown bound kind '{s}'")))
    }

    /// The conjectured form is an assumption, not a theorem.
    pub fn is_conjectural(self) -> bool {
        self == BoundKind::Conjectured
    }

    /// Whether the kind's `α` window admits this `(α, D)`; `Else` also needs a valid `σ` to exist.
    pub fn applicable<T: Real>(self, alpha: T, dimension: usize) -> bool {
        let d = T::from_usize_lossy(dimension);
        match self {
            BoundKind::HastingsKoma | BoundKind::Gong | BoundKind::GongNoY | BoundKind::GongNoYNoX => alpha > d,
            BoundKind::TranKBody | BoundKind::TranR0Const => alpha > d + T::one(),
            BoundKind::Else => alpha > d && (d + T::one()) / (alpha - d + T::one()) < T::one(),
            BoundKind::Conjectured => true,
        }
    }
}

impl fmt::Display for BoundKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Constants of one bound. `c` multiplies `‖A‖‖B‖` and the set-size factors.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundParams<T> {
    pub kind: BoundKind,
    pub alpha: T,
    pub dimension: usize,
    pub c: T,
    pub v: T,
    pub mu: T,
    pub xi: T,
    pub sigma: T,
    pub beta_cone: T,
    pub r0: T,
    pub card_x: T,
    pub card_y: T,
    pub phi: T,
    /// `‖A‖‖B‖`.
    pub norm_product: T,
}

impl<T: Real> BoundParams<T> {
    /// Unit sets, unit norms, `μ = ξ = 1/2`, `σ` at the middle of its window, `β_cone = 1`.
    pub fn new(kind: BoundKind, alpha: T, dimension: usize, c: T, v: T) -> Self {
        let d = T::from_usize_lossy(dimension);
        let sigma_lo = (d + T::one()) / (alpha - d + T::one());
        Self {
            kind,
            alpha,
            dimension,
            c,
            v,
            mu: T::lit(0.5),
            xi: T::lit(0.5),
            sigma: (sigma_lo + T::one()) * T::lit(0.5),
            beta_cone: T::one(),
            r0: T::zero(),
            card_x: T::one(),
            card_y: T::one(),
            phi: T::one(),
            norm_product: T::one(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        let d = T::from_usize_lossy(self.dimension);
        let a = self.alpha;
        let unit = |x: T, name: &str| -> Result<()> {
            if x > T::zero() && x < T::one() {
                Ok(())
            } else {
                Err(domain(format!("{name} = {x} must lie in (0, 1)")))
            }
        };
        if self.c < T::zero() || self.v < T::zero() {
            return Err(domain("C and v must be nonnegative"));
        }
        match self.kind {
            BoundKind::HastingsKoma => {
                if a <= d {
                    return Err(domain(format!("{} requires alpha > D", self.kind)));
                }
            }
            BoundKind::Gong | BoundKind::GongNoY | BoundKind::GongNoYNoX => {
                if a <= d {
                    return Err(domain(format!("{} requires alpha > D", self.kind)));
                }
                unit(self.mu, "mu")?;
            }
            BoundKind::TranKBody | BoundKind::TranR0Const => {
                if a <= d + T::one() {
                    return Err(domain(format!("{} requires alpha > D + 1", self.kind)));
                }
                unit(self.mu, "mu")?;
                unit(self.xi, "xi")?;
            }
            BoundKind::Else => {
                let lo = (d + T::one()) / (a - d + T::one());
                if !(a > d && self.sigma > lo && self.sigma < T::one()) {
                    return Err(domain(format!(
                        "Else requires 1 > sigma > (D+1)/(alpha-D+1) = {lo}, got sigma = {}",
                        self.sigma
                    )));
                }
            }
            BoundKind::Conjectured => {
                if self.beta_cone < T::one() {
                    return Err(domain("Conjectured requires beta_cone >= 1"));
                }
            }
        }
        Ok(())
    }
}

/// Value of the bound at `(t, r)`.
pub fn eval_bound<T: Real>(p: &BoundParams<T>, t: T, r: T) -> Result<T> {
    p.validate()?;
    if t < T::zero() || r <= T::zero() {
        return Err(domain(format!("bounds need t >= 0 and r > 0, got t = {t}, r = {r}")));
    }
    let d = T::from_usize_lossy(p.dimension);
    let a = p.alpha;
    let one = T::one();
    let pre = p.c * p.norm_product;
    let growth = (p.v * t).exp();
    let damp = (one - p.mu).powf(a);
    // t e^{−ξr/t}, continuous at t = 0.
    let slow = |scale: T| if t == T::zero() { T::zero() } else { t * (-scale * r / t).exp() };
    let value = match p.kind {
        BoundKind::HastingsKoma => pre * p.card_x * p.card_y * growth / r.powf(a),
        BoundKind::Gong => pre * p.card_x * p.card_y * growth * (one / ((one - p.mu) * r).powf(a) + (-p.mu * r).exp()),
        BoundKind::GongNoY => pre * p.card_x * (growth / (damp * r.powf(a - d)) + (p.v * t - p.mu * r).exp()),
        BoundKind::GongNoYNoX => pre * p.phi * (growth / (damp * r.powf(a - d - one)) + (p.v * t - p.mu * r).exp()),
        BoundKind::TranKBody => {
            pre * (p.r0 + r).powf(d - one) * (t.powf(a - d) / (damp * r.powf(a - d - one)) + slow(p.xi))
        }
        BoundKind::TranR0Const => pre * (t.powf(a - d) / (damp * r.powf(a - d - d)) + r.powf(d - one) * slow(p.xi)),
        BoundKind::Else => {
            let expo = one + d / (one - p.sigma);
            pre * ((p.v * t - r.powf(one - p.sigma)).exp() + (p.v * t).powf(expo) / r.powf(p.sigma * (a - d)))
        }
        BoundKind::Conjectured => pre * (t.powf(p.beta_cone) / r).powf(a),
    };
    Ok(value)
}

/// Options for constants not fixed by the lattice.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundOptions<T> {
    pub mu: T,
    pub xi: T,
    /// `None` picks the middle of the admissible window.
    pub sigma: Option<T>,
    pub beta_cone: T,
    /// Prefactor of the conjectured form, which has no derivation.
    pub conjectured_c: T,
}

impl<T: Real> Default for BoundOptions<T> {
    fn default() -> Self {
        Self { mu: T::lit(0.5), xi: T::lit(0.5), sigma: None, beta_cone: T::one(), conjectured_c: T::one() }
    }
}

/// Finite-lattice sums used to drop the `|Y|` and `|X|` factors of the Gong bound.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LatticeSums<T> {
    /// `sup_{i,r} r^{α−D} Σ_{j: d(i,j) ≥ r} d(i,j)^{−α}`.
    pub power: T,
    /// `sup_{i,r} Σ_{j: d(i,j) ≥ r} e^{−μ(d(i,j) − r)}`.
    pub exponential: T,
    /// `sup_r max(r^{α−D−1} Σ_{s ≥ 0} (r+s)^{D−α}, Σ_{s ≥ 0} e^{−μs})` over the lattice extent.
    pub depth: T,
}

pub fn lattice_sums<T: Real>(lattice: &Lattice, alpha: T, mu: T) -> Result<LatticeSums<T>> {
    let n = lattice.num_sites();
    let d = T::from_usize_lossy(lattice.dimension());
    let mut power = T::one();
    let mut exponential = T::one();
    for i in 0..n {
        let mut ds: Vec<T> = (0..n).filter(|&j| j != i).map(|j| lattice.distance(i, j)).collect::<Result<_>>()?;
        ds.sort_by(|a, b| a.partial_cmp(b).unwrap());
        for (k, &r) in ds.iter().enumerate() {
            if k > 0 && ds[k - 1] == r {
                continue;
            }
            let tail = &ds[k..];
            let p = tail.iter().fold(T::zero(), |s, &x| s + x.powf(-alpha)) * r.powf(alpha - d);
            let e = tail.iter().fold(T::zero(), |s, &x| s + (-mu * (x - r)).exp());
            power = power.max(p);
            exponential = exponential.max(e);
        }
    }
    let extent = lattice.extents().iter().copied().max().unwrap_or(1);
    let mut depth = (0..extent).fold(T::zero(), |s, k| s + (-mu * T::from_usize_lossy(k)).exp());
    for r in 1..=extent {
        let rf = T::from_usize_lossy(r);
        let s = (0..extent).fold(T::zero(), |s, k| s + (rf + T::from_usize_lossy(k)).powf(d - alpha));
        depth = depth.max(s * rf.powf(alpha - d - T::one()));
    }
    Ok(LatticeSums { power, exponential, depth })
}

/// Hastings-Koma constants for a Hamiltonian in `η·H_α` with two-body supports:
/// `C = 2/K`, `v = 2ηλ₀K`, `K = max(2 + λ₁, λ₀)`.
pub fn hastings_koma_constants<T: Real>(lambda0: T, lambda1: T, eta: T) -> (T, T) {
    let k = (T::lit(2.0) + lambda1).max(lambda0);
    (T::lit(2.0) / k, T::lit(2.0) * eta * lambda0 * k)
}

/// Gong constants `C = 1/(6λ₀)`, `v = 24ηλ₀²`.
pub fn gong_constants<T: Real>(lambda0: T, eta: T) -> (T, T) {
    (T::one() / (T::lit(6.0) * lambda0), T::lit(24.0) * eta * lambda0 * lambda0)
}

/// Largest boundary area of the intermediate balls in the time-slicing argument, divided by `(r₀+r)^{D−1}`.
fn slice_boundary_factor(dimension: usize) -> f64 {
    2.0 * dimension as f64 * 2f64.powi(dimension as i32 - 1)
}

/// Constants for `kind` derived from the lattice, for `A` on `x` and `B` on `y`.
///
/// `eta` is the class prefactor of the Hamiltonian; `norm_product = ‖A‖‖B‖`.
#[allow(clippy::too_many_arguments)]
pub fn from_lattice_constants<T: Real>(
    kind: BoundKind,
    lattice: &Lattice,
    alpha: T,
    eta: T,
    x: &SiteSet,
    y: &SiteSet,
    norm_product: T,
    opts: &BoundOptions<T>,
) -> Result<BoundParams<T>> {
    let dim = lattice.dimension();
    let lc = lattice.constants(alpha)?;
    let (cg, vg) = gong_constants(lc.lambda0, eta);
    let mut p = BoundParams::new(kind, alpha, dim, cg, vg);
    p.mu = opts.mu;
    p.xi = opts.xi;
    if let Some(s) = opts.sigma {
        p.sigma = s;
    }
    p.beta_cone = opts.beta_cone;
    p.card_x = T::from_usize_lossy(x.len());
    p.card_y = T::from_usize_lossy(y.len());
    p.phi = T::from_usize_lossy(lattice.boundary_area(x)?);
    p.r0 = lattice.enclosing_radius(x)?;
    p.norm_product = norm_product;
    let sums = || lattice_sums(lattice, alpha, opts.mu);
    match kind {
        BoundKind::HastingsKoma => {
            let (c, v) = hastings_koma_constants(lc.lambda0, lc.lambda1, eta);
            p.c = c;
            p.v = v;
        }
        BoundKind::Gong | BoundKind::Else => {}
        BoundKind::GongNoY => {
            let s = sums()?;
            p.c = cg * s.power.max(s.exponential);
        }
        BoundKind::GongNoYNoX => {
            let s = sums()?;
            p.c = cg * s.power.max(s.exponential) * s.depth;
        }
        BoundKind::TranKBody | BoundKind::TranR0Const => {
            // Time slices of length τ = 1 over the GongNoYNoX base, with slice length ℓ = ξr/t.
            let s = sums()?;
            let base = cg * s.power.max(s.exponential) * s.depth;
            let d = T::from_usize_lossy(dim);
            let phi_max = T::lit(slice_boundary_factor(dim));
            p.c = T::lit(2.0) * phi_max * base * vg.exp() * opts.xi.powf(-(alpha - d - T::one()));
            p.xi = opts.mu * opts.xi;
        }
        BoundKind::Conjectured => {
            p.c = opts.conjectured_c;
            p.v = T::zero();
        }
    }
    p.validate()?;
    Ok(p)
}

/// One time-slicing step: `2 φ_max (t/τ) f(τ, ξrτ/t)`.
pub fn time_slice_transform<T: Real>(
    base: impl Fn(T, T) -> Result<T>,
    phi_max: T,
    t: T,
    r: T,
    tau: T,
    xi: T,
) -> Result<T> {
    if !(xi > T::zero() && xi < T::one()) {
        return Err(domain(format!("xi = {xi} must lie in (0, 1)")));
    }
    if !(t >= tau && tau > t / r) {
        return Err(domain(format!("time slicing needs t >= tau > t/r, got t = {t}, tau = {tau}, r = {r}")));
    }
    let ell = xi * r * tau / t;
    if ell < T::one() {
        return Err(domain(format!("slice length xi r tau / t = {ell} is below 1")));
    }
    Ok(T::lit(2.0) * phi_max * (t / tau) * base(tau, ell)?)
}

/// Minimum of [`time_slice_transform`] over 64 log-spaced `τ ∈ (t/r, t]`.
pub fn time_slice_minimized<T: Real>(
    base: impl Fn(T, T) -> Result<T>,
    phi_max: T,
    t: T,
    r: T,
    xi: T,
) -> Result<(T, T)> {
    let lo = (t / r).ln();
    let hi = t.ln();
    let mut best: Option<(T, T)> = None;
    for k in 1..=64 {
        let tau = (lo + (hi - lo) * T::from_usize_lossy(k) / T::lit(64.0)).exp().min(t);
        if let Ok(v) = time_slice_transform(&base, phi_max, t, r, tau, xi) {
            if best.is_none_or(|(b, _)| v < b) {
                best = Some((v, tau));
            }
        }
    }
    best.ok_or_else(|| domain("no admissible slice length on the tau grid"))
}

/// Hopping matrix `J_ij = dist^{−α}`, `J_ii = 1`.
pub fn hopping_matrix<T: Real>(lattice: &Lattice, alpha: T) -> Result<DMatrix<T>> {
    let n = lattice.num_sites();
    let mut j = DMatrix::from_element(n, n, T::zero());
    for a in 0..n {
        for b in 0..n {
            j[(a, b)] = if a == b { T::one() } else { lattice.distance::<T>(a, b)?.powf(-alpha) };
        }
    }
    Ok(j)
}

/// `J^k(i,j)`: the `k`-fold convolution, i.e. the `k`-th matrix power.
pub fn hopping_convolution<T: Real>(lattice: &Lattice, alpha: T, k: usize) -> Result<DMatrix<T>> {
    if k == 0 {
        return Err(domain("convolution order must be at least 1"));
    }
    let j = hopping_matrix(lattice, alpha)?;
    let mut out = j.clone();
    for _ in 1..k {
        out = &out * &j;
    }
    Ok(out)
}

/// Exact series brackets against their convolution bounds.
#[derive(Debug, Clone, PartialEq)]
pub struct HkSeries<T> {
    /// `S_k = Σ_{chains Z₁…Z_k} Π ‖h_{Z_m}‖`, `k = 1..=k_max`.
    pub brackets: Vec<T>,
    /// `Σ_{i∈X, j∈Y} λ^k J^k(i,j)` with `λ = ηλ₀`.
    pub convolution: Vec<T>,
    pub lambda: T,
    /// `2‖A‖‖B‖ Σ_k (2t)^k/k! S_k` with unit norms.
    pub series: T,
}

pub const HK_ORACLE_SITES: usize = 6;
pub const HK_ORACLE_ORDER: usize = 4;

/// Partial sums of the Hastings-Koma series by exhaustive chain enumeration.
#[allow(clippy::too_many_arguments)]
pub fn hk_series_oracle<T: Real>(
    h: &OperatorSum<T>,
    lattice: &Lattice,
    alpha: T,
    eta: T,
    x: &SiteSet,
    y: &SiteSet,
    t: T,
    k_max: usize,
) -> Result<HkSeries<T>> {
    if lattice.num_sites() > HK_ORACLE_SITES || k_max > HK_ORACLE_ORDER {
        return Err(resource(format!(
            "series oracle is limited to {HK_ORACLE_SITES} sites and order {HK_ORACLE_ORDER}"
        )));
    }
    let groups: Vec<(u64, T)> = h
        .group_by_support()
        .into_iter()
        .filter(|(m, _)| *m != 0)
        .map(|(m, g)| Ok((m, operator_norm(&g, NormMethod::Exact)?)))
        .collect::<Result<_>>()?;
    let xm = x.iter().fold(0u64, |m, &i| m | 1 << i);
    let ym = y.iter().fold(0u64, |m, &i| m | 1 << i);
    let mut brackets = Vec::with_capacity(k_max);
    for k in 1..=k_max {
        brackets.push(enumerate_chains(&groups, xm, ym, k));
    }
    let lambda = eta * lattice.constants(alpha)?.lambda0;
    let mut convolution = Vec::with_capacity(k_max);
    for k in 1..=k_max {
        let jk = hopping_convolution(lattice, alpha, k)?;
        let s = x.iter().fold(T::zero(), |s, &i| y.iter().fold(s, |s, &j| s + jk[(i, j)]));
        convolution.push(lambda.powi(k as i32) * s);
    }
    let mut series = T::zero();
    let mut term = T::one();
    for (k, b) in brackets.iter().enumerate() {
        term = term * T::lit(2.0) * t / T::from_usize_lossy(k + 1);
        series += term * *b;
    }
    Ok(HkSeries { brackets, convolution, lambda, series: T::lit(2.0) * series })
}

fn enumerate_chains<T: Real>(groups: &[(u64, T)], xm: u64, ym: u64, k: usize) -> T {
    fn rec<T: Real>(groups: &[(u64, T)], prev: u64, weight: T, left: usize, ym: u64) -> T {
        if left == 0 {
            return if prev & ym != 0 { weight } else { T::zero() };
        }
        groups
            .iter()
            .filter(|(m, _)| m & prev != 0)
            .fold(T::zero(), |s, &(m, w)| s + rec(groups, m, weight * w, left - 1, ym))
    }
    groups.iter().filter(|(m, _)| m & xm != 0).fold(T::zero(), |s, &(m, w)| s + rec(groups, m, w, k - 1, ym))
}

/// Measured `‖[A(t), B]‖` at one time and one distance.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConePoint<T> {
    pub t: T,
    pub r: T,
    pub value: T,
}

pub type ConeSeries<T> = Vec<ConePoint<T>>;

/// Hamiltonian driving a commutator measurement.
pub enum ConeHamiltonian<'a, T: Real> {
    Static(&'a OperatorSum<T>),
    Periodic(&'a FourierOperator<T>),
}

/// `‖[A(t), B]‖` for every `B` in `bs` and every time; `times` ascending.
///
/// All operators are realized on sites `0..n_sites`.
pub fn measure_commutators<T: Real>(
    h: ConeHamiltonian<'_, T>,
    lattice: &Lattice,
    a: &OperatorSum<T>,
    bs: &[OperatorSum<T>],
    times: &[T],
) -> Result<ConeSeries<T>> {
    if times.windows(2).any(|w| w[1] < w[0]) || times.first().is_some_and(|&t| t < T::zero()) {
        return Err(domain("measurement times must be nonnegative and ascending"));
    }
    let n = lattice.num_sites();
    let sites: Vec<usize> = (0..n).collect();
    let am = to_matrix(a, &sites)?.matrix;
    let xa = SiteSet::from_mask(a.support_mask());
    let mut distances = Vec::with_capacity(bs.len());
    for b in bs {
        let xb = SiteSet::from_mask(b.support_mask());
        if !xa.is_disjoint(&xb) {
            return Err(domain("A and B must have disjoint supports"));
        }
        distances.push(lattice.set_distance::<T>(&xa, &xb)?);
    }
    let b_ops: Vec<CommutatorTarget<T>> = bs.iter().map(|b| CommutatorTarget::new(b, &sites)).collect::<Result<_>>()?;
    let evolved: Vec<CMatrix<T>> = match h {
        ConeHamiltonian::Static(op) => {
            let ev = StaticEvolver::new(&to_matrix(op, &sites)?);
            let ae = ev.to_eigenbasis(&am);
            times.par_iter().map(|&t| ev.from_eigenbasis(&ev.evolve_in_eigenbasis(&ae, t))).collect()
        }
        ConeHamiltonian::Periodic(f) => {
            let dense = DenseFourier::new(f, &sites)?;
            let mut u = CMatrix::identity(am.nrows(), am.ncols());
            let mut prev = T::zero();
            let mut out = Vec::with_capacity(times.len());
            for &t in times {
                if t > prev {
                    let step = propagate_converged(&dense, prev, t, 4, T::lit(FLOQUET_TOLERANCE))?.0;
                    u = crate::exact_backend::linalg::cmul(&step, &u);
                    prev = t;
                }
                out.push(crate::exact_backend::linalg::cmul(
                    &u.adjoint(),
                    &crate::exact_backend::linalg::cmul(&am, &u),
                ));
            }
            out
        }
    };
    let mut series = Vec::with_capacity(times.len() * bs.len());
    for (ti, at) in evolved.iter().enumerate() {
        let values: Vec<T> = b_ops.par_iter().map(|b| b.commutator_norm(at)).collect();
        for (bi, v) in values.into_iter().enumerate() {
            series.push(ConePoint { t: times[ti], r: distances[bi], value: v });
        }
    }
    Ok(series)
}

/// Single-operator convenience wrapper of [`measure_commutators`].
pub fn measure_commutator<T: Real>(
    h: ConeHamiltonian<'_, T>,
    lattice: &Lattice,
    a: &OperatorSum<T>,
    b: &OperatorSum<T>,
    times: &[T],
) -> Result<ConeSeries<T>> {
    measure_commutators(h, lattice, a, std::slice::from_ref(b), times)
}

/// `B` prepared for repeated commutator norms.
enum CommutatorTarget<T: Real> {
    /// `c·P_s`: the norm is `2|c|` times the largest off-diagonal block of `A` in the eigenbasis of `P_s`.
    SinglePauli {
        bit: usize,
        pauli: Pauli,
        scale: T,
    },
    Dense(CMatrix<T>),
}

impl<T: Real> CommutatorTarget<T> {
    fn new(b: &OperatorSum<T>, sites: &[usize]) -> Result<Self> {
        if b.len() == 1 {
            let (s, c) = b.terms()[0];
            let letters: Vec<(usize, Pauli)> = s.letters().collect();
            if letters.len() == 1 {
                let (site, pauli) = letters[0];
                let pos =
                    sites.iter().position(|&x| x == site).ok_or_else(|| domain("B outside the realized sites"))?;
                return Ok(Self::SinglePauli { bit: sites.len() - 1 - pos, pauli, scale: crate::scalar::c_abs(c) });
            }
        }
        Ok(Self::Dense(to_matrix(b, sites)?.matrix))
    }

    fn commutator_norm(&self, a: &CMatrix<T>) -> T {
        match self {
            Self::Dense(b) => spectral_norm_dense(&(a * b - b * a)),
            Self::SinglePauli { bit, pauli, scale } => {
                // For Hermitian A the two blocks are adjoints of each other.
                let herm = is_hermitian(a, T::lit(1e-10) * max_abs_entry(a));
                let (plus_minus, minus_plus) = off_diagonal_blocks(a, *bit, *pauli, !herm);
                let other = minus_plus.map_or(T::zero(), |m| spectral_norm_dense(&m));
                T::lit(2.0) * *scale * spectral_norm_dense(&plus_minus).max(other)
            }
        }
    }
}

/// Blocks `⟨+|A|−⟩`, `⟨−|A|+⟩` with respect to the eigenbasis of `pauli` on bit `bit`.
fn off_diagonal_blocks<T: Real>(
    a: &CMatrix<T>,
    bit: usize,
    pauli: Pauli,
    both: bool,
) -> (CMatrix<T>, Option<CMatrix<T>>) {
    let half = T::lit(0.5).sqrt();
    // Columns are the +1 and −1 eigenvectors.
    let w: [[C<T>; 2]; 2] = match pauli {
        Pauli::Z => [[c_real(T::one()), c_zero()], [c_zero(), c_real(T::one())]],
        Pauli::X => [[c_real(half), c_real(half)], [c_real(half), c_real(-half)]],
        Pauli::Y => [[c_real(half), c_real(half)], [cplx(T::zero(), half), cplx(T::zero(), -half)]],
    };
    let dim = a.nrows() / 2;
    let low = (1usize << bit) - 1;
    let expand = |u: usize, b: usize| ((u & !low) << 1) | (b << bit) | (u & low);
    let block = |e: usize, f: usize| {
        CMatrix::from_fn(dim, dim, |u, v| {
            let mut s = c_zero();
            for p in 0..2 {
                for q in 0..2 {
                    let coeff = w[p][e].conj() * w[q][f];
                    if coeff != c_zero() {
                        s += coeff * a[(expand(u, p), expand(v, q))];
                    }
                }
            }
            s
        })
    };
    (block(0, 1), both.then(|| block(1, 0)))
}

/// First time each distance reaches `threshold`, linearly interpolated; uncrossed distances are omitted.
pub fn light_cone_contour<T: Real>(series: &[ConePoint<T>], threshold: T) -> Result<Vec<(T, T)>> {
    if threshold <= T::zero() {
        return Err(domain("threshold must be positive"));
    }
    let mut rs: Vec<T> = series.iter().map(|p| p.r).collect();
    rs.sort_by(|a, b| a.partial_cmp(b).unwrap());
    rs.dedup();
    let mut out = Vec::new();
    for r in rs {
        let mut pts: Vec<&ConePoint<T>> = series.iter().filter(|p| p.r == r).collect();
        pts.sort_by(|a, b| a.t.partial_cmp(&b.t).unwrap());
        if let Some(k) = pts.iter().position(|p| p.value >= threshold) {
            let t = if k == 0 {
                pts[0].t
            } else {
                let (a, b) = (pts[k - 1], pts[k]);
                a.t + (b.t - a.t) * (threshold - a.value) / (b.value - a.value)
            };
            out.push((r, t));
        }
    }
    Ok(out)
}

/// Bound values on a grid with the measured values alongside.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DominanceRow<T> {
    pub kind: BoundKind,
    pub t: T,
    pub r: T,
    pub bound: T,
    pub measured: T,
}

impl<T: Real> DominanceRow<T> {
    pub fn dominated(&self) -> bool {
        self.measured <= self.bound
    }
}

pub fn dominance_rows<T: Real>(params: &[BoundParams<T>], series: &[ConePoint<T>]) -> Result<Vec<DominanceRow<T>>> {
    let mut rows = Vec::with_capacity(params.len() * series.len());
    for p in params {
        for pt in series {
            rows.push(DominanceRow {
                kind: p.kind,
                t: pt.t,
                r: pt.r,
                bound: eval_bound(p, pt.t, pt.r)?,
                measured: pt.value,
            });
        }
    }
    Ok(rows)
}
