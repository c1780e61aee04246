//! Dissipative linear response `σ_ij(ω) = ½∫dt e^{iωt}⟨[O_i(t), O_j]⟩_β` and its
//! high-frequency suppression bounds.
//!
//! In the eigenbasis of `H₀`, `σ_ij(ω) = π Σ_{n,m} (p_n − p_m)(O_i)_{nm}(O_j)_{mn} δ(ω − E_m + E_n)`,
//! so absorption (`ω > 0`) is positive on the diagonal.

use crate::error::{domain, Result};
use crate::exact_backend::linalg::{CMatrix, HermitianEigen};
use crate::exact_backend::{boltzmann_weights, to_matrix, MAX_DENSE_SITES};
use crate::lattice_ops::Lattice;
use crate::lieb_robinson::{eval_bound, BoundParams};
use crate::pauli_algebra::{adjoint_power, operator_norm, NormMethod, OperatorSum, DEFAULT_TERM_CAP};
use crate::scalar::{c_phase, c_zero, Real, C};
use rayon::prelude::*;

#[derive(Debug, Clone, PartialEq)]
pub struct ResponseConfig<T: Real> {
    pub beta: T,
    /// Drive operators `O_i`, each labelled by the site it sits on.
    pub drive_sites: Vec<(usize, OperatorSum<T>)>,
    /// Bin edges, strictly increasing.
    pub omega_grid: Vec<T>,
    /// Width used for the Gaussian time-domain check, `δt = 2/δω`.
    pub delta_omega: T,
    /// Orders `k` tried in `min_k (‖ad_H^k O‖/ω^k)²`.
    pub k_grid: Vec<usize>,
    /// Decay exponent used for `κ` and the total-rate bound; `None` skips them.
    pub alpha: Option<T>,
}

impl<T: Real> ResponseConfig<T> {
    /// Uniform bins of width `delta_omega` covering `[lo, hi]`.
    pub fn uniform(beta: T, drive_sites: Vec<(usize, OperatorSum<T>)>, lo: T, hi: T, delta_omega: T) -> Result<Self> {
        if delta_omega <= T::zero() || hi <= lo {
            return Err(domain("uniform bins need delta_omega > 0 and hi > lo"));
        }
        let n = ((hi - lo) / delta_omega).round().to_usize().unwrap_or(0).max(1);
        let omega_grid = (0..=n).map(|b| lo + delta_omega * T::from_usize_lossy(b)).collect();
        Ok(Self { beta, drive_sites, omega_grid, delta_omega, k_grid: (0..=8).collect(), alpha: None })
    }

    pub fn validate(&self) -> Result<()> {
        if self.omega_grid.len() < 2 || self.omega_grid.windows(2).any(|w| w[1] <= w[0]) {
            return Err(domain("bin edges must be strictly increasing with at least one bin"));
        }
        if self.delta_omega <= T::zero() {
            return Err(domain("delta_omega must be positive"));
        }
        if self.beta < T::zero() || !self.beta.is_finite() {
            return Err(domain("beta must be finite and nonnegative"));
        }
        if self.drive_sites.is_empty() {
            return Err(domain("at least one drive operator is required"));
        }
        if self.k_grid.is_empty() {
            return Err(domain("k_grid must not be empty"));
        }
        Ok(())
    }

    pub fn num_bins(&self) -> usize {
        self.omega_grid.len() - 1
    }

    /// Gaussian time window `δt = 2/δω`.
    pub fn broadening(&self) -> T {
        T::lit(2.0) / self.delta_omega
    }

    /// Bin holding `ω` with `e_b < ω ≤ e_{b+1}`; a frequency on an edge goes to the lower bin.
    pub fn bin_of(&self, omega: T) -> Option<usize> {
        let idx = self.omega_grid.partition_point(|&e| e < omega);
        (idx >= 1 && idx < self.omega_grid.len()).then(|| idx - 1)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ResponseResult<T> {
    pub num_ops: usize,
    pub edges: Vec<T>,
    /// `σ_ij([e_b, e_{b+1}])` at index `(i·n + j)·bins + b`.
    pub sigma_binned: Vec<T>,
    /// `π·min_k(‖ad^k O_i‖/ω^k)·min_l(‖ad^l O_j‖/ω^l)` at the lower edge; `None` for `ω ≤ 0`.
    pub per_pair_bound: Vec<Option<T>>,
    /// `‖ad_H^k O_i‖` for each operator and each `k` of the grid.
    pub adjoint_norms: Vec<Vec<(usize, T)>>,
    pub kappa: Option<T>,
    /// `N e^{−(1−D/α)κω}` at each bin's lower edge (constant set to 1).
    pub total_bound: Vec<Option<T>>,
    /// Lattice distance between the operator sites.
    pub distances: Vec<T>,
}

impl<T: Real> ResponseResult<T> {
    pub fn num_bins(&self) -> usize {
        self.edges.len() - 1
    }

    fn index(&self, i: usize, j: usize, b: usize) -> usize {
        (i * self.num_ops + j) * self.num_bins() + b
    }

    pub fn sigma(&self, i: usize, j: usize, b: usize) -> T {
        self.sigma_binned[self.index(i, j, b)]
    }

    pub fn pair_bound(&self, i: usize, j: usize, b: usize) -> Option<T> {
        self.per_pair_bound[self.index(i, j, b)]
    }

    pub fn distance(&self, i: usize, j: usize) -> T {
        self.distances[i * self.num_ops + j]
    }

    pub fn bin_center(&self, b: usize) -> T {
        (self.edges[b] + self.edges[b + 1]) * T::lit(0.5)
    }

    /// Bins with a bound where `|σ_ij|` exceeds it, as `(i, j, b)`.
    pub fn violations(&self, slack: T) -> Vec<(usize, usize, usize)> {
        let mut out = Vec::new();
        for i in 0..self.num_ops {
            for j in 0..self.num_ops {
                for b in 0..self.num_bins() {
                    if let Some(bound) = self.pair_bound(i, j, b) {
                        if self.sigma(i, j, b).abs() > bound * (T::one() + slack) {
                            out.push((i, j, b));
                        }
                    }
                }
            }
        }
        out
    }

    /// Largest violation of `|σ_ij| ≤ (σ_ii + σ_jj)/2` over bins with `ω > 0`.
    pub fn cauchy_schwarz_excess(&self) -> T {
        let mut worst = T::zero();
        for b in 0..self.num_bins() {
            if self.edges[b] < T::zero() {
                continue;
            }
            for i in 0..self.num_ops {
                for j in 0..self.num_ops {
                    let avg = (self.sigma(i, i, b) + self.sigma(j, j, b)) * T::lit(0.5);
                    worst = worst.max(self.sigma(i, j, b).abs() - avg);
                }
            }
        }
        worst
    }

    /// Most negative diagonal value over bins with `ω > 0` (zero if none is negative).
    pub fn min_diagonal_absorption(&self) -> T {
        let mut worst = T::zero();
        for b in 0..self.num_bins() {
            if self.edges[b] < T::zero() {
                continue;
            }
            for i in 0..self.num_ops {
                worst = worst.min(self.sigma(i, i, b));
            }
        }
        worst
    }
}

/// Spectral data shared by the binned response and the time-domain check.
pub struct SpectralResponse<T: Real> {
    pub energies: Vec<T>,
    pub probabilities: Vec<T>,
    /// `O_i` in the eigenbasis of `H₀`.
    pub ops: Vec<CMatrix<T>>,
}

impl<T: Real> SpectralResponse<T> {
    pub fn new(h0: &OperatorSum<T>, lattice: &Lattice, beta: T, ops: &[(usize, OperatorSum<T>)]) -> Result<Self> {
        let n = lattice.num_sites();
        if n > MAX_DENSE_SITES {
            return Err(crate::error::resource(format!("{n} sites exceed the dense cap of {MAX_DENSE_SITES}")));
        }
        let sites: Vec<usize> = (0..n).collect();
        let h = to_matrix(h0, &sites)?;
        if !h.is_hermitian(T::lit(1e-10)) {
            return Err(domain("H0 must be Hermitian"));
        }
        let eig = HermitianEigen::new(&h.matrix);
        let probabilities = boltzmann_weights(&eig.values, beta);
        let ops = ops
            .iter()
            .map(|(s, o)| {
                lattice.check_site(*s)?;
                Ok(eig.to_eigenbasis(&to_matrix(o, &sites)?.matrix))
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self { energies: eig.values, probabilities, ops })
    }

    /// Every transition `(ω = E_m − E_n, π(p_n − p_m) Re[(O_i)_{nm}(O_j)_{mn}])` with nonzero weight.
    pub fn transitions(&self, i: usize, j: usize) -> impl Iterator<Item = (T, T)> + '_ {
        let (a, b) = (&self.ops[i], &self.ops[j]);
        let d = self.energies.len();
        let pi = T::pi();
        (0..d).flat_map(move |n| {
            (0..d).filter_map(move |m| {
                let dp = self.probabilities[n] - self.probabilities[m];
                if dp == T::zero() {
                    return None;
                }
                let w = pi * dp * (a[(n, m)] * b[(m, n)]).re;
                (w != T::zero()).then(|| (self.energies[m] - self.energies[n], w))
            })
        })
    }

    /// `σ_ij` convolved with the normalized Gaussian of standard deviation `√2/δt`.
    pub fn smeared(&self, i: usize, j: usize, omega: T, delta_t: T) -> T {
        let norm = delta_t / (T::lit(2.0) * T::pi().sqrt());
        let quarter = delta_t * delta_t / T::lit(4.0);
        self.transitions(i, j).fold(T::zero(), |s, (w, v)| s + v * norm * (-(omega - w) * (omega - w) * quarter).exp())
    }

    /// `C(t) = Tr(ρ[O_i(t), O_j])` from explicit Heisenberg evolution.
    pub fn commutator_expectation(&self, i: usize, j: usize, t: T) -> C<T> {
        let (a, b) = (&self.ops[i], &self.ops[j]);
        let e = &self.energies;
        let d = e.len();
        let mut acc = c_zero();
        for n in 0..d {
            let mut row = c_zero();
            for m in 0..d {
                // O_i(t)_{nm} = e^{i(E_n − E_m)t}(O_i)_{nm}.
                let at_nm = a[(n, m)] * c_phase((e[n] - e[m]) * t);
                let at_mn = a[(m, n)] * c_phase((e[m] - e[n]) * t);
                row += at_nm * b[(m, n)] - b[(n, m)] * at_mn;
            }
            acc += row * self.probabilities[n];
        }
        acc
    }

    /// `½∫dt e^{iωt} e^{−(t/δt)²} C(t)` by trapezoidal quadrature on `[−8δt, 8δt]`.
    pub fn smeared_time_domain(&self, i: usize, j: usize, omega: T, delta_t: T, points: usize) -> C<T> {
        let points = points.max(3) | 1;
        let span = T::lit(8.0) * delta_t;
        let h = T::lit(2.0) * span / T::from_usize_lossy(points - 1);
        let mut acc = c_zero();
        for k in 0..points {
            let t = -span + h * T::from_usize_lossy(k);
            let w = if k == 0 || k == points - 1 { T::lit(0.5) } else { T::one() };
            let g = (-(t / delta_t) * (t / delta_t)).exp();
            acc += c_phase(omega * t) * self.commutator_expectation(i, j, t) * (w * g);
        }
        acc * (h * T::lit(0.5))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AdjointBound<T> {
    /// `min_k (‖ad_H^k O‖/ω^k)²`.
    pub bound: T,
    pub best_k: usize,
    pub kappa: Option<T>,
    pub norms: Vec<(usize, T)>,
    /// `sup_k ‖ad_H^k O‖/(λ^k k!)` over the grid, when `λ` is known.
    pub measured_c: Option<T>,
}

/// `κ = 2/(λe)`.
pub fn kappa_from_lambda<T: Real>(lambda: T) -> T {
    T::lit(2.0) / (lambda * T::one().exp())
}

/// `‖ad_H^k O‖` for every `k` of the grid, computed exactly.
pub fn adjoint_norms<T: Real>(h: &OperatorSum<T>, o: &OperatorSum<T>, k_grid: &[usize]) -> Result<Vec<(usize, T)>> {
    let mut grid = k_grid.to_vec();
    grid.sort_unstable();
    grid.dedup();
    let mut out = Vec::with_capacity(grid.len());
    let mut cur = o.clone();
    let mut depth = 0;
    for k in grid {
        if k > depth {
            cur = adjoint_power(h, &cur, k - depth, DEFAULT_TERM_CAP)?;
            depth = k;
        }
        out.push((k, operator_norm(&cur, NormMethod::Exact)?));
    }
    Ok(out)
}

fn minimized_factor<T: Real>(norms: &[(usize, T)], omega: T) -> (T, usize) {
    norms.iter().fold((T::max_value().unwrap_or(T::lit(f64::MAX)), 0), |(best, bk), &(k, n)| {
        let v = n / omega.powi(k as i32);
        if v < best {
            (v, k)
        } else {
            (best, bk)
        }
    })
}

/// `min_k (‖ad_H^k O‖/ω^k)²` over `k_grid`, with `κ = 2/(λe)` when `lambda` is given.
pub fn per_pair_exponential_bound<T: Real>(
    h: &OperatorSum<T>,
    o: &OperatorSum<T>,
    omega: T,
    k_grid: &[usize],
    lambda: Option<T>,
) -> Result<AdjointBound<T>> {
    if omega <= T::zero() {
        return Err(domain("the adjoint bound needs omega > 0"));
    }
    if k_grid.is_empty() {
        return Err(domain("k_grid must not be empty"));
    }
    let norms = adjoint_norms(h, o, k_grid)?;
    let (f, best_k) = minimized_factor(&norms, omega);
    let measured_c = lambda.map(|l| {
        norms.iter().fold(T::zero(), |m, &(k, n)| {
            let fact = (1..=k).fold(T::one(), |p, i| p * T::from_usize_lossy(i));
            m.max(n / (l.powi(k as i32) * fact))
        })
    });
    Ok(AdjointBound { bound: f * f, best_k, kappa: lambda.map(kappa_from_lambda), norms, measured_c })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TotalRate<T> {
    /// `N e^{−(1−D/α)κω}`.
    pub value: T,
    /// `r_* = e^{κω/α}`.
    pub r_star: T,
    /// `N/r_*^{α−D}`.
    pub far: T,
    /// `N r_*^D e^{−κω}`.
    pub near: T,
}

/// Extensive heating-rate bound with its constant set to 1.
pub fn total_rate_bound<T: Real>(n: usize, alpha: T, dimension: usize, kappa: T, omega: T) -> Result<TotalRate<T>> {
    let d = T::from_usize_lossy(dimension);
    if alpha <= d {
        return Err(domain(format!("the total rate bound needs alpha > D, got alpha = {alpha}, D = {dimension}")));
    }
    if omega <= T::zero() || kappa <= T::zero() {
        return Err(domain("the total rate bound needs omega > 0 and kappa > 0"));
    }
    let nn = T::from_usize_lossy(n);
    let r_star = (kappa * omega / alpha).exp();
    Ok(TotalRate {
        value: nn * (-(T::one() - d / alpha) * kappa * omega).exp(),
        r_star,
        far: nn / r_star.powf(alpha - d),
        near: nn * r_star.powf(d) * (-kappa * omega).exp(),
    })
}

/// Binned response of every drive pair with the per-pair and total-rate bounds.
pub fn response_binned<T: Real>(
    h0: &OperatorSum<T>,
    lattice: &Lattice,
    config: &ResponseConfig<T>,
) -> Result<ResponseResult<T>> {
    config.validate()?;
    let spec = SpectralResponse::new(h0, lattice, config.beta, &config.drive_sites)?;
    let n_ops = config.drive_sites.len();
    let bins = config.num_bins();
    let pairs: Vec<(usize, usize)> = (0..n_ops).flat_map(|i| (i..n_ops).map(move |j| (i, j))).collect();
    let accumulated: Vec<Vec<T>> = pairs
        .par_iter()
        .map(|&(i, j)| {
            let mut acc = vec![T::zero(); bins];
            for (w, v) in spec.transitions(i, j) {
                if let Some(b) = config.bin_of(w) {
                    acc[b] += v;
                }
            }
            acc
        })
        .collect();
    let mut sigma = vec![T::zero(); n_ops * n_ops * bins];
    for (&(i, j), acc) in pairs.iter().zip(&accumulated) {
        for (b, &v) in acc.iter().enumerate() {
            sigma[(i * n_ops + j) * bins + b] = v;
            sigma[(j * n_ops + i) * bins + b] = v;
        }
    }

    let adjoint: Vec<Vec<(usize, T)>> =
        config.drive_sites.par_iter().map(|(_, o)| adjoint_norms(h0, o, &config.k_grid)).collect::<Result<_>>()?;
    let mut per_pair_bound = vec![None; n_ops * n_ops * bins];
    for b in 0..bins {
        let lo = config.omega_grid[b];
        if lo <= T::zero() {
            continue;
        }
        let factors: Vec<T> = adjoint.iter().map(|a| minimized_factor(a, lo).0).collect();
        for i in 0..n_ops {
            for j in 0..n_ops {
                per_pair_bound[(i * n_ops + j) * bins + b] = Some(T::pi() * factors[i] * factors[j]);
            }
        }
    }

    let kappa = match config.alpha {
        Some(a) if a > T::from_usize_lossy(lattice.dimension()) => {
            Some(kappa_from_lambda(lattice.constants(a)?.lambda))
        }
        _ => None,
    };
    let total_bound = config.omega_grid[..bins]
        .iter()
        .map(|&lo| match (kappa, config.alpha) {
            (Some(k), Some(a)) if lo > T::zero() => {
                total_rate_bound(lattice.num_sites(), a, lattice.dimension(), k, lo).ok().map(|r| r.value)
            }
            _ => None,
        })
        .collect();
    let mut distances = vec![T::zero(); n_ops * n_ops];
    for (i, (si, _)) in config.drive_sites.iter().enumerate() {
        for (j, (sj, _)) in config.drive_sites.iter().enumerate() {
            distances[i * n_ops + j] = lattice.distance(*si, *sj)?;
        }
    }
    Ok(ResponseResult {
        num_ops: n_ops,
        edges: config.omega_grid.clone(),
        sigma_binned: sigma,
        per_pair_bound,
        adjoint_norms: adjoint,
        kappa,
        total_bound,
        distances,
    })
}

/// One point of the Gaussian time-domain cross-check.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CrossCheck<T> {
    pub omega: T,
    pub spectral: T,
    pub time_domain: C<T>,
}

/// Compares the spectral and time-domain Gaussian-smeared `σ_ij` at each `ω`.
pub fn gaussian_cross_check<T: Real>(
    h0: &OperatorSum<T>,
    lattice: &Lattice,
    config: &ResponseConfig<T>,
    i: usize,
    j: usize,
    omegas: &[T],
) -> Result<Vec<CrossCheck<T>>> {
    config.validate()?;
    if i >= config.drive_sites.len() || j >= config.drive_sites.len() {
        return Err(domain("cross-check operator index out of range"));
    }
    let spec = SpectralResponse::new(h0, lattice, config.beta, &config.drive_sites)?;
    let dt = config.broadening();
    Ok(omegas
        .iter()
        .map(|&omega| CrossCheck {
            omega,
            spectral: spec.smeared(i, j, omega, dt),
            time_domain: spec.smeared_time_domain(i, j, omega, dt, 801),
        })
        .collect())
}

/// `½∫dt e^{−(t/δt)²} min(cap, bound(|t|, r))`: dominates the smeared `|σ_ij|` at distance `r`.
pub fn smeared_envelope<T: Real>(params: &BoundParams<T>, r: T, delta_t: T, cap: T, points: usize) -> Result<T> {
    let points = points.max(3) | 1;
    let span = T::lit(8.0) * delta_t;
    let h = span / T::from_usize_lossy(points - 1);
    let mut acc = T::zero();
    for k in 0..points {
        let t = h * T::from_usize_lossy(k);
        let w = if k == 0 || k == points - 1 { T::lit(0.5) } else { T::one() };
        let lr = eval_bound(params, t, r)?.min(cap);
        acc += w * (-(t / delta_t) * (t / delta_t)).exp() * lr;
    }
    // Integrand is even in t; the tail beyond 8δt is below cap·e^{−64}.
    Ok(acc * h + cap * delta_t * T::lit(1e-28))
}
