//! Driven-dynamics experiments: stroboscopic heating, heating times, frequency scans
//! and the observable difference `δ(nT)` against bound-derived envelopes.

use crate::error::{degenerate, domain, precondition, Result};
use crate::exact_backend::linalg::{cmul, hermitian_eigenvalues, CMatrix, HermitianEigen, UnitaryEigen};
use crate::exact_backend::{floquet_propagator, thermal_from_eigen, to_matrix, FloquetPropagator};
use crate::lattice_ops::Lattice;
use crate::magnus_engine::{frame_rotation, MagnusResult};
use crate::models::{transverse_drive, PowerLawIsing};
use crate::pauli_algebra::{operator_norm, NormMethod, OperatorSum};
use crate::scalar::{c_abs, c_phase, c_real, Real};
use crate::time_periodic::FourierOperator;
use rayon::prelude::*;

/// Steps per period the Floquet integrator starts from before doubling.
pub const DEFAULT_FLOQUET_STEPS: usize = 16;

/// `⟨H₀⟩(nT)` for `n = 0 … n_periods`.
#[derive(Debug, Clone, PartialEq)]
pub struct HeatingTrace<T> {
    pub times: Vec<T>,
    pub energy: Vec<T>,
    pub e_initial: T,
    /// `Tr(H₀)/2^N`.
    pub e_infinite: T,
    pub spectrum_min: T,
    pub spectrum_max: T,
    /// Integrator steps per period after convergence.
    pub floquet_steps: usize,
}

impl<T: Real> HeatingTrace<T> {
    /// Averages over consecutive windows of `w` periods (the last partial window is dropped).
    pub fn windowed(&self, w: usize) -> Vec<T> {
        let w = w.max(1);
        self.energy.chunks_exact(w).map(|c| c.iter().fold(T::zero(), |s, &x| s + x) / T::from_usize_lossy(w)).collect()
    }
}

fn unitary_eigen<T: Real>(f: &FloquetPropagator<T>) -> Result<UnitaryEigen<T>> {
    UnitaryEigen::new(&f.unitary.matrix)
}

/// Stroboscopic evolution of the thermal state of `h0` under the drive `h`.
pub fn run_heating<T: Real>(
    h: &FourierOperator<T>,
    h0: &OperatorSum<T>,
    n_sites: usize,
    beta: T,
    n_periods: usize,
) -> Result<HeatingTrace<T>> {
    let sites: Vec<usize> = (0..n_sites).collect();
    let h0m = to_matrix(h0, &sites)?.matrix;
    let eig = HermitianEigen::new(&h0m);
    let rho = thermal_from_eigen(&eig, beta);
    let d = eig.dim();
    let e_infinite = h0m.trace().re / T::from_usize_lossy(d);
    let floquet = floquet_propagator(h, n_sites, DEFAULT_FLOQUET_STEPS)?;
    let ue = unitary_eigen(&floquet)?;
    let rt = ue.to_eigenbasis(&rho);
    let ht = ue.to_eigenbasis(&h0m);
    // E(n) = Re Σ_kl ρ̃_kl H̃_lk (z_k z̄_l)^n.
    let m = CMatrix::from_fn(d, d, |k, l| rt[(k, l)] * ht[(l, k)]);
    let theta: Vec<T> = ue.values.iter().map(|z| z.im.atan2(z.re)).collect();
    let step = CMatrix::from_fn(d, d, |k, l| c_phase(theta[k] - theta[l]));
    let mut cur = m.clone();
    let mut energy = Vec::with_capacity(n_periods + 1);
    for n in 0..=n_periods {
        if n > 0 {
            if n % 64 == 0 {
                let nn = T::from_usize_lossy(n);
                cur = CMatrix::from_fn(d, d, |k, l| m[(k, l)] * c_phase((theta[k] - theta[l]) * nn));
            } else {
                cur.component_mul_assign(&step);
            }
        }
        energy.push(cur.iter().fold(T::zero(), |s, z| s + z.re));
    }
    let period = floquet.period;
    Ok(HeatingTrace {
        times: (0..=n_periods).map(|n| period * T::from_usize_lossy(n)).collect(),
        e_initial: energy[0],
        energy,
        e_infinite,
        spectrum_min: eig.values[0],
        spectrum_max: eig.values[d - 1],
        floquet_steps: floquet.steps_per_period,
    })
}

/// First time with `(E − e_initial) ≥ fraction·(e_infinite − e_initial)`.
pub fn heating_time<T: Real>(trace: &HeatingTrace<T>, fraction: T) -> Result<Option<T>> {
    if !(fraction > T::zero() && fraction < T::one()) {
        return Err(domain(format!("fraction must lie in (0, 1), got {fraction}")));
    }
    let window = trace.e_infinite - trace.e_initial;
    let scale = T::one().max(trace.e_infinite.abs()).max(trace.e_initial.abs());
    if window.abs() <= T::lit(1e-10) * scale {
        return Err(degenerate("initial and infinite-temperature energies coincide"));
    }
    Ok(trace.energy.iter().position(|&e| (e - trace.e_initial) / window >= fraction).map(|n| trace.times[n]))
}

/// One frequency-scan experiment: benchmark Ising chain with a uniform transverse drive.
#[derive(Debug, Clone, PartialEq)]
pub struct HeatingConfig<T> {
    pub model: PowerLawIsing<T>,
    pub n_sites: usize,
    pub g: T,
    pub beta: T,
    pub n_periods: usize,
    pub fraction: T,
}

impl<T: Real> HeatingConfig<T> {
    pub fn benchmark(alpha: T, n_sites: usize) -> Self {
        Self {
            model: PowerLawIsing::benchmark(alpha),
            n_sites,
            g: T::lit(0.5),
            beta: T::one(),
            n_periods: 2000,
            fraction: T::lit(0.5),
        }
    }

    pub fn trace(&self, omega: T) -> Result<HeatingTrace<T>> {
        let lattice = Lattice::chain(self.n_sites);
        let h0 = self.model.hamiltonian(&lattice)?;
        let h = transverse_drive(&h0, &lattice, self.g, omega)?;
        run_heating(&h, &h0, self.n_sites, self.beta, self.n_periods)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScanPoint<T> {
    pub omega: T,
    pub t_star: Option<T>,
    pub e_initial: T,
    pub e_infinite: T,
    /// Energy at the last recorded period.
    pub e_final: T,
}

/// Least-squares fit `log t_* = a + bω`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LogLinearFit<T> {
    pub a: T,
    pub b: T,
    pub b_stderr: T,
    pub points: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FrequencyScan<T> {
    pub points: Vec<ScanPoint<T>>,
    /// `None` with fewer than 3 crossings.
    pub fit: Option<LogLinearFit<T>>,
    /// Spearman correlation of `(ω, log t_*)` with uncrossed points ranked last.
    pub spearman: Option<T>,
}

/// Ranks starting at 1 with ties sharing their average rank; `None` sorts above every value.
fn average_ranks<T: Real>(v: &[Option<T>]) -> Vec<T> {
    let key = |x: &Option<T>| match x {
        Some(y) => (0u8, *y),
        None => (1u8, T::zero()),
    };
    let mut idx: Vec<usize> = (0..v.len()).collect();
    idx.sort_by(|&i, &j| key(&v[i]).partial_cmp(&key(&v[j])).unwrap_or(std::cmp::Ordering::Equal));
    let mut ranks = vec![T::zero(); v.len()];
    let mut s = 0;
    while s < idx.len() {
        let mut e = s + 1;
        while e < idx.len() && key(&v[idx[e]]) == key(&v[idx[s]]) {
            e += 1;
        }
        let r = T::from_usize_lossy(s + e + 1) / T::lit(2.0);
        for &i in &idx[s..e] {
            ranks[i] = r;
        }
        s = e;
    }
    ranks
}

fn pearson<T: Real>(x: &[T], y: &[T]) -> Option<T> {
    let n = T::from_usize_lossy(x.len());
    let mx = x.iter().fold(T::zero(), |s, &v| s + v) / n;
    let my = y.iter().fold(T::zero(), |s, &v| s + v) / n;
    let (mut sxy, mut sxx, mut syy) = (T::zero(), T::zero(), T::zero());
    for (&a, &b) in x.iter().zip(y) {
        sxy += (a - mx) * (b - my);
        sxx += (a - mx) * (a - mx);
        syy += (b - my) * (b - my);
    }
    (sxx > T::zero() && syy > T::zero()).then(|| sxy / (sxx * syy).sqrt())
}

/// Spearman rank correlation; `None` entries of `y` rank above all finite values.
pub fn spearman<T: Real>(x: &[T], y: &[Option<T>]) -> Option<T> {
    if x.len() != y.len() || x.len() < 2 {
        return None;
    }
    let rx = average_ranks(&x.iter().map(|&v| Some(v)).collect::<Vec<_>>());
    pearson(&rx, &average_ranks(y))
}

/// Ordinary least squares of `y` on `x` with the slope's standard error.
pub fn fit_line<T: Real>(x: &[T], y: &[T]) -> Option<LogLinearFit<T>> {
    let n = x.len();
    if n < 3 || y.len() != n {
        return None;
    }
    let nf = T::from_usize_lossy(n);
    let mx = x.iter().fold(T::zero(), |s, &v| s + v) / nf;
    let my = y.iter().fold(T::zero(), |s, &v| s + v) / nf;
    let sxx = x.iter().fold(T::zero(), |s, &v| s + (v - mx) * (v - mx));
    if sxx <= T::zero() {
        return None;
    }
    let sxy = x.iter().zip(y).fold(T::zero(), |s, (&a, &b)| s + (a - mx) * (b - my));
    let b = sxy / sxx;
    let a = my - b * mx;
    let ssr = x.iter().zip(y).fold(T::zero(), |s, (&u, &v)| s + (v - a - b * u) * (v - a - b * u));
    let b_stderr = (ssr / T::from_usize_lossy(n - 2) / sxx).sqrt();
    Some(LogLinearFit { a, b, b_stderr, points: n })
}

/// Fit and rank statistics for raw `(ω, t_*)` points; points are sorted by `ω`.
pub fn analyze_scan<T: Real>(mut points: Vec<ScanPoint<T>>) -> FrequencyScan<T> {
    points.sort_by(|a, b| a.omega.partial_cmp(&b.omega).unwrap_or(std::cmp::Ordering::Equal));
    let crossed: Vec<(T, T)> = points.iter().filter_map(|p| p.t_star.map(|t| (p.omega, t.ln()))).collect();
    let (xs, ys): (Vec<T>, Vec<T>) = crossed.into_iter().unzip();
    let omegas: Vec<T> = points.iter().map(|p| p.omega).collect();
    let logs: Vec<Option<T>> = points.iter().map(|p| p.t_star.map(|t| t.ln())).collect();
    FrequencyScan { fit: fit_line(&xs, &ys), spearman: spearman(&omegas, &logs), points }
}

/// Heating time at each drive frequency, run in parallel and merged by `ω`.
pub fn frequency_scan<T: Real>(base: &HeatingConfig<T>, omegas: &[T]) -> Result<FrequencyScan<T>> {
    if omegas.len() < 4 {
        return Err(domain(format!("a frequency scan needs at least 4 frequencies, got {}", omegas.len())));
    }
    let mut sorted = omegas.to_vec();
    sorted.sort_by(|a, b| a.partial_cmp(b).unwrap_or(std::cmp::Ordering::Equal));
    let points = sorted
        .par_iter()
        .map(|&omega| {
            let trace = base.trace(omega)?;
            Ok(ScanPoint {
                omega,
                t_star: heating_time(&trace, base.fraction)?,
                e_initial: trace.e_initial,
                e_infinite: trace.e_infinite,
                e_final: *trace.energy.last().expect("trace has n = 0"),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(analyze_scan(points))
}

/// Bound families with a δ envelope.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum EnvelopeKind {
    Gong,
    Else,
    Tran,
    Conjectured,
}

impl EnvelopeKind {
    pub const ALL: [EnvelopeKind; 4] = [Self::Gong, Self::Else, Self::Tran, Self::Conjectured];

    pub fn name(self) -> &'static str {
        match self {
            Self::Gong => "gong",
            Self::Else => "else",
            Self::Tran => "tran",
            Self::Conjectured => "conjectured",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|k| k.name().eq_ignore_ascii_case(s))
            .ok_or_else(|| domain(format!("unknown envelope kind {s:?}")))
    }
}

impl std::fmt::Display for EnvelopeKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EnvelopeParams<T> {
    pub alpha: T,
    pub dimension: usize,
    /// Gong velocity `v`.
    pub v: T,
    /// Else exponent; `None` takes the middle of `((D+1)/(α−D+1), 1)`.
    pub sigma: Option<T>,
    pub beta_cone: T,
}

/// `ξ(x) = 2^x Γ(x)/x`.
pub fn xi_fn<T: Real>(x: T) -> Result<T> {
    if x <= T::zero() {
        return Err(domain("xi needs x > 0"));
    }
    Ok(T::lit(2f64.powf(x.as_f64()) * statrs::function::gamma::gamma(x.as_f64()) / x.as_f64()))
}

/// Time dependence of the envelope of `kind`, without the `C e^{−κ′ω_*}` prefactor.
pub fn envelope_shape<T: Real>(kind: EnvelopeKind, p: &EnvelopeParams<T>, t: T) -> Result<T> {
    Ok(envelope_log_shape(kind, p, t)?.exp())
}

/// Natural log of [`envelope_shape`]; stays finite where the shape itself overflows.
pub fn envelope_log_shape<T: Real>(kind: EnvelopeKind, p: &EnvelopeParams<T>, t: T) -> Result<T> {
    let d = T::from_usize_lossy(p.dimension);
    let a = p.alpha;
    match kind {
        EnvelopeKind::Gong => {
            if a <= d {
                return Err(domain("the Gong envelope needs alpha > D"));
            }
            Ok(T::lit(2.0) * d * p.v * t / a)
        }
        EnvelopeKind::Else => {
            let lo = (d + T::one()) / (a - d + T::one());
            if lo >= T::one() {
                return Err(domain(format!("the Else envelope needs (D+1)/(alpha-D+1) < 1, got {lo}")));
            }
            let sigma = p.sigma.unwrap_or((lo + T::one()) / T::lit(2.0));
            if !(sigma > lo && sigma < T::one()) {
                return Err(domain(format!("sigma = {sigma} must lie in ({lo}, 1)")));
            }
            let x = d / (T::one() - sigma);
            Ok(xi_fn(x)?.ln() + (x + T::one()) * t.ln())
        }
        EnvelopeKind::Tran => {
            if a <= T::lit(3.0) * d {
                return Err(domain(format!("the Tran envelope needs alpha > 3D, got alpha = {a}")));
            }
            Ok((d * (a - d) / (a - T::lit(2.0) * d) + T::one()) * t.ln())
        }
        EnvelopeKind::Conjectured => Ok((p.beta_cone * d + T::one()) * t.ln()),
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Envelope<T> {
    pub kind: EnvelopeKind,
    /// `C e^{−κ′ω_*}·shape(t)` with the construction's tail constant.
    pub raw: Vec<T>,
    /// Rescaled to meet `delta_norm` at the calibration point; `None` if it is never reached.
    pub calibrated: Option<Vec<T>>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DeltaTrace<T> {
    pub times: Vec<T>,
    pub delta_norm: Vec<T>,
    pub envelopes: Vec<Envelope<T>>,
    /// First index with `delta_norm ≥ threshold`.
    pub calibration_index: Option<usize>,
    pub threshold: T,
}

impl<T: Real> DeltaTrace<T> {
    /// Indices from the calibration point on where the calibrated envelope lies below `delta_norm`.
    pub fn violations(&self, kind: EnvelopeKind) -> Option<Vec<usize>> {
        let env = self.envelopes.iter().find(|e| e.kind == kind)?;
        let cal = env.calibrated.as_ref()?;
        let start = self.calibration_index?;
        let slack = T::one() + T::lit(1e-12);
        Some((start..self.times.len()).filter(|&n| self.delta_norm[n] > cal[n] * slack).collect())
    }
}

/// `‖Q(nT)U(nT)†OU(nT)Q(nT)† − e^{inTH_*}Oe^{−inTH_*}‖` for `n = 0 … n_periods`, with the
/// envelopes of `kinds` calibrated at the first crossing of `threshold`.
#[allow(clippy::too_many_arguments)]
pub fn observable_delta<T: Real>(
    result: &MagnusResult<T>,
    h: &FourierOperator<T>,
    o: &OperatorSum<T>,
    n_sites: usize,
    n_periods: usize,
    kinds: &[EnvelopeKind],
    params: &EnvelopeParams<T>,
    threshold: T,
) -> Result<DeltaTrace<T>> {
    if o.support_mask().count_ones() != 1 {
        return Err(precondition("the observable must be supported on a single site"));
    }
    let onorm = operator_norm(o, NormMethod::Exact)?;
    if (onorm - T::one()).abs() > T::lit(1e-10) {
        return Err(precondition(format!("the observable must have unit norm, got {onorm}")));
    }
    for &k in kinds {
        envelope_shape(k, params, T::one())?;
    }
    let sites: Vec<usize> = (0..n_sites).collect();
    let om = to_matrix(o, &sites)?.matrix;
    let floquet = floquet_propagator(h, n_sites, DEFAULT_FLOQUET_STEPS)?;
    let ue = unitary_eigen(&floquet)?;
    // Q(nT) = Q(0); fold it into the Floquet eigenvectors: Q U^{−n}... = (QV) z̄ⁿ V†OV zⁿ (QV)†.
    let q0 = frame_rotation(result, n_sites, T::zero())?;
    let qv = cmul(&q0, &ue.vectors);
    let o_f = ue.to_eigenbasis(&om);
    let hs = HermitianEigen::new(&to_matrix(&result.h_star, &sites)?.matrix);
    let w = hs.vectors_complex();
    let o_s = hs.to_eigenbasis(&om);
    // Work in the H_* eigenbasis: R = W†QV.
    let r = cmul(&w.adjoint(), &qv);
    let period = floquet.period;
    let d = o_f.nrows();
    let theta: Vec<T> = ue.values.iter().map(|z| z.im.atan2(z.re)).collect();
    let delta_norm: Vec<T> = (0..=n_periods)
        .into_par_iter()
        .map(|n| {
            if n == 0 && result.omega_at(T::zero()).is_zero() {
                return T::zero();
            }
            let nn = T::from_usize_lossy(n);
            let t = period * nn;
            // U(nT)†OU(nT) in the Floquet basis: z̄_k^n O_kl z_l^n.
            let a = CMatrix::from_fn(d, d, |k, l| o_f[(k, l)] * c_phase((theta[l] - theta[k]) * nn));
            let a_s = cmul(&r, &cmul(&a, &r.adjoint()));
            let e = &hs.values;
            let diff = CMatrix::from_fn(d, d, |k, l| a_s[(k, l)] - o_s[(k, l)] * c_phase((e[k] - e[l]) * t));
            let herm = (&diff + diff.adjoint()) * c_real(T::lit(0.5));
            hermitian_eigenvalues(&herm).iter().fold(T::zero(), |m, v| m.max(v.abs()))
        })
        .collect();
    let times: Vec<T> = (0..=n_periods).map(|n| period * T::from_usize_lossy(n)).collect();
    let calibration_index = delta_norm.iter().position(|&x| x >= threshold);
    let prefactor = result.tail_constant * (-result.kappa_prime * result.omega_star).exp();
    let envelopes = kinds
        .iter()
        .map(|&kind| {
            let logs = times.iter().map(|&t| envelope_log_shape(kind, params, t)).collect::<Result<Vec<T>>>()?;
            let calibrated = calibration_index.and_then(|c| {
                let lc = logs[c];
                lc.is_finite().then(|| logs.iter().map(|&l| delta_norm[c] * (l - lc).exp()).collect())
            });
            let raw = logs.iter().map(|&l| prefactor * l.exp()).collect();
            Ok(Envelope { kind, raw, calibrated })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(DeltaTrace { times, delta_norm, envelopes, calibration_index, threshold })
}

/// Largest deviation of `δ(0)` from zero, as a sanity check on the frame at `t = 0`.
pub fn initial_frame_defect<T: Real>(result: &MagnusResult<T>, n_sites: usize) -> Result<T> {
    let q0 = frame_rotation(result, n_sites, T::zero())?;
    let d = q0.nrows();
    let id = CMatrix::<T>::identity(d, d);
    Ok((q0 - id).iter().fold(T::zero(), |m, z| m.max(c_abs(*z))))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::magnus_engine::{build_effective, MagnusConfig, QMax};
    use crate::models::minimal_eta;
    use crate::pauli_algebra::{Pauli, PowerLawSpec};

    fn synthetic(e0: f64, einf: f64, tau: f64, n: usize) -> HeatingTrace<f64> {
        let energy: Vec<f64> = (0..=n).map(|k| einf - (einf - e0) * (-(k as f64) / tau).exp()).collect();
        HeatingTrace {
            times: (0..=n).map(|k| k as f64).collect(),
            e_initial: e0,
            energy,
            e_infinite: einf,
            spectrum_min: -10.0,
            spectrum_max: 10.0,
            floquet_steps: 1,
        }
    }

    #[test]
    fn synthetic_crossing() {
        let tr = synthetic(-3.0, 0.0, 40.0, 400);
        let t = heating_time(&tr, 0.5).unwrap().unwrap();
        assert!((t - 40.0 * 2f64.ln()).abs() <= 1.0);
        let mut scaled = tr.clone();
        scaled.times.iter_mut().for_each(|t| *t *= 0.25);
        assert_eq!(heating_time(&scaled, 0.5).unwrap().unwrap(), 0.25 * t);
        assert!(heating_time(&tr, 1.0).is_err());
        let flat = synthetic(-3.0, -3.0, 40.0, 10);
        assert!(matches!(heating_time(&flat, 0.5), Err(crate::error::Error::Degenerate(_))));
    }

    #[test]
    fn undriven_and_infinite_temperature() {
        let l = Lattice::chain(4);
        let h0 = PowerLawIsing::benchmark(3.0).hamiltonian(&l).unwrap();
        let h = transverse_drive(&h0, &l, 0.0, 5.0).unwrap();
        let tr: HeatingTrace<f64> = run_heating(&h, &h0, 4, 1.0, 50).unwrap();
        assert!(tr.energy.iter().all(|&e| (e - tr.e_initial).abs() < 1e-9));
        assert_eq!(heating_time(&tr, 0.5).unwrap(), None);
        let hd = transverse_drive(&h0, &l, 0.5, 5.0).unwrap();
        let tr: HeatingTrace<f64> = run_heating(&hd, &h0, 4, 0.0, 50).unwrap();
        assert!(tr.energy.iter().all(|&e| (e - tr.e_infinite).abs() < 1e-9));
        assert!(heating_time(&tr, 0.5).is_err());
    }

    #[test]
    fn driven_energy_stays_in_spectrum_and_rises() {
        let l = Lattice::chain(6);
        let h0 = PowerLawIsing::benchmark(3.0).hamiltonian(&l).unwrap();
        let h = transverse_drive(&h0, &l, 0.5, 4.0).unwrap();
        let tr: HeatingTrace<f64> = run_heating(&h, &h0, 6, 1.0, 400).unwrap();
        assert!(tr.energy.iter().all(|&e| e >= tr.spectrum_min - 1e-9 && e <= tr.spectrum_max + 1e-9));
        let w = tr.windowed(10);
        assert!(w.last().unwrap() > &w[0]);
        // Matches direct stroboscopic evolution of the density matrix.
        let f = floquet_propagator(&h, 6, DEFAULT_FLOQUET_STEPS).unwrap();
        let sites: Vec<usize> = (0..6).collect();
        let h0m = to_matrix(&h0, &sites).unwrap().matrix;
        let mut rho = thermal_from_eigen(&HermitianEigen::new(&h0m), 1.0);
        let u = &f.unitary.matrix;
        for n in 1..=130 {
            rho = cmul(u, &cmul(&rho, &u.adjoint()));
            if n % 65 == 0 {
                let e = cmul(&rho, &h0m).trace().re;
                assert!((e - tr.energy[n]).abs() < 1e-9, "n = {n}: {e} vs {}", tr.energy[n]);
            }
        }
    }

    #[test]
    fn scan_statistics() {
        let pts: Vec<ScanPoint<f64>> = [4.0, 5.0, 6.0, 7.0]
            .iter()
            .map(|&w| ScanPoint {
                omega: w,
                t_star: Some((2.0f64 * w).exp()),
                e_initial: 0.0,
                e_infinite: 1.0,
                e_final: 1.0,
            })
            .collect();
        let s = analyze_scan(pts.clone());
        let fit = s.fit.unwrap();
        assert!((fit.b - 2.0).abs() < 1e-12 && fit.b_stderr < 1e-6);
        assert!((s.spearman.unwrap() - 1.0).abs() < 1e-12);
        let mut rev = pts.clone();
        rev.reverse();
        assert_eq!(analyze_scan(rev), s);
        let flat: Vec<ScanPoint<f64>> = pts.iter().map(|p| ScanPoint { t_star: Some(3.0), ..*p }).collect();
        assert!(analyze_scan(flat).fit.unwrap().b.abs() < 1e-12);
        let mut censored = pts.clone();
        censored[2].t_star = None;
        censored[3].t_star = None;
        let c = analyze_scan(censored);
        assert!(c.fit.is_none());
        assert!((c.spearman.unwrap() - 0.948_683_298_050_513_8).abs() < 1e-12);
    }

    #[test]
    fn spearman_with_ties() {
        let x = [1.0f64, 2.0, 3.0, 4.0, 5.0, 6.0];
        let y = [Some(3.1), Some(3.8), Some(25.1), Some(320.4), None, None];
        assert!((spearman(&x, &y).unwrap() - 0.985_610_760_609_162_3).abs() < 1e-12);
        assert!(spearman(&x, &[None; 6]).is_none());
    }

    #[test]
    fn scan_needs_four_frequencies() {
        let cfg = HeatingConfig::benchmark(3.0, 4);
        assert!(frequency_scan(&cfg, &[4.0, 5.0, 6.0]).is_err());
    }

    #[test]
    fn envelope_shapes() {
        assert!((xi_fn(2.0f64).unwrap() - 2.0).abs() < 1e-12);
        let p = EnvelopeParams { alpha: 3.0f64, dimension: 1, v: 1.5, sigma: None, beta_cone: 1.0 };
        assert!((envelope_shape(EnvelopeKind::Conjectured, &p, 3.0).unwrap() - 9.0).abs() < 1e-12);
        assert!((envelope_shape(EnvelopeKind::Gong, &p, 3.0).unwrap() - 3f64.exp()).abs() < 1e-12);
        let err = envelope_shape(EnvelopeKind::Tran, &p, 1.0).unwrap_err();
        assert!(err.to_string().contains("alpha > 3D"));
        let tran = EnvelopeParams { alpha: 5.0, ..p };
        assert!((envelope_shape(EnvelopeKind::Tran, &tran, 2.0).unwrap() - 2f64.powf(4.0 / 3.0 + 1.0)).abs() < 1e-12);
        // σ = 5/6 at α = 3, D = 1: x = 6.
        let e = envelope_shape(EnvelopeKind::Else, &p, 1.0).unwrap();
        assert!((e - 64.0 * 120.0 / 6.0).abs() < 1e-9);
        let bad = EnvelopeParams { sigma: Some(0.5), ..p };
        assert!(envelope_shape(EnvelopeKind::Else, &bad, 1.0).unwrap_err().to_string().contains("sigma"));
        let low = EnvelopeParams { alpha: 2.0, ..p };
        assert!(envelope_shape(EnvelopeKind::Else, &low, 1.0).is_err());
    }

    fn magnus(n: usize, g: f64, period: f64) -> (MagnusResult<f64>, FourierOperator<f64>) {
        let l = Lattice::chain(n);
        let h0 = PowerLawIsing::benchmark(3.0).hamiltonian(&l).unwrap();
        let h = transverse_drive(&h0, &l, g, 2.0 * std::f64::consts::PI / period).unwrap();
        let eta = minimal_eta(&h, &l, 3.0, 1).unwrap();
        let spec = PowerLawSpec::new(3.0, eta, 1, 1).unwrap();
        let cfg = MagnusConfig::new(period, l.constants(3.0).unwrap().lambda, QMax::Fixed(2));
        (build_effective(&h, &l, &cfg, &spec).unwrap(), h)
    }

    #[test]
    fn delta_vanishes_without_drive() {
        let (r, h) = magnus(4, 0.0, 0.3);
        let o = OperatorSum::single(1, Pauli::Z, 1.0).unwrap();
        let p = EnvelopeParams { alpha: 3.0, dimension: 1, v: 1.0, sigma: None, beta_cone: 1.0 };
        let d = observable_delta(&r, &h, &o, 4, 30, &[EnvelopeKind::Conjectured], &p, 1e-3).unwrap();
        assert_eq!(d.delta_norm[0], 0.0);
        assert!(d.delta_norm.iter().all(|&x| x < 1e-8));
        assert!(d.calibration_index.is_none());
    }

    #[test]
    fn delta_bounded_and_preconditions() {
        let (r, h) = magnus(4, 0.5, 0.3);
        let o = OperatorSum::single(0, Pauli::X, 1.0).unwrap();
        let p = EnvelopeParams { alpha: 3.0, dimension: 1, v: 1.0, sigma: None, beta_cone: 1.0 };
        let d =
            observable_delta(&r, &h, &o, 4, 60, &[EnvelopeKind::Gong, EnvelopeKind::Conjectured], &p, 1e-3).unwrap();
        assert!(initial_frame_defect(&r, 4).unwrap() < 1e-12);
        assert_eq!(d.delta_norm[0], 0.0);
        assert!(d.delta_norm.iter().all(|&x| x <= 2.0 + 1e-12));
        assert!(d.delta_norm[60] > 0.0);
        let two = OperatorSum::single(0, Pauli::X, 2.0).unwrap();
        assert!(observable_delta(&r, &h, &two, 4, 3, &[], &p, 1e-3).is_err());
        let pair = &o + &OperatorSum::single(1, Pauli::X, 1.0).unwrap();
        assert!(observable_delta(&r, &h, &pair.scale_real(0.5), 4, 3, &[], &p, 1e-3).is_err());
        assert!(observable_delta(&r, &h, &o, 4, 3, &[EnvelopeKind::Tran], &p, 1e-3).is_err());
    }
}
