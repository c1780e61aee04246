//! Subcommands: each builds its tables in memory, then the caller writes them.

use crate::config::{parse_pauli, ExperimentConfig, Family, SchemaError};
use prethermal::bounds_math::{closure_grid, factorial_grid, stirling_grid, tail_grid, tail_inner_grid, LemmaReport};
use prethermal::heating_lab::{frequency_scan, observable_delta, EnvelopeKind, EnvelopeParams, HeatingConfig};
use prethermal::lieb_robinson::{
    eval_bound, from_lattice_constants, gong_constants, measure_commutators, BoundKind, BoundOptions, ConeHamiltonian,
};
use prethermal::linear_response::{response_binned, ResponseConfig};
use prethermal::magnus_engine::{build_effective, max_residual_norm, CertificateKind, MagnusConfig, QMax};
use prethermal::models::{minimal_eta, minimal_eta_static, uniform_field, PowerLawIsing};
use prethermal::scalar::c_real;
use prethermal::{Boundary, FourierOperator, Lattice, OperatorSum, PauliString, PowerLawSpec, SiteSet};
use std::f64::consts::PI;

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum Subcommand {
    Magnus,
    LrScan,
    Response,
    HeatScan,
    Delta,
    Lemmas,
}

impl Subcommand {
    pub fn name(self) -> &'static str {
        match self {
            Subcommand::Magnus => "magnus",
            Subcommand::LrScan => "lr-scan",
            Subcommand::Response => "response",
            Subcommand::HeatScan => "heat-scan",
            Subcommand::Delta => "delta",
            Subcommand::Lemmas => "lemmas",
        }
    }
}

/// One CSV artifact: file name, header and rows of formatted cells.
#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub file: &'static str,
    pub header: Vec<&'static str>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    fn new(file: &'static str, header: Vec<&'static str>) -> Self {
        Self { file, header, rows: Vec::new() }
    }

    fn push(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }
}

/// Shortest round-trip scientific form.
pub fn num(x: f64) -> String {
    format!("{x:e}")
}

fn opt(x: Option<f64>) -> String {
    x.map(num).unwrap_or_default()
}

fn flag(b: bool) -> String {
    b.to_string()
}

/// Checks the parts of the config a given subcommand relies on.
pub fn check(cfg: &ExperimentConfig, sub: Subcommand) -> Result<(), SchemaError> {
    match sub {
        Subcommand::LrScan => cfg.check_sites(&["lr"])?,
        Subcommand::Response => cfg.check_sites(&["response"])?,
        Subcommand::Delta => cfg.check_sites(&["delta"])?,
        _ => {}
    }
    match sub {
        Subcommand::Magnus if cfg.magnus.periods.is_empty() => {
            Err(SchemaError::new("magnus.periods", "needs at least one period"))
        }
        Subcommand::LrScan if cfg.lr.b_sites.is_empty() => {
            Err(SchemaError::new("lr.b_sites", "needs at least one site"))
        }
        Subcommand::HeatScan => {
            if cfg.hamiltonian.family != Family::PowerlawIsing {
                return Err(SchemaError::new("hamiltonian.family", "heat-scan runs the powerlaw_ising family"));
            }
            if cfg.lattice.extents.len() != 1 || cfg.lattice()?.boundary() != Boundary::Open {
                return Err(SchemaError::new("lattice", "heat-scan runs on an open chain"));
            }
            if !cfg.drive.operator.eq_ignore_ascii_case("X") {
                return Err(SchemaError::new("drive.operator", "heat-scan uses the transverse X drive"));
            }
            if cfg.drive.omegas.len() < 4 {
                return Err(SchemaError::new("drive.omegas", "heat-scan needs at least four frequencies"));
            }
            Ok(())
        }
        _ => Ok(()),
    }
}

fn hamiltonian(cfg: &ExperimentConfig, lattice: &Lattice) -> prethermal::Result<OperatorSum<f64>> {
    let h = &cfg.hamiltonian;
    match h.family {
        Family::PowerlawIsing => PowerLawIsing { alpha: h.alpha, j: h.j, hx: h.hx, hz: h.hz }.hamiltonian(lattice),
        Family::Terms => {
            let terms = h
                .terms
                .iter()
                .map(|t| Ok((PauliString::parse(&t.string)?, c_real(t.coefficient))))
                .collect::<prethermal::Result<Vec<_>>>()?;
            Ok(OperatorSum::from_terms(terms))
        }
    }
}

fn driven(
    cfg: &ExperimentConfig,
    lattice: &Lattice,
    h0: &OperatorSum<f64>,
    omega: f64,
) -> prethermal::Result<FourierOperator<f64>> {
    let p = parse_pauli("drive.operator", &cfg.drive.operator).expect("validated");
    let field = uniform_field(lattice, p)?;
    FourierOperator::constant(h0.clone(), omega).add(&FourierOperator::cosine(cfg.drive.g, &field, omega))
}

fn magnus_config(cfg: &ExperimentConfig, period: f64, lambda: f64) -> MagnusConfig<f64> {
    let m = &cfg.magnus;
    let q = if m.q_max == 0 { QMax::Auto } else { QMax::Fixed(m.q_max) };
    let mut mc = MagnusConfig::new(period, lambda, q);
    mc.kappa = m.kappa;
    mc.c = m.c;
    mc.report_orders = Some(m.report_orders);
    mc
}

fn single(lattice: &Lattice, site: usize, letter: &str) -> prethermal::Result<OperatorSum<f64>> {
    lattice.check_site(site)?;
    OperatorSum::single(site, parse_pauli("", letter).expect("validated"), 1.0)
}

pub fn run(cfg: &ExperimentConfig, sub: Subcommand) -> prethermal::Result<Vec<Table>> {
    let lattice = cfg.lattice().map_err(|e| prethermal::Error::Domain(e.to_string()))?;
    match sub {
        Subcommand::Magnus => magnus(cfg, &lattice),
        Subcommand::LrScan => lr_scan(cfg, &lattice),
        Subcommand::Response => response(cfg, &lattice),
        Subcommand::HeatScan => heat_scan(cfg),
        Subcommand::Delta => delta(cfg, &lattice),
        Subcommand::Lemmas => lemmas(cfg),
    }
}

fn magnus(cfg: &ExperimentConfig, lattice: &Lattice) -> prethermal::Result<Vec<Table>> {
    let alpha = cfg.hamiltonian.alpha;
    let h0 = hamiltonian(cfg, lattice)?;
    let lambda = lattice.constants(alpha)?.lambda;
    let n = lattice.num_sites();
    let mut orders = Table::new(
        "magnus_orders.csv",
        vec!["period [1/J]", "q", "certificate", "worst_ratio [1]", "local_norm [J]", "local_norm_bound [J]", "pass"],
    );
    let mut summary = Table::new(
        "magnus_summary.csv",
        vec![
            "period [1/J]",
            "omega [J]",
            "eta [1]",
            "q_max",
            "omega_star [1]",
            "max_frame_residual [J]",
            "max_residual_norm [J]",
            "tail_constant [J]",
            "h_star_pass",
        ],
    );
    for &period in &cfg.magnus.periods {
        let omega = 2.0 * PI / period;
        let h = driven(cfg, lattice, &h0, omega)?;
        let eta = minimal_eta(&h, lattice, alpha, 1)?;
        let spec = PowerLawSpec::new(alpha, eta, lattice.dimension(), 1)?;
        let r = build_effective(&h, lattice, &magnus_config(cfg, period, lambda), &spec)?;
        for c in &r.certificates {
            let kind = match c.kind {
                CertificateKind::OrderBound => "order",
                CertificateKind::Tail => "tail",
            };
            orders.push(vec![
                num(period),
                c.q.to_string(),
                kind.into(),
                num(c.report.worst_ratio()),
                num(c.local_norm.value),
                num(c.local_norm_bound),
                flag(c.report.pass),
            ]);
        }
        let frame = r.frame_residuals.iter().copied().fold(0.0, f64::max);
        let residual = max_residual_norm(&r, &h, n, cfg.magnus.residual_samples)?;
        summary.push(vec![
            num(period),
            num(omega),
            num(eta),
            r.q_max.to_string(),
            num(r.omega_star),
            num(frame),
            num(residual),
            num(r.tail_constant),
            flag(r.h_star_certificate.pass),
        ]);
    }
    Ok(vec![orders, summary])
}

fn lr_kinds(cfg: &ExperimentConfig, dimension: usize) -> Vec<BoundKind> {
    let alpha = cfg.hamiltonian.alpha;
    let explicit = !cfg.lr.kinds.is_empty();
    let kinds: Vec<BoundKind> = if explicit {
        cfg.lr.kinds.iter().map(|k| BoundKind::parse(k).expect("validated")).collect()
    } else {
        BoundKind::ALL.to_vec()
    };
    kinds
        .into_iter()
        .filter(|k| k.applicable(alpha, dimension))
        .filter(|k| explicit || cfg.lr.include_conjectural || !k.is_conjectural())
        .collect()
}

fn lr_scan(cfg: &ExperimentConfig, lattice: &Lattice) -> prethermal::Result<Vec<Table>> {
    let lr = &cfg.lr;
    let alpha = cfg.hamiltonian.alpha;
    let h = hamiltonian(cfg, lattice)?;
    let eta = minimal_eta_static(&h, lattice, alpha, 1)?;
    let a = single(lattice, lr.a_site, &lr.operator)?;
    let bs = lr.b_sites.iter().map(|&b| single(lattice, b, &lr.operator)).collect::<prethermal::Result<Vec<_>>>()?;
    let steps = (lr.t_max / lr.dt).round().max(1.0) as usize;
    let times: Vec<f64> = (1..=steps).map(|k| lr.dt * k as f64).collect();
    let series = measure_commutators(ConeHamiltonian::Static(&h), lattice, &a, &bs, &times)?;
    let opts = BoundOptions {
        mu: lr.mu,
        xi: lr.xi,
        sigma: lr.sigma,
        beta_cone: lr.beta_cone,
        conjectured_c: lr.conjectured_c,
    };
    let mut table = Table::new(
        "lr_scan.csv",
        vec!["kind", "a_site", "b_site", "t [1/J]", "r [sites]", "bound [1]", "measured [1]", "dominated"],
    );
    let x = SiteSet::single(lr.a_site);
    for kind in lr_kinds(cfg, lattice.dimension()) {
        let params = lr
            .b_sites
            .iter()
            .map(|&b| from_lattice_constants(kind, lattice, alpha, eta, &x, &SiteSet::single(b), 1.0, &opts))
            .collect::<prethermal::Result<Vec<_>>>()?;
        for (k, pt) in series.iter().enumerate() {
            let bi = k % bs.len();
            let bound = eval_bound(&params[bi], pt.t, pt.r)?;
            table.push(vec![
                kind.name().into(),
                lr.a_site.to_string(),
                lr.b_sites[bi].to_string(),
                num(pt.t),
                num(pt.r),
                num(bound),
                num(pt.value),
                flag(pt.value <= bound),
            ]);
        }
    }
    Ok(vec![table])
}

fn response(cfg: &ExperimentConfig, lattice: &Lattice) -> prethermal::Result<Vec<Table>> {
    let rs = &cfg.response;
    let h = hamiltonian(cfg, lattice)?;
    let sites: Vec<usize> = if rs.sites.is_empty() { (0..lattice.num_sites()).collect() } else { rs.sites.clone() };
    let ops =
        sites.iter().map(|&i| Ok((i, single(lattice, i, &rs.operator)?))).collect::<prethermal::Result<Vec<_>>>()?;
    let mut rc = ResponseConfig::uniform(rs.beta, ops, rs.lo, rs.hi, rs.delta_omega)?;
    rc.k_grid = (0..=rs.k_max).collect();
    rc.alpha = Some(cfg.hamiltonian.alpha);
    let r = response_binned(&h, lattice, &rc)?;
    let mut table = Table::new(
        "response.csv",
        vec!["i", "j", "r_ij [sites]", "bin_lo [J]", "bin_hi [J]", "sigma [1]", "pair_bound [1]", "dominated"],
    );
    for (a, &i) in sites.iter().enumerate() {
        for (b, &j) in sites.iter().enumerate() {
            for bin in 0..r.num_bins() {
                let s = r.sigma(a, b, bin);
                let bound = r.pair_bound(a, b, bin);
                table.push(vec![
                    i.to_string(),
                    j.to_string(),
                    num(r.distance(a, b)),
                    num(r.edges[bin]),
                    num(r.edges[bin + 1]),
                    num(s),
                    opt(bound),
                    bound.map(|x| flag(s.abs() <= x)).unwrap_or_default(),
                ]);
            }
        }
    }
    Ok(vec![table])
}

fn heat_scan(cfg: &ExperimentConfig) -> prethermal::Result<Vec<Table>> {
    let h = &cfg.hamiltonian;
    let base = HeatingConfig {
        model: PowerLawIsing { alpha: h.alpha, j: h.j, hx: h.hx, hz: h.hz },
        n_sites: cfg.lattice.extents[0],
        g: cfg.drive.g,
        beta: cfg.heating.beta,
        n_periods: cfg.heating.n_periods,
        fraction: cfg.heating.fraction,
    };
    let scan = frequency_scan(&base, &cfg.drive.omegas)?;
    let mut points = Table::new(
        "heat_scan.csv",
        vec!["omega [J]", "t_star [1/J]", "e_initial [J]", "e_infinite [J]", "e_final [J]"],
    );
    for p in &scan.points {
        points.push(vec![num(p.omega), opt(p.t_star), num(p.e_initial), num(p.e_infinite), num(p.e_final)]);
    }
    let mut fit = Table::new(
        "heat_fit.csv",
        vec!["spearman [1]", "intercept [1]", "slope [1/J]", "slope_stderr [1/J]", "points"],
    );
    fit.push(vec![
        opt(scan.spearman),
        opt(scan.fit.map(|f| f.a)),
        opt(scan.fit.map(|f| f.b)),
        opt(scan.fit.map(|f| f.b_stderr)),
        scan.fit.map(|f| f.points.to_string()).unwrap_or_default(),
    ]);
    Ok(vec![points, fit])
}

fn delta(cfg: &ExperimentConfig, lattice: &Lattice) -> prethermal::Result<Vec<Table>> {
    let dl = &cfg.delta;
    let alpha = cfg.hamiltonian.alpha;
    let h0 = hamiltonian(cfg, lattice)?;
    let lc = lattice.constants(alpha)?;
    let h = driven(cfg, lattice, &h0, 2.0 * PI / dl.period)?;
    let eta = minimal_eta(&h, lattice, alpha, 1)?;
    let spec = PowerLawSpec::new(alpha, eta, lattice.dimension(), 1)?;
    let r = build_effective(&h, lattice, &magnus_config(cfg, dl.period, lc.lambda), &spec)?;
    let (_, v) = gong_constants(lc.lambda0, eta);
    let params = EnvelopeParams { alpha, dimension: lattice.dimension(), v, sigma: dl.sigma, beta_cone: dl.beta_cone };
    let kinds: Vec<EnvelopeKind> = dl.kinds.iter().map(|k| EnvelopeKind::parse(k).expect("validated")).collect();
    let o = single(lattice, dl.site, &dl.operator)?;
    let d = observable_delta(&r, &h, &o, lattice.num_sites(), dl.n_periods, &kinds, &params, dl.threshold)?;

    const ENVELOPE_HEADERS: [(&str, EnvelopeKind); 4] = [
        ("gong [1]", EnvelopeKind::Gong),
        ("else [1]", EnvelopeKind::Else),
        ("tran [1]", EnvelopeKind::Tran),
        ("conjectured [1]", EnvelopeKind::Conjectured),
    ];
    let present: Vec<_> = ENVELOPE_HEADERS.iter().filter(|(_, k)| kinds.contains(k)).collect();
    let mut header = vec!["n", "time [1/J]", "delta_norm [1]"];
    header.extend(present.iter().map(|(name, _)| *name));
    let mut trace = Table::new("delta.csv", header);
    for n in 0..d.times.len() {
        let mut row = vec![n.to_string(), num(d.times[n]), num(d.delta_norm[n])];
        for (_, kind) in &present {
            let env = d.envelopes.iter().find(|e| e.kind == *kind);
            row.push(opt(env.and_then(|e| e.calibrated.as_ref()).map(|c| c[n])));
        }
        trace.push(row);
    }
    let mut summary = Table::new("delta_summary.csv", vec!["kind", "calibration_index", "calibrated", "violations"]);
    for (_, kind) in &present {
        let v = d.violations(*kind);
        summary.push(vec![
            kind.name().into(),
            d.calibration_index.map(|i| i.to_string()).unwrap_or_default(),
            flag(v.is_some()),
            v.map(|v| v.len().to_string()).unwrap_or_default(),
        ]);
    }
    Ok(vec![trace, summary])
}

fn lemmas(cfg: &ExperimentConfig) -> prethermal::Result<Vec<Table>> {
    let l = &cfg.lemmas;
    let mut reports: Vec<LemmaReport> = factorial_grid(l.q_max)?;
    reports.extend(stirling_grid(l.q0_max)?);
    reports.extend(tail_grid()?);
    if l.include_inner {
        reports.extend(tail_inner_grid()?);
    }
    reports.extend(closure_grid(l.closure_cases, cfg.seed)?);
    let mut table = Table::new("lemmas.csv", vec!["lemma", "point", "lhs [1]", "rhs [1]", "pass"]);
    for r in reports {
        table.push(vec![r.lemma.into(), r.point, num(r.lhs), num(r.rhs), flag(r.pass)]);
    }
    Ok(vec![table])
}
