//! Subcommands: each computes its quantities, judges them against the
//! configured tolerances and writes its files.

use std::collections::BTreeMap;
use std::time::Instant;

use serde::Serialize;
use serde_json::{json, Value};

use qcl_core::dynamics::{OmegaPath, RandomSystem};
use qcl_core::montecarlo::{
    birkhoff_sums, empirical_variance, verify_clt, verify_lclt, verify_ldp, CltReport, SamplePlan,
};
use qcl_core::operator::eigen::ArnoldiOptions;
use qcl_core::operator::{
    equivariant_density, lyapunov_spectrum, pullback_decay_profile, OperatorModel, UlamGrid, UlamOptions,
};
use qcl_core::seed::derive_seed;
use qcl_core::spectral::{
    aperiodicity_diagnostic, degeneracy_verdict, moment_function_montecarlo, moment_function_operator,
    rate_function, variance_from_lambda, variance_series, AperiodicityReport, ConvexFit, LambdaVariance,
    MomentFunction, ThetaGrid, VarianceVerdict,
};
use qcl_core::stats::Estimate;

use crate::config::{ExperimentConfig, PlanConfig};
use crate::output::{Cell, Manifest, OutputDir, Status, TOOL_VERSION};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, clap::ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Command {
    Density,
    Spectrum,
    Lambda,
    Rate,
    Variance,
    Aperiodicity,
    VerifyClt,
    VerifyLdp,
    VerifyLclt,
    All,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::Density => "density",
            Command::Spectrum => "spectrum",
            Command::Lambda => "lambda",
            Command::Rate => "rate",
            Command::Variance => "variance",
            Command::Aperiodicity => "aperiodicity",
            Command::VerifyClt => "verify-clt",
            Command::VerifyLdp => "verify-ldp",
            Command::VerifyLclt => "verify-lclt",
            Command::All => "all",
        }
    }

    const PIPELINE: [Command; 9] = [
        Command::Density,
        Command::Spectrum,
        Command::Lambda,
        Command::Rate,
        Command::Variance,
        Command::Aperiodicity,
        Command::VerifyClt,
        Command::VerifyLdp,
        Command::VerifyLclt,
    ];
}

#[derive(Debug)]
pub enum RunError {
    Core(qcl_core::Error),
    Io(std::io::Error),
}

impl std::fmt::Display for RunError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            RunError::Core(e) => write!(f, "{e}"),
            RunError::Io(e) => write!(f, "i/o: {e}"),
        }
    }
}

impl From<qcl_core::Error> for RunError {
    fn from(e: qcl_core::Error) -> Self {
        RunError::Core(e)
    }
}

impl From<std::io::Error> for RunError {
    fn from(e: std::io::Error) -> Self {
        RunError::Io(e)
    }
}

type Res<T> = Result<T, RunError>;

#[derive(Debug, Clone, Serialize)]
pub struct Check {
    pub name: String,
    pub pass: bool,
    pub value: f64,
    pub threshold: f64,
}

fn check(name: &str, pass: bool, value: f64, threshold: f64) -> Check {
    Check { name: name.to_string(), pass, value, threshold }
}

/// Seeds of every random stream, all derived from the root seed.
#[derive(Debug, Clone, Serialize)]
pub struct Seeds {
    pub root: u64,
    pub omega: u64,
    pub ulam: u64,
    pub arnoldi: u64,
    pub lambda_mc: u64,
    pub series: u64,
    pub empirical: u64,
    pub clt: u64,
    pub ldp: u64,
    pub lclt: u64,
}

impl Seeds {
    fn new(root: u64) -> Self {
        let d = |l: &str| derive_seed(root, l);
        Self {
            root,
            omega: d("omega"),
            ulam: d("ulam"),
            arnoldi: d("arnoldi"),
            lambda_mc: d("lambda-mc"),
            series: d("variance-series"),
            empirical: d("variance-empirical"),
            clt: d("clt"),
            ldp: d("ldp"),
            lclt: d("lclt"),
        }
    }
}

/// `Σ̂²` from the second difference of the operator moment function.
#[derive(Debug, Clone, Serialize)]
pub struct SigmaEstimate {
    pub sigma2: f64,
    pub detail: LambdaVariance,
    pub threshold: f64,
    pub degenerate: bool,
}

impl SigmaEstimate {
    pub fn sigma(&self) -> f64 {
        self.sigma2.max(0.0).sqrt()
    }
}

fn plan(p: &PlanConfig, seed: u64, n: usize) -> SamplePlan {
    SamplePlan { seed, n_samples: p.n_samples, burn_in: p.burn_in, n, batches: p.batches }
}

fn linspace(a: f64, b: f64, n: usize) -> Vec<f64> {
    match n {
        0 => Vec::new(),
        1 => vec![a],
        _ => (0..n).map(|i| a + (b - a) * i as f64 / (n - 1) as f64).collect(),
    }
}

/// One run of the driver: shared state computed on demand plus everything
/// written so far.
pub struct Run<'a> {
    cfg: &'a ExperimentConfig,
    hash: String,
    seeds: Seeds,
    out: OutputDir,
    omega: OmegaPath,
    system: Option<RandomSystem>,
    model: Option<OperatorModel>,
    centering: Option<Value>,
    moment: Option<MomentFunction>,
    sigma: Option<SigmaEstimate>,
    aperiodicity: Option<AperiodicityReport>,
    gates: BTreeMap<String, Value>,
    summary: BTreeMap<String, Status>,
    timings: BTreeMap<String, u128>,
}

enum Outcome {
    Checked(Vec<Check>),
    Refused(String),
}

impl<'a> Run<'a> {
    pub fn new(cfg: &'a ExperimentConfig, out: OutputDir) -> Res<Self> {
        let seeds = Seeds::new(cfg.seed);
        let raw = cfg.build_system()?;
        let omega = raw.path(seeds.omega);
        Ok(Self {
            cfg,
            hash: cfg.hash(),
            seeds,
            out,
            omega,
            system: None,
            model: None,
            centering: None,
            moment: None,
            sigma: None,
            aperiodicity: None,
            gates: BTreeMap::new(),
            summary: BTreeMap::new(),
            timings: BTreeMap::new(),
        })
    }

    fn envelope(&self, command: &str, status: Status, checks: &[Check], details: Value) -> Value {
        json!({
            "command": command,
            "config_hash": self.hash,
            "tool_version": TOOL_VERSION,
            "seeds": self.seeds,
            "status": status,
            "checks": checks,
            "details": details,
        })
    }

    /// Build the operator model and center the observable.
    fn prepare(&mut self) -> Res<()> {
        if self.model.is_some() {
            return Ok(());
        }
        let cfg = self.cfg;
        let raw = cfg.build_system()?;
        let grid = UlamGrid::new(cfg.grid.k)?;
        let opts = UlamOptions { balance: cfg.grid.balance.into(), ..UlamOptions::new(cfg.grid.samples_per_cell, self.seeds.ulam) };
        let mut model = OperatorModel::build(&raw, grid, &opts)?;
        let system = if cfg.observable.center {
            let positions: Vec<i64> = (0..cfg.density.centering_positions as i64).map(|i| 13 * i).collect();
            let c = model.centering(raw.observable(), &self.omega, &positions, cfg.density.n_pullback)?;
            let observable = raw.observable().clone().with_offsets(c.offsets.clone())?;
            self.centering = Some(json!({ "offsets": c.offsets, "max_fiber_mean": c.max_fiber_mean }));
            raw.with_observable(observable)?
        } else {
            self.centering = Some(json!({ "offsets": null }));
            raw
        };
        model.set_observable(system.observable());
        self.system = Some(system);
        self.model = Some(model);
        Ok(())
    }

    fn model(&self) -> &OperatorModel {
        self.model.as_ref().expect("prepared")
    }

    fn system(&self) -> &RandomSystem {
        self.system.as_ref().expect("prepared")
    }

    fn theta_grid(&self) -> Res<Vec<f64>> {
        let l = &self.cfg.lambda;
        let mut thetas = ThetaGrid::new(l.theta_max, l.spacing, l.fd_step, 0.0, 0.0, 0)?.real;
        thetas.extend([l.agreement_theta, -l.agreement_theta]);
        thetas.sort_by(f64::total_cmp);
        thetas.dedup_by(|a, b| (*a - *b).abs() < 1e-12);
        Ok(thetas)
    }

    fn moment(&mut self) -> Res<&MomentFunction> {
        self.prepare()?;
        if self.moment.is_none() {
            let l = &self.cfg.lambda;
            let thetas = self.theta_grid()?;
            let mf = moment_function_operator(self.model(), &self.omega, &thetas, l.n_fibers, l.n_pullback, l.batches)?;
            self.moment = Some(mf);
        }
        Ok(self.moment.as_ref().unwrap())
    }

    /// `Σ̂²`, computed from the stencil points alone unless the full moment
    /// function is already available.
    fn sigma(&mut self) -> Res<SigmaEstimate> {
        if let Some(s) = &self.sigma {
            return Ok(s.clone());
        }
        self.prepare()?;
        let l = &self.cfg.lambda;
        let h = l.fd_step;
        let detail = match &self.moment {
            Some(mf) => variance_from_lambda(mf, h)?,
            None => {
                let thetas: Vec<f64> = [-2.0, -1.0, -0.5, 0.0, 0.5, 1.0, 2.0].iter().map(|k| k * h).collect();
                let mf =
                    moment_function_operator(self.model(), &self.omega, &thetas, l.n_fibers, l.n_pullback, l.batches)?;
                variance_from_lambda(&mf, h)?
            }
        };
        let threshold = self.cfg.variance.degeneracy_threshold;
        let s = SigmaEstimate {
            sigma2: detail.value,
            detail,
            threshold,
            degenerate: degeneracy_verdict(detail.value, threshold) == VarianceVerdict::Degenerate,
        };
        self.gates.insert(
            "variance".into(),
            json!({ "verdict": if s.degenerate { "degenerate" } else { "nondegenerate" }, "sigma2": s.sigma2, "threshold": threshold }),
        );
        self.sigma = Some(s.clone());
        Ok(s)
    }

    fn aperiodicity(&mut self) -> Res<AperiodicityReport> {
        if let Some(r) = &self.aperiodicity {
            return Ok(r.clone());
        }
        self.prepare()?;
        let ap = &self.cfg.aperiodicity;
        let t = linspace(ap.t_min, ap.t_max, ap.n_t);
        let arnoldi = ArnoldiOptions { seed: self.seeds.arnoldi, ..ArnoldiOptions::default() };
        let r = aperiodicity_diagnostic(self.model(), &self.omega, &t, ap.n, ap.periodic_symbol, &arnoldi)?;
        self.gates.insert(
            "aperiodicity".into(),
            json!({ "verdict": if r.passes() { "pass" } else { "fail" }, "failing_t": r.failing_t() }),
        );
        self.aperiodicity = Some(r.clone());
        Ok(r)
    }

    fn refuse_if_degenerate(&mut self) -> Res<Option<String>> {
        let s = self.sigma()?;
        Ok(s.degenerate.then(|| {
            format!("degenerate variance: sigma2 = {:e} below threshold {:e}", s.sigma2, s.threshold)
        }))
    }

    fn density(&mut self) -> Res<Outcome> {
        self.prepare()?;
        let d = &self.cfg.density;
        let model = self.model.as_ref().expect("prepared");
        let hs: Vec<_> = (0..=d.fibers as i64)
            .map(|i| equivariant_density(model, &self.omega.shift(i), d.n_pullback))
            .collect();
        let mut equivariance = 0.0f64;
        let mut buf = vec![0.0; model.grid().cells()];
        for i in 0..d.fibers {
            model.matrix(self.omega.symbol(i as i64)).matrix.push_forward(&hs[i].weights, &mut buf);
            let e: f64 = buf.iter().zip(&hs[i + 1].weights).map(|(a, b)| (a - b).abs()).sum();
            equivariance = equivariance.max(e);
        }
        let min_weight = hs.iter().flat_map(|h| h.weights.iter().copied()).fold(f64::INFINITY, f64::min);
        let mass_defect = hs.iter().map(|h| (h.mass() - 1.0).abs()).fold(0.0, f64::max);
        let profile = pullback_decay_profile(model, &self.omega, d.decay_n_max);
        let max_gap = profile.gaps.iter().map(|g| g.1).fold(0.0, f64::max);
        let mut checks = vec![
            check("nonnegative", min_weight >= 0.0, min_weight, 0.0),
            check("unit_mass", mass_defect < 1e-12, mass_defect, 1e-12),
            check("equivariance", equivariance < d.equivariance_tol, equivariance, d.equivariance_tol),
        ];
        if max_gap < 1e-10 {
            // the starting density is already the fixed point
            checks.push(check("decay_trivial", true, max_gap, 1e-10));
        } else {
            let (slope, r2) = profile.fit.map_or((f64::NAN, f64::NAN), |f| (f.slope, f.r_squared));
            checks.push(check("decay_slope", slope < 0.0, slope, 0.0));
            checks.push(check("decay_r_squared", r2 > d.min_r_squared, r2, d.min_r_squared));
        }
        let rows = hs[0].weights.iter().enumerate().map(|(i, &w)| vec![i.into(), w.into()]).collect();
        self.out.csv("density", "density.csv", &["cell_index", "weight"], rows)?;
        let rows = profile.gaps.iter().map(|&(n, g)| vec![n.into(), g.into()]).collect();
        self.out.csv("density", "decay.csv", &["n", "gap"], rows)?;
        let details = json!({
            "k": model.grid().k(),
            "balanced": model.samples(0).is_balanced(),
            "equivariance_error": equivariance,
            "decay_fit": profile.fit.map(|f| json!({ "slope": f.slope, "intercept": f.intercept, "r_squared": f.r_squared })),
            "decay_envelope": profile.envelope(1).map(|(dd, l)| json!({ "d": dd, "rate": l })),
            "centering": self.centering,
        });
        self.finish_report("density", "density.json", &checks, details)?;
        Ok(Outcome::Checked(checks))
    }

    fn finish_report(&mut self, command: &str, name: &str, checks: &[Check], details: Value) -> Res<()> {
        let status = if checks.iter().all(|c| c.pass) { Status::Pass } else { Status::Fail };
        let body = self.envelope(command, status, checks, details);
        self.out.json(command, name, &body)?;
        Ok(())
    }

    fn spectrum(&mut self) -> Res<Outcome> {
        self.prepare()?;
        let s = &self.cfg.spectrum;
        let r = lyapunov_spectrum(self.model(), &self.omega, s.n_steps, s.exponents, s.reorth_period)?;
        let mut checks = vec![check("top_exponent", r.exponents[0].abs() < s.top_tol, r.exponents[0], s.top_tol)];
        if let Some(&l2) = r.exponents.get(1) {
            checks.push(check("spectral_gap", l2 < s.second_max, l2, s.second_max));
        }
        let rows = r.exponents.iter().enumerate().map(|(i, &l)| vec![(i + 1).into(), l.into()]).collect();
        self.out.csv("spectrum", "spectrum.csv", &["index", "exponent"], rows)?;
        let max_residual = r.residuals.iter().copied().fold(0.0, f64::max);
        let details = json!({ "exponents": r.exponents, "n_steps": r.n_steps, "reorth_period": r.reorth_period, "max_orthogonality_defect": max_residual });
        self.finish_report("spectrum", "spectrum.json", &checks, details)?;
        Ok(Outcome::Checked(checks))
    }

    fn lambda(&mut self) -> Res<Outcome> {
        let l = self.cfg.lambda.clone();
        let op = self.moment()?.clone();
        let thetas = op.theta.clone();
        let p = plan(&l.mc_plan, self.seeds.lambda_mc, l.mc_n);
        let sums = birkhoff_sums(self.system(), &self.omega, &p, &[l.mc_n])?;
        let mc = moment_function_montecarlo(&sums.sums[0], l.mc_n, &thetas);
        let mut checks = Vec::new();
        let at0 = op.value_at(0.0).map_or(f64::NAN, |v| v.0);
        checks.push(check("lambda_zero", at0 == 0.0, at0, 0.0));
        let violations = op.convexity_violations(l.convexity_k);
        checks.push(check("convexity", violations.is_empty(), violations.len() as f64, 0.0));
        let (a, ae) = op.value_at(l.agreement_theta).unwrap_or((f64::NAN, f64::NAN));
        let (b, be) = mc.value_at(l.agreement_theta).unwrap_or((f64::NAN, f64::NAN));
        let tol = (3.0 * (ae * ae + be * be).sqrt()).max(l.agreement_floor);
        checks.push(check("estimator_agreement", (a - b).abs() <= tol, (a - b).abs(), tol));
        let h = l.fd_step;
        let derivative = match (op.value_at(h), op.value_at(-h)) {
            (Some((p, pe)), Some((m, me))) => {
                let d = (p - m) / (2.0 * h);
                let se = (pe * pe + me * me).sqrt() / (2.0 * h);
                Some((d, se))
            }
            _ => None,
        };
        // Λ'(0) is the mean of g, which vanishes only for a centered observable
        if let (Some((d, se)), true) = (derivative, self.cfg.observable.center) {
            checks.push(check("zero_derivative", d.abs() <= 3.0 * se + 1e-12, d.abs(), 3.0 * se));
        }
        let mut rows: Vec<Vec<Cell>> = Vec::new();
        for mf in [&op, &mc] {
            let method = if mf.method == op.method { "operator" } else { "monte_carlo" };
            for i in 0..mf.theta.len() {
                rows.push(vec![method.into(), mf.theta[i].into(), mf.lambda_hat[i].into(), mf.std_err[i].into()]);
            }
        }
        self.out.csv("lambda", "lambda.csv", &["method", "theta", "lambda", "std_err"], rows)?;
        let details = json!({
            "dropped": op.dropped,
            "convexity_violations": violations,
            "derivative_at_zero": derivative.map(|(d, se)| json!({ "value": d, "std_err": se })),
            "mc_n": l.mc_n,
        });
        self.finish_report("lambda", "lambda.json", &checks, details)?;
        Ok(Outcome::Checked(checks))
    }

    fn rate(&mut self) -> Res<Outcome> {
        self.moment()?;
        if let Some(reason) = self.refuse_if_degenerate()? {
            return Ok(Outcome::Refused(reason));
        }
        let sigma = self.sigma()?.sigma();
        let mf = self.moment.clone().expect("computed");
        let window = ConvexFit::from_moment(&mf)?.max_slope();
        let requested: Vec<f64> = self.cfg.rate.eps_over_sigma.iter().map(|f| f * sigma).collect();
        let (eps, outside): (Vec<f64>, Vec<f64>) = requested.iter().partition(|&&e| e < window);
        let rate = rate_function(&mf, &eps)?;
        let c = &rate.c;
        let increasing = c.windows(2).all(|w| w[1] > w[0]);
        let argmax_monotone = rate.legendre_argmax.windows(2).all(|w| w[1] >= w[0] - 1e-12);
        let worst_convexity = eps
            .windows(3)
            .zip(c.windows(3))
            .map(|(e, v)| {
                // divided second difference on a possibly uneven grid
                (v[2] - v[1]) / (e[2] - e[1]) - (v[1] - v[0]) / (e[1] - e[0])
            })
            .fold(f64::INFINITY, f64::min);
        let mut checks = vec![
            check("nonnegative", c.iter().all(|&x| x >= 0.0), c.iter().copied().fold(f64::INFINITY, f64::min), 0.0),
            check("increasing", increasing, 0.0, 0.0),
            check("convex", worst_convexity >= -1e-9, worst_convexity.min(0.0), -1e-9),
            check("argmax_monotone", argmax_monotone, 0.0, 0.0),
        ];
        if let (Some(&e0), Some(&c0)) = (eps.first(), c.first()) {
            // near 0 the rate is ε²/(2Σ²) to leading order
            let ratio = c0 / (e0 * e0 / (2.0 * sigma * sigma));
            checks.push(check("vanishes_quadratically", (0.5..=2.0).contains(&ratio), ratio, 2.0));
        }
        let rows = (0..eps.len())
            .map(|i| vec![eps[i].into(), c[i].into(), rate.legendre_argmax[i].into()])
            .collect();
        self.out.csv("rate", "rate.csv", &["eps", "c", "theta_star"], rows)?;
        let details = json!({ "sigma": sigma, "window": window, "outside_window": outside });
        self.finish_report("rate", "rate.json", &checks, details)?;
        Ok(Outcome::Checked(checks))
    }

    fn variance(&mut self) -> Res<Outcome> {
        let spectral = self.sigma()?;
        let v = self.cfg.variance.clone();
        let series = variance_series(
            self.system(),
            &self.omega,
            v.n_max,
            v.window,
            v.stride,
            &plan(&v.series_plan, self.seeds.series, 1),
        )?;
        let empirical = empirical_variance(self.system(), &self.omega, &plan(&v.empirical_plan, self.seeds.empirical, v.empirical_n))?;
        let estimates: [(&str, Estimate); 3] = [
            ("lambda_second_derivative", Estimate { value: spectral.sigma2, std_err: spectral.detail.std_err }),
            ("autocovariance_series", series.estimate),
            ("empirical", empirical),
        ];
        let rows = estimates.iter().map(|(n, e)| vec![(*n).into(), e.value.into(), e.std_err.into()]).collect();
        self.out.csv("variance", "variance.csv", &["estimator", "value", "std_err"], rows)?;
        let rows = (0..series.autocovariances.len())
            .map(|j| vec![j.into(), series.autocovariances[j].into(), series.cumulative[j].into()])
            .collect();
        self.out.csv("variance", "autocovariance.csv", &["j", "autocovariance", "cumulative"], rows)?;
        let details = json!({
            "estimates": estimates.iter().map(|(n, e)| (n.to_string(), json!(e))).collect::<BTreeMap<_, _>>(),
            "stencil": spectral.detail,
            "verdict": if spectral.degenerate { "degenerate" } else { "nondegenerate" },
            "threshold": spectral.threshold,
        });
        if spectral.degenerate {
            let all_below = estimates.iter().all(|(_, e)| e.value < spectral.threshold);
            let checks = vec![check(
                "all_estimators_degenerate",
                all_below,
                estimates.iter().map(|(_, e)| e.value).fold(f64::NEG_INFINITY, f64::max),
                spectral.threshold,
            )];
            let body = self.envelope("variance", Status::Refused, &checks, details);
            self.out.json("variance", "variance.json", &body)?;
            return Ok(Outcome::Refused(format!(
                "degenerate variance: sigma2 = {:e} below threshold {:e}",
                spectral.sigma2, spectral.threshold
            )));
        }
        let mut checks = Vec::new();
        for i in 0..3 {
            for j in i + 1..3 {
                let (a, b) = (estimates[i].1.value, estimates[j].1.value);
                let rel = (a - b).abs() / a.abs().max(b.abs());
                checks.push(check(&format!("{}_vs_{}", estimates[i].0, estimates[j].0), rel < v.agreement, rel, v.agreement));
            }
        }
        self.finish_report("variance", "variance.json", &checks, details)?;
        Ok(Outcome::Checked(checks))
    }

    fn aperiodicity_cmd(&mut self) -> Res<Outcome> {
        let r = self.aperiodicity()?;
        let rows = r
            .rows
            .iter()
            .map(|row| vec![row.t.into(), row.slope.into(), row.radius.into(), row.pass.into()])
            .collect();
        self.out.csv("aperiodicity", "aperiodicity.csv", &["t", "slope", "radius", "verdict"], rows)?;
        let checks: Vec<Check> = r
            .rows
            .iter()
            .map(|row| check(&format!("t={}", row.t), row.pass, row.radius, 1.0 - qcl_core::spectral::RADIUS_TOL))
            .collect();
        let details = json!({ "report": r });
        self.finish_report("aperiodicity", "aperiodicity.json", &checks, details)?;
        Ok(Outcome::Checked(checks))
    }

    fn path(&self, p: usize) -> OmegaPath {
        if p == 0 {
            self.omega.clone()
        } else {
            self.system().path(derive_seed(self.cfg.seed, &format!("omega/{p}")))
        }
    }

    fn verify_clt(&mut self) -> Res<Outcome> {
        if let Some(reason) = self.refuse_if_degenerate()? {
            return Ok(Outcome::Refused(reason));
        }
        let sigma2 = self.sigma()?.sigma2;
        let c = self.cfg.clt.clone();
        let n_max = *c.ns.iter().max().expect("validated");
        let n_min = *c.ns.iter().min().expect("validated");
        let mut reports: Vec<(usize, Vec<CltReport>)> = Vec::new();
        for p in 0..c.paths {
            let pl = plan(&c.plan, derive_seed(self.seeds.clt, &p.to_string()), n_max);
            let r = verify_clt(self.system(), &self.path(p), &pl, sigma2, self.cfg.variance.degeneracy_threshold, &c.ns)?;
            reports.push((p, r));
        }
        let mut checks = Vec::new();
        let mut last_ks = Vec::new();
        for (p, r) in &reports {
            let first = r.iter().find(|x| x.n == n_min).expect("checkpoint");
            let last = r.iter().find(|x| x.n == n_max).expect("checkpoint");
            checks.push(check(&format!("path{p}_ks"), last.ks < c.ks_tol, last.ks, c.ks_tol));
            let noise = first.ks_noise.max(last.ks_noise);
            checks.push(check(&format!("path{p}_ks_nonincreasing"), last.ks <= first.ks + noise, last.ks - first.ks, noise));
            last_ks.push((last.ks, last.ks_noise));
        }
        if last_ks.len() > 1 {
            let hi = last_ks.iter().map(|x| x.0).fold(f64::NEG_INFINITY, f64::max);
            let lo = last_ks.iter().map(|x| x.0).fold(f64::INFINITY, f64::min);
            let noise = last_ks.iter().map(|x| x.1).fold(0.0, f64::max);
            checks.push(check("paths_agree", hi - lo <= 2.0 * noise, hi - lo, 2.0 * noise));
        }
        let rows = reports
            .iter()
            .flat_map(|(p, r)| {
                r.iter().map(move |x| {
                    vec![(*p).into(), x.n.into(), x.ks.into(), x.ks_noise.into(), x.sample_mean.into(), x.sample_variance.into()]
                })
            })
            .collect();
        self.out.csv("verify-clt", "clt.csv", &["path", "n", "ks", "ks_noise", "sample_mean", "sample_variance"], rows)?;
        let details = json!({ "sigma2": sigma2, "reports": reports.iter().map(|(_, r)| r).collect::<Vec<_>>() });
        self.finish_report("verify-clt", "clt.json", &checks, details)?;
        Ok(Outcome::Checked(checks))
    }

    fn verify_ldp(&mut self) -> Res<Outcome> {
        self.moment()?;
        if let Some(reason) = self.refuse_if_degenerate()? {
            return Ok(Outcome::Refused(reason));
        }
        let sigma = self.sigma()?.sigma();
        let l = self.cfg.ldp.clone();
        let eps: Vec<f64> = l.eps_over_sigma.iter().map(|f| f * sigma).collect();
        let rate = rate_function(self.moment.as_ref().expect("computed"), &eps)?;
        let n_max = *l.ns.iter().max().expect("validated");
        let r = verify_ldp(self.system(), &self.omega, &plan(&l.plan, self.seeds.ldp, n_max), &eps, &l.ns, &rate)?;
        let mut checks = Vec::new();
        for &e in &eps {
            let cells: Vec<_> = r.cells.iter().filter(|c| c.eps == e).collect();
            let label = format!("eps={e:.6}");
            let flagged = cells.iter().filter(|c| c.flagged).count();
            checks.push(check(&format!("{label}_tail_hits"), flagged == 0, flagged as f64, 0.0));
            let res: Vec<f64> = cells.iter().filter_map(|c| c.residual.map(f64::abs)).collect();
            let decreasing = res.len() == cells.len() && res.windows(2).all(|w| w[1] < w[0]);
            checks.push(check(&format!("{label}_residual_decreasing"), decreasing, res.last().copied().unwrap_or(f64::NAN), 0.0));
            let last = cells.last().expect("cells");
            let rel = last.residual.map_or(f64::NAN, |x| x.abs() / last.predicted);
            checks.push(check(&format!("{label}_relative_error"), rel < l.rel_tol, rel, l.rel_tol));
        }
        let rows = r
            .cells
            .iter()
            .map(|c| {
                vec![
                    c.eps.into(),
                    c.n.into(),
                    c.tail_count.into(),
                    c.empirical_rate.into(),
                    c.predicted.into(),
                    c.residual.into(),
                    c.expected_count.into(),
                    c.flagged.then_some("flagged").unwrap_or("").into(),
                ]
            })
            .collect();
        self.out.csv(
            "verify-ldp",
            "ldp.csv",
            &["eps", "n", "tail_count", "empirical_rate", "predicted", "residual", "expected_count", "flag"],
            rows,
        )?;
        let details = json!({ "sigma": sigma, "report": r });
        self.finish_report("verify-ldp", "ldp.json", &checks, details)?;
        Ok(Outcome::Checked(checks))
    }

    fn verify_lclt(&mut self) -> Res<Outcome> {
        let ap = self.aperiodicity()?;
        if !ap.passes() {
            return Ok(Outcome::Refused(format!("aperiodicity failed at t = {:?}", ap.failing_t())));
        }
        if let Some(reason) = self.refuse_if_degenerate()? {
            return Ok(Outcome::Refused(reason));
        }
        let s = self.sigma()?;
        let l = self.cfg.lclt.clone();
        let scale = s.sigma() * (l.n as f64).sqrt();
        let interval = (0.0, l.interval_over_sigma * s.sigma());
        let s_grid: Vec<f64> = l.s_over_scale.iter().map(|f| f * scale).collect();
        let r = verify_lclt(
            self.system(),
            &self.omega,
            &plan(&l.plan, self.seeds.lclt, l.n),
            interval,
            &s_grid,
            s.sigma2,
            s.threshold,
            &ap,
        )?;
        let checks = vec![check("relative_residual", r.relative_residual < l.rel_tol, r.relative_residual, l.rel_tol)];
        let rows = r
            .rows
            .iter()
            .map(|x| vec![x.s.into(), x.empirical.into(), x.predicted.into(), x.std_err.into()])
            .collect();
        self.out.csv("verify-lclt", "lclt.csv", &["s", "empirical", "predicted", "std_err"], rows)?;
        let details = json!({ "report": r });
        self.finish_report("verify-lclt", "lclt.json", &checks, details)?;
        Ok(Outcome::Checked(checks))
    }

    fn dispatch(&mut self, c: Command) -> Res<Outcome> {
        match c {
            Command::Density => self.density(),
            Command::Spectrum => self.spectrum(),
            Command::Lambda => self.lambda(),
            Command::Rate => self.rate(),
            Command::Variance => self.variance(),
            Command::Aperiodicity => self.aperiodicity_cmd(),
            Command::VerifyClt => self.verify_clt(),
            Command::VerifyLdp => self.verify_ldp(),
            Command::VerifyLclt => self.verify_lclt(),
            Command::All => unreachable!("expanded by the caller"),
        }
    }

    fn run_one(&mut self, c: Command) -> Status {
        let start = Instant::now();
        let status = match self.dispatch(c) {
            Ok(Outcome::Checked(checks)) => {
                let failed: Vec<&str> = checks.iter().filter(|k| !k.pass).map(|k| k.name.as_str()).collect();
                if failed.is_empty() {
                    eprintln!("qcl {}: pass", c.name());
                    Status::Pass
                } else {
                    eprintln!("qcl {}: FAIL ({})", c.name(), failed.join(", "));
                    Status::Fail
                }
            }
            Ok(Outcome::Refused(reason)) => {
                eprintln!("qcl {}: refused: {reason}", c.name());
                Status::Refused
            }
            Err(e) => {
                eprintln!("qcl {}: error: {e}", c.name());
                Status::Error
            }
        };
        self.timings.insert(c.name().to_string(), start.elapsed().as_millis());
        self.summary.insert(c.name().to_string(), status);
        status
    }

    /// Run `command` (the whole pipeline for `all`), write the verdict file
    /// and the manifest, and return the exit code.
    pub fn execute(mut self, command: Command) -> Res<(i32, Manifest)> {
        self.out.text("config", "config.json", &self.cfg.canonical_json())?;
        let commands: Vec<Command> = if command == Command::All { Command::PIPELINE.to_vec() } else { vec![command] };
        for c in commands {
            self.run_one(c);
        }
        if !self.gates.is_empty() {
            let body = json!({ "config_hash": self.hash, "tool_version": TOOL_VERSION, "gates": self.gates });
            self.out.json("verdict", "verdict.json", &body)?;
        }
        let statuses: Vec<Status> = self.summary.values().copied().collect();
        let code = if statuses.contains(&Status::Refused) {
            3
        } else if statuses.iter().any(|s| matches!(s, Status::Fail | Status::Error)) {
            1
        } else {
            0
        };
        let manifest = Manifest {
            config_hash: self.hash.clone(),
            tool_version: TOOL_VERSION.to_string(),
            command: command.name().to_string(),
            exit_code: code,
            files: self.out.files().clone(),
            timings_ms: self.timings.clone(),
            summary: self.summary.clone(),
        };
        std::fs::write(self.out.root().join("manifest.json"), crate::output::sorted_json(&manifest))?;
        Ok((code, manifest))
    }
}
