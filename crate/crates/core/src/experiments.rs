//! End-to-end experiment pipelines with on-disk reports.

use std::collections::BTreeMap;
use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::function_spaces::{Projector, SpaceKind, TestSpace};
use crate::gauss_newton::{self, interval_endpoints, square_boundary, KktRoute, KktSolver, SolverConfig};
use crate::grid::{Grid, GridFunction};
use crate::kernels::{KernelGrid, KernelSpec};
use crate::metrics::{fit_rate, rel_l2_error, space_time_l2_error, sup_error};
use crate::noise::{sample_white_noise_spectral, NoiseMode, NoisePath};
use crate::operators::OperatorSpec;
use crate::reference::{
    closed_form_elliptic_1d, manufactured_semilinear_2d, sine_series_on_grid, spectral_galerkin_spde,
};
use crate::seminorm::SeminormContext;
use crate::spde::{integrate, SpdeConfig, SpdeFamily};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExperimentKind {
    Elliptic1d,
    Semilinear2d,
    NormStudy,
    Heat,
    AllenCahn,
    RateStudy,
}

impl ExperimentKind {
    pub const ALL: [ExperimentKind; 6] = [
        ExperimentKind::Elliptic1d,
        ExperimentKind::Semilinear2d,
        ExperimentKind::NormStudy,
        ExperimentKind::Heat,
        ExperimentKind::AllenCahn,
        ExperimentKind::RateStudy,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ExperimentKind::Elliptic1d => "elliptic1d",
            ExperimentKind::Semilinear2d => "semilinear2d",
            ExperimentKind::NormStudy => "norm_study",
            ExperimentKind::Heat => "heat",
            ExperimentKind::AllenCahn => "allen_cahn",
            ExperimentKind::RateStudy => "rate_study",
        }
    }

    pub fn parse(name: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|k| k.name() == name)
            .ok_or_else(|| Error::Config(format!("unknown experiment `{name}`")))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Elliptic1dParams {
    pub n: usize,
    pub modes: usize,
    pub nu: f64,
    pub gamma: f64,
    pub s: f64,
    pub length_scale: f64,
    pub grid_intervals: usize,
    /// Also solve with the pointwise residual loss.
    pub pointwise: bool,
    pub max_error: f64,
    pub min_pointwise_ratio: f64,
}

impl Default for Elliptic1dParams {
    fn default() -> Self {
        Elliptic1dParams {
            n: 1024,
            modes: 1 << 14,
            nu: 0.01,
            gamma: 1e-12,
            s: 1.0,
            length_scale: 0.2,
            grid_intervals: 1 << 12,
            pointwise: true,
            max_error: 1e-3,
            min_pointwise_ratio: 50.0,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Semilinear2dParams {
    pub per_dim: usize,
    pub eps: f64,
    pub nu: f64,
    pub gamma: f64,
    pub s: f64,
    pub length_scale: f64,
    /// Quadrature grid of the solver.
    pub grid_intervals: usize,
    /// Grid carrying the manufactured data.
    pub data_intervals: usize,
    pub modes: usize,
    pub max_iterations: usize,
    pub max_error: f64,
    pub iteration_budget: usize,
}

impl Default for Semilinear2dParams {
    fn default() -> Self {
        Semilinear2dParams {
            per_dim: 32,
            eps: 0.15,
            nu: 0.1,
            gamma: 1e-8,
            s: 1.0,
            length_scale: 0.2,
            grid_intervals: 1 << 7,
            data_intervals: 1 << 9,
            modes: 1 << 8,
            max_iterations: 20,
            max_error: 0.15,
            iteration_budget: 10,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NormStudyParams {
    #[serde(flatten)]
    pub problem: Semilinear2dParams,
    pub exponents: Vec<f64>,
    pub expected_argmin: f64,
}

impl Default for NormStudyParams {
    fn default() -> Self {
        NormStudyParams {
            problem: Semilinear2dParams {
                eps: 0.0,
                ..Semilinear2dParams::default()
            },
            exponents: vec![0.0, 0.5, 1.0, 1.1, 2.0],
            expected_argmin: 1.1,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SpdeParams {
    #[serde(flatten)]
    pub run: SpdeConfig,
    /// Reference step is `dt / aggregation`.
    pub aggregation: u64,
    pub modes: usize,
    pub seeds: usize,
    pub max_error: f64,
}

impl SpdeParams {
    pub fn heat() -> Self {
        SpdeParams {
            run: SpdeConfig::heat(),
            aggregation: 8,
            modes: 1 << 11,
            seeds: 3,
            max_error: 5e-2,
        }
    }

    pub fn allen_cahn() -> Self {
        SpdeParams {
            run: SpdeConfig::allen_cahn(),
            aggregation: 4,
            modes: 1 << 11,
            seeds: 3,
            max_error: 1e-1,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RateStudyParams {
    pub n: usize,
    pub nu: f64,
    pub s: f64,
    pub length_scale: f64,
    pub grid_intervals: usize,
    pub gammas: Vec<f64>,
    pub slope_range: [f64; 2],
    pub min_r_squared: f64,
}

impl Default for RateStudyParams {
    fn default() -> Self {
        RateStudyParams {
            n: 16,
            nu: 1.0,
            s: 1.0,
            length_scale: 0.2,
            grid_intervals: 1 << 10,
            gammas: vec![1e-2, 1e-3, 1e-4, 1e-5, 1e-6, 1e-7],
            slope_range: [1.7, 2.3],
            min_r_squared: 0.95,
        }
    }
}

/// A parsed experiment file. Only the section of the selected experiment
/// is used; missing fields take their desk-scale defaults.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ExperimentConfig {
    pub experiment: ExperimentKind,
    pub seed: u64,
    pub full_scale: bool,
    pub elliptic1d: Elliptic1dParams,
    pub semilinear2d: Semilinear2dParams,
    pub norm_study: NormStudyParams,
    pub heat: SpdeParams,
    pub allen_cahn: SpdeParams,
    pub rate_study: RateStudyParams,
}

/// Overlays `over` onto `base`, rejecting keys that `base` lacks.
fn merge(base: &mut toml::Value, over: &toml::Value, path: &str) -> Result<()> {
    match (base, over) {
        (toml::Value::Table(b), toml::Value::Table(o)) => {
            for (k, v) in o {
                let here = format!("{path}.{k}");
                match b.get_mut(k) {
                    Some(slot) => merge(slot, v, &here)?,
                    None => return Err(Error::Config(format!("unknown key `{}`", &here[1..]))),
                }
            }
            Ok(())
        }
        (b @ toml::Value::Float(_), toml::Value::Integer(i)) => {
            *b = toml::Value::Float(*i as f64);
            Ok(())
        }
        (b, o) => {
            *b = o.clone();
            Ok(())
        }
    }
}

fn section<T: Serialize + serde::de::DeserializeOwned>(
    default: T,
    over: Option<&toml::Value>,
    name: &str,
) -> Result<T> {
    let Some(over) = over else { return Ok(default) };
    let mut v = toml::Value::try_from(&default).map_err(|e| Error::Config(e.to_string()))?;
    merge(&mut v, over, &format!(".{name}"))?;
    v.try_into()
        .map_err(|e: toml::de::Error| Error::Config(format!("[{name}] {e}")))
}

impl ExperimentConfig {
    pub fn new(experiment: ExperimentKind, seed: u64) -> Self {
        ExperimentConfig {
            experiment,
            seed,
            full_scale: false,
            elliptic1d: Elliptic1dParams::default(),
            semilinear2d: Semilinear2dParams::default(),
            norm_study: NormStudyParams::default(),
            heat: SpdeParams::heat(),
            allen_cahn: SpdeParams::allen_cahn(),
            rate_study: RateStudyParams::default(),
        }
    }

    pub fn from_toml(text: &str) -> Result<Self> {
        let mut table: toml::Table = text
            .parse()
            .map_err(|e: toml::de::Error| Error::Config(e.to_string()))?;
        let experiment = match table.remove("experiment") {
            Some(toml::Value::String(name)) => ExperimentKind::parse(&name)?,
            _ => return Err(Error::Config("`experiment` must name an experiment".into())),
        };
        let seed = match table.remove("seed") {
            Some(toml::Value::Integer(s)) if s >= 0 => s as u64,
            _ => return Err(Error::Config("`seed` must be a nonnegative integer".into())),
        };
        let full_scale = match table.remove("full_scale") {
            None => false,
            Some(toml::Value::Boolean(b)) => b,
            Some(_) => return Err(Error::Config("`full_scale` must be a boolean".into())),
        };
        let d = Self::new(experiment, seed);
        let cfg = ExperimentConfig {
            experiment,
            seed,
            full_scale,
            elliptic1d: section(d.elliptic1d, table.remove("elliptic1d").as_ref(), "elliptic1d")?,
            semilinear2d: section(d.semilinear2d, table.remove("semilinear2d").as_ref(), "semilinear2d")?,
            norm_study: section(d.norm_study, table.remove("norm_study").as_ref(), "norm_study")?,
            heat: section(d.heat, table.remove("heat").as_ref(), "heat")?,
            allen_cahn: section(d.allen_cahn, table.remove("allen_cahn").as_ref(), "allen_cahn")?,
            rate_study: section(d.rate_study, table.remove("rate_study").as_ref(), "rate_study")?,
        };
        if let Some(key) = table.keys().next() {
            return Err(Error::Config(format!("unknown key `{key}`")));
        }
        Ok(cfg)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_toml(&std::fs::read_to_string(path)?)
    }

    /// Switches the selected experiment to its large problem sizes.
    pub fn apply_full_scale(&mut self) {
        self.full_scale = true;
        match self.experiment {
            ExperimentKind::Elliptic1d => {
                let p = &mut self.elliptic1d;
                p.n = 4096;
                p.grid_intervals = 1 << 14;
                p.max_error = 5e-4;
            }
            ExperimentKind::Semilinear2d => {
                let p = &mut self.semilinear2d;
                p.per_dim = 64;
                p.grid_intervals = 1 << 8;
                p.data_intervals = 1 << 11;
                p.modes = 1 << 10;
            }
            ExperimentKind::NormStudy => {
                let p = &mut self.norm_study.problem;
                p.per_dim = 64;
                p.grid_intervals = 1 << 8;
                p.data_intervals = 1 << 11;
                p.modes = 1 << 10;
            }
            ExperimentKind::Heat => {
                let r = &mut self.heat.run;
                r.n = 250;
                r.dt = 1.0 / 2048.0;
                r.cfl_bound = 31.0;
                self.heat.aggregation = 4;
            }
            ExperimentKind::AllenCahn => {
                let r = &mut self.allen_cahn.run;
                r.n = 160;
                r.dt = 1.0 / 1024.0;
                r.t_final = 10.0;
                r.cfl_bound = 25.0;
                self.allen_cahn.aggregation = 4;
            }
            ExperimentKind::RateStudy => {}
        }
    }

    fn section(&self) -> serde_json::Value {
        let v = match self.experiment {
            ExperimentKind::Elliptic1d => serde_json::to_value(&self.elliptic1d),
            ExperimentKind::Semilinear2d => serde_json::to_value(&self.semilinear2d),
            ExperimentKind::NormStudy => serde_json::to_value(&self.norm_study),
            ExperimentKind::Heat => serde_json::to_value(&self.heat),
            ExperimentKind::AllenCahn => serde_json::to_value(&self.allen_cahn),
            ExperimentKind::RateStudy => serde_json::to_value(&self.rate_study),
        };
        v.expect("parameters serialize")
    }

    /// The resolved configuration, defaults included.
    pub fn resolved(&self) -> serde_json::Value {
        serde_json::json!({
            "experiment": self.experiment,
            "seed": self.seed,
            "full_scale": self.full_scale,
            "parameters": self.section(),
        })
    }
}

/// One line of the long-format error table.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ErrorRow {
    pub parameter: String,
    pub value: f64,
    pub metric: String,
    pub error: f64,
}

impl ErrorRow {
    fn new(parameter: &str, value: f64, metric: &str, error: f64) -> Self {
        ErrorRow {
            parameter: parameter.into(),
            value,
            metric: metric.into(),
            error,
        }
    }
}

/// A thresholded outcome of a run.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct PlotData {
    pub header: Vec<String>,
    pub rows: Vec<Vec<f64>>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ErrorReport {
    pub experiment: ExperimentKind,
    pub metrics: BTreeMap<String, f64>,
    pub table: Vec<ErrorRow>,
    pub checks: Vec<Check>,
    pub plot: PlotData,
    pub config: serde_json::Value,
    pub seconds: f64,
}

impl ErrorReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    /// `results.json` content; timing is kept out so reruns are identical.
    pub fn results_json(&self) -> String {
        let checks: Vec<_> = self.checks.iter().collect();
        let doc = serde_json::json!({
            "experiment": self.experiment,
            "config": self.config,
            "metrics": self.metrics,
            "checks": checks,
            "versions": {
                "nes-core": env!("CARGO_PKG_VERSION"),
            },
        });
        serde_json::to_string_pretty(&doc).expect("report serializes") + "\n"
    }

    pub fn write(&self, dir: &Path) -> Result<()> {
        std::fs::create_dir_all(dir)?;
        std::fs::write(dir.join("results.json"), self.results_json())?;
        let mut errors = std::io::BufWriter::new(std::fs::File::create(dir.join("errors.csv"))?);
        writeln!(errors, "parameter,value,metric,error")?;
        for r in &self.table {
            writeln!(errors, "{},{},{},{:e}", r.parameter, r.value, r.metric, r.error)?;
        }
        errors.flush()?;
        let mut plot = std::io::BufWriter::new(std::fs::File::create(dir.join("plot.csv"))?);
        writeln!(plot, "{}", self.plot.header.join(","))?;
        for row in &self.plot.rows {
            let line: Vec<String> = row.iter().map(|v| format!("{v:e}")).collect();
            writeln!(plot, "{}", line.join(","))?;
        }
        plot.flush()?;
        let timing = serde_json::json!({ "seconds": self.seconds });
        std::fs::write(dir.join("timing.json"), timing.to_string() + "\n")?;
        Ok(())
    }
}

struct Outcome {
    metrics: BTreeMap<String, f64>,
    table: Vec<ErrorRow>,
    checks: Vec<Check>,
    plot: PlotData,
}

impl Outcome {
    fn new() -> Self {
        Outcome {
            metrics: BTreeMap::new(),
            table: Vec::new(),
            checks: Vec::new(),
            plot: PlotData::default(),
        }
    }

    fn check(&mut self, name: &str, passed: bool, detail: String) {
        self.checks.push(Check {
            name: name.into(),
            passed,
            detail,
        });
    }
}

/// Runs the configured pipeline and, when `out` is given, writes
/// `results.json`, `errors.csv`, `plot.csv` and `timing.json` there.
pub fn run_experiment(cfg: &ExperimentConfig, out: Option<&Path>) -> Result<ErrorReport> {
    let start = std::time::Instant::now();
    let outcome = match cfg.experiment {
        ExperimentKind::Elliptic1d => elliptic1d(&cfg.elliptic1d, cfg.seed),
        ExperimentKind::Semilinear2d => semilinear2d(&cfg.semilinear2d, cfg.seed),
        ExperimentKind::NormStudy => norm_study(&cfg.norm_study, cfg.seed),
        ExperimentKind::Heat => spde_experiment(&cfg.heat, cfg.seed),
        ExperimentKind::AllenCahn => spde_experiment(&cfg.allen_cahn, cfg.seed),
        ExperimentKind::RateStudy => rate_study(&cfg.rate_study, cfg.seed),
    }?;
    let report = ErrorReport {
        experiment: cfg.experiment,
        metrics: outcome.metrics,
        table: outcome.table,
        checks: outcome.checks,
        plot: outcome.plot,
        config: cfg.resolved(),
        seconds: start.elapsed().as_secs_f64(),
    };
    if let Some(dir) = out {
        report.write(dir).map_err(|e| e.in_stage("write"))?;
    }
    Ok(report)
}

fn elliptic1d(p: &Elliptic1dParams, seed: u64) -> Result<Outcome> {
    if p.modes < p.n {
        return Err(Error::Config("noise truncation must cover the test space".into()));
    }
    let xi = sample_white_noise_spectral(p.modes, seed).map_err(|e| e.in_stage("noise"))?;
    let truth_coeffs = closed_form_elliptic_1d(&xi, p.nu).map_err(|e| e.in_stage("reference"))?;
    let grid = Grid::line(p.grid_intervals)?;
    let truth = sine_series_on_grid(truth_coeffs.as_slice(), grid).map_err(|e| e.in_stage("reference"))?;
    let op = OperatorSpec::linear_elliptic(p.nu)?;
    let kernel = KernelSpec::matern52(p.length_scale)?;
    let mut sc = SolverConfig::new(TestSpace::sine_1d(p.n)?, grid, interval_endpoints());
    sc.gamma = p.gamma;
    sc.s = p.s;
    sc.kernel = kernel;
    // the sine basis is orthonormal, so the first N noise coefficients are
    // the measurements [ξ, φ]
    let measured = &xi.as_slice()[..p.n];
    let (rep, report) = gauss_newton::solve(&op, measured, &[0.0, 0.0], &sc, None).map_err(|e| e.in_stage("solve"))?;
    let u = rep.evaluate_grid();
    let err = rel_l2_error(&u, &truth)?;
    let mut o = Outcome::new();
    o.metrics.insert("rel_l2_error".into(), err);
    o.metrics.insert("sup_error".into(), sup_error(&u, &truth)?);
    o.metrics.insert("iterations".into(), report.iterations as f64);
    o.table.push(ErrorRow::new("s", p.s, "rel_l2", err));
    o.check(
        "elliptic1d_error",
        err <= p.max_error,
        format!("relative L2 error {err:.3e} (threshold {:.1e})", p.max_error),
    );
    let mut header = vec!["x", "truth", "estimate", "error"];
    let pointwise = if p.pointwise {
        // forcing sampled at the collocation points k / (N + 1)
        let pts = sine_series_on_grid(xi.as_slice(), Grid::line(p.n + 1)?)?;
        let values = &pts.values()[1..=p.n];
        let sol = gauss_newton::solve_pointwise(&op, values, &[0.0, 0.0], kernel, p.gamma)
            .map_err(|e| e.in_stage("pointwise solve"))?;
        let xs: Vec<f64> = (0..grid.len()).map(|k| grid.point(k)[0]).collect();
        let v = GridFunction::new(grid, sol.evaluate(&xs))?;
        let perr = rel_l2_error(&v, &truth)?;
        o.metrics.insert("pointwise_rel_l2_error".into(), perr);
        o.metrics.insert("pointwise_ratio".into(), perr / err);
        o.table.push(ErrorRow::new("s", 0.0, "rel_l2_pointwise", perr));
        o.check(
            "pointwise_loss_gap",
            perr >= p.min_pointwise_ratio * err,
            format!(
                "pointwise-loss error {perr:.3e} is {:.1}x the weak-loss error",
                perr / err
            ),
        );
        header.push("pointwise_estimate");
        Some(v)
    } else {
        None
    };
    o.plot.header = header.into_iter().map(String::from).collect();
    for k in 0..grid.len() {
        let mut row = vec![
            grid.point(k)[0],
            truth.values()[k],
            u.values()[k],
            u.values()[k] - truth.values()[k],
        ];
        if let Some(v) = &pointwise {
            row.push(v.values()[k]);
        }
        o.plot.rows.push(row);
    }
    Ok(o)
}

struct Semilinear2dRun {
    error: f64,
    sup: f64,
    iterations: usize,
    estimate: GridFunction,
    truth: GridFunction,
}

fn solve_semilinear2d(p: &Semilinear2dParams, s: f64, seed: u64) -> Result<Semilinear2dRun> {
    let data_grid = Grid::square(p.data_intervals)?;
    let (truth, forcing) = manufactured_semilinear_2d(p.eps, p.modes, seed, p.nu, data_grid)
        .map_err(|e| e.in_stage("manufactured data"))?;
    let space = TestSpace::sine_2d(p.per_dim)?;
    let xi = Projector::new(space, data_grid)
        .map_err(|e| e.in_stage("measurements"))?
        .project_values(forcing.values());
    let grid = Grid::square(p.grid_intervals)?;
    let boundary = square_boundary(p.per_dim);
    let g = vec![0.0; boundary.len()];
    let mut sc = SolverConfig::new(space, grid, boundary);
    sc.gamma = p.gamma;
    sc.s = s;
    sc.kernel = KernelSpec::matern52(p.length_scale)?;
    sc.max_iterations = p.max_iterations;
    let op = OperatorSpec::semilinear_sine(p.nu)?;
    let (rep, report) = gauss_newton::solve(&op, &xi, &g, &sc, None).map_err(|e| e.in_stage("solve"))?;
    let estimate = rep.evaluate_grid();
    let truth = truth.restrict(grid).map_err(|e| e.in_stage("reference"))?;
    Ok(Semilinear2dRun {
        error: rel_l2_error(&estimate, &truth)?,
        sup: sup_error(&estimate, &truth)?,
        iterations: report.iterations,
        estimate,
        truth,
    })
}

fn grid_plot(o: &mut Outcome, estimate: &GridFunction, truth: &GridFunction) {
    o.plot.header = ["x", "y", "truth", "estimate", "error"].map(String::from).to_vec();
    let grid = estimate.grid();
    for k in 0..grid.len() {
        let [x, y] = grid.point(k);
        let (t, e) = (truth.values()[k], estimate.values()[k]);
        o.plot.rows.push(vec![x, y, t, e, e - t]);
    }
}

fn semilinear2d(p: &Semilinear2dParams, seed: u64) -> Result<Outcome> {
    let run = solve_semilinear2d(p, p.s, seed)?;
    let mut o = Outcome::new();
    o.metrics.insert("rel_l2_error".into(), run.error);
    o.metrics.insert("sup_error".into(), run.sup);
    o.metrics.insert("iterations".into(), run.iterations as f64);
    o.table.push(ErrorRow::new("s", p.s, "rel_l2", run.error));
    o.check(
        "semilinear2d_error",
        run.error <= p.max_error && run.iterations <= p.iteration_budget,
        format!(
            "relative L2 error {:.4} after {} iterations (threshold {} within {})",
            run.error, run.iterations, p.max_error, p.iteration_budget
        ),
    );
    grid_plot(&mut o, &run.estimate, &run.truth);
    Ok(o)
}

fn norm_study(p: &NormStudyParams, seed: u64) -> Result<Outcome> {
    if p.exponents.is_empty() {
        return Err(Error::Config("norm study needs at least one exponent".into()));
    }
    let mut o = Outcome::new();
    let mut errors = Vec::new();
    for &s in &p.exponents {
        let run = solve_semilinear2d(&p.problem, s, seed)?;
        o.metrics.insert(format!("rel_l2_error_s{s}"), run.error);
        o.metrics.insert(format!("iterations_s{s}"), run.iterations as f64);
        o.table.push(ErrorRow::new("s", s, "rel_l2", run.error));
        o.plot.rows.push(vec![s, run.error, run.iterations as f64]);
        errors.push((s, run.error));
    }
    o.plot.header = ["s", "rel_l2_error", "iterations"].map(String::from).to_vec();
    let (best_s, best) = errors
        .iter()
        .copied()
        .min_by(|a, b| a.1.total_cmp(&b.1))
        .expect("nonempty");
    o.metrics.insert("argmin_s".into(), best_s);
    let at = |s: f64| errors.iter().find(|e| e.0 == s).map(|e| e.1);
    let worse_at_two = match (at(2.0), at(p.expected_argmin)) {
        (Some(e2), Some(e)) => e2 > e,
        _ => false,
    };
    o.check(
        "norm_study_argmin",
        best_s == p.expected_argmin && worse_at_two,
        format!(
            "argmin s = {best_s} with error {best:.6e}; errors {}",
            errors
                .iter()
                .map(|(s, e)| format!("s={s}: {e:.9e}"))
                .collect::<Vec<_>>()
                .join(", ")
        ),
    );
    Ok(o)
}

fn spde_experiment(p: &SpdeParams, seed: u64) -> Result<Outcome> {
    let run = &p.run;
    run.validate().map_err(|e| e.in_stage("configuration"))?;
    let coarse_steps = run.steps()? as u64;
    let fine_dt = run.dt / p.aggregation as f64;
    let grid = run.grid()?;
    let mut o = Outcome::new();
    let mut errors = Vec::new();
    for k in 0..p.seeds {
        let path_seed = seed + k as u64;
        let fine = NoisePath::new(
            path_seed,
            NoiseMode::Spectral(p.modes),
            fine_dt,
            coarse_steps * p.aggregation,
        )?;
        let reference = spectral_galerkin_spde(
            run.family,
            run.nu,
            run.sigma,
            &run.initial_coefficients(),
            &fine,
            p.aggregation as usize,
        )
        .and_then(|r| r.on_grid(grid))
        .map_err(|e| e.in_stage("reference"))?;
        let coarse = fine.aggregate(p.aggregation)?;
        let estimate = integrate(run, &coarse).map_err(|e| e.in_stage("kernel run"))?;
        let err = space_time_l2_error(&estimate, &reference)?;
        o.metrics.insert(format!("space_time_error_seed{path_seed}"), err);
        o.table
            .push(ErrorRow::new("seed", path_seed as f64, "space_time_rel_l2", err));
        if k == 0 {
            o.plot.header = ["time", "l2_error", "reference_l2_norm"].map(String::from).to_vec();
            for (j, &t) in estimate.times().iter().enumerate() {
                let (a, b) = (estimate.snapshot(j), reference.snapshot(j));
                let e = a.zip_with(&b, |x, y| x - y)?.l2_norm();
                o.plot.rows.push(vec![t, e, b.l2_norm()]);
            }
        }
        errors.push(err);
    }
    let mean = errors.iter().sum::<f64>() / errors.len().max(1) as f64;
    o.metrics.insert("mean_space_time_error".into(), mean);
    o.metrics.insert("cfl".into(), run.cfl());
    let name = match run.family {
        SpdeFamily::Heat => "heat_error",
        SpdeFamily::AllenCahn => "allen_cahn_error",
    };
    o.check(
        name,
        mean <= p.max_error,
        format!(
            "mean space-time error {mean:.3e} over {} seeds (threshold {:.1e})",
            p.seeds, p.max_error
        ),
    );
    Ok(o)
}

fn rate_study(p: &RateStudyParams, seed: u64) -> Result<Outcome> {
    let space = TestSpace::sine_1d(p.n)?;
    let grid = Grid::line(p.grid_intervals)?;
    let op = OperatorSpec::poisson(p.nu)?;
    let xi = sample_white_noise_spectral(p.n, seed)?;
    let kernel = KernelGrid::new(KernelSpec::matern52(p.length_scale)?, grid)?;
    let projector = Projector::new(space, grid)?;
    let lin = op.linearize(&GridFunction::zeros(grid));
    let fs = lin.features(&projector, interval_endpoints())?;
    let blocks = kernel.assemble(&fs)?;
    let ctx = SeminormContext::new(space, p.s)?;
    let solve = |gamma: f64| -> Result<Vec<f64>> {
        let solver = KktSolver::new(&blocks, ctx.stiffness(), gamma, KktRoute::Reduced)?;
        let (c, _) = solver.solve(xi.as_slice(), &[0.0, 0.0])?;
        Ok(kernel.evaluate_grid(&fs, &c.as_slice()[..p.n], &c.as_slice()[p.n..]))
    };
    // the γ → 0 limit, the minimum-norm interpolant of the measurements
    let limit = solve(0.0).map_err(|e| e.in_stage("limit solve"))?;
    // all grid modes, past the aliasing guard of the test spaces
    let dst = crate::fft::Dst1::new(grid.interior_per_dim());
    let scale = 2f64.sqrt() * grid.spacing();
    let order = 2.0 - p.s;
    let mut o = Outcome::new();
    let mut sq = Vec::new();
    for &gamma in &p.gammas {
        let u = solve(gamma).map_err(|e| e.in_stage("solve"))?;
        let diff: Vec<f64> = u.iter().zip(&limit).map(|(a, b)| a - b).collect();
        let e2: f64 = dst
            .apply(&diff[1..diff.len() - 1])
            .iter()
            .map(|c| c * scale)
            .enumerate()
            .map(|(j, c)| {
                let k = std::f64::consts::PI * (j + 1) as f64;
                c * c * (k * k).powf(order)
            })
            .sum();
        o.table.push(ErrorRow::new("gamma", gamma, "h_seminorm_sq", e2));
        o.plot.rows.push(vec![gamma, e2, e2.sqrt()]);
        sq.push(e2);
    }
    o.plot.header = ["gamma", "error_squared", "error"].map(String::from).to_vec();
    let fit = fit_rate(&p.gammas, &sq)?;
    let norm_fit = fit_rate(&p.gammas, &sq.iter().map(|v| v.sqrt()).collect::<Vec<_>>())?;
    o.metrics.insert("slope".into(), fit.slope);
    o.metrics.insert("intercept".into(), fit.intercept);
    o.metrics.insert("r_squared".into(), fit.r_squared);
    o.metrics.insert("norm_slope".into(), norm_fit.slope);
    o.check(
        "rate_slope",
        (p.slope_range[0]..=p.slope_range[1]).contains(&fit.slope) && fit.r_squared >= p.min_r_squared,
        format!(
            "squared-error slope {:.3} (R² {:.4}), norm slope {:.3}",
            fit.slope, fit.r_squared, norm_fit.slope
        ),
    );
    Ok(o)
}

/// Sine 1D or tent measurements by name, for configuration files.
pub fn space_kind(name: &str) -> Result<SpaceKind> {
    match name {
        "sine_1d" => Ok(SpaceKind::Sine1d),
        "sine_2d" => Ok(SpaceKind::Sine2d),
        "fem_1d" => Ok(SpaceKind::Fem1d),
        other => Err(Error::Config(format!("unknown test space `{other}`"))),
    }
}
