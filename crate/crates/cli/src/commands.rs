use std::fmt;
use std::path::Path;

use biplane::dependence::{cross_ratio, weighted_cross_ratio, WeightedKind};
use biplane::gee::SolverSummary;
use biplane::hazards::hazards;
use biplane::validity::{check_validity, ScanOptions};
use biplane::*;
use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::output::{manifest, write_csv, write_json};
use crate::*;

/// Violations listed in a validity report; the total is always given.
const MAX_LISTED_VIOLATIONS: usize = 100;

#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Data(String),
    Numerical(String),
}

impl CliError {
    pub fn code(&self) -> u8 {
        match self {
            CliError::Usage(_) => 1,
            CliError::Data(_) => 2,
            CliError::Numerical(_) => 3,
        }
    }

    pub fn io(path: &Path, e: std::io::Error) -> Self {
        CliError::Data(format!("{}: {e}", path.display()))
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Usage(m) | CliError::Data(m) | CliError::Numerical(m) => f.write_str(m),
        }
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        let msg = match &e {
            Error::TooFewSubjects { required, found } => {
                format!("{e} (the estimator requires n >= {required}; found n = {found})")
            }
            _ => e.to_string(),
        };
        if e.is_numerical() {
            CliError::Numerical(msg)
        } else {
            CliError::Data(msg)
        }
    }
}

type Res<T> = std::result::Result<T, CliError>;

pub fn run(command: Command) -> Res<()> {
    match command {
        Command::FitSimple(a) => fit_simple_cmd(a),
        Command::FitGeneral(a) => fit_general_cmd(a),
        Command::Simulate(a) => simulate_cmd(a),
        Command::Validity(a) => validity_cmd(a),
        Command::Dependence(a) => dependence_cmd(a),
        Command::Diagnose(a) => diagnose_cmd(a),
        Command::PseudoDump(a) => pseudo_dump_cmd(a),
        Command::SurfaceDump(a) => surface_dump_cmd(a),
        Command::Experiment(a) => experiment_cmd(a),
    }
}

fn matrix(m: &DMatrix<f64>) -> Vec<Vec<f64>> {
    m.row_iter().map(|r| r.iter().copied().collect()).collect()
}

fn diag_sqrt(m: &DMatrix<f64>) -> Vec<f64> {
    (0..m.nrows()).map(|i| m[(i, i)].max(0.0).sqrt()).collect()
}

fn to_value(v: &impl Serialize) -> Res<Value> {
    serde_json::to_value(v).map_err(|e| CliError::Data(e.to_string()))
}

fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> Res<T> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    serde_json::from_str(&text).map_err(|e| CliError::Data(format!("{}: {e}", path.display())))
}

/// Inline JSON, a path to a JSON file, or (for baselines) a `family:theta` shorthand.
fn inline_or_file(arg: &str) -> Res<Value> {
    let text = if arg.trim_start().starts_with('{') {
        arg.to_string()
    } else {
        std::fs::read_to_string(arg)
            .map_err(|e| CliError::Usage(format!("cannot read `{arg}`: {e}")))?
    };
    serde_json::from_str(&text)
        .map_err(|e| CliError::Usage(format!("invalid JSON in `{arg}`: {e}")))
}

fn parse_f64(s: &str, what: &str) -> Res<f64> {
    s.trim()
        .parse()
        .map_err(|_| CliError::Usage(format!("{what}: `{s}` is not a number")))
}

fn parse_list(s: &str, what: &str) -> Res<Vec<f64>> {
    s.split(',').map(|x| parse_f64(x, what)).collect()
}

fn parse_pairs(s: &str, what: &str) -> Res<Vec<(f64, f64)>> {
    s.split(',')
        .map(|pair| match pair.split_once(':') {
            Some((a, b)) => Ok((parse_f64(a, what)?, parse_f64(b, what)?)),
            None => Err(CliError::Usage(format!(
                "{what}: expected `a:b`, got `{pair}`"
            ))),
        })
        .collect()
}

fn parse_baseline(arg: &str) -> Res<BaselineSpec> {
    let shorthand = match arg.split_once(':') {
        None if arg == "independence" => Some(BaselineSpec::Independence),
        Some(("clayton", t)) => Some(BaselineSpec::Clayton {
            theta: parse_f64(t, "--baseline")?,
        }),
        Some(("gumbel_barnett", t)) => Some(BaselineSpec::GumbelBarnett {
            theta: parse_f64(t, "--baseline")?,
        }),
        _ => None,
    };
    let spec = match shorthand {
        Some(s) => s,
        None => serde_json::from_value(inline_or_file(arg)?)
            .map_err(|e| CliError::Usage(format!("--baseline: {e}")))?,
    };
    spec.validate()?;
    Ok(spec)
}

fn parse_params(arg: &str, model: ModelKind) -> Res<ModelParams> {
    let mut v = inline_or_file(arg)?;
    let tag = match model {
        ModelKind::Simple => "simple",
        ModelKind::General => "general",
    };
    if let Value::Object(m) = &mut v {
        m.entry("type").or_insert_with(|| Value::from(tag));
    }
    let params: ModelParams =
        serde_json::from_value(v).map_err(|e| CliError::Usage(format!("--params: {e}")))?;
    let matches = matches!(
        (&params, model),
        (ModelParams::Simple { .. }, ModelKind::Simple)
            | (ModelParams::General { .. }, ModelKind::General)
    );
    if !matches {
        return Err(CliError::Usage(format!(
            "--params does not describe a {tag} model"
        )));
    }
    params.validate()?;
    Ok(params)
}

fn resolve_grid(dataset: &Dataset, points: &str) -> Res<EvalGrid> {
    if let Some(k) = points.strip_prefix("auto:") {
        let k = k
            .parse()
            .map_err(|_| CliError::Usage(format!("--points: bad grid size in `{points}`")))?;
        Ok(default_grid(dataset, k)?)
    } else {
        Ok(EvalGrid::new(parse_pairs(points, "--points")?)?)
    }
}

fn jackknife(j: Jackknife) -> JackknifeMethod {
    match j {
        Jackknife::Downdate => JackknifeMethod::Downdate,
        Jackknife::Recompute => JackknifeMethod::Recompute,
    }
}

fn solver(s: &SolverArgs) -> SolverOptions {
    SolverOptions {
        tol: s.tol,
        max_iter: s.max_iter,
    }
}

/// Manifest config: the parsed arguments plus anything resolved from the data.
fn config(args: &impl Serialize, extra: Value) -> Res<Value> {
    let mut v = to_value(args)?;
    if let (Value::Object(m), Value::Object(e)) = (&mut v, extra) {
        m.extend(e);
    }
    Ok(v)
}

fn load(data: &DataArgs) -> Res<(Dataset, EvalGrid)> {
    let dataset = load_csv(&data.data, None)?;
    dataset.require_min(2)?;
    let grid = resolve_grid(&dataset, &data.points)?;
    Ok((dataset, grid))
}

/// Fit output; also read back by `diagnose`, which ignores everything but the point estimates.
#[derive(Serialize, Deserialize)]
#[serde(tag = "model", rename_all = "snake_case")]
enum FitDoc {
    Simple(Box<SimpleDoc>),
    General(Box<GeneralDoc>),
}

#[derive(Serialize, Deserialize)]
struct SimpleDoc {
    n: usize,
    grid: Vec<(f64, f64)>,
    covariate_names: Vec<String>,
    intercepts: Vec<f64>,
    slopes: Vec<f64>,
    #[serde(default, skip_deserializing)]
    parameter_names: Vec<String>,
    #[serde(default, skip_deserializing)]
    std_errors: Vec<f64>,
    #[serde(default, skip_deserializing)]
    wald_z: Vec<f64>,
    #[serde(default, skip_deserializing)]
    p_values: Vec<f64>,
    #[serde(default, skip_deserializing)]
    covariance: Vec<Vec<f64>>,
    #[serde(default, skip_deserializing)]
    bootstrap: Option<Value>,
    #[serde(default, skip_deserializing)]
    solver: Option<SolverSummary>,
    #[serde(default, skip_deserializing)]
    warnings: Vec<String>,
}

#[derive(Serialize, Deserialize)]
struct GeneralDoc {
    n: usize,
    grid: Vec<(f64, f64)>,
    covariate_names: Vec<String>,
    alpha0: Vec<f64>,
    alpha: Vec<f64>,
    beta0: Vec<f64>,
    beta: Vec<f64>,
    gamma0: Vec<f64>,
    gamma: Vec<f64>,
    link3: Vec<LinkKind>,
    link_policy: LinkPolicy,
    ybar: Vec<f64>,
    masks: SlopeMasks,
    #[serde(default, skip_deserializing)]
    xi1_names: Vec<String>,
    #[serde(default, skip_deserializing)]
    xi1: Vec<f64>,
    #[serde(default, skip_deserializing)]
    xi2_names: Vec<String>,
    #[serde(default, skip_deserializing)]
    xi2: Vec<f64>,
    #[serde(default, skip_deserializing)]
    covariance_xi1: Vec<Vec<f64>>,
    #[serde(default, skip_deserializing)]
    std_errors_xi1: Vec<f64>,
    #[serde(default, skip_deserializing)]
    covariance_xi2_analytic: Vec<Vec<f64>>,
    #[serde(default, skip_deserializing)]
    std_errors_xi2_analytic: Vec<f64>,
    #[serde(default, skip_deserializing)]
    covariance_xi2_bootstrap: Option<Vec<Vec<f64>>>,
    #[serde(default, skip_deserializing)]
    std_errors_xi2_bootstrap: Option<Vec<f64>>,
    #[serde(default, skip_deserializing)]
    bootstrap: Option<Value>,
    #[serde(default, skip_deserializing)]
    solver_step1: Option<SolverSummary>,
    #[serde(default, skip_deserializing)]
    solver_step2: Option<SolverSummary>,
    #[serde(default, skip_deserializing)]
    warnings: Vec<String>,
}

fn indexed(prefix: &str, k: usize) -> impl Iterator<Item = String> + '_ {
    (1..=k).map(move |j| format!("{prefix}[{j}]"))
}

fn named<'a>(prefix: &'a str, names: &'a [String]) -> impl Iterator<Item = String> + 'a {
    names.iter().map(move |n| format!("{prefix}[{n}]"))
}

fn bootstrap_value(b: &BootstrapResult) -> Value {
    json!({
        "replicates": b.replicates,
        "failed": b.failed,
        "mean": b.mean,
        "covariance": matrix(&b.covariance),
        "std_errors": diag_sqrt(&b.covariance),
    })
}

fn fit_simple_cmd(a: FitSimpleArgs) -> Res<()> {
    let (dataset, grid) = load(&a.data)?;
    let options = FitOptions {
        solver: solver(&a.solver),
        jackknife: jackknife(a.data.jackknife),
    };
    let fit = fit_simple(&dataset, &grid, &options)?;
    let boot = if a.boot > 0 {
        Some(bootstrap_simple(
            &dataset,
            &grid,
            &options,
            a.boot,
            &*default_resampler(a.seed),
        )?)
    } else {
        None
    };
    let names = dataset.covariate_names();
    let doc = FitDoc::Simple(Box::new(SimpleDoc {
        n: dataset.n(),
        grid: grid.points().to_vec(),
        covariate_names: names.to_vec(),
        intercepts: fit.intercepts.clone(),
        slopes: fit.slopes.clone(),
        parameter_names: indexed("b0", fit.k()).chain(named("b", names)).collect(),
        std_errors: fit.std_errors(),
        wald_z: fit.wald_z(),
        p_values: fit.p_values(),
        covariance: matrix(&fit.covariance),
        bootstrap: boot.as_ref().map(bootstrap_value),
        solver: Some(fit.solver.clone()),
        warnings: fit.warnings.clone(),
    }));
    let cfg = config(&a, json!({ "resolved_points": grid.points() }))?;
    write_json(
        a.out.as_deref(),
        manifest("fit-simple", &cfg),
        to_value(&doc)?,
    )
}

fn masks(spec: &[String], names: &[String]) -> Res<SlopeMasks> {
    let mut m = SlopeMasks::default();
    for item in spec {
        let (component, covariate) = item.split_once(':').ok_or_else(|| {
            CliError::Usage(format!(
                "--fix-zero: expected `component:covariate`, got `{item}`"
            ))
        })?;
        let idx = names.iter().position(|n| n == covariate).ok_or_else(|| {
            CliError::Usage(format!("--fix-zero: unknown covariate `{covariate}`"))
        })?;
        let slot = match component {
            "alpha" => &mut m.alpha,
            "beta" => &mut m.beta,
            "gamma" => &mut m.gamma,
            _ => {
                return Err(CliError::Usage(format!(
                    "--fix-zero: unknown component `{component}`"
                )))
            }
        };
        slot.get_or_insert_with(|| vec![true; names.len()])[idx] = false;
    }
    Ok(m)
}

fn fit_general_cmd(a: FitGeneralArgs) -> Res<()> {
    let (dataset, grid) = load(&a.data)?;
    let names = dataset.covariate_names().to_vec();
    let options = GeneralOptions {
        solver: solver(&a.solver),
        jackknife: jackknife(a.data.jackknife),
        link_policy: match a.link {
            LinkArg::Common => LinkPolicy::Common,
            LinkArg::PerPoint => LinkPolicy::PerPoint,
        },
        masks: masks(&a.fix_zero, &names)?,
        bootstrap: (a.boot > 0).then_some(a.boot),
        seed: a.seed,
    };
    let fit = fit_general(&dataset, &grid, &options)?;
    let k = fit.k();
    let boot_cov = fit.covariance_xi2_bootstrap();
    let doc = FitDoc::General(Box::new(GeneralDoc {
        n: dataset.n(),
        grid: grid.points().to_vec(),
        covariate_names: names.clone(),
        alpha0: fit.alpha0.clone(),
        alpha: fit.alpha.clone(),
        beta0: fit.beta0.clone(),
        beta: fit.beta.clone(),
        gamma0: fit.gamma0.clone(),
        gamma: fit.gamma.clone(),
        link3: fit.link3.clone(),
        link_policy: fit.link_policy,
        ybar: fit.ybar.clone(),
        masks: fit.masks.clone(),
        xi1_names: indexed("alpha0", k)
            .chain(named("alpha", &names))
            .chain(indexed("beta0", k))
            .chain(named("beta", &names))
            .collect(),
        xi1: fit.xi1(),
        xi2_names: indexed("gamma0", k).chain(named("gamma", &names)).collect(),
        xi2: fit.xi2(),
        covariance_xi1: matrix(&fit.covariance_xi1),
        std_errors_xi1: diag_sqrt(&fit.covariance_xi1),
        covariance_xi2_analytic: matrix(&fit.covariance_xi2_analytic),
        std_errors_xi2_analytic: diag_sqrt(&fit.covariance_xi2_analytic),
        std_errors_xi2_bootstrap: boot_cov.as_ref().map(diag_sqrt),
        covariance_xi2_bootstrap: boot_cov.as_ref().map(matrix),
        bootstrap: fit
            .bootstrap
            .as_ref()
            .map(|b| json!({ "replicates": b.replicates, "failed": b.failed })),
        solver_step1: Some(fit.solver_step1.clone()),
        solver_step2: Some(fit.solver_step2.clone()),
        warnings: fit.warnings.clone(),
    }));
    let cfg = config(&a, json!({ "resolved_points": grid.points() }))?;
    write_json(
        a.out.as_deref(),
        manifest("fit-general", &cfg),
        to_value(&doc)?,
    )
}

fn simulate_cmd(a: SimulateArgs) -> Res<()> {
    let mut spec: SimSpec = read_json(&a.spec)?;
    if let Some(n) = a.n {
        spec = spec.with_n(n);
    }
    if let Some(seed) = a.seed {
        spec = spec.with_seed(seed);
    }
    let dataset = sample(&spec)?;
    let cfg = config(&a, json!({ "resolved_spec": spec }))?;
    write_csv(a.out.as_deref(), manifest("simulate", &cfg), |w| {
        Ok(dataset.write_csv(w)?)
    })
}

fn zbox(s: &str, p: usize) -> Res<Vec<(f64, f64)>> {
    let bx = parse_pairs(s, "--zbox")?;
    if bx.len() != p {
        return Err(CliError::Usage(format!(
            "--zbox has {} ranges but the model has {p} covariates",
            bx.len()
        )));
    }
    if let Some((lo, hi)) = bx
        .iter()
        .find(|(lo, hi)| lo.is_nan() || hi.is_nan() || lo > hi)
    {
        return Err(CliError::Usage(format!("--zbox: empty range {lo}:{hi}")));
    }
    Ok(bx)
}

fn validity_cmd(a: ValidityArgs) -> Res<()> {
    let base = parse_baseline(&a.model_args.baseline)?;
    let params = parse_params(&a.model_args.params, a.model)?;
    let bx = zbox(&a.zbox, params.p())?;
    let opts = ScanOptions {
        time_points: a.time_points,
        tau: (a.tau, a.tau),
        ..Default::default()
    };
    let mut report = check_validity(&base, &params, &bx, &opts);
    let total = report.scan.as_ref().map_or(0, |s| s.violations.len());
    if let Some(scan) = report.scan.as_mut() {
        scan.violations.truncate(MAX_LISTED_VIOLATIONS);
    }
    let cfg = config(
        &a,
        json!({ "resolved_baseline": base, "resolved_params": params, "scan": opts }),
    )?;
    let body = json!({ "valid": report.is_valid(), "violations_total": total, "report": report });
    write_json(a.out.as_deref(), manifest("validity", &cfg), body)
}

fn dependence_cmd(a: DependenceArgs) -> Res<()> {
    let base = parse_baseline(&a.model_args.baseline)?;
    let z = parse_list(&a.z, "--z")?;
    let model = if inline_or_file(&a.model_args.params)?.get("b").is_some() {
        ModelKind::Simple
    } else {
        ModelKind::General
    };
    let params = parse_params(&a.model_args.params, model)?;
    if z.len() != params.p() {
        return Err(CliError::Usage(format!(
            "--z has {} values but the model has {} covariates",
            z.len(),
            params.p()
        )));
    }
    let (t1s, t2s) = (parse_list(&a.t1, "--t1")?, parse_list(&a.t2, "--t2")?);
    let cells: Vec<(f64, f64)> = t1s
        .iter()
        .flat_map(|&t1| t2s.iter().map(move |&t2| (t1, t2)))
        .collect();
    let values = par::map_indexed(cells.len(), |i| {
        let (t1, t2) = cells[i];
        match a.measure.as_str() {
            "c" => cross_ratio(&hazards(&base, &params, &z, t1, t2)),
            "C" => weighted_cross_ratio(&base, &params, &z, t1, t2, WeightedKind::C),
            _ => weighted_cross_ratio(&base, &params, &z, t1, t2, WeightedKind::CTilde),
        }
    })
    .into_iter()
    .collect::<biplane::Result<Vec<f64>>>()?;
    let cfg = config(
        &a,
        json!({ "resolved_baseline": base, "resolved_params": params }),
    )?;
    write_csv(a.out.as_deref(), manifest("dependence", &cfg), |w| {
        let mut out = csv::Writer::from_writer(w);
        let err = |e: csv::Error| CliError::Data(e.to_string());
        out.write_record(["t1", "t2", &a.measure]).map_err(err)?;
        for ((t1, t2), v) in cells.iter().zip(&values) {
            out.write_record([t1.to_string(), t2.to_string(), v.to_string()])
                .map_err(err)?;
        }
        out.flush().map_err(|e| CliError::Data(e.to_string()))
    })
}

fn zero_solver() -> SolverSummary {
    SolverSummary {
        iterations: 0,
        converged: true,
        max_abs_score: 0.0,
        trace: Vec::new(),
    }
}

fn diagnose_cmd(a: DiagnoseArgs) -> Res<()> {
    let doc: FitDoc = read_json(&a.fit)?;
    let (names, grid_points) = match &doc {
        FitDoc::Simple(d) => (d.covariate_names.clone(), d.grid.clone()),
        FitDoc::General(d) => (d.covariate_names.clone(), d.grid.clone()),
    };
    let dataset = load_csv(&a.data, Some(&names))?;
    dataset.require_min(2)?;
    let grid = EvalGrid::new(grid_points)?;
    let method = jackknife(a.jackknife);
    let table = match doc {
        FitDoc::Simple(d) => {
            let d = *d;
            let q = d.intercepts.len() + d.slopes.len();
            let fit = SimpleLehmannFit {
                intercepts: d.intercepts,
                slopes: d.slopes,
                covariance: DMatrix::zeros(q, q),
                grid: grid.clone(),
                covariate_names: names.clone(),
                solver: zero_solver(),
                warnings: Vec::new(),
            };
            let pm = pseudo(&dataset, &grid, PseudoKind::Bivariate, method)?;
            pseudo_residuals(FittedModel::Simple(&fit), &dataset, &pm)?
        }
        FitDoc::General(d) => {
            let d = *d;
            let (k, p) = (d.alpha0.len(), d.alpha.len());
            let fit = GeneralizedLehmannFit {
                grid: grid.clone(),
                covariate_names: names.clone(),
                alpha0: d.alpha0,
                alpha: d.alpha,
                beta0: d.beta0,
                beta: d.beta,
                gamma0: d.gamma0,
                gamma: d.gamma,
                link3: d.link3,
                link_policy: d.link_policy,
                ybar: d.ybar,
                covariance_xi1: DMatrix::zeros(2 * (k + p), 2 * (k + p)),
                covariance_xi2_analytic: DMatrix::zeros(k + p, k + p),
                bootstrap: None,
                masks: d.masks,
                solver_step1: zero_solver(),
                solver_step2: zero_solver(),
                warnings: Vec::new(),
            };
            let pm = pseudo(&dataset, &grid, PseudoKind::Trivariate, method)?;
            pseudo_residuals(FittedModel::General(&fit), &dataset, &pm)?
        }
    };
    let cfg = config(&a, json!({}))?;
    if let Some(path) = &a.summary {
        let summaries: Vec<Value> = names
            .iter()
            .enumerate()
            .map(|(c, name)| {
                let s = binned_summary(&table, c, a.bins, None).map(|s| (trend_test(&s), s));
                match s {
                    Ok((trend, s)) => json!({
                        "covariate": name,
                        "summary": s,
                        "trend": trend.as_ref().ok(),
                        "error": trend.err().map(|e| e.to_string()),
                    }),
                    Err(e) => json!({ "covariate": name, "summary": null, "trend": null, "error": e.to_string() }),
                }
            })
            .collect();
        write_json(
            Some(path),
            manifest("diagnose", &cfg),
            json!({ "covariates": summaries }),
        )?;
    }
    write_csv(a.out.as_deref(), manifest("diagnose", &cfg), |w| {
        Ok(table.write_csv(w)?)
    })
}

fn pseudo_dump_cmd(a: PseudoDumpArgs) -> Res<()> {
    let (dataset, grid) = load(&a.data)?;
    let kind = match a.kind {
        KindArg::Marginal1 => PseudoKind::Marginal1,
        KindArg::Marginal2 => PseudoKind::Marginal2,
        KindArg::Bivariate => PseudoKind::Bivariate,
        KindArg::Trivariate => PseudoKind::Trivariate,
    };
    let pm = pseudo(&dataset, &grid, kind, jackknife(a.data.jackknife))?;
    let blocks: &[&str] = match kind {
        PseudoKind::Marginal1 => &["marginal1"],
        PseudoKind::Marginal2 => &["marginal2"],
        PseudoKind::Bivariate => &["joint"],
        PseudoKind::Trivariate => &["marginal1", "marginal2", "joint"],
    };
    let cfg = config(&a, json!({ "resolved_points": grid.points() }))?;
    write_csv(a.out.as_deref(), manifest("pseudo-dump", &cfg), |w| {
        let err = |e: std::io::Error| CliError::Data(e.to_string());
        writeln!(w, "subject,point,block,value").map_err(err)?;
        let k = pm.k();
        for i in 0..pm.n() {
            for (b, block) in blocks.iter().enumerate() {
                for j in 0..k {
                    writeln!(w, "{i},{j},{block},{}", pm.values[(i, b * k + j)]).map_err(err)?;
                }
            }
        }
        Ok(())
    })
}

fn surface_dump_cmd(a: SurfaceDumpArgs) -> Res<()> {
    let dataset = load_csv(&a.data, None)?;
    let surface = dabrowska(&dataset);
    let cfg = config(&a, json!({}))?;
    write_csv(a.out.as_deref(), manifest("surface-dump", &cfg), |w| {
        let err = |e: std::io::Error| CliError::Data(e.to_string());
        writeln!(w, "u,v,S").map_err(err)?;
        let us = std::iter::once(0.0).chain(surface.u_grid.iter().copied());
        for (r, u) in us.enumerate() {
            let vs = std::iter::once(0.0).chain(surface.v_grid.iter().copied());
            for (c, v) in vs.enumerate() {
                writeln!(w, "{u},{v},{}", surface.s[(r, c)]).map_err(err)?;
            }
        }
        Ok(())
    })
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
enum StudyKind {
    SimpleRecovery,
    GeneralRecovery,
    LinkSelection,
    ResidualStudy,
    VarianceComparison,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ExperimentConfig {
    study: StudyKind,
    spec: SimSpec,
    grid: Vec<(f64, f64)>,
    #[serde(default = "default_replications")]
    replications: usize,
    /// Replace the censoring rates with ones giving this mean censored share.
    #[serde(default)]
    censoring_target: Option<f64>,
    #[serde(default = "default_probes")]
    censoring_probes: usize,
    /// Options for `general_recovery`.
    #[serde(default)]
    general: GeneralOptions,
    /// Covariate index and bin count for `residual_study`.
    #[serde(default)]
    covariate: usize,
    #[serde(default = "default_bins")]
    bins: usize,
    /// Replicates and seed for `variance_comparison`.
    #[serde(default = "default_replications")]
    bootstrap: usize,
    #[serde(default)]
    seed: u64,
}

fn default_replications() -> usize {
    200
}

fn default_probes() -> usize {
    20_000
}

fn default_bins() -> usize {
    10
}

fn experiment_cmd(a: ExperimentArgs) -> Res<()> {
    let mut cfg: ExperimentConfig = read_json(&a.config)?;
    let mut calibration = Value::Null;
    if let Some(target) = cfg.censoring_target {
        let (rate, (c1, c2)) =
            simulate::calibrate_censoring(&cfg.spec, target, cfg.censoring_probes)?;
        cfg.spec.censoring = Censoring {
            rate1: rate,
            rate2: rate,
        };
        calibration = json!({ "rate": rate, "censored_share": [c1, c2] });
    }
    let study = experiments::Study {
        spec: cfg.spec.clone(),
        grid: cfg.grid.clone(),
        replications: cfg.replications,
    };
    let result = match cfg.study {
        StudyKind::SimpleRecovery => to_value(&experiments::simple_recovery(&study)?)?,
        StudyKind::GeneralRecovery => {
            let r = experiments::general_recovery(&study, &cfg.general)?;
            let (alpha, beta) = r.mean_gaps();
            let mut v = to_value(&r)?;
            v["mean_slope_gaps"] = json!({ "alpha_gamma": alpha, "beta_gamma": beta });
            v
        }
        StudyKind::LinkSelection => to_value(&experiments::link_selection(&study)?)?,
        StudyKind::ResidualStudy => {
            let r = experiments::residual_study(&study, cfg.covariate, cfg.bins)?;
            let mut v = to_value(&r)?;
            v["within_share"] = json!(r.within_share());
            v["detected_share_05"] = json!(r.detected_share(0.05));
            v
        }
        StudyKind::VarianceComparison => to_value(&experiments::variance_comparison(
            &cfg.spec,
            &cfg.grid,
            cfg.bootstrap,
            cfg.seed,
        )?)?,
    };
    let resolved = config(
        &a,
        json!({ "resolved": cfg, "censoring_calibration": calibration }),
    )?;
    write_json(
        a.out.as_deref(),
        manifest("experiment", &resolved),
        json!({ "study": cfg.study, "result": result }),
    )
}
