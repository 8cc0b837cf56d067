use clap::Args;
use serde_json::{json, Value};
use weierlift::csvout::CsvTable;
use weierlift::holder::{estimate_exponent, nonconvergence_witness};
use weierlift::iterated::{bound_diagnostics, default_bound_eps, FrequencyPair};
use weierlift::rde::{approximation_gap, gap_table, solve_ode_truncated, solve_rough, BilinearField, RdeProblem};
use weierlift::roughpath::{
    check_norm_exponent, convergence_report, grows_with_depth, lift_limit, lift_truncated, rough_norm_profile, ConvergenceParams,
    RoughNormEstimate,
};
use weierlift::trigseries::imkeller_demo;
use weierlift::weier::{eval_vector, eval_vector_limit, parse_amplitude};
use weierlift::{Error, RationalTime, Result, TruncationPolicy, VectorWeierstrass};

use crate::args::{parse_time, read_config, ComponentArgs, OutputArgs, PolicyArgs};

/// What a command produces.
pub enum Output {
    Table(CsvTable, Option<Value>),
    Files(Vec<(String, CsvTable)>),
}

fn describe(v: &VectorWeierstrass) -> String {
    v.components().iter().map(|c| format!("[{c}]")).collect::<Vec<_>>().join(" ")
}

fn policy_label(p: &TruncationPolicy) -> String {
    match p {
        TruncationPolicy::Fixed(n) => format!("N={n}"),
        TruncationPolicy::Tolerance { tol, eps_prime, max_n } => format!("tol={tol} eps'={eps_prime} max_n={max_n}"),
    }
}

#[derive(Args, Debug)]
pub struct EvalArgs {
    #[command(flatten)]
    pub comps: ComponentArgs,
    /// Component exponent, paired with `--b` in order
    #[arg(long = "alpha")]
    pub alpha: Vec<f64>,
    /// Truncation level
    #[arg(long = "N", default_value_t = 20)]
    pub n: usize,
    /// Evaluate the full series instead of a truncation
    #[arg(long)]
    pub limit: bool,
    /// First grid time
    #[arg(long, default_value = "0")]
    pub from: String,
    /// Last grid time
    #[arg(long, default_value = "1")]
    pub to: String,
    /// Grid spacing, `p/q` or decimal
    #[arg(long, default_value = "1/1024")]
    pub step: String,
    #[command(flatten)]
    pub output: OutputArgs,
}

pub fn eval(args: &EvalArgs) -> Result<Output> {
    let v = args.comps.build(&args.alpha)?;
    let from = parse_time("from", &args.from)?;
    let to = parse_time("to", &args.to)?;
    let step = parse_time("step", &args.step)?;
    if from > to || to > RationalTime::one() {
        return Err(Error::param("to", format!("need from <= to <= 1, got from = {from}, to = {to}")));
    }
    if step.is_zero() {
        return Err(Error::param("step", "grid spacing must be positive"));
    }
    let mut times = vec![from.clone()];
    while let Some(next) = times.last().and_then(|t| t.checked_add(&step).ok()).filter(|t| *t <= to) {
        if times.len() > 10_000_000 {
            return Err(Error::param("step", "grid has more than 10^7 points"));
        }
        times.push(next);
    }
    let values: Vec<Vec<f64>> = times
        .iter()
        .map(|t| if args.limit { eval_vector_limit(&v, t) } else { eval_vector(&v, args.n, t) })
        .collect();
    let level = if args.limit { "limit".to_string() } else { args.n.to_string() };
    let header = std::iter::once("t".to_string()).chain((1..=v.dim()).map(|i| format!("W{i}")));
    let mut table = CsvTable::new(header);
    for (t, w) in times.iter().zip(&values) {
        table.push(std::iter::once(t.to_f64().to_string()).chain(w.iter().map(|x| x.to_string())));
    }
    table
        .meta("components", describe(&v))
        .meta("N", &level)
        .meta("from", &from)
        .meta("to", &to)
        .meta("step", &step);
    if !args.comps.figure1 {
        return Ok(Output::Table(table, None));
    }
    let mut curve = CsvTable::new(["W1", "W2"]);
    for w in &values {
        curve.push_floats(w);
    }
    curve.meta("components", describe(&v)).meta("N", &level).meta("step", &step);
    Ok(Output::Files(vec![
        ("figure1_components.csv".into(), table),
        ("figure1_curve.csv".into(), curve),
    ]))
}

#[derive(Args, Debug)]
pub struct LiftArgs {
    #[command(flatten)]
    pub comps: ComponentArgs,
    /// Component exponent, paired with `--b` in order
    #[arg(long = "alpha")]
    pub alpha: Vec<f64>,
    #[command(flatten)]
    pub policy: PolicyArgs,
    #[arg(long, default_value = "0")]
    pub s: String,
    #[arg(long, default_value = "1")]
    pub t: String,
    #[command(flatten)]
    pub output: OutputArgs,
}

pub fn lift(args: &LiftArgs) -> Result<Output> {
    let v = args.comps.build(&args.alpha)?;
    let policy = args.policy.policy(Some(20))?;
    let s = parse_time("s", &args.s)?;
    let t = parse_time("t", &args.t)?;
    let inc = match policy {
        TruncationPolicy::Fixed(n) => lift_truncated(&v, n, &s, &t)?,
        _ => lift_limit(&v, &policy, &s, &t)?,
    };
    let mut table = CsvTable::new(["i", "j", "first_i", "second_ij", "levy_ij"]);
    for i in 0..v.dim() {
        for j in 0..v.dim() {
            table.push([
                (i + 1).to_string(),
                (j + 1).to_string(),
                inc.first[i].to_string(),
                inc.second[i][j].to_string(),
                (inc.second[i][j] - inc.second[j][i]).to_string(),
            ]);
        }
    }
    table
        .meta("components", describe(&v))
        .meta("policy", policy_label(&policy))
        .meta("s", &s)
        .meta("t", &t);
    Ok(Output::Table(table, Some(serde_json::to_value(&inc).expect("serializable"))))
}

#[derive(Args, Debug)]
pub struct NormsArgs {
    #[command(flatten)]
    pub comps: ComponentArgs,
    /// Seminorm exponent, in (1/3, min alpha_i]; defaults to min alpha_i - 0.02
    #[arg(long = "alpha")]
    pub alpha: Option<f64>,
    #[command(flatten)]
    pub policy: PolicyArgs,
    /// Dyadic grid depth
    #[arg(long, default_value_t = 10)]
    pub depth: u32,
    #[command(flatten)]
    pub output: OutputArgs,
}

pub fn norms(args: &NormsArgs) -> Result<Output> {
    let v = args.comps.build(&[])?;
    let alpha = args.alpha.unwrap_or(v.min_alpha() - 0.02);
    check_norm_exponent(&v, alpha)?;
    let policy = args.policy.policy(Some(20))?;
    let profile = rough_norm_profile(&v, &policy, alpha, args.depth)?;
    let area: Vec<f64> = profile.iter().map(|e| e.area_part).collect();
    let grows = grows_with_depth(&area);
    let mut table = RoughNormEstimate::to_table(&profile);
    table
        .meta("components", describe(&v))
        .meta("policy", policy_label(&policy))
        .meta("alpha", alpha)
        .meta("depth", args.depth)
        .meta("growsWithDepth", grows);
    let json = json!({
        "estimate": profile.last(),
        "profile": profile,
        "growsWithDepth": grows,
    });
    Ok(Output::Table(table, Some(json)))
}

#[derive(Args, Debug)]
pub struct ConvergeArgs {
    #[command(flatten)]
    pub comps: ComponentArgs,
    /// Regularity exponent; defaults to min alpha_i
    #[arg(long = "alpha")]
    pub alpha: Option<f64>,
    /// Truncation levels, comma separated or repeated
    #[arg(long = "N", value_delimiter = ',', required = true)]
    pub ns: Vec<usize>,
    #[arg(long, default_value_t = 0.02)]
    pub eps: f64,
    /// Defaults to alpha - eps/2
    #[arg(long)]
    pub beta: Option<f64>,
    #[arg(long = "eps-prime", default_value_t = 0.1)]
    pub eps_prime: f64,
    #[arg(long, default_value_t = 10)]
    pub depth: u32,
    #[command(flatten)]
    pub output: OutputArgs,
}

pub fn converge(args: &ConvergeArgs) -> Result<Output> {
    let v = args.comps.build(&[])?;
    let alpha = args.alpha.unwrap_or(v.min_alpha());
    let params = ConvergenceParams {
        ns: args.ns.clone(),
        alpha,
        eps: args.eps,
        beta: args.beta.unwrap_or(alpha - 0.5 * args.eps),
        eps_prime: args.eps_prime,
        depth: args.depth,
    };
    let report = convergence_report(&v, &params).map_err(|e| match e {
        Error::Fit(msg) => Error::param("N", msg),
        other => other,
    })?;
    let mut table = report.to_table();
    table.meta("components", describe(&v));
    Ok(Output::Table(table, Some(serde_json::to_value(&report).expect("serializable"))))
}

#[derive(Args, Debug)]
pub struct RdeArgs {
    #[command(flatten)]
    pub comps: ComponentArgs,
    /// Component exponent, paired with `--b` in order
    #[arg(long = "alpha")]
    pub alpha: Vec<f64>,
    /// Solve for N = 4, 8, 12 with the preset driver and Y(0) = (1, 0)
    #[arg(long)]
    pub figure3: bool,
    #[command(flatten)]
    pub policy: PolicyArgs,
    /// Use the second-order rough step instead of RK4
    #[arg(long)]
    pub rough: bool,
    /// Step size; RK4 defaults to min(1e-3, 0.1 b^-N), the rough step to 2^-12
    #[arg(long)]
    pub step: Option<f64>,
    /// Initial value, comma separated
    #[arg(long, value_delimiter = ',', default_values_t = [1.0, 0.0])]
    pub y0: Vec<f64>,
    #[arg(long = "t-end", default_value = "1")]
    pub t_end: String,
    /// Also report sup-distances between RK4 paths at these levels
    #[arg(long, value_delimiter = ',')]
    pub gap: Vec<usize>,
    #[command(flatten)]
    pub output: OutputArgs,
}

pub fn rde(args: &RdeArgs) -> Result<Output> {
    let driver = if args.figure3 {
        if !args.comps.is_empty() || !args.alpha.is_empty() {
            return Err(Error::param("figure3", "cannot be combined with component flags"));
        }
        VectorWeierstrass::figure1()
    } else {
        args.comps.build(&args.alpha)?
    };
    let mut t_end = parse_time("t-end", &args.t_end)?;
    let mut y0 = args.y0.clone();
    if let Some(path) = &args.comps.config {
        let cfg = read_config(path)?;
        if let Some(y) = cfg.y0 {
            y0 = y;
        }
        if let Some(t) = cfg.t_end {
            t_end = parse_time("t-end", &t)?;
        }
    }
    let problem = RdeProblem {
        field: BilinearField::figure3(),
        driver,
        y0,
        t_end,
        step: if args.rough { None } else { args.step },
    };
    problem.validate()?;
    let meta = |table: &mut CsvTable, label: String| {
        table
            .meta("components", describe(&problem.driver))
            .meta("field", "M(Y)=[[0,Y2/3],[Y1/2,0]]")
            .meta("y0", format!("{:?}", problem.y0))
            .meta("t_end", &problem.t_end)
            .meta("solver", label);
    };
    if args.figure3 {
        let mut files = Vec::new();
        for n in [4usize, 8, 12] {
            let path = solve_ode_truncated(&problem, n)?;
            let mut table = path.to_table();
            meta(&mut table, format!("rk4 N={n} step={}", args.step.map_or("default".into(), |h| h.to_string())));
            files.push((format!("figure3_N{n}.csv"), table));
        }
        if args.gap.len() >= 2 {
            files.push(("figure3_gaps.csv".into(), gap_output(&problem, &args.gap)?));
        }
        return Ok(Output::Files(files));
    }
    let (path, label) = if args.rough {
        let policy = args.policy.policy(None)?;
        let step = args.step.unwrap_or(1.0 / 4096.0);
        (solve_rough(&problem, &policy, step)?, format!("rough {} step={step}", policy_label(&policy)))
    } else {
        let n = args.policy.n.ok_or_else(|| Error::param("N", "RK4 needs --N (or use --rough)"))?;
        if args.policy.tol.is_some() {
            return Err(Error::param("tol", "--tol applies to --rough only"));
        }
        (solve_ode_truncated(&problem, n)?, format!("rk4 N={n}"))
    };
    let mut table = path.to_table();
    meta(&mut table, label);
    if args.gap.len() >= 2 {
        return Ok(Output::Files(vec![("path.csv".into(), table), ("gaps.csv".into(), gap_output(&problem, &args.gap)?)]));
    }
    Ok(Output::Table(table, Some(serde_json::to_value(&path).expect("serializable"))))
}

fn gap_output(problem: &RdeProblem, ns: &[usize]) -> Result<CsvTable> {
    let rows = approximation_gap(problem, ns, None)?;
    let mut table = gap_table(&rows);
    table.meta("components", describe(&problem.driver));
    Ok(table)
}

#[derive(Args, Debug)]
pub struct DemoArgs {
    #[arg(long = "b", default_value_t = 2)]
    pub b: u64,
    #[arg(long = "a", default_value = "18/25")]
    pub a: String,
    /// Levels, comma separated
    #[arg(long = "N", value_delimiter = ',', default_values_t = (4..=16).collect::<Vec<usize>>())]
    pub ns: Vec<usize>,
    #[arg(long, default_value = "0")]
    pub s: String,
    #[arg(long, default_value = "1/3")]
    pub t: String,
    #[command(flatten)]
    pub output: OutputArgs,
}

pub fn demo(args: &DemoArgs) -> Result<Output> {
    let amplitude = parse_amplitude(&args.a)?;
    let s = parse_time("s", &args.s)?;
    let t = parse_time("t", &args.t)?;
    let demo = imkeller_demo(args.b, amplitude, &args.ns, &s, &t)?;
    let mut table = demo.to_table();
    table
        .meta("sumObeysBound", demo.sum_obeys_bound())
        .meta("diffDoesNotDecay", demo.diff_does_not_decay());
    Ok(Output::Table(table, Some(serde_json::to_value(&demo).expect("serializable"))))
}

#[derive(Args, Debug)]
pub struct BoundsArgs {
    /// The two bases, given twice
    #[arg(long = "b", num_args = 1, required = true)]
    pub b: Vec<u64>,
    #[arg(long)]
    pub n: usize,
    #[arg(long)]
    pub ell: usize,
    /// Exponent of bound (iv); defaults to min(alpha1, alpha2)/2 for the
    /// preset amplitudes
    #[arg(long)]
    pub eps: Option<f64>,
    /// Sample all pairs of the dyadic grid of this depth
    #[arg(long, default_value_t = 4)]
    pub depth: u32,
    #[command(flatten)]
    pub output: OutputArgs,
}

pub fn bounds(args: &BoundsArgs) -> Result<Output> {
    let [b1, b2] = args.b[..] else {
        return Err(Error::param("b", format!("expected two bases, got {}", args.b.len())));
    };
    if !(1..=10).contains(&args.depth) {
        return Err(Error::param("depth", "must lie in [1, 10]"));
    }
    let pair = FrequencyPair {
        n: args.n,
        ell: args.ell,
        b1,
        b2,
    };
    let eps = match args.eps {
        Some(e) => e,
        None => {
            let fig = VectorWeierstrass::figure1();
            default_bound_eps(&fig.components()[0], &fig.components()[1])
        }
    };
    let k = 1u64 << args.depth;
    let mut sample = Vec::new();
    for i in 0..=k {
        for j in i + 1..=k {
            sample.push((RationalTime::dyadic(i, args.depth)?, RationalTime::dyadic(j, args.depth)?));
        }
    }
    let report = bound_diagnostics(&pair, eps, &sample)?;
    Ok(Output::Table(report.to_table(), Some(serde_json::to_value(&report).expect("serializable"))))
}

#[derive(Args, Debug)]
pub struct HolderArgs {
    #[command(flatten)]
    pub comps: ComponentArgs,
    /// Component exponent, paired with `--b` in order
    #[arg(long = "alpha")]
    pub alpha: Vec<f64>,
    #[arg(long = "N", default_value_t = 20)]
    pub n: usize,
    #[arg(long, default_value_t = 12)]
    pub depth: u32,
    /// Report the non-convergence witness for levels 1..=N instead
    #[arg(long)]
    pub witness: bool,
    #[command(flatten)]
    pub output: OutputArgs,
}

pub fn holder(args: &HolderArgs) -> Result<Output> {
    let v = args.comps.build(&args.alpha)?;
    if args.witness {
        let mut table = CsvTable::new(["component", "N", "t", "lowerBound", "ratio"]);
        for (i, c) in v.components().iter().enumerate() {
            for n in 1..=args.n {
                let w = nonconvergence_witness(c, n)?;
                table.push([
                    (i + 1).to_string(),
                    n.to_string(),
                    w.t.to_string(),
                    w.lower_bound.to_string(),
                    w.ratio.to_string(),
                ]);
            }
        }
        table.meta("components", describe(&v));
        return Ok(Output::Table(table, None));
    }
    let mut table = CsvTable::new(["component", "m", "scale", "supIncrement"]);
    let mut fits = Vec::new();
    for (i, c) in v.components().iter().enumerate() {
        let fit = estimate_exponent(c, args.n, args.depth)?;
        for r in &fit.rows {
            table.push([(i + 1).to_string(), r.m.to_string(), r.scale.to_string(), r.sup_increment.to_string()]);
        }
        table.meta(&format!("alphaHat{}", i + 1), fit.alpha_hat);
        table.meta(&format!("alpha{}", i + 1), c.alpha());
        fits.push(fit);
    }
    table.meta("components", describe(&v)).meta("N", args.n).meta("depth", args.depth);
    Ok(Output::Table(table, Some(serde_json::to_value(&fits).expect("serializable"))))
}

/// Generic JSON view of a table: numeric cells become numbers.
pub fn table_json(table: &CsvTable) -> Value {
    let cell = |s: &String| s.parse::<f64>().ok().filter(|x| x.is_finite()).map_or(json!(s), |x| json!(x));
    let rows: Vec<Value> = table.rows().iter().map(|r| Value::Array(r.iter().map(cell).collect())).collect();
    let meta: serde_json::Map<String, Value> = table.metadata().iter().map(|(k, v)| (k.clone(), json!(v))).collect();
    json!({
        "version": weierlift::csvout::VERSION,
        "columns": table.header(),
        "rows": rows,
        "meta": meta,
    })
}
