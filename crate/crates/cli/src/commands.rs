use num_complex::Complex64;
use painleve::connection::{connect, leading_behavior, Point};
use painleve::fixtures::random_generic_dataset;
use painleve::monodromy::{
    braid_around_0, braid_around_0_inverse, braid_around_1, braid_around_1_inverse, cubic_residual,
    trace_map_fractional_linear, trace_map_sigma01, trace_map_sigmax1, trace_map_sigmax1_inverse, MonodromyTraces,
    ThetaParams,
};
use painleve::oracle::{picard_leading, picard_solution, verify_connection, PicardSpec, VerifyConfig};
use painleve::series::{expand_at, expansion_at_point, SeriesConfig, SeriesExpansion, DEFAULT_ORDER};
use rayon::prelude::*;
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use thiserror::Error;

/// Largest |cubic residual| accepted by default.
pub const DEFAULT_MAX_RESIDUAL: f64 = 1e-6;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("invalid input: {0}")]
    Schema(String),
    #[error("traces are off the cubic surface: |residual| = {residual:e} > {limit:e}")]
    OffSurface { residual: f64, limit: f64 },
    #[error(transparent)]
    Compute(#[from] painleve::Error),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Schema(_) => 2,
            CliError::Compute(painleve::Error::ThetaInfinityZero | painleve::Error::InvalidOrder { .. }) => 2,
            CliError::Compute(_) => 3,
            CliError::OffSurface { .. } => 4,
        }
    }
}

pub type CliResult<T> = std::result::Result<T, CliError>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Command {
    Connect,
    Expand,
    Eval,
    Braid,
    Picard,
    Verify,
}

/// Settings that come from flags rather than from the payload.
#[derive(Debug, Clone, Copy)]
pub struct Options {
    pub seed: u64,
    pub max_residual: f64,
    pub batch: Option<usize>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct JobSpec {
    pub command: Command,
    #[serde(default)]
    pub payload: Value,
    #[serde(default)]
    pub seed: u64,
}

fn parse<T: DeserializeOwned>(v: Value) -> CliResult<T> {
    serde_json::from_value(v).map_err(|e| CliError::Schema(e.to_string()))
}

fn to_value<T: Serialize>(v: &T) -> Value {
    serde_json::to_value(v).expect("library types always serialize")
}

fn check_surface(t: &MonodromyTraces, limit: f64) -> CliResult<()> {
    let residual = cubic_residual(t).norm();
    if residual.is_finite() && residual <= limit {
        Ok(())
    } else {
        Err(CliError::OffSurface { residual, limit })
    }
}

pub fn run(command: Command, payload: Value, opts: &Options) -> CliResult<Value> {
    match command {
        Command::Connect => cmd_connect(parse(payload)?, opts),
        Command::Expand => cmd_expand(parse(payload)?, opts),
        Command::Eval => cmd_eval(parse(payload)?, opts),
        Command::Braid => cmd_braid(parse(payload)?, opts),
        Command::Picard => cmd_picard(parse(payload)?),
        Command::Verify => match opts.batch {
            Some(k) => cmd_verify_batch(parse(payload)?, k, opts),
            None => cmd_verify(parse(payload)?, opts),
        },
    }
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConnectInput {
    pub theta: ThetaParams,
    pub traces: MonodromyTraces,
}

fn cmd_connect(input: ConnectInput, opts: &Options) -> CliResult<Value> {
    check_surface(&input.traces, opts.max_residual)?;
    let result = connect(&input.theta, &input.traces)?;
    let leading: Vec<_> = [&result.at0, &result.at1, &result.at_inf]
        .into_iter()
        .flat_map(|b| leading_behavior(&input.theta, b))
        .collect();
    let mut out = to_value(&result);
    out["leading"] = to_value(&leading);
    Ok(out)
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExpandInput {
    pub theta: ThetaParams,
    pub point: Point,
    #[serde(default = "default_order")]
    pub order: usize,
    /// Either the monodromy data ...
    #[serde(default)]
    pub traces: Option<MonodromyTraces>,
    /// ... or the branch constants directly.
    #[serde(default)]
    pub sigma: Option<Complex64>,
    #[serde(default)]
    pub r: Option<Complex64>,
}

fn default_order() -> usize {
    DEFAULT_ORDER
}

fn build_expansion(input: &ExpandInput, opts: &Options) -> CliResult<SeriesExpansion> {
    match (&input.traces, input.sigma, input.r) {
        (Some(t), None, None) => {
            check_surface(t, opts.max_residual)?;
            Ok(expansion_at_point(&input.theta, t, input.point, input.order)?)
        }
        (None, Some(sigma), Some(r)) => Ok(expand_at(&input.theta, input.point, sigma, r, input.order)?),
        _ => Err(CliError::Schema(
            "give either `traces` or both `sigma` and `r`".into(),
        )),
    }
}

fn cmd_expand(input: ExpandInput, opts: &Options) -> CliResult<Value> {
    Ok(to_value(&build_expansion(&input, opts)?))
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EvalInput {
    /// A previously computed expansion (output of `expand`) ...
    #[serde(default)]
    pub expansion: Option<SeriesExpansion>,
    /// ... or the inputs of `expand`.
    #[serde(default)]
    pub spec: Option<ExpandInput>,
    pub x: Vec<Complex64>,
    #[serde(default)]
    pub config: SeriesConfig,
}

fn cmd_eval(input: EvalInput, opts: &Options) -> CliResult<Value> {
    let e = match (input.expansion, &input.spec) {
        (Some(e), None) => e,
        (None, Some(spec)) => build_expansion(spec, opts)?,
        _ => return Err(CliError::Schema("give exactly one of `expansion` and `spec`".into())),
    };
    let mut values = Vec::with_capacity(input.x.len());
    for &x in &input.x {
        let (y, y1, y2) = e.jet(x, &input.config)?;
        let residual = e.pvi_residual_with(x, &input.config)?;
        values.push(json!({ "x": to_value(&x), "y": to_value(&y), "yprime": to_value(&y1), "ysecond": to_value(&y2), "pvi_residual": residual.norm() }));
    }
    Ok(json!({ "point": to_value(&e.point), "order": e.order, "values": values }))
}

#[derive(Debug, Clone, Copy, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Generator {
    G0,
    G1,
    G0Inv,
    G1Inv,
    Sigma01,
    Sigmax1,
    Sigmax1Inv,
    FractionalLinear,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BraidInput {
    pub traces: MonodromyTraces,
    pub generator: Generator,
}

fn cmd_braid(input: BraidInput, opts: &Options) -> CliResult<Value> {
    check_surface(&input.traces, opts.max_residual)?;
    let t = &input.traces;
    let out = match input.generator {
        Generator::G0 => braid_around_0(t),
        Generator::G1 => braid_around_1(t),
        Generator::G0Inv => braid_around_0_inverse(t),
        Generator::G1Inv => braid_around_1_inverse(t),
        Generator::Sigma01 => trace_map_sigma01(t),
        Generator::Sigmax1 => trace_map_sigmax1(t),
        Generator::Sigmax1Inv => trace_map_sigmax1_inverse(t),
        Generator::FractionalLinear => trace_map_fractional_linear(t),
    };
    Ok(json!({ "traces": to_value(&out), "cubic_residual": to_value(&cubic_residual(&out)) }))
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PicardInput {
    pub nu1: Complex64,
    pub nu2: Complex64,
    #[serde(rename = "N", default)]
    pub n: i32,
    pub x: Vec<Complex64>,
    /// Path parameter selecting the printed leading form, if wanted.
    #[serde(rename = "calV", default)]
    pub cal_v: Option<f64>,
}

fn cmd_picard(input: PicardInput) -> CliResult<Value> {
    let spec = PicardSpec {
        nu1: input.nu1,
        nu2: input.nu2,
        n: input.n,
    };
    let leading = input.cal_v.map(|v| picard_leading(&spec, v));
    let mut values = Vec::with_capacity(input.x.len());
    for &x in &input.x {
        let y = picard_solution(&spec, x)?;
        let mut row = json!({ "x": to_value(&x), "y": to_value(&y) });
        if let Some(l) = &leading {
            row["leading"] = to_value(&l.evaluate(x)?);
        }
        values.push(row);
    }
    Ok(json!({ "spec": to_value(&spec), "leading_form": to_value(&leading), "values": values }))
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VerifyInput {
    pub theta: ThetaParams,
    pub traces: MonodromyTraces,
    #[serde(default)]
    pub config: VerifyConfig,
}

fn cmd_verify(input: VerifyInput, opts: &Options) -> CliResult<Value> {
    check_surface(&input.traces, opts.max_residual)?;
    Ok(to_value(&verify_connection(&input.theta, &input.traces, &input.config)?))
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BatchInput {
    #[serde(default)]
    pub config: VerifyConfig,
    /// Relative σ1 error regarded as agreement.
    #[serde(default = "default_batch_tolerance")]
    pub tolerance: f64,
}

fn default_batch_tolerance() -> f64 {
    1e-2
}

/// `k` generic datasets drawn from seeds `seed, seed + 1, …`, verified in
/// parallel.  Each run ends in agreement, an explicit diagnostic, or a
/// mismatch; the summary counts all three.
fn cmd_verify_batch(input: BatchInput, k: usize, opts: &Options) -> CliResult<Value> {
    let runs: Vec<Value> = (0..k as u64)
        .into_par_iter()
        .map(|i| {
            let seed = opts.seed + i;
            let dataset = match random_generic_dataset(seed) {
                Ok(d) => d,
                Err(e) => return json!({ "seed": seed, "outcome": "diagnostic", "error": e.to_string() }),
            };
            match verify_connection(&dataset.theta, &dataset.traces, &input.config) {
                Ok(report) => {
                    let ok = report.sigma1_relative_error < input.tolerance;
                    json!({
                        "seed": seed,
                        "outcome": if ok { "agree" } else { "mismatch" },
                        "report": to_value(&report),
                    })
                }
                Err(e) => json!({
                    "seed": seed,
                    "outcome": "diagnostic",
                    "theta": to_value(&dataset.theta),
                    "traces": to_value(&dataset.traces),
                    "error": e.to_string(),
                }),
            }
        })
        .collect();
    let count = |what: &str| runs.iter().filter(|r| r["outcome"] == what).count();
    let summary = json!({
        "runs": k,
        "agree": count("agree"),
        "diagnostic": count("diagnostic"),
        "mismatch": count("mismatch"),
        "tolerance": input.tolerance,
    });
    Ok(json!({ "summary": summary, "runs": runs }))
}
