//! Batch command driver behind the `operad-forge` binary.
//!
//! Every command produces a [`RunReport`]; exit codes are 0 (all checks
//! pass), 1 (usage or input error) and 2 (a mathematical check failed).

use std::collections::BTreeMap;
use std::time::Instant;

use clap::{Args, Parser, Subcommand};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use serde_json::{json, Value};

use crate::error::{Error, Result};
use crate::formality::{
    designed_obstruction, intrinsic_formality_check, perturbed_structure, render_comb, stages_consistent, theta_construct,
    verify_theta, formality_universe, LambdaFamily, Verdict,
};
use crate::graded::GradedVectorSpace;
use crate::hochschild::{
    binfty_relations_check, cohomology_table, verify_gerstenhaber_on_cohomology, Cochain, TruncatedPolyAlgebra,
};
use crate::koszul::{koszulity_check, oinfinity_from_algebra, Truncation};
use crate::operad::{builtin, PresentationFile, QuadraticPresentation, SeqComponent};
use crate::polyvector::polyvector_algebra;

pub const SCHEMA: u32 = 1;
pub const CAP_ARITY: usize = 4;
pub const CAP_DEGREE: i64 = 8;
pub const CAP_VARS: usize = 3;

#[derive(Parser, Debug)]
#[command(name = "operad-forge", version, about = "Exact operadic homological algebra at finite truncations")]
pub struct Cli {
    /// lift the resource caps (arity ≤ 4, degree ≤ 8, vars ≤ 3)
    #[arg(long, global = true)]
    pub no_caps: bool,
    /// pretty-print the JSON report
    #[arg(long, global = true)]
    pub pretty: bool,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Koszulity of a quadratic operad, arity by arity
    Koszul(KoszulArgs),
    /// Quadratic dual cooperad and Koszul dual operad
    Quaddual(SourceArgs),
    /// Truncated Hochschild cohomology of k[x_1..x_n] against the HKR count
    Hochschild(HochschildArgs),
    /// B∞ identities on seeded random cochains
    Binfty(BinftyArgs),
    /// Intrinsic formality and the θ-isomorphism for polyvector fields
    Formality(FormalityArgs),
}

#[derive(Args, Debug, Clone)]
pub struct SourceArgs {
    /// builtin operad: com, ass, lie, gerst
    #[arg(long, conflicts_with = "file")]
    pub preset: Option<String>,
    /// JSON presentation file
    #[arg(long)]
    pub file: Option<std::path::PathBuf>,
}

#[derive(Args, Debug, Clone)]
pub struct KoszulArgs {
    #[command(flatten)]
    pub source: SourceArgs,
    #[arg(long, default_value_t = 1)]
    pub dim_v: usize,
    #[arg(long, default_value_t = 3)]
    pub max_arity: usize,
}

#[derive(Args, Debug, Clone)]
pub struct HochschildArgs {
    #[arg(long, default_value_t = 1)]
    pub vars: usize,
    /// polynomial degree bound D (cohomology is also computed at D + 1)
    #[arg(long, default_value_t = 6)]
    pub degree: i64,
    #[arg(long, default_value_t = 3)]
    pub max_arity: usize,
    /// inclusive weight window `a..b`
    #[arg(long, default_value = "-2..2", allow_hyphen_values = true)]
    pub weights: String,
    /// also check the Gerstenhaber structure on the computed classes
    #[arg(long)]
    pub gerstenhaber: bool,
}

#[derive(Args, Debug, Clone)]
pub struct BinftyArgs {
    #[arg(long, default_value_t = 1)]
    pub vars: usize,
    #[arg(long, default_value_t = 5)]
    pub degree: i64,
    /// number of random cochain triples
    #[arg(long, default_value_t = 2)]
    pub samples: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// check the single-element sample {μ} instead
    #[arg(long)]
    pub mu_only: bool,
}

#[derive(Args, Debug, Clone)]
pub struct FormalityArgs {
    #[arg(long, default_value_t = 1)]
    pub vars: usize,
    /// polynomial weight bound of the polyvector fields
    #[arg(long, default_value_t = 2)]
    pub weight: i64,
    /// arity bound A
    #[arg(long, default_value_t = 3)]
    pub arity: usize,
    /// λ-order K (default A − 1)
    #[arg(long)]
    pub order: Option<usize>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// run θ on the strict structure
    #[arg(long)]
    pub no_perturbation: bool,
    /// map-weight window for the H¹ computation
    #[arg(long, default_value = "-2..2", allow_hyphen_values = true)]
    pub deltas: String,
    /// replace the input by a structure whose obstruction is not exact at this stage
    #[arg(long)]
    pub obstruction_stage: Option<usize>,
}

#[derive(Serialize, Debug)]
pub struct RunReport {
    pub schema: u32,
    pub command: String,
    pub params: Value,
    pub payload: Value,
    pub passed: bool,
    pub exact: bool,
    pub elapsed_ms: u128,
}

/// Outcome of a run: the report and the exit code.
pub struct Outcome {
    pub report: Option<RunReport>,
    pub error: Option<String>,
    pub code: i32,
}

pub fn exit_code(e: &Error) -> i32 {
    match e {
        Error::Usage(_) | Error::Parse(_) | Error::MalformedPresentation(_) | Error::NonEquivariantRelations
        | Error::ArityOverflow { .. } | Error::BoundExceeded { .. } | Error::InvalidPermutation(_) => 1,
        _ => 2,
    }
}

/// Parse an inclusive range `a..b` (or a single integer).
pub fn parse_range(s: &str) -> Result<Vec<i64>> {
    let bad = || Error::Usage(format!("expected a range a..b, got {s:?}"));
    let (a, b) = match s.split_once("..") {
        Some((a, b)) => (a.trim().parse::<i64>().map_err(|_| bad())?, b.trim().parse::<i64>().map_err(|_| bad())?),
        None => {
            let x = s.trim().parse::<i64>().map_err(|_| bad())?;
            (x, x)
        }
    };
    if a > b {
        return Err(bad());
    }
    Ok((a..=b).collect())
}

struct Caps(bool);

impl Caps {
    fn arity(&self, a: usize) -> Result<()> {
        self.check(a as i64, CAP_ARITY as i64)
    }
    fn degree(&self, d: i64) -> Result<()> {
        if d < 0 {
            return Err(Error::Usage(format!("negative degree bound {d}")));
        }
        self.check(d, CAP_DEGREE)
    }
    fn vars(&self, v: usize) -> Result<()> {
        if v == 0 {
            return Err(Error::Usage("at least one variable is required".into()));
        }
        self.check(v as i64, CAP_VARS as i64)
    }
    fn check(&self, x: i64, cap: i64) -> Result<()> {
        if !self.0 && x > cap {
            return Err(Error::BoundExceeded { requested: x, bound: cap });
        }
        Ok(())
    }
}

fn load(src: &SourceArgs) -> Result<QuadraticPresentation> {
    match (&src.preset, &src.file) {
        (Some(name), None) => builtin(name).ok_or_else(|| Error::Usage(format!("unknown preset {name:?}"))),
        (None, Some(path)) => {
            let text = std::fs::read_to_string(path).map_err(|e| Error::Usage(format!("{}: {e}", path.display())))?;
            PresentationFile::from_json(&text)?.into_presentation()
        }
        _ => Err(Error::Usage("give exactly one of --preset or --file".into())),
    }
}

fn component_summary(c: &SeqComponent) -> Value {
    let chars: BTreeMap<String, Vec<String>> = c
        .graded_characters()
        .into_iter()
        .map(|(d, v)| (d.to_string(), v.iter().map(|x| x.to_string()).collect()))
        .collect();
    json!({ "dim": c.dim(), "dims_by_degree": c.dims_by_degree(), "characters": chars })
}

fn cmd_koszul(a: &KoszulArgs, caps: &Caps) -> Result<(Value, Value, bool)> {
    caps.arity(a.max_arity)?;
    let p = load(&a.source)?;
    let v = GradedVectorSpace::concentrated(a.dim_v, 0);
    let r = koszulity_check(&p, &v, a.max_arity)?;
    let passed = r.values().all(|x| x.acyclic);
    let params = json!({ "operad": p.name, "dim_v": a.dim_v, "max_arity": a.max_arity });
    Ok((params, json!({ "arities": r.values().collect::<Vec<_>>(), "koszul": passed }), passed))
}

/// The expected cooperad for the builtins: `(target{m})*`.
fn expected_dual(name: &str) -> Option<(QuadraticPresentation, i64)> {
    match name {
        "com" => Some((crate::operad::lie(), -1)),
        "lie" => Some((crate::operad::com(), -1)),
        "ass" => Some((crate::operad::ass(), -1)),
        "gerst" => Some((crate::operad::gerst(), -2)),
        _ => None,
    }
}

fn cmd_quaddual(a: &SourceArgs) -> Result<(Value, Value, bool)> {
    let p = load(a)?;
    let perp = p.quadratic_dual();
    let dual = p.koszul_dual();
    let mut passed = true;
    let mut cooperad = BTreeMap::new();
    for n in [2usize, 3] {
        cooperad.insert(n.to_string(), component_summary(perp.component(n).expect("arities 2 and 3")));
    }
    let expected = match expected_dual(&p.name) {
        Some((t, m)) => {
            let mut per = BTreeMap::new();
            for n in [2usize, 3] {
                let e = t.component(n)?.component.operadic_shift(m).dual();
                let ok = perp.component(n).expect("arities 2 and 3").isomorphic(&e);
                passed &= ok;
                per.insert(n.to_string(), ok);
            }
            json!({ "operad": t.name, "operadic_shift": m, "matches": per })
        }
        None => Value::Null,
    };
    let dd = dual.koszul_dual();
    let mut double = BTreeMap::new();
    for n in 1..=3usize {
        let ok = dd.component(n)?.component.dims_by_degree() == p.component(n)?.component.dims_by_degree();
        passed &= ok;
        double.insert(n.to_string(), ok);
    }
    let mut dual_dims = BTreeMap::new();
    for n in 1..=3usize {
        dual_dims.insert(n.to_string(), dual.component(n)?.component.dims_by_degree());
    }
    let payload = json!({
        "cooperad": { "name": perp.name, "components": cooperad },
        "expected": expected,
        "koszul_dual": { "presentation": PresentationFile::from_presentation(&dual), "dims": dual_dims },
        "double_dual_matches": double,
    });
    Ok((json!({ "operad": p.name }), payload, passed))
}

fn cmd_hochschild(a: &HochschildArgs, caps: &Caps) -> Result<(Value, Value, bool)> {
    caps.vars(a.vars)?;
    caps.degree(a.degree)?;
    caps.arity(a.max_arity)?;
    let weights = parse_range(&a.weights)?;
    let alg = TruncatedPolyAlgebra::new(a.vars, a.degree);
    let table = cohomology_table(&alg, a.max_arity, &weights)?;
    let mut passed = table.entries.iter().all(|e| e.stabilized && e.matches_hkr);
    let mut payload = json!({ "table": table });
    if a.gerstenhaber {
        let g = verify_gerstenhaber_on_cohomology(&alg, a.max_arity, &weights)?;
        passed &= g.ok;
        payload["gerstenhaber"] = serde_json::to_value(&g).expect("serializable");
    }
    let params = json!({
        "vars": a.vars, "degree": a.degree, "max_arity": a.max_arity, "weights": weights, "gerstenhaber": a.gerstenhaber,
    });
    Ok((params, payload, passed))
}

/// The random cochain triples used by `binfty`.
pub fn binfty_samples(vars: usize, degree: i64, samples: usize, seed: u64) -> Vec<Vec<Cochain>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..samples)
        .map(|_| {
            (0..3)
                .map(|_| {
                    let n = rng.random_range(0..=2usize);
                    let w = rng.random_range(-1..=1i64);
                    Cochain::random(&mut rng, vars, n, w, degree, 0.5)
                })
                .collect()
        })
        .collect()
}

fn cmd_binfty(a: &BinftyArgs, caps: &Caps) -> Result<(Value, Value, bool)> {
    caps.vars(a.vars)?;
    caps.degree(a.degree)?;
    let sets = if a.mu_only {
        vec![vec![Cochain::mu(a.vars, a.degree)]]
    } else {
        binfty_samples(a.vars, a.degree, a.samples, a.seed)
    };
    let mut passed = true;
    let mut results = Vec::new();
    for s in &sets {
        let r = binfty_relations_check(s)?;
        passed &= r.ok;
        let shape: Vec<Value> = s.iter().map(|c| json!({ "arity": c.arity, "weight": c.weight, "terms": c.table.len() })).collect();
        results.push(json!({ "cochains": shape, "report": r }));
    }
    let failure = results.iter().find_map(|r| r["report"]["failure"].as_str().map(str::to_string));
    let params = json!({ "vars": a.vars, "degree": a.degree, "samples": a.samples, "seed": a.seed, "mu_only": a.mu_only });
    Ok((params, json!({ "samples": results, "failure": failure }), passed))
}

fn theta_payload(f: &LambdaFamily) -> Result<(Value, bool)> {
    let t = theta_construct(f)?;
    let verified = verify_theta(&t, f);
    let consistent = stages_consistent(&t);
    let model = &f.base.model;
    let components: Vec<Value> = t
        .components
        .iter()
        .map(|(n, phi)| {
            let images: BTreeMap<String, String> = phi
                .iter()
                .map(|(h, c)| (model.universe[*h as usize].label.clone(), render_comb(model, c)))
                .collect();
            json!({ "n": n, "lambda_power": n - 1, "images": images })
        })
        .collect();
    let v = json!({
        "order": t.order,
        "leaf_cap": f.leaf_cap(),
        "identity": t.is_identity(),
        "stages": t.stages,
        "components": components,
        "verified": verified,
        "stages_consistent": consistent,
    });
    Ok((v, verified && consistent))
}

fn cmd_formality(a: &FormalityArgs, caps: &Caps) -> Result<(Value, Value, bool)> {
    caps.vars(a.vars)?;
    caps.arity(a.arity)?;
    caps.degree(a.weight)?;
    let deltas = parse_range(&a.deltas)?;
    let params = json!({
        "vars": a.vars, "weight": a.weight, "arity": a.arity, "order": a.order, "seed": a.seed,
        "perturbed": !a.no_perturbation, "deltas": deltas, "obstruction_stage": a.obstruction_stage,
    });
    if let Some(stage) = a.obstruction_stage {
        let f = LambdaFamily::new(designed_obstruction(stage)?, a.order)?;
        let (theta, ok) = theta_payload(&f)?;
        return Ok((params, json!({ "theta": theta }), ok));
    }
    let alg = polyvector_algebra(a.vars, formality_universe(a.weight, &deltas));
    let report = intrinsic_formality_check(&alg, a.weight, a.arity, &deltas)?;
    let strict_alg = polyvector_algebra(a.vars, a.weight);
    let strict = oinfinity_from_algebra(&strict_alg, Truncation { filt_bound: a.weight, arity_bound: a.arity });
    let input = if a.no_perturbation { strict } else { perturbed_structure(&strict, a.seed) };
    let f = LambdaFamily::new(input, a.order)?;
    let (theta, ok) = theta_payload(&f)?;
    let passed = ok && report.verdict != Verdict::Fails;
    Ok((params, json!({ "intrinsic_formality": report, "theta": theta }), passed))
}

/// Run a parsed command line. `argv` is echoed into the report.
pub fn run(cli: &Cli, argv: &[String]) -> Outcome {
    let caps = Caps(cli.no_caps);
    let start = Instant::now();
    let res = match &cli.command {
        Command::Koszul(a) => cmd_koszul(a, &caps),
        Command::Quaddual(a) => cmd_quaddual(a),
        Command::Hochschild(a) => cmd_hochschild(a, &caps),
        Command::Binfty(a) => cmd_binfty(a, &caps),
        Command::Formality(a) => cmd_formality(a, &caps),
    };
    match res {
        Ok((params, payload, passed)) => Outcome {
            report: Some(RunReport {
                schema: SCHEMA,
                command: argv.join(" "),
                params,
                payload,
                passed,
                exact: true,
                elapsed_ms: start.elapsed().as_millis(),
            }),
            error: None,
            code: if passed { 0 } else { 2 },
        },
        Err(e) => Outcome { report: None, code: exit_code(&e), error: Some(e.to_string()) },
    }
}

/// Parse `argv` (without the program name), run, and render: `(exit code, stdout, stderr)`.
pub fn execute(argv: &[String]) -> (i32, String, String) {
    let cli = match Cli::try_parse_from(std::iter::once("operad-forge".to_string()).chain(argv.iter().cloned())) {
        Ok(c) => c,
        // clap's own convention is exit 2 for usage errors; here 2 means a math failure
        Err(e) if e.use_stderr() => return (1, String::new(), e.render().to_string()),
        Err(e) => return (0, e.render().to_string(), String::new()),
    };
    let out = run(&cli, argv);
    let stdout = out
        .report
        .map(|r| {
            let text = if cli.pretty { serde_json::to_string_pretty(&r) } else { serde_json::to_string(&r) };
            text.expect("report serializes") + "\n"
        })
        .unwrap_or_default();
    let stderr = out.error.map(|e| format!("error: {e}\n")).unwrap_or_default();
    (out.code, stdout, stderr)
}

/// Cap rayon's worker count from `OPERAD_FORGE_THREADS`.
pub fn configure_threads() -> Result<()> {
    if let Ok(s) = std::env::var("OPERAD_FORGE_THREADS") {
        let n: usize = s.trim().parse().map_err(|_| Error::Usage(format!("OPERAD_FORGE_THREADS={s:?} is not a count")))?;
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| Error::Usage(e.to_string()))?;
    }
    Ok(())
}
