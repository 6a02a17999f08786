//! The `kvnl` command line.

use std::fmt::Write as _;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use clap::{Args, Parser, Subcommand, ValueEnum};
use num_rational::Ratio;
use rand::Rng;
use serde_json::{json, Map, Value};

use crate::error::{Error, Result};
use crate::kvgame::{
    build_hadamard_subgroup, check_eta, kv_classical_upper_bound, kv_classical_upper_bound_c_over_n, kv_functional,
    kv_measurements, kv_quantum_lower_bound, kv_question_marginal, paper_eta, BellFunctional, CosetTable,
    GameDocument, Referee, KV_CONSTANTS,
};
use crate::localpolytope::{local_content, lv_from_pi, pr_box, Variant};
use crate::states::{expand_tensor_power, locality_threshold, make_mes};
use crate::values::{
    almost_activation_exponent, almost_activation_lower_factor, almost_activation_threshold_ln_d,
    almost_activation_weight, classical_value_exact, classical_value_heuristic, first_crossing,
    kv_value_for_expansion, lv_tensor_upper_bound_symbolic, pair, quantum_prob, quantum_value_kv_closed_form,
    seesaw_lower_bound, superactivation_ratio_bound, DeterministicStrategy, DistributionDocument, ExpansionPath,
    Method, ProbDist, ReportBounds, SeesawConfig, Tagged, ViolationReport, C_DOUBLE_PRIME,
};

/// Largest l for commands that materialize the whole game.
const MAX_BUILD_L: u32 = 3;
const RNG_NOTE: &str = "ChaCha8 (rand_chacha) seeded with seed_from_u64";

#[derive(Parser, Debug)]
#[command(name = "kvnl", version, about = "Khot-Vishnoi game values, isotropic-state bound chains and local content")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    /// Rendering on stdout.
    #[arg(long, value_enum, default_value_t = Format::Json, global = true)]
    pub format: Format,
    /// Write the JSON result to this file as well.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Json,
    Text,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Build a KV game (l ≤ 3) and emit it as a game file.
    KvBuild(KvArgs),
    /// Classical and quantum values of a game, with method labels.
    Values(ValuesArgs),
    /// Bound chain for k copies of the isotropic state.
    Superactivation(SuperArgs),
    /// Upper and lower bound columns for the five-copy construction.
    AlmostActivation(AlmostArgs),
    /// Monte Carlo play of the KV game against a strategy.
    RefereeSim(RefereeArgs),
    /// Local content of a distribution by linear programming.
    LocalContent(LocalArgs),
}

#[derive(Args, Debug, Clone)]
pub struct KvArgs {
    /// log2 of the hypercube dimension.
    #[arg(long, conflicts_with = "n")]
    pub l: Option<u32>,
    /// Hypercube dimension, a power of two.
    #[arg(long)]
    pub n: Option<usize>,
    /// Noise rate in (0, 1/2], "paper" for 1/2 − 1/ln n, or "auto"
    /// (0.25 below n = 8, 1/2 − 1/ln n from n = 8).
    #[arg(long, default_value = "auto")]
    pub eta: EtaRule,
}

#[derive(Args, Debug, Clone)]
pub struct ValuesArgs {
    #[command(flatten)]
    pub kv: KvArgs,
    /// A game file, or "chsh".
    #[arg(long)]
    pub game: Option<String>,
    /// "mes" (KV games only), "seesaw", or "auto".
    #[arg(long, default_value = "auto")]
    pub strategy: String,
    #[arg(long, default_value_t = 20)]
    pub restarts: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Local dimension for the see-saw.
    #[arg(long, default_value_t = 2)]
    pub dim: usize,
}

#[derive(Args, Debug, Clone)]
pub struct SuperArgs {
    #[arg(long)]
    pub d: usize,
    /// Copies, "a..b" (inclusive) or a single k.
    #[arg(long, default_value = "1..10")]
    pub k: KRange,
    /// Isotropic weight, or "threshold" for the locality threshold of d.
    #[arg(long, default_value = "threshold")]
    pub p: PRule,
    /// Noise rule for the exact rows.
    #[arg(long, default_value = "auto")]
    pub eta: EtaRule,
    /// Largest k scanned for the crossing.
    #[arg(long, default_value_t = 10_000_000)]
    pub k_limit: u64,
}

#[derive(Args, Debug, Clone)]
pub struct AlmostArgs {
    /// Exponent α in (0, 1/2), as a fraction or decimal.
    #[arg(long, default_value = "1/11")]
    pub alpha: String,
    /// Comma-separated dimensions; defaults to 10^3, 10^6, …, 10^30.
    #[arg(long)]
    pub d: Option<String>,
    /// Report the dimension where the lower factor first exceeds δ.
    #[arg(long)]
    pub delta: Option<f64>,
}

#[derive(Args, Debug, Clone)]
pub struct RefereeArgs {
    #[command(flatten)]
    pub kv: KvArgs,
    /// "mes", "representative", or a JSON file {"alice": [...], "bob": [...]}.
    #[arg(long, default_value = "mes")]
    pub strategy: String,
    #[arg(long, default_value_t = 100_000)]
    pub samples: u64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

#[derive(Args, Debug, Clone)]
pub struct LocalArgs {
    /// Distribution file {N, K, table}, or "pr-box".
    #[arg(long)]
    pub dist: String,
    #[arg(long, value_enum, default_value_t = VariantArg::Free)]
    pub variant: VariantArg,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum VariantArg {
    Free,
    Local,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum EtaRule {
    Auto,
    Paper,
    Value(f64),
}

impl FromStr for EtaRule {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "auto" => Ok(EtaRule::Auto),
            "paper" => Ok(EtaRule::Paper),
            _ => s.parse().map(EtaRule::Value).map_err(|_| format!("expected a number, \"paper\" or \"auto\", got {s:?}")),
        }
    }
}

impl EtaRule {
    pub fn resolve(self, n: usize) -> Result<f64> {
        let eta = match self {
            EtaRule::Value(v) => v,
            EtaRule::Paper => paper_eta(n as f64)?,
            EtaRule::Auto if n < 8 => 0.25,
            EtaRule::Auto => paper_eta(n as f64)?,
        };
        check_eta(eta)?;
        Ok(eta)
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum PRule {
    Threshold,
    Value(f64),
}

impl FromStr for PRule {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        if s == "threshold" {
            return Ok(PRule::Threshold);
        }
        let v: f64 = s.parse().map_err(|_| format!("expected a number or \"threshold\", got {s:?}"))?;
        if !(0.0..=1.0).contains(&v) {
            return Err(format!("p = {v} must lie in [0, 1]"));
        }
        Ok(PRule::Value(v))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct KRange {
    pub start: u32,
    pub end: u32,
}

impl FromStr for KRange {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        let parse = |t: &str| t.trim().parse::<u32>().map_err(|_| format!("bad k in {s:?}"));
        let (start, end) = match s.split_once("..") {
            Some((a, b)) => (parse(a)?, parse(b.trim_start_matches('='))?),
            None => {
                let k = parse(s)?;
                (k, k)
            }
        };
        if start == 0 || end < start {
            return Err(format!("k range {s:?} must satisfy 1 ≤ start ≤ end"));
        }
        Ok(KRange { start, end })
    }
}

/// Parses "p/q", an integer, or a finite decimal exactly.
pub fn parse_rational(s: &str) -> Result<Ratio<i64>> {
    let bad = || Error::invalid(format!("cannot read {s:?} as a fraction or decimal"));
    let s = s.trim();
    if let Some((int, frac)) = s.split_once('.') {
        if frac.is_empty() || frac.len() > 15 || !frac.bytes().all(|b| b.is_ascii_digit()) {
            return Err(bad());
        }
        let negative = int.starts_with('-');
        let int: i64 = if int.is_empty() || int == "-" { 0 } else { int.parse().map_err(|_| bad())? };
        let den = 10i64.pow(frac.len() as u32);
        let f: i64 = frac.parse().map_err(|_| bad())?;
        let num = int.abs() * den + f;
        return Ok(Ratio::new(if negative { -num } else { num }, den));
    }
    Ratio::from_str(s).map_err(|_| bad())
}

fn tagged(value: f64, method: Method) -> Value {
    json!({ "value": value, "method": method })
}

struct Output {
    report: Value,
    /// Written to --out instead of the report when present.
    file: Option<Value>,
}

impl From<Value> for Output {
    fn from(report: Value) -> Self {
        Output { report, file: None }
    }
}

/// Runs one command, printing to `stdout`.
pub fn run(cli: &Cli, stdout: &mut dyn Write) -> Result<()> {
    let out = match &cli.command {
        Command::KvBuild(a) => cmd_kv_build(a, cli.out.as_deref())?,
        Command::Values(a) => cmd_values(a)?.into(),
        Command::Superactivation(a) => cmd_superactivation(a)?.into(),
        Command::AlmostActivation(a) => cmd_almost_activation(a)?.into(),
        Command::RefereeSim(a) => cmd_referee_sim(a)?.into(),
        Command::LocalContent(a) => cmd_local_content(a)?.into(),
    };
    if let Some(path) = &cli.out {
        let payload = out.file.as_ref().unwrap_or(&out.report);
        fs::write(path, serde_json::to_string_pretty(payload)? + "\n")?;
    }
    match cli.format {
        Format::Json => writeln!(stdout, "{}", serde_json::to_string_pretty(&out.report)?)?,
        Format::Text => write!(stdout, "{}", render_text(&out.report))?,
    }
    Ok(())
}

fn kv_table(a: &KvArgs) -> Result<CosetTable> {
    let l = match (a.l, a.n) {
        (Some(l), _) => l,
        (None, Some(n)) if n.is_power_of_two() && n >= 2 => n.trailing_zeros(),
        (None, Some(n)) => return Err(Error::invalid(format!("n = {n} is not a power of two ≥ 2"))),
        (None, None) => return Err(Error::invalid("one of --l or --n is required")),
    };
    build_hadamard_subgroup(l)
}

fn materializable(table: &CosetTable, what: &str) -> Result<()> {
    if table.l() > MAX_BUILD_L {
        return Err(Error::guard(format!(
            "{what} materializes the full game and is limited to l ≤ {MAX_BUILD_L}; \
             for n = {} use the streaming commands (values, superactivation)",
            table.n()
        )));
    }
    Ok(())
}

fn cmd_kv_build(a: &KvArgs, out: Option<&Path>) -> Result<Output> {
    let table = kv_table(a)?;
    materializable(&table, "kv-build")?;
    let eta = a.eta.resolve(table.n())?;
    let game = kv_functional(&table, eta)?;
    let marginal = kv_question_marginal(&game)?;
    let summary = json!({
        "n": table.n(),
        "l": table.l(),
        "eta": eta,
        "cosets": table.num_cosets(),
        "outputs": table.n(),
        "coefficient_mass": tagged(game.coefficient_mass(), Method::Exact),
        "question_marginal_total": tagged(marginal.total(), Method::Exact),
    });
    let doc = serde_json::to_value(game.to_document()?)?;
    Ok(match out {
        Some(path) => Output {
            report: json!({ "summary": summary, "written": path.display().to_string() }),
            file: Some(doc),
        },
        None => json!({ "summary": summary, "game": doc }).into(),
    })
}

fn classical_column(g: &BellFunctional, restarts: usize, seed: u64, notes: &mut Vec<String>) -> Result<Option<Tagged>> {
    match classical_value_exact(g) {
        Ok(v) => return Ok(Some(Tagged::new(v.value, Method::Exact))),
        Err(Error::Guard(_)) => {}
        Err(e) => return Err(e),
    }
    match classical_value_heuristic(g, restarts, seed) {
        Ok(h) => {
            notes.push(format!("classical value from {restarts} best-response restarts, seed {seed}"));
            Ok(Some(Tagged::new(h.value, Method::HeuristicLb)))
        }
        Err(Error::Guard(msg)) => {
            notes.push(format!("no classical computation: {msg}"));
            Ok(None)
        }
        Err(e) => Err(e),
    }
}

fn cmd_values(a: &ValuesArgs) -> Result<Value> {
    if a.game.is_some() && (a.kv.l.is_some() || a.kv.n.is_some()) {
        return Err(Error::invalid("give either --game or --l/--n, not both"));
    }
    let (name, g) = match a.game.as_deref() {
        Some("chsh") => ("chsh".to_string(), BellFunctional::chsh()),
        Some(path) => {
            let doc: GameDocument = serde_json::from_str(&fs::read_to_string(path)?)?;
            (path.to_string(), BellFunctional::from_document(&doc)?)
        }
        None => {
            let table = kv_table(&a.kv)?;
            let eta = a.kv.eta.resolve(table.n())?;
            (format!("kv(n={}, eta={eta})", table.n()), kv_functional(&table, eta)?)
        }
    };
    let mut notes = Vec::new();
    let mut extra = Map::new();
    let classical = classical_column(&g, a.restarts, a.seed, &mut notes)?;
    let seesaw_cfg = SeesawConfig { dim: a.dim, restarts: a.restarts, seed: a.seed, ..Default::default() };

    let (quantum, bounds) = match g.kv_meta() {
        Some(meta) if a.strategy != "seesaw" => {
            if a.strategy != "auto" && a.strategy != "mes" {
                return Err(Error::invalid(format!("unknown strategy {:?}", a.strategy)));
            }
            let (n, eta) = (meta.n, meta.eta);
            let closed = quantum_value_kv_closed_form(n, eta)?;
            extra.insert("quantum_closed_form".into(), tagged(closed, Method::ClosedFormValidated));
            let quantum = if n <= 1 << MAX_BUILD_L {
                let table = g.kv_table()?;
                let meas = kv_measurements(&table);
                let dense = pair(&g, &quantum_prob(&make_mes(n)?, &meas, &meas)?)?;
                Tagged::new(dense, Method::Exact)
            } else {
                Tagged::new(closed, Method::ClosedFormValidated)
            };
            let mut bounds = ReportBounds {
                paper_classical_ub: Some(Tagged::new(kv_classical_upper_bound(n, eta)?, Method::FormulaUb)),
                paper_quantum_lb: None,
            };
            if let Ok(pe) = paper_eta(n as f64) {
                if (pe - eta).abs() < 1e-12 {
                    bounds.paper_quantum_lb = Some(Tagged::new(kv_quantum_lower_bound(n as f64), Method::FormulaLb));
                    extra.insert(
                        "paper_classical_ub_c_over_n".into(),
                        tagged(kv_classical_upper_bound_c_over_n(n as f64)?, Method::FormulaUb),
                    );
                }
            }
            notes.push("quantum strategy: maximally entangled state with the coset measurements".into());
            (quantum, bounds)
        }
        _ => {
            if a.strategy != "auto" && a.strategy != "seesaw" {
                return Err(Error::invalid(format!("strategy {:?} is not available for this game", a.strategy)));
            }
            let r = seesaw_lower_bound(&g, &seesaw_cfg)?;
            notes.push(format!(
                "quantum value from see-saw with a maximally entangled state of dimension {}, {} restarts, seed {}",
                a.dim, a.restarts, a.seed
            ));
            (Tagged::new(r.value, Method::HeuristicLb), ReportBounds::default())
        }
    };
    let classical = match classical {
        Some(c) => c,
        None => bounds
            .paper_classical_ub
            .ok_or_else(|| Error::guard("the classical value is out of reach and no formula bound applies"))?,
    };
    let mut report = ViolationReport::new(name, classical, quantum, bounds);
    report.notes.splice(0..0, notes);
    let mut value = serde_json::to_value(&report)?;
    value.as_object_mut().expect("report is an object").extend(extra);
    Ok(value)
}

fn cmd_superactivation(a: &SuperArgs) -> Result<Value> {
    let d = a.d;
    let p = match a.p {
        PRule::Threshold => locality_threshold(d)?,
        PRule::Value(v) => v,
    };
    let alpha = d as f64 * p;
    superactivation_ratio_bound(d, 1, alpha)?;
    let mut rows = Vec::new();
    for k in a.k.start..=a.k.end {
        let mut row = Map::new();
        row.insert("k".into(), json!(k));
        row.insert("bound".into(), tagged(superactivation_ratio_bound(d, k as u64, alpha)?, Method::FormulaLb));
        if let Some(n) = (d as u64).checked_pow(k).filter(|n| n.is_power_of_two() && *n <= 64) {
            let n = n as usize;
            let eta = a.eta.resolve(n)?;
            let exp = expand_tensor_power(d, p, k)?;
            row.insert("n".into(), json!(n));
            row.insert("eta".into(), json!(eta));
            if n <= 1 << MAX_BUILD_L {
                let v = kv_value_for_expansion(&exp, eta, ExpansionPath::Exact)?;
                let total = v.total.expect("exact path returns the total");
                row.insert("mes_term".into(), tagged(v.mes_term, Method::Exact));
                row.insert("total".into(), tagged(total, Method::Exact));
                row.insert("ratio_to_c_over_n".into(), tagged(total * n as f64 / KV_CONSTANTS.c, Method::Exact));
            } else {
                let v = kv_value_for_expansion(&exp, eta, ExpansionPath::Bound)?;
                row.insert("mes_term".into(), tagged(v.mes_term, Method::ClosedFormValidated));
            }
        }
        rows.push(Value::Object(row));
    }
    let crossing = if alpha > 1.0 {
        match first_crossing(d, alpha, a.k_limit)? {
            Some(k) => json!({
                "k_star": k,
                "bound_at_k_star": tagged(superactivation_ratio_bound(d, k, alpha)?, Method::FormulaLb),
                "bound_before": if k > 1 { tagged(superactivation_ratio_bound(d, k - 1, alpha)?, Method::FormulaLb) } else { Value::Null },
                "method": Method::Exact,
            }),
            None => json!({ "k_star": null, "note": format!("no crossing up to k = {}", a.k_limit) }),
        }
    } else {
        json!({ "k_star": null, "note": "no crossing (α ≤ 1)" })
    };
    Ok(json!({
        "d": d,
        "p": tagged(p, Method::Exact),
        "alpha": tagged(alpha, Method::Exact),
        "constants": { "C": KV_CONSTANTS.c, "C_prime": KV_CONSTANTS.c_prime },
        "rows": rows,
        "crossing": crossing,
    }))
}

fn cmd_almost_activation(a: &AlmostArgs) -> Result<Value> {
    let alpha_r = parse_rational(&a.alpha)?;
    let exponent = almost_activation_exponent(alpha_r)?;
    let alpha = *alpha_r.numer() as f64 / *alpha_r.denom() as f64;
    let grid: Vec<f64> = match &a.d {
        Some(list) => list
            .split(',')
            .map(|t| t.trim().parse::<f64>().map_err(|_| Error::invalid(format!("bad dimension {t:?}"))))
            .collect::<Result<_>>()?,
        None => (1..=10).map(|i| 10f64.powi(3 * i)).collect(),
    };
    let mut rows = Vec::new();
    let mut factors = Vec::new();
    for &d in &grid {
        let ub = lv_tensor_upper_bound_symbolic(d, alpha)?;
        let lower = almost_activation_lower_factor(d, alpha)?;
        factors.push(lower);
        rows.push(json!({
            "d": d,
            "p": tagged(almost_activation_weight(d, alpha)?, Method::Exact),
            "upper_bound": { "formula": ub.formula, "factor": ub.factor, "offset": ub.offset, "method": Method::FormulaSymbolic },
            "lower_factor": tagged(lower, Method::FormulaLb),
        }));
    }
    let increasing = factors.windows(2).all(|w| w[1] > w[0]);
    let mut out = json!({
        "alpha": alpha_r.to_string(),
        "C_double_prime": tagged(C_DOUBLE_PRIME, Method::Exact),
        "exponent": {
            "value": exponent.to_string(),
            "decimal": *exponent.numer() as f64 / *exponent.denom() as f64,
            "growing": exponent > Ratio::from_integer(0),
            "method": Method::Exact,
        },
        "rows": rows,
        "lower_factor_increasing": increasing,
    });
    if let Some(delta) = a.delta {
        let threshold = match almost_activation_threshold_ln_d(delta, alpha)? {
            Some(ln_d) => json!({
                "delta": delta,
                "ln_d": tagged(ln_d, Method::Exact),
                "log10_d": tagged(ln_d / std::f64::consts::LN_10, Method::Exact),
            }),
            None => json!({ "delta": delta, "note": "exponent ≤ 0: the lower factor never grows" }),
        };
        out["threshold"] = threshold;
    }
    Ok(out)
}

fn load_strategy(path: &str, inputs: usize, outputs: usize) -> Result<DeterministicStrategy> {
    let s: DeterministicStrategy = serde_json::from_str(&fs::read_to_string(path)?)?;
    if s.alice.len() != inputs || s.bob.len() != inputs || s.alice.iter().chain(&s.bob).any(|&o| o >= outputs) {
        return Err(Error::invalid(format!(
            "strategy file must give {inputs} outputs per party, each below {outputs}"
        )));
    }
    Ok(s)
}

fn cmd_referee_sim(a: &RefereeArgs) -> Result<Value> {
    let table = kv_table(&a.kv)?;
    materializable(&table, "referee-sim")?;
    let eta = a.kv.eta.resolve(table.n())?;
    if a.samples == 0 {
        return Err(Error::invalid("samples must be at least 1"));
    }
    let (nq, k) = (table.num_cosets(), table.n());
    let game = kv_functional(&table, eta)?;
    let p = match a.strategy.as_str() {
        "mes" => {
            let meas = kv_measurements(&table);
            quantum_prob(&make_mes(k)?, &meas, &meas)?
        }
        // Both players answer the smallest element of their coset.
        "representative" => ProbDist::deterministic(&DeterministicStrategy { alice: vec![0; nq], bob: vec![0; nq] }, k)?,
        path => ProbDist::deterministic(&load_strategy(path, nq, k)?, k)?,
    };
    let exact = pair(&game, &p)?;

    let mut referee = Referee::new(&table, eta, a.seed)?;
    let mut wins = 0u64;
    for _ in 0..a.samples {
        let round = referee.next_round();
        let (x, y) = (round.alice_question, round.bob_question);
        let block = &p.as_slice()[p.index(x, y, 0, 0)..p.index(x, y, 0, 0) + k * k];
        let u: f64 = referee.rng().gen();
        let mut acc = 0.0;
        let mut pick = block.iter().rposition(|&v| v > 0.0).expect("rows sum to one");
        for (i, &v) in block.iter().enumerate() {
            acc += v;
            if u < acc {
                pick = i;
                break;
            }
        }
        let (oa, ob) = (pick / k, pick % k);
        if table.element(x, oa).xor(&table.element(y, ob))? == round.z {
            wins += 1;
        }
    }
    let samples = a.samples as f64;
    let rate = wins as f64 / samples;
    let sigma = (exact * (1.0 - exact) / samples).sqrt();
    let z = if sigma > 0.0 { (rate - exact) / sigma } else if rate == exact { 0.0 } else { f64::INFINITY };
    Ok(json!({
        "n": table.n(),
        "eta": eta,
        "strategy": a.strategy,
        "samples": a.samples,
        "seed": a.seed,
        "rng": RNG_NOTE,
        "wins": wins,
        "empirical_rate": tagged(rate, Method::MonteCarlo),
        "standard_error": tagged((rate * (1.0 - rate) / samples).sqrt(), Method::MonteCarlo),
        "exact": tagged(exact, Method::Exact),
        "z_score": z,
        "within_4_sigma": z.abs() <= 4.0,
    }))
}

fn cmd_local_content(a: &LocalArgs) -> Result<Value> {
    let p = if a.dist == "pr-box" {
        pr_box()
    } else {
        let doc: DistributionDocument = serde_json::from_str(&fs::read_to_string(&a.dist)?)?;
        ProbDist::from_document(&doc)?
    };
    let variant = match a.variant {
        VariantArg::Free => Variant::RemainderFree,
        VariantArg::Local => Variant::RemainderLocal,
    };
    let r = local_content(&p, variant)?;
    let mut out = serde_json::to_value(&r)?;
    out["lambda"] = tagged(r.lambda, Method::Exact);
    out["reconstruction_residual"] = tagged(r.reconstruction_residual, Method::Exact);
    let label = "per-distribution quantity, not LV_ρ";
    out["lv"] = if r.lambda >= 1.0 - 1e-9 {
        json!({ "value": 1.0, "method": Method::Exact, "label": label })
    } else if r.lambda > 1e-12 {
        json!({ "value": lv_from_pi(r.lambda)?, "method": Method::Exact, "label": label })
    } else {
        json!({ "value": null, "label": label, "note": "undefined for λ = 0" })
    };
    Ok(out)
}

/// Aligned `path  value` lines; {value, method} pairs print on one line.
pub fn render_text(v: &Value) -> String {
    let mut lines = Vec::new();
    flatten("", v, &mut lines);
    let width = lines.iter().map(|(k, _)| k.chars().count()).max().unwrap_or(0);
    let mut s = String::new();
    for (k, val) in lines {
        let pad = width - k.chars().count();
        let _ = writeln!(s, "{k}{}  {val}", " ".repeat(pad));
    }
    s
}

fn scalar(v: &Value) -> String {
    match v {
        Value::String(s) => s.clone(),
        other => other.to_string(),
    }
}

fn flatten(prefix: &str, v: &Value, out: &mut Vec<(String, String)>) {
    match v {
        Value::Object(map) => {
            if map.len() == 2 && map.contains_key("value") && map.contains_key("method") {
                out.push((prefix.to_string(), format!("{} [{}]", scalar(&map["value"]), scalar(&map["method"]))));
                return;
            }
            for (k, child) in map {
                let key = if prefix.is_empty() { k.clone() } else { format!("{prefix}.{k}") };
                flatten(&key, child, out);
            }
        }
        Value::Array(items) if items.iter().all(|i| !i.is_object() && !i.is_array()) => {
            out.push((prefix.to_string(), v.to_string()));
        }
        Value::Array(items) => {
            for (i, child) in items.iter().enumerate() {
                flatten(&format!("{prefix}[{i}]"), child, out);
            }
        }
        other => out.push((prefix.to_string(), scalar(other))),
    }
}
