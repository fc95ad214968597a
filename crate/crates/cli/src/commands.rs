use std::path::Path;

use num_rational::Ratio;
use ramify_core::eisenstein::format_poly;
use ramify_core::oracle::{fractional_element_suite, heights_suite, pure_lattice_optimality};
use ramify_core::{
    bound_f11, compute_s, descent_minimal_s, log_reference_bound, low_degree_factor_scan,
    prop2_max_t, prop3_height_bounds, s_closed_form_unramified, tau_v_search, BoundsError,
    BreuilError, BreuilModule, EisensteinError, EisensteinPolynomial, LogDegreeBound, OracleError,
    Precision, SearchConfig, Tau, Variant,
};
use serde_json::{json, Value};
use thiserror::Error;

use crate::output::envelope;
use crate::parse::{parse_poly, ParseError};

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("{0}")]
    Budget(String),
    #[error("{0}")]
    Failure(String),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Failure(_) => 1,
            CliError::Usage(_) => 2,
            CliError::Budget(_) => 3,
        }
    }
}

impl From<ParseError> for CliError {
    fn from(e: ParseError) -> Self {
        CliError::Usage(format!("cannot parse polynomial: {e}"))
    }
}

impl From<EisensteinError> for CliError {
    fn from(e: EisensteinError) -> Self {
        match e {
            EisensteinError::BudgetExceeded { .. } => CliError::Budget(e.to_string()),
            EisensteinError::CeilingViolated { .. } => CliError::Failure(e.to_string()),
            other => CliError::Usage(other.to_string()),
        }
    }
}

impl From<BoundsError> for CliError {
    fn from(e: BoundsError) -> Self {
        CliError::Usage(e.to_string())
    }
}

impl From<BreuilError> for CliError {
    fn from(e: BreuilError) -> Self {
        CliError::Usage(e.to_string())
    }
}

impl From<OracleError> for CliError {
    fn from(e: OracleError) -> Self {
        match e {
            OracleError::BudgetExceeded { .. } => CliError::Budget(e.to_string()),
            OracleError::Eisenstein(inner) => inner.into(),
            other => CliError::Usage(other.to_string()),
        }
    }
}

pub type Result<T> = std::result::Result<T, CliError>;

/// A finished command: the JSON envelope and whether every assertion held.
#[derive(Clone, Debug, PartialEq)]
pub struct Report {
    pub json: Value,
    pub passed: bool,
}

impl Report {
    fn new(command: &str, passed: bool, body: Value) -> Self {
        Self {
            json: envelope(command, passed, body),
            passed,
        }
    }

    pub fn exit_code(&self) -> u8 {
        if self.passed {
            0
        } else {
            1
        }
    }
}

fn to_value(x: &impl serde::Serialize) -> Value {
    serde_json::to_value(x).expect("reports serialize")
}

pub fn parse_eisenstein(p: u64, text: &str) -> Result<EisensteinPolynomial> {
    let dense = parse_poly(text)?;
    Ok(EisensteinPolynomial::from_dense(p, &dense)?)
}

fn tau_json(t: Tau) -> Value {
    to_value(&t)
}

pub fn invariants(p: u64, poly: &str) -> Result<Report> {
    let e = parse_eisenstein(p, poly)?;
    let inv = e.invariants();
    let split = e.split();
    Ok(Report::new(
        "invariants",
        true,
        json!({
            "p": p,
            "poly": e.to_string(),
            "e": e.degree(),
            "m": inv.m,
            "tau": tau_json(inv.tau),
            "iota": inv.iota,
            "t_pi": inv.t_pi,
            "e0": format_poly(&split.e0),
            "e1": format_poly(&split.e1),
        }),
    ))
}

#[derive(Clone, Debug, Default)]
pub struct BoundArgs {
    pub p: u64,
    pub e: Option<u64>,
    pub tau: Option<u32>,
    pub iota: Option<u64>,
    pub poly: Option<String>,
    pub search_prec: Option<u32>,
    pub search_n: Option<u32>,
    pub variant: Option<Variant>,
}

pub fn bound(args: &BoundArgs) -> Result<Report> {
    let p = args.p;
    let variant = args.variant.unwrap_or(Variant::Standard);
    let mut search = Value::Null;
    let (e, tau, iota) = match &args.poly {
        Some(text) => {
            let poly = parse_eisenstein(p, text)?;
            if args.e.is_some_and(|e| e != poly.degree() as u64) {
                return Err(CliError::Usage(
                    "--e disagrees with the degree of --poly".into(),
                ));
            }
            let (tau, iota) = match args.search_prec {
                Some(dp) => {
                    let n = args.search_n.unwrap_or(poly.m() + 3);
                    let found = tau_v_search(&poly, dp, n, args.tau)?;
                    search = json!({
                        "digit_precision": dp,
                        "n": n,
                        "candidates": found.candidates,
                        "witness": found.witness.to_string(),
                        "witness_poly": found.witness_poly,
                        "ceiling": found.ceiling,
                        "exact": found.exact,
                    });
                    (found.tau, found.iota)
                }
                None => {
                    let inv = poly.invariants();
                    (inv.tau, inv.iota)
                }
            };
            let Some(tau) = tau.finite() else {
                return Err(CliError::Usage(format!(
                    "tau = {tau} for this uniformizer; pass --search-prec to search for one with finite tau"
                )));
            };
            (
                poly.degree() as u64,
                tau,
                iota.expect("finite tau has iota") as u64,
            )
        }
        None => {
            let (Some(e), Some(tau)) = (args.e, args.tau) else {
                return Err(CliError::Usage(
                    "give either --poly or both --e and --tau".into(),
                ));
            };
            (e, tau, args.iota.unwrap_or(0))
        }
    };
    let trace = compute_s(p, e, Tau::Finite(tau), iota, variant)?;
    let linear = bound_f11(p, e)?;
    let linear_holds = Ratio::from_integer(trace.s) <= linear;
    let mut passed = linear_holds && trace.non_increasing();
    let mut body = to_value(&trace);
    let obj = body.as_object_mut().expect("trace is an object");
    obj.insert("linear_bound".into(), Value::from(linear.to_string()));
    obj.insert("linear_bound_holds".into(), Value::from(linear_holds));
    if trace.m == 0 && tau == 1 && iota == 0 && e + 1 >= p {
        let closed = s_closed_form_unramified(p, e)?;
        obj.insert(
            "tame_closed_form".into(),
            json!({ "s": closed, "matches": closed == trace.s }),
        );
    }
    if trace.m >= 1 {
        let b = LogDegreeBound::new(p, e)?;
        let holds = b.exceeds(trace.s);
        passed &= holds;
        obj.insert(
            "log_degree_bound".into(),
            json!({ "max_s": b.max_s(), "value": b.exact_value(), "holds": holds }),
        );
    }
    obj.insert(
        "reference_log_bound".into(),
        Value::from(log_reference_bound(p, e)),
    );
    obj.insert("search".into(), search);
    Ok(Report::new("bound", passed, body))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Suite {
    Prop2,
    Lemma4,
    Cor5,
    Lemma1,
    Lemma2,
    Example3,
    Heights,
}

impl std::str::FromStr for Suite {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        Ok(match s {
            "prop2" => Suite::Prop2,
            "lemma4" => Suite::Lemma4,
            "cor5" => Suite::Cor5,
            "lemma1" => Suite::Lemma1,
            "lemma2" => Suite::Lemma2,
            "example3" => Suite::Example3,
            "heights" => Suite::Heights,
            other => {
                return Err(format!(
                    "unknown suite '{other}' (expected prop2, lemma4, cor5, lemma1, lemma2, example3 or heights)"
                ))
            }
        })
    }
}

#[derive(Clone, Debug)]
pub struct VerifyArgs {
    pub suite: Suite,
    pub p: u64,
    pub e: Option<usize>,
    pub poly: Option<String>,
    pub n: u32,
    pub budget: u64,
    pub seeds: u64,
    pub samples: usize,
}

fn resolve_poly(p: u64, e: Option<usize>, poly: &Option<String>) -> Result<EisensteinPolynomial> {
    match (poly, e) {
        (Some(text), _) => parse_eisenstein(p, text),
        (None, Some(e)) => Ok(EisensteinPolynomial::pure(p, e)?),
        (None, None) => Err(CliError::Usage("this suite needs --poly or --e".into())),
    }
}

pub fn verify(args: &VerifyArgs) -> Result<Report> {
    let p = args.p;
    let n = args.n;
    if n == 0 {
        return Err(CliError::Usage("--n must be at least 1".into()));
    }
    let (passed, body) = match args.suite {
        Suite::Prop2 | Suite::Lemma4 => {
            let poly = resolve_poly(p, args.e, &args.poly)?;
            if args.suite == Suite::Lemma4 && poly.m() == 0 {
                return Err(CliError::Usage(format!(
                    "p = {p} must divide e = {}",
                    poly.degree()
                )));
            }
            let mut cfg = SearchConfig::new(poly, n);
            cfg.budget = args.budget;
            cfg.require_weierstrass = args.suite == Suite::Lemma4;
            let r = prop2_max_t(&cfg)?;
            (r.passed(), to_value(&r))
        }
        Suite::Cor5 => {
            let e = match (&args.poly, args.e) {
                (Some(text), _) => parse_eisenstein(p, text)?.degree(),
                (None, Some(e)) => e,
                (None, None) => return Err(CliError::Usage("cor5 needs --e or --poly".into())),
            };
            let r = low_degree_factor_scan(p, n, e, args.budget)?;
            (r.passed(), to_value(&r))
        }
        Suite::Lemma1 => {
            let r = fractional_element_suite(p, n, 0..args.seeds, args.samples)?;
            (r.passed(), to_value(&r))
        }
        Suite::Lemma2 => {
            let poly = resolve_poly(p, args.e, &args.poly)?;
            let table = descent_minimal_s(&poly)?;
            let lattice = pure_lattice_optimality(p, n)?;
            (
                table.passed() && lattice.passed(),
                json!({ "descent": to_value(&table), "lattice": to_value(&lattice) }),
            )
        }
        Suite::Example3 => {
            let r = pure_lattice_optimality(p, n)?;
            (r.passed(), to_value(&r))
        }
        Suite::Heights => {
            let r = heights_suite(0..args.seeds)?;
            (r.passed(), to_value(&r))
        }
    };
    let mut body = body;
    if let Some(obj) = body.as_object_mut() {
        obj.insert(
            "suite".into(),
            Value::from(format!("{:?}", args.suite).to_lowercase()),
        );
    }
    Ok(Report::new("verify", passed, body))
}

pub fn heights(s: Option<u64>, r: Option<u64>, module_file: Option<&Path>) -> Result<Report> {
    let mut body = serde_json::Map::new();
    let mut passed = true;
    match (s, r) {
        (Some(s), Some(r)) => {
            let (h3, all) = prop3_height_bounds(s, r);
            body.insert("s".into(), Value::from(s));
            body.insert("r".into(), Value::from(r));
            body.insert("h3_bound".into(), Value::from(h3));
            body.insert("height_bound".into(), Value::from(all));
        }
        (None, None) => {}
        _ => return Err(CliError::Usage("--s and --r go together".into())),
    }
    if let Some(path) = module_file {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Usage(format!("cannot read {}: {e}", path.display())))?;
        let module = BreuilModule::from_json(&text)?;
        let prec = module.prec();
        if prec.n() != 1 {
            return Err(CliError::Usage(format!(
                "h4 is only defined for modules over F_p; this one has n = {}",
                prec.n()
            )));
        }
        let h3 = module.h3();
        let h4 = module.h4()?;
        let h3_le_order = h3 as u64 <= module.order();
        let h3_plus_h4 = h3 + h4 <= 2 * h3;
        passed = h3_le_order && h3_plus_h4;
        body.insert(
            "module".into(),
            json!({
                "p": prec.p(),
                "n": prec.n(),
                "t": prec.t(),
                "eisenstein": module.eisenstein().to_string(),
                "rank": module.rank(),
                "order": module.order(),
                "h3": h3,
                "h4": h4,
                "h3_le_order": h3_le_order,
                "h3_plus_h4_le_2h3": h3_plus_h4,
            }),
        );
        if let Some(Value::Number(b)) = body.get("h3_bound") {
            let within = b.as_u64().is_some_and(|b| h3 as u64 <= b);
            body.insert("h3_within_bound".into(), Value::from(within));
        }
    }
    if body.is_empty() {
        return Err(CliError::Usage("give --s and --r, or --module-file".into()));
    }
    Ok(Report::new("heights", passed, Value::Object(body)))
}

/// Module file for a seeded module with normal form `V diag(E I_d, I_{h-d})`.
pub fn build_module(
    p: u64,
    poly: &str,
    n: u32,
    d: usize,
    h: usize,
    seed: u64,
    t: Option<usize>,
) -> Result<String> {
    let e = parse_eisenstein(p, poly)?;
    let prec = Precision::new(p, n, t.unwrap_or(2 * e.degree() + 2))
        .map_err(|e| CliError::Usage(e.to_string()))?;
    let module = BreuilModule::build_bt_module(&prec, &e, d, h, seed)?;
    Ok(module.to_json())
}
