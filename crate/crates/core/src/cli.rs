//! The `psim` command line: one verb per engine operation, JSON in and out.
//!
//! Exit status: 0 on success (including exhausted searches), 1 on malformed
//! input or an unknown verb, 2 when a hypothesis check fails.

use std::ffi::OsString;
use std::io::Read;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use serde_json::{json, Value};

use crate::arith::Rat;
use crate::error::{Error, Result};
use crate::extensions::{analysis_over, norm_member, norm_member_tower, ExtensionTower};
use crate::forms::{
    disc, hasse_invariant, in_g, in_in, is_isometric, relevant_places, signature, witt_decompose, witt_equivalent,
    Analysis, QForm,
};
use crate::similitude::{
    default_bound, lemma24_certificate, lemma_beta_search, sample_multipliers, thm4_decompose, thm6_pipeline,
    verify_certificate, HypCertificate,
};
use crate::syntax::{
    class_from_json, form_from_json, inv_algebra_from_json, parse_form, quaternion_from_json, rat_from_json,
    tower_from_json,
};

const SAMPLE_HEIGHT: i64 = 200;
const DEFAULT_SAMPLES: usize = 10;

#[derive(Parser, Debug)]
#[command(
    name = "psim",
    version,
    about = "Exact quadratic-form engine over Q and multiquadratic extensions"
)]
struct Cli {
    #[command(subcommand)]
    verb: Verb,
    /// Search bound on |d| for certificate searches.
    #[arg(long, global = true, env = crate::similitude::BOUND_ENV)]
    bound: Option<u64>,
    #[arg(long, global = true, value_enum, default_value_t = Format::Json)]
    format: Format,
    /// Seed for sampling multipliers when none are supplied.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    /// Include the per-place local evidence behind each verdict.
    #[arg(long, global = true)]
    trace: bool,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum Format {
    Json,
    Pretty,
}

#[derive(Args, Debug)]
struct Payload {
    /// JSON or text payload; `-` or absent reads stdin, `@path` reads a file.
    payload: Option<String>,
}

#[derive(Subcommand, Debug)]
enum Verb {
    /// Dimension, discriminant, signature, Hasse invariants, Witt index.
    Invariants(Payload),
    /// Isotropy over Q or over {"form", "tower"}.
    Isotropic(Payload),
    /// Witt decomposition, over Q or over {"form", "tower"}.
    Witt(Payload),
    /// Isometry and Witt equivalence of [f, g].
    Isometric(Payload),
    /// Diagonal of any form descriptor.
    #[command(name = "pfister-expand")]
    PfisterExpand(Payload),
    /// {"form", "c"}: is c a similarity factor.
    #[command(name = "in-g")]
    InG(Payload),
    /// {"form", "n"}: membership in I^n.
    #[command(name = "in-in")]
    InIn(Payload),
    /// Norm form and splitting of [a, b].
    Quaternion(Payload),
    /// Discriminant of {"phi", "q"}.
    Delta(Payload),
    /// phi (x) <<a, b>> for {"phi", "q"}.
    Reduce(Payload),
    /// {"form", "a"}: quadratic field raising the Witt index with a a norm.
    #[command(name = "lemma-beta")]
    LemmaBeta(Payload),
    /// {"pi", "psi", "c"}: hyperbolicity certificate for c.
    #[command(name = "lemma24")]
    Lemma24(Payload),
    /// {"phi", "q"}: scaled 4-fold plus scaled 3-fold Pfister decomposition.
    #[command(name = "thm4")]
    Thm4(Payload),
    /// {"phi", "q", "multipliers"?, "samples"?}: hypothesis checks and certificates.
    #[command(name = "thm6")]
    Thm6(Payload),
    /// Verify the certificates in lemma24 or thm6 output.
    #[command(name = "verify-cert")]
    VerifyCert(Payload),
    /// {"c", "d"} or {"c", "tower"}: norm-group membership.
    #[command(name = "norm-member")]
    NormMember(Payload),
}

/// Result of one invocation.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Outcome {
    pub code: i32,
    pub stdout: String,
    pub stderr: String,
}

struct Ctx {
    bound: u64,
    seed: u64,
    trace: bool,
}

/// A JSON result and whether a hypothesis check failed.
struct Response {
    body: Value,
    check_failed: bool,
}

impl From<Value> for Response {
    fn from(body: Value) -> Self {
        Response {
            body,
            check_failed: false,
        }
    }
}

pub fn run<I, T>(args: I) -> Outcome
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let shown = e.render().to_string();
            return match e.kind() {
                clap::error::ErrorKind::DisplayHelp | clap::error::ErrorKind::DisplayVersion => Outcome {
                    code: 0,
                    stdout: shown,
                    stderr: String::new(),
                },
                _ => Outcome {
                    code: 1,
                    stdout: String::new(),
                    stderr: shown,
                },
            };
        }
    };
    let ctx = Ctx {
        bound: cli.bound.unwrap_or_else(default_bound),
        seed: cli.seed,
        trace: cli.trace,
    };
    let (code, body, stderr) = match dispatch(&cli.verb, &ctx) {
        Ok(r) if r.check_failed => (2, r.body, String::new()),
        Ok(r) => (0, r.body, String::new()),
        Err(e) => {
            let code = if matches!(e, Error::Precondition { .. }) { 2 } else { 1 };
            (code, error_json(&e), format!("psim: {e}\n"))
        }
    };
    let stdout = match cli.format {
        Format::Json => serde_json::to_string(&body),
        Format::Pretty => serde_json::to_string_pretty(&body),
    }
    .expect("JSON values serialize");
    Outcome {
        code,
        stdout: stdout + "\n",
        stderr,
    }
}

fn error_json(e: &Error) -> Value {
    let kind = match e {
        Error::Parse(_) => "parse",
        Error::Precondition { .. } => "hypothesis",
        Error::NotPrime(_) | Error::TooLarge(_) | Error::Overflow | Error::Domain(_) => "domain",
    };
    let mut v = json!({"error": e.to_string(), "kind": kind});
    if let Error::Precondition { check, .. } = e {
        v["check"] = json!(check);
    }
    v
}

fn read_payload(p: &Payload) -> Result<String> {
    match p.payload.as_deref() {
        None | Some("-") => {
            let mut s = String::new();
            std::io::stdin()
                .read_to_string(&mut s)
                .map_err(|e| Error::Parse(format!("cannot read stdin: {e}")))?;
            Ok(s)
        }
        Some(arg) => match arg.strip_prefix('@') {
            Some(path) => std::fs::read_to_string(path).map_err(|e| Error::Parse(format!("cannot read {path}: {e}"))),
            None => Ok(arg.to_string()),
        },
    }
}

fn json_payload(p: &Payload) -> Result<Value> {
    let text = read_payload(p)?;
    let t = text.trim();
    if t.starts_with('<') || t.starts_with('Q') {
        return Ok(Value::String(t.to_string()));
    }
    serde_json::from_str(t).map_err(|e| Error::Parse(format!("bad JSON payload: {e}")))
}

fn field<'a>(v: &'a Value, key: &str) -> Result<&'a Value> {
    v.get(key)
        .ok_or_else(|| Error::Parse(format!("payload needs a `{key}` field")))
}

fn to_json<T: Serialize>(value: &T) -> Value {
    serde_json::to_value(value).expect("engine types serialize")
}

/// A bare form, or `{"form": f, "tower"?: t}`.
fn form_and_tower(v: &Value) -> Result<(QForm, ExtensionTower)> {
    match v.get("form") {
        Some(f) => {
            let tower = match v.get("tower") {
                Some(t) => tower_from_json(t)?,
                None => ExtensionTower::rationals(),
            };
            Ok((form_from_json(f)?, tower))
        }
        None => Ok((form_from_json(v)?, ExtensionTower::rationals())),
    }
}

fn trace_json(analysis: &Analysis) -> Value {
    let records: Vec<Value> = analysis
        .records
        .iter()
        .map(|r| {
            json!({
                "place": r.place.to_string(),
                "completion": r.completion.describe(),
                "multiplicity": r.multiplicity,
                "aniso_dim": r.aniso_dim,
            })
        })
        .collect();
    json!({"local": records, "global_bound": analysis.global_bound})
}

fn dispatch(verb: &Verb, ctx: &Ctx) -> Result<Response> {
    match verb {
        Verb::Invariants(p) => invariants(&json_payload(p)?, ctx),
        Verb::Isotropic(p) => isotropic(&json_payload(p)?, ctx),
        Verb::Witt(p) => witt(&json_payload(p)?, ctx),
        Verb::Isometric(p) => isometric(&json_payload(p)?),
        Verb::PfisterExpand(p) => {
            let form = parse_form(&read_payload(p)?)?;
            Ok(json!({"form": form, "text": form.to_string(), "dim": form.dim()}).into())
        }
        Verb::InG(p) => {
            let v = json_payload(p)?;
            let form = form_from_json(field(&v, "form")?)?;
            let c = rat_from_json(field(&v, "c")?)?;
            Ok(json!({"in_g": in_g(&form, &c)?}).into())
        }
        Verb::InIn(p) => {
            let v = json_payload(p)?;
            let form = form_from_json(field(&v, "form")?)?;
            let n = field(&v, "n")?
                .as_u64()
                .filter(|&n| n <= 4)
                .ok_or_else(|| Error::Parse("`n` must be an integer in 0..=4".into()))?;
            Ok(json!({"in_in": in_in(&form, n as u32)}).into())
        }
        Verb::Quaternion(p) => {
            let q = quaternion_from_json(&json_payload(p)?)?;
            Ok(json!({"a": q.a, "b": q.b, "norm_form": q.norm_form(), "split": q.is_split()}).into())
        }
        Verb::Delta(p) => {
            let alg = inv_algebra_from_json(&json_payload(p)?)?;
            let (degree, index) = alg.degree_index();
            let delta = alg.discriminant()?;
            Ok(json!({
                "degree": degree,
                "index": index,
                "slots": delta.slots,
                "pfister": delta.pfister,
                "trivial": delta.trivial,
            })
            .into())
        }
        Verb::Reduce(p) => {
            let form = inv_algebra_from_json(&json_payload(p)?)?.reduce_to_form();
            Ok(json!({"form": form, "dim": form.dim()}).into())
        }
        Verb::LemmaBeta(p) => {
            let v = json_payload(p)?;
            let form = form_from_json(field(&v, "form")?)?;
            let a = rat_from_json(field(&v, "a")?)?;
            Ok(match lemma_beta_search(&form, &a, ctx.bound)? {
                Some(d) => json!({"result": "found", "d": d}),
                None => json!({"result": "not-found-within-bounds", "bound": ctx.bound}),
            }
            .into())
        }
        Verb::Lemma24(p) => {
            let v = json_payload(p)?;
            let pi = form_from_json(field(&v, "pi")?)?;
            let psi = form_from_json(field(&v, "psi")?)?;
            let c = rat_from_json(field(&v, "c")?)?;
            let outcome = lemma24_certificate(&pi, &psi, &c, ctx.bound)?;
            let mut body = to_json(&outcome);
            body["form"] = to_json(&crate::forms::tensor(&psi, &pi));
            Ok(body.into())
        }
        Verb::Thm4(p) => {
            let v = json_payload(p)?;
            let phi = form_from_json(field(&v, "phi")?)?;
            let q = quaternion_from_json(field(&v, "q")?)?;
            let decomposition = thm4_decompose(&phi, &q)?;
            let mut body = to_json(&decomposition);
            body["form"] = to_json(&crate::forms::tensor(&phi, &q.norm_form()));
            Ok(Response {
                check_failed: !decomposition.verified,
                body,
            })
        }
        Verb::Thm6(p) => thm6(&json_payload(p)?, ctx),
        Verb::VerifyCert(p) => verify(&json_payload(p)?),
        Verb::NormMember(p) => {
            let v = json_payload(p)?;
            let c = rat_from_json(field(&v, "c")?)?;
            let member = match (v.get("d"), v.get("tower")) {
                (Some(d), None) => norm_member(&c, class_from_json(d)?)?,
                (None, Some(t)) => norm_member_tower(&c, &tower_from_json(t)?)?,
                _ => return Err(Error::Parse("norm-member needs exactly one of `d` and `tower`".into())),
            };
            Ok(json!({"norm_member": member}).into())
        }
    }
}

fn invariants(v: &Value, ctx: &Ctx) -> Result<Response> {
    let form = form_from_json(v)?;
    let hasse: Vec<Value> = relevant_places(&form, &[])
        .into_iter()
        .map(|place| json!({"place": place.to_string(), "hasse": hasse_invariant(&form, place)}))
        .collect();
    let decomposition = witt_decompose(&form);
    let level = (1..=4).take_while(|&n| in_in(&form, n)).last().unwrap_or(0);
    let mut body = json!({
        "form": form,
        "dim": form.dim(),
        "disc": disc(&form),
        "signature": signature(&form),
        "hasse": hasse,
        "witt_index": decomposition.witt_index,
        "aniso_dim": decomposition.aniso_dim,
        "witt_class": decomposition.aniso_class,
        "ideal_level": level,
    });
    if ctx.trace {
        body["trace"] = trace_json(&analysis_over(&form, &ExtensionTower::rationals()));
    }
    Ok(body.into())
}

fn isotropic(v: &Value, ctx: &Ctx) -> Result<Response> {
    let (form, tower) = form_and_tower(v)?;
    let analysis = analysis_over(&form, &tower);
    let mut body = json!({"isotropic": form.dim() >= 2 && analysis.witt_index() > 0});
    if tower.degree() > 1 {
        body["tower"] = json!(tower.to_string());
    }
    if let Some(r) = analysis.obstruction() {
        body["obstruction"] = json!({"place": r.place.to_string(), "completion": r.completion.describe()});
    }
    if ctx.trace {
        body["trace"] = trace_json(&analysis);
    }
    Ok(body.into())
}

fn witt(v: &Value, ctx: &Ctx) -> Result<Response> {
    let (form, tower) = form_and_tower(v)?;
    let analysis = analysis_over(&form, &tower);
    let mut body = json!({
        "witt_index": analysis.witt_index(),
        "aniso_dim": analysis.aniso_dim,
        "hyperbolic": form.dim() % 2 == 0 && analysis.aniso_dim == 0,
    });
    if tower.degree() == 1 {
        body["aniso_class"] = to_json(&witt_decompose(&form).aniso_class);
    } else {
        body["tower"] = json!(tower.to_string());
    }
    if ctx.trace {
        body["trace"] = trace_json(&analysis);
    }
    Ok(body.into())
}

fn isometric(v: &Value) -> Result<Response> {
    let pair = v.get("forms").unwrap_or(v);
    let forms = pair
        .as_array()
        .filter(|a| a.len() == 2)
        .ok_or_else(|| Error::Parse("isometric takes [f, g] or {\"forms\": [f, g]}".into()))?;
    let f = form_from_json(&forms[0])?;
    let g = form_from_json(&forms[1])?;
    Ok(json!({"isometric": is_isometric(&f, &g), "witt_equivalent": witt_equivalent(&f, &g)}).into())
}

fn thm6(v: &Value, ctx: &Ctx) -> Result<Response> {
    let alg = inv_algebra_from_json(v)?;
    let multipliers: Vec<Rat> = match v.get("multipliers") {
        Some(list) => list
            .as_array()
            .ok_or_else(|| Error::Parse("`multipliers` must be an array".into()))?
            .iter()
            .map(rat_from_json)
            .collect::<Result<_>>()?,
        None => {
            let samples = match v.get("samples") {
                Some(n) => n
                    .as_u64()
                    .ok_or_else(|| Error::Parse("`samples` must be a natural number".into()))?
                    as usize,
                None => DEFAULT_SAMPLES,
            };
            sample_multipliers(&alg.reduce_to_form(), samples, SAMPLE_HEIGHT, ctx.seed)
        }
    };
    let report = thm6_pipeline(&alg.phi, &alg.q, &multipliers, ctx.bound)?;
    Ok(Response {
        check_failed: report.halted_at.is_some(),
        body: to_json(&report),
    })
}

/// Accepts `{"form", "certificate"}` (lemma24 output) or
/// `{"form", "results": [..]}` (thm6 output).
fn verify(v: &Value) -> Result<Response> {
    let form = form_from_json(field(v, "form")?)?;
    let mut certs: Vec<&Value> = Vec::new();
    if let Some(c) = v.get("certificate") {
        certs.push(c);
    }
    if let Some(results) = v.get("results").and_then(Value::as_array) {
        certs.extend(results.iter().filter_map(|r| r.get("certificate")));
    }
    if certs.is_empty() {
        return Err(Error::Parse("no certificate found in payload".into()));
    }
    let mut verdicts = Vec::new();
    for c in certs {
        let cert: HypCertificate =
            serde_json::from_value(c.clone()).map_err(|e| Error::Parse(format!("bad certificate: {e}")))?;
        let verified = verify_certificate(&form, &cert);
        let multiplier_in_g = in_g(&form, &cert.multiplier.into())?;
        verdicts.push(json!({
            "multiplier": cert.multiplier,
            "tower": cert.tower.to_string(),
            "verified": verified,
            "in_g": multiplier_in_g,
        }));
    }
    let all = verdicts.iter().all(|r| r["verified"] == json!(true));
    Ok(Response {
        check_failed: !all,
        body: json!({"verified": all, "checked": verdicts.len(), "certificates": verdicts}),
    })
}
