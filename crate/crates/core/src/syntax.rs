//! Text and JSON input formats.
//!
//! Forms: `<a1,...,an>`, `<<a1,...,an>>`, or JSON descriptors
//! `{"diag": [..]}`, `{"pfister": [..]}`, `{"tensor": [f, g, ..]}`,
//! `{"sum": [f, g, ..]}`, `{"scale": [c, f]}`; a JSON string holds text
//! syntax and a bare JSON array is a diagonal. Entries are integers or
//! `"p/q"` strings and are reduced to square classes.
//!
//! Towers: `Q`, `Q(sqrt d1, sqrt d2)`, `{"tower": [d1, d2]}` or `[d1, d2]`.
//! Quaternion algebras: `{"quaternion": [a, b]}` or `[a, b]`.
//! Involution algebras: `{"inv_algebra": {"phi": f, "q": [a, b]}}` or the
//! inner object alone.

use serde_json::Value;

use crate::arith::{squarefree_rep, Rat, SquareClass};
use crate::error::{Error, Result};
use crate::extensions::{make_tower, ExtensionTower};
use crate::forms::{orth_sum, pfister, scale, tensor, QForm};
use crate::involutions::{InvolutionAlgebra, QuaternionAlg};

fn parse_err(msg: impl Into<String>) -> Error {
    Error::Parse(msg.into())
}

pub fn rat_from_json(v: &Value) -> Result<Rat> {
    match v {
        Value::Number(n) => n
            .as_i64()
            .map(Rat::from)
            .ok_or_else(|| parse_err(format!("`{n}` is not a 64-bit integer; write rationals as \"p/q\""))),
        Value::String(s) => s.parse(),
        other => Err(parse_err(format!("expected a number, got {other}"))),
    }
}

pub fn class_from_json(v: &Value) -> Result<SquareClass> {
    squarefree_rep(&rat_from_json(v)?)
}

fn classes_from_json(v: &Value) -> Result<Vec<SquareClass>> {
    v.as_array()
        .ok_or_else(|| parse_err(format!("expected an array, got {v}")))?
        .iter()
        .map(class_from_json)
        .collect()
}

fn classes_from_text(body: &str) -> Result<Vec<SquareClass>> {
    if body.trim().is_empty() {
        return Ok(Vec::new());
    }
    body.split(',').map(|t| squarefree_rep(&t.parse()?)).collect()
}

/// Form text syntax, or JSON if the input does not start with `<`.
pub fn parse_form(text: &str) -> Result<QForm> {
    let t = text.trim();
    if let Some(inner) = t.strip_prefix("<<") {
        let body = inner
            .strip_suffix(">>")
            .ok_or_else(|| parse_err(format!("unterminated Pfister form `{t}`")))?;
        return pfister(&classes_from_text(body)?);
    }
    if let Some(inner) = t.strip_prefix('<') {
        let body = inner
            .strip_suffix('>')
            .ok_or_else(|| parse_err(format!("unterminated form `{t}`")))?;
        return Ok(QForm::new(classes_from_text(body)?));
    }
    let v: Value = serde_json::from_str(t).map_err(|e| parse_err(format!("bad JSON form: {e}")))?;
    form_from_json(&v)
}

fn single_key(v: &Value) -> Option<(&str, &Value)> {
    let obj = v.as_object()?;
    if obj.len() != 1 {
        return None;
    }
    obj.iter().next().map(|(k, v)| (k.as_str(), v))
}

fn form_list(v: &Value) -> Result<Vec<QForm>> {
    v.as_array()
        .ok_or_else(|| parse_err(format!("expected a list of forms, got {v}")))?
        .iter()
        .map(form_from_json)
        .collect()
}

pub fn form_from_json(v: &Value) -> Result<QForm> {
    if let Value::String(s) = v {
        return parse_form(s);
    }
    if v.is_array() {
        return Ok(QForm::new(classes_from_json(v)?));
    }
    let (key, arg) = single_key(v).ok_or_else(|| parse_err(format!("unrecognized form descriptor {v}")))?;
    match key {
        "diag" => Ok(QForm::new(classes_from_json(arg)?)),
        "pfister" => pfister(&classes_from_json(arg)?),
        "tensor" => Ok(form_list(arg)?
            .iter()
            .fold(QForm::new(vec![SquareClass::ONE]), |acc, f| tensor(&acc, f))),
        "sum" => Ok(form_list(arg)?.iter().fold(QForm::empty(), |acc, f| orth_sum(&acc, f))),
        "scale" => match arg.as_array().map(Vec::as_slice) {
            Some([c, f]) => Ok(scale(class_from_json(c)?, &form_from_json(f)?)),
            _ => Err(parse_err("`scale` takes [c, form]")),
        },
        other => Err(parse_err(format!("unknown form descriptor `{other}`"))),
    }
}

/// Tower text or JSON; dependent generators are reduced silently.
pub fn parse_tower(text: &str) -> Result<ExtensionTower> {
    let t = text.trim();
    if t == "Q" {
        return Ok(ExtensionTower::rationals());
    }
    if let Some(inner) = t.strip_prefix("Q(") {
        let body = inner
            .strip_suffix(')')
            .ok_or_else(|| parse_err(format!("unterminated tower `{t}`")))?;
        let gens = body
            .split(',')
            .map(|g| {
                let g = g.trim();
                let d = g
                    .strip_prefix("sqrt")
                    .ok_or_else(|| parse_err(format!("expected `sqrt d`, got `{g}`")))?;
                let d = d.trim().trim_start_matches('(').trim_end_matches(')');
                squarefree_rep(&d.parse()?)
            })
            .collect::<Result<Vec<_>>>()?;
        return Ok(make_tower(&gens)?.tower);
    }
    let v: Value = serde_json::from_str(t).map_err(|e| parse_err(format!("bad JSON tower: {e}")))?;
    tower_from_json(&v)
}

pub fn tower_from_json(v: &Value) -> Result<ExtensionTower> {
    if let Value::String(s) = v {
        return parse_tower(s);
    }
    let gens = match single_key(v) {
        Some(("tower", arg)) => arg,
        _ if v.is_array() => v,
        _ => return Err(parse_err(format!("unrecognized tower {v}"))),
    };
    Ok(make_tower(&classes_from_json(gens)?)?.tower)
}

pub fn quaternion_from_json(v: &Value) -> Result<QuaternionAlg> {
    let pair = match single_key(v) {
        Some(("quaternion", arg)) => arg,
        _ => v,
    };
    match classes_from_json(pair)?.as_slice() {
        &[a, b] => Ok(QuaternionAlg::new(a, b)),
        _ => Err(parse_err(format!("a quaternion algebra takes [a, b], got {pair}"))),
    }
}

pub fn inv_algebra_from_json(v: &Value) -> Result<InvolutionAlgebra> {
    let body = match single_key(v) {
        Some(("inv_algebra", arg)) => arg,
        _ => v,
    };
    let phi = body
        .get("phi")
        .ok_or_else(|| parse_err("involution algebra needs `phi`"))?;
    let q = body.get("q").ok_or_else(|| parse_err("involution algebra needs `q`"))?;
    InvolutionAlgebra::new(form_from_json(phi)?, quaternion_from_json(q)?)
}
