//! Flat key-value experiment configuration: three sections ([context],
//! [run], [output]), `#` comments, one `key = value` per line. Parsing is
//! total — every malformed line fails with its line number — and the
//! emitter produces the canonical form, so parse(emit(c)) == c.

use crate::error::{Error, Result};
use crate::experiment::{QRule, DEFAULT_PAIR_BUDGET};
use crate::galois::{build_context, ContextSpec};
use crate::poly::CycleType;
use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::str::FromStr;

pub const DEFAULT_MEMORY_BUDGET_MB: u64 = 4096;
pub const DEFAULT_OUTPUT_DIR: &str = "out";

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub x_values: Vec<u64>,
    pub q_rule: QRule,
    pub m_exponent: f64,
    pub workers: Option<usize>,
    pub memory_budget_mb: u64,
    pub pair_budget: u64,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct OutputConfig {
    pub dir: String,
    pub format: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub context: ContextSpec,
    pub run: RunConfig,
    pub output: OutputConfig,
}

const SECTIONS: &[&str] = &["context", "run", "output"];
const CONTEXT_KEYS: &[&str] = &[
    "name",
    "polynomial",
    "group_order",
    "class_types",
    "class_density",
    "abelian_conductor",
    "log_disc_l",
    "admissibility_overrides",
];
const RUN_KEYS: &[&str] = &[
    "x_values",
    "q_rule",
    "m_exponent",
    "workers",
    "memory_budget_mb",
    "pair_budget",
    "seed",
];
const OUTPUT_KEYS: &[&str] = &["dir", "format"];

fn keys_for(section: &str) -> &'static [&'static str] {
    match section {
        "context" => CONTEXT_KEYS,
        "run" => RUN_KEYS,
        "output" => OUTPUT_KEYS,
        _ => unreachable!(),
    }
}

type Fields = BTreeMap<(&'static str, &'static str), (usize, String)>;

fn scan(text: &str) -> Result<Fields> {
    let mut fields = Fields::new();
    let mut section: Option<&'static str> = None;
    for (i, raw) in text.lines().enumerate() {
        let line_no = i + 1;
        let line = match raw.find('#') {
            Some(pos) => &raw[..pos],
            None => raw,
        }
        .trim();
        if line.is_empty() {
            continue;
        }
        if let Some(inner) = line.strip_prefix('[') {
            let name = inner.strip_suffix(']').ok_or_else(|| {
                Error::Config(format!("line {line_no}: unterminated section header"))
            })?;
            section = Some(
                SECTIONS
                    .iter()
                    .find(|&&s| s == name)
                    .copied()
                    .ok_or_else(|| {
                        Error::Config(format!("line {line_no}: unknown section [{name}]"))
                    })?,
            );
            continue;
        }
        let sec = section.ok_or_else(|| {
            Error::Config(format!("line {line_no}: key before any section header"))
        })?;
        let (key, value) = line.split_once('=').ok_or_else(|| {
            Error::Config(format!("line {line_no}: expected `key = value`"))
        })?;
        let key = key.trim();
        let value = value.trim();
        let key = keys_for(sec)
            .iter()
            .find(|&&k| k == key)
            .copied()
            .ok_or_else(|| {
                Error::Config(format!("line {line_no}: unknown key `{key}` in [{sec}]"))
            })?;
        if fields.insert((sec, key), (line_no, value.to_string())).is_some() {
            return Err(Error::Config(format!(
                "line {line_no}: duplicate key `{key}` in [{sec}]"
            )));
        }
    }
    Ok(fields)
}

fn take(fields: &mut Fields, section: &'static str, key: &'static str) -> Result<(usize, String)> {
    fields.remove(&(section, key)).ok_or_else(|| {
        Error::Config(format!("missing required key `{key}` in [{section}]"))
    })
}

fn take_opt(fields: &mut Fields, section: &'static str, key: &'static str) -> Option<(usize, String)> {
    fields.remove(&(section, key))
}

fn parse_scalar<T: FromStr>(line_no: usize, key: &str, raw: &str) -> Result<T> {
    raw.parse().map_err(|_| {
        Error::Config(format!(
            "line {line_no}: cannot parse `{raw}` as a value for `{key}`"
        ))
    })
}

fn parse_list<T: FromStr>(line_no: usize, key: &str, raw: &str) -> Result<Vec<T>> {
    raw.split_whitespace()
        .map(|tok| parse_scalar(line_no, key, tok))
        .collect()
}

fn parse_q_rule(line_no: usize, raw: &str) -> Result<QRule> {
    if raw == "full" {
        return Ok(QRule::Full);
    }
    if let Some(exp) = raw.strip_prefix("x/(log x)^") {
        let k: f64 = parse_scalar(line_no, "q_rule", exp)?;
        if !k.is_finite() || k <= 0.0 {
            return Err(Error::Config(format!(
                "line {line_no}: q_rule exponent must be positive and finite"
            )));
        }
        return Ok(QRule::LogPow(k));
    }
    if let Ok(q) = raw.parse::<u64>() {
        return Ok(QRule::Explicit(q));
    }
    Err(Error::Config(format!(
        "line {line_no}: q_rule must be an integer, `full`, or `x/(log x)^k`"
    )))
}

fn parse_density(line_no: usize, raw: &str) -> Result<(u64, u64)> {
    let err = || {
        Error::Config(format!(
            "line {line_no}: class_density must look like `num/den`"
        ))
    };
    let (num, den) = raw.split_once('/').ok_or_else(err)?;
    Ok((
        num.trim().parse().map_err(|_| err())?,
        den.trim().parse().map_err(|_| err())?,
    ))
}

fn parse_overrides(line_no: usize, raw: &str) -> Result<Vec<(u64, bool)>> {
    raw.split_whitespace()
        .map(|tok| {
            let err = || {
                Error::Config(format!(
                    "line {line_no}: admissibility override `{tok}` must be `q:allow` or `q:deny`"
                ))
            };
            let (q, verdict) = tok.split_once(':').ok_or_else(err)?;
            let q: u64 = q.parse().map_err(|_| err())?;
            match verdict {
                "allow" => Ok((q, true)),
                "deny" => Ok((q, false)),
                _ => Err(err()),
            }
        })
        .collect()
}

pub fn parse_config(text: &str) -> Result<ExperimentConfig> {
    let mut fields = scan(text)?;

    let (ln, name) = take(&mut fields, "context", "name")?;
    if name.is_empty() {
        return Err(Error::Config(format!("line {ln}: name must be nonempty")));
    }
    let (ln, raw) = take(&mut fields, "context", "polynomial")?;
    let polynomial: Vec<i64> = parse_list(ln, "polynomial", &raw)?;
    let (ln, raw) = take(&mut fields, "context", "group_order")?;
    let group_order: u64 = parse_scalar(ln, "group_order", &raw)?;
    let (ln, raw) = take(&mut fields, "context", "class_types")?;
    let class_types: Vec<CycleType> = raw
        .split_whitespace()
        .map(|tok| {
            CycleType::parse(tok)
                .map_err(|e| Error::Config(format!("line {ln}: bad cycle type `{tok}`: {e}")))
        })
        .collect::<Result<_>>()?;
    let (ln, raw) = take(&mut fields, "context", "class_density")?;
    let class_density = parse_density(ln, &raw)?;
    let (ln, raw) = take(&mut fields, "context", "abelian_conductor")?;
    let abelian_conductor: u64 = parse_scalar(ln, "abelian_conductor", &raw)?;
    let log_disc_l = match take_opt(&mut fields, "context", "log_disc_l") {
        Some((ln, raw)) => Some(parse_scalar(ln, "log_disc_l", &raw)?),
        None => None,
    };
    let admissibility_overrides = match take_opt(&mut fields, "context", "admissibility_overrides")
    {
        Some((ln, raw)) => parse_overrides(ln, &raw)?,
        None => Vec::new(),
    };
    let context = ContextSpec {
        name,
        polynomial,
        group_order,
        class_types,
        class_density,
        abelian_conductor,
        log_disc_l,
        admissibility_overrides,
    };
    // surface cross-field problems (non-monic polynomial, density out of
    // range, zero discriminant, ...) at parse time
    build_context(&context)?;

    let (ln, raw) = take(&mut fields, "run", "x_values")?;
    let x_values: Vec<u64> = parse_list(ln, "x_values", &raw)?;
    if x_values.is_empty() {
        return Err(Error::Config(format!(
            "line {ln}: x_values must list at least one value"
        )));
    }
    let (ln, raw) = take(&mut fields, "run", "q_rule")?;
    let q_rule = parse_q_rule(ln, &raw)?;
    let (ln, raw) = take(&mut fields, "run", "m_exponent")?;
    let m_exponent: f64 = parse_scalar(ln, "m_exponent", &raw)?;
    if !m_exponent.is_finite() || m_exponent <= 0.0 {
        return Err(Error::Config(format!(
            "line {ln}: m_exponent must be positive and finite"
        )));
    }
    let workers = match take_opt(&mut fields, "run", "workers") {
        Some((ln, raw)) => {
            let w: usize = parse_scalar(ln, "workers", &raw)?;
            if w == 0 {
                return Err(Error::Config(format!("line {ln}: workers must be >= 1")));
            }
            Some(w)
        }
        None => None,
    };
    let memory_budget_mb = match take_opt(&mut fields, "run", "memory_budget_mb") {
        Some((ln, raw)) => {
            let mb: u64 = parse_scalar(ln, "memory_budget_mb", &raw)?;
            if mb == 0 {
                return Err(Error::Config(format!(
                    "line {ln}: memory_budget_mb must be >= 1"
                )));
            }
            mb
        }
        None => DEFAULT_MEMORY_BUDGET_MB,
    };
    let pair_budget = match take_opt(&mut fields, "run", "pair_budget") {
        Some((ln, raw)) => parse_scalar(ln, "pair_budget", &raw)?,
        None => DEFAULT_PAIR_BUDGET,
    };
    let seed = match take_opt(&mut fields, "run", "seed") {
        Some((ln, raw)) => parse_scalar(ln, "seed", &raw)?,
        None => 0,
    };
    let run = RunConfig {
        x_values,
        q_rule,
        m_exponent,
        workers,
        memory_budget_mb,
        pair_budget,
        seed,
    };

    let dir = match take_opt(&mut fields, "output", "dir") {
        Some((ln, raw)) => {
            if raw.is_empty() {
                return Err(Error::Config(format!("line {ln}: dir must be nonempty")));
            }
            raw
        }
        None => DEFAULT_OUTPUT_DIR.to_string(),
    };
    let format = match take_opt(&mut fields, "output", "format") {
        Some((ln, raw)) => {
            if raw != "csv" {
                return Err(Error::Config(format!(
                    "line {ln}: unsupported output format `{raw}` (only csv)"
                )));
            }
            raw
        }
        None => "csv".to_string(),
    };
    let output = OutputConfig { dir, format };

    debug_assert!(fields.is_empty());
    Ok(ExperimentConfig {
        context,
        run,
        output,
    })
}

pub fn emit_q_rule(rule: QRule) -> String {
    match rule {
        QRule::Full => "full".to_string(),
        QRule::LogPow(k) => format!("x/(log x)^{k}"),
        QRule::Explicit(q) => q.to_string(),
    }
}

fn join<T: std::fmt::Display>(items: &[T]) -> String {
    items
        .iter()
        .map(|v| v.to_string())
        .collect::<Vec<_>>()
        .join(" ")
}

pub fn emit_config(cfg: &ExperimentConfig) -> String {
    let mut s = String::new();
    let c = &cfg.context;
    writeln!(s, "[context]").unwrap();
    writeln!(s, "name = {}", c.name).unwrap();
    writeln!(s, "polynomial = {}", join(&c.polynomial)).unwrap();
    writeln!(s, "group_order = {}", c.group_order).unwrap();
    writeln!(s, "class_types = {}", join(&c.class_types)).unwrap();
    writeln!(s, "class_density = {}/{}", c.class_density.0, c.class_density.1).unwrap();
    writeln!(s, "abelian_conductor = {}", c.abelian_conductor).unwrap();
    if let Some(l) = c.log_disc_l {
        writeln!(s, "log_disc_l = {l}").unwrap();
    }
    if !c.admissibility_overrides.is_empty() {
        let toks: Vec<String> = c
            .admissibility_overrides
            .iter()
            .map(|&(q, allow)| format!("{q}:{}", if allow { "allow" } else { "deny" }))
            .collect();
        writeln!(s, "admissibility_overrides = {}", toks.join(" ")).unwrap();
    }
    let r = &cfg.run;
    writeln!(s).unwrap();
    writeln!(s, "[run]").unwrap();
    writeln!(s, "x_values = {}", join(&r.x_values)).unwrap();
    writeln!(s, "q_rule = {}", emit_q_rule(r.q_rule)).unwrap();
    writeln!(s, "m_exponent = {}", r.m_exponent).unwrap();
    if let Some(w) = r.workers {
        writeln!(s, "workers = {w}").unwrap();
    }
    writeln!(s, "memory_budget_mb = {}", r.memory_budget_mb).unwrap();
    writeln!(s, "pair_budget = {}", r.pair_budget).unwrap();
    writeln!(s, "seed = {}", r.seed).unwrap();
    writeln!(s).unwrap();
    writeln!(s, "[output]").unwrap();
    writeln!(s, "dir = {}", cfg.output.dir).unwrap();
    writeln!(s, "format = {}", cfg.output.format).unwrap();
    s
}
