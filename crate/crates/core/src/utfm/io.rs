//! Line-oriented text serialization for models.
//!
//! ```text
//! UTFM v1
//! STATE <name> <phase> [ACCEPT]
//! INIT <state> <prob>
//! TRANS <state> <symbol> <state> <prob>
//! EMIT <state> <symbol> <prob>
//! ```
//!
//! Zero-probability entries are omitted. Probabilities are printed with 12
//! significant digits. The alphabet is reconstructed as the lexicographically
//! sorted set of symbols mentioned on TRANS and EMIT lines, so a symbol with
//! no support anywhere does not survive a round trip. The loader rejects any
//! model that fails validation.

use thiserror::Error;

use super::{ActionSymbol, Phase, StateId, Utfm, UtfmBuilder};

#[derive(Debug, Error, PartialEq)]
pub enum ModelFormatError {
    #[error("missing or unsupported header (expected `UTFM v1`)")]
    BadHeader,
    #[error("line {line}: {message}")]
    BadLine { line: usize, message: String },
    #[error("model fails validation: {0}")]
    Invalid(String),
}

fn bad(line: usize, message: impl Into<String>) -> ModelFormatError {
    ModelFormatError::BadLine { line, message: message.into() }
}

fn fmt_prob(p: f64) -> String {
    format!("{p:.11e}")
}

/// Render a model in the text format. The output is deterministic for a
/// given model, so renders are diffable.
pub fn render_model(model: &Utfm) -> String {
    let mut out = String::from("UTFM v1\n");
    for &s in model.states() {
        out.push_str(&format!("STATE {} {}", s.name(), s.phase().name()));
        if model.is_accept(s) {
            out.push_str(" ACCEPT");
        }
        out.push('\n');
    }
    for &s in model.states() {
        let p = model.initial_probability(s).unwrap_or(0.0);
        if p > 0.0 {
            out.push_str(&format!("INIT {} {}\n", s.name(), fmt_prob(p)));
        }
    }
    for &s in model.states() {
        for a in model.alphabet() {
            for &t in model.states() {
                let p = model.transition_probability(s, a, t).unwrap_or(0.0);
                if p > 0.0 {
                    out.push_str(&format!("TRANS {} {} {} {}\n", s.name(), a, t.name(), fmt_prob(p)));
                }
            }
        }
    }
    for &s in model.states() {
        for a in model.alphabet() {
            let p = model.emission_probability(s, a).unwrap_or(0.0);
            if p > 0.0 {
                out.push_str(&format!("EMIT {} {} {}\n", s.name(), a, fmt_prob(p)));
            }
        }
    }
    out
}

/// Parse the text format and validate the resulting model.
pub fn parse_model(text: &str) -> Result<Utfm, ModelFormatError> {
    let mut lines = text.lines().enumerate();
    let header = loop {
        match lines.next() {
            Some((_, l)) if l.trim().is_empty() || l.trim_start().starts_with('#') => continue,
            Some((_, l)) => break l.trim().to_string(),
            None => return Err(ModelFormatError::BadHeader),
        }
    };
    if header != "UTFM v1" {
        return Err(ModelFormatError::BadHeader);
    }

    struct Raw {
        states: Vec<(StateId, bool)>,
        init: Vec<(StateId, f64)>,
        trans: Vec<(StateId, String, StateId, f64)>,
        emit: Vec<(StateId, String, f64)>,
    }
    let mut raw = Raw { states: Vec::new(), init: Vec::new(), trans: Vec::new(), emit: Vec::new() };

    for (idx, line) in lines {
        let lineno = idx + 1;
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let fields: Vec<&str> = line.split_whitespace().collect();
        let state = |name: &str| -> Result<StateId, ModelFormatError> {
            StateId::parse(name).ok_or_else(|| bad(lineno, format!("unknown state `{name}`")))
        };
        let prob = |s: &str| -> Result<f64, ModelFormatError> {
            let p: f64 = s.parse().map_err(|_| bad(lineno, format!("bad probability `{s}`")))?;
            if !p.is_finite() || p < 0.0 {
                return Err(bad(lineno, format!("bad probability `{s}`")));
            }
            Ok(p)
        };
        match fields[0] {
            "STATE" => {
                if fields.len() < 3 || fields.len() > 4 {
                    return Err(bad(lineno, "expected `STATE <name> <phase> [ACCEPT]`"));
                }
                let s = state(fields[1])?;
                let phase = Phase::parse(fields[2])
                    .ok_or_else(|| bad(lineno, format!("unknown phase `{}`", fields[2])))?;
                if s.phase() != phase {
                    return Err(bad(lineno, format!("state {s} belongs to phase {}", s.phase())));
                }
                let accept = match fields.get(3) {
                    None => false,
                    Some(&"ACCEPT") => true,
                    Some(other) => return Err(bad(lineno, format!("unexpected token `{other}`"))),
                };
                if raw.states.iter().any(|&(x, _)| x == s) {
                    return Err(bad(lineno, format!("duplicate state {s}")));
                }
                raw.states.push((s, accept));
            }
            "INIT" => {
                if fields.len() != 3 {
                    return Err(bad(lineno, "expected `INIT <state> <prob>`"));
                }
                raw.init.push((state(fields[1])?, prob(fields[2])?));
            }
            "TRANS" => {
                if fields.len() != 5 {
                    return Err(bad(lineno, "expected `TRANS <state> <symbol> <state> <prob>`"));
                }
                raw.trans.push((state(fields[1])?, fields[2].to_string(), state(fields[3])?, prob(fields[4])?));
            }
            "EMIT" => {
                if fields.len() != 4 {
                    return Err(bad(lineno, "expected `EMIT <state> <symbol> <prob>`"));
                }
                raw.emit.push((state(fields[1])?, fields[2].to_string(), prob(fields[3])?));
            }
            other => return Err(bad(lineno, format!("unknown directive `{other}`"))),
        }
    }

    let mut symbols: Vec<String> = raw
        .trans
        .iter()
        .map(|(_, a, _, _)| a.clone())
        .chain(raw.emit.iter().map(|(_, a, _)| a.clone()))
        .collect();
    symbols.sort();
    symbols.dedup();
    if symbols.is_empty() {
        return Err(ModelFormatError::Invalid("model mentions no symbols".into()));
    }

    let mut builder = UtfmBuilder::new()
        .states(raw.states.iter().map(|&(s, _)| s))
        .alphabet(symbols.iter().map(|s| ActionSymbol::new(s.clone())));
    for &(s, accept) in &raw.states {
        if accept {
            builder = builder.accept(s);
        }
    }
    for (s, p) in raw.init {
        builder = builder.initial(s, p);
    }
    for (s, a, t, p) in raw.trans {
        builder = builder.transition(s, ActionSymbol::new(a), t, p);
    }
    for (s, a, p) in raw.emit {
        builder = builder.emission(s, ActionSymbol::new(a), p);
    }

    let model = builder.build().map_err(|e| ModelFormatError::Invalid(e.to_string()))?;
    let report = model.validate();
    if !report.is_valid() {
        return Err(ModelFormatError::Invalid(report.to_string()));
    }
    Ok(model)
}
