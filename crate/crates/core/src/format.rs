//! Line-oriented `.des` model files.
//!
//! ```text
//! des v1
//! obs a b c d        # observable events
//! hidden t           # unobservable events
//! init A
//! fault G            # zero or more lines, union taken
//! trans A a B
//! ```
//!
//! `#` starts a comment. States are declared by use. Events must be declared
//! before they appear in a `trans` line.

use std::fmt::Write as _;

use thiserror::Error;

use crate::model::{validate, DesModel, ModelBuilder, ModelError, ValidationReport};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ParseErrorKind {
    #[error("missing `des v1` header")]
    MissingHeader,
    #[error("unsupported header `{0}`")]
    BadHeader(String),
    #[error("unknown directive `{0}`")]
    UnknownDirective(String),
    #[error("`{directive}` expects {expected}")]
    Arity {
        directive: &'static str,
        expected: &'static str,
    },
    #[error("`init` given twice")]
    DuplicateInit,
    #[error("missing `init` line")]
    MissingInit,
    #[error("undeclared event `{0}`")]
    UndeclaredEvent(String),
    #[error(transparent)]
    Model(#[from] ModelError),
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("{line}:{column}: {kind}")]
pub struct ParseError {
    pub line: usize,
    pub column: usize,
    pub kind: ParseErrorKind,
}

#[derive(Debug, Error)]
pub enum LoadError {
    #[error(transparent)]
    Parse(#[from] ParseError),
    #[error("model is invalid:\n{0}")]
    Invalid(ValidationReport),
    #[error(transparent)]
    Closure(#[from] ModelError),
}

#[derive(Debug, Clone, Copy, Default)]
pub struct LoadOptions {
    /// Replace the declared fault set by its forward closure before validating.
    pub close_faults: bool,
    pub skip_validation: bool,
}

struct Token<'a> {
    text: &'a str,
    column: usize,
}

fn tokens(line: &str) -> Vec<Token<'_>> {
    let body = match line.find('#') {
        Some(i) => &line[..i],
        None => line,
    };
    let mut out = Vec::new();
    let mut start = None;
    for (i, ch) in body.char_indices() {
        match (ch.is_whitespace(), start) {
            (false, None) => start = Some(i),
            (true, Some(s)) => {
                out.push(Token {
                    text: &body[s..i],
                    column: body[..s].chars().count() + 1,
                });
                start = None;
            }
            _ => {}
        }
    }
    if let Some(s) = start {
        out.push(Token {
            text: &body[s..],
            column: body[..s].chars().count() + 1,
        });
    }
    out
}

/// Parses a model without checking its behavioural invariants.
pub fn parse_model_unchecked(text: &str) -> Result<DesModel, ParseError> {
    let mut builder = ModelBuilder::new();
    let mut header_seen = false;
    let mut init_seen = false;
    let mut last_line = 0;

    for (idx, line) in text.lines().enumerate() {
        let line_no = idx + 1;
        last_line = line_no;
        let toks = tokens(line);
        let Some(first) = toks.first() else { continue };
        let at = |t: &Token<'_>, kind| ParseError {
            line: line_no,
            column: t.column,
            kind,
        };

        if !header_seen {
            if first.text != "des" {
                return Err(at(first, ParseErrorKind::MissingHeader));
            }
            match toks.get(1) {
                Some(v) if v.text == "v1" && toks.len() == 2 => {}
                Some(v) => return Err(at(v, ParseErrorKind::BadHeader(v.text.to_string()))),
                None => return Err(at(first, ParseErrorKind::BadHeader(String::new()))),
            }
            header_seen = true;
            continue;
        }

        let args = &toks[1..];
        match first.text {
            "obs" | "hidden" => {
                let observable = first.text == "obs";
                if args.is_empty() {
                    return Err(at(
                        first,
                        ParseErrorKind::Arity {
                            directive: if observable { "obs" } else { "hidden" },
                            expected: "at least one event",
                        },
                    ));
                }
                for t in args {
                    builder.event(t.text, observable).map_err(|e| at(t, e.into()))?;
                }
            }
            "init" => {
                if init_seen {
                    return Err(at(first, ParseErrorKind::DuplicateInit));
                }
                let [s] = args else {
                    return Err(at(
                        first,
                        ParseErrorKind::Arity {
                            directive: "init",
                            expected: "exactly one state",
                        },
                    ));
                };
                let q = builder.state(s.text).map_err(|e| at(s, e.into()))?;
                builder.initial(q);
                init_seen = true;
            }
            "fault" => {
                for t in args {
                    let q = builder.state(t.text).map_err(|e| at(t, e.into()))?;
                    builder.fault(q);
                }
            }
            "trans" => {
                let [src, ev, dst] = args else {
                    return Err(at(
                        first,
                        ParseErrorKind::Arity {
                            directive: "trans",
                            expected: "<src> <event> <dst>",
                        },
                    ));
                };
                let e = builder
                    .event_id(ev.text)
                    .ok_or_else(|| at(ev, ParseErrorKind::UndeclaredEvent(ev.text.to_string())))?;
                let s = builder.state(src.text).map_err(|e| at(src, e.into()))?;
                let d = builder.state(dst.text).map_err(|e| at(dst, e.into()))?;
                builder.transition(s, e, d).map_err(|e| at(first, e.into()))?;
            }
            other => {
                return Err(at(first, ParseErrorKind::UnknownDirective(other.to_string())));
            }
        }
    }

    let eof = |kind| ParseError {
        line: last_line.max(1),
        column: 1,
        kind,
    };
    if !header_seen {
        return Err(eof(ParseErrorKind::MissingHeader));
    }
    if !init_seen {
        return Err(eof(ParseErrorKind::MissingInit));
    }
    builder.build().map_err(|e| eof(e.into()))
}

/// Parses, optionally closes the fault set, and validates.
pub fn load_model(text: &str, opts: LoadOptions) -> Result<DesModel, LoadError> {
    let mut model = parse_model_unchecked(text)?;
    if opts.close_faults {
        model = crate::model::fault_closure(&model)?;
    }
    if !opts.skip_validation {
        let report = validate(&model);
        if !report.is_clean() {
            return Err(LoadError::Invalid(report));
        }
    }
    Ok(model)
}

/// Parses and validates with default options.
pub fn parse_model(text: &str) -> Result<DesModel, LoadError> {
    load_model(text, LoadOptions::default())
}

/// Writes a model back to `.des` text.
pub fn serialize_model(m: &DesModel) -> String {
    let mut out = String::from("des v1\n");
    let list = |obs: bool| -> Vec<&str> {
        m.events()
            .filter(|&e| m.is_observable(e) == obs)
            .map(|e| m.event_name(e))
            .collect()
    };
    let (obs, hidden) = (list(true), list(false));
    if !obs.is_empty() {
        let _ = writeln!(out, "obs {}", obs.join(" "));
    }
    if !hidden.is_empty() {
        let _ = writeln!(out, "hidden {}", hidden.join(" "));
    }
    let _ = writeln!(out, "init {}", m.state_name(m.initial()));
    let faulty: Vec<&str> = m.faulty_states().map(|q| m.state_name(q)).collect();
    if !faulty.is_empty() {
        let _ = writeln!(out, "fault {}", faulty.join(" "));
    }
    for t in m.transitions() {
        let _ = writeln!(
            out,
            "trans {} {} {}",
            m.state_name(t.source),
            m.event_name(t.event),
            m.state_name(t.target)
        );
    }
    out
}
