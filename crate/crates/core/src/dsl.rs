//! Text format for systems.
//!
//! ```text
//! system pc
//! payloads m
//! process prod initial s
//!   state s
//!     send m to cons goto s
//! end
//! process cons initial r
//!   state r
//!     recv m goto r
//! end
//! ```
//!
//! `#` starts a comment. One directive per line. States must be declared
//! with `state` before or after use inside their process block; process
//! names used in `to` may be declared anywhere in the file.

use std::collections::HashMap;
use std::fmt::Write as _;

use crate::error::ParseError;
use crate::model::{
    LocalAction, PayloadId, Pid, ProcessDef, StateId, SystemSpec, Transition, MAX_PROCESSES, RESERVED_PROCESS,
};

#[derive(Debug, Clone)]
struct Tok<'a> {
    text: &'a str,
    line: usize,
    col: usize,
}

fn err(t: &Tok<'_>, msg: impl Into<String>) -> ParseError {
    ParseError {
        line: t.line,
        col: t.col,
        message: msg.into(),
    }
}

fn tokenize(line_no: usize, line: &str) -> Vec<Tok<'_>> {
    let code = match line.find('#') {
        Some(i) => &line[..i],
        None => line,
    };
    let mut out = Vec::new();
    let mut start = None;
    for (i, ch) in code.char_indices() {
        if ch.is_whitespace() {
            if let Some(s) = start.take() {
                out.push(Tok {
                    text: &code[s..i],
                    line: line_no,
                    col: code[..s].chars().count() + 1,
                });
            }
        } else if start.is_none() {
            start = Some(i);
        }
    }
    if let Some(s) = start {
        out.push(Tok {
            text: &code[s..],
            line: line_no,
            col: code[..s].chars().count() + 1,
        });
    }
    out
}

fn ident<'a>(t: &Tok<'a>) -> Result<&'a str, ParseError> {
    let mut chars = t.text.chars();
    let ok = match chars.next() {
        Some(c) if c.is_ascii_alphabetic() || c == '_' => chars.all(|c| c.is_ascii_alphanumeric() || c == '_'),
        _ => false,
    };
    if ok {
        Ok(t.text)
    } else {
        Err(err(t, format!("invalid identifier `{}`", t.text)))
    }
}

struct RawTransition<'a> {
    from: Tok<'a>,
    kind: RawKind<'a>,
    goto: Tok<'a>,
}

enum RawKind<'a> {
    Send { payload: Tok<'a>, to: Tok<'a> },
    Recv { payload: Tok<'a> },
}

struct RawProcess<'a> {
    name: Tok<'a>,
    initial: Tok<'a>,
    states: Vec<Tok<'a>>,
    transitions: Vec<RawTransition<'a>>,
}

/// Parse a system description. The result is fully validated.
pub fn parse_system(text: &str) -> Result<SystemSpec, ParseError> {
    let mut name: Option<String> = None;
    let mut payloads: Vec<Tok<'_>> = Vec::new();
    let mut procs: Vec<RawProcess<'_>> = Vec::new();
    let mut open = false;
    let mut last_line = 0;

    for (i, line) in text.lines().enumerate() {
        let toks = tokenize(i + 1, line);
        last_line = i + 1;
        let Some(head) = toks.first() else { continue };
        let expect_len = |n: usize| -> Result<(), ParseError> {
            if toks.len() != n {
                Err(err(
                    head,
                    format!("`{}` expects {} tokens, found {}", head.text, n, toks.len()),
                ))
            } else {
                Ok(())
            }
        };
        let keyword = |t: &Tok<'_>, kw: &str| -> Result<(), ParseError> {
            if t.text == kw {
                Ok(())
            } else {
                Err(err(t, format!("expected `{}`, found `{}`", kw, t.text)))
            }
        };
        match head.text {
            "system" => {
                expect_len(2)?;
                if name.is_some() {
                    return Err(err(head, "duplicate `system` line"));
                }
                name = Some(ident(&toks[1])?.to_string());
            }
            "payloads" => {
                if open {
                    return Err(err(head, "`payloads` inside a process block"));
                }
                for t in &toks[1..] {
                    ident(t)?;
                    if payloads.iter().any(|p| p.text == t.text) {
                        return Err(err(t, format!("duplicate payload `{}`", t.text)));
                    }
                    payloads.push(t.clone());
                }
            }
            "process" => {
                expect_len(4)?;
                if open {
                    return Err(err(head, "missing `end` before new process"));
                }
                let pname = ident(&toks[1])?;
                if pname == RESERVED_PROCESS {
                    return Err(err(
                        &toks[1],
                        format!("process name `{}` is reserved", RESERVED_PROCESS),
                    ));
                }
                if procs.iter().any(|p| p.name.text == pname) {
                    return Err(err(&toks[1], format!("duplicate process `{}`", pname)));
                }
                keyword(&toks[2], "initial")?;
                ident(&toks[3])?;
                procs.push(RawProcess {
                    name: toks[1].clone(),
                    initial: toks[3].clone(),
                    states: Vec::new(),
                    transitions: Vec::new(),
                });
                open = true;
            }
            "state" => {
                expect_len(2)?;
                let p = match (open, procs.last_mut()) {
                    (true, Some(p)) => p,
                    _ => return Err(err(head, "`state` outside a process block")),
                };
                ident(&toks[1])?;
                if p.states.iter().any(|s| s.text == toks[1].text) {
                    return Err(err(&toks[1], format!("duplicate state `{}`", toks[1].text)));
                }
                p.states.push(toks[1].clone());
            }
            "send" | "recv" => {
                let p = match (open, procs.last_mut()) {
                    (true, Some(p)) => p,
                    _ => return Err(err(head, "action outside a process block")),
                };
                let Some(from) = p.states.last().cloned() else {
                    return Err(err(head, "action before any `state`"));
                };
                let kind = if head.text == "send" {
                    expect_len(6)?;
                    keyword(&toks[2], "to")?;
                    keyword(&toks[4], "goto")?;
                    ident(&toks[1])?;
                    ident(&toks[3])?;
                    ident(&toks[5])?;
                    RawKind::Send {
                        payload: toks[1].clone(),
                        to: toks[3].clone(),
                    }
                } else {
                    expect_len(4)?;
                    keyword(&toks[2], "goto")?;
                    ident(&toks[1])?;
                    ident(&toks[3])?;
                    RawKind::Recv {
                        payload: toks[1].clone(),
                    }
                };
                let goto = toks[toks.len() - 1].clone();
                p.transitions.push(RawTransition { from, kind, goto });
            }
            "end" => {
                expect_len(1)?;
                if !open {
                    return Err(err(head, "`end` without an open process"));
                }
                open = false;
            }
            other => return Err(err(head, format!("unexpected `{}`", other))),
        }
    }
    if open {
        return Err(ParseError {
            line: last_line,
            col: 1,
            message: "missing `end` at end of input".into(),
        });
    }
    let name = name.ok_or(ParseError {
        line: 1,
        col: 1,
        message: "missing `system` line".into(),
    })?;
    if procs.len() > MAX_PROCESSES {
        return Err(ParseError {
            line: 1,
            col: 1,
            message: format!("too many processes ({})", procs.len()),
        });
    }
    if payloads.len() > 128 {
        return Err(err(&payloads[128], "too many payloads (at most 128)"));
    }

    let pid_of: HashMap<&str, Pid> = procs
        .iter()
        .enumerate()
        .map(|(i, p)| (p.name.text, Pid(i as u16)))
        .collect();
    let payload_of: HashMap<&str, PayloadId> = payloads
        .iter()
        .enumerate()
        .map(|(i, p)| (p.text, PayloadId(i as u16)))
        .collect();

    let mut processes = Vec::with_capacity(procs.len());
    for p in &procs {
        let state_of: HashMap<&str, StateId> = p
            .states
            .iter()
            .enumerate()
            .map(|(i, s)| (s.text, StateId(i as u16)))
            .collect();
        let state = |t: &Tok<'_>| {
            state_of
                .get(t.text)
                .copied()
                .ok_or_else(|| err(t, format!("undeclared state `{}` in process `{}`", t.text, p.name.text)))
        };
        let payload = |t: &Tok<'_>| {
            payload_of
                .get(t.text)
                .copied()
                .ok_or_else(|| err(t, format!("undeclared payload `{}`", t.text)))
        };
        let initial = state(&p.initial)?;
        let mut ts = Vec::with_capacity(p.transitions.len());
        for t in &p.transitions {
            let action = match &t.kind {
                RawKind::Send { payload: v, to } => LocalAction::Send {
                    to: *pid_of
                        .get(to.text)
                        .ok_or_else(|| err(to, format!("undeclared process `{}`", to.text)))?,
                    payload: payload(v)?,
                },
                RawKind::Recv { payload: v } => LocalAction::Recv { payload: payload(v)? },
            };
            ts.push(Transition {
                from: state(&t.from)?,
                action,
                to: state(&t.goto)?,
            });
        }
        processes.push(ProcessDef::new(
            p.name.text.to_string(),
            p.states.iter().map(|s| s.text.to_string()).collect(),
            initial,
            ts,
        ));
    }
    Ok(SystemSpec {
        name,
        payloads: payloads.iter().map(|t| t.text.to_string()).collect(),
        processes,
    })
}

/// Warnings that do not prevent analysis.
pub fn diagnostics(spec: &SystemSpec) -> Vec<String> {
    spec.self_senders()
        .into_iter()
        .map(|p| format!("warning: process `{}` sends to itself", spec.process_name(p)))
        .collect()
}

/// Canonical text rendering; `parse_system(&print_system(s)) == Ok(s)`.
pub fn print_system(spec: &SystemSpec) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "system {}", spec.name);
    if !spec.payloads.is_empty() {
        let _ = writeln!(out, "payloads {}", spec.payloads.join(" "));
    }
    for p in &spec.processes {
        let _ = writeln!(out, "process {} initial {}", p.name, p.state_name(p.initial));
        for (i, s) in p.states.iter().enumerate() {
            let _ = writeln!(out, "  state {}", s);
            for t in p.transitions.iter().filter(|t| t.from.index() == i) {
                match t.action {
                    LocalAction::Send { to, payload } => {
                        let _ = writeln!(
                            out,
                            "    send {} to {} goto {}",
                            spec.payload_name(payload),
                            spec.process_name(to),
                            p.state_name(t.to)
                        );
                    }
                    LocalAction::Recv { payload } => {
                        let _ = writeln!(
                            out,
                            "    recv {} goto {}",
                            spec.payload_name(payload),
                            p.state_name(t.to)
                        );
                    }
                }
            }
        }
        let _ = writeln!(out, "end");
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    const PC: &str = "\
system pc
payloads m
process prod initial s
  state s
    send m to cons goto s
end
process cons initial r   # consumer
  state r
    recv m goto r
end
";

    #[test]
    fn producer_consumer() {
        let spec = parse_system(PC).unwrap();
        assert_eq!(spec.processes.len(), 2);
        assert!(spec.processes.iter().all(|p| p.states.len() == 1));
        let n: usize = spec.processes.iter().map(|p| p.transitions.len()).sum();
        assert_eq!(n, 2);
        assert_eq!(parse_system(PC).unwrap(), spec);
    }

    #[test]
    fn undeclared_state_is_located() {
        let text = PC.replace("recv m goto r", "recv m goto X");
        let e = parse_system(&text).unwrap_err();
        assert!(e.message.contains("`X`"), "{e}");
        assert_eq!(e.line, 9);
        assert_eq!(e.col, 17);
    }

    #[test]
    fn errors() {
        let dup = PC.replace("process cons", "process prod");
        assert!(parse_system(&dup).unwrap_err().message.contains("duplicate"));
        let pi = PC.replace("cons", "pi");
        assert!(parse_system(&pi).unwrap_err().message.contains("reserved"));
        let undeclared = PC.replace("send m to", "send z to");
        assert!(parse_system(&undeclared).unwrap_err().message.contains("payload `z`"));
        let noproc = PC.replace("to cons", "to nobody");
        assert!(parse_system(&noproc).unwrap_err().message.contains("process `nobody`"));
        let syntax = PC.replace("goto s", "goto");
        let e = parse_system(&syntax).unwrap_err();
        assert_eq!(e.line, 5);
    }

    #[test]
    fn print_round_trip() {
        let spec = parse_system(PC).unwrap();
        assert_eq!(parse_system(&print_system(&spec)).unwrap(), spec);
    }

    #[test]
    fn self_send_warns() {
        let text = PC.replace("to cons", "to prod");
        let spec = parse_system(&text).unwrap();
        assert_eq!(diagnostics(&spec).len(), 1);
    }
}
