//! Line-oriented protocol description format.
//!
//! ```text
//! protocol <name>
//! states: <id> <id> ...
//! init: <id> ...
//! messages: <id> ...
//! trans:
//!   <state> !<msg> <state>
//!   <state> ?<msg> <state>
//! target: <id> ...        # optional
//! ```
//!
//! `#` starts a comment that runs to the end of the line. Sections may appear
//! in any order but at most once each; [`render`] always emits them in the
//! order above. Identifiers are arbitrary non-whitespace tokens that do not
//! contain `:` or `#` and do not start with `!` or `?`.

use std::fmt::Write as _;

use thiserror::Error;

use crate::protocol::{Action, MsgId, Protocol, StateId, TargetSet, Transition};

/// Parse failure with a 1-based source position.
#[derive(Clone, Debug, Error, PartialEq, Eq)]
#[error("line {line}, column {column}: {message}")]
pub struct ParseError {
    pub line: usize,
    pub column: usize,
    pub message: String,
}

impl ParseError {
    fn new(line: usize, column: usize, message: impl Into<String>) -> Self {
        ParseError {
            line,
            column,
            message: message.into(),
        }
    }
}

/// A parsed protocol file: the protocol plus its optional target set.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ProtocolFile {
    pub protocol: Protocol,
    pub target: Option<TargetSet>,
}

/// Parses the protocol sections of a DSL document, ignoring any `target:` line.
///
/// Ordered sets follow declaration order and receptions are *not* completed;
/// run [`Protocol::complete_receptions`] afterwards to normalize.
pub fn parse_protocol(text: &str) -> Result<Protocol, ParseError> {
    parse_protocol_file(text).map(|f| f.protocol)
}

/// Parses a full DSL document including the optional `target:` line.
pub fn parse_protocol_file(text: &str) -> Result<ProtocolFile, ParseError> {
    Parser::new(text).run()
}

struct Parser<'a> {
    lines: Vec<(usize, &'a str)>, // (1-based line number, comment-stripped content)
    name: Option<String>,
    states: Option<Vec<Tok>>,
    init: Option<Vec<Tok>>,
    messages: Option<Vec<Tok>>,
    trans_seen: bool,
    trans: Vec<(usize, Vec<Tok>)>,
    target: Option<Vec<Tok>>,
    eof_line: usize,
}

/// A token with its 1-based starting column.
#[derive(Clone, Debug)]
struct Tok {
    text: String,
    line: usize,
    column: usize,
}

fn tokenize(line_no: usize, content: &str) -> Vec<Tok> {
    let mut out = Vec::new();
    let mut col = 0usize;
    let mut start = None;
    for (i, ch) in content.char_indices() {
        col += 1;
        if ch.is_whitespace() {
            if let Some((s, c)) = start.take() {
                out.push(Tok {
                    text: content[s..i].to_owned(),
                    line: line_no,
                    column: c,
                });
            }
        } else if start.is_none() {
            start = Some((i, col));
        }
    }
    if let Some((s, c)) = start {
        out.push(Tok {
            text: content[s..].to_owned(),
            line: line_no,
            column: c,
        });
    }
    out
}

fn check_identifier(tok: &Tok) -> Result<(), ParseError> {
    let t = &tok.text;
    if t.starts_with('!') || t.starts_with('?') || t.contains(':') || t.contains('#') {
        return Err(ParseError::new(
            tok.line,
            tok.column,
            format!("invalid identifier '{t}'"),
        ));
    }
    Ok(())
}

impl<'a> Parser<'a> {
    fn new(text: &'a str) -> Self {
        let lines = text
            .lines()
            .enumerate()
            .map(|(i, raw)| {
                let content = match raw.find('#') {
                    Some(pos) => &raw[..pos],
                    None => raw,
                };
                (i + 1, content)
            })
            .collect::<Vec<_>>();
        let eof_line = lines.len() + 1;
        Parser {
            lines,
            name: None,
            states: None,
            init: None,
            messages: None,
            trans_seen: false,
            trans: Vec::new(),
            target: None,
            eof_line,
        }
    }

    fn run(mut self) -> Result<ProtocolFile, ParseError> {
        self.collect_sections()?;
        self.build()
    }

    fn collect_sections(&mut self) -> Result<(), ParseError> {
        let lines = std::mem::take(&mut self.lines);
        let mut in_trans = false;
        for (line_no, content) in lines {
            let toks = tokenize(line_no, content);
            let Some(head) = toks.first() else { continue };
            match head.text.as_str() {
                "protocol" => {
                    in_trans = false;
                    if self.name.is_some() {
                        return Err(ParseError::new(
                            head.line,
                            head.column,
                            "duplicate 'protocol' line",
                        ));
                    }
                    let [_, name] = toks.as_slice() else {
                        return Err(ParseError::new(
                            head.line,
                            head.column,
                            "expected 'protocol <name>'",
                        ));
                    };
                    check_identifier(name)?;
                    self.name = Some(name.text.clone());
                }
                "states:" => {
                    in_trans = false;
                    Self::set_section(&mut self.states, head, toks[1..].to_vec(), "states:")?;
                }
                "init:" => {
                    in_trans = false;
                    Self::set_section(&mut self.init, head, toks[1..].to_vec(), "init:")?;
                }
                "messages:" => {
                    in_trans = false;
                    Self::set_section(&mut self.messages, head, toks[1..].to_vec(), "messages:")?;
                }
                "trans:" => {
                    if self.trans_seen {
                        return Err(ParseError::new(
                            head.line,
                            head.column,
                            "duplicate 'trans:' section",
                        ));
                    }
                    if toks.len() > 1 {
                        let t = &toks[1];
                        return Err(ParseError::new(
                            t.line,
                            t.column,
                            "transitions must start on the next line",
                        ));
                    }
                    self.trans_seen = true;
                    in_trans = true;
                }
                "target:" => {
                    in_trans = false;
                    Self::set_section(&mut self.target, head, toks[1..].to_vec(), "target:")?;
                }
                _ if in_trans => self.trans.push((line_no, toks)),
                _ => {
                    return Err(ParseError::new(
                        head.line,
                        head.column,
                        format!(
                            "unexpected token '{}' (not inside a 'trans:' section)",
                            head.text
                        ),
                    ));
                }
            }
        }
        Ok(())
    }

    fn set_section(
        slot: &mut Option<Vec<Tok>>,
        head: &Tok,
        toks: Vec<Tok>,
        what: &str,
    ) -> Result<(), ParseError> {
        if slot.is_some() {
            return Err(ParseError::new(
                head.line,
                head.column,
                format!("duplicate '{what}' section"),
            ));
        }
        *slot = Some(toks);
        Ok(())
    }

    fn build(self) -> Result<ProtocolFile, ParseError> {
        let eof =
            |what: &str| ParseError::new(self.eof_line, 1, format!("missing '{what}' section"));
        let name = self.name.ok_or_else(|| eof("protocol"))?;
        let state_toks = self.states.ok_or_else(|| eof("states:"))?;
        let init_toks = self.init.ok_or_else(|| eof("init:"))?;
        let msg_toks = self.messages.ok_or_else(|| eof("messages:"))?;
        if !self.trans_seen {
            return Err(eof("trans:"));
        }

        let mut states: Vec<StateId> = Vec::new();
        for t in &state_toks {
            check_identifier(t)?;
            let id = StateId(t.text.clone());
            if states.contains(&id) {
                return Err(ParseError::new(
                    t.line,
                    t.column,
                    format!("duplicate state '{}'", t.text),
                ));
            }
            states.push(id);
        }
        let mut messages: Vec<MsgId> = Vec::new();
        for t in &msg_toks {
            check_identifier(t)?;
            let id = MsgId(t.text.clone());
            if messages.contains(&id) {
                return Err(ParseError::new(
                    t.line,
                    t.column,
                    format!("duplicate message '{}'", t.text),
                ));
            }
            messages.push(id);
        }

        let lookup_state = |t: &Tok| -> Result<StateId, ParseError> {
            let id = StateId(t.text.clone());
            if states.contains(&id) {
                Ok(id)
            } else {
                Err(ParseError::new(
                    t.line,
                    t.column,
                    format!("unknown state '{}'", t.text),
                ))
            }
        };

        if init_toks.is_empty() {
            return Err(ParseError::new(self.eof_line, 1, "empty init set"));
        }
        let mut init = Vec::new();
        for t in &init_toks {
            let id = lookup_state(t)?;
            if init.contains(&id) {
                return Err(ParseError::new(
                    t.line,
                    t.column,
                    format!("duplicate initial state '{}'", t.text),
                ));
            }
            init.push(id);
        }

        let mut transitions = Vec::new();
        for (line_no, toks) in &self.trans {
            let [src, act, tgt] = toks.as_slice() else {
                let col = toks.first().map_or(1, |t| t.column);
                return Err(ParseError::new(
                    *line_no,
                    col,
                    "expected '<state> !<msg>|?<msg> <state>'",
                ));
            };
            check_identifier(src)?;
            check_identifier(tgt)?;
            let source = lookup_state(src)?;
            let target = lookup_state(tgt)?;
            let kind = act.text.chars().next().expect("tokens are nonempty");
            if kind != '!' && kind != '?' {
                return Err(ParseError::new(
                    act.line,
                    act.column,
                    format!("action '{}' must start with '!' or '?'", act.text),
                ));
            }
            let rest = &act.text[1..];
            if rest.is_empty() {
                return Err(ParseError::new(
                    act.line,
                    act.column,
                    "action is missing its message",
                ));
            }
            let msg_tok = Tok {
                text: rest.to_owned(),
                line: act.line,
                column: act.column + 1,
            };
            check_identifier(&msg_tok)?;
            let msg = MsgId(rest.to_owned());
            if !messages.contains(&msg) {
                return Err(ParseError::new(
                    act.line,
                    act.column + 1,
                    format!("unknown message '{rest}'"),
                ));
            }
            let action = if kind == '!' {
                Action::Broadcast(msg)
            } else {
                Action::Receive(msg)
            };
            transitions.push(Transition {
                source,
                action,
                target,
            });
        }

        let target = match self.target {
            None => None,
            Some(toks) => {
                let mut ts = Vec::new();
                for t in &toks {
                    let id = lookup_state(t)?;
                    if !ts.contains(&id) {
                        ts.push(id);
                    }
                }
                Some(TargetSet::new(ts))
            }
        };

        Ok(ProtocolFile {
            protocol: Protocol {
                name,
                states,
                init,
                messages,
                transitions,
            },
            target,
        })
    }
}

/// Renders a protocol in the DSL format, declaration order preserved.
/// `parse_protocol(render(p))` reproduces `p` exactly.
pub fn render(p: &Protocol) -> String {
    render_with_target(p, None)
}

/// Renders a protocol plus an optional `target:` line.
pub fn render_with_target(p: &Protocol, target: Option<&TargetSet>) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "protocol {}", p.name);
    let _ = writeln!(s, "states: {}", join(p.states.iter()));
    let _ = writeln!(s, "init: {}", join(p.init.iter()));
    let _ = writeln!(s, "messages: {}", join(p.messages.iter()));
    let _ = writeln!(s, "trans:");
    for t in &p.transitions {
        let _ = writeln!(s, "  {t}");
    }
    if let Some(f) = target {
        let _ = writeln!(s, "target: {}", join(f.states.iter()));
    }
    s
}

fn join<T: std::fmt::Display>(items: impl Iterator<Item = T>) -> String {
    items.map(|x| x.to_string()).collect::<Vec<_>>().join(" ")
}
