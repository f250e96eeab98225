//! Parsers for the contract and orchestrator surface syntax.
//!
//! Contracts: `1`, `?a.C`, `!a.C`, `C + D`, `C (+) D`, `rec x . C`, `x` and
//! parentheses. A trailing `.1` may be omitted. Orchestrators: `1`,
//! `<a,!a>.f`, `<!a,a>.f`, `<a,!a>+.f`, `f \/ g`, `rec x . f`, `x` and
//! parentheses. Prefixing binds tighter than choice and a `rec` body
//! extends as far to the right as possible.

use thiserror::Error;

use crate::contract::{Branch, Contract, ContractError};
use crate::orch::{Dir, OAct, Orch, OrchError};

#[derive(Clone, Debug, PartialEq, Eq, Error)]
pub enum ParseError {
    #[error("syntax error at offset {pos}: {msg}")]
    Syntax { pos: usize, msg: String },
    #[error("duplicate label `{label}` in the choice at offset {pos}")]
    DuplicateLabel { pos: usize, label: String },
    #[error("unguarded recursion on `{var}` at offset {pos}")]
    UnguardedRecursion { pos: usize, var: String },
    #[error("free variable `{var}` at offset {pos}")]
    FreeVariable { pos: usize, var: String },
    #[error("invalid orchestrator at offset {pos}: {msg}")]
    Orchestrator { pos: usize, msg: String },
}

/// Errors reading derivations back from their JSON form.
#[derive(Clone, Debug, PartialEq, Eq, Error)]
pub enum JsonError {
    #[error("malformed derivation JSON: {0}")]
    Shape(String),
    #[error("unknown rule `{0}`")]
    UnknownRule(String),
    #[error(transparent)]
    Parse(#[from] ParseError),
}

/// The fields of one derivation node in JSON: rule name, the two sides of
/// the judgment under the given keys, premises and optional branch.
pub(crate) struct JsonNode<'a> {
    pub rule: &'a str,
    pub left: Contract,
    pub right: Contract,
    pub premises: &'a [serde_json::Value],
    pub branch: Option<String>,
}

pub(crate) fn json_node<'a>(v: &'a serde_json::Value, left: &str, right: &str) -> Result<JsonNode<'a>, JsonError> {
    let shape = |what: &str| JsonError::Shape(format!("missing or invalid `{what}`"));
    let rule = v.get("rule").and_then(|r| r.as_str()).ok_or_else(|| shape("rule"))?;
    let j = v.get("judgment").ok_or_else(|| shape("judgment"))?;
    let side = |k: &str| -> Result<Contract, JsonError> {
        Ok(parse_contract(j.get(k).and_then(|s| s.as_str()).ok_or_else(|| shape(k))?)?)
    };
    let premises = match v.get("premises") {
        None => &[][..],
        Some(p) => p.as_array().ok_or_else(|| shape("premises"))?.as_slice(),
    };
    let branch = match v.get("branch") {
        None | Some(serde_json::Value::Null) => None,
        Some(b) => Some(b.as_str().ok_or_else(|| shape("branch"))?.to_string()),
    };
    Ok(JsonNode { rule, left: side(left)?, right: side(right)?, premises, branch })
}

/// A parsed value together with informational notes about how the input
/// was read.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Parsed<T> {
    pub value: T,
    pub notes: Vec<String>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
enum Tok {
    Ident(String),
    One,
    Rec,
    Query,
    Bang,
    Dot,
    Plus,
    OPlus,
    Or,
    LParen,
    RParen,
    Lt,
    Gt,
    Comma,
    Eof,
}

fn describe(t: &Tok) -> String {
    match t {
        Tok::Ident(s) => format!("identifier `{s}`"),
        Tok::One => "`1`".into(),
        Tok::Rec => "`rec`".into(),
        Tok::Query => "`?`".into(),
        Tok::Bang => "`!`".into(),
        Tok::Dot => "`.`".into(),
        Tok::Plus => "`+`".into(),
        Tok::OPlus => "`(+)`".into(),
        Tok::Or => "`\\/`".into(),
        Tok::LParen => "`(`".into(),
        Tok::RParen => "`)`".into(),
        Tok::Lt => "`<`".into(),
        Tok::Gt => "`>`".into(),
        Tok::Comma => "`,`".into(),
        Tok::Eof => "end of input".into(),
    }
}

fn lex(src: &str) -> Result<Vec<(Tok, usize)>, ParseError> {
    let chars: Vec<(usize, char)> = src.char_indices().collect();
    let mut out = Vec::new();
    let mut i = 0;
    while i < chars.len() {
        let (pos, c) = chars[i];
        if c.is_whitespace() {
            i += 1;
            continue;
        }
        let rest = &src[pos..];
        if rest.starts_with("(+)") {
            out.push((Tok::OPlus, pos));
            i += 3;
            continue;
        }
        if rest.starts_with("\\/") {
            out.push((Tok::Or, pos));
            i += 2;
            continue;
        }
        let tok = match c {
            '⊕' => Tok::OPlus,
            '∨' => Tok::Or,
            '?' => Tok::Query,
            '!' => Tok::Bang,
            '.' => Tok::Dot,
            '+' => Tok::Plus,
            '(' => Tok::LParen,
            ')' => Tok::RParen,
            '<' => Tok::Lt,
            '>' => Tok::Gt,
            ',' => Tok::Comma,
            '1' => Tok::One,
            c if c.is_alphabetic() || c == '_' => {
                let mut j = i;
                while j < chars.len() && (chars[j].1.is_alphanumeric() || chars[j].1 == '_' || chars[j].1 == '\'') {
                    j += 1;
                }
                let end = if j < chars.len() { chars[j].0 } else { src.len() };
                let word = &src[pos..end];
                out.push((
                    if word == "rec" { Tok::Rec } else { Tok::Ident(word.to_string()) },
                    pos,
                ));
                i = j;
                continue;
            }
            other => {
                return Err(ParseError::Syntax { pos, msg: format!("unexpected character `{other}`") })
            }
        };
        out.push((tok, pos));
        i += 1;
    }
    out.push((Tok::Eof, src.len()));
    Ok(out)
}

struct Cursor {
    toks: Vec<(Tok, usize)>,
    at: usize,
    bound: Vec<String>,
    notes: Vec<String>,
}

impl Cursor {
    fn new(src: &str) -> Result<Cursor, ParseError> {
        Ok(Cursor { toks: lex(src)?, at: 0, bound: Vec::new(), notes: Vec::new() })
    }

    fn peek(&self) -> &Tok {
        &self.toks[self.at].0
    }

    fn pos(&self) -> usize {
        self.toks[self.at].1
    }

    fn bump(&mut self) -> Tok {
        let t = self.toks[self.at].0.clone();
        if self.at + 1 < self.toks.len() {
            self.at += 1;
        }
        t
    }

    fn expect(&mut self, want: Tok) -> Result<(), ParseError> {
        if *self.peek() == want {
            self.bump();
            Ok(())
        } else {
            Err(self.unexpected(&format!("expected {}", describe(&want))))
        }
    }

    fn unexpected(&self, ctx: &str) -> ParseError {
        ParseError::Syntax { pos: self.pos(), msg: format!("{ctx}, found {}", describe(self.peek())) }
    }

    fn ident(&mut self) -> Result<String, ParseError> {
        match self.peek().clone() {
            Tok::Ident(s) => {
                self.bump();
                Ok(s)
            }
            _ => Err(self.unexpected("expected an identifier")),
        }
    }

    fn finish(&self) -> Result<(), ParseError> {
        if *self.peek() == Tok::Eof {
            Ok(())
        } else {
            Err(self.unexpected("expected end of input"))
        }
    }

    fn variable(&self, name: String, pos: usize) -> Result<String, ParseError> {
        if self.bound.contains(&name) {
            Ok(name)
        } else {
            Err(ParseError::FreeVariable { pos, var: name })
        }
    }
}

/// Parses a closed contract.
pub fn parse_contract(src: &str) -> Result<Contract, ParseError> {
    parse_contract_with_notes(src).map(|p| p.value)
}

/// Parses a closed contract, also returning notes such as lone outputs
/// being read as internal choices.
pub fn parse_contract_with_notes(src: &str) -> Result<Parsed<Contract>, ParseError> {
    let mut cur = Cursor::new(src)?;
    let value = contract_sum(&mut cur)?;
    cur.finish()?;
    Ok(Parsed { value, notes: cur.notes })
}

/// How a summand was written, which decides whether it may be combined.
enum Summand {
    Input(Branch),
    Output(Branch),
    Other(Contract),
}

fn contract_sum(cur: &mut Cursor) -> Result<Contract, ParseError> {
    let start = cur.pos();
    let first = contract_term(cur)?;
    let mut op: Option<Tok> = None;
    let mut rest = Vec::new();
    while matches!(cur.peek(), Tok::Plus | Tok::OPlus) {
        let tok = cur.peek().clone();
        if let Some(prev) = &op {
            if *prev != tok {
                return Err(ParseError::Syntax {
                    pos: cur.pos(),
                    msg: "mixing `+` and `(+)` at one level needs parentheses".into(),
                });
            }
        }
        op = Some(tok);
        cur.bump();
        rest.push((cur.pos(), contract_term(cur)?));
    }
    let Some(op) = op else {
        return Ok(match first {
            Summand::Input(b) => Contract::Input(vec![b]),
            Summand::Output(b) => {
                cur.notes.push(format!(
                    "offset {start}: lone output `!{}` read as an internal choice",
                    b.0
                ));
                Contract::Internal(vec![b])
            }
            Summand::Other(c) => c,
        });
    };
    let mut summands = vec![(start, first)];
    summands.extend(rest);
    let mut inputs = Vec::new();
    let mut outputs = Vec::new();
    for (pos, s) in summands {
        match s {
            Summand::Input(b) => inputs.push(b),
            Summand::Output(b) => outputs.push(b),
            Summand::Other(_) => {
                return Err(ParseError::Syntax {
                    pos,
                    msg: "every summand of a choice must start with `?a` or `!a`".into(),
                })
            }
        }
    }
    let result = match op {
        Tok::Plus if !inputs.is_empty() && !outputs.is_empty() => {
            return Err(ParseError::Syntax {
                pos: start,
                msg: "an external choice cannot mix inputs and outputs".into(),
            })
        }
        Tok::Plus if outputs.is_empty() => Contract::input(inputs),
        Tok::Plus => Contract::affectible(outputs),
        _ if !inputs.is_empty() => {
            return Err(ParseError::Syntax {
                pos: start,
                msg: "an internal choice `(+)` may only contain outputs".into(),
            })
        }
        _ => Contract::internal(outputs),
    };
    result.map_err(|e| match e {
        ContractError::DuplicateLabel(label) => ParseError::DuplicateLabel { pos: start, label },
        other => ParseError::Syntax { pos: start, msg: other.to_string() },
    })
}

fn contract_term(cur: &mut Cursor) -> Result<Summand, ParseError> {
    match cur.peek() {
        Tok::Query | Tok::Bang => contract_prefix(cur),
        _ => Ok(Summand::Other(contract_atom(cur)?)),
    }
}

fn contract_prefix(cur: &mut Cursor) -> Result<Summand, ParseError> {
    let is_input = cur.bump() == Tok::Query;
    let name = cur.ident()?;
    let cont = if *cur.peek() == Tok::Dot {
        cur.bump();
        let pos = cur.pos();
        match cur.peek() {
            Tok::Query | Tok::Bang => match contract_prefix(cur)? {
                Summand::Input(b) => Contract::Input(vec![b]),
                Summand::Output(b) => {
                    cur.notes.push(format!(
                        "offset {pos}: lone output `!{}` read as an internal choice",
                        b.0
                    ));
                    Contract::Internal(vec![b])
                }
                Summand::Other(c) => c,
            },
            _ => contract_atom(cur)?,
        }
    } else {
        Contract::Success
    };
    Ok(if is_input {
        Summand::Input((name, cont))
    } else {
        Summand::Output((name, cont))
    })
}

fn contract_atom(cur: &mut Cursor) -> Result<Contract, ParseError> {
    let pos = cur.pos();
    match cur.peek().clone() {
        Tok::One => {
            cur.bump();
            Ok(Contract::Success)
        }
        Tok::LParen => {
            cur.bump();
            let c = contract_sum(cur)?;
            cur.expect(Tok::RParen)?;
            Ok(c)
        }
        Tok::Ident(name) => {
            cur.bump();
            Ok(Contract::Var(cur.variable(name, pos)?))
        }
        Tok::Rec => {
            cur.bump();
            let var = cur.ident()?;
            cur.expect(Tok::Dot)?;
            cur.bound.push(var.clone());
            let body = contract_sum(cur);
            cur.bound.pop();
            let body = body?;
            let mut head = &body;
            while let Contract::Rec(_, b) = head {
                head = b;
            }
            if let Contract::Var(y) = head {
                return Err(ParseError::UnguardedRecursion { pos, var: y.clone() });
            }
            Ok(Contract::Rec(var, Box::new(body)))
        }
        _ => Err(cur.unexpected("expected a contract")),
    }
}

/// Parses a closed orchestrator.
pub fn parse_orch(src: &str) -> Result<Orch, ParseError> {
    let mut cur = Cursor::new(src)?;
    let f = orch_disj(&mut cur)?;
    cur.finish()?;
    Ok(f)
}

fn orch_disj(cur: &mut Cursor) -> Result<Orch, ParseError> {
    let start = cur.pos();
    let first = orch_term(cur)?;
    if *cur.peek() != Tok::Or {
        return Ok(first);
    }
    let mut terms = vec![(start, first)];
    while *cur.peek() == Tok::Or {
        cur.bump();
        let pos = cur.pos();
        terms.push((pos, orch_term(cur)?));
    }
    let mut entries = Vec::new();
    for (pos, t) in terms {
        match t {
            Orch::Disj(es) => entries.extend(es),
            Orch::Plus(_, _) => {
                return Err(ParseError::Orchestrator {
                    pos,
                    msg: "affectible actions cannot occur in a disjunction".into(),
                })
            }
            _ => {
                return Err(ParseError::Orchestrator {
                    pos,
                    msg: "every disjunct must start with a plain action".into(),
                })
            }
        }
    }
    Orch::disj(entries).map_err(|e| match e {
        OrchError::DuplicateAction(a) => ParseError::Orchestrator {
            pos: start,
            msg: format!("duplicate action {a} in a disjunction"),
        },
        other => ParseError::Orchestrator { pos: start, msg: other.to_string() },
    })
}

fn orch_term(cur: &mut Cursor) -> Result<Orch, ParseError> {
    if *cur.peek() == Tok::Lt {
        orch_prefix(cur)
    } else {
        orch_atom(cur)
    }
}

fn orch_prefix(cur: &mut Cursor) -> Result<Orch, ParseError> {
    let action = orch_action(cur)?;
    let affectible = if *cur.peek() == Tok::Plus {
        cur.bump();
        true
    } else {
        false
    };
    let cont = if *cur.peek() == Tok::Dot {
        cur.bump();
        if *cur.peek() == Tok::Lt {
            orch_prefix(cur)?
        } else {
            orch_atom(cur)?
        }
    } else {
        Orch::Idle
    };
    Ok(if affectible {
        Orch::plus(action, cont)
    } else {
        Orch::act(action, cont)
    })
}

fn orch_action(cur: &mut Cursor) -> Result<OAct, ParseError> {
    let pos = cur.pos();
    cur.expect(Tok::Lt)?;
    let server_out = if *cur.peek() == Tok::Bang {
        cur.bump();
        true
    } else {
        false
    };
    let server = cur.ident()?;
    cur.expect(Tok::Comma)?;
    let client_out = if *cur.peek() == Tok::Bang {
        cur.bump();
        true
    } else {
        false
    };
    let client = cur.ident()?;
    cur.expect(Tok::Gt)?;
    if server != client || server_out == client_out {
        return Err(ParseError::Orchestrator {
            pos,
            msg: "an orchestration action pairs an action with its complement, as in <a,!a> or <!a,a>"
                .into(),
        });
    }
    Ok(OAct { name: server, dir: if server_out { Dir::ServerOut } else { Dir::ServerIn } })
}

fn orch_atom(cur: &mut Cursor) -> Result<Orch, ParseError> {
    let pos = cur.pos();
    match cur.peek().clone() {
        Tok::One => {
            cur.bump();
            Ok(Orch::Idle)
        }
        Tok::LParen => {
            cur.bump();
            let f = orch_disj(cur)?;
            cur.expect(Tok::RParen)?;
            Ok(f)
        }
        Tok::Ident(name) => {
            cur.bump();
            Ok(Orch::Var(cur.variable(name, pos)?))
        }
        Tok::Rec => {
            cur.bump();
            let var = cur.ident()?;
            cur.expect(Tok::Dot)?;
            cur.bound.push(var.clone());
            let body = orch_disj(cur);
            cur.bound.pop();
            let body = body?;
            let mut head = &body;
            while let Orch::Rec(_, b) = head {
                head = b;
            }
            if let Orch::Var(y) = head {
                return Err(ParseError::UnguardedRecursion { pos, var: y.clone() });
            }
            Ok(Orch::Rec(var, Box::new(body)))
        }
        _ => Err(cur.unexpected("expected an orchestrator")),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_success_and_lone_output() {
        assert_eq!(parse_contract("1").unwrap(), Contract::Success);
        let p = parse_contract_with_notes("!a.1").unwrap();
        assert_eq!(p.value, Contract::send("a", Contract::Success));
        assert_eq!(p.notes.len(), 1);
    }

    #[test]
    fn trailing_one_is_optional() {
        assert_eq!(parse_contract("?a").unwrap(), parse_contract("?a.1").unwrap());
    }

    #[test]
    fn prefix_binds_tighter_than_choice() {
        let c = parse_contract("?a.?b + ?c").unwrap();
        let expected = Contract::input(vec![
            ("a".into(), Contract::recv("b", Contract::Success)),
            ("c".into(), Contract::Success),
        ])
        .unwrap();
        assert_eq!(c, expected);
    }

    #[test]
    fn choice_errors_are_distinct() {
        assert!(matches!(parse_contract("?a + ?a"), Err(ParseError::DuplicateLabel { .. })));
        assert!(matches!(parse_contract("rec x . x"), Err(ParseError::UnguardedRecursion { .. })));
        assert!(matches!(parse_contract("?a.y"), Err(ParseError::FreeVariable { .. })));
        assert!(matches!(parse_contract("!a + !b (+) !c"), Err(ParseError::Syntax { .. })));
        assert!(matches!(parse_contract("?a + !b"), Err(ParseError::Syntax { .. })));
        assert!(matches!(parse_contract("?a (+) ?b"), Err(ParseError::Syntax { .. })));
        assert!(matches!(parse_contract("?a.(1"), Err(ParseError::Syntax { pos: 5, .. })));
    }

    #[test]
    fn rec_body_extends_right() {
        let c = parse_contract("rec x . ?a.x + ?b").unwrap();
        let body = Contract::input(vec![
            ("a".into(), Contract::var("x")),
            ("b".into(), Contract::Success),
        ])
        .unwrap();
        assert_eq!(c, Contract::rec("x", body));
    }

    #[test]
    fn orchestrator_round_trip() {
        let src = "<bag,!bag>+.<!price,price>.(<card,!card> \\/ <cash,!cash>)";
        let f = parse_orch(src).unwrap();
        assert_eq!(f.to_string(), src);
    }

    #[test]
    fn affectible_action_in_disjunction_is_rejected() {
        assert!(matches!(
            parse_orch("<a,!a>+ \\/ <b,!b>"),
            Err(ParseError::Orchestrator { .. })
        ));
        assert!(matches!(parse_orch("<a,!b>"), Err(ParseError::Orchestrator { .. })));
        assert!(matches!(parse_orch("<a,a>"), Err(ParseError::Orchestrator { .. })));
    }
}
