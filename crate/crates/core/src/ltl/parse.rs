//! Concrete syntax.
//!
//! ```text
//! formula := impl
//! impl    := or ("->" impl)?
//! or      := and ("|" and)*
//! and     := until ("&" until)*
//! until   := unary ("U" until)?
//! unary   := ("!" | "X" | "F" | "G") unary | primary
//! primary := "true" | "false" | "(" NAME "," (NAME | "*") ")" | "(" formula ")"
//! ```
//!
//! Names are runs of letters, digits, `_` and `.`. A run made only of `X`,
//! `F` and `G` in operator position reads as that sequence of operators, so
//! `GF p` is `G F p`.

use super::formula::{Atom, Ltl};
use super::LtlError;

/// Mode and guard-label names an atom may use.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Alphabet {
    pub modes: Vec<String>,
    pub labels: Vec<String>,
}

impl Alphabet {
    pub fn new(modes: Vec<String>, labels: Vec<String>) -> Self {
        Self { modes, labels }
    }

    /// Collects modes and labels from output strings of the form `(q,k)`.
    pub fn from_outputs<'a>(outputs: impl IntoIterator<Item = &'a str>) -> Self {
        let mut a = Self::default();
        for o in outputs {
            if let Some((q, k)) = split_output(o) {
                if !a.modes.iter().any(|m| m == q) {
                    a.modes.push(q.to_string());
                }
                if !a.labels.iter().any(|l| l == k) {
                    a.labels.push(k.to_string());
                }
            }
        }
        a
    }
}

/// Splits `"(q,k)"` into `("q", "k")`.
pub fn split_output(output: &str) -> Option<(&str, &str)> {
    let inner = output.strip_prefix('(')?.strip_suffix(')')?;
    let (q, k) = inner.split_once(',')?;
    Some((q.trim(), k.trim()))
}

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Name(String),
    Star,
    LParen,
    RParen,
    Comma,
    Not,
    And,
    Or,
    Implies,
    End,
}

#[derive(Debug, Clone)]
struct Token {
    tok: Tok,
    line: usize,
    col: usize,
}

fn describe(t: &Tok) -> String {
    match t {
        Tok::Name(n) => format!("`{n}`"),
        Tok::Star => "`*`".into(),
        Tok::LParen => "`(`".into(),
        Tok::RParen => "`)`".into(),
        Tok::Comma => "`,`".into(),
        Tok::Not => "`!`".into(),
        Tok::And => "`&`".into(),
        Tok::Or => "`|`".into(),
        Tok::Implies => "`->`".into(),
        Tok::End => "end of input".into(),
    }
}

fn is_name_char(c: char) -> bool {
    c.is_alphanumeric() || c == '_' || c == '.'
}

fn lex(text: &str) -> Result<Vec<Token>, LtlError> {
    let chars: Vec<char> = text.chars().collect();
    let (mut line, mut col) = (1, 1);
    let mut out = Vec::new();
    let mut i = 0;
    while i < chars.len() {
        let c = chars[i];
        let (tl, tc) = (line, col);
        let push = |tok, len: usize, out: &mut Vec<Token>| {
            out.push(Token { tok, line: tl, col: tc });
            len
        };
        let len = match c {
            '\n' => {
                line += 1;
                col = 1;
                i += 1;
                continue;
            }
            c if c.is_whitespace() => 1,
            '(' => push(Tok::LParen, 1, &mut out),
            ')' => push(Tok::RParen, 1, &mut out),
            ',' => push(Tok::Comma, 1, &mut out),
            '*' => push(Tok::Star, 1, &mut out),
            '!' => push(Tok::Not, 1, &mut out),
            '&' => push(Tok::And, 1, &mut out),
            '|' => push(Tok::Or, 1, &mut out),
            '-' if chars.get(i + 1) == Some(&'>') => push(Tok::Implies, 2, &mut out),
            c if is_name_char(c) => {
                let mut j = i;
                while j < chars.len() && is_name_char(chars[j]) {
                    j += 1;
                }
                let name: String = chars[i..j].iter().collect();
                push(Tok::Name(name), j - i, &mut out)
            }
            other => return Err(LtlError::Syntax { line, col, message: format!("unexpected character `{other}`") }),
        };
        i += len;
        col += len;
    }
    out.push(Token { tok: Tok::End, line, col });
    Ok(out)
}

struct Parser<'a> {
    toks: Vec<Token>,
    pos: usize,
    alphabet: Option<&'a Alphabet>,
}

impl Parser<'_> {
    fn peek(&self) -> &Token {
        &self.toks[self.pos]
    }

    fn bump(&mut self) -> Token {
        let t = self.toks[self.pos].clone();
        if t.tok != Tok::End {
            self.pos += 1;
        }
        t
    }

    fn error<T>(&self, t: &Token, message: String) -> Result<T, LtlError> {
        Err(LtlError::Syntax { line: t.line, col: t.col, message })
    }

    fn expect(&mut self, tok: Tok, what: &str) -> Result<Token, LtlError> {
        let t = self.bump();
        if t.tok == tok {
            Ok(t)
        } else {
            self.error(&t, format!("expected {what}, found {}", describe(&t.tok)))
        }
    }

    fn is_name(&self, name: &str) -> bool {
        matches!(&self.peek().tok, Tok::Name(n) if n == name)
    }

    fn implication(&mut self) -> Result<Ltl, LtlError> {
        let lhs = self.or()?;
        if self.peek().tok == Tok::Implies {
            self.bump();
            let rhs = self.implication()?;
            return Ok(lhs.implies(rhs));
        }
        Ok(lhs)
    }

    fn or(&mut self) -> Result<Ltl, LtlError> {
        let mut lhs = self.and()?;
        while self.peek().tok == Tok::Or {
            self.bump();
            lhs = lhs.or(self.and()?);
        }
        Ok(lhs)
    }

    fn and(&mut self) -> Result<Ltl, LtlError> {
        let mut lhs = self.until()?;
        while self.peek().tok == Tok::And {
            self.bump();
            lhs = lhs.and(self.until()?);
        }
        Ok(lhs)
    }

    fn until(&mut self) -> Result<Ltl, LtlError> {
        let lhs = self.unary()?;
        if self.is_name("U") {
            self.bump();
            return Ok(lhs.until(self.until()?));
        }
        Ok(lhs)
    }

    fn unary(&mut self) -> Result<Ltl, LtlError> {
        let t = self.peek().clone();
        match &t.tok {
            Tok::Not => {
                self.bump();
                Ok(self.unary()?.not())
            }
            Tok::Name(n) if !n.is_empty() && n.chars().all(|c| matches!(c, 'X' | 'F' | 'G')) => {
                self.bump();
                let mut f = self.unary()?;
                for op in n.chars().rev() {
                    f = match op {
                        'X' => f.next(),
                        'F' => f.eventually(),
                        _ => f.globally(),
                    };
                }
                Ok(f)
            }
            _ => self.primary(),
        }
    }

    fn primary(&mut self) -> Result<Ltl, LtlError> {
        let t = self.bump();
        match &t.tok {
            Tok::Name(n) if n == "true" => Ok(Ltl::True),
            Tok::Name(n) if n == "false" => Ok(Ltl::False),
            Tok::LParen => {
                let is_atom = matches!(self.peek().tok, Tok::Name(_)) && self.toks[self.pos + 1].tok == Tok::Comma;
                if is_atom {
                    return self.atom_body();
                }
                let f = self.implication()?;
                let close = self.bump();
                if close.tok != Tok::RParen {
                    return self.error(
                        &close,
                        format!("unbalanced parenthesis opened at {}:{}, found {}", t.line, t.col, describe(&close.tok)),
                    );
                }
                Ok(f)
            }
            Tok::End => self.error(&t, "dangling operator: expected a formula, found end of input".into()),
            other => self.error(&t, format!("expected a formula, found {}", describe(other))),
        }
    }

    fn atom_body(&mut self) -> Result<Ltl, LtlError> {
        let mode_tok = self.bump();
        let Tok::Name(mode) = mode_tok.tok.clone() else { unreachable!() };
        self.expect(Tok::Comma, "`,`")?;
        let label_tok = self.bump();
        let label = match &label_tok.tok {
            Tok::Star => None,
            Tok::Name(l) => Some(l.clone()),
            other => return self.error(&label_tok, format!("expected a guard label or `*`, found {}", describe(other))),
        };
        self.expect(Tok::RParen, "`)` closing the atom")?;
        if let Some(a) = self.alphabet {
            if !a.modes.contains(&mode) {
                return Err(LtlError::UnknownMode { name: mode, line: mode_tok.line, col: mode_tok.col });
            }
            if let Some(l) = &label {
                if !a.labels.contains(l) {
                    return Err(LtlError::UnknownLabel { name: l.clone(), line: label_tok.line, col: label_tok.col });
                }
            }
        }
        Ok(Ltl::Atom(Atom { mode, label }))
    }
}

fn parse(text: &str, alphabet: Option<&Alphabet>) -> Result<Ltl, LtlError> {
    let mut p = Parser { toks: lex(text)?, pos: 0, alphabet };
    let f = p.implication()?;
    let t = p.bump();
    match t.tok.clone() {
        Tok::End => Ok(f),
        Tok::RParen => p.error(&t, "unbalanced parenthesis: no matching `(`".into()),
        other => p.error(&t, format!("expected an operator or end of input, found {}", describe(&other))),
    }
}

/// Parses `text`, rejecting atoms outside `alphabet`.
pub fn parse_ltl(text: &str, alphabet: &Alphabet) -> Result<Ltl, LtlError> {
    parse(text, Some(alphabet))
}

/// Parses `text` without checking atom names.
pub fn parse_ltl_unchecked(text: &str) -> Result<Ltl, LtlError> {
    parse(text, None)
}
