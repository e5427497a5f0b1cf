//! Closed predicate expressions over attribute names.
//!
//! ```text
//! expr   := or
//! or     := and ( ("or" | "∨") and )*
//! and    := unary ( ("and" | "∧") unary )*
//! unary  := ("not" | "¬") unary | "(" expr ")" | "true" | "false" | cmp
//! cmp    := attr ("=" | "!=" | "≠") value | attr ("in" | "∈") "{" [value ("," value)*] "}"
//! value  := integer | decimal | "quoted" | true | false | @asset | bare-word
//! ```
//!
//! A missing attribute never equals anything: `=` and `in` are false and
//! `!=` is true, so every predicate is total.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};
use crate::value::{is_bare_word, Attributes, Value};

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Predicate {
    Const(bool),
    Eq(String, Value),
    Ne(String, Value),
    In(String, Vec<Value>),
    Not(Box<Predicate>),
    And(Box<Predicate>, Box<Predicate>),
    Or(Box<Predicate>, Box<Predicate>),
}

impl Predicate {
    pub const TRUE: Predicate = Predicate::Const(true);
    pub const FALSE: Predicate = Predicate::Const(false);

    pub fn eq(attr: impl Into<String>, value: impl Into<Value>) -> Self {
        Predicate::Eq(attr.into(), value.into())
    }

    pub fn ne(attr: impl Into<String>, value: impl Into<Value>) -> Self {
        Predicate::Ne(attr.into(), value.into())
    }

    pub fn one_of(attr: impl Into<String>, values: impl IntoIterator<Item = Value>) -> Self {
        Predicate::In(attr.into(), values.into_iter().collect())
    }

    #[allow(clippy::should_implement_trait)]
    pub fn not(self) -> Self {
        Predicate::Not(Box::new(self))
    }

    pub fn and(self, other: Predicate) -> Self {
        Predicate::And(Box::new(self), Box::new(other))
    }

    pub fn or(self, other: Predicate) -> Self {
        Predicate::Or(Box::new(self), Box::new(other))
    }

    pub fn eval<A: Attributes + ?Sized>(&self, subject: &A) -> bool {
        match self {
            Predicate::Const(b) => *b,
            Predicate::Eq(attr, v) => subject.attr(attr).is_some_and(|x| *x == *v),
            Predicate::Ne(attr, v) => subject.attr(attr).is_none_or(|x| *x != *v),
            Predicate::In(attr, vs) => subject.attr(attr).is_some_and(|x| vs.contains(&x)),
            Predicate::Not(p) => !p.eval(subject),
            Predicate::And(a, b) => a.eval(subject) && b.eval(subject),
            Predicate::Or(a, b) => a.eval(subject) || b.eval(subject),
        }
    }

    /// Attribute names the predicate reads.
    pub fn attributes(&self) -> Vec<&str> {
        let mut out = Vec::new();
        self.collect_attrs(&mut out);
        out.sort_unstable();
        out.dedup();
        out
    }

    fn collect_attrs<'a>(&'a self, out: &mut Vec<&'a str>) {
        match self {
            Predicate::Const(_) => {}
            Predicate::Eq(a, _) | Predicate::Ne(a, _) | Predicate::In(a, _) => out.push(a),
            Predicate::Not(p) => p.collect_attrs(out),
            Predicate::And(a, b) | Predicate::Or(a, b) => {
                a.collect_attrs(out);
                b.collect_attrs(out);
            }
        }
    }
}

fn attr_literal(name: &str) -> String {
    if is_bare_word(name) {
        name.to_owned()
    } else {
        Value::text(name).to_literal()
    }
}

impl fmt::Display for Predicate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fn operand(p: &Predicate, f: &mut fmt::Formatter<'_>) -> fmt::Result {
            match p {
                Predicate::And(..) | Predicate::Or(..) => write!(f, "({p})"),
                _ => write!(f, "{p}"),
            }
        }
        match self {
            Predicate::Const(b) => write!(f, "{b}"),
            Predicate::Eq(a, v) => write!(f, "{} = {}", attr_literal(a), v.to_literal()),
            Predicate::Ne(a, v) => write!(f, "{} != {}", attr_literal(a), v.to_literal()),
            Predicate::In(a, vs) => {
                write!(f, "{} in {{", attr_literal(a))?;
                for (i, v) in vs.iter().enumerate() {
                    if i > 0 {
                        f.write_str(", ")?;
                    }
                    f.write_str(&v.to_literal())?;
                }
                f.write_str("}")
            }
            Predicate::Not(p) => {
                f.write_str("not ")?;
                operand(p, f)
            }
            Predicate::And(a, b) => {
                operand(a, f)?;
                f.write_str(" and ")?;
                operand(b, f)
            }
            Predicate::Or(a, b) => {
                operand(a, f)?;
                f.write_str(" or ")?;
                operand(b, f)
            }
        }
    }
}

impl FromStr for Predicate {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let tokens = lex(s)?;
        let mut parser = Parser { tokens, pos: 0 };
        let p = parser.or()?;
        match parser.peek() {
            None => Ok(p),
            Some(t) => Err(Error::Parse(format!("unexpected {t:?} in predicate `{s}`"))),
        }
    }
}

impl Serialize for Predicate {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for Predicate {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

#[derive(Debug, Clone, PartialEq)]
enum Token {
    Word(String),
    Str(String),
    Int(i64),
    Dec(f64),
    At,
    Eq,
    Ne,
    In,
    And,
    Or,
    Not,
    LParen,
    RParen,
    LBrace,
    RBrace,
    Comma,
}

fn lex(src: &str) -> Result<Vec<Token>> {
    let mut out = Vec::new();
    let mut chars = src.char_indices().peekable();
    while let Some(&(i, c)) = chars.peek() {
        match c {
            c if c.is_whitespace() => {
                chars.next();
            }
            '(' | ')' | '{' | '}' | ',' | '@' | '=' | '≠' | '∈' | '∧' | '∨' | '¬' => {
                chars.next();
                out.push(match c {
                    '(' => Token::LParen,
                    ')' => Token::RParen,
                    '{' => Token::LBrace,
                    '}' => Token::RBrace,
                    ',' => Token::Comma,
                    '@' => Token::At,
                    '=' => Token::Eq,
                    '≠' => Token::Ne,
                    '∈' => Token::In,
                    '∧' => Token::And,
                    '∨' => Token::Or,
                    _ => Token::Not,
                });
            }
            '!' => {
                chars.next();
                match chars.next() {
                    Some((_, '=')) => out.push(Token::Ne),
                    _ => return Err(Error::Parse(format!("expected `!=` at offset {i}"))),
                }
            }
            '"' => {
                chars.next();
                let mut s = String::new();
                loop {
                    match chars.next() {
                        Some((_, '\\')) => match chars.next() {
                            Some((_, e)) => s.push(e),
                            None => return Err(Error::Parse("dangling escape".into())),
                        },
                        Some((_, '"')) => break,
                        Some((_, ch)) => s.push(ch),
                        None => return Err(Error::Parse("unterminated string".into())),
                    }
                }
                out.push(Token::Str(s));
            }
            c if c.is_ascii_digit() || c == '-' => {
                let start = i;
                chars.next();
                let mut end = start + c.len_utf8();
                let mut prev = c;
                while let Some(&(j, d)) = chars.peek() {
                    let exponent_sign = matches!(d, '+' | '-') && matches!(prev, 'e' | 'E');
                    if d.is_ascii_digit() || matches!(d, '.' | 'e' | 'E') || exponent_sign {
                        end = j + d.len_utf8();
                        prev = d;
                        chars.next();
                    } else {
                        break;
                    }
                }
                let text = &src[start..end];
                if let Ok(n) = text.parse::<i64>() {
                    out.push(Token::Int(n));
                } else if let Ok(x) = text.parse::<f64>() {
                    out.push(Token::Dec(x));
                } else {
                    return Err(Error::Parse(format!("bad number `{text}`")));
                }
            }
            c if c.is_alphabetic() || c == '_' => {
                let start = i;
                let mut end = i;
                while let Some(&(j, d)) = chars.peek() {
                    if d.is_alphanumeric() || matches!(d, '_' | '-' | '.' | ':') {
                        end = j + d.len_utf8();
                        chars.next();
                    } else {
                        break;
                    }
                }
                let word = &src[start..end];
                out.push(match word {
                    "and" => Token::And,
                    "or" => Token::Or,
                    "not" => Token::Not,
                    "in" => Token::In,
                    _ => Token::Word(word.to_owned()),
                });
            }
            other => return Err(Error::Parse(format!("unexpected character `{other}`"))),
        }
    }
    Ok(out)
}

struct Parser {
    tokens: Vec<Token>,
    pos: usize,
}

impl Parser {
    fn peek(&self) -> Option<&Token> {
        self.tokens.get(self.pos)
    }

    fn next(&mut self) -> Option<Token> {
        let t = self.tokens.get(self.pos).cloned();
        self.pos += 1;
        t
    }

    fn expect(&mut self, want: Token) -> Result<()> {
        match self.next() {
            Some(t) if t == want => Ok(()),
            other => Err(Error::Parse(format!("expected {want:?}, found {other:?}"))),
        }
    }

    fn or(&mut self) -> Result<Predicate> {
        let mut lhs = self.and()?;
        while self.peek() == Some(&Token::Or) {
            self.pos += 1;
            lhs = lhs.or(self.and()?);
        }
        Ok(lhs)
    }

    fn and(&mut self) -> Result<Predicate> {
        let mut lhs = self.unary()?;
        while self.peek() == Some(&Token::And) {
            self.pos += 1;
            lhs = lhs.and(self.unary()?);
        }
        Ok(lhs)
    }

    fn unary(&mut self) -> Result<Predicate> {
        match self.next() {
            Some(Token::Not) => Ok(self.unary()?.not()),
            Some(Token::LParen) => {
                let p = self.or()?;
                self.expect(Token::RParen)?;
                Ok(p)
            }
            Some(Token::Word(w)) if w == "true" => Ok(Predicate::TRUE),
            Some(Token::Word(w)) if w == "false" => Ok(Predicate::FALSE),
            Some(Token::Word(attr)) | Some(Token::Str(attr)) => self.comparison(attr),
            other => Err(Error::Parse(format!(
                "expected a predicate, found {other:?}"
            ))),
        }
    }

    fn comparison(&mut self, attr: String) -> Result<Predicate> {
        match self.next() {
            Some(Token::Eq) => Ok(Predicate::Eq(attr, self.value()?)),
            Some(Token::Ne) => Ok(Predicate::Ne(attr, self.value()?)),
            Some(Token::In) => {
                self.expect(Token::LBrace)?;
                let mut values = Vec::new();
                if self.peek() == Some(&Token::RBrace) {
                    self.pos += 1;
                    return Ok(Predicate::In(attr, values));
                }
                loop {
                    values.push(self.value()?);
                    match self.next() {
                        Some(Token::Comma) => continue,
                        Some(Token::RBrace) => break,
                        other => {
                            return Err(Error::Parse(format!(
                                "expected `,` or `}}`, found {other:?}"
                            )))
                        }
                    }
                }
                Ok(Predicate::In(attr, values))
            }
            other => Err(Error::Parse(format!(
                "expected `=`, `!=` or `in` after `{attr}`, found {other:?}"
            ))),
        }
    }

    fn value(&mut self) -> Result<Value> {
        match self.next() {
            Some(Token::Int(i)) => Ok(Value::Int(i)),
            Some(Token::Dec(x)) => Ok(Value::decimal(x)),
            Some(Token::Str(s)) => Ok(Value::Text(s)),
            Some(Token::Word(w)) => Ok(match w.as_str() {
                "true" => Value::Bool(true),
                "false" => Value::Bool(false),
                _ => Value::Text(w),
            }),
            Some(Token::At) => match self.next() {
                Some(Token::Word(w)) | Some(Token::Str(w)) => Ok(Value::asset(w)),
                other => Err(Error::Parse(format!(
                    "expected asset id after `@`, found {other:?}"
                ))),
            },
            other => Err(Error::Parse(format!("expected a value, found {other:?}"))),
        }
    }
}
