//! Evaluator for application chains such as `F({higraph,mmedia})({corporate})`.
//!
//! ```text
//! expr  := NAME group*
//! group := "(" items ")"
//! items := atom | "{" atom ("," atom)* "}"
//! atom  := identifier
//! ```
//!
//! Groups apply left to right. A head naming a profile functional prints
//! the narrowed user set; a head naming a generalized value prints its atom
//! or the narrowed case table.

use std::collections::BTreeSet;
use std::fmt;

use crate::calculus::Evaluand;
use crate::engine::Portal;
use crate::error::{Error, Result};
use crate::ids::{Point, UserId};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ReplExpression {
    pub head: String,
    pub applications: Vec<BTreeSet<Point>>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ReplOutput {
    Users(Vec<UserId>),
    Value(Evaluand),
}

impl fmt::Display for ReplOutput {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ReplOutput::Users(users) => {
                let names: Vec<&str> = users.iter().map(|u| u.as_str()).collect();
                write!(f, "{{{}}}", names.join(", "))
            }
            ReplOutput::Value(v) => write!(f, "{v}"),
        }
    }
}

fn is_ident_start(c: char) -> bool {
    c.is_alphabetic() || c == '_'
}

fn is_ident_char(c: char) -> bool {
    c.is_alphanumeric() || matches!(c, '_' | '-' | '.')
}

struct Parser<'a> {
    src: &'a str,
    pos: usize,
}

impl<'a> Parser<'a> {
    fn peek(&mut self) -> Option<char> {
        self.skip_ws();
        self.src[self.pos..].chars().next()
    }

    fn skip_ws(&mut self) {
        let rest = &self.src[self.pos..];
        self.pos += rest.len() - rest.trim_start().len();
    }

    fn expect(&mut self, c: char) -> Result<()> {
        match self.peek() {
            Some(x) if x == c => {
                self.pos += c.len_utf8();
                Ok(())
            }
            Some(x) => Err(self.error(&format!("expected `{c}`, found `{x}`"))),
            None => Err(self.error(&format!("expected `{c}`, found end of input"))),
        }
    }

    fn error(&self, msg: &str) -> Error {
        Error::Parse(format!("{msg} at offset {}", self.pos))
    }

    fn ident(&mut self) -> Result<&'a str> {
        match self.peek() {
            Some(c) if is_ident_start(c) => {}
            _ => return Err(self.error("expected an identifier")),
        }
        let start = self.pos;
        let len = self.src[start..]
            .char_indices()
            .find(|&(_, c)| !is_ident_char(c))
            .map(|(i, _)| i)
            .unwrap_or(self.src.len() - start);
        self.pos += len;
        Ok(&self.src[start..start + len])
    }

    fn group(&mut self) -> Result<BTreeSet<Point>> {
        self.expect('(')?;
        let mut points = BTreeSet::new();
        if self.peek() == Some('{') {
            self.expect('{')?;
            points.insert(Point::from(self.ident()?));
            while self.peek() == Some(',') {
                self.expect(',')?;
                points.insert(Point::from(self.ident()?));
            }
            self.expect('}')?;
        } else {
            points.insert(Point::from(self.ident()?));
        }
        self.expect(')')?;
        Ok(points)
    }
}

impl std::str::FromStr for ReplExpression {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let mut p = Parser { src: s, pos: 0 };
        let head = p.ident()?.to_owned();
        let mut applications = Vec::new();
        while p.peek().is_some() {
            applications.push(p.group()?);
        }
        Ok(ReplExpression { head, applications })
    }
}

impl fmt::Display for ReplExpression {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.head)?;
        for group in &self.applications {
            let names: Vec<&str> = group.iter().map(|p| p.as_str()).collect();
            write!(f, "({{{}}})", names.join(","))?;
        }
        Ok(())
    }
}

pub fn eval(portal: &Portal, expr: &ReplExpression) -> Result<ReplOutput> {
    let access = portal.access();
    if access.functional(&expr.head).is_ok() {
        return portal
            .evaluate_profile(&expr.head, &expr.applications)
            .map(ReplOutput::Users);
    }
    if portal.values().contains(&expr.head) {
        return portal
            .evaluate_value(&expr.head, &expr.applications)
            .map(ReplOutput::Value);
    }
    Err(Error::UnknownName(expr.head.clone()))
}

/// Parses and evaluates one line.
pub fn eval_str(portal: &Portal, line: &str) -> Result<ReplOutput> {
    eval(portal, &line.parse()?)
}
