// SPDX-License-Identifier: Apache-2.0

//! S-expression reader with source positions.
//!
//! Accepts `(` `)` and `[` `]` as matched list delimiters, `'x` as shorthand
//! for `(quote x)`, integers, `#t`/`#f`, and identifiers. Comments run from
//! `;` to end of line.

use std::fmt;

use thiserror::Error;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Pos {
    pub line: u32,
    pub col: u32,
}

impl Pos {
    pub const START: Pos = Pos { line: 1, col: 1 };
}

impl fmt::Display for Pos {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.line, self.col)
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum SExprKind {
    Ident(String),
    Int(i64),
    Bool(bool),
    List(Vec<SExpr>),
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SExpr {
    pub kind: SExprKind,
    pub pos: Pos,
}

impl SExpr {
    pub fn ident(&self) -> Option<&str> {
        match &self.kind {
            SExprKind::Ident(s) => Some(s),
            _ => None,
        }
    }

    pub fn list(&self) -> Option<&[SExpr]> {
        match &self.kind {
            SExprKind::List(items) => Some(items),
            _ => None,
        }
    }
}

impl fmt::Display for SExpr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.kind {
            SExprKind::Ident(s) => f.write_str(s),
            SExprKind::Int(n) => write!(f, "{n}"),
            SExprKind::Bool(true) => f.write_str("#t"),
            SExprKind::Bool(false) => f.write_str("#f"),
            SExprKind::List(items) => {
                f.write_str("(")?;
                for (i, item) in items.iter().enumerate() {
                    if i > 0 {
                        f.write_str(" ")?;
                    }
                    write!(f, "{item}")?;
                }
                f.write_str(")")
            }
        }
    }
}

#[derive(Clone, Debug, Error, PartialEq, Eq)]
#[error("{pos}: {message}")]
pub struct ParseError {
    pub pos: Pos,
    pub message: String,
}

fn is_delimiter(c: char) -> bool {
    c.is_whitespace() || matches!(c, '(' | ')' | '[' | ']' | ';' | '\'' | '"')
}

struct Reader<'a> {
    chars: std::iter::Peekable<std::str::Chars<'a>>,
    pos: Pos,
}

impl<'a> Reader<'a> {
    fn new(text: &'a str) -> Self {
        Reader {
            chars: text.chars().peekable(),
            pos: Pos::START,
        }
    }

    fn bump(&mut self) -> Option<char> {
        let c = self.chars.next()?;
        if c == '\n' {
            self.pos.line += 1;
            self.pos.col = 1;
        } else {
            self.pos.col += 1;
        }
        Some(c)
    }

    fn skip_trivia(&mut self) {
        while let Some(&c) = self.chars.peek() {
            if c == ';' {
                while let Some(c) = self.bump() {
                    if c == '\n' {
                        break;
                    }
                }
            } else if c.is_whitespace() {
                self.bump();
            } else {
                break;
            }
        }
    }

    fn error(&self, pos: Pos, message: impl Into<String>) -> ParseError {
        ParseError {
            pos,
            message: message.into(),
        }
    }

    fn read(&mut self) -> Result<Option<SExpr>, ParseError> {
        self.skip_trivia();
        let start = self.pos;
        let Some(&c) = self.chars.peek() else {
            return Ok(None);
        };
        match c {
            '(' | '[' => {
                self.bump();
                let close = if c == '(' { ')' } else { ']' };
                let mut items = Vec::new();
                loop {
                    self.skip_trivia();
                    match self.chars.peek() {
                        None => {
                            return Err(self.error(start, format!("unclosed '{c}'")));
                        }
                        Some(&d) if d == close => {
                            self.bump();
                            break;
                        }
                        Some(&d @ (')' | ']')) => {
                            return Err(self.error(
                                self.pos,
                                format!("mismatched '{d}', expected '{close}'"),
                            ));
                        }
                        Some(_) => {
                            // Cannot be None: a non-delimiter char is present.
                            if let Some(item) = self.read()? {
                                items.push(item);
                            }
                        }
                    }
                }
                Ok(Some(SExpr {
                    kind: SExprKind::List(items),
                    pos: start,
                }))
            }
            ')' | ']' => Err(self.error(start, format!("unexpected '{c}'"))),
            '\'' => {
                self.bump();
                let Some(datum) = self.read()? else {
                    return Err(self.error(start, "quote at end of input"));
                };
                Ok(Some(SExpr {
                    kind: SExprKind::List(vec![
                        SExpr {
                            kind: SExprKind::Ident("quote".into()),
                            pos: start,
                        },
                        datum,
                    ]),
                    pos: start,
                }))
            }
            '"' => Err(self.error(start, "string literals are not supported")),
            _ => {
                let mut token = String::new();
                while let Some(&d) = self.chars.peek() {
                    if is_delimiter(d) {
                        break;
                    }
                    token.push(d);
                    self.bump();
                }
                self.atom(token, start).map(Some)
            }
        }
    }

    fn atom(&self, token: String, pos: Pos) -> Result<SExpr, ParseError> {
        let kind = if let Some(rest) = token.strip_prefix('#') {
            match rest {
                "t" | "true" => SExprKind::Bool(true),
                "f" | "false" => SExprKind::Bool(false),
                _ => return Err(self.error(pos, format!("illegal token '{token}'"))),
            }
        } else if looks_numeric(&token) {
            match token.parse::<i64>() {
                Ok(n) => SExprKind::Int(n),
                Err(_) => return Err(self.error(pos, format!("illegal number '{token}'"))),
            }
        } else {
            SExprKind::Ident(token)
        };
        Ok(SExpr { kind, pos })
    }
}

fn looks_numeric(token: &str) -> bool {
    let digits = token
        .strip_prefix('-')
        .or_else(|| token.strip_prefix('+'))
        .unwrap_or(token);
    digits.chars().next().is_some_and(|c| c.is_ascii_digit())
}

/// Reads every top-level form in `text`.
pub fn read_sexprs(text: &str) -> Result<Vec<SExpr>, ParseError> {
    let mut reader = Reader::new(text);
    let mut forms = Vec::new();
    while let Some(form) = reader.read()? {
        forms.push(form);
    }
    Ok(forms)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn show(text: &str) -> Vec<String> {
        read_sexprs(text)
            .unwrap()
            .iter()
            .map(|s| s.to_string())
            .collect()
    }

    #[test]
    fn atoms_and_lists() {
        assert_eq!(
            read_sexprs("42").unwrap()[0].kind,
            SExprKind::Int(42)
        );
        assert_eq!(show("(f #t)"), vec!["(f #t)"]);
        assert_eq!(show("((lambda (x) x) 1)"), vec!["((lambda (x) x) 1)"]);
        assert_eq!(show("-7 - +3 x~1"), vec!["-7", "-", "3", "x~1"]);
    }

    #[test]
    fn brackets_comments_and_quote() {
        assert_eq!(
            show("(let ([f 1]) ; comment\n f)"),
            vec!["(let ((f 1)) f)"]
        );
        assert_eq!(show("'(a b)"), vec!["(quote (a b))"]);
    }

    #[test]
    fn positions_track_lines() {
        let forms = read_sexprs("\n  (a\n   b)").unwrap();
        assert_eq!(forms[0].pos, Pos { line: 2, col: 3 });
        let items = forms[0].list().unwrap();
        assert_eq!(items[1].pos, Pos { line: 3, col: 4 });
    }

    #[test]
    fn errors_carry_positions() {
        let err = read_sexprs("(a (b)").unwrap_err();
        assert_eq!(err.pos, Pos { line: 1, col: 1 });
        let err = read_sexprs("(a))").unwrap_err();
        assert_eq!(err.pos, Pos { line: 1, col: 4 });
        let err = read_sexprs("(a ]").unwrap_err();
        assert!(err.message.contains("mismatched"));
        assert!(read_sexprs("#x").is_err());
        assert!(read_sexprs("\"s\"").is_err());
        assert!(read_sexprs("99999999999999999999").is_err());
    }
}
