//! Tokenizer for program text and expressions.

use std::fmt;

use thiserror::Error;

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Tok {
    Ident(String),
    Str(String),
    Int(u32),
    LBrace,
    RBrace,
    LParen,
    RParen,
    LBrack,
    RBrack,
    Dollar,
    Slash,
    DSlash,
    Star,
    Dot,
    Eq,
    Plus,
    Minus,
    Pipe,
    ColonColon,
    Eof,
}

impl fmt::Display for Tok {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Tok::Ident(s) => write!(f, "{s}"),
            Tok::Str(s) => write!(f, "'{s}'"),
            Tok::Int(n) => write!(f, "{n}"),
            Tok::LBrace => f.write_str("{"),
            Tok::RBrace => f.write_str("}"),
            Tok::LParen => f.write_str("("),
            Tok::RParen => f.write_str(")"),
            Tok::LBrack => f.write_str("["),
            Tok::RBrack => f.write_str("]"),
            Tok::Dollar => f.write_str("$"),
            Tok::Slash => f.write_str("/"),
            Tok::DSlash => f.write_str("//"),
            Tok::Star => f.write_str("*"),
            Tok::Dot => f.write_str("."),
            Tok::Eq => f.write_str("="),
            Tok::Plus => f.write_str("+"),
            Tok::Minus => f.write_str("-"),
            Tok::Pipe => f.write_str("|"),
            Tok::ColonColon => f.write_str("::"),
            Tok::Eof => f.write_str("end of input"),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub struct Pos {
    pub line: usize,
    pub col: usize,
}

impl fmt::Display for Pos {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.line, self.col)
    }
}

#[derive(Debug, Error, PartialEq, Eq)]
#[error("{pos}: {message}")]
pub struct SyntaxError {
    pub pos: Pos,
    pub message: String,
}

impl SyntaxError {
    pub fn new(pos: Pos, message: impl Into<String>) -> Self {
        SyntaxError { pos, message: message.into() }
    }
}

pub fn tokenize(src: &str) -> Result<Vec<(Tok, Pos)>, SyntaxError> {
    let chars: Vec<char> = src.chars().collect();
    let mut out = Vec::new();
    let (mut i, mut line, mut col) = (0usize, 1usize, 1usize);
    macro_rules! bump {
        () => {{
            if chars[i] == '\n' {
                line += 1;
                col = 1;
            } else {
                col += 1;
            }
            i += 1;
        }};
    }
    while i < chars.len() {
        let c = chars[i];
        let pos = Pos { line, col };
        if c.is_whitespace() {
            bump!();
            continue;
        }
        if c == '#' {
            while i < chars.len() && chars[i] != '\n' {
                bump!();
            }
            continue;
        }
        if c.is_ascii_alphabetic() || c == '_' {
            let start = i;
            while i < chars.len() && (chars[i].is_ascii_alphanumeric() || chars[i] == '_') {
                bump!();
            }
            let mut word: String = chars[start..i].iter().collect();
            if word == "following" || word == "preceding" {
                let suffix: Vec<char> = "-sibling".chars().collect();
                if chars[i..].starts_with(&suffix) {
                    for _ in 0..suffix.len() {
                        bump!();
                    }
                    word.push_str("-sibling");
                }
            }
            out.push((Tok::Ident(word), pos));
            continue;
        }
        if c.is_ascii_digit() {
            let start = i;
            while i < chars.len() && chars[i].is_ascii_digit() {
                bump!();
            }
            let text: String = chars[start..i].iter().collect();
            let n = text.parse().map_err(|_| SyntaxError::new(pos, format!("integer `{text}` too large")))?;
            out.push((Tok::Int(n), pos));
            continue;
        }
        if c == '\'' {
            bump!();
            let start = i;
            while i < chars.len() && chars[i] != '\'' {
                bump!();
            }
            if i == chars.len() {
                return Err(SyntaxError::new(pos, "unterminated string literal"));
            }
            let text: String = chars[start..i].iter().collect();
            bump!();
            out.push((Tok::Str(text), pos));
            continue;
        }
        let next = chars.get(i + 1).copied();
        let tok = match (c, next) {
            ('/', Some('/')) => {
                bump!();
                Tok::DSlash
            }
            (':', Some(':')) => {
                bump!();
                Tok::ColonColon
            }
            ('{', _) => Tok::LBrace,
            ('}', _) => Tok::RBrace,
            ('(', _) => Tok::LParen,
            (')', _) => Tok::RParen,
            ('[', _) => Tok::LBrack,
            (']', _) => Tok::RBrack,
            ('$', _) => Tok::Dollar,
            ('/', _) => Tok::Slash,
            ('*', _) => Tok::Star,
            ('.', _) => Tok::Dot,
            ('=', _) => Tok::Eq,
            ('+', _) => Tok::Plus,
            ('-', _) => Tok::Minus,
            ('|', _) => Tok::Pipe,
            _ => return Err(SyntaxError::new(pos, format!("unexpected character `{c}`"))),
        };
        bump!();
        out.push((tok, pos));
    }
    out.push((Tok::Eof, Pos { line, col }));
    Ok(out)
}

/// Cursor over a token stream.
pub struct Tokens {
    toks: Vec<(Tok, Pos)>,
    at: usize,
}

impl Tokens {
    pub fn new(src: &str) -> Result<Self, SyntaxError> {
        Ok(Tokens { toks: tokenize(src)?, at: 0 })
    }

    pub fn peek(&self) -> &Tok {
        &self.toks[self.at].0
    }

    pub fn peek_at(&self, k: usize) -> &Tok {
        let i = (self.at + k).min(self.toks.len() - 1);
        &self.toks[i].0
    }

    pub fn pos(&self) -> Pos {
        self.toks[self.at].1
    }

    pub fn bump(&mut self) -> Tok {
        let t = self.toks[self.at].0.clone();
        if self.at + 1 < self.toks.len() {
            self.at += 1;
        }
        t
    }

    pub fn at_eof(&self) -> bool {
        matches!(self.peek(), Tok::Eof)
    }

    pub fn eat(&mut self, t: &Tok) -> bool {
        if self.peek() == t {
            self.bump();
            true
        } else {
            false
        }
    }

    pub fn is_keyword(&self, kw: &str) -> bool {
        matches!(self.peek(), Tok::Ident(s) if s == kw)
    }

    pub fn expect(&mut self, t: &Tok) -> Result<(), SyntaxError> {
        if self.eat(t) {
            Ok(())
        } else {
            Err(self.unexpected(&format!("`{t}`")))
        }
    }

    pub fn expect_keyword(&mut self, kw: &str) -> Result<(), SyntaxError> {
        if self.is_keyword(kw) {
            self.bump();
            Ok(())
        } else {
            Err(self.unexpected(&format!("`{kw}`")))
        }
    }

    pub fn ident(&mut self, what: &str) -> Result<String, SyntaxError> {
        match self.peek().clone() {
            Tok::Ident(s) => {
                self.bump();
                Ok(s)
            }
            _ => Err(self.unexpected(what)),
        }
    }

    pub fn unexpected(&self, expected: &str) -> SyntaxError {
        SyntaxError::new(self.pos(), format!("expected {expected}, found {}", self.peek()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sibling_axes_are_single_tokens() {
        let toks: Vec<Tok> = tokenize("following-sibling::*[1] $x-1").unwrap().into_iter().map(|t| t.0).collect();
        assert_eq!(
            toks,
            vec![
                Tok::Ident("following-sibling".into()),
                Tok::ColonColon,
                Tok::Star,
                Tok::LBrack,
                Tok::Int(1),
                Tok::RBrack,
                Tok::Dollar,
                Tok::Ident("x".into()),
                Tok::Minus,
                Tok::Int(1),
                Tok::Eof
            ]
        );
    }

    #[test]
    fn comments_and_positions() {
        let toks = tokenize("# hi\n  //* 'a'").unwrap();
        assert_eq!(toks[0], (Tok::DSlash, Pos { line: 2, col: 3 }));
        assert_eq!(toks[2].0, Tok::Str("a".into()));
        assert!(tokenize("'abc").is_err());
        assert!(tokenize("a ; b").is_err());
    }
}
