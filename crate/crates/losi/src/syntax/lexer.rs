//! Tokenizer for the concrete process/global-type syntax.

use std::fmt;

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Tok {
    Ident(String),
    Int(i64),
    // punctuation
    LParen,
    RParen,
    LBracket,
    RBracket,
    LBrace,
    RBrace,
    Lt,
    Gt,
    Leq,
    Geq,
    Comma,
    Colon,
    Dot,
    Bang,
    Question,
    Eq,
    Plus,
    Minus,
    Star,
    Bar,
    DoubleBar,
    At,
    Arrow,      // ->
    FatArrow,   // =>
    Semi,
}

impl fmt::Display for Tok {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Tok::Ident(s) => write!(f, "{}", s),
            Tok::Int(n) => write!(f, "{}", n),
            Tok::LParen => write!(f, "("),
            Tok::RParen => write!(f, ")"),
            Tok::LBracket => write!(f, "["),
            Tok::RBracket => write!(f, "]"),
            Tok::LBrace => write!(f, "{{"),
            Tok::RBrace => write!(f, "}}"),
            Tok::Lt => write!(f, "<"),
            Tok::Gt => write!(f, ">"),
            Tok::Leq => write!(f, "<="),
            Tok::Geq => write!(f, ">="),
            Tok::Comma => write!(f, ","),
            Tok::Colon => write!(f, ":"),
            Tok::Dot => write!(f, "."),
            Tok::Bang => write!(f, "!"),
            Tok::Question => write!(f, "?"),
            Tok::Eq => write!(f, "="),
            Tok::Plus => write!(f, "+"),
            Tok::Minus => write!(f, "-"),
            Tok::Star => write!(f, "*"),
            Tok::Bar => write!(f, "|"),
            Tok::DoubleBar => write!(f, "||"),
            Tok::At => write!(f, "@"),
            Tok::Arrow => write!(f, "->"),
            Tok::FatArrow => write!(f, "=>"),
            Tok::Semi => write!(f, ";"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Pos {
    pub line: u32,
    pub col: u32,
}

impl fmt::Display for Pos {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.line, self.col)
    }
}

#[derive(Debug, Clone)]
pub struct Spanned {
    pub tok: Tok,
    pub pos: Pos,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("{pos}: {msg}")]
pub struct SyntaxError {
    pub pos: Pos,
    pub msg: String,
}

pub fn lex(text: &str) -> Result<Vec<Spanned>, SyntaxError> {
    let mut out = Vec::new();
    let mut line = 1u32;
    let mut col = 1u32;
    let mut chars = text.chars().peekable();
    macro_rules! push {
        ($tok:expr, $pos:expr) => {
            out.push(Spanned { tok: $tok, pos: $pos })
        };
    }
    while let Some(&c) = chars.peek() {
        let pos = Pos { line, col };
        let mut advance = |chars: &mut std::iter::Peekable<std::str::Chars>| {
            let c = chars.next().unwrap();
            if c == '\n' {
                line += 1;
                col = 1;
            } else {
                col += 1;
            }
            c
        };
        match c {
            ' ' | '\t' | '\r' | '\n' => {
                advance(&mut chars);
            }
            '/' => {
                advance(&mut chars);
                if chars.peek() == Some(&'/') {
                    while let Some(&c2) = chars.peek() {
                        if c2 == '\n' {
                            break;
                        }
                        advance(&mut chars);
                    }
                } else {
                    return Err(SyntaxError {
                        pos,
                        msg: "unexpected `/` (expected `//` comment)".into(),
                    });
                }
            }
            '(' => {
                advance(&mut chars);
                push!(Tok::LParen, pos);
            }
            ')' => {
                advance(&mut chars);
                push!(Tok::RParen, pos);
            }
            '[' => {
                advance(&mut chars);
                push!(Tok::LBracket, pos);
            }
            ']' => {
                advance(&mut chars);
                push!(Tok::RBracket, pos);
            }
            '{' => {
                advance(&mut chars);
                push!(Tok::LBrace, pos);
            }
            '}' => {
                advance(&mut chars);
                push!(Tok::RBrace, pos);
            }
            '<' => {
                advance(&mut chars);
                if chars.peek() == Some(&'=') {
                    advance(&mut chars);
                    push!(Tok::Leq, pos);
                } else {
                    push!(Tok::Lt, pos);
                }
            }
            '>' => {
                advance(&mut chars);
                if chars.peek() == Some(&'=') {
                    advance(&mut chars);
                    push!(Tok::Geq, pos);
                } else {
                    push!(Tok::Gt, pos);
                }
            }
            ',' => {
                advance(&mut chars);
                push!(Tok::Comma, pos);
            }
            ':' => {
                advance(&mut chars);
                push!(Tok::Colon, pos);
            }
            '.' => {
                advance(&mut chars);
                push!(Tok::Dot, pos);
            }
            '!' => {
                advance(&mut chars);
                push!(Tok::Bang, pos);
            }
            '?' => {
                advance(&mut chars);
                push!(Tok::Question, pos);
            }
            '=' => {
                advance(&mut chars);
                if chars.peek() == Some(&'>') {
                    advance(&mut chars);
                    push!(Tok::FatArrow, pos);
                } else {
                    push!(Tok::Eq, pos);
                }
            }
            '+' => {
                advance(&mut chars);
                push!(Tok::Plus, pos);
            }
            '-' => {
                advance(&mut chars);
                if chars.peek() == Some(&'>') {
                    advance(&mut chars);
                    push!(Tok::Arrow, pos);
                } else {
                    push!(Tok::Minus, pos);
                }
            }
            '*' => {
                advance(&mut chars);
                push!(Tok::Star, pos);
            }
            '|' => {
                advance(&mut chars);
                if chars.peek() == Some(&'|') {
                    advance(&mut chars);
                    push!(Tok::DoubleBar, pos);
                } else {
                    push!(Tok::Bar, pos);
                }
            }
            '@' => {
                advance(&mut chars);
                push!(Tok::At, pos);
            }
            ';' => {
                advance(&mut chars);
                push!(Tok::Semi, pos);
            }
            '0'..='9' => {
                let mut s = String::new();
                while let Some(&c2) = chars.peek() {
                    if c2.is_ascii_digit() {
                        s.push(advance(&mut chars));
                    } else {
                        break;
                    }
                }
                let n: i64 = s.parse().map_err(|_| SyntaxError {
                    pos,
                    msg: format!("integer literal `{}` out of range", s),
                })?;
                push!(Tok::Int(n), pos);
            }
            c2 if c2.is_alphabetic() || c2 == '_' => {
                let mut s = String::new();
                while let Some(&c3) = chars.peek() {
                    if c3.is_alphanumeric() || c3 == '_' || c3 == '\'' {
                        s.push(advance(&mut chars));
                    } else {
                        break;
                    }
                }
                push!(Tok::Ident(s), pos);
            }
            other => {
                return Err(SyntaxError {
                    pos,
                    msg: format!("unexpected character `{}`", other),
                });
            }
        }
    }
    Ok(out)
}
