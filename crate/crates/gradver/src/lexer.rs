//! Hand-rolled lexer producing a flat token stream with spans.

use crate::span::Span;
use std::fmt;
use thiserror::Error;

#[derive(Debug, Clone, PartialEq)]
pub enum Tok {
    Ident(String),
    Int(i64),
    Char(char),
    // keywords
    Struct,
    Predicate,
    Requires,
    Ensures,
    Invariant,
    If,
    Else,
    While,
    Assert,
    Fold,
    Unfold,
    Alloc,
    Acc,
    True,
    False,
    Null,
    // punctuation
    LBrace,
    RBrace,
    LParen,
    RParen,
    Semi,
    Comma,
    Dot,
    Assign,
    Question,
    Colon,
    Star,
    Slash,
    Plus,
    Minus,
    Not,
    AndAnd,
    OrOr,
    EqEq,
    NotEq,
    Lt,
    Le,
    Gt,
    Ge,
    Eof,
}

impl fmt::Display for Tok {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Tok::Ident(s) => write!(f, "identifier `{}`", s),
            Tok::Int(n) => write!(f, "integer `{}`", n),
            Tok::Char(c) => write!(f, "char literal '{}'", c),
            Tok::Eof => write!(f, "end of input"),
            other => write!(f, "`{}`", token_text(other)),
        }
    }
}

fn token_text(t: &Tok) -> &'static str {
    match t {
        Tok::Struct => "struct",
        Tok::Predicate => "predicate",
        Tok::Requires => "requires",
        Tok::Ensures => "ensures",
        Tok::Invariant => "invariant",
        Tok::If => "if",
        Tok::Else => "else",
        Tok::While => "while",
        Tok::Assert => "assert",
        Tok::Fold => "fold",
        Tok::Unfold => "unfold",
        Tok::Alloc => "alloc",
        Tok::Acc => "acc",
        Tok::True => "true",
        Tok::False => "false",
        Tok::Null => "NULL",
        Tok::LBrace => "{",
        Tok::RBrace => "}",
        Tok::LParen => "(",
        Tok::RParen => ")",
        Tok::Semi => ";",
        Tok::Comma => ",",
        Tok::Dot => ".",
        Tok::Assign => "=",
        Tok::Question => "?",
        Tok::Colon => ":",
        Tok::Star => "*",
        Tok::Slash => "/",
        Tok::Plus => "+",
        Tok::Minus => "-",
        Tok::Not => "!",
        Tok::AndAnd => "&&",
        Tok::OrOr => "||",
        Tok::EqEq => "==",
        Tok::NotEq => "!=",
        Tok::Lt => "<",
        Tok::Le => "<=",
        Tok::Gt => ">",
        Tok::Ge => ">=",
        _ => "?",
    }
}

#[derive(Debug, Error)]
#[error("{line}:{col}: {msg}")]
pub struct LexError {
    pub line: u32,
    pub col: u32,
    pub msg: String,
}

pub struct Token {
    pub tok: Tok,
    pub span: Span,
}

pub fn lex(src: &str) -> Result<Vec<Token>, LexError> {
    let bytes = src.as_bytes();
    let mut toks = Vec::new();
    let mut i = 0usize;
    let mut line = 1u32;
    let mut col = 1u32;

    macro_rules! err {
        ($($arg:tt)*) => {
            return Err(LexError { line, col, msg: format!($($arg)*) })
        };
    }

    while i < bytes.len() {
        let c = bytes[i] as char;
        let start = i;
        let (sl, sc) = (line, col);
        let advance = |n: usize, i: &mut usize, line: &mut u32, col: &mut u32| {
            for k in 0..n {
                if bytes[*i + k] == b'\n' {
                    *line += 1;
                    *col = 1;
                } else {
                    *col += 1;
                }
            }
            *i += n;
        };
        match c {
            ' ' | '\t' | '\r' | '\n' => {
                advance(1, &mut i, &mut line, &mut col);
                continue;
            }
            '/' if i + 1 < bytes.len() && bytes[i + 1] == b'/' => {
                while i < bytes.len() && bytes[i] != b'\n' {
                    advance(1, &mut i, &mut line, &mut col);
                }
                continue;
            }
            '/' if i + 1 < bytes.len() && bytes[i + 1] == b'*' => {
                advance(2, &mut i, &mut line, &mut col);
                loop {
                    if i + 1 >= bytes.len() {
                        err!("unterminated block comment");
                    }
                    if bytes[i] == b'*' && bytes[i + 1] == b'/' {
                        advance(2, &mut i, &mut line, &mut col);
                        break;
                    }
                    advance(1, &mut i, &mut line, &mut col);
                }
                continue;
            }
            'a'..='z' | 'A'..='Z' | '_' => {
                let mut j = i;
                while j < bytes.len()
                    && matches!(bytes[j] as char, 'a'..='z' | 'A'..='Z' | '0'..='9' | '_')
                {
                    j += 1;
                }
                let word = &src[i..j];
                let tok = match word {
                    "struct" => Tok::Struct,
                    "predicate" => Tok::Predicate,
                    "requires" => Tok::Requires,
                    "ensures" => Tok::Ensures,
                    "invariant" => Tok::Invariant,
                    "if" => Tok::If,
                    "else" => Tok::Else,
                    "while" => Tok::While,
                    "assert" => Tok::Assert,
                    "fold" => Tok::Fold,
                    "unfold" => Tok::Unfold,
                    "alloc" => Tok::Alloc,
                    "acc" => Tok::Acc,
                    "true" => Tok::True,
                    "false" => Tok::False,
                    "NULL" | "null" => Tok::Null,
                    _ => Tok::Ident(word.to_string()),
                };
                advance(j - i, &mut i, &mut line, &mut col);
                toks.push(Token { tok, span: Span::new(start, j, sl, sc) });
                continue;
            }
            '0'..='9' => {
                let mut j = i;
                while j < bytes.len() && bytes[j].is_ascii_digit() {
                    j += 1;
                }
                let n: i64 = match src[i..j].parse() {
                    Ok(n) => n,
                    Err(_) => err!("integer literal out of range"),
                };
                advance(j - i, &mut i, &mut line, &mut col);
                toks.push(Token { tok: Tok::Int(n), span: Span::new(start, j, sl, sc) });
                continue;
            }
            '\'' => {
                // char literal: 'x' or escapes \n \t \0 \\ \'
                if i + 2 >= bytes.len() {
                    err!("unterminated char literal");
                }
                let (ch, len) = if bytes[i + 1] == b'\\' {
                    if i + 3 >= bytes.len() {
                        err!("unterminated char literal");
                    }
                    let ch = match bytes[i + 2] as char {
                        'n' => '\n',
                        't' => '\t',
                        '0' => '\0',
                        '\\' => '\\',
                        '\'' => '\'',
                        other => err!("unknown escape '\\{}'", other),
                    };
                    (ch, 4)
                } else {
                    (bytes[i + 1] as char, 3)
                };
                if bytes[i + len - 1] != b'\'' {
                    err!("unterminated char literal");
                }
                advance(len, &mut i, &mut line, &mut col);
                toks.push(Token { tok: Tok::Char(ch), span: Span::new(start, start + len, sl, sc) });
                continue;
            }
            _ => {}
        }
        // punctuation
        let two = if i + 1 < bytes.len() { &src[i..i + 2] } else { "" };
        let (tok, len) = match two {
            "&&" => (Tok::AndAnd, 2),
            "||" => (Tok::OrOr, 2),
            "==" => (Tok::EqEq, 2),
            "!=" => (Tok::NotEq, 2),
            "<=" => (Tok::Le, 2),
            ">=" => (Tok::Ge, 2),
            _ => match c {
                '{' => (Tok::LBrace, 1),
                '}' => (Tok::RBrace, 1),
                '(' => (Tok::LParen, 1),
                ')' => (Tok::RParen, 1),
                ';' => (Tok::Semi, 1),
                ',' => (Tok::Comma, 1),
                '.' => (Tok::Dot, 1),
                '=' => (Tok::Assign, 1),
                '?' => (Tok::Question, 1),
                ':' => (Tok::Colon, 1),
                '*' => (Tok::Star, 1),
                '/' => (Tok::Slash, 1),
                '+' => (Tok::Plus, 1),
                '-' => (Tok::Minus, 1),
                '!' => (Tok::Not, 1),
                '<' => (Tok::Lt, 1),
                '>' => (Tok::Gt, 1),
                other => err!("unexpected character '{}'", other),
            },
        };
        advance(len, &mut i, &mut line, &mut col);
        toks.push(Token { tok, span: Span::new(start, start + len, sl, sc) });
    }
    toks.push(Token { tok: Tok::Eof, span: Span::new(src.len(), src.len(), line, col) });
    Ok(toks)
}
