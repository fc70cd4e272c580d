//! Tokenizer for spec files and assertion fragments.

use crate::error::QhlError;

#[derive(Debug, Clone, PartialEq)]
pub enum Tok {
    Ident(String),
    Int(i64),
    Real(f64),
    /// Double-quoted string (mask patterns, bitstrings).
    Str(String),
    LBrace,
    RBrace,
    LBracket,
    RBracket,
    LParen,
    RParen,
    Comma,
    Semi,
    Colon,
    Dot,
    At,
    Dollar,
    Bang,
    AndAnd,
    OrOr,
    Plus,
    Minus,
    Star,
    Arrow,     // ->
    LeftArrow, // <-
    RandArrow, // <-$
    MeasArrow, // <<=
    FatArrow,  // =>
    ImplArrow, // ->, reused
    Eq,
    Ne,
    Lt,
    Le,
    Gt,
    Ge,
}

impl Tok {
    pub fn describe(&self) -> String {
        match self {
            Tok::Ident(s) => format!("identifier `{s}`"),
            Tok::Int(n) => format!("integer `{n}`"),
            Tok::Real(r) => format!("number `{r}`"),
            Tok::Str(s) => format!("string {s:?}"),
            Tok::LBrace => "`{`".into(),
            Tok::RBrace => "`}`".into(),
            Tok::LBracket => "`[`".into(),
            Tok::RBracket => "`]`".into(),
            Tok::LParen => "`(`".into(),
            Tok::RParen => "`)`".into(),
            Tok::Comma => "`,`".into(),
            Tok::Semi => "`;`".into(),
            Tok::Colon => "`:`".into(),
            Tok::Dot => "`.`".into(),
            Tok::At => "`@`".into(),
            Tok::Dollar => "`$`".into(),
            Tok::Bang => "`!`".into(),
            Tok::AndAnd => "`&&`".into(),
            Tok::OrOr => "`||`".into(),
            Tok::Plus => "`+`".into(),
            Tok::Minus => "`-`".into(),
            Tok::Star => "`*`".into(),
            Tok::Arrow | Tok::ImplArrow => "`->`".into(),
            Tok::LeftArrow => "`<-`".into(),
            Tok::RandArrow => "`<-$`".into(),
            Tok::MeasArrow => "`<<=`".into(),
            Tok::FatArrow => "`=>`".into(),
            Tok::Eq => "`=`".into(),
            Tok::Ne => "`!=`".into(),
            Tok::Lt => "`<`".into(),
            Tok::Le => "`<=`".into(),
            Tok::Gt => "`>`".into(),
            Tok::Ge => "`>=`".into(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Pos {
    pub line: usize,
    pub col: usize,
}

pub fn lex(src: &str) -> Result<Vec<(Tok, Pos)>, QhlError> {
    let bytes = src.as_bytes();
    let mut toks = Vec::new();
    let mut i = 0;
    let mut line = 1;
    let mut col = 1;

    macro_rules! err {
        ($($arg:tt)*) => {
            return Err(QhlError::Parse { line, col, msg: format!($($arg)*) })
        };
    }

    while i < bytes.len() {
        let c = bytes[i] as char;
        let pos = Pos { line, col };
        // whitespace
        if c == '\n' {
            i += 1;
            line += 1;
            col = 1;
            continue;
        }
        if c.is_whitespace() {
            i += 1;
            col += 1;
            continue;
        }
        // line comment
        if c == '/' && bytes.get(i + 1) == Some(&b'/') {
            while i < bytes.len() && bytes[i] != b'\n' {
                i += 1;
            }
            continue;
        }
        // identifier
        if c.is_ascii_alphabetic() || c == '_' {
            let start = i;
            while i < bytes.len()
                && ((bytes[i] as char).is_ascii_alphanumeric() || bytes[i] == b'_')
            {
                i += 1;
            }
            let word = &src[start..i];
            col += i - start;
            toks.push((Tok::Ident(word.to_string()), pos));
            continue;
        }
        // number
        if c.is_ascii_digit() {
            let start = i;
            let mut is_real = false;
            while i < bytes.len() && (bytes[i] as char).is_ascii_digit() {
                i += 1;
            }
            if i < bytes.len()
                && bytes[i] == b'.'
                && i + 1 < bytes.len()
                && (bytes[i + 1] as char).is_ascii_digit()
            {
                is_real = true;
                i += 1;
                while i < bytes.len() && (bytes[i] as char).is_ascii_digit() {
                    i += 1;
                }
            }
            if i < bytes.len() && (bytes[i] == b'e' || bytes[i] == b'E') {
                let mut j = i + 1;
                if j < bytes.len() && (bytes[j] == b'+' || bytes[j] == b'-') {
                    j += 1;
                }
                if j < bytes.len() && (bytes[j] as char).is_ascii_digit() {
                    is_real = true;
                    i = j;
                    while i < bytes.len() && (bytes[i] as char).is_ascii_digit() {
                        i += 1;
                    }
                }
            }
            let text = &src[start..i];
            col += i - start;
            if is_real {
                match text.parse::<f64>() {
                    Ok(v) => toks.push((Tok::Real(v), pos)),
                    Err(_) => err!("malformed number `{text}`"),
                }
            } else {
                match text.parse::<i64>() {
                    Ok(v) => toks.push((Tok::Int(v), pos)),
                    Err(_) => err!("integer literal `{text}` out of 64-bit range"),
                }
            }
            continue;
        }
        // string
        if c == '"' {
            let start = i + 1;
            let mut j = start;
            while j < bytes.len() && bytes[j] != b'"' && bytes[j] != b'\n' {
                j += 1;
            }
            if j >= bytes.len() || bytes[j] != b'"' {
                err!("unterminated string literal");
            }
            toks.push((Tok::Str(src[start..j].to_string()), pos));
            col += j + 1 - i;
            i = j + 1;
            continue;
        }
        // operators, longest match first
        let rest = &src[i..];
        let (tok, len) = if rest.starts_with("<-$") {
            (Tok::RandArrow, 3)
        } else if rest.starts_with("<<=") {
            (Tok::MeasArrow, 3)
        } else if rest.starts_with("<-") {
            (Tok::LeftArrow, 2)
        } else if rest.starts_with("<=") {
            (Tok::Le, 2)
        } else if rest.starts_with(">=") {
            (Tok::Ge, 2)
        } else if rest.starts_with("=>") {
            (Tok::FatArrow, 2)
        } else if rest.starts_with("->") {
            (Tok::Arrow, 2)
        } else if rest.starts_with("!=") {
            (Tok::Ne, 2)
        } else if rest.starts_with("&&") {
            (Tok::AndAnd, 2)
        } else if rest.starts_with("||") {
            (Tok::OrOr, 2)
        } else {
            let t = match c {
                '{' => Tok::LBrace,
                '}' => Tok::RBrace,
                '[' => Tok::LBracket,
                ']' => Tok::RBracket,
                '(' => Tok::LParen,
                ')' => Tok::RParen,
                ',' => Tok::Comma,
                ';' => Tok::Semi,
                ':' => Tok::Colon,
                '.' => Tok::Dot,
                '@' => Tok::At,
                '$' => Tok::Dollar,
                '!' => Tok::Bang,
                '+' => Tok::Plus,
                '-' => Tok::Minus,
                '*' => Tok::Star,
                '=' => Tok::Eq,
                '<' => Tok::Lt,
                '>' => Tok::Gt,
                other => err!("unexpected character `{other}`"),
            };
            (t, 1)
        };
        toks.push((tok, pos));
        i += len;
        col += len;
    }
    Ok(toks)
}
