//! Hand-rolled lexer producing a flat token stream with line/column
//! positions for error reporting.  `//` comments run to end of line.

use super::parser::ParseError;

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum TokenKind {
    Int(i64),
    Ident(String),
    // keywords
    KwInt,
    KwIf,
    KwElse,
    KwWhile,
    KwFor,
    KwRead,
    KwPrint,
    KwMod,
    // punctuation and operators
    LParen,
    RParen,
    LBrace,
    RBrace,
    LBracket,
    RBracket,
    Semi,
    Comma,
    Assign,
    PlusAssign,
    MinusAssign,
    StarAssign,
    SlashAssign,
    PlusPlus,
    MinusMinus,
    Plus,
    Minus,
    Star,
    Slash,
    EqEq,
    NotEq,
    Lt,
    Le,
    Gt,
    Ge,
    AndAnd,
    OrOr,
    Not,
    Eof,
}

impl TokenKind {
    /// Short human-readable rendering used in error messages.
    pub fn describe(&self) -> String {
        use TokenKind::*;
        match self {
            Int(n) => format!("integer {n}"),
            Ident(s) => format!("identifier `{s}`"),
            KwInt => "`int`".into(),
            KwIf => "`if`".into(),
            KwElse => "`else`".into(),
            KwWhile => "`while`".into(),
            KwFor => "`for`".into(),
            KwRead => "`read`".into(),
            KwPrint => "`print`".into(),
            KwMod => "`mod`".into(),
            LParen => "`(`".into(),
            RParen => "`)`".into(),
            LBrace => "`{`".into(),
            RBrace => "`}`".into(),
            LBracket => "`[`".into(),
            RBracket => "`]`".into(),
            Semi => "`;`".into(),
            Comma => "`,`".into(),
            Assign => "`=`".into(),
            PlusAssign => "`+=`".into(),
            MinusAssign => "`-=`".into(),
            StarAssign => "`*=`".into(),
            SlashAssign => "`/=`".into(),
            PlusPlus => "`++`".into(),
            MinusMinus => "`--`".into(),
            Plus => "`+`".into(),
            Minus => "`-`".into(),
            Star => "`*`".into(),
            Slash => "`/`".into(),
            EqEq => "`==`".into(),
            NotEq => "`!=`".into(),
            Lt => "`<`".into(),
            Le => "`<=`".into(),
            Gt => "`>`".into(),
            Ge => "`>=`".into(),
            AndAnd => "`&&`".into(),
            OrOr => "`||`".into(),
            Not => "`!`".into(),
            Eof => "end of input".into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Token {
    pub kind: TokenKind,
    pub line: u32,
    pub col: u32,
}

pub fn lex(src: &str) -> Result<Vec<Token>, ParseError> {
    let mut tokens = Vec::new();
    let mut chars = src.chars().peekable();
    let mut line: u32 = 1;
    let mut col: u32 = 1;

    macro_rules! push {
        ($kind:expr, $l:expr, $c:expr) => {
            tokens.push(Token {
                kind: $kind,
                line: $l,
                col: $c,
            })
        };
    }

    while let Some(&c) = chars.peek() {
        let (tl, tc) = (line, col);
        match c {
            '\n' => {
                chars.next();
                line += 1;
                col = 1;
            }
            c if c.is_whitespace() => {
                chars.next();
                col += 1;
            }
            '/' => {
                chars.next();
                col += 1;
                match chars.peek() {
                    Some('/') => {
                        // comment to end of line
                        for c in chars.by_ref() {
                            if c == '\n' {
                                break;
                            }
                        }
                        line += 1;
                        col = 1;
                    }
                    Some('=') => {
                        chars.next();
                        col += 1;
                        push!(TokenKind::SlashAssign, tl, tc);
                    }
                    _ => push!(TokenKind::Slash, tl, tc),
                }
            }
            c if c.is_ascii_digit() => {
                let mut n: i64 = 0;
                while let Some(&d) = chars.peek() {
                    if let Some(v) = d.to_digit(10) {
                        n = n.wrapping_mul(10).wrapping_add(v as i64);
                        chars.next();
                        col += 1;
                    } else {
                        break;
                    }
                }
                push!(TokenKind::Int(n), tl, tc);
            }
            c if c.is_ascii_alphabetic() || c == '_' => {
                let mut name = String::new();
                while let Some(&d) = chars.peek() {
                    if d.is_ascii_alphanumeric() || d == '_' {
                        name.push(d);
                        chars.next();
                        col += 1;
                    } else {
                        break;
                    }
                }
                let kind = match name.as_str() {
                    "int" => TokenKind::KwInt,
                    "if" => TokenKind::KwIf,
                    "else" => TokenKind::KwElse,
                    "while" => TokenKind::KwWhile,
                    "for" => TokenKind::KwFor,
                    "read" => TokenKind::KwRead,
                    "print" => TokenKind::KwPrint,
                    "mod" => TokenKind::KwMod,
                    _ => TokenKind::Ident(name),
                };
                push!(kind, tl, tc);
            }
            _ => {
                chars.next();
                col += 1;
                let two = |chars: &mut std::iter::Peekable<std::str::Chars>,
                           col: &mut u32,
                           next: char|
                 -> bool {
                    if chars.peek() == Some(&next) {
                        chars.next();
                        *col += 1;
                        true
                    } else {
                        false
                    }
                };
                let kind = match c {
                    '(' => TokenKind::LParen,
                    ')' => TokenKind::RParen,
                    '{' => TokenKind::LBrace,
                    '}' => TokenKind::RBrace,
                    '[' => TokenKind::LBracket,
                    ']' => TokenKind::RBracket,
                    ';' => TokenKind::Semi,
                    ',' => TokenKind::Comma,
                    '+' => {
                        if two(&mut chars, &mut col, '+') {
                            TokenKind::PlusPlus
                        } else if two(&mut chars, &mut col, '=') {
                            TokenKind::PlusAssign
                        } else {
                            TokenKind::Plus
                        }
                    }
                    '-' => {
                        if two(&mut chars, &mut col, '-') {
                            TokenKind::MinusMinus
                        } else if two(&mut chars, &mut col, '=') {
                            TokenKind::MinusAssign
                        } else {
                            TokenKind::Minus
                        }
                    }
                    '*' => {
                        if two(&mut chars, &mut col, '=') {
                            TokenKind::StarAssign
                        } else {
                            TokenKind::Star
                        }
                    }
                    '=' => {
                        if two(&mut chars, &mut col, '=') {
                            TokenKind::EqEq
                        } else {
                            TokenKind::Assign
                        }
                    }
                    '!' => {
                        if two(&mut chars, &mut col, '=') {
                            TokenKind::NotEq
                        } else {
                            TokenKind::Not
                        }
                    }
                    '<' => {
                        if two(&mut chars, &mut col, '=') {
                            TokenKind::Le
                        } else {
                            TokenKind::Lt
                        }
                    }
                    '>' => {
                        if two(&mut chars, &mut col, '=') {
                            TokenKind::Ge
                        } else {
                            TokenKind::Gt
                        }
                    }
                    '&' => {
                        if two(&mut chars, &mut col, '&') {
                            TokenKind::AndAnd
                        } else {
                            return Err(ParseError::SyntaxError {
                                line: tl,
                                col: tc,
                                message: "stray `&` (only `&&` is an operator)".into(),
                            });
                        }
                    }
                    '|' => {
                        if two(&mut chars, &mut col, '|') {
                            TokenKind::OrOr
                        } else {
                            return Err(ParseError::SyntaxError {
                                line: tl,
                                col: tc,
                                message: "stray `|` (only `||` is an operator)".into(),
                            });
                        }
                    }
                    other => {
                        return Err(ParseError::SyntaxError {
                            line: tl,
                            col: tc,
                            message: format!("unexpected character `{other}`"),
                        })
                    }
                };
                push!(kind, tl, tc);
            }
        }
    }
    push!(TokenKind::Eof, line, col);
    Ok(tokens)
}
