//! Recursive-descent parser for MiniJ.
//!
//! Grammar outline (see the crate README for the full surface syntax):
//!
//! ```text
//! program    := decl* stmt*
//! decl       := "int" declarator ("," declarator)* ";"
//! declarator := ident | ident "[" INT "]"
//! stmt       := assign-chain ";" | lvalue "=" "read" "(" ")" ";"
//!             | "print" "(" expr ")" ";"
//!             | "if" "(" expr ")" block ("else" (block | if-stmt))?
//!             | "while" "(" expr ")" block
//!             | "for" "(" assign-list ";" expr ";" assign-list ")" block
//! block      := "{" stmt* "}" | stmt
//! ```
//!
//! Name resolution runs here as well: every identifier must be declared
//! up front, and declaring a name twice is an error.  Labels are assigned
//! to declarations and statements in source order, starting at 1.

use super::ast::*;
use super::lexer::{lex, Token, TokenKind};
use std::collections::BTreeMap;
use thiserror::Error;

#[derive(Debug, Clone, Error, PartialEq, Eq)]
pub enum ParseError {
    #[error("syntax error at {line}:{col}: {message}")]
    SyntaxError { line: u32, col: u32, message: String },
    #[error("duplicate declaration of `{name}` at {line}:{col}")]
    DuplicateDecl { name: String, line: u32, col: u32 },
    #[error("use of undeclared variable `{name}` at {line}:{col}")]
    UseOfUndeclared { name: String, line: u32, col: u32 },
    #[error("`{name}` at {line}:{col} is {actual}, used as {expected}")]
    ShapeMismatch {
        name: String,
        line: u32,
        col: u32,
        expected: &'static str,
        actual: &'static str,
    },
}

pub type ParseResult<T> = Result<T, ParseError>;

pub fn parse(src: &str) -> ParseResult<Program> {
    let tokens = lex(src)?;
    let mut p = Parser {
        tokens,
        pos: 0,
        next_label: 1,
        symbols: BTreeMap::new(),
    };
    p.program()
}

struct Parser {
    tokens: Vec<Token>,
    pos: usize,
    next_label: u32,
    /// Declared names with their shapes; populated while parsing the
    /// declaration section, consulted for every later use.
    symbols: BTreeMap<String, Shape>,
}

impl Parser {
    fn peek(&self) -> &TokenKind {
        &self.tokens[self.pos].kind
    }

    fn here(&self) -> (u32, u32) {
        let t = &self.tokens[self.pos];
        (t.line, t.col)
    }

    fn advance(&mut self) -> Token {
        let t = self.tokens[self.pos].clone();
        if self.pos + 1 < self.tokens.len() {
            self.pos += 1;
        }
        t
    }

    fn expect(&mut self, kind: TokenKind) -> ParseResult<Token> {
        if *self.peek() == kind {
            Ok(self.advance())
        } else {
            let (line, col) = self.here();
            Err(ParseError::SyntaxError {
                line,
                col,
                message: format!("expected {}, found {}", kind.describe(), self.peek().describe()),
            })
        }
    }

    fn error<T>(&self, message: impl Into<String>) -> ParseResult<T> {
        let (line, col) = self.here();
        Err(ParseError::SyntaxError {
            line,
            col,
            message: message.into(),
        })
    }

    fn fresh_label(&mut self) -> Label {
        let l = Label(self.next_label);
        self.next_label += 1;
        l
    }

    fn program(&mut self) -> ParseResult<Program> {
        let mut decls = Vec::new();
        while *self.peek() == TokenKind::KwInt {
            decls.push(self.decl()?);
        }
        let mut body = Vec::new();
        while *self.peek() != TokenKind::Eof {
            body.push(self.stmt()?);
        }
        Ok(Program { decls, body })
    }

    fn decl(&mut self) -> ParseResult<Decl> {
        let label = self.fresh_label();
        self.expect(TokenKind::KwInt)?;
        let mut items = Vec::new();
        loop {
            let (line, col) = self.here();
            let name = self.ident()?;
            if self.symbols.contains_key(&name) {
                return Err(ParseError::DuplicateDecl { name, line, col });
            }
            let shape = if *self.peek() == TokenKind::LBracket {
                self.advance();
                let size = match self.advance() {
                    Token {
                        kind: TokenKind::Int(n),
                        ..
                    } if n > 0 => n as u32,
                    t => {
                        return Err(ParseError::SyntaxError {
                            line: t.line,
                            col: t.col,
                            message: format!(
                                "expected positive array size, found {}",
                                t.kind.describe()
                            ),
                        })
                    }
                };
                self.expect(TokenKind::RBracket)?;
                Shape::Array(size)
            } else {
                Shape::Scalar
            };
            self.symbols.insert(name.clone(), shape);
            items.push(DeclItem { name, shape });
            if *self.peek() == TokenKind::Comma {
                self.advance();
            } else {
                break;
            }
        }
        self.expect(TokenKind::Semi)?;
        Ok(Decl { label, items })
    }

    fn ident(&mut self) -> ParseResult<String> {
        match self.peek().clone() {
            TokenKind::Ident(name) => {
                self.advance();
                Ok(name)
            }
            other => self.error(format!("expected identifier, found {}", other.describe())),
        }
    }

    fn stmt(&mut self) -> ParseResult<Stmt> {
        let label = self.fresh_label();
        let kind = match self.peek().clone() {
            TokenKind::KwIf => self.if_stmt()?,
            TokenKind::KwWhile => {
                self.advance();
                self.expect(TokenKind::LParen)?;
                let cond = self.expr()?;
                self.expect(TokenKind::RParen)?;
                let body = self.block()?;
                StmtKind::While { cond, body }
            }
            TokenKind::KwFor => {
                self.advance();
                self.expect(TokenKind::LParen)?;
                let init = self.assign_list(TokenKind::Semi)?;
                self.expect(TokenKind::Semi)?;
                let cond = self.expr()?;
                self.expect(TokenKind::Semi)?;
                let update = self.assign_list(TokenKind::RParen)?;
                self.expect(TokenKind::RParen)?;
                let body = self.block()?;
                StmtKind::For {
                    init,
                    cond,
                    update,
                    body,
                }
            }
            TokenKind::KwPrint => {
                self.advance();
                self.expect(TokenKind::LParen)?;
                let e = self.expr()?;
                self.expect(TokenKind::RParen)?;
                self.expect(TokenKind::Semi)?;
                StmtKind::Print(e)
            }
            _ => {
                let kind = self.assign_or_read()?;
                self.expect(TokenKind::Semi)?;
                kind
            }
        };
        Ok(Stmt { label, kind })
    }

    fn if_stmt(&mut self) -> ParseResult<StmtKind> {
        self.expect(TokenKind::KwIf)?;
        self.expect(TokenKind::LParen)?;
        let cond = self.expr()?;
        self.expect(TokenKind::RParen)?;
        let then_branch = self.block()?;
        let else_branch = if *self.peek() == TokenKind::KwElse {
            self.advance();
            Some(self.block()?)
        } else {
            None
        };
        Ok(StmtKind::If {
            cond,
            then_branch,
            else_branch,
        })
    }

    fn block(&mut self) -> ParseResult<Vec<Stmt>> {
        if *self.peek() == TokenKind::LBrace {
            self.advance();
            let mut stmts = Vec::new();
            while *self.peek() != TokenKind::RBrace {
                if *self.peek() == TokenKind::Eof {
                    return self.error("unterminated block: expected `}`");
                }
                stmts.push(self.stmt()?);
            }
            self.advance();
            Ok(stmts)
        } else {
            Ok(vec![self.stmt()?])
        }
    }

    /// Comma-separated assignments inside a `for` header; `stop` is the
    /// token that legally ends an empty list.
    fn assign_list(&mut self, stop: TokenKind) -> ParseResult<Vec<Assign>> {
        let mut out = Vec::new();
        if *self.peek() == stop {
            return Ok(out);
        }
        loop {
            out.push(self.assign()?);
            if *self.peek() == TokenKind::Comma {
                self.advance();
            } else {
                break;
            }
        }
        Ok(out)
    }

    /// A statement-position assignment, `lvalue = read()`, or a chained
    /// multi-assignment (`i = pprod = nprod = 1`).
    fn assign_or_read(&mut self) -> ParseResult<StmtKind> {
        // `++x;` / `--x;` and `x++;` / `x--;` handled by `assign`.
        if matches!(self.peek(), TokenKind::PlusPlus | TokenKind::MinusMinus) {
            return Ok(StmtKind::Assign(self.assign()?));
        }
        let target = self.lvalue()?;
        match self.peek().clone() {
            TokenKind::PlusPlus | TokenKind::MinusMinus => {
                let op = if self.advance().kind == TokenKind::PlusPlus {
                    IncDecOp::Inc
                } else {
                    IncDecOp::Dec
                };
                Ok(StmtKind::Assign(Assign::IncDec {
                    target,
                    op,
                    prefix: false,
                }))
            }
            TokenKind::Assign => {
                self.advance();
                if *self.peek() == TokenKind::KwRead {
                    self.advance();
                    self.expect(TokenKind::LParen)?;
                    self.expect(TokenKind::RParen)?;
                    return Ok(StmtKind::Read(target));
                }
                // Either a plain assignment or a chain.  Parse one expression;
                // if `=` follows, the expression must itself be an lvalue and
                // the chain continues.
                let mut targets = vec![target];
                loop {
                    let e = self.expr()?;
                    if *self.peek() == TokenKind::Assign {
                        match e {
                            Expr::LValue(lv) => {
                                targets.push(lv);
                                self.advance();
                            }
                            _ => return self.error("invalid assignment target in chain"),
                        }
                    } else if targets.len() == 1 {
                        return Ok(StmtKind::Assign(Assign::set(targets.pop().unwrap(), e)));
                    } else {
                        return Ok(StmtKind::MultiAssign { targets, value: e });
                    }
                }
            }
            op @ (TokenKind::PlusAssign
            | TokenKind::MinusAssign
            | TokenKind::StarAssign
            | TokenKind::SlashAssign) => {
                self.advance();
                let value = self.expr()?;
                let op = match op {
                    TokenKind::PlusAssign => AssignOp::Add,
                    TokenKind::MinusAssign => AssignOp::Sub,
                    TokenKind::StarAssign => AssignOp::Mul,
                    _ => AssignOp::Div,
                };
                Ok(StmtKind::Assign(Assign::Set { target, op, value }))
            }
            other => self.error(format!(
                "expected assignment operator, found {}",
                other.describe()
            )),
        }
    }

    /// One assignment in a `for` header (no chains, no `read()`).
    fn assign(&mut self) -> ParseResult<Assign> {
        match self.peek().clone() {
            TokenKind::PlusPlus | TokenKind::MinusMinus => {
                let op = if self.advance().kind == TokenKind::PlusPlus {
                    IncDecOp::Inc
                } else {
                    IncDecOp::Dec
                };
                let target = self.lvalue()?;
                Ok(Assign::IncDec {
                    target,
                    op,
                    prefix: true,
                })
            }
            _ => {
                let target = self.lvalue()?;
                match self.peek().clone() {
                    TokenKind::PlusPlus | TokenKind::MinusMinus => {
                        let op = if self.advance().kind == TokenKind::PlusPlus {
                            IncDecOp::Inc
                        } else {
                            IncDecOp::Dec
                        };
                        Ok(Assign::IncDec {
                            target,
                            op,
                            prefix: false,
                        })
                    }
                    TokenKind::Assign => {
                        self.advance();
                        let value = self.expr()?;
                        Ok(Assign::set(target, value))
                    }
                    op @ (TokenKind::PlusAssign
                    | TokenKind::MinusAssign
                    | TokenKind::StarAssign
                    | TokenKind::SlashAssign) => {
                        self.advance();
                        let value = self.expr()?;
                        let op = match op {
                            TokenKind::PlusAssign => AssignOp::Add,
                            TokenKind::MinusAssign => AssignOp::Sub,
                            TokenKind::StarAssign => AssignOp::Mul,
                            _ => AssignOp::Div,
                        };
                        Ok(Assign::Set { target, op, value })
                    }
                    other => self.error(format!(
                        "expected assignment operator, found {}",
                        other.describe()
                    )),
                }
            }
        }
    }

    fn lvalue(&mut self) -> ParseResult<LValue> {
        let (line, col) = self.here();
        let name = self.ident()?;
        let shape = match self.symbols.get(&name) {
            Some(s) => *s,
            None => return Err(ParseError::UseOfUndeclared { name, line, col }),
        };
        if *self.peek() == TokenKind::LBracket {
            if shape == Shape::Scalar {
                return Err(ParseError::ShapeMismatch {
                    name,
                    line,
                    col,
                    expected: "an array",
                    actual: "a scalar",
                });
            }
            self.advance();
            let idx = self.expr()?;
            self.expect(TokenKind::RBracket)?;
            Ok(LValue::Elem(name, Box::new(idx)))
        } else {
            if let Shape::Array(_) = shape {
                return Err(ParseError::ShapeMismatch {
                    name,
                    line,
                    col,
                    expected: "a scalar",
                    actual: "an array",
                });
            }
            Ok(LValue::Var(name))
        }
    }

    // Expression precedence, loosest first:
    //   ||  <  &&  <  == !=  <  < <= > >=  <  + -  <  * / mod  <  unary

    fn expr(&mut self) -> ParseResult<Expr> {
        self.or_expr()
    }

    fn or_expr(&mut self) -> ParseResult<Expr> {
        let mut lhs = self.and_expr()?;
        while *self.peek() == TokenKind::OrOr {
            self.advance();
            let rhs = self.and_expr()?;
            lhs = Expr::Binary(BinOp::Or, Box::new(lhs), Box::new(rhs));
        }
        Ok(lhs)
    }

    fn and_expr(&mut self) -> ParseResult<Expr> {
        let mut lhs = self.equality()?;
        while *self.peek() == TokenKind::AndAnd {
            self.advance();
            let rhs = self.equality()?;
            lhs = Expr::Binary(BinOp::And, Box::new(lhs), Box::new(rhs));
        }
        Ok(lhs)
    }

    fn equality(&mut self) -> ParseResult<Expr> {
        let mut lhs = self.relational()?;
        loop {
            let op = match self.peek() {
                TokenKind::EqEq => BinOp::Eq,
                TokenKind::NotEq => BinOp::Ne,
                _ => break,
            };
            self.advance();
            let rhs = self.relational()?;
            lhs = Expr::Binary(op, Box::new(lhs), Box::new(rhs));
        }
        Ok(lhs)
    }

    fn relational(&mut self) -> ParseResult<Expr> {
        let mut lhs = self.additive()?;
        loop {
            let op = match self.peek() {
                TokenKind::Lt => BinOp::Lt,
                TokenKind::Le => BinOp::Le,
                TokenKind::Gt => BinOp::Gt,
                TokenKind::Ge => BinOp::Ge,
                _ => break,
            };
            self.advance();
            let rhs = self.additive()?;
            lhs = Expr::Binary(op, Box::new(lhs), Box::new(rhs));
        }
        Ok(lhs)
    }

    fn additive(&mut self) -> ParseResult<Expr> {
        let mut lhs = self.multiplicative()?;
        loop {
            let op = match self.peek() {
                TokenKind::Plus => BinOp::Add,
                TokenKind::Minus => BinOp::Sub,
                _ => break,
            };
            self.advance();
            let rhs = self.multiplicative()?;
            lhs = Expr::Binary(op, Box::new(lhs), Box::new(rhs));
        }
        Ok(lhs)
    }

    fn multiplicative(&mut self) -> ParseResult<Expr> {
        let mut lhs = self.unary()?;
        loop {
            let op = match self.peek() {
                TokenKind::Star => BinOp::Mul,
                TokenKind::Slash => BinOp::Div,
                TokenKind::KwMod => BinOp::Mod,
                _ => break,
            };
            self.advance();
            let rhs = self.unary()?;
            lhs = Expr::Binary(op, Box::new(lhs), Box::new(rhs));
        }
        Ok(lhs)
    }

    fn unary(&mut self) -> ParseResult<Expr> {
        match self.peek().clone() {
            TokenKind::Minus => {
                self.advance();
                Ok(Expr::Unary(UnOp::Neg, Box::new(self.unary()?)))
            }
            TokenKind::Not => {
                self.advance();
                Ok(Expr::Unary(UnOp::Not, Box::new(self.unary()?)))
            }
            TokenKind::PlusPlus | TokenKind::MinusMinus => {
                let op = if self.advance().kind == TokenKind::PlusPlus {
                    IncDecOp::Inc
                } else {
                    IncDecOp::Dec
                };
                let target = self.lvalue()?;
                Ok(Expr::IncDec {
                    op,
                    prefix: true,
                    target,
                })
            }
            _ => self.postfix(),
        }
    }

    fn postfix(&mut self) -> ParseResult<Expr> {
        let e = self.primary()?;
        match self.peek() {
            TokenKind::PlusPlus | TokenKind::MinusMinus => {
                if let Expr::LValue(target) = e {
                    let op = if self.advance().kind == TokenKind::PlusPlus {
                        IncDecOp::Inc
                    } else {
                        IncDecOp::Dec
                    };
                    Ok(Expr::IncDec {
                        op,
                        prefix: false,
                        target,
                    })
                } else {
                    self.error("`++`/`--` needs a variable or array element")
                }
            }
            _ => Ok(e),
        }
    }

    fn primary(&mut self) -> ParseResult<Expr> {
        match self.peek().clone() {
            TokenKind::Int(n) => {
                self.advance();
                Ok(Expr::Int(n))
            }
            TokenKind::Ident(_) => Ok(Expr::LValue(self.lvalue()?)),
            TokenKind::LParen => {
                self.advance();
                let e = self.expr()?;
                self.expect(TokenKind::RParen)?;
                Ok(e)
            }
            other => self.error(format!("expected expression, found {}", other.describe())),
        }
    }
}
