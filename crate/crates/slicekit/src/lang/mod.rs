//! MiniJ front end: syntax, parsing, normalization, projection and
//! printing.

pub mod ast;
pub mod lexer;
pub mod normalize;
pub mod parser;
pub mod project;
pub mod unparse;

pub use ast::{
    Assign, AssignOp, BinOp, Decl, DeclItem, Expr, IncDecOp, LValue, Label, Occurrence,
    Program, Shape, Stmt, StmtKind, UnOp,
};
pub use normalize::normalize;
pub use parser::{parse, ParseError};
pub use project::{project, project_with_map, ProjectError};
pub use unparse::{stmt_text, unparse};
