//! Deterministic pretty-printer.
//!
//! The output is canonical: four-space indentation, every block braced,
//! one statement per line, empty blocks printed as `{ }`, and a
//! single-`if` else branch rendered as `else if`.  Reparsing the output
//! of `unparse` always reproduces the same AST, labels included.

use super::ast::*;

pub fn unparse(p: &Program) -> String {
    let mut out = String::new();
    for d in &p.decls {
        out.push_str(&decl_text(d));
        out.push('\n');
    }
    write_stmts(&mut out, &p.body, 0);
    out
}

pub fn decl_text(d: &Decl) -> String {
    let items: Vec<String> = d
        .items
        .iter()
        .map(|it| match it.shape {
            Shape::Scalar => it.name.clone(),
            Shape::Array(n) => format!("{}[{}]", it.name, n),
        })
        .collect();
    format!("int {};", items.join(", "))
}

fn write_stmts(out: &mut String, stmts: &[Stmt], depth: usize) {
    for s in stmts {
        write_stmt(out, s, depth);
    }
}

fn indent(out: &mut String, depth: usize) {
    for _ in 0..depth {
        out.push_str("    ");
    }
}

fn write_stmt(out: &mut String, s: &Stmt, depth: usize) {
    indent(out, depth);
    match &s.kind {
        StmtKind::Assign(a) => {
            out.push_str(&assign_text(a));
            out.push_str(";\n");
        }
        StmtKind::MultiAssign { targets, value } => {
            for t in targets {
                out.push_str(&lvalue_text(t));
                out.push_str(" = ");
            }
            out.push_str(&expr_text(value));
            out.push_str(";\n");
        }
        StmtKind::Read(lv) => {
            out.push_str(&lvalue_text(lv));
            out.push_str(" = read();\n");
        }
        StmtKind::Print(e) => {
            out.push_str("print(");
            out.push_str(&expr_text(e));
            out.push_str(");\n");
        }
        StmtKind::If { .. } => write_if(out, s, depth),
        StmtKind::While { cond, body } => {
            out.push_str(&format!("while ({}) ", expr_text(cond)));
            write_block(out, body, depth);
            out.push('\n');
        }
        StmtKind::For {
            init,
            cond,
            update,
            body,
        } => {
            out.push_str(&format!("for ({}) ", for_header_text(init, cond, update)));
            write_block(out, body, depth);
            out.push('\n');
        }
    }
}

/// Writes an if statement (without leading indent, which the caller
/// already emitted) including any `else if` chain.
fn write_if(out: &mut String, s: &Stmt, depth: usize) {
    let StmtKind::If {
        cond,
        then_branch,
        else_branch,
    } = &s.kind
    else {
        unreachable!()
    };
    out.push_str(&format!("if ({}) ", expr_text(cond)));
    write_block(out, then_branch, depth);
    match else_branch {
        None => out.push('\n'),
        Some(els) => {
            out.push_str(" else ");
            // A lone `if` in the else branch chains as `else if`.
            if els.len() == 1 {
                if let StmtKind::If { .. } = els[0].kind {
                    write_if(out, &els[0], depth);
                    return;
                }
            }
            write_block(out, els, depth);
            out.push('\n');
        }
    }
}

fn write_block(out: &mut String, stmts: &[Stmt], depth: usize) {
    if stmts.is_empty() {
        out.push_str("{ }");
    } else {
        out.push_str("{\n");
        write_stmts(out, stmts, depth + 1);
        indent(out, depth);
        out.push('}');
    }
}

pub fn for_header_text(init: &[Assign], cond: &Expr, update: &[Assign]) -> String {
    let init: Vec<String> = init.iter().map(assign_text).collect();
    let update: Vec<String> = update.iter().map(assign_text).collect();
    format!(
        "{}; {}; {}",
        init.join(", "),
        expr_text(cond),
        update.join(", ")
    )
}

pub fn assign_text(a: &Assign) -> String {
    match a {
        Assign::Set { target, op, value } => {
            let op = match op {
                AssignOp::Set => "=",
                AssignOp::Add => "+=",
                AssignOp::Sub => "-=",
                AssignOp::Mul => "*=",
                AssignOp::Div => "/=",
            };
            format!("{} {} {}", lvalue_text(target), op, expr_text(value))
        }
        Assign::IncDec { target, op, prefix } => {
            let op = match op {
                IncDecOp::Inc => "++",
                IncDecOp::Dec => "--",
            };
            if *prefix {
                format!("{}{}", op, lvalue_text(target))
            } else {
                format!("{}{}", lvalue_text(target), op)
            }
        }
    }
}

pub fn lvalue_text(lv: &LValue) -> String {
    match lv {
        LValue::Var(n) => n.clone(),
        LValue::Elem(n, idx) => format!("{}[{}]", n, expr_text(idx)),
    }
}

/// Binding strength; higher binds tighter.  Used to insert only the
/// parentheses the grammar needs.
fn precedence(e: &Expr) -> u8 {
    match e {
        Expr::Binary(op, ..) => match op {
            BinOp::Or => 1,
            BinOp::And => 2,
            BinOp::Eq | BinOp::Ne => 3,
            BinOp::Lt | BinOp::Le | BinOp::Gt | BinOp::Ge => 4,
            BinOp::Add | BinOp::Sub => 5,
            BinOp::Mul | BinOp::Div | BinOp::Mod => 6,
        },
        Expr::Unary(..) => 7,
        Expr::Int(_) | Expr::LValue(_) | Expr::IncDec { .. } => 8,
    }
}

pub fn expr_text(e: &Expr) -> String {
    match e {
        Expr::Int(n) => {
            if *n < 0 {
                // Negative literals only arise from constant folding; print
                // them parenthesized so `a * -5` round-trips unambiguously.
                format!("(-{})", n.unsigned_abs())
            } else {
                n.to_string()
            }
        }
        Expr::LValue(lv) => lvalue_text(lv),
        Expr::Unary(op, inner) => {
            let sym = match op {
                UnOp::Neg => "-",
                UnOp::Not => "!",
            };
            // Parenthesize any non-primary operand, and also `-(-x)` /
            // `-(--x)` style nestings that would lex as one token.
            let needs_parens = precedence(inner) < 8
                || matches!(
                    (op, inner.as_ref()),
                    (UnOp::Neg, Expr::Unary(UnOp::Neg, _))
                        | (UnOp::Neg, Expr::IncDec { prefix: true, op: IncDecOp::Dec, .. })
                        | (UnOp::Neg, Expr::Int(i64::MIN..=-1))
                );
            if needs_parens {
                format!("{}({})", sym, expr_text(inner))
            } else {
                format!("{}{}", sym, expr_text(inner))
            }
        }
        Expr::IncDec { op, prefix, target } => {
            let sym = match op {
                IncDecOp::Inc => "++",
                IncDecOp::Dec => "--",
            };
            if *prefix {
                format!("{}{}", sym, lvalue_text(target))
            } else {
                format!("{}{}", lvalue_text(target), sym)
            }
        }
        Expr::Binary(op, l, r) => {
            let my = precedence(e);
            let sym = match op {
                BinOp::Add => "+",
                BinOp::Sub => "-",
                BinOp::Mul => "*",
                BinOp::Div => "/",
                BinOp::Mod => "mod",
                BinOp::Eq => "==",
                BinOp::Ne => "!=",
                BinOp::Lt => "<",
                BinOp::Le => "<=",
                BinOp::Gt => ">",
                BinOp::Ge => ">=",
                BinOp::And => "&&",
                BinOp::Or => "||",
            };
            // Left-associative: the right child needs parens at equal
            // precedence, the left only when strictly looser.
            let lt = if precedence(l) < my {
                format!("({})", expr_text(l))
            } else {
                expr_text(l)
            };
            let rt = if precedence(r) <= my {
                format!("({})", expr_text(r))
            } else {
                expr_text(r)
            };
            format!("{} {} {}", lt, sym, rt)
        }
    }
}

/// One-line rendering of the statement with the given label, used for
/// graph exports, reports and golden statement-text comparisons.
/// Predicates render as their header (`while (i <= n)`), `for` statements
/// as the full header.
pub fn stmt_text(p: &Program, label: Label) -> Option<String> {
    if let Some(d) = p.decls.iter().find(|d| d.label == label) {
        return Some(decl_text(d));
    }
    let s = p.stmt(label)?;
    Some(match &s.kind {
        StmtKind::Assign(a) => format!("{};", assign_text(a)),
        StmtKind::MultiAssign { targets, value } => {
            let mut t = String::new();
            for lv in targets {
                t.push_str(&lvalue_text(lv));
                t.push_str(" = ");
            }
            format!("{}{};", t, expr_text(value))
        }
        StmtKind::Read(lv) => format!("{} = read();", lvalue_text(lv)),
        StmtKind::Print(e) => format!("print({});", expr_text(e)),
        StmtKind::If { cond, .. } => format!("if ({})", expr_text(cond)),
        StmtKind::While { cond, .. } => format!("while ({})", expr_text(cond)),
        StmtKind::For {
            init, cond, update, ..
        } => format!("for ({})", for_header_text(init, cond, update)),
    })
}

#[cfg(test)]
mod tests {
    use super::super::parser::parse;
    use super::*;

    fn roundtrip(src: &str) {
        let p1 = parse(src).unwrap();
        let text = unparse(&p1);
        let p2 = parse(&text).unwrap();
        assert_eq!(p1, p2, "reparse changed the program:\n{text}");
        // printing is a fixpoint
        assert_eq!(text, unparse(&p2));
    }

    #[test]
    fn fixtures_round_trip() {
        for fix in ["fig1", "fig3", "fig6", "fig9", "fig11", "fig13"] {
            let path = format!(
                "{}/../../fixtures/{}.mj",
                env!("CARGO_MANIFEST_DIR"),
                fix
            );
            roundtrip(&std::fs::read_to_string(path).unwrap());
        }
    }

    #[test]
    fn empty_if_body_prints_with_braces() {
        let p = parse("int x;\nif (x > 0) { }").unwrap();
        assert_eq!(unparse(&p), "int x;\nif (x > 0) { }\n");
    }

    #[test]
    fn else_if_chain_prints_flat() {
        let src = "int a, b;\nif (a > 0) {\n    b = 1;\n} else if (a < 0) {\n    b = 2;\n} else {\n    b = 3;\n}\n";
        let p = parse(src).unwrap();
        assert_eq!(unparse(&p), src);
    }

    #[test]
    fn nested_negation_keeps_tokens_apart() {
        roundtrip("int a, b;\nb = -(-a);\na = b - -b;");
    }

    #[test]
    fn minimal_parentheses() {
        let p = parse("int a, b, c;\na = (b + c) * 2;\nb = a + c * 2;").unwrap();
        let text = unparse(&p);
        assert!(text.contains("a = (b + c) * 2;"));
        assert!(text.contains("b = a + c * 2;"));
    }

    #[test]
    fn stmt_text_renders_headers() {
        let src = std::fs::read_to_string(concat!(
            env!("CARGO_MANIFEST_DIR"),
            "/../../fixtures/fig6.mj"
        ))
        .unwrap();
        let p = parse(&src).unwrap();
        assert_eq!(stmt_text(&p, Label(4)).unwrap(), "while (i <= n)");
        assert_eq!(stmt_text(&p, Label(1)).unwrap(), "int n, i, x;");
        assert_eq!(stmt_text(&p, Label(9)).unwrap(), "print(x);");
    }
}
