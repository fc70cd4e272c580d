//! Pretty-printing. Output reparses to a structurally equal AST (floats are
//! printed with Rust's shortest-round-trip formatting).

use num_complex::Complex64;

use super::ast::*;

pub fn pretty_command(c: &Command) -> String {
    let mut s = String::new();
    write_cmd(&mut s, c);
    s
}

pub fn pretty_dassert(a: &DetAssertion) -> String {
    let mut s = String::new();
    write_dassert(&mut s, a, 0);
    s
}

pub fn pretty_rexpr(r: &RealExpr) -> String {
    let mut s = String::new();
    write_rexpr(&mut s, r, 0);
    s
}

pub fn pretty_passert(p: &ProbFormula) -> String {
    let mut s = String::new();
    write_passert(&mut s, p, 0);
    s
}

pub fn pretty_aexpr(e: &ArithExpr) -> String {
    let mut s = String::new();
    write_aexpr(&mut s, e, 0);
    s
}

pub fn pretty_bexpr(b: &BoolExpr) -> String {
    let mut s = String::new();
    write_bexpr(&mut s, b, 0);
    s
}

pub fn pretty_triple(t: &Triple) -> String {
    let prog = match &t.program_name {
        Some(n) => format!("@{n}"),
        None => pretty_command(&t.prog),
    };
    match &t.body {
        TripleBody::Det { pre, post } => {
            format!(
                "{{{}}} {} {{{}}}",
                pretty_dassert(pre),
                prog,
                pretty_dassert(post)
            )
        }
        TripleBody::Prob { pre, post } => {
            format!(
                "{{{}}} {} {{{}}}",
                pretty_passert(pre),
                prog,
                pretty_passert(post)
            )
        }
    }
}

fn write_aexpr(out: &mut String, e: &ArithExpr, min: u8) {
    let level = match e {
        ArithExpr::BinOp(Aop::Add | Aop::Sub, _, _) => 1,
        ArithExpr::BinOp(Aop::Mul, _, _) => 2,
        _ => 3,
    };
    let parens = level < min;
    if parens {
        out.push('(');
    }
    match e {
        ArithExpr::IntConst(n) => out.push_str(&n.to_string()),
        ArithExpr::ProgVar(x) | ArithExpr::LogVar(x) => out.push_str(x),
        ArithExpr::BinOp(op, l, r) => {
            write_aexpr(out, l, level);
            out.push_str(&format!(" {op} "));
            write_aexpr(out, r, level + 1);
        }
    }
    if parens {
        out.push(')');
    }
}

/// `!(!a && !b)` is printed back as `a || b`; the sugar reparses to the
/// same tree.
fn bexpr_or_parts(b: &BoolExpr) -> Option<(&BoolExpr, &BoolExpr)> {
    if let BoolExpr::Not(inner) = b {
        if let BoolExpr::And(l, r) = &**inner {
            if let (BoolExpr::Not(a), BoolExpr::Not(c)) = (&**l, &**r) {
                return Some((a, c));
            }
        }
    }
    None
}

fn write_bexpr(out: &mut String, b: &BoolExpr, min: u8) {
    let level = if bexpr_or_parts(b).is_some() {
        1
    } else {
        match b {
            BoolExpr::And(_, _) => 2,
            BoolExpr::Not(_) => 3,
            _ => 4,
        }
    };
    let parens = level < min;
    if parens {
        out.push('(');
    }
    if let Some((l, r)) = bexpr_or_parts(b) {
        write_bexpr(out, l, 1);
        out.push_str(" || ");
        write_bexpr(out, r, 2);
    } else {
        match b {
            BoolExpr::True => out.push_str("true"),
            BoolExpr::False => out.push_str("false"),
            BoolExpr::Rel(op, l, r) => {
                write_aexpr(out, l, 0);
                out.push_str(&format!(" {op} "));
                write_aexpr(out, r, 0);
            }
            BoolExpr::Not(inner) => {
                out.push('!');
                write_bexpr(out, inner, 3);
            }
            BoolExpr::And(l, r) => {
                write_bexpr(out, l, 2);
                out.push_str(" && ");
                write_bexpr(out, r, 3);
            }
        }
    }
    if parens {
        out.push(')');
    }
}

fn write_gate_app(out: &mut String, app: &GateApp) {
    out.push_str(app.gate.display_name());
    out.push('[');
    for (i, q) in app.qubits.iter().enumerate() {
        if i > 0 {
            out.push_str(", ");
        }
        out.push_str(&format!("q{q}"));
    }
    out.push(']');
}

fn write_cmd(out: &mut String, c: &Command) {
    match c {
        Command::Seq(a, b) => {
            write_simple_cmd(out, a);
            out.push_str("; ");
            write_cmd(out, b);
        }
        other => write_simple_cmd(out, other),
    }
}

/// Sequencing is right-associated; a `Seq` in simple-command position gets
/// braces so the shape survives reparsing.
fn write_simple_cmd(out: &mut String, c: &Command) {
    match c {
        Command::Skip => out.push_str("skip"),
        Command::Assign(x, e) => {
            out.push_str(x);
            out.push_str(" <- ");
            write_aexpr(out, e, 0);
        }
        Command::RandAssign(x, branches) => {
            out.push_str(x);
            out.push_str(" <-$ {");
            for (i, (p, v)) in branches.iter().enumerate() {
                if i > 0 {
                    out.push_str(", ");
                }
                out.push_str(&format!("{p}: {v}"));
            }
            out.push('}');
        }
        Command::Seq(_, _) => {
            out.push_str("{ ");
            write_cmd(out, c);
            out.push_str(" }");
        }
        Command::If(b, t, e) => {
            out.push_str("if ");
            write_bexpr(out, b, 0);
            out.push_str(" then ");
            write_simple_cmd(out, t);
            out.push_str(" else ");
            write_simple_cmd(out, e);
        }
        Command::While(b, body) => {
            out.push_str("while ");
            write_bexpr(out, b, 0);
            out.push_str(" do ");
            write_simple_cmd(out, body);
        }
        Command::Unitary(app) => write_gate_app(out, app),
        Command::Measure(x, q) => {
            out.push_str(x);
            out.push_str(&format!(" <<= q{q}"));
        }
    }
}

fn dassert_or_parts(a: &DetAssertion) -> Option<(&DetAssertion, &DetAssertion)> {
    if let DetAssertion::Not(inner) = a {
        if let DetAssertion::And(l, r) = &**inner {
            if let (DetAssertion::Not(x), DetAssertion::Not(y)) = (&**l, &**r) {
                return Some((x, y));
            }
        }
    }
    None
}

fn write_dassert(out: &mut String, a: &DetAssertion, min: u8) {
    let level = if dassert_or_parts(a).is_some() {
        1
    } else {
        match a {
            DetAssertion::Forall { .. } => 0,
            DetAssertion::And(_, _) => 2,
            DetAssertion::Not(_) | DetAssertion::BoxU(_, _) | DetAssertion::BoxProj { .. } => 3,
            _ => 4,
        }
    };
    let parens = level < min;
    if parens {
        out.push('(');
    }
    if let Some((l, r)) = dassert_or_parts(a) {
        write_dassert(out, l, 1);
        out.push_str(" || ");
        write_dassert(out, r, 2);
    } else {
        match a {
            DetAssertion::True => out.push_str("true"),
            DetAssertion::False => out.push_str("false"),
            DetAssertion::Proj { qubit, outcome } => {
                out.push_str(&format!("P{outcome}(q{qubit})"));
            }
            DetAssertion::Rel(op, l, r) => {
                write_aexpr(out, l, 0);
                out.push_str(&format!(" {op} "));
                write_aexpr(out, r, 0);
            }
            DetAssertion::Not(inner) => {
                out.push('!');
                write_dassert(out, inner, 3);
            }
            DetAssertion::And(l, r) => {
                write_dassert(out, l, 2);
                out.push_str(" && ");
                write_dassert(out, r, 3);
            }
            DetAssertion::Forall { var, body } => {
                out.push_str(&format!("forall {var} . "));
                write_dassert(out, body, 0);
            }
            DetAssertion::BoxU(app, body) => {
                out.push('[');
                write_gate_app(out, app);
                out.push_str("] ");
                write_dassert(out, body, 3);
            }
            DetAssertion::BoxProj {
                qubit,
                outcome,
                body,
            } => {
                out.push_str(&format!("[Proj q{qubit}, {outcome}] "));
                write_dassert(out, body, 3);
            }
            DetAssertion::BigAnd(items) => {
                out.push_str("bigand { ");
                for (i, item) in items.iter().enumerate() {
                    if i > 0 {
                        out.push_str("; ");
                    }
                    write_dassert(out, item, 0);
                }
                out.push_str(" }");
            }
        }
    }
    if parens {
        out.push(')');
    }
}

pub fn format_complex(c: Complex64) -> String {
    if c.im == 0.0 {
        format!("{}", c.re)
    } else if c.re == 0.0 {
        format!("{}i", c.im)
    } else if c.im < 0.0 {
        format!("{}-{}i", c.re, -c.im)
    } else {
        format!("{}+{}i", c.re, c.im)
    }
}

fn write_projref(out: &mut String, q: &ProjectorSpec) {
    match q {
        ProjectorSpec::Mask(patterns) => {
            out.push_str("mask(");
            for (i, p) in patterns.iter().enumerate() {
                if i > 0 {
                    out.push_str(", ");
                }
                out.push_str(&format!("{:?}", p.0));
            }
            out.push(')');
        }
        ProjectorSpec::Dense {
            name: Some(name), ..
        } => out.push_str(name),
        ProjectorSpec::Dense { name: None, matrix } => {
            out.push_str(&format!("matrix({}; ", matrix.dim()));
            for (i, e) in matrix.data().iter().enumerate() {
                if i > 0 {
                    out.push_str(", ");
                }
                out.push_str(&format_complex(*e));
            }
            out.push(')');
        }
    }
}

fn write_rexpr(out: &mut String, r: &RealExpr, min: u8) {
    let level = match r {
        RealExpr::BinOp(Aop::Add | Aop::Sub, _, _) => 1,
        RealExpr::BinOp(Aop::Mul, _, _) => 2,
        _ => 3,
    };
    let parens = level < min;
    if parens {
        out.push('(');
    }
    match r {
        RealExpr::Const(v) => {
            if *v < 0.0 {
                out.push_str(&format!("-{}", -v));
            } else {
                out.push_str(&v.to_string());
            }
        }
        RealExpr::Var(x) => out.push_str(&format!("${x}")),
        RealExpr::Prob(phi) => {
            out.push_str("P[");
            write_dassert(out, phi, 0);
            out.push(']');
        }
        RealExpr::BinOp(op, l, r) => {
            write_rexpr(out, l, level);
            out.push_str(&format!(" {op} "));
            write_rexpr(out, r, level + 1);
        }
        RealExpr::CqCond(phi, q) => {
            out.push('(');
            write_dassert(out, phi, 0);
            out.push_str(" => ");
            write_projref(out, q);
            out.push(')');
        }
        RealExpr::BoundedSum(items) => {
            out.push_str("bigsum { ");
            for (i, item) in items.iter().enumerate() {
                if i > 0 {
                    out.push_str("; ");
                }
                write_rexpr(out, item, 0);
            }
            out.push_str(" }");
        }
    }
    if parens {
        out.push(')');
    }
}

fn passert_or_parts(p: &ProbFormula) -> Option<(&ProbFormula, &ProbFormula)> {
    if let ProbFormula::Not(inner) = p {
        if let ProbFormula::And(l, r) = &**inner {
            if let (ProbFormula::Not(x), ProbFormula::Not(y)) = (&**l, &**r) {
                return Some((x, y));
            }
        }
    }
    None
}

fn write_passert(out: &mut String, p: &ProbFormula, min: u8) {
    let level = if passert_or_parts(p).is_some() {
        1
    } else {
        match p {
            ProbFormula::And(_, _) => 2,
            ProbFormula::Not(_) => 3,
            ProbFormula::Rel(_, _, _) => 4,
        }
    };
    let parens = level < min;
    if parens {
        out.push('(');
    }
    if let Some((l, r)) = passert_or_parts(p) {
        write_passert(out, l, 1);
        out.push_str(" || ");
        write_passert(out, r, 2);
    } else {
        match p {
            ProbFormula::Rel(op, l, r) => {
                write_rexpr(out, l, 0);
                out.push_str(&format!(" {op} "));
                write_rexpr(out, r, 0);
            }
            ProbFormula::Not(inner) => {
                out.push('!');
                write_passert(out, inner, 3);
            }
            ProbFormula::And(l, r) => {
                write_passert(out, l, 2);
                out.push_str(" && ");
                write_passert(out, r, 3);
            }
        }
    }
    if parens {
        out.push(')');
    }
}
