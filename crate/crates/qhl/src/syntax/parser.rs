//! Recursive-descent parser for spec files and assertion fragments.
//!
//! The token stream is materialized up front, so ambiguous prefixes (grouping
//! parentheses versus relations versus cq-conditionals, deterministic versus
//! probabilistic triple bodies) are resolved by cheap backtracking.

use std::collections::BTreeMap;
use std::sync::Arc;

use num_complex::Complex64;

use super::ast::*;
use super::lexer::{lex, Pos, Tok};
use super::{Declarations, OracleTable, SpecFile};
use crate::cqstate::linalg::{self, CMatrix};
use crate::cqstate::{ClassicalStore, PureCqState, QuantumState};
use crate::error::QhlError;

const TOL: f64 = 1e-9;

pub fn parse_spec(src: &str) -> Result<SpecFile, QhlError> {
    let toks = lex(src)?;
    let mut p = Parser::new(toks, Declarations::default());
    p.parse_file()
}

pub fn parse_command_text(src: &str, decls: &Declarations) -> Result<Command, QhlError> {
    fragment(src, decls, |p| p.parse_cmd())
}

pub fn parse_dassert_text(src: &str, decls: &Declarations) -> Result<DetAssertion, QhlError> {
    fragment(src, decls, |p| p.parse_dassert())
}

pub fn parse_rexpr_text(src: &str, decls: &Declarations) -> Result<RealExpr, QhlError> {
    fragment(src, decls, |p| p.parse_rexpr())
}

pub fn parse_passert_text(src: &str, decls: &Declarations) -> Result<ProbFormula, QhlError> {
    fragment(src, decls, |p| p.parse_passert())
}

fn fragment<T>(
    src: &str,
    decls: &Declarations,
    f: impl FnOnce(&mut Parser) -> Result<T, QhlError>,
) -> Result<T, QhlError> {
    let toks = lex(src)?;
    let mut p = Parser::new(toks, decls.clone());
    let out = f(&mut p)?;
    p.expect_eof()?;
    Ok(out)
}

struct Parser {
    toks: Vec<(Tok, Pos)>,
    idx: usize,
    depth: usize,
    decls: Declarations,
    programs: BTreeMap<String, Command>,
    triples: BTreeMap<String, Triple>,
    proofs: BTreeMap<String, ProofScript>,
    states: BTreeMap<String, PureCqState>,
}

impl Parser {
    fn new(toks: Vec<(Tok, Pos)>, decls: Declarations) -> Self {
        Parser {
            toks,
            idx: 0,
            depth: 0,
            decls,
            programs: BTreeMap::new(),
            triples: BTreeMap::new(),
            proofs: BTreeMap::new(),
            states: BTreeMap::new(),
        }
    }

    // ---- token plumbing ----

    fn pos(&self) -> Pos {
        self.toks
            .get(self.idx)
            .or_else(|| self.toks.last())
            .map(|(_, p)| *p)
            .unwrap_or(Pos { line: 1, col: 1 })
    }

    fn err<T>(&self, msg: impl Into<String>) -> Result<T, QhlError> {
        let p = self.pos();
        Err(QhlError::Parse {
            line: p.line,
            col: p.col,
            msg: msg.into(),
        })
    }

    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.idx).map(|(t, _)| t)
    }

    fn peek2(&self) -> Option<&Tok> {
        self.toks.get(self.idx + 1).map(|(t, _)| t)
    }

    fn expect(&mut self, want: &Tok) -> Result<(), QhlError> {
        match self.peek() {
            Some(t) if t == want => {
                self.idx += 1;
                Ok(())
            }
            Some(t) => {
                let d = t.describe();
                self.err(format!("expected {}, found {}", want.describe(), d))
            }
            None => self.err(format!("expected {}, found end of input", want.describe())),
        }
    }

    fn expect_ident(&mut self) -> Result<String, QhlError> {
        match self.peek() {
            Some(Tok::Ident(s)) => {
                let s = s.clone();
                self.idx += 1;
                Ok(s)
            }
            Some(t) => {
                let d = t.describe();
                self.err(format!("expected identifier, found {d}"))
            }
            None => self.err("expected identifier, found end of input"),
        }
    }

    fn expect_keyword(&mut self, kw: &str) -> Result<(), QhlError> {
        match self.peek() {
            Some(Tok::Ident(s)) if s == kw => {
                self.idx += 1;
                Ok(())
            }
            Some(t) => {
                let d = t.describe();
                self.err(format!("expected `{kw}`, found {d}"))
            }
            None => self.err(format!("expected `{kw}`, found end of input")),
        }
    }

    fn eat(&mut self, want: &Tok) -> bool {
        if self.peek() == Some(want) {
            self.idx += 1;
            true
        } else {
            false
        }
    }

    fn eat_keyword(&mut self, kw: &str) -> bool {
        match self.peek() {
            Some(Tok::Ident(s)) if s == kw => {
                self.idx += 1;
                true
            }
            _ => false,
        }
    }

    fn at_keyword(&self, kw: &str) -> bool {
        matches!(self.peek(), Some(Tok::Ident(s)) if s == kw)
    }

    fn expect_int(&mut self) -> Result<i64, QhlError> {
        match self.peek() {
            Some(Tok::Int(n)) => {
                let n = *n;
                self.idx += 1;
                Ok(n)
            }
            Some(t) => {
                let d = t.describe();
                self.err(format!("expected integer, found {d}"))
            }
            None => self.err("expected integer, found end of input"),
        }
    }

    fn expect_signed_int(&mut self) -> Result<i64, QhlError> {
        if self.eat(&Tok::Minus) {
            Ok(-self.expect_int()?)
        } else {
            self.expect_int()
        }
    }

    fn expect_str(&mut self) -> Result<String, QhlError> {
        match self.peek() {
            Some(Tok::Str(s)) => {
                let s = s.clone();
                self.idx += 1;
                Ok(s)
            }
            Some(t) => {
                let d = t.describe();
                self.err(format!("expected string literal, found {d}"))
            }
            None => self.err("expected string literal, found end of input"),
        }
    }

    fn expect_eof(&mut self) -> Result<(), QhlError> {
        match self.peek() {
            None => Ok(()),
            Some(t) => {
                let d = t.describe();
                self.err(format!("unexpected trailing input: {d}"))
            }
        }
    }

    // ---- file level ----

    fn parse_file(&mut self) -> Result<SpecFile, QhlError> {
        while let Some(Tok::Ident(kw)) = self.peek() {
            match kw.as_str() {
                "qubits" => self.parse_qubits_decl()?,
                "vars" => self.parse_vars_decl()?,
                "logvars" => self.parse_logvars_decl()?,
                "gate" => self.parse_gate_decl()?,
                "oracle" => self.parse_oracle_decl()?,
                "projector" => self.parse_projector_decl()?,
                "bind" => self.parse_bind_decl()?,
                "state" => self.parse_state_decl()?,
                "program" => self.parse_program_section()?,
                "triple" => self.parse_triple_section()?,
                "proof" => self.parse_proof_section()?,
                other => {
                    let other = other.to_string();
                    return self.err(format!("unknown declaration or section `{other}`"));
                }
            }
        }
        self.expect_eof()?;
        Ok(SpecFile {
            decls: self.decls.clone(),
            programs: std::mem::take(&mut self.programs),
            triples: std::mem::take(&mut self.triples),
            proofs: std::mem::take(&mut self.proofs),
            states: std::mem::take(&mut self.states),
        })
    }

    fn parse_qubits_decl(&mut self) -> Result<(), QhlError> {
        self.expect_keyword("qubits")?;
        let n = self.expect_int()?;
        if !(0..=24).contains(&n) {
            return self.err("qubit count must lie in 0..=24");
        }
        self.decls.num_qubits = n as usize;
        Ok(())
    }

    fn parse_vars_decl(&mut self) -> Result<(), QhlError> {
        self.expect_keyword("vars")?;
        loop {
            let name = self.expect_ident()?;
            if !self.decls.vars.contains(&name) {
                self.decls.vars.push(name);
            }
            if !self.eat(&Tok::Comma) {
                break;
            }
        }
        Ok(())
    }

    fn parse_logvars_decl(&mut self) -> Result<(), QhlError> {
        self.expect_keyword("logvars")?;
        loop {
            let name = self.expect_ident()?;
            self.expect(&Tok::Colon)?;
            self.expect(&Tok::LBracket)?;
            let lo = self.expect_signed_int()?;
            self.expect(&Tok::Comma)?;
            let hi = self.expect_signed_int()?;
            self.expect(&Tok::RBracket)?;
            if lo > hi {
                return self.err(format!(
                    "empty range [{lo},{hi}] for logical variable {name}"
                ));
            }
            self.decls.logvar_ranges.insert(name, (lo, hi));
            if !self.eat(&Tok::Comma) {
                break;
            }
        }
        Ok(())
    }

    fn parse_gate_decl(&mut self) -> Result<(), QhlError> {
        self.expect_keyword("gate")?;
        let name = self.expect_ident()?;
        self.expect_keyword("dim")?;
        let dim = self.expect_int()? as usize;
        if dim < 2 || !dim.is_power_of_two() {
            return self.err(format!(
                "gate {name}: dimension {dim} is not a power of two"
            ));
        }
        self.expect_keyword("matrix")?;
        let entries = self.parse_complex_list_bracketed()?;
        if entries.len() != dim * dim {
            return self.err(format!(
                "gate {name}: expected {} matrix entries, found {}",
                dim * dim,
                entries.len()
            ));
        }
        let m = CMatrix::new(dim, entries);
        if let Err(e) = linalg::validate_unitary(&name, &m, TOL) {
            return self.err(e.to_string());
        }
        self.decls.gates.insert(name, Arc::new(m));
        Ok(())
    }

    fn parse_oracle_decl(&mut self) -> Result<(), QhlError> {
        self.expect_keyword("oracle")?;
        let name = self.expect_ident()?;
        self.expect_keyword("table")?;
        let mut rows: BTreeMap<usize, u8> = BTreeMap::new();
        let mut width = None;
        loop {
            let input = self.expect_str()?;
            if input.is_empty() || !input.bytes().all(|b| b == b'0' || b == b'1') {
                return self.err(format!("oracle {name}: input {input:?} is not a bitstring"));
            }
            match width {
                None => width = Some(input.len()),
                Some(w) if w != input.len() => {
                    return self.err(format!("oracle {name}: inconsistent input widths"));
                }
                _ => {}
            }
            self.expect(&Tok::Arrow)?;
            let out = self.expect_int()?;
            if out != 0 && out != 1 {
                return self.err(format!("oracle {name}: output must be 0 or 1"));
            }
            let key = usize::from_str_radix(&input, 2).unwrap();
            if rows.insert(key, out as u8).is_some() {
                return self.err(format!(
                    "oracle {name}: duplicate table entry for {input:?}"
                ));
            }
            if !self.eat(&Tok::Comma) {
                break;
            }
        }
        let k = width.unwrap();
        if rows.len() != 1 << k {
            return self.err(format!(
                "oracle {name}: table is incomplete ({} of {} inputs)",
                rows.len(),
                1usize << k
            ));
        }
        let outputs: Vec<u8> = (0..1usize << k).map(|i| rows[&i]).collect();
        self.decls.oracles.insert(
            name,
            OracleTable {
                input_bits: k,
                outputs,
            },
        );
        Ok(())
    }

    fn parse_projector_decl(&mut self) -> Result<(), QhlError> {
        self.expect_keyword("projector")?;
        let name = self.expect_ident()?;
        if self.eat_keyword("mask") {
            let mut patterns = Vec::new();
            loop {
                patterns.push(self.parse_mask_pattern()?);
                if !self.eat(&Tok::Comma) {
                    break;
                }
            }
            self.decls
                .projectors
                .insert(name, ProjectorSpec::Mask(patterns));
        } else if self.eat_keyword("matrix") {
            let entries = self.parse_complex_list_bracketed()?;
            let dim = 1usize << self.decls.num_qubits;
            if entries.len() != dim * dim {
                return self.err(format!(
                    "projector {name}: expected {} entries for {} qubits, found {}",
                    dim * dim,
                    self.decls.num_qubits,
                    entries.len()
                ));
            }
            let m = CMatrix::new(dim, entries);
            if let Err(e) = linalg::validate_projector(&name, &m, TOL) {
                return self.err(e.to_string());
            }
            self.decls.projectors.insert(
                name.clone(),
                ProjectorSpec::Dense {
                    name: Some(name),
                    matrix: Arc::new(m),
                },
            );
        } else {
            return self.err("expected `mask` or `matrix` in projector declaration");
        }
        Ok(())
    }

    fn parse_mask_pattern(&mut self) -> Result<MaskPattern, QhlError> {
        let s = self.expect_str()?;
        if s.len() != self.decls.num_qubits {
            return self.err(format!(
                "mask pattern {:?} must have one position per qubit ({})",
                s, self.decls.num_qubits
            ));
        }
        if !s.bytes().all(|b| matches!(b, b'0' | b'1' | b'*')) {
            return self.err(format!("mask pattern {s:?} may only contain 0, 1, *"));
        }
        Ok(MaskPattern(s))
    }

    fn parse_bind_decl(&mut self) -> Result<(), QhlError> {
        self.expect_keyword("bind")?;
        loop {
            if self.eat(&Tok::Dollar) {
                let name = self.expect_ident()?;
                self.expect(&Tok::Eq)?;
                let v = self.parse_signed_real()?;
                self.decls.real_binds.insert(name, v);
            } else {
                let name = self.expect_ident()?;
                self.expect(&Tok::Eq)?;
                let v = self.expect_signed_int()?;
                self.decls.int_binds.insert(name, v);
            }
            if !self.eat(&Tok::Comma) {
                break;
            }
        }
        Ok(())
    }

    fn parse_signed_real(&mut self) -> Result<f64, QhlError> {
        let neg = self.eat(&Tok::Minus);
        let v = match self.peek() {
            Some(Tok::Real(v)) => {
                let v = *v;
                self.idx += 1;
                v
            }
            Some(Tok::Int(n)) => {
                let v = *n as f64;
                self.idx += 1;
                v
            }
            _ => return self.err("expected a number"),
        };
        Ok(if neg { -v } else { v })
    }

    fn parse_state_decl(&mut self) -> Result<(), QhlError> {
        self.expect_keyword("state")?;
        let name = self.expect_ident()?;
        self.expect(&Tok::LBrace)?;
        let mut store = ClassicalStore::zeroed(&self.decls.vars);
        if !self.at_keyword("ket") {
            loop {
                let var = self.expect_ident()?;
                if !self.decls.vars.contains(&var) {
                    return self.err(format!("state {name}: undeclared variable {var}"));
                }
                self.expect(&Tok::Eq)?;
                let v = self.expect_signed_int()?;
                store.set(&var, v);
                if !self.eat(&Tok::Comma) {
                    break;
                }
            }
            self.expect(&Tok::Semi)?;
        }
        self.expect_keyword("ket")?;
        let m = self.decls.num_qubits;
        let quantum = match self.peek() {
            Some(Tok::Str(bits)) => {
                let bits = bits.clone();
                self.idx += 1;
                if bits.len() != m || !bits.bytes().all(|b| b == b'0' || b == b'1') {
                    return self.err(format!(
                        "state {name}: ket {bits:?} must be {m} bits of 0/1"
                    ));
                }
                let index = if m == 0 {
                    0
                } else {
                    usize::from_str_radix(&bits, 2).unwrap()
                };
                QuantumState::basis(m, index)
            }
            Some(Tok::LBracket) => {
                let amps = self.parse_complex_list_bracketed()?;
                if amps.len() != 1 << m {
                    return self.err(format!(
                        "state {name}: expected {} amplitudes, found {}",
                        1usize << m,
                        amps.len()
                    ));
                }
                let v = QuantumState::new(amps);
                if (v.norm() - 1.0).abs() > TOL {
                    return self.err(format!(
                        "state {name}: amplitude vector has norm {}, expected 1",
                        v.norm()
                    ));
                }
                v
            }
            _ => return self.err("expected a bitstring or amplitude list after `ket`"),
        };
        self.expect(&Tok::RBrace)?;
        self.states.insert(name, PureCqState::new(store, quantum));
        Ok(())
    }

    // ---- complex literals ----

    fn parse_complex_list_bracketed(&mut self) -> Result<Vec<Complex64>, QhlError> {
        self.expect(&Tok::LBracket)?;
        let mut out = Vec::new();
        if !self.eat(&Tok::RBracket) {
            loop {
                out.push(self.parse_complex()?);
                if !self.eat(&Tok::Comma) {
                    break;
                }
            }
            self.expect(&Tok::RBracket)?;
        }
        Ok(out)
    }

    /// `a`, `ai`, `a+bi`, `a-bi`, with optional leading minus on `a`.
    fn parse_complex(&mut self) -> Result<Complex64, QhlError> {
        let a = self.parse_signed_real()?;
        if self.eat_keyword("i") {
            return Ok(Complex64::new(0.0, a));
        }
        let save = self.idx;
        let sign = if self.eat(&Tok::Plus) {
            1.0
        } else if self.eat(&Tok::Minus) {
            -1.0
        } else {
            return Ok(Complex64::new(a, 0.0));
        };
        // only treat `+ b i` as imaginary part when the `i` suffix is there
        match self.peek() {
            Some(Tok::Real(_)) | Some(Tok::Int(_)) => {
                let b = self.parse_signed_real()?;
                if self.eat_keyword("i") {
                    Ok(Complex64::new(a, sign * b))
                } else {
                    self.idx = save;
                    Ok(Complex64::new(a, 0.0))
                }
            }
            _ => {
                self.idx = save;
                Ok(Complex64::new(a, 0.0))
            }
        }
    }

    // ---- arithmetic and boolean expressions ----

    fn parse_aexpr(&mut self) -> Result<ArithExpr, QhlError> {
        self.descend()?;
        let out = self.parse_aexpr_inner();
        self.depth -= 1;
        out
    }

    fn parse_aexpr_inner(&mut self) -> Result<ArithExpr, QhlError> {
        let mut lhs = self.parse_aterm()?;
        loop {
            let op = if self.eat(&Tok::Plus) {
                Aop::Add
            } else if self.eat(&Tok::Minus) {
                Aop::Sub
            } else {
                break;
            };
            let rhs = self.parse_aterm()?;
            lhs = ArithExpr::binop(op, lhs, rhs);
        }
        Ok(lhs)
    }

    fn parse_aterm(&mut self) -> Result<ArithExpr, QhlError> {
        let mut lhs = self.parse_afactor()?;
        while self.eat(&Tok::Star) {
            let rhs = self.parse_afactor()?;
            lhs = ArithExpr::binop(Aop::Mul, lhs, rhs);
        }
        Ok(lhs)
    }

    fn parse_afactor(&mut self) -> Result<ArithExpr, QhlError> {
        match self.peek() {
            Some(Tok::Int(n)) => {
                let n = *n;
                self.idx += 1;
                Ok(ArithExpr::IntConst(n))
            }
            Some(Tok::Minus) => {
                self.idx += 1;
                let n = self.expect_int()?;
                Ok(ArithExpr::IntConst(-n))
            }
            Some(Tok::Ident(name)) => {
                let name = name.clone();
                self.idx += 1;
                if self.decls.vars.contains(&name) {
                    Ok(ArithExpr::ProgVar(name))
                } else if self.decls.logvar_ranges.contains_key(&name) {
                    Ok(ArithExpr::LogVar(name))
                } else {
                    self.err(format!("undeclared variable {name}"))
                }
            }
            Some(Tok::LParen) => {
                self.idx += 1;
                let e = self.parse_aexpr()?;
                self.expect(&Tok::RParen)?;
                Ok(e)
            }
            _ => self.err("expected an arithmetic expression"),
        }
    }

    fn parse_rop(&mut self) -> Result<Rop, QhlError> {
        let op = match self.peek() {
            Some(Tok::Eq) => Rop::Eq,
            Some(Tok::Ne) => Rop::Ne,
            Some(Tok::Lt) => Rop::Lt,
            Some(Tok::Le) => Rop::Le,
            Some(Tok::Gt) => Rop::Gt,
            Some(Tok::Ge) => Rop::Ge,
            _ => return self.err("expected a relational operator"),
        };
        self.idx += 1;
        Ok(op)
    }

    fn parse_bexpr(&mut self) -> Result<BoolExpr, QhlError> {
        let mut lhs = self.parse_band()?;
        while self.eat(&Tok::OrOr) {
            let rhs = self.parse_band()?;
            // a || b desugars to !(!a && !b)
            lhs = BoolExpr::not(BoolExpr::and(BoolExpr::not(lhs), BoolExpr::not(rhs)));
        }
        Ok(lhs)
    }

    fn parse_band(&mut self) -> Result<BoolExpr, QhlError> {
        let mut lhs = self.parse_bunary()?;
        while self.eat(&Tok::AndAnd) {
            let rhs = self.parse_bunary()?;
            lhs = BoolExpr::and(lhs, rhs);
        }
        Ok(lhs)
    }

    fn parse_bunary(&mut self) -> Result<BoolExpr, QhlError> {
        if self.eat(&Tok::Bang) {
            return Ok(BoolExpr::not(self.parse_bunary()?));
        }
        if self.eat_keyword("true") {
            return Ok(BoolExpr::True);
        }
        if self.eat_keyword("false") {
            return Ok(BoolExpr::False);
        }
        if self.peek() == Some(&Tok::LParen) {
            let save = self.idx;
            self.idx += 1;
            if let Ok(inner) = self.parse_bexpr() {
                if self.eat(&Tok::RParen) {
                    return Ok(inner);
                }
            }
            self.idx = save;
        }
        let l = self.parse_aexpr()?;
        let op = self.parse_rop()?;
        let r = self.parse_aexpr()?;
        Ok(BoolExpr::Rel(op, l, r))
    }

    /// Guards must be program-level (no logical variables).
    fn parse_guard(&mut self) -> Result<BoolExpr, QhlError> {
        let start = self.pos();
        let b = self.parse_bexpr()?;
        if !guard_is_program_level(&b) {
            return Err(QhlError::Parse {
                line: start.line,
                col: start.col,
                msg: "guards may not contain logical variables".into(),
            });
        }
        Ok(b)
    }

    // ---- commands ----

    /// Nesting guard shared by the recursive entry points; malformed inputs
    /// with thousands of opening brackets become parse errors instead of
    /// exhausting the stack.
    fn descend(&mut self) -> Result<(), QhlError> {
        self.depth += 1;
        if self.depth > 256 {
            return self.err("nesting too deep");
        }
        Ok(())
    }

    pub fn parse_cmd(&mut self) -> Result<Command, QhlError> {
        self.descend()?;
        let out = self.parse_cmd_inner();
        self.depth -= 1;
        out
    }

    fn parse_cmd_inner(&mut self) -> Result<Command, QhlError> {
        let first = self.parse_simple_cmd()?;
        if self.eat(&Tok::Semi) {
            let rest = self.parse_cmd()?;
            Ok(Command::seq(first, rest))
        } else {
            Ok(first)
        }
    }

    fn parse_simple_cmd(&mut self) -> Result<Command, QhlError> {
        if self.eat_keyword("skip") {
            return Ok(Command::Skip);
        }
        if self.eat_keyword("if") {
            let guard = self.parse_guard()?;
            self.expect_keyword("then")?;
            let then_cmd = self.parse_simple_cmd()?;
            self.expect_keyword("else")?;
            let else_cmd = self.parse_simple_cmd()?;
            return Ok(Command::If(guard, Box::new(then_cmd), Box::new(else_cmd)));
        }
        if self.eat_keyword("while") {
            let guard = self.parse_guard()?;
            self.expect_keyword("do")?;
            let body = self.parse_simple_cmd()?;
            return Ok(Command::While(guard, Box::new(body)));
        }
        if self.eat(&Tok::LBrace) {
            let c = self.parse_cmd()?;
            self.expect(&Tok::RBrace)?;
            return Ok(c);
        }
        if self.eat(&Tok::LParen) {
            let c = self.parse_cmd()?;
            self.expect(&Tok::RParen)?;
            return Ok(c);
        }
        let name = self.expect_ident()?;
        match self.peek() {
            Some(Tok::LeftArrow) => {
                self.check_prog_var(&name)?;
                self.idx += 1;
                let start = self.pos();
                let e = self.parse_aexpr()?;
                if !e.is_program_level() {
                    return Err(QhlError::Parse {
                        line: start.line,
                        col: start.col,
                        msg: "assignment right-hand sides may not contain logical variables".into(),
                    });
                }
                Ok(Command::Assign(name, e))
            }
            Some(Tok::RandArrow) => {
                self.idx += 1;
                self.check_prog_var(&name)?;
                self.parse_rand_assign(name)
            }
            Some(Tok::MeasArrow) => {
                self.idx += 1;
                self.check_prog_var(&name)?;
                let q = self.parse_qubit_ref()?;
                Ok(Command::Measure(name, q))
            }
            Some(Tok::LBracket) => {
                let app = self.parse_gate_app(name)?;
                Ok(Command::Unitary(app))
            }
            _ => self.err(format!("expected `<-`, `<-$`, `<<=` or `[` after `{name}`")),
        }
    }

    fn check_prog_var(&self, name: &str) -> Result<(), QhlError> {
        if self.decls.vars.contains(&name.to_string()) {
            Ok(())
        } else {
            self.err(format!("undeclared program variable {name}"))
        }
    }

    fn parse_rand_assign(&mut self, var: String) -> Result<Command, QhlError> {
        self.expect(&Tok::LBrace)?;
        let mut branches = Vec::new();
        loop {
            let p = self.parse_signed_real()?;
            self.expect(&Tok::Colon)?;
            let v = self.expect_signed_int()?;
            if p <= 0.0 || p >= 1.0 {
                return self.err(format!(
                    "random assignment probability {p} must lie strictly between 0 and 1"
                ));
            }
            branches.push((p, v));
            if !self.eat(&Tok::Comma) {
                break;
            }
        }
        self.expect(&Tok::RBrace)?;
        let total: f64 = branches.iter().map(|(p, _)| p).sum();
        if (total - 1.0).abs() > TOL {
            return self.err(format!("probabilities sum to {total} != 1"));
        }
        Ok(Command::RandAssign(var, branches))
    }

    fn parse_qubit_ref(&mut self) -> Result<usize, QhlError> {
        let idx = match self.peek() {
            Some(Tok::Int(n)) => {
                let n = *n;
                self.idx += 1;
                n
            }
            Some(Tok::Ident(s)) if s.starts_with('q') && s[1..].parse::<i64>().is_ok() => {
                let n = s[1..].parse::<i64>().unwrap();
                self.idx += 1;
                n
            }
            _ => return self.err("expected a qubit reference like `q1`"),
        };
        let m = self.decls.num_qubits as i64;
        if idx < 1 || idx > m {
            return self.err(format!("qubit index {idx} outside 1..={m}"));
        }
        Ok(idx as usize)
    }

    fn parse_gate_app(&mut self, name: String) -> Result<GateApp, QhlError> {
        let gate = if let Some(b) = BuiltinGate::from_name(&name) {
            GateRef::Builtin(b)
        } else if self.decls.oracles.contains_key(&name) {
            GateRef::Oracle(name.clone())
        } else if self.decls.gates.contains_key(&name) {
            GateRef::User(name.clone())
        } else {
            return self.err(format!("unknown gate {name}"));
        };
        self.expect(&Tok::LBracket)?;
        let mut qubits = Vec::new();
        loop {
            qubits.push(self.parse_qubit_ref()?);
            if !self.eat(&Tok::Comma) {
                break;
            }
        }
        self.expect(&Tok::RBracket)?;
        let arity = self.decls.gate_arity(&gate).map_err(|e| {
            let p = self.pos();
            QhlError::Parse {
                line: p.line,
                col: p.col,
                msg: e.to_string(),
            }
        })?;
        if qubits.len() != arity {
            return self.err(format!(
                "gate {} expects {arity} qubits, got {}",
                gate.display_name(),
                qubits.len()
            ));
        }
        for i in 0..qubits.len() {
            for j in i + 1..qubits.len() {
                if qubits[i] == qubits[j] {
                    return self.err(format!(
                        "gate {} applied to duplicate qubit q{}",
                        gate.display_name(),
                        qubits[i]
                    ));
                }
            }
        }
        Ok(GateApp { gate, qubits })
    }

    // ---- deterministic assertions ----

    pub fn parse_dassert(&mut self) -> Result<DetAssertion, QhlError> {
        self.descend()?;
        let out = self.parse_dassert_inner();
        self.depth -= 1;
        out
    }

    fn parse_dassert_inner(&mut self) -> Result<DetAssertion, QhlError> {
        if self.eat_keyword("forall") {
            let var = self.expect_ident()?;
            if !self.decls.logvar_ranges.contains_key(&var) {
                return self.err(format!(
                    "quantified variable {var} has no declared range (add it to `logvars`)"
                ));
            }
            self.expect(&Tok::Dot)?;
            let body = self.parse_dassert()?;
            return Ok(DetAssertion::Forall {
                var,
                body: Box::new(body),
            });
        }
        let lhs = self.parse_dor()?;
        if self.eat(&Tok::Arrow) {
            let rhs = self.parse_dassert()?;
            return Ok(DetAssertion::implies(lhs, rhs));
        }
        Ok(lhs)
    }

    fn parse_dor(&mut self) -> Result<DetAssertion, QhlError> {
        let mut lhs = self.parse_dand()?;
        while self.eat(&Tok::OrOr) {
            let rhs = self.parse_dand()?;
            lhs = DetAssertion::or(lhs, rhs);
        }
        Ok(lhs)
    }

    fn parse_dand(&mut self) -> Result<DetAssertion, QhlError> {
        let mut lhs = self.parse_dunary()?;
        while self.eat(&Tok::AndAnd) {
            let rhs = self.parse_dunary()?;
            lhs = DetAssertion::and(lhs, rhs);
        }
        Ok(lhs)
    }

    fn parse_dunary(&mut self) -> Result<DetAssertion, QhlError> {
        if self.eat(&Tok::Bang) {
            return Ok(DetAssertion::not(self.parse_dunary()?));
        }
        if self.peek() == Some(&Tok::LBracket) {
            self.idx += 1;
            if self.eat_keyword("Proj") {
                let q = self.parse_qubit_ref()?;
                self.expect(&Tok::Comma)?;
                let outcome = self.parse_bit()?;
                self.expect(&Tok::RBracket)?;
                let body = self.parse_dunary()?;
                return Ok(DetAssertion::box_proj(q, outcome, body));
            }
            let name = self.expect_ident()?;
            let app = self.parse_gate_app(name)?;
            self.expect(&Tok::RBracket)?;
            let body = self.parse_dunary()?;
            return Ok(DetAssertion::box_u(app, body));
        }
        self.parse_datom()
    }

    fn parse_bit(&mut self) -> Result<u8, QhlError> {
        let b = self.expect_int()?;
        if b != 0 && b != 1 {
            return self.err("expected 0 or 1");
        }
        Ok(b as u8)
    }

    fn parse_datom(&mut self) -> Result<DetAssertion, QhlError> {
        if self.eat_keyword("true") {
            return Ok(DetAssertion::True);
        }
        if self.eat_keyword("false") {
            return Ok(DetAssertion::False);
        }
        if self.at_keyword("P0") || self.at_keyword("P1") {
            let outcome = if self.at_keyword("P0") { 0 } else { 1 };
            self.idx += 1;
            self.expect(&Tok::LParen)?;
            let q = self.parse_qubit_ref()?;
            self.expect(&Tok::RParen)?;
            return Ok(DetAssertion::proj(q, outcome));
        }
        if self.at_keyword("bigand") {
            self.idx += 1;
            self.expect(&Tok::LBrace)?;
            let mut items = vec![self.parse_dassert()?];
            while self.eat(&Tok::Semi) {
                items.push(self.parse_dassert()?);
            }
            self.expect(&Tok::RBrace)?;
            return Ok(DetAssertion::BigAnd(items));
        }
        if self.peek() == Some(&Tok::LParen) {
            let save = self.idx;
            self.idx += 1;
            if let Ok(inner) = self.parse_dassert() {
                if self.eat(&Tok::RParen) {
                    return Ok(inner);
                }
            }
            self.idx = save;
        }
        let l = self.parse_aexpr()?;
        let op = self.parse_rop()?;
        let r = self.parse_aexpr()?;
        Ok(DetAssertion::Rel(op, l, r))
    }

    // ---- real expressions ----

    pub fn parse_rexpr(&mut self) -> Result<RealExpr, QhlError> {
        self.descend()?;
        let out = self.parse_rexpr_inner();
        self.depth -= 1;
        out
    }

    fn parse_rexpr_inner(&mut self) -> Result<RealExpr, QhlError> {
        let mut lhs = self.parse_rterm()?;
        loop {
            let op = if self.eat(&Tok::Plus) {
                Aop::Add
            } else if self.eat(&Tok::Minus) {
                Aop::Sub
            } else {
                break;
            };
            let rhs = self.parse_rterm()?;
            lhs = RealExpr::binop(op, lhs, rhs);
        }
        Ok(lhs)
    }

    fn parse_rterm(&mut self) -> Result<RealExpr, QhlError> {
        let mut lhs = self.parse_rfactor()?;
        while self.eat(&Tok::Star) {
            let rhs = self.parse_rfactor()?;
            lhs = RealExpr::binop(Aop::Mul, lhs, rhs);
        }
        Ok(lhs)
    }

    fn parse_rfactor(&mut self) -> Result<RealExpr, QhlError> {
        match self.peek() {
            Some(Tok::Real(v)) => {
                let v = *v;
                self.idx += 1;
                Ok(RealExpr::Const(v))
            }
            Some(Tok::Int(n)) => {
                let v = *n as f64;
                self.idx += 1;
                Ok(RealExpr::Const(v))
            }
            Some(Tok::Minus) => {
                self.idx += 1;
                let v = self.parse_signed_real()?;
                Ok(RealExpr::Const(-v))
            }
            Some(Tok::Dollar) => {
                self.idx += 1;
                let name = self.expect_ident()?;
                Ok(RealExpr::Var(name))
            }
            Some(Tok::Ident(s)) if s == "P" && self.peek2() == Some(&Tok::LBracket) => {
                self.idx += 2;
                let phi = self.parse_dassert()?;
                self.expect(&Tok::RBracket)?;
                Ok(RealExpr::prob(phi))
            }
            Some(Tok::Ident(s)) if s == "bigsum" => {
                self.idx += 1;
                self.expect(&Tok::LBrace)?;
                let mut items = vec![self.parse_rexpr()?];
                while self.eat(&Tok::Semi) {
                    items.push(self.parse_rexpr()?);
                }
                self.expect(&Tok::RBrace)?;
                Ok(RealExpr::BoundedSum(items))
            }
            Some(Tok::LParen) => {
                let save = self.idx;
                self.idx += 1;
                // cq-conditional `(phi => Q)`
                if let Ok(phi) = self.parse_dassert() {
                    if self.eat(&Tok::FatArrow) {
                        let q = self.parse_projref()?;
                        self.expect(&Tok::RParen)?;
                        return Ok(RealExpr::cq_cond(phi, q));
                    }
                }
                self.idx = save;
                self.idx += 1;
                let r = self.parse_rexpr()?;
                self.expect(&Tok::RParen)?;
                Ok(r)
            }
            _ => self.err("expected a real expression"),
        }
    }

    fn parse_projref(&mut self) -> Result<ProjectorSpec, QhlError> {
        if self.eat_keyword("mask") {
            self.expect(&Tok::LParen)?;
            let mut patterns = Vec::new();
            if self.peek() != Some(&Tok::RParen) {
                loop {
                    patterns.push(self.parse_mask_pattern()?);
                    if !self.eat(&Tok::Comma) {
                        break;
                    }
                }
            }
            self.expect(&Tok::RParen)?;
            return Ok(ProjectorSpec::Mask(patterns));
        }
        if self.eat_keyword("matrix") {
            self.expect(&Tok::LParen)?;
            let dim = self.expect_int()? as usize;
            self.expect(&Tok::Semi)?;
            let mut entries = Vec::new();
            loop {
                entries.push(self.parse_complex()?);
                if !self.eat(&Tok::Comma) {
                    break;
                }
            }
            self.expect(&Tok::RParen)?;
            if entries.len() != dim * dim {
                return self.err(format!(
                    "inline matrix: expected {} entries, found {}",
                    dim * dim,
                    entries.len()
                ));
            }
            let m = CMatrix::new(dim, entries);
            // Inline operators come from conjugation output; they must be
            // Hermitian but need not be idempotent.
            if !m.is_hermitian(TOL) {
                return self.err("inline matrix is not Hermitian");
            }
            return Ok(ProjectorSpec::Dense {
                name: None,
                matrix: Arc::new(m),
            });
        }
        let name = self.expect_ident()?;
        match self.decls.projectors.get(&name) {
            Some(p) => Ok(p.clone()),
            None => self.err(format!("unknown projector {name}")),
        }
    }

    // ---- probabilistic formulas ----

    pub fn parse_passert(&mut self) -> Result<ProbFormula, QhlError> {
        self.descend()?;
        let out = self.parse_passert_inner();
        self.depth -= 1;
        out
    }

    fn parse_passert_inner(&mut self) -> Result<ProbFormula, QhlError> {
        let mut lhs = self.parse_pand()?;
        while self.eat(&Tok::OrOr) {
            let rhs = self.parse_pand()?;
            lhs = ProbFormula::not(ProbFormula::and(
                ProbFormula::not(lhs),
                ProbFormula::not(rhs),
            ));
        }
        Ok(lhs)
    }

    fn parse_pand(&mut self) -> Result<ProbFormula, QhlError> {
        let mut lhs = self.parse_punary()?;
        while self.eat(&Tok::AndAnd) {
            let rhs = self.parse_punary()?;
            lhs = ProbFormula::and(lhs, rhs);
        }
        Ok(lhs)
    }

    fn parse_punary(&mut self) -> Result<ProbFormula, QhlError> {
        if self.eat(&Tok::Bang) {
            return Ok(ProbFormula::not(self.parse_punary()?));
        }
        if self.peek() == Some(&Tok::LParen) {
            let save = self.idx;
            self.idx += 1;
            if let Ok(inner) = self.parse_passert() {
                if self.eat(&Tok::RParen) {
                    return Ok(inner);
                }
            }
            self.idx = save;
        }
        let l = self.parse_rexpr()?;
        let op = self.parse_rop()?;
        let r = self.parse_rexpr()?;
        Ok(ProbFormula::Rel(op, l, r))
    }

    // ---- sections ----

    fn parse_program_section(&mut self) -> Result<(), QhlError> {
        self.expect_keyword("program")?;
        let name = self.expect_ident()?;
        self.expect(&Tok::LBrace)?;
        let cmd = self.parse_cmd()?;
        self.expect(&Tok::RBrace)?;
        if self.programs.insert(name.clone(), cmd).is_some() {
            return self.err(format!("duplicate program {name}"));
        }
        Ok(())
    }

    fn parse_triple_section(&mut self) -> Result<(), QhlError> {
        self.expect_keyword("triple")?;
        let name = self.expect_ident()?;

        let save = self.idx;
        let det = self.try_parse_triple_section_body(true);
        let triple = match det {
            Ok(t) => t,
            Err(det_err) => {
                self.idx = save;
                match self.try_parse_triple_section_body(false) {
                    Ok(t) => t,
                    Err(prob_err) => {
                        return Err(pick_error(det_err, prob_err));
                    }
                }
            }
        };
        if self.triples.insert(name.clone(), triple).is_some() {
            return self.err(format!("duplicate triple {name}"));
        }
        Ok(())
    }

    fn try_parse_triple_section_body(&mut self, det: bool) -> Result<Triple, QhlError> {
        self.expect(&Tok::LBrace)?;
        let pre_d;
        let pre_p;
        if det {
            pre_d = Some(self.parse_dassert()?);
            pre_p = None;
        } else {
            pre_d = None;
            pre_p = Some(self.parse_passert()?);
        }
        self.expect(&Tok::RBrace)?;
        let prog_name = self.expect_ident()?;
        let prog = match self.programs.get(&prog_name) {
            Some(c) => c.clone(),
            None => return self.err(format!("unknown program {prog_name}")),
        };
        self.expect(&Tok::LBrace)?;
        let body = if det {
            let post = self.parse_dassert()?;
            TripleBody::Det {
                pre: pre_d.unwrap(),
                post,
            }
        } else {
            let post = self.parse_passert()?;
            TripleBody::Prob {
                pre: pre_p.unwrap(),
                post,
            }
        };
        self.expect(&Tok::RBrace)?;
        Ok(Triple {
            prog,
            program_name: Some(prog_name),
            body,
        })
    }

    fn parse_proof_section(&mut self) -> Result<(), QhlError> {
        self.expect_keyword("proof")?;
        let name = self.expect_ident()?;
        self.expect(&Tok::LBrace)?;
        let mut steps: Vec<ProofStep> = Vec::new();
        while self.peek() != Some(&Tok::RBrace) {
            let step = self.parse_proof_step(&steps)?;
            steps.push(step);
        }
        self.expect(&Tok::RBrace)?;
        if steps.is_empty() {
            return self.err(format!("proof {name} has no steps"));
        }
        if self
            .proofs
            .insert(name.clone(), ProofScript { steps })
            .is_some()
        {
            return self.err(format!("duplicate proof {name}"));
        }
        Ok(())
    }

    fn parse_proof_step(&mut self, earlier: &[ProofStep]) -> Result<ProofStep, QhlError> {
        let name = self.expect_ident()?;
        self.expect(&Tok::Colon)?;
        let rule_name = self.expect_ident()?;
        let rule = match RuleName::from_name(&rule_name) {
            Some(r) => r,
            None => return self.err(format!("unknown rule {rule_name}")),
        };
        let mut premises = Vec::new();
        if self.eat(&Tok::LParen) {
            loop {
                let p = self.expect_ident()?;
                if !earlier.iter().any(|s| s.name == p) {
                    return self.err(format!("premise {p} does not refer to an earlier step"));
                }
                premises.push(p);
                if !self.eat(&Tok::Comma) {
                    break;
                }
            }
            self.expect(&Tok::RParen)?;
        }

        let save = self.idx;
        let conclusion = match self.try_parse_step_triple(true) {
            Ok(t) => t,
            Err(det_err) => {
                self.idx = save;
                match self.try_parse_step_triple(false) {
                    Ok(t) => t,
                    Err(prob_err) => return Err(pick_error(det_err, prob_err)),
                }
            }
        };
        self.expect(&Tok::Semi)?;
        if earlier.iter().any(|s| s.name == name) {
            return self.err(format!("duplicate step name {name}"));
        }
        Ok(ProofStep {
            name,
            rule,
            premises,
            conclusion,
        })
    }

    fn try_parse_step_triple(&mut self, det: bool) -> Result<Triple, QhlError> {
        self.expect(&Tok::LBrace)?;
        let pre_d;
        let pre_p;
        if det {
            pre_d = Some(self.parse_dassert()?);
            pre_p = None;
        } else {
            pre_d = None;
            pre_p = Some(self.parse_passert()?);
        }
        self.expect(&Tok::RBrace)?;
        let (prog, program_name) = if self.eat(&Tok::At) {
            let prog_name = self.expect_ident()?;
            match self.programs.get(&prog_name) {
                Some(c) => (c.clone(), Some(prog_name)),
                None => return self.err(format!("unknown program {prog_name}")),
            }
        } else {
            (self.parse_cmd()?, None)
        };
        self.expect(&Tok::LBrace)?;
        let body = if det {
            let post = self.parse_dassert()?;
            TripleBody::Det {
                pre: pre_d.unwrap(),
                post,
            }
        } else {
            let post = self.parse_passert()?;
            TripleBody::Prob {
                pre: pre_p.unwrap(),
                post,
            }
        };
        self.expect(&Tok::RBrace)?;
        Ok(Triple {
            prog,
            program_name,
            body,
        })
    }
}

fn guard_is_program_level(b: &BoolExpr) -> bool {
    match b {
        BoolExpr::True | BoolExpr::False => true,
        BoolExpr::Rel(_, l, r) => l.is_program_level() && r.is_program_level(),
        BoolExpr::Not(inner) => guard_is_program_level(inner),
        BoolExpr::And(x, y) => guard_is_program_level(x) && guard_is_program_level(y),
    }
}

/// When both triple-body sorts fail to parse, report the attempt that is
/// more likely to be what the author meant (the one that got further).
fn pick_error(det: QhlError, prob: QhlError) -> QhlError {
    let key = |e: &QhlError| match e {
        QhlError::Parse { line, col, .. } => (*line, *col),
        _ => (usize::MAX, usize::MAX),
    };
    if key(&prob) >= key(&det) {
        prob
    } else {
        det
    }
}
