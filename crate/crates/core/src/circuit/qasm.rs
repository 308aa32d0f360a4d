//! Reader and writer for the OpenQASM 2.0 subset used by the toolchain:
//! `qreg`/`creg` declarations, the native gates, and `barrier`/`measure`
//! (accepted and dropped). Registers are flattened in declaration order.

use std::fmt::Write as _;

use thiserror::Error;

use super::{Circuit, CircuitError, GateKind};

#[derive(Debug, Error, Clone, PartialEq)]
#[error("line {line}, column {column}: {kind}")]
pub struct QasmError {
    pub line: usize,
    pub column: usize,
    pub kind: QasmErrorKind,
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum QasmErrorKind {
    #[error("syntax error: {0}")]
    Syntax(String),
    #[error("unsupported statement `{0}`")]
    Unsupported(String),
    #[error("{gate} expects {expected} qubit argument(s), got {found}")]
    Arity { gate: GateKind, expected: usize, found: usize },
    #[error("undeclared register `{0}`")]
    UndeclaredRegister(String),
    #[error("index {index} out of range for register `{register}` of size {size}")]
    IndexOutOfRange { register: String, index: usize, size: usize },
    #[error("register `{0}` declared twice")]
    DuplicateRegister(String),
    #[error("invalid gate: {0}")]
    Gate(CircuitError),
}

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Ident(String),
    Number(f64),
    Str(String),
    Sym(char),
    Arrow,
}

#[derive(Debug, Clone)]
struct Token {
    tok: Tok,
    line: usize,
    column: usize,
}

fn err(line: usize, column: usize, kind: QasmErrorKind) -> QasmError {
    QasmError { line, column, kind }
}

fn tokenize(text: &str) -> Result<Vec<Token>, QasmError> {
    let mut out = Vec::new();
    for (ln, raw) in text.lines().enumerate() {
        let line = ln + 1;
        let chars: Vec<char> = raw.chars().collect();
        let mut i = 0;
        while i < chars.len() {
            let c = chars[i];
            let column = i + 1;
            if c.is_whitespace() {
                i += 1;
            } else if c == '/' && chars.get(i + 1) == Some(&'/') {
                break;
            } else if c.is_ascii_alphabetic() || c == '_' {
                let start = i;
                while i < chars.len() && (chars[i].is_ascii_alphanumeric() || chars[i] == '_') {
                    i += 1;
                }
                out.push(Token { tok: Tok::Ident(chars[start..i].iter().collect()), line, column });
            } else if c.is_ascii_digit() || (c == '.' && chars.get(i + 1).is_some_and(|d| d.is_ascii_digit())) {
                let start = i;
                while i < chars.len() && (chars[i].is_ascii_digit() || chars[i] == '.') {
                    i += 1;
                }
                if i < chars.len() && (chars[i] == 'e' || chars[i] == 'E') {
                    let mut j = i + 1;
                    if j < chars.len() && (chars[j] == '+' || chars[j] == '-') {
                        j += 1;
                    }
                    if j < chars.len() && chars[j].is_ascii_digit() {
                        i = j;
                        while i < chars.len() && chars[i].is_ascii_digit() {
                            i += 1;
                        }
                    }
                }
                let s: String = chars[start..i].iter().collect();
                let v = s
                    .parse::<f64>()
                    .map_err(|_| err(line, column, QasmErrorKind::Syntax(format!("bad number `{s}`"))))?;
                out.push(Token { tok: Tok::Number(v), line, column });
            } else if c == '"' {
                let start = i + 1;
                i += 1;
                while i < chars.len() && chars[i] != '"' {
                    i += 1;
                }
                if i >= chars.len() {
                    return Err(err(line, column, QasmErrorKind::Syntax("unterminated string".into())));
                }
                out.push(Token { tok: Tok::Str(chars[start..i].iter().collect()), line, column });
                i += 1;
            } else if c == '-' && chars.get(i + 1) == Some(&'>') {
                out.push(Token { tok: Tok::Arrow, line, column });
                i += 2;
            } else if "[](),;+-*/".contains(c) {
                out.push(Token { tok: Tok::Sym(c), line, column });
                i += 1;
            } else {
                return Err(err(line, column, QasmErrorKind::Syntax(format!("unexpected character `{c}`"))));
            }
        }
    }
    Ok(out)
}

struct Register {
    name: String,
    offset: usize,
    size: usize,
}

struct Parser {
    toks: Vec<Token>,
    pos: usize,
    eof: (usize, usize),
}

impl Parser {
    fn peek(&self) -> Option<&Token> {
        self.toks.get(self.pos)
    }

    fn here(&self) -> (usize, usize) {
        self.peek().map(|t| (t.line, t.column)).unwrap_or(self.eof)
    }

    fn syntax<T>(&self, msg: impl Into<String>) -> Result<T, QasmError> {
        let (l, c) = self.here();
        Err(err(l, c, QasmErrorKind::Syntax(msg.into())))
    }

    fn next(&mut self) -> Option<Token> {
        let t = self.toks.get(self.pos).cloned();
        self.pos += 1;
        t
    }

    fn eat_sym(&mut self, c: char) -> bool {
        if matches!(self.peek(), Some(Token { tok: Tok::Sym(s), .. }) if *s == c) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn expect_sym(&mut self, c: char) -> Result<(), QasmError> {
        if self.eat_sym(c) {
            Ok(())
        } else {
            self.syntax(format!("expected `{c}`"))
        }
    }

    fn ident(&mut self) -> Result<(String, usize, usize), QasmError> {
        match self.peek().cloned() {
            Some(Token { tok: Tok::Ident(s), line, column }) => {
                self.pos += 1;
                Ok((s, line, column))
            }
            _ => self.syntax("expected identifier"),
        }
    }

    fn uint(&mut self) -> Result<usize, QasmError> {
        match self.peek().cloned() {
            Some(Token { tok: Tok::Number(v), .. }) if v >= 0.0 && v.fract() == 0.0 => {
                self.pos += 1;
                Ok(v as usize)
            }
            _ => self.syntax("expected non-negative integer"),
        }
    }

    fn expr(&mut self) -> Result<f64, QasmError> {
        let mut v = self.term()?;
        loop {
            if self.eat_sym('+') {
                v += self.term()?;
            } else if self.eat_sym('-') {
                v -= self.term()?;
            } else {
                return Ok(v);
            }
        }
    }

    fn term(&mut self) -> Result<f64, QasmError> {
        let mut v = self.unary()?;
        loop {
            if self.eat_sym('*') {
                v *= self.unary()?;
            } else if self.eat_sym('/') {
                v /= self.unary()?;
            } else {
                return Ok(v);
            }
        }
    }

    fn unary(&mut self) -> Result<f64, QasmError> {
        if self.eat_sym('-') {
            return Ok(-self.unary()?);
        }
        if self.eat_sym('+') {
            return self.unary();
        }
        if self.eat_sym('(') {
            let v = self.expr()?;
            self.expect_sym(')')?;
            return Ok(v);
        }
        match self.peek().cloned() {
            Some(Token { tok: Tok::Number(v), .. }) => {
                self.pos += 1;
                Ok(v)
            }
            Some(Token { tok: Tok::Ident(s), .. }) if s == "pi" => {
                self.pos += 1;
                Ok(std::f64::consts::PI)
            }
            _ => self.syntax("expected expression"),
        }
    }

    /// `name` or `name[index]`; returns the register name, optional index and position.
    fn argument(&mut self) -> Result<(String, Option<usize>, usize, usize), QasmError> {
        let (name, line, column) = self.ident()?;
        if self.eat_sym('[') {
            let idx = self.uint()?;
            self.expect_sym(']')?;
            Ok((name, Some(idx), line, column))
        } else {
            Ok((name, None, line, column))
        }
    }

    fn skip_to_semicolon(&mut self) -> Result<(), QasmError> {
        while let Some(t) = self.next() {
            if t.tok == Tok::Sym(';') {
                return Ok(());
            }
        }
        self.syntax("missing `;`")
    }
}

fn resolve(regs: &[Register], name: &str, idx: usize, line: usize, column: usize) -> Result<usize, QasmError> {
    let reg = regs
        .iter()
        .find(|r| r.name == name)
        .ok_or_else(|| err(line, column, QasmErrorKind::UndeclaredRegister(name.to_string())))?;
    if idx >= reg.size {
        return Err(err(
            line,
            column,
            QasmErrorKind::IndexOutOfRange { register: name.to_string(), index: idx, size: reg.size },
        ));
    }
    Ok(reg.offset + idx)
}

/// Kind, qubits, parameter, line, column.
type ParsedGate = (GateKind, Vec<usize>, Option<f64>, usize, usize);

/// Parses QASM-subset source into a [`Circuit`].
pub fn parse_qasm(text: &str) -> Result<Circuit, QasmError> {
    let toks = tokenize(text)?;
    let eof = toks.last().map(|t| (t.line, t.column + 1)).unwrap_or((1, 1));
    let mut p = Parser { toks, pos: 0, eof };
    let mut qregs: Vec<Register> = Vec::new();
    let mut cregs: Vec<String> = Vec::new();
    let mut gates: Vec<ParsedGate> = Vec::new();

    while p.peek().is_some() {
        let (word, line, column) = p.ident()?;
        match word.as_str() {
            "OPENQASM" => {
                match p.next() {
                    Some(Token { tok: Tok::Number(_), .. }) => {}
                    _ => return p.syntax("expected version number"),
                }
                p.expect_sym(';')?;
            }
            "include" => {
                match p.next() {
                    Some(Token { tok: Tok::Str(_), .. }) => {}
                    _ => return p.syntax("expected file name"),
                }
                p.expect_sym(';')?;
            }
            "qreg" | "creg" => {
                let (name, nl, nc) = p.ident()?;
                p.expect_sym('[')?;
                let size = p.uint()?;
                p.expect_sym(']')?;
                p.expect_sym(';')?;
                if qregs.iter().any(|r| r.name == name) || cregs.contains(&name) {
                    return Err(err(nl, nc, QasmErrorKind::DuplicateRegister(name)));
                }
                if word == "qreg" {
                    let offset = qregs.iter().map(|r| r.size).sum();
                    qregs.push(Register { name, offset, size });
                } else {
                    cregs.push(name);
                }
            }
            "barrier" | "measure" => {
                p.skip_to_semicolon()?;
            }
            _ => {
                let Some(kind) = GateKind::from_name(&word) else {
                    return Err(err(line, column, QasmErrorKind::Unsupported(word)));
                };
                let param = if p.eat_sym('(') {
                    let v = p.expr()?;
                    p.expect_sym(')')?;
                    Some(v)
                } else {
                    None
                };
                let mut qubits = Vec::new();
                loop {
                    let (name, idx, al, ac) = p.argument()?;
                    let Some(idx) = idx else {
                        return Err(err(al, ac, QasmErrorKind::Syntax("register broadcast is not supported".into())));
                    };
                    qubits.push(resolve(&qregs, &name, idx, al, ac)?);
                    if !p.eat_sym(',') {
                        break;
                    }
                }
                p.expect_sym(';')?;
                if qubits.len() != kind.arity() {
                    return Err(err(
                        line,
                        column,
                        QasmErrorKind::Arity { gate: kind, expected: kind.arity(), found: qubits.len() },
                    ));
                }
                if kind.has_param() != param.is_some() {
                    return Err(err(line, column, QasmErrorKind::Gate(CircuitError::Param { kind })));
                }
                gates.push((kind, qubits, param, line, column));
            }
        }
    }

    let num_qubits: usize = qregs.iter().map(|r| r.size).sum();
    let mut circuit = Circuit::new(num_qubits).map_err(|e| {
        let (l, c) = p.eof;
        err(l, c, QasmErrorKind::Gate(e))
    })?;
    for (kind, qubits, param, line, column) in gates {
        circuit.push(kind, &qubits, param).map_err(|e| err(line, column, QasmErrorKind::Gate(e)))?;
    }
    Ok(circuit)
}

/// Writes `circuit` in the subset accepted by [`parse_qasm`], using a single
/// register `q`.
pub fn emit_qasm(circuit: &Circuit) -> String {
    let mut s = String::new();
    s.push_str("OPENQASM 2.0;\ninclude \"qelib1.inc\";\n");
    let _ = writeln!(s, "qreg q[{}];", circuit.num_qubits());
    for g in circuit.gates() {
        s.push_str(g.kind.name());
        if let Some(p) = g.param {
            let _ = write!(s, "({p:?})");
        }
        let args: Vec<String> = g.qubits.iter().map(|q| format!("q[{q}]")).collect();
        let _ = writeln!(s, " {};", args.join(","));
    }
    s
}
