//! Line-oriented assembly subset.
//!
//! ```text
//! # comment
//! qubits 3;
//! h 0;
//! cp(pi/2) 1 0;
//! rot(0.5*pi, -pi/4) 0;
//! ```
//!
//! Angles are decimal literals or `pi`, combined with `*` and `/` and an
//! optional leading minus.

use std::f64::consts::PI;
use std::fmt::Write as _;

use super::{gates, Circuit, Gate, GateKind};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Ident(String),
    Number(f64),
    LParen,
    RParen,
    Comma,
    Semi,
    Star,
    Slash,
    Minus,
    Eof,
}

#[derive(Debug, Clone)]
struct Token {
    tok: Tok,
    line: usize,
    column: usize,
}

fn err(line: usize, column: usize, message: impl Into<String>) -> Error {
    Error::Parse {
        line,
        column,
        message: message.into(),
    }
}

fn lex(text: &str) -> Result<Vec<Token>> {
    let mut out = Vec::new();
    let mut line = 1;
    let mut column = 1;
    let mut chars = text.chars().peekable();
    while let Some(&ch) = chars.peek() {
        let (l, c) = (line, column);
        let single = |tok| Token {
            tok,
            line: l,
            column: c,
        };
        match ch {
            '\n' => {
                chars.next();
                line += 1;
                column = 1;
                continue;
            }
            ' ' | '\t' | '\r' => {
                chars.next();
                column += 1;
                continue;
            }
            '#' => {
                while let Some(&c) = chars.peek() {
                    if c == '\n' {
                        break;
                    }
                    chars.next();
                }
                continue;
            }
            '(' | ')' | ',' | ';' | '*' | '/' | '-' => {
                chars.next();
                column += 1;
                out.push(single(match ch {
                    '(' => Tok::LParen,
                    ')' => Tok::RParen,
                    ',' => Tok::Comma,
                    ';' => Tok::Semi,
                    '*' => Tok::Star,
                    '/' => Tok::Slash,
                    _ => Tok::Minus,
                }));
            }
            d0 if d0.is_ascii_digit() || d0 == '.' => {
                let mut s = String::new();
                while let Some(&d) = chars.peek() {
                    let exponent_sign = (d == '-' || d == '+') && s.ends_with(['e', 'E']);
                    if d.is_ascii_digit() || d == '.' || d == 'e' || d == 'E' || exponent_sign {
                        s.push(d);
                        chars.next();
                        column += 1;
                    } else {
                        break;
                    }
                }
                let value: f64 = s.parse().map_err(|_| err(l, c, format!("malformed number '{s}'")))?;
                out.push(single(Tok::Number(value)));
            }
            a0 if a0.is_ascii_alphabetic() || a0 == '_' => {
                let mut s = String::new();
                while let Some(&d) = chars.peek() {
                    if d.is_ascii_alphanumeric() || d == '_' {
                        s.push(d);
                        chars.next();
                        column += 1;
                    } else {
                        break;
                    }
                }
                out.push(single(Tok::Ident(s)));
            }
            other => return Err(err(l, c, format!("unexpected character '{other}'"))),
        }
    }
    out.push(Token {
        tok: Tok::Eof,
        line,
        column,
    });
    Ok(out)
}

struct Parser {
    tokens: Vec<Token>,
    pos: usize,
}

impl Parser {
    fn peek(&self) -> &Token {
        &self.tokens[self.pos]
    }

    fn next(&mut self) -> Token {
        let t = self.tokens[self.pos].clone();
        if t.tok != Tok::Eof {
            self.pos += 1;
        }
        t
    }

    fn expect(&mut self, tok: Tok, what: &str) -> Result<Token> {
        let t = self.next();
        if t.tok == tok {
            Ok(t)
        } else {
            Err(err(
                t.line,
                t.column,
                format!("expected {what}, found {}", describe(&t.tok)),
            ))
        }
    }

    fn index(&mut self, what: &str) -> Result<(usize, Token)> {
        let t = self.next();
        match t.tok {
            Tok::Number(v) if v >= 0.0 && v.fract() == 0.0 && v < 1e9 => Ok((v as usize, t)),
            _ => Err(err(
                t.line,
                t.column,
                format!("expected {what}, found {}", describe(&t.tok)),
            )),
        }
    }

    fn factor(&mut self) -> Result<f64> {
        let t = self.next();
        match t.tok {
            Tok::Minus => Ok(-self.factor()?),
            Tok::Number(v) => Ok(v),
            Tok::Ident(ref s) if s == "pi" => Ok(PI),
            _ => Err(err(
                t.line,
                t.column,
                format!("expected angle, found {}", describe(&t.tok)),
            )),
        }
    }

    fn expr(&mut self) -> Result<f64> {
        let mut value = self.factor()?;
        loop {
            match self.peek().tok {
                Tok::Star => {
                    self.next();
                    value *= self.factor()?;
                }
                Tok::Slash => {
                    let t = self.next();
                    let d = self.factor()?;
                    if d == 0.0 {
                        return Err(err(t.line, t.column, "division by zero"));
                    }
                    value /= d;
                }
                _ => return Ok(value),
            }
        }
    }
}

fn describe(tok: &Tok) -> String {
    match tok {
        Tok::Ident(s) => format!("'{s}'"),
        Tok::Number(v) => format!("number {v}"),
        Tok::LParen => "'('".into(),
        Tok::RParen => "')'".into(),
        Tok::Comma => "','".into(),
        Tok::Semi => "';'".into(),
        Tok::Star => "'*'".into(),
        Tok::Slash => "'/'".into(),
        Tok::Minus => "'-'".into(),
        Tok::Eof => "end of input".into(),
    }
}

/// Parses circuit text; one gate per statement.
pub fn parse_circuit(text: &str) -> Result<Circuit> {
    let mut p = Parser {
        tokens: lex(text)?,
        pos: 0,
    };
    let head = p.next();
    match head.tok {
        Tok::Ident(ref s) if s == "qubits" => {}
        _ => {
            return Err(err(
                head.line,
                head.column,
                format!("expected 'qubits <n>;' header, found {}", describe(&head.tok)),
            ))
        }
    }
    let (n, n_tok) = p.index("qubit count")?;
    if n == 0 || n > 12 {
        return Err(err(
            n_tok.line,
            n_tok.column,
            format!("qubit count {n} outside [1, 12]"),
        ));
    }
    p.expect(Tok::Semi, "';'")?;
    let mut circuit = Circuit::new(n)?;

    loop {
        let t = p.next();
        let name = match t.tok {
            Tok::Eof => break,
            Tok::Ident(ref s) => s.clone(),
            _ => {
                return Err(err(
                    t.line,
                    t.column,
                    format!("expected gate name, found {}", describe(&t.tok)),
                ))
            }
        };
        if name == "qubits" {
            return Err(err(t.line, t.column, "duplicate 'qubits' header"));
        }
        let spec = gates::lookup(&name).ok_or_else(|| err(t.line, t.column, format!("unknown gate '{name}'")))?;
        let mut params = Vec::new();
        if p.peek().tok == Tok::LParen {
            p.next();
            params.push(p.expr()?);
            while p.peek().tok == Tok::Comma {
                p.next();
                params.push(p.expr()?);
            }
            p.expect(Tok::RParen, "')'")?;
        }
        if params.len() != spec.params {
            return Err(err(
                t.line,
                t.column,
                format!("gate '{name}' takes {} parameter(s), got {}", spec.params, params.len()),
            ));
        }
        let mut support = Vec::new();
        while let Tok::Number(_) = p.peek().tok {
            let (q, q_tok) = p.index("qubit index")?;
            if q >= n {
                return Err(err(
                    q_tok.line,
                    q_tok.column,
                    format!("qubit index {q} out of range for {n} qubit(s)"),
                ));
            }
            support.push(q);
        }
        if support.len() != spec.qubits {
            return Err(err(
                t.line,
                t.column,
                format!("gate '{name}' acts on {} qubit(s), got {}", spec.qubits, support.len()),
            ));
        }
        p.expect(Tok::Semi, "';'")?;
        let gate = Gate::named(&name, &params, &support).map_err(|e| err(t.line, t.column, e.to_string()))?;
        circuit.push(gate)?;
    }
    Ok(circuit)
}

/// Formats an angle with 12 digits after the decimal point, trailing zeros
/// trimmed.
pub fn format_angle(x: f64) -> String {
    let s = format!("{x:.12}");
    let s = s.trim_end_matches('0').trim_end_matches('.');
    match s {
        "-0" | "" => "0".to_string(),
        other => other.to_string(),
    }
}

/// Prints a circuit in the parser's grammar. Only named gates are printable.
pub fn print_circuit(circuit: &Circuit) -> Result<String> {
    let mut out = String::new();
    let _ = writeln!(out, "qubits {};", circuit.n_qubits());
    for (j, gate) in circuit.gates().iter().enumerate() {
        let GateKind::Named { name, params } = gate.kind() else {
            return Err(Error::Validation(format!(
                "layer {j} ('{}') has no textual form",
                gate.label()
            )));
        };
        out.push_str(name);
        if !params.is_empty() {
            let args: Vec<String> = params.iter().map(|&x| format_angle(x)).collect();
            let _ = write!(out, "({})", args.join(", "));
        }
        for q in gate.support() {
            let _ = write!(out, " {q}");
        }
        out.push_str(";\n");
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::matcore::{c, herm_exp, pauli_x, spectral_norm};

    #[test]
    fn single_rotation() {
        let circuit = parse_circuit("qubits 1; rx(0.7853981634) 0;").unwrap();
        assert_eq!(circuit.len(), 1);
        let expected = herm_exp(&(pauli_x() * c(PI / 8.0, 0.0))).unwrap();
        assert!(spectral_norm(&(circuit.unitary() - expected)) < 1e-10);
    }

    #[test]
    fn matches_programmatic_circuit() {
        let parsed = parse_circuit("qubits 2; h 0; cz 0 1;").unwrap();
        let built = Circuit::from_gates(
            2,
            vec![
                Gate::named("h", &[], &[0]).unwrap(),
                Gate::named("cz", &[], &[0, 1]).unwrap(),
            ],
        )
        .unwrap();
        assert!(spectral_norm(&(parsed.unitary() - built.unitary())) <= 1e-12);
    }

    #[test]
    fn missing_paren_reports_position() {
        match parse_circuit("qubits 1; rx(0.1") {
            Err(Error::Parse { line, column, message }) => {
                assert_eq!((line, column), (1, 17));
                assert!(message.contains("')'"), "{message}");
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn angle_expressions() {
        let circuit = parse_circuit("qubits 1;\n# comment\nrz(-pi/4) 0; rot(3*pi/2, 0.5) 0;\nrx(1e-3) 0;").unwrap();
        let params: Vec<Vec<f64>> = circuit
            .gates()
            .iter()
            .map(|g| match g.kind() {
                GateKind::Named { params, .. } => params.clone(),
                _ => unreachable!(),
            })
            .collect();
        assert_eq!(params, vec![vec![-PI / 4.0], vec![3.0 * PI / 2.0, 0.5], vec![1e-3]]);
    }

    #[test]
    fn error_cases() {
        let cases = [
            ("h 0;", 1, 1),
            ("qubits 1; foo 0;", 1, 11),
            ("qubits 1; cz 0;", 1, 11),
            ("qubits 2;\nh 2;", 2, 3),
            ("qubits 1; rx 0;", 1, 11),
            ("qubits 1; h 0", 1, 14),
            ("qubits 1; qubits 2;", 1, 11),
        ];
        for (text, line, column) in cases {
            match parse_circuit(text) {
                Err(Error::Parse { line: l, column: c, .. }) => {
                    assert_eq!((l, c), (line, column), "{text}")
                }
                other => panic!("{text}: unexpected {other:?}"),
            }
        }
    }

    #[test]
    fn print_then_parse() {
        let text = "qubits 3;\nh 0;\ncp(1.570796326795) 1 0;\nrot(0.876, -1.43) 2;\niswap 0 2;\n";
        let circuit = parse_circuit(text).unwrap();
        assert_eq!(print_circuit(&circuit).unwrap(), text);
        assert_eq!(format_angle(-0.0), "0");
        assert_eq!(format_angle(2.0), "2");
    }
}
