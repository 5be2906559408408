//! DRAM/PIM command set and the replayable command trace.

use std::fmt;

use crate::error::{Error, Result};
use crate::geometry::{DramGeometry, Port, Row, RowAddress};

/// One command. AAP operands may name a migration row, in which case the
/// port to drive must be given alongside.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Command {
    Act {
        addr: RowAddress,
        port: Option<Port>,
    },
    /// Precharge the whole flat bank.
    Pre {
        flat_bank: usize,
    },
    /// Column read burst; data content is not modeled (energy only).
    Read {
        addr: RowAddress,
    },
    /// Column write burst; data content is not modeled (energy only).
    Write {
        addr: RowAddress,
    },
    Aap {
        src: RowAddress,
        src_port: Option<Port>,
        dst: RowAddress,
        dst_port: Option<Port>,
    },
    /// Dual-row activation. Charge sharing between two rows that disagree
    /// in any column is indeterminate and rejected at execution.
    Dra {
        a: RowAddress,
        b: RowAddress,
    },
    Tra {
        a: RowAddress,
        b: RowAddress,
        c: RowAddress,
    },
    /// Copy with inversion across the sense-amp stripe shared by two
    /// adjacent subarrays.
    NotXsub {
        src: RowAddress,
        dst: RowAddress,
    },
    ShiftLeft {
        src: RowAddress,
        dst: RowAddress,
    },
    ShiftRight {
        src: RowAddress,
        dst: RowAddress,
    },
}

impl Command {
    pub fn aap(src: RowAddress, dst: RowAddress) -> Self {
        Command::Aap {
            src,
            src_port: None,
            dst,
            dst_port: None,
        }
    }
}

/// Ordered command sequence, replayable with no host-time dependence.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct CommandTrace {
    pub label: String,
    /// Flat bank the trace is scoped to; refresh energy is attributed here.
    pub bank_scope: usize,
    pub commands: Vec<Command>,
}

impl CommandTrace {
    pub fn new(label: impl Into<String>, bank_scope: usize) -> Self {
        Self {
            label: label.into(),
            bank_scope,
            commands: Vec::new(),
        }
    }

    pub fn push(&mut self, cmd: Command) {
        self.commands.push(cmd);
    }

    pub fn len(&self) -> usize {
        self.commands.len()
    }

    pub fn is_empty(&self) -> bool {
        self.commands.is_empty()
    }
}

fn field<'a>(tok: Option<&'a str>, prefix: char, line: usize) -> Result<&'a str> {
    match tok {
        Some(t) if t.len() > 1 && t.starts_with(prefix) => Ok(&t[1..]),
        Some(t) => Err(Error::Parse {
            line,
            msg: format!("expected field '{prefix}<n>', got '{t}'"),
        }),
        None => Err(Error::Parse {
            line,
            msg: format!("missing field '{prefix}<n>'"),
        }),
    }
}

fn num(s: &str, line: usize) -> Result<usize> {
    s.parse().map_err(|_| Error::Parse {
        line,
        msg: format!("'{s}' is not a number"),
    })
}

/// Parses the one-command-per-line trace text format.
///
/// ```text
/// # comment
/// AAP b0 s0 r1 r2
/// TRA b0 s0 r1 r2 r3
/// SHR b0 s0 r1 r2
/// SHL b0 s0 r1 r2
/// NOTX b0 s0 r1 s1 r2
/// ```
///
/// `b` is a flat bank index (channel/rank folded in); rows are data rows.
pub fn parse_trace(text: &str, geometry: &DramGeometry) -> Result<CommandTrace> {
    let mut trace = CommandTrace::new("trace", 0);
    let mut scope: Option<usize> = None;
    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        let stripped = raw.trim();
        if stripped.is_empty() || stripped.starts_with('#') {
            continue;
        }
        let mut toks = stripped.split_whitespace();
        let op = toks.next().unwrap();
        let bank = num(field(toks.next(), 'b', line)?, line)?;
        if bank >= geometry.total_banks() {
            return Err(Error::Parse {
                line,
                msg: format!("bank {bank} outside {} banks", geometry.total_banks()),
            });
        }
        let row_at = |sub: usize, row: usize| RowAddress::in_flat_bank(geometry, bank, sub, Row::Data(row));
        let cmd = match op {
            "AAP" | "SHR" | "SHL" => {
                let sub = num(field(toks.next(), 's', line)?, line)?;
                let src = num(field(toks.next(), 'r', line)?, line)?;
                let dst = num(field(toks.next(), 'r', line)?, line)?;
                let (src, dst) = (row_at(sub, src), row_at(sub, dst));
                match op {
                    "AAP" => Command::aap(src, dst),
                    "SHR" => Command::ShiftRight { src, dst },
                    _ => Command::ShiftLeft { src, dst },
                }
            }
            "TRA" => {
                let sub = num(field(toks.next(), 's', line)?, line)?;
                let a = num(field(toks.next(), 'r', line)?, line)?;
                let b = num(field(toks.next(), 'r', line)?, line)?;
                let c = num(field(toks.next(), 'r', line)?, line)?;
                Command::Tra {
                    a: row_at(sub, a),
                    b: row_at(sub, b),
                    c: row_at(sub, c),
                }
            }
            "NOTX" => {
                let src_sub = num(field(toks.next(), 's', line)?, line)?;
                let src = num(field(toks.next(), 'r', line)?, line)?;
                let dst_sub = num(field(toks.next(), 's', line)?, line)?;
                let dst = num(field(toks.next(), 'r', line)?, line)?;
                Command::NotXsub {
                    src: row_at(src_sub, src),
                    dst: row_at(dst_sub, dst),
                }
            }
            other => {
                return Err(Error::Parse {
                    line,
                    msg: format!("unknown command '{other}'"),
                })
            }
        };
        if let Some(t) = toks.next() {
            return Err(Error::Parse {
                line,
                msg: format!("trailing token '{t}'"),
            });
        }
        scope.get_or_insert(bank);
        trace.push(cmd);
    }
    trace.bank_scope = scope.unwrap_or(0);
    Ok(trace)
}

/// Writes a trace back out in the text format. Only the command kinds the
/// format covers are serializable; programmatic-only commands (bare ACT,
/// migration-row AAP operands, ...) are rejected.
pub fn format_trace(trace: &CommandTrace, geometry: &DramGeometry) -> Result<String> {
    let mut out = String::new();
    for (i, cmd) in trace.commands.iter().enumerate() {
        let line = match cmd {
            Command::Aap {
                src,
                src_port: None,
                dst,
                dst_port: None,
            } => fmt_two("AAP", src, dst, geometry, i)?,
            Command::ShiftRight { src, dst } => fmt_two("SHR", src, dst, geometry, i)?,
            Command::ShiftLeft { src, dst } => fmt_two("SHL", src, dst, geometry, i)?,
            Command::Tra { a, b, c } => {
                let (bank, sub, ra) = data_parts(a, geometry, i)?;
                let (_, _, rb) = data_parts(b, geometry, i)?;
                let (_, _, rc) = data_parts(c, geometry, i)?;
                format!("TRA b{bank} s{sub} r{ra} r{rb} r{rc}")
            }
            Command::NotXsub { src, dst } => {
                let (bank, ssub, sr) = data_parts(src, geometry, i)?;
                let (_, dsub, dr) = data_parts(dst, geometry, i)?;
                format!("NOTX b{bank} s{ssub} r{sr} s{dsub} r{dr}")
            }
            other => {
                return Err(Error::at_command(
                    i,
                    Error::Protocol(format!("{other:?} has no text form")),
                ))
            }
        };
        out.push_str(&line);
        out.push('\n');
    }
    Ok(out)
}

fn data_parts(addr: &RowAddress, geometry: &DramGeometry, index: usize) -> Result<(usize, usize, usize)> {
    match addr.row {
        Row::Data(r) => Ok((addr.flat_bank(geometry), addr.subarray, r)),
        Row::Mig(_) => Err(Error::at_command(
            index,
            Error::Protocol("migration rows have no text form".into()),
        )),
    }
}

fn fmt_two(op: &str, src: &RowAddress, dst: &RowAddress, geometry: &DramGeometry, index: usize) -> Result<String> {
    let (bank, sub, sr) = data_parts(src, geometry, index)?;
    let (_, _, dr) = data_parts(dst, geometry, index)?;
    Ok(format!("{op} b{bank} s{sub} r{sr} r{dr}"))
}

impl fmt::Display for CommandTrace {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} ({} commands)", self.label, self.commands.len())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parse_and_format_roundtrip() {
        let g = DramGeometry::tiny(8, 8);
        let text = "# demo\nAAP b0 s0 r1 r2\nSHR b0 s0 r1 r2\nSHL b0 s1 r3 r4\nTRA b0 s0 r1 r2 r3\nNOTX b0 s0 r1 s1 r2\n";
        let trace = parse_trace(text, &g).unwrap();
        assert_eq!(trace.len(), 5);
        let round = format_trace(&trace, &g).unwrap();
        let again = parse_trace(&round, &g).unwrap();
        assert_eq!(trace.commands, again.commands);
    }

    #[test]
    fn parse_error_carries_line() {
        let g = DramGeometry::tiny(8, 8);
        let err = parse_trace("AAP b0 s0 r1 r2\nBOGUS b0 s0 r1 r2\n", &g).unwrap_err();
        match err {
            Error::Parse { line, .. } => assert_eq!(line, 2),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn bank_out_of_range() {
        let g = DramGeometry::tiny(8, 8);
        assert!(parse_trace("AAP b9 s0 r1 r2\n", &g).is_err());
    }

    #[test]
    fn trailing_tokens_rejected() {
        let g = DramGeometry::tiny(8, 8);
        assert!(parse_trace("AAP b0 s0 r1 r2 r3\n", &g).is_err());
    }
}
