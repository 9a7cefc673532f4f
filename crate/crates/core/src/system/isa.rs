//! Instruction set of the digital controller and its text form.
//!
//! One instruction per line, `OPCODE key=value ...`; `#` starts a comment.
//! Buffer locations are written `g:<addr>` (global buffer) or `o:<addr>`
//! (output buffer).
//!
//! | opcode | operands | effect |
//! |--------|----------|--------|
//! | `WRV`  | `macro src [mode=verify\|ideal] [row] [col]` | program level matrix `src` into the macro |
//! | `CFG`  | `macro kind gain [lambda] [rail] [neg] [aux] [aux_neg]` or `macro bits=<hex> ...` | write the register array |
//! | `EXE`  | `macro [src] [vscale]` | DAC-drive `src * vscale` and run the configured solve |
//! | `RDO`  | `macro dst [scale]` | ADC-convert the latched result, times `scale`, into `dst` |
//! | `MOV`  | `src dst [op=copy\|acc\|im2col\|tomap\|flatten] [k] [h] [w]` | buffer move / reshape |
//! | `POOL` | `src dst` | 2x2 max pooling |
//! | `ACT`  | `src dst [fn=relu]` | activation |
//! | `CMP`  | `macro src dst [tol]` | comparison units: verify-read vs ideal levels in `src` |
//! | `HALT` | | stop |

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use crate::amc::{encode_topology, RegisterBits, TopologyConfig, TopologyKind, DEFAULT_V_RAIL};
use crate::error::{Error, Result};

/// Macros per group.
pub const NUM_MACROS: usize = 16;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Buffer {
    Global,
    Output,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Location {
    pub buffer: Buffer,
    pub addr: usize,
}

impl Location {
    pub fn global(addr: usize) -> Self {
        Self {
            buffer: Buffer::Global,
            addr,
        }
    }

    pub fn output(addr: usize) -> Self {
        Self {
            buffer: Buffer::Output,
            addr,
        }
    }
}

impl fmt::Display for Location {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let b = match self.buffer {
            Buffer::Global => 'g',
            Buffer::Output => 'o',
        };
        write!(f, "{b}:{}", self.addr)
    }
}

impl FromStr for Location {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        let (b, a) = s.split_once(':').ok_or_else(|| {
            Error::Decode(format!("location '{s}' is not of the form g:N or o:N"))
        })?;
        let buffer = match b {
            "g" => Buffer::Global,
            "o" => Buffer::Output,
            _ => return Err(Error::Decode(format!("unknown buffer '{b}'"))),
        };
        let addr = a
            .parse()
            .map_err(|_| Error::Decode(format!("bad address '{a}'")))?;
        Ok(Self { buffer, addr })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum WriteMode {
    /// Closed-loop write-verify.
    Verify,
    /// Cells placed exactly on their levels.
    Ideal,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MovOp {
    Copy,
    /// `dst += src`; a vector added to a matrix is broadcast over its rows.
    Acc,
    Im2col {
        kernel: usize,
    },
    ToMap {
        height: usize,
        width: usize,
    },
    Flatten,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Activation {
    Relu,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct Wiring {
    /// Negative-plane partner combined through the inverter.
    pub neg: Option<usize>,
    /// Second array of a PINV cascade (holds the transpose).
    pub aux: Option<usize>,
    pub aux_neg: Option<usize>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Instruction {
    Wrv {
        macro_id: usize,
        src: Location,
        mode: WriteMode,
        row: usize,
        col: usize,
    },
    Cfg {
        macro_id: usize,
        bits: RegisterBits,
        wiring: Wiring,
    },
    Exe {
        macro_id: usize,
        src: Option<Location>,
        vscale: f64,
    },
    Rdo {
        macro_id: usize,
        dst: Location,
        scale: f64,
    },
    Mov {
        src: Location,
        dst: Location,
        op: MovOp,
    },
    Pool {
        src: Location,
        dst: Location,
    },
    Act {
        src: Location,
        dst: Location,
        func: Activation,
    },
    Cmp {
        macro_id: usize,
        src: Location,
        dst: Location,
        tol: Option<f64>,
    },
    Halt,
}

impl Instruction {
    pub fn cfg(macro_id: usize, topology: &TopologyConfig, wiring: Wiring) -> Self {
        Self::Cfg {
            macro_id,
            bits: encode_topology(topology),
            wiring,
        }
    }

    pub fn opcode(&self) -> &'static str {
        match self {
            Self::Wrv { .. } => "WRV",
            Self::Cfg { .. } => "CFG",
            Self::Exe { .. } => "EXE",
            Self::Rdo { .. } => "RDO",
            Self::Mov { .. } => "MOV",
            Self::Pool { .. } => "POOL",
            Self::Act { .. } => "ACT",
            Self::Cmp { .. } => "CMP",
            Self::Halt => "HALT",
        }
    }
}

impl fmt::Display for Instruction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.opcode())?;
        match self {
            Self::Wrv {
                macro_id,
                src,
                mode,
                row,
                col,
            } => {
                let mode = match mode {
                    WriteMode::Verify => "verify",
                    WriteMode::Ideal => "ideal",
                };
                write!(
                    f,
                    " macro={macro_id} src={src} mode={mode} row={row} col={col}"
                )
            }
            Self::Cfg {
                macro_id,
                bits,
                wiring,
            } => {
                write!(f, " macro={macro_id} bits={}", bits.to_hex())?;
                for (k, v) in [
                    ("neg", wiring.neg),
                    ("aux", wiring.aux),
                    ("aux_neg", wiring.aux_neg),
                ] {
                    if let Some(v) = v {
                        write!(f, " {k}={v}")?;
                    }
                }
                Ok(())
            }
            Self::Exe {
                macro_id,
                src,
                vscale,
            } => {
                write!(f, " macro={macro_id}")?;
                if let Some(src) = src {
                    write!(f, " src={src}")?;
                }
                write!(f, " vscale={vscale:?}")
            }
            Self::Rdo {
                macro_id,
                dst,
                scale,
            } => write!(f, " macro={macro_id} dst={dst} scale={scale:?}"),
            Self::Mov { src, dst, op } => {
                write!(f, " src={src} dst={dst}")?;
                match op {
                    MovOp::Copy => write!(f, " op=copy"),
                    MovOp::Acc => write!(f, " op=acc"),
                    MovOp::Im2col { kernel } => write!(f, " op=im2col k={kernel}"),
                    MovOp::ToMap { height, width } => write!(f, " op=tomap h={height} w={width}"),
                    MovOp::Flatten => write!(f, " op=flatten"),
                }
            }
            Self::Pool { src, dst } => write!(f, " src={src} dst={dst}"),
            Self::Act {
                src,
                dst,
                func: Activation::Relu,
            } => write!(f, " src={src} dst={dst} fn=relu"),
            Self::Cmp {
                macro_id,
                src,
                dst,
                tol,
            } => {
                write!(f, " macro={macro_id} src={src} dst={dst}")?;
                if let Some(t) = tol {
                    write!(f, " tol={t:?}")?;
                }
                Ok(())
            }
            Self::Halt => Ok(()),
        }
    }
}

struct Fields {
    map: BTreeMap<String, String>,
}

impl Fields {
    fn take(&mut self, key: &str) -> Option<String> {
        self.map.remove(key)
    }

    fn req(&mut self, key: &str) -> Result<String> {
        self.take(key)
            .ok_or_else(|| Error::Decode(format!("missing field '{key}'")))
    }

    fn num<T: FromStr>(&mut self, key: &str) -> Result<Option<T>> {
        self.take(key)
            .map(|v| {
                v.parse::<T>()
                    .map_err(|_| Error::Decode(format!("bad value '{v}' for '{key}'")))
            })
            .transpose()
    }

    fn req_num<T: FromStr>(&mut self, key: &str) -> Result<T> {
        self.num(key)?
            .ok_or_else(|| Error::Decode(format!("missing field '{key}'")))
    }

    fn loc(&mut self, key: &str) -> Result<Location> {
        self.req(key)?.parse()
    }

    fn macro_id(&mut self, key: &str) -> Result<Option<usize>> {
        match self.num::<usize>(key)? {
            Some(id) if id >= NUM_MACROS => Err(Error::Decode(format!(
                "{key}={id} exceeds {} macros",
                NUM_MACROS
            ))),
            other => Ok(other),
        }
    }

    fn finish(self) -> Result<()> {
        match self.map.keys().next() {
            Some(k) => Err(Error::Decode(format!("unknown field '{k}'"))),
            None => Ok(()),
        }
    }
}

/// Decodes one instruction line (comments already stripped, non-empty).
pub fn decode(line: &str) -> Result<Instruction> {
    let mut parts = line.split_whitespace();
    let opcode = parts
        .next()
        .ok_or_else(|| Error::Decode("empty instruction".into()))?;
    let mut map = BTreeMap::new();
    for p in parts {
        let (k, v) = p
            .split_once('=')
            .ok_or_else(|| Error::Decode(format!("operand '{p}' is not key=value")))?;
        if map.insert(k.to_string(), v.to_string()).is_some() {
            return Err(Error::Decode(format!("duplicate field '{k}'")));
        }
    }
    let mut f = Fields { map };
    let instr = match opcode.to_ascii_uppercase().as_str() {
        "WRV" => {
            let macro_id = f
                .macro_id("macro")?
                .ok_or_else(|| Error::Decode("missing field 'macro'".into()))?;
            let src = f.loc("src")?;
            let mode = match f.take("mode").as_deref() {
                None | Some("verify") => WriteMode::Verify,
                Some("ideal") => WriteMode::Ideal,
                Some(m) => return Err(Error::Decode(format!("unknown write mode '{m}'"))),
            };
            let row = f.num("row")?.unwrap_or(0);
            let col = f.num("col")?.unwrap_or(0);
            Instruction::Wrv {
                macro_id,
                src,
                mode,
                row,
                col,
            }
        }
        "CFG" => {
            let macro_id = f
                .macro_id("macro")?
                .ok_or_else(|| Error::Decode("missing field 'macro'".into()))?;
            let bits = match f.take("bits") {
                Some(hex) => RegisterBits::from_hex(&hex)?,
                None => {
                    let kind: TopologyKind = f
                        .req("kind")?
                        .parse()
                        .map_err(|e: Error| Error::Decode(e.to_string()))?;
                    let gain: f64 = f.num("gain")?.unwrap_or(1.0);
                    let lambda: f64 = f.num("lambda")?.unwrap_or(0.0);
                    let rail: f64 = f.num("rail")?.unwrap_or(DEFAULT_V_RAIL);
                    encode_topology(&TopologyConfig {
                        kind,
                        tia_gain: gain,
                        lambda,
                        v_rail: rail,
                    })
                }
            };
            let wiring = Wiring {
                neg: f.macro_id("neg")?,
                aux: f.macro_id("aux")?,
                aux_neg: f.macro_id("aux_neg")?,
            };
            Instruction::Cfg {
                macro_id,
                bits,
                wiring,
            }
        }
        "EXE" => Instruction::Exe {
            macro_id: f
                .macro_id("macro")?
                .ok_or_else(|| Error::Decode("missing field 'macro'".into()))?,
            src: f.take("src").map(|s| s.parse()).transpose()?,
            vscale: f.num("vscale")?.unwrap_or(1.0),
        },
        "RDO" => Instruction::Rdo {
            macro_id: f
                .macro_id("macro")?
                .ok_or_else(|| Error::Decode("missing field 'macro'".into()))?,
            dst: f.loc("dst")?,
            scale: f.num("scale")?.unwrap_or(1.0),
        },
        "MOV" => {
            let src = f.loc("src")?;
            let dst = f.loc("dst")?;
            let op = match f.take("op").as_deref() {
                None | Some("copy") => MovOp::Copy,
                Some("acc") => MovOp::Acc,
                Some("im2col") => MovOp::Im2col {
                    kernel: f.req_num("k")?,
                },
                Some("tomap") => MovOp::ToMap {
                    height: f.req_num("h")?,
                    width: f.req_num("w")?,
                },
                Some("flatten") => MovOp::Flatten,
                Some(o) => return Err(Error::Decode(format!("unknown MOV op '{o}'"))),
            };
            Instruction::Mov { src, dst, op }
        }
        "POOL" => Instruction::Pool {
            src: f.loc("src")?,
            dst: f.loc("dst")?,
        },
        "ACT" => {
            let src = f.loc("src")?;
            let dst = f.loc("dst")?;
            match f.take("fn").as_deref() {
                None | Some("relu") => {}
                Some(a) => return Err(Error::Decode(format!("unknown activation '{a}'"))),
            }
            Instruction::Act {
                src,
                dst,
                func: Activation::Relu,
            }
        }
        "CMP" => Instruction::Cmp {
            macro_id: f
                .macro_id("macro")?
                .ok_or_else(|| Error::Decode("missing field 'macro'".into()))?,
            src: f.loc("src")?,
            dst: f.loc("dst")?,
            tol: f.num("tol")?,
        },
        "HALT" => Instruction::Halt,
        other => return Err(Error::Decode(format!("unknown opcode '{other}'"))),
    };
    f.finish()?;
    Ok(instr)
}

/// Parses a program; errors carry the 1-based line number.
pub fn parse_program(text: &str) -> Result<Vec<Instruction>> {
    let mut out = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        out.push(decode(line).map_err(|e| Error::Decode(format!("line {}: {e}", i + 1)))?);
    }
    Ok(out)
}

pub fn format_program(program: &[Instruction]) -> String {
    program.iter().map(|i| format!("{i}\n")).collect()
}
