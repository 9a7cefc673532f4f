//! Execution model: sixteen macros behind a shared controller, a global
//! buffer for operands and intermediates, and an output buffer for results.

use std::collections::BTreeMap;

use nalgebra::{DMatrix, DVector};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::converter::{adc_readout, dac_drive, ConverterSpec};
use super::digital::{comparison_unit, im2col, max_pool_2x2, relu, FeatureMap};
use super::isa::{Activation, Buffer, Instruction, Location, MovOp, Wiring, WriteMode, NUM_MACROS};
use crate::amc::{
    decode_topology, solve_egv, solve_inv, solve_mvm, solve_pinv, AnalogResult, ArrayOperand,
    RegisterBits, TopologyConfig, TopologyKind,
};
use crate::crossbar::{ActiveRegion, CrossbarArray, ARRAY_DIM};
use crate::device::{level_to_conductance, DeviceParams, LevelCode};
use crate::error::{domain, Error, Result};
use crate::write_verify::{program_array, ProgramReport, WriteVerifyConfig};

/// Contents of one buffer slot.
#[derive(Debug, Clone, PartialEq)]
pub enum Value {
    Vector(DVector<f64>),
    /// Rows are independent samples (a batch).
    Matrix(DMatrix<f64>),
    Map(FeatureMap),
}

impl Value {
    pub fn kind(&self) -> &'static str {
        match self {
            Value::Vector(_) => "vector",
            Value::Matrix(_) => "matrix",
            Value::Map(_) => "feature map",
        }
    }

    pub fn as_vector(&self) -> Result<&DVector<f64>> {
        match self {
            Value::Vector(v) => Ok(v),
            other => domain(format!("expected a vector, found a {}", other.kind())),
        }
    }

    pub fn as_matrix(&self) -> Result<&DMatrix<f64>> {
        match self {
            Value::Matrix(m) => Ok(m),
            other => domain(format!("expected a matrix, found a {}", other.kind())),
        }
    }

    pub fn as_map(&self) -> Result<&FeatureMap> {
        match self {
            Value::Map(m) => Ok(m),
            other => domain(format!("expected a feature map, found a {}", other.kind())),
        }
    }

    fn map_values(&self, f: impl Fn(f64) -> f64) -> Value {
        match self {
            Value::Vector(v) => Value::Vector(v.map(f)),
            Value::Matrix(m) => Value::Matrix(m.map(f)),
            Value::Map(m) => Value::Map(FeatureMap {
                data: m.data.iter().map(|&x| f(x)).collect(),
                ..m.clone()
            }),
        }
    }
}

/// Topology plus the partner macros it is wired to.
#[derive(Debug, Clone, PartialEq)]
pub struct MacroConfig {
    pub topology: TopologyConfig,
    pub wiring: Wiring,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Latched {
    Single(AnalogResult),
    Batch(Vec<AnalogResult>),
}

#[derive(Debug, Clone)]
pub struct Macro {
    pub array: CrossbarArray,
    pub config: Option<MacroConfig>,
    /// Read-noise and programming stream of this macro.
    pub rng: ChaCha8Rng,
    pub latch: Option<Latched>,
    pub last_program: Option<DMatrix<ProgramReport>>,
}

/// Stream `id` of the ChaCha generator keyed by `seed`.
pub fn macro_rng(seed: u64, id: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(id as u64);
    rng
}

#[derive(Debug, Clone)]
pub struct MachineState {
    pub macros: Vec<Macro>,
    pub global_buffer: BTreeMap<usize, Value>,
    pub output_buffer: BTreeMap<usize, Value>,
    pub register_array: [Option<RegisterBits>; NUM_MACROS],
    pub converter: ConverterSpec,
    pub write_verify: WriteVerifyConfig,
    pub pc: usize,
    pub halted: bool,
    /// Total analog operations executed, batch rows counted individually.
    pub analog_ops: u64,
}

impl MachineState {
    pub fn new(
        params: DeviceParams,
        converter: ConverterSpec,
        write_verify: WriteVerifyConfig,
        seed: u64,
    ) -> Result<Self> {
        converter.validate()?;
        write_verify.validate()?;
        let array = CrossbarArray::new(params)?;
        let macros = (0..NUM_MACROS)
            .map(|id| Macro {
                array: array.clone(),
                config: None,
                rng: macro_rng(seed, id),
                latch: None,
                last_program: None,
            })
            .collect();
        Ok(Self {
            macros,
            global_buffer: BTreeMap::new(),
            output_buffer: BTreeMap::new(),
            register_array: [None; NUM_MACROS],
            converter,
            write_verify,
            pc: 0,
            halted: false,
            analog_ops: 0,
        })
    }

    /// Re-keys every macro stream; used to give each batch instance its own noise.
    pub fn reseed(&mut self, seed: u64) {
        for (id, m) in self.macros.iter_mut().enumerate() {
            m.rng = macro_rng(seed, id);
        }
    }

    /// Clears the program counter and halt flag so another program can run.
    pub fn rewind(&mut self) {
        self.pc = 0;
        self.halted = false;
    }

    pub fn load(&mut self, loc: Location, value: Value) {
        self.buffer_mut(loc.buffer).insert(loc.addr, value);
    }

    pub fn get(&self, loc: Location) -> Result<&Value> {
        let buf = match loc.buffer {
            Buffer::Global => &self.global_buffer,
            Buffer::Output => &self.output_buffer,
        };
        buf.get(&loc.addr)
            .ok_or_else(|| Error::Domain(format!("buffer slot {loc} is empty")))
    }

    fn buffer_mut(&mut self, b: Buffer) -> &mut BTreeMap<usize, Value> {
        match b {
            Buffer::Global => &mut self.global_buffer,
            Buffer::Output => &mut self.output_buffer,
        }
    }

    /// Executes the instruction at `pc`. Errors are wrapped with the pc.
    pub fn step(&mut self, program: &[Instruction]) -> Result<()> {
        if self.halted {
            return Ok(());
        }
        let Some(instr) = program.get(self.pc) else {
            self.halted = true;
            return Ok(());
        };
        let pc = self.pc;
        self.execute(instr).map_err(|e| Error::Exec {
            pc,
            source: Box::new(e),
        })?;
        self.pc += 1;
        Ok(())
    }

    fn execute(&mut self, instr: &Instruction) -> Result<()> {
        match instr {
            Instruction::Wrv {
                macro_id,
                src,
                mode,
                row,
                col,
            } => self.exec_wrv(*macro_id, *src, *mode, *row, *col),
            Instruction::Cfg {
                macro_id,
                bits,
                wiring,
            } => {
                let topology = decode_topology(bits)?;
                for partner in [wiring.neg, wiring.aux, wiring.aux_neg]
                    .into_iter()
                    .flatten()
                {
                    if partner >= NUM_MACROS || partner == *macro_id {
                        return Err(Error::Config(format!(
                            "macro {macro_id} cannot be wired to macro {partner}"
                        )));
                    }
                }
                if topology.kind == TopologyKind::Pinv && wiring.aux.is_none() {
                    return Err(Error::Config(
                        "PINV needs an aux macro holding the transpose".into(),
                    ));
                }
                if topology.kind != TopologyKind::Pinv
                    && (wiring.aux.is_some() || wiring.aux_neg.is_some())
                {
                    return Err(Error::Config(format!(
                        "aux wiring is only valid for PINV, not {}",
                        topology.kind
                    )));
                }
                self.register_array[*macro_id] = Some(*bits);
                let m = &mut self.macros[*macro_id];
                m.config = Some(MacroConfig {
                    topology,
                    wiring: *wiring,
                });
                m.latch = None;
                Ok(())
            }
            Instruction::Exe {
                macro_id,
                src,
                vscale,
            } => self.exec_exe(*macro_id, *src, *vscale),
            Instruction::Rdo {
                macro_id,
                dst,
                scale,
            } => {
                let spec = self.converter;
                let convert = |r: &AnalogResult| -> Result<Vec<f64>> {
                    r.v_out
                        .iter()
                        .map(|&v| Ok(adc_readout(v, &spec)? * scale))
                        .collect()
                };
                let value = match &self.macros[*macro_id].latch {
                    None => {
                        return Err(Error::Config(format!(
                            "RDO on macro {macro_id} with nothing latched"
                        )))
                    }
                    Some(Latched::Single(r)) => Value::Vector(DVector::from_vec(convert(r)?)),
                    Some(Latched::Batch(rs)) => {
                        let n = rs.first().map_or(0, |r| r.v_out.len());
                        let rows: Vec<Vec<f64>> = rs.iter().map(convert).collect::<Result<_>>()?;
                        Value::Matrix(DMatrix::from_fn(rows.len(), n, |i, j| rows[i][j]))
                    }
                };
                self.load(*dst, value);
                Ok(())
            }
            Instruction::Mov { src, dst, op } => {
                let v = self.get(*src)?;
                let out = match op {
                    MovOp::Copy => v.clone(),
                    MovOp::Acc => match self.get(*dst) {
                        Err(_) => v.clone(),
                        Ok(d) => accumulate(d, v)?,
                    },
                    MovOp::Im2col { kernel } => Value::Matrix(im2col(v.as_map()?, *kernel)?),
                    MovOp::ToMap { height, width } => {
                        Value::Map(FeatureMap::from_positions(v.as_matrix()?, *height, *width)?)
                    }
                    MovOp::Flatten => match v {
                        Value::Map(m) => Value::Vector(m.flatten()),
                        Value::Vector(x) => Value::Vector(x.clone()),
                        Value::Matrix(m) => Value::Vector(DVector::from_iterator(
                            m.len(),
                            m.row_iter()
                                .flat_map(|r| r.iter().copied().collect::<Vec<_>>()),
                        )),
                    },
                };
                self.load(*dst, out);
                Ok(())
            }
            Instruction::Pool { src, dst } => {
                let out = max_pool_2x2(self.get(*src)?.as_map()?)?;
                self.load(*dst, Value::Map(out));
                Ok(())
            }
            Instruction::Act {
                src,
                dst,
                func: Activation::Relu,
            } => {
                let out = match self.get(*src)? {
                    Value::Vector(v) => Value::Vector(relu(v)),
                    other => other.map_values(|x| x.max(0.0)),
                };
                self.load(*dst, out);
                Ok(())
            }
            Instruction::Cmp {
                macro_id,
                src,
                dst,
                tol,
            } => {
                let levels = level_matrix(self.get(*src)?.as_matrix()?)?;
                let tol = tol.unwrap_or(self.write_verify.tol);
                let m = &mut self.macros[*macro_id];
                m.array.check_shape(levels.shape())?;
                let params = *m.array.params();
                let ideal = levels
                    .map(|l| level_to_conductance(LevelCode::new(l).expect("checked"), &params));
                let read = m.array.read_conductance_matrix(&mut m.rng);
                let mask = comparison_unit(&read, &ideal, tol)?;
                self.load(*dst, Value::Matrix(mask.map(|b| if b { 1.0 } else { 0.0 })));
                Ok(())
            }
            Instruction::Halt => {
                self.halted = true;
                Ok(())
            }
        }
    }

    fn exec_wrv(
        &mut self,
        id: usize,
        src: Location,
        mode: WriteMode,
        row: usize,
        col: usize,
    ) -> Result<()> {
        let levels = level_matrix(self.get(src)?.as_matrix()?)?;
        let (m, n) = levels.shape();
        if row + m > ARRAY_DIM || col + n > ARRAY_DIM {
            return domain(format!(
                "{m}x{n} block at ({row},{col}) does not fit a {ARRAY_DIM}x{ARRAY_DIM} array; tile it across macros"
            ));
        }
        let wv = self.write_verify;
        let mac = &mut self.macros[id];
        mac.array.select_region(ActiveRegion::new(row, m, col, n))?;
        match mode {
            WriteMode::Ideal => {
                mac.array.set_levels_ideal(&levels)?;
                mac.last_program = None;
            }
            WriteMode::Verify => {
                mac.last_program = Some(program_array(&mut mac.array, &levels, &wv, &mut mac.rng)?);
            }
        }
        mac.latch = None;
        Ok(())
    }

    fn exec_exe(&mut self, id: usize, src: Option<Location>, vscale: f64) -> Result<()> {
        let cfg = self.macros[id]
            .config
            .clone()
            .ok_or_else(|| Error::Config(format!("EXE on macro {id} before CFG")))?;
        if !vscale.is_finite() {
            return domain(format!("vscale must be finite, got {vscale}"));
        }
        let kind = cfg.topology.kind;
        let inputs: Vec<DVector<f64>> = match (kind, src) {
            (TopologyKind::Egv, _) => vec![DVector::zeros(0)],
            (_, None) => return Err(Error::Config(format!("{kind} EXE needs a src operand"))),
            (_, Some(loc)) => match self.get(loc)? {
                Value::Vector(v) => vec![v.clone()],
                Value::Matrix(m) => m.row_iter().map(|r| r.transpose()).collect(),
                Value::Map(_) => {
                    return domain("EXE input must be a vector or a matrix of row vectors")
                }
            },
        };
        let batch = matches!(src.map(|l| self.get(l)), Some(Ok(Value::Matrix(_))))
            && kind != TopologyKind::Egv;
        let spec = self.converter;
        let driven: Vec<DVector<f64>> = inputs
            .iter()
            .map(|x| {
                x.iter()
                    .map(|&v| dac_drive(v * vscale, &spec))
                    .collect::<Result<Vec<f64>>>()
                    .map(DVector::from_vec)
            })
            .collect::<Result<_>>()?;

        let mut rng = std::mem::replace(&mut self.macros[id].rng, ChaCha8Rng::seed_from_u64(0));
        let outcome = (|| -> Result<Vec<AnalogResult>> {
            let arr = |k: usize| &self.macros[k].array;
            let main = ArrayOperand::new(arr(id), cfg.wiring.neg.map(arr));
            let mut out = Vec::with_capacity(driven.len());
            for v in &driven {
                out.push(match kind {
                    TopologyKind::Mvm => solve_mvm(&main, v, &cfg.topology, &mut rng)?,
                    TopologyKind::Inv => solve_inv(&main, v, &cfg.topology, &mut rng)?,
                    TopologyKind::Pinv => {
                        let aux_id = cfg.wiring.aux.expect("checked at CFG");
                        let aux = ArrayOperand::new(arr(aux_id), cfg.wiring.aux_neg.map(arr));
                        solve_pinv(&main, &aux, v, &cfg.topology, &mut rng)?
                    }
                    TopologyKind::Egv => solve_egv(&main, &cfg.topology, &mut rng)?,
                });
            }
            Ok(out)
        })();
        self.macros[id].rng = rng;
        let results = outcome?;
        self.analog_ops += results.len() as u64;
        self.macros[id].latch = Some(if batch {
            Latched::Batch(results)
        } else {
            Latched::Single(results.into_iter().next().expect("one input"))
        });
        Ok(())
    }
}

fn accumulate(dst: &Value, src: &Value) -> Result<Value> {
    Ok(match (dst, src) {
        (Value::Vector(a), Value::Vector(b)) if a.len() == b.len() => Value::Vector(a + b),
        (Value::Matrix(a), Value::Matrix(b)) if a.shape() == b.shape() => Value::Matrix(a + b),
        (Value::Matrix(a), Value::Vector(b)) if a.ncols() == b.len() => {
            let mut out = a.clone();
            for mut row in out.row_iter_mut() {
                row += b.transpose();
            }
            Value::Matrix(out)
        }
        (Value::Map(a), Value::Map(b)) if a.data.len() == b.data.len() => Value::Map(FeatureMap {
            data: a.data.iter().zip(&b.data).map(|(x, y)| x + y).collect(),
            ..a.clone()
        }),
        (d, s) => {
            return domain(format!(
                "cannot accumulate a {} into a {}",
                s.kind(),
                d.kind()
            ))
        }
    })
}

fn level_matrix(m: &DMatrix<f64>) -> Result<DMatrix<u8>> {
    if let Some(bad) = m
        .iter()
        .find(|&&v| !(v.fract() == 0.0 && (0.0..=f64::from(LevelCode::MAX.get())).contains(&v)))
    {
        return domain(format!("{bad} is not a valid level code"));
    }
    Ok(m.map(|v| v as u8))
}

/// Runs from the current pc until HALT or the end of the program.
pub fn run_program(state: &mut MachineState, program: &[Instruction]) -> Result<()> {
    while !state.halted {
        state.step(program)?;
    }
    Ok(())
}
