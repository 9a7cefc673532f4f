//! CNN inference on the macro group.
//!
//! Convolutions are lowered to MVM by image-to-column unrolling; every layer
//! occupies its own macros (two planes per slice for signed weights), biases
//! are added digitally, and ReLU / 2x2 max pooling run on the digital units.
//! A conv layer is followed by ReLU then pooling; every fc layer except the
//! last is followed by ReLU.
//!
//! Weights file (`AMCW`, little-endian): magic `AMCW`, `u32` version (1),
//! `u32` layer count, then per layer `u32` kind (0 conv, 1 fc), `u32`
//! out, in, kh, kw (1, 1 for fc), `f32` input range, `f32` output range
//! (largest `|W x|` seen in calibration), the `f32` weights in
//! `(out, in, kh, kw)` row-major order and `f32` bias of length `out`.

use std::fmt::Write as _;
use std::path::Path;

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;

use super::compile::{input_vscale, MvmPlan};
use super::config::ExperimentConfig;
use super::instance_seed;
use crate::error::{domain, Error, Result};
use crate::mapping::{
    full_scale, quantize_matrix, reconstruct_effective_matrix, MappedMatrix, QuantizationScheme,
    Slice,
};
use crate::system::digital::{max_pool_2x2, FeatureMap};
use crate::system::isa::{Activation, Instruction, Location, MovOp, WriteMode};
use crate::system::{run_program, MachineState, Value};

const MAGIC: &[u8; 4] = b"AMCW";
const VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LayerKind {
    Conv,
    Fc,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Layer {
    pub kind: LayerKind,
    pub out_ch: usize,
    pub in_ch: usize,
    pub kh: usize,
    pub kw: usize,
    pub in_range: f64,
    pub out_range: f64,
    /// `(out, in, kh, kw)` row-major.
    pub weights: Vec<f64>,
    pub bias: Vec<f64>,
}

impl Layer {
    /// Fan-in: `in * kh * kw`.
    pub fn fan_in(&self) -> usize {
        self.in_ch * self.kh * self.kw
    }

    /// `out x fan_in` weight matrix; columns ordered `(c, ky, kx)`.
    pub fn weight_matrix(&self) -> DMatrix<f64> {
        DMatrix::from_row_slice(self.out_ch, self.fan_in(), &self.weights)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct WeightsFile {
    pub layers: Vec<Layer>,
}

struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl Reader<'_> {
    fn take(&mut self, n: usize) -> Result<&[u8]> {
        let end = self.pos.checked_add(n).filter(|&e| e <= self.bytes.len());
        let end = end.ok_or_else(|| Error::Parse("weights file is truncated".into()))?;
        let s = &self.bytes[self.pos..end];
        self.pos = end;
        Ok(s)
    }

    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(
            self.take(4)?.try_into().expect("4 bytes"),
        ))
    }

    fn f32s(&mut self, n: usize) -> Result<Vec<f64>> {
        let raw = self.take(
            n.checked_mul(4)
                .ok_or_else(|| Error::Parse("layer too large".into()))?,
        )?;
        let v: Vec<f64> = raw
            .chunks_exact(4)
            .map(|c| f64::from(f32::from_le_bytes(c.try_into().expect("4 bytes"))))
            .collect();
        if v.iter().any(|x| !x.is_finite()) {
            return Err(Error::Parse(
                "weights file contains non-finite values".into(),
            ));
        }
        Ok(v)
    }
}

impl WeightsFile {
    pub fn parse(bytes: &[u8]) -> Result<Self> {
        let mut r = Reader { bytes, pos: 0 };
        if r.take(4)? != MAGIC {
            return Err(Error::Parse("not an AMCW weights file".into()));
        }
        let version = r.u32()?;
        if version != VERSION {
            return Err(Error::Parse(format!(
                "unsupported weights version {version}"
            )));
        }
        let count = r.u32()? as usize;
        let mut layers = Vec::with_capacity(count.min(64));
        for i in 0..count {
            let kind = match r.u32()? {
                0 => LayerKind::Conv,
                1 => LayerKind::Fc,
                k => return Err(Error::Parse(format!("layer {i}: unknown kind {k}"))),
            };
            let dims: Vec<usize> = (0..4)
                .map(|_| r.u32().map(|d| d as usize))
                .collect::<Result<_>>()?;
            let (out_ch, in_ch, kh, kw) = (dims[0], dims[1], dims[2], dims[3]);
            if dims.contains(&0) || (kind == LayerKind::Fc && (kh, kw) != (1, 1)) {
                return Err(Error::Parse(format!("layer {i}: bad shape {dims:?}")));
            }
            let ranges = r.f32s(2)?;
            let weights = r.f32s(out_ch * in_ch * kh * kw)?;
            let bias = r.f32s(out_ch)?;
            layers.push(Layer {
                kind,
                out_ch,
                in_ch,
                kh,
                kw,
                in_range: ranges[0],
                out_range: ranges[1],
                weights,
                bias,
            });
        }
        if r.pos != bytes.len() {
            return Err(Error::Parse("trailing bytes after the last layer".into()));
        }
        Ok(Self { layers })
    }

    pub fn read(path: &Path) -> Result<Self> {
        Self::parse(&read_file(path)?)
    }

    pub fn encode(&self) -> Vec<u8> {
        let mut b = MAGIC.to_vec();
        let u = |b: &mut Vec<u8>, v: usize| b.extend((v as u32).to_le_bytes());
        let f = |b: &mut Vec<u8>, v: f64| b.extend((v as f32).to_le_bytes());
        u(&mut b, VERSION as usize);
        u(&mut b, self.layers.len());
        for l in &self.layers {
            u(&mut b, if l.kind == LayerKind::Conv { 0 } else { 1 });
            for d in [l.out_ch, l.in_ch, l.kh, l.kw] {
                u(&mut b, d);
            }
            f(&mut b, l.in_range);
            f(&mut b, l.out_range);
            for &w in l.weights.iter().chain(&l.bias) {
                f(&mut b, w);
            }
        }
        b
    }

    /// Checks that the layers compose on a `1 x size x size` input and
    /// returns the per-layer input shapes `(c, h, w)` (fc: `(n, 1, 1)`).
    pub fn check_geometry(&self, size: usize) -> Result<Vec<(usize, usize, usize)>> {
        let mut shape = (1, size, size);
        let mut flat = false;
        let mut shapes = Vec::new();
        for (i, l) in self.layers.iter().enumerate() {
            shapes.push(shape);
            match l.kind {
                LayerKind::Conv => {
                    if flat
                        || l.in_ch != shape.0
                        || l.kh != l.kw
                        || l.kh > shape.1
                        || l.kw > shape.2
                    {
                        return domain(format!(
                            "layer {i}: conv {}x{}x{} does not fit input {shape:?}",
                            l.in_ch, l.kh, l.kw
                        ));
                    }
                    let (h, w) = (shape.1 - l.kh + 1, shape.2 - l.kw + 1);
                    if h % 2 != 0 || w % 2 != 0 {
                        return domain(format!("layer {i}: conv output {h}x{w} cannot be pooled"));
                    }
                    shape = (l.out_ch, h / 2, w / 2);
                }
                LayerKind::Fc => {
                    let n = shape.0 * shape.1 * shape.2;
                    if l.in_ch != n {
                        return domain(format!(
                            "layer {i}: fc expects {} inputs, previous layer gives {n}",
                            l.in_ch
                        ));
                    }
                    shape = (l.out_ch, 1, 1);
                    flat = true;
                }
            }
            if l.fan_in() > crate::crossbar::ARRAY_DIM || l.out_ch > crate::crossbar::ARRAY_DIM {
                return domain(format!(
                    "layer {i}: {}x{} exceeds one array; tiling is not supported",
                    l.fan_in(),
                    l.out_ch
                ));
            }
        }
        if self.layers.last().map(|l| l.kind) != Some(LayerKind::Fc) {
            return domain("network must end in an fc layer");
        }
        Ok(shapes)
    }
}

fn read_file(path: &Path) -> Result<Vec<u8>> {
    std::fs::read(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))
}

/// IDX images (magic `0x00000803`): `(count, rows, cols, pixels)`.
pub fn parse_idx_images(bytes: &[u8]) -> Result<(usize, usize, usize, Vec<u8>)> {
    let be = |i: usize| -> Result<usize> {
        bytes
            .get(4 * i..4 * i + 4)
            .map(|b| u32::from_be_bytes(b.try_into().expect("4 bytes")) as usize)
            .ok_or_else(|| Error::Parse("IDX header truncated".into()))
    };
    if be(0)? != 0x803 {
        return Err(Error::Parse(
            "not an IDX image file (magic 0x00000803)".into(),
        ));
    }
    let (n, rows, cols) = (be(1)?, be(2)?, be(3)?);
    let body = &bytes[16..];
    if body.len() != n * rows * cols {
        return Err(Error::Parse(format!(
            "IDX image payload is {} bytes, expected {}",
            body.len(),
            n * rows * cols
        )));
    }
    Ok((n, rows, cols, body.to_vec()))
}

/// IDX labels (magic `0x00000801`).
pub fn parse_idx_labels(bytes: &[u8]) -> Result<Vec<u8>> {
    if bytes.len() < 8 || u32::from_be_bytes(bytes[0..4].try_into().expect("4 bytes")) != 0x801 {
        return Err(Error::Parse(
            "not an IDX label file (magic 0x00000801)".into(),
        ));
    }
    let n = u32::from_be_bytes(bytes[4..8].try_into().expect("4 bytes")) as usize;
    if bytes.len() - 8 != n {
        return Err(Error::Parse(format!(
            "IDX label payload is {} bytes, expected {n}",
            bytes.len() - 8
        )));
    }
    Ok(bytes[8..].to_vec())
}

#[derive(Debug, Clone)]
pub struct Dataset {
    pub size: usize,
    pub images: Vec<Vec<u8>>,
    pub labels: Vec<u8>,
}

impl Dataset {
    pub fn read(images: &Path, labels: &Path) -> Result<Self> {
        let (n, rows, cols, pixels) = parse_idx_images(&read_file(images)?)?;
        let labels = parse_idx_labels(&read_file(labels)?)?;
        if labels.len() != n {
            return domain(format!("{n} images but {} labels", labels.len()));
        }
        if rows != cols {
            return domain(format!("images must be square, got {rows}x{cols}"));
        }
        let images = pixels.chunks(rows * cols).map(<[u8]>::to_vec).collect();
        Ok(Self {
            size: rows,
            images,
            labels,
        })
    }

    pub fn truncate(&mut self, n: usize) {
        self.images.truncate(n);
        self.labels.truncate(n);
    }
}

/// `1 x size x size` map with pixels scaled to `[0, 1]`.
pub fn image_map(pixels: &[u8], size: usize) -> Result<FeatureMap> {
    FeatureMap::new(
        1,
        size,
        size,
        pixels.iter().map(|&p| f64::from(p) / 255.0).collect(),
    )
}

fn conv_direct(map: &FeatureMap, w: &DMatrix<f64>, bias: &[f64], k: usize) -> FeatureMap {
    let (h, wd) = (map.height - k + 1, map.width - k + 1);
    let mut data = vec![0.0; w.nrows() * h * wd];
    for o in 0..w.nrows() {
        for y in 0..h {
            for x in 0..wd {
                let mut acc = bias[o];
                for c in 0..map.channels {
                    for ky in 0..k {
                        for kx in 0..k {
                            acc += w[(o, (c * k + ky) * k + kx)] * map.at(c, y + ky, x + kx);
                        }
                    }
                }
                data[(o * h + y) * wd + x] = acc;
            }
        }
    }
    FeatureMap {
        channels: w.nrows(),
        height: h,
        width: wd,
        data,
    }
}

/// Digital forward pass with the given weight matrices (one per layer).
pub fn forward_digital(
    net: &WeightsFile,
    matrices: &[DMatrix<f64>],
    image: &FeatureMap,
) -> Result<DVector<f64>> {
    let mut map = image.clone();
    let mut vec: Option<DVector<f64>> = None;
    let last = net.layers.len() - 1;
    for (i, (l, w)) in net.layers.iter().zip(matrices).enumerate() {
        match l.kind {
            LayerKind::Conv => {
                let mut y = conv_direct(&map, w, &l.bias, l.kh);
                y.data.iter_mut().for_each(|v| *v = v.max(0.0));
                map = max_pool_2x2(&y)?;
            }
            LayerKind::Fc => {
                let x = vec.take().unwrap_or_else(|| map.flatten());
                let mut y = w * x + DVector::from_column_slice(&l.bias);
                if i != last {
                    y.apply(|v| *v = v.max(0.0));
                }
                vec = Some(y);
            }
        }
    }
    vec.ok_or_else(|| Error::Domain("network produced no output".into()))
}

/// Quantized weight matrices as the arrays represent them.
pub fn quantized_matrices(net: &WeightsFile, bits: u32) -> Result<Vec<DMatrix<f64>>> {
    net.layers
        .iter()
        .map(|l| {
            let w = l.weight_matrix();
            let s = QuantizationScheme::new(
                bits / 4,
                crate::mapping::SignedMode::Differential,
                full_scale(&w),
            )?;
            Ok(reconstruct_effective_matrix(&quantize_matrix(&w, &s)?))
        })
        .collect()
}

pub fn float_matrices(net: &WeightsFile) -> Vec<DMatrix<f64>> {
    net.layers.iter().map(Layer::weight_matrix).collect()
}

pub fn argmax(v: &DVector<f64>) -> usize {
    // first index wins ties
    let mut best = 0;
    for i in 1..v.len() {
        if v[i] > v[best] {
            best = i;
        }
    }
    best
}

/// A network lowered onto a programmed macro group.
#[derive(Debug, Clone)]
pub struct CompiledNetwork {
    /// Machine after the setup program (arrays programmed, CFG done).
    pub base: MachineState,
    pub setup: Vec<Instruction>,
    /// Program run once per image on a copy of `base`.
    pub per_image: Vec<Instruction>,
    pub plans: Vec<MvmPlan>,
    pub mapped: Vec<MappedMatrix>,
    pub size: usize,
    pub seed: u64,
}

pub const INPUT_SLOT: Location = Location {
    buffer: crate::system::isa::Buffer::Global,
    addr: 0,
};
pub const LOGITS_SLOT: Location = Location {
    buffer: crate::system::isa::Buffer::Output,
    addr: 0,
};

fn bias_slot(layer: usize) -> Location {
    Location::global(50 + layer)
}

fn plane_slot(layer: usize, plane: usize) -> Location {
    Location::global(100 + 4 * layer + plane)
}

impl CompiledNetwork {
    /// Quantizes, plans and programs every layer (write-verify when noise is
    /// on, ideal placement otherwise).
    pub fn compile(net: &WeightsFile, cfg: &ExperimentConfig, size: usize) -> Result<Self> {
        let shapes = net.check_geometry(size)?;
        let bits = cfg.bits;
        let params = cfg.effective_device();
        let mode = if cfg.noise {
            WriteMode::Verify
        } else {
            WriteMode::Ideal
        };
        let mut base = MachineState::new(
            params,
            cfg.converter,
            cfg.effective_write_verify(),
            cfg.seed,
        )?;
        let mut setup = Vec::new();
        let mut per_image = Vec::new();
        let mut plans = Vec::new();
        let mut mapped_all = Vec::new();
        let mut next_macro = 0;
        let mut cur = INPUT_SLOT;
        let mut next = 1;
        let last = net.layers.len() - 1;
        for (li, l) in net.layers.iter().enumerate() {
            let w = l.weight_matrix();
            let scheme = QuantizationScheme::new(
                bits / 4,
                crate::mapping::SignedMode::Differential,
                full_scale(&w),
            )?;
            // the array computes G^T v, so it holds W^T (fan_in x out)
            let mapped = quantize_matrix(&w, &scheme)?.transpose();
            let quantum = scheme.code_quantum();
            let weights = scheme.slice_weights();
            let bounds: Vec<f64> = mapped
                .slices()
                .iter()
                .zip(&weights)
                .map(|(slice, wt)| match slice {
                    Slice::Lsb => 15.0 * l.fan_in() as f64 * l.in_range,
                    _ => l.out_range / (wt * quantum),
                })
                .collect();
            let plan = MvmPlan::new(
                &mapped,
                next_macro,
                &params,
                input_vscale(l.in_range, &cfg.converter),
                &bounds,
            )?;
            next_macro += MvmPlan::macros_needed(&mapped);
            for (k, p) in mapped.level_planes.iter().enumerate() {
                base.load(plane_slot(li, k), Value::Matrix(p.levels.map(f64::from)));
            }
            base.load(
                bias_slot(li),
                Value::Vector(DVector::from_column_slice(&l.bias)),
            );
            setup.extend(plan.setup(&mapped, |k| plane_slot(li, k), mode));

            let g = Location::global;
            match l.kind {
                LayerKind::Conv => {
                    let (_, h, wd) = shapes[li];
                    let (oh, ow) = (h - l.kh + 1, wd - l.kw + 1);
                    per_image.push(Instruction::Mov {
                        src: cur,
                        dst: g(next),
                        op: MovOp::Im2col { kernel: l.kh },
                    });
                    per_image.extend(plan.execute(g(next), g(next + 1), g(next + 2)));
                    per_image.push(Instruction::Mov {
                        src: bias_slot(li),
                        dst: g(next + 1),
                        op: MovOp::Acc,
                    });
                    per_image.push(Instruction::Mov {
                        src: g(next + 1),
                        dst: g(next + 3),
                        op: MovOp::ToMap {
                            height: oh,
                            width: ow,
                        },
                    });
                    per_image.push(Instruction::Act {
                        src: g(next + 3),
                        dst: g(next + 4),
                        func: Activation::Relu,
                    });
                    per_image.push(Instruction::Pool {
                        src: g(next + 4),
                        dst: g(next + 5),
                    });
                    cur = g(next + 5);
                    next += 6;
                }
                LayerKind::Fc => {
                    if matches!(
                        net.layers.get(li.wrapping_sub(1)).map(|p| p.kind),
                        None | Some(LayerKind::Conv)
                    ) {
                        per_image.push(Instruction::Mov {
                            src: cur,
                            dst: g(next),
                            op: MovOp::Flatten,
                        });
                        cur = g(next);
                        next += 1;
                    }
                    per_image.extend(plan.execute(cur, g(next), g(next + 1)));
                    per_image.push(Instruction::Mov {
                        src: bias_slot(li),
                        dst: g(next),
                        op: MovOp::Acc,
                    });
                    if li != last {
                        per_image.push(Instruction::Act {
                            src: g(next),
                            dst: g(next + 2),
                            func: Activation::Relu,
                        });
                        cur = g(next + 2);
                    } else {
                        cur = g(next);
                    }
                    next += 3;
                }
            }
            plans.push(plan);
            mapped_all.push(mapped);
        }
        per_image.push(Instruction::Mov {
            src: cur,
            dst: LOGITS_SLOT,
            op: MovOp::Copy,
        });
        per_image.push(Instruction::Halt);
        let mut setup_prog = setup.clone();
        setup_prog.push(Instruction::Halt);
        run_program(&mut base, &setup_prog)?;
        base.rewind();
        Ok(Self {
            base,
            setup,
            per_image: per_image.clone(),
            plans,
            mapped: mapped_all,
            size,
            seed: cfg.seed,
        })
    }

    /// Logits of one image; read noise is keyed by `(seed, index)`.
    pub fn infer(&self, pixels: &[u8], index: u64) -> Result<DVector<f64>> {
        let mut state = self.base.clone();
        state.reseed(instance_seed(self.seed, index));
        state.load(INPUT_SLOT, Value::Map(image_map(pixels, self.size)?));
        run_program(&mut state, &self.per_image)?;
        Ok(state.get(LOGITS_SLOT)?.as_vector()?.clone())
    }
}

#[derive(Debug, Clone)]
pub struct NnReport {
    pub config: ExperimentConfig,
    pub labels: Vec<u8>,
    pub analog: Vec<usize>,
    pub float: Vec<usize>,
    pub quantized: Vec<usize>,
}

fn accuracy(pred: &[usize], labels: &[u8]) -> f64 {
    if labels.is_empty() {
        return f64::NAN;
    }
    pred.iter()
        .zip(labels)
        .filter(|(p, l)| **p == usize::from(**l))
        .count() as f64
        / labels.len() as f64
}

impl NnReport {
    pub fn analog_accuracy(&self) -> f64 {
        accuracy(&self.analog, &self.labels)
    }

    pub fn float_accuracy(&self) -> f64 {
        accuracy(&self.float, &self.labels)
    }

    pub fn quantized_accuracy(&self) -> f64 {
        accuracy(&self.quantized, &self.labels)
    }

    pub fn to_csv(&self) -> String {
        let mut s = String::from("# inference report\n");
        for line in self.config.to_text().lines() {
            let _ = writeln!(s, "# {line}");
        }
        s.push_str("index,label,analog,float,quantized\n");
        for i in 0..self.labels.len() {
            let _ = writeln!(
                s,
                "{i},{},{},{},{}",
                self.labels[i], self.analog[i], self.float[i], self.quantized[i]
            );
        }
        let _ = writeln!(
            s,
            "# summary images={} analog_accuracy={:?} float_accuracy={:?} quantized_accuracy={:?}",
            self.labels.len(),
            self.analog_accuracy(),
            self.float_accuracy(),
            self.quantized_accuracy()
        );
        s
    }
}

/// Runs the configured inference experiment. Images run in parallel, each
/// on its own noise stream.
pub fn nn_infer(cfg: &ExperimentConfig) -> Result<NnReport> {
    cfg.validate()?;
    let net = WeightsFile::read(&cfg.weights)?;
    let mut data = Dataset::read(&cfg.images, &cfg.labels)?;
    if let Some(n) = cfg.n_images {
        data.truncate(n);
    }
    let compiled = CompiledNetwork::compile(&net, cfg, data.size)?;
    let float_w = float_matrices(&net);
    let quant_w = quantized_matrices(&net, cfg.bits)?;
    let rows: Vec<(usize, usize, usize)> = data
        .images
        .par_iter()
        .enumerate()
        .map(|(i, px)| {
            let analog = argmax(&compiled.infer(px, i as u64)?);
            let map = image_map(px, data.size)?;
            let f = argmax(&forward_digital(&net, &float_w, &map)?);
            let q = argmax(&forward_digital(&net, &quant_w, &map)?);
            Ok((analog, f, q))
        })
        .collect::<Result<_>>()?;
    Ok(NnReport {
        config: cfg.clone(),
        labels: data.labels,
        analog: rows.iter().map(|r| r.0).collect(),
        float: rows.iter().map(|r| r.1).collect(),
        quantized: rows.iter().map(|r| r.2).collect(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tiny_net() -> WeightsFile {
        let conv = Layer {
            kind: LayerKind::Conv,
            out_ch: 2,
            in_ch: 1,
            kh: 3,
            kw: 3,
            in_range: 1.0,
            out_range: 3.0,
            weights: (0..18).map(|i| ((i * 7 % 11) as f64 - 5.0) / 8.0).collect(),
            bias: vec![0.25, -0.5],
        };
        let fc = Layer {
            kind: LayerKind::Fc,
            out_ch: 3,
            in_ch: 2 * 2 * 2,
            kh: 1,
            kw: 1,
            in_range: 3.0,
            out_range: 6.0,
            weights: (0..24)
                .map(|i| ((i * 5 % 13) as f64 - 6.0) / 10.0)
                .collect(),
            bias: vec![0.0, 0.125, -0.125],
        };
        WeightsFile {
            layers: vec![conv, fc],
        }
    }

    #[test]
    fn weights_round_trip() {
        let net = tiny_net();
        let back = WeightsFile::parse(&net.encode()).unwrap();
        assert_eq!(back.layers.len(), 2);
        assert_eq!(back.check_geometry(6).unwrap(), vec![(1, 6, 6), (2, 2, 2)]);
        let mut bad = net.encode();
        bad.push(0);
        assert!(WeightsFile::parse(&bad).is_err());
        assert!(WeightsFile::parse(b"NOPE").is_err());
        assert!(net.check_geometry(7).is_err());
    }

    #[test]
    fn idx_headers() {
        let mut img = vec![0, 0, 8, 3, 0, 0, 0, 1, 0, 0, 0, 2, 0, 0, 0, 2];
        img.extend([1, 2, 3, 4]);
        assert_eq!(parse_idx_images(&img).unwrap(), (1, 2, 2, vec![1, 2, 3, 4]));
        assert!(parse_idx_images(&img[..18]).is_err());
        assert_eq!(
            parse_idx_labels(&[0, 0, 8, 1, 0, 0, 0, 2, 7, 9]).unwrap(),
            vec![7, 9]
        );
        assert!(parse_idx_labels(&[0, 0, 8, 3, 0, 0, 0, 0]).is_err());
    }

    #[test]
    fn noiseless_high_resolution_matches_quantized_oracle() {
        let net = tiny_net();
        let mut cfg = ExperimentConfig::new(super::super::Experiment::NnInfer);
        cfg.noise = false;
        cfg.bits = 8;
        cfg.converter = crate::system::ConverterSpec::with_bits(32);
        let c = CompiledNetwork::compile(&net, &cfg, 6).unwrap();
        let px: Vec<u8> = (0..36).map(|i| (i * 37 % 256) as u8).collect();
        let analog = c.infer(&px, 0).unwrap();
        let oracle = forward_digital(
            &net,
            &quantized_matrices(&net, 8).unwrap(),
            &image_map(&px, 6).unwrap(),
        )
        .unwrap();
        assert!(
            (&analog - &oracle).amax() <= 1e-6 * oracle.amax(),
            "{analog} vs {oracle}"
        );
    }
}
