mod common;

use nalgebra::DVector;

use amc_sim::apps::config::{Experiment, ExperimentConfig};
use amc_sim::apps::nn::{
    argmax, float_matrices, forward_digital, image_map, quantized_matrices, CompiledNetwork,
    Dataset, LayerKind, WeightsFile,
};
use amc_sim::system::ConverterSpec;

use common::{cnn_forward, OracleLayer};

fn fixture() -> (ExperimentConfig, WeightsFile, Dataset) {
    let cfg = ExperimentConfig::new(Experiment::NnInfer);
    let net = WeightsFile::read(&cfg.weights).unwrap();
    let data = Dataset::read(&cfg.images, &cfg.labels).unwrap();
    (cfg, net, data)
}

fn oracle_layers(net: &WeightsFile) -> Vec<OracleLayer<'_>> {
    net.layers
        .iter()
        .map(|l| OracleLayer {
            conv: l.kind == LayerKind::Conv,
            out_ch: l.out_ch,
            in_ch: l.in_ch,
            k: l.kh,
            weights: &l.weights,
            bias: &l.bias,
        })
        .collect()
}

#[test]
fn fixture_shapes() {
    let (_, net, data) = fixture();
    assert_eq!(data.size, 28);
    assert_eq!(data.images.len(), 1000);
    assert_eq!(data.labels.len(), 1000);
    assert!(data.labels.iter().all(|&l| l < 10));
    assert_eq!(net.check_geometry(28).unwrap().len(), 4);
}

#[test]
fn library_float_forward_matches_oracle() {
    let (_, net, data) = fixture();
    let layers = oracle_layers(&net);
    let mats = float_matrices(&net);
    for px in data.images.iter().take(25) {
        let lib = forward_digital(&net, &mats, &image_map(px, 28).unwrap()).unwrap();
        let flat: Vec<f64> = px.iter().map(|&p| f64::from(p) / 255.0).collect();
        let ours = cnn_forward(&layers, &flat, 28);
        for (a, b) in lib.iter().zip(&ours) {
            assert!((a - b).abs() <= 1e-9 * (1.0 + b.abs()));
        }
    }
}

#[test]
fn blank_image_follows_the_bias_path() {
    let (mut cfg, net, _) = fixture();
    cfg.noise = false;
    cfg.bits = 8;
    let compiled = CompiledNetwork::compile(&net, &cfg, 28).unwrap();
    let blank = vec![0u8; 28 * 28];
    let analog = compiled.infer(&blank, 0).unwrap();
    let expected = cnn_forward(&oracle_layers(&net), &vec![0.0; 28 * 28], 28);
    assert_eq!(argmax(&analog), argmax(&DVector::from_vec(expected)));
}

#[test]
fn twelve_bit_converters_track_the_quantized_oracle() {
    let (mut cfg, net, data) = fixture();
    cfg.noise = false;
    cfg.bits = 8;
    cfg.converter = ConverterSpec::with_bits(12);
    let compiled = CompiledNetwork::compile(&net, &cfg, 28).unwrap();
    let q = quantized_matrices(&net, 8).unwrap();
    let mut agree = 0;
    let n = 50;
    for (i, px) in data.images.iter().take(n).enumerate() {
        let analog = compiled.infer(px, i as u64).unwrap();
        let oracle = forward_digital(&net, &q, &image_map(px, 28).unwrap()).unwrap();
        agree += usize::from(argmax(&analog) == argmax(&oracle));
    }
    assert!(agree >= n - 1, "{agree}/{n}");
}

#[test]
fn exact_converters_reproduce_quantized_logits() {
    let (mut cfg, net, data) = fixture();
    cfg.noise = false;
    cfg.bits = 8;
    cfg.converter = ConverterSpec::with_bits(32);
    let compiled = CompiledNetwork::compile(&net, &cfg, 28).unwrap();
    let q = quantized_matrices(&net, 8).unwrap();
    for (i, px) in data.images.iter().take(10).enumerate() {
        let analog = compiled.infer(px, i as u64).unwrap();
        let oracle = forward_digital(&net, &q, &image_map(px, 28).unwrap()).unwrap();
        assert!((&analog - &oracle).amax() <= 1e-6 * oracle.amax());
    }
}
