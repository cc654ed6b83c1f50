//! Analytic gradients against central finite differences.

use ndarray::Array2;
use onh_core::pointnet::{
    backward, bce_loss, forward, init_params, Architecture, ModelParams, INPUT_FEATURES, VF_POINTS,
};
use onh_core::seed;
use rand::Rng;

const H: f64 = 1e-5;

fn loss_at(p: &ModelParams, x: &Array2<f64>, y: &[u8]) -> f64 {
    bce_loss(&forward(p, x.view()).unwrap(), y).unwrap()
}

fn relative_error(a: f64, b: f64) -> f64 {
    let scale = a.abs().max(b.abs());
    if scale < 1e-7 {
        (a - b).abs() / 1e-7
    } else {
        (a - b).abs() / scale
    }
}

fn worst_error(
    p: &ModelParams,
    x: &Array2<f64>,
    y: &[u8],
    indices: impl Iterator<Item = usize>,
) -> (f64, usize) {
    let (_, g) = backward(p, x.view(), y).unwrap();
    let mut probe = p.clone();
    let mut worst = (0.0, 0);
    for i in indices {
        let orig = probe.values()[i];
        probe.values_mut()[i] = orig + H;
        let up = loss_at(&probe, x, y);
        probe.values_mut()[i] = orig - H;
        let down = loss_at(&probe, x, y);
        probe.values_mut()[i] = orig;
        let fd = (up - down) / (2.0 * H);
        let e = relative_error(g.0[i], fd);
        if e > worst.0 {
            worst = (e, i);
        }
    }
    worst
}

/// Initialized weights with small random biases. Zero biases put every point
/// whose previous layer is fully inactive exactly on a ReLU kink, where the
/// loss has no derivative for finite differences to approximate.
fn generic_params(arch: &Architecture, s: u64) -> ModelParams {
    let mut p = init_params(arch, &mut seed::rng(s)).unwrap();
    let mut rng = seed::rng(500 + s);
    for l in p.layers().to_vec() {
        for b in &mut p.values_mut()[l.bias_offset..l.bias_offset + l.fan_out] {
            *b = rng.random_range(-0.1..0.1);
        }
    }
    p
}

fn case(n: usize, s: u64) -> (Array2<f64>, Vec<u8>) {
    let mut rng = seed::rng(1000 + s);
    let x = Array2::from_shape_fn((n, INPUT_FEATURES), |_| rng.random_range(-2.0..2.0));
    let y = (0..VF_POINTS).map(|_| rng.random_range(0..2u8)).collect();
    (x, y)
}

#[test]
fn every_parameter_small_network() {
    let arch = Architecture { encoder: vec![16, 16, 32], head: vec![32, VF_POINTS] };
    for s in 0..3u64 {
        for n in [64, 512] {
            let p = generic_params(&arch, s);
            let (x, y) = case(n, s);
            let (err, at) = worst_error(&p, &x, &y, 0..p.len());
            assert!(err < 1e-4, "seed {s}, n {n}: parameter {at} relative error {err}");
        }
    }
}

#[test]
fn sampled_parameters_default_network() {
    let arch = Architecture::default();
    let p = generic_params(&arch, 21);
    let (x, y) = case(64, 21);
    let mut rng = seed::rng(22);
    let picks: Vec<usize> = (0..400).map(|_| rng.random_range(0..p.len())).collect();
    let (err, at) = worst_error(&p, &x, &y, picks.into_iter());
    assert!(err < 1e-4, "parameter {at} relative error {err}");
}
