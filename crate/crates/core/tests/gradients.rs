//! Backpropagation checked against central finite differences in f64.

use flowmap_core::surrogate::{l1_loss, l1_loss_grad, Architecture, Network};
use ndarray::Array2;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

struct Batch {
    position: Array2<f64>,
    cycle: Array2<f64>,
    target: Array2<f64>,
}

fn random_batch(rng: &mut ChaCha8Rng, b: usize) -> Batch {
    Batch {
        position: Array2::from_shape_fn((b, 3), |(_, c)| if c < 2 { rng.random_range(-1.0..1.0) } else { 0.0 }),
        cycle: Array2::from_shape_fn((b, 1), |_| rng.random_range(0.05..1.0)),
        target: Array2::from_shape_fn((b, 3), |_| rng.random_range(-1.5..1.5)),
    }
}

fn loss(net: &Network<f64>, batch: &Batch) -> f64 {
    let pred = net.forward(batch.position.view(), batch.cycle.view());
    l1_loss(pred.view(), batch.target.view()).unwrap()
}

fn analytic(net: &Network<f64>, batch: &Batch) -> Network<f64> {
    let (pred, cache) = net.forward_train(batch.position.view(), batch.cycle.view());
    net.backward(&cache, l1_loss_grad(pred.view(), batch.target.view()))
}

/// Central differences, one parameter at a time.
fn finite_difference(net: &Network<f64>, batch: &Batch, step: f64) -> Vec<Vec<f64>> {
    let mut probe = net.clone();
    let shapes: Vec<usize> = net.tensors().iter().map(|t| t.len()).collect();
    let mut out = Vec::with_capacity(shapes.len());
    for (ti, &len) in shapes.iter().enumerate() {
        let mut g = vec![0.0; len];
        for (k, gk) in g.iter_mut().enumerate() {
            let original = probe.tensors()[ti][k];
            probe.tensors_mut()[ti][k] = original + step;
            let up = loss(&probe, batch);
            probe.tensors_mut()[ti][k] = original - step;
            let down = loss(&probe, batch);
            probe.tensors_mut()[ti][k] = original;
            *gk = (up - down) / (2.0 * step);
        }
        out.push(g);
    }
    out
}

fn relative_error(a: &[f64], b: &[f64]) -> f64 {
    let diff: f64 = a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum::<f64>().sqrt();
    let na: f64 = a.iter().map(|x| x * x).sum::<f64>().sqrt();
    let nb: f64 = b.iter().map(|x| x * x).sum::<f64>().sqrt();
    diff / na.max(nb).max(1e-12)
}

#[test]
fn backprop_matches_finite_differences() {
    let arch = Architecture::scaled(0.125);
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let net: Network<f64> = Network::init(&arch, &mut rng);
    let batch = random_batch(&mut rng, 8);

    let grads = analytic(&net, &batch);
    let numeric = finite_difference(&net, &batch, 1e-6);
    let names = net.tensor_names();
    for ((name, a), n) in names.iter().zip(grads.tensors()).zip(&numeric) {
        let err = relative_error(a, n);
        assert!(err < 1e-4, "{name}: relative error {err:e}");
    }
}

#[test]
fn exact_fit_has_zero_gradient() {
    let arch = Architecture::scaled(0.125);
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let net: Network<f64> = Network::init(&arch, &mut rng);
    let mut batch = random_batch(&mut rng, 8);
    batch.target = net.forward(batch.position.view(), batch.cycle.view());
    let grads = analytic(&net, &batch);
    assert!(grads.tensors().iter().all(|t| t.iter().all(|&g| g == 0.0)));
}

#[test]
fn gradient_depends_only_on_residual_sign() {
    let arch = Architecture::scaled(0.125);
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let net: Network<f64> = Network::init(&arch, &mut rng);
    let batch = random_batch(&mut rng, 8);
    let pred = net.forward(batch.position.view(), batch.cycle.view());
    // push every target twice as far from the prediction, same side
    let stretched = Batch {
        position: batch.position.clone(),
        cycle: batch.cycle.clone(),
        target: &pred + &((&batch.target - &pred) * 2.0),
    };
    assert_eq!(analytic(&net, &batch), analytic(&net, &stretched));
}
