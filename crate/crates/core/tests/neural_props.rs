use convofuse::neural::{
    softmax, Activation, ActivationLayer, AdamConfig, AdamState, Attention, BatchNorm, BiLstm,
    Ctx, Dense, Dropout, Layer, Param, ParamKind, Sequential, Tensor,
};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn fwd(layer: &mut dyn Layer, x: &Tensor, train: bool) -> Tensor {
    let mut r = rng(0);
    layer.forward(x, &mut Ctx { train, rng: &mut r }).unwrap()
}

#[test]
fn batchnorm_constant_batch_is_zero() {
    let mut bn = BatchNorm::new("bn", 2);
    let y = fwd(&mut bn, &Tensor::from_fn(&[4, 2], |_| 3.5), true);
    assert!(y.data().iter().all(|v| *v == 0.0));
}

#[test]
fn batchnorm_beta_shifts_mean() {
    let mut bn = BatchNorm::new("bn", 1);
    bn.beta.value.fill(5.0);
    let mut r = rng(1);
    let x = Tensor::from_fn(&[50, 1], |_| r.gen_range(-2.0..2.0));
    let y = fwd(&mut bn, &x, true);
    let m = y.data().iter().sum::<f64>() / 50.0;
    assert!((m - 5.0).abs() < 1e-12);
}

#[test]
fn batchnorm_random_batch_statistics() {
    let mut bn = BatchNorm::with_eps("bn", 4, 1e-14);
    let mut r = rng(2);
    let x = Tensor::from_fn(&[16, 4, 3, 3], |_| r.gen_range(-10.0..30.0));
    let y = fwd(&mut bn, &x, true);
    for c in 0..4 {
        let vals: Vec<f64> = (0..16)
            .flat_map(|b| y.data()[(b * 4 + c) * 9..(b * 4 + c + 1) * 9].to_vec())
            .collect();
        let n = vals.len() as f64;
        let m = vals.iter().sum::<f64>() / n;
        let v = vals.iter().map(|x| (x - m).powi(2)).sum::<f64>() / n;
        assert!(m.abs() < 1e-9, "mean {m}");
        assert!((v - 1.0).abs() < 1e-6, "var {v}");
    }
}

#[test]
fn lstm_zero_parameters_give_zero_output() {
    let mut l = BiLstm::new("l", 2, 3, &mut rng(3));
    for p in l.params_mut() {
        p.value.fill(0.0);
    }
    let y = fwd(&mut l, &Tensor::from_fn(&[2, 4, 2], |i| i as f64), false);
    assert!(y.data().iter().all(|v| *v == 0.0));
}

#[test]
fn lstm_single_step_directions_coincide() {
    let mut l = BiLstm::new("l", 2, 3, &mut rng(4));
    l.backward.wx.value = l.forward.wx.value.clone();
    l.backward.wh.value = l.forward.wh.value.clone();
    l.backward.b.value = l.forward.b.value.clone();
    let x = Tensor::new(vec![1, 1, 2], vec![0.3, -0.7]).unwrap();
    let both = fwd(&mut l, &x, false);
    let mut single = BiLstm::new("s", 2, 3, &mut rng(4));
    // Output gate pinned shut: the backward direction contributes exactly 0.
    single.backward.wx.value.fill(0.0);
    single.backward.wh.value.fill(0.0);
    single.backward.b.value.data_mut()[9..12].fill(-1e3);
    let one = fwd(&mut single, &x, false);
    for (a, b) in both.data().iter().zip(one.data()) {
        assert!((a - 2.0 * b).abs() < 1e-12);
    }
}

#[test]
fn attention_singleton_and_uniform() {
    let mut att = Attention::new("a", 3, &mut rng(5));
    let x = Tensor::new(vec![1, 1, 3], vec![0.4, -1.0, 2.0]).unwrap();
    let y = fwd(&mut att, &x, false);
    assert_eq!(y.data(), x.data());
    assert_eq!(att.last_weights().unwrap().data(), &[1.0]);

    let x = Tensor::from_fn(&[1, 4, 3], |i| [0.4, -1.0, 2.0][i % 3]);
    fwd(&mut att, &x, false);
    for w in att.last_weights().unwrap().data() {
        assert!((w - 0.25).abs() < 1e-15);
    }
}

proptest! {
    #[test]
    fn attention_output_in_hull(seed in 0u64..1000, steps in 1usize..6) {
        let mut r = rng(seed);
        let mut att = Attention::new("a", 3, &mut r);
        let x = Tensor::from_fn(&[2, steps, 3], |_| r.gen_range(-5.0..5.0));
        let y = fwd(&mut att, &x, false);
        let a = att.last_weights().unwrap();
        for b in 0..2 {
            prop_assert!((a.item(b).iter().sum::<f64>() - 1.0).abs() < 1e-12);
            for j in 0..3 {
                let col: Vec<f64> = (0..steps).map(|t| x.item(b)[t * 3 + j]).collect();
                let lo = col.iter().cloned().fold(f64::INFINITY, f64::min);
                let hi = col.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
                let v = y.item(b)[j];
                prop_assert!(v >= lo - 1e-12 && v <= hi + 1e-12);
            }
        }
    }

    #[test]
    fn softmax_is_a_distribution(v in proptest::collection::vec(-50.0f64..50.0, 2..8)) {
        let n = v.len();
        let p = softmax(&Tensor::new(vec![1, n], v).unwrap()).unwrap();
        prop_assert!((p.data().iter().sum::<f64>() - 1.0).abs() < 1e-12);
        prop_assert!(p.data().iter().all(|x| *x > 0.0));
    }

    #[test]
    fn dropout_zero_train_equals_inference(seed in 0u64..500) {
        let mut r = rng(seed);
        let mut net = Sequential::new();
        net.push(Dense::new("d", 4, 3, &mut r));
        net.push(Dropout::new(0.0).unwrap());
        let x = Tensor::from_fn(&[3, 4], |_| r.gen_range(-1.0..1.0));
        let a = fwd(&mut net, &x, true);
        let b = fwd(&mut net, &x, false);
        prop_assert_eq!(a, b);
    }

    #[test]
    fn argmax_invariant_to_logit_shift(a in -10.0f64..10.0, b in -10.0f64..10.0, c in -100.0f64..100.0) {
        let p = softmax(&Tensor::new(vec![1, 2], vec![a, b]).unwrap()).unwrap();
        let q = softmax(&Tensor::new(vec![1, 2], vec![a + c, b + c]).unwrap()).unwrap();
        prop_assert_eq!(p.data()[1] > p.data()[0], q.data()[1] > q.data()[0]);
    }
}

#[test]
fn linear_stack_is_affine() {
    let mut r = rng(6);
    let mut net = Sequential::new();
    net.push(Dense::new("d1", 3, 5, &mut r));
    net.push(ActivationLayer::new(Activation::Linear));
    net.push(Dense::new("d2", 5, 4, &mut r));
    net.push(ActivationLayer::new(Activation::Linear));
    net.push(Dense::new("d3", 4, 2, &mut r));
    let f = |net: &mut Sequential, x: [f64; 3]| fwd(net, &Tensor::new(vec![1, 3], x.to_vec()).unwrap(), false);
    let o = f(&mut net, [0.0; 3]);
    let cols: Vec<Tensor> = (0..3)
        .map(|i| {
            let mut e = [0.0; 3];
            e[i] = 1.0;
            f(&mut net, e)
        })
        .collect();
    let x = [0.7, -1.3, 2.1];
    let y = f(&mut net, x);
    for k in 0..2 {
        let pred = o.data()[k]
            + (0..3).map(|i| x[i] * (cols[i].data()[k] - o.data()[k])).sum::<f64>();
        assert!((pred - y.data()[k]).abs() < 1e-12);
    }
}

#[test]
fn adam_zero_gradient_and_block_independence() {
    let cfg = AdamConfig::default();
    let mut p = Param::new("p", ParamKind::Weight, Tensor::new(vec![2], vec![1.0, -1.0]).unwrap());
    let mut s = AdamState::new();
    s.update(&cfg, [&mut p]).unwrap();
    assert_eq!(p.value.data(), &[1.0, -1.0]);
    assert_eq!(s.step, 1);

    let mk = |name: &str, v: f64, g: f64| {
        let mut p = Param::new(name, ParamKind::Weight, Tensor::new(vec![1], vec![v]).unwrap());
        p.grad.data_mut()[0] = g;
        p
    };
    let (mut a, mut b) = (mk("a", 0.5, 0.3), mk("b", -2.0, -4.0));
    AdamState::new().update(&cfg, [&mut a, &mut b]).unwrap();
    let (mut a1, mut b1) = (mk("a", 0.5, 0.3), mk("b", -2.0, -4.0));
    AdamState::new().update(&cfg, [&mut a1]).unwrap();
    AdamState::new().update(&cfg, [&mut b1]).unwrap();
    assert_eq!(a.value, a1.value);
    assert_eq!(b.value, b1.value);
}

#[test]
fn dense_shape_error_names_both_shapes() {
    let mut d = Dense::new("d", 4, 3, &mut rng(7));
    let mut r = rng(0);
    let err = d
        .forward(&Tensor::zeros(&[2, 5]), &mut Ctx { train: false, rng: &mut r })
        .unwrap_err()
        .to_string();
    assert!(err.contains("[2, 5]") && err.contains("[3, 4]"), "{err}");
}
