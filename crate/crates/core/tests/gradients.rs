mod common;

use common::gradcheck::{self, NETWORKS, TOL};

fn assert_all(run: impl FnOnce(&mut Vec<(String, f64)>)) {
    let mut out = Vec::new();
    run(&mut out);
    assert!(!out.is_empty());
    for (label, err) in out {
        assert!(err <= TOL, "{label}: relative error {err:.3e}");
    }
}

#[test]
fn conv_gradients() {
    assert_all(gradcheck::conv);
}

#[test]
fn relu_gradient() {
    assert_all(gradcheck::relu);
}

#[test]
fn add_gradient() {
    assert_all(gradcheck::add);
}

#[test]
fn batch_norm_gradients() {
    assert_all(gradcheck::batch_norm);
}

#[test]
fn residual_loss_gradient() {
    assert_all(gradcheck::residual_loss);
}

#[test]
fn single_unit_networks() {
    for (i, arch) in NETWORKS[..4].iter().enumerate() {
        assert_all(|out| gradcheck::network(out, arch, i as u64 + 1));
    }
}

#[test]
fn projection_networks() {
    for (i, arch) in NETWORKS.iter().enumerate().skip(4) {
        assert_all(|out| gradcheck::network(out, arch, i as u64 + 1));
    }
}
