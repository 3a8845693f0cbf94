mod common;

use common::gradcheck;

#[test]
fn linear_layer_gradients() {
    assert_eq!(gradcheck::linear_layer_gradients().unwrap(), gradcheck::CASES);
}

#[test]
fn leaky_relu_gradient() {
    gradcheck::leaky_relu_gradient().unwrap();
}

#[test]
fn dropout_gradient_with_fixed_mask() {
    gradcheck::dropout_gradient_with_fixed_mask().unwrap();
}

#[test]
fn cross_entropy_gradient() {
    gradcheck::cross_entropy_gradient().unwrap();
}

#[test]
fn whole_network_gradients() {
    gradcheck::whole_network_gradients().unwrap();
}
