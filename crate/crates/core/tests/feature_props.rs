use graph_aggr::{apply_binary, identity_row, reduce_into, BinaryOp, ReduceOp};
use proptest::prelude::*;

fn vec_pair() -> impl Strategy<Value = (Vec<f32>, Vec<f32>)> {
    (1usize..20).prop_flat_map(|d| (prop::collection::vec(-100f32..100.0, d), prop::collection::vec(-100f32..100.0, d)))
}

proptest! {
    #[test]
    fn add_commutes((x, y) in vec_pair()) {
        prop_assert_eq!(apply_binary(BinaryOp::Add, &x, Some(&y)).unwrap(), apply_binary(BinaryOp::Add, &y, Some(&x)).unwrap());
        prop_assert_eq!(apply_binary(BinaryOp::Mul, &x, Some(&y)).unwrap(), apply_binary(BinaryOp::Mul, &y, Some(&x)).unwrap());
    }

    #[test]
    fn reduce_identity_is_neutral(v in prop::collection::vec(-1e6f32..1e6, 1..20)) {
        for op in ReduceOp::ALL {
            prop_assert_eq!(reduce_into(op, &identity_row(op, v.len()), &v).unwrap(), v.clone());
        }
    }

    #[test]
    fn dot_is_sum_of_mul((x, y) in vec_pair()) {
        let prod = apply_binary(BinaryOp::Mul, &x, Some(&y)).unwrap();
        let summed = prod.iter().fold(identity_row(ReduceOp::Sum, 1), |acc, &p| reduce_into(ReduceOp::Sum, &acc, &[p]).unwrap());
        prop_assert_eq!(apply_binary(BinaryOp::Dot, &x, Some(&y)).unwrap(), summed);
    }

    #[test]
    fn broadcast_equals_replication(x in prop::collection::vec(-10f32..10.0, 1..20), c in -10f32..10.0) {
        let rep = vec![c; x.len()];
        for op in [BinaryOp::Add, BinaryOp::Sub, BinaryOp::Mul, BinaryOp::Div, BinaryOp::Dot] {
            prop_assert_eq!(apply_binary(op, &x, Some(&[c])).unwrap(), apply_binary(op, &x, Some(&rep)).unwrap());
            prop_assert_eq!(apply_binary(op, &[c], Some(&x)).unwrap(), apply_binary(op, &rep, Some(&x)).unwrap());
        }
    }
}

#[test]
fn sub_and_div_are_order_sensitive() {
    let (x, y) = ([3.0f32, 8.0], [1.0f32, 2.0]);
    assert_ne!(apply_binary(BinaryOp::Sub, &x, Some(&y)).unwrap(), apply_binary(BinaryOp::Sub, &y, Some(&x)).unwrap());
    assert_ne!(apply_binary(BinaryOp::Div, &x, Some(&y)).unwrap(), apply_binary(BinaryOp::Div, &y, Some(&x)).unwrap());
}
