use super::tensor::Tensor4;

pub fn relu_forward(x: &Tensor4) -> Tensor4 {
    let mut y = x.clone();
    relu_inplace(y.data_mut());
    y
}

pub fn relu_inplace(v: &mut [f64]) {
    for x in v {
        *x = x.max(0.0);
    }
}

/// Gradient through ReLU given its input; zero where `x <= 0`.
pub fn relu_backward(x: &Tensor4, dy: &Tensor4) -> Tensor4 {
    let mut dx = dy.clone();
    relu_backward_inplace(x.data(), dx.data_mut());
    dx
}

pub fn relu_backward_inplace(x: &[f64], dy: &mut [f64]) {
    for (g, &v) in dy.iter_mut().zip(x) {
        if v <= 0.0 {
            *g = 0.0;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn forward_clamps_negatives() {
        let x = Tensor4::from_vec([1, 1, 1, 3], vec![-1.0, 2.0, 0.0]).unwrap();
        assert_eq!(relu_forward(&x).data(), &[0.0, 2.0, 0.0]);
    }

    #[test]
    fn all_negative_gives_zero_output_and_gradient() {
        let x = Tensor4::from_vec([1, 1, 2, 2], vec![-1.0, -0.5, -3.0, -1e-9]).unwrap();
        let dy = Tensor4::from_vec([1, 1, 2, 2], vec![1.0; 4]).unwrap();
        assert!(relu_forward(&x).data().iter().all(|v| *v == 0.0));
        assert!(relu_backward(&x, &dy).data().iter().all(|v| *v == 0.0));
    }

    #[test]
    fn finite_difference_away_from_kink() {
        let vals = vec![-0.7, 0.3, 1.2, -0.01, 0.5, -2.0];
        let x = Tensor4::from_vec([1, 1, 2, 3], vals.clone()).unwrap();
        let dy = Tensor4::from_vec([1, 1, 2, 3], vec![0.3, -1.1, 0.7, 2.0, 0.9, -0.4]).unwrap();
        let g = relu_backward(&x, &dy);
        let f = |v: &[f64]| -> f64 { v.iter().zip(dy.data()).map(|(a, b)| a.max(0.0) * b).sum() };
        let h = 1e-6;
        for i in 0..vals.len() {
            let (mut p, mut m) = (vals.clone(), vals.clone());
            p[i] += h;
            m[i] -= h;
            let fd = (f(&p) - f(&m)) / (2.0 * h);
            assert!((fd - g.data()[i]).abs() <= 1e-6 * fd.abs().max(1e-8), "{i}");
        }
    }
}
