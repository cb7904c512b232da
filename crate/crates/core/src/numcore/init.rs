use super::{Matrix, Rng};
use crate::scalar::Scalar;

/// Glorot/Xavier uniform: entries in `[-b, b]` with `b = sqrt(6 / (rows + cols))`.
pub fn xavier_uniform<T: Scalar>(rows: usize, cols: usize, rng: &mut Rng) -> Matrix<T> {
    assert!(rows > 0 && cols > 0, "xavier_uniform needs positive dims");
    let bound = xavier_bound(rows, cols);
    let data = (0..rows * cols)
        .map(|_| T::lit(rng.uniform(-bound, bound)))
        .collect();
    Matrix::new(rows, cols, data).expect("length matches")
}

pub fn xavier_bound(rows: usize, cols: usize) -> f64 {
    (6.0 / (rows + cols) as f64).sqrt()
}

/// Small-normal init used for embedding tables.
pub fn normal<T: Scalar>(rows: usize, cols: usize, std_dev: f64, rng: &mut Rng) -> Matrix<T> {
    let data = (0..rows * cols)
        .map(|_| T::lit(rng.normal(0.0, std_dev)))
        .collect();
    Matrix::new(rows, cols, data).expect("length matches")
}

pub fn zeros<T: Scalar>(rows: usize, cols: usize) -> Matrix<T> {
    Matrix::zeros(rows, cols)
}

pub fn ones<T: Scalar>(rows: usize, cols: usize) -> Matrix<T> {
    Matrix::ones(rows, cols)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zeros_and_ones() {
        let z = zeros::<f64>(2, 3);
        assert_eq!(z.data(), &[0.0; 6]);
        assert!(ones::<f64>(3, 1).data().iter().all(|&x| x == 1.0));
    }

    #[test]
    fn xavier_within_bound() {
        let mut rng = Rng::new(3);
        for &(r, c) in &[(1, 1), (4, 7), (32, 128), (160, 32)] {
            let m = xavier_uniform::<f64>(r, c, &mut rng);
            let b = (6.0 / (r + c) as f64).sqrt();
            assert!(m.data().iter().all(|x| x.abs() <= b));
        }
    }

    #[test]
    fn xavier_deterministic() {
        let a = xavier_uniform::<f64>(5, 6, &mut Rng::new(42));
        let b = xavier_uniform::<f64>(5, 6, &mut Rng::new(42));
        assert_eq!(a, b);
    }
}
