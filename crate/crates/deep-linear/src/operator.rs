use nalgebra::{DMatrix, DVector};

use crate::{symmetric_eigen, DeepLinearError, DeepLinearNet};

/// Largest `n_L * n_0` for which the error operator is assembled densely.
pub const OPERATOR_CAP: usize = 64;

/// The factors of the error dynamics around the current layers:
/// `A_i = (W_L ... W_{i+1})(W_L ... W_{i+1})^T` and
/// `B_i = (W_{i-1} ... W_1)^T (W_{i-1} ... W_1)`.
pub fn error_factors(net: &DeepLinearNet) -> (Vec<DMatrix<f64>>, Vec<DMatrix<f64>>) {
    let prefix = net.prefix_products();
    let suffix = net.suffix_products();
    (0..net.depth())
        .map(|i| {
            let s = &suffix[i + 1];
            let p = &prefix[i];
            (s * s.transpose(), p.transpose() * p)
        })
        .unzip()
}

/// Matrix of `X -> sum_i A_i X B_i` acting on column-major `vec(X)`.
///
/// `vec(A X B) = (B^T kron A) vec(X)`.
pub fn sylvester_sum_operator(a: &[DMatrix<f64>], b: &[DMatrix<f64>]) -> Result<DMatrix<f64>, DeepLinearError> {
    if a.is_empty() || a.len() != b.len() {
        return Err(DeepLinearError::InvalidArgument(
            "operator needs matching, nonempty factor lists".into(),
        ));
    }
    let (m, n) = (a[0].nrows(), b[0].nrows());
    let mut op = DMatrix::zeros(m * n, m * n);
    for (ai, bi) in a.iter().zip(b) {
        if !ai.is_square() || !bi.is_square() || ai.nrows() != m || bi.nrows() != n {
            return Err(DeepLinearError::InvalidArgument(
                "operator factors must be square with consistent sizes".into(),
            ));
        }
        op += bi.transpose().kronecker(ai);
    }
    Ok(op)
}

/// Dense matrix of the linearised error map `E -> sum_i A_i E B_i`.
pub fn error_operator(net: &DeepLinearNet) -> Result<DMatrix<f64>, DeepLinearError> {
    let size = net.output_dim() * net.input_dim();
    if size > OPERATOR_CAP {
        return Err(DeepLinearError::DimensionCapExceeded {
            size,
            cap: OPERATOR_CAP,
        });
    }
    let (a, b) = error_factors(net);
    sylvester_sum_operator(&a, &b)
}

/// Largest eigenvalue of a (numerically) symmetric operator matrix.
pub fn lambda_max(op: &DMatrix<f64>) -> f64 {
    let (values, _) = symmetric_eigen(op);
    values.iter().copied().fold(f64::NEG_INFINITY, f64::max)
}

/// Rayleigh quotient of the operator at `u v^T`:
/// `sum_i (u^T A_i u)(v^T B_i v) / (|u|^2 |v|^2)`, a lower bound on its
/// largest eigenvalue when every `A_i`, `B_i` is symmetric PSD.
pub fn lemma2_lower_bound(
    a: &[DMatrix<f64>],
    b: &[DMatrix<f64>],
    u: &DVector<f64>,
    v: &DVector<f64>,
) -> Result<f64, DeepLinearError> {
    if a.len() != b.len() {
        return Err(DeepLinearError::InvalidArgument("factor lists differ in length".into()));
    }
    let (uu, vv) = (u.norm_squared(), v.norm_squared());
    if uu == 0.0 || vv == 0.0 {
        return Err(DeepLinearError::InvalidArgument("u and v must be nonzero".into()));
    }
    let mut total = 0.0;
    for (ai, bi) in a.iter().zip(b) {
        if ai.nrows() != u.len() || bi.nrows() != v.len() {
            return Err(DeepLinearError::InvalidArgument(
                "factor and vector sizes differ".into(),
            ));
        }
        total += (u.transpose() * ai * u)[(0, 0)] * (v.transpose() * bi * v)[(0, 0)];
    }
    Ok(total / (uu * vv))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_layer_is_identity_operator() {
        let net = DeepLinearNet::new(vec![DMatrix::from_row_slice(2, 3, &[1.0, 2.0, 3.0, 4.0, 5.0, 6.0])]).unwrap();
        let op = error_operator(&net).unwrap();
        assert_eq!(op, DMatrix::identity(6, 6));
        assert!((lambda_max(&op) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn scalar_chain_operator_value() {
        let net = DeepLinearNet::scalars(&[1.0, 4.0]).unwrap();
        let op = error_operator(&net).unwrap();
        assert_eq!(op.shape(), (1, 1));
        assert_eq!(op[(0, 0)], 17.0);
    }

    #[test]
    fn operator_matches_direct_application() {
        let net = DeepLinearNet::new(vec![
            DMatrix::from_row_slice(2, 3, &[0.3, -1.2, 0.5, 0.9, 0.1, -0.4]),
            DMatrix::from_row_slice(2, 2, &[1.1, 0.2, -0.7, 0.6]),
        ])
        .unwrap();
        let (a, b) = error_factors(&net);
        let op = error_operator(&net).unwrap();
        let x = DMatrix::from_row_slice(2, 3, &[1.0, -2.0, 0.5, 0.25, 3.0, -1.0]);
        let direct: DMatrix<f64> = a.iter().zip(&b).map(|(ai, bi)| ai * &x * bi).sum();
        let via_op = &op * DVector::from_column_slice(x.as_slice());
        for (d, o) in direct.as_slice().iter().zip(via_op.iter()) {
            assert!((d - o).abs() < 1e-12);
        }
    }

    #[test]
    fn cap_is_enforced() {
        let net = DeepLinearNet::new(vec![DMatrix::zeros(9, 8)]).unwrap();
        assert_eq!(
            error_operator(&net),
            Err(DeepLinearError::DimensionCapExceeded { size: 72, cap: 64 })
        );
    }

    #[test]
    fn lemma2_unit_case_and_scalar_chain() {
        let i = DMatrix::identity(3, 3);
        let u = DVector::from_vec(vec![0.6, 0.8, 0.0]);
        let v = DVector::from_vec(vec![0.0, 0.0, 1.0]);
        assert!(
            (lemma2_lower_bound(std::slice::from_ref(&i), std::slice::from_ref(&i), &u, &v).unwrap() - 1.0).abs()
                < 1e-15
        );

        let net = DeepLinearNet::scalars(&[1.0, 4.0]).unwrap();
        let (a, b) = error_factors(&net);
        let one = DVector::from_element(1, 1.0);
        assert_eq!(lemma2_lower_bound(&a, &b, &one, &one).unwrap(), 17.0);
    }
}
