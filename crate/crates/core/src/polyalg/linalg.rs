use nalgebra::{DMatrix, DVector};

use super::PolyAlgError;

/// Singular values (descending) and the matching right singular vectors as columns.
///
/// Wide matrices are padded with zero rows so that every column of V is available.
pub fn svd_full(mat: &DMatrix<f64>) -> Result<(Vec<f64>, DMatrix<f64>), PolyAlgError> {
    let (rows, cols) = mat.shape();
    if rows == 0 || cols == 0 {
        return Err(PolyAlgError::Validation("empty matrix".into()));
    }
    if mat.iter().any(|c| !c.is_finite()) {
        return Err(PolyAlgError::Validation("matrix has non-finite entries".into()));
    }
    let padded = if rows < cols {
        let mut p = DMatrix::zeros(cols, cols);
        p.view_mut((0, 0), (rows, cols)).copy_from(mat);
        p
    } else {
        mat.clone()
    };
    let svd = padded.svd(false, true);
    let v_t = svd
        .v_t
        .ok_or_else(|| PolyAlgError::Validation("singular value decomposition failed".into()))?;
    let mut order: Vec<usize> = (0..cols).collect();
    order.sort_by(|&a, &b| svd.singular_values[b].total_cmp(&svd.singular_values[a]));
    let values = order.iter().map(|&i| svd.singular_values[i]).collect();
    let mut v = DMatrix::zeros(cols, cols);
    for (k, &i) in order.iter().enumerate() {
        v.set_column(k, &v_t.row(i).transpose());
    }
    Ok((values, v))
}

/// Orthonormal basis of the numerical nullspace: right singular vectors with σ < tol·σ_max.
pub fn nullspace(mat: &DMatrix<f64>, tol: f64) -> Result<Vec<DVector<f64>>, PolyAlgError> {
    if tol <= 0.0 {
        return Err(PolyAlgError::Validation("tolerance must be positive".into()));
    }
    let (values, v) = svd_full(mat)?;
    let smax = values[0];
    Ok(values
        .iter()
        .enumerate()
        .filter(|(_, &s)| smax == 0.0 || s < tol * smax)
        .map(|(k, _)| v.column(k).into_owned())
        .collect())
}

/// Smallest singular value relative to the largest, with its right singular vector.
pub fn smallest_singular(mat: &DMatrix<f64>) -> Result<(f64, DVector<f64>), PolyAlgError> {
    let (values, v) = svd_full(mat)?;
    let smax = values[0];
    let last = values.len() - 1;
    let rel = if smax == 0.0 { 0.0 } else { values[last] / smax };
    Ok((rel, v.column(last).into_owned()))
}
