//! Small dense helpers over row-major `d × d` slices.

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub(crate) fn mat_vec(m: &[f64], d: usize, x: &[f64]) -> Vec<f64> {
    m.chunks_exact(d).map(|row| dot(row, x)).collect()
}

pub(crate) fn identity(d: usize) -> Vec<f64> {
    let mut m = vec![0.0; d * d];
    for i in 0..d {
        m[i * d + i] = 1.0;
    }
    m
}

/// Lower-triangular Cholesky factor, or `None` if `m` is not positive definite.
pub(crate) fn cholesky(m: &[f64], d: usize) -> Option<Vec<f64>> {
    let mut l = vec![0.0; d * d];
    for i in 0..d {
        for j in 0..=i {
            let s: f64 = (0..j).map(|k| l[i * d + k] * l[j * d + k]).sum();
            if i == j {
                let v = m[i * d + i] - s;
                if v <= 0.0 || !v.is_finite() {
                    return None;
                }
                l[i * d + i] = v.sqrt();
            } else {
                l[i * d + j] = (m[i * d + j] - s) / l[j * d + j];
            }
        }
    }
    Some(l)
}

/// Inverse of a symmetric positive definite matrix via its Cholesky factor.
/// The result is symmetrised exactly.
pub(crate) fn spd_inverse(m: &[f64], d: usize) -> Option<Vec<f64>> {
    let l = cholesky(m, d)?;
    // L^{-1} by forward substitution, column by column.
    let mut l_inv = vec![0.0; d * d];
    for c in 0..d {
        for i in c..d {
            let mut s = if i == c { 1.0 } else { 0.0 };
            for k in c..i {
                s -= l[i * d + k] * l_inv[k * d + c];
            }
            l_inv[i * d + c] = s / l[i * d + i];
        }
    }
    // M^{-1} = L^{-T} L^{-1}
    let mut inv = vec![0.0; d * d];
    for i in 0..d {
        for j in 0..=i {
            let s: f64 = (i..d).map(|k| l_inv[k * d + i] * l_inv[k * d + j]).sum();
            inv[i * d + j] = s;
            inv[j * d + i] = s;
        }
    }
    Some(inv)
}
