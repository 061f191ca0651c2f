use nalgebra::DMatrix;

use super::AnalysisError;

/// Savitzky-Golay smoothing.
///
/// Interior points take the value of a degree-`order` least-squares
/// polynomial fitted over the centred window. The first and last
/// `window / 2` points are evaluated on the polynomial of the first and
/// last full window.
///
/// Each output is formed as `y_i` plus the filtered residuals from the
/// local line through `y_i`. This equals the plain weighted sum (the
/// weights reproduce degree-1 polynomials) but returns constants and
/// exactly representable ramps bit-for-bit.
pub fn savitzky_golay(series: &[f64], window: usize, order: usize) -> Result<Vec<f64>, AnalysisError> {
    if window.is_multiple_of(2) || order == 0 || order >= window {
        return Err(AnalysisError::Filter(format!(
            "window must be odd and 1 <= order < window (window {window}, order {order})"
        )));
    }
    if series.len() < window {
        return Err(AnalysisError::Filter(format!(
            "series of length {} is shorter than window {window}",
            series.len()
        )));
    }
    let hat = hat_matrix(window, order);
    let half = window / 2;
    let n = series.len();
    let apply = |row: usize, start: usize| -> f64 {
        let i = start + row;
        let y = series[i];
        let slope = if i + 1 < n { series[i + 1] - y } else { y - series[i - 1] };
        let residual: f64 = (0..window)
            .map(|k| {
                let offset = k as f64 - row as f64;
                hat[(row, k)] * ((series[start + k] - y) - offset * slope)
            })
            .sum();
        y + residual
    };
    let mut out = Vec::with_capacity(n);
    for i in 0..n {
        let v = if i < half {
            apply(i, 0)
        } else if i >= n - half {
            apply(i + window - n, n - window)
        } else {
            apply(half, i - half)
        };
        out.push(v);
    }
    Ok(out)
}

/// Projection onto polynomials of degree `order` sampled at the window
/// positions, `Q Q^T` from a thin QR of the Vandermonde matrix.
fn hat_matrix(window: usize, order: usize) -> DMatrix<f64> {
    let half = (window / 2) as f64;
    let vander = DMatrix::from_fn(window, order + 1, |r, c| (r as f64 - half).powi(c as i32));
    let q = vander.qr().q();
    &q * q.transpose()
}
