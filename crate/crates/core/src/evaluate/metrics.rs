use crate::error::{Error, Result};

fn check(predicted: &[f64], actual: &[f64], op: &'static str) -> Result<()> {
    if predicted.len() != actual.len() {
        return Err(Error::Shape {
            op,
            left: (1, predicted.len()),
            right: (1, actual.len()),
        });
    }
    if predicted.is_empty() {
        return Err(Error::Data(format!("{op} of empty series")));
    }
    Ok(())
}

/// `√(mean((p − a)²))`.
pub fn rmse(predicted: &[f64], actual: &[f64]) -> Result<f64> {
    check(predicted, actual, "rmse")?;
    let ss: f64 = predicted.iter().zip(actual).map(|(p, a)| (p - a).powi(2)).sum();
    Ok((ss / predicted.len() as f64).sqrt())
}

/// `mean(|p − a|)`.
pub fn mae(predicted: &[f64], actual: &[f64]) -> Result<f64> {
    check(predicted, actual, "mae")?;
    let s: f64 = predicted.iter().zip(actual).map(|(p, a)| (p - a).abs()).sum();
    Ok(s / predicted.len() as f64)
}

/// `max(|p − a|)`.
pub fn max_error(predicted: &[f64], actual: &[f64]) -> Result<f64> {
    max_error_at(predicted, actual).map(|(_, e)| e)
}

/// Largest absolute deviation and its index; ties go to the earliest index.
pub fn max_error_at(predicted: &[f64], actual: &[f64]) -> Result<(usize, f64)> {
    check(predicted, actual, "max_error")?;
    let mut best = (0, (predicted[0] - actual[0]).abs());
    for (i, (p, a)) in predicted.iter().zip(actual).enumerate().skip(1) {
        let e = (p - a).abs();
        if e > best.1 {
            best = (i, e);
        }
    }
    Ok(best)
}
