use nalgebra::{DMatrix, DVector};

use super::data::DataSet;
use crate::error::{Error, Result};
use crate::model::OcvPolynomial;

/// Default polynomial order.
pub const DEFAULT_ORDER: usize = 8;

/// Minimum fraction of `[0, 1]` the low-rate samples must span.
pub const MIN_COVERAGE: f64 = 0.8;

/// Coulomb-counted state of charge (fraction) for each row, current held
/// between samples.
///
/// Without a known starting value the curve is anchored so that its maximum
/// is full charge.
pub fn coulomb_soc(data: &DataSet, capacity: f64) -> Vec<f64> {
    let mut q = Vec::with_capacity(data.rows.len());
    let mut acc = 0.0;
    q.push(0.0);
    for w in data.rows.windows(2) {
        acc += w[0].current * (w[1].t - w[0].t);
        q.push(acc / capacity);
    }
    let offset = match data.soc0 {
        Some(s0) => s0,
        None => 1.0 - q.iter().copied().fold(f64::NEG_INFINITY, f64::max),
    };
    q.into_iter().map(|x| x + offset).collect()
}

/// Least-squares OCV polynomial of order `order` from low-rate data.
///
/// Rows with `|I|` above C/20 are ignored. When the fit is not monotone the
/// order is lowered until it is.
pub fn fit_ocv(data: &DataSet, order: usize) -> Result<OcvPolynomial> {
    data.validate()?;
    let capacity = data
        .capacity
        .ok_or_else(|| Error::Precondition("OCV fit needs a capacity hint".into()))?;
    if !(capacity > 0.0) {
        return Err(Error::param("capacity", "must be > 0"));
    }
    let limit = capacity / 3600.0 / 20.0;
    let soc = coulomb_soc(data, capacity);
    let (s, v): (Vec<f64>, Vec<f64>) = data
        .rows
        .iter()
        .zip(&soc)
        .filter(|(r, _)| r.current.abs() <= limit)
        .map(|(r, &s)| (s, r.voltage))
        .unzip();
    let lo = s.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = s.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let covered = if s.is_empty() { 0.0 } else { (hi.min(1.0) - lo.max(0.0)).max(0.0) };
    if covered < MIN_COVERAGE {
        return Err(Error::Coverage {
            covered,
            required: MIN_COVERAGE,
        });
    }
    let mut n = order;
    loop {
        let lambda = least_squares(&s, &v, n)?;
        match OcvPolynomial::new(lambda) {
            Ok(ocv) => return Ok(ocv),
            Err(Error::NotMonotone(msg)) if n > 1 => {
                log::info!("order-{n} OCV fit not monotone ({msg}); retrying with order {}", n - 1);
                n -= 1;
            }
            Err(e) => return Err(e),
        }
    }
}

fn least_squares(s: &[f64], v: &[f64], order: usize) -> Result<Vec<f64>> {
    if s.len() <= order {
        return Err(Error::Coverage {
            covered: 0.0,
            required: MIN_COVERAGE,
        });
    }
    let a = DMatrix::from_fn(s.len(), order + 1, |i, j| s[i].powi(j as i32));
    let b = DVector::from_column_slice(v);
    let x = a
        .svd(true, true)
        .solve(&b, 1e-14)
        .map_err(|e| Error::Conditioning(e.to_string()))?;
    Ok(x.iter().copied().collect())
}
