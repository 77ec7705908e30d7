use crate::error::{Error, Result};
use crate::modulation::ModulationFormat;
use crate::tx::SymbolSequence;

/// First-postcursor estimate: lag-1 correlation of the residual
/// `soft - level(decision)` with the previous decision, over decision power.
pub fn estimate_postcursor(soft: &[f64], decisions: &SymbolSequence) -> Result<f64> {
    if soft.len() != decisions.len() {
        return Err(Error::LengthMismatch {
            left: soft.len(),
            right: decisions.len(),
        });
    }
    if soft.len() < 2 {
        return Err(Error::invalid("soft", "need at least two symbols"));
    }
    let lv = decisions.levels();
    let mut num = 0.0;
    let mut den = 0.0;
    for k in 1..soft.len() {
        num += (soft[k] - lv[k]) * lv[k - 1];
        den += lv[k - 1] * lv[k - 1];
    }
    Ok(num / den)
}

/// Viterbi detection for `y[k] = a[k] + h1 * a[k-1] + noise` over the
/// format's levels, with the state before the first symbol left free.
pub fn mlse_1tap(soft: &[f64], h1: f64, format: ModulationFormat) -> Result<Vec<u8>> {
    if !(h1.abs() < 1.0) {
        return Err(Error::invalid(
            "h1",
            format!("postcursor must satisfy |h1| < 1, got {h1}"),
        ));
    }
    let m = format.order();
    let levels = format.levels();
    let n = soft.len();
    if n == 0 {
        return Ok(Vec::new());
    }
    let mut metric = vec![0.0f64; m];
    let mut next = vec![0.0f64; m];
    let mut back = vec![0u8; n * m];
    for (k, &y) in soft.iter().enumerate() {
        for j in 0..m {
            let mut best = f64::INFINITY;
            let mut arg = 0usize;
            for i in 0..m {
                let e = y - levels[j] - h1 * levels[i];
                let c = metric[i] + e * e;
                if c < best {
                    best = c;
                    arg = i;
                }
            }
            next[j] = best;
            back[k * m + j] = arg as u8;
        }
        std::mem::swap(&mut metric, &mut next);
        // Keep metrics bounded on long blocks.
        let floor = metric.iter().copied().fold(f64::INFINITY, f64::min);
        for v in metric.iter_mut() {
            *v -= floor;
        }
    }
    let mut state = (0..m)
        .min_by(|&a, &b| metric[a].total_cmp(&metric[b]))
        .unwrap();
    let mut out = vec![0u8; n];
    for k in (0..n).rev() {
        out[k] = state as u8;
        state = back[k * m + state] as usize;
    }
    Ok(out)
}
