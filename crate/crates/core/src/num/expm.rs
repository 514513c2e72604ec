use crate::error::Result;
use crate::num::dense::{eye, re, require_square, ComplexMatrix};

const TAYLOR_ORDER: usize = 20;
const SCALE_TARGET: f64 = 0.5;

fn is_zero(m: &ComplexMatrix) -> bool {
    m.iter().all(|z| z.re == 0.0 && z.im == 0.0)
}

fn one_norm(m: &ComplexMatrix) -> f64 {
    (0..m.ncols())
        .map(|k| m.column(k).iter().map(|z| z.norm()).sum::<f64>())
        .fold(0.0, f64::max)
}

/// Powers `[I, M, M^2, ...]` up to the first exactly vanishing one, if it
/// appears within `n` steps.
fn nilpotent_powers(m: &ComplexMatrix) -> Option<Vec<ComplexMatrix>> {
    let n = m.nrows();
    if n > 32 {
        return None;
    }
    let mut powers = vec![eye(n)];
    for _ in 0..n {
        let next = powers.last().unwrap() * m;
        if is_zero(&next) {
            return Some(powers);
        }
        powers.push(next);
    }
    None
}

/// Matrix exponential.
///
/// Nilpotent input is summed exactly; otherwise scaling and squaring around
/// a degree-20 Taylor polynomial with the scaled norm at most 1/2.
pub fn matrix_exp(m: &ComplexMatrix) -> Result<ComplexMatrix> {
    require_square(m, "matrix_exp input")?;
    let n = m.nrows();
    if let Some(powers) = nilpotent_powers(m) {
        let mut out = ComplexMatrix::zeros(n, n);
        let mut fact = 1.0;
        for (k, p) in powers.iter().enumerate() {
            if k > 0 {
                fact *= k as f64;
            }
            out += p * re(1.0 / fact);
        }
        return Ok(out);
    }
    let norm = one_norm(m);
    let squarings = if norm > SCALE_TARGET {
        (norm / SCALE_TARGET).log2().ceil() as i32
    } else {
        0
    };
    let scaled = m * re(0.5f64.powi(squarings));
    // Horner: I + X(I + X/2(I + X/3(...)))
    let id = eye(n);
    let mut acc = id.clone();
    for k in (1..=TAYLOR_ORDER).rev() {
        acc = &id + &scaled * acc * re(1.0 / k as f64);
    }
    for _ in 0..squarings {
        acc = &acc * &acc;
    }
    Ok(acc)
}
