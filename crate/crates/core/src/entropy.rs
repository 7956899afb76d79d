//! Closed-form entropy and success-probability bounds.
//!
//! Everything here is a pure function of its inputs. Correction terms that
//! depend on unstated constants (`c0`, `c1`, the `O(log n)` slack) are
//! parameters rather than baked-in numbers.

use serde::{Deserialize, Serialize};

use crate::spacetime::Rational;

/// Largest number of strings [`h_rate_enumerate`] will visit.
pub const MAX_ENUMERATION: u64 = 1 << 22;

#[derive(Debug, Clone, thiserror::Error, PartialEq)]
pub enum EntropyError {
    #[error("empty outcome string")]
    EmptyString,
    #[error("symbol at position {0} is not in the alphabet")]
    UnknownSymbol(usize),
    #[error("no string is accepted")]
    EmptyAcceptanceSet,
    #[error("{0}")]
    Domain(String),
}

fn domain<T>(msg: impl Into<String>) -> Result<T, EntropyError> {
    Err(EntropyError::Domain(msg.into()))
}

/// Empirical distribution of `xs` over `alphabet`, in alphabet order.
pub fn freq<S: PartialEq>(alphabet: &[S], xs: &[S]) -> Result<Vec<Rational>, EntropyError> {
    if xs.is_empty() {
        return Err(EntropyError::EmptyString);
    }
    let mut counts = vec![0i128; alphabet.len()];
    for (i, x) in xs.iter().enumerate() {
        let k = alphabet
            .iter()
            .position(|a| a == x)
            .ok_or(EntropyError::UnknownSymbol(i))?;
        counts[k] += 1;
    }
    let n = xs.len() as i128;
    Ok(counts.into_iter().map(|c| Rational::new(c, n)).collect())
}

/// `f(q) = c0 + sum_x coeffs[x] * q(x)` over an alphabet of `coeffs.len()` symbols.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MinTradeoff {
    pub c0: f64,
    pub coeffs: Vec<f64>,
}

impl MinTradeoff {
    pub fn new(c0: f64, coeffs: Vec<f64>) -> Self {
        MinTradeoff { c0, coeffs }
    }

    pub fn constant(c0: f64, alphabet_size: usize) -> Self {
        MinTradeoff {
            c0,
            coeffs: vec![0.0; alphabet_size],
        }
    }

    pub fn alphabet_size(&self) -> usize {
        self.coeffs.len()
    }

    pub fn eval(&self, q: &[f64]) -> Result<f64, EntropyError> {
        if q.len() != self.coeffs.len() {
            return domain(format!("distribution has {} entries, alphabet has {}", q.len(), self.coeffs.len()));
        }
        Ok(self.c0 + self.coeffs.iter().zip(q).map(|(c, p)| c * p).sum::<f64>())
    }

    /// Evaluates on counts out of `n`, exactly up to the final rounding.
    fn eval_counts(&self, counts: &[u32], n: usize) -> f64 {
        let s: f64 = self.coeffs.iter().zip(counts).map(|(c, k)| c * f64::from(*k)).sum();
        self.c0 + s / n as f64
    }

    pub fn eval_freq(&self, q: &[Rational]) -> Result<f64, EntropyError> {
        let q: Vec<f64> = q.iter().map(crate::spacetime::to_f64).collect();
        self.eval(&q)
    }
}

/// Minimum of `f(freq(x))` over all length-`n` strings `x` (symbols are
/// alphabet indices) that `accept` admits.
pub fn h_rate_enumerate(f: &MinTradeoff, n: usize, accept: impl Fn(&[usize]) -> bool) -> Result<f64, EntropyError> {
    let a = f.alphabet_size();
    if a == 0 || n == 0 {
        return domain("alphabet and string length must be non-empty");
    }
    let total = (a as u64).checked_pow(n as u32).filter(|t| *t <= MAX_ENUMERATION);
    let Some(total) = total else {
        return domain(format!("{a}^{n} strings is too many to enumerate"));
    };
    let mut x = vec![0usize; n];
    let mut counts = vec![0u32; a];
    counts[0] = n as u32;
    let mut best: Option<f64> = None;
    for _ in 0..total {
        if accept(&x) {
            let v = f.eval_counts(&counts, n);
            best = Some(best.map_or(v, |b| b.min(v)));
        }
        // odometer increment, last position fastest
        for d in (0..n).rev() {
            counts[x[d]] -= 1;
            x[d] = (x[d] + 1) % a;
            counts[x[d]] += 1;
            if x[d] != 0 {
                break;
            }
        }
    }
    best.ok_or(EntropyError::EmptyAcceptanceSet)
}

/// Minimum of `f` over the vertices of a frequency region. Because `f` is
/// affine, this is its minimum over the whole convex hull.
pub fn h_rate_vertices(f: &MinTradeoff, vertices: &[Vec<f64>]) -> Result<f64, EntropyError> {
    let mut best: Option<f64> = None;
    for v in vertices {
        let x = f.eval(v)?;
        best = Some(best.map_or(x, |b| b.min(x)));
    }
    best.ok_or(EntropyError::EmptyAcceptanceSet)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EatParams {
    pub n: u64,
    pub h: f64,
    pub c1: f64,
    pub c0: f64,
    pub eps: f64,
}

impl EatParams {
    pub fn validate(&self) -> Result<(), EntropyError> {
        if self.n == 0 {
            return domain("n must be at least 1");
        }
        if !(self.eps > 0.0 && self.eps < 1.0) {
            return domain(format!("eps must lie in (0, 1), got {}", self.eps));
        }
        if !(self.c0 >= 0.0 && self.c1 >= 0.0) {
            return domain("c0 and c1 must be non-negative");
        }
        if !self.h.is_finite() {
            return domain("h must be finite");
        }
        Ok(())
    }
}

/// `n h - c1 sqrt(n) - c0`; may be negative.
pub fn eat_bound(p: &EatParams) -> f64 {
    let n = p.n as f64;
    n * p.h - p.c1 * n.sqrt() - p.c0
}

/// `-log2(1 - sqrt(1 - eps^2))`, evaluated as
/// `log2(1 + sqrt(1 - eps^2)) - 2 log2(eps)` to avoid cancellation.
pub fn g_correction(eps: f64) -> Result<f64, EntropyError> {
    if !(eps > 0.0 && eps < 1.0) {
        return domain(format!("eps must lie in (0, 1), got {eps}"));
    }
    let root = ((1.0 - eps) * (1.0 + eps)).sqrt();
    Ok(root.ln_1p() / std::f64::consts::LN_2 - 2.0 * eps.log2())
}

/// `-log2(eps + 2^-h_smooth)`.
pub fn minentropy_from_smooth(h_smooth: f64, eps: f64) -> Result<f64, EntropyError> {
    if !(0.0..1.0).contains(&eps) {
        return domain(format!("eps must lie in [0, 1), got {eps}"));
    }
    if h_smooth.is_nan() || h_smooth < 0.0 {
        return domain(format!("smooth min-entropy must be non-negative, got {h_smooth}"));
    }
    if eps == 0.0 {
        return Ok(h_smooth);
    }
    // log2(2^a + 2^b) with a = log2(eps), b = -h_smooth
    let (a, b) = (eps.log2(), -h_smooth);
    let (hi, lo) = if a >= b { (a, b) } else { (b, a) };
    Ok(-(hi + (lo - hi).exp2().ln_1p() / std::f64::consts::LN_2))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SuccessBounds {
    /// `min(p_test, 2^-h_min)`.
    pub single: f64,
    /// `repeated_raw` clamped to `[0, 1]`.
    pub repeated: f64,
    /// `(e p_block / alpha)^floor(alpha m)`; above 1 means vacuous.
    pub repeated_raw: f64,
    /// `floor(alpha m)`.
    pub exponent: u64,
}

/// `floor(x)`, except that values within `1e-9` (relative) of an integer
/// snap to it.
fn guarded_floor(x: f64) -> u64 {
    let r = x.round();
    if (x - r).abs() <= 1e-9 * x.abs().max(1.0) {
        r as u64
    } else {
        x.floor() as u64
    }
}

pub fn success_bounds(p_test: f64, h_min: f64, p_block: f64, alpha: f64, m: u64) -> Result<SuccessBounds, EntropyError> {
    if !(0.0..=1.0).contains(&p_test) || !(0.0..=1.0).contains(&p_block) {
        return domain("probabilities must lie in [0, 1]");
    }
    if !(alpha > 0.0 && alpha <= 1.0) {
        return domain(format!("alpha must lie in (0, 1], got {alpha}"));
    }
    if m == 0 {
        return domain("m must be at least 1");
    }
    if h_min.is_nan() || h_min < 0.0 {
        return domain(format!("min-entropy must be non-negative, got {h_min}"));
    }
    let exponent = guarded_floor(alpha * m as f64);
    let base = std::f64::consts::E * p_block / alpha;
    let repeated_raw = if exponent == 0 { 1.0 } else { base.powf(exponent as f64) };
    Ok(SuccessBounds {
        single: p_test.min((-h_min).exp2()),
        repeated: repeated_raw.clamp(0.0, 1.0),
        repeated_raw,
        exponent,
    })
}

/// `(1 - eta) delta n - c_log log2(n)`.
pub fn xhog_entropy(n: u64, delta: f64, eta: f64, c_log: f64) -> Result<f64, EntropyError> {
    if n == 0 {
        return domain("n must be at least 1");
    }
    if !delta.is_finite() || delta <= 0.0 {
        return domain(format!("delta must be positive, got {delta}"));
    }
    if !(eta > 0.0 && eta <= 1.0) {
        return domain(format!("eta must lie in (0, 1], got {eta}"));
    }
    if c_log.is_nan() || c_log < 0.0 {
        return domain(format!("c_log must be non-negative, got {c_log}"));
    }
    let n = n as f64;
    Ok((1.0 - eta) * delta * n - c_log * n.log2())
}
