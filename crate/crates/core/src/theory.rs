//! Exact leaf-sum moments of the Ising broadcast process and the asymptotic
//! constants of the autoregressive variance law.
//!
//! All moments are conditioned on a `+1` root. By symmetry the even moments
//! are also the unconditional ones.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::geometry::alpha;
use crate::scalar::{compensated_sum, Field, Real};

/// `M(k)` for `k = 1..=4` at every height `0..=h`.
#[derive(Debug, Clone, PartialEq)]
pub struct MomentTable<T> {
    d: usize,
    rho: T,
    rows: Vec<[T; 4]>,
}

impl<T: Field> MomentTable<T> {
    pub fn d(&self) -> usize {
        self.d
    }

    pub fn rho(&self) -> &T {
        &self.rho
    }

    pub fn height(&self) -> u32 {
        self.rows.len() as u32 - 1
    }

    /// `M(k)` at height `h`.
    pub fn moment(&self, k: usize, h: u32) -> T {
        assert!((1..=4).contains(&k), "moments are tabulated for k = 1..=4");
        self.rows[h as usize][k - 1].clone()
    }

    pub fn row(&self, h: u32) -> &[T; 4] {
        &self.rows[h as usize]
    }

    /// `M(4) / M(2)^2 - 3` of the leaf sum at height `h`.
    pub fn excess_kurtosis(&self, h: u32) -> f64 {
        let m2 = self.moment(2, h).to_f64_lossy();
        self.moment(4, h).to_f64_lossy() / (m2 * m2) - 3.0
    }
}

/// Level recurrences for the leaf-sum moments, iterated from `M(k) = 1` at
/// height zero.
pub fn true_moments<T: Field>(d: usize, rho: T, h: u32) -> MomentTable<T> {
    let n = |x: usize| T::from_count(x as u64);
    let df = n(d);
    let c11 = n(d * (d - 1));
    let c111 = n(d * (d - 1) * d.saturating_sub(2));
    let c1111 = n(d * (d - 1) * d.saturating_sub(2) * d.saturating_sub(3));
    let r = rho.clone();
    let r2 = r.clone() * r.clone();
    let r3 = r2.clone() * r.clone();
    let r4 = r2.clone() * r2.clone();
    let mut rows = Vec::with_capacity(h as usize + 1);
    rows.push([T::one(), T::one(), T::one(), T::one()]);
    for _ in 0..h {
        let [m1, m2, m3, m4] = rows.last().expect("nonempty").clone();
        let m1sq = m1.clone() * m1.clone();
        let n1 = df.clone() * r.clone() * m1.clone();
        let n2 = df.clone() * m2.clone() + c11.clone() * r2.clone() * m1sq.clone();
        let n3 = df.clone() * r.clone() * m3.clone()
            + n(3) * c11.clone() * r.clone() * m2.clone() * m1.clone()
            + c111.clone() * r3.clone() * m1sq.clone() * m1.clone();
        let n4 = df.clone() * m4
            + n(4) * c11.clone() * r2.clone() * m3 * m1.clone()
            + n(3) * c11.clone() * m2.clone() * m2.clone()
            + n(6) * c111.clone() * r2.clone() * m2 * m1sq.clone()
            + c1111.clone() * r4.clone() * m1sq.clone() * m1sq;
        rows.push([n1, n2, n3, n4]);
    }
    MomentTable { d, rho, rows }
}

/// `M(2) = d^h + d^h (1 - 1/d) sum_{l=1}^{h} (d rho^2)^l`.
pub fn second_moment_closed_form<T: Field>(d: usize, rho: T, h: u32) -> T {
    let df = T::from_count(d as u64);
    let dh = df.powu(h);
    let ratio = df.clone() * rho.clone() * rho;
    let mut sum = T::zero();
    let mut term = T::one();
    for _ in 0..h {
        term = term * ratio.clone();
        sum = sum + term.clone();
    }
    dh.clone() + dh * (T::one() - T::one() / df) * sum
}

/// Large-height limits `M(k) / (d rho)^(k h) -> C(k)` and `alpha*`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Constants<T> {
    pub c2: T,
    pub c3: T,
    pub c4: T,
    pub alpha_star: T,
}

fn check_threshold<T: Field>(d: usize, rho: &T) -> Result<()> {
    let ks = T::from_count(d as u64) * rho.clone() * rho.clone();
    if ks <= T::one() {
        return Err(Error::BelowThreshold { value: ks.to_f64_lossy() });
    }
    Ok(())
}

pub fn constants<T: Field>(d: usize, rho: T) -> Result<Constants<T>> {
    check_threshold(d, &rho)?;
    let n = |x: usize| T::from_count(x as u64);
    let df = n(d);
    let one = T::one();
    let r2 = rho.clone() * rho.clone();
    let r4 = r2.clone() * r2.clone();
    let dr2 = df.clone() * r2.clone();
    let dm1 = n(d - 1);
    let dm2 = n(d.saturating_sub(2));
    let dm3 = n(d.saturating_sub(3));

    let c2 = (one.clone() - one.clone() / df.clone()) * dr2.clone() / (dr2.clone() - one.clone());
    let c3 = (n(3) * dm1.clone() * c2.clone() + dm1.clone() * dm2.clone() * r2.clone())
        / (df.clone() * dr2.clone() - one.clone());
    let c4 = (n(4) * dm1.clone() * r2.clone() * c3.clone()
        + n(3) * dm1.clone() * c2.clone() * c2.clone()
        + n(6) * dm1.clone() * dm2.clone() * r2.clone() * c2.clone()
        + dm1.clone() * dm2 * dm3 * r4.clone())
        / (df.clone() * df.clone() * df.clone() * r4 - one.clone());
    let alpha_star = r2.clone() * (one.clone() - one.clone() / df.clone()) / (one - r2 / df);
    Ok(Constants { c2, c3, c4, alpha_star })
}

/// Asymptotic prediction lines for the log-normalized variance.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AsymptoticPrediction {
    /// `log(d rho^2)`.
    pub slope: f64,
    /// `log C(2)`, the ground-truth intercept.
    pub intercept_true: f64,
    /// `log A(2)`, the autoregressive intercept.
    pub intercept_ar: f64,
    pub constants: Constants<f64>,
    pub q_hat: f64,
    pub q_se: f64,
    pub a2: f64,
    pub a2_se: f64,
    pub a4: f64,
}

/// `A(2) = C(2) + 2 alpha* / (1 - alpha* q)` and its derivative in `q`.
fn a2_and_slope<T: Real>(c2: T, alpha_star: T, q: T) -> Result<(T, T)> {
    let aq = alpha_star * q;
    if aq >= T::one() {
        return Err(Error::Divergent { value: aq.to_f64_lossy() });
    }
    let two = T::one() + T::one();
    let denom = T::one() - aq;
    let a2 = c2 + two * alpha_star / denom;
    let da2 = two * alpha_star * alpha_star / (denom * denom);
    Ok((a2, da2))
}

fn check_q<T: Real>(q_hat: T) -> Result<()> {
    if !(q_hat >= T::zero() && q_hat <= T::one()) {
        return Err(Error::InvalidParameter(format!("q_hat = {q_hat:?} must lie in [0, 1]")));
    }
    Ok(())
}

pub fn asymptotic_prediction(d: usize, rho: f64, q_hat: f64, q_se: f64) -> Result<AsymptoticPrediction> {
    check_q(q_hat)?;
    let constants = constants(d, rho)?;
    let (a2, da2) = a2_and_slope(constants.c2, constants.alpha_star, q_hat)?;
    Ok(AsymptoticPrediction {
        slope: (d as f64 * rho * rho).ln(),
        intercept_true: constants.c2.ln(),
        intercept_ar: a2.ln(),
        q_hat,
        q_se,
        a2,
        a2_se: da2 * q_se,
        a4: 3.0 * a2 * a2,
        constants,
    })
}

/// Finite-size and asymptotic variance of the autoregressive leaf sum.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct VariancePrediction<T> {
    /// Exact variance of the sum of all `d^h` leaves given `q_w = q_hat`.
    pub finite: T,
    /// First-order error of `finite` propagated from the error of `q_hat`.
    pub finite_se: T,
    /// `log(finite / d^h)`.
    pub log_normalized_finite: T,
    pub log_normalized_finite_se: T,
    /// `w log(d rho^2) + log A(2)`.
    pub asymptote: T,
    pub asymptote_se: T,
}

/// Variance of the autoregressive leaf sum with `n = d^(h-w)` blocks:
/// `n M2(w) + 2 M1(w)^2 alpha sum_{s=1}^{n-1} (n - s) (alpha q)^(s-1)`,
/// where `alpha` is taken over the exact adjacent-block height law.
pub fn ar_variance_prediction<T: Real>(
    d: usize,
    rho: T,
    h: u32,
    w: u32,
    q_hat: T,
    q_se: T,
) -> Result<VariancePrediction<T>> {
    check_threshold(d, &rho)?;
    check_q(q_hat)?;
    if w >= h {
        return Err(Error::InvalidParameter(format!("prediction needs w < h, got w = {w}, h = {h}")));
    }
    let a = alpha(d, rho, h - w);
    let aq = a * q_hat;
    if aq >= T::one() {
        return Err(Error::Divergent { value: aq.to_f64_lossy() });
    }
    let table = true_moments(d, rho, w);
    let m1 = table.moment(1, w);
    let m2 = table.moment(2, w);
    let blocks = d.pow(h - w);
    let nf = T::from_usize(blocks).expect("block count fits");

    // sum_{s=1}^{n-1} (n-s) (aq)^(s-1) and its q-derivative.
    let mut power = T::one();
    let mut dpower = T::zero();
    let mut terms = Vec::with_capacity(blocks);
    let mut dterms = Vec::with_capacity(blocks);
    for s in 1..blocks {
        let weight = T::from_usize(blocks - s).expect("fits");
        terms.push(weight * power);
        dterms.push(weight * dpower);
        // d/dq (a q)^k = k a (a q)^(k-1)
        dpower = dpower * aq + power * a;
        power = power * aq;
    }
    let two = T::one() + T::one();
    let cross = two * m1 * m1 * a;
    let finite = nf * m2 + cross * compensated_sum(terms);
    let finite_se = (cross * compensated_sum(dterms) * q_se).abs();
    let dh = T::from_usize(d).expect("fits").powi(h as i32);

    let c = constants(d, rho)?;
    let (a2, da2) = a2_and_slope(c.c2, c.alpha_star, q_hat)?;
    let slope = (T::from_usize(d).expect("fits") * rho * rho).ln();
    Ok(VariancePrediction {
        finite,
        finite_se,
        log_normalized_finite: (finite / dh).ln(),
        log_normalized_finite_se: finite_se / finite,
        asymptote: T::from_u32(w).expect("fits") * slope + a2.ln(),
        asymptote_se: (da2 * q_se / a2).abs(),
    })
}

/// Limiting kurtosis of the autoregressive leaf sum.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct KurtosisPrediction {
    pub kurtosis: f64,
    pub excess: f64,
}

/// The autoregressive sum is asymptotically Gaussian: `A(4) / A(2)^2 = 3`.
pub fn ar_kurtosis_prediction() -> KurtosisPrediction {
    KurtosisPrediction { kurtosis: 3.0, excess: 0.0 }
}
