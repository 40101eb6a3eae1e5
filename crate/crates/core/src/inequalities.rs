//! Direct checks of the fractional `L^p` Poincaré inequality, the scalar
//! inequality behind it, and the Sobolev commutator estimate.

use std::f64::consts::PI;

use log::info;
use num_bigint::BigInt;
use num_traits::{Float, Signed, ToPrimitive, Zero};
use serde::Serialize;

use crate::dynamics::bilinear_b;
use crate::error::{FelabError, Result};
use crate::special::gamma as gamma_fn;
use crate::spectral::{
    apply_multiplier, physical_lp_norm, sobolev_norm_sq, to_physical, to_spectral, MultiplierSymbol,
    SpectralField,
};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct InequalityReport {
    pub id: String,
    pub inputs: String,
    pub lhs: f64,
    pub rhs: f64,
    pub margin: f64,
    pub tol: f64,
    pub pass: bool,
}

impl InequalityReport {
    fn new(id: &str, inputs: String, lhs: f64, rhs: f64, tol: f64) -> Self {
        let margin = lhs - rhs;
        Self {
            id: id.to_string(),
            inputs,
            lhs,
            rhs,
            margin,
            tol,
            pass: margin >= -tol,
        }
    }
}

/// Normalization `c_{d,γ}` of the periodic kernel of `Λ^γ`.
pub fn kernel_constant(d: u32, gamma: f64) -> f64 {
    let df = f64::from(d);
    2f64.powf(gamma) * gamma_fn((df + gamma) / 2.0) / (gamma_fn(-gamma / 2.0).abs() * PI.powf(df / 2.0))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PoincareConstant {
    /// The constant `C` used in the inequality (after clamping to >= 1).
    pub value: f64,
    /// `C` straight from the formula.
    pub raw: f64,
    pub clamped: bool,
}

/// Constant `C_{d,γ}` of the fractional `L^p` Poincaré inequality on
/// `[-π, π]^d`:
///
/// ```text
/// 1/C = pre · c_{d,γ} |𝕋^d| / (2π + diam 𝕋^d)^{d+γ}
/// ```
///
/// with `pre = 1/4`, or the sharper `(p-2)/(2p)` when an even `p >= 4` is given.
pub fn poincare_constant(d: u32, gamma: f64, p: Option<f64>) -> Result<PoincareConstant> {
    if !(gamma > 0.0 && gamma < 2.0) {
        return Err(FelabError::param("gamma", format!("must lie in (0, 2), got {gamma}")));
    }
    if d < 1 {
        return Err(FelabError::param("d", "must be >= 1"));
    }
    let pre = match p {
        None => 0.25,
        Some(p) if p >= 4.0 && p.fract() == 0.0 && (p as i64) % 2 == 0 => (p - 2.0) / (2.0 * p),
        Some(p) => {
            return Err(FelabError::param("p", format!("must be an even integer >= 4, got {p}")))
        }
    };
    let df = f64::from(d);
    let volume = (2.0 * PI).powf(df);
    let diam = 2.0 * PI * df.sqrt();
    let inv = pre * kernel_constant(d, gamma) * volume / (2.0 * PI + diam).powf(df + gamma);
    let raw = 1.0 / inv;
    let clamped = raw < 1.0;
    if clamped {
        info!("poincare_constant(d={d}, gamma={gamma}): clamping C={raw} to 1");
    }
    Ok(PoincareConstant {
        value: raw.max(1.0),
        raw,
        clamped,
    })
}

fn band(f: &SpectralField) -> usize {
    let grid = f.grid();
    f.coeffs()
        .iter()
        .enumerate()
        .filter(|(_, c)| c.norm() > 0.0)
        .map(|(i, _)| {
            let (a, b) = grid.wavenumber(i);
            a.unsigned_abs().max(b.unsigned_abs()) as usize
        })
        .max()
        .unwrap_or(0)
}

fn even_power(p: f64) -> Option<u32> {
    (p >= 2.0 && p.fract() == 0.0 && (p as u32) % 2 == 0).then_some(p as u32)
}

/// Evaluates `∫θ^{p-1}Λ^γθ ≥ (1/C)‖θ‖^p_{L^p} + (1/p)‖Λ^{γ/2}(θ^{p/2})‖²_{L²}`.
pub fn check_poincare(theta: &SpectralField, p: f64, gamma: f64) -> Result<InequalityReport> {
    let pi = even_power(p).ok_or_else(|| FelabError::param("p", format!("must be even >= 2, got {p}")))?;
    let k = band(theta);
    let n = theta.grid().n();
    if pi as usize * k >= n {
        return Err(FelabError::Resolution(format!(
            "band {k} with p={pi} needs n > {}, grid has n={n}",
            pi as usize * k
        )));
    }
    let c = poincare_constant(2, gamma, if pi >= 4 { Some(p) } else { None })?.value;
    let phys = to_physical(theta);
    let lap = to_physical(&apply_multiplier(theta, MultiplierSymbol::frac_laplacian(gamma)));
    let pow_m1 = phys.map(|v| v.powi(pi as i32 - 1));
    let lhs = pow_m1.dot(&lap)?;
    let lp = physical_lp_norm(&phys, p).powi(pi as i32);
    let half = to_spectral(&phys.map(|v| v.powi(pi as i32 / 2)));
    let grad_term = sobolev_norm_sq(&half, gamma / 2.0);
    let rhs = lp / c + grad_term / p;
    Ok(InequalityReport::new(
        "fractional-lp-poincare",
        format!("p={p} gamma={gamma} band={k} C={c:.6e}"),
        lhs,
        rhs,
        1e-8 * lhs.abs(),
    ))
}

/// Exact dyadic decomposition `x = m·2^e`.
fn dyadic(x: f64) -> (BigInt, i32) {
    let (mantissa, exp, sign) = x.integer_decode();
    let m = BigInt::from(mantissa) * i64::from(sign);
    (m, i32::from(exp))
}

fn fp_terms(a: &BigInt, b: &BigInt, p: u32) -> (BigInt, BigInt) {
    let h = p / 2;
    let d = a - b;
    let lhs = BigInt::from(p) * (a.pow(p - 1) - b.pow(p - 1)) * &d
        - BigInt::from(2) * (a.pow(h) - b.pow(h)).pow(2);
    let rhs = BigInt::from(p - 2) * d.pow(2) * a.pow(p - 2);
    (lhs, rhs)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScalarCheck {
    pub report: InequalityReport,
    /// Both sides agree in exact arithmetic.
    pub equality: bool,
}

/// `f_p(a,b) = p(a^{p-1}-b^{p-1})(a-b) - 2(a^{p/2}-b^{p/2})² ≥ (p-2)(a-b)²a^{p-2}`,
/// evaluated exactly: both sides are homogeneous of degree `p`, so after
/// scaling `a` and `b` to a common dyadic exponent the comparison is between
/// integers.
pub fn check_fp_scalar(a: f64, b: f64, p: u32) -> Result<ScalarCheck> {
    if p < 4 || p % 2 != 0 {
        return Err(FelabError::param("p", format!("must be even >= 4, got {p}")));
    }
    if !a.is_finite() || !b.is_finite() {
        return Err(FelabError::param("a, b", "must be finite"));
    }
    let (ma, ea) = dyadic(a);
    let (mb, eb) = dyadic(b);
    let e = ea.min(eb);
    let ia = ma << (ea - e) as usize;
    let ib = mb << (eb - e) as usize;
    let (lhs_i, rhs_i) = fp_terms(&ia, &ib, p);
    let diff = &lhs_i - &rhs_i;
    let scale = 2f64.powi(e * p as i32);
    let to_f = |v: &BigInt| v.to_f64().unwrap_or(f64::NAN) * scale;
    let (lhs, rhs) = (to_f(&lhs_i), to_f(&rhs_i));
    let tol = 1e-12 * lhs.abs().max(1.0);
    let margin_exact_ok = !diff.is_negative() || to_f(&diff).abs() <= tol;
    let mut report = InequalityReport::new(
        "fp-scalar",
        format!("a={a} b={b} p={p}"),
        lhs,
        rhs,
        tol,
    );
    report.margin = to_f(&diff);
    report.pass = margin_exact_ok;
    Ok(ScalarCheck {
        report,
        equality: diff.is_zero(),
    })
}

/// Summary of an exhaustive grid sweep of [`check_fp_scalar`].
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScalarSweep {
    pub p: u32,
    pub cases: usize,
    pub violations: usize,
    pub min_margin: f64,
    pub equality_cases_b_zero: usize,
    pub b_zero_all_equal: bool,
}

/// Sweeps `a, b` over `points` equispaced values in `[-limit, limit]`.
pub fn sweep_fp_scalar(p: u32, limit: f64, points: usize) -> Result<ScalarSweep> {
    let vals: Vec<f64> = (0..points)
        .map(|i| -limit + 2.0 * limit * i as f64 / (points - 1) as f64)
        .collect();
    let mut out = ScalarSweep {
        p,
        cases: 0,
        violations: 0,
        min_margin: f64::INFINITY,
        equality_cases_b_zero: 0,
        b_zero_all_equal: true,
    };
    for &a in &vals {
        for &b in &vals {
            let c = check_fp_scalar(a, b, p)?;
            out.cases += 1;
            if !c.report.pass {
                out.violations += 1;
            }
            out.min_margin = out.min_margin.min(c.report.margin);
            if b == 0.0 {
                if c.equality {
                    out.equality_cases_b_zero += 1;
                } else {
                    out.b_zero_all_equal = false;
                }
            }
        }
    }
    Ok(out)
}

/// Exponent `q = 4((4+γ)(s+γ) - 4) / (γ(6+γ))` of the commutator estimate.
pub fn q_exponent(s: f64, gamma: f64) -> Result<f64> {
    if !(gamma > 0.0) {
        return Err(FelabError::param("gamma", format!("must be > 0, got {gamma}")));
    }
    if !(s > 1.0) {
        return Err(FelabError::param("s", format!("must be > 1, got {s}")));
    }
    Ok(4.0 * ((4.0 + gamma) * (s + gamma) - 4.0) / (gamma * (6.0 + gamma)))
}

/// The same exponent evaluated at `s = r + m`, as used by the smoothing moments.
pub fn smoothing_exponent(r: f64, m: f64, gamma: f64) -> Result<f64> {
    q_exponent(r + m, gamma)
}

/// `p_γ = 4 + 4/γ`.
pub fn p_gamma(gamma: f64) -> Result<f64> {
    if !(gamma > 0.0) {
        return Err(FelabError::param("gamma", format!("must be > 0, got {gamma}")));
    }
    Ok(4.0 + 4.0 / gamma)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CommutatorReport {
    pub s: f64,
    pub gamma: f64,
    pub eps: f64,
    pub q: f64,
    /// `|∫ [Λ^s, u·∇]ω Λ^sω dx|`.
    pub lhs: f64,
    pub h1: f64,
    pub h_s_gamma: f64,
    /// `(lhs - ε‖ω‖²_{H^{s+γ/2}})₊ / ‖ω‖^q_{H¹}`: the smallest admissible `C`.
    pub ratio: f64,
}

/// Evaluates the commutator term pseudo-spectrally and reports the implied
/// constant.
pub fn check_commutator(omega: &SpectralField, s: f64, gamma: f64, eps: f64) -> Result<CommutatorReport> {
    if !(eps > 0.0 && eps < 1.0) {
        return Err(FelabError::param("eps", format!("must lie in (0, 1), got {eps}")));
    }
    let q = q_exponent(s, gamma)?;
    let cutoff = omega.grid().dealias_cutoff();
    if band(omega) > cutoff {
        return Err(FelabError::Resolution(format!(
            "field band {} exceeds the dealiasing cutoff {cutoff}",
            band(omega)
        )));
    }
    let lam_s = apply_multiplier(omega, MultiplierSymbol::sobolev(s));
    let transported = bilinear_b(omega, omega)?;
    let first = apply_multiplier(&transported, MultiplierSymbol::sobolev(s));
    let second = bilinear_b(omega, &lam_s)?;
    let commutator = first.sub(&second)?;
    let lhs = commutator.inner(&lam_s)?.abs();
    let h1 = sobolev_norm_sq(omega, 1.0).sqrt();
    let h_s_gamma = sobolev_norm_sq(omega, s + gamma / 2.0).sqrt();
    let excess = (lhs - eps * h_s_gamma * h_s_gamma).max(0.0);
    let ratio = if excess == 0.0 { 0.0 } else { excess / h1.powf(q) };
    Ok(CommutatorReport {
        s,
        gamma,
        eps,
        q,
        lhs,
        h1,
        h_s_gamma,
        ratio,
    })
}
