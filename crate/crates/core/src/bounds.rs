//! Closed-form sample-size and confidence calculators.
//!
//! Everything is evaluated in log space with double-double accumulation;
//! ceilings are taken last. Rate constants (`eta`, `gamma_tilde`, ...) are
//! inputs, never estimated here.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Unevaluated sum `hi + lo` with `|lo| <= ulp(hi) / 2`.
#[derive(Debug, Clone, Copy, PartialEq)]
struct Dd {
    hi: f64,
    lo: f64,
}

impl Dd {
    const ZERO: Dd = Dd { hi: 0.0, lo: 0.0 };

    fn from(v: f64) -> Self {
        Dd { hi: v, lo: 0.0 }
    }

    fn two_sum(a: f64, b: f64) -> Self {
        let s = a + b;
        let bb = s - a;
        Dd {
            hi: s,
            lo: (a - (s - bb)) + (b - bb),
        }
    }

    fn add(self, o: Dd) -> Dd {
        let s = Dd::two_sum(self.hi, o.hi);
        let t = Dd::two_sum(self.lo, o.lo);
        let s = Dd::two_sum(s.hi, s.lo + t.hi);
        Dd::two_sum(s.hi, s.lo + t.lo)
    }

    fn neg(self) -> Dd {
        Dd { hi: -self.hi, lo: -self.lo }
    }

    fn sub(self, o: Dd) -> Dd {
        self.add(o.neg())
    }

    fn mul(self, o: Dd) -> Dd {
        let p = self.hi * o.hi;
        let e = self.hi.mul_add(o.hi, -p);
        Dd::two_sum(p, e + self.hi * o.lo + self.lo * o.hi)
    }

    fn div(self, o: Dd) -> Dd {
        let q1 = self.hi / o.hi;
        let r = self.sub(o.mul(Dd::from(q1)));
        let q2 = r.hi / o.hi;
        let r = r.sub(o.mul(Dd::from(q2)));
        let q3 = r.hi / o.hi;
        Dd::two_sum(q1, q2).add(Dd::from(q3))
    }

    /// `ln(x)` for `x > 0`: `x = 2^e m` with `m` near one, then
    /// `ln m = 2 atanh((m - 1) / (m + 1))` summed as a series.
    fn ln(x: Dd) -> Dd {
        const LN2: Dd = Dd {
            hi: 0.6931471805599453,
            lo: 2.3190468138462996e-17,
        };
        let mut e = x.hi.log2().round() as i32;
        let mut m = x.scale(-e);
        if m.hi > std::f64::consts::SQRT_2 {
            m = m.scale(-1);
            e += 1;
        } else if m.hi < std::f64::consts::FRAC_1_SQRT_2 {
            m = m.scale(1);
            e -= 1;
        }
        let one = Dd::from(1.0);
        let s = m.sub(one).div(m.add(one));
        let s2 = s.mul(s);
        let mut term = s;
        let mut sum = s;
        for k in 1..40 {
            term = term.mul(s2);
            let t = term.div(Dd::from((2 * k + 1) as f64));
            sum = sum.add(t);
            if t.hi.abs() < 1e-34 * sum.hi.abs().max(1e-300) {
                break;
            }
        }
        sum.mul(Dd::from(2.0)).add(LN2.mul(Dd::from(e as f64)))
    }

    fn scale(self, e: i32) -> Dd {
        let f = 2f64.powi(e);
        Dd {
            hi: self.hi * f,
            lo: self.lo * f,
        }
    }

    /// `ln(1 + x)`.
    fn ln1p(x: f64) -> Dd {
        Dd::ln(Dd::two_sum(1.0, x))
    }

    fn value(self) -> f64 {
        self.hi + self.lo
    }

    /// Exact ceiling of `hi + lo`.
    fn ceil(self) -> f64 {
        let c = self.hi.ceil();
        if c == self.hi && self.lo > 0.0 {
            c + 1.0
        } else {
            c
        }
    }
}

fn ln_int(k: u64) -> Dd {
    Dd::ln(Dd::from(k as f64))
}

/// `ln(n!)` by direct summation.
fn ln_factorial(n: u64) -> Dd {
    (2..=n).fold(Dd::ZERO, |acc, k| acc.add(ln_int(k)))
}

/// `ln C(n, k)`.
fn ln_binomial(n: u64, k: u64) -> Dd {
    let k = k.min(n - k);
    (0..k)
        .fold(Dd::ZERO, |acc, i| acc.add(ln_int(n - i)))
        .sub(ln_factorial(k))
}

fn to_count(v: Dd) -> u64 {
    let c = v.ceil();
    if c <= 0.0 {
        0
    } else {
        c as u64
    }
}

fn check_prob(name: &str, v: f64, allow_one: bool) -> Result<()> {
    let ok = v > 0.0 && (v < 1.0 || (allow_one && v == 1.0));
    if ok {
        Ok(())
    } else {
        let range = if allow_one { "(0, 1]" } else { "(0, 1)" };
        Err(Error::InvalidInput(format!("{name} must lie in {range}, got {v}")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LpBoundInputs {
    pub eps: f64,
    pub beta: f64,
    pub n1: u64,
    pub n2: u64,
    pub m1: u64,
    pub m2: u64,
}

impl LpBoundInputs {
    pub fn validate(&self) -> Result<()> {
        check_prob("eps", self.eps, false)?;
        check_prob("beta", self.beta, false)?;
        check_dims(self.n1, self.n2, self.m1, self.m2)
    }
}

fn check_dims(n1: u64, n2: u64, m1: u64, m2: u64) -> Result<()> {
    if n1 == 0 || n2 == 0 || m1 == 0 || m2 == 0 {
        return Err(Error::InvalidInput("n1, n2, m1, m2 must be positive".into()));
    }
    if m2 < n2 + 1 {
        return Err(Error::InvalidInput(format!("need m2 >= n2 + 1, got m2 = {m2}, n2 = {n2}")));
    }
    Ok(())
}

/// Sample size after which a basic SAA optimum has recourse likelihood at
/// least `1 - eps` with probability at least `1 - beta`.
pub fn sample_size_two_stage_lp(inp: &LpBoundInputs) -> Result<u64> {
    inp.validate()?;
    Ok(to_count(two_stage_lp_expr(inp)))
}

/// The real-valued right-hand side before the ceiling.
pub fn sample_size_two_stage_lp_real(inp: &LpBoundInputs) -> Result<f64> {
    inp.validate()?;
    Ok(two_stage_lp_expr(inp).value())
}

fn two_stage_lp_expr(inp: &LpBoundInputs) -> Dd {
    let eps = Dd::from(inp.eps);
    let (n1, n2, m1, m2) = (inp.n1 as f64, inp.n2 as f64, inp.m1 as f64, inp.m2 as f64);
    let one = Dd::from(1.0);
    let t1 = Dd::from(2.0).div(eps).mul(Dd::ln(Dd::from(inp.beta)).neg());
    let t2 = Dd::from(4.0 * n1 * n2)
        .div(eps)
        .mul(Dd::ln(Dd::from(m2).div(Dd::from(n2 + 1.0))).add(one));
    let t3 = Dd::from(2.0 * n1).div(eps).mul(
        Dd::ln(Dd::from(m1).div(Dd::from(n1)).add(Dd::from(2.0)))
            .add(Dd::ln(Dd::from(2.0).div(eps)))
            .add(one),
    );
    t1.add(t2).add(t3).add(Dd::from(2.0 * n1))
}

/// Natural log of the bound on the number of basic solutions,
/// `(2 n1 + m1)^n1 / n1! * (m2^(n2+1) / (n2+1)!)^(2 n1)`.
pub fn basic_solution_count_bound(n1: u64, n2: u64, m1: u64, m2: u64) -> Result<f64> {
    check_dims(n1, n2, m1, m2)?;
    Ok(ln_basic_count(n1, n2, m1, m2).value())
}

fn ln_basic_count(n1: u64, n2: u64, m1: u64, m2: u64) -> Dd {
    let a = Dd::from(n1 as f64).mul(ln_int(2 * n1 + m1)).sub(ln_factorial(n1));
    let b = Dd::from((n2 + 1) as f64).mul(ln_int(m2)).sub(ln_factorial(n2 + 1));
    a.add(Dd::from(2.0 * n1 as f64).mul(b))
}

/// Log of the failure term `C(N, n1) * count * (1 - eps)^(N - n1)`.
pub fn feasibility_failure_log(n: u64, eps: f64, n1: u64, n2: u64, m1: u64, m2: u64) -> Result<f64> {
    check_prob("eps", eps, true)?;
    check_dims(n1, n2, m1, m2)?;
    if n < n1 {
        return Err(Error::InvalidInput(format!("N = {n} is smaller than n1 = {n1}")));
    }
    Ok(failure_log(n, eps, n1, n2, m1, m2).value())
}

fn failure_log(n: u64, eps: f64, n1: u64, n2: u64, m1: u64, m2: u64) -> Dd {
    if eps == 1.0 {
        return if n > n1 { Dd::from(f64::NEG_INFINITY) } else { ln_binomial(n, n1).add(ln_basic_count(n1, n2, m1, m2)) };
    }
    ln_binomial(n, n1)
        .add(ln_basic_count(n1, n2, m1, m2))
        .add(Dd::from((n - n1) as f64).mul(Dd::ln1p(-eps)))
}

/// Lower bound on `P(phi(x_N) >= 1 - eps)`, clamped to `[0, 1]`.
pub fn feasibility_prob_bound(n: u64, eps: f64, n1: u64, n2: u64, m1: u64, m2: u64) -> Result<f64> {
    let l = feasibility_failure_log(n, eps, n1, n2, m1, m2)?;
    Ok(if l >= 0.0 { 0.0 } else { -l.exp_m1() })
}

/// How the large-deviation rate `gamma_tilde` is supplied.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum FiniteXRate {
    Direct { gamma_tilde: f64 },
    /// `gamma_tilde = min(eta, (eps - delta)^2 / (2 sigma^2))`.
    SubGaussian { eta: f64, sigma: f64, eps: f64, delta: f64 },
}

impl FiniteXRate {
    pub fn gamma_tilde(&self) -> Result<f64> {
        let g = match *self {
            FiniteXRate::Direct { gamma_tilde } => gamma_tilde,
            FiniteXRate::SubGaussian { eta, sigma, eps, delta } => {
                if !(delta < eps) || !(delta >= 0.0) {
                    return Err(Error::InvalidInput("need 0 <= delta < eps".into()));
                }
                if !(sigma > 0.0) || !(eta > 0.0) {
                    return Err(Error::InvalidInput("sigma and eta must be positive".into()));
                }
                let r = (eps - delta) * (eps - delta) / (2.0 * sigma * sigma);
                eta.min(r)
            }
        };
        if g > 0.0 && g.is_finite() {
            Ok(g)
        } else {
            Err(Error::InvalidInput(format!("rate must be positive and finite, got {g}")))
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FiniteXBoundInputs {
    pub rate: FiniteXRate,
    /// `|X \ S^eps|`.
    pub excluded_count: u64,
    pub beta: f64,
}

/// `ceil(ln(count / beta) / gamma_tilde)`; zero when nothing is excluded.
pub fn sample_size_finite_x(inp: &FiniteXBoundInputs) -> Result<u64> {
    finite_x_expr(inp).map(to_count)
}

/// The real-valued expression before the ceiling.
pub fn sample_size_finite_x_real(inp: &FiniteXBoundInputs) -> Result<f64> {
    finite_x_expr(inp).map(|v| v.value())
}

fn finite_x_expr(inp: &FiniteXBoundInputs) -> Result<Dd> {
    check_prob("beta", inp.beta, false)?;
    let g = inp.rate.gamma_tilde()?;
    if inp.excluded_count == 0 {
        return Ok(Dd::ZERO);
    }
    let num = ln_int(inp.excluded_count).sub(Dd::ln(Dd::from(inp.beta)));
    Ok(num.div(Dd::from(g)))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "which", rename_all = "snake_case")]
pub enum PaddingBoundInputs {
    /// Product-form support with Lipschitz `H`.
    ProductMarginal {
        d: u64,
        diameter: f64,
        lipschitz: f64,
        gamma: f64,
        eta: f64,
        beta: f64,
    },
    /// Fixed `W`, `T` with padding on the right-hand side only.
    RhsOnly { n2: u64, m2: u64, eta_tilde: f64, eps: f64 },
}

/// Sample size making the padded feasible region a subset of the true one
/// with the requested confidence.
pub fn sample_size_padded(inp: &PaddingBoundInputs) -> Result<u64> {
    padded_expr(inp).map(to_count)
}

/// The real-valued expression before the ceiling.
pub fn sample_size_padded_real(inp: &PaddingBoundInputs) -> Result<f64> {
    padded_expr(inp).map(|v| v.value())
}

fn padded_expr(inp: &PaddingBoundInputs) -> Result<Dd> {
    match *inp {
        PaddingBoundInputs::ProductMarginal {
            d,
            diameter,
            lipschitz,
            gamma,
            eta,
            beta,
        } => {
            check_prob("eta", eta, true)?;
            check_prob("beta", beta, false)?;
            if d == 0 || !(diameter > 0.0) || !(lipschitz > 0.0) || !(gamma > 0.0) {
                return Err(Error::InvalidInput("d, D, L and gamma must be positive".into()));
            }
            let ratio = Dd::from(d as f64).mul(Dd::from(diameter)).mul(Dd::from(lipschitz)).div(Dd::from(gamma));
            let num = Dd::ln(ratio).sub(Dd::ln(Dd::from(beta)));
            Ok(num.div(Dd::from(eta)))
        }
        PaddingBoundInputs::RhsOnly { n2, m2, eta_tilde, eps } => {
            check_prob("eta_tilde", eta_tilde, true)?;
            check_prob("eps", eps, false)?;
            if n2 == 0 || m2 == 0 {
                return Err(Error::InvalidInput("n2 and m2 must be positive".into()));
            }
            let num = Dd::from((n2 + 1) as f64).mul(ln_int(m2)).sub(Dd::ln(Dd::from(eps)));
            Ok(num.div(Dd::from(eta_tilde)))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn dd_ln_is_accurate() {
        // ln 10 to 34 digits: 2.302585092994045684017991454684364
        let v = Dd::ln(Dd::from(10.0));
        assert_eq!(v.hi, 2.302585092994046);
        // ln 10 - hi, from a 40-digit evaluation.
        assert!((v.lo - -2.1707562233822494e-16).abs() < 1e-30, "{}", v.lo);
        let w = Dd::ln1p(-1e-3);
        assert_eq!(w.value(), -0.0010005003335835335);
    }

    #[test]
    fn smallest_basic_count_is_ln_12() {
        let v = basic_solution_count_bound(1, 1, 1, 2).unwrap();
        assert!((v - 12f64.ln()).abs() <= f64::EPSILON * 12f64.ln());
    }

    #[test]
    fn eps_one_gives_certainty() {
        assert_eq!(feasibility_prob_bound(10, 1.0, 1, 1, 1, 2).unwrap(), 1.0);
    }

    #[test]
    fn finite_x_trivial() {
        let inp = FiniteXBoundInputs {
            rate: FiniteXRate::Direct { gamma_tilde: 1.0 },
            excluded_count: 1,
            beta: (-1.0f64).exp(),
        };
        assert_eq!(sample_size_finite_x(&inp).unwrap(), 1);
    }

    #[test]
    fn rejects_bad_domains() {
        let ok = LpBoundInputs { eps: 0.05, beta: 0.01, n1: 10, n2: 20, m1: 10, m2: 30 };
        assert!(sample_size_two_stage_lp(&LpBoundInputs { eps: 1.0, ..ok }).is_err());
        assert!(sample_size_two_stage_lp(&LpBoundInputs { m2: 20, ..ok }).is_err());
        assert!(feasibility_prob_bound(5, 0.5, 10, 1, 1, 2).is_err());
        assert!(sample_size_padded(&PaddingBoundInputs::RhsOnly { n2: 3, m2: 8, eta_tilde: 0.0, eps: 0.01 }).is_err());
    }
}
