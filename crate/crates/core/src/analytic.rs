//! Closed-form observables: modified Bessel functions, the invariant densities, the free
//! energy and its derivatives, and the discrepancy constants.

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::quad::GaussLegendre;
use crate::sde::epsilon;
use crate::stats::pairwise_sum;

pub const EULER_GAMMA: f64 = 0.577_215_664_901_532_9;
const LN2: f64 = std::f64::consts::LN_2;
const PI2: f64 = std::f64::consts::PI * std::f64::consts::PI;

/// Quadrature controls.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AnalyticConfig {
    /// Initial number of trapezoid nodes on the truncated Bessel integration range.
    pub nodes: usize,
    /// Relative change at which node doubling and range doubling stop.
    pub tolerance: f64,
}

impl Default for AnalyticConfig {
    fn default() -> Self {
        Self { nodes: 64, tolerance: 1e-14 }
    }
}

impl AnalyticConfig {
    pub fn validate(&self) -> Result<()> {
        if self.nodes < 64 {
            return Err(invalid(format!("need at least 64 quadrature nodes, got {}", self.nodes)));
        }
        if !(self.tolerance > 0.0 && self.tolerance <= 1e-3) {
            return Err(invalid(format!("tolerance must lie in (0, 1e-3], got {}", self.tolerance)));
        }
        Ok(())
    }

    /// `log K_ν(x)` from `K_ν(x) = ∫₀^∞ cosh(νu) e^{−x cosh u} du`.
    pub fn log_bessel_k(&self, nu: f64, x: f64) -> Result<f64> {
        if !x.is_finite() {
            return Err(invalid(format!("bessel_k needs finite arguments, got nu={nu}, x={x}")));
        }
        if x <= 0.0 {
            return Err(invalid(format!("bessel_k needs x > 0, got {x}")));
        }
        self.log_bessel_k_at_log(nu, x.ln())
    }

    /// `log K_ν(e^{log_x})`, usable when `x` itself would underflow.
    pub fn log_bessel_k_at_log(&self, nu: f64, log_x: f64) -> Result<f64> {
        self.validate()?;
        if !nu.is_finite() || !log_x.is_finite() {
            return Err(invalid(format!("bessel_k needs finite arguments, got nu={nu}, log x={log_x}")));
        }
        let a = nu.abs();
        let log_cosh = |u: f64| u + (-2.0 * u).exp().ln_1p() - LN2;
        let g = |u: f64| log_cosh(a * u) - (log_x + log_cosh(u)).exp();
        // the integrand peaks near asinh(|ν|/x); go past it until it has dropped by e^{-60}
        let peak = if a == 0.0 {
            0.0
        } else {
            let z = a.ln() - log_x;
            if z > 20.0 {
                z + LN2
            } else {
                z.exp().asinh()
            }
        };
        let g_peak = g(peak).max(g(0.0));
        let mut upper = (2.0 * peak).max(1.0);
        while g(upper) > g_peak - 60.0 {
            upper *= 2.0;
        }
        let trapezoid = |upper: f64, n: usize| {
            let h = upper / n as f64;
            let terms: Vec<f64> = (0..=n).map(|k| g(k as f64 * h)).collect();
            let top = terms.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            let scaled: Vec<f64> = terms.iter().enumerate().map(|(k, t)| {
                let w = if k == 0 { 0.5 } else { 1.0 };
                w * (t - top).exp()
            }).collect();
            top + (pairwise_sum(&scaled) * h).ln()
        };
        let tol = self.tolerance;
        let mut n = self.nodes.max((8.0 * upper).ceil() as usize);
        let mut prev = trapezoid(upper, n);
        loop {
            let wider = trapezoid(2.0 * upper, 2 * n);
            let finer = trapezoid(upper, 2 * n);
            let range_ok = (wider - prev).abs() <= tol;
            let nodes_ok = (finer - prev).abs() <= tol;
            if range_ok && nodes_ok {
                return Ok(finer);
            }
            if !range_ok {
                upper *= 2.0;
                n *= 2;
                prev = wider;
            } else {
                n *= 2;
                prev = finer;
            }
            if n > 1 << 22 {
                return Ok(prev);
            }
        }
    }

    pub fn bessel_k(&self, nu: f64, x: f64) -> Result<f64> {
        Ok(self.log_bessel_k(nu, x)?.exp())
    }

    /// `f_α(Γ) = α + ε K_{α−1}(ε) / K_α(ε)`.
    pub fn free_energy(&self, gamma: f64, alpha: f64) -> Result<f64> {
        check_gamma(gamma)?;
        let ratio = self.log_bessel_k_at_log(alpha - 1.0, -gamma)? - self.log_bessel_k_at_log(alpha, -gamma)?;
        Ok(alpha + (ratio - gamma).exp())
    }

    /// `−∂_Γ f₀(Γ)`, central difference with step `10⁻⁴` and one Richardson step.
    pub fn wall_density(&self, gamma: f64) -> Result<f64> {
        check_gamma(gamma)?;
        let h = 1e-4;
        let central = |h: f64| -> Result<f64> {
            Ok((self.free_energy(gamma + h, 0.0)? - self.free_energy(gamma - h, 0.0)?) / (2.0 * h))
        };
        let coarse = central(h)?;
        let fine = central(h / 2.0)?;
        Ok(-(4.0 * fine - coarse) / 3.0)
    }

    /// `ε²(K₀² + K₂K₀ − 2K₁²)/K₀²` at `ε = e^{−Γ}`.
    pub fn disorder_energy(&self, gamma: f64) -> Result<f64> {
        check_gamma(gamma)?;
        let k0 = self.log_bessel_k_at_log(0.0, -gamma)?;
        let r1 = (self.log_bessel_k_at_log(1.0, -gamma)? - k0 - gamma).exp();
        let r2 = (self.log_bessel_k_at_log(2.0, -gamma)? - k0 - 2.0 * gamma).exp();
        Ok((-2.0 * gamma).exp() + r2 - 2.0 * r1 * r1)
    }

    /// Half the disorder energy.
    pub fn overlap_density(&self, gamma: f64) -> Result<f64> {
        Ok(0.5 * self.disorder_energy(gamma)?)
    }

    /// Invariant density `e^{−ε cosh x} / (2K₀(ε))`.
    pub fn p_gamma(&self, gamma: f64, x: f64) -> Result<f64> {
        check_gamma(gamma)?;
        let eps = epsilon(gamma);
        let log_norm = LN2 + self.log_bessel_k_at_log(0.0, -gamma)?;
        Ok((-eps * x.cosh() - log_norm).exp())
    }

    pub fn p_gamma_cdf(&self, gamma: f64, x: f64) -> Result<f64> {
        Ok(StationaryCdf::new(self, gamma)?.cdf(x))
    }

    /// Law of `l₀ + r₀`: `K₀(2ε cosh(x/2)) / (2K₀(ε)²)`.
    pub fn p_convolution(&self, gamma: f64, x: f64) -> Result<f64> {
        check_gamma(gamma)?;
        if !x.is_finite() {
            return Ok(0.0);
        }
        let log_norm = LN2 + 2.0 * self.log_bessel_k_at_log(0.0, -gamma)?;
        let log_arg = LN2 - gamma + log_cosh_half(x);
        Ok((self.log_bessel_k_at_log(0.0, log_arg)? - log_norm).exp())
    }

    /// `∫ p_conv(x) / (1 + e^{|x|}) dx`.
    pub fn d_m_exact(&self, gamma: f64) -> Result<f64> {
        check_gamma(gamma)?;
        let log_norm = LN2 + 2.0 * self.log_bessel_k_at_log(0.0, -gamma)?;
        let gl = GaussLegendre::new(20);
        let mut total = 0.0;
        for i in 0..80 {
            let a = 0.5 * i as f64;
            let nodes = gl.nodes_on(a, a + 0.5);
            for (x, w) in nodes {
                let log_arg = LN2 - gamma + log_cosh_half(x);
                total += w * (self.log_bessel_k_at_log(0.0, log_arg)? - log_norm).exp() / (1.0 + x.exp());
            }
        }
        Ok(2.0 * total)
    }

    /// `ε ∫ e^{−x} p_Γ(x) dx`, the stationary mean of `ε e^{−l}`.
    pub fn free_energy_stationary(&self, gamma: f64) -> Result<f64> {
        check_gamma(gamma)?;
        let eps = epsilon(gamma);
        let log_norm = LN2 + self.log_bessel_k_at_log(0.0, -gamma)?;
        let gl = GaussLegendre::new(20);
        let lo = -(gamma + 10.0);
        let hi = gamma.max(0.0) + 40.0;
        let panels = (2.0 * (hi - lo)).ceil() as usize;
        let body = gl.integrate_panels(|x| (-x - eps * x.cosh() - log_norm).exp(), lo, hi, panels);
        Ok(eps * body)
    }
}

fn log_cosh_half(x: f64) -> f64 {
    let a = 0.5 * x.abs();
    a + (-2.0 * a).exp().ln_1p() - LN2
}

fn check_gamma(gamma: f64) -> Result<()> {
    if gamma > 0.0 && gamma.is_finite() {
        Ok(())
    } else {
        Err(invalid(format!("gamma must be positive and finite, got {gamma}")))
    }
}

/// Tabulated CDF of `p_Γ` for repeated evaluation.
#[derive(Debug, Clone)]
pub struct StationaryCdf {
    eps: f64,
    log_norm: f64,
    width: f64,
    /// `∫₀^{k·width} p_Γ` for each panel edge.
    cumulative: Vec<f64>,
    gl: GaussLegendre,
}

impl StationaryCdf {
    pub fn new(cfg: &AnalyticConfig, gamma: f64) -> Result<Self> {
        check_gamma(gamma)?;
        let eps = epsilon(gamma);
        let log_norm = LN2 + cfg.log_bessel_k(0.0, eps)?;
        let width = 0.25;
        let gl = GaussLegendre::new(16);
        // beyond Γ + 6 the density carries less than e^{−100}
        let panels = ((gamma + 6.0) / width).ceil() as usize;
        let mut cumulative = Vec::with_capacity(panels + 1);
        let mut acc = 0.0;
        cumulative.push(0.0);
        for i in 0..panels {
            let a = i as f64 * width;
            acc += gl.integrate(|x| (-eps * x.cosh() - log_norm).exp(), a, a + width);
            cumulative.push(acc);
        }
        Ok(Self { eps, log_norm, width, cumulative, gl })
    }

    pub fn density(&self, x: f64) -> f64 {
        (-self.eps * x.cosh() - self.log_norm).exp()
    }

    /// Total mass, which should be 1 up to quadrature error.
    pub fn mass(&self) -> f64 {
        2.0 * self.cumulative[self.cumulative.len() - 1]
    }

    pub fn cdf(&self, x: f64) -> f64 {
        if x.is_nan() {
            return f64::NAN;
        }
        let a = x.abs();
        let last = self.cumulative.len() - 1;
        let total = self.cumulative[last];
        let half = if a >= last as f64 * self.width {
            total
        } else {
            let i = (a / self.width).floor() as usize;
            let left = i as f64 * self.width;
            (self.cumulative[i] + self.gl.integrate(|y| self.density(y), left, a)).min(total)
        };
        // normalized so that the tails reach exactly 0 and 1
        let half = 0.5 * half / total;
        if x >= 0.0 {
            0.5 + half
        } else {
            0.5 - half
        }
    }
}

/// Dilogarithm on `[−1, 1]`.
pub fn li2(x: f64) -> f64 {
    assert!((-1.0..=1.0).contains(&x), "li2 is implemented on [-1, 1]");
    if x == 1.0 {
        return PI2 / 6.0;
    }
    if x > 0.5 {
        return PI2 / 6.0 - x.ln() * (-x).ln_1p() - li2(1.0 - x);
    }
    if x < -0.5 {
        // Landen: maps [-1, -0.5) into (1/3, 1/2]
        let y = x / (x - 1.0);
        let l = (-x).ln_1p();
        return -li2(y) - 0.5 * l * l;
    }
    let mut term = x;
    let mut sum = 0.0f64;
    let mut k = 1.0;
    while term.abs() > 1e-18 * sum.abs().max(1e-300) && k < 400.0 {
        sum += term / (k * k);
        term *= x;
        k += 1.0;
    }
    sum
}

/// `E[(1 + e^{|l+r|})⁻¹]` for independent uniforms on `[−Γ, Γ]`:
/// `log 2/Γ − π²/(24Γ²) − Li₂(−e^{−2Γ})/(2Γ²)`.
pub fn d_hat(gamma: f64) -> Result<f64> {
    check_gamma(gamma)?;
    let g2 = gamma * gamma;
    Ok(LN2 / gamma - PI2 / (24.0 * g2) - li2(-(-2.0 * gamma).exp()) / (2.0 * g2))
}

/// `log 2/Γ − (π²/24 + (3/2)(log 2)² − γ_EM log 2)/Γ²`.
pub fn d_m_expansion(gamma: f64) -> Result<f64> {
    check_gamma(gamma)?;
    Ok(LN2 / gamma - d_m_second_order_constant() / (gamma * gamma))
}

pub fn d_m_second_order_constant() -> f64 {
    PI2 / 24.0 + 1.5 * LN2 * LN2 - EULER_GAMMA * LN2
}

/// `1/(Γ + log 2 − γ_EM)`.
pub fn free_energy_asymptote(gamma: f64) -> f64 {
    1.0 / (gamma + LN2 - EULER_GAMMA)
}

pub fn bessel_k(nu: f64, x: f64) -> Result<f64> {
    AnalyticConfig::default().bessel_k(nu, x)
}

pub fn free_energy(gamma: f64, alpha: f64) -> Result<f64> {
    AnalyticConfig::default().free_energy(gamma, alpha)
}

pub fn wall_density(gamma: f64) -> Result<f64> {
    AnalyticConfig::default().wall_density(gamma)
}

pub fn disorder_energy(gamma: f64) -> Result<f64> {
    AnalyticConfig::default().disorder_energy(gamma)
}

pub fn overlap_density(gamma: f64) -> Result<f64> {
    AnalyticConfig::default().overlap_density(gamma)
}

pub fn p_gamma(gamma: f64, x: f64) -> Result<f64> {
    AnalyticConfig::default().p_gamma(gamma, x)
}

pub fn p_gamma_cdf(gamma: f64, x: f64) -> Result<f64> {
    AnalyticConfig::default().p_gamma_cdf(gamma, x)
}

pub fn p_convolution(gamma: f64, x: f64) -> Result<f64> {
    AnalyticConfig::default().p_convolution(gamma, x)
}

pub fn d_m_exact(gamma: f64) -> Result<f64> {
    AnalyticConfig::default().d_m_exact(gamma)
}

pub fn free_energy_stationary(gamma: f64) -> Result<f64> {
    AnalyticConfig::default().free_energy_stationary(gamma)
}
