//! Gamma-family special functions and beta distribution primitives.
//!
//! `log_gamma`, `digamma` and `trigamma` shift their argument upwards with
//! the functional recurrences and finish with the asymptotic (Stirling)
//! series. Near the roots of `ln Γ` at 1 and 2 a Taylor expansion around
//! `x = 1` keeps the relative error small.

use rand::Rng;
use rand_distr::{Distribution, Gamma};

use crate::error::{BsarmaError, Result};

const HALF_LN_2PI: f64 = 0.918_938_533_204_672_8;
const EULER_GAMMA: f64 = 0.577_215_664_901_532_9;

/// ζ(k) for k = 2..=26.
const ZETA: [f64; 25] = [
    1.644_934_066_848_226_4,
    1.202_056_903_159_594_3,
    1.082_323_233_711_138_2,
    1.036_927_755_143_370_0,
    1.017_343_061_984_449_1,
    1.008_349_277_381_922_8,
    1.004_077_356_197_944_3,
    1.002_008_392_826_082_2,
    1.000_994_575_127_818_1,
    1.000_494_188_604_119_5,
    1.000_246_086_553_308_0,
    1.000_122_713_347_578_5,
    1.000_061_248_135_058_7,
    1.000_030_588_236_307_0,
    1.000_015_282_259_408_7,
    1.000_007_637_197_637_9,
    1.000_003_817_293_265_0,
    1.000_001_908_212_716_6,
    1.000_000_953_962_033_9,
    1.000_000_476_932_986_8,
    1.000_000_238_450_502_7,
    1.000_000_119_219_926_0,
    1.000_000_059_608_189_1,
    1.000_000_029_803_503_5,
    1.000_000_014_901_554_8,
];

/// Arguments at or above this value go straight to the asymptotic series.
const ASYMPTOTIC_THRESHOLD: f64 = 10.0;

fn check_positive(func: &'static str, x: f64) -> Result<()> {
    if x.is_finite() && x > 0.0 {
        Ok(())
    } else {
        Err(BsarmaError::Domain {
            func,
            value: x,
            expected: "finite and > 0",
        })
    }
}

/// `ln Γ(1 + z)` for small `|z|` from the zeta-function Taylor series.
fn ln_gamma_1p_series(z: f64) -> f64 {
    let mut acc = 0.0;
    let mut power = -z;
    for (i, zeta) in ZETA.iter().enumerate() {
        let k = (i + 2) as f64;
        power *= -z;
        acc += zeta * power / k;
    }
    -EULER_GAMMA * z + acc
}

fn ln_gamma_stirling(x: f64) -> f64 {
    let inv = 1.0 / x;
    let inv2 = inv * inv;
    // Stirling series coefficients B_{2k} / (2k (2k - 1)).
    let series = inv
        * (1.0 / 12.0
            + inv2
                * (-1.0 / 360.0
                    + inv2
                        * (1.0 / 1260.0
                            + inv2
                                * (-1.0 / 1680.0
                                    + inv2
                                        * (1.0 / 1188.0
                                            + inv2 * (-691.0 / 360_360.0 + inv2 / 156.0))))));
    (x - 0.5) * x.ln() - x + HALF_LN_2PI + series
}

/// Natural logarithm of the gamma function.
pub fn log_gamma(x: f64) -> Result<f64> {
    check_positive("log_gamma", x)?;
    if x == 1.0 || x == 2.0 {
        return Ok(0.0);
    }
    if (x - 1.0).abs() < 0.2 {
        return Ok(ln_gamma_1p_series(x - 1.0));
    }
    if (x - 2.0).abs() < 0.2 {
        let z = x - 2.0;
        return Ok(z.ln_1p() + ln_gamma_1p_series(z));
    }
    if x >= ASYMPTOTIC_THRESHOLD {
        return Ok(ln_gamma_stirling(x));
    }
    // ln Γ(x) = ln Γ(x + k) - ln(x (x + 1) ... (x + k - 1))
    let mut shifted = x;
    let mut product = 1.0;
    while shifted < ASYMPTOTIC_THRESHOLD {
        product *= shifted;
        shifted += 1.0;
    }
    Ok(ln_gamma_stirling(shifted) - product.ln())
}

/// Digamma function ψ(x) = d/dx ln Γ(x).
pub fn digamma(x: f64) -> Result<f64> {
    check_positive("digamma", x)?;
    Ok(digamma_unchecked(x))
}

pub(crate) fn digamma_unchecked(mut x: f64) -> f64 {
    let mut acc = 0.0;
    while x < ASYMPTOTIC_THRESHOLD {
        acc -= 1.0 / x;
        x += 1.0;
    }
    let inv2 = 1.0 / (x * x);
    // B_{2k} / (2k)
    let tail = inv2
        * (1.0 / 12.0
            - inv2
                * (1.0 / 120.0
                    - inv2
                        * (1.0 / 252.0
                            - inv2
                                * (1.0 / 240.0
                                    - inv2 * (1.0 / 132.0 - inv2 * (691.0 / 32_760.0 - inv2 / 12.0))))));
    acc + x.ln() - 0.5 / x - tail
}

/// Trigamma function ψ'(x).
pub fn trigamma(x: f64) -> Result<f64> {
    check_positive("trigamma", x)?;
    Ok(trigamma_unchecked(x))
}

pub(crate) fn trigamma_unchecked(mut x: f64) -> f64 {
    let mut acc = 0.0;
    while x < ASYMPTOTIC_THRESHOLD {
        acc += 1.0 / (x * x);
        x += 1.0;
    }
    let inv = 1.0 / x;
    let inv2 = inv * inv;
    // 1/x + 1/(2x^2) + sum B_{2k} / x^{2k+1}
    let tail = inv
        * (1.0
            + 0.5 * inv
            + inv2
                * (1.0 / 6.0
                    - inv2
                        * (1.0 / 30.0
                            - inv2
                                * (1.0 / 42.0
                                    - inv2 * (1.0 / 30.0 - inv2 * (5.0 / 66.0 - inv2 * (691.0 / 2730.0)))))));
    acc + tail
}

/// Mean/precision parameterisation of the beta distribution.
///
/// The shape parameters are `mu * precision` and `(1 - mu) * precision`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BetaParams {
    mu: f64,
    precision: f64,
}

impl BetaParams {
    pub fn new(mu: f64, precision: f64) -> Result<Self> {
        if !(mu > 0.0 && mu < 1.0) {
            return Err(BsarmaError::Domain {
                func: "BetaParams::new",
                value: mu,
                expected: "mean strictly inside (0, 1)",
            });
        }
        if !(precision.is_finite() && precision > 0.0) {
            return Err(BsarmaError::Domain {
                func: "BetaParams::new",
                value: precision,
                expected: "precision finite and > 0",
            });
        }
        Ok(Self { mu, precision })
    }

    pub fn mu(&self) -> f64 {
        self.mu
    }

    pub fn precision(&self) -> f64 {
        self.precision
    }

    pub fn shape_a(&self) -> f64 {
        self.mu * self.precision
    }

    pub fn shape_b(&self) -> f64 {
        (1.0 - self.mu) * self.precision
    }

    pub fn mean(&self) -> f64 {
        self.mu
    }

    pub fn variance(&self) -> f64 {
        self.mu * (1.0 - self.mu) / (1.0 + self.precision)
    }
}

pub(crate) fn check_unit_open(func: &'static str, y: f64) -> Result<()> {
    if y > 0.0 && y < 1.0 {
        Ok(())
    } else {
        Err(BsarmaError::Domain {
            func,
            value: y,
            expected: "strictly inside (0, 1)",
        })
    }
}

/// Log density of Beta(μφ, (1-μ)φ) at `y`.
pub fn beta_log_density(y: f64, params: BetaParams) -> Result<f64> {
    check_unit_open("beta_log_density", y)?;
    let a = params.shape_a();
    let b = params.shape_b();
    Ok(log_gamma(params.precision)? - log_gamma(a)? - log_gamma(b)?
        + (a - 1.0) * y.ln()
        + (b - 1.0) * (-y).ln_1p())
}

/// Draws from Beta(μφ, (1-μ)φ) as `X / (X + Y)` with independent gamma variates.
pub fn beta_sample<R: Rng + ?Sized>(rng: &mut R, params: BetaParams) -> f64 {
    // Shapes are validated positive by `BetaParams`.
    let ga = Gamma::new(params.shape_a(), 1.0).expect("positive shape");
    let gb = Gamma::new(params.shape_b(), 1.0).expect("positive shape");
    loop {
        let x = ga.sample(rng);
        let y = gb.sample(rng);
        let draw = x / (x + y);
        // Underflow of either variate would land on the boundary.
        if draw > 0.0 && draw < 1.0 {
            return draw;
        }
    }
}
