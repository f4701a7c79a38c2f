//! Exponential integrals.
//!
//! `Ei(x)` uses the power series up to `x = 40` and the asymptotic expansion
//! beyond; `E1(x)` uses the series below 1 and a Lentz continued fraction above.
//! Both target about 1e-14 relative accuracy.

const EULER_GAMMA: f64 = 0.577_215_664_901_532_860_6;
const SERIES_LIMIT: f64 = 40.0;

/// Exponential integral `Ei(x)`; `Ei(x) = -E1(-x)` for negative `x`.
pub fn ei(x: f64) -> f64 {
    if x.is_nan() {
        return f64::NAN;
    }
    if x == 0.0 {
        return f64::NEG_INFINITY;
    }
    if x < 0.0 {
        return -e1(-x);
    }
    if x <= SERIES_LIMIT {
        ei_series(x)
    } else if x < 709.0 {
        x.exp() * ei_asymptotic_scaled(x)
    } else {
        f64::INFINITY
    }
}

/// `exp(-x) Ei(x)` for `x > 0`, finite for every finite argument.
pub fn ei_scaled(x: f64) -> f64 {
    assert!(x > 0.0, "ei_scaled requires a positive argument");
    if x <= SERIES_LIMIT {
        (-x).exp() * ei_series(x)
    } else {
        ei_asymptotic_scaled(x)
    }
}

fn ei_series(x: f64) -> f64 {
    let mut term = 1.0;
    let mut sum = 0.0;
    for k in 1..500 {
        let kf = k as f64;
        term *= x / kf;
        let add = term / kf;
        sum += add;
        if add < 1e-17 * sum {
            break;
        }
    }
    EULER_GAMMA + x.ln() + sum
}

/// `sum_k k!/x^k / x`, truncated at the smallest term.
fn ei_asymptotic_scaled(x: f64) -> f64 {
    let mut term = 1.0;
    let mut sum = 1.0;
    for k in 1..200 {
        let next = term * k as f64 / x;
        if next > term {
            break;
        }
        term = next;
        sum += term;
        if term < 1e-17 * sum {
            break;
        }
    }
    sum / x
}

/// Exponential integral `E1(x) = int_x^inf e^-t/t dt` for `x > 0`.
pub fn e1(x: f64) -> f64 {
    assert!(x > 0.0, "e1 requires a positive argument");
    if x <= 1.0 {
        let mut term = 1.0;
        let mut sum = 0.0;
        for k in 1..100 {
            let kf = k as f64;
            term *= -x / kf;
            sum += term / kf;
            if term.abs() < 1e-17 {
                break;
            }
        }
        -EULER_GAMMA - x.ln() - sum
    } else {
        // modified Lentz on e^-x / (x + 1 - 1/(x + 3 - 4/(x + 5 - ...)))
        let tiny = 1e-300;
        let mut b = x + 1.0;
        let mut c = 1.0 / tiny;
        let mut d = 1.0 / b;
        let mut h = d;
        for i in 1..1000 {
            let a = -((i * i) as f64);
            b += 2.0;
            d = 1.0 / (a * d + b);
            c = b + a / c;
            let delta = c * d;
            h *= delta;
            if (delta - 1.0).abs() < 1e-16 {
                break;
            }
        }
        h * (-x).exp()
    }
}
