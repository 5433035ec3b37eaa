//! Exact count ratios and half-up percentage rendering.

use std::fmt;

use serde::{Deserialize, Serialize};

/// `num / den` over counts, kept exact so rendering never suffers from
/// binary rounding.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Ratio {
    pub num: u64,
    pub den: u64,
}

impl Ratio {
    /// `None` when the denominator is zero.
    pub fn new(num: u64, den: u64) -> Option<Ratio> {
        (den > 0).then_some(Ratio { num, den })
    }

    pub fn value(self) -> f64 {
        self.num as f64 / self.den as f64
    }

    /// Renders `num / den` as a percentage with `decimals` places, rounding
    /// half-up on the exact rational.
    ///
    /// ```
    /// use citegauge::ratio::Ratio;
    /// assert_eq!(Ratio::new(10_563_315, 20_339_956).unwrap().percent(2), "51.93%");
    /// assert_eq!(Ratio::new(1, 8).unwrap().percent(1), "12.5%");
    /// assert_eq!(Ratio::new(1, 16).unwrap().percent(1), "6.3%");
    /// ```
    pub fn percent(self, decimals: u32) -> String {
        let scale = 10u128.pow(decimals + 2);
        let num = u128::from(self.num) * scale;
        let den = u128::from(self.den);
        let rounded = (2 * num + den) / (2 * den);
        format!("{}%", fixed_point(rounded, decimals))
    }
}

impl fmt::Display for Ratio {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}/{}", self.num, self.den)
    }
}

fn fixed_point(scaled: u128, decimals: u32) -> String {
    let unit = 10u128.pow(decimals);
    if decimals == 0 {
        scaled.to_string()
    } else {
        format!("{}.{:0width$}", scaled / unit, scaled % unit, width = decimals as usize)
    }
}

/// Renders a fraction in `[0, 1]` (or any finite value) as a percentage with
/// `decimals` places, rounding half-up on the exact binary value of
/// `value * 100`.
///
/// ```
/// use citegauge::ratio::format_percent;
/// assert_eq!(format_percent(2.0 / 3.0, 1), "66.7%");
/// assert_eq!(format_percent(1.0, 1), "100.0%");
/// assert_eq!(format_percent(0.0, 2), "0.00%");
/// ```
pub fn format_percent(value: f64, decimals: usize) -> String {
    format!("{}%", round_half_up(value * 100.0, decimals))
}

/// Half-up rounding of `x` to `decimals` places, as text.
pub fn round_half_up(x: f64, decimals: usize) -> String {
    if !x.is_finite() {
        return x.to_string();
    }
    // An f64 of moderate magnitude has a terminating decimal expansion well
    // within 80 places, so this string is exact for every value we render.
    let exact = format!("{:.80}", x.abs());
    let (int_part, frac_part) = exact.split_once('.').expect("fixed precision output has a point");
    let mut digits: Vec<u8> = int_part
        .bytes()
        .chain(frac_part.bytes().take(decimals))
        .map(|b| b - b'0')
        .collect();
    if frac_part.as_bytes()[decimals] >= b'5' {
        let mut i = digits.len();
        loop {
            if i == 0 {
                digits.insert(0, 1);
                break;
            }
            i -= 1;
            if digits[i] == 9 {
                digits[i] = 0;
            } else {
                digits[i] += 1;
                break;
            }
        }
    }
    let int_len = digits.len() - decimals;
    let mut out = String::new();
    let is_zero = digits.iter().all(|d| *d == 0);
    if x.is_sign_negative() && !is_zero {
        out.push('-');
    }
    out.extend(digits[..int_len].iter().map(|d| char::from(b'0' + d)));
    if decimals > 0 {
        out.push('.');
        out.extend(digits[int_len..].iter().map(|d| char::from(b'0' + d)));
    }
    out
}
