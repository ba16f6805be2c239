//! Piecewise linear regression (PLR) trees that compress a cost-to-goal
//! function over a configuration space, the oracles used to supervise them,
//! error analysis, and a grid planner that uses PLR queries as its heuristic.

pub mod analysis;
pub mod error;
pub mod fixtures;
pub mod geometry;
pub mod oracles;
pub mod planner;
pub mod plr;

pub use error::{Error, Result};

/// Formats a number with 9 significant digits (`inf`/`-inf`/`nan` for
/// non-finite values) so printed output is stable across runs.
pub fn format_sig(x: f64) -> String {
    if x.is_nan() {
        return "nan".into();
    }
    if x.is_infinite() {
        return if x > 0.0 { "inf".into() } else { "-inf".into() };
    }
    if x == 0.0 {
        return "0".into();
    }
    let mag = x.abs().log10().floor() as i32;
    if !(-4..9).contains(&mag) {
        format!("{x:.8e}")
    } else {
        format!("{:.*}", (8 - mag).max(0) as usize, x)
    }
}

#[cfg(test)]
mod tests {
    use super::format_sig;

    #[test]
    fn nine_significant_digits() {
        assert_eq!(format_sig(std::f64::consts::SQRT_2), "1.41421356");
        assert_eq!(format_sig(0.0), "0");
        assert_eq!(format_sig(123.456), "123.456000");
        assert_eq!(format_sig(f64::INFINITY), "inf");
        assert_eq!(format_sig(1.5e-7), "1.50000000e-7");
    }
}
