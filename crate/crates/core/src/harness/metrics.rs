//! Scalar summaries of force traces.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct JumpStats {
    /// Median of `|s[k] - s[k-1]|` over all steps.
    pub median_step_diff: f64,
    /// Largest `|s[k] - s[k-1]|` over steps whose flag is set.
    pub max_move_diff: f64,
    pub ratio: f64,
}

/// Step-to-step jumps at flagged (control-volume move) steps relative to
/// the typical step difference. `moves[k]` refers to the step that produced
/// `series[k]`; `moves[0]` is ignored.
pub fn jump_metric(series: &[f64], moves: &[bool]) -> Result<JumpStats> {
    if series.len() != moves.len() {
        return Err(Error::State(format!(
            "series has {} samples but {} move flags",
            series.len(),
            moves.len()
        )));
    }
    if series.len() < 10 {
        return Err(Error::State(format!("jump metric needs at least 10 samples, got {}", series.len())));
    }
    let diffs = step_diffs(series);
    let max_move_diff = diffs
        .iter()
        .zip(&moves[1..])
        .filter(|(_, m)| **m)
        .map(|(d, _)| *d)
        .fold(None, |a: Option<f64>, d| Some(a.map_or(d, |a| a.max(d))))
        .ok_or_else(|| Error::State("no move steps: jump ratio is undefined".into()))?;
    let median_step_diff = median(&diffs);
    if !(median_step_diff > 0.0) {
        return Err(Error::State("median step difference is zero: jump ratio is undefined".into()));
    }
    Ok(JumpStats {
        median_step_diff,
        max_move_diff,
        ratio: max_move_diff / median_step_diff,
    })
}

pub fn step_diffs(series: &[f64]) -> Vec<f64> {
    series.windows(2).map(|w| (w[1] - w[0]).abs()).collect()
}

/// Largest step difference over the median step difference.
pub fn max_jump_ratio(series: &[f64]) -> f64 {
    let d = step_diffs(series);
    let m = median(&d);
    d.iter().cloned().fold(0.0, f64::max) / m
}

pub fn median(xs: &[f64]) -> f64 {
    if xs.is_empty() {
        return f64::NAN;
    }
    let mut v = xs.to_vec();
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

pub fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

pub fn rms(xs: &[f64]) -> f64 {
    (xs.iter().map(|x| x * x).sum::<f64>() / xs.len() as f64).sqrt()
}

pub fn max_abs(xs: &[f64]) -> f64 {
    xs.iter().fold(0.0, |m, x| m.max(x.abs()))
}

/// `max |a - b| / max |b|`.
pub fn rel_linf(a: &[f64], b: &[f64]) -> f64 {
    let d = a.iter().zip(b).fold(0.0f64, |m, (x, y)| m.max((x - y).abs()));
    d / max_abs(b)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn smooth_series_has_unit_ratio() {
        let s: Vec<f64> = (0..40).map(|k| 0.1 * k as f64).collect();
        let mut m = vec![false; 40];
        m[17] = true;
        let j = jump_metric(&s, &m).unwrap();
        assert!((j.ratio - 1.0).abs() < 1e-12);
    }

    #[test]
    fn spike_at_move_step() {
        let mut s: Vec<f64> = (0..20).map(|k| k as f64).collect();
        for x in s.iter_mut().skip(10) {
            *x += 7.0;
        }
        let mut m = vec![false; 20];
        m[10] = true;
        let j = jump_metric(&s, &m).unwrap();
        assert_eq!(j.median_step_diff, 1.0);
        assert_eq!(j.max_move_diff, 8.0);
        assert_eq!(j.ratio, 8.0);
    }

    #[test]
    fn preconditions() {
        let s = vec![1.0; 20];
        assert!(jump_metric(&s, &vec![false; 20]).is_err());
        assert!(jump_metric(&s[..5], &[true; 5]).is_err());
        assert!(jump_metric(&s, &[true; 19]).is_err());
    }

    #[test]
    fn summary_helpers() {
        assert_eq!(median(&[3.0, 1.0, 2.0]), 2.0);
        assert_eq!(median(&[4.0, 1.0, 2.0, 3.0]), 2.5);
        assert!((rms(&[3.0, -3.0]) - 3.0).abs() < 1e-15);
        assert!((rel_linf(&[1.0, 2.1], &[1.0, 2.0]) - 0.05).abs() < 1e-12);
    }
}
