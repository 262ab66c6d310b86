//! Piecewise-linear approximation of the OCV curve.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::OcvPolynomial;
use crate::poly::Polynomial;

/// Upper bound on the number of segments.
pub const MAX_SEGMENTS: usize = 64;

/// `U(V_s) ≈ a V_s + b` on `[lo, hi]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PwlSegment {
    pub lo: f64,
    pub hi: f64,
    pub a: f64,
    pub b: f64,
}

impl PwlSegment {
    pub fn eval(&self, v_s: f64) -> f64 {
        self.a * v_s + self.b
    }
}

/// Continuous chord interpolant of the OCV on `[0, 1]`.
///
/// `psi_min` and `psi_max` bound both the segment slopes and the true slope
/// `U'` on `[0, 1]`, so they also bound every secant slope of the curve.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PwlOcv {
    pub segments: Vec<PwlSegment>,
    pub psi_min: f64,
    pub psi_max: f64,
}

/// Segment count or error tolerance.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum PwlTarget {
    Segments(usize),
    Tolerance(f64),
}

impl PwlOcv {
    /// Builds a table from explicit segments, checking partition, continuity
    /// and positive slopes. `slope_bounds` widens the slope envelope.
    pub fn from_segments(segments: Vec<PwlSegment>, slope_bounds: Option<(f64, f64)>) -> Result<Self> {
        let first = segments
            .first()
            .ok_or_else(|| Error::Precondition("PWL table needs at least one segment".into()))?;
        if first.lo != 0.0 || segments.last().map(|s| s.hi) != Some(1.0) {
            return Err(Error::Precondition("PWL segments must cover [0, 1]".into()));
        }
        for w in segments.windows(2) {
            if w[0].hi != w[1].lo {
                return Err(Error::Precondition(format!(
                    "gap or overlap between segments at {} and {}",
                    w[0].hi, w[1].lo
                )));
            }
            // Tables read from nine-digit files join to within a few 1e-8 V.
            if (w[0].eval(w[0].hi) - w[1].eval(w[1].lo)).abs() > 1e-6 {
                return Err(Error::Precondition(format!("discontinuity at breakpoint {}", w[0].hi)));
            }
        }
        if segments.iter().any(|s| !(s.a > 0.0) || !(s.hi > s.lo)) {
            return Err(Error::Precondition("segments need positive slope and length".into()));
        }
        let mut psi_min = segments.iter().map(|s| s.a).fold(f64::INFINITY, f64::min);
        let mut psi_max = segments.iter().map(|s| s.a).fold(f64::NEG_INFINITY, f64::max);
        if let Some((lo, hi)) = slope_bounds {
            psi_min = psi_min.min(lo);
            psi_max = psi_max.max(hi);
        }
        Ok(PwlOcv {
            segments,
            psi_min,
            psi_max,
        })
    }

    pub fn len(&self) -> usize {
        self.segments.len()
    }

    pub fn is_empty(&self) -> bool {
        self.segments.is_empty()
    }

    /// Index of the segment containing `v_s`; a breakpoint belongs to the
    /// lower segment. Arguments outside `[0, 1]` map to the end segments.
    pub fn segment_select(&self, v_s: f64) -> usize {
        let k = self.segments.partition_point(|s| s.hi < v_s);
        k.min(self.segments.len() - 1)
    }

    pub fn eval(&self, v_s: f64) -> f64 {
        self.segments[self.segment_select(v_s)].eval(v_s)
    }

    /// Largest deviation from `ocv` over all segments.
    pub fn max_error(&self, ocv: &OcvPolynomial) -> f64 {
        self.segments
            .iter()
            .map(|s| chord_error(ocv.polynomial(), s))
            .fold(0.0, f64::max)
    }
}

/// Exact maximum of `|U - chord|` on the segment, from the extrema of the
/// difference polynomial.
fn chord_error(u: &Polynomial, s: &PwlSegment) -> f64 {
    let diff = u.sub(&Polynomial::new(vec![s.b, s.a]));
    let (lo, hi) = diff.range_on(s.lo, s.hi);
    lo.abs().max(hi.abs())
}

fn chord(u: &Polynomial, lo: f64, hi: f64) -> PwlSegment {
    let (ul, uh) = (u.eval(lo), u.eval(hi));
    let a = (uh - ul) / (hi - lo);
    PwlSegment { lo, hi, a, b: ul - a * lo }
}

/// Greedy partition with chords as long as the tolerance allows.
fn greedy(u: &Polynomial, tol: f64, limit: usize) -> Option<Vec<PwlSegment>> {
    // Leave headroom so rounding in `a x + b` cannot push a chord past `tol`.
    let tol = tol * (1.0 - 1e-9);
    let mut segments = Vec::new();
    let mut lo = 0.0;
    while lo < 1.0 {
        if segments.len() == limit {
            return None;
        }
        let full = chord(u, lo, 1.0);
        let hi = if chord_error(u, &full) <= tol {
            1.0
        } else {
            let (mut ok, mut bad) = (lo, 1.0);
            for _ in 0..60 {
                let mid = 0.5 * (ok + bad);
                if chord_error(u, &chord(u, lo, mid)) <= tol {
                    ok = mid;
                } else {
                    bad = mid;
                }
            }
            if ok <= lo {
                return None;
            }
            ok
        };
        segments.push(chord(u, lo, hi));
        lo = hi;
    }
    Some(segments)
}

/// Piecewise-linear OCV with either a fixed segment budget or an error
/// tolerance.
pub fn piecewise_linearize(ocv: &OcvPolynomial, target: PwlTarget) -> Result<PwlOcv> {
    let u = ocv.polynomial();
    let segments = match target {
        PwlTarget::Tolerance(tol) => {
            if !(tol > 0.0) {
                return Err(Error::param("pwl_tol", "tolerance must be > 0"));
            }
            greedy(u, tol, MAX_SEGMENTS).ok_or(Error::Resolution {
                tolerance: tol,
                max_segments: MAX_SEGMENTS,
            })?
        }
        PwlTarget::Segments(m) => {
            if m == 0 || m > MAX_SEGMENTS {
                return Err(Error::param("segments", format!("must lie in 1..={MAX_SEGMENTS}")));
            }
            // Smallest tolerance the greedy pass meets within m segments.
            let one = chord(u, 0.0, 1.0);
            let (mut bad, mut ok) = (0.0, chord_error(u, &one).max(1e-15));
            for _ in 0..60 {
                let mid = 0.5 * (bad + ok);
                if greedy(u, mid, m).is_some() {
                    ok = mid;
                } else {
                    bad = mid;
                }
            }
            greedy(u, ok, m).ok_or(Error::Resolution {
                tolerance: ok,
                max_segments: m,
            })?
        }
    };
    // Snap the final breakpoint; bisection can leave it a rounding step short.
    let mut segments = segments;
    if let Some(last) = segments.last_mut() {
        last.hi = 1.0;
    }
    PwlOcv::from_segments(segments, Some(ocv.slope_bounds()))
}
