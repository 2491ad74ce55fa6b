//! Newton polygons, Weierstrass degrees, and the zero radius rho(s).
//!
//! Convention, stated in every output: a segment of slope sigma and horizontal
//! length L certifies L roots of valuation -sigma, so roots inside the open
//! unit disk correspond to sigma < 0.

use num::rational::Rational64;
use num::Zero as _;

use crate::error::{Error, Result};
use crate::field::Valuation;
use crate::series::{HiTail, LoTail, Series};

pub const SLOPE_CONVENTION: &str = "root valuation = -slope";

#[derive(Clone, Debug)]
pub struct NewtonPolygon {
    /// Lower convex hull vertices (exponent, valuation), strictly increasing
    /// in exponent.
    pub vertices: Vec<(i64, Rational64)>,
    /// (slope, horizontal length), slopes nondecreasing.
    pub slopes: Vec<(Rational64, i64)>,
    /// True when indistinguishable-from-zero coefficients or unknown tails
    /// could sit below the hull.
    pub provisional: bool,
}

impl NewtonPolygon {
    pub fn hull_at(&self, x: Rational64) -> Option<Rational64> {
        let first = self.vertices.first()?;
        let last = self.vertices.last()?;
        if x < Rational64::from(first.0) || x > Rational64::from(last.0) {
            return None;
        }
        for w in self.vertices.windows(2) {
            let (x0, y0) = (Rational64::from(w[0].0), w[0].1);
            let (x1, y1) = (Rational64::from(w[1].0), w[1].1);
            if x <= x1 {
                if x1 == x0 {
                    return Some(y0);
                }
                return Some(y0 + (y1 - y0) * (x - x0) / (x1 - x0));
            }
        }
        Some(last.1)
    }
}

/// Lower convex hull of (exponent, valuation) points by monotone chain.
fn lower_hull(points: &[(i64, Rational64)]) -> Vec<(i64, Rational64)> {
    let mut pts = points.to_vec();
    pts.sort_by_key(|p| p.0);
    let mut hull: Vec<(i64, Rational64)> = Vec::new();
    for p in pts {
        while hull.len() >= 2 {
            let a = hull[hull.len() - 2];
            let b = hull[hull.len() - 1];
            // keep b only if it turns strictly left of segment a-p
            let lhs = (b.1 - a.1) * Rational64::from(p.0 - a.0);
            let rhs = (p.1 - a.1) * Rational64::from(b.0 - a.0);
            if lhs <= rhs {
                break;
            }
            hull.pop();
        }
        if let Some(last) = hull.last() {
            if last.0 == p.0 {
                continue; // sorted: earlier point is not higher
            }
        }
        hull.push(p);
    }
    // drop hull points that lie on the interior of a segment
    let mut out: Vec<(i64, Rational64)> = Vec::new();
    for p in hull {
        while out.len() >= 2 {
            let a = out[out.len() - 2];
            let b = out[out.len() - 1];
            let lhs = (b.1 - a.1) * Rational64::from(p.0 - a.0);
            let rhs = (p.1 - a.1) * Rational64::from(b.0 - a.0);
            if lhs == rhs {
                out.pop();
            } else {
                break;
            }
        }
        out.push(p);
    }
    out
}

/// Newton polygon of the stored exact-valuation coefficients.
pub fn newton_polygon(f: &Series) -> Result<NewtonPolygon> {
    let points = f.newton_points();
    if points.is_empty() {
        return Err(Error::AllCoefficientsIndistinguishable);
    }
    let vertices = lower_hull(&points);
    let mut slopes = Vec::new();
    for w in vertices.windows(2) {
        let run = w[1].0 - w[0].0;
        let slope = (w[1].1 - w[0].1) / Rational64::from(run);
        slopes.push((slope, run));
    }
    // Admissibility of the points we cannot see exactly.
    let mut provisional = f.hi_tail() == HiTail::Unknown || f.lo_tail() == LoTail::Unknown;
    let poly = NewtonPolygon {
        vertices,
        slopes,
        provisional: false,
    };
    let m_rat = Rational64::new(f.modulus(), f.field().ramification() as i64);
    if !provisional {
        for n in f.lo()..f.hi() {
            if f.coeff(n).is_none() {
                if let Some(h) = poly.hull_at(Rational64::from(n)) {
                    if m_rat < h {
                        provisional = true;
                        break;
                    }
                }
            }
        }
    }
    Ok(NewtonPolygon {
        provisional,
        ..poly
    })
}

/// Least exponent whose coefficient is a unit, for an integral power series.
pub fn wideg(f: &Series) -> Result<i64> {
    if f.lo() < 0
        || f.lo_tail() != LoTail::Zero
        || f.terms().any(|(_, c)| !c.is_integral())
    {
        return Err(Error::NotIntegral);
    }
    for (n, c) in f.terms() {
        if let Valuation::Exact(v) = c.valuation() {
            if v.is_zero() {
                return Ok(n);
            }
        }
    }
    Err(Error::WidegUndetermined)
}

/// Smallest positive root valuation of s on the open unit disk, read off the
/// polygon of s/X; None when s/X has no zero there (for example s = X^d).
///
/// Integral coefficients beyond the window cannot disturb the negative-slope
/// part of the hull because it ends at the valuation-zero vertex certified by
/// wideg.
pub fn rho_valuation(s: &Series) -> Result<Option<Rational64>> {
    let d = wideg(s)?;
    if s.coeff(0).is_some() {
        return Err(Error::ConstantTermNotZero);
    }
    let q = s.shift_x(-1);
    let poly = newton_polygon(&q)?;
    let _ = d;
    let neg: Vec<Rational64> = poly
        .slopes
        .iter()
        .filter(|(sl, _)| *sl < Rational64::zero())
        .map(|(sl, _)| -*sl)
        .collect();
    Ok(neg.into_iter().min())
}

/// Count of disk zeros certified by the negative slopes of the polygon of s/X.
pub fn disk_zero_count(s: &Series) -> Result<i64> {
    let q = s.shift_x(-1);
    let poly = newton_polygon(&q)?;
    Ok(poly
        .slopes
        .iter()
        .filter(|(sl, _)| *sl < Rational64::zero())
        .map(|(_, len)| *len)
        .sum())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::Field;

    fn q3() -> Field {
        Field::new(3, None).unwrap()
    }

    /// Brute-force hull oracle: a point is on the lower hull boundary iff no
    /// convex combination of other points lies strictly below it.
    fn brute_hull_value(points: &[(i64, Rational64)], x: i64) -> Option<Rational64> {
        let xr = Rational64::from(x);
        let mut best: Option<Rational64> = None;
        for a in points {
            for b in points {
                let (x0, x1) = (Rational64::from(a.0), Rational64::from(b.0));
                if x0 <= xr && xr <= x1 && x0 != x1 {
                    let y = a.1 + (b.1 - a.1) * (xr - x0) / (x1 - x0);
                    best = Some(best.map_or(y, |v: Rational64| v.min(y)));
                } else if x0 == xr && x1 == xr {
                    best = Some(best.map_or(a.1, |v: Rational64| v.min(a.1)));
                }
            }
        }
        best
    }

    #[test]
    fn hull_matches_brute_force() {
        let f = q3();
        let s = Series::from_i128_coeffs(&f, &[3, 2, 1], 12).unwrap();
        let poly = newton_polygon(&s).unwrap();
        assert!(!poly.provisional);
        let pts = s.newton_points();
        for x in 0..=2 {
            assert_eq!(
                poly.hull_at(Rational64::from(x)),
                brute_hull_value(&pts, x),
                "hull mismatch at {x}"
            );
        }
        assert_eq!(
            poly.vertices,
            vec![
                (0, Rational64::from(1)),
                (1, Rational64::from(0)),
                (2, Rational64::from(0)),
            ]
        );
        assert_eq!(
            poly.slopes,
            vec![
                (Rational64::from(-1), 1),
                (Rational64::from(0), 1),
            ]
        );
    }

    #[test]
    fn single_vertex_polygon() {
        let f = q3();
        let s = Series::x_pow(&f, 3, 12).unwrap();
        let poly = newton_polygon(&s).unwrap();
        assert_eq!(poly.vertices, vec![(3, Rational64::from(0))]);
        assert!(poly.slopes.is_empty());
    }

    #[test]
    fn cyclotomic_polygon() {
        // (1+X)^3 - 1 = 3X + 3X^2 + X^3: hull of (1,1),(2,1),(3,0)
        let f = q3();
        let s = Series::from_i128_coeffs(&f, &[0, 3, 3, 1], 12).unwrap();
        let poly = newton_polygon(&s).unwrap();
        let pts = s.newton_points();
        for x in 1..=3 {
            assert_eq!(poly.hull_at(Rational64::from(x)), brute_hull_value(&pts, x));
        }
        assert_eq!(poly.slopes, vec![(Rational64::new(-1, 2), 2)]);
    }

    #[test]
    fn wideg_examples() {
        let f = q3();
        let s = Series::from_i128_coeffs(&f, &[0, 3, 1], 8).unwrap();
        assert_eq!(wideg(&s).unwrap(), 2);
        let s = Series::from_i128_coeffs(&f, &[0, 3, 3, 1], 8).unwrap();
        assert_eq!(wideg(&s).unwrap(), 3);
        let mut s = Series::from_i128_coeffs(&f, &[0, 3, 9], 8).unwrap();
        s.set_tails(LoTail::Zero, HiTail::Unknown);
        assert!(matches!(wideg(&s), Err(Error::WidegUndetermined)));
    }

    #[test]
    fn rho_examples() {
        let f = q3();
        let s = Series::from_i128_coeffs(&f, &[0, 3, 3, 1], 12).unwrap();
        assert_eq!(rho_valuation(&s).unwrap(), Some(Rational64::new(1, 2)));
        let s = Series::x_pow(&f, 2, 12).unwrap();
        assert_eq!(rho_valuation(&s).unwrap(), None);
        // s = 3X + X^2 has the nonzero root -3
        let s = Series::from_i128_coeffs(&f, &[0, 3, 1], 12).unwrap();
        assert_eq!(rho_valuation(&s).unwrap(), Some(Rational64::from(1)));
        assert_eq!(disk_zero_count(&s).unwrap(), 1);
    }
}
