//! Exact geometry substrate: rational points on the unit square torus,
//! displacement-encoded segments, and their intersections.
//!
//! Everything here is exact `BigRational` arithmetic. Floating point appears
//! only as a conservative bounding-box prefilter inside `seg_intersections`;
//! it can skip work but never changes an answer.

use num::{BigRational, Signed, ToPrimitive, Zero};
use thiserror::Error;

/// The scalar used for every semantic computation in this crate.
pub type Q = BigRational;

/// Rational `n/d` from machine integers.
pub fn q(n: i64, d: i64) -> Q {
    Q::new(n.into(), d.into())
}

/// Rational from a machine integer.
pub fn qi(n: i64) -> Q {
    Q::from_integer(n.into())
}

#[derive(Error, Debug, Clone, PartialEq, Eq)]
pub enum GeomError {
    #[error("segments overlap along a common line; perturb the input")]
    CollinearOverlap,
}

/// A point of the square torus, with both coordinates in `[0,1)`.
///
/// `s` runs horizontally (the binding direction), `t` vertically.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct TorusPoint {
    pub s: Q,
    pub t: Q,
}

impl TorusPoint {
    /// The point `(s,t)` reduced into the fundamental square.
    pub fn new(s: Q, t: Q) -> TorusPoint {
        reduce(s, t)
    }
}

impl std::fmt::Display for TorusPoint {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "({},{})", self.s, self.t)
    }
}

/// Reduce raw coordinates into `[0,1)` by subtracting integer parts.
pub fn reduce(s: Q, t: Q) -> TorusPoint {
    TorusPoint {
        s: frac_q(s),
        t: frac_q(t),
    }
}

/// The fractional part of `x`, in `[0,1)` (also for negative input).
pub fn frac_q(x: Q) -> Q {
    let f = x.floor();
    x - f
}

/// A displacement vector in the universal cover.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Disp {
    pub ds: Q,
    pub dt: Q,
}

impl Disp {
    pub fn new(ds: Q, dt: Q) -> Disp {
        Disp { ds, dt }
    }

    pub fn is_zero(&self) -> bool {
        self.ds.is_zero() && self.dt.is_zero()
    }

    /// Reverse of this displacement.
    pub fn neg(&self) -> Disp {
        Disp {
            ds: -self.ds.clone(),
            dt: -self.dt.clone(),
        }
    }
}

/// 2D cross product `a.ds*b.dt - a.dt*b.ds`; zero exactly when parallel.
pub fn cross(a: &Disp, b: &Disp) -> Q {
    &a.ds * &b.dt - &a.dt * &b.ds
}

/// Slope of a displacement: `dt/ds`, or `Vertical` when `ds = 0`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Slope {
    Finite(Q),
    Vertical,
}

pub fn slope(seg: &Segment) -> Slope {
    seg.disp.slope()
}

impl Disp {
    pub fn slope(&self) -> Slope {
        if self.ds.is_zero() {
            Slope::Vertical
        } else {
            Slope::Finite(&self.dt / &self.ds)
        }
    }
}

/// A straight segment on the torus: a start point plus a displacement with
/// `|ds| < 1` and `|dt| < 1`.
///
/// Two torus points do not determine a segment (the segment could wind either
/// way around either direction), so the displacement is the primary datum and
/// the endpoint is derived.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Segment {
    pub start: TorusPoint,
    pub disp: Disp,
}

impl Segment {
    pub fn new(start: TorusPoint, disp: Disp) -> Segment {
        Segment { start, disp }
    }

    /// Whether the displacement satisfies the winding bounds and is nonzero.
    pub fn well_formed(&self) -> bool {
        !self.disp.is_zero() && self.disp.ds.abs() < qi(1) && self.disp.dt.abs() < qi(1)
    }

    /// Lifted coordinates of the point at parameter `u` (not reduced).
    pub fn lift_at(&self, u: &Q) -> (Q, Q) {
        (
            &self.start.s + u * &self.disp.ds,
            &self.start.t + u * &self.disp.dt,
        )
    }

    /// Torus point at parameter `u ∈ [0,1]`.
    pub fn point_at(&self, u: &Q) -> TorusPoint {
        let (s, t) = self.lift_at(u);
        reduce(s, t)
    }

    pub fn end(&self) -> TorusPoint {
        self.point_at(&qi(1))
    }

    /// The same geometric segment traversed backwards.
    pub fn reversed(&self) -> Segment {
        Segment {
            start: self.end(),
            disp: self.disp.neg(),
        }
    }
}

/// A chain of segments, each starting where the previous one ends (mod 1).
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PLPath {
    pub segs: Vec<Segment>,
}

impl PLPath {
    pub fn new(segs: Vec<Segment>) -> PLPath {
        PLPath { segs }
    }

    /// Non-empty, every segment well formed, and consecutive endpoints chained.
    pub fn is_chained(&self) -> bool {
        if self.segs.is_empty() {
            return false;
        }
        if !self.segs.iter().all(Segment::well_formed) {
            return false;
        }
        self.segs
            .windows(2)
            .all(|w| w[0].end() == w[1].start)
    }

    pub fn start(&self) -> &TorusPoint {
        &self.segs[0].start
    }

    pub fn end(&self) -> TorusPoint {
        self.segs.last().expect("non-empty path").end()
    }
}

const PREFILTER_SLACK: f64 = 1e-6;

fn approx(x: &Q) -> Option<f64> {
    x.to_f64().filter(|v| v.is_finite())
}

/// Conservative f64 bounding boxes for a lift of each segment; returns true
/// when the boxes certainly do not meet, i.e. the exact solve can be skipped.
/// Any doubt (non-finite approximation) disables the skip.
fn surely_disjoint(a: &Segment, b: &Segment, ks: i64, kt: i64) -> bool {
    let box_of = |seg: &Segment, shift_s: f64, shift_t: f64| -> Option<(f64, f64, f64, f64)> {
        let s0 = approx(&seg.start.s)? + shift_s;
        let t0 = approx(&seg.start.t)? + shift_t;
        let s1 = s0 + approx(&seg.disp.ds)?;
        let t1 = t0 + approx(&seg.disp.dt)?;
        Some((s0.min(s1), s0.max(s1), t0.min(t1), t0.max(t1)))
    };
    let (Some(ba), Some(bb)) = (box_of(a, 0.0, 0.0), box_of(b, ks as f64, kt as f64)) else {
        return false;
    };
    ba.1 + PREFILTER_SLACK < bb.0
        || bb.1 + PREFILTER_SLACK < ba.0
        || ba.3 + PREFILTER_SLACK < bb.2
        || bb.3 + PREFILTER_SLACK < ba.2
}

/// All intersection points of two segments on the torus, with the parameter
/// of each segment at the meeting point (both in `[0,1]`, endpoints included).
///
/// Wraparound is handled by enumerating integer lift shifts; the winding
/// bounds `|ds|,|dt| < 1` make shifts in `{-2,…,2}²` exhaustive. Results are
/// sorted by `(param_a, param_b)`. Collinear segments sharing more than a
/// single point are a `CollinearOverlap` error; a collinear end-to-end touch
/// is reported as an ordinary intersection point.
pub fn seg_intersections(
    a: &Segment,
    b: &Segment,
) -> Result<Vec<(TorusPoint, Q, Q)>, GeomError> {
    debug_assert!(a.well_formed() && b.well_formed());
    let det = cross(&b.disp, &a.disp);
    let mut out: Vec<(TorusPoint, Q, Q)> = Vec::new();
    for ks in -2..=2i64 {
        for kt in -2..=2i64 {
            if surely_disjoint(a, b, ks, kt) {
                continue;
            }
            // Solve a.start + u*a.disp = (b.start + k) + v*b.disp exactly.
            let rs = &b.start.s + qi(ks) - &a.start.s;
            let rt = &b.start.t + qi(kt) - &a.start.t;
            if det.is_zero() {
                if !(&a.disp.ds * &rt - &a.disp.dt * &rs).is_zero() {
                    continue; // parallel but distinct lifted lines
                }
                collinear_touch(a, b, &rs, &rt, &mut out)?;
            } else {
                let u = (&b.disp.ds * &rt - &b.disp.dt * &rs) / &det;
                let v = (&a.disp.ds * &rt - &a.disp.dt * &rs) / &det;
                if in_unit(&u) && in_unit(&v) {
                    out.push((a.point_at(&u), u, v));
                }
            }
        }
    }
    out.sort_by(|x, y| (&x.1, &x.2).cmp(&(&y.1, &y.2)));
    Ok(out)
}

fn in_unit(x: &Q) -> bool {
    !x.is_negative() && *x <= qi(1)
}

/// Handle one collinear lift pair: error on positive-length overlap, record a
/// single-point touch, ignore disjoint.
fn collinear_touch(
    a: &Segment,
    b: &Segment,
    rs: &Q,
    rt: &Q,
    out: &mut Vec<(TorusPoint, Q, Q)>,
) -> Result<(), GeomError> {
    // Parameterize b's lift by a's parameter: u(v) = alpha + beta*v.
    let (alpha, beta) = if !a.disp.ds.is_zero() {
        (rs / &a.disp.ds, &b.disp.ds / &a.disp.ds)
    } else {
        (rt / &a.disp.dt, &b.disp.dt / &a.disp.dt)
    };
    let u_at_v1 = &alpha + &beta;
    let (lo, hi) = if alpha <= u_at_v1 {
        (alpha.clone(), u_at_v1)
    } else {
        (u_at_v1, alpha.clone())
    };
    let lo = lo.max(qi(0));
    let hi = hi.min(qi(1));
    if lo > hi {
        return Ok(());
    }
    if lo < hi {
        return Err(GeomError::CollinearOverlap);
    }
    let u = lo;
    let v = (&u - &alpha) / &beta;
    out.push((a.point_at(&u), u, v));
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn seg(s: (i64, i64), t: (i64, i64), ds: (i64, i64), dt: (i64, i64)) -> Segment {
        Segment::new(
            TorusPoint::new(q(s.0, s.1), q(t.0, t.1)),
            Disp::new(q(ds.0, ds.1), q(dt.0, dt.1)),
        )
    }

    #[test]
    fn slope_of_displacements() {
        assert_eq!(
            Disp::new(q(1, 2), q(-1, 2)).slope(),
            Slope::Finite(qi(-1))
        );
        assert_eq!(Disp::new(qi(0), q(1, 3)).slope(), Slope::Vertical);
        assert_eq!(
            Disp::new(q(1, 3), q(-1, 6)).slope(),
            Slope::Finite(q(-1, 2))
        );
    }

    #[test]
    fn reduce_into_unit_square() {
        assert_eq!(
            reduce(q(5, 4), q(-1, 4)),
            TorusPoint { s: q(1, 4), t: q(3, 4) }
        );
        assert_eq!(reduce(qi(0), qi(0)), TorusPoint { s: qi(0), t: qi(0) });
        assert_eq!(
            reduce(q(-3, 2), qi(2)),
            TorusPoint { s: q(1, 2), t: qi(0) }
        );
        // idempotent
        let p = reduce(q(-7, 3), q(22, 7));
        assert_eq!(reduce(p.s.clone(), p.t.clone()), p);
    }

    #[test]
    fn crossing_pair_meets_once() {
        let a = seg((0, 1), (1, 2), (1, 2), (-1, 2));
        let b = seg((0, 1), (0, 1), (1, 2), (1, 2));
        let hits = seg_intersections(&a, &b).unwrap();
        assert_eq!(hits.len(), 1);
        let (p, u, v) = &hits[0];
        assert_eq!(*p, TorusPoint { s: q(1, 4), t: q(1, 4) });
        // exact substitution check on both parameterizations
        assert_eq!(a.point_at(u), *p);
        assert_eq!(b.point_at(v), *p);
    }

    #[test]
    fn parallel_disjoint_verticals_miss() {
        let a = seg((1, 4), (0, 1), (0, 1), (1, 2));
        let b = seg((3, 4), (0, 1), (0, 1), (1, 2));
        assert!(seg_intersections(&a, &b).unwrap().is_empty());
    }

    #[test]
    fn wraparound_hit_is_found() {
        // runs rightward through s=1~0; the vertical lives near s=0
        let a = seg((3, 4), (1, 4), (1, 2), (0, 1));
        let b = seg((1, 8), (0, 1), (0, 1), (1, 2));
        let hits = seg_intersections(&a, &b).unwrap();
        assert_eq!(hits.len(), 1);
        let (p, u, v) = &hits[0];
        assert_eq!(*p, TorusPoint { s: q(1, 8), t: q(1, 4) });
        assert_eq!(a.point_at(u), *p);
        assert_eq!(b.point_at(v), *p);
    }

    #[test]
    fn swapping_arguments_swaps_parameters() {
        let a = seg((3, 4), (1, 4), (1, 2), (0, 1));
        let b = seg((1, 8), (0, 1), (0, 1), (1, 2));
        let ab = seg_intersections(&a, &b).unwrap();
        let ba = seg_intersections(&b, &a).unwrap();
        assert_eq!(ab.len(), ba.len());
        for (p, u, v) in &ab {
            assert!(ba.iter().any(|(p2, u2, v2)| p2 == p && u2 == v && v2 == u));
        }
    }

    #[test]
    fn collinear_overlap_is_an_error() {
        let a = seg((0, 1), (0, 1), (1, 2), (1, 2));
        let b = seg((1, 4), (1, 4), (1, 4), (1, 4));
        assert_eq!(
            seg_intersections(&a, &b),
            Err(GeomError::CollinearOverlap)
        );
    }

    #[test]
    fn collinear_end_to_end_touch_is_one_point() {
        let a = seg((0, 1), (0, 1), (1, 4), (1, 4));
        let b = seg((1, 4), (1, 4), (1, 4), (1, 4));
        let hits = seg_intersections(&a, &b).unwrap();
        assert_eq!(hits.len(), 1);
        let (p, u, v) = &hits[0];
        assert_eq!(*p, TorusPoint { s: q(1, 4), t: q(1, 4) });
        assert_eq!(*u, qi(1));
        assert_eq!(*v, qi(0));
    }

    #[test]
    fn collinear_verticals_touch_across_the_seam() {
        // a spans t in [1/5, 9/10]; b spans t in [9/10, 11/10] i.e. wraps to 1/10
        let a = seg((1, 2), (1, 5), (0, 1), (7, 10));
        let b = seg((1, 2), (9, 10), (0, 1), (1, 5));
        let hits = seg_intersections(&a, &b).unwrap();
        assert_eq!(hits.len(), 1);
        assert_eq!(hits[0].0, TorusPoint { s: q(1, 2), t: q(9, 10) });
    }

    #[test]
    fn path_chaining() {
        let p = PLPath::new(vec![
            seg((3, 4), (0, 1), (1, 2), (1, 4)),
            seg((1, 4), (1, 4), (1, 2), (1, 4)),
        ]);
        assert!(p.is_chained());
        assert_eq!(p.end(), TorusPoint { s: q(3, 4), t: q(1, 2) });
        let broken = PLPath::new(vec![
            seg((3, 4), (0, 1), (1, 2), (1, 4)),
            seg((1, 4), (1, 2), (1, 2), (1, 4)),
        ]);
        assert!(!broken.is_chained());
    }
}
