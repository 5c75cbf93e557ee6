//! Event extraction: the finitely many combinatorial incidents of a front —
//! self-crossings, crossings with trace strands, cusps, teleport endpoints,
//! and passages through the closure seam t = 0. All invariants downstream
//! (homology classes, multiplicities, writhe) are computed from this data.

use crate::diagram::{MorseDiagram, Side, StrandId};
use crate::front::{
    dir_class, tele_incoming, DirClass, CuspKind, Front, FrontError, SegRef, VertexKind,
};
use crate::geom::{cross, frac_q, seg_intersections, Disp, GeomError, Q, Segment, TorusPoint};
use num::{Signed, Zero};
use std::collections::BTreeMap;

/// A transverse crossing of the front with itself. The branch of more
/// negative slope is the over-strand; the sign is that of the ordered frame
/// (over, under) against the (s, t) orientation.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SelfCrossing {
    pub at: TorusPoint,
    pub torus: usize,
    pub over: SegRef,
    pub under: SegRef,
    pub sign: i64,
}

/// A transverse crossing of the front with a trace strand; the sign is that
/// of (front direction, oriented strand direction).
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TraceCrossing {
    pub at: TorusPoint,
    pub strand: StrandId,
    pub front_seg: SegRef,
    pub sign: i64,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CuspEvent {
    pub at: TorusPoint,
    pub torus: usize,
    pub comp: usize,
    pub vertex: usize,
    pub kind: CuspKind,
}

/// One endpoint of a teleport pair. Incoming endpoints (front flows into the
/// strand) count +1, outgoing ones -1.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TeleportEndpoint {
    pub comp: usize,
    pub vertex: usize,
    pub torus: usize,
    pub link: usize,
    pub strand: StrandId,
    pub side: Side,
    pub at: TorusPoint,
    pub t: Q,
    pub incoming: bool,
}

impl TeleportEndpoint {
    pub fn sign(&self) -> i64 {
        if self.incoming {
            1
        } else {
            -1
        }
    }
}

/// An interior passage of a front segment through the closure seam t = 0.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SeamCrossing {
    pub torus: usize,
    pub s: Q,
    pub upward: bool,
    pub front_seg: SegRef,
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct EventSet {
    pub self_crossings: Vec<SelfCrossing>,
    pub trace_crossings: Vec<TraceCrossing>,
    pub cusps: Vec<CuspEvent>,
    pub teleports: Vec<TeleportEndpoint>,
    pub seam_crossings: Vec<SeamCrossing>,
}

impl EventSet {
    /// Signed count of self-crossings (writhe contribution P - N).
    pub fn self_crossing_sum(&self) -> i64 {
        self.self_crossings.iter().map(|c| c.sign).sum()
    }
}

/// Extract all events of a structurally valid front, or the list of
/// genericity violations that make the configuration unreadable.
pub(crate) fn scan_events(f: &Front, d: &MorseDiagram) -> Result<EventSet, Vec<String>> {
    let mut bad: Vec<String> = Vec::new();
    let segs = f.segments();
    let slide_ts = d.slide_ts();

    let mut ev = EventSet::default();
    scan_self_crossings(f, &segs, &mut ev, &mut bad);
    scan_trace_crossings(f, d, &segs, &mut ev, &mut bad);
    scan_vertices(f, d, &mut ev, &mut bad);
    scan_seam(&segs, &mut ev);

    for t in events_ts(&ev) {
        if t.is_zero() {
            bad.push("event on the closure seam t=0".into());
        }
        if slide_ts.contains(&t) {
            bad.push(format!("event at slide height t={t}"));
        }
    }
    check_distinct_points(&ev, d, &mut bad);

    ev.self_crossings.sort_by(|a, b| (&a.at.t, &a.at.s).cmp(&(&b.at.t, &b.at.s)));
    ev.trace_crossings
        .sort_by(|a, b| (a.strand, &a.at.t, &a.at.s).cmp(&(b.strand, &b.at.t, &b.at.s)));
    ev.cusps.sort_by_key(|c| (c.comp, c.vertex));
    ev.teleports.sort_by(|a, b| (a.link, a.incoming).cmp(&(b.link, b.incoming)));
    ev.seam_crossings.sort_by(|a, b| (a.torus, &a.s).cmp(&(b.torus, &b.s)));

    if bad.is_empty() {
        Ok(ev)
    } else {
        bad.sort();
        bad.dedup();
        Err(bad)
    }
}

/// Extract the event set of a valid front on a valid diagram.
pub fn extract_events(f: &Front, d: &MorseDiagram) -> Result<EventSet, FrontError> {
    scan_events(f, d).map_err(|msgs| FrontError::NonGenericFront(msgs.join("; ")))
}

fn scan_self_crossings(
    f: &Front,
    segs: &[(SegRef, usize, Segment)],
    ev: &mut EventSet,
    bad: &mut Vec<String>,
) {
    for (ia, (ra, ta, sa)) in segs.iter().enumerate() {
        for (rb, tb, sb) in segs.iter().skip(ia + 1) {
            if ta != tb {
                continue;
            }
            let hits = match seg_intersections(sa, sb) {
                Ok(h) => h,
                Err(GeomError::CollinearOverlap) => {
                    bad.push(format!(
                        "front segments at {} and {} overlap along a line",
                        sa.start, sb.start
                    ));
                    continue;
                }
            };
            let same_comp = ra.0 == rb.0;
            let n = f.components[ra.0].edges.len();
            let b_follows_a = same_comp && (ra.1 + 1) % n == rb.1;
            let a_follows_b = same_comp && (rb.1 + 1) % n == ra.1;
            for (pt, u, v) in hits {
                if b_follows_a && u == crate::geom::qi(1) && v.is_zero() {
                    continue; // shared vertex of consecutive edges
                }
                if a_follows_b && u.is_zero() && v == crate::geom::qi(1) {
                    continue;
                }
                if u.is_zero() || v.is_zero() || u == crate::geom::qi(1) || v == crate::geom::qi(1)
                {
                    bad.push(format!("front passes through its own vertex at {pt}"));
                    continue;
                }
                let (over, under, od, ud) = order_by_slope(ra, sa, rb, sb);
                let sg = cross(&od, &ud);
                let sign = if sg.is_positive() { 1 } else { -1 };
                ev.self_crossings.push(SelfCrossing {
                    at: pt,
                    torus: *ta,
                    over,
                    under,
                    sign,
                });
            }
        }
    }
}

/// Order two crossing branches over/under: more negative slope on top.
fn order_by_slope(
    ra: &SegRef,
    sa: &Segment,
    rb: &SegRef,
    sb: &Segment,
) -> (SegRef, SegRef, Disp, Disp) {
    // slopes are finite and negative for front segments
    let slope_a = &sa.disp.dt / &sa.disp.ds;
    let slope_b = &sb.disp.dt / &sb.disp.ds;
    if slope_a < slope_b {
        (*ra, *rb, sa.disp.clone(), sb.disp.clone())
    } else {
        (*rb, *ra, sb.disp.clone(), sa.disp.clone())
    }
}

fn scan_trace_crossings(
    f: &Front,
    d: &MorseDiagram,
    segs: &[(SegRef, usize, Segment)],
    ev: &mut EventSet,
    bad: &mut Vec<String>,
) {
    // raw hits keyed by (front edge, strand, point): a crossing exactly at a
    // collinear refinement vertex of the strand shows up once per strand
    // segment and must be deduplicated
    let mut raw: BTreeMap<(SegRef, StrandId, String), Vec<(TorusPoint, Disp, Disp)>> =
        BTreeMap::new();
    for (rf, tf, sf) in segs {
        for strand in &d.strands {
            if strand.torus != *tf {
                continue;
            }
            for sseg in strand.segments() {
                let hits = match seg_intersections(sf, sseg) {
                    Ok(h) => h,
                    Err(GeomError::CollinearOverlap) => {
                        bad.push(format!(
                            "front segment at {} runs along strand {}",
                            sf.start, strand.id
                        ));
                        continue;
                    }
                };
                for (pt, u, _v) in hits {
                    let c = &f.components[rf.0];
                    if u.is_zero() || u == crate::geom::qi(1) {
                        let vi = if u.is_zero() { rf.1 } else { c.next(rf.1) };
                        let vert = &c.vertices[vi];
                        let on_own_strand = matches!(
                            vert.kind,
                            VertexKind::TeleportEnd { strand: s, .. } if s == strand.id
                        );
                        if !on_own_strand {
                            bad.push(format!(
                                "front vertex at {} touches trace strand {}",
                                vert.at, strand.id
                            ));
                        }
                        continue;
                    }
                    raw.entry((*rf, strand.id, pt.to_string()))
                        .or_default()
                        .push((pt, sf.disp.clone(), sseg.disp.clone()));
                }
            }
        }
    }
    for ((rf, sid, _), hits) in raw {
        let (pt, fd, wd) = hits[0].clone();
        if hits.len() > 1 {
            let collinear = hits.iter().all(|(_, _, w)| cross(w, &wd).is_zero());
            if hits.len() > 2 || !collinear {
                bad.push(format!("front crosses a corner of strand {sid} at {pt}"));
                continue;
            }
        }
        let strand = d.strand(sid);
        let oriented = match strand.orientation {
            crate::diagram::Orientation::Up => wd.clone(),
            crate::diagram::Orientation::Down => wd.neg(),
        };
        let sg = cross(&fd, &oriented);
        if sg.is_zero() {
            bad.push(format!("front tangent to strand {sid} at {pt}"));
            continue;
        }
        let sign = if sg.is_positive() { 1 } else { -1 };
        ev.trace_crossings.push(TraceCrossing {
            at: pt,
            strand: sid,
            front_seg: rf,
            sign,
        });
    }
}

fn scan_vertices(f: &Front, d: &MorseDiagram, ev: &mut EventSet, bad: &mut Vec<String>) {
    for (ci, c) in f.components.iter().enumerate() {
        for (i, vert) in c.vertices.iter().enumerate() {
            match &vert.kind {
                VertexKind::Regular => {}
                VertexKind::Cusp => {
                    let kind = match c.seg_disp(c.incoming_edge(i)).and_then(dir_class) {
                        Some(DirClass::LeftUp) => CuspKind::Up,
                        Some(DirClass::RightDown) => CuspKind::Down,
                        None => {
                            bad.push(format!("cusp at {} lacks an incoming segment", vert.at));
                            continue;
                        }
                    };
                    ev.cusps.push(CuspEvent {
                        at: vert.at.clone(),
                        torus: vert.torus,
                        comp: ci,
                        vertex: i,
                        kind,
                    });
                }
                VertexKind::TeleportEnd { strand, side, link } => {
                    let Some(incoming) = tele_incoming(c, i) else {
                        bad.push(format!("teleport endpoint at {} is malformed", vert.at));
                        continue;
                    };
                    ev.teleports.push(TeleportEndpoint {
                        comp: ci,
                        vertex: i,
                        torus: vert.torus,
                        link: *link,
                        strand: *strand,
                        side: *side,
                        at: vert.at.clone(),
                        t: vert.at.t.clone(),
                        incoming,
                    });
                }
            }
            // no front vertex may sit on a strand except a teleport endpoint
            // on its own strand
            for strand in &d.strands {
                if strand.torus != vert.torus {
                    continue;
                }
                let exempt = matches!(
                    vert.kind,
                    VertexKind::TeleportEnd { strand: s, .. } if s == strand.id
                );
                if exempt {
                    continue;
                }
                if strand
                    .segments()
                    .any(|sseg| crate::diagram::param_on_segment(sseg, &vert.at).is_some())
                {
                    bad.push(format!(
                        "front vertex at {} touches trace strand {}",
                        vert.at, strand.id
                    ));
                }
            }
        }
    }
}

fn scan_seam(segs: &[(SegRef, usize, Segment)], ev: &mut EventSet) {
    for (rf, torus, seg) in segs {
        let t0 = &seg.start.t;
        let dt = &seg.disp.dt;
        if dt.is_negative() && t0 + dt < Q::zero() {
            let u = -t0 / dt;
            let s = frac_q(&seg.start.s + &u * &seg.disp.ds);
            ev.seam_crossings.push(SeamCrossing {
                torus: *torus,
                s,
                upward: false,
                front_seg: *rf,
            });
        } else if dt.is_positive() && t0 + dt > crate::geom::qi(1) {
            let u = (crate::geom::qi(1) - t0) / dt;
            let s = frac_q(&seg.start.s + &u * &seg.disp.ds);
            ev.seam_crossings.push(SeamCrossing {
                torus: *torus,
                s,
                upward: true,
                front_seg: *rf,
            });
        }
    }
}

fn events_ts(ev: &EventSet) -> Vec<Q> {
    let mut ts: Vec<Q> = Vec::new();
    ts.extend(ev.self_crossings.iter().map(|e| e.at.t.clone()));
    ts.extend(ev.trace_crossings.iter().map(|e| e.at.t.clone()));
    ts.extend(ev.cusps.iter().map(|e| e.at.t.clone()));
    ts.extend(ev.teleports.iter().map(|e| e.t.clone()));
    ts
}

fn check_distinct_points(ev: &EventSet, d: &MorseDiagram, bad: &mut Vec<String>) {
    let mut seen: BTreeMap<(usize, String), usize> = BTreeMap::new();
    let mut pts: Vec<(usize, TorusPoint)> = Vec::new();
    pts.extend(ev.self_crossings.iter().map(|e| (e.torus, e.at.clone())));
    pts.extend(
        ev.trace_crossings
            .iter()
            .map(|e| (d.strand(e.strand).torus, e.at.clone())),
    );
    pts.extend(ev.cusps.iter().map(|e| (e.torus, e.at.clone())));
    pts.extend(ev.teleports.iter().map(|e| (e.torus, e.at.clone())));
    for (torus, p) in pts {
        let key = (torus, p.to_string());
        *seen.entry(key.clone()).or_insert(0) += 1;
        if seen[&key] == 2 {
            bad.push(format!("two events coincide at {p}"));
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus;
    use crate::geom::q;

    #[test]
    fn unknot_has_two_cusps_and_nothing_else() {
        let d = corpus::disc_diagram();
        let ev = extract_events(&corpus::unknot_front(), &d).unwrap();
        assert_eq!(ev.cusps.len(), 2);
        assert_eq!(ev.cusps[0].kind, CuspKind::Up);
        assert_eq!(ev.cusps[1].kind, CuspKind::Down);
        assert!(ev.self_crossings.is_empty());
        assert!(ev.trace_crossings.is_empty());
        assert!(ev.teleports.is_empty());
        assert!(ev.seam_crossings.is_empty());
    }

    #[test]
    fn ot_disc_events() {
        let d = corpus::ot_s3_diagram();
        let ev = extract_events(&corpus::ot_disc_front(), &d).unwrap();
        assert_eq!(ev.cusps.len(), 2);
        assert_eq!(ev.teleports.len(), 4);
        assert!(ev.self_crossings.is_empty());
        assert_eq!(ev.trace_crossings.len(), 1);
        let x = &ev.trace_crossings[0];
        assert_eq!(x.at, crate::geom::reduce(q(1, 6), q(7, 12)));
        assert_eq!(x.strand, 0);
        assert_eq!(x.sign, -1);
        // teleport pair heights: 1/4 and 1/2
        let ts: Vec<Q> = ev.teleports.iter().map(|e| e.t.clone()).collect();
        assert_eq!(ts, vec![q(1, 4), q(1, 4), q(1, 2), q(1, 2)]);
    }

    #[test]
    fn ex3_events() {
        let d = corpus::punctured_torus_diagram();
        let ev = extract_events(&corpus::ex3_front(), &d).unwrap();
        assert_eq!(ev.cusps.len(), 2);
        assert_eq!(ev.teleports.len(), 6);
        // crossings: strand 2 at t=7/20 and 4/15 (both -1), strand 3 at 7/30 (+1)
        let mut got: Vec<(StrandId, Q, i64)> = ev
            .trace_crossings
            .iter()
            .map(|x| (x.strand, x.at.t.clone(), x.sign))
            .collect();
        got.sort();
        assert_eq!(
            got,
            vec![
                (2, q(4, 15), -1),
                (2, q(7, 20), -1),
                (3, q(7, 30), 1),
            ]
        );
        // the rising zigzag edge crosses both long runs, negatively each time
        assert_eq!(ev.self_crossings.len(), 2);
        let pts: Vec<TorusPoint> = ev.self_crossings.iter().map(|c| c.at.clone()).collect();
        assert_eq!(
            pts,
            vec![
                crate::geom::reduce(q(1149, 1790), q(4733, 17900)),
                crate::geom::reduce(q(3039, 4760), q(4133, 11900)),
            ]
        );
        assert!(ev.self_crossings.iter().all(|c| c.sign == -1));
        assert_eq!(ev.self_crossing_sum(), -2);
    }

    #[test]
    fn l21_front_events() {
        let d = corpus::l21_diagram();
        let ev = extract_events(&corpus::l21_front(), &d).unwrap();
        assert_eq!(ev.cusps.len(), 2);
        assert_eq!(ev.teleports.len(), 4);
        assert!(ev.self_crossings.is_empty());
        let mut got: Vec<(StrandId, Q, i64)> = ev
            .trace_crossings
            .iter()
            .map(|x| (x.strand, x.at.t.clone(), x.sign))
            .collect();
        got.sort();
        assert_eq!(got, vec![(0, q(7, 12), -1), (1, q(1, 10), -1)]);
        assert!(ev.seam_crossings.is_empty());
    }

    #[test]
    fn crossing_signs_flip_under_reversal() {
        let d = corpus::punctured_torus_diagram();
        let f = corpus::ex3_front();
        let r = Front::new(f.components.iter().map(|c| c.reversed()).collect());
        let ev = extract_events(&f, &d).unwrap();
        let evr = extract_events(&r, &d).unwrap();
        let sum = |e: &EventSet| e.trace_crossings.iter().map(|x| x.sign).sum::<i64>();
        assert_eq!(sum(&ev), -sum(&evr));
        // self-crossing signs are orientation-independent (both branches flip)
        assert_eq!(ev.self_crossing_sum(), evr.self_crossing_sum());
    }

    #[test]
    fn event_at_slide_height_is_non_generic() {
        let d = corpus::punctured_torus_diagram();
        let mut f = corpus::ex3_front();
        // stretch the last zigzag vertex up to the slide height t=1/2
        let c = &mut f.components[0];
        let i = c
            .vertices
            .iter()
            .position(|v| v.at == crate::geom::reduce(q(127, 200), q(43, 100)))
            .unwrap();
        // rebuild the two adjacent displacements around the moved vertex
        let moved = crate::geom::reduce(q(127, 200), q(1, 2));
        let prev = c.prev(i);
        let before = c.vertices[prev].at.clone();
        let after = c.vertices[c.next(i)].at.clone();
        c.vertices[i].at = moved.clone();
        c.edges[prev] = crate::front::FrontEdge::Seg(crate::geom::Disp::new(
            &moved.s - &before.s,
            &moved.t - &before.t,
        ));
        c.edges[i] = crate::front::FrontEdge::Seg(crate::geom::Disp::new(
            &after.s - &moved.s,
            &after.t - &moved.t,
        ));
        let rep = crate::front::validate_front(&f, &d);
        assert!(!rep.is_valid());
        assert!(rep.violations.iter().any(|m| m.contains("slide height")));
    }
}
