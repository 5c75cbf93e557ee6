//! Morse diagrams: decorated square tori carrying paired, t-monotone trace
//! strands and handle-slide events, together with the validity checker, the
//! slice-surgery count, page topology, and the interval decomposition that
//! downstream labeling and multiplicity passes consume.
//!
//! Each of the `n` tori is the cut square `[0,1)²` with the cut along `s=0`;
//! the left copy of the cut edge is oriented up, the right copy down. Trace
//! strands come in pairs (the two boundary traces of one handle co-core);
//! every strand runs monotonically upward in `t` and closes across `t=1 ~ 0`
//! onto a declared successor strand.

use crate::geom::{frac_q, q, qi, GeomError, PLPath, Q, Segment, TorusPoint};
use num::Zero;
use std::collections::{BTreeMap, BTreeSet};
use thiserror::Error;

pub type StrandId = usize;
pub type PairId = usize;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Orientation {
    Up,
    Down,
}

impl Orientation {
    pub fn flipped(self) -> Orientation {
        match self {
            Orientation::Up => Orientation::Down,
            Orientation::Down => Orientation::Up,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Side {
    Left,
    Right,
}

impl Side {
    pub fn opposite(self) -> Side {
        match self {
            Side::Left => Side::Right,
            Side::Right => Side::Left,
        }
    }
}

impl std::fmt::Display for Side {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Side::Left => "left",
            Side::Right => "right",
        })
    }
}

/// One trace strand: a chain of t-monotone arcs covering `t ∈ [0,1]`, broken
/// only where this strand is the jumping half of a handle slide.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TraceStrand {
    pub id: StrandId,
    pub torus: usize,
    pub orientation: Orientation,
    pub arcs: Vec<PLPath>,
    pub pair: PairId,
    /// Strand whose bottom point this strand's top point lands on across t=1~0.
    pub close: StrandId,
}

impl TraceStrand {
    pub fn segments(&self) -> impl Iterator<Item = &Segment> {
        self.arcs.iter().flat_map(|a| a.segs.iter())
    }

    /// Heights at which this strand's arcs begin/end in the interior (its own
    /// slide jumps), in increasing order.
    pub fn jump_ts(&self) -> Vec<Q> {
        self.arcs[..self.arcs.len().saturating_sub(1)]
            .iter()
            .map(|a| {
                let last = a.segs.last().expect("arcs are non-empty");
                &last.start.t + &last.disp.dt
            })
            .collect()
    }

    /// The `s`-coordinate where the strand crosses height `t`, unless `t`
    /// is one of its arc boundaries (where the strand jumps or terminates).
    pub fn slice_s(&self, t: &Q) -> Option<Q> {
        if t <= &qi(0) || t >= &qi(1) {
            return None;
        }
        for arc in &self.arcs {
            for seg in &arc.segs {
                let t0 = &seg.start.t;
                let t1 = t0 + &seg.disp.dt;
                if t >= t0 && *t < t1 {
                    let u = (t - t0) / &seg.disp.dt;
                    return Some(frac_q(&seg.start.s + u * &seg.disp.ds));
                }
            }
        }
        None
    }

    /// The segment through height `t` approached from below (`t` in the
    /// segment's half-open span `(t0, t1]`).
    pub fn segment_below(&self, t: &Q) -> Option<&Segment> {
        self.segments().find(|seg| {
            let t1 = &seg.start.t + &seg.disp.dt;
            *t > seg.start.t && *t <= t1
        })
    }

    /// The segment through height `t` approached from above (span `[t0, t1)`).
    pub fn segment_above(&self, t: &Q) -> Option<&Segment> {
        self.segments()
            .find(|seg| *t >= seg.start.t && *t < &seg.start.t + &seg.disp.dt)
    }

    pub fn bottom(&self) -> &TorusPoint {
        &self.arcs[0].segs[0].start
    }

    /// Lifted top `s` (the bottom `s` of the closure successor, mod 1).
    pub fn top_s(&self) -> Q {
        let last = self.arcs.last().unwrap().segs.last().unwrap();
        frac_q(&last.start.s + &last.disp.ds)
    }
}

/// A handle slide at height `t`: one strand of the moving pair ends its arc
/// at the arrival trivalent point `p1` on a stationary strand, and restarts
/// at the departure point `p2` on the other stationary strand, leaving from
/// the side opposite `below_side`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SlideEvent {
    pub t: Q,
    pub moving: PairId,
    pub stationary: PairId,
    pub below_side: Side,
    pub p1: TorusPoint,
    pub p2: TorusPoint,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct MorseDiagram {
    pub n_tori: usize,
    pub strands: Vec<TraceStrand>,
    pub slides: Vec<SlideEvent>,
}

#[derive(Error, Debug, Clone, PartialEq)]
pub enum DiagramError {
    #[error("slice at t={0} meets an event; pick a generic height")]
    NonGenericSlice(Q),
    #[error("page genus (1+k-n)/2 is not a non-negative integer for k={k}, n={n}")]
    NonIntegralGenus { k: usize, n: usize },
}

/// Outcome of a validity check; violations are data, not errors.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct ValidityReport {
    pub violations: Vec<String>,
}

impl ValidityReport {
    pub fn is_valid(&self) -> bool {
        self.violations.is_empty()
    }
}

impl std::fmt::Display for ValidityReport {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        if self.is_valid() {
            writeln!(f, "valid")
        } else {
            for v in &self.violations {
                writeln!(f, "violation: {v}")?;
            }
            Ok(())
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct PageTopology {
    pub k: usize,
    pub n: usize,
    pub euler: i64,
    pub genus: usize,
    pub boundary_components: usize,
}

/// A transverse crossing of a strand through the cut line `s=0`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct EdgeEvent {
    pub torus: usize,
    pub t: Q,
    pub strand: StrandId,
    /// True when the strand crosses moving in the −s direction (onto the
    /// up-oriented left copy of the edge); false for +s (right copy, down).
    pub leftward: bool,
}

/// Who owns a trace interval: a strand, or one copy of a torus's cut edge.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub enum IntervalOwner {
    Strand(StrandId),
    Edge { torus: usize, side: Side },
}

/// A maximal run of a strand or edge copy between consecutive events.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TraceInterval {
    pub owner: IntervalOwner,
    pub lo: Q,
    pub hi: Q,
}

impl MorseDiagram {
    pub fn strand(&self, id: StrandId) -> &TraceStrand {
        &self.strands[id]
    }

    /// Number of strand pairs (handles).
    pub fn k(&self) -> usize {
        self.pair_strands().len()
    }

    /// Pair id → the strand ids sharing it (two of them in a valid diagram).
    pub fn pair_strands(&self) -> BTreeMap<PairId, Vec<StrandId>> {
        let mut m: BTreeMap<PairId, Vec<StrandId>> = BTreeMap::new();
        for s in &self.strands {
            m.entry(s.pair).or_default().push(s.id);
        }
        m
    }

    /// The other strand of `id`'s pair.
    pub fn partner(&self, id: StrandId) -> StrandId {
        let pair = self.strands[id].pair;
        self.strands
            .iter()
            .find(|s| s.pair == pair && s.id != id)
            .map(|s| s.id)
            .expect("valid diagrams pair every strand")
    }

    /// The strand of the moving pair that jumps at this slide (the one with
    /// an arc boundary at the slide height).
    pub fn jumper_of(&self, e: &SlideEvent) -> Option<StrandId> {
        let mut found = None;
        for s in self.strands.iter().filter(|s| s.pair == e.moving) {
            if s.jump_ts().contains(&e.t) {
                if found.is_some() {
                    return None; // both halves jumping is malformed
                }
                found = Some(s.id);
            }
        }
        found
    }

    /// All heights at which anything structural happens (slides); fronts and
    /// callers picking generic slices must avoid these.
    pub fn slide_ts(&self) -> Vec<Q> {
        self.slides.iter().map(|e| e.t.clone()).collect()
    }

    /// The two stationary strands a slide's trivalent points sit on: the
    /// arrival host through `p1` and the departure host through `p2`.
    pub fn slide_hosts(&self, e: &SlideEvent) -> Option<(StrandId, StrandId)> {
        let of = |p: &TorusPoint| {
            self.strands
                .iter()
                .filter(|s| s.pair == e.stationary)
                .find(|s| strand_passes_through(self, s.id, p))
                .map(|s| s.id)
        };
        Some((of(&e.p1)?, of(&e.p2)?))
    }

    /// All transverse crossings of strands through `s=0`, sorted by
    /// `(torus, t, strand)`.
    pub fn edge_events(&self) -> Vec<EdgeEvent> {
        let mut out = Vec::new();
        for s in &self.strands {
            for seg in s.segments() {
                if let Some((t, leftward)) = edge_crossing(seg) {
                    out.push(EdgeEvent {
                        torus: s.torus,
                        t,
                        strand: s.id,
                        leftward,
                    });
                }
            }
        }
        out.sort_by(|a, b| (a.torus, &a.t, a.strand).cmp(&(b.torus, &b.t, b.strand)));
        out
    }
}

/// Where (if anywhere) a segment crosses the cut line `s=0`, strictly in its
/// interior: returns the height and whether the crossing moves leftward.
pub fn edge_crossing(seg: &Segment) -> Option<(Q, bool)> {
    if seg.disp.ds.is_zero() {
        return None;
    }
    use num::Signed;
    let leftward = seg.disp.ds.is_negative();
    // lifted s runs from s0 ∈ [0,1) by ds ∈ (-1,1): a leftward segment can
    // only cross lifted s = 0, a rightward one only lifted s = 1
    let target = if leftward { qi(0) } else { qi(1) };
    let u = (&target - &seg.start.s) / &seg.disp.ds;
    if u > qi(0) && u < qi(1) {
        Some((&seg.start.t + u * &seg.disp.dt, leftward))
    } else {
        None
    }
}

/// Check every validity clause; returns the full list of violations.
pub fn validate_diagram(d: &MorseDiagram) -> ValidityReport {
    let mut v = Vec::new();
    check_structure(d, &mut v);
    if !v.is_empty() {
        // later clauses assume basic structure; report what we have
        return ValidityReport { violations: v };
    }
    check_monotone_coverage(d, &mut v);
    check_slides(d, &mut v);
    check_disjointness(d, &mut v);
    check_closure(d, &mut v);
    check_genericity(d, &mut v);
    if v.is_empty() {
        check_surgery(d, &mut v);
    }
    ValidityReport { violations: v }
}

fn check_structure(d: &MorseDiagram, v: &mut Vec<String>) {
    if d.n_tori == 0 {
        v.push("structure: diagram must have at least one torus".into());
        return;
    }
    for (i, s) in d.strands.iter().enumerate() {
        if s.id != i {
            v.push(format!("structure: strand at position {i} carries id {}", s.id));
        }
        if s.torus >= d.n_tori {
            v.push(format!("structure: strand {} names torus {} of {}", s.id, s.torus, d.n_tori));
        }
        if s.arcs.is_empty() || s.arcs.iter().any(|a| !a.is_chained()) {
            v.push(format!("structure: strand {} has an empty or unchained arc", s.id));
        }
        if s.close >= d.strands.len() {
            v.push(format!("structure: strand {} closes onto unknown strand {}", s.id, s.close));
        }
    }
    if !v.is_empty() {
        return;
    }
    let pairs = d.pair_strands();
    for (pid, members) in &pairs {
        if members.len() != 2 {
            v.push(format!("pairing: pair {pid} has {} strands, need exactly 2", members.len()));
        } else {
            let (a, b) = (&d.strands[members[0]], &d.strands[members[1]]);
            if a.orientation == b.orientation {
                v.push(format!(
                    "pairing: pair {pid} must have one up and one down strand"
                ));
            }
        }
    }
    for (want, &pid) in pairs.keys().enumerate() {
        if pid != want {
            v.push(format!("pairing: pair ids must be 0..k-1, found {pid}"));
        }
    }
    for e in &d.slides {
        if !pairs.contains_key(&e.moving) || !pairs.contains_key(&e.stationary) {
            v.push(format!("slide: slide at t={} names an unknown pair", e.t));
        } else if e.moving == e.stationary {
            v.push(format!("slide: slide at t={} moves a pair over itself", e.t));
        }
    }
}

fn check_monotone_coverage(d: &MorseDiagram, v: &mut Vec<String>) {
    let slide_ts: BTreeSet<&Q> = d.slides.iter().map(|e| &e.t).collect();
    for s in &d.strands {
        for seg in s.segments() {
            if !seg.well_formed() {
                v.push(format!("monotonicity: strand {} has a degenerate segment at {}", s.id, seg.start));
            }
            if !(seg.disp.dt > qi(0)) {
                v.push(format!(
                    "monotonicity: strand {} is not strictly increasing in t at {}",
                    s.id, seg.start
                ));
            }
        }
        if s.bottom().t != qi(0) {
            v.push(format!("monotonicity: strand {} does not start at t=0", s.id));
        }
        let last = s.arcs.last().unwrap().segs.last().unwrap();
        if &last.start.t + &last.disp.dt != qi(1) {
            v.push(format!("monotonicity: strand {} does not end at t=1", s.id));
        }
        for (a, b) in s.arcs.iter().zip(s.arcs.iter().skip(1)) {
            let end = a.segs.last().unwrap();
            let end_t = &end.start.t + &end.disp.dt;
            if end_t != b.segs[0].start.t {
                v.push(format!(
                    "monotonicity: strand {} arcs do not meet at a common height near t={end_t}",
                    s.id
                ));
            } else if !slide_ts.contains(&end_t) {
                v.push(format!(
                    "monotonicity: strand {} jumps at t={end_t}, which is not a slide height",
                    s.id
                ));
            }
        }
    }
}

fn check_slides(d: &MorseDiagram, v: &mut Vec<String>) {
    for w in d.slides.windows(2) {
        if w[0].t >= w[1].t {
            v.push(format!(
                "slide: slides not sorted with distinct heights near t={}",
                w[1].t
            ));
        }
    }
    for e in &d.slides {
        if e.p1.t != e.t || e.p2.t != e.t {
            v.push(format!("slide: trivalent points of slide at t={} are not at its height", e.t));
            continue;
        }
        if e.p1 == e.p2 {
            v.push(format!("slide: slide at t={} has coincident trivalent points", e.t));
            continue;
        }
        let Some(jumper) = d.jumper_of(e) else {
            v.push(format!(
                "slide: slide at t={} has no unique jumping strand in pair {}",
                e.t, e.moving
            ));
            continue;
        };
        let j = &d.strands[jumper];
        // the jumper's arc boundary must land exactly on p1 / restart on p2
        let idx = j.jump_ts().iter().position(|t| *t == e.t).unwrap();
        let below_end = j.arcs[idx].end();
        let above_start = j.arcs[idx + 1].segs[0].start.clone();
        if below_end != e.p1 {
            v.push(format!(
                "slide: jumping strand {} ends at {} instead of the arrival point {}",
                jumper, below_end, e.p1
            ));
        }
        if above_start != e.p2 {
            v.push(format!(
                "slide: jumping strand {} restarts at {} instead of the departure point {}",
                jumper, above_start, e.p2
            ));
        }
        // stationary strands: p1 on one, p2 on the other, same torus, no jump here
        let stat: Vec<StrandId> = d
            .strands
            .iter()
            .filter(|s| s.pair == e.stationary)
            .map(|s| s.id)
            .collect();
        let host1 = stat.iter().copied().find(|&sid| strand_passes_through(d, sid, &e.p1));
        let host2 = stat.iter().copied().find(|&sid| strand_passes_through(d, sid, &e.p2));
        let (Some(y1), Some(y2)) = (host1, host2) else {
            v.push(format!(
                "slide: trivalent points of slide at t={} do not lie on the stationary pair {}",
                e.t, e.stationary
            ));
            continue;
        };
        if y1 == y2 {
            v.push(format!(
                "slide: both trivalent points of slide at t={} lie on strand {}",
                e.t, y1
            ));
            continue;
        }
        for &sid in &[y1, y2] {
            if d.strands[sid].torus != j.torus {
                v.push(format!(
                    "slide: stationary strand {} is not on the jumper's torus",
                    sid
                ));
            }
            if d.strands[sid].jump_ts().contains(&e.t) {
                v.push(format!(
                    "slide: stationary strand {} has its own jump at t={}",
                    sid, e.t
                ));
            }
        }
        // every other strand passes through the slide height undisturbed
        for s in &d.strands {
            if s.id != jumper && s.jump_ts().contains(&e.t) {
                v.push(format!(
                    "slide: strand {} also jumps at t={}, which must be unique to the slide's mover",
                    s.id, e.t
                ));
            }
        }
        // side convention: approach from below_side, depart from the opposite
        let (Some(js_in), Some(y1_seg)) = (j.segment_below(&e.t), d.strands[y1].segment_below(&e.t))
        else {
            continue;
        };
        match approach_side(js_in, y1_seg) {
            None => v.push(format!(
                "slide: jumper is tangent to the stationary strand below t={}",
                e.t
            )),
            Some(side) if side != e.below_side => v.push(format!(
                "slide: jumper approaches from the {} at t={}, declared {}",
                side, e.t, e.below_side
            )),
            _ => {}
        }
        let (Some(js_out), Some(y2_seg)) = (j.segment_above(&e.t), d.strands[y2].segment_above(&e.t))
        else {
            continue;
        };
        match departure_side(js_out, y2_seg) {
            None => v.push(format!(
                "slide: jumper leaves tangent to the stationary strand above t={}",
                e.t
            )),
            Some(side) if side != e.below_side.opposite() => v.push(format!(
                "slide: jumper departs on the {} at t={}, must leave opposite the approach",
                side, e.t
            )),
            _ => {}
        }
    }
}

pub fn strand_passes_through(d: &MorseDiagram, sid: StrandId, p: &TorusPoint) -> bool {
    d.strands[sid].segments().any(|seg| {
        let u = param_on_segment(seg, p);
        matches!(u, Some(u) if u > qi(0) && u < qi(1))
    })
}

/// Parameter of `p` on `seg` when `p` lies on it (checking both coordinates
/// exactly, with wraparound).
pub fn param_on_segment(seg: &Segment, p: &TorusPoint) -> Option<Q> {
    let u = if !seg.disp.dt.is_zero() {
        // strand and front segments never have dt = 0 alongside ds = 0
        (&p.t - &seg.start.t + integer_shift(&seg.start.t, &seg.disp.dt, &p.t)?) / &seg.disp.dt
    } else {
        (&p.s - &seg.start.s + integer_shift(&seg.start.s, &seg.disp.ds, &p.s)?) / &seg.disp.ds
    };
    if u < qi(0) || u > qi(1) {
        return None;
    }
    (seg.point_at(&u) == *p).then_some(u)
}

/// The integer to add to `target` so it falls in the lifted span from `x0`
/// over `dx`; None if no shift works.
fn integer_shift(x0: &Q, dx: &Q, target: &Q) -> Option<Q> {
    for k in -1..=1i64 {
        let shifted = target + qi(k);
        let u = (&shifted - x0) / dx;
        if u >= qi(0) && u <= qi(1) {
            return Some(qi(k));
        }
    }
    None
}

/// Side from which `mover` approaches `stationary` as t rises to their common
/// endpoint height: compares horizontal speeds `ds/dt`; None when tangent.
fn approach_side(mover: &Segment, stationary: &Segment) -> Option<Side> {
    let rm = &mover.disp.ds / &mover.disp.dt;
    let rs = &stationary.disp.ds / &stationary.disp.dt;
    // just below the meeting height, mover sits at -h*rm relative to its end,
    // the stationary strand at -h*rs; mover is left iff rs < rm
    match rs.cmp(&rm) {
        std::cmp::Ordering::Less => Some(Side::Left),
        std::cmp::Ordering::Greater => Some(Side::Right),
        std::cmp::Ordering::Equal => None,
    }
}

/// Side on which `mover` departs from `stationary` just above their common
/// start height.
fn departure_side(mover: &Segment, stationary: &Segment) -> Option<Side> {
    let rm = &mover.disp.ds / &mover.disp.dt;
    let rs = &stationary.disp.ds / &stationary.disp.dt;
    match rm.cmp(&rs) {
        std::cmp::Ordering::Less => Some(Side::Left),
        std::cmp::Ordering::Greater => Some(Side::Right),
        std::cmp::Ordering::Equal => None,
    }
}

fn check_disjointness(d: &MorseDiagram, v: &mut Vec<String>) {
    // allowed meeting points: each slide's trivalent points between the
    // jumper and its hosts, and closure touch points at t=0
    let mut allowed: BTreeSet<(String, StrandId, StrandId)> = BTreeSet::new();
    for e in &d.slides {
        if let Some(jumper) = d.jumper_of(e) {
            for (p, host) in [(&e.p1, host_of(d, e, &e.p1)), (&e.p2, host_of(d, e, &e.p2))] {
                if let Some(h) = host {
                    let (a, b) = ordered(jumper, h);
                    allowed.insert((p.to_string(), a, b));
                }
            }
        }
    }
    for s in &d.strands {
        let succ = s.close;
        if succ != s.id && succ < d.strands.len() {
            let p = d.strands[succ].bottom();
            let (a, b) = ordered(s.id, succ);
            allowed.insert((p.to_string(), a, b));
        }
    }
    for a in &d.strands {
        for b in &d.strands {
            if a.id >= b.id || a.torus != b.torus {
                continue;
            }
            for sa in a.segments() {
                for sb in b.segments() {
                    match crate::geom::seg_intersections(sa, sb) {
                        Err(GeomError::CollinearOverlap) => v.push(format!(
                            "disjointness: strands {} and {} overlap along a line",
                            a.id, b.id
                        )),
                        Ok(hits) => {
                            for (p, _, _) in hits {
                                let key = (p.to_string(), a.id, b.id);
                                if !allowed.contains(&key) {
                                    v.push(format!(
                                        "disjointness: strands {} and {} meet at {} away from any trivalent point",
                                        a.id, b.id, p
                                    ));
                                }
                            }
                        }
                    }
                }
            }
        }
    }
}

fn host_of(d: &MorseDiagram, e: &SlideEvent, p: &TorusPoint) -> Option<StrandId> {
    d.strands
        .iter()
        .filter(|s| s.pair == e.stationary)
        .find(|s| strand_passes_through(d, s.id, p))
        .map(|s| s.id)
}

fn ordered(a: StrandId, b: StrandId) -> (StrandId, StrandId) {
    if a <= b {
        (a, b)
    } else {
        (b, a)
    }
}

fn check_closure(d: &MorseDiagram, v: &mut Vec<String>) {
    let mut hit: BTreeMap<StrandId, StrandId> = BTreeMap::new();
    for s in &d.strands {
        let succ = &d.strands[s.close];
        if succ.torus != s.torus {
            v.push(format!(
                "closure: strand {} closes onto strand {} on a different torus",
                s.id, succ.id
            ));
            continue;
        }
        if succ.bottom().s != s.top_s() {
            v.push(format!(
                "closure: strand {} tops out at s={} but strand {} starts at s={}",
                s.id,
                s.top_s(),
                succ.id,
                succ.bottom().s
            ));
        }
        if let Some(prev) = hit.insert(s.close, s.id) {
            v.push(format!(
                "closure: strands {} and {} both close onto strand {}",
                prev, s.id, s.close
            ));
        }
        if succ.orientation != s.orientation {
            v.push(format!(
                "closure: strand {} changes orientation closing onto {}",
                s.id, succ.id
            ));
        }
    }
    // pairing preserved: partners must close onto partners
    let pairs = d.pair_strands();
    for members in pairs.values() {
        if members.len() == 2 {
            let (a, b) = (members[0], members[1]);
            if d.strands[d.strands[a].close].pair != d.strands[d.strands[b].close].pair {
                v.push(format!(
                    "closure: pair ({}, {}) does not close onto a single pair",
                    a, b
                ));
            }
        }
    }
}

fn check_genericity(d: &MorseDiagram, v: &mut Vec<String>) {
    let slide_ts: BTreeSet<&Q> = d.slides.iter().map(|e| &e.t).collect();
    for s in &d.strands {
        for arc in &s.arcs {
            for seg in &arc.segs {
                if seg.start.s.is_zero() {
                    v.push(format!(
                        "genericity: strand {} has a vertex on the cut line s=0 at {}",
                        s.id, seg.start
                    ));
                }
            }
        }
    }
    for ev in d.edge_events() {
        if slide_ts.contains(&ev.t) {
            v.push(format!(
                "genericity: strand {} crosses the cut line exactly at slide height t={}",
                ev.strand, ev.t
            ));
        }
    }
}

fn check_surgery(d: &MorseDiagram, v: &mut Vec<String>) {
    match generic_t(d).and_then(|t| surgery_components(d, &t)) {
        Ok(1) => {}
        Ok(m) => v.push(format!(
            "surgery: slice surgery yields {m} circles, the binding requires exactly 1"
        )),
        Err(e) => v.push(format!("surgery: {e}")),
    }
}

/// A height avoiding every slide, suitable for slicing.
pub fn generic_t(d: &MorseDiagram) -> Result<Q, DiagramError> {
    let mut cuts: Vec<Q> = vec![qi(0), qi(1)];
    cuts.extend(d.slide_ts());
    cuts.sort();
    cuts.dedup();
    for w in cuts.windows(2) {
        let mid = (&w[0] + &w[1]) / qi(2);
        if surgery_components(d, &mid).is_ok() {
            return Ok(mid);
        }
    }
    Err(DiagramError::NonGenericSlice(q(1, 2)))
}

/// Number of circles after abstract surgery on the slice at height `t`:
/// travel each torus circle in +s, and at each strand point jump to the
/// paired strand's point and continue in +s; count orbits (plus one per
/// strand-free torus).
pub fn surgery_components(d: &MorseDiagram, t: &Q) -> Result<usize, DiagramError> {
    if d.slide_ts().contains(t) || *t <= qi(0) || *t >= qi(1) {
        return Err(DiagramError::NonGenericSlice(t.clone()));
    }
    // slice points per torus, sorted by s
    let mut per_torus: Vec<Vec<(Q, StrandId)>> = vec![Vec::new(); d.n_tori];
    for s in &d.strands {
        let Some(sv) = s.slice_s(t) else {
            return Err(DiagramError::NonGenericSlice(t.clone()));
        };
        per_torus[s.torus].push((sv, s.id));
    }
    for pts in &mut per_torus {
        pts.sort();
        for w in pts.windows(2) {
            if w[0].0 == w[1].0 {
                return Err(DiagramError::NonGenericSlice(t.clone()));
            }
        }
    }
    // position of each strand's point within its torus
    let mut pos: BTreeMap<StrandId, (usize, usize)> = BTreeMap::new();
    for (tor, pts) in per_torus.iter().enumerate() {
        for (i, (_, sid)) in pts.iter().enumerate() {
            pos.insert(*sid, (tor, i));
        }
    }
    let mut circles = per_torus.iter().filter(|p| p.is_empty()).count();
    // arcs (torus, i) run from point i to point i+1 (cyclically, +s);
    // successor of an arc jumps through the pairing at its endpoint
    let mut seen: BTreeSet<(usize, usize)> = BTreeSet::new();
    for (tor, pts) in per_torus.iter().enumerate() {
        for i in 0..pts.len() {
            if seen.contains(&(tor, i)) {
                continue;
            }
            circles += 1;
            let (mut ct, mut ci) = (tor, i);
            loop {
                if !seen.insert((ct, ci)) {
                    break;
                }
                let endpoint = (ci + 1) % per_torus[ct].len();
                let arrived = per_torus[ct][endpoint].1;
                let partner = d.partner(arrived);
                (ct, ci) = pos[&partner];
            }
        }
    }
    Ok(circles)
}

/// Reconstruct the open-book page: a disc with `k` one-handles and `n`
/// boundary components.
pub fn page_topology(d: &MorseDiagram) -> Result<PageTopology, DiagramError> {
    let k = d.k();
    let n = d.n_tori;
    let euler = 1i64 - k as i64;
    let num = 1 + k as i64 - n as i64;
    if num < 0 || num % 2 != 0 {
        return Err(DiagramError::NonIntegralGenus { k, n });
    }
    Ok(PageTopology {
        k,
        n,
        euler,
        genus: (num / 2) as usize,
        boundary_components: n,
    })
}

/// Split every strand and every edge copy into maximal intervals bounded by
/// slide trivalent points and edge events, sorted by owner then height.
pub fn intervals(d: &MorseDiagram) -> Vec<TraceInterval> {
    let edge_evs = d.edge_events();
    let mut out = Vec::new();
    for s in &d.strands {
        let mut cuts: Vec<Q> = vec![qi(0), qi(1)];
        cuts.extend(s.jump_ts());
        for e in &d.slides {
            if s.pair == e.stationary
                && (strand_passes_through(d, s.id, &e.p1)
                    || strand_passes_through(d, s.id, &e.p2))
            {
                cuts.push(e.t.clone());
            }
        }
        for ev in edge_evs.iter().filter(|ev| ev.strand == s.id) {
            cuts.push(ev.t.clone());
        }
        push_intervals(IntervalOwner::Strand(s.id), cuts, &mut out);
    }
    for torus in 0..d.n_tori {
        for side in [Side::Left, Side::Right] {
            let mut cuts: Vec<Q> = vec![qi(0), qi(1)];
            for ev in edge_evs.iter().filter(|ev| ev.torus == torus) {
                if (side == Side::Left) == ev.leftward {
                    cuts.push(ev.t.clone());
                }
            }
            push_intervals(IntervalOwner::Edge { torus, side }, cuts, &mut out);
        }
    }
    out
}

fn push_intervals(owner: IntervalOwner, mut cuts: Vec<Q>, out: &mut Vec<TraceInterval>) {
    cuts.sort();
    cuts.dedup();
    for w in cuts.windows(2) {
        out.push(TraceInterval {
            owner,
            lo: w[0].clone(),
            hi: w[1].clone(),
        });
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus;

    #[test]
    fn disc_page_is_valid() {
        let d = corpus::disc_diagram();
        assert!(validate_diagram(&d).is_valid());
        assert_eq!(surgery_components(&d, &q(1, 3)).unwrap(), 1);
        let top = page_topology(&d).unwrap();
        assert_eq!((top.k, top.n, top.euler, top.genus), (0, 1, 1, 0));
    }

    #[test]
    fn lens_space_diagram_is_valid() {
        let d = corpus::l21_diagram();
        let rep = validate_diagram(&d);
        assert!(rep.is_valid(), "{rep}");
        assert_eq!(surgery_components(&d, &q(1, 4)).unwrap(), 1);
        let top = page_topology(&d).unwrap();
        assert_eq!((top.genus, top.boundary_components), (0, 2));
        assert_eq!(d.edge_events().len(), 2);
    }

    #[test]
    fn two_bare_tori_fail_surgery() {
        let d = MorseDiagram {
            n_tori: 2,
            strands: vec![],
            slides: vec![],
        };
        let rep = validate_diagram(&d);
        assert!(!rep.is_valid());
        assert!(rep.violations.iter().any(|m| m.starts_with("surgery:")));
        assert_eq!(surgery_components(&d, &q(1, 2)).unwrap(), 2);
    }

    #[test]
    fn punctured_torus_diagram_is_valid() {
        let d = corpus::punctured_torus_diagram();
        let rep = validate_diagram(&d);
        assert!(rep.is_valid(), "{rep}");
        let top = page_topology(&d).unwrap();
        assert_eq!((top.genus, top.boundary_components), (1, 1));
        // a slice through the slide height is rejected
        assert_eq!(
            surgery_components(&d, &q(1, 2)),
            Err(DiagramError::NonGenericSlice(q(1, 2)))
        );
        for t in [q(1, 4), q(3, 4), q(9, 20), q(13, 20), q(99, 100)] {
            assert_eq!(surgery_components(&d, &t).unwrap(), 1, "at t={t}");
        }
    }

    #[test]
    fn overtwisted_s3_diagram_is_valid() {
        let d = corpus::ot_s3_diagram();
        let rep = validate_diagram(&d);
        assert!(rep.is_valid(), "{rep}");
        let top = page_topology(&d).unwrap();
        assert_eq!((top.genus, top.boundary_components), (0, 2));
    }

    #[test]
    fn orientation_conflict_in_a_pair_is_reported() {
        let mut d = corpus::l21_diagram();
        d.strands[1].orientation = Orientation::Up;
        let rep = validate_diagram(&d);
        assert!(rep
            .violations
            .iter()
            .any(|m| m.contains("one up and one down")));
    }

    #[test]
    fn broken_closure_is_reported() {
        let mut d = corpus::punctured_torus_diagram();
        d.strands[0].close = 1; // bottom s mismatch and non-bijective
        let rep = validate_diagram(&d);
        assert!(rep.violations.iter().any(|m| m.starts_with("closure:")));
    }

    #[test]
    fn slide_side_declaration_is_checked() {
        let mut d = corpus::punctured_torus_diagram();
        d.slides[0].below_side = Side::Right;
        let rep = validate_diagram(&d);
        assert!(rep
            .violations
            .iter()
            .any(|m| m.contains("approaches from the left")));
    }

    #[test]
    fn interval_counts() {
        let d = corpus::punctured_torus_diagram();
        let ivs = intervals(&d);
        let count = |sid: StrandId| {
            ivs.iter()
                .filter(|iv| iv.owner == IntervalOwner::Strand(sid))
                .count()
        };
        // jumper: two arcs; hosts: split at the slide; bystander: whole
        assert_eq!(count(2), 2);
        assert_eq!(count(1), 2);
        assert_eq!(count(3), 2);
        assert_eq!(count(0), 1);
        let d = corpus::l21_diagram();
        let ivs = intervals(&d);
        // each strand is split once by its edge event
        assert_eq!(
            ivs.iter()
                .filter(|iv| matches!(iv.owner, IntervalOwner::Strand(_)))
                .count(),
            4
        );
    }

    #[test]
    fn slice_independence_on_corpus_diagrams() {
        for d in [
            corpus::disc_diagram(),
            corpus::l21_diagram(),
            corpus::ot_s3_diagram(),
            corpus::punctured_torus_diagram(),
        ] {
            let mut seen = BTreeSet::new();
            for t in [q(1, 7), q(2, 7), q(3, 7), q(5, 7), q(6, 7)] {
                seen.insert(surgery_components(&d, &t).unwrap());
            }
            assert_eq!(seen.len(), 1);
        }
    }
}
