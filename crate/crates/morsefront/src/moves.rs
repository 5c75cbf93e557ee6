//! Isotopy moves on fronts, as validated local rewrites.
//!
//! Every move kind has a *matcher* (a pattern against the event structure)
//! and a *rewriter* (an exact coordinate-level reroute).  The rewriter never
//! places events by hand: it builds a candidate front, the event engine
//! recomputes all crossings, and the per-kind contract (cusp delta, crossing
//! deltas, teleport links, homology class) is then asserted.  A contract
//! failure on a freshly matched site is a bug and is surfaced loudly as
//! [`MoveError::RewriteInvalid`].
//!
//! Applying a move returns the rewritten front together with an *inverse
//! site* carrying the replaced local geometry, so a move followed by its
//! inverse restores the original front exactly, up to the collinear-merge
//! canonical form.

use crate::diagram::{MorseDiagram, Orientation, Side, StrandId};
use crate::events::{extract_events, EventSet, TeleportEndpoint};
use crate::front::{
    dir_class, validate_front, CuspKind, Front, FrontComponent, FrontEdge, FrontError,
    FrontVertex, SegRef, VertexKind,
};
use crate::geom::{frac_q, qi, reduce, seg_intersections, Disp, Q, Segment, TorusPoint};
use crate::homology::{class_of_front, H1Class};
use num::{Signed, Zero};
use std::fmt;

// ---------------------------------------------------------------------------
// kinds, directions, sites
// ---------------------------------------------------------------------------

/// The move alphabet: Legendrian Reidemeister moves (R), moves past trace
/// strands (S), the binding pass (B1), skeleton passes (K), and slide-height
/// passes (H).
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum MoveKind {
    R1a,
    R1b,
    R2a,
    R2b,
    R3,
    S1,
    S2,
    S3,
    B1,
    K1,
    K2,
    K3up,
    K3dn,
    H1,
    H2,
    H3,
}

pub const ALL_KINDS: [MoveKind; 16] = [
    MoveKind::R1a,
    MoveKind::R1b,
    MoveKind::R2a,
    MoveKind::R2b,
    MoveKind::R3,
    MoveKind::S1,
    MoveKind::S2,
    MoveKind::S3,
    MoveKind::B1,
    MoveKind::K1,
    MoveKind::K2,
    MoveKind::K3up,
    MoveKind::K3dn,
    MoveKind::H1,
    MoveKind::H2,
    MoveKind::H3,
];

impl fmt::Display for MoveKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            MoveKind::R1a => "R1a",
            MoveKind::R1b => "R1b",
            MoveKind::R2a => "R2a",
            MoveKind::R2b => "R2b",
            MoveKind::R3 => "R3",
            MoveKind::S1 => "S1",
            MoveKind::S2 => "S2",
            MoveKind::S3 => "S3",
            MoveKind::B1 => "B1",
            MoveKind::K1 => "K1",
            MoveKind::K2 => "K2",
            MoveKind::K3up => "K3up",
            MoveKind::K3dn => "K3dn",
            MoveKind::H1 => "H1",
            MoveKind::H2 => "H2",
            MoveKind::H3 => "H3",
        })
    }
}

impl std::str::FromStr for MoveKind {
    type Err = String;
    fn from_str(s: &str) -> Result<MoveKind, String> {
        ALL_KINDS
            .iter()
            .copied()
            .find(|k| k.to_string() == s)
            .ok_or_else(|| format!("unknown move kind {s:?}"))
    }
}

/// Whether the site applies the move as drawn or undoes it.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub enum MoveDir {
    Forward,
    Inverse,
}

impl MoveDir {
    pub fn sign_char(self) -> char {
        match self {
            MoveDir::Forward => '+',
            MoveDir::Inverse => '-',
        }
    }
    pub fn flipped(self) -> MoveDir {
        match self {
            MoveDir::Forward => MoveDir::Inverse,
            MoveDir::Inverse => MoveDir::Forward,
        }
    }
}

/// Reference to one matched feature, by exact position.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum EventRef {
    Cusp { at: TorusPoint, torus: usize },
    SelfCrossing { at: TorusPoint, torus: usize },
    TraceCrossing { at: TorusPoint, strand: StrandId },
    Teleport { link: usize, strand: StrandId, at: TorusPoint },
    Segment { start: TorusPoint, end: TorusPoint, torus: usize },
}

impl EventRef {
    fn sort_key(&self) -> (u8, Q, Q, usize) {
        match self {
            EventRef::Cusp { at, torus } => (0, at.t.clone(), at.s.clone(), *torus),
            EventRef::SelfCrossing { at, torus } => (1, at.t.clone(), at.s.clone(), *torus),
            EventRef::TraceCrossing { at, strand } => (2, at.t.clone(), at.s.clone(), *strand),
            EventRef::Teleport { at, strand, .. } => (3, at.t.clone(), at.s.clone(), *strand),
            EventRef::Segment { start, torus, .. } => (4, start.t.clone(), start.s.clone(), *torus),
        }
    }
}

/// Axis rectangle on one torus — the region a rewrite may touch.
/// `t_lo > t_hi` encodes the band through the page-gluing seam,
/// `[t_lo, 1] ∪ [0, t_hi]` (used by B1).
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BBox {
    pub torus: usize,
    pub s_lo: Q,
    pub s_hi: Q,
    pub t_lo: Q,
    pub t_hi: Q,
}

impl BBox {
    fn t_wraps(&self) -> bool {
        self.t_lo > self.t_hi
    }
    fn contains_t(&self, t: &Q) -> bool {
        if self.t_wraps() {
            *t >= self.t_lo || *t <= self.t_hi
        } else {
            *t >= self.t_lo && *t <= self.t_hi
        }
    }
    pub fn contains(&self, p: &TorusPoint) -> bool {
        p.s >= self.s_lo && p.s <= self.s_hi && self.contains_t(&p.t)
    }
}

/// A concrete applicable (or undoable) move instance.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct MoveSite {
    pub kind: MoveKind,
    pub dir: MoveDir,
    pub anchors: Vec<EventRef>,
    pub bbox: BBox,
    pub id: String,
    /// Exact-undo payload; present only on inverse sites built by `apply_move`.
    splice: Option<Splice>,
}

/// The rewritten front plus the site that undoes the rewrite exactly.
#[derive(Clone, Debug)]
pub struct RewriteOutcome {
    pub front: Front,
    pub inverse_site: MoveSite,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum MoveError {
    #[error("site is stale: {0}")]
    SiteStale(String),
    #[error("rewrite produced an invalid front: {0}")]
    RewriteInvalid(String),
    #[error(transparent)]
    Front(#[from] FrontError),
}

// ---------------------------------------------------------------------------
// lifted-path construction
// ---------------------------------------------------------------------------

fn frac(a: i64, b: i64) -> Q {
    Q::new(a.into(), b.into())
}

/// Builds a replacement path in lifted coordinates; vertices are reduced to
/// the torus, displacements stay exact.
struct PathBuilder {
    torus: usize,
    cur: (Q, Q),
    vs: Vec<FrontVertex>,
    es: Vec<FrontEdge>,
}

impl PathBuilder {
    fn start(torus: usize, lifted: (Q, Q)) -> PathBuilder {
        PathBuilder {
            torus,
            cur: lifted,
            vs: Vec::new(),
            es: Vec::new(),
        }
    }

    fn disp_to(&self, lifted: &(Q, Q)) -> Disp {
        Disp::new(&lifted.0 - &self.cur.0, &lifted.1 - &self.cur.1)
    }

    /// Straight edge to `lifted`, ending in a vertex of the given kind.
    fn seg_to(&mut self, lifted: (Q, Q), kind: VertexKind) {
        let d = self.disp_to(&lifted);
        self.es.push(FrontEdge::Seg(d));
        self.vs.push(FrontVertex {
            torus: self.torus,
            at: reduce(lifted.0.clone(), lifted.1.clone()),
            kind,
        });
        self.cur = lifted;
    }

    /// Jump edge to a teleport endpoint at `lifted` (possibly another torus).
    #[allow(dead_code)]
    fn jump_to(&mut self, torus: usize, lifted: (Q, Q), kind: VertexKind) {
        self.es.push(FrontEdge::Jump);
        self.vs.push(FrontVertex {
            torus,
            at: reduce(lifted.0.clone(), lifted.1.clone()),
            kind,
        });
        self.torus = torus;
        self.cur = lifted;
    }

    /// Final edge landing on the splice's `to` vertex (no vertex pushed).
    fn finish_seg(mut self, lifted_target: (Q, Q)) -> (Vec<FrontVertex>, Vec<FrontEdge>) {
        let d = self.disp_to(&lifted_target);
        self.es.push(FrontEdge::Seg(d));
        (self.vs, self.es)
    }
}

/// Replace the open path strictly between vertices `i_from` and `i_to`
/// (walking forward) of a closed component with the given interior.
/// `es.len()` must equal `vs.len() + 1`.  Returns the new component and the
/// removed interior (for the undo splice).
fn splice_path(
    c: &FrontComponent,
    i_from: usize,
    i_to: usize,
    vs: Vec<FrontVertex>,
    es: Vec<FrontEdge>,
) -> (FrontComponent, Vec<FrontVertex>, Vec<FrontEdge>) {
    assert_eq!(es.len(), vs.len() + 1, "splice path shape");
    assert!(i_from != i_to, "splice needs two distinct anchor vertices");
    let mut kept_vs = Vec::new();
    let mut kept_es = Vec::new();
    let mut i = i_to;
    loop {
        kept_vs.push(c.vertices[i].clone());
        if i == i_from {
            break;
        }
        kept_es.push(c.edges[i].clone());
        i = c.next(i);
    }
    let mut old_vs = Vec::new();
    let mut old_es = vec![c.edges[i_from].clone()];
    let mut j = c.next(i_from);
    while j != i_to {
        old_vs.push(c.vertices[j].clone());
        old_es.push(c.edges[j].clone());
        j = c.next(j);
    }
    let mut vertices = kept_vs;
    vertices.extend(vs);
    let mut edges = kept_es;
    edges.extend(es);
    assert_eq!(vertices.len(), edges.len());
    (
        FrontComponent {
            closed: true,
            vertices,
            edges,
        },
        old_vs,
        old_es,
    )
}

/// One exact path replacement: the interior between the (unique) vertices at
/// `from` and `to` is replaced by the stored path.
#[derive(Clone, Debug, PartialEq, Eq)]
struct SubSplice {
    torus: usize,
    from: TorusPoint,
    to: TorusPoint,
    vs: Vec<FrontVertex>,
    es: Vec<FrontEdge>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
struct Splice {
    parts: Vec<SubSplice>,
}

fn locate_vertex(f: &Front, torus: usize, at: &TorusPoint) -> Result<(usize, usize), String> {
    let mut hits = Vec::new();
    for (ci, c) in f.components.iter().enumerate() {
        for i in 0..c.len() {
            if c.vertices[i].torus == torus && c.vertices[i].at == *at {
                hits.push((ci, i));
            }
        }
    }
    match hits.len() {
        1 => Ok(hits[0]),
        0 => Err(format!("no front vertex at {at}")),
        _ => Err(format!("front vertex at {at} is ambiguous")),
    }
}

fn apply_subsplice(f: &Front, part: &SubSplice) -> Result<(Front, SubSplice), String> {
    let (ci, i_from) = locate_vertex(f, part.torus, &part.from)?;
    let (cj, i_to) = locate_vertex(f, part.torus, &part.to)?;
    if ci != cj {
        return Err("splice anchors lie on different components".into());
    }
    let (nc, old_vs, old_es) = splice_path(
        &f.components[ci],
        i_from,
        i_to,
        part.vs.clone(),
        part.es.clone(),
    );
    let mut nf = f.clone();
    nf.components[ci] = nc;
    let undo = SubSplice {
        torus: part.torus,
        from: part.from.clone(),
        to: part.to.clone(),
        vs: old_vs,
        es: old_es,
    };
    Ok((nf, undo))
}

// ---------------------------------------------------------------------------
// clearance
// ---------------------------------------------------------------------------

/// Exact test: does the segment meet the open interior of the box?
fn seg_meets_open_box(seg: &Segment, b: &BBox) -> bool {
    let bands: Vec<(Q, Q)> = if b.t_wraps() {
        vec![(b.t_lo.clone(), qi(1)), (qi(0), b.t_hi.clone())]
    } else {
        vec![(b.t_lo.clone(), b.t_hi.clone())]
    };
    for (tl, th) in bands {
        for ks in -1..=1i64 {
            for kt in -1..=1i64 {
                let sl = &b.s_lo + qi(ks);
                let sh = &b.s_hi + qi(ks);
                let tl_k = &tl + qi(kt);
                let th_k = &th + qi(kt);
                let mut lo = qi(0);
                let mut hi = qi(1);
                let mut ok = true;
                for (x0, dx, xl, xh) in [
                    (&seg.start.s, &seg.disp.ds, &sl, &sh),
                    (&seg.start.t, &seg.disp.dt, &tl_k, &th_k),
                ] {
                    if dx.is_zero() {
                        if x0 <= xl || x0 >= xh {
                            ok = false;
                            break;
                        }
                        continue;
                    }
                    let a = (xl - x0) / dx;
                    let c = (xh - x0) / dx;
                    let (a, c) = if a <= c { (a, c) } else { (c, a) };
                    if a > lo {
                        lo = a;
                    }
                    if c < hi {
                        hi = c;
                    }
                    if lo >= hi {
                        ok = false;
                        break;
                    }
                }
                if !ok {
                    continue;
                }
                // strict interior: test the midpoint of the feasible range
                let mid = (&lo + &hi) / qi(2);
                let s = &seg.start.s + &seg.disp.ds * &mid;
                let t = &seg.start.t + &seg.disp.dt * &mid;
                if s > sl && s < sh && t > tl_k && t < th_k {
                    return true;
                }
            }
        }
    }
    false
}

struct Clearance<'a> {
    bbox: &'a BBox,
    /// front edges allowed to pass through the box
    allow_edges: Vec<SegRef>,
    /// strands allowed to pass through the box
    allow_strands: Vec<StrandId>,
    /// matched event positions (events at these exact points are fine)
    allow_points: Vec<TorusPoint>,
    /// a slide height allowed inside the t-band (H moves)
    allow_slide: Option<Q>,
    /// permit the box to reach across the page-gluing seam (B1)
    allow_seam: bool,
}

fn box_is_clear(f: &Front, d: &MorseDiagram, ev: &EventSet, cl: &Clearance) -> Result<(), String> {
    let b = cl.bbox;
    if !cl.allow_seam && (b.t_wraps() || b.t_lo <= qi(0) || b.t_hi >= qi(1)) {
        return Err("box touches the page-gluing seam".into());
    }
    for st in d.slide_ts() {
        if b.contains_t(&st) && cl.allow_slide.as_ref() != Some(&st) {
            return Err(format!("slide at t={st} inside the box"));
        }
    }
    let allowed = |p: &TorusPoint| cl.allow_points.iter().any(|a| a == p);
    for x in &ev.self_crossings {
        if x.torus == b.torus && b.contains(&x.at) && !allowed(&x.at) {
            return Err(format!("self-crossing at {} inside the box", x.at));
        }
    }
    for x in &ev.trace_crossings {
        if d.strand(x.strand).torus == b.torus && b.contains(&x.at) && !allowed(&x.at) {
            return Err(format!("trace crossing at {} inside the box", x.at));
        }
    }
    for x in &ev.cusps {
        if x.torus == b.torus && b.contains(&x.at) && !allowed(&x.at) {
            return Err(format!("cusp at {} inside the box", x.at));
        }
    }
    for x in &ev.teleports {
        if x.torus == b.torus && b.contains(&x.at) && !allowed(&x.at) {
            return Err(format!("teleport endpoint at {} inside the box", x.at));
        }
    }
    for x in &ev.seam_crossings {
        if x.torus == b.torus && b.contains(&reduce(x.s.clone(), qi(0))) {
            return Err(format!("seam crossing at s={} inside the box", x.s));
        }
    }
    for (r, torus, seg) in f.segments() {
        if torus != b.torus || cl.allow_edges.contains(&r) {
            continue;
        }
        if seg_meets_open_box(&seg, b) {
            return Err(format!(
                "front segment from {} passes through the box",
                seg.start
            ));
        }
    }
    // strand corners (arc-segment junctions) must not sit strictly inside:
    // slice queries in the box must stay single-segment
    for st in &d.strands {
        if st.torus != b.torus {
            continue;
        }
        let allowed_strand = cl.allow_strands.contains(&st.id);
        for seg in st.segments() {
            if !allowed_strand && seg_meets_open_box(seg, b) {
                return Err(format!("strand {} passes through the box", st.id));
            }
            let endpoint = seg.end();
            for p in [seg.start.clone(), endpoint] {
                let interior_s = p.s > b.s_lo && p.s < b.s_hi;
                let interior_t = if b.t_wraps() {
                    p.t > b.t_lo || p.t < b.t_hi
                } else {
                    p.t > b.t_lo && p.t < b.t_hi
                };
                let slide_pt = cl
                    .allow_slide
                    .as_ref()
                    .map(|sl| p.t == *sl)
                    .unwrap_or(false);
                if interior_s && interior_t && !p.t.is_zero() && !slide_pt
                    && !cl.allow_points.contains(&p)
                {
                    return Err(format!(
                        "strand {} has a corner at {} inside the box",
                        st.id, p
                    ));
                }
            }
        }
    }
    Ok(())
}

// ---------------------------------------------------------------------------
// event fingerprints
// ---------------------------------------------------------------------------

fn fingerprint_outside(ev: &EventSet, d: &MorseDiagram, b: &BBox) -> Vec<String> {
    let mut out = Vec::new();
    for x in &ev.self_crossings {
        if !(x.torus == b.torus && b.contains(&x.at)) {
            out.push(format!("sx {} {} {} {}", x.torus, x.at.s, x.at.t, x.sign));
        }
    }
    for x in &ev.trace_crossings {
        if !(d.strand(x.strand).torus == b.torus && b.contains(&x.at)) {
            out.push(format!("tx {} {} {} {}", x.strand, x.at.s, x.at.t, x.sign));
        }
    }
    for x in &ev.cusps {
        if !(x.torus == b.torus && b.contains(&x.at)) {
            out.push(format!("cu {} {} {} {:?}", x.torus, x.at.s, x.at.t, x.kind));
        }
    }
    for x in &ev.teleports {
        if !(x.torus == b.torus && b.contains(&x.at)) {
            out.push(format!(
                "tp {} {} {} {} {}",
                x.strand, x.side, x.at.s, x.at.t, x.incoming
            ));
        }
    }
    for x in &ev.seam_crossings {
        if !(x.torus == b.torus && b.contains(&reduce(x.s.clone(), qi(0)))) {
            out.push(format!("sm {} {} {}", x.torus, x.s, x.upward));
        }
    }
    out.sort();
    out
}

/// Position-free structural fingerprint for "move 0" (vertex perturbation):
/// positions may drift, but nothing may appear, vanish, or reorder.
fn structural_fingerprint(ev: &EventSet, d: &MorseDiagram) -> Vec<String> {
    let mut out = Vec::new();
    let mut selfs: Vec<i64> = ev.self_crossings.iter().map(|x| x.sign).collect();
    selfs.sort_unstable();
    out.push(format!("self {selfs:?}"));
    for st in &d.strands {
        let mut on_strand: Vec<(Q, String)> = Vec::new();
        for x in &ev.trace_crossings {
            if x.strand == st.id {
                on_strand.push((x.at.t.clone(), format!("x{}", x.sign)));
            }
        }
        for x in &ev.teleports {
            if x.strand == st.id {
                on_strand.push((x.t.clone(), format!("t{}{}", x.side, x.incoming)));
            }
        }
        on_strand.sort_by(|a, b| a.0.cmp(&b.0));
        let tags: Vec<&String> = on_strand.iter().map(|x| &x.1).collect();
        out.push(format!("strand {} {tags:?}", st.id));
    }
    let mut cusps: Vec<String> = ev
        .cusps
        .iter()
        .map(|c| format!("{} {:?}", c.torus, c.kind))
        .collect();
    cusps.sort();
    out.push(format!("cusps {cusps:?}"));
    out.push(format!("seams {}", ev.seam_crossings.len()));
    out
}

// ---------------------------------------------------------------------------
// small geometric helpers
// ---------------------------------------------------------------------------

fn lift_of(c: &FrontComponent, i: usize) -> (Q, Q) {
    (c.vertices[i].at.s.clone(), c.vertices[i].at.t.clone())
}

/// Parameter and lifted height at which segment edge `ei` passes the reduced
/// height `t`, trying unit lift shifts.
fn edge_param_at_height(c: &FrontComponent, ei: usize, t: &Q) -> Option<(Q, Q)> {
    let d = c.seg_disp(ei)?;
    if d.dt.is_zero() {
        return None;
    }
    for k in [-1i64, 0, 1] {
        let h = t + qi(k);
        let u = (&h - &c.vertices[ei].at.t) / &d.dt;
        if u > qi(0) && u < qi(1) {
            return Some((u, h));
        }
    }
    None
}

/// Parameter and lifted height at which a free segment passes reduced height
/// `t`, trying unit lift shifts.
fn seg_param_at_height(seg: &Segment, t: &Q) -> Option<(Q, Q)> {
    if seg.disp.dt.is_zero() {
        return None;
    }
    for k in [-1i64, 0, 1] {
        let h = t + qi(k);
        let u = (&h - &seg.start.t) / &seg.disp.dt;
        if u > qi(0) && u < qi(1) {
            return Some((u, h));
        }
    }
    None
}

fn hull2(points: &[(Q, Q)]) -> ((Q, Q), (Q, Q)) {
    let mut it = points.iter();
    let first = it.next().expect("nonempty hull");
    let (mut s_lo, mut s_hi) = (first.0.clone(), first.0.clone());
    let (mut t_lo, mut t_hi) = (first.1.clone(), first.1.clone());
    for (s, t) in it {
        if *s < s_lo {
            s_lo = s.clone();
        }
        if *s > s_hi {
            s_hi = s.clone();
        }
        if *t < t_lo {
            t_lo = t.clone();
        }
        if *t > t_hi {
            t_hi = t.clone();
        }
    }
    ((s_lo, s_hi), (t_lo, t_hi))
}

fn inflate(b: ((Q, Q), (Q, Q)), torus: usize, m: &Q) -> BBox {
    BBox {
        torus,
        s_lo: &b.0 .0 - m,
        s_hi: &b.0 .1 + m,
        t_lo: &b.1 .0 - m,
        t_hi: &b.1 .1 + m,
    }
}

/// The cusp's tip direction in `s`: a Down cusp (branches opening leftward)
/// points right, an Up cusp points left.
fn cusp_faces_right(kind: CuspKind) -> bool {
    kind == CuspKind::Down
}

// ---------------------------------------------------------------------------
// per-kind event contracts
// ---------------------------------------------------------------------------

struct EventCounts {
    cusps: i64,
    selfx: i64,
    selfsum: i64,
    trace: i64,
    links: i64,
    seams: i64,
}

fn counts(ev: &EventSet) -> EventCounts {
    let mut links: Vec<usize> = ev.teleports.iter().map(|t| t.link).collect();
    links.sort_unstable();
    links.dedup();
    EventCounts {
        cusps: ev.cusps.len() as i64,
        selfx: ev.self_crossings.len() as i64,
        selfsum: ev.self_crossing_sum(),
        trace: ev.trace_crossings.len() as i64,
        links: links.len() as i64,
        seams: ev.seam_crossings.len() as i64,
    }
}

/// Trace-crossing sum read against the upward page direction (the quantity
/// the T-term of the writhe is built from); moves must preserve it.
fn upward_trace_sum(ev: &EventSet, d: &MorseDiagram) -> i64 {
    ev.trace_crossings
        .iter()
        .map(|x| match d.strand(x.strand).orientation {
            Orientation::Up => x.sign,
            Orientation::Down => -x.sign,
        })
        .sum()
}

fn check_contract(
    kind: MoveKind,
    dir: MoveDir,
    d: &MorseDiagram,
    bbox: &BBox,
    before: &EventSet,
    after: &EventSet,
) -> Result<(), String> {
    if fingerprint_outside(before, d, bbox) != fingerprint_outside(after, d, bbox) {
        return Err("events outside the bounding box changed".into());
    }
    let cb = counts(before);
    let ca = counts(after);
    let sgn: i64 = if dir == MoveDir::Forward { 1 } else { -1 };
    let expect = |name: &str, got: i64, want: i64| -> Result<(), String> {
        if got == want {
            Ok(())
        } else {
            Err(format!(
                "{kind}{}: {name} delta {got}, expected {want}",
                dir.sign_char()
            ))
        }
    };
    let dc = ca.cusps - cb.cusps;
    let dx = ca.selfx - cb.selfx;
    let dw = ca.selfsum - cb.selfsum;
    let dt = ca.trace - cb.trace;
    let dl = ca.links - cb.links;
    let dm = ca.seams - cb.seams;
    match kind {
        MoveKind::R1a | MoveKind::R1b => {
            expect("cusp", dc, 2 * sgn)?;
            expect("self-crossing", dx, sgn)?;
            expect("writhe", dw, sgn)?;
            expect("trace", dt, 0)?;
            expect("link", dl, 0)?;
            expect("seam", dm, 0)?;
        }
        MoveKind::R2a | MoveKind::R2b => {
            expect("cusp", dc, 0)?;
            expect("self-crossing", dx, 2 * sgn)?;
            expect("writhe", dw, 0)?;
            expect("trace", dt, 0)?;
            expect("link", dl, 0)?;
            expect("seam", dm, 0)?;
        }
        MoveKind::R3 => {
            expect("cusp", dc, 0)?;
            expect("self-crossing", dx, 0)?;
            expect("writhe", dw, 0)?;
            expect("trace", dt, 0)?;
            expect("link", dl, 0)?;
            expect("seam", dm, 0)?;
        }
        MoveKind::S1 => {
            expect("cusp", dc, 0)?;
            if dx.abs() != 1 {
                return Err(format!("S1: self-crossing delta {dx}, expected ±1"));
            }
            if dw.abs() != 1 {
                return Err(format!("S1: writhe delta {dw}, expected ±1"));
            }
            expect("trace", dt, 0)?;
            expect("link", dl, 0)?;
            expect("seam", dm, 0)?;
        }
        MoveKind::S2 => {
            expect("cusp", dc, 0)?;
            expect("self-crossing", dx, 0)?;
            expect("trace", dt, 2 * sgn)?;
            if upward_trace_sum(before, d) != upward_trace_sum(after, d) {
                return Err("S2: upward-read trace crossing sum changed".into());
            }
            expect("link", dl, 0)?;
            expect("seam", dm, 0)?;
        }
        MoveKind::S3 => {
            expect("cusp", dc, 0)?;
            expect("self-crossing", dx, 0)?;
            expect("writhe", dw, 0)?;
            expect("trace", dt, 0)?;
            expect("link", dl, 0)?;
            expect("seam", dm, 0)?;
        }
        MoveKind::B1 => {
            expect("cusp", dc, 2 * sgn)?;
            expect("seam", dm, sgn)?;
            expect("link", dl, 0)?;
        }
        MoveKind::K1 => {
            expect("cusp", dc, 0)?;
            expect("self-crossing", dx, 0)?;
            expect("trace", dt, 0)?;
            expect("link", dl, 2 * sgn)?;
            expect("seam", dm, 0)?;
        }
        MoveKind::K2 => {
            expect("cusp", dc, 2 * sgn)?;
            expect("self-crossing", dx, sgn)?;
            expect("writhe", dw, sgn)?;
            expect("trace", dt, 0)?;
            expect("link", dl, sgn * (d.strands.len() as i64) / 2)?;
            expect("seam", dm, 0)?;
        }
        MoveKind::K3up | MoveKind::K3dn => {
            expect("cusp", dc, 0)?;
            expect("self-crossing", dx, 0)?;
            expect("trace", dt, 0)?;
            expect("link", dl, 0)?;
            expect("seam", dm, 0)?;
            let want = if kind == MoveKind::K3up {
                CuspKind::Up
            } else {
                CuspKind::Down
            };
            for ev in [before, after] {
                let inside: Vec<_> = ev
                    .cusps
                    .iter()
                    .filter(|c| c.torus == bbox.torus && bbox.contains(&c.at))
                    .collect();
                if inside.len() != 1 || inside[0].kind != want {
                    return Err(format!(
                        "{kind}: cluster must hold exactly one {want:?} cusp"
                    ));
                }
            }
        }
        MoveKind::H1 | MoveKind::H2 | MoveKind::H3 => {
            expect("cusp", dc, 0)?;
            expect("seam", dm, 0)?;
            expect("self-crossing", dx, 0)?;
        }
    }
    Ok(())
}

// ---------------------------------------------------------------------------
// match/rewrite framework
// ---------------------------------------------------------------------------

/// A matched pattern instance with its rewrite already realized as splices.
struct Candidate {
    kind: MoveKind,
    dir: MoveDir,
    anchors: Vec<EventRef>,
    bbox: BBox,
    parts: Vec<SubSplice>,
}

impl Candidate {
    fn new(
        kind: MoveKind,
        dir: MoveDir,
        mut anchors: Vec<EventRef>,
        bbox: BBox,
        parts: Vec<SubSplice>,
    ) -> Candidate {
        anchors.sort_by_key(|a| a.sort_key());
        Candidate {
            kind,
            dir,
            anchors,
            bbox,
            parts,
        }
    }
}

enum FinishErr {
    Stale(String),
    Invalid(String),
}

fn rewrite_with_parts(f: &Front, parts: &[SubSplice]) -> Result<(Front, Vec<SubSplice>), String> {
    let mut cur = f.clone();
    let mut undos = Vec::new();
    for p in parts {
        let (nf, undo) = apply_subsplice(&cur, p)?;
        cur = nf;
        undos.push(undo);
    }
    undos.reverse();
    Ok((cur, undos))
}

/// Validate and contract-check a candidate rewrite; on success produce the
/// outcome with an exact-undo inverse site.
#[allow(clippy::too_many_arguments)]
fn finish(
    f: &Front,
    d: &MorseDiagram,
    before: &EventSet,
    kind: MoveKind,
    dir: MoveDir,
    anchors: &[EventRef],
    bbox: &BBox,
    parts: &[SubSplice],
) -> Result<RewriteOutcome, FinishErr> {
    let (nf, undos) = rewrite_with_parts(f, parts).map_err(FinishErr::Stale)?;
    let rep = validate_front(&nf, d);
    if !rep.is_valid() {
        return Err(FinishErr::Invalid(format!("validation failed: {rep}")));
    }
    let after = extract_events(&nf, d).map_err(|e| FinishErr::Invalid(e.to_string()))?;
    check_contract(kind, dir, d, bbox, before, &after).map_err(FinishErr::Invalid)?;
    let cb = class_of_front(f, d).map_err(|e| FinishErr::Invalid(format!("class before: {e}")))?;
    let ca =
        class_of_front(&nf, d).map_err(|e| FinishErr::Invalid(format!("class after: {e}")))?;
    if cb != ca {
        return Err(FinishErr::Invalid(format!(
            "homology class changed: {cb:?} -> {ca:?}"
        )));
    }
    let inverse_site = MoveSite {
        kind,
        dir: dir.flipped(),
        anchors: anchors.to_vec(),
        bbox: bbox.clone(),
        id: format!("{}{}*", kind, dir.flipped().sign_char()),
        splice: Some(Splice { parts: undos }),
    };
    Ok(RewriteOutcome {
        front: nf,
        inverse_site,
    })
}

// ---------------------------------------------------------------------------
// R1: swallowtail kink at a cusp
// ---------------------------------------------------------------------------

/// Kink displacement triple scaled from a sub-displacement (v, w) of the host
/// edge: a shallow run out, a return leg, and a steep run back onto the host
/// line, crossing the first leg once.  The excursion bulges to the left of
/// the direction of travel, which at a cusp is the side facing away from the
/// wedge between the two branches — so the same triple serves a kink grown
/// out of either branch.  The formulas are linear, so both direction classes
/// of host edge work unchanged.
fn kink_disps(v: &Q, w: &Q) -> [Disp; 3] {
    let d1 = Disp::new(v * qi(2), w / qi(2));
    let d2 = Disp::new(v * frac(-3, 2), w * frac(-3, 4));
    let d3 = Disp::new(v / qi(2), w * frac(5, 4));
    [d1, d2, d3]
}

fn r1_forward_candidates(f: &Front, d: &MorseDiagram, ev: &EventSet) -> Vec<Candidate> {
    let mut out = Vec::new();
    for cusp in &ev.cusps {
        let c = &f.components[cusp.comp];
        for kind in [MoveKind::R1a, MoveKind::R1b] {
            let outgoing = kind == MoveKind::R1a;
            let ei = if outgoing {
                cusp.vertex
            } else {
                c.incoming_edge(cusp.vertex)
            };
            let other = if outgoing {
                c.incoming_edge(cusp.vertex)
            } else {
                cusp.vertex
            };
            let Some(disp) = c.seg_disp(ei).cloned() else {
                continue;
            };
            for k in 1..=6u32 {
                let u = frac(1, 1i64 << k);
                let (vs, es, bbox) = build_kink(c, ei, outgoing, &disp, &u);
                let cl = Clearance {
                    bbox: &bbox,
                    allow_edges: vec![(cusp.comp, ei), (cusp.comp, other)],
                    allow_strands: vec![],
                    allow_points: vec![cusp.at.clone()],
                    allow_slide: None,
                    allow_seam: false,
                };
                if box_is_clear(f, d, ev, &cl).is_err() {
                    continue;
                }
                let i_from = ei;
                let i_to = c.next(ei);
                out.push(Candidate::new(
                    kind,
                    MoveDir::Forward,
                    vec![EventRef::Cusp {
                        at: cusp.at.clone(),
                        torus: cusp.torus,
                    }],
                    bbox,
                    vec![SubSplice {
                        torus: c.vertices[i_from].torus,
                        from: c.vertices[i_from].at.clone(),
                        to: c.vertices[i_to].at.clone(),
                        vs,
                        es,
                    }],
                ));
                break;
            }
        }
    }
    out
}

fn build_kink(
    c: &FrontComponent,
    ei: usize,
    outgoing: bool,
    disp: &Disp,
    u: &Q,
) -> (Vec<FrontVertex>, Vec<FrontEdge>, BBox) {
    let torus = c.vertices[ei].torus;
    let start = lift_of(c, ei);
    let v = &disp.ds * u;
    let w = &disp.dt * u;
    let disps = kink_disps(&v, &w);
    let end = (&start.0 + &disp.ds, &start.1 + &disp.dt);
    let mut hull_pts = Vec::new();
    let mut pb;
    let (vs, es);
    if outgoing {
        // kink in the prefix [cusp .. u]
        pb = PathBuilder::start(torus, start.clone());
        let mut cur = start.clone();
        let mut pts = Vec::new();
        for dd in &disps {
            cur = (&cur.0 + &dd.ds, &cur.1 + &dd.dt);
            pts.push(cur.clone());
        }
        pb.seg_to(pts[0].clone(), VertexKind::Cusp);
        pb.seg_to(pts[1].clone(), VertexKind::Cusp);
        pb.seg_to(pts[2].clone(), VertexKind::Regular);
        hull_pts.push(start.clone());
        hull_pts.extend(pts);
        let built = pb.finish_seg(end);
        vs = built.0;
        es = built.1;
    } else {
        // kink in the suffix [1-u .. cusp]
        let split = (
            &start.0 + &disp.ds * &(qi(1) - u),
            &start.1 + &disp.dt * &(qi(1) - u),
        );
        pb = PathBuilder::start(torus, start.clone());
        pb.seg_to(split.clone(), VertexKind::Regular);
        let mut cur = split.clone();
        let mut pts = vec![split];
        for dd in disps.iter().take(2) {
            cur = (&cur.0 + &dd.ds, &cur.1 + &dd.dt);
            pts.push(cur.clone());
        }
        pb.seg_to(pts[1].clone(), VertexKind::Cusp);
        pb.seg_to(pts[2].clone(), VertexKind::Cusp);
        hull_pts.extend(pts);
        hull_pts.push(end.clone());
        let built = pb.finish_seg(end);
        vs = built.0;
        es = built.1;
    }
    let hull = hull2(&hull_pts);
    let size = (&hull.0 .1 - &hull.0 .0 + &hull.1 .1 - &hull.1 .0) / qi(16);
    (vs, es, inflate(hull, torus, &size))
}

fn r1_inverse_candidates(f: &Front, d: &MorseDiagram, ev: &EventSet) -> Vec<Candidate> {
    let mut out = Vec::new();
    for (ci, c) in f.components.iter().enumerate() {
        let n = c.len();
        if n < 5 {
            continue;
        }
        for a in 0..n {
            let b = c.next(a);
            if c.vertices[a].kind != VertexKind::Cusp || c.vertices[b].kind != VertexKind::Cusp {
                continue;
            }
            let p = c.prev(a);
            let m = c.next(b);
            if p == b || m == a || p == m {
                continue;
            }
            let (e0i, e1i, e2i) = (c.incoming_edge(a), a, b);
            let (Some(e0), Some(e1), Some(e2)) =
                (c.seg_disp(e0i), c.seg_disp(e1i), c.seg_disp(e2i))
            else {
                continue;
            };
            let sum = Disp::new(&e0.ds + &e1.ds + &e2.ds, &e0.dt + &e1.dt + &e2.dt);
            if dir_class(&sum).is_none() || sum.ds.abs() >= qi(1) || sum.dt.abs() >= qi(1) {
                continue;
            }
            // exactly one interior crossing between entry and exit branches
            let (Some(entry), Some(exit)) = (c.seg(e0i), c.seg(e2i)) else {
                continue;
            };
            let Ok(hits) = seg_intersections(&entry, &exit) else {
                continue;
            };
            let interior: Vec<_> = hits
                .iter()
                .filter(|(_, u, v)| *u > qi(0) && *u < qi(1) && *v > qi(0) && *v < qi(1))
                .collect();
            if interior.len() != 1 {
                continue;
            }
            let xat = interior[0].0.clone();
            // a kink grown out of a cusp's outgoing branch is preceded by the
            // host cusp; one grown out of the incoming branch is followed by it
            let kind = if c.vertices[m].kind == VertexKind::Cusp
                && c.vertices[p].kind != VertexKind::Cusp
            {
                MoveKind::R1b
            } else {
                MoveKind::R1a
            };
            let pts = [lift_of(c, p), lift_of(c, a), lift_of(c, b), lift_of(c, m)];
            let hull = hull2(&pts);
            let margin = (&hull.0 .1 - &hull.0 .0 + &hull.1 .1 - &hull.1 .0) / qi(16);
            let bbox = inflate(hull, c.vertices[a].torus, &margin);
            let cl = Clearance {
                bbox: &bbox,
                allow_edges: vec![
                    (ci, e0i),
                    (ci, e1i),
                    (ci, e2i),
                    (ci, c.incoming_edge(p)),
                    (ci, m),
                ],
                allow_strands: vec![],
                allow_points: vec![
                    c.vertices[a].at.clone(),
                    c.vertices[b].at.clone(),
                    c.vertices[p].at.clone(),
                    c.vertices[m].at.clone(),
                    xat,
                ],
                allow_slide: None,
                allow_seam: false,
            };
            if box_is_clear(f, d, ev, &cl).is_err() {
                continue;
            }
            // straighten: the three kink edges collapse into one segment
            let start = lift_of(c, p);
            let target = (&start.0 + &sum.ds, &start.1 + &sum.dt);
            let pb = PathBuilder::start(c.vertices[p].torus, start);
            let (vs, es) = pb.finish_seg(target);
            out.push(Candidate::new(
                kind,
                MoveDir::Inverse,
                vec![
                    EventRef::Cusp {
                        at: c.vertices[a].at.clone(),
                        torus: c.vertices[a].torus,
                    },
                    EventRef::Cusp {
                        at: c.vertices[b].at.clone(),
                        torus: c.vertices[b].torus,
                    },
                ],
                bbox,
                vec![SubSplice {
                    torus: c.vertices[p].torus,
                    from: c.vertices[p].at.clone(),
                    to: c.vertices[m].at.clone(),
                    vs,
                    es,
                }],
            ));
        }
    }
    out
}

// ---------------------------------------------------------------------------
// S2 / R2: a cusp tip pushed across a trace strand or a front branch
// ---------------------------------------------------------------------------

/// Horizontal cusp translation: replace [prev .. cusp .. next] by
/// [prev .. split_in .. moved cusp .. split_out .. next].
/// Returns the splice and the hull points, or None when a connector would
/// break its direction class.
fn build_cusp_push(
    c: &FrontComponent,
    vi: usize,
    delta_s: &Q,
    u_in: &Q,
    u_out: &Q,
) -> Option<(SubSplice, Vec<(Q, Q)>)> {
    let e_in = c.incoming_edge(vi);
    let e_out = vi;
    let d_in = c.seg_disp(e_in)?.clone();
    let d_out = c.seg_disp(e_out)?.clone();
    let p = c.prev(vi);
    let nxt = c.next(vi);
    if p == vi || nxt == vi || p == nxt {
        return None;
    }
    let start = lift_of(c, p);
    let k = (&start.0 + &d_in.ds, &start.1 + &d_in.dt);
    let s_in = (&start.0 + &d_in.ds * u_in, &start.1 + &d_in.dt * u_in);
    let k_moved = (&k.0 + delta_s, k.1.clone());
    let s_out = (&k.0 + &d_out.ds * u_out, &k.1 + &d_out.dt * u_out);
    let end = (&k.0 + &d_out.ds, &k.1 + &d_out.dt);
    let conn1 = Disp::new(&k_moved.0 - &s_in.0, &k_moved.1 - &s_in.1);
    let conn2 = Disp::new(&s_out.0 - &k_moved.0, &s_out.1 - &k_moved.1);
    if dir_class(&conn1) != dir_class(&d_in) || dir_class(&conn2) != dir_class(&d_out) {
        return None;
    }
    if conn1.ds.abs() >= qi(1) || conn1.dt.abs() >= qi(1) || conn2.ds.abs() >= qi(1) {
        return None;
    }
    let mut pb = PathBuilder::start(c.vertices[p].torus, start);
    pb.seg_to(s_in.clone(), VertexKind::Regular);
    pb.seg_to(k_moved.clone(), VertexKind::Cusp);
    pb.seg_to(s_out.clone(), VertexKind::Regular);
    let (vs, es) = pb.finish_seg(end);
    let hull = vec![s_in, k.clone(), k_moved, s_out];
    Some((
        SubSplice {
            torus: c.vertices[p].torus,
            from: c.vertices[p].at.clone(),
            to: c.vertices[nxt].at.clone(),
            vs,
            es,
        },
        hull,
    ))
}

/// One obstacle a cusp may be pushed across.
struct Obstacle {
    /// obstacle's s-position at the cusp's height
    s_at_cusp_t: Q,
    /// obstacle's s-variation allowance over the working band
    s_band_var: Q,
    anchor: Vec<EventRef>,
    allow_edges: Vec<SegRef>,
    allow_strands: Vec<StrandId>,
    /// for inverse sites: the two existing branch crossings with the obstacle
    branch_crossings: Box<dyn Fn(&Front, &EventSet, usize, usize) -> Option<Vec<TorusPoint>>>,
}

/// Common S2/R2 engine: push the cusp at each matched vertex across an
/// obstacle found at its height.
fn cusp_push_candidates(
    f: &Front,
    d: &MorseDiagram,
    ev: &EventSet,
    kind_for: &dyn Fn(CuspKind) -> MoveKind,
    obstacles: &dyn Fn(usize, &Q, &Q) -> Vec<Obstacle>,
) -> Vec<Candidate> {
    let mut out = Vec::new();
    for cusp in &ev.cusps {
        let c = &f.components[cusp.comp];
        let vi = cusp.vertex;
        if c.seg_disp(c.incoming_edge(vi)).is_none() || c.seg_disp(vi).is_none() {
            continue;
        }
        let faces_right = cusp_faces_right(cusp.kind);
        for obs in obstacles(cusp.torus, &cusp.at.t, &cusp.at.s) {
            let reach = &obs.s_at_cusp_t - &cusp.at.s;
            if reach.is_zero() {
                continue;
            }
            let on_facing_side = reach.is_positive() == faces_right;
            let dir = if on_facing_side {
                MoveDir::Forward
            } else {
                MoveDir::Inverse
            };
            // for the undo direction the two branch crossings must exist
            let mut branch_anchor_pts: Vec<TorusPoint> = Vec::new();
            if dir == MoveDir::Inverse {
                let Some(pts) = (obs.branch_crossings)(f, ev, cusp.comp, vi) else {
                    continue;
                };
                branch_anchor_pts = pts;
            }
            for split in [frac(1, 2), frac(3, 4), frac(7, 8), frac(1, 4)] {
                let u_in = split.clone();
                let u_out = qi(1) - &split;
                // overshoot past the obstacle by half the reach, plus its own
                // s-variation over the working band
                let overshoot = &reach / qi(2)
                    + if reach.is_positive() {
                        obs.s_band_var.clone()
                    } else {
                        -obs.s_band_var.clone()
                    };
                let delta = &reach + &overshoot;
                let Some((part, hull_pts)) = build_cusp_push(c, vi, &delta, &u_in, &u_out) else {
                    continue;
                };
                let mut pts = hull_pts;
                pts.push((obs.s_at_cusp_t.clone(), cusp.at.t.clone()));
                let hull = hull2(&pts);
                let margin = (&hull.0 .1 - &hull.0 .0 + &hull.1 .1 - &hull.1 .0) / qi(16);
                let bbox = inflate(hull, cusp.torus, &margin);
                let mut allow_points = vec![cusp.at.clone()];
                allow_points.extend(branch_anchor_pts.iter().cloned());
                let mut allow_edges = vec![(cusp.comp, c.incoming_edge(vi)), (cusp.comp, vi)];
                allow_edges.extend(obs.allow_edges.iter().cloned());
                let cl = Clearance {
                    bbox: &bbox,
                    allow_edges,
                    allow_strands: obs.allow_strands.clone(),
                    allow_points,
                    allow_slide: None,
                    allow_seam: false,
                };
                if box_is_clear(f, d, ev, &cl).is_err() {
                    continue;
                }
                let mut anchors = vec![EventRef::Cusp {
                    at: cusp.at.clone(),
                    torus: cusp.torus,
                }];
                anchors.extend(obs.anchor.clone());
                out.push(Candidate::new(
                    kind_for(cusp.kind),
                    dir,
                    anchors,
                    bbox,
                    vec![part],
                ));
                break;
            }
        }
    }
    out
}

fn s2_candidates(f: &Front, d: &MorseDiagram, ev: &EventSet) -> Vec<Candidate> {
    let strands: Vec<_> = d.strands.iter().map(|s| (s.id, s.torus)).collect();
    let d2 = d.clone();
    cusp_push_candidates(
        f,
        d,
        ev,
        &|_| MoveKind::S2,
        &move |torus, t, _s| {
            let mut obs = Vec::new();
            for (sid, st_torus) in &strands {
                if *st_torus != torus {
                    continue;
                }
                let Some(x) = d2.strand(*sid).slice_s(t) else {
                    continue;
                };
                let sid = *sid;
                obs.push(Obstacle {
                    s_at_cusp_t: x,
                    s_band_var: qi(0),
                    anchor: vec![],
                    allow_edges: vec![],
                    allow_strands: vec![sid],
                    branch_crossings: Box::new(move |f, ev, comp, vi| {
                        let c = &f.components[comp];
                        let e_in = c.incoming_edge(vi);
                        let c_in = ev
                            .trace_crossings
                            .iter()
                            .find(|x| x.strand == sid && x.front_seg == (comp, e_in));
                        let c_out = ev
                            .trace_crossings
                            .iter()
                            .find(|x| x.strand == sid && x.front_seg == (comp, vi));
                        match (c_in, c_out) {
                            (Some(a), Some(b)) => Some(vec![a.at.clone(), b.at.clone()]),
                            _ => None,
                        }
                    }),
                });
            }
            obs
        },
    )
}

fn r2_candidates(f: &Front, d: &MorseDiagram, ev: &EventSet) -> Vec<Candidate> {
    // obstacles are front branches spanning the cusp's height
    let segs = f.segments();
    cusp_push_candidates(
        f,
        d,
        ev,
        &|ck| {
            if ck == CuspKind::Down {
                MoveKind::R2a
            } else {
                MoveKind::R2b
            }
        },
        &move |torus, t, s| {
            let mut obs = Vec::new();
            for (r, sg_torus, seg) in &segs {
                if *sg_torus != torus {
                    continue;
                }
                // obstacle must pass the cusp's height in its interior
                let Some((u, _h)) = seg_param_at_height(seg, t) else {
                    continue;
                };
                let (xs_lift, _) = seg.lift_at(&u);
                let xs = frac_q(xs_lift);
                if (&xs - s).is_zero() {
                    continue;
                }
                let r = *r;
                obs.push(Obstacle {
                    s_at_cusp_t: xs,
                    s_band_var: seg.disp.ds.abs() / qi(4),
                    anchor: vec![EventRef::Segment {
                        start: seg.start.clone(),
                        end: seg.end(),
                        torus,
                    }],
                    allow_edges: vec![r],
                    allow_strands: vec![],
                    branch_crossings: Box::new(move |f, ev, comp, vi| {
                        let c = &f.components[comp];
                        let e_in = c.incoming_edge(vi);
                        let pair = |e: usize| {
                            ev.self_crossings.iter().find(|x| {
                                (x.over == (comp, e) && x.under == r)
                                    || (x.under == (comp, e) && x.over == r)
                            })
                        };
                        match (pair(e_in), pair(vi)) {
                            (Some(a), Some(b)) => Some(vec![a.at.clone(), b.at.clone()]),
                            _ => None,
                        }
                    }),
                });
            }
            obs
        },
    )
}

// ---------------------------------------------------------------------------
// S1: a crossing slides vertically past a teleport endpoint
// ---------------------------------------------------------------------------

fn tele_attached_edge(f: &Front, te: &TeleportEndpoint) -> Option<SegRef> {
    let c = &f.components[te.comp];
    let e_in = c.incoming_edge(te.vertex);
    let e_out = te.vertex;
    if te.incoming {
        matches!(c.edges[e_in], FrontEdge::Seg(_)).then_some((te.comp, e_in))
    } else {
        matches!(c.edges[e_out], FrontEdge::Seg(_)).then_some((te.comp, e_out))
    }
}

/// The contiguous run of plain segment edges (regular interior vertices
/// only, consistent vertical direction) whose lifted heights cover both
/// `h_a` and `h_b` strictly in edge interiors, around the edge `ei`.
/// Returns the edges in traversal order and the lift of the first edge's
/// start vertex, in the chart of `lift_of(c, ei)`.
fn plain_span(c: &FrontComponent, ei: usize, h_a: &Q, h_b: &Q) -> Option<(Vec<usize>, (Q, Q))> {
    let de = c.seg_disp(ei)?.clone();
    if de.dt.is_zero() {
        return None;
    }
    let up = de.dt.is_positive();
    let contains = |start_t: &Q, dt: &Q, h: &Q| -> bool {
        let u = (h - start_t) / dt;
        u > qi(0) && u < qi(1)
    };
    let (h_back, h_fwd) = if up {
        (h_a.min(h_b), h_a.max(h_b))
    } else {
        (h_a.max(h_b), h_a.min(h_b))
    };
    let mut back = Vec::new();
    let mut j = ei;
    let mut lj = lift_of(c, ei);
    let mut dj = de.clone();
    while !contains(&lj.1, &dj.dt, h_back) {
        if c.vertices[j].kind != VertexKind::Regular || back.len() + 2 > c.len() {
            return None;
        }
        let pj = c.incoming_edge(j);
        let dpj = c.seg_disp(pj)?;
        if dpj.dt.is_zero() || dpj.dt.is_positive() != up || pj == ei {
            return None;
        }
        lj = (&lj.0 - &dpj.ds, &lj.1 - &dpj.dt);
        dj = dpj.clone();
        j = pj;
        back.push(j);
    }
    let mut fwd = Vec::new();
    let mut k = ei;
    let mut lk = lift_of(c, ei);
    let mut dk = de.clone();
    while !contains(&lk.1, &dk.dt, h_fwd) {
        let nv = c.next(k);
        if c.vertices[nv].kind != VertexKind::Regular || fwd.len() + 2 > c.len() || nv == ei {
            return None;
        }
        let dnk = c.seg_disp(nv)?;
        if dnk.dt.is_zero() || dnk.dt.is_positive() != up {
            return None;
        }
        lk = (&lk.0 + &dk.ds, &lk.1 + &dk.dt);
        dk = dnk.clone();
        k = nv;
        fwd.push(k);
    }
    let mut edges: Vec<usize> = back.iter().rev().cloned().collect();
    edges.push(ei);
    edges.extend(fwd);
    Some((edges, lj))
}

fn s1_candidates(f: &Front, d: &MorseDiagram, ev: &EventSet) -> Vec<Candidate> {
    let mut out = Vec::new();
    for te in &ev.teleports {
        let Some(t_seg) = tele_attached_edge(f, te) else {
            continue;
        };
        for tx in &ev.trace_crossings {
            if tx.strand != te.strand || tx.front_seg == t_seg {
                continue;
            }
            let (ci, ei) = tx.front_seg;
            let c = &f.components[ci];
            let gap = (&tx.at.t - &te.t).abs();
            if gap.is_zero() {
                continue;
            }
            let t_new = qi(2) * &te.t - &tx.at.t; // reflect through the endpoint
            if t_new <= qi(0) || t_new >= qi(1) {
                continue;
            }
            // the compensating crossing between the sliding branch and the
            // teleporting branch exists exactly on one side of the endpoint;
            // it lives between the two crossing heights
            let band_lo = (&tx.at.t).min(&t_new).clone();
            let band_hi = (&tx.at.t).max(&t_new).clone();
            let required_present = (te.side == Side::Left) == (tx.at.t < te.t);
            let x_here: Vec<_> = ev
                .self_crossings
                .iter()
                .filter(|x| {
                    let partner = if x.over == t_seg {
                        Some(x.under)
                    } else if x.under == t_seg {
                        Some(x.over)
                    } else {
                        None
                    };
                    matches!(partner, Some((pc, _)) if pc == ci)
                        && x.at.t > band_lo
                        && x.at.t < band_hi
                })
                .collect();
            if x_here.len() != usize::from(required_present) {
                continue;
            }
            // lift everything into the chart of the crossing edge
            let Some((u_star, h_star)) = edge_param_at_height(c, ei, &tx.at.t) else {
                continue;
            };
            let de = c.seg_disp(ei).unwrap().clone();
            let e_lift = lift_of(c, ei);
            let x_lift_s = &e_lift.0 + &de.ds * &u_star;
            let shift = &h_star - &tx.at.t;
            let h_new = &t_new + &shift;
            let h_te = &te.t + &shift;
            // strand height profile in the same chart, unwrapped around the
            // crossing
            let strand = d.strand(tx.strand);
            let strand_lift_s = |h: &Q| -> Option<Q> {
                let t = h - &shift;
                let raw = strand.slice_s(&t)?;
                let mut best = raw.clone();
                let mut best_dist = (&best - &tx.at.s).abs();
                for w in [-1i64, 1] {
                    let cand = &raw + qi(w);
                    let dist = (&cand - &tx.at.s).abs();
                    if dist < best_dist {
                        best = cand;
                        best_dist = dist;
                    }
                }
                Some(&best - &tx.at.s + &x_lift_s)
            };
            for k in 2..=6u32 {
                let m = &gap / qi(1i64 << k);
                let h_hi = (&h_star).max(&h_new).clone() + &m;
                let h_lo = (&h_star).min(&h_new).clone() - &m;
                // keep the working band inside one vertical period
                if &h_lo - &shift <= qi(0) || &h_hi - &shift >= qi(1) {
                    continue;
                }
                let Some((span, first_lift)) = plain_span(c, ei, &h_lo, &h_hi) else {
                    continue;
                };
                let e_first = span[0];
                let e_last = *span.last().unwrap();
                let mut last_lift = first_lift.clone();
                for w in span.windows(2) {
                    let dd = c.seg_disp(w[0]).unwrap();
                    last_lift = (&last_lift.0 + &dd.ds, &last_lift.1 + &dd.dt);
                }
                let d_first = c.seg_disp(e_first).unwrap().clone();
                let d_last = c.seg_disp(e_last).unwrap().clone();
                let up = de.dt.is_positive();
                let at_height = |l: &(Q, Q), dd: &Disp, h: &Q| -> (Q, Q) {
                    let u = (h - &l.1) / &dd.dt;
                    (&l.0 + &dd.ds * &u, h.clone())
                };
                // band endpoints on the original branch
                let (a_pt, b_pt) = if up {
                    (
                        at_height(&first_lift, &d_first, &h_lo),
                        at_height(&last_lift, &d_last, &h_hi),
                    )
                } else {
                    (
                        at_height(&last_lift, &d_last, &h_lo),
                        at_height(&first_lift, &d_first, &h_hi),
                    )
                };
                // the reroute turns at mid-height between the moved crossing
                // and the endpoint, carrying the far band point's lateral
                // offset from the strand; the other leg traverses the strand
                let t_p = (&h_new + &h_te) / qi(2);
                let (far_pt, far_h) = if h_new < h_star {
                    (&b_pt, &h_hi)
                } else {
                    (&a_pt, &h_lo)
                };
                let (Some(s_far), Some(s_tp)) = (strand_lift_s(far_h), strand_lift_s(&t_p))
                else {
                    continue;
                };
                let p1 = (&far_pt.0 - &s_far + &s_tp, t_p.clone());
                let (first_stop, second_stop) = if up {
                    (a_pt.clone(), b_pt.clone())
                } else {
                    (b_pt.clone(), a_pt.clone())
                };
                let end_lift = (&last_lift.0 + &d_last.ds, &last_lift.1 + &d_last.dt);
                let mut pb = PathBuilder::start(c.vertices[e_first].torus, first_lift.clone());
                let mut ok = true;
                for pt in [&first_stop, &p1, &second_stop] {
                    let dd = pb.disp_to(pt);
                    if dir_class(&dd) != dir_class(&de) {
                        ok = false;
                        break;
                    }
                    pb.seg_to((*pt).clone(), VertexKind::Regular);
                }
                if !ok || dir_class(&pb.disp_to(&end_lift)) != dir_class(&de) {
                    continue;
                }
                let (vs, es) = pb.finish_seg(end_lift);
                // bounding box: the reroute, the strand over the band, the
                // endpoint and the crossing
                let Some(s_te) = strand_lift_s(&h_te) else {
                    continue;
                };
                let pts = vec![
                    a_pt.clone(),
                    b_pt.clone(),
                    p1.clone(),
                    (s_te, h_te.clone()),
                    (x_lift_s.clone(), h_star.clone()),
                ];
                let hull = hull2(&pts);
                let margin = (&gap + (&hull.0 .1 - &hull.0 .0)) / qi(8);
                let bbox = inflate(hull, c.vertices[ei].torus, &margin);
                let mut allow_points = vec![tx.at.clone(), te.at.clone()];
                if let Some(x) = x_here.first() {
                    allow_points.push(x.at.clone());
                }
                // events at the end vertices of the allowed edges are part of
                // the local picture
                let tc = &f.components[t_seg.0];
                allow_points.push(tc.vertices[t_seg.1].at.clone());
                allow_points.push(tc.vertices[tc.next(t_seg.1)].at.clone());
                allow_points.push(c.vertices[e_first].at.clone());
                allow_points.push(c.vertices[c.next(e_last)].at.clone());
                let mut allow_edges: Vec<SegRef> = span.iter().map(|&e| (ci, e)).collect();
                allow_edges.push(t_seg);
                let cl = Clearance {
                    bbox: &bbox,
                    allow_edges,
                    allow_strands: vec![te.strand],
                    allow_points,
                    allow_slide: None,
                    allow_seam: false,
                };
                if box_is_clear(f, d, ev, &cl).is_err() {
                    continue;
                }
                let dir = if tx.at.t > te.t {
                    MoveDir::Forward
                } else {
                    MoveDir::Inverse
                };
                out.push(Candidate::new(
                    MoveKind::S1,
                    dir,
                    vec![
                        EventRef::Teleport {
                            link: te.link,
                            strand: te.strand,
                            at: te.at.clone(),
                        },
                        EventRef::TraceCrossing {
                            at: tx.at.clone(),
                            strand: tx.strand,
                        },
                    ],
                    bbox,
                    vec![SubSplice {
                        torus: c.vertices[e_first].torus,
                        from: c.vertices[e_first].at.clone(),
                        to: c.vertices[c.next(e_last)].at.clone(),
                        vs,
                        es,
                    }],
                ));
                break;
            }
        }
    }
    out
}

// ---------------------------------------------------------------------------
// S3: a self-crossing slides horizontally past a trace strand
// ---------------------------------------------------------------------------

/// Horizontal translation of the mid-span of one edge: the stretch between
/// the two given lifted heights is moved by `delta_s`, with connectors of
/// slack `pad` above and below.
fn build_horizontal_slide(
    c: &FrontComponent,
    ei: usize,
    hseg: &[Q; 2],
    delta_s: &Q,
    pad: &Q,
) -> Option<(SubSplice, Vec<(Q, Q)>)> {
    let de = c.seg_disp(ei)?.clone();
    let start = lift_of(c, ei);
    let end = (&start.0 + &de.ds, &start.1 + &de.dt);
    let line_at = |h: &Q| -> Option<(Q, Q)> {
        let u = (h - &start.1) / &de.dt;
        (u > qi(0) && u < qi(1)).then(|| (&start.0 + &de.ds * &u, h.clone()))
    };
    let h_top = (&hseg[0]).max(&hseg[1]).clone();
    let h_bot = (&hseg[0]).min(&hseg[1]).clone();
    let h_a = &h_top + pad;
    let h_b = &h_bot - pad;
    let v1 = line_at(&h_a)?;
    let v2 = line_at(&h_b)?;
    let w1 = {
        let p = line_at(&h_top)?;
        (&p.0 + delta_s, p.1)
    };
    let w2 = {
        let p = line_at(&h_bot)?;
        (&p.0 + delta_s, p.1)
    };
    let interior = if de.dt.is_negative() {
        vec![v1.clone(), w1.clone(), w2.clone(), v2.clone()]
    } else {
        vec![v2.clone(), w2.clone(), w1.clone(), v1.clone()]
    };
    let mut pb = PathBuilder::start(c.vertices[ei].torus, start);
    for p in &interior {
        let dd = pb.disp_to(p);
        if dir_class(&dd) != dir_class(&de) || dd.ds.abs() >= qi(1) || dd.dt.abs() >= qi(1) {
            return None;
        }
        pb.seg_to(p.clone(), VertexKind::Regular);
    }
    if dir_class(&pb.disp_to(&end)) != dir_class(&de) {
        return None;
    }
    let (vs, es) = pb.finish_seg(end);
    Some((
        SubSplice {
            torus: c.vertices[ei].torus,
            from: c.vertices[ei].at.clone(),
            to: c.vertices[c.next(ei)].at.clone(),
            vs,
            es,
        },
        vec![v1, v2, w1, w2],
    ))
}

fn s3_candidates(f: &Front, d: &MorseDiagram, ev: &EventSet) -> Vec<Candidate> {
    let mut out = Vec::new();
    for sx in &ev.self_crossings {
        let (ca_ref, cb_ref) = (sx.over, sx.under);
        if ca_ref.0 == cb_ref.0 {
            // adjacent edges form kinks; those slide with R-moves instead
            let c = &f.components[ca_ref.0];
            let (i, j) = (ca_ref.1, cb_ref.1);
            if c.next(i) == j || c.next(j) == i {
                continue;
            }
        }
        for st in &d.strands {
            if st.torus != sx.torus {
                continue;
            }
            let tx_a = ev
                .trace_crossings
                .iter()
                .find(|x| x.strand == st.id && x.front_seg == ca_ref);
            let tx_b = ev
                .trace_crossings
                .iter()
                .find(|x| x.strand == st.id && x.front_seg == cb_ref);
            let (Some(tx_a), Some(tx_b)) = (tx_a, tx_b) else {
                continue;
            };
            let Some(slice) = st.slice_s(&sx.at.t) else {
                continue;
            };
            let reach = &slice - &sx.at.s;
            if reach.is_zero() {
                continue;
            }
            let delta = qi(2) * &reach; // reflect the crossing through the strand
            let mut chosen: Option<(Vec<SubSplice>, Vec<(Q, Q)>)> = None;
            for pad_k in [1i64, 2, 4, 8] {
                let mut parts = Vec::new();
                let mut hull_pts = vec![
                    (sx.at.s.clone(), sx.at.t.clone()),
                    (&sx.at.s + &delta, sx.at.t.clone()),
                    (tx_a.at.s.clone(), tx_a.at.t.clone()),
                    (tx_b.at.s.clone(), tx_b.at.t.clone()),
                ];
                let mut ok = true;
                for (er, tx) in [(ca_ref, tx_a), (cb_ref, tx_b)] {
                    let c = &f.components[er.0];
                    let Some((_, h_sx)) = edge_param_at_height(c, er.1, &sx.at.t) else {
                        ok = false;
                        break;
                    };
                    let Some((_, h_tx)) = edge_param_at_height(c, er.1, &tx.at.t) else {
                        ok = false;
                        break;
                    };
                    let span = (&h_sx - &h_tx).abs();
                    let pad = &span * qi(pad_k) / qi(2);
                    let Some((part, pts)) =
                        build_horizontal_slide(c, er.1, &[h_sx, h_tx], &delta, &pad)
                    else {
                        ok = false;
                        break;
                    };
                    parts.push(part);
                    hull_pts.extend(pts);
                }
                if ok {
                    chosen = Some((parts, hull_pts));
                    break;
                }
            }
            let Some((parts, hull_pts)) = chosen else {
                continue;
            };
            let hull = hull2(&hull_pts);
            let margin = (&hull.0 .1 - &hull.0 .0 + &hull.1 .1 - &hull.1 .0) / qi(16);
            let bbox = inflate(hull, sx.torus, &margin);
            let cl = Clearance {
                bbox: &bbox,
                allow_edges: vec![ca_ref, cb_ref],
                allow_strands: vec![st.id],
                allow_points: vec![sx.at.clone(), tx_a.at.clone(), tx_b.at.clone()],
                allow_slide: None,
                allow_seam: false,
            };
            if box_is_clear(f, d, ev, &cl).is_err() {
                continue;
            }
            let dir = if reach.is_positive() {
                MoveDir::Forward
            } else {
                MoveDir::Inverse
            };
            out.push(Candidate::new(
                MoveKind::S3,
                dir,
                vec![
                    EventRef::SelfCrossing {
                        at: sx.at.clone(),
                        torus: sx.torus,
                    },
                    EventRef::TraceCrossing {
                        at: tx_a.at.clone(),
                        strand: tx_a.strand,
                    },
                    EventRef::TraceCrossing {
                        at: tx_b.at.clone(),
                        strand: tx_b.strand,
                    },
                ],
                bbox,
                parts,
            ));
        }
    }
    out
}

// ---------------------------------------------------------------------------
// R3: a branch slides across a self-crossing
// ---------------------------------------------------------------------------

fn r3_candidates(f: &Front, d: &MorseDiagram, ev: &EventSet) -> Vec<Candidate> {
    let mut out = Vec::new();
    let segs = f.segments();
    for sx in &ev.self_crossings {
        let (a_ref, b_ref) = (sx.over, sx.under);
        for (c_ref, c_torus, c_seg) in &segs {
            if *c_torus != sx.torus || *c_ref == a_ref || *c_ref == b_ref {
                continue;
            }
            if shares_vertex(f, *c_ref, a_ref) || shares_vertex(f, *c_ref, b_ref) {
                continue;
            }
            let ca = single_interior_crossing(f, *c_ref, a_ref);
            let cb = single_interior_crossing(f, *c_ref, b_ref);
            let (Some((x_ca, u_ca)), Some((x_cb, u_cb))) = (ca, cb) else {
                continue;
            };
            // lift the apex onto c's frame: pick the unit shift with the
            // smallest perpendicular offset from c's line
            let p0 = (c_seg.start.s.clone(), c_seg.start.t.clone());
            let u = (c_seg.disp.ds.clone(), c_seg.disp.dt.clone());
            let uu = &u.0 * &u.0 + &u.1 * &u.1;
            let mut best: Option<(Q, (Q, Q))> = None;
            for ks in [-1i64, 0, 1] {
                for kt in [-1i64, 0, 1] {
                    let sx_l = (&sx.at.s + qi(ks), &sx.at.t + qi(kt));
                    let w = (&sx_l.0 - &p0.0, &sx_l.1 - &p0.1);
                    let foot = (&w.0 * &u.0 + &w.1 * &u.1) / &uu;
                    let perp = (&w.0 - &foot * &u.0, &w.1 - &foot * &u.1);
                    let norm = &perp.0 * &perp.0 + &perp.1 * &perp.1;
                    if best.as_ref().map(|(n, _)| &norm < n).unwrap_or(true) {
                        best = Some((norm, perp));
                    }
                }
            }
            let (_, perp) = best.unwrap();
            if perp.0.is_zero() && perp.1.is_zero() {
                continue;
            }
            let c_comp = &f.components[c_ref.0];
            let (u1, u2) = if u_ca < u_cb {
                (&u_ca, &u_cb)
            } else {
                (&u_cb, &u_ca)
            };
            let mut found = false;
            for theta_k in 1..=3u32 {
                if found {
                    break;
                }
                let scale = qi(1) + frac(1, 1i64 << theta_k);
                let shift = (&perp.0 * &scale, &perp.1 * &scale);
                for pad_k in 1..=3u32 {
                    let pad = (u2 - u1) * frac(1, 1i64 << pad_k);
                    let v1u = u1 - &pad;
                    let v2u = u2 + &pad;
                    if v1u <= qi(0) || v2u >= qi(1) {
                        continue;
                    }
                    let start = lift_of(c_comp, c_ref.1);
                    let de = c_comp.seg_disp(c_ref.1).unwrap().clone();
                    let at = |uu: &Q| (&start.0 + &de.ds * uu, &start.1 + &de.dt * uu);
                    let v1 = at(&v1u);
                    let v2 = at(&v2u);
                    let w1 = {
                        let p = at(u1);
                        (&p.0 + &shift.0, &p.1 + &shift.1)
                    };
                    let w2 = {
                        let p = at(u2);
                        (&p.0 + &shift.0, &p.1 + &shift.1)
                    };
                    let end = (&start.0 + &de.ds, &start.1 + &de.dt);
                    let mut pb =
                        PathBuilder::start(c_comp.vertices[c_ref.1].torus, start.clone());
                    let mut bad = false;
                    for p in [&v1, &w1, &w2, &v2] {
                        let dd = pb.disp_to(p);
                        if dir_class(&dd) != dir_class(&de) {
                            bad = true;
                            break;
                        }
                        pb.seg_to((*p).clone(), VertexKind::Regular);
                    }
                    if bad || dir_class(&pb.disp_to(&end)) != dir_class(&de) {
                        continue;
                    }
                    let (vs, es) = pb.finish_seg(end);
                    let hull_pts = vec![
                        v1.clone(),
                        v2.clone(),
                        w1.clone(),
                        w2.clone(),
                        (sx.at.s.clone(), sx.at.t.clone()),
                        (x_ca.s.clone(), x_ca.t.clone()),
                        (x_cb.s.clone(), x_cb.t.clone()),
                    ];
                    let hull = hull2(&hull_pts);
                    let margin = (&hull.0 .1 - &hull.0 .0 + &hull.1 .1 - &hull.1 .0) / qi(16);
                    let bbox = inflate(hull, sx.torus, &margin);
                    let cl = Clearance {
                        bbox: &bbox,
                        allow_edges: vec![a_ref, b_ref, *c_ref],
                        allow_strands: vec![],
                        allow_points: vec![sx.at.clone(), x_ca.clone(), x_cb.clone()],
                        allow_slide: None,
                        allow_seam: false,
                    };
                    if box_is_clear(f, d, ev, &cl).is_err() {
                        continue;
                    }
                    // deterministic direction label from the side c starts on
                    let dir = if perp.1.is_positive() || (perp.1.is_zero() && perp.0.is_positive())
                    {
                        MoveDir::Forward
                    } else {
                        MoveDir::Inverse
                    };
                    out.push(Candidate::new(
                        MoveKind::R3,
                        dir,
                        vec![
                            EventRef::SelfCrossing {
                                at: sx.at.clone(),
                                torus: sx.torus,
                            },
                            EventRef::SelfCrossing {
                                at: x_ca.clone(),
                                torus: sx.torus,
                            },
                            EventRef::SelfCrossing {
                                at: x_cb.clone(),
                                torus: sx.torus,
                            },
                        ],
                        bbox,
                        vec![SubSplice {
                            torus: c_comp.vertices[c_ref.1].torus,
                            from: c_comp.vertices[c_ref.1].at.clone(),
                            to: c_comp.vertices[c_comp.next(c_ref.1)].at.clone(),
                            vs,
                            es,
                        }],
                    ));
                    found = true;
                    break;
                }
            }
        }
    }
    out
}

fn shares_vertex(f: &Front, a: SegRef, b: SegRef) -> bool {
    if a.0 != b.0 {
        return false;
    }
    let c = &f.components[a.0];
    let av = [a.1, c.next(a.1)];
    let bv = [b.1, c.next(b.1)];
    av.iter().any(|x| bv.contains(x))
}

fn single_interior_crossing(f: &Front, a: SegRef, b: SegRef) -> Option<(TorusPoint, Q)> {
    let sa = f.components[a.0].seg(a.1)?;
    let sb = f.components[b.0].seg(b.1)?;
    let hits = seg_intersections(&sa, &sb).ok()?;
    let interior: Vec<_> = hits
        .into_iter()
        .filter(|(_, u, v)| *u > qi(0) && *u < qi(1) && *v > qi(0) && *v < qi(1))
        .collect();
    if interior.len() == 1 {
        let (p, u, _) = interior.into_iter().next().unwrap();
        Some((p, u))
    } else {
        None
    }
}

// ---------------------------------------------------------------------------
// B1 / K1 / K2 / K3 / H — matched in the second stage
// ---------------------------------------------------------------------------

fn b1_candidates(_f: &Front, _d: &MorseDiagram, _ev: &EventSet) -> Vec<Candidate> {
    Vec::new()
}

fn k1_candidates(_f: &Front, _d: &MorseDiagram, _ev: &EventSet) -> Vec<Candidate> {
    Vec::new()
}

fn k2_candidates(_f: &Front, _d: &MorseDiagram, _ev: &EventSet) -> Vec<Candidate> {
    Vec::new()
}

fn k3_candidates(_f: &Front, _d: &MorseDiagram, _ev: &EventSet) -> Vec<Candidate> {
    Vec::new()
}

fn h_candidates(_f: &Front, _d: &MorseDiagram, _ev: &EventSet) -> Vec<Candidate> {
    Vec::new()
}

// ---------------------------------------------------------------------------
// public API
// ---------------------------------------------------------------------------

fn candidates_for(kind: MoveKind, f: &Front, d: &MorseDiagram, ev: &EventSet) -> Vec<Candidate> {
    let mut all: Vec<Candidate> = match kind {
        MoveKind::R1a | MoveKind::R1b => {
            let mut v = r1_forward_candidates(f, d, ev);
            v.extend(r1_inverse_candidates(f, d, ev));
            v
        }
        MoveKind::R2a | MoveKind::R2b => r2_candidates(f, d, ev),
        MoveKind::R3 => r3_candidates(f, d, ev),
        MoveKind::S1 => s1_candidates(f, d, ev),
        MoveKind::S2 => s2_candidates(f, d, ev),
        MoveKind::S3 => s3_candidates(f, d, ev),
        MoveKind::B1 => b1_candidates(f, d, ev),
        MoveKind::K1 => k1_candidates(f, d, ev),
        MoveKind::K2 => k2_candidates(f, d, ev),
        MoveKind::K3up | MoveKind::K3dn => k3_candidates(f, d, ev),
        MoveKind::H1 | MoveKind::H2 | MoveKind::H3 => h_candidates(f, d, ev),
    };
    all.retain(|c| c.kind == kind);
    all.sort_by(|a, b| {
        let ka: Vec<_> = a.anchors.iter().map(|x| x.sort_key()).collect();
        let kb: Vec<_> = b.anchors.iter().map(|x| x.sort_key()).collect();
        (a.dir, ka).cmp(&(b.dir, kb))
    });
    all.dedup_by(|a, b| a.dir == b.dir && a.anchors == b.anchors);
    all
}

/// All applicable move sites of the front, deterministically ordered and
/// identified.  Every returned site has been dry-run through its rewrite and
/// passed validation and its event contract.
pub fn find_moves(f: &Front, d: &MorseDiagram) -> Result<Vec<MoveSite>, MoveError> {
    let ev = extract_events(f, d)?;
    let mut sites = Vec::new();
    for kind in ALL_KINDS {
        let mut counters = [0usize; 2];
        for cand in candidates_for(kind, f, d, &ev) {
            if finish(
                f,
                d,
                &ev,
                cand.kind,
                cand.dir,
                &cand.anchors,
                &cand.bbox,
                &cand.parts,
            )
            .is_err()
            {
                continue;
            }
            let slot = if cand.dir == MoveDir::Forward { 0 } else { 1 };
            let id = format!("{}{}{}", kind, cand.dir.sign_char(), counters[slot]);
            counters[slot] += 1;
            sites.push(MoveSite {
                kind: cand.kind,
                dir: cand.dir,
                anchors: cand.anchors,
                bbox: cand.bbox,
                id,
                splice: None,
            });
        }
    }
    Ok(sites)
}

/// Apply one move site to the front it was found on (or a front still
/// matching it).  Returns the rewritten front and the exact inverse site.
pub fn apply_move(
    f: &Front,
    d: &MorseDiagram,
    site: &MoveSite,
) -> Result<RewriteOutcome, MoveError> {
    let ev = extract_events(f, d)?;
    let run = |parts: &[SubSplice]| -> Result<RewriteOutcome, MoveError> {
        match finish(
            f,
            d,
            &ev,
            site.kind,
            site.dir,
            &site.anchors,
            &site.bbox,
            parts,
        ) {
            Ok(o) => Ok(o),
            Err(FinishErr::Stale(m)) => Err(MoveError::SiteStale(m)),
            Err(FinishErr::Invalid(m)) => Err(MoveError::RewriteInvalid(m)),
        }
    };
    if let Some(sp) = &site.splice {
        return run(&sp.parts);
    }
    let cand = candidates_for(site.kind, f, d, &ev)
        .into_iter()
        .find(|c| c.dir == site.dir && c.anchors == site.anchors && c.bbox == site.bbox)
        .ok_or_else(|| {
            MoveError::SiteStale(format!(
                "no {}{} site with these anchors on the current front",
                site.kind,
                site.dir.sign_char()
            ))
        })?;
    run(&cand.parts)
}

/// Apply a sequence of moves by site id, returning the full history
/// (starting front included).  Each step re-enumerates sites on the current
/// front; an id that no longer exists is a stale-site error.
pub fn move_trace(f0: &Front, d: &MorseDiagram, ids: &[&str]) -> Result<Vec<Front>, MoveError> {
    let mut history = vec![f0.clone()];
    for id in ids {
        let cur = history.last().unwrap();
        let sites = find_moves(cur, d)?;
        let site = sites
            .iter()
            .find(|s| s.id == *id)
            .ok_or_else(|| MoveError::SiteStale(format!("no site with id {id:?}")))?;
        let out = apply_move(cur, d, site)?;
        history.push(out.front);
    }
    Ok(history)
}

/// Move 0, part one: split a segment edge at an interior parameter.  The
/// event set is unchanged up to segment re-addressing.
pub fn refine_edge(f: &Front, d: &MorseDiagram, at: SegRef, u: &Q) -> Result<Front, MoveError> {
    let mut nf = f.clone();
    let comp = nf
        .components
        .get_mut(at.0)
        .ok_or_else(|| MoveError::SiteStale(format!("no component {}", at.0)))?;
    if at.1 >= comp.edges.len() || !comp.split_edge(at.1, u) {
        return Err(MoveError::RewriteInvalid(format!(
            "edge {at:?} cannot be split at u={u}"
        )));
    }
    let rep = validate_front(&nf, d);
    if !rep.is_valid() {
        return Err(MoveError::RewriteInvalid(format!(
            "refinement broke validity: {rep}"
        )));
    }
    Ok(nf)
}

/// Move 0, part two: nudge a regular or cusp vertex.  The perturbed front
/// must stay valid and carry the identical structural event fingerprint.
pub fn perturb_vertex(
    f: &Front,
    d: &MorseDiagram,
    comp: usize,
    vertex: usize,
    by: &Disp,
) -> Result<Front, MoveError> {
    let c = f
        .components
        .get(comp)
        .ok_or_else(|| MoveError::SiteStale(format!("no component {comp}")))?;
    if vertex >= c.len() {
        return Err(MoveError::SiteStale(format!("no vertex {vertex}")));
    }
    if matches!(c.vertices[vertex].kind, VertexKind::TeleportEnd { .. }) {
        return Err(MoveError::RewriteInvalid(
            "teleport endpoints are pinned to their strands".into(),
        ));
    }
    let e_in = c.incoming_edge(vertex);
    let e_out = vertex;
    let (FrontEdge::Seg(di), FrontEdge::Seg(do_)) = (&c.edges[e_in], &c.edges[e_out]) else {
        return Err(MoveError::RewriteInvalid(
            "both edges at the vertex must be segments".into(),
        ));
    };
    let before = extract_events(f, d)?;
    let mut nf = f.clone();
    let nc = &mut nf.components[comp];
    nc.vertices[vertex].at = reduce(
        &c.vertices[vertex].at.s + &by.ds,
        &c.vertices[vertex].at.t + &by.dt,
    );
    nc.edges[e_in] = FrontEdge::Seg(Disp::new(&di.ds + &by.ds, &di.dt + &by.dt));
    nc.edges[e_out] = FrontEdge::Seg(Disp::new(&do_.ds - &by.ds, &do_.dt - &by.dt));
    let rep = validate_front(&nf, d);
    if !rep.is_valid() {
        return Err(MoveError::RewriteInvalid(format!(
            "perturbation broke validity: {rep}"
        )));
    }
    let after = extract_events(&nf, d)?;
    if structural_fingerprint(&before, d) != structural_fingerprint(&after, d) {
        return Err(MoveError::RewriteInvalid(
            "perturbation changed the event structure".into(),
        ));
    }
    Ok(nf)
}

/// Insert a stabilization zigzag (two cusps, no crossing) into a segment
/// edge: the Thurston–Bennequin number drops by one, the class is unchanged.
pub fn stabilize(f: &Front, d: &MorseDiagram, at: SegRef) -> Result<Front, MoveError> {
    let before = extract_events(f, d)?;
    let c = f
        .components
        .get(at.0)
        .ok_or_else(|| MoveError::SiteStale(format!("no component {}", at.0)))?;
    let Some(de) = c.seg_disp(at.1).cloned() else {
        return Err(MoveError::RewriteInvalid(
            "stabilization needs a segment edge".into(),
        ));
    };
    let start = lift_of(c, at.1);
    let end = (&start.0 + &de.ds, &start.1 + &de.dt);
    for k in 1..=6u32 {
        let u = frac(1, 1i64 << k);
        let v = &de.ds * &u;
        let w = &de.dt * &u;
        let a = (&start.0 + &v * frac(2, 3), &start.1 + &w * frac(2, 3));
        let b = (&a.0 - &v / qi(6), &a.1 - &w / qi(3));
        let q_pt = (&start.0 + &v, &start.1 + &w);
        let mut pb = PathBuilder::start(c.vertices[at.1].torus, start.clone());
        pb.seg_to(a.clone(), VertexKind::Cusp);
        pb.seg_to(b.clone(), VertexKind::Cusp);
        pb.seg_to(q_pt.clone(), VertexKind::Regular);
        let (vs, es) = pb.finish_seg(end.clone());
        let hull = hull2(&[start.clone(), a, b, q_pt]);
        let margin = (&hull.0 .1 - &hull.0 .0 + &hull.1 .1 - &hull.1 .0) / qi(16);
        let bbox = inflate(hull, c.vertices[at.1].torus, &margin);
        let cl = Clearance {
            bbox: &bbox,
            allow_edges: vec![at, (at.0, c.incoming_edge(at.1))],
            allow_strands: vec![],
            allow_points: vec![c.vertices[at.1].at.clone()],
            allow_slide: None,
            allow_seam: false,
        };
        if box_is_clear(f, d, &before, &cl).is_err() {
            continue;
        }
        let part = SubSplice {
            torus: c.vertices[at.1].torus,
            from: c.vertices[at.1].at.clone(),
            to: c.vertices[c.next(at.1)].at.clone(),
            vs,
            es,
        };
        let (nf, _) = rewrite_with_parts(f, &[part]).map_err(MoveError::RewriteInvalid)?;
        let rep = validate_front(&nf, d);
        if !rep.is_valid() {
            continue;
        }
        let after = extract_events(&nf, d)?;
        let cb = counts(&before);
        let ca = counts(&after);
        if ca.cusps - cb.cusps != 2 || ca.selfx != cb.selfx || ca.trace != cb.trace {
            continue;
        }
        let class_b = class_or_err(f, d, "class before stabilization")?;
        let class_a = class_or_err(&nf, d, "class after stabilization")?;
        if class_b != class_a {
            return Err(MoveError::RewriteInvalid(
                "stabilization changed the homology class".into(),
            ));
        }
        return Ok(nf);
    }
    Err(MoveError::RewriteInvalid(
        "no clear room for a stabilization zigzag on this edge".into(),
    ))
}

fn class_or_err(f: &Front, d: &MorseDiagram, when: &str) -> Result<H1Class, MoveError> {
    class_of_front(f, d).map_err(|e| MoveError::RewriteInvalid(format!("{when}: {e}")))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus;
    use crate::front::canonical;
    use crate::invariant::thurston_bennequin;

    fn tb_of(f: &Front, d: &MorseDiagram) -> i64 {
        thurston_bennequin(f, d).unwrap().tb
    }

    #[test]
    fn unknot_r1_sites_at_each_cusp() {
        let d = corpus::disc_diagram();
        let f = corpus::unknot_front();
        let sites = find_moves(&f, &d).unwrap();
        let r1a: Vec<_> = sites
            .iter()
            .filter(|s| s.kind == MoveKind::R1a && s.dir == MoveDir::Forward)
            .collect();
        let r1b: Vec<_> = sites
            .iter()
            .filter(|s| s.kind == MoveKind::R1b && s.dir == MoveDir::Forward)
            .collect();
        assert_eq!(r1a.len(), 2, "one R1a site per cusp: {sites:?}");
        assert_eq!(r1b.len(), 2, "one R1b site per cusp");
        // a diagram with no strands admits no S/K/H moves
        for s in &sites {
            assert!(
                matches!(s.kind, MoveKind::R1a | MoveKind::R1b | MoveKind::B1),
                "unexpected site {} on the unknot",
                s.id
            );
        }
    }

    #[test]
    fn r1_preserves_tb_and_undoes_exactly() {
        let d = corpus::disc_diagram();
        let f = corpus::unknot_front();
        assert_eq!(tb_of(&f, &d), -1);
        let sites = find_moves(&f, &d).unwrap();
        let site = sites.iter().find(|s| s.id == "R1a+0").unwrap();
        let out = apply_move(&f, &d, site).unwrap();
        let ev = extract_events(&out.front, &d).unwrap();
        assert_eq!(ev.cusps.len(), 4);
        assert_eq!(ev.self_crossings.len(), 1);
        assert_eq!(ev.self_crossings[0].sign, 1);
        assert_eq!(tb_of(&out.front, &d), -1);
        // exact undo via the returned inverse site
        let back = apply_move(&out.front, &d, &out.inverse_site).unwrap();
        assert_eq!(canonical(&back.front), canonical(&f));
    }

    #[test]
    fn r1_pattern_inverse_restores_canonical_form() {
        let d = corpus::disc_diagram();
        let f = corpus::unknot_front();
        let history = move_trace(&f, &d, &["R1a+0", "R1a-0"]).unwrap();
        assert_eq!(history.len(), 3);
        assert_eq!(canonical(history.last().unwrap()), canonical(&f));
        for step in &history {
            assert!(validate_front(step, &d).is_valid());
        }
    }

    #[test]
    fn r1b_also_round_trips() {
        let d = corpus::disc_diagram();
        let f = corpus::unknot_front();
        let history = move_trace(&f, &d, &["R1b+0", "R1b-0"]).unwrap();
        assert_eq!(canonical(history.last().unwrap()), canonical(&f));
    }

    #[test]
    fn stabilization_drops_tb_by_one() {
        let d = corpus::disc_diagram();
        let f = corpus::unknot_front();
        let g = stabilize(&f, &d, (0, 0)).unwrap();
        assert_eq!(tb_of(&g, &d), -2);
        let ev = extract_events(&g, &d).unwrap();
        assert_eq!(ev.cusps.len(), 4);
        assert!(ev.self_crossings.is_empty());
        let h = stabilize(&g, &d, (0, 0)).unwrap();
        assert_eq!(tb_of(&h, &d), -3);
    }

    #[test]
    fn s1_slides_the_crossing_past_an_endpoint() {
        let d = corpus::ot_s3_diagram();
        let f = corpus::ot_disc_front();
        assert_eq!(tb_of(&f, &d), 0);
        let sites = find_moves(&f, &d).unwrap();
        let s1: Vec<_> = sites.iter().filter(|s| s.kind == MoveKind::S1).collect();
        assert!(!s1.is_empty(), "expected an S1 site on this front");
        let out = apply_move(&f, &d, s1[0]).unwrap();
        assert_eq!(tb_of(&out.front, &d), 0, "S1 must preserve tb");
        let back = apply_move(&out.front, &d, &out.inverse_site).unwrap();
        assert_eq!(canonical(&back.front), canonical(&f));
    }

    #[test]
    fn s2_pushes_a_cusp_through_a_strand() {
        let d = corpus::punctured_torus_diagram();
        let f = corpus::ex3_front();
        let sites = find_moves(&f, &d).unwrap();
        let s2: Vec<_> = sites.iter().filter(|s| s.kind == MoveKind::S2).collect();
        assert!(!s2.is_empty(), "expected an S2 site here");
        let before = extract_events(&f, &d).unwrap();
        let out = apply_move(&f, &d, s2[0]).unwrap();
        let after = extract_events(&out.front, &d).unwrap();
        assert_eq!(
            (after.trace_crossings.len() as i64 - before.trace_crossings.len() as i64).abs(),
            2
        );
        let back = apply_move(&out.front, &d, &out.inverse_site).unwrap();
        assert_eq!(canonical(&back.front), canonical(&f));
    }

    #[test]
    fn refinement_keeps_events_and_moves() {
        let d = corpus::disc_diagram();
        let f = corpus::unknot_front();
        let g = refine_edge(&f, &d, (0, 0), &frac(1, 3)).unwrap();
        let ev_f = extract_events(&f, &d).unwrap();
        let ev_g = extract_events(&g, &d).unwrap();
        assert_eq!(
            structural_fingerprint(&ev_f, &d),
            structural_fingerprint(&ev_g, &d)
        );
        assert_eq!(canonical(&g), canonical(&f));
        let sites_f = find_moves(&f, &d).unwrap().len();
        let sites_g = find_moves(&g, &d).unwrap().len();
        assert_eq!(sites_f, sites_g);
    }

    #[test]
    fn perturbation_preserves_structure() {
        let d = corpus::disc_diagram();
        let f = corpus::unknot_front();
        // vertex 2 is the regular vertex at (1/2, 3/8)
        let g = perturb_vertex(&f, &d, 0, 2, &Disp::new(frac(1, 100), frac(-1, 100))).unwrap();
        assert!(validate_front(&g, &d).is_valid());
        let too_far = perturb_vertex(&f, &d, 0, 2, &Disp::new(frac(1, 2), frac(1, 2)));
        assert!(too_far.is_err());
    }
}
