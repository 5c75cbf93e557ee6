//! Augmentation links: auxiliary closed curves whose events live in thin
//! bands near the top and bottom of the cylinder and whose homology class
//! cancels a front's, so that the union becomes nullhomologous in the
//! cylinder and multiplicities can be assigned.

use crate::diagram::{MorseDiagram, Side, StrandId};
use crate::events::extract_events;
use crate::front::{
    validate_front, Front, FrontComponent, FrontEdge, FrontError, FrontVertex, VertexKind,
};
use crate::geom::{q, qi, reduce, Disp, Q};
use crate::homology::{class_of_front, nullhomology_status, H1Class, HomologyError, NullStatus};
use crate::lattice;
use num::{Signed, Zero};
use thiserror::Error;

#[derive(Error, Debug, Clone, PartialEq, Eq)]
pub enum AugmentError {
    #[error(transparent)]
    Front(#[from] FrontError),
    #[error(transparent)]
    Homology(#[from] HomologyError),
    #[error("no catalog combination realizes the opposite of the front's class")]
    NoSolution,
    #[error("augmentation geometry failed to become generic: {0}")]
    Realization(String),
}

/// How to assemble the link: both strategies solve the same integer system,
/// but `Type1Heavy` additionally pads the result with class-0 curve pairs so
/// the two augmentations of one front are structurally different.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Strategy {
    Type1Heavy,
    Type2Heavy,
}

/// The auxiliary link X: curve pairs translated between the two bands
/// (`type1`) and full-height climbing pairs (`type2`). Segments of a climb
/// necessarily transit mid-diagram heights; all *events* of X stay inside
/// the reserved bands.
#[derive(Clone, Debug, Default)]
pub struct AugmentationLink {
    pub type1: Vec<FrontComponent>,
    pub type2: Vec<FrontComponent>,
}

impl AugmentationLink {
    pub fn empty() -> AugmentationLink {
        AugmentationLink::default()
    }

    pub fn is_empty(&self) -> bool {
        self.type1.is_empty() && self.type2.is_empty()
    }

    /// The front of the union Λ ∪ X.
    pub fn augmented(&self, f: &Front) -> Front {
        let mut comps = f.components.clone();
        comps.extend(self.type2.iter().cloned());
        comps.extend(self.type1.iter().cloned());
        Front::new(comps)
    }
}

/// One catalog entry. `Climb(m)` is the full-height pair for handle pair
/// `m`: one member ascends near the left edge of the first strand's torus,
/// the other descends near the right edge of the second's, teleporting
/// between the paired strands at both band heights. `Tight(m, side)` is a
/// small loop through the handle at the top plus its reversed translate at
/// the bottom. `Wrap(i)` wraps torus `i` once horizontally in each band.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Piece {
    Climb(usize),
    Tight(usize, Side),
    Wrap(usize),
}

/// Geometric scale knobs for one realization attempt. Every retry shrinks
/// the whole family, which moves all crossing slopes and positions at once.
struct Params {
    eps: Q,
    shrink: Q,
    flat: Q,
}

impl Params {
    fn new(eps: &Q, retry: u32, d: &MorseDiagram) -> Params {
        // Bumps hugging a strand must leave it faster sideways than the
        // strand itself leans, or the departure side flips.
        let mut dmax = qi(0);
        for st in &d.strands {
            for seg in st.segments() {
                let lean = seg.disp.ds.abs() / &seg.disp.dt;
                if lean > dmax {
                    dmax = lean;
                }
            }
        }
        Params {
            eps: eps * q(1, 5i64.pow(retry)),
            shrink: q(1, 5i64.pow(retry)),
            flat: qi(1) / (dmax + qi(2)),
        }
    }

    fn band_lo(&self, inst: u32) -> Q {
        &self.eps * q(1, 1 << (inst + 2))
    }

    fn band_hi(&self, inst: u32) -> Q {
        qi(1) - self.band_lo(inst)
    }

    fn rise(&self, inst: u32) -> Q {
        &self.eps * q(1, 1 << (inst + 5))
    }

    fn left_s(&self, inst: u32) -> Q {
        &self.shrink * q(1, 1 << (inst + 6))
    }

    fn right_margin(&self, inst: u32) -> Q {
        &self.shrink * q(1, 3 * (1 << (inst + 6)))
    }

    fn bump(&self, inst: u32) -> Q {
        &self.shrink * q(1, 1 << (inst + 7))
    }
}

fn seg(ds: Q, dt: Q) -> FrontEdge {
    FrontEdge::Seg(Disp::new(ds, dt))
}

fn min_q(a: Q, b: Q) -> Q {
    if a < b {
        a
    } else {
        b
    }
}

/// s-position of a strand at an interior height, which band heights always
/// are.
fn strand_s(d: &MorseDiagram, sid: StrandId, t: &Q) -> Result<Q, AugmentError> {
    d.strand(sid)
        .slice_s(t)
        .ok_or_else(|| AugmentError::Realization(format!("strand {sid} has no point at t={t}")))
}

/// The two strands of a pair, in id order.
fn pair_ids(d: &MorseDiagram, m: usize) -> (StrandId, StrandId) {
    let ids = &d.pair_strands()[&m];
    (ids[0], ids[1])
}

/// Full-height pair for handle pair `m`: ascend at `s ≈ 0` on the first
/// strand's torus, teleport across the pair at the top band, descend at
/// `s ≈ 1` on the second's torus, teleport back at the bottom band.
fn climb_piece(
    d: &MorseDiagram,
    m: usize,
    inst: u32,
    p: &Params,
    link0: usize,
) -> Result<Vec<FrontComponent>, AugmentError> {
    let (a, b) = pair_ids(d, m);
    let (ta, tb) = (d.strand(a).torus, d.strand(b).torus);
    let (t_lo, t_hi) = (p.band_lo(inst), p.band_hi(inst));
    let eta = p.rise(inst);
    let s_a_lo = strand_s(d, a, &t_lo)?;
    let s_a_hi = strand_s(d, a, &t_hi)?;
    let s_b_lo = strand_s(d, b, &t_lo)?;
    let s_b_hi = strand_s(d, b, &t_hi)?;

    // Keep the climbing lanes strictly between the edge and the endpoint
    // strand, whichever is closer.
    let dl = min_q(p.left_s(inst), min_q(&s_a_lo / qi(3), &s_a_hi / qi(3)));
    let dr = min_q(
        p.right_margin(inst),
        min_q((qi(1) - &s_b_lo) / qi(3), (qi(1) - &s_b_hi) / qi(3)),
    );
    let nudge_l = &dl / qi(8);
    let nudge_r = &dr / qi(8);
    let (l_lo, l_hi) = (link0, link0 + 1);

    let v = vec![
        FrontVertex::tele(ta, reduce(s_a_lo.clone(), t_lo.clone()), a, Side::Left, l_lo),
        FrontVertex::regular(ta, reduce(dl.clone(), &t_lo + &eta)),
        FrontVertex::cusp(ta, reduce(&dl - &nudge_l, &t_hi + &eta)),
        FrontVertex::tele(ta, reduce(s_a_hi.clone(), t_hi.clone()), a, Side::Left, l_hi),
        FrontVertex::tele(
            tb,
            reduce(s_b_hi.clone(), t_hi.clone()),
            b,
            Side::Right,
            l_hi,
        ),
        FrontVertex::regular(tb, reduce(qi(1) - &dr, &t_hi - &eta)),
        FrontVertex::cusp(tb, reduce(qi(1) - &dr + &nudge_r, &t_lo - &eta)),
        FrontVertex::tele(
            tb,
            reduce(s_b_lo.clone(), t_lo.clone()),
            b,
            Side::Right,
            l_lo,
        ),
    ];
    let e = vec![
        seg(&dl - &s_a_lo, eta.clone()),
        seg(-&nudge_l, &t_hi - &t_lo),
        seg(&s_a_hi - &dl + &nudge_l, -&eta),
        FrontEdge::Jump,
        seg(qi(1) - &dr - &s_b_hi, -&eta),
        seg(nudge_r.clone(), &t_lo - &t_hi),
        seg(&s_b_lo - (qi(1) - &dr + &nudge_r), eta.clone()),
        FrontEdge::Jump,
    ];
    Ok(vec![FrontComponent::closed(v, e)])
}

/// One tight loop through handle `m` between two heights inside a band:
/// a rising bump beside the first strand, a falling bump beside the second,
/// joined by two teleports. `side` picks which strand gets the left bump.
fn tight_loop(
    d: &MorseDiagram,
    m: usize,
    t1: &Q,
    t2: &Q,
    side: Side,
    p: &Params,
    inst: u32,
    link0: usize,
) -> Result<FrontComponent, AugmentError> {
    let (a, b) = pair_ids(d, m);
    let (a, b) = match side {
        Side::Left => (a, b),
        Side::Right => (b, a),
    };
    let (ta, tb) = (d.strand(a).torus, d.strand(b).torus);
    let s_a1 = strand_s(d, a, t1)?;
    let s_a2 = strand_s(d, a, t2)?;
    let s_b1 = strand_s(d, b, t1)?;
    let s_b2 = strand_s(d, b, t2)?;
    let theta_l = min_q(p.bump(inst), min_q(&s_a1 / qi(3), &s_a2 / qi(3)));
    let theta_r = min_q(
        p.bump(inst),
        min_q((qi(1) - &s_b1) / qi(3), (qi(1) - &s_b2) / qi(3)),
    );
    let apex_l = min_q(s_a1.clone(), s_a2.clone()) - &theta_l;
    let apex_r = if s_b1 > s_b2 { &s_b1 } else { &s_b2 } + &theta_r;
    // Bump heights scale with the sideways excursion so the departure side
    // is decided by the bump, not by the strand's lean.
    let over_l = &theta_l * &p.flat / qi(2);
    let over_r = &theta_r * &p.flat / qi(2);
    let (l1, l2) = (link0, link0 + 1);

    let v = vec![
        FrontVertex::tele(ta, reduce(s_a1.clone(), t1.clone()), a, Side::Left, l1),
        FrontVertex::cusp(ta, reduce(apex_l.clone(), t2 + &over_l)),
        FrontVertex::tele(ta, reduce(s_a2.clone(), t2.clone()), a, Side::Left, l2),
        FrontVertex::tele(tb, reduce(s_b2.clone(), t2.clone()), b, Side::Right, l2),
        FrontVertex::cusp(tb, reduce(apex_r.clone(), t1 - &over_r)),
        FrontVertex::tele(tb, reduce(s_b1.clone(), t1.clone()), b, Side::Right, l1),
    ];
    let e = vec![
        seg(&apex_l - &s_a1, t2 - t1 + &over_l),
        seg(&s_a2 - &apex_l, -over_l.clone()),
        FrontEdge::Jump,
        seg(&apex_r - &s_b2, t1 - t2 - &over_r),
        seg(&s_b1 - &apex_r, over_r.clone()),
        FrontEdge::Jump,
    ];
    Ok(FrontComponent::closed(v, e))
}

/// Tight pair: the loop near the top plus its reversed translate near the
/// bottom.
fn tight_piece(
    d: &MorseDiagram,
    m: usize,
    side: Side,
    inst: u32,
    p: &Params,
    link0: usize,
) -> Result<Vec<FrontComponent>, AugmentError> {
    let gap = p.rise(inst);
    let hi1 = p.band_hi(inst);
    let hi2 = &hi1 + &gap;
    let lo1 = p.band_lo(inst);
    let lo2 = &lo1 + &gap;
    let top = tight_loop(d, m, &hi1, &hi2, side, p, inst, link0)?;
    let bottom = tight_loop(d, m, &lo1, &lo2, side, p, inst, link0 + 2)?.reversed();
    Ok(vec![top, bottom])
}

/// One horizontal wrap of torus `i` at height `t_w`, rising by `h`: two
/// leftward segments covering the circle, one cusp at each end.
fn wrap_loop(i: usize, t_w: &Q, h: &Q, x0: &Q) -> FrontComponent {
    let v = vec![
        FrontVertex::cusp(i, reduce(x0.clone(), t_w.clone())),
        FrontVertex::regular(i, reduce(x0 - q(3, 5), t_w + h / qi(2))),
        FrontVertex::cusp(i, reduce(x0 - q(11, 10), t_w + h)),
    ];
    let e = vec![
        seg(q(-3, 5), h / qi(2)),
        seg(q(-1, 2), h / qi(2)),
        seg(q(1, 10), -h.clone()),
    ];
    FrontComponent::closed(v, e)
}

/// Wrap pair on torus `i`: a horizontal wrap in the top band plus its
/// reversed translate in the bottom band. Crosses every strand once in each
/// band, so the top and bottom label sums cancel pairwise. The base
/// s-coordinate is scanned so no wrap vertex lands on a strand.
fn wrap_piece(
    d: &MorseDiagram,
    i: usize,
    inst: u32,
    p: &Params,
) -> Result<Vec<FrontComponent>, AugmentError> {
    let h = p.rise(inst);
    let lo = p.band_lo(inst);
    let hi = p.band_hi(inst);
    let heights = [
        lo.clone(),
        &lo + &h / qi(2),
        &lo + &h,
        hi.clone(),
        &hi + &h / qi(2),
        &hi + &h,
    ];
    let offsets = [qi(0), q(-3, 5), q(-11, 10)];
    'scan: for j in 0..200i64 {
        let x0 = q(1, 2) + q(j, 197);
        for off in &offsets {
            let s = reduce(&x0 + off, qi(0)).s;
            for st in d.strands.iter().filter(|st| st.torus == i) {
                for t in &heights {
                    if st.slice_s(t) == Some(s.clone()) {
                        continue 'scan;
                    }
                }
            }
        }
        let top = wrap_loop(i, &hi, &h, &x0);
        let bottom = wrap_loop(i, &lo, &h, &x0).reversed();
        return Ok(vec![top, bottom]);
    }
    Err(AugmentError::Realization(format!(
        "no wrap position clears the strands of torus {i}"
    )))
}

fn build_piece(
    d: &MorseDiagram,
    piece: Piece,
    inst: u32,
    p: &Params,
    link0: usize,
) -> Result<Vec<FrontComponent>, AugmentError> {
    match piece {
        Piece::Climb(m) => climb_piece(d, m, inst, p, link0),
        Piece::Tight(m, side) => tight_piece(d, m, side, inst, p, link0),
        Piece::Wrap(i) => wrap_piece(d, i, inst, p),
    }
}

fn links_used(piece: Piece) -> usize {
    match piece {
        Piece::Climb(_) => 2,
        Piece::Tight(..) => 4,
        Piece::Wrap(_) => 0,
    }
}

fn catalog(d: &MorseDiagram, strategy: Strategy) -> Vec<Piece> {
    let k = d.k();
    let climbs = (0..k).map(Piece::Climb);
    let tights = (0..k).flat_map(|m| [Piece::Tight(m, Side::Left), Piece::Tight(m, Side::Right)]);
    let wraps = (0..d.n_tori).map(Piece::Wrap);
    match strategy {
        Strategy::Type2Heavy => climbs.chain(tights).chain(wraps).collect(),
        Strategy::Type1Heavy => tights.chain(wraps).chain(climbs).collect(),
    }
}

/// Class of one catalog piece, probed at reference scale. The final union
/// check re-verifies the class at the emitted scale.
fn piece_class(d: &MorseDiagram, piece: Piece, p: &Params) -> Result<H1Class, AugmentError> {
    let comps = build_piece(d, piece, 0, p, 0)?;
    let probe = Front::new(comps);
    let report = validate_front(&probe, d);
    if !report.is_valid() {
        return Err(AugmentError::Realization(format!(
            "catalog piece {piece:?} is not a valid front: {}",
            report.violations.join("; ")
        )));
    }
    Ok(class_of_front(&probe, d)?)
}

/// Half the smallest t-gap between the closure seam and the first or last
/// event of the front or the diagram.
fn band_epsilon(f: &Front, d: &MorseDiagram) -> Result<Q, AugmentError> {
    let ev = extract_events(f, d)?;
    let mut ts: Vec<Q> = Vec::new();
    ts.extend(ev.self_crossings.iter().map(|c| c.at.t.clone()));
    ts.extend(ev.trace_crossings.iter().map(|c| c.at.t.clone()));
    ts.extend(ev.cusps.iter().map(|c| c.at.t.clone()));
    ts.extend(ev.teleports.iter().map(|c| c.t.clone()));
    ts.extend(d.slide_ts());
    ts.extend(d.edge_events().into_iter().map(|e| e.t));
    ts.retain(|t| !t.is_zero());
    let mut eps = q(1, 4);
    for t in ts {
        eps = min_q(eps, min_q(t.clone() / qi(2), (qi(1) - &t) / qi(2)));
    }
    if eps <= qi(0) {
        return Err(AugmentError::Realization(
            "no band is free of events next to the seam".into(),
        ));
    }
    Ok(eps)
}

fn next_link_id(f: &Front) -> usize {
    f.components
        .iter()
        .flat_map(|c| &c.vertices)
        .filter_map(|v| match v.kind {
            VertexKind::TeleportEnd { link, .. } => Some(link + 1),
            _ => None,
        })
        .max()
        .unwrap_or(0)
}

/// Build an augmentation link X with `[X] = -[Λ]`, so the union is
/// nullhomologous in the cylinder. Empty when the class is already zero.
pub fn build_augmentation(f: &Front, d: &MorseDiagram) -> Result<AugmentationLink, AugmentError> {
    build_augmentation_with(f, d, Strategy::Type2Heavy)
}

pub fn build_augmentation_with(
    f: &Front,
    d: &MorseDiagram,
    strategy: Strategy,
) -> Result<AugmentationLink, AugmentError> {
    let class = class_of_front(f, d)?;
    if class.iter().all(|c| *c == 0) {
        return Ok(AugmentationLink::empty());
    }

    let eps = band_epsilon(f, d)?;
    let pieces = catalog(d, strategy);
    let probe = Params::new(&eps, 0, d);
    let mut columns = Vec::with_capacity(pieces.len());
    for piece in &pieces {
        columns.push(piece_class(d, *piece, &probe)?);
    }
    // k rows, one column per piece: solve  Σ xᵢ·classᵢ = -class(Λ).
    let matrix: Vec<Vec<i128>> = (0..d.k())
        .map(|row| columns.iter().map(|c| c[row]).collect())
        .collect();
    let target: Vec<i128> = class.iter().map(|c| -c).collect();
    let solution = lattice::solve(&matrix, &target).ok_or(AugmentError::NoSolution)?;

    let mut plan: Vec<(Piece, bool)> = Vec::new();
    for (piece, x) in pieces.iter().zip(&solution) {
        for _ in 0..x.unsigned_abs() {
            plan.push((*piece, *x < 0));
        }
    }
    if strategy == Strategy::Type1Heavy {
        plan.push((Piece::Tight(0, Side::Left), false));
        plan.extend((0..d.n_tori).map(|i| (Piece::Wrap(i), false)));
    }

    let mut last = String::from("retries exhausted");
    for retry in 0..7 {
        let p = Params::new(&eps, retry, d);
        let mut link0 = next_link_id(f);
        let mut x = AugmentationLink::empty();
        let mut built = Ok(());
        for (inst, (piece, reversed)) in plan.iter().enumerate() {
            let comps = match build_piece(d, *piece, inst as u32, &p, link0) {
                Ok(c) => c,
                Err(e) => {
                    built = Err(e);
                    break;
                }
            };
            link0 += links_used(*piece);
            let comps: Vec<FrontComponent> = if *reversed {
                comps.iter().map(|c| c.reversed()).collect()
            } else {
                comps
            };
            match piece {
                Piece::Climb(_) => x.type2.extend(comps),
                _ => x.type1.extend(comps),
            }
        }
        if let Err(e) = built {
            last = e.to_string();
            continue;
        }
        let union = x.augmented(f);
        let report = validate_front(&union, d);
        if !report.is_valid() {
            last = report.violations.join("; ");
            continue;
        }
        match class_of_front(&union, d) {
            Ok(c) if c.iter().all(|v| *v == 0) => return Ok(x),
            Ok(c) => last = format!("augmented class came out nonzero: {c:?}"),
            Err(e) => last = e.to_string(),
        }
    }
    Err(AugmentError::Realization(last))
}

/// The union is nullhomologous in the cylinder exactly when the input was
/// augmentable; callers that need the status directly can ask here.
pub fn augmentable(f: &Front, d: &MorseDiagram) -> Result<bool, HomologyError> {
    Ok(matches!(
        nullhomology_status(f, d)?,
        NullStatus::InCylinder | NullStatus::InManifoldOnly
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus;

    fn class_of_link(x: &AugmentationLink, d: &MorseDiagram) -> H1Class {
        let comps = x
            .type2
            .iter()
            .chain(&x.type1)
            .cloned()
            .collect::<Vec<_>>();
        class_of_front(&Front::new(comps), d).unwrap()
    }

    #[test]
    fn class_zero_fronts_get_an_empty_link() {
        let d = corpus::disc_diagram();
        let f = corpus::unknot_front();
        assert!(build_augmentation(&f, &d).unwrap().is_empty());
    }

    #[test]
    fn overtwisted_disc_is_cancelled_by_one_climb() {
        let d = corpus::ot_s3_diagram();
        let f = corpus::ot_disc_front();
        let x = build_augmentation(&f, &d).unwrap();
        assert_eq!(x.type2.len(), 1);
        assert!(x.type1.is_empty());
        assert_eq!(class_of_link(&x, &d), vec![1]);
        let union = x.augmented(&f);
        assert!(validate_front(&union, &d).is_valid());
        assert_eq!(class_of_front(&union, &d).unwrap(), vec![0]);

        let rev = corpus::ot_disc_front_reversed();
        let xr = build_augmentation(&rev, &d).unwrap();
        assert_eq!(class_of_link(&xr, &d), vec![-1]);
    }

    #[test]
    fn lens_space_front_is_cancelled_by_one_climb() {
        let d = corpus::l21_diagram();
        let f = corpus::l21_front();
        let x = build_augmentation(&f, &d).unwrap();
        assert_eq!(x.type2.len(), 1);
        assert_eq!(class_of_link(&x, &d), vec![2]);
        assert_eq!(
            class_of_front(&x.augmented(&f), &d).unwrap(),
            vec![0]
        );
    }

    #[test]
    fn heavy_strategy_pads_with_class_zero_pieces() {
        let d = corpus::ot_s3_diagram();
        let f = corpus::ot_disc_front();
        let lean = build_augmentation_with(&f, &d, Strategy::Type2Heavy).unwrap();
        let heavy = build_augmentation_with(&f, &d, Strategy::Type1Heavy).unwrap();
        assert!(heavy.type1.len() > lean.type1.len());
        assert_eq!(class_of_link(&lean, &d), class_of_link(&heavy, &d));
        assert!(validate_front(&heavy.augmented(&f), &d).is_valid());
    }

    #[test]
    fn essential_classes_are_refused() {
        let d = corpus::punctured_torus_diagram();
        let f = corpus::ex3_front();
        assert_eq!(
            build_augmentation(&f, &d).unwrap_err(),
            AugmentError::NoSolution
        );
    }
}
