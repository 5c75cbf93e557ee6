//! Multiplicities along trace curves and the total writhe, from which the
//! Thurston–Bennequin number of a nullhomologous Legendrian knot falls out
//! as `W - |cusps|/2`.

use crate::augment::{build_augmentation_with, AugmentError, Strategy};
use crate::diagram::{MorseDiagram, Orientation, StrandId};
use crate::events::extract_events;
use crate::front::{Front, FrontError};
use crate::geom::{qi, Q};
use crate::homology::{class_of_front, nullhomology_status, HomologyError, NullStatus};
use thiserror::Error;

#[derive(Error, Debug, Clone, PartialEq, Eq)]
pub enum InvariantError {
    #[error(transparent)]
    Front(#[from] FrontError),
    #[error(transparent)]
    Homology(#[from] HomologyError),
    #[error(transparent)]
    Augment(#[from] AugmentError),
    #[error("multiplicities cannot be assigned consistently: {0}")]
    InconsistentMultiplicities(String),
    #[error("the front has more than one component")]
    MultiComponent,
    #[error("the front crosses the closure seam")]
    FrontCrossesSeam,
    #[error("the front is not nullhomologous in the mapping torus")]
    NotNullhomologous,
}

/// A locally constant integer on one trace strand: `values[i]` holds on the
/// interval between `breaks[i-1]` and `breaks[i]`, and the bottom interval
/// always carries 0.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct StrandMultiplicity {
    pub breaks: Vec<Q>,
    pub values: Vec<i64>,
}

impl StrandMultiplicity {
    /// Value at a generic height (not a break).
    pub fn at(&self, t: &Q) -> i64 {
        self.values[self.breaks.partition_point(|b| b < t)]
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct MultiplicityAssignment {
    pub strands: Vec<StrandMultiplicity>,
}

impl MultiplicityAssignment {
    pub fn at(&self, strand: StrandId, t: &Q) -> i64 {
        self.strands[strand].at(t)
    }
}

enum SweepItem {
    Tele { strand: StrandId, delta: i64 },
    Slide { jumper: StrandId, host1: StrandId, host2: StrandId },
}

/// Assign a multiplicity to every trace-curve interval of a nullhomologous
/// front (typically a union Λ ∪ X): the bottom interval of each strand gets
/// 0, teleporting endpoints step the count by their sign, and a handle
/// slide's converging branches add at the arrival point while the departure
/// point splits them back off.
pub fn assign_multiplicities(
    f: &Front,
    d: &MorseDiagram,
) -> Result<MultiplicityAssignment, InvariantError> {
    let ev = extract_events(f, d)?;
    if !ev.seam_crossings.is_empty() {
        return Err(InvariantError::InconsistentMultiplicities(
            "the front crosses the closure seam".into(),
        ));
    }
    let class = class_of_front(f, d)?;
    if !class.iter().all(|c| *c == 0) {
        return Err(InvariantError::InconsistentMultiplicities(format!(
            "the front's class in the cylinder is {class:?}, not zero"
        )));
    }

    let mut sweep: Vec<(Q, SweepItem)> = Vec::new();
    for tp in &ev.teleports {
        sweep.push((
            tp.t.clone(),
            SweepItem::Tele {
                strand: tp.strand,
                delta: tp.sign(),
            },
        ));
    }
    for e in &d.slides {
        let (jumper, hosts) = (d.jumper_of(e), d.slide_hosts(e));
        let (Some(jumper), Some((host1, host2))) = (jumper, hosts) else {
            return Err(InvariantError::InconsistentMultiplicities(format!(
                "the slide at t={} has no identifiable jumper and hosts",
                e.t
            )));
        };
        sweep.push((e.t.clone(), SweepItem::Slide { jumper, host1, host2 }));
    }
    sweep.sort_by(|a, b| a.0.cmp(&b.0));

    let n = d.strands.len();
    let mut cur = vec![0i64; n];
    let mut out: Vec<StrandMultiplicity> = (0..n)
        .map(|_| StrandMultiplicity {
            breaks: Vec::new(),
            values: vec![0],
        })
        .collect();
    let record = |out: &mut Vec<StrandMultiplicity>, s: StrandId, t: &Q, v: i64| {
        out[s].breaks.push(t.clone());
        out[s].values.push(v);
    };
    for (t, item) in &sweep {
        match *item {
            SweepItem::Tele { strand, delta } => {
                cur[strand] += delta;
                record(&mut out, strand, t, cur[strand]);
            }
            SweepItem::Slide { jumper, host1, host2 } => {
                let j = cur[jumper];
                cur[host1] += j;
                cur[host2] -= j;
                record(&mut out, host1, t, cur[host1]);
                record(&mut out, host2, t, cur[host2]);
                record(&mut out, jumper, t, cur[jumper]);
            }
        }
    }

    // The closure glues each strand's top to a partner's bottom, which was
    // anchored at 0; a leftover count means no sheet assignment exists.
    for (s, v) in cur.iter().enumerate() {
        if *v != 0 {
            return Err(InvariantError::InconsistentMultiplicities(format!(
                "strand {s} ends with multiplicity {v} at the seam"
            )));
        }
    }
    // Paired strands must carry opposite counts at every height.
    for ids in d.pair_strands().values() {
        let (a, b) = (ids[0], ids[1]);
        let mut merged: Vec<Q> = out[a].breaks.iter().chain(&out[b].breaks).cloned().collect();
        merged.sort();
        merged.dedup();
        let mut lo = qi(0);
        for hi in merged.iter().chain([qi(1)].iter()) {
            let mid = (&lo + hi) / qi(2);
            if out[a].at(&mid) + out[b].at(&mid) != 0 {
                return Err(InvariantError::InconsistentMultiplicities(format!(
                    "paired strands {a} and {b} disagree at t={mid}"
                )));
            }
            lo = hi.clone();
        }
    }
    Ok(MultiplicityAssignment { strands: out })
}

/// Connected components of the trace pattern (strands glued along the
/// closure and at handle-slide trivalent points — pairing does not glue),
/// each with the sum of the signs of the front's teleporting endpoints on
/// it. A nullhomologous front sums to 0 on every component.
pub fn check_sign_sum(
    f: &Front,
    d: &MorseDiagram,
) -> Result<Vec<(Vec<StrandId>, i64)>, InvariantError> {
    let ev = extract_events(f, d)?;
    let n = d.strands.len();
    let mut parent: Vec<usize> = (0..n).collect();
    fn find(parent: &mut Vec<usize>, x: usize) -> usize {
        while parent[x] != x {
            parent[x] = parent[parent[x]];
            return find(parent, parent[x]);
        }
        x
    }
    let union = |parent: &mut Vec<usize>, a: usize, b: usize| {
        let (ra, rb) = (find(parent, a), find(parent, b));
        parent[ra] = rb;
    };
    for st in &d.strands {
        union(&mut parent, st.id, st.close);
    }
    for e in &d.slides {
        if let (Some(j), Some((h1, h2))) = (d.jumper_of(e), d.slide_hosts(e)) {
            union(&mut parent, j, h1);
            union(&mut parent, j, h2);
        }
    }
    let mut sums = vec![0i64; n];
    for tp in &ev.teleports {
        sums[find(&mut parent, tp.strand)] += tp.sign();
    }
    let mut comps: Vec<(Vec<StrandId>, i64)> = Vec::new();
    for root in 0..n {
        if find(&mut parent, root) != root {
            continue;
        }
        let members: Vec<StrandId> = (0..n).filter(|s| find(&mut parent, *s) == root).collect();
        comps.push((members, sums[root]));
    }
    Ok(comps)
}

/// The counts feeding the Thurston–Bennequin number: `P`/`N` are positive
/// and negative self-crossings of the knot's front, `T` weights each of its
/// trace-curve crossings (front on top, trace curve oriented upward) by the
/// interval multiplicity, and `W = P - N + T`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct WritheReport {
    pub p: usize,
    pub n: usize,
    pub t: i64,
    pub w: i64,
    pub cusp_count: usize,
    pub tb: i64,
}

/// Total writhe of a knot's front against an already-computed multiplicity
/// assignment (which normally comes from the front united with an
/// augmentation link).
pub fn total_writhe(
    f: &Front,
    d: &MorseDiagram,
    m: &MultiplicityAssignment,
) -> Result<WritheReport, InvariantError> {
    let ev = extract_events(f, d)?;
    let p = ev.self_crossings.iter().filter(|c| c.sign > 0).count();
    let n = ev.self_crossings.iter().filter(|c| c.sign < 0).count();
    let mut t_sum = 0i64;
    for c in &ev.trace_crossings {
        // Stored signs are against the strand's own orientation; the weight
        // convention reads every trace curve as upward-oriented.
        let upward = match d.strand(c.strand).orientation {
            Orientation::Up => c.sign,
            Orientation::Down => -c.sign,
        };
        t_sum += upward * m.at(c.strand, &c.at.t);
    }
    let cusp_count = ev.cusps.len();
    if cusp_count % 2 != 0 {
        return Err(InvariantError::InconsistentMultiplicities(format!(
            "odd cusp count {cusp_count}"
        )));
    }
    let w = p as i64 - n as i64 + t_sum;
    Ok(WritheReport {
        p,
        n,
        t: t_sum,
        w,
        cusp_count,
        tb: w - (cusp_count as i64) / 2,
    })
}

/// Thurston–Bennequin number of a one-component nullhomologous front:
/// augment, assign multiplicities to the union, then total the writhe of
/// the knot itself.
pub fn thurston_bennequin(f: &Front, d: &MorseDiagram) -> Result<WritheReport, InvariantError> {
    if f.components.len() != 1 {
        return Err(InvariantError::MultiComponent);
    }
    let ev = extract_events(f, d)?;
    if !ev.seam_crossings.is_empty() {
        return Err(InvariantError::FrontCrossesSeam);
    }
    if nullhomology_status(f, d)? == NullStatus::NotNull {
        return Err(InvariantError::NotNullhomologous);
    }
    let x = build_augmentation_with(f, d, Strategy::Type2Heavy)?;
    let m = assign_multiplicities(&x.augmented(f), d)?;
    total_writhe(f, d, &m)
}

/// Re-run the writhe with an augmentation assembled the other way; the
/// report must not change, which exercises the independence of the invariant
/// from the choice of X.
pub fn thurston_bennequin_via(
    f: &Front,
    d: &MorseDiagram,
    strategy: Strategy,
) -> Result<WritheReport, InvariantError> {
    if f.components.len() != 1 {
        return Err(InvariantError::MultiComponent);
    }
    let ev = extract_events(f, d)?;
    if !ev.seam_crossings.is_empty() {
        return Err(InvariantError::FrontCrossesSeam);
    }
    if nullhomology_status(f, d)? == NullStatus::NotNull {
        return Err(InvariantError::NotNullhomologous);
    }
    let x = build_augmentation_with(f, d, strategy)?;
    let m = assign_multiplicities(&x.augmented(f), d)?;
    total_writhe(f, d, &m)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::augment::build_augmentation;
    use crate::corpus;
    use crate::geom::q;

    #[test]
    fn unknots_have_tb_minus_one() {
        let d = corpus::disc_diagram();
        let f = corpus::unknot_front();
        let r = thurston_bennequin(&f, &d).unwrap();
        assert_eq!((r.p, r.n, r.t, r.w), (0, 0, 0, 0));
        assert_eq!(r.cusp_count, 2);
        assert_eq!(r.tb, -1);
    }

    #[test]
    fn overtwisted_boundary_has_tb_zero() {
        let d = corpus::ot_s3_diagram();
        let f = corpus::ot_disc_front();
        let x = build_augmentation(&f, &d).unwrap();
        let m = assign_multiplicities(&x.augmented(&f), &d).unwrap();
        // One climbing pair: counts descend to -2 on the upward strand and
        // mirror on its partner.
        assert_eq!(m.strands[0].values, vec![0, -1, -2, -1, 0]);
        assert_eq!(m.strands[1].values, vec![0, 1, 2, 1, 0]);
        assert_eq!(m.at(0, &q(7, 12)), -1);

        let r = thurston_bennequin(&f, &d).unwrap();
        assert_eq!((r.p, r.n), (0, 0));
        assert_eq!(r.t, 1);
        assert_eq!(r.w, 1);
        assert_eq!(r.cusp_count, 2);
        assert_eq!(r.tb, 0);

        let rev = thurston_bennequin(&corpus::ot_disc_front_reversed(), &d).unwrap();
        assert_eq!(rev.tb, 0);
    }

    #[test]
    fn lens_space_knot_has_tb_one() {
        let d = corpus::l21_diagram();
        let f = corpus::l21_front();
        let r = thurston_bennequin(&f, &d).unwrap();
        assert_eq!((r.p, r.n), (0, 0));
        assert_eq!(r.t, 2);
        assert_eq!(r.w, 2);
        assert_eq!(r.tb, 1);
    }

    #[test]
    fn essential_knots_are_rejected() {
        let d = corpus::punctured_torus_diagram();
        let f = corpus::ex3_front();
        assert_eq!(
            thurston_bennequin(&f, &d).unwrap_err(),
            InvariantError::NotNullhomologous
        );
        // Without the homology gate the raw assignment is refused too.
        assert!(matches!(
            assign_multiplicities(&f, &d).unwrap_err(),
            InvariantError::InconsistentMultiplicities(_)
        ));
    }

    #[test]
    fn sign_sums_vanish_on_nullhomologous_unions() {
        let d = corpus::ot_s3_diagram();
        let f = corpus::ot_disc_front();
        let x = build_augmentation(&f, &d).unwrap();
        for (_, sum) in check_sign_sum(&x.augmented(&f), &d).unwrap() {
            assert_eq!(sum, 0);
        }
        // The essential knot leaves a lone strand with an unmatched
        // endpoint.
        let comps =
            check_sign_sum(&corpus::ex3_front(), &corpus::punctured_torus_diagram()).unwrap();
        assert_eq!(comps.len(), 2);
        assert!(comps.iter().any(|(strands, sum)| strands == &vec![0] && *sum != 0));
    }

    #[test]
    fn writhe_does_not_depend_on_the_augmentation() {
        for (f, d) in [
            (corpus::ot_disc_front(), corpus::ot_s3_diagram()),
            (corpus::ot_disc_front_reversed(), corpus::ot_s3_diagram()),
            (corpus::l21_front(), corpus::l21_diagram()),
        ] {
            let lean = thurston_bennequin_via(&f, &d, Strategy::Type2Heavy).unwrap();
            let heavy = thurston_bennequin_via(&f, &d, Strategy::Type1Heavy).unwrap();
            assert_eq!(lean, heavy);
        }
    }

    #[test]
    fn unions_are_not_single_knots() {
        let d = corpus::ot_s3_diagram();
        let f = corpus::ot_disc_front();
        let x = build_augmentation(&f, &d).unwrap();
        assert_eq!(
            thurston_bennequin(&x.augmented(&f), &d).unwrap_err(),
            InvariantError::MultiComponent
        );
    }
}
