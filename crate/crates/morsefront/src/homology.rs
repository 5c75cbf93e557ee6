//! First homology of the presented manifold and homology classes of fronts,
//! computed in a basis of handle classes: one generator per strand pair,
//! with labels that evolve from bottom to top of the diagram as slides
//! re-route handles over one another.
//!
//! A front's class is the signed, label-weighted count of its crossings with
//! trace strands; passages through the closure seam are re-expressed through
//! the class of a vertical "elevator" loop at the crossing's s-coordinate.

use crate::diagram::{MorseDiagram, Orientation};
use crate::events::{extract_events, EventSet};
use crate::front::{Front, FrontEdge, FrontError};
use crate::geom::{qi, Q};
use crate::lattice::{invariant_factors, lattice_contains, Mat};
use num::{Signed, Zero};
use thiserror::Error;

#[derive(Error, Debug, Clone, PartialEq, Eq)]
pub enum HomologyError {
    #[error(transparent)]
    Front(#[from] FrontError),
    #[error("vertical class failed to cancel while reading a front's class")]
    PCancellationFailure,
}

/// A first-homology class in the handle basis: one coefficient per pair.
pub type H1Class = Vec<i128>;

/// Labels of every pair in every horizontal band between slide heights.
/// `bands[0]` holds the bottom labels (pair m ↦ basis vector m); each slide
/// adds the moving pair's label to the stationary pair's, signed by whether
/// the jumping strand runs with or against the strand it lands on.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Labels {
    pub bands: Vec<Vec<H1Class>>,
    pub boundaries: Vec<Q>,
}

impl Labels {
    /// Index of the band containing height `t` (callers keep events off the
    /// boundaries themselves).
    pub fn band_at(&self, t: &Q) -> usize {
        self.boundaries.iter().filter(|b| *b < t).count()
    }

    pub fn label(&self, band: usize, pair: usize) -> &H1Class {
        &self.bands[band][pair]
    }

    pub fn k(&self) -> usize {
        self.bands[0].len()
    }
}

fn add_scaled(acc: &mut H1Class, v: &H1Class, c: i128) {
    for (a, b) in acc.iter_mut().zip(v) {
        *a += c * b;
    }
}

/// Compute the per-band labels of all pairs on a valid diagram.
pub fn label_trace_curves(d: &MorseDiagram) -> Labels {
    let k = d.k();
    let mut band: Vec<H1Class> = (0..k)
        .map(|m| (0..k).map(|j| i128::from(j == m)).collect())
        .collect();
    let mut bands = vec![band.clone()];
    let mut boundaries = Vec::new();
    for e in &d.slides {
        let jumper = d
            .jumper_of(e)
            .expect("valid diagrams have a unique jumping strand per slide");
        let (y1, _) = d
            .slide_hosts(e)
            .expect("valid diagrams host both trivalent points");
        let sign = if d.strand(jumper).orientation == d.strand(y1).orientation {
            1
        } else {
            -1
        };
        let moving_label = band[e.moving].clone();
        add_scaled(&mut band[e.stationary], &moving_label, sign);
        bands.push(band.clone());
        boundaries.push(e.t.clone());
    }
    Labels { bands, boundaries }
}

/// The label content of each torus's cut edge: signed sum, over strand
/// passages through s=0, of the pair label in the band of the passage.
pub fn edge_classes(d: &MorseDiagram, labels: &Labels) -> Vec<H1Class> {
    let mut out = vec![vec![0i128; labels.k()]; d.n_tori];
    for ev in d.edge_events() {
        let strand = d.strand(ev.strand);
        let up = strand.orientation == Orientation::Up;
        let sign = if ev.leftward == up { 1 } else { -1 };
        let lbl = labels.label(labels.band_at(&ev.t), strand.pair);
        add_scaled(&mut out[ev.torus], lbl, sign);
    }
    out
}

/// The closure permutation on pairs: pair m's strands close into σ(m)'s.
pub fn closure_pair_permutation(d: &MorseDiagram) -> Vec<usize> {
    let pairs = d.pair_strands();
    let mut sigma = vec![0usize; pairs.len()];
    for (&m, strands) in &pairs {
        sigma[m] = d.strand(d.strand(strands[0]).close).pair;
    }
    sigma
}

/// Generators of the kernel lattice K: for each pair m the difference
/// between its top label and the bottom label of its closure image, plus the
/// differences of consecutive edge classes.
pub fn kernel_lattice(d: &MorseDiagram) -> Vec<H1Class> {
    let labels = label_trace_curves(d);
    let k = labels.k();
    let top = labels.bands.last().unwrap();
    let sigma = closure_pair_permutation(d);
    let mut gens: Vec<H1Class> = Vec::new();
    for m in 0..k {
        let mut g = top[m].clone();
        g[sigma[m]] -= 1;
        gens.push(g);
    }
    let edges = edge_classes(d, &labels);
    for w in edges.windows(2) {
        let diff: H1Class = w[0].iter().zip(&w[1]).map(|(a, b)| a - b).collect();
        gens.push(diff);
    }
    gens
}

/// Invariant factors of H₁ of the manifold: torsion coefficients (> 1)
/// followed by one 0 per free rank.
pub fn h1_of_manifold(d: &MorseDiagram) -> Vec<i128> {
    let gens = kernel_lattice(d);
    let k = d.k();
    if k == 0 {
        return Vec::new();
    }
    let rows: Mat = if gens.is_empty() {
        vec![vec![0; k]]
    } else {
        gens
    };
    let factors = invariant_factors(&rows);
    let rank = factors.len();
    let mut out: Vec<i128> = factors.into_iter().filter(|&f| f > 1).collect();
    out.extend(std::iter::repeat(0).take(k - rank));
    out
}

/// The action of the closure monodromy on the handle basis: column σ(m) is
/// the top label of pair m. Its determinant is ±1 on valid diagrams.
pub fn monodromy_matrix(d: &MorseDiagram) -> Mat {
    let labels = label_trace_curves(d);
    let k = labels.k();
    let top = labels.bands.last().unwrap();
    let sigma = closure_pair_permutation(d);
    let mut m = vec![vec![0i128; k]; k];
    for j in 0..k {
        for i in 0..k {
            m[i][sigma[j]] = top[j][i];
        }
    }
    m
}

/// The class of the upward vertical loop at `s` on `torus`: signed label sum
/// over the strand points it crosses. Degenerate when the line meets a
/// vertical strand portion, a strand vertex, or a slide-height point.
pub fn elevator_class(
    d: &MorseDiagram,
    labels: &Labels,
    torus: usize,
    s: &Q,
) -> Result<H1Class, FrontError> {
    let slide_ts = d.slide_ts();
    let mut acc = vec![0i128; labels.k()];
    for strand in d.strands.iter().filter(|x| x.torus == torus) {
        for seg in strand.segments() {
            if seg.disp.ds.is_zero() {
                if crate::geom::frac_q(seg.start.s.clone()) == crate::geom::frac_q(s.clone()) {
                    return Err(FrontError::NonGenericFront(format!(
                        "vertical line s={s} runs along strand {}",
                        strand.id
                    )));
                }
                continue;
            }
            // solve start.s + u*ds ≡ s (mod 1) for u in [0,1]
            let lo = if seg.disp.ds.is_positive() {
                seg.start.s.clone()
            } else {
                &seg.start.s + &seg.disp.ds
            };
            let hi = if seg.disp.ds.is_positive() {
                &seg.start.s + &seg.disp.ds
            } else {
                seg.start.s.clone()
            };
            let mut shift = lo.floor();
            while &shift + s <= hi {
                let target = &shift + s;
                if target >= lo {
                    let u = (&target - &seg.start.s) / &seg.disp.ds;
                    if u.is_zero() || u == qi(1) {
                        return Err(FrontError::NonGenericFront(format!(
                            "vertical line s={s} passes through a vertex of strand {}",
                            strand.id
                        )));
                    }
                    let t = crate::geom::frac_q(&seg.start.t + &u * &seg.disp.dt);
                    if slide_ts.contains(&t) || t.is_zero() {
                        return Err(FrontError::NonGenericFront(format!(
                            "vertical line s={s} meets strand {} at a non-generic height",
                            strand.id
                        )));
                    }
                    let up = strand.orientation == Orientation::Up;
                    // crossing sign of (upward line, oriented strand):
                    // -oriented horizontal speed
                    let leftward = seg.disp.ds.is_negative();
                    let sign = if leftward == up { 1 } else { -1 };
                    let lbl = labels.label(labels.band_at(&t), strand.pair);
                    add_scaled(&mut acc, lbl, sign);
                }
                shift += qi(1);
            }
        }
    }
    Ok(acc)
}

/// Outcome of comparing a front's class against zero and the kernel.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum NullStatus {
    /// Zero class and no seam passages: bounds inside the page cylinder.
    InCylinder,
    /// Class lies in the kernel lattice: null-homologous in the manifold.
    InManifoldOnly,
    NotNull,
}

impl std::fmt::Display for NullStatus {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            NullStatus::InCylinder => "in-cylinder",
            NullStatus::InManifoldOnly => "in-manifold-only",
            NullStatus::NotNull => "not-null",
        })
    }
}

/// The homology class of a front in the handle basis.
pub fn class_of_front(f: &Front, d: &MorseDiagram) -> Result<H1Class, HomologyError> {
    let ev = extract_events(f, d)?;
    check_vertical_cancellation(f, &ev)?;
    class_of_events(&ev, d)
}

/// Every seam passage contributes one unit of vertical class, and the
/// substitution by elevator classes consumes exactly one unit each; this
/// holds whenever each component's total t-displacement matches its seam
/// crossing balance. A mismatch means corrupted front data.
pub fn check_vertical_cancellation(f: &Front, ev: &EventSet) -> Result<(), HomologyError> {
    for (ci, c) in f.components.iter().enumerate() {
        let total: Q = c
            .edges
            .iter()
            .filter_map(|e| match e {
                FrontEdge::Seg(d) => Some(d.dt.clone()),
                FrontEdge::Jump => None,
            })
            .sum();
        let balance: i64 = ev
            .seam_crossings
            .iter()
            .filter(|sc| sc.front_seg.0 == ci)
            .map(|sc| if sc.upward { 1 } else { -1 })
            .sum();
        if total != qi(balance) {
            return Err(HomologyError::PCancellationFailure);
        }
    }
    Ok(())
}

/// Class computation from an already-extracted event set: label-weighted
/// trace crossings, with each seam passage re-expressed through the elevator
/// class at its s-coordinate (upward subtracts, downward adds).
pub fn class_of_events(ev: &EventSet, d: &MorseDiagram) -> Result<H1Class, HomologyError> {
    let labels = label_trace_curves(d);
    let mut acc = vec![0i128; labels.k()];
    for x in &ev.trace_crossings {
        let strand = d.strand(x.strand);
        let lbl = labels.label(labels.band_at(&x.at.t), strand.pair);
        add_scaled(&mut acc, lbl, i128::from(x.sign));
    }
    for sc in &ev.seam_crossings {
        let elev = elevator_class(d, &labels, sc.torus, &sc.s)?;
        let sign = if sc.upward { -1 } else { 1 };
        add_scaled(&mut acc, &elev, sign);
    }
    Ok(acc)
}

/// Where the front's class sits: zero, in the kernel, or essential.
pub fn nullhomology_status(f: &Front, d: &MorseDiagram) -> Result<NullStatus, HomologyError> {
    let ev = extract_events(f, d)?;
    check_vertical_cancellation(f, &ev)?;
    let class = class_of_events(&ev, d)?;
    Ok(status_of_class(&class, &ev, d))
}

pub fn status_of_class(class: &H1Class, ev: &EventSet, d: &MorseDiagram) -> NullStatus {
    if class.iter().all(|c| *c == 0) && ev.seam_crossings.is_empty() {
        return NullStatus::InCylinder;
    }
    let gens = kernel_lattice(d);
    if lattice_contains(&gens, class) {
        NullStatus::InManifoldOnly
    } else {
        NullStatus::NotNull
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus;
    use crate::geom::q;
    use crate::lattice::det;

    #[test]
    fn l21_labels_edges_and_h1() {
        let d = corpus::l21_diagram();
        let labels = label_trace_curves(&d);
        assert_eq!(labels.bands.len(), 1);
        let edges = edge_classes(&d, &labels);
        assert_eq!(edges, vec![vec![1], vec![-1]]);
        let gens = kernel_lattice(&d);
        assert_eq!(gens, vec![vec![0], vec![2]]);
        assert_eq!(h1_of_manifold(&d), vec![2]);
    }

    #[test]
    fn punctured_torus_labels_and_h1() {
        let d = corpus::punctured_torus_diagram();
        let labels = label_trace_curves(&d);
        assert_eq!(labels.bands.len(), 2);
        // the slide lands the down-oriented jumper on an up strand: B ↦ B - A
        assert_eq!(labels.bands[1], vec![vec![1, 0], vec![-1, 1]]);
        assert_eq!(labels.band_at(&q(1, 4)), 0);
        assert_eq!(labels.band_at(&q(3, 4)), 1);
        // no strand crosses the cut edge
        assert_eq!(edge_classes(&d, &labels), vec![vec![0, 0]]);
        assert_eq!(h1_of_manifold(&d), vec![0]);
    }

    #[test]
    fn spheres_have_trivial_h1() {
        assert_eq!(h1_of_manifold(&corpus::disc_diagram()), Vec::<i128>::new());
        assert_eq!(h1_of_manifold(&corpus::ot_s3_diagram()), Vec::<i128>::new());
    }

    #[test]
    fn monodromy_is_unimodular_on_corpus() {
        for d in [
            corpus::disc_diagram(),
            corpus::l21_diagram(),
            corpus::ot_s3_diagram(),
            corpus::punctured_torus_diagram(),
        ] {
            let m = monodromy_matrix(&d);
            if m.is_empty() {
                continue;
            }
            assert_eq!(det(&m).abs(), 1);
        }
    }

    #[test]
    fn front_classes_match_the_references() {
        let d = corpus::disc_diagram();
        assert_eq!(class_of_front(&corpus::unknot_front(), &d).unwrap(), vec![]);
        assert_eq!(
            nullhomology_status(&corpus::unknot_front(), &d).unwrap(),
            NullStatus::InCylinder
        );

        let d = corpus::ot_s3_diagram();
        assert_eq!(
            class_of_front(&corpus::ot_disc_front(), &d).unwrap(),
            vec![-1]
        );
        assert_eq!(
            nullhomology_status(&corpus::ot_disc_front(), &d).unwrap(),
            NullStatus::InManifoldOnly
        );
        assert_eq!(
            class_of_front(&corpus::ot_disc_front_reversed(), &d).unwrap(),
            vec![1]
        );

        let d = corpus::punctured_torus_diagram();
        assert_eq!(
            class_of_front(&corpus::ex3_front(), &d).unwrap(),
            vec![-2, 1]
        );
        assert_eq!(
            nullhomology_status(&corpus::ex3_front(), &d).unwrap(),
            NullStatus::NotNull
        );

        let d = corpus::l21_diagram();
        assert_eq!(class_of_front(&corpus::l21_front(), &d).unwrap(), vec![-2]);
        assert_eq!(
            nullhomology_status(&corpus::l21_front(), &d).unwrap(),
            NullStatus::InManifoldOnly
        );
    }

    #[test]
    fn elevator_classes_on_l21() {
        let d = corpus::l21_diagram();
        let labels = label_trace_curves(&d);
        // left of the wrap arc's sweep both strands cross any vertical line
        // once; strand 0 (up, leftward) counts +A on torus 0
        let e0 = elevator_class(&d, &labels, 0, &q(1, 3)).unwrap();
        assert_eq!(e0, vec![1]);
        let e1 = elevator_class(&d, &labels, 1, &q(1, 3)).unwrap();
        assert_eq!(e1, vec![-1]);
        // a vertical line through the strand's split vertex is degenerate
        assert!(elevator_class(&d, &labels, 0, &q(1, 4)).is_err());
    }
}
