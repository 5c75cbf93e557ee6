//! Built-in example diagrams and fronts: the disc page of S³, the lens space
//! L(2,1), an overtwisted S³, and a punctured-torus page, together with the
//! reference fronts drawn on them.

use crate::diagram::{MorseDiagram, Orientation, Side, SlideEvent, TraceStrand};
use crate::front::{Front, FrontComponent, FrontEdge, FrontVertex};
use crate::geom::{q, reduce, Disp, PLPath, Q, Segment};

/// Build a t-monotone arc from lifted vertex coordinates: each segment's
/// displacement is the plain difference of consecutive lifted vertices.
pub fn arc(lifted: &[(Q, Q)]) -> PLPath {
    let segs = lifted
        .windows(2)
        .map(|w| {
            Segment::new(
                reduce(w[0].0.clone(), w[0].1.clone()),
                Disp::new(&w[1].0 - &w[0].0, &w[1].1 - &w[0].1),
            )
        })
        .collect();
    PLPath::new(segs)
}

fn pt(n: (i64, i64), d: (i64, i64)) -> (Q, Q) {
    (q(n.0, n.1), q(d.0, d.1))
}

/// One torus, no handles: the disc-page diagram of the standard tight S³.
pub fn disc_diagram() -> MorseDiagram {
    MorseDiagram {
        n_tori: 1,
        strands: vec![],
        slides: vec![],
    }
}

/// Two tori joined by one handle whose traces wrap once in s: L(2,1).
pub fn l21_diagram() -> MorseDiagram {
    let wrap = || {
        vec![arc(&[
            pt((3, 4), (0, 1)),
            pt((1, 4), (1, 2)),
            pt((-1, 4), (1, 1)),
        ])]
    };
    MorseDiagram {
        n_tori: 2,
        strands: vec![
            TraceStrand {
                id: 0,
                torus: 0,
                orientation: Orientation::Up,
                arcs: wrap(),
                pair: 0,
                close: 0,
            },
            TraceStrand {
                id: 1,
                torus: 1,
                orientation: Orientation::Down,
                arcs: wrap(),
                pair: 0,
                close: 1,
            },
        ],
        slides: vec![],
    }
}

/// Two tori joined by one handle, one trace wrapping and one vertical: an
/// overtwisted contact structure on S³.
pub fn ot_s3_diagram() -> MorseDiagram {
    MorseDiagram {
        n_tori: 2,
        strands: vec![
            TraceStrand {
                id: 0,
                torus: 0,
                orientation: Orientation::Up,
                arcs: vec![arc(&[
                    pt((3, 4), (0, 1)),
                    pt((1, 4), (1, 2)),
                    pt((-1, 4), (1, 1)),
                ])],
                pair: 0,
                close: 0,
            },
            TraceStrand {
                id: 1,
                torus: 1,
                orientation: Orientation::Down,
                arcs: vec![arc(&[
                    pt((1, 2), (0, 1)),
                    pt((1, 2), (1, 2)),
                    pt((1, 2), (1, 1)),
                ])],
                pair: 0,
                close: 1,
            },
        ],
        slides: vec![],
    }
}

/// One torus, two handles, one handle slide: a punctured-torus page whose
/// monodromy sends B to B−A.
pub fn punctured_torus_diagram() -> MorseDiagram {
    MorseDiagram {
        n_tori: 1,
        strands: vec![
            TraceStrand {
                id: 0,
                torus: 0,
                orientation: Orientation::Up,
                arcs: vec![arc(&[
                    pt((1, 8), (0, 1)),
                    pt((1, 8), (2, 5)),
                    pt((1, 8), (1, 1)),
                ])],
                pair: 0,
                close: 0,
            },
            TraceStrand {
                id: 1,
                torus: 0,
                orientation: Orientation::Down,
                arcs: vec![arc(&[
                    pt((3, 8), (0, 1)),
                    pt((3, 8), (3, 10)),
                    pt((3, 8), (1, 1)),
                ])],
                pair: 1,
                close: 1,
            },
            TraceStrand {
                id: 2,
                torus: 0,
                orientation: Orientation::Down,
                arcs: vec![
                    arc(&[
                        pt((5, 8), (0, 1)),
                        pt((5, 8), (47, 100)),
                        pt((7, 8), (1, 2)),
                    ]),
                    arc(&[pt((3, 8), (1, 2)), pt((5, 8), (1, 1))]),
                ],
                pair: 0,
                close: 2,
            },
            TraceStrand {
                id: 3,
                torus: 0,
                orientation: Orientation::Up,
                arcs: vec![arc(&[
                    pt((7, 8), (0, 1)),
                    pt((7, 8), (3, 5)),
                    pt((7, 8), (1, 1)),
                ])],
                pair: 1,
                close: 3,
            },
        ],
        slides: vec![SlideEvent {
            t: q(1, 2),
            moving: 0,
            stationary: 1,
            below_side: Side::Left,
            p1: reduce(q(7, 8), q(1, 2)),
            p2: reduce(q(3, 8), q(1, 2)),
        }],
    }
}

fn seg(ds: Q, dt: Q) -> FrontEdge {
    FrontEdge::Seg(Disp::new(ds, dt))
}

/// The 2-cusp unknot front on the disc diagram: one up-cusp, one down-cusp,
/// no crossings, no teleports.
pub fn unknot_front() -> Front {
    let v = vec![
        FrontVertex::cusp(0, reduce(q(1, 4), q(3, 4))),
        FrontVertex::cusp(0, reduce(q(3, 4), q(1, 4))),
        FrontVertex::regular(0, reduce(q(1, 2), q(3, 8))),
    ];
    let e = vec![
        seg(q(1, 2), q(-1, 2)),
        seg(q(-1, 4), q(1, 8)),
        seg(q(-1, 4), q(3, 8)),
    ];
    Front::new(vec![FrontComponent::closed(v, e)])
}

/// Boundary of the overtwisted disc, drawn on the overtwisted S³ diagram:
/// one arc per torus, joined by two teleport pairs through the handle.
pub fn ot_disc_front() -> Front {
    use Side::{Left, Right};
    let v = vec![
        FrontVertex::tele(0, reduce(q(1, 2), q(1, 4)), 0, Left, 0),
        FrontVertex::regular(0, reduce(q(7, 10), q(9, 20))),
        FrontVertex::cusp(0, reduce(q(1, 12), q(29, 48))),
        FrontVertex::tele(0, reduce(q(1, 4), q(1, 2)), 0, Left, 1),
        FrontVertex::tele(1, reduce(q(1, 2), q(1, 2)), 1, Right, 1),
        FrontVertex::cusp(1, reduce(q(3, 4), q(1, 8))),
        FrontVertex::tele(1, reduce(q(1, 2), q(1, 4)), 1, Right, 0),
    ];
    let e = vec![
        seg(q(-4, 5), q(1, 5)),
        seg(q(-37, 60), q(37, 240)),
        seg(q(1, 6), q(-5, 48)),
        FrontEdge::Jump,
        seg(q(1, 4), q(-3, 8)),
        seg(q(-1, 4), q(1, 8)),
        FrontEdge::Jump,
    ];
    Front::new(vec![FrontComponent::closed(v, e)])
}

/// The same curve traversed backwards.
pub fn ot_disc_front_reversed() -> Front {
    let f = ot_disc_front();
    Front::new(f.components.iter().map(|c| c.reversed()).collect())
}

/// A null-homologous-looking but homologically essential front on the
/// punctured-torus diagram: three teleport pairs, one zigzag of cusps.
pub fn ex3_front() -> Front {
    use Side::{Left, Right};
    let v = vec![
        FrontVertex::tele(0, reduce(q(3, 8), q(2, 5)), 1, Right, 2),
        FrontVertex::tele(0, reduce(q(7, 8), q(3, 10)), 3, Left, 0),
        FrontVertex::tele(0, reduce(q(3, 8), q(3, 10)), 1, Right, 0),
        FrontVertex::tele(0, reduce(q(1, 8), q(1, 5)), 0, Left, 1),
        FrontVertex::tele(0, reduce(q(5, 8), q(1, 5)), 2, Right, 1),
        FrontVertex::cusp(0, reduce(q(129, 200), q(19, 100))),
        FrontVertex::cusp(0, reduce(q(127, 200), q(43, 100))),
        FrontVertex::tele(0, reduce(q(7, 8), q(2, 5)), 3, Left, 2),
    ];
    let e = vec![
        seg(q(1, 2), q(-1, 10)),
        FrontEdge::Jump,
        seg(q(3, 4), q(-1, 10)),
        FrontEdge::Jump,
        seg(q(1, 50), q(-1, 100)),
        seg(q(-1, 100), q(6, 25)),
        seg(q(6, 25), q(-3, 100)),
        FrontEdge::Jump,
    ];
    Front::new(vec![FrontComponent::closed(v, e)])
}

/// A front on the L(2,1) diagram whose class is twice the torus generator:
/// null-homologous in the manifold but not in the page cylinder.
pub fn l21_front() -> Front {
    use Side::{Left, Right};
    let v = vec![
        FrontVertex::tele(0, reduce(q(1, 2), q(1, 4)), 0, Left, 0),
        FrontVertex::regular(0, reduce(q(7, 10), q(9, 20))),
        FrontVertex::cusp(0, reduce(q(1, 12), q(29, 48))),
        FrontVertex::tele(0, reduce(q(1, 4), q(1, 2)), 0, Left, 1),
        FrontVertex::tele(1, reduce(q(1, 4), q(1, 2)), 1, Right, 1),
        FrontVertex::regular(1, reduce(q(9, 10), q(7, 40))),
        FrontVertex::cusp(1, reduce(q(18, 25), q(93, 1000))),
        FrontVertex::tele(1, reduce(q(1, 2), q(1, 4)), 1, Right, 0),
    ];
    let e = vec![
        seg(q(-4, 5), q(1, 5)),
        seg(q(-37, 60), q(37, 240)),
        seg(q(1, 6), q(-5, 48)),
        FrontEdge::Jump,
        seg(q(13, 20), q(-13, 40)),
        seg(q(41, 50), q(-41, 500)),
        seg(q(-11, 50), q(157, 1000)),
        FrontEdge::Jump,
    ];
    Front::new(vec![FrontComponent::closed(v, e)])
}
