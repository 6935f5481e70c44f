//! Geometric forms of 3SUM-Indexing queries, with exact integer
//! predicates throughout.
//!
//! Three points on a cubic: `(a, a^3)`, `(c, c^3)` and `(-b, -b^3)` are
//! collinear exactly when `a + c = b` (for distinct abscissas).
//!
//! Polygon containment: the input becomes a comb with one pair of unit
//! height teeth per element, the query a narrower comb with a tooth at each
//! end; the query fits inside the input after a translation exactly when
//! its two teeth can sit on teeth for `a_i` and the mirror of `a_j` with
//! `a_i + a_j = b`. Tooth width is `1/4`, so coordinates are stored
//! multiplied by [`SCALE`].

use std::collections::HashMap;

use num_bigint::BigInt;

use crate::error::{Error, Result};
use crate::group::{GroupElement, GroupKind};
use crate::instance::{Instance, Witness};

/// Largest element magnitude accepted by the cubic reduction.
pub const MAX_3POL_VALUE: i128 = 1 << 40;
/// Coordinates are in units of the tooth width.
pub const SCALE: i128 = 4;

/// Integer values of a `k = 3` instance over `Z/mZ`, with the modulus.
fn integer_values(inst: &Instance) -> Result<(Vec<i128>, i128)> {
    if inst.k() != 3 {
        return Err(Error::Unsupported(format!(
            "geometric reductions need k = 3, got k = {}",
            inst.k()
        )));
    }
    let GroupKind::Modular(m) = inst.spec().kind() else {
        return Err(Error::Unsupported(
            "geometric reductions need integer (modular) elements".into(),
        ));
    };
    if m > MAX_3POL_VALUE as u128 {
        return Err(Error::Parameter(format!("modulus {m} exceeds 2^40")));
    }
    let values = inst.elements().iter().map(|g| g.value() as i128).collect();
    Ok((values, m as i128))
}

/// Integer targets whose residue is `b`: sums of two canonical
/// representatives lie in `[0, 2m)`, so `b` and `b + m`.
fn lifted_targets(b: GroupElement, m: i128) -> [i128; 2] {
    let b = b.value() as i128;
    [b, b + m]
}

fn witness(i: usize, j: usize) -> Witness {
    Witness::new(vec![i, j]).expect("distinct indices")
}

pub type Point = (i128, i128);

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PointSet {
    pub points: Vec<Point>,
}

fn cube(x: i128) -> Result<i128> {
    if x.abs() > MAX_3POL_VALUE {
        return Err(Error::Parameter(format!("|{x}| exceeds 2^40, its cube overflows")));
    }
    Ok(x * x * x)
}

/// The points `(a_i, a_i^3)`. Values must be pairwise distinct so the
/// points are.
pub fn to_3pol(values: &[i128]) -> Result<PointSet> {
    let mut sorted = values.to_vec();
    sorted.sort_unstable();
    if sorted.windows(2).any(|w| w[0] == w[1]) {
        return Err(Error::Parameter("3POL input needs pairwise distinct values".into()));
    }
    let points = values.iter().map(|&a| Ok((a, cube(a)?))).collect::<Result<_>>()?;
    Ok(PointSet { points })
}

pub fn query_3pol(b: i128) -> Result<Point> {
    Ok((-b, -cube(b)?))
}

/// Sign of the cross product `(q - p) x (r - p)`, computed exactly.
pub fn orientation(p: Point, q: Point, r: Point) -> std::cmp::Ordering {
    let narrow = || -> Option<i128> {
        let l = (q.0.checked_sub(p.0)?).checked_mul(r.1.checked_sub(p.1)?)?;
        let rr = (q.1.checked_sub(p.1)?).checked_mul(r.0.checked_sub(p.0)?)?;
        l.checked_sub(rr)
    };
    match narrow() {
        Some(d) => d.cmp(&0),
        None => {
            let big = |v: i128| BigInt::from(v);
            let d = (big(q.0) - big(p.0)) * (big(r.1) - big(p.1)) - (big(q.1) - big(p.1)) * (big(r.0) - big(p.0));
            d.sign().cmp(&num_bigint::Sign::NoSign)
        }
    }
}

pub fn collinear(p: Point, q: Point, r: Point) -> bool {
    orientation(p, q, r).is_eq()
}

/// Least pair `i < j` such that `p_i`, `p_j` and `q` are three distinct
/// collinear points.
pub fn collinear_witness(ps: &PointSet, q: Point) -> Option<(usize, usize)> {
    let pts = &ps.points;
    for i in 0..pts.len() {
        if pts[i] == q {
            continue;
        }
        for j in i + 1..pts.len() {
            if pts[j] != q && collinear(pts[i], pts[j], q) {
                return Some((i, j));
            }
        }
    }
    None
}

/// Answer a query through the cubic reduction.
pub fn solve_via_3pol(inst: &Instance, b: GroupElement) -> Result<Option<Witness>> {
    let (values, m) = integer_values(inst)?;
    let ps = to_3pol(&values)?;
    for target in lifted_targets(b, m) {
        if let Some((i, j)) = collinear_witness(&ps, query_3pol(target)?) {
            debug_assert_eq!(values[i] + values[j], target);
            return Ok(Some(witness(i, j)));
        }
    }
    Ok(None)
}

/// Closed axis-parallel rectangle in scaled coordinates.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct Rect {
    pub x0: i128,
    pub y0: i128,
    pub x1: i128,
    pub y1: i128,
}

impl Rect {
    fn contains_doubled(&self, x2: i128, y2: i128) -> bool {
        2 * self.x0 <= x2 && x2 <= 2 * self.x1 && 2 * self.y0 <= y2 && y2 <= 2 * self.y1
    }

    fn translate(&self, tx: i128, ty: i128) -> Rect {
        Rect {
            x0: self.x0 + tx,
            y0: self.y0 + ty,
            x1: self.x1 + tx,
            y1: self.y1 + ty,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Side {
    /// Tooth at `a`.
    Left,
    /// Tooth at `3 abar - a - eps`.
    Mirror,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Tooth {
    pub rect: Rect,
    pub side: Side,
    /// Elements whose value this tooth encodes.
    pub indices: Vec<usize>,
}

/// A base rectangle of height 1 with teeth of height 1 on top.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CombPolygon {
    pub abar: i128,
    pub base: Rect,
    pub teeth: Vec<Tooth>,
}

impl CombPolygon {
    pub fn rects(&self) -> impl Iterator<Item = Rect> + '_ {
        std::iter::once(self.base).chain(self.teeth.iter().map(|t| t.rect))
    }
}

fn tooth(x0: i128, side: Side, indices: Vec<usize>) -> Tooth {
    Tooth {
        rect: Rect {
            x0,
            y0: SCALE,
            x1: x0 + 1,
            y1: 2 * SCALE,
        },
        side,
        indices,
    }
}

/// The input comb for values in `[0, abar)`.
pub fn to_polygon(values: &[i128], abar: i128) -> Result<CombPolygon> {
    if let Some(&bad) = values.iter().find(|&&a| a < 0 || a >= abar) {
        return Err(Error::Parameter(format!("value {bad} outside [0, abar = {abar})")));
    }
    let mut by_value: HashMap<i128, Vec<usize>> = HashMap::new();
    for (i, &a) in values.iter().enumerate() {
        by_value.entry(a).or_default().push(i);
    }
    let mut distinct: Vec<(i128, Vec<usize>)> = by_value.into_iter().collect();
    distinct.sort_unstable();
    let width = 3 * abar * SCALE;
    let mut teeth = Vec::with_capacity(2 * distinct.len());
    for (a, idx) in &distinct {
        teeth.push(tooth(a * SCALE, Side::Left, idx.clone()));
    }
    for (a, idx) in distinct.iter().rev() {
        teeth.push(tooth(width - a * SCALE - 1, Side::Mirror, idx.clone()));
    }
    Ok(CombPolygon {
        abar,
        base: Rect {
            x0: 0,
            y0: 0,
            x1: width,
            y1: SCALE,
        },
        teeth,
    })
}

/// The query comb for `b`, or `None` when `b >= 2 abar` and no pair can
/// reach it.
pub fn query_polygon(b: i128, abar: i128) -> Option<CombPolygon> {
    if b >= 2 * abar || b < 0 {
        return None;
    }
    let width = (3 * abar - b) * SCALE;
    Some(CombPolygon {
        abar,
        base: Rect {
            x0: 0,
            y0: 0,
            x1: width,
            y1: SCALE,
        },
        teeth: vec![tooth(0, Side::Left, Vec::new()), tooth(width - 1, Side::Mirror, Vec::new())],
    })
}

/// A translation placing `q` inside `p`, with the pair of input elements
/// whose teeth hold `q`'s teeth. Found by matching tooth offsets; pairs
/// that would use one element twice are skipped.
pub fn containment_translation(p: &CombPolygon, q: &CombPolygon) -> Option<((i128, i128), (usize, usize))> {
    let span = q.teeth[1].rect.x0 - q.teeth[0].rect.x0;
    let mirrors: HashMap<i128, &Tooth> = p
        .teeth
        .iter()
        .filter(|t| t.side == Side::Mirror)
        .map(|t| (t.rect.x0, t))
        .collect();
    let mut best: Option<((i128, i128), (usize, usize))> = None;
    for left in p.teeth.iter().filter(|t| t.side == Side::Left) {
        let Some(right) = mirrors.get(&(left.rect.x0 + span)) else {
            continue;
        };
        let pair = left
            .indices
            .iter()
            .flat_map(|&i| right.indices.iter().map(move |&j| (i.min(j), i.max(j))))
            .filter(|(i, j)| i != j)
            .min();
        if let Some(pair) = pair {
            let t = (left.rect.x0 - q.teeth[0].rect.x0, 0);
            if best.is_none_or(|(_, bp)| pair < bp) {
                best = Some((t, pair));
            }
        }
    }
    best
}

/// Whether the closed rectangle `r` lies inside the union of `cover`,
/// decided on the grid of all rectangle edges.
pub fn rect_covered(r: Rect, cover: &[Rect]) -> bool {
    let breaks = |lo: i128, hi: i128, edges: &mut dyn Iterator<Item = i128>| {
        let mut v: Vec<i128> = edges.filter(|&e| lo < e && e < hi).collect();
        v.push(lo);
        v.push(hi);
        v.sort_unstable();
        v.dedup();
        v
    };
    let xs = breaks(r.x0, r.x1, &mut cover.iter().flat_map(|c| [c.x0, c.x1]));
    let ys = breaks(r.y0, r.y1, &mut cover.iter().flat_map(|c| [c.y0, c.y1]));
    xs.windows(2).all(|wx| {
        ys.windows(2).all(|wy| {
            let (cx, cy) = (wx[0] + wx[1], wy[0] + wy[1]);
            cover.iter().any(|c| c.contains_doubled(cx, cy))
        })
    })
}

/// Exact test of `q + (tx, ty) ⊆ p` by covering each of `q`'s rectangles.
pub fn contains_translated(p: &CombPolygon, q: &CombPolygon, tx: i128, ty: i128) -> bool {
    let cover: Vec<Rect> = p.rects().collect();
    q.rects().all(|r| rect_covered(r.translate(tx, ty), &cover))
}

/// All translations placing `q` in `p`, with `q`'s left tooth tried on
/// every tooth of `p` and containment checked from scratch.
pub fn translations_by_cover(p: &CombPolygon, q: &CombPolygon) -> Vec<(i128, i128)> {
    p.teeth
        .iter()
        .map(|t| (t.rect.x0 - q.teeth[0].rect.x0, 0))
        .filter(|&(tx, ty)| contains_translated(p, q, tx, ty))
        .collect()
}

/// Element pair held by the teeth under `q + t`'s teeth, skipping pairs
/// that use one element twice.
pub fn pair_for_translation(p: &CombPolygon, q: &CombPolygon, t: (i128, i128)) -> Option<(usize, usize)> {
    let under = |qt: &Tooth| p.teeth.iter().find(|pt| pt.rect == qt.rect.translate(t.0, t.1));
    let (l, r) = (under(&q.teeth[0])?, under(&q.teeth[1])?);
    l.indices
        .iter()
        .flat_map(|&i| r.indices.iter().map(move |&j| (i.min(j), i.max(j))))
        .filter(|(i, j)| i != j)
        .min()
}

/// `max(A) + 1`.
pub fn default_abar(values: &[i128]) -> i128 {
    values.iter().copied().max().map_or(1, |m| m + 1)
}

/// Answer a query through the comb reduction.
pub fn solve_via_polygon(inst: &Instance, abar: Option<i128>, b: GroupElement) -> Result<Option<Witness>> {
    let (values, m) = integer_values(inst)?;
    let abar = abar.unwrap_or_else(|| default_abar(&values));
    let p = to_polygon(&values, abar)?;
    for target in lifted_targets(b, m) {
        if let Some(q) = query_polygon(target, abar) {
            if let Some((_, (i, j))) = containment_translation(&p, &q) {
                return Ok(Some(witness(i, j)));
            }
        }
    }
    Ok(None)
}
