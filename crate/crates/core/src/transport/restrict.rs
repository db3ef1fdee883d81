//! Restriction of a factorizing reference measure to a union of axis-aligned
//! boxes, realised as the KR rearrangement `T̂` with `T̂♯ν = ν|A^c`.
//!
//! The box union is cut into disjoint grid cells. Given the already-mapped
//! prefix `x^{[i-1]}`, the conditional law of coordinate `i` is the reference
//! density times a piecewise-constant weight (the mass of the active cells in
//! the trailing coordinates), so its CDF is piecewise in the reference CDF and
//! inverts in closed form.

use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::map::TriangularMap;
use super::reference::{Interval, ReferenceMeasure};
use crate::{Error, Result};

/// Axis-aligned box in the reference domain.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AxisBox {
    pub bounds: Vec<Interval>,
}

impl AxisBox {
    pub fn new(bounds: Vec<(f64, f64)>) -> Self {
        AxisBox {
            bounds: bounds.into_iter().map(|(lo, hi)| Interval::new(lo, hi)).collect(),
        }
    }

    pub fn contains(&self, z: &[f64]) -> bool {
        self.bounds.iter().zip(z).all(|(b, &v)| b.contains(v))
    }
}

pub type Predicate = Arc<dyn Fn(&[f64]) -> bool + Send + Sync>;

/// The good set `A^c`, in reference coordinates.
#[derive(Clone)]
pub enum GoodSetSpec {
    /// Union of boxes; supported exactly by [`restrict_reference`].
    Boxes(Vec<AxisBox>),
    /// Membership predicate; usable for rejection sampling only.
    Predicate(Predicate),
}

impl fmt::Debug for GoodSetSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            GoodSetSpec::Boxes(b) => f.debug_tuple("Boxes").field(b).finish(),
            GoodSetSpec::Predicate(_) => f.write_str("Predicate(..)"),
        }
    }
}

impl GoodSetSpec {
    pub fn contains(&self, z: &[f64]) -> bool {
        match self {
            GoodSetSpec::Boxes(boxes) => boxes.iter().any(|b| b.contains(z)),
            GoodSetSpec::Predicate(p) => p(z),
        }
    }
}

#[derive(Clone, Debug)]
struct Cell {
    bounds: Vec<Interval>,
    /// `suffix_mass[i] = Π_{j>i} ν(bounds_j)`.
    suffix_mass: Vec<f64>,
}

#[derive(Clone, Debug)]
pub(crate) struct BoxRestriction {
    reference: ReferenceMeasure,
    cells: Vec<Cell>,
    /// Largest breakpoint per coordinate (upper edges there are closed).
    top: Vec<f64>,
    mass: f64,
}

impl BoxRestriction {
    pub(crate) fn dim(&self) -> usize {
        self.reference.dim
    }

    pub(crate) fn reference(&self) -> &ReferenceMeasure {
        &self.reference
    }

    fn build(reference: ReferenceMeasure, boxes: &[AxisBox]) -> Result<Self> {
        let d = reference.dim;
        if boxes.is_empty() {
            return Err(Error::DegenerateSet("the box union is empty".into()));
        }
        let dom = reference.coordinate_domain();
        let mut clipped = Vec::with_capacity(boxes.len());
        for b in boxes {
            if b.bounds.len() != d {
                return Err(Error::DimensionMismatch {
                    expected: d,
                    got: b.bounds.len(),
                });
            }
            let iv: Vec<Interval> = b
                .bounds
                .iter()
                .map(|iv| Interval::new(iv.lo.max(dom.lo), iv.hi.min(dom.hi)))
                .collect();
            if iv.iter().any(|iv| iv.lo.is_nan() || iv.hi.is_nan()) {
                return Err(Error::Parameter("box bounds must not be NaN".into()));
            }
            if iv.iter().all(|iv| reference.interval_mass(iv.lo, iv.hi) > 0.0) {
                clipped.push(iv);
            }
        }
        let breaks: Vec<Vec<f64>> = (0..d)
            .map(|i| {
                let mut v: Vec<f64> = clipped.iter().flat_map(|b| [b[i].lo, b[i].hi]).collect();
                v.sort_by(f64::total_cmp);
                v.dedup();
                v
            })
            .collect();
        let mut cells = Vec::new();
        if !clipped.is_empty() {
            let mut idx = vec![0usize; d];
            'outer: loop {
                let bounds: Vec<Interval> = (0..d)
                    .map(|i| Interval::new(breaks[i][idx[i]], breaks[i][idx[i] + 1]))
                    .collect();
                let inside = clipped
                    .iter()
                    .any(|b| b.iter().zip(&bounds).all(|(bb, c)| bb.lo <= c.lo && c.hi <= bb.hi));
                let masses: Vec<f64> = bounds.iter().map(|c| reference.interval_mass(c.lo, c.hi)).collect();
                if inside && masses.iter().all(|&m| m > 0.0) {
                    let mut suffix_mass = vec![1.0; d];
                    for i in (0..d.saturating_sub(1)).rev() {
                        suffix_mass[i] = suffix_mass[i + 1] * masses[i + 1];
                    }
                    cells.push(Cell { bounds, suffix_mass });
                }
                for axis in (0..d).rev() {
                    idx[axis] += 1;
                    if idx[axis] + 1 < breaks[axis].len() {
                        continue 'outer;
                    }
                    idx[axis] = 0;
                }
                break;
            }
        }
        let mass: f64 = cells
            .iter()
            .map(|c| c.suffix_mass[0] * reference.interval_mass(c.bounds[0].lo, c.bounds[0].hi))
            .sum();
        if cells.is_empty() || !(mass > 0.0) {
            return Err(Error::DegenerateSet("the good set has zero reference measure".into()));
        }
        let top = breaks.iter().map(|b| *b.last().unwrap()).collect();
        Ok(BoxRestriction {
            reference,
            cells,
            top,
            mass,
        })
    }

    /// Reference mass of the good set.
    pub(crate) fn mass(&self) -> f64 {
        self.mass
    }

    fn active<'a>(&'a self, x: &[f64], closed: bool) -> Vec<&'a Cell> {
        self.cells
            .iter()
            .filter(|c| {
                c.bounds.iter().zip(x).enumerate().all(|(j, (b, &v))| {
                    if closed {
                        b.contains(v)
                    } else {
                        v >= b.lo && (v < b.hi || (v == b.hi && b.hi == self.top[j]))
                    }
                })
            })
            .collect()
    }

    pub(crate) fn eval_prefix(&self, z: &[f64]) -> Vec<f64> {
        let r = &self.reference;
        let mut x: Vec<f64> = Vec::with_capacity(z.len());
        for (i, &zi) in z.iter().enumerate() {
            let mut act = self.active(&x, false);
            if act.is_empty() {
                act = self.active(&x, true);
            }
            if act.is_empty() {
                // prefix fell outside the union through rounding; stay on the closest cell
                act = self.cells.iter().collect();
            }
            // merge cells sharing the same interval in coordinate i
            let mut segs: Vec<(Interval, f64)> = Vec::new();
            for c in act {
                let iv = c.bounds[i];
                match segs.iter_mut().find(|(s, _)| *s == iv) {
                    Some(s) => s.1 += c.suffix_mass[i],
                    None => segs.push((iv, c.suffix_mass[i])),
                }
            }
            segs.sort_by(|a, b| a.0.lo.total_cmp(&b.0.lo));
            let masses: Vec<f64> = segs.iter().map(|(iv, w)| w * r.interval_mass(iv.lo, iv.hi)).collect();
            let total: f64 = masses.iter().sum();
            let target = r.cdf(zi) * total;
            let mut cum = 0.0;
            let mut out = segs.last().unwrap().0.hi;
            for ((iv, w), m) in segs.iter().zip(&masses) {
                if target <= cum + m {
                    let p = r.cdf(iv.lo) + (target - cum) / w;
                    out = r.quantile(p).clamp(iv.lo, iv.hi);
                    break;
                }
                cum += m;
            }
            x.push(out);
        }
        x
    }
}

/// KR map `T̂` pushing `ν^d` onto `ν^d` restricted to the good set.
pub fn restrict_reference(reference: &ReferenceMeasure, good: &GoodSetSpec) -> Result<TriangularMap> {
    match good {
        GoodSetSpec::Boxes(boxes) => Ok(TriangularMap::from_restriction(BoxRestriction::build(
            *reference, boxes,
        )?)),
        GoodSetSpec::Predicate(_) => Err(Error::Parameter(
            "predicate good sets support rejection sampling only".into(),
        )),
    }
}

/// Reference measure of a box-union good set.
pub fn good_set_mass(reference: &ReferenceMeasure, boxes: &[AxisBox]) -> Result<f64> {
    Ok(BoxRestriction::build(*reference, boxes)?.mass())
}
