//! Planar polygons in a projected CRS.
//!
//! Rings are stored open (the closing vertex is dropped on construction).
//! Interior membership uses the even-odd rule across all rings, so holes
//! need no orientation.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Scalar;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Polygon<T> {
    pub exterior: Vec<(T, T)>,
    pub holes: Vec<Vec<(T, T)>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MultiPolygon<T>(pub Vec<Polygon<T>>);

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundingBox<T> {
    pub min_x: T,
    pub min_y: T,
    pub max_x: T,
    pub max_y: T,
}

impl<T: Scalar> BoundingBox<T> {
    pub fn contains(&self, x: T, y: T) -> bool {
        x >= self.min_x && x <= self.max_x && y >= self.min_y && y <= self.max_y
    }
}

fn open_ring<T: Scalar>(mut ring: Vec<(T, T)>) -> Vec<(T, T)> {
    if ring.len() > 1 && ring.first() == ring.last() {
        ring.pop();
    }
    ring
}

fn ring_signed_area<T: Scalar>(ring: &[(T, T)]) -> T {
    let n = ring.len();
    let mut acc = T::zero();
    for i in 0..n {
        let (x0, y0) = ring[i];
        let (x1, y1) = ring[(i + 1) % n];
        acc = acc + (x0 * y1 - x1 * y0);
    }
    acc / T::lit(2.0)
}

fn orient<T: Scalar>(p: (T, T), q: (T, T), r: (T, T)) -> T {
    (q.0 - p.0) * (r.1 - p.1) - (q.1 - p.1) * (r.0 - p.0)
}

fn on_segment<T: Scalar>(p: (T, T), q: (T, T), r: (T, T)) -> bool {
    r.0 >= p.0.min(q.0) && r.0 <= p.0.max(q.0) && r.1 >= p.1.min(q.1) && r.1 <= p.1.max(q.1)
}

fn segments_intersect<T: Scalar>(p1: (T, T), p2: (T, T), q1: (T, T), q2: (T, T)) -> bool {
    let d1 = orient(q1, q2, p1);
    let d2 = orient(q1, q2, p2);
    let d3 = orient(p1, p2, q1);
    let d4 = orient(p1, p2, q2);
    let z = T::zero();
    if ((d1 > z && d2 < z) || (d1 < z && d2 > z)) && ((d3 > z && d4 < z) || (d3 < z && d4 > z)) {
        return true;
    }
    (d1 == z && on_segment(q1, q2, p1))
        || (d2 == z && on_segment(q1, q2, p2))
        || (d3 == z && on_segment(p1, p2, q1))
        || (d4 == z && on_segment(p1, p2, q2))
}

fn check_ring<T: Scalar>(ring: &[(T, T)], what: &str) -> Result<()> {
    if ring.len() < 3 {
        return Err(Error::Validation(format!("{what} has fewer than 3 distinct vertices")));
    }
    if ring.iter().any(|&(x, y)| !x.is_finite() || !y.is_finite()) {
        return Err(Error::Validation(format!("{what} has non-finite coordinates")));
    }
    if ring_signed_area(ring) == T::zero() {
        return Err(Error::Validation(format!("{what} has zero area")));
    }
    let n = ring.len();
    for i in 0..n {
        let a = (ring[i], ring[(i + 1) % n]);
        for j in (i + 1)..n {
            // adjacent edges share a vertex by construction
            if j == i + 1 || (i == 0 && j == n - 1) {
                continue;
            }
            let b = (ring[j], ring[(j + 1) % n]);
            if segments_intersect(a.0, a.1, b.0, b.1) {
                return Err(Error::Validation(format!(
                    "{what} self-intersects between edges {i} and {j}"
                )));
            }
        }
    }
    Ok(())
}

impl<T: Scalar> Polygon<T> {
    pub fn new(exterior: Vec<(T, T)>, holes: Vec<Vec<(T, T)>>) -> Self {
        Self {
            exterior: open_ring(exterior),
            holes: holes.into_iter().map(open_ring).collect(),
        }
    }

    /// Axis-aligned rectangle.
    pub fn rect(min_x: T, min_y: T, max_x: T, max_y: T) -> Self {
        Self::new(
            vec![(min_x, min_y), (max_x, min_y), (max_x, max_y), (min_x, max_y)],
            vec![],
        )
    }

    pub fn area(&self) -> T {
        let holes: T = self.holes.iter().map(|h| ring_signed_area(h).abs()).sum();
        ring_signed_area(&self.exterior).abs() - holes
    }

    pub fn rings(&self) -> impl Iterator<Item = &[(T, T)]> {
        std::iter::once(self.exterior.as_slice()).chain(self.holes.iter().map(Vec::as_slice))
    }

    pub fn validate(&self) -> Result<()> {
        check_ring(&self.exterior, "exterior ring")?;
        for (i, h) in self.holes.iter().enumerate() {
            check_ring(h, &format!("hole {i}"))?;
        }
        if self.area() <= T::zero() {
            return Err(Error::Validation("polygon has non-positive area".into()));
        }
        Ok(())
    }
}

impl<T: Scalar> MultiPolygon<T> {
    pub fn single(polygon: Polygon<T>) -> Self {
        Self(vec![polygon])
    }

    pub fn polygons(&self) -> &[Polygon<T>] {
        &self.0
    }

    pub fn rings(&self) -> impl Iterator<Item = &[(T, T)]> {
        self.0.iter().flat_map(Polygon::rings)
    }

    pub fn area(&self) -> T {
        self.0.iter().map(Polygon::area).sum()
    }

    pub fn bbox(&self) -> Option<BoundingBox<T>> {
        let mut it = self.rings().flatten();
        let &(x0, y0) = it.next()?;
        let mut bb = BoundingBox {
            min_x: x0,
            min_y: y0,
            max_x: x0,
            max_y: y0,
        };
        for &(x, y) in it {
            bb.min_x = bb.min_x.min(x);
            bb.min_y = bb.min_y.min(y);
            bb.max_x = bb.max_x.max(x);
            bb.max_y = bb.max_y.max(y);
        }
        Some(bb)
    }

    /// Even-odd membership test. Points exactly on an edge may land on either side.
    pub fn contains(&self, x: T, y: T) -> bool {
        let mut inside = false;
        for ring in self.rings() {
            let n = ring.len();
            for i in 0..n {
                let (x0, y0) = ring[i];
                let (x1, y1) = ring[(i + 1) % n];
                if (y0 <= y) != (y1 <= y) {
                    let xi = x0 + (y - y0) * (x1 - x0) / (y1 - y0);
                    if x < xi {
                        inside = !inside;
                    }
                }
            }
        }
        inside
    }

    pub fn translated(&self, dx: T, dy: T) -> Self {
        let shift = |r: &Vec<(T, T)>| r.iter().map(|&(x, y)| (x + dx, y + dy)).collect::<Vec<_>>();
        Self(
            self.0
                .iter()
                .map(|p| Polygon {
                    exterior: shift(&p.exterior),
                    holes: p.holes.iter().map(shift).collect(),
                })
                .collect(),
        )
    }

    pub fn validate(&self) -> Result<()> {
        if self.0.is_empty() {
            return Err(Error::Validation("multipolygon has no parts".into()));
        }
        for p in &self.0 {
            p.validate()?;
        }
        Ok(())
    }
}
