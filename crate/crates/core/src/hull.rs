//! Planar convex hulls for range-containment checks.

use num_complex::Complex64;

fn cross(o: Complex64, a: Complex64, b: Complex64) -> f64 {
    (a.re - o.re) * (b.im - o.im) - (a.im - o.im) * (b.re - o.re)
}

/// Counter-clockwise convex hull (Andrew's monotone chain), collinear points dropped.
pub fn convex_hull(points: &[Complex64]) -> Vec<Complex64> {
    let mut pts: Vec<Complex64> = points.to_vec();
    pts.sort_by(|a, b| a.re.total_cmp(&b.re).then(a.im.total_cmp(&b.im)));
    pts.dedup();
    if pts.len() < 3 {
        return pts;
    }
    let mut hull: Vec<Complex64> = Vec::with_capacity(2 * pts.len());
    for pass in 0..2 {
        let start = hull.len();
        let iter: Box<dyn Iterator<Item = &Complex64>> = if pass == 0 { Box::new(pts.iter()) } else { Box::new(pts.iter().rev()) };
        for &p in iter {
            while hull.len() >= start + 2 && cross(hull[hull.len() - 2], hull[hull.len() - 1], p) <= 0.0 {
                hull.pop();
            }
            hull.push(p);
        }
        hull.pop();
    }
    hull
}

fn segment_distance(p: Complex64, a: Complex64, b: Complex64) -> f64 {
    let ab = b - a;
    let len2 = ab.norm_sqr();
    if len2 == 0.0 {
        return (p - a).norm();
    }
    let t = (((p - a) * ab.conj()).re / len2).clamp(0.0, 1.0);
    (p - (a + ab * t)).norm()
}

/// Distance from `p` to the hull polygon, zero inside.
pub fn distance_outside(hull: &[Complex64], p: Complex64) -> f64 {
    match hull.len() {
        0 => f64::INFINITY,
        1 => (p - hull[0]).norm(),
        2 => segment_distance(p, hull[0], hull[1]),
        n => {
            let inside = (0..n).all(|i| cross(hull[i], hull[(i + 1) % n], p) >= 0.0);
            if inside {
                0.0
            } else {
                (0..n).map(|i| segment_distance(p, hull[i], hull[(i + 1) % n])).fold(f64::INFINITY, f64::min)
            }
        }
    }
}

/// A hull with logarithmic-time containment queries.
#[derive(Clone, Debug, PartialEq)]
pub struct ConvexHull {
    vertices: Vec<Complex64>,
}

impl ConvexHull {
    pub fn new(points: &[Complex64]) -> Self {
        Self { vertices: convex_hull(points) }
    }

    pub fn vertices(&self) -> &[Complex64] {
        &self.vertices
    }

    /// Point-in-polygon by binary search over the fan from the first vertex.
    pub fn contains(&self, p: Complex64) -> bool {
        let v = &self.vertices;
        if v.len() < 3 {
            return distance_outside(v, p) == 0.0;
        }
        match self.sector(p) {
            Some(k) => cross(v[k], v[k + 1], p) >= 0.0,
            None => false,
        }
    }

    /// Distance to the hull edges near the fan sector of `p`: an upper bound
    /// on [`Self::distance_outside`], exact when the nearest point is close.
    pub fn distance_upper(&self, p: Complex64) -> f64 {
        let v = &self.vertices;
        let n = v.len();
        if n < 3 || self.contains(p) {
            return self.distance_outside(p);
        }
        let k = self.sector(p).unwrap_or(0);
        (0..16)
            .map(|i| (k + n + i - 8) % n)
            .map(|i| segment_distance(p, v[i], v[(i + 1) % n]))
            .fold(f64::INFINITY, f64::min)
    }

    /// Index `k` with `p` inside the angle `v_k v_0 v_{k+1}`, if any.
    fn sector(&self, p: Complex64) -> Option<usize> {
        let v = &self.vertices;
        let n = v.len();
        if cross(v[0], v[1], p) < 0.0 || cross(v[0], v[n - 1], p) > 0.0 {
            return None;
        }
        // last k with p left of (v0, vk)
        let (mut lo, mut hi) = (1, n - 1);
        while hi - lo > 1 {
            let mid = (lo + hi) / 2;
            if cross(v[0], v[mid], p) >= 0.0 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        Some(lo)
    }

    pub fn distance_outside(&self, p: Complex64) -> f64 {
        if self.contains(p) {
            0.0
        } else {
            distance_outside(&self.vertices, p)
        }
    }
}

/// Largest distance of any query point outside the hull of `points`.
pub fn max_excess(points: &[Complex64], queries: &[Complex64]) -> f64 {
    let hull = ConvexHull::new(points);
    queries.iter().map(|&q| hull.distance_outside(q)).fold(0.0, f64::max)
}
