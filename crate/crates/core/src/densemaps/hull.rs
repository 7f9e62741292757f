use ndarray::ArrayView2;

/// Convex hull of a 2-D point set, counter-clockwise without repeated endpoint.
#[derive(Clone, Debug, PartialEq)]
pub struct ConvexHull {
    pub vertices: Vec<[f64; 2]>,
}

fn cross(o: [f64; 2], a: [f64; 2], b: [f64; 2]) -> f64 {
    (a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0])
}

impl ConvexHull {
    /// Andrew's monotone chain. Non-finite rows are ignored.
    pub fn of_points(points: ArrayView2<'_, f64>) -> Self {
        let mut pts: Vec<[f64; 2]> = points
            .rows()
            .into_iter()
            .map(|r| [r[0], r[1]])
            .filter(|p| p[0].is_finite() && p[1].is_finite())
            .collect();
        pts.sort_by(|a, b| a[0].total_cmp(&b[0]).then(a[1].total_cmp(&b[1])));
        pts.dedup();
        if pts.len() < 3 {
            return Self { vertices: pts };
        }
        let mut lower: Vec<[f64; 2]> = Vec::new();
        for &p in &pts {
            while lower.len() >= 2 && cross(lower[lower.len() - 2], lower[lower.len() - 1], p) <= 0.0 {
                lower.pop();
            }
            lower.push(p);
        }
        let mut upper: Vec<[f64; 2]> = Vec::new();
        for &p in pts.iter().rev() {
            while upper.len() >= 2 && cross(upper[upper.len() - 2], upper[upper.len() - 1], p) <= 0.0 {
                upper.pop();
            }
            upper.push(p);
        }
        lower.pop();
        upper.pop();
        lower.extend(upper);
        Self { vertices: lower }
    }

    /// Boundary counts as inside. Degenerate hulls (fewer than 3 vertices) contain nothing.
    pub fn contains(&self, x: f64, y: f64) -> bool {
        let v = &self.vertices;
        if v.len() < 3 {
            return false;
        }
        (0..v.len()).all(|k| cross(v[k], v[(k + 1) % v.len()], [x, y]) >= 0.0)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::arr2;

    #[test]
    fn square_with_interior_points() {
        let pts = arr2(&[[0.0, 0.0], [1.0, 0.0], [0.5, 0.5], [1.0, 1.0], [0.0, 1.0], [0.2, 0.7]]);
        let h = ConvexHull::of_points(pts.view());
        assert_eq!(h.vertices.len(), 4);
        assert!(h.contains(0.5, 0.5));
        assert!(h.contains(1.0, 0.5));
        assert!(!h.contains(1.01, 0.5));
        assert!(!h.contains(-0.5, -0.5));
    }

    #[test]
    fn collinear_points_give_empty_interior() {
        let pts = arr2(&[[0.0, 0.0], [1.0, 1.0], [2.0, 2.0]]);
        let h = ConvexHull::of_points(pts.view());
        assert!(h.vertices.len() < 3);
        assert!(!h.contains(1.0, 1.0));
    }
}
