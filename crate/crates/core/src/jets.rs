//! 1-graphs `{(x, u(x), p) : p in D*u(x)}` of grid functions and their
//! Hausdorff distance in `T*T x R` with the flat sum metric.

use std::fmt;
use std::io::Write;

use rayon::prelude::*;

use crate::error::{LabError, Result};
use crate::fields::{torus_dist, GridFn};
use crate::io::fmt_real;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct JetPoint {
    pub x: f64,
    pub u: f64,
    pub p: f64,
}

impl JetPoint {
    pub fn new(x: f64, u: f64, p: f64) -> Self {
        Self { x, u, p }
    }
}

/// How a node's differentials were classified.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum JetKind {
    Smooth,
    /// Semiconcave corner: left slope exceeds right slope.
    Corner,
    /// Convex kink: right slope exceeds left slope (not semiconcave).
    ConvexKink,
}

impl JetKind {
    pub fn flag(self) -> u8 {
        match self {
            JetKind::Smooth => 0,
            JetKind::Corner => 1,
            JetKind::ConvexKink => 2,
        }
    }
}

/// Reachable differentials of one node: one slope, or the two one-sided slopes.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Differentials {
    pub kind: JetKind,
    pub slopes: [f64; 2],
}

impl Differentials {
    pub fn as_slice(&self) -> &[f64] {
        match self.kind {
            JetKind::Smooth => &self.slopes[..1],
            _ => &self.slopes[..],
        }
    }
}

pub fn default_corner_tol(f: &GridFn) -> f64 {
    10.0 * f.grid().h()
}

/// `D*f(x_i)` on the grid: both one-sided slopes at a kink whose slope jump
/// exceeds `corner_tol`, otherwise the central slope.
pub fn reachable_differentials(f: &GridFn, i: usize, corner_tol: f64) -> Differentials {
    let (left, right) = f.one_sided_slopes(i);
    if left - right > corner_tol {
        Differentials {
            kind: JetKind::Corner,
            slopes: [right, left],
        }
    } else if right - left > corner_tol {
        Differentials {
            kind: JetKind::ConvexKink,
            slopes: [right, left],
        }
    } else {
        let c = f.central_slope(i);
        Differentials {
            kind: JetKind::Smooth,
            slopes: [c, c],
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct JetCloud {
    pub points: Vec<JetPoint>,
    /// Classification of the node each point came from.
    pub kinds: Vec<JetKind>,
    pub source: String,
}

impl JetCloud {
    pub fn from_points(points: Vec<JetPoint>, source: impl Into<String>) -> Result<Self> {
        if points.is_empty() {
            return Err(LabError::EmptyCloud);
        }
        if let Some(k) = points
            .iter()
            .position(|q| !(q.x.is_finite() && q.u.is_finite() && q.p.is_finite()))
        {
            return Err(LabError::NonFiniteValue { index: k });
        }
        let kinds = vec![JetKind::Smooth; points.len()];
        Ok(Self {
            points,
            kinds,
            source: source.into(),
        })
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn convex_kinks(&self) -> usize {
        self.kinds.iter().filter(|k| **k == JetKind::ConvexKink).count()
    }

    /// Rows `x,u,p,corner_flag` (0 smooth, 1 corner, 2 convex kink).
    pub fn write_csv<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(out, "x,u,p,corner_flag")?;
        for (q, k) in self.points.iter().zip(&self.kinds) {
            writeln!(
                out,
                "{},{},{},{}",
                fmt_real(q.x),
                fmt_real(q.u),
                fmt_real(q.p),
                k.flag()
            )?;
        }
        Ok(())
    }
}

impl fmt::Display for JetCloud {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} ({} points)", self.source, self.points.len())
    }
}

pub fn extract_jets(f: &GridFn, corner_tol: f64) -> JetCloud {
    extract_jets_tagged(f, corner_tol, "grid function")
}

pub fn extract_jets_tagged(f: &GridFn, corner_tol: f64, source: impl Into<String>) -> JetCloud {
    let g = f.grid();
    let mut points = Vec::with_capacity(g.n() + 8);
    let mut kinds = Vec::with_capacity(g.n() + 8);
    for i in 0..g.n() {
        let d = reachable_differentials(f, i, corner_tol);
        for &p in d.as_slice() {
            points.push(JetPoint::new(g.node(i), f.values()[i], p));
            kinds.push(d.kind);
        }
    }
    JetCloud {
        points,
        kinds,
        source: source.into(),
    }
}

/// `min_{p in D*f(x_i)} p v`.
pub fn directional_derivative(f: &GridFn, i: usize, v: f64, corner_tol: f64) -> f64 {
    reachable_differentials(f, i, corner_tol)
        .as_slice()
        .iter()
        .map(|p| p * v)
        .fold(f64::INFINITY, f64::min)
}

pub fn jet_metric(a: &JetPoint, b: &JetPoint) -> f64 {
    torus_dist(a.x, b.x) + (a.u - b.u).abs() + (a.p - b.p).abs()
}

fn directed(a: &[JetPoint], b: &[JetPoint]) -> f64 {
    a.par_iter()
        .with_min_len(64)
        .map(|p| b.iter().map(|q| jet_metric(p, q)).fold(f64::INFINITY, f64::min))
        .reduce(|| 0.0, f64::max)
}

/// Exhaustive Hausdorff distance.
pub fn hausdorff(a: &JetCloud, b: &JetCloud) -> Result<f64> {
    if a.is_empty() || b.is_empty() {
        return Err(LabError::EmptyCloud);
    }
    Ok(directed(&a.points, &b.points).max(directed(&b.points, &a.points)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fields::TorusGrid;
    use proptest::prelude::*;
    use std::f64::consts::PI;

    fn tent(n: usize) -> GridFn {
        GridFn::from_fn(TorusGrid::new(n).unwrap(), |x| -(x - 0.5).abs())
    }

    #[test]
    fn smooth_function_has_one_jet_per_node() {
        let g = TorusGrid::new(256).unwrap();
        let f = GridFn::from_fn(g, |x| (2.0 * PI * x).sin() / (2.0 * PI));
        let cloud = extract_jets(&f, default_corner_tol(&f));
        assert_eq!(cloud.len(), 256);
        for q in &cloud.points {
            assert!((q.p - (2.0 * PI * q.x).cos()).abs() < 1e-3);
        }
    }

    #[test]
    fn tent_corner_has_both_slopes() {
        let f = tent(64);
        let cloud = extract_jets(&f, default_corner_tol(&f));
        let at_half: Vec<f64> = cloud
            .points
            .iter()
            .filter(|q| q.x == 0.5)
            .map(|q| q.p)
            .collect();
        assert_eq!(at_half, vec![-1.0, 1.0]);
        // the periodic tent also has a convex kink at x = 0
        assert_eq!(cloud.convex_kinks(), 2);
        assert_eq!(cloud.len(), 66);
    }

    #[test]
    fn constant_function_jets() {
        let f = GridFn::constant(TorusGrid::new(32).unwrap(), 1.5);
        let cloud = extract_jets(&f, default_corner_tol(&f));
        assert_eq!(cloud.len(), 32);
        assert!(cloud.points.iter().all(|q| q.p == 0.0 && q.u == 1.5));
    }

    #[test]
    fn directional_derivative_examples() {
        let f = tent(64);
        let tol = default_corner_tol(&f);
        let i = f.grid().nearest_node(0.5);
        assert_eq!(directional_derivative(&f, i, 1.0, tol), -1.0);
        assert_eq!(directional_derivative(&f, i, -1.0, tol), -1.0);
        let j = f.grid().nearest_node(0.25);
        assert_eq!(directional_derivative(&f, j, 2.0, tol), 2.0);
    }

    #[test]
    fn newton_leibniz_along_a_loop_segment() {
        let g = TorusGrid::new(256).unwrap();
        let f = GridFn::from_fn(g, |x| (2.0 * PI * x).sin() / (2.0 * PI) - 0.3 * (x - 0.5).abs());
        let tol = default_corner_tol(&f);
        let (a, b) = (10usize, 200usize);
        let mut integral = 0.0;
        for k in a..b {
            let d0 = directional_derivative(&f, k, 1.0, tol);
            let d1 = directional_derivative(&f, k + 1, 1.0, tol);
            integral += 0.5 * g.h() * (d0 + d1);
        }
        let exact = f.values()[b] - f.values()[a];
        assert!((integral - exact).abs() <= 10.0 * g.h());
    }

    #[test]
    fn metric_examples() {
        let o = JetPoint::new(0.0, 0.0, 0.0);
        assert_eq!(jet_metric(&o, &o), 0.0);
        assert_eq!(jet_metric(&o, &JetPoint::new(0.0, 0.0, 1.0)), 1.0);
        let d = jet_metric(&JetPoint::new(0.9, 0.0, 0.0), &JetPoint::new(0.1, 0.0, 0.0));
        assert!((d - 0.2).abs() < 1e-15);
    }

    #[test]
    fn hausdorff_examples() {
        let a = JetCloud::from_points(
            vec![JetPoint::new(0.0, 0.0, 0.0), JetPoint::new(0.5, 0.0, 0.0)],
            "a",
        )
        .unwrap();
        let b = JetCloud::from_points(vec![JetPoint::new(0.0, 0.0, 0.0)], "b").unwrap();
        assert_eq!(hausdorff(&a, &b).unwrap(), 0.5);
        assert_eq!(hausdorff(&a, &a).unwrap(), 0.0);
        assert!(matches!(
            JetCloud::from_points(vec![], "empty"),
            Err(LabError::EmptyCloud)
        ));
    }

    #[test]
    fn refinement_is_close_for_smooth_data() {
        let f = |x: f64| (2.0 * PI * x).cos() / 4.0;
        let coarse = GridFn::from_fn(TorusGrid::new(64).unwrap(), f);
        let fine = GridFn::from_fn(TorusGrid::new(128).unwrap(), f);
        let a = extract_jets(&coarse, default_corner_tol(&coarse));
        let mut b = extract_jets(&fine, default_corner_tol(&fine));
        b.points.retain(|q| (q.x * 64.0).fract() == 0.0);
        let d = hausdorff(&a, &b).unwrap();
        assert!(d <= 2.0 / 64.0, "{d}");
    }

    fn cloud_strategy() -> impl Strategy<Value = JetCloud> {
        prop::collection::vec((0.0..1.0f64, -2.0..2.0f64, -3.0..3.0f64), 1..24).prop_map(|v| {
            JetCloud::from_points(
                v.into_iter().map(|(x, u, p)| JetPoint::new(x, u, p)).collect(),
                "random",
            )
            .unwrap()
        })
    }

    proptest! {
        #[test]
        fn hausdorff_is_symmetric(a in cloud_strategy(), b in cloud_strategy()) {
            prop_assert_eq!(hausdorff(&a, &b).unwrap(), hausdorff(&b, &a).unwrap());
        }

        #[test]
        fn hausdorff_triangle(a in cloud_strategy(), b in cloud_strategy(), c in cloud_strategy()) {
            let ab = hausdorff(&a, &b).unwrap();
            let bc = hausdorff(&b, &c).unwrap();
            let ac = hausdorff(&a, &c).unwrap();
            prop_assert!(ac <= ab + bc + 1e-12);
        }

        #[test]
        fn extraction_projects_onto_graph(vals in prop::collection::vec(-1.0..1.0f64, 16..64)) {
            let g = TorusGrid::new(vals.len()).unwrap();
            let f = GridFn::new(g, vals).unwrap();
            let cloud = extract_jets(&f, default_corner_tol(&f));
            prop_assert!(cloud.len() >= g.n() && cloud.len() <= 2 * g.n());
            for q in &cloud.points {
                let i = g.nearest_node(q.x);
                prop_assert_eq!(q.u, f.values()[i]);
                prop_assert_eq!(q.x, g.node(i));
            }
        }
    }
}
