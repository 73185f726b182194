//! Parameterized scenarios with closed-form metric differentials.

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

use serde::Serialize;

use crate::derivatives::{DomainBox, MapOracle, TargetMap, PIECEWISE_TOL, SMOOTH_TOL};
use crate::error::{Error, Result};
use crate::fan::euclid_norm;
use crate::gauge::build_kuratowski_gauge;
use crate::linear_target::DualRole;
use crate::spaces::{Exponent, MetricSpace, Point};

pub type MdFn = Arc<dyn Fn(&[f64], &[f64]) -> f64 + Send + Sync>;
pub type JacobianFn = Arc<dyn Fn(&[f64]) -> Vec<Vec<f64>> + Send + Sync>;

/// Closed-form metric differential `(x, nu) -> md(f, x)(nu)`.
#[derive(Clone)]
pub struct AnalyticMd {
    pub formula: String,
    eval: MdFn,
}

impl AnalyticMd {
    pub fn new<F>(formula: impl Into<String>, eval: F) -> Self
    where
        F: Fn(&[f64], &[f64]) -> f64 + Send + Sync + 'static,
    {
        AnalyticMd {
            formula: formula.into(),
            eval: Arc::new(eval),
        }
    }

    pub fn eval(&self, x: &[f64], nu: &[f64]) -> f64 {
        (self.eval)(x, nu)
    }

    /// The seminorm `md(f, x)` at a fixed point.
    pub fn at<'a>(&'a self, x: &'a [f64]) -> impl Fn(&[f64]) -> f64 + Sync + 'a {
        move |nu| (self.eval)(x, nu)
    }
}

impl fmt::Debug for AnalyticMd {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("AnalyticMd").field("formula", &self.formula).finish()
    }
}

/// What the W^{1,p} differentiability check should show.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum W1pExpectation {
    /// Difference quotients equal the analytic seminorm for every step.
    Exact,
    /// Quotient norms are reported without a trend assertion.
    SmoothTrend,
    /// Quotient norms decrease with `h` down to the fitted seminorm's gauge gap.
    GaugePlateau,
}

/// Evidence that metric differentiability is strictly weaker than
/// differentiability in the target norm.
#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum LinearWitness {
    None,
    /// The signed quotient has different one-sided limits at these points.
    TwoSidedFailsAt(Vec<Vec<f64>>),
    /// Norm difference quotients are never Cauchy above the discretization scale.
    NormQuotientNotCauchy,
}

#[derive(Clone, Debug)]
pub struct Scenario {
    pub name: String,
    pub label: String,
    pub summary: String,
    pub formula: String,
    pub parameters: BTreeMap<String, f64>,
    pub map: MapOracle,
    pub analytic_md: Option<AnalyticMd>,
    pub jacobian: Option<Jacobian>,
    /// The map is affine, so difference quotients are exact.
    pub linear: bool,
    /// Finite-difference tolerance.
    pub tolerance: f64,
    /// Allowed gap between the fitted seminorm and the analytic one on the fan.
    pub consistency_tolerance: f64,
    pub halvings: usize,
    pub points: Vec<Vec<f64>>,
    /// Radius of the ring of domain points whose images anchor the gauge.
    pub ring_radius: f64,
    pub w1p: W1pExpectation,
    pub w1p_point: Vec<f64>,
    pub linear_witness: LinearWitness,
    pub compositions: Vec<TargetMap>,
    pub dual_role: DualRole,
}

/// Closed-form Jacobian of a map into a normed coordinate space.
#[derive(Clone)]
pub struct Jacobian(pub JacobianFn);

impl fmt::Debug for Jacobian {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("Jacobian")
    }
}

impl Scenario {
    pub fn jacobian(&self, x: &[f64]) -> Option<Vec<Vec<f64>>> {
        self.jacobian.as_ref().map(|j| (j.0)(x))
    }

    pub fn info(&self) -> ScenarioInfo {
        ScenarioInfo {
            name: self.name.clone(),
            label: self.label.clone(),
            summary: self.summary.clone(),
            formula: self.formula.clone(),
            parameters: self.parameters.clone(),
            domain_lower: self.map.domain().lower().to_vec(),
            domain_upper: self.map.domain().upper().to_vec(),
            target: self.map.target().id(),
            analytic_md: self.analytic_md.as_ref().map(|a| a.formula.clone()),
            tolerance: self.tolerance,
            consistency_tolerance: self.consistency_tolerance,
            halvings: self.halvings,
            points: self.points.clone(),
            ring_radius: self.ring_radius,
            linear: self.linear,
            dual_role: self.dual_role,
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct ScenarioInfo {
    pub name: String,
    pub label: String,
    pub summary: String,
    pub formula: String,
    pub parameters: BTreeMap<String, f64>,
    pub domain_lower: Vec<f64>,
    pub domain_upper: Vec<f64>,
    pub target: String,
    pub analytic_md: Option<String>,
    pub tolerance: f64,
    pub consistency_tolerance: f64,
    pub halvings: usize,
    pub points: Vec<Vec<f64>>,
    pub ring_radius: f64,
    pub linear: bool,
    pub dual_role: DualRole,
}

fn params(pairs: &[(&str, f64)]) -> BTreeMap<String, f64> {
    pairs.iter().map(|(k, v)| (k.to_string(), *v)).collect()
}

fn matvec(a: &[Vec<f64>], v: &[f64]) -> Vec<f64> {
    a.iter()
        .map(|row| row.iter().zip(v).map(|(x, y)| x * y).sum())
        .collect()
}

fn sup_norm(v: &[f64]) -> f64 {
    v.iter().fold(0.0_f64, |acc, x| acc.max(x.abs()))
}

fn linear(
    name: &str,
    domain: DomainBox,
    target: MetricSpace,
    a: Vec<Vec<f64>>,
) -> (MapOracle, Jacobian) {
    let op = a.clone();
    let map = MapOracle::new(name, domain, target, move |x| matvec(&op, x));
    let jac = a.clone();
    (map, Jacobian(Arc::new(move |_| jac.clone())))
}

fn square() -> DomainBox {
    DomainBox::cube(2, -1.0, 1.0).expect("valid box")
}

fn interval(lo: f64, hi: f64) -> DomainBox {
    DomainBox::cube(1, lo, hi).expect("valid box")
}

fn square_points() -> Vec<Vec<f64>> {
    vec![
        vec![0.0, 0.0],
        vec![0.3, -0.2],
        vec![-0.4, 0.1],
        vec![0.2, 0.45],
        vec![-0.25, -0.35],
    ]
}

fn linear_diag() -> Scenario {
    let a = vec![vec![1.0, 0.0], vec![0.0, 2.0]];
    let target = MetricSpace::euclidean(2).expect("valid space");
    let (map, jac) = linear("linear-diag", square(), target, a.clone());
    Scenario {
        name: "linear-diag".into(),
        label: "S1".into(),
        summary: "linear map diag(1,2) into the Euclidean plane".into(),
        formula: "f(x) = (x1, 2 x2)".into(),
        parameters: params(&[("a11", 1.0), ("a22", 2.0)]),
        map: map.with_lipschitz_bound(2.0),
        analytic_md: Some(AnalyticMd::new("|A nu|_2", move |_, nu| euclid_norm(&matvec(&a, nu)))),
        jacobian: Some(jac),
        linear: true,
        tolerance: SMOOTH_TOL,
        consistency_tolerance: SMOOTH_TOL,
        halvings: 8,
        points: square_points(),
        ring_radius: 0.1,
        w1p: W1pExpectation::Exact,
        w1p_point: vec![0.0, 0.0],
        linear_witness: LinearWitness::None,
        compositions: vec![TargetMap::Identity, TargetMap::Scale(0.5)],
        dual_role: DualRole::Bidual,
    }
}

fn linear_sup() -> Scenario {
    let a = vec![vec![1.0, 0.0], vec![0.0, 1.0], vec![1.0, 1.0]];
    let target = MetricSpace::lp(3, Exponent::Infinity).expect("valid space");
    let (map, jac) = linear("linear-sup", square(), target, a.clone());
    Scenario {
        name: "linear-sup".into(),
        label: "S1b".into(),
        summary: "linear map into the sup-norm space l^inf(3)".into(),
        formula: "f(x) = (x1, x2, x1 + x2)".into(),
        parameters: params(&[]),
        map: map.with_lipschitz_bound(2.0),
        analytic_md: Some(AnalyticMd::new("|A nu|_inf", move |_, nu| sup_norm(&matvec(&a, nu)))),
        jacobian: Some(jac),
        linear: true,
        tolerance: SMOOTH_TOL,
        consistency_tolerance: SMOOTH_TOL,
        halvings: 8,
        points: square_points(),
        ring_radius: 0.1,
        w1p: W1pExpectation::Exact,
        w1p_point: vec![0.0, 0.0],
        linear_witness: LinearWitness::None,
        compositions: vec![TargetMap::Identity, TargetMap::Scale(0.5)],
        dual_role: DualRole::Dual,
    }
}

fn abs_value() -> Scenario {
    let target = MetricSpace::euclidean(1).expect("valid space");
    let map = MapOracle::new("abs", interval(-1.0, 1.0), target, |x| vec![x[0].abs()]);
    Scenario {
        name: "abs".into(),
        label: "S2".into(),
        summary: "absolute value: metrically but not linearly differentiable at 0".into(),
        formula: "f(t) = |t|".into(),
        parameters: params(&[]),
        map: map.with_lipschitz_bound(1.0),
        analytic_md: Some(AnalyticMd::new("|nu|", |_, nu| nu[0].abs())),
        jacobian: Some(Jacobian(Arc::new(|x| vec![vec![x[0].signum()]]))),
        linear: false,
        tolerance: PIECEWISE_TOL,
        consistency_tolerance: SMOOTH_TOL,
        halvings: 8,
        points: vec![vec![0.0], vec![-0.6], vec![-0.3], vec![0.35], vec![0.7]],
        ring_radius: 0.1,
        w1p: W1pExpectation::Exact,
        w1p_point: vec![0.0],
        linear_witness: LinearWitness::TwoSidedFailsAt(vec![vec![0.0]]),
        compositions: vec![TargetMap::Identity, TargetMap::Scale(0.5)],
        dual_role: DualRole::Bidual,
    }
}

/// Cells of the discretized L^1 target of the isometric curve.
pub const L1_CELLS: usize = 4096;

fn l1_curve() -> Scenario {
    let cells = L1_CELLS;
    let target =
        MetricSpace::discretized_lebesgue(cells, Exponent::Finite(1.0), 1.0).expect("valid space");
    let map = MapOracle::new("l1-curve", interval(0.0, 1.0), target, move |t| {
        let w = 1.0 / cells as f64;
        (0..cells)
            .map(|i| ((t[0] - i as f64 * w) / w).clamp(0.0, 1.0))
            .collect()
    });
    let points = (0..24).map(|i| vec![0.05 + 0.9 * i as f64 / 23.0]).collect();
    Scenario {
        name: "l1-curve".into(),
        label: "S3".into(),
        summary: "isometric curve t -> indicator of [0,t] in L^1(0,1)".into(),
        formula: "f(t) = cell averages of chi_[0,t]".into(),
        parameters: params(&[("cells", cells as f64)]),
        map: map.with_lipschitz_bound(1.0),
        analytic_md: Some(AnalyticMd::new("|nu|", |_, nu| nu[0].abs())),
        jacobian: None,
        linear: false,
        tolerance: SMOOTH_TOL,
        consistency_tolerance: SMOOTH_TOL,
        halvings: 8,
        points,
        ring_radius: 0.04,
        w1p: W1pExpectation::Exact,
        w1p_point: vec![0.5],
        linear_witness: LinearWitness::NormQuotientNotCauchy,
        compositions: vec![
            TargetMap::Identity,
            TargetMap::Scale(0.5),
            TargetMap::RadialTruncation { radius: 0.5 },
        ],
        dual_role: DualRole::Bidual,
    }
}

fn coordinate_projection() -> Scenario {
    let target = MetricSpace::euclidean(1).expect("valid space");
    let (map, jac) = linear("coordinate-projection", square(), target, vec![vec![1.0, 0.0]]);
    Scenario {
        name: "coordinate-projection".into(),
        label: "S4".into(),
        summary: "rank-one map whose metric differential vanishes on a line".into(),
        formula: "f(x) = x1".into(),
        parameters: params(&[]),
        map: map.with_lipschitz_bound(1.0),
        analytic_md: Some(AnalyticMd::new("|nu1|", |_, nu| nu[0].abs())),
        jacobian: Some(jac),
        linear: true,
        tolerance: SMOOTH_TOL,
        consistency_tolerance: SMOOTH_TOL,
        halvings: 8,
        points: square_points(),
        ring_radius: 0.1,
        w1p: W1pExpectation::Exact,
        w1p_point: vec![0.1, -0.2],
        linear_witness: LinearWitness::None,
        compositions: vec![TargetMap::Identity, TargetMap::Scale(0.5)],
        dual_role: DualRole::Bidual,
    }
}

const CURVE_RADIUS: f64 = 0.8;
const CURVE_ANCHORS: usize = 16;

fn curve_anchors() -> Vec<Vec<f64>> {
    (0..CURVE_ANCHORS)
        .map(|k| {
            let theta = 2.0 * PI * k as f64 / CURVE_ANCHORS as f64 + 0.1;
            vec![2.0 * theta.cos(), 2.0 * theta.sin()]
        })
        .collect()
}

fn kuratowski_curve() -> Scenario {
    let plane = MetricSpace::euclidean(2).expect("valid space");
    let anchors: Vec<Point> = curve_anchors().into_iter().map(Point::new).collect();
    let embedding = build_kuratowski_gauge(&plane, &anchors).expect("valid anchors");
    let curve = MapOracle::new("circle-arc", interval(0.0, 1.0), plane, |t| {
        let s = PI * t[0];
        vec![CURVE_RADIUS * s.cos(), CURVE_RADIUS * s.sin()]
    });
    let map = curve
        .compose(&TargetMap::Kuratowski(embedding))
        .expect("embedding lives on the curve's target");
    let anchors = curve_anchors();
    let md = move |t: &[f64], nu: &[f64]| {
        let s = PI * t[0];
        let g = [CURVE_RADIUS * s.cos(), CURVE_RADIUS * s.sin()];
        let dg = [-PI * CURVE_RADIUS * s.sin(), PI * CURVE_RADIUS * s.cos()];
        anchors
            .iter()
            .map(|a| {
                let d = [g[0] - a[0], g[1] - a[1]];
                ((d[0] * dg[0] + d[1] * dg[1]) / euclid_norm(&d)).abs()
            })
            .fold(0.0, f64::max)
            * nu[0].abs()
    };
    Scenario {
        name: "kuratowski-curve".into(),
        label: "S5".into(),
        summary: "circular arc pushed through a 16-anchor Kuratowski embedding into l^inf(16)".into(),
        formula: "f(t) = (|a_k - g(t)| - |a_k|)_k, g(t) = 0.8 (cos pi t, sin pi t)".into(),
        parameters: params(&[("radius", CURVE_RADIUS), ("anchors", CURVE_ANCHORS as f64)]),
        map: map.with_lipschitz_bound(PI * CURVE_RADIUS),
        analytic_md: Some(AnalyticMd::new("max_k |u_k . g'(t)| |nu|", md)),
        jacobian: None,
        linear: false,
        tolerance: SMOOTH_TOL,
        consistency_tolerance: SMOOTH_TOL,
        halvings: 20,
        points: vec![vec![0.15], vec![0.3], vec![0.45], vec![0.6], vec![0.8]],
        ring_radius: 0.01,
        w1p: W1pExpectation::SmoothTrend,
        w1p_point: vec![0.45],
        linear_witness: LinearWitness::None,
        compositions: vec![TargetMap::Identity, TargetMap::Scale(0.5)],
        dual_role: DualRole::Dual,
    }
}

fn sqrt_spike() -> Scenario {
    let target = MetricSpace::euclidean(1).expect("valid space");
    let map = MapOracle::new("sqrt-spike", interval(-1.0, 1.0), target, |x| {
        vec![x[0].signum() * x[0].abs().sqrt()]
    });
    Scenario {
        name: "sqrt-spike".into(),
        label: "S6".into(),
        summary: "Sobolev but not Lipschitz: infinite slope at 0".into(),
        formula: "f(x) = sign(x) sqrt|x|".into(),
        parameters: params(&[]),
        map,
        analytic_md: Some(AnalyticMd::new("|nu| / (2 sqrt|x|)", |x, nu| {
            nu[0].abs() / (2.0 * x[0].abs().sqrt())
        })),
        jacobian: Some(Jacobian(Arc::new(|x| {
            vec![vec![1.0 / (2.0 * x[0].abs().sqrt())]]
        }))),
        linear: false,
        tolerance: SMOOTH_TOL,
        consistency_tolerance: SMOOTH_TOL,
        halvings: 20,
        points: vec![vec![-0.5], vec![-0.25], vec![0.25], vec![0.5], vec![0.7]],
        ring_radius: 0.01,
        w1p: W1pExpectation::SmoothTrend,
        w1p_point: vec![0.5],
        linear_witness: LinearWitness::None,
        compositions: vec![TargetMap::Identity, TargetMap::Scale(0.5)],
        dual_role: DualRole::Bidual,
    }
}

fn composition_pairs() -> Scenario {
    let a = vec![vec![1.0, 0.5], vec![-0.5, 1.0]];
    let plane = MetricSpace::euclidean(2).expect("valid space");
    let (map, jac) = linear("composition-pairs", square(), plane.clone(), a.clone());
    let anchors: Vec<Point> = (0..8)
        .map(|k| {
            let theta = 2.0 * PI * k as f64 / 8.0 + 0.2;
            Point::new(vec![1.5 * theta.cos(), 1.5 * theta.sin()])
        })
        .collect();
    let embedding = build_kuratowski_gauge(&plane, &anchors).expect("valid anchors");
    Scenario {
        name: "composition-pairs".into(),
        label: "S7".into(),
        summary: "linear map post-composed with Lipschitz maps of the target".into(),
        formula: "f(x) = (x1 + x2/2, x2 - x1/2); psi in {id, v/2, pi_R, Kuratowski}".into(),
        parameters: params(&[("truncation_radius", 0.5), ("embedding_anchors", 8.0)]),
        map: map.with_lipschitz_bound(1.25_f64.sqrt()),
        analytic_md: Some(AnalyticMd::new("|A nu|_2", move |_, nu| euclid_norm(&matvec(&a, nu)))),
        jacobian: Some(jac),
        linear: true,
        tolerance: SMOOTH_TOL,
        consistency_tolerance: SMOOTH_TOL,
        halvings: 8,
        points: vec![
            vec![0.0, 0.0],
            vec![0.6, 0.3],
            vec![-0.5, 0.4],
            vec![0.1, -0.2],
            vec![-0.3, -0.5],
        ],
        ring_radius: 0.1,
        w1p: W1pExpectation::Exact,
        w1p_point: vec![0.2, 0.1],
        linear_witness: LinearWitness::None,
        compositions: vec![
            TargetMap::Identity,
            TargetMap::Scale(0.5),
            TargetMap::RadialTruncation { radius: 0.5 },
            TargetMap::Kuratowski(embedding),
        ],
        dual_role: DualRole::Bidual,
    }
}

fn warp_jacobian(x: &[f64]) -> Vec<Vec<f64>> {
    vec![
        vec![1.0, 0.5 * x[1]],
        vec![0.5 * (2.0 * x[0]).cos(), 1.0],
        vec![0.5 * x[1], 0.5 * x[0]],
    ]
}

fn smooth_warp() -> Scenario {
    let target = MetricSpace::euclidean(3).expect("valid space");
    let map = MapOracle::new("smooth-warp", square(), target, |x| {
        vec![
            x[0] + 0.25 * x[1] * x[1],
            x[1] + 0.25 * (2.0 * x[0]).sin(),
            0.5 * x[0] * x[1],
        ]
    });
    Scenario {
        name: "smooth-warp".into(),
        label: "S8".into(),
        summary: "smooth nonlinear perturbation of the plane embedded in R^3".into(),
        formula: "f(x) = (x1 + x2^2/4, x2 + sin(2 x1)/4, x1 x2/2)".into(),
        parameters: params(&[]),
        map,
        analytic_md: Some(AnalyticMd::new("|Df(x) nu|_2", |x, nu| {
            euclid_norm(&matvec(&warp_jacobian(x), nu))
        })),
        jacobian: Some(Jacobian(Arc::new(warp_jacobian))),
        linear: false,
        tolerance: SMOOTH_TOL,
        consistency_tolerance: PIECEWISE_TOL,
        halvings: 20,
        points: vec![
            vec![0.0, 0.0],
            vec![0.2, -0.1],
            vec![-0.3, 0.25],
            vec![0.1, 0.35],
            vec![-0.2, -0.3],
        ],
        ring_radius: 0.01,
        w1p: W1pExpectation::GaugePlateau,
        w1p_point: vec![0.1, 0.05],
        linear_witness: LinearWitness::None,
        compositions: vec![
            TargetMap::Identity,
            TargetMap::Scale(0.5),
            TargetMap::RadialTruncation { radius: 0.25 },
        ],
        dual_role: DualRole::Bidual,
    }
}

/// All scenarios, in a fixed order.
pub fn catalog() -> Vec<Scenario> {
    vec![
        linear_diag(),
        linear_sup(),
        abs_value(),
        l1_curve(),
        coordinate_projection(),
        kuratowski_curve(),
        sqrt_spike(),
        composition_pairs(),
        smooth_warp(),
    ]
}

pub fn scenario_names() -> Vec<String> {
    catalog().into_iter().map(|s| s.name).collect()
}

/// Looks a scenario up by name or label (`S1`, ...).
pub fn find_scenario(name: &str) -> Result<Scenario> {
    catalog()
        .into_iter()
        .find(|s| s.name == name || s.label.eq_ignore_ascii_case(name))
        .ok_or_else(|| {
            Error::Config(format!(
                "unknown scenario '{name}'; available: {}",
                scenario_names().join(", ")
            ))
        })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fan::standard_fan;
    use crate::seminorm::{seminorm_axiom_check, STANDARD_SCALARS};

    #[test]
    fn names_unique_and_stable() {
        let names = scenario_names();
        assert!(names.len() >= 7);
        let mut sorted = names.clone();
        sorted.sort();
        sorted.dedup();
        assert_eq!(sorted.len(), names.len());
        assert_eq!(names, scenario_names());
    }

    #[test]
    fn analytic_md_are_seminorms() {
        for s in catalog() {
            let md = s.analytic_md.as_ref().unwrap();
            let fan = standard_fan(s.map.domain().dim());
            for x in &s.points {
                let d = seminorm_axiom_check(md.at(x), &fan, &STANDARD_SCALARS);
                assert!(d.homogeneity <= 1e-12, "{} {x:?}", s.name);
                assert!(d.subadditivity <= 1e-12, "{} {x:?}", s.name);
                assert!(d.min_value >= 0.0);
            }
        }
    }

    #[test]
    fn declared_analytic_forms() {
        let s3 = find_scenario("S3").unwrap();
        let md = s3.analytic_md.unwrap();
        assert_eq!(md.eval(&[0.4], &[-1.0]), 1.0);
        let s4 = find_scenario("coordinate-projection").unwrap();
        assert_eq!(s4.analytic_md.unwrap().eval(&[0.0, 0.0], &[0.3, 5.0]), 0.3);
    }

    #[test]
    fn jacobians_match_finite_differences() {
        for s in catalog() {
            let Some(_) = s.jacobian else { continue };
            for x in &s.points {
                if x.iter().any(|v| *v == 0.0) && s.name == "abs" {
                    continue;
                }
                let j = s.jacobian(x).unwrap();
                let n = x.len();
                for axis in 0..n {
                    let h = 1e-6;
                    let mut xp = x.clone();
                    let mut xm = x.clone();
                    xp[axis] += h;
                    xm[axis] -= h;
                    let fp = s.map.eval(&xp).unwrap();
                    let fm = s.map.eval(&xm).unwrap();
                    for (row, (a, b)) in fp.coords().iter().zip(fm.coords()).enumerate() {
                        let fd = (a - b) / (2.0 * h);
                        assert!((fd - j[row][axis]).abs() < 1e-6, "{} {x:?}", s.name);
                    }
                }
            }
        }
    }

    #[test]
    fn unknown_scenario_lists_catalog() {
        let err = find_scenario("nope").unwrap_err().to_string();
        assert!(err.contains("linear-diag") && err.contains("smooth-warp"));
    }

    #[test]
    fn declared_lipschitz_bounds_hold() {
        for s in catalog() {
            if let Some(bound) = s.map.lipschitz_bound() {
                let sample = s.map.domain().lattice(7);
                let l = s.map.empirical_lipschitz(&sample).unwrap();
                assert!(l <= bound + 1e-8, "{}: {l} > {bound}", s.name);
            }
        }
    }
}
