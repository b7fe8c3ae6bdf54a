//! Projection and reflection laws as property tests.

use proptest::prelude::*;
use refsde_core::{
    oracle_halfline, solve_penalized, solve_skorokhod, verify_solution, Cadlag, ConvexDomain, HalfSpace, StepPath,
    BOUNDARY_TOL,
};

fn dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt()
}

fn domains() -> Vec<ConvexDomain> {
    let s = std::f64::consts::FRAC_1_SQRT_2;
    vec![
        ConvexDomain::half_space(vec![0.6, 0.8], -0.5, vec![1.0, 1.0]).unwrap(),
        ConvexDomain::cuboid(vec![-1.0, 0.0], vec![1.0, 2.0], vec![0.0, 1.0]).unwrap(),
        ConvexDomain::ball(vec![0.5, -0.5], 1.5, vec![0.5, -0.5]).unwrap(),
        ConvexDomain::polyhedron(
            vec![
                HalfSpace::new(vec![1.0, 0.0], 0.0).unwrap(),
                HalfSpace::new(vec![0.0, 1.0], 0.0).unwrap(),
                HalfSpace::new(vec![-s, -s], -2.0).unwrap(),
            ],
            vec![0.5, 0.5],
        )
        .unwrap(),
    ]
}

fn pt() -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-6.0f64..6.0, 2)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(512))]

    #[test]
    fn projection_laws(x in pt(), y in pt(), lambda in 0.0f64..=1.0, which in 0usize..4) {
        let dom = &domains()[which];
        let px = dom.project_point(&x).unwrap();
        let py = dom.project_point(&y).unwrap();
        prop_assert!(dom.contains(&px, BOUNDARY_TOL));
        prop_assert!(dist(&dom.project_point(&px).unwrap(), &px) <= 1e-10);
        prop_assert!(dist(&px, &py) <= dist(&x, &y) + 1e-10);
        let on_ray: Vec<f64> = px.iter().zip(&x).map(|(p, v)| p + lambda * (v - p)).collect();
        prop_assert!(dist(&dom.project_point(&on_ray).unwrap(), &px) <= 1e-10);
        prop_assert!(dom.anchor_gap(&x).unwrap() >= -1e-9);
    }

    #[test]
    fn variational_inequality(x in pt(), which in 0usize..4, z in pt()) {
        // <x - Π(x), Π(x) - z'> >= 0 for z' in the domain.
        let dom = &domains()[which];
        let px = dom.project_point(&x).unwrap();
        let zp = dom.project_point(&z).unwrap();
        let inner: f64 = x.iter().zip(&px).zip(&zp).map(|((a, p), w)| (a - p) * (p - w)).sum();
        prop_assert!(inner >= -1e-9);
    }
}

fn scalar_driver(y0: f64, incs: &[f64]) -> StepPath {
    let n = incs.len();
    let mut times = vec![0.0];
    let mut vals = vec![y0];
    for (k, d) in incs.iter().enumerate() {
        times.push((k + 1) as f64 / (n + 1) as f64);
        vals.push(vals[k] + d);
    }
    StepPath::scalar(times, vals, 1.0).unwrap()
}

fn planar_driver(start: Vec<f64>, incs: &[Vec<f64>]) -> StepPath {
    let n = incs.len();
    let mut times = vec![0.0];
    let mut pts = vec![start];
    for (k, d) in incs.iter().enumerate() {
        times.push((k + 1) as f64 / (n + 1) as f64);
        let prev = &pts[k];
        pts.push(prev.iter().zip(d).map(|(a, b)| a + b).collect());
    }
    StepPath::from_points(times, &pts, 1.0).unwrap()
}

fn sup_diff(a: &StepPath, b: &StepPath) -> f64 {
    a.times()
        .iter()
        .chain(b.times())
        .map(|&t| dist(a.value_at(t), b.value_at(t)))
        .fold(0.0, f64::max)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn halfline_solver_matches_closed_form(y0 in 0.0f64..3.0, incs in prop::collection::vec(-2.0f64..2.0, 0..=50)) {
        let y = scalar_driver(y0, &incs);
        let s = solve_skorokhod(&ConvexDomain::half_line(), &y).unwrap();
        let o = oracle_halfline(&y).unwrap();
        prop_assert!(sup_diff(&s.x, &o.x) <= 1e-12);
        prop_assert!(sup_diff(&s.k, &o.k) <= 1e-12);
    }

    #[test]
    fn solutions_verify_and_regulator_variation_grows(
        which in 0usize..4,
        incs in prop::collection::vec(prop::collection::vec(-2.0f64..2.0, 2), 1..=30),
    ) {
        let dom = &domains()[which];
        let y = planar_driver(dom.anchor().to_vec(), &incs);
        let s = solve_skorokhod(dom, &y).unwrap();
        let r = verify_solution(dom, &s, 1e-8);
        prop_assert!(r.all_pass(), "{:?}", r);
        let mut last = 0.0;
        for &t in y.times() {
            let v = s.regulator_variation(t);
            prop_assert!(v >= last);
            last = v;
        }
    }

    #[test]
    fn interior_drivers_need_no_regulator(incs in prop::collection::vec(prop::collection::vec(-0.2f64..0.2, 2), 1..=20)) {
        // Total displacement stays below 0.3, well inside the ball.
        let scale = 1.0 / incs.len() as f64;
        let incs: Vec<Vec<f64>> = incs.iter().map(|v| v.iter().map(|c| c * scale).collect()).collect();
        let dom = &domains()[2];
        let y = planar_driver(dom.anchor().to_vec(), &incs);
        let s = solve_skorokhod(dom, &y).unwrap();
        prop_assert!(s.k.values().all(|v| v.iter().all(|c| *c == 0.0)));
        prop_assert_eq!(s.x, y);
    }

    #[test]
    fn reflection_is_stable_in_the_driver(
        which in 0usize..4,
        a in prop::collection::vec(prop::collection::vec(-2.0f64..2.0, 2), 12),
        b in prop::collection::vec(prop::collection::vec(-2.0f64..2.0, 2), 12),
    ) {
        // |x_t - x'_t|² <= |y_t - y'_t|² + 4 sup_s |y_s - y'_s| (|k|_t + |k'|_t)
        let dom = &domains()[which];
        let y1 = planar_driver(dom.anchor().to_vec(), &a);
        let y2 = planar_driver(dom.anchor().to_vec(), &b);
        let (s1, s2) = (solve_skorokhod(dom, &y1).unwrap(), solve_skorokhod(dom, &y2).unwrap());
        let mut sup_y = 0.0f64;
        for &t in y1.times() {
            let dy = dist(y1.value_at(t), y2.value_at(t));
            sup_y = sup_y.max(dy);
            let dx = dist(s1.x.value_at(t), s2.x.value_at(t));
            let var = s1.k.total_variation(t) + s2.k.total_variation(t);
            prop_assert!(dx * dx <= dy * dy + 4.0 * sup_y * var + 1e-9);
        }
    }

    #[test]
    fn penalized_path_stays_within_a_decaying_distance(
        incs in prop::collection::vec(-2.0f64..2.0, 1..=10),
        n in 1.0f64..1e4,
    ) {
        // Between jumps the distance to the domain shrinks by exactly e^{-nΔt}.
        let dom = ConvexDomain::half_line();
        let y = scalar_driver(1.0, &incs);
        let x = solve_penalized(&dom, &y, n).unwrap();
        for k in 0..x.len() {
            let t0 = x.times()[k];
            let t1 = x.times().get(k + 1).copied().unwrap_or(1.0);
            let start = (-x.start(k)[0]).max(0.0);
            let mid = 0.5 * (t0 + t1);
            let pen = (-x.eval(mid).unwrap()[0]).max(0.0);
            prop_assert!((pen - start * (-n * (mid - t0)).exp()).abs() <= 1e-12 * start.max(1.0));
        }
        let mut last = 0.0;
        for &t in x.times() {
            let v = x.penalty_variation(t);
            prop_assert!(v >= last);
            last = v;
        }
    }
}
