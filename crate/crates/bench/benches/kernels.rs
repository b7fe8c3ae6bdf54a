use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use refsde_bench::wandering_path;
use refsde_core::{
    euler_penalized, euler_projected, solve_penalized, solve_skorokhod, Coefficient, ConvexDomain, DriverSpec, Grid,
    HSpec, HalfSpace, Matrix, ZComponent,
};
use std::f64::consts::FRAC_1_SQRT_2;
use std::hint::black_box;

fn domains() -> Vec<(&'static str, ConvexDomain)> {
    let tri = ConvexDomain::polyhedron(
        vec![
            HalfSpace::new(vec![0.0, 1.0], 0.0).unwrap(),
            HalfSpace::new(vec![1.0, 0.0], 0.0).unwrap(),
            HalfSpace::new(vec![-FRAC_1_SQRT_2, -FRAC_1_SQRT_2], -FRAC_1_SQRT_2).unwrap(),
        ],
        vec![0.25, 0.25],
    )
    .unwrap();
    vec![
        (
            "half_space",
            ConvexDomain::half_space(vec![0.6, 0.8], 0.0, vec![0.6, 0.8]).unwrap(),
        ),
        (
            "cuboid",
            ConvexDomain::cuboid(vec![-1.0; 2], vec![1.0; 2], vec![0.0; 2]).unwrap(),
        ),
        ("ball", ConvexDomain::ball(vec![0.0; 2], 1.0, vec![0.0; 2]).unwrap()),
        ("triangle", tri),
    ]
}

fn projection(c: &mut Criterion) {
    let mut g = c.benchmark_group("projection");
    let y = wandering_path(2, 256, 0.8);
    let points: Vec<&[f64]> = y.values().collect();
    let mut out = [0.0; 2];
    for (name, dom) in domains() {
        g.bench_function(name, |b| {
            b.iter(|| {
                for p in &points {
                    dom.project_into(black_box(p), &mut out).unwrap();
                }
                out[0]
            })
        });
    }
    g.finish();
}

fn skorokhod(c: &mut Criterion) {
    let mut g = c.benchmark_group("skorokhod");
    for jumps in [100, 1000, 10_000] {
        let y = wandering_path(2, jumps, 0.5);
        for (name, dom) in domains() {
            g.bench_with_input(BenchmarkId::new(name, jumps), &y, |b, y| {
                b.iter(|| solve_skorokhod(&dom, y).unwrap())
            });
        }
    }
    g.finish();
}

fn penalized_exact(c: &mut Criterion) {
    let mut g = c.benchmark_group("solve_penalized");
    let dom = ConvexDomain::ball(vec![0.0; 2], 1.0, vec![0.0; 2]).unwrap();
    for jumps in [100, 1000, 10_000] {
        let y = wandering_path(2, jumps, 0.5);
        g.bench_with_input(BenchmarkId::from_parameter(jumps), &y, |b, y| {
            b.iter(|| solve_penalized(&dom, y, 1e3).unwrap())
        });
    }
    g.finish();
}

fn euler(c: &mut Criterion) {
    let mut g = c.benchmark_group("euler");
    let dom = ConvexDomain::half_line();
    let spec = DriverSpec::new(
        HSpec::Constant { x0: vec![0.0] },
        vec![ZComponent::Brownian {
            sigma: Matrix::identity(1),
        }],
    );
    let f = Coefficient::scalar(1.0);
    for cells in [1 << 8, 1 << 12] {
        let grid = Grid::uniform(1.0, cells).unwrap();
        let (h, z) = spec.sample(&grid, 7, 0).unwrap();
        g.bench_with_input(BenchmarkId::new("penalized", cells), &grid, |b, grid| {
            b.iter(|| euler_penalized(&dom, &f, &h, &z, 4096.0, grid).unwrap())
        });
        g.bench_with_input(BenchmarkId::new("projected", cells), &grid, |b, grid| {
            b.iter(|| euler_projected(&dom, &f, &h, &z, grid).unwrap())
        });
        g.bench_with_input(BenchmarkId::new("sample_driver", cells), &grid, |b, grid| {
            b.iter(|| spec.sample(grid, 7, black_box(1)).unwrap())
        });
    }
    g.finish();
}

fn moduli(c: &mut Criterion) {
    let mut g = c.benchmark_group("modulus");
    for jumps in [100, 1000] {
        let y = wandering_path(1, jumps, 1.0);
        g.bench_with_input(BenchmarkId::new("prime", jumps), &y, |b, y| {
            b.iter(|| y.modulus_prime(0.05, 1.0))
        });
        g.bench_with_input(BenchmarkId::new("second", jumps), &y, |b, y| {
            b.iter(|| y.modulus_second(0.05, 1.0))
        });
    }
    g.finish();
}

criterion_group!(benches, projection, skorokhod, penalized_exact, euler, moduli);
criterion_main!(benches);
