//! Residual assembly timings: classical scheme versus the deviation scheme
//! with recomputed or stored equilibrium data, on a cheap analytic column
//! and on the expensive disc equilibrium.

use criterion::{criterion_group, criterion_main, Criterion};
use std::hint::black_box;

use deltadg::dg::{self, Boundary, DgTables, Operator};
use deltadg::equilibria::{self, Equilibrium};
use deltadg::field::Field;
use deltadg::mesh::Mesh;
use deltadg::wb::{self, EqCache, Strategy};

struct Setup {
    eq: Equilibrium,
    mesh: Mesh,
    tables: DgTables,
    state: Field,
    delta: Field,
}

fn setup(eq: Equilibrium, n: usize, deg: usize) -> Setup {
    let mesh = if eq.dim == 1 {
        Mesh::new_1d(eq.bounds[0], n).unwrap()
    } else {
        Mesh::new_2d(eq.bounds[0], eq.bounds[1], n, n).unwrap()
    };
    let tables = DgTables::new(deg).unwrap();
    let state = Field::project_conserved(&mesh, deg, |x| eq.conserved_at(x)).unwrap();
    let delta = Field::zeros(&mesh, deg);
    Setup {
        eq,
        mesh,
        tables,
        state,
        delta,
    }
}

fn bench_case(c: &mut Criterion, name: &str, s: &Setup) {
    let op = Operator::new(&s.mesh, &s.tables, Boundary::Equilibrium, s.eq.gamma);
    let gravity = s.eq.gravity();
    let rec = EqCache::build(&s.eq, &s.mesh, &s.tables, Strategy::Recompute).unwrap();
    let mem = EqCache::build(&s.eq, &s.mesh, &s.tables, Strategy::Stored).unwrap();
    let mut out = vec![0.0; s.state.coeffs.len()];

    let mut group = c.benchmark_group(name);
    group.bench_function("classical", |b| {
        b.iter(|| {
            dg::residual(
                &op,
                Some(&s.eq),
                &gravity,
                black_box(&s.state.coeffs),
                0.0,
                &mut out,
            )
            .unwrap();
            black_box(&out);
        })
    });
    group.bench_function("wb_rec", |b| {
        b.iter(|| {
            wb::residual_wb(&op, &rec, &gravity, black_box(&s.delta.coeffs), 0.0, &mut out)
                .unwrap();
            black_box(&out);
        })
    });
    group.bench_function("wb_mem", |b| {
        b.iter(|| {
            wb::residual_wb(&op, &mem, &gravity, black_box(&s.delta.coeffs), 0.0, &mut out)
                .unwrap();
            black_box(&out);
        })
    });
    group.bench_function("cache_build_mem", |b| {
        b.iter(|| {
            black_box(EqCache::build(&s.eq, &s.mesh, &s.tables, Strategy::Stored).unwrap());
        })
    });
    group.finish();
}

fn benches(c: &mut Criterion) {
    let column = setup(equilibria::hydrostatic_1d(), 64, 2);
    bench_case(c, "hydro1d_N64_deg2", &column);
    let disc = setup(equilibria::disc(), 64, 2);
    bench_case(c, "disc_N64_deg2", &disc);
}

criterion_group!(benches_group, benches);
criterion_main!(benches_group);
