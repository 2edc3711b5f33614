use std::hint::black_box;

use criterion::{criterion_group, criterion_main, Criterion};

use gramdfe_core::*;

fn random_psd(rng: &mut TrialRng, n: usize) -> HermitianGram {
    let m = CMatrix::new(
        n,
        n,
        (0..n * n).map(|_| rng.next_proper_complex(1.0)).collect(),
    )
    .unwrap();
    HermitianGram::new(
        m.matmul(&m.conj_transpose())
            .unwrap()
            .add(&CMatrix::identity(n).scale(0.5 * n as f64))
            .unwrap(),
    )
    .unwrap()
}

fn random_scenario(rng: &mut TrialRng, nx: usize, ny: usize, n_groups: usize) -> ChannelScenario {
    let h = CMatrix::new(
        ny,
        nx,
        (0..nx * ny).map(|_| rng.next_proper_complex(1.0)).collect(),
    )
    .unwrap();
    let per = nx / n_groups;
    let labels: Vec<String> = (0..nx).map(|i| format!("x{i}")).collect();
    let groups: Vec<(String, Vec<String>)> = (0..n_groups)
        .map(|g| {
            let end = if g == n_groups - 1 { nx } else { (g + 1) * per };
            (format!("g{g}"), labels[g * per..end].to_vec())
        })
        .collect();
    ChannelScenario::new(
        ScenarioKind::Mimo,
        h,
        random_psd(rng, nx),
        HermitianGram::from_real_diagonal(&vec![1.0; ny]).unwrap(),
        groups,
    )
    .unwrap()
}

fn bench_ldl(c: &mut Criterion) {
    let mut rng = TrialRng::for_trial(1, 0);
    for n in [8usize, 32] {
        let g = random_psd(&mut rng, n);
        c.bench_function(&format!("ldl_semidefinite/{n}"), |b| {
            b.iter(|| black_box(&g).ldl_semidefinite().unwrap())
        });
    }
}

fn bench_projection(c: &mut Criterion) {
    let mut rng = TrialRng::for_trial(2, 0);
    let scenario = random_scenario(&mut rng, 8, 8, 4);
    let joint = scenario.build_joint_gram().unwrap();
    let order: Vec<&str> = scenario.groups().iter().map(|(n, _)| n.as_str()).collect();
    c.bench_function("mmse_project/8x8", |b| {
        b.iter(|| mmse_project(black_box(&joint), &order, &[OBSERVATION_GROUP]).unwrap())
    });
    c.bench_function("incremental_rates/8in_4stages", |b| {
        b.iter(|| incremental_rates(black_box(&joint), &order).unwrap())
    });
    c.bench_function("dfe_filters/8in_4stages", |b| {
        b.iter(|| dfe_filters(black_box(&joint), &order).unwrap())
    });
}

fn bench_sampling(c: &mut Criterion) {
    let mut rng = TrialRng::for_trial(3, 0);
    let gram = random_psd(&mut rng, 8);
    let labels: Vec<String> = (0..8).map(|i| format!("v{i}")).collect();
    let set = GaussianSet::new(labels, gram).unwrap();
    let seed = SeedSpec::new(42);
    c.bench_function("sample_gaussian/dim8_1000trials", |b| {
        b.iter(|| sample_gaussian(black_box(&set), &seed, 1000).unwrap())
    });
}

fn bench_genie(c: &mut Criterion) {
    let mut rng = TrialRng::for_trial(4, 0);
    let scenario = random_scenario(&mut rng, 4, 4, 2);
    let joint = scenario.build_joint_gram().unwrap();
    let order: Vec<&str> = scenario.groups().iter().map(|(n, _)| n.as_str()).collect();
    let filters = dfe_filters(&joint, &order).unwrap();
    let seed = SeedSpec::new(42);
    c.bench_function("run_genie_dfe/4in_1000trials", |b| {
        b.iter(|| run_genie_dfe(black_box(&scenario), &order, &filters, &seed, 1000).unwrap())
    });
}

criterion_group!(benches, bench_ldl, bench_projection, bench_sampling, bench_genie);
criterion_main!(benches);
