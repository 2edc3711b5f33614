//! Acceptance suite: one test per criterion, each printing a PASS line with
//! the measured figures. Run with `--nocapture` to see the lines:
//!
//! ```text
//! cargo test -p gramdfe-core --test acceptance -- --nocapture
//! ```

use std::time::Instant;

use gramdfe_core::*;
use num_complex::Complex64;


fn shuffle<T>(rng: &mut TrialRng, items: &mut [T]) {
    for i in (1..items.len()).rev() {
        let j = (rng.next_u64() % (i as u64 + 1)) as usize;
        items.swap(i, j);
    }
}

fn random_matrix(rng: &mut TrialRng, rows: usize, cols: usize, var: f64) -> CMatrix {
    CMatrix::new(
        rows,
        cols,
        (0..rows * cols).map(|_| rng.next_proper_complex(var)).collect(),
    )
    .unwrap()
}

fn random_psd(rng: &mut TrialRng, n: usize, ridge: f64) -> HermitianGram {
    let m = random_matrix(rng, n, n, 1.0);
    HermitianGram::new(
        m.matmul(&m.conj_transpose())
            .unwrap()
            .add(&CMatrix::identity(n).scale(ridge))
            .unwrap(),
    )
    .unwrap()
}

/// Random full-rank joint gram over groups of the given sizes.
fn random_joint(rng: &mut TrialRng, sizes: &[usize]) -> JointGram {
    let n: usize = sizes.iter().sum();
    let gram = random_psd(rng, n, 0.5 * n as f64);
    let mut groups = Vec::new();
    let mut label = 0;
    for (gi, &sz) in sizes.iter().enumerate() {
        let labels = (0..sz)
            .map(|_| {
                label += 1;
                format!("l{label}")
            })
            .collect();
        groups.push((format!("g{gi}"), labels));
    }
    JointGram::new(groups, gram).unwrap()
}

/// Random channel scenario: nx inputs split into n_groups stages, ny
/// observations, random full-rank input gram, white noise.
fn random_scenario(rng: &mut TrialRng, nx: usize, ny: usize, n_groups: usize) -> ChannelScenario {
    let h = random_matrix(rng, ny, nx, 1.0);
    let input = random_psd(rng, nx, 0.5 * nx as f64);
    let sigma2 = 0.5 + rng.next_f64() * 1.5;
    let noise = HermitianGram::from_real_diagonal(&vec![sigma2; ny]).unwrap();

    let labels: Vec<String> = (0..nx).map(|i| format!("x{i}")).collect();
    let mut cuts: Vec<usize> = (1..nx).collect();
    shuffle(rng, &mut cuts);
    let mut cuts: Vec<usize> = cuts.into_iter().take(n_groups - 1).collect();
    cuts.sort_unstable();
    cuts.push(nx);
    let mut groups = Vec::new();
    let mut start = 0;
    for (gi, &end) in cuts.iter().enumerate() {
        groups.push((format!("g{gi}"), labels[start..end].to_vec()));
        start = end;
    }
    ChannelScenario::new(ScenarioKind::Mimo, h, input, noise, groups).unwrap()
}

fn two_user_mac() -> ChannelScenario {
    ChannelScenario::new(
        ScenarioKind::Mac,
        mac_channel_matrix(&[Complex64::ONE, Complex64::ONE]),
        HermitianGram::identity(2),
        HermitianGram::identity(1),
        vec![
            ("u1".to_string(), vec!["u1".to_string()]),
            ("u2".to_string(), vec!["u2".to_string()]),
        ],
    )
    .unwrap()
}

/// The three fixed scenarios exercised by the simulation criteria.
fn simulation_scenarios() -> Vec<(&'static str, ChannelScenario, Vec<&'static str>)> {
    let mac = two_user_mac();

    let taps = [Complex64::ONE, Complex64::new(0.5, 0.0)];
    let isi = ChannelScenario::new(
        ScenarioKind::Isi,
        isi_channel_matrix(&taps, 4),
        HermitianGram::identity(4),
        HermitianGram::from_real_diagonal(&[0.5; 4]).unwrap(),
        (0..4)
            .map(|i| (format!("s{i}"), vec![format!("x{i}")]))
            .collect(),
    )
    .unwrap();

    let mut rng = TrialRng::for_trial(0xACCE_97, 0);
    let mimo = ChannelScenario::new(
        ScenarioKind::Mimo,
        random_matrix(&mut rng, 3, 3, 1.0),
        HermitianGram::identity(3),
        HermitianGram::from_real_diagonal(&[1.0; 3]).unwrap(),
        vec![
            ("a1".to_string(), vec!["t0".to_string()]),
            ("a23".to_string(), vec!["t1".to_string(), "t2".to_string()]),
        ],
    )
    .unwrap();

    vec![
        ("mac", mac, vec!["u1", "u2"]),
        ("isi", isi, vec!["s0", "s1", "s2", "s3"]),
        ("mimo", mimo, vec!["a1", "a23"]),
    ]
}

#[test]
fn criterion_1_rate_sum_identity() {
    let start = Instant::now();
    let mut rng = TrialRng::for_trial(0xC1, 0);
    let mut worst: f64 = 0.0;
    for _ in 0..100 {
        let nx = 2 + (rng.next_u64() % 7) as usize; // 2..=8
        let ny = 1 + (rng.next_u64() % 8) as usize;
        let n_groups = (2 + (rng.next_u64() % 3) as usize).min(nx);
        let scenario = random_scenario(&mut rng, nx, ny, n_groups);
        let joint = scenario.build_joint_gram().unwrap();
        let mut order: Vec<String> = scenario.groups().iter().map(|(n, _)| n.clone()).collect();
        shuffle(&mut rng, &mut order);
        let refs: Vec<&str> = order.iter().map(|s| s.as_str()).collect();
        let profile = incremental_rates(&joint, &refs).unwrap();
        let residual = profile.rate_sum_residual();
        assert!(
            residual <= 1e-9,
            "rate-sum residual {residual:.3e} > 1e-9 nats"
        );
        worst = worst.max(residual);
    }
    let elapsed = start.elapsed();
    assert!(elapsed.as_secs_f64() < 2.0, "took {elapsed:?}, budget 2 s");
    println!(
        "acceptance 1 (rate-sum identity, 100 random scenarios): PASS \
         (worst residual {worst:.3e} nats, {elapsed:?})"
    );
}

#[test]
fn criterion_2_mac_corner_point() {
    let joint = two_user_mac().build_joint_gram().unwrap();
    let profile = incremental_rates(&joint, &["u1", "u2"]).unwrap();
    let r1 = profile.stages[0].bits;
    let r2 = profile.stages[1].bits;
    let total = profile.total_bits;
    assert!((r1 - 1.5f64.log2()).abs() <= 1e-12, "R1 = {r1}");
    assert!((r2 - 1.0).abs() <= 1e-12, "R2 = {r2}");
    assert!((total - 3.0f64.log2()).abs() <= 1e-12, "total = {total}");
    println!(
        "acceptance 2 (MAC corner point): PASS (R1 = {r1:.15}, R2 = {r2:.15}, total = {total:.15})"
    );
}

#[test]
fn criterion_3_scalar_wiener() {
    // X with power 3 observed through unit-variance noise.
    let scenario = ChannelScenario::new(
        ScenarioKind::Mac,
        mac_channel_matrix(&[Complex64::ONE]),
        HermitianGram::from_real_diagonal(&[3.0]).unwrap(),
        HermitianGram::identity(1),
        vec![("u1".to_string(), vec!["x".to_string()])],
    )
    .unwrap();
    let joint = scenario.build_joint_gram().unwrap();
    let p = mmse_project(&joint, &["u1"], &[OBSERVATION_GROUP]).unwrap();
    let a = p.coefficients.at(0, 0).re;
    let ree = p.error_gram.at(0, 0).re;
    let mi = mutual_information(&joint, &["u1"], &[OBSERVATION_GROUP]).unwrap();
    assert!((a - 0.75).abs() <= 1e-12);
    assert!((ree - 0.75).abs() <= 1e-12);
    assert!((mi.bits() - 2.0).abs() <= 1e-12);
    println!(
        "acceptance 3 (scalar Wiener/AWGN): PASS (A = {a}, R_ee = {ree}, I = {} bits)",
        mi.bits()
    );
}

#[test]
fn criterion_4_projection_calculus() {
    let start = Instant::now();
    let mut rng = TrialRng::for_trial(0xC4, 0);
    let mut worst_pyth: f64 = 0.0;
    let mut worst_orth: f64 = 0.0;
    let mut worst_chain: f64 = 0.0;
    let mut worst_suff: f64 = 0.0;
    for i in 0..100 {
        let sx = 1 + (rng.next_u64() % 3) as usize;
        let sy = sx + (rng.next_u64() % 3) as usize;
        let sz = 1 + (rng.next_u64() % 3) as usize;
        let joint = random_joint(&mut rng, &[sx, sy, sz]);
        let scale = 1.0 + joint.gram().max_diagonal();

        let p = mmse_project(&joint, &["g0"], &["g1"]).unwrap();
        let r_xx = joint.principal(&["g0"]).unwrap();
        let pyth = p
            .estimate_gram
            .matrix()
            .add(p.error_gram.matrix())
            .unwrap()
            .max_abs_diff(r_xx.matrix());
        assert!(pyth <= 1e-10 * scale, "instance {i}: Pythagoras {pyth:.3e}");

        let orth = orthogonality_residual(&joint, &p, &["g0"], &["g1"]).unwrap();
        assert!(orth <= 1e-10 * scale, "instance {i}: orthogonality {orth:.3e}");

        let chained = chain_rule_project(&joint, &["g0"], &["g1"], &["g2"]).unwrap();
        let direct = mmse_project(&joint, &["g0"], &["g1", "g2"]).unwrap();
        let chain = chained
            .coefficients
            .max_abs_diff(&direct.coefficients)
            .max(
                chained
                    .error_gram
                    .matrix()
                    .max_abs_diff(direct.error_gram.matrix()),
            );
        assert!(chain <= 1e-9, "instance {i}: chain rule {chain:.3e}");

        let suff = sufficiency_check(&joint, &["g0"], &["g1"]).unwrap();
        assert!(suff <= 1e-9, "instance {i}: sufficiency {suff:.3e} nats");

        worst_pyth = worst_pyth.max(pyth / scale);
        worst_orth = worst_orth.max(orth / scale);
        worst_chain = worst_chain.max(chain);
        worst_suff = worst_suff.max(suff);
    }
    let elapsed = start.elapsed();
    assert!(elapsed.as_secs_f64() < 5.0, "took {elapsed:?}, budget 5 s");
    println!(
        "acceptance 4 (projection calculus, 100 random instances): PASS \
         (pythagoras {worst_pyth:.2e}/scale, orthogonality {worst_orth:.2e}/scale, \
         chain {worst_chain:.2e}, sufficiency {worst_suff:.2e} nats, {elapsed:?})"
    );
}

#[test]
fn criterion_5_entropy_properties() {
    let mut rng = TrialRng::for_trial(0xC5, 0);

    // Permutation invariance and the two-route entropy identity.
    let mut worst_perm: f64 = 0.0;
    let mut worst_route: f64 = 0.0;
    for _ in 0..50 {
        let n = 2 + (rng.next_u64() % 7) as usize;
        let gram = random_psd(&mut rng, n, 0.5 * n as f64);
        let labels: Vec<String> = (0..n).map(|i| format!("v{i}")).collect();
        let set = GaussianSet::new(labels.clone(), gram).unwrap();

        let mut order = labels.clone();
        shuffle(&mut rng, &mut order);
        let h = set.differential_entropy().unwrap().nats;
        let hp = set
            .permute(&order)
            .unwrap()
            .differential_entropy()
            .unwrap()
            .nats;
        let dperm = (h - hp).abs();
        assert!(dperm <= 1e-9, "permutation invariance {dperm:.3e}");

        let form = set.innovations().unwrap();
        let via_det = n as f64 * (std::f64::consts::PI * std::f64::consts::E).ln()
            + form.determinant().ln();
        let droute = (h - via_det).abs();
        assert!(droute <= 1e-9, "two-route entropy {droute:.3e}");

        worst_perm = worst_perm.max(dperm);
        worst_route = worst_route.max(droute);
    }

    // Singular set: -inf flag, not an error.
    let singular = real_gaussian_set(&["a", "b"], &[vec![1.0, 1.0], vec![1.0, 1.0]]).unwrap();
    let h = singular.differential_entropy().unwrap();
    assert!(!h.is_finite());
    assert_eq!(h.nats, f64::NEG_INFINITY);

    // Perfect observation: +inf mutual information flag.
    let m = CMatrix::from_real_rows(&[vec![2.0, 2.0], vec![2.0, 2.0]]).unwrap();
    let joint = JointGram::new(
        vec![
            ("x".to_string(), vec!["x0".to_string()]),
            ("y".to_string(), vec!["y0".to_string()]),
        ],
        HermitianGram::new(m).unwrap(),
    )
    .unwrap();
    let mi = mutual_information(&joint, &["x"], &["y"]).unwrap();
    assert!(mi.is_infinite());
    assert_eq!(mi.nats, f64::INFINITY);

    println!(
        "acceptance 5 (entropy properties): PASS \
         (permutation {worst_perm:.2e} nats, two-route {worst_route:.2e} nats, \
         singular -> -inf, Y=X -> +inf)"
    );
}

#[test]
fn criterion_6_dfe_equivalence() {
    let mut rng = TrialRng::for_trial(0xC6, 0);
    let mut worst: f64 = 0.0;
    for (name, scenario, order) in simulation_scenarios() {
        let joint = scenario.build_joint_gram().unwrap();
        let filters = dfe_filters(&joint, &order).unwrap();
        let scale = 1.0 + joint.gram().max_diagonal();
        let nx = filters.labels.len();
        let ny = scenario.output_dim();

        // Strict block causality, bit-exact.
        let stage_of: Vec<usize> = filters
            .stage_spans
            .iter()
            .enumerate()
            .flat_map(|(s, span)| span.clone().map(move |_| s))
            .collect();
        for i in 0..nx {
            for j in 0..nx {
                if stage_of[j] >= stage_of[i] {
                    assert_eq!(
                        filters.predictor.at(i, j),
                        Complex64::ZERO,
                        "{name}: B[{i}][{j}] not exactly zero"
                    );
                }
            }
        }

        // Noise-predictive and standard forms agree on random samples.
        for _ in 0..10_000 {
            let x: Vec<Complex64> = (0..nx).map(|_| rng.next_proper_complex(1.0)).collect();
            let y: Vec<Complex64> = (0..ny).map(|_| rng.next_proper_complex(1.0)).collect();
            let x_hat = filters.forward.matvec(&y).unwrap();
            let e: Vec<Complex64> = x.iter().zip(&x_hat).map(|(a, b)| a - b).collect();
            let be = filters.predictor.matvec(&e).unwrap();
            let ff = filters.feedforward_std.matvec(&y).unwrap();
            let bx = filters.feedback_std.matvec(&x).unwrap();
            let diff = (0..nx)
                .map(|i| ((x_hat[i] + be[i]) - (ff[i] + bx[i])).norm())
                .fold(0.0, f64::max);
            assert!(diff <= 1e-10 * scale, "{name}: form mismatch {diff:.3e}");
            worst = worst.max(diff / scale);
        }
    }
    println!(
        "acceptance 6 (DFE form equivalence, 3 scenarios x 10^4 samples): PASS \
         (worst deviation {worst:.2e}/scale)"
    );
}

#[test]
fn criterion_7_monte_carlo_concordance() {
    let start = Instant::now();
    let seed = SeedSpec::new(0xC7_2024);
    let mut worst_rel: f64 = 0.0;
    let mut worst_z: f64 = 0.0;
    for (name, scenario, order) in simulation_scenarios() {
        let joint = scenario.build_joint_gram().unwrap();
        let filters = dfe_filters(&joint, &order).unwrap();
        let report = run_genie_dfe(&scenario, &order, &filters, &seed, 100_000).unwrap();
        for stage in &report.stages {
            for (emp, th) in stage.empirical_pivots.iter().zip(&stage.theory_pivots) {
                let rel = (emp - th).abs() / th;
                assert!(
                    rel <= 0.03,
                    "{name} stage {}: pivot rel err {rel:.4}",
                    stage.group
                );
                worst_rel = worst_rel.max(rel);
            }
        }
        assert!(
            report.max_cross_zscore <= 5.0,
            "{name}: orthogonality z = {:.2}",
            report.max_cross_zscore
        );
        let gram_z = report.forward_error_gram_max_zscore();
        assert!(gram_z <= 5.0, "{name}: forward error gram z = {gram_z:.2}");
        worst_z = worst_z.max(report.max_cross_zscore).max(gram_z);
    }
    let elapsed = start.elapsed();
    assert!(elapsed.as_secs_f64() < 30.0, "took {elapsed:?}, budget 30 s");
    println!(
        "acceptance 7 (Monte Carlo concordance, 10^5 trials x 3 scenarios): PASS \
         (worst pivot rel err {worst_rel:.4}, worst |z| {worst_z:.2}, {elapsed:?})"
    );
}

#[test]
fn criterion_8_codebook_trend() {
    let start = Instant::now();
    let scenario = two_user_mac();
    let order = ["u1", "u2"];
    let seed = SeedSpec::new(0xC8_2024);

    // Paired seeds: the same master seed drives both rates.
    let low = run_codebook_experiment(&scenario, &order, 1, 8, 0.5, &seed, 2000).unwrap();
    let high = run_codebook_experiment(&scenario, &order, 1, 8, 0.9, &seed, 2000).unwrap();
    assert!((low.incremental_rate_bits - 1.0).abs() <= 1e-12);
    assert!(
        low.wer < high.wer,
        "WER trend violated: {} !< {}",
        low.wer,
        high.wer
    );

    // Far above the incremental rate the decoder fails most of the time.
    // 2 * R_i = 2 bits/symbol; the n*R <= 14 cap admits this at n = 7.
    let over = run_codebook_experiment(&scenario, &order, 1, 7, 2.0, &seed, 2000).unwrap();
    assert!(over.wer > 0.5, "overload WER {} <= 0.5", over.wer);

    let elapsed = start.elapsed();
    assert!(elapsed.as_secs_f64() < 60.0, "took {elapsed:?}, budget 60 s");
    println!(
        "acceptance 8 (random-codebook trend, MAC stage 2): PASS \
         (WER@0.5 = {}, WER@0.9 = {}, WER@2R_i = {}, {elapsed:?})",
        low.wer, high.wer, over.wer
    );
}
