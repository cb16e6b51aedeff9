use clonelab::channel::{channel_fidelity_with_double_unitary, insert_gate, CombNetwork};
use clonelab::cloner::{
    choi_r1_of_cloner, cloner_channel_closed_form, decohered_network, first_factor_network, random_guess_network,
};
use clonelab::haar::{average_fidelity_mc, haar_average, sample_haar_unitary, Estimate, SeededRng};
use clonelab::irrep::{blocks_from_choi, build_irrep_table, choi_from_blocks, covariance_residual, verify_covariance};
use clonelab::matrix::{conjugate_local, ComplexMatrix};
use clonelab::optimizer::{build_problem, solve, Task};
use clonelab::baselines::{f_clon, f_random};

fn fidelity(r: &CombNetwork, u: &ComplexMatrix) -> f64 {
    channel_fidelity_with_double_unitary(&insert_gate(r, u).unwrap(), u).unwrap()
}

#[test]
fn linked_comb_equals_closed_form_channel() {
    let mut rng = SeededRng::new(100);
    for d in 2..=3 {
        let r = choi_r1_of_cloner(d).unwrap();
        for _ in 0..20 {
            let u = sample_haar_unitary(d, &mut rng);
            let a = insert_gate(&r, &u).unwrap();
            let b = cloner_channel_closed_form(&u).unwrap();
            assert!(a.choi().max_abs_diff(b.choi()) < 1e-9);
            assert!((a.choi().trace().re - (d * d) as f64).abs() < 1e-9);
        }
    }
}

#[test]
fn cloner_comb_is_normalized_and_covariant() {
    let mut rng = SeededRng::new(101);
    for d in 2..=3 {
        let table = build_irrep_table(d).unwrap();
        let r = choi_r1_of_cloner(d).unwrap();
        assert!(r.check_normalization(1e-9).is_ok());
        assert!(verify_covariance(r.choi(), &table, 3, &mut rng).unwrap() < 1e-9);
    }
    let table = build_irrep_table(2).unwrap();
    let w = sample_haar_unitary(2, &mut rng);
    let skewed = first_factor_network(2, &w).unwrap();
    assert!(verify_covariance(skewed.choi(), &table, 3, &mut rng).unwrap() > 1e-3);
    // gate on the first factor, second factor replaced by I/d
    let guess = random_guess_network(2).unwrap();
    assert!(verify_covariance(guess.choi(), &table, 3, &mut rng).unwrap() < 1e-9);
    // a plain wire 0E → 3E pairs V with W and is not covariant
    let wire = first_factor_network(2, &ComplexMatrix::identity(2)).unwrap();
    assert!(verify_covariance(wire.choi(), &table, 3, &mut rng).unwrap() > 1e-3);
}

#[test]
fn cloner_blocks_are_alpha_only_and_match_the_optimizer() {
    for d in 2..=3 {
        let table = build_irrep_table(d).unwrap();
        let blocks = blocks_from_choi(choi_r1_of_cloner(d).unwrap().choi(), &table).unwrap();
        for (r, row) in blocks.layout.indices.iter().enumerate() {
            for (c, col) in blocks.layout.indices.iter().enumerate() {
                let alpha = |i: &clonelab::irrep::BlockIndex| {
                    i.mu == clonelab::irrep::Irrep::Alpha && i.nu == clonelab::irrep::Irrep::Alpha && i.i == i.k
                };
                if !(alpha(row) && alpha(col)) {
                    assert!(blocks.matrix[(r, c)].norm() < 1e-10, "{row} {col}");
                }
            }
        }
        assert!((blocks.fidelity(&table) - f_clon(d)).abs() < 1e-10);
        let opt = solve(&build_problem(d, Task::Clone).unwrap(), 1e-7).unwrap();
        assert!(opt.optimal_blocks.matrix.max_abs_diff(&blocks.matrix) < 1e-5);
    }
}

#[test]
fn block_fidelity_formula_matches_direct_evaluation() {
    let mut rng = SeededRng::new(102);
    let d = 2;
    let table = build_irrep_table(d).unwrap();
    let networks = [
        choi_r1_of_cloner(d).unwrap(),
        decohered_network(d).unwrap(),
        random_guess_network(d).unwrap(),
    ];
    for r in &networks {
        let blocks = blocks_from_choi(r.choi(), &table).unwrap();
        let u = sample_haar_unitary(d, &mut rng);
        assert!((blocks.fidelity(&table) - fidelity(r, &u)).abs() < 1e-10);
    }
    // random convex mixtures are covariant networks too
    for _ in 0..6 {
        let w = [rng.uniform(), rng.uniform(), rng.uniform()];
        let s: f64 = w.iter().sum();
        let m = &(&networks[0].choi().scale_real(w[0] / s) + &networks[1].choi().scale_real(w[1] / s))
            + &networks[2].choi().scale_real(w[2] / s);
        let r = CombNetwork::new(m, d).unwrap();
        let blocks = blocks_from_choi(r.choi(), &table).unwrap();
        let u = sample_haar_unitary(d, &mut rng);
        assert!((blocks.fidelity(&table) - fidelity(&r, &u)).abs() < 1e-10);
    }
}

#[test]
fn optimal_blocks_rebuild_a_valid_cloner() {
    let mut rng = SeededRng::new(103);
    for d in 2..=3 {
        let table = build_irrep_table(d).unwrap();
        let opt = solve(&build_problem(d, Task::Clone).unwrap(), 1e-7).unwrap();
        let r = CombNetwork::new(choi_from_blocks(&opt.optimal_blocks, &table).unwrap(), d).unwrap();
        assert!(r.check_normalization(1e-7).is_ok());
        for _ in 0..10 {
            let u = sample_haar_unitary(d, &mut rng);
            assert!((fidelity(&r, &u) - opt.optimal_value).abs() < 1e-6);
        }
    }
}

#[test]
fn fidelity_transforms_with_the_group_action() {
    // F(g·R·g†, U) = F(R, W†UV̄) for g = V⊗V⊗V̄⊗W̄⊗W⊗W
    let mut rng = SeededRng::new(104);
    let d = 2;
    let fixed = sample_haar_unitary(d, &mut rng);
    let r = first_factor_network(d, &fixed).unwrap();
    for _ in 0..10 {
        let (v, w, u) = (
            sample_haar_unitary(d, &mut rng),
            sample_haar_unitary(d, &mut rng),
            sample_haar_unitary(d, &mut rng),
        );
        let g = clonelab::irrep::group_action_factors(&v, &w);
        let refs: Vec<&ComplexMatrix> = g.iter().collect();
        let moved = CombNetwork::new(conjugate_local(r.choi(), &[d; 6], &refs).unwrap(), d).unwrap();
        let shifted = w.dagger().matmul(&u).matmul(&v.conj());
        assert!((fidelity(&moved, &u) - fidelity(&r, &shifted)).abs() < 1e-12);
        let cloner = choi_r1_of_cloner(d).unwrap();
        assert!(covariance_residual(cloner.choi(), &v, &w).unwrap() < 1e-12);
    }
}

#[test]
fn monte_carlo_averages() {
    let mut rng = SeededRng::new(0);
    let opt = average_fidelity_mc(&choi_r1_of_cloner(2).unwrap(), 100, &mut rng).unwrap();
    assert!((opt.mean - f_clon(2)).abs() < 1e-12 && opt.stderr < 1e-12, "{opt:?}");

    let deco = average_fidelity_mc(&decohered_network(2).unwrap(), 10_000, &mut rng).unwrap();
    assert!(deco.within(0.25, 3.0), "{deco:?}");

    let w = sample_haar_unitary(2, &mut rng);
    let fixed = average_fidelity_mc(&first_factor_network(2, &w).unwrap(), 10_000, &mut rng).unwrap();
    assert!(fixed.within(0.25, 3.0), "{fixed:?}");

    // U on the first system, a fresh Haar unitary on the second
    let values: Vec<f64> = (0..10_000)
        .map(|i| {
            let mut r = SeededRng::new(7).substream(i);
            let u = sample_haar_unitary(2, &mut r);
            let w = sample_haar_unitary(2, &mut r);
            fidelity(&first_factor_network(2, &w).unwrap(), &u)
        })
        .collect();
    assert!(Estimate::from_samples(&values).within(f_random(2), 3.0));
}

#[test]
fn monte_carlo_is_reproducible() {
    let r = decohered_network(2).unwrap();
    let a = average_fidelity_mc(&r, 500, &mut SeededRng::new(9)).unwrap();
    let b = average_fidelity_mc(&r, 500, &mut SeededRng::new(9)).unwrap();
    assert_eq!(a, b);
    let one = haar_average(2, 1, &mut SeededRng::new(9), |u| Ok(u.trace().norm())).unwrap();
    assert!(one.stderr.is_nan());
}

#[test]
fn corrupted_comb_is_caught() {
    let r = choi_r1_of_cloner(2).unwrap();
    let mut m = r.into_choi();
    m[(3, 3)] += clonelab::matrix::re(1e-3);
    let bad = CombNetwork::new(m, 2).unwrap();
    assert!(bad.check_normalization(1e-9).is_err());
}
