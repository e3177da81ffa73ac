//! Acceptance suite: one test per release criterion, each printing a
//! pass/fail line with the measured margins (visible with `--nocapture`).
//!
//! Every criterion states its tolerance and a runtime budget; both are
//! asserted, never relaxed.

use std::path::Path;
use std::process::Command;
use std::time::Instant;

use num_complex::Complex64;

use petz::algebra::{
    block_structure, check_modular_stability, factor_tensor_unitary, fixed_point_algebra,
    StarAlgebra,
};
use petz::channels::{partial_trace_channel, petz_dual, random_channel, KrausChannel};
use petz::entropy::{build_markov_state, ssa_equality_structure, ssa_gap, MarkovSpec, TripartiteState};
use petz::io::{parse_document, render_document};
use petz::linalg::{tensor_product, ComplexMatrix, DensityMatrix, SubsystemDims};
use petz::random::Seeded;
use petz::sufficiency::{
    check_ns_condition, check_sufficiency, cocycle, extract_structure, gamma_maps,
    pull_back_structure, synthesize_sufficient_instance, SufficiencyConfig, SyntheticSpec,
};
use petz::{Error, DEFAULT_T_GRID};

/// Strictly positive weight vector summing to 1 (simplex sample mixed with
/// the uniform distribution, so no block weight degenerates).
fn mixed_weights(gen: &mut Seeded, k: usize) -> Vec<f64> {
    gen.simplex(k)
        .into_iter()
        .map(|w| (w + 0.25) / (1.0 + 0.25 * k as f64))
        .collect()
}

fn budget(start: Instant, seconds: f64, criterion: &str) -> f64 {
    let elapsed = start.elapsed().as_secs_f64();
    assert!(
        elapsed < seconds,
        "{criterion}: runtime {elapsed:.1}s exceeds the {seconds}s budget"
    );
    elapsed
}

#[test]
fn criterion_1_petz_recovery_fixes_the_reference_state() {
    let start = Instant::now();
    let mut worst = 0.0f64;
    for seed in 0..100u64 {
        let mut gen = Seeded::new(9100 + seed);
        let in_dim = 2 + (seed as usize % 5);
        let out_dim = 2 + ((seed as usize / 5) % 5);
        // Stinespring needs out·env ≥ in; an invertible channel output
        // (which the Petz dual divides by) needs in·env ≥ out.
        let env = (1 + (seed as usize % 4))
            .max(in_dim.div_ceil(out_dim))
            .max(out_dim.div_ceil(in_dim));
        let t = random_channel(&mut gen, in_dim, out_dim, env);
        assert!(t.coefficients().len() <= 4);
        let d1 = gen.density(in_dim);
        let recovery = petz_dual(&t, &d1).unwrap();
        let image = t.apply(d1.matrix()).unwrap();
        let roundtrip = recovery.apply(&image).unwrap();
        worst = worst.max(roundtrip.hs_distance(d1.matrix()));
    }
    assert!(worst < 1e-9, "criterion 1: max |T#(T(D1)) - D1| = {worst:.3e} >= 1e-9");
    let elapsed = budget(start, 10.0, "criterion 1");
    println!("criterion 1 (Petz recovery fixed point): pass — max deviation {worst:.3e}, {elapsed:.2}s");
}

fn recovery_verdict(t: &KrausChannel, d1: &DensityMatrix, d2: &DensityMatrix, tol: f64) -> bool {
    let recovery = petz_dual(t, d1).unwrap();
    let dev = |d: &DensityMatrix| {
        let image = t.apply(d.matrix()).unwrap();
        recovery.apply(&image).unwrap().hs_distance(d.matrix())
    };
    dev(d1).max(dev(d2)) <= tol
}

#[test]
fn criterion_2_grid_and_recovery_verdicts_agree() {
    let start = Instant::now();
    let tol = 1e-8;
    let shapes: [&[(usize, usize)]; 5] = [
        &[(2, 2), (1, 3)],
        &[(3, 1)],
        &[(2, 1), (1, 2)],
        &[(2, 2)],
        &[(1, 1), (2, 1)],
    ];
    let mut agreements = 0;
    let mut run_both = |t: &KrausChannel, d1: &DensityMatrix, d2: &DensityMatrix| {
        let (ns_ok, _) = check_ns_condition(t, d1, d2, &DEFAULT_T_GRID, tol).unwrap();
        let rec_ok = recovery_verdict(t, d1, d2, tol);
        assert_eq!(ns_ok, rec_ok, "criterion 2: verdicts split");
        // The combined entry point must agree and never raise the
        // disagreement diagnostic (exit code 3) on these instances.
        let report =
            check_sufficiency(t, d1, d2, &SufficiencyConfig::default()).expect("criterion 2");
        assert_eq!(report.verdict, ns_ok && rec_ok);
        agreements += 1;
    };
    for i in 0..50u64 {
        let blocks = shapes[i as usize % shapes.len()].to_vec();
        let k = blocks.len();
        let mut wgen = Seeded::new(9300 + i);
        let spec = SyntheticSpec {
            blocks,
            weights: vec![mixed_weights(&mut wgen, k), mixed_weights(&mut wgen, k)],
            env_dim: 2,
            seed: 9200 + i,
            mismatched_r: false,
        };
        let inst = synthesize_sufficient_instance(&spec).unwrap();
        run_both(&inst.channel, &inst.states[0], &inst.states[1]);
    }
    for i in 0..50u64 {
        let mut gen = Seeded::new(9500 + i);
        let in_dim = 2 + (i as usize % 5);
        let out_dim = 2 + ((i as usize / 5) % 5);
        let env = (1 + (i as usize % 4))
            .max(in_dim.div_ceil(out_dim))
            .max(out_dim.div_ceil(in_dim));
        let t = random_channel(&mut gen, in_dim, out_dim, env);
        let d1 = gen.density(in_dim);
        let d2 = gen.density(in_dim);
        run_both(&t, &d1, &d2);
    }
    assert_eq!(agreements, 100);
    let elapsed = budget(start, 30.0, "criterion 2");
    println!("criterion 2 (criterion equivalence): pass — 100/100 agree, {elapsed:.2}s");
}

/// Fixed seed list shared by criteria 3 and 8.
const STRUCTURED_SEEDS: [u64; 10] = [3, 7, 21, 41, 59, 101, 211, 307, 401, 503];

fn structured_instance(seed: u64) -> petz::sufficiency::SyntheticInstance {
    let mut wgen = Seeded::new(seed ^ 0x5eed);
    let spec = SyntheticSpec {
        blocks: vec![(2, 2), (1, 3)],
        weights: vec![mixed_weights(&mut wgen, 2), mixed_weights(&mut wgen, 2)],
        env_dim: 2,
        seed,
        mismatched_r: false,
    };
    synthesize_sufficient_instance(&spec).unwrap()
}

#[test]
fn criterion_3_structure_theorem_round_trip() {
    let start = Instant::now();
    let config = SufficiencyConfig::default();
    for &seed in &STRUCTURED_SEEDS {
        let inst = structured_instance(seed);
        let (t, d1, d2) = (&inst.channel, &inst.states[0], &inst.states[1]);
        let decomposition = extract_structure(t, d1, d2, &config).unwrap();
        assert_eq!(decomposition.shape(), inst.shape(), "criterion 3: block shapes (seed {seed})");
        for (block, truth) in decomposition.blocks.iter().zip(&inst.blocks) {
            assert!(
                (block.lambda_1 - truth.weights[0]).abs() < 1e-8
                    && (block.lambda_2 - truth.weights[1]).abs() < 1e-8,
                "criterion 3: lambda mismatch (seed {seed})"
            );
        }
        let td1 = t.apply_to_state(d1).unwrap();
        let td2 = t.apply_to_state(d2).unwrap();
        assert!(decomposition.reassemble(1).hs_distance(td1.matrix()) < 1e-8);
        assert!(decomposition.reassemble(2).hs_distance(td2.matrix()) < 1e-8);

        let pulled = pull_back_structure(t, &decomposition, d1).unwrap();
        for block in &pulled.blocks {
            let c1 = block.s_1.commutator(&block.r).hs_norm();
            let c2 = block.s_2.commutator(&block.r).hs_norm();
            assert!(c1.max(c2) < 1e-9, "criterion 3: pulled-back factors fail to commute");
        }
        assert!(pulled.reassemble(1).hs_distance(d1.matrix()) < 1e-8);
        assert!(pulled.reassemble(2).hs_distance(d2.matrix()) < 1e-8);
    }
    let elapsed = budget(start, 20.0, "criterion 3");
    println!(
        "criterion 3 (structure theorem round trip): pass — {} seeds, {elapsed:.2}s",
        STRUCTURED_SEEDS.len()
    );
}

#[test]
fn criterion_4_converse_and_mismatched_controls() {
    let start = Instant::now();
    let config = SufficiencyConfig::default();
    let mut worst_control = f64::INFINITY;
    for i in 0..50u64 {
        let mut wgen = Seeded::new(9700 + i);
        let weights = vec![mixed_weights(&mut wgen, 2), mixed_weights(&mut wgen, 2)];
        let spec = SyntheticSpec {
            blocks: vec![(2, 2), (1, 3)],
            weights: weights.clone(),
            env_dim: 2,
            seed: 9600 + i,
            mismatched_r: false,
        };
        let inst = synthesize_sufficient_instance(&spec).unwrap();
        let report =
            check_sufficiency(&inst.channel, &inst.states[0], &inst.states[1], &config).unwrap();
        assert!(report.verdict, "criterion 4: structured instance {i} not sufficient");

        let control = synthesize_sufficient_instance(&SyntheticSpec {
            mismatched_r: true,
            ..spec
        })
        .unwrap();
        let report = check_sufficiency(
            &control.channel,
            &control.states[0],
            &control.states[1],
            &config,
        )
        .unwrap();
        assert!(!report.verdict, "criterion 4: mismatched control {i} passed");
        worst_control = worst_control.min(report.max_recovery_deviation());
    }
    assert!(
        worst_control > 1e-3,
        "criterion 4: weakest control deviation {worst_control:.3e} <= 1e-3"
    );
    let elapsed = budget(start, 20.0, "criterion 4");
    println!(
        "criterion 4 (converse direction): pass — weakest control deviation {worst_control:.3e}, {elapsed:.2}s"
    );
}

#[test]
fn criterion_5_unitary_tensor_factorization() {
    let start = Instant::now();
    let mut worst = 0.0f64;
    for seed in 0..100u64 {
        let mut gen = Seeded::new(9800 + seed);
        let v = gen.unitary(3);
        let w = gen.unitary(2);
        let u = tensor_product(&v, &w);
        let f = factor_tensor_unitary(&u, 3, 2).unwrap();
        worst = worst.max(tensor_product(&f.v, &f.w).hs_distance(&u));
    }
    assert!(worst < 1e-9, "criterion 5: worst factorization residual {worst:.3e}");

    // Swap exchanges the legs, so conjugation by it does not preserve
    // M_2 ⊗ I and no tensor factorization exists.
    let mut swap = ComplexMatrix::zeros(4, 4);
    for i in 0..2 {
        for j in 0..2 {
            swap[(i * 2 + j, j * 2 + i)] = Complex64::new(1.0, 0.0);
        }
    }
    assert!(
        matches!(factor_tensor_unitary(&swap, 2, 2), Err(Error::Precondition(_))),
        "criterion 5: swap control must fail the factorization precondition"
    );
    let elapsed = budget(start, 5.0, "criterion 5");
    println!("criterion 5 (unitary factorization): pass — max residual {worst:.3e}, {elapsed:.2}s");
}

#[test]
fn criterion_6_worked_block_structure() {
    let start = Instant::now();
    // Two copies of M_2 with multiplicity 2, one M_3 with multiplicity 2,
    // and scalars with multiplicity 4, dressed by a random basis change.
    let shape = [(2usize, 2usize), (2, 2), (3, 2), (1, 4)];
    let ambient: usize = shape.iter().map(|&(d, m)| d * m).sum();
    let mut gen = Seeded::new(9900);
    let u = gen.unitary(ambient);
    let mut basis = Vec::new();
    let mut offset = 0;
    for &(d, m) in &shape {
        for i in 0..d {
            for j in 0..d {
                let mut e = ComplexMatrix::zeros(ambient, ambient);
                for k in 0..m {
                    e[(offset + i * m + k, offset + j * m + k)] = Complex64::new(1.0, 0.0);
                }
                basis.push(e.conjugate_by(&u));
            }
        }
        offset += d * m;
    }
    let algebra = StarAlgebra::new(basis).unwrap();
    let structure = block_structure(&algebra).unwrap();

    let mut recovered = structure.shape();
    recovered.sort_unstable();
    let mut expected = shape.to_vec();
    expected.sort_unstable();
    assert_eq!(recovered, expected, "criterion 6: block multiset");

    let span_dim: usize = structure.shape().iter().map(|&(d, _)| d * d).sum();
    assert_eq!(span_dim, algebra.dim(), "criterion 6: sum of d^2 vs span dimension");
    let elapsed = budget(start, 2.0, "criterion 6");
    println!(
        "criterion 6 (block-structure fidelity): pass — blocks {recovered:?}, span {span_dim}, {elapsed:.2}s"
    );
}

#[test]
fn criterion_7_ssa_gap_and_markov_structure() {
    let start = Instant::now();
    let config = SufficiencyConfig::default();
    let mut consistent = 0;

    // Verdict of the partial trace over C for (τ_A ⊗ D_BC, D_ABC).
    let sufficiency_verdict = |s: &TripartiteState| -> bool {
        let tau = DensityMatrix::maximally_mixed(s.dim_a());
        let d_bc = s.reduced(&[1, 2]).unwrap();
        let d1 = DensityMatrix::new(tensor_product(tau.matrix(), d_bc.matrix())).unwrap();
        let t = partial_trace_channel(s.dims(), &[2]).unwrap();
        check_sufficiency(&t, &d1, s.density(), &config).unwrap().verdict
    };

    let mut min_gap = f64::INFINITY;
    for seed in 0..500u64 {
        let mut gen = Seeded::new(20_000 + seed);
        let state = TripartiteState::new(
            gen.density(12),
            SubsystemDims::new(vec![2, 3, 2]).unwrap(),
        )
        .unwrap();
        let gap = ssa_gap(&state).unwrap();
        min_gap = min_gap.min(gap);
        assert!(gap >= -1e-10, "criterion 7a: gap {gap:.3e} below -1e-10 (seed {seed})");
        if sufficiency_verdict(&state) == (gap < 1e-8) {
            consistent += 1;
        }
    }

    let mut max_markov_gap = 0.0f64;
    for i in 0..50u64 {
        let mut wgen = Seeded::new(21_000 + i);
        let weights = mixed_weights(&mut wgen, 2);
        let blocks: Vec<(usize, usize, f64)> = if i % 2 == 0 {
            vec![(2, 1, weights[0]), (1, 2, weights[1])] // d_B = 4
        } else {
            vec![(2, 2, weights[0]), (1, 3, weights[1])] // d_B = 7
        };
        let built = build_markov_state(&MarkovSpec {
            dim_a: 2,
            dim_c: 2,
            blocks,
            seed: 22_000 + i,
        })
        .unwrap();
        let gap = ssa_gap(&built.state).unwrap();
        max_markov_gap = max_markov_gap.max(gap.abs());
        assert!(gap < 1e-9, "criterion 7b: Markov gap {gap:.3e} (instance {i})");

        let decomposition = ssa_equality_structure(&built.state, 1e-8).unwrap();
        assert_eq!(
            decomposition.shape(),
            built.ground_truth.shape(),
            "criterion 7b: splits (instance {i})"
        );
        for (term, truth) in decomposition.terms.iter().zip(&built.ground_truth.terms) {
            assert!(
                (term.weight - truth.weight).abs() < 1e-8,
                "criterion 7b: weight mismatch (instance {i})"
            );
        }
        if sufficiency_verdict(&built.state) == (gap < 1e-8) {
            consistent += 1;
        }
    }
    assert_eq!(consistent, 550, "criterion 7c: sufficiency/gap verdicts disagree");
    let elapsed = budget(start, 60.0, "criterion 7");
    println!(
        "criterion 7 (SSA and Markov structure): pass — min random gap {min_gap:.3e}, \
         max Markov gap {max_markov_gap:.3e}, 550/550 consistent, {elapsed:.2}s"
    );
}

#[test]
fn criterion_8_modular_stability_and_cocycle_membership() {
    let start = Instant::now();
    let mut worst_stability = 0.0f64;
    let mut worst_span = 0.0f64;
    for &seed in &STRUCTURED_SEEDS {
        let inst = structured_instance(seed);
        let (t, d1, d2) = (&inst.channel, &inst.states[0], &inst.states[1]);
        let td1 = t.apply_to_state(d1).unwrap();
        let td2 = t.apply_to_state(d2).unwrap();
        let (_, gamma_out) = gamma_maps(t, d1).unwrap();
        let dk = fixed_point_algebra(&gamma_out, &td1).unwrap();

        for state in [&td1, &td2] {
            let report = check_modular_stability(&dk, state, &DEFAULT_T_GRID, 1e-8).unwrap();
            assert!(
                report.holds && report.max_distance < 1e-8,
                "criterion 8: modular stability distance {:.3e} (seed {seed})",
                report.max_distance
            );
            worst_stability = worst_stability.max(report.max_distance);
        }
        for &tv in &DEFAULT_T_GRID {
            let u = cocycle(&td1, &td2, tv).unwrap();
            let distance = dk.distance_from_span(&u);
            assert!(
                distance <= 1e-8,
                "criterion 8: cocycle at t={tv} leaves the span by {distance:.3e} (seed {seed})"
            );
            worst_span = worst_span.max(distance);
        }
    }
    let elapsed = budget(start, 60.0, "criterion 8");
    println!(
        "criterion 8 (modular stability and cocycle membership): pass — \
         max stability distance {worst_stability:.3e}, max span distance {worst_span:.3e}, {elapsed:.2}s"
    );
}

fn petz_cmd(dir: &Path, args: &[&str]) -> (Vec<u8>, i32) {
    let out = Command::new(env!("CARGO_BIN_EXE_petz"))
        .current_dir(dir)
        .args(args)
        .output()
        .expect("failed to launch the binary");
    (out.stdout, out.status.code().expect("signal-terminated"))
}

fn pipeline(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut reports = Vec::new();
    let mut run = |label: &str, args: &[&str], want: i32| {
        let (stdout, code) = petz_cmd(dir, args);
        assert_eq!(code, want, "criterion 9: {label} exited {code}, wanted {want}");
        reports.push((label.to_string(), stdout));
    };
    run(
        "gen sufficient",
        &["gen", "sufficient", "--blocks", "2,2:1,3", "--l1", "0.3,0.7", "--l2", "0.6,0.4", "--seed", "7"],
        0,
    );
    run(
        "check text",
        &["check", "sufficient.channel.json", "sufficient.state1.json", "sufficient.state2.json"],
        0,
    );
    run(
        "check json",
        &["check", "sufficient.channel.json", "sufficient.state1.json", "sufficient.state2.json", "--json"],
        0,
    );
    run(
        "structure json",
        &["structure", "sufficient.channel.json", "sufficient.state1.json", "sufficient.state2.json", "--emit-factors", "--json"],
        0,
    );
    run(
        "gen markov",
        &["gen", "markov", "--dA", "2", "--dC", "2", "--blocks", "2x1:0.5,1x2:0.5", "--seed", "7"],
        0,
    );
    run("ssa text", &["ssa", "markov.state.json", "--structure"], 0);
    run("ssa json", &["ssa", "markov.state.json", "--structure", "--json"], 0);
    reports
}

#[test]
fn criterion_9_cli_determinism_and_round_trip() {
    let start = Instant::now();
    let dir_a = tempfile::tempdir().unwrap();
    let dir_b = tempfile::tempdir().unwrap();
    let reports_a = pipeline(dir_a.path());
    let reports_b = pipeline(dir_b.path());
    for ((label, a), (_, b)) in reports_a.iter().zip(&reports_b) {
        assert_eq!(a, b, "criterion 9: {label} reports differ between runs");
    }

    // The corpus: every document the pipelines wrote, compared across the
    // two runs and round-tripped bit-exactly.
    let mut names: Vec<String> = std::fs::read_dir(dir_a.path())
        .unwrap()
        .map(|e| e.unwrap().file_name().to_string_lossy().into_owned())
        .filter(|n| n.ends_with(".json"))
        .collect();
    names.sort();
    assert_eq!(names.len(), 6, "criterion 9: unexpected corpus {names:?}");
    for name in &names {
        let bytes_a = std::fs::read_to_string(dir_a.path().join(name)).unwrap();
        let bytes_b = std::fs::read_to_string(dir_b.path().join(name)).unwrap();
        assert_eq!(bytes_a, bytes_b, "criterion 9: generated {name} differs between runs");

        let document = parse_document(&bytes_a).unwrap();
        let rendered = render_document(&document).unwrap();
        assert_eq!(rendered, bytes_a, "criterion 9: {name} does not round-trip bit-exactly");
        assert_eq!(parse_document(&rendered).unwrap(), document);
    }
    let elapsed = budget(start, 60.0, "criterion 9");
    println!(
        "criterion 9 (CLI determinism): pass — {} reports byte-identical, {} documents round-trip, {elapsed:.2}s",
        reports_a.len(),
        names.len()
    );
}
