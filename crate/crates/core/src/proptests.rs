//! Property tests for the invariants each module promises.

use crate::chanbound::{
    bound_channel_instance, bound_channel_instance_unitary, bound_channel_worst, circuit_superoperators,
    kraus_to_superop, lindblad_generator, LindbladChannel,
};
use crate::circuit::qasm::{parse_circuit, print_circuit};
use crate::circuit::{build_qft, dft_matrix};
use crate::cohbound::{
    bound_direct, bound_direct_at, bound_gamma, fidelity, gamma_norm, gamma_opt, gamma_vertex, GammaMethod,
};
use crate::design::{design, DesignProblem, Objective, RotationGate, Template, WeightedGamma};
use crate::errmodel::{
    averaged_g, interaction_hamiltonians, model_cce, model_pauli, noisy_unitary, Pauli, ThetaAssignment,
};
use crate::matcore::{c, commutator, dagger, frobenius_norm, herm_exp, identity, kron, spectral_norm, ComplexMatrix};
use crate::mcsample::sample_fidelity;
use crate::optkit::{finite_difference_gradient, maximize_box, Gradient, OptSettings};
use crate::partition::{gamma_partitioned, PartitionPlan};
use crate::testkit::{random_circuit, random_circuit_sized, random_hermitian, random_matrix};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn pauli_of(k: u8) -> Pauli {
    [Pauli::X, Pauli::Y, Pauli::Z][k as usize % 3]
}

/// Admissible θ drawn uniformly from the model's box.
fn random_theta(r: &mut ChaCha8Rng, half_widths: &[f64]) -> ThetaAssignment {
    ThetaAssignment::new(half_widths.iter().map(|&w| r.random_range(-w..=w)).collect())
}

fn quick_opt(seed: u64) -> OptSettings {
    OptSettings {
        starts: 24,
        seed,
        ..OptSettings::default()
    }
}

fn max_abs(a: &ComplexMatrix) -> f64 {
    a.iter().map(|z| z.norm()).fold(0.0, f64::max)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn herm_exp_inverse(seed in any::<u64>(), dim in 1usize..=16) {
        let h = random_hermitian(&mut rng(seed), dim, 3.0);
        let prod = herm_exp(&h).unwrap() * herm_exp(&(-h)).unwrap();
        prop_assert!(max_abs(&(prod - identity(dim))) < 1e-10);
    }

    #[test]
    fn kron_norm_is_multiplicative(seed in any::<u64>(), da in 1usize..=4, db in 1usize..=4) {
        let mut r = rng(seed);
        let a = random_matrix(&mut r, da, da);
        let b = random_matrix(&mut r, db, db);
        let lhs = spectral_norm(&kron(&a, &b));
        prop_assert!((lhs - spectral_norm(&a) * spectral_norm(&b)).abs() < 1e-9 * lhs.max(1.0));
    }

    #[test]
    fn commutator_norm_bound(seed in any::<u64>(), dim in 1usize..=8) {
        let mut r = rng(seed);
        let a = random_matrix(&mut r, dim, dim);
        let b = random_matrix(&mut r, dim, dim);
        prop_assert!(spectral_norm(&commutator(&a, &b)) <= 2.0 * spectral_norm(&a) * spectral_norm(&b) + 1e-12);
    }

    #[test]
    fn norm_equivalence(seed in any::<u64>(), dim in 1usize..=8) {
        let a = random_matrix(&mut rng(seed), dim, dim);
        let (f, s) = (frobenius_norm(&a), spectral_norm(&a));
        prop_assert!(f >= s - 1e-12 && s >= f / (dim as f64).sqrt() - 1e-12);
    }

    #[test]
    fn prefix_cache_recursion(seed in any::<u64>()) {
        let circuit = random_circuit(seed);
        let prefixes = circuit.prefixes();
        prop_assert!(max_abs(&(prefixes[0].clone() - identity(circuit.dim()))) < 1e-12);
        for k in 0..circuit.len() - 1 {
            let next = &circuit.layer_unitaries()[k] * &prefixes[k];
            prop_assert!(max_abs(&(next - &prefixes[k + 1])) < 1e-12);
        }
    }

    #[test]
    fn qasm_round_trip(seed in any::<u64>()) {
        let circuit = random_circuit(seed);
        let parsed = parse_circuit(&print_circuit(&circuit).unwrap()).unwrap();
        prop_assert_eq!(parsed.len(), circuit.len());
        for (a, b) in parsed.gates().iter().zip(circuit.gates()) {
            prop_assert_eq!(a.label(), b.label());
            prop_assert_eq!(a.support(), b.support());
            prop_assert!(max_abs(&(a.unitary() - b.unitary())) < 1e-12);
        }
    }

    #[test]
    fn interaction_unitary_invariance(seed in any::<u64>(), p in any::<u8>()) {
        let circuit = random_circuit(seed);
        let model = model_pauli(&circuit, pauli_of(p), 0.1).unwrap();
        let theta = random_theta(&mut rng(seed), &model.half_widths());
        let gs = interaction_hamiltonians(&circuit, &model, &theta).unwrap();
        let hs = model.layer_hamiltonians(&theta).unwrap();
        for (g, h) in gs.iter().zip(&hs) {
            prop_assert!((spectral_norm(g) - spectral_norm(h)).abs() < 1e-12);
        }
    }

    #[test]
    fn interaction_linearity(seed in any::<u64>(), a in -2.0f64..2.0, b in -2.0f64..2.0) {
        let circuit = random_circuit(seed);
        let model = model_cce(&circuit, 0.1).unwrap();
        let mut r = rng(seed);
        let t1 = random_theta(&mut r, &model.half_widths());
        let t2 = random_theta(&mut r, &model.half_widths());
        let mix = ThetaAssignment::new(t1.values.iter().zip(&t2.values).map(|(x, y)| a * x + b * y).collect());
        let lhs = averaged_g(&circuit, &model, &mix).unwrap();
        let rhs = averaged_g(&circuit, &model, &t1).unwrap() * c(a, 0.0) + averaged_g(&circuit, &model, &t2).unwrap() * c(b, 0.0);
        prop_assert!(max_abs(&(lhs - rhs)) < 1e-12);
    }

    #[test]
    fn box_corners_are_admissible(seed in any::<u64>(), p in any::<u8>()) {
        let circuit = random_circuit(seed);
        let model = model_pauli(&circuit, pauli_of(p), 0.07).unwrap();
        let mut r = rng(seed);
        let corner = ThetaAssignment::new(
            model.half_widths().iter().map(|&w| if r.random_bool(0.5) { w } else { -w }).collect(),
        );
        for h in model.layer_hamiltonians(&corner).unwrap() {
            prop_assert!(spectral_norm(&h) <= model.delta() + 1e-12);
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    /// Sampled fidelities never fall below any computed lower bound.
    #[test]
    fn bounds_are_sound(seed in any::<u64>(), k in any::<u8>(), delta in 0.001f64..0.05) {
        let circuit = random_circuit(seed);
        let model = if k % 4 == 3 {
            model_cce(&circuit, delta).unwrap()
        } else {
            model_pauli(&circuit, pauli_of(k), delta).unwrap()
        };
        let settings = quick_opt(seed);
        let samples = sample_fidelity(&circuit, &model, 500, seed).unwrap();
        let mut bounds = vec![
            bound_direct(&circuit, &model, &settings).unwrap().value,
            bound_gamma(model.delta(), circuit.len(), gamma_opt(&circuit, &model, &settings).unwrap().value).unwrap().value,
            bound_gamma(model.delta(), circuit.len(), gamma_norm(&circuit, &model).unwrap().value).unwrap().value,
        ];
        if let Ok(g) = gamma_vertex(&circuit, &model) {
            bounds.push(bound_gamma(model.delta(), circuit.len(), g.value).unwrap().value);
        }
        for b in bounds {
            prop_assert!(samples.worst >= b - 1e-9, "worst {} < bound {}", samples.worst, b);
        }
    }

    /// Instance-level direct bound holds for the very instance it is built from.
    #[test]
    fn instance_bound_below_instance_fidelity(seed in any::<u64>(), p in any::<u8>()) {
        let circuit = random_circuit(seed);
        let model = model_pauli(&circuit, pauli_of(p), 0.05).unwrap();
        let theta = random_theta(&mut rng(seed), &model.half_widths());
        let f = fidelity(circuit.unitary(), &noisy_unitary(&circuit, &model, &theta).unwrap()).unwrap();
        prop_assert!(f >= bound_direct_at(&circuit, &model, &theta).unwrap().value - 1e-9);
    }

    #[test]
    fn gamma_method_ordering(seed in any::<u64>(), k in any::<u8>()) {
        let circuit = random_circuit(seed);
        let model = if k % 4 == 3 {
            model_cce(&circuit, 0.01).unwrap()
        } else {
            model_pauli(&circuit, pauli_of(k), 0.01).unwrap()
        };
        prop_assume!(model.n_params() <= 12);
        let v = gamma_vertex(&circuit, &model).unwrap().value;
        let o = gamma_opt(&circuit, &model, &quick_opt(seed)).unwrap().value;
        let n = gamma_norm(&circuit, &model).unwrap().value;
        prop_assert!(o >= v - 1e-6 && o <= v + 1e-9, "opt {o} vertex {v}");
        prop_assert!(n >= v - 1e-9);
    }

    /// The direct bound dominates the γ bound built from the same γ.
    #[test]
    fn direct_dominates_gamma_bound(seed in any::<u64>(), p in any::<u8>()) {
        let circuit = random_circuit(seed);
        let model = model_pauli(&circuit, pauli_of(p), 0.02).unwrap();
        prop_assume!(model.n_params() <= 16);
        let direct = bound_direct(&circuit, &model, &quick_opt(seed)).unwrap().value;
        let g = gamma_vertex(&circuit, &model).unwrap().value;
        prop_assert!(direct >= bound_gamma(model.delta(), circuit.len(), g).unwrap().value - 1e-12);
    }

    #[test]
    fn partition_dominates_whole(seed in any::<u64>(), p in any::<u8>(), cut_frac in 0.0f64..1.0) {
        let circuit = random_circuit(seed);
        prop_assume!(circuit.len() >= 2);
        let model = model_pauli(&circuit, pauli_of(p), 0.01).unwrap();
        prop_assume!(model.n_params() <= 16);
        let cut = 1 + ((circuit.len() - 1) as f64 * cut_frac) as usize;
        let cut = cut.min(circuit.len() - 1);
        let whole = gamma_vertex(&circuit, &model).unwrap().value;
        let plan = PartitionPlan::uniform(vec![cut], GammaMethod::Vertex);
        let part = gamma_partitioned(&circuit, &model, &plan, 22, &quick_opt(seed)).unwrap().value;
        prop_assert!(part >= whole - 1e-9);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn bound_gamma_monotone(delta in 1e-5f64..0.05, n in 1usize..200, gamma in 0.0f64..2.0, bump in 1.0f64..2.0) {
        let base = bound_gamma(delta, n, gamma).unwrap().value;
        prop_assert!(bound_gamma(delta * bump, n, gamma).unwrap().value <= base);
        prop_assert!(bound_gamma(delta, n + 1, gamma).unwrap().value <= base);
        prop_assert!(bound_gamma(delta, n, gamma + bump - 1.0).unwrap().value <= base);
    }

    /// Conjugating a segment into the frame of any earlier prefix leaves its
    /// summed interaction norm unchanged.
    #[test]
    fn segment_norm_prefix_invariance(seed in any::<u64>(), p in any::<u8>()) {
        let prefix = random_circuit_sized(seed, 2, 3);
        let body = random_circuit_sized(seed.wrapping_add(1), 2, 4);
        let mut whole = prefix.clone();
        for g in body.gates() {
            whole.push(g.clone()).unwrap();
        }
        let pauli = pauli_of(p);
        let mw = model_pauli(&whole, pauli, 0.1).unwrap();
        let mb = model_pauli(&body, pauli, 0.1).unwrap();
        let tb = random_theta(&mut rng(seed), &mb.half_widths());
        let tw = ThetaAssignment::new([vec![0.0; 2 * prefix.len()], tb.values.clone()].concat());
        let gw = interaction_hamiltonians(&whole, &mw, &tw).unwrap();
        let gb = interaction_hamiltonians(&body, &mb, &tb).unwrap();
        let sum = |gs: &[ComplexMatrix]| gs.iter().fold(ComplexMatrix::zeros(4, 4), |a, g| a + g);
        let (nw, nb) = (spectral_norm(&sum(&gw[prefix.len()..])), spectral_norm(&sum(&gb)));
        prop_assert!((nw - nb).abs() < 1e-12);
    }

    #[test]
    fn superoperator_composition(seed in any::<u64>(), qubits in 0u32..=2, k1 in 1usize..=3, k2 in 1usize..=3) {
        let dim = 1usize << qubits;
        let mut r = rng(seed);
        let e1: Vec<ComplexMatrix> = (0..k1).map(|_| random_matrix(&mut r, dim, dim)).collect();
        let e2: Vec<ComplexMatrix> = (0..k2).map(|_| random_matrix(&mut r, dim, dim)).collect();
        let composed: Vec<ComplexMatrix> = e2.iter().flat_map(|b| e1.iter().map(move |a| b * a)).collect();
        let lhs = kraus_to_superop(&composed).unwrap();
        let rhs = kraus_to_superop(&e2).unwrap().after(&kraus_to_superop(&e1).unwrap()).unwrap();
        prop_assert!(max_abs(&(lhs.matrix() - rhs.matrix())) < 1e-12 * max_abs(lhs.matrix()).max(1.0));
    }

    /// On unitary layers the tightened instance bound dominates the
    /// worst-case one evaluated at the instance's own δ and γ.
    #[test]
    fn channel_instance_dominates_worst_case(seed in any::<u64>(), delta in 0.001f64..0.05) {
        let circuit = random_circuit_sized(seed, 1, 4);
        let layers = circuit_superoperators(&circuit).unwrap();
        let mut r = rng(seed);
        let gens: Vec<ComplexMatrix> = (0..layers.len())
            .map(|_| {
                let h = random_hermitian(&mut r, 2, 1.0);
                let ch = LindbladChannel::new(h, vec![]).unwrap();
                let m = lindblad_generator(&ch);
                let s = spectral_norm(&m);
                m * c(delta / s, 0.0)
            })
            .collect();
        let inst = bound_channel_instance_unitary(&layers, &gens).unwrap();
        prop_assert!(inst.value >= bound_channel_instance(&layers, &gens).unwrap().value);
        let gamma = inst.terms.g_norm.unwrap() / delta;
        let worst = bound_channel_worst(1, layers.len(), delta, gamma, true).unwrap();
        prop_assert!(inst.value >= worst.value - 1e-12, "{} < {}", inst.value, worst.value);
    }

    /// For purely coherent errors the unitary bound is at least the channel
    /// bound (both clamped at zero, where they stop being informative).
    #[test]
    fn unitary_bound_dominates_channel_bound(seed in any::<u64>(), p in any::<u8>(), delta in 0.001f64..0.1) {
        let circuit = random_circuit_sized(seed, 1, 5);
        let model = model_pauli(&circuit, pauli_of(p), delta).unwrap();
        let theta = random_theta(&mut rng(seed), &model.half_widths());
        let unitary = bound_direct_at(&circuit, &model, &theta).unwrap().value;
        let gens: Vec<ComplexMatrix> = model
            .layer_hamiltonians(&theta)
            .unwrap()
            .into_iter()
            .map(|h| lindblad_generator(&LindbladChannel::new(h, vec![]).unwrap()))
            .collect();
        let channel = bound_channel_instance(&circuit_superoperators(&circuit).unwrap(), &gens).unwrap().value;
        prop_assert!(unitary.max(0.0) >= channel.max(0.0) - 1e-12);
    }

    #[test]
    fn optimizer_is_deterministic(seed in any::<u64>()) {
        let f = |x: &[f64]| -(x[0] - 0.3).powi(2) - (x[1] * x[0]).sin().abs();
        let s = OptSettings { starts: 6, seed, ..OptSettings::default() };
        let a = maximize_box(&f, &[-1.0, -1.0], &[1.0, 1.0], &s).unwrap();
        let b = maximize_box(&f, &[-1.0, -1.0], &[1.0, 1.0], &s).unwrap();
        prop_assert_eq!(a.value.to_bits(), b.value.to_bits());
        prop_assert!(a.x.iter().zip(&b.x).all(|(x, y)| x.to_bits() == y.to_bits()));
        prop_assert!(a.diagnostics.best_so_far.windows(2).all(|w| w[1] >= w[0]));
    }

    /// Forward differences of a quadratic have error linear in h.
    #[test]
    fn forward_difference_is_first_order(seed in any::<u64>()) {
        let mut r = rng(seed);
        let q: Vec<f64> = (0..3).map(|_| r.random_range(0.5..2.0)).collect();
        let x: Vec<f64> = (0..3).map(|_| r.random_range(-1.0..1.0)).collect();
        let f = |y: &[f64]| y.iter().zip(&q).map(|(a, b)| b * a * a).sum::<f64>();
        let exact: Vec<f64> = x.iter().zip(&q).map(|(a, b)| 2.0 * b * a).collect();
        let err = |h: f64| {
            finite_difference_gradient(&f, &x, h, Gradient::Forward)
                .iter()
                .zip(&exact)
                .map(|(a, b)| (a - b).abs())
                .fold(0.0, f64::max)
        };
        let ratio = err(1e-3) / err(5e-4);
        prop_assert!((ratio - 2.0).abs() < 0.05, "ratio {ratio}");
    }

    #[test]
    fn sampling_is_reproducible_and_nested(seed in any::<u64>(), n1 in 1usize..1500, extra in 1usize..1500) {
        let circuit = random_circuit(seed);
        let model = model_pauli(&circuit, Pauli::Z, 0.05).unwrap();
        let a = sample_fidelity(&circuit, &model, n1, seed).unwrap();
        let b = sample_fidelity(&circuit, &model, n1, seed).unwrap();
        prop_assert_eq!(a.worst.to_bits(), b.worst.to_bits());
        prop_assert_eq!(a.mean.to_bits(), b.mean.to_bits());
        let more = sample_fidelity(&circuit, &model, n1 + extra, seed).unwrap();
        prop_assert!(more.worst <= a.worst);
    }
}

#[test]
fn qft_matches_dft_up_to_phase() {
    for n in 1..=4 {
        let qft = build_qft(n).unwrap();
        let m = dagger(qft.unitary()) * dft_matrix(n);
        let phase = m[(0, 0)];
        assert!((phase.norm() - 1.0).abs() < 1e-9);
        assert!(max_abs(&(m - identity(1 << n) * phase)) < 1e-9);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(6))]

    /// Designs never regress from a feasible start and report satisfied
    /// constraints.
    #[test]
    fn design_never_regresses(seed in any::<u64>(), weight in 0.1f64..2.0) {
        let mut r = rng(seed);
        let gates: Vec<RotationGate> = (0..3)
            .map(|j| RotationGate {
                label: format!("g{j}"),
                support: vec![0],
                generator: random_hermitian(&mut r, 2, 1.0),
            })
            .collect();
        let initial: Vec<f64> = (0..3).map(|_| r.random_range(-1.0..1.0)).collect();
        let problem = DesignProblem {
            template: Template::Rotations { n: 1, gates },
            objective: Objective::WeightedSum {
                cost: None,
                terms: vec![WeightedGamma {
                    weight,
                    model: crate::design::ModelSpec::Pauli {
                        pauli: Pauli::Z,
                        delta: 0.01,
                        correlation: crate::errmodel::Correlation::Independent,
                    },
                    method: GammaMethod::Vertex,
                }],
            },
            constraints: vec![],
            lower: vec![-2.0; 3],
            upper: vec![2.0; 3],
            initial,
            target: None,
        };
        let out = design(&problem, &OptSettings { starts: 4, max_iters: 50, seed, ..OptSettings::default() }).unwrap();
        prop_assert!(out.report.after.objective <= out.report.before.objective + 1e-12);
        prop_assert!(out.report.after.constraints.iter().all(|c| c.satisfied));
    }
}
