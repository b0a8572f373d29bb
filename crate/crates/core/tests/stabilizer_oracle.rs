use cqc_core::noise::{paulis, twirl_to_dephasing, CptpSpec, PauliChannel, C64};
use cqc_core::stabilizer::{
    compile_with_masks, dense_oracle, x_marginals, Basis, Circuit, Gate, InputState, Op, Pauli,
};
use nalgebra::Matrix2;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::f64::consts::FRAC_PI_4;

fn random_clifford_circuit(rng: &mut ChaCha8Rng) -> Circuit {
    let n = rng.gen_range(2..=10);
    let basis = if rng.gen() { Basis::AllPlus } else { Basis::AllZero };
    let mut c = Circuit::new(n, basis);
    let depth = rng.gen_range(1..=12);
    let noise = PauliChannel::new(0.7, 0.1, 0.1, 0.1).unwrap();
    for _ in 0..depth {
        for a in 0..n {
            let b = (a + rng.gen_range(1..n)) % n;
            let g = match rng.gen_range(0..8) {
                0 => Gate::H(a),
                1 => Gate::S(a),
                2 => Gate::Sdg(a),
                3 => Gate::Cz(a, b),
                4 => Gate::Cnot(a, b),
                5 => Gate::ZzQuarter(a, b),
                6 => Gate::Rz(a, rng.gen_range(-3i32..=3) as f64 * FRAC_PI_4),
                _ => continue,
            };
            c.ops.push(Op::Gate(g));
        }
        // A sampled Pauli trajectory, identical for both simulators.
        for a in 0..n {
            if let Some(g) = Gate::pauli(a, Pauli::sample(&noise, rng)) {
                c.ops.push(Op::Gate(g));
            }
        }
    }
    c
}

#[test]
fn tableau_marginals_match_dense_oracle() {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    for case in 0..200 {
        let c = random_clifford_circuit(&mut rng);
        let dense = x_marginals(&dense_oracle(&c).unwrap(), c.n);
        let mut t = c.run_tableau(&mut rng).unwrap();
        assert!(t.is_valid());
        for q in 0..c.n {
            let tab = t.x_marginal(q);
            assert!((tab - dense[q]).abs() < 1e-9, "case {case} qubit {q}: {tab} vs {}", dense[q]);
        }
    }
}

#[test]
fn full_distribution_matches_for_graph_states() {
    // Sampled tableau X outcomes land only on the dense support, with
    // uniform frequencies over it.
    let c = Circuit::new(3, Basis::AllPlus).gate(Gate::Cz(0, 1)).gate(Gate::Cz(1, 2)).gate(Gate::Z(1));
    let dense = dense_oracle(&c).unwrap();
    let mut counts = [0u32; 8];
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let shots = 40_000;
    for _ in 0..shots {
        let mut t = c.run_tableau(&mut rng).unwrap();
        let idx = (0..3).map(|q| (t.measure_x(q, &mut rng) as usize) << q).sum::<usize>();
        counts[idx] += 1;
    }
    for (k, &p) in dense.iter().enumerate() {
        let f = counts[k] as f64 / shots as f64;
        assert!((f - p).abs() < 4.0 * (0.25f64 / shots as f64).sqrt(), "{k}: {f} vs {p}");
    }
}

fn kraus_to_coeffs(ks: &[Matrix2<C64>]) -> CptpSpec {
    let p = paulis();
    let coeffs = ks
        .iter()
        .map(|k| {
            let mut c = [C64::new(0.0, 0.0); 4];
            for l in 0..4 {
                c[l] = (p[l] * k).trace() / 2.0;
            }
            c
        })
        .collect();
    CptpSpec::new(coeffs).unwrap()
}

fn test_channels() -> Vec<CptpSpec> {
    let z = C64::new(0.0, 0.0);
    let r = |x: f64| C64::new(x, 0.0);
    let gamma: f64 = 0.3;
    let damping = [Matrix2::new(r(1.0), z, z, r((1.0 - gamma).sqrt())), Matrix2::new(z, r(gamma.sqrt()), z, z)];
    let phi: f64 = 0.4;
    let rot_y = Matrix2::new(r(phi.cos()), r(-phi.sin()), r(phi.sin()), r(phi.cos()));
    let rot_z = Matrix2::new(C64::from_polar(1.0, 0.3), z, z, C64::from_polar(1.0, -0.3));
    vec![
        kraus_to_coeffs(&damping),
        kraus_to_coeffs(&[rot_y]),
        kraus_to_coeffs(&[damping[0] * rot_z * rot_y, damping[1] * rot_z * rot_y]),
    ]
}

/// Compiled-and-reinterpreted single-qubit runs with general noise give the
/// X statistics of dephasing at the twirled rate.
#[test]
fn randomized_compilation_twirls_to_dephasing() {
    let theta = 0.35;
    let shots = 100_000u32;
    for (i, chan) in test_channels().into_iter().enumerate() {
        let q = twirl_to_dephasing(&chan).unwrap();
        // Exact P(m = 1) for each (ξ, ν̄) prefix.
        let mut p_one = [[0.0; 2]; 2];
        for (xi, row) in p_one.iter_mut().enumerate() {
            for (nb, p) in row.iter_mut().enumerate() {
                let mut c = Circuit::new(1, Basis::AllPlus).gate(Gate::Rz(0, theta));
                if xi == 1 {
                    c.ops.push(Op::Gate(Gate::X(0)));
                }
                if nb == 1 {
                    c.ops.push(Op::Gate(Gate::Z(0)));
                }
                c.ops.push(Op::Channel { site: 0, channel: chan.clone() });
                *p = dense_oracle(&c).unwrap()[1];
            }
        }
        let mut rng = ChaCha8Rng::seed_from_u64(100 + i as u64);
        let inputs = [InputState::Rotated { theta }];
        let mut ones = 0u32;
        for _ in 0..shots {
            let (xi, nu) = (rng.gen::<bool>(), rng.gen::<bool>());
            let comp = compile_with_masks(&inputs, &[vec![]], &[xi], &[nu]).unwrap();
            let m = rng.gen::<f64>() < p_one[comp.xi[0] as usize][comp.nu_bar[0] as usize];
            ones += (m ^ comp.nu[0]) as u32;
        }
        let expect = (1.0 - (1.0 - 2.0 * q) * (2.0 * theta).cos()) / 2.0;
        let n = shots as f64;
        let zscore = (ones as f64 - n * expect) / (n * expect * (1.0 - expect)).sqrt();
        // Two-sided binomial test at α = 0.001.
        assert!(zscore.abs() < 3.2905, "channel {i}: z = {zscore}, q = {q}");
    }
}

/// Without randomization the same channels are generally distinguishable
/// from their twirl, so the test above has power.
#[test]
fn untwirled_noise_differs() {
    let theta = 0.35;
    let chan = &test_channels()[2];
    let q = twirl_to_dephasing(chan).unwrap();
    let mut c = Circuit::new(1, Basis::AllPlus).gate(Gate::Rz(0, theta));
    c.ops.push(Op::Channel { site: 0, channel: chan.clone() });
    let raw = dense_oracle(&c).unwrap()[1];
    let twirled = (1.0 - (1.0 - 2.0 * q) * (2.0 * theta).cos()) / 2.0;
    assert!((raw - twirled).abs() > 0.01);
}
