use nalgebra::{DMatrix, DVector};
use num_complex::Complex64 as C;
use proptest::prelude::*;
use qtl_core::circuit::{
    build_state_matrices, eigenvalues, is_hurwitz, normal_modes, validate_spec,
};
use qtl_core::freq::{cayley, scattering_g, scattering_s};
use qtl_core::markov::{markov_model, normalized_b, FREQ_TOL};
use qtl_core::timedomain::propagate_ohmic;
use qtl_core::{CircuitSpec, SpectralDensity};

fn spd(n: usize, entries: &[f64], floor: f64) -> DMatrix<f64> {
    let a = DMatrix::from_iterator(n, n, entries.iter().copied().take(n * n));
    &a * a.transpose() + DMatrix::identity(n, n) * floor
}

fn density(tag: u8, r: f64, c: f64) -> SpectralDensity {
    if tag.is_multiple_of(2) {
        SpectralDensity::Ohmic { r }
    } else {
        SpectralDensity::Drude { r, omega_c: c }
    }
}

prop_compose! {
    fn raw_parts()(n in 1usize..=4)(
        n in Just(n),
        l in prop::collection::vec(-1.0f64..1.0, 16),
        k in prop::collection::vec(-1.0f64..1.0, 16),
        tags in prop::collection::vec(0u8..2, 4),
        rs in prop::collection::vec(0.1f64..2.0, 4),
        cs in prop::collection::vec(0.5f64..5.0, 4),
    ) -> (usize, DMatrix<f64>, DMatrix<f64>, Vec<(u8, f64, f64)>) {
        let lines = (0..n).map(|i| (tags[i], rs[i], cs[i])).collect();
        (n, spd(n, &l, 0.2), spd(n, &k, 0.1), lines)
    }
}

/// Random circuit with independent lines.
fn any_spec() -> impl Strategy<Value = CircuitSpec> {
    raw_parts().prop_map(|(_, l, k, lines)| {
        let lines = lines
            .into_iter()
            .map(|(t, r, c)| density(t, r, c))
            .collect();
        CircuitSpec::new(l, k, lines).unwrap()
    })
}

/// Random circuit whose lines all share one density.
fn common_line_spec() -> impl Strategy<Value = CircuitSpec> {
    raw_parts().prop_map(|(n, l, k, lines)| {
        let (t, r, c) = lines[0];
        CircuitSpec::new(l, k, vec![density(t, r, c); n]).unwrap()
    })
}

fn common_ohmic_spec() -> impl Strategy<Value = (CircuitSpec, f64)> {
    raw_parts().prop_map(|(n, l, k, lines)| {
        let r = lines[0].1;
        (
            CircuitSpec::new(l, k, vec![SpectralDensity::Ohmic { r }; n]).unwrap(),
            r,
        )
    })
}

/// Lines with a finite Lamb shift: Drude or sharp cutoff.
fn markov_spec() -> impl Strategy<Value = CircuitSpec> {
    raw_parts().prop_map(|(_, l, k, lines)| {
        let lines = lines
            .into_iter()
            .map(|(t, r, c)| match t {
                0 => SpectralDensity::CutoffOhmic {
                    r,
                    omega_c: 4.0 * c,
                },
                _ => SpectralDensity::Drude { r, omega_c: c },
            })
            .collect();
        CircuitSpec::new(l, k, lines).unwrap()
    })
}

fn sorted(mut v: Vec<C>) -> Vec<C> {
    v.sort_by(|a, b| a.re.total_cmp(&b.re).then(a.im.total_cmp(&b.im)));
    v
}

fn unitarity_residual(g: &DMatrix<C>) -> f64 {
    let n = g.nrows();
    (g.adjoint() * g - DMatrix::<C>::identity(n, n)).camax()
}

proptest! {
    #![proptest_config(ProptestConfig {
        cases: 48,
        failure_persistence: None,
        ..ProptestConfig::default()
    })]

    #[test]
    fn a_plus_spectrum_mirrors_a_minus((spec, r) in common_ohmic_spec()) {
        let sm = build_state_matrices(&spec, r).unwrap();
        let minus = sorted(eigenvalues(&sm.a_minus).unwrap().into_iter().map(|z| -z).collect());
        let plus = sorted(eigenvalues(&sm.a_plus).unwrap());
        let scale = sm.a_minus.amax().max(1.0);
        for (a, b) in minus.iter().zip(&plus) {
            prop_assert!((a - b).norm() < 1e-7 * scale, "{a} vs {b}");
        }
    }

    #[test]
    fn damped_circuit_is_hurwitz((spec, r) in common_ohmic_spec()) {
        let sm = build_state_matrices(&spec, r).unwrap();
        prop_assert!(is_hurwitz(&sm.a_minus, 1e-12).unwrap().hurwitz);
        prop_assert!(!is_hurwitz(&sm.a_plus, 1e-12).unwrap().hurwitz);
    }

    #[test]
    fn validation_is_idempotent(spec in any_spec()) {
        let once = validate_spec(&spec).unwrap();
        let twice = validate_spec(&once).unwrap();
        prop_assert_eq!(once, twice);
    }

    #[test]
    fn normal_modes_diagonalize_hamiltonian(spec in any_spec()) {
        let m = normal_modes(&spec).unwrap();
        let n = spec.n;
        let kq = m.y.transpose() * &spec.k * &m.y;
        let lp = m.p_coeff.transpose() * spec.l_inverse() * &m.p_coeff;
        let w = DMatrix::from_diagonal(&DVector::from_vec(m.omegas.clone()));
        let scale = w.amax().max(1.0);
        prop_assert!((kq - &w).amax() < 1e-9 * scale);
        prop_assert!((lp - &w).amax() < 1e-9 * scale);
        prop_assert!(m.ccr_residual() < 1e-10);
        prop_assert!(m.omegas.windows(2).all(|p| p[0] <= p[1]));
        prop_assert_eq!(m.len(), n);
    }

    #[test]
    fn boundary_unitarity_for_common_lines(spec in common_line_spec()) {
        for i in 0..200 {
            let w = 10f64.powf(-2.0 + 4.0 * i as f64 / 199.0);
            let g = scattering_g(&spec, w).unwrap();
            prop_assert!(unitarity_residual(&g) < 1e-10);
        }
    }

    #[test]
    fn g_is_minus_boundary_s_for_ohmic((spec, _r) in common_ohmic_spec(), w in -20.0f64..20.0) {
        let g = scattering_g(&spec, w).unwrap();
        let s = scattering_s(&spec, C::new(1e-12, -w)).unwrap();
        prop_assert!((&g + s).camax() < 1e-9);
        let gm = scattering_g(&spec, -w).unwrap();
        prop_assert!((gm - g.map(|z| z.conj())).camax() < 1e-12);
    }

    #[test]
    fn cayley_is_an_involution(spec in any_spec(), x in 1e-3f64..10.0, y in -10.0f64..10.0) {
        let s = scattering_s(&spec, C::new(x, y)).unwrap();
        if let Ok(back) = cayley(&s).and_then(|c| cayley(&c)) {
            prop_assert!((back - &s).camax() < 1e-10 * s.camax().max(1.0));
        }
    }

    #[test]
    fn markov_generator_identity(spec in markov_spec()) {
        let m = markov_model(&spec, FREQ_TOL).unwrap();
        let herm = &m.generator + m.generator.adjoint();
        let modes = m.omegas.len();
        let mut expected = DMatrix::<C>::zeros(modes, modes);
        for j in 0..modes {
            for jp in 0..modes {
                let (a, b) = (m.omegas[j], m.omegas[jp]);
                if (a - b).abs() > FREQ_TOL * a.max(b) {
                    continue;
                }
                let mut acc = 0.0;
                for (k, sd) in spec.lines.iter().enumerate() {
                    acc -= sd.eval(a) * m.y[(k, j)] * m.y[(k, jp)];
                }
                expected[(j, jp)] = C::new(acc, 0.0);
            }
        }
        prop_assert!((herm - expected).camax() < 1e-10);
        // passivity with unit-weight noises: A + A^dagger = -B B^dagger
        let bn = normalized_b(&m.b_mat, &m.channels);
        let bb = &bn * bn.adjoint();
        prop_assert!((&m.a_mat + m.a_mat.adjoint() + bb).camax() < 1e-10);
        prop_assert!((&m.c_mat + m.b_mat.adjoint()).camax() < 1e-14);
    }

    #[test]
    fn energy_balance_of_free_decay((spec, r) in common_ohmic_spec()) {
        let n = spec.n;
        let q0 = DVector::from_fn(n, |i, _| 1.0 - 0.3 * i as f64);
        let i0 = DVector::zeros(n);
        let dt = 1e-3;
        let tr = propagate_ohmic(&spec, r, &q0, &i0, None, dt, 5.0).unwrap();
        // E(0) - E(t) = r int |i|^2
        let mut lost = 0.0;
        for k in 1..tr.len() {
            let a = tr.i.column(k - 1).norm_squared();
            let b = tr.i.column(k).norm_squared();
            lost += r * (a + b) * dt / 2.0;
        }
        let e0 = tr.energy[0];
        let balance = e0 - tr.energy[tr.len() - 1] - lost;
        prop_assert!(balance.abs() < 1e-5 * e0, "{balance} vs {e0}");
    }
}

#[test]
fn general_lines_break_plain_unitarity() {
    // Unequal line resistances: G is unitary only up to the J^{1/2} similarity.
    let spec = CircuitSpec::new(
        DMatrix::from_row_slice(2, 2, &[1.0, 0.2, 0.2, 1.0]),
        DMatrix::from_row_slice(2, 2, &[1.0, 0.3, 0.3, 2.0]),
        vec![
            SpectralDensity::Ohmic { r: 0.5 },
            SpectralDensity::Ohmic { r: 2.0 },
        ],
    )
    .unwrap();
    let w = 1.3;
    let g = scattering_g(&spec, w).unwrap();
    assert!(unitarity_residual(&g) > 1e-3);
    let jh = DMatrix::from_diagonal(&DVector::from_vec(vec![
        C::new((0.5 * w).sqrt(), 0.0),
        C::new((2.0 * w).sqrt(), 0.0),
    ]));
    let jh_inv = jh.map(|z| if z.re > 0.0 { 1.0 / z } else { z });
    let u = &jh_inv * g * &jh;
    assert!(unitarity_residual(&u) < 1e-12);
}
