use proptest::prelude::*;

use kryres::circuits::{circuit_unitary, parse_circuit, sample_circuit, Family};
use kryres::krylov::{k_complexity_series, lanczos_state, LanczosOptions};
use kryres::matrix::{effective_hamiltonian, eig_hermitian, eigphases_unitary, Sign, StateVector};
use kryres::qrc::{build_dataset, linspace, reservoir_stats, QrcDataset};
use kryres::spin::{build_ising, parity_basis, project_operator, IsingParams};

#[test]
fn positive_parity_sector_sizes() {
    // (2^n + 2^⌈n/2⌉) / 2: reflection-symmetric strings plus half of the rest
    for (n, dim) in [(4, 10), (5, 20), (6, 36), (8, 136), (10, 528)] {
        assert_eq!(parity_basis(n).unwrap().dim(), dim, "n = {n}");
    }
}

#[test]
fn sector_spectrum_is_part_of_the_full_spectrum() {
    let p = IsingParams::new(6, 0.7);
    let full = eig_hermitian(&build_ising(&p).unwrap()).unwrap().values;
    let sector = project_operator(&build_ising(&p).unwrap(), &parity_basis(6).unwrap()).unwrap();
    for e in eig_hermitian(&sector).unwrap().values {
        assert!(full.iter().any(|f| (f - e).abs() < 1e-10), "{e} missing");
    }
}

#[test]
fn short_time_effective_hamiltonian_is_the_hamiltonian() {
    let h = project_operator(&build_ising(&IsingParams::new(6, 1.0)).unwrap(), &parity_basis(6).unwrap()).unwrap();
    let dec = eig_hermitian(&h).unwrap();
    let t = 0.9 * std::f64::consts::PI / dec.values.iter().fold(0.0_f64, |m, e| m.max(e.abs()));
    let heff = effective_hamiltonian(&eigphases_unitary(&dec.exponentiate(t, 1.0, Sign::Plus)).unwrap(), t, 1.0);
    assert!(heff.max_abs_diff(&h) < 1e-9);
}

#[test]
fn complexity_of_an_eigenstate_stays_zero() {
    let h = build_ising(&IsingParams::new(4, 0.3)).unwrap();
    let dec = eig_hermitian(&h).unwrap();
    let seq = lanczos_state(&h, &dec.vector(3), &LanczosOptions::default()).unwrap();
    assert_eq!(seq.dim(), 1);
    let series = k_complexity_series(&seq, 10.0, 50).unwrap();
    assert!(series.values.iter().all(|c| *c == 0.0));
}

#[test]
fn dataset_text_round_trip() {
    let ds = build_dataset(&IsingParams::new(3, 0.0), &linspace(0.0, 2.0, 12), 0.3).unwrap();
    let back = QrcDataset::from_text(&ds.to_text()).unwrap();
    assert_eq!(back.to_text(), ds.to_text());
    assert_eq!(back.split, ds.split);
}

#[test]
fn reservoir_statistics_are_reproducible() {
    let c = sample_circuit(Family::MG, 4, 40, 17).unwrap();
    let a = reservoir_stats(&c, 200).unwrap();
    let b = reservoir_stats(&parse_circuit(&c.to_text()).unwrap(), 200).unwrap();
    assert_eq!(format!("{a:?}"), format!("{b:?}"));
    assert!(a.krylov_dim >= 1 && a.krylov_dim <= 16);
}

fn family() -> impl Strategy<Value = Family> {
    prop::sample::select(Family::RESERVOIRS.to_vec())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn text_round_trip_preserves_the_unitary(f in family(), n in 3usize..6, seed in any::<u64>()) {
        let c = sample_circuit(f, n, 12, seed).unwrap();
        let text = c.to_text();
        let back = parse_circuit(&text).unwrap();
        prop_assert_eq!(back.to_text(), text);
        prop_assert_eq!(circuit_unitary(&back).unwrap().max_abs_diff(&circuit_unitary(&c).unwrap()), 0.0);
    }

    #[test]
    fn circuits_preserve_the_norm(f in family(), seed in any::<u64>(), k in 0usize..16) {
        let c = sample_circuit(f, 4, 20, seed).unwrap();
        let out = kryres::circuits::apply_circuit(&c, &StateVector::basis(16, k)).unwrap();
        prop_assert!((out.norm() - 1.0).abs() < 1e-12);
    }
}
