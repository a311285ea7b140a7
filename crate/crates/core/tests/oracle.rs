//! Brute-force full-Hilbert-space oracle for the sector Hamiltonians.
//!
//! The oracle applies the boson-form lattice Hamiltonian to every one of the
//! `2^L_t` bitmask states, keeps the two-magnon block, and compares it
//! entrywise with the sector builder.

use std::sync::Arc;
use std::time::Instant;

use approx::assert_abs_diff_eq;

mod common;

use common::{bonds, boson_form, spin_form, FullHamiltonian};
use magnon_core::basis::{Boundary, ChainGeometry, Sector, SectorBasis};
use magnon_core::hamiltonian::{build_xxz_sector_hamiltonian, ModelParams};

/// Largest entrywise difference between the projected oracle (minus the
/// vacuum energy and an optional diagonal correction) and the sector builder.
fn max_difference(
    full: &FullHamiltonian,
    basis: &Arc<SectorBasis>,
    params: &ModelParams,
    diagonal_correction: impl Fn(u32) -> f64,
) -> f64 {
    let h = build_xxz_sector_hamiltonian(basis, params).unwrap();
    let vacuum = full.element(0, 0);
    let states = full.two_magnon_states();
    assert_eq!(states.len(), basis.dim());
    let mut worst: f64 = 0.0;
    for &s in &states {
        let i = basis.index_of(full.pair_of(s)).unwrap();
        for &t in &states {
            let j = basis.index_of(full.pair_of(t)).unwrap();
            let mut expected = full.element(s, t);
            if s == t {
                expected -= vacuum + diagonal_correction(s);
            }
            worst = worst.max((expected - h.get(i, j)).abs());
        }
    }
    worst
}

#[test]
fn sector_hamiltonian_matches_full_space_projection() {
    let start = Instant::now();
    for sites in [5usize, 7, 9] {
        for boundary in [Boundary::Open, Boundary::Periodic] {
            let geometry = ChainGeometry::with_total_sites(sites, boundary).unwrap();
            let basis = Arc::new(SectorBasis::new(geometry, Sector::TwoMagnon));
            for delta in [0.0, 1.5, -1.5, 5.0, -5.0] {
                for b in [0.0, 0.05] {
                    if boundary == Boundary::Periodic && b != 0.0 {
                        continue;
                    }
                    let params = ModelParams::new(delta, b).unwrap();
                    let full = boson_form(sites, boundary, delta, b);
                    let worst = max_difference(&full, &basis, &params, |_| 0.0);
                    assert!(
                        worst <= 1e-12,
                        "L_t={sites} {boundary} delta={delta} B={b}: deviation {worst:e}"
                    );
                }
            }
        }
    }
    assert!(start.elapsed().as_secs_f64() < 10.0);
}

#[test]
fn one_magnon_sector_matches_full_space_projection() {
    for sites in [5usize, 7] {
        let geometry = ChainGeometry::with_total_sites(sites, Boundary::Open).unwrap();
        let basis = Arc::new(SectorBasis::new(geometry, Sector::OneMagnon));
        let params = ModelParams::new(-1.5, 0.05).unwrap();
        let h = build_xxz_sector_hamiltonian(&basis, &params).unwrap();
        let full = boson_form(sites, Boundary::Open, -1.5, 0.05);
        for i in 0..sites {
            for j in 0..sites {
                let expected = full.element(1 << i, 1 << j);
                let row = basis.index_of_site(geometry.label(i)).unwrap();
                let col = basis.index_of_site(geometry.label(j)).unwrap();
                assert_abs_diff_eq!(expected, h.get(row, col), epsilon = 1e-12);
            }
        }
    }
}

#[test]
fn documented_entries_agree_with_oracle() {
    let full = boson_form(5, Boundary::Open, -1.5, 0.05);
    let at = |l1: i64, l2: i64| (1u32 << (l1 + 2)) | (1u32 << (l2 + 2));
    assert_abs_diff_eq!(full.element(at(0, 1), at(0, 1)), -1.45, epsilon = 1e-12);
    assert_abs_diff_eq!(full.element(at(-2, 2), at(-2, 2)), 0.0, epsilon = 1e-12);
    assert_eq!(full.element(at(0, 1), at(0, 2)), 0.5);
}

/// The literal spin form differs from the boson form by the one-body term
/// `-(Delta/2) sum_bonds (n_i + n_j)`, which is not constant on an open
/// chain because edge sites touch one bond only.
#[test]
fn spin_form_differs_by_bond_counting_term() {
    let sites = 7;
    let delta = -1.5;
    let geometry = ChainGeometry::with_total_sites(sites, Boundary::Open).unwrap();
    let basis = Arc::new(SectorBasis::new(geometry, Sector::TwoMagnon));
    let params = ModelParams::new(delta, 0.05).unwrap();
    let full = spin_form(sites, Boundary::Open, delta, 0.05);
    // The field term only shifts by the vacuum constant; the Zeeman part is linear in n.
    let bond_term = |state: u32| {
        -0.5 * delta
            * bonds(sites, Boundary::Open)
                .iter()
                .map(|&(i, j)| ((state >> i) & 1) as f64 + ((state >> j) & 1) as f64)
                .sum::<f64>()
    };
    assert!(max_difference(&full, &basis, &params, bond_term) <= 1e-12);
    assert!(max_difference(&full, &basis, &params, |_| 0.0) > 1.0);
}
