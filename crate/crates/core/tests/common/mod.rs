//! Brute-force full-Hilbert-space Hamiltonians over bitmask states.
//!
//! Bit `o` of a state set means site offset `o` carries a magnon.

#![allow(dead_code)]

use magnon_core::basis::{Boundary, MagnonPair};

pub struct FullHamiltonian {
    pub sites: usize,
    /// Sparse rows over all bitmask states.
    pub rows: Vec<Vec<(u32, f64)>>,
}

pub fn bonds(sites: usize, boundary: Boundary) -> Vec<(usize, usize)> {
    let mut out: Vec<(usize, usize)> = (0..sites - 1).map(|o| (o, o + 1)).collect();
    if boundary == Boundary::Periodic && sites > 2 {
        out.push((sites - 1, 0));
    }
    out
}

/// `sum_bonds [ (J/2)(a+_i a_j + h.c.) + Delta n_i n_j ] + sum_l B l n_l` with hard-core bosons.
pub fn boson_form(sites: usize, boundary: Boundary, delta: f64, b: f64) -> FullHamiltonian {
    let half = (sites as i64 - 1) / 2;
    let bonds = bonds(sites, boundary);
    let rows = (0..1u32 << sites)
        .map(|state| {
            let occ = |o: usize| (state >> o) & 1 == 1;
            let mut row = Vec::new();
            let mut diag = 0.0;
            for o in 0..sites {
                if occ(o) {
                    diag += b * (o as i64 - half) as f64;
                }
            }
            for &(i, j) in &bonds {
                if occ(i) && occ(j) {
                    diag += delta;
                }
                if occ(i) != occ(j) {
                    row.push((state ^ (1 << i) ^ (1 << j), 0.5));
                }
            }
            row.push((state, diag));
            row
        })
        .collect();
    FullHamiltonian { sites, rows }
}

/// The literal spin form `sum_bonds [ (J/2)(S+S- + h.c.) + Delta Sz Sz ] + sum_l B l Sz`.
pub fn spin_form(sites: usize, boundary: Boundary, delta: f64, b: f64) -> FullHamiltonian {
    let half = (sites as i64 - 1) / 2;
    let bonds = bonds(sites, boundary);
    let sz = |state: u32, o: usize| if (state >> o) & 1 == 1 { 0.5 } else { -0.5 };
    let rows = (0..1u32 << sites)
        .map(|state| {
            let mut row = Vec::new();
            let mut diag = 0.0;
            for o in 0..sites {
                diag += b * (o as i64 - half) as f64 * sz(state, o);
            }
            for &(i, j) in &bonds {
                diag += delta * sz(state, i) * sz(state, j);
                if sz(state, i) != sz(state, j) {
                    row.push((state ^ (1 << i) ^ (1 << j), 0.5));
                }
            }
            row.push((state, diag));
            row
        })
        .collect();
    FullHamiltonian { sites, rows }
}

impl FullHamiltonian {
    pub fn element(&self, from: u32, to: u32) -> f64 {
        self.rows[from as usize]
            .iter()
            .filter(|(s, _)| *s == to)
            .map(|(_, v)| v)
            .sum()
    }

    pub fn two_magnon_states(&self) -> Vec<u32> {
        (0..1u32 << self.sites).filter(|s| s.count_ones() == 2).collect()
    }

    pub fn pair_of(&self, state: u32) -> MagnonPair {
        let half = (self.sites as i64 - 1) / 2;
        let lo = state.trailing_zeros() as i64;
        let hi = 31 - state.leading_zeros() as i64;
        MagnonPair::new(lo - half, hi - half).unwrap()
    }
}
