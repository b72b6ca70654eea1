#![allow(dead_code)]

use efc_core::{Characteristics, DiscreteMeasure, RankedMasses};
use proptest::prelude::*;

/// Up to four masses; `proper` forces `Σ x_i = 1`, otherwise some dust is
/// left over.
pub fn masses(proper: bool) -> impl Strategy<Value = RankedMasses> {
    (prop::collection::vec(1u32..=16, 1..=4), 0u32..=8).prop_map(move |(raw, dust)| {
        let dust = if proper { 0 } else { dust.max(1) };
        let total: u32 = raw.iter().sum::<u32>() + dust;
        RankedMasses::new(raw.iter().map(|&r| r as f64 / total as f64).collect()).unwrap()
    })
}

pub fn any_masses() -> impl Strategy<Value = RankedMasses> {
    any::<bool>().prop_flat_map(masses)
}

/// Dislocation measures must not charge `(1, 0, ...)`.
fn measure(atoms: usize, proper: Option<bool>, dislocation: bool) -> impl Strategy<Value = DiscreteMeasure> {
    let x = match proper {
        Some(p) => masses(p).boxed(),
        None => any_masses().boxed(),
    }
    .prop_filter("unit atom", move |x| !(dislocation && x.len() == 1 && x.is_proper()));
    prop::collection::vec((1u32..=8, x), 0..=atoms).prop_map(|atoms| {
        let pairs: Vec<(f64, Vec<f64>)> = atoms
            .into_iter()
            .map(|(w, x)| (w as f64 / 4.0, x.masses().to_vec()))
            .collect();
        let refs: Vec<(f64, &[f64])> = pairs.iter().map(|(w, x)| (*w, x.as_slice())).collect();
        DiscreteMeasure::from_pairs(&refs).unwrap()
    })
}

/// Rates are multiples of 1/4, so they are exact in binary.
pub fn characteristics() -> impl Strategy<Value = Characteristics> {
    (0u32..=8, 0u32..=8, measure(2, None, true), measure(2, None, false)).prop_map(|(ce, ck, disl, coag)| {
        Characteristics::new(ce as f64 / 4.0, ck as f64 / 4.0, disl, coag).unwrap()
    })
}

/// Conservative dislocations with at most four parts, Kingman merges, and
/// nothing else.
pub fn logistic() -> impl Strategy<Value = Characteristics> {
    (1u32..=8, measure(2, Some(true), true)).prop_map(|(ck, disl)| {
        Characteristics::new(0.0, ck as f64 / 4.0, disl, DiscreteMeasure::empty()).unwrap()
    })
}

/// Some fragmentation and some coalescence.
pub fn nondegenerate() -> impl Strategy<Value = Characteristics> {
    characteristics().prop_filter("needs both mechanisms", |c| {
        c.has_fragmentation() && c.has_coalescence()
    })
}
