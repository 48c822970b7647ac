#![allow(dead_code)]

use proptest::prelude::*;
use proptest::test_runner::{Config, RngSeed};

/// 1000 cases from a fixed seed; no regression files.
pub fn config() -> Config {
    Config {
        cases: 1000,
        rng_seed: RngSeed::Fixed(0x6772_6164),
        failure_persistence: None,
        ..Config::default()
    }
}

/// A nonzero coefficient `p/q`.
pub fn coefficient() -> impl Strategy<Value = (i64, i64)> {
    (prop_oneof![-9i64..=-1, 1i64..=9], 1i64..=6)
}

pub fn join_terms(terms: &[Term]) -> String {
    let mut out = String::new();
    for (k, ((p, q), e)) in terms.iter().enumerate() {
        let sign = if *p < 0 { "-" } else { "+" };
        match k {
            0 if *p < 0 => out.push('-'),
            0 => {}
            _ => out.push_str(&format!(" {sign} ")),
        }
        out.push_str(&term_text((p.abs(), *q), e));
    }
    out
}

fn term_text((p, q): (i64, i64), exps: &[u32]) -> String {
    let mut t = format!("{p}/{q}");
    for (i, &e) in exps.iter().enumerate() {
        if e > 0 {
            t.push_str(&format!("*x{}^{}", i + 1, e));
        }
    }
    t
}

/// Exponent vectors in `dim` variables with total degree exactly `deg`.
fn exponents_of_degree(dim: usize, deg: u32) -> impl Strategy<Value = Vec<u32>> {
    proptest::collection::vec(0.0f64..1.0, dim).prop_map(move |w| {
        // split deg by weights, remainder to the largest weight
        let total: f64 = w.iter().sum::<f64>().max(1e-12);
        let mut e: Vec<u32> = w.iter().map(|v| ((v / total) * deg as f64).floor() as u32).collect();
        let rest = deg - e.iter().sum::<u32>();
        let k = w.iter().enumerate().max_by(|a, b| a.1.total_cmp(b.1)).map_or(0, |(i, _)| i);
        e[k] += rest;
        e
    })
}

pub type Term = ((i64, i64), Vec<u32>);

/// Terms without a constant in `dim` variables, degrees 1..=5.
pub fn polynomial_terms(dim: usize) -> impl Strategy<Value = Vec<Term>> {
    proptest::collection::vec((coefficient(), (1u32..=5).prop_flat_map(move |d| exponents_of_degree(dim, d))), 1..6)
}

pub fn polynomial_text(dim: usize) -> impl Strategy<Value = String> {
    polynomial_terms(dim).prop_map(|terms| join_terms(&terms))
}

/// Text of a homogeneous polynomial of degree `deg`.
pub fn homogeneous_text(dim: usize, deg: u32) -> impl Strategy<Value = String> {
    proptest::collection::vec((coefficient(), exponents_of_degree(dim, deg)), 1..6)
        .prop_map(|terms| join_terms(&terms))
}

/// A point of the cube `[-2, 2]^dim` away from the origin.
pub fn point(dim: usize) -> impl Strategy<Value = Vec<f64>> {
    proptest::collection::vec(-2.0f64..2.0, dim).prop_filter("away from 0", |x| x.iter().map(|v| v * v).sum::<f64>() > 1e-4)
}
