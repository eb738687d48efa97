mod common;

use common::oracle::{self, dpll, OracleError};
use proptest::prelude::*;
use unigram::fol::PresetId;
use unigram::logic::{check_sat_bounded, label, parse_fof, Decider, Formula, LogicError, SatStatus};

fn brute(nvars: usize, clauses: &[Vec<i32>]) -> bool {
    (0u32..1 << nvars).any(|m| {
        clauses
            .iter()
            .all(|c| c.iter().any(|&l| ((m >> (l.unsigned_abs() - 1)) & 1 == 1) == (l > 0)))
    })
}

fn clause() -> impl Strategy<Value = Vec<i32>> {
    prop::collection::vec(
        (1i32..=6, any::<bool>()).prop_map(|(v, s)| if s { v } else { -v }),
        0..4,
    )
}

fn parse(src: &[&str]) -> Vec<Formula> {
    src.iter().map(|s| parse_fof(s).unwrap()).collect()
}

fn sat(src: &[&str]) -> Result<bool, OracleError> {
    let fs = parse(src);
    oracle::satisfiable(&fs.iter().collect::<Vec<_>>())
}

#[test]
fn oracle_handles_equality_and_skolem_constants() {
    assert_eq!(sat(&["p(a)", "~p(b)", "a = b"]), Ok(false));
    assert_eq!(sat(&["p(a)", "~p(b)"]), Ok(true));
    assert_eq!(sat(&["?[X]:(p(X))", "![X]:(~p(X))"]), Ok(false));
    assert_eq!(sat(&["![X]:(X = a)", "p(a)", "~p(b)"]), Ok(false));
    assert_eq!(sat(&["a = b", "b = c", "a != c"]), Ok(false));
    assert_eq!(sat(&["r(a,b)", "~r(b,a)", "a = b"]), Ok(false));
    assert_eq!(sat(&["![X]:(?[Y]:(r(X,Y)))"]), Err(OracleError::OutsideFragment));
}

#[test]
fn room_closure_is_an_entailment_for_the_oracle() {
    let ps = parse(&[
        "![X]:(room(X)=>(X=mary|X=paul))&room(mary)&room(paul)",
        "happy(mary)",
        "happy(paul)",
    ]);
    let h = parse_fof("![X]:(room(X)=>happy(X))").unwrap();
    assert_eq!(oracle::label(&ps, &h), Ok(unigram::logic::Label::Entailment));
}

proptest! {
    #[test]
    fn dpll_agrees_with_truth_tables(cls in prop::collection::vec(clause(), 0..14)) {
        prop_assert_eq!(dpll(6, &cls), brute(6, &cls));
    }
}

// Small random sentences over two constants, unary p/q and equality.
fn formula() -> impl Strategy<Value = String> {
    let atom = prop_oneof![
        Just("p(a)".to_string()),
        Just("q(b)".to_string()),
        Just("p(X)".to_string()),
        Just("q(X)".to_string()),
        Just("X = a".to_string()),
        Just("a = b".to_string()),
    ];
    let body = atom.prop_recursive(3, 12, 2, |inner| {
        prop_oneof![
            inner.clone().prop_map(|a| format!("~({a})")),
            (inner.clone(), inner.clone()).prop_map(|(a, b)| format!("({a})&({b})")),
            (inner.clone(), inner.clone()).prop_map(|(a, b)| format!("({a})|({b})")),
            (inner.clone(), inner.clone()).prop_map(|(a, b)| format!("({a})=>({b})")),
            (inner.clone(), inner).prop_map(|(a, b)| format!("({a})<=>({b})")),
        ]
    });
    (body, 0..3usize).prop_map(|(b, q)| match q {
        0 => format!("![X]:({b})"),
        1 => format!("?[X]:({b})"),
        _ => format!("~![X]:({b})"),
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(300))]

    #[test]
    fn oracle_agrees_with_the_finder(src in prop::collection::vec(formula(), 1..4)) {
        let refs: Vec<&str> = src.iter().map(String::as_str).collect();
        let fs = parse(&refs);
        let expected = oracle::satisfiable(&fs.iter().collect::<Vec<_>>()).unwrap();
        let got = check_sat_bounded(&fs, 16).status;
        prop_assert_eq!(got, if expected { SatStatus::Sat } else { SatStatus::Unsat }, "{:?}", src);
    }
}

#[test]
fn sampled_monadic_candidates_label_the_same_both_ways() {
    let preset = common::preset(PresetId::UnigramFol);
    let decider = Decider::default();
    let mut compared = 0;
    for c in common::candidates(&preset, 11, 150) {
        let (ps, h) = (c.premise_formulas(), c.hypothesis_formula());
        let mut all = ps.clone();
        all.push(h.clone());
        if !oracle::is_monadic(&all) {
            continue;
        }
        let ours = match label(&ps, &h, &decider) {
            Ok(l) => l,
            Err(LogicError::Undecided) => continue,
            Err(e) => panic!("{e}"),
        };
        match oracle::label(&ps, &h) {
            Ok(l) => {
                compared += 1;
                assert_eq!(l, ours.label, "{ps:?} |- {h:?}");
                let used = ours.used_premises.unwrap_or_default();
                assert!(oracle::deletion_minimal(&ps, &h, l, &used).unwrap());
            }
            Err(OracleError::OutsideFragment) => {}
            Err(e) => panic!("{e:?}"),
        }
    }
    assert!(compared >= 20, "only {compared} monadic candidates compared");
}
