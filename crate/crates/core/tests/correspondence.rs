use std::collections::{BTreeMap, BTreeSet};

use proptest::prelude::*;

use infer_core::correspondence::{
    check_functor, toy_perturbations, toy_schema, ArrowSpec, CategorySpec, FunctorSpec, SchemaSpec, SetFunctorSpec,
    DEFAULT_COMMA_CAP,
};
use infer_core::Error;

fn cat(objects: &[&str]) -> CategorySpec {
    CategorySpec { objects: objects.iter().map(|s| s.to_string()).collect(), ..Default::default() }
}

fn map(pairs: &[(&str, &str)]) -> BTreeMap<String, String> {
    pairs.iter().map(|(a, b)| (a.to_string(), b.to_string())).collect()
}

fn sets(pairs: &[(&str, &[&str])]) -> SetFunctorSpec {
    SetFunctorSpec {
        sets: pairs.iter().map(|(o, s)| (o.to_string(), s.iter().map(|x| x.to_string()).collect())).collect(),
        maps: BTreeMap::new(),
    }
}

/// Two subjects, two treatments, one scale.
fn small_schema() -> SchemaSpec {
    SchemaSpec {
        subj: cat(&["s1", "s2"]),
        config: cat(&["t1", "t2"]),
        scale: cat(&["r"]),
        hypotheses: cat(&["h", "h2"]),
        models: cat(&["m1", "m2"]),
        u_subj: sets(&[("s1", &["p"]), ("s2", &["p"])]),
        u_config: sets(&[("t1", &["lo", "hi"]), ("t2", &["on"])]),
        c_t: FunctorSpec { objects: map(&[("t1", "h"), ("t2", "h")]), arrows: BTreeMap::new() },
        c_o: FunctorSpec { objects: map(&[("(r, s1)", "m1"), ("(r, s2)", "m1")]), arrows: BTreeMap::new() },
        theory: FunctorSpec { objects: map(&[("m1", "h"), ("m2", "h2")]), arrows: BTreeMap::new() },
    }
}

#[test]
fn small_schema_commutes_and_redirect_is_located() {
    let d = small_schema().build(DEFAULT_COMMA_CAP).unwrap();
    assert_eq!(d.facts.category.n_objects(), d.scale.n_objects() * d.designs.category.n_objects());
    assert!(d.check().unwrap().commutes);
    let mut s = small_schema();
    s.c_o.objects.insert("(r, s2)".into(), "m2".into());
    let m = s.build(DEFAULT_COMMA_CAP).unwrap().check().unwrap().mismatch.unwrap();
    assert_eq!(m.observational[0], "(r, s2)");
    assert!(m.fact.starts_with("(r, (s2,"), "{}", m.fact);
}

#[test]
fn facts_cardinalities() {
    let d = toy_schema().build(DEFAULT_COMMA_CAP).unwrap();
    let (f, s, g) = (&d.facts.category, &d.scale, &d.designs.category);
    assert_eq!(f.n_objects(), s.n_objects() * g.n_objects());
    assert_eq!(f.n_arrows(), s.n_arrows() * g.n_arrows());
}

#[test]
fn generated_categories_and_functors_are_lawful() {
    for schema in std::iter::once(toy_schema()).chain(toy_perturbations().into_iter().map(|p| p.schema)) {
        let d = schema.build(DEFAULT_COMMA_CAP).unwrap();
        for (name, c) in d.categories() {
            assert!(c.law_violations(10).is_empty(), "{name}");
        }
        for f in &d.functors()[..3] {
            assert!(check_functor(f).valid, "{}", f.name);
        }
    }
}

#[test]
fn functor_composition_is_associative() {
    let d = toy_schema().build(DEFAULT_COMMA_CAP).unwrap();
    let left = d.theory.after(&d.c_o).unwrap().after(&d.facts.p_o).unwrap();
    let right = d.theory.after(&d.c_o.after(&d.facts.p_o).unwrap()).unwrap();
    assert_eq!(left.objects, right.objects);
    assert_eq!(left.arrows, right.arrows);
    assert!(check_functor(&left).valid);
    assert!(d.c_o.after(&d.facts.p_ed).is_err(), "mismatched composition is rejected");
}

#[test]
fn comma_cap_is_enforced() {
    let mut s = toy_schema();
    s.u_config.sets.insert("t1".into(), (0..20).map(|i| format!("v{i}")).collect());
    s.u_subj.sets.iter_mut().for_each(|(_, v)| *v = (0..5).map(|i| format!("e{i}")).collect());
    s.u_subj.maps.insert("a".into(), (0..5).map(|i| (format!("e{i}"), format!("e{i}"))).collect());
    match s.build(DEFAULT_COMMA_CAP) {
        Err(Error::SizeLimit { count, cap }) => {
            assert_eq!(cap, DEFAULT_COMMA_CAP);
            assert_eq!(count, 3 * (20u128.pow(5) + 1));
        }
        other => panic!("expected a size limit, got {other:?}"),
    }
}

#[test]
fn unknown_labels_are_rejected() {
    let mut s = toy_schema();
    s.c_t.objects.insert("t3".into(), "h".into());
    assert!(matches!(s.build(DEFAULT_COMMA_CAP), Err(Error::InvalidFunctor { .. })));
    let mut s = toy_schema();
    s.subj.arrows.push(ArrowSpec { name: "b".into(), src: "s2".into(), tgt: "s9".into() });
    assert!(matches!(s.build(DEFAULT_COMMA_CAP), Err(Error::InvalidCategory(_))));
}

/// Renames every alphanumeric token of a label; `id_X` becomes `id_` plus
/// the renamed `X`.
fn rename(label: &str, names: &BTreeMap<String, String>) -> String {
    let mut out = String::new();
    let mut token = String::new();
    let flush = |token: &mut String, out: &mut String| {
        if token.is_empty() {
            return;
        }
        let renamed = match token.strip_prefix("id_") {
            Some(rest) => format!("id_{}", names[rest]),
            None => names[token.as_str()].clone(),
        };
        out.push_str(&renamed);
        token.clear();
    };
    for c in label.chars() {
        if c.is_alphanumeric() || c == '_' {
            token.push(c);
        } else {
            flush(&mut token, &mut out);
            out.push(c);
        }
    }
    flush(&mut token, &mut out);
    out
}

fn rename_category(c: &CategorySpec, n: &BTreeMap<String, String>) -> CategorySpec {
    let mut r = c.clone();
    r.objects.iter_mut().for_each(|o| *o = rename(o, n));
    for a in &mut r.arrows {
        (a.name, a.src, a.tgt) = (rename(&a.name, n), rename(&a.src, n), rename(&a.tgt, n));
    }
    for c in &mut r.compose {
        (c.first, c.then, c.result) = (rename(&c.first, n), rename(&c.then, n), rename(&c.result, n));
    }
    r
}

fn rename_map(m: &BTreeMap<String, String>, n: &BTreeMap<String, String>) -> BTreeMap<String, String> {
    m.iter().map(|(k, v)| (rename(k, n), rename(v, n))).collect()
}

fn rename_functor(f: &FunctorSpec, n: &BTreeMap<String, String>) -> FunctorSpec {
    FunctorSpec { objects: rename_map(&f.objects, n), arrows: rename_map(&f.arrows, n) }
}

fn rename_sets(s: &SetFunctorSpec, n: &BTreeMap<String, String>) -> SetFunctorSpec {
    SetFunctorSpec {
        sets: s.sets.iter().map(|(k, v)| (rename(k, n), v.iter().map(|x| rename(x, n)).collect())).collect(),
        maps: s.maps.iter().map(|(k, v)| (rename(k, n), rename_map(v, n))).collect(),
    }
}

fn rename_schema(s: &SchemaSpec, n: &BTreeMap<String, String>) -> SchemaSpec {
    SchemaSpec {
        subj: rename_category(&s.subj, n),
        config: rename_category(&s.config, n),
        scale: rename_category(&s.scale, n),
        hypotheses: rename_category(&s.hypotheses, n),
        models: rename_category(&s.models, n),
        u_subj: rename_sets(&s.u_subj, n),
        u_config: rename_sets(&s.u_config, n),
        c_t: rename_functor(&s.c_t, n),
        c_o: rename_functor(&s.c_o, n),
        theory: rename_functor(&s.theory, n),
    }
}

fn base_labels() -> Vec<String> {
    let s = toy_schema();
    let mut out = BTreeSet::new();
    for c in [&s.subj, &s.config, &s.scale, &s.hypotheses, &s.models] {
        out.extend(c.objects.iter().cloned());
        out.extend(c.arrows.iter().map(|a| a.name.clone()));
    }
    for u in [&s.u_subj, &s.u_config] {
        out.extend(u.sets.values().flatten().cloned());
    }
    out.into_iter().collect()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    /// Permuting labels among themselves changes every ordering the checker
    /// could depend on; the verdict and the located fact must follow.
    #[test]
    fn verdict_is_invariant_under_relabeling(perm in Just(base_labels()).prop_shuffle()) {
        let names: BTreeMap<String, String> = base_labels().into_iter().zip(perm).collect();
        let schemas = std::iter::once(toy_schema()).chain(toy_perturbations().into_iter().map(|p| p.schema));
        for s in schemas {
            let before = s.build(DEFAULT_COMMA_CAP).unwrap().check().unwrap();
            let after = rename_schema(&s, &names).build(DEFAULT_COMMA_CAP).unwrap().check().unwrap();
            prop_assert_eq!(before.commutes, after.commutes);
            if let (Some(b), Some(a)) = (before.mismatch, after.mismatch) {
                prop_assert_eq!(b.kind, a.kind);
                prop_assert_eq!(rename(&b.fact, &names), a.fact);
            }
        }
    }
}
