//! Concrete dependency abstraction: architecture-level dependency terms of
//! the form `<SrcModule>-<DepType>-<TgtModule>`.
//!
//! CDA terms are opaque. They never pass through splitting, stemming or the
//! length filter. The generic `*_with` variants take a term constructor so the
//! mapping engine can use compact term ids instead of strings.

use crate::model::{DependencyType, MappingState, SystemModel};
use crate::textgen::TermDoc;

pub fn cda_term(source: &str, kind: DependencyType, target: &str) -> String {
    format!("{source}-{}-{target}", kind.name())
}

/// For every dependency with both endpoints mapped, the term `A-T-B` is added
/// `count` times to the documents of both `A` and `B` (twice to `A` when
/// `A == B`).
pub fn cda_module_terms_with<T: Ord + Clone>(
    model: &SystemModel,
    state: &MappingState,
    mut term: impl FnMut(usize, DependencyType, usize) -> T,
) -> Vec<TermDoc<T>> {
    let mut docs = vec![TermDoc::new(); model.module_count()];
    for edge in model.edges() {
        if let (Some(a), Some(b)) = (state.module_of(edge.from), state.module_of(edge.to)) {
            let t = term(a, edge.kind, b);
            docs[a].add(t.clone(), edge.count);
            docs[b].add(t, edge.count);
        }
    }
    docs
}

/// Terms generated as if `orphan` were mapped to `module`. Dependencies to
/// unmapped entities contribute nothing.
pub fn cda_hypothetical_terms_with<T: Ord + Clone>(
    orphan: usize,
    module: usize,
    model: &SystemModel,
    state: &MappingState,
    mut term: impl FnMut(usize, DependencyType, usize) -> T,
) -> TermDoc<T> {
    let mut doc = TermDoc::new();
    for edge in model.incident_edges(orphan) {
        if edge.from == orphan {
            if let Some(target) = state.module_of(edge.to) {
                doc.add(term(module, edge.kind, target), edge.count);
            }
        } else if let Some(source) = state.module_of(edge.from) {
            doc.add(term(source, edge.kind, module), edge.count);
        }
    }
    doc
}

pub fn cda_module_terms(model: &SystemModel, state: &MappingState) -> Vec<TermDoc> {
    let arch = model.architecture();
    cda_module_terms_with(model, state, |a, kind, b| cda_term(arch.module_name(a), kind, arch.module_name(b)))
}

pub fn cda_hypothetical_terms(orphan: usize, module: usize, model: &SystemModel, state: &MappingState) -> TermDoc {
    let arch = model.architecture();
    cda_hypothetical_terms_with(orphan, module, model, state, |a, kind, b| {
        cda_term(arch.module_name(a), kind, arch.module_name(b))
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{Dependency, DependencyType::*, Entity, Origin};
    use proptest::prelude::*;

    fn dep(from: &str, to: &str, kind: DependencyType, count: u32) -> Dependency {
        Dependency {
            from: from.into(),
            to: to.into(),
            kind,
            count,
        }
    }

    fn model(deps: Vec<Dependency>) -> SystemModel {
        let ids = ["e1", "e2", "e3", "e4", "o"];
        SystemModel::new(
            "cda",
            ids.map(Entity::new).to_vec(),
            deps,
            vec!["A".into(), "B".into()],
            vec![("A".into(), "B".into())],
            ids.iter()
                .zip(["A", "B", "A", "B", "A"])
                .map(|(e, m)| (e.to_string(), m.to_string()))
                .collect(),
        )
        .unwrap()
    }

    fn state(model: &SystemModel, mapped: &[(usize, usize)]) -> MappingState {
        let mut s = MappingState::new(model);
        for &(e, m) in mapped {
            s.assign(e, m, Origin::Initial).unwrap();
        }
        s
    }

    #[test]
    fn inheritance_example() {
        let m = model(vec![dep("e1", "e2", Extends, 1), dep("o", "e2", Extends, 1)]);
        let s = state(&m, &[(0, 0), (1, 1)]);
        let docs = cda_module_terms(&m, &s);
        assert_eq!(docs[0].count(&"A-Extends-B".into()), 1);
        assert_eq!(docs[1].count(&"A-Extends-B".into()), 1);

        let as_a = cda_hypothetical_terms(4, 0, &m, &s);
        let as_b = cda_hypothetical_terms(4, 1, &m, &s);
        assert_eq!(as_a, ["A-Extends-B"].into_iter().collect());
        assert_eq!(as_b, ["B-Extends-B"].into_iter().collect());
    }

    #[test]
    fn empty_mapping_gives_empty_docs() {
        let m = model(vec![dep("e1", "e2", Extends, 1), dep("e3", "e4", MethodCall, 2)]);
        let s = state(&m, &[]);
        assert!(cda_module_terms(&m, &s).iter().all(TermDoc::is_empty));
        assert!(cda_hypothetical_terms(4, 0, &m, &s).is_empty());
    }

    #[test]
    fn module_terms_match_hand_enumeration() {
        let m = model(vec![
            dep("e1", "e2", Extends, 1),
            dep("e2", "e3", MethodCall, 2),
            dep("e3", "e4", Field, 1),
            dep("e1", "e3", LocalVar, 3),
            dep("e4", "o", Throws, 1),
        ]);
        // o unmapped: the Throws edge contributes nothing.
        let s = state(&m, &[(0, 0), (1, 1), (2, 0), (3, 1)]);
        let docs = cda_module_terms(&m, &s);
        let a: Vec<(String, u32)> = docs[0].iter().map(|(t, n)| (t.clone(), n)).collect();
        let b: Vec<(String, u32)> = docs[1].iter().map(|(t, n)| (t.clone(), n)).collect();
        assert_eq!(
            a,
            vec![
                ("A-Extends-B".into(), 1),
                ("A-Field-B".into(), 1),
                ("A-LocalVar-A".into(), 6),
                ("B-MethodCall-A".into(), 2)
            ]
        );
        assert_eq!(
            b,
            vec![("A-Extends-B".into(), 1), ("A-Field-B".into(), 1), ("B-MethodCall-A".into(), 2)]
        );
    }

    #[test]
    fn hypothetical_terms_respect_direction() {
        let m = model(vec![
            dep("e1", "o", MethodCall, 1),
            dep("e2", "o", Field, 2),
            dep("o", "e2", Returns, 1),
            dep("o", "e3", Throws, 1),
        ]);
        // e3 stays unmapped.
        let s = state(&m, &[(0, 0), (1, 1)]);
        let doc = cda_hypothetical_terms(4, 1, &m, &s);
        let got: Vec<(String, u32)> = doc.iter().map(|(t, n)| (t.clone(), n)).collect();
        assert_eq!(
            got,
            vec![("A-MethodCall-B".into(), 1), ("B-Field-B".into(), 2), ("B-Returns-B".into(), 1)]
        );
        assert_eq!(doc.total(), 4);
    }

    proptest! {
        #[test]
        fn hypotheses_differ_only_in_orphan_position(
            edges in prop::collection::vec((0usize..4, any::<bool>(), 0usize..11, 1u32..4), 0..12),
        ) {
            let ids = ["e1", "e2", "e3", "e4"];
            let deps: Vec<Dependency> = edges.iter().map(|&(e, out, k, c)| {
                let (from, to) = if out { ("o", ids[e]) } else { (ids[e], "o") };
                dep(from, to, DependencyType::ALL[k], c)
            }).collect();
            let m = model(deps);
            let s = state(&m, &[(0, 0), (1, 1), (2, 0)]);
            let h = |module: usize| cda_hypothetical_terms_with(4, module, &m, &s, |a, k, b| (a, k, b));
            // A placeholder module marks the orphan's position.
            let template = h(usize::MAX);
            for module in 0..2 {
                let put = |x: usize| if x == usize::MAX { module } else { x };
                let expected = template.map_terms(|&(a, k, b)| (put(a), k, put(b)));
                prop_assert_eq!(h(module), expected);
            }
        }

        #[test]
        fn total_count_is_twice_mapped_mass(
            edges in prop::collection::vec((0usize..5, 0usize..5, 0usize..11, 1u32..4), 0..15),
            mapped in prop::collection::vec(prop::option::of(0usize..2), 5),
        ) {
            let ids = ["e1", "e2", "e3", "e4", "o"];
            let deps: Vec<Dependency> = edges.iter().filter(|(a, b, _, _)| a != b)
                .map(|&(a, b, k, c)| dep(ids[a], ids[b], DependencyType::ALL[k], c)).collect();
            let m = model(deps);
            let pairs: Vec<(usize, usize)> = mapped.iter().enumerate().filter_map(|(e, m)| m.map(|m| (e, m))).collect();
            let s = state(&m, &pairs);
            let mass: u64 = m.edges().iter()
                .filter(|e| s.is_mapped(e.from) && s.is_mapped(e.to))
                .map(|e| u64::from(e.count)).sum();
            let total: u64 = cda_module_terms(&m, &s).iter().map(TermDoc::total).sum();
            prop_assert_eq!(total, 2 * mass);
        }
    }
}
