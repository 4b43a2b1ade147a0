use std::collections::BTreeMap;
use std::fmt::Write;

use m2ar_core::meta2::{resolve, Bundle, InstanceRef, Model};

fn count(n: usize, one: &str, many: &str) -> String {
    format!("{n} {}", if n == 1 { one } else { many })
}

/// Every instance reference held by the model: attribute values and port targets.
fn references(model: &Model) -> Vec<&InstanceRef> {
    let in_classes = model.classes().flat_map(|c| c.attributes.values());
    let in_relations = model.relations().flat_map(|r| r.attributes.values());
    in_classes
        .chain(in_relations)
        .filter_map(|v| v.as_ref_value())
        .chain(model.ports().filter_map(|p| p.target.as_ref()))
        .collect()
}

fn model_line(bundle: &Bundle, model: &Model) -> String {
    let refs = references(model);
    let resolved = refs.iter().filter(|r| resolve(bundle, r).is_ok()).count();
    format!(
        "{} {} {:?}: {}, {}, {}; references {} resolved, {} unresolved",
        model.id,
        model.scene_type,
        model.name,
        count(model.classes().count(), "class", "classes"),
        count(model.relations().count(), "relation", "relations"),
        count(model.ports().count(), "port", "ports"),
        resolved,
        refs.len() - resolved,
    )
}

/// Plain-text listing; with `only`, a single model broken down by type.
pub fn report(bundle: &Bundle, only: Option<&str>) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "{}", count(bundle.model_count(), "model", "models"));
    for model in bundle.models().filter(|m| only.is_none_or(|id| m.id.as_str() == id)) {
        let _ = writeln!(s, "{}", model_line(bundle, model));
        if only.is_some() {
            let mut by_type: BTreeMap<&str, usize> = BTreeMap::new();
            for c in model.classes() {
                *by_type.entry(c.metaclass.as_str()).or_default() += 1;
            }
            for r in model.relations() {
                *by_type.entry(r.relationclass.as_str()).or_default() += 1;
            }
            for p in model.ports() {
                *by_type.entry(p.port.as_str()).or_default() += 1;
            }
            for (name, n) in by_type {
                let _ = writeln!(s, "  {name}: {n}");
            }
            for r in references(model) {
                if resolve(bundle, r).is_err() {
                    let _ = writeln!(s, "  unresolved: {r}");
                }
            }
        }
    }
    s
}
