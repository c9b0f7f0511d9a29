//! Finite categories and the experimental-verifiability diagram.
//!
//! Experimental designs form the comma category `U_Subj ↓ U_Config`, facts
//! the product `Scale × designs^op`. A schema is verifiable when
//! `theory ∘ C_o ∘ ℙ_o = C_t ∘ ℙ_t ∘ ℙ_ed` holds strictly on every object and
//! arrow of facts.
//!
//! Identities are implicit: the identity of object `X` is the arrow `id_X`.
//! Product objects and arrows are labeled `(a, b)`.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Default bound on the number of enumerated comma-category objects.
pub const DEFAULT_COMMA_CAP: u128 = 1_000_000;
/// Violations listed by [`check_functor`].
pub const MAX_VIOLATIONS: usize = 10;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ArrowSpec {
    pub name: String,
    pub src: String,
    pub tgt: String,
}

/// `then ∘ first = result`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CompositionSpec {
    pub first: String,
    pub then: String,
    pub result: String,
}

/// A category as listed in a schema: non-identity arrows and the
/// composites of composable non-identity pairs.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CategorySpec {
    pub objects: Vec<String>,
    #[serde(default)]
    pub arrows: Vec<ArrowSpec>,
    #[serde(default)]
    pub compose: Vec<CompositionSpec>,
}

/// Object and non-identity arrow assignments of a functor.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FunctorSpec {
    pub objects: BTreeMap<String, String>,
    #[serde(default)]
    pub arrows: BTreeMap<String, String>,
}

/// A set-valued functor: one finite set per object, one function per
/// non-identity arrow.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SetFunctorSpec {
    pub sets: BTreeMap<String, Vec<String>>,
    #[serde(default)]
    pub maps: BTreeMap<String, BTreeMap<String, String>>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Arrow {
    pub name: String,
    pub src: usize,
    pub tgt: usize,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FiniteCategory {
    objects: Vec<String>,
    arrows: Vec<Arrow>,
    identities: Vec<usize>,
    /// `(g, f) ↦ g ∘ f` on composable pairs.
    table: BTreeMap<(usize, usize), usize>,
    object_index: BTreeMap<String, usize>,
    arrow_index: BTreeMap<String, usize>,
}

fn identity_name(object: &str) -> String {
    format!("id_{object}")
}

impl FiniteCategory {
    fn from_parts(
        objects: Vec<String>,
        arrows: Vec<Arrow>,
        identities: Vec<usize>,
        table: BTreeMap<(usize, usize), usize>,
    ) -> Result<Self> {
        let mut object_index = BTreeMap::new();
        for (i, o) in objects.iter().enumerate() {
            if object_index.insert(o.clone(), i).is_some() {
                return Err(Error::InvalidCategory(format!("duplicate object {o}")));
            }
        }
        let mut arrow_index = BTreeMap::new();
        for (i, a) in arrows.iter().enumerate() {
            if arrow_index.insert(a.name.clone(), i).is_some() {
                return Err(Error::InvalidCategory(format!("duplicate arrow {}", a.name)));
            }
        }
        let c = Self { objects, arrows, identities, table, object_index, arrow_index };
        let v = c.law_violations(MAX_VIOLATIONS);
        if v.is_empty() {
            Ok(c)
        } else {
            Err(Error::InvalidCategory(v.join("; ")))
        }
    }

    /// Builds a category from listed objects, non-identity arrows and
    /// composites; unit laws fill in every composite with an identity.
    pub fn from_spec(spec: &CategorySpec) -> Result<Self> {
        let objects = spec.objects.clone();
        let index: BTreeMap<&str, usize> = objects.iter().enumerate().map(|(i, o)| (o.as_str(), i)).collect();
        if index.len() != objects.len() {
            return Err(Error::InvalidCategory("duplicate object labels".into()));
        }
        let mut arrows: Vec<Arrow> =
            objects.iter().enumerate().map(|(i, o)| Arrow { name: identity_name(o), src: i, tgt: i }).collect();
        let identities = (0..objects.len()).collect();
        for a in &spec.arrows {
            let lookup = |o: &str| {
                index.get(o).copied().ok_or_else(|| Error::InvalidCategory(format!("arrow {} uses unknown object {o}", a.name)))
            };
            arrows.push(Arrow { name: a.name.clone(), src: lookup(&a.src)?, tgt: lookup(&a.tgt)? });
        }
        let names: BTreeMap<&str, usize> = arrows.iter().enumerate().map(|(i, a)| (a.name.as_str(), i)).collect();
        if names.len() != arrows.len() {
            return Err(Error::InvalidCategory("duplicate arrow labels (identities are implicit)".into()));
        }
        let mut table = BTreeMap::new();
        for (f, af) in arrows.iter().enumerate() {
            table.insert((f, af.src), f);
            table.insert((af.tgt, f), f);
        }
        for c in &spec.compose {
            let lookup = |n: &str| {
                names.get(n).copied().ok_or_else(|| Error::InvalidCategory(format!("composition uses unknown arrow {n}")))
            };
            let (f, g, r) = (lookup(&c.first)?, lookup(&c.then)?, lookup(&c.result)?);
            if let Some(old) = table.insert((g, f), r) {
                if old != r {
                    return Err(Error::InvalidCategory(format!(
                        "{} ∘ {} defined twice with different results",
                        c.then, c.first
                    )));
                }
            }
        }
        Self::from_parts(objects, arrows, identities, table)
    }

    /// Objects only, with their identities.
    pub fn discrete<S: Into<String>>(labels: impl IntoIterator<Item = S>) -> Result<Self> {
        Self::from_spec(&CategorySpec { objects: labels.into_iter().map(Into::into).collect(), ..Default::default() })
    }

    /// One object `*` with its identity.
    pub fn terminal() -> Self {
        Self::discrete(["*"]).expect("valid category")
    }

    pub fn objects(&self) -> &[String] {
        &self.objects
    }

    pub fn arrows(&self) -> &[Arrow] {
        &self.arrows
    }

    pub fn n_objects(&self) -> usize {
        self.objects.len()
    }

    pub fn n_arrows(&self) -> usize {
        self.arrows.len()
    }

    pub fn identity(&self, object: usize) -> usize {
        self.identities[object]
    }

    pub fn is_identity(&self, arrow: usize) -> bool {
        self.identities[self.arrows[arrow].src] == arrow
    }

    /// `g ∘ f`, when `f` and `g` are composable.
    pub fn compose(&self, g: usize, f: usize) -> Option<usize> {
        self.table.get(&(g, f)).copied()
    }

    pub fn object_index(&self, label: &str) -> Option<usize> {
        self.object_index.get(label).copied()
    }

    pub fn arrow_index(&self, label: &str) -> Option<usize> {
        self.arrow_index.get(label).copied()
    }

    pub fn hom(&self, x: usize, y: usize) -> Vec<usize> {
        (0..self.arrows.len()).filter(|&a| self.arrows[a].src == x && self.arrows[a].tgt == y).collect()
    }

    /// Exhaustive identity, totality and associativity check; at most
    /// `limit` violations are reported.
    pub fn law_violations(&self, limit: usize) -> Vec<String> {
        let mut v = Vec::new();
        let push = |v: &mut Vec<String>, s: String| {
            if v.len() < limit {
                v.push(s);
            }
        };
        if self.identities.len() != self.objects.len() {
            push(&mut v, "one identity per object required".into());
            return v;
        }
        for (x, &id) in self.identities.iter().enumerate() {
            let a = &self.arrows[id];
            if a.src != x || a.tgt != x {
                push(&mut v, format!("identity {} of {} is not an endomorphism", a.name, self.objects[x]));
            }
        }
        if !v.is_empty() {
            return v;
        }
        // Arrows grouped by source so composable pairs are enumerated directly.
        let mut out_of = vec![Vec::new(); self.objects.len()];
        for (i, a) in self.arrows.iter().enumerate() {
            out_of[a.src].push(i);
        }
        for (f, af) in self.arrows.iter().enumerate() {
            if self.compose(f, self.identities[af.src]) != Some(f) || self.compose(self.identities[af.tgt], f) != Some(f) {
                push(&mut v, format!("identity law fails for {}", af.name));
            }
            for &g in &out_of[af.tgt] {
                let ag = &self.arrows[g];
                match self.compose(g, f) {
                    None => push(&mut v, format!("{} ∘ {} is undefined", ag.name, af.name)),
                    Some(r) => {
                        let ar = &self.arrows[r];
                        if ar.src != af.src || ar.tgt != ag.tgt {
                            push(&mut v, format!("{} ∘ {} = {} has the wrong endpoints", ag.name, af.name, ar.name));
                        }
                    }
                }
            }
        }
        for ((g, f), _) in self.table.iter() {
            if self.arrows[*f].tgt != self.arrows[*g].src {
                push(&mut v, format!("composite of non-composable {} and {}", self.arrows[*g].name, self.arrows[*f].name));
            }
        }
        if !v.is_empty() {
            return v;
        }
        for (f, af) in self.arrows.iter().enumerate() {
            for &g in &out_of[af.tgt] {
                let gf = self.table[&(g, f)];
                for &h in &out_of[self.arrows[g].tgt] {
                    let hg = self.table[&(h, g)];
                    if self.table[&(h, gf)] != self.table[&(hg, f)] {
                        push(
                            &mut v,
                            format!(
                                "associativity fails for ({}, {}, {})",
                                self.arrows[h].name, self.arrows[g].name, af.name
                            ),
                        );
                    }
                }
            }
        }
        v
    }

    pub fn is_valid(&self) -> bool {
        self.law_violations(1).is_empty()
    }

    /// The schema form of this category, listing only non-identity arrows.
    pub fn to_spec(&self) -> CategorySpec {
        let arrows = (0..self.arrows.len())
            .filter(|&a| !self.is_identity(a))
            .map(|a| ArrowSpec {
                name: self.arrows[a].name.clone(),
                src: self.objects[self.arrows[a].src].clone(),
                tgt: self.objects[self.arrows[a].tgt].clone(),
            })
            .collect();
        let compose = self
            .table
            .iter()
            .filter(|((g, f), _)| !self.is_identity(*g) && !self.is_identity(*f))
            .map(|((g, f), r)| CompositionSpec {
                first: self.arrows[*f].name.clone(),
                then: self.arrows[*g].name.clone(),
                result: self.arrows[*r].name.clone(),
            })
            .collect();
        CategorySpec { objects: self.objects.clone(), arrows, compose }
    }
}

/// Reverses every arrow and transposes composition; labels are kept.
pub fn opposite(c: &FiniteCategory) -> FiniteCategory {
    FiniteCategory {
        objects: c.objects.clone(),
        arrows: c.arrows.iter().map(|a| Arrow { name: a.name.clone(), src: a.tgt, tgt: a.src }).collect(),
        identities: c.identities.clone(),
        table: c.table.iter().map(|(&(g, f), &r)| ((f, g), r)).collect(),
        object_index: c.object_index.clone(),
        arrow_index: c.arrow_index.clone(),
    }
}

/// A functor between finite categories, stored as index maps.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FunctorMap {
    pub name: String,
    pub source: Arc<FiniteCategory>,
    pub target: Arc<FiniteCategory>,
    pub objects: Vec<usize>,
    pub arrows: Vec<usize>,
}

impl FunctorMap {
    pub fn identity(name: &str, c: Arc<FiniteCategory>) -> Self {
        Self {
            name: name.into(),
            objects: (0..c.n_objects()).collect(),
            arrows: (0..c.n_arrows()).collect(),
            source: c.clone(),
            target: c,
        }
    }

    /// Resolves labels; identities map to identities unless listed.
    pub fn from_spec(
        name: &str,
        source: Arc<FiniteCategory>,
        target: Arc<FiniteCategory>,
        spec: &FunctorSpec,
    ) -> Result<Self> {
        let bad = |msg: String| Error::InvalidFunctor { name: name.into(), violations: vec![msg] };
        for k in spec.objects.keys() {
            if source.object_index(k).is_none() {
                return Err(bad(format!("unknown source object {k}")));
            }
        }
        for k in spec.arrows.keys() {
            if source.arrow_index(k).is_none() {
                return Err(bad(format!("unknown source arrow {k}")));
            }
        }
        let mut objects = Vec::with_capacity(source.n_objects());
        for o in source.objects() {
            let img = spec.objects.get(o).ok_or_else(|| bad(format!("object {o} has no image")))?;
            objects.push(target.object_index(img).ok_or_else(|| bad(format!("image {img} of {o} is not an object")))?);
        }
        let mut arrows = Vec::with_capacity(source.n_arrows());
        for (i, a) in source.arrows().iter().enumerate() {
            let idx = match spec.arrows.get(&a.name) {
                Some(img) => {
                    target.arrow_index(img).ok_or_else(|| bad(format!("image {img} of {} is not an arrow", a.name)))?
                }
                None if source.is_identity(i) => target.identity(objects[a.src]),
                None => return Err(bad(format!("arrow {} has no image", a.name))),
            };
            arrows.push(idx);
        }
        Ok(Self { name: name.into(), source, target, objects, arrows })
    }

    /// `self ∘ inner`.
    pub fn after(&self, inner: &FunctorMap) -> Result<FunctorMap> {
        if inner.target != self.source {
            return Err(Error::InvalidFunctor {
                name: format!("{} ∘ {}", self.name, inner.name),
                violations: vec!["codomain and domain differ".into()],
            });
        }
        Ok(FunctorMap {
            name: format!("{} ∘ {}", self.name, inner.name),
            source: inner.source.clone(),
            target: self.target.clone(),
            objects: inner.objects.iter().map(|&o| self.objects[o]).collect(),
            arrows: inner.arrows.iter().map(|&a| self.arrows[a]).collect(),
        })
    }

    /// The same assignment between opposite categories.
    pub fn opposite(&self, source: Arc<FiniteCategory>, target: Arc<FiniteCategory>) -> FunctorMap {
        FunctorMap { name: format!("{}^op", self.name), source, target, objects: self.objects.clone(), arrows: self.arrows.clone() }
    }

    pub fn object_image(&self, label: &str) -> Option<&str> {
        let i = self.source.object_index(label)?;
        Some(&self.target.objects()[self.objects[i]])
    }

    pub fn arrow_image(&self, label: &str) -> Option<&str> {
        let i = self.source.arrow_index(label)?;
        Some(&self.target.arrows()[self.arrows[i]].name)
    }

    pub fn to_spec(&self) -> FunctorSpec {
        FunctorSpec {
            objects: self
                .source
                .objects()
                .iter()
                .zip(&self.objects)
                .map(|(o, &i)| (o.clone(), self.target.objects()[i].clone()))
                .collect(),
            arrows: (0..self.source.n_arrows())
                .filter(|&a| !self.source.is_identity(a))
                .map(|a| (self.source.arrows()[a].name.clone(), self.target.arrows()[self.arrows[a]].name.clone()))
                .collect(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct FunctorReport {
    pub valid: bool,
    /// The first violations found, at most [`MAX_VIOLATIONS`].
    pub violations: Vec<String>,
}

/// Exhaustive check of endpoints, identities and composites.
pub fn check_functor(f: &FunctorMap) -> FunctorReport {
    let (s, t) = (&*f.source, &*f.target);
    let mut v = Vec::new();
    if f.objects.len() != s.n_objects() || f.arrows.len() != s.n_arrows() {
        v.push("maps do not cover the source category".into());
        return FunctorReport { valid: false, violations: v };
    }
    if f.objects.iter().any(|&o| o >= t.n_objects()) || f.arrows.iter().any(|&a| a >= t.n_arrows()) {
        v.push("images outside the target category".into());
        return FunctorReport { valid: false, violations: v };
    }
    let mut push = |msg: String| {
        if v.len() < MAX_VIOLATIONS {
            v.push(msg);
        }
    };
    for (i, a) in s.arrows().iter().enumerate() {
        let img = &t.arrows()[f.arrows[i]];
        if img.src != f.objects[a.src] || img.tgt != f.objects[a.tgt] {
            push(format!(
                "{}: {} → {} maps to {}: {} → {}",
                a.name,
                s.objects()[a.src],
                s.objects()[a.tgt],
                img.name,
                t.objects()[img.src],
                t.objects()[img.tgt]
            ));
        }
    }
    for x in 0..s.n_objects() {
        if f.arrows[s.identity(x)] != t.identity(f.objects[x]) {
            push(format!("identity of {} is not preserved", s.objects()[x]));
        }
    }
    for (&(g, h), &r) in &s.table {
        let lhs = f.arrows[r];
        if t.compose(f.arrows[g], f.arrows[h]) != Some(lhs) {
            push(format!(
                "F({} ∘ {}) = {} differs from F({}) ∘ F({})",
                s.arrows()[g].name,
                s.arrows()[h].name,
                t.arrows()[lhs].name,
                s.arrows()[g].name,
                s.arrows()[h].name
            ));
        }
    }
    FunctorReport { valid: v.is_empty(), violations: v }
}

fn require_functor(f: &FunctorMap) -> Result<()> {
    let r = check_functor(f);
    if r.valid {
        Ok(())
    } else {
        Err(Error::InvalidFunctor { name: f.name.clone(), violations: r.violations })
    }
}

fn pair_label(a: &str, b: &str) -> String {
    format!("({a}, {b})")
}

/// `C × D` with its two projections.
#[derive(Debug, Clone)]
pub struct Product {
    pub category: Arc<FiniteCategory>,
    pub left: FunctorMap,
    pub right: FunctorMap,
}

pub fn product(c: &Arc<FiniteCategory>, d: &Arc<FiniteCategory>) -> Result<Product> {
    let (n, m) = (c.n_objects(), d.n_objects());
    let (p, q) = (c.n_arrows(), d.n_arrows());
    let mut objects = Vec::with_capacity(n * m);
    for a in c.objects() {
        for b in d.objects() {
            objects.push(pair_label(a, b));
        }
    }
    let mut arrows = Vec::with_capacity(p * q);
    for (i, f) in c.arrows().iter().enumerate() {
        for (j, g) in d.arrows().iter().enumerate() {
            let (src, tgt) = (f.src * m + g.src, f.tgt * m + g.tgt);
            let name = if c.is_identity(i) && d.is_identity(j) {
                identity_name(&objects[src])
            } else {
                pair_label(&f.name, &g.name)
            };
            arrows.push(Arrow { name, src, tgt });
        }
    }
    let identities = (0..n).flat_map(|x| (0..m).map(move |y| (x, y))).map(|(x, y)| c.identity(x) * q + d.identity(y)).collect();
    let mut table = BTreeMap::new();
    for (&(g1, f1), &r1) in &c.table {
        for (&(g2, f2), &r2) in &d.table {
            table.insert((g1 * q + g2, f1 * q + f2), r1 * q + r2);
        }
    }
    let category = Arc::new(FiniteCategory::from_parts(objects, arrows, identities, table)?);
    let left = FunctorMap {
        name: "π₁".into(),
        source: category.clone(),
        target: c.clone(),
        objects: (0..n * m).map(|k| k / m).collect(),
        arrows: (0..p * q).map(|k| k / q).collect(),
    };
    let right = FunctorMap {
        name: "π₂".into(),
        source: category.clone(),
        target: d.clone(),
        objects: (0..n * m).map(|k| k % m).collect(),
        arrows: (0..p * q).map(|k| k % q).collect(),
    };
    Ok(Product { category, left, right })
}

/// `F × G` between products built by [`product`].
fn product_functor(name: &str, f: &FunctorMap, g: &FunctorMap, source: &Product, target: &Product) -> FunctorMap {
    let (m_s, q_s) = (g.source.n_objects(), g.source.n_arrows());
    let (m_t, q_t) = (g.target.n_objects(), g.target.n_arrows());
    FunctorMap {
        name: name.into(),
        source: source.category.clone(),
        target: target.category.clone(),
        objects: (0..source.category.n_objects()).map(|k| f.objects[k / m_s] * m_t + g.objects[k % m_s]).collect(),
        arrows: (0..source.category.n_arrows()).map(|k| f.arrows[k / q_s] * q_t + g.arrows[k % q_s]).collect(),
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SetValuedFunctor {
    pub category: Arc<FiniteCategory>,
    /// Element labels of each object's set.
    pub sets: Vec<Vec<String>>,
    /// `maps[a][x]`: image of element `x` of the source set under arrow `a`.
    pub maps: Vec<Vec<usize>>,
}

impl SetValuedFunctor {
    pub fn from_spec(category: Arc<FiniteCategory>, spec: &SetFunctorSpec) -> Result<Self> {
        let bad = |msg: String| Error::InvalidFunctor { name: "set-valued functor".into(), violations: vec![msg] };
        let mut sets = Vec::new();
        for o in category.objects() {
            let s = spec.sets.get(o).ok_or_else(|| bad(format!("object {o} has no set")))?;
            let mut uniq = s.clone();
            uniq.sort();
            uniq.dedup();
            if uniq.len() != s.len() {
                return Err(bad(format!("set of {o} has repeated elements")));
            }
            sets.push(s.clone());
        }
        for k in spec.sets.keys().chain(spec.maps.keys()) {
            if category.object_index(k).is_none() && category.arrow_index(k).is_none() {
                return Err(bad(format!("unknown label {k}")));
            }
        }
        let mut maps = Vec::new();
        for (i, a) in category.arrows().iter().enumerate() {
            let (src, tgt) = (&sets[a.src], &sets[a.tgt]);
            let m = match spec.maps.get(&a.name) {
                Some(m) => src
                    .iter()
                    .map(|x| {
                        let y = m.get(x).ok_or_else(|| bad(format!("{} does not map element {x}", a.name)))?;
                        tgt.iter().position(|t| t == y).ok_or_else(|| bad(format!("{} maps {x} outside its target", a.name)))
                    })
                    .collect::<Result<Vec<_>>>()?,
                None if category.is_identity(i) => (0..src.len()).collect(),
                None => return Err(bad(format!("arrow {} has no function", a.name))),
            };
            maps.push(m);
        }
        let f = Self { category, sets, maps };
        let v = f.violations();
        if v.is_empty() {
            Ok(f)
        } else {
            Err(Error::InvalidFunctor { name: "set-valued functor".into(), violations: v })
        }
    }

    pub fn violations(&self) -> Vec<String> {
        let c = &*self.category;
        let mut v = Vec::new();
        for x in 0..c.n_objects() {
            let id = &self.maps[c.identity(x)];
            if id.iter().enumerate().any(|(i, &j)| i != j) {
                v.push(format!("identity of {} is not the identity function", c.objects()[x]));
            }
        }
        for (&(g, f), &r) in &c.table {
            let composed: Vec<usize> = self.maps[f].iter().map(|&y| self.maps[g][y]).collect();
            if composed != self.maps[r] && v.len() < MAX_VIOLATIONS {
                v.push(format!("composite {} ∘ {} is not preserved", c.arrows()[g].name, c.arrows()[f].name));
            }
        }
        v.truncate(MAX_VIOLATIONS);
        v
    }
}

/// `U ↓ V` with its projections to the two base categories.
#[derive(Debug, Clone)]
pub struct CommaCategory {
    pub category: Arc<FiniteCategory>,
    pub to_subj: FunctorMap,
    pub to_config: FunctorMap,
}

fn function_label(u: &[String], v: &[String], f: &[usize]) -> String {
    let mut s = String::from("{");
    for (i, (x, &y)) in u.iter().zip(f).enumerate() {
        if i > 0 {
            s.push_str(", ");
        }
        let _ = write!(s, "{x}↦{}", v[y]);
    }
    s.push('}');
    s
}

/// Number of comma objects, saturating at `u128::MAX`.
pub fn comma_size(u: &SetValuedFunctor, v: &SetValuedFunctor) -> u128 {
    let mut total: u128 = 0;
    for su in &u.sets {
        for sv in &v.sets {
            let mut count: u128 = 1;
            for _ in 0..su.len() {
                count = count.saturating_mul(sv.len() as u128);
            }
            total = total.saturating_add(count);
        }
    }
    total
}

/// Objects `(s, c, f: U(s) → V(c))`; arrows `(α, β)` with `V(β)∘f = f′∘U(α)`.
pub fn comma(u: &SetValuedFunctor, v: &SetValuedFunctor, cap: u128) -> Result<CommaCategory> {
    let count = comma_size(u, v);
    if count > cap {
        return Err(Error::SizeLimit { count, cap });
    }
    let (sc, cc) = (&*u.category, &*v.category);
    let mut objs: Vec<(usize, usize, Vec<usize>)> = Vec::new();
    for s in 0..sc.n_objects() {
        for c in 0..cc.n_objects() {
            let (k, m) = (u.sets[s].len(), v.sets[c].len());
            if m == 0 && k > 0 {
                continue;
            }
            let mut f = vec![0usize; k];
            loop {
                objs.push((s, c, f.clone()));
                // Odometer over all functions k → m.
                let mut i = 0;
                while i < k {
                    f[i] += 1;
                    if f[i] < m {
                        break;
                    }
                    f[i] = 0;
                    i += 1;
                }
                if i == k {
                    break;
                }
            }
        }
    }
    let labels: Vec<String> = objs
        .iter()
        .map(|(s, c, f)| format!("({}, {}, {})", sc.objects()[*s], cc.objects()[*c], function_label(&u.sets[*s], &v.sets[*c], f)))
        .collect();
    let mut by_base: BTreeMap<(usize, usize), Vec<usize>> = BTreeMap::new();
    for (i, (s, c, _)) in objs.iter().enumerate() {
        by_base.entry((*s, *c)).or_default().push(i);
    }
    let mut arrows = Vec::new();
    let mut parts: Vec<(usize, usize)> = Vec::new();
    let mut index: BTreeMap<(usize, usize, usize, usize), usize> = BTreeMap::new();
    let mut identities = vec![usize::MAX; objs.len()];
    for (x, (s, c, f)) in objs.iter().enumerate() {
        for alpha in (0..sc.n_arrows()).filter(|&a| sc.arrows()[a].src == *s) {
            for beta in (0..cc.n_arrows()).filter(|&b| cc.arrows()[b].src == *c) {
                let (s2, c2) = (sc.arrows()[alpha].tgt, cc.arrows()[beta].tgt);
                for &y in by_base.get(&(s2, c2)).map(|v| v.as_slice()).unwrap_or(&[]) {
                    let f2 = &objs[y].2;
                    let commutes = (0..f.len()).all(|e| v.maps[beta][f[e]] == f2[u.maps[alpha][e]]);
                    if !commutes {
                        continue;
                    }
                    let is_id = x == y && sc.is_identity(alpha) && cc.is_identity(beta);
                    let name = if is_id {
                        identity_name(&labels[x])
                    } else {
                        format!(
                            "({}, {}): {} → {}",
                            sc.arrows()[alpha].name,
                            cc.arrows()[beta].name,
                            labels[x],
                            labels[y]
                        )
                    };
                    if is_id {
                        identities[x] = arrows.len();
                    }
                    index.insert((x, y, alpha, beta), arrows.len());
                    arrows.push(Arrow { name, src: x, tgt: y });
                    parts.push((alpha, beta));
                }
            }
        }
    }
    let mut table = BTreeMap::new();
    for (f_idx, af) in arrows.iter().enumerate() {
        for (g_idx, ag) in arrows.iter().enumerate().filter(|(_, a)| a.src == af.tgt) {
            let (a1, b1) = parts[f_idx];
            let (a2, b2) = parts[g_idx];
            let (Some(a), Some(b)) = (sc.compose(a2, a1), cc.compose(b2, b1)) else {
                return Err(Error::InvalidCategory("base categories are not closed under composition".into()));
            };
            let r = index.get(&(af.src, ag.tgt, a, b)).copied().ok_or_else(|| {
                Error::InvalidFunctor { name: "set-valued functor".into(), violations: vec!["composite square missing".into()] }
            })?;
            table.insert((g_idx, f_idx), r);
        }
    }
    let to_subj_obj = objs.iter().map(|o| o.0).collect();
    let to_config_obj = objs.iter().map(|o| o.1).collect();
    let category = Arc::new(FiniteCategory::from_parts(labels, arrows, identities, table)?);
    let to_subj = FunctorMap {
        name: "designs→Subj".into(),
        source: category.clone(),
        target: u.category.clone(),
        objects: to_subj_obj,
        arrows: parts.iter().map(|p| p.0).collect(),
    };
    let to_config = FunctorMap {
        name: "designs→Config".into(),
        source: category.clone(),
        target: v.category.clone(),
        objects: to_config_obj,
        arrows: parts.iter().map(|p| p.1).collect(),
    };
    Ok(CommaCategory { category, to_subj, to_config })
}

/// Facts `Scale × designs^op` with the projection functors of the diagram.
#[derive(Debug, Clone)]
pub struct Facts {
    pub category: Arc<FiniteCategory>,
    pub designs_op: Arc<FiniteCategory>,
    pub config_op: Arc<FiniteCategory>,
    pub subj_op: Arc<FiniteCategory>,
    /// Observations `Scale × Subj^op`.
    pub observations: Arc<FiniteCategory>,
    /// `ℙ_ed: facts → designs^op`.
    pub p_ed: FunctorMap,
    /// `ℙ_t: designs^op → Config^op`.
    pub p_t: FunctorMap,
    /// `ℙ_o: facts → Scale × Subj^op`.
    pub p_o: FunctorMap,
}

pub fn facts_category(scale: &Arc<FiniteCategory>, designs: &CommaCategory) -> Result<Facts> {
    let designs_op = Arc::new(opposite(&designs.category));
    let config_op = Arc::new(opposite(&designs.to_config.target));
    let subj_op = Arc::new(opposite(&designs.to_subj.target));
    let facts = product(scale, &designs_op)?;
    let observations = product(scale, &subj_op)?;
    let mut p_ed = facts.right.clone();
    p_ed.name = "ℙ_ed".into();
    let mut p_t = designs.to_config.opposite(designs_op.clone(), config_op.clone());
    p_t.name = "ℙ_t".into();
    let to_subj_op = designs.to_subj.opposite(designs_op.clone(), subj_op.clone());
    let p_o = product_functor("ℙ_o", &FunctorMap::identity("id_Scale", scale.clone()), &to_subj_op, &facts, &observations);
    Ok(Facts {
        category: facts.category,
        designs_op,
        config_op,
        subj_op,
        observations: observations.category,
        p_ed,
        p_t,
        p_o,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MismatchKind {
    Object,
    Arrow,
}

/// Where the two composites first disagree.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Mismatch {
    pub kind: MismatchKind,
    pub fact: String,
    /// Images under `ℙ_o`, `C_o`, `theory`.
    pub observational: Vec<String>,
    /// Images under `ℙ_ed`, `ℙ_t`, `C_t`.
    pub theoretical: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Verdict {
    pub commutes: bool,
    pub mismatch: Option<Mismatch>,
}

/// Strict commutation of `theory ∘ C_o ∘ ℙ_o` and `C_t ∘ ℙ_t ∘ ℙ_ed`,
/// objects first, then arrows.
pub fn check_verifiability(facts: &Facts, c_t: &FunctorMap, c_o: &FunctorMap, theory: &FunctorMap) -> Result<Verdict> {
    for f in [&facts.p_ed, &facts.p_t, &facts.p_o, c_t, c_o, theory] {
        require_functor(f)?;
    }
    let typing = |name: &str, ok: bool| {
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidFunctor { name: name.into(), violations: vec!["functor types do not form the diagram".into()] })
        }
    };
    typing(&c_o.name, *c_o.source == *facts.observations)?;
    typing(&c_t.name, *c_t.source == *facts.config_op)?;
    typing(&theory.name, theory.source == c_o.target && theory.target == c_t.target)?;
    let obs = [&facts.p_o, c_o, theory];
    let theo = [&facts.p_ed, &facts.p_t, c_t];
    let facts_cat = &*facts.category;
    let chain_obj = |fs: &[&FunctorMap; 3], x: usize| {
        let mut out = Vec::new();
        let mut cur = x;
        for f in fs {
            cur = f.objects[cur];
            out.push(f.target.objects()[cur].clone());
        }
        (cur, out)
    };
    let chain_arr = |fs: &[&FunctorMap; 3], a: usize| {
        let mut out = Vec::new();
        let mut cur = a;
        for f in fs {
            cur = f.arrows[cur];
            out.push(f.target.arrows()[cur].name.clone());
        }
        (cur, out)
    };
    for x in 0..facts_cat.n_objects() {
        let (l, lo) = chain_obj(&obs, x);
        let (r, ro) = chain_obj(&theo, x);
        if l != r {
            return Ok(Verdict {
                commutes: false,
                mismatch: Some(Mismatch {
                    kind: MismatchKind::Object,
                    fact: facts_cat.objects()[x].clone(),
                    observational: lo,
                    theoretical: ro,
                }),
            });
        }
    }
    for a in 0..facts_cat.n_arrows() {
        let (l, lo) = chain_arr(&obs, a);
        let (r, ro) = chain_arr(&theo, a);
        if l != r {
            return Ok(Verdict {
                commutes: false,
                mismatch: Some(Mismatch {
                    kind: MismatchKind::Arrow,
                    fact: facts_cat.arrows()[a].name.clone(),
                    observational: lo,
                    theoretical: ro,
                }),
            });
        }
    }
    Ok(Verdict { commutes: true, mismatch: None })
}

/// A full verifiability schema as exchanged in JSON.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SchemaSpec {
    pub subj: CategorySpec,
    pub config: CategorySpec,
    pub scale: CategorySpec,
    pub hypotheses: CategorySpec,
    pub models: CategorySpec,
    #[serde(rename = "U_subj")]
    pub u_subj: SetFunctorSpec,
    #[serde(rename = "U_config")]
    pub u_config: SetFunctorSpec,
    #[serde(rename = "C_t")]
    pub c_t: FunctorSpec,
    #[serde(rename = "C_o")]
    pub c_o: FunctorSpec,
    pub theory: FunctorSpec,
}

/// A schema with every category and functor built.
#[derive(Debug, Clone)]
pub struct Diagram {
    pub subj: Arc<FiniteCategory>,
    pub config: Arc<FiniteCategory>,
    pub scale: Arc<FiniteCategory>,
    pub hypotheses: Arc<FiniteCategory>,
    pub models: Arc<FiniteCategory>,
    pub designs: CommaCategory,
    pub facts: Facts,
    pub c_t: FunctorMap,
    pub c_o: FunctorMap,
    pub theory: FunctorMap,
}

impl SchemaSpec {
    pub fn build(&self, cap: u128) -> Result<Diagram> {
        let cat = |s: &CategorySpec| FiniteCategory::from_spec(s).map(Arc::new);
        let (subj, config, scale) = (cat(&self.subj)?, cat(&self.config)?, cat(&self.scale)?);
        let (hypotheses, models) = (cat(&self.hypotheses)?, cat(&self.models)?);
        let u = SetValuedFunctor::from_spec(subj.clone(), &self.u_subj)?;
        let v = SetValuedFunctor::from_spec(config.clone(), &self.u_config)?;
        let designs = comma(&u, &v, cap)?;
        let facts = facts_category(&scale, &designs)?;
        let c_t = FunctorMap::from_spec("C_t", facts.config_op.clone(), hypotheses.clone(), &self.c_t)?;
        let c_o = FunctorMap::from_spec("C_o", facts.observations.clone(), models.clone(), &self.c_o)?;
        let theory = FunctorMap::from_spec("theory", models.clone(), hypotheses.clone(), &self.theory)?;
        Ok(Diagram { subj, config, scale, hypotheses, models, designs, facts, c_t, c_o, theory })
    }
}

impl Diagram {
    pub fn check(&self) -> Result<Verdict> {
        check_verifiability(&self.facts, &self.c_t, &self.c_o, &self.theory)
    }

    /// Every category of the diagram, supplied or generated.
    pub fn categories(&self) -> Vec<(&'static str, &FiniteCategory)> {
        vec![
            ("Subj", &self.subj),
            ("Config", &self.config),
            ("Scale", &self.scale),
            ("hypotheses", &self.hypotheses),
            ("models", &self.models),
            ("designs", &self.designs.category),
            ("designs^op", &self.facts.designs_op),
            ("Config^op", &self.facts.config_op),
            ("Subj^op", &self.facts.subj_op),
            ("observations", &self.facts.observations),
            ("facts", &self.facts.category),
        ]
    }

    pub fn functors(&self) -> Vec<&FunctorMap> {
        vec![&self.facts.p_ed, &self.facts.p_t, &self.facts.p_o, &self.c_t, &self.c_o, &self.theory]
    }
}

const TOY_SCHEMA: &str = include_str!("../data/toy_schema.json");

/// A consistent schema: three preparations (one arrow `a: s1 → s2`), two
/// treatments with two and one readings, two registration scales, models
/// `m1, m2, mx` and hypotheses `h, h2`.
pub fn toy_schema() -> SchemaSpec {
    serde_json::from_str(TOY_SCHEMA).expect("embedded schema parses")
}

/// One redirected functor value.
#[derive(Debug, Clone)]
pub struct Perturbation {
    pub description: &'static str,
    pub schema: SchemaSpec,
    pub expected: MismatchKind,
    /// Label that must appear in the mismatch's observational or
    /// theoretical images.
    pub located_at: &'static str,
}

/// Five single-edit variants of [`toy_schema`], none of which commutes.
pub fn toy_perturbations() -> Vec<Perturbation> {
    let base = toy_schema();
    let edit = |f: &dyn Fn(&mut SchemaSpec)| {
        let mut s = base.clone();
        f(&mut s);
        s
    };
    vec![
        Perturbation {
            description: "theory sends mu to e",
            schema: edit(&|s| {
                s.theory.arrows.insert("mu".into(), "e".into());
            }),
            expected: MismatchKind::Arrow,
            located_at: "mu",
        },
        Perturbation {
            description: "C_t sends t2 to h2",
            schema: edit(&|s| {
                s.c_t.objects.insert("t2".into(), "h2".into());
            }),
            expected: MismatchKind::Object,
            located_at: "t2",
        },
        Perturbation {
            description: "C_t sends t1 to h2",
            schema: edit(&|s| {
                s.c_t.objects.insert("t1".into(), "h2".into());
            }),
            expected: MismatchKind::Object,
            located_at: "t1",
        },
        Perturbation {
            description: "C_o sends (id_r2, a) to nu",
            schema: edit(&|s| {
                s.c_o.arrows.insert("(id_r2, a)".into(), "nu".into());
            }),
            expected: MismatchKind::Arrow,
            located_at: "(id_r2, a)",
        },
        Perturbation {
            description: "C_o sends (r2, s3) to mx",
            schema: edit(&|s| {
                s.c_o.objects.insert("(r2, s3)".into(), "mx".into());
            }),
            expected: MismatchKind::Object,
            located_at: "(r2, s3)",
        },
    ]
}
