//! Finite atomic boolean algebras.
//!
//! A finite algebra is the powerset of its atoms; elements are stored as
//! canonical atom subsets so equality is exact. The finite analogue of the
//! Stone representation sends an element to its 0/1 indicator over atoms.

use std::collections::BTreeSet;
use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};

/// Vector of reals indexed by atoms.
pub type AtomVector = Vec<f64>;

/// The powerset algebra `2^n` over a list of labeled atoms.
#[derive(Clone, PartialEq, Eq)]
pub struct FiniteBooleanAlgebra {
    atoms: Arc<[String]>,
}

impl fmt::Debug for FiniteBooleanAlgebra {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_tuple("FiniteBooleanAlgebra").field(&&*self.atoms).finish()
    }
}

impl FiniteBooleanAlgebra {
    pub fn new<I, S>(atoms: I) -> Result<Self>
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        let atoms: Vec<String> = atoms.into_iter().map(Into::into).collect();
        if atoms.is_empty() {
            return Err(Error::InvalidAlgebra("an algebra needs at least one atom".into()));
        }
        let mut seen = BTreeSet::new();
        for a in &atoms {
            if !seen.insert(a.as_str()) {
                return Err(Error::InvalidAlgebra(format!("duplicate atom label {a:?}")));
            }
        }
        Ok(Self { atoms: atoms.into() })
    }

    /// Algebra with atoms labeled `a1..an`.
    pub fn with_size(n: usize) -> Result<Self> {
        Self::new((1..=n).map(|i| format!("a{i}")))
    }

    /// Product algebra with atoms `x:y`, ordered row-major (first factor outer).
    pub fn product(&self, other: &Self) -> Self {
        let atoms: Vec<String> = self
            .atoms
            .iter()
            .flat_map(|x| other.atoms.iter().map(move |y| format!("{x}:{y}")))
            .collect();
        Self { atoms: atoms.into() }
    }

    pub fn len(&self) -> usize {
        self.atoms.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn atoms(&self) -> &[String] {
        &self.atoms
    }

    pub fn index_of(&self, label: &str) -> Option<usize> {
        self.atoms.iter().position(|a| a == label)
    }

    pub fn top(&self) -> AlgebraElement {
        AlgebraElement { algebra: self.clone(), members: vec![true; self.len()] }
    }

    pub fn bottom(&self) -> AlgebraElement {
        AlgebraElement { algebra: self.clone(), members: vec![false; self.len()] }
    }

    pub fn atom(&self, index: usize) -> Result<AlgebraElement> {
        self.from_indices([index])
    }

    pub fn from_indices<I: IntoIterator<Item = usize>>(&self, indices: I) -> Result<AlgebraElement> {
        let mut members = vec![false; self.len()];
        for i in indices {
            if i >= self.len() {
                return Err(Error::Domain(format!("atom index {i} out of range for {} atoms", self.len())));
            }
            members[i] = true;
        }
        Ok(AlgebraElement { algebra: self.clone(), members })
    }

    pub fn element<I, S>(&self, labels: I) -> Result<AlgebraElement>
    where
        I: IntoIterator<Item = S>,
        S: AsRef<str>,
    {
        let mut indices = Vec::new();
        for l in labels {
            let l = l.as_ref();
            indices.push(self.index_of(l).ok_or_else(|| Error::Domain(format!("unknown atom label {l:?}")))?);
        }
        self.from_indices(indices)
    }

    /// Quotient by a set of null atoms: the algebra on the surviving atoms and
    /// the map carrying old atom indices to new ones.
    pub fn quotient_by_null(&self, null_atoms: &BTreeSet<usize>) -> Result<(Self, QuotientMap)> {
        if let Some(&i) = null_atoms.iter().find(|&&i| i >= self.len()) {
            return Err(Error::Domain(format!("null atom index {i} out of range")));
        }
        let mut index_map = Vec::with_capacity(self.len());
        let mut kept = Vec::new();
        for (i, label) in self.atoms.iter().enumerate() {
            if null_atoms.contains(&i) {
                index_map.push(None);
            } else {
                index_map.push(Some(kept.len()));
                kept.push(label.clone());
            }
        }
        if kept.is_empty() {
            return Err(Error::EmptyQuotient);
        }
        let quotient = if kept.len() == self.len() { self.clone() } else { Self { atoms: kept.into() } };
        let map = QuotientMap { source: self.clone(), target: quotient.clone(), index_map };
        Ok((quotient, map))
    }

    pub(crate) fn same_as(&self, other: &Self) -> bool {
        Arc::ptr_eq(&self.atoms, &other.atoms) || self.atoms == other.atoms
    }
}

/// Old-to-new atom index map produced by [`FiniteBooleanAlgebra::quotient_by_null`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct QuotientMap {
    source: FiniteBooleanAlgebra,
    target: FiniteBooleanAlgebra,
    index_map: Vec<Option<usize>>,
}

impl QuotientMap {
    pub fn source(&self) -> &FiniteBooleanAlgebra {
        &self.source
    }

    pub fn target(&self) -> &FiniteBooleanAlgebra {
        &self.target
    }

    /// `None` for null atoms.
    pub fn index_map(&self) -> &[Option<usize>] {
        &self.index_map
    }

    /// Image of an element in the quotient (its class modulo null atoms).
    pub fn project(&self, a: &AlgebraElement) -> Result<AlgebraElement> {
        if !a.algebra.same_as(&self.source) {
            return Err(Error::AlgebraMismatch);
        }
        let idx = a.indices().filter_map(|i| self.index_map[i]);
        self.target.from_indices(idx)
    }

    /// Drops the coordinates of null atoms.
    pub fn project_vector(&self, v: &[f64]) -> Result<AtomVector> {
        if v.len() != self.source.len() {
            return Err(Error::AlgebraMismatch);
        }
        Ok(v.iter().zip(&self.index_map).filter(|(_, m)| m.is_some()).map(|(x, _)| *x).collect())
    }

    /// Composition `self` then `next`.
    pub fn then(&self, next: &QuotientMap) -> Result<QuotientMap> {
        if !self.target.same_as(&next.source) {
            return Err(Error::AlgebraMismatch);
        }
        let index_map = self.index_map.iter().map(|m| m.and_then(|j| next.index_map[j])).collect();
        Ok(QuotientMap { source: self.source.clone(), target: next.target.clone(), index_map })
    }
}

/// An element of a finite boolean algebra, i.e. a subset of its atoms.
#[derive(Clone, PartialEq, Eq)]
pub struct AlgebraElement {
    algebra: FiniteBooleanAlgebra,
    members: Vec<bool>,
}

impl fmt::Debug for AlgebraElement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_set().entries(self.labels()).finish()
    }
}

impl AlgebraElement {
    pub fn algebra(&self) -> &FiniteBooleanAlgebra {
        &self.algebra
    }

    pub fn contains(&self, index: usize) -> bool {
        self.members.get(index).copied().unwrap_or(false)
    }

    pub fn indices(&self) -> impl Iterator<Item = usize> + '_ {
        self.members.iter().enumerate().filter(|(_, &m)| m).map(|(i, _)| i)
    }

    pub fn labels(&self) -> impl Iterator<Item = &str> + '_ {
        self.indices().map(|i| self.algebra.atoms[i].as_str())
    }

    pub fn count(&self) -> usize {
        self.members.iter().filter(|&&m| m).count()
    }

    pub fn is_bottom(&self) -> bool {
        self.members.iter().all(|m| !m)
    }

    pub fn is_top(&self) -> bool {
        self.members.iter().all(|&m| m)
    }

    fn zip_with(&self, other: &Self, op: impl Fn(bool, bool) -> bool) -> Result<Self> {
        if !self.algebra.same_as(&other.algebra) {
            return Err(Error::AlgebraMismatch);
        }
        let members = self.members.iter().zip(&other.members).map(|(&a, &b)| op(a, b)).collect();
        Ok(Self { algebra: self.algebra.clone(), members })
    }

    pub fn meet(&self, other: &Self) -> Result<Self> {
        self.zip_with(other, |a, b| a && b)
    }

    pub fn join(&self, other: &Self) -> Result<Self> {
        self.zip_with(other, |a, b| a || b)
    }

    pub fn complement(&self) -> Self {
        Self { algebra: self.algebra.clone(), members: self.members.iter().map(|m| !m).collect() }
    }

    pub fn is_subset(&self, other: &Self) -> Result<bool> {
        Ok(self.meet(other)? == *self)
    }

    /// Characteristic vector: 1 on member atoms, 0 elsewhere.
    pub fn indicator(&self) -> AtomVector {
        self.members.iter().map(|&m| if m { 1.0 } else { 0.0 }).collect()
    }
}
