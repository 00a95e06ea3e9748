//! Finite-dimensional graded commutative Q-algebras with explicit bases.
//!
//! Every coefficient algebra in a family model (the base ring, the total-space
//! ring and all their boundary analogues) is one of these: an ordered basis of
//! named symbols with degrees, a structure-constant table, a unit, a set of
//! distinguished classes and an optional integral functional supported in top
//! degree.
//!
//! Invariants (enforced by [`Algebra::validate`], called at load):
//! - multiplication is commutative and associative on the basis;
//! - the unit is a two-sided identity of degree 0;
//! - multiplication is degree-additive, truncating to 0 above top degree;
//! - the integral vanishes on every basis symbol below top degree.

use std::collections::BTreeMap;
use std::fmt;
use std::sync::Arc;

use num_traits::Zero;

use crate::error::{HmError, Result};
use crate::rational::{format_rat, Rat};

/// Sparse vector of rationals over basis indices.
pub type SparseVec = BTreeMap<usize, Rat>;

/// Wire form of a class: coefficient/symbol pairs.
pub type WirePairs = Vec<(Rat, String)>;

/// Structure-constant entries keyed by symbol pairs.
pub type MultEntries = Vec<((String, String), WirePairs)>;

pub fn sparse_add_scaled(dst: &mut SparseVec, src: &SparseVec, scale: &Rat) {
    if scale.is_zero() {
        return;
    }
    for (&i, c) in src {
        let entry = dst.entry(i).or_insert_with(Rat::zero);
        *entry += c * scale;
        if entry.is_zero() {
            dst.remove(&i);
        }
    }
}

#[derive(Debug)]
pub struct Algebra {
    pub name: String,
    syms: Vec<String>,
    degs: Vec<u32>,
    index: BTreeMap<String, usize>,
    unit: usize,
    top_degree: u32,
    /// Structure constants keyed by unordered index pair (i <= j).
    mult: BTreeMap<(usize, usize), SparseVec>,
    pub distinguished: BTreeMap<String, SparseVec>,
    /// Integral functional per basis index; `None` when not configured.
    integral: Option<Vec<Rat>>,
}

impl Algebra {
    pub fn new(
        name: String,
        basis: Vec<(String, u32)>,
        mult_entries: MultEntries,
        unit: String,
        distinguished: BTreeMap<String, WirePairs>,
        integral: Option<BTreeMap<String, Rat>>,
    ) -> Result<Algebra> {
        let mut syms = Vec::new();
        let mut degs = Vec::new();
        let mut index = BTreeMap::new();
        for (sym, deg) in basis {
            if index.insert(sym.clone(), syms.len()).is_some() {
                return Err(HmError::Validation(format!(
                    "algebra {name}: duplicate basis symbol {sym:?}"
                )));
            }
            syms.push(sym);
            degs.push(deg);
        }
        if syms.is_empty() {
            return Err(HmError::Validation(format!("algebra {name}: empty basis")));
        }
        let top_degree = degs.iter().copied().max().unwrap_or(0);
        let lookup = |sym: &str| -> Result<usize> {
            index.get(sym).copied().ok_or_else(|| {
                HmError::Validation(format!("algebra {name}: unknown basis symbol {sym:?}"))
            })
        };
        let unit_idx = lookup(&unit)?;

        let to_sparse = |val: &[(Rat, String)]| -> Result<SparseVec> {
            let mut v = SparseVec::new();
            for (c, sym) in val {
                let i = lookup(sym)?;
                let entry = v.entry(i).or_insert_with(Rat::zero);
                *entry += c;
                if entry.is_zero() {
                    v.remove(&i);
                }
            }
            Ok(v)
        };

        let mut mult = BTreeMap::new();
        for ((a, b), val) in &mult_entries {
            let (i, j) = (lookup(a)?, lookup(b)?);
            let key = (i.min(j), i.max(j));
            let sv = to_sparse(val)?;
            if let Some(prev) = mult.get(&key) {
                if prev != &sv {
                    return Err(HmError::Validation(format!(
                        "algebra {name}: conflicting products for {a}*{b} (commutativity violated)"
                    )));
                }
            } else {
                mult.insert(key, sv);
            }
        }

        let mut dist = BTreeMap::new();
        for (dname, val) in &distinguished {
            dist.insert(dname.clone(), to_sparse(val)?);
        }

        let integral = match integral {
            None => None,
            Some(map) => {
                let mut v = vec![Rat::zero(); syms.len()];
                for (sym, c) in map {
                    v[lookup(&sym)?] = c;
                }
                Some(v)
            }
        };

        Ok(Algebra {
            name,
            syms,
            degs,
            index,
            unit: unit_idx,
            top_degree,
            mult,
            distinguished: dist,
            integral,
        })
    }

    /// The rational line Q, as the algebra of a point.
    pub fn rational_point(name: &str) -> Arc<Algebra> {
        let mut integral = BTreeMap::new();
        integral.insert("one".to_string(), Rat::from_integer(1.into()));
        Arc::new(
            Algebra::new(
                name.to_string(),
                vec![("one".to_string(), 0)],
                vec![],
                "one".to_string(),
                BTreeMap::new(),
                Some(integral),
            )
            .expect("point algebra is always valid"),
        )
    }

    pub fn dim(&self) -> usize {
        self.syms.len()
    }

    pub fn top_degree(&self) -> u32 {
        self.top_degree
    }

    pub fn unit_index(&self) -> usize {
        self.unit
    }

    pub fn sym(&self, i: usize) -> &str {
        &self.syms[i]
    }

    pub fn deg(&self, i: usize) -> u32 {
        self.degs[i]
    }

    pub fn sym_index(&self, sym: &str) -> Result<usize> {
        self.index.get(sym).copied().ok_or_else(|| {
            HmError::Unconfigured(format!("algebra {}: no basis symbol {sym:?}", self.name))
        })
    }

    pub fn has_integral(&self) -> bool {
        self.integral.is_some()
    }

    /// Product of two basis symbols. Degree truncation is implicit: a missing
    /// table entry whose degree sum exceeds the top degree is zero; a missing
    /// entry at or below top degree is only legal for the unit row.
    pub fn mul_basis(&self, i: usize, j: usize) -> SparseVec {
        if i == self.unit {
            let mut v = SparseVec::new();
            v.insert(j, Rat::from_integer(1.into()));
            return v;
        }
        if j == self.unit {
            let mut v = SparseVec::new();
            v.insert(i, Rat::from_integer(1.into()));
            return v;
        }
        let key = (i.min(j), i.max(j));
        self.mult.get(&key).cloned().unwrap_or_default()
    }

    /// Integral of a basis symbol (0 when no functional is configured).
    pub fn integral_basis(&self, i: usize) -> Rat {
        match &self.integral {
            Some(v) => v[i].clone(),
            None => Rat::zero(),
        }
    }

    /// Exhaustive check of the algebra laws. Cost is O(dim^3) basis triples.
    pub fn validate(&self) -> Result<()> {
        let name = &self.name;
        if self.degs[self.unit] != 0 {
            return Err(HmError::Validation(format!(
                "algebra {name}: unit {:?} must have degree 0",
                self.syms[self.unit]
            )));
        }
        // Degree additivity and truncation for every configured product.
        for (&(i, j), v) in &self.mult {
            let d = self.degs[i] + self.degs[j];
            for (&k, c) in v {
                if c.is_zero() {
                    return Err(HmError::Validation(format!(
                        "algebra {name}: explicit zero coefficient in product {}*{}",
                        self.syms[i], self.syms[j]
                    )));
                }
                if self.degs[k] != d {
                    return Err(HmError::Validation(format!(
                        "algebra {name}: degree-additivity violated: {}*{} (degree {d}) contains {} of degree {}",
                        self.syms[i], self.syms[j], self.syms[k], self.degs[k]
                    )));
                }
            }
            if d > self.top_degree && !v.is_empty() {
                return Err(HmError::Validation(format!(
                    "algebra {name}: product {}*{} above top degree must vanish",
                    self.syms[i], self.syms[j]
                )));
            }
        }
        // Non-unit products at or below top degree must be configured (possibly
        // as an explicit empty value), otherwise silence would hide a typo.
        for i in 0..self.dim() {
            for j in i..self.dim() {
                if i == self.unit || j == self.unit {
                    continue;
                }
                let d = self.degs[i] + self.degs[j];
                if d <= self.top_degree && !self.mult.contains_key(&(i, j)) {
                    return Err(HmError::Validation(format!(
                        "algebra {name}: missing product {}*{} (configure it, even if zero)",
                        self.syms[i], self.syms[j]
                    )));
                }
            }
        }
        // Unit law against any accidentally configured unit rows.
        for i in 0..self.dim() {
            let v = self.mul_basis(self.unit, i);
            if v.len() != 1 || v.get(&i).map(|c| c == &Rat::from_integer(1.into())) != Some(true) {
                return Err(HmError::Validation(format!(
                    "algebra {name}: unit law fails on {}",
                    self.syms[i]
                )));
            }
        }
        // Associativity on all basis triples.
        for a in 0..self.dim() {
            for b in a..self.dim() {
                for c in b..self.dim() {
                    let ab_c = self.mul_sparse(&self.mul_basis(a, b), c);
                    let bc = self.mul_basis(b, c);
                    let a_bc = self.mul_sparse(&bc, a);
                    if ab_c != a_bc {
                        return Err(HmError::Validation(format!(
                            "algebra {name}: associativity fails on ({}, {}, {})",
                            self.syms[a], self.syms[b], self.syms[c]
                        )));
                    }
                }
            }
        }
        // Integral supported in top degree only.
        if let Some(int) = &self.integral {
            for (i, c) in int.iter().enumerate() {
                if !c.is_zero() && self.degs[i] != self.top_degree {
                    return Err(HmError::Validation(format!(
                        "algebra {name}: integral is nonzero on {} of degree {} < top {}",
                        self.syms[i], self.degs[i], self.top_degree
                    )));
                }
            }
        }
        Ok(())
    }

    fn mul_sparse(&self, v: &SparseVec, k: usize) -> SparseVec {
        let mut out = SparseVec::new();
        for (&i, c) in v {
            sparse_add_scaled(&mut out, &self.mul_basis(i, k), c);
        }
        out
    }

    /// Structural equality of two algebra declarations (used to identify an
    /// algebra that is declared along several nesting chains).
    pub fn same_spec(&self, other: &Algebra) -> bool {
        self.name == other.name
            && self.syms == other.syms
            && self.degs == other.degs
            && self.unit == other.unit
            && self.mult == other.mult
            && self.distinguished == other.distinguished
            && self.integral == other.integral
    }
}

pub fn same_algebra(a: &Arc<Algebra>, b: &Arc<Algebra>) -> bool {
    Arc::ptr_eq(a, b)
}

/// A sparse exact-rational linear combination of basis symbols of one algebra.
#[derive(Clone)]
pub struct ClassExpr {
    pub algebra: Arc<Algebra>,
    pub terms: SparseVec,
}

impl ClassExpr {
    pub fn zero(algebra: &Arc<Algebra>) -> ClassExpr {
        ClassExpr {
            algebra: algebra.clone(),
            terms: SparseVec::new(),
        }
    }

    pub fn unit(algebra: &Arc<Algebra>) -> ClassExpr {
        ClassExpr::basis(algebra, algebra.unit_index())
    }

    pub fn basis(algebra: &Arc<Algebra>, i: usize) -> ClassExpr {
        let mut terms = SparseVec::new();
        terms.insert(i, Rat::from_integer(1.into()));
        ClassExpr {
            algebra: algebra.clone(),
            terms,
        }
    }

    pub fn from_terms(algebra: &Arc<Algebra>, terms: SparseVec) -> ClassExpr {
        ClassExpr {
            algebra: algebra.clone(),
            terms,
        }
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn is_unit(&self) -> bool {
        self.terms.len() == 1
            && self
                .terms
                .get(&self.algebra.unit_index())
                .map(|c| c == &Rat::from_integer(1.into()))
                .unwrap_or(false)
    }

    fn check_same(&self, other: &ClassExpr, op: &str) -> Result<()> {
        if !same_algebra(&self.algebra, &other.algebra) {
            return Err(HmError::AlgebraMismatch(format!(
                "{op}: {} vs {}",
                self.algebra.name, other.algebra.name
            )));
        }
        Ok(())
    }

    pub fn add(&self, other: &ClassExpr) -> Result<ClassExpr> {
        self.check_same(other, "add")?;
        let mut terms = self.terms.clone();
        sparse_add_scaled(&mut terms, &other.terms, &Rat::from_integer(1.into()));
        Ok(ClassExpr::from_terms(&self.algebra, terms))
    }

    pub fn scale(&self, c: &Rat) -> ClassExpr {
        if c.is_zero() {
            return ClassExpr::zero(&self.algebra);
        }
        let terms = self.terms.iter().map(|(&i, v)| (i, v * c)).collect();
        ClassExpr::from_terms(&self.algebra, terms)
    }

    /// Bilinear extension of the structure-constant table.
    pub fn mul(&self, other: &ClassExpr) -> Result<ClassExpr> {
        self.check_same(other, "mul")?;
        let mut out = SparseVec::new();
        for (&i, a) in &self.terms {
            for (&j, b) in &other.terms {
                sparse_add_scaled(&mut out, &self.algebra.mul_basis(i, j), &(a * b));
            }
        }
        Ok(ClassExpr::from_terms(&self.algebra, out))
    }

    /// Apply the algebra's integral functional, 0 off top degree.
    pub fn integrate(&self) -> Rat {
        let mut s = Rat::zero();
        for (&i, c) in &self.terms {
            s += c * self.algebra.integral_basis(i);
        }
        s
    }

    /// Degree when homogeneous, `None` for 0 or mixed-degree classes.
    pub fn homogeneous_degree(&self) -> Option<u32> {
        let mut deg = None;
        for &i in self.terms.keys() {
            match deg {
                None => deg = Some(self.algebra.deg(i)),
                Some(d) if d == self.algebra.deg(i) => {}
                _ => return None,
            }
        }
        deg
    }
}

impl PartialEq for ClassExpr {
    fn eq(&self, other: &Self) -> bool {
        same_algebra(&self.algebra, &other.algebra) && self.terms == other.terms
    }
}
impl Eq for ClassExpr {}

impl fmt::Debug for ClassExpr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "ClassExpr[{}](", self.algebra.name)?;
        let mut first = true;
        for (&i, c) in &self.terms {
            if !first {
                write!(f, " + ")?;
            }
            first = false;
            write!(f, "{} {}", format_rat(c), self.algebra.sym(i))?;
        }
        if first {
            write!(f, "0")?;
        }
        write!(f, ")")
    }
}

/// A Q-linear map between two algebras, given by images of basis symbols.
/// Symbols without a configured image produce an `Unconfigured` error when hit.
#[derive(Debug, Clone)]
pub struct LinearMap {
    pub from: Arc<Algebra>,
    pub to: Arc<Algebra>,
    images: Vec<Option<ClassExpr>>,
    pub tag: String,
}

impl LinearMap {
    pub fn new(from: &Arc<Algebra>, to: &Arc<Algebra>, tag: &str) -> LinearMap {
        LinearMap {
            from: from.clone(),
            to: to.clone(),
            images: vec![None; from.dim()],
            tag: tag.to_string(),
        }
    }

    /// Identity map of an algebra onto itself.
    pub fn identity(alg: &Arc<Algebra>, tag: &str) -> LinearMap {
        let mut m = LinearMap::new(alg, alg, tag);
        for i in 0..alg.dim() {
            m.set(i, ClassExpr::basis(alg, i));
        }
        m
    }

    pub fn set(&mut self, i: usize, image: ClassExpr) {
        debug_assert!(same_algebra(&image.algebra, &self.to));
        self.images[i] = Some(image);
    }

    pub fn image_of(&self, i: usize) -> Result<&ClassExpr> {
        self.images[i].as_ref().ok_or_else(|| {
            HmError::Unconfigured(format!(
                "{}: no image for basis symbol {:?} of {}",
                self.tag,
                self.from.sym(i),
                self.from.name
            ))
        })
    }

    pub fn has_image(&self, i: usize) -> bool {
        self.images[i].is_some()
    }

    pub fn apply(&self, x: &ClassExpr) -> Result<ClassExpr> {
        if !same_algebra(&x.algebra, &self.from) {
            return Err(HmError::AlgebraMismatch(format!(
                "{}: expected class in {}, got {}",
                self.tag, self.from.name, x.algebra.name
            )));
        }
        let mut out = ClassExpr::zero(&self.to);
        for (&i, c) in &x.terms {
            out = out.add(&self.image_of(i)?.scale(c))?;
        }
        Ok(out)
    }

    /// Composition: first `self`, then `next`.
    pub fn then(&self, next: &LinearMap) -> Result<LinearMap> {
        let mut m = LinearMap::new(
            &self.from,
            &next.to,
            &format!("{} . {}", self.tag, next.tag),
        );
        for i in 0..self.from.dim() {
            if let Some(img) = &self.images[i] {
                m.set(i, next.apply(img)?);
            }
        }
        Ok(m)
    }

    /// Check that every configured image preserves degree.
    pub fn validate_degree_preserving(&self) -> Result<()> {
        for i in 0..self.from.dim() {
            if let Some(img) = &self.images[i] {
                let d = self.from.deg(i);
                for &k in img.terms.keys() {
                    if self.to.deg(k) != d {
                        return Err(HmError::Validation(format!(
                            "{}: image of {} (degree {d}) contains {} of degree {}",
                            self.tag,
                            self.from.sym(i),
                            self.to.sym(k),
                            self.to.deg(k)
                        )));
                    }
                }
            }
        }
        Ok(())
    }

    /// Check multiplicativity on every configured basis pair.
    pub fn validate_multiplicative(&self) -> Result<()> {
        for i in 0..self.from.dim() {
            for j in i..self.from.dim() {
                if !(self.has_image(i) && self.has_image(j)) {
                    continue;
                }
                let prod = ClassExpr::from_terms(&self.from, self.from.mul_basis(i, j));
                let lhs = self.apply(&prod)?;
                let rhs = self.image_of(i)?.mul(self.image_of(j)?)?;
                if lhs != rhs {
                    return Err(HmError::Validation(format!(
                        "{}: not multiplicative on ({}, {})",
                        self.tag,
                        self.from.sym(i),
                        self.from.sym(j)
                    )));
                }
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::{rat, rat_int};

    fn two_point_curve() -> Arc<Algebra> {
        // Q[pt]/(pt^2), the total space of the smooth fixture family.
        let mut integral = BTreeMap::new();
        integral.insert("pt".to_string(), rat_int(1));
        Arc::new(
            Algebra::new(
                "A".into(),
                vec![("one".into(), 0), ("pt".into(), 1)],
                vec![(("pt".into(), "pt".into()), vec![])],
                "one".into(),
                BTreeMap::new(),
                Some(integral),
            )
            .unwrap(),
        )
    }

    #[test]
    fn unit_and_truncation() {
        let a = two_point_curve();
        a.validate().unwrap();
        let pt = ClassExpr::basis(&a, 1);
        let one = ClassExpr::unit(&a);
        assert_eq!(one.mul(&pt).unwrap(), pt);
        assert!(pt.mul(&pt).unwrap().is_zero());
    }

    #[test]
    fn degree_additivity_rejected() {
        // pt*pt = pt violates grading.
        let r = Algebra::new(
            "bad".into(),
            vec![("one".into(), 0), ("pt".into(), 1)],
            vec![(("pt".into(), "pt".into()), vec![(rat_int(1), "pt".into())])],
            "one".into(),
            BTreeMap::new(),
            None,
        )
        .unwrap()
        .validate();
        match r {
            Err(HmError::Validation(msg)) => assert!(msg.contains("degree-additivity")),
            other => panic!("expected degree-additivity error, got {other:?}"),
        }
    }

    #[test]
    fn integral_linear_and_top_only() {
        let a = two_point_curve();
        let x = ClassExpr::basis(&a, 1).scale(&rat(3, 2));
        assert_eq!(x.integrate(), rat(3, 2));
        assert_eq!(ClassExpr::unit(&a).integrate(), rat_int(0));
    }
}
