//! The standard model of the tautological module: canonical monomials in
//! block variables `t_n[a]`, node scrolls `phi^n_j(theta)` and node sections
//! `chi^n_j(theta)`, with a stratum base class and exact rational scalars.
//!
//! Canonical form:
//! - node factors reference pairwise-distinct nodes and are sorted by
//!   (node, kind, n, j); a product with a repeated node normalizes to 0;
//! - a node factor outside `1 <= j < n` normalizes to 0;
//! - block coefficients are single basis symbols of the stratum fiber ring
//!   (sums split into separate monomials), sorted by (n, basis index);
//! - the base class is a single basis symbol of the stratum base ring, with
//!   the unit stored as `None`;
//! - the monomial's stratum is exactly the set of nodes of its node factors.
//!
//! Weight grades everything: a block contributes its `n`, a node factor its
//! `n`. Elements are sparse maps from canonical monomials to scalars, ordered
//! by (weight, factors, blocks, base).

use std::collections::BTreeMap;
use std::fmt::Write as _;

use num_traits::{One, Zero};

use crate::algebra::ClassExpr;
use crate::error::{HmError, Result};
use crate::family::{FamilyModel, Stratum};
use crate::rational::{format_rat, parse_rat, Rat};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum NodeKind {
    Phi,
    Chi,
}

impl NodeKind {
    pub fn label(self) -> &'static str {
        match self {
            NodeKind::Phi => "phi",
            NodeKind::Chi => "chi",
        }
    }
}

/// One node scroll/section variable attached to a node.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub struct NodeFactor {
    pub node: String,
    pub kind: NodeKind,
    pub n: u32,
    pub j: u32,
}

/// One block variable `t_n[sym]`.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub struct Block {
    pub n: u32,
    pub sym: String,
}

/// A canonical monomial of the standard model (scalar excluded).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TautMonomial {
    pub factors: Vec<NodeFactor>,
    pub blocks: Vec<Block>,
    /// Base-class symbol; `None` is the unit of the stratum base ring.
    pub base: Option<String>,
}

impl TautMonomial {
    /// Scalar monomial 1.
    pub fn one() -> TautMonomial {
        TautMonomial {
            factors: Vec::new(),
            blocks: Vec::new(),
            base: None,
        }
    }

    /// Sorted node ids of the stratum this monomial lives on.
    pub fn stratum_ids(&self) -> Vec<String> {
        self.factors.iter().map(|f| f.node.clone()).collect()
    }

    pub fn weight(&self) -> u32 {
        self.blocks.iter().map(|b| b.n).sum::<u32>() + self.factors.iter().map(|f| f.n).sum::<u32>()
    }

    pub fn chi_count(&self) -> usize {
        self.factors
            .iter()
            .filter(|f| f.kind == NodeKind::Chi)
            .count()
    }

    pub fn has_phi(&self) -> bool {
        self.factors.iter().any(|f| f.kind == NodeKind::Phi)
    }

    /// Assemble a canonical monomial, sorting factors and blocks. The caller
    /// guarantees distinct nodes and in-range factors; block order uses the
    /// fiber ring's basis index.
    pub fn build(
        mut factors: Vec<NodeFactor>,
        mut blocks: Vec<Block>,
        base: Option<String>,
        stratum: &Stratum,
    ) -> TautMonomial {
        factors.sort();
        blocks.sort_by_key(|b| {
            (
                b.n,
                stratum
                    .fiber
                    .sym_index(&b.sym)
                    .expect("block symbol is in the stratum fiber ring"),
            )
        });
        let base = base.filter(|s| {
            stratum
                .base
                .sym_index(s)
                .map(|i| i != stratum.base.unit_index())
                .unwrap_or(true)
        });
        TautMonomial {
            factors,
            blocks,
            base,
        }
    }

    fn ord_key(&self) -> (u32, &Vec<NodeFactor>, &Vec<Block>, &Option<String>) {
        (self.weight(), &self.factors, &self.blocks, &self.base)
    }
}

impl PartialOrd for TautMonomial {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for TautMonomial {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        self.ord_key().cmp(&other.ord_key())
    }
}

/// A sparse sum of canonical monomials with exact rational coefficients.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct TautElement {
    pub terms: BTreeMap<TautMonomial, Rat>,
}

impl TautElement {
    pub fn zero() -> TautElement {
        TautElement::default()
    }

    pub fn one() -> TautElement {
        TautElement::from_monomial(TautMonomial::one(), Rat::one())
    }

    pub fn from_monomial(m: TautMonomial, c: Rat) -> TautElement {
        let mut e = TautElement::zero();
        e.add_term(m, c);
        e
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn add_term(&mut self, m: TautMonomial, c: Rat) {
        if c.is_zero() {
            return;
        }
        use std::collections::btree_map::Entry;
        match self.terms.entry(m) {
            Entry::Vacant(v) => {
                v.insert(c);
            }
            Entry::Occupied(mut o) => {
                *o.get_mut() += c;
                if o.get().is_zero() {
                    o.remove();
                }
            }
        }
    }

    pub fn add(&self, other: &TautElement) -> TautElement {
        let mut out = self.clone();
        for (m, c) in &other.terms {
            out.add_term(m.clone(), c.clone());
        }
        out
    }

    pub fn sub(&self, other: &TautElement) -> TautElement {
        self.add(&other.scale(&-Rat::one()))
    }

    pub fn scale(&self, c: &Rat) -> TautElement {
        if c.is_zero() {
            return TautElement::zero();
        }
        TautElement {
            terms: self.terms.iter().map(|(m, v)| (m.clone(), v * c)).collect(),
        }
    }

    /// Linear extension of a per-monomial map.
    pub fn map_terms<F>(&self, mut f: F) -> Result<TautElement>
    where
        F: FnMut(&TautMonomial, &Rat) -> Result<TautElement>,
    {
        let mut out = TautElement::zero();
        for (m, c) in &self.terms {
            out = out.add(&f(m, c)?);
        }
        Ok(out)
    }

    pub fn max_weight(&self) -> u32 {
        self.terms.keys().map(|m| m.weight()).max().unwrap_or(0)
    }
}

/// An unnormalized monomial: class expressions instead of single symbols,
/// factors in any order, possibly out of range or with repeated nodes.
pub struct RawMonomial {
    pub scalar: Rat,
    pub factors: Vec<NodeFactor>,
    /// Block coefficients as classes in the stratum fiber ring (classes in
    /// the root total ring are restricted automatically).
    pub blocks: Vec<(u32, ClassExpr)>,
    /// Base class in the stratum base ring.
    pub base: Option<ClassExpr>,
}

impl RawMonomial {
    pub fn scalar(c: Rat) -> RawMonomial {
        RawMonomial {
            scalar: c,
            factors: Vec::new(),
            blocks: Vec::new(),
            base: None,
        }
    }
}

/// Canonicalize a raw monomial: zero out-of-range node factors and repeated
/// nodes, expand composite block and base coefficients into basis symbols,
/// sort deterministically.
pub fn normalize(family: &FamilyModel, raw: &RawMonomial) -> Result<TautElement> {
    // Out-of-range node factors are trivial.
    for f in &raw.factors {
        if !(1 <= f.j && f.j < f.n) {
            return Ok(TautElement::zero());
        }
    }
    // Repeated nodes are trivial.
    let mut ids: Vec<String> = raw.factors.iter().map(|f| f.node.clone()).collect();
    ids.sort();
    if ids.windows(2).any(|w| w[0] == w[1]) {
        return Ok(TautElement::zero());
    }
    let stratum = family.stratum(&ids)?;

    for (n, _) in &raw.blocks {
        if *n == 0 {
            return Err(HmError::Validation(
                "block weight must be positive (t_0 = 1 is not a block)".into(),
            ));
        }
    }

    // Expand block coefficients: the running vector holds (blocks, coeff).
    let mut expanded: Vec<(Vec<Block>, Rat)> = vec![(Vec::new(), raw.scalar.clone())];
    for (n, expr) in &raw.blocks {
        let local = stratum.localize(expr)?;
        let mut next = Vec::new();
        for (prefix, c) in &expanded {
            for (&i, v) in &local.terms {
                let mut blocks = prefix.clone();
                blocks.push(Block {
                    n: *n,
                    sym: stratum.fiber.sym(i).to_string(),
                });
                next.push((blocks, c * v));
            }
        }
        expanded = next;
    }

    // Expand the base class.
    let base_terms: Vec<(Option<String>, Rat)> = match &raw.base {
        None => vec![(None, Rat::one())],
        Some(b) => {
            if !crate::algebra::same_algebra(&b.algebra, &stratum.base) {
                return Err(HmError::AlgebraMismatch(format!(
                    "base class in {} does not match stratum base {}",
                    b.algebra.name, stratum.base.name
                )));
            }
            b.terms
                .iter()
                .map(|(&i, c)| (Some(stratum.base.sym(i).to_string()), c.clone()))
                .collect()
        }
    };

    let mut out = TautElement::zero();
    for (blocks, c) in expanded {
        for (base, bc) in &base_terms {
            let m =
                TautMonomial::build(raw.factors.clone(), blocks.clone(), base.clone(), &stratum);
            out.add_term(m, &c * bc);
        }
    }
    Ok(out)
}

/// Normalization is also exposed elementwise for rebuilt monomials whose
/// pieces are already single symbols.
pub fn monomial_element(
    family: &FamilyModel,
    factors: Vec<NodeFactor>,
    blocks: Vec<Block>,
    base: Option<String>,
    coeff: Rat,
) -> Result<TautElement> {
    let ids: Vec<String> = {
        let mut v: Vec<String> = factors.iter().map(|f| f.node.clone()).collect();
        v.sort();
        v
    };
    let stratum = family.stratum(&ids)?;
    Ok(TautElement::from_monomial(
        TautMonomial::build(factors, blocks, base, &stratum),
        coeff,
    ))
}

/// Formal commutative product. The right operand (after a possible swap) must
/// be classical: its blocks and base are restricted into the other operand's
/// stratum. A product of two node-sector elements is not defined here.
pub fn star(family: &FamilyModel, x: &TautElement, y: &TautElement) -> Result<TautElement> {
    let mut out = TautElement::zero();
    for (mx, cx) in &x.terms {
        for (my, cy) in &y.terms {
            let (a, b) = if my.factors.is_empty() {
                (mx, my)
            } else if mx.factors.is_empty() {
                (my, mx)
            } else {
                return Err(HmError::Unsupported(
                    "star of two node-sector monomials; use the transfer operators instead".into(),
                ));
            };
            // b is classical: bring its blocks and base into a's stratum.
            let stratum = family.stratum(&a.stratum_ids())?;
            let mut raw_blocks: Vec<(u32, ClassExpr)> = Vec::new();
            for blk in &a.blocks {
                raw_blocks.push((
                    blk.n,
                    ClassExpr::basis(&stratum.fiber, stratum.fiber.sym_index(&blk.sym)?),
                ));
            }
            for blk in &b.blocks {
                let global = ClassExpr::basis(family.total(), family.total().sym_index(&blk.sym)?);
                raw_blocks.push((blk.n, stratum.localize(&global)?));
            }
            let base_a = base_class(&stratum, &a.base)?;
            let base_b_root = match &b.base {
                None => ClassExpr::unit(family.base()),
                Some(s) => ClassExpr::basis(family.base(), family.base().sym_index(s)?),
            };
            let base_b = stratum.base_from_root.apply(&base_b_root)?;
            let base = base_a.mul(&base_b)?;
            let raw = RawMonomial {
                scalar: cx * cy,
                factors: a.factors.clone(),
                blocks: raw_blocks,
                base: Some(base),
            };
            out = out.add(&normalize(family, &raw)?);
        }
    }
    Ok(out)
}

/// Base symbol as a class in the stratum base ring.
pub fn base_class(stratum: &Stratum, base: &Option<String>) -> Result<ClassExpr> {
    match base {
        None => Ok(ClassExpr::unit(&stratum.base)),
        Some(s) => Ok(ClassExpr::basis(&stratum.base, stratum.base.sym_index(s)?)),
    }
}

/// Partition an element by stratum; the parts sum back to the input.
pub fn split_by_stratum(x: &TautElement) -> BTreeMap<Vec<String>, TautElement> {
    let mut out: BTreeMap<Vec<String>, TautElement> = BTreeMap::new();
    for (m, c) in &x.terms {
        out.entry(m.stratum_ids())
            .or_default()
            .add_term(m.clone(), c.clone());
    }
    out
}

fn render_monomial(m: &TautMonomial, c: &Rat) -> String {
    let mut parts: Vec<String> = Vec::new();
    let trivial = m.factors.is_empty() && m.blocks.is_empty() && m.base.is_none();
    if !c.is_one() || trivial {
        parts.push(format_rat(c));
    }
    if let Some(b) = &m.base {
        parts.push(b.clone());
    }
    for f in &m.factors {
        parts.push(format!("{}[{},{};{}]", f.kind.label(), f.n, f.j, f.node));
    }
    for b in &m.blocks {
        parts.push(format!("t{}[{}]", b.n, b.sym));
    }
    parts.join(" ")
}

/// Deterministic, lossless text form; terms in canonical key order.
pub fn render_canonical(x: &TautElement) -> String {
    if x.is_zero() {
        return "0".to_string();
    }
    let mut out = String::new();
    for (i, (m, c)) in x.terms.iter().enumerate() {
        if i > 0 {
            out.push_str(" + ");
        }
        let _ = write!(out, "{}", render_monomial(m, c));
    }
    out
}

/// Parse the canonical text form back into an element.
pub fn parse_element(family: &FamilyModel, text: &str) -> Result<TautElement> {
    let text = text.trim();
    if text == "0" {
        return Ok(TautElement::zero());
    }
    let mut out = TautElement::zero();
    for term in text.split(" + ") {
        let mut scalar = Rat::one();
        let mut factors: Vec<NodeFactor> = Vec::new();
        let mut blocks: Vec<Block> = Vec::new();
        let mut base: Option<String> = None;
        let mut saw_scalar = false;
        for tok in term.split_whitespace() {
            if let Some(rest) = tok
                .strip_prefix("phi[")
                .or_else(|| tok.strip_prefix("chi["))
            {
                let kind = if tok.starts_with("phi[") {
                    NodeKind::Phi
                } else {
                    NodeKind::Chi
                };
                let inner = rest
                    .strip_suffix(']')
                    .ok_or_else(|| HmError::Parse(format!("bad node factor token {tok:?}")))?;
                let (nj, node) = inner
                    .split_once(';')
                    .ok_or_else(|| HmError::Parse(format!("bad node factor token {tok:?}")))?;
                let (n, j) = nj
                    .split_once(',')
                    .ok_or_else(|| HmError::Parse(format!("bad node factor token {tok:?}")))?;
                factors.push(NodeFactor {
                    node: node.to_string(),
                    kind,
                    n: n.parse()
                        .map_err(|_| HmError::Parse(format!("bad node weight in {tok:?}")))?,
                    j: j.parse()
                        .map_err(|_| HmError::Parse(format!("bad node index in {tok:?}")))?,
                });
            } else if tok.starts_with('t')
                && tok.contains('[')
                && tok[1..tok.find('[').unwrap()]
                    .chars()
                    .all(|c| c.is_ascii_digit())
                && !tok[1..tok.find('[').unwrap()].is_empty()
            {
                let open = tok.find('[').unwrap();
                let n: u32 = tok[1..open]
                    .parse()
                    .map_err(|_| HmError::Parse(format!("bad block token {tok:?}")))?;
                let sym = tok[open + 1..]
                    .strip_suffix(']')
                    .ok_or_else(|| HmError::Parse(format!("bad block token {tok:?}")))?;
                blocks.push(Block {
                    n,
                    sym: sym.to_string(),
                });
            } else if !saw_scalar
                && factors.is_empty()
                && blocks.is_empty()
                && base.is_none()
                && tok
                    .chars()
                    .next()
                    .map(|c| c.is_ascii_digit() || c == '-')
                    .unwrap_or(false)
                && parse_rat(tok).is_ok()
            {
                scalar = parse_rat(tok)?;
                saw_scalar = true;
            } else if base.is_none() {
                base = Some(tok.to_string());
            } else {
                return Err(HmError::Parse(format!(
                    "unexpected token {tok:?} in term {term:?}"
                )));
            }
        }
        let ids: Vec<String> = {
            let mut v: Vec<String> = factors.iter().map(|f| f.node.clone()).collect();
            v.sort();
            v
        };
        let stratum = family.stratum(&ids)?;
        let raw_blocks = blocks
            .iter()
            .map(|b| {
                Ok((
                    b.n,
                    ClassExpr::basis(&stratum.fiber, stratum.fiber.sym_index(&b.sym)?),
                ))
            })
            .collect::<Result<Vec<_>>>()?;
        let raw_base = match &base {
            None => None,
            Some(s) => Some(ClassExpr::basis(&stratum.base, stratum.base.sym_index(s)?)),
        };
        let raw = RawMonomial {
            scalar,
            factors,
            blocks: raw_blocks,
            base: raw_base,
        };
        out = out.add(&normalize(family, &raw)?);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;
    use crate::rational::rat_int;

    fn n1() -> crate::family::FamilyModel {
        fixtures::cfg_n1().unwrap()
    }

    fn phi(node: &str, n: u32, j: u32) -> NodeFactor {
        NodeFactor {
            node: node.into(),
            kind: NodeKind::Phi,
            n,
            j,
        }
    }

    fn chi(node: &str, n: u32, j: u32) -> NodeFactor {
        NodeFactor {
            node: node.into(),
            kind: NodeKind::Chi,
            n,
            j,
        }
    }

    #[test]
    fn repeated_node_normalizes_to_zero() {
        let f = n1();
        let raw = RawMonomial {
            scalar: Rat::one(),
            factors: vec![phi("theta", 2, 1), phi("theta", 2, 1)],
            blocks: vec![],
            base: None,
        };
        assert!(normalize(&f, &raw).unwrap().is_zero());
    }

    #[test]
    fn out_of_range_factor_normalizes_to_zero() {
        let f = n1();
        let s1 = f.stratum(&["theta".to_string()]).unwrap();
        let raw = RawMonomial {
            scalar: Rat::one(),
            factors: vec![chi("theta", 3, 3)],
            blocks: vec![(1, ClassExpr::unit(&s1.fiber))],
            base: None,
        };
        assert!(normalize(&f, &raw).unwrap().is_zero());
    }

    #[test]
    fn composite_block_splits_into_monomials() {
        // t_1[alpha + beta] becomes two monomials.
        let f = n1();
        let a = f.total();
        let sum = ClassExpr::basis(a, a.sym_index("f").unwrap())
            .add(&ClassExpr::basis(a, a.sym_index("x").unwrap()))
            .unwrap();
        let raw = RawMonomial {
            scalar: rat_int(1),
            factors: vec![],
            blocks: vec![(1, sum)],
            base: None,
        };
        let e = normalize(&f, &raw).unwrap();
        assert_eq!(e.len(), 2);
        assert_eq!(render_canonical(&e), "t1[f] + t1[x]");
    }

    #[test]
    fn star_merges_classical_blocks() {
        let f = n1();
        let a = f.total();
        let t1 = |sym: &str| {
            normalize(
                &f,
                &RawMonomial {
                    scalar: Rat::one(),
                    factors: vec![],
                    blocks: vec![(1, ClassExpr::basis(a, a.sym_index(sym).unwrap()))],
                    base: None,
                },
            )
            .unwrap()
        };
        let prod = star(&f, &t1("f"), &t1("x")).unwrap();
        assert_eq!(render_canonical(&prod), "t1[f] t1[x]");
        // Unit law.
        assert_eq!(star(&f, &prod, &TautElement::one()).unwrap(), prod);
    }

    #[test]
    fn star_restricts_classical_factor_into_node_stratum() {
        // phi^2_1(theta) * t_2[x] lands as t2[p] on the node stratum.
        let f = n1();
        let a = f.total();
        let phi_m =
            crate::taut::monomial_element(&f, vec![phi("theta", 2, 1)], vec![], None, Rat::one())
                .unwrap();
        let t2x = normalize(
            &f,
            &RawMonomial {
                scalar: Rat::one(),
                factors: vec![],
                blocks: vec![(2, ClassExpr::basis(a, a.sym_index("x").unwrap()))],
                base: None,
            },
        )
        .unwrap();
        let prod = star(&f, &phi_m, &t2x).unwrap();
        assert_eq!(render_canonical(&prod), "phi[2,1;theta] t2[p]");
        // Commutes.
        assert_eq!(star(&f, &t2x, &phi_m).unwrap(), prod);
    }

    #[test]
    fn star_of_two_node_sectors_is_rejected() {
        let f = fixtures::cfg_n2().unwrap();
        let m1 =
            crate::taut::monomial_element(&f, vec![phi("theta1", 2, 1)], vec![], None, Rat::one())
                .unwrap();
        let m2 =
            crate::taut::monomial_element(&f, vec![phi("theta2", 2, 1)], vec![], None, Rat::one())
                .unwrap();
        assert!(matches!(
            star(&f, &m1, &m2),
            Err(crate::error::HmError::Unsupported(_))
        ));
    }

    #[test]
    fn weight_examples() {
        let f = n1();
        let s1 = f.stratum(&["theta".to_string()]).unwrap();
        let m = TautMonomial::build(
            vec![chi("theta", 2, 1)],
            vec![Block {
                n: 1,
                sym: "p".into(),
            }],
            None,
            &s1,
        );
        assert_eq!(m.weight(), 3);
        assert_eq!(TautMonomial::one().weight(), 0);
        let s0 = f.stratum(&[]).unwrap();
        let m2 = TautMonomial::build(
            vec![],
            vec![
                Block {
                    n: 1,
                    sym: "f".into(),
                },
                Block {
                    n: 1,
                    sym: "x".into(),
                },
            ],
            None,
            &s0,
        );
        assert_eq!(m2.weight(), 2);
    }

    #[test]
    fn split_by_stratum_partitions() {
        let f = n1();
        let s0 = f.stratum(&[]).unwrap();
        let mut e = TautElement::zero();
        e.add_term(
            TautMonomial::build(
                vec![],
                vec![Block {
                    n: 2,
                    sym: "x".into(),
                }],
                None,
                &s0,
            ),
            rat_int(1),
        );
        let s1 = f.stratum(&["theta".to_string()]).unwrap();
        e.add_term(
            TautMonomial::build(vec![phi("theta", 2, 1)], vec![], None, &s1),
            rat_int(1),
        );
        let parts = split_by_stratum(&e);
        assert_eq!(parts.len(), 2);
        let rebuilt = parts
            .values()
            .fold(TautElement::zero(), |acc, p| acc.add(p));
        assert_eq!(rebuilt, e);
        assert!(split_by_stratum(&TautElement::zero()).is_empty());
    }

    #[test]
    fn render_grammar_instances() {
        let f = n1();
        assert_eq!(render_canonical(&TautElement::one()), "1");
        assert_eq!(render_canonical(&TautElement::zero()), "0");
        let e = crate::taut::monomial_element(
            &f,
            vec![phi("theta", 2, 1)],
            vec![Block {
                n: 1,
                sym: "p".into(),
            }],
            None,
            Rat::one(),
        )
        .unwrap();
        assert_eq!(render_canonical(&e), "phi[2,1;theta] t1[p]");
        // Smooth-family rendering of -t_2[omega] at genus 2 is -2 t2[pt].
        let fs = fixtures::cfg_s(2, 1).unwrap();
        let om = fs.distinguished("omega").unwrap();
        let raw = RawMonomial {
            scalar: rat_int(-1),
            factors: vec![],
            blocks: vec![(2, om)],
            base: None,
        };
        assert_eq!(
            render_canonical(&normalize(&fs, &raw).unwrap()),
            "-2 t2[pt]"
        );
    }

    #[test]
    fn parse_render_round_trip() {
        let f = n1();
        for text in [
            "1",
            "0",
            "-4 t2[x] + phi[2,1;theta]",
            "phi[2,1;theta] t1[p]",
            "2/3 h t1[x] t2[f]",
            "chi[3,2;theta] t1[one] t1[p]",
        ] {
            let e = parse_element(&f, text).unwrap();
            let rendered = render_canonical(&e);
            assert_eq!(
                parse_element(&f, &rendered).unwrap(),
                e,
                "round trip for {text:?}"
            );
            // Canonical inputs render back identically.
            if text != "0" {
                assert_eq!(rendered, text);
            }
        }
    }

    #[test]
    fn parse_rejects_garbage() {
        let f = n1();
        assert!(parse_element(&f, "phi[2,1]").is_err());
        assert!(parse_element(&f, "t1[nosuch]").is_err());
        assert!(parse_element(&f, "one two three").is_err());
    }
}
