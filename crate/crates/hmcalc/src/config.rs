//! Configuration loading: JSON text in, validated family model out.
//!
//! The schema follows the documented config format: a family is a base ring,
//! a total-space ring and a list of nodes; each node carries the two boundary
//! rings, the section classes, and the restriction/pullback tables. Nodes may
//! nest further node declarations to describe deeper strata; an algebra that
//! is reachable along several chains must be declared with the same `name`
//! and identical data everywhere, and is then shared.
//!
//! Every law the engine relies on is checked here, exhaustively on basis
//! elements: ring axioms per algebra, degree preservation and
//! multiplicativity of restriction maps, `pullback(1) = 1`, `pullback(omega)
//! = 0`, and the boundary relation `restrict(omega) = omega' + theta_x +
//! theta_y` at every level.

use std::collections::{BTreeMap, BTreeSet};
use std::sync::Arc;

use serde::Deserialize;

use crate::algebra::{Algebra, ClassExpr, LinearMap};
use crate::error::{HmError, Result};
use crate::family::{FamilyLevel, FamilyModel, NodeData};
use crate::rational::parse_rat;

type WireClass = Vec<(String, String)>;

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct ConfigFile {
    base_dim: u32,
    #[serde(default)]
    metadata: serde_json::Value,
    #[serde(rename = "algebra_AB")]
    algebra_ab: AlgebraCfg,
    #[serde(rename = "algebra_A")]
    algebra_a: AlgebraCfg,
    #[serde(default)]
    nodes: Vec<NodeCfg>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct AlgebraCfg {
    #[serde(default)]
    name: Option<String>,
    basis: Vec<BasisEntry>,
    #[serde(default)]
    mult: Vec<MultEntry>,
    unit: String,
    #[serde(default)]
    distinguished: BTreeMap<String, WireClass>,
    #[serde(default)]
    integral: Option<BTreeMap<String, String>>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct BasisEntry {
    sym: String,
    deg: u32,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct MultEntry {
    a: String,
    b: String,
    val: WireClass,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct NodeCfg {
    id: String,
    base_codim: u32,
    base_alg: AlgebraCfg,
    fiber_alg: AlgebraCfg,
    #[serde(default)]
    psi_x: WireClass,
    #[serde(default)]
    psi_y: WireClass,
    theta_x: WireClass,
    theta_y: WireClass,
    /// Section pullback on the fiber ring basis; unit and above-top-degree
    /// entries may be omitted.
    #[serde(default)]
    pullback: BTreeMap<String, WireClass>,
    /// Restriction on the parent total ring basis; must be total.
    restrict: BTreeMap<String, WireClass>,
    #[serde(default)]
    base_pullback: BTreeMap<String, WireClass>,
    #[serde(default)]
    ancestor_pullbacks: BTreeMap<String, BTreeMap<String, WireClass>>,
    #[serde(default)]
    nodes: Vec<NodeCfg>,
}

fn wire_class(alg: &Arc<Algebra>, wire: &WireClass, what: &str) -> Result<ClassExpr> {
    let mut out = ClassExpr::zero(alg);
    for (coeff, sym) in wire {
        let c = parse_rat(coeff)?;
        let i = alg.sym_index(sym).map_err(|_| {
            HmError::Validation(format!(
                "{what}: symbol {sym:?} is not in the basis of {}",
                alg.name
            ))
        })?;
        out = out.add(&ClassExpr::basis(alg, i).scale(&c))?;
    }
    Ok(out)
}

fn build_algebra(cfg: &AlgebraCfg, default_name: &str) -> Result<Algebra> {
    let name = cfg.name.clone().unwrap_or_else(|| default_name.to_string());
    let basis = cfg
        .basis
        .iter()
        .map(|b| (b.sym.clone(), b.deg))
        .collect::<Vec<_>>();
    let mut mult = Vec::new();
    for m in &cfg.mult {
        let val = m
            .val
            .iter()
            .map(|(c, s)| Ok((parse_rat(c)?, s.clone())))
            .collect::<Result<Vec<_>>>()?;
        mult.push(((m.a.clone(), m.b.clone()), val));
    }
    let mut dist = BTreeMap::new();
    for (dname, wire) in &cfg.distinguished {
        let val = wire
            .iter()
            .map(|(c, s)| Ok((parse_rat(c)?, s.clone())))
            .collect::<Result<Vec<_>>>()?;
        dist.insert(dname.clone(), val);
    }
    let integral = match &cfg.integral {
        None => None,
        Some(map) => {
            let mut m = BTreeMap::new();
            for (sym, c) in map {
                m.insert(sym.clone(), parse_rat(c)?);
            }
            Some(m)
        }
    };
    let alg = Algebra::new(name, basis, mult, cfg.unit.clone(), dist, integral)?;
    alg.validate()?;
    Ok(alg)
}

struct Registry {
    map: BTreeMap<String, Arc<Algebra>>,
}

impl Registry {
    fn intern(&mut self, alg: Algebra) -> Result<Arc<Algebra>> {
        if let Some(existing) = self.map.get(&alg.name) {
            if existing.same_spec(&alg) {
                Ok(existing.clone())
            } else {
                Err(HmError::Validation(format!(
                    "algebra {:?} declared twice with different data",
                    alg.name
                )))
            }
        } else {
            let arc = Arc::new(alg);
            self.map.insert(arc.name.clone(), arc.clone());
            Ok(arc)
        }
    }
}

/// Linear map from a configured symbol table, with degree defaults: the unit
/// maps to the unit and symbols above the target's top degree map to zero.
fn build_map(
    from: &Arc<Algebra>,
    to: &Arc<Algebra>,
    table: &BTreeMap<String, WireClass>,
    tag: &str,
) -> Result<LinearMap> {
    let mut m = LinearMap::new(from, to, tag);
    for i in 0..from.dim() {
        if i == from.unit_index() {
            m.set(i, ClassExpr::unit(to));
        } else if from.deg(i) > to.top_degree() {
            m.set(i, ClassExpr::zero(to));
        }
    }
    for (sym, wire) in table {
        let i = from.sym_index(sym).map_err(|_| {
            HmError::Validation(format!(
                "{tag}: table key {sym:?} is not a basis symbol of {}",
                from.name
            ))
        })?;
        m.set(i, wire_class(to, wire, tag)?);
    }
    Ok(m)
}

fn omega_of(alg: &Arc<Algebra>) -> Result<ClassExpr> {
    let v = alg.distinguished.get("omega").ok_or_else(|| {
        HmError::Validation(format!(
            "algebra {} must carry a distinguished \"omega\" class",
            alg.name
        ))
    })?;
    Ok(ClassExpr::from_terms(alg, v.clone()))
}

fn check_degree_one(x: &ClassExpr, what: &str) -> Result<()> {
    for &i in x.terms.keys() {
        if x.algebra.deg(i) != 1 {
            return Err(HmError::Validation(format!(
                "{what} must have degree 1, found {} of degree {}",
                x.algebra.sym(i),
                x.algebra.deg(i)
            )));
        }
    }
    Ok(())
}

#[allow(clippy::too_many_arguments)]
fn build_node(
    cfg: &NodeCfg,
    parent_total: &Arc<Algebra>,
    parent_base: &Arc<Algebra>,
    parent_omega: &ClassExpr,
    chain: &[String],
    all_ids: &BTreeSet<String>,
    reg: &mut Registry,
) -> Result<NodeData> {
    let id = &cfg.id;
    if chain.iter().any(|c| c == id) {
        return Err(HmError::Validation(format!(
            "node {id} nests below itself (chain {})",
            chain.join(",")
        )));
    }
    if !chain.is_empty() && !all_ids.contains(id) {
        return Err(HmError::Validation(format!(
            "nested node {id} is not declared at the top level"
        )));
    }
    if cfg.base_codim == 0 {
        return Err(HmError::Validation(format!(
            "node {id}: base_codim must be positive"
        )));
    }

    let mut full_chain: Vec<String> = chain.to_vec();
    full_chain.push(id.clone());
    let chain_name = full_chain.join(",");
    let base = reg.intern(build_algebra(&cfg.base_alg, &format!("A_B({chain_name})"))?)?;
    let fiber = reg.intern(build_algebra(&cfg.fiber_alg, &format!("A({chain_name})"))?)?;
    let fiber_omega = omega_of(&fiber)?;

    let theta_x = wire_class(&fiber, &cfg.theta_x, &format!("node {id} theta_x"))?;
    let theta_y = wire_class(&fiber, &cfg.theta_y, &format!("node {id} theta_y"))?;
    let psi_x = wire_class(&base, &cfg.psi_x, &format!("node {id} psi_x"))?;
    let psi_y = wire_class(&base, &cfg.psi_y, &format!("node {id} psi_y"))?;
    check_degree_one(&theta_x, &format!("node {id} theta_x"))?;
    check_degree_one(&theta_y, &format!("node {id} theta_y"))?;
    check_degree_one(&psi_x, &format!("node {id} psi_x"))?;
    check_degree_one(&psi_y, &format!("node {id} psi_y"))?;

    let restrict = build_map(
        parent_total,
        &fiber,
        &cfg.restrict,
        &format!("restrict {} -> {}", parent_total.name, fiber.name),
    )?;
    for i in 0..parent_total.dim() {
        if !restrict.has_image(i) {
            return Err(HmError::Validation(format!(
                "node {id}: restrict is missing basis symbol {:?}",
                parent_total.sym(i)
            )));
        }
    }
    restrict.validate_degree_preserving()?;
    restrict.validate_multiplicative()?;

    // restrict(omega) = omega' + theta_x + theta_y
    let expected = fiber_omega.add(&theta_x)?.add(&theta_y)?;
    let got = restrict.apply(parent_omega)?;
    if got != expected {
        return Err(HmError::Validation(format!(
            "node {id}: restrict(omega) != omega' + theta_x + theta_y in {}",
            fiber.name
        )));
    }

    let pullback = build_map(
        &fiber,
        &base,
        &cfg.pullback,
        &format!("pullback {} -> {}", fiber.name, base.name),
    )?;
    for i in 0..fiber.dim() {
        if !pullback.has_image(i) {
            return Err(HmError::Validation(format!(
                "node {id}: pullback is missing fiber symbol {:?}",
                fiber.sym(i)
            )));
        }
    }
    pullback.validate_degree_preserving()?;
    let composite = restrict.then(&pullback)?;
    let pomega = composite.apply(parent_omega)?;
    if !pomega.is_zero() {
        return Err(HmError::Validation(format!(
            "node {id}: pullback(omega) != 0"
        )));
    }
    let punit = composite.apply(&ClassExpr::unit(parent_total))?;
    if !punit.is_unit() {
        return Err(HmError::Validation(format!("node {id}: pullback(1) != 1")));
    }

    let base_pullback = build_map(
        parent_base,
        &base,
        &cfg.base_pullback,
        &format!("base pullback {} -> {}", parent_base.name, base.name),
    )?;
    base_pullback.validate_degree_preserving()?;

    let mut ancestor_pullbacks = BTreeMap::new();
    for anc in chain {
        let table = cfg.ancestor_pullbacks.get(anc).cloned().unwrap_or_default();
        let m = build_map(
            &fiber,
            &base,
            &table,
            &format!("pullback of {anc} on {}", fiber.name),
        )?;
        m.validate_degree_preserving()?;
        ancestor_pullbacks.insert(anc.clone(), m);
    }
    for key in cfg.ancestor_pullbacks.keys() {
        if !chain.iter().any(|c| c == key) {
            return Err(HmError::Validation(format!(
                "node {id}: ancestor_pullbacks names {key:?} which is not an ancestor"
            )));
        }
    }

    let mut seen = BTreeSet::new();
    let mut nested = Vec::new();
    for sub in &cfg.nodes {
        if !seen.insert(sub.id.clone()) {
            return Err(HmError::Validation(format!(
                "duplicate node id {:?} below ({chain_name})",
                sub.id
            )));
        }
        nested.push(Arc::new(build_node(
            sub,
            &fiber,
            &base,
            &fiber_omega,
            &full_chain,
            all_ids,
            reg,
        )?));
    }

    Ok(NodeData {
        id: id.clone(),
        base_codim: cfg.base_codim,
        psi_x,
        psi_y,
        theta_x,
        theta_y,
        restrict,
        pullback,
        base_pullback,
        ancestor_pullbacks,
        boundary: FamilyLevel {
            base,
            total: fiber,
            omega: fiber_omega,
            nodes: nested,
        },
    })
}

/// Parse and validate a family configuration.
pub fn load_family(text: &str) -> Result<FamilyModel> {
    let cfg: ConfigFile =
        serde_json::from_str(text).map_err(|e| HmError::Parse(format!("config: {e}")))?;

    let mut reg = Registry {
        map: BTreeMap::new(),
    };
    let base = reg.intern(build_algebra(&cfg.algebra_ab, "A_B")?)?;
    let total = reg.intern(build_algebra(&cfg.algebra_a, "A")?)?;
    let omega = omega_of(&total)?;

    let mut all_ids = BTreeSet::new();
    for n in &cfg.nodes {
        if !all_ids.insert(n.id.clone()) {
            return Err(HmError::Validation(format!("duplicate node id {:?}", n.id)));
        }
    }

    let mut nodes = Vec::new();
    for n in &cfg.nodes {
        nodes.push(Arc::new(build_node(
            n,
            &total,
            &base,
            &omega,
            &[],
            &all_ids,
            &mut reg,
        )?));
    }

    let root = FamilyLevel {
        base,
        total,
        omega,
        nodes,
    };
    Ok(FamilyModel::new(cfg.base_dim, cfg.metadata, root, reg.map))
}
