//! The family model: coefficient algebras of a nodal-curve family and all of
//! its boundary strata, with the pullback/restriction maps between them.
//!
//! The data is a recursive tree. The root level holds the base ring `A_B` and
//! the total-space ring `A`. Each node of the family contributes a boundary
//! family one level down, with its own base and total rings, the restriction
//! map into it, the section pullback out of it, and (optionally) further
//! nested nodes describing deeper strata.
//!
//! A *stratum* is the flattened view of one sorted chain of distinct nodes:
//! the algebras at the end of the chain together with every per-node class
//! (theta sections, psi classes, section pullbacks) extended to that depth.
//! Strata are assembled lazily and cached; the cache is a write-once memo.

use std::collections::BTreeMap;
use std::sync::{Arc, RwLock};

use crate::algebra::{same_algebra, Algebra, ClassExpr, LinearMap};
use crate::error::{HmError, Result};
use crate::tensor;

#[derive(Debug)]
pub struct FamilyLevel {
    pub base: Arc<Algebra>,
    pub total: Arc<Algebra>,
    /// Relative dualizing class of this level's family, as a class in `total`.
    pub omega: ClassExpr,
    pub nodes: Vec<Arc<NodeData>>,
}

impl FamilyLevel {
    pub fn configured_node(&self, id: &str) -> Option<&Arc<NodeData>> {
        self.nodes.iter().find(|n| n.id == id)
    }
}

/// One node of a family level, together with its boundary family.
#[derive(Debug)]
pub struct NodeData {
    pub id: String,
    pub base_codim: u32,
    /// Cotangent classes at the two node preimages, in `boundary.base`.
    pub psi_x: ClassExpr,
    pub psi_y: ClassExpr,
    /// Node preimage section classes, in `boundary.total`.
    pub theta_x: ClassExpr,
    pub theta_y: ClassExpr,
    /// Restriction of the parent total ring onto the boundary total ring.
    pub restrict: LinearMap,
    /// Section pullback: boundary total ring -> boundary base ring.
    pub pullback: LinearMap,
    /// Pullback of the parent base ring onto the boundary base ring.
    pub base_pullback: LinearMap,
    /// Section pullbacks for ancestor nodes, defined on this boundary's
    /// total ring (only meaningful for nested declarations).
    pub ancestor_pullbacks: BTreeMap<String, LinearMap>,
    pub boundary: FamilyLevel,
}

/// Per-node data of a stratum, with every class extended to stratum depth.
#[derive(Debug)]
pub struct NodeInStratum {
    pub id: String,
    pub theta_x: ClassExpr,
    pub theta_y: ClassExpr,
    pub psi_x: ClassExpr,
    pub psi_y: ClassExpr,
    /// Section pullback on the full stratum fiber ring.
    pub pullback: LinearMap,
}

/// Maps needed to push a monomial of this stratum into a deeper stratum
/// obtained by switching on one more node.
#[derive(Debug)]
pub struct CreationMaps {
    /// Sorted node ids of the deeper stratum.
    pub target: Vec<String>,
    pub extend_fiber: LinearMap,
    pub extend_base: LinearMap,
    /// Section pullback of the new node, from this stratum's fiber ring
    /// into the deeper stratum's base ring.
    pub pullback_new: LinearMap,
}

#[derive(Debug)]
pub struct Creation {
    pub node: String,
    pub maps: std::result::Result<CreationMaps, String>,
}

#[derive(Debug)]
pub struct Stratum {
    /// Sorted, distinct node ids.
    pub nodes: Vec<String>,
    pub base: Arc<Algebra>,
    pub fiber: Arc<Algebra>,
    /// Composite restriction of the root total ring onto `fiber`.
    pub restrict_global: LinearMap,
    /// Composite pullback of the root base ring onto `base`.
    pub base_from_root: LinearMap,
    /// Image of the family's omega in `fiber`.
    pub omega: ClassExpr,
    pub per_node: Vec<NodeInStratum>,
    /// One entry per node of the family not already in this stratum.
    pub creations: Vec<Creation>,
}

impl Stratum {
    pub fn node(&self, id: &str) -> Result<&NodeInStratum> {
        self.per_node.iter().find(|n| n.id == id).ok_or_else(|| {
            HmError::Unconfigured(format!(
                "stratum ({}) has no node {id}",
                self.nodes.join(",")
            ))
        })
    }

    /// Bring a class expressed in the root total ring (or already in this
    /// stratum's fiber ring) into the fiber ring.
    pub fn localize(&self, x: &ClassExpr) -> Result<ClassExpr> {
        if same_algebra(&x.algebra, &self.fiber) {
            Ok(x.clone())
        } else if same_algebra(&x.algebra, &self.restrict_global.from) {
            self.restrict_global.apply(x)
        } else {
            Err(HmError::AlgebraMismatch(format!(
                "class in {} is neither global nor in stratum fiber {}",
                x.algebra.name, self.fiber.name
            )))
        }
    }

    pub fn creation_for(&self, node: &str) -> Option<&Creation> {
        self.creations.iter().find(|c| c.node == node)
    }

    /// Restriction of a root total-ring class onto this stratum's fiber ring.
    pub fn restrict(&self, a: &ClassExpr) -> Result<ClassExpr> {
        self.restrict_global.apply(a)
    }

    /// Integral over the stratum's total space; zero off top degree.
    pub fn integrate_total_space(&self, a: &ClassExpr) -> Result<crate::rational::Rat> {
        Ok(self.localize(a)?.integrate())
    }
}

pub struct FamilyModel {
    pub base_dim: u32,
    pub metadata: serde_json::Value,
    pub root: FamilyLevel,
    pub top_node_ids: Vec<String>,
    registry: RwLock<BTreeMap<String, Arc<Algebra>>>,
    strata: RwLock<BTreeMap<Vec<String>, Arc<Stratum>>>,
    synthesized: RwLock<BTreeMap<(String, String), Arc<NodeData>>>,
}

impl FamilyModel {
    pub fn new(
        base_dim: u32,
        metadata: serde_json::Value,
        root: FamilyLevel,
        registry: BTreeMap<String, Arc<Algebra>>,
    ) -> FamilyModel {
        let top_node_ids = root.nodes.iter().map(|n| n.id.clone()).collect();
        FamilyModel {
            base_dim,
            metadata,
            root,
            top_node_ids,
            registry: RwLock::new(registry),
            strata: RwLock::new(BTreeMap::new()),
            synthesized: RwLock::new(BTreeMap::new()),
        }
    }

    pub fn base(&self) -> &Arc<Algebra> {
        &self.root.base
    }

    pub fn total(&self) -> &Arc<Algebra> {
        &self.root.total
    }

    /// The family's distinguished classes live in the total ring.
    pub fn distinguished(&self, name: &str) -> Result<ClassExpr> {
        if name == "one" || name == "1" {
            return Ok(ClassExpr::unit(self.total()));
        }
        if let Some(v) = self.root.total.distinguished.get(name) {
            return Ok(ClassExpr::from_terms(self.total(), v.clone()));
        }
        // Fall back to bare basis symbols so words can name any basis class.
        let i = self.root.total.sym_index(name).map_err(|_| {
            HmError::Unconfigured(format!("no distinguished class or basis symbol {name:?}"))
        })?;
        Ok(ClassExpr::basis(self.total(), i))
    }

    /// Intern an algebra by name, requiring identical declarations to agree.
    pub fn intern(&self, alg: Algebra) -> Result<Arc<Algebra>> {
        let mut reg = self.registry.write().expect("registry poisoned");
        if let Some(existing) = reg.get(&alg.name) {
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
            reg.insert(arc.name.clone(), arc.clone());
            Ok(arc)
        }
    }

    /// Node data for `id` seen from the family level at the end of `chain`.
    /// Falls back to a tensor-product synthesis for depth-one chains when the
    /// configuration does not nest the node explicitly.
    pub fn node_for(
        &self,
        level: &FamilyLevel,
        chain: &[String],
        id: &str,
    ) -> Result<Arc<NodeData>> {
        if let Some(n) = level.configured_node(id) {
            return Ok(n.clone());
        }
        if !self.top_node_ids.iter().any(|t| t == id) {
            return Err(HmError::Unconfigured(format!("unknown node id {id:?}")));
        }
        if chain.len() != 1 {
            return Err(HmError::Unconfigured(format!(
                "no nesting configured for node {id} below chain ({}); supply it explicitly",
                chain.join(",")
            )));
        }
        let key = (chain[0].clone(), id.to_string());
        if let Some(n) = self.synthesized.read().expect("cache poisoned").get(&key) {
            return Ok(n.clone());
        }
        let built = Arc::new(tensor::synthesize_nested(self, &chain[0], id)?);
        let mut cache = self.synthesized.write().expect("cache poisoned");
        Ok(cache.entry(key).or_insert(built).clone())
    }

    /// The family level at the end of a (not necessarily sorted) chain.
    pub fn descend(&self, chain: &[String]) -> Result<Vec<Arc<NodeData>>> {
        let mut out: Vec<Arc<NodeData>> = Vec::with_capacity(chain.len());
        for (i, id) in chain.iter().enumerate() {
            let level = match out.last() {
                Some(n) => &n.boundary,
                None => &self.root,
            };
            let nd = self.node_for(level, &chain[..i], id)?;
            out.push(nd);
        }
        Ok(out)
    }

    /// Section pullback of a node applied to a class of the total ring.
    pub fn pullback_node(&self, theta: &str, a: &ClassExpr) -> Result<ClassExpr> {
        let s = self.stratum(&[theta.to_string()])?;
        s.node(theta)?.pullback.apply(&s.localize(a)?)
    }

    /// Canonical stratum for a set of node ids (order-insensitive input).
    pub fn stratum(&self, ids: &[String]) -> Result<Arc<Stratum>> {
        let mut key: Vec<String> = ids.to_vec();
        key.sort();
        key.dedup();
        if key.len() != ids.len() {
            return Err(HmError::Validation(format!(
                "stratum node ids must be distinct: ({})",
                ids.join(",")
            )));
        }
        if let Some(s) = self.strata.read().expect("cache poisoned").get(&key) {
            return Ok(s.clone());
        }
        let built = Arc::new(self.build_stratum(&key)?);
        let mut cache = self.strata.write().expect("cache poisoned");
        Ok(cache.entry(key).or_insert(built).clone())
    }

    fn build_stratum(&self, key: &[String]) -> Result<Stratum> {
        let chain = self.descend(key)?;
        let (base, fiber) = match chain.last() {
            Some(n) => (n.boundary.base.clone(), n.boundary.total.clone()),
            None => (self.root.base.clone(), self.root.total.clone()),
        };

        let mut restrict_global = LinearMap::identity(&self.root.total, "id");
        let mut base_from_root = LinearMap::identity(&self.root.base, "id");
        for nd in &chain {
            restrict_global = restrict_global.then(&nd.restrict)?;
            base_from_root = base_from_root.then(&nd.base_pullback)?;
        }
        restrict_global.tag = format!("restrict A -> ({})", key.join(","));
        base_from_root.tag = format!("base pullback A_B -> ({})", key.join(","));
        let omega = restrict_global.apply(&self.root.omega)?;

        let mut per_node = Vec::new();
        for (i, nd) in chain.iter().enumerate() {
            let mut theta_x = nd.theta_x.clone();
            let mut theta_y = nd.theta_y.clone();
            let mut psi_x = nd.psi_x.clone();
            let mut psi_y = nd.psi_y.clone();
            for deeper in &chain[i + 1..] {
                theta_x = deeper.restrict.apply(&theta_x)?;
                theta_y = deeper.restrict.apply(&theta_y)?;
                psi_x = deeper.base_pullback.apply(&psi_x)?;
                psi_y = deeper.base_pullback.apply(&psi_y)?;
            }
            let pullback = if i + 1 == chain.len() {
                nd.pullback.clone()
            } else {
                let deepest = chain.last().expect("nonempty chain");
                deepest
                    .ancestor_pullbacks
                    .get(&nd.id)
                    .cloned()
                    .ok_or_else(|| {
                        HmError::Unconfigured(format!(
                            "no ancestor pullback for {} at chain ({})",
                            nd.id,
                            key.join(",")
                        ))
                    })?
            };
            per_node.push(NodeInStratum {
                id: nd.id.clone(),
                theta_x,
                theta_y,
                psi_x,
                psi_y,
                pullback,
            });
        }

        let level = match chain.last() {
            Some(n) => &n.boundary,
            None => &self.root,
        };
        let mut creations = Vec::new();
        for id in &self.top_node_ids {
            if key.iter().any(|k| k == id) {
                continue;
            }
            let mut target: Vec<String> = key.to_vec();
            target.push(id.clone());
            target.sort();
            let maps = match self.node_for(level, key, id) {
                Ok(nd) => match nd.restrict.then(&nd.pullback) {
                    Ok(pullback_new) => Ok(CreationMaps {
                        target,
                        extend_fiber: nd.restrict.clone(),
                        extend_base: nd.base_pullback.clone(),
                        pullback_new,
                    }),
                    Err(e) => Err(e.to_string()),
                },
                Err(e) => Err(e.to_string()),
            };
            creations.push(Creation {
                node: id.clone(),
                maps,
            });
        }

        Ok(Stratum {
            nodes: key.to_vec(),
            base,
            fiber,
            restrict_global,
            base_from_root,
            omega,
            per_node,
            creations,
        })
    }

    /// Check that a creation's declared algebras coincide with the canonical
    /// stratum it lands in, then return that stratum.
    pub fn creation_target(&self, maps: &CreationMaps) -> Result<Arc<Stratum>> {
        let target = self.stratum(&maps.target)?;
        if !same_algebra(&maps.extend_fiber.to, &target.fiber)
            || !same_algebra(&maps.extend_base.to, &target.base)
        {
            return Err(HmError::Validation(format!(
                "nesting for stratum ({}) declares algebras {} / {} but the canonical chain gives {} / {}",
                maps.target.join(","),
                maps.extend_fiber.to.name,
                maps.extend_base.to.name,
                target.fiber.name,
                target.base.name,
            )));
        }
        Ok(target)
    }
}

impl std::fmt::Debug for FamilyModel {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("FamilyModel")
            .field("base_dim", &self.base_dim)
            .field("nodes", &self.top_node_ids)
            .finish()
    }
}
