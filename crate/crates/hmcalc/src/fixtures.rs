//! Bundled family configurations used by the check suites and tests.
//!
//! `cfg_s(g, d)` is the smooth family over a point: genus-g fibers, a line
//! bundle of fiber degree d, no nodes. The one-node and two-node families
//! ship as JSON files; the smooth family is generated because the check
//! suites sweep its parameters.

use crate::config::load_family;
use crate::error::Result;
use crate::family::FamilyModel;

pub const CFG_N1: &str = include_str!("../fixtures/cfg-n1.json");
pub const CFG_N2: &str = include_str!("../fixtures/cfg-n2.json");
pub const CFG_GEN2: &str = include_str!("../fixtures/cfg-gen2.json");

/// Smooth family config text: base a point, total space a genus-`g` curve
/// with point class `pt`, `omega = (2g-2) pt`, `L = d pt`.
pub fn cfg_s_text(g: i64, d: i64) -> String {
    let om = 2 * g - 2;
    format!(
        r#"{{
  "base_dim": 0,
  "metadata": {{"family": "smooth", "genus": {g}, "degree": {d}}},
  "algebra_AB": {{
    "name": "A_B",
    "basis": [{{"sym": "one", "deg": 0}}],
    "mult": [],
    "unit": "one",
    "integral": {{"one": "1"}}
  }},
  "algebra_A": {{
    "name": "A",
    "basis": [{{"sym": "one", "deg": 0}}, {{"sym": "pt", "deg": 1}}],
    "mult": [{{"a": "pt", "b": "pt", "val": []}}],
    "unit": "one",
    "distinguished": {{"omega": [["{om}", "pt"]], "L": [["{d}", "pt"]]}},
    "integral": {{"pt": "1"}}
  }},
  "nodes": []
}}
"#
    )
}

pub fn cfg_s(g: i64, d: i64) -> Result<FamilyModel> {
    load_family(&cfg_s_text(g, d))
}

pub fn cfg_n1() -> Result<FamilyModel> {
    load_family(CFG_N1)
}

pub fn cfg_n2() -> Result<FamilyModel> {
    load_family(CFG_N2)
}

pub fn cfg_gen2() -> Result<FamilyModel> {
    load_family(CFG_GEN2)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fixtures_load_and_validate() {
        cfg_s(0, 1).unwrap();
        cfg_s(2, 3).unwrap();
        cfg_n1().unwrap();
        cfg_n2().unwrap();
        cfg_gen2().unwrap();
    }

    #[test]
    fn smooth_fixture_structure() {
        let f = cfg_s(2, 1).unwrap();
        assert_eq!(f.base_dim, 0);
        assert!(f.top_node_ids.is_empty());
        let s = f.stratum(&[]).unwrap();
        assert!(s.creations.is_empty());
        // omega = 2 pt for g = 2
        let pt = f.total().sym_index("pt").unwrap();
        assert_eq!(s.omega.terms.get(&pt), Some(&crate::rational::rat_int(2)));
    }

    #[test]
    fn one_node_fixture_strata() {
        let f = cfg_n1().unwrap();
        let s0 = f.stratum(&[]).unwrap();
        assert_eq!(s0.creations.len(), 1);
        assert!(s0.creations[0].maps.is_ok());
        let s1 = f.stratum(&["theta".to_string()]).unwrap();
        assert_eq!(s1.per_node.len(), 1);
        assert!(s1.creations.is_empty());
        // restrict(omega) = 4p
        let p = s1.fiber.sym_index("p").unwrap();
        assert_eq!(s1.omega.terms.get(&p), Some(&crate::rational::rat_int(4)));
    }

    #[test]
    fn pullback_examples() {
        // theta*(omega) = 0, theta*(1) = 1, theta*(L) = configured value (0 here).
        let f = cfg_n1().unwrap();
        let s1 = f.stratum(&["theta".to_string()]).unwrap();
        let node = s1.node("theta").unwrap();
        let omega = f.distinguished("omega").unwrap();
        let ell = f.distinguished("L").unwrap();
        let one = f.distinguished("one").unwrap();
        let pull = |x| {
            node.pullback
                .apply(&s1.restrict_global.apply(x).unwrap())
                .unwrap()
        };
        assert!(pull(&omega).is_zero());
        assert!(pull(&one).is_unit());
        assert!(pull(&ell).is_zero());
    }

    #[test]
    fn two_node_fixture_shares_deep_algebras() {
        let f = cfg_n2().unwrap();
        let s12 = f
            .stratum(&["theta1".to_string(), "theta2".to_string()])
            .unwrap();
        assert_eq!(s12.per_node.len(), 2);
        // The creation maps out of each single-node stratum must land in the
        // canonical pair stratum.
        for id in ["theta1", "theta2"] {
            let s = f.stratum(&[id.to_string()]).unwrap();
            assert_eq!(s.creations.len(), 1);
            let maps = s.creations[0].maps.as_ref().unwrap();
            let target = f.creation_target(maps).unwrap();
            assert!(crate::algebra::same_algebra(&target.fiber, &s12.fiber));
        }
    }

    #[test]
    fn generated_pair_stratum() {
        let f = cfg_gen2().unwrap();
        let s = f.stratum(&["na".to_string(), "nb".to_string()]).unwrap();
        // Quotient fiber of the synthesized pair is 1 + point.
        assert_eq!(s.fiber.dim(), 2);
        assert_eq!(s.base.dim(), 1);
        // Both node sections collapse to the same point class and omega dies.
        assert!(s.omega.homogeneous_degree().is_some());
        let n_a = s.node("na").unwrap();
        let n_b = s.node("nb").unwrap();
        assert_eq!(n_a.theta_x, n_b.theta_x);
        assert!(!n_a.theta_x.is_zero());
    }

    #[test]
    fn write_smooth_fixture_files() {
        // Regeneration hook: keeps the shipped files in lockstep with the
        // generator. No-op unless explicitly requested.
        if std::env::var("HMCALC_WRITE_FIXTURES").is_err() {
            return;
        }
        let dir = std::path::Path::new(env!("CARGO_MANIFEST_DIR")).join("fixtures");
        for (g, d) in [(0i64, 1i64), (1, 1), (2, 1), (0, 2), (0, 3)] {
            std::fs::write(dir.join(format!("cfg-s_g{g}_d{d}.json")), cfg_s_text(g, d)).unwrap();
        }
    }

    #[test]
    fn bad_grading_rejected() {
        let text = cfg_s_text(0, 1).replace(
            r#"{"a": "pt", "b": "pt", "val": []}"#,
            r#"{"a": "pt", "b": "pt", "val": [["1", "pt"]]}"#,
        );
        let err = load_family(&text).unwrap_err();
        assert!(err.to_string().contains("degree-additivity"));
    }
}
