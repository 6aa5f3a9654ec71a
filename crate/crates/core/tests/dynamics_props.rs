//! Properties of geodesics, parallel lifts and projective changes over
//! randomly drawn data.

mod common;

use std::sync::Arc;

use algebroid_engine::algebroid::{GenAlgebroid, GhMorphism};
use algebroid_engine::config::System;
use algebroid_engine::connection::NlConnection;
use algebroid_engine::expr::Expr;
use algebroid_engine::geo::{integrate, path_deviation, GeodesicField, ParallelLift};
use algebroid_engine::mech::MechSystem;
use algebroid_engine::sampling::SampleSpec;
use algebroid_engine::weyl::{hs_relation_check, make_projective_change, round_trip_check};
use proptest::prelude::*;

/// Coefficient literal in the expression grammar (no unary minus).
fn n(c: f64) -> String {
    if c < 0.0 {
        format!("neg({})", -c)
    } else {
        c.to_string()
    }
}

fn quadratic_spray(c: &[f64; 6]) -> MechSystem {
    let alg = Arc::new(GenAlgebroid::tangent(2));
    let gh = Arc::new(GhMorphism::identity(&alg));
    let g = vec![
        Expr::parse(&format!("{}*y1^2 + {}*x2*y1*y2 + {}*y2^2", n(c[0]), n(c[1]), n(c[2])), 2, 2).unwrap(),
        Expr::parse(&format!("{}*x1*y1^2 + {}*y1*y2 + {}*y2^2", n(c[3]), n(c[4]), n(c[5])), 2, 2).unwrap(),
    ];
    MechSystem::new(alg, gh, g, vec![Expr::zero(), Expr::zero()]).unwrap()
}

fn coeffs() -> impl Strategy<Value = [f64; 6]> {
    prop::array::uniform6(-0.5..0.5f64)
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 16, failure_persistence: None, ..ProptestConfig::default() })]

    #[test]
    fn spray_paths_ignore_initial_speed(c in coeffs(), lam in 0.5..2.0f64, y0 in prop::array::uniform2(0.2..0.6f64)) {
        let field = GeodesicField::new(&quadratic_spray(&c));
        let slow = integrate(&field, &[0.0, 0.0], &y0, 1.0, 1e-3).unwrap();
        let y1 = [lam * y0[0], lam * y0[1]];
        let fast = integrate(&field, &[0.0, 0.0], &y1, 1.0 / lam, 1e-3 / lam).unwrap();
        prop_assert!(path_deviation(&slow.base_path(), &fast.base_path()) < 1e-5);
    }

    #[test]
    fn base_velocity_is_transported_fiber(x in prop::array::uniform2(-1.0..1.0f64), y in prop::array::uniform2(-1.0..1.0f64)) {
        let sys = System::load(&common::config("nonidentity_g")).unwrap();
        let field = GeodesicField::new(sys.mech.as_ref().unwrap());
        prop_assert!(field.transport_residual(&x, &y).unwrap() < 1e-12);
    }

    #[test]
    fn parallel_lift_satisfies_its_equation(c in prop::array::uniform4(-1.0..1.0f64), u0 in prop::array::uniform2(-1.0..1.0f64)) {
        // Γ linear in the fiber with base-dependent coefficients.
        let alg = Arc::new(GenAlgebroid::tangent(2));
        let gh = Arc::new(GhMorphism::identity(&alg));
        let e = |s: String| Expr::parse(&s, 2, 2).unwrap();
        let gamma = vec![
            vec![e(format!("{}*x1*y1 + {}*y2", n(c[0]), n(c[1]))), e(format!("{}*y1", n(c[2])))],
            vec![e(format!("{}*x2*y2", n(c[3]))), e(format!("{}*y1 - {}*y2", n(c[1]), n(c[0])))],
        ];
        let conn = NlConnection::new(alg, gh, gamma).unwrap();
        let curve = |t: f64| vec![t.cos(), 0.5 * t * t];
        let lift = ParallelLift { conn: &conn, curve: &curve };
        let tr = lift.integrate(&u0, 1.0, 1e-3).unwrap();
        prop_assert!(lift.residual(&tr).unwrap() < 1e-7);
    }

    #[test]
    fn projective_change_round_trip(c in coeffs(), k in prop::array::uniform3(-1.0..1.0f64)) {
        let sys = quadratic_spray(&c);
        let f = Expr::parse(&format!("{}*y1 + {}*x1*y2 + {}*sqrt(y1^2 + y2^2)", n(k[0]), n(k[1]), n(k[2])), 2, 2).unwrap();
        let pts = SampleSpec::default().with_count(20).away_from_zero().points(2, 2);
        let pc = make_projective_change(&sys, f, &pts, 1e-10).unwrap();
        prop_assert!(round_trip_check(&pc, &pts, 1e-8).unwrap().passed());
        prop_assert!(pc.bar.spray_condition(&pts, 1e-10).passed());
        for rep in hs_relation_check(&pc, &[], &pts, 1e-8) {
            prop_assert!(rep.passed(), "{}", rep);
        }
    }
}
