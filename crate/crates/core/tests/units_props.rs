use proptest::prelude::*;

use unitsml::units::{rescale, BaseUnitSystem, GroupElement, Quantity, UnitVector};

fn system() -> BaseUnitSystem {
    BaseUnitSystem::new(&["kg", "m", "s", "K"]).unwrap()
}

fn units() -> impl Strategy<Value = UnitVector> {
    prop::collection::vec(-6i32..=6, 4).prop_map(UnitVector::new)
}

fn group() -> impl Strategy<Value = GroupElement> {
    prop::collection::vec(-1.0f64..1.0, 4).prop_map(|e| GroupElement::new(e.iter().map(|x| 10f64.powf(*x)).collect()).unwrap())
}

fn close(a: f64, b: f64) -> bool {
    (a - b).abs() <= 1e-12 * a.abs().max(b.abs())
}

proptest! {
    #[test]
    fn format_parse_round_trip(u in units()) {
        let sys = system();
        prop_assert_eq!(sys.parse(&sys.format(&u)).unwrap(), u);
    }

    #[test]
    fn add_sub_inverse(a in units(), b in units()) {
        let s = a.checked_add(&b).unwrap();
        prop_assert_eq!(s.checked_sub(&b).unwrap(), a.clone());
        prop_assert_eq!(a.checked_add(&b).unwrap(), b.checked_add(&a).unwrap());
    }

    #[test]
    fn group_law(g in group(), h in group(), u in units()) {
        let gh = g.compose(&h);
        prop_assert!(close(gh.factor(&u), g.factor(&u) * h.factor(&u)));
        prop_assert_eq!(GroupElement::identity(4).factor(&u), 1.0);
    }

    #[test]
    fn factor_matches_power_product(g in group(), u in units()) {
        let want: f64 = g.components().iter().zip(u.exps()).map(|(c, &e)| c.powi(-e)).product();
        prop_assert!(close(g.factor(&u), want));
    }

    #[test]
    fn rescale_is_a_homomorphism(g in group(), a in units(), b in units(), x in 0.1f64..10.0, y in 0.1f64..10.0) {
        let (qa, qb) = (Quantity::new(x, a), Quantity::new(y, b));
        let lhs = rescale(&g, &qa.mul(&qb).unwrap());
        let rhs = rescale(&g, &qa).mul(&rescale(&g, &qb)).unwrap();
        prop_assert_eq!(&lhs.units, &rhs.units);
        prop_assert!(close(lhs.value, rhs.value));
    }

    #[test]
    fn rescale_then_inverse_restores(g in group(), u in units(), x in -10.0f64..10.0) {
        let inv = GroupElement::new(g.components().iter().map(|c| 1.0 / c).collect()).unwrap();
        let q = Quantity::new(x, u);
        let back = rescale(&inv, &rescale(&g, &q));
        prop_assert!((back.value - x).abs() <= 1e-12 * x.abs().max(1e-300));
    }

    #[test]
    fn addition_requires_equal_units(a in units(), b in units()) {
        let r = Quantity::new(1.0, a.clone()).add(&Quantity::new(2.0, b.clone()));
        prop_assert_eq!(r.is_ok(), a == b);
    }

    #[test]
    fn integer_powers(u in units(), e in -3i32..=3, x in 0.5f64..2.0) {
        let p = Quantity::new(x, u.clone()).pow(e).unwrap();
        prop_assert_eq!(p.units, u.checked_scale(e).unwrap());
        prop_assert!(close(p.value, x.powi(e)));
    }
}

#[test]
fn joules_to_cgs() {
    let sys = BaseUnitSystem::with_si_aliases(&["kg", "m", "s"]).unwrap();
    let q = Quantity::new(2.9, sys.parse("J").unwrap());
    let g = GroupElement::new(vec![1e-3, 1e-2, 1.0]).unwrap();
    let out = rescale(&g, &q);
    assert!(((out.value - 2.9e7) / 2.9e7).abs() <= 1e-12);
}

#[test]
fn bad_expressions_are_rejected() {
    let sys = system();
    for bad in ["furlong", "m^", "m^x", "kg^1.5", "^2"] {
        assert!(sys.parse(bad).is_err(), "{bad}");
    }
}
