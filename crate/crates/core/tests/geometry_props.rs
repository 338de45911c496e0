use proptest::prelude::*;

use unitsml::geometry::{scalarize, NamedQuantity, ScalarizeRules, VectorFeature};
use unitsml::units::{BaseUnitSystem, GroupElement, UnitVector};

fn sys() -> BaseUnitSystem {
    BaseUnitSystem::new(&["kg", "m", "s"]).unwrap()
}

fn vec3() -> impl Strategy<Value = [f64; 3]> {
    prop::array::uniform3(-5.0f64..5.0)
}

/// Rotation from a unit quaternion.
fn rotation(q: [f64; 4]) -> [[f64; 3]; 3] {
    let n = q.iter().map(|x| x * x).sum::<f64>().sqrt();
    let [w, x, y, z] = q.map(|c| c / n);
    [
        [1.0 - 2.0 * (y * y + z * z), 2.0 * (x * y - w * z), 2.0 * (x * z + w * y)],
        [2.0 * (x * y + w * z), 1.0 - 2.0 * (x * x + z * z), 2.0 * (y * z - w * x)],
        [2.0 * (x * z - w * y), 2.0 * (y * z + w * x), 1.0 - 2.0 * (x * x + y * y)],
    ]
}

fn apply(r: &[[f64; 3]; 3], v: &[f64; 3]) -> [f64; 3] {
    [0, 1, 2].map(|i| r[i][0] * v[0] + r[i][1] * v[1] + r[i][2] * v[2])
}

fn inputs(g: [f64; 3], p: [f64; 3], q: [f64; 3], m: f64) -> (Vec<NamedQuantity>, Vec<VectorFeature>) {
    let s = sys();
    (
        vec![NamedQuantity::new("m", m, s.parse("kg").unwrap())],
        vec![
            VectorFeature::new("g", g, s.parse("m s^-2").unwrap()),
            VectorFeature::new("p", p, s.parse("kg m s^-1").unwrap()),
            VectorFeature::new("q", q, s.parse("m").unwrap()),
        ],
    )
}

proptest! {
    #[test]
    fn scalars_are_rotation_invariant(
        g in vec3(), p in vec3(), q in vec3(), m in 0.1f64..10.0,
        quat in prop::array::uniform4(-1.0f64..1.0).prop_filter("nonzero", |q| q.iter().map(|x| x * x).sum::<f64>() > 1e-3),
    ) {
        let r = rotation(quat);
        let rules = ScalarizeRules::default();
        let (s0, v0) = inputs(g, p, q, m);
        let (s1, v1) = inputs(apply(&r, &g), apply(&r, &p), apply(&r, &q), m);
        let a = scalarize(&s0, &v0, &rules).unwrap();
        let b = scalarize(&s1, &v1, &rules).unwrap();
        prop_assert_eq!(a.len(), 1 + 3 + 3);
        for (x, y) in a.iter().zip(&b) {
            prop_assert_eq!(&x.name, &y.name);
            prop_assert!((x.value - y.value).abs() <= 1e-11 * (1.0 + x.value.abs()));
        }
    }

    #[test]
    fn scalars_rescale_with_their_units(
        g in vec3(), p in vec3(), q in vec3(), m in 0.1f64..10.0,
        e in prop::array::uniform3(-1.0f64..1.0),
    ) {
        let grp = GroupElement::new(e.map(|x| 10f64.powf(x)).to_vec()).unwrap();
        let (s0, v0) = inputs(g, p, q, m);
        let scaled_s: Vec<NamedQuantity> = s0.iter().map(|s| NamedQuantity::new(&s.name, grp.factor(&s.quantity.units) * s.quantity.value, s.quantity.units.clone())).collect();
        let scaled_v: Vec<VectorFeature> = v0.iter().map(|v| VectorFeature::new(&v.name, v.components.map(|c| grp.factor(&v.units) * c), v.units.clone())).collect();
        let rules = ScalarizeRules::default();
        let a = scalarize(&s0, &v0, &rules).unwrap();
        let b = scalarize(&scaled_s, &scaled_v, &rules).unwrap();
        for (x, y) in a.iter().zip(&b) {
            let want = grp.factor(&x.units) * x.value;
            prop_assert!((y.value - want).abs() <= 1e-11 * (1.0 + want.abs()));
        }
    }
}

#[test]
fn dot_units_add_and_weights() {
    let (s, v) = inputs([1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0], 1.0);
    let f = scalarize(&s, &v, &ScalarizeRules::default().with_dot_exception("q", "g")).unwrap();
    let gq = f.iter().find(|x| x.name == "g_dot_q").unwrap();
    assert_eq!(gq.units, UnitVector::new(vec![0, 2, -2]));
    assert_eq!(gq.degree_weight, 2);
    assert!(gq.allow_negative_exponent);
    let gp = f.iter().find(|x| x.name == "g_dot_p").unwrap();
    assert!(!gp.allow_negative_exponent);
}

#[test]
fn duplicate_names_rejected() {
    let s = sys();
    let scalars = vec![NamedQuantity::new("norm_q", 1.0, s.parse("m").unwrap())];
    let vectors = vec![VectorFeature::new("q", [1.0, 0.0, 0.0], s.parse("m").unwrap())];
    assert!(scalarize(&scalars, &vectors, &ScalarizeRules::default()).is_err());
}
