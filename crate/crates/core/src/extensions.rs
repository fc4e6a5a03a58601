//! Multiquadratic towers `M = Q(sqrt d1 [, sqrt d2])`: place splitting,
//! Witt indices and hyperbolicity over `M`, and norm groups.
//!
//! Hyperbolicity over `M` is decided completion by completion (Hasse-Minkowski
//! over `M`), with no arithmetic in `M` itself. Norm groups of quadratic
//! extensions are the values of `<1, -d>`. For biquadratic `M` with quadratic
//! subfields `L = Q(sqrt d1)` and `L' = Q(sqrt d2)`,
//! `N(L) ∩ N(L') = Q^x^2 * N(M)`, so membership in `Q^x^2 * N(M)` is the
//! conjunction of the two quadratic tests.

use std::fmt;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::arith::{squarefree_rep, Rat, SquareClass};
use crate::error::{Error, Result};
use crate::forms::{analyze, class_span, represents, Analysis, QForm};
use crate::local::{LocalField, Place};

/// `Q` adjoined square roots of 0, 1 or 2 independent square classes.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct ExtensionTower {
    generators: Vec<SquareClass>,
}

/// Result of [`make_tower`]: the tower and whether the requested generators
/// were dependent (so the tower is smaller than asked for).
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TowerBuild {
    pub tower: ExtensionTower,
    pub downgraded: bool,
}

impl ExtensionTower {
    pub fn rationals() -> Self {
        ExtensionTower { generators: Vec::new() }
    }

    /// `Q(sqrt d)`; fails if `d` is a square.
    pub fn quadratic(d: SquareClass) -> Result<Self> {
        if d.is_one() {
            return Err(Error::domain("Q(sqrt 1) is not a quadratic extension"));
        }
        Ok(ExtensionTower { generators: vec![d] })
    }

    /// `Q(sqrt d1, sqrt d2)`; fails unless the generators are independent.
    pub fn biquadratic(d1: SquareClass, d2: SquareClass) -> Result<Self> {
        let build = make_tower(&[d1, d2])?;
        if build.downgraded {
            return Err(Error::domain(format!(
                "{d1} and {d2} do not generate a biquadratic field"
            )));
        }
        Ok(build.tower)
    }

    pub fn generators(&self) -> &[SquareClass] {
        &self.generators
    }

    pub fn degree(&self) -> u32 {
        1 << self.generators.len()
    }

    /// Nontrivial square classes of `Q` that become squares in the tower.
    /// Generators form a canonical independent basis.
    pub fn is_canonical(&self) -> bool {
        make_tower(&self.generators).is_ok_and(|b| !b.downgraded && b.tower == *self)
    }

    pub fn squared_classes(&self) -> Vec<SquareClass> {
        class_span(&self.generators)
            .into_iter()
            .filter(|s| !s.is_one())
            .collect()
    }
}

impl fmt::Display for ExtensionTower {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.generators.is_empty() {
            return write!(f, "Q");
        }
        let gens: Vec<String> = self.generators.iter().map(|g| format!("sqrt {g}")).collect();
        write!(f, "Q({})", gens.join(", "))
    }
}

impl Serialize for ExtensionTower {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        self.generators.serialize(s)
    }
}

/// Generators are taken as given; certificate verification checks them.
impl<'de> Deserialize<'de> for ExtensionTower {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        Ok(ExtensionTower {
            generators: Vec::<SquareClass>::deserialize(d)?,
        })
    }
}

/// Canonical tower generated by `ds`: squares are discarded, dependent
/// generators downgrade the tower, and the basis is the smallest pair of the
/// generated group in search order.
pub fn make_tower(ds: &[SquareClass]) -> Result<TowerBuild> {
    if ds.len() > 2 {
        return Err(Error::domain(format!(
            "towers have at most 2 generators, got {}",
            ds.len()
        )));
    }
    let mut independent: Vec<SquareClass> = Vec::new();
    for &d in ds {
        if !class_span(&independent).contains(&d) {
            independent.push(d);
        }
    }
    let downgraded = independent.len() < ds.len();
    let mut nontrivial: Vec<SquareClass> = class_span(&independent).into_iter().filter(|s| !s.is_one()).collect();
    nontrivial.sort_by_key(|s| s.search_key());
    let generators = match independent.len() {
        0 => Vec::new(),
        1 => independent,
        _ => nontrivial[..2].to_vec(),
    };
    Ok(TowerBuild {
        tower: ExtensionTower { generators },
        downgraded,
    })
}

/// The completions of a tower above one place of `Q`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct PlaceFiber {
    pub base_place: Place,
    /// Each completion type with the number of places of `M` realizing it.
    pub completions: Vec<(LocalField, u32)>,
}

impl PlaceFiber {
    /// `sum e * f * multiplicity`, which equals the tower degree.
    pub fn total_degree(&self) -> u32 {
        self.completions
            .iter()
            .map(|(e, m)| e.ramification_index() * e.residue_degree() * m)
            .sum()
    }
}

/// Splitting of `v` in `M`. The tower is Galois over `Q`, so all places above
/// `v` have isomorphic completions.
pub fn places_over(tower: &ExtensionTower, place: Place) -> PlaceFiber {
    let completion = LocalField::completion(place, &tower.generators);
    let count = tower.degree() / completion.degree();
    PlaceFiber {
        base_place: place,
        completions: vec![(completion, count)],
    }
}

/// Local-global analysis of `phi` over the tower.
pub fn analysis_over(phi: &QForm, tower: &ExtensionTower) -> Analysis {
    analyze(phi, &tower.generators, tower.degree())
}

pub fn is_hyperbolic_over(phi: &QForm, tower: &ExtensionTower) -> bool {
    phi.dim().is_multiple_of(2) && analysis_over(phi, tower).aniso_dim == 0
}

pub fn witt_index_over(phi: &QForm, tower: &ExtensionTower) -> usize {
    analysis_over(phi, tower).witt_index()
}

/// `c` is a norm from `Q(sqrt d)`: `<1, -d>` represents `c`.
pub fn norm_member(c: &Rat, d: SquareClass) -> Result<bool> {
    if d.is_one() {
        return Err(Error::domain("Q(sqrt 1) is trivial; every element is a norm"));
    }
    represents(&QForm::new(vec![SquareClass::ONE, -d]), c)
}

/// `c` lies in `Q^x^2 * N(M)`.
pub fn norm_member_tower(c: &Rat, tower: &ExtensionTower) -> Result<bool> {
    squarefree_rep(c)?;
    for &d in &tower.generators {
        if !norm_member(c, d)? {
            return Ok(false);
        }
    }
    Ok(true)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::forms::{pfister, tensor, witt_index};
    use proptest::prelude::*;

    fn sq(v: i64) -> SquareClass {
        SquareClass::of_int(v).unwrap()
    }

    fn f(v: &[i64]) -> QForm {
        QForm::from_ints(v).unwrap()
    }

    fn quad(d: i64) -> ExtensionTower {
        ExtensionTower::quadratic(sq(d)).unwrap()
    }

    #[test]
    fn tower_examples() {
        let b = make_tower(&[]).unwrap();
        assert_eq!((b.tower.degree(), b.downgraded), (1, false));
        let b = make_tower(&[sq(5)]).unwrap();
        assert_eq!(b.tower.degree(), 2);
        let b = make_tower(&[sq(2), sq(18)]).unwrap();
        assert_eq!((b.tower.generators(), b.downgraded), (&[sq(2)][..], true));
        let b = make_tower(&[sq(1), sq(7)]).unwrap();
        assert_eq!((b.tower.generators(), b.downgraded), (&[sq(7)][..], true));
        let b = make_tower(&[sq(15), sq(3)]).unwrap();
        assert_eq!(b.tower.generators(), &[sq(3), sq(5)][..]);
        assert!(make_tower(&[sq(2), sq(3), sq(5)]).is_err());
        assert_eq!(b.tower.to_string(), "Q(sqrt 3, sqrt 5)");
    }

    #[test]
    fn fiber_examples() {
        let fib = places_over(&quad(-1), Place::Real);
        assert_eq!(fib.completions.len(), 1);
        assert!(fib.completions[0].0.is_complex());
        assert_eq!(fib.completions[0].1, 1);

        let fib = places_over(&quad(5), Place::Prime(11));
        assert_eq!(fib.completions[0].0.degree(), 1);
        assert_eq!(fib.completions[0].1, 2);

        let fib = places_over(&quad(5), Place::Prime(5));
        let e = &fib.completions[0].0;
        assert_eq!(
            (e.ramification_index(), e.residue_degree(), fib.completions[0].1),
            (2, 1, 1)
        );
    }

    #[test]
    fn hyperbolic_over_examples() {
        assert!(is_hyperbolic_over(&f(&[1, -1]), &quad(7)));
        assert!(is_hyperbolic_over(&f(&[1, -5]), &quad(5)));
        let p = pfister(&[sq(2), sq(5), sq(-2)]).unwrap();
        assert!(is_hyperbolic_over(&p, &ExtensionTower::rationals()));
        assert!(!is_hyperbolic_over(&f(&[1, 1]), &quad(2)));
        assert!(is_hyperbolic_over(
            &f(&[1, -2, 1, -3]),
            &ExtensionTower::biquadratic(sq(2), sq(3)).unwrap()
        ));
    }

    #[test]
    fn witt_index_over_examples() {
        assert_eq!(witt_index_over(&f(&[1, -1]), &quad(3)), 1);
        assert_eq!(witt_index_over(&f(&[1, 1, 1, 1]), &quad(-1)), 2);
        assert_eq!(witt_index_over(&f(&[1, -5]), &quad(2)), 0);
        let a = analysis_over(&f(&[1, -5]), &quad(2));
        assert!(a.records.iter().any(|r| r.place == Place::Prime(5) && r.aniso_dim == 2));
    }

    #[test]
    fn norm_examples() {
        // N(sqrt d) = -d; whether d itself is a norm depends on d
        for d in [2i64, 3, -1, 5, 7, -3] {
            assert!(norm_member(&(-d).into(), sq(d)).unwrap());
            let brute = (1..=200i64).any(|z| {
                (0..=200i64).any(|y| {
                    let t = d * z * z + d * y * y;
                    t >= 0 && {
                        let r = (t as f64).sqrt() as i64;
                        (r.saturating_sub(1)..=r + 1).any(|x| x * x == t)
                    }
                })
            });
            assert_eq!(norm_member(&d.into(), sq(d)).unwrap(), brute, "d = {d}");
        }
        assert!(norm_member(&4.into(), sq(3)).unwrap());
        assert!(norm_member(&1.into(), sq(1)).is_err());
    }

    // x^2 - 2y^2 + z^2 = 0 has no primitive solution mod 16.
    #[test]
    fn minus_one_not_norm_from_sqrt2() {
        let found = (0..16i64).any(|x| {
            (0..16i64).any(|y| {
                (0..16i64).any(|z| (x % 2 + y % 2 + z % 2) > 0 && (x * x - 2 * y * y + z * z).rem_euclid(16) == 0)
            })
        });
        // -1 = 1^2 - 2*1^2 is a norm, so a primitive solution must exist
        assert!(found);
        assert!(norm_member(&(-1).into(), sq(2)).unwrap());
    }

    #[test]
    fn tower_norm_examples() {
        let m = ExtensionTower::biquadratic(sq(2), sq(-1)).unwrap();
        assert!(norm_member_tower(&7.into(), &ExtensionTower::rationals()).unwrap());
        assert!(norm_member_tower(&9.into(), &m).unwrap());
        // 2 = 2^2 - 2*1^2, and 2 = 1 + 1
        assert!(norm_member_tower(&2.into(), &m).unwrap());
        // 3 is not a sum of two squares
        assert!(norm_member(&(-7).into(), sq(2)).unwrap());
        assert!(!norm_member(&3.into(), sq(-1)).unwrap());
        assert!(!norm_member_tower(&3.into(), &m).unwrap());
    }

    fn small() -> impl Strategy<Value = i64> {
        (-30i64..=30).prop_filter("nonzero", |v| *v != 0)
    }

    fn nonsquare() -> impl Strategy<Value = SquareClass> {
        small().prop_map(sq).prop_filter("nontrivial", |s| !s.is_one())
    }

    proptest! {
        #[test]
        fn norms_form_a_group(c1 in small(), c2 in small(), d in nonsquare()) {
            if norm_member(&c1.into(), d).unwrap() && norm_member(&c2.into(), d).unwrap() {
                prop_assert!(norm_member(&(c1 * c2).into(), d).unwrap());
            }
        }

        #[test]
        fn pfister_multiples_split_over_their_field(d in nonsquare(), theta in prop::collection::vec(small(), 1..5)) {
            let phi = tensor(&pfister(&[d]).unwrap(), &f(&theta));
            prop_assert!(is_hyperbolic_over(&phi, &ExtensionTower::quadratic(d).unwrap()));
        }

        #[test]
        fn fiber_degrees_add_up(d1 in nonsquare(), d2 in nonsquare(), p in prop::sample::select(vec![2u64, 3, 5, 7, 11, 13, 29])) {
            let tower = make_tower(&[d1, d2]).unwrap().tower;
            prop_assert_eq!(places_over(&tower, Place::Prime(p)).total_degree(), tower.degree());
            prop_assert_eq!(places_over(&tower, Place::Real).total_degree(), tower.degree());
        }

        #[test]
        fn trivial_tower_matches_base(phi in prop::collection::vec(small(), 1..7)) {
            let phi = f(&phi);
            prop_assert_eq!(witt_index_over(&phi, &ExtensionTower::rationals()), witt_index(&phi));
        }

        #[test]
        fn index_grows_in_towers(phi in prop::collection::vec(small(), 1..7), d1 in nonsquare(), d2 in nonsquare()) {
            let phi = f(&phi);
            let tower = make_tower(&[d1, d2]).unwrap().tower;
            let sub = ExtensionTower::quadratic(tower.generators()[0]).unwrap();
            prop_assert!(witt_index_over(&phi, &tower) >= witt_index_over(&phi, &sub));
            prop_assert!(witt_index_over(&phi, &sub) >= witt_index(&phi));
        }
    }
}
