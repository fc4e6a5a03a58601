//! Local square classes, Hilbert symbols and anisotropic dimensions over the
//! completions of `Q` and of its multiquadratic extensions.
//!
//! A completion is never modelled element by element. It is described by its
//! base place `v` of `Q` together with the subgroup `V` of `Q_v^x / Q_v^x^2`
//! spanned by the square roots adjoined to it (Kummer theory: the completion
//! is `Q_v(sqrt V)`). Rational elements are interpreted through their
//! coordinates in the `F_2`-vector space `Q_v^x / Q_v^x^2`:
//!
//! * real place: one bit, the sign;
//! * odd `p`: two bits, valuation parity and unit residue character;
//! * `p = 2`: three bits, valuation parity, the `-1` and the `5` unit
//!   components.
//!
//! A rational is a square in the completion iff its coordinates lie in `V`.

use std::fmt;
use std::sync::OnceLock;

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{Signed, ToPrimitive, Zero};
use serde::{Serialize, Serializer};

use crate::arith::{is_prime, legendre, Rat, SquareClass};
use crate::error::{Error, Result};

/// A place of `Q`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Place {
    Real,
    Prime(u64),
}

impl Place {
    pub fn prime(p: u64) -> Result<Place> {
        if is_prime(p) {
            Ok(Place::Prime(p))
        } else {
            Err(Error::NotPrime(p))
        }
    }

    pub fn is_dyadic(self) -> bool {
        self == Place::Prime(2)
    }

    /// Dimension of `Q_v^x / Q_v^x^2` over `F_2`.
    fn class_rank(self) -> u32 {
        match self {
            Place::Real => 1,
            Place::Prime(2) => 3,
            Place::Prime(_) => 2,
        }
    }

    /// Coordinates of the class that generates the unramified quadratic
    /// extension.
    fn unramified_bits(self) -> u8 {
        match self {
            Place::Real => 0,
            Place::Prime(2) => 0b100,
            Place::Prime(_) => 0b10,
        }
    }
}

impl fmt::Display for Place {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Place::Real => write!(f, "real"),
            Place::Prime(p) => write!(f, "{p}"),
        }
    }
}

impl Serialize for Place {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

/// Coordinates of a square-free integer in `Q_v^x / Q_v^x^2`.
pub(crate) fn base_bits(a: SquareClass, place: Place) -> u8 {
    let a = a.value();
    match place {
        Place::Real => u8::from(a < 0),
        Place::Prime(2) => {
            let even = a % 2 == 0;
            let u = if even { a / 2 } else { a };
            dyadic_unit_bits(u.rem_euclid(8) as u8) | u8::from(even)
        }
        Place::Prime(p) => {
            let divisible = a.unsigned_abs().is_multiple_of(p);
            let u = if divisible { a / p as i64 } else { a };
            u8::from(divisible) | (u8::from(legendre(u, p) < 0) << 1)
        }
    }
}

fn dyadic_unit_bits(u_mod_8: u8) -> u8 {
    match u_mod_8 {
        1 => 0b000,
        7 => 0b010,
        5 => 0b100,
        3 => 0b110,
        _ => unreachable!("even residue {u_mod_8} passed as a 2-adic unit"),
    }
}

/// Coordinates of an arbitrary nonzero rational.
pub(crate) fn base_bits_rat(r: &Rat, place: Place) -> Result<u8> {
    if r.is_zero() {
        return Err(Error::domain("zero has no local square class"));
    }
    // n/d and n*d differ by a square.
    let mut n: BigInt = r.numer() * r.denom();
    match place {
        Place::Real => Ok(u8::from(n.is_negative())),
        Place::Prime(p) => {
            let bp = BigInt::from(p);
            let mut parity = 0u8;
            loop {
                let (q, rem) = n.div_rem(&bp);
                if !rem.is_zero() {
                    break;
                }
                n = q;
                parity ^= 1;
            }
            let modulus = if p == 2 { 8 } else { p };
            let u = n.mod_floor(&BigInt::from(modulus)).to_u64().expect("residue fits");
            let unit = if p == 2 {
                dyadic_unit_bits(u as u8)
            } else {
                u8::from(legendre(u as i64, p) < 0) << 1
            };
            Ok(parity | unit)
        }
    }
}

fn least_nonresidue(p: u64) -> i64 {
    (2..p as i64)
        .find(|&n| legendre(n, p) < 0)
        .expect("odd prime has a non-residue")
}

/// Representative integer of the class with the given coordinates.
fn bits_to_rep(bits: u8, place: Place) -> i64 {
    match place {
        Place::Real => {
            if bits & 1 == 1 {
                -1
            } else {
                1
            }
        }
        Place::Prime(2) => {
            let mut r = 1;
            if bits & 1 == 1 {
                r *= 2;
            }
            if bits & 0b010 != 0 {
                r = -r;
            }
            if bits & 0b100 != 0 {
                r *= 5;
            }
            r
        }
        Place::Prime(p) => {
            let mut r = 1;
            if bits & 1 == 1 {
                r *= p as i64;
            }
            if bits & 0b10 != 0 {
                r *= least_nonresidue(p);
            }
            r
        }
    }
}

// Reduces `v` against an echelon basis (distinct leading bits, descending).
fn reduce(mut v: u8, basis: &[u8]) -> u8 {
    for &b in basis {
        let lead = 7 - b.leading_zeros() as u8;
        if v >> lead & 1 == 1 {
            v ^= b;
        }
    }
    v
}

/// A completion of a multiquadratic extension of `Q`, described by its base
/// place and the square classes adjoined to `Q_v`.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct LocalField {
    base: Place,
    /// Global generators whose local classes are independent.
    generators: Vec<SquareClass>,
    basis: Vec<u8>,
    ramification: u32,
    residue_degree: u32,
}

impl LocalField {
    /// `Q_v` itself (or `R`).
    pub fn base(place: Place) -> Self {
        LocalField {
            base: place,
            generators: Vec::new(),
            basis: Vec::new(),
            ramification: 1,
            residue_degree: 1,
        }
    }

    /// `Q_v(sqrt d : d in generators)`; generators that are locally squares or
    /// locally dependent on earlier ones are dropped.
    pub fn completion(place: Place, generators: &[SquareClass]) -> Self {
        let mut field = LocalField::base(place);
        for &d in generators {
            let v = reduce(base_bits(d, place), &field.basis);
            if v != 0 {
                field.basis.push(v);
                field.basis.sort_unstable_by(|a, b| b.cmp(a));
                field.generators.push(d);
            }
        }
        let degree = 1u32 << field.basis.len();
        if place == Place::Real {
            // C over R: counted as ramified of index 2
            field.ramification = degree;
            field.residue_degree = 1;
        } else {
            let unramified = reduce(place.unramified_bits(), &field.basis) == 0;
            field.residue_degree = if unramified { 2 } else { 1 };
            field.ramification = degree / field.residue_degree;
        }
        field
    }

    pub fn place(&self) -> Place {
        self.base
    }

    pub fn generators(&self) -> &[SquareClass] {
        &self.generators
    }

    pub fn degree(&self) -> u32 {
        1 << self.basis.len()
    }

    pub fn ramification_index(&self) -> u32 {
        self.ramification
    }

    pub fn residue_degree(&self) -> u32 {
        self.residue_degree
    }

    pub fn is_real(&self) -> bool {
        self.base == Place::Real && self.basis.is_empty()
    }

    pub fn is_complex(&self) -> bool {
        self.base == Place::Real && !self.basis.is_empty()
    }

    pub fn residue_characteristic(&self) -> Option<u64> {
        match self.base {
            Place::Real => None,
            Place::Prime(p) => Some(p),
        }
    }

    /// Number of square classes of `Q_v` that stay distinct in this field.
    pub fn rational_class_count(&self) -> u32 {
        1 << (self.base.class_rank() - self.basis.len() as u32)
    }

    pub fn is_square(&self, a: SquareClass) -> bool {
        reduce(base_bits(a, self.base), &self.basis) == 0
    }

    /// Short human-readable description, e.g. `Q_5(sqrt 5)`.
    pub fn describe(&self) -> String {
        let base = match self.base {
            Place::Real if self.is_complex() => return "C".to_string(),
            Place::Real => return "R".to_string(),
            Place::Prime(p) => format!("Q_{p}"),
        };
        if self.generators.is_empty() {
            base
        } else {
            let gens: Vec<String> = self.generators.iter().map(|g| format!("sqrt {g}")).collect();
            format!("{base}({})", gens.join(", "))
        }
    }
}

impl Serialize for LocalField {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        use serde::ser::SerializeStruct;
        let mut st = s.serialize_struct("LocalField", 5)?;
        st.serialize_field("field", &self.describe())?;
        st.serialize_field("place", &self.base)?;
        st.serialize_field("generators", &self.generators)?;
        st.serialize_field("e", &self.ramification)?;
        st.serialize_field("f", &self.residue_degree)?;
        st.end()
    }
}

/// The class of a rational in `E^x / E^x^2`, restricted to the image of `Q`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct LocalSquareClass {
    bits: u8,
    representative: i64,
}

impl LocalSquareClass {
    pub fn is_trivial(self) -> bool {
        self.bits == 0
    }

    /// Canonical integer representative of the coset.
    pub fn representative(self) -> i64 {
        self.representative
    }
}

/// Square class of `a` in `E`. The representative is canonical: two
/// rationals get the same representative iff their ratio is a square in `E`.
pub fn local_square_class(a: &Rat, field: &LocalField) -> Result<LocalSquareClass> {
    let bits = reduce(base_bits_rat(a, field.base)?, &field.basis);
    Ok(LocalSquareClass {
        bits,
        representative: bits_to_rep(bits, field.base),
    })
}

/// Hilbert symbol over `Q_v` from class coordinates.
fn base_hilbert(a: u8, b: u8, place: Place) -> i8 {
    match place {
        Place::Real => {
            if a & b & 1 == 1 {
                -1
            } else {
                1
            }
        }
        Place::Prime(2) => dyadic_table()[a as usize][b as usize],
        Place::Prime(p) => {
            let (alpha, ua) = (a & 1, a >> 1 & 1);
            let (beta, ub) = (b & 1, b >> 1 & 1);
            let eps = (((p - 1) / 2) & 1) as u8;
            let exponent = (alpha & beta & eps) ^ (beta & ua) ^ (alpha & ub);
            if exponent == 1 {
                -1
            } else {
                1
            }
        }
    }
}

/// Precision of the dyadic representability search, `2^(2e+3)` with `e = 1`.
const DYADIC_SEARCH_MODULUS: i64 = 32;

// Exhaustive primitive-solution search for x^2 - a y^2 - b z^2 = 0 modulo 32,
// where a and b have 2-adic valuation at most 1. A primitive solution modulo
// 2^5 lifts by Hensel's lemma (the partial derivative in a unit coordinate has
// valuation at most 2).
fn dyadic_isotropic_search(a: i64, b: i64) -> bool {
    let m = DYADIC_SEARCH_MODULUS;
    (0..m).any(|x| {
        (0..m).any(|y| {
            (0..m)
                .any(|z| (x % 2 == 1 || y % 2 == 1 || z % 2 == 1) && (x * x - a * y * y - b * z * z).rem_euclid(m) == 0)
        })
    })
}

fn dyadic_table() -> &'static [[i8; 8]; 8] {
    static TABLE: OnceLock<[[i8; 8]; 8]> = OnceLock::new();
    TABLE.get_or_init(|| {
        let mut table = [[0i8; 8]; 8];
        for a in 0..8u8 {
            for b in 0..8u8 {
                let ra = bits_to_rep(a, Place::Prime(2));
                let rb = bits_to_rep(b, Place::Prime(2));
                table[a as usize][b as usize] = if dyadic_isotropic_search(ra, rb) { 1 } else { -1 };
            }
        }
        table
    })
}

/// Hilbert symbol `(a, b)_E` of two square-free integers.
///
/// Over `Q_v` this is the tame formula (odd `p`), the sign rule (real) or the
/// bounded dyadic search. Over a proper extension `E = Q_v(sqrt d, ...)` the
/// quaternion algebra `(a, b)` splits iff it does so over `Q_v` or the
/// quadratic subfield `Q_v(sqrt d)` embeds in it, i.e. iff
/// `<a, b, -ab, -d>` is isotropic over `Q_v`.
pub fn hilbert_symbol_sq(a: SquareClass, b: SquareClass, field: &LocalField) -> i8 {
    let place = field.base;
    let base = base_hilbert(base_bits(a, place), base_bits(b, place), place);
    if base == 1 || field.generators.is_empty() {
        return base;
    }
    let d = field.generators[0];
    let embed = [a, b, -(a * b), -d];
    let class = LocalFormClass::of_entries(&embed, &LocalField::base(place));
    let aniso = local_aniso_dim(&class, &LocalField::base(place)).expect("consistent class");
    if aniso < 4 {
        1
    } else {
        -1
    }
}

/// Hilbert symbol `(a, b)_E` of nonzero rationals: `+1` iff `<1, -a, -b>` is
/// isotropic over `E`.
pub fn hilbert_symbol(a: &Rat, b: &Rat, field: &LocalField) -> Result<i8> {
    let place = field.base;
    let ca = bits_to_rep(base_bits_rat(a, place)?, place);
    let cb = bits_to_rep(base_bits_rat(b, place)?, place);
    Ok(hilbert_symbol_sq(
        SquareClass::of_int(ca)?,
        SquareClass::of_int(cb)?,
        field,
    ))
}

/// Local invariants of a quadratic form over a completion.
///
/// `disc` is a global representative of the signed discriminant, read in `E`.
/// `hasse` is `prod_{i<j} (a_i, a_j)_E`. `signature` is present exactly when
/// `E` is real.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct LocalFormClass {
    pub dim: usize,
    pub disc: SquareClass,
    pub hasse: i8,
    pub signature: Option<i64>,
}

/// Signed discriminant `(-1)^(n(n-1)/2) * prod a_i`.
pub(crate) fn signed_disc(entries: &[SquareClass]) -> SquareClass {
    let n = entries.len();
    let mut d = entries.iter().fold(SquareClass::ONE, |acc, &a| acc * a);
    if (n * n.saturating_sub(1) / 2) % 2 == 1 {
        d = -d;
    }
    d
}

fn sign_pow(s: i8, exp: usize) -> i8 {
    if s == -1 && exp % 2 == 1 {
        -1
    } else {
        1
    }
}

impl LocalFormClass {
    pub fn of_entries(entries: &[SquareClass], field: &LocalField) -> Self {
        // Symbols over E depend only on Q_v-coordinates, so group entries.
        let mut counts: Vec<(SquareClass, u8, usize)> = Vec::new();
        for &a in entries {
            let bits = base_bits(a, field.base);
            match counts.iter_mut().find(|(_, b, _)| *b == bits) {
                Some((_, _, n)) => *n += 1,
                None => counts.push((a, bits, 1)),
            }
        }
        let mut hasse = 1i8;
        for (i, &(a, _, na)) in counts.iter().enumerate() {
            hasse *= sign_pow(hilbert_symbol_sq(a, a, field), na * na.saturating_sub(1) / 2);
            for &(b, _, nb) in &counts[i + 1..] {
                hasse *= sign_pow(hilbert_symbol_sq(a, b, field), na * nb);
            }
        }
        let signature = field.is_real().then(|| {
            entries
                .iter()
                .map(|a| if a.is_negative() { -1 } else { 1 })
                .sum::<i64>()
        });
        LocalFormClass {
            dim: entries.len(),
            disc: signed_disc(entries),
            hasse,
            signature,
        }
    }
}

/// Hasse invariant of the hyperbolic form of dimension `dim` (even) over `E`.
pub fn split_hasse(dim: usize, field: &LocalField) -> i8 {
    let m = dim / 2;
    let minus = SquareClass::MINUS_ONE;
    sign_pow(hilbert_symbol_sq(minus, minus, field), m * m.saturating_sub(1) / 2)
}

/// Invariants after splitting off one hyperbolic plane:
/// `phi = phi' + H` gives `d(phi') = -d(phi)` and
/// `hasse(phi') = hasse(phi) * (-d(phi), -1)`, with `d` the plain determinant.
pub(crate) fn strip_hyperbolic_plane(
    dim: usize,
    det: SquareClass,
    hasse: i8,
    field: &LocalField,
) -> (usize, SquareClass, i8) {
    let hasse = hasse * hilbert_symbol_sq(-det, SquareClass::MINUS_ONE, field);
    (dim - 2, -det, hasse)
}

fn det_from_disc(dim: usize, disc: SquareClass) -> SquareClass {
    if (dim * dim.saturating_sub(1) / 2) % 2 == 1 {
        -disc
    } else {
        disc
    }
}

/// Hasse invariant of the anisotropic part of a class with the given
/// invariants, after stripping `(dim - target_dim) / 2` hyperbolic planes.
pub(crate) fn hasse_after_stripping(class: &LocalFormClass, target_dim: usize, field: &LocalField) -> i8 {
    let (mut n, mut det, mut hasse) = (class.dim, det_from_disc(class.dim, class.disc), class.hasse);
    while n > target_dim {
        (n, det, hasse) = strip_hyperbolic_plane(n, det, hasse, field);
    }
    hasse
}

/// Dimension of the anisotropic kernel of any form with the invariants
/// `class` over `E`.
pub fn local_aniso_dim(class: &LocalFormClass, field: &LocalField) -> Result<usize> {
    if class.hasse != 1 && class.hasse != -1 {
        return Err(Error::domain(format!("hasse invariant {} is not +-1", class.hasse)));
    }
    if field.is_complex() {
        return Ok(class.dim % 2);
    }
    if field.is_real() {
        let sig = class
            .signature
            .ok_or_else(|| Error::domain("real class without signature"))?;
        let dim = class.dim as i64;
        if sig.abs() > dim || (dim - sig) % 2 != 0 {
            return Err(Error::domain(format!("signature {sig} impossible in dimension {dim}")));
        }
        let neg = ((dim - sig) / 2) as usize;
        let disc_negative = (class.dim * class.dim.saturating_sub(1) / 2 + neg) % 2 == 1;
        if class.disc.is_negative() != disc_negative || class.hasse != sign_pow(-1, neg * neg.saturating_sub(1) / 2) {
            return Err(Error::domain("real invariants disagree with the signature"));
        }
        return Ok(sig.unsigned_abs() as usize);
    }
    if class.dim <= 1 && class.hasse != 1 {
        return Err(Error::domain("forms of dimension <= 1 have trivial hasse invariant"));
    }
    let minus = SquareClass::MINUS_ONE;
    let (mut n, mut det, mut hasse) = (class.dim, det_from_disc(class.dim, class.disc), class.hasse);
    loop {
        let isotropic = match n {
            0 => return Ok(0),
            1 => return Ok(1),
            2 => field.is_square(-det),
            3 => hilbert_symbol_sq(minus, -det, field) == hasse,
            4 => !(field.is_square(det) && hasse == -hilbert_symbol_sq(minus, minus, field)),
            _ => true,
        };
        if !isotropic {
            return Ok(n);
        }
        (n, det, hasse) = strip_hyperbolic_plane(n, det, hasse, field);
    }
}

/// Squareness test in a dyadic completion.
///
/// The 2-adic class of `a` is found by residue search: a 2-adic unit `u` is a
/// square iff `x^2 = u (mod 2^(2e+1))` is solvable, here modulo 8. The class is
/// then compared against the adjoined square roots.
pub fn dyadic_square_test(a: &Rat, field: &LocalField) -> Result<bool> {
    if field.residue_characteristic() != Some(2) {
        return Err(Error::domain(format!("{} is not dyadic", field.describe())));
    }
    if a.is_zero() {
        return Err(Error::domain("squareness of zero"));
    }
    let mut n: BigInt = a.numer() * a.denom();
    let two = BigInt::from(2);
    let mut parity = 0u8;
    while (&n % &two).is_zero() {
        n /= &two;
        parity ^= 1;
    }
    let u = n.mod_floor(&BigInt::from(8)).to_i64().expect("residue fits");
    let solvable = |c: i64| (1..8).step_by(2).any(|x: i64| (x * x - c * u).rem_euclid(8) == 0);
    let unit_bits = [1i64, -1, 5, -5]
        .into_iter()
        .zip([0b000u8, 0b010, 0b100, 0b110])
        .find(|&(c, _)| solvable(c))
        .map(|(_, bits)| bits)
        .expect("every odd residue lies in one class");
    Ok(reduce(parity | unit_bits, &field.basis) == 0)
}
