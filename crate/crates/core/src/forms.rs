//! Diagonal quadratic forms over `Q`: invariants, Hasse-Minkowski isotropy,
//! Witt decomposition, isometry, Pfister forms and similarity factors.
//!
//! Every decision is made from local invariants. Over a number field `F`
//! the anisotropic part of a form is anisotropic at some completion, so
//! `dim (phi_F)_an` is the maximum of the local anisotropic dimensions over
//! all places of `F`. Only finitely many places are inspected: the real
//! place, 2, and primes dividing an entry or an adjoined square root. Away
//! from those, the local class is unramified (unit discriminant, trivial
//! Hasse invariant) and its anisotropic dimension is at most 2, reaching 2
//! only when the discriminant is not a square there. That last case is
//! covered globally: an even-dimensional form whose discriminant is not a
//! square in `F` cannot be hyperbolic.

use std::collections::BTreeSet;
use std::fmt;
use std::sync::atomic::{AtomicU64, Ordering};

use serde::Serialize;

use crate::arith::{prime_support, squarefree_rep, Rat, SquareClass};
use crate::error::{Error, Result};
use crate::local::{
    hasse_after_stripping, local_aniso_dim, signed_disc, split_hasse, LocalField, LocalFormClass, Place,
};

/// A diagonal quadratic form `<a_1, ..., a_n>` with square-free entries.
///
/// The zero-dimensional form is allowed as the empty orthogonal sum.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Default, Serialize)]
#[serde(transparent)]
pub struct QForm {
    entries: Vec<SquareClass>,
}

impl QForm {
    pub fn new(entries: Vec<SquareClass>) -> Self {
        QForm { entries }
    }

    pub fn from_ints(values: &[i64]) -> Result<Self> {
        values
            .iter()
            .map(|&v| SquareClass::of_int(v))
            .collect::<Result<Vec<_>>>()
            .map(QForm::new)
    }

    pub fn empty() -> Self {
        QForm::default()
    }

    /// The hyperbolic plane `<1, -1>`.
    pub fn hyperbolic_plane() -> Self {
        QForm::new(vec![SquareClass::ONE, SquareClass::MINUS_ONE])
    }

    pub fn dim(&self) -> usize {
        self.entries.len()
    }

    pub fn entries(&self) -> &[SquareClass] {
        &self.entries
    }

    pub fn ints(&self) -> Vec<i64> {
        self.entries.iter().map(|s| s.value()).collect()
    }
}

impl fmt::Display for QForm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.entries.iter().map(|e| e.to_string()).collect();
        write!(f, "<{}>", parts.join(","))
    }
}

pub fn disc(phi: &QForm) -> SquareClass {
    signed_disc(&phi.entries)
}

pub fn signature(phi: &QForm) -> i64 {
    phi.entries.iter().map(|a| if a.is_negative() { -1 } else { 1 }).sum()
}

/// `prod_{i<j} (a_i, a_j)_v`.
pub fn hasse_invariant(phi: &QForm, place: Place) -> i8 {
    LocalFormClass::of_entries(&phi.entries, &LocalField::base(place)).hasse
}

/// The real place, 2, and every prime dividing an entry or an extra class.
pub fn relevant_places(phi: &QForm, extra: &[SquareClass]) -> Vec<Place> {
    let mut items = phi.entries.clone();
    items.extend_from_slice(extra);
    let mut out = vec![Place::Real];
    out.extend(prime_support(&items).into_iter().map(Place::Prime));
    out
}

/// Local verdict at one completion type above a place of `Q`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct LocalRecord {
    pub place: Place,
    pub completion: LocalField,
    pub multiplicity: u32,
    pub aniso_dim: usize,
}

/// Local-global analysis of a form over `Q(sqrt g : g in generators)`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Analysis {
    pub dim: usize,
    pub records: Vec<LocalRecord>,
    /// Lower bound forced by parity and by the discriminant not being a
    /// global square.
    pub global_bound: usize,
    pub aniso_dim: usize,
}

impl Analysis {
    pub fn witt_index(&self) -> usize {
        (self.dim - self.aniso_dim) / 2
    }

    /// A completion at which the whole form is anisotropic.
    pub fn obstruction(&self) -> Option<&LocalRecord> {
        self.records.iter().find(|r| r.dim_matches(self.dim))
    }
}

impl LocalRecord {
    fn dim_matches(&self, dim: usize) -> bool {
        dim > 0 && self.aniso_dim == dim
    }
}

/// Span of the given classes in `Q^x / Q^x^2`.
pub(crate) fn class_span(generators: &[SquareClass]) -> Vec<SquareClass> {
    let mut span = vec![SquareClass::ONE];
    for &g in generators {
        if !span.contains(&g) {
            let shifted: Vec<_> = span.iter().map(|&s| s * g).collect();
            span.extend(shifted);
        }
    }
    span
}

/// Runs the local-global analysis of `phi` over the multiquadratic field
/// generated by `generators` (empty for `Q`).
pub fn analyze(phi: &QForm, generators: &[SquareClass], degree: u32) -> Analysis {
    let dim = phi.dim();
    let mut records = Vec::new();
    for place in relevant_places(phi, generators) {
        let completion = LocalField::completion(place, generators);
        let class = LocalFormClass::of_entries(&phi.entries, &completion);
        let aniso = local_aniso_dim(&class, &completion).expect("classes built from entries are consistent");
        records.push(LocalRecord {
            place,
            multiplicity: degree / completion.degree(),
            completion,
            aniso_dim: aniso,
        });
    }
    let global_bound = if dim % 2 == 1 {
        1
    } else if dim > 0 && !class_span(generators).contains(&disc(phi)) {
        2
    } else {
        0
    };
    let aniso_dim = records.iter().map(|r| r.aniso_dim).max().unwrap_or(0).max(global_bound);
    Analysis {
        dim,
        records,
        global_bound,
        aniso_dim,
    }
}

static AP_CHECKED: AtomicU64 = AtomicU64::new(0);
static AP_VIOLATIONS: AtomicU64 = AtomicU64::new(0);

/// `(forms checked, violations)` of the Arason-Pfister bound: a form in
/// `I^4` has anisotropic dimension 0 or at least 16.
pub fn arason_pfister_counters() -> (u64, u64) {
    (
        AP_CHECKED.load(Ordering::Relaxed),
        AP_VIOLATIONS.load(Ordering::Relaxed),
    )
}

fn arason_pfister_check(phi: &QForm, aniso_dim: usize) {
    if phi.dim() % 2 == 1 || !disc(phi).is_one() || !in_in(phi, 4) {
        return;
    }
    record_arason_pfister(aniso_dim, phi);
}

/// Records the anisotropic dimension of a form known to lie in `I^4` of its
/// base field.
pub(crate) fn record_arason_pfister(aniso_dim: usize, what: &dyn fmt::Display) {
    AP_CHECKED.fetch_add(1, Ordering::Relaxed);
    if aniso_dim != 0 && aniso_dim < 16 {
        AP_VIOLATIONS.fetch_add(1, Ordering::Relaxed);
        debug_assert!(false, "{what} lies in I^4 but has anisotropic dimension {aniso_dim}");
    }
}

fn analyze_q(phi: &QForm) -> Analysis {
    let analysis = analyze(phi, &[], 1);
    arason_pfister_check(phi, analysis.aniso_dim);
    analysis
}

/// Hasse-Minkowski: isotropic iff isotropic at every place.
pub fn is_isotropic(phi: &QForm) -> bool {
    phi.dim() >= 2 && analyze_q(phi).witt_index() > 0
}

/// A place of `Q` at which `phi` is anisotropic, if any.
pub fn anisotropic_place(phi: &QForm) -> Option<Place> {
    analyze_q(phi).obstruction().map(|r| r.place)
}

/// Complete invariants of a Witt class over `Q`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct WittClassQ {
    pub dim_parity: u8,
    pub disc: SquareClass,
    /// Places where the anisotropic representative has Hasse invariant -1.
    pub hasse_minus_places: BTreeSet<Place>,
    pub signature: i64,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct WittDecomposition {
    pub witt_index: usize,
    pub aniso_dim: usize,
    pub aniso_class: WittClassQ,
}

/// `phi = phi_an + i(phi) H`, computed from invariants only.
pub fn witt_decompose(phi: &QForm) -> WittDecomposition {
    let analysis = analyze_q(phi);
    let aniso_dim = analysis.aniso_dim;
    let hasse_minus_places = relevant_places(phi, &[])
        .into_iter()
        .filter(|&place| {
            let field = LocalField::base(place);
            let class = LocalFormClass::of_entries(&phi.entries, &field);
            hasse_after_stripping(&class, aniso_dim, &field) == -1
        })
        .collect();
    WittDecomposition {
        witt_index: analysis.witt_index(),
        aniso_dim,
        aniso_class: WittClassQ {
            dim_parity: (phi.dim() % 2) as u8,
            disc: disc(phi),
            hasse_minus_places,
            signature: signature(phi),
        },
    }
}

pub fn witt_index(phi: &QForm) -> usize {
    analyze_q(phi).witt_index()
}

pub fn is_hyperbolic(phi: &QForm) -> bool {
    phi.dim().is_multiple_of(2) && analyze_q(phi).aniso_dim == 0
}

/// Isometry by the complete invariant set over `Q`.
pub fn is_isometric(phi: &QForm, psi: &QForm) -> bool {
    if phi.dim() != psi.dim() || disc(phi) != disc(psi) || signature(phi) != signature(psi) {
        return false;
    }
    let mut joint = phi.entries.clone();
    joint.extend_from_slice(&psi.entries);
    relevant_places(&QForm::new(joint), &[])
        .into_iter()
        .all(|v| hasse_invariant(phi, v) == hasse_invariant(psi, v))
}

/// Same Witt class: `phi - psi` is hyperbolic.
pub fn witt_equivalent(phi: &QForm, psi: &QForm) -> bool {
    is_hyperbolic(&orth_sum(phi, &scale(SquareClass::MINUS_ONE, psi)))
}

/// `<<a_1, ..., a_n>> = <1, -a_1> (x) ... (x) <1, -a_n>`; entry `k` is
/// `prod_{i in bits(k)} (-a_i)`.
pub fn pfister(slots: &[SquareClass]) -> Result<QForm> {
    if slots.len() > 4 {
        return Err(Error::domain(format!(
            "{}-fold Pfister forms are not supported",
            slots.len()
        )));
    }
    Ok(pfister_unchecked(slots))
}

pub(crate) fn pfister_unchecked(slots: &[SquareClass]) -> QForm {
    slots.iter().fold(QForm::new(vec![SquareClass::ONE]), |acc, &a| {
        tensor(&acc, &QForm::new(vec![SquareClass::ONE, -a]))
    })
}

/// Entries `phi_i * psi_j`, with `i` running fastest.
pub fn tensor(phi: &QForm, psi: &QForm) -> QForm {
    QForm::new(
        psi.entries
            .iter()
            .flat_map(|&b| phi.entries.iter().map(move |&a| a * b))
            .collect(),
    )
}

pub fn orth_sum(phi: &QForm, psi: &QForm) -> QForm {
    let mut entries = phi.entries.clone();
    entries.extend_from_slice(&psi.entries);
    QForm::new(entries)
}

pub fn scale(c: SquareClass, phi: &QForm) -> QForm {
    QForm::new(phi.entries.iter().map(|&a| a * c).collect())
}

/// Whether `phi` represents `c`: `phi + <-c>` is isotropic.
pub fn represents(phi: &QForm, c: &Rat) -> Result<bool> {
    let c = squarefree_rep(c)?;
    if phi.dim() == 0 {
        return Ok(false);
    }
    Ok(is_isotropic(&orth_sum(phi, &QForm::new(vec![-c]))))
}

/// `c` is a similarity factor of `phi`: `<<c>> (x) phi` is hyperbolic.
pub fn in_g(phi: &QForm, c: &Rat) -> Result<bool> {
    let c = squarefree_rep(c)?;
    Ok(is_hyperbolic(&tensor(&pfister_unchecked(&[c]), phi)))
}

/// Second route to [`in_g`]: `c phi` is isometric to `phi`.
pub fn in_g_by_isometry(phi: &QForm, c: &Rat) -> Result<bool> {
    let c = squarefree_rep(c)?;
    Ok(is_isometric(&scale(c, phi), phi))
}

/// Membership of the Witt class in `I^n Q`, `1 <= n <= 4`.
///
/// Over `Q`, a class in `I^2` lies in `I^3` iff its Clifford invariant is
/// trivial at every finite place and its signature is divisible by 8; `I^3`
/// is torsion free, so `I^4` is detected by signature divisibility by 16.
pub fn in_in(phi: &QForm, n: u32) -> bool {
    let dim = phi.dim();
    if n == 0 {
        return true;
    }
    if dim % 2 == 1 {
        return false;
    }
    if n == 1 {
        return true;
    }
    if !disc(phi).is_one() {
        return false;
    }
    if n == 2 {
        return true;
    }
    let finite_split = relevant_places(phi, &[])
        .into_iter()
        .filter(|&v| v != Place::Real)
        .all(|v| {
            let field = LocalField::base(v);
            hasse_invariant(phi, v) == split_hasse(dim, &field)
        });
    // I^3 of Q is torsion-free and detected by the signature, so I^n = 2^(n-3) I^3.
    let sig = signature(phi).unsigned_abs();
    finite_split && (n >= 64 && sig == 0 || n < 64 && sig.is_multiple_of(1u64 << n))
}
