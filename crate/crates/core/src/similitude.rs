//! Certificates that similitude multipliers lie in `K^x^2 * Hyp`, the
//! decomposition of `<<a, b>> (x) phi_4` into scaled Pfister forms, and the
//! hypothesis pipeline for degree-12 algebras with trivial discriminant.
//!
//! Searches are sequential and deterministic: the first candidate in search
//! order wins, so identical inputs give identical certificates.

use std::collections::BTreeSet;

use num_rational::BigRational;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::arith::{factor_u64, prime_support, squarefree_rep, Rat, SquareClass};
use crate::error::{Error, Result};
use crate::extensions::{analysis_over, is_hyperbolic_over, make_tower, norm_member, witt_index_over, ExtensionTower};
use crate::forms::{
    disc, in_g, in_in, is_hyperbolic, orth_sum, pfister_unchecked, record_arason_pfister, represents, scale, signature,
    tensor, witt_equivalent, witt_index, QForm,
};
use crate::involutions::{InvolutionAlgebra, InvolutionDiscriminant, QuaternionAlg};
use crate::local::{hilbert_symbol_sq, split_hasse, LocalField, Place};

pub const CERT_SCHEMA: &str = "psim-hyp-certificate/1";
pub const REPORT_SCHEMA: &str = "psim-pipeline-report/1";

/// Candidates satisfy `|d| <= DEFAULT_BOUND`.
pub const DEFAULT_BOUND: u64 = 1_000_000;
/// Environment variable overriding [`DEFAULT_BOUND`].
pub const BOUND_ENV: &str = "PSIM_SEARCH_BOUND";
const MAX_PRIME_FACTORS: usize = 4;

/// The search bound from the environment, else [`DEFAULT_BOUND`].
pub fn default_bound() -> u64 {
    std::env::var(BOUND_ENV)
        .ok()
        .and_then(|v| v.trim().parse().ok())
        .unwrap_or(DEFAULT_BOUND)
}

/// One completion of the tower and the verdict on the form there.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Evidence {
    pub place: String,
    pub completion: String,
    pub local_verdict: String,
}

/// `multiplier * square_adjustment` (the input `c`) lies in
/// `Q^x^2 * N(M)`, and the form is hyperbolic over `M = tower`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct HypCertificate {
    pub schema: String,
    pub multiplier: SquareClass,
    pub tower: ExtensionTower,
    /// `s^2` with `c * s^2 = multiplier`.
    pub square_adjustment: Rat,
    pub evidence: Vec<Evidence>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
#[serde(tag = "result", rename_all = "kebab-case")]
pub enum SearchOutcome {
    Found { certificate: HypCertificate },
    NotFoundWithinBounds { bound: u64 },
}

impl SearchOutcome {
    pub fn certificate(&self) -> Option<&HypCertificate> {
        match self {
            SearchOutcome::Found { certificate } => Some(certificate),
            SearchOutcome::NotFoundWithinBounds { .. } => None,
        }
    }
}

/// Calls `accept` on square-free `d != 1` with at most four prime factors and
/// `|d| <= bound`, returning the first accepted candidate.
///
/// Candidates built only from `support` come first, then those using other
/// primes; within each tier by `|d|`, positive before negative.
fn search(support: &BTreeSet<u64>, bound: u64, mut accept: impl FnMut(SquareClass) -> bool) -> Option<SquareClass> {
    let bound = bound.min(i64::MAX as u64);
    let try_both = |n: u64, accept: &mut dyn FnMut(SquareClass) -> bool| -> Option<SquareClass> {
        let d = SquareClass::from_squarefree(n as i64).expect("square-free by construction");
        if n > 1 && accept(d) {
            return Some(d);
        }
        accept(-d).then_some(-d)
    };

    let primes: Vec<u64> = support.iter().copied().collect();
    let mut smooth = if bound >= 1 { vec![1u64] } else { Vec::new() };
    for &p in &primes {
        let extended: Vec<u64> = smooth
            .iter()
            .filter(|&&n| factor_u64(n).len() < MAX_PRIME_FACTORS)
            .filter_map(|&n| n.checked_mul(p).filter(|&m| m <= bound))
            .collect();
        smooth.extend(extended);
    }
    smooth.sort_unstable();
    for &n in &smooth {
        if let Some(d) = try_both(n, &mut accept) {
            return Some(d);
        }
    }

    for n in 2..=bound {
        let factors = factor_u64(n);
        if factors.len() > MAX_PRIME_FACTORS
            || factors.iter().any(|&(_, e)| e > 1)
            || factors.iter().all(|(p, _)| support.contains(p))
        {
            continue;
        }
        if let Some(d) = try_both(n, &mut accept) {
            return Some(d);
        }
    }
    None
}

fn support_of(phi: &QForm, extra: &[SquareClass]) -> BTreeSet<u64> {
    let mut items = phi.entries().to_vec();
    items.extend_from_slice(extra);
    prime_support(&items)
}

/// A quadratic `L = Q(sqrt d)` with `i(phi_L) > i(phi)` and `a` a norm from
/// `L`, or `None` if no candidate within `bound` qualifies.
pub fn lemma_beta_search(phi: &QForm, a: &Rat, bound: u64) -> Result<Option<SquareClass>> {
    let a = squarefree_rep(a)?;
    if is_hyperbolic(phi) {
        return Err(Error::precondition(
            "phi-not-hyperbolic",
            format!("{phi} is hyperbolic"),
        ));
    }
    if !in_g(phi, &a.into())? {
        return Err(Error::precondition(
            "a-in-G",
            format!("{a} is not a similarity factor of {phi}"),
        ));
    }
    let base = witt_index(phi);
    let a_rat: Rat = a.into();
    Ok(search(&support_of(phi, &[a]), bound, |d| {
        norm_member(&a_rat, d).expect("d is nontrivial")
            && witt_index_over(phi, &ExtensionTower::quadratic(d).expect("d is nontrivial")) > base
    }))
}

fn evidence(phi: &QForm, tower: &ExtensionTower) -> Vec<Evidence> {
    analysis_over(phi, tower)
        .records
        .iter()
        .map(|r| Evidence {
            place: r.place.to_string(),
            completion: r.completion.describe(),
            local_verdict: match r.aniso_dim {
                0 => "hyperbolic".to_string(),
                k => format!("anisotropic part of dimension {k}"),
            },
        })
        .collect()
}

fn certificate(phi: &QForm, multiplier: SquareClass, adjustment: &Rat, tower: ExtensionTower) -> SearchOutcome {
    SearchOutcome::Found {
        certificate: HypCertificate {
            schema: CERT_SCHEMA.to_string(),
            multiplier,
            evidence: evidence(phi, &tower),
            tower,
            square_adjustment: adjustment.clone(),
        },
    }
}

/// Searches trivial, quadratic and biquadratic `M` with `phi_M` hyperbolic
/// and `c` in `Q^x^2 * N(M)`.
///
/// The quadratic step is [`lemma_beta_search`]; if `phi_L` is not yet
/// hyperbolic, a second generator `d'` is searched with `c` a norm from
/// `Q(sqrt d')` and `phi` hyperbolic over `Q(sqrt d, sqrt d')`.
pub fn hyperbolizing_certificate(phi: &QForm, c: &Rat, bound: u64) -> Result<SearchOutcome> {
    let c_sq = squarefree_rep(c)?;
    let adjustment = Rat::from_big(BigRational::from_integer(c_sq.value().into()) / c.inner());
    if phi.dim() % 2 == 1 {
        return Err(Error::precondition("phi-even-dim", format!("{phi} has odd dimension")));
    }
    if !in_g(phi, &c_sq.into())? {
        return Err(Error::precondition(
            "c-in-G",
            format!("{c} is not a similarity factor of {phi}"),
        ));
    }
    if is_hyperbolic(phi) {
        return Ok(certificate(phi, c_sq, &adjustment, ExtensionTower::rationals()));
    }
    let Some(d) = lemma_beta_search(phi, &c_sq.into(), bound)? else {
        return Ok(SearchOutcome::NotFoundWithinBounds { bound });
    };
    let quad = ExtensionTower::quadratic(d)?;
    if is_hyperbolic_over(phi, &quad) {
        return Ok(certificate(phi, c_sq, &adjustment, quad));
    }
    let c_rat: Rat = c_sq.into();
    let found = search(&support_of(phi, &[c_sq, d]), bound, |d2| {
        let build = make_tower(&[d, d2]).expect("two generators");
        !build.downgraded && norm_member(&c_rat, d2).expect("d2 is nontrivial") && is_hyperbolic_over(phi, &build.tower)
    });
    Ok(match found {
        Some(d2) => certificate(phi, c_sq, &adjustment, make_tower(&[d, d2])?.tower),
        None => SearchOutcome::NotFoundWithinBounds { bound },
    })
}

/// `pi` is a 2-fold Pfister form: 4-dimensional, trivial discriminant,
/// represents 1.
fn is_two_fold_pfister(pi: &QForm) -> bool {
    pi.dim() == 4 && disc(pi).is_one() && represents(pi, &Rat::from(1)).unwrap_or(false)
}

/// Certificate for `c` on `phi = psi (x) pi` with `phi` in `I^4`.
///
/// Over every tower tried, `phi_M` lies in `I^4 M`, so its anisotropic
/// dimension is recorded against the Arason-Pfister bound.
pub fn lemma24_certificate(pi: &QForm, psi: &QForm, c: &Rat, bound: u64) -> Result<SearchOutcome> {
    if !is_two_fold_pfister(pi) {
        return Err(Error::precondition(
            "pi-2-fold-pfister",
            format!("{pi} is not a 2-fold Pfister form"),
        ));
    }
    if psi.dim() != 6 {
        return Err(Error::precondition(
            "psi-dim-6",
            format!("{psi} has dimension {}", psi.dim()),
        ));
    }
    let phi = tensor(psi, pi);
    if !in_in(&phi, 4) {
        return Err(Error::precondition("phi-in-I4", format!("{phi} is not in I^4")));
    }
    let outcome = hyperbolizing_certificate(&phi, c, bound)?;
    if let Some(cert) = outcome.certificate() {
        let gens = cert.tower.generators();
        for k in 0..=gens.len() {
            let sub = make_tower(&gens[..k])?.tower;
            record_arason_pfister(analysis_over(&phi, &sub).aniso_dim, &phi);
        }
        if !verify_certificate(&phi, cert) {
            return Err(Error::domain(format!(
                "internal: certificate over {} failed verification",
                cert.tower
            )));
        }
    } else {
        log::warn!("no certificate for c = {c} on {phi} within bound {bound}");
    }
    Ok(outcome)
}

/// Hyperbolicity over `M` from pairwise Hilbert symbols at each completion,
/// independent of the kernel-dimension analysis used by the searches.
fn hyperbolic_by_symbols(phi: &QForm, tower: &ExtensionTower) -> bool {
    let entries = phi.entries();
    let n = entries.len();
    if n % 2 == 1 {
        return false;
    }
    let d = disc(phi);
    if !d.is_one() && !tower.squared_classes().contains(&d) {
        return false;
    }
    let gens = tower.generators();
    let mut places = vec![Place::Real];
    places.extend(support_of(phi, gens).into_iter().map(Place::Prime));
    places.into_iter().all(|place| {
        let field = LocalField::completion(place, gens);
        if field.is_complex() {
            return true;
        }
        if field.is_real() {
            return signature(phi) == 0;
        }
        let mut hasse = 1i8;
        for i in 0..n {
            for j in i + 1..n {
                hasse *= hilbert_symbol_sq(entries[i], entries[j], &field);
            }
        }
        hasse == split_hasse(n, &field)
    })
}

/// `c` is a norm from each `Q(sqrt d)` by the Hasse norm theorem.
fn norms_by_symbols(c: SquareClass, tower: &ExtensionTower) -> bool {
    tower.generators().iter().all(|&d| {
        let mut places = vec![Place::Real];
        places.extend(prime_support(&[c, d]).into_iter().map(Place::Prime));
        places
            .into_iter()
            .all(|v| hilbert_symbol_sq(c, d, &LocalField::base(v)) == 1)
    })
}

/// Rechecks both conclusions of a certificate from scratch.
pub fn verify_certificate(phi: &QForm, cert: &HypCertificate) -> bool {
    cert.schema == CERT_SCHEMA
        && cert.tower.is_canonical()
        && !cert.square_adjustment.is_zero()
        && cert.square_adjustment.is_square()
        && hyperbolic_by_symbols(phi, &cert.tower)
        && norms_by_symbols(cert.multiplier, &cert.tower)
}

/// `<<a, b>> (x) <a1, a2, a3, a4>` is Witt equivalent to
/// `a1 <<-a1 a3, -a1 a2, a, b>> + a4 <<a1 a2 a3 a4, a, b>>`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct PfisterDecomposition {
    pub scale4: SquareClass,
    pub slots4: [SquareClass; 4],
    pub scale3: SquareClass,
    pub slots3: [SquareClass; 3],
    /// The reassembled sum is Witt equivalent to the input.
    pub verified: bool,
}

impl PfisterDecomposition {
    pub fn reassemble(&self) -> QForm {
        orth_sum(
            &scale(self.scale4, &pfister_unchecked(&self.slots4)),
            &scale(self.scale3, &pfister_unchecked(&self.slots3)),
        )
    }
}

pub fn thm4_decompose(phi4: &QForm, q: &QuaternionAlg) -> Result<PfisterDecomposition> {
    let &[a1, a2, a3, a4] = phi4.entries() else {
        return Err(Error::domain(format!("{phi4} is not 4-dimensional")));
    };
    let (a, b) = (q.a, q.b);
    let mut decomposition = PfisterDecomposition {
        scale4: a1,
        slots4: [-(a1 * a3), -(a1 * a2), a, b],
        scale3: a4,
        slots3: [a1 * a2 * a3 * a4, a, b],
        verified: false,
    };
    decomposition.verified = witt_equivalent(&decomposition.reassemble(), &tensor(phi4, &q.norm_form()));
    Ok(decomposition)
}

/// Checks `(dim phi_M)_an = dim(pi) * dim(theta)` with
/// `dim theta = dim psi (mod 2)`, for `phi = pi (x) psi`.
pub fn prop_index_check(pi: &QForm, psi: &QForm, tower: &ExtensionTower) -> bool {
    let phi = tensor(pi, psi);
    let aniso = phi.dim() - 2 * witt_index_over(&phi, tower);
    pi.dim() > 0 && aniso.is_multiple_of(pi.dim()) && (aniso / pi.dim()) % 2 == psi.dim() % 2
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct HypothesisCheck {
    pub check: &'static str,
    pub passed: bool,
    pub value: serde_json::Value,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
#[serde(tag = "result", rename_all = "kebab-case")]
pub enum MultiplierOutcome {
    Found { certificate: HypCertificate },
    NotFoundWithinBounds { bound: u64 },
    NotAMultiplier,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct MultiplierResult {
    pub multiplier: Rat,
    #[serde(flatten)]
    pub outcome: MultiplierOutcome,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct PipelineReport {
    pub schema: &'static str,
    pub algebra: InvolutionAlgebra,
    pub degree: usize,
    pub index: usize,
    pub delta: InvolutionDiscriminant,
    pub psi_in_i4: bool,
    pub checks: Vec<HypothesisCheck>,
    /// First failing check; no multipliers are processed after a failure.
    pub halted_at: Option<&'static str>,
    pub diagnosis: Option<String>,
    /// `psi = phi (x) <<a, b>>`, the form every certificate refers to.
    pub form: QForm,
    pub results: Vec<MultiplierResult>,
}

/// Hypothesis checks for `(A, sigma) = Ad(phi6) (x) (Q, can)`, then a
/// certificate for every supplied multiplier of `psi`.
pub fn thm6_pipeline(phi6: &QForm, q: &QuaternionAlg, multipliers: &[Rat], bound: u64) -> Result<PipelineReport> {
    if phi6.dim() != 6 {
        return Err(Error::domain(format!("{phi6} is not 6-dimensional")));
    }
    let algebra = InvolutionAlgebra::new(phi6.clone(), *q)?;
    let (degree, index) = algebra.degree_index();
    let delta = algebra.discriminant()?;
    let psi = algebra.reduce_to_form();
    let psi_in_i4 = in_in(&psi, 4);
    let checks = vec![
        HypothesisCheck {
            check: "degree-12",
            passed: degree == 12,
            value: degree.into(),
        },
        HypothesisCheck {
            check: "index-at-most-2",
            passed: index <= 2,
            value: index.into(),
        },
        HypothesisCheck {
            check: "delta-trivial",
            passed: delta.trivial,
            value: format!("<<{},{},{}>>", delta.slots[0], delta.slots[1], delta.slots[2]).into(),
        },
        HypothesisCheck {
            check: "psi-in-I4",
            passed: psi_in_i4,
            value: psi_in_i4.into(),
        },
    ];
    let halted_at = checks.iter().find(|c| !c.passed).map(|c| c.check);
    let diagnosis = halted_at.map(|check| match check {
        "delta-trivial" => format!("Δ nontrivial: {} is anisotropic", delta.pfister),
        "psi-in-I4" => format!("{psi} is not in I^4"),
        other => format!("{other} failed"),
    });
    let mut results = Vec::new();
    if halted_at.is_none() {
        let pi = q.norm_form();
        for c in multipliers {
            let outcome = if !in_g(&psi, c)? {
                MultiplierOutcome::NotAMultiplier
            } else {
                match lemma24_certificate(&pi, phi6, c, bound)? {
                    SearchOutcome::Found { certificate } => MultiplierOutcome::Found { certificate },
                    SearchOutcome::NotFoundWithinBounds { bound } => MultiplierOutcome::NotFoundWithinBounds { bound },
                }
            };
            results.push(MultiplierResult {
                multiplier: c.clone(),
                outcome,
            });
        }
    }
    Ok(PipelineReport {
        schema: REPORT_SCHEMA,
        algebra,
        degree,
        index,
        delta,
        psi_in_i4,
        checks,
        halted_at,
        diagnosis,
        form: psi,
        results,
    })
}

/// Up to `count` multipliers of `phi` with distinct square classes, drawn
/// from integers `|c| <= height` by a seeded generator.
pub fn sample_multipliers(phi: &QForm, count: usize, height: i64, seed: u64) -> Vec<Rat> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut seen = BTreeSet::new();
    let mut out = Vec::new();
    for _ in 0..count.saturating_mul(50) {
        if out.len() == count {
            break;
        }
        let c: i64 = rng.gen_range(-height..=height);
        if c == 0 {
            continue;
        }
        let class = SquareClass::of_int(c).expect("nonzero");
        if seen.insert(class) && in_g(phi, &c.into()).unwrap_or(false) {
            out.push(c.into());
        }
    }
    out
}
