//! Quaternion algebras over `Q` and symplectic involution algebras of index
//! at most 2, modelled structurally as `Ad(phi) (x) (Q, can)`.
//!
//! No matrix model of the algebra is built. Similitude multipliers and
//! hyperbolicity of `(A, sigma)` are read off the form `psi = phi (x) n_Q`,
//! where `n_Q = <<a, b>>` is the norm form of `Q = (a, b)`.

use serde::Serialize;

use crate::arith::SquareClass;
use crate::error::{Error, Result};
use crate::forms::{disc, is_hyperbolic, is_isotropic, pfister_unchecked, tensor, QForm};

/// The quaternion algebra `(a, b)`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize)]
pub struct QuaternionAlg {
    pub a: SquareClass,
    pub b: SquareClass,
}

impl QuaternionAlg {
    pub fn new(a: SquareClass, b: SquareClass) -> Self {
        QuaternionAlg { a, b }
    }

    /// `<<a, b>> = <1, -a, -b, ab>`.
    pub fn norm_form(&self) -> QForm {
        pfister_unchecked(&[self.a, self.b])
    }

    /// Split iff the norm form is isotropic.
    pub fn is_split(&self) -> bool {
        is_isotropic(&self.norm_form())
    }
}

/// `(A, sigma) = Ad(phi) (x) (Q, can_Q)`, a central simple algebra of degree
/// `2 dim(phi)` with symplectic involution.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct InvolutionAlgebra {
    pub phi: QForm,
    pub q: QuaternionAlg,
}

/// The discriminant `[Q] ∪ (disc phi)`, carried by the 3-fold Pfister form
/// `<<a, b, disc phi>>`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct InvolutionDiscriminant {
    pub slots: [SquareClass; 3],
    pub pfister: QForm,
    pub trivial: bool,
}

impl InvolutionAlgebra {
    pub fn new(phi: QForm, q: QuaternionAlg) -> Result<Self> {
        if phi.dim() == 0 {
            return Err(Error::domain("the adjoint form must be nonempty"));
        }
        Ok(InvolutionAlgebra { phi, q })
    }

    pub fn degree(&self) -> usize {
        2 * self.phi.dim()
    }

    /// 1 when `Q` is split, else 2.
    pub fn index(&self) -> usize {
        if self.q.is_split() {
            1
        } else {
            2
        }
    }

    pub fn degree_index(&self) -> (usize, usize) {
        (self.degree(), self.index())
    }

    /// Defined when `2 ind(A)` divides `deg(A)`.
    pub fn discriminant(&self) -> Result<InvolutionDiscriminant> {
        let (degree, index) = self.degree_index();
        if degree % (2 * index) != 0 {
            return Err(Error::domain(format!(
                "discriminant undefined: 2 * index {index} does not divide degree {degree}"
            )));
        }
        let slots = [self.q.a, self.q.b, disc(&self.phi)];
        let pfister = pfister_unchecked(&slots);
        let trivial = is_hyperbolic(&pfister);
        Ok(InvolutionDiscriminant {
            slots,
            pfister,
            trivial,
        })
    }

    /// `psi = phi (x) <<a, b>>`; `G(A, sigma) = G(psi)` and
    /// `Hyp(A, sigma) = Hyp(psi)`.
    pub fn reduce_to_form(&self) -> QForm {
        tensor(&self.phi, &self.q.norm_form())
    }
}
