//! Homotopy operators and retracts: the vertical homotopy, the horizontal
//! homotopy for the higher horizontal complex, the horizontal-cone
//! resolution of local functionals with its projector, and the Q-perturbed
//! cone operators.

use crate::calculus::{
    d_h, d_v, lie_derivative, prolong_contract, total_derivative, total_derivative_multi,
    EvolutionaryField,
};
use crate::localforms::{Generator, LocalForm, MultiIndex};
use crate::scalar::{int, ratio, Scalar};
use crate::theory::Theory;
use crate::{Error, Result};

/// Hard bound for the iterate-until-zero sums; every such sum terminates by
/// a degree argument, so running past the bound signals a convention bug.
fn iteration_cap(th: &Theory) -> usize {
    th.dimension() + th.jet_cap() as usize + 4
}

/// Vertical homotopy `h_V`: on fiber-weight-homogeneous x of weight w > 0,
/// contracts with the prolonged fiber-radial field and divides by w.
/// Part of a special deformation retract onto Ω(M).
pub fn vertical_homotopy<C: Scalar>(th: &Theory, x: &LocalForm<C>) -> Result<LocalForm<C>> {
    let mut radial = std::collections::BTreeMap::new();
    for a in th.field_ids() {
        radial.insert(
            a,
            LocalForm::generator(th, Generator::Jet(a, MultiIndex::zero(th.dimension())))?,
        );
    }
    let radial = EvolutionaryField::new(0, radial);
    let mut out = LocalForm::zero();
    for (w, part) in x.weight_parts() {
        if w == 0 {
            continue;
        }
        let t = prolong_contract(th, &radial, &part)?;
        out = out.add(&t.scale(ratio::<C>(1, w)))?;
    }
    Ok(out)
}

/// Multi-index binomial `Π_t C(a_t + b_t, b_t)` as a scalar.
fn multi_binom<C: Scalar>(a: &MultiIndex, b: &MultiIndex) -> C {
    let mut r: i64 = 1;
    for (&x, &y) in a.0.iter().zip(&b.0) {
        let (n, k) = ((x + y) as i64, y as i64);
        let mut c: i64 = 1;
        for j in 0..k {
            c = c * (n - j) / (j + 1);
        }
        r *= c;
    }
    int::<C>(r)
}

/// Higher interior Euler extraction `E_a^K = Σ_J C(K+J, J) (−D)_J ∂_{du^a_{K+J}}`.
fn higher_euler<C: Scalar>(
    th: &Theory,
    a: crate::theory::FieldId,
    k_ix: &MultiIndex,
    x: &LocalForm<C>,
) -> Result<LocalForm<C>> {
    let max_ord = x.max_order(true) as i64;
    let mut out = LocalForm::zero();
    for j_ix in MultiIndex::all_up_to(th.dimension(), max_ord - k_ix.order() as i64) {
        let kj = k_ix.plus(&j_ix);
        let mut t = x.partial(th, &Generator::Vert(a, kj))?;
        if t.is_zero() {
            continue;
        }
        for (i, &k) in j_ix.0.iter().enumerate() {
            for _ in 0..k {
                t = total_derivative(th, i, &t)?.neg();
            }
        }
        out = out.add(&t.scale(multi_binom::<C>(k_ix, &j_ix)))?;
    }
    Ok(out)
}

/// Horizontal homotopy `h∇` on the higher horizontal complex (vfd ≥ 1).
///
/// Contract: `[d_H, h∇] + I∘Π = id` on Ω^{≥1,•}, `Π∘h∇ = 0`, output one
/// horizontal degree lower. The construction is the coordinate homotopy via
/// higher interior Euler operators on the trivial bundle over ℝⁿ, with
/// weight `(I_i + 1)/(n − q + |I| + 1)` for the extraction string `I`
/// marked in direction `i`; any operator meeting the contract is
/// interchangeable with it.
pub fn horizontal_homotopy<C: Scalar>(th: &Theory, x: &LocalForm<C>) -> Result<LocalForm<C>> {
    if x.vfd_set().contains(&0) {
        return Err(Error::VerticalDegreeZero { op: "horizontal_homotopy" });
    }
    let n = th.dimension();
    let mut total = LocalForm::zero();
    for (p, vp) in x.vfd_parts() {
        for q in 1..=(n as i64) {
            let fp = vp.filter(|w| crate::localforms::word_hfd(w) == q);
            if fp.is_zero() {
                continue;
            }
            let max_ord = fp.max_order(true) as i64;
            let mut acc = LocalForm::zero();
            for i in 0..n {
                let fi = fp.partial(th, &Generator::Horiz(i))?;
                if fi.is_zero() {
                    continue;
                }
                for a in th.field_ids() {
                    for ix in MultiIndex::all_up_to(n, max_ord) {
                        let marked = ix.bump(i);
                        let e = higher_euler(th, a, &marked, &fi)?;
                        if e.is_zero() {
                            continue;
                        }
                        let dua = LocalForm::generator(
                            th,
                            Generator::Vert(a, MultiIndex::zero(n)),
                        )?;
                        let mut term = dua.wedge(th, &e)?;
                        term = total_derivative_multi(th, &ix, &term)?;
                        let w = ratio::<C>(
                            ix.0[i] as i64 + 1,
                            n as i64 - q + ix.order() as i64 + 1,
                        );
                        acc = acc.add(&term.scale(w))?;
                    }
                }
            }
            total = total.add(&acc.scale(ratio::<C>(1, p)))?;
        }
    }
    Ok(total)
}

/// `h̃∇ = h∇ Σ_k (−d_V h∇)^k`: the d-perturbed horizontal homotopy.
pub fn perturbed_horizontal_homotopy<C: Scalar>(
    th: &Theory,
    x: &LocalForm<C>,
) -> Result<LocalForm<C>> {
    let mut acc = LocalForm::zero();
    let mut cur = x.clone();
    for _ in 0..iteration_cap(th) {
        if cur.is_zero() {
            return Ok(acc);
        }
        let t = horizontal_homotopy(th, &cur)?;
        acc = acc.add(&t)?;
        cur = d_v(th, &t)?.neg();
    }
    Err(Error::NilpotencyBound("perturbed horizontal homotopy"))
}

/// `h∇ Σ_k (L_Q h∇)^k`: the homotopy of the (d_H − L_Q)-perturbed retract.
pub fn q_perturbed_horizontal_homotopy<C: Scalar>(
    th: &Theory,
    q_field: &EvolutionaryField<C>,
    x: &LocalForm<C>,
) -> Result<LocalForm<C>> {
    let mut acc = LocalForm::zero();
    let mut cur = x.clone();
    for _ in 0..iteration_cap(th) {
        if cur.is_zero() {
            return Ok(acc);
        }
        let t = horizontal_homotopy(th, &cur)?;
        acc = acc.add(&t)?;
        cur = lie_derivative(th, q_field, &t)?;
    }
    Err(Error::NilpotencyBound("Q-perturbed horizontal homotopy"))
}

/// An element of the horizontal cone `Ω(M)[1] ⊕ Ω_H`: a base-form slot and
/// a vertical-degree-0 body (possibly horizontally inhomogeneous).
#[derive(Debug, Clone, PartialEq)]
pub struct ConeElement<C: Scalar> {
    pub base: LocalForm<C>,
    pub body: LocalForm<C>,
}

impl<C: Scalar> ConeElement<C> {
    pub fn new(base: LocalForm<C>, body: LocalForm<C>) -> Self {
        ConeElement { base, body }
    }

    pub fn zero() -> Self {
        ConeElement {
            base: LocalForm::zero(),
            body: LocalForm::zero(),
        }
    }

    pub fn from_body(body: LocalForm<C>) -> Self {
        ConeElement {
            base: LocalForm::zero(),
            body,
        }
    }

    pub fn is_zero(&self) -> bool {
        self.base.is_zero() && self.body.is_zero()
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        Ok(ConeElement {
            base: self.base.add(&other.base)?,
            body: self.body.add(&other.body)?,
        })
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        Ok(ConeElement {
            base: self.base.sub(&other.base)?,
            body: self.body.sub(&other.body)?,
        })
    }

    pub fn scale(&self, c: C) -> Self {
        ConeElement {
            base: self.base.scale(c.clone()),
            body: self.body.scale(c),
        }
    }

    pub fn neg(&self) -> Self {
        ConeElement {
            base: self.base.neg(),
            body: self.body.neg(),
        }
    }

    /// Validates the base slot: base coordinates and horizontal generators
    /// only, and a vertical-degree-0 body.
    pub fn validate(&self, th: &Theory) -> Result<()> {
        if self.base != self.base.zero_section_pullback() {
            return Err(Error::Precondition(
                "cone base slot must be a form on the base manifold".into(),
            ));
        }
        if self.body.vfd_set().iter().any(|&v| v != 0) {
            return Err(Error::Precondition(
                "cone body must have vertical degree 0".into(),
            ));
        }
        let _ = th;
        Ok(())
    }
}

/// Cone differential `D(α, F) = (dα, −d_H F + p*α)`.
pub fn cone_d<C: Scalar>(th: &Theory, c: &ConeElement<C>) -> Result<ConeElement<C>> {
    Ok(ConeElement {
        base: d_h(th, &c.base)?,
        body: d_h(th, &c.body)?.neg().add(&c.base)?,
    })
}

/// Q-perturbed cone differential `(α, F) ↦ (dα, −(d_H − L_Q)F + p*α)`.
pub fn cone_d_q<C: Scalar>(
    th: &Theory,
    q_field: &EvolutionaryField<C>,
    c: &ConeElement<C>,
) -> Result<ConeElement<C>> {
    let body = d_h(th, &c.body)?
        .neg()
        .add(&lie_derivative(th, q_field, &c.body)?)?
        .add(&c.base)?;
    Ok(ConeElement {
        base: d_h(th, &c.base)?,
        body,
    })
}

/// The perturbation `k = (0, L_Q F)` of the cone differential.
pub fn cone_perturbation<C: Scalar>(
    th: &Theory,
    q_field: &EvolutionaryField<C>,
    c: &ConeElement<C>,
) -> Result<ConeElement<C>> {
    Ok(ConeElement {
        base: LocalForm::zero(),
        body: lie_derivative(th, q_field, &c.body)?,
    })
}

/// `I_V(α, F) = d_V F`, mapping the cone into the higher horizontal complex.
pub fn cone_iv<C: Scalar>(th: &Theory, c: &ConeElement<C>) -> Result<LocalForm<C>> {
    d_v(th, &c.body)
}

/// `P_V x = (0, h_V(x|_{vfd=1}))`.
pub fn cone_pv<C: Scalar>(th: &Theory, x: &LocalForm<C>) -> Result<ConeElement<C>> {
    let v1 = x.filter(|w| crate::localforms::word_vfd(w) == 1);
    Ok(ConeElement::from_body(vertical_homotopy(th, &v1)?))
}

/// Cone homotopy `H = H_{0*} + P_V ∘ h̃∇ ∘ I_V`, satisfying
/// `[D, H] + i∘ℙ = id` on the cone.
pub fn cone_h<C: Scalar>(th: &Theory, c: &ConeElement<C>) -> Result<ConeElement<C>> {
    let h0 = ConeElement::new(c.body.zero_section_pullback(), LocalForm::zero());
    let pv = cone_pv(th, &perturbed_horizontal_homotopy(th, &cone_iv(th, c)?)?)?;
    h0.add(&pv)
}

/// The projector onto local functionals: `ℙ(α, F) = h_V(Π(d_V F))`.
pub fn functional_projector<C: Scalar>(th: &Theory, c: &ConeElement<C>) -> Result<LocalForm<C>> {
    let x = d_v(th, &c.body)?.project_top(th);
    if x.is_zero() {
        return Ok(LocalForm::zero());
    }
    vertical_homotopy(th, &crate::calculus::interior_euler(th, &x)?)
}

/// `𝕡 = i ∘ ℙ` as a cone endomorphism.
pub fn cone_p<C: Scalar>(th: &Theory, c: &ConeElement<C>) -> Result<ConeElement<C>> {
    Ok(ConeElement::from_body(functional_projector(th, c)?))
}

/// Q-perturbed cone homotopy `H̃_Q = H Σ_k (−kH)^k` with `k = (0, L_Q ·)`.
pub fn cone_h_q<C: Scalar>(
    th: &Theory,
    q_field: &EvolutionaryField<C>,
    c: &ConeElement<C>,
) -> Result<ConeElement<C>> {
    let mut acc = ConeElement::zero();
    let mut cur = c.clone();
    for _ in 0..iteration_cap(th) {
        if cur.is_zero() {
            return Ok(acc);
        }
        let t = cone_h(th, &cur)?;
        acc = acc.add(&t)?;
        cur = cone_perturbation(th, q_field, &t)?.neg();
    }
    Err(Error::NilpotencyBound("perturbed cone homotopy"))
}

/// Perturbed inclusion `ĩ(ℓ) = Σ_k (−Hk)^k (0, ℓ)`.
pub fn i_tilde<C: Scalar>(
    th: &Theory,
    q_field: &EvolutionaryField<C>,
    functional: &LocalForm<C>,
) -> Result<ConeElement<C>> {
    let mut acc = ConeElement::zero();
    let mut cur = ConeElement::from_body(functional.clone());
    for _ in 0..iteration_cap(th) {
        if cur.is_zero() {
            return Ok(acc);
        }
        acc = acc.add(&cur)?;
        cur = cone_h(th, &cone_perturbation(th, q_field, &cur)?)?.neg();
    }
    Err(Error::NilpotencyBound("perturbed inclusion"))
}

/// Transferred differential `d_ham = ℙ Σ_k (−kH)^k k i` on local
/// functionals (the sum collapses to `ℙ ∘ k ∘ i`, which is re-verified by
/// the HPL cross-check tests).
pub fn d_ham<C: Scalar>(
    th: &Theory,
    q_field: &EvolutionaryField<C>,
    functional: &LocalForm<C>,
) -> Result<LocalForm<C>> {
    let mut acc = LocalForm::zero();
    let mut cur = cone_perturbation(
        th,
        q_field,
        &ConeElement::from_body(functional.clone()),
    )?;
    for _ in 0..iteration_cap(th) {
        if cur.is_zero() {
            return Ok(acc);
        }
        acc = acc.add(&functional_projector(th, &cur)?)?;
        cur = cone_perturbation(th, q_field, &cone_h(th, &cur)?)?.neg();
    }
    Err(Error::NilpotencyBound("transferred differential"))
}
