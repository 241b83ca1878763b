//! The bracket tower on the Hamiltonian cone: the S/A/B brackets, the
//! transferred three-bracket, the dgL[k]a on local Hamiltonian functionals,
//! generalized Jacobi verification, the L∞ quasi-inverse of the projector,
//! Maurer–Cartan evaluation and twisting.

use crate::calculus::{
    d_h, d_v, field_bracket, interior_euler, lie_derivative, prolong_contract,
    EvolutionaryField,
};
use crate::homotopy::{
    cone_d_q, cone_h_q, d_ham, functional_projector, horizontal_homotopy, i_tilde,
    q_perturbed_horizontal_homotopy, vertical_homotopy, ConeElement,
};
use crate::localforms::{Generator, LocalForm, MultiIndex};
use crate::scalar::{ratio, Scalar};
use crate::theory::Theory;
use crate::{Error, Result};

/// A certified k-symplectic development: `ω• = Σ (d_V h_V h∇ L_Q)^j ω` with
/// its closure certificates.
#[derive(Debug, Clone)]
pub struct SymplecticDevelopment<C: Scalar> {
    pub form: LocalForm<C>,
    pub anchor: LocalForm<C>,
    pub ghost: i64,
    pub dv_closed: bool,
    pub descent_closed: bool,
}

/// Builds the symplectic development of `ω` for a cohomological `Q`.
///
/// Preconditions: `d_V ω = 0`, `d_H ω = 0`, `Π(L_Q ω) = 0`, `ped`
/// homogeneous. The certificates `d_V ω• = 0` and `(d_H − L_Q) ω• = 0` are
/// recomputed and attached.
pub fn build_development<C: Scalar>(
    th: &Theory,
    omega: &LocalForm<C>,
    q_field: &EvolutionaryField<C>,
) -> Result<SymplecticDevelopment<C>> {
    if !d_v(th, omega)?.is_zero() {
        return Err(Error::Precondition("omega is not d_V-closed".into()));
    }
    if !d_h(th, omega)?.is_zero() {
        return Err(Error::Precondition("omega is not d_H-closed".into()));
    }
    let lq = lie_derivative(th, q_field, omega)?;
    if !lq.is_zero() && !interior_euler(th, &lq)?.is_zero() {
        return Err(Error::Precondition(
            "Pi(L_Q omega) != 0: theory incompatible".into(),
        ));
    }
    let ghost = match omega.ghd_set(th).iter().next() {
        Some(&g) => g,
        None => return Err(Error::Precondition("omega is zero".into())),
    };
    if omega.ped(th)?.is_none() {
        return Err(Error::Precondition("omega is zero".into()));
    }
    let mut acc = LocalForm::zero();
    let mut cur = omega.clone();
    let cap = th.dimension() + 2;
    for _ in 0..=cap {
        if cur.is_zero() {
            break;
        }
        acc = acc.add(&cur)?;
        let t = lie_derivative(th, q_field, &cur)?;
        cur = d_v(th, &vertical_homotopy(th, &horizontal_homotopy(th, &t)?)?)?;
    }
    if !cur.is_zero() {
        return Err(Error::NilpotencyBound("development"));
    }
    let dv_closed = d_v(th, &acc)?.is_zero();
    let descent = d_h(th, &acc)?.sub(&lie_derivative(th, q_field, &acc)?)?;
    Ok(SymplecticDevelopment {
        form: acc,
        anchor: omega.clone(),
        ghost,
        dv_closed,
        descent_closed: descent.is_zero(),
    })
}

/// A theory with its symplectic development: the ambient context for the
/// bracket tower and the BV layer.
pub struct HamModel<C: Scalar> {
    pub theory: Theory,
    pub q: EvolutionaryField<C>,
    pub omega: SymplecticDevelopment<C>,
}

impl<C: Scalar> HamModel<C> {
    pub fn new(
        theory: Theory,
        q: EvolutionaryField<C>,
        omega_anchor: LocalForm<C>,
    ) -> Result<Self> {
        q.check_ghosts(&theory)?;
        let omega = build_development(&theory, &omega_anchor, &q)?;
        Ok(HamModel { theory, q, omega })
    }

    pub fn k(&self) -> i64 {
        self.omega.ghost
    }

    pub fn th(&self) -> &Theory {
        &self.theory
    }
}

/// Partial effective degree of a cone element (body ped, or base-slot
/// degree bookkeeping when the body vanishes).
pub fn cone_ped<C: Scalar>(model: &HamModel<C>, c: &ConeElement<C>) -> Result<Option<i64>> {
    let th = model.th();
    let n = th.dimension() as i64;
    let mut peds = c.body.ped_set(th);
    for w in c.base.terms().map(|(w, _)| w) {
        let deg: i64 = w
            .iter()
            .map(|(g, e)| match g {
                Generator::Horiz(_) => *e as i64,
                _ => 0,
            })
            .sum();
        peds.insert(deg - n - 1);
    }
    match peds.len() {
        0 => Ok(None),
        1 => Ok(Some(*peds.iter().next().unwrap())),
        _ => Err(Error::Inhomogeneous("cone partial effective degree")),
    }
}

/// Shifted Lie degree `d = ped − k` of a cone element (0 for the zero
/// element).
pub fn shifted_degree<C: Scalar>(model: &HamModel<C>, c: &ConeElement<C>) -> Result<i64> {
    Ok(cone_ped(model, c)?.map(|p| p - model.k()).unwrap_or(0))
}

/// Symmetric-word degree `w = ped − k − 1`.
pub fn w_degree<C: Scalar>(model: &HamModel<C>, c: &ConeElement<C>) -> Result<i64> {
    Ok(shifted_degree(model, c)? - 1)
}

fn w_degree_f<C: Scalar>(model: &HamModel<C>, f: &LocalForm<C>) -> Result<i64> {
    Ok(f.ped(model.th())?
        .map(|p| p - model.k() - 1)
        .unwrap_or(0))
}

/// Solves `Π(ι_X ω•) = Π(d_V F)` for the Hamiltonian vector field of a
/// top-degree body component (ghost-homogeneous). Returns the zero field
/// when the top component is absent or when its Euler–Lagrange part
/// vanishes; fails when the pairing cannot be inverted term by term (the
/// non-ultralocal case, where the pair must be user-supplied).
pub fn hamiltonian_vector_field<C: Scalar>(
    model: &HamModel<C>,
    body: &LocalForm<C>,
) -> Result<EvolutionaryField<C>> {
    let th = model.th();
    let top = body.project_top(th);
    if top.is_zero() {
        return Ok(EvolutionaryField::zero(0));
    }
    let ghd = {
        let s = top.ghd_set(th);
        if s.len() != 1 {
            return Err(Error::Inhomogeneous("ghost degree of Hamiltonian body"));
        }
        *s.iter().next().unwrap()
    };
    let ghost_x = ghd - model.k();
    let mut target = interior_euler(th, &d_v(th, &top)?)?;
    let omega0 = &model.omega.anchor;
    let mut components: std::collections::BTreeMap<_, LocalForm<C>> =
        std::collections::BTreeMap::new();
    let max_steps = 4 * (target.num_terms() + 1) * (th.num_fields() + 1) * 8;
    for _ in 0..max_steps {
        if target.is_zero() {
            break;
        }
        let (w, coeff) = target.terms().next().map(|(w, c)| (w.clone(), c.clone())).unwrap();
        let mut eliminated = false;
        let rest: crate::localforms::Word = w
            .iter()
            .filter(|(g, _)| matches!(g, Generator::Jet(_, _) | Generator::Base(_)))
            .cloned()
            .collect();
        for a in th.field_ids() {
            let mut trial_terms = std::collections::BTreeMap::new();
            trial_terms.insert(a, {
                let mut f = LocalForm::zero();
                f.theory = th.id();
                f.insert_term(rest.clone(), C::one());
                f
            });
            let trial = EvolutionaryField::new(ghost_x, trial_terms);
            let got = interior_euler(th, &prolong_contract(th, &trial, omega0)?)?;
            let hit = got.terms().find(|(tw, _)| **tw == w).map(|(_, c)| c.clone());
            if let Some(cw) = hit {
                let lam = coeff.clone() / cw;
                let comp = components.entry(a).or_insert_with(LocalForm::zero);
                let mut add = LocalForm::zero();
                add.theory = th.id();
                add.insert_term(rest.clone(), lam.clone());
                *comp = comp.add(&add)?;
                target = target.sub(&got.scale(lam))?;
                eliminated = true;
                break;
            }
        }
        if !eliminated {
            return Err(Error::NotHamiltonian(format!(
                "cannot eliminate source term (pairing not invertible term by term)"
            )));
        }
    }
    if !target.is_zero() {
        return Err(Error::NotHamiltonian(
            "elimination did not terminate (non-ultralocal pairing?)".into(),
        ));
    }
    Ok(EvolutionaryField::new(ghost_x, components))
}

fn r_weight<C: Scalar>(model: &HamModel<C>, c: &ConeElement<C>) -> Result<i64> {
    // right-derivative weight on the first slot: +1 on the classical
    // (odd shifted-degree) sector, matching the BV antibracket convention
    Ok(if (shifted_degree(model, c)? + 1).rem_euclid(2) == 0 {
        1
    } else {
        -1
    })
}

/// `σ_k(F,G) = (−1)^{(ped F − k)(ped G − k)}`.
pub fn sigma_k<C: Scalar>(
    model: &HamModel<C>,
    c1: &ConeElement<C>,
    c2: &ConeElement<C>,
) -> Result<i64> {
    let d1 = shifted_degree(model, c1)?;
    let d2 = shifted_degree(model, c2)?;
    Ok(if (d1 * d2).rem_euclid(2) == 1 { -1 } else { 1 })
}

/// Standard bracket `{c1, c2}^S = ι_{X_1} ι_{X_2} ω•` (with the
/// right-derivative weight on the first slot away from the classical
/// sector), extended to the cone with zero base slot.
pub fn bracket_s<C: Scalar>(
    model: &HamModel<C>,
    c1: &ConeElement<C>,
    c2: &ConeElement<C>,
) -> Result<ConeElement<C>> {
    let th = model.th();
    let x1 = hamiltonian_vector_field(model, &c1.body)?;
    let x2 = hamiltonian_vector_field(model, &c2.body)?;
    let t = prolong_contract(th, &x1, &prolong_contract(th, &x2, &model.omega.form)?)?;
    Ok(ConeElement::from_body(t.scale_int(r_weight(model, c1)?)))
}

/// Antisymmetrised bracket
/// `{c1, c2}^A = ½(L_{X_1} F_2 − σ_k L_{X_2} F_1)` (same weights).
pub fn bracket_a<C: Scalar>(
    model: &HamModel<C>,
    c1: &ConeElement<C>,
    c2: &ConeElement<C>,
) -> Result<ConeElement<C>> {
    let th = model.th();
    let x1 = hamiltonian_vector_field(model, &c1.body)?;
    let x2 = hamiltonian_vector_field(model, &c2.body)?;
    let s1 = r_weight(model, c1)?;
    let s2 = r_weight(model, c2)?;
    let sk = sigma_k(model, c1, c2)?;
    let t1 = lie_derivative(th, &x1, &c2.body)?.scale_int(s1);
    let t2 = lie_derivative(th, &x2, &c1.body)?.scale_int(-s2 * sk);
    Ok(ConeElement::from_body(
        t1.add(&t2)?.scale(ratio::<C>(1, 2)),
    ))
}

/// `{·,·}^B = 2{·,·}^A − {·,·}^S` (a graded Lie bracket on the nose).
pub fn bracket_b<C: Scalar>(
    model: &HamModel<C>,
    c1: &ConeElement<C>,
    c2: &ConeElement<C>,
) -> Result<ConeElement<C>> {
    bracket_a(model, c1, c2)?
        .scale(crate::scalar::int(2))
        .sub(&bracket_s(model, c1, c2)?)
}

/// Which binary bracket a tower is built on.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Structure {
    S,
    B,
}

pub fn bracket_of<C: Scalar>(
    model: &HamModel<C>,
    structure: Structure,
    c1: &ConeElement<C>,
    c2: &ConeElement<C>,
) -> Result<ConeElement<C>> {
    match structure {
        Structure::S => bracket_s(model, c1, c2),
        Structure::B => bracket_b(model, c1, c2),
    }
}

/// Transferred bracket on local Hamiltonian functionals:
/// `{ℓ1, ℓ2}_ham = ℙ{i ℓ1, i ℓ2}^S`.
pub fn bracket_ham<C: Scalar>(
    model: &HamModel<C>,
    l1: &LocalForm<C>,
    l2: &LocalForm<C>,
) -> Result<LocalForm<C>> {
    let th = model.th();
    let b = bracket_s(
        model,
        &ConeElement::from_body(l1.clone()),
        &ConeElement::from_body(l2.clone()),
    )?;
    functional_projector(th, &b)
}

/// Membership test for the space of local functionals: `ℙ(0, F) = F`.
pub fn in_functional_image<C: Scalar>(model: &HamModel<C>, f: &LocalForm<C>) -> Result<bool> {
    let p = functional_projector(model.th(), &ConeElement::from_body(f.clone()))?;
    Ok(p.sub(f)?.is_zero())
}

// ---------------------------------------------------------------------------
// delta picture (décalage): coderivation components on w-degrees
// ---------------------------------------------------------------------------

pub fn delta1<C: Scalar>(model: &HamModel<C>, c: &ConeElement<C>) -> Result<ConeElement<C>> {
    cone_d_q(model.th(), &model.q, c)
}

/// Symmetrized décalage of a binary bracket: the honest map on the second
/// symmetric power. Coincides with `(−1)^{w_1}{c1, c2}` on pairs whose
/// shifted degrees have even sum.
pub fn delta2<C: Scalar>(
    model: &HamModel<C>,
    structure: Structure,
    c1: &ConeElement<C>,
    w1: i64,
    c2: &ConeElement<C>,
    w2: i64,
) -> Result<ConeElement<C>> {
    let s1 = if w1.rem_euclid(2) == 1 { -1 } else { 1 };
    let s2 = if (w2 + w1 * w2).rem_euclid(2) == 1 { -1 } else { 1 };
    let t = bracket_of(model, structure, c1, c2)?
        .scale_int_cone(s1)
        .add(&bracket_of(model, structure, c2, c1)?.scale_int_cone(s2))?;
    Ok(t.scale(ratio::<C>(1, 2)))
}

impl<C: Scalar> ConeElement<C> {
    fn scale_int_cone(&self, n: i64) -> Self {
        self.scale(crate::scalar::int(n))
    }
}

fn koszul_perm(degs: &[i64], perm: &[usize]) -> i64 {
    let mut sign = 1i64;
    let mut lst: Vec<usize> = perm.to_vec();
    for i in 0..lst.len() {
        for j in 0..lst.len().saturating_sub(1 + i) {
            if lst[j] > lst[j + 1] {
                if degs[lst[j]].rem_euclid(2) == 1 && degs[lst[j + 1]].rem_euclid(2) == 1 {
                    sign = -sign;
                }
                lst.swap(j, j + 1);
            }
        }
    }
    sign
}

fn shuffles(k: usize, m: usize) -> Vec<Vec<usize>> {
    let idx: Vec<usize> = (0..m).collect();
    let mut out = Vec::new();
    let mut comb: Vec<usize> = (0..k).collect();
    loop {
        let rest: Vec<usize> = idx.iter().filter(|i| !comb.contains(i)).cloned().collect();
        let mut s = comb.clone();
        s.extend(rest);
        out.push(s);
        // next combination
        let mut i = k;
        loop {
            if i == 0 {
                return out;
            }
            i -= 1;
            if comb[i] < m - (k - i) {
                comb[i] += 1;
                for j in i + 1..k {
                    comb[j] = comb[j - 1] + 1;
                }
                break;
            }
        }
    }
}

/// The symmetrized Jacobiator `δ₂ ∘ (δ₂ ∨ id)` on the third symmetric
/// power, with explicit w-degrees.
pub fn jacobiator_delta<C: Scalar>(
    model: &HamModel<C>,
    structure: Structure,
    xs: [&ConeElement<C>; 3],
    ws: [i64; 3],
) -> Result<ConeElement<C>> {
    let mut out = ConeElement::zero();
    for sh in shuffles(2, 3) {
        let sgn = koszul_perm(&ws, &sh);
        let (a, b, c) = (sh[0], sh[1], sh[2]);
        let inner = delta2(model, structure, xs[a], ws[a], xs[b], ws[b])?;
        let t = delta2(model, structure, &inner, ws[a] + ws[b] + 1, xs[c], ws[c])?;
        out = out.add(&t.scale_int_cone(sgn))?;
    }
    Ok(out)
}

/// The classical graded cyclic Jacobiator in shifted degrees:
/// `(−1)^{d₁d₃}{{x,y},z} + (−1)^{d₂d₁}{{y,z},x} + (−1)^{d₃d₂}{{z,x},y}`.
/// Vanishes identically for the B-bracket; lies in ker ℙ for S and A.
pub fn jacobiator<C: Scalar>(
    model: &HamModel<C>,
    bracket: impl Fn(&HamModel<C>, &ConeElement<C>, &ConeElement<C>) -> Result<ConeElement<C>>,
    x: &ConeElement<C>,
    y: &ConeElement<C>,
    z: &ConeElement<C>,
) -> Result<ConeElement<C>> {
    let dx = shifted_degree(model, x)?;
    let dy = shifted_degree(model, y)?;
    let dz = shifted_degree(model, z)?;
    let s = |a: i64, b: i64| if (a * b).rem_euclid(2) == 1 { -1 } else { 1 };
    let t1 = bracket(model, &bracket(model, x, y)?, z)?.scale_int_cone(s(dx, dz));
    let t2 = bracket(model, &bracket(model, y, z)?, x)?.scale_int_cone(s(dy, dx));
    let t3 = bracket(model, &bracket(model, z, x)?, y)?.scale_int_cone(s(dz, dy));
    t1.add(&t2)?.add(&t3)
}

/// Three-bracket `δ₃ = −H̃_Q ∘ Jac_{δ₂}` of the S tower.
pub fn delta3<C: Scalar>(
    model: &HamModel<C>,
    xs: [&ConeElement<C>; 3],
    ws: [i64; 3],
) -> Result<ConeElement<C>> {
    let j = jacobiator_delta(model, Structure::S, xs, ws)?;
    Ok(cone_h_q(model.th(), &model.q, &j)?.neg())
}

/// `{·,·,·}^S` evaluated on concrete cone elements (w-degrees inferred).
pub fn three_bracket_s<C: Scalar>(
    model: &HamModel<C>,
    x: &ConeElement<C>,
    y: &ConeElement<C>,
    z: &ConeElement<C>,
) -> Result<ConeElement<C>> {
    let ws = [
        w_degree(model, x)?,
        w_degree(model, y)?,
        w_degree(model, z)?,
    ];
    delta3(model, [x, y, z], ws)
}

/// Evaluates the generalized Jacobi identity (the arity-m component of
/// `Q² = 0`) on concrete elements; the result must be exactly zero.
pub fn linf_identity<C: Scalar>(
    model: &HamModel<C>,
    structure: Structure,
    xs: &[ConeElement<C>],
) -> Result<ConeElement<C>> {
    let m = xs.len();
    let degs: Vec<i64> = xs
        .iter()
        .map(|x| w_degree(model, x))
        .collect::<Result<_>>()?;
    let mut out = ConeElement::zero();
    for k in 1..=m.min(3) {
        if k == 3 && structure != Structure::S {
            continue;
        }
        for sh in shuffles(k, m) {
            let sgn = koszul_perm(&degs, &sh);
            let wh: i64 = sh[..k].iter().map(|&i| degs[i]).sum();
            let inner = match k {
                1 => delta1(model, &xs[sh[0]])?,
                2 => delta2(
                    model,
                    structure,
                    &xs[sh[0]],
                    degs[sh[0]],
                    &xs[sh[1]],
                    degs[sh[1]],
                )?,
                _ => delta3(
                    model,
                    [&xs[sh[0]], &xs[sh[1]], &xs[sh[2]]],
                    [degs[sh[0]], degs[sh[1]], degs[sh[2]]],
                )?,
            };
            let w_inner = wh + 1;
            let rest: Vec<usize> = sh[k..].to_vec();
            let term = match m - k {
                0 => delta1(model, &inner)?,
                1 => delta2(
                    model,
                    structure,
                    &inner,
                    w_inner,
                    &xs[rest[0]],
                    degs[rest[0]],
                )?,
                2 => {
                    if structure != Structure::S {
                        continue;
                    }
                    delta3(
                        model,
                        [&inner, &xs[rest[0]], &xs[rest[1]]],
                        [w_inner, degs[rest[0]], degs[rest[1]]],
                    )?
                }
                _ => continue,
            };
            out = out.add(&term.scale_int_cone(sgn))?;
        }
    }
    Ok(out)
}

// ---------------------------------------------------------------------------
// quasi-inverse of the projector (Taylor coefficients up to arity 3)
// ---------------------------------------------------------------------------

fn delta_f1<C: Scalar>(model: &HamModel<C>, x: &LocalForm<C>) -> Result<LocalForm<C>> {
    d_ham(model.th(), &model.q, x)
}

fn delta_f2<C: Scalar>(
    model: &HamModel<C>,
    x: &LocalForm<C>,
    wx: i64,
    y: &LocalForm<C>,
    wy: i64,
) -> Result<LocalForm<C>> {
    let s1 = if wx.rem_euclid(2) == 1 { -1 } else { 1 };
    let s2 = if (wy + wx * wy).rem_euclid(2) == 1 { -1 } else { 1 };
    let t = bracket_ham(model, x, y)?
        .scale_int(s1)
        .add(&bracket_ham(model, y, x)?.scale_int(s2))?;
    Ok(t.scale(ratio::<C>(1, 2)))
}

/// First Taylor coefficient `Ĩ¹₁ = ĩ`.
pub fn quasi_inverse_1<C: Scalar>(
    model: &HamModel<C>,
    x: &LocalForm<C>,
) -> Result<ConeElement<C>> {
    i_tilde(model.th(), &model.q, x)
}

/// Second Taylor coefficient
/// `Ĩ¹₂(x∨y) = −H̃_Q [ δ₂(ĩx ∨ ĩy) − ĩ δ_{F,2}(x∨y) ]`.
pub fn quasi_inverse_2<C: Scalar>(
    model: &HamModel<C>,
    x: &LocalForm<C>,
    wx: i64,
    y: &LocalForm<C>,
    wy: i64,
) -> Result<ConeElement<C>> {
    let ix = quasi_inverse_1(model, x)?;
    let iy = quasi_inverse_1(model, y)?;
    let mut t = delta2(model, Structure::S, &ix, wx, &iy, wy)?;
    let corr = quasi_inverse_1(model, &delta_f2(model, x, wx, y, wy)?)?;
    t = t.sub(&corr)?;
    Ok(cone_h_q(model.th(), &model.q, &t)?.neg())
}

/// Third Taylor coefficient via the recursion
/// `Ĩ¹₃ = −H̃_Q ( δ¹₂ Ĩ²₃ + δ¹₃ Ĩ³₃ − Ĩ¹₂ δ²_{F,3} )`.
pub fn quasi_inverse_3<C: Scalar>(
    model: &HamModel<C>,
    xs: [&LocalForm<C>; 3],
    ws: [i64; 3],
) -> Result<ConeElement<C>> {
    let ivs: Vec<ConeElement<C>> = xs
        .iter()
        .map(|x| quasi_inverse_1(model, x))
        .collect::<Result<_>>()?;
    let mut acc = ConeElement::zero();
    // δ¹₂ Ĩ²₃: Taylor components of the comorphism
    for i in 0..3 {
        let rest: Vec<usize> = (0..3).filter(|&j| j != i).collect();
        let perm = {
            let mut p = vec![i];
            p.extend(&rest);
            p
        };
        let sgn = koszul_perm(&ws, &perm);
        let pair = quasi_inverse_2(model, xs[rest[0]], ws[rest[0]], xs[rest[1]], ws[rest[1]])?;
        let w_pair = ws[rest[0]] + ws[rest[1]] + 1;
        let t = delta2(model, Structure::S, &ivs[i], ws[i], &pair, w_pair)?;
        acc = acc.add(&t.scale_int_cone(sgn))?;
    }
    // δ¹₃ Ĩ³₃
    acc = acc.add(&delta3(model, [&ivs[0], &ivs[1], &ivs[2]], ws)?)?;
    // − Ĩ¹₂ δ²_{F,3}
    for sh in shuffles(2, 3) {
        let sgn = koszul_perm(&ws, &sh);
        let head = delta_f2(model, xs[sh[0]], ws[sh[0]], xs[sh[1]], ws[sh[1]])?;
        let w_head = ws[sh[0]] + ws[sh[1]] + 1;
        let t = quasi_inverse_2(model, &head, w_head, xs[sh[2]], ws[sh[2]])?;
        acc = acc.sub(&t.scale_int_cone(sgn))?;
    }
    Ok(cone_h_q(model.th(), &model.q, &acc)?.neg())
}

/// Pushes a Maurer–Cartan functional through the quasi-inverse:
/// `Ĩ_MC(ℓ) = ĩℓ + ½Ĩ¹₂(ℓ∨ℓ) + ⅙Ĩ¹₃(ℓ∨ℓ∨ℓ)`.
pub fn push_mc<C: Scalar>(model: &HamModel<C>, ell: &LocalForm<C>) -> Result<ConeElement<C>> {
    let w = w_degree_f(model, ell)?;
    let mut out = quasi_inverse_1(model, ell)?;
    out = out.add(&quasi_inverse_2(model, ell, w, ell, w)?.scale(ratio::<C>(1, 2)))?;
    out = out.add(&quasi_inverse_3(model, [ell, ell, ell], [w, w, w])?.scale(ratio::<C>(1, 6)))?;
    Ok(out)
}

/// Residual of the L∞-morphism condition for the quasi-inverse at arity 2:
/// `δ¹₁Ĩ¹₂ + δ¹₂Ĩ²₂ − Ĩ¹₁δ¹_{F,2} − Ĩ¹₂δ²_{F,2}` on `x ∨ y`.
pub fn morphism_residual_2<C: Scalar>(
    model: &HamModel<C>,
    x: &LocalForm<C>,
    y: &LocalForm<C>,
) -> Result<ConeElement<C>> {
    let wx = w_degree_f(model, x)?;
    let wy = w_degree_f(model, y)?;
    let mut lhs = delta1(model, &quasi_inverse_2(model, x, wx, y, wy)?)?;
    lhs = lhs.add(&delta2(
        model,
        Structure::S,
        &quasi_inverse_1(model, x)?,
        wx,
        &quasi_inverse_1(model, y)?,
        wy,
    )?)?;
    let mut rhs = quasi_inverse_1(model, &delta_f2(model, x, wx, y, wy)?)?;
    for sh in shuffles(1, 2) {
        let sgn = koszul_perm(&[wx, wy], &sh);
        let pair = [x, y];
        let degs = [wx, wy];
        let t = quasi_inverse_2(
            model,
            &delta_f1(model, pair[sh[0]])?,
            degs[sh[0]] + 1,
            pair[sh[1]],
            degs[sh[1]],
        )?;
        rhs = rhs.add(&t.scale_int_cone(sgn))?;
    }
    lhs.sub(&rhs)
}

// ---------------------------------------------------------------------------
// twisting
// ---------------------------------------------------------------------------

/// A Maurer–Cartan element of the S tower with its stored residual report.
#[derive(Debug, Clone)]
pub struct MaurerCartan<C: Scalar> {
    pub value: ConeElement<C>,
    pub residual: ConeElement<C>,
}

impl<C: Scalar> MaurerCartan<C> {
    pub fn is_certified(&self) -> bool {
        self.residual.is_zero()
    }
}

/// Full S-tower Maurer–Cartan residual
/// `(D − L_Q)a + ½{a,a}^S + ⅙{a,a,a}^S`.
pub fn mc_residual_s<C: Scalar>(
    model: &HamModel<C>,
    a: &ConeElement<C>,
) -> Result<ConeElement<C>> {
    let mut r = delta1(model, a)?;
    r = r.add(&bracket_s(model, a, a)?.scale(ratio::<C>(1, 2)))?;
    r = r.add(&three_bracket_s(model, a, a, a)?.scale(ratio::<C>(1, 6)))?;
    Ok(r)
}

pub fn certify_mc<C: Scalar>(model: &HamModel<C>, a: &ConeElement<C>) -> Result<MaurerCartan<C>> {
    Ok(MaurerCartan {
        value: a.clone(),
        residual: mc_residual_s(model, a)?,
    })
}

/// Twisted arity-1 operator `δ₁ + δ₂(a ∨ ·) + ½δ₃(a ∨ a ∨ ·)` for a
/// certified Maurer–Cartan element `a`.
pub fn twisted_delta1<C: Scalar>(
    model: &HamModel<C>,
    a: &MaurerCartan<C>,
    c: &ConeElement<C>,
) -> Result<ConeElement<C>> {
    if !a.is_certified() {
        return Err(Error::Precondition(
            "twist element is not a certified Maurer-Cartan element".into(),
        ));
    }
    let wa = w_degree(model, &a.value)?;
    let wc = w_degree(model, c)?;
    let mut r = delta1(model, c)?;
    r = r.add(&delta2(model, Structure::S, &a.value, wa, c, wc)?)?;
    r = r.add(
        &delta3(model, [&a.value, &a.value, c], [wa, wa, wc])?.scale(ratio::<C>(1, 2)),
    )?;
    Ok(r)
}

/// Twisted binary bracket `δ₂ + δ₃(a ∨ · ∨ ·)`.
pub fn twisted_delta2<C: Scalar>(
    model: &HamModel<C>,
    a: &MaurerCartan<C>,
    c1: &ConeElement<C>,
    c2: &ConeElement<C>,
) -> Result<ConeElement<C>> {
    if !a.is_certified() {
        return Err(Error::Precondition(
            "twist element is not a certified Maurer-Cartan element".into(),
        ));
    }
    let wa = w_degree(model, &a.value)?;
    let w1 = w_degree(model, c1)?;
    let w2 = w_degree(model, c2)?;
    let mut r = delta2(model, Structure::S, c1, w1, c2, w2)?;
    r = r.add(&delta3(model, [&a.value, c1, c2], [wa, w1, w2])?)?;
    Ok(r)
}

/// Reference multi-index helper re-exported for probe generation.
pub fn zero_index(th: &Theory) -> MultiIndex {
    MultiIndex::zero(th.dimension())
}

/// The projector strictness data: `ℙ{c1,c2}^S − {ℙc1, ℙc2}_ham`.
pub fn projector_strictness<C: Scalar>(
    model: &HamModel<C>,
    c1: &ConeElement<C>,
    c2: &ConeElement<C>,
) -> Result<LocalForm<C>> {
    let th = model.th();
    let lhs = functional_projector(th, &bracket_s(model, c1, c2)?)?;
    let rhs = bracket_ham(
        model,
        &functional_projector(th, c1)?,
        &functional_projector(th, c2)?,
    )?;
    lhs.sub(&rhs)
}

/// Vector-field compatibility residual: `X_{{c1,c2}} − [X_1, X_2]`
/// (componentwise forms; empty means exact agreement).
pub fn vector_field_compat<C: Scalar>(
    model: &HamModel<C>,
    c1: &ConeElement<C>,
    c2: &ConeElement<C>,
) -> Result<Vec<LocalForm<C>>> {
    let th = model.th();
    let x1 = hamiltonian_vector_field(model, &c1.body)?;
    let x2 = hamiltonian_vector_field(model, &c2.body)?;
    let xb = hamiltonian_vector_field(model, &bracket_s(model, c1, c2)?.body)?;
    let xc = field_bracket(th, &x1, &x2)?;
    let mut out = Vec::new();
    for a in th.field_ids() {
        let r = xb.component(a).sub(&xc.component(a))?;
        if !r.is_zero() {
            out.push(r);
        }
    }
    Ok(out)
}
