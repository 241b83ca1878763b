//! Differential operators of the variational bicomplex: total derivatives,
//! the horizontal and vertical differentials, evolutionary vector fields
//! with their Cartan calculus, the interior Euler operator and
//! Euler–Lagrange extraction.
//!
//! Sign conventions are pinned here once and regression-tested everywhere:
//! `d_H x = Σ_i dx^i ∧ D_i x` with `dx^i` on the left; all other operator
//! parities follow from the total degree.

use crate::localforms::{Generator, LocalForm, MultiIndex};
use crate::scalar::Scalar;
use crate::theory::{FieldId, Theory};
use crate::{Error, Result};
use std::collections::BTreeMap;

/// Total derivative in the i-th base direction (an even derivation).
pub fn total_derivative<C: Scalar>(
    th: &Theory,
    i: usize,
    x: &LocalForm<C>,
) -> Result<LocalForm<C>> {
    x.graded_derivation(th, 0, &mut |g| {
        Ok(match g {
            Generator::Jet(a, ix) => Some(LocalForm::generator(
                th,
                Generator::Jet(*a, ix.bump(i)),
            )?),
            Generator::Vert(a, ix) => Some(LocalForm::generator(
                th,
                Generator::Vert(*a, ix.bump(i)),
            )?),
            Generator::Base(j) => {
                if *j == i {
                    Some(LocalForm::one())
                } else {
                    None
                }
            }
            Generator::Horiz(_) => None,
        })
    })
}

/// Iterated total derivative over a multi-index.
pub fn total_derivative_multi<C: Scalar>(
    th: &Theory,
    ix: &MultiIndex,
    x: &LocalForm<C>,
) -> Result<LocalForm<C>> {
    let mut out = x.clone();
    for (i, &k) in ix.0.iter().enumerate() {
        for _ in 0..k {
            out = total_derivative(th, i, &out)?;
        }
    }
    Ok(out)
}

/// Horizontal differential `d_H = Σ_i dx^i ∧ D_i`.
pub fn d_h<C: Scalar>(th: &Theory, x: &LocalForm<C>) -> Result<LocalForm<C>> {
    let mut out = LocalForm::zero();
    for i in 0..th.dimension() {
        let dxi = LocalForm::generator(th, Generator::Horiz(i))?;
        out = out.add(&dxi.wedge(th, &total_derivative(th, i, x)?)?)?;
    }
    Ok(out)
}

/// Vertical differential: the odd derivation sending `u^a_I` to `du^a_I`.
pub fn d_v<C: Scalar>(th: &Theory, x: &LocalForm<C>) -> Result<LocalForm<C>> {
    x.graded_derivation(th, 1, &mut |g| {
        Ok(match g {
            Generator::Jet(a, ix) => Some(LocalForm::generator(
                th,
                Generator::Vert(*a, ix.clone()),
            )?),
            _ => None,
        })
    })
}

/// Total differential `d = d_V + d_H`.
pub fn d_tot<C: Scalar>(th: &Theory, x: &LocalForm<C>) -> Result<LocalForm<C>> {
    d_v(th, x)?.add(&d_h(th, x)?)
}

/// A local (evolutionary) vector field, given by its generating sections:
/// per-field forms of bidegree (0,0). Prolongation to all jets acts by
/// total derivatives and is computed on demand.
#[derive(Debug, Clone, PartialEq)]
pub struct EvolutionaryField<C: Scalar> {
    pub ghost: i64,
    pub components: BTreeMap<FieldId, LocalForm<C>>,
}

impl<C: Scalar> EvolutionaryField<C> {
    pub fn new(ghost: i64, components: BTreeMap<FieldId, LocalForm<C>>) -> Self {
        let components = components
            .into_iter()
            .filter(|(_, f)| !f.is_zero())
            .collect();
        EvolutionaryField { ghost, components }
    }

    pub fn zero(ghost: i64) -> Self {
        EvolutionaryField {
            ghost,
            components: BTreeMap::new(),
        }
    }

    pub fn is_zero(&self) -> bool {
        self.components.values().all(|f| f.is_zero())
    }

    pub fn component(&self, a: FieldId) -> LocalForm<C> {
        self.components.get(&a).cloned().unwrap_or_else(LocalForm::zero)
    }

    /// Validates the ghost bookkeeping: ghd(X^a) = ghd(X) + ghd(u^a).
    pub fn check_ghosts(&self, th: &Theory) -> Result<()> {
        for (a, f) in &self.components {
            let want = self.ghost + th.ghost(*a);
            for g in f.ghd_set(th) {
                if g != want {
                    return Err(Error::Precondition(format!(
                        "component for field `{}` has ghost {} (expected {})",
                        th.field_name(*a),
                        g,
                        want
                    )));
                }
            }
            let ds = f.degrees(th)?;
            if let Some(d) = ds {
                if d.vfd != 0 || d.hfd != 0 {
                    return Err(Error::Precondition(format!(
                        "component for field `{}` is not a (0,0)-form",
                        th.field_name(*a)
                    )));
                }
            }
        }
        Ok(())
    }

    /// The graded Euler vector field: components ghd(u^a) · u^a.
    pub fn euler(th: &Theory) -> Result<Self> {
        let mut components = BTreeMap::new();
        for a in th.field_ids() {
            let g = th.ghost(a);
            if g != 0 {
                let ua = LocalForm::generator(
                    th,
                    Generator::Jet(a, MultiIndex::zero(th.dimension())),
                )?;
                components.insert(a, ua.scale_int(g));
            }
        }
        Ok(EvolutionaryField::new(0, components))
    }
}

/// Graded interior product with the prolongation of an evolutionary field:
/// `du^a_I ↦ D_I X^a`, extended as a derivation of total degree ghd(X) − 1.
pub fn prolong_contract<C: Scalar>(
    th: &Theory,
    x_field: &EvolutionaryField<C>,
    x: &LocalForm<C>,
) -> Result<LocalForm<C>> {
    let parity = (x_field.ghost - 1).rem_euclid(2);
    let mut cache: BTreeMap<(FieldId, MultiIndex), LocalForm<C>> = BTreeMap::new();
    x.graded_derivation(th, parity, &mut |g| {
        Ok(match g {
            Generator::Vert(a, ix) => {
                let key = (*a, ix.clone());
                if let Some(v) = cache.get(&key) {
                    Some(v.clone())
                } else {
                    let comp = x_field.component(*a);
                    let v = total_derivative_multi(th, ix, &comp)?;
                    cache.insert(key, v.clone());
                    Some(v)
                }
            }
            _ => None,
        })
    })
}

/// Lie derivative `L_X = [ι_X, d_V]` (graded commutator).
pub fn lie_derivative<C: Scalar>(
    th: &Theory,
    x_field: &EvolutionaryField<C>,
    x: &LocalForm<C>,
) -> Result<LocalForm<C>> {
    let a = prolong_contract(th, x_field, &d_v(th, x)?)?;
    let b = d_v(th, &prolong_contract(th, x_field, x)?)?;
    if x_field.ghost.rem_euclid(2) == 0 {
        a.add(&b)
    } else {
        a.sub(&b)
    }
}

/// Graded bracket of evolutionary fields:
/// `[X,Y]^a = L_X(Y^a) − (−1)^{ghd X · ghd Y} L_Y(X^a)`.
pub fn field_bracket<C: Scalar>(
    th: &Theory,
    x: &EvolutionaryField<C>,
    y: &EvolutionaryField<C>,
) -> Result<EvolutionaryField<C>> {
    let sign = (x.ghost * y.ghost).rem_euclid(2) == 1;
    let mut components = BTreeMap::new();
    for a in th.field_ids() {
        let t1 = lie_derivative(th, x, &y.component(a))?;
        let t2 = lie_derivative(th, y, &x.component(a))?;
        let t = if sign { t1.add(&t2)? } else { t1.sub(&t2)? };
        if !t.is_zero() {
            components.insert(a, t);
        }
    }
    Ok(EvolutionaryField::new(x.ghost + y.ghost, components))
}

/// Interior Euler operator Π.
///
/// Keeps only the top-horizontal part and, per vertical degree p ≥ 1,
/// applies `(1/p) Σ_a du^a ∧ Σ_I (−D)_I ∂_{du^a_I}`. Satisfies Π² = Π,
/// Π∘d_H = 0, and vanishes below top horizontal degree.
pub fn interior_euler<C: Scalar>(th: &Theory, x: &LocalForm<C>) -> Result<LocalForm<C>> {
    let top = x.project_top(th);
    if top.vfd_set().contains(&0) {
        return Err(Error::VerticalDegreeZero { op: "interior_euler" });
    }
    let n = th.dimension();
    let mut out = LocalForm::zero();
    for (p, fp) in top.vfd_parts() {
        let max_ord = fp.max_order(true) as i64;
        let mut acc = LocalForm::zero();
        for a in th.field_ids() {
            for ix in MultiIndex::all_up_to(n, max_ord) {
                let g = Generator::Vert(a, ix.clone());
                let mut t = fp.partial(th, &g)?;
                if t.is_zero() {
                    continue;
                }
                for (i, &k) in ix.0.iter().enumerate() {
                    for _ in 0..k {
                        t = total_derivative(th, i, &t)?.neg();
                    }
                }
                let dua = LocalForm::generator(
                    th,
                    Generator::Vert(a, MultiIndex::zero(n)),
                )?;
                acc = acc.add(&dua.wedge(th, &t)?)?;
            }
        }
        out = out.add(&acc.scale(crate::scalar::ratio::<C>(1, p)))?;
    }
    Ok(out)
}

/// Euler–Lagrange source form of a Lagrangian density: `Π ∘ d_V`.
pub fn euler_lagrange<C: Scalar>(th: &Theory, lagrangian: &LocalForm<C>) -> Result<LocalForm<C>> {
    if let Some(d) = lagrangian.degrees(th)? {
        if d.vfd != 0 || d.hfd != th.dimension() as i64 {
            return Err(Error::Precondition(format!(
                "Euler-Lagrange input must have bidegree (0, {}), got ({}, {})",
                th.dimension(),
                d.vfd,
                d.hfd
            )));
        }
    }
    interior_euler(th, &d_v(th, lagrangian)?)
}
