//! Generic homological perturbation lemma over abstract retract data.
//!
//! Complexes here are infinite-dimensional graded spaces, so retracts are
//! packaged as operator closures and certified pointwise on probe elements;
//! all geometric series are finite by nilpotency, enforced by a hard cap.

use crate::{Error, Result};
use std::rc::Rc;

/// Values of a chain complex the combinator can probe.
pub trait ChainValue: Clone + PartialEq {
    fn add(&self, other: &Self) -> Result<Self>;
    fn neg(&self) -> Self;
    fn is_zero(&self) -> bool;

    fn sub(&self, other: &Self) -> Result<Self> {
        self.add(&other.neg())
    }
}

impl<C: crate::Scalar> ChainValue for crate::localforms::LocalForm<C> {
    fn add(&self, other: &Self) -> Result<Self> {
        crate::localforms::LocalForm::add(self, other)
    }
    fn neg(&self) -> Self {
        crate::localforms::LocalForm::neg(self)
    }
    fn is_zero(&self) -> bool {
        crate::localforms::LocalForm::is_zero(self)
    }
}

impl<C: crate::Scalar> ChainValue for crate::homotopy::ConeElement<C> {
    fn add(&self, other: &Self) -> Result<Self> {
        crate::homotopy::ConeElement::add(self, other)
    }
    fn neg(&self) -> Self {
        crate::homotopy::ConeElement::neg(self)
    }
    fn is_zero(&self) -> bool {
        crate::homotopy::ConeElement::is_zero(self)
    }
}

pub type Op<T> = Rc<dyn Fn(&T) -> Result<T>>;
pub type ChainMap<A, B> = Rc<dyn Fn(&A) -> Result<B>>;

/// Which special-retract side conditions are declared (and re-checked).
#[derive(Debug, Clone, Copy, Default)]
pub struct SideFlags {
    pub h_squared_zero: bool,
    pub h_after_f_zero: bool,
    pub g_after_h_zero: bool,
}

/// A deformation-retract package: complexes `(A, d_A)` and `(B, d_B)`,
/// chain maps `f: A → B` and `g: B → A`, and a homotopy `h` on the big
/// side with `id_B − f∘g = [d_B, h]`.
#[derive(Clone)]
pub struct RetractDatum<A: ChainValue, B: ChainValue> {
    pub d_a: Op<A>,
    pub d_b: Op<B>,
    pub f: ChainMap<A, B>,
    pub g: ChainMap<B, A>,
    pub h: Op<B>,
    pub flags: SideFlags,
    pub cap: usize,
}

fn op_zero<T: ChainValue>(template: &T) -> T {
    template.sub(template).expect("zero")
}

impl<A: ChainValue + 'static, B: ChainValue + 'static> RetractDatum<A, B> {
    /// Residuals of the retract identities on the given probes; all must be
    /// zero (chain-map property of f and g, and the homotopy equation).
    pub fn verify(&self, probes_a: &[A], probes_b: &[B]) -> Result<()> {
        for (i, a) in probes_a.iter().enumerate() {
            let lhs = (self.f)(&(self.d_a)(a)?)?;
            let rhs = (self.d_b)(&(self.f)(a)?)?;
            if !lhs.sub(&rhs)?.is_zero() {
                return Err(Error::Precondition(format!(
                    "f is not a chain map on probe {i}"
                )));
            }
        }
        for (i, b) in probes_b.iter().enumerate() {
            let lhs = (self.g)(&(self.d_b)(b)?)?;
            let rhs = (self.d_a)(&(self.g)(b)?)?;
            if !lhs.sub(&rhs)?.is_zero() {
                return Err(Error::Precondition(format!(
                    "g is not a chain map on probe {i}"
                )));
            }
            // id − f∘g = d_B h + h d_B
            let mut r = b.sub(&(self.f)(&(self.g)(b)?)?)?;
            r = r.sub(&(self.d_b)(&(self.h)(b)?)?)?;
            r = r.sub(&(self.h)(&(self.d_b)(b)?)?)?;
            if !r.is_zero() {
                return Err(Error::Precondition(format!(
                    "homotopy equation fails on probe {i}"
                )));
            }
            if self.flags.h_squared_zero && !(self.h)(&(self.h)(b)?)?.is_zero() {
                return Err(Error::Precondition(format!("h^2 != 0 on probe {i}")));
            }
            if self.flags.g_after_h_zero && !(self.g)(&(self.h)(b)?)?.is_zero() {
                return Err(Error::Precondition(format!("g∘h != 0 on probe {i}")));
            }
        }
        if self.flags.h_after_f_zero {
            for (i, a) in probes_a.iter().enumerate() {
                if !(self.h)(&(self.f)(a)?)?.is_zero() {
                    return Err(Error::Precondition(format!("h∘f != 0 on probe {i}")));
                }
            }
        }
        Ok(())
    }

    /// Perturb the big-side differential by `k` (with `(d_B + k)² = 0` on
    /// the probe set, checked by `verify` on the output). Returns the
    /// perturbed retract with the standard geometric-series maps, all sums
    /// finite within the nilpotency cap.
    pub fn perturb(&self, k: Op<B>) -> RetractDatum<A, B> {
        let cap = self.cap;
        let h = self.h.clone();
        let d_b = self.d_b.clone();
        let d_a = self.d_a.clone();
        let f = self.f.clone();
        let g = self.g.clone();

        // Σ (−kh)^i applied to x
        let sum_kh = {
            let k = k.clone();
            let h = h.clone();
            move |x: &B| -> Result<B> {
                let mut acc = x.clone();
                let mut cur = x.clone();
                for _ in 0..cap {
                    cur = k(&h(&cur)?)?.neg();
                    if cur.is_zero() {
                        return Ok(acc);
                    }
                    acc = acc.add(&cur)?;
                }
                Err(Error::NilpotencyBound("perturbation series (kh)"))
            }
        };
        let sum_hk = {
            let k = k.clone();
            let h = h.clone();
            move |x: &B| -> Result<B> {
                let mut acc = x.clone();
                let mut cur = x.clone();
                for _ in 0..cap {
                    cur = h(&k(&cur)?)?.neg();
                    if cur.is_zero() {
                        return Ok(acc);
                    }
                    acc = acc.add(&cur)?;
                }
                Err(Error::NilpotencyBound("perturbation series (hk)"))
            }
        };

        let f_t: ChainMap<A, B> = {
            let f = f.clone();
            let sum_hk = sum_hk.clone();
            Rc::new(move |a: &A| sum_hk(&f(a)?))
        };
        let g_t: ChainMap<B, A> = {
            let g = g.clone();
            let sum_kh = sum_kh.clone();
            Rc::new(move |b: &B| g(&sum_kh(b)?))
        };
        let h_t: Op<B> = {
            let h = h.clone();
            let sum_kh = sum_kh.clone();
            Rc::new(move |b: &B| h(&sum_kh(b)?))
        };
        let d_a_t: Op<A> = {
            let f = f.clone();
            let g = g.clone();
            let k = k.clone();
            let d_a = d_a.clone();
            let sum_kh = sum_kh.clone();
            Rc::new(move |a: &A| {
                let t = g(&sum_kh(&k(&f(a)?)?)?)?;
                d_a(a)?.add(&t)
            })
        };
        let d_b_t: Op<B> = {
            let d_b = d_b.clone();
            let k = k.clone();
            Rc::new(move |b: &B| d_b(b)?.add(&k(b)?))
        };

        RetractDatum {
            d_a: d_a_t,
            d_b: d_b_t,
            f: f_t,
            g: g_t,
            h: h_t,
            flags: SideFlags::default(),
            cap,
        }
    }
}

/// A homotopy equivalence with homotopies on both sides.
#[derive(Clone)]
pub struct HomotopyEquivalence<A: ChainValue, B: ChainValue> {
    pub d_a: Op<A>,
    pub d_b: Op<B>,
    pub f: ChainMap<A, B>,
    pub g: ChainMap<B, A>,
    pub h_a: Op<A>,
    pub h_b: Op<B>,
}

impl<A: ChainValue + 'static, B: ChainValue + 'static> HomotopyEquivalence<A, B> {
    pub fn from_retract(r: &RetractDatum<A, B>) -> Self
    where
        A: 'static,
    {
        HomotopyEquivalence {
            d_a: r.d_a.clone(),
            d_b: r.d_b.clone(),
            f: r.f.clone(),
            g: r.g.clone(),
            h_a: Rc::new(|a: &A| Ok(op_zero(a))),
            h_b: r.h.clone(),
        }
    }

    /// Composition of homotopy equivalences `A ⇄ B` and `B ⇄ C`, with
    /// `H_A = h_A − g∘h̃_B∘f` and `H_C = h_C − i∘h_B∘j`.
    pub fn compose<Cc: ChainValue + 'static>(
        first: &HomotopyEquivalence<A, B>,
        second: &HomotopyEquivalence<B, Cc>,
    ) -> HomotopyEquivalence<A, Cc> {
        let f_comp: ChainMap<A, Cc> = {
            let f1 = first.f.clone();
            let f2 = second.f.clone();
            Rc::new(move |a| f2(&f1(a)?))
        };
        let g_comp: ChainMap<Cc, A> = {
            let g1 = first.g.clone();
            let g2 = second.g.clone();
            Rc::new(move |c| g1(&g2(c)?))
        };
        let h_a: Op<A> = {
            let h_a1 = first.h_a.clone();
            let g1 = first.g.clone();
            let f1 = first.f.clone();
            let hb2 = second.h_a.clone();
            Rc::new(move |a| {
                let t = g1(&hb2(&f1(a)?)?)?;
                h_a1(a)?.sub(&t)
            })
        };
        let h_c: Op<Cc> = {
            let h_c2 = second.h_b.clone();
            let i2 = second.f.clone();
            let j2 = second.g.clone();
            let hb1 = first.h_b.clone();
            Rc::new(move |c| {
                let t = i2(&hb1(&j2(c)?)?)?;
                h_c2(c)?.sub(&t)
            })
        };
        HomotopyEquivalence {
            d_a: first.d_a.clone(),
            d_b: second.d_b.clone(),
            f: f_comp,
            g: g_comp,
            h_a,
            h_b: h_c,
        }
    }

    /// Residuals `[d, H_A] − (id − g∘f)` and `[d, H_B] − (id − f∘g)` on
    /// probes; both must vanish.
    pub fn verify(&self, probes_a: &[A], probes_b: &[B]) -> Result<()> {
        for (i, a) in probes_a.iter().enumerate() {
            let mut r = a.sub(&(self.g)(&(self.f)(a)?)?)?;
            r = r.sub(&(self.d_a)(&(self.h_a)(a)?)?)?;
            r = r.sub(&(self.h_a)(&(self.d_a)(a)?)?)?;
            if !r.is_zero() {
                return Err(Error::Precondition(format!(
                    "A-side homotopy equation fails on probe {i}"
                )));
            }
        }
        for (i, b) in probes_b.iter().enumerate() {
            let mut r = b.sub(&(self.f)(&(self.g)(b)?)?)?;
            r = r.sub(&(self.d_b)(&(self.h_b)(b)?)?)?;
            r = r.sub(&(self.h_b)(&(self.d_b)(b)?)?)?;
            if !r.is_zero() {
                return Err(Error::Precondition(format!(
                    "B-side homotopy equation fails on probe {i}"
                )));
            }
        }
        Ok(())
    }
}
