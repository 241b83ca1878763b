//! The free graded-commutative algebra underlying the bicomplex of local
//! forms: jet variables, base coordinates, vertical and horizontal
//! generators, with canonical normalization and Koszul signs taken in the
//! total degree (form degree plus ghost degree).

use crate::scalar::{int, Scalar};
use crate::theory::{FieldId, Theory, TheoryId};
use crate::Error;
use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

/// Symmetric multi-index of derivative orders, one entry per base coordinate.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct MultiIndex(pub Vec<u8>);

impl MultiIndex {
    pub fn zero(n: usize) -> MultiIndex {
        MultiIndex(vec![0; n])
    }

    pub fn unit(n: usize, i: usize) -> MultiIndex {
        let mut v = vec![0; n];
        v[i] = 1;
        MultiIndex(v)
    }

    pub fn order(&self) -> u32 {
        self.0.iter().map(|&k| k as u32).sum()
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn bump(&self, i: usize) -> MultiIndex {
        let mut v = self.0.clone();
        v[i] += 1;
        MultiIndex(v)
    }

    pub fn plus(&self, other: &MultiIndex) -> MultiIndex {
        MultiIndex(
            self.0
                .iter()
                .zip(&other.0)
                .map(|(a, b)| a + b)
                .collect(),
        )
    }

    pub fn contains(&self, other: &MultiIndex) -> bool {
        self.0.iter().zip(&other.0).all(|(a, b)| a >= b)
    }

    /// All multi-indices of length `n` with total order at most `maxord`,
    /// in (order, lex) order.
    pub fn all_up_to(n: usize, maxord: i64) -> Vec<MultiIndex> {
        let mut out = Vec::new();
        if maxord < 0 {
            return out;
        }
        let mut cur = vec![0u8; n];
        loop {
            if cur.iter().map(|&k| k as i64).sum::<i64>() <= maxord {
                out.push(MultiIndex(cur.clone()));
            }
            // odometer over 0..=maxord per slot
            let mut i = 0;
            loop {
                if i == n {
                    out.sort_by_key(|m| (m.order(), m.0.clone()));
                    return out;
                }
                if (cur[i] as i64) < maxord {
                    cur[i] += 1;
                    break;
                }
                cur[i] = 0;
                i += 1;
            }
        }
    }
}

/// One of the four generator kinds of the free algebra.
///
/// The derived ordering (base coordinates, then jet variables, then vertical
/// generators, then horizontal generators; fields and multi-indices
/// lexicographic within a kind) is the fixed global generator order used for
/// canonical normal forms.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Generator {
    /// Base coordinate x^i.
    Base(usize),
    /// Jet variable u^a_I.
    Jet(FieldId, MultiIndex),
    /// Vertical generator du^a_I.
    Vert(FieldId, MultiIndex),
    /// Horizontal generator dx^i.
    Horiz(usize),
}

impl Generator {
    /// Total degree: form degree plus ghost degree.
    pub fn total_degree(&self, th: &Theory) -> i64 {
        match self {
            Generator::Base(_) => 0,
            Generator::Jet(a, _) => th.ghost(*a),
            Generator::Vert(a, _) => th.ghost(*a) + 1,
            Generator::Horiz(_) => 1,
        }
    }

    pub fn is_odd(&self, th: &Theory) -> bool {
        self.total_degree(th).rem_euclid(2) == 1
    }

    fn validate(&self, th: &Theory) -> Result<(), Error> {
        match self {
            Generator::Base(i) | Generator::Horiz(i) => {
                if *i >= th.dimension() {
                    return Err(Error::DimensionMismatch {
                        got: *i + 1,
                        dim: th.dimension(),
                    });
                }
            }
            Generator::Jet(a, ix) | Generator::Vert(a, ix) => {
                if a.0 >= th.num_fields() {
                    return Err(Error::UnknownField(format!("#{}", a.0)));
                }
                if ix.len() != th.dimension() {
                    return Err(Error::DimensionMismatch {
                        got: ix.len(),
                        dim: th.dimension(),
                    });
                }
                if ix.order() > th.jet_cap() {
                    return Err(Error::JetCapExceeded { cap: th.jet_cap() });
                }
            }
        }
        Ok(())
    }
}

/// Canonically ordered word of generators with exponents.
pub type Word = Vec<(Generator, u32)>;

fn word_parity(th: &Theory, w: &[(Generator, u32)]) -> i64 {
    w.iter()
        .map(|(g, e)| g.total_degree(th) * (*e as i64))
        .sum::<i64>()
        .rem_euclid(2)
}

/// Merge a sorted word `extra` into sorted `items`, accumulating the Koszul
/// sign. Returns `None` when an odd generator repeats.
fn mul_word(th: &Theory, items: &Word, extra: &Word) -> Option<(Word, i64)> {
    let mut out = items.clone();
    let mut sign = 1i64;
    for (g, e) in extra {
        let p = (g.total_degree(th) * (*e as i64)).rem_euclid(2);
        let mut pos = out.len();
        let mut passed = 0i64;
        while pos > 0 && out[pos - 1].0 > *g {
            passed =
                (passed + out[pos - 1].0.total_degree(th) * (out[pos - 1].1 as i64)).rem_euclid(2);
            pos -= 1;
        }
        if p == 1 && passed == 1 {
            sign = -sign;
        }
        if pos > 0 && out[pos - 1].0 == *g {
            if g.is_odd(th) {
                return None;
            }
            out[pos - 1].1 += e;
        } else {
            out.insert(pos, (g.clone(), *e));
        }
    }
    Some((out, sign))
}

/// An element of the bicomplex of local forms: a finite sum of canonically
/// normalized terms with [`Scalar`] coefficients. Zero-coefficient terms are
/// never stored, so equality is syntactic equality of the term maps.
#[derive(Debug, Clone, PartialEq)]
pub struct LocalForm<C: Scalar> {
    pub(crate) theory: TheoryId,
    pub(crate) terms: BTreeMap<Word, C>,
}

impl<C: Scalar> LocalForm<C> {
    pub fn zero() -> Self {
        LocalForm {
            theory: TheoryId::ANY,
            terms: BTreeMap::new(),
        }
    }

    pub fn unit(c: C) -> Self {
        let mut terms = BTreeMap::new();
        if !c.is_zero() {
            terms.insert(Vec::new(), c);
        }
        LocalForm {
            theory: TheoryId::ANY,
            terms,
        }
    }

    pub fn one() -> Self {
        Self::unit(C::one())
    }

    /// A single generator as a form, validated against the theory.
    pub fn generator(th: &Theory, g: Generator) -> crate::Result<Self> {
        g.validate(th)?;
        let mut terms = BTreeMap::new();
        terms.insert(vec![(g, 1)], C::one());
        Ok(LocalForm {
            theory: th.id(),
            terms,
        })
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn num_terms(&self) -> usize {
        self.terms.len()
    }

    pub fn terms(&self) -> impl Iterator<Item = (&Word, &C)> {
        self.terms.iter()
    }

    fn tag(&self, other: &Self) -> crate::Result<TheoryId> {
        Ok(self.theory.merge(other.theory)?)
    }

    pub(crate) fn insert_term(&mut self, w: Word, c: C) {
        if c.is_zero() {
            return;
        }
        match self.terms.entry(w) {
            std::collections::btree_map::Entry::Vacant(e) => {
                e.insert(c);
            }
            std::collections::btree_map::Entry::Occupied(mut e) => {
                let s = e.get().clone() + c;
                if s.is_zero() {
                    e.remove();
                } else {
                    *e.get_mut() = s;
                }
            }
        }
    }

    pub fn add(&self, other: &Self) -> crate::Result<Self> {
        let theory = self.tag(other)?;
        let mut out = self.clone();
        out.theory = theory;
        for (w, c) in &other.terms {
            out.insert_term(w.clone(), c.clone());
        }
        if out.terms.is_empty() {
            out.theory = TheoryId::ANY;
        }
        Ok(out)
    }

    pub fn sub(&self, other: &Self) -> crate::Result<Self> {
        self.add(&other.neg())
    }

    pub fn neg(&self) -> Self {
        self.scale_ref(&(-C::one()))
    }

    pub fn scale(&self, c: C) -> Self {
        self.scale_ref(&c)
    }

    fn scale_ref(&self, c: &C) -> Self {
        if c.is_zero() {
            return Self::zero();
        }
        LocalForm {
            theory: self.theory,
            terms: self
                .terms
                .iter()
                .map(|(w, x)| (w.clone(), x.clone() * c.clone()))
                .collect(),
        }
    }

    pub fn scale_int(&self, n: i64) -> Self {
        self.scale(int::<C>(n))
    }

    /// Graded-commutative product with Koszul signs in total degree.
    pub fn wedge(&self, th: &Theory, other: &Self) -> crate::Result<Self> {
        let theory = self.tag(other)?;
        let mut out = LocalForm {
            theory,
            terms: BTreeMap::new(),
        };
        for (w1, c1) in &self.terms {
            for (w2, c2) in &other.terms {
                if let Some((w, s)) = mul_word(th, w1, w2) {
                    let mut c = c1.clone() * c2.clone();
                    if s < 0 {
                        c = -c;
                    }
                    out.insert_term(w, c);
                }
            }
        }
        if out.terms.is_empty() {
            out.theory = TheoryId::ANY;
        }
        Ok(out)
    }

    /// The (vfd = p, hfd = q) component.
    pub fn project_bidegree(&self, p: i64, q: i64) -> Self {
        self.filter(|w| word_vfd(w) == p && word_hfd(w) == q)
    }

    /// The hfd = n component (top horizontal degree).
    pub fn project_top(&self, th: &Theory) -> Self {
        let n = th.dimension() as i64;
        self.filter(|w| word_hfd(w) == n)
    }

    pub(crate) fn filter(&self, keep: impl Fn(&Word) -> bool) -> Self {
        let terms: BTreeMap<Word, C> = self
            .terms
            .iter()
            .filter(|(w, _)| keep(w))
            .map(|(w, c)| (w.clone(), c.clone()))
            .collect();
        LocalForm {
            theory: if terms.is_empty() {
                TheoryId::ANY
            } else {
                self.theory
            },
            terms,
        }
    }

    /// Pullback along the zero section: kills jet variables and vertical
    /// generators, leaving a form on the base.
    pub fn zero_section_pullback(&self) -> Self {
        self.filter(|w| {
            w.iter()
                .all(|(g, _)| matches!(g, Generator::Base(_) | Generator::Horiz(_)))
        })
    }

    /// Decomposition by vertical form degree.
    pub fn vfd_parts(&self) -> BTreeMap<i64, Self> {
        self.split(word_vfd)
    }

    /// Decomposition by fiber weight (polynomial degree in jets plus vfd).
    pub fn weight_parts(&self) -> BTreeMap<i64, Self> {
        self.split(word_weight)
    }

    fn split(&self, key: impl Fn(&Word) -> i64) -> BTreeMap<i64, Self> {
        let mut out: BTreeMap<i64, Self> = BTreeMap::new();
        for (w, c) in &self.terms {
            let e = out.entry(key(w)).or_insert_with(|| LocalForm {
                theory: self.theory,
                terms: BTreeMap::new(),
            });
            e.terms.insert(w.clone(), c.clone());
        }
        out
    }

    pub fn vfd_set(&self) -> BTreeSet<i64> {
        self.terms.keys().map(|w| word_vfd(w)).collect()
    }

    pub fn hfd_set(&self) -> BTreeSet<i64> {
        self.terms.keys().map(|w| word_hfd(w)).collect()
    }

    pub fn ghd_set(&self, th: &Theory) -> BTreeSet<i64> {
        self.terms.keys().map(|w| word_ghd(th, w)).collect()
    }

    pub fn ped_set(&self, th: &Theory) -> BTreeSet<i64> {
        let n = th.dimension() as i64;
        self.terms
            .keys()
            .map(|w| word_ghd(th, w) - (n - word_hfd(w)))
            .collect()
    }

    /// The partial effective degree, when homogeneous (`None` for zero).
    pub fn ped(&self, th: &Theory) -> crate::Result<Option<i64>> {
        let s = self.ped_set(th);
        match s.len() {
            0 => Ok(None),
            1 => Ok(Some(*s.iter().next().unwrap())),
            _ => Err(Error::Inhomogeneous("partial effective degree")),
        }
    }

    /// All eight degree functions, for a degree-homogeneous form.
    /// Returns `None` for the zero form (which has every degree).
    pub fn degrees(&self, th: &Theory) -> crate::Result<Option<Degrees>> {
        if self.is_zero() {
            return Ok(None);
        }
        let vs = self.vfd_set();
        let hs = self.hfd_set();
        let gs = self.ghd_set(th);
        if vs.len() != 1 {
            return Err(Error::Inhomogeneous("vertical form degree"));
        }
        if hs.len() != 1 {
            return Err(Error::Inhomogeneous("horizontal form degree"));
        }
        if gs.len() != 1 {
            return Err(Error::Inhomogeneous("ghost degree"));
        }
        let n = th.dimension() as i64;
        let vfd = *vs.iter().next().unwrap();
        let hfd = *hs.iter().next().unwrap();
        let ghd = *gs.iter().next().unwrap();
        let hcd = n - hfd;
        let efd = vfd - hcd;
        Ok(Some(Degrees {
            vfd,
            hfd,
            hcd,
            ghd,
            tfd: efd + n,
            efd,
            ped: ghd - hcd,
            ted: ghd + efd,
        }))
    }

    /// Maximum derivative order among generators of the given kind.
    pub fn max_order(&self, vertical: bool) -> u32 {
        self.terms
            .keys()
            .flat_map(|w| w.iter())
            .filter_map(|(g, _)| match g {
                Generator::Jet(_, ix) if !vertical => Some(ix.order()),
                Generator::Vert(_, ix) if vertical => Some(ix.order()),
                _ => None,
            })
            .max()
            .unwrap_or(0)
    }

    /// Graded derivation defined by its action on generators.
    ///
    /// `parity` is the derivation's total-degree parity; `act` returns the
    /// image of a generator (`None` meaning zero). Exponents are handled by
    /// the usual Leibniz rule; signs come from the prefix total degree.
    pub fn graded_derivation(
        &self,
        th: &Theory,
        parity: i64,
        act: &mut dyn FnMut(&Generator) -> crate::Result<Option<LocalForm<C>>>,
    ) -> crate::Result<Self> {
        let parity = parity.rem_euclid(2);
        let mut out = LocalForm {
            theory: self.theory,
            terms: BTreeMap::new(),
        };
        for (w, c) in &self.terms {
            let mut prefix_parity = 0i64;
            for (idx, (g, e)) in w.iter().enumerate() {
                if let Some(img) = act(g)? {
                    if !img.is_zero() {
                        // prefix ∧ img ∧ g^{e-1} ∧ suffix
                        let mut rest: Word = Vec::with_capacity(w.len());
                        if *e > 1 {
                            rest.push((g.clone(), e - 1));
                        }
                        rest.extend_from_slice(&w[idx + 1..]);
                        let sign_neg = parity == 1 && prefix_parity == 1;
                        for (wi, ci) in &img.terms {
                            if let Some((w2, s2)) = mul_word(th, &w[..idx].to_vec(), wi) {
                                if let Some((w3, s3)) = mul_word(th, &w2, &rest) {
                                    let mut coeff =
                                        c.clone() * ci.clone() * int::<C>(*e as i64);
                                    if (s2 * s3 < 0) != sign_neg {
                                        coeff = -coeff;
                                    }
                                    out.insert_term(w3, coeff);
                                }
                            }
                        }
                    }
                }
                prefix_parity =
                    (prefix_parity + g.total_degree(th) * (*e as i64)).rem_euclid(2);
            }
        }
        out.theory = out.theory.merge(th.id())?;
        if out.terms.is_empty() {
            out.theory = TheoryId::ANY;
        }
        Ok(out)
    }

    /// Graded left partial derivative with respect to a single generator.
    pub fn partial(&self, th: &Theory, gen: &Generator) -> crate::Result<Self> {
        let parity = gen.total_degree(th).rem_euclid(2);
        self.graded_derivation(th, parity, &mut |g| {
            Ok(if g == gen {
                Some(LocalForm::one())
            } else {
                None
            })
        })
    }

    pub fn display<'a>(&'a self, th: &'a Theory) -> DisplayForm<'a, C> {
        DisplayForm { form: self, th }
    }
}

pub(crate) fn word_vfd(w: &Word) -> i64 {
    w.iter()
        .map(|(g, e)| match g {
            Generator::Vert(_, _) => *e as i64,
            _ => 0,
        })
        .sum()
}

pub(crate) fn word_hfd(w: &Word) -> i64 {
    w.iter()
        .map(|(g, e)| match g {
            Generator::Horiz(_) => *e as i64,
            _ => 0,
        })
        .sum()
}

pub(crate) fn word_ghd(th: &Theory, w: &Word) -> i64 {
    w.iter()
        .map(|(g, e)| {
            (g.total_degree(th)
                - match g {
                    Generator::Vert(_, _) | Generator::Horiz(_) => 1,
                    _ => 0,
                })
                * (*e as i64)
        })
        .sum()
}

pub(crate) fn word_weight(w: &Word) -> i64 {
    w.iter()
        .map(|(g, e)| match g {
            Generator::Jet(_, _) | Generator::Vert(_, _) => *e as i64,
            _ => 0,
        })
        .sum()
}

/// The eight degree functions of a homogeneous local form.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Degrees {
    pub vfd: i64,
    pub hfd: i64,
    pub hcd: i64,
    pub ghd: i64,
    pub tfd: i64,
    pub efd: i64,
    pub ped: i64,
    pub ted: i64,
}

pub struct DisplayForm<'a, C: Scalar> {
    form: &'a LocalForm<C>,
    th: &'a Theory,
}

impl<C: Scalar> fmt::Display for DisplayForm<'_, C> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.form.is_zero() {
            return write!(f, "0");
        }
        let mut first = true;
        for (w, c) in &self.form.terms {
            if !first {
                write!(f, " + ")?;
            }
            first = false;
            write!(f, "{}", c)?;
            for (g, e) in w {
                write!(f, "*")?;
                match g {
                    Generator::Base(i) => write!(f, "{}", self.th.coordinate_name(*i))?,
                    Generator::Jet(a, ix) => {
                        write!(f, "{}", self.th.field_name(*a))?;
                        write_index(f, self.th, ix)?;
                    }
                    Generator::Vert(a, ix) => {
                        write!(f, "dV({}", self.th.field_name(*a))?;
                        write_index(f, self.th, ix)?;
                        write!(f, ")")?;
                    }
                    Generator::Horiz(i) => {
                        write!(f, "dx({})", self.th.coordinate_name(*i))?
                    }
                }
                if *e > 1 {
                    write!(f, "^{}", e)?;
                }
            }
        }
        Ok(())
    }
}

fn write_index(f: &mut fmt::Formatter<'_>, th: &Theory, ix: &MultiIndex) -> fmt::Result {
    if ix.order() == 0 {
        return Ok(());
    }
    write!(f, "_{{")?;
    let mut first = true;
    for (i, &k) in ix.0.iter().enumerate() {
        for _ in 0..k {
            if !first {
                write!(f, ",")?;
            }
            first = false;
            write!(f, "{}", th.coordinate_name(i))?;
        }
    }
    write!(f, "}}")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::theory::FieldDecl;
    use crate::Rat;

    fn th1() -> Theory {
        Theory::new(
            1,
            vec![
                FieldDecl { name: "u".into(), ghost: 0 },
                FieldDecl { name: "up".into(), ghost: -1 },
            ],
        )
        .unwrap()
    }

    fn gen(th: &Theory, g: Generator) -> LocalForm<Rat> {
        LocalForm::generator(th, g).unwrap()
    }

    #[test]
    fn odd_generator_squares_to_zero() {
        let th = th1();
        let du = gen(&th, Generator::Vert(FieldId(0), MultiIndex::zero(1)));
        assert!(du.wedge(&th, &du).unwrap().is_zero());
        // the odd jet variable up also squares to zero
        let up = gen(&th, Generator::Jet(FieldId(1), MultiIndex::zero(1)));
        assert!(up.wedge(&th, &up).unwrap().is_zero());
    }

    #[test]
    fn even_vertical_generator_does_not_square_to_zero() {
        let th = th1();
        // dV(up) has total degree 0, so it is even and may repeat
        let dup = gen(&th, Generator::Vert(FieldId(1), MultiIndex::zero(1)));
        let sq = dup.wedge(&th, &dup).unwrap();
        assert!(!sq.is_zero());
    }

    #[test]
    fn koszul_symmetry() {
        let th = th1();
        let dx = gen(&th, Generator::Horiz(0));
        let du = gen(&th, Generator::Vert(FieldId(0), MultiIndex::zero(1)));
        // dx ∧ du = -(du ∧ dx) since both are odd
        let a = dx.wedge(&th, &du).unwrap();
        let b = du.wedge(&th, &dx).unwrap();
        assert_eq!(a, b.neg());
    }

    #[test]
    fn commutation_and_merge() {
        let th = th1();
        let u = gen(&th, Generator::Jet(FieldId(0), MultiIndex::zero(1)));
        let dx = gen(&th, Generator::Horiz(0));
        // 2 (u dx) + 3 (dx u) = 5 u dx for even u
        let a = u.wedge(&th, &dx).unwrap().scale_int(2);
        let b = dx.wedge(&th, &u).unwrap().scale_int(3);
        let s = a.add(&b).unwrap();
        assert_eq!(s, u.wedge(&th, &dx).unwrap().scale_int(5));
    }

    #[test]
    fn degrees_report() {
        let th = th1();
        let ux = gen(&th, Generator::Jet(FieldId(0), MultiIndex::unit(1, 0)));
        let du = gen(&th, Generator::Vert(FieldId(0), MultiIndex::zero(1)));
        let dx = gen(&th, Generator::Horiz(0));
        let f = ux
            .wedge(&th, &du)
            .unwrap()
            .wedge(&th, &dx)
            .unwrap();
        let d = f.degrees(&th).unwrap().unwrap();
        assert_eq!((d.vfd, d.hfd, d.hcd, d.ghd, d.ped, d.ted), (1, 1, 0, 0, 0, 1));
        assert_eq!(d.tfd, d.efd + 1);
        // zero has every degree
        assert!(LocalForm::<Rat>::zero().degrees(&th).unwrap().is_none());
    }

    #[test]
    fn zero_section_pullback_is_algebra_map() {
        let th = th1();
        let u = gen(&th, Generator::Jet(FieldId(0), MultiIndex::zero(1)));
        let dx = gen(&th, Generator::Horiz(0));
        let one = LocalForm::<Rat>::one();
        let f = one.add(&u).unwrap().wedge(&th, &dx).unwrap();
        assert_eq!(f.zero_section_pullback(), dx);
        let x = gen(&th, Generator::Base(0));
        let g = x.add(&u).unwrap();
        let lhs = f.wedge(&th, &g).unwrap().zero_section_pullback();
        let rhs = f
            .zero_section_pullback()
            .wedge(&th, &g.zero_section_pullback())
            .unwrap();
        assert_eq!(lhs, rhs);
    }

    #[test]
    fn cross_theory_mixing_rejected() {
        let th_a = th1();
        let th_b = th1();
        let a = gen(&th_a, Generator::Jet(FieldId(0), MultiIndex::zero(1)));
        let b = gen(&th_b, Generator::Jet(FieldId(0), MultiIndex::zero(1)));
        assert!(matches!(a.add(&b), Err(Error::CrossTheory)));
    }

    #[test]
    fn jet_cap_enforced() {
        let th = Theory::with_options(
            1,
            vec![FieldDecl { name: "u".into(), ghost: 0 }],
            None,
            3,
        )
        .unwrap();
        let deep = Generator::Jet(FieldId(0), MultiIndex(vec![4]));
        assert!(matches!(
            LocalForm::<Rat>::generator(&th, deep),
            Err(Error::JetCapExceeded { .. })
        ));
    }
}
