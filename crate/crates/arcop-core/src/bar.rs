//! Double-sided bar complexes `B_n(A_S, A, A_T)` for open windows and the
//! reduced cyclic bar complex for closed windows, together with their
//! differentials, degeneracies, the involution, factorwise trace pairings,
//! Casimir elements and Casimir composition of correlators.
//!
//! Elements are stored extensionally as maps from basis tuples to scalars.
//! An open tuple is `[s, m_1, .., m_n, t]` with `s` in the `S`-brane algebra,
//! middles in the closed algebra and `t` in the `T`-brane algebra; a closed
//! tuple is `[a_0, m_1, .., m_n]`, all in the closed algebra, with middles
//! required to avoid the unit basis vector (the reduced complex, realized by
//! basis filtration).

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use crate::algebra::{BraneSystem, FrobeniusAlgebra, Vector};
use crate::error::{Error, Result};
use crate::field::Field;

/// The brane colour of a window: closed, or open with its pair of endpoint
/// labels in orientation order.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Debug)]
pub enum WindowLabel {
    Closed,
    Open(String, String),
}

impl WindowLabel {
    /// The involution on labels: `bar(S,T) = (T,S)`, `bar(closed) = closed`.
    pub fn bar(&self) -> WindowLabel {
        match self {
            WindowLabel::Closed => WindowLabel::Closed,
            WindowLabel::Open(s, t) => WindowLabel::Open(t.clone(), s.clone()),
        }
    }

    pub fn is_closed(&self) -> bool {
        matches!(self, WindowLabel::Closed)
    }

    /// Number of tensor factors of a degree-`n` element.
    pub fn tuple_len(&self, n: usize) -> usize {
        match self {
            WindowLabel::Closed => n + 1,
            WindowLabel::Open(..) => n + 2,
        }
    }
}

/// The algebra sitting at tensor position `pos` of a degree-`n` element.
fn algebra_at<'a, F: Field>(
    sys: &'a BraneSystem<F>,
    label: &WindowLabel,
    n: usize,
    pos: usize,
) -> Result<&'a FrobeniusAlgebra<F>> {
    match label {
        WindowLabel::Closed => Ok(&sys.closed),
        WindowLabel::Open(s, t) => {
            if pos == 0 {
                Ok(&sys.brane(s)?.algebra)
            } else if pos == n + 1 {
                Ok(&sys.brane(t)?.algebra)
            } else {
                Ok(&sys.closed)
            }
        }
    }
}

fn unit_idx<F: Field>(alg: &FrobeniusAlgebra<F>) -> Result<usize> {
    alg.unit_index.ok_or_else(|| Error::MalformedGraph {
        detail: format!("algebra '{}' must have the unit as a basis vector", alg.name),
    })
}

/// A homogeneous element of a bar space, as a linear combination of basis
/// tuples.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct BarElement<F: Field> {
    pub label: WindowLabel,
    pub degree: usize,
    pub terms: BTreeMap<Vec<usize>, F>,
}

impl<F: Field> BarElement<F> {
    pub fn zero(label: WindowLabel, degree: usize) -> Self {
        BarElement { label, degree, terms: BTreeMap::new() }
    }

    pub fn from_tuple(label: WindowLabel, degree: usize, tuple: Vec<usize>) -> Result<Self> {
        if tuple.len() != label.tuple_len(degree) {
            return Err(Error::DegreeMismatch {
                expected: label.tuple_len(degree),
                found: tuple.len(),
            });
        }
        let mut terms = BTreeMap::new();
        terms.insert(tuple, F::one());
        Ok(BarElement { label, degree, terms })
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn add_term(&mut self, tuple: Vec<usize>, coeff: F) {
        debug_assert_eq!(tuple.len(), self.label.tuple_len(self.degree));
        if coeff.is_zero() {
            return;
        }
        let entry = self.terms.entry(tuple.clone()).or_insert_with(F::zero);
        *entry = entry.add(&coeff);
        if entry.is_zero() {
            self.terms.remove(&tuple);
        }
    }

    pub fn add(&self, other: &BarElement<F>) -> BarElement<F> {
        debug_assert_eq!(self.label, other.label);
        debug_assert_eq!(self.degree, other.degree);
        let mut out = self.clone();
        for (t, c) in &other.terms {
            out.add_term(t.clone(), c.clone());
        }
        out
    }

    pub fn scale(&self, c: &F) -> BarElement<F> {
        let mut out = BarElement::zero(self.label.clone(), self.degree);
        for (t, v) in &self.terms {
            let s = v.mul(c);
            if !s.is_zero() {
                out.terms.insert(t.clone(), s);
            }
        }
        out
    }

    /// Whether a closed-sector element avoids the unit in all middle slots.
    /// Open elements are vacuously reduced.
    pub fn is_reduced(&self, sys: &BraneSystem<F>) -> Result<bool> {
        if !self.label.is_closed() {
            return Ok(true);
        }
        let u = unit_idx(&sys.closed)?;
        Ok(self.terms.keys().all(|t| t[1..].iter().all(|&m| m != u)))
    }
}

/// Replace position `pos` of `tuple` by each basis component of
/// `replacement`, distributing the coefficient.
fn expand_at<F: Field>(
    out: &mut BarElement<F>,
    coeff: &F,
    tuple: &[usize],
    pos: usize,
    replacement: &Vector<F>,
) {
    for (k, c) in replacement.iter().enumerate() {
        if c.is_zero() {
            continue;
        }
        let mut t = tuple.to_vec();
        t[pos] = k;
        out.add_term(t, coeff.mul(c));
    }
}

/// Project a closed-sector element to the reduced complex: tuples with a unit
/// basis vector in a middle slot span the degenerate subcomplex and are
/// dropped.
fn reduce_closed<F: Field>(sys: &BraneSystem<F>, x: BarElement<F>) -> Result<BarElement<F>> {
    if !x.label.is_closed() {
        return Ok(x);
    }
    let u = unit_idx(&sys.closed)?;
    let mut out = BarElement::zero(x.label.clone(), x.degree);
    for (t, c) in x.terms {
        if t[1..].iter().all(|&m| m != u) {
            out.terms.insert(t, c);
        }
    }
    Ok(out)
}

/// The pre-simplicial differential `d = sum_i (-1)^i d_i`.
///
/// For open labels the end factors are modules through the restriction maps:
/// `d_0` multiplies `a_S r_S(a_1)` and `d_n` multiplies `r_T(a_n) a_T`. For
/// closed labels the last face is cyclic, `d_n = a_n a_0 (x) ..`, and the
/// result is projected back to the reduced complex. Degree-0 input gives the
/// zero element.
pub fn differential<F: Field>(sys: &BraneSystem<F>, x: &BarElement<F>) -> Result<BarElement<F>> {
    let n = x.degree;
    if n == 0 {
        return Ok(BarElement::zero(x.label.clone(), 0));
    }
    let mut out = BarElement::zero(x.label.clone(), n - 1);
    let minus_one = F::zero().sub(&F::one());

    for (tuple, coeff) in &x.terms {
        let mut sign = F::one();
        for i in 0..=n {
            let c = coeff.mul(&sign);
            match &x.label {
                WindowLabel::Open(s, t) => {
                    let sb = sys.brane(s)?;
                    let tb = sys.brane(t)?;
                    if i == 0 {
                        // a_S r_S(a_1) (x) a_2 ..
                        let prod = sb.algebra.mul(
                            &sb.algebra.basis_vector(tuple[0]),
                            &sb.restriction.apply(&sys.closed.basis_vector(tuple[1])),
                        );
                        let mut rest: Vec<usize> = Vec::with_capacity(n + 1);
                        rest.push(0);
                        rest.extend_from_slice(&tuple[2..]);
                        expand_at(&mut out, &c, &rest, 0, &prod);
                    } else if i == n {
                        // .. (x) r_T(a_n) a_T
                        let prod = tb.algebra.mul(
                            &tb.restriction.apply(&sys.closed.basis_vector(tuple[n])),
                            &tb.algebra.basis_vector(tuple[n + 1]),
                        );
                        let mut rest: Vec<usize> = tuple[..n].to_vec();
                        rest.push(0);
                        let last = rest.len() - 1;
                        expand_at(&mut out, &c, &rest, last, &prod);
                    } else {
                        let prod = sys.closed.mul_basis(tuple[i], tuple[i + 1]);
                        let mut rest: Vec<usize> = Vec::with_capacity(n + 1);
                        rest.extend_from_slice(&tuple[..i]);
                        rest.push(0);
                        rest.extend_from_slice(&tuple[i + 2..]);
                        expand_at(&mut out, &c, &rest, i, prod);
                    }
                }
                WindowLabel::Closed => {
                    if i == n {
                        // a_n a_0 (x) a_1 .. a_{n-1}
                        let prod = sys.closed.mul_basis(tuple[n], tuple[0]);
                        let mut rest: Vec<usize> = Vec::with_capacity(n);
                        rest.push(0);
                        rest.extend_from_slice(&tuple[1..n]);
                        expand_at(&mut out, &c, &rest, 0, prod);
                    } else {
                        let prod = sys.closed.mul_basis(tuple[i], tuple[i + 1]);
                        let mut rest: Vec<usize> = Vec::with_capacity(n);
                        rest.extend_from_slice(&tuple[..i]);
                        rest.push(0);
                        rest.extend_from_slice(&tuple[i + 2..]);
                        expand_at(&mut out, &c, &rest, i, prod);
                    }
                }
            }
            sign = sign.mul(&minus_one);
        }
    }
    reduce_closed(sys, out)
}

/// Degeneracy `s_i`: insert the unit so that it becomes the `i`-th middle
/// factor, `1 <= i <= n+1`.
pub fn degeneracy<F: Field>(
    sys: &BraneSystem<F>,
    i: usize,
    x: &BarElement<F>,
) -> Result<BarElement<F>> {
    let n = x.degree;
    if i == 0 || i > n + 1 {
        return Err(Error::IndexOutOfRange { index: i, len: n + 1 });
    }
    let u = unit_idx(&sys.closed)?;
    let mut out = BarElement::zero(x.label.clone(), n + 1);
    for (tuple, coeff) in &x.terms {
        let mut t = Vec::with_capacity(tuple.len() + 1);
        t.extend_from_slice(&tuple[..i]);
        t.push(u);
        t.extend_from_slice(&tuple[i..]);
        out.add_term(t, coeff.clone());
    }
    Ok(out)
}

/// The involution `a_S (x) a_1 .. a_n (x) a_T -> a_T (x) a_n .. a_1 (x) a_S`
/// into the bar space of the barred label; on closed elements it fixes the
/// zeroth factor and reverses the rest. Applying it twice is the identity.
pub fn involution<F: Field>(x: &BarElement<F>) -> BarElement<F> {
    let mut out = BarElement::zero(x.label.bar(), x.degree);
    for (tuple, coeff) in &x.terms {
        out.terms.insert(involute_tuple(&x.label, tuple), coeff.clone());
    }
    out
}

/// Tuple-level involution.
pub fn involute_tuple(label: &WindowLabel, tuple: &[usize]) -> Vec<usize> {
    match label {
        WindowLabel::Closed => {
            let mut t = Vec::with_capacity(tuple.len());
            t.push(tuple[0]);
            t.extend(tuple[1..].iter().rev().copied());
            t
        }
        WindowLabel::Open(..) => tuple.iter().rev().copied().collect(),
    }
}

/// Per-position basis sizes of `B_n(label)`.
pub fn slot_dims<F: Field>(
    sys: &BraneSystem<F>,
    label: &WindowLabel,
    n: usize,
) -> Result<Vec<usize>> {
    let len = label.tuple_len(n);
    let mut dims = Vec::with_capacity(len);
    for pos in 0..len {
        dims.push(algebra_at(sys, label, n, pos)?.dim());
    }
    Ok(dims)
}

/// All basis tuples of `B_n(label)`, the full (unreduced) space.
pub fn basis_tuples<F: Field>(
    sys: &BraneSystem<F>,
    label: &WindowLabel,
    n: usize,
) -> Result<Vec<Vec<usize>>> {
    let dims = slot_dims(sys, label, n)?;
    Ok(enumerate_tuples(&dims))
}

/// Basis tuples of the reduced complex: for closed labels, middles avoid the
/// unit; open labels are unreduced.
pub fn basis_tuples_reduced<F: Field>(
    sys: &BraneSystem<F>,
    label: &WindowLabel,
    n: usize,
) -> Result<Vec<Vec<usize>>> {
    let all = basis_tuples(sys, label, n)?;
    if !label.is_closed() {
        return Ok(all);
    }
    let u = unit_idx(&sys.closed)?;
    Ok(all.into_iter().filter(|t| t[1..].iter().all(|&m| m != u)).collect())
}

pub fn enumerate_tuples(dims: &[usize]) -> Vec<Vec<usize>> {
    let mut out = vec![Vec::new()];
    for &d in dims {
        let mut next = Vec::with_capacity(out.len() * d);
        for t in &out {
            for k in 0..d {
                let mut t2 = t.clone();
                t2.push(k);
                next.push(t2);
            }
        }
        out = next;
    }
    out
}

/// Factorwise trace pairing of `B_n(label)` with `B_n(bar label)`, with the
/// reversal built in: `<x, y> = prod_pos <x_pos, bar(y)_pos>`.
pub fn pair_tuples<F: Field>(
    sys: &BraneSystem<F>,
    label: &WindowLabel,
    n: usize,
    x: &[usize],
    y_barred: &[usize],
) -> Result<F> {
    let yb = involute_tuple(&label.bar(), y_barred);
    let mut out = F::one();
    for pos in 0..label.tuple_len(n) {
        let alg = algebra_at(sys, label, n, pos)?;
        out = out.mul(&alg.metric[x[pos]][yb[pos]]);
        if out.is_zero() {
            return Ok(out);
        }
    }
    Ok(out)
}

pub fn pair_elements<F: Field>(
    sys: &BraneSystem<F>,
    x: &BarElement<F>,
    y: &BarElement<F>,
) -> Result<F> {
    if x.degree != y.degree {
        return Err(Error::DegreeMismatch { expected: x.degree, found: y.degree });
    }
    if y.label != x.label.bar() {
        return Err(Error::PairingMismatch {
            detail: String::from("pairing requires the barred label"),
        });
    }
    let mut out = F::zero();
    for (tx, cx) in &x.terms {
        for (ty, cy) in &y.terms {
            let p = pair_tuples(sys, &x.label, x.degree, tx, ty)?;
            out = out.add(&cx.mul(cy).mul(&p));
        }
    }
    Ok(out)
}

/// Inverse-Gram entry between a basis tuple of `B_n(label)` and one of
/// `B_n(bar label)`: the Gram matrix of the factorwise pairing is a permuted
/// tensor product of the small metrics, so its inverse is the tensor product
/// of the inverse metrics.
pub fn casimir_weight<F: Field>(
    sys: &BraneSystem<F>,
    label: &WindowLabel,
    n: usize,
    x: &[usize],
    y_barred: &[usize],
) -> Result<F> {
    let yb = involute_tuple(&label.bar(), y_barred);
    let mut out = F::one();
    for pos in 0..label.tuple_len(n) {
        let alg = algebra_at(sys, label, n, pos)?;
        out = out.mul(&alg.metric_inv[x[pos]][yb[pos]]);
        if out.is_zero() {
            return Ok(out);
        }
    }
    Ok(out)
}

/// The Casimir of `B_n(label)`: triples `(t, t', c)` with `t` a basis tuple
/// of `B_n(label)`, `t'` one of `B_n(bar label)` and `c` the inverse-Gram
/// coefficient, such that `sum_tt' <x, t'> c <t, y> = <x, y>`.
pub fn casimir<F: Field>(
    sys: &BraneSystem<F>,
    label: &WindowLabel,
    n: usize,
) -> Result<Vec<(Vec<usize>, Vec<usize>, F)>> {
    let tuples = basis_tuples(sys, label, n)?;
    let bar_tuples = basis_tuples(sys, &label.bar(), n)?;
    let mut out = Vec::new();
    for t in &tuples {
        for tb in &bar_tuples {
            let c = casimir_weight(sys, label, n, t, tb)?;
            if !c.is_zero() {
                out.push((t.clone(), tb.clone(), c));
            }
        }
    }
    Ok(out)
}

/// One slot of a correlator: a window colour with a fixed bar degree.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct Slot {
    pub label: WindowLabel,
    pub degree: usize,
}

/// A finite multilinear functional on fixed-degree bar-basis tuples, one slot
/// per window, stored extensionally.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct Correlator<F: Field> {
    pub slots: Vec<Slot>,
    pub table: BTreeMap<Vec<Vec<usize>>, F>,
}

impl<F: Field> Correlator<F> {
    pub fn zero(slots: Vec<Slot>) -> Self {
        Correlator { slots, table: BTreeMap::new() }
    }

    pub fn add_term(&mut self, key: Vec<Vec<usize>>, coeff: F) {
        if coeff.is_zero() {
            return;
        }
        let entry = self.table.entry(key.clone()).or_insert_with(F::zero);
        *entry = entry.add(&coeff);
        if entry.is_zero() {
            self.table.remove(&key);
        }
    }

    pub fn is_zero(&self) -> bool {
        self.table.is_empty()
    }

    /// Evaluate on one basis tuple per slot.
    pub fn value(&self, key: &[Vec<usize>]) -> F {
        self.table.get(key).cloned().unwrap_or_else(F::zero)
    }

    /// Evaluate multilinearly on bar elements, one per slot. Degree or label
    /// mismatch gives zero.
    pub fn evaluate_on(&self, inputs: &[BarElement<F>]) -> Result<F> {
        if inputs.len() != self.slots.len() {
            return Err(Error::IndexOutOfRange { index: inputs.len(), len: self.slots.len() });
        }
        for (slot, x) in self.slots.iter().zip(inputs) {
            if x.label != slot.label || x.degree != slot.degree {
                return Ok(F::zero());
            }
        }
        let mut out = F::zero();
        for (key, c) in &self.table {
            let mut term = c.clone();
            for (slot_key, x) in key.iter().zip(inputs) {
                match x.terms.get(slot_key) {
                    Some(v) => term = term.mul(v),
                    None => {
                        term = F::zero();
                        break;
                    }
                }
            }
            out = out.add(&term);
        }
        Ok(out)
    }

    /// Reorder slots by `perm`, where `perm[new] = old`.
    pub fn permute_slots(&self, perm: &[usize]) -> Correlator<F> {
        let slots = perm.iter().map(|&o| self.slots[o].clone()).collect();
        let mut table = BTreeMap::new();
        for (key, c) in &self.table {
            let k2: Vec<Vec<usize>> = perm.iter().map(|&o| key[o].clone()).collect();
            table.insert(k2, c.clone());
        }
        Correlator { slots, table }
    }
}

/// Compose two correlators by inserting a Casimir at the paired slots.
///
/// When the labels do not satisfy `label(l0) = bar(label(l0'))` the
/// composition is the zero correlator; distinct fixed degrees are an error.
/// Remaining slots are ordered left-then-right.
pub fn compose_correlators<F: Field>(
    sys: &BraneSystem<F>,
    y1: &Correlator<F>,
    l0: usize,
    y2: &Correlator<F>,
    l0p: usize,
) -> Result<Correlator<F>> {
    let s1 = y1.slots[l0].clone();
    let s2 = y2.slots[l0p].clone();
    let out_slots: Vec<Slot> = y1
        .slots
        .iter()
        .enumerate()
        .filter(|(i, _)| *i != l0)
        .map(|(_, s)| s.clone())
        .chain(y2.slots.iter().enumerate().filter(|(i, _)| *i != l0p).map(|(_, s)| s.clone()))
        .collect();
    if s1.degree != s2.degree {
        return Err(Error::DegreeMismatch { expected: s1.degree, found: s2.degree });
    }
    if s2.label != s1.label.bar() {
        return Ok(Correlator::zero(out_slots));
    }
    let mut out = Correlator::zero(out_slots);
    for (k1, c1) in &y1.table {
        for (k2, c2) in &y2.table {
            let w = casimir_weight(sys, &s1.label, s1.degree, &k1[l0], &k2[l0p])?;
            if w.is_zero() {
                continue;
            }
            let mut key: Vec<Vec<usize>> = Vec::with_capacity(out.slots.len());
            for (i, t) in k1.iter().enumerate() {
                if i != l0 {
                    key.push(t.clone());
                }
            }
            for (i, t) in k2.iter().enumerate() {
                if i != l0p {
                    key.push(t.clone());
                }
            }
            out.add_term(key, c1.mul(c2).mul(&w));
        }
    }
    Ok(out)
}

/// Self-composition: contract two distinct slots of one correlator with a
/// Casimir.
pub fn compose_self<F: Field>(
    sys: &BraneSystem<F>,
    y: &Correlator<F>,
    l1: usize,
    l2: usize,
) -> Result<Correlator<F>> {
    assert!(l1 != l2);
    let s1 = y.slots[l1].clone();
    let s2 = y.slots[l2].clone();
    let out_slots: Vec<Slot> = y
        .slots
        .iter()
        .enumerate()
        .filter(|(i, _)| *i != l1 && *i != l2)
        .map(|(_, s)| s.clone())
        .collect();
    if s1.degree != s2.degree {
        return Err(Error::DegreeMismatch { expected: s1.degree, found: s2.degree });
    }
    if s2.label != s1.label.bar() {
        return Ok(Correlator::zero(out_slots));
    }
    let mut out = Correlator::zero(out_slots);
    for (k, c) in &y.table {
        let w = casimir_weight(sys, &s1.label, s1.degree, &k[l1], &k[l2])?;
        if w.is_zero() {
            continue;
        }
        let key: Vec<Vec<usize>> = k
            .iter()
            .enumerate()
            .filter(|(i, _)| *i != l1 && *i != l2)
            .map(|(_, t)| t.clone())
            .collect();
        out.add_term(key, c.mul(&w));
    }
    Ok(out)
}

/// A homogeneous element of a tensor product of bar spaces.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct TensorElement<F: Field> {
    pub slots: Vec<Slot>,
    pub terms: BTreeMap<Vec<Vec<usize>>, F>,
}

impl<F: Field> TensorElement<F> {
    pub fn zero(slots: Vec<Slot>) -> Self {
        TensorElement { slots, terms: BTreeMap::new() }
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn add_term(&mut self, key: Vec<Vec<usize>>, coeff: F) {
        if coeff.is_zero() {
            return;
        }
        let entry = self.terms.entry(key.clone()).or_insert_with(F::zero);
        *entry = entry.add(&coeff);
        if entry.is_zero() {
            self.terms.remove(&key);
        }
    }

    /// A single bar element, when there is exactly one slot.
    pub fn into_bar_element(self) -> Option<BarElement<F>> {
        if self.slots.len() != 1 {
            return None;
        }
        let slot = self.slots.into_iter().next().unwrap();
        let mut out = BarElement::zero(slot.label, slot.degree);
        for (k, c) in self.terms {
            out.terms.insert(k.into_iter().next().unwrap(), c);
        }
        Some(out)
    }
}

/// Dualize a correlator at the chosen slots: the remaining slots take the
/// given inputs and each chosen slot becomes an output in the barred bar
/// space, via its Casimir. Contracting the output against the pairing
/// recovers the original correlator.
pub fn dualize<F: Field>(
    sys: &BraneSystem<F>,
    y: &Correlator<F>,
    out_slots: &[usize],
    inputs: &[BarElement<F>],
) -> Result<TensorElement<F>> {
    let in_slots: Vec<usize> = (0..y.slots.len()).filter(|i| !out_slots.contains(i)).collect();
    if inputs.len() != in_slots.len() {
        return Err(Error::IndexOutOfRange { index: inputs.len(), len: in_slots.len() });
    }
    let result_slots: Vec<Slot> = out_slots
        .iter()
        .map(|&i| Slot { label: y.slots[i].label.bar(), degree: y.slots[i].degree })
        .collect();
    let mut out = TensorElement::zero(result_slots);

    for (&slot_idx, x) in in_slots.iter().zip(inputs) {
        let s = &y.slots[slot_idx];
        if x.label != s.label || x.degree != s.degree {
            return Ok(out);
        }
    }

    // Candidate output tuples per chosen slot.
    let mut out_bases: Vec<Vec<Vec<usize>>> = Vec::new();
    for &i in out_slots {
        out_bases.push(basis_tuples(sys, &y.slots[i].label.bar(), y.slots[i].degree)?);
    }

    for (key, c) in &y.table {
        let mut coeff = c.clone();
        for (&slot_idx, x) in in_slots.iter().zip(inputs) {
            match x.terms.get(&key[slot_idx]) {
                Some(v) => coeff = coeff.mul(v),
                None => {
                    coeff = F::zero();
                    break;
                }
            }
        }
        if coeff.is_zero() {
            continue;
        }
        // Transform each output slot through the inverse Gram.
        let mut partial: Vec<(Vec<Vec<usize>>, F)> = vec![(Vec::new(), coeff)];
        for (pos, &slot_idx) in out_slots.iter().enumerate() {
            let s = &y.slots[slot_idx];
            let mut next = Vec::new();
            for cand in &out_bases[pos] {
                let w = casimir_weight(sys, &s.label, s.degree, &key[slot_idx], cand)?;
                if w.is_zero() {
                    continue;
                }
                for (k, cf) in &partial {
                    let mut k2 = k.clone();
                    k2.push(cand.clone());
                    next.push((k2, cf.mul(&w)));
                }
            }
            partial = next;
        }
        for (k, cf) in partial {
            out.add_term(k, cf);
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::algebra::{build_frobenius, AlgebraSpec};
    use crate::field::Rational;
    use alloc::string::ToString;
    use proptest::prelude::*;

    fn q(n: i64) -> Rational {
        Rational::from_integer(n)
    }

    fn pt_system() -> BraneSystem<Rational> {
        let s2 = build_frobenius(&AlgebraSpec {
            name: "s2".into(),
            basis: vec![("1".into(), 0), ("x".into(), 2)],
            unit: vec![q(1), q(0)],
            trace: vec![q(0), q(1)],
            mul: vec![(0, 0, 0, q(1)), (0, 1, 1, q(1)), (1, 0, 1, q(1))],
        })
        .unwrap();
        let pt = build_frobenius(&AlgebraSpec {
            name: "pt".into(),
            basis: vec![("1".into(), 0)],
            unit: vec![q(1)],
            trace: vec![q(1)],
            mul: vec![(0, 0, 0, q(1))],
        })
        .unwrap();
        BraneSystem::new(s2, vec![("b".into(), pt, vec![vec![q(1), q(0)]])]).unwrap()
    }

    fn open_bb() -> WindowLabel {
        WindowLabel::Open("b".to_string(), "b".to_string())
    }

    #[test]
    fn differential_kills_unit_over_point_brane() {
        let sys = pt_system();
        // 1 (x) x (x) 1 in B_1(pt, s2, pt): d = r(x) (x) 1 - 1 (x) r(x) = 0
        let x = BarElement::from_tuple(open_bb(), 1, vec![0, 1, 0]).unwrap();
        let d = differential(&sys, &x).unwrap();
        assert!(d.is_zero());
    }

    #[test]
    fn differential_unit_cancellation() {
        let sys = pt_system();
        let x = BarElement::from_tuple(open_bb(), 1, vec![0, 0, 0]).unwrap();
        let d = differential(&sys, &x).unwrap();
        assert!(d.is_zero());
    }

    #[test]
    fn closed_differential_of_top_tuple_vanishes() {
        let sys = pt_system();
        // x (x) x (x) x reduced of degree 2: every face contains x^2 = 0
        let x = BarElement::from_tuple(WindowLabel::Closed, 2, vec![1, 1, 1]).unwrap();
        let d = differential(&sys, &x).unwrap();
        assert!(d.is_zero());
    }

    #[test]
    fn d_squared_is_zero_up_to_degree_four() {
        let sys = pt_system();
        for label in [open_bb(), WindowLabel::Closed] {
            for n in 2..=4usize {
                for t in basis_tuples_reduced(&sys, &label, n).unwrap() {
                    let x = BarElement::from_tuple(label.clone(), n, t).unwrap();
                    let dd = differential(&sys, &differential(&sys, &x).unwrap()).unwrap();
                    assert!(dd.is_zero(), "d^2 != 0 on {label:?} {x:?}");
                }
            }
        }
    }

    #[test]
    fn degeneracy_inserts_units() {
        let sys = pt_system();
        let x = BarElement::from_tuple(open_bb(), 0, vec![0, 0]).unwrap();
        let s1 = degeneracy(&sys, 1, &x).unwrap();
        assert_eq!(s1, BarElement::from_tuple(open_bb(), 1, vec![0, 0, 0]).unwrap());

        let y = BarElement::from_tuple(open_bb(), 1, vec![0, 1, 0]).unwrap();
        let s1y = degeneracy(&sys, 1, &y).unwrap();
        assert_eq!(s1y, BarElement::from_tuple(open_bb(), 2, vec![0, 0, 1, 0]).unwrap());
        assert!(degeneracy(&sys, 3, &y).is_err());
    }

    #[test]
    fn face_of_degeneracy_is_identity() {
        // d_1 s_1 = id on the closed label, applying the single face by hand.
        let sys = pt_system();
        for t in basis_tuples_reduced(&sys, &WindowLabel::Closed, 2).unwrap() {
            let x = BarElement::from_tuple(WindowLabel::Closed, 2, t).unwrap();
            let s = degeneracy(&sys, 1, &x).unwrap();
            let mut recovered = BarElement::zero(WindowLabel::Closed, 2);
            for (tuple, c) in &s.terms {
                let prod = sys.closed.mul_basis(tuple[1], tuple[2]);
                for (k, v) in prod.iter().enumerate() {
                    if !v.is_zero() {
                        let mut t2 = vec![tuple[0], k];
                        t2.extend_from_slice(&tuple[3..]);
                        recovered.add_term(t2, c.mul(v));
                    }
                }
            }
            assert_eq!(recovered, x);
        }
    }

    #[test]
    fn involution_is_an_involution() {
        let sys = pt_system();
        for label in [open_bb(), WindowLabel::Closed] {
            for t in basis_tuples(&sys, &label, 2).unwrap() {
                let x = BarElement::<Rational>::from_tuple(label.clone(), 2, t).unwrap();
                assert_eq!(involution(&involution(&x)), x);
            }
        }
    }

    #[test]
    fn involution_examples() {
        let x = BarElement::<Rational>::from_tuple(open_bb(), 2, vec![0, 1, 0, 0]).unwrap();
        let b = involution(&x);
        assert_eq!(b.terms.keys().next().unwrap(), &vec![0, 0, 1, 0]);
        let z = BarElement::<Rational>::from_tuple(WindowLabel::Closed, 2, vec![1, 0, 1]).unwrap();
        let bz = involution(&z);
        assert_eq!(bz.terms.keys().next().unwrap(), &vec![1, 1, 0]);
    }

    #[test]
    fn involution_commutes_with_differential_up_to_degree_sign() {
        // bar(d x) = (-1)^n d(bar x) on open labels over commutative branes.
        let sys = pt_system();
        for n in 1..=3usize {
            let minus_one = q(0).sub(&q(1));
            let mut sign = q(1);
            for _ in 0..n {
                sign = sign.mul(&minus_one);
            }
            for t in basis_tuples(&sys, &open_bb(), n).unwrap() {
                let x = BarElement::from_tuple(open_bb(), n, t).unwrap();
                let lhs = involution(&differential(&sys, &x).unwrap());
                let rhs = differential(&sys, &involution(&x)).unwrap().scale(&sign);
                assert_eq!(lhs, rhs);
            }
        }
    }

    #[test]
    fn casimir_of_point_brane_is_single_pair() {
        let sys = pt_system();
        let c = casimir(&sys, &open_bb(), 0).unwrap();
        assert_eq!(c, vec![(vec![0, 0], vec![0, 0], q(1))]);
    }

    #[test]
    fn closed_casimir_reproduces_antidiagonal_metric() {
        let sys = pt_system();
        let c = casimir(&sys, &WindowLabel::Closed, 0).unwrap();
        assert_eq!(c, vec![(vec![0], vec![1], q(1)), (vec![1], vec![0], q(1))]);
    }

    #[test]
    fn casimir_resolves_identity_on_b0_and_b1() {
        let sys = pt_system();
        for label in [WindowLabel::Closed, open_bb()] {
            for n in [0usize, 1] {
                let tuples = basis_tuples(&sys, &label, n).unwrap();
                let cas = casimir(&sys, &label, n).unwrap();
                for x in &tuples {
                    for y in &tuples {
                        let y_barred = involute_tuple(&label, y);
                        let mut s = q(0);
                        for (t, tb, c) in &cas {
                            let left = pair_tuples(&sys, &label, n, x, tb).unwrap();
                            let right =
                                pair_tuples(&sys, &label.bar(), n, &y_barred, t).unwrap();
                            s = s.add(&left.mul(c).mul(&right));
                        }
                        let direct = pair_tuples(&sys, &label, n, x, &y_barred).unwrap();
                        assert_eq!(s, direct);
                    }
                }
            }
        }
    }

    fn annulus_pairing(sys: &BraneSystem<Rational>, n: usize) -> Correlator<Rational> {
        // The weight-(n+1) annulus correlator: product of factorwise traces.
        let slots = vec![
            Slot { label: WindowLabel::Closed, degree: n },
            Slot { label: WindowLabel::Closed, degree: n },
        ];
        let mut y = Correlator::zero(slots);
        let tuples = basis_tuples(sys, &WindowLabel::Closed, n).unwrap();
        for a in &tuples {
            for b in &tuples {
                let v = pair_tuples(sys, &WindowLabel::Closed, n, a, b).unwrap();
                y.add_term(vec![a.clone(), b.clone()], v);
            }
        }
        y
    }

    #[test]
    fn annulus_correlator_is_idempotent_under_composition() {
        let sys = pt_system();
        for n in [0usize, 1] {
            let y = annulus_pairing(&sys, n);
            let yy = compose_correlators(&sys, &y, 1, &y, 0).unwrap();
            assert_eq!(yy.slots.len(), 2);
            assert_eq!(yy.table, y.table);
        }
    }

    #[test]
    fn mismatched_labels_compose_to_zero() {
        let sys = pt_system();
        let yo = Correlator::<Rational> {
            slots: vec![Slot { label: open_bb(), degree: 0 }],
            table: BTreeMap::from([(vec![vec![0, 0]], q(1))]),
        };
        let yc = Correlator::<Rational> {
            slots: vec![Slot { label: WindowLabel::Closed, degree: 0 }],
            table: BTreeMap::from([(vec![vec![0]], q(1))]),
        };
        let z = compose_correlators(&sys, &yo, 0, &yc, 0).unwrap();
        assert!(z.is_zero());
    }

    #[test]
    fn degree_mismatch_is_an_error() {
        let sys = pt_system();
        let y0 = annulus_pairing(&sys, 0);
        let y1 = annulus_pairing(&sys, 1);
        assert!(matches!(
            compose_correlators(&sys, &y0, 1, &y1, 0),
            Err(Error::DegreeMismatch { .. })
        ));
    }

    #[test]
    fn dualized_annulus_is_identity_on_b0() {
        let sys = pt_system();
        let y = annulus_pairing(&sys, 0);
        for t in basis_tuples(&sys, &WindowLabel::Closed, 0).unwrap() {
            let x = BarElement::from_tuple(WindowLabel::Closed, 0, t.clone()).unwrap();
            let d = dualize(&sys, &y, &[1], &[x.clone()]).unwrap();
            let e = d.into_bar_element().unwrap();
            assert_eq!(e.terms, x.terms);
        }
    }

    #[test]
    fn dualizing_zero_gives_zero() {
        let sys = pt_system();
        let y = Correlator::<Rational>::zero(vec![
            Slot { label: WindowLabel::Closed, degree: 0 },
            Slot { label: WindowLabel::Closed, degree: 0 },
        ]);
        let x = BarElement::from_tuple(WindowLabel::Closed, 0, vec![0]).unwrap();
        let d = dualize(&sys, &y, &[1], &[x]).unwrap();
        assert!(d.is_zero());
    }

    #[test]
    fn contracting_dualized_output_recovers_correlator() {
        let sys = pt_system();
        let y = annulus_pairing(&sys, 1);
        let tuples = basis_tuples(&sys, &WindowLabel::Closed, 1).unwrap();
        for a in &tuples {
            let xa = BarElement::from_tuple(WindowLabel::Closed, 1, a.clone()).unwrap();
            let d = dualize(&sys, &y, &[1], &[xa]).unwrap().into_bar_element().unwrap();
            for b in &tuples {
                let xb = BarElement::from_tuple(WindowLabel::Closed, 1, b.clone()).unwrap();
                // d lives in the barred space; pair it against the slot value
                let got = pair_elements(&sys, &xb, &d).unwrap();
                let want = y.value(&[a.clone(), b.clone()]);
                assert_eq!(got, want, "a={a:?} b={b:?}");
            }
        }
    }

    proptest! {
        #[test]
        fn composition_is_associative_and_order_independent(seed in 0u64..200) {
            // Three random small correlators on closed B_0 slots, contracted
            // along disjoint slot pairs in both orders.
            let sys = pt_system();
            let dim = 2usize;
            let mut state = seed.wrapping_add(1);
            let mut next = || {
                state = state.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
                ((state >> 33) % 5) as i64 - 2
            };
            let mut mk = || {
                let slots = vec![
                    Slot { label: WindowLabel::Closed, degree: 0 },
                    Slot { label: WindowLabel::Closed, degree: 0 },
                ];
                let mut y = Correlator::zero(slots);
                for a in 0..dim {
                    for b in 0..dim {
                        y.add_term(vec![vec![a], vec![b]], q(next()));
                    }
                }
                y
            };
            let y1 = mk();
            let y2 = mk();
            let y3 = mk();
            let a = compose_correlators(&sys, &y1, 1, &y2, 0).unwrap();
            let ab = compose_correlators(&sys, &a, 1, &y3, 0).unwrap();
            let b = compose_correlators(&sys, &y2, 1, &y3, 0).unwrap();
            let ba = compose_correlators(&sys, &y1, 1, &b, 0).unwrap();
            prop_assert_eq!(ab.table, ba.table);
        }
    }
}
