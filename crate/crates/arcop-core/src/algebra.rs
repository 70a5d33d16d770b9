//! Finite-dimensional Frobenius algebras over an exact field, brane-labelled
//! systems of them, adjoint maps and the compatibility conditions.
//!
//! A Frobenius algebra is given explicitly by a basis with (even) degrees,
//! structure constants, a unit vector and a trace vector. Construction
//! validates associativity, unitality, invariance and nondegeneracy of the
//! pairing `<a,b> = tr(ab)`, then derives the metric, its inverse, the
//! Casimir and the Euler element `e = mu Delta(1)`.

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::field::Field;

/// Coefficient vector over the basis of one algebra.
pub type Vector<F> = Vec<F>;

/// Dense matrix, row-major: `m[row][col]`.
pub type Matrix<F> = Vec<Vec<F>>;

/// Raw description of a Frobenius algebra, before validation.
#[derive(Clone, Debug)]
pub struct AlgebraSpec<F: Field> {
    pub name: String,
    /// Basis labels with their (even, non-negative) degrees.
    pub basis: Vec<(String, u32)>,
    pub unit: Vector<F>,
    pub trace: Vector<F>,
    /// Sparse structure constants: `(i, j, k, c)` meaning the coefficient of
    /// basis `k` in the product `b_i * b_j` is `c`. Zero entries omitted.
    pub mul: Vec<(usize, usize, usize, F)>,
}

/// A validated Frobenius algebra with all derived data.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FrobeniusAlgebra<F: Field> {
    pub name: String,
    pub basis: Vec<(String, u32)>,
    pub unit: Vector<F>,
    pub trace: Vector<F>,
    mul: Vec<Vec<Vector<F>>>,
    /// Metric `g_ij = tr(b_i b_j)`.
    pub metric: Matrix<F>,
    /// Inverse metric `g^ij`.
    pub metric_inv: Matrix<F>,
    /// Euler element `e = sum_ij b_i g^ij b_j`.
    pub euler: Vector<F>,
    /// Index of the unit in the basis, when the unit is a basis vector.
    /// Required for reduced complexes.
    pub unit_index: Option<usize>,
}

impl<F: Field> FrobeniusAlgebra<F> {
    pub fn dim(&self) -> usize {
        self.basis.len()
    }

    pub fn zero_vector(&self) -> Vector<F> {
        vec![F::zero(); self.dim()]
    }

    pub fn basis_vector(&self, i: usize) -> Vector<F> {
        let mut v = self.zero_vector();
        v[i] = F::one();
        v
    }

    pub fn basis_index(&self, label: &str) -> Option<usize> {
        self.basis.iter().position(|(l, _)| l == label)
    }

    /// Product of two coefficient vectors via the structure constants.
    pub fn mul(&self, a: &Vector<F>, b: &Vector<F>) -> Vector<F> {
        let mut out = self.zero_vector();
        for (i, ai) in a.iter().enumerate() {
            if ai.is_zero() {
                continue;
            }
            for (j, bj) in b.iter().enumerate() {
                if bj.is_zero() {
                    continue;
                }
                let c = ai.mul(bj);
                for (k, ck) in self.mul[i][j].iter().enumerate() {
                    if !ck.is_zero() {
                        out[k] = out[k].add(&c.mul(ck));
                    }
                }
            }
        }
        out
    }

    /// Product of two basis elements.
    pub fn mul_basis(&self, i: usize, j: usize) -> &Vector<F> {
        &self.mul[i][j]
    }

    /// The trace functional applied to a vector.
    pub fn integrate(&self, a: &Vector<F>) -> F {
        dot(&self.trace, a)
    }

    /// The pairing `<a,b> = tr(ab)`.
    pub fn pair(&self, a: &Vector<F>, b: &Vector<F>) -> F {
        self.integrate(&self.mul(a, b))
    }

    /// `e^n` as a vector; `e^0` is the unit.
    pub fn euler_power(&self, n: u32) -> Vector<F> {
        let mut out = self.unit.clone();
        for _ in 0..n {
            out = self.mul(&out, &self.euler);
        }
        out
    }

    /// Comultiplication of a vector: `Delta(x) = sum_ij (x b_i) g^ij (x) b_j`,
    /// returned as a sparse list of (left basis, right basis, coefficient).
    pub fn comul(&self, x: &Vector<F>) -> Vec<(usize, usize, F)> {
        let mut out = Vec::new();
        for i in 0..self.dim() {
            let xbi = self.mul(x, &self.basis_vector(i));
            for j in 0..self.dim() {
                if self.metric_inv[i][j].is_zero() {
                    continue;
                }
                for (l, c) in xbi.iter().enumerate() {
                    if c.is_zero() {
                        continue;
                    }
                    out.push((l, j, c.mul(&self.metric_inv[i][j])));
                }
            }
        }
        merge_sparse(out)
    }

    pub fn is_commutative(&self) -> bool {
        let n = self.dim();
        for i in 0..n {
            for j in (i + 1)..n {
                if self.mul[i][j] != self.mul[j][i] {
                    return false;
                }
            }
        }
        true
    }
}

fn dot<F: Field>(a: &Vector<F>, b: &Vector<F>) -> F {
    let mut out = F::zero();
    for (x, y) in a.iter().zip(b) {
        out = out.add(&x.mul(y));
    }
    out
}

fn merge_sparse<F: Field>(terms: Vec<(usize, usize, F)>) -> Vec<(usize, usize, F)> {
    let mut map: BTreeMap<(usize, usize), F> = BTreeMap::new();
    for (i, j, c) in terms {
        let e = map.entry((i, j)).or_insert_with(F::zero);
        *e = e.add(&c);
    }
    map.into_iter()
        .filter(|(_, c)| !c.is_zero())
        .map(|((i, j), c)| (i, j, c))
        .collect()
}

/// Invert a square matrix by Gaussian elimination. `None` when singular.
pub fn invert<F: Field>(m: &Matrix<F>) -> Option<Matrix<F>> {
    let n = m.len();
    let mut a = m.clone();
    let mut inv: Matrix<F> = (0..n)
        .map(|i| (0..n).map(|j| if i == j { F::one() } else { F::zero() }).collect())
        .collect();
    for col in 0..n {
        let pivot = (col..n).find(|&r| !a[r][col].is_zero())?;
        a.swap(col, pivot);
        inv.swap(col, pivot);
        let p = a[col][col].inv()?;
        for j in 0..n {
            a[col][j] = a[col][j].mul(&p);
            inv[col][j] = inv[col][j].mul(&p);
        }
        for r in 0..n {
            if r == col || a[r][col].is_zero() {
                continue;
            }
            let factor = a[r][col].clone();
            for j in 0..n {
                a[r][j] = a[r][j].sub(&factor.mul(&a[col][j]));
                inv[r][j] = inv[r][j].sub(&factor.mul(&inv[col][j]));
            }
        }
    }
    Some(inv)
}

/// Validate a raw algebra description and derive metric, Casimir data and the
/// Euler element.
pub fn build_frobenius<F: Field>(spec: &AlgebraSpec<F>) -> Result<FrobeniusAlgebra<F>> {
    let n = spec.basis.len();
    if n == 0 || spec.unit.len() != n || spec.trace.len() != n {
        return Err(Error::MalformedGraph {
            detail: format!("algebra '{}' has inconsistent dimensions", spec.name),
        });
    }
    for (i, (_, d)) in spec.basis.iter().enumerate() {
        if d % 2 != 0 {
            return Err(Error::OddDegreeBasis { algebra: spec.name.clone(), basis: i });
        }
    }

    let mut mul: Vec<Vec<Vector<F>>> = vec![vec![vec![F::zero(); n]; n]; n];
    for (i, j, k, c) in &spec.mul {
        if *i >= n || *j >= n || *k >= n {
            return Err(Error::IndexOutOfRange { index: (*i).max(*j).max(*k), len: n });
        }
        mul[*i][*j][*k] = mul[*i][*j][*k].add(c);
    }

    // Grading: product of basis elements lives in the degree-sum component.
    for i in 0..n {
        for j in 0..n {
            let d = spec.basis[i].1 + spec.basis[j].1;
            for (k, c) in mul[i][j].iter().enumerate() {
                if !c.is_zero() && spec.basis[k].1 != d {
                    return Err(Error::NotAssociative {
                        algebra: spec.name.clone(),
                        triple: (i, j, k),
                    });
                }
            }
        }
    }

    let alg = FrobeniusAlgebra {
        name: spec.name.clone(),
        basis: spec.basis.clone(),
        unit: spec.unit.clone(),
        trace: spec.trace.clone(),
        mul,
        metric: Vec::new(),
        metric_inv: Vec::new(),
        euler: Vec::new(),
        unit_index: None,
    };

    // Unitality on every basis element.
    for i in 0..n {
        let b = alg.basis_vector(i);
        if alg.mul(&alg.unit, &b) != b || alg.mul(&b, &alg.unit) != b {
            return Err(Error::NotUnital { algebra: spec.name.clone(), basis: i });
        }
    }

    // Associativity on all basis triples.
    for i in 0..n {
        for j in 0..n {
            for k in 0..n {
                let bi = alg.basis_vector(i);
                let bj = alg.basis_vector(j);
                let bk = alg.basis_vector(k);
                let left = alg.mul(&alg.mul(&bi, &bj), &bk);
                let right = alg.mul(&bi, &alg.mul(&bj, &bk));
                if left != right {
                    return Err(Error::NotAssociative {
                        algebra: spec.name.clone(),
                        triple: (i, j, k),
                    });
                }
            }
        }
    }

    // Metric, symmetry, invariance, nondegeneracy.
    let mut metric: Matrix<F> = vec![vec![F::zero(); n]; n];
    for i in 0..n {
        for j in 0..n {
            metric[i][j] = alg.integrate(alg.mul_basis(i, j));
        }
    }
    for i in 0..n {
        for j in 0..n {
            if metric[i][j] != metric[j][i] {
                return Err(Error::PairingNotInvariant {
                    algebra: spec.name.clone(),
                    triple: (i, j, j),
                });
            }
        }
    }
    for i in 0..n {
        for j in 0..n {
            for k in 0..n {
                // <b_i b_j, b_k> = <b_i, b_j b_k>
                let lhs = alg.integrate(&alg.mul(alg.mul_basis(i, j), &alg.basis_vector(k)));
                let rhs = alg.integrate(&alg.mul(&alg.basis_vector(i), alg.mul_basis(j, k)));
                if lhs != rhs {
                    return Err(Error::PairingNotInvariant {
                        algebra: spec.name.clone(),
                        triple: (i, j, k),
                    });
                }
            }
        }
    }
    let metric_inv =
        invert(&metric).ok_or(Error::PairingDegenerate { algebra: spec.name.clone() })?;

    // Euler element e = sum_ij b_i g^ij b_j; it commutes with everything.
    let mut euler = vec![F::zero(); n];
    for i in 0..n {
        for j in 0..n {
            if metric_inv[i][j].is_zero() {
                continue;
            }
            for (k, c) in alg.mul_basis(i, j).iter().enumerate() {
                euler[k] = euler[k].add(&metric_inv[i][j].mul(c));
            }
        }
    }

    let unit_index = (0..n).find(|&i| {
        spec.unit.iter().enumerate().all(|(j, c)| if j == i { c.is_one() } else { c.is_zero() })
    });

    let alg = FrobeniusAlgebra { metric, metric_inv, euler, unit_index, ..alg };

    // Euler element centrality, a consequence of the axioms; checked to guard
    // the arithmetic.
    for i in 0..n {
        let b = alg.basis_vector(i);
        debug_assert_eq!(alg.mul(&b, &alg.euler), alg.mul(&alg.euler, &b));
    }

    Ok(alg)
}

/// A degree-preserving unital algebra map between two validated Frobenius
/// algebras, stored as a matrix on the bases: column `j` holds the image of
/// source basis `j` in target coordinates.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct AlgebraMap<F: Field> {
    pub name: String,
    pub matrix: Matrix<F>,
    pub source_dim: usize,
    pub target_dim: usize,
}

impl<F: Field> AlgebraMap<F> {
    pub fn apply(&self, v: &Vector<F>) -> Vector<F> {
        let mut out = vec![F::zero(); self.target_dim];
        for (j, c) in v.iter().enumerate() {
            if c.is_zero() {
                continue;
            }
            for i in 0..self.target_dim {
                out[i] = out[i].add(&c.mul(&self.matrix[i][j]));
            }
        }
        out
    }
}

/// Validate an algebra map given by `matrix` (rows indexed by target basis).
pub fn build_algebra_map<F: Field>(
    name: &str,
    source: &FrobeniusAlgebra<F>,
    target: &FrobeniusAlgebra<F>,
    matrix: Matrix<F>,
) -> Result<AlgebraMap<F>> {
    if matrix.len() != target.dim() || matrix.iter().any(|row| row.len() != source.dim()) {
        return Err(Error::MalformedGraph {
            detail: format!("map '{name}' has wrong matrix shape"),
        });
    }
    let map = AlgebraMap {
        name: String::from(name),
        matrix,
        source_dim: source.dim(),
        target_dim: target.dim(),
    };
    if map.apply(&source.unit) != target.unit {
        return Err(Error::NotAlgebraMap { map: String::from(name), pair: (0, 0) });
    }
    for i in 0..source.dim() {
        for j in 0..source.dim() {
            let lhs = map.apply(source.mul_basis(i, j));
            let rhs = target.mul(&map.apply(&source.basis_vector(i)), &map.apply(&source.basis_vector(j)));
            if lhs != rhs {
                return Err(Error::NotAlgebraMap { map: String::from(name), pair: (i, j) });
            }
        }
    }
    for j in 0..source.dim() {
        let d = source.basis[j].1;
        for (i, c) in map.apply(&source.basis_vector(j)).iter().enumerate() {
            if !c.is_zero() && target.basis[i].1 != d {
                return Err(Error::NotDegreePreserving { map: String::from(name), basis: j });
            }
        }
    }
    Ok(map)
}

/// The adjoint of `r` with respect to the trace pairings:
/// `tr_src(adj(b) a) = tr_tgt(b r(a))` for all basis pairs. Uniqueness
/// follows from nondegeneracy; computed by solving against the source metric.
pub fn adjoint<F: Field>(
    r: &AlgebraMap<F>,
    source: &FrobeniusAlgebra<F>,
    target: &FrobeniusAlgebra<F>,
) -> Matrix<F> {
    // adj(b_t) = sum_k c_k b^src_k with sum_k c_k g^src_kl = tr_tgt(b_t r(b^src_l)):
    // c = g_inv^T rhs, and the metric is symmetric.
    let mut out: Matrix<F> = vec![vec![F::zero(); target.dim()]; source.dim()];
    for t in 0..target.dim() {
        let bt = target.basis_vector(t);
        let mut rhs = vec![F::zero(); source.dim()];
        for l in 0..source.dim() {
            let r_bl = r.apply(&source.basis_vector(l));
            rhs[l] = target.integrate(&target.mul(&bt, &r_bl));
        }
        for k in 0..source.dim() {
            let mut c = F::zero();
            for l in 0..source.dim() {
                c = c.add(&source.metric_inv[k][l].mul(&rhs[l]));
            }
            out[k][t] = c;
        }
    }
    out
}

/// One brane's worth of data inside a system: the algebra, the restriction
/// map from the closed algebra, its adjoint, and the derived elements.
#[derive(Clone, Debug)]
pub struct Brane<F: Field> {
    pub algebra: FrobeniusAlgebra<F>,
    pub restriction: AlgebraMap<F>,
    /// Adjoint of the restriction, as a map matrix target -> closed.
    pub adjoint: AlgebraMap<F>,
    /// `e_perp = r(adj(1))`, in brane coordinates.
    pub e_perp: Vector<F>,
}

/// A basic brane-labelled Frobenius system: one closed algebra, one algebra
/// per basic label with a restriction map. Algebras for label sets of size
/// two or more are zero and represented by absence.
#[derive(Clone, Debug)]
pub struct BraneSystem<F: Field> {
    pub closed: FrobeniusAlgebra<F>,
    pub branes: BTreeMap<String, Brane<F>>,
}

impl<F: Field> BraneSystem<F> {
    pub fn new(
        closed: FrobeniusAlgebra<F>,
        branes: Vec<(String, FrobeniusAlgebra<F>, Matrix<F>)>,
    ) -> Result<Self> {
        let mut map = BTreeMap::new();
        for (label, algebra, matrix) in branes {
            let restriction =
                build_algebra_map(&format!("r_{label}"), &closed, &algebra, matrix)?;
            let adj_matrix = adjoint(&restriction, &closed, &algebra);
            let adjoint = AlgebraMap {
                name: format!("adj_{label}"),
                matrix: adj_matrix,
                source_dim: algebra.dim(),
                target_dim: closed.dim(),
            };
            let e_perp = restriction.apply(&adjoint.apply(&algebra.unit));
            map.insert(label, Brane { algebra, restriction, adjoint, e_perp });
        }
        Ok(BraneSystem { closed, branes: map })
    }

    pub fn brane(&self, label: &str) -> Result<&Brane<F>> {
        self.branes.get(label).ok_or_else(|| Error::UnknownBrane { label: label.into() })
    }

    /// `adj_b(x)` pushed into the closed algebra; for the empty label this is
    /// the identity.
    pub fn push_to_closed(&self, label: Option<&str>, v: &Vector<F>) -> Result<Vector<F>> {
        match label {
            None => Ok(v.clone()),
            Some(l) => Ok(self.brane(l)?.adjoint.apply(v)),
        }
    }
}

/// Findings of the condition checks on a brane system.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ConditionReport {
    /// (C): the closed algebra is commutative.
    pub commutative_c: bool,
    /// (E): Euler compatibility, with violating (label, basis pair).
    pub euler_e: bool,
    pub euler_violations: Vec<(String, usize, usize)>,
    /// (I1): `r(adj(a)) = a e_perp`, with violations.
    pub self_intersection_i1: bool,
    pub i1_violations: Vec<(String, usize)>,
    /// (I2): `e_b e_perp = r(e)`, with violations.
    pub self_intersection_i2: bool,
    pub i2_violations: Vec<String>,
    /// The projection formula `adj(r(a) b) = a adj(b)`, a theorem; false
    /// indicates corrupted data.
    pub projection_formula: bool,
}

/// Evaluate conditions (C), (E), (I1), (I2) and the projection formula on all
/// basis tuples.
///
/// Panics if (I1) and (I2) hold but (E) fails: that contradicts an identity
/// provable from the axioms, so it can only mean the arithmetic is broken.
pub fn check_conditions<F: Field>(sys: &BraneSystem<F>) -> ConditionReport {
    let commutative_c = sys.closed.is_commutative();

    let mut euler_violations = Vec::new();
    let mut i1_violations = Vec::new();
    let mut i2_violations = Vec::new();

    for (label, brane) in &sys.branes {
        let alg = &brane.algebra;
        let n = alg.dim();

        // (I1) r(adj(a)) = a e_perp on basis elements.
        for a in 0..n {
            let lhs = brane.restriction.apply(&brane.adjoint.apply(&alg.basis_vector(a)));
            let rhs = alg.mul(&alg.basis_vector(a), &brane.e_perp);
            if lhs != rhs {
                i1_violations.push((label.clone(), a));
            }
        }

        // (I2) e_b e_perp = r(e).
        let lhs = alg.mul(&alg.euler, &brane.e_perp);
        let rhs = brane.restriction.apply(&sys.closed.euler);
        if lhs != rhs {
            i2_violations.push(label.clone());
        }

        // (E) sum_ij adj(a b_i) g^ij adj(b_j a') = e adj(a a') on basis pairs.
        for a in 0..n {
            for a2 in 0..n {
                let mut lhs = sys.closed.zero_vector();
                for i in 0..n {
                    let abi = alg.mul(&alg.basis_vector(a), &alg.basis_vector(i));
                    let adj_abi = brane.adjoint.apply(&abi);
                    for j in 0..n {
                        if alg.metric_inv[i][j].is_zero() {
                            continue;
                        }
                        let bja = alg.mul(&alg.basis_vector(j), &alg.basis_vector(a2));
                        let adj_bja = brane.adjoint.apply(&bja);
                        let prod = sys.closed.mul(&adj_abi, &adj_bja);
                        for (k, c) in prod.iter().enumerate() {
                            lhs[k] = lhs[k].add(&alg.metric_inv[i][j].mul(c));
                        }
                    }
                }
                let aa2 = alg.mul(&alg.basis_vector(a), &alg.basis_vector(a2));
                let rhs = sys.closed.mul(&sys.closed.euler, &brane.adjoint.apply(&aa2));
                if lhs != rhs {
                    euler_violations.push((label.clone(), a, a2));
                }
            }
        }
    }

    let projection_formula = projection_formula_check(sys);

    let report = ConditionReport {
        commutative_c,
        euler_e: euler_violations.is_empty(),
        euler_violations,
        self_intersection_i1: i1_violations.is_empty(),
        i1_violations,
        self_intersection_i2: i2_violations.is_empty(),
        i2_violations,
        projection_formula,
    };

    // (I) implies (E); a violation means broken arithmetic, not broken input.
    if report.self_intersection_i1 && report.self_intersection_i2 {
        assert!(
            report.euler_e,
            "self-intersection holds but Euler compatibility fails: internal error"
        );
    }
    report
}

/// The projection formula `adj(r(a) b) = a adj(b)`, evaluated on all basis
/// pairs for every brane. True for every valid system; serves as an internal
/// consistency test of the adjoint computation.
pub fn projection_formula_check<F: Field>(sys: &BraneSystem<F>) -> bool {
    for brane in sys.branes.values() {
        let alg = &brane.algebra;
        for a in 0..sys.closed.dim() {
            let ra = brane.restriction.apply(&sys.closed.basis_vector(a));
            for b in 0..alg.dim() {
                let lhs = brane.adjoint.apply(&alg.mul(&ra, &alg.basis_vector(b)));
                let rhs = sys
                    .closed
                    .mul(&sys.closed.basis_vector(a), &brane.adjoint.apply(&alg.basis_vector(b)));
                if lhs != rhs {
                    return false;
                }
            }
        }
    }
    true
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::Rational;

    fn q(n: i64) -> Rational {
        Rational::from_integer(n)
    }

    pub fn sphere() -> FrobeniusAlgebra<Rational> {
        // basis 1 (deg 0), x (deg 2); x^2 = 0; tr(1) = 0, tr(x) = 1
        build_frobenius(&AlgebraSpec {
            name: "s2".into(),
            basis: vec![("1".into(), 0), ("x".into(), 2)],
            unit: vec![q(1), q(0)],
            trace: vec![q(0), q(1)],
            mul: vec![(0, 0, 0, q(1)), (0, 1, 1, q(1)), (1, 0, 1, q(1))],
        })
        .unwrap()
    }

    pub fn point() -> FrobeniusAlgebra<Rational> {
        build_frobenius(&AlgebraSpec {
            name: "pt".into(),
            basis: vec![("1".into(), 0)],
            unit: vec![q(1)],
            trace: vec![q(1)],
            mul: vec![(0, 0, 0, q(1))],
        })
        .unwrap()
    }

    pub fn proj_plane() -> FrobeniusAlgebra<Rational> {
        // basis 1, h, h^2; h^3 = 0; tr(h^2) = 1
        build_frobenius(&AlgebraSpec {
            name: "cp2".into(),
            basis: vec![("1".into(), 0), ("h".into(), 2), ("h2".into(), 4)],
            unit: vec![q(1), q(0), q(0)],
            trace: vec![q(0), q(0), q(1)],
            mul: vec![
                (0, 0, 0, q(1)),
                (0, 1, 1, q(1)),
                (1, 0, 1, q(1)),
                (0, 2, 2, q(1)),
                (2, 0, 2, q(1)),
                (1, 1, 2, q(1)),
            ],
        })
        .unwrap()
    }

    fn line_in_plane() -> FrobeniusAlgebra<Rational> {
        // sphere relabelled (1, t)
        build_frobenius(&AlgebraSpec {
            name: "cp1".into(),
            basis: vec![("1".into(), 0), ("t".into(), 2)],
            unit: vec![q(1), q(0)],
            trace: vec![q(0), q(1)],
            mul: vec![(0, 0, 0, q(1)), (0, 1, 1, q(1)), (1, 0, 1, q(1))],
        })
        .unwrap()
    }

    // Independent oracle for the Euler element: direct expansion of
    // sum_ij b_i g^ij b_j from the structure constants and a hand-rolled
    // cofactor inverse.
    fn euler_oracle(alg: &FrobeniusAlgebra<Rational>) -> Vec<Rational> {
        let n = alg.dim();
        let ginv = invert(&alg.metric).unwrap();
        let mut e = vec![q(0); n];
        for i in 0..n {
            for j in 0..n {
                let prod = alg.mul(&alg.basis_vector(i), &alg.basis_vector(j));
                for k in 0..n {
                    e[k] = e[k].add(&ginv[i][j].mul(&prod[k]));
                }
            }
        }
        e
    }

    #[test]
    fn sphere_euler_element_is_twice_top_class() {
        let s2 = sphere();
        assert_eq!(s2.euler, vec![q(0), q(2)]);
        assert_eq!(s2.euler, euler_oracle(&s2));
        assert_eq!(s2.metric, vec![vec![q(0), q(1)], vec![q(1), q(0)]]);
    }

    #[test]
    fn point_is_trivial() {
        let k = point();
        assert_eq!(k.euler, vec![q(1)]);
        assert_eq!(k.metric_inv, vec![vec![q(1)]]);
    }

    #[test]
    fn plane_euler_element_is_three_times_top_class() {
        let cp2 = proj_plane();
        assert_eq!(cp2.euler, vec![q(0), q(0), q(3)]);
        assert_eq!(cp2.euler, euler_oracle(&cp2));
    }

    #[test]
    fn zero_trace_is_degenerate() {
        let err = build_frobenius(&AlgebraSpec {
            name: "bad".into(),
            basis: vec![("1".into(), 0)],
            unit: vec![q(1)],
            trace: vec![q(0)],
            mul: vec![(0, 0, 0, q(1))],
        })
        .unwrap_err();
        assert!(matches!(err, Error::PairingDegenerate { .. }));
    }

    #[test]
    fn odd_degree_is_rejected() {
        let err = build_frobenius(&AlgebraSpec {
            name: "odd".into(),
            basis: vec![("1".into(), 0), ("y".into(), 1)],
            unit: vec![q(1), q(0)],
            trace: vec![q(0), q(1)],
            mul: vec![(0, 0, 0, q(1)), (0, 1, 1, q(1)), (1, 0, 1, q(1))],
        })
        .unwrap_err();
        assert!(matches!(err, Error::OddDegreeBasis { .. }));
    }

    #[test]
    fn metric_inverse_is_exact() {
        for alg in [sphere(), proj_plane(), point()] {
            let n = alg.dim();
            for i in 0..n {
                for k in 0..n {
                    let mut s = q(0);
                    for j in 0..n {
                        s = s.add(&alg.metric_inv[i][j].mul(&alg.metric[j][k]));
                    }
                    assert_eq!(s, if i == k { q(1) } else { q(0) });
                }
            }
        }
    }

    pub fn pt_system() -> BraneSystem<Rational> {
        BraneSystem::new(sphere(), vec![("b".into(), point(), vec![vec![q(1), q(0)]])]).unwrap()
    }

    pub fn cp2cp1_system() -> BraneSystem<Rational> {
        // 1 -> 1, h -> t, h^2 -> 0
        BraneSystem::new(
            proj_plane(),
            vec![("b".into(), line_in_plane(), vec![vec![q(1), q(0), q(0)], vec![q(0), q(1), q(0)]])],
        )
        .unwrap()
    }

    #[test]
    fn point_adjoint_sends_unit_to_top_class() {
        let sys = pt_system();
        let b = sys.brane("b").unwrap();
        // adj(1) = x, solving tr_src(adj(1) a) = tr_tgt(r(a))
        assert_eq!(b.adjoint.apply(&b.algebra.unit), vec![q(0), q(1)]);
        assert_eq!(b.e_perp, vec![q(0)]);
    }

    #[test]
    fn identity_map_is_self_adjoint() {
        let s2 = sphere();
        let id = build_algebra_map(
            "id",
            &s2,
            &s2,
            vec![vec![q(1), q(0)], vec![q(0), q(1)]],
        )
        .unwrap();
        let adj = adjoint(&id, &s2, &s2);
        assert_eq!(adj, vec![vec![q(1), q(0)], vec![q(0), q(1)]]);
    }

    #[test]
    fn plane_line_adjoint_matches_normal_bundle() {
        let sys = cp2cp1_system();
        let b = sys.brane("b").unwrap();
        // adj(1) = h, adj(t) = h^2, e_perp = t
        assert_eq!(b.adjoint.apply(&vec![q(1), q(0)]), vec![q(0), q(1), q(0)]);
        assert_eq!(b.adjoint.apply(&vec![q(0), q(1)]), vec![q(0), q(0), q(1)]);
        assert_eq!(b.e_perp, vec![q(0), q(1)]);
    }

    #[test]
    fn conditions_hold_on_geometric_systems() {
        for sys in [pt_system(), cp2cp1_system()] {
            let rep = check_conditions(&sys);
            assert!(rep.commutative_c);
            assert!(rep.self_intersection_i1, "{:?}", rep.i1_violations);
            assert!(rep.self_intersection_i2, "{:?}", rep.i2_violations);
            assert!(rep.euler_e, "{:?}", rep.euler_violations);
            assert!(rep.projection_formula);
        }
    }

    pub fn dual_numbers_system() -> BraneSystem<Rational> {
        // closed = point, brane = Q[y]/y^2 with tr(y) = 1, r(1) = 1
        let dual = build_frobenius(&AlgebraSpec {
            name: "dual".into(),
            basis: vec![("1".into(), 0), ("y".into(), 0)],
            unit: vec![q(1), q(0)],
            trace: vec![q(0), q(1)],
            mul: vec![(0, 0, 0, q(1)), (0, 1, 1, q(1)), (1, 0, 1, q(1))],
        })
        .unwrap();
        BraneSystem::new(point(), vec![("b".into(), dual, vec![vec![q(1)], vec![q(0)]])]).unwrap()
    }

    #[test]
    fn self_intersection_is_strictly_stronger_than_euler() {
        let sys = dual_numbers_system();
        let rep = check_conditions(&sys);
        assert!(!rep.self_intersection_i1);
        assert!(rep.euler_e, "{:?}", rep.euler_violations);
        assert!(rep.projection_formula);
    }

    #[test]
    fn corrupted_adjoint_fails_projection_formula() {
        let mut sys = pt_system();
        let brane = sys.branes.get_mut("b").unwrap();
        brane.adjoint.matrix[0][0] = q(5);
        assert!(!projection_formula_check(&sys));
    }

    #[test]
    fn perturbing_adjoint_breaks_defining_identity() {
        let sys = pt_system();
        let b = sys.brane("b").unwrap();
        let src = &sys.closed;
        let tgt = &b.algebra;
        for r in 0..src.dim() {
            for c in 0..tgt.dim() {
                let mut m = b.adjoint.matrix.clone();
                m[r][c] = m[r][c].add(&q(1));
                let perturbed = AlgebraMap { matrix: m, ..b.adjoint.clone() };
                let mut violated = false;
                'outer: for t in 0..tgt.dim() {
                    for s in 0..src.dim() {
                        let lhs = src.integrate(
                            &src.mul(&perturbed.apply(&tgt.basis_vector(t)), &src.basis_vector(s)),
                        );
                        let rhs = tgt.integrate(&tgt.mul(
                            &tgt.basis_vector(t),
                            &b.restriction.apply(&src.basis_vector(s)),
                        ));
                        if lhs != rhs {
                            violated = true;
                            break 'outer;
                        }
                    }
                }
                assert!(violated, "perturbation at ({r},{c}) went undetected");
            }
        }
    }
}
